//! `tship`: solve approximate transshipment and shortest-path instances,
//! inspect spanners and exact optima, replay solves under communication
//! cost models, and run the acceptance batteries.
//!
//! Exit codes: 0 on success, 2 on input errors (bad flags, malformed
//! files), 3 on numeric or convergence failures (failed batteries
//! included). All output for one invocation is byte-deterministic given
//! the same arguments and files; battery timings go to stderr.

#![forbid(unsafe_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde_json::json;

use tship_cli::battery::{self, CriterionOutcome};
use tship_core::descent::{solve, SolveOptions, SolveResult};
use tship_core::error::{Error, Result};
use tship_core::generate::{generate_instance, DemandKind, GraphSpec, Kind};
use tship_core::graph::{format_instance, load_instance, ArcSystem, Instance};
use tship_core::models::{simulate_clique, simulate_stream, StreamConfig};
use tship_core::oracle::{exact_transshipment, DirectionOracle};
use tship_core::spanner::{build_spanner, default_k};
use tship_core::sssp::single_source_shortest_path;

#[derive(Parser)]
#[command(
    name = "tship",
    version,
    about = "Approximate shortest transshipment and single-source shortest paths"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the transshipment instance in a file.
    Solve(SolveArgs),
    /// Approximate single-source shortest-path distances.
    Sssp(SsspArgs),
    /// Build a spanner and report its size and guarantees.
    Spanner(SpannerArgs),
    /// Solve the instance exactly and print the optimum.
    Oracle(OracleArgs),
    /// Replay a solve under a computation cost model.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Run acceptance batteries and report per-criterion verdicts.
    Battery(BatteryArgs),
    /// Write a deterministic instance file.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct OracleFlags {
    /// Spanner levels for the approximate oracle (default: ceil(log2 n)).
    #[arg(long, conflicts_with = "oracle")]
    k: Option<usize>,
    /// Oracle choice; `exact` solves every subproblem exactly.
    #[arg(long)]
    oracle: Option<String>,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file.
    file: PathBuf,
    /// Approximation target in (0, 1/2].
    #[arg(long)]
    epsilon: f64,
    #[command(flatten)]
    oracle: OracleFlags,
    /// Seed for tree sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also sample a flow-carrying tree.
    #[arg(long)]
    tree: bool,
    /// Write the iteration trace as CSV to this path.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
    /// Emit machine-readable JSON instead of the summary table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SsspArgs {
    /// Instance file; its demand section is ignored.
    file: PathBuf,
    /// Approximation target in (0, 1/2].
    #[arg(long)]
    epsilon: f64,
    /// Source node, numbered as in the instance file.
    #[arg(long, default_value_t = 1)]
    source: usize,
    #[command(flatten)]
    oracle: OracleFlags,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SpannerArgs {
    /// Instance file.
    file: PathBuf,
    /// Number of clustering levels (default: ceil(log2 n)).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Instance file.
    file: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum SimCommand {
    /// Broadcast-clique model: count rounds and words per round.
    Clique(SimArgs),
    /// Multipass-streaming model: count passes and working-memory words.
    Stream(StreamArgs),
}

#[derive(Args)]
struct SimArgs {
    /// Instance file.
    file: PathBuf,
    /// Approximation target in (0, 1/2].
    #[arg(long)]
    epsilon: f64,
    /// Spanner levels for the oracle (default: ceil(log2 n)).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct StreamArgs {
    #[command(flatten)]
    base: SimArgs,
    /// Seed for the adversarial edge delivery order.
    #[arg(long, default_value_t = 0)]
    shuffle_seed: u64,
    /// Evaluate potential and gradient in one pass per iteration.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    fuse_passes: bool,
}

#[derive(Args)]
struct BatteryArgs {
    /// Suite to run: duality, sssp, gradient, oracle, spanner, models,
    /// tree, start, or all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenerateArgs {
    /// Graph family: path, star, grid, or random-connected.
    #[arg(long)]
    kind: String,
    /// Number of nodes.
    #[arg(long)]
    n: usize,
    /// Inclusive integer cost range, as `LO..HI`.
    #[arg(long, default_value = "1..10")]
    weight_range: String,
    /// Cap on per-edge cost asymmetry; 1 keeps costs symmetric.
    #[arg(long, default_value_t = 1.0)]
    max_ratio: f64,
    /// Extra non-tree edges for random-connected graphs (default: n/2).
    #[arg(long)]
    extra_edges: Option<usize>,
    /// Demand pattern: random, source-sink, single-source, or zero.
    #[arg(long, default_value = "random")]
    demand: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write to this path instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Solve(args) => cmd_solve(args)?,
        Command::Sssp(args) => cmd_sssp(args)?,
        Command::Spanner(args) => cmd_spanner(args)?,
        Command::Oracle(args) => cmd_oracle(args)?,
        Command::Sim(SimCommand::Clique(args)) => cmd_sim_clique(args)?,
        Command::Sim(SimCommand::Stream(args)) => cmd_sim_stream(args)?,
        Command::Battery(args) => return cmd_battery(args),
        Command::Generate(args) => cmd_generate(args)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 && eps <= 0.5 {
        Ok(())
    } else {
        Err(Error::input(format!("epsilon must lie in (0, 1/2], got {eps}")))
    }
}

/// Iteration cap override for tests; unset means the analytic cap.
fn env_max_iterations() -> Result<Option<usize>> {
    match std::env::var("TSHIP_MAX_ITERS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::input(format!("TSHIP_MAX_ITERS must be a positive integer, got `{s}`"))),
        Err(_) => Ok(None),
    }
}

struct OracleChoice {
    oracle: DirectionOracle,
    description: String,
    kind: &'static str,
    k: Option<usize>,
}

fn pick_oracle(g: &ArcSystem, flags: &OracleFlags) -> Result<OracleChoice> {
    match flags.oracle.as_deref() {
        Some("exact") => Ok(OracleChoice {
            oracle: DirectionOracle::exact(g)?,
            description: "exact (alpha 1)".into(),
            kind: "exact",
            k: None,
        }),
        Some(other) => Err(Error::input(format!(
            "unknown oracle `{other}`; expected `exact`, or pick a spanner level with --k"
        ))),
        None => {
            let k = flags.k.unwrap_or_else(|| default_k(g.n()));
            let oracle = DirectionOracle::with_spanner(g, k)?;
            let description = format!("spanner k={k} (alpha {})", oracle.alpha);
            Ok(OracleChoice { oracle, description, kind: "spanner", k: Some(k) })
        }
    }
}

fn oracle_json(choice: &OracleChoice) -> serde_json::Value {
    json!({
        "kind": choice.kind,
        "k": choice.k,
        "alpha": choice.oracle.alpha,
    })
}

fn write_trace_csv(path: &Path, result: &SolveResult) -> Result<()> {
    let mut text = String::from("iteration,beta,potential,delta,dual_value,rescales\n");
    for r in &result.trace {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            r.index, r.beta, r.phi, r.delta, r.dual_value, r.rescales
        );
    }
    std::fs::write(path, text)
        .map_err(|e| Error::input(format!("cannot write {}: {e}", path.display())))
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    check_epsilon(args.epsilon)?;
    let Instance { graph: g, demand: b } = load_instance(&args.file, args.epsilon)?;
    let choice = pick_oracle(&g, &args.oracle)?;
    let mut opts = SolveOptions::new(args.epsilon);
    opts.want_tree = args.tree;
    opts.tree_seed = args.seed;
    opts.max_iterations = env_max_iterations()?;
    let res = solve(&g, &b, &choice.oracle, &opts)?;
    if let Some(path) = &args.trace_csv {
        write_trace_csv(path, &res)?;
    }

    if args.json {
        let tree = res.tree.as_ref().map(|t| {
            json!({
                "edges": t.edges,
                "attempts": t.attempts,
                "cost": g.flow_cost(&t.flow),
            })
        });
        let value = json!({
            "schema": "tship/1",
            "command": "solve",
            "instance": args.file.display().to_string(),
            "n": g.n(),
            "m": g.m(),
            "epsilon": args.epsilon,
            "oracle": oracle_json(&choice),
            "value_dual": res.value_dual,
            "value_primal": res.value_primal,
            "iterations": res.trace.len(),
            "rescales": res.rescales,
            "beta_final": res.beta_final,
            "beta_evals": res.beta_evals,
            "y": res.y,
            "flow_net": res.x.as_ref().map(|x| x.net_vec()),
            "tree": tree,
        });
        println!("{value}");
    } else {
        let mut out = String::new();
        let _ = writeln!(out, "instance        {}", args.file.display());
        let _ = writeln!(out, "nodes           {}", g.n());
        let _ = writeln!(out, "edges           {}", g.m());
        let _ = writeln!(out, "epsilon         {}", args.epsilon);
        let _ = writeln!(out, "oracle          {}", choice.description);
        let _ = writeln!(out, "dual value      {}", res.value_dual);
        if let Some(p) = res.value_primal {
            let _ = writeln!(out, "primal value    {p}");
            let _ = writeln!(out, "primal/dual     {}", p / res.value_dual);
        }
        let _ = writeln!(out, "iterations      {}", res.trace.len());
        let _ = writeln!(out, "rescales        {}", res.rescales);
        let _ = writeln!(out, "beta final      {}", res.beta_final);
        if let Some(t) = &res.tree {
            let _ = writeln!(out, "tree attempts   {}", t.attempts);
            let _ = writeln!(out, "tree cost       {}", g.flow_cost(&t.flow));
        }
        print!("{out}");
    }
    Ok(())
}

fn cmd_sssp(args: SsspArgs) -> Result<()> {
    check_epsilon(args.epsilon)?;
    let Instance { graph: g, .. } = load_instance(&args.file, args.epsilon)?;
    if args.source == 0 || args.source > g.n() {
        return Err(Error::input(format!(
            "source {} out of range; the instance has nodes 1..={}",
            args.source,
            g.n()
        )));
    }
    let source = args.source - 1;
    let choice = pick_oracle(&g, &args.oracle)?;
    let out = single_source_shortest_path(&g, source, args.epsilon, &choice.oracle)?;

    if args.json {
        let rounds: Vec<_> = out
            .rounds
            .iter()
            .map(|r| {
                json!({
                    "index": r.index,
                    "fixed": r.fixed.iter().map(|v| v + 1).collect::<Vec<_>>(),
                    "remaining": r.remaining,
                    "inner_iterations": r.inner_iterations,
                })
            })
            .collect();
        let value = json!({
            "schema": "tship/1",
            "command": "sssp",
            "instance": args.file.display().to_string(),
            "n": g.n(),
            "m": g.m(),
            "epsilon": args.epsilon,
            "source": args.source,
            "oracle": oracle_json(&choice),
            "distances": out.distances,
            "rounds": rounds,
        });
        println!("{value}");
    } else {
        let mut text = String::new();
        let _ = writeln!(text, "instance        {}", args.file.display());
        let _ = writeln!(text, "source          {}", args.source);
        let _ = writeln!(text, "epsilon         {}", args.epsilon);
        let _ = writeln!(text, "oracle          {}", choice.description);
        let _ = writeln!(text, "rounds          {}", out.rounds.len());
        let _ = writeln!(text, "node  distance");
        for (v, d) in out.distances.iter().enumerate() {
            let _ = writeln!(text, "{:<5} {}", v + 1, d);
        }
        print!("{text}");
    }
    Ok(())
}

fn cmd_spanner(args: SpannerArgs) -> Result<()> {
    let Instance { graph: g, .. } = load_instance(&args.file, 0.5)?;
    let k = args.k.unwrap_or_else(|| default_k(g.n()));
    if k == 0 {
        return Err(Error::input("k must be at least 1"));
    }
    let s = build_spanner(&g, k);

    if args.json {
        let value = json!({
            "schema": "tship/1",
            "command": "spanner",
            "instance": args.file.display().to_string(),
            "n": g.n(),
            "m": g.m(),
            "k": s.k,
            "stretch_bound": s.stretch_bound,
            "size_bound": s.size_bound,
            "kept_edges": s.edges.len(),
            "edges": s.edges,
            "rounds": s.rounds,
            "passes": s.passes,
        });
        println!("{value}");
    } else {
        let mut text = String::new();
        let _ = writeln!(text, "instance        {}", args.file.display());
        let _ = writeln!(text, "nodes           {}", g.n());
        let _ = writeln!(text, "edges           {}", g.m());
        let _ = writeln!(text, "k               {}", s.k);
        let _ = writeln!(text, "stretch bound   {}", s.stretch_bound);
        let _ = writeln!(text, "kept edges      {} (size bound {})", s.edges.len(), s.size_bound);
        let _ = writeln!(text, "clique rounds   {}", s.rounds);
        let _ = writeln!(text, "stream passes   {}", s.passes);
        print!("{text}");
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let Instance { graph: g, demand: b } = load_instance(&args.file, 0.5)?;
    let sol = exact_transshipment(&g, &b)?;
    let stretch = g.q_stretch(&sol.potentials);

    if args.json {
        let value = json!({
            "schema": "tship/1",
            "command": "oracle",
            "instance": args.file.display().to_string(),
            "n": g.n(),
            "m": g.m(),
            "value": sol.value,
            "potentials": sol.potentials,
            "flow_net": sol.flow.net_vec(),
            "stretch_norm": stretch,
        });
        println!("{value}");
    } else {
        let mut text = String::new();
        let _ = writeln!(text, "instance        {}", args.file.display());
        let _ = writeln!(text, "nodes           {}", g.n());
        let _ = writeln!(text, "edges           {}", g.m());
        let _ = writeln!(text, "optimum         {}", sol.value);
        let _ = writeln!(text, "stretch norm    {stretch}");
        print!("{text}");
    }
    Ok(())
}

fn cmd_sim_clique(args: SimArgs) -> Result<()> {
    check_epsilon(args.epsilon)?;
    let Instance { graph: g, demand: b } = load_instance(&args.file, args.epsilon)?;
    let k = args.k.unwrap_or_else(|| default_k(g.n()));
    let (res, acc) = simulate_clique(&g, &b, args.epsilon, k)?;

    if args.json {
        let value = json!({
            "schema": "tship/1",
            "command": "sim-clique",
            "instance": args.file.display().to_string(),
            "n": g.n(),
            "m": g.m(),
            "epsilon": args.epsilon,
            "k": k,
            "value_dual": res.value_dual,
            "iterations": acc.iterations,
            "rescales": acc.rescales,
            "rounds": acc.rounds,
            "setup_rounds": acc.setup_rounds,
            "spanner_rounds": acc.spanner_rounds,
            "per_round_words": acc.per_round_words,
            "formula_holds": acc.formula_holds(),
        });
        println!("{value}");
    } else {
        let mut text = String::new();
        let _ = writeln!(text, "instance        {}", args.file.display());
        let _ = writeln!(text, "model           clique (k={k}, epsilon {})", args.epsilon);
        let _ = writeln!(text, "dual value      {}", res.value_dual);
        let _ = writeln!(text, "iterations      {}", acc.iterations);
        let _ = writeln!(text, "rescales        {}", acc.rescales);
        let _ = writeln!(
            text,
            "rounds          {} (setup {}, spanner {})",
            acc.rounds, acc.setup_rounds, acc.spanner_rounds
        );
        let _ = writeln!(text, "words per round {}", acc.per_round_words);
        let _ = writeln!(text, "formula holds   {}", acc.formula_holds());
        print!("{text}");
    }
    Ok(())
}

fn cmd_sim_stream(args: StreamArgs) -> Result<()> {
    let base = args.base;
    check_epsilon(base.epsilon)?;
    let Instance { graph: g, demand: b } = load_instance(&base.file, base.epsilon)?;
    let k = base.k.unwrap_or_else(|| default_k(g.n()));
    let cfg = StreamConfig {
        shuffle_seed: args.shuffle_seed,
        fuse_passes: args.fuse_passes,
        budget_words: None,
    };
    let (res, acc) = simulate_stream(&g, &b, base.epsilon, k, &cfg)?;

    if base.json {
        let value = json!({
            "schema": "tship/1",
            "command": "sim-stream",
            "instance": base.file.display().to_string(),
            "n": g.n(),
            "m": g.m(),
            "epsilon": base.epsilon,
            "k": k,
            "shuffle_seed": args.shuffle_seed,
            "fused": acc.fused,
            "value_dual": res.value_dual,
            "iterations": acc.iterations,
            "rescales": acc.rescales,
            "passes": acc.passes,
            "spanner_passes": acc.spanner_passes,
            "permanent_words": acc.permanent_words,
            "peak_temporary_words": acc.peak_temporary_words,
            "budget_words": acc.budget_words,
            "formula_holds": acc.formula_holds(),
        });
        println!("{value}");
    } else {
        let mut text = String::new();
        let _ = writeln!(text, "instance        {}", base.file.display());
        let _ = writeln!(
            text,
            "model           stream (k={k}, epsilon {}, shuffle seed {})",
            base.epsilon, args.shuffle_seed
        );
        let _ = writeln!(text, "dual value      {}", res.value_dual);
        let _ = writeln!(text, "iterations      {}", acc.iterations);
        let _ = writeln!(text, "rescales        {}", acc.rescales);
        let _ = writeln!(
            text,
            "passes          {} (spanner {}, fused {})",
            acc.passes, acc.spanner_passes, acc.fused
        );
        let _ = writeln!(
            text,
            "space words     {} permanent + {} peak (budget {})",
            acc.permanent_words, acc.peak_temporary_words, acc.budget_words
        );
        let _ = writeln!(text, "formula holds   {}", acc.formula_holds());
        print!("{text}");
    }
    Ok(())
}

fn criterion_json(c: &CriterionOutcome) -> serde_json::Value {
    json!({
        "id": c.id,
        "name": c.name,
        "passed": c.passed,
        "checks": c.checks,
        "failed": c.failed,
        "failures": c.failures,
        "summary": c.summary,
    })
}

fn cmd_battery(args: BatteryArgs) -> Result<ExitCode> {
    let outcomes = battery::run_suite(&args.suite)?;
    let all_passed = outcomes.iter().all(|c| c.passed);
    for c in &outcomes {
        eprintln!("criterion {:>2} {} finished in {:.1}s", c.id, c.name, c.seconds);
    }

    if args.json {
        let value = json!({
            "schema": "tship/1",
            "command": "battery",
            "suite": args.suite,
            "criteria": outcomes.iter().map(criterion_json).collect::<Vec<_>>(),
            "all_passed": all_passed,
        });
        println!("{value}");
    } else {
        let mut text = String::new();
        for c in &outcomes {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(
                text,
                "criterion {:>2} {:<20} {verdict} ({} checks) {}",
                c.id, c.name, c.checks, c.summary
            );
            for f in &c.failures {
                let _ = writeln!(text, "    failure: {f}");
            }
            if c.failed > c.failures.len() {
                let _ = writeln!(text, "    ({} more failures)", c.failed - c.failures.len());
            }
        }
        let _ = writeln!(
            text,
            "suite {}: {}/{} criteria passed",
            args.suite,
            outcomes.iter().filter(|c| c.passed).count(),
            outcomes.len()
        );
        print!("{text}");
    }
    Ok(if all_passed { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn parse_weight_range(s: &str) -> Result<(u64, u64)> {
    let parts: Vec<&str> = s.split("..").collect();
    let err = || Error::input(format!("weight range must look like `1..10`, got `{s}`"));
    if parts.len() != 2 {
        return Err(err());
    }
    let low: u64 = parts[0].trim().parse().map_err(|_| err())?;
    let high: u64 = parts[1].trim().parse().map_err(|_| err())?;
    if low == 0 || high < low {
        return Err(Error::input(format!(
            "weight range needs 1 <= LO <= HI, got {low}..{high}"
        )));
    }
    Ok((low, high))
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let kind = Kind::from_str(&args.kind)?;
    let demand = DemandKind::from_str(&args.demand)?;
    let (low, high) = parse_weight_range(&args.weight_range)?;
    if !(args.max_ratio >= 1.0) || !args.max_ratio.is_finite() {
        return Err(Error::input(format!("max ratio must be at least 1, got {}", args.max_ratio)));
    }
    let extra = args.extra_edges.unwrap_or(args.n / 2);
    let spec = GraphSpec::new(kind, args.n)
        .weights(low, high)
        .max_ratio(args.max_ratio)
        .extra_edges(extra);
    let instance = generate_instance(&spec, demand, args.seed)?;
    let text = format_instance(&instance);

    if let Some(path) = &args.out {
        std::fs::write(path, &text)
            .map_err(|e| Error::input(format!("cannot write {}: {e}", path.display())))?;
    }
    if args.json {
        let value = json!({
            "schema": "tship/1",
            "command": "generate",
            "kind": args.kind,
            "n": instance.graph.n(),
            "m": instance.graph.m(),
            "seed": args.seed,
            "demand": args.demand,
            "path": args.out.as_ref().map(|p| p.display().to_string()),
            "text": if args.out.is_none() { Some(&text) } else { None },
        });
        println!("{value}");
    } else if let Some(path) = &args.out {
        println!(
            "wrote instance (n={}, m={}) to {}",
            instance.graph.n(),
            instance.graph.m(),
            path.display()
        );
    } else {
        print!("{text}");
    }
    Ok(())
}
