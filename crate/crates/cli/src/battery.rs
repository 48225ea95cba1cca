//! Experiment batteries that re-check every published guarantee on seeded
//! instance corpora.
//!
//! Each battery runs a fixed corpus through one facet of the pipeline and
//! verifies the advertised bounds with pinned tolerances. Reference values
//! come from independent computations (a local Dijkstra, central finite
//! differences, brute-force enumeration, an exact solver) rather than from
//! the code under test wherever the claim permits one.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tship_core::descent::{
    self, solve, DescentConfig, DirectEngine, SolveOptions, SolveResult, TreeSampler,
};
use tship_core::error::{Error, Result};
use tship_core::generate::{generate_graph, GraphSpec, Kind};
use tship_core::graph::ArcSystem;
use tship_core::models::{simulate_clique, simulate_stream, StreamConfig};
use tship_core::oracle::{brute_force_tree, dual_objective, exact_transshipment, DirectionOracle};
use tship_core::potential;
use tship_core::spanner::{build_spanner, default_k};
use tship_core::sssp::single_source_shortest_path;

/// Most failure descriptions kept per battery; the counts are always exact.
pub const MAX_REPORTED_FAILURES: usize = 10;

/// One battery's verdict: how many checks ran and which failed.
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub checks: usize,
    pub failed: usize,
    /// First few failure descriptions, capped at [`MAX_REPORTED_FAILURES`].
    pub failures: Vec<String>,
    pub summary: String,
    pub seconds: f64,
}

struct Checker {
    checks: usize,
    failed: usize,
    failures: Vec<String>,
}

impl Checker {
    fn new() -> Checker {
        Checker { checks: 0, failed: 0, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < MAX_REPORTED_FAILURES {
                self.failures.push(detail());
            }
        }
    }

    fn finish(
        self,
        id: usize,
        name: &'static str,
        summary: String,
        started: Instant,
    ) -> CriterionOutcome {
        CriterionOutcome {
            id,
            name,
            passed: self.failed == 0 && self.checks > 0,
            checks: self.checks,
            failed: self.failed,
            failures: self.failures,
            summary,
            seconds: started.elapsed().as_secs_f64(),
        }
    }
}

pub const SUITE_NAMES: &[&str] = &[
    "duality", "sssp", "gradient", "oracle", "spanner", "models", "tree", "start", "all",
];

/// Runs one named suite and returns its criterion verdicts in id order.
pub fn run_suite(name: &str) -> Result<Vec<CriterionOutcome>> {
    match name {
        "duality" => Ok(duality_batteries()),
        "sssp" => Ok(vec![sssp_battery()]),
        "gradient" => Ok(vec![gradient_battery(), softmax_battery()]),
        "oracle" => Ok(vec![oracle_battery()]),
        "spanner" => Ok(vec![spanner_battery()]),
        "models" => Ok(vec![models_battery()]),
        "tree" => Ok(vec![tree_battery()]),
        "start" => Ok(vec![warm_start_battery()]),
        "all" => {
            let mut all = duality_batteries();
            all.push(sssp_battery());
            all.push(gradient_battery());
            all.push(softmax_battery());
            all.push(oracle_battery());
            all.push(spanner_battery());
            all.push(models_battery());
            all.push(tree_battery());
            all.push(warm_start_battery());
            all.sort_by_key(|c| c.id);
            Ok(all)
        }
        other => Err(Error::input(format!(
            "unknown suite `{other}`; expected one of {}",
            SUITE_NAMES.join(", ")
        ))),
    }
}

fn corpus_rng(tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(tag ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Zero-sum integer demands from random unit transfers, never all zero.
fn integer_demand(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    assert!(n >= 2, "demands need at least two nodes");
    loop {
        let mut b = vec![0.0; n];
        for _ in 0..2 * n {
            let s = rng.gen_range(0..n);
            let mut t = rng.gen_range(0..n - 1);
            if t >= s {
                t += 1;
            }
            let amount = rng.gen_range(1..=5) as f64;
            b[s] += amount;
            b[t] -= amount;
        }
        if b.iter().any(|&x| x != 0.0) {
            return b;
        }
    }
}

/// Shortest distances from `source` over explicit arcs; the batteries'
/// independent reference for every distance-shaped claim.
fn dijkstra(n: usize, adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; n];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    dist[source] = 0.0;
    // Nonnegative floats order the same as their bit patterns.
    heap.push(Reverse((0.0f64.to_bits(), source)));
    while let Some(Reverse((bits, v))) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > dist[v] {
            continue;
        }
        for &(to, w) in &adj[v] {
            let cand = d + w;
            if cand < dist[to] {
                dist[to] = cand;
                heap.push(Reverse((cand.to_bits(), to)));
            }
        }
    }
    dist
}

/// Arcs with per-direction costs: `u -> v` at `w_plus`, `v -> u` at `w_minus`.
fn directed_adjacency(g: &ArcSystem) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); g.n()];
    for e in g.edges() {
        adj[e.u].push((e.v, e.w_plus));
        adj[e.v].push((e.u, e.w_minus));
    }
    adj
}

/// The symmetric metric spanners preserve: every kept edge usable both ways
/// at its cheaper cost.
fn metric_adjacency(g: &ArcSystem, keep: Option<&[usize]>) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); g.n()];
    let mut add = |i: usize| {
        let e = g.edge(i);
        adj[e.u].push((e.v, e.w_minus));
        adj[e.v].push((e.u, e.w_minus));
    };
    match keep {
        Some(edges) => edges.iter().for_each(|&i| add(i)),
        None => (0..g.m()).for_each(add),
    }
    adj
}

fn ceil_log2(n: usize) -> usize {
    let mut k = 0;
    while (1usize << k) < n {
        k += 1;
    }
    k
}

fn identical_runs(a: &SolveResult, b: &SolveResult) -> bool {
    a.value_dual.to_bits() == b.value_dual.to_bits()
        && a.beta_final.to_bits() == b.beta_final.to_bits()
        && a.rescales == b.rescales
        && a.beta_evals == b.beta_evals
        && a.y.len() == b.y.len()
        && a.y.iter().zip(&b.y).all(|(p, q)| p.to_bits() == q.to_bits())
        && a.trace.len() == b.trace.len()
        && a.trace.iter().zip(&b.trace).all(|(p, q)| {
            p.index == q.index
                && p.rescales == q.rescales
                && p.beta.to_bits() == q.beta.to_bits()
                && p.phi_entry.to_bits() == q.phi_entry.to_bits()
                && p.phi.to_bits() == q.phi.to_bits()
                && p.delta.to_bits() == q.delta.to_bits()
                && p.dual_value.to_bits() == q.dual_value.to_bits()
        })
}

/// Duality-gap, per-step decrement, and iteration-count batteries over one
/// shared corpus of 200 random connected instances.
pub fn duality_batteries() -> Vec<CriterionOutcome> {
    let started = Instant::now();
    let mut gap = Checker::new();
    let mut dec = Checker::new();
    let mut iters = Checker::new();
    const EPSILONS: [f64; 3] = [0.5, 0.25, 0.1];
    let total = 200usize;
    let mut sym_runs = 0usize;
    let mut asym_runs = 0usize;

    for i in 0..total {
        let symmetric = i % 2 == 0;
        let eps = EPSILONS[i % 3];
        // Symmetric instances sweep the full size range. Asymmetric ones
        // stay smaller, hardest at the tightest tolerance: the step budget
        // grows with the fourth power of the cost asymmetry and these runs
        // dominate the battery's wall time.
        let n = if symmetric {
            5 + (i / 2) % 46
        } else if eps < 0.25 {
            5 + (i / 2) % 12
        } else {
            5 + (i / 2) % 24
        };
        let mut spec = GraphSpec::new(Kind::RandomConnected, n)
            .weights(1, 20)
            .extra_edges(n / 2);
        if symmetric {
            sym_runs += 1;
        } else {
            spec = spec.max_ratio(4.0);
            asym_runs += 1;
        }
        let g = match generate_graph(&spec, 3_000 + i as u64) {
            Ok(g) => g,
            Err(e) => {
                gap.check(false, || format!("instance {i}: generation failed: {e}"));
                continue;
            }
        };
        let b = integer_demand(g.n(), &mut corpus_rng(0xD0A1, i as u64));
        let oracle = match DirectionOracle::exact(&g) {
            Ok(o) => o,
            Err(e) => {
                gap.check(false, || format!("instance {i}: oracle setup failed: {e}"));
                continue;
            }
        };
        let res = match solve(&g, &b, &oracle, &SolveOptions::new(eps)) {
            Ok(r) => r,
            Err(e) => {
                gap.check(false, || format!("instance {i} (n={n}, eps={eps}): solve failed: {e}"));
                continue;
            }
        };
        let opt = match exact_transshipment(&g, &b) {
            Ok(sol) => sol.value,
            Err(e) => {
                gap.check(false, || format!("instance {i}: reference solve failed: {e}"));
                continue;
            }
        };

        let qy = g.q_stretch(&res.y);
        gap.check(qy <= 1.0 + 1e-9, || {
            format!("instance {i} (n={n}, eps={eps}): dual potentials have stretch norm {qy:.12}")
        });

        let x = res.x.as_ref().expect("solve was asked for a primal flow");
        let mass: f64 = b.iter().map(|v| v.abs()).sum();
        let residual = g
            .balance(x)
            .iter()
            .zip(&b)
            .map(|(have, want)| (have - want).abs())
            .fold(0.0, f64::max);
        gap.check(residual <= 1e-9 * mass, || {
            format!("instance {i}: flow misses its demand by {residual:.3e} on mass {mass}")
        });

        let primal = res.value_primal.expect("primal value accompanies the flow");
        let dual = res.value_dual;
        gap.check(primal <= (1.0 + eps) * (1.0 + 1e-6) * dual, || {
            format!(
                "instance {i} (eps={eps}): primal {primal:.12} exceeds (1+eps) times dual {dual:.12}"
            )
        });
        gap.check(
            dual <= opt * (1.0 + 1e-9) + 1e-12 && opt <= primal * (1.0 + 1e-9) + 1e-12,
            || {
                format!(
                    "instance {i}: optimum {opt:.12} not bracketed by dual {dual:.12} and primal {primal:.12}"
                )
            },
        );

        // Every step must shrink the potential by the advertised factor.
        let ln_2m = (2.0 * g.m() as f64).ln();
        for w in res.trace.windows(2) {
            let before = &w[0];
            let after = &w[1];
            let factor = 1.0 - eps * before.delta * before.delta / (20.0 * ln_2m);
            let bound = factor * before.phi;
            dec.check(after.phi_entry <= bound + 1e-9 * bound.abs(), || {
                format!(
                    "instance {i} iteration {}: potential {:.12} above the decrement bound {bound:.12}",
                    after.index, after.phi_entry
                )
            });
        }

        // The analytic step budget only applies when the oracle is exact
        // and the costs are symmetric, where both quality factors are one.
        if symmetric {
            let stepped = res.trace.len() - 1;
            let cap = descent::iteration_cap(g.m(), eps, 1.0, 1.0);
            iters.check(stepped < cap, || {
                format!("instance {i}: {stepped} steps reached the safety cap {cap}")
            });
            if stepped > 0 {
                let phi0 = res.trace[0].phi_entry;
                let phi_end = res.trace.last().expect("trace is nonempty").phi;
                let budget = 4.0 * 640.0 * ln_2m * eps.powi(-3) * (phi0 / phi_end).ln();
                iters.check((stepped as f64) <= budget, || {
                    format!(
                        "instance {i} (n={n}, eps={eps}): {stepped} steps exceed the budget {budget:.1}"
                    )
                });
            }
        }
    }

    let elapsed = started.elapsed().as_secs_f64();
    gap.check(elapsed < 300.0, || {
        format!("corpus took {elapsed:.1}s against a 300s budget")
    });

    let corpus = format!(
        "{total} instances ({sym_runs} symmetric, {asym_runs} asymmetric), eps in {{0.5, 0.25, 0.1}}"
    );
    vec![
        gap.finish(1, "duality-gap", corpus.clone(), started),
        dec.finish(2, "step-decrement", format!("shared corpus: {corpus}"), started),
        iters.finish(3, "iteration-bound", "symmetric half of the shared corpus".into(), started),
    ]
}

/// Distance bands, per-round progress, and the outer round cap for
/// single-source shortest paths on family fixtures and random graphs.
pub fn sssp_battery() -> CriterionOutcome {
    let started = Instant::now();
    let mut c = Checker::new();
    let mut cases: Vec<(ArcSystem, usize, f64, String)> = Vec::new();

    let mut families: Vec<(ArcSystem, &str)> = Vec::new();
    for (j, n) in [6usize, 16, 30].into_iter().enumerate() {
        let spec = GraphSpec::new(Kind::Path, n).weights(1, 9);
        families.push((generate_graph(&spec, 40 + j as u64).expect("path fixture"), "path"));
    }
    for (j, n) in [6usize, 13].into_iter().enumerate() {
        let spec = GraphSpec::new(Kind::Star, n).weights(1, 9);
        families.push((generate_graph(&spec, 50 + j as u64).expect("star fixture"), "star"));
    }
    for (j, n) in [9usize, 20].into_iter().enumerate() {
        let spec = GraphSpec::new(Kind::Grid, n).weights(1, 9);
        families.push((generate_graph(&spec, 60 + j as u64).expect("grid fixture"), "grid"));
    }
    for (j, (g, kind)) in families.into_iter().enumerate() {
        for eps in [0.5, 0.25] {
            let label = format!("{kind} fixture {j} (n={}, eps={eps})", g.n());
            cases.push((g.clone(), 0, eps, label));
        }
    }

    for i in 0..50u64 {
        let n = 5 + (i as usize) % 26;
        let spec = GraphSpec::new(Kind::RandomConnected, n).weights(1, 20).extra_edges(n / 2);
        let g = generate_graph(&spec, 8_000 + i).expect("random fixture");
        let source = (i as usize) % n;
        let eps = if i % 2 == 0 { 0.5 } else { 0.25 };
        let label = format!("random {i} (n={n}, eps={eps}, source={source})");
        cases.push((g, source, eps, label));
    }

    let case_count = cases.len();
    for (g, source, eps, label) in cases {
        let truth = dijkstra(g.n(), &directed_adjacency(&g), source);
        let oracle = match DirectionOracle::exact(&g) {
            Ok(o) => o,
            Err(e) => {
                c.check(false, || format!("{label}: oracle setup failed: {e}"));
                continue;
            }
        };
        let out = match single_source_shortest_path(&g, source, eps, &oracle) {
            Ok(out) => out,
            Err(e) => {
                c.check(false, || format!("{label}: solve failed: {e}"));
                continue;
            }
        };

        for v in 0..g.n() {
            let want = truth[v];
            let got = out.distances[v];
            let slack = 1e-12 * want.max(1.0);
            c.check(
                got >= want / (1.0 + eps) - slack && got <= want * (1.0 + 1e-7) + slack,
                || format!("{label}: node {v} estimate {got:.12} outside band around {want:.12}"),
            );
        }

        // Each certification round must retire at least a quarter of the
        // remaining true distance mass.
        let total_mass: f64 = (0..g.n()).filter(|&v| v != source).map(|v| truth[v]).sum();
        let mut remaining: Vec<usize> = (0..g.n()).filter(|&v| v != source).collect();
        let mut mass = total_mass;
        for round in &out.rounds {
            for v in round.fixed.iter().chain(&round.degenerate) {
                remaining.retain(|u| u != v);
            }
            let next: f64 = remaining.iter().map(|&v| truth[v]).sum();
            c.check(next <= 0.75 * mass + 1e-9 * total_mass.max(1.0), || {
                format!("{label}: round {} kept mass {next:.6} of {mass:.6}", round.index)
            });
            mass = next;
        }
        c.check(remaining.is_empty(), || {
            format!("{label}: {} nodes never certified", remaining.len())
        });

        let cap_arg = ((g.n() * g.n()) as f64 * g.max_weight()).max(2.0);
        let cap = (4.0 * cap_arg.ln() / (4.0f64 / 3.0).ln()).ceil() as usize;
        c.check(out.rounds.len() <= cap, || {
            format!("{label}: {} rounds exceed the cap {cap}", out.rounds.len())
        });
    }

    let summary = format!("{case_count} runs (7 family fixtures at two tolerances, 50 random)");
    c.finish(4, "sssp-accuracy", summary, started)
}

/// Central finite differences against the analytic potential gradient.
pub fn gradient_battery() -> CriterionOutcome {
    let started = Instant::now();
    let mut c = Checker::new();
    for i in 0..100u64 {
        let mut rng = corpus_rng(0x06AD, i);
        let n = rng.gen_range(3..=10);
        let spec = GraphSpec::new(Kind::RandomConnected, n)
            .weights(1, 20)
            .extra_edges(rng.gen_range(0..=n));
        let g = generate_graph(&spec, 9_000 + i).expect("gradient fixture");
        let beta = rng.gen_range(0.3..5.0);
        let pi: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();

        let report = potential::aggregates(&g, beta, &pi);
        let analytic: Vec<f64> =
            report.node_grads_shifted.iter().map(|gv| gv / report.sum_shifted).collect();

        let h = 1e-5;
        let mut worst = 0.0f64;
        for v in 0..n {
            let mut plus = pi.clone();
            plus[v] += h;
            let mut minus = pi.clone();
            minus[v] -= h;
            let fd = (potential::potential(&g, beta, &plus)
                - potential::potential(&g, beta, &minus))
                / (2.0 * h);
            worst = worst.max((fd - analytic[v]).abs());
        }
        let scale = analytic.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-9);
        c.check(worst / scale <= 1e-5, || {
            format!(
                "triple {i} (n={n}, beta={beta:.3}): finite differences deviate by {:.3e} relative",
                worst / scale
            )
        });
    }
    c.finish(5, "gradient-consistency", "100 random (graph, beta, pi) triples".into(), started)
}

/// Algebraic identities of the soft-max: gradient mass, scale invariance,
/// smoothness, and the unit cost of the induced flow.
pub fn softmax_battery() -> CriterionOutcome {
    let started = Instant::now();
    let mut c = Checker::new();
    for i in 0..100u64 {
        let mut rng = corpus_rng(0x50F7, i);
        let len = rng.gen_range(2..=12);
        let v: Vec<f64> = (0..len).map(|_| rng.gen_range(-8.0..8.0)).collect();
        let beta = rng.gen_range(0.1..6.0);
        let t = rng.gen_range(0.2..5.0);

        let grad = potential::softmax_gradient(beta, &v).expect("vector is nonempty");
        let l1: f64 = grad.iter().map(|x| x.abs()).sum();
        c.check(l1 <= 1.0 + 1e-12, || {
            format!("case {i}: gradient mass {l1:.15} exceeds one")
        });

        let scaled_v: Vec<f64> = v.iter().map(|x| x / t).collect();
        let lhs = potential::softmax(t * beta, &scaled_v).expect("vector is nonempty");
        let rhs = potential::softmax(beta, &v).expect("vector is nonempty") / t;
        c.check((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300), || {
            format!("case {i}: value scaling identity off by {:.3e}", (lhs - rhs).abs())
        });
        let g_scaled = potential::softmax_gradient(t * beta, &scaled_v).expect("vector is nonempty");
        let grad_dev = g_scaled
            .iter()
            .zip(&grad)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        c.check(grad_dev <= 1e-12, || {
            format!("case {i}: gradient scaling identity off by {grad_dev:.3e}")
        });

        let y: Vec<f64> = (0..len).map(|_| rng.gen_range(-8.0..8.0)).collect();
        let grad_y = potential::softmax_gradient(beta, &y).expect("vector is nonempty");
        let diff_l1: f64 = grad.iter().zip(&grad_y).map(|(a, b)| (a - b).abs()).sum();
        let dist = v.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        c.check(diff_l1 <= beta * dist + 1e-9, || {
            format!("case {i}: gradient moved {diff_l1:.6} over distance {dist:.6} at beta {beta:.3}")
        });

        let n = rng.gen_range(3..=8);
        let spec = GraphSpec::new(Kind::RandomConnected, n).weights(1, 9).extra_edges(2);
        let g = generate_graph(&spec, 10_000 + i).expect("softmax fixture");
        let pi: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let gbeta = rng.gen_range(0.3..4.0);
        let cost = g.flow_cost(&potential::soft_flow(&g, gbeta, &pi));
        c.check(cost <= 1.0 + 1e-12, || {
            format!("case {i}: soft flow costs {cost:.15}, above one")
        });
    }
    c.finish(6, "softmax-identities", "100 cases, four identities each".into(), started)
}

/// The augmenting exact solver against brute-force tree enumeration, plus
/// dual feasibility and strong duality on every solve.
pub fn oracle_battery() -> CriterionOutcome {
    let started = Instant::now();
    let mut c = Checker::new();
    for i in 0..500u64 {
        let mut rng = corpus_rng(0x08AC, i);
        let n = rng.gen_range(2..=6);
        let max_extra = (8 - (n - 1)).min(3);
        let mut spec = GraphSpec::new(Kind::RandomConnected, n)
            .weights(1, 9)
            .extra_edges(rng.gen_range(0..=max_extra));
        if i % 3 == 0 {
            spec = spec.max_ratio(3.0);
        }
        let g = generate_graph(&spec, 11_000 + i).expect("oracle fixture");
        let b = integer_demand(n, &mut rng);
        let mass: f64 = b.iter().map(|v| v.abs()).sum();

        let exact = match exact_transshipment(&g, &b) {
            Ok(sol) => sol,
            Err(e) => {
                c.check(false, || format!("graph {i}: augmenting solve failed: {e}"));
                continue;
            }
        };
        let brute = match brute_force_tree(&g, &b) {
            Ok(sol) => sol,
            Err(e) => {
                c.check(false, || format!("graph {i}: enumeration failed: {e}"));
                continue;
            }
        };

        let dev = (exact.value - brute.value).abs();
        c.check(dev <= 1e-7 * brute.value.abs().max(1.0), || {
            format!("graph {i}: values {:.12} and {:.12} disagree", exact.value, brute.value)
        });

        for (tag, sol) in [("augmenting", &exact), ("enumeration", &brute)] {
            let q = g.q_stretch(&sol.potentials);
            c.check(q <= 1.0 + 1e-9, || {
                format!("graph {i}: {tag} potentials have stretch norm {q:.12}")
            });
            let duality_gap = (dual_objective(&b, &sol.potentials) - sol.value).abs();
            c.check(duality_gap <= 1e-9 * sol.value.abs().max(1.0), || {
                format!("graph {i}: {tag} dual objective misses the value by {duality_gap:.3e}")
            });
            let residual = g
                .balance(&sol.flow)
                .iter()
                .zip(&b)
                .map(|(have, want)| (have - want).abs())
                .fold(0.0, f64::max);
            c.check(residual <= 1e-9 * mass.max(1.0), || {
                format!("graph {i}: {tag} flow misses its demand by {residual:.3e}")
            });
        }
    }
    c.finish(7, "oracle-equivalence", "500 graphs with at most 8 edges".into(), started)
}

/// Spanner stretch, size, and determinism across graph families and levels.
pub fn spanner_battery() -> CriterionOutcome {
    let started = Instant::now();
    let mut c = Checker::new();
    for i in 0..100u64 {
        let n = 8 + ((i as usize) * 7) % 53;
        let mut spec = match i % 10 {
            0 => GraphSpec::new(Kind::Path, n).weights(1, 20),
            1 => GraphSpec::new(Kind::Star, n).weights(1, 20),
            2 => GraphSpec::new(Kind::Grid, n).weights(1, 20),
            _ => GraphSpec::new(Kind::RandomConnected, n).weights(1, 20).extra_edges(n / 2),
        };
        if i % 4 == 3 {
            spec = spec.max_ratio(3.0);
        }
        let g = generate_graph(&spec, 12_000 + i).expect("spanner fixture");

        let mut levels = vec![2, 3, default_k(n)];
        levels.sort_unstable();
        levels.dedup();
        let full = metric_adjacency(&g, None);
        for k in levels {
            let s1 = build_spanner(&g, k);
            let s2 = build_spanner(&g, k);
            c.check(s1.edges == s2.edges, || {
                format!("instance {i} (n={n}, k={k}): two builds kept different edges")
            });

            let size_bound =
                8.0 * k as f64 * (n as f64).powf(1.0 + 1.0 / k as f64) * ceil_log2(n) as f64;
            c.check((s1.edges.len() as f64) <= size_bound, || {
                format!(
                    "instance {i} (n={n}, k={k}): {} edges exceed the bound {size_bound:.1}",
                    s1.edges.len()
                )
            });

            let sub = metric_adjacency(&g, Some(&s1.edges));
            let stretch = (2 * k - 1) as f64;
            let mut ok = true;
            let mut detail = String::new();
            for u in 0..n {
                let base = dijkstra(n, &full, u);
                let kept = dijkstra(n, &sub, u);
                for v in 0..n {
                    if kept[v] > stretch * base[v] + 1e-9 {
                        ok = false;
                        detail = format!(
                            "instance {i} (n={n}, k={k}): pair ({u}, {v}) stretched {:.6} over {:.6}",
                            kept[v], base[v]
                        );
                        break;
                    }
                }
                if !ok {
                    break;
                }
            }
            c.check(ok, || detail);
        }
    }
    c.finish(8, "spanner-quality", "100 instances, levels {2, 3, default}".into(), started)
}

/// Bit-identical replay and exact round, pass, and space accounting for the
/// broadcast-clique and multipass-streaming simulators.
pub fn models_battery() -> CriterionOutcome {
    let started = Instant::now();
    let mut c = Checker::new();
    for i in 0..50u64 {
        let symmetric = i % 5 != 4;
        let n = 5 + ((i as usize) * 3) % 28;
        let eps = if i % 2 == 0 { 0.5 } else { 0.25 };
        let k = if i % 7 == 3 { 3 } else { 2 };
        let mut spec = GraphSpec::new(Kind::RandomConnected, n).weights(1, 20).extra_edges(n / 2);
        if !symmetric {
            spec = spec.max_ratio(2.0);
        }
        let g = generate_graph(&spec, 13_000 + i).expect("model fixture");
        let b = integer_demand(n, &mut corpus_rng(0x0DE1, i));
        let label = format!("instance {i} (n={n}, eps={eps}, k={k})");

        let oracle = match DirectionOracle::with_spanner(&g, k) {
            Ok(o) => o,
            Err(e) => {
                c.check(false, || format!("{label}: oracle setup failed: {e}"));
                continue;
            }
        };
        let mut opts = SolveOptions::new(eps);
        opts.want_primal = false;
        let direct = match solve(&g, &b, &oracle, &opts) {
            Ok(r) => r,
            Err(e) => {
                c.check(false, || format!("{label}: direct solve failed: {e}"));
                continue;
            }
        };

        let (clique, rounds) = match simulate_clique(&g, &b, eps, k) {
            Ok(pair) => pair,
            Err(e) => {
                c.check(false, || format!("{label}: clique replay failed: {e}"));
                continue;
            }
        };
        c.check(identical_runs(&direct, &clique), || {
            format!("{label}: clique replay diverged from the direct solve")
        });
        c.check(
            rounds.per_round_words <= 2
                && rounds.rounds
                    == rounds.setup_rounds
                        + rounds.spanner_rounds
                        + 3 * rounds.iterations
                        + rounds.rescales
                        + 2,
            || format!("{label}: round count {} misses its formula", rounds.rounds),
        );
        c.check(
            rounds.iterations == direct.trace.len() && rounds.rescales == direct.rescales,
            || format!("{label}: clique accounting disagrees with the trace"),
        );

        let (stream, passes) = match simulate_stream(&g, &b, eps, k, &StreamConfig::default()) {
            Ok(pair) => pair,
            Err(e) => {
                c.check(false, || format!("{label}: stream replay failed: {e}"));
                continue;
            }
        };
        c.check(identical_runs(&direct, &stream), || {
            format!("{label}: stream replay diverged from the direct solve")
        });
        c.check(
            passes.fused
                && passes.passes
                    == passes.spanner_passes + 2 * passes.iterations + passes.rescales + 3,
            || format!("{label}: pass count {} misses its formula", passes.passes),
        );
        c.check(
            passes.iterations == direct.trace.len() && passes.rescales == direct.rescales,
            || format!("{label}: stream accounting disagrees with the trace"),
        );
        let budget = 16 * n * ceil_log2(n);
        c.check(
            passes.budget_words == budget
                && passes.permanent_words + passes.peak_temporary_words <= budget,
            || {
                format!(
                    "{label}: {} permanent + {} peak words against budget {budget}",
                    passes.permanent_words, passes.peak_temporary_words
                )
            },
        );

        let mut shuffles_identical = true;
        for seed in 1..=10u64 {
            let cfg = StreamConfig { shuffle_seed: seed, ..StreamConfig::default() };
            match simulate_stream(&g, &b, eps, k, &cfg) {
                Ok((shuffled, _)) => {
                    if !identical_runs(&direct, &shuffled) {
                        shuffles_identical = false;
                    }
                }
                Err(e) => {
                    c.check(false, || format!("{label}: shuffled replay failed: {e}"));
                    shuffles_identical = false;
                }
            }
        }
        c.check(shuffles_identical, || {
            format!("{label}: a shuffled delivery order changed the result")
        });
    }
    c.finish(9, "model-accounting", "50 instances, 10 shuffles each".into(), started)
}

/// Tree sampling: arc-wise means against the converged flow and the attempt
/// budget's success rate.
pub fn tree_battery() -> CriterionOutcome {
    let started = Instant::now();
    let mut c = Checker::new();
    const DRAWS: usize = 10_000;
    for run in 0..20u64 {
        let n = 6 + ((run as usize) * 5) % 13;
        let eps = if run % 2 == 0 { 0.5 } else { 0.25 };
        let spec = GraphSpec::new(Kind::RandomConnected, n).weights(1, 20).extra_edges(n / 2);
        let g = generate_graph(&spec, 14_000 + run).expect("tree fixture");
        let b = integer_demand(n, &mut corpus_rng(0x7EE, run));
        let label = format!("run {run} (n={n}, eps={eps})");

        // Reproduce the converged soft flow the solver hands to the sampler.
        let x1 = (|| -> Result<_> {
            let oracle = DirectionOracle::exact(&g)?;
            let pi0 = descent::symmetrized_start(&g, &b, &oracle)?;
            let (beta0, _) = potential::find_initial_beta(&g, eps, &pi0)?;
            let cfg = DescentConfig::new(&g, eps, oracle.alpha)?;
            let mut engine = DirectEngine::new(&g);
            let out = descent::gradient_transshipment(&mut engine, &b, &pi0, beta0, &cfg, &oracle)?;
            Ok(out.final_report.soft_flow(&g))
        })();
        let x1 = match x1 {
            Ok(x1) => x1,
            Err(e) => {
                c.check(false, || format!("{label}: converged flow unavailable: {e}"));
                continue;
            }
        };

        let sampler = match TreeSampler::new(&g, &x1) {
            Ok(s) => s,
            Err(e) => {
                c.check(false, || format!("{label}: sampler setup failed: {e}"));
                continue;
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0xCAFE + run);
        let mut sums = vec![0.0f64; g.m()];
        for _ in 0..DRAWS {
            let (_, flow) = sampler.draw(&mut rng);
            for e in 0..g.m() {
                sums[e] += flow.net(e);
            }
        }
        for e in 0..g.m() {
            let target = x1.net(e);
            let mean = sums[e] / DRAWS as f64;
            if let Some(p) = sampler.selection_probability(e) {
                // Per draw the arc carries its head's in-flow times a
                // Bernoulli(p) selection, so the deviation of the mean is
                // exactly binomial.
                let sigma = target.abs() * ((1.0 - p) / p).sqrt();
                let band = 4.0 * sigma / (DRAWS as f64).sqrt() + 1e-9 * target.abs().max(1.0);
                c.check((mean - target).abs() <= band, || {
                    format!(
                        "{label}: edge {e} mean {mean:.9} strays from {target:.9} beyond {band:.3e}"
                    )
                });
            } else {
                c.check(target == 0.0 && mean == 0.0, || {
                    format!("{label}: unused edge {e} carried flow {mean:.3e}")
                });
            }
        }

        let mut successes = 0;
        for seed in 0..100u64 {
            if descent::sample_tree(&g, &x1, eps, seed).is_ok() {
                successes += 1;
            }
        }
        c.check(successes >= 99, || {
            format!("{label}: only {successes} of 100 seeded samplings met the cost target")
        });
    }
    let summary = format!("20 converged runs, {DRAWS} draws each, 100 seeded samplings each");
    c.finish(10, "tree-sampling", summary, started)
}

/// Quality of the symmetrized warm start against optimal potentials on
/// asymmetric instances.
pub fn warm_start_battery() -> CriterionOutcome {
    let started = Instant::now();
    let mut c = Checker::new();
    for i in 0..50u64 {
        let n = 5 + (i as usize) % 26;
        let spec = GraphSpec::new(Kind::RandomConnected, n)
            .weights(1, 20)
            .extra_edges(n / 2)
            .max_ratio(4.0);
        let g = generate_graph(&spec, 15_000 + i).expect("warm start fixture");
        let b = integer_demand(n, &mut corpus_rng(0x57A7, i));
        let label = format!("instance {i} (n={n})");

        let outcome = (|| -> Result<(f64, f64)> {
            let oracle = DirectionOracle::exact(&g)?;
            let pi0 = descent::symmetrized_start(&g, &b, &oracle)?;
            let sol = exact_transshipment(&g, &b)?;
            let value = dual_objective(&b, &sol.potentials);
            let star: Vec<f64> = sol.potentials.iter().map(|p| p / value).collect();
            Ok((g.q_stretch(&pi0), g.q_stretch(&star)))
        })();
        match outcome {
            Ok((q0, qstar)) => {
                c.check(q0 <= g.lambda() * qstar * (1.0 + 1e-9), || {
                    format!(
                        "{label}: start stretch {q0:.12} above lambda {} times optimal {qstar:.12}",
                        g.lambda()
                    )
                });
            }
            Err(e) => c.check(false, || format!("{label}: setup failed: {e}")),
        }
    }
    c.finish(11, "warm-start", "50 asymmetric instances, ratio up to 4".into(), started)
}
