//! Projected gradient descent on the soft-max potential, primal recovery,
//! and randomized tree sampling.
//!
//! The solver minimizes the potential of the stretch vector over potentials
//! `pi` with `b'pi = 1`. Each iteration projects the gradient onto the
//! demand-orthogonal subspace, asks an oracle for an approximately best
//! bounded-stretch direction, and steps far enough to shrink the potential
//! by a measurable factor. The terminal potentials normalize to a feasible
//! dual solution, and the terminal soft flow combined with the oracle's
//! routed flow recovers a matching primal.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{validate_demand, ArcSystem, FlowVector};
use crate::oracle::{dual_objective, DirectionOracle};
use crate::potential::{self, pairwise_sum, AggregateReport};

/// Why the engine is evaluating the potential, for cost accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalKind {
    /// Evaluation inside the initial beta search.
    BetaInit,
    /// First evaluation of a descent iteration.
    Entry,
    /// Re-evaluation after a beta rescale.
    Rescale,
}

/// The stretch norms one descent iteration needs, evaluated together so a
/// computation model can charge them as a single aggregation.
#[derive(Debug, Clone, Copy)]
pub struct StretchNorms {
    /// `inf_norm_stretch` of the current potentials.
    pub pi_norm: f64,
    /// `inf_norm_stretch` of the oracle's unscaled direction.
    pub direction_norm: f64,
    /// `inf_norm_stretch` of the projected unscaled direction.
    pub projected_norm: f64,
}

/// How the descent reads the graph: directly, or through a simulated
/// computation model that meters every evaluation.
pub trait Engine {
    fn graph(&self) -> &ArcSystem;

    /// Potential, gradient, and soft-flow aggregates at `(beta, pi)`.
    fn aggregates(&mut self, beta: f64, pi: &[f64], kind: EvalKind) -> AggregateReport;

    /// The three stretch norms of one iteration.
    fn stretch_norms(&mut self, pi: &[f64], h: &[f64], ph: &[f64]) -> StretchNorms;

    /// Stretch q-norm of the terminal potentials.
    fn terminal_q(&mut self, pi: &[f64]) -> f64;
}

/// Reads the graph in place with no accounting.
pub struct DirectEngine<'a> {
    g: &'a ArcSystem,
}

impl<'a> DirectEngine<'a> {
    pub fn new(g: &'a ArcSystem) -> Self {
        DirectEngine { g }
    }
}

impl Engine for DirectEngine<'_> {
    fn graph(&self) -> &ArcSystem {
        self.g
    }

    fn aggregates(&mut self, beta: f64, pi: &[f64], _kind: EvalKind) -> AggregateReport {
        potential::aggregates(self.g, beta, pi)
    }

    fn stretch_norms(&mut self, pi: &[f64], h: &[f64], ph: &[f64]) -> StretchNorms {
        StretchNorms {
            pi_norm: self.g.inf_norm_stretch(pi),
            direction_norm: self.g.inf_norm_stretch(h),
            projected_norm: self.g.inf_norm_stretch(ph),
        }
    }

    fn terminal_q(&mut self, pi: &[f64]) -> f64 {
        self.g.q_stretch(pi)
    }
}

/// Tuning and guarantees for one descent run.
#[derive(Debug, Clone)]
pub struct DescentConfig {
    /// Target approximation; must lie in (0, 1/2].
    pub eps: f64,
    /// The oracle's gain ratio.
    pub alpha: f64,
    /// Cost asymmetry of the graph.
    pub lambda: f64,
    /// Hard iteration cap; exceeding it is an error, never truncation.
    pub max_iterations: usize,
}

impl DescentConfig {
    pub fn new(g: &ArcSystem, eps: f64, alpha: f64) -> Result<DescentConfig> {
        check_eps(eps)?;
        if !(alpha >= 1.0) || !alpha.is_finite() {
            return Err(Error::input("oracle gain ratio must be at least 1"));
        }
        let lambda = g.lambda();
        Ok(DescentConfig {
            eps,
            alpha,
            lambda,
            max_iterations: iteration_cap(g.m(), eps, alpha, lambda),
        })
    }

    /// Steps stop once the measured gain ratio drops to this threshold.
    pub fn threshold(&self) -> f64 {
        self.eps / (8.0 * self.alpha * self.lambda * self.lambda)
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::input("epsilon must lie in (0, 1/2]"));
    }
    Ok(())
}

/// Safety cap on descent iterations: four times the analytic bound.
pub fn iteration_cap(m: usize, eps: f64, alpha: f64, lambda: f64) -> usize {
    let ln_2m = ((2 * m) as f64).ln();
    let bound = 640.0
        * alpha
        * alpha
        * lambda.powi(4)
        * ln_2m
        * (eps.powi(-3) + lambda.ln() + alpha.ln());
    (4.0 * bound).ceil().min(1e18) as usize
}

/// One descent iteration as seen by the trace.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub index: usize,
    /// Beta this iteration stepped with, after any rescales.
    pub beta: f64,
    /// Potential on entry, before this iteration's rescales. Equals the
    /// previous record's post-step potential at the previous beta.
    pub phi_entry: f64,
    /// Potential at `beta`.
    pub phi: f64,
    /// Measured gain ratio of the oracle direction.
    pub delta: f64,
    /// Dual objective of the normalized potentials.
    pub dual_value: f64,
    /// Rescales performed up to and including this iteration.
    pub rescales: usize,
}

/// Everything the descent loop produces.
#[derive(Debug)]
pub struct DescentOutcome {
    pub pi: Vec<f64>,
    pub beta: f64,
    pub trace: Vec<IterationRecord>,
    pub rescales: usize,
    /// Aggregates at the terminal `(beta, pi)`.
    pub final_report: AggregateReport,
    /// The terminal oracle flow, routing the terminal projected demand.
    pub final_x2: FlowVector,
}

/// Bound on beta rescales in one run; past it the potential window cannot
/// be restored and the instance is numerically degenerate.
const RESCALE_CAP: usize = 100_000;

/// Guard against a vanishing step denominator, relative to the stretch
/// norm of the current potentials.
const DENOMINATOR_GUARD: f64 = 1e-12;

/// Runs the projected gradient descent from `pi0` at `beta0` until the
/// measured gain ratio drops to the termination threshold.
pub fn gradient_transshipment<E: Engine>(
    engine: &mut E,
    b: &[f64],
    pi0: &[f64],
    beta0: f64,
    cfg: &DescentConfig,
    oracle: &DirectionOracle,
) -> Result<DescentOutcome> {
    let (n, ln_4m) = {
        let g = engine.graph();
        (g.n(), ((4 * g.m()) as f64).ln())
    };
    assert_eq!(b.len(), n, "demand length must match the node count");
    assert_eq!(pi0.len(), n, "potential length must match the node count");
    if (dual_objective(b, pi0) - 1.0).abs() > 1e-9 {
        return Err(Error::input("start potentials must satisfy b'pi = 1"));
    }
    if !(beta0 > 0.0) || !beta0.is_finite() {
        return Err(Error::input("initial beta must be positive"));
    }

    let tau = cfg.threshold();
    let mut pi = pi0.to_vec();
    let mut beta = beta0;
    let mut rescales = 0usize;
    let mut steps = 0usize;
    let mut trace: Vec<IterationRecord> = Vec::new();

    loop {
        let mut report = engine.aggregates(beta, &pi, EvalKind::Entry);
        let phi_entry = report.potential();
        let mut phi = phi_entry;
        while 4.0 * ln_4m / (cfg.eps * beta) >= phi {
            beta *= 1.25;
            rescales += 1;
            if rescales > RESCALE_CAP {
                return Err(Error::numeric(
                    "beta rescaling failed to restore the potential window",
                ));
            }
            report = engine.aggregates(beta, &pi, EvalKind::Rescale);
            let next = report.potential();
            assert!(
                next <= phi * (1.0 + 1e-12),
                "raising beta increased the potential: {next} > {phi}"
            );
            phi = next;
        }

        let grad = report.gradient();
        let pi_dot_grad = dual_objective(&pi, &grad);
        assert!(
            pi_dot_grad >= (1.0 - cfg.eps / 4.0) * phi - 1e-9 * phi.abs().max(1.0),
            "aligned gradient mass {pi_dot_grad} fell below the window bound for potential {phi}"
        );
        let b_tilde: Vec<f64> = (0..n).map(|v| grad[v] - b[v] * pi_dot_grad).collect();
        let dual_value = 1.0 / report.q_stretch();
        let index = trace.len();

        // A zero oracle direction flows through the vanishing-norm guard
        // below, so the per-iteration evaluation schedule never branches on
        // data; the simulators rely on that regularity for their round and
        // pass accounting.
        let raw = oracle.solve_raw(&b_tilde)?;
        let ph_raw = project(&pi, b, &raw.h);
        let norms = engine.stretch_norms(&pi, &raw.h, &ph_raw);
        let delta;
        if norms.direction_norm <= 1e-300
            || norms.projected_norm < DENOMINATOR_GUARD * norms.pi_norm
        {
            delta = 0.0;
            trace.push(IterationRecord {
                index,
                beta,
                phi_entry,
                phi,
                delta,
                dual_value,
                rescales,
            });
            return Ok(DescentOutcome {
                pi,
                beta,
                trace,
                rescales,
                final_report: report,
                final_x2: raw.x2,
            });
        }
        let h_tilde: Vec<f64> = raw.h.iter().map(|x| x / norms.direction_norm).collect();
        let den = norms.projected_norm / norms.direction_norm;
        let gain = dual_objective(&b_tilde, &h_tilde);
        delta = gain / den;
        trace.push(IterationRecord {
            index,
            beta,
            phi_entry,
            phi,
            delta,
            dual_value,
            rescales,
        });
        if delta <= tau {
            return Ok(DescentOutcome {
                pi,
                beta,
                trace,
                rescales,
                final_report: report,
                final_x2: raw.x2,
            });
        }
        if steps >= cfg.max_iterations {
            return Err(Error::numeric(format!(
                "descent exceeded {} iterations; the oracle guarantee or the numerics failed",
                cfg.max_iterations
            )));
        }
        steps += 1;

        let ph_tilde = project(&pi, b, &h_tilde);
        let scale = delta / (2.0 * beta * den);
        for v in 0..n {
            pi[v] -= scale * ph_tilde[v];
        }
        debug_assert!(
            (dual_objective(b, &pi) - 1.0).abs() <= 1e-9,
            "demand normalization drifted"
        );
    }
}

/// Projects `h` onto the subspace with `b'h = 0` along `pi`:
/// `h - pi * (b'h)`.
pub fn project(pi: &[f64], b: &[f64], h: &[f64]) -> Vec<f64> {
    let bh = dual_objective(b, h);
    pi.iter().zip(h).map(|(&p, &x)| x - p * bh).collect()
}

/// Start potentials from one oracle solve on the raw demand, normalized
/// so `b'pi = 1`.
pub fn symmetrized_start(g: &ArcSystem, b: &[f64], oracle: &DirectionOracle) -> Result<Vec<f64>> {
    validate_demand(g.n(), b)?;
    let raw = oracle.solve_raw(b)?;
    if raw.zero {
        return Err(Error::input("demand is identically zero"));
    }
    let value = dual_objective(b, &raw.h);
    if !(value > 0.0) {
        return Err(Error::numeric(
            "oracle start produced a nonpositive dual value",
        ));
    }
    Ok(raw.h.iter().map(|x| x / value).collect())
}

/// Combines the terminal soft flow with the oracle's routed flow into a
/// primal solution: `x = (x1 - x2) / (pi' grad)`.
pub fn recover_primal(
    g: &ArcSystem,
    b: &[f64],
    pi: &[f64],
    report: &AggregateReport,
    x2: &FlowVector,
) -> Result<FlowVector> {
    let grad = report.gradient();
    let denom = dual_objective(pi, &grad);
    if denom.abs() < 1e-12 {
        return Err(Error::numeric(
            "aligned gradient mass vanished during primal recovery",
        ));
    }
    let x1 = report.soft_flow(g);
    let net: Vec<f64> = (0..g.m())
        .map(|i| (x1.net(i) - x2.net(i)) / denom)
        .collect();
    let x = FlowVector::from_net(&net);
    if cfg!(debug_assertions) {
        let mass: f64 = b.iter().map(|v| v.abs()).sum();
        let balance = g.balance(&x);
        for v in 0..g.n() {
            debug_assert!(
                (balance[v] - b[v]).abs() <= 1e-6 * mass.max(1.0),
                "recovered flow misroutes node {v}"
            );
        }
    }
    Ok(x)
}

/// A sampled tree flow with the attempt count that produced it.
#[derive(Debug, Clone)]
pub struct SampledTree {
    /// Edge indices of the sampled forest, one per node with in-arcs.
    pub edges: Vec<usize>,
    /// Net flow on the original edge list.
    pub flow: FlowVector,
    pub attempts: usize,
}

/// Draws forest flows that estimate a reference flow without bias: every
/// node keeps one in-arc with probability proportional to the arc's share
/// of the node's in-flow, and the kept arc carries the whole in-flow. Per
/// arc the sampled flow is then the in-flow times a Bernoulli selection,
/// with mean equal to the reference flow.
pub struct TreeSampler<'a> {
    g: &'a ArcSystem,
    /// Per head node: `(edge index, tail, flow magnitude)` of every in-arc
    /// after reorienting edges along their net flow.
    in_arcs: Vec<Vec<(usize, usize, f64)>>,
    /// Per node: total reference in-flow, the amount one draw assigns to
    /// the node's kept arc.
    inflow: Vec<f64>,
}

impl<'a> TreeSampler<'a> {
    pub fn new(g: &'a ArcSystem, x1: &FlowVector) -> Result<Self> {
        let n = g.n();
        assert_eq!(x1.m(), g.m(), "flow length must match the edge count");
        let net = x1.net_vec();

        // Reorient every edge along its net flow and drop empty ones; the
        // remaining arcs must order topologically.
        let mut in_arcs: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); n];
        for (i, &value) in net.iter().enumerate() {
            if value == 0.0 {
                continue;
            }
            let edge = g.edge(i);
            let (tail, head) = if value > 0.0 { (edge.u, edge.v) } else { (edge.v, edge.u) };
            in_arcs[head].push((i, tail, value.abs()));
        }
        topological_order(n, &in_arcs)?;
        let inflow = in_arcs
            .iter()
            .map(|arcs| pairwise_sum(&arcs.iter().map(|a| a.2).collect::<Vec<f64>>()))
            .collect();
        Ok(TreeSampler { g, in_arcs, inflow })
    }

    /// Probability that one draw keeps edge `i`, or `None` when the
    /// reference flow does not use the edge.
    pub fn selection_probability(&self, edge: usize) -> Option<f64> {
        for (v, arcs) in self.in_arcs.iter().enumerate() {
            if let Some(&(_, _, value)) = arcs.iter().find(|&&(e, _, _)| e == edge) {
                return Some(value / self.inflow[v]);
            }
        }
        None
    }

    /// One sampled forest: the chosen edge indices and the flow they carry.
    pub fn draw(&self, rng: &mut impl Rng) -> (Vec<usize>, FlowVector) {
        let mut tree_net = vec![0.0; self.g.m()];
        let mut edges = Vec::new();
        for (v, arcs) in self.in_arcs.iter().enumerate() {
            if arcs.is_empty() {
                continue;
            }
            let total = self.inflow[v];
            let mut target = rng.gen::<f64>() * total;
            let mut pick = arcs.len() - 1;
            for (j, &(_, _, value)) in arcs.iter().enumerate() {
                if target < value {
                    pick = j;
                    break;
                }
                target -= value;
            }
            let edge = arcs[pick].0;
            edges.push(edge);
            tree_net[edge] = if self.g.edge(edge).v == v { total } else { -total };
        }
        (edges, FlowVector::from_net(&tree_net))
    }
}

/// Samples a forest whose flow matches `x1` arc-wise in expectation,
/// retrying until the cost target `1 + eps/8` is met.
pub fn sample_tree(g: &ArcSystem, x1: &FlowVector, eps: f64, seed: u64) -> Result<SampledTree> {
    check_eps(eps)?;
    let sampler = TreeSampler::new(g, x1)?;
    let max_attempts = ((48.0 * (g.n() as f64).ln() / eps).ceil() as usize).max(1);
    let budget = 1.0 + eps / 8.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=max_attempts {
        let (edges, flow) = sampler.draw(&mut rng);
        if g.flow_cost(&flow) <= budget {
            return Ok(SampledTree { edges, flow, attempts: attempt });
        }
    }
    Err(Error::numeric(format!(
        "no sampled tree met the cost target within {max_attempts} attempts"
    )))
}

fn topological_order(n: usize, in_arcs: &[Vec<(usize, usize, f64)>]) -> Result<Vec<usize>> {
    let mut indegree: Vec<usize> = in_arcs.iter().map(|arcs| arcs.len()).collect();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (head, arcs) in in_arcs.iter().enumerate() {
        for &(_, tail, _) in arcs {
            out[tail].push(head);
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &w in &out[v] {
            indegree[w] -= 1;
            if indegree[w] == 0 {
                queue.push_back(w);
            }
        }
    }
    if order.len() < n {
        return Err(Error::input(
            "the support of the flow contains a directed cycle",
        ));
    }
    Ok(order)
}

/// What a solve should produce beyond the dual potentials.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub eps: f64,
    pub want_primal: bool,
    pub want_tree: bool,
    pub tree_seed: u64,
    /// Overrides the analytic iteration cap when set.
    pub max_iterations: Option<usize>,
}

impl SolveOptions {
    pub fn new(eps: f64) -> SolveOptions {
        SolveOptions {
            eps,
            want_primal: true,
            want_tree: false,
            tree_seed: 0,
            max_iterations: None,
        }
    }
}

/// A complete solve: dual potentials, optional primal flow and sampled
/// tree, and the iteration trace.
#[derive(Debug)]
pub struct SolveResult {
    pub y: Vec<f64>,
    pub x: Option<FlowVector>,
    pub tree: Option<SampledTree>,
    pub value_dual: f64,
    pub value_primal: Option<f64>,
    pub trace: Vec<IterationRecord>,
    pub beta_final: f64,
    pub beta_evals: usize,
    pub rescales: usize,
    pub alpha: f64,
}

/// Solves the transshipment for demand `b` with the direct engine.
pub fn solve(
    g: &ArcSystem,
    b: &[f64],
    oracle: &DirectionOracle,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    let mut engine = DirectEngine::new(g);
    solve_with_engine(&mut engine, b, oracle, opts)
}

/// Solves the transshipment through an arbitrary engine, so computation
/// models can meter the exact same run.
pub fn solve_with_engine<E: Engine>(
    engine: &mut E,
    b: &[f64],
    oracle: &DirectionOracle,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    let (n, m, ln_2m) = {
        let g = engine.graph();
        (g.n(), g.m(), ((2 * g.m()) as f64).ln())
    };
    validate_demand(n, b)?;
    check_eps(opts.eps)?;
    if b.iter().all(|&x| x == 0.0) {
        return Ok(SolveResult {
            y: vec![0.0; n],
            x: opts.want_primal.then(|| FlowVector::zero(m)),
            tree: opts.want_tree.then(|| SampledTree {
                edges: Vec::new(),
                flow: FlowVector::zero(m),
                attempts: 0,
            }),
            value_dual: 0.0,
            value_primal: opts.want_primal.then_some(0.0),
            trace: Vec::new(),
            beta_final: 0.0,
            beta_evals: 0,
            rescales: 0,
            alpha: oracle.alpha,
        });
    }

    let mut cfg = DescentConfig::new(engine.graph(), opts.eps, oracle.alpha)?;
    if let Some(cap) = opts.max_iterations {
        cfg.max_iterations = cap;
    }
    let pi0 = symmetrized_start(engine.graph(), b, oracle)?;
    let (beta0, beta_evals) = potential::find_initial_beta_with(opts.eps, ln_2m, |beta| {
        engine.aggregates(beta, &pi0, EvalKind::BetaInit).potential()
    })?;
    let outcome = gradient_transshipment(engine, b, &pi0, beta0, &cfg, oracle)?;

    let q = engine.terminal_q(&outcome.pi);
    if !(q > 0.0) {
        return Err(Error::numeric("terminal potentials have zero stretch"));
    }
    let y: Vec<f64> = outcome.pi.iter().map(|p| p / q).collect();
    let value_dual = dual_objective(b, &y);

    let mut x = None;
    let mut value_primal = None;
    if opts.want_primal {
        let flow = recover_primal(
            engine.graph(),
            b,
            &outcome.pi,
            &outcome.final_report,
            &outcome.final_x2,
        )?;
        value_primal = Some(engine.graph().flow_cost(&flow));
        x = Some(flow);
    }
    let tree = if opts.want_tree {
        let x1 = outcome.final_report.soft_flow(engine.graph());
        Some(sample_tree(engine.graph(), &x1, opts.eps, opts.tree_seed)?)
    } else {
        None
    };

    Ok(SolveResult {
        y,
        x,
        tree,
        value_dual,
        value_primal,
        trace: outcome.trace,
        beta_final: outcome.beta,
        beta_evals,
        rescales: outcome.rescales,
        alpha: oracle.alpha,
    })
}

/// Checks the multiplicative decrement across the accepted steps of a
/// trace, returning a description of the first violation.
pub fn decrement_violation(trace: &[IterationRecord], eps: f64, m: usize) -> Option<String> {
    let ln_2m = ((2 * m) as f64).ln();
    for pair in trace.windows(2) {
        let (before, after) = (&pair[0], &pair[1]);
        let factor = 1.0 - eps * before.delta * before.delta / (20.0 * ln_2m);
        let bound = factor * before.phi;
        if after.phi_entry > bound + 1e-9 * bound.abs() {
            return Some(format!(
                "step {}: potential {} exceeds the decrement bound {}",
                before.index, after.phi_entry, bound
            ));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{
        generate_instance, DemandKind, GraphSpec, Kind,
    };
    use crate::oracle::{brute_force_tree, exact_transshipment};

    fn single_edge(w_plus: f64, w_minus: f64) -> ArcSystem {
        ArcSystem::new(2, &[(0, 1, w_plus, w_minus)]).unwrap()
    }

    fn path_graph(weights: &[f64]) -> ArcSystem {
        let edges: Vec<(usize, usize, f64, f64)> = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| (i, i + 1, w, w))
            .collect();
        ArcSystem::new(weights.len() + 1, &edges).unwrap()
    }

    #[test]
    fn project_matches_the_arithmetic_examples() {
        let b = [-1.0, 1.0];
        let pi = [0.0, 1.0];
        assert_eq!(project(&pi, &b, &[1.0, 3.0]), vec![1.0, 1.0]);
        assert_eq!(project(&pi, &b, &pi), vec![0.0, 0.0]);
        assert_eq!(project(&pi, &b, &[2.0, 2.0]), vec![2.0, 2.0]);
    }

    #[test]
    fn projection_kills_the_demand_component() {
        let b = [-2.0, 1.0, 1.0];
        let pi = [0.0, 0.25, 0.75];
        assert!((dual_objective(&b, &pi) - 1.0).abs() < 1e-12);
        let ph = project(&pi, &b, &[0.3, -1.2, 2.2]);
        assert!(dual_objective(&b, &ph).abs() < 1e-12);
    }

    #[test]
    fn single_edge_solve_meets_the_guarantee() {
        let g = single_edge(1.0, 1.0);
        let b = [-1.0, 1.0];
        let oracle = DirectionOracle::exact(&g).unwrap();
        let result = solve(&g, &b, &oracle, &SolveOptions::new(0.5)).unwrap();
        assert!(result.value_dual >= 2.0 / 3.0 - 1e-9, "dual {}", result.value_dual);
        assert!(result.value_dual <= 1.0 + 1e-9);
        let primal = result.value_primal.unwrap();
        assert!(primal >= 1.0 - 1e-9);
        assert!(primal <= 1.5 * result.value_dual + 1e-7);
        let balance = g.balance(result.x.as_ref().unwrap());
        assert!((balance[0] + 1.0).abs() < 1e-9 && (balance[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn path_solve_tracks_the_brute_force_optimum() {
        let g = path_graph(&[2.0, 1.0, 3.0]);
        let b = [-2.0, 1.0, 0.0, 1.0];
        let opt = brute_force_tree(&g, &b).unwrap().value;
        assert!((opt - 8.0).abs() < 1e-9);
        let oracle = DirectionOracle::exact(&g).unwrap();
        let result = solve(&g, &b, &oracle, &SolveOptions::new(0.25)).unwrap();
        assert!(result.value_dual >= opt / 1.25 - 1e-9);
        assert!(result.value_dual <= opt + 1e-7);
        let primal = result.value_primal.unwrap();
        assert!(primal >= opt - 1e-7);
        assert!(primal <= 1.25 * result.value_dual + 1e-7);
    }

    #[test]
    fn traces_satisfy_the_decrement_and_stay_under_the_cap() {
        for seed in 0..6u64 {
            let spec = GraphSpec::new(Kind::RandomConnected, 8)
                .weights(1, 10)
                .extra_edges(6);
            let instance = generate_instance(&spec, DemandKind::Random, seed).unwrap();
            let g = &instance.graph;
            let opt = exact_transshipment(g, &instance.demand).unwrap().value;
            let oracle = DirectionOracle::exact(g).unwrap();
            for eps in [0.5, 0.25] {
                let result = solve(g, &instance.demand, &oracle, &SolveOptions::new(eps)).unwrap();
                assert!(
                    decrement_violation(&result.trace, eps, g.m()).is_none(),
                    "seed {seed} eps {eps}"
                );
                let cap = iteration_cap(g.m(), eps, 1.0, g.lambda());
                assert!(result.trace.len() <= cap);
                for record in &result.trace {
                    assert!(
                        record.dual_value <= opt * (1.0 + 1e-9) + 1e-9,
                        "iterate dual value {} above the optimum {opt}",
                        record.dual_value
                    );
                }
            }
        }
    }

    #[test]
    fn spanner_oracle_solves_within_its_ratio() {
        for seed in 20..24u64 {
            let spec = GraphSpec::new(Kind::RandomConnected, 12)
                .weights(1, 8)
                .extra_edges(10);
            let instance = generate_instance(&spec, DemandKind::Random, seed).unwrap();
            let g = &instance.graph;
            let opt = exact_transshipment(g, &instance.demand).unwrap().value;
            let oracle = DirectionOracle::with_spanner(g, 2).unwrap();
            let result = solve(g, &instance.demand, &oracle, &SolveOptions::new(0.5)).unwrap();
            assert!(result.value_dual <= opt + opt * 1e-9 + 1e-9);
            let primal = result.value_primal.unwrap();
            assert!(primal >= opt - opt * 1e-9 - 1e-9);
            assert!(primal <= 1.5 * result.value_dual + 1e-7);
        }
    }

    #[test]
    fn optimal_start_recovers_the_exact_primal() {
        let g = single_edge(1.0, 1.0);
        let b = [-1.0, 1.0];
        let pi = [0.0, 1.0];
        let report = potential::aggregates(&g, 2.0, &pi);
        let x2 = FlowVector::zero(1);
        let x = recover_primal(&g, &b, &pi, &report, &x2).unwrap();
        assert!((x.net(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iteration_cap_is_an_error_not_a_truncation() {
        let g = path_graph(&[1.0, 1.0]);
        let b = [-1.0, 0.0, 1.0];
        let oracle = DirectionOracle::exact(&g).unwrap();
        let pi0 = [-1.0, 2.0, 0.0];
        assert!((dual_objective(&b, &pi0) - 1.0).abs() < 1e-12);
        let (beta0, _) = potential::find_initial_beta(&g, 0.25, &pi0).unwrap();
        let mut cfg = DescentConfig::new(&g, 0.25, 1.0).unwrap();
        cfg.max_iterations = 0;
        let mut engine = DirectEngine::new(&g);
        let err = gradient_transshipment(&mut engine, &b, &pi0, beta0, &cfg, &oracle)
            .expect_err("cap 0 must fail on a suboptimal start");
        assert!(!err.is_input());
    }

    #[test]
    fn zero_demand_is_a_trivial_solve() {
        let g = path_graph(&[1.0, 2.0]);
        let oracle = DirectionOracle::exact(&g).unwrap();
        let result = solve(&g, &[0.0, 0.0, 0.0], &oracle, &SolveOptions::new(0.25)).unwrap();
        assert_eq!(result.trace.len(), 0);
        assert_eq!(result.value_dual, 0.0);
        assert_eq!(result.value_primal, Some(0.0));
    }

    #[test]
    fn symmetrized_start_matches_the_asymmetric_example() {
        let g = single_edge(4.0, 2.0);
        let b = [-1.0, 1.0];
        let oracle = DirectionOracle::exact(&g).unwrap();
        let pi0 = symmetrized_start(&g, &b, &oracle).unwrap();
        assert!((pi0[1] - pi0[0] - 1.0).abs() < 1e-12);
        let q0 = g.q_stretch(&pi0);
        assert!((q0 - 0.25).abs() < 1e-12);
        assert!((1.0 / q0 - 4.0).abs() < 1e-9);
    }

    #[test]
    fn symmetrized_start_rejects_zero_demand() {
        let g = single_edge(1.0, 1.0);
        let oracle = DirectionOracle::exact(&g).unwrap();
        let err = symmetrized_start(&g, &[0.0, 0.0], &oracle).unwrap_err();
        assert!(err.is_input());
    }

    #[test]
    fn sampling_a_path_support_returns_the_path() {
        let g = path_graph(&[1.0, 1.0]);
        let x1 = FlowVector::from_net(&[0.4, 0.4]);
        let tree = sample_tree(&g, &x1, 0.5, 7).unwrap();
        assert_eq!(tree.attempts, 1);
        let mut edges = tree.edges.clone();
        edges.sort_unstable();
        assert_eq!(edges, vec![0, 1]);
        assert!((tree.flow.net(0) - 0.4).abs() < 1e-12);
        assert!((tree.flow.net(1) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn sampling_a_diamond_splits_evenly() {
        let g = ArcSystem::new(
            4,
            &[
                (0, 1, 1.0, 1.0),
                (0, 2, 1.0, 1.0),
                (1, 3, 1.0, 1.0),
                (2, 3, 1.0, 1.0),
            ],
        )
        .unwrap();
        let x1 = FlowVector::from_net(&[0.25, 0.25, 0.25, 0.25]);
        let samples = 10_000;
        let mut left = 0usize;
        for seed in 0..samples {
            let tree = sample_tree(&g, &x1, 0.5, seed as u64).unwrap();
            assert_eq!(tree.attempts, 1);
            if tree.edges.contains(&2) {
                left += 1;
            } else {
                assert!(tree.edges.contains(&3));
            }
            let balance = g.balance(&tree.flow);
            assert!((balance[0] + 0.5).abs() < 1e-12);
            assert!((balance[3] - 0.5).abs() < 1e-12);
        }
        let frequency = left as f64 / samples as f64;
        assert!((frequency - 0.5).abs() <= 0.02, "frequency {frequency}");
    }

    #[test]
    fn sampling_zero_flow_returns_an_empty_forest() {
        let g = path_graph(&[1.0, 1.0]);
        let tree = sample_tree(&g, &FlowVector::zero(2), 0.25, 1).unwrap();
        assert!(tree.edges.is_empty());
        assert_eq!(tree.attempts, 1);
        assert!(tree.flow.net_vec().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sampling_rejects_cyclic_support() {
        let g = ArcSystem::new(
            3,
            &[(0, 1, 1.0, 1.0), (1, 2, 1.0, 1.0), (0, 2, 1.0, 1.0)],
        )
        .unwrap();
        let x1 = FlowVector::from_net(&[0.2, 0.2, -0.2]);
        let err = sample_tree(&g, &x1, 0.25, 1).unwrap_err();
        assert!(err.is_input());
    }

    #[test]
    fn sampling_exhausts_attempts_on_an_expensive_flow() {
        let g = path_graph(&[1.0, 1.0]);
        let x1 = FlowVector::from_net(&[2.0, 2.0]);
        let err = sample_tree(&g, &x1, 0.25, 1).unwrap_err();
        assert!(!err.is_input());
    }

    #[test]
    fn asymmetric_instances_solve_end_to_end() {
        for seed in 40..44u64 {
            let spec = GraphSpec::new(Kind::RandomConnected, 9)
                .weights(1, 12)
                .max_ratio(4.0)
                .extra_edges(8);
            let instance = generate_instance(&spec, DemandKind::Random, seed).unwrap();
            let g = &instance.graph;
            assert!(g.lambda() > 1.0, "seed {seed} should be asymmetric");
            let opt = exact_transshipment(g, &instance.demand).unwrap().value;
            let oracle = DirectionOracle::exact(g).unwrap();
            let eps = 0.25;
            let result = solve(g, &instance.demand, &oracle, &SolveOptions::new(eps)).unwrap();
            assert!(result.value_dual <= opt * (1.0 + 1e-9) + 1e-9);
            let primal = result.value_primal.unwrap();
            assert!(primal >= opt * (1.0 - 1e-9) - 1e-9);
            assert!(
                primal <= (1.0 + eps) * result.value_dual * (1.0 + 1e-6),
                "seed {seed}: primal {primal} vs dual {}",
                result.value_dual
            );
            assert!(decrement_violation(&result.trace, eps, g.m()).is_none());
        }
    }
}
