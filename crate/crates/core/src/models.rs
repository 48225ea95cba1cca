//! Cost-accounting simulators for two distributed disciplines: the
//! broadcast congested clique and multipass streaming.
//!
//! Both simulators replay [`crate::descent::solve_with_engine`] through an
//! [`Engine`] that meters every graph touch, so the arithmetic is the exact
//! code path of the direct solver and the traces match it bit for bit. What
//! differs is the bookkeeping: the clique engine logs synchronous broadcast
//! rounds of at most two words per node, the stream engine logs sequential
//! passes over an edge stream whose delivery order is shuffled per seed and
//! whose working memory is charged against a words budget.
//!
//! The round and pass schedules lean on one structural fact: once the
//! demand vector and the spanner are known everywhere, every node can
//! replay the oracle and the potential update locally, so interaction is
//! only needed for quantities that mix privately held edges. Those are the
//! per-node term sums of the potential, the gradient sums, and the stretch
//! maxima, each of which fits in a one- or two-word broadcast or a single
//! streaming pass.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::descent::{
    solve_with_engine, Engine, EvalKind, SolveOptions, SolveResult, StretchNorms,
};
use crate::error::{Error, Result};
use crate::graph::{ArcSystem, Edge};
use crate::oracle::DirectionOracle;
use crate::potential::{self, AggregateReport};

/// Ceiling of `log2 n`, at least one.
fn ceil_log2(n: usize) -> usize {
    (usize::BITS - n.max(2).next_power_of_two().leading_zeros()) as usize - 1
}

// ---------------------------------------------------------------------------
// Broadcast congested clique
// ---------------------------------------------------------------------------

/// One synchronous broadcast round, identified by what every node says.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundKind {
    /// Each node announces its demand entry; afterwards every node can
    /// replay the oracle start locally.
    Demand,
    /// Local extreme stretch at the start potentials, fixing the shared
    /// exponent shift for the beta window search.
    WindowScale,
    /// Per-node term sum under one trial beta of the window search.
    WindowPhi,
    /// Local extreme stretch and local potential-stretch maximum at the
    /// current iterate, fixing the shift and the first of the three norms.
    PhiScale,
    /// The pair of per-node term and gradient sums; afterwards every node
    /// knows the potential, the full gradient, and hence the direction.
    GradientSums,
    /// Per-node term sum under the rescaled beta; the shift reuses the
    /// extreme stretch already exchanged for this iterate.
    RescalePhi,
    /// Local stretch maxima of the oracle direction and its projection.
    NormReduce,
    /// Local one-sided stretch maximum of the terminal potentials.
    TerminalNorm,
    /// Each node announces its normalized potential entry.
    Output,
}

/// Words a single node broadcasts in a round of this kind.
fn round_words(kind: RoundKind) -> usize {
    match kind {
        RoundKind::Demand
        | RoundKind::WindowScale
        | RoundKind::WindowPhi
        | RoundKind::RescalePhi
        | RoundKind::TerminalNorm
        | RoundKind::Output => 1,
        RoundKind::PhiScale | RoundKind::GradientSums | RoundKind::NormReduce => 2,
    }
}

/// Round ledger of one clique simulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueAccounting {
    /// Total broadcast rounds including spanner construction.
    pub rounds: usize,
    /// Largest per-node broadcast in any round, in machine words.
    pub per_round_words: usize,
    /// Demand dissemination plus the beta window search.
    pub setup_rounds: usize,
    /// Rounds spent making the spanner known to every node.
    pub spanner_rounds: usize,
    /// Descent iterations, terminal iteration included.
    pub iterations: usize,
    /// Beta rescales across the run.
    pub rescales: usize,
}

impl CliqueAccounting {
    /// The round contract: two-word broadcasts, three rounds per iteration,
    /// one per rescale, and two terminal rounds.
    pub fn formula_holds(&self) -> bool {
        self.per_round_words <= 2
            && self.rounds
                == self.setup_rounds + self.spanner_rounds + 3 * self.iterations + self.rescales + 2
    }
}

/// Replays the descent directly while logging the broadcast schedule.
pub struct CliqueEngine<'a> {
    g: &'a ArcSystem,
    log: Vec<RoundKind>,
    window_scaled: bool,
    beta_evals: usize,
}

impl<'a> CliqueEngine<'a> {
    pub fn new(g: &'a ArcSystem) -> Self {
        CliqueEngine {
            g,
            log: vec![RoundKind::Demand],
            window_scaled: false,
            beta_evals: 0,
        }
    }

    pub fn rounds(&self) -> &[RoundKind] {
        &self.log
    }
}

impl Engine for CliqueEngine<'_> {
    fn graph(&self) -> &ArcSystem {
        self.g
    }

    fn aggregates(&mut self, beta: f64, pi: &[f64], kind: EvalKind) -> AggregateReport {
        match kind {
            EvalKind::BetaInit => {
                if !self.window_scaled {
                    self.log.push(RoundKind::WindowScale);
                    self.window_scaled = true;
                }
                self.log.push(RoundKind::WindowPhi);
                self.beta_evals += 1;
            }
            EvalKind::Entry => {
                self.log.push(RoundKind::PhiScale);
                self.log.push(RoundKind::GradientSums);
            }
            EvalKind::Rescale => self.log.push(RoundKind::RescalePhi),
        }
        potential::aggregates(self.g, beta, pi)
    }

    fn stretch_norms(&mut self, pi: &[f64], h: &[f64], ph: &[f64]) -> StretchNorms {
        self.log.push(RoundKind::NormReduce);
        StretchNorms {
            pi_norm: self.g.inf_norm_stretch(pi),
            direction_norm: self.g.inf_norm_stretch(h),
            projected_norm: self.g.inf_norm_stretch(ph),
        }
    }

    fn terminal_q(&mut self, pi: &[f64]) -> f64 {
        self.log.push(RoundKind::TerminalNorm);
        self.g.q_stretch(pi)
    }
}

/// Runs the solver with a spanner oracle of parameter `k` under the
/// broadcast-clique discipline and reports the round ledger alongside the
/// (bit-identical) solve result.
pub fn simulate_clique(
    g: &ArcSystem,
    b: &[f64],
    eps: f64,
    k: usize,
) -> Result<(SolveResult, CliqueAccounting)> {
    if b.iter().all(|&x| x == 0.0) {
        return Err(Error::input("demand is identically zero; nothing to meter"));
    }
    let oracle = DirectionOracle::with_spanner(g, k)?;
    let spanner_rounds = oracle.spanner.as_ref().map_or(0, |sp| sp.rounds);

    let mut engine = CliqueEngine::new(g);
    let mut opts = SolveOptions::new(eps);
    opts.want_primal = false;
    let result = solve_with_engine(&mut engine, b, &oracle, &opts)?;
    engine.log.push(RoundKind::Output);

    debug_assert_eq!(engine.beta_evals, result.beta_evals);
    let accounting = CliqueAccounting {
        rounds: engine.log.len() + spanner_rounds,
        per_round_words: engine.log.iter().copied().map(round_words).max().unwrap_or(0),
        setup_rounds: 2 + result.beta_evals,
        spanner_rounds,
        iterations: result.trace.len(),
        rescales: result.rescales,
    };
    debug_assert!(accounting.formula_holds());
    Ok((result, accounting))
}

// ---------------------------------------------------------------------------
// Multipass streaming
// ---------------------------------------------------------------------------

/// One pass over the edge stream, identified by what it computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassKind {
    /// Edge count, cost extremes, and asymmetry before the run.
    Stats,
    /// Stretch slots at the start potentials, kept across the beta window
    /// search because only beta varies there.
    Window,
    /// Stretch slots for one fused potential-and-gradient evaluation.
    Aggregates,
    /// Stretch slots for a potential evaluation with fusion disabled.
    Potential,
    /// Stretch slots for the gradient with fusion disabled.
    Gradient,
    /// Stretch slots for a re-evaluation after a beta rescale.
    Rescale,
    /// The three stretch maxima of one iteration.
    Norms,
    /// One-sided stretch maximum of the terminal potentials.
    Terminal,
}

/// Knobs of the streaming simulation.
#[derive(Debug, Clone)]
pub struct StreamConfig {
    /// Seed for the adversarial shuffle of edge delivery order.
    pub shuffle_seed: u64,
    /// Compute potential and gradient in one pass; disabling it charges
    /// separate passes for the two, with identical arithmetic.
    pub fuse_passes: bool,
    /// Overrides the words budget of `16 * n * ceil(log2 n)`.
    pub budget_words: Option<usize>,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            shuffle_seed: 0,
            fuse_passes: true,
            budget_words: None,
        }
    }
}

/// Edge stream that only yields edges inside a declared pass.
///
/// Delivery order is a seeded shuffle of the edge indices, fixed for the
/// stream's lifetime. Reading edges without an open pass is a bug in the
/// caller, not an input condition, so it panics.
pub struct GuardedEdgeStream<'a> {
    g: &'a ArcSystem,
    order: Vec<usize>,
    open: Option<PassKind>,
    log: Vec<PassKind>,
}

impl<'a> GuardedEdgeStream<'a> {
    pub fn new(g: &'a ArcSystem, shuffle_seed: u64) -> Self {
        let mut order: Vec<usize> = (0..g.m()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        GuardedEdgeStream {
            g,
            order,
            open: None,
            log: Vec::new(),
        }
    }

    pub fn open_pass(&mut self, kind: PassKind) {
        assert!(
            self.open.is_none(),
            "pass {kind:?} opened while {:?} is still active",
            self.open
        );
        self.open = Some(kind);
    }

    pub fn close_pass(&mut self) {
        let kind = self.open.take().expect("closing a pass that was never opened");
        self.log.push(kind);
    }

    /// Streams every edge once, in the shuffled order, with its index.
    pub fn for_each_edge(&self, mut f: impl FnMut(usize, Edge)) {
        assert!(
            self.open.is_some(),
            "edge access outside a declared pass"
        );
        for &i in &self.order {
            f(i, self.g.edge(i));
        }
    }

    /// Completed passes in order.
    pub fn passes(&self) -> &[PassKind] {
        &self.log
    }
}

/// Running words counter with a separate permanent component.
#[derive(Debug, Default)]
struct SpaceMeter {
    permanent: usize,
    current: usize,
    peak: usize,
}

impl SpaceMeter {
    fn charge_permanent(&mut self, words: usize) {
        self.permanent += words;
    }

    fn alloc(&mut self, words: usize) {
        self.current += words;
        self.peak = self.peak.max(self.current);
    }

    fn release(&mut self, words: usize) {
        debug_assert!(words <= self.current, "releasing more than allocated");
        self.current -= words;
    }
}

/// Pass ledger of one streaming simulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamAccounting {
    /// Total passes including spanner construction.
    pub passes: usize,
    /// Passes spent building the spanner.
    pub spanner_passes: usize,
    /// Words held across passes: demand, potentials, spanner edge records.
    pub permanent_words: usize,
    /// Largest transient footprint of any pass.
    pub peak_temporary_words: usize,
    /// Budget the permanent and peak words are held against.
    pub budget_words: usize,
    /// Descent iterations, terminal iteration included.
    pub iterations: usize,
    /// Beta rescales across the run.
    pub rescales: usize,
    /// Whether potential and gradient shared a pass.
    pub fused: bool,
}

impl StreamAccounting {
    /// The pass contract: two passes per iteration when fused, three when
    /// not, one per rescale, and three fixed passes for stats, the beta
    /// window, and the terminal norm.
    pub fn formula_holds(&self) -> bool {
        let per_iteration = if self.fused { 2 } else { 3 };
        self.passes
            == self.spanner_passes + per_iteration * self.iterations + self.rescales + 3
    }

    pub fn within_budget(&self) -> bool {
        self.permanent_words + self.peak_temporary_words <= self.budget_words
    }
}

/// Replays the descent against a guarded edge stream, filling arc-indexed
/// stretch slots inside declared passes and reducing them with the same
/// fixed summation tree as the direct solver, so shuffled delivery cannot
/// perturb a single bit.
pub struct StreamEngine<'a> {
    g: &'a ArcSystem,
    stream: GuardedEdgeStream<'a>,
    meter: SpaceMeter,
    fuse: bool,
    /// Start potentials and their stretch slots, alive for the beta window
    /// search only.
    window: Option<(Vec<f64>, Vec<f64>)>,
    report_words: usize,
    iteration_words: usize,
}

impl<'a> StreamEngine<'a> {
    pub fn new(g: &'a ArcSystem, cfg: &StreamConfig) -> Self {
        StreamEngine {
            g,
            stream: GuardedEdgeStream::new(g, cfg.shuffle_seed),
            meter: SpaceMeter::default(),
            fuse: cfg.fuse_passes,
            window: None,
            report_words: 0,
            iteration_words: 0,
        }
    }

    pub fn passes(&self) -> &[PassKind] {
        self.stream.passes()
    }

    /// One pass that records edge count and cost extremes, standing in for
    /// every whole-graph scalar the solver configuration reads.
    fn stats_pass(&mut self) {
        self.stream.open_pass(PassKind::Stats);
        let mut edges = 0usize;
        let mut max_weight = 0.0f64;
        self.stream.for_each_edge(|_, e| {
            edges += 1;
            max_weight = max_weight.max(e.w_plus);
        });
        self.stream.close_pass();
        debug_assert_eq!(edges, self.g.m());
    }

    /// Fills arc-indexed stretch slots from the open pass. Slot `i` holds
    /// the forward stretch of edge `i` and slot `m + i` the backward one,
    /// so the values land where [`ArcSystem::stretches`] would put them no
    /// matter the delivery order.
    fn fill_slots(&self, pi: &[f64]) -> Vec<f64> {
        let m = self.g.m();
        let mut slots = vec![0.0; 2 * m];
        self.stream.for_each_edge(|i, e| {
            slots[i] = (pi[e.v] - pi[e.u]) / e.w_plus;
            slots[m + i] = (pi[e.u] - pi[e.v]) / e.w_minus;
        });
        slots
    }

    /// Reduces filled slots with the shared summation code, charging the
    /// builder working set and the report that replaces the previous one.
    fn reduce_slots(&mut self, beta: f64, slots: &[f64]) -> AggregateReport {
        let (n, m) = (self.g.n(), self.g.m());
        let working = 6 * m + 2 * n;
        self.meter.alloc(working);
        let report = potential::aggregates_from_slots(self.g, beta, slots);
        let report_words = 2 * m + 2 * n;
        self.meter.alloc(report_words);
        self.meter.release(self.report_words);
        self.report_words = report_words;
        self.meter.release(working);
        report
    }

    fn drop_window(&mut self) {
        if self.window.take().is_some() {
            self.meter
                .release(2 * self.g.m() + self.g.n());
        }
    }
}

impl Engine for StreamEngine<'_> {
    fn graph(&self) -> &ArcSystem {
        self.g
    }

    fn aggregates(&mut self, beta: f64, pi: &[f64], kind: EvalKind) -> AggregateReport {
        let (n, m) = (self.g.n(), self.g.m());
        let slot_words = 2 * m;
        match kind {
            EvalKind::BetaInit => {
                // The window search varies beta at fixed potentials, so the
                // slots from one pass serve every evaluation in it.
                let cached = self
                    .window
                    .as_ref()
                    .is_some_and(|(held, _)| held.as_slice() == pi);
                if !cached {
                    self.drop_window();
                    self.stream.open_pass(PassKind::Window);
                    self.meter.alloc(slot_words + n);
                    let slots = self.fill_slots(pi);
                    self.stream.close_pass();
                    self.window = Some((pi.to_vec(), slots));
                }
                let (held, slots) = self.window.take().expect("window slots present");
                let report = self.reduce_slots(beta, &slots);
                self.window = Some((held, slots));
                report
            }
            EvalKind::Entry => {
                self.drop_window();
                // Direction, projection, and step vectors of the iteration
                // about to run, replacing the previous iteration's.
                self.meter.release(self.iteration_words);
                self.iteration_words = 6 * n;
                self.meter.alloc(self.iteration_words);
                let slots = if self.fuse {
                    self.stream.open_pass(PassKind::Aggregates);
                    self.meter.alloc(slot_words);
                    let slots = self.fill_slots(pi);
                    self.stream.close_pass();
                    slots
                } else {
                    self.stream.open_pass(PassKind::Potential);
                    self.meter.alloc(slot_words);
                    let first = self.fill_slots(pi);
                    self.stream.close_pass();
                    self.meter.release(slot_words);
                    drop(first);
                    self.stream.open_pass(PassKind::Gradient);
                    self.meter.alloc(slot_words);
                    let slots = self.fill_slots(pi);
                    self.stream.close_pass();
                    slots
                };
                let report = self.reduce_slots(beta, &slots);
                self.meter.release(slot_words);
                report
            }
            EvalKind::Rescale => {
                self.stream.open_pass(PassKind::Rescale);
                self.meter.alloc(slot_words);
                let slots = self.fill_slots(pi);
                self.stream.close_pass();
                let report = self.reduce_slots(beta, &slots);
                self.meter.release(slot_words);
                report
            }
        }
    }

    fn stretch_norms(&mut self, pi: &[f64], h: &[f64], ph: &[f64]) -> StretchNorms {
        self.stream.open_pass(PassKind::Norms);
        let mut pi_norm = 0.0f64;
        let mut direction_norm = 0.0f64;
        let mut projected_norm = 0.0f64;
        self.stream.for_each_edge(|_, e| {
            pi_norm = pi_norm.max((pi[e.v] - pi[e.u]).abs() / e.w_minus);
            direction_norm = direction_norm.max((h[e.v] - h[e.u]).abs() / e.w_minus);
            projected_norm = projected_norm.max((ph[e.v] - ph[e.u]).abs() / e.w_minus);
        });
        self.stream.close_pass();
        StretchNorms {
            pi_norm,
            direction_norm,
            projected_norm,
        }
    }

    fn terminal_q(&mut self, pi: &[f64]) -> f64 {
        self.stream.open_pass(PassKind::Terminal);
        let mut q = 0.0f64;
        self.stream.for_each_edge(|_, e| {
            let d = pi[e.v] - pi[e.u];
            q = q.max(d / e.w_plus).max(-d / e.w_minus);
        });
        self.stream.close_pass();
        q
    }
}

/// Runs the solver with a spanner oracle of parameter `k` under the
/// multipass-streaming discipline and reports the pass and space ledger
/// alongside the (bit-identical) solve result.
pub fn simulate_stream(
    g: &ArcSystem,
    b: &[f64],
    eps: f64,
    k: usize,
    cfg: &StreamConfig,
) -> Result<(SolveResult, StreamAccounting)> {
    if b.iter().all(|&x| x == 0.0) {
        return Err(Error::input("demand is identically zero; nothing to meter"));
    }
    let oracle = DirectionOracle::with_spanner(g, k)?;
    let spanner = oracle.spanner.as_ref().expect("spanner oracle carries its construction record");
    let spanner_passes = spanner.passes;
    let spanner_words = 4 * spanner.edges.len();

    let mut engine = StreamEngine::new(g, cfg);
    engine.meter.charge_permanent(2 * g.n() + spanner_words);
    engine.stats_pass();
    let mut opts = SolveOptions::new(eps);
    opts.want_primal = false;
    let result = solve_with_engine(&mut engine, b, &oracle, &opts)?;

    let budget_words = cfg
        .budget_words
        .unwrap_or_else(|| 16 * g.n() * ceil_log2(g.n()));
    let accounting = StreamAccounting {
        passes: engine.stream.log.len() + spanner_passes,
        spanner_passes,
        permanent_words: engine.meter.permanent,
        peak_temporary_words: engine.meter.peak,
        budget_words,
        iterations: result.trace.len(),
        rescales: result.rescales,
        fused: cfg.fuse_passes,
    };
    debug_assert!(accounting.formula_holds());
    if !accounting.within_budget() {
        return Err(Error::numeric(format!(
            "streaming space budget exceeded: {} permanent + {} peak words over {}",
            accounting.permanent_words, accounting.peak_temporary_words, accounting.budget_words
        )));
    }
    Ok((result, accounting))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descent::{solve, IterationRecord};
    use crate::generate::{generate_instance, DemandKind, GraphSpec, Kind};

    fn random_instance(n: usize, extra: usize, seed: u64) -> crate::graph::Instance {
        let spec = GraphSpec::new(Kind::RandomConnected, n)
            .weights(1, 20)
            .extra_edges(extra);
        generate_instance(&spec, DemandKind::Random, seed).unwrap()
    }

    fn assert_bit_identical(a: &SolveResult, b: &SolveResult) {
        assert_eq!(a.value_dual.to_bits(), b.value_dual.to_bits());
        assert_eq!(a.beta_final.to_bits(), b.beta_final.to_bits());
        assert_eq!(a.y.len(), b.y.len());
        for (x, y) in a.y.iter().zip(&b.y) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.trace.len(), b.trace.len());
        for (r, s) in a.trace.iter().zip(&b.trace) {
            assert_record_eq(r, s);
        }
    }

    fn assert_record_eq(r: &IterationRecord, s: &IterationRecord) {
        assert_eq!(r.index, s.index);
        assert_eq!(r.beta.to_bits(), s.beta.to_bits());
        assert_eq!(r.phi_entry.to_bits(), s.phi_entry.to_bits());
        assert_eq!(r.phi.to_bits(), s.phi.to_bits());
        assert_eq!(r.delta.to_bits(), s.delta.to_bits());
        assert_eq!(r.dual_value.to_bits(), s.dual_value.to_bits());
        assert_eq!(r.rescales, s.rescales);
    }

    fn direct_reference(inst: &crate::graph::Instance, eps: f64, k: usize) -> SolveResult {
        let oracle = DirectionOracle::with_spanner(&inst.graph, k).unwrap();
        let mut opts = SolveOptions::new(eps);
        opts.want_primal = false;
        solve(&inst.graph, &inst.demand, &oracle, &opts).unwrap()
    }

    #[test]
    fn clique_matches_the_direct_solver_exactly() {
        let inst = random_instance(12, 6, 3);
        let (sim, _) = simulate_clique(&inst.graph, &inst.demand, 0.5, 2).unwrap();
        let direct = direct_reference(&inst, 0.5, 2);
        assert_bit_identical(&sim, &direct);
    }

    #[test]
    fn clique_round_formula_recomputed_from_trace() {
        let inst = random_instance(16, 8, 11);
        let (result, acct) = simulate_clique(&inst.graph, &inst.demand, 0.5, 2).unwrap();
        assert!(acct.formula_holds());
        assert_eq!(acct.per_round_words, 2);
        assert_eq!(acct.iterations, result.trace.len());
        assert_eq!(acct.rescales, result.rescales);
        assert_eq!(acct.setup_rounds, 2 + result.beta_evals);
        assert_eq!(
            acct.rounds,
            acct.setup_rounds + acct.spanner_rounds + 3 * result.trace.len() + result.rescales + 2
        );
    }

    #[test]
    fn spanner_rounds_stay_within_the_budget() {
        for (n, seed) in [(16usize, 5u64), (33, 6), (60, 7)] {
            let inst = random_instance(n, n / 2, seed);
            for k in [2usize, 3] {
                let oracle = DirectionOracle::with_spanner(&inst.graph, k).unwrap();
                let sp = oracle.spanner.unwrap();
                let budget =
                    16.0 * k as f64 * (n as f64).powf(1.0 / k as f64) * ceil_log2(n) as f64;
                assert!(
                    (sp.rounds as f64) <= budget,
                    "n={n} k={k}: {} rounds over budget {budget}",
                    sp.rounds
                );
            }
        }
    }

    #[test]
    fn stream_matches_the_direct_solver_exactly() {
        let inst = random_instance(12, 6, 3);
        let cfg = StreamConfig::default();
        let (sim, _) = simulate_stream(&inst.graph, &inst.demand, 0.5, 2, &cfg).unwrap();
        let direct = direct_reference(&inst, 0.5, 2);
        assert_bit_identical(&sim, &direct);
    }

    #[test]
    fn stream_pass_formula_recomputed_from_trace() {
        let inst = random_instance(14, 7, 9);
        let cfg = StreamConfig::default();
        let (result, acct) = simulate_stream(&inst.graph, &inst.demand, 0.5, 2, &cfg).unwrap();
        assert!(acct.formula_holds());
        assert_eq!(
            acct.passes,
            acct.spanner_passes + 2 * result.trace.len() + result.rescales + 3
        );
    }

    #[test]
    fn separate_potential_and_gradient_passes_count_three_per_iteration() {
        let inst = random_instance(10, 5, 21);
        let fused = StreamConfig::default();
        let split = StreamConfig {
            fuse_passes: false,
            ..StreamConfig::default()
        };
        let (a, acct_fused) = simulate_stream(&inst.graph, &inst.demand, 0.5, 2, &fused).unwrap();
        let (b, acct_split) = simulate_stream(&inst.graph, &inst.demand, 0.5, 2, &split).unwrap();
        assert_bit_identical(&a, &b);
        assert!(acct_split.formula_holds());
        assert_eq!(
            acct_split.passes,
            acct_split.spanner_passes + 3 * b.trace.len() + b.rescales + 3
        );
        assert_eq!(
            acct_split.passes,
            acct_fused.passes + acct_fused.iterations
        );
    }

    #[test]
    fn shuffled_delivery_never_perturbs_the_result() {
        let inst = random_instance(11, 6, 17);
        let base = simulate_stream(&inst.graph, &inst.demand, 0.25, 2, &StreamConfig::default())
            .unwrap()
            .0;
        for seed in [1u64, 7, 13] {
            let cfg = StreamConfig {
                shuffle_seed: seed,
                ..StreamConfig::default()
            };
            let (run, _) = simulate_stream(&inst.graph, &inst.demand, 0.25, 2, &cfg).unwrap();
            assert_bit_identical(&run, &base);
        }
    }

    #[test]
    #[should_panic(expected = "outside a declared pass")]
    fn edge_access_outside_a_pass_panics() {
        let inst = random_instance(6, 2, 1);
        let stream = GuardedEdgeStream::new(&inst.graph, 0);
        stream.for_each_edge(|_, _| {});
    }

    #[test]
    fn permanent_words_follow_the_spanner_size() {
        let inst = random_instance(24, 12, 8);
        let oracle = DirectionOracle::with_spanner(&inst.graph, 2).unwrap();
        let sp = oracle.spanner.unwrap();
        let cfg = StreamConfig::default();
        let (_, acct) = simulate_stream(&inst.graph, &inst.demand, 0.5, 2, &cfg).unwrap();
        assert_eq!(acct.permanent_words, 2 * inst.graph.n() + 4 * sp.edges.len());
        assert!((sp.edges.len() as f64) <= sp.size_bound);
        assert!(acct.within_budget());
        assert!(acct.peak_temporary_words > 0);
    }

    #[test]
    fn tight_budget_is_reported_as_an_error() {
        let inst = random_instance(10, 5, 4);
        let cfg = StreamConfig {
            budget_words: Some(10),
            ..StreamConfig::default()
        };
        let err = simulate_stream(&inst.graph, &inst.demand, 0.5, 2, &cfg).unwrap_err();
        assert!(!err.is_input());
        assert!(err.to_string().contains("budget"));
    }

    #[test]
    fn zero_demand_is_rejected_by_both_simulators() {
        let inst = random_instance(8, 3, 2);
        let zero = vec![0.0; inst.graph.n()];
        assert!(simulate_clique(&inst.graph, &zero, 0.5, 2).unwrap_err().is_input());
        let cfg = StreamConfig::default();
        assert!(simulate_stream(&inst.graph, &zero, 0.5, 2, &cfg)
            .unwrap_err()
            .is_input());
    }
}
