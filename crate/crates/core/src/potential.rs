//! Soft-max potential over arc stretches, its gradient aggregates, and the
//! search for the scale parameter `beta`.
//!
//! All engines (direct solver, clique simulator, stream simulator) evaluate
//! the potential through [`aggregates`], which fixes one numerical pipeline:
//! arc-indexed stretch slots, a single max shift, per-node pairwise sums in
//! arc order, and a pairwise sum over nodes. Fixing the summation tree makes
//! the three engines produce bit-identical floats regardless of how the
//! underlying model delivers the terms.

use crate::error::{Error, Result};
use crate::graph::{ArcSystem, FlowVector};

/// Sum of the positive parts of `v`.
pub fn p_norm(v: &[f64]) -> f64 {
    v.iter().map(|&x| x.max(0.0)).sum()
}

/// Maximum entry of `v`, clamped below at zero. Empty vectors yield zero.
pub fn q_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, &x| acc.max(x))
}

/// Sums `xs` by recursive halving. The summation tree depends only on the
/// slice length, so any producer that fills the slice in a fixed order gets
/// a reproducible result.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// Soft maximum `(1/beta) * ln(sum_i e^{beta * v_i})`, shifted by the
/// maximum entry before exponentiating so that `beta * v_i` magnitudes in
/// the thousands stay representable.
pub fn softmax(beta: f64, v: &[f64]) -> Result<f64> {
    assert!(beta > 0.0 && beta.is_finite(), "beta must be positive");
    if v.is_empty() {
        return Err(Error::input("soft-max of an empty vector is undefined"));
    }
    let max = v.iter().fold(f64::NEG_INFINITY, |acc, &x| acc.max(x));
    let shift = beta * max;
    let terms: Vec<f64> = v.iter().map(|&x| (beta * x - shift).exp()).collect();
    Ok(max + pairwise_sum(&terms).ln() / beta)
}

/// Gradient of [`softmax`] with respect to `v`: the probability weights
/// `e^{beta * v_i} / sum_j e^{beta * v_j}`.
pub fn softmax_gradient(beta: f64, v: &[f64]) -> Result<Vec<f64>> {
    assert!(beta > 0.0 && beta.is_finite(), "beta must be positive");
    if v.is_empty() {
        return Err(Error::input("soft-max of an empty vector is undefined"));
    }
    let max = v.iter().fold(f64::NEG_INFINITY, |acc, &x| acc.max(x));
    let shift = beta * max;
    let terms: Vec<f64> = v.iter().map(|&x| (beta * x - shift).exp()).collect();
    let sum = pairwise_sum(&terms);
    Ok(terms.into_iter().map(|t| t / sum).collect())
}

/// Shift-stable per-node and global exponential aggregates of the stretch
/// vector of `pi` at scale `beta`.
///
/// Every potential or gradient query in the solver and both simulators goes
/// through this one computation, which is the source of truth for the
/// simulators' message payloads.
#[derive(Debug, Clone)]
pub struct AggregateReport {
    pub beta: f64,
    /// Largest signed arc stretch.
    pub max_stretch: f64,
    /// `beta * max_stretch`, subtracted inside every exponential.
    pub shift: f64,
    /// `sum_a e^{beta * s_a - shift}` over all arc slots.
    pub sum_shifted: f64,
    /// Per head node: `sum_{arcs a with head v} e^{beta * s_a - shift}`.
    pub node_sums_shifted: Vec<f64>,
    /// Per node: signed weighted sums `sum_{head arcs} t_a / w_a - sum_{tail
    /// arcs} t_a / w_a` of the shifted terms `t_a`.
    pub node_grads_shifted: Vec<f64>,
    /// The shifted term of every arc slot, forward block first.
    pub arc_terms_shifted: Vec<f64>,
}

impl AggregateReport {
    /// Potential value `softmax(beta, stretches)`.
    pub fn potential(&self) -> f64 {
        self.max_stretch + self.sum_shifted.ln() / self.beta
    }

    /// Potential gradient with respect to the node potentials.
    pub fn gradient(&self) -> Vec<f64> {
        self.node_grads_shifted
            .iter()
            .map(|g| g / self.sum_shifted)
            .collect()
    }

    /// Soft-max gradient over arc slots; entries are positive and sum to
    /// (numerically) one.
    pub fn lse_gradient(&self) -> Vec<f64> {
        self.arc_terms_shifted
            .iter()
            .map(|t| t / self.sum_shifted)
            .collect()
    }

    /// Largest signed stretch clamped at zero, the dual normalizer.
    pub fn q_stretch(&self) -> f64 {
        self.max_stretch.max(0.0)
    }

    /// The flow each arc carries under the soft-max weighting: the arc's
    /// share of the gradient divided by its cost. Routing this flow
    /// reproduces the potential gradient as node balances.
    pub fn soft_flow(&self, g: &ArcSystem) -> FlowVector {
        let m = g.m();
        let mut flow = FlowVector::zero(m);
        for (i, e) in g.edges().iter().enumerate() {
            flow.forward[i] = self.arc_terms_shifted[i] / self.sum_shifted / e.w_plus;
            flow.backward[i] = self.arc_terms_shifted[m + i] / self.sum_shifted / e.w_minus;
        }
        flow
    }
}

/// Computes the canonical aggregates for potentials `pi` at scale `beta`.
pub fn aggregates(g: &ArcSystem, beta: f64, pi: &[f64]) -> AggregateReport {
    aggregates_from_slots(g, beta, &g.stretches(pi))
}

/// Computes the canonical aggregates from arc-indexed stretch slots, forward
/// block first, as produced by [`ArcSystem::stretches`]. Engines that visit
/// edges in a different order must still fill the slots by arc index; the
/// summation tree reads them positionally, which is what keeps results
/// identical across delivery orders.
pub fn aggregates_from_slots(g: &ArcSystem, beta: f64, stretches: &[f64]) -> AggregateReport {
    assert!(beta > 0.0 && beta.is_finite(), "beta must be positive");
    assert!(g.m() > 0, "potential needs at least one edge");
    let two_m = g.num_arcs();
    assert_eq!(stretches.len(), two_m, "one stretch slot per arc");
    let max_stretch = stretches.iter().fold(f64::NEG_INFINITY, |acc, &x| acc.max(x));
    let shift = beta * max_stretch;
    let terms: Vec<f64> = stretches.iter().map(|&s| (beta * s - shift).exp()).collect();

    let mut head_lists: Vec<Vec<f64>> = vec![Vec::new(); g.n()];
    let mut grad_lists: Vec<Vec<f64>> = vec![Vec::new(); g.n()];
    for (a, &term) in terms.iter().enumerate().take(two_m) {
        let weighted = term / g.arc_weight(a);
        head_lists[g.arc_head(a)].push(term);
        grad_lists[g.arc_head(a)].push(weighted);
        grad_lists[g.arc_tail(a)].push(-weighted);
    }
    let node_sums_shifted: Vec<f64> = head_lists.iter().map(|l| pairwise_sum(l)).collect();
    let node_grads_shifted: Vec<f64> = grad_lists.iter().map(|l| pairwise_sum(l)).collect();
    let sum_shifted = pairwise_sum(&node_sums_shifted);

    AggregateReport {
        beta,
        max_stretch,
        shift,
        sum_shifted,
        node_sums_shifted,
        node_grads_shifted,
        arc_terms_shifted: terms,
    }
}

/// Potential value at `pi`: soft maximum of the arc stretches.
pub fn potential(g: &ArcSystem, beta: f64, pi: &[f64]) -> f64 {
    aggregates(g, beta, pi).potential()
}

/// Potential gradient and the aggregate report it came from.
pub fn gradient(g: &ArcSystem, beta: f64, pi: &[f64]) -> (Vec<f64>, AggregateReport) {
    let report = aggregates(g, beta, pi);
    (report.gradient(), report)
}

/// Per-arc soft-max flow at `pi` (see [`AggregateReport::soft_flow`]).
pub fn soft_flow(g: &ArcSystem, beta: f64, pi: &[f64]) -> FlowVector {
    aggregates(g, beta, pi).soft_flow(g)
}

/// Cap on bracketing and bisection steps in [`find_initial_beta`].
const BETA_SEARCH_CAP: usize = 200;

/// Finds `beta` with `4 ln(2m) < eps * beta * potential(beta) <= 5 ln(2m)`.
///
/// Returns the scale and the number of potential evaluations spent. The
/// window always exists for non-constant `pi`: `eps * beta * potential` is
/// `eps * ln(sum_a e^{beta * s_a})`, a convex function of `beta` that starts
/// at `eps * ln(2m)` below the window and grows linearly once `beta` is
/// large, so its sublevel sets are intervals and doubling plus bisection
/// lands inside.
pub fn find_initial_beta(g: &ArcSystem, eps: f64, pi: &[f64]) -> Result<(f64, usize)> {
    if g.q_stretch(pi) == 0.0 {
        return Err(Error::numeric(
            "degenerate potential: every arc stretch is zero, so no scale reaches the window",
        ));
    }
    let ln_2m = (g.num_arcs() as f64).ln();
    find_initial_beta_with(eps, ln_2m, |beta| potential(g, beta, pi))
}

/// Window search over an abstract potential evaluator; the simulators pass
/// closures that additionally charge rounds or passes per evaluation.
/// `phi` must be the potential at the candidate scale, computed through
/// [`aggregates`]. The caller is responsible for ruling out the degenerate
/// all-zero-stretch case, where no window exists.
pub fn find_initial_beta_with(
    eps: f64,
    ln_2m: f64,
    mut phi: impl FnMut(f64) -> f64,
) -> Result<(f64, usize)> {
    assert!(eps > 0.0 && eps.is_finite(), "eps must be positive");
    let low_target = 4.0 * ln_2m;
    let high_target = 5.0 * ln_2m;
    let mut evals = 0usize;
    let mut value = |beta: f64, evals: &mut usize| -> f64 {
        *evals += 1;
        eps * beta * phi(beta)
    };
    let fail = || Error::numeric("could not locate the soft-max scale window");

    let mut beta = 1.0;
    let mut g_beta = value(beta, &mut evals);
    if g_beta > low_target && g_beta <= high_target {
        return Ok((beta, evals));
    }

    let (mut lo, mut hi);
    if g_beta <= low_target {
        loop {
            let next = beta * 2.0;
            let g_next = value(next, &mut evals);
            if g_next > low_target {
                if g_next <= high_target {
                    return Ok((next, evals));
                }
                lo = beta;
                hi = next;
                break;
            }
            beta = next;
            if evals > BETA_SEARCH_CAP {
                return Err(fail());
            }
        }
    } else {
        loop {
            let next = beta / 2.0;
            let g_next = value(next, &mut evals);
            if g_next <= low_target {
                lo = next;
                hi = beta;
                break;
            }
            if g_next <= high_target {
                return Ok((next, evals));
            }
            beta = next;
            g_beta = g_next;
            if evals > BETA_SEARCH_CAP {
                return Err(fail());
            }
        }
        let _ = g_beta;
    }

    for _ in 0..BETA_SEARCH_CAP {
        let mid = 0.5 * (lo + hi);
        let g_mid = value(mid, &mut evals);
        if g_mid > low_target {
            if g_mid <= high_target {
                return Ok((mid, evals));
            }
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(fail())
}
