//! Deterministic instance generators for tests and experiment batteries.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{ArcSystem, Instance};

/// Graph family to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Path,
    Star,
    Grid,
    RandomConnected,
}

impl std::str::FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(Kind::Path),
            "star" => Ok(Kind::Star),
            "grid" => Ok(Kind::Grid),
            "random-connected" => Ok(Kind::RandomConnected),
            other => Err(Error::input(format!("unknown graph kind `{other}`"))),
        }
    }
}

/// Shape and weight parameters for a generated graph.
#[derive(Debug, Clone)]
pub struct GraphSpec {
    pub kind: Kind,
    pub n: usize,
    /// Inclusive integer cost range.
    pub weight_range: (u64, u64),
    /// Cap on per-edge cost asymmetry; `1.0` generates symmetric costs.
    pub max_ratio: f64,
    /// Extra non-tree edges for [`Kind::RandomConnected`]; ignored otherwise.
    pub extra_edges: usize,
}

impl GraphSpec {
    pub fn new(kind: Kind, n: usize) -> Self {
        GraphSpec { kind, n, weight_range: (1, 20), max_ratio: 1.0, extra_edges: 0 }
    }

    pub fn weights(mut self, low: u64, high: u64) -> Self {
        self.weight_range = (low, high);
        self
    }

    pub fn max_ratio(mut self, r: f64) -> Self {
        self.max_ratio = r;
        self
    }

    pub fn extra_edges(mut self, extra: usize) -> Self {
        self.extra_edges = extra;
        self
    }
}

/// Generates the graph described by `spec`, deterministically in `seed`.
pub fn generate_graph(spec: &GraphSpec, seed: u64) -> Result<ArcSystem> {
    if spec.n == 0 {
        return Err(Error::input("generated graph needs at least one node"));
    }
    let (low, high) = spec.weight_range;
    if low == 0 || low > high {
        return Err(Error::input(format!(
            "invalid weight range {low}..={high}; costs must be positive"
        )));
    }
    if spec.max_ratio < 1.0 {
        return Err(Error::input("cost asymmetry cap must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    match spec.kind {
        Kind::Path => {
            for v in 1..n {
                pairs.push((v - 1, v));
            }
        }
        Kind::Star => {
            for v in 1..n {
                pairs.push((0, v));
            }
        }
        Kind::Grid => {
            let rows = (n as f64).sqrt().floor() as usize;
            let cols = n.div_ceil(rows.max(1));
            for v in 0..n {
                if (v % cols) + 1 < cols && v + 1 < n {
                    pairs.push((v, v + 1));
                }
                if v + cols < n {
                    pairs.push((v, v + cols));
                }
            }
        }
        Kind::RandomConnected => {
            for v in 1..n {
                let parent = rng.gen_range(0..v);
                pairs.push((parent, v));
            }
            if n >= 2 {
                for _ in 0..spec.extra_edges {
                    let u = rng.gen_range(0..n);
                    let mut v = rng.gen_range(0..n - 1);
                    if v >= u {
                        v += 1;
                    }
                    pairs.push((u, v));
                }
            }
        }
    }
    let mut edges = Vec::with_capacity(pairs.len());
    for (u, v) in pairs {
        let (a, b) = random_cost_pair(&mut rng, low, high, spec.max_ratio);
        edges.push((u, v, a, b));
    }
    ArcSystem::new(n, &edges)
}

/// Draws a per-direction cost pair with both costs in `low..=high` and
/// ratio at most `max_ratio`.
fn random_cost_pair(rng: &mut ChaCha8Rng, low: u64, high: u64, max_ratio: f64) -> (f64, f64) {
    let base = rng.gen_range(low..=high);
    if max_ratio == 1.0 {
        let w = base as f64;
        return (w, w);
    }
    let cap = ((base as f64) * max_ratio).floor() as u64;
    let other = rng.gen_range(base..=cap.min(high).max(base));
    if rng.gen_bool(0.5) {
        (base as f64, other as f64)
    } else {
        (other as f64, base as f64)
    }
}

/// Random balanced demands: iid uniform draws recentred to sum to zero,
/// with the residual folded into the last entry.
pub fn random_balanced_demand(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    let mut b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = b.iter().sum::<f64>() / n as f64;
    for x in &mut b {
        *x -= mean;
    }
    let residual: f64 = b.iter().sum();
    b[n - 1] -= residual;
    b
}

/// Demand pattern for a generated instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemandKind {
    /// Balanced random demands on every node.
    Random,
    /// One unit from the first node to the last.
    SourceSink,
    /// One unit from the first node to every other node.
    SingleSource,
    /// All-zero demands.
    Zero,
}

impl std::str::FromStr for DemandKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(DemandKind::Random),
            "source-sink" => Ok(DemandKind::SourceSink),
            "single-source" => Ok(DemandKind::SingleSource),
            "zero" => Ok(DemandKind::Zero),
            other => Err(Error::input(format!("unknown demand kind `{other}`"))),
        }
    }
}

/// Generates a full instance; the demand stream is independent of the
/// graph stream so adding demand kinds never reshuffles topology.
pub fn generate_instance(spec: &GraphSpec, demand: DemandKind, seed: u64) -> Result<Instance> {
    let graph = generate_graph(spec, seed)?;
    let n = graph.n();
    let demand = match demand {
        DemandKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            random_balanced_demand(n, &mut rng)
        }
        DemandKind::SourceSink => {
            let mut b = vec![0.0; n];
            if n >= 2 {
                b[0] = -1.0;
                b[n - 1] = 1.0;
            }
            b
        }
        DemandKind::SingleSource => crate::graph::sssp_demand(n, 0),
        DemandKind::Zero => vec![0.0; n],
    };
    Ok(Instance { graph, demand })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::format_instance;

    #[test]
    fn path_has_chain_edges() {
        let g = generate_graph(&GraphSpec::new(Kind::Path, 3), 0).unwrap();
        assert_eq!(g.m(), 2);
        let ends: Vec<(usize, usize)> = g
            .edges()
            .iter()
            .map(|e| (e.u.min(e.v), e.u.max(e.v)))
            .collect();
        assert_eq!(ends, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn star_has_center_edges() {
        let g = generate_graph(&GraphSpec::new(Kind::Star, 5), 0).unwrap();
        assert_eq!(g.m(), 4);
        assert!(g.edges().iter().all(|e| e.u == 0 || e.v == 0));
    }

    #[test]
    fn grid_is_connected_for_awkward_sizes() {
        for n in [1, 2, 3, 5, 7, 11, 12, 30] {
            let g = generate_graph(&GraphSpec::new(Kind::Grid, n), 3).unwrap();
            assert_eq!(g.n(), n);
        }
    }

    #[test]
    fn random_connected_has_tree_plus_extras() {
        let spec = GraphSpec::new(Kind::RandomConnected, 20).extra_edges(7);
        let g = generate_graph(&spec, 7).unwrap();
        assert_eq!(g.m(), 19 + 7);
    }

    #[test]
    fn same_seed_reproduces_bytes() {
        let spec = GraphSpec::new(Kind::RandomConnected, 20).extra_edges(5).max_ratio(4.0);
        let a = generate_instance(&spec, DemandKind::Random, 7).unwrap();
        let b = generate_instance(&spec, DemandKind::Random, 7).unwrap();
        assert_eq!(format_instance(&a), format_instance(&b));
        let c = generate_instance(&spec, DemandKind::Random, 8).unwrap();
        assert_ne!(format_instance(&a), format_instance(&c));
    }

    #[test]
    fn asymmetric_costs_respect_ratio_cap_and_range() {
        let spec = GraphSpec::new(Kind::RandomConnected, 30)
            .extra_edges(20)
            .weights(1, 20)
            .max_ratio(4.0);
        let g = generate_graph(&spec, 11).unwrap();
        for e in g.edges() {
            assert!(e.w_minus >= 1.0 && e.w_plus <= 20.0);
            assert!(e.w_plus / e.w_minus <= 4.0 + 1e-12);
        }
        assert!(g.lambda() > 1.0);
    }

    #[test]
    fn random_demand_is_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = random_balanced_demand(9, &mut rng);
        assert!(b.iter().sum::<f64>().abs() < 1e-12);
        assert!(crate::graph::validate_demand(9, &b).is_ok());
    }

    #[test]
    fn demand_kinds_shape() {
        let spec = GraphSpec::new(Kind::Path, 4);
        let st = generate_instance(&spec, DemandKind::SourceSink, 0).unwrap();
        assert_eq!(st.demand, vec![-1.0, 0.0, 0.0, 1.0]);
        let ss = generate_instance(&spec, DemandKind::SingleSource, 0).unwrap();
        assert_eq!(ss.demand, vec![-3.0, 1.0, 1.0, 1.0]);
    }
}
