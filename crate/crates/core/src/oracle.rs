//! Transshipment oracles: an exact primal-dual solver, an independent
//! brute-force reference, and the spanner-based approximate direction
//! oracle used by the gradient descent.
//!
//! The exact solver runs successive shortest paths with node potentials, so
//! it produces an optimal flow and optimal dual potentials in one sweep.
//! The brute-force solver enumerates spanning trees and derives its duals
//! from residual shortest paths, sharing no code with the exact solver.

use crate::error::{Error, Result};
use crate::graph::{validate_demand, ArcSystem, FlowVector};
use crate::potential::pairwise_sum;
use crate::spanner::{build_spanner, SpannerResult};

/// An optimal primal/dual pair for a transshipment instance.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub flow: FlowVector,
    pub potentials: Vec<f64>,
    /// Cost of `flow`; equals the dual objective by strong duality.
    pub value: f64,
}

/// Dual objective `sum_v q_v * h_v`, summed pairwise in node order so every
/// engine reproduces the same float.
pub fn dual_objective(q: &[f64], h: &[f64]) -> f64 {
    assert_eq!(q.len(), h.len(), "demand and potential dimensions differ");
    let products: Vec<f64> = q.iter().zip(h).map(|(a, b)| a * b).collect();
    pairwise_sum(&products)
}

/// Exact uncapacitated min-cost transshipment by successive shortest
/// paths. Handles per-direction arc costs and real-valued demands; each
/// augmentation moves the full bottleneck, so at least one node's residual
/// demand reaches zero (or a reversal empties) per round.
pub fn exact_transshipment(g: &ArcSystem, q: &[f64]) -> Result<OracleSolution> {
    validate_demand(g.n(), q)?;
    let n = g.n();
    let m = g.m();
    let mass: f64 = q.iter().map(|x| x.abs()).sum();
    let tol = 1e-12 * mass.max(1.0);

    let mut net = vec![0.0_f64; m];
    let mut pot = vec![0.0_f64; n];
    let mut surplus = q.to_vec();
    let adj = g.adjacency();

    let round_cap = 50 * (n + m) + 1000;
    let mut rounds = 0usize;
    loop {
        let any_source = (0..n).any(|v| surplus[v] < -tol);
        if !any_source {
            break;
        }
        rounds += 1;
        if rounds > round_cap {
            return Err(Error::numeric(
                "transshipment solve exceeded its augmentation budget",
            ));
        }

        // Multi-source Dijkstra over the residual graph with reduced costs.
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        // parent[v] = (previous node, edge, +1 if the push raises net flow)
        let mut parent: Vec<Option<(usize, usize, f64)>> = vec![None; n];
        for v in 0..n {
            if surplus[v] < -tol {
                dist[v] = 0.0;
            }
        }
        for _ in 0..n {
            let mut v = usize::MAX;
            let mut best = f64::INFINITY;
            for u in 0..n {
                if !done[u] && dist[u] < best {
                    best = dist[u];
                    v = u;
                }
            }
            if v == usize::MAX {
                break;
            }
            done[v] = true;
            for &(_, e) in &adj[v] {
                let edge = g.edge(e);
                // Residual arcs out of v on this edge: the genuine arc in
                // v's direction plus the reversal of opposing flow.
                let (to, arcs) = if v == edge.u {
                    let mut a: Vec<(f64, f64)> = vec![(edge.w_plus, 1.0)];
                    if net[e] < -tol {
                        a.push((-edge.w_minus, 1.0));
                    }
                    (edge.v, a)
                } else {
                    let mut a: Vec<(f64, f64)> = vec![(edge.w_minus, -1.0)];
                    if net[e] > tol {
                        a.push((-edge.w_plus, -1.0));
                    }
                    (edge.u, a)
                };
                for (cost, dir) in arcs {
                    let reduced = (cost + pot[v] - pot[to]).max(0.0);
                    let cand = dist[v] + reduced;
                    if cand < dist[to] {
                        dist[to] = cand;
                        parent[to] = Some((v, e, dir));
                    }
                }
            }
        }

        let mut sink = usize::MAX;
        for v in 0..n {
            if surplus[v] > tol && (sink == usize::MAX || dist[v] < dist[sink]) {
                sink = v;
            }
        }
        if sink == usize::MAX || !dist[sink].is_finite() {
            // Rounding can leave supplies without matching sinks; residue
            // this small is a solved instance, anything larger is not.
            let residue = surplus.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
            if residue <= 1e-9 * mass.max(1.0) {
                break;
            }
            return Err(Error::numeric(
                "no augmenting path found for remaining demand",
            ));
        }

        for v in 0..n {
            if dist[v].is_finite() {
                pot[v] += dist[v];
            }
        }

        // Walk back to the source this sink drew from, collecting the
        // bottleneck over reversal capacities.
        let mut bottleneck = surplus[sink];
        let mut path = Vec::new();
        let mut v = sink;
        while let Some((prev, e, dir)) = parent[v] {
            if dir * net[e] < -tol {
                bottleneck = bottleneck.min(-dir * net[e]);
            }
            path.push((e, dir));
            v = prev;
        }
        bottleneck = bottleneck.min(-surplus[v]);
        if bottleneck <= tol {
            break;
        }
        for &(e, dir) in &path {
            net[e] += dir * bottleneck;
        }
        surplus[sink] -= bottleneck;
        surplus[v] += bottleneck;
    }

    let min_pot = pot.iter().cloned().fold(f64::INFINITY, f64::min);
    for h in &mut pot {
        *h -= min_pot;
    }
    let flow = FlowVector::from_net(&net);
    let value = g.flow_cost(&flow);
    Ok(OracleSolution { flow, potentials: pot, value })
}

/// Largest instance the spanning-tree enumeration accepts.
pub const BRUTE_FORCE_EDGE_CAP: usize = 16;

/// Reference solver: enumerate every spanning tree, route the demand along
/// each, keep the cheapest, and read duals off residual shortest paths.
/// Exists to cross-check [`exact_transshipment`] without sharing code.
pub fn brute_force_tree(g: &ArcSystem, q: &[f64]) -> Result<OracleSolution> {
    validate_demand(g.n(), q)?;
    let n = g.n();
    let m = g.m();
    if m > BRUTE_FORCE_EDGE_CAP {
        return Err(Error::input(format!(
            "brute-force solver handles at most {BRUTE_FORCE_EDGE_CAP} edges, got {m}"
        )));
    }
    if n == 1 {
        return Ok(OracleSolution {
            flow: FlowVector::zero(m),
            potentials: vec![0.0],
            value: 0.0,
        });
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let edges: Vec<usize> = (0..m).filter(|&e| mask & (1 << e) != 0).collect();
        if !spans(g, &edges) {
            continue;
        }
        let net = tree_flow(g, &edges, q);
        let flow = FlowVector::from_net(&net);
        let cost = g.flow_cost(&flow);
        if best.as_ref().map_or(true, |(c, _)| cost < c - 1e-12) {
            best = Some((cost, net));
        }
    }
    let (value, net) = best.ok_or_else(|| Error::input("graph has no spanning tree"))?;

    let potentials = residual_potentials(g, &net)?;
    Ok(OracleSolution { flow: FlowVector::from_net(&net), potentials, value })
}

fn spans(g: &ArcSystem, edges: &[usize]) -> bool {
    let n = g.n();
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut Vec<usize>, v: usize) -> usize {
        let mut r = v;
        while root[r] != r {
            r = root[r];
        }
        let mut v = v;
        while root[v] != r {
            let next = root[v];
            root[v] = r;
            v = next;
        }
        r
    }
    let mut merged = 0;
    for &e in edges {
        let edge = g.edge(e);
        let (a, b) = (find(&mut root, edge.u), find(&mut root, edge.v));
        if a != b {
            root[a] = b;
            merged += 1;
        }
    }
    merged == n - 1
}

/// The unique flow on the given spanning tree meeting demand `q`, as
/// signed net values per input edge.
fn tree_flow(g: &ArcSystem, tree: &[usize], q: &[f64]) -> Vec<f64> {
    let n = g.n();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &e in tree {
        let edge = g.edge(e);
        adj[edge.u].push((edge.v, e));
        adj[edge.v].push((edge.u, e));
    }
    let mut order = Vec::with_capacity(n);
    let mut up_edge: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &(u, e) in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                up_edge[u] = Some(e);
                stack.push(u);
            }
        }
    }
    let mut subtree = q.to_vec();
    let mut net = vec![0.0; g.m()];
    for &v in order.iter().rev() {
        let Some(e) = up_edge[v] else { continue };
        let edge = g.edge(e);
        let parent = if edge.u == v { edge.v } else { edge.u };
        // The subtree under v needs `subtree[v]` units delivered from the
        // parent side.
        net[e] = if v == edge.v { subtree[v] } else { -subtree[v] };
        subtree[parent] += subtree[v];
    }
    net
}

/// Optimal dual potentials for an optimal flow: shortest distances from
/// node 0 in the residual graph (Bellman-Ford), shifted to minimum zero.
fn residual_potentials(g: &ArcSystem, net: &[f64]) -> Result<Vec<f64>> {
    let n = g.n();
    let mut arcs: Vec<(usize, usize, f64)> = Vec::new();
    for (e, edge) in g.edges().iter().enumerate() {
        arcs.push((edge.u, edge.v, edge.w_plus));
        arcs.push((edge.v, edge.u, edge.w_minus));
        if net[e] > 1e-12 {
            arcs.push((edge.v, edge.u, -edge.w_plus));
        } else if net[e] < -1e-12 {
            arcs.push((edge.u, edge.v, -edge.w_minus));
        }
    }
    let mut dist = vec![f64::INFINITY; n];
    dist[0] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for &(a, b, c) in &arcs {
            if dist[a].is_finite() && dist[a] + c < dist[b] - 1e-12 {
                dist[b] = dist[a] + c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for &(a, b, c) in &arcs {
        if dist[a] + c < dist[b] - 1e-7 {
            return Err(Error::numeric(
                "residual graph of the best tree flow has a negative cycle",
            ));
        }
    }
    let min = dist.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(dist.into_iter().map(|d| d - min).collect())
}

/// A descent direction produced by the oracle.
#[derive(Debug, Clone)]
pub struct OracleDirection {
    /// Potentials with `inf_norm_stretch(h) = 1` on the full graph (all
    /// zeros when `zero` is set).
    pub h: Vec<f64>,
    /// Flow on the full graph routing the requested demand.
    pub x2: FlowVector,
    /// Dual gain `q . h`.
    pub gain: f64,
    /// Set when the demand was identically zero.
    pub zero: bool,
}

/// An oracle direction before rescaling to unit stretch norm.
#[derive(Debug, Clone)]
pub struct RawDirection {
    /// Potentials straight from the subproblem solve.
    pub h: Vec<f64>,
    /// Flow on the full graph routing the requested demand.
    pub x2: FlowVector,
    /// Set when the demand was identically zero.
    pub zero: bool,
}

/// The descent's direction oracle: an exact transshipment solve over the
/// cheaper-direction costs, run either on the whole graph or on a spanner
/// of it, with the resulting potentials rescaled to unit stretch norm.
#[derive(Debug, Clone)]
pub struct DirectionOracle {
    sub: ArcSystem,
    /// Sub edge index -> (full edge index, orientation sign).
    edge_map: Vec<(usize, f64)>,
    n_full: usize,
    m_full: usize,
    /// Guaranteed gain ratio: 1 exact, `2k - 1` with a spanner.
    pub alpha: f64,
    pub spanner: Option<SpannerResult>,
}

impl DirectionOracle {
    /// Exact oracle over the full graph (alpha = 1).
    pub fn exact(g: &ArcSystem) -> Result<DirectionOracle> {
        let all: Vec<usize> = (0..g.m()).collect();
        let (sub, edge_map) = symmetrized_subgraph(g, &all)?;
        Ok(DirectionOracle {
            sub,
            edge_map,
            n_full: g.n(),
            m_full: g.m(),
            alpha: 1.0,
            spanner: None,
        })
    }

    /// Spanner-backed oracle with gain ratio `2k - 1`.
    pub fn with_spanner(g: &ArcSystem, k: usize) -> Result<DirectionOracle> {
        let sp = build_spanner(g, k);
        let (sub, edge_map) = symmetrized_subgraph(g, &sp.edges)?;
        Ok(DirectionOracle {
            sub,
            edge_map,
            n_full: g.n(),
            m_full: g.m(),
            alpha: (2 * k - 1) as f64,
            spanner: Some(sp),
        })
    }

    /// Number of edges in the subgraph the oracle solves on.
    pub fn subgraph_edges(&self) -> usize {
        self.sub.m()
    }

    /// Solves for demand `q` without rescaling the potentials. The caller
    /// owns the rescale so it can meter the norm evaluation it requires.
    pub fn solve_raw(&self, q: &[f64]) -> Result<RawDirection> {
        if q.iter().all(|&x| x == 0.0) {
            return Ok(RawDirection {
                h: vec![0.0; self.n_full],
                x2: FlowVector::zero(self.m_full),
                zero: true,
            });
        }
        let sol = exact_transshipment(&self.sub, q)?;
        let mut net = vec![0.0; self.m_full];
        for (j, &(full, sign)) in self.edge_map.iter().enumerate() {
            net[full] += sign * sol.flow.net(j);
        }
        Ok(RawDirection {
            h: sol.potentials,
            x2: FlowVector::from_net(&net),
            zero: false,
        })
    }

    /// Solves for demand `q` and rescales the potentials so the stretch
    /// norm over the full graph `g` is exactly one.
    pub fn direction(&self, g: &ArcSystem, q: &[f64]) -> Result<OracleDirection> {
        let raw = self.solve_raw(q)?;
        if raw.zero {
            return Ok(OracleDirection { h: raw.h, x2: raw.x2, gain: 0.0, zero: true });
        }
        let scale = g.inf_norm_stretch(&raw.h);
        if scale <= 1e-300 {
            return Ok(OracleDirection {
                h: vec![0.0; g.n()],
                x2: FlowVector::zero(g.m()),
                gain: 0.0,
                zero: true,
            });
        }
        let h: Vec<f64> = raw.h.iter().map(|x| x / scale).collect();
        let gain = dual_objective(q, &h);
        Ok(OracleDirection { h, x2: raw.x2, gain, zero: false })
    }
}

/// Builds the symmetric-cost subgraph over `w_minus` for the listed edges,
/// tracking how each sub edge maps back to the full edge list.
fn symmetrized_subgraph(g: &ArcSystem, edges: &[usize]) -> Result<(ArcSystem, Vec<(usize, f64)>)> {
    let raw: Vec<(usize, usize, f64, f64)> = edges
        .iter()
        .map(|&e| {
            let edge = g.edge(e);
            (edge.u, edge.v, edge.w_minus, edge.w_minus)
        })
        .collect();
    let sub = ArcSystem::new(g.n(), &raw)?;
    let edge_map: Vec<(usize, f64)> = edges
        .iter()
        .enumerate()
        .map(|(j, &e)| {
            let full = g.edge(e);
            let sign = if sub.edge(j).u == full.u { 1.0 } else { -1.0 };
            (e, sign)
        })
        .collect();
    Ok((sub, edge_map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_graph, random_balanced_demand, GraphSpec, Kind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn check_optimal_pair(g: &ArcSystem, q: &[f64], sol: &OracleSolution) {
        let balance = g.balance(&sol.flow);
        let mass: f64 = q.iter().map(|x| x.abs()).sum();
        for v in 0..g.n() {
            assert!(
                (balance[v] - q[v]).abs() <= 1e-9 * mass.max(1.0),
                "node {v} balance {} vs demand {}",
                balance[v],
                q[v]
            );
        }
        for e in g.edges() {
            let d = sol.potentials[e.v] - sol.potentials[e.u];
            assert!(d <= e.w_plus + 1e-9, "dual violates forward arc");
            assert!(-d <= e.w_minus + 1e-9, "dual violates backward arc");
        }
        let dual = dual_objective(q, &sol.potentials);
        assert!(
            (dual - sol.value).abs() <= 1e-7 * sol.value.abs().max(1.0),
            "duality gap: primal {} dual {}",
            sol.value,
            dual
        );
        // Complementary slackness: flow-carrying arcs are tight.
        for (i, e) in g.edges().iter().enumerate() {
            let net = sol.flow.net(i);
            let d = sol.potentials[e.v] - sol.potentials[e.u];
            if net > 1e-7 {
                assert!((d - e.w_plus).abs() <= 1e-7 * e.w_plus.max(1.0));
            } else if net < -1e-7 {
                assert!((-d - e.w_minus).abs() <= 1e-7 * e.w_minus.max(1.0));
            }
        }
    }

    #[test]
    fn single_edge_routes_demand() {
        let g = ArcSystem::new(2, &[(0, 1, 5.0, 5.0)]).unwrap();
        let q = [-2.0, 2.0];
        let sol = exact_transshipment(&g, &q).unwrap();
        assert!((sol.value - 10.0).abs() <= 1e-9);
        assert!((sol.flow.net(0) - 2.0).abs() <= 1e-12);
        assert!((sol.potentials[1] - sol.potentials[0] - 5.0).abs() <= 1e-9);
        check_optimal_pair(&g, &q, &sol);
    }

    #[test]
    fn path_cost_adds_up() {
        let g = ArcSystem::new(3, &[(0, 1, 2.0, 2.0), (1, 2, 3.0, 3.0)]).unwrap();
        let sol = exact_transshipment(&g, &[-1.0, 0.0, 1.0]).unwrap();
        assert!((sol.value - 5.0).abs() <= 1e-9);
    }

    #[test]
    fn triangle_routes_around_expensive_edge() {
        let g = ArcSystem::new(3, &[(0, 1, 1.0, 1.0), (1, 2, 1.0, 1.0), (0, 2, 3.0, 3.0)]).unwrap();
        let q = [-1.0, 0.0, 1.0];
        let exact = exact_transshipment(&g, &q).unwrap();
        assert!((exact.value - 2.0).abs() <= 1e-9);
        let brute = brute_force_tree(&g, &q).unwrap();
        assert!((brute.value - 2.0).abs() <= 1e-9);
        check_optimal_pair(&g, &q, &exact);
        check_optimal_pair(&g, &q, &brute);
    }

    #[test]
    fn asymmetric_costs_pick_direction() {
        let g = ArcSystem::new(2, &[(0, 1, 4.0, 2.0)]).unwrap();
        let fwd = exact_transshipment(&g, &[-1.0, 1.0]).unwrap();
        assert!((fwd.value - 4.0).abs() <= 1e-9);
        let back = exact_transshipment(&g, &[1.0, -1.0]).unwrap();
        assert!((back.value - 2.0).abs() <= 1e-9);
        check_optimal_pair(&g, &[-1.0, 1.0], &fwd);
        check_optimal_pair(&g, &[1.0, -1.0], &back);
    }

    #[test]
    fn zero_demand_is_free() {
        let g = ArcSystem::new(3, &[(0, 1, 2.0, 1.0), (1, 2, 3.0, 3.0)]).unwrap();
        let exact = exact_transshipment(&g, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(exact.value, 0.0);
        let brute = brute_force_tree(&g, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(brute.value, 0.0);
        assert!(brute.flow.net_vec().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn brute_force_rejects_large_instances() {
        let spec = GraphSpec::new(Kind::RandomConnected, 10).extra_edges(10);
        let g = generate_graph(&spec, 1).unwrap();
        assert!(g.m() > BRUTE_FORCE_EDGE_CAP);
        assert!(brute_force_tree(&g, &vec![0.0; 10]).unwrap_err().is_input());
    }

    #[test]
    fn exact_matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for seed in 0..60u64 {
            let n = 3 + (seed as usize % 5);
            let extra = (seed as usize % 3).min(8 - n.min(8));
            let spec = GraphSpec::new(Kind::RandomConnected, n)
                .extra_edges(extra.min(8usize.saturating_sub(n - 1)))
                .weights(1, 9)
                .max_ratio(if seed % 2 == 0 { 1.0 } else { 3.0 });
            let g = generate_graph(&spec, seed).unwrap();
            if g.m() > 8 {
                continue;
            }
            let q = random_balanced_demand(n, &mut rng);
            let exact = exact_transshipment(&g, &q).unwrap();
            let brute = brute_force_tree(&g, &q).unwrap();
            assert!(
                (exact.value - brute.value).abs() <= 1e-7 * brute.value.max(1.0),
                "seed {seed}: exact {} brute {}",
                exact.value,
                brute.value
            );
            check_optimal_pair(&g, &q, &exact);
            check_optimal_pair(&g, &q, &brute);
        }
    }

    #[test]
    fn dual_objective_is_a_dot_product() {
        assert_eq!(dual_objective(&[-1.0, 1.0], &[0.0, 5.0]), 5.0);
        assert_eq!(dual_objective(&[0.0, 0.0], &[3.0, 4.0]), 0.0);
        assert_eq!(dual_objective(&[-1.0, 1.0], &[3.0, 3.0]), 0.0);
    }

    #[test]
    fn full_graph_oracle_returns_unit_norm_direction() {
        let spec = GraphSpec::new(Kind::RandomConnected, 8).extra_edges(5).max_ratio(2.0);
        let g = generate_graph(&spec, 3).unwrap();
        let oracle = DirectionOracle::exact(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random_balanced_demand(8, &mut rng);
        let dir = oracle.direction(&g, &q).unwrap();
        assert!(!dir.zero);
        assert!((g.inf_norm_stretch(&dir.h) - 1.0).abs() <= 1e-12);
        let balance = g.balance(&dir.x2);
        for v in 0..8 {
            assert!((balance[v] - q[v]).abs() <= 1e-9);
        }
    }

    #[test]
    fn zero_demand_is_flagged() {
        let g = ArcSystem::new(2, &[(0, 1, 1.0, 1.0)]).unwrap();
        let oracle = DirectionOracle::exact(&g).unwrap();
        let dir = oracle.direction(&g, &[0.0, 0.0]).unwrap();
        assert!(dir.zero);
        assert_eq!(dir.gain, 0.0);
    }

    #[test]
    fn spanner_oracle_meets_alpha_guarantee() {
        for seed in 0..10u64 {
            let n = 8 + (seed as usize % 12);
            let spec = GraphSpec::new(Kind::RandomConnected, n)
                .extra_edges(2 * n)
                .max_ratio(if seed % 2 == 0 { 1.0 } else { 4.0 });
            let g = generate_graph(&spec, seed + 100).unwrap();
            let oracle = DirectionOracle::with_spanner(&g, 2).unwrap();
            let full = DirectionOracle::exact(&g).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = random_balanced_demand(n, &mut rng);
            let dir = oracle.direction(&g, &q).unwrap();
            let best = full.direction(&g, &q).unwrap();
            assert!((g.inf_norm_stretch(&dir.h) - 1.0).abs() <= 1e-12);
            // The spanner potentials stay alpha-feasible on the full graph.
            let sol = exact_transshipment(&oracle.sub, &q).unwrap();
            assert!(g.inf_norm_stretch(&sol.potentials) <= oracle.alpha + 1e-9);
            assert!(
                dir.gain >= best.gain / oracle.alpha - 1e-9,
                "seed {seed}: gain {} below {}/{}",
                dir.gain,
                best.gain,
                oracle.alpha
            );
            let balance = g.balance(&dir.x2);
            for v in 0..n {
                assert!((balance[v] - q[v]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn oracle_flow_cost_bounded_by_alpha_times_gain() {
        for seed in 0..8u64 {
            let n = 10;
            let spec = GraphSpec::new(Kind::RandomConnected, n).extra_edges(15).max_ratio(3.0);
            let g = generate_graph(&spec, seed + 55).unwrap();
            let oracle = DirectionOracle::with_spanner(&g, 2).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = random_balanced_demand(n, &mut rng);
            let dir = oracle.direction(&g, &q).unwrap();
            let cheap_cost: f64 = (0..g.m())
                .map(|i| g.edge(i).w_minus * dir.x2.net(i).abs())
                .sum();
            assert!(cheap_cost <= oracle.alpha * dir.gain + 1e-9);
        }
    }
}
