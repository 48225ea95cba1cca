//! Graph representation for the transshipment solver.
//!
//! An undirected edge with possibly different costs per direction is stored
//! as an oriented pair of arcs. Edge `i` owns two arc slots: slot `i` is the
//! forward arc (tail `u`, head `v`, cost `w_plus`) and slot `m + i` is the
//! backward arc (tail `v`, head `u`, cost `w_minus`). Orientation is fixed at
//! construction so that `w_plus >= w_minus`, with cost ties broken by
//! directing the forward arc from the smaller node id to the larger one.
//!
//! Node ids are `0..n` internally; the text format is 1-based.

use crate::error::{Error, Result};

/// Relative tolerance for checking that demands sum to zero.
const DEMAND_BALANCE_TOL: f64 = 1e-9;

/// One undirected edge after orientation has been fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// Tail of the forward arc.
    pub u: usize,
    /// Head of the forward arc.
    pub v: usize,
    /// Cost of traversing from `u` to `v`. Always `>= w_minus`.
    pub w_plus: f64,
    /// Cost of traversing from `v` to `u`.
    pub w_minus: f64,
}

/// An undirected graph with per-direction arc costs, stored as oriented
/// arc pairs.
#[derive(Debug, Clone)]
pub struct ArcSystem {
    n: usize,
    edges: Vec<Edge>,
    lambda: f64,
}

impl ArcSystem {
    /// Builds an arc system from raw edge records `(u, v, cost_uv, cost_vu)`.
    ///
    /// Fixes orientation per edge, rejects self-loops, non-finite or
    /// non-positive costs, and disconnected graphs. Parallel edges are
    /// allowed and keep their input order.
    pub fn new(n: usize, raw_edges: &[(usize, usize, f64, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("graph must have at least one node"));
        }
        let mut edges = Vec::with_capacity(raw_edges.len());
        for (idx, &(u, v, cost_uv, cost_vu)) in raw_edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::input(format!(
                    "edge {idx} references node out of range (n = {n})"
                )));
            }
            if u == v {
                return Err(Error::input(format!("edge {idx} is a self-loop on node {u}")));
            }
            if !cost_uv.is_finite() || !cost_vu.is_finite() || cost_uv <= 0.0 || cost_vu <= 0.0 {
                return Err(Error::input(format!(
                    "edge {idx} has invalid costs ({cost_uv}, {cost_vu}); costs must be finite and positive"
                )));
            }
            edges.push(orient(u, v, cost_uv, cost_vu));
        }
        let lambda = edges
            .iter()
            .map(|e| e.w_plus / e.w_minus)
            .fold(1.0_f64, f64::max);
        let system = ArcSystem { n, edges, lambda };
        if !system.is_connected() {
            return Err(Error::input("graph is not connected"));
        }
        Ok(system)
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Number of arc slots (`2 * m`).
    pub fn num_arcs(&self) -> usize {
        2 * self.edges.len()
    }

    /// Maximum cost asymmetry `max_e w_plus / w_minus`; `1` for symmetric
    /// costs.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Whether every edge has equal costs in both directions.
    pub fn is_symmetric(&self) -> bool {
        self.lambda == 1.0
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> Edge {
        self.edges[i]
    }

    /// Largest arc cost over both directions.
    pub fn max_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w_plus).fold(0.0_f64, f64::max)
    }

    /// Tail node of arc slot `a`.
    pub fn arc_tail(&self, a: usize) -> usize {
        let m = self.edges.len();
        if a < m {
            self.edges[a].u
        } else {
            self.edges[a - m].v
        }
    }

    /// Head node of arc slot `a`.
    pub fn arc_head(&self, a: usize) -> usize {
        let m = self.edges.len();
        if a < m {
            self.edges[a].v
        } else {
            self.edges[a - m].u
        }
    }

    /// Cost of arc slot `a`.
    pub fn arc_weight(&self, a: usize) -> f64 {
        let m = self.edges.len();
        if a < m {
            self.edges[a].w_plus
        } else {
            self.edges[a - m].w_minus
        }
    }

    /// Stretch of arc slot `a` under potentials `pi`: the potential gain at
    /// the head minus the potential at the tail, divided by the arc cost.
    pub fn arc_stretch(&self, a: usize, pi: &[f64]) -> f64 {
        (pi[self.arc_head(a)] - pi[self.arc_tail(a)]) / self.arc_weight(a)
    }

    /// All `2m` arc stretches under potentials `pi`, forward block first.
    pub fn stretches(&self, pi: &[f64]) -> Vec<f64> {
        let m = self.edges.len();
        let mut s = Vec::with_capacity(2 * m);
        for e in &self.edges {
            s.push((pi[e.v] - pi[e.u]) / e.w_plus);
        }
        for e in &self.edges {
            s.push((pi[e.u] - pi[e.v]) / e.w_minus);
        }
        s
    }

    /// Largest absolute arc stretch under potentials `h`. Because
    /// `w_plus >= w_minus`, this equals the largest per-edge
    /// `|h_v - h_u| / w_minus`.
    pub fn inf_norm_stretch(&self, h: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|e| (h[e.v] - h[e.u]).abs() / e.w_minus)
            .fold(0.0_f64, f64::max)
    }

    /// Largest signed arc stretch under potentials `h`, clamped at zero.
    pub fn q_stretch(&self, h: &[f64]) -> f64 {
        let mut q = 0.0_f64;
        for e in &self.edges {
            let d = h[e.v] - h[e.u];
            q = q.max(d / e.w_plus).max(-d / e.w_minus);
        }
        q
    }

    /// Node balances induced by a flow: `balance[v]` is the net amount
    /// entering `v`, so a unit of forward flow on an edge `(u, v)` yields
    /// `balance[u] = -1` and `balance[v] = +1`. A flow routes demand `b`
    /// exactly when `balance == b`.
    pub fn balance(&self, flow: &FlowVector) -> Vec<f64> {
        let mut b = vec![0.0; self.n];
        for (i, e) in self.edges.iter().enumerate() {
            let net = flow.net(i);
            b[e.u] -= net;
            b[e.v] += net;
        }
        b
    }

    /// Cost of a flow: each edge pays `w_plus` per unit of positive net flow
    /// and `w_minus` per unit of negative net flow.
    pub fn flow_cost(&self, flow: &FlowVector) -> f64 {
        let mut cost = 0.0;
        for (i, e) in self.edges.iter().enumerate() {
            let net = flow.net(i);
            if net >= 0.0 {
                cost += e.w_plus * net;
            } else {
                cost += e.w_minus * (-net);
            }
        }
        cost
    }

    /// Undirected adjacency lists as `(neighbor, edge index)` pairs, in edge
    /// input order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.u].push((e.v, i));
            adj[e.v].push((e.u, i));
        }
        adj
    }

    fn is_connected(&self) -> bool {
        if self.n == 1 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }
}

fn orient(u: usize, v: usize, cost_uv: f64, cost_vu: f64) -> Edge {
    if cost_uv > cost_vu || (cost_uv == cost_vu && u < v) {
        Edge { u, v, w_plus: cost_uv, w_minus: cost_vu }
    } else {
        Edge { u: v, v: u, w_plus: cost_vu, w_minus: cost_uv }
    }
}

/// A nonnegative flow split into per-edge forward and backward components.
/// Entry `i` of each part refers to edge `i`; the net flow on edge `i` is
/// `forward[i] - backward[i]`, positive in the forward-arc direction.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowVector {
    pub forward: Vec<f64>,
    pub backward: Vec<f64>,
}

impl FlowVector {
    pub fn zero(m: usize) -> Self {
        FlowVector { forward: vec![0.0; m], backward: vec![0.0; m] }
    }

    /// Builds a flow whose net values match `net`, with one-sided parts.
    pub fn from_net(net: &[f64]) -> Self {
        let mut flow = FlowVector::zero(net.len());
        for (i, &x) in net.iter().enumerate() {
            if x >= 0.0 {
                flow.forward[i] = x;
            } else {
                flow.backward[i] = -x;
            }
        }
        flow
    }

    pub fn m(&self) -> usize {
        self.forward.len()
    }

    /// Net flow on edge `i`, positive in the forward-arc direction.
    pub fn net(&self, i: usize) -> f64 {
        self.forward[i] - self.backward[i]
    }

    pub fn net_vec(&self) -> Vec<f64> {
        (0..self.m()).map(|i| self.net(i)).collect()
    }

    /// Entrywise difference of net flows, re-split into one-sided parts.
    pub fn sub(&self, other: &FlowVector) -> FlowVector {
        let net: Vec<f64> = (0..self.m()).map(|i| self.net(i) - other.net(i)).collect();
        FlowVector::from_net(&net)
    }

    /// Flow scaled by `factor`, re-split into one-sided parts.
    pub fn scale(&self, factor: f64) -> FlowVector {
        let net: Vec<f64> = (0..self.m()).map(|i| self.net(i) * factor).collect();
        FlowVector::from_net(&net)
    }
}

/// A problem instance: a graph together with a balanced demand vector.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: ArcSystem,
    pub demand: Vec<f64>,
}

/// Instance records as read from text, before orientation and validation.
#[derive(Debug, Clone)]
pub struct RawInstance {
    pub n: usize,
    pub demand: Vec<f64>,
    /// `(u, v, cost_uv, cost_vu)` with 0-based node ids.
    pub edges: Vec<(usize, usize, f64, f64)>,
}

impl RawInstance {
    pub fn has_nonpositive_weight(&self) -> bool {
        self.edges.iter().any(|&(_, _, a, b)| a <= 0.0 || b <= 0.0)
    }

    /// Validates and builds the instance without touching the weights.
    pub fn build(self) -> Result<Instance> {
        let graph = ArcSystem::new(self.n, &self.edges)?;
        validate_demand(self.n, &self.demand)?;
        Ok(Instance { graph, demand: self.demand })
    }

    /// Builds the instance after replacing every cost `w` (which must be a
    /// nonnegative integer) by `1 + ceil(n / eps) * w`. This makes all costs
    /// at least one while changing the optimal value by at most a factor
    /// `1 + eps` after undoing the scale, so zero-cost edges become usable.
    pub fn build_preprocessed(self, eps: f64) -> Result<Instance> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::input("epsilon must be positive and finite"));
        }
        let factor = (self.n as f64 / eps).ceil();
        let mut edges = Vec::with_capacity(self.edges.len());
        for (idx, &(u, v, cost_uv, cost_vu)) in self.edges.iter().enumerate() {
            for cost in [cost_uv, cost_vu] {
                if !cost.is_finite() || cost < 0.0 || cost.fract() != 0.0 {
                    return Err(Error::input(format!(
                        "edge {idx}: cost rescaling requires nonnegative integer costs, got {cost}"
                    )));
                }
            }
            edges.push((u, v, 1.0 + factor * cost_uv, 1.0 + factor * cost_vu));
        }
        let graph = ArcSystem::new(self.n, &edges)?;
        validate_demand(self.n, &self.demand)?;
        Ok(Instance { graph, demand: self.demand })
    }
}

/// Checks that `b` has length `n` and sums to zero within a relative
/// tolerance of its l1 mass.
pub fn validate_demand(n: usize, b: &[f64]) -> Result<()> {
    if b.len() != n {
        return Err(Error::input(format!(
            "demand vector has {} entries, expected {n}",
            b.len()
        )));
    }
    if b.iter().any(|x| !x.is_finite()) {
        return Err(Error::input("demand entries must be finite"));
    }
    let sum: f64 = b.iter().sum();
    let mass: f64 = b.iter().map(|x| x.abs()).sum();
    if sum.abs() > DEMAND_BALANCE_TOL * mass.max(1.0) {
        return Err(Error::input(format!(
            "demands must sum to zero (sum = {sum:e})"
        )));
    }
    Ok(())
}

/// Demand vector for single-source shortest paths from `source`: one unit
/// into every node, `n - 1` units out of the source.
pub fn sssp_demand(n: usize, source: usize) -> Vec<f64> {
    let mut b = vec![1.0; n];
    b[source] = 1.0 - n as f64;
    b
}

/// Parses the instance text format.
///
/// Lines: `c ...` comments, one `p tship <n> <m>` header first, `d <node>
/// <demand>` records, and `e <u> <v> <w> [<w_back>]` records with 1-based
/// node ids. Omitted `w_back` means the edge costs `w` in both directions.
/// Nodes without a `d` record have zero demand.
pub fn parse_instance(text: &str) -> Result<RawInstance> {
    let mut header: Option<(usize, usize)> = None;
    let mut demand: Vec<f64> = Vec::new();
    let mut edges: Vec<(usize, usize, f64, f64)> = Vec::new();

    for (lineno, raw_line) in text.lines().enumerate() {
        let line = lineno + 1;
        let fail = |message: String| Error::Parse { line, message };
        let trimmed = raw_line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match fields[0] {
            "p" => {
                if header.is_some() {
                    return Err(fail("duplicate problem line".into()));
                }
                if fields.len() != 4 || fields[1] != "tship" {
                    return Err(fail(format!("expected `p tship <n> <m>`, got `{trimmed}`")));
                }
                let n = parse_count(fields[2]).map_err(&fail)?;
                let m = parse_count(fields[3]).map_err(&fail)?;
                if n == 0 {
                    return Err(fail("node count must be positive".into()));
                }
                demand = vec![0.0; n];
                header = Some((n, m));
            }
            "d" => {
                let (n, _) = header.ok_or_else(|| fail("record before problem line".into()))?;
                if fields.len() != 3 {
                    return Err(fail(format!("expected `d <node> <demand>`, got `{trimmed}`")));
                }
                let node = parse_node(fields[1], n).map_err(&fail)?;
                let value: f64 = fields[2]
                    .parse()
                    .map_err(|_| fail(format!("invalid demand value `{}`", fields[2])))?;
                demand[node] += value;
            }
            "e" => {
                let (n, _) = header.ok_or_else(|| fail("record before problem line".into()))?;
                if fields.len() != 4 && fields.len() != 5 {
                    return Err(fail(format!(
                        "expected `e <u> <v> <w> [<w_back>]`, got `{trimmed}`"
                    )));
                }
                let u = parse_node(fields[1], n).map_err(&fail)?;
                let v = parse_node(fields[2], n).map_err(&fail)?;
                let w: f64 = fields[3]
                    .parse()
                    .map_err(|_| fail(format!("invalid edge cost `{}`", fields[3])))?;
                let w_back: f64 = if fields.len() == 5 {
                    fields[4]
                        .parse()
                        .map_err(|_| fail(format!("invalid edge cost `{}`", fields[4])))?
                } else {
                    w
                };
                edges.push((u, v, w, w_back));
            }
            other => {
                return Err(fail(format!("unknown record type `{other}`")));
            }
        }
    }

    let (n, m) = header.ok_or_else(|| Error::Parse {
        line: text.lines().count().max(1),
        message: "missing `p tship <n> <m>` line".into(),
    })?;
    if edges.len() != m {
        return Err(Error::input(format!(
            "header declares {m} edges but {} were given",
            edges.len()
        )));
    }
    Ok(RawInstance { n, demand, edges })
}

fn parse_count(field: &str) -> std::result::Result<usize, String> {
    field.parse().map_err(|_| format!("invalid count `{field}`"))
}

fn parse_node(field: &str, n: usize) -> std::result::Result<usize, String> {
    let id: usize = field.parse().map_err(|_| format!("invalid node id `{field}`"))?;
    if id == 0 || id > n {
        return Err(format!("node id {id} out of range 1..={n}"));
    }
    Ok(id - 1)
}

/// Renders an instance in the text format accepted by [`parse_instance`].
pub fn format_instance(instance: &Instance) -> String {
    let g = &instance.graph;
    let mut out = String::new();
    out.push_str(&format!("p tship {} {}\n", g.n(), g.m()));
    for (v, &b) in instance.demand.iter().enumerate() {
        if b != 0.0 {
            out.push_str(&format!("d {} {}\n", v + 1, b));
        }
    }
    for e in g.edges() {
        if e.w_plus == e.w_minus {
            out.push_str(&format!("e {} {} {}\n", e.u + 1, e.v + 1, e.w_plus));
        } else {
            out.push_str(&format!(
                "e {} {} {} {}\n",
                e.u + 1,
                e.v + 1,
                e.w_plus,
                e.w_minus
            ));
        }
    }
    out
}

/// Reads and validates an instance from a file, rescaling integer costs
/// when any cost is zero (using `eps_for_rescale`) and leaving costs alone
/// otherwise.
pub fn load_instance(path: &std::path::Path, eps_for_rescale: f64) -> Result<Instance> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
    let raw = parse_instance(&text)?;
    if raw.has_nonpositive_weight() {
        raw.build_preprocessed(eps_for_rescale)
    } else {
        raw.build()
    }
}
