//! Splitting parameters `c`, conical weights `d`, and classification of
//! which optimality and convergence guarantees a parameter vector enjoys.

use std::collections::VecDeque;

use thiserror::Error;

use crate::graph::{FactorGraph, UnionFind};

/// Slack allowed in the sign and sum conditions so that values such as
/// `3 · (1/3)` are not rejected by rounding.
pub const PARAM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("expected {expected} {kind} parameters, got {got}")]
    SizeMismatch {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("parameter of variable {0} is zero or not finite")]
    BadVariable(usize),
    #[error("parameter of factor {0} is zero or not finite")]
    BadFactor(usize),
    #[error("negative parameter on variable {0}, whose potential contains +inf")]
    NegativeOnHardVariable(usize),
    #[error("negative parameter on factor {0}, whose potential contains +inf")]
    NegativeOnHardFactor(usize),
    #[error("graph has no factors")]
    NoFactors,
    #[error("factor {0} is not a pairwise factor")]
    NotPairwise(usize),
    #[error("tree {tree}: {reason}")]
    BadTree { tree: usize, reason: String },
    #[error("tree probabilities sum to {0}, expected 1")]
    ProbabilitySum(f64),
    #[error("factor {0} has zero appearance probability")]
    UncoveredEdge(usize),
    #[error("conical weights: {0}")]
    BadConical(String),
    #[error("conical weights give factor {0} a zero parameter")]
    ZeroFactorFromConical(usize),
    #[error("conical weights leave variable {0} with zero denominator but d_ii != sum of d_ia")]
    InconsistentConical(usize),
    #[error("conical weights give variable {0} a zero parameter")]
    ZeroVariableFromConical(usize),
}

/// The splitting parameter vector: one nonzero real per variable and per
/// factor. All ones is standard min-sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitParams {
    var: Vec<f64>,
    fac: Vec<f64>,
}

impl SplitParams {
    pub fn new(var: Vec<f64>, fac: Vec<f64>) -> Self {
        Self { var, fac }
    }

    pub fn ones(g: &FactorGraph) -> Self {
        Self::new(vec![1.0; g.num_vars()], vec![1.0; g.num_factors()])
    }

    pub fn var(&self, i: usize) -> f64 {
        self.var[i]
    }

    pub fn factor(&self, a: usize) -> f64 {
        self.fac[a]
    }

    pub fn vars(&self) -> &[f64] {
        &self.var
    }

    pub fn factors(&self) -> &[f64] {
        &self.fac
    }

    pub fn set_var(&mut self, i: usize, v: f64) {
        self.var[i] = v;
    }

    pub fn set_factor(&mut self, a: usize, v: f64) {
        self.fac[a] = v;
    }

    /// Σ_{α∈∂i} c_α.
    pub fn neighbor_sum(&self, g: &FactorGraph, i: usize) -> f64 {
        g.neighbors(i).iter().map(|&a| self.fac[a]).sum()
    }

    /// Coefficient `c_i (1 − Σ_{α∈∂i} c_α)` of `b_i` in the reparameterization.
    pub fn var_coefficient(&self, g: &FactorGraph, i: usize) -> f64 {
        self.var[i] * (1.0 - self.neighbor_sum(g, i))
    }
}

fn usable(v: f64) -> bool {
    v.is_finite() && v != 0.0
}

/// Checks sizes and that every entry is finite and nonzero.
///
/// A negative parameter on a node whose potential contains `+inf` is also
/// rejected, since dividing by it would produce `-inf`.
pub fn validate_params(c: &SplitParams, g: &FactorGraph) -> Result<(), ParamsError> {
    if c.var.len() != g.num_vars() {
        return Err(ParamsError::SizeMismatch {
            kind: "variable",
            expected: g.num_vars(),
            got: c.var.len(),
        });
    }
    if c.fac.len() != g.num_factors() {
        return Err(ParamsError::SizeMismatch {
            kind: "factor",
            expected: g.num_factors(),
            got: c.fac.len(),
        });
    }
    for (i, &v) in c.var.iter().enumerate() {
        if !usable(v) {
            return Err(ParamsError::BadVariable(i));
        }
        if v < 0.0 && g.unary(i).iter().any(|x| x.is_infinite()) {
            return Err(ParamsError::NegativeOnHardVariable(i));
        }
    }
    for (a, &v) in c.fac.iter().enumerate() {
        if !usable(v) {
            return Err(ParamsError::BadFactor(a));
        }
        if v < 0.0 && g.factor(a).values().iter().any(|x| x.is_infinite()) {
            return Err(ParamsError::NegativeOnHardFactor(a));
        }
    }
    Ok(())
}

/// `c_i = 1`, `c_α = 1/d` with `d = max_i |∂i|`.
pub fn make_uniform_params(g: &FactorGraph) -> Result<SplitParams, ParamsError> {
    if g.num_factors() == 0 {
        return Err(ParamsError::NoFactors);
    }
    let d = g.max_degree() as f64;
    Ok(SplitParams::new(
        vec![1.0; g.num_vars()],
        vec![1.0 / d; g.num_factors()],
    ))
}

/// A spanning forest of a pairwise graph, given by factor indices, with its
/// probability under a distribution over forests.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    pub factors: Vec<usize>,
    pub probability: f64,
}

/// Tree-reweighted parameters: `c_i = 1` and `c_ij` equal to the probability
/// that edge `ij` appears in a random tree.
///
/// Each tree must be an acyclic set of pairwise factors spanning every
/// connected component of `g`.
pub fn make_trmp_params(
    g: &FactorGraph,
    trees: &[SpanningTree],
) -> Result<SplitParams, ParamsError> {
    if g.num_factors() == 0 {
        return Err(ParamsError::NoFactors);
    }
    if let Some(a) = (0..g.num_factors()).find(|&a| g.factor(a).arity() != 2) {
        return Err(ParamsError::NotPairwise(a));
    }
    let components = {
        let mut labels = g.components();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    };
    let mut fac = vec![0.0; g.num_factors()];
    let mut total = 0.0;
    for (t, tree) in trees.iter().enumerate() {
        let bad = |reason: &str| ParamsError::BadTree {
            tree: t,
            reason: reason.to_string(),
        };
        if !(tree.probability.is_finite() && tree.probability >= 0.0) {
            return Err(bad("probability must be finite and nonnegative"));
        }
        let mut uf = UnionFind::new(g.num_vars());
        for &a in &tree.factors {
            if a >= g.num_factors() {
                return Err(bad(&format!("unknown factor {a}")));
            }
            let s = g.factor(a).scope();
            if !uf.union(s[0], s[1]) {
                return Err(bad("edges contain a cycle"));
            }
        }
        if tree.factors.len() + components != g.num_vars() {
            return Err(bad("edges do not span the graph"));
        }
        for &a in &tree.factors {
            fac[a] += tree.probability;
        }
        total += tree.probability;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(ParamsError::ProbabilitySum(total));
    }
    if let Some(a) = fac.iter().position(|&p| p <= 0.0) {
        return Err(ParamsError::UncoveredEdge(a));
    }
    Ok(SplitParams::new(vec![1.0; g.num_vars()], fac))
}

/// Nonnegative weights of a conical combination of beliefs:
/// `Σ_i d_ii b_i + Σ_α d_αα b_α + Σ_{i∈α} d_iα (b_α − b_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicalWeights {
    /// `d_ii` per variable.
    pub var: Vec<f64>,
    /// `d_αα` per factor.
    pub fac: Vec<f64>,
    /// `d_iα` per edge id.
    pub edge: Vec<f64>,
}

impl ConicalWeights {
    pub fn zeros(g: &FactorGraph) -> Self {
        Self {
            var: vec![0.0; g.num_vars()],
            fac: vec![0.0; g.num_factors()],
            edge: vec![0.0; g.num_edges()],
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.var
            .iter()
            .chain(&self.fac)
            .chain(&self.edge)
            .all(|&v| v >= 0.0 && v.is_finite())
    }

    /// Σ_{α∈∂i} d_iα.
    pub fn var_edge_sum(&self, g: &FactorGraph, i: usize) -> f64 {
        g.var_edges(i).iter().map(|&e| self.edge[e]).sum()
    }

    /// Σ_{i∈α} d_iα.
    pub fn factor_edge_sum(&self, g: &FactorGraph, a: usize) -> f64 {
        g.factor_edges(a).map(|e| self.edge[e]).sum()
    }
}

/// Chooses `c` so the splitting reparameterization matches the conical form
/// `d`: `c_α = d_αα + Σ_{i∈α} d_iα` and
/// `c_i = (d_ii − Σ_{α∈∂i} d_iα) / (1 − Σ_{α∈∂i} c_α)`, with `c_i = 1`
/// when the denominator vanishes.
pub fn params_from_conical(d: &ConicalWeights, g: &FactorGraph) -> Result<SplitParams, ParamsError> {
    if d.var.len() != g.num_vars() || d.fac.len() != g.num_factors() || d.edge.len() != g.num_edges() {
        return Err(ParamsError::BadConical("sizes do not match the graph".into()));
    }
    if !d.is_nonnegative() {
        return Err(ParamsError::BadConical("entries must be finite and nonnegative".into()));
    }
    let mut fac = Vec::with_capacity(g.num_factors());
    for a in 0..g.num_factors() {
        let c = d.fac[a] + d.factor_edge_sum(g, a);
        if c == 0.0 {
            return Err(ParamsError::ZeroFactorFromConical(a));
        }
        fac.push(c);
    }
    let mut var = Vec::with_capacity(g.num_vars());
    for i in 0..g.num_vars() {
        let num = d.var[i] - d.var_edge_sum(g, i);
        let den = 1.0 - g.neighbors(i).iter().map(|&a| fac[a]).sum::<f64>();
        let c = if den.abs() <= PARAM_TOL {
            if num.abs() > PARAM_TOL {
                return Err(ParamsError::InconsistentConical(i));
            }
            1.0
        } else {
            num / den
        };
        if c == 0.0 {
            return Err(ParamsError::ZeroVariableFromConical(i));
        }
        var.push(c);
    }
    Ok(SplitParams::new(var, fac))
}

/// Canonical conical weights `d_αα = c_α`, `d_iα = 0`,
/// `d_ii = c_i (1 − Σ c_α)`, available exactly when the global sign
/// conditions hold.
pub fn conical_from_params(c: &SplitParams, g: &FactorGraph) -> Option<ConicalWeights> {
    if global_sign_violation(c, g).is_some() {
        return None;
    }
    Some(ConicalWeights {
        var: (0..g.num_vars())
            .map(|i| c.var_coefficient(g, i).max(0.0))
            .collect(),
        fac: c.fac.clone(),
        edge: vec![0.0; g.num_edges()],
    })
}

/// Optimality guarantees, weakest first so that `Ord` ranks strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OptimalityClass {
    None,
    LocalOnly,
    GlobalConical,
    GlobalSign,
}

impl std::fmt::Display for OptimalityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            OptimalityClass::None => "None",
            OptimalityClass::LocalOnly => "LocalOnly",
            OptimalityClass::GlobalConical => "GlobalConical",
            OptimalityClass::GlobalSign => "GlobalSign",
        };
        f.write_str(s)
    }
}

/// First condition that fails in a global or local sign test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignViolation {
    /// `c_α ≤ 0`.
    Factor { factor: usize, value: f64 },
    /// `c_i (1 − Σ_{α∈∂i} c_α) < 0` (global) or the slice weight
    /// `c_i (1 − Σ c_α) + Σ c_α < 0` (local).
    Variable { var: usize, value: f64 },
}

/// First condition that fails in the asynchronous convergence test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AsyncViolation {
    VariableNotOne { var: usize, value: f64 },
    FactorNonPositive { factor: usize, value: f64 },
    NeighborSum { var: usize, sum: f64 },
}

/// Result of [`classify_params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub class: OptimalityClass,
    pub async_convergent: bool,
    pub standard_minsum: bool,
    pub global_sign: Option<SignViolation>,
    pub local: Option<SignViolation>,
    pub async_condition: Option<AsyncViolation>,
    /// Weights found by [`search_conical_weights`], when that search ran.
    pub conical: Option<ConicalWeights>,
}

/// `c_α > 0` for all α and `c_i (1 − Σ_{α∈∂i} c_α) ≥ 0` for all i.
pub fn global_sign_violation(c: &SplitParams, g: &FactorGraph) -> Option<SignViolation> {
    if let Some(a) = c.fac.iter().position(|&v| v <= 0.0) {
        return Some(SignViolation::Factor {
            factor: a,
            value: c.fac[a],
        });
    }
    (0..g.num_vars()).find_map(|i| {
        let value = c.var_coefficient(g, i);
        (value < -PARAM_TOL).then_some(SignViolation::Variable { var: i, value })
    })
}

/// Per-variable slice test: the terms of the reparameterization that
/// involve `x_i` admit nonnegative weights. This holds iff `c_α > 0` for
/// `α ∈ ∂i` and `c_i (1 − Σ c_α) + Σ c_α ≥ 0`.
pub fn local_violation(c: &SplitParams, g: &FactorGraph) -> Option<SignViolation> {
    (0..g.num_vars()).find_map(|i| slice_violation(c, g, i))
}

fn slice_violation(c: &SplitParams, g: &FactorGraph, i: usize) -> Option<SignViolation> {
    if let Some(&a) = g.neighbors(i).iter().find(|&&a| c.fac[a] <= 0.0) {
        return Some(SignViolation::Factor {
            factor: a,
            value: c.fac[a],
        });
    }
    let value = slice_self_weight(c, g, i);
    (value < -PARAM_TOL).then_some(SignViolation::Variable { var: i, value })
}

/// Largest feasible `d_ii` of the slice at `i`: `c_i (1 − Σ c_α) + Σ c_α`.
pub fn slice_self_weight(c: &SplitParams, g: &FactorGraph, i: usize) -> f64 {
    c.var_coefficient(g, i) + c.neighbor_sum(g, i)
}

/// `c_i = 1`, `c_α > 0` and `Σ_{α∈∂i} c_α ≤ 1`.
pub fn async_violation(c: &SplitParams, g: &FactorGraph) -> Option<AsyncViolation> {
    if let Some(i) = c.var.iter().position(|&v| v != 1.0) {
        return Some(AsyncViolation::VariableNotOne {
            var: i,
            value: c.var[i],
        });
    }
    if let Some(a) = c.fac.iter().position(|&v| v <= 0.0) {
        return Some(AsyncViolation::FactorNonPositive {
            factor: a,
            value: c.fac[a],
        });
    }
    (0..g.num_vars()).find_map(|i| {
        let sum = c.neighbor_sum(g, i);
        (sum > 1.0 + PARAM_TOL).then_some(AsyncViolation::NeighborSum { var: i, sum })
    })
}

/// Classifies `c` by the direct sign tests: `GlobalSign`, else `LocalOnly`,
/// else `None`. No search for other conical forms is done; see
/// [`classify_params_with_search`].
pub fn classify_params(c: &SplitParams, g: &FactorGraph) -> Result<Classification, ParamsError> {
    validate_params(c, g)?;
    let global_sign = global_sign_violation(c, g);
    let local = local_violation(c, g);
    let async_condition = async_violation(c, g);
    let class = if global_sign.is_none() {
        OptimalityClass::GlobalSign
    } else if local.is_none() {
        OptimalityClass::LocalOnly
    } else {
        OptimalityClass::None
    };
    Ok(Classification {
        class,
        async_convergent: async_condition.is_none(),
        standard_minsum: c.var.iter().chain(&c.fac).all(|&v| v == 1.0),
        global_sign,
        local,
        async_condition,
        conical: None,
    })
}

/// Like [`classify_params`], but when the sign test fails, searches for
/// any global conical form and reports `GlobalConical` if one exists.
pub fn classify_params_with_search(
    c: &SplitParams,
    g: &FactorGraph,
) -> Result<Classification, ParamsError> {
    let mut cls = classify_params(c, g)?;
    if cls.class < OptimalityClass::GlobalConical {
        if let Some(d) = search_conical_weights(c, g) {
            cls.class = OptimalityClass::GlobalConical;
            cls.conical = Some(d);
        }
    } else {
        cls.conical = conical_from_params(c, g);
    }
    Ok(cls)
}

/// Searches for nonnegative `d` with `c_α = d_αα + Σ_{i∈α} d_iα` and
/// `c_i (1 − Σ c_α) = d_ii − Σ_{α∈∂i} d_iα`.
///
/// Each variable with a negative coefficient must draw that much weight
/// from its factors, and each factor can give at most `c_α`; this is a
/// bipartite transportation problem, solved as a maximum flow.
pub fn search_conical_weights(c: &SplitParams, g: &FactorGraph) -> Option<ConicalWeights> {
    if c.fac.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let n = g.num_vars();
    let m = g.num_factors();
    let coef: Vec<f64> = (0..n).map(|i| c.var_coefficient(g, i)).collect();
    let need: Vec<f64> = coef.iter().map(|&v| (-v).max(0.0)).collect();
    let demand: f64 = need.iter().sum();

    let source = 0;
    let sink = 1 + m + n;
    let mut net = FlowNetwork::new(sink + 1);
    for a in 0..m {
        net.add_arc(source, 1 + a, c.fac[a]);
    }
    let mut edge_arcs = Vec::with_capacity(g.num_edges());
    for e in g.edges() {
        edge_arcs.push(net.add_arc(1 + e.factor, 1 + m + e.var, f64::INFINITY));
    }
    for (i, &v) in need.iter().enumerate() {
        if v > 0.0 {
            net.add_arc(1 + m + i, sink, v);
        }
    }
    let flow = net.max_flow(source, sink);
    if flow < demand - PARAM_TOL * (1.0 + demand) {
        return None;
    }
    let mut d = ConicalWeights::zeros(g);
    for (e, &arc) in edge_arcs.iter().enumerate() {
        d.edge[e] = net.flow(arc).max(0.0);
    }
    for a in 0..m {
        d.fac[a] = (c.fac[a] - d.factor_edge_sum(g, a)).max(0.0);
    }
    for i in 0..n {
        d.var[i] = (coef[i] + d.var_edge_sum(g, i)).max(0.0);
    }
    Some(d)
}

struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
    base: Vec<f64>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            base: Vec::new(),
        }
    }

    fn add_arc(&mut self, u: usize, v: usize, cap: f64) -> usize {
        let id = self.to.len();
        self.adj[u].push(id);
        self.to.push(v);
        self.cap.push(cap);
        self.base.push(cap);
        self.adj[v].push(id + 1);
        self.to.push(u);
        self.cap.push(0.0);
        self.base.push(0.0);
        id
    }

    fn flow(&self, arc: usize) -> f64 {
        self.cap[arc ^ 1]
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        const EPS: f64 = 1e-15;
        let mut total = 0.0;
        loop {
            let mut prev = vec![usize::MAX; self.adj.len()];
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &arc in &self.adj[u] {
                    let v = self.to[arc];
                    if v != s && prev[v] == usize::MAX && self.cap[arc] > EPS {
                        prev[v] = arc;
                        queue.push_back(v);
                    }
                }
            }
            if prev[t] == usize::MAX {
                return total;
            }
            let mut push = f64::INFINITY;
            let mut v = t;
            while v != s {
                let arc = prev[v];
                push = push.min(self.cap[arc]);
                v = self.to[arc ^ 1];
            }
            let mut v = t;
            while v != s {
                let arc = prev[v];
                self.cap[arc] -= push;
                self.cap[arc ^ 1] += push;
                v = self.to[arc ^ 1];
            }
            total += push;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;

    fn star3() -> FactorGraph {
        let mut g = FactorGraph::new(vec![2; 4]).unwrap();
        for leaf in 1..4 {
            g.add_factor(vec![0, leaf], vec![0.0; 4]).unwrap();
        }
        g
    }

    #[test]
    fn validation() {
        let g = g1();
        assert!(validate_params(&SplitParams::ones(&g), &g).is_ok());
        let zero = SplitParams::new(vec![1.0, 1.0], vec![0.0]);
        assert_eq!(validate_params(&zero, &g), Err(ParamsError::BadFactor(0)));
        let neg = SplitParams::new(vec![1.0, 1.0], vec![-1.0]);
        assert!(validate_params(&neg, &g).is_ok());
        let short = SplitParams::new(vec![1.0], vec![1.0]);
        assert!(matches!(
            validate_params(&short, &g),
            Err(ParamsError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn uniform_params() {
        let c = make_uniform_params(&g2()).unwrap();
        assert_eq!(c.factors(), &[0.5; 3]);
        assert_eq!(c.vars(), &[1.0; 3]);
        assert_eq!(make_uniform_params(&g1()).unwrap().factors(), &[1.0]);
        assert_eq!(make_uniform_params(&star3()).unwrap().factors(), &[1.0 / 3.0; 3]);
        let lone = FactorGraph::new(vec![2]).unwrap();
        assert_eq!(make_uniform_params(&lone), Err(ParamsError::NoFactors));
    }

    #[test]
    fn ones_on_triangle_needs_search_for_conical() {
        let g = g2();
        let c = SplitParams::ones(&g);
        assert_eq!(classify_params(&c, &g).unwrap().class, OptimalityClass::LocalOnly);
        let cls = classify_params_with_search(&c, &g).unwrap();
        assert_eq!(cls.class, OptimalityClass::GlobalConical);
        assert!(cls.global_sign.is_some());
    }

    #[test]
    fn trmp_on_triangle() {
        let g = g2();
        let trees: Vec<SpanningTree> = [[0, 1], [1, 2], [0, 2]]
            .iter()
            .map(|f| SpanningTree {
                factors: f.to_vec(),
                probability: 1.0 / 3.0,
            })
            .collect();
        let c = make_trmp_params(&g, &trees).unwrap();
        for &v in c.factors() {
            assert!((v - 2.0 / 3.0).abs() < 1e-15);
        }
        let cls = classify_params_with_search(&c, &g).unwrap();
        assert_eq!(cls.class, OptimalityClass::GlobalConical);
        assert!(cls.global_sign.is_some());

        let missing = vec![SpanningTree {
            factors: vec![0, 1],
            probability: 1.0,
        }];
        assert_eq!(make_trmp_params(&g, &missing), Err(ParamsError::UncoveredEdge(2)));
        let cyclic = vec![SpanningTree {
            factors: vec![0, 1, 2],
            probability: 1.0,
        }];
        assert!(matches!(
            make_trmp_params(&g, &cyclic),
            Err(ParamsError::BadTree { .. })
        ));
    }

    #[test]
    fn trmp_single_edge() {
        let g = g1();
        let c = make_trmp_params(
            &g,
            &[SpanningTree {
                factors: vec![0],
                probability: 1.0,
            }],
        )
        .unwrap();
        assert_eq!(c.factors(), &[1.0]);
    }

    #[test]
    fn classification_examples() {
        let g = g2();
        let uni = classify_params(&make_uniform_params(&g).unwrap(), &g).unwrap();
        assert_eq!(uni.class, OptimalityClass::GlobalSign);
        assert!(uni.async_convergent && !uni.standard_minsum);

        let ones = classify_params(&SplitParams::ones(&g), &g).unwrap();
        assert_eq!(ones.class, OptimalityClass::LocalOnly);
        assert!(ones.standard_minsum && !ones.async_convergent);
        assert_eq!(
            ones.global_sign,
            Some(SignViolation::Variable { var: 0, value: -1.0 })
        );

        let g = g1();
        assert_eq!(
            classify_params(&SplitParams::ones(&g), &g).unwrap().class,
            OptimalityClass::GlobalSign
        );
    }

    #[test]
    fn negative_factor_is_unclassified() {
        let g = g2();
        let c = SplitParams::new(vec![1.0; 3], vec![-1.0, 0.5, 0.5]);
        let cls = classify_params_with_search(&c, &g).unwrap();
        assert_eq!(cls.class, OptimalityClass::None);
    }

    #[test]
    fn conical_examples() {
        // Node with two factors, d_αα = 1 and d_ii = 1.
        let g = FactorGraph::new(vec![2, 2, 2])
            .unwrap()
            .with_factor(vec![0, 1], vec![0.0; 4])
            .unwrap()
            .with_factor(vec![0, 2], vec![0.0; 4])
            .unwrap();
        let mut d = ConicalWeights::zeros(&g);
        d.fac = vec![1.0, 1.0];
        d.var[0] = 1.0;
        let c = params_from_conical(&d, &g).unwrap();
        assert_eq!(c.factors(), &[1.0, 1.0]);
        assert_eq!(c.var(0), -1.0);

        let mut d = ConicalWeights::zeros(&g);
        d.fac = vec![0.5, 0.5];
        assert_eq!(
            params_from_conical(&d, &g),
            Err(ParamsError::ZeroVariableFromConical(1))
        );
        d.var = vec![0.0, 0.5, 0.5];
        let c = params_from_conical(&d, &g).unwrap();
        assert_eq!(c.vars(), &[1.0, 1.0, 1.0]);

        let mut d = ConicalWeights::zeros(&g);
        d.fac = vec![1.0, 0.0];
        assert_eq!(
            params_from_conical(&d, &g),
            Err(ParamsError::ZeroFactorFromConical(1))
        );

        let g = g2();
        let d = conical_from_params(&make_uniform_params(&g).unwrap(), &g).unwrap();
        assert_eq!(d.fac, vec![0.5; 3]);
        assert_eq!(d.var, vec![0.0; 3]);
        assert!(conical_from_params(&SplitParams::ones(&g), &g).is_none());
        let g = g1();
        let d = conical_from_params(&SplitParams::ones(&g), &g).unwrap();
        assert_eq!((d.fac[0], d.var[0]), (1.0, 0.0));
    }

    #[test]
    fn search_finds_cycle_decomposition() {
        let g = g2();
        let c = SplitParams::ones(&g);
        let d = search_conical_weights(&c, &g).unwrap();
        assert!(d.is_nonnegative());
        for a in 0..3 {
            assert!((d.fac[a] + d.factor_edge_sum(&g, a) - 1.0).abs() < 1e-12);
        }
        for i in 0..3 {
            assert!((d.var[i] - d.var_edge_sum(&g, i) + 1.0).abs() < 1e-12);
        }
        // Star with all-ones parameters: the center needs 2 units, its
        // three factors supply 3.
        assert!(search_conical_weights(&SplitParams::ones(&star3()), &star3()).is_some());
        // Two factors on one pair: with weights 1 both ends need 1 unit
        // from a supply of 2; with weights 3 they need 10 from a supply of 6.
        let g = g1().with_factor(vec![0, 1], vec![0.0; 4]).unwrap();
        assert!(search_conical_weights(&SplitParams::ones(&g), &g).is_some());
        let c = SplitParams::new(vec![1.0, 1.0], vec![3.0, 3.0]);
        assert!(search_conical_weights(&c, &g).is_none());
    }
}
