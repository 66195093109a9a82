//! Pairwise binary models: the direct edge update and extension of partial
//! solutions read off tied beliefs.

use thiserror::Error;

use crate::beliefs::{argmin_set, BeliefSet};
use crate::engine::MessageState;
use crate::graph::{for_each_joint_state, FactorGraph, GraphError};
use crate::oracle::{OracleError, DEFAULT_STATE_CAP};
use crate::params::SplitParams;

/// Tolerance for treating a belief vector as constant.
pub const CONSTANT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PairwiseError {
    #[error("graph is not a pairwise binary model (factor {0})")]
    NotPairwiseBinary(usize),
    #[error("graph has non-binary variable {0}")]
    NonBinaryVariable(usize),
    #[error("variable {0} has parameter other than 1")]
    VariableParamNotOne(usize),
    #[error("edge {edge} does not touch variable {var}")]
    NotIncident { edge: usize, var: usize },
    #[error("parameter sizes do not match the model")]
    ParamsMismatch,
    #[error("message on edge {0} is not finite")]
    InfiniteMessage(usize),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// One edge `(i, j)` with table `ψ(x_i, x_j)` stored row-major and its
/// parameter `c_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEdge {
    pub i: usize,
    pub j: usize,
    pub table: [f64; 4],
    pub c: f64,
}

impl PairEdge {
    fn psi(&self, xi: usize, xj: usize) -> f64 {
        self.table[xi * 2 + xj]
    }
}

/// Binary variables with pairwise factors and unit variable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseModel {
    unary: Vec<[f64; 2]>,
    edges: Vec<PairEdge>,
    incident: Vec<Vec<usize>>,
}

impl PairwiseModel {
    /// Mirrors a factor graph whose factors all have two binary variables.
    /// Every `c_i` must be 1.
    pub fn from_graph(g: &FactorGraph, c: &SplitParams) -> Result<Self, PairwiseError> {
        if c.vars().len() != g.num_vars() || c.factors().len() != g.num_factors() {
            return Err(PairwiseError::ParamsMismatch);
        }
        if let Some(i) = (0..g.num_vars()).find(|&i| g.cardinality(i) != 2) {
            return Err(PairwiseError::NonBinaryVariable(i));
        }
        if let Some(i) = c.vars().iter().position(|&v| v != 1.0) {
            return Err(PairwiseError::VariableParamNotOne(i));
        }
        let unary = (0..g.num_vars())
            .map(|i| [g.unary(i)[0], g.unary(i)[1]])
            .collect();
        let mut edges = Vec::with_capacity(g.num_factors());
        let mut incident = vec![Vec::new(); g.num_vars()];
        for (a, t) in g.factors().iter().enumerate() {
            if t.arity() != 2 {
                return Err(PairwiseError::NotPairwiseBinary(a));
            }
            let v = t.values();
            edges.push(PairEdge {
                i: t.scope()[0],
                j: t.scope()[1],
                table: [v[0], v[1], v[2], v[3]],
                c: c.factor(a),
            });
            incident[t.scope()[0]].push(a);
            incident[t.scope()[1]].push(a);
        }
        Ok(Self { unary, edges, incident })
    }

    /// The equivalent factor graph and parameters.
    pub fn to_graph(&self) -> Result<(FactorGraph, SplitParams), PairwiseError> {
        let mut g = FactorGraph::new(vec![2; self.unary.len()])?;
        for (i, phi) in self.unary.iter().enumerate() {
            g.set_unary(i, phi.to_vec())?;
        }
        for e in &self.edges {
            g.add_factor(vec![e.i, e.j], e.table.to_vec())?;
        }
        let c = SplitParams::new(
            vec![1.0; self.unary.len()],
            self.edges.iter().map(|e| e.c).collect(),
        );
        Ok((g, c))
    }

    pub fn num_vars(&self) -> usize {
        self.unary.len()
    }

    pub fn edges(&self) -> &[PairEdge] {
        &self.edges
    }

    /// Edges touching variable `i`, ascending.
    pub fn incident(&self, i: usize) -> &[usize] {
        &self.incident[i]
    }
}

/// Directed edge messages: `msgs[2e]` is `m_{i→j}(x_j)` and `msgs[2e + 1]`
/// is `m_{j→i}(x_i)` for edge `e = (i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseState {
    pub msgs: Vec<[f64; 2]>,
}

impl PairwiseState {
    pub fn zeros(model: &PairwiseModel) -> Self {
        Self {
            msgs: vec![[0.0; 2]; 2 * model.edges.len()],
        }
    }

    /// Slot of the message sent from `source` along edge `e`.
    pub fn slot(model: &PairwiseModel, e: usize, source: usize) -> Result<usize, PairwiseError> {
        let edge = &model.edges[e];
        if source == edge.i {
            Ok(2 * e)
        } else if source == edge.j {
            Ok(2 * e + 1)
        } else {
            Err(PairwiseError::NotIncident { edge: e, var: source })
        }
    }

    /// Reads the factor-to-variable messages of a general state: the message
    /// `m_{i→j}` is `m_{α→j}` for the factor `α` of the edge.
    pub fn from_messages(g: &FactorGraph, state: &MessageState) -> Self {
        let msgs = (0..g.num_factors())
            .flat_map(|a| {
                let to_j = state.to_var(g.edge_id(a, 1));
                let to_i = state.to_var(g.edge_id(a, 0));
                [[to_j[0], to_j[1]], [to_i[0], to_i[1]]]
            })
            .collect();
        Self { msgs }
    }
}

/// `m_{i→j}(x_j) = min_{x_i} [φ_i + ψ_ij/c_ij + (c_ij − 1) m_{j→i} + Σ_{k∈∂i∖j} c_ki m_{k→i}]`
/// along edge `e` from `source`, min-normalized.
pub fn pairwise_update(
    model: &PairwiseModel,
    state: &PairwiseState,
    e: usize,
    source: usize,
) -> Result<[f64; 2], PairwiseError> {
    PairwiseState::slot(model, e, source)?;
    let edge = &model.edges[e];
    let mut h = model.unary[source];
    for &f in &model.incident[source] {
        let into = PairwiseState::slot(model, f, source)? ^ 1;
        let w = if f == e { edge.c - 1.0 } else { model.edges[f].c };
        if w != 0.0 {
            for s in 0..2 {
                h[s] += w * state.msgs[into][s];
            }
        }
    }
    let mut out = [f64::INFINITY; 2];
    for (xt, o) in out.iter_mut().enumerate() {
        for (xs, hs) in h.iter().enumerate() {
            let psi = if source == edge.i { edge.psi(xs, xt) } else { edge.psi(xt, xs) };
            if psi == f64::INFINITY {
                continue;
            }
            *o = o.min(hs + psi / edge.c);
        }
    }
    let lo = out[0].min(out[1]);
    let norm = [out[0] - lo, out[1] - lo];
    if norm.iter().all(|v| v.is_finite()) {
        Ok(norm)
    } else {
        Err(PairwiseError::InfiniteMessage(e))
    }
}

/// Asynchronous sweep in ascending variable order: at each variable `j`,
/// every incoming message `m_{i→j}` is refreshed, edges in ascending order.
pub fn pairwise_sweep(model: &PairwiseModel, state: &mut PairwiseState) -> Result<(), PairwiseError> {
    for j in 0..model.num_vars() {
        for &e in &model.incident[j] {
            let edge = &model.edges[e];
            let source = if edge.i == j { edge.j } else { edge.i };
            let m = pairwise_update(model, state, e, source)?;
            let slot = PairwiseState::slot(model, e, source)?;
            state.msgs[slot] = m;
        }
    }
    Ok(())
}

/// Outcome of [`extend_partial_solution`].
#[derive(Debug, Clone, PartialEq)]
pub enum Extension {
    /// A full assignment agreeing with every uniquely determined variable.
    Complete(Vec<usize>),
    /// `var` shares a factor with the fixed variable `fixed` but is neither
    /// fixed itself nor has a constant belief.
    Violation { fixed: usize, var: usize },
}

/// Fixes every variable whose belief has a unique minimizer and, if each
/// neighbor of a fixed variable is fixed or has a constant belief,
/// completes the assignment by exhaustive search over the free variables
/// with the fixed ones held in place.
pub fn extend_partial_solution(
    g: &FactorGraph,
    b: &BeliefSet,
    tie_tol: f64,
) -> Result<Extension, PairwiseError> {
    if let Some(i) = (0..g.num_vars()).find(|&i| g.cardinality(i) != 2) {
        return Err(PairwiseError::NonBinaryVariable(i));
    }
    if let Some(a) = (0..g.num_factors()).find(|&a| g.factor(a).arity() > 2) {
        return Err(PairwiseError::NotPairwiseBinary(a));
    }
    let fixed: Vec<Option<usize>> = b
        .var
        .iter()
        .map(|v| match argmin_set(v, tie_tol).as_slice() {
            [s] => Some(*s),
            _ => None,
        })
        .collect();
    let constant = |j: usize| {
        let v = &b.var[j];
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo <= CONSTANT_TOL
    };
    for t in g.factors() {
        for &i in t.scope() {
            if fixed[i].is_none() {
                continue;
            }
            for &j in t.scope() {
                if fixed[j].is_none() && !constant(j) {
                    return Ok(Extension::Violation { fixed: i, var: j });
                }
            }
        }
    }
    let free: Vec<usize> = (0..g.num_vars()).filter(|&i| fixed[i].is_none()).collect();
    let size = 1u128 << free.len().min(127);
    if size > DEFAULT_STATE_CAP as u128 {
        return Err(OracleError::CapExceeded {
            size,
            cap: DEFAULT_STATE_CAP,
        }
        .into());
    }
    let mut x: Vec<usize> = fixed.iter().map(|s| s.unwrap_or(0)).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for_each_joint_state(&vec![2; free.len()], |_, s| {
        for (&v, &st) in free.iter().zip(s) {
            x[v] = st;
        }
        let val = g.evaluate_unchecked(&x);
        if val < f64::INFINITY && best.as_ref().is_none_or(|(bv, _)| val < *bv) {
            best = Some((val, x.clone()));
        }
    });
    best.map(|(_, x)| Extension::Complete(x))
        .ok_or(OracleError::Infeasible.into())
}
