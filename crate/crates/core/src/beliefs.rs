//! Beliefs, the admissibility and min-consistency checks, estimates and the
//! dual lower bound.

use thiserror::Error;

use crate::engine::MessageState;
use crate::graph::{for_each_joint_state, FactorGraph};
use crate::oracle::{for_each_assignment, OracleError, DEFAULT_STATE_CAP};
use crate::params::{classify_params, slice_self_weight, OptimalityClass, ParamsError, SplitParams};

/// Absolute tolerance for treating belief entries as tied.
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeliefError {
    #[error("message state is not finite")]
    NonFiniteState,
    #[error("message state does not match the graph")]
    StateMismatch,
    #[error("no assignment with finite objective found to fix kappa")]
    NoFiniteReference,
    #[error("parameters do not pass the global sign test; lower bound undefined")]
    NotGlobalSign,
    #[error("slice at variable {0} has no nonnegative weights")]
    NotLocal(usize),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Variable and factor beliefs plus the constant `kappa` of the
/// admissibility identity.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefSet {
    /// `b_i` per variable.
    pub var: Vec<Vec<f64>>,
    /// `b_α` per factor, laid out like the factor's table.
    pub fac: Vec<Vec<f64>>,
    pub kappa: f64,
}

impl BeliefSet {
    /// Minimum entry of `b_i`.
    pub fn var_min(&self, i: usize) -> f64 {
        self.var[i].iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Minimum entry of `b_α`.
    pub fn factor_min(&self, a: usize) -> f64 {
        self.fac[a].iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Beliefs from factor-to-variable messages (all additive constants zero),
/// then `kappa` fitted so that `f(x_ref) = kappa + S(x_ref)`.
///
/// `x_ref` is the all-zeros assignment if its objective is finite, else
/// the per-variable belief argmin, else the first finite assignment in
/// lexicographic order within the default oracle cap.
pub fn compute_beliefs(
    g: &FactorGraph,
    c: &SplitParams,
    state: &MessageState,
) -> Result<BeliefSet, BeliefError> {
    if state.to_var_all().len() != g.num_edges() || state.to_factor_all().len() != g.num_edges() {
        return Err(BeliefError::StateMismatch);
    }
    if state.check_finite().is_err() {
        return Err(BeliefError::NonFiniteState);
    }
    // w_i = Σ_{β∈∂i} c_β m_{β→i}
    let weighted: Vec<Vec<f64>> = (0..g.num_vars())
        .map(|i| {
            let mut w = vec![0.0; g.cardinality(i)];
            for &e in g.var_edges(i) {
                let cb = c.factor(g.edge(e).factor);
                for (acc, m) in w.iter_mut().zip(state.to_var(e)) {
                    *acc += cb * m;
                }
            }
            w
        })
        .collect();
    let var: Vec<Vec<f64>> = (0..g.num_vars())
        .map(|i| {
            let ci = c.var(i);
            g.unary(i)
                .iter()
                .zip(&weighted[i])
                .map(|(p, w)| p / ci + w)
                .collect()
        })
        .collect();
    let fac: Vec<Vec<f64>> = (0..g.num_factors())
        .map(|a| {
            let t = g.factor(a);
            let ca = c.factor(a);
            // Per scope position: φ_k + c_k (w_k − m_{α→k}), i.e. c_k (b_k − m_{α→k}).
            let terms: Vec<Vec<f64>> = t
                .scope()
                .iter()
                .enumerate()
                .map(|(p, &k)| {
                    let ck = c.var(k);
                    let m = state.to_var(g.edge_id(a, p));
                    (0..g.cardinality(k))
                        .map(|s| g.unary(k)[s] + ck * (weighted[k][s] - m[s]))
                        .collect()
                })
                .collect();
            let mut out = Vec::with_capacity(t.len());
            for_each_joint_state(t.dims(), |idx, s| {
                let mut v = t.values()[idx] / ca;
                for (p, &sp) in s.iter().enumerate() {
                    v += terms[p][sp];
                }
                out.push(v);
            });
            out
        })
        .collect();
    let mut b = BeliefSet { var, fac, kappa: 0.0 };
    let x_ref = reference_assignment(g, &b)?;
    b.kappa = g.evaluate_unchecked(&x_ref) - reparameterized_sum(g, c, &b, &x_ref);
    Ok(b)
}

fn reference_assignment(g: &FactorGraph, b: &BeliefSet) -> Result<Vec<usize>, BeliefError> {
    let zeros = vec![0usize; g.num_vars()];
    if g.evaluate_unchecked(&zeros).is_finite() {
        return Ok(zeros);
    }
    let greedy: Vec<usize> = b.var.iter().map(|v| argmin(v)).collect();
    if g.evaluate_unchecked(&greedy).is_finite() {
        return Ok(greedy);
    }
    let mut found = None;
    // The scan cannot stop early through the callback, so it only records
    // the first hit.
    for_each_assignment(g, DEFAULT_STATE_CAP, |x, v| {
        if found.is_none() && v.is_finite() {
            found = Some(x.to_vec());
        }
    })
    .map_err(|_| BeliefError::NoFiniteReference)?;
    found.ok_or(BeliefError::NoFiniteReference)
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (s, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = s;
        }
    }
    best
}

/// `S(x) = Σ_i c_i b_i(x_i) + Σ_α c_α [b_α(x_α) − Σ_{k∈α} c_k b_k(x_k)]`,
/// without `kappa`. Returns `+inf` if any belief entry involved is `+inf`.
pub fn reparameterized_sum(g: &FactorGraph, c: &SplitParams, b: &BeliefSet, x: &[usize]) -> f64 {
    let mut total = 0.0;
    for i in 0..g.num_vars() {
        let v = b.var[i][x[i]];
        if v == f64::INFINITY {
            return f64::INFINITY;
        }
        total += c.var(i) * v;
    }
    for a in 0..g.num_factors() {
        let t = g.factor(a);
        let ba = b.fac[a][t.index_for(x)];
        if ba == f64::INFINITY {
            return f64::INFINITY;
        }
        let inner: f64 = t.scope().iter().map(|&k| c.var(k) * b.var[k][x[k]]).sum();
        total += c.factor(a) * (ba - inner);
    }
    total
}

/// Largest `|f(x) − (kappa + S(x))|` over all assignments; points where
/// both sides are `+inf` contribute 0.
pub fn check_admissible(
    g: &FactorGraph,
    c: &SplitParams,
    b: &BeliefSet,
    cap: usize,
) -> Result<f64, OracleError> {
    let mut worst = 0.0f64;
    for_each_assignment(g, cap, |x, f| {
        let s = b.kappa + reparameterized_sum(g, c, b, x);
        let r = if f == s { 0.0 } else { (f - s).abs() };
        worst = worst.max(r);
    })?;
    Ok(worst)
}

/// Spread `max − min` of `r(x_i) = min_{x_{α∖i}} b_α − b_i(x_i)` for factor
/// `a` and scope position `pos`. States where both sides are `+inf` are
/// skipped.
pub fn residual_at(g: &FactorGraph, b: &BeliefSet, a: usize, pos: usize) -> f64 {
    let t = g.factor(a);
    let i = t.scope()[pos];
    let mut mins = vec![f64::INFINITY; g.cardinality(i)];
    for (idx, &v) in b.fac[a].iter().enumerate() {
        let s = t.state_at(idx, pos);
        if v < mins[s] {
            mins[s] = v;
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (m, &bi) in mins.iter().zip(&b.var[i]) {
        if *m == f64::INFINITY && bi == f64::INFINITY {
            continue;
        }
        let r = m - bi;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if lo > hi {
        0.0
    } else {
        hi - lo
    }
}

/// Largest [`residual_at`] over every factor and scope position.
pub fn check_min_consistent(g: &FactorGraph, b: &BeliefSet) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..g.num_factors() {
        for pos in 0..g.factor(a).arity() {
            worst = worst.max(residual_at(g, b, a, pos));
        }
    }
    worst
}

/// Per-variable argmin sets read off the beliefs.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub argmin_sets: Vec<Vec<usize>>,
    pub unique: bool,
    /// Present iff every argmin set is a singleton.
    pub assignment: Option<Vec<usize>>,
}

/// States within `tie_tol` of each belief vector's minimum.
pub fn extract_estimate(b: &BeliefSet, tie_tol: f64) -> Estimate {
    let argmin_sets: Vec<Vec<usize>> = b.var.iter().map(|v| argmin_set(v, tie_tol)).collect();
    let unique = argmin_sets.iter().all(|s| s.len() == 1);
    let assignment = unique.then(|| argmin_sets.iter().map(|s| s[0]).collect());
    Estimate {
        argmin_sets,
        unique,
        assignment,
    }
}

/// Indices within `tie_tol` of the minimum of `v`.
pub fn argmin_set(v: &[f64], tie_tol: f64) -> Vec<usize> {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    (0..v.len()).filter(|&s| v[s] <= lo + tie_tol).collect()
}

/// `LB = kappa + Σ_i c_i (1 − Σ_{α∈∂i} c_α) min b_i + Σ_α c_α min b_α`.
pub fn lower_bound(g: &FactorGraph, c: &SplitParams, b: &BeliefSet) -> Result<f64, BeliefError> {
    if classify_params(c, g)?.class != OptimalityClass::GlobalSign {
        return Err(BeliefError::NotGlobalSign);
    }
    let mut lb = b.kappa;
    for i in 0..g.num_vars() {
        let w = c.var_coefficient(g, i);
        if w != 0.0 {
            lb += w * b.var_min(i);
        }
    }
    for a in 0..g.num_factors() {
        lb += c.factor(a) * b.factor_min(a);
    }
    Ok(lb)
}

/// Lower bound on the part of the objective that involves `x_j`:
/// `kappa + d_jj min b_j + Σ_{β∈∂j} c_β min (b_β − b_j)` with
/// `d_jj = c_j (1 − Σ c_β) + Σ c_β`. Requires the slice at `j` to be
/// conical.
pub fn local_lower_bound(
    g: &FactorGraph,
    c: &SplitParams,
    b: &BeliefSet,
    j: usize,
) -> Result<f64, BeliefError> {
    let djj = slice_self_weight(c, g, j);
    if djj < 0.0 || g.neighbors(j).iter().any(|&a| c.factor(a) <= 0.0) {
        return Err(BeliefError::NotLocal(j));
    }
    let mut total = b.kappa;
    if djj != 0.0 {
        total += djj * b.var_min(j);
    }
    for &e in g.var_edges(j) {
        let edge = g.edge(e);
        let t = g.factor(edge.factor);
        let gap = b.fac[edge.factor]
            .iter()
            .enumerate()
            .map(|(idx, &v)| v - b.var[j][t.state_at(idx, edge.pos)])
            .filter(|v| !v.is_nan())
            .fold(f64::INFINITY, f64::min);
        total += c.factor(edge.factor) * gap;
    }
    Ok(total)
}

/// True when `x` attains the minimum of every variable and factor belief
/// within `tol`.
pub fn minimizes_all_beliefs(g: &FactorGraph, b: &BeliefSet, x: &[usize], tol: f64) -> bool {
    let vars = (0..g.num_vars()).all(|i| b.var[i][x[i]] <= b.var_min(i) + tol);
    let facs = (0..g.num_factors()).all(|a| {
        let t = g.factor(a);
        b.fac[a][t.index_for(x)] <= b.factor_min(a) + tol
    });
    vars && facs
}
