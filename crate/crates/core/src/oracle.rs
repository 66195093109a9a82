//! Exhaustive minimization, used as ground truth on small instances.

use thiserror::Error;

use crate::graph::{for_each_joint_state, FactorGraph};

/// Default limit on the number of joint states an oracle will enumerate.
pub const DEFAULT_STATE_CAP: usize = 1 << 24;

/// Relative tolerance used to decide that two objective values tie.
pub const ORACLE_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("state space of {size} joint states exceeds cap {cap}")]
    CapExceeded { size: u128, cap: usize },
    #[error("objective is +inf everywhere")]
    Infeasible,
}

/// Exact minimum and every assignment attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleMinimum {
    pub value: f64,
    /// All minimizers, in lexicographic order.
    pub minimizers: Vec<Vec<usize>>,
}

fn state_space(g: &FactorGraph) -> u128 {
    g.cards()
        .iter()
        .try_fold(1u128, |acc, &k| acc.checked_mul(k as u128))
        .unwrap_or(u128::MAX)
}

fn check_cap(g: &FactorGraph, cap: usize) -> Result<(), OracleError> {
    let size = state_space(g);
    if size > cap as u128 {
        return Err(OracleError::CapExceeded { size, cap });
    }
    Ok(())
}

fn ties(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= ORACLE_TIE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Calls `f(x, f(x))` for every joint assignment, lexicographically.
pub fn for_each_assignment(
    g: &FactorGraph,
    cap: usize,
    mut f: impl FnMut(&[usize], f64),
) -> Result<(), OracleError> {
    check_cap(g, cap)?;
    for_each_joint_state(g.cards(), |_, x| f(x, g.evaluate_unchecked(x)));
    Ok(())
}

/// Exhaustive minimum with the default state cap.
pub fn brute_force_minimize(g: &FactorGraph) -> Result<OracleMinimum, OracleError> {
    brute_force_minimize_capped(g, DEFAULT_STATE_CAP)
}

pub fn brute_force_minimize_capped(
    g: &FactorGraph,
    cap: usize,
) -> Result<OracleMinimum, OracleError> {
    let mut best = f64::INFINITY;
    let mut minimizers: Vec<Vec<usize>> = Vec::new();
    for_each_assignment(g, cap, |x, v| {
        if v == f64::INFINITY {
            return;
        }
        if best.is_finite() && ties(v, best) {
            minimizers.push(x.to_vec());
            best = best.min(v);
        } else if v < best {
            best = v;
            minimizers.clear();
            minimizers.push(x.to_vec());
        }
    })?;
    if minimizers.is_empty() {
        return Err(OracleError::Infeasible);
    }
    Ok(OracleMinimum {
        value: best,
        minimizers,
    })
}

/// Min-marginal `min_{x : x_i = s} f(x)` for every state `s` of `var`.
pub fn oracle_min_marginals(g: &FactorGraph, var: usize) -> Result<Vec<f64>, OracleError> {
    Ok(all_min_marginals(g, DEFAULT_STATE_CAP)?.swap_remove(var))
}

/// Min-marginals of every variable in a single enumeration.
pub fn all_min_marginals(g: &FactorGraph, cap: usize) -> Result<Vec<Vec<f64>>, OracleError> {
    let mut mm: Vec<Vec<f64>> = g.cards().iter().map(|&k| vec![f64::INFINITY; k]).collect();
    for_each_assignment(g, cap, |x, v| {
        for (m, &s) in mm.iter_mut().zip(x) {
            if v < m[s] {
                m[s] = v;
            }
        }
    })?;
    Ok(mm)
}
