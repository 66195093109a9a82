//! Explicit splitting of factors and variables into identical copies.
//!
//! Running ordinary min-sum (all weights 1) on a split graph reproduces the
//! weighted updates on the original graph with weight `k` on the split node.

use thiserror::Error;

use crate::graph::{for_each_joint_state, FactorGraph, GraphError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("split count must be at least 1")]
    ZeroCopies,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Replaces factor `a` by `k` copies of `ψ_a / k`.
///
/// The first copy keeps index `a`; the others are appended after the
/// existing factors.
pub fn split_factor_graph(g: &FactorGraph, a: usize, k: usize) -> Result<FactorGraph, SplitError> {
    if k == 0 {
        return Err(SplitError::ZeroCopies);
    }
    if a >= g.num_factors() {
        return Err(GraphError::UnknownFactor {
            factor: a,
            num_factors: g.num_factors(),
        }
        .into());
    }
    let scaled: Vec<f64> = g.factor(a).values().iter().map(|v| v / k as f64).collect();
    let mut h = FactorGraph::new(g.cards().to_vec())?;
    for i in 0..g.num_vars() {
        h.set_unary(i, g.unary(i).to_vec())?;
    }
    for (b, t) in g.factors().iter().enumerate() {
        let values = if b == a {
            scaled.clone()
        } else {
            t.values().to_vec()
        };
        h.add_factor(t.scope().to_vec(), values)?;
    }
    for _ in 1..k {
        h.add_factor(g.factor(a).scope().to_vec(), scaled.clone())?;
    }
    Ok(h)
}

/// Replaces variable `i` by `k` copies carrying `φ_i / k`.
///
/// The first copy keeps index `i`; the others get indices `n, n+1, …`.
/// Every factor containing `i` has the copies inserted contiguously at the
/// position of `i` in its scope and assigns `+inf` whenever the copies
/// disagree. Factor indices are unchanged.
pub fn split_variable_graph(g: &FactorGraph, i: usize, k: usize) -> Result<FactorGraph, SplitError> {
    if k == 0 {
        return Err(SplitError::ZeroCopies);
    }
    let n = g.num_vars();
    if i >= n {
        return Err(GraphError::UnknownVariable { var: i, num_vars: n }.into());
    }
    let card = g.cardinality(i);
    let copies: Vec<usize> = std::iter::once(i).chain(n..n + k - 1).collect();
    let mut cards = g.cards().to_vec();
    cards.extend(std::iter::repeat_n(card, k - 1));
    let mut h = FactorGraph::new(cards)?;
    let phi: Vec<f64> = g.unary(i).iter().map(|v| v / k as f64).collect();
    for v in 0..n {
        let values = if v == i { phi.clone() } else { g.unary(v).to_vec() };
        h.set_unary(v, values)?;
    }
    for &c in &copies[1..] {
        h.set_unary(c, phi.clone())?;
    }
    for t in g.factors() {
        let Some(p) = t.position(i) else {
            h.add_factor(t.scope().to_vec(), t.values().to_vec())?;
            continue;
        };
        let mut scope = t.scope()[..p].to_vec();
        scope.extend_from_slice(&copies);
        scope.extend_from_slice(&t.scope()[p + 1..]);
        let dims: Vec<usize> = scope.iter().map(|&v| h.cardinality(v)).collect();
        let mut values = Vec::with_capacity(dims.iter().product());
        let mut orig = vec![0usize; t.arity()];
        for_each_joint_state(&dims, |_, s| {
            let shared = s[p];
            if s[p..p + k].iter().any(|&c| c != shared) {
                values.push(f64::INFINITY);
                return;
            }
            orig[..p].copy_from_slice(&s[..p]);
            orig[p] = shared;
            orig[p + 1..].copy_from_slice(&s[p + k..]);
            let idx: usize = orig.iter().zip(t.strides()).map(|(a, b)| a * b).sum();
            values.push(t.values()[idx]);
        });
        h.add_factor(scope, values)?;
    }
    Ok(h)
}
