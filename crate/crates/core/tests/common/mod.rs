//! Reference implementations used as oracles by the integration tests.
//! They only read the graph's raw tables and never call the solver.

#![allow(dead_code)]

use splitmin::{BeliefSet, FactorGraph, SplitParams};

/// Row-major index of `x` into a factor table (last scope variable fastest).
pub fn table_index(g: &FactorGraph, a: usize, x: &[usize]) -> usize {
    let t = g.factor(a);
    t.scope()
        .iter()
        .fold(0, |idx, &v| idx * g.cardinality(v) + x[v])
}

/// Scope states encoded by a table index.
pub fn decode(g: &FactorGraph, a: usize, mut idx: usize) -> Vec<usize> {
    let scope = g.factor(a).scope();
    let mut states = vec![0; scope.len()];
    for q in (0..scope.len()).rev() {
        let k = g.cardinality(scope[q]);
        states[q] = idx % k;
        idx /= k;
    }
    states
}

pub fn objective(g: &FactorGraph, x: &[usize]) -> f64 {
    let mut total: f64 = (0..g.num_vars()).map(|i| g.unary(i)[x[i]]).sum();
    for a in 0..g.num_factors() {
        total += g.factor(a).values()[table_index(g, a, x)];
    }
    total
}

/// Calls `f` on every joint assignment in lexicographic order.
pub fn enumerate(g: &FactorGraph, mut f: impl FnMut(&[usize])) {
    let n = g.num_vars();
    let mut x = vec![0; n];
    loop {
        f(&x);
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            x[i] += 1;
            if x[i] < g.cardinality(i) {
                break;
            }
            x[i] = 0;
        }
    }
}

pub fn joint_size(g: &FactorGraph) -> usize {
    g.cards().iter().product()
}

/// Minimum value and every assignment attaining it exactly.
pub fn brute_min(g: &FactorGraph) -> (f64, Vec<Vec<usize>>) {
    let mut best = f64::INFINITY;
    let mut arg = Vec::new();
    enumerate(g, |x| {
        let v = objective(g, x);
        if v < best {
            best = v;
            arg.clear();
            arg.push(x.to_vec());
        } else if v == best {
            arg.push(x.to_vec());
        }
    });
    (best, arg)
}

pub fn min_marginals(g: &FactorGraph) -> Vec<Vec<f64>> {
    let mut mm: Vec<Vec<f64>> = g.cards().iter().map(|&k| vec![f64::INFINITY; k]).collect();
    enumerate(g, |x| {
        let v = objective(g, x);
        for (i, &s) in x.iter().enumerate() {
            mm[i][s] = mm[i][s].min(v);
        }
    });
    mm
}

/// `max_x |f(x) − κ − Σ_i c_i(1 − Σc_α) b_i − Σ_α c_α b_α|`.
pub fn admissibility_residual(g: &FactorGraph, c: &SplitParams, b: &BeliefSet) -> f64 {
    let weight: Vec<f64> = (0..g.num_vars())
        .map(|i| {
            let s: f64 = g.neighbors(i).iter().map(|&a| c.factor(a)).sum();
            c.var(i) * (1.0 - s)
        })
        .collect();
    let mut worst = 0.0f64;
    enumerate(g, |x| {
        let mut s = b.kappa;
        for i in 0..g.num_vars() {
            s += weight[i] * b.var[i][x[i]];
        }
        for a in 0..g.num_factors() {
            s += c.factor(a) * b.fac[a][table_index(g, a, x)];
        }
        worst = worst.max((objective(g, x) - s).abs());
    });
    worst
}

/// Largest spread over `x_i` of `min_{x_α∖i} b_α − b_i(x_i)`.
pub fn min_consistency_residual(g: &FactorGraph, b: &BeliefSet) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..g.num_factors() {
        let scope = g.factor(a).scope();
        for (q, &i) in scope.iter().enumerate() {
            let mut mins = vec![f64::INFINITY; g.cardinality(i)];
            for (idx, &v) in b.fac[a].iter().enumerate() {
                let s = decode(g, a, idx)[q];
                mins[s] = mins[s].min(v);
            }
            let diffs: Vec<f64> = mins.iter().zip(&b.var[i]).map(|(m, v)| m - v).collect();
            let hi = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = diffs.iter().cloned().fold(f64::INFINITY, f64::min);
            worst = worst.max(hi - lo);
        }
    }
    worst
}

/// `κ + Σ_i c_i(1 − Σc_α) min b_i + Σ_α c_α min b_α`.
pub fn lower_bound(g: &FactorGraph, c: &SplitParams, b: &BeliefSet) -> f64 {
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut lb = b.kappa;
    for i in 0..g.num_vars() {
        let s: f64 = g.neighbors(i).iter().map(|&a| c.factor(a)).sum();
        let w = c.var(i) * (1.0 - s);
        if w != 0.0 {
            lb += w * min(&b.var[i]);
        }
    }
    for a in 0..g.num_factors() {
        lb += c.factor(a) * min(&b.fac[a]);
    }
    lb
}

/// Whether `x` is within `tol` of the minimum of every belief.
pub fn minimizes_beliefs(g: &FactorGraph, b: &BeliefSet, x: &[usize], tol: f64) -> bool {
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    (0..g.num_vars()).all(|i| b.var[i][x[i]] <= min(&b.var[i]) + tol)
        && (0..g.num_factors()).all(|a| b.fac[a][table_index(g, a, x)] <= min(&b.fac[a]) + tol)
}

/// Best objective decrease available by changing one variable.
pub fn best_flip_gain(g: &FactorGraph, x: &[usize]) -> f64 {
    let base = objective(g, x);
    let mut best = 0.0f64;
    let mut y = x.to_vec();
    for i in 0..g.num_vars() {
        for s in 0..g.cardinality(i) {
            if s == x[i] {
                continue;
            }
            y[i] = s;
            best = best.max(base - objective(g, &y));
        }
        y[i] = x[i];
    }
    best
}

/// Plain synchronous min-sum with min-normalized messages, indexed by
/// `(factor, scope position)`.
#[derive(Debug, Clone)]
pub struct MinSum {
    pub to_factor: Vec<Vec<Vec<f64>>>,
    pub to_var: Vec<Vec<Vec<f64>>>,
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    v.iter_mut().for_each(|x| *x -= lo);
    v
}

impl MinSum {
    pub fn zeros(g: &FactorGraph) -> Self {
        let shape: Vec<Vec<Vec<f64>>> = (0..g.num_factors())
            .map(|a| {
                g.factor(a)
                    .scope()
                    .iter()
                    .map(|&v| vec![0.0; g.cardinality(v)])
                    .collect()
            })
            .collect();
        Self {
            to_factor: shape.clone(),
            to_var: shape,
        }
    }

    pub fn sweep(&self, g: &FactorGraph) -> Self {
        let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); g.num_vars()];
        for a in 0..g.num_factors() {
            for (q, &v) in g.factor(a).scope().iter().enumerate() {
                incident[v].push((a, q));
            }
        }
        let mut next = self.clone();
        for a in 0..g.num_factors() {
            let scope = g.factor(a).scope();
            for (q, &i) in scope.iter().enumerate() {
                let mut m = g.unary(i).to_vec();
                for &(b, r) in &incident[i] {
                    if (b, r) != (a, q) {
                        for (acc, v) in m.iter_mut().zip(&self.to_var[b][r]) {
                            *acc += v;
                        }
                    }
                }
                next.to_factor[a][q] = normalize(m);

                let mut m = vec![f64::INFINITY; g.cardinality(i)];
                for (idx, &psi) in g.factor(a).values().iter().enumerate() {
                    let states = decode(g, a, idx);
                    let mut v = psi;
                    for (r, &s) in states.iter().enumerate() {
                        if r != q {
                            v += self.to_factor[a][r][s];
                        }
                    }
                    m[states[q]] = m[states[q]].min(v);
                }
                next.to_var[a][q] = normalize(m);
            }
        }
        next
    }
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Spread of `a − b`, i.e. how far the two vectors are from differing by a
/// constant.
pub fn shift_spread(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let hi = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
    hi - lo
}
