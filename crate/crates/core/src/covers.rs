//! Graph covers: construction, verification, lifting, and 2-cover
//! certificates for pairwise binary models.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::beliefs::{argmin_set, check_min_consistent, BeliefSet};
use crate::graph::{FactorGraph, GraphError};
use crate::params::SplitParams;

/// Largest min-consistency residual accepted when building a certificate.
pub const CERTIFICATE_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoverError {
    #[error("graph is not pairwise with binary alphabets")]
    NotPairwiseBinary,
    #[error("beliefs are not min-consistent (residual {0})")]
    NotMinConsistent(f64),
    #[error("no wiring of factor {0} keeps both copies on belief minimizers")]
    NoCase(usize),
    #[error("permutation for factor {factor} position {pos} is not a permutation of 0..{k}")]
    BadPermutation { factor: usize, pos: usize, k: usize },
    #[error("cover needs at least one copy")]
    ZeroCopies,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A cover graph `H` together with its projection onto the base graph `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverMap {
    pub base: FactorGraph,
    pub cover: FactorGraph,
    /// Image of each cover variable.
    pub var_map: Vec<usize>,
    /// Image of each cover factor.
    pub factor_map: Vec<usize>,
}

/// A single failed cover condition.
#[derive(Debug, Clone, PartialEq)]
pub enum CoverViolation {
    MapSize { kind: &'static str, expected: usize, got: usize },
    UnknownImage { kind: &'static str, node: usize, image: usize },
    Cardinality { var: usize },
    UnaryMismatch { var: usize },
    ArityMismatch { factor: usize },
    NotHomomorphic { factor: usize, pos: usize },
    TableMismatch { factor: usize },
    NotLocallyBijective { var: usize },
    CopyCount { kind: &'static str, node: usize, copies: usize },
}

impl fmt::Display for CoverViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoverViolation::MapSize { kind, expected, got } => {
                write!(f, "{kind} map has {got} entries, expected {expected}")
            }
            CoverViolation::UnknownImage { kind, node, image } => {
                write!(f, "{kind} {node} maps to unknown {kind} {image}")
            }
            CoverViolation::Cardinality { var } => write!(f, "variable {var} has the wrong cardinality"),
            CoverViolation::UnaryMismatch { var } => write!(f, "unary potential of variable {var} differs from its image"),
            CoverViolation::ArityMismatch { factor } => write!(f, "factor {factor} has a different arity than its image"),
            CoverViolation::NotHomomorphic { factor, pos } => {
                write!(f, "factor {factor} position {pos} does not map onto its image's scope")
            }
            CoverViolation::TableMismatch { factor } => write!(f, "table of factor {factor} differs from its image"),
            CoverViolation::NotLocallyBijective { var } => {
                write!(f, "neighbors of variable {var} do not map bijectively onto its image's neighbors")
            }
            CoverViolation::CopyCount { kind, node, copies } => {
                write!(f, "{kind} {node} has {copies} copies")
            }
        }
    }
}

/// Outcome of [`verify_cover`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoverReport {
    pub violations: Vec<CoverViolation>,
    /// The common number of copies per node, if every node has the same.
    pub copies: Option<usize>,
}

impl CoverReport {
    pub fn is_cover(&self) -> bool {
        self.violations.is_empty()
    }

    /// A valid cover with exactly `k` copies of every node.
    pub fn is_k_cover(&self, k: usize) -> bool {
        self.is_cover() && self.copies == Some(k)
    }
}

/// Checks that the map is a homomorphism, bijective on every neighborhood,
/// and that potentials are copied verbatim; also counts copies.
pub fn verify_cover(cm: &CoverMap) -> CoverReport {
    let (g, h) = (&cm.base, &cm.cover);
    let mut v = Vec::new();
    if cm.var_map.len() != h.num_vars() {
        v.push(CoverViolation::MapSize {
            kind: "variable",
            expected: h.num_vars(),
            got: cm.var_map.len(),
        });
    }
    if cm.factor_map.len() != h.num_factors() {
        v.push(CoverViolation::MapSize {
            kind: "factor",
            expected: h.num_factors(),
            got: cm.factor_map.len(),
        });
    }
    if !v.is_empty() {
        return CoverReport { violations: v, copies: None };
    }
    for (node, &image) in cm.var_map.iter().enumerate() {
        if image >= g.num_vars() {
            v.push(CoverViolation::UnknownImage { kind: "variable", node, image });
        }
    }
    for (node, &image) in cm.factor_map.iter().enumerate() {
        if image >= g.num_factors() {
            v.push(CoverViolation::UnknownImage { kind: "factor", node, image });
        }
    }
    if !v.is_empty() {
        return CoverReport { violations: v, copies: None };
    }
    for var in 0..h.num_vars() {
        let img = cm.var_map[var];
        if h.cardinality(var) != g.cardinality(img) {
            v.push(CoverViolation::Cardinality { var });
        } else if h.unary(var) != g.unary(img) {
            v.push(CoverViolation::UnaryMismatch { var });
        }
    }
    for a in 0..h.num_factors() {
        let (ta, tb) = (h.factor(a), g.factor(cm.factor_map[a]));
        if ta.arity() != tb.arity() {
            v.push(CoverViolation::ArityMismatch { factor: a });
            continue;
        }
        let mut homomorphic = true;
        for (pos, (&x, &y)) in ta.scope().iter().zip(tb.scope()).enumerate() {
            if cm.var_map[x] != y {
                v.push(CoverViolation::NotHomomorphic { factor: a, pos });
                homomorphic = false;
            }
        }
        if homomorphic && ta.values() != tb.values() {
            v.push(CoverViolation::TableMismatch { factor: a });
        }
    }
    for var in 0..h.num_vars() {
        let mut images: Vec<(usize, usize)> = h
            .var_edges(var)
            .iter()
            .map(|&e| {
                let edge = h.edge(e);
                (cm.factor_map[edge.factor], edge.pos)
            })
            .collect();
        let mut expected: Vec<(usize, usize)> = g
            .var_edges(cm.var_map[var])
            .iter()
            .map(|&e| (g.edge(e).factor, g.edge(e).pos))
            .collect();
        images.sort_unstable();
        expected.sort_unstable();
        if images != expected {
            v.push(CoverViolation::NotLocallyBijective { var });
        }
    }
    let count = |map: &[usize], n: usize| {
        let mut counts = vec![0usize; n];
        for &x in map {
            counts[x] += 1;
        }
        counts
    };
    let var_counts = count(&cm.var_map, g.num_vars());
    let fac_counts = count(&cm.factor_map, g.num_factors());
    let k = var_counts[0];
    let mut copies = Some(k);
    for (kind, counts) in [("variable", &var_counts), ("factor", &fac_counts)] {
        for (node, &c) in counts.iter().enumerate() {
            if c != k {
                copies = None;
                if c == 0 {
                    v.push(CoverViolation::CopyCount { kind, node, copies: c });
                }
            }
        }
    }
    CoverReport { violations: v, copies }
}

/// k-cover built from one permutation of `0..k` per (factor, scope position).
///
/// Copy `l` of variable `i` is cover variable `l·n + i` and copy `l` of
/// factor `α` is cover factor `l·m + α`; the latter attaches at position
/// `q` to copy `perms[α][q][l]` of the scope variable.
pub fn cover_from_permutations(
    g: &FactorGraph,
    k: usize,
    perms: &[Vec<Vec<usize>>],
) -> Result<CoverMap, CoverError> {
    if k == 0 {
        return Err(CoverError::ZeroCopies);
    }
    let (n, m) = (g.num_vars(), g.num_factors());
    for a in 0..m {
        for pos in 0..g.factor(a).arity() {
            let p = perms.get(a).and_then(|f| f.get(pos));
            let ok = p.is_some_and(|p| {
                let mut s = p.clone();
                s.sort_unstable();
                s == (0..k).collect::<Vec<_>>()
            });
            if !ok {
                return Err(CoverError::BadPermutation { factor: a, pos, k });
            }
        }
    }
    let cards: Vec<usize> = (0..k).flat_map(|_| g.cards().iter().copied()).collect();
    let mut h = FactorGraph::new(cards)?;
    for l in 0..k {
        for i in 0..n {
            h.set_unary(l * n + i, g.unary(i).to_vec())?;
        }
    }
    for l in 0..k {
        for a in 0..m {
            let t = g.factor(a);
            let scope = t
                .scope()
                .iter()
                .enumerate()
                .map(|(q, &i)| perms[a][q][l] * n + i)
                .collect();
            h.add_factor(scope, t.values().to_vec())?;
        }
    }
    Ok(CoverMap {
        base: g.clone(),
        cover: h,
        var_map: (0..k * n).map(|v| v % n).collect(),
        factor_map: (0..k * m).map(|a| a % m).collect(),
    })
}

/// `k` disjoint copies of `g`.
pub fn disjoint_cover(g: &FactorGraph, k: usize) -> Result<CoverMap, CoverError> {
    let id: Vec<usize> = (0..k).collect();
    let perms: Vec<Vec<Vec<usize>>> = g
        .factors()
        .iter()
        .map(|t| vec![id.clone(); t.arity()])
        .collect();
    cover_from_permutations(g, k, &perms)
}

/// Copies every variable's state to all of its copies.
pub fn lift_assignment(cm: &CoverMap, x: &[usize]) -> Vec<usize> {
    cm.var_map.iter().map(|&i| x[i]).collect()
}

/// Restricts a cover assignment to the copies listed in `fiber`, one cover
/// variable per base variable.
pub fn restrict_assignment(x_h: &[usize], fiber: &[usize]) -> Vec<usize> {
    fiber.iter().map(|&v| x_h[v]).collect()
}

/// Copies beliefs along the cover map; `kappa` scales with the number of
/// copies.
pub fn lift_beliefs(cm: &CoverMap, b: &BeliefSet) -> BeliefSet {
    let k = if cm.base.num_vars() == 0 {
        1
    } else {
        cm.var_map.len() / cm.base.num_vars()
    };
    BeliefSet {
        var: cm.var_map.iter().map(|&i| b.var[i].clone()).collect(),
        fac: cm.factor_map.iter().map(|&a| b.fac[a].clone()).collect(),
        kappa: b.kappa * k as f64,
    }
}

/// Copies parameters along the cover map.
pub fn lift_params(cm: &CoverMap, c: &SplitParams) -> SplitParams {
    SplitParams::new(
        cm.var_map.iter().map(|&i| c.var(i)).collect(),
        cm.factor_map.iter().map(|&a| c.factor(a)).collect(),
    )
}

/// How the two copies of a factor attach to the variable copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wiring {
    Parallel,
    Crossed,
}

impl fmt::Display for Wiring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Wiring::Parallel => "parallel",
            Wiring::Crossed => "crossed",
        })
    }
}

/// A 2-cover of a pairwise binary graph and an assignment on it that
/// minimizes every lifted belief.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverCertificate {
    pub cover: CoverMap,
    pub wiring: Vec<Wiring>,
    pub assignment: Vec<usize>,
    pub claimed_value: f64,
}

impl CoverCertificate {
    /// Text listing of the wiring per factor and the assignment.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let n = self.cover.base.num_vars();
        for (a, w) in self.wiring.iter().enumerate() {
            let _ = writeln!(out, "factor {a} {w}");
        }
        let first: Vec<String> = self.assignment[..n].iter().map(usize::to_string).collect();
        let second: Vec<String> = self.assignment[n..].iter().map(usize::to_string).collect();
        let _ = writeln!(out, "copy1 {}", first.join(" "));
        let _ = writeln!(out, "copy2 {}", second.join(" "));
        let _ = writeln!(out, "value {}", self.claimed_value);
        out
    }
}

/// Builds a 2-cover and assignment from min-consistent beliefs.
///
/// Variables with a unique belief minimizer put it on both copies; tied
/// variables get 0 on the first copy and 1 on the second. Each factor is
/// then wired parallel or crossed so that both of its copies see a
/// minimizing pair of its belief, preferring parallel.
pub fn build_two_cover_certificate(
    g: &FactorGraph,
    b: &BeliefSet,
    tie_tol: f64,
) -> Result<CoverCertificate, CoverError> {
    if !g.is_binary() || !g.is_pairwise() {
        return Err(CoverError::NotPairwiseBinary);
    }
    let residual = check_min_consistent(g, b);
    if !(residual <= CERTIFICATE_RESIDUAL_TOL) {
        return Err(CoverError::NotMinConsistent(residual));
    }
    let pair_tol = tie_tol + 4.0 * residual;
    let n = g.num_vars();
    let copies: Vec<(usize, usize)> = b
        .var
        .iter()
        .map(|v| match argmin_set(v, tie_tol).as_slice() {
            [s] => (*s, *s),
            _ => (0, 1),
        })
        .collect();
    let mut wiring = Vec::with_capacity(g.num_factors());
    let mut perms = Vec::with_capacity(g.num_factors());
    for a in 0..g.num_factors() {
        let t = g.factor(a);
        if t.arity() == 1 {
            wiring.push(Wiring::Parallel);
            perms.push(vec![vec![0, 1]]);
            continue;
        }
        let (i, j) = (t.scope()[0], t.scope()[1]);
        let lo = b.factor_min(a);
        let good = |xi: usize, xj: usize| b.fac[a][xi * 2 + xj] <= lo + pair_tol;
        let (i1, i2) = copies[i];
        let (j1, j2) = copies[j];
        let w = if good(i1, j1) && good(i2, j2) {
            Wiring::Parallel
        } else if good(i1, j2) && good(i2, j1) {
            Wiring::Crossed
        } else {
            return Err(CoverError::NoCase(a));
        };
        let second = match w {
            Wiring::Parallel => vec![0, 1],
            Wiring::Crossed => vec![1, 0],
        };
        wiring.push(w);
        perms.push(vec![vec![0, 1], second]);
    }
    let cover = cover_from_permutations(g, 2, &perms)?;
    let mut assignment = vec![0usize; 2 * n];
    for (i, &(s1, s2)) in copies.iter().enumerate() {
        assignment[i] = s1;
        assignment[n + i] = s2;
    }
    let claimed_value = cover.cover.evaluate(&assignment)?;
    Ok(CoverCertificate {
        cover,
        wiring,
        assignment,
        claimed_value,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::beliefs::{check_admissible, minimizes_all_beliefs, DEFAULT_TIE_TOL};
    use crate::engine::{run, RunConfig};
    use crate::graph::fixtures::*;
    use crate::oracle::brute_force_minimize;
    use crate::params::make_uniform_params;

    /// The 6-cycle double cover of the triangle.
    pub fn six_cycle(g: &FactorGraph) -> CoverMap {
        let id = vec![0, 1];
        let swap = vec![1, 0];
        let perms = vec![
            vec![id.clone(), id.clone()],
            vec![id.clone(), id.clone()],
            vec![id.clone(), swap],
        ];
        cover_from_permutations(g, 2, &perms).unwrap()
    }

    #[test]
    fn disjoint_copies_form_a_cover() {
        let cm = disjoint_cover(&g1(), 2).unwrap();
        assert!(verify_cover(&cm).is_k_cover(2));
        let x = lift_assignment(&cm, &[0, 0]);
        assert_eq!(cm.cover.evaluate(&x).unwrap(), 0.0);
        assert_eq!(restrict_assignment(&x, &[0, 1]), vec![0, 0]);
    }

    #[test]
    fn six_cycle_cover() {
        let g = g2();
        let cm = six_cycle(&g);
        assert!(verify_cover(&cm).is_k_cover(2));
        assert!(!cm.cover.is_acyclic());
        let m = brute_force_minimize(&cm.cover).unwrap();
        assert_eq!(m.value, 0.0);
        assert_eq!(m.minimizers.len(), 2);
        let x = lift_assignment(&cm, &[0, 0, 1]);
        assert_eq!(cm.cover.evaluate(&x).unwrap(), 2.0);
        assert_eq!(restrict_assignment(&x, &[3, 4, 5]), vec![0, 0, 1]);
    }

    #[test]
    fn collapsed_neighbors_rejected() {
        let g = g2();
        let mut cm = six_cycle(&g);
        // Cover factor 3 is copy 2 of factor 0; claim it is factor 2 instead.
        cm.factor_map[3] = 2;
        let report = verify_cover(&cm);
        assert!(!report.is_cover());
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, CoverViolation::NotLocallyBijective { .. } | CoverViolation::NotHomomorphic { .. })));
    }

    #[test]
    fn triangle_certificate_is_the_six_cycle() {
        let g = g2();
        let c = make_uniform_params(&g).unwrap();
        let r = run(&g, &c, &RunConfig::async_natural()).unwrap();
        let cert = build_two_cover_certificate(&g, &r.beliefs, DEFAULT_TIE_TOL).unwrap();
        assert_eq!(cert.claimed_value, 0.0);
        assert_eq!(cert.wiring.iter().filter(|w| **w == Wiring::Crossed).count() % 2, 1);
        assert!(verify_cover(&cert.cover).is_k_cover(2));
        assert_eq!(brute_force_minimize(&cert.cover.cover).unwrap().value, 0.0);
        let lifted = lift_beliefs(&cert.cover, &r.beliefs);
        assert!(minimizes_all_beliefs(&cert.cover.cover, &lifted, &cert.assignment, 1e-6));
        let lc = lift_params(&cert.cover, &c);
        assert!(check_admissible(&cert.cover.cover, &lc, &lifted, 1 << 12).unwrap() < 1e-9);
    }

    #[test]
    fn unique_estimates_give_disjoint_copies() {
        let mut g4 = g3();
        g4.set_unary(1, vec![1.0, 0.5]).unwrap();
        for g in [g1(), g4] {
            let c = make_uniform_params(&g).unwrap();
            let r = run(&g, &c, &RunConfig::async_natural()).unwrap();
            let cert = build_two_cover_certificate(&g, &r.beliefs, DEFAULT_TIE_TOL).unwrap();
            assert!(cert.wiring.iter().all(|w| *w == Wiring::Parallel));
            let m = brute_force_minimize(&g).unwrap().value;
            assert!((cert.claimed_value - 2.0 * m).abs() < 1e-9);
            assert!(
                (brute_force_minimize(&cert.cover.cover).unwrap().value - cert.claimed_value).abs() < 1e-9
            );
        }
    }

    #[test]
    fn rejects_non_binary() {
        let g = FactorGraph::new(vec![3]).unwrap();
        let b = BeliefSet {
            var: vec![vec![0.0; 3]],
            fac: vec![],
            kappa: 0.0,
        };
        assert_eq!(
            build_two_cover_certificate(&g, &b, DEFAULT_TIE_TOL),
            Err(CoverError::NotPairwiseBinary)
        );
    }
}
