//! Seeded random instance generators for tests, benchmarks and the
//! acceptance suite.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::engine::MessageState;
use crate::graph::FactorGraph;
use crate::params::SplitParams;

/// Shape of a random factor graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphShape {
    pub num_vars: usize,
    pub max_card: usize,
    pub num_factors: usize,
    pub max_arity: usize,
    /// Potentials are drawn as integers in `-range..=range` when true,
    /// uniformly from `[-range, range]` otherwise.
    pub integer: bool,
    pub range: f64,
}

fn draw<R: Rng>(rng: &mut R, integer: bool, range: f64) -> f64 {
    if integer {
        let r = range as i64;
        rng.gen_range(-r..=r) as f64
    } else {
        rng.gen_range(-range..=range)
    }
}

fn table<R: Rng>(rng: &mut R, len: usize, integer: bool, range: f64) -> Vec<f64> {
    (0..len).map(|_| draw(rng, integer, range)).collect()
}

fn with_random_unaries<R: Rng>(rng: &mut R, cards: Vec<usize>, integer: bool, range: f64) -> FactorGraph {
    let mut g = FactorGraph::new(cards).expect("cardinalities are positive");
    for i in 0..g.num_vars() {
        let phi = table(rng, g.cardinality(i), integer, range);
        g.set_unary(i, phi).expect("finite unary");
    }
    g
}

/// Arbitrary factor graph: random cardinalities in `1..=max_card`, random
/// scopes of arity `1..=max_arity` (duplicates allowed), finite potentials.
pub fn random_graph<R: Rng>(rng: &mut R, shape: &GraphShape) -> FactorGraph {
    let cards = (0..shape.num_vars).map(|_| rng.gen_range(1..=shape.max_card)).collect();
    let mut g = with_random_unaries(rng, cards, shape.integer, shape.range);
    let vars: Vec<usize> = (0..shape.num_vars).collect();
    for _ in 0..shape.num_factors {
        let arity = rng.gen_range(1..=shape.max_arity.min(shape.num_vars));
        let scope: Vec<usize> = vars.choose_multiple(rng, arity).copied().collect();
        let len = scope.iter().map(|&v| g.cardinality(v)).product();
        let values = table(rng, len, shape.integer, shape.range);
        g.add_factor(scope, values).expect("valid scope");
    }
    g
}

/// Random tree: variable `v > 0` joins a uniformly chosen earlier variable
/// through one pairwise factor. Cardinalities lie in `2..=max_card`.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize, max_card: usize, integer: bool, range: f64) -> FactorGraph {
    let cards = (0..n).map(|_| rng.gen_range(2..=max_card.max(2))).collect();
    let mut g = with_random_unaries(rng, cards, integer, range);
    for v in 1..n {
        let u = rng.gen_range(0..v);
        let scope = if rng.gen_bool(0.5) { vec![u, v] } else { vec![v, u] };
        let len = g.cardinality(u) * g.cardinality(v);
        let values = table(rng, len, integer, range);
        g.add_factor(scope, values).expect("valid scope");
    }
    g
}

/// Random connected pairwise graph with at least one cycle: a random tree
/// plus `extra` additional edges between distinct variables.
pub fn random_loopy<R: Rng>(
    rng: &mut R,
    n: usize,
    max_card: usize,
    extra: usize,
    integer: bool,
    range: f64,
) -> FactorGraph {
    assert!(n >= 3, "a loopy pairwise graph needs three variables");
    let mut g = random_tree(rng, n, max_card, integer, range);
    let vars: Vec<usize> = (0..n).collect();
    let mut added = 0;
    while added < extra.max(1) {
        let pair: Vec<usize> = vars.choose_multiple(rng, 2).copied().collect();
        let len = g.cardinality(pair[0]) * g.cardinality(pair[1]);
        let values = table(rng, len, integer, range);
        g.add_factor(pair, values).expect("valid scope");
        added += 1;
    }
    g
}

/// Random pairwise binary model with integer potentials in `-range..=range`:
/// a spanning tree plus each remaining pair with probability `edge_prob`.
pub fn random_pairwise_binary<R: Rng>(rng: &mut R, n: usize, edge_prob: f64, range: i64) -> FactorGraph {
    let r = range as f64;
    let mut g = random_tree(rng, n, 2, true, r);
    let existing: Vec<(usize, usize)> = g
        .factors()
        .iter()
        .map(|t| {
            let (a, b) = (t.scope()[0], t.scope()[1]);
            (a.min(b), a.max(b))
        })
        .collect();
    for i in 0..n {
        for j in i + 1..n {
            if existing.contains(&(i, j)) || !rng.gen_bool(edge_prob) {
                continue;
            }
            let values = table(rng, 4, true, r);
            g.add_factor(vec![i, j], values).expect("valid scope");
        }
    }
    g
}

/// Nonzero parameters. With `positive`, entries lie in `[0.2, 2]`;
/// otherwise each entry is negated with probability 1/4.
pub fn random_params<R: Rng>(rng: &mut R, g: &FactorGraph, positive: bool) -> SplitParams {
    let entry = |rng: &mut R| {
        let v = rng.gen_range(0.2..=2.0);
        if !positive && rng.gen_bool(0.25) {
            -v
        } else {
            v
        }
    };
    let var = (0..g.num_vars()).map(|_| entry(rng)).collect();
    let fac = (0..g.num_factors()).map(|_| entry(rng)).collect();
    SplitParams::new(var, fac)
}

/// Finite messages with entries uniform in `[-scale, scale]`.
pub fn random_messages<R: Rng>(rng: &mut R, g: &FactorGraph, scale: f64) -> MessageState {
    let draw_all = |rng: &mut R| -> Vec<Vec<f64>> {
        g.edges()
            .iter()
            .map(|e| (0..g.cardinality(e.var)).map(|_| rng.gen_range(-scale..=scale)).collect())
            .collect()
    };
    let to_factor = draw_all(rng);
    let to_var = draw_all(rng);
    MessageState::from_parts(g, to_factor, to_var).expect("finite messages of the right shape")
}

/// Random 2-cover: each (factor, position) independently keeps or swaps
/// the two copies.
pub fn random_two_cover_perms<R: Rng>(rng: &mut R, g: &FactorGraph) -> Vec<Vec<Vec<usize>>> {
    g.factors()
        .iter()
        .map(|t| {
            (0..t.arity())
                .map(|_| if rng.gen_bool(0.5) { vec![1, 0] } else { vec![0, 1] })
                .collect()
        })
        .collect()
}
