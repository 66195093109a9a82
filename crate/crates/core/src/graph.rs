//! Discrete factor graphs.
//!
//! An objective `f(x) = Σ_i φ_i(x_i) + Σ_α ψ_α(x_α)` is stored as a list of
//! variables (cardinality plus unary potential) and an ordered multiset of
//! factor tables. Potentials are extended reals: finite values or `+inf`.
//! Tables are dense and row-major with the last scope variable varying
//! fastest.

use thiserror::Error;

/// Largest number of entries a single factor table may hold.
pub const MAX_TABLE_LEN: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("graph has no variables")]
    Empty,
    #[error("variable {0} has zero cardinality")]
    ZeroCardinality(usize),
    #[error("unknown variable {var} (graph has {num_vars})")]
    UnknownVariable { var: usize, num_vars: usize },
    #[error("unknown factor {factor} (graph has {num_factors})")]
    UnknownFactor { factor: usize, num_factors: usize },
    #[error("factor scope is empty")]
    EmptyScope,
    #[error("factor scope repeats variable {0}")]
    RepeatedVariable(usize),
    #[error("table has {got} entries, expected {expected}")]
    TableSize { expected: usize, got: usize },
    #[error("table would exceed {MAX_TABLE_LEN} entries")]
    TableTooLarge,
    #[error("potential contains NaN or -inf")]
    InvalidValue,
    #[error("potential has no finite entry")]
    NoFiniteEntry,
    #[error("assignment has {got} entries, expected {expected}")]
    AssignmentLength { expected: usize, got: usize },
    #[error("state {state} is out of range for variable {var} ({card} states)")]
    StateOutOfRange { var: usize, state: usize, card: usize },
}

fn check_values(values: &[f64]) -> Result<(), GraphError> {
    if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
        return Err(GraphError::InvalidValue);
    }
    if !values.iter().any(|v| v.is_finite()) {
        return Err(GraphError::NoFiniteEntry);
    }
    Ok(())
}

/// Calls `f(index, states)` for every joint state of `dims`, in table order
/// (last dimension fastest). `index` is the flat row-major index.
pub fn for_each_joint_state(dims: &[usize], mut f: impl FnMut(usize, &[usize])) {
    if dims.contains(&0) {
        return;
    }
    let mut states = vec![0usize; dims.len()];
    let mut index = 0usize;
    loop {
        f(index, &states);
        index += 1;
        let mut pos = dims.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            states[pos] += 1;
            if states[pos] < dims[pos] {
                break;
            }
            states[pos] = 0;
        }
    }
}

/// `Σ_i φ_i(x_i) + Σ_α ψ_α(x_α)`, or `+inf` if any term is infinite.
pub fn evaluate_objective(g: &FactorGraph, x: &[usize]) -> Result<f64, GraphError> {
    g.evaluate(x)
}

/// Product of `dims`, or `None` on overflow.
pub fn checked_product(dims: &[usize]) -> Option<usize> {
    dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
}

/// Dense potential table over an ordered scope.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTable {
    scope: Vec<usize>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    values: Vec<f64>,
}

impl PotentialTable {
    fn new(scope: Vec<usize>, dims: Vec<usize>, values: Vec<f64>) -> Result<Self, GraphError> {
        let expected = checked_product(&dims)
            .filter(|&n| n <= MAX_TABLE_LEN)
            .ok_or(GraphError::TableTooLarge)?;
        if values.len() != expected {
            return Err(GraphError::TableSize {
                expected,
                got: values.len(),
            });
        }
        check_values(&values)?;
        let mut strides = vec![1usize; dims.len()];
        for p in (0..dims.len().saturating_sub(1)).rev() {
            strides[p] = strides[p + 1] * dims[p + 1];
        }
        Ok(Self {
            scope,
            dims,
            strides,
            values,
        })
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    /// Cardinality of each scope variable, in scope order.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Position of variable `var` inside the scope.
    pub fn position(&self, var: usize) -> Option<usize> {
        self.scope.iter().position(|&v| v == var)
    }

    /// Flat index of the entry selected by a full assignment `x`.
    pub fn index_for(&self, x: &[usize]) -> usize {
        self.scope
            .iter()
            .zip(&self.strides)
            .map(|(&v, &s)| x[v] * s)
            .sum()
    }

    /// Entry selected by a full assignment `x`.
    pub fn value_for(&self, x: &[usize]) -> f64 {
        self.values[self.index_for(x)]
    }

    /// State of scope position `pos` encoded in flat index `index`.
    pub fn state_at(&self, index: usize, pos: usize) -> usize {
        (index / self.strides[pos]) % self.dims[pos]
    }
}

/// One (factor, variable) incidence of the factor graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub factor: usize,
    /// Position of `var` inside the factor's scope.
    pub pos: usize,
    pub var: usize,
}

/// A factorized objective over finite alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorGraph {
    cards: Vec<usize>,
    unary: Vec<Vec<f64>>,
    factors: Vec<PotentialTable>,
    neighbors: Vec<Vec<usize>>,
    var_edges: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    edge_offsets: Vec<usize>,
}

impl FactorGraph {
    /// Creates a graph with the given cardinalities, zero unary potentials
    /// and no factors.
    pub fn new(cards: Vec<usize>) -> Result<Self, GraphError> {
        if cards.is_empty() {
            return Err(GraphError::Empty);
        }
        if let Some(i) = cards.iter().position(|&k| k == 0) {
            return Err(GraphError::ZeroCardinality(i));
        }
        let unary = cards.iter().map(|&k| vec![0.0; k]).collect();
        let n = cards.len();
        Ok(Self {
            cards,
            unary,
            factors: Vec::new(),
            neighbors: vec![Vec::new(); n],
            var_edges: vec![Vec::new(); n],
            edges: Vec::new(),
            edge_offsets: Vec::new(),
        })
    }

    fn check_var(&self, var: usize) -> Result<(), GraphError> {
        if var >= self.cards.len() {
            return Err(GraphError::UnknownVariable {
                var,
                num_vars: self.cards.len(),
            });
        }
        Ok(())
    }

    pub fn set_unary(&mut self, var: usize, values: Vec<f64>) -> Result<(), GraphError> {
        self.check_var(var)?;
        if values.len() != self.cards[var] {
            return Err(GraphError::TableSize {
                expected: self.cards[var],
                got: values.len(),
            });
        }
        check_values(&values)?;
        self.unary[var] = values;
        Ok(())
    }

    /// Builder-style [`set_unary`](Self::set_unary).
    pub fn with_unary(mut self, var: usize, values: Vec<f64>) -> Result<Self, GraphError> {
        self.set_unary(var, values)?;
        Ok(self)
    }

    /// Appends a factor and returns its index. Duplicate scopes are kept as
    /// distinct factors.
    pub fn add_factor(&mut self, scope: Vec<usize>, values: Vec<f64>) -> Result<usize, GraphError> {
        if scope.is_empty() {
            return Err(GraphError::EmptyScope);
        }
        for (p, &v) in scope.iter().enumerate() {
            self.check_var(v)?;
            if scope[..p].contains(&v) {
                return Err(GraphError::RepeatedVariable(v));
            }
        }
        let dims = scope.iter().map(|&v| self.cards[v]).collect();
        let table = PotentialTable::new(scope, dims, values)?;
        let a = self.factors.len();
        self.edge_offsets.push(self.edges.len());
        for (pos, &var) in table.scope.iter().enumerate() {
            self.var_edges[var].push(self.edges.len());
            self.edges.push(Edge {
                factor: a,
                pos,
                var,
            });
            self.neighbors[var].push(a);
        }
        self.factors.push(table);
        Ok(a)
    }

    /// Builder-style [`add_factor`](Self::add_factor).
    pub fn with_factor(mut self, scope: Vec<usize>, values: Vec<f64>) -> Result<Self, GraphError> {
        self.add_factor(scope, values)?;
        Ok(self)
    }

    pub fn num_vars(&self) -> usize {
        self.cards.len()
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn cardinality(&self, var: usize) -> usize {
        self.cards[var]
    }

    pub fn unary(&self, var: usize) -> &[f64] {
        &self.unary[var]
    }

    pub fn factor(&self, a: usize) -> &PotentialTable {
        &self.factors[a]
    }

    pub fn factors(&self) -> &[PotentialTable] {
        &self.factors
    }

    /// Factors containing `var` (the set ∂i), ascending.
    pub fn neighbors(&self, var: usize) -> &[usize] {
        &self.neighbors[var]
    }

    pub fn degree(&self, var: usize) -> usize {
        self.neighbors[var].len()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    /// Edge ids incident to `var`, in ascending factor order.
    pub fn var_edges(&self, var: usize) -> &[usize] {
        &self.var_edges[var]
    }

    /// Edge ids of factor `a`, in scope order.
    pub fn factor_edges(&self, a: usize) -> std::ops::Range<usize> {
        let start = self.edge_offsets[a];
        start..start + self.factors[a].arity()
    }

    /// Edge id joining factor `a` and scope position `pos`.
    pub fn edge_id(&self, a: usize, pos: usize) -> usize {
        self.edge_offsets[a] + pos
    }

    /// Number of joint states, or `None` if it does not fit in `usize`.
    pub fn state_space_size(&self) -> Option<usize> {
        checked_product(&self.cards)
    }

    pub fn check_assignment(&self, x: &[usize]) -> Result<(), GraphError> {
        if x.len() != self.cards.len() {
            return Err(GraphError::AssignmentLength {
                expected: self.cards.len(),
                got: x.len(),
            });
        }
        for (var, (&state, &card)) in x.iter().zip(&self.cards).enumerate() {
            if state >= card {
                return Err(GraphError::StateOutOfRange { var, state, card });
            }
        }
        Ok(())
    }

    /// Objective value at `x`; `+inf` if any term is infinite.
    pub fn evaluate(&self, x: &[usize]) -> Result<f64, GraphError> {
        self.check_assignment(x)?;
        Ok(self.evaluate_unchecked(x))
    }

    /// Objective value at `x` without validating the assignment.
    pub fn evaluate_unchecked(&self, x: &[usize]) -> f64 {
        let unary: f64 = self.unary.iter().zip(x).map(|(phi, &s)| phi[s]).sum();
        let factors: f64 = self.factors.iter().map(|t| t.value_for(x)).sum();
        unary + factors
    }

    pub fn is_pairwise(&self) -> bool {
        self.factors.iter().all(|t| t.arity() <= 2)
    }

    pub fn is_binary(&self) -> bool {
        self.cards.iter().all(|&k| k == 2)
    }

    /// True when the bipartite variable/factor graph has no cycle.
    /// Two factors with the same pair scope form a cycle.
    pub fn is_acyclic(&self) -> bool {
        let n = self.num_vars();
        let mut uf = UnionFind::new(n + self.num_factors());
        self.edges.iter().all(|e| uf.union(e.var, n + e.factor))
    }

    /// Connected components of the variable interaction graph, as a
    /// component label per variable.
    pub fn components(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.num_vars());
        for t in &self.factors {
            for w in t.scope.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        (0..self.num_vars()).map(|i| uf.find(i)).collect()
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already connected.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Structural summary produced by [`validate_graph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphReport {
    pub num_vars: usize,
    pub num_factors: usize,
    pub pairwise: bool,
    pub binary: bool,
    pub tree: bool,
    pub max_degree: usize,
}

/// Re-checks every structural invariant and summarizes the graph.
pub fn validate_graph(g: &FactorGraph) -> Result<GraphReport, GraphError> {
    if g.num_vars() == 0 {
        return Err(GraphError::Empty);
    }
    for (i, (&card, phi)) in g.cards.iter().zip(&g.unary).enumerate() {
        if card == 0 {
            return Err(GraphError::ZeroCardinality(i));
        }
        if phi.len() != card {
            return Err(GraphError::TableSize {
                expected: card,
                got: phi.len(),
            });
        }
        check_values(phi)?;
    }
    for t in &g.factors {
        if t.scope.is_empty() {
            return Err(GraphError::EmptyScope);
        }
        for (p, &v) in t.scope.iter().enumerate() {
            g.check_var(v)?;
            if t.scope[..p].contains(&v) {
                return Err(GraphError::RepeatedVariable(v));
            }
            if t.dims[p] != g.cards[v] {
                return Err(GraphError::TableSize {
                    expected: g.cards[v],
                    got: t.dims[p],
                });
            }
        }
        let expected = checked_product(&t.dims).ok_or(GraphError::TableTooLarge)?;
        if t.values.len() != expected {
            return Err(GraphError::TableSize {
                expected,
                got: t.values.len(),
            });
        }
        check_values(&t.values)?;
    }
    Ok(GraphReport {
        num_vars: g.num_vars(),
        num_factors: g.num_factors(),
        pairwise: g.is_pairwise(),
        binary: g.is_binary(),
        tree: g.is_acyclic(),
        max_degree: g.max_degree(),
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::FactorGraph;

    /// f(x1, x2) = x1 + x2 + x1·x2 over {0,1}².
    pub fn g1() -> FactorGraph {
        FactorGraph::new(vec![2, 2])
            .unwrap()
            .with_unary(0, vec![0.0, 1.0])
            .unwrap()
            .with_unary(1, vec![0.0, 1.0])
            .unwrap()
            .with_factor(vec![0, 1], vec![0.0, 0.0, 0.0, 1.0])
            .unwrap()
    }

    /// Frustrated triangle: ψ(a,b) = 1 if a = b else 0 on all three edges.
    pub fn g2() -> FactorGraph {
        let eq = vec![1.0, 0.0, 0.0, 1.0];
        FactorGraph::new(vec![2, 2, 2])
            .unwrap()
            .with_factor(vec![0, 1], eq.clone())
            .unwrap()
            .with_factor(vec![1, 2], eq.clone())
            .unwrap()
            .with_factor(vec![0, 2], eq)
            .unwrap()
    }

    /// Binary chain 0 - 1 - 2 with integer potentials.
    pub fn g3() -> FactorGraph {
        FactorGraph::new(vec![2, 2, 2])
            .unwrap()
            .with_unary(0, vec![0.0, 2.0])
            .unwrap()
            .with_unary(1, vec![1.0, 0.0])
            .unwrap()
            .with_unary(2, vec![0.0, 1.0])
            .unwrap()
            .with_factor(vec![0, 1], vec![0.0, 3.0, 1.0, 0.0])
            .unwrap()
            .with_factor(vec![1, 2], vec![2.0, 0.0, 0.0, 2.0])
            .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn single_variable_is_a_tree() {
        let g = FactorGraph::new(vec![3]).unwrap();
        let r = validate_graph(&g).unwrap();
        assert!(r.tree);
        assert_eq!(r.max_degree, 0);
        assert_eq!(r.num_factors, 0);
    }

    #[test]
    fn triangle_report() {
        let r = validate_graph(&g2()).unwrap();
        assert!(r.pairwise && r.binary && !r.tree);
        assert_eq!(r.max_degree, 2);
    }

    #[test]
    fn repeated_scope_variable_rejected() {
        let mut g = FactorGraph::new(vec![2, 2]).unwrap();
        assert_eq!(
            g.add_factor(vec![1, 1], vec![0.0; 4]),
            Err(GraphError::RepeatedVariable(1))
        );
    }

    #[test]
    fn construction_errors() {
        assert_eq!(FactorGraph::new(vec![]), Err(GraphError::Empty));
        let mut g = FactorGraph::new(vec![2, 2]).unwrap();
        assert!(matches!(
            g.add_factor(vec![0, 5], vec![0.0; 4]),
            Err(GraphError::UnknownVariable { var: 5, .. })
        ));
        assert!(matches!(
            g.add_factor(vec![0, 1], vec![0.0; 3]),
            Err(GraphError::TableSize { expected: 4, got: 3 })
        ));
        assert_eq!(
            g.add_factor(vec![0], vec![f64::INFINITY; 2]),
            Err(GraphError::NoFiniteEntry)
        );
        assert_eq!(
            g.set_unary(0, vec![f64::NEG_INFINITY, 0.0]),
            Err(GraphError::InvalidValue)
        );
    }

    #[test]
    fn duplicate_scopes_are_distinct_factors_and_a_cycle() {
        let g = g1().with_factor(vec![0, 1], vec![0.0; 4]).unwrap();
        assert_eq!(g.num_factors(), 2);
        assert_eq!(g.neighbors(0), &[0, 1]);
        assert!(!g.is_acyclic());
    }

    #[test]
    fn g1_values() {
        let g = g1();
        assert_eq!(g.evaluate(&[0, 0]).unwrap(), 0.0);
        assert_eq!(g.evaluate(&[1, 1]).unwrap(), 3.0);
        assert_eq!(g.evaluate(&[1, 0]).unwrap(), 1.0);
        assert!(g.evaluate(&[2, 0]).is_err());
        assert!(g.evaluate(&[0]).is_err());
    }

    #[test]
    fn infinite_entry_absorbs() {
        let g = g1()
            .with_factor(vec![1], vec![0.0, f64::INFINITY])
            .unwrap();
        assert_eq!(g.evaluate(&[0, 1]).unwrap(), f64::INFINITY);
        assert_eq!(g.evaluate(&[1, 0]).unwrap(), 1.0);
    }

    #[test]
    fn last_scope_variable_fastest() {
        let g = FactorGraph::new(vec![2, 3])
            .unwrap()
            .with_factor(vec![0, 1], (0..6).map(f64::from).collect())
            .unwrap();
        let t = g.factor(0);
        assert_eq!(t.value_for(&[1, 2]), 5.0);
        assert_eq!(t.value_for(&[0, 1]), 1.0);
        assert_eq!(t.state_at(4, 0), 1);
        assert_eq!(t.state_at(4, 1), 1);
        let mut seen = Vec::new();
        for_each_joint_state(t.dims(), |idx, s| seen.push((idx, s.to_vec())));
        assert_eq!(seen[4], (4, vec![1, 1]));
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn edges_follow_factor_order() {
        let g = g2();
        assert_eq!(g.num_edges(), 6);
        assert_eq!(g.var_edges(0), &[0, 4]);
        assert_eq!(g.edge(4), Edge { factor: 2, pos: 0, var: 0 });
        assert_eq!(g.factor_edges(1), 2..4);
    }
}
