//! Weighted computation trees.
//!
//! The tree of depth `t` rooted at variable `i` unrolls the dependencies of
//! the belief `b_i` after `t` synchronous sweeps from zero messages. Each
//! node carries the product of the edge weights on its root path, and its
//! potential is scaled by that product. Evaluating the tree by dynamic
//! programming reproduces the engine's belief exactly.

use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::FactorGraph;
use crate::params::SplitParams;

pub const MAX_TREE_DEPTH: usize = 8;
pub const MAX_TREE_NODES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompTreeError {
    #[error("depth {0} exceeds the limit of {MAX_TREE_DEPTH}")]
    DepthTooLarge(usize),
    #[error("tree exceeds {MAX_TREE_NODES} nodes")]
    TooLarge,
    #[error("unknown variable {0}")]
    UnknownVariable(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Var(usize),
    Factor(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub kind: NodeKind,
    /// Product of edge weights from the root.
    pub weight: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Scope position inside the parent factor (variable nodes), or of the
    /// parent variable inside this factor (factor nodes).
    pub pos: usize,
    /// Whether the node contributes its own potential. Leaf variables
    /// at the bottom of the unrolling are free and carry none.
    pub has_potential: bool,
    /// A variable copy whose state is tied to its grandparent: the
    /// `(c_i − 1)` return branch of a factor.
    pub pinned: bool,
}

/// Computation tree over a borrowed graph.
#[derive(Debug, Clone)]
pub struct CompTree<'g> {
    graph: &'g FactorGraph,
    params: SplitParams,
    nodes: Vec<TreeNode>,
    depth: usize,
}

impl CompTree<'_> {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn children(&self, node: usize) -> impl Iterator<Item = &TreeNode> {
        self.nodes[node].children.iter().map(|&c| &self.nodes[c])
    }

    /// Indented text dump: one line per node with kind, original id and
    /// accumulated weight.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, level)) = stack.pop() {
            let n = &self.nodes[id];
            let (kind, orig) = match n.kind {
                NodeKind::Var(i) => ("var", i),
                NodeKind::Factor(a) => ("factor", a),
            };
            let mut flags = String::new();
            if n.pinned {
                flags.push_str(" pinned");
            }
            if matches!(n.kind, NodeKind::Var(_)) && !n.has_potential {
                flags.push_str(" free");
            }
            let _ = writeln!(out, "{}{} {} w={}{}", "  ".repeat(level), kind, orig, n.weight, flags);
            for &c in n.children.iter().rev() {
                stack.push((c, level + 1));
            }
        }
        out
    }
}

/// Builds the depth-`t` tree rooted at variable `root`.
///
/// Under a variable copy of `k` entered through factor `γ`, each factor
/// `β ∈ ∂k` is a child with edge weight `c_β`, or `c_γ − 1` for `β = γ`.
/// Under a factor copy of `α` entered from variable `i`, each scope
/// variable `k` is a child with edge weight `c_k`, or `c_i − 1` for the
/// pinned copy of `i`. Branches whose accumulated weight is exactly zero
/// are dropped.
pub fn build_computation_tree<'g>(
    g: &'g FactorGraph,
    c: &SplitParams,
    root: usize,
    t: usize,
) -> Result<CompTree<'g>, CompTreeError> {
    if t > MAX_TREE_DEPTH {
        return Err(CompTreeError::DepthTooLarge(t));
    }
    if root >= g.num_vars() {
        return Err(CompTreeError::UnknownVariable(root));
    }
    let mut nodes = vec![TreeNode {
        kind: NodeKind::Var(root),
        weight: 1.0,
        parent: None,
        children: Vec::new(),
        pos: 0,
        has_potential: true,
        pinned: false,
    }];
    // Message time of each pending node: factor children of the root use
    // time t, a factor at time τ has variable children at τ − 1, and a
    // variable at time σ has factor children at σ − 1.
    let mut pending = vec![(0usize, t)];
    while let Some((id, time)) = pending.pop() {
        let node = nodes[id].clone();
        let mut kids = Vec::new();
        match node.kind {
            NodeKind::Var(k) => {
                let factor_time = if node.parent.is_none() { time } else { time.saturating_sub(1) };
                if factor_time == 0 || !node.has_potential {
                    continue;
                }
                let entered = node.parent.map(|p| match nodes[p].kind {
                    NodeKind::Factor(a) => a,
                    NodeKind::Var(_) => unreachable!("variables only hang under factors"),
                });
                for &e in g.var_edges(k) {
                    let edge = g.edge(e);
                    let cb = c.factor(edge.factor);
                    let w = if Some(edge.factor) == entered { cb - 1.0 } else { cb };
                    let weight = node.weight * w;
                    if weight == 0.0 {
                        continue;
                    }
                    kids.push((
                        TreeNode {
                            kind: NodeKind::Factor(edge.factor),
                            weight,
                            parent: Some(id),
                            children: Vec::new(),
                            pos: edge.pos,
                            has_potential: true,
                            pinned: false,
                        },
                        factor_time,
                    ));
                }
            }
            NodeKind::Factor(a) => {
                let var_time = time - 1;
                for (q, &k) in g.factor(a).scope().iter().enumerate() {
                    let pinned = q == node.pos;
                    let w = if pinned { c.var(k) - 1.0 } else { c.var(k) };
                    let weight = node.weight * w;
                    if weight == 0.0 {
                        continue;
                    }
                    kids.push((
                        TreeNode {
                            kind: NodeKind::Var(k),
                            weight,
                            parent: Some(id),
                            children: Vec::new(),
                            pos: q,
                            has_potential: var_time > 0,
                            pinned,
                        },
                        var_time,
                    ));
                }
            }
        }
        for (child, time) in kids {
            if nodes.len() >= MAX_TREE_NODES {
                return Err(CompTreeError::TooLarge);
            }
            let cid = nodes.len();
            nodes.push(child);
            nodes[id].children.push(cid);
            pending.push((cid, time));
        }
    }
    Ok(CompTree {
        graph: g,
        params: c.clone(),
        nodes,
        depth: t,
    })
}

/// Exact root marginal by dynamic programming, min-normalized.
///
/// A factor copy with accumulated weight `W` optimizes over its scope
/// (other than the parent variable) by minimizing when `W > 0` and
/// maximizing when `W < 0`, since `W · min(·) = max(W · ·)` for negative
/// `W`. Table entries equal to `+inf` are excluded from the optimization.
pub fn tree_root_belief(tree: &CompTree<'_>) -> Vec<f64> {
    let g = tree.graph;
    let c = &tree.params;
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); tree.nodes.len()];
    // Children always have larger ids than their parent.
    for id in (0..tree.nodes.len()).rev() {
        let node = &tree.nodes[id];
        values[id] = match node.kind {
            NodeKind::Var(k) => {
                let mut v: Vec<f64> = if node.has_potential {
                    g.unary(k).iter().map(|p| node.weight * p / c.var(k)).collect()
                } else {
                    vec![0.0; g.cardinality(k)]
                };
                for &ch in &node.children {
                    for (acc, x) in v.iter_mut().zip(&values[ch]) {
                        *acc += x;
                    }
                }
                v
            }
            NodeKind::Factor(a) => {
                let t = g.factor(a);
                let scale = node.weight / c.factor(a);
                let maximize = node.weight < 0.0;
                let fill = if maximize { f64::NEG_INFINITY } else { f64::INFINITY };
                let mut v = vec![fill; t.dims()[node.pos]];
                for (idx, &psi) in t.values().iter().enumerate() {
                    if psi == f64::INFINITY {
                        continue;
                    }
                    let mut total = scale * psi;
                    for &ch in &node.children {
                        let q = tree.nodes[ch].pos;
                        total += values[ch][t.state_at(idx, q)];
                    }
                    let s = t.state_at(idx, node.pos);
                    if (maximize && total > v[s]) || (!maximize && total < v[s]) {
                        v[s] = total;
                    }
                }
                v
            }
        };
        for &ch in &node.children {
            values[ch] = Vec::new();
        }
    }
    let mut root = std::mem::take(&mut values[0]);
    let lo = root.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo.is_finite() {
        for x in &mut root {
            *x -= lo;
        }
    }
    root
}
