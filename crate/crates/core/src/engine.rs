//! Splitting min-sum message passing with synchronous and asynchronous
//! schedules.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::beliefs::{compute_beliefs, extract_estimate, lower_bound, BeliefError, BeliefSet, Estimate};
use crate::graph::FactorGraph;
use crate::params::{classify_params, OptimalityClass, ParamsError, SplitParams};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_SWEEPS: usize = 1000;

/// Direction of a message along an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToFactor,
    ToVar,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Beliefs(#[from] BeliefError),
    #[error("message on edge {edge} ({direction:?}) is not finite")]
    InfiniteMessage { edge: usize, direction: Direction },
    #[error("message state does not match the graph: {0}")]
    StateMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Messages `m_{i→α}` and `m_{α→i}`, both indexed by edge id.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    to_factor: Vec<Vec<f64>>,
    to_var: Vec<Vec<f64>>,
}

impl MessageState {
    /// Builds a state from explicit vectors, checking shapes and finiteness.
    pub fn from_parts(
        g: &FactorGraph,
        to_factor: Vec<Vec<f64>>,
        to_var: Vec<Vec<f64>>,
    ) -> Result<Self, EngineError> {
        for (name, msgs) in [("to_factor", &to_factor), ("to_var", &to_var)] {
            if msgs.len() != g.num_edges() {
                return Err(EngineError::StateMismatch(format!(
                    "{name} has {} vectors, graph has {} edges",
                    msgs.len(),
                    g.num_edges()
                )));
            }
            for (e, m) in msgs.iter().enumerate() {
                let card = g.cardinality(g.edge(e).var);
                if m.len() != card {
                    return Err(EngineError::StateMismatch(format!(
                        "{name} vector on edge {e} has length {}, expected {card}",
                        m.len()
                    )));
                }
            }
        }
        let s = Self { to_factor, to_var };
        s.check_finite()?;
        Ok(s)
    }

    /// `m_{i→α}` on edge `e`.
    pub fn to_factor(&self, e: usize) -> &[f64] {
        &self.to_factor[e]
    }

    /// `m_{α→i}` on edge `e`.
    pub fn to_var(&self, e: usize) -> &[f64] {
        &self.to_var[e]
    }

    pub fn to_factor_all(&self) -> &[Vec<f64>] {
        &self.to_factor
    }

    pub fn to_var_all(&self) -> &[Vec<f64>] {
        &self.to_var
    }

    pub fn set_to_factor(&mut self, e: usize, m: Vec<f64>) {
        self.to_factor[e] = m;
    }

    pub fn set_to_var(&mut self, e: usize, m: Vec<f64>) {
        self.to_var[e] = m;
    }

    pub fn check_finite(&self) -> Result<(), EngineError> {
        for (direction, msgs) in [
            (Direction::ToFactor, &self.to_factor),
            (Direction::ToVar, &self.to_var),
        ] {
            if let Some(edge) = msgs.iter().position(|m| m.iter().any(|v| !v.is_finite())) {
                return Err(EngineError::InfiniteMessage { edge, direction });
            }
        }
        Ok(())
    }

    /// Largest absolute entrywise difference to `other`.
    pub fn max_abs_diff(&self, other: &MessageState) -> f64 {
        let pairs = self
            .to_factor
            .iter()
            .zip(&other.to_factor)
            .chain(self.to_var.iter().zip(&other.to_var));
        pairs
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// All messages identically zero.
pub fn init_messages(g: &FactorGraph) -> MessageState {
    let zeros: Vec<Vec<f64>> = g
        .edges()
        .iter()
        .map(|e| vec![0.0; g.cardinality(e.var)])
        .collect();
    MessageState {
        to_factor: zeros.clone(),
        to_var: zeros,
    }
}

/// Subtracts the minimum; fails if any entry is not finite afterwards.
fn normalize(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if !lo.is_finite() {
        return None;
    }
    for x in &mut v {
        *x -= lo;
    }
    v.iter().all(|x| x.is_finite()).then_some(v)
}

/// Unnormalized `φ_i/c_i + (c_α − 1) m_{α→i} + Σ_{β∈∂i∖α} c_β m_{β→i}` for
/// edge `e = (i, α)`.
pub fn var_to_factor_raw(g: &FactorGraph, c: &SplitParams, state: &MessageState, e: usize) -> Vec<f64> {
    let edge = g.edge(e);
    let i = edge.var;
    let ci = c.var(i);
    let ca = c.factor(edge.factor);
    let mut out: Vec<f64> = g.unary(i).iter().map(|p| p / ci).collect();
    for &f in g.var_edges(i) {
        let w = if f == e { ca - 1.0 } else { c.factor(g.edge(f).factor) };
        if w == 0.0 {
            continue;
        }
        for (acc, m) in out.iter_mut().zip(&state.to_var[f]) {
            *acc += w * m;
        }
    }
    out
}

/// Unnormalized `min_{x_{α∖i}} [ψ_α/c_α + (c_i − 1) m_{i→α} + Σ_{k∈α∖i} c_k m_{k→α}]`
/// for edge `e = (i, α)`.
pub fn factor_to_var_raw(g: &FactorGraph, c: &SplitParams, state: &MessageState, e: usize) -> Vec<f64> {
    let edge = g.edge(e);
    let a = edge.factor;
    let t = g.factor(a);
    let ca = c.factor(a);
    let weights: Vec<f64> = t
        .scope()
        .iter()
        .enumerate()
        .map(|(p, &k)| if p == edge.pos { c.var(k) - 1.0 } else { c.var(k) })
        .collect();
    let base = g.edge_id(a, 0);
    let mut out = vec![f64::INFINITY; g.cardinality(edge.var)];
    let mut states = vec![0usize; t.arity()];
    for (idx, &psi) in t.values().iter().enumerate() {
        if psi == f64::INFINITY {
            continue;
        }
        let mut v = psi / ca;
        for p in 0..t.arity() {
            let s = t.state_at(idx, p);
            states[p] = s;
            if weights[p] != 0.0 {
                v += weights[p] * state.to_factor[base + p][s];
            }
        }
        let s = states[edge.pos];
        if v < out[s] {
            out[s] = v;
        }
    }
    out
}

fn checked(v: Vec<f64>, edge: usize, direction: Direction) -> Result<Vec<f64>, EngineError> {
    normalize(v).ok_or(EngineError::InfiniteMessage { edge, direction })
}

/// Normalized `m_{i→α}` for edge `e`.
pub fn var_to_factor_message(
    g: &FactorGraph,
    c: &SplitParams,
    state: &MessageState,
    e: usize,
) -> Result<Vec<f64>, EngineError> {
    checked(var_to_factor_raw(g, c, state, e), e, Direction::ToFactor)
}

/// Normalized `m_{α→i}` for edge `e`.
pub fn factor_to_var_message(
    g: &FactorGraph,
    c: &SplitParams,
    state: &MessageState,
    e: usize,
) -> Result<Vec<f64>, EngineError> {
    checked(factor_to_var_raw(g, c, state, e), e, Direction::ToVar)
}

fn blend(new: Vec<f64>, old: &[f64], damping: f64, e: usize, dir: Direction) -> Result<Vec<f64>, EngineError> {
    if damping == 0.0 {
        return Ok(new);
    }
    let mixed = new
        .iter()
        .zip(old)
        .map(|(n, o)| (1.0 - damping) * n + damping * o)
        .collect();
    checked(mixed, e, dir)
}

/// One synchronous sweep: every message recomputed from the previous state.
pub fn sync_sweep(g: &FactorGraph, c: &SplitParams, state: &MessageState) -> Result<MessageState, EngineError> {
    sync_sweep_damped(g, c, state, 0.0)
}

/// [`sync_sweep`] followed by the blend `(1 − γ)·new + γ·old` and
/// renormalization.
pub fn sync_sweep_damped(
    g: &FactorGraph,
    c: &SplitParams,
    state: &MessageState,
    damping: f64,
) -> Result<MessageState, EngineError> {
    let mut next = MessageState {
        to_factor: Vec::with_capacity(g.num_edges()),
        to_var: Vec::with_capacity(g.num_edges()),
    };
    for e in 0..g.num_edges() {
        let m = var_to_factor_message(g, c, state, e)?;
        next.to_factor
            .push(blend(m, &state.to_factor[e], damping, e, Direction::ToFactor)?);
    }
    for e in 0..g.num_edges() {
        let m = factor_to_var_message(g, c, state, e)?;
        next.to_var
            .push(blend(m, &state.to_var[e], damping, e, Direction::ToVar)?);
    }
    Ok(next)
}

/// Asynchronous update at variable `j`: for each factor `β ∈ ∂j` in
/// ascending order, refresh `m_{i→β}` for every `i ∈ β∖j`, then `m_{β→j}`.
///
/// On error the state is left partially updated but still finite.
pub fn async_variable_update(
    g: &FactorGraph,
    c: &SplitParams,
    state: &mut MessageState,
    j: usize,
) -> Result<(), EngineError> {
    for &ej in g.var_edges(j) {
        let beta = g.edge(ej).factor;
        for e in g.factor_edges(beta) {
            if e == ej {
                continue;
            }
            let m = var_to_factor_message(g, c, state, e)?;
            state.to_factor[e] = m;
        }
        let m = factor_to_var_message(g, c, state, ej)?;
        state.to_var[ej] = m;
    }
    Ok(())
}

/// Variable visiting order for the asynchronous schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Natural,
    /// A fresh seeded permutation every sweep.
    Random(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Sync,
    Async(Order),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub schedule: Schedule,
    pub tol: f64,
    pub max_sweeps: usize,
    /// Only allowed with the synchronous schedule.
    pub damping: f64,
    pub tie_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schedule: Schedule::Sync,
            tol: DEFAULT_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            damping: 0.0,
            tie_tol: crate::beliefs::DEFAULT_TIE_TOL,
        }
    }
}

impl RunConfig {
    pub fn sync() -> Self {
        Self::default()
    }

    pub fn async_natural() -> Self {
        Self {
            schedule: Schedule::Async(Order::Natural),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), EngineError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(EngineError::Config("tol must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(EngineError::Config("damping must lie in [0, 1)".into()));
        }
        if self.damping != 0.0 && self.schedule != Schedule::Sync {
            return Err(EngineError::Config(
                "damping is only supported with the synchronous schedule".into(),
            ));
        }
        if !(self.tie_tol >= 0.0) {
            return Err(EngineError::Config("tie_tol must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxIters,
    InfiniteMessage,
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIters => "max_iters",
            RunStatus::InfiniteMessage => "infinite_message",
        })
    }
}

/// One row of the per-sweep trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub sweep: usize,
    /// Present only when the parameters pass the global sign test.
    pub lb: Option<f64>,
    pub max_belief_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub status: RunStatus,
    pub sweeps: usize,
    pub trace: Vec<TraceRow>,
    pub final_delta: f64,
    pub estimate: Estimate,
    pub beliefs: BeliefSet,
    pub state: MessageState,
    pub lower_bound: Option<f64>,
    pub class: OptimalityClass,
    /// The failing message when `status` is `InfiniteMessage`.
    pub fault: Option<(usize, Direction)>,
}

impl RunReport {
    /// Per-sweep lower bounds, or `None` when no bound is defined.
    pub fn lb_trace(&self) -> Option<Vec<f64>> {
        self.trace.iter().map(|r| r.lb).collect()
    }
}

/// Largest absolute change between two belief sets; entries that are
/// `+inf` on both sides count as unchanged.
pub fn belief_delta(a: &BeliefSet, b: &BeliefSet) -> f64 {
    let pairs = a.var.iter().zip(&b.var).chain(a.fac.iter().zip(&b.fac));
    pairs
        .flat_map(|(x, y)| x.iter().zip(y))
        .map(|(&x, &y)| if x == y { 0.0 } else { (x - y).abs() })
        .fold(0.0, f64::max)
}

/// Runs from zero-initialized messages.
pub fn run(g: &FactorGraph, c: &SplitParams, config: &RunConfig) -> Result<RunReport, EngineError> {
    run_from(g, c, config, init_messages(g))
}

/// Runs from an arbitrary finite initial state.
pub fn run_from(
    g: &FactorGraph,
    c: &SplitParams,
    config: &RunConfig,
    init: MessageState,
) -> Result<RunReport, EngineError> {
    config.validate()?;
    let class = classify_params(c, g)?.class;
    let with_lb = class == OptimalityClass::GlobalSign;
    // Shape and finiteness of the initial state.
    let mut state = MessageState::from_parts(g, init.to_factor, init.to_var)?;
    let mut beliefs = compute_beliefs(g, c, &state)?;
    let mut lb = if with_lb { Some(lower_bound(g, c, &beliefs)?) } else { None };
    let mut trace = Vec::new();
    let mut rng = match config.schedule {
        Schedule::Async(Order::Random(seed)) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut order: Vec<usize> = (0..g.num_vars()).collect();
    let mut status = RunStatus::MaxIters;
    let mut fault = None;
    let mut final_delta = f64::INFINITY;
    let mut sweeps = 0;

    while sweeps < config.max_sweeps {
        let previous = state.clone();
        let step = match config.schedule {
            Schedule::Sync => sync_sweep_damped(g, c, &state, config.damping).map(|s| state = s),
            Schedule::Async(_) => {
                if let Some(rng) = rng.as_mut() {
                    order.shuffle(rng);
                }
                order
                    .iter()
                    .try_for_each(|&j| async_variable_update(g, c, &mut state, j))
            }
        };
        if let Err(err) = step {
            if let EngineError::InfiniteMessage { edge, direction } = err {
                status = RunStatus::InfiniteMessage;
                fault = Some((edge, direction));
                beliefs = compute_beliefs(g, c, &state)?;
                lb = if with_lb { Some(lower_bound(g, c, &beliefs)?) } else { None };
                break;
            }
            return Err(err);
        }
        sweeps += 1;
        let next = compute_beliefs(g, c, &state)?;
        final_delta = belief_delta(&beliefs, &next);
        let next_lb = if with_lb { Some(lower_bound(g, c, &next)?) } else { None };
        trace.push(TraceRow {
            sweep: sweeps,
            lb: next_lb,
            max_belief_delta: final_delta,
        });
        let settled_messages = state.max_abs_diff(&previous) < config.tol;
        let lb_settled = match (lb, next_lb, config.schedule) {
            (Some(old), Some(new), Schedule::Async(_)) => new - old < config.tol,
            _ => true,
        };
        beliefs = next;
        lb = next_lb;
        if final_delta < config.tol && settled_messages && lb_settled {
            status = RunStatus::Converged;
            break;
        }
    }

    let estimate = extract_estimate(&beliefs, config.tie_tol);
    Ok(RunReport {
        status,
        sweeps,
        trace,
        final_delta,
        estimate,
        beliefs,
        state,
        lower_bound: lb,
        class,
        fault,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beliefs::{check_min_consistent, residual_at};
    use crate::graph::fixtures::*;
    use crate::oracle::brute_force_minimize;
    use crate::params::make_uniform_params;

    #[test]
    fn init_shapes() {
        let s = init_messages(&g1());
        assert_eq!(s.to_factor_all().len(), 2);
        assert_eq!(s.to_var_all().len(), 2);
        assert_eq!(init_messages(&g2()).to_var_all().len(), 6);
        let lone = FactorGraph::new(vec![3]).unwrap();
        assert!(init_messages(&lone).to_var_all().is_empty());
    }

    #[test]
    fn g1_first_sweep() {
        let g = g1();
        let c = SplitParams::ones(&g);
        let s = sync_sweep(&g, &c, &init_messages(&g)).unwrap();
        assert_eq!(s.to_var(0), &[0.0, 0.0]);
        let b = compute_beliefs(&g, &c, &s).unwrap();
        assert_eq!(b.var[0], vec![0.0, 1.0]);
    }

    #[test]
    fn infinite_slice_aborts() {
        let g = FactorGraph::new(vec![2, 2])
            .unwrap()
            .with_factor(vec![0, 1], vec![0.0, 0.0, f64::INFINITY, f64::INFINITY])
            .unwrap();
        let c = SplitParams::ones(&g);
        let err = sync_sweep(&g, &c, &init_messages(&g)).unwrap_err();
        assert!(matches!(err, EngineError::InfiniteMessage { direction: Direction::ToVar, .. }));
        let report = run(&g, &c, &RunConfig::sync()).unwrap();
        assert_eq!(report.status, RunStatus::InfiniteMessage);
        assert!(report.state.check_finite().is_ok());
    }

    #[test]
    fn async_update_is_min_consistent_at_j() {
        let g = g1();
        let c = SplitParams::ones(&g);
        let mut s = init_messages(&g);
        async_variable_update(&g, &c, &mut s, 0).unwrap();
        let b = compute_beliefs(&g, &c, &s).unwrap();
        assert!(residual_at(&g, &b, 0, 0) < 1e-12);

        let g = g2();
        let c = make_uniform_params(&g).unwrap();
        let mut s = init_messages(&g);
        async_variable_update(&g, &c, &mut s, 0).unwrap();
        let b = compute_beliefs(&g, &c, &s).unwrap();
        assert!(residual_at(&g, &b, 0, 0) < 1e-12);
        assert!(residual_at(&g, &b, 2, 0) < 1e-12);
    }

    #[test]
    fn isolated_variable_update_is_noop() {
        let g = g1().with_factor(vec![0], vec![0.0, 1.0]).unwrap();
        let g = {
            let mut h = FactorGraph::new(vec![2, 2, 3]).unwrap();
            for t in g.factors() {
                h.add_factor(t.scope().to_vec(), t.values().to_vec()).unwrap();
            }
            h
        };
        let c = SplitParams::ones(&g);
        let mut s = sync_sweep(&g, &c, &init_messages(&g)).unwrap();
        let before = s.clone();
        async_variable_update(&g, &c, &mut s, 2).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn g3_sync_matches_tree_exactness() {
        let g = g3();
        let report = run(&g, &SplitParams::ones(&g), &RunConfig::sync()).unwrap();
        assert_eq!(report.status, RunStatus::Converged);
        assert!(report.sweeps <= 5);
        let mm = crate::oracle::all_min_marginals(&g, 1 << 10).unwrap();
        for (b, f) in report.beliefs.var.iter().zip(&mm) {
            let shift = f[0] - b[0];
            for (x, y) in b.iter().zip(f) {
                assert!((y - x - shift).abs() < 1e-9);
            }
        }
        assert!(check_min_consistent(&g, &report.beliefs) < 1e-6);
    }

    #[test]
    fn g2_uniform_async() {
        let g = g2();
        let c = make_uniform_params(&g).unwrap();
        let report = run(&g, &c, &RunConfig::async_natural()).unwrap();
        assert_eq!(report.status, RunStatus::Converged);
        assert!(!report.estimate.unique);
        assert!(report.estimate.argmin_sets.iter().all(|s| s == &vec![0, 1]));
        assert!(report.lower_bound.unwrap() < 1.0 - 1e-3);
        let trace = report.lb_trace().unwrap();
        assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn g1_uniform_async() {
        let g = g1();
        let c = make_uniform_params(&g).unwrap();
        let report = run(&g, &c, &RunConfig::async_natural()).unwrap();
        assert_eq!(report.status, RunStatus::Converged);
        let x = report.estimate.assignment.clone().unwrap();
        assert_eq!(x, vec![0, 0]);
        assert_eq!(g.evaluate(&x).unwrap(), brute_force_minimize(&g).unwrap().value);
    }

    #[test]
    fn config_validation() {
        let g = g1();
        let c = SplitParams::ones(&g);
        let bad = RunConfig {
            damping: 0.5,
            ..RunConfig::async_natural()
        };
        assert!(matches!(run(&g, &c, &bad), Err(EngineError::Config(_))));
        let bad = RunConfig { tol: 0.0, ..RunConfig::sync() };
        assert!(matches!(run(&g, &c, &bad), Err(EngineError::Config(_))));
        let damped = RunConfig { damping: 0.5, ..RunConfig::sync() };
        assert_eq!(run(&g, &c, &damped).unwrap().status, RunStatus::Converged);
    }

    #[test]
    fn random_order_is_deterministic() {
        let g = g3();
        let c = make_uniform_params(&g).unwrap();
        let cfg = RunConfig {
            schedule: Schedule::Async(Order::Random(7)),
            ..RunConfig::default()
        };
        let a = run(&g, &c, &cfg).unwrap();
        let b = run(&g, &c, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
