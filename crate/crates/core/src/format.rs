//! Text formats for models, parameters, tree distributions and message
//! states.
//!
//! All formats are line based and whitespace separated; `#` starts a
//! comment. A model file looks like:
//!
//! ```text
//! FGM 1
//! vars 2
//! card 2 2
//! phi 0 0 1
//! phi 1 0 1
//! factor 2 0 1 0 0 0 1
//! ```
//!
//! Tables are row-major with the last scope variable fastest, and `inf`
//! denotes `+inf`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::engine::MessageState;
use crate::graph::{FactorGraph, GraphError};
use crate::params::{validate_params, ParamsError, SpanningTree, SplitParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Graph { line: usize, source: GraphError },
    #[error("missing {0}")]
    Missing(&'static str),
    #[error(transparent)]
    Params(#[from] ParamsError),
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        message: message.into(),
    }
}

/// Non-empty lines with comments stripped, paired with 1-based numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(n, raw)| {
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        (!tokens.is_empty()).then_some((n + 1, tokens))
    })
}

fn parse_usize(tok: &str, line: usize) -> Result<usize, FormatError> {
    tok.parse()
        .map_err(|_| syntax(line, format!("expected a nonnegative integer, found `{tok}`")))
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, FormatError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| syntax(line, format!("expected a number, found `{tok}`")))?;
    if v.is_nan() {
        return Err(syntax(line, "NaN is not allowed"));
    }
    Ok(v)
}

fn parse_values(toks: &[&str], line: usize) -> Result<Vec<f64>, FormatError> {
    toks.iter().map(|t| parse_f64(t, line)).collect()
}

/// A parsed model file: the graph and, when the file contains `cvar` or
/// `cfac` lines, the parameters they define.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub graph: FactorGraph,
    pub params: Option<SplitParams>,
}

/// Parses a model file, ignoring any inline parameter lines.
pub fn parse_model(text: &str) -> Result<FactorGraph, FormatError> {
    parse_model_file(text).map(|m| m.graph)
}

/// Parses a model file together with its optional inline parameter block.
pub fn parse_model_file(text: &str) -> Result<ModelFile, FormatError> {
    let mut it = lines(text);
    let (line, header) = it.next().ok_or(FormatError::Missing("`FGM 1` header"))?;
    if header != ["FGM", "1"] {
        return Err(syntax(line, "expected header `FGM 1`"));
    }
    let mut declared: Option<usize> = None;
    let mut graph: Option<FactorGraph> = None;
    let mut param_lines = Vec::new();
    for (line, toks) in it {
        let graph_err = |source| FormatError::Graph { line, source };
        match toks[0] {
            "vars" => {
                if declared.is_some() {
                    return Err(syntax(line, "duplicate `vars` line"));
                }
                if toks.len() != 2 {
                    return Err(syntax(line, "expected `vars <n>`"));
                }
                declared = Some(parse_usize(toks[1], line)?);
            }
            "card" => {
                let n = declared.ok_or_else(|| syntax(line, "`card` before `vars`"))?;
                if graph.is_some() {
                    return Err(syntax(line, "duplicate `card` line"));
                }
                let cards = toks[1..]
                    .iter()
                    .map(|t| parse_usize(t, line))
                    .collect::<Result<Vec<_>, _>>()?;
                if cards.len() != n {
                    return Err(syntax(line, format!("expected {n} cardinalities, found {}", cards.len())));
                }
                graph = Some(FactorGraph::new(cards).map_err(graph_err)?);
            }
            "phi" => {
                let g = graph.as_mut().ok_or_else(|| syntax(line, "`phi` before `card`"))?;
                if toks.len() < 2 {
                    return Err(syntax(line, "expected `phi <i> <values>`"));
                }
                let i = parse_usize(toks[1], line)?;
                let values = parse_values(&toks[2..], line)?;
                g.set_unary(i, values).map_err(graph_err)?;
            }
            "factor" => {
                let g = graph.as_mut().ok_or_else(|| syntax(line, "`factor` before `card`"))?;
                if toks.len() < 2 {
                    return Err(syntax(line, "expected `factor <m> <scope> <values>`"));
                }
                let m = parse_usize(toks[1], line)?;
                if toks.len() < 2 + m {
                    return Err(syntax(line, format!("scope needs {m} variable ids")));
                }
                let scope = toks[2..2 + m]
                    .iter()
                    .map(|t| parse_usize(t, line))
                    .collect::<Result<Vec<_>, _>>()?;
                let values = parse_values(&toks[2 + m..], line)?;
                g.add_factor(scope, values).map_err(graph_err)?;
            }
            "cvar" | "cfac" => param_lines.push((line, toks)),
            other => return Err(syntax(line, format!("unknown directive `{other}`"))),
        }
    }
    let graph = graph.ok_or(FormatError::Missing("`card` line"))?;
    let params = if param_lines.is_empty() {
        None
    } else {
        Some(params_from_lines(param_lines, &graph)?)
    };
    Ok(ModelFile { graph, params })
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

/// Writes a model file that [`parse_model`] reads back to an equal graph.
pub fn write_model(g: &FactorGraph) -> String {
    let mut out = String::from("FGM 1\n");
    let _ = writeln!(out, "vars {}", g.num_vars());
    let _ = writeln!(out, "card {}", join(g.cards()));
    for i in 0..g.num_vars() {
        if g.unary(i).iter().any(|&v| v != 0.0) {
            let _ = writeln!(out, "phi {i} {}", join(g.unary(i)));
        }
    }
    for t in g.factors() {
        let _ = writeln!(out, "factor {} {} {}", t.arity(), join(t.scope()), join(t.values()));
    }
    out
}

/// Parses a parameter file: `cvar <i> <value>` and `cfac <a> <value>`
/// lines override the all-ones default.
pub fn parse_params_file(text: &str, g: &FactorGraph) -> Result<SplitParams, FormatError> {
    params_from_lines(lines(text), g)
}

fn params_from_lines<'a>(
    lines: impl IntoIterator<Item = (usize, Vec<&'a str>)>,
    g: &FactorGraph,
) -> Result<SplitParams, FormatError> {
    let mut c = SplitParams::ones(g);
    for (line, toks) in lines {
        if toks.len() != 3 {
            return Err(syntax(line, "expected `cvar <i> <value>` or `cfac <a> <value>`"));
        }
        let idx = parse_usize(toks[1], line)?;
        let value = parse_f64(toks[2], line)?;
        match toks[0] {
            "cvar" if idx < g.num_vars() => c.set_var(idx, value),
            "cfac" if idx < g.num_factors() => c.set_factor(idx, value),
            "cvar" | "cfac" => return Err(syntax(line, format!("index {idx} out of range"))),
            other => return Err(syntax(line, format!("unknown directive `{other}`"))),
        }
    }
    validate_params(&c, g)?;
    Ok(c)
}

/// Writes every parameter explicitly.
pub fn write_params(c: &SplitParams) -> String {
    let mut out = String::new();
    for (i, v) in c.vars().iter().enumerate() {
        let _ = writeln!(out, "cvar {i} {v}");
    }
    for (a, v) in c.factors().iter().enumerate() {
        let _ = writeln!(out, "cfac {a} {v}");
    }
    out
}

/// Parses a tree distribution: one `tree <probability> <factor ids...>`
/// line per spanning tree.
pub fn parse_trees(text: &str) -> Result<Vec<SpanningTree>, FormatError> {
    let mut trees = Vec::new();
    for (line, toks) in lines(text) {
        if toks[0] != "tree" || toks.len() < 2 {
            return Err(syntax(line, "expected `tree <probability> <factor ids>`"));
        }
        let probability = parse_f64(toks[1], line)?;
        let factors = toks[2..]
            .iter()
            .map(|t| parse_usize(t, line))
            .collect::<Result<Vec<_>, _>>()?;
        trees.push(SpanningTree { factors, probability });
    }
    if trees.is_empty() {
        return Err(FormatError::Missing("`tree` lines"));
    }
    Ok(trees)
}

/// Parses a message state: header `MSG 1`, then `v2f <var> <factor> <values>`
/// for `m_{i→α}` and `f2v <factor> <var> <values>` for `m_{α→i}`. Messages
/// not listed are zero.
pub fn parse_state(text: &str, g: &FactorGraph) -> Result<MessageState, FormatError> {
    let mut it = lines(text);
    let (line, header) = it.next().ok_or(FormatError::Missing("`MSG 1` header"))?;
    if header != ["MSG", "1"] {
        return Err(syntax(line, "expected header `MSG 1`"));
    }
    let zeros: Vec<Vec<f64>> = g
        .edges()
        .iter()
        .map(|e| vec![0.0; g.cardinality(e.var)])
        .collect();
    let (mut to_factor, mut to_var) = (zeros.clone(), zeros);
    for (line, toks) in it {
        if toks.len() < 3 {
            return Err(syntax(line, "expected `v2f <var> <factor> <values>` or `f2v <factor> <var> <values>`"));
        }
        let (var, factor, target) = match toks[0] {
            "v2f" => (parse_usize(toks[1], line)?, parse_usize(toks[2], line)?, &mut to_factor),
            "f2v" => (parse_usize(toks[2], line)?, parse_usize(toks[1], line)?, &mut to_var),
            other => return Err(syntax(line, format!("unknown directive `{other}`"))),
        };
        if factor >= g.num_factors() {
            return Err(syntax(line, format!("unknown factor {factor}")));
        }
        let pos = g
            .factor(factor)
            .position(var)
            .ok_or_else(|| syntax(line, format!("variable {var} is not in factor {factor}")))?;
        let values = parse_values(&toks[3..], line)?;
        if values.len() != g.cardinality(var) {
            return Err(syntax(line, format!("expected {} values", g.cardinality(var))));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(syntax(line, "messages must be finite"));
        }
        target[g.edge_id(factor, pos)] = values;
    }
    MessageState::from_parts(g, to_factor, to_var).map_err(|e| syntax(0, e.to_string()))
}

/// Writes every message of `state`.
pub fn write_state(g: &FactorGraph, state: &MessageState) -> String {
    let mut out = String::from("MSG 1\n");
    for (e, edge) in g.edges().iter().enumerate() {
        let _ = writeln!(out, "v2f {} {} {}", edge.var, edge.factor, join(state.to_factor(e)));
    }
    for (e, edge) in g.edges().iter().enumerate() {
        let _ = writeln!(out, "f2v {} {} {}", edge.factor, edge.var, join(state.to_var(e)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;

    const G1: &str = "FGM 1\n# two binary variables\nvars 2\ncard 2 2\nphi 0 0 1\nphi 1 0 1\nfactor 2 0 1 0 0 0 1\n";

    #[test]
    fn parses_g1() {
        let g = parse_model(G1).unwrap();
        assert_eq!(g, g1());
        assert_eq!(parse_model(&write_model(&g)).unwrap(), g);
    }

    #[test]
    fn inf_token() {
        let g = parse_model("FGM 1\nvars 1\ncard 2\nphi 0 0 inf\n").unwrap();
        assert_eq!(g.unary(0), &[0.0, f64::INFINITY]);
        assert_eq!(parse_model(&write_model(&g)).unwrap(), g);
    }

    #[test]
    fn table_length_error_names_line() {
        let err = parse_model("FGM 1\nvars 2\ncard 2 2\nfactor 2 0 1 0 0 0\n").unwrap_err();
        assert!(matches!(err, FormatError::Graph { line: 4, .. }), "{err}");
        let err = parse_model("FGM 1\nvars 2\ncard 2 2\nfactor 2 0 7 0 0 0 0\n").unwrap_err();
        assert!(matches!(err, FormatError::Graph { line: 4, .. }));
        assert!(parse_model("FGM 2\n").is_err());
    }

    #[test]
    fn inline_params_block() {
        let text = format!("{}cfac 0 0.5\n", write_model(&g1()));
        let m = parse_model_file(&text).unwrap();
        assert_eq!(m.graph, g1());
        assert_eq!(m.params.unwrap().factors(), &[0.5]);
        assert_eq!(parse_model(&text).unwrap(), g1());
        assert!(parse_model_file(&write_model(&g1())).unwrap().params.is_none());
        assert!(parse_model_file(&format!("{}cvar 0 0\n", write_model(&g1()))).is_err());
    }

    #[test]
    fn params_file() {
        let g = g1();
        let c = parse_params_file("cfac 0 0.5\n", &g).unwrap();
        assert_eq!(c.factors(), &[0.5]);
        assert_eq!(c.vars(), &[1.0, 1.0]);
        assert!(parse_params_file("cvar 1 0\n", &g).is_err());
        assert!(parse_params_file("cvar 5 1\n", &g).is_err());
        assert_eq!(parse_params_file("", &g).unwrap(), SplitParams::ones(&g));
        assert_eq!(parse_params_file(&write_params(&c), &g).unwrap(), c);
    }

    #[test]
    fn trees_file() {
        let trees = parse_trees("tree 0.5 0 1\ntree 0.5 1 2\n").unwrap();
        assert_eq!(trees[1].factors, vec![1, 2]);
        assert!(parse_trees("").is_err());
    }

    #[test]
    fn state_round_trip() {
        let g = g2();
        let c = SplitParams::ones(&g);
        let mut s = crate::engine::init_messages(&g);
        for _ in 0..3 {
            s = crate::engine::sync_sweep(&g, &c, &s).unwrap();
        }
        let text = write_state(&g, &s);
        assert_eq!(parse_state(&text, &g).unwrap(), s);
        assert!(parse_state("MSG 1\nf2v 0 2 0 0\n", &g).is_err());
    }
}
