//! JSON description files for graphs with vertex conditions.
//!
//! ```json
//! {
//!   "vertices": [
//!     {"id": "c", "condition": {"type": "delta", "gamma": -2.0}}
//!   ],
//!   "edges": [
//!     {"id": "e1", "from": "c", "length": "inf"},
//!     {"id": "e2", "from": "c", "to": "c", "length": 1.5}
//!   ]
//! }
//! ```
//!
//! Condition types: `delta` and `delta_prime` (strength `gamma`),
//! `kirchhoff`, `dirichlet`, and `matrix` with real row-major matrices `A`
//! and `B` (arrays of rows) sized to the vertex degree; rows and columns
//! follow the vertex's trace order, i.e. edges sorted by id with the `from`
//! end before the `to` end. Omit `to` (or set it to `null`) together with
//! `"length": "inf"` for a half-line. Every matrix pair is checked for
//! self-adjointness at load time.

use crate::error::{Error, Result};
use crate::graph::{EdgeLength, EdgeSpec, MetricGraph};
use crate::vertex::{MatrixCondition, ProjectorCondition};
use nalgebra::DMatrix;
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSchema {
    vertices: Vec<VertexEntry>,
    edges: Vec<EdgeEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexEntry {
    id: String,
    condition: ConditionEntry,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum ConditionEntry {
    Delta { gamma: f64 },
    DeltaPrime { gamma: f64 },
    Kirchhoff,
    Dirichlet,
    Matrix {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeEntry {
    id: String,
    from: String,
    #[serde(default)]
    to: Option<String>,
    length: LengthEntry,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum LengthEntry {
    Number(f64),
    Keyword(String),
}

/// Condition family tag as written in the file, retained so callers can
/// recognize special graphs (for example stars with a single δ vertex, which
/// have closed-form references).
#[derive(Clone, Debug, PartialEq)]
pub enum ConditionKind {
    Delta(f64),
    DeltaPrime(f64),
    Kirchhoff,
    Dirichlet,
    Matrix,
}

/// A parsed description: the graph, one validated projector-form condition
/// per vertex (in vertex order), and the family tags from the file.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: MetricGraph,
    pub conditions: Vec<ProjectorCondition>,
    pub kinds: Vec<ConditionKind>,
}

impl LoadedGraph {
    /// Detects a single-vertex star of half-lines whose condition is a δ or
    /// δ' coupling; these graphs have closed-form ground states.
    pub fn as_star(&self) -> Option<(usize, f64, crate::spectral::StarKind)> {
        if self.graph.num_vertices() != 1 {
            return None;
        }
        if self.graph.edges().iter().any(|e| !e.length.is_infinite()) {
            return None;
        }
        let k = self.graph.num_edges();
        match self.kinds[0] {
            ConditionKind::Delta(g) => Some((k, g, crate::spectral::StarKind::Delta)),
            ConditionKind::DeltaPrime(g) => Some((k, g, crate::spectral::StarKind::DeltaPrime)),
            _ => None,
        }
    }
}

/// Parses a graph description from JSON text.
pub fn parse_graph(json: &str) -> Result<LoadedGraph> {
    let file: FileSchema =
        serde_json::from_str(json).map_err(|e| Error::Parse(format!("graph file: {e}")))?;

    let vertex_ids: Vec<String> = file.vertices.iter().map(|v| v.id.clone()).collect();
    let edges: Vec<EdgeSpec> = file
        .edges
        .into_iter()
        .map(|e| {
            let length = match &e.length {
                LengthEntry::Number(l) => EdgeLength::Finite(*l),
                LengthEntry::Keyword(s) if s == "inf" => EdgeLength::Infinite,
                LengthEntry::Keyword(s) => {
                    return Err(Error::Parse(format!(
                        "edge {}: length must be a number or \"inf\", got \"{s}\"",
                        e.id
                    )))
                }
            };
            Ok(EdgeSpec { id: e.id, from: e.from, to: e.to, length })
        })
        .collect::<Result<_>>()?;
    let graph = MetricGraph::build(&vertex_ids, &edges)?;

    let mut conditions = Vec::with_capacity(file.vertices.len());
    let mut kinds = Vec::with_capacity(file.vertices.len());
    for (v, entry) in file.vertices.iter().enumerate() {
        let d = graph.degree(v);
        if d == 0 {
            return Err(Error::Graph(format!("vertex {} has no incident edges", entry.id)));
        }
        let (cond, kind) = match &entry.condition {
            ConditionEntry::Delta { gamma } => {
                (MatrixCondition::delta(d, *gamma)?, ConditionKind::Delta(*gamma))
            }
            ConditionEntry::DeltaPrime { gamma } => {
                (MatrixCondition::delta_prime(d, *gamma)?, ConditionKind::DeltaPrime(*gamma))
            }
            ConditionEntry::Kirchhoff => (MatrixCondition::kirchhoff(d)?, ConditionKind::Kirchhoff),
            ConditionEntry::Dirichlet => (MatrixCondition::dirichlet(d)?, ConditionKind::Dirichlet),
            ConditionEntry::Matrix { a, b } => {
                let a = rows_to_matrix(&entry.id, "A", a, d)?;
                let b = rows_to_matrix(&entry.id, "B", b, d)?;
                (MatrixCondition::from_real(&a, &b)?, ConditionKind::Matrix)
            }
        };
        let proj = cond.to_projector_form().map_err(|e| {
            Error::Condition(format!("vertex {}: {e}", entry.id))
        })?;
        conditions.push(proj);
        kinds.push(kind);
    }

    Ok(LoadedGraph { graph, conditions, kinds })
}

/// Reads and parses a graph description file.
pub fn load_graph(path: &Path) -> Result<LoadedGraph> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_graph(&text)
}

fn rows_to_matrix(
    vertex: &str,
    name: &str,
    rows: &[Vec<f64>],
    d: usize,
) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Condition(format!(
            "vertex {vertex}: matrix {name} must be {d}x{d} to match the vertex degree"
        )));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::StarKind;

    fn star_json(k: usize, cond: &str) -> String {
        let edges: Vec<String> = (0..k)
            .map(|i| format!(r#"{{"id": "e{i}", "from": "c", "length": "inf"}}"#))
            .collect();
        format!(
            r#"{{"vertices": [{{"id": "c", "condition": {cond}}}], "edges": [{}]}}"#,
            edges.join(", ")
        )
    }

    #[test]
    fn parses_a_delta_star() {
        let g = parse_graph(&star_json(4, r#"{"type": "delta", "gamma": -2.0}"#)).unwrap();
        assert_eq!(g.graph.num_edges(), 4);
        assert_eq!(g.kinds[0], ConditionKind::Delta(-2.0));
        assert_eq!(g.as_star(), Some((4, -2.0, StarKind::Delta)));
    }

    #[test]
    fn parses_all_named_families() {
        for (cond, k) in [
            (r#"{"type": "delta_prime", "gamma": -2.0}"#, 4),
            (r#"{"type": "kirchhoff"}"#, 3),
            (r#"{"type": "dirichlet"}"#, 2),
        ] {
            let g = parse_graph(&star_json(k, cond)).unwrap();
            assert_eq!(g.conditions.len(), 1);
            assert_eq!(g.conditions[0].dim(), k);
        }
    }

    #[test]
    fn parses_matrix_conditions_and_checks_self_adjointness() {
        // Robin half-line: psi'(0) = psi(0).
        let ok = star_json(1, r#"{"type": "matrix", "A": [[1.0]], "B": [[-1.0]]}"#);
        let g = parse_graph(&ok).unwrap();
        assert_eq!(g.kinds[0], ConditionKind::Matrix);
        assert!(g.as_star().is_none());

        // Rank-deficient [A B] is not self-adjoint.
        let bad = star_json(
            2,
            r#"{"type": "matrix", "A": [[1.0, 0.0], [1.0, 0.0]], "B": [[0.0, 0.0], [0.0, 0.0]]}"#,
        );
        assert!(parse_graph(&bad).is_err());

        // Dimension mismatch against the vertex degree.
        let wrong = star_json(3, r#"{"type": "matrix", "A": [[1.0]], "B": [[1.0]]}"#);
        assert!(parse_graph(&wrong).is_err());
    }

    #[test]
    fn mixed_compact_and_infinite_edges() {
        let json = r#"{
            "vertices": [
                {"id": "a", "condition": {"type": "kirchhoff"}},
                {"id": "b", "condition": {"type": "delta", "gamma": -1.0}}
            ],
            "edges": [
                {"id": "seg", "from": "a", "to": "b", "length": 2.0},
                {"id": "ray1", "from": "a", "length": "inf"},
                {"id": "ray2", "from": "b", "to": null, "length": "inf"}
            ]
        }"#;
        let g = parse_graph(json).unwrap();
        assert_eq!(g.graph.num_vertices(), 2);
        assert_eq!(g.graph.degree(0), 2);
        assert!(g.as_star().is_none());
        assert!(g.graph.has_finite_edges());
    }

    #[test]
    fn rejects_malformed_input() {
        // Unknown field.
        assert!(parse_graph(
            r#"{"vertices": [], "edges": [], "extra": 1}"#
        )
        .is_err());
        // Unknown condition type.
        assert!(parse_graph(&star_json(2, r#"{"type": "anti_delta", "gamma": 1.0}"#)).is_err());
        // Missing gamma.
        assert!(parse_graph(&star_json(2, r#"{"type": "delta"}"#)).is_err());
        // Bad length keyword.
        let bad_len = r#"{
            "vertices": [{"id": "a", "condition": {"type": "dirichlet"}}],
            "edges": [{"id": "e", "from": "a", "length": "long"}]
        }"#;
        assert!(parse_graph(bad_len).is_err());
        // Unknown endpoint vertex.
        let bad_vertex = r#"{
            "vertices": [{"id": "a", "condition": {"type": "dirichlet"}}],
            "edges": [{"id": "e", "from": "zz", "length": "inf"}]
        }"#;
        assert!(parse_graph(bad_vertex).is_err());
        // Finite edge marked "inf" length with a `to` endpoint.
        let inf_with_to = r#"{
            "vertices": [{"id": "a", "condition": {"type": "kirchhoff"}}],
            "edges": [
                {"id": "e1", "from": "a", "to": "a", "length": "inf"},
                {"id": "e2", "from": "a", "length": "inf"}
            ]
        }"#;
        assert!(parse_graph(inf_with_to).is_err());
        // Plain IO failure surfaces as a parse error.
        assert!(load_graph(Path::new("/nonexistent/graph.json")).is_err());
    }

    #[test]
    fn star_detection_requires_all_infinite_edges() {
        let json = r#"{
            "vertices": [
                {"id": "a", "condition": {"type": "delta", "gamma": -1.0}},
                {"id": "b", "condition": {"type": "dirichlet"}}
            ],
            "edges": [
                {"id": "e1", "from": "a", "length": "inf"},
                {"id": "e2", "from": "a", "to": "b", "length": 1.0}
            ]
        }"#;
        let g = parse_graph(json).unwrap();
        assert!(g.as_star().is_none());
    }
}
