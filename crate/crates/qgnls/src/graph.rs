//! Metric graphs, meshes and piecewise-linear functions on them.
//!
//! A metric graph is a finite set of vertices joined by edges, each edge being
//! identified with an interval `[0, L_e]` (finite) or `[0, ∞)` (infinite, a
//! "half-line"). Infinite edges are attached to exactly one vertex and carry
//! coordinate 0 at that vertex. Functions on the graph are tuples of functions
//! on the edges; nothing is implied about their vertex values until a vertex
//! condition is imposed.
//!
//! For computation every infinite edge is truncated at a finite length and a
//! uniform mesh is laid on each (possibly truncated) edge; see [`Mesh`].
//! [`GraphFunction`] stores nodal values of the piecewise-linear interpolant on
//! that mesh and provides the trapezoid L^p norms and the exact H^1 seminorm of
//! the interpolant.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::Scalar;

/// Length of an edge: a positive finite number or a half-line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeLength {
    Finite(f64),
    Infinite,
}

impl EdgeLength {
    pub fn is_infinite(&self) -> bool {
        matches!(self, EdgeLength::Infinite)
    }
}

/// Edge description used to build a [`MetricGraph`].
///
/// `to` must be `None` exactly when the edge is infinite; the half-line is then
/// attached to `from` with coordinate 0 at that vertex.
#[derive(Clone, Debug)]
pub struct EdgeSpec {
    pub id: String,
    pub from: String,
    pub to: Option<String>,
    pub length: EdgeLength,
}

/// Which endpoint of an edge participates in an incidence entry.
///
/// `From` is the `x = 0` end, `To` the `x = L_e` end of a finite edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EndKind {
    From,
    To,
}

/// One entry of the incidence list of a vertex: an edge endpoint meeting it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeEnd {
    /// Index into [`MetricGraph::edges`].
    pub edge: usize,
    pub end: EndKind,
}

/// An edge of a built graph, endpoints resolved to vertex indices.
#[derive(Clone, Debug)]
pub struct Edge {
    pub id: String,
    pub from: usize,
    pub to: Option<usize>,
    pub length: EdgeLength,
}

/// A metric graph with named vertices and edges.
///
/// The incidence list `J_v` of each vertex is fixed at construction time and
/// ordered by (edge id, endpoint kind with `From` first); this order defines
/// the component order of trace vectors and hence of vertex-condition matrices.
#[derive(Clone, Debug)]
pub struct MetricGraph {
    vertex_ids: Vec<String>,
    edges: Vec<Edge>,
    incidence: Vec<Vec<EdgeEnd>>,
}

impl MetricGraph {
    /// Builds a graph from vertex names and edge descriptions.
    ///
    /// Fails if ids are duplicated, an endpoint names an unknown vertex, a
    /// finite edge has a non-positive length or a missing `to`, or an infinite
    /// edge has a `to`.
    pub fn build(vertices: &[String], edges: &[EdgeSpec]) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Graph("graph has no vertices".into()));
        }
        let mut index = std::collections::BTreeMap::new();
        for (i, id) in vertices.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Graph(format!("duplicate vertex id {id:?}")));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut built = Vec::with_capacity(edges.len());
        for e in edges {
            if !seen.insert(e.id.clone()) {
                return Err(Error::Graph(format!("duplicate edge id {:?}", e.id)));
            }
            let from = *index
                .get(&e.from)
                .ok_or_else(|| Error::Graph(format!("edge {:?}: unknown vertex {:?}", e.id, e.from)))?;
            let to = match (&e.to, e.length) {
                (Some(t), EdgeLength::Finite(l)) => {
                    if !(l.is_finite() && l > 0.0) {
                        return Err(Error::Graph(format!("edge {:?}: length must be positive, got {l}", e.id)));
                    }
                    Some(*index.get(t).ok_or_else(|| {
                        Error::Graph(format!("edge {:?}: unknown vertex {t:?}", e.id))
                    })?)
                }
                (None, EdgeLength::Infinite) => None,
                (Some(_), EdgeLength::Infinite) => {
                    return Err(Error::Graph(format!(
                        "edge {:?}: infinite edge must not have a second endpoint",
                        e.id
                    )))
                }
                (None, EdgeLength::Finite(_)) => {
                    return Err(Error::Graph(format!(
                        "edge {:?}: finite edge needs both endpoints",
                        e.id
                    )))
                }
            };
            built.push(Edge {
                id: e.id.clone(),
                from,
                to,
                length: e.length,
            });
        }

        let mut incidence = vec![Vec::new(); vertices.len()];
        for (k, e) in built.iter().enumerate() {
            incidence[e.from].push(EdgeEnd { edge: k, end: EndKind::From });
            if let Some(t) = e.to {
                incidence[t].push(EdgeEnd { edge: k, end: EndKind::To });
            }
        }
        for list in &mut incidence {
            list.sort_by(|a, b| {
                let ka = (&built[a.edge].id, a.end);
                let kb = (&built[b.edge].id, b.end);
                ka.cmp(&kb)
            });
        }

        Ok(MetricGraph {
            vertex_ids: vertices.to_vec(),
            edges: built,
            incidence,
        })
    }

    /// Star graph: `k` half-lines glued at a single vertex `"v0"`.
    ///
    /// Edge ids are `"e01", "e02", ...` so that lexicographic order matches
    /// numeric order for any `k`.
    pub fn star(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Graph("star graph needs at least one edge".into()));
        }
        let edges: Vec<EdgeSpec> = (1..=k)
            .map(|i| EdgeSpec {
                id: format!("e{i:02}"),
                from: "v0".into(),
                to: None,
                length: EdgeLength::Infinite,
            })
            .collect();
        Self::build(&["v0".into()], &edges)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_ids(&self) -> &[String] {
        &self.vertex_ids
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Incidence list `J_v` in trace order.
    pub fn incidence(&self, v: usize) -> &[EdgeEnd] {
        &self.incidence[v]
    }

    /// Degree of vertex `v` (self-loops count twice).
    pub fn degree(&self, v: usize) -> usize {
        self.incidence[v].len()
    }

    pub fn has_finite_edges(&self) -> bool {
        self.edges.iter().any(|e| !e.length.is_infinite())
    }

    pub fn has_infinite_edges(&self) -> bool {
        self.edges.iter().any(|e| e.length.is_infinite())
    }

    /// Uniform lower bound on half edge lengths used by trace inequalities:
    /// half the minimum of 1 and the shortest finite edge length, and ½ when
    /// every edge is infinite.
    pub fn min_half_length(&self) -> f64 {
        let mut m = 1.0_f64;
        for e in &self.edges {
            if let EdgeLength::Finite(l) = e.length {
                m = m.min(l);
            }
        }
        0.5 * m
    }
}

/// Mesh data of a single edge.
#[derive(Clone, Debug)]
pub struct EdgeMesh {
    /// Number of nodes (at least 2); nodes sit at `x_i = i h`.
    pub nodes: usize,
    /// Uniform spacing.
    pub h: f64,
    /// Coordinate length of the meshed interval (truncated length for
    /// infinite edges).
    pub len: f64,
    /// Truncation length; present exactly for infinite edges.
    pub truncation: Option<f64>,
}

/// A uniform mesh on every edge of a graph, infinite edges truncated.
#[derive(Clone, Debug)]
pub struct Mesh {
    edges: Vec<EdgeMesh>,
}

impl Mesh {
    /// Meshes every edge with target spacing `h`; infinite edges are truncated
    /// at length `truncation`. The actual spacing of an edge divides its length
    /// exactly and equals `len / round(len / h)`.
    pub fn uniform(graph: &MetricGraph, h: f64, truncation: f64) -> Result<Self> {
        let per: Vec<(f64, f64)> = graph
            .edges()
            .iter()
            .map(|e| match e.length {
                EdgeLength::Finite(l) => (h, l),
                EdgeLength::Infinite => (h, truncation),
            })
            .collect();
        let trunc: Vec<Option<f64>> = graph
            .edges()
            .iter()
            .map(|e| e.length.is_infinite().then_some(truncation))
            .collect();
        Self::from_edge_params(graph, &per, &trunc)
    }

    /// Meshes with per-edge spacing and per-edge truncation (the latter given
    /// for infinite edges only).
    pub fn from_edge_params(
        graph: &MetricGraph,
        spacing_and_len: &[(f64, f64)],
        truncation: &[Option<f64>],
    ) -> Result<Self> {
        if spacing_and_len.len() != graph.num_edges() || truncation.len() != graph.num_edges() {
            return Err(Error::Mesh("per-edge parameter count mismatch".into()));
        }
        let mut edges = Vec::with_capacity(graph.num_edges());
        for (k, e) in graph.edges().iter().enumerate() {
            let (h, len) = spacing_and_len[k];
            let t = truncation[k];
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::Mesh(format!("edge {:?}: spacing must be positive", e.id)));
            }
            if !(len.is_finite() && len > 0.0) {
                return Err(Error::Mesh(format!("edge {:?}: meshed length must be positive", e.id)));
            }
            match (e.length, t) {
                (EdgeLength::Infinite, Some(tr)) => {
                    if (tr - len).abs() > 1e-12 * len.max(1.0) {
                        return Err(Error::Mesh(format!(
                            "edge {:?}: truncation {tr} disagrees with meshed length {len}",
                            e.id
                        )));
                    }
                }
                (EdgeLength::Infinite, None) => {
                    return Err(Error::Mesh(format!(
                        "edge {:?}: infinite edge needs a truncation length",
                        e.id
                    )))
                }
                (EdgeLength::Finite(l), None) => {
                    if (l - len).abs() > 1e-12 * l.max(1.0) {
                        return Err(Error::Mesh(format!(
                            "edge {:?}: meshed length {len} disagrees with edge length {l}",
                            e.id
                        )));
                    }
                }
                (EdgeLength::Finite(_), Some(_)) => {
                    return Err(Error::Mesh(format!(
                        "edge {:?}: finite edge must not carry a truncation",
                        e.id
                    )))
                }
            }
            let intervals = ((len / h).round() as usize).max(1);
            edges.push(EdgeMesh {
                nodes: intervals + 1,
                h: len / intervals as f64,
                len,
                truncation: t,
            });
        }
        Ok(Mesh { edges })
    }

    pub fn edge(&self, k: usize) -> &EdgeMesh {
        &self.edges[k]
    }

    pub fn edges(&self) -> &[EdgeMesh] {
        &self.edges
    }

    /// Total number of mesh nodes over all edges (vertex copies not merged).
    pub fn total_nodes(&self) -> usize {
        self.edges.iter().map(|e| e.nodes).sum()
    }
}

/// A graph together with a mesh on it; the unit of sharing for functions and
/// discrete operators.
#[derive(Clone, Debug)]
pub struct Domain {
    pub graph: MetricGraph,
    pub mesh: Mesh,
}

impl Domain {
    pub fn new(graph: MetricGraph, mesh: Mesh) -> Result<Arc<Self>> {
        if mesh.edges().len() != graph.num_edges() {
            return Err(Error::Mesh("mesh does not match graph edge count".into()));
        }
        Ok(Arc::new(Domain { graph, mesh }))
    }

    /// Star graph domain with uniform mesh, the workhorse of tests and examples.
    pub fn star(k: usize, h: f64, truncation: f64) -> Result<Arc<Self>> {
        let graph = MetricGraph::star(k)?;
        let mesh = Mesh::uniform(&graph, h, truncation)?;
        Self::new(graph, mesh)
    }
}

/// Nodal values of a piecewise-linear function on a meshed graph.
///
/// Values are stored per edge, one entry per mesh node. The scalar type is
/// `f64` for profiles and `Complex64` for wave functions. All norms refer to
/// the piecewise-linear interpolant: the H^1 seminorm is exact for it, the
/// L^p norms use the trapezoid rule on `|f|^p`.
#[derive(Clone, Debug)]
pub struct GraphFunction<T: Scalar = f64> {
    domain: Arc<Domain>,
    values: Vec<Vec<T>>,
}

/// Complex-valued graph function, the state type of the time integrator.
pub type ComplexGraphFunction = GraphFunction<Complex64>;

impl<T: Scalar> GraphFunction<T> {
    pub fn zeros(domain: &Arc<Domain>) -> Self {
        let values = domain.mesh.edges().iter().map(|e| vec![T::ZERO; e.nodes]).collect();
        GraphFunction { domain: domain.clone(), values }
    }

    /// Samples `f(edge_index, x)` at every mesh node.
    pub fn from_fn(domain: &Arc<Domain>, mut f: impl FnMut(usize, f64) -> T) -> Self {
        let values = domain
            .mesh
            .edges()
            .iter()
            .enumerate()
            .map(|(k, e)| (0..e.nodes).map(|i| f(k, i as f64 * e.h)).collect())
            .collect();
        GraphFunction { domain: domain.clone(), values }
    }

    /// Wraps per-edge nodal values after checking they match the mesh.
    pub fn from_values(domain: &Arc<Domain>, values: Vec<Vec<T>>) -> Result<Self> {
        if values.len() != domain.mesh.edges().len()
            || values
                .iter()
                .zip(domain.mesh.edges())
                .any(|(v, e)| v.len() != e.nodes)
        {
            return Err(Error::Mesh("nodal value layout does not match mesh".into()));
        }
        Ok(GraphFunction { domain: domain.clone(), values })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Vec<T>] {
        &mut self.values
    }

    fn same_domain(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.domain, &other.domain) {
            return Ok(());
        }
        let a = self.domain.mesh.edges();
        let b = other.domain.mesh.edges();
        let compatible = a.len() == b.len()
            && a.iter()
                .zip(b)
                .all(|(x, y)| x.nodes == y.nodes && (x.h - y.h).abs() <= 1e-14 * x.h.max(y.h));
        if compatible {
            Ok(())
        } else {
            Err(Error::Mesh("functions live on different meshes".into()))
        }
    }

    /// Trace vector Ψ(v): values at the endpoints meeting `v`, in the fixed
    /// incidence order of the vertex.
    pub fn trace(&self, v: usize) -> Vec<T> {
        self.domain
            .graph
            .incidence(v)
            .iter()
            .map(|ee| match ee.end {
                EndKind::From => self.values[ee.edge][0],
                EndKind::To => *self.values[ee.edge].last().unwrap(),
            })
            .collect()
    }

    /// Inward derivative trace Ψ'(v) of the interpolant: one-sided difference
    /// quotients pointing into each edge. Used for diagnostics and condition
    /// residuals, never for assembly.
    pub fn derivative_trace(&self, v: usize) -> Vec<T> {
        self.domain
            .graph
            .incidence(v)
            .iter()
            .map(|ee| {
                let vals = &self.values[ee.edge];
                let h = self.domain.mesh.edge(ee.edge).h;
                match ee.end {
                    EndKind::From => (vals[1] - vals[0]).scale(1.0 / h),
                    EndKind::To => {
                        let n = vals.len();
                        (vals[n - 2] - vals[n - 1]).scale(1.0 / h)
                    }
                }
            })
            .collect()
    }

    /// Trapezoid rule for `Σ_e ∫ g(f_e(x)) dx` with `g` applied nodewise.
    fn quad(&self, g: impl Fn(T) -> f64) -> f64 {
        let mut total = 0.0;
        for (k, vals) in self.values.iter().enumerate() {
            let h = self.domain.mesh.edge(k).h;
            let n = vals.len();
            let mut s = 0.5 * (g(vals[0]) + g(vals[n - 1]));
            for &v in &vals[1..n - 1] {
                s += g(v);
            }
            total += s * h;
        }
        total
    }

    /// L^p norm for `1 ≤ p < ∞`, or the sup norm for `p = ∞`.
    pub fn norm_lp(&self, p: f64) -> Result<f64> {
        if p.is_infinite() && p > 0.0 {
            return Ok(self
                .values
                .iter()
                .flatten()
                .map(|v| v.abs())
                .fold(0.0, f64::max));
        }
        if !(p >= 1.0) {
            return Err(Error::Validation(format!("L^p norm needs p >= 1, got {p}")));
        }
        Ok(self.quad(|v| v.abs().powf(p)).powf(1.0 / p))
    }

    pub fn norm_l2(&self) -> f64 {
        self.quad(|v| v.abs2()).sqrt()
    }

    /// Exact H^1 seminorm of the piecewise-linear interpolant.
    pub fn seminorm_h1(&self) -> f64 {
        let mut total = 0.0;
        for (k, vals) in self.values.iter().enumerate() {
            let h = self.domain.mesh.edge(k).h;
            for w in vals.windows(2) {
                total += (w[1] - w[0]).abs2() / h;
            }
        }
        total.sqrt()
    }

    pub fn norm_h1(&self) -> f64 {
        let l2 = self.norm_l2();
        let semi = self.seminorm_h1();
        (l2 * l2 + semi * semi).sqrt()
    }

    /// H^1 inner product of the interpolants (trapezoid rule in the L² part),
    /// conjugate-linear in `self`.
    pub fn h1_inner(&self, other: &Self) -> Result<T> {
        self.same_domain(other)?;
        let mut acc = T::ZERO;
        for (k, (a, b)) in self.values.iter().zip(&other.values).enumerate() {
            let h = self.domain.mesh.edge(k).h;
            let n = a.len();
            let mut s = (a[0].conj() * b[0] + a[n - 1].conj() * b[n - 1]).scale(0.5);
            for i in 1..n - 1 {
                s += a[i].conj() * b[i];
            }
            acc += s.scale(h);
            for i in 0..n - 1 {
                acc += (a[i + 1] - a[i]).conj() * (b[i + 1] - b[i]).scale(1.0 / h);
            }
        }
        Ok(acc)
    }

    /// Squared H^1 norm via the same quadratures as [`Self::h1_inner`].
    pub fn h1_norm_sq(&self) -> f64 {
        let l2 = self.norm_l2();
        let semi = self.seminorm_h1();
        l2 * l2 + semi * semi
    }

    pub fn scale(&mut self, s: f64) {
        for vals in &mut self.values {
            for v in vals {
                *v = v.scale(s);
            }
        }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: T, other: &Self) -> Result<()> {
        self.same_domain(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += alpha * *y;
            }
        }
        Ok(())
    }

    /// Linear interpolation of `self` onto another domain of the same graph
    /// shape; target nodes beyond the source interval get 0.
    pub fn resample_onto(&self, domain: &Arc<Domain>) -> Result<GraphFunction<T>> {
        if domain.mesh.edges().len() != self.values.len() {
            return Err(Error::Mesh("resample target has different edge count".into()));
        }
        let mut out = GraphFunction::zeros(domain);
        for (k, vals) in self.values.iter().enumerate() {
            let src = self.domain.mesh.edge(k);
            let dst = domain.mesh.edge(k);
            let n_src = vals.len();
            for i in 0..dst.nodes {
                let x = i as f64 * dst.h;
                if x > src.len + 1e-12 * src.len {
                    continue;
                }
                let t = (x / src.h).min((n_src - 1) as f64);
                let j = (t.floor() as usize).min(n_src - 2);
                let frac = t - j as f64;
                out.values[k][i] = vals[j].scale(1.0 - frac) + vals[j + 1].scale(frac);
            }
        }
        Ok(out)
    }
}

impl GraphFunction<f64> {
    /// Lifts a real profile to a complex state with zero imaginary part.
    pub fn to_complex(&self) -> ComplexGraphFunction {
        GraphFunction {
            domain: self.domain.clone(),
            values: self
                .values
                .iter()
                .map(|vals| vals.iter().map(|&v| Complex64::new(v, 0.0)).collect())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_line(h: f64, t: f64) -> Arc<Domain> {
        Domain::star(1, h, t).unwrap()
    }

    #[test]
    fn build_rejects_bad_edges() {
        let v = vec!["a".to_string(), "b".to_string()];
        let bad_len = EdgeSpec {
            id: "e".into(),
            from: "a".into(),
            to: Some("b".into()),
            length: EdgeLength::Finite(-1.0),
        };
        assert!(MetricGraph::build(&v, &[bad_len]).is_err());
        let dangling = EdgeSpec {
            id: "e".into(),
            from: "a".into(),
            to: Some("c".into()),
            length: EdgeLength::Finite(1.0),
        };
        assert!(MetricGraph::build(&v, &[dangling]).is_err());
        let inf_two_ends = EdgeSpec {
            id: "e".into(),
            from: "a".into(),
            to: Some("b".into()),
            length: EdgeLength::Infinite,
        };
        assert!(MetricGraph::build(&v, &[inf_two_ends]).is_err());
    }

    #[test]
    fn incidence_is_sorted_by_edge_id_then_end() {
        // Tadpole: a loop at "a" plus a half-line, with ids chosen so that the
        // sorted order differs from insertion order.
        let v = vec!["a".to_string()];
        let edges = vec![
            EdgeSpec { id: "z".into(), from: "a".into(), to: None, length: EdgeLength::Infinite },
            EdgeSpec {
                id: "loop".into(),
                from: "a".into(),
                to: Some("a".into()),
                length: EdgeLength::Finite(2.0),
            },
        ];
        let g = MetricGraph::build(&v, &edges).unwrap();
        assert_eq!(g.degree(0), 3);
        let j: Vec<(String, EndKind)> = g
            .incidence(0)
            .iter()
            .map(|ee| (g.edges()[ee.edge].id.clone(), ee.end))
            .collect();
        assert_eq!(
            j,
            vec![
                ("loop".to_string(), EndKind::From),
                ("loop".to_string(), EndKind::To),
                ("z".to_string(), EndKind::From)
            ]
        );
    }

    #[test]
    fn min_half_length_rules() {
        let star = MetricGraph::star(3).unwrap();
        assert_eq!(star.min_half_length(), 0.5);

        let v = vec!["a".to_string(), "b".to_string()];
        let edges = vec![
            EdgeSpec {
                id: "f".into(),
                from: "a".into(),
                to: Some("b".into()),
                length: EdgeLength::Finite(0.4),
            },
            EdgeSpec { id: "g".into(), from: "b".into(), to: None, length: EdgeLength::Infinite },
        ];
        let g = MetricGraph::build(&v, &edges).unwrap();
        assert!((g.min_half_length() - 0.2).abs() < 1e-15);

        let edges_long = vec![EdgeSpec {
            id: "f".into(),
            from: "a".into(),
            to: Some("b".into()),
            length: EdgeLength::Finite(3.0),
        }];
        let g = MetricGraph::build(&v, &edges_long).unwrap();
        assert_eq!(g.min_half_length(), 0.5);
    }

    #[test]
    fn mesh_spacing_divides_length() {
        let g = MetricGraph::star(2).unwrap();
        let mesh = Mesh::uniform(&g, 0.03, 1.0).unwrap();
        for em in mesh.edges() {
            assert!((em.h * (em.nodes - 1) as f64 - em.len).abs() < 1e-12);
            assert_eq!(em.truncation, Some(1.0));
        }
    }

    #[test]
    fn mesh_invariants_enforced() {
        let g = MetricGraph::star(1).unwrap();
        // Missing truncation on an infinite edge.
        assert!(Mesh::from_edge_params(&g, &[(0.01, 40.0)], &[None]).is_err());

        let v = vec!["a".to_string(), "b".to_string()];
        let e = vec![EdgeSpec {
            id: "f".into(),
            from: "a".into(),
            to: Some("b".into()),
            length: EdgeLength::Finite(1.0),
        }];
        let g = MetricGraph::build(&v, &e).unwrap();
        // Truncation on a finite edge.
        assert!(Mesh::from_edge_params(&g, &[(0.01, 1.0)], &[Some(2.0)]).is_err());
    }

    #[test]
    fn exp_decay_l2_norm_on_half_line() {
        // ∫_0^∞ e^{-2x} dx = 1/2.
        let d = half_line(0.01, 40.0);
        let f = GraphFunction::from_fn(&d, |_, x| (-x).exp());
        assert!((f.norm_lp(2.0).unwrap() - 0.5_f64.sqrt()).abs() < 1e-4);
        assert!((f.norm_l2() - 0.5_f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn exp_decay_h1_seminorm_on_half_line() {
        // |f'|² integrates to 1/2 as well.
        let d = half_line(0.01, 40.0);
        let f = GraphFunction::from_fn(&d, |_, x| (-x).exp());
        let s = f.seminorm_h1();
        assert!((s * s - 0.5).abs() < 1e-3);
    }

    #[test]
    fn piecewise_linear_h1_seminorm_is_exact() {
        let v = vec!["a".to_string(), "b".to_string()];
        let e = vec![EdgeSpec {
            id: "f".into(),
            from: "a".into(),
            to: Some("b".into()),
            length: EdgeLength::Finite(1.0),
        }];
        let g = MetricGraph::build(&v, &e).unwrap();
        let mesh = Mesh::uniform(&g, 0.125, 1.0).unwrap();
        let d = Domain::new(g, mesh).unwrap();
        // f(x) = 3x - 1 is in the P1 space: seminorm must be exact.
        let f = GraphFunction::from_fn(&d, |_, x| 3.0 * x - 1.0);
        assert!((f.seminorm_h1() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn sup_norm_and_invalid_p() {
        let d = half_line(0.05, 10.0);
        let f = GraphFunction::from_fn(&d, |_, x| -(1.0 + x) * (-x).exp());
        assert!((f.norm_lp(f64::INFINITY).unwrap() - 1.0).abs() < 1e-12);
        assert!(f.norm_lp(0.5).is_err());
    }

    #[test]
    fn norms_are_absolutely_homogeneous() {
        let d = half_line(0.02, 20.0);
        let f = GraphFunction::from_fn(&d, |_, x| (1.0 + x).recip());
        let mut g = f.clone();
        g.scale(-2.5);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            let a = g.norm_lp(p).unwrap();
            let b = 2.5 * f.norm_lp(p).unwrap();
            assert!((a - b).abs() <= 1e-14 * b.max(1.0), "p = {p}");
        }
        assert!((g.norm_h1() - 2.5 * f.norm_h1()).abs() < 1e-13 * f.norm_h1());
    }

    #[test]
    fn trace_consistent_under_edge_relabeling() {
        // Same geometry, edges listed in different file order: traces agree
        // because incidence order is by id, not insertion.
        let v = vec!["a".to_string()];
        let mk = |order: &[&str]| {
            let edges: Vec<EdgeSpec> = order
                .iter()
                .map(|id| EdgeSpec {
                    id: id.to_string(),
                    from: "a".into(),
                    to: None,
                    length: EdgeLength::Infinite,
                })
                .collect();
            let g = MetricGraph::build(&v, &edges).unwrap();
            let mesh = Mesh::uniform(&g, 0.1, 5.0).unwrap();
            Domain::new(g, mesh).unwrap()
        };
        let d1 = mk(&["p", "q", "r"]);
        let d2 = mk(&["r", "p", "q"]);
        let val = |id: &str, x: f64| match id {
            "p" => 1.0 + x,
            "q" => 2.0 - x,
            _ => 7.0 * (-x).exp(),
        };
        let f1 = GraphFunction::from_fn(&d1, |k, x| val(&d1.graph.edges()[k].id, x));
        let f2 = GraphFunction::from_fn(&d2, |k, x| val(&d2.graph.edges()[k].id, x));
        assert_eq!(f1.trace(0), f2.trace(0));
        let dt1 = f1.derivative_trace(0);
        let dt2 = f2.derivative_trace(0);
        for (a, b) in dt1.iter().zip(&dt2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_error_shrinks_at_second_order() {
        // Halving h must cut the trapezoid error by at least 3.5.
        let exact = 0.5_f64.sqrt();
        let err = |h: f64| {
            let d = half_line(h, 40.0);
            let f = GraphFunction::from_fn(&d, |_, x| (-x).exp());
            (f.norm_l2() - exact).abs()
        };
        let e1 = err(0.02);
        let e2 = err(0.01);
        assert!(e1 / e2 >= 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn resample_interpolates_and_zero_fills() {
        let coarse = half_line(0.5, 10.0);
        let fine = half_line(0.25, 20.0);
        let f = GraphFunction::from_fn(&coarse, |_, x| 2.0 * x);
        let g = f.resample_onto(&fine).unwrap();
        // Linear data is reproduced exactly inside the old interval.
        assert!((g.values()[0][8] - 2.0 * 8.0 * 0.25).abs() < 1e-13);
        // Beyond the old truncation the resampled function vanishes.
        assert_eq!(*g.values()[0].last().unwrap(), 0.0);
    }

    #[test]
    fn complex_h1_inner_matches_norm() {
        let d = half_line(0.05, 10.0);
        let f = GraphFunction::from_fn(&d, |_, x| (-0.3 * x).exp() * (2.0 * x).cos());
        let z = f.to_complex();
        let ip = z.h1_inner(&z).unwrap();
        assert!(ip.im.abs() < 1e-14);
        assert!((ip.re - f.h1_norm_sq()).abs() < 1e-12 * f.h1_norm_sq());
    }
}
