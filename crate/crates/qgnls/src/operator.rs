//! P1 finite-element discretization of the quadratic form
//!
//!   Q(ψ) = Σ_e ∫ |ψ'|² dx + Σ_v ⟨Λ_v P_R Ψ(v), P_R Ψ(v)⟩
//!
//! on the form domain `{ P_D Ψ(v) = 0 for all v }`, together with the discrete
//! energy, mass and action functionals of the defocusing NLS and their exact
//! gradients.
//!
//! Nodal unknowns live on every mesh node ("full space"); the vertex
//! constraints and the homogeneous Dirichlet condition at truncation ends are
//! eliminated through an orthonormal basis `C` of the constrained subspace
//! ("reduced space"): identity columns for interior nodes and per-vertex
//! orthonormal bases of `ker P_D` coupling the endpoint copies. All solvers
//! work on reduced vectors; `ψ = C y`.
//!
//! Reduced unknowns are ordered so that the envelope factorization stays
//! linear-time: edge interiors first (infinite edges numbered from the far end
//! towards the vertex, so each vertex row has a short envelope overlap), vertex
//! blocks last.
//!
//! The nonlinear term uses the lumped (trapezoid) quadrature
//! `Σ_i w_i |ψ_i|^{p+1}`, while the quadratic terms use exact element
//! integrals (consistent mass). With this split the discrete action is a
//! smooth function of the nodal values whose gradient is assembled exactly,
//! so discrete minimizers satisfy the discrete stationarity identities to
//! round-off rather than to discretization order.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{Domain, EndKind, GraphFunction};
use crate::linalg::{Csr, Scalar, Skyline};
use crate::vertex::ProjectorCondition;

/// Role of a full-space mesh node in the constraint elimination.
#[derive(Clone, Copy, Debug, PartialEq)]
enum NodeRole {
    /// Free interior node with its own reduced unknown.
    Interior(usize),
    /// Endpoint copy owned by vertex block `v`, slot `s` in incidence order.
    Vertex { v: usize, slot: usize },
    /// Truncation end of an infinite edge: homogeneous Dirichlet, eliminated.
    Truncated,
}

/// Node indexing and constraint basis shared by all operator methods.
#[derive(Clone, Debug)]
struct DofMap {
    /// Offset of each edge's node block in the full space.
    node_off: Vec<usize>,
    n_full: usize,
    n_red: usize,
    role: Vec<NodeRole>,
    /// Per vertex: (first reduced column, orthonormal basis Y of ker P_D,
    /// full-space node index per incidence slot).
    vertex_blocks: Vec<(usize, nalgebra::DMatrix<f64>, Vec<usize>)>,
}

impl DofMap {
    fn build(domain: &Domain, conds: &[ProjectorCondition]) -> Result<Self> {
        let graph = &domain.graph;
        let mesh = &domain.mesh;
        let ne = graph.num_edges();
        let mut node_off = vec![0usize; ne + 1];
        for k in 0..ne {
            node_off[k + 1] = node_off[k] + mesh.edge(k).nodes;
        }
        let n_full = node_off[ne];

        let mut role = vec![NodeRole::Interior(usize::MAX); n_full];
        for (k, e) in graph.edges().iter().enumerate() {
            if e.length.is_infinite() {
                role[node_off[k] + mesh.edge(k).nodes - 1] = NodeRole::Truncated;
            }
        }
        let mut vertex_nodes: Vec<Vec<usize>> = Vec::with_capacity(graph.num_vertices());
        for v in 0..graph.num_vertices() {
            let mut nodes = Vec::new();
            for (slot, ee) in graph.incidence(v).iter().enumerate() {
                let node = match ee.end {
                    EndKind::From => node_off[ee.edge],
                    EndKind::To => node_off[ee.edge] + mesh.edge(ee.edge).nodes - 1,
                };
                if role[node] != NodeRole::Interior(usize::MAX) {
                    return Err(Error::Mesh(
                        "edge too short: endpoint nodes collide across constraints".into(),
                    ));
                }
                role[node] = NodeRole::Vertex { v, slot };
                nodes.push(node);
            }
            vertex_nodes.push(nodes);
        }

        // Interior numbering: per edge, infinite edges reversed (far to near).
        let mut n_red = 0usize;
        for (k, e) in graph.edges().iter().enumerate() {
            let nodes = mesh.edge(k).nodes;
            let ids: Vec<usize> = (0..nodes).map(|i| node_off[k] + i).collect();
            let order: Vec<usize> = if e.length.is_infinite() {
                ids.iter().rev().copied().collect()
            } else {
                ids
            };
            for node in order {
                if role[node] == NodeRole::Interior(usize::MAX) {
                    role[node] = NodeRole::Interior(n_red);
                    n_red += 1;
                }
            }
        }

        let mut vertex_blocks = Vec::with_capacity(graph.num_vertices());
        for (v, cond) in conds.iter().enumerate() {
            if cond.dim() != graph.degree(v) {
                return Err(Error::Condition(format!(
                    "vertex {:?} has degree {} but its condition has size {}",
                    graph.vertex_ids()[v],
                    graph.degree(v),
                    cond.dim()
                )));
            }
            let (y, _) = cond.real_parts()?;
            let col0 = n_red;
            n_red += y.ncols();
            vertex_blocks.push((col0, y, vertex_nodes[v].clone()));
        }

        Ok(DofMap { node_off, n_full, n_red, role, vertex_blocks })
    }

    /// Expands a reduced coefficient of full node `i` into (reduced index,
    /// weight) pairs; empty for truncated ends.
    fn columns_of(&self, node: usize) -> ColumnsOf<'_> {
        ColumnsOf { map: self, node, next: 0 }
    }
}

/// Iterator over the reduced columns a full node couples to.
struct ColumnsOf<'a> {
    map: &'a DofMap,
    node: usize,
    next: usize,
}

impl Iterator for ColumnsOf<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        match self.map.role[self.node] {
            NodeRole::Interior(r) => {
                if self.next == 0 {
                    self.next = 1;
                    Some((r, 1.0))
                } else {
                    None
                }
            }
            NodeRole::Truncated => None,
            NodeRole::Vertex { v, slot } => {
                let (col0, y, _) = &self.map.vertex_blocks[v];
                if self.next < y.ncols() {
                    let c = self.next;
                    self.next += 1;
                    Some((col0 + c, y[(slot, c)]))
                } else {
                    None
                }
            }
        }
    }
}

/// Discretized NLS problem on a fixed domain with fixed vertex conditions.
///
/// Holds both the full-space matrices (stiffness, consistent mass, vertex
/// term, lumped weights) and their reduced counterparts. The nonlinearity
/// exponent and the frequency are passed per call, so one operator serves a
/// whole frequency sweep.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    domain: Arc<Domain>,
    conds: Vec<ProjectorCondition>,
    stiff: Csr,
    mass_c: Csr,
    vterm: Csr,
    weights: Vec<f64>,
    dof: DofMap,
    s_red: Csr,
    a_red: Csr,
    m_red: Csr,
}

impl DiscreteOperator {
    /// Assembles the discrete problem; `conds` are the projector-form vertex
    /// conditions in vertex order.
    pub fn assemble(domain: &Arc<Domain>, conds: &[ProjectorCondition]) -> Result<Self> {
        if conds.len() != domain.graph.num_vertices() {
            return Err(Error::Condition(format!(
                "graph has {} vertices but {} conditions were given",
                domain.graph.num_vertices(),
                conds.len()
            )));
        }
        let dof = DofMap::build(domain, conds)?;
        let n_full = dof.n_full;

        let mut t_stiff = Vec::new();
        let mut t_mass = Vec::new();
        let mut weights = vec![0.0; n_full];
        for k in 0..domain.graph.num_edges() {
            let em = domain.mesh.edge(k);
            let h = em.h;
            let off = dof.node_off[k];
            for i in 0..em.nodes - 1 {
                let (a, b) = (off + i, off + i + 1);
                t_stiff.push((a, a, 1.0 / h));
                t_stiff.push((b, b, 1.0 / h));
                t_stiff.push((a, b, -1.0 / h));
                t_stiff.push((b, a, -1.0 / h));
                t_mass.push((a, a, h / 3.0));
                t_mass.push((b, b, h / 3.0));
                t_mass.push((a, b, h / 6.0));
                t_mass.push((b, a, h / 6.0));
                weights[a] += 0.5 * h;
                weights[b] += 0.5 * h;
            }
        }
        let mut t_vert = Vec::new();
        for (v, cond) in conds.iter().enumerate() {
            let (_, lam) = cond.real_parts()?;
            let nodes = &dof.vertex_blocks[v].2;
            for s in 0..nodes.len() {
                for t in 0..nodes.len() {
                    let x = lam[(s, t)];
                    if x != 0.0 {
                        t_vert.push((nodes[s], nodes[t], x));
                    }
                }
            }
        }
        let stiff = Csr::from_triplets(n_full, &mut t_stiff)?;
        let mass_c = Csr::from_triplets(n_full, &mut t_mass)?;
        let vterm = Csr::from_triplets(n_full, &mut t_vert)?;

        let reduce = |full: &Csr, extra: Option<&Csr>| -> Result<Csr> {
            let mut trip: Vec<(usize, usize, f64)> = Vec::new();
            let mut push = |m: &Csr| {
                for i in 0..n_full {
                    let (cols, vals) = m.row(i);
                    for (&j, &a) in cols.iter().zip(vals) {
                        for (ri, ci) in dof.columns_of(i) {
                            for (rj, cj) in dof.columns_of(j) {
                                trip.push((ri, rj, ci * cj * a));
                            }
                        }
                    }
                }
            };
            push(full);
            if let Some(m) = extra {
                push(m);
            }
            Csr::from_triplets(dof.n_red, &mut trip)
        };
        let s_red = reduce(&stiff, None)?;
        let a_red = reduce(&stiff, Some(&vterm))?;
        let m_red = reduce(&mass_c, None)?;

        Ok(DiscreteOperator {
            domain: domain.clone(),
            conds: conds.to_vec(),
            stiff,
            mass_c,
            vterm,
            weights,
            dof,
            s_red,
            a_red,
            m_red,
        })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn conditions(&self) -> &[ProjectorCondition] {
        &self.conds
    }

    /// Dimension of the constrained (reduced) space.
    pub fn n_reduced(&self) -> usize {
        self.dof.n_red
    }

    /// Total number of mesh nodes (endpoint copies unmerged).
    pub fn n_full(&self) -> usize {
        self.dof.n_full
    }

    /// Reduced matrix of the full quadratic form, `Cᵀ (S + V) C`.
    pub fn quadratic_matrix(&self) -> &Csr {
        &self.a_red
    }

    /// Reduced stiffness alone, `Cᵀ S C` (H¹ seminorm part).
    pub fn stiffness_matrix(&self) -> &Csr {
        &self.s_red
    }

    /// Reduced consistent mass, `Cᵀ M C`.
    pub fn mass_matrix(&self) -> &Csr {
        &self.m_red
    }

    /// Full-space stiffness matrix (for export and diagnostics).
    pub fn full_stiffness(&self) -> &Csr {
        &self.stiff
    }

    /// Full-space consistent mass matrix.
    pub fn full_mass(&self) -> &Csr {
        &self.mass_c
    }

    /// Full-space vertex-term matrix (Λ blocks at endpoint copies).
    pub fn full_vertex_term(&self) -> &Csr {
        &self.vterm
    }

    /// Trapezoid weights per full node (lumped mass diagonal).
    pub fn lumped_weights(&self) -> &[f64] {
        &self.weights
    }

    /// `ψ = C y`: scatter reduced coefficients to full nodal values.
    pub fn expand<T: Scalar>(&self, y: &[T], full: &mut [T]) {
        debug_assert_eq!(y.len(), self.dof.n_red);
        debug_assert_eq!(full.len(), self.dof.n_full);
        for (node, f) in full.iter_mut().enumerate() {
            let mut s = T::ZERO;
            for (r, c) in self.dof.columns_of(node) {
                s += y[r].scale(c);
            }
            *f = s;
        }
    }

    /// `Cᵀ r`: gather a full-space residual into reduced coordinates.
    pub fn restrict<T: Scalar>(&self, full: &[T], y: &mut [T]) {
        debug_assert_eq!(full.len(), self.dof.n_full);
        debug_assert_eq!(y.len(), self.dof.n_red);
        for c in y.iter_mut() {
            *c = T::ZERO;
        }
        for node in 0..self.dof.n_full {
            let f = full[node];
            for (r, c) in self.dof.columns_of(node) {
                y[r] += f.scale(c);
            }
        }
    }

    /// Reduced coordinates of a graph function (orthogonal projection onto the
    /// constrained subspace; exact when the function satisfies the vertex and
    /// truncation constraints).
    pub fn to_reduced<T: Scalar>(&self, f: &GraphFunction<T>) -> Vec<T> {
        let mut full = Vec::with_capacity(self.dof.n_full);
        for vals in f.values() {
            full.extend_from_slice(vals);
        }
        let mut y = vec![T::ZERO; self.dof.n_red];
        self.restrict(&full, &mut y);
        y
    }

    /// Graph function with nodal values `C y`.
    pub fn from_reduced<T: Scalar>(&self, y: &[T]) -> GraphFunction<T> {
        let mut full = vec![T::ZERO; self.dof.n_full];
        self.expand(y, &mut full);
        let mut values = Vec::with_capacity(self.domain.mesh.edges().len());
        for k in 0..self.domain.graph.num_edges() {
            let off = self.dof.node_off[k];
            let n = self.domain.mesh.edge(k).nodes;
            values.push(full[off..off + n].to_vec());
        }
        GraphFunction::from_values(&self.domain, values).expect("layout matches by construction")
    }

    fn full_values<T: Scalar>(&self, f: &GraphFunction<T>) -> Vec<T> {
        let mut full = Vec::with_capacity(self.dof.n_full);
        for vals in f.values() {
            full.extend_from_slice(vals);
        }
        full
    }

    /// Quadratic form `Q(ψ)`, validating the Dirichlet trace constraints.
    pub fn q_form(&self, f: &GraphFunction) -> Result<f64> {
        let full = self.full_values(f);
        let mut q = self.stiff.bilinear(&full, &full);
        for (v, cond) in self.conds.iter().enumerate() {
            let trace: Vec<Complex64> =
                f.trace(v).iter().map(|&x| Complex64::new(x, 0.0)).collect();
            q += cond.quadratic_term(&trace)?;
        }
        Ok(q)
    }

    /// Discrete mass `M(ψ) = ½ ψᵀ M ψ` (consistent quadrature).
    pub fn mass(&self, f: &GraphFunction) -> f64 {
        let full = self.full_values(f);
        0.5 * self.mass_c.bilinear(&full, &full)
    }

    /// Lumped integral `Σ_i w_i |ψ_i|^q`.
    pub fn lumped_power<T: Scalar>(&self, f: &GraphFunction<T>, q: f64) -> f64 {
        let full = self.full_values(f);
        full.iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * x.abs().powf(q))
            .sum()
    }

    /// Discrete energy `E(ψ) = ½ Q(ψ) + 1/(p+1) Σ w |ψ|^{p+1}`.
    pub fn energy(&self, f: &GraphFunction, p: f64) -> Result<f64> {
        Ok(0.5 * self.q_form(f)? + self.lumped_power(f, p + 1.0) / (p + 1.0))
    }

    /// Discrete action `S_ω(ψ) = E(ψ) + ω M(ψ)`.
    pub fn action(&self, f: &GraphFunction, p: f64, omega: f64) -> Result<f64> {
        Ok(self.energy(f, p)? + omega * self.mass(f))
    }

    /// Exact gradient of the discrete action, projected onto the constrained
    /// subspace and returned as a graph function (`C Cᵀ r`).
    pub fn action_gradient(&self, f: &GraphFunction, p: f64, omega: f64) -> GraphFunction {
        let full = self.full_values(f);
        let mut y = vec![0.0; self.dof.n_red];
        self.restrict(&self.residual_full(&full, p, omega), &mut y);
        self.from_reduced(&y)
    }

    /// Full-space residual `(S + V) ψ + ω M ψ + w ⊙ |ψ|^{p-1} ψ`.
    fn residual_full(&self, full: &[f64], p: f64, omega: f64) -> Vec<f64> {
        let n = self.dof.n_full;
        let mut r = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        self.stiff.matvec(full, &mut r);
        self.vterm.matvec(full, &mut tmp);
        for i in 0..n {
            r[i] += tmp[i];
        }
        self.mass_c.matvec(full, &mut tmp);
        for i in 0..n {
            r[i] += omega * tmp[i]
                + self.weights[i] * full[i].abs().powf(p - 1.0) * full[i];
        }
        r
    }

    /// Reduced-space evaluation bundle used by the iterative solvers:
    /// given `y`, returns the action value and writes the reduced gradient.
    pub(crate) fn action_value_grad(
        &self,
        y: &[f64],
        p: f64,
        omega: f64,
        grad: &mut [f64],
        scratch: &mut OperatorScratch,
    ) -> f64 {
        let n_red = self.dof.n_red;
        debug_assert_eq!(grad.len(), n_red);
        scratch.resize(self.dof.n_full, n_red);
        let full = &mut scratch.full;
        self.expand(y, full);

        // Quadratic parts in reduced space.
        self.a_red.matvec(y, &mut scratch.red_a);
        self.m_red.matvec(y, &mut scratch.red_b);
        let mut quad = 0.0;
        let mut mass2 = 0.0;
        for i in 0..n_red {
            quad += y[i] * scratch.red_a[i];
            mass2 += y[i] * scratch.red_b[i];
        }

        // Nonlinear part on full nodes.
        let mut pot = 0.0;
        for i in 0..self.dof.n_full {
            let a = full[i].abs();
            pot += self.weights[i] * a.powf(p + 1.0);
            scratch.full_b[i] = self.weights[i] * a.powf(p - 1.0) * full[i];
        }
        self.restrict(&scratch.full_b, grad);
        for i in 0..n_red {
            grad[i] += scratch.red_a[i] + omega * scratch.red_b[i];
        }
        0.5 * quad + 0.5 * omega * mass2 + pot / (p + 1.0)
    }

    /// Reduced quadratic form `yᵀ A y` with `A = Cᵀ(S+V)C`.
    pub fn reduced_q(&self, y: &[f64]) -> f64 {
        self.a_red.bilinear(y, y)
    }

    /// Reduced mass form `yᵀ M y` (twice the discrete mass).
    pub fn reduced_mass2(&self, y: &[f64]) -> f64 {
        self.m_red.bilinear(y, y)
    }

    /// H¹ norm of `C y` computed from the reduced matrices.
    pub fn reduced_h1(&self, y: &[f64]) -> f64 {
        (self.s_red.bilinear(y, y) + self.m_red.bilinear(y, y)).sqrt()
    }

    /// Adds `coef · Cᵀ diag(d) C` into an envelope matrix whose profile
    /// contains the reduced mass pattern (used by the time stepper for the
    /// nodewise relaxation weight).
    pub fn add_reduced_diagonal<T: Scalar>(&self, d_full: &[f64], coef: T, sky: &mut Skyline<T>) {
        debug_assert_eq!(d_full.len(), self.dof.n_full);
        for node in 0..self.dof.n_full {
            let dv = d_full[node];
            if dv == 0.0 {
                continue;
            }
            match self.dof.role[node] {
                NodeRole::Interior(r) => sky.add_entry(r, r, coef.scale(dv)),
                NodeRole::Truncated => {}
                NodeRole::Vertex { v, slot } => {
                    let (col0, y, _) = &self.dof.vertex_blocks[v];
                    for a in 0..y.ncols() {
                        for b in 0..=a {
                            sky.add_entry(
                                col0 + a,
                                col0 + b,
                                coef.scale(dv * y[(slot, a)] * y[(slot, b)]),
                            );
                        }
                    }
                }
            }
        }
    }

    /// Dual norm `√(rᵀ (S + M)⁻¹ r)` of a reduced residual, the norm in which
    /// the descent solvers measure their gradients. `S + M` omits the vertex
    /// term, so it is positive definite for every admissible condition.
    pub fn h1_dual_norm(&self, r: &[f64]) -> Result<f64> {
        let mut sky = Skyline::<f64>::from_union_profile(self.dof.n_red, &[&self.s_red, &self.m_red]);
        sky.add_csr(1.0, &self.s_red);
        sky.add_csr(1.0, &self.m_red);
        sky.factor_ldlt()?;
        let mut z = r.to_vec();
        sky.solve(&mut z);
        let mut s = 0.0;
        for i in 0..r.len() {
            s += r[i] * z[i];
        }
        Ok(s.max(0.0).sqrt())
    }

    /// Dual norm `√(rᵀ M⁻¹ r)` of a reduced residual, via one mass solve.
    pub fn mass_dual_norm(&self, r: &[f64]) -> Result<f64> {
        let mut sky = Skyline::<f64>::from_union_profile(self.dof.n_red, &[&self.m_red]);
        sky.add_csr(1.0, &self.m_red);
        sky.factor_ldlt()?;
        let mut z = r.to_vec();
        sky.solve(&mut z);
        let mut s = 0.0;
        for i in 0..r.len() {
            s += r[i] * z[i];
        }
        Ok(s.max(0.0).sqrt())
    }
}

/// Reusable buffers for the solver hot loop.
#[derive(Clone, Debug, Default)]
pub(crate) struct OperatorScratch {
    full: Vec<f64>,
    full_b: Vec<f64>,
    red_a: Vec<f64>,
    red_b: Vec<f64>,
}

impl OperatorScratch {
    fn resize(&mut self, n_full: usize, n_red: usize) {
        self.full.resize(n_full, 0.0);
        self.full_b.resize(n_full, 0.0);
        self.red_a.resize(n_red, 0.0);
        self.red_b.resize(n_red, 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeLength, EdgeSpec, Mesh, MetricGraph};
    use crate::vertex::MatrixCondition;

    fn star_op(k: usize, gamma: f64, h: f64, t: f64) -> DiscreteOperator {
        let domain = Domain::star(k, h, t).unwrap();
        let cond = MatrixCondition::delta(k, gamma).unwrap().to_projector_form().unwrap();
        DiscreteOperator::assemble(&domain, &[cond]).unwrap()
    }

    #[test]
    fn robin_half_line_quadratic_form() {
        // K = 1, gamma = -1: Q(e^{-x}) = ∫ e^{-2x} - 1 = -1/2.
        let op = star_op(1, -1.0, 0.01, 40.0);
        let f = GraphFunction::from_fn(op.domain(), |_, x| (-x).exp());
        let q = op.q_form(&f).unwrap();
        assert!((q + 0.5).abs() < 1e-3, "q = {q}");
    }

    #[test]
    fn delta_star_rayleigh_quotient() {
        // K = 4, gamma = -2: e^{-x/2} is the exact ground state, quotient -1/4.
        let op = star_op(4, -2.0, 0.01, 40.0);
        let f = GraphFunction::from_fn(op.domain(), |_, x| (-0.5 * x).exp());
        let q = op.q_form(&f).unwrap();
        let m2 = 2.0 * op.mass(&f);
        assert!((q / m2 + 0.25).abs() < 1e-3);
    }

    #[test]
    fn q_form_rejects_discontinuous_trace_at_delta_vertex() {
        let op = star_op(2, -1.0, 0.1, 5.0);
        let f = GraphFunction::from_fn(op.domain(), |k, x| if k == 0 { 1.0 - x } else { 0.5 * x });
        assert!(op.q_form(&f).is_err());
    }

    #[test]
    fn reduced_matrices_are_symmetric() {
        let op = star_op(3, -2.0, 0.05, 10.0);
        assert!(op.quadratic_matrix().symmetry_defect() <= 1e-12);
        assert!(op.mass_matrix().symmetry_defect() <= 1e-12);
        assert!(op.stiffness_matrix().symmetry_defect() <= 1e-12);
    }

    #[test]
    fn expand_restrict_are_adjoint_and_projection() {
        let op = star_op(3, 1.5, 0.1, 4.0);
        let n_red = op.n_reduced();
        let n_full = op.n_full();
        // CᵀC = I: restrict(expand(y)) = y.
        let y: Vec<f64> = (0..n_red).map(|i| ((i * 7 % 13) as f64 - 6.0) / 5.0).collect();
        let mut full = vec![0.0; n_full];
        op.expand(&y, &mut full);
        let mut back = vec![0.0; n_red];
        op.restrict(&full, &mut back);
        for i in 0..n_red {
            assert!((back[i] - y[i]).abs() < 1e-14);
        }
        // ⟨C y, r⟩ = ⟨y, Cᵀ r⟩.
        let r: Vec<f64> = (0..n_full).map(|i| ((i * 11 % 17) as f64 - 8.0) / 3.0).collect();
        let mut rt = vec![0.0; n_red];
        op.restrict(&r, &mut rt);
        let lhs: f64 = full.iter().zip(&r).map(|(a, b)| a * b).sum();
        let rhs: f64 = y.iter().zip(&rt).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn reduced_q_matches_full_q_on_constrained_functions() {
        let op = star_op(4, -2.0, 0.02, 20.0);
        // Continuous at the vertex, zero at truncation: in the reduced space.
        let f = GraphFunction::from_fn(op.domain(), |_, x| {
            (-0.7 * x).exp() - (-0.7_f64 * 20.0).exp()
        });
        let y = op.to_reduced(&f);
        let g = op.from_reduced(&y);
        let q_full = op.q_form(&g).unwrap();
        let q_red = op.reduced_q(&y);
        assert!((q_full - q_red).abs() < 1e-10 * q_full.abs().max(1.0));
        let m_full = op.mass(&g);
        let m_red = 0.5 * op.reduced_mass2(&y);
        assert!((m_full - m_red).abs() < 1e-10 * m_full.max(1.0));
    }

    #[test]
    fn action_gradient_matches_finite_differences() {
        // Central differences of the action along random directions.
        let op = star_op(3, -1.0, 0.2, 3.0);
        let p = 3.0;
        let omega = 0.3;
        let f = GraphFunction::from_fn(op.domain(), |k, x| {
            ((0.4 + 0.1 * k as f64) * x).sin() * (-x).exp() + (-(x)).exp()
        });
        let y0 = op.to_reduced(&f);
        let base = op.from_reduced(&y0);
        let grad = op.action_gradient(&base, p, omega);
        let g_red = op.to_reduced(&grad);

        let t = 1e-6;
        let mut scratch = OperatorScratch::default();
        let mut gbuf = vec![0.0; op.n_reduced()];
        for dir in 0..20 {
            let d: Vec<f64> = (0..op.n_reduced())
                .map(|i| ((i + dir * 37) * 2654435761 % 1000) as f64 / 500.0 - 1.0)
                .collect();
            let dn = (d.iter().map(|x| x * x).sum::<f64>()).sqrt();
            let d: Vec<f64> = d.iter().map(|x| x / dn).collect();
            let yp: Vec<f64> = y0.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let ym: Vec<f64> = y0.iter().zip(&d).map(|(a, b)| a - t * b).collect();
            let sp = op.action_value_grad(&yp, p, omega, &mut gbuf, &mut scratch);
            let sm = op.action_value_grad(&ym, p, omega, &mut gbuf, &mut scratch);
            let fd = (sp - sm) / (2.0 * t);
            let an: f64 = g_red.iter().zip(&d).map(|(a, b)| a * b).sum();
            assert!(
                (fd - an).abs() <= 1e-5 * an.abs().max(1e-3),
                "dir {dir}: fd {fd} vs analytic {an}"
            );
        }
    }

    #[test]
    fn lumped_weights_sum_to_total_length() {
        let op = star_op(2, 0.0, 0.25, 10.0);
        let total: f64 = op.lumped_weights().iter().sum();
        assert!((total - 20.0).abs() < 1e-12);
    }

    #[test]
    fn multi_vertex_graph_assembles_and_reduces() {
        // Path: half-line -- v0 -- segment -- v1 -- half-line, Kirchhoff inside.
        let vs = vec!["v0".to_string(), "v1".to_string()];
        let es = vec![
            EdgeSpec { id: "a".into(), from: "v0".into(), to: None, length: EdgeLength::Infinite },
            EdgeSpec {
                id: "b".into(),
                from: "v0".into(),
                to: Some("v1".into()),
                length: EdgeLength::Finite(2.0),
            },
            EdgeSpec { id: "c".into(), from: "v1".into(), to: None, length: EdgeLength::Infinite },
        ];
        let g = MetricGraph::build(&vs, &es).unwrap();
        let mesh = Mesh::uniform(&g, 0.05, 8.0).unwrap();
        let d = Domain::new(g, mesh).unwrap();
        let k0 = MatrixCondition::kirchhoff(2).unwrap().to_projector_form().unwrap();
        let k1 = MatrixCondition::kirchhoff(2).unwrap().to_projector_form().unwrap();
        let op = DiscreteOperator::assemble(&d, &[k0, k1]).unwrap();
        // Project a smooth profile onto the constrained space; the projection
        // is continuous at both vertices, so the Kirchhoff form must equal the
        // plain H¹ seminorm (no vertex term).
        let f = GraphFunction::from_fn(&d, |k, x| ((0.3 + 0.2 * k as f64) * x).cos() * (-0.4 * x).exp());
        let y = op.to_reduced(&f);
        let g2 = op.from_reduced(&y);
        let q = op.q_form(&g2).unwrap();
        let semi = g2.seminorm_h1();
        assert!((q - semi * semi).abs() < 1e-9 * q.abs().max(1.0));
    }
}
