//! Self-adjoint vertex conditions.
//!
//! At a vertex of degree `d` the operator domain is cut out by
//! `A Ψ(v) + B Ψ'(v) = 0` with `A, B ∈ ℂ^{d×d}`, where Ψ collects the edge
//! values and Ψ' the inward derivatives in incidence order. The condition is
//! self-adjoint exactly when `rank [A B] = d` and `A Bᴴ` is Hermitian.
//!
//! Every self-adjoint condition has a unique projector form
//! `(P_D, P_N, P_R, Λ)`: orthogonal projectors summing to the identity plus an
//! invertible Hermitian map Λ on `ran P_R`, with
//!
//! * `P_D Ψ = 0` (Dirichlet part),
//! * `P_N Ψ' = 0` (Neumann part),
//! * `P_R Ψ' = Λ P_R Ψ` (Robin part).
//!
//! The quadratic form of the operator then gains `⟨Λ P_R Ψ, P_R Ψ⟩` per vertex
//! and its form domain only keeps the constraint `P_D Ψ = 0`; this is what the
//! discretization consumes. Conversions in both directions live here, plus the
//! classical δ, δ', Kirchhoff and Dirichlet families.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

type CMat = DMatrix<Complex64>;

/// Relative tolerance for rank / Hermiticity / projector checks.
const EPS: f64 = 1e-10;

/// Vertex condition in matrix form `A Ψ + B Ψ' = 0`.
#[derive(Clone, Debug)]
pub struct MatrixCondition {
    a: CMat,
    b: CMat,
}

/// Outcome of the self-adjointness test of a matrix condition.
#[derive(Clone, Copy, Debug)]
pub struct SelfAdjointCheck {
    /// Rank of the `d × 2d` block matrix `[A B]`; must equal `d`.
    pub rank_ab: usize,
    /// `max |(A Bᴴ) - (A Bᴴ)ᴴ|` entrywise; must vanish.
    pub hermitian_defect: f64,
    pub is_self_adjoint: bool,
}

impl MatrixCondition {
    /// Wraps user matrices after a shape check. No self-adjointness is implied;
    /// call [`Self::check_self_adjoint`] or convert to projector form.
    pub fn from_matrices(a: CMat, b: CMat) -> Result<Self> {
        if a.nrows() != a.ncols() || b.nrows() != b.ncols() || a.nrows() != b.nrows() {
            return Err(Error::Condition(format!(
                "A and B must be square of equal size, got {}x{} and {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        if a.nrows() == 0 {
            return Err(Error::Condition("empty vertex condition".into()));
        }
        Ok(MatrixCondition { a, b })
    }

    /// Real matrices convenience wrapper.
    pub fn from_real(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Self> {
        let lift = |m: &DMatrix<f64>| m.map(|x| Complex64::new(x, 0.0));
        Self::from_matrices(lift(a), lift(b))
    }

    /// δ coupling of strength `gamma` on `k` edges: continuity of the value
    /// across the vertex and `Σ ψ'_e(v) = gamma ψ(v)`.
    pub fn delta(k: usize, gamma: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Condition("vertex degree must be positive".into()));
        }
        let mut a = DMatrix::<f64>::zeros(k, k);
        let mut b = DMatrix::<f64>::zeros(k, k);
        for i in 0..k - 1 {
            a[(i, i)] = 1.0;
            a[(i, i + 1)] = -1.0;
        }
        a[(k - 1, 0)] = -gamma;
        for j in 0..k {
            b[(k - 1, j)] = 1.0;
        }
        Self::from_real(&a, &b)
    }

    /// δ' coupling of strength `gamma ≠ 0` on `k` edges: continuity of the
    /// inward derivative and `Σ ψ_e(v) = gamma ψ'(v)`.
    pub fn delta_prime(k: usize, gamma: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Condition("vertex degree must be positive".into()));
        }
        if gamma == 0.0 {
            return Err(Error::Condition("delta' coupling needs gamma != 0".into()));
        }
        let mut a = DMatrix::<f64>::zeros(k, k);
        let mut b = DMatrix::<f64>::zeros(k, k);
        for i in 0..k - 1 {
            b[(i, i)] = 1.0;
            b[(i, i + 1)] = -1.0;
        }
        b[(k - 1, 0)] = -gamma;
        for j in 0..k {
            a[(k - 1, j)] = 1.0;
        }
        Self::from_real(&a, &b)
    }

    /// Standard (natural) coupling: δ with `gamma = 0`.
    pub fn kirchhoff(k: usize) -> Result<Self> {
        Self::delta(k, 0.0)
    }

    /// Decoupling Dirichlet condition `Ψ(v) = 0`.
    pub fn dirichlet(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Condition("vertex degree must be positive".into()));
        }
        Ok(MatrixCondition {
            a: CMat::identity(k, k),
            b: CMat::zeros(k, k),
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }

    pub fn b(&self) -> &CMat {
        &self.b
    }

    /// Tests `rank [A B] = d` and Hermiticity of `A Bᴴ`.
    pub fn check_self_adjoint(&self) -> SelfAdjointCheck {
        let d = self.dim();
        let mut ab = CMat::zeros(d, 2 * d);
        ab.view_mut((0, 0), (d, d)).copy_from(&self.a);
        ab.view_mut((0, d), (d, d)).copy_from(&self.b);
        let scale = ab.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
        let rank_ab = ab.rank(EPS * scale);

        let abh = &self.a * self.b.adjoint();
        let defect = (&abh - abh.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        let hscale = abh.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
        SelfAdjointCheck {
            rank_ab,
            hermitian_defect: defect,
            is_self_adjoint: rank_ab == d && defect <= EPS * hscale,
        }
    }

    /// Residual `max |A Ψ + B Ψ'|` of a trace pair, for diagnostics.
    pub fn residual(&self, trace: &[Complex64], dtrace: &[Complex64]) -> f64 {
        let psi = DVector::from_column_slice(trace);
        let dpsi = DVector::from_column_slice(dtrace);
        (&self.a * psi + &self.b * dpsi)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Converts to the unique projector form. Fails if the condition is not
    /// self-adjoint.
    ///
    /// The construction: the admissible trace space is `V = ran Bᴴ` (so
    /// `P_D = I - P_V`); on `V` the condition forces `P_V Ψ' = T Ψ` with the
    /// Hermitian map `T = -(B|_V)⁻¹ A|_V`, whose kernel gives the Neumann
    /// projector and whose nonzero eigenspaces give `P_R` and `Λ`.
    pub fn to_projector_form(&self) -> Result<ProjectorCondition> {
        let check = self.check_self_adjoint();
        if !check.is_self_adjoint {
            return Err(Error::Condition(format!(
                "condition is not self-adjoint (rank [A B] = {} of {}, Hermitian defect {:.2e})",
                check.rank_ab,
                self.dim(),
                check.hermitian_defect
            )));
        }
        let d = self.dim();

        // Orthonormal basis of V = ran Bᴴ from the SVD of B.
        let svd = self.b.clone().svd(true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        let tol = EPS * smax.max(1.0);
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > tol)
            .collect();
        let r = keep.len();
        let v_t = svd.v_t.as_ref().expect("SVD with V requested");
        let mut w = CMat::zeros(d, r);
        for (c, &i) in keep.iter().enumerate() {
            for row in 0..d {
                w[(row, c)] = v_t[(i, row)].conj();
            }
        }

        let p_v = &w * w.adjoint();
        let p_d = CMat::identity(d, d) - &p_v;

        if r == 0 {
            // Pure Dirichlet: B = 0.
            return ProjectorCondition::new(p_d, CMat::zeros(d, d), CMat::zeros(d, d), CMat::zeros(d, d));
        }

        // Robin map in W coordinates: solve (B W) T = -(A W).
        let bw = &self.b * &w;
        let aw = &self.a * &w;
        let t = bw
            .svd(true, true)
            .solve(&(-aw), tol)
            .map_err(|e| Error::Condition(format!("failed to invert B on its range: {e}")))?;
        let herm_defect = (&t - t.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        let tscale = t.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
        if herm_defect > 1e3 * EPS * tscale {
            return Err(Error::Condition(format!(
                "Robin map is not Hermitian (defect {herm_defect:.2e}); condition inconsistent"
            )));
        }
        let t = (t.clone() + t.adjoint()) * Complex64::new(0.5, 0.0);

        // Split V into the kernel of T (Neumann) and its nonzero eigenspaces.
        let eig = nalgebra::SymmetricEigen::new(t);
        let lam_max = eig.eigenvalues.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
        let zero_tol = EPS * lam_max.max(1.0);
        let mut p_n = CMat::zeros(d, d);
        let mut p_r = CMat::zeros(d, d);
        let mut lambda = CMat::zeros(d, d);
        for i in 0..r {
            let u = w.clone() * eig.eigenvectors.column(i).clone_owned();
            let proj = &u * u.adjoint();
            let tau = eig.eigenvalues[i];
            if tau.abs() <= zero_tol {
                p_n += proj;
            } else {
                p_r += &proj;
                lambda += proj * Complex64::new(tau, 0.0);
            }
        }
        ProjectorCondition::new(p_d, p_n, p_r, lambda)
    }
}

/// Vertex condition in projector form; see the module docs.
#[derive(Clone, Debug)]
pub struct ProjectorCondition {
    p_d: CMat,
    p_n: CMat,
    p_r: CMat,
    lambda: CMat,
}

impl ProjectorCondition {
    /// Validates and wraps a projector quadruple: each of `P_D, P_N, P_R` must
    /// be an orthogonal projector, they must be mutually orthogonal and sum to
    /// the identity, and Λ must be Hermitian, supported on `ran P_R` and
    /// invertible there.
    pub fn new(p_d: CMat, p_n: CMat, p_r: CMat, lambda: CMat) -> Result<Self> {
        let d = p_d.nrows();
        for (name, m) in [("P_D", &p_d), ("P_N", &p_n), ("P_R", &p_r), ("Lambda", &lambda)] {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::Condition(format!("{name} has wrong shape")));
            }
        }
        let herm = |m: &CMat| {
            (m - m.adjoint())
                .iter()
                .map(|z| z.norm())
                .fold(0.0f64, f64::max)
        };
        let maxabs =
            |m: &CMat| m.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
        for (name, m) in [("P_D", &p_d), ("P_N", &p_n), ("P_R", &p_r)] {
            if herm(m) > EPS * maxabs(m) {
                return Err(Error::Condition(format!("{name} is not Hermitian")));
            }
            let idem = (m * m - m)
                .iter()
                .map(|z| z.norm())
                .fold(0.0f64, f64::max);
            if idem > EPS * maxabs(m) {
                return Err(Error::Condition(format!("{name} is not idempotent")));
            }
        }
        let sum = &p_d + &p_n + &p_r;
        let sum_defect = (&sum - CMat::identity(d, d))
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        if sum_defect > EPS {
            return Err(Error::Condition(format!(
                "projectors do not sum to the identity (defect {sum_defect:.2e})"
            )));
        }
        for (pair, m) in [
            ("P_D P_N", &p_d * &p_n),
            ("P_D P_R", &p_d * &p_r),
            ("P_N P_R", &p_n * &p_r),
        ] {
            let x = m.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
            if x > EPS {
                return Err(Error::Condition(format!("{pair} is not zero")));
            }
        }
        if herm(&lambda) > EPS * maxabs(&lambda) {
            return Err(Error::Condition("Lambda is not Hermitian".into()));
        }
        let restricted = &p_r * &lambda * &p_r;
        let restrict_defect = (&restricted - &lambda)
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        if restrict_defect > EPS * maxabs(&lambda) {
            return Err(Error::Condition("Lambda is not supported on ran P_R".into()));
        }
        // Invertibility of Λ on ran P_R: rank Λ must equal rank P_R.
        let r_rank = p_r.trace().re.round() as usize;
        let lam_scale = maxabs(&lambda);
        if lambda.rank(EPS * lam_scale) != r_rank {
            return Err(Error::Condition(
                "Lambda is singular on the Robin subspace".into(),
            ));
        }
        Ok(ProjectorCondition { p_d, p_n, p_r, lambda })
    }

    pub fn dim(&self) -> usize {
        self.p_d.nrows()
    }

    pub fn p_d(&self) -> &CMat {
        &self.p_d
    }

    pub fn p_n(&self) -> &CMat {
        &self.p_n
    }

    pub fn p_r(&self) -> &CMat {
        &self.p_r
    }

    pub fn lambda(&self) -> &CMat {
        &self.lambda
    }

    /// Matrix form `(A, B) = (P_D - Λ P_R, P_N + P_R)` realizing this condition.
    pub fn to_matrix_form(&self) -> MatrixCondition {
        let a = &self.p_d - &self.lambda * &self.p_r;
        let b = &self.p_n + &self.p_r;
        MatrixCondition { a, b }
    }

    /// Vertex contribution `⟨Λ P_R Ψ, P_R Ψ⟩` to the quadratic form.
    ///
    /// Fails if the trace violates the Dirichlet constraint `P_D Ψ = 0` by more
    /// than `1e-8` relative to its size, since the form value is meaningless
    /// off the form domain.
    pub fn quadratic_term(&self, trace: &[Complex64]) -> Result<f64> {
        if trace.len() != self.dim() {
            return Err(Error::Condition(format!(
                "trace has length {}, vertex has degree {}",
                trace.len(),
                self.dim()
            )));
        }
        let psi = DVector::from_column_slice(trace);
        let viol = (&self.p_d * &psi).norm();
        if viol > 1e-8 * psi.norm().max(1.0) {
            return Err(Error::Condition(format!(
                "trace violates the Dirichlet constraint (|P_D psi| = {viol:.2e})"
            )));
        }
        Ok((psi.adjoint() * &self.lambda * &psi)[(0, 0)].re)
    }

    /// Real data for assembly: an orthonormal basis of `ker P_D` (columns) and
    /// the real Robin matrix Λ. Fails for genuinely complex conditions, which
    /// the real assembly path does not support.
    pub fn real_parts(&self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let imag = self
            .p_d
            .iter()
            .chain(self.lambda.iter())
            .map(|z| z.im.abs())
            .fold(0.0f64, f64::max);
        if imag > EPS {
            return Err(Error::Condition(
                "complex vertex condition: real discretization path unavailable".into(),
            ));
        }
        let d = self.dim();
        let pd_re = self.p_d.map(|z| z.re);
        let lambda_re = self.lambda.map(|z| z.re);
        // ker P_D = eigenspace of P_D for eigenvalue 0.
        let eig = nalgebra::SymmetricEigen::new(pd_re);
        let cols: Vec<usize> = (0..d).filter(|&i| eig.eigenvalues[i] < 0.5).collect();
        let mut y = DMatrix::<f64>::zeros(d, cols.len());
        for (c, &i) in cols.iter().enumerate() {
            y.set_column(c, &eig.eigenvectors.column(i));
        }
        Ok((y, lambda_re))
    }
}
