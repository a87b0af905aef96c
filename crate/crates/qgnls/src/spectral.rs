//! Bottom of the spectrum of the discretized operator and exact reference
//! values on star graphs.
//!
//! The generalized pencil `A y = λ M y` (reduced quadratic form vs. reduced
//! mass) is attacked in two stages:
//!
//! 1. *Inertia bisection.* For a shift σ the LDLᵀ factorization of `A - σ M`
//!    counts the eigenvalues below σ (Sylvester). Starting from a Gershgorin
//!    lower bound, bisection brackets the smallest eigenvalue to high relative
//!    accuracy; each probe is a linear-time envelope factorization.
//! 2. *Shifted inverse iteration* from just below the bracket, which then
//!    converges in a handful of solves and yields the eigenvector.
//!
//! On a star graph with `k` half-lines and an attractive coupling the bottom
//! eigenvalue is known in closed form (`-(γ/k)²` for δ, `-(k/γ)²` for δ'),
//! which the tests and the verification commands use as an oracle.

use crate::error::{Error, Result};
use crate::graph::GraphFunction;
use crate::linalg::Skyline;
use crate::operator::DiscreteOperator;

/// Result of the eigensolve: eigenvalue, M-normalized eigenvector (as a graph
/// function, sign-fixed so its largest component is positive), the relative
/// eigen-residual `‖A y - λ M y‖ / ‖M y‖`, and work counters.
#[derive(Clone, Debug)]
pub struct SpectralResult {
    pub lambda_min: f64,
    pub eigenvector: GraphFunction,
    pub residual: f64,
    pub factorizations: usize,
    pub iterations: usize,
}

/// Computes the smallest pencil eigenvalue to residual tolerance `tol`.
pub fn bottom_of_spectrum(
    op: &DiscreteOperator,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralResult> {
    let n = op.n_reduced();
    if n == 0 {
        return Err(Error::Validation("empty reduced space".into()));
    }
    let a = op.quadratic_matrix();
    let m = op.mass_matrix();
    let mut factorizations = 0usize;

    let count_below = |sigma: f64, fac: &mut usize| -> usize {
        let mut sky = Skyline::<f64>::from_union_profile(n, &[a, m]);
        sky.add_csr(1.0, a);
        sky.add_csr(-sigma, m);
        *fac += 1;
        sky.factor_ldlt_counting().negative
    };

    // Guaranteed bracket start: Gershgorin estimate, then verified and pushed
    // down until no eigenvalue lies below.
    let ga = a
        .gershgorin_rows()
        .iter()
        .map(|&(d, r)| d - r)
        .fold(f64::INFINITY, f64::min);
    let gm = m
        .gershgorin_rows()
        .iter()
        .map(|&(d, r)| d - r)
        .fold(f64::INFINITY, f64::min);
    let mut lo = if gm > 0.0 { (ga / gm).min(0.0) - 1.0 } else { -1.0 };
    let mut step = 1.0f64.max(lo.abs());
    while count_below(lo, &mut factorizations) > 0 {
        lo -= step;
        step *= 2.0;
        if !lo.is_finite() {
            return Err(Error::NonConvergence("no lower spectral bound found".into()));
        }
    }

    // Upper end: any Rayleigh quotient sits at or above the bottom eigenvalue.
    let ones = vec![1.0; n];
    let rq = a.bilinear(&ones, &ones) / m.bilinear(&ones, &ones).max(f64::MIN_POSITIVE);
    let mut hi = rq + 1e-12 * rq.abs().max(1.0);

    let width_goal = |lo: f64, hi: f64| 1e-10 * lo.abs().max(hi.abs()).max(1.0);
    let mut guard = 0;
    while hi - lo > width_goal(lo, hi) {
        let mid = 0.5 * (lo + hi);
        if count_below(mid, &mut factorizations) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
        guard += 1;
        if guard > 400 {
            break;
        }
    }

    // Factor strictly below the bracket; nudge on unlucky singular minors.
    let mut sigma = lo - (hi - lo).max(1e-9 * (1.0 + lo.abs()));
    let sky = loop {
        let mut sky = Skyline::<f64>::from_union_profile(n, &[a, m]);
        sky.add_csr(1.0, a);
        sky.add_csr(-sigma, m);
        factorizations += 1;
        match sky.factor_ldlt() {
            Ok(_) => break sky,
            Err(_) if factorizations < 64 => {
                sigma -= 1e-7 * (1.0 + sigma.abs());
            }
            Err(e) => return Err(e),
        }
    };

    // Inverse iteration on the pencil from a deterministic start vector.
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.7).sin()).collect();
    let mut mx = vec![0.0; n];
    let mut ax = vec![0.0; n];
    let mut iterations = 0usize;
    let (lambda, residual) = loop {
        m.matvec(&x, &mut mx);
        let mnorm2 = x.iter().zip(&mx).map(|(u, v)| u * v).sum::<f64>();
        let s = mnorm2.max(f64::MIN_POSITIVE).sqrt().recip();
        for i in 0..n {
            x[i] *= s;
        }
        m.matvec(&x, &mut mx);
        a.matvec(&x, &mut ax);
        let lambda = x.iter().zip(&ax).map(|(u, v)| u * v).sum::<f64>();
        let mut rn = 0.0;
        let mut mn = 0.0;
        for i in 0..n {
            let r = ax[i] - lambda * mx[i];
            rn += r * r;
            mn += mx[i] * mx[i];
        }
        let residual = (rn / mn.max(f64::MIN_POSITIVE)).sqrt();
        if residual <= tol {
            break (lambda, residual);
        }
        if iterations >= max_iter {
            return Err(Error::NonConvergence(format!(
                "inverse iteration stalled after {iterations} iterations: \
                 lambda = {lambda:.6e}, residual = {residual:.2e} (tol {tol:.1e}), \
                 bracket [{lo:.6e}, {hi:.6e}]"
            )));
        }
        let mut z = mx.clone();
        sky.solve(&mut z);
        x = z;
        iterations += 1;
    };

    // Sign fix: largest full-space component positive.
    let mut ev = op.from_reduced(&x);
    let mut extreme = 0.0f64;
    for vals in ev.values() {
        for &v in vals {
            if v.abs() > extreme.abs() {
                extreme = v;
            }
        }
    }
    if extreme < 0.0 {
        ev.scale(-1.0);
    }

    Ok(SpectralResult {
        lambda_min: lambda,
        eigenvector: ev,
        residual,
        factorizations,
        iterations,
    })
}

/// Coupling family of a star-graph vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StarKind {
    Delta,
    DeltaPrime,
}

/// Bottom of the discrete spectrum of `-d²/dx²` on a star of `k` half-lines:
/// `Some(-(γ/k)²)` for an attractive δ coupling, `Some(-(k/γ)²)` for an
/// attractive δ', and `None` when no negative eigenvalue exists (`γ ≥ 0`).
/// The essential spectrum is `[0, ∞)` in every case.
pub fn star_bottom_closed_form(kind: StarKind, k: usize, gamma: f64) -> Result<Option<f64>> {
    if k == 0 {
        return Err(Error::Validation("star needs at least one edge".into()));
    }
    match kind {
        StarKind::Delta => {
            if gamma < 0.0 {
                let kappa = -gamma / k as f64;
                Ok(Some(-kappa * kappa))
            } else {
                Ok(None)
            }
        }
        StarKind::DeltaPrime => {
            if gamma == 0.0 {
                return Err(Error::Validation("delta' coupling needs gamma != 0".into()));
            }
            if gamma < 0.0 {
                let kappa = -(k as f64) / gamma;
                Ok(Some(-kappa * kappa))
            } else {
                Ok(None)
            }
        }
    }
}

/// Existence classification for action ground states of the defocusing
/// equation at frequency `ω`, given the bottom of the spectrum `l_H`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExistenceClass {
    /// A nontrivial bound state exists (`l_H < 0` and `0 < ω < -l_H`).
    Exists,
    /// Zero frequency with `l_H < 0` and subquintic power: a decaying ground
    /// state still exists at the edge of the window.
    ExistsCriticalFrequency,
    /// Zero frequency, quintic-or-higher power: any finite-action solution is
    /// compactly supported, hence trivial on half-lines.
    CompactSupportOnly,
    /// No nontrivial minimizer; descent collapses to zero.
    NotExists,
}

impl std::fmt::Display for ExistenceClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExistenceClass::Exists => "exists",
            ExistenceClass::ExistsCriticalFrequency => "exists-critical-frequency",
            ExistenceClass::CompactSupportOnly => "compact-support-only",
            ExistenceClass::NotExists => "not-exists",
        };
        f.write_str(s)
    }
}

/// Classifies `(l_H, ω, p)`; `p ≤ 1` is rejected because the nonlinearity is
/// no longer superlinear.
pub fn existence_criterion(l_h: f64, omega: f64, p: f64) -> Result<ExistenceClass> {
    if !(p > 1.0) {
        return Err(Error::Validation(format!("nonlinearity power must satisfy p > 1, got {p}")));
    }
    if omega == 0.0 {
        if l_h < 0.0 {
            if p < 5.0 {
                return Ok(ExistenceClass::ExistsCriticalFrequency);
            }
            return Ok(ExistenceClass::CompactSupportOnly);
        }
        return Ok(ExistenceClass::NotExists);
    }
    if omega > 0.0 && l_h < 0.0 && omega < -l_h {
        return Ok(ExistenceClass::Exists);
    }
    Ok(ExistenceClass::NotExists)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Domain;
    use crate::vertex::MatrixCondition;

    fn star_op(k: usize, cond: MatrixCondition, h: f64, t: f64) -> DiscreteOperator {
        let domain = Domain::star(k, h, t).unwrap();
        let p = cond.to_projector_form().unwrap();
        DiscreteOperator::assemble(&domain, &[p]).unwrap()
    }

    #[test]
    fn delta_star_bottom_matches_closed_form() {
        let op = star_op(4, MatrixCondition::delta(4, -2.0).unwrap(), 0.01, 40.0);
        let r = bottom_of_spectrum(&op, 1e-10, 50).unwrap();
        let exact = star_bottom_closed_form(StarKind::Delta, 4, -2.0).unwrap().unwrap();
        assert_eq!(exact, -0.25);
        assert!((r.lambda_min - exact).abs() < 2e-3, "lambda = {}", r.lambda_min);
        assert!(r.residual <= 1e-10);
    }

    #[test]
    fn delta_prime_star_bottom_matches_closed_form() {
        let op = star_op(4, MatrixCondition::delta_prime(4, -2.0).unwrap(), 0.01, 40.0);
        let r = bottom_of_spectrum(&op, 1e-10, 50).unwrap();
        let exact = star_bottom_closed_form(StarKind::DeltaPrime, 4, -2.0).unwrap().unwrap();
        assert_eq!(exact, -4.0);
        assert!((r.lambda_min - exact).abs() < 2e-2, "lambda = {}", r.lambda_min);
    }

    #[test]
    fn eigenvector_is_sign_definite_and_decays() {
        let op = star_op(3, MatrixCondition::delta(3, -1.5).unwrap(), 0.02, 40.0);
        let r = bottom_of_spectrum(&op, 1e-10, 50).unwrap();
        let peak = r
            .eigenvector
            .values()
            .iter()
            .flatten()
            .cloned()
            .fold(0.0f64, f64::max);
        assert!(peak > 0.0);
        for vals in r.eigenvector.values() {
            for &v in vals {
                assert!(v >= -1e-9 * peak, "sign flip: {v}");
            }
            // exponential decay towards the truncation end
            assert!(vals.last().unwrap().abs() < 1e-4 * peak);
        }
    }

    #[test]
    fn bottom_is_nondecreasing_in_gamma() {
        let mut prev = f64::NEG_INFINITY;
        for gamma in [-3.0, -2.0, -1.0] {
            let op = star_op(4, MatrixCondition::delta(4, gamma).unwrap(), 0.02, 30.0);
            let r = bottom_of_spectrum(&op, 1e-9, 50).unwrap();
            assert!(r.lambda_min > prev, "gamma = {gamma}");
            prev = r.lambda_min;
        }
    }

    #[test]
    fn closed_form_agreement_improves_with_mesh_order() {
        let exact = -0.25;
        let err_at = |h: f64| {
            let op = star_op(4, MatrixCondition::delta(4, -2.0).unwrap(), h, 40.0);
            let r = bottom_of_spectrum(&op, 1e-11, 50).unwrap();
            (r.lambda_min - exact).abs()
        };
        let e1 = err_at(0.04);
        let e2 = err_at(0.02);
        let order = (e1 / e2).log2();
        assert!(e1 / exact.abs() < 1e-2);
        assert!(order >= 1.5, "order = {order}, errors {e1:.3e} / {e2:.3e}");
    }

    #[test]
    fn repulsive_coupling_has_no_negative_spectrum() {
        assert_eq!(star_bottom_closed_form(StarKind::Delta, 4, 1.0).unwrap(), None);
        let op = star_op(2, MatrixCondition::delta(2, 1.0).unwrap(), 0.02, 20.0);
        let r = bottom_of_spectrum(&op, 1e-9, 80).unwrap();
        // Truncated half-lines leave a small positive bottom eigenvalue, at
        // most that of the fully decoupled Dirichlet interval (π/T)².
        assert!(r.lambda_min > 0.0);
        let dirichlet_cap = (std::f64::consts::PI / 20.0).powi(2);
        assert!(r.lambda_min < dirichlet_cap * 1.01, "lambda = {}", r.lambda_min);
    }

    #[test]
    fn delta_prime_closed_form_validation() {
        assert!(star_bottom_closed_form(StarKind::DeltaPrime, 3, 0.0).is_err());
        assert_eq!(
            star_bottom_closed_form(StarKind::DeltaPrime, 2, -0.5).unwrap(),
            Some(-16.0)
        );
    }

    #[test]
    fn existence_criterion_table() {
        use ExistenceClass::*;
        let l_h = -0.25;
        assert_eq!(existence_criterion(l_h, 0.125, 3.0).unwrap(), Exists);
        assert_eq!(existence_criterion(l_h, 0.25, 3.0).unwrap(), NotExists); // boundary
        assert_eq!(existence_criterion(l_h, 0.5, 3.0).unwrap(), NotExists);
        assert_eq!(existence_criterion(0.0, 0.125, 3.0).unwrap(), NotExists);
        assert_eq!(existence_criterion(l_h, 0.0, 3.0).unwrap(), ExistsCriticalFrequency);
        assert_eq!(existence_criterion(l_h, 0.0, 5.0).unwrap(), CompactSupportOnly);
        assert_eq!(existence_criterion(l_h, 0.0, 6.0).unwrap(), CompactSupportOnly);
        assert_eq!(existence_criterion(0.1, 0.0, 3.0).unwrap(), NotExists);
        assert_eq!(existence_criterion(l_h, -0.1, 3.0).unwrap(), NotExists);
        assert!(existence_criterion(l_h, 0.1, 1.0).is_err());
        assert!(existence_criterion(l_h, 0.1, 0.5).is_err());
    }
}
