//! Closed-form standing waves on star graphs, used as an independent oracle.
//!
//! On a star of `k` half-lines with an attractive δ or δ' coupling of strength
//! `γ < 0`, the action ground state of the defocusing equation at frequency
//! `0 < ω < -l_H` is radial and known explicitly:
//!
//!   φ_ω(x) = A · sinh((p-1)√ω x / 2 + b_ω)^{-2/(p-1)},
//!   A = ((p+1) ω / 2)^{1/(p-1)},   b_ω = artanh(√(ω / -l_H)),
//!
//! with `l_H = -(γ/k)²` for δ and `l_H = -(k/γ)²` for δ'. At the critical
//! frequency `ω = 0` (and `1 < p < 5`) the profile degenerates to the
//! algebraic tail `φ_0(x) = (a x + b_0)^{-2/(p-1)}` with
//! `a = (p-1)/√(2(p+1))` and `b_0` fixed by the vertex condition.
//!
//! Masses and actions are produced by adaptive quadrature of the profile, so
//! they are independent of any tabulated summary formula; the tabulated
//! special cases for `p = 3` and `p = 5` are exposed separately.
//! `mass_closed_form` returns the tabulated `p = 5` expression verbatim even
//! though it disagrees with the quadrature of the profile it accompanies (the
//! two differ by a factor depending on `ω/l_H`); `mass_quadrature` is the
//! ground truth, and the verification command reports both.

use crate::error::{Error, Result};
use crate::graph::{Domain, GraphFunction};
use crate::spectral::StarKind;
use std::sync::Arc;

/// Parameters of a star-graph standing-wave family.
#[derive(Clone, Copy, Debug)]
pub struct StarParams {
    pub k: usize,
    pub gamma: f64,
    pub kind: StarKind,
    pub p: f64,
    pub omega: f64,
}

impl StarParams {
    /// Validates the parameter set: attractive coupling, `p > 1`, and a
    /// frequency inside the existence window `[0, -l_H)` (with `p < 5`
    /// required at `ω = 0`, where quintic and stronger powers only admit
    /// compactly supported solutions).
    pub fn new(k: usize, gamma: f64, kind: StarKind, p: f64, omega: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Validation("star needs at least one edge".into()));
        }
        if !(gamma < 0.0) {
            return Err(Error::Validation(format!(
                "closed-form profiles need an attractive coupling, got gamma = {gamma}"
            )));
        }
        if !(p > 1.0) {
            return Err(Error::Validation(format!("power must satisfy p > 1, got {p}")));
        }
        let s = StarParams { k, gamma, kind, p, omega };
        let lh = s.l_h();
        if !(omega >= 0.0 && omega < -lh) {
            return Err(Error::Validation(format!(
                "frequency {omega} outside the existence window [0, {})",
                -lh
            )));
        }
        if omega == 0.0 && p >= 5.0 {
            return Err(Error::Validation(format!(
                "no decaying profile at zero frequency for p = {p} >= 5"
            )));
        }
        Ok(s)
    }

    /// Bottom of the spectrum of the linear operator.
    pub fn l_h(&self) -> f64 {
        match self.kind {
            StarKind::Delta => -(self.gamma / self.k as f64).powi(2),
            StarKind::DeltaPrime => -(self.k as f64 / self.gamma).powi(2),
        }
    }

    /// Linear decay rate `κ = √(-l_H)`.
    pub fn kappa(&self) -> f64 {
        (-self.l_h()).sqrt()
    }

    /// Offset `b_ω = artanh(√(ω / -l_H))`; requires `ω > 0`.
    pub fn b_omega(&self) -> Result<f64> {
        if self.omega <= 0.0 {
            return Err(Error::Validation("b_omega needs omega > 0".into()));
        }
        Ok((self.omega / -self.l_h()).sqrt().atanh())
    }

    /// Peak coefficient `A = ((p+1) ω / 2)^{1/(p-1)}`.
    pub fn amplitude(&self) -> f64 {
        ((self.p + 1.0) * self.omega / 2.0).powf(1.0 / (self.p - 1.0))
    }

    /// Slope coefficient of the critical-frequency tail,
    /// `a = (p-1) / √(2(p+1))`.
    fn tail_slope(&self) -> f64 {
        (self.p - 1.0) / (2.0 * (self.p + 1.0)).sqrt()
    }

    /// Offset of the critical-frequency profile, root-found on the vertex
    /// condition to relative accuracy `1e-12`.
    pub fn b_zero(&self) -> Result<f64> {
        if self.omega != 0.0 {
            return Err(Error::Validation("b_zero applies at omega = 0".into()));
        }
        // Residual of the vertex condition for phi_b(x) = (a x + b)^{-2/(p-1)}.
        let a = self.tail_slope();
        let kf = self.k as f64;
        let q = 2.0 / (self.p - 1.0);
        let g = |b: f64| -> f64 {
            let phi0 = b.powf(-q);
            let dphi0 = -a * q * b.powf(-q - 1.0);
            match self.kind {
                StarKind::Delta => kf * dphi0 - self.gamma * phi0,
                StarKind::DeltaPrime => kf * phi0 - self.gamma * dphi0,
            }
        };
        let (mut lo, mut hi) = (1e-8, 1e8);
        let (glo, ghi) = (g(lo), g(hi));
        if glo == 0.0 {
            return Ok(lo);
        }
        if glo * ghi > 0.0 {
            return Err(Error::NonConvergence("vertex condition has no root in bracket".into()));
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt(); // log-space bisection
            if g(mid) * glo > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Closed form of `b_0`: `√(2/(p+1)) k/|γ|` for δ and `√(2/(p+1)) |γ|/k`
    /// for δ'; cross-checks the root finder.
    pub fn b_zero_closed_form(&self) -> Result<f64> {
        if self.omega != 0.0 {
            return Err(Error::Validation("b_zero applies at omega = 0".into()));
        }
        let ratio = match self.kind {
            StarKind::Delta => self.k as f64 / -self.gamma,
            StarKind::DeltaPrime => -self.gamma / self.k as f64,
        };
        Ok((2.0 / (self.p + 1.0)).sqrt() * ratio)
    }

    /// An alternative expression for `b_0` that circulates in reference
    /// material, `(-2 / (l_H (1+p)))^{(p-1)/(2(p+1))}`. Its exponent could
    /// not be confirmed and the value does not satisfy the vertex condition,
    /// so it is reported for comparison only and never used in computations.
    pub fn b_zero_quoted_form(&self) -> Result<f64> {
        if self.omega != 0.0 {
            return Err(Error::Validation("b_zero applies at omega = 0".into()));
        }
        let base = -2.0 / (self.l_h() * (1.0 + self.p));
        Ok(base.powf((self.p - 1.0) / (2.0 * (self.p + 1.0))))
    }

    /// Profile value at distance `x` from the vertex (same on every edge).
    pub fn profile(&self, x: f64) -> f64 {
        let q = 2.0 / (self.p - 1.0);
        if self.omega == 0.0 {
            let b = self.b_zero().expect("validated at construction");
            return (self.tail_slope() * x + b).powf(-q);
        }
        let b = self.b_omega().expect("validated at construction");
        let z = 0.5 * (self.p - 1.0) * self.omega.sqrt() * x + b;
        self.amplitude() * z.sinh().powf(-q)
    }

    /// Derivative of the profile in the outward direction.
    pub fn profile_deriv(&self, x: f64) -> f64 {
        let q = 2.0 / (self.p - 1.0);
        if self.omega == 0.0 {
            let a = self.tail_slope();
            let b = self.b_zero().expect("validated at construction");
            return -a * q * (a * x + b).powf(-q - 1.0);
        }
        let b = self.b_omega().expect("validated at construction");
        let sw = self.omega.sqrt();
        let z = 0.5 * (self.p - 1.0) * sw * x + b;
        -self.amplitude() * sw * z.cosh() * z.sinh().powf(-q - 1.0)
    }

    /// Residual of the vertex condition evaluated on the analytic profile.
    pub fn vertex_residual(&self) -> f64 {
        let phi0 = self.profile(0.0);
        let dphi0 = self.profile_deriv(0.0);
        let kf = self.k as f64;
        match self.kind {
            // Inward derivatives all equal +dphi0... the outward derivative
            // enters the flux sum with a positive sign on half-lines anchored
            // at x = 0, so the condition reads k phi'(0) = gamma phi(0).
            StarKind::Delta => (kf * dphi0 - self.gamma * phi0).abs(),
            StarKind::DeltaPrime => (kf * phi0 - self.gamma * dphi0).abs(),
        }
    }

    /// Sup over samples of the stationary-equation residual
    /// `-φ'' + ω φ + φ^p` (five-point finite differences on the analytic
    /// profile; limited by round-off to about `1e-7` relative).
    pub fn ode_residual(&self) -> f64 {
        let scale = self.profile(0.0).max(1.0);
        let h = 1e-4;
        let mut worst = 0.0f64;
        for i in 0..200 {
            let x = 0.05 + 0.1 * i as f64;
            let f = |t: f64| self.profile(t);
            let d2 = (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h)
                - f(x - 2.0 * h))
                / (12.0 * h * h);
            let phi = f(x);
            let r = (-d2 + self.omega * phi + phi.powf(self.p)).abs();
            worst = worst.max(r / scale);
        }
        worst
    }

    /// Mass `M = ½ ‖φ‖²` by adaptive quadrature of the profile (relative
    /// accuracy about `1e-10`); the ground truth for every `p`.
    pub fn mass_quadrature(&self) -> Result<f64> {
        let kf = self.k as f64;
        let q = 2.0 / (self.p - 1.0);
        if self.omega == 0.0 {
            // Exact antiderivative of the algebraic tail (needs p < 5).
            let a = self.tail_slope();
            let b = self.b_zero()?;
            let e = 2.0 * q - 1.0; // 4/(p-1) - 1 > 0 for p < 5
            return Ok(0.5 * kf * b.powf(-e) / (a * e));
        }
        let b = self.b_omega()?;
        let c = 0.5 * (self.p - 1.0) * self.omega.sqrt();
        let a2 = self.amplitude().powi(2);
        let decay = 2.0 * q;
        let upper = b + 40.0 + 80.0 / decay;
        let integral = adaptive_simpson(&|z: f64| z.sinh().powf(-decay), b, upper, 1e-13);
        Ok(0.5 * kf * a2 / c * integral)
    }

    /// Tabulated closed-form mass: the exact `p = 3` expression
    /// `M = k (κ - √ω)`, the tabulated `p = 5` expression
    /// `M = (k √3 / 4) ln(-l_H / ω)`, and the quadrature value otherwise.
    ///
    /// Note: the tabulated `p = 5` expression is *inconsistent* with the
    /// closed-form profile (its quadrature mass is larger by the factor
    /// `ln coth(b_ω/2) / ln coth(b_ω) · ... > 1`); it is reproduced verbatim
    /// as the reference tables state it, and [`Self::mass_quadrature`] gives
    /// the true value.
    pub fn mass_closed_form(&self) -> Result<f64> {
        if self.omega <= 0.0 {
            return self.mass_quadrature();
        }
        let kf = self.k as f64;
        if self.p == 3.0 {
            return Ok(kf * (self.kappa() - self.omega.sqrt()));
        }
        if self.p == 5.0 {
            let ratio = -self.l_h() / self.omega;
            return Ok(kf * 3.0f64.sqrt() / 4.0 * ratio.ln());
        }
        self.mass_quadrature()
    }

    /// `‖φ‖_{p+1}^{p+1}` by adaptive quadrature.
    pub fn p_norm_power(&self) -> Result<f64> {
        let kf = self.k as f64;
        let q = 2.0 / (self.p - 1.0);
        if self.omega == 0.0 {
            let a = self.tail_slope();
            let b = self.b_zero()?;
            let e = q * (self.p + 1.0) - 1.0;
            return Ok(kf * b.powf(-e) / (a * e));
        }
        let b = self.b_omega()?;
        let c = 0.5 * (self.p - 1.0) * self.omega.sqrt();
        let ap = self.amplitude().powf(self.p + 1.0);
        let decay = q * (self.p + 1.0);
        let upper = b + 40.0 + 80.0 / decay;
        let integral = adaptive_simpson(&|z: f64| z.sinh().powf(-decay), b, upper, 1e-13);
        Ok(kf * ap / c * integral)
    }

    /// Action of the ground state through the potential-term identity,
    /// `s_ω = -((p-1)/(2(p+1))) ‖φ‖_{p+1}^{p+1}`.
    pub fn action_closed_form(&self) -> Result<f64> {
        Ok(-(self.p - 1.0) / (2.0 * (self.p + 1.0)) * self.p_norm_power()?)
    }

    /// The same action through the quadratic-form identity,
    /// `s_ω = ((p-1)/(2(p+1))) (Q(φ) + ω ‖φ‖²)`; agreement with
    /// [`Self::action_closed_form`] tests the Nehari identity of the profile.
    pub fn action_via_q(&self) -> Result<f64> {
        let q_form = self.q_form_quadrature()?;
        let m2 = 2.0 * self.mass_quadrature()?;
        Ok((self.p - 1.0) / (2.0 * (self.p + 1.0)) * (q_form + self.omega * m2))
    }

    /// Quadratic form `Q(φ) = k ∫ φ'² + vertex term` by quadrature.
    pub fn q_form_quadrature(&self) -> Result<f64> {
        let kf = self.k as f64;
        let phi0 = self.profile(0.0);
        let vertex = match self.kind {
            StarKind::Delta => self.gamma * phi0 * phi0,
            // Robin form of the delta' coupling: (1/gamma) |Σ_e ψ_e(0)|².
            StarKind::DeltaPrime => (kf * phi0).powi(2) / self.gamma,
        };
        let grad2 = if self.omega == 0.0 {
            let a = self.tail_slope();
            let b = self.b_zero()?;
            let q = 2.0 / (self.p - 1.0);
            // ∫ (a q)² (a x + b)^{-2q-2} dx, exact.
            let e = 2.0 * q + 1.0;
            (a * q).powi(2) * b.powf(-e) / (a * e)
        } else {
            let b = self.b_omega()?;
            let c = 0.5 * (self.p - 1.0) * self.omega.sqrt();
            let q = 2.0 / (self.p - 1.0);
            let a2w = self.amplitude().powi(2) * self.omega;
            let integrand = |z: f64| {
                let ch = z.cosh();
                ch * ch * z.sinh().powf(-2.0 * (q + 1.0))
            };
            let upper = b + 40.0 + 80.0 / (2.0 * q);
            a2w / c * adaptive_simpson(&integrand, b, upper, 1e-13)
        };
        Ok(kf * grad2 + vertex)
    }

    /// Samples the profile on every edge of a star-shaped domain.
    pub fn interpolate(&self, domain: &Arc<Domain>) -> Result<GraphFunction> {
        if domain.graph.num_vertices() != 1 || domain.graph.num_edges() != self.k {
            return Err(Error::Graph(format!(
                "domain is not a star with {} edges",
                self.k
            )));
        }
        Ok(GraphFunction::from_fn(domain, |_, x| self.profile(x)))
    }
}

/// Adaptive Simpson quadrature with Richardson acceptance test.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + rec(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    let tol = rel_tol * whole.abs().max(1e-300);
    rec(f, a, fa, b, fb, whole, m, fm, tol, 48)
}
