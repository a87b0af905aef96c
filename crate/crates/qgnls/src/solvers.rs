//! Variational solvers for standing-wave profiles.
//!
//! Two routes to the same objects:
//!
//! * [`minimize_action`]: unconstrained global minimization of the action
//!   `S_ω(ψ) = ½ Q(ψ) + ½ ω ‖ψ‖² + ‖ψ‖_{p+1}^{p+1} / (p+1)` at fixed
//!   frequency. For the defocusing nonlinearity the action is coercive and
//!   its global minimum is the ground state whenever `ω` lies below the
//!   spectral gap, and the zero function otherwise.
//! * [`minimize_energy_fixed_mass`]: Riemannian descent for the energy on the
//!   manifold `½ ‖ψ‖² = m`, recovering the frequency as the Lagrange
//!   multiplier.
//!
//! Both use spectrally preconditioned Barzilai-Borwein steps (preconditioner
//! `P = Cᵀ(S + M)C`, factored once per solve) with a nonmonotone line search,
//! so iteration counts are essentially mesh independent.

use crate::error::{Error, Result};
use crate::graph::GraphFunction;
use crate::linalg::Skyline;
use crate::operator::{DiscreteOperator, OperatorScratch};
use crate::spectral::{bottom_of_spectrum, existence_criterion, ExistenceClass};

/// Iteration controls shared by the solvers.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Relative gradient tolerance; iteration stops when the preconditioned
    /// gradient norm falls below `tol · (1 + ‖ψ‖_{H¹})`.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting profile; defaults to a scaled bottom eigenvector.
    pub init: Option<GraphFunction>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-8, max_iter: 20_000, init: None }
    }
}

/// How a minimization ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// Gradient tolerance reached at a nontrivial profile.
    Converged,
    /// Gradient tolerance reached at (numerically) the zero function: the
    /// infimum of the action is 0 and no nontrivial ground state exists.
    ConvergedToZero,
    /// Iteration budget exhausted.
    MaxIter,
}

/// A computed standing-wave profile with its invariants and diagnostics.
#[derive(Clone, Debug)]
pub struct GroundStateResult {
    pub profile: GraphFunction,
    /// Frequency: the input for the action route, the recovered Lagrange
    /// multiplier for the fixed-mass route.
    pub omega: f64,
    /// Action value `S_ω` at the profile (0 for the zero solution).
    pub s_omega: f64,
    pub energy: f64,
    pub mass: f64,
    /// Final preconditioned gradient norm (action route) or mass-dual
    /// stationarity residual (fixed-mass route).
    pub grad_norm: f64,
    /// Defect `|Q(ψ) + ω ‖ψ‖² + ‖ψ‖_{p+1}^{p+1}| / (‖ψ‖²_{H¹} + 1)`, which
    /// exact discrete critical points satisfy identically.
    pub nehari_residual: f64,
    pub iterations: usize,
    pub status: Status,
    pub warnings: Vec<String>,
}

/// Shared state for preconditioned descent: `P = Cᵀ(S + M)C`, symmetric
/// positive definite on the reduced space for every self-adjoint condition.
struct Preconditioner {
    sky: Skyline<f64>,
}

impl Preconditioner {
    fn build(op: &DiscreteOperator) -> Result<Self> {
        let s = op.stiffness_matrix();
        let m = op.mass_matrix();
        let mut sky = Skyline::<f64>::from_union_profile(op.n_reduced(), &[s, m]);
        sky.add_csr(1.0, s);
        sky.add_csr(1.0, m);
        sky.factor_ldlt()?;
        Ok(Preconditioner { sky })
    }

    /// `out = P⁻¹ r`.
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        out.copy_from_slice(r);
        self.sky.solve(out);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Default starting vector: bottom eigenvector of the quadratic pencil,
/// scaled to the exact ray minimum of the action when the quadratic part is
/// negative along it, and the zero vector otherwise.
fn default_init(op: &DiscreteOperator, p: f64, omega: f64) -> Result<Vec<f64>> {
    let eig = bottom_of_spectrum(op, 1e-8, 500)?;
    let y = op.to_reduced(&eig.eigenvector);
    let a = op.reduced_q(&y) + omega * op.reduced_mass2(&y);
    if a >= 0.0 {
        return Ok(vec![0.0; op.n_reduced()]);
    }
    let c = op.lumped_power(&eig.eigenvector, p + 1.0);
    let mu = (-a / c).powf(1.0 / (p - 1.0));
    Ok(y.into_iter().map(|v| mu * v).collect())
}

/// Fixes the global sign deterministically: the leading trace component at
/// the vertex with the lexicographically smallest id is made nonnegative,
/// falling back to the nodal value of largest magnitude when that trace
/// component vanishes.
fn signed_profile(op: &DiscreteOperator, y: &[f64]) -> GraphFunction {
    let mut f = op.from_reduced(y);
    let ids = f.domain().graph.vertex_ids();
    let v_min = (0..ids.len())
        .min_by(|&a, &b| ids[a].cmp(&ids[b]))
        .expect("graphs have at least one vertex");
    let lead = f.trace(v_min)[0];
    let sup = f.norm_lp(f64::INFINITY).unwrap_or(0.0);
    let sign = if lead.abs() > 1e-12 * sup {
        lead.signum()
    } else {
        let mut extreme = 0.0f64;
        for vals in f.values() {
            for &v in vals {
                if v.abs() > extreme.abs() {
                    extreme = v;
                }
            }
        }
        extreme.signum()
    };
    if sign < 0.0 {
        f.scale(-1.0);
    }
    f
}

/// Fraction of the squared L² norm sitting in the outer 10% of the truncated
/// edges; a large value means mass is escaping toward the artificial
/// boundary and the continuum minimizer is suspect.
pub fn truncation_tail_fraction(f: &GraphFunction) -> f64 {
    let mesh = &f.domain().mesh;
    let mut tail = 0.0;
    let mut total = 0.0;
    for (k, vals) in f.values().iter().enumerate() {
        let em = mesh.edge(k);
        let cut = 0.9 * em.len;
        for (i, &v) in vals.iter().enumerate() {
            let w = if i == 0 || i + 1 == vals.len() { 0.5 } else { 1.0 };
            let contrib = w * em.h * v * v;
            total += contrib;
            if em.truncation.is_some() && i as f64 * em.h >= cut {
                tail += contrib;
            }
        }
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

fn nehari_defect(op: &DiscreteOperator, y: &[f64], f: &GraphFunction, p: f64, omega: f64) -> f64 {
    let q = op.reduced_q(y);
    let m2 = op.reduced_mass2(y);
    let pot = op.lumped_power(f, p + 1.0);
    let h1 = op.reduced_h1(y);
    (q + omega * m2 + pot).abs() / (h1 * h1 + 1.0)
}

/// Minimizes the action `S_ω` over the whole constrained space.
///
/// Returns the ground-state profile when one exists at this frequency and the
/// zero solution (status [`Status::ConvergedToZero`]) when it does not. The
/// frequency must be nonnegative; `p` must exceed 1.
pub fn minimize_action(
    op: &DiscreteOperator,
    p: f64,
    omega: f64,
    opts: &SolveOptions,
) -> Result<GroundStateResult> {
    if !(p > 1.0) {
        return Err(Error::Validation(format!("power must satisfy p > 1, got {p}")));
    }
    if !(omega >= 0.0) || !omega.is_finite() {
        return Err(Error::Validation(format!("frequency must be >= 0, got {omega}")));
    }
    let mut warnings = Vec::new();

    // At the critical frequency with quintic or stronger power, decaying
    // stationary profiles do not exist on graphs made of half-lines only;
    // any discrete minimizer would be a truncation artifact, so the zero
    // solution is returned outright.
    if omega == 0.0 && p >= 5.0 && !op.domain().graph.has_finite_edges() {
        let zero = GraphFunction::zeros(op.domain());
        warnings.push(
            "no decaying profile exists at zero frequency for this power; returning zero".into(),
        );
        return Ok(GroundStateResult {
            profile: zero,
            omega,
            s_omega: 0.0,
            energy: 0.0,
            mass: 0.0,
            grad_norm: 0.0,
            nehari_residual: 0.0,
            iterations: 0,
            status: Status::ConvergedToZero,
            warnings,
        });
    }

    let n = op.n_reduced();
    let mut y = match &opts.init {
        Some(f) => {
            let g = if std::sync::Arc::ptr_eq(&f.domain().clone(), op.domain()) {
                f.clone()
            } else {
                f.resample_onto(op.domain())?
            };
            op.to_reduced(&g)
        }
        None => default_init(op, p, omega)?,
    };

    let pre = Preconditioner::build(op)?;
    let mut scratch = OperatorScratch::default();
    let mut g = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    let mut f_val = op.action_value_grad(&y, p, omega, &mut g, &mut scratch);
    pre.apply(&g, &mut z);
    let mut gz = dot(&g, &z);

    // Nonmonotone Armijo memory.
    let mut recent = [f_val; 10];
    let mut t = 1.0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        let scale = 1.0 + op.reduced_h1(&y);
        if gz.max(0.0).sqrt() <= opts.tol * scale {
            converged = true;
            break;
        }
        iterations += 1;

        let fmax = recent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut accepted = false;
        let mut f_new = f_val;
        for _ in 0..60 {
            for i in 0..n {
                y_new[i] = y[i] - t * z[i];
            }
            f_new = op.action_value_grad(&y_new, p, omega, &mut g_new, &mut scratch);
            if f_new <= fmax - 1e-4 * t * gz && f_new.is_finite() {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // Step collapsed to round-off: the iterate is as stationary as
            // the arithmetic allows.
            converged = gz.max(0.0).sqrt() <= 1e-6 * scale;
            break;
        }

        // Preconditioned Barzilai-Borwein step for the next iteration:
        // sᵀPs / sᵀ(g⁺ - g) with s = -t z, computed without applying P.
        let zg_new = dot(&z, &g_new);
        let denom = gz - zg_new;
        let t_bb = t * gz / denom;
        t = if denom > 0.0 && t_bb.is_finite() {
            t_bb.clamp(1e-10, 1e8)
        } else {
            (t * 4.0).min(1e8)
        };

        std::mem::swap(&mut y, &mut y_new);
        std::mem::swap(&mut g, &mut g_new);
        f_val = f_new;
        recent[iterations % recent.len()] = f_val;
        pre.apply(&g, &mut z);
        gz = dot(&g, &z);
    }

    let grad_norm = gz.max(0.0).sqrt();
    let l2 = op.reduced_mass2(&y).max(0.0).sqrt();
    if converged && l2 < 1e-6 && f_val > -1e-10 {
        let zero = GraphFunction::zeros(op.domain());
        return Ok(GroundStateResult {
            profile: zero,
            omega,
            s_omega: 0.0,
            energy: 0.0,
            mass: 0.0,
            grad_norm,
            nehari_residual: 0.0,
            iterations,
            status: Status::ConvergedToZero,
            warnings,
        });
    }

    let profile = signed_profile(op, &y);
    let tail = truncation_tail_fraction(&profile);
    if tail > 0.01 {
        warnings.push(format!(
            "{:.1}% of the mass sits in the outer tenth of the truncated edges; \
             enlarge the truncation length",
            100.0 * tail
        ));
    }
    let nehari_residual = nehari_defect(op, &y, &profile, p, omega);
    Ok(GroundStateResult {
        s_omega: op.action(&profile, p, omega)?,
        energy: op.energy(&profile, p)?,
        mass: op.mass(&profile),
        omega,
        grad_norm,
        nehari_residual,
        iterations,
        status: if converged { Status::Converged } else { Status::MaxIter },
        profile,
        warnings,
    })
}

/// Minimizes the energy at fixed mass `½ ‖ψ‖² = m` by preconditioned
/// Riemannian descent; the frequency is recovered as the Lagrange multiplier
/// `ω = -⟨E'(ψ), ψ⟩ / ‖ψ‖²`.
pub fn minimize_energy_fixed_mass(
    op: &DiscreteOperator,
    p: f64,
    target_mass: f64,
    opts: &SolveOptions,
) -> Result<GroundStateResult> {
    if !(p > 1.0) {
        return Err(Error::Validation(format!("power must satisfy p > 1, got {p}")));
    }
    if !(target_mass > 0.0) || !target_mass.is_finite() {
        return Err(Error::Validation(format!("mass must be positive, got {target_mass}")));
    }
    let n = op.n_reduced();
    let mut y = match &opts.init {
        Some(f) => {
            let g = if std::sync::Arc::ptr_eq(&f.domain().clone(), op.domain()) {
                f.clone()
            } else {
                f.resample_onto(op.domain())?
            };
            op.to_reduced(&g)
        }
        None => op.to_reduced(&bottom_of_spectrum(op, 1e-8, 500)?.eigenvector),
    };
    let renorm = |y: &mut [f64]| -> Result<()> {
        let m2 = op.mass_matrix().bilinear(y, y);
        if m2 <= 0.0 {
            return Err(Error::NonConvergence(
                "iterate collapsed to zero while enforcing the mass constraint".into(),
            ));
        }
        let s = (2.0 * target_mass / m2).sqrt();
        for v in y.iter_mut() {
            *v *= s;
        }
        Ok(())
    };
    renorm(&mut y)?;

    let pre = Preconditioner::build(op)?;
    let mut scratch = OperatorScratch::default();
    let mut g = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut my = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut zp = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    // Projected preconditioned gradient: d = P⁻¹g - λ P⁻¹My with λ chosen so
    // that dᵀ(My) = 0; then gᵀd ≥ 0 by Cauchy-Schwarz in the P⁻¹ metric.
    let project = |y: &[f64], g: &[f64], my: &mut [f64], d: &mut [f64], zp: &mut [f64], u: &mut Vec<f64>| -> f64 {
        op.mass_matrix().matvec(y, my);
        pre.apply(g, zp);
        pre.apply(my, u);
        let lam = dot(zp, my) / dot(u, my);
        for i in 0..g.len() {
            d[i] = zp[i] - lam * u[i];
        }
        dot(g, d)
    };

    let mut f_val = op.action_value_grad(&y, p, 0.0, &mut g, &mut scratch);
    let mut gd = project(&y, &g, &mut my, &mut d, &mut zp, &mut u);

    let mut recent = [f_val; 10];
    let mut t = 1.0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        let scale = 1.0 + op.reduced_h1(&y);
        if gd.max(0.0).sqrt() <= opts.tol * scale {
            converged = true;
            break;
        }
        iterations += 1;

        let fmax = recent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut accepted = false;
        let mut f_new = f_val;
        for _ in 0..60 {
            for i in 0..n {
                y_new[i] = y[i] - t * d[i];
            }
            renorm(&mut y_new)?;
            f_new = op.action_value_grad(&y_new, p, 0.0, &mut g_new, &mut scratch);
            if f_new <= fmax - 1e-4 * t * gd && f_new.is_finite() {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            converged = gd.max(0.0).sqrt() <= 1e-6 * scale;
            break;
        }

        // Barzilai-Borwein step from the retracted displacement.
        let mut ss = 0.0;
        let mut sdg = 0.0;
        for i in 0..n {
            let s = y_new[i] - y[i];
            ss += s * s;
            sdg += s * (g_new[i] - g[i]);
        }
        t = if sdg > 0.0 && (ss / sdg).is_finite() {
            (ss / sdg).clamp(1e-10, 1e8)
        } else {
            (t * 4.0).min(1e8)
        };

        std::mem::swap(&mut y, &mut y_new);
        std::mem::swap(&mut g, &mut g_new);
        f_val = f_new;
        recent[iterations % recent.len()] = f_val;
        gd = project(&y, &g, &mut my, &mut d, &mut zp, &mut u);
    }

    let m2 = op.mass_matrix().bilinear(&y, &y);
    let omega = -dot(&y, &g) / m2;
    let profile = signed_profile(op, &y);
    let mut warnings = Vec::new();
    let tail = truncation_tail_fraction(&profile);
    if tail > 0.01 {
        warnings.push(format!(
            "{:.1}% of the mass sits in the outer tenth of the truncated edges; \
             the constrained minimizer may not exist at mass {target_mass}",
            100.0 * tail
        ));
    }
    if omega <= 0.0 {
        warnings.push(format!(
            "recovered frequency {omega:.3e} is not positive; the minimizing sequence \
             is spreading and no bound state is expected at this mass"
        ));
    }

    // Stationarity residual of E'(ψ) + ω M ψ in the mass-dual norm.
    let mut r = g.clone();
    op.mass_matrix().matvec(&y, &mut my);
    for i in 0..n {
        r[i] += omega * my[i];
    }
    let grad_norm = op.mass_dual_norm(&r)?;
    let nehari_residual = nehari_defect(op, &y, &profile, p, omega);
    Ok(GroundStateResult {
        s_omega: op.action(&profile, p, omega.max(0.0))?,
        energy: op.energy(&profile, p)?,
        mass: op.mass(&profile),
        omega,
        grad_norm,
        nehari_residual,
        iterations,
        status: if converged { Status::Converged } else { Status::MaxIter },
        profile,
        warnings,
    })
}

/// Constrained gradient norm of the action at an arbitrary profile, measured
/// in the `(S + M)⁻¹` dual norm the solvers use; second-order small in the
/// mesh spacing for samples of a true standing wave.
pub fn stationary_residual(
    op: &DiscreteOperator,
    f: &GraphFunction,
    p: f64,
    omega: f64,
) -> Result<f64> {
    let y = op.to_reduced(f);
    let mut g = vec![0.0; op.n_reduced()];
    let mut scratch = OperatorScratch::default();
    op.action_value_grad(&y, p, omega, &mut g, &mut scratch);
    op.h1_dual_norm(&g)
}

/// One row of a frequency sweep.
#[derive(Clone, Debug)]
pub struct MassCurveRow {
    pub omega: f64,
    pub mass: f64,
    pub s_omega: f64,
    /// `‖φ‖_{p+1}`.
    pub p_norm: f64,
    pub grad_norm: f64,
    pub status: Status,
    pub note: String,
}

/// Sweeps the action minimizer over a frequency grid, warm-starting each
/// solve from its predecessor. The grid is split into `jobs` contiguous
/// blocks solved on separate threads; results depend only on the block
/// boundaries, so repeated runs with the same `jobs` are bit-identical.
pub fn mass_curve(
    op: &DiscreteOperator,
    p: f64,
    omegas: &[f64],
    jobs: usize,
    opts: &SolveOptions,
) -> Result<Vec<MassCurveRow>> {
    if omegas.is_empty() {
        return Err(Error::Validation("empty frequency grid".into()));
    }
    if jobs == 0 {
        return Err(Error::Validation("jobs must be at least 1".into()));
    }
    let jobs = jobs.min(omegas.len());

    let solve_block = |block: &[f64]| -> Result<Vec<MassCurveRow>> {
        let mut rows = Vec::with_capacity(block.len());
        let mut warm: Option<GraphFunction> = None;
        for &omega in block {
            let o = SolveOptions { init: warm.take(), ..opts.clone() };
            let r = minimize_action(op, p, omega, &o)?;
            let note = match r.status {
                Status::Converged => String::new(),
                Status::ConvergedToZero => "zero solution".into(),
                Status::MaxIter => "iteration budget exhausted".into(),
            };
            if r.status == Status::Converged {
                warm = Some(r.profile.clone());
            }
            rows.push(MassCurveRow {
                omega,
                mass: r.mass,
                s_omega: r.s_omega,
                p_norm: op.lumped_power(&r.profile, p + 1.0).powf(1.0 / (p + 1.0)),
                grad_norm: r.grad_norm,
                status: r.status,
                note,
            });
        }
        Ok(rows)
    };

    if jobs == 1 {
        return solve_block(omegas);
    }

    // Contiguous blocks of near-equal size, a pure function of (len, jobs).
    let len = omegas.len();
    let bounds: Vec<usize> = (0..=jobs).map(|j| j * len / jobs).collect();
    let mut results: Vec<Result<Vec<MassCurveRow>>> = Vec::with_capacity(jobs);
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(jobs);
        for j in 0..jobs {
            let block = &omegas[bounds[j]..bounds[j + 1]];
            handles.push(scope.spawn(move || solve_block(block)));
        }
        for h in handles {
            results.push(h.join().expect("mass-curve worker panicked"));
        }
    });
    let mut rows = Vec::with_capacity(len);
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Outcome of the cross-validation between the two variational routes.
#[derive(Clone, Debug)]
pub struct DualityCheck {
    pub omega: f64,
    /// `s_ω` from direct action minimization.
    pub action_value: f64,
    /// Mass of the action minimizer.
    pub mass: f64,
    /// Energy of the fixed-mass minimizer at that mass.
    pub energy_value: f64,
    /// Lagrange multiplier recovered by the fixed-mass route.
    pub omega_recovered: f64,
    /// `E + ω̂ m`, which must reproduce `s_ω`.
    pub action_from_energy: f64,
    /// Relative gap between the two action values.
    pub action_gap: f64,
    /// Absolute gap between the input and recovered frequencies.
    pub omega_gap: f64,
}

/// Runs both variational routes at frequency `ω` and compares them: the
/// fixed-mass minimizer at the action minimizer's mass must recover the same
/// frequency and action value. Declines (with the classification in the
/// error) when no ground state exists at this frequency.
pub fn energy_vs_action_check(
    op: &DiscreteOperator,
    p: f64,
    omega: f64,
    opts: &SolveOptions,
) -> Result<DualityCheck> {
    let eig = bottom_of_spectrum(op, 1e-8, 500)?;
    let class = existence_criterion(eig.lambda_min, omega, p)?;
    if class != ExistenceClass::Exists {
        return Err(Error::Validation(format!(
            "no ground state to cross-validate at omega = {omega}: classification is {class}"
        )));
    }
    let via_action = minimize_action(op, p, omega, opts)?;
    if via_action.status != Status::Converged {
        return Err(Error::NonConvergence(format!(
            "action route ended with status {:?}",
            via_action.status
        )));
    }
    let o2 = SolveOptions { init: Some(via_action.profile.clone()), ..opts.clone() };
    let via_energy = minimize_energy_fixed_mass(op, p, via_action.mass, &o2)?;
    if via_energy.status != Status::Converged {
        return Err(Error::NonConvergence(format!(
            "fixed-mass route ended with status {:?}",
            via_energy.status
        )));
    }
    let action_from_energy = via_energy.energy + via_energy.omega * via_energy.mass;
    Ok(DualityCheck {
        omega,
        action_value: via_action.s_omega,
        mass: via_action.mass,
        energy_value: via_energy.energy,
        omega_recovered: via_energy.omega,
        action_from_energy,
        action_gap: (via_action.s_omega - action_from_energy).abs()
            / via_action.s_omega.abs().max(1e-300),
        omega_gap: (via_energy.omega - omega).abs(),
    })
}
