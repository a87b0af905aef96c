//! Time integration of `i ∂_t u = H u + |u|^{p-1} u` and the orbital
//! stability experiment built on it.
//!
//! The stepper is the relaxation variant of Crank-Nicolson: the nonlinear
//! weight is carried by an auxiliary sequence on staggered half-steps,
//!
//!   Φ^{n+1/2} = 2 |u^n|^{p-1} - Φ^{n-1/2},
//!   (i/dt) M (u^{n+1} - u^n) = ½ (A + W^{n+1/2}) (u^{n+1} + u^n),
//!
//! so each step is one *linear* complex-symmetric solve, the discrete mass
//! `½ u^H M u` is conserved exactly, and the scheme is time reversible: a
//! run can be undone to round-off by conjugating the state and handing the
//! final relaxation weight back in (see [`Trajectory::phi_final`]).
//!
//! A discrete action minimizer is an exact fixed ray of the map: the step
//! multiplies it by the unit number `(i/dt - ω/2) / (i/dt + ω/2)`, so
//! standing waves stay on their phase orbit up to the solver tolerance.

use crate::error::{Error, Result};
use crate::graph::ComplexGraphFunction;
use crate::linalg::{Csr, Skyline};
use crate::operator::DiscreteOperator;
use crate::solvers::{minimize_action, GroundStateResult, SolveOptions, Status};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Controls for the time stepper.
#[derive(Clone, Debug)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Snapshot stride in steps; 0 picks a stride giving about 200 snapshots.
    pub store_every: usize,
    /// Drop the nonlinear term and integrate the linear flow.
    pub linear: bool,
    /// Relaxation weight at the half-step before the initial time, one value
    /// per mesh node; defaults to `|u⁰|^{p-1}`. Hand a previous run's
    /// [`Trajectory::phi_final`] here to continue or reverse it exactly.
    pub phi_init: Option<Vec<f64>>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { dt: 1e-3, t_end: 1.0, store_every: 0, linear: false, phi_init: None }
    }
}

/// Recorded evolution: snapshots at the stored times plus conserved-quantity
/// series, the final state, and the relaxation weight needed to continue.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<ComplexGraphFunction>,
    pub mass_series: Vec<f64>,
    pub energy_series: Vec<f64>,
    pub final_state: ComplexGraphFunction,
    /// Relaxation weight `Φ^{N+1/2}` on mesh nodes; feeding it to a follow-up
    /// run (conjugated state for reversal) continues the staggered sequence
    /// without a restart defect.
    pub phi_final: Vec<f64>,
    pub steps: usize,
    pub dt: f64,
}

fn hermitian_red(m: &Csr, u: &[Complex64], tmp: &mut [Complex64]) -> f64 {
    m.matvec(u, tmp);
    u.iter().zip(tmp.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Integrates the equation from `u0` over `[0, t_end]`.
///
/// The step count is `round(t_end / dt)` (at least 1) and the step actually
/// used is `t_end / steps`, so the final time is hit exactly.
pub fn evolve(
    op: &DiscreteOperator,
    u0: &ComplexGraphFunction,
    p: f64,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    if !(opts.dt > 0.0) || !opts.dt.is_finite() {
        return Err(Error::Validation(format!("time step must be positive, got {}", opts.dt)));
    }
    if !(opts.t_end > 0.0) || !opts.t_end.is_finite() {
        return Err(Error::Validation(format!("final time must be positive, got {}", opts.t_end)));
    }
    if !opts.linear && !(p > 1.0) {
        return Err(Error::Validation(format!("power must satisfy p > 1, got {p}")));
    }
    let n = op.n_reduced();
    let n_full = op.n_full();
    let steps = (opts.t_end / opts.dt).round().max(1.0) as usize;
    let dt = opts.t_end / steps as f64;
    let stride = match opts.store_every {
        0 => steps.div_ceil(200).max(1),
        s => s,
    };

    let mut u = op.to_reduced(u0);
    let a = op.quadratic_matrix();
    let m = op.mass_matrix();
    let weights = op.lumped_weights();

    let mut full = vec![Complex64::ZERO; n_full];
    let mut full_b = vec![Complex64::ZERO; n_full];
    let mut tmp_a = vec![Complex64::ZERO; n];
    let mut tmp_m = vec![Complex64::ZERO; n];
    let mut rhs = vec![Complex64::ZERO; n];
    let mut d_full = vec![0.0; n_full];

    // Relaxation weight at the trailing half-step.
    op.expand(&u, &mut full);
    let mut phi = match &opts.phi_init {
        Some(v) => {
            if v.len() != n_full {
                return Err(Error::Validation(format!(
                    "phi_init has {} entries, mesh has {n_full} nodes",
                    v.len()
                )));
            }
            v.clone()
        }
        None if opts.linear => vec![0.0; n_full],
        None => full.iter().map(|z| z.norm().powf(p - 1.0)).collect(),
    };

    let mut sky = Skyline::<Complex64>::from_union_profile(n, &[a, m]);
    let idt = Complex64::new(0.0, 1.0 / dt);
    let half = Complex64::new(0.5, 0.0);

    let energy_of = |u: &[Complex64],
                     full: &mut [Complex64],
                     tmp: &mut [Complex64]|
     -> f64 {
        a.matvec(u, tmp);
        let quad: f64 = u.iter().zip(tmp.iter()).map(|(x, y)| (x.conj() * y).re).sum();
        if opts.linear {
            return 0.5 * quad;
        }
        op.expand(u, full);
        let pot: f64 = full
            .iter()
            .zip(weights)
            .map(|(z, w)| w * z.norm().powf(p + 1.0))
            .sum();
        0.5 * quad + pot / (p + 1.0)
    };

    let mut times = vec![0.0];
    let mut snapshots = vec![op.from_reduced(&u)];
    let mut mass_series = vec![0.5 * hermitian_red(m, &u, &mut tmp_m)];
    let mut energy_series = vec![energy_of(&u, &mut full, &mut tmp_a)];
    let mass0 = mass_series[0];

    for step in 0..steps {
        // Advance the staggered weight to the midpoint of this step.
        if !opts.linear {
            op.expand(&u, &mut full);
            for i in 0..n_full {
                phi[i] = 2.0 * full[i].norm().powf(p - 1.0) - phi[i];
            }
        }

        // Left-hand matrix (i/dt) M - ½ (A + W); complex symmetric.
        sky.clear();
        sky.add_csr(idt, m);
        sky.add_csr(-half, a);
        if !opts.linear {
            for i in 0..n_full {
                d_full[i] = weights[i] * phi[i];
            }
            op.add_reduced_diagonal(&d_full, -half, &mut sky);
        }
        sky.factor_ldlt().map_err(|e| {
            Error::LinearSolve(format!("time-step matrix factorization failed: {e}"))
        })?;

        // Right-hand side (i/dt) M u + ½ (A + W) u.
        a.matvec(&u, &mut tmp_a);
        m.matvec(&u, &mut tmp_m);
        if opts.linear {
            for i in 0..n {
                rhs[i] = idt * tmp_m[i] + half * tmp_a[i];
            }
        } else {
            op.expand(&u, &mut full);
            for i in 0..n_full {
                full_b[i] = full[i].scale(d_full[i]);
            }
            op.restrict(&full_b, &mut rhs);
            for i in 0..n {
                rhs[i] = idt * tmp_m[i] + half * (tmp_a[i] + rhs[i]);
            }
        }
        sky.solve(&mut rhs);
        std::mem::swap(&mut u, &mut rhs);

        let t = (step + 1) as f64 * dt;
        let record = (step + 1) % stride == 0 || step + 1 == steps;
        if record || (step + 1) % 25 == 0 {
            let mass = 0.5 * hermitian_red(m, &u, &mut tmp_m);
            if !mass.is_finite() || mass > 10.0 * mass0 + 1.0 {
                return Err(Error::NonConvergence(format!(
                    "solution blew up at t = {t:.6} (mass {mass:.3e})"
                )));
            }
            if record {
                times.push(t);
                snapshots.push(op.from_reduced(&u));
                mass_series.push(mass);
                energy_series.push(energy_of(&u, &mut full, &mut tmp_a));
            }
        }
    }

    // One more recursion gives Φ^{N+1/2}, the weight a follow-up run needs.
    if !opts.linear {
        op.expand(&u, &mut full);
        for i in 0..n_full {
            phi[i] = 2.0 * full[i].norm().powf(p - 1.0) - phi[i];
        }
    }

    Ok(Trajectory {
        times,
        snapshots,
        mass_series,
        energy_series,
        final_state: op.from_reduced(&u),
        phi_final: phi,
        steps,
        dt,
    })
}

/// H¹ pairings of a batch of states against a fixed reference: returns
/// ‖r‖²_{H¹} and, per state, (‖u‖²_{H¹}, ⟨u, r⟩_{H¹}). The reference is
/// premultiplied by S + M once, so each state costs two matvecs.
fn h1_pairings(
    op: &DiscreteOperator,
    states: &[ComplexGraphFunction],
    reference: &ComplexGraphFunction,
) -> (f64, Vec<(f64, Complex64)>) {
    let n = op.n_reduced();
    let s = op.stiffness_matrix();
    let m = op.mass_matrix();
    let r = op.to_reduced(reference);
    let mut h1_r = vec![Complex64::ZERO; n];
    let mut tmp = vec![Complex64::ZERO; n];
    s.matvec(&r, &mut h1_r);
    m.matvec(&r, &mut tmp);
    for i in 0..n {
        h1_r[i] += tmp[i];
    }
    let r_sq: f64 = r.iter().zip(&h1_r).map(|(a, b)| (a.conj() * b).re).sum();

    let mut out = Vec::with_capacity(states.len());
    for state in states {
        let u = op.to_reduced(state);
        let u_sq = hermitian_red(s, &u, &mut tmp) + hermitian_red(m, &u, &mut tmp);
        let z: Complex64 = u.iter().zip(&h1_r).map(|(a, b)| a.conj() * b).sum();
        out.push((u_sq, z));
    }
    (r_sq, out)
}

/// H¹ distance from each state to the phase orbit of `reference`, that is
/// inf over θ of ‖u − e^{iθ} r‖_{H¹}. The infimum is attained at the phase
/// of ⟨u, r⟩ and equals √(‖u‖² + ‖r‖² − 2|⟨u, r⟩|), so no θ search is
/// involved.
pub fn orbit_distances(
    op: &DiscreteOperator,
    states: &[ComplexGraphFunction],
    reference: &ComplexGraphFunction,
) -> Vec<f64> {
    let (r_sq, pairs) = h1_pairings(op, states, reference);
    pairs
        .into_iter()
        .map(|(u_sq, z)| (u_sq + r_sq - 2.0 * z.norm()).max(0.0).sqrt())
        .collect()
}

/// Controls for the stability experiment.
#[derive(Clone, Debug)]
pub struct StabilityOptions {
    /// H¹ size of the random perturbation added to the ground state.
    pub epsilon: f64,
    /// Seed of the perturbation generator; runs are reproducible bit for bit.
    pub seed: u64,
    pub dt: f64,
    pub t_end: f64,
    pub store_every: usize,
    pub solver: SolveOptions,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            epsilon: 1e-2,
            seed: 42,
            dt: 1e-3,
            t_end: 10.0,
            store_every: 0,
            solver: SolveOptions::default(),
        }
    }
}

/// Outcome of perturbing a ground state and following the flow.
#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub omega: f64,
    pub epsilon: f64,
    pub ground_state: GroundStateResult,
    pub times: Vec<f64>,
    /// H¹ distance to the phase orbit `{e^{iθ} φ}` at each stored time,
    /// with the minimizing phase found in closed form.
    pub distances: Vec<f64>,
    /// Discrete mass at each stored time.
    pub mass_series: Vec<f64>,
    /// Discrete energy at each stored time.
    pub energy_series: Vec<f64>,
    pub initial_distance: f64,
    pub max_distance: f64,
    pub final_distance: f64,
    /// Same maximum with the phase restricted to a 256-point grid; an upper
    /// bound on the exact value, reported as a cross-check.
    pub grid_max_distance: f64,
    /// Largest relative drift of the conserved mass over the run.
    pub mass_drift: f64,
    pub energy_drift: f64,
}

/// Computes the action ground state at `ω`, adds a reproducible random H¹
/// perturbation of size `ε`, evolves, and records the distance to the
/// ground-state orbit over time.
pub fn orbital_stability_experiment(
    op: &DiscreteOperator,
    p: f64,
    omega: f64,
    opts: &StabilityOptions,
) -> Result<StabilityReport> {
    if !(opts.epsilon >= 0.0) || !opts.epsilon.is_finite() {
        return Err(Error::Validation(format!("epsilon must be >= 0, got {}", opts.epsilon)));
    }
    let gs = minimize_action(op, p, omega, &opts.solver)?;
    if gs.status != Status::Converged {
        return Err(Error::NonConvergence(format!(
            "no ground state to perturb at omega = {omega} (status {:?})",
            gs.status
        )));
    }
    let n = op.n_reduced();
    let phi_red = op.to_reduced(&gs.profile);

    // Reproducible rough perturbation: i.i.d. uniform nodal values,
    // normalized in H¹.
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut eta: Vec<f64> = (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
    let h1 = op.reduced_h1(&eta);
    for v in eta.iter_mut() {
        *v *= opts.epsilon / h1;
    }

    let u0_red: Vec<Complex64> = phi_red
        .iter()
        .zip(&eta)
        .map(|(&a, &b)| Complex64::new(a + b, 0.0))
        .collect();
    let u0 = op.from_reduced(&u0_red);

    let evolve_opts = EvolveOptions {
        dt: opts.dt,
        t_end: opts.t_end,
        store_every: opts.store_every,
        linear: false,
        phi_init: None,
    };
    let traj = evolve(op, &u0, p, &evolve_opts)?;

    let phi_c = gs.profile.to_complex();
    let (phi_sq, pairs) = h1_pairings(op, &traj.snapshots, &phi_c);
    let mut distances = Vec::with_capacity(pairs.len());
    let mut grid_max = 0.0f64;
    for &(u_sq, z) in &pairs {
        distances.push((u_sq + phi_sq - 2.0 * z.norm()).max(0.0).sqrt());
        let best = (0..256)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / 256.0;
                (z * Complex64::new(theta.cos(), theta.sin())).re
            })
            .fold(f64::NEG_INFINITY, f64::max);
        grid_max = grid_max.max((u_sq + phi_sq - 2.0 * best).max(0.0).sqrt());
    }

    let rel_drift = |series: &[f64]| -> f64 {
        let base = series[0];
        series
            .iter()
            .map(|v| (v - base).abs())
            .fold(0.0, f64::max)
            / base.abs().max(1e-300)
    };

    Ok(StabilityReport {
        omega,
        epsilon: opts.epsilon,
        initial_distance: distances[0],
        max_distance: distances.iter().cloned().fold(0.0, f64::max),
        final_distance: *distances.last().expect("at least one snapshot"),
        grid_max_distance: grid_max,
        mass_drift: rel_drift(&traj.mass_series),
        energy_drift: rel_drift(&traj.energy_series),
        times: traj.times,
        distances,
        mass_series: traj.mass_series,
        energy_series: traj.energy_series,
        ground_state: gs,
    })
}
