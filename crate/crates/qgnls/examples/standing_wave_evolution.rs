//! Time integration: conservation, standing-wave behavior, reversibility.
//!
//! The stepper is a relaxation variant of Crank-Nicolson. Three properties
//! are demonstrated on the reference star:
//!   1. discrete mass is conserved to round-off and energy to O(dt²),
//!   2. a ground state evolves by a pure phase, staying on its orbit,
//!   3. conjugating the final state and handing back the relaxation weight
//!      retraces the trajectory to the initial state exactly.

use qgnls::dynamics::{self, EvolveOptions};
use qgnls::graph::Domain;
use qgnls::operator::DiscreteOperator;
use qgnls::solvers::{self, SolveOptions};
use qgnls::vertex::MatrixCondition;

fn main() -> qgnls::Result<()> {
    let (p, omega) = (3.0, 0.125);
    let domain = Domain::star(4, 0.02, 40.0)?;
    let cond = MatrixCondition::delta(4, -2.0)?.to_projector_form()?;
    let op = DiscreteOperator::assemble(&domain, &[cond])?;

    let gs = solvers::minimize_action(&op, p, omega, &SolveOptions::default())?;
    let u0 = gs.profile.to_complex();

    let opts = EvolveOptions { dt: 1e-3, t_end: 2.0, ..Default::default() };
    let traj = dynamics::evolve(&op, &u0, p, &opts)?;

    let drift = |s: &[f64]| {
        s.iter().map(|v| (v - s[0]).abs()).fold(0.0, f64::max) / s[0].abs()
    };
    println!("steps            {}", traj.steps);
    println!("mass drift       {:.2e} (relative)", drift(&traj.mass_series));
    println!("energy drift     {:.2e} (relative)", drift(&traj.energy_series));

    // Orbit distance: the standing wave never leaves {e^{iθ} φ}.
    let dist = dynamics::orbit_distances(&op, &traj.snapshots, &u0);
    println!("max orbit dist   {:.2e}", dist.iter().cloned().fold(0.0, f64::max));

    // Reverse the flow: conjugate the state, reuse the final relaxation
    // weight, run the same number of steps, conjugate again.
    let mut back = traj.final_state.clone();
    for edge in back.values_mut() {
        for v in edge.iter_mut() {
            *v = v.conj();
        }
    }
    let back_opts = EvolveOptions {
        dt: opts.dt,
        t_end: traj.steps as f64 * traj.dt,
        phi_init: Some(traj.phi_final.clone()),
        ..Default::default()
    };
    let rev = dynamics::evolve(&op, &back, p, &back_opts)?;
    let mut err = 0.0f64;
    for (ve, vs) in rev.final_state.values().iter().zip(u0.values()) {
        for (a, b) in ve.iter().zip(vs) {
            err = err.max((a.conj() - b).norm());
        }
    }
    println!("reversal error   {:.2e} (sup norm after {} + {} steps)", err, traj.steps, rev.steps);
    Ok(())
}
