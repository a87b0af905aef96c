//! Ground state at fixed mass, and its consistency with the fixed-frequency
//! route.
//!
//! The constrained minimizer of the energy at mass m solves the same
//! stationary equation as the action minimizer; its frequency appears as a
//! Lagrange multiplier. Minimizing the action at ω, reading off the mass of
//! the result, and minimizing the energy at exactly that mass must
//! therefore close a loop: the recovered multiplier equals ω and
//! E + ω m equals s_ω.

use qgnls::graph::Domain;
use qgnls::operator::DiscreteOperator;
use qgnls::solvers::{self, SolveOptions};
use qgnls::vertex::MatrixCondition;

fn main() -> qgnls::Result<()> {
    let domain = Domain::star(4, 0.02, 60.0)?;
    let cond = MatrixCondition::delta(4, -2.0)?.to_projector_form()?;
    let op = DiscreteOperator::assemble(&domain, &[cond])?;
    let p = 3.0;

    // Direct fixed-mass solve.
    let m = 0.45;
    let gs = solvers::minimize_energy_fixed_mass(&op, p, m, &SolveOptions::default())?;
    println!("fixed-mass solve at m = {m}:");
    println!("  status            {:?}", gs.status);
    println!("  recovered omega   {:.8}", gs.omega);
    println!("  energy            {:.8}", gs.energy);
    println!("  mass              {:.10} (constraint)", gs.mass);
    println!("  stationarity      {:.2e}", gs.grad_norm);

    // Round trip through the action route at a chosen frequency.
    let check = solvers::energy_vs_action_check(&op, p, 0.125, &SolveOptions::default())?;
    println!("\nduality loop at omega = {}:", check.omega);
    println!("  action route s_w      {:.10}", check.action_value);
    println!("  its mass              {:.10}", check.mass);
    println!("  energy route E        {:.10}", check.energy_value);
    println!("  recovered omega       {:.10} (gap {:.2e})", check.omega_recovered, check.omega_gap);
    println!("  E + omega m           {:.10} (gap {:.2e})", check.action_from_energy, check.action_gap);

    // Supercritical mass on this star: the infimum is not attained and the
    // minimizing sequence spreads along the half-lines. The solver flags it.
    let spread = solvers::minimize_energy_fixed_mass(&op, p, 2.5, &SolveOptions::default())?;
    println!("\nfixed-mass solve at m = 2.5 (above the existence threshold):");
    println!("  recovered omega   {:.6} (nonpositive: no bound state)", spread.omega);
    for w in &spread.warnings {
        println!("  warning: {w}");
    }
    Ok(())
}
