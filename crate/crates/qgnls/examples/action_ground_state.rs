//! Ground state of the defocusing equation at fixed frequency.
//!
//! On a star of 4 half-lines with δ coupling γ = -2, power p = 3 and
//! ω = 1/8, the action minimizer has an explicit sech-type form, so every
//! number printed here can be compared against an analytic value.

use qgnls::graph::Domain;
use qgnls::operator::DiscreteOperator;
use qgnls::solvers::{self, SolveOptions};
use qgnls::spectral::StarKind;
use qgnls::star::StarParams;
use qgnls::vertex::MatrixCondition;

fn main() -> qgnls::Result<()> {
    let (k, gamma, p, omega) = (4, -2.0, 3.0, 0.125);
    let domain = Domain::star(k, 0.01, 40.0)?;
    let cond = MatrixCondition::delta(k, gamma)?.to_projector_form()?;
    let op = DiscreteOperator::assemble(&domain, &[cond])?;

    let gs = solvers::minimize_action(&op, p, omega, &SolveOptions::default())?;
    let exact = StarParams::new(k, gamma, StarKind::Delta, p, omega)?;

    println!("status      {:?} after {} iterations", gs.status, gs.iterations);
    println!("mass        {:.10}   closed form {:.10}", gs.mass, exact.mass_closed_form()?);
    println!("action s_w  {:.10}   closed form {:.10}", gs.s_omega, exact.action_closed_form()?);
    println!("peak phi(0) {:.10}   closed form {:.10}", gs.profile.values()[0][0], exact.profile(0.0));
    println!("nehari residual     {:.2e}", gs.nehari_residual);
    println!("gradient norm       {:.2e}", gs.grad_norm);
    println!(
        "stationary residual {:.2e}",
        solvers::stationary_residual(&op, &gs.profile, p, omega)?
    );

    // Pointwise comparison along one edge.
    let sampled = exact.interpolate(op.domain())?;
    let sup = gs
        .profile
        .values()
        .iter()
        .zip(sampled.values())
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    println!("sup deviation from closed form: {sup:.2e}");

    println!("\nx      numeric     closed form");
    for i in (0..=2000).step_by(400) {
        let x = i as f64 * 0.01;
        println!("{:<6} {:.8}  {:.8}", x, gs.profile.values()[0][i], exact.profile(x));
    }
    Ok(())
}
