//! Mass of the ground state as a function of frequency.
//!
//! Sweeps the action minimizer across the existence window (0, -λ_min) on
//! the reference δ star and prints M(φ_ω) next to the closed form
//! K(|γ|/K - √ω) valid for p = 3. The mass decreases strictly in ω while
//! the action value increases; both trends are visible in the table.

use qgnls::graph::Domain;
use qgnls::operator::DiscreteOperator;
use qgnls::solvers::{self, SolveOptions};
use qgnls::spectral::StarKind;
use qgnls::star::StarParams;
use qgnls::vertex::MatrixCondition;

fn main() -> qgnls::Result<()> {
    let (k, gamma, p) = (4, -2.0, 3.0);
    let domain = Domain::star(k, 0.01, 90.0)?;
    let cond = MatrixCondition::delta(k, gamma)?.to_projector_form()?;
    let op = DiscreteOperator::assemble(&domain, &[cond])?;

    let omegas: Vec<f64> = (1..=12).map(|j| 0.02 * j as f64).collect();
    let rows = solvers::mass_curve(&op, p, &omegas, 2, &SolveOptions::default())?;

    println!(
        "{:>6} {:>14} {:>14} {:>10} {:>14}",
        "omega", "mass", "closed form", "rel diff", "s_omega"
    );
    for row in &rows {
        let closed = StarParams::new(k, gamma, StarKind::Delta, p, row.omega)?.mass_closed_form()?;
        println!(
            "{:>6} {:>14.8} {:>14.8} {:>10.2e} {:>14.8}",
            row.omega,
            row.mass,
            closed,
            (row.mass - closed).abs() / closed,
            row.s_omega
        );
    }

    let masses: Vec<f64> = rows.iter().map(|r| r.mass).collect();
    let actions: Vec<f64> = rows.iter().map(|r| r.s_omega).collect();
    println!("\nmass strictly decreasing: {}", masses.windows(2).all(|w| w[0] > w[1]));
    println!("action strictly increasing: {}", actions.windows(2).all(|w| w[0] < w[1]));
    Ok(())
}
