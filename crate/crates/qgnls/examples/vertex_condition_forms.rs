//! Vertex conditions: matrix form, projector form, and the round trip.
//!
//! A self-adjoint coupling at a degree-d vertex can be written as
//! A Ψ + B Ψ' = 0 with rank [A B] = d and A Bᴴ Hermitian, or equivalently
//! through orthogonal projectors (Dirichlet, Neumann and Robin parts plus a
//! Hermitian map Λ on the Robin part). The projector form is canonical, so
//! converting to matrices and back must reproduce it exactly.

use nalgebra::DMatrix;
use num_complex::Complex64;
use qgnls::vertex::MatrixCondition;

fn show(label: &str, cond: &MatrixCondition) -> qgnls::Result<()> {
    let check = cond.check_self_adjoint();
    let proj = cond.to_projector_form()?;
    let dim_of = |m: &nalgebra::DMatrix<Complex64>| m.trace().re.round() as usize;
    println!(
        "{label:<22} rank[A B] {}   Dirichlet {}   Neumann {}   Robin {}",
        check.rank_ab,
        dim_of(proj.p_d()),
        dim_of(proj.p_n()),
        dim_of(proj.p_r()),
    );

    // Round trip: projectors -> (A, B) -> projectors is the identity on the
    // canonical form.
    let proj2 = proj.to_matrix_form().to_projector_form()?;
    let gap = [
        (proj.p_d(), proj2.p_d()),
        (proj.p_n(), proj2.p_n()),
        (proj.p_r(), proj2.p_r()),
        (proj.lambda(), proj2.lambda()),
    ]
    .iter()
    .map(|(x, y)| (*x - *y).iter().map(|z| z.norm()).fold(0.0f64, f64::max))
    .fold(0.0, f64::max);
    println!("{:<22} round-trip gap {:.2e}", "", gap);
    Ok(())
}

fn main() -> qgnls::Result<()> {
    show("delta (gamma=-2)", &MatrixCondition::delta(4, -2.0)?)?;
    show("delta (gamma=0)", &MatrixCondition::delta(3, 0.0)?)?;
    show("delta' (gamma=-0.7)", &MatrixCondition::delta_prime(2, -0.7)?)?;
    show("kirchhoff", &MatrixCondition::kirchhoff(5)?)?;
    show("dirichlet", &MatrixCondition::dirichlet(3)?)?;

    // A hand-written matrix pair: delta of strength -1.5 on three edges.
    let a = DMatrix::from_row_slice(3, 3, &[
        1.0, -1.0, 0.0,
        0.0, 1.0, -1.0,
        1.5, 0.0, 0.0,
    ]);
    let b = DMatrix::from_row_slice(3, 3, &[
        0.0, 0.0, 0.0,
        0.0, 0.0, 0.0,
        1.0, 1.0, 1.0,
    ]);
    let custom = MatrixCondition::from_real(&a, &b)?;
    show("matrix pair (delta)", &custom)?;

    // An admissible trace: continuous value c with derivative sum gamma*c.
    let c = Complex64::new(0.8, 0.0);
    let trace = [c, c, c];
    let dtrace = [-1.5 * c / 3.0; 3];
    println!("\nresidual of an admissible trace (original pair): {:.2e}", custom.residual(&trace, &dtrace));
    let back = custom.to_projector_form()?.to_matrix_form();
    println!("residual of the same trace (round-tripped pair): {:.2e}", back.residual(&trace, &dtrace));

    // A pair with a non-Hermitian A Bᴴ: flagged by the check, and the
    // projector decomposition refuses to produce one.
    let bad_b = DMatrix::from_row_slice(3, 3, &[
        0.0, 1.0, 0.0,
        0.0, 0.0, 0.0,
        1.0, 1.0, 1.0,
    ]);
    let bad = MatrixCondition::from_real(&a, &bad_b)?;
    let check = bad.check_self_adjoint();
    println!(
        "\nnon-self-adjoint pair: rank [A B] {}, Hermitian defect {:.2e}, self-adjoint {}",
        check.rank_ab, check.hermitian_defect, check.is_self_adjoint
    );
    match bad.to_projector_form() {
        Err(e) => println!("projector decomposition rejects it: {e}"),
        Ok(_) => println!("projector decomposition unexpectedly succeeded"),
    }
    Ok(())
}
