//! Acceptance checks at desk scale: star graphs, h = 0.01, truncation <= 200.
//!
//! Each test covers one numbered criterion end to end and prints a single
//! `ACCEPTANCE criterion N <label>: PASS|FAIL` line (shown live under
//! `cargo test -- --nocapture`, or in the captured output of a failing
//! test). A failing criterion panics with every measured violation.

use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qgnls::dynamics::{evolve, orbital_stability_experiment, EvolveOptions, StabilityOptions};
use qgnls::graph::{Domain, GraphFunction};
use qgnls::operator::DiscreteOperator;
use qgnls::solvers::{
    mass_curve, minimize_action, minimize_energy_fixed_mass, stationary_residual,
    GroundStateResult, SolveOptions, Status,
};
use qgnls::spectral::{bottom_of_spectrum, StarKind};
use qgnls::star::StarParams;
use qgnls::vertex::MatrixCondition;
use qgnls::Error;

const H: f64 = 0.01;

fn star_op(k: usize, gamma: f64, kind: StarKind, h: f64, t: f64) -> DiscreteOperator {
    let domain = Domain::star(k, h, t).unwrap();
    let cond = match kind {
        StarKind::Delta => MatrixCondition::delta(k, gamma).unwrap(),
        StarKind::DeltaPrime => MatrixCondition::delta_prime(k, gamma).unwrap(),
    };
    DiscreteOperator::assemble(&domain, &[cond.to_projector_form().unwrap()]).unwrap()
}

fn reference_star() -> StarParams {
    StarParams::new(4, -2.0, StarKind::Delta, 3.0, 0.125).unwrap()
}

fn verdict(n: usize, label: &str, secs: f64, failures: Vec<String>) {
    if failures.is_empty() {
        println!("ACCEPTANCE criterion {n} {label}: PASS ({secs:.1}s)");
    } else if failures.len() == 1 {
        println!("ACCEPTANCE criterion {n} {label}: FAIL ({})", failures[0]);
        panic!("criterion {n} ({label}) failed after {secs:.1}s:\n  {}", failures[0]);
    } else {
        println!(
            "ACCEPTANCE criterion {n} {label}: FAIL ({} checks failed; first: {})",
            failures.len(),
            failures[0]
        );
        panic!(
            "criterion {n} ({label}) failed after {secs:.1}s:\n  {}",
            failures.join("\n  ")
        );
    }
}

fn sup_gap(a: &GraphFunction, b: &GraphFunction) -> f64 {
    let mut sup = 0.0f64;
    for (ea, eb) in a.values().iter().zip(b.values()) {
        for (x, y) in ea.iter().zip(eb) {
            sup = sup.max((x - y).abs());
        }
    }
    sup
}

fn h1_gap(a: &GraphFunction, b: &GraphFunction) -> f64 {
    let mut diff = a.clone();
    diff.axpy(-1.0, b).unwrap();
    diff.norm_h1()
}

#[test]
fn criterion_1_star_spectrum_bottoms() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let cases = [
        ("delta", StarKind::Delta, -0.25, 2e-3),
        ("delta'", StarKind::DeltaPrime, -4.0, 2e-2),
    ];
    for (name, kind, expect, tol) in cases {
        let start = Instant::now();
        let op = star_op(4, -2.0, kind, H, 40.0);
        let r = bottom_of_spectrum(&op, 1e-8, 500).unwrap();
        let secs = start.elapsed().as_secs_f64();
        if (r.lambda_min - expect).abs() > tol {
            failures.push(format!(
                "{name} star: lambda_min {} vs {expect} (tol {tol:.0e})",
                r.lambda_min
            ));
        }
        if secs > 5.0 {
            failures.push(format!("{name} star took {secs:.1}s (budget 5s)"));
        }
    }
    verdict(1, "star spectrum bottoms", t0.elapsed().as_secs_f64(), failures);
}

#[test]
fn criterion_2_closed_form_ground_state() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let op = star_op(4, -2.0, StarKind::Delta, H, 40.0);
    let gs = minimize_action(&op, 3.0, 0.125, &SolveOptions::default()).unwrap();
    if gs.status != Status::Converged {
        failures.push(format!("solver status {:?}", gs.status));
    }
    let exact = reference_star().interpolate(op.domain()).unwrap();
    let sup = sup_gap(&gs.profile, &exact);
    let h1 = h1_gap(&gs.profile, &exact);
    if sup > 1e-3 {
        failures.push(format!("sup error {sup:.2e} (tol 1e-3)"));
    }
    if h1 > 5e-3 {
        failures.push(format!("H1 error {h1:.2e} (tol 5e-3)"));
    }
    let secs = t0.elapsed().as_secs_f64();
    if secs > 30.0 {
        failures.push(format!("took {secs:.1}s (budget 30s)"));
    }
    verdict(2, "closed-form ground state", secs, failures);
}

fn omega_grid() -> Vec<f64> {
    (0..12).map(|j| 0.02 + 0.02 * j as f64).collect()
}

#[test]
fn criterion_3_mass_frequency_curves() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let omegas = omega_grid();
    let op = star_op(4, -2.0, StarKind::Delta, H, 90.0);
    for (p, tol) in [(3.0, 1e-3), (5.0, 1e-2)] {
        let rows = mass_curve(&op, p, &omegas, 1, &SolveOptions::default()).unwrap();
        let mut devs: Vec<f64> = Vec::new();
        for row in &rows {
            if row.status != Status::Converged {
                failures.push(format!("p={p} omega={}: status {:?}", row.omega, row.status));
                continue;
            }
            let closed = StarParams::new(4, -2.0, StarKind::Delta, p, row.omega)
                .unwrap()
                .mass_closed_form()
                .unwrap();
            let rel = (row.mass - closed).abs() / closed.abs();
            if rel > tol {
                devs.push(rel);
                if p == 3.0 {
                    failures.push(format!(
                        "p=3 omega={}: mass {:.8} vs closed form {closed:.8} (rel {rel:.2e}, tol 1e-3)",
                        row.omega, row.mass
                    ));
                }
            }
        }
        if p == 5.0 && !devs.is_empty() {
            let lo = devs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = devs.iter().cloned().fold(0.0f64, f64::max);
            failures.push(format!(
                "p=5: computed mass disagrees with the tabulated closed form on {}/12 grid \
                 points (rel {lo:.2e}..{hi:.2e}, tol 1e-2); direct quadrature of the exact \
                 profile confirms the computed masses to ~1e-4 relative (see the verify-star \
                 report at p=5), so the tabulated formula itself does not describe this curve",
                devs.len()
            ));
        }
        for w in rows.windows(2) {
            if !(w[1].mass < w[0].mass) {
                failures.push(format!(
                    "p={p}: mass not strictly decreasing at omega={}",
                    w[1].omega
                ));
            }
            if !(w[1].s_omega > w[0].s_omega) {
                failures.push(format!(
                    "p={p}: s_omega not strictly increasing at omega={}",
                    w[1].omega
                ));
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    if secs > 300.0 {
        failures.push(format!("took {secs:.1}s (budget 5min)"));
    }
    verdict(3, "mass-frequency curves", secs, failures);
}

#[test]
fn criterion_4_variational_identities() {
    let t0 = Instant::now();
    let mut failures = Vec::new();

    let mut check = |op: &DiscreteOperator, p: f64, gs: &GroundStateResult, tag: &str| {
        let y = op.to_reduced(&gs.profile);
        let quad = op.reduced_q(&y) + gs.omega * op.reduced_mass2(&y);
        let pot = op.lumped_power(&gs.profile, p + 1.0);
        let i_omega = quad + pot;
        if i_omega.abs() > 1e-6 {
            failures.push(format!("{tag}: |I_omega| = {:.2e} (tol 1e-6)", i_omega.abs()));
        }
        let c = (p - 1.0) / (2.0 * (p + 1.0));
        let scale = gs.s_omega.abs() + 1.0;
        let via_pot = -c * pot;
        let via_quad = c * quad;
        if (gs.s_omega - via_pot).abs() > 1e-6 * scale {
            failures.push(format!(
                "{tag}: s_omega {} vs potential form {via_pot} (tol 1e-6 rel)",
                gs.s_omega
            ));
        }
        if (gs.s_omega - via_quad).abs() > 1e-6 * scale {
            failures.push(format!(
                "{tag}: s_omega {} vs quadratic form {via_quad} (tol 1e-6 rel)",
                gs.s_omega
            ));
        }
    };

    let op40 = star_op(4, -2.0, StarKind::Delta, H, 40.0);
    let gs = minimize_action(&op40, 3.0, 0.125, &SolveOptions::default()).unwrap();
    assert_eq!(gs.status, Status::Converged);
    check(&op40, 3.0, &gs, "p=3 omega=0.125");

    let op90 = star_op(4, -2.0, StarKind::Delta, H, 90.0);
    for p in [3.0, 5.0] {
        let mut warm: Option<GraphFunction> = None;
        for omega in omega_grid() {
            let opts = SolveOptions { init: warm.take(), ..Default::default() };
            let gs = minimize_action(&op90, p, omega, &opts).unwrap();
            if gs.status == Status::Converged {
                check(&op90, p, &gs, &format!("p={p} omega={omega}"));
                warm = Some(gs.profile.clone());
            }
        }
    }
    verdict(4, "variational identities", t0.elapsed().as_secs_f64(), failures);
}

#[test]
fn criterion_5_existence_criterion_behavior() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let opts = SolveOptions::default();

    let expect_zero = |op: &DiscreteOperator, p: f64, omega: f64, tag: &str,
                           failures: &mut Vec<String>| {
        let gs = minimize_action(op, p, omega, &opts).unwrap();
        if gs.status != Status::ConvergedToZero {
            failures.push(format!("{tag}: status {:?}, expected ConvergedToZero", gs.status));
        }
        if gs.s_omega.abs() > 1e-10 {
            failures.push(format!("{tag}: s_omega {} (tol 1e-10)", gs.s_omega));
        }
    };

    let repulsive = star_op(4, 1.0, StarKind::Delta, H, 40.0);
    expect_zero(&repulsive, 3.0, 0.1, "gamma=+1 omega=0.1", &mut failures);

    let op = star_op(4, -2.0, StarKind::Delta, H, 40.0);
    expect_zero(&op, 3.0, 0.25, "omega at the window edge", &mut failures);
    expect_zero(&op, 3.0, 0.30, "omega above the window", &mut failures);
    expect_zero(&op, 6.0, 0.0, "p=6 omega=0", &mut failures);

    match minimize_action(&op, 3.0, -0.1, &opts) {
        Err(Error::Validation(_)) => {}
        other => failures.push(format!(
            "omega=-0.1 must be rejected at validation, got {other:?}"
        )),
    }

    let secs = t0.elapsed().as_secs_f64();
    if secs > 60.0 {
        failures.push(format!("took {secs:.1}s (budget 1min)"));
    }
    verdict(5, "existence criterion behavior", secs, failures);
}

#[test]
fn criterion_6_fixed_mass_recovers_frequency() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let op = star_op(4, -2.0, StarKind::Delta, H, 100.0);
    let target = reference_star().mass_closed_form().unwrap();

    let fixed = minimize_energy_fixed_mass(&op, 3.0, target, &SolveOptions::default()).unwrap();
    if fixed.status != Status::Converged {
        failures.push(format!("fixed-mass status {:?}", fixed.status));
    }
    if (fixed.omega - 0.125).abs() > 2e-3 {
        failures.push(format!("recovered omega {} vs 0.125 (tol 2e-3)", fixed.omega));
    }

    let action_route = minimize_action(&op, 3.0, 0.125, &SolveOptions::default()).unwrap();
    let h1 = h1_gap(&fixed.profile, &action_route.profile);
    if h1 > 1e-2 {
        failures.push(format!("profile H1 gap {h1:.2e} between the two routes (tol 1e-2)"));
    }

    let secs = t0.elapsed().as_secs_f64();
    if secs > 60.0 {
        failures.push(format!("took {secs:.1}s (budget 1min)"));
    }
    verdict(6, "fixed-mass frequency recovery", secs, failures);
}

#[test]
fn criterion_7_conservation_and_stability() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let op = star_op(4, -2.0, StarKind::Delta, H, 40.0);
    let gs = minimize_action(&op, 3.0, 0.125, &SolveOptions::default()).unwrap();
    assert_eq!(gs.status, Status::Converged);

    let traj = evolve(
        &op,
        &gs.profile.to_complex(),
        3.0,
        &EvolveOptions { dt: 1e-3, t_end: 10.0, store_every: 20, linear: false, phi_init: None },
    )
    .unwrap();
    let m0 = traj.mass_series[0];
    let e0 = traj.energy_series[0];
    let mass_drift =
        traj.mass_series.iter().map(|m| (m - m0).abs() / m0.abs()).fold(0.0f64, f64::max);
    let energy_drift =
        traj.energy_series.iter().map(|e| (e - e0).abs() / e0.abs()).fold(0.0f64, f64::max);
    if mass_drift > 1e-8 {
        failures.push(format!("mass drift {mass_drift:.2e} (tol 1e-8)"));
    }
    if energy_drift > 1e-5 {
        failures.push(format!("energy drift {energy_drift:.2e} (tol 1e-5)"));
    }

    let report = orbital_stability_experiment(
        &op,
        3.0,
        0.125,
        &StabilityOptions {
            epsilon: 1e-2,
            seed: 42,
            dt: 1e-3,
            t_end: 10.0,
            store_every: 20,
            solver: SolveOptions::default(),
        },
    )
    .unwrap();
    if report.max_distance > 5e-2 {
        failures.push(format!(
            "sup orbit distance {:.2e} under a 1e-2 perturbation (tol 5e-2)",
            report.max_distance
        ));
    }

    let secs = t0.elapsed().as_secs_f64();
    if secs > 300.0 {
        failures.push(format!("took {secs:.1}s (budget 5min)"));
    }
    verdict(7, "conservation and orbital stability", secs, failures);
}

/// Generates an admissible trace pair of a projector-form condition: the
/// value in `ker P_D`, the derivative free on `ran P_D` and tied to the value
/// through the Robin operator on `ran P_R`.
fn admissible_pair(
    proj: &qgnls::vertex::ProjectorCondition,
    rng: &mut ChaCha8Rng,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let d = proj.p_d().nrows();
    let rand_vec = |rng: &mut ChaCha8Rng| {
        DVector::from_fn(d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    };
    let xi = rand_vec(rng);
    let eta = rand_vec(rng);
    let psi = &xi - proj.p_d() * &xi;
    let dpsi = proj.p_d() * &eta + proj.lambda() * (proj.p_r() * &xi);
    let nrm = (psi.norm_squared() + dpsi.norm_squared()).sqrt();
    assert!(nrm > 1e-12, "degenerate random trace pair");
    (
        psi.iter().map(|z| z / nrm).collect(),
        dpsi.iter().map(|z| z / nrm).collect(),
    )
}

#[test]
fn criterion_8_property_suites() {
    let t0 = Instant::now();
    let mut failures = Vec::new();

    // Vertex-condition round trip: 200 random admissible trace pairs per
    // family must satisfy both the original matrix pair and the pair
    // reconstructed from the projector decomposition, to 1e-8.
    let a3 = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, 0.0, 1.0, -1.0, 1.5, 0.0, 0.0]);
    let b3 = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    let families = [
        ("delta", MatrixCondition::delta(4, -2.0).unwrap()),
        ("delta'", MatrixCondition::delta_prime(4, -2.0).unwrap()),
        ("kirchhoff", MatrixCondition::kirchhoff(5).unwrap()),
        ("dirichlet", MatrixCondition::dirichlet(3).unwrap()),
        ("matrix", MatrixCondition::from_real(&a3, &b3).unwrap()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (name, cond) in &families {
        let proj = cond.to_projector_form().unwrap();
        let back = proj.to_matrix_form();
        let mut worst = (0.0f64, 0.0f64);
        for _ in 0..200 {
            let (psi, dpsi) = admissible_pair(&proj, &mut rng);
            worst.0 = worst.0.max(cond.residual(&psi, &dpsi));
            worst.1 = worst.1.max(back.residual(&psi, &dpsi));
        }
        if worst.0 > 1e-8 || worst.1 > 1e-8 {
            failures.push(format!(
                "{name}: round-trip residuals {:.2e} / {:.2e} (tol 1e-8)",
                worst.0, worst.1
            ));
        }
    }

    // Exact action gradient vs central finite differences at 20 random
    // points of the constrained subspace.
    let small = star_op(4, -2.0, StarKind::Delta, 0.05, 8.0);
    let n = small.n_reduced();
    let eps = 1e-5;
    for trial in 0..20 {
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let z: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let f = small.from_reduced(&y);
        let v = small.from_reduced(&z);
        let g = small.action_gradient(&f, 3.0, 0.125);
        let mut dot = 0.0;
        for (ge, ve) in g.values().iter().zip(v.values()) {
            for (a, b) in ge.iter().zip(ve) {
                dot += a * b;
            }
        }
        let mut plus = f.clone();
        plus.axpy(eps, &v).unwrap();
        let mut minus = f.clone();
        minus.axpy(-eps, &v).unwrap();
        let fd = (small.action(&plus, 3.0, 0.125).unwrap()
            - small.action(&minus, 3.0, 0.125).unwrap())
            / (2.0 * eps);
        let rel = (fd - dot).abs() / dot.abs().max(1e-12);
        if rel > 1e-5 {
            failures.push(format!(
                "gradient vs finite differences, point {trial}: rel gap {rel:.2e} (tol 1e-5)"
            ));
        }
    }

    // Mesh refinement on the interpolated closed profile: both the quadratic
    // form error and the stationary residual must shrink at order >= 1.8.
    let star = reference_star();
    let q_exact = star.q_form_quadrature().unwrap();
    let mut q_errs = Vec::new();
    let mut resids = Vec::new();
    for h in [0.04, 0.02, 0.01] {
        let op = star_op(4, -2.0, StarKind::Delta, h, 60.0);
        let phi = star.interpolate(op.domain()).unwrap();
        q_errs.push((op.q_form(&phi).unwrap() - q_exact).abs());
        resids.push(stationary_residual(&op, &phi, 3.0, 0.125).unwrap());
    }
    for (what, errs) in [("Q_H error", &q_errs), ("stationary residual", &resids)] {
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            if order < 1.8 {
                failures.push(format!(
                    "{what}: observed order {order:.2} under mesh halving (need >= 1.8; \
                     errors {:.3e} -> {:.3e})",
                    w[0], w[1]
                ));
            }
        }
    }

    // Determinism: two identical multi-threaded CLI sweeps must produce
    // byte-identical files.
    let tmp = tempfile::tempdir().unwrap();
    let graph_path = tmp.path().join("star.json");
    std::fs::write(
        &graph_path,
        r#"{
  "vertices": [{"id": "c", "condition": {"type": "delta", "gamma": -2.0}}],
  "edges": [
    {"id": "e1", "from": "c", "length": "inf"},
    {"id": "e2", "from": "c", "length": "inf"},
    {"id": "e3", "from": "c", "length": "inf"},
    {"id": "e4", "from": "c", "length": "inf"}
  ]
}"#,
    )
    .unwrap();
    let run_into = |out: &Path| {
        let args: Vec<String> = [
            "qgnls",
            "mass-curve",
            "--graph",
            &graph_path.display().to_string(),
            "--p",
            "3",
            "--omega-grid",
            "0.05:0.2:4",
            "--jobs",
            "2",
            "--h",
            "0.02",
            "--out",
            &out.display().to_string(),
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        assert_eq!(qgnls::cli::run(&args), 0);
    };
    let (d1, d2) = (tmp.path().join("a"), tmp.path().join("b"));
    run_into(&d1);
    run_into(&d2);
    for file in ["mass_curve.csv", "summary.json"] {
        let b1 = std::fs::read(d1.join(file)).unwrap();
        let b2 = std::fs::read(d2.join(file)).unwrap();
        if b1 != b2 {
            failures.push(format!("{file} differs between identical reruns"));
        }
    }

    // Above the attainable mass range the fixed-mass solver must flag the
    // run (spreading warning, nonpositive multiplier, or exhausted budget).
    // Non-existence itself is a statement about the continuum problem and is
    // deliberately not asserted numerically.
    let op = star_op(4, -2.0, StarKind::Delta, H, 100.0);
    let r = minimize_energy_fixed_mass(&op, 3.0, 2.5, &SolveOptions::default()).unwrap();
    let flagged = !r.warnings.is_empty() || r.status == Status::MaxIter || r.omega < 5e-3;
    if !flagged {
        failures.push(format!(
            "supercritical mass 2.5 not flagged: omega {}, status {:?}, no warnings",
            r.omega, r.status
        ));
    }

    verdict(8, "property suites", t0.elapsed().as_secs_f64(), failures);
}
