//! Assemble the P1 operators and watch a cosine mode decay under the heat flow.

use obstab::dynamics::{run_coupled, ProblemData, RunSettings};
use obstab::feedback::build_feedback;
use obstab::fem::{assemble_a, assemble_mass, solve_spd};
use obstab::spaces::SubspacePair;
use obstab::{BoundaryCondition, Field, Mesh};
use std::f64::consts::PI;
use std::sync::Arc;

fn main() -> obstab::Result<()> {
    let mesh = Mesh::new(201, BoundaryCondition::NeumannHomogeneous)?;
    let nu = 0.1;

    // Solve (νK + M) u = M·1: the constant is an eigenfunction with eigenvalue 1.
    let a = assemble_a(&mesh, nu)?;
    let one = Field::constant(mesh, 1.0);
    let rhs = assemble_mass(&mesh).apply(&one)?;
    let u = solve_spd(&a, &rhs)?;
    println!("(νK + M)⁻¹ M 1: max |u - 1| = {:.2e}", u.sub(&one)?.max_abs());

    // Free heat flow of cos(πx); no obstacle, no reaction, no control.
    let zero = Arc::new(|_: f64, _: f64| 0.0);
    let data = ProblemData {
        nu,
        a: zero.clone(),
        b: zero.clone(),
        f: zero,
        psi: Arc::new(|_: f64, _: f64| 1e3),
        k_my: 0.0,
        y_init: Arc::new(|x: f64| (PI * x).cos()),
        w_init: Arc::new(|x: f64| (PI * x).cos()),
    };
    let feedback = build_feedback(SubspacePair::standard(1, 0.1, nu, &mesh)?, 0.0)?;
    let settings = RunSettings {
        t_final: 0.5,
        dt: 1e-4,
        record_every: 1000,
        contact_every: None,
    };
    let series = run_coupled(&data, &mesh, &feedback, &[], &settings)?;
    let y0 = Field::from_fn(mesh, |x| (PI * x).cos());
    let ratio = series.final_y.norm() / y0.norm();
    let exact = (-(nu * PI * PI + 1.0) * 0.5).exp();
    println!("|y(0.5)| / |y(0)| = {ratio:.8}, exact {exact:.8}");
    println!("relative error {:.2e}", (ratio - exact).abs() / exact);
    Ok(())
}
