//! Oblique projections between the actuator span U and the eigenbasis span E.

use obstab::fem::l2_inner;
use obstab::spaces::SubspacePair;
use obstab::{BoundaryCondition, Field, Mesh};

fn main() -> obstab::Result<()> {
    let mesh = Mesh::new(401, BoundaryCondition::NeumannHomogeneous)?;
    let pair = SubspacePair::standard(4, 0.1, 0.1, &mesh)?;
    println!("actuator supports: {:?}", pair.actuators().intervals());
    println!("cond(G) = {:.4}", pair.condition_number());

    let h = Field::from_fn(mesh, |x| (7.0 * x).sin() + x * x);
    let pe = pair.project_e_along_u_perp(&h)?;
    let pu = pair.project_u_along_e_perp(&h)?;

    // P_E h lies in E, and h - P_E h is orthogonal to every actuator.
    let pe_twice = pair.project_e_along_u_perp(&pe)?;
    println!("idempotence |P_E P_E h - P_E h| = {:.2e}", pe_twice.sub(&pe)?.norm());
    let residual = h.sub(&pe)?;
    for (j, psi) in pair.actuators().fields().iter().enumerate() {
        println!("  (h - P_E h, 1_w{j}) = {:+.2e}", l2_inner(&residual, psi)?);
    }
    let residual = h.sub(&pu)?;
    for (j, e) in pair.eigen().fields().iter().enumerate() {
        println!("  (h - P_U h, e_{j}) = {:+.2e}", l2_inner(&residual, e)?);
    }
    println!("C_P = |P_E| = {:.6}", pair.c_p()?);
    println!("beta_M+ = {:.6}", pair.beta_mplus()?);
    Ok(())
}
