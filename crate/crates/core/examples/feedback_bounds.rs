//! Norm of the feedback operator against the bound λ α̂_M C_P².

use obstab::commands::BOUND_CASES;
use obstab::feedback::build_feedback;
use obstab::spaces::SubspacePair;
use obstab::{BoundaryCondition, Mesh};

fn main() -> obstab::Result<()> {
    let mesh = Mesh::new(2001, BoundaryCondition::NeumannHomogeneous)?;
    println!("{:>3} {:>5} {:>12} {:>8} {:>14} {:>14} {:>6}", "M", "λ", "α̂_M", "C_P", "|K|", "bound", "holds");
    for (m, lambda) in BOUND_CASES {
        let op = build_feedback(SubspacePair::standard(m, 0.1, 0.1, &mesh)?, lambda)?;
        let r = op.certify()?;
        println!(
            "{:>3} {:>5} {:>12.4} {:>8.4} {:>14.6} {:>14.6} {:>6}",
            r.m, r.lambda, r.alpha_hat, r.c_p, r.computed_norm, r.bound, r.holds()
        );
    }
    Ok(())
}
