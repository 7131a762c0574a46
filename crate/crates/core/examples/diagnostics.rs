//! α̂_M, C_P, β_M+ and cond(G) for M = 1, …, 10, written as CSV.

use obstab::io::diagnostics_csv;
use obstab::spaces::pair_diagnostics;
use obstab::{BoundaryCondition, Mesh};

fn main() -> obstab::Result<()> {
    let mesh = Mesh::new(2001, BoundaryCondition::NeumannHomogeneous)?;
    let ms: Vec<usize> = (1..=10).collect();
    print!("{}", diagnostics_csv(&pair_diagnostics(&ms, 0.1, 0.1, &mesh)?));
    Ok(())
}
