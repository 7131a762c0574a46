//! Moreau–Yosida penalized parabolic obstacle problems on `(0, 1)`, driven to
//! a target trajectory by an explicit oblique-projection feedback built from
//! finitely many indicator-function actuators.
//!
//! Layers, bottom up:
//!
//! * [`fem`]: P1 mesh, mass/stiffness assembly, tridiagonal solves;
//! * [`spaces`]: actuators, eigenfunctions, oblique projections, `C_P`, `β_{M+}`;
//! * [`feedback`]: the feedback operator and its norm bound;
//! * [`dynamics`]: Crank–Nicolson/Adams–Bashforth integration of the coupled
//!   target/controlled systems;
//! * [`experiments`]: scenario presets, sweeps and studies;
//! * [`config`], [`io`], [`commands`]: configuration, CSV output, CLI drivers.

pub mod commands;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod feedback;
pub mod fem;
pub mod io;
mod linalg;
pub mod spaces;

pub use error::{Error, Result};
pub use fem::{BoundaryCondition, Field, Mesh};
