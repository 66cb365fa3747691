//! nlslab: simulation and verification lab for the 3d focusing cubic NLS
//! with repulsive external potentials,
//!
//! ```text
//! i du/dt = (-Delta + V) u - |u|^2 u        on [-L, L)^3 periodic
//! ```
//!
//! The crate provides the numerical substrate (spectral grids and fields),
//! a catalog of admissible potentials, two independent ground-state solvers,
//! a Strang split-step propagator, the full virial/modulation diagnostic
//! stack, and a scenario runner with regression-friendly CSV/JSON output.

pub mod error;
pub mod grid;
pub mod field;
pub mod spectral;
pub mod snapshot;
pub mod potential;
pub mod ground_state;
pub mod diagnostics;
pub mod evolution;
pub mod modulation;

pub use error::{Error, Result};
pub use field::Field;
pub use grid::Grid3;
pub use spectral::SpectralWorkspace;
