//! Formal, sectoral and Frobenius solutions of dF/dz = (U + A0/z)·F, plus
//! numerical continuation along explicit paths.

pub mod dop853;
pub mod formal;
pub mod path;
pub mod system;

pub use dop853::Dop853;
pub use formal::{formal_fundamental, FormalSolution};
pub use path::{integrate_path, Piece, PathSpec};
pub use system::{centralizer_project, check_nonresonant, RankOneSystem};
pub mod frobenius;
pub mod sector;

pub use frobenius::{frobenius_series, frobenius_solution, FrobeniusSeries, FrobeniusSettings};
pub use sector::{log_on, power, sector_solution, SectorSettings, SectorSolution};
