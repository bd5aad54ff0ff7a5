//! Gridded `L(λ)` over parameter boxes, its discrete `dd^c` (one complex
//! parameter) and Monge–Ampère mass (two complex parameters), support
//! statistics against Per loci, field files and grayscale rasters.

mod field;
mod io;
mod mass;
mod raster;
mod support;

pub use field::{scan_l, MassField, ScalarField, ScanMethod};
pub use io::{read_field, write_field, FieldFile};
pub use mass::{ddc_mass, ma2_mass, DDC_CONVENTION, MA2_CONVENTION, MA2_NORMALIZATION};
pub use raster::{render, Raster, RenderMapping};
pub use support::{support_compare, SupportReport};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BifurcationError {
    #[error("need at least {needed} interior cells, have {have}")]
    InsufficientResolution { needed: usize, have: usize },
    #[error("expected a field over {expected} complex parameter(s), got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("no points to compare")]
    EmptyInput,
    #[error("field file line {line}: {message}")]
    Parse { line: usize, message: String },
}
