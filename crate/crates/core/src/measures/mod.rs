//! Exact signed measures: finitely supported, countably supported with a tail
//! certificate, and piecewise-constant densities with respect to `λ`.

mod cs;
mod density;
mod fs;

pub use cs::{CsMeasure, Truncation, TRUNCATION_SEARCH_CAP};
pub use density::DensityMeasure;
pub use fs::FsMeasure;
