//! Built-in problem instances, addressable by name from problem files.

mod column;
mod synthetic;

pub use column::{build_column_surrogate, ColumnSurrogate};
pub use synthetic::{build_sp1, build_sp2, Sp1, Sp2};

use crate::discretization::BoxLevels;
use crate::error::{MaroError, Result};
use crate::problem::ProblemSpec;

pub const BUILTIN_NAMES: [&str; 3] = ["sp1", "sp2", "column_surrogate"];

pub fn builtin(name: &str) -> Result<ProblemSpec> {
    match name {
        "sp1" => Ok(build_sp1()),
        "sp2" => Ok(build_sp2()),
        "column_surrogate" => Ok(build_column_surrogate()),
        other => Err(MaroError::UnknownModel(other.to_string())),
    }
}

/// Box level rule each built-in uses for its reference discretization.
///
/// SP1 has a single uncertain parameter, so the three-level grid would leave
/// nothing to select from; it uses 21 equidistant levels instead.
pub fn default_levels(name: &str) -> BoxLevels {
    match name {
        "sp1" => BoxLevels::Uniform(21),
        _ => BoxLevels::VerticesAndMids,
    }
}
