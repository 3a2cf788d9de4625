//! Brute-force references for checking the heuristics and formulas on
//! small instances. Nothing here calls into the radio, power or placement
//! algorithms; the main modules' types are used only as data containers.

pub mod linalg;
pub mod mapping;
pub mod mm1;
pub mod placement;
pub mod summation;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use mapping::{brute_force_mapping, MappingOracle, DEFAULT_POWER_GRID};
pub use mm1::mm1_simulate;
pub use placement::{exhaustive_placement, OracleMode, PlacementOracle};
pub use summation::summation_oracle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub instance: String,
    pub oracle: f64,
    pub heuristic: f64,
    /// `(oracle - heuristic) / |oracle|`, 0 when both are 0.
    pub gap: f64,
    pub wall_time_s: f64,
}

impl OracleReport {
    pub fn new(instance: impl Into<String>, oracle: f64, heuristic: f64, wall_time_s: f64) -> Self {
        Self {
            instance: instance.into(),
            oracle,
            heuristic,
            gap: relative_gap(oracle, heuristic),
            wall_time_s,
        }
    }
}

pub fn relative_gap(oracle: f64, heuristic: f64) -> f64 {
    if oracle != 0.0 {
        (oracle - heuristic) / oracle.abs()
    } else if heuristic == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn write_reports_csv<W: Write>(rows: &[OracleReport], mut out: W) -> Result<()> {
    writeln!(out, "# schema=1")?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_convention() {
        assert_eq!(relative_gap(2.0, 1.0), 0.5);
        assert_eq!(relative_gap(-2.0, -1.0), -0.5);
        assert_eq!(relative_gap(0.0, 0.0), 0.0);
        let r = OracleReport::new("x", 4.0, 3.0, 0.1);
        assert_eq!(r.gap, 0.25);
    }
}
