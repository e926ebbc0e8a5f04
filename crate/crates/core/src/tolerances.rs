//! Numerical thresholds shared across the pipeline.
//!
//! The constants are the defaults; [`Tolerances`] carries a configurable copy
//! for the checks that run at pipeline level.

use serde::{Deserialize, Serialize};

/// Unitarity and Hermiticity defects.
pub const STRUCTURAL: f64 = 1e-10;
/// Eigen-equation and reconstruction residuals.
pub const SPECTRAL: f64 = 1e-9;
/// Gram determinant below which a seed frame is rejected.
pub const GRAM_RESEED: f64 = 1e-6;
/// Eigenvalues below this are treated as zero.
pub const ZERO_EIGENVALUE: f64 = 1e-12;
/// Adjacent eigenvalues closer than this form one degenerate block.
pub const DEGENERACY: f64 = 1e-12;
/// Matching margin below which an eigenpath assignment is ambiguous.
pub const MATCH_AMBIGUITY: f64 = 1e-8;
/// Eigenvalues below this are a complete-positivity violation.
pub const NEGATIVE_EIGENVALUE: f64 = 1e-8;
/// Trace-preservation and Choi positivity.
pub const CPTP: f64 = 1e-10;
/// Kraus reconstruction residual that signals a tracking failure.
pub const RECONSTRUCTION_FAIL: f64 = 1e-6;
/// Column orthonormality residual that signals a reconstruction failure.
pub const COLUMNS_FAIL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub structural: f64,
    pub spectral: f64,
    pub gram_reseed: f64,
    pub zero_eigenvalue: f64,
    pub degeneracy: f64,
    pub match_ambiguity: f64,
    pub cptp: f64,
    /// Dilation-identity residual above which a run counts as failed.
    pub dilation_fail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            structural: STRUCTURAL,
            spectral: SPECTRAL,
            gram_reseed: GRAM_RESEED,
            zero_eigenvalue: ZERO_EIGENVALUE,
            degeneracy: DEGENERACY,
            match_ambiguity: MATCH_AMBIGUITY,
            cptp: CPTP,
            dilation_fail: 1e-6,
        }
    }
}

impl Tolerances {
    /// Names of fields that are not strictly positive.
    pub fn non_positive(&self) -> Vec<&'static str> {
        let fields = [
            ("structural", self.structural),
            ("spectral", self.spectral),
            ("gram_reseed", self.gram_reseed),
            ("zero_eigenvalue", self.zero_eigenvalue),
            ("degeneracy", self.degeneracy),
            ("match_ambiguity", self.match_ambiguity),
            ("cptp", self.cptp),
            ("dilation_fail", self.dilation_fail),
        ];
        fields.iter().filter(|(_, v)| !(*v > 0.0 && v.is_finite())).map(|(k, _)| *k).collect()
    }
}
