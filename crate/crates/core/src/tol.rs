use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds shared across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// `|g_i(x)| ≤ active_tol` marks constraint `i` active; also the feasibility slack.
    pub active_tol: f64,
    pub proj_tol: f64,
    pub qp_tol: f64,
    /// Minimum LP margin certifying a strict MFCQ direction.
    pub strict_tol: f64,
    /// Relative singular-value cutoff for the equality-gradient rank.
    pub rank_tol: f64,
    /// Argmax candidates within this of the best value are kept.
    pub cluster_tol: f64,
    /// Argmax candidates closer than this are merged.
    pub cluster_sep: f64,
    pub eval_tol: f64,
    /// Gap values at or below this count as zero.
    pub psi_threshold: f64,
    pub dedup_tol: f64,
    pub c_floor: f64,
    pub solve_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            active_tol: 1e-8,
            proj_tol: 1e-9,
            qp_tol: 1e-9,
            strict_tol: 1e-8,
            rank_tol: 1e-10,
            cluster_tol: 1e-6,
            cluster_sep: 1e-4,
            eval_tol: 1e-9,
            psi_threshold: 1e-12,
            dedup_tol: 1e-6,
            c_floor: 1e-12,
            solve_tol: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("active_tol", self.active_tol),
            ("proj_tol", self.proj_tol),
            ("qp_tol", self.qp_tol),
            ("strict_tol", self.strict_tol),
            ("rank_tol", self.rank_tol),
            ("cluster_tol", self.cluster_tol),
            ("cluster_sep", self.cluster_sep),
            ("eval_tol", self.eval_tol),
            ("psi_threshold", self.psi_threshold),
            ("dedup_tol", self.dedup_tol),
            ("c_floor", self.c_floor),
            ("solve_tol", self.solve_tol),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("tolerance {name} must be strictly positive, got {v}")));
            }
        }
        Ok(())
    }
}
