use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds used across the crate.
///
/// Every certificate and report echoes the instance it was produced with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Max entrywise |M - M^H| accepted as Hermitian.
    pub herm: f64,
    /// Eigenvalues down to `-psd` are accepted as nonnegative.
    pub psd: f64,
    /// Max |tr - 1| for a density matrix.
    pub trace: f64,
    /// Frobenius tolerance on eigendecomposition reconstruction.
    pub recon: f64,
    /// Eigenvalues at or below this are singular for logarithms and inverses.
    pub log_cutoff: f64,
    /// Eigenvalues/probabilities at or below this contribute zero entropy.
    pub eig_zero: f64,
    /// Condition 1: Frobenius bound on rho - tr_e sigma.
    pub cond1: f64,
    /// Condition 2: bound on |CMI| in bits.
    pub cond2: f64,
    /// Condition 3: normalized commutator bound.
    pub cond3: f64,
    /// Condition 4: smallest admissible eigenvalue of sigma_e.
    pub cond4_zero: f64,
    /// Condition 4: smallest admissible eigenvalue gap of sigma_e.
    pub cond4_gap: f64,
    /// Max off-block entry magnitude accepted during extraction.
    pub block: f64,
    /// Frobenius bound on the rebuilt sigma after extraction.
    pub extract: f64,
    /// Partial-transpose eigenvalues down to `-ppt` count as nonnegative.
    pub ppt: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-10,
            psd: 1e-9,
            trace: 1e-9,
            recon: 1e-9,
            log_cutoff: 1e-12,
            eig_zero: 1e-12,
            cond1: 1e-8,
            cond2: 1e-9,
            cond3: 1e-9,
            cond4_zero: 1e-10,
            cond4_gap: 1e-8,
            block: 1e-8,
            extract: 1e-8,
            ppt: 1e-10,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 14] = [
        "herm",
        "psd",
        "trace",
        "recon",
        "log_cutoff",
        "eig_zero",
        "cond1",
        "cond2",
        "cond3",
        "cond4_zero",
        "cond4_gap",
        "block",
        "extract",
        "ppt",
    ];

    /// Overrides one threshold by name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::Usage(format!(
                "tolerance `{name}` must be finite and nonnegative, got {value}"
            )));
        }
        let slot = match name {
            "herm" => &mut self.herm,
            "psd" => &mut self.psd,
            "trace" => &mut self.trace,
            "recon" => &mut self.recon,
            "log_cutoff" => &mut self.log_cutoff,
            "eig_zero" => &mut self.eig_zero,
            "cond1" => &mut self.cond1,
            "cond2" => &mut self.cond2,
            "cond3" => &mut self.cond3,
            "cond4_zero" => &mut self.cond4_zero,
            "cond4_gap" => &mut self.cond4_gap,
            "block" => &mut self.block,
            "extract" => &mut self.extract,
            "ppt" => &mut self.ppt,
            other => {
                return Err(Error::Usage(format!(
                    "unknown tolerance `{other}` (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }

    /// Parses a `name=value` override.
    pub fn apply_override(&mut self, arg: &str) -> Result<()> {
        let (name, value) = arg
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("tolerance override `{arg}` is not name=value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("tolerance `{name}` has non-numeric value `{value}`")))?;
        self.set(name.trim(), value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_by_name() {
        let mut t = Tolerances::default();
        t.apply_override("cond3=1e-7").unwrap();
        assert_eq!(t.cond3, 1e-7);
        assert!(t.apply_override("bogus=1").is_err());
        assert!(t.apply_override("cond3").is_err());
        assert!(t.apply_override("cond3=-1").is_err());
    }

    #[test]
    fn every_name_is_settable() {
        let mut t = Tolerances::default();
        for name in Tolerances::NAMES {
            t.set(name, 0.5).unwrap();
        }
        assert_eq!(t.ppt, 0.5);
        assert_eq!(t.herm, 0.5);
    }
}
