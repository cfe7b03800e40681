//! Bound-verification report: Monte-Carlo rows pairing measured quantities
//! with their bounds, written as CSV.

use crate::error::{ensure, Error, Result};
use crate::theory::{acceleration_rows, nonlinearity_rows, stability_rows_scaled, BoundCheckRow};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Report destination; optional so in-memory runs can omit it.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Trials per quantity.
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Multiplier on every drawn noise scale in the stability sweep; at 0
    /// the perturbations vanish and those rows are 0 on both sides.
    #[serde(default = "default_noise_scale")]
    pub noise_scale: f64,
}

fn default_trials() -> usize {
    1000
}

fn default_noise_scale() -> f64 {
    1.0
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            output: None,
            trials: default_trials(),
            seed: 0,
            noise_scale: default_noise_scale(),
        }
    }
}

impl VerifyConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: VerifyConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        // An unreadable config is an input problem, not a runtime failure.
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.trials >= 1, "trials must be >= 1");
        ensure!(
            self.noise_scale.is_finite() && self.noise_scale >= 0.0,
            "noise_scale must be finite and >= 0, got {}",
            self.noise_scale
        );
        Ok(())
    }
}

/// Totals from one report.
#[derive(Debug, Clone, Copy)]
pub struct VerifyStats {
    pub rows: usize,
    pub violations: usize,
}

/// All rows of the report: `trials` rows for each verified quantity.
pub fn verify_rows(config: &VerifyConfig) -> Vec<BoundCheckRow> {
    // Distinct seeds per suite so their trial draws don't mirror each other.
    let mut rows = nonlinearity_rows(config.trials, config.seed);
    rows.extend(stability_rows_scaled(
        config.trials,
        config.seed.wrapping_add(1),
        config.noise_scale,
    ));
    rows.extend(acceleration_rows(config.trials, config.seed.wrapping_add(2)));
    rows
}

/// Runs the sweeps and writes `quantity,trial,lhs,rhs,margin` rows to the
/// config's output path.
pub fn verify_bounds(config: &VerifyConfig) -> Result<VerifyStats> {
    config.validate()?;
    let path = config
        .output
        .as_ref()
        .ok_or_else(|| Error::Config("config sets no output path".into()))?;
    let rows = verify_rows(config);
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["quantity", "trial", "lhs", "rhs", "margin"])?;
    let mut violations = 0;
    for row in &rows {
        if !row.holds() {
            violations += 1;
        }
        writer.write_record([
            row.quantity.to_string(),
            row.trial.to_string(),
            row.lhs.to_string(),
            row.rhs.to_string(),
            row.margin().to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(VerifyStats {
        rows: rows.len(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_has_trials_rows_per_quantity() {
        let config = VerifyConfig {
            trials: 8,
            seed: 3,
            ..VerifyConfig::default()
        };
        let rows = verify_rows(&config);
        assert_eq!(rows.len(), 3 * 8);
        for quantity in ["weight-norm", "weight-stability", "acceleration"] {
            let count = rows.iter().filter(|r| r.quantity == quantity).count();
            assert_eq!(count, 8, "{quantity}");
        }
        assert!(rows.iter().all(|r| r.holds()));
    }

    #[test]
    fn zero_noise_scale_zeroes_the_stability_rows() {
        let config = VerifyConfig {
            trials: 6,
            noise_scale: 0.0,
            ..VerifyConfig::default()
        };
        let rows = verify_rows(&config);
        for row in rows.iter().filter(|r| r.quantity == "weight-stability") {
            assert_eq!(row.lhs, 0.0);
            assert_eq!(row.rhs, 0.0);
            assert!(row.holds());
        }
    }

    #[test]
    fn report_file_round_trips(){
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bounds.csv");
        let config = VerifyConfig {
            output: Some(path.clone()),
            trials: 5,
            seed: 1,
            noise_scale: 1.0,
        };
        let stats = verify_bounds(&config).unwrap();
        assert_eq!(stats.rows, 15);
        assert_eq!(stats.violations, 0);
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "quantity,trial,lhs,rhs,margin");
        assert_eq!(text.lines().count(), 16);
        for line in text.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 5);
            let lhs: f64 = fields[2].parse().unwrap();
            let rhs: f64 = fields[3].parse().unwrap();
            let margin: f64 = fields[4].parse().unwrap();
            assert_eq!(margin, rhs - lhs);
        }
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        assert!(VerifyConfig { trials: 0, ..VerifyConfig::default() }.validate().is_err());
        assert!(VerifyConfig { noise_scale: -0.5, ..VerifyConfig::default() }
            .validate()
            .is_err());
        let parsed = VerifyConfig::from_toml_str("trials = 12\nseed = 9\n").unwrap();
        assert_eq!(parsed.trials, 12);
        assert_eq!(parsed.seed, 9);
        assert_eq!(parsed.noise_scale, 1.0);
        assert!(VerifyConfig::from_toml_str("trials = 0").is_err());
        assert!(VerifyConfig::from_toml_str("bogus = 1").is_err());
    }
}
