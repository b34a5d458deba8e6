//! Experiment configuration: per-experiment defaults, overridable from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    NormBounds,
    VotingBands,
    DiameterTable,
    Coverage,
    Band,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::NormBounds => "norm-bounds",
            ExperimentKind::VotingBands => "voting-bands",
            ExperimentKind::DiameterTable => "diameter-table",
            ExperimentKind::Coverage => "coverage",
            ExperimentKind::Band => "band",
        }
    }
}

/// Which norm bound feeds the band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundChoice {
    Hoeffding,
    Randomized,
    Bernstein,
    /// Randomized Hoeffding below the data-free switching size, Bernstein above.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub trials: usize,
    /// `[n, n0]` pairs: sample size and subsample size.
    pub sizes: Vec<[usize; 2]>,
    /// Number of subsample bands that are aggregated.
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Optional check value; must equal `alpha + beta` when given.
    pub gamma: Option<f64>,
    pub eta: f64,
    pub mu: f64,
    pub zeta: f64,
    pub noise_free: bool,
    pub lambda0: f64,
    pub knots: usize,
    pub a: f64,
    pub b: f64,
    pub master_seed: u64,
    pub grid_points: usize,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub permutations: usize,
    pub u_draws: usize,
    pub bound: BoundChoice,
    /// Minimum acceptable coverage in audits.
    pub coverage_floor: f64,
    pub out_dir: String,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = Self {
            experiment: kind,
            trials: 100,
            sizes: vec![[300, 17]],
            k: 51,
            alpha: 0.025,
            beta: 0.025,
            gamma: None,
            eta: 20.0,
            mu: 0.0,
            zeta: 0.5,
            noise_free: false,
            lambda0: 0.3,
            knots: 20,
            a: -1.0,
            b: 1.0,
            master_seed: 20_240_601,
            grid_points: 201,
            grid_lo: -1.0,
            grid_hi: 1.0,
            permutations: 100,
            u_draws: 100,
            bound: BoundChoice::Randomized,
            coverage_floor: 0.87,
            out_dir: "out".into(),
        };
        match kind {
            ExperimentKind::NormBounds => Self {
                sizes: vec![[50, 50], [500, 500]],
                k: 1,
                alpha: 0.1,
                beta: 0.0,
                eta: 100.0,
                zeta: 1.0,
                noise_free: true,
                a: 0.0,
                b: 1.0,
                ..base
            },
            ExperimentKind::VotingBands => base,
            ExperimentKind::DiameterTable => Self {
                sizes: vec![[100, 20], [250, 50], [500, 100]],
                k: 101,
                eta: 30.0,
                bound: BoundChoice::Hoeffding,
                ..base
            },
            ExperimentKind::Coverage => Self {
                trials: 500,
                k: 1,
                alpha: 0.05,
                beta: 0.05,
                grid_points: 101,
                ..base
            },
            ExperimentKind::Band => Self {
                trials: 1,
                k: 1,
                ..base
            },
        }
    }

    /// Defaults for `kind` with the keys of a TOML document laid over them.
    pub fn from_toml_str(kind: ExperimentKind, text: &str) -> Result<Self> {
        let overrides: toml::Table = toml::from_str(text).map_err(|e| HarnessError::Toml(e.to_string()))?;
        let mut merged = toml::Table::try_from(Self::defaults(kind)).map_err(|e| HarnessError::Toml(e.to_string()))?;
        for (key, value) in overrides {
            merged.insert(key, value);
        }
        let cfg: Self = merged
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Toml(e.to_string()))?;
        if cfg.experiment != kind {
            return Err(HarnessError::Config(format!(
                "config is for '{}' but '{}' was requested",
                cfg.experiment.as_str(),
                kind.as_str()
            )));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(kind: ExperimentKind, path: &Path) -> Result<Self> {
        Self::from_toml_str(kind, &std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self.sizes.is_empty() {
            return bad("at least one [n, n0] size is required".into());
        }
        for &[n, n0] in &self.sizes {
            if n0 == 0 || n0 > n {
                return bad(format!("need 1 <= n0 <= n, got n = {n}, n0 = {n0}"));
            }
        }
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if !(self.alpha > 0.0 && self.beta >= 0.0 && self.alpha + self.beta < 1.0) {
            return bad(format!(
                "need alpha > 0, beta >= 0, alpha + beta < 1; got {}, {}",
                self.alpha, self.beta
            ));
        }
        if let Some(g) = self.gamma {
            if (g - (self.alpha + self.beta)).abs() > 1e-12 {
                return bad(format!(
                    "gamma = {g} differs from alpha + beta = {}",
                    self.alpha + self.beta
                ));
            }
        }
        if self.noise_free && self.beta != 0.0 && self.experiment == ExperimentKind::NormBounds {
            return bad("noise-free norm bounds use beta = 0".into());
        }
        if !self.noise_free && (self.beta <= 0.0 || self.lambda0 <= 0.0) {
            return bad("noisy data needs beta > 0 and lambda0 > 0".into());
        }
        if !(self.eta > 0.0 && self.zeta > 0.0 && self.a < self.b) {
            return bad("need eta > 0, zeta > 0 and a < b".into());
        }
        if self.knots == 0 {
            return bad("knots must be positive".into());
        }
        if self.grid_points < 2 || self.grid_lo.partial_cmp(&self.grid_hi) != Some(std::cmp::Ordering::Less) {
            return bad("grid needs at least two points and grid_lo < grid_hi".into());
        }
        if matches!(
            self.experiment,
            ExperimentKind::VotingBands | ExperimentKind::DiameterTable
        ) && self.k < 2
        {
            return bad("voting needs k >= 2".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let step = (self.grid_hi - self.grid_lo) / (self.grid_points - 1) as f64;
        (0..self.grid_points).map(|i| self.grid_lo + step * i as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for kind in [
            ExperimentKind::NormBounds,
            ExperimentKind::VotingBands,
            ExperimentKind::DiameterTable,
            ExperimentKind::Coverage,
            ExperimentKind::Band,
        ] {
            ExperimentConfig::defaults(kind).validate().unwrap();
        }
    }

    #[test]
    fn toml_overrides_and_round_trip() {
        let cfg = ExperimentConfig::from_toml_str(
            ExperimentKind::Coverage,
            "trials = 7\nalpha = 0.1\nexperiment = \"coverage\"",
        )
        .unwrap();
        assert_eq!(cfg.trials, 7);
        assert_eq!(cfg.alpha, 0.1);
        assert_eq!(cfg.beta, 0.05);
        let again = ExperimentConfig::from_toml_str(ExperimentKind::Coverage, &cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml_str(ExperimentKind::Coverage, "bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml_str(ExperimentKind::Coverage, "gamma = 0.2").is_err());
        assert!(ExperimentConfig::from_toml_str(ExperimentKind::Coverage, "experiment = \"band\"").is_err());
        assert!(ExperimentConfig::from_toml_str(ExperimentKind::Coverage, "sizes = [[10, 20]]").is_err());
    }
}
