//! Norm-bound comparison: excess `tau - ||f||^2` of the Hoeffding, randomized
//! Hoeffding and Bernstein bounds on noise-free data.

use pwband::concentration::TailBudget;
use pwband::normbound::{tau_bernstein_noisefree, tau_hoeffding, tau_randomized, xi_star};
use pwband::NormBound;
use rayon::prelude::*;
use serde::Serialize;

use super::common::{draw_subsample, ellipsoid_for, make_world, open_unit};
use crate::config::ExperimentConfig;
use crate::seeds::{block_seed, stream, Purpose};
use crate::stats::BoxSummary;
use crate::{HarnessError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct NormTrial {
    pub n: usize,
    pub n0: usize,
    pub trial: usize,
    pub norm_sq: f64,
    pub hoeffding: NormBound<f64>,
    pub randomized: NormBound<f64>,
    pub bernstein: NormBound<f64>,
}

impl NormTrial {
    pub fn bounds(&self) -> [&NormBound<f64>; 3] {
        [&self.hoeffding, &self.randomized, &self.bernstein]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormSummary {
    pub n: usize,
    pub n0: usize,
    pub method: &'static str,
    pub excess: BoxSummary,
    /// Fraction of trials with `||f||^2 <= tau`.
    pub validity: f64,
}

#[derive(Debug, Clone)]
pub struct NormBoundReport {
    pub trials: Vec<NormTrial>,
    pub summaries: Vec<NormSummary>,
}

impl NormBoundReport {
    pub fn summary(&self, n: usize, method: &str) -> Option<&NormSummary> {
        self.summaries.iter().find(|s| s.n == n && s.method == method)
    }
}

fn one_trial(cfg: &ExperimentConfig, n: usize, n0: usize, seed: u64, trial: usize) -> Result<NormTrial> {
    let world = make_world(cfg, n, seed, trial)?;
    // no kernel matrix is formed here, so repeated inputs are harmless
    let idx = draw_subsample(n, n0, &mut stream(seed, trial, Purpose::Subsample));
    let sub = world.dataset.samples.select(&idx);
    let e = ellipsoid_for(cfg, &sub, None)?;
    let budget = TailBudget::new(cfg.alpha, n0)?;
    let xi = xi_star(&sub, &world.density, &e)?;
    let u = open_unit(&mut stream(seed, trial, Purpose::NormDraw));
    Ok(NormTrial {
        n,
        n0,
        trial,
        norm_sq: world.norm_sq(),
        hoeffding: tau_hoeffding(xi, &world.density, &budget),
        randomized: tau_randomized(xi, &world.density, &budget, u)?,
        bernstein: tau_bernstein_noisefree(&sub, &world.density, &budget)?,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<NormBoundReport> {
    cfg.validate()?;
    if !cfg.noise_free {
        return Err(HarnessError::Config(
            "norm-bound comparison runs on noise-free data".into(),
        ));
    }
    let mut trials = Vec::new();
    let mut summaries = Vec::new();
    for (block, &[n, n0]) in cfg.sizes.iter().enumerate() {
        let seed = block_seed(cfg.master_seed, block);
        let rows: Vec<NormTrial> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| one_trial(cfg, n, n0, seed, t))
            .collect::<Result<_>>()?;
        for (m, method) in ["hoeffding", "randomized_hoeffding", "bernstein_noisefree"]
            .into_iter()
            .enumerate()
        {
            let excess: Vec<f64> = rows.iter().map(|r| r.bounds()[m].tau - r.norm_sq).collect();
            let valid = excess.iter().filter(|&&d| d >= 0.0).count();
            summaries.push(NormSummary {
                n,
                n0,
                method,
                excess: BoxSummary::of(&excess),
                validity: valid as f64 / excess.len() as f64,
            });
        }
        trials.extend(rows);
    }
    Ok(NormBoundReport { trials, summaries })
}
