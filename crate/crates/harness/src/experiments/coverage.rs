//! Simultaneous coverage audit: fraction of trials in which the band contains
//! the truth at every grid point.

use pwband::voting::majority;
use pwband::IntervalCollection;
use rayon::prelude::*;
use serde::Serialize;

use super::common::{ball_radius, make_world, subsample_bands};
use crate::config::ExperimentConfig;
use crate::seeds::block_seed;
use crate::stats::{mean, wilson_interval};
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct CoverageTrial {
    pub trial: usize,
    pub covered: bool,
    /// Grid points where the truth fell outside the (aggregated) set.
    pub misses: usize,
    pub mean_width: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub n: usize,
    pub n0: usize,
    pub k: usize,
    pub trials: usize,
    pub covered: usize,
    pub coverage: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub nominal: f64,
    pub floor: f64,
    pub pass: bool,
    pub mean_width: f64,
    #[serde(skip)]
    pub per_trial: Vec<CoverageTrial>,
}

fn one_trial(
    cfg: &ExperimentConfig,
    n: usize,
    n0: usize,
    radius: Option<f64>,
    grid: &[f64],
    seed: u64,
    trial: usize,
) -> Result<CoverageTrial> {
    let world = make_world(cfg, n, seed, trial)?;
    let bands = subsample_bands(cfg, &world, n0, radius, grid, seed, trial)?;
    let mut misses = 0;
    let mut widths = Vec::with_capacity(grid.len());
    for (g, &x) in grid.iter().enumerate() {
        let y = world.truth_at(x);
        if cfg.k == 1 {
            let iv = &bands[0].intervals[g];
            widths.push(iv.width());
            misses += usize::from(!iv.contains(y));
        } else {
            let c = IntervalCollection::new(bands.iter().map(|b| b.intervals[g].bounds).collect())?;
            let m = majority(&c)?;
            widths.push(pwband::voting::total_length(&m));
            misses += usize::from(!m.contains(y));
        }
    }
    Ok(CoverageTrial {
        trial,
        covered: misses == 0,
        misses,
        mean_width: mean(&widths),
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    let [n, n0] = cfg.sizes[0];
    let seed = block_seed(cfg.master_seed, 0);
    let radius = ball_radius(cfg, n0)?;
    let grid = cfg.grid();
    let per_trial: Vec<CoverageTrial> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| one_trial(cfg, n, n0, radius, &grid, seed, t))
        .collect::<Result<_>>()?;
    let covered = per_trial.iter().filter(|t| t.covered).count();
    let (wilson_lo, wilson_hi) = wilson_interval(covered, cfg.trials);
    let coverage = covered as f64 / cfg.trials as f64;
    let gamma = cfg.alpha + cfg.beta;
    let nominal = if cfg.k == 1 { 1.0 - gamma } else { 1.0 - 2.0 * gamma };
    let widths: Vec<f64> = per_trial.iter().map(|t| t.mean_width).collect();
    Ok(CoverageReport {
        n,
        n0,
        k: cfg.k,
        trials: cfg.trials,
        covered,
        coverage,
        wilson_lo,
        wilson_hi,
        nominal,
        floor: cfg.coverage_floor,
        pass: coverage >= cfg.coverage_floor,
        mean_width: mean(&widths),
        per_trial,
    })
}
