//! Diameter statistics at a random query: single subsample intervals (ST)
//! against random ordering (RO) and random thresholds on (1/2, 1) and (0, 1).

use pwband::simgen::sample_inputs;
use pwband::voting::{random_ordering, randomized_threshold_full, randomized_threshold_half, total_length};
use pwband::IntervalCollection;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::common::{ball_radius, make_world, open_unit, subsample_bands};
use crate::config::ExperimentConfig;
use crate::seeds::{block_seed, stream, Purpose};
use crate::stats::{mean, median, std_dev};
use crate::Result;

pub const SCHEMES: [&str; 4] = ["ST", "RO", "RT(0.5,1)", "RT(0,1)"];

#[derive(Debug, Clone, Serialize)]
pub struct DiameterTrial {
    pub n: usize,
    pub n0: usize,
    pub trial: usize,
    pub x0: f64,
    /// Lengths of the `k` subsample intervals; empty intervals count as 0.
    pub single: Vec<f64>,
    pub ordering: f64,
    pub threshold_half: f64,
    pub threshold_full: f64,
    /// Whether the truth lies in each aggregated set, in the order of `SCHEMES[1..]`.
    pub covered: [bool; 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct DiameterRow {
    pub n: usize,
    pub n0: usize,
    pub scheme: &'static str,
    pub avg: f64,
    pub med: f64,
    pub std: f64,
}

#[derive(Debug, Clone)]
pub struct DiameterReport {
    pub trials: Vec<DiameterTrial>,
    pub rows: Vec<DiameterRow>,
}

impl DiameterReport {
    pub fn row(&self, n: usize, scheme: &str) -> Option<&DiameterRow> {
        self.rows.iter().find(|r| r.n == n && r.scheme == scheme)
    }
}

fn one_trial(
    cfg: &ExperimentConfig,
    n: usize,
    n0: usize,
    radius: Option<f64>,
    seed: u64,
    trial: usize,
) -> Result<DiameterTrial> {
    let world = make_world(cfg, n, seed, trial)?;
    let x0 = sample_inputs(1, cfg.mu, cfg.zeta, &mut stream(seed, trial, Purpose::Query))?[0];
    let bands = subsample_bands(cfg, &world, n0, radius, &[x0], seed, trial)?;
    let c = IntervalCollection::new(bands.iter().map(|b| b.intervals[0].bounds).collect())?;

    let mut perm: Vec<usize> = (0..cfg.k).collect();
    perm.shuffle(&mut stream(seed, trial, Purpose::Permutation));
    let u = open_unit(&mut stream(seed, trial, Purpose::VoteDraw));
    let ro = random_ordering(&c, &perm)?;
    let rh = randomized_threshold_half(&c, u)?;
    let rf = randomized_threshold_full(&c, u)?;

    let y = world.truth_at(x0);
    Ok(DiameterTrial {
        n,
        n0,
        trial,
        x0,
        single: bands.iter().map(|b| b.intervals[0].width()).collect(),
        ordering: total_length(&ro),
        threshold_half: total_length(&rh),
        threshold_full: total_length(&rf),
        covered: [ro.contains(y), rh.contains(y), rf.contains(y)],
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<DiameterReport> {
    cfg.validate()?;
    let mut trials = Vec::new();
    let mut rows = Vec::new();
    for (block, &[n, n0]) in cfg.sizes.iter().enumerate() {
        let seed = block_seed(cfg.master_seed, block);
        let radius = ball_radius(cfg, n0)?;
        let block_trials: Vec<DiameterTrial> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| one_trial(cfg, n, n0, radius, seed, t))
            .collect::<Result<_>>()?;
        let columns: [Vec<f64>; 4] = [
            block_trials.iter().flat_map(|t| t.single.iter().copied()).collect(),
            block_trials.iter().map(|t| t.ordering).collect(),
            block_trials.iter().map(|t| t.threshold_half).collect(),
            block_trials.iter().map(|t| t.threshold_full).collect(),
        ];
        for (scheme, col) in SCHEMES.iter().zip(&columns) {
            rows.push(DiameterRow {
                n,
                n0,
                scheme,
                avg: mean(col),
                med: median(col),
                std: std_dev(col),
            });
        }
        trials.extend(block_trials);
    }
    Ok(DiameterReport { trials, rows })
}
