//! Voting bands on one dataset: `k` subsample bands aggregated per grid point
//! by majority, random ordering and random thresholds.

use pwband::voting::{majority, random_ordering, randomized_threshold_full, randomized_threshold_half, total_length};
use pwband::{IntervalCollection, UnionOfIntervals};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::common::{ball_radius, make_world, open_unit, subsample_bands, SubBand, World};
use crate::config::ExperimentConfig;
use crate::seeds::{block_seed, stream, Purpose};
use crate::stats::{mean, std_dev};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Majority,
    RandomOrdering,
    ThresholdHalf,
    ThresholdFull,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Majority => "majority",
            Scheme::RandomOrdering => "random_ordering",
            Scheme::ThresholdHalf => "threshold_half",
            Scheme::ThresholdFull => "threshold_full",
        }
    }

    pub const ALL: [Scheme; 4] = [
        Scheme::Majority,
        Scheme::RandomOrdering,
        Scheme::ThresholdHalf,
        Scheme::ThresholdFull,
    ];
}

/// One aggregated set at one grid point.
#[derive(Debug, Clone)]
pub struct Aggregate {
    pub x: f64,
    pub scheme: Scheme,
    /// Permutation or `u` index; 0 for majority.
    pub draw: usize,
    pub set: UnionOfIntervals<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeSummary {
    pub scheme: &'static str,
    /// Mean total length over grid points and draws.
    pub mean_length: f64,
    /// Grid average of the across-draw standard deviation of the length.
    pub mean_spread: f64,
}

pub struct VotingReport {
    pub world: World,
    pub grid: Vec<f64>,
    pub bands: Vec<SubBand>,
    pub aggregates: Vec<Aggregate>,
    pub summaries: Vec<SchemeSummary>,
    /// Grid points and draws where the random ordering set left the majority set.
    pub ordering_violations: usize,
}

impl VotingReport {
    pub fn summary(&self, scheme: Scheme) -> &SchemeSummary {
        self.summaries
            .iter()
            .find(|s| s.scheme == scheme.as_str())
            .expect("every scheme is summarized")
    }
}

fn is_subset(a: &UnionOfIntervals<f64>, b: &UnionOfIntervals<f64>) -> bool {
    a.segments()
        .iter()
        .all(|&(lo, hi)| b.segments().iter().any(|&(blo, bhi)| blo <= lo && hi <= bhi))
}

pub fn run(cfg: &ExperimentConfig) -> Result<VotingReport> {
    cfg.validate()?;
    let [n, n0] = cfg.sizes[0];
    let seed = block_seed(cfg.master_seed, 0);
    let world = make_world(cfg, n, seed, 0)?;
    let radius = ball_radius(cfg, n0)?;
    let grid = cfg.grid();
    let bands = subsample_bands(cfg, &world, n0, radius, &grid, seed, 0)?;

    let mut perm_rng = stream(seed, 0, Purpose::Permutation);
    let perms: Vec<Vec<usize>> = (0..cfg.permutations)
        .map(|_| {
            let mut p: Vec<usize> = (0..cfg.k).collect();
            p.shuffle(&mut perm_rng);
            p
        })
        .collect();
    let mut u_rng = stream(seed, 0, Purpose::VoteDraw);
    let us: Vec<f64> = (0..cfg.u_draws).map(|_| open_unit(&mut u_rng)).collect();

    let per_point: Vec<(Vec<Aggregate>, usize)> = grid
        .par_iter()
        .enumerate()
        .map(|(g, &x)| -> Result<(Vec<Aggregate>, usize)> {
            let c = IntervalCollection::new(bands.iter().map(|b| b.intervals[g].bounds).collect())?;
            let m = majority(&c)?;
            let mut out = vec![Aggregate {
                x,
                scheme: Scheme::Majority,
                draw: 0,
                set: m.clone(),
            }];
            let mut violations = 0;
            for (i, p) in perms.iter().enumerate() {
                let set = random_ordering(&c, p)?;
                if !is_subset(&set, &m) {
                    violations += 1;
                }
                out.push(Aggregate {
                    x,
                    scheme: Scheme::RandomOrdering,
                    draw: i,
                    set,
                });
            }
            for (i, &u) in us.iter().enumerate() {
                out.push(Aggregate {
                    x,
                    scheme: Scheme::ThresholdHalf,
                    draw: i,
                    set: randomized_threshold_half(&c, u)?,
                });
                out.push(Aggregate {
                    x,
                    scheme: Scheme::ThresholdFull,
                    draw: i,
                    set: randomized_threshold_full(&c, u)?,
                });
            }
            Ok((out, violations))
        })
        .collect::<Result<_>>()?;

    let ordering_violations = per_point.iter().map(|p| p.1).sum();
    let aggregates: Vec<Aggregate> = per_point.into_iter().flat_map(|p| p.0).collect();

    let summaries = Scheme::ALL
        .iter()
        .map(|&scheme| {
            let mut lengths = Vec::new();
            let mut spreads = Vec::new();
            for &x in &grid {
                let l: Vec<f64> = aggregates
                    .iter()
                    .filter(|a| a.scheme == scheme && a.x == x)
                    .map(|a| total_length(&a.set))
                    .collect();
                spreads.push(std_dev(&l));
                lengths.extend(l);
            }
            SchemeSummary {
                scheme: scheme.as_str(),
                mean_length: mean(&lengths),
                mean_spread: mean(&spreads),
            }
        })
        .collect();

    Ok(VotingReport {
        world,
        grid,
        bands,
        aggregates,
        summaries,
        ordering_violations,
    })
}
