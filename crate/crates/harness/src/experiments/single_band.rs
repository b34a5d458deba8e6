//! One band on one dataset, either simulated or read from a record.

use pwband::simgen::{Dataset, DatasetRecord};

use super::common::{ball_radius, make_world, subsample_bands, world_from_dataset, SubBand, World};
use crate::config::ExperimentConfig;
use crate::seeds::block_seed;
use crate::Result;

pub struct SingleBand {
    pub seed: u64,
    pub world: World,
    pub grid: Vec<f64>,
    pub band: SubBand,
}

pub fn run(cfg: &ExperimentConfig, dataset: Option<&DatasetRecord>) -> Result<SingleBand> {
    cfg.validate()?;
    let [n, n0] = cfg.sizes[0];
    let seed = block_seed(cfg.master_seed, 0);
    let world = match dataset {
        Some(rec) => world_from_dataset(cfg, Dataset::from_record(rec)?)?,
        None => make_world(cfg, n, seed, 0)?,
    };
    let n0 = n0.min(world.dataset.samples.len());
    let radius = ball_radius(cfg, n0)?;
    let grid = cfg.grid();
    let one = ExperimentConfig { k: 1, ..cfg.clone() };
    let band = subsample_bands(&one, &world, n0, radius, &grid, seed, 0)?
        .pop()
        .expect("one band requested");
    Ok(SingleBand {
        seed,
        world,
        grid,
        band,
    })
}
