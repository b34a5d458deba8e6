//! Shared simulation pipeline: truth, data, subsamples, ellipsoids, norm bounds.

use pwband::concentration::TailBudget;
use pwband::ellipsoid::{known_noise_ball_provider, noise_free_provider};
use pwband::normbound::{
    max_empirical_variance, select_bound, tau_bernstein_noisefree, tau_bernstein_noisy, tau_hoeffding, tau_randomized,
    xi_star,
};
use pwband::paley_wiener::check_distinct;
use pwband::simgen::{compute_rho, gen_true_function, laplace_pdf, Dataset, NoiseSpec, TruthSpec};
use pwband::{
    band_over_grid, BandConfig, BoundMethod, DensityModel, Ellipsoid, IntervalEstimate, KernelConfig, NormBound,
    SampleSet,
};
use rand::seq::index::sample;
use rand::Rng;

use crate::config::{BoundChoice, ExperimentConfig};
use crate::seeds::{stream, Purpose};
use crate::{HarnessError, Result};

const MAX_SUBSAMPLE_DRAWS: usize = 100;

/// Simulated truth and data for one trial.
pub struct World {
    pub dataset: Dataset<f64>,
    pub density: DensityModel<f64>,
    pub kernel: KernelConfig<f64>,
}

impl World {
    pub fn truth_at(&self, x: f64) -> f64 {
        self.dataset.truth.eval(x)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dataset.truth.norm_sq()
    }
}

pub fn noise(cfg: &ExperimentConfig) -> Result<Option<NoiseSpec<f64>>> {
    Ok(if cfg.noise_free {
        None
    } else {
        Some(NoiseSpec::new(cfg.lambda0)?)
    })
}

pub fn make_world(cfg: &ExperimentConfig, n: usize, seed: u64, trial: usize) -> Result<World> {
    let kernel = KernelConfig::new(cfg.eta, 1)?;
    let mut rng = stream(seed, trial, Purpose::Data);
    let spec = TruthSpec::new(cfg.knots, cfg.a, cfg.b, kernel)?;
    let truth = gen_true_function(&spec, &mut rng)?;
    let noise = noise(cfg)?;
    let dataset = Dataset::generate(truth, n, cfg.mu, cfg.zeta, noise.as_ref(), &mut rng)?;
    world_from_dataset(cfg, dataset)
}

/// Wraps an existing dataset with the Laplace input model of `cfg`.
pub fn world_from_dataset(cfg: &ExperimentConfig, dataset: Dataset<f64>) -> Result<World> {
    let kernel = *dataset.truth.function().config();
    let rho = compute_rho(&dataset.truth, cfg.mu, cfg.zeta);
    let (mu, zeta) = (cfg.mu, cfg.zeta);
    let density = DensityModel::new(move |x: &[f64]| laplace_pdf(x[0], mu, zeta), rho)?;
    Ok(World {
        dataset,
        density,
        kernel,
    })
}

/// Uniformly random subsample of size `n0` (indices in increasing order).
pub fn draw_subsample<R: Rng + ?Sized>(n: usize, n0: usize, rng: &mut R) -> Vec<usize> {
    if n0 == n {
        return (0..n).collect();
    }
    let mut idx = sample(rng, n, n0).into_vec();
    idx.sort_unstable();
    idx
}

/// Subsample whose inputs are pairwise distinct (up to the kernel's duplicate
/// tolerance); draws are repeated from the same stream until one qualifies.
pub fn distinct_subsample<R: Rng + ?Sized>(world: &World, n0: usize, rng: &mut R) -> Result<SampleSet<f64>> {
    let n = world.dataset.samples.len();
    for _ in 0..MAX_SUBSAMPLE_DRAWS {
        let sub = world.dataset.samples.select(&draw_subsample(n, n0, rng));
        if check_distinct(&sub.inputs).is_ok() {
            return Ok(sub);
        }
    }
    Err(HarnessError::Config(format!(
        "no subsample of size {n0} with distinct inputs after {MAX_SUBSAMPLE_DRAWS} draws"
    )))
}

/// Ellipsoid for the noiseless outputs of a subsample.
pub fn ellipsoid_for(cfg: &ExperimentConfig, sub: &SampleSet<f64>, radius: Option<f64>) -> Result<Ellipsoid<f64>> {
    Ok(match radius {
        None => noise_free_provider(sub.outputs()?),
        Some(r) => known_noise_ball_provider(sub, cfg.beta, |_, _| Ok(r))?,
    })
}

/// `(1 - beta)` radius of the noise ball, or `None` for noise-free data.
pub fn ball_radius(cfg: &ExperimentConfig, n0: usize) -> Result<Option<f64>> {
    match noise(cfg)? {
        None => Ok(None),
        Some(spec) => Ok(Some(spec.norm_quantile(cfg.beta, n0)?)),
    }
}

/// Norm bound for one subsample; `u` is the independent uniform draw used by
/// the randomized bound.
pub fn norm_bound_for(
    cfg: &ExperimentConfig,
    world: &World,
    sub: &SampleSet<f64>,
    e: &Ellipsoid<f64>,
    u: f64,
) -> Result<NormBound<f64>> {
    let budget = TailBudget::new(cfg.alpha, sub.len())?;
    let xi = xi_star(sub, &world.density, e)?;
    let choice = match cfg.bound {
        BoundChoice::Auto => match select_bound(&budget, &world.density)? {
            BoundMethod::RandomizedHoeffding => BoundChoice::Randomized,
            _ => BoundChoice::Bernstein,
        },
        c => c,
    };
    let bound = match choice {
        BoundChoice::Hoeffding => tau_hoeffding(xi, &world.density, &budget),
        BoundChoice::Randomized => tau_randomized(xi, &world.density, &budget, u)?,
        BoundChoice::Bernstein if e.is_degenerate() => tau_bernstein_noisefree(sub, &world.density, &budget)?,
        BoundChoice::Bernstein => {
            let (v, _) = max_empirical_variance(&world.density, sub, e)?;
            tau_bernstein_noisy(xi, v, &world.density, &budget)?
        }
        BoundChoice::Auto => unreachable!("resolved above"),
    };
    Ok(bound.with_beta(if e.is_degenerate() { 0.0 } else { cfg.beta }))
}

/// Uniform draw in the open unit interval.
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// One subsample band: the ellipsoid, the bound, and the intervals on `grid`.
pub struct SubBand {
    pub bound: NormBound<f64>,
    pub ellipsoid: Ellipsoid<f64>,
    pub intervals: Vec<IntervalEstimate<f64>>,
}

/// Builds `k` subsample bands for a world. Subsample `j` uses the `j`-th
/// draws of the subsample and norm streams.
pub fn subsample_bands(
    cfg: &ExperimentConfig,
    world: &World,
    n0: usize,
    radius: Option<f64>,
    queries: &[f64],
    seed: u64,
    trial: usize,
) -> Result<Vec<SubBand>> {
    let mut sub_rng = stream(seed, trial, Purpose::Subsample);
    let mut u_rng = stream(seed, trial, Purpose::NormDraw);
    let band_cfg = BandConfig::new(cfg.alpha, cfg.beta, n0, world.kernel, BoundMethod::RandomizedHoeffding)?;
    let grid: Vec<Vec<f64>> = queries.iter().map(|&x| vec![x]).collect();
    let mut out = Vec::with_capacity(cfg.k);
    for _ in 0..cfg.k {
        let sub = distinct_subsample(world, n0, &mut sub_rng)?;
        let u = open_unit(&mut u_rng);
        let e = ellipsoid_for(cfg, &sub, radius)?;
        let bound = norm_bound_for(cfg, world, &sub, &e, u)?;
        let band_cfg = BandConfig {
            bound_method: bound.method,
            ..band_cfg
        };
        let intervals = band_over_grid(&grid, &sub, &e, &bound, &band_cfg)?
            .into_iter()
            .collect::<std::result::Result<Vec<_>, _>>()?;
        out.push(SubBand {
            bound,
            ellipsoid: e,
            intervals,
        });
    }
    Ok(out)
}
