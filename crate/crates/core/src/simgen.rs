//! Synthetic data: random band-limited truths, Laplace inputs, and centered
//! exponential noise.
//!
//! All generators take an explicit RNG so callers control stream layout.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{input_err, Result};
use crate::paley_wiener::{evaluate, rkhs_norm_sq, Interpolant, KernelConfig, SampleSet};
use crate::scalar::Real;

/// Points used to estimate sup |f| and the density ratio constant.
pub const SUP_GRID_POINTS: usize = 10_000;
/// Safety factor on the grid estimate of `max f^2 / h`.
pub const RHO_INFLATION: f64 = 1.05;
/// Half-width of the window for `rho`, in Laplace scales.
pub const RHO_WINDOW: f64 = 10.0;
const RHO_FLOOR: f64 = 1e-12;
/// Monte Carlo draws for the noise norm quantile.
pub const QUANTILE_DRAWS: usize = 200_000;
const QUANTILE_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

/// Random truth `f = sum_k w_k k(., c_k)` with uniform knots and weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthSpec<T> {
    pub knot_count: usize,
    pub a: T,
    pub b: T,
    pub kernel: KernelConfig<T>,
}

impl<T: Real> TruthSpec<T> {
    pub fn new(knot_count: usize, a: T, b: T, kernel: KernelConfig<T>) -> Result<Self> {
        if knot_count == 0 {
            return input_err("truth needs at least one knot");
        }
        if !(a < b) {
            return input_err(format!("domain [{a:?}, {b:?}] is empty"));
        }
        if kernel.dim() != 1 {
            return input_err("truth generation is one-dimensional");
        }
        Ok(Self {
            knot_count,
            a,
            b,
            kernel,
        })
    }
}

/// A generated truth with its normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth<T: Real> {
    function: Interpolant<T>,
    /// Divisor applied to the raw weights (1 when no rescaling was needed).
    pub normalizer: T,
}

impl<T: Real> Truth<T> {
    pub fn from_interpolant(function: Interpolant<T>) -> Self {
        Self {
            function,
            normalizer: T::one(),
        }
    }

    pub fn function(&self) -> &Interpolant<T> {
        &self.function
    }

    pub fn eval(&self, x: T) -> T {
        evaluate(&self.function, &[x]).expect("one-dimensional truth")
    }

    pub fn norm_sq(&self) -> T {
        rkhs_norm_sq(&self.function)
    }

    pub fn knots(&self) -> Vec<T> {
        self.function.nodes().iter().map(|n| n[0]).collect()
    }

    pub fn weights(&self) -> Vec<T> {
        self.function.coeffs().iter().copied().collect()
    }
}

fn linspace<T: Real>(lo: T, hi: T, n: usize) -> impl Iterator<Item = T> {
    let step = (hi - lo) / T::from_count(n.max(2) - 1);
    (0..n).map(move |i| lo + step * T::from_count(i))
}

/// Draws knots in `[a, b]` and weights in `[-1, 1]`; rescales so that the
/// grid estimate of `sup |f|` is at most one.
pub fn gen_true_function<T: Real, R: Rng + ?Sized>(spec: &TruthSpec<T>, rng: &mut R) -> Result<Truth<T>> {
    let (a, b) = (spec.a.as_f64(), spec.b.as_f64());
    let knots: Vec<Vec<T>> = (0..spec.knot_count)
        .map(|_| vec![T::lit(rng.random_range(a..=b))])
        .collect();
    let weights = DVector::from_iterator(
        spec.knot_count,
        (0..spec.knot_count).map(|_| T::lit(rng.random_range(-1.0..=1.0))),
    );
    let raw = Interpolant::from_coefficients(knots, weights, spec.kernel)?;
    let spill = T::lit(5.0) * T::PI() / spec.kernel.eta();
    let sup = linspace(spec.a - spill, spec.b + spill, SUP_GRID_POINTS)
        .map(|x| evaluate(&raw, &[x]).map(|v| v.abs()))
        .try_fold(T::zero(), |m, v| v.map(|v| m.max(v)))?;
    if sup > T::one() {
        Ok(Truth {
            function: raw.scaled(T::one() / sup),
            normalizer: sup,
        })
    } else {
        Ok(Truth {
            function: raw,
            normalizer: T::one(),
        })
    }
}

/// `(1 / (2 zeta)) exp(-|x - mu| / zeta)`.
pub fn laplace_pdf<T: Real>(x: T, mu: T, zeta: T) -> T {
    (-(x - mu).abs() / zeta).exp() / (T::lit(2.0) * zeta)
}

/// `n` iid Laplace(`mu`, `zeta`) draws by inversion.
pub fn sample_inputs<T: Real, R: Rng + ?Sized>(n: usize, mu: T, zeta: T, rng: &mut R) -> Result<Vec<T>> {
    if !(zeta > T::zero()) {
        return input_err(format!("Laplace scale must be positive, got {zeta:?}"));
    }
    Ok((0..n)
        .map(|_| {
            let u: f64 = rng.random_range(-0.5..0.5);
            let x = -u.signum() * (1.0 - 2.0 * u.abs()).ln();
            mu + zeta * T::lit(x)
        })
        .collect())
}

/// Noise `E - lambda0` with `E` exponential of mean `lambda0`: skewed, mean zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec<T> {
    pub lambda0: T,
}

impl<T: Real> NoiseSpec<T> {
    pub fn new(lambda0: T) -> Result<Self> {
        if !(lambda0 > T::zero()) {
            return input_err(format!("noise scale must be positive, got {lambda0:?}"));
        }
        Ok(Self { lambda0 })
    }

    /// `(1 - beta)`-quantile of `||eps||_2` for `n0` iid noise terms.
    ///
    /// Exact for a single term; otherwise a Monte Carlo order statistic with a
    /// fixed seed, so repeated calls agree.
    pub fn norm_quantile(&self, beta: T, n0: usize) -> Result<T> {
        if !(beta > T::zero() && beta < T::one()) {
            if beta == T::zero() {
                return Ok(T::lit(f64::INFINITY));
            }
            return input_err(format!("beta must lie in (0, 1), got {beta:?}"));
        }
        if n0 == 0 {
            return Ok(T::zero());
        }
        let lam = self.lambda0.as_f64();
        let level = 1.0 - beta.as_f64();
        if n0 == 1 {
            // P(|E - lam| <= r) = F(lam + r) - F((lam - r)+), F(x) = 1 - exp(-x / lam)
            let cdf = |r: f64| {
                let upper = 1.0 - (-(lam + r) / lam).exp();
                let lower = 1.0 - (-((lam - r).max(0.0)) / lam).exp();
                upper - lower
            };
            let (mut lo, mut hi) = (0.0, lam);
            while cdf(hi) < level {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if cdf(mid) < level {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(T::lit(hi));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(QUANTILE_SEED ^ n0 as u64);
        let mut norms: Vec<f64> = (0..QUANTILE_DRAWS)
            .map(|_| {
                (0..n0)
                    .map(|_| {
                        let e: f64 = rng.sample(Exp1);
                        let eps = lam * e - lam;
                        eps * eps
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        norms.sort_by(|a, b| a.partial_cmp(b).expect("finite norms"));
        let idx = ((level * QUANTILE_DRAWS as f64).ceil() as usize).clamp(1, QUANTILE_DRAWS) - 1;
        Ok(T::lit(norms[idx]))
    }
}

/// `n` iid noise terms.
pub fn gen_noise<T: Real, R: Rng + ?Sized>(n: usize, spec: &NoiseSpec<T>, rng: &mut R) -> Vec<T> {
    let lam = spec.lambda0.as_f64();
    (0..n)
        .map(|_| {
            let e: f64 = rng.sample(Exp1);
            T::lit(lam * e - lam)
        })
        .collect()
}

/// `1.05 * max f^2 / h` over a grid on `[mu - 10 zeta, mu + 10 zeta]`.
pub fn compute_rho<T: Real>(truth: &Truth<T>, mu: T, zeta: T) -> T {
    let w = T::lit(RHO_WINDOW) * zeta;
    let max_ratio = linspace(mu - w, mu + w, SUP_GRID_POINTS)
        .map(|x| {
            let f = truth.eval(x);
            f * f / laplace_pdf(x, mu, zeta)
        })
        .fold(T::zero(), |m, r| m.max(r));
    (max_ratio * T::lit(RHO_INFLATION)).max(T::lit(RHO_FLOOR))
}

/// Serializable record of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub seed: u64,
    pub eta: f64,
    pub knots: Vec<f64>,
    pub weights: Vec<f64>,
    pub inputs: Vec<f64>,
    pub outputs: Vec<f64>,
    pub noiseless: Vec<f64>,
}

/// A simulated regression dataset with its truth.
#[derive(Debug, Clone)]
pub struct Dataset<T: Real> {
    pub truth: Truth<T>,
    pub samples: SampleSet<T>,
    pub noiseless: Vec<T>,
}

impl<T: Real> Dataset<T> {
    /// Draws `n` Laplace inputs and observes `f + eps` (or `f` when `noise` is `None`).
    pub fn generate<R: Rng + ?Sized>(
        truth: Truth<T>,
        n: usize,
        mu: T,
        zeta: T,
        noise: Option<&NoiseSpec<T>>,
        rng: &mut R,
    ) -> Result<Self> {
        let xs = sample_inputs(n, mu, zeta, rng)?;
        let noiseless: Vec<T> = xs.iter().map(|&x| truth.eval(x)).collect();
        let eps = match noise {
            Some(spec) => gen_noise(n, spec, rng),
            None => vec![T::zero(); n],
        };
        let ys: Vec<T> = noiseless.iter().zip(&eps).map(|(&f, &e)| f + e).collect();
        Ok(Self {
            samples: SampleSet::from_scalars(&xs, Some(&ys))?,
            truth,
            noiseless,
        })
    }

    pub fn to_record(&self, seed: u64) -> DatasetRecord {
        let f = |v: &[T]| v.iter().map(|x| x.as_f64()).collect::<Vec<_>>();
        DatasetRecord {
            seed,
            eta: self.truth.function().config().eta().as_f64(),
            knots: f(&self.truth.knots()),
            weights: f(&self.truth.weights()),
            inputs: self.samples.inputs.iter().map(|x| x[0].as_f64()).collect(),
            outputs: f(self.samples.outputs().expect("generated data has outputs")),
            noiseless: f(&self.noiseless),
        }
    }

    /// Rebuilds a dataset written by [`Dataset::to_record`].
    pub fn from_record(rec: &DatasetRecord) -> Result<Self> {
        let kernel = KernelConfig::new(T::lit(rec.eta), 1)?;
        let nodes = rec.knots.iter().map(|&k| vec![T::lit(k)]).collect();
        let coeffs = DVector::from_iterator(rec.weights.len(), rec.weights.iter().map(|&w| T::lit(w)));
        let truth = Truth::from_interpolant(Interpolant::from_coefficients(nodes, coeffs, kernel)?);
        if rec.inputs.len() != rec.outputs.len() || rec.inputs.len() != rec.noiseless.len() {
            return input_err("dataset record has mismatched lengths");
        }
        let lit = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        Ok(Self {
            truth,
            samples: SampleSet::from_scalars(&lit(&rec.inputs), Some(&lit(&rec.outputs)))?,
            noiseless: lit(&rec.noiseless),
        })
    }
}
