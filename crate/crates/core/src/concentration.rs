//! Concentration terms added to an empirical mean to get a high-probability
//! upper bound on the true mean.
//!
//! * `phi(sigma, alpha, n, u)`: uniformly-randomized Hoeffding term for
//!   sigma-sub-Gaussian variables; `u = 1` gives plain Hoeffding.
//! * `psi(kappa, alpha, n, v)`: empirical Bernstein term for `[0, kappa]`-valued
//!   variables with empirical variance `v`.
//!
//! All logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::error::{input_err, Result};
use crate::scalar::Real;

/// Risk level and sample size of a tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBudget<T> {
    alpha: T,
    n: usize,
}

impl<T: Real> TailBudget<T> {
    pub fn new(alpha: T, n: usize) -> Result<Self> {
        if !(alpha > T::zero() && alpha < T::one()) {
            return input_err(format!("risk must lie in (0, 1), got {alpha:?}"));
        }
        if n == 0 {
            return input_err("sample size must be positive");
        }
        Ok(Self { alpha, n })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn require_pairs(&self) -> Result<()> {
        if self.n < 2 {
            return input_err("Bernstein-type terms need at least two samples");
        }
        Ok(())
    }
}

/// `sigma * sqrt(2 ln(1/alpha) / n)`.
pub fn hoeffding_term<T: Real>(sigma: T, budget: &TailBudget<T>) -> T {
    let n = T::from_count(budget.n);
    sigma * (T::lit(2.0) * (T::one() / budget.alpha).ln() / n).sqrt()
}

/// `phi(sigma, alpha, n, u) = sigma sqrt(2 ln(1/alpha)/n) + sigma ln(u) / sqrt(2 n ln(1/alpha))`.
pub fn randomized_hoeffding_term<T: Real>(sigma: T, budget: &TailBudget<T>, u: T) -> Result<T> {
    if !(u > T::zero() && u <= T::one()) {
        return input_err(format!("uniform draw must lie in (0, 1], got {u:?}"));
    }
    let n = T::from_count(budget.n);
    let log_inv = (T::one() / budget.alpha).ln();
    let two = T::lit(2.0);
    Ok(sigma * (two * log_inv / n).sqrt() + sigma * u.ln() / (two * n * log_inv).sqrt())
}

/// Pairwise-difference empirical variance
/// `V_n(x) = 1/(n(n-1)) * sum_{i<=j} (x_i - x_j)^2`.
pub fn empirical_variance<T: Real>(x: &[T]) -> Result<T> {
    let n = x.len();
    if n < 2 {
        return input_err("empirical variance needs at least two samples");
    }
    let mut acc = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = x[i] - x[j];
            acc += d * d;
        }
    }
    Ok(acc / (T::from_count(n) * T::from_count(n - 1)))
}

/// Same quantity as [`empirical_variance`] computed in O(n) as the unbiased
/// sample variance. Used inside optimizers.
pub(crate) fn sample_variance<T: Real>(x: &[T]) -> T {
    let n = x.len();
    if n < 2 {
        return T::zero();
    }
    let nn = T::from_count(n);
    let mean = x.iter().fold(T::zero(), |a, &v| a + v) / nn;
    let ss = x.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean));
    ss / T::from_count(n - 1)
}

/// `psi(kappa, alpha, n, v) = kappa (sqrt(2 v ln(2/alpha) / n) + 7 ln(2/alpha) / (3 (n - 1)))`.
pub fn empirical_bernstein_term<T: Real>(kappa: T, budget: &TailBudget<T>, v: T) -> Result<T> {
    budget.require_pairs()?;
    if kappa < T::zero() || v < T::zero() {
        return input_err("Bernstein term needs nonnegative range and variance");
    }
    let n = T::from_count(budget.n);
    let log2 = (T::lit(2.0) / budget.alpha).ln();
    let spread = (T::lit(2.0) * v * log2 / n).sqrt();
    let bias = T::lit(7.0) * log2 / (T::lit(3.0) * (n - T::one()));
    Ok(kappa * (spread + bias))
}

/// Sample size from which the empirical Bernstein term beats plain Hoeffding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Threshold {
    /// Hoeffding is preferable at every sample size.
    Never,
    At(u64),
}

impl Threshold {
    pub fn is_reached_by(&self, n: usize) -> bool {
        match *self {
            Threshold::Never => false,
            Threshold::At(big_n) => n as u64 >= big_n,
        }
    }
}

/// Largest standard deviation (in units of the range) for which the
/// Bernstein term eventually wins: `sqrt(ln(1/alpha) / (4 ln(2/alpha)))`.
pub fn sigma_bound<T: Real>(alpha: T) -> T {
    let l1 = (T::one() / alpha).ln();
    let l2 = (T::lit(2.0) / alpha).ln();
    (l1 / (T::lit(4.0) * l2)).sqrt()
}

/// `N(alpha, sigma)`: smallest sample size with `psi(1, alpha, n, sigma^2) <= phi(1/2, alpha, n, 1)`.
pub fn switch_threshold<T: Real>(alpha: T, sigma: T) -> Result<Threshold> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return input_err(format!("risk must lie in (0, 1), got {alpha:?}"));
    }
    if sigma < T::zero() {
        return input_err("sigma must be nonnegative");
    }
    if sigma >= sigma_bound(alpha) {
        return Ok(Threshold::Never);
    }
    let l1 = (T::one() / alpha).ln();
    let l2 = (T::lit(2.0) / alpha).ln();
    let two = T::lit(2.0);
    let varsigma = T::lit(7.0) * two.sqrt() * l2 / (T::lit(3.0) * (l1.sqrt() - two * sigma * l2.sqrt()));
    let root = varsigma + (varsigma * varsigma + T::lit(4.0)).sqrt();
    let n = (root * root / T::lit(4.0)).ceil();
    Ok(Threshold::At(n.as_f64() as u64))
}

/// `N' = N(alpha, rho / 2)`, the data-free switching rule for `[0, rho]`-valued terms.
pub fn conservative_threshold<T: Real>(alpha: T, rho: T) -> Result<Threshold> {
    if !(rho > T::zero()) {
        return input_err("range constant must be positive");
    }
    switch_threshold(alpha, rho / T::lit(2.0))
}
