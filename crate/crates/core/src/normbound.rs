//! High-probability upper bounds on the squared RKHS norm of the truth.
//!
//! With inputs drawn from a known density `h`, `z_k^2 / h(x_k)` is an unbiased
//! estimate of `||f||^2`. The noiseless `z` are only known to lie in an
//! ellipsoid, so the empirical mean is replaced by its maximum `xi*` over the
//! ellipsoid and a concentration term is added.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::concentration::{
    conservative_threshold, empirical_bernstein_term, empirical_variance, hoeffding_term, randomized_hoeffding_term,
    sample_variance, TailBudget,
};
use crate::ellipsoid::Ellipsoid;
use crate::error::{input_err, Result};
use crate::paley_wiener::SampleSet;
use crate::quadopt::{max_quadratic_over_ellipsoid, QuadraticObjective};
use crate::scalar::Real;

/// Largest subsample for which the box bound enumerates all vertices.
pub const VERTEX_ENUMERATION_MAX: usize = 12;

const LOCAL_STARTS: usize = 20;
const LOCAL_STEPS: usize = 300;
const BOUNDARY_SAMPLES: usize = 10_000;
const LOCAL_INFLATION: f64 = 1.01;
const SEARCH_SEED: u64 = 0x7a5e_11ce;

type Pdf<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// Known input density `h` and a constant `rho` with `f^2 <= rho h`.
#[derive(Clone)]
pub struct DensityModel<T> {
    pdf: Pdf<T>,
    rho: T,
}

impl<T: Real> DensityModel<T> {
    pub fn new(pdf: impl Fn(&[T]) -> T + Send + Sync + 'static, rho: T) -> Result<Self> {
        if !(rho > T::zero()) || !rho.is_finite() {
            return input_err(format!("range constant must be positive and finite, got {rho:?}"));
        }
        Ok(Self {
            pdf: Arc::new(pdf),
            rho,
        })
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn pdf(&self, x: &[T]) -> Result<T> {
        let h = (self.pdf)(x);
        if !(h > T::zero()) || !h.is_finite() {
            return input_err(format!("density must be positive at {x:?}, got {h:?}"));
        }
        Ok(h)
    }

    fn pdf_at_inputs(&self, subsample: &SampleSet<T>) -> Result<Vec<T>> {
        subsample.inputs.iter().map(|x| self.pdf(x)).collect()
    }
}

impl<T: fmt::Debug> fmt::Debug for DensityModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityModel")
            .field("rho", &self.rho)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    Hoeffding,
    RandomizedHoeffding,
    BernsteinNoisefree,
    BernsteinNoisy,
}

impl BoundMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundMethod::Hoeffding => "hoeffding",
            BoundMethod::RandomizedHoeffding => "randomized_hoeffding",
            BoundMethod::BernsteinNoisefree => "bernstein_noisefree",
            BoundMethod::BernsteinNoisy => "bernstein_noisy",
        }
    }
}

impl fmt::Display for BoundMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `tau` with `P(||f||^2 <= tau) >= 1 - alpha - beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBound<T> {
    pub tau: T,
    pub method: BoundMethod,
    pub alpha: T,
    pub beta: T,
    pub xi_star: T,
    pub u_draw: Option<T>,
}

impl<T: Real> NormBound<T> {
    /// Bound with a given `tau`, e.g. the true norm in oracle experiments.
    pub fn fixed(tau: T, method: BoundMethod) -> Self {
        Self {
            tau,
            method,
            alpha: T::zero(),
            beta: T::zero(),
            xi_star: tau,
            u_draw: None,
        }
    }

    /// Copy with the ellipsoid risk recorded.
    pub fn with_beta(mut self, beta: T) -> Self {
        self.beta = beta;
        self
    }
}

fn check_dims<T: Real>(subsample: &SampleSet<T>, e: &Ellipsoid<T>) -> Result<()> {
    if subsample.len() != e.dim() {
        return input_err(format!(
            "ellipsoid dimension {} differs from subsample size {}",
            e.dim(),
            subsample.len()
        ));
    }
    Ok(())
}

fn check_budget<T: Real>(budget: &TailBudget<T>, n0: usize) -> Result<()> {
    if budget.n() != n0 {
        return input_err(format!(
            "budget sample size {} differs from subsample size {n0}",
            budget.n()
        ));
    }
    Ok(())
}

fn importance_terms<T: Real>(z: &[T], h: &[T]) -> Vec<T> {
    z.iter().zip(h).map(|(&zk, &hk)| zk * zk / hk).collect()
}

fn mean<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |a, &v| a + v) / T::from_count(x.len())
}

/// `xi* = max_{z in Z} (1/n0) sum z_k^2 / h(x_k)`.
pub fn xi_star<T: Real>(subsample: &SampleSet<T>, density: &DensityModel<T>, e: &Ellipsoid<T>) -> Result<T> {
    check_dims(subsample, e)?;
    if subsample.is_empty() {
        return input_err("norm estimate needs at least one sample");
    }
    let h = density.pdf_at_inputs(subsample)?;
    let n0 = T::from_count(h.len());
    let diag = DVector::from_iterator(h.len(), h.iter().map(|&hk| T::one() / (n0 * hk)));
    let obj = QuadraticObjective::form(DMatrix::from_diagonal(&diag))?;
    Ok(max_quadratic_over_ellipsoid(&obj, e)?.value.max(T::zero()))
}

/// `tau_0 = xi* + rho sqrt(ln(1/alpha) / (2 n0))`.
pub fn tau_hoeffding<T: Real>(xi: T, density: &DensityModel<T>, budget: &TailBudget<T>) -> NormBound<T> {
    NormBound {
        tau: xi + hoeffding_term(density.rho / T::lit(2.0), budget),
        method: BoundMethod::Hoeffding,
        alpha: budget.alpha(),
        beta: T::zero(),
        xi_star: xi,
        u_draw: None,
    }
}

/// `tau_u = xi* + phi(rho/2, alpha, n0, u)` for an independent uniform `u`.
///
/// For `u < alpha^2` the concentration term is negative; the result is then
/// raised to `xi*`, which only enlarges the bound.
pub fn tau_randomized<T: Real>(xi: T, density: &DensityModel<T>, budget: &TailBudget<T>, u: T) -> Result<NormBound<T>> {
    if !(u > T::zero() && u < T::one()) {
        return input_err(format!("uniform draw must lie in (0, 1), got {u:?}"));
    }
    let term = randomized_hoeffding_term(density.rho / T::lit(2.0), budget, u)?;
    Ok(NormBound {
        tau: (xi + term).max(xi),
        method: BoundMethod::RandomizedHoeffding,
        alpha: budget.alpha(),
        beta: T::zero(),
        xi_star: xi,
        u_draw: Some(u),
    })
}

/// `tau_b = mean(T(y)) + psi(rho, alpha, n0, V_n(T(y)) / rho^2)` with
/// `T_k = y_k^2 / h(x_k)`, for noise-free observations.
///
/// The Bernstein inequality is stated for `[0, 1]` variables; after scaling by
/// `rho` the variance argument is that of `T / rho`.
pub fn tau_bernstein_noisefree<T: Real>(
    subsample: &SampleSet<T>,
    density: &DensityModel<T>,
    budget: &TailBudget<T>,
) -> Result<NormBound<T>> {
    let y = subsample.outputs()?;
    check_budget(budget, y.len())?;
    let h = density.pdf_at_inputs(subsample)?;
    let t = importance_terms(y, &h);
    let v = empirical_variance(&t)?;
    let xi = mean(&t);
    Ok(NormBound {
        tau: xi + empirical_bernstein_term(density.rho, budget, v / (density.rho * density.rho))?,
        method: BoundMethod::BernsteinNoisefree,
        alpha: budget.alpha(),
        beta: T::zero(),
        xi_star: xi,
        u_draw: None,
    })
}

/// Certified upper bound on `max_{z in Z} V_n(T(z))` and the best point found.
///
/// The objective is quartic in `z`. Local search gives a lower estimate; a
/// rigorous upper bound comes from relaxing `Z` to its bounding box, over which
/// the (convex) variance is maximized at a vertex. The reported value is the
/// smaller of the box bound and the local value inflated by 1%.
pub fn max_empirical_variance<T: Real>(
    density: &DensityModel<T>,
    subsample: &SampleSet<T>,
    e: &Ellipsoid<T>,
) -> Result<(T, DVector<T>)> {
    check_dims(subsample, e)?;
    let n0 = e.dim();
    if n0 < 2 {
        return input_err("empirical variance needs at least two samples");
    }
    let h = density.pdf_at_inputs(subsample)?;
    let variance_at = |z: &DVector<T>| sample_variance(&importance_terms(z.as_slice(), &h));
    if e.is_degenerate() {
        let z = e.center().clone();
        let v = empirical_variance(&importance_terms(z.as_slice(), &h))?;
        return Ok((v, z));
    }

    let (local_value, z_best) = local_variance_search(e, &h, &variance_at)?;
    let box_bound = box_variance_bound(e, &h)?;
    let inflated = local_value * T::lit(LOCAL_INFLATION);
    Ok((box_bound.min(inflated).max(local_value), z_best))
}

fn local_variance_search<T: Real>(
    e: &Ellipsoid<T>,
    h: &[T],
    variance_at: &dyn Fn(&DVector<T>) -> T,
) -> Result<(T, DVector<T>)> {
    let n0 = e.dim();
    let nf = T::from_count(n0);
    let l = e.cholesky()?.l();
    // z = c + R w, R = L^-T
    let r = l
        .transpose()
        .solve_upper_triangular(&DMatrix::identity(n0, n0))
        .expect("Cholesky factor is invertible");
    let center = e.center();
    let to_z = |w: &DVector<T>| center + &r * w;
    let mut rng = ChaCha8Rng::seed_from_u64(SEARCH_SEED);
    let random_unit = |rng: &mut ChaCha8Rng| loop {
        let w = DVector::from_fn(n0, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)));
        let nrm = w.norm();
        if nrm > T::lit(1e-3) {
            break w / nrm;
        }
    };

    let mut starts: Vec<DVector<T>> = vec![DVector::zeros(n0)];
    let lt = l.transpose();
    for k in 0..n0 {
        for positive in [true, false] {
            if starts.len() >= LOCAL_STARTS {
                break;
            }
            let z = e.coordinate_extremal_point(k, positive)?;
            starts.push(&lt * (z - center));
        }
    }
    while starts.len() < LOCAL_STARTS {
        starts.push(random_unit(&mut rng));
    }

    let gradient = |w: &DVector<T>| -> DVector<T> {
        let z = to_z(w);
        let t: Vec<T> = importance_terms(z.as_slice(), h);
        let m = mean(&t);
        let gz = DVector::from_fn(n0, |k, _| {
            T::lit(2.0) * (t[k] - m) / (nf - T::one()) * T::lit(2.0) * z[k] / h[k]
        });
        r.tr_mul(&gz)
    };

    let mut best = -T::max_value().unwrap();
    let mut best_w = DVector::zeros(n0);
    for mut w in starts {
        let mut val = variance_at(&to_z(&w));
        let mut step = T::one();
        for _ in 0..LOCAL_STEPS {
            let g = gradient(&w);
            let gn = g.norm();
            if gn <= T::machine_eps() {
                break;
            }
            let mut improved = false;
            while step > T::lit(1e-12) {
                let mut cand = &w + &g * (step / gn);
                let cn = cand.norm();
                if cn > T::one() {
                    cand /= cn;
                }
                let cv = variance_at(&to_z(&cand));
                if cv > val {
                    w = cand;
                    val = cv;
                    improved = true;
                    step = (step * T::lit(2.0)).min(T::lit(4.0));
                    break;
                }
                step /= T::lit(2.0);
            }
            if !improved {
                break;
            }
        }
        if val > best {
            best = val;
            best_w = w;
        }
    }

    for _ in 0..BOUNDARY_SAMPLES {
        let w = random_unit(&mut rng);
        let v = variance_at(&to_z(&w));
        if v > best {
            best = v;
            best_w = w;
        }
    }
    Ok((best, to_z(&best_w)))
}

/// Upper bound on the variance of `T(z)` over the bounding box of `Z`.
fn box_variance_bound<T: Real>(e: &Ellipsoid<T>, h: &[T]) -> Result<T> {
    let hw = e.axis_halfwidths()?;
    let c = e.center();
    let n = h.len();
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for k in 0..n {
        let a = c[k].abs();
        let inner = (a - hw[k]).max(T::zero());
        lo.push(inner * inner / h[k]);
        hi.push((a + hw[k]) * (a + hw[k]) / h[k]);
    }
    Ok(if n <= VERTEX_ENUMERATION_MAX {
        box_vertex_max(&lo, &hi)
    } else {
        box_minimax_bound(&lo, &hi)
    })
}

/// Exact maximum of the sample variance over a box: it is convex, so some
/// vertex attains it.
fn box_vertex_max<T: Real>(lo: &[T], hi: &[T]) -> T {
    let n = lo.len();
    let mut best = T::zero();
    let mut t = vec![T::zero(); n];
    for mask in 0u32..(1u32 << n) {
        for k in 0..n {
            t[k] = if mask & (1 << k) != 0 { hi[k] } else { lo[k] };
        }
        best = best.max(sample_variance(&t));
    }
    best
}

/// `min_m sum_k max((l_k - m)^2, (u_k - m)^2) / (n - 1)`, which dominates the
/// variance of every point in the box because the sample mean minimizes the
/// sum of squares.
fn box_minimax_bound<T: Real>(lo: &[T], hi: &[T]) -> T {
    let n = lo.len();
    let g = |m: T| {
        let mut acc = T::zero();
        for k in 0..n {
            let a = lo[k] - m;
            let b = hi[k] - m;
            acc += (a * a).max(b * b);
        }
        acc / T::from_count(n - 1)
    };
    let mut a = lo.iter().copied().fold(hi[0], |x, y| x.min(y));
    let mut b = hi.iter().copied().fold(lo[0], |x, y| x.max(y));
    // convex in m: golden-section search; any m gives a valid bound
    let ratio = T::lit(0.618_033_988_749_894_8);
    for _ in 0..200 {
        if b - a <= T::machine_eps() * (T::one() + b.abs()) {
            break;
        }
        let m1 = b - ratio * (b - a);
        let m2 = a + ratio * (b - a);
        if g(m1) <= g(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    g((a + b) / T::lit(2.0))
}

/// `tau_e = xi* + psi(rho, alpha, n0, v* / rho^2)`, with `v*` an upper bound on
/// the empirical variance of `T(z)` over the ellipsoid.
pub fn tau_bernstein_noisy<T: Real>(
    xi: T,
    v_star: T,
    density: &DensityModel<T>,
    budget: &TailBudget<T>,
) -> Result<NormBound<T>> {
    if budget.n() < 2 {
        return input_err("Bernstein bound needs at least two samples");
    }
    Ok(NormBound {
        tau: xi + empirical_bernstein_term(density.rho, budget, v_star / (density.rho * density.rho))?,
        method: BoundMethod::BernsteinNoisy,
        alpha: budget.alpha(),
        beta: T::zero(),
        xi_star: xi,
        u_draw: None,
    })
}

/// Data-free choice between the randomized Hoeffding and Bernstein bounds.
pub fn select_bound<T: Real>(budget: &TailBudget<T>, density: &DensityModel<T>) -> Result<BoundMethod> {
    let threshold = conservative_threshold(budget.alpha(), density.rho)?;
    Ok(if threshold.is_reached_by(budget.n()) {
        BoundMethod::BernsteinNoisy
    } else {
        BoundMethod::RandomizedHoeffding
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concentration::{switch_threshold, Threshold};
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn flat(rho: f64) -> DensityModel<f64> {
        DensityModel::new(|_: &[f64]| 1.0, rho).unwrap()
    }

    fn laplace(rho: f64) -> DensityModel<f64> {
        DensityModel::new(|x: &[f64]| 0.5 * (-x[0].abs()).exp(), rho).unwrap()
    }

    fn budget(alpha: f64, n: usize) -> TailBudget<f64> {
        TailBudget::new(alpha, n).unwrap()
    }

    fn samples(xs: &[f64], ys: &[f64]) -> SampleSet<f64> {
        SampleSet::from_scalars(xs, Some(ys)).unwrap()
    }

    #[test]
    fn xi_star_point_and_interval() {
        let d = laplace(1.0);
        let s = samples(&[0.0, 1.0], &[0.5, -0.3]);
        let e = Ellipsoid::point(dvector![0.5, -0.3]);
        let h0 = 0.5;
        let h1 = 0.5 * (-1.0f64).exp();
        assert_relative_eq!(
            xi_star(&s, &d, &e).unwrap(),
            (0.25 / h0 + 0.09 / h1) / 2.0,
            epsilon = 1e-14
        );

        let s1 = samples(&[1.0], &[-0.4]);
        let e1 = Ellipsoid::ball(dvector![-0.4], 0.25).unwrap();
        assert_relative_eq!(xi_star(&s1, &d, &e1).unwrap(), 0.65f64.powi(2) / h1, epsilon = 1e-12);
    }

    #[test]
    fn tau_hoeffding_value() {
        let b = budget(0.1, 50);
        let t = tau_hoeffding(0.0, &flat(1.0), &b);
        assert_relative_eq!(t.tau, 0.15174271293851463, epsilon = 1e-14);
        assert_eq!(t.method, BoundMethod::Hoeffding);
        let t2 = tau_hoeffding(0.7, &flat(1.0), &b);
        assert_relative_eq!(t2.tau - 0.7, t.tau, epsilon = 1e-14);
    }

    #[test]
    fn tau_randomized_value_and_dominance() {
        let b = budget(0.1, 50);
        let d = flat(1.0);
        let t0 = tau_hoeffding(0.0, &d, &b).tau;
        let tu = tau_randomized(0.0, &d, &b, 0.5).unwrap().tau;
        assert_relative_eq!(t0 - tu, 0.0228395541089609, epsilon = 1e-14);
        let near_one = tau_randomized(0.0, &d, &b, 1.0 - 1e-12).unwrap().tau;
        assert!(near_one < t0 && t0 - near_one < 1e-10);
        for k in 1..1000 {
            let u = k as f64 / 1000.0;
            assert!(tau_randomized(0.2, &d, &b, u).unwrap().tau < tau_hoeffding(0.2, &d, &b).tau);
        }
        assert!(tau_randomized(0.0, &d, &b, 1.0).is_err());
        assert!(tau_randomized(0.0, &d, &b, 0.0).is_err());
    }

    #[test]
    fn tau_randomized_never_below_xi() {
        let b = budget(0.1, 50);
        let t = tau_randomized(0.3, &flat(1.0), &b, 1e-6).unwrap();
        assert_eq!(t.tau, 0.3);
    }

    #[test]
    fn bernstein_noisefree_value() {
        // T = (0, 1, 2) with h = 1
        let s = samples(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2f64.sqrt()]);
        let t = tau_bernstein_noisefree(&s, &flat(2.0), &budget(0.1, 3)).unwrap();
        assert_relative_eq!(t.tau, 9.4032492632276, epsilon = 1e-12);

        let c = samples(&[0.0, 1.0, 2.0], &[1.0, -1.0, 1.0]);
        let tc = tau_bernstein_noisefree(&c, &flat(2.0), &budget(0.1, 3)).unwrap();
        assert_relative_eq!(tc.tau, 1.0 + 2.0 * 7.0 * 20f64.ln() / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn bernstein_noisy_reduces_on_point() {
        let d = laplace(3.0);
        let s = samples(&[0.1, -0.5, 0.9], &[0.2, 0.4, -0.1]);
        let e = Ellipsoid::point(dvector![0.2, 0.4, -0.1]);
        let b = budget(0.05, 3);
        let xi = xi_star(&s, &d, &e).unwrap();
        let (v, _) = max_empirical_variance(&d, &s, &e).unwrap();
        let te = tau_bernstein_noisy(xi, v, &d, &b).unwrap();
        let tb = tau_bernstein_noisefree(&s, &d, &b).unwrap();
        assert_relative_eq!(te.tau, tb.tau, epsilon = 1e-12);
        let zero = tau_bernstein_noisy(xi, 0.0, &d, &b).unwrap();
        assert_relative_eq!(zero.tau, xi + 3.0 * 7.0 * 40f64.ln() / 6.0, epsilon = 1e-12);
        assert!(tau_bernstein_noisy(xi, 0.0, &d, &budget(0.05, 1)).is_err());
    }

    #[test]
    fn variance_bound_dominates_grid_on_box() {
        let d = laplace(1.0);
        let s = samples(&[0.2, -0.7], &[0.0, 0.0]);
        let e = Ellipsoid::new(dvector![0.3, -0.1], DMatrix::from_diagonal(&dvector![4.0, 25.0])).unwrap();
        let (v, z) = max_empirical_variance(&d, &s, &e).unwrap();
        assert!(e.contains(&z).unwrap());
        let h = [d.pdf(&[0.2]).unwrap(), d.pdf(&[-0.7]).unwrap()];
        let mut grid_max = 0.0f64;
        let m = 1000;
        for i in 0..=m {
            for j in 0..=m {
                let a = -1.0 + 2.0 * i as f64 / m as f64;
                let b = -1.0 + 2.0 * j as f64 / m as f64;
                let zz = dvector![0.3 + 0.5 * a, -0.1 + 0.2 * b];
                if e.level(&zz) <= 1.0 {
                    let t = importance_terms(zz.as_slice(), &h);
                    grid_max = grid_max.max(sample_variance(&t));
                }
            }
        }
        assert!(v >= grid_max);
        assert!(v <= grid_max * 1.02);
    }

    #[test]
    fn variance_bound_dominates_grid_on_sphere() {
        let d = flat(1.0);
        let s = samples(&[0.0, 1.0, 2.0], &[0.0; 3]);
        let e = Ellipsoid::ball(dvector![0.1, 0.0, -0.1], 1.0).unwrap();
        let (v, z) = max_empirical_variance(&d, &s, &e).unwrap();
        let m = 80;
        let mut grid_max = 0.0f64;
        for i in 0..=m {
            for j in 0..=m {
                for k in 0..=m {
                    let p = |q: usize| -1.0 + 2.0 * q as f64 / m as f64;
                    let zz = dvector![0.1 + p(i), p(j), -0.1 + p(k)];
                    if e.level(&zz) <= 1.0 {
                        grid_max = grid_max.max(sample_variance(&importance_terms(zz.as_slice(), &[1.0; 3])));
                    }
                }
            }
        }
        assert!(v >= grid_max);
        // extremal point puts coordinates at opposite magnitudes
        let t = importance_terms(z.as_slice(), &[1.0; 3]);
        let spread = t.iter().cloned().fold(f64::MIN, f64::max) - t.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 0.5);
    }

    #[test]
    fn minimax_bound_dominates_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let n = 8;
            let lo: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let hi: Vec<f64> = lo.iter().map(|&l| l + rng.random_range(0.0..2.0)).collect();
            let exact = box_vertex_max(&lo, &hi);
            let relaxed = box_minimax_bound(&lo, &hi);
            assert!(relaxed >= exact - 1e-12);
        }
    }

    #[test]
    fn large_subsample_uses_relaxed_box() {
        let n = 20;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let s = samples(&xs, &ys);
        let e = Ellipsoid::ball(DVector::from_vec(ys.clone()), 0.3).unwrap();
        let d = laplace(1.0);
        let (v, z) = max_empirical_variance(&d, &s, &e).unwrap();
        let h: Vec<f64> = xs.iter().map(|&x| d.pdf(&[x]).unwrap()).collect();
        let at_z = sample_variance(&importance_terms(z.as_slice(), &h));
        assert!(v >= at_z && at_z > 0.0);
    }

    #[test]
    fn selection_follows_threshold() {
        assert_eq!(
            select_bound(&budget(0.1, 50), &flat(1.0)).unwrap(),
            BoundMethod::RandomizedHoeffding
        );
        let rho = 0.5;
        let Threshold::At(n) = switch_threshold(0.1, rho / 2.0).unwrap() else {
            panic!("finite threshold expected");
        };
        let n = n as usize;
        assert_eq!(
            select_bound(&budget(0.1, n), &flat(rho)).unwrap(),
            BoundMethod::BernsteinNoisy
        );
        assert_eq!(
            select_bound(&budget(0.1, n - 1), &flat(rho)).unwrap(),
            BoundMethod::RandomizedHoeffding
        );
    }

    #[test]
    fn density_rejects_bad_values() {
        assert!(DensityModel::new(|_: &[f64]| 1.0, 0.0).is_err());
        let d = DensityModel::new(|_: &[f64]| 0.0, 1.0).unwrap();
        assert!(d.pdf(&[0.0]).is_err());
    }
}
