//! Confidence ellipsoids for the noiseless outputs at observed inputs.
//!
//! An ellipsoid is stored as `{z : (z - c)' P (z - c) <= 1}` with the level
//! folded into `P`. A point set `{c}` carries an explicit degenerate flag
//! instead of an infinite shape matrix.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{input_err, Error, Result};
use crate::paley_wiener::SampleSet;
use crate::scalar::Real;

/// Slack on the membership test so optimizer boundary points register as inside.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid<T: Real> {
    center: DVector<T>,
    shape: DMatrix<T>,
    degenerate: bool,
}

impl<T: Real> Ellipsoid<T> {
    /// Nondegenerate ellipsoid; `shape` must be symmetric positive definite.
    pub fn new(center: DVector<T>, shape: DMatrix<T>) -> Result<Self> {
        let n = center.len();
        if shape.nrows() != n || shape.ncols() != n {
            return input_err(format!(
                "shape is {}x{}, center has length {n}",
                shape.nrows(),
                shape.ncols()
            ));
        }
        let scale = shape.amax().max(T::one());
        for i in 0..n {
            for j in 0..i {
                if (shape[(i, j)] - shape[(j, i)]).abs() > T::lit(1e-12) * scale {
                    return input_err("ellipsoid shape matrix is not symmetric");
                }
            }
        }
        if Cholesky::new(shape.clone()).is_none() {
            return input_err("ellipsoid shape matrix is not positive definite");
        }
        Ok(Self {
            center,
            shape,
            degenerate: false,
        })
    }

    /// The single point `{center}`.
    pub fn point(center: DVector<T>) -> Self {
        let n = center.len();
        Self {
            center,
            shape: DMatrix::zeros(n, n),
            degenerate: true,
        }
    }

    /// Euclidean ball; radius 0 gives a point.
    pub fn ball(center: DVector<T>, radius: T) -> Result<Self> {
        if radius < T::zero() || !radius.is_finite() {
            return input_err(format!("ball radius must be finite and nonnegative, got {radius:?}"));
        }
        if radius == T::zero() {
            return Ok(Self::point(center));
        }
        let n = center.len();
        let shape = DMatrix::identity(n, n) / (radius * radius);
        Ok(Self {
            center,
            shape,
            degenerate: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<T> {
        &self.center
    }

    pub fn shape(&self) -> &DMatrix<T> {
        &self.shape
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// `(z - c)' P (z - c)`; zero for a point ellipsoid.
    pub fn level(&self, z: &DVector<T>) -> T {
        if self.degenerate {
            return T::zero();
        }
        let d = z - &self.center;
        d.dot(&(&self.shape * &d))
    }

    pub fn contains(&self, z: &DVector<T>) -> Result<bool> {
        if z.len() != self.dim() {
            return input_err(format!(
                "vector has length {}, ellipsoid dimension {}",
                z.len(),
                self.dim()
            ));
        }
        if self.degenerate {
            let tol = T::lit(1e-12);
            return Ok(z.iter().zip(self.center.iter()).all(|(&a, &b)| (a - b).abs() <= tol));
        }
        Ok(self.level(z) <= T::one() + T::lit(MEMBERSHIP_TOL))
    }

    pub(crate) fn cholesky(&self) -> Result<Cholesky<T, Dyn>> {
        Cholesky::new(self.shape.clone())
            .ok_or_else(|| Error::Numeric("ellipsoid shape lost positive definiteness".into()))
    }

    /// `P^-1`, zero for a point ellipsoid.
    pub fn inverse_shape(&self) -> Result<DMatrix<T>> {
        if self.degenerate {
            return Ok(DMatrix::zeros(self.dim(), self.dim()));
        }
        Ok(self.cholesky()?.inverse())
    }

    /// Largest deviation `|z_k - c_k|` over the ellipsoid: `sqrt((P^-1)_kk)`.
    pub fn axis_halfwidth(&self, k: usize) -> Result<T> {
        if k >= self.dim() {
            return input_err(format!("coordinate {k} out of range for dimension {}", self.dim()));
        }
        if self.degenerate {
            return Ok(T::zero());
        }
        let chol = self.cholesky()?;
        let mut e = DVector::zeros(self.dim());
        e[k] = T::one();
        let col = chol.solve(&e);
        Ok(col[k].max(T::zero()).sqrt())
    }

    /// All coordinate halfwidths at once.
    pub fn axis_halfwidths(&self) -> Result<Vec<T>> {
        if self.degenerate {
            return Ok(vec![T::zero(); self.dim()]);
        }
        let inv = self.inverse_shape()?;
        Ok((0..self.dim()).map(|k| inv[(k, k)].max(T::zero()).sqrt()).collect())
    }

    /// Point of the ellipsoid maximizing `sign * z_k`: `c + sign P^-1 e_k / sqrt((P^-1)_kk)`.
    pub fn coordinate_extremal_point(&self, k: usize, positive: bool) -> Result<DVector<T>> {
        if self.degenerate {
            return Ok(self.center.clone());
        }
        let chol = self.cholesky()?;
        let mut e = DVector::zeros(self.dim());
        e[k] = T::one();
        let col = chol.solve(&e);
        let hw = col[k].sqrt();
        let sign = if positive { T::one() } else { -T::one() };
        Ok(&self.center + col * (sign / hw))
    }

    pub fn to_record(&self) -> EllipsoidRecord {
        EllipsoidRecord {
            center: self.center.iter().map(|v| v.as_f64()).collect(),
            shape: self
                .shape
                .row_iter()
                .flat_map(|r| r.iter().map(|v| v.as_f64()).collect::<Vec<_>>())
                .collect(),
            degenerate: self.degenerate,
        }
    }

    pub fn from_record(rec: &EllipsoidRecord) -> Result<Self> {
        let n = rec.center.len();
        let center = DVector::from_iterator(n, rec.center.iter().map(|&v| T::lit(v)));
        if rec.degenerate {
            return Ok(Self::point(center));
        }
        if rec.shape.len() != n * n {
            return input_err("ellipsoid record shape has wrong length");
        }
        let shape = DMatrix::from_row_iterator(n, n, rec.shape.iter().map(|&v| T::lit(v)));
        Self::new(center, shape)
    }
}

/// Serialized form: center, shape row-major, degenerate flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidRecord {
    pub center: Vec<f64>,
    pub shape: Vec<f64>,
    pub degenerate: bool,
}

/// A construction `P(f*(x_1..x_n0) in Z) >= 1 - beta` for a subsample.
pub trait EllipsoidProvider<T: Real> {
    fn build(&self, subsample: &SampleSet<T>, beta: T, rng: &mut dyn RngCore) -> Result<Ellipsoid<T>>;

    /// Short label written to experiment outputs.
    fn label(&self) -> &'static str;
}

/// Point ellipsoid at the observed values; valid with `beta = 0` when there
/// is no measurement noise.
pub fn noise_free_provider<T: Real>(values: &[T]) -> Ellipsoid<T> {
    Ellipsoid::point(DVector::from_column_slice(values))
}

/// Ball around the observations with radius `r(beta, n0)`, where `r` is a
/// `(1 - beta)`-quantile of the noise vector's Euclidean norm. Since the
/// noiseless outputs are `y - eps`, the contract holds by construction.
pub fn known_noise_ball_provider<T: Real, F>(
    subsample: &SampleSet<T>,
    beta: T,
    noise_radius_quantile: F,
) -> Result<Ellipsoid<T>>
where
    F: Fn(T, usize) -> Result<T>,
{
    let y = subsample.outputs()?;
    if !(beta >= T::zero() && beta < T::one()) {
        return input_err(format!("beta must lie in [0, 1), got {beta:?}"));
    }
    let r = noise_radius_quantile(beta, y.len())?;
    if !r.is_finite() || (beta == T::zero() && r > T::zero()) {
        return input_err("noise is nondegenerate: coverage contract unsatisfiable at beta = 0");
    }
    Ellipsoid::ball(DVector::from_column_slice(y), r)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoiseFreeProvider;

impl<T: Real> EllipsoidProvider<T> for NoiseFreeProvider {
    fn build(&self, subsample: &SampleSet<T>, _beta: T, _rng: &mut dyn RngCore) -> Result<Ellipsoid<T>> {
        Ok(noise_free_provider(subsample.outputs()?))
    }

    fn label(&self) -> &'static str {
        "noise-free"
    }
}

/// Known-noise ball provider with a fixed quantile function.
pub struct KnownNoiseBallProvider<F> {
    quantile: F,
}

impl<F> KnownNoiseBallProvider<F> {
    pub fn new(quantile: F) -> Self {
        Self { quantile }
    }
}

impl<T: Real, F> EllipsoidProvider<T> for KnownNoiseBallProvider<F>
where
    F: Fn(T, usize) -> Result<T>,
{
    fn build(&self, subsample: &SampleSet<T>, beta: T, _rng: &mut dyn RngCore) -> Result<Ellipsoid<T>> {
        known_noise_ball_provider(subsample, beta, &self.quantile)
    }

    fn label(&self) -> &'static str {
        "known-noise-ball"
    }
}
