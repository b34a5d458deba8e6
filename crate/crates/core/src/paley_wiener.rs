//! Paley-Wiener reproducing kernel, Gram matrices and minimum-norm interpolation.
//!
//! The Paley-Wiener space with band limit `eta` on `R^d` is the RKHS with kernel
//!
//! ```text
//! k(u, v) = (1 / pi^d) * prod_j sin(eta (u_j - v_j)) / (u_j - v_j)
//! ```
//!
//! where each factor equals `eta` on the diagonal. Its norm coincides with the
//! L2 norm, which is what makes importance-sampling norm estimates possible.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{input_err, Error, Result};
use crate::scalar::Real;

/// Largest Gram condition number accepted by exact linear solves.
pub const CONDITION_CAP: f64 = 1e12;

/// Inputs closer than this in max-norm are treated as duplicates.
pub const DUPLICATE_TOL: f64 = 1e-9;

/// Band limit and input dimension of a Paley-Wiener space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig<T> {
    eta: T,
    dim: usize,
}

impl<T: Real> KernelConfig<T> {
    pub fn new(eta: T, dim: usize) -> Result<Self> {
        if !(eta > T::zero()) || !eta.is_finite() {
            return input_err(format!("band limit must be positive and finite, got {eta:?}"));
        }
        if dim == 0 {
            return input_err("input dimension must be at least 1");
        }
        Ok(Self { eta, dim })
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Kernel value on the diagonal, `(eta / pi)^d`.
    pub fn diagonal(&self) -> T {
        (self.eta / T::PI()).powi(self.dim as i32)
    }

    fn check_point(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim {
            return input_err(format!("point has dimension {}, kernel expects {}", x.len(), self.dim));
        }
        Ok(())
    }
}

/// Observed inputs with optional outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet<T> {
    pub inputs: Vec<Vec<T>>,
    pub outputs: Option<Vec<T>>,
}

impl<T: Real> SampleSet<T> {
    pub fn new(inputs: Vec<Vec<T>>, outputs: Option<Vec<T>>) -> Result<Self> {
        if let Some(y) = &outputs {
            if y.len() != inputs.len() {
                return input_err(format!("{} inputs but {} outputs", inputs.len(), y.len()));
            }
        }
        Ok(Self { inputs, outputs })
    }

    /// One-dimensional convenience constructor.
    pub fn from_scalars(xs: &[T], ys: Option<&[T]>) -> Result<Self> {
        Self::new(xs.iter().map(|&x| vec![x]).collect(), ys.map(|y| y.to_vec()))
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn outputs(&self) -> Result<&[T]> {
        self.outputs
            .as_deref()
            .ok_or_else(|| Error::Input("sample set has no outputs".into()))
    }

    /// Sub-sample at the given indices (order preserved).
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            inputs: indices.iter().map(|&i| self.inputs[i].clone()).collect(),
            outputs: self.outputs.as_ref().map(|y| indices.iter().map(|&i| y[i]).collect()),
        }
    }
}

#[inline]
fn kernel_unchecked<T: Real>(u: &[T], v: &[T], cfg: &KernelConfig<T>) -> T {
    let mut prod = T::one();
    for (&a, &b) in u.iter().zip(v) {
        let diff = a - b;
        let factor = if diff == T::zero() {
            cfg.eta
        } else {
            (cfg.eta * diff).sin() / diff
        };
        prod *= factor;
    }
    prod / T::PI().powi(cfg.dim as i32)
}

/// Paley-Wiener kernel `k(u, v)`.
pub fn kernel_eval<T: Real>(u: &[T], v: &[T], cfg: &KernelConfig<T>) -> Result<T> {
    cfg.check_point(u)?;
    cfg.check_point(v)?;
    Ok(kernel_unchecked(u, v, cfg))
}

/// Vector of kernel values `k(x, node_i)`.
pub fn kernel_column<T: Real>(x: &[T], nodes: &[Vec<T>], cfg: &KernelConfig<T>) -> Result<DVector<T>> {
    cfg.check_point(x)?;
    Ok(DVector::from_iterator(
        nodes.len(),
        nodes.iter().map(|n| kernel_unchecked(x, n, cfg)),
    ))
}

fn max_norm_distance<T: Real>(u: &[T], v: &[T]) -> T {
    u.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
}

/// Fails when two inputs lie within [`DUPLICATE_TOL`] of each other.
pub fn check_distinct<T: Real>(inputs: &[Vec<T>]) -> Result<()> {
    let tol = T::lit(DUPLICATE_TOL);
    for i in 0..inputs.len() {
        for j in 0..i {
            if max_norm_distance(&inputs[i], &inputs[j]) < tol {
                return input_err(format!("inputs {j} and {i} are (near-)duplicates"));
            }
        }
    }
    Ok(())
}

/// Gram matrix `K_ij = k(x_i, x_j)` over pairwise-distinct inputs.
pub fn gram<T: Real>(inputs: &[Vec<T>], cfg: &KernelConfig<T>) -> Result<DMatrix<T>> {
    for x in inputs {
        cfg.check_point(x)?;
    }
    check_distinct(inputs)?;
    Ok(gram_unchecked(inputs, cfg))
}

pub(crate) fn gram_unchecked<T: Real>(inputs: &[Vec<T>], cfg: &KernelConfig<T>) -> DMatrix<T> {
    let n = inputs.len();
    let diag = cfg.diagonal();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = diag;
        for j in 0..i {
            let v = kernel_unchecked(&inputs[i], &inputs[j], cfg);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Condition number `lambda_max / lambda_min` of a symmetric matrix
/// (infinite when the smallest eigenvalue is not positive).
pub fn condition_number<T: Real>(k: &DMatrix<T>) -> f64 {
    if k.nrows() == 0 {
        return 1.0;
    }
    let eig = SymmetricEigen::new(k.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= T::zero() {
        f64::INFINITY
    } else {
        (max / min).as_f64()
    }
}

/// Inverse of a symmetric PSD matrix, inflated by a diagonal jitter when
/// needed so that the condition number stays below `cap`.
///
/// Returns `(M, jitter)` with `M = (K + jitter I)^-1`. Since
/// `K + jitter I >= K` in the Loewner order, `M <= K^-1` and every sublevel set
/// `{v : v' M v <= tau}` contains the exact one.
pub fn conservative_inverse<T: Real>(k: &DMatrix<T>, cap: f64) -> (DMatrix<T>, T) {
    let n = k.nrows();
    if n == 0 {
        return (DMatrix::zeros(0, 0), T::zero());
    }
    let eig = SymmetricEigen::new(k.clone());
    let max = eig.eigenvalues.max().max(T::zero());
    let min = eig.eigenvalues.min();
    let floor = max / T::lit(cap);
    let jitter = if min >= floor && min > T::zero() {
        T::zero()
    } else {
        floor - min
    };
    let inv_diag = eig.eigenvalues.map(|l| T::one() / (l + jitter));
    let q = &eig.eigenvectors;
    let mut m = q * DMatrix::from_diagonal(&inv_diag) * q.transpose();
    symmetrize(&mut m);
    (m, jitter)
}

pub(crate) fn symmetrize<T: Real>(m: &mut DMatrix<T>) {
    let n = m.nrows();
    let half = T::lit(0.5);
    for i in 0..n {
        for j in 0..i {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Minimum-norm kernel interpolant `f(x) = sum_k coeffs_k k(x, node_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolant<T: Real> {
    nodes: Vec<Vec<T>>,
    coeffs: DVector<T>,
    config: KernelConfig<T>,
    gram: DMatrix<T>,
}

impl<T: Real> Interpolant<T> {
    /// Builds a kernel expansion with explicit coefficients (no fitting).
    pub fn from_coefficients(nodes: Vec<Vec<T>>, coeffs: DVector<T>, config: KernelConfig<T>) -> Result<Self> {
        if nodes.len() != coeffs.len() {
            return input_err(format!("{} nodes but {} coefficients", nodes.len(), coeffs.len()));
        }
        let gram = gram(&nodes, &config)?;
        Ok(Self {
            nodes,
            coeffs,
            config,
            gram,
        })
    }

    pub fn nodes(&self) -> &[Vec<T>] {
        &self.nodes
    }

    pub fn coeffs(&self) -> &DVector<T> {
        &self.coeffs
    }

    pub fn config(&self) -> &KernelConfig<T> {
        &self.config
    }

    pub fn gram(&self) -> &DMatrix<T> {
        &self.gram
    }

    /// Multiplies all coefficients by `factor`.
    pub fn scaled(mut self, factor: T) -> Self {
        self.coeffs *= factor;
        self
    }
}

/// Solves `K alpha = z` for the minimum-norm interpolant of `(inputs, values)`.
///
/// Refuses (rather than regularizes) Gram matrices whose condition number
/// exceeds [`CONDITION_CAP`], since regularization would no longer interpolate.
pub fn min_norm_interpolant<T: Real>(inputs: &[Vec<T>], values: &[T], cfg: &KernelConfig<T>) -> Result<Interpolant<T>> {
    if inputs.len() != values.len() {
        return input_err(format!("{} inputs but {} values", inputs.len(), values.len()));
    }
    let k = gram(inputs, cfg)?;
    let condition = condition_number(&k);
    if !(condition <= CONDITION_CAP) {
        return Err(Error::Conditioning {
            condition,
            cap: CONDITION_CAP,
        });
    }
    let z = DVector::from_column_slice(values);
    let chol = k.clone().cholesky().ok_or(Error::Conditioning {
        condition,
        cap: CONDITION_CAP,
    })?;
    let coeffs = chol.solve(&z);
    Ok(Interpolant {
        nodes: inputs.to_vec(),
        coeffs,
        config: *cfg,
        gram: k,
    })
}

/// Evaluates `sum_k coeffs_k k(x, node_k)`.
pub fn evaluate<T: Real>(f: &Interpolant<T>, x: &[T]) -> Result<T> {
    f.config.check_point(x)?;
    Ok(f.nodes.iter().zip(f.coeffs.iter()).fold(T::zero(), |acc, (node, &c)| {
        acc + c * kernel_unchecked(x, node, &f.config)
    }))
}

/// Squared RKHS norm `alpha' K alpha`.
pub fn rkhs_norm_sq<T: Real>(f: &Interpolant<T>) -> T {
    let ka = &f.gram * &f.coeffs;
    f.coeffs.dot(&ka).max(T::zero())
}
