//! Global optimization of quadratics over an ellipsoid, and the interval
//! endpoint programs of the band construction.
//!
//! Maximizing `z'Az + b'z + c` over `{(z - c0)' P (z - c0) <= 1}` is nonconvex
//! for indefinite `A`, but it has a single quadratic constraint, so the
//! Lagrangian dual is exact. After whitening `z = c0 + R w` with
//! `P = L L'`, `R = L^-T`, the problem becomes a trust-region subproblem on the
//! unit ball, solved here through an eigendecomposition of the whitened matrix
//! and a safeguarded Newton iteration on the secular equation
//! `||(H + mu I)^-1 beta|| = 1`, including the hard case.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::ellipsoid::Ellipsoid;
use crate::error::{input_err, Error, Result};
use crate::paley_wiener::symmetrize;
use crate::scalar::Real;

/// Bisection tolerance on interval endpoints.
pub const ENDPOINT_TOL: f64 = 1e-7;
/// Iteration cap for bisection and secular-equation solves.
pub const MAX_ITER: usize = 200;

/// `z'Az + b'z + c` with symmetric `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObjective<T: Real> {
    a: DMatrix<T>,
    b: DVector<T>,
    c: T,
}

impl<T: Real> QuadraticObjective<T> {
    pub fn new(a: DMatrix<T>, b: DVector<T>, c: T) -> Result<Self> {
        let n = b.len();
        if a.nrows() != n || a.ncols() != n {
            return input_err(format!(
                "quadratic matrix is {}x{}, linear term has length {n}",
                a.nrows(),
                a.ncols()
            ));
        }
        let scale = a.amax().max(T::one());
        for i in 0..n {
            for j in 0..i {
                if (a[(i, j)] - a[(j, i)]).abs() > T::lit(1e-12) * scale {
                    return input_err("quadratic matrix is not symmetric");
                }
            }
        }
        Ok(Self { a, b, c })
    }

    /// Pure quadratic form `z'Az`.
    pub fn form(a: DMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        Self::new(a, DVector::zeros(n), T::zero())
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn eval(&self, z: &DVector<T>) -> T {
        z.dot(&(&self.a * z)) + self.b.dot(z) + self.c
    }

    pub fn negated(&self) -> Self {
        Self {
            a: -&self.a,
            b: -&self.b,
            c: -self.c,
        }
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            a: &self.a * factor,
            b: &self.b * factor,
            c: self.c * factor,
        }
    }
}

/// Optimal value and an optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Extremum<T: Real> {
    pub value: T,
    pub argument: DVector<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

impl Sense {
    fn sign<T: Real>(self) -> T {
        match self {
            Sense::Min => T::one(),
            Sense::Max => -T::one(),
        }
    }
}

/// Trust-region subproblem `min w'Hw + g'w s.t. ||w|| <= 1` in the eigenbasis of `H`.
#[derive(Debug, Clone)]
struct SpectralTrs<T: Real> {
    eigenvalues: DVector<T>,
    eigenvectors: DMatrix<T>,
}

impl<T: Real> SpectralTrs<T> {
    fn new(mut h: DMatrix<T>) -> Self {
        symmetrize(&mut h);
        let eig = SymmetricEigen::new(h);
        Self {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        }
    }

    fn to_eigen(&self, g: &DVector<T>) -> DVector<T> {
        self.eigenvectors.tr_mul(g)
    }

    fn to_original(&self, omega: &DVector<T>) -> DVector<T> {
        &self.eigenvectors * omega
    }

    /// Minimizes `sign * (w'Hw + g'w)` given `gamma = V'g`. Returns eigen-coordinates
    /// of the optimizer and the value of `w'Hw + g'w` there.
    fn solve(&self, gamma: &DVector<T>, sense: Sense) -> Result<(DVector<T>, T)> {
        let n = gamma.len();
        if n == 0 {
            return Ok((DVector::zeros(0), T::zero()));
        }
        let s: T = sense.sign();
        let lam: Vec<T> = self.eigenvalues.iter().map(|&l| s * l).collect();
        // stationarity: 2 (Lam + mu) omega = -s gamma
        let beta: Vec<T> = gamma.iter().map(|&g| -s * g / T::lit(2.0)).collect();

        let eps = T::machine_eps();
        let lam_scale = lam.iter().fold(T::zero(), |a, &l| a.max(l.abs()));
        let beta_norm = beta.iter().fold(T::zero(), |a, &b| a + b * b).sqrt();
        let lam_min = lam.iter().copied().fold(lam[0], |a, l| a.min(l));
        let lam_tol = T::lit(1e3) * eps * lam_scale.max(eps * eps);
        let beta_tol = T::lit(1e3) * eps * beta_norm;

        let norm_at = |mu: T, skip_edge: bool| -> T {
            let mut acc = T::zero();
            for i in 0..n {
                if skip_edge && lam[i] - lam_min <= lam_tol {
                    continue;
                }
                let d = lam[i] + mu;
                acc += beta[i] * beta[i] / (d * d);
            }
            acc.sqrt()
        };

        let omega_at = |mu: T, skip_edge: bool| -> DVector<T> {
            DVector::from_fn(n, |i, _| {
                if skip_edge && lam[i] - lam_min <= lam_tol {
                    T::zero()
                } else {
                    beta[i] / (lam[i] + mu)
                }
            })
        };

        let value_of = |omega: &DVector<T>| -> T {
            let mut v = T::zero();
            for i in 0..n {
                v += self.eigenvalues[i] * omega[i] * omega[i] + gamma[i] * omega[i];
            }
            v
        };

        // interior solution
        if lam_min > lam_tol {
            let omega = omega_at(T::zero(), false);
            if omega.norm() <= T::one() {
                let v = value_of(&omega);
                return Ok((omega, v));
            }
        }

        let mu_low = (-lam_min).max(T::zero());
        let edge_vanishes = (0..n)
            .filter(|&i| lam[i] - lam_min <= lam_tol)
            .all(|i| beta[i].abs() <= beta_tol);

        if lam_min <= lam_tol && edge_vanishes {
            let rest = norm_at(mu_low, true);
            if rest <= T::one() {
                // hard case: fill the remaining radius along the edge eigenvector
                let mut omega = omega_at(mu_low, true);
                let edge = (0..n)
                    .find(|&i| lam[i] - lam_min <= lam_tol)
                    .expect("edge eigenvalue exists");
                omega[edge] = (T::one() - rest * rest).max(T::zero()).sqrt();
                let v = value_of(&omega);
                return Ok((omega, v));
            }
        }

        // boundary solution: ||omega(mu)|| = 1 for mu in (mu_low, mu_high]
        let skip = edge_vanishes && lam_min <= lam_tol;
        let mut lo = mu_low;
        let mut hi = (beta_norm - lam_min).max(mu_low);
        if norm_at(hi, skip) > T::one() {
            hi += beta_norm.max(T::one());
        }
        let mut mu = hi;
        let mut converged = false;
        for _ in 0..MAX_ITER {
            let nrm = norm_at(mu, skip);
            let phi = T::one() / nrm - T::one();
            if phi.abs() <= T::lit(8.0) * eps {
                converged = true;
                break;
            }
            if phi < T::zero() {
                lo = mu;
            } else {
                hi = mu;
            }
            if hi - lo <= T::lit(4.0) * eps * (T::one() + hi.abs()) {
                mu = hi;
                converged = true;
                break;
            }
            // d(1/||omega||)/dmu = sum beta^2/(lam+mu)^3 / ||omega||^3
            let mut d3 = T::zero();
            for i in 0..n {
                if skip && lam[i] - lam_min <= lam_tol {
                    continue;
                }
                let d = lam[i] + mu;
                d3 += beta[i] * beta[i] / (d * d * d);
            }
            let dphi = d3 / (nrm * nrm * nrm);
            let newton = mu - phi / dphi;
            mu = if dphi > T::zero() && newton > lo && newton < hi {
                newton
            } else {
                (lo + hi) / T::lit(2.0)
            };
        }
        if !converged {
            return Err(Error::Numeric(format!(
                "secular equation did not converge (bracket [{lo:?}, {hi:?}])"
            )));
        }
        let mut omega = omega_at(mu, skip);
        let nrm = omega.norm();
        if nrm > T::one() {
            omega /= nrm;
        }
        let v = value_of(&omega);
        Ok((omega, v))
    }
}

/// A quadratic form `z'Az` restricted to a nondegenerate ellipsoid, whitened
/// and diagonalized once so that many linear terms can be optimized cheaply.
#[derive(Debug, Clone)]
pub struct WhitenedQuadratic<T: Real> {
    center: DVector<T>,
    /// `z = center + r * w`
    r: DMatrix<T>,
    a: DMatrix<T>,
    /// `R' (2 A c0)`
    base_linear: DVector<T>,
    base_constant: T,
    trs: SpectralTrs<T>,
}

impl<T: Real> WhitenedQuadratic<T> {
    pub fn new(a: &DMatrix<T>, e: &Ellipsoid<T>) -> Result<Self> {
        if e.is_degenerate() {
            return input_err("whitening needs a nondegenerate ellipsoid");
        }
        let n = e.dim();
        if a.nrows() != n || a.ncols() != n {
            return input_err("quadratic and ellipsoid dimensions differ");
        }
        let l = e.cholesky()?.l();
        let r = l
            .transpose()
            .solve_upper_triangular(&DMatrix::identity(n, n))
            .ok_or_else(|| Error::Numeric("singular ellipsoid factor".into()))?;
        let h = r.tr_mul(&(a * &r));
        let center = e.center().clone();
        let ac = a * &center;
        let base_linear = r.tr_mul(&(&ac * T::lit(2.0)));
        let base_constant = center.dot(&ac);
        Ok(Self {
            center,
            r,
            a: a.clone(),
            base_linear,
            base_constant,
            trs: SpectralTrs::new(h),
        })
    }

    /// Optimizes `z'Az + b'z + c` over the ellipsoid.
    pub fn optimize(&self, b: &DVector<T>, c: T, sense: Sense) -> Result<Extremum<T>> {
        let g = &self.base_linear + self.r.tr_mul(b);
        let gamma = self.trs.to_eigen(&g);
        let (omega, _) = self.trs.solve(&gamma, sense)?;
        let z = &self.center + &self.r * self.trs.to_original(&omega);
        let value = z.dot(&(&self.a * &z)) + b.dot(&z) + c;
        Ok(Extremum { value, argument: z })
    }

    /// Value only, with the linear term given in eigen-coordinates.
    fn value_eig(&self, gamma: &DVector<T>, constant: T, sense: Sense) -> Result<T> {
        let (_, v) = self.trs.solve(gamma, sense)?;
        Ok(v + constant)
    }
}

fn optimize_over_ellipsoid<T: Real>(
    obj: &QuadraticObjective<T>,
    e: &Ellipsoid<T>,
    sense: Sense,
) -> Result<Extremum<T>> {
    if obj.dim() != e.dim() {
        return input_err(format!(
            "objective dimension {} differs from ellipsoid dimension {}",
            obj.dim(),
            e.dim()
        ));
    }
    if e.is_degenerate() {
        let z = e.center().clone();
        return Ok(Extremum {
            value: obj.eval(&z),
            argument: z,
        });
    }
    WhitenedQuadratic::new(&obj.a, e)?.optimize(&obj.b, obj.c, sense)
}

/// Global maximum of a (possibly indefinite) quadratic over an ellipsoid.
pub fn max_quadratic_over_ellipsoid<T: Real>(obj: &QuadraticObjective<T>, e: &Ellipsoid<T>) -> Result<Extremum<T>> {
    optimize_over_ellipsoid(obj, e, Sense::Max)
}

/// Global minimum of a (possibly indefinite) quadratic over an ellipsoid.
pub fn min_quadratic_over_ellipsoid<T: Real>(obj: &QuadraticObjective<T>, e: &Ellipsoid<T>) -> Result<Extremum<T>> {
    optimize_over_ellipsoid(obj, e, Sense::Min)
}

/// Set of `z0` for which some `z` in the ellipsoid satisfies
/// `[z; z0]' M [z; z0] <= tau`, where `M` is the inverse of an augmented Gram
/// matrix with the query in the last position.
///
/// For fixed `z0` the constraint is convex in `z`, so feasibility is one
/// ellipsoid-constrained minimization; the feasible `z0` form an interval whose
/// ends are located by bisection.
pub struct EndpointProblem<T: Real> {
    tau: T,
    n0: usize,
    m00: T,
    m0: DVector<T>,
    mzz: DMatrix<T>,
    inner: Inner<T>,
    bracket: T,
}

#[allow(clippy::large_enum_variant)]
enum Inner<T: Real> {
    /// No observed coordinates.
    Free,
    Point {
        center: DVector<T>,
    },
    Body {
        quad: WhitenedQuadratic<T>,
        center: DVector<T>,
        /// eigen-coordinates of `R' 2 m0`
        slope_eig: DVector<T>,
        base_eig: DVector<T>,
    },
}

impl<T: Real> EndpointProblem<T> {
    pub fn new(gram_aug_inverse: &DMatrix<T>, e: &Ellipsoid<T>, tau: T) -> Result<Self> {
        if !(tau > T::zero()) {
            return input_err(format!("norm bound must be positive, got {tau:?}"));
        }
        let n0 = e.dim();
        if gram_aug_inverse.nrows() != n0 + 1 || gram_aug_inverse.ncols() != n0 + 1 {
            return input_err(format!(
                "augmented inverse is {}x{}, expected {}",
                gram_aug_inverse.nrows(),
                gram_aug_inverse.ncols(),
                n0 + 1
            ));
        }
        let m00 = gram_aug_inverse[(n0, n0)];
        if !(m00 > T::zero()) {
            return Err(Error::Numeric("augmented inverse has nonpositive query entry".into()));
        }
        let m0 = gram_aug_inverse.view((0, n0), (n0, 1)).column(0).into_owned();
        let mzz = gram_aug_inverse.view((0, 0), (n0, n0)).into_owned();

        // |z0|^2 <= tau * (M^-1)_00 for every feasible point
        let mut e_last = DVector::zeros(n0 + 1);
        e_last[n0] = T::one();
        let bracket = match gram_aug_inverse.clone().cholesky() {
            Some(ch) => (tau * ch.solve(&e_last)[n0]).max(T::zero()).sqrt(),
            None => (tau / m00).sqrt(),
        };

        let inner = if n0 == 0 {
            Inner::Free
        } else if e.is_degenerate() {
            Inner::Point {
                center: e.center().clone(),
            }
        } else {
            let quad = WhitenedQuadratic::new(&mzz, e)?;
            let slope = quad.r.tr_mul(&(&m0 * T::lit(2.0)));
            let slope_eig = quad.trs.to_eigen(&slope);
            let base_eig = quad.trs.to_eigen(&quad.base_linear);
            Inner::Body {
                center: e.center().clone(),
                quad,
                slope_eig,
                base_eig,
            }
        };
        Ok(Self {
            tau,
            n0,
            m00,
            m0,
            mzz,
            inner,
            bracket,
        })
    }

    /// `min_{z in Z} [z; z0]' M [z; z0]`.
    pub fn min_norm_at(&self, z0: T) -> Result<T> {
        match &self.inner {
            Inner::Free => Ok(self.m00 * z0 * z0),
            Inner::Point { center } => Ok(self.point_quadratic(center, z0)),
            Inner::Body {
                quad,
                center,
                slope_eig,
                base_eig,
            } => {
                let gamma = base_eig + slope_eig * z0;
                let constant = quad.base_constant + T::lit(2.0) * z0 * self.m0.dot(center) + self.m00 * z0 * z0;
                quad.value_eig(&gamma, constant, Sense::Min)
            }
        }
    }

    pub fn is_feasible(&self, z0: T) -> Result<bool> {
        Ok(self.min_norm_at(z0)? <= self.tau)
    }

    fn point_quadratic(&self, center: &DVector<T>, z0: T) -> T {
        center.dot(&(&self.mzz * center)) + T::lit(2.0) * z0 * self.m0.dot(center) + self.m00 * z0 * z0
    }

    /// A feasible `z0`, or `None` when the feasible set is empty.
    fn feasible_seed(&self) -> Result<Option<T>> {
        match &self.inner {
            Inner::Free => Ok(Some(T::zero())),
            Inner::Point { center } => {
                let z0 = -self.m0.dot(center) / self.m00;
                Ok((self.point_quadratic(center, z0) <= self.tau).then_some(z0))
            }
            Inner::Body { .. } => {
                // minimizing over z0 first leaves the Schur complement in z
                let mut schur = &self.mzz - (&self.m0 * self.m0.transpose()) / self.m00;
                symmetrize(&mut schur);
                let Inner::Body { quad, .. } = &self.inner else {
                    unreachable!()
                };
                let shifted = WhitenedQuadratic {
                    trs: SpectralTrs::new(quad.r.tr_mul(&(&schur * &quad.r))),
                    base_linear: quad.r.tr_mul(&(&schur * &quad.center * T::lit(2.0))),
                    base_constant: quad.center.dot(&(&schur * &quad.center)),
                    a: schur,
                    center: quad.center.clone(),
                    r: quad.r.clone(),
                };
                let best = shifted.optimize(&DVector::zeros(self.n0), T::zero(), Sense::Min)?;
                let z0 = -self.m0.dot(&best.argument) / self.m00;
                if self.is_feasible(z0)? {
                    return Ok(Some(z0));
                }
                if best.value > self.tau {
                    return Ok(None);
                }
                // rounding put the seed just outside; scan a little around it
                let step = T::lit(ENDPOINT_TOL).max(self.bracket * T::lit(1e-9));
                for k in 1..=8 {
                    let d = step * T::from_count(1 << k);
                    for cand in [z0 + d, z0 - d] {
                        if self.is_feasible(cand)? {
                            return Ok(Some(cand));
                        }
                    }
                }
                Ok(None)
            }
        }
    }

    /// Extreme feasible `z0` in the given direction, or `None` when infeasible.
    pub fn solve(&self, sense: Sense) -> Result<Option<T>> {
        let Some(seed) = self.feasible_seed()? else {
            return Ok(None);
        };
        self.solve_from(seed, sense).map(Some)
    }

    /// Both endpoints, sharing the feasibility seed.
    pub fn interval(&self) -> Result<Option<(T, T)>> {
        let Some(seed) = self.feasible_seed()? else {
            return Ok(None);
        };
        let lo = self.solve_from(seed, Sense::Min)?;
        let hi = self.solve_from(seed, Sense::Max)?;
        Ok(Some((lo, hi)))
    }

    fn solve_from(&self, seed: T, sense: Sense) -> Result<T> {
        if let Inner::Point { center } = &self.inner {
            return Ok(self.point_root(center, sense).unwrap_or(seed));
        }
        if let Inner::Free = &self.inner {
            let r = (self.tau / self.m00).sqrt();
            return Ok(match sense {
                Sense::Min => -r,
                Sense::Max => r,
            });
        }
        let dir = match sense {
            Sense::Min => -T::one(),
            Sense::Max => T::one(),
        };
        let mut inside = seed;
        let mut reach = (self.bracket - dir * seed).max(T::lit(ENDPOINT_TOL));
        let mut outside = seed + dir * reach * (T::one() + T::lit(1e-9));
        let mut grown = 0;
        while self.is_feasible(outside)? {
            inside = outside;
            reach *= T::lit(2.0);
            outside = seed + dir * reach;
            grown += 1;
            if grown > 60 {
                return Err(Error::Numeric("endpoint bracket could not be established".into()));
            }
        }
        let tol = T::lit(ENDPOINT_TOL);
        for _ in 0..MAX_ITER {
            if (outside - inside).abs() <= tol {
                break;
            }
            let mid = (inside + outside) / T::lit(2.0);
            if self.is_feasible(mid)? {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(inside)
    }

    fn point_root(&self, center: &DVector<T>, sense: Sense) -> Option<T> {
        // m00 z0^2 + 2 p z0 + (s - tau) <= 0
        let p = self.m0.dot(center);
        let s = center.dot(&(&self.mzz * center));
        let disc = p * p - self.m00 * (s - self.tau);
        if disc < T::zero() {
            return None;
        }
        let root = disc.sqrt();
        Some(match sense {
            Sense::Min => (-p - root) / self.m00,
            Sense::Max => (-p + root) / self.m00,
        })
    }
}

/// Extreme `z0` such that some `z` in `e` has `[z; z0]' M [z; z0] <= tau`.
/// `None` means the feasible set is empty.
pub fn endpoint_program<T: Real>(
    gram_aug_inverse: &DMatrix<T>,
    e: &Ellipsoid<T>,
    tau: T,
    sense: Sense,
) -> Result<Option<T>> {
    EndpointProblem::new(gram_aug_inverse, e, tau)?.solve(sense)
}
