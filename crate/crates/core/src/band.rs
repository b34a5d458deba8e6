//! Confidence intervals for `f(x0)` and simultaneous bands over a grid.
//!
//! Every function with `||f||^2 <= tau` whose values at the subsample inputs
//! lie in the ellipsoid `Z` is a candidate; the interval at `x0` collects the
//! values such candidates can take there. By the minimum-norm property the
//! smallest norm of an RKHS function through `(x_k, z_k)` and `(x0, z0)` is
//! `[z; z0]' K_aug^-1 [z; z0]`, so the interval is the `z0`-range of
//! `{[z; z0] : z in Z, [z; z0]' K_aug^-1 [z; z0] <= tau}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ellipsoid::Ellipsoid;
use crate::error::{input_err, Result};
use crate::normbound::{BoundMethod, NormBound};
use crate::paley_wiener::{
    conservative_inverse, gram, kernel_column, KernelConfig, SampleSet, CONDITION_CAP, DUPLICATE_TOL,
};
use crate::quadopt::{min_quadratic_over_ellipsoid, EndpointProblem, QuadraticObjective, ENDPOINT_TOL, MAX_ITER};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandConfig<T> {
    pub alpha: T,
    pub beta: T,
    pub n0: usize,
    pub kernel: KernelConfig<T>,
    pub bound_method: BoundMethod,
}

impl<T: Real> BandConfig<T> {
    pub fn new(alpha: T, beta: T, n0: usize, kernel: KernelConfig<T>, bound_method: BoundMethod) -> Result<Self> {
        if !(alpha > T::zero() && beta >= T::zero() && alpha + beta < T::one()) {
            return input_err(format!(
                "need alpha > 0, beta >= 0, alpha + beta < 1; got {alpha:?}, {beta:?}"
            ));
        }
        if n0 == 0 {
            return input_err("subsample size must be positive");
        }
        Ok(Self {
            alpha,
            beta,
            n0,
            kernel,
            bound_method,
        })
    }
}

/// Interval `[lo, hi]` at a query point, or `None` when no candidate exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate<T> {
    pub query: Vec<T>,
    pub bounds: Option<(T, T)>,
}

impl<T: Real> IntervalEstimate<T> {
    pub fn empty(query: Vec<T>) -> Self {
        Self { query, bounds: None }
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_none()
    }

    pub fn lo(&self) -> Option<T> {
        self.bounds.map(|b| b.0)
    }

    pub fn hi(&self) -> Option<T> {
        self.bounds.map(|b| b.1)
    }

    /// Length, zero when empty.
    pub fn width(&self) -> T {
        self.bounds.map_or(T::zero(), |(lo, hi)| hi - lo)
    }

    pub fn contains(&self, v: T) -> bool {
        self.bounds.is_some_and(|(lo, hi)| lo <= v && v <= hi)
    }
}

/// Everything about a subsample that does not depend on the query.
struct Prepared<T: Real> {
    nodes: Vec<Vec<T>>,
    gram: DMatrix<T>,
}

fn prepare<T: Real>(subsample: &SampleSet<T>, e: &Ellipsoid<T>, cfg: &BandConfig<T>) -> Result<Prepared<T>> {
    if subsample.len() != e.dim() {
        return input_err(format!(
            "ellipsoid dimension {} differs from subsample size {}",
            e.dim(),
            subsample.len()
        ));
    }
    Ok(Prepared {
        gram: gram(&subsample.inputs, &cfg.kernel)?,
        nodes: subsample.inputs.clone(),
    })
}

fn check_tau<T: Real>(bound: &NormBound<T>) -> Result<()> {
    if !(bound.tau > T::zero()) || !bound.tau.is_finite() {
        return input_err(format!("norm bound must be positive and finite, got {:?}", bound.tau));
    }
    Ok(())
}

/// Confidence interval for `f(x0)`.
pub fn interval_at<T: Real>(
    x0: &[T],
    subsample: &SampleSet<T>,
    e: &Ellipsoid<T>,
    bound: &NormBound<T>,
    cfg: &BandConfig<T>,
) -> Result<IntervalEstimate<T>> {
    check_tau(bound)?;
    let prep = prepare(subsample, e, cfg)?;
    interval_prepared(x0, &prep, e, bound.tau, &cfg.kernel)
}

fn interval_prepared<T: Real>(
    x0: &[T],
    prep: &Prepared<T>,
    e: &Ellipsoid<T>,
    tau: T,
    kernel: &KernelConfig<T>,
) -> Result<IntervalEstimate<T>> {
    let col = kernel_column(x0, &prep.nodes, kernel)?;
    let k00 = kernel.diagonal();
    let envelope = (tau * k00).sqrt();
    let query = x0.to_vec();

    let tol = T::lit(DUPLICATE_TOL);
    let coincident = prep
        .nodes
        .iter()
        .position(|node| node.iter().zip(x0).all(|(&a, &b)| (a - b).abs() < tol));

    let raw = match coincident {
        Some(j) => {
            let (m, _) = conservative_inverse(&prep.gram, CONDITION_CAP);
            pinned_interval(j, &m, e, tau)?
        }
        None => {
            let n0 = prep.nodes.len();
            let mut aug = DMatrix::zeros(n0 + 1, n0 + 1);
            aug.view_mut((0, 0), (n0, n0)).copy_from(&prep.gram);
            for i in 0..n0 {
                aug[(i, n0)] = col[i];
                aug[(n0, i)] = col[i];
            }
            aug[(n0, n0)] = k00;
            let (m, _) = conservative_inverse(&aug, CONDITION_CAP);
            EndpointProblem::new(&m, e, tau)?.interval()?
        }
    };

    // any feasible value obeys |f(x0)| <= ||f|| sqrt(k(x0, x0))
    let bounds = raw.and_then(|(lo, hi)| {
        let lo = lo.max(-envelope);
        let hi = hi.min(envelope);
        (lo <= hi).then_some((lo, hi))
    });
    Ok(IntervalEstimate { query, bounds })
}

/// Interval at an observed input `x_j`: the range of `z_j` over
/// `{z in Z : z' M z <= tau}` with `M` the (conservative) inverse Gram.
fn pinned_interval<T: Real>(j: usize, m: &DMatrix<T>, e: &Ellipsoid<T>, tau: T) -> Result<Option<(T, T)>> {
    let n0 = e.dim();
    let c = e.center();
    if e.is_degenerate() {
        let feasible = c.dot(&(m * c)) <= tau;
        return Ok(feasible.then_some((c[j], c[j])));
    }
    let hw = e.axis_halfwidth(j)?;
    if n0 == 1 {
        let r = (tau / m[(0, 0)]).sqrt();
        let lo = (c[0] - hw).max(-r);
        let hi = (c[0] + hw).min(r);
        return Ok((lo <= hi).then_some((lo, hi)));
    }

    let joint = min_quadratic_over_ellipsoid(&QuadraticObjective::form(m.clone())?, e)?;
    if joint.value > tau {
        return Ok(None);
    }
    let slice = Slice::new(j, m, e)?;
    let feasible = |t: T| slice.min_norm_at(t).map(|v| v.is_some_and(|v| v <= tau));
    let seed = joint.argument[j];
    if !feasible(seed)? {
        // the joint minimizer sits on the rounding edge; report the point
        return Ok(Some((seed, seed)));
    }
    let lo = bisect_edge(seed, c[j] - hw, &feasible)?;
    let hi = bisect_edge(seed, c[j] + hw, &feasible)?;
    Ok(Some((lo, hi)))
}

/// Last feasible point between a feasible `inside` and the edge of the search range.
fn bisect_edge<T: Real>(mut inside: T, edge: T, feasible: &dyn Fn(T) -> Result<bool>) -> Result<T> {
    if feasible(edge)? {
        return Ok(edge);
    }
    let mut outside = edge;
    let tol = T::lit(ENDPOINT_TOL);
    for _ in 0..MAX_ITER {
        if (outside - inside).abs() <= tol {
            break;
        }
        let mid = (inside + outside) / T::lit(2.0);
        if feasible(mid)? {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(inside)
}

/// The section `{z in Z : z_j = t}` as an ellipsoid in the other coordinates.
struct Slice<T: Real> {
    j: usize,
    rest: Vec<usize>,
    c: DVector<T>,
    p_rr: DMatrix<T>,
    /// `P_rr^-1 P_rj`
    shift: DVector<T>,
    hw_sq: T,
    m_rr: DMatrix<T>,
    m_rj: DVector<T>,
    m_jj: T,
}

impl<T: Real> Slice<T> {
    fn new(j: usize, m: &DMatrix<T>, e: &Ellipsoid<T>) -> Result<Self> {
        let n = e.dim();
        let rest: Vec<usize> = (0..n).filter(|&i| i != j).collect();
        let p = e.shape();
        let p_rr = p.select_rows(&rest).select_columns(&rest);
        let p_rj = DVector::from_iterator(rest.len(), rest.iter().map(|&i| p[(i, j)]));
        let shift = p_rr
            .clone()
            .cholesky()
            .ok_or_else(|| crate::error::Error::Numeric("ellipsoid slice is not positive definite".into()))?
            .solve(&p_rj);
        let hw = e.axis_halfwidth(j)?;
        Ok(Self {
            j,
            c: e.center().clone(),
            shift,
            hw_sq: hw * hw,
            m_rr: m.select_rows(&rest).select_columns(&rest),
            m_rj: DVector::from_iterator(rest.len(), rest.iter().map(|&i| m[(i, j)])),
            m_jj: m[(j, j)],
            p_rr,
            rest,
        })
    }

    /// `min` of `z' M z` over the section, `None` when the section is empty.
    fn min_norm_at(&self, t: T) -> Result<Option<T>> {
        let d = t - self.c[self.j];
        let s = d * d / self.hw_sq;
        if s > T::one() {
            return Ok(None);
        }
        let center = DVector::from_iterator(self.rest.len(), self.rest.iter().map(|&i| self.c[i])) - &self.shift * d;
        let section = if s >= T::one() {
            Ellipsoid::point(center)
        } else {
            Ellipsoid::new(center, &self.p_rr / (T::one() - s))?
        };
        let obj = QuadraticObjective::new(self.m_rr.clone(), &self.m_rj * (T::lit(2.0) * t), self.m_jj * t * t)?;
        Ok(Some(min_quadratic_over_ellipsoid(&obj, &section)?.value))
    }
}

/// Intervals at each grid point. Failures at single points are reported in
/// place and do not abort the rest of the grid.
pub fn band_over_grid<T: Real>(
    grid: &[Vec<T>],
    subsample: &SampleSet<T>,
    e: &Ellipsoid<T>,
    bound: &NormBound<T>,
    cfg: &BandConfig<T>,
) -> Result<Vec<Result<IntervalEstimate<T>>>> {
    check_tau(bound)?;
    let prep = prepare(subsample, e, cfg)?;
    Ok(grid
        .iter()
        .map(|x| interval_prepared(x, &prep, e, bound.tau, &cfg.kernel))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paley_wiener::{evaluate, min_norm_interpolant, rkhs_norm_sq};
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn cfg(eta: f64) -> BandConfig<f64> {
        BandConfig::new(0.1, 0.0, 1, KernelConfig::new(eta, 1).unwrap(), BoundMethod::Hoeffding).unwrap()
    }

    fn tau(t: f64) -> NormBound<f64> {
        NormBound::fixed(t, BoundMethod::Hoeffding)
    }

    #[test]
    fn no_constraints_gives_envelope() {
        let c = cfg(2.0);
        let s = SampleSet::<f64>::new(vec![], Some(vec![])).unwrap();
        let e = Ellipsoid::point(DVector::zeros(0));
        let iv = interval_at(&[0.3], &s, &e, &tau(1.5), &c).unwrap();
        let r = (1.5 * 2.0 / std::f64::consts::PI).sqrt();
        let (lo, hi) = iv.bounds.unwrap();
        assert_relative_eq!(lo, -r, epsilon = 1e-12);
        assert_relative_eq!(hi, r, epsilon = 1e-12);
    }

    #[test]
    fn truth_is_covered_with_exact_norm() {
        let c = cfg(3.0);
        let xs = [-0.9, -0.2, 0.4, 1.1];
        let truth = min_norm_interpolant(&[vec![-0.5], vec![0.0], vec![0.8]], &[0.6, -0.3, 0.2], &c.kernel).unwrap();
        let ys: Vec<f64> = xs.iter().map(|&x| evaluate(&truth, &[x]).unwrap()).collect();
        let s = SampleSet::from_scalars(&xs, Some(&ys)).unwrap();
        let e = Ellipsoid::point(DVector::from_vec(ys.clone()));
        let b = tau(rkhs_norm_sq(&truth) * (1.0 + 1e-9));
        for q in [-1.3, -0.5, 0.0, 0.25, 0.8, 1.6] {
            let iv = interval_at(&[q], &s, &e, &b, &c).unwrap();
            let f = evaluate(&truth, &[q]).unwrap();
            assert!(
                iv.lo().unwrap() - 1e-6 <= f && f <= iv.hi().unwrap() + 1e-6,
                "{q}: {iv:?} vs {f}"
            );
        }
    }

    #[test]
    fn coincident_query_uses_section() {
        let c = cfg(2.0);
        let s = SampleSet::from_scalars(&[0.0, 1.5], Some(&[0.2, -0.1])).unwrap();
        let e = Ellipsoid::ball(dvector![0.2, -0.1], 0.3).unwrap();
        let iv = interval_at(&[0.0], &s, &e, &tau(10.0), &c).unwrap();
        let (lo, hi) = iv.bounds.unwrap();
        // norm constraint is slack, so the range is that of the ball
        assert_relative_eq!(lo, -0.1, epsilon = 1e-6);
        assert_relative_eq!(hi, 0.5, epsilon = 1e-6);
        // tight norm cuts it down, and it stays close to nearby queries
        let tight = interval_at(&[0.0], &s, &e, &tau(0.08), &c).unwrap();
        let near = interval_at(&[1e-4], &s, &e, &tau(0.08), &c).unwrap();
        assert!(tight.width() < 0.6);
        assert!((tight.hi().unwrap() - near.hi().unwrap()).abs() < 1e-2);
        assert!((tight.lo().unwrap() - near.lo().unwrap()).abs() < 1e-2);
    }

    #[test]
    fn coincident_single_node() {
        let c = cfg(2.0);
        let s = SampleSet::from_scalars(&[0.0], Some(&[0.2])).unwrap();
        let e = Ellipsoid::ball(dvector![0.2], 0.3).unwrap();
        let iv = interval_at(&[0.0], &s, &e, &tau(0.1), &c).unwrap();
        let r = (0.1 * 2.0 / std::f64::consts::PI).sqrt();
        let (lo, hi) = iv.bounds.unwrap();
        assert_relative_eq!(lo, -0.1, epsilon = 1e-12);
        assert_relative_eq!(hi, r, epsilon = 1e-12);
    }

    #[test]
    fn empty_when_norm_too_small() {
        let c = cfg(2.0);
        let s = SampleSet::from_scalars(&[0.0, 1.0], Some(&[3.0, -3.0])).unwrap();
        let e = Ellipsoid::ball(dvector![3.0, -3.0], 0.1).unwrap();
        let grid: Vec<Vec<f64>> = (0..5).map(|i| vec![-1.0 + 0.7 * i as f64]).collect();
        for r in band_over_grid(&grid, &s, &e, &tau(0.01), &c).unwrap() {
            assert!(r.unwrap().is_empty());
        }
    }

    #[test]
    fn nested_in_tau_and_inside_envelope() {
        let c = cfg(2.0);
        let s = SampleSet::from_scalars(&[-1.0, 0.0, 1.2], Some(&[0.3, 0.5, -0.2])).unwrap();
        let e = Ellipsoid::ball(dvector![0.3, 0.5, -0.2], 0.2).unwrap();
        let grid: Vec<Vec<f64>> = (0..21).map(|i| vec![-2.0 + 0.2 * i as f64]).collect();
        let small = band_over_grid(&grid, &s, &e, &tau(1.0), &c).unwrap();
        let large = band_over_grid(&grid, &s, &e, &tau(2.0), &c).unwrap();
        let k00 = c.kernel.diagonal();
        for (a, b) in small.into_iter().zip(large) {
            let (a, b) = (a.unwrap(), b.unwrap());
            let (alo, ahi) = a.bounds.unwrap();
            let (blo, bhi) = b.bounds.unwrap();
            assert!(blo <= alo + 1e-6 && ahi <= bhi + 1e-6);
            assert!(bhi <= (2.0 * k00).sqrt() + 1e-12 && blo >= -(2.0 * k00).sqrt() - 1e-12);
        }
    }

    #[test]
    fn widens_away_from_data() {
        let c = cfg(2.0);
        let s = SampleSet::from_scalars(&[-0.5, 0.5], Some(&[0.4, 0.4])).unwrap();
        let e = Ellipsoid::point(dvector![0.4, 0.4]);
        let widths: Vec<f64> = [0.0, 0.5, 1.0, 1.5]
            .iter()
            .map(|&d| interval_at(&[0.5 + d + 0.01], &s, &e, &tau(1.0), &c).unwrap().width())
            .collect();
        assert!(widths.windows(2).all(|w| w[0] < w[1]), "{widths:?}");
    }
}
