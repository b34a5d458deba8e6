//! Aggregating `K` confidence intervals for the same query by voting.
//!
//! The vote set for weights `w` and threshold `t` is
//! `{y : sum_k w_k 1[y in C_k] > t}`. With `K` independent sets each valid at
//! level `1 - gamma`, the majority set (`t = 1/2`, equal weights) is valid at
//! `1 - 2 gamma`; the randomized variants keep that guarantee while being
//! smaller.

use serde::{Deserialize, Serialize};

use crate::band::IntervalEstimate;
use crate::error::{input_err, Result};
use crate::scalar::Real;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector<T> {
    w: Vec<T>,
}

impl<T: Real> WeightVector<T> {
    pub fn new(w: Vec<T>) -> Result<Self> {
        if w.is_empty() {
            return input_err("weight vector is empty");
        }
        if w.iter().any(|&x| !(x >= T::zero()) || !x.is_finite()) {
            return input_err("weights must be finite and nonnegative");
        }
        let total = w.iter().fold(T::zero(), |a, &x| a + x);
        if (total - T::one()).abs() > T::lit(WEIGHT_SUM_TOL) {
            return input_err(format!("weights sum to {total:?}, not 1"));
        }
        Ok(Self { w })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return input_err("weight vector is empty");
        }
        Ok(Self {
            w: vec![T::one() / T::from_count(k); k],
        })
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.w
    }
}

/// `K` closed intervals for one query; `None` marks an empty member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCollection<T> {
    intervals: Vec<Option<(T, T)>>,
}

impl<T: Real> IntervalCollection<T> {
    pub fn new(intervals: Vec<Option<(T, T)>>) -> Result<Self> {
        for (k, iv) in intervals.iter().enumerate() {
            if let Some((lo, hi)) = iv {
                if !(lo <= hi) {
                    return input_err(format!("interval {k} has lo > hi ({lo:?}, {hi:?})"));
                }
            }
        }
        Ok(Self { intervals })
    }

    pub fn from_estimates(estimates: &[IntervalEstimate<T>]) -> Result<Self> {
        Self::new(estimates.iter().map(|e| e.bounds).collect())
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn intervals(&self) -> &[Option<(T, T)>] {
        &self.intervals
    }

    fn subset(&self, indices: &[usize]) -> Self {
        Self {
            intervals: indices.iter().map(|&i| self.intervals[i]).collect(),
        }
    }

    fn require_pair(&self) -> Result<()> {
        if self.intervals.len() < 2 {
            return input_err("voting needs at least two intervals");
        }
        Ok(())
    }
}

/// Sorted, pairwise disjoint closed intervals (possibly single points).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionOfIntervals<T> {
    segments: Vec<(T, T)>,
}

impl<T: Real> UnionOfIntervals<T> {
    pub fn empty() -> Self {
        Self { segments: Vec::new() }
    }

    /// Normalizes arbitrary closed intervals into a sorted disjoint union.
    pub fn from_segments(mut segs: Vec<(T, T)>) -> Result<Self> {
        if segs.iter().any(|&(lo, hi)| !(lo <= hi)) {
            return input_err("segment with lo > hi");
        }
        segs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite endpoints"));
        let mut out: Vec<(T, T)> = Vec::with_capacity(segs.len());
        for (lo, hi) in segs {
            match out.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => out.push((lo, hi)),
            }
        }
        Ok(Self { segments: out })
    }

    pub fn segments(&self) -> &[(T, T)] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn contains(&self, y: T) -> bool {
        self.segments.iter().any(|&(lo, hi)| lo <= y && y <= hi)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let (a, b) = (&self.segments, &other.segments);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if lo <= hi {
                out.push((lo, hi));
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { segments: out }
    }

    /// Smallest closed interval containing the union.
    pub fn hull(&self) -> Option<(T, T)> {
        Some((self.segments.first()?.0, self.segments.last()?.1))
    }
}

/// Lebesgue measure of the union.
pub fn total_length<T: Real>(s: &UnionOfIntervals<T>) -> T {
    s.segments.iter().fold(T::zero(), |a, &(lo, hi)| a + (hi - lo))
}

/// Vote tally: either integer counts against `t K`, or weight sums against `t`.
enum Tally<'a, T> {
    Equal { k: usize },
    Weighted(&'a [T]),
}

fn sweep<T: Real>(c: &IntervalCollection<T>, tally: Tally<'_, T>, t: T) -> Result<UnionOfIntervals<T>> {
    if !(t >= T::zero() && t <= T::one()) {
        return input_err(format!("threshold must lie in [0, 1], got {t:?}"));
    }
    let k = c.len();
    // t = 1 is read as the unanimity limit of thresholds just below one
    let wins = |count: usize, weight: T, active: &[bool]| -> bool {
        match &tally {
            Tally::Equal { k } => {
                if t >= T::one() {
                    count == *k
                } else {
                    T::from_count(count) > t * T::from_count(*k)
                }
            }
            Tally::Weighted(w) => {
                let near_tie = (weight - t).abs() <= T::lit(1e-9);
                let s = if near_tie {
                    active
                        .iter()
                        .zip(w.iter())
                        .filter(|(a, _)| **a)
                        .fold(T::zero(), |acc, (_, &wk)| acc + wk)
                } else {
                    weight
                };
                if t >= T::one() {
                    active.iter().zip(w.iter()).all(|(&a, &wk)| a || wk == T::zero()) && count > 0
                } else {
                    s > t
                }
            }
        }
    };
    let weight_of = |i: usize| match &tally {
        Tally::Equal { .. } => T::one() / T::from_count(k),
        Tally::Weighted(w) => w[i],
    };

    // events: (coordinate, kind, index), kind 0 = open, 1 = close
    let mut events: Vec<(T, u8, usize)> = Vec::with_capacity(2 * k);
    for (i, iv) in c.intervals.iter().enumerate() {
        if let Some((lo, hi)) = *iv {
            events.push((lo, 0, i));
            events.push((hi, 1, i));
        }
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite endpoints").then(a.1.cmp(&b.1)));

    let mut active = vec![false; k];
    let mut count = 0usize;
    let mut weight = T::zero();
    let mut out: Vec<(T, T)> = Vec::new();
    let mut open_from: Option<T> = None;
    let mut e = 0;
    while e < events.len() {
        let v = events[e].0;
        // opens at v: the point v itself is covered by them
        while e < events.len() && events[e].0 == v && events[e].1 == 0 {
            let i = events[e].2;
            active[i] = true;
            count += 1;
            weight += weight_of(i);
            e += 1;
        }
        let at_point = wins(count, weight, &active);
        while e < events.len() && events[e].0 == v && events[e].1 == 1 {
            let i = events[e].2;
            active[i] = false;
            count -= 1;
            weight -= weight_of(i);
            e += 1;
        }
        let after = count > 0 && wins(count, weight, &active);
        match (open_from, at_point, after) {
            (None, true, true) => open_from = Some(v),
            (None, true, false) => out.push((v, v)),
            (Some(start), _, false) => {
                out.push((start, v));
                open_from = None;
            }
            _ => {}
        }
    }
    UnionOfIntervals::from_segments(out)
}

/// `{y : sum_k w_k 1[y in C_k] > t}`.
pub fn vote_set<T: Real>(c: &IntervalCollection<T>, w: &WeightVector<T>, t: T) -> Result<UnionOfIntervals<T>> {
    if w.len() != c.len() {
        return input_err(format!("{} weights for {} intervals", w.len(), c.len()));
    }
    sweep(c, Tally::Weighted(w.as_slice()), t)
}

/// Equal-weight vote with exact integer counting.
pub fn vote_set_equal<T: Real>(c: &IntervalCollection<T>, t: T) -> Result<UnionOfIntervals<T>> {
    if c.is_empty() {
        return Ok(UnionOfIntervals::empty());
    }
    sweep(c, Tally::Equal { k: c.len() }, t)
}

/// Points covered by more than half of the intervals.
pub fn majority<T: Real>(c: &IntervalCollection<T>) -> Result<UnionOfIntervals<T>> {
    c.require_pair()?;
    vote_set_equal(c, T::lit(0.5))
}

/// Intersection of the majority sets of all prefixes of the ordering `perm`.
pub fn random_ordering<T: Real>(c: &IntervalCollection<T>, perm: &[usize]) -> Result<UnionOfIntervals<T>> {
    c.require_pair()?;
    let k = c.len();
    let mut seen = vec![false; k];
    if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
        return input_err(format!("not a permutation of 0..{k}"));
    }
    let mut acc: Option<UnionOfIntervals<T>> = None;
    for m in 1..=k {
        let prefix = vote_set_equal(&c.subset(&perm[..m]), T::lit(0.5))?;
        let next = match acc {
            None => prefix,
            Some(a) => a.intersect(&prefix),
        };
        if next.is_empty() {
            return Ok(next);
        }
        acc = Some(next);
    }
    Ok(acc.unwrap_or_else(UnionOfIntervals::empty))
}

fn check_unit<T: Real>(u: T, allow_one: bool) -> Result<()> {
    let upper_ok = if allow_one { u <= T::one() } else { u < T::one() };
    if !(u >= T::zero() && upper_ok) {
        return input_err(format!("uniform draw out of range: {u:?}"));
    }
    Ok(())
}

/// Equal-weight vote at the random threshold `(1 + u) / 2`.
pub fn randomized_threshold_half<T: Real>(c: &IntervalCollection<T>, u: T) -> Result<UnionOfIntervals<T>> {
    c.require_pair()?;
    check_unit(u, true)?;
    vote_set_equal(c, (T::one() + u) / T::lit(2.0))
}

/// Equal-weight vote at the random threshold `u`.
pub fn randomized_threshold_full<T: Real>(c: &IntervalCollection<T>, u: T) -> Result<UnionOfIntervals<T>> {
    c.require_pair()?;
    check_unit(u, false)?;
    vote_set_equal(c, u)
}

/// Weighted vote at the random threshold `(1 + u) / 2`.
pub fn weighted_randomized<T: Real>(
    c: &IntervalCollection<T>,
    w: &WeightVector<T>,
    u: T,
) -> Result<UnionOfIntervals<T>> {
    check_unit(u, true)?;
    vote_set(c, w, (T::one() + u) / T::lit(2.0))
}
