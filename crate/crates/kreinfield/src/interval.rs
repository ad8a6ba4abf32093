//! Finite unions of real intervals, possibly unbounded.
//!
//! These are the frequency sets J that select spectral projections. The
//! endpoints are kept sorted and disjoint; +/- infinity are ordinary f64
//! infinities so that unbounded half-lines need no special casing.

use serde::{Deserialize, Serialize};

/// A finite union of disjoint open-ended intervals (lo, hi) with lo < hi,
/// sorted by lo. Whether an endpoint itself belongs to the set never
/// matters downstream: admissibility requires every eigenvalue to stay a
/// positive distance away from every boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
}

impl IntervalUnion {
    /// Normalizes: drops empty intervals, sorts, merges overlaps.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Self {
        intervals.retain(|(lo, hi)| lo < hi);
        intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (lo, hi) in intervals {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        Self { intervals: merged }
    }

    pub fn empty() -> Self {
        Self { intervals: vec![] }
    }

    pub fn whole_line() -> Self {
        Self::new(vec![(f64::NEG_INFINITY, f64::INFINITY)])
    }

    /// The closed positive half-line [0, inf) of positive frequencies.
    pub fn positive_half_line() -> Self {
        Self::new(vec![(0.0, f64::INFINITY)])
    }

    pub fn negative_half_line() -> Self {
        Self::new(vec![(f64::NEG_INFINITY, 0.0)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| lo <= x && x <= hi)
    }

    /// Distance from x to the nearest finite boundary point; infinite when
    /// there is none.
    pub fn boundary_distance(&self, x: f64) -> f64 {
        self.finite_endpoints()
            .map(|e| (x - e).abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn finite_endpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.intervals
            .iter()
            .flat_map(|&(lo, hi)| [lo, hi])
            .filter(|e| e.is_finite())
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(alo, ahi) in &self.intervals {
            for &(blo, bhi) in &other.intervals {
                let lo = alo.max(blo);
                let hi = ahi.min(bhi);
                if lo < hi {
                    out.push((lo, hi));
                }
            }
        }
        Self::new(out)
    }

    /// Complement within the whole line.
    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut cursor = f64::NEG_INFINITY;
        for &(lo, hi) in &self.intervals {
            if cursor < lo {
                out.push((cursor, lo));
            }
            cursor = hi;
        }
        if cursor < f64::INFINITY {
            out.push((cursor, f64::INFINITY));
        }
        Self::new(out)
    }

    /// Removes the closed neighborhoods [c - eps, c + eps] from the set.
    pub fn remove_neighborhoods(&self, centers: &[f64], eps: f64) -> Self {
        let holes = IntervalUnion::new(centers.iter().map(|&c| (c - eps, c + eps)).collect());
        self.intersection(&holes.complement())
    }

    /// Serialization helper: (lo, hi) pairs with None for infinities, the
    /// form used in scenario JSON (JSON has no literal Infinity).
    pub fn to_json_pairs(&self) -> Vec<(Option<f64>, Option<f64>)> {
        self.intervals
            .iter()
            .map(|&(lo, hi)| {
                (
                    lo.is_finite().then_some(lo),
                    hi.is_finite().then_some(hi),
                )
            })
            .collect()
    }

    pub fn from_json_pairs(pairs: &[(Option<f64>, Option<f64>)]) -> Self {
        Self::new(
            pairs
                .iter()
                .map(|&(lo, hi)| {
                    (
                        lo.unwrap_or(f64::NEG_INFINITY),
                        hi.unwrap_or(f64::INFINITY),
                    )
                })
                .collect(),
        )
    }
}

impl std::fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "{{}}");
        }
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|(lo, hi)| format!("[{lo}, {hi}]"))
            .collect();
        write!(f, "{}", parts.join(" u "))
    }
}
