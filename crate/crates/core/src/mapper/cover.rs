use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of intervals and the fraction by which adjacent intervals overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverSpec {
    pub bins: usize,
    pub overlap: f64,
}

impl CoverSpec {
    pub fn new(bins: usize, overlap: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::validation("cover needs at least one bin"));
        }
        if !(0.0..1.0).contains(&overlap) {
            return Err(Error::validation(format!("overlap must lie in [0, 1), got {overlap}")));
        }
        Ok(Self { bins, overlap })
    }
}

impl Default for CoverSpec {
    fn default() -> Self {
        Self { bins: 5, overlap: 0.5 }
    }
}

/// Closed interval `[lo, hi]` of filter values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Splits `[min, max]` of `values` into `bins` equal-length intervals where
/// neighbours overlap by `overlap · ℓ`.
///
/// With `ℓ = (max − min) / (b − (b − 1)·c)`, interval `i` starts at
/// `min + i·ℓ·(1 − c)`.
pub fn build_cover(values: &[f64], cover: &CoverSpec) -> Result<Vec<Interval>> {
    let cover = CoverSpec::new(cover.bins, cover.overlap)?;
    if values.is_empty() {
        return Err(Error::validation("cannot cover an empty set of filter values"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("filter values must be finite"));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = max - min;
    let b = cover.bins;
    if width == 0.0 {
        return Ok(vec![Interval { lo: min, hi: max }; b]);
    }
    let len = width / (b as f64 - (b as f64 - 1.0) * cover.overlap);
    let step = len * (1.0 - cover.overlap);
    Ok((0..b)
        .map(|i| {
            let lo = if i == 0 { min } else { min + i as f64 * step };
            // the last interval ends at max exactly, so rounding cannot drop it
            let hi = if i + 1 == b { max } else { (lo + len).min(max) };
            Interval { lo, hi }
        })
        .collect())
}

/// Instances grouped by the intervals containing their filter value.
#[derive(Debug, Clone, PartialEq)]
pub struct BinAssignment {
    /// Members of each bin in ascending instance order.
    pub bins: Vec<Vec<usize>>,
    /// Bins containing each instance, ascending.
    pub memberships: Vec<Vec<usize>>,
}

impl BinAssignment {
    pub fn empty_bins(&self) -> Vec<usize> {
        (0..self.bins.len()).filter(|&i| self.bins[i].is_empty()).collect()
    }
}

pub fn assign_bins(values: &[f64], intervals: &[Interval]) -> BinAssignment {
    let mut bins = vec![Vec::new(); intervals.len()];
    let mut memberships = vec![Vec::new(); values.len()];
    for (j, &v) in values.iter().enumerate() {
        for (i, iv) in intervals.iter().enumerate() {
            if iv.contains(v) {
                bins[i].push(j);
                memberships[j].push(i);
            }
        }
    }
    BinAssignment { bins, memberships }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn single_bin_spans_range() {
        let iv = build_cover(&[0.0, 0.3, 1.0], &CoverSpec::new(1, 0.5).unwrap()).unwrap();
        assert_eq!(iv, vec![Interval { lo: 0.0, hi: 1.0 }]);
    }

    #[test]
    fn two_bins_half_overlap() {
        // ℓ = 1 / (2 − 0.5) = 2/3
        let iv = build_cover(&[0.0, 1.0], &CoverSpec::new(2, 0.5).unwrap()).unwrap();
        assert!(close(iv[0].lo, 0.0) && close(iv[0].hi, 2.0 / 3.0));
        assert!(close(iv[1].lo, 1.0 / 3.0) && close(iv[1].hi, 1.0));
    }

    #[test]
    fn default_five_bins() {
        // ℓ = 1 / (5 − 2) = 1/3, step 1/6
        let iv = build_cover(&[0.0, 1.0], &CoverSpec::default()).unwrap();
        assert_eq!(iv.len(), 5);
        for (i, v) in iv.iter().enumerate() {
            assert!(close(v.lo, i as f64 / 6.0), "start {i}");
            assert!(close(v.length(), 1.0 / 3.0), "length {i}");
        }
        for w in iv.windows(2) {
            assert!(close(w[0].hi - w[1].lo, 0.5 / 3.0));
        }
    }

    #[test]
    fn degenerate_range_gives_point_intervals() {
        let iv = build_cover(&[2.0, 2.0], &CoverSpec::new(3, 0.2).unwrap()).unwrap();
        assert!(iv.iter().all(|v| v.lo == 2.0 && v.hi == 2.0));
        let bins = assign_bins(&[2.0, 2.0], &iv);
        assert!(bins.bins.iter().all(|b| b == &vec![0, 1]));
    }

    #[test]
    fn boundary_value_in_both_bins() {
        let values = [0.0, 0.5, 1.0];
        let iv = build_cover(&values, &CoverSpec::new(2, 0.5).unwrap()).unwrap();
        let a = assign_bins(&values, &iv);
        assert_eq!(a.bins, vec![vec![0, 1], vec![1, 2]]);
        assert_eq!(a.memberships[1], vec![0, 1]);

        // a value exactly on a shared endpoint belongs to both
        let iv = [Interval { lo: 0.0, hi: 0.5 }, Interval { lo: 0.5, hi: 1.0 }];
        assert_eq!(assign_bins(&[0.5], &iv).memberships[0], vec![0, 1]);
    }

    #[test]
    fn empty_bins_retained() {
        let iv = build_cover(&[0.0, 0.01, 1.0], &CoverSpec::new(4, 0.0).unwrap()).unwrap();
        let a = assign_bins(&[0.0, 0.01, 1.0], &iv);
        assert_eq!(a.bins.len(), 4);
        assert_eq!(a.empty_bins(), vec![1, 2]);
    }

    #[test]
    fn invalid_cover_rejected() {
        assert!(CoverSpec::new(0, 0.5).is_err());
        assert!(CoverSpec::new(3, 1.0).is_err());
        assert!(CoverSpec::new(3, -0.1).is_err());
        assert!(build_cover(&[], &CoverSpec::default()).is_err());
    }
}
