//! Index sets, d-closures and the tolerant recovery measures.
//!
//! Indices are 1-based throughout this module: a [`SupportSet`] over a signal
//! of length `N` holds values in `1..=N`.

use std::fmt;

use crate::error::{Error, Result};
use crate::matrices::C64;
use crate::signals::SparseSignal;

/// Sorted, duplicate-free set of 1-based indices in `1..=ambient_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SupportSet {
    indices: Vec<usize>,
    ambient_n: usize,
}

impl SupportSet {
    /// Duplicates are dropped; any index outside `1..=ambient_n` is an error.
    pub fn new(indices: impl IntoIterator<Item = usize>, ambient_n: usize) -> Result<Self> {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > ambient_n) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                n: ambient_n,
            });
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(SupportSet { indices, ambient_n })
    }

    pub fn empty(ambient_n: usize) -> Self {
        SupportSet {
            indices: Vec::new(),
            ambient_n,
        }
    }

    /// Builds a set from 0-based positions.
    pub fn from_zero_based(positions: impl IntoIterator<Item = usize>, ambient_n: usize) -> Result<Self> {
        Self::new(positions.into_iter().map(|p| p + 1), ambient_n)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn ambient_n(&self) -> usize {
        self.ambient_n
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn is_subset(&self, other: &SupportSet) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn to_zero_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i - 1).collect()
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let mut indices: Vec<usize> = self.indices.iter().chain(&other.indices).copied().collect();
        indices.sort_unstable();
        indices.dedup();
        SupportSet {
            indices,
            ambient_n: self.ambient_n.max(other.ambient_n),
        }
    }
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

/// `[max(i - d, 1), min(i + d, n)]`, no wrapping.
pub(crate) fn closure_window(i: usize, d: usize, n: usize) -> (usize, usize) {
    (i.saturating_sub(d).max(1), (i + d).min(n))
}

/// Union of the clamped windows `[max(i - d, 1), min(i + d, N)]` over all members.
pub fn d_closure(set: &SupportSet, d: usize) -> SupportSet {
    let n = set.ambient_n;
    let mut indices = Vec::with_capacity(set.len() * (2 * d + 1));
    let mut next_free = 1;
    for &i in &set.indices {
        let (lo, hi) = closure_window(i, d, n);
        // Members are sorted, so windows only ever overlap the tail.
        for j in lo.max(next_free)..=hi {
            indices.push(j);
        }
        next_free = next_free.max(hi + 1);
    }
    SupportSet { indices, ambient_n: n }
}

/// Number of true indices that lie in the d-closure of the recovered support.
pub fn recovered_count(true_support: &SupportSet, recovered: &SupportSet, d: usize) -> usize {
    // A true index i is covered iff some recovered g has |i - g| <= d.
    let rec = recovered.indices();
    true_support
        .iter()
        .filter(|&i| {
            let pos = rec.partition_point(|&g| g < i);
            let right = rec.get(pos).is_some_and(|&g| g - i <= d);
            let left = pos > 0 && i - rec[pos - 1] <= d;
            left || right
        })
        .count()
}

/// Fraction of the true support covered by the d-closure of the recovered support.
pub fn rho_d(true_support: &SupportSet, recovered: &SupportSet, d: usize) -> Result<f64> {
    if true_support.is_empty() {
        return Err(Error::EmptySupport);
    }
    Ok(recovered_count(true_support, recovered, d) as f64 / true_support.len() as f64)
}

/// Largest number of nonzeros with pairwise disjoint d-closures in a length-`n` signal.
pub fn s_max(n: usize, d: usize) -> usize {
    assert!(n >= 1, "signal length must be positive");
    (n - 1) / (2 * d + 1) + 1
}

/// All distinct members are more than `d` apart.
pub fn is_d_spread(set: &SupportSet, d: usize) -> bool {
    set.indices.windows(2).all(|w| w[1] - w[0] > d)
}

/// `a ⊆ clos_d(b)`, `b ⊆ clos_d(a)` and the larger set has at least `s` members.
pub fn is_d_approximate_pair(a: &SupportSet, b: &SupportSet, d: usize, s: usize) -> bool {
    a.len().max(b.len()) >= s
        && a.is_subset(&d_closure(b, d))
        && b.is_subset(&d_closure(a, d))
}

/// Proxy vector: on each index `i` of `support`, the sum of `|values_j|` over
/// `j` in the clamped window around `i`; zero elsewhere.
pub fn proxy_signal(values: &[C64], support: &SupportSet, d: usize) -> Vec<f64> {
    let n = values.len();
    let mut proxy = vec![0.0; n];
    for i in support.iter() {
        let (lo, hi) = closure_window(i, d, n);
        proxy[i - 1] = values[lo - 1..hi].iter().map(|v| v.norm()).sum();
    }
    proxy
}

/// Tolerant l2 measure `1 - ||xr_p - x_p|| / (||xr_p|| ||x_p||)`.
pub fn rho_2(true_signal: &SparseSignal, recovered: &[C64], d: usize) -> Result<f64> {
    let x = true_signal.values();
    if recovered.len() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "recovered length {} vs signal length {}",
            recovered.len(),
            x.len()
        )));
    }
    let support = true_signal.support();
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let xp = proxy_signal(x, support, d);
    let rp = proxy_signal(recovered, support, d);
    let l2 = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let (nx, nr) = (l2(&xp), l2(&rp));
    if nr == 0.0 {
        return Err(Error::ZeroProxy);
    }
    let diff: Vec<f64> = rp.iter().zip(&xp).map(|(a, b)| a - b).collect();
    Ok(1.0 - l2(&diff) / (nr * nx))
}
