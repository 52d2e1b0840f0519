//! Coherence measures and recovery-guarantee checks.
//!
//! Two separation conventions coexist here and are kept apart on purpose:
//!
//! * [`d_coherence`] admits a pair `(i, j)` when its *wrapped* distance
//!   `min(|i - j|, N - |i - j|)` exceeds `d`.
//! * [`cumulative_d_coherence`] admits `j` for reference `i` when `i` lies
//!   outside the clamped d-closure of `j`, i.e. the *unwrapped* `|i - j| > d`.
//!
//! For Fourier-derived matrices the two differ near the matrix edges, where
//! columns `1` and `N` are strongly correlated but far apart unwrapped.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrices::{SensingMatrix, C64};
use crate::metrics::{closure_window, is_d_spread, SupportSet};

/// Default tolerance of [`classify_coherence_functions`].
pub const DEFAULT_CLASSIFY_TOLERANCE: f64 = 1e-9;

/// Relative singular-value cutoff for the pseudoinverse in the TRC check.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-10;

/// Default candidate-pair budget of [`check_trc_bruteforce`].
pub const DEFAULT_TRC_BUDGET: usize = 1_000_000;

fn check_index(i: usize, n: usize) -> Result<()> {
    if i == 0 || i > n {
        Err(Error::IndexOutOfRange { index: i, n })
    } else {
        Ok(())
    }
}

/// `|<phi_i, phi_j>| / (||phi_i|| ||phi_j||)` for 1-based column indices.
pub fn column_correlation(matrix: &SensingMatrix, i: usize, j: usize) -> Result<f64> {
    let phi = matrix.entries();
    check_index(i, phi.ncols())?;
    check_index(j, phi.ncols())?;
    let (a, b) = (phi.column(i - 1), phi.column(j - 1));
    let (na, nb) = (a.norm(), b.norm());
    for (norm, col) in [(na, i), (nb, j)] {
        if norm == 0.0 {
            return Err(Error::ZeroColumn { column: col });
        }
    }
    Ok(a.dotc(&b).norm() / (na * nb))
}

/// Welch bound `sqrt((n - m) / (m (n - 1)))`.
pub fn welch_bound(m: usize, n: usize) -> Result<f64> {
    if m == 0 || m >= n {
        return Err(Error::InvalidArgument(format!(
            "Welch bound needs 1 <= m < n (m = {m}, n = {n})"
        )));
    }
    Ok(((n - m) as f64 / (m as f64 * (n - 1) as f64)).sqrt())
}

/// `N̂ = max{M, ceil(N / d)}` (with `N̂ = N` at `d = 0`) and the bound
/// `k sqrt((N̂ - M) / (M (N̂ - 1)))`, or `None` when `k > sqrt(N̂ - 1)`.
pub fn cumulative_lower_bound(m: usize, n: usize, d: usize, k: usize) -> Option<f64> {
    let n_hat = if d == 0 { n } else { m.max(n.div_ceil(d)) };
    if (k * k) as f64 > n_hat.saturating_sub(1) as f64 {
        return None;
    }
    if n_hat <= m {
        return Some(0.0);
    }
    Some(k as f64 * ((n_hat - m) as f64 / (m as f64 * (n_hat - 1) as f64)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoherenceClass {
    /// Column correlations depend only on the index difference.
    Dynamic,
    Static,
}

/// Pairwise column correlations of one matrix, computed once.
#[derive(Debug)]
pub struct CorrelationTable {
    n: usize,
    m: usize,
    values: Vec<f64>,
    // Per row: 0-based column indices by decreasing correlation.
    ranked: OnceLock<Vec<Vec<u32>>>,
    wrapped: OnceLock<Vec<f64>>,
}

impl CorrelationTable {
    pub fn new(matrix: &SensingMatrix) -> Result<Self> {
        let phi = matrix.entries();
        let n = phi.ncols();
        let norms: Vec<f64> = phi.column_iter().map(|c| c.norm()).collect();
        if let Some(j) = norms.iter().position(|&v| v == 0.0) {
            return Err(Error::ZeroColumn { column: j + 1 });
        }
        let gram = phi.adjoint() * phi;
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] = gram[(i, j)].norm() / (norms[i] * norms[j]);
            }
        }
        Ok(CorrelationTable {
            n,
            m: phi.nrows(),
            values,
            ranked: OnceLock::new(),
            wrapped: OnceLock::new(),
        })
    }

    pub fn n_cols(&self) -> usize {
        self.n
    }

    pub fn n_rows(&self) -> usize {
        self.m
    }

    /// 0-based access.
    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Correlation for 1-based indices.
    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        check_index(i, self.n)?;
        check_index(j, self.n)?;
        Ok(self.at(i - 1, j - 1))
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    fn ranked(&self) -> &[Vec<u32>] {
        self.ranked.get_or_init(|| {
            (0..self.n)
                .map(|i| {
                    let row = self.row(i);
                    let mut order: Vec<u32> = (0..self.n as u32).collect();
                    order.sort_by(|&a, &b| row[b as usize].total_cmp(&row[a as usize]).then(a.cmp(&b)));
                    order
                })
                .collect()
        })
    }

    pub fn coherence(&self) -> Result<f64> {
        self.d_coherence(0)
    }

    /// Largest correlation at each wrapped distance `w = 0..=N/2`.
    fn wrapped_distance_maxima(&self) -> &[f64] {
        self.wrapped.get_or_init(|| {
            let n = self.n;
            let mut best = vec![0.0f64; n / 2 + 1];
            for i in 0..n {
                for j in i + 1..n {
                    let w = (j - i).min(n - (j - i));
                    best[w] = best[w].max(self.at(i, j));
                }
            }
            best
        })
    }

    /// `mu_d` for `d = 0..N`; entries with no admissible pair are `0`.
    pub fn d_coherence_profile(&self) -> Vec<f64> {
        let best = self.wrapped_distance_maxima();
        let mut profile = vec![0.0; self.n];
        let mut running = 0.0f64;
        // mu_d = max over wrapped distances w > d.
        for d in (0..self.n).rev() {
            if d + 1 < best.len() {
                running = running.max(best[d + 1]);
            }
            profile[d] = running;
        }
        profile
    }

    pub fn d_coherence(&self, d: usize) -> Result<f64> {
        // The largest wrapped distance is floor(N / 2).
        if d >= self.n / 2 {
            return Err(Error::NoAdmissiblePair { d, n: self.n });
        }
        let best = self.wrapped_distance_maxima();
        Ok(best[d + 1..].iter().copied().fold(0.0, f64::max))
    }

    /// `mu(1, 1 + f)` for `f = 0..N`.
    pub fn correlation_profile(&self) -> Vec<f64> {
        self.row(0).to_vec()
    }

    /// `(mu(phi_j, phi_1), ..., mu(phi_j, phi_N))`, 1-based `j`.
    pub fn coherence_function(&self, j: usize) -> Result<Vec<f64>> {
        check_index(j, self.n)?;
        Ok(self.row(j - 1).to_vec())
    }

    pub fn classify(&self, tolerance: f64) -> CoherenceClass {
        for f in 0..self.n {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for i in 0..self.n - f {
                let v = self.at(i, i + f);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > tolerance {
                return CoherenceClass::Static;
            }
        }
        CoherenceClass::Dynamic
    }

    /// Max over reference columns of the sum of its `k` largest correlations
    /// with columns `j`, `|i - j| > d`.
    pub fn cumulative_d_coherence(&self, d: usize, k: usize) -> Result<f64> {
        if k == 0 {
            return Ok(0.0);
        }
        if k > self.n {
            return Err(Error::CardinalityTooLarge { k, n: self.n, d });
        }
        let ranked = self.ranked();
        let mut best: Option<f64> = None;
        let mut top = Vec::with_capacity(k);
        for (i, order) in ranked.iter().enumerate() {
            top.clear();
            for &j in order {
                let j = j as usize;
                if i.abs_diff(j) > d {
                    top.push(self.at(i, j));
                    if top.len() == k {
                        break;
                    }
                }
            }
            if top.len() == k {
                let sum: f64 = top.iter().sum();
                best = Some(best.map_or(sum, |b| b.max(sum)));
            }
        }
        best.ok_or(Error::CardinalityTooLarge { k, n: self.n, d })
    }

    pub fn check_theorem2(&self, d: usize, s: usize) -> Result<GuaranteeReport> {
        if s == 0 {
            return Err(Error::InvalidArgument("sparsity must be at least 1".into()));
        }
        let mu_d = self.d_coherence(d)?;
        let mu_c_d_2s = self.cumulative_d_coherence(d, 2 * s)?;
        let mu_c_d_2s_minus_1 = self.cumulative_d_coherence(d, 2 * s - 1)?;
        // S < (1/mu_d + 1) / 4  <=>  (4S - 1) mu_d < 1, also valid at mu_d = 0.
        let corollary_mu_d_holds = ((4 * s - 1) as f64) * mu_d < 1.0;
        Ok(GuaranteeReport {
            d,
            s,
            mu_d,
            welch: report_welch(self.m, self.n),
            mu_c_d_2s,
            mu_c_d_2s_minus_1,
            thm2_holds: mu_c_d_2s_minus_1 + mu_c_d_2s < 1.0,
            corollary_mu_d_holds,
            corollary_cumulative_holds: mu_c_d_2s < 0.5,
        })
    }

    /// All `d` in `0..N` for which either corollary condition holds. Values of
    /// `d` where a measure is undefined are skipped.
    pub fn admissible_d_range(&self, s: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&d| {
                self.check_theorem2(d, s)
                    .is_ok_and(|r| r.corollary_mu_d_holds || r.corollary_cumulative_holds)
            })
            .collect()
    }

    pub fn report(&self) -> CoherenceReport {
        let mu_d_profile = self.d_coherence_profile();
        CoherenceReport {
            mu: mu_d_profile.first().copied().unwrap_or(0.0),
            mu_d_profile,
            welch: report_welch(self.m, self.n),
            correlation_profile: self.correlation_profile(),
        }
    }
}

/// Welch bound, with the `M = N` limit reported as `0`.
fn report_welch(m: usize, n: usize) -> f64 {
    welch_bound(m, n).unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    pub mu: f64,
    /// `mu_d` for `d = 0..N`, zero where no pair is admissible.
    pub mu_d_profile: Vec<f64>,
    pub welch: f64,
    /// `mu(1, 1 + f)` for `f = 0..N`.
    pub correlation_profile: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuaranteeReport {
    pub d: usize,
    pub s: usize,
    pub mu_d: f64,
    pub welch: f64,
    pub mu_c_d_2s: f64,
    pub mu_c_d_2s_minus_1: f64,
    /// `mu^C_d(2S - 1) + mu^C_d(2S) < 1`
    pub thm2_holds: bool,
    /// `S < (1 / mu_d + 1) / 4`
    pub corollary_mu_d_holds: bool,
    /// `mu^C_d(2S) < 1/2`
    pub corollary_cumulative_holds: bool,
}

pub fn coherence(matrix: &SensingMatrix) -> Result<f64> {
    if matrix.n_cols() < 2 {
        return Err(Error::InvalidArgument("coherence needs at least two columns".into()));
    }
    CorrelationTable::new(matrix)?.coherence()
}

pub fn d_coherence(matrix: &SensingMatrix, d: usize) -> Result<f64> {
    CorrelationTable::new(matrix)?.d_coherence(d)
}

pub fn coherence_function(matrix: &SensingMatrix, j: usize) -> Result<Vec<f64>> {
    CorrelationTable::new(matrix)?.coherence_function(j)
}

pub fn classify_coherence_functions(matrix: &SensingMatrix, tolerance: f64) -> Result<CoherenceClass> {
    if tolerance <= 0.0 || tolerance.is_nan() {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tolerance}")));
    }
    Ok(CorrelationTable::new(matrix)?.classify(tolerance))
}

pub fn cumulative_d_coherence(matrix: &SensingMatrix, d: usize, k: usize) -> Result<f64> {
    CorrelationTable::new(matrix)?.cumulative_d_coherence(d, k)
}

pub fn check_theorem2(matrix: &SensingMatrix, d: usize, s: usize) -> Result<GuaranteeReport> {
    CorrelationTable::new(matrix)?.check_theorem2(d, s)
}

pub fn admissible_d_range(matrix: &SensingMatrix, s: usize) -> Result<Vec<usize>> {
    if s == 0 {
        return Err(Error::InvalidArgument("sparsity must be at least 1".into()));
    }
    Ok(CorrelationTable::new(matrix)?.admissible_d_range(s))
}

pub fn coherence_report(matrix: &SensingMatrix) -> Result<CoherenceReport> {
    Ok(CorrelationTable::new(matrix)?.report())
}

/// Outcome of the exhaustive tolerant-recovery-condition check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrcOutcome {
    /// Largest `||pinv(Phi_T~) phi_j||_1` seen; `0` when nothing was checked.
    pub worst: f64,
    /// Number of `{A, B}` pairs enumerated.
    pub pairs: usize,
}

impl TrcOutcome {
    pub fn holds(&self) -> bool {
        self.worst < 1.0
    }
}

/// Windows `clos_d({a})` of the members of a spread set, as `(lo, hi)` 1-based.
type Windows = Vec<(usize, usize)>;

/// Calls `visit` with every `spread`-spread subset of `1..=n` of size `t`.
fn for_each_spread_subset(n: usize, t: usize, spread: usize, visit: &mut dyn FnMut(&[usize]) -> bool) {
    fn rec(
        start: usize,
        n: usize,
        t: usize,
        spread: usize,
        cur: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if cur.len() == t {
            return visit(cur);
        }
        for a in start..=n {
            cur.push(a);
            let go_on = rec(a + spread + 1, n, t, spread, cur, visit);
            cur.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
    rec(1, n, t, spread, &mut Vec::with_capacity(t), visit);
}

/// Number of sets B inside the disjoint windows that hit every window and
/// have exactly `size` members (`None`: any size).
fn count_b_sets(windows: &Windows, size: Option<usize>) -> u128 {
    match size {
        None => windows
            .iter()
            .map(|&(lo, hi)| (1u128 << (hi - lo + 1)) - 1)
            .fold(1u128, |acc, c| acc.saturating_mul(c)),
        Some(size) => {
            // Polynomial product of ((1 + x)^w - 1) over windows, coefficient of x^size.
            let mut poly = vec![0u128; size + 1];
            poly[0] = 1;
            for &(lo, hi) in windows {
                let w = hi - lo + 1;
                let mut next = vec![0u128; size + 1];
                for (deg, &c) in poly.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    let mut binom = 1u128;
                    for pick in 1..=w.min(size - deg) {
                        binom = binom * (w - pick + 1) as u128 / pick as u128;
                        next[deg + pick] = next[deg + pick].saturating_add(c.saturating_mul(binom));
                    }
                }
                poly = next;
            }
            poly[size]
        }
    }
}

/// Calls `visit` with every B hitting all windows (exactly `size` members if given).
fn for_each_b_set(windows: &Windows, size: Option<usize>, visit: &mut dyn FnMut(&[usize])) {
    fn rec(
        w: usize,
        windows: &Windows,
        size: Option<usize>,
        cur: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if w == windows.len() {
            if size.is_none_or(|s| cur.len() == s) {
                visit(cur);
            }
            return;
        }
        let (lo, hi) = windows[w];
        let width = hi - lo + 1;
        for mask in 1u64..(1u64 << width) {
            let before = cur.len();
            cur.extend((0..width).filter(|b| mask >> b & 1 == 1).map(|b| lo + b));
            if size.is_none_or(|s| cur.len() <= s) {
                rec(w + 1, windows, size, cur, visit);
            }
            cur.truncate(before);
        }
    }
    rec(0, windows, size, &mut Vec::new(), visit);
}

fn windows_of(a: &[usize], d: usize, n: usize) -> Windows {
    a.iter().map(|&i| closure_window(i, d, n)).collect()
}

fn pseudo_inverse(block: DMatrix<C64>) -> DMatrix<C64> {
    let svd = block.svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = (PINV_RELATIVE_CUTOFF * sigma_max).max(f64::MIN_POSITIVE);
    svd.pseudo_inverse(eps).expect("u and v were computed")
}

/// Exhaustive evaluation of the tolerant recovery condition: over all pairs
/// `{A, B}` with `A ⊆ clos_d(B)`, `B ⊆ clos_d(A)`, `|A| = S` or `|B| = S`, and
/// `A` `(4d + 1)`-spread, the largest `||pinv(Phi_{A ∪ B}) phi_j||_1` over
/// `j` outside `clos_2d(A)`.
pub fn trc_worst_case(matrix: &SensingMatrix, d: usize, s: usize, max_enumeration: usize) -> Result<TrcOutcome> {
    let n = matrix.n_cols();
    if s == 0 {
        return Ok(TrcOutcome { worst: 0.0, pairs: 0 });
    }
    let spread = 4 * d + 1;

    // Counting pass, so an oversized instance fails before any linear algebra.
    let mut total: u128 = 0;
    for t in 1..=s {
        let size = (t < s).then_some(s);
        for_each_spread_subset(n, t, spread, &mut |a| {
            total = total.saturating_add(count_b_sets(&windows_of(a, d, n), size));
            total <= max_enumeration as u128
        });
        if total > max_enumeration as u128 {
            return Err(Error::EnumerationBudget { budget: max_enumeration });
        }
    }

    let phi = matrix.entries();
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    for t in 1..=s {
        let size = (t < s).then_some(s);
        for_each_spread_subset(n, t, spread, &mut |a| {
            let a_set = SupportSet::new(a.iter().copied(), n).expect("indices in range");
            debug_assert!(is_d_spread(&a_set, spread));
            let outside: Vec<usize> = (1..=n)
                .filter(|&j| !a.iter().any(|&i| i.abs_diff(j) <= 2 * d))
                .collect();
            for_each_b_set(&windows_of(a, d, n), size, &mut |b| {
                pairs += 1;
                if outside.is_empty() {
                    return;
                }
                let t_tilde = a_set.union(&SupportSet::new(b.iter().copied(), n).expect("in range"));
                let cols: Vec<usize> = t_tilde.to_zero_based();
                let pinv = pseudo_inverse(phi.select_columns(&cols));
                for &j in &outside {
                    let coeffs = &pinv * phi.column(j - 1);
                    let l1: f64 = coeffs.iter().map(|c| c.norm()).sum();
                    worst = worst.max(l1);
                }
            });
            true
        });
    }
    Ok(TrcOutcome { worst, pairs })
}

/// True iff the tolerant recovery condition holds for every admissible pair.
pub fn check_trc_bruteforce(matrix: &SensingMatrix, d: usize, s: usize, max_enumeration: usize) -> Result<bool> {
    Ok(trc_worst_case(matrix, d, s, max_enumeration)?.holds())
}
