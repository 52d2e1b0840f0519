//! Greedy recovery (DtOMP, OMP) and the naive grid-coarsening baselines.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::matrices::{build, CMatrix, MatrixKind, MatrixSpec, SensingMatrix, C64};
use crate::metrics::SupportSet;
use crate::signals::{add_noise, NoiseSpec};

/// Relative singular-value threshold below which a column block counts as rank deficient.
pub const RANK_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    /// Length-`N` reconstruction, zero off `support`.
    pub estimate: Vec<C64>,
    pub support: SupportSet,
    /// Selected 1-based indices in selection order.
    pub selection_order: Vec<usize>,
    /// `||r||` after each refit.
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
    /// Set when the loop stopped because no admissible candidate remained.
    pub exhausted: bool,
}

/// Least-squares coefficients of `y` on the given columns, via QR.
pub fn restricted_least_squares(matrix: &SensingMatrix, columns: &SupportSet, y: &[C64]) -> Result<Vec<C64>> {
    let phi = matrix.entries();
    if y.len() != phi.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "measurement length {} vs {} rows",
            y.len(),
            phi.nrows()
        )));
    }
    if columns.ambient_n() > phi.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "support over {} columns, matrix has {}",
            columns.ambient_n(),
            phi.ncols()
        )));
    }
    if columns.len() > phi.nrows() {
        return Err(Error::InvalidArgument(format!(
            "{} columns exceed the {} available rows",
            columns.len(),
            phi.nrows()
        )));
    }
    if columns.is_empty() {
        return Ok(Vec::new());
    }
    let block = phi.select_columns(&columns.to_zero_based());
    solve_block(block, y)
}

fn solve_block(block: CMatrix, y: &[C64]) -> Result<Vec<C64>> {
    let sv = block.singular_values();
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if hi == 0.0 || lo < RANK_CUTOFF * hi {
        return Err(Error::RankDeficient {
            ratio: if hi == 0.0 { 0.0 } else { lo / hi },
        });
    }
    let qr = block.qr();
    let qhy = qr.q().adjoint() * DVector::from_column_slice(y);
    let z = qr
        .r()
        .solve_upper_triangular(&qhy)
        .ok_or(Error::RankDeficient { ratio: 0.0 })?;
    Ok(z.as_slice().to_vec())
}

/// d-tolerant OMP: each step picks the largest `|Phi^* r|` outside the
/// 2d-closure of the current support (lowest index on ties), then refits.
pub fn dtomp(matrix: &SensingMatrix, y: &[C64], s: usize, d: usize) -> Result<RecoveryResult> {
    let phi = matrix.entries();
    let (m, n) = phi.shape();
    if s == 0 {
        return Err(Error::InvalidArgument("sparsity budget must be at least 1".into()));
    }
    if y.len() != m {
        return Err(Error::DimensionMismatch(format!("measurement length {} vs {m} rows", y.len())));
    }
    let y_vec = DVector::from_column_slice(y);
    let mut excluded = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(s);
    let mut coeffs: Vec<C64> = Vec::new();
    let mut residual = y_vec.clone();
    let mut residual_norms = Vec::with_capacity(s);
    let mut exhausted = false;

    let mut k = 1;
    while k <= s && order.len() < s {
        let b = phi.ad_mul(&residual);
        let mut pick: Option<(usize, f64)> = None;
        for (j, v) in b.iter().enumerate() {
            let mag = v.norm();
            if !excluded[j] && pick.is_none_or(|(_, best)| mag > best) {
                pick = Some((j, mag));
            }
        }
        let Some((j, _)) = pick else {
            exhausted = true;
            break;
        };
        order.push(j);
        let lo = j.saturating_sub(2 * d);
        let hi = (j + 2 * d).min(n - 1);
        excluded[lo..=hi].iter_mut().for_each(|e| *e = true);

        if order.len() > m {
            return Err(Error::InvalidArgument(format!("{} columns exceed the {m} available rows", order.len())));
        }
        let block = phi.select_columns(&order);
        coeffs = solve_block(block.clone(), y)?;
        residual = &y_vec - block * DVector::from_column_slice(&coeffs);
        residual_norms.push(residual.norm());
        k += 1;
    }

    let mut estimate = vec![C64::new(0.0, 0.0); n];
    for (&j, &c) in order.iter().zip(&coeffs) {
        estimate[j] = c;
    }
    Ok(RecoveryResult {
        estimate,
        support: SupportSet::from_zero_based(order.iter().copied(), n)?,
        selection_order: order.iter().map(|j| j + 1).collect(),
        iterations: residual_norms.len(),
        residual_norms,
        exhausted,
    })
}

/// Orthogonal matching pursuit, i.e. [`dtomp`] with `d = 0`.
pub fn omp(matrix: &SensingMatrix, y: &[C64], s: usize) -> Result<RecoveryResult> {
    dtomp(matrix, y, s, 0)
}

/// Zero-based `(start, len)` of the `m` contiguous blocks partitioning `0..n`;
/// the first `n mod m` blocks are one longer.
pub fn block_layout(n: usize, m: usize) -> Result<Vec<(usize, usize)>> {
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    let (q, r) = (n / m, n % m);
    let mut start = 0;
    Ok((0..m)
        .map(|k| {
            let len = q + usize::from(k < r);
            let block = (start, len);
            start += len;
            block
        })
        .collect())
}

/// Block sums over [`block_layout`]`(x.len(), m)`.
pub fn downsample(x: &[C64], m: usize) -> Result<Vec<C64>> {
    Ok(block_layout(x.len(), m)?
        .into_iter()
        .map(|(start, len)| x[start..start + len].iter().sum())
        .collect())
}

/// Places `v_k` at the center `start_k + floor((len_k - 1) / 2)` of block `k`.
pub fn upsample(v: &[C64], n: usize) -> Result<Vec<C64>> {
    let mut out = vec![C64::new(0.0, 0.0); n];
    for ((start, len), &value) in block_layout(n, v.len())?.into_iter().zip(v) {
        out[start + (len - 1) / 2] = value;
    }
    Ok(out)
}

/// Unitary DFT `F x / sqrt(N)`, or its inverse.
pub fn unitary_dft(x: &[C64], inverse: bool) -> Vec<C64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let twiddle: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(1.0, sign * 2.0 * PI * k as f64 / n as f64))
        .collect();
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|row| {
            let acc: C64 = x.iter().enumerate().map(|(col, v)| v * twiddle[row * col % n]).sum();
            acc * scale
        })
        .collect()
}

/// Row choice for the coarse-grid DFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarseRows {
    /// The first `M` rows.
    ConsecBegin,
    /// `M` random rows drawn from the seed.
    Random(u64),
}

/// `M x ceil(N / d)` row-subsampled DFT for recovery on the coarse grid.
pub fn coarse_grid_matrix(m: usize, n: usize, d: usize, rows: CoarseRows) -> Result<SensingMatrix> {
    if d == 0 {
        return Err(Error::InvalidArgument("coarse grid needs d >= 1".into()));
    }
    let order = n.div_ceil(d);
    if m > order {
        return Err(Error::InvalidArgument(format!(
            "{m} rows exceed the coarse grid size {order}"
        )));
    }
    let spec = match rows {
        CoarseRows::ConsecBegin => MatrixSpec::new(MatrixKind::FConsecBegin, m, order),
        CoarseRows::Random(seed) => MatrixSpec::new(MatrixKind::FRand, m, order).with_seed(seed),
    };
    build(&spec)
}

/// `y = Phi_c D(x) + e` with `D` summing `x` over the `ceil(N / d)` coarse blocks.
pub fn coarse_grid_measure(x: &[C64], m: usize, d: usize, rows: CoarseRows, noise: &NoiseSpec) -> Result<Vec<C64>> {
    let phi = coarse_grid_matrix(m, x.len(), d, rows)?;
    let coarse = downsample(x, phi.n_cols())?;
    let clean = phi.entries() * DVector::from_column_slice(&coarse);
    add_noise(clean.as_slice(), noise)
}

/// OMP with budget `s` on the coarse grid; the result has length `ceil(N / d)`.
pub fn coarse_grid_recover(
    y: &[C64],
    m: usize,
    n: usize,
    d: usize,
    s: usize,
    rows: CoarseRows,
) -> Result<RecoveryResult> {
    let phi = coarse_grid_matrix(m, n, d, rows)?;
    omp(&phi, y, s)
}

/// Downsample then sense: `y = F_M D(x) + e`.
pub fn ds_measure(x: &[C64], m: usize, noise: &NoiseSpec) -> Result<Vec<C64>> {
    add_noise(&unitary_dft(&downsample(x, m)?, false), noise)
}

/// `U(F_M^{-1} y)` on a length-`n` grid.
pub fn ds_reconstruct(y: &[C64], n: usize) -> Result<Vec<C64>> {
    upsample(&unitary_dft(y, true), n)
}

/// Sense then downsample: `y = D(F_N x) + e`.
pub fn sd_measure(x: &[C64], m: usize, noise: &NoiseSpec) -> Result<Vec<C64>> {
    add_noise(&downsample(&unitary_dft(x, false), m)?, noise)
}

/// `F_N^{-1}(U y)`.
pub fn sd_reconstruct(y: &[C64], n: usize) -> Result<Vec<C64>> {
    Ok(unitary_dft(&upsample(y, n)?, true))
}

/// 1-based indices of the `s` largest magnitudes, ties to the lower index.
pub fn largest_entries(values: &[C64], s: usize) -> SupportSet {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].norm().total_cmp(&values[a].norm()).then(a.cmp(&b)));
    idx.truncate(s);
    SupportSet::from_zero_based(idx, values.len()).expect("positions in range")
}
