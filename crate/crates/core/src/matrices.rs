//! Sensing matrix constructions.
//!
//! All matrices are dense `M x N` complex matrices whose columns are
//! normalized to unit l2 norm. Fourier-derived kinds are row (and for
//! [`MatrixKind::FnXStatBlocks`] column) restrictions of the unnormalized DFT
//! matrix `F_order[m, n] = exp(-2 pi i m n / order)`.
//!
//! Random kinds draw from [`crate::seeding::rng_from_seed`]`(spec.seed)` in
//! this fixed order:
//!
//! * `FConsecutive`: one row shift `s` uniform on `1..=N-M`.
//! * `FRand`: one uniform `M`-subset of `0..N` (`rand::seq::index::sample`),
//!   rows kept in ascending order.
//! * `FnXStatBlocks`: one row shift uniform on `1..=3N-M`, then one uniform
//!   `B`-subset of `0..2N+B` that fixes the gaps between the column blocks.
//! * `RGauss`: entries in column-major order, real part then imaginary part,
//!   each `N(0, 1/2)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix};
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatrixKind {
    /// First `M` rows of `F_N`.
    FConsecBegin,
    /// `M` consecutive rows of `F_N` starting at a random row.
    FConsecutive,
    /// `M` distinct random rows of `F_N`.
    FRand,
    /// `5 floor(ln N)` random column blocks of a consecutive-row restriction of `F_3N`.
    FnXStatBlocks,
    /// I.i.d. complex Gaussian entries.
    RGauss,
    /// Columns of `F_M`, each repeated `2d + 1` times.
    XiInflated,
}

impl MatrixKind {
    pub const ALL: [MatrixKind; 6] = [
        MatrixKind::FConsecBegin,
        MatrixKind::FConsecutive,
        MatrixKind::FRand,
        MatrixKind::FnXStatBlocks,
        MatrixKind::RGauss,
        MatrixKind::XiInflated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::FConsecBegin => "FConsecBegin",
            MatrixKind::FConsecutive => "FConsecutive",
            MatrixKind::FRand => "FRand",
            MatrixKind::FnXStatBlocks => "FnXStatBlocks",
            MatrixKind::RGauss => "RGauss",
            MatrixKind::XiInflated => "XiInflated",
        }
    }
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatrixKind {
    type Err = Error;

    /// Case-insensitive; underscores and dashes are ignored, so `F_consecBegin`
    /// and `fconsecbegin` both parse.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .flat_map(char::to_lowercase)
            .collect();
        Ok(match key.as_str() {
            "fconsecbegin" | "fcb" | "psi" => MatrixKind::FConsecBegin,
            "fconsecutive" => MatrixKind::FConsecutive,
            "frand" | "fr" => MatrixKind::FRand,
            "fnxstatblocks" => MatrixKind::FnXStatBlocks,
            "rgauss" => MatrixKind::RGauss,
            "xiinflated" | "xi" => MatrixKind::XiInflated,
            _ => return Err(Error::InvalidSpec(format!("unknown matrix kind '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MatrixSpec {
    pub kind: MatrixKind,
    /// M
    pub n_rows: usize,
    /// N
    pub n_cols: usize,
    pub seed: u64,
    /// Only read by [`MatrixKind::XiInflated`].
    pub inflation_d: usize,
}

impl MatrixSpec {
    pub fn new(kind: MatrixKind, n_rows: usize, n_cols: usize) -> Self {
        MatrixSpec {
            kind,
            n_rows,
            n_cols,
            seed: 0,
            inflation_d: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_inflation(mut self, d: usize) -> Self {
        self.inflation_d = d;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.n_rows, self.n_cols);
        if m == 0 || n == 0 {
            return Err(Error::InvalidSpec(format!("M = {m} and N = {n} must be positive")));
        }
        if m > n {
            return Err(Error::InvalidSpec(format!("M = {m} exceeds N = {n}")));
        }
        if self.kind == MatrixKind::FConsecutive && n - m < 1 {
            return Err(Error::InvalidSpec(format!(
                "FConsecutive needs N - M >= 1 to draw a row shift (M = {m}, N = {n})"
            )));
        }
        Ok(())
    }

    /// Flat `key = value` block, one key per line.
    pub fn to_key_values(&self) -> String {
        format!(
            "kind = {}\nm = {}\nn = {}\nseed = {}\ninflation_d = {}\n",
            self.kind, self.n_rows, self.n_cols, self.seed, self.inflation_d
        )
    }

    /// Parses the keys written by [`MatrixSpec::to_key_values`]. `m` and `n`
    /// fall back to `default_dims` when absent; `seed` and `inflation_d`
    /// default to zero. Unknown keys are rejected.
    pub fn from_key_values<'a, I>(pairs: I, default_dims: Option<(usize, usize)>) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut kind = None;
        let (mut m, mut n) = (default_dims.map(|d| d.0), default_dims.map(|d| d.1));
        let mut seed = 0u64;
        let mut inflation_d = 0usize;
        for (key, value) in pairs {
            let bad = |what: &str| Error::InvalidSpec(format!("bad {what} '{value}'"));
            match key.to_ascii_lowercase().as_str() {
                "kind" => kind = Some(value.parse::<MatrixKind>()?),
                "m" | "n_rows" => m = Some(value.parse().map_err(|_| bad("M"))?),
                "n" | "n_cols" => n = Some(value.parse().map_err(|_| bad("N"))?),
                "seed" => seed = value.parse().map_err(|_| bad("seed"))?,
                "inflation_d" => inflation_d = value.parse().map_err(|_| bad("inflation_d"))?,
                other => return Err(Error::InvalidSpec(format!("unknown matrix key '{other}'"))),
            }
        }
        let spec = MatrixSpec {
            kind: kind.ok_or_else(|| Error::InvalidSpec("missing 'kind'".into()))?,
            n_rows: m.ok_or_else(|| Error::InvalidSpec("missing 'm'".into()))?,
            n_cols: n.ok_or_else(|| Error::InvalidSpec("missing 'n'".into()))?,
            seed,
            inflation_d,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// An `M x N` complex matrix with unit-norm columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    entries: CMatrix,
    spec: Option<MatrixSpec>,
}

impl SensingMatrix {
    /// Wraps an arbitrary matrix, normalizing its columns.
    pub fn from_entries(entries: CMatrix) -> Result<Self> {
        Ok(SensingMatrix {
            entries: column_normalize(entries)?,
            spec: None,
        })
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn spec(&self) -> Option<&MatrixSpec> {
        self.spec.as_ref()
    }

    pub fn n_rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.entries.ncols()
    }
}

fn unit_root(order: usize, exponent: u64) -> C64 {
    // Reduce the exponent first so the phase stays exact for large products.
    let k = exponent % order as u64;
    let theta = -2.0 * PI * (k as f64) / (order as f64);
    C64::new(theta.cos(), theta.sin())
}

/// Unnormalized `order x order` DFT matrix, `F[m, n] = exp(-2 pi i m n / order)`
/// with zero-based `m`, `n`.
pub fn dft_matrix(order: usize) -> CMatrix {
    dft_rows(order, 0..order)
}

/// Rows of `F_order` selected by zero-based index.
fn dft_rows(order: usize, rows: impl IntoIterator<Item = usize>) -> CMatrix {
    dft_block(order, &rows.into_iter().collect::<Vec<_>>(), &(0..order).collect::<Vec<_>>())
}

fn dft_block(order: usize, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |r, c| {
        unit_root(order, rows[r] as u64 * cols[c] as u64)
    })
}

/// Scales every column to unit l2 norm.
pub fn column_normalize(mut matrix: CMatrix) -> Result<CMatrix> {
    for (j, mut col) in matrix.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroColumn { column: j + 1 });
        }
        col.unscale_mut(norm);
    }
    Ok(matrix)
}

/// Number of column blocks used by [`MatrixKind::FnXStatBlocks`]:
/// `5 floor(ln N)`, clamped to `1..=N`.
pub fn stat_block_count(n: usize) -> usize {
    let b = 5 * ((n as f64).ln().floor().max(0.0) as usize);
    b.clamp(1, n)
}

/// Zero-based first columns and widths of the `FnXStatBlocks` blocks inside `0..3N`.
fn stat_block_layout(n: usize, rng: &mut impl rand::Rng) -> Vec<(usize, usize)> {
    let blocks = stat_block_count(n);
    let width = n / blocks;
    let widths: Vec<usize> = (0..blocks)
        .map(|k| if k + 1 == blocks { n - width * (blocks - 1) } else { width })
        .collect();
    // Uniform over ordered non-overlapping placements: pick the B gap markers
    // among slack + B slots (stars and bars).
    let slack = 3 * n - n;
    let mut markers = rand::seq::index::sample(rng, slack + blocks, blocks).into_vec();
    markers.sort_unstable();
    let mut offset = 0;
    markers
        .iter()
        .zip(&widths)
        .enumerate()
        .map(|(k, (&c, &w))| {
            let start = c - k + offset;
            offset += w;
            (start, w)
        })
        .collect()
}

/// Builds the matrix described by `spec`, columns normalized.
pub fn build(spec: &MatrixSpec) -> Result<SensingMatrix> {
    spec.validate()?;
    let (m, n) = (spec.n_rows, spec.n_cols);
    let mut rng = rng_from_seed(spec.seed);
    let raw = match spec.kind {
        MatrixKind::FConsecBegin => dft_rows(n, 0..m),
        MatrixKind::FConsecutive => {
            let shift = rng.random_range(1..=n - m);
            dft_rows(n, shift - 1..shift - 1 + m)
        }
        MatrixKind::FRand => {
            let mut rows = rand::seq::index::sample(&mut rng, n, m).into_vec();
            rows.sort_unstable();
            dft_rows(n, rows)
        }
        MatrixKind::FnXStatBlocks => {
            let order = 3 * n;
            let shift = rng.random_range(1..=order - m);
            let rows: Vec<usize> = (shift - 1..shift - 1 + m).collect();
            let cols: Vec<usize> = stat_block_layout(n, &mut rng)
                .into_iter()
                .flat_map(|(start, w)| start..start + w)
                .collect();
            dft_block(order, &rows, &cols)
        }
        MatrixKind::RGauss => {
            let scale = std::f64::consts::FRAC_1_SQRT_2;
            let mut entries = CMatrix::zeros(m, n);
            for j in 0..n {
                for i in 0..m {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    entries[(i, j)] = C64::new(re * scale, im * scale);
                }
            }
            entries
        }
        MatrixKind::XiInflated => {
            let width = 2 * spec.inflation_d + 1;
            // Blocks cycle through the M columns of F_M when N > M (2d + 1).
            CMatrix::from_fn(m, n, |r, c| unit_root(m, (r * ((c / width) % m)) as u64))
        }
    };
    Ok(SensingMatrix {
        entries: column_normalize(raw)?,
        spec: Some(*spec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::column_correlation;
    use proptest::prelude::*;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn dft_small_orders() {
        let f1 = dft_matrix(1);
        assert_eq!(f1.shape(), (1, 1));
        assert!(close(f1[(0, 0)], C64::new(1.0, 0.0)));

        let f2 = dft_matrix(2);
        let one = C64::new(1.0, 0.0);
        assert!(close(f2[(0, 0)], one) && close(f2[(0, 1)], one) && close(f2[(1, 0)], one));
        assert!(close(f2[(1, 1)], -one));

        // 1-indexed entry (2, 2) of F_4 is exp(-2 pi i / 4) = -i.
        assert!(close(dft_matrix(4)[(1, 1)], C64::new(0.0, -1.0)));
    }

    #[test]
    fn normalize_examples() {
        let id = CMatrix::identity(3, 3);
        assert_eq!(column_normalize(id.clone()).unwrap(), id);

        let col = CMatrix::from_column_slice(2, 1, &[C64::new(3.0, 0.0), C64::new(4.0, 0.0)]);
        let out = column_normalize(col).unwrap();
        assert!(close(out[(0, 0)], C64::new(0.6, 0.0)));
        assert!(close(out[(1, 0)], C64::new(0.8, 0.0)));
    }

    #[test]
    fn normalize_rejects_zero_column() {
        let mut m = CMatrix::identity(3, 3);
        m.column_mut(1).fill(C64::new(0.0, 0.0));
        assert!(matches!(column_normalize(m), Err(Error::ZeroColumn { column: 2 })));
    }

    #[test]
    fn full_dft_is_unitary() {
        let phi = build(&MatrixSpec::new(MatrixKind::FConsecBegin, 16, 16)).unwrap();
        let gram = phi.entries().adjoint() * phi.entries();
        let diff = (gram - CMatrix::identity(16, 16)).norm();
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn psi_adjacent_correlation_matches_dirichlet_kernel() {
        let phi = build(&MatrixSpec::new(MatrixKind::FConsecBegin, 24, 128)).unwrap();
        let (m, n, f) = (24.0, 128.0, 1.0);
        let dirichlet = ((PI * m * f / n).sin() / (PI * f / n).sin()).abs() / m;
        let mu = column_correlation(&phi, 1, 2).unwrap();
        assert!((mu - dirichlet).abs() < 1e-12);
        assert!((mu - 0.9432).abs() < 1e-4);
    }

    #[test]
    fn xi_blocks_are_copies() {
        let spec = MatrixSpec::new(MatrixKind::XiInflated, 4, 12).with_inflation(1);
        let xi = build(&spec).unwrap();
        assert_eq!(xi.entries().column(0), xi.entries().column(1));
        assert_eq!(xi.entries().column(0), xi.entries().column(2));
        assert!((column_correlation(&xi, 1, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!(column_correlation(&xi, 1, 4).unwrap() < 1e-12);
    }

    #[test]
    fn xi_correlation_structure() {
        for d in 0..3 {
            let m = 5;
            let n = m * (2 * d + 1);
            let xi = build(&MatrixSpec::new(MatrixKind::XiInflated, m, n).with_inflation(d)).unwrap();
            let w = 2 * d + 1;
            for i in 1..=n {
                for j in 1..=n {
                    let mu = column_correlation(&xi, i, j).unwrap();
                    if (i - 1) / w == (j - 1) / w {
                        assert!((mu - 1.0).abs() < 1e-9);
                    }
                    if i.abs_diff(j) > 2 * d {
                        assert!(mu < 1e-9, "d={d} i={i} j={j} mu={mu}");
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(build(&MatrixSpec::new(MatrixKind::FRand, 9, 8)).is_err());
        assert!(build(&MatrixSpec::new(MatrixKind::FConsecutive, 8, 8)).is_err());
        assert!(build(&MatrixSpec::new(MatrixKind::RGauss, 0, 8)).is_err());
        // F_consecBegin with M = N is fine.
        assert!(build(&MatrixSpec::new(MatrixKind::FConsecBegin, 8, 8)).is_ok());
    }

    #[test]
    fn consecutive_shift_invariance() {
        for kind in [MatrixKind::FConsecBegin, MatrixKind::FConsecutive] {
            let phi = build(&MatrixSpec::new(kind, 6, 20).with_seed(3)).unwrap();
            for f in 0..20 {
                let reference = column_correlation(&phi, 1, 1 + f).unwrap();
                for j in 1..=20 - f {
                    let mu = column_correlation(&phi, j, j + f).unwrap();
                    assert!((mu - reference).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn stat_blocks_layout_is_disjoint_and_in_range() {
        for seed in 0..50 {
            let n = 40;
            let mut rng = rng_from_seed(seed);
            let layout = stat_block_layout(n, &mut rng);
            assert_eq!(layout.len(), stat_block_count(n));
            assert_eq!(layout.iter().map(|b| b.1).sum::<usize>(), n);
            for pair in layout.windows(2) {
                assert!(pair[0].0 + pair[0].1 <= pair[1].0);
            }
            let last = layout.last().unwrap();
            assert!(last.0 + last.1 <= 3 * n);
        }
        assert_eq!(stat_block_count(1024), 30);
        assert_eq!(stat_block_count(2), 1);
    }

    #[test]
    fn spec_key_values_roundtrip() {
        let spec = MatrixSpec::new(MatrixKind::XiInflated, 4, 12).with_seed(99).with_inflation(1);
        let text = spec.to_key_values();
        let pairs = text.lines().map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.trim(), v.trim())
        });
        assert_eq!(MatrixSpec::from_key_values(pairs, None).unwrap(), spec);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("F_consecBegin".parse::<MatrixKind>().unwrap(), MatrixKind::FConsecBegin);
        assert_eq!("F_nXStatBlocks".parse::<MatrixKind>().unwrap(), MatrixKind::FnXStatBlocks);
        assert_eq!("r_gauss".parse::<MatrixKind>().unwrap(), MatrixKind::RGauss);
        assert!("nope".parse::<MatrixKind>().is_err());
        for kind in MatrixKind::ALL {
            assert_eq!(kind.name().parse::<MatrixKind>().unwrap(), kind);
        }
    }

    fn arb_spec() -> impl Strategy<Value = MatrixSpec> {
        (0..6usize, 1..10usize, 1..30usize, any::<u64>(), 0..3usize).prop_map(
            |(k, m, extra, seed, infl)| MatrixSpec {
                kind: MatrixKind::ALL[k],
                n_rows: m,
                n_cols: m + extra,
                seed,
                inflation_d: infl,
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn built_columns_have_unit_norm(spec in arb_spec()) {
            let phi = build(&spec).unwrap();
            prop_assert_eq!(phi.entries().shape(), (spec.n_rows, spec.n_cols));
            for col in phi.entries().column_iter() {
                prop_assert!((col.norm() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn build_is_deterministic(spec in arb_spec()) {
            prop_assert_eq!(build(&spec).unwrap(), build(&spec).unwrap());
        }
    }
}
