//! Sparse test signals, measurements and SNR-scaled noise.
//!
//! Draw order for [`generate_signal`] on `rng_from_seed(seed)`: the support
//! first (one uniform subset draw), then for each support index in ascending
//! order the real part and the imaginary part, both uniform on `[-50, 50]`.
//! Noise vectors draw `M` entries from `rng_from_seed(noise.seed)`, real part
//! then imaginary part, each standard normal, before rescaling.

use nalgebra::DVector;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrices::{SensingMatrix, C64};
use crate::metrics::SupportSet;
use crate::seeding::rng_from_seed;

/// Half-width of the uniform amplitude law for real and imaginary parts.
pub const AMPLITUDE_RANGE: f64 = 50.0;

/// A length-`N` complex vector together with its support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    values: Vec<C64>,
    support: SupportSet,
}

impl SparseSignal {
    /// Support is taken to be the exact nonzeros of `values`.
    pub fn from_values(values: Vec<C64>) -> Result<Self> {
        let n = values.len();
        let support = SupportSet::from_zero_based(
            values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != C64::new(0.0, 0.0))
                .map(|(i, _)| i),
            n,
        )?;
        Ok(SparseSignal { values, support })
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// `20 log10(||Phi x|| / ||e||)`; `+inf` means no noise.
    pub snr_db: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(snr_db: f64, seed: u64) -> Self {
        NoiseSpec { snr_db, seed }
    }

    pub fn noiseless() -> Self {
        NoiseSpec {
            snr_db: f64::INFINITY,
            seed: 0,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.snr_db == f64::INFINITY
    }
}

/// Largest `g`-spread set size in `1..=n`.
fn max_spread_size(n: usize, spread: usize) -> usize {
    if n == 0 {
        0
    } else {
        (n - 1) / (spread + 1) + 1
    }
}

/// Draws an `s`-sparse length-`n` signal. With `spread = Some(g)` the support
/// is uniform over all `g`-spread subsets (pairwise gaps larger than `g`).
pub fn generate_signal(n: usize, s: usize, seed: u64, spread: Option<usize>) -> Result<SparseSignal> {
    if s > n {
        return Err(Error::InvalidArgument(format!("sparsity {s} exceeds length {n}")));
    }
    let mut rng = rng_from_seed(seed);
    let positions: Vec<usize> = match spread {
        None => {
            let mut p = rand::seq::index::sample(&mut rng, n, s).into_vec();
            p.sort_unstable();
            p
        }
        Some(_) if s == 0 => Vec::new(),
        Some(g) => {
            if s > max_spread_size(n, g) {
                return Err(Error::InfeasibleSpread { n, s, spread: g });
            }
            // Sorted s-subsets of 0..n-(s-1)g are in bijection with g-spread
            // s-subsets of 0..n via c_k -> c_k + k g.
            let span = n - (s - 1) * g;
            let mut c = rand::seq::index::sample(&mut rng, span, s).into_vec();
            c.sort_unstable();
            c.iter().enumerate().map(|(k, &ck)| ck + k * g).collect()
        }
    };
    let mut values = vec![C64::new(0.0, 0.0); n];
    for &p in &positions {
        values[p] = loop {
            let re = rng.random_range(-AMPLITUDE_RANGE..=AMPLITUDE_RANGE);
            let im = rng.random_range(-AMPLITUDE_RANGE..=AMPLITUDE_RANGE);
            let v = C64::new(re, im);
            if v != C64::new(0.0, 0.0) {
                break v;
            }
        };
    }
    Ok(SparseSignal {
        values,
        support: SupportSet::from_zero_based(positions, n)?,
    })
}

/// Standard complex Gaussian direction of length `m` for `seed`, unscaled.
fn raw_noise(m: usize, seed: u64) -> Vec<C64> {
    let mut rng = rng_from_seed(seed);
    (0..m)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im)
        })
        .collect()
}

pub(crate) fn l2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Returns `clean + e` with `||e|| = ||clean|| / 10^(snr_db / 20)`.
pub fn add_noise(clean: &[C64], noise: &NoiseSpec) -> Result<Vec<C64>> {
    if noise.snr_db.is_nan() || noise.snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(format!("invalid SNR {} dB", noise.snr_db)));
    }
    if noise.is_noiseless() {
        return Ok(clean.to_vec());
    }
    let signal_norm = l2(clean);
    if signal_norm == 0.0 {
        return Err(Error::UndefinedSnr);
    }
    let e = raw_noise(clean.len(), noise.seed);
    let scale = signal_norm / (l2(&e) * 10f64.powf(noise.snr_db / 20.0));
    Ok(clean.iter().zip(&e).map(|(y, e)| y + e * scale).collect())
}

/// `y = Phi x + e`.
pub fn measure(matrix: &SensingMatrix, x: &SparseSignal, noise: &NoiseSpec) -> Result<Vec<C64>> {
    let phi = matrix.entries();
    if phi.ncols() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} columns, signal has length {}",
            phi.ncols(),
            x.len()
        )));
    }
    let mut clean = DVector::<C64>::zeros(phi.nrows());
    for j in x.support().to_zero_based() {
        clean.axpy(x.values()[j], &phi.column(j), C64::new(1.0, 0.0));
    }
    add_noise(clean.as_slice(), noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrices::{build, MatrixKind, MatrixSpec};
    use crate::metrics::is_d_spread;
    use proptest::prelude::*;

    #[test]
    fn full_support_when_s_equals_n() {
        let x = generate_signal(12, 12, 5, None).unwrap();
        assert_eq!(x.support().indices(), (1..=12).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn amplitudes_in_range() {
        let x = generate_signal(200, 50, 1, None).unwrap();
        assert_eq!(x.sparsity(), 50);
        for v in x.values() {
            assert!(v.re.abs() <= 50.0 && v.im.abs() <= 50.0);
        }
    }

    #[test]
    fn infeasible_spread_rejected() {
        // Three 5-spread indices need at least 13 positions.
        assert!(generate_signal(13, 3, 0, Some(5)).is_ok());
        assert!(matches!(
            generate_signal(12, 3, 0, Some(5)),
            Err(Error::InfeasibleSpread { .. })
        ));
        assert!(generate_signal(4, 5, 0, None).is_err());
    }

    #[test]
    fn support_is_uniform() {
        // Chi-square over 64 bins of 16 indices; 2000 draws of 16 indices.
        let (n, s, bins) = (1024, 16, 64);
        let mut counts = vec![0usize; bins];
        for seed in 0..2000 {
            for i in generate_signal(n, s, seed, None).unwrap().support().iter() {
                counts[(i - 1) / (n / bins)] += 1;
            }
        }
        let expected = 2000.0 * s as f64 / bins as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 99.9% quantile of chi-square with 63 degrees of freedom is 103.44.
        assert!(chi2 < 103.44, "chi2 = {chi2}");
    }

    #[test]
    fn spread_support_reaches_both_ends() {
        // Exact uniform sampler must be able to place spikes at 1 and at N.
        let (n, s, g) = (30, 3, 9);
        let (mut first, mut last) = (false, false);
        for seed in 0..2000 {
            let x = generate_signal(n, s, seed, Some(g)).unwrap();
            first |= x.support().contains(1);
            last |= x.support().contains(n);
        }
        assert!(first && last);
    }

    #[test]
    fn snr_scaling() {
        let phi = build(&MatrixSpec::new(MatrixKind::FRand, 16, 64).with_seed(2)).unwrap();
        let x = generate_signal(64, 4, 3, None).unwrap();
        let clean = measure(&phi, &x, &NoiseSpec::noiseless()).unwrap();
        for (snr, ratio) in [(0.0, 1.0), (20.0, 0.1)] {
            let y = measure(&phi, &x, &NoiseSpec::new(snr, 11)).unwrap();
            let e: Vec<C64> = y.iter().zip(&clean).map(|(a, b)| a - b).collect();
            assert!((l2(&e) - ratio * l2(&clean)).abs() < 1e-9 * l2(&clean));
        }
    }

    #[test]
    fn noiseless_measurement_is_exact_product() {
        let phi = build(&MatrixSpec::new(MatrixKind::RGauss, 8, 20).with_seed(4)).unwrap();
        let x = generate_signal(20, 3, 9, None).unwrap();
        let y = measure(&phi, &x, &NoiseSpec::noiseless()).unwrap();
        let dense = phi.entries() * DVector::from_column_slice(x.values());
        for (a, b) in y.iter().zip(dense.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_signal_with_finite_snr_fails() {
        let phi = build(&MatrixSpec::new(MatrixKind::FRand, 4, 8).with_seed(1)).unwrap();
        let x = SparseSignal::from_values(vec![C64::new(0.0, 0.0); 8]).unwrap();
        assert!(matches!(measure(&phi, &x, &NoiseSpec::new(10.0, 1)), Err(Error::UndefinedSnr)));
        assert!(measure(&phi, &x, &NoiseSpec::noiseless()).is_ok());
    }

    proptest! {
        #[test]
        fn spread_request_is_honoured(n in 20usize..200, d in 0usize..4, seed in any::<u64>()) {
            let g = 4 * d + 1;
            let s = (n - 1) / (g + 1) + 1;
            let s = s.min(6);
            let x = generate_signal(n, s, seed, Some(g)).unwrap();
            prop_assert_eq!(x.sparsity(), s);
            prop_assert!(is_d_spread(x.support(), g));
        }

        #[test]
        fn generation_is_deterministic(seed in any::<u64>(), spread in proptest::option::of(0usize..3)) {
            prop_assert_eq!(generate_signal(50, 5, seed, spread).unwrap(), generate_signal(50, 5, seed, spread).unwrap());
        }

        #[test]
        fn noise_direction_independent_of_snr(seed in any::<u64>(), a in -10.0f64..30.0, b in -10.0f64..30.0) {
            let clean = vec![C64::new(1.0, -2.0), C64::new(0.5, 0.0), C64::new(0.0, 3.0)];
            let ea: Vec<C64> = add_noise(&clean, &NoiseSpec::new(a, seed)).unwrap().iter().zip(&clean).map(|(y, c)| y - c).collect();
            let eb: Vec<C64> = add_noise(&clean, &NoiseSpec::new(b, seed)).unwrap().iter().zip(&clean).map(|(y, c)| y - c).collect();
            let (na, nb) = (l2(&ea), l2(&eb));
            for (u, v) in ea.iter().zip(&eb) {
                prop_assert!((u / na - v / nb).norm() < 1e-9);
            }
        }
    }
}
