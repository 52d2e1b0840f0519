//! Monte-Carlo trials, sweeps and median aggregation.
//!
//! Seeds are derived from positions, never from execution order:
//!
//! * point hash `h = fnv1a("n=..;m=..;s=..;d=..;snr=<bits>")`, independent of
//!   the matrix so every matrix of a sweep sees the same signals and noise;
//! * matrix seed `mix(spec.seed, h)`, one matrix per grid point;
//! * trial seed `mix(master_seed, h, trial_index)`, with signal seed
//!   `mix(trial_seed, 1)` and noise seed `mix(trial_seed, 2)`.

use rayon::prelude::*;

use super::config::{matrix_label, Algorithm, ExperimentConfig};
use crate::error::{Error, Result};
use crate::matrices::{build, MatrixKind, MatrixSpec, SensingMatrix, C64};
use crate::metrics::{recovered_count, rho_2, rho_d, SupportSet};
use crate::recovery::{
    block_layout, coarse_grid_measure, coarse_grid_recover, ds_measure, ds_reconstruct, dtomp, largest_entries,
    omp, sd_measure, sd_reconstruct, upsample, CoarseRows,
};
use crate::seeding::{fnv1a, mix};
use crate::signals::{generate_signal, measure, NoiseSpec, SparseSignal};

/// Label used when a baseline runs without any matrix section.
pub const NO_MATRIX_LABEL: &str = "none";

/// One `(matrix, d, snr)` cell of a sweep. `matrix` indexes `matrix_specs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub matrix: Option<usize>,
    pub d: usize,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub matrix: String,
    pub matrix_kind: Option<MatrixKind>,
    pub d: usize,
    pub snr_db: f64,
    /// Zero for failed trials.
    pub rho_d: f64,
    /// `NaN` when not requested or undefined.
    pub rho_2: f64,
    pub recovered_count: usize,
    pub seed_used: u64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub matrix: String,
    pub d: usize,
    pub snr_db: f64,
    pub trials: usize,
    pub failed: usize,
    pub median_rho_d: f64,
    /// Median over trials with a defined value; `NaN` if there are none.
    pub median_rho_2: f64,
    pub median_recovered: f64,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub algorithm: Algorithm,
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub points: Vec<SweepPoint>,
}

/// All grid points, matrices outermost, then `d`, then SNR.
pub fn grid_points(config: &ExperimentConfig) -> Vec<GridPoint> {
    let matrices: Vec<Option<usize>> = if config.matrix_specs.is_empty() {
        vec![None]
    } else {
        (0..config.matrix_specs.len()).map(Some).collect()
    };
    let mut out = Vec::new();
    for &matrix in &matrices {
        for &d in &config.d_values {
            for &snr_db in &config.snr_db_values {
                out.push(GridPoint { matrix, d, snr_db });
            }
        }
    }
    out
}

pub fn point_hash(config: &ExperimentConfig, d: usize, snr_db: f64) -> u64 {
    let key = format!(
        "n={};m={};s={};d={};snr={:016x}",
        config.n,
        config.m,
        config.s,
        d,
        snr_db.to_bits()
    );
    fnv1a(key.as_bytes())
}

pub fn trial_seed(config: &ExperimentConfig, point: &GridPoint, trial_index: usize) -> u64 {
    mix(&[config.master_seed, point_hash(config, point.d, point.snr_db), trial_index as u64])
}

/// Spec with its seed replaced by the per-point matrix seed.
pub fn point_matrix_spec(config: &ExperimentConfig, point: &GridPoint) -> Option<MatrixSpec> {
    let spec = config.matrix_specs.get(point.matrix?)?;
    Some(spec.with_seed(mix(&[spec.seed, point_hash(config, point.d, point.snr_db)])))
}

struct Prepared {
    point: GridPoint,
    label: String,
    spec: Option<MatrixSpec>,
    matrix: Option<SensingMatrix>,
}

fn prepare(config: &ExperimentConfig, point: GridPoint) -> Result<Prepared> {
    let spec = point_matrix_spec(config, &point);
    let needs_matrix = matches!(config.algorithm, Algorithm::Dtomp | Algorithm::Omp);
    let matrix = match (&spec, needs_matrix) {
        (Some(spec), true) => Some(build(spec)?),
        (None, true) => return Err(Error::InvalidArgument("algorithm needs a matrix".into())),
        _ => None,
    };
    Ok(Prepared {
        point,
        label: spec.as_ref().map_or_else(|| NO_MATRIX_LABEL.to_string(), matrix_label),
        spec,
        matrix,
    })
}

/// Runs a single trial, building the grid point's matrix first.
pub fn run_trial(config: &ExperimentConfig, point: &GridPoint, trial_index: usize) -> Result<TrialRecord> {
    config.validate()?;
    let prepared = prepare(config, *point)?;
    Ok(trial_on(config, &prepared, trial_index))
}

fn trial_on(config: &ExperimentConfig, prepared: &Prepared, trial_index: usize) -> TrialRecord {
    let point = prepared.point;
    let seed = trial_seed(config, &point, trial_index);
    let mut record = TrialRecord {
        trial_index,
        matrix: prepared.label.clone(),
        matrix_kind: prepared.spec.map(|s| s.kind),
        d: point.d,
        snr_db: point.snr_db,
        rho_d: 0.0,
        rho_2: f64::NAN,
        recovered_count: 0,
        seed_used: seed,
        failure: None,
    };
    match evaluate(config, prepared, seed) {
        Ok(outcome) => {
            record.rho_d = outcome.rho_d;
            record.rho_2 = outcome.rho_2;
            record.recovered_count = outcome.recovered_count;
        }
        Err(e) => record.failure = Some(e.to_string()),
    }
    record
}

/// Everything one trial produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub signal: SparseSignal,
    /// Length-`N` reconstruction.
    pub estimate: Vec<C64>,
    /// Recovered support on the length-`N` grid.
    pub support: SupportSet,
    pub rho_d: f64,
    /// `NaN` when not requested or undefined.
    pub rho_2: f64,
    pub recovered_count: usize,
}

/// Runs one trial and returns the signal and reconstruction along with the metrics.
pub fn trial_outcome(config: &ExperimentConfig, point: &GridPoint, trial_index: usize) -> Result<TrialOutcome> {
    config.validate()?;
    let prepared = prepare(config, *point)?;
    evaluate(config, &prepared, trial_seed(config, point, trial_index))
}

fn evaluate(config: &ExperimentConfig, prepared: &Prepared, seed: u64) -> Result<TrialOutcome> {
    let (n, m, s, d) = (config.n, config.m, config.s, prepared.point.d);
    let x = generate_signal(n, s, mix(&[seed, 1]), config.spread)?;
    let noise = if prepared.point.snr_db == f64::INFINITY {
        NoiseSpec::noiseless()
    } else {
        NoiseSpec::new(prepared.point.snr_db, mix(&[seed, 2]))
    };
    let (estimate, gamma): (Vec<C64>, SupportSet) = match config.algorithm {
        Algorithm::Dtomp | Algorithm::Omp => {
            let phi = prepared.matrix.as_ref().expect("prepared with a matrix");
            let y = measure(phi, &x, &noise)?;
            let r = if config.algorithm == Algorithm::Dtomp {
                dtomp(phi, &y, s, d)?
            } else {
                omp(phi, &y, s)?
            };
            (r.estimate, r.support)
        }
        Algorithm::CoarseGrid => {
            let spec = prepared.spec.as_ref();
            let rows = match spec.map(|s| s.kind) {
                Some(MatrixKind::FConsecBegin | MatrixKind::FConsecutive) => CoarseRows::ConsecBegin,
                _ => CoarseRows::Random(spec.map_or(seed, |s| s.seed)),
            };
            let y = coarse_grid_measure(x.values(), m, d, rows, &noise)?;
            let r = coarse_grid_recover(&y, m, n, d, s, rows)?;
            let layout = block_layout(n, r.estimate.len())?;
            let centers = r.support.iter().map(|k| {
                let (start, len) = layout[k - 1];
                start + (len - 1) / 2
            });
            (upsample(&r.estimate, n)?, SupportSet::from_zero_based(centers, n)?)
        }
        Algorithm::Ds => {
            let est = ds_reconstruct(&ds_measure(x.values(), m, &noise)?, n)?;
            let gamma = largest_entries(&est, s);
            (est, gamma)
        }
        Algorithm::Sd => {
            let est = sd_reconstruct(&sd_measure(x.values(), m, &noise)?, n)?;
            let gamma = largest_entries(&est, s);
            (est, gamma)
        }
    };
    let rd = rho_d(x.support(), &gamma, d)?;
    let r2 = if config.metric.wants_rho_2() {
        rho_2(&x, &estimate, d).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    Ok(TrialOutcome {
        recovered_count: recovered_count(x.support(), &gamma, d),
        signal: x,
        estimate,
        support: gamma,
        rho_d: rd,
        rho_2: r2,
    })
}

/// Median with the two middle values averaged for even counts; `NaN` if empty.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

fn aggregate(prepared: &Prepared, records: Vec<TrialRecord>) -> SweepPoint {
    let rho_d: Vec<f64> = records.iter().map(|r| r.rho_d).collect();
    let rho_2: Vec<f64> = records.iter().map(|r| r.rho_2).filter(|v| !v.is_nan()).collect();
    let counts: Vec<f64> = records.iter().map(|r| r.recovered_count as f64).collect();
    SweepPoint {
        matrix: prepared.label.clone(),
        d: prepared.point.d,
        snr_db: prepared.point.snr_db,
        trials: records.len(),
        failed: records.iter().filter(|r| r.failure.is_some()).count(),
        median_rho_d: median(&rho_d),
        median_rho_2: median(&rho_2),
        median_recovered: median(&counts),
        records,
    }
}

/// Evaluates every grid point and trial on the global rayon pool.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let prepared: Vec<Prepared> = grid_points(config)
        .into_par_iter()
        .map(|p| prepare(config, p))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..prepared.len())
        .flat_map(|p| (0..config.trials).map(move |t| (p, t)))
        .collect();
    let mut records: Vec<TrialRecord> = jobs
        .into_par_iter()
        .map(|(p, t)| trial_on(config, &prepared[p], t))
        .collect();
    let mut points = Vec::with_capacity(prepared.len());
    for prep in prepared.iter().rev() {
        let chunk = records.split_off(records.len() - config.trials);
        points.push(aggregate(prep, chunk));
    }
    points.reverse();
    Ok(SweepResult {
        algorithm: config.algorithm,
        n: config.n,
        m: config.m,
        s: config.s,
        points,
    })
}

/// [`run_sweep`] on a dedicated pool of `threads` workers.
pub fn run_sweep_with_threads(config: &ExperimentConfig, threads: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep(config))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub d: usize,
    pub snr_db: f64,
    pub numerator: f64,
    pub denominator: f64,
    /// `None` when the denominator median is zero.
    pub ratio: Option<f64>,
}

type RatioKey = (usize, usize, usize, usize, u64);

fn keyed<'a>(sweep: &'a SweepResult, which: &str) -> Result<Vec<(RatioKey, &'a SweepPoint)>> {
    let mut out: Vec<(RatioKey, &SweepPoint)> = sweep
        .points
        .iter()
        .map(|p| ((sweep.n, sweep.m, sweep.s, p.d, p.snr_db.to_bits()), p))
        .collect();
    out.sort_by(|a, b| a.1.d.cmp(&b.1.d).then(a.1.snr_db.total_cmp(&b.1.snr_db)));
    if out.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::GridMismatch(format!("{which} sweep has several matrices per grid point")));
    }
    Ok(out)
}

/// Elementwise ratio of median `rho_d` between two sweeps over the same grid.
pub fn ratio_table(numerator: &SweepResult, denominator: &SweepResult) -> Result<Vec<RatioRow>> {
    let x = keyed(numerator, "numerator")?;
    let y = keyed(denominator, "denominator")?;
    if x.len() != y.len() || x.iter().zip(&y).any(|(a, b)| a.0 != b.0) {
        return Err(Error::GridMismatch("grid points differ".into()));
    }
    Ok(x
        .iter()
        .zip(&y)
        .map(|((key, a), (_, b))| RatioRow {
            n: key.0,
            m: key.1,
            s: key.2,
            d: key.3,
            snr_db: a.snr_db,
            numerator: a.median_rho_d,
            denominator: b.median_rho_d,
            ratio: (b.median_rho_d != 0.0).then(|| a.median_rho_d / b.median_rho_d),
        })
        .collect())
}
