//! CSV emission and parse-back.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing a
//! file reproduces every value bit for bit. Undefined values are `NaN`, the
//! noiseless SNR is `inf`.

use std::fs;
use std::path::Path;

use super::config::{format_snr, Algorithm};
use super::sweep::{RatioRow, SweepResult};
use crate::coherence::{CorrelationTable, GuaranteeReport};
use crate::error::{Error, Result};
use crate::matrices::{build, MatrixSpec};

pub const SWEEP_HEADER: [&str; 11] = [
    "matrix",
    "algorithm",
    "n",
    "m",
    "s",
    "d",
    "snr_db",
    "trials",
    "median_rho_d",
    "median_rho_2",
    "median_recovered",
];

pub const RATIO_HEADER: [&str; 9] = [
    "n",
    "m",
    "s",
    "d",
    "snr_db",
    "numerator_rho_d",
    "denominator_rho_d",
    "ratio",
    "zero_denominator",
];

pub const ANALYZE_HEADER: [&str; 5] = ["d", "correlation", "mu_d", "coherence", "welch"];

pub const GUARANTEE_HEADER: [&str; 7] = ["d", "mu_d", "welch", "mu_c_d_2s", "thm2", "cor_mu_d", "cor_cum"];

/// One data row of a sweep CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub matrix: String,
    pub algorithm: Algorithm,
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub d: usize,
    pub snr_db: f64,
    pub trials: usize,
    pub median_rho_d: f64,
    pub median_rho_2: f64,
    pub median_recovered: f64,
}

impl SweepRow {
    /// Bitwise equality, so `NaN` fields compare equal.
    pub fn same_bits(&self, other: &SweepRow) -> bool {
        let bits = |r: &SweepRow| {
            [r.snr_db, r.median_rho_d, r.median_rho_2, r.median_recovered].map(f64::to_bits)
        };
        (&self.matrix, self.algorithm, self.n, self.m, self.s, self.d, self.trials)
            == (&other.matrix, other.algorithm, other.n, other.m, other.s, other.d, other.trials)
            && bits(self) == bits(other)
    }
}

/// Rows in header-key order.
pub fn sweep_rows(result: &SweepResult) -> Vec<SweepRow> {
    let mut rows: Vec<SweepRow> = result
        .points
        .iter()
        .map(|p| SweepRow {
            matrix: p.matrix.clone(),
            algorithm: result.algorithm,
            n: result.n,
            m: result.m,
            s: result.s,
            d: p.d,
            snr_db: p.snr_db,
            trials: p.trials,
            median_rho_d: p.median_rho_d,
            median_rho_2: p.median_rho_2,
            median_recovered: p.median_recovered,
        })
        .collect();
    rows.sort_by(|a, b| {
        (&a.matrix, a.algorithm.name(), a.n, a.m, a.s, a.d)
            .cmp(&(&b.matrix, b.algorithm.name(), b.n, b.m, b.s, b.d))
            .then(a.snr_db.total_cmp(&b.snr_db))
    });
    rows
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format_snr(v)
    }
}

fn to_csv<const K: usize>(header: [&str; K], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 fields")
}

pub fn sweep_csv(result: &SweepResult) -> String {
    to_csv(
        SWEEP_HEADER,
        sweep_rows(result).into_iter().map(|r| {
            vec![
                r.matrix,
                r.algorithm.to_string(),
                r.n.to_string(),
                r.m.to_string(),
                r.s.to_string(),
                r.d.to_string(),
                num(r.snr_db),
                r.trials.to_string(),
                num(r.median_rho_d),
                num(r.median_rho_2),
                num(r.median_recovered),
            ]
        }),
    )
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes [`sweep_csv`] to `path`.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    write_file(path, &sweep_csv(result))
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize, line: usize) -> Result<T> {
    let raw = rec.get(k).unwrap_or("");
    raw.parse().map_err(|_| Error::Config {
        line,
        message: format!("bad value '{raw}' in column {}", SWEEP_HEADER[k]),
    })
}

/// Parses a sweep CSV produced by [`sweep_csv`].
pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Config { line: 1, message: e.to_string() })?;
    if header.iter().ne(SWEEP_HEADER) {
        return Err(Error::Config { line: 1, message: "unexpected header".into() });
    }
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Config { line, message: e.to_string() })?;
        rows.push(SweepRow {
            matrix: rec[0].to_string(),
            algorithm: rec[1].parse().map_err(|e: Error| Error::Config { line, message: e.to_string() })?,
            n: parse_field(&rec, 2, line)?,
            m: parse_field(&rec, 3, line)?,
            s: parse_field(&rec, 4, line)?,
            d: parse_field(&rec, 5, line)?,
            snr_db: parse_field(&rec, 6, line)?,
            trials: parse_field(&rec, 7, line)?,
            median_rho_d: parse_field(&rec, 8, line)?,
            median_rho_2: parse_field(&rec, 9, line)?,
            median_recovered: parse_field(&rec, 10, line)?,
        });
    }
    Ok(rows)
}

pub fn ratio_csv(rows: &[RatioRow]) -> String {
    to_csv(
        RATIO_HEADER,
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.m.to_string(),
                r.s.to_string(),
                r.d.to_string(),
                num(r.snr_db),
                num(r.numerator),
                num(r.denominator),
                num(r.ratio.unwrap_or(f64::NAN)),
                u8::from(r.ratio.is_none()).to_string(),
            ]
        }),
    )
}

/// Correlation profile `mu(1, 1 + d)`, `mu_d` envelope, coherence and Welch
/// bound for `d = 0..=d_max` (capped at `N - 1`). `mu_d` is `NaN` where no
/// pair is separated by more than `d`.
pub fn analyze_matrix(spec: &MatrixSpec, d_max: usize) -> Result<String> {
    let table = CorrelationTable::new(&build(spec)?)?;
    let report = table.report();
    let n = table.n_cols();
    let rows = (0..=d_max.min(n - 1)).map(|d| {
        let mu_d = if d < n / 2 { report.mu_d_profile[d] } else { f64::NAN };
        vec![
            d.to_string(),
            num(report.correlation_profile[d]),
            num(mu_d),
            num(report.mu),
            num(report.welch),
        ]
    });
    Ok(to_csv(ANALYZE_HEADER, rows))
}

pub fn guarantee_csv(reports: &[GuaranteeReport]) -> String {
    let flag = |b: bool| u8::from(b).to_string();
    to_csv(
        GUARANTEE_HEADER,
        reports.iter().map(|r| {
            vec![
                r.d.to_string(),
                num(r.mu_d),
                num(r.welch),
                num(r.mu_c_d_2s),
                flag(r.thm2_holds),
                flag(r.corollary_mu_d_holds),
                flag(r.corollary_cumulative_holds),
            ]
        }),
    )
}

/// Guarantee reports for every `d` in `d_min..=d_max` where all measures are
/// defined, plus the admissible `d` values among them.
pub fn check_guarantee(spec: &MatrixSpec, s: usize, d_min: usize, d_max: usize) -> Result<(Vec<GuaranteeReport>, Vec<usize>)> {
    if s == 0 {
        return Err(Error::InvalidArgument("sparsity must be at least 1".into()));
    }
    let table = CorrelationTable::new(&build(spec)?)?;
    let reports: Vec<GuaranteeReport> = (d_min..=d_max.min(table.n_cols().saturating_sub(1)))
        .filter_map(|d| table.check_theorem2(d, s).ok())
        .collect();
    let admissible = reports
        .iter()
        .filter(|r| r.corollary_mu_d_holds || r.corollary_cumulative_holds)
        .map(|r| r.d)
        .collect();
    Ok((reports, admissible))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{ExperimentConfig, Metric};
    use crate::harness::sweep::{ratio_table, run_sweep};
    use crate::matrices::MatrixKind;

    fn sweep() -> SweepResult {
        run_sweep(&ExperimentConfig {
            matrix_specs: vec![
                MatrixSpec::new(MatrixKind::FRand, 8, 64).with_seed(2),
                MatrixSpec::new(MatrixKind::FConsecutive, 8, 64).with_seed(2),
            ],
            n: 64,
            m: 8,
            s: 2,
            d_values: vec![3, 0],
            snr_db_values: vec![f64::INFINITY, 5.0],
            trials: 4,
            master_seed: 1,
            algorithm: Algorithm::Dtomp,
            spread: None,
            metric: Metric::RhoD,
        })
        .unwrap()
    }

    #[test]
    fn header_and_order() {
        let text = sweep_csv(&sweep());
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "matrix,algorithm,n,m,s,d,snr_db,trials,median_rho_d,median_rho_2,median_recovered"
        );
        let keys: Vec<(String, String, String)> = lines
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (f[0].to_string(), f[5].to_string(), f[6].to_string())
            })
            .collect();
        assert_eq!(keys.len(), 8);
        assert_eq!(keys[0], ("FConsecutive".into(), "0".into(), "5".into()));
        assert_eq!(keys[1], ("FConsecutive".into(), "0".into(), "inf".into()));
        assert_eq!(keys[4].0, "FRand");
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let mut s = sweep();
        s.points.clear();
        assert_eq!(sweep_csv(&s), format!("{}\n", SWEEP_HEADER.join(",")));
    }

    #[test]
    fn parse_back_reproduces_rows() {
        let s = sweep();
        let parsed = parse_sweep_csv(&sweep_csv(&s)).unwrap();
        let rows = sweep_rows(&s);
        assert_eq!(parsed.len(), rows.len());
        assert!(parsed.iter().zip(&rows).all(|(a, b)| a.same_bits(b)));
        assert!(parsed.iter().all(|r| r.median_rho_2.is_nan()));
    }

    #[test]
    fn emit_is_byte_identical_and_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        emit_csv(&sweep(), &a).unwrap();
        emit_csv(&sweep(), &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        let bad = dir.path().join("missing").join("x.csv");
        let err = emit_csv(&sweep(), &bad).unwrap_err();
        assert!(err.to_string().contains("missing"));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_sweep_csv("a,b\n1,2\n").is_err());
        let bad = format!("{}\nx,omp,1,1,1,1,inf,1,oops,NaN,1\n", SWEEP_HEADER.join(","));
        assert!(matches!(parse_sweep_csv(&bad), Err(Error::Config { line: 2, .. })));
    }

    #[test]
    fn ratio_csv_flags_zero_denominator() {
        let s = sweep();
        let mut a = s.clone();
        a.points.retain(|p| p.matrix == "FRand");
        let mut b = a.clone();
        b.points.iter_mut().for_each(|p| p.median_rho_d = 0.0);
        let text = ratio_csv(&ratio_table(&a, &b).unwrap());
        assert!(text.lines().skip(1).all(|l| l.ends_with(",NaN,1")));
    }

    #[test]
    fn analyze_unitary_dft_profile_is_indicator() {
        let text = analyze_matrix(&MatrixSpec::new(MatrixKind::FConsecBegin, 8, 8), 20).unwrap();
        let rows: Vec<Vec<f64>> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 8);
        for (f, row) in rows.iter().enumerate() {
            let expect = if f == 0 { 1.0 } else { 0.0 };
            assert!((row[1] - expect).abs() < 1e-12);
        }
        assert_eq!(rows[0][4], 0.0);
        assert!(rows[4][2].is_nan());
    }

    #[test]
    fn analyze_xi_profile_is_block_indicator() {
        let spec = MatrixSpec::new(MatrixKind::XiInflated, 4, 12).with_inflation(1);
        let text = analyze_matrix(&spec, 11).unwrap();
        for (f, line) in text.lines().skip(1).enumerate() {
            let corr: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            let expect = if f < 3 { 1.0 } else { 0.0 };
            assert!((corr - expect).abs() < 1e-12, "f={f}");
        }
    }

    #[test]
    fn guarantee_rows_and_admissible_set() {
        let spec = MatrixSpec::new(MatrixKind::RGauss, 6, 20).with_seed(1);
        let (reports, admissible) = check_guarantee(&spec, 1, 0, 30).unwrap();
        assert!(reports.iter().all(|r| r.d < 10));
        let text = guarantee_csv(&reports);
        assert_eq!(text.lines().next().unwrap(), "d,mu_d,welch,mu_c_d_2s,thm2,cor_mu_d,cor_cum");
        assert_eq!(text.lines().count(), reports.len() + 1);
        for d in admissible {
            let r = reports.iter().find(|r| r.d == d).unwrap();
            assert!(r.corollary_mu_d_holds || r.corollary_cumulative_holds);
        }
    }
}
