//! Experiment configuration and its flat text format.
//!
//! ```text
//! # comment
//! n = 1024
//! m = 32
//! s = 16
//! d = 0, 3, 6, 9
//! snr_db = 10, inf
//! trials = 100
//! master_seed = 7
//! algorithm = omp
//! metric = both
//!
//! [matrix]
//! kind = FConsecutive
//! seed = 1
//!
//! [matrix]
//! kind = FRand
//! seed = 1
//! ```
//!
//! Top-level keys may appear anywhere before the first `[matrix]` header.
//! Matrix sections inherit `m` and `n` from the top level.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrices::{MatrixKind, MatrixSpec};

pub const DEFAULT_TRIALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Dtomp,
    Omp,
    CoarseGrid,
    Ds,
    Sd,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dtomp => "dtomp",
            Algorithm::Omp => "omp",
            Algorithm::CoarseGrid => "coarse_grid",
            Algorithm::Ds => "ds",
            Algorithm::Sd => "sd",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "dtomp" => Algorithm::Dtomp,
            "omp" => Algorithm::Omp,
            "coarse_grid" | "coarse" => Algorithm::CoarseGrid,
            "ds" => Algorithm::Ds,
            "sd" => Algorithm::Sd,
            _ => return Err(Error::InvalidArgument(format!("unknown algorithm '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    RhoD,
    Rho2,
    Both,
}

impl Metric {
    pub fn wants_rho_2(self) -> bool {
        matches!(self, Metric::Rho2 | Metric::Both)
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "rho_d" => Metric::RhoD,
            "rho_2" => Metric::Rho2,
            "both" => Metric::Both,
            _ => return Err(Error::InvalidArgument(format!("unknown metric '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub matrix_specs: Vec<MatrixSpec>,
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub d_values: Vec<usize>,
    pub snr_db_values: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub algorithm: Algorithm,
    /// Minimum gap parameter for generated supports: pairwise distances exceed it.
    pub spread: Option<usize>,
    pub metric: Metric,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.s <= self.m && self.m <= self.n) {
            return bad(format!("need s <= m <= n (s = {}, m = {}, n = {})", self.s, self.m, self.n));
        }
        if self.s == 0 {
            return bad("s must be at least 1".into());
        }
        if self.matrix_specs.is_empty() && !matches!(self.algorithm, Algorithm::Ds | Algorithm::Sd) {
            return bad("at least one [matrix] section is required".into());
        }
        for spec in &self.matrix_specs {
            spec.validate()?;
            if (spec.n_rows, spec.n_cols) != (self.m, self.n) {
                return bad(format!(
                    "matrix {} is {}x{}, experiment is {}x{}",
                    spec.kind, spec.n_rows, spec.n_cols, self.m, self.n
                ));
            }
        }
        let mut labels: Vec<String> = self.matrix_specs.iter().map(matrix_label).collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("duplicate matrix label '{}'", w[0]));
        }
        if self.snr_db_values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return bad("snr_db values must be finite or inf".into());
        }
        if self.algorithm == Algorithm::CoarseGrid {
            if let Some(&d) = self.d_values.iter().find(|&&d| d == 0 || self.m > self.n.div_ceil(d)) {
                return bad(format!("coarse_grid needs 1 <= d and m <= ceil(n / d), got d = {d}"));
            }
        }
        Ok(())
    }

    /// Parses the text format described in the module docs.
    pub fn parse(text: &str) -> Result<Self> {
        let mut top: Vec<(usize, String, String)> = Vec::new();
        let mut sections: Vec<(usize, Vec<(String, String)>)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if line.eq_ignore_ascii_case("[matrix]") {
                    sections.push((line_no, Vec::new()));
                    continue;
                }
                return Err(config_error(line_no, format!("unknown section {line}")));
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_error(line_no, format!("expected 'key = value', got '{line}'")));
            };
            let (key, value) = (key.trim().to_ascii_lowercase(), value.trim().to_string());
            match sections.last_mut() {
                Some((_, pairs)) => pairs.push((key, value)),
                None => top.push((line_no, key, value)),
            }
        }

        let mut cfg = ExperimentConfig {
            matrix_specs: Vec::new(),
            n: 0,
            m: 0,
            s: 0,
            d_values: Vec::new(),
            snr_db_values: vec![f64::INFINITY],
            trials: DEFAULT_TRIALS,
            master_seed: 0,
            algorithm: Algorithm::Dtomp,
            spread: None,
            metric: Metric::Both,
        };
        let (mut seen_n, mut seen_m, mut seen_s) = (false, false, false);
        for (line_no, key, value) in &top {
            let err = |msg: String| config_error(*line_no, msg);
            match key.as_str() {
                "n" => (cfg.n, seen_n) = (parse_num(value).map_err(err)?, true),
                "m" => (cfg.m, seen_m) = (parse_num(value).map_err(err)?, true),
                "s" => (cfg.s, seen_s) = (parse_num(value).map_err(err)?, true),
                "d" | "d_values" => cfg.d_values = parse_list(value, parse_num).map_err(err)?,
                "snr_db" | "snr_db_values" => cfg.snr_db_values = parse_list(value, parse_snr).map_err(err)?,
                "trials" => cfg.trials = parse_num(value).map_err(err)?,
                "master_seed" | "seed" => cfg.master_seed = parse_num(value).map_err(err)?,
                "algorithm" => cfg.algorithm = value.parse().map_err(|e: Error| err(e.to_string()))?,
                "metric" => cfg.metric = value.parse().map_err(|e: Error| err(e.to_string()))?,
                "spread" => {
                    cfg.spread = match value.to_ascii_lowercase().as_str() {
                        "none" | "" => None,
                        v => Some(parse_num(v).map_err(err)?),
                    }
                }
                other => return Err(err(format!("unknown key '{other}'"))),
            }
        }
        for (name, seen) in [("n", seen_n), ("m", seen_m), ("s", seen_s)] {
            if !seen {
                return Err(config_error(0, format!("missing required key '{name}'")));
            }
        }
        for (line_no, pairs) in &sections {
            let spec = MatrixSpec::from_key_values(
                pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())),
                Some((cfg.m, cfg.n)),
            )
            .map_err(|e| config_error(*line_no, e.to_string()))?;
            cfg.matrix_specs.push(spec);
        }
        cfg.validate().map_err(|e| match e {
            Error::InvalidArgument(msg) => config_error(0, msg),
            other => other,
        })?;
        Ok(cfg)
    }

    /// Text form accepted by [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let mut out = format!(
            "n = {}\nm = {}\ns = {}\nd = {}\nsnr_db = {}\ntrials = {}\nmaster_seed = {}\nalgorithm = {}\nmetric = {}\n",
            self.n,
            self.m,
            self.s,
            join(self.d_values.iter().map(|d| d.to_string()).collect()),
            join(self.snr_db_values.iter().map(|v| format_snr(*v)).collect()),
            self.trials,
            self.master_seed,
            self.algorithm,
            match self.metric {
                Metric::RhoD => "rho_d",
                Metric::Rho2 => "rho_2",
                Metric::Both => "both",
            },
        );
        if let Some(g) = self.spread {
            out.push_str(&format!("spread = {g}\n"));
        }
        for spec in &self.matrix_specs {
            out.push_str("\n[matrix]\n");
            out.push_str(&spec.to_key_values());
        }
        out
    }
}

/// Name used for a matrix in CSV output; Xi carries its inflation.
pub fn matrix_label(spec: &MatrixSpec) -> String {
    match spec.kind {
        MatrixKind::XiInflated => format!("{}_d{}", spec.kind, spec.inflation_d),
        _ => spec.kind.to_string(),
    }
}

pub(crate) fn format_snr(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        v.to_string()
    }
}

fn config_error(line: usize, message: String) -> Error {
    Error::Config { line, message }
}

fn parse_num<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value.trim().parse().map_err(|_| format!("not a non-negative integer: '{value}'"))
}

/// Decimal point only, `inf` for the noiseless case.
fn parse_snr(value: &str) -> std::result::Result<f64, String> {
    let v = value.trim();
    if v.eq_ignore_ascii_case("inf") || v.eq_ignore_ascii_case("+inf") {
        return Ok(f64::INFINITY);
    }
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("not an SNR in dB: '{value}'")),
    }
}

fn parse_list<T>(
    value: &str,
    item: impl Fn(&str) -> std::result::Result<T, String>,
) -> std::result::Result<Vec<T>, String> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| item(v.trim())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# sweep
n = 128
m = 16
s = 4
d = 0, 2,5
snr_db = 10, inf
trials = 7
master_seed = 99
algorithm = DtOMP
metric = rho_d
spread = 9

[matrix]
kind = FConsecutive
seed = 3

[Matrix]
kind = xi
inflation_d = 2
";

    #[test]
    fn parses_sample() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!((cfg.n, cfg.m, cfg.s), (128, 16, 4));
        assert_eq!(cfg.d_values, vec![0, 2, 5]);
        assert_eq!(cfg.snr_db_values, vec![10.0, f64::INFINITY]);
        assert_eq!(cfg.trials, 7);
        assert_eq!(cfg.master_seed, 99);
        assert_eq!(cfg.algorithm, Algorithm::Dtomp);
        assert_eq!(cfg.metric, Metric::RhoD);
        assert_eq!(cfg.spread, Some(9));
        assert_eq!(cfg.matrix_specs.len(), 2);
        assert_eq!(cfg.matrix_specs[0], MatrixSpec::new(MatrixKind::FConsecutive, 16, 128).with_seed(3));
        assert_eq!(cfg.matrix_specs[1].inflation_d, 2);
    }

    #[test]
    fn text_round_trip() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn reports_line_numbers() {
        let err = ExperimentConfig::parse("n = 10\nm = 4\ns = x\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }), "{err}");
        let err = ExperimentConfig::parse("n = 10\nm = 4\ns = 2\n[matrix]\nkind = nope\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 4, .. }), "{err}");
        assert!(err.is_input_error());
    }

    #[test]
    fn rejects_invalid_configs() {
        let base = "n = 64\nm = 8\ns = 2\n[matrix]\nkind = frand\n";
        assert!(ExperimentConfig::parse(base).is_ok());
        for bad in [
            "n = 64\nm = 8\ns = 9\n[matrix]\nkind = frand\n",
            "n = 64\nm = 8\ns = 2\ntrials = 0\n[matrix]\nkind = frand\n",
            "n = 64\nm = 8\ns = 2\nsnr_db = 1,-inf\n[matrix]\nkind = frand\n",
            "n = 64\nm = 8\ns = 2\nsnr_db = nan\n[matrix]\nkind = frand\n",
            "n = 64\nm = 8\ns = 2\nd = -1\n[matrix]\nkind = frand\n",
            "n = 64\nm = 8\ns = 2\nalgorithm = coarse_grid\nd = 0\n[matrix]\nkind = frand\n",
            "n = 64\nm = 8\ns = 2\n[matrix]\nkind = frand\n[matrix]\nkind = frand\nseed = 2\n",
            "n = 64\nm = 8\ns = 2\n[matrix]\nkind = frand\nm = 9\n",
            "n = 64\nm = 8\ns = 2\nbogus = 1\n[matrix]\nkind = frand\n",
            "n = 64\nm = 8\n[matrix]\nkind = frand\n",
            "n = 64\nm = 8\ns = 2\n",
            "n = 64\nm = 8\ns = 2\n[sensor]\n",
        ] {
            let err = ExperimentConfig::parse(bad).unwrap_err();
            assert!(err.is_input_error(), "{bad:?} gave {err}");
        }
    }

    #[test]
    fn empty_d_list_is_allowed() {
        let cfg = ExperimentConfig::parse("n = 64\nm = 8\ns = 2\nd =\n[matrix]\nkind = frand\n").unwrap();
        assert!(cfg.d_values.is_empty());
    }
}
