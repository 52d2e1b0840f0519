//! `tolcs`: coherence analysis, guarantee checks, single recoveries and sweeps.
//!
//! Exit codes: 0 success, 1 invalid input or config, 2 runtime or numerical failure.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tolerant_cs::harness::output::{analyze_matrix, check_guarantee, guarantee_csv, sweep_csv, write_file};
use tolerant_cs::harness::{
    run_sweep, run_sweep_with_threads, trial_outcome, Algorithm, ExperimentConfig, GridPoint, Metric,
};
use tolerant_cs::{Error, MatrixKind, MatrixSpec};

#[derive(Parser)]
#[command(name = "tolcs", version, about = "d-tolerant compressed sensing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MatrixArgs {
    /// FConsecBegin, FConsecutive, FRand, FnXStatBlocks, RGauss or XiInflated.
    #[arg(long)]
    kind: MatrixKind,
    /// Rows.
    #[arg(long)]
    m: usize,
    /// Columns.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Column repetition parameter of XiInflated.
    #[arg(long, default_value_t = 0)]
    inflation_d: usize,
}

impl MatrixArgs {
    fn spec(&self) -> Result<MatrixSpec, Error> {
        let spec = MatrixSpec::new(self.kind, self.m, self.n)
            .with_seed(self.seed)
            .with_inflation(self.inflation_d);
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Correlation profile, d-coherence envelope, coherence and Welch bound as CSV.
    Analyze {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        d_max: Option<usize>,
        /// Output path, `-` for stdout.
        #[arg(long)]
        out: PathBuf,
    },
    /// Recovery-guarantee conditions per d; prints the admissible d values.
    CheckGuarantee {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value_t = 0)]
        d_min: usize,
        #[arg(long)]
        d_max: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// One seeded recovery; prints true and recovered supports, rho_d and rho_2.
    Recover {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        d: usize,
        /// SNR in dB, `inf` for noiseless.
        #[arg(long, default_value = "inf")]
        snr_db: f64,
        /// Seed of the signal and noise draws; defaults to `--seed`.
        #[arg(long)]
        trial_seed: Option<u64>,
        #[arg(long, default_value = "dtomp")]
        algorithm: Algorithm,
        /// Generate supports whose pairwise gaps exceed this value.
        #[arg(long)]
        spread: Option<usize>,
    },
    /// Monte-Carlo sweep described by a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `trials` from the config.
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn emit(out: &Path, text: &str) -> Result<(), Error> {
    if out == Path::new("-") {
        std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io { path: "<stdout>".into(), source: e })
    } else {
        write_file(out, text)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Analyze { matrix, d_max, out } => {
            let spec = matrix.spec()?;
            emit(&out, &analyze_matrix(&spec, d_max.unwrap_or(spec.n_cols - 1))?)
        }
        Command::CheckGuarantee { matrix, s, d_min, d_max, out } => {
            let spec = matrix.spec()?;
            let (reports, admissible) = check_guarantee(&spec, s, d_min, d_max.unwrap_or(spec.n_cols - 1))?;
            emit(&out, &guarantee_csv(&reports))?;
            let list: Vec<String> = admissible.iter().map(|d| d.to_string()).collect();
            eprintln!("admissible d: {{{}}}", list.join(","));
            Ok(())
        }
        Command::Recover { matrix, s, d, snr_db, trial_seed, algorithm, spread } => {
            let spec = matrix.spec()?;
            let config = ExperimentConfig {
                matrix_specs: vec![spec],
                n: spec.n_cols,
                m: spec.n_rows,
                s,
                d_values: vec![d],
                snr_db_values: vec![snr_db],
                trials: 1,
                master_seed: trial_seed.unwrap_or(matrix.seed),
                algorithm,
                spread,
                metric: Metric::Both,
            };
            let point = GridPoint { matrix: Some(0), d, snr_db };
            let outcome = trial_outcome(&config, &point, 0)?;
            println!("true support:      {}", outcome.signal.support());
            println!("recovered support: {}", outcome.support);
            println!("rho_d: {}", outcome.rho_d);
            println!("rho_2: {}", outcome.rho_2);
            Ok(())
        }
        Command::Experiment { config, out, trials, threads } => {
            let text = fs::read_to_string(&config).map_err(|e| Error::Config {
                line: 0,
                message: format!("cannot read {}: {e}", config.display()),
            })?;
            let mut cfg = ExperimentConfig::parse(&text)?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            let sweep = match threads {
                Some(t) => run_sweep_with_threads(&cfg, t)?,
                None => run_sweep(&cfg)?,
            };
            let failed: usize = sweep.points.iter().map(|p| p.failed).sum();
            if failed > 0 {
                eprintln!("{failed} trial(s) failed and were counted as rho_d = 0");
            }
            emit(&out, &sweep_csv(&sweep))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
