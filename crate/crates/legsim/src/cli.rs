//! Command implementations behind the `legsim` binary.
//!
//! Exit codes: 0 success, 1 usage/I-O/schema error, 2 simulation
//! instability. Nothing else.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{parse_config, ConfigError};
use crate::control::ControlLawMode;
use crate::csvlog::{read_log, write_log, CsvError};
use crate::estimator::{rls_init, rls_update, RlsConfig};
use crate::invariants::run_invariant_suite;
use crate::kinematics::RobotParams;
use crate::regressor::regressor_scaled;
use crate::sim::{run_experiment, SimError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNSTABLE: i32 = 2;

/// `--mode` flag values (kebab-case on the command line).
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ControlLawModeArg {
    Standard,
    PaperLiteral,
}

impl From<ControlLawModeArg> for ControlLawMode {
    fn from(arg: ControlLawModeArg) -> Self {
        match arg {
            ControlLawModeArg::Standard => ControlLawMode::Standard,
            ControlLawModeArg::PaperLiteral => ControlLawMode::PaperLiteral,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Sim(SimError::Unstable { .. }) => EXIT_UNSTABLE,
            _ => EXIT_ERROR,
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Flag overrides applied on top of the config file.
#[derive(Clone, Copy, Debug, Default)]
pub struct SimulateFlags {
    pub mode: Option<ControlLawModeArg>,
    pub no_adapt: bool,
    pub seed: Option<u64>,
}

/// Runs the experiment described by `config_path` and writes the log CSV.
/// Prints a summary (max tracking error, final squared parameter error) to
/// standard output.
pub fn cmd_simulate(
    config_path: &Path,
    out_path: &Path,
    flags: SimulateFlags,
) -> Result<(), CliError> {
    let mut config = parse_config(&read_file(config_path)?)?;
    if let Some(mode) = flags.mode {
        config.mode = mode.into();
    }
    if flags.no_adapt {
        config.adaptation_on = false;
    }
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    let records = run_experiment(&config)?;

    let file = fs::File::create(out_path).map_err(|source| CliError::Io {
        path: out_path.to_path_buf(),
        source,
    })?;
    write_log(std::io::BufWriter::new(file), &records).map_err(|source| CliError::Io {
        path: out_path.to_path_buf(),
        source,
    })?;

    let max_tracking_error = records
        .iter()
        .map(|r| (r.q - r.q_ref).abs().max())
        .fold(0.0, f64::max);
    let final_theta_err = records.last().map_or(0.0, |r| r.theta_error_sq);
    println!("wrote {} ({} records)", out_path.display(), records.len());
    println!("max tracking error: {max_tracking_error:.6e} rad");
    println!("final theta_error_sq: {final_theta_err:.6e}");
    if records.iter().any(|r| r.estimator_frozen) {
        let t = records
            .iter()
            .find(|r| r.estimator_frozen)
            .map(|r| r.t)
            .unwrap_or_default();
        println!("estimator froze at t = {t:.3} s");
    }
    Ok(())
}

/// Runs the invariant suite and prints the per-check table. Returns whether
/// every check passed.
pub fn cmd_check(params_config: Option<&Path>, seed: u64) -> Result<bool, CliError> {
    let params: RobotParams = match params_config {
        Some(path) => parse_config(&read_file(path)?)?.nominal_params,
        None => RobotParams::default(),
    };
    let report = run_invariant_suite(&params, seed);
    println!("{report}");
    Ok(report.all_passed())
}

/// Replays the estimator over a simulation log, recomputing the regressor
/// from the logged states and pairing each state with the torque applied
/// over the preceding interval (the online pairing). Prints the final
/// estimate and residual statistics.
pub fn cmd_identify(log_path: &Path, rls_cov: Option<f64>) -> Result<(), CliError> {
    let file = fs::File::open(log_path).map_err(|source| CliError::Io {
        path: log_path.to_path_buf(),
        source,
    })?;
    let rows = read_log(BufReader::new(file))?;
    let params = RobotParams::default();
    let config = RlsConfig {
        initial_cov_scale: rls_cov.unwrap_or(RlsConfig::default().initial_cov_scale),
        ..RlsConfig::default()
    };
    let mut state = rls_init(&config).map_err(|e| {
        CliError::Config(ConfigError::Field {
            key: "rls.initial_cov_scale".into(),
            reason: e.to_string(),
        })
    })?;

    let mut samples = 0usize;
    let mut frozen = false;
    for pair in rows.windows(2) {
        let (prev, row) = (&pair[0], &pair[1]);
        let phi = regressor_scaled(&row.q, &row.qd, &row.qdd, &params);
        match rls_update(&state, &phi, &prev.tau) {
            Ok(next) => state = next,
            Err(_) => {
                frozen = true;
                break;
            }
        }
        samples += 1;
    }

    let mut residual_sq_sum = 0.0;
    let mut final_residual = 0.0;
    for pair in rows.windows(2) {
        let (prev, row) = (&pair[0], &pair[1]);
        let phi = regressor_scaled(&row.q, &row.qd, &row.qdd, &params);
        let residual = (phi * state.theta_hat - prev.tau).norm();
        residual_sq_sum += residual * residual;
        final_residual = residual;
    }
    let rms = if samples > 0 {
        (residual_sq_sum / samples as f64).sqrt()
    } else {
        0.0
    };

    println!("replayed {samples} samples from {}", log_path.display());
    print!("theta_hat:");
    for v in state.theta_hat.iter() {
        print!(" {v:.12}");
    }
    println!();
    println!("final residual norm: {final_residual:.6e}");
    println!("rms residual: {rms:.6e}");
    if frozen {
        println!("estimator froze during replay");
    }
    Ok(())
}
