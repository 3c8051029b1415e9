//! Experiment log CSV format.
//!
//! One row per controller tick. Numbers are serialized with 17 significant
//! digits so a parsed value is bit-identical to the written one, which makes
//! offline estimator replays exact.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::dynamics::Torque;
use crate::kinematics::JointVec;
use crate::regressor::ThetaVec;
use crate::sim::LogRecord;

/// The exact header row of a log file.
pub const CSV_HEADER: &str = "t,q0,q1,q2,q3,qd0,qd1,qd2,qd3,qdd0,qdd1,qdd2,qdd3,\
qref0,qref1,qref2,qref3,tau0,tau1,tau2,tau3,th0,th1,th2,th3,th4,theta_err_sq,frozen";

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("i/o error reading log: {0}")]
    Io(#[from] io::Error),
    #[error("log schema mismatch: missing column `{0}`")]
    MissingColumn(String),
    #[error("log schema mismatch: unexpected column `{0}`")]
    UnexpectedColumn(String),
    #[error("log line {line}: {reason}")]
    BadRow { line: usize, reason: String },
}

/// 17-significant-digit scientific notation; round-trips any f64 exactly.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// The subset of a [`LogRecord`] that the CSV schema carries.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub q: JointVec,
    pub qd: JointVec,
    pub qdd: JointVec,
    pub q_ref: JointVec,
    pub tau: Torque,
    pub theta_hat: ThetaVec,
    pub theta_error_sq: f64,
    pub frozen: bool,
}

impl From<&LogRecord> for CsvRow {
    fn from(r: &LogRecord) -> Self {
        CsvRow {
            t: r.t,
            q: r.q,
            qd: r.qd,
            qdd: r.qdd,
            q_ref: r.q_ref,
            tau: r.tau,
            theta_hat: r.theta_hat,
            theta_error_sq: r.theta_error_sq,
            frozen: r.estimator_frozen,
        }
    }
}

/// Writes the log in the schema [`CSV_HEADER`] describes.
pub fn write_log<W: Write>(mut out: W, records: &[LogRecord]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    let mut fields = Vec::with_capacity(28);
    for record in records {
        fields.clear();
        fields.push(format_f64(record.t));
        for v in [&record.q, &record.qd, &record.qdd, &record.q_ref, &record.tau] {
            fields.extend(v.iter().map(|x| format_f64(*x)));
        }
        fields.extend(record.theta_hat.iter().map(|x| format_f64(*x)));
        fields.push(format_f64(record.theta_error_sq));
        fields.push(if record.estimator_frozen { "1" } else { "0" }.into());
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Reads a log produced by [`write_log`], verifying the schema and naming
/// the first missing column on a header mismatch.
pub fn read_log<R: BufRead>(input: R) -> Result<Vec<CsvRow>, CsvError> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| CsvError::MissingColumn("t".into()))??;
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    let got: Vec<&str> = header.trim_end().split(',').collect();
    for (i, want) in expected.iter().enumerate() {
        match got.get(i) {
            Some(g) if g == want => {}
            Some(g) => return Err(CsvError::UnexpectedColumn((*g).into())),
            None => return Err(CsvError::MissingColumn((*want).into())),
        }
    }
    if got.len() > expected.len() {
        return Err(CsvError::UnexpectedColumn(got[expected.len()].into()));
    }

    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 2;
        let parts: Vec<&str> = line.trim_end().split(',').collect();
        if parts.len() != expected.len() {
            return Err(CsvError::BadRow {
                line: line_no,
                reason: format!("expected {} fields, got {}", expected.len(), parts.len()),
            });
        }
        let mut cursor = parts.iter();
        let mut next_f64 = |name: &str| -> Result<f64, CsvError> {
            let raw = cursor.next().expect("length checked");
            raw.parse().map_err(|_| CsvError::BadRow {
                line: line_no,
                reason: format!("column `{name}`: not a number: `{raw}`"),
            })
        };
        let t = next_f64("t")?;
        let mut vec4 = |name: &str| -> Result<JointVec, CsvError> {
            Ok(JointVec::new(
                next_f64(name)?,
                next_f64(name)?,
                next_f64(name)?,
                next_f64(name)?,
            ))
        };
        let q = vec4("q")?;
        let qd = vec4("qd")?;
        let qdd = vec4("qdd")?;
        let q_ref = vec4("qref")?;
        let tau = vec4("tau")?;
        let theta_hat = ThetaVec::new(
            next_f64("th")?,
            next_f64("th")?,
            next_f64("th")?,
            next_f64("th")?,
            next_f64("th")?,
        );
        let theta_error_sq = next_f64("theta_err_sq")?;
        let frozen = match *cursor.next().expect("length checked") {
            "0" => false,
            "1" => true,
            other => {
                return Err(CsvError::BadRow {
                    line: line_no,
                    reason: format!("column `frozen`: expected 0 or 1, got `{other}`"),
                })
            }
        };
        rows.push(CsvRow {
            t,
            q,
            qd,
            qdd,
            q_ref,
            tau,
            theta_hat,
            theta_error_sq,
            frozen,
        });
    }
    Ok(rows)
}
