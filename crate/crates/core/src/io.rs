//! CSV schemas shared by the command line front end.
//!
//! Every writer emits a header row followed by data rows with a fixed column
//! order; floats use Rust's shortest round-trip formatting.

use std::io::Write;

use crate::error::Result;
use crate::estimate::{CriticalScanResult, ReportRow, SurvivalEstimate};
use crate::genealogy::LineageEstimate;

pub const SERIES_COLUMNS: [&str; 4] = ["n", "term", "partial_sum", "tail_bound"];
pub const IDENTITY_COLUMNS: [&str; 4] = ["n", "return_prob", "neighbor_rhs", "residual"];
pub const COUPLING_COLUMNS: [&str; 10] =
    ["d", "N", "t", "reps", "v_mean", "v_stderr", "w_mean", "w_stderr", "analytic", "z_pooled"];
pub const LINEAGE_COLUMNS: [&str; 10] =
    ["N", "theta", "d", "reps", "f1_mc", "f1_analytic", "z1_mc", "z1_analytic", "f1_stderr", "z1_stderr"];
pub const TRAJECTORY_COLUMNS: [&str; 3] = ["t", "mass", "pairs"];
pub const MASS_CURVE_COLUMNS: [&str; 5] = ["t", "mass", "mass_stderr", "pairs", "pairs_stderr"];
pub const SURVIVAL_COLUMNS: [&str; 9] =
    ["d", "N", "lambda", "reps", "successes", "rho_hat", "ci_low", "ci_high", "truncated"];
pub const SCAN_LEVEL_COLUMNS: [&str; 7] = ["lambda", "reps", "successes", "rho_hat", "ci_low", "ci_high", "class"];
pub const REPORT_COLUMNS: [&str; 10] = [
    "d",
    "N",
    "lambda_lo",
    "lambda_hat",
    "lambda_hi",
    "N_times_gap",
    "theta",
    "green_bound",
    "konno_lower",
    "flags",
];

/// Writes a header and string rows.
pub fn write_rows<W: Write, I, R>(out: W, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| crate::Error::Csv(e.to_string()))?;
    Ok(())
}

pub fn write_series<W: Write>(out: W, rows: &[(usize, f64, f64, f64)]) -> Result<()> {
    write_rows(
        out,
        &SERIES_COLUMNS,
        rows.iter().map(|(n, t, s, b)| vec![n.to_string(), t.to_string(), s.to_string(), b.to_string()]),
    )
}

pub fn write_lineage<W: Write>(out: W, rows: &[(LineageEstimate, f64, f64)]) -> Result<()> {
    write_rows(
        out,
        &LINEAGE_COLUMNS,
        rows.iter().map(|(e, f1a, z1a)| {
            vec![
                e.params.n.to_string(),
                e.params.theta.to_string(),
                e.params.d.to_string(),
                e.reps.to_string(),
                e.f1.mean.to_string(),
                f1a.to_string(),
                e.z1.mean.to_string(),
                z1a.to_string(),
                e.f1.stderr.to_string(),
                e.z1.stderr.to_string(),
            ]
        }),
    )
}

pub fn write_survival<W: Write>(out: W, rows: &[SurvivalEstimate]) -> Result<()> {
    write_rows(
        out,
        &SURVIVAL_COLUMNS,
        rows.iter().map(|e| {
            vec![
                e.params.d.to_string(),
                e.params.n.to_string(),
                e.params.lambda.to_string(),
                e.reps.to_string(),
                e.successes.to_string(),
                e.rho_hat.to_string(),
                e.ci_low.to_string(),
                e.ci_high.to_string(),
                e.truncated.to_string(),
            ]
        }),
    )
}

pub fn write_scan_levels<W: Write>(out: W, scan: &CriticalScanResult) -> Result<()> {
    write_rows(
        out,
        &SCAN_LEVEL_COLUMNS,
        scan.levels.iter().map(|l| {
            vec![
                l.lambda.to_string(),
                l.estimate.reps.to_string(),
                l.estimate.successes.to_string(),
                l.estimate.rho_hat.to_string(),
                l.estimate.ci_low.to_string(),
                l.estimate.ci_high.to_string(),
                l.class.as_str().to_string(),
            ]
        }),
    )
}

pub fn write_report<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    write_rows(
        out,
        &REPORT_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.d.to_string(),
                r.n.to_string(),
                r.lambda_lo.to_string(),
                r.lambda_hat.to_string(),
                r.lambda_hi.to_string(),
                r.n_times_gap.to_string(),
                r.theta.to_string(),
                r.green_bound.to_string(),
                r.konno_lower.to_string(),
                r.flags.join(";"),
            ]
        }),
    )
}
