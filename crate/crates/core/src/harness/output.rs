use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HarnessError, MetricRecord, SweepResult};

pub const CSV_HEADER: &str = "snr_db,method,ber,mse,rmse,trials,bit_count";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    /// One row per record.
    Csv,
    /// The full result with its configuration echo.
    Json,
}

fn csv_row(r: &MetricRecord) -> String {
    format!(
        "{:.16e},{},{:.16e},{:.16e},{:.16e},{},{}",
        r.snr_db, r.method, r.ber, r.mse, r.rmse, r.trials, r.bit_count
    )
}

pub(crate) fn render_csv(records: &[MetricRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", csv_row(r));
    }
    out
}

pub fn write_results(
    result: &SweepResult,
    path: &Path,
    format: OutputFormat,
) -> Result<(), HarnessError> {
    let text = match format {
        OutputFormat::Csv => render_csv(&result.records),
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(result)?;
            s.push('\n');
            s
        }
    };
    fs::write(path, text)?;
    Ok(())
}

pub fn read_results_json(path: &Path) -> Result<SweepResult, HarnessError> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
