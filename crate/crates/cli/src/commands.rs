//! Subcommand implementations. Every file goes to the invocation's output
//! directory, and a failing command removes whatever it had written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chanest::channel::{empirical_autocorrelation, generate_fading, FadingSpec};
use chanest::estimators::Method;
use chanest::harness::{
    run_sweep_with_workers, trace_trial, write_results, Metric, MetricRecord, OutputFormat,
    SweepResult,
};
use chanest::seed::{derive_seed, Stream};

use crate::svg::{line_chart, Series};
use crate::{CliError, Invocation};

/// Files written so far, removed again on failure.
struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    fn open(dir: &Path) -> Result<Self, CliError> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
            committed: false,
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let p = self.path(name);
        fs::write(&p, contents)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", p.display())))
    }

    fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// Runs `body` against a fresh output set and keeps the files only on success.
fn with_outputs<T>(
    dir: &Path,
    body: impl FnOnce(&mut Outputs) -> Result<T, CliError>,
) -> Result<T, CliError> {
    let mut out = Outputs::open(dir)?;
    let value = body(&mut out)?;
    for p in out.commit() {
        log::info!("wrote {}", p.display());
    }
    Ok(value)
}

fn metric_value(r: &MetricRecord, m: Metric) -> f64 {
    match m {
        Metric::Ber => r.ber,
        Metric::Mse => r.mse,
        Metric::Rmse => r.rmse,
    }
}

/// Plot data for one metric: `snr_db` then one column per method, in sweep
/// order.
pub fn plot_table(result: &SweepResult, metric: Metric) -> (Vec<f64>, Vec<Method>, String) {
    let grid = result.config_echo.snr_grid_db.clone();
    let methods: Vec<Method> = result
        .config_echo
        .effective_methods()
        .iter()
        .map(|m| m.method())
        .collect();
    let mut text = String::from("snr_db");
    for m in &methods {
        text.push(',');
        text.push_str(m.name());
    }
    text.push('\n');
    for (i, snr) in grid.iter().enumerate() {
        let _ = write!(text, "{snr:.16e}");
        for r in &result.records[i * methods.len()..(i + 1) * methods.len()] {
            let _ = write!(text, ",{:.16e}", metric_value(r, metric));
        }
        text.push('\n');
    }
    (grid, methods, text)
}

pub fn cmd_sweep(inv: &Invocation) -> Result<SweepResult, CliError> {
    let cfg = &inv.config.sweep;
    let result = run_sweep_with_workers(cfg, inv.workers)?;
    log::info!(
        "sweep finished: {} records, {} trials per point, {:.2?}",
        result.records.len(),
        cfg.n_trials,
        result.elapsed
    );
    with_outputs(&inv.out_dir, |out| {
        let csv = out.path("results.csv");
        write_results(&result, &csv, OutputFormat::Csv)?;
        let json = out.path("results.json");
        write_results(&result, &json, OutputFormat::Json)?;
        for &metric in &cfg.metrics {
            let (grid, methods, text) = plot_table(&result, metric);
            out.write(&format!("plot_{}.csv", metric.name()), &text)?;
            if inv.svg {
                let series: Vec<Series> = methods
                    .iter()
                    .enumerate()
                    .map(|(j, m)| Series {
                        label: m.name(),
                        y: (0..grid.len())
                            .map(|i| metric_value(&result.records[i * methods.len() + j], metric))
                            .collect(),
                    })
                    .collect();
                let chart = line_chart(
                    &format!("{} vs SNR", metric.name().to_uppercase()),
                    "SNR (dB)",
                    metric.name(),
                    &grid,
                    &series,
                );
                out.write(&format!("plot_{}.svg", metric.name()), &chart)?;
            }
        }
        Ok(())
    })?;
    Ok(result)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeRow {
    pub lag: usize,
    pub empirical: f64,
    pub reference: f64,
}

pub fn cmd_probe_channel(inv: &Invocation) -> Result<Vec<ProbeRow>, CliError> {
    let cfg = &inv.config.sweep;
    let probe = &inv.config.probe;
    let spec = FadingSpec {
        seed: derive_seed(cfg.master_seed, &[Stream::Fading as u64]),
        ..cfg.fading
    };
    let real = generate_fading(&cfg.pdp, &spec, probe.n_symbols, cfg.ofdm.n_subcarriers)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let rows: Vec<ProbeRow> = empirical_autocorrelation(&real, probe.max_lag)
        .into_iter()
        .enumerate()
        .map(|(lag, empirical)| ProbeRow {
            lag,
            empirical,
            reference: spec.reference_correlation(lag),
        })
        .collect();
    let mut text = String::from("lag,empirical_autocorr_real,j0_reference\n");
    for r in &rows {
        let _ = writeln!(text, "{},{:.16e},{:.16e}", r.lag, r.empirical, r.reference);
    }
    let worst = rows
        .iter()
        .map(|r| (r.empirical - r.reference).abs())
        .fold(0.0, f64::max);
    log::info!(
        "probe: {} symbols, doppler {}, max |empirical - J0| = {worst:.4}",
        probe.n_symbols,
        spec.doppler
    );
    with_outputs(&inv.out_dir, |out| out.write("probe_channel.csv", &text))?;
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateRow {
    pub k: usize,
    pub truth: chanest::Complex64,
    pub estimate: chanest::Complex64,
    pub abs_err: f64,
}

pub fn cmd_estimate_once(inv: &Invocation) -> Result<Vec<EstimateRow>, CliError> {
    let mut cfg = inv.config.sweep.clone();
    let est = &inv.config.estimate;
    if cfg.methods.len() != 1 {
        return Err(CliError::Config(format!(
            "estimate-once needs exactly one method in sweep.methods, got {}",
            cfg.methods.len()
        )));
    }
    let method = cfg.methods[0].method();
    cfg.snr_grid_db = vec![est.snr_db];
    let trace = trace_trial(&cfg, 0, est.trial)?;
    let estimate = trace
        .estimates
        .iter()
        .find(|e| e.method == method)
        .expect("configured method is traced");
    let s = est.symbol;
    let rows: Vec<EstimateRow> = trace
        .truth
        .row(s)
        .iter()
        .zip(estimate.row(s))
        .enumerate()
        .map(|(k, (&truth, &estimate))| EstimateRow {
            k,
            truth,
            estimate,
            abs_err: (estimate - truth).norm(),
        })
        .collect();
    let mut text = String::from("k,H_true_re,H_true_im,H_hat_re,H_hat_im,abs_err\n");
    for r in &rows {
        let _ = writeln!(
            text,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.k, r.truth.re, r.truth.im, r.estimate.re, r.estimate.im, r.abs_err
        );
    }
    with_outputs(&inv.out_dir, |out| out.write("estimate_once.csv", &text))?;
    Ok(rows)
}

pub fn cmd_list_methods() -> String {
    let mut text = String::new();
    for m in Method::ALL {
        let pilots = if m.needs_pilots() { "pilots" } else { "" };
        let _ = writeln!(text, "{:<14}{:<8}{}", m.name(), pilots, m.description());
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_config;

    fn invocation(text: &str, dir: &Path) -> Invocation {
        Invocation {
            config: parse_config(text, &[]).unwrap(),
            out_dir: dir.to_path_buf(),
            workers: 2,
            svg: true,
        }
    }

    #[test]
    fn failed_writes_leave_nothing_behind() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("new");
        let r: Result<(), CliError> = with_outputs(&dir, |out| {
            out.write("a.csv", "x")?;
            assert!(dir.join("a.csv").exists());
            Err(CliError::Runtime("boom".into()))
        });
        assert!(r.is_err());
        assert!(!dir.exists());
    }

    #[test]
    fn sweep_writes_every_file() {
        let tmp = tempfile::tempdir().unwrap();
        let inv = invocation(
            "[sweep]\nmethods = [\"ls\", \"ml\"]\nn_trials = 3\nn_symbols = 4\n",
            tmp.path(),
        );
        cmd_sweep(&inv).unwrap();
        for f in [
            "results.csv",
            "results.json",
            "plot_ber.csv",
            "plot_mse.csv",
            "plot_rmse.csv",
            "plot_ber.svg",
            "plot_mse.svg",
            "plot_rmse.svg",
        ] {
            assert!(tmp.path().join(f).exists(), "{f}");
        }
        let plot = fs::read_to_string(tmp.path().join("plot_mse.csv")).unwrap();
        let lines: Vec<&str> = plot.lines().collect();
        assert_eq!(lines[0], "snr_db,perfect,ls,ml");
        assert_eq!(lines.len(), 8);
    }

    #[test]
    fn list_methods_covers_all() {
        let text = cmd_list_methods();
        assert_eq!(text.lines().count(), Method::ALL.len());
        assert!(text.contains("kalman_vector"));
    }
}
