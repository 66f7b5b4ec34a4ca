//! Monte Carlo sweep engine.
//!
//! Every trial draws its own fading realization, payload and noise from
//! seeds derived from `(master_seed, snr_index, trial_index, stream)`, so a
//! trial's inputs do not depend on which worker runs it or on the method
//! list. All methods of a trial see the same received frame, which makes
//! method comparisons paired. Trials fan out over a rayon pool and are folded
//! back in trial order.

mod metrics;
mod output;
mod trial;

use std::time::Duration;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, FadingSpec, PowerDelayProfile};
use crate::estimators::{EstimateError, Interpolation, Method};
use crate::modem::{ModemError, OfdmConfig, PilotKind};

pub use metrics::{compute_ber, compute_mse, compute_rmse};
pub use output::{read_results_json, write_results, OutputFormat, CSV_HEADER};
pub use trial::{trace_trial, TrialMetric, TrialOutcome, TrialTrace};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error("{method} failed at SNR {snr_db} dB, trial {trial}: {source}")]
    Estimate {
        snr_db: f64,
        method: Method,
        trial: usize,
        source: EstimateError,
    },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("metric undefined: {0}")]
    Metric(String),
    #[error(transparent)]
    Modem(#[from] ModemError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Ber,
    Mse,
    Rmse,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Ber, Metric::Mse, Metric::Rmse];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ber => "ber",
            Metric::Mse => "mse",
            Metric::Rmse => "rmse",
        }
    }
}

/// How the trial channel is drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelModel {
    /// Independent Jakes fading per tap with the profile's powers.
    Rayleigh,
    /// The same gains on the profile's delays in every trial and symbol.
    Fixed(Vec<Complex64>),
}

/// Source of the frequency correlation used by the LMMSE smoothers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationSource {
    /// Computed from the configured power delay profile.
    #[default]
    Genie,
    /// Sample covariance of the trial's pilot LS estimates.
    Empirical,
}

/// What drives the Kalman observation matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feedback {
    /// Transmitted symbols are known.
    #[default]
    Training,
    /// Pilots where present, hard decisions elsewhere.
    Decision,
}

pub const DEFAULT_LMS_STEP: f64 = 0.1;
pub const DEFAULT_KALMAN_ORDER: usize = 2;
pub const DEFAULT_SUBSPACE_BLOCKS: usize = 2;
pub const DEFAULT_SUPERBLOCKS: usize = 400;

/// An estimator with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodConfig {
    Perfect,
    Ls {
        #[serde(default)]
        interpolation: Interpolation,
    },
    Lms {
        step: f64,
        #[serde(default)]
        interpolation: Interpolation,
    },
    Mmse {
        #[serde(default)]
        interpolation: Interpolation,
    },
    Lmmse {
        #[serde(default)]
        correlation: CorrelationSource,
        #[serde(default)]
        interpolation: Interpolation,
    },
    Lowrank {
        /// Defaults to the number of profile taps.
        rank: Option<usize>,
        #[serde(default)]
        correlation: CorrelationSource,
        #[serde(default)]
        interpolation: Interpolation,
    },
    Ml {
        /// Defaults to the cyclic prefix length.
        n_taps: Option<usize>,
        #[serde(default)]
        interpolation: Interpolation,
    },
    Kalman {
        order: usize,
        #[serde(default)]
        feedback: Feedback,
    },
    KalmanVector {
        #[serde(default)]
        feedback: Feedback,
    },
    Subspace {
        n_blocks: usize,
        n_superblocks: usize,
    },
}

impl MethodConfig {
    /// Documented defaults for a method.
    pub fn default_for(method: Method) -> Self {
        let interpolation = Interpolation::default();
        match method {
            Method::Perfect => MethodConfig::Perfect,
            Method::Ls => MethodConfig::Ls { interpolation },
            Method::Lms => MethodConfig::Lms {
                step: DEFAULT_LMS_STEP,
                interpolation,
            },
            Method::Mmse => MethodConfig::Mmse { interpolation },
            Method::Lmmse => MethodConfig::Lmmse {
                correlation: CorrelationSource::Genie,
                interpolation,
            },
            Method::Lowrank => MethodConfig::Lowrank {
                rank: None,
                correlation: CorrelationSource::Genie,
                interpolation,
            },
            Method::Ml => MethodConfig::Ml {
                n_taps: None,
                interpolation,
            },
            Method::Kalman => MethodConfig::Kalman {
                order: DEFAULT_KALMAN_ORDER,
                feedback: Feedback::Training,
            },
            Method::KalmanVector => MethodConfig::KalmanVector {
                feedback: Feedback::Training,
            },
            Method::Subspace => MethodConfig::Subspace {
                n_blocks: DEFAULT_SUBSPACE_BLOCKS,
                n_superblocks: DEFAULT_SUPERBLOCKS,
            },
        }
    }

    pub fn method(&self) -> Method {
        match self {
            MethodConfig::Perfect => Method::Perfect,
            MethodConfig::Ls { .. } => Method::Ls,
            MethodConfig::Lms { .. } => Method::Lms,
            MethodConfig::Mmse { .. } => Method::Mmse,
            MethodConfig::Lmmse { .. } => Method::Lmmse,
            MethodConfig::Lowrank { .. } => Method::Lowrank,
            MethodConfig::Ml { .. } => Method::Ml,
            MethodConfig::Kalman { .. } => Method::Kalman,
            MethodConfig::KalmanVector { .. } => Method::KalmanVector,
            MethodConfig::Subspace { .. } => Method::Subspace,
        }
    }

    fn needs_pilots(&self) -> bool {
        match self {
            MethodConfig::Kalman { feedback, .. } | MethodConfig::KalmanVector { feedback } => {
                *feedback == Feedback::Decision
            }
            other => other.method().needs_pilots(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub ofdm: OfdmConfig,
    pub pdp: PowerDelayProfile,
    /// Doppler and oscillator count; the seed is replaced per trial.
    pub fading: FadingSpec,
    pub channel: ChannelModel,
    pub methods: Vec<MethodConfig>,
    pub snr_grid_db: Vec<f64>,
    pub n_trials: usize,
    pub n_symbols_per_trial: usize,
    pub master_seed: u64,
    pub metrics: Vec<Metric>,
    /// Suppresses noise; estimators then run with infinite SNR.
    pub noiseless: bool,
}

impl SweepConfig {
    /// Default sweep for `methods` (perfect CSI is added by the engine).
    pub fn with_methods(methods: &[Method]) -> Result<Self, HarnessError> {
        use crate::modem::{ConstellationKind, PilotScheme};
        let ofdm = OfdmConfig::new(64, 16, ConstellationKind::Qam16, PilotScheme::comb(4))?;
        Ok(Self {
            ofdm,
            pdp: PowerDelayProfile::exponential(4, 2.0)?,
            fading: FadingSpec::new(0.01, 0),
            channel: ChannelModel::Rayleigh,
            methods: methods
                .iter()
                .map(|&m| MethodConfig::default_for(m))
                .collect(),
            snr_grid_db: (0..=6).map(|i| 5.0 * i as f64).collect(),
            n_trials: 500,
            n_symbols_per_trial: 100,
            master_seed: 1,
            metrics: Metric::ALL.to_vec(),
            noiseless: false,
        })
    }

    /// Method list as run: perfect CSI first, then the configured methods
    /// without duplicates.
    pub fn effective_methods(&self) -> Vec<MethodConfig> {
        let mut out = vec![MethodConfig::Perfect];
        for m in &self.methods {
            if !out.iter().any(|o| o.method() == m.method()) {
                out.push(m.clone());
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        self.ofdm.validate()?;
        self.pdp.check_prefix(self.ofdm.cp_length)?;
        self.fading.validate()?;
        if self.n_trials < 1 {
            return bad("n_trials must be at least 1".into());
        }
        if self.n_symbols_per_trial < 1 {
            return bad("n_symbols_per_trial must be at least 1".into());
        }
        if self.snr_grid_db.is_empty() {
            return bad("snr grid must not be empty".into());
        }
        if let Some(s) = self.snr_grid_db.iter().find(|s| !s.is_finite()) {
            return bad(format!("snr value {s} is not finite"));
        }
        if let ChannelModel::Fixed(g) = &self.channel {
            if g.len() != self.pdp.taps().len() {
                return bad(format!(
                    "fixed channel has {} gains for {} profile taps",
                    g.len(),
                    self.pdp.taps().len()
                ));
            }
        }
        let n = self.ofdm.n_subcarriers;
        let n_pos = match self.ofdm.pilots.kind {
            PilotKind::Comb { spacing } => n / spacing,
            _ => n,
        };
        let has_pilots = !matches!(self.ofdm.pilots.kind, PilotKind::None);
        for m in &self.methods {
            let name = m.method().name();
            if m.needs_pilots() && !has_pilots {
                return bad(format!(
                    "method {name} needs pilots but the pilot scheme is none"
                ));
            }
            match m {
                MethodConfig::Lms { step, .. } if !(*step > 0.0) => {
                    return bad(format!("methods.lms.step must be positive, got {step}"));
                }
                MethodConfig::Lowrank { rank: Some(p), .. } if *p < 1 || *p > n_pos => {
                    return bad(format!(
                        "methods.lowrank.rank must be in 1..={n_pos}, got {p}"
                    ));
                }
                MethodConfig::Ml {
                    n_taps: Some(t), ..
                } => {
                    let max = self.ofdm.cp_length.min(n_pos);
                    if *t < 1 || *t > max {
                        return bad(format!("methods.ml.n_taps must be in 1..={max}, got {t}"));
                    }
                }
                MethodConfig::Kalman { order, .. } if *order < 1 => {
                    return bad("methods.kalman.order must be at least 1".into());
                }
                MethodConfig::Subspace {
                    n_blocks,
                    n_superblocks,
                } => {
                    if *n_blocks < 1 || *n_superblocks < 1 {
                        return bad(
                            "methods.subspace.n_blocks and n_superblocks must be positive".into(),
                        );
                    }
                    let limit = self.ofdm.cp_length * n_blocks;
                    if self.pdp.max_delay() > limit {
                        return bad(format!(
                            "methods.subspace: channel order {} exceeds prefix x blocks = {limit}",
                            self.pdp.max_delay()
                        ));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Aggregate over all trials of one `(snr, method)` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub snr_db: f64,
    pub method: Method,
    pub ber: f64,
    pub mse: f64,
    pub rmse: f64,
    pub trials: usize,
    pub bit_count: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<MetricRecord>,
    pub config_echo: SweepConfig,
    /// Wall-clock time; not serialized so output files stay reproducible.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl PartialEq for SweepResult {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records && self.config_echo == other.config_echo
    }
}

/// Runs every trial of one SNR point and returns the outcomes in trial order.
pub fn run_point(cfg: &SweepConfig, snr_index: usize) -> Result<Vec<TrialOutcome>, HarnessError> {
    let methods = cfg.effective_methods();
    let prepared = trial::Prepared::new(cfg, &methods, snr_index)?;
    (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| trial::run_trial(cfg, &prepared, snr_index, t))
        .collect()
}

/// Folds trial outcomes (in trial order) into one record per method.
pub fn aggregate(snr_db: f64, outcomes: &[TrialOutcome]) -> Vec<MetricRecord> {
    let Some(first) = outcomes.first() else {
        return Vec::new();
    };
    (0..first.metrics.len())
        .map(|i| {
            let (mut errors, mut bits, mut mse_sum) = (0u64, 0u64, 0.0);
            for o in outcomes {
                let m = &o.metrics[i];
                errors += m.bit_errors;
                bits += m.bits;
                mse_sum += m.mse;
            }
            let mse = mse_sum / outcomes.len() as f64;
            MetricRecord {
                snr_db,
                method: first.metrics[i].method,
                ber: if bits == 0 {
                    0.0
                } else {
                    errors as f64 / bits as f64
                },
                mse,
                rmse: mse.sqrt(),
                trials: outcomes.len(),
                bit_count: bits,
            }
        })
        .collect()
}

fn sweep_in_current_pool(cfg: &SweepConfig) -> Result<SweepResult, HarnessError> {
    cfg.validate()?;
    let start = std::time::Instant::now();
    let mut records = Vec::new();
    for (i, &snr) in cfg.snr_grid_db.iter().enumerate() {
        let outcomes = run_point(cfg, i)?;
        records.extend(aggregate(snr, &outcomes));
    }
    Ok(SweepResult {
        records,
        config_echo: cfg.clone(),
        elapsed: start.elapsed(),
    })
}

/// Runs the sweep on rayon's global pool.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult, HarnessError> {
    sweep_in_current_pool(cfg)
}

/// Runs the sweep on a dedicated pool of `workers` threads (0 = all cores).
pub fn run_sweep_with_workers(
    cfg: &SweepConfig,
    workers: usize,
) -> Result<SweepResult, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    pool.install(|| sweep_in_current_pool(cfg))
}
