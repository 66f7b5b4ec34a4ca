//! One Monte Carlo trial: frame, channel, receiver, every estimator.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::{ChannelModel, CorrelationSource, Feedback, HarnessError, MethodConfig, SweepConfig};
use crate::channel::{
    generate_fading, propagate_symbols, snr_to_noise_var, ChannelRealization, FadingSpec,
};
use crate::estimators::{
    estimate_ls, interpolate_comb, kalman_step_scalar, kalman_step_vector, resolve_scale_ambiguity,
    subspace_identify, ChannelEstimate, EstimateError, FreqCorrelation, Interpolation, KalmanState,
    LmsTracker, Method, MlProjector, MmseEstimator, PilotReference, SpectralSmoother,
    SubspaceConfig,
};
use crate::harness::metrics::compute_mse;
use crate::modem::{assemble_frame, ofdm_demodulate, ofdm_modulate, Frame, OfdmConfig, PilotKind};
use crate::numkernel::ComplexMatrix;
use crate::seed::{derive_seed, rng_from, Stream};

const ERASURE_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TrialMetric {
    pub method: Method,
    pub bit_errors: u64,
    pub bits: u64,
    /// Normalized MSE of this trial's estimate.
    pub mse: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub metrics: Vec<TrialMetric>,
}

/// Estimator objects that depend only on the configuration and SNR, built
/// once per SNR point and shared read-only by all trials.
pub(crate) struct Prepared {
    snr_db: f64,
    noise_var: f64,
    /// Linear SNR seen by the estimators; infinite when noiseless.
    snr: f64,
    positions: Vec<usize>,
    methods: Vec<(MethodConfig, Stage)>,
}

enum Stage {
    Perfect,
    Ls(Interpolation),
    Lms(f64, Interpolation),
    Mmse(MmseEstimator, Interpolation),
    Smoother {
        genie: Option<SpectralSmoother>,
        rank: usize,
        interpolation: Interpolation,
    },
    Ml(MlProjector, Interpolation),
    Kalman(KalmanState, Feedback),
    KalmanVector(KalmanState, Feedback),
    Subspace(SubspaceConfig),
}

impl Prepared {
    pub(crate) fn new(
        cfg: &SweepConfig,
        methods: &[MethodConfig],
        snr_index: usize,
    ) -> Result<Self, HarnessError> {
        let snr_db = cfg.snr_grid_db[snr_index];
        let (noise_var, snr) = if cfg.noiseless {
            (0.0, f64::INFINITY)
        } else {
            (snr_to_noise_var(snr_db, 1.0), 10f64.powf(snr_db / 10.0))
        };
        let n = cfg.ofdm.n_subcarriers;
        let positions = match cfg.ofdm.pilots.kind {
            PilotKind::Comb { .. } => cfg.ofdm.pilots.comb_positions(n),
            _ => (0..n).collect(),
        };
        let beta = cfg.ofdm.constellation.beta();
        let wrap = |method: Method| {
            move |source: EstimateError| HarnessError::Config(format!("methods.{method}: {source}"))
        };
        let mut stages = Vec::with_capacity(methods.len());
        for m in methods {
            let err = wrap(m.method());
            let stage = match *m {
                MethodConfig::Perfect => Stage::Perfect,
                MethodConfig::Ls { interpolation } => Stage::Ls(interpolation),
                MethodConfig::Lms {
                    step,
                    interpolation,
                } => Stage::Lms(step, interpolation),
                MethodConfig::Mmse { interpolation } => Stage::Mmse(
                    MmseEstimator::new(&cfg.pdp, n, &positions).map_err(err)?,
                    interpolation,
                ),
                MethodConfig::Lmmse {
                    correlation,
                    interpolation,
                } => smoother_stage(
                    cfg,
                    &positions,
                    snr,
                    beta,
                    correlation,
                    positions.len(),
                    interpolation,
                )
                .map_err(err)?,
                MethodConfig::Lowrank {
                    rank,
                    correlation,
                    interpolation,
                } => {
                    let rank = rank.unwrap_or(cfg.pdp.taps().len()).min(positions.len());
                    smoother_stage(cfg, &positions, snr, beta, correlation, rank, interpolation)
                        .map_err(err)?
                }
                MethodConfig::Ml {
                    n_taps,
                    interpolation,
                } => {
                    let taps = n_taps.unwrap_or(cfg.ofdm.cp_length).min(positions.len());
                    let proj = MlProjector::on_positions(&positions, n, taps, cfg.ofdm.cp_length)
                        .map_err(err)?;
                    Stage::Ml(proj, interpolation)
                }
                MethodConfig::Kalman { order, feedback } => {
                    let power = cfg.pdp.total_power();
                    let st = KalmanState::scalar_from_doppler(cfg.fading.doppler, power, order)
                        .map_err(err)?;
                    Stage::Kalman(st, feedback)
                }
                MethodConfig::KalmanVector { feedback } => {
                    let r_hh = FreqCorrelation::from_pdp(&cfg.pdp, n, 1.0, 1.0)
                        .map_err(err)?
                        .r_hh;
                    let st = KalmanState::vector_from_correlation(&r_hh, cfg.fading.doppler)
                        .map_err(err)?;
                    Stage::KalmanVector(st, feedback)
                }
                MethodConfig::Subspace {
                    n_blocks,
                    n_superblocks,
                } => Stage::Subspace(SubspaceConfig {
                    m: n,
                    p: cfg.ofdm.cp_length,
                    l: cfg.pdp.max_delay(),
                    n_blocks,
                    n_superblocks,
                }),
            };
            stages.push((m.clone(), stage));
        }
        Ok(Self {
            snr_db,
            noise_var,
            snr,
            positions,
            methods: stages,
        })
    }
}

fn smoother_stage(
    cfg: &SweepConfig,
    positions: &[usize],
    snr: f64,
    beta: f64,
    correlation: CorrelationSource,
    rank: usize,
    interpolation: Interpolation,
) -> Result<Stage, EstimateError> {
    let genie = match correlation {
        CorrelationSource::Genie => {
            let full = FreqCorrelation::from_pdp(&cfg.pdp, cfg.ofdm.n_subcarriers, snr, beta)?;
            Some(SpectralSmoother::new(&full.restrict(positions), rank)?)
        }
        CorrelationSource::Empirical => None,
    };
    Ok(Stage::Smoother {
        genie,
        rank,
        interpolation,
    })
}

/// Everything the receiver side of one trial needs.
struct Received<'a> {
    ofdm: &'a OfdmConfig,
    frame: Frame,
    channel: ChannelRealization,
    /// Demodulated grid, `n_symbols × N`.
    y: ComplexMatrix,
}

impl Received<'_> {
    fn n_symbols(&self) -> usize {
        self.frame.n_symbols()
    }

    fn n(&self) -> usize {
        self.frame.n_subcarriers()
    }

    /// Symbols carrying pilots at `positions`.
    fn pilot_events(&self) -> Vec<usize> {
        match self.ofdm.pilots.kind {
            PilotKind::Block { period } => (0..self.n_symbols()).step_by(period).collect(),
            PilotKind::Comb { .. } => (0..self.n_symbols()).collect(),
            PilotKind::None => Vec::new(),
        }
    }

    fn pilots_at(&self, s: usize, positions: &[usize]) -> (Vec<Complex64>, Vec<Complex64>) {
        let y = positions.iter().map(|&k| self.y[(s, k)]).collect();
        let x = positions.iter().map(|&k| self.frame.grid[(s, k)]).collect();
        (y, x)
    }

    /// Runs a per-pilot-event estimator, spreads comb estimates over all
    /// subcarriers and holds each estimate until the next pilot event.
    fn track(
        &self,
        positions: &[usize],
        interpolation: Interpolation,
        mut estimate: impl FnMut(&[Complex64], &[Complex64]) -> Result<Vec<Complex64>, EstimateError>,
    ) -> Result<ComplexMatrix, EstimateError> {
        let n = self.n();
        let comb = matches!(self.ofdm.pilots.kind, PilotKind::Comb { .. });
        let mut out = ComplexMatrix::zeros(self.n_symbols(), n);
        let mut current: Option<Vec<Complex64>> = None;
        let events = self.pilot_events();
        let mut next = events.iter().peekable();
        for s in 0..self.n_symbols() {
            if next.peek() == Some(&&s) {
                next.next();
                let (y, x) = self.pilots_at(s, positions);
                let est = estimate(&y, &x)?;
                current = Some(if comb {
                    interpolate_comb(&est, positions, n, interpolation)?
                } else {
                    est
                });
            }
            let row = current.as_ref().ok_or_else(|| {
                EstimateError::InvalidParameter("no pilot before first symbol".into())
            })?;
            out.row_mut(s).copy_from_slice(row);
        }
        Ok(out)
    }

    fn ls_snapshots(&self, positions: &[usize]) -> Result<Vec<Vec<Complex64>>, EstimateError> {
        self.pilot_events()
            .into_iter()
            .map(|s| {
                let (y, x) = self.pilots_at(s, positions);
                estimate_ls(&y, &x)
            })
            .collect()
    }

    /// Symbol used for the Kalman observation at `(s, k)`.
    fn kalman_symbol(
        &self,
        feedback: Feedback,
        s: usize,
        k: usize,
        predicted: Complex64,
    ) -> Complex64 {
        if feedback == Feedback::Training || self.frame.is_pilot(s, k) {
            return self.frame.grid[(s, k)];
        }
        let c = &self.ofdm.constellation;
        if predicted.norm() < ERASURE_THRESHOLD {
            return c.point(0);
        }
        c.point(c.decide(self.y[(s, k)] / predicted))
    }
}

fn seeded(
    cfg: &SweepConfig,
    snr_index: usize,
    trial: usize,
    stream: Stream,
) -> rand_chacha::ChaCha8Rng {
    rng_from(derive_seed(
        cfg.master_seed,
        &[snr_index as u64, trial as u64, stream as u64],
    ))
}

fn random_bits<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

fn transmit(
    grid: &ComplexMatrix,
    ofdm: &OfdmConfig,
    channel: &ChannelRealization,
    noise_var: f64,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<Complex64>>, HarnessError> {
    let tx: Vec<Vec<Complex64>> = (0..grid.rows())
        .map(|s| ofdm_modulate(grid.row(s), ofdm))
        .collect::<Result<_, _>>()?;
    Ok(propagate_symbols(&tx, channel, noise_var, rng)?)
}

fn receive<'a>(
    cfg: &'a SweepConfig,
    prep: &Prepared,
    snr_index: usize,
    trial: usize,
) -> Result<Received<'a>, HarnessError> {
    let ofdm = &cfg.ofdm;
    let n = ofdm.n_subcarriers;
    let n_symbols = cfg.n_symbols_per_trial;

    let mut bit_rng = seeded(cfg, snr_index, trial, Stream::Bits);
    let bits = random_bits(&mut bit_rng, ofdm.payload_bits(n_symbols));
    let frame = assemble_frame(&bits, ofdm, n_symbols)?;

    let channel = match &cfg.channel {
        ChannelModel::Rayleigh => {
            let spec = FadingSpec {
                seed: derive_seed(
                    cfg.master_seed,
                    &[snr_index as u64, trial as u64, Stream::Fading as u64],
                ),
                ..cfg.fading
            };
            generate_fading(&cfg.pdp, &spec, n_symbols, n)?
        }
        ChannelModel::Fixed(gains) => {
            ChannelRealization::fixed(cfg.pdp.clone(), gains, n_symbols, n)
        }
    };

    let mut noise_rng = seeded(cfg, snr_index, trial, Stream::Noise);
    let rx = transmit(&frame.grid, ofdm, &channel, prep.noise_var, &mut noise_rng)?;
    let mut y = ComplexMatrix::zeros(n_symbols, n);
    for (s, row) in rx.iter().enumerate() {
        y.row_mut(s).copy_from_slice(&ofdm_demodulate(row, ofdm)?);
    }
    Ok(Received {
        ofdm,
        frame,
        channel,
        y,
    })
}

fn estimate_annotated(
    cfg: &SweepConfig,
    prep: &Prepared,
    (mc, stage): &(MethodConfig, Stage),
    received: &Received<'_>,
    snr_index: usize,
    trial: usize,
) -> Result<ChannelEstimate, HarnessError> {
    let method = mc.method();
    let h_hat = estimate(cfg, prep, stage, received, snr_index, trial).map_err(|e| match e {
        StageError::Estimate(source) => HarnessError::Estimate {
            snr_db: prep.snr_db,
            method,
            trial,
            source,
        },
        StageError::Harness(h) => h,
    })?;
    Ok(ChannelEstimate::new(h_hat, method))
}

/// Runs one trial of one SNR point through every prepared method.
pub(crate) fn run_trial(
    cfg: &SweepConfig,
    prep: &Prepared,
    snr_index: usize,
    trial: usize,
) -> Result<TrialOutcome, HarnessError> {
    let received = receive(cfg, prep, snr_index, trial)?;
    let mut metrics = Vec::with_capacity(prep.methods.len());
    for entry in &prep.methods {
        let est = estimate_annotated(cfg, prep, entry, &received, snr_index, trial)?;
        let mse = compute_mse(&est, &received.channel.freq_response)?;
        let (bit_errors, bits) = count_bit_errors(&received, &est.h_hat);
        metrics.push(TrialMetric {
            method: est.method,
            bit_errors,
            bits,
            mse,
        });
    }
    Ok(TrialOutcome { trial, metrics })
}

/// Ground truth and every method's full estimate for one trial.
#[derive(Clone, Debug)]
pub struct TrialTrace {
    /// `n_symbols × N` true frequency response.
    pub truth: ComplexMatrix,
    /// One estimate per method, perfect CSI first.
    pub estimates: Vec<ChannelEstimate>,
}

/// Replays trial `trial` of SNR point `snr_index` and keeps the estimates.
///
/// The trial sees exactly the same frame, channel and noise as inside a sweep
/// with the same configuration.
pub fn trace_trial(
    cfg: &SweepConfig,
    snr_index: usize,
    trial: usize,
) -> Result<TrialTrace, HarnessError> {
    cfg.validate()?;
    if snr_index >= cfg.snr_grid_db.len() {
        return Err(HarnessError::Config(format!(
            "snr index {snr_index} outside a grid of {}",
            cfg.snr_grid_db.len()
        )));
    }
    let methods = cfg.effective_methods();
    let prep = Prepared::new(cfg, &methods, snr_index)?;
    let received = receive(cfg, &prep, snr_index, trial)?;
    let estimates = prep
        .methods
        .iter()
        .map(|entry| estimate_annotated(cfg, &prep, entry, &received, snr_index, trial))
        .collect::<Result<_, _>>()?;
    Ok(TrialTrace {
        truth: received.channel.freq_response,
        estimates,
    })
}

enum StageError {
    Estimate(EstimateError),
    Harness(HarnessError),
}

impl From<EstimateError> for StageError {
    fn from(e: EstimateError) -> Self {
        StageError::Estimate(e)
    }
}

impl From<HarnessError> for StageError {
    fn from(e: HarnessError) -> Self {
        StageError::Harness(e)
    }
}

fn estimate(
    cfg: &SweepConfig,
    prep: &Prepared,
    stage: &Stage,
    rx: &Received<'_>,
    snr_index: usize,
    trial: usize,
) -> Result<ComplexMatrix, StageError> {
    let positions = &prep.positions;
    let n = rx.n();
    let ns = rx.n_symbols();
    let out = match stage {
        Stage::Perfect => rx.channel.freq_response.clone(),
        Stage::Ls(interp) => rx.track(positions, *interp, estimate_ls)?,
        Stage::Lms(step, interp) => {
            let mut trackers = vec![LmsTracker::new(*step); positions.len()];
            rx.track(positions, *interp, |y, x| {
                trackers
                    .iter_mut()
                    .zip(y.iter().zip(x))
                    .map(|(t, (&yk, &xk))| t.update(yk, xk))
                    .collect()
            })?
        }
        Stage::Mmse(est, interp) => rx.track(positions, *interp, |y, x| {
            est.estimate(y, x, prep.noise_var)
        })?,
        Stage::Smoother {
            genie,
            rank,
            interpolation,
        } => {
            let owned;
            let smoother = match genie {
                Some(s) => s,
                None => {
                    let snaps = rx.ls_snapshots(positions)?;
                    let beta = rx.ofdm.constellation.beta();
                    let corr = FreqCorrelation::empirical(&snaps, prep.noise_var, prep.snr, beta)?;
                    owned = SpectralSmoother::new(&corr, *rank)?;
                    &owned
                }
            };
            rx.track(positions, *interpolation, |y, x| {
                smoother.apply(&estimate_ls(y, x)?)
            })?
        }
        Stage::Ml(proj, interp) => {
            rx.track(positions, *interp, |y, x| proj.apply(&estimate_ls(y, x)?))?
        }
        Stage::Kalman(template, feedback) => {
            let mut states = vec![template.clone(); n];
            let mut out = ComplexMatrix::zeros(ns, n);
            for s in 0..ns {
                for (k, st) in states.iter_mut().enumerate() {
                    let pred = st.predicted()[0];
                    let sym = rx.kalman_symbol(*feedback, s, k, pred);
                    out[(s, k)] = kalman_step_scalar(st, rx.y[(s, k)], sym, prep.noise_var)?;
                }
            }
            out
        }
        Stage::KalmanVector(template, feedback) => {
            let mut st = template.clone();
            let mut out = ComplexMatrix::zeros(ns, n);
            for s in 0..ns {
                let pred = st.predicted();
                let syms: Vec<Complex64> = (0..n)
                    .map(|k| rx.kalman_symbol(*feedback, s, k, pred[k]))
                    .collect();
                let est = kalman_step_vector(&mut st, rx.y.row(s), &syms, prep.noise_var)?;
                out.row_mut(s).copy_from_slice(&est);
            }
            out
        }
        Stage::Subspace(sub) => {
            let taps = blind_taps(cfg, prep, sub, rx, snr_index, trial)?;
            let reference = PilotReference {
                subcarrier: 0,
                n_subcarriers: n,
                x: rx.frame.grid[(0, 0)],
                y: rx.y[(0, 0)],
            };
            let taps = resolve_scale_ambiguity(&taps, &reference)?;
            let response: Vec<Complex64> = (0..n)
                .map(|k| {
                    taps.iter()
                        .enumerate()
                        .map(|(l, &h)| {
                            h * Complex64::from_polar(
                                1.0,
                                -2.0 * PI * ((k * l) % n) as f64 / n as f64,
                            )
                        })
                        .sum()
                })
                .collect();
            ComplexMatrix::from_fn(ns, n, |_, k| response[k])
        }
    };
    Ok(out)
}

/// Blind identification from a training stream of random data symbols sent
/// through the channel frozen at its first-symbol state.
fn blind_taps(
    cfg: &SweepConfig,
    prep: &Prepared,
    sub: &SubspaceConfig,
    rx: &Received<'_>,
    snr_index: usize,
    trial: usize,
) -> Result<Vec<Complex64>, StageError> {
    let n_pre = sub.n_blocks * sub.n_superblocks;
    let base = derive_seed(
        cfg.master_seed,
        &[snr_index as u64, trial as u64, Stream::Prelude as u64],
    );
    let mut data_rng = rng_from(derive_seed(base, &[Stream::Bits as u64]));
    let mut noise_rng = rng_from(derive_seed(base, &[Stream::Noise as u64]));
    let c = &rx.ofdm.constellation;
    let n = rx.n();
    let grid = ComplexMatrix::from_fn(n_pre, n, |_, _| {
        c.point(data_rng.random_range(0..c.points().len()))
    });
    let frozen = ChannelRealization::fixed(
        rx.channel.pdp.clone(),
        rx.channel.tap_gains.row(0),
        n_pre,
        n,
    );
    let stream: Vec<Complex64> = transmit(&grid, rx.ofdm, &frozen, prep.noise_var, &mut noise_rng)?
        .into_iter()
        .flatten()
        .collect();
    Ok(subspace_identify(&stream, sub)?.h)
}

/// Zero-forcing equalization and hard decisions on the data cells.
fn count_bit_errors(rx: &Received<'_>, h_hat: &ComplexMatrix) -> (u64, u64) {
    let c = &rx.ofdm.constellation;
    let bps = c.bits_per_symbol();
    let mut decided = Vec::with_capacity(bps);
    let mut errors = 0u64;
    let mut bits = 0u64;
    for (i, (s, k)) in rx.frame.data_cells().enumerate() {
        decided.clear();
        let h = h_hat[(s, k)];
        if h.norm() < ERASURE_THRESHOLD || !h.is_finite() {
            decided.resize(bps, 0);
        } else {
            c.label_bits(c.decide(rx.y[(s, k)] / h), &mut decided);
        }
        let sent = &rx.frame.payload_bits[i * bps..(i + 1) * bps];
        errors += sent.iter().zip(&decided).filter(|(a, b)| a != b).count() as u64;
        bits += bps as u64;
    }
    (errors, bits)
}
