//! Sectioned TOML configuration with documented defaults.
//!
//! Parsing happens in three steps: the document is read into a table,
//! `--override key=value` pairs are written into that table, and the result
//! is deserialized with unknown keys rejected. Range and consistency checks
//! run last, so an overridden value is validated like any other.

use chanest::channel::{FadingSpec, PowerDelayProfile};
use chanest::estimators::{Interpolation, Method};
use chanest::harness::{
    ChannelModel, CorrelationSource, Feedback, MethodConfig, Metric, SweepConfig,
    DEFAULT_KALMAN_ORDER, DEFAULT_LMS_STEP, DEFAULT_SUBSPACE_BLOCKS, DEFAULT_SUPERBLOCKS,
};
use chanest::modem::{ConstellationKind, OfdmConfig, PilotScheme};
use chanest::Complex64;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::CliError;

/// The annotated example configuration shipped with the binary.
pub const EXAMPLE_CONFIG: &str = include_str!("../config/example.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PilotArrangement {
    Comb,
    Block,
    None,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfdmSection {
    pub n_subcarriers: usize,
    pub cp_length: usize,
    pub constellation: ConstellationKind,
    pub pilots: PilotArrangement,
    /// Comb pilot spacing in subcarriers.
    pub spacing: usize,
    /// Block pilot period in OFDM symbols.
    pub period: usize,
}

impl Default for OfdmSection {
    fn default() -> Self {
        Self {
            n_subcarriers: 64,
            cp_length: 16,
            constellation: ConstellationKind::Qam16,
            pilots: PilotArrangement::Comb,
            spacing: 4,
            period: 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Rayleigh,
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Exponential,
    Custom,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub model: ChannelKind,
    pub profile: ProfileKind,
    pub n_taps: usize,
    pub decay: f64,
    pub delays: Vec<usize>,
    pub powers: Vec<f64>,
    /// `[re, im]` per tap, for the fixed model.
    pub gains: Vec<[f64; 2]>,
    pub doppler: f64,
    pub n_oscillators: usize,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            model: ChannelKind::Rayleigh,
            profile: ProfileKind::Exponential,
            n_taps: 4,
            decay: 2.0,
            delays: Vec::new(),
            powers: Vec::new(),
            gains: Vec::new(),
            doppler: 0.01,
            n_oscillators: 32,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub methods: Vec<String>,
    /// Explicit grid; replaces the start/stop/step range when present.
    pub snr_db: Option<Vec<f64>>,
    pub snr_start: f64,
    pub snr_stop: f64,
    pub snr_step: f64,
    pub n_trials: usize,
    pub n_symbols: usize,
    pub master_seed: u64,
    pub metrics: Vec<Metric>,
    pub noiseless: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            methods: Vec::new(),
            snr_db: None,
            snr_start: 0.0,
            snr_stop: 30.0,
            snr_step: 5.0,
            n_trials: 500,
            n_symbols: 100,
            master_seed: 1,
            metrics: Metric::ALL.to_vec(),
            noiseless: false,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InterpOnly {
    pub interpolation: Option<Interpolation>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LmsParams {
    pub step: Option<f64>,
    pub interpolation: Option<Interpolation>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SmootherParams {
    pub correlation: Option<CorrelationSource>,
    pub interpolation: Option<Interpolation>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LowrankParams {
    pub rank: Option<usize>,
    pub correlation: Option<CorrelationSource>,
    pub interpolation: Option<Interpolation>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MlParams {
    pub n_taps: Option<usize>,
    pub interpolation: Option<Interpolation>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct KalmanParams {
    pub order: Option<usize>,
    pub feedback: Option<Feedback>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct KalmanVectorParams {
    pub feedback: Option<Feedback>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceParams {
    pub n_blocks: Option<usize>,
    pub n_superblocks: Option<usize>,
}

/// Per-method parameter tables, `[methods.<name>]`.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct MethodsSection {
    pub perfect: NoParams,
    pub ls: InterpOnly,
    pub lms: LmsParams,
    pub mmse: InterpOnly,
    pub lmmse: SmootherParams,
    pub lowrank: LowrankParams,
    pub ml: MlParams,
    pub kalman: KalmanParams,
    pub kalman_vector: KalmanVectorParams,
    pub subspace: SubspaceParams,
}

/// Perfect CSI takes no parameters.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NoParams {}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSection {
    pub n_symbols: usize,
    pub max_lag: usize,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self {
            n_symbols: 100_000,
            max_lag: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateSection {
    pub snr_db: f64,
    pub trial: usize,
    /// OFDM symbol whose response is dumped.
    pub symbol: usize,
}

impl Default for EstimateSection {
    fn default() -> Self {
        Self {
            snr_db: 20.0,
            trial: 0,
            symbol: 0,
        }
    }
}

/// The configuration document as written, before validation.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub ofdm: OfdmSection,
    pub channel: ChannelSection,
    pub sweep: SweepSection,
    pub methods: MethodsSection,
    pub probe: ProbeSection,
    pub estimate: EstimateSection,
}

/// A validated configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub sweep: SweepConfig,
    pub probe: ProbeSection,
    pub estimate: EstimateSection,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses `text`, applies `overrides` and validates the result.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<Config, CliError> {
    let file: FileConfig = if overrides.is_empty() {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))?
    } else {
        let mut table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| config_err(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let merged = toml::to_string(&table).map_err(|e| config_err(e.to_string()))?;
        toml::from_str(&merged).map_err(|e| config_err(format!("after overrides: {e}")))?
    };
    file.validate()
}

/// Writes one `dotted.key=value` pair into `table`. The value is read as a
/// TOML value and taken as a bare string when that fails.
pub fn apply_override(table: &mut Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| config_err(format!("override `{spec}` is not key=value")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').map(str::trim).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("override key `{key}` is malformed")));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };
    let (last, path) = parts.split_last().expect("nonempty key");
    let mut cur = table;
    for p in path {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => {
                return Err(config_err(format!(
                    "override `{key}`: `{p}` is not a section"
                )))
            }
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

impl OfdmSection {
    fn build(&self) -> Result<OfdmConfig, CliError> {
        let n = self.n_subcarriers;
        if n < 2 || !n.is_power_of_two() {
            return Err(config_err(format!(
                "ofdm.n_subcarriers = {n}: must be a power of two of at least 2"
            )));
        }
        if self.cp_length == 0 {
            return Err(config_err("ofdm.cp_length must be at least 1"));
        }
        if self.cp_length >= n {
            return Err(config_err(format!(
                "ofdm.cp_length ({}) must be less than ofdm.n_subcarriers ({n})",
                self.cp_length
            )));
        }
        let pilots = match self.pilots {
            PilotArrangement::Comb => {
                if self.spacing < 2 {
                    return Err(config_err(format!(
                        "ofdm.spacing = {}: must be at least 2",
                        self.spacing
                    )));
                }
                if !n.is_multiple_of(self.spacing) {
                    return Err(config_err(format!(
                        "ofdm.spacing = {}: spacing must divide N (ofdm.n_subcarriers = {n})",
                        self.spacing
                    )));
                }
                PilotScheme::comb(self.spacing)
            }
            PilotArrangement::Block => {
                if self.period < 1 {
                    return Err(config_err("ofdm.period must be at least 1"));
                }
                PilotScheme::block(self.period)
            }
            PilotArrangement::None => PilotScheme::none(),
        };
        OfdmConfig::new(n, self.cp_length, self.constellation, pilots)
            .map_err(|e| config_err(format!("ofdm: {e}")))
    }
}

impl ChannelSection {
    fn build(
        &self,
        cp_length: usize,
    ) -> Result<(PowerDelayProfile, FadingSpec, ChannelModel), CliError> {
        let pdp = match self.profile {
            ProfileKind::Exponential => {
                if self.n_taps < 1 {
                    return Err(config_err("channel.n_taps must be at least 1"));
                }
                if !(self.decay > 0.0) || !self.decay.is_finite() {
                    return Err(config_err(format!(
                        "channel.decay = {}: must be positive and finite",
                        self.decay
                    )));
                }
                PowerDelayProfile::exponential(self.n_taps, self.decay)
            }
            ProfileKind::Custom => {
                if self.delays.len() != self.powers.len() {
                    return Err(config_err(format!(
                        "channel.delays has {} entries but channel.powers has {}",
                        self.delays.len(),
                        self.powers.len()
                    )));
                }
                PowerDelayProfile::normalized(&self.delays, &self.powers)
            }
        }
        .map_err(|e| config_err(format!("channel profile: {e}")))?;
        if pdp.max_delay() > cp_length {
            return Err(config_err(format!(
                "channel max delay {} exceeds ofdm.cp_length ({cp_length})",
                pdp.max_delay()
            )));
        }
        if !(self.doppler >= 0.0) || !self.doppler.is_finite() {
            return Err(config_err(format!(
                "channel.doppler = {}: must be finite and non-negative",
                self.doppler
            )));
        }
        if self.n_oscillators < 8 {
            return Err(config_err(format!(
                "channel.n_oscillators = {}: must be at least 8",
                self.n_oscillators
            )));
        }
        let fading = FadingSpec {
            doppler: self.doppler,
            n_oscillators: self.n_oscillators,
            seed: 0,
        };
        let model = match self.model {
            ChannelKind::Rayleigh => ChannelModel::Rayleigh,
            ChannelKind::Fixed => {
                if self.gains.len() != pdp.taps().len() {
                    return Err(config_err(format!(
                        "channel.gains has {} entries for {} profile taps",
                        self.gains.len(),
                        pdp.taps().len()
                    )));
                }
                ChannelModel::Fixed(
                    self.gains
                        .iter()
                        .map(|&[re, im]| Complex64::new(re, im))
                        .collect(),
                )
            }
        };
        Ok((pdp, fading, model))
    }
}

impl SweepSection {
    fn grid(&self) -> Result<Vec<f64>, CliError> {
        if let Some(g) = &self.snr_db {
            if g.is_empty() {
                return Err(config_err("sweep.snr_db must not be empty"));
            }
            return Ok(g.clone());
        }
        let (a, b, step) = (self.snr_start, self.snr_stop, self.snr_step);
        if !(step > 0.0) || !step.is_finite() {
            return Err(config_err(format!(
                "sweep.snr_step = {step}: must be positive"
            )));
        }
        if !(b >= a) || !a.is_finite() || !b.is_finite() {
            return Err(config_err(format!(
                "sweep.snr_stop ({b}) must be finite and not below sweep.snr_start ({a})"
            )));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| a + step * i as f64).collect())
    }
}

impl MethodsSection {
    fn resolve(&self, method: Method) -> MethodConfig {
        let interp = |i: Option<Interpolation>| i.unwrap_or_default();
        match method {
            Method::Perfect => MethodConfig::Perfect,
            Method::Ls => MethodConfig::Ls {
                interpolation: interp(self.ls.interpolation),
            },
            Method::Lms => MethodConfig::Lms {
                step: self.lms.step.unwrap_or(DEFAULT_LMS_STEP),
                interpolation: interp(self.lms.interpolation),
            },
            Method::Mmse => MethodConfig::Mmse {
                interpolation: interp(self.mmse.interpolation),
            },
            Method::Lmmse => MethodConfig::Lmmse {
                correlation: self.lmmse.correlation.unwrap_or_default(),
                interpolation: interp(self.lmmse.interpolation),
            },
            Method::Lowrank => MethodConfig::Lowrank {
                rank: self.lowrank.rank,
                correlation: self.lowrank.correlation.unwrap_or_default(),
                interpolation: interp(self.lowrank.interpolation),
            },
            Method::Ml => MethodConfig::Ml {
                n_taps: self.ml.n_taps,
                interpolation: interp(self.ml.interpolation),
            },
            Method::Kalman => MethodConfig::Kalman {
                order: self.kalman.order.unwrap_or(DEFAULT_KALMAN_ORDER),
                feedback: self.kalman.feedback.unwrap_or_default(),
            },
            Method::KalmanVector => MethodConfig::KalmanVector {
                feedback: self.kalman_vector.feedback.unwrap_or_default(),
            },
            Method::Subspace => MethodConfig::Subspace {
                n_blocks: self.subspace.n_blocks.unwrap_or(DEFAULT_SUBSPACE_BLOCKS),
                n_superblocks: self.subspace.n_superblocks.unwrap_or(DEFAULT_SUPERBLOCKS),
            },
        }
    }
}

impl FileConfig {
    pub fn validate(&self) -> Result<Config, CliError> {
        let ofdm = self.ofdm.build()?;
        let (pdp, fading, channel) = self.channel.build(ofdm.cp_length)?;
        let s = &self.sweep;
        if s.methods.is_empty() {
            return Err(config_err("sweep.methods must name at least one method"));
        }
        let mut methods = Vec::with_capacity(s.methods.len());
        for name in &s.methods {
            let m: Method = name.parse().map_err(|_| {
                config_err(format!(
                    "sweep.methods: unknown method `{name}` (see list-methods)"
                ))
            })?;
            methods.push(self.methods.resolve(m));
        }
        if s.n_trials < 1 {
            return Err(config_err("sweep.n_trials must be at least 1"));
        }
        if s.n_symbols < 1 {
            return Err(config_err("sweep.n_symbols must be at least 1"));
        }
        if s.metrics.is_empty() {
            return Err(config_err("sweep.metrics must name at least one metric"));
        }
        let sweep = SweepConfig {
            ofdm,
            pdp,
            fading,
            channel,
            methods,
            snr_grid_db: s.grid()?,
            n_trials: s.n_trials,
            n_symbols_per_trial: s.n_symbols,
            master_seed: s.master_seed,
            metrics: s.metrics.clone(),
            noiseless: s.noiseless,
        };
        sweep.validate().map_err(|e| config_err(e.to_string()))?;
        if self.probe.n_symbols <= self.probe.max_lag {
            return Err(config_err(format!(
                "probe.n_symbols ({}) must exceed probe.max_lag ({})",
                self.probe.n_symbols, self.probe.max_lag
            )));
        }
        if !self.estimate.snr_db.is_finite() {
            return Err(config_err("estimate.snr_db must be finite"));
        }
        if self.estimate.symbol >= s.n_symbols {
            return Err(config_err(format!(
                "estimate.symbol ({}) must be below sweep.n_symbols ({})",
                self.estimate.symbol, s.n_symbols
            )));
        }
        Ok(Config {
            sweep,
            probe: self.probe.clone(),
            estimate: self.estimate.clone(),
        })
    }
}
