//! Channel estimators.
//!
//! Pilot-aided: least squares, one-tap LMS tracking, MMSE, the simplified
//! LMMSE smoother and its low-rank truncation, and the ML subspace
//! projection. Tracking: vector and per-subcarrier Kalman filters over an AR
//! fading model. Blind: second-order-statistics subspace identification.
//!
//! Frequency-domain quantities follow the crate's unitary transform, under
//! which a tap vector `h` on delays `τ_l` produces `H_k = Σ_l h_l e^{−j2πkτ_l/N}`
//! and noise keeps its per-sample variance on every subcarrier.

mod correlation;
mod interp;
mod kalman;
mod ls;
mod ml;
mod mmse;
mod subspace;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelError;
use crate::numkernel::{ComplexMatrix, LinalgError};

pub use correlation::{estimate_lmmse, estimate_lowrank, FreqCorrelation, SpectralSmoother};
pub use interp::{interpolate_comb, Interpolation};
pub use kalman::{
    kalman_step_scalar, kalman_step_vector, KalmanMode, KalmanState, DIAGONAL_LOADING,
};
pub use ls::{estimate_ls, track_lms, LmsTracker};
pub use ml::{estimate_ml, MlProjector};
pub use mmse::{estimate_mmse, MmseEstimator};
pub use subspace::{
    resolve_scale_ambiguity, subspace_identify, PilotReference, SubspaceConfig, SubspaceEstimate,
    SubspaceWorkspace,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("zero pilot symbol at position {0}")]
    ZeroPilot(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("rank {rank} outside 1..={max}")]
    InvalidRank { rank: usize, max: usize },
    #[error("tap count {taps} outside 1..={max}")]
    TapsOutOfRange { taps: usize, max: usize },
    #[error("channel order {order} exceeds prefix x blocks = {limit}; channel not identifiable")]
    NotIdentifiable { order: usize, limit: usize },
    #[error("need {needed} received samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("pilot positions must start at 0 and be uniformly spaced across N")]
    NonUniformSpacing,
    #[error("estimate is identically zero")]
    ZeroEstimate,
    #[error("Kalman innovation variance {0:e} is not positive")]
    KalmanInnovation(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Estimator tags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// True channel, the reference every estimator is compared with.
    Perfect,
    Ls,
    Lms,
    Mmse,
    Lmmse,
    Lowrank,
    Ml,
    Kalman,
    KalmanVector,
    Subspace,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Perfect,
        Method::Ls,
        Method::Lms,
        Method::Mmse,
        Method::Lmmse,
        Method::Lowrank,
        Method::Ml,
        Method::Kalman,
        Method::KalmanVector,
        Method::Subspace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Perfect => "perfect",
            Method::Ls => "ls",
            Method::Lms => "lms",
            Method::Mmse => "mmse",
            Method::Lmmse => "lmmse",
            Method::Lowrank => "lowrank",
            Method::Ml => "ml",
            Method::Kalman => "kalman",
            Method::KalmanVector => "kalman_vector",
            Method::Subspace => "subspace",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Method::Perfect => "genie channel knowledge (reference)",
            Method::Ls => "least squares Y/X at pilots",
            Method::Lms => "one-tap LMS per pilot subcarrier, LS start",
            Method::Mmse => "MMSE with known power delay profile and noise variance",
            Method::Lmmse => "simplified LMMSE smoother R(R + beta/SNR I)^-1 on LS",
            Method::Lowrank => "rank-p truncation of the LMMSE smoother",
            Method::Ml => "projection of LS onto the first N_h transform columns",
            Method::Kalman => "per-subcarrier AR(p) Kalman tracker",
            Method::KalmanVector => "vector AR(1) Kalman tracker over all subcarriers",
            Method::Subspace => "blind noise-subspace identification, pilot-resolved scale",
        }
    }

    /// Needs pilot cells in the frame. The blind method uses one pilot to
    /// fix its scale; the Kalman trackers need pilots only when driven by
    /// decisions.
    pub fn needs_pilots(self) -> bool {
        !matches!(
            self,
            Method::Perfect | Method::Kalman | Method::KalmanVector
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method '{s}'"))
    }
}

/// Estimated frequency response over a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelEstimate {
    /// `n_symbols × N`.
    pub h_hat: ComplexMatrix,
    pub method: Method,
    pub per_symbol_valid: Vec<bool>,
}

impl ChannelEstimate {
    pub fn new(h_hat: ComplexMatrix, method: Method) -> Self {
        let n = h_hat.rows();
        Self {
            h_hat,
            method,
            per_symbol_valid: vec![true; n],
        }
    }

    pub fn row(&self, symbol: usize) -> &[Complex64] {
        self.h_hat.row(symbol)
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<(), EstimateError> {
    if expected != got {
        Err(EstimateError::LengthMismatch { expected, got })
    } else {
        Ok(())
    }
}
