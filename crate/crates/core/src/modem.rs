//! Bit mapping, pilot grids and the cyclic-prefix OFDM chain.
//!
//! Labeling: BPSK sends bit 0 as `+1`. QPSK and 16-QAM split each bit group
//! into an in-phase half (first bits) and a quadrature half, each Gray coded
//! onto the PAM levels. For 16-QAM the per-axis labels `00, 01, 11, 10` map to
//! `−3, −1, +1, +3`, all divided by `√10`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkernel::{dft_in_place, ComplexMatrix, LinalgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModemError {
    #[error("bit count {bits} is not a multiple of {per_symbol} bits per symbol")]
    IndivisibleBits { bits: usize, per_symbol: usize },
    #[error("need {needed} payload bits, got {got}")]
    InsufficientBits { needed: usize, got: usize },
    #[error("pilot spacing {spacing} must be at least 2 and divide N = {n}")]
    BadSpacing { spacing: usize, n: usize },
    #[error("pilot period must be at least 1")]
    BadPeriod,
    #[error("N = {0} must be a power of two")]
    NotPowerOfTwo(usize),
    #[error("cyclic prefix length {cp} must satisfy 0 < cp < N = {n}")]
    BadCyclicPrefix { cp: usize, n: usize },
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstellationKind {
    Bpsk,
    /// Also used for 4-QAM.
    Qpsk,
    Qam16,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    kind: ConstellationKind,
    /// Indexed by the bit label read MSB first.
    points: Vec<Complex64>,
    bits_per_symbol: usize,
}

fn gray_pam4(b0: u8, b1: u8) -> f64 {
    match (b0, b1) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        _ => 3.0,
    }
}

impl Constellation {
    pub fn new(kind: ConstellationKind) -> Self {
        let (bits_per_symbol, points) = match kind {
            ConstellationKind::Bpsk => {
                (1, vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)])
            }
            ConstellationKind::Qpsk => {
                let a = std::f64::consts::FRAC_1_SQRT_2;
                let level = |b: usize| if b == 0 { a } else { -a };
                (
                    2,
                    (0..4)
                        .map(|l| Complex64::new(level(l >> 1), level(l & 1)))
                        .collect(),
                )
            }
            ConstellationKind::Qam16 => {
                let scale = 1.0 / 10f64.sqrt();
                let bit = |l: usize, i: usize| ((l >> (3 - i)) & 1) as u8;
                (
                    4,
                    (0..16)
                        .map(|l| {
                            Complex64::new(
                                gray_pam4(bit(l, 0), bit(l, 1)) * scale,
                                gray_pam4(bit(l, 2), bit(l, 3)) * scale,
                            )
                        })
                        .collect(),
                )
            }
        };
        Self {
            kind,
            points,
            bits_per_symbol,
        }
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// `E|x|²`, one for every built-in constellation.
    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    /// `E|x|² · E|1/x|²` over equiprobable points; 17/9 for 16-QAM.
    pub fn beta(&self) -> f64 {
        let inv =
            self.points.iter().map(|p| 1.0 / p.norm_sqr()).sum::<f64>() / self.points.len() as f64;
        self.average_energy() * inv
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Index of the closest point.
    pub fn decide(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    pub fn label_bits(&self, label: usize, out: &mut Vec<u8>) {
        for i in (0..self.bits_per_symbol).rev() {
            out.push(((label >> i) & 1) as u8);
        }
    }
}

pub fn map_bits(bits: &[u8], c: &Constellation) -> Result<Vec<Complex64>, ModemError> {
    let k = c.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(ModemError::IndivisibleBits {
            bits: bits.len(),
            per_symbol: k,
        });
    }
    Ok(bits
        .chunks(k)
        .map(|group| {
            let label = group
                .iter()
                .fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
            c.point(label)
        })
        .collect())
}

/// Minimum-distance hard decisions.
pub fn demap_symbols(symbols: &[Complex64], c: &Constellation) -> Vec<u8> {
    let mut out = Vec::with_capacity(symbols.len() * c.bits_per_symbol());
    for &z in symbols {
        c.label_bits(c.decide(z), &mut out);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PilotKind {
    /// Whole OFDM symbols at indices `≡ 0 (mod period)`.
    Block {
        period: usize,
    },
    /// Subcarriers `0, spacing, 2·spacing, …` of every symbol.
    Comb {
        spacing: usize,
    },
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PilotScheme {
    pub kind: PilotKind,
    pub value: Complex64,
}

impl PilotScheme {
    pub fn block(period: usize) -> Self {
        Self {
            kind: PilotKind::Block { period },
            value: Complex64::new(1.0, 0.0),
        }
    }

    pub fn comb(spacing: usize) -> Self {
        Self {
            kind: PilotKind::Comb { spacing },
            value: Complex64::new(1.0, 0.0),
        }
    }

    pub fn none() -> Self {
        Self {
            kind: PilotKind::None,
            value: Complex64::new(1.0, 0.0),
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), ModemError> {
        match self.kind {
            PilotKind::Block { period } if period < 1 => Err(ModemError::BadPeriod),
            PilotKind::Comb { spacing } if spacing < 2 || !n.is_multiple_of(spacing) => {
                Err(ModemError::BadSpacing { spacing, n })
            }
            _ => Ok(()),
        }
    }

    pub fn is_pilot(&self, symbol: usize, subcarrier: usize) -> bool {
        match self.kind {
            PilotKind::Block { period } => symbol.is_multiple_of(period),
            PilotKind::Comb { spacing } => subcarrier.is_multiple_of(spacing),
            PilotKind::None => false,
        }
    }

    pub fn is_pilot_symbol(&self, symbol: usize) -> bool {
        matches!(self.kind, PilotKind::Block { period } if symbol.is_multiple_of(period))
    }

    /// Pilot subcarriers within one comb symbol, empty otherwise.
    pub fn comb_positions(&self, n: usize) -> Vec<usize> {
        match self.kind {
            PilotKind::Comb { spacing } => (0..n).step_by(spacing).collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "OfdmConfigRepr", try_from = "OfdmConfigRepr")]
pub struct OfdmConfig {
    pub n_subcarriers: usize,
    pub cp_length: usize,
    pub constellation: Constellation,
    pub pilots: PilotScheme,
}

impl OfdmConfig {
    pub fn new(
        n_subcarriers: usize,
        cp_length: usize,
        constellation: ConstellationKind,
        pilots: PilotScheme,
    ) -> Result<Self, ModemError> {
        let cfg = Self {
            n_subcarriers,
            cp_length,
            constellation: Constellation::new(constellation),
            pilots,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ModemError> {
        let n = self.n_subcarriers;
        if !n.is_power_of_two() {
            return Err(ModemError::NotPowerOfTwo(n));
        }
        if self.cp_length == 0 || self.cp_length >= n {
            return Err(ModemError::BadCyclicPrefix {
                cp: self.cp_length,
                n,
            });
        }
        self.pilots.validate(n)
    }

    pub fn symbol_len(&self) -> usize {
        self.n_subcarriers + self.cp_length
    }

    /// Number of payload bits a frame of `n_symbols` carries.
    pub fn payload_bits(&self, n_symbols: usize) -> usize {
        let n = self.n_subcarriers;
        let data_cells = (0..n_symbols)
            .map(|s| (0..n).filter(|&k| !self.pilots.is_pilot(s, k)).count())
            .sum::<usize>();
        data_cells * self.constellation.bits_per_symbol()
    }
}

#[derive(Serialize, Deserialize)]
struct OfdmConfigRepr {
    n_subcarriers: usize,
    cp_length: usize,
    constellation: ConstellationKind,
    pilots: PilotScheme,
}

impl From<OfdmConfig> for OfdmConfigRepr {
    fn from(c: OfdmConfig) -> Self {
        Self {
            n_subcarriers: c.n_subcarriers,
            cp_length: c.cp_length,
            constellation: c.constellation.kind(),
            pilots: c.pilots,
        }
    }
}

impl TryFrom<OfdmConfigRepr> for OfdmConfig {
    type Error = ModemError;

    fn try_from(r: OfdmConfigRepr) -> Result<Self, Self::Error> {
        OfdmConfig::new(r.n_subcarriers, r.cp_length, r.constellation, r.pilots)
    }
}

/// Frequency-domain frame: rows are OFDM symbols, columns subcarriers.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub grid: ComplexMatrix,
    pub pilot_mask: Vec<bool>,
    pub payload_bits: Vec<u8>,
}

impl Frame {
    pub fn n_symbols(&self) -> usize {
        self.grid.rows()
    }

    pub fn n_subcarriers(&self) -> usize {
        self.grid.cols()
    }

    pub fn is_pilot(&self, symbol: usize, subcarrier: usize) -> bool {
        self.pilot_mask[symbol * self.grid.cols() + subcarrier]
    }

    /// Data cells in row-major order.
    pub fn data_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.grid.cols();
        (0..self.grid.rows())
            .flat_map(move |s| (0..n).map(move |k| (s, k)))
            .filter(move |&(s, k)| !self.is_pilot(s, k))
    }
}

/// Places pilots and fills the remaining cells with mapped payload in
/// row-major order. Bits beyond the frame capacity are ignored.
pub fn assemble_frame(
    bits: &[u8],
    cfg: &OfdmConfig,
    n_symbols: usize,
) -> Result<Frame, ModemError> {
    cfg.validate()?;
    let n = cfg.n_subcarriers;
    let needed = cfg.payload_bits(n_symbols);
    if bits.len() < needed {
        return Err(ModemError::InsufficientBits {
            needed,
            got: bits.len(),
        });
    }
    let payload = &bits[..needed];
    let symbols = map_bits(payload, &cfg.constellation)?;
    let mut grid = ComplexMatrix::zeros(n_symbols.max(1), n);
    let mut mask = vec![false; n_symbols.max(1) * n];
    let mut data = symbols.into_iter();
    for s in 0..n_symbols {
        for k in 0..n {
            if cfg.pilots.is_pilot(s, k) {
                grid[(s, k)] = cfg.pilots.value;
                mask[s * n + k] = true;
            } else {
                grid[(s, k)] = data.next().expect("payload sized to data cells");
            }
        }
    }
    Ok(Frame {
        grid,
        pilot_mask: mask,
        payload_bits: payload.to_vec(),
    })
}

/// Unitary IDFT of one symbol with the last `cp_length` samples prepended.
pub fn ofdm_modulate(
    freq_row: &[Complex64],
    cfg: &OfdmConfig,
) -> Result<Vec<Complex64>, ModemError> {
    let n = cfg.n_subcarriers;
    if freq_row.len() != n {
        return Err(ModemError::LengthMismatch {
            expected: n,
            got: freq_row.len(),
        });
    }
    let mut body = freq_row.to_vec();
    dft_in_place(&mut body, true)?;
    let mut out = Vec::with_capacity(n + cfg.cp_length);
    out.extend_from_slice(&body[n - cfg.cp_length..]);
    out.extend_from_slice(&body);
    Ok(out)
}

/// Drops the cyclic prefix and applies the unitary DFT.
pub fn ofdm_demodulate(
    time_row: &[Complex64],
    cfg: &OfdmConfig,
) -> Result<Vec<Complex64>, ModemError> {
    let expected = cfg.symbol_len();
    if time_row.len() != expected {
        return Err(ModemError::LengthMismatch {
            expected,
            got: time_row.len(),
        });
    }
    let mut body = time_row[cfg.cp_length..].to_vec();
    dft_in_place(&mut body, false)?;
    Ok(body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const KINDS: [ConstellationKind; 3] = [
        ConstellationKind::Bpsk,
        ConstellationKind::Qpsk,
        ConstellationKind::Qam16,
    ];

    #[test]
    fn unit_energy_and_point_counts() {
        for kind in KINDS {
            let con = Constellation::new(kind);
            assert_eq!(con.points().len(), 1 << con.bits_per_symbol());
            assert!((con.average_energy() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_values() {
        assert!((Constellation::new(ConstellationKind::Qam16).beta() - 17.0 / 9.0).abs() < 1e-12);
        assert!((Constellation::new(ConstellationKind::Qpsk).beta() - 1.0).abs() < 1e-12);
        assert!((Constellation::new(ConstellationKind::Bpsk).beta() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn labeling_examples() {
        let bpsk = Constellation::new(ConstellationKind::Bpsk);
        assert_eq!(map_bits(&[0], &bpsk).unwrap(), vec![c(1.0, 0.0)]);
        assert_eq!(map_bits(&[1], &bpsk).unwrap(), vec![c(-1.0, 0.0)]);
        let qpsk = Constellation::new(ConstellationKind::Qpsk);
        let p = map_bits(&[0, 0], &qpsk).unwrap()[0];
        assert!((p - c(1.0, 1.0) / 2f64.sqrt()).norm() < 1e-15);
        let qam = Constellation::new(ConstellationKind::Qam16);
        let p = map_bits(&[0, 0, 0, 0], &qam).unwrap()[0];
        assert!((p - c(-3.0, -3.0) / 10f64.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn indivisible_bits_rejected() {
        let qam = Constellation::new(ConstellationKind::Qam16);
        assert_eq!(
            map_bits(&[0, 1, 1], &qam),
            Err(ModemError::IndivisibleBits {
                bits: 3,
                per_symbol: 4
            })
        );
    }

    #[test]
    fn qam16_gray_neighbours() {
        let qam = Constellation::new(ConstellationKind::Qam16);
        let d_min = 2.0 / 10f64.sqrt();
        let mut pairs = 0;
        for i in 0..16 {
            for j in i + 1..16 {
                if ((qam.point(i) - qam.point(j)).norm() - d_min).abs() < 1e-9 {
                    pairs += 1;
                    assert_eq!((i ^ j).count_ones(), 1, "labels {i:04b} {j:04b}");
                }
            }
        }
        assert_eq!(pairs, 24);
    }

    #[test]
    fn demap_decisions() {
        let bpsk = Constellation::new(ConstellationKind::Bpsk);
        assert_eq!(demap_symbols(&[c(0.3, 0.0)], &bpsk), vec![0]);
        let qam = Constellation::new(ConstellationKind::Qam16);
        for label in 0..16 {
            let mut bits = Vec::new();
            qam.label_bits(label, &mut bits);
            let noisy = qam.point(label) + c(0.05, 0.05);
            assert_eq!(demap_symbols(&[noisy], &qam), bits);
            assert_eq!(demap_symbols(&map_bits(&bits, &qam).unwrap(), &qam), bits);
        }
    }

    fn config(n: usize, pilots: PilotScheme) -> OfdmConfig {
        OfdmConfig::new(n, n / 4, ConstellationKind::Qam16, pilots).unwrap()
    }

    #[test]
    fn comb_geometry() {
        let cfg = config(8, PilotScheme::comb(4));
        let bits = vec![0u8; cfg.payload_bits(3)];
        let frame = assemble_frame(&bits, &cfg, 3).unwrap();
        for s in 0..3 {
            let cols: Vec<usize> = (0..8).filter(|&k| frame.is_pilot(s, k)).collect();
            assert_eq!(cols, vec![0, 4]);
        }
        assert_eq!(frame.pilot_mask.iter().filter(|&&m| m).count(), 3 * 8 / 4);
    }

    #[test]
    fn block_geometry() {
        let cfg = config(4, PilotScheme::block(2));
        let bits = vec![1u8; cfg.payload_bits(3)];
        let frame = assemble_frame(&bits, &cfg, 3).unwrap();
        for s in 0..3 {
            let all = (0..4).all(|k| frame.is_pilot(s, k));
            assert_eq!(all, s != 1);
            if all {
                assert!((0..4).all(|k| frame.grid[(s, k)] == c(1.0, 0.0)));
            }
        }
    }

    #[test]
    fn frame_errors() {
        let cfg = config(8, PilotScheme::comb(4));
        assert!(matches!(
            assemble_frame(&[0, 1], &cfg, 2),
            Err(ModemError::InsufficientBits { .. })
        ));
        let bad = OfdmConfig {
            pilots: PilotScheme::comb(3),
            ..cfg.clone()
        };
        assert_eq!(
            assemble_frame(&[0; 64], &bad, 1),
            Err(ModemError::BadSpacing { spacing: 3, n: 8 })
        );
        assert_eq!(
            OfdmConfig::new(8, 8, ConstellationKind::Bpsk, PilotScheme::none()).unwrap_err(),
            ModemError::BadCyclicPrefix { cp: 8, n: 8 }
        );
        assert_eq!(
            OfdmConfig::new(12, 3, ConstellationKind::Bpsk, PilotScheme::none()).unwrap_err(),
            ModemError::NotPowerOfTwo(12)
        );
    }

    #[test]
    fn modulate_properties() {
        let cfg = config(16, PilotScheme::none());
        let zeros = vec![c(0.0, 0.0); 16];
        assert!(ofdm_modulate(&zeros, &cfg)
            .unwrap()
            .iter()
            .all(|z| z.norm() == 0.0));

        let x: Vec<_> = (0..16).map(|k| c(k as f64, 1.0 - k as f64)).collect();
        let tx = ofdm_modulate(&x, &cfg).unwrap();
        assert_eq!(tx.len(), 20);
        assert_eq!(&tx[0..4], &tx[16..20]);
        let back = ofdm_demodulate(&tx, &cfg).unwrap();
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(matches!(
            ofdm_modulate(&x[..15], &cfg),
            Err(ModemError::LengthMismatch {
                expected: 16,
                got: 15
            })
        ));
        assert!(ofdm_demodulate(&x, &cfg).is_err());
    }

    #[test]
    fn demodulate_dc_and_shift() {
        let cfg = config(8, PilotScheme::none());
        let constant = vec![c(0.5, -0.25); 10];
        let spec = ofdm_demodulate(&constant, &cfg).unwrap();
        assert!((spec[0] - c(0.5, -0.25) * 8f64.sqrt()).norm() < 1e-14);
        assert!(spec[1..].iter().all(|z| z.norm() < 1e-14));

        // circular delay by one sample multiplies bin k by e^{-j2πk/N}
        let body: Vec<_> = (0..8).map(|i| c((i * i) as f64 * 0.1, i as f64)).collect();
        let delayed: Vec<_> = (0..8).map(|i| body[(i + 7) % 8]).collect();
        let with_cp = |b: &[Complex64]| [&b[6..], b].concat();
        let a = ofdm_demodulate(&with_cp(&body), &cfg).unwrap();
        let d = ofdm_demodulate(&with_cp(&delayed), &cfg).unwrap();
        for k in 0..8 {
            let phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / 8.0);
            assert!((d[k] - a[k] * phase).norm() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn identity_channel_round_trip(
            kind_idx in 0usize..3,
            comb in any::<bool>(),
            seed_bits in prop::collection::vec(0u8..2, 4096),
        ) {
            let pilots = if comb { PilotScheme::comb(4) } else { PilotScheme::block(3) };
            let cfg = OfdmConfig::new(16, 4, KINDS[kind_idx], pilots).unwrap();
            let n_symbols = 5;
            let frame = assemble_frame(&seed_bits, &cfg, n_symbols).unwrap();
            let mut rx_data = Vec::new();
            let mut grid_data = Vec::new();
            for s in 0..n_symbols {
                let tx = ofdm_modulate(frame.grid.row(s), &cfg).unwrap();
                let rx = ofdm_demodulate(&tx, &cfg).unwrap();
                for k in 0..16 {
                    if !frame.is_pilot(s, k) {
                        rx_data.push(rx[k]);
                        grid_data.push(frame.grid[(s, k)]);
                    }
                }
            }
            prop_assert_eq!(demap_symbols(&grid_data, &cfg.constellation), frame.payload_bits.clone());
            prop_assert_eq!(demap_symbols(&rx_data, &cfg.constellation), frame.payload_bits);
        }
    }
}
