use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::EstimateError;
use crate::numkernel::{eig_hermitian, ComplexMatrix};

/// Geometry of the blind identifier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceConfig {
    /// Carriers per OFDM block.
    pub m: usize,
    /// Cyclic prefix length.
    pub p: usize,
    /// Channel order bound; `L + 1` taps are estimated.
    pub l: usize,
    /// Blocks per super-vector.
    pub n_blocks: usize,
    /// Super-vectors averaged into the sample autocorrelation.
    pub n_superblocks: usize,
}

impl SubspaceConfig {
    pub fn block_len(&self) -> usize {
        self.m + self.p
    }

    /// Length `N·K − L` of one super-vector.
    pub fn vector_len(&self) -> usize {
        self.n_blocks * self.block_len() - self.l
    }

    /// Dimension `P·N − L` of the noise subspace.
    pub fn noise_dim(&self) -> usize {
        self.p * self.n_blocks - self.l
    }

    pub fn samples_needed(&self) -> usize {
        self.n_superblocks * self.n_blocks * self.block_len()
    }

    pub fn validate(&self) -> Result<(), EstimateError> {
        if self.m == 0 || self.n_blocks == 0 || self.n_superblocks == 0 {
            return Err(EstimateError::InvalidParameter(
                "carriers, blocks and superblocks must be positive".into(),
            ));
        }
        let limit = self.p * self.n_blocks;
        if self.l > limit {
            return Err(EstimateError::NotIdentifiable {
                order: self.l,
                limit,
            });
        }
        Ok(())
    }
}

/// Intermediate matrices of one identification run.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceWorkspace {
    pub m: usize,
    pub p: usize,
    pub l: usize,
    pub n_blocks: usize,
    /// Sample autocorrelation of the super-vectors.
    pub r_r: ComplexMatrix,
    /// Noise-subspace eigenvectors, one per column.
    pub g_noise: ComplexMatrix,
    pub psi: ComplexMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceEstimate {
    /// Unit-norm taps `h_0..h_L`, defined up to a complex scalar.
    pub h: Vec<Complex64>,
    /// Smallest eigenvalues of `Ψ` too close to separate.
    pub low_confidence: bool,
    /// Eigenvalues of `Ψ`, ascending.
    pub psi_eigenvalues: Vec<f64>,
    pub workspace: SubspaceWorkspace,
}

/// Modulation matrix of one block in the stacking order of the
/// super-vector, which runs backwards in time: row `i` is the sample
/// `K − 1 − i` of the block, so `W[i][m] = e^{j2πm(K−1−i−P)/M}`.
fn block_modulator(m: usize, p: usize) -> ComplexMatrix {
    let k = m + p;
    ComplexMatrix::from_fn(k, m, |i, col| {
        let t = (k - 1 - i) as i64 - p as i64;
        let phase = 2.0 * PI * (col as i64 * t).rem_euclid(m as i64) as f64 / m as f64;
        Complex64::from_polar(1.0, phase)
    })
}

/// Super-vector starting at sample `start`: samples `start + NK − 1` down to
/// `start + L`. The `L` oldest samples of the window are dropped because they
/// depend on the preceding window.
fn super_vector(received: &[Complex64], start: usize, cfg: &SubspaceConfig) -> Vec<Complex64> {
    let span = cfg.n_blocks * cfg.block_len();
    (0..cfg.vector_len())
        .map(|i| received[start + span - 1 - i])
        .collect()
}

/// Blind identification of the taps from second-order statistics.
/// `received` must start on a block boundary.
pub fn subspace_identify(
    received: &[Complex64],
    cfg: &SubspaceConfig,
) -> Result<SubspaceEstimate, EstimateError> {
    cfg.validate()?;
    let needed = cfg.samples_needed();
    if received.len() < needed {
        return Err(EstimateError::InsufficientSamples {
            needed,
            got: received.len(),
        });
    }
    let dim = cfg.vector_len();
    let k = cfg.block_len();
    let span = cfg.n_blocks * k;

    let mut r_r = ComplexMatrix::zeros(dim, dim);
    for w in 0..cfg.n_superblocks {
        let r = super_vector(received, w * span, cfg);
        for i in 0..dim {
            for j in i..dim {
                r_r[(i, j)] += r[i] * r[j].conj();
            }
        }
    }
    let inv = 1.0 / cfg.n_superblocks as f64;
    for i in 0..dim {
        for j in i..dim {
            let v = r_r[(i, j)] * inv;
            r_r[(i, j)] = v;
            r_r[(j, i)] = v.conj();
        }
    }
    r_r.symmetrize();

    let eig = eig_hermitian(&r_r)?;
    let noise_dim = cfg.noise_dim();
    let cols: Vec<usize> = (0..noise_dim).collect();
    let rows: Vec<usize> = (0..dim).collect();
    let g_noise = eig.vectors.submatrix(&rows, &cols);

    // conj(W̃) W̃^T is block diagonal with K×K blocks
    let w = block_modulator(cfg.m, cfg.p);
    let t_block = w.conj().matmul(&w.transpose());

    let taps = cfg.l + 1;
    let mut psi = ComplexMatrix::zeros(taps, taps);
    for col in 0..noise_dim {
        let g = g_noise.column(col);
        // B̄[j][l] = conj(g[j − l]), so that g^H 𝓗 = (B̄ h)^T
        let b = ComplexMatrix::from_fn(span, taps, |j, l| {
            if j >= l && j - l < dim {
                g[j - l].conj()
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let mut tb = ComplexMatrix::zeros(span, taps);
        for blk in 0..cfg.n_blocks {
            let off = blk * k;
            for i in 0..k {
                for ip in 0..k {
                    let t = t_block[(i, ip)];
                    if t.re == 0.0 && t.im == 0.0 {
                        continue;
                    }
                    for l in 0..taps {
                        tb[(off + i, l)] += t * b[(off + ip, l)];
                    }
                }
            }
        }
        psi = psi.add(&b.adjoint().matmul(&tb));
    }
    psi.symmetrize();

    let psi_eig = eig_hermitian(&psi)?;
    let h = psi_eig.vectors.column(0);
    let lambda_max = psi_eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let low_confidence = match psi_eig.values.get(1) {
        Some(&second) => second - psi_eig.values[0] < 1e-9 * lambda_max || lambda_max == 0.0,
        None => false,
    };
    Ok(SubspaceEstimate {
        h,
        low_confidence,
        psi_eigenvalues: psi_eig.values,
        workspace: SubspaceWorkspace {
            m: cfg.m,
            p: cfg.p,
            l: cfg.l,
            n_blocks: cfg.n_blocks,
            r_r,
            g_noise,
            psi,
        },
    })
}

/// One known pilot observation used to pin down the blind scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PilotReference {
    pub subcarrier: usize,
    pub n_subcarriers: usize,
    pub x: Complex64,
    pub y: Complex64,
}

/// Scales `h_hat` (taps on delays `0..`) so that its response on the
/// reference subcarrier equals `y / x`.
pub fn resolve_scale_ambiguity(
    h_hat: &[Complex64],
    reference: &PilotReference,
) -> Result<Vec<Complex64>, EstimateError> {
    if reference.x.norm_sqr() == 0.0 {
        return Err(EstimateError::ZeroPilot(reference.subcarrier));
    }
    let n = reference.n_subcarriers;
    if n == 0 || reference.subcarrier >= n {
        return Err(EstimateError::InvalidParameter(format!(
            "reference subcarrier {} outside 0..{n}",
            reference.subcarrier
        )));
    }
    let response: Complex64 = h_hat
        .iter()
        .enumerate()
        .map(|(l, &h)| {
            h * Complex64::from_polar(
                1.0,
                -2.0 * PI * ((reference.subcarrier * l) % n) as f64 / n as f64,
            )
        })
        .sum();
    let energy: f64 = h_hat.iter().map(|z| z.norm_sqr()).sum();
    if energy == 0.0 || response.norm_sqr() <= 1e-24 * energy {
        return Err(EstimateError::ZeroEstimate);
    }
    let scale = reference.y / reference.x / response;
    Ok(h_hat.iter().map(|&h| h * scale).collect())
}
