//! Perfect sampling of Pauli strings from `Ξ_P = ⟨P⟩² / 2^N`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::pauli::{Pauli, PauliString};
use super::{MagicEstimate, MagicMethod};
use crate::error::{Error, Result};
use crate::tensor::Mps;

/// Samples per independent RNG stream.
const CHUNK: usize = 256;

/// Draws Pauli strings site by site from the exact conditionals.
///
/// With the state right-canonical and normalized, the marginal of a prefix
/// `μ_1..μ_k` is `‖T_μ‖²_F / 2^k`, where `T_μ` is the partial transfer
/// matrix of the prefix. Each step therefore only needs the four candidate
/// transfer matrices and their Frobenius norms.
pub struct PauliSampler {
    mps: Mps,
}

impl PauliSampler {
    pub fn new(mps: &Mps) -> Result<Self> {
        Ok(PauliSampler {
            mps: mps.normalized()?,
        })
    }

    pub fn num_sites(&self) -> usize {
        self.mps.num_sites()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PauliString {
        self.sample_traced(rng).0
    }

    /// Like [`sample`](Self::sample), also returning the conditional
    /// distribution used at every site.
    pub fn sample_traced<R: Rng + ?Sized>(&self, rng: &mut R) -> (PauliString, Vec<[f64; 4]>) {
        let n = self.mps.num_sites();
        let mut t = DMatrix::from_element(1, 1, 1.0);
        let mut word = Vec::with_capacity(n);
        let mut conditionals = Vec::with_capacity(n);
        let mut probability = 1.0;
        for site in self.mps.sites() {
            let t_norm2 = t.norm_squared();
            let a0 = site.mat(0);
            let a1 = site.mat(1);
            let u0 = &t * a0;
            let u1 = &t * a1;
            let w00 = a0.tr_mul(&u0);
            let w01 = a0.tr_mul(&u1);
            let w10 = a1.tr_mul(&u0);
            let w11 = a1.tr_mul(&u1);
            let candidates = [&w00 + &w11, &w01 + &w10, &w10 - &w01, &w00 - &w11];
            let mut p = [0.0; 4];
            for (pk, c) in p.iter_mut().zip(&candidates) {
                *pk = c.norm_squared() / (2.0 * t_norm2);
            }
            conditionals.push(p);
            let total: f64 = p.iter().sum();
            let r = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut mu = 3;
            for (k, &pk) in p.iter().enumerate() {
                acc += pk;
                if r < acc {
                    mu = k;
                    break;
                }
            }
            // guard against landing on a zero-probability tail entry
            while p[mu] == 0.0 && mu > 0 {
                mu -= 1;
            }
            probability *= p[mu];
            word.push(Pauli::from_index(mu as u8).expect("index < 4"));
            let next = candidates.into_iter().nth(mu).expect("index < 4");
            let scale = next.norm();
            t = if scale > 0.0 { next / scale } else { next };
        }
        let sign = t[(0, 0)].signum();
        let k = word.iter().filter(|&&p| p == Pauli::Y).count();
        let expectation = if k % 2 == 1 {
            0.0
        } else {
            let phase = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            phase * sign * ((1u64 << n.min(63)) as f64 * probability).sqrt()
        };
        (
            PauliString {
                word,
                probability,
                expectation,
            },
            conditionals,
        )
    }
}

/// One stream-seeded draw, as used by [`estimate_m2`].
pub fn sample_pauli<R: Rng + ?Sized>(mps: &Mps, rng: &mut R) -> Result<PauliString> {
    Ok(PauliSampler::new(mps)?.sample(rng))
}

/// Draw `n_samples` values of `Ξ_P`.
///
/// Samples are drawn in fixed-size chunks, chunk `c` from a ChaCha8 generator
/// seeded with `seed` on stream `c`, so the output does not depend on the
/// thread count.
pub fn sample_xi(mps: &Mps, n_samples: usize, seed: u64) -> Result<Vec<f64>> {
    let sampler = PauliSampler::new(mps)?;
    let chunks = n_samples.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(n_samples - c * CHUNK);
            (0..len).map(|_| sampler.sample(&mut rng).probability).collect()
        })
        .collect();
    Ok(parts.concat())
}

/// Sampled estimate `M̂₂ = -log₂(mean Ξ) - N` with a delta-method standard
/// error and a jackknife cross-check.
pub fn estimate_m2(mps: &Mps, n_samples: usize, seed: u64) -> Result<MagicEstimate> {
    if n_samples < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples, got {n_samples}"
        )));
    }
    let n = mps.num_sites();
    let xi = sample_xi(mps, n_samples, seed)?;
    let count = xi.len() as f64;
    let mean = xi.iter().sum::<f64>() / count;
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::Numerical(format!("mean sampled probability is {mean}")));
    }
    let var = xi.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0);
    let sd = var.sqrt();
    let ln2 = std::f64::consts::LN_2;
    let m2 = -mean.log2() - n as f64;
    let degenerate = sd <= 1e-12 * mean;
    let (stderr, jackknife) = if degenerate {
        (0.0, 0.0)
    } else {
        let total: f64 = xi.iter().sum();
        let loo: Vec<f64> = xi
            .iter()
            .map(|x| -((total - x) / (count - 1.0)).log2())
            .collect();
        let loo_mean = loo.iter().sum::<f64>() / count;
        let jk_var = (count - 1.0) / count * loo.iter().map(|v| (v - loo_mean).powi(2)).sum::<f64>();
        (sd / count.sqrt() / (mean * ln2), jk_var.sqrt())
    };
    Ok(MagicEstimate {
        m2_bits: m2,
        stderr_bits: stderr,
        jackknife_stderr_bits: Some(jackknife),
        n_samples,
        method: MagicMethod::Sampled,
        degenerate,
        num_sites: n,
    })
}
