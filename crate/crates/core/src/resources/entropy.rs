use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::tensor::{svd_truncate, Mps, SiteTensor};

/// Schmidt spectra and von Neumann entropies at every internal bond.
///
/// Entry `b - 1` of each list belongs to bond `b`, the cut with `b` sites on
/// its left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub schmidt_spectra: Vec<Vec<f64>>,
    pub entropies_bits: Vec<f64>,
    /// `max_b S_b / min(b, N - b)`.
    pub max_normalized: f64,
    /// 1-based bond attaining `max_normalized`; `None` for a single site.
    pub argmax_bond: Option<usize>,
}

impl EntropyProfile {
    /// Entropy in bits at the maximizing bond.
    pub fn max_bits(&self) -> f64 {
        self.argmax_bond
            .map(|b| self.entropies_bits[b - 1])
            .unwrap_or(0.0)
    }
}

/// `-Σ p log₂ p` over `p = λ²`, with `0 log 0 = 0`.
pub fn von_neumann_bits(spectrum: &[f64]) -> f64 {
    let s: f64 = -spectrum
        .iter()
        .map(|l| l * l)
        .filter(|&p| p > 0.0)
        .map(|p| p * p.log2())
        .sum::<f64>();
    s.max(0.0)
}

pub fn entropy_profile(mps: &Mps) -> Result<EntropyProfile> {
    let n = mps.num_sites();
    let state = mps.normalized()?;
    let mut sites: Vec<SiteTensor> = state.sites().to_vec();
    let mut spectra = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n - 1 {
        let left = sites[k].left_dim();
        let t = svd_truncate(&sites[k].fuse_left(), 0.0, None).map_err(|e| e.at_bond(k + 1))?;
        let norm = t.singular_values.iter().map(|s| s * s).sum::<f64>().sqrt();
        spectra.push(t.singular_values.iter().map(|s| s / norm).collect::<Vec<_>>());
        sites[k] = SiteTensor::from_fused_left(&t.u, left);
        let svt = t.s_vt();
        let next = &sites[k + 1];
        sites[k + 1] = SiteTensor::new(&svt * next.mat(0), &svt * next.mat(1))?;
    }
    let entropies: Vec<f64> = spectra.iter().map(|s| von_neumann_bits(s)).collect();
    let mut max_normalized = 0.0;
    let mut argmax_bond = None;
    for (i, &s) in entropies.iter().enumerate() {
        let b = i + 1;
        let normalized = s / b.min(n - b) as f64;
        if argmax_bond.is_none() || normalized > max_normalized {
            max_normalized = normalized;
            argmax_bond = Some(b);
        }
    }
    Ok(EntropyProfile {
        schmidt_spectra: spectra,
        entropies_bits: entropies,
        max_normalized,
        argmax_bond,
    })
}
