//! Entanglement and non-stabilizerness of encoded states.
//!
//! All entropies are in bits.

mod entropy;
mod pauli;
mod sampling;
mod sre;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use entropy::{entropy_profile, von_neumann_bits, EntropyProfile};
pub use pauli::{format_word, parse_word, pauli_expectation, pauli_expectation_parts, Pauli, PauliString};
pub use sampling::{estimate_m2, sample_pauli, sample_xi, PauliSampler};
pub use sre::{sre2_replica, sre_dense, DEFAULT_REPLICA_CHI_LIMIT, DENSE_SRE_MAX_SITES};

use crate::encoding::EncodedState;
use crate::error::{Error, Result};
use crate::tensor::Mps;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MagicMethod {
    Dense,
    Replica,
    Sampled,
}

impl MagicMethod {
    pub fn tag(self) -> &'static str {
        match self {
            MagicMethod::Dense => "dense",
            MagicMethod::Replica => "replica",
            MagicMethod::Sampled => "sampled",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagicEstimate {
    pub m2_bits: f64,
    /// Zero for the exact methods.
    pub stderr_bits: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jackknife_stderr_bits: Option<f64>,
    /// Zero for the exact methods.
    pub n_samples: usize,
    pub method: MagicMethod,
    /// All sampled `Ξ` values were equal, so the standard error is zero.
    pub degenerate: bool,
    pub num_sites: usize,
}

impl MagicEstimate {
    /// Exact result; rounding noise below zero is clipped.
    pub(crate) fn exact(m2_bits: f64, num_sites: usize, method: MagicMethod) -> Self {
        MagicEstimate {
            m2_bits: m2_bits.max(0.0),
            stderr_bits: 0.0,
            jackknife_stderr_bits: None,
            n_samples: 0,
            method,
            degenerate: false,
            num_sites,
        }
    }

    pub fn normalized(&self, normalization: Normalization) -> f64 {
        self.m2_bits / normalization.max_bits(self.num_sites)
    }

    pub fn normalized_stderr(&self, normalization: Normalization) -> f64 {
        self.stderr_bits / normalization.max_bits(self.num_sites)
    }
}

/// `log₂(2^N + 1) - 1`, the largest `M₂` of a pure `N`-qubit state.
pub fn m2_max_bits(num_sites: usize) -> f64 {
    assert!(num_sites >= 1, "m2_max_bits needs at least one site");
    if num_sites >= 64 {
        // 2^N + 1 is not representable; the correction is below f64 resolution
        num_sites as f64 - 1.0
    } else {
        ((1u64 << num_sites) as f64 + 1.0).log2() - 1.0
    }
}

/// Denominator used for the normalized magic `m̃₂`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// [`m2_max_bits`].
    #[default]
    PureStateBound,
    /// `N` bits.
    Qubits,
}

impl Normalization {
    pub fn max_bits(self, num_sites: usize) -> f64 {
        match self {
            Normalization::PureStateBound => m2_max_bits(num_sites),
            Normalization::Qubits => num_sites as f64,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Normalization::PureStateBound => "pure_state_bound",
            Normalization::Qubits => "qubits",
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pure_state_bound" => Ok(Normalization::PureStateBound),
            "qubits" => Ok(Normalization::Qubits),
            other => Err(format!(
                "unknown normalization {other:?} (expected pure_state_bound or qubits)"
            )),
        }
    }
}

/// Which magic estimator a measurement uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MagicChoice {
    /// Dense when small enough, then replica, else sampled.
    #[default]
    Auto,
    Dense,
    Replica,
    Sampled,
    Off,
}

impl fmt::Display for MagicChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MagicChoice::Auto => "auto",
            MagicChoice::Dense => "dense",
            MagicChoice::Replica => "replica",
            MagicChoice::Sampled => "sampled",
            MagicChoice::Off => "off",
        })
    }
}

impl FromStr for MagicChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(MagicChoice::Auto),
            "dense" => Ok(MagicChoice::Dense),
            "replica" => Ok(MagicChoice::Replica),
            "sampled" => Ok(MagicChoice::Sampled),
            "off" => Ok(MagicChoice::Off),
            other => Err(format!(
                "unknown magic method {other:?} (expected auto, dense, replica, sampled or off)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagicConfig {
    pub method: MagicChoice,
    pub n_samples: usize,
    pub seed: u64,
    pub normalization: Normalization,
    /// Hard limit for an explicit replica request.
    pub replica_chi_limit: usize,
    /// `Auto` picks the replica contraction only up to this bond dimension.
    pub replica_auto_chi: usize,
    /// `Auto` picks the dense oracle up to this many sites.
    pub dense_max_sites: usize,
}

impl Default for MagicConfig {
    fn default() -> Self {
        MagicConfig {
            method: MagicChoice::Auto,
            n_samples: 4096,
            seed: 0,
            normalization: Normalization::PureStateBound,
            replica_chi_limit: DEFAULT_REPLICA_CHI_LIMIT,
            replica_auto_chi: 8,
            dense_max_sites: 12,
        }
    }
}

impl MagicConfig {
    pub fn off() -> Self {
        MagicConfig {
            method: MagicChoice::Off,
            ..Default::default()
        }
    }

    pub fn with_method(mut self, method: MagicChoice) -> Self {
        self.method = method;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, n_samples: usize) -> Self {
        self.n_samples = n_samples;
        self
    }

    /// The estimator `Auto` would use for this state.
    pub fn resolve(&self, mps: &Mps) -> Option<MagicMethod> {
        match self.method {
            MagicChoice::Off => None,
            MagicChoice::Dense => Some(MagicMethod::Dense),
            MagicChoice::Replica => Some(MagicMethod::Replica),
            MagicChoice::Sampled => Some(MagicMethod::Sampled),
            MagicChoice::Auto => Some(if mps.num_sites() <= self.dense_max_sites {
                MagicMethod::Dense
            } else if mps.max_bond() <= self.replica_auto_chi.min(self.replica_chi_limit) {
                MagicMethod::Replica
            } else {
                MagicMethod::Sampled
            }),
        }
    }
}

/// `M₂` of `mps` with the configured estimator, or `None` when magic is off.
pub fn measure_magic(mps: &Mps, config: &MagicConfig) -> Result<Option<MagicEstimate>> {
    let Some(method) = config.resolve(mps) else {
        return Ok(None);
    };
    let estimate = match method {
        MagicMethod::Dense => {
            if mps.num_sites() > DENSE_SRE_MAX_SITES {
                return Err(Error::SizeLimit {
                    what: "sites for dense SRE",
                    value: mps.num_sites(),
                    limit: DENSE_SRE_MAX_SITES,
                });
            }
            sre_dense(&mps.to_dense()?, 2.0)?
        }
        MagicMethod::Replica => sre2_replica(mps, config.replica_chi_limit)?,
        MagicMethod::Sampled => estimate_m2(mps, config.n_samples, config.seed)?,
    };
    Ok(Some(estimate))
}

/// Everything measured on one encoded state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub num_sites: usize,
    pub entropy: EntropyProfile,
    pub magic: Option<MagicEstimate>,
    pub normalization: Normalization,
    pub bond_dims: Vec<usize>,
    pub chi_max: usize,
    pub discarded_weight: f64,
}

impl ResourceReport {
    pub fn m2_norm(&self) -> Option<f64> {
        self.magic.as_ref().map(|m| m.normalized(self.normalization))
    }

    pub fn m2_norm_stderr(&self) -> Option<f64> {
        self.magic.as_ref().map(|m| m.normalized_stderr(self.normalization))
    }
}

pub fn resource_report(state: &EncodedState, config: &MagicConfig) -> Result<ResourceReport> {
    Ok(ResourceReport {
        num_sites: state.num_sites(),
        entropy: entropy_profile(&state.mps)?,
        magic: measure_magic(&state.mps, config)?,
        normalization: config.normalization,
        bond_dims: state.mps.bond_dims(),
        chi_max: state.truncation.chi_max,
        discarded_weight: state.truncation.discarded_weight,
    })
}
