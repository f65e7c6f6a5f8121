use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Mps, SiteTensor};

/// Single-site Pauli operator, numbered `0..4` as I, X, Y, Z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_index(mu: u8) -> Option<Pauli> {
        Pauli::ALL.get(mu as usize).copied()
    }

    /// Real matrix `σ̃` with `σ = σ̃` for I, X, Z and `Y = i·σ̃`.
    pub(crate) fn real_matrix(self) -> [[f64; 2]; 2] {
        match self {
            Pauli::I => [[1.0, 0.0], [0.0, 1.0]],
            Pauli::X => [[0.0, 1.0], [1.0, 0.0]],
            Pauli::Y => [[0.0, -1.0], [1.0, 0.0]],
            Pauli::Z => [[1.0, 0.0], [0.0, -1.0]],
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// Parse a word such as `"XIZY"`.
pub fn parse_word(s: &str) -> Result<Vec<Pauli>> {
    s.chars()
        .map(|c| match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::InvalidInput(format!("not a Pauli letter: {other:?}"))),
        })
        .collect()
}

pub fn format_word(word: &[Pauli]) -> String {
    word.iter().map(ToString::to_string).collect()
}

/// A sampled Pauli string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    pub word: Vec<Pauli>,
    /// `Ξ_P = ⟨P⟩² / 2^N`.
    pub probability: f64,
    pub expectation: f64,
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(PauliString {
            word: parse_word(s)?,
            probability: f64::NAN,
            expectation: f64::NAN,
        })
    }
}

/// `E ↦ Σ_{ss'} σ̃_{ss'} A[s]ᵀ E A[s']`.
pub(crate) fn transfer(env: &DMatrix<f64>, site: &SiteTensor, op: Pauli) -> DMatrix<f64> {
    let m = op.real_matrix();
    let mut out = DMatrix::zeros(site.right_dim(), site.right_dim());
    for s in 0..2 {
        let bra = site.mat(s).tr_mul(env);
        for t in 0..2 {
            if m[s][t] != 0.0 {
                out += m[s][t] * (&bra * site.mat(t));
            }
        }
    }
    out
}

/// Real and imaginary parts of `⟨ψ|P|ψ⟩ / ⟨ψ|ψ⟩`.
///
/// For a real state the contraction with the real `σ̃` matrices is real, so
/// the result is `i^k` times a real number where `k` counts Y factors.
pub fn pauli_expectation_parts(mps: &Mps, word: &[Pauli]) -> Result<(f64, f64)> {
    if word.len() != mps.num_sites() {
        return Err(Error::Shape(format!(
            "word of length {} for {} sites",
            word.len(),
            mps.num_sites()
        )));
    }
    let mut env = DMatrix::from_element(1, 1, 1.0);
    for (site, &op) in mps.sites().iter().zip(word) {
        env = transfer(&env, site, op);
    }
    let norm2 = mps.inner(mps)?;
    if norm2 <= 0.0 {
        return Err(Error::Numerical("state has zero norm".into()));
    }
    let c = env[(0, 0)] / norm2;
    let k = word.iter().filter(|&&p| p == Pauli::Y).count();
    Ok(match k % 4 {
        0 => (c, 0.0),
        1 => (0.0, c),
        2 => (-c, 0.0),
        _ => (0.0, -c),
    })
}

/// `⟨P⟩` for a real state; words with an odd number of Y factors give 0.
pub fn pauli_expectation(mps: &Mps, word: &[Pauli]) -> Result<f64> {
    pauli_expectation_parts(mps, word).map(|(re, _)| re)
}
