//! Exact stabilizer Rényi entropies: dense enumeration and replica contraction.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::pauli::{transfer, Pauli};
use super::{MagicEstimate, MagicMethod};
use crate::error::{Error, Result};
use crate::tensor::{Mps, SiteTensor};

/// Largest site count accepted by [`sre_dense`].
pub const DENSE_SRE_MAX_SITES: usize = 14;

/// Default bond-dimension limit for [`sre2_replica`].
pub const DEFAULT_REPLICA_CHI_LIMIT: usize = 12;

/// In-place fast Walsh–Hadamard transform (unnormalized).
fn walsh_hadamard(f: &mut [f64]) {
    let mut h = 1;
    while h < f.len() {
        for block in f.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Exact `M_α` in bits by enumerating all `4^N` Pauli strings.
///
/// For each X-pattern `x` the expectations `⟨X^x Z^z⟩` over all `z` are one
/// Walsh–Hadamard transform of `ψ_b ψ_{b⊕x}`.
pub fn sre_dense(vector: &[f64], alpha: f64) -> Result<MagicEstimate> {
    let len = vector.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "vector length {len} is not a power of two >= 2"
        )));
    }
    let n = len.trailing_zeros() as usize;
    if n > DENSE_SRE_MAX_SITES {
        return Err(Error::SizeLimit {
            what: "sites for dense SRE",
            value: n,
            limit: DENSE_SRE_MAX_SITES,
        });
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    let norm2: f64 = vector.iter().map(|v| v * v).sum();
    if norm2 == 0.0 || !norm2.is_finite() {
        return Err(Error::InvalidInput("vector must be nonzero and finite".into()));
    }
    let denom = len as f64 * norm2 * norm2;
    let entropic = alpha == 1.0;

    let partial: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|x| {
            let mut f: Vec<f64> = (0..len).map(|b| vector[b] * vector[b ^ x]).collect();
            walsh_hadamard(&mut f);
            f.iter()
                .map(|g| g * g / denom)
                .filter(|&xi| xi > 0.0)
                .map(|xi| if entropic { -xi * xi.log2() } else { xi.powf(alpha) })
                .sum::<f64>()
        })
        .collect();
    let total: f64 = partial.iter().sum();
    let m = if entropic {
        total - n as f64
    } else {
        total.log2() / (1.0 - alpha) - n as f64
    };
    Ok(MagicEstimate::exact(m, n, MagicMethod::Dense))
}

/// Orthonormal basis of symmetric (`sym = true`) or antisymmetric `d × d`
/// matrices, as index pairs `(i, j)` with `i ≤ j` (resp. `i < j`).
fn sector_basis(d: usize, sym: bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..d {
        for j in i..d {
            if i < j || sym {
                out.push((i, j));
            }
        }
    }
    out
}

fn basis_matrix(d: usize, (i, j): (usize, usize), sym: bool) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(d, d);
    if i == j {
        b[(i, i)] = 1.0;
    } else {
        let w = std::f64::consts::FRAC_1_SQRT_2;
        b[(i, j)] = w;
        b[(j, i)] = if sym { w } else { -w };
    }
    b
}

fn coordinate(g: &DMatrix<f64>, (i, j): (usize, usize), sym: bool) -> f64 {
    if i == j {
        g[(i, i)]
    } else if sym {
        (g[(i, j)] + g[(j, i)]) * std::f64::consts::FRAC_1_SQRT_2
    } else {
        (g[(i, j)] - g[(j, i)]) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// Row-major matrix of `T ↦ Σ σ̃_{ss'} A[s]ᵀ T A[s']` between sector bases.
fn sector_map(site: &SiteTensor, op: Pauli, sym_in: bool, sym_out: bool) -> (Vec<f64>, usize, usize) {
    let (l, r) = (site.left_dim(), site.right_dim());
    let basis_in = sector_basis(l, sym_in);
    let basis_out = sector_basis(r, sym_out);
    let (d_in, d_out) = (basis_in.len(), basis_out.len());
    let mut m = vec![0.0; d_out * d_in];
    for (p, &pair) in basis_in.iter().enumerate() {
        let g = transfer(&basis_matrix(l, pair, sym_in), site, op);
        for (q, &qpair) in basis_out.iter().enumerate() {
            m[q * d_in + p] = coordinate(&g, qpair, sym_out);
        }
    }
    (m, d_out, d_in)
}

/// `dst[rest, o] = alpha · Σ_i src[i, rest] · m[o, i] + beta · dst[rest, o]`.
fn contract_slowest_leg(src: &[f64], m: &[f64], d_out: usize, d_in: usize, alpha: f64, beta: f64, dst: &mut [f64]) {
    let rest = src.len() / d_in;
    debug_assert_eq!(dst.len(), rest * d_out);
    debug_assert_eq!(m.len(), d_out * d_in);
    // SAFETY: the strides describe `rest × d_in`, `d_in × d_out` and
    // `rest × d_out` views that lie inside `src`, `m` and `dst`.
    unsafe {
        matrixmultiply::dgemm(
            rest,
            d_in,
            d_out,
            alpha,
            src.as_ptr(),
            1,
            rest as isize,
            m.as_ptr(),
            1,
            d_in as isize,
            beta,
            dst.as_mut_ptr(),
            d_out as isize,
            1,
        );
    }
}

/// `out += alpha · M^{⊗4} e`, for `e` a 4-leg tensor with all legs `d_in`.
///
/// Each contraction consumes the slowest leg and appends the new leg as the
/// fastest, so after four steps the leg order is restored.
fn apply4_accumulate(
    e: &[f64],
    m: &[f64],
    d_out: usize,
    d_in: usize,
    alpha: f64,
    out: &mut [f64],
    scratch: &mut (Vec<f64>, Vec<f64>),
) {
    let (a, b) = scratch;
    let len1 = d_in.pow(3) * d_out;
    let len2 = d_in.pow(2) * d_out.pow(2);
    a.resize(len1.max(d_in * d_out.pow(3)), 0.0);
    b.resize(len2, 0.0);
    contract_slowest_leg(e, m, d_out, d_in, 1.0, 0.0, &mut a[..len1]);
    contract_slowest_leg(&a[..len1], m, d_out, d_in, 1.0, 0.0, &mut b[..len2]);
    let len3 = d_in * d_out.pow(3);
    contract_slowest_leg(&b[..len2], m, d_out, d_in, 1.0, 0.0, &mut a[..len3]);
    contract_slowest_leg(&a[..len3], m, d_out, d_in, alpha, 1.0, out);
}

/// Exact `M₂` in bits by contracting four replicas of the state.
///
/// The 4-replica environment is a sum of `T^{⊗4}` over Pauli prefixes, where
/// each per-replica transfer matrix `T` is symmetric or antisymmetric. The
/// environment is therefore stored as a symmetric part on `Sym^{⊗4}` and an
/// antisymmetric part on `Anti^{⊗4}`, which cuts memory from `χ⁸` to about
/// `(χ(χ+1)/2)⁴`. Fails with a size-limit error above `chi_limit`.
pub fn sre2_replica(mps: &Mps, chi_limit: usize) -> Result<MagicEstimate> {
    let chi = mps.max_bond();
    if chi > chi_limit {
        return Err(Error::SizeLimit {
            what: "bond dimension for replica contraction",
            value: chi,
            limit: chi_limit,
        });
    }
    let state = mps.normalized()?;
    let n = state.num_sites();

    let mut e_sym = vec![1.0];
    let mut e_anti: Vec<f64> = Vec::new();
    let mut scratch = (Vec::new(), Vec::new());
    for site in state.sites() {
        let (ds_in, da_in) = sector_dims(site.left_dim());
        let (ds_out, da_out) = sector_dims(site.right_dim());
        let mut new_sym = vec![0.0; ds_out.pow(4)];
        let mut new_anti = vec![0.0; da_out.pow(4)];
        for op in [Pauli::I, Pauli::X, Pauli::Z] {
            if ds_in > 0 && ds_out > 0 {
                let (m, d_out, d_in) = sector_map(site, op, true, true);
                apply4_accumulate(&e_sym, &m, d_out, d_in, 0.5, &mut new_sym, &mut scratch);
            }
            if da_in > 0 && da_out > 0 {
                let (m, d_out, d_in) = sector_map(site, op, false, false);
                apply4_accumulate(&e_anti, &m, d_out, d_in, 0.5, &mut new_anti, &mut scratch);
            }
        }
        // Ỹ swaps the sectors
        if da_in > 0 && ds_out > 0 {
            let (m, d_out, d_in) = sector_map(site, Pauli::Y, false, true);
            apply4_accumulate(&e_anti, &m, d_out, d_in, 0.5, &mut new_sym, &mut scratch);
        }
        if ds_in > 0 && da_out > 0 {
            let (m, d_out, d_in) = sector_map(site, Pauli::Y, true, false);
            apply4_accumulate(&e_sym, &m, d_out, d_in, 0.5, &mut new_anti, &mut scratch);
        }
        e_sym = new_sym;
        e_anti = new_anti;
    }
    // W = 2^-N Σ_P ⟨P⟩⁴ and M₂ = -log₂ W
    let w = e_sym[0];
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::Numerical(format!("replica contraction gave {w}")));
    }
    Ok(MagicEstimate::exact(-w.log2(), n, MagicMethod::Replica))
}

fn sector_dims(d: usize) -> (usize, usize) {
    (d * (d + 1) / 2, d * (d.saturating_sub(1)) / 2)
}
