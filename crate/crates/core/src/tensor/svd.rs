use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Rank-truncated thin SVD `m ≈ u · diag(singular_values) · vt`.
#[derive(Clone, Debug)]
pub struct Truncated {
    pub u: DMatrix<f64>,
    /// Kept singular values, descending.
    pub singular_values: Vec<f64>,
    pub vt: DMatrix<f64>,
    /// Discarded squared weight relative to the total squared weight.
    pub discarded_weight: f64,
}

impl Truncated {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `diag(s) · vt`, the factor carrying the norm when `u` is kept as an isometry.
    pub fn s_vt(&self) -> DMatrix<f64> {
        let mut out = self.vt.clone();
        for (mut row, &s) in out.row_iter_mut().zip(&self.singular_values) {
            row *= s;
        }
        out
    }

    /// `u · diag(s)`.
    pub fn u_s(&self) -> DMatrix<f64> {
        let mut out = self.u.clone();
        for (mut col, &s) in out.column_iter_mut().zip(&self.singular_values) {
            col *= s;
        }
        out
    }
}

/// Truncated SVD with a relative cutoff.
///
/// Keeps the smallest rank `r ≥ 1` whose discarded squared singular values sum
/// to at most `cutoff² · Σ s²`, then caps `r` at `max_rank`. Exact zero
/// singular values are always dropped, so `cutoff = 0` removes only exact
/// rank deficiency and reports a discarded weight of zero.
pub fn svd_truncate(m: &DMatrix<f64>, cutoff: f64, max_rank: Option<usize>) -> Result<Truncated> {
    if !(cutoff >= 0.0 && cutoff.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "cutoff must be finite and non-negative, got {cutoff}"
        )));
    }
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::Shape(format!(
            "cannot factor an empty {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }

    // nalgebra's bidiagonal SVD loses accuracy on some matrices with nearly
    // degenerate singular values, so the factorization itself runs in faer.
    let a = faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let svd = a.thin_svd().map_err(|_| Error::SvdFailure { bond: None })?;
    let (fu, fs, fv) = (svd.U(), svd.S(), svd.V());
    let k = fs.dim();
    let s: Vec<f64> = (0..k).map(|i| fs[i]).collect();
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::SvdFailure { bond: None });
    }

    let total: f64 = s.iter().map(|x| x * x).sum();
    // tail[r] = Σ_{i ≥ r} s_i²
    let mut tail = vec![0.0; k + 1];
    for i in (0..k).rev() {
        tail[i] = tail[i + 1] + s[i] * s[i];
    }
    let budget = cutoff * cutoff * total;
    let mut rank = (1..=k).find(|&r| tail[r] <= budget).unwrap_or(k);
    if let Some(cap) = max_rank {
        rank = rank.min(cap.max(1));
    }
    let discarded_weight = if total > 0.0 { tail[rank] / total } else { 0.0 };

    Ok(Truncated {
        u: DMatrix::from_fn(m.nrows(), rank, |i, j| fu[(i, j)]),
        singular_values: s[..rank].to_vec(),
        vt: DMatrix::from_fn(rank, m.ncols(), |i, j| fv[(j, i)]),
        discarded_weight,
    })
}
