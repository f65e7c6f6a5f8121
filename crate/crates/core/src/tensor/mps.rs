use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::svd::svd_truncate;
use crate::error::{Error, Result};

/// Largest site count `to_dense` will expand by default (2^26 doubles, 512 MiB).
pub const DEFAULT_DENSE_LIMIT: usize = 26;

/// One MPS tensor, stored as the two `left × right` matrices `A[0]`, `A[1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    mats: [DMatrix<f64>; 2],
}

impl SiteTensor {
    pub fn new(a0: DMatrix<f64>, a1: DMatrix<f64>) -> Result<Self> {
        if a0.shape() != a1.shape() {
            return Err(Error::Shape(format!(
                "physical slices differ in shape: {:?} vs {:?}",
                a0.shape(),
                a1.shape()
            )));
        }
        Ok(SiteTensor { mats: [a0, a1] })
    }

    pub fn left_dim(&self) -> usize {
        self.mats[0].nrows()
    }

    pub fn right_dim(&self) -> usize {
        self.mats[0].ncols()
    }

    /// The matrix `A[s]` for physical value `s ∈ {0, 1}`.
    pub fn mat(&self, s: usize) -> &DMatrix<f64> {
        &self.mats[s]
    }

    /// `[A0; A1]`, shape `2l × r`, row index `s·l + a`.
    pub(crate) fn fuse_left(&self) -> DMatrix<f64> {
        let (l, r) = self.mats[0].shape();
        let mut out = DMatrix::zeros(2 * l, r);
        out.view_mut((0, 0), (l, r)).copy_from(&self.mats[0]);
        out.view_mut((l, 0), (l, r)).copy_from(&self.mats[1]);
        out
    }

    pub(crate) fn from_fused_left(m: &DMatrix<f64>, left: usize) -> Self {
        debug_assert_eq!(m.nrows(), 2 * left);
        let r = m.ncols();
        SiteTensor {
            mats: [
                m.view((0, 0), (left, r)).into_owned(),
                m.view((left, 0), (left, r)).into_owned(),
            ],
        }
    }

    /// `[A0 A1]`, shape `l × 2r`, column index `s·r + b`.
    pub(crate) fn fuse_right(&self) -> DMatrix<f64> {
        let (l, r) = self.mats[0].shape();
        let mut out = DMatrix::zeros(l, 2 * r);
        out.view_mut((0, 0), (l, r)).copy_from(&self.mats[0]);
        out.view_mut((0, r), (l, r)).copy_from(&self.mats[1]);
        out
    }

    pub(crate) fn from_fused_right(m: &DMatrix<f64>, right: usize) -> Self {
        debug_assert_eq!(m.ncols(), 2 * right);
        let l = m.nrows();
        SiteTensor {
            mats: [
                m.view((0, 0), (l, right)).into_owned(),
                m.view((0, right), (l, right)).into_owned(),
            ],
        }
    }

    fn map(&self, f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> Self {
        SiteTensor {
            mats: [f(&self.mats[0]), f(&self.mats[1])],
        }
    }

    /// Max deviation of `Σ_s A[s]ᵀ A[s]` from the identity.
    pub fn left_orthonormality_error(&self) -> f64 {
        let g = self.mats[0].tr_mul(&self.mats[0]) + self.mats[1].tr_mul(&self.mats[1]);
        identity_error(&g)
    }

    /// Max deviation of `Σ_s A[s] A[s]ᵀ` from the identity.
    pub fn right_orthonormality_error(&self) -> f64 {
        let g = &self.mats[0] * self.mats[0].transpose() + &self.mats[1] * self.mats[1].transpose();
        identity_error(&g)
    }
}

fn identity_error(g: &DMatrix<f64>) -> f64 {
    let mut err: f64 = 0.0;
    for ((i, j), v) in g.iter().enumerate().map(|(k, v)| ((k % g.nrows(), k / g.nrows()), v)) {
        let target = if i == j { 1.0 } else { 0.0 };
        err = err.max((v - target).abs());
    }
    err
}

/// Open-boundary matrix product state over qubit sites.
#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    sites: Vec<SiteTensor>,
    /// Orthogonality center, if the state is known to be in mixed-canonical form.
    center: Option<usize>,
}

/// An MPS produced by a truncating sweep.
#[derive(Clone, Debug)]
pub struct TruncationResult {
    pub mps: Mps,
    /// Sum over bonds of the relative discarded squared weight.
    pub discarded_weight: f64,
    pub chi_max: usize,
}

/// Summary of a truncation without the state itself.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationSummary {
    pub discarded_weight: f64,
    pub chi_max: usize,
}

impl TruncationResult {
    pub fn summary(&self) -> TruncationSummary {
        TruncationSummary {
            discarded_weight: self.discarded_weight,
            chi_max: self.chi_max,
        }
    }
}

pub(crate) fn max_bond_at(num_sites: usize, bond: usize) -> usize {
    let exp = bond.min(num_sites - bond);
    if exp >= usize::BITS as usize - 1 {
        usize::MAX
    } else {
        1usize << exp
    }
}

impl Mps {
    /// Build from explicit site tensors, checking boundary and bond dimensions.
    pub fn from_sites(sites: Vec<SiteTensor>) -> Result<Self> {
        let n = sites.len();
        if n == 0 {
            return Err(Error::InvalidInput("an MPS needs at least one site".into()));
        }
        if sites[0].left_dim() != 1 || sites[n - 1].right_dim() != 1 {
            return Err(Error::Shape("boundary bonds must have dimension 1".into()));
        }
        for (k, pair) in sites.windows(2).enumerate() {
            let bond = k + 1;
            let d = pair[0].right_dim();
            if d != pair[1].left_dim() {
                return Err(Error::Shape(format!(
                    "bond {bond}: right dim {d} != left dim {}",
                    pair[1].left_dim()
                )));
            }
            if d > max_bond_at(n, bond) {
                return Err(Error::Shape(format!(
                    "bond {bond}: dimension {d} exceeds the maximal Schmidt rank {}",
                    max_bond_at(n, bond)
                )));
            }
        }
        Ok(Mps { sites, center: None })
    }

    /// The computational basis state `|bits⟩`.
    pub fn product_state(bits: &[u8]) -> Result<Self> {
        let sites = bits
            .iter()
            .map(|&b| {
                let (a0, a1) = match b {
                    0 => (1.0, 0.0),
                    1 => (0.0, 1.0),
                    _ => return Err(Error::InvalidInput(format!("bit value {b}"))),
                };
                SiteTensor::new(
                    DMatrix::from_element(1, 1, a0),
                    DMatrix::from_element(1, 1, a1),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let mut mps = Mps::from_sites(sites)?;
        mps.center = Some(0);
        Ok(mps)
    }

    /// Gaussian random MPS with bond dimensions `min(max_bond, 2^b, 2^(N-b))`.
    pub fn random<R: Rng + ?Sized>(num_sites: usize, max_bond: usize, rng: &mut R) -> Self {
        assert!(num_sites >= 1 && max_bond >= 1);
        let dims: Vec<usize> = (0..=num_sites)
            .map(|b| {
                if b == 0 || b == num_sites {
                    1
                } else {
                    max_bond.min(max_bond_at(num_sites, b))
                }
            })
            .collect();
        let sites = (0..num_sites)
            .map(|k| {
                let mut gen = || DMatrix::from_fn(dims[k], dims[k + 1], |_, _| rng.sample(StandardNormal));
                let a0 = gen();
                let a1 = gen();
                SiteTensor { mats: [a0, a1] }
            })
            .collect();
        Mps { sites, center: None }
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[SiteTensor] {
        &self.sites
    }

    pub fn center(&self) -> Option<usize> {
        self.center
    }

    /// Bond dimensions of the `N-1` internal bonds; entry `b-1` is the bond
    /// with `b` sites to its left.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1]
            .iter()
            .map(SiteTensor::right_dim)
            .collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Exact decomposition of a dense amplitude vector by a left-to-right
    /// sweep of reshapes and truncated SVDs.
    ///
    /// The result is left-canonical with the norm carried by the last site.
    pub fn from_dense(vector: &[f64], cutoff: f64) -> Result<TruncationResult> {
        Self::from_dense_with_rank(vector, cutoff, None)
    }

    pub fn from_dense_with_rank(
        vector: &[f64],
        cutoff: f64,
        max_rank: Option<usize>,
    ) -> Result<TruncationResult> {
        let len = vector.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "vector length {len} is not a power of two >= 2"
            )));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("vector has non-finite entries".into()));
        }
        if vector.iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidInput("cannot encode the zero vector".into()));
        }
        let n = len.trailing_zeros() as usize;

        let mut sites = Vec::with_capacity(n);
        let mut discarded = 0.0;
        let mut chi_max = 1;
        // remainder: r × 2^(n-k)
        let mut rest = DMatrix::from_row_slice(1, len, vector);
        for k in 0..n - 1 {
            let r = rest.nrows();
            let half = rest.ncols() / 2;
            let mut stacked = DMatrix::zeros(2 * r, half);
            stacked.view_mut((0, 0), (r, half)).copy_from(&rest.columns(0, half));
            stacked.view_mut((r, 0), (r, half)).copy_from(&rest.columns(half, half));
            let t = svd_truncate(&stacked, cutoff, max_rank).map_err(|e| e.at_bond(k + 1))?;
            discarded += t.discarded_weight;
            chi_max = chi_max.max(t.rank());
            sites.push(SiteTensor::from_fused_left(&t.u, r));
            rest = t.s_vt();
        }
        sites.push(SiteTensor::from_fused_right(&rest, 1));

        Ok(TruncationResult {
            mps: Mps {
                sites,
                center: Some(n - 1),
            },
            discarded_weight: discarded,
            chi_max,
        })
    }

    pub fn to_dense(&self) -> Result<Vec<f64>> {
        self.to_dense_with_limit(DEFAULT_DENSE_LIMIT)
    }

    /// Contract all bonds into the length-`2^N` amplitude vector.
    pub fn to_dense_with_limit(&self, max_sites: usize) -> Result<Vec<f64>> {
        let n = self.num_sites();
        if n > max_sites {
            return Err(Error::SizeLimit {
                what: "sites for dense contraction",
                value: n,
                limit: max_sites,
            });
        }
        // rows: prefix index, cols: open bond
        let mut acc = DMatrix::from_element(1, 1, 1.0);
        for site in &self.sites {
            let p0 = &acc * site.mat(0);
            let p1 = &acc * site.mat(1);
            let rows = acc.nrows();
            let mut next = DMatrix::zeros(2 * rows, site.right_dim());
            for i in 0..rows {
                next.row_mut(2 * i).copy_from(&p0.row(i));
                next.row_mut(2 * i + 1).copy_from(&p1.row(i));
            }
            acc = next;
        }
        Ok(acc.column(0).iter().copied().collect())
    }

    /// Mixed-canonical form with orthogonality center `center`.
    pub fn canonicalize(&self, center: usize) -> Result<Mps> {
        let n = self.num_sites();
        if center >= n {
            return Err(Error::InvalidInput(format!(
                "center {center} out of range for {n} sites"
            )));
        }
        let mut out = self.clone();
        let (left_from, right_from) = match self.center {
            Some(c) if c <= center => (c, center),
            Some(c) => (center, c),
            None => (0, n - 1),
        };
        for k in left_from..center {
            out.left_orthonormalize(k);
        }
        for k in (center + 1..=right_from).rev() {
            out.right_orthonormalize(k);
        }
        out.center = Some(center);
        Ok(out)
    }

    fn left_orthonormalize(&mut self, k: usize) {
        let l = self.sites[k].left_dim();
        let qr = self.sites[k].fuse_left().qr();
        let (q, r) = (qr.q(), qr.r());
        self.sites[k] = SiteTensor::from_fused_left(&q, l);
        self.sites[k + 1] = self.sites[k + 1].map(|m| &r * m);
    }

    fn right_orthonormalize(&mut self, k: usize) {
        let r = self.sites[k].right_dim();
        let qr = self.sites[k].fuse_right().transpose().qr();
        let (q, rr) = (qr.q(), qr.r());
        self.sites[k] = SiteTensor::from_fused_right(&q.transpose(), r);
        let rt = rr.transpose();
        self.sites[k - 1] = self.sites[k - 1].map(|m| m * &rt);
    }

    /// Largest orthonormality defect of the tensors around the center, or
    /// `None` if no center is recorded.
    pub fn canonical_error(&self) -> Option<f64> {
        let c = self.center?;
        let left = self.sites[..c].iter().map(SiteTensor::left_orthonormality_error);
        let right = self.sites[c + 1..].iter().map(SiteTensor::right_orthonormality_error);
        Some(left.chain(right).fold(0.0, f64::max))
    }

    /// Right-to-left SVD truncation sweep.
    ///
    /// The state is first brought to left-canonical form; each bond is then
    /// truncated with [`svd_truncate`]. The result is right-canonical
    /// (center 0) and is not renormalized.
    pub fn compress(&self, cutoff: f64, max_rank: Option<usize>) -> Result<TruncationResult> {
        let n = self.num_sites();
        let mut out = self.canonicalize(n - 1)?;
        let mut discarded = 0.0;
        for k in (1..n).rev() {
            let r = out.sites[k].right_dim();
            let t = svd_truncate(&out.sites[k].fuse_right(), cutoff, max_rank)
                .map_err(|e| e.at_bond(k))?;
            discarded += t.discarded_weight;
            out.sites[k] = SiteTensor::from_fused_right(&t.vt, r);
            let us = t.u_s();
            out.sites[k - 1] = out.sites[k - 1].map(|m| m * &us);
        }
        out.center = Some(0);
        let chi_max = out.max_bond();
        Ok(TruncationResult {
            mps: out,
            discarded_weight: discarded,
            chi_max,
        })
    }

    /// `⟨a|b⟩` by transfer-matrix contraction.
    pub fn inner(&self, other: &Mps) -> Result<f64> {
        if self.num_sites() != other.num_sites() {
            return Err(Error::Shape(format!(
                "site counts differ: {} vs {}",
                self.num_sites(),
                other.num_sites()
            )));
        }
        let mut env = DMatrix::from_element(1, 1, 1.0);
        for (a, b) in self.sites.iter().zip(&other.sites) {
            env = a.mat(0).tr_mul(&(&env * b.mat(0))) + a.mat(1).tr_mul(&(&env * b.mat(1)));
        }
        Ok(env[(0, 0)])
    }

    pub fn norm(&self) -> f64 {
        match self.center {
            // all other tensors are isometries
            Some(c) => self.sites[c].fuse_left().norm(),
            None => self.inner(self).map(|x| x.max(0.0).sqrt()).unwrap_or(0.0),
        }
    }

    /// Multiply the state by `factor`, applied at the center (or site 0).
    pub fn scaled(&self, factor: f64) -> Mps {
        let mut out = self.clone();
        let k = self.center.unwrap_or(0);
        out.sites[k] = out.sites[k].map(|m| m * factor);
        out
    }

    /// Right-canonical (center 0) copy with unit norm.
    pub fn normalized(&self) -> Result<Mps> {
        let c = self.canonicalize(0)?;
        let norm = c.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Numerical(format!("cannot normalize state of norm {norm}")));
        }
        Ok(c.scaled(1.0 / norm))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vector(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn bell() -> Mps {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Mps::from_dense(&[s, 0.0, 0.0, s], 0.0).unwrap().mps
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn product_state_from_dense() {
        let r = Mps::from_dense(&[1.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        assert_eq!(r.mps.bond_dims(), vec![1]);
        assert_eq!(r.chi_max, 1);
        assert_eq!(r.mps.to_dense().unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn bell_state_from_dense() {
        let mps = bell();
        assert_eq!(mps.bond_dims(), vec![2]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let dense = mps.to_dense().unwrap();
        assert!(max_abs_diff(&dense, &[s, 0.0, 0.0, s]) < 1e-15);
    }

    #[test]
    fn random_1024_roundtrip() {
        let v = random_vector(1 << 10, 1);
        let r = Mps::from_dense(&v, 0.0).unwrap();
        assert_eq!(r.discarded_weight, 0.0);
        let back = r.mps.to_dense().unwrap();
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(max_abs_diff(&v, &back) <= 1e-12 * scale);
        assert_eq!(r.mps.bond_dims(), vec![2, 4, 8, 16, 32, 16, 8, 4, 2]);
    }

    #[test]
    fn from_dense_errors() {
        assert!(matches!(Mps::from_dense(&[0.0; 8], 0.0), Err(Error::InvalidInput(_))));
        assert!(matches!(Mps::from_dense(&[1.0; 6], 0.0), Err(Error::InvalidInput(_))));
        assert!(matches!(Mps::from_dense(&[1.0], 0.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn dense_limit_enforced() {
        let mps = Mps::product_state(&[0; 5]).unwrap();
        assert!(matches!(
            mps.to_dense_with_limit(4),
            Err(Error::SizeLimit { value: 5, limit: 4, .. })
        ));
        assert_eq!(mps.to_dense_with_limit(5).unwrap().len(), 32);
    }

    #[test]
    fn product_state_dense() {
        let mps = Mps::product_state(&[0, 0]).unwrap();
        assert_eq!(mps.to_dense().unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        let mps = Mps::product_state(&[1, 0, 1]).unwrap();
        let dense = mps.to_dense().unwrap();
        assert_eq!(dense[0b101], 1.0);
        assert_eq!(dense.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn canonicalize_product_state() {
        let mps = Mps::product_state(&[0, 1, 1, 0]).unwrap();
        for c in 0..4 {
            let can = mps.canonicalize(c).unwrap();
            assert!(can.canonical_error().unwrap() < 1e-12);
            assert!((can.inner(&mps).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn canonicalize_bell_both_centers() {
        let b = bell();
        let c0 = b.canonicalize(0).unwrap();
        let c1 = c0.canonicalize(1).unwrap();
        assert!((c0.inner(&c1).unwrap() - 1.0).abs() < 1e-12);
        assert!(c1.canonical_error().unwrap() < 1e-12);
    }

    #[test]
    fn canonicalize_random_chi8() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mps = Mps::random(10, 8, &mut rng);
        let norm2 = mps.inner(&mps).unwrap();
        for c in [0, 3, 9] {
            let can = mps.canonicalize(c).unwrap();
            assert!(can.canonical_error().unwrap() < 1e-12, "center {c}");
            let overlap = can.inner(&mps).unwrap();
            assert!((overlap - norm2).abs() <= 1e-12 * norm2);
            assert!((can.norm() - norm2.sqrt()).abs() <= 1e-12 * norm2.sqrt());
        }
        assert!(mps.canonicalize(10).is_err());
    }

    #[test]
    fn compress_cutoff_zero_is_lossless() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mps = Mps::random(8, 6, &mut rng);
        let r = mps.compress(0.0, None).unwrap();
        assert_eq!(r.discarded_weight, 0.0);
        let a = mps.to_dense().unwrap();
        let b = r.mps.to_dense().unwrap();
        let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(max_abs_diff(&a, &b) <= 1e-12 * scale);
        assert!(r.mps.canonical_error().unwrap() < 1e-12);
    }

    #[test]
    fn compress_bell_to_rank_one() {
        let r = bell().compress(0.0, Some(1)).unwrap();
        assert_eq!(r.chi_max, 1);
        assert!((r.discarded_weight - 0.5).abs() < 1e-14);
        assert_eq!(r.mps.bond_dims(), vec![1]);
    }

    #[test]
    fn inner_products() {
        let zz = Mps::product_state(&[0, 0]).unwrap();
        assert!((zz.inner(&zz).unwrap() - 1.0).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((zz.inner(&bell()).unwrap() - s).abs() < 1e-15);
        let three = Mps::product_state(&[0, 0, 0]).unwrap();
        assert!(matches!(zz.inner(&three), Err(Error::Shape(_))));
    }

    #[test]
    fn inner_matches_dense_dot() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = Mps::random(10, 8, &mut rng);
        let b = Mps::random(10, 5, &mut rng);
        let da = a.to_dense().unwrap();
        let db = b.to_dense().unwrap();
        let dot: f64 = da.iter().zip(&db).map(|(x, y)| x * y).sum();
        let scale = (da.iter().map(|x| x * x).sum::<f64>() * db.iter().map(|x| x * x).sum::<f64>()).sqrt();
        assert!((a.inner(&b).unwrap() - dot).abs() <= 1e-12 * scale);
    }

    #[test]
    fn from_sites_validates() {
        let s = |l: usize, r: usize| SiteTensor::new(DMatrix::zeros(l, r), DMatrix::zeros(l, r)).unwrap();
        assert!(Mps::from_sites(vec![s(1, 2), s(2, 1)]).is_ok());
        assert!(Mps::from_sites(vec![s(1, 2), s(3, 1)]).is_err());
        assert!(Mps::from_sites(vec![s(2, 2), s(2, 1)]).is_err());
        // bond 1 of a 2-site chain is at most 2
        assert!(Mps::from_sites(vec![s(1, 3), s(3, 1)]).is_err());
        assert!(Mps::from_sites(vec![]).is_err());
    }

    #[test]
    fn random_respects_bond_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mps = Mps::random(7, 100, &mut rng);
        assert_eq!(mps.bond_dims(), vec![2, 4, 8, 8, 4, 2]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn roundtrip_any_power_of_two(log_len in 1usize..=14, seed in any::<u64>()) {
            let v = random_vector(1 << log_len, seed);
            let back = Mps::from_dense(&v, 0.0).unwrap().mps.to_dense().unwrap();
            let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            prop_assert!(max_abs_diff(&v, &back) <= 1e-12 * scale);
        }

        #[test]
        fn truncation_monotone_and_norm_bounded(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mps = Mps::random(9, 12, &mut rng);
            let norm2 = mps.inner(&mps).unwrap();
            let mut last = 0.0;
            for cutoff in [0.0, 1e-3, 1e-2, 0.05, 0.2, 0.5] {
                let r = mps.compress(cutoff, None).unwrap();
                prop_assert!(r.discarded_weight >= last - 1e-15);
                last = r.discarded_weight;
                let new2 = r.mps.inner(&r.mps).unwrap();
                prop_assert!((new2 - norm2).abs() <= r.discarded_weight * norm2 + 1e-12 * norm2.max(1.0));
                for (b, &d) in r.mps.bond_dims().iter().enumerate() {
                    prop_assert!(d <= max_bond_at(9, b + 1));
                }
            }
        }
    }
}
