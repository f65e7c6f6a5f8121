//! Grid ↔ MPS encoding.
//!
//! A `2^nx × 2^ny` grid is addressed by an `(nx + ny)`-bit index. Sites
//! `0..nx` carry the bits of the x (row) index, most significant first, and
//! sites `nx..nx+ny` carry the bits of the y (column) index in the order
//! chosen by [`Ordering`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Mps, TruncationResult};
use crate::tensor::DEFAULT_DENSE_LIMIT;

pub use crate::tensor::TruncationSummary;

/// Default singular-value cutoff.
pub const DEFAULT_CUTOFF: f64 = 1e-8;

/// Physical extent and periodicity of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub periodic: (bool, bool),
}

impl Default for Domain {
    fn default() -> Self {
        Domain {
            x: (0.0, 1.0),
            y: (0.0, 1.0),
            periodic: (true, true),
        }
    }
}

/// A real scalar field on a `2^nx × 2^ny` grid, stored row-major with rows
/// indexed by x.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2D {
    values: Vec<f64>,
    nx: usize,
    ny: usize,
    pub domain: Domain,
    pub label: String,
    /// Total value shift applied by [`shift_field`] so far.
    shift: f64,
}

fn log2_exact(n: usize, what: &str) -> Result<usize> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Shape(format!(
            "{what} extent {n} is not a power of two >= 2"
        )));
    }
    Ok(n.trailing_zeros() as usize)
}

impl Field2D {
    pub fn new(values: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        let nx = log2_exact(rows, "row")?;
        let ny = log2_exact(cols, "column")?;
        if values.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} grid",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value {} at ({}, {})",
                values[pos],
                pos / cols,
                pos % cols
            )));
        }
        Ok(Field2D {
            values,
            nx,
            ny,
            domain: Domain::default(),
            label: String::new(),
            shift: 0.0,
        })
    }

    /// Field with `values[i][j] = f(i, j)` on a `2^nx × 2^ny` grid.
    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let (rows, cols) = (1usize << nx, 1usize << ny);
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Field2D::new(values, rows, cols)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn rows(&self) -> usize {
        1 << self.nx
    }

    pub fn cols(&self) -> usize {
        1 << self.ny
    }

    pub fn num_sites(&self) -> usize {
        self.nx + self.ny
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols() + j]
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// New grid shape, metadata carried over.
    pub(crate) fn reshaped(&self, values: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        let mut out = Field2D::new(values, rows, cols)?;
        out.domain = self.domain.clone();
        out.label = self.label.clone();
        out.shift = self.shift;
        Ok(out)
    }
}

/// Placement of the y-index bits on the MPS chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ordering {
    /// x block then y block, both most significant bit first ("→→").
    #[default]
    #[serde(rename = "fwd")]
    Forward,
    /// x block most significant first, y block least significant first ("→←").
    #[serde(rename = "revy")]
    ReverseY,
}

impl Ordering {
    pub const ALL: [Ordering; 2] = [Ordering::Forward, Ordering::ReverseY];

    pub fn tag(self) -> &'static str {
        match self {
            Ordering::Forward => "fwd",
            Ordering::ReverseY => "revy",
        }
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Ordering {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fwd" => Ok(Ordering::Forward),
            "revy" => Ok(Ordering::ReverseY),
            other => Err(format!("unknown ordering {other:?} (expected fwd or revy)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
}

/// Which grid-index bit each MPS site carries: `(axis, bit significance)`.
pub fn site_order(nx: usize, ny: usize, ordering: Ordering) -> Vec<(Axis, usize)> {
    let xs = (0..nx).rev().map(|b| (Axis::X, b));
    let ys: Vec<(Axis, usize)> = match ordering {
        Ordering::Forward => (0..ny).rev().map(|b| (Axis::Y, b)).collect(),
        Ordering::ReverseY => (0..ny).map(|b| (Axis::Y, b)).collect(),
    };
    xs.chain(ys).collect()
}

/// Per-axis contributions to the MPS vector index: grid point `(i, j)` lands
/// at `x_part[i] + y_part[j]`.
fn index_maps(nx: usize, ny: usize, ordering: Ordering) -> (Vec<usize>, Vec<usize>) {
    let order = site_order(nx, ny, ordering);
    let n = order.len();
    let mut x_part = vec![0usize; 1 << nx];
    let mut y_part = vec![0usize; 1 << ny];
    for (site, &(axis, bit)) in order.iter().enumerate() {
        let weight = 1usize << (n - 1 - site);
        let part = match axis {
            Axis::X => &mut x_part,
            Axis::Y => &mut y_part,
        };
        for (coord, slot) in part.iter_mut().enumerate() {
            if coord >> bit & 1 == 1 {
                *slot += weight;
            }
        }
    }
    (x_part, y_part)
}

/// Flatten a field into the length-`2^N` amplitude vector for `ordering`.
pub fn flatten(field: &Field2D, ordering: Ordering) -> Vec<f64> {
    let (x_part, y_part) = index_maps(field.nx, field.ny, ordering);
    let mut out = vec![0.0; field.values.len()];
    let cols = field.cols();
    for (i, &xp) in x_part.iter().enumerate() {
        for (j, &yp) in y_part.iter().enumerate() {
            out[xp + yp] = field.values[i * cols + j];
        }
    }
    out
}

fn unflatten(vector: &[f64], nx: usize, ny: usize, ordering: Ordering) -> Vec<f64> {
    let (x_part, y_part) = index_maps(nx, ny, ordering);
    let cols = 1usize << ny;
    let mut out = vec![0.0; vector.len()];
    for (i, &xp) in x_part.iter().enumerate() {
        for (j, &yp) in y_part.iter().enumerate() {
            out[i * cols + j] = vector[xp + yp];
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingConfig {
    pub ordering: Ordering,
    pub cutoff: f64,
    pub max_rank: Option<usize>,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        EncodingConfig {
            ordering: Ordering::Forward,
            cutoff: DEFAULT_CUTOFF,
            max_rank: None,
        }
    }
}

impl EncodingConfig {
    pub fn with_ordering(mut self, ordering: Ordering) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = cutoff;
        self
    }
}

/// Unit-norm MPS for a field, plus what is needed to undo the encoding.
#[derive(Clone, Debug)]
pub struct EncodedState {
    /// Normalized state, right-canonical (orthogonality center 0).
    pub mps: Mps,
    /// 2-norm of the flattened field.
    pub scale: f64,
    pub config: EncodingConfig,
    pub truncation: TruncationSummary,
    pub nx: usize,
    pub ny: usize,
    pub domain: Domain,
    pub label: String,
    pub shift: f64,
}

impl EncodedState {
    pub fn num_sites(&self) -> usize {
        self.nx + self.ny
    }
}

pub fn encode_field(field: &Field2D, config: &EncodingConfig) -> Result<EncodedState> {
    if !(config.cutoff >= 0.0 && config.cutoff.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "cutoff must be finite and non-negative, got {}",
            config.cutoff
        )));
    }
    let scale = field.norm();
    if scale == 0.0 {
        return Err(Error::InvalidInput("cannot encode an all-zero field".into()));
    }
    let vector: Vec<f64> = flatten(field, config.ordering)
        .into_iter()
        .map(|v| v / scale)
        .collect();
    let exact = Mps::from_dense(&vector, 0.0)?;
    let TruncationResult {
        mps,
        discarded_weight,
        chi_max,
    } = exact.mps.compress(config.cutoff, config.max_rank)?;
    let norm = mps.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Numerical(format!("compressed state has norm {norm}")));
    }
    Ok(EncodedState {
        mps: mps.scaled(1.0 / norm),
        scale,
        config: *config,
        truncation: TruncationSummary {
            discarded_weight,
            chi_max,
        },
        nx: field.nx,
        ny: field.ny,
        domain: field.domain.clone(),
        label: field.label.clone(),
        shift: field.shift,
    })
}

pub fn decode_field(state: &EncodedState) -> Result<Field2D> {
    decode_field_with_limit(state, DEFAULT_DENSE_LIMIT)
}

pub fn decode_field_with_limit(state: &EncodedState, max_sites: usize) -> Result<Field2D> {
    let dense = state.mps.to_dense_with_limit(max_sites)?;
    let scaled: Vec<f64> = dense.into_iter().map(|v| v * state.scale).collect();
    let values = unflatten(&scaled, state.nx, state.ny, state.config.ordering);
    let mut field = Field2D::new(values, 1 << state.nx, 1 << state.ny)?;
    field.domain = state.domain.clone();
    field.label = state.label.clone();
    field.shift = state.shift;
    Ok(field)
}

/// Add `x` to every entry, recording the shift.
pub fn shift_field(field: &Field2D, x: f64) -> Field2D {
    if x == 0.0 {
        return field.clone();
    }
    let mut out = field.clone();
    for v in &mut out.values {
        *v += x;
    }
    out.shift += x;
    out
}

/// Subtract the recorded shift.
///
/// Exact whenever each `v + x` was representable, e.g. dyadic data with a
/// dyadic shift.
pub fn unshift_field(field: &Field2D) -> Field2D {
    if field.shift == 0.0 {
        return field.clone();
    }
    let mut out = field.clone();
    for v in &mut out.values {
        *v -= field.shift;
    }
    out.shift = 0.0;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(nx: usize, ny: usize, seed: u64) -> Field2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Field2D::from_fn(nx, ny, |_, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    fn max_rel_diff(a: &Field2D, b: &Field2D) -> f64 {
        let scale = a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn site_order_examples() {
        use Axis::*;
        assert_eq!(site_order(1, 1, Ordering::Forward), vec![(X, 0), (Y, 0)]);
        assert_eq!(
            site_order(2, 2, Ordering::Forward),
            vec![(X, 1), (X, 0), (Y, 1), (Y, 0)]
        );
        assert_eq!(
            site_order(2, 2, Ordering::ReverseY),
            vec![(X, 1), (X, 0), (Y, 0), (Y, 1)]
        );
    }

    #[test]
    fn forward_flatten_is_row_major() {
        let f = random_field(3, 2, 1);
        assert_eq!(flatten(&f, Ordering::Forward), f.values());
    }

    #[test]
    fn reverse_flatten_reverses_column_bits() {
        let f = Field2D::from_fn(1, 2, |i, j| (10 * i + j) as f64).unwrap();
        // columns 0..4 land at bit-reversed positions 0, 2, 1, 3
        assert_eq!(flatten(&f, Ordering::ReverseY), vec![0., 2., 1., 3., 10., 12., 11., 13.]);
    }

    #[test]
    fn diagonal_field_is_bell_state() {
        let f = Field2D::new(vec![1.0, 0.0, 0.0, 1.0], 2, 2).unwrap();
        let s = encode_field(&f, &EncodingConfig::default()).unwrap();
        assert!((s.scale - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.truncation.chi_max, 2);
        let back = decode_field(&s).unwrap();
        assert!(max_rel_diff(&f, &back) < 1e-15);
    }

    #[test]
    fn separable_field_has_unit_bond_at_cut() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = Field2D::from_fn(2, 2, |i, j| g[i] * h[j]).unwrap();
        for ordering in Ordering::ALL {
            let s = encode_field(&f, &EncodingConfig::default().with_ordering(ordering)).unwrap();
            assert_eq!(s.mps.bond_dims()[1], 1, "{ordering}");
        }
    }

    #[test]
    fn encoded_state_is_unit_norm() {
        let f = random_field(4, 5, 4);
        let s = encode_field(&f, &EncodingConfig::default()).unwrap();
        assert!((s.mps.norm() - 1.0).abs() < 1e-10);
        assert!((s.mps.inner(&s.mps).unwrap().sqrt() * s.scale - f.norm()).abs() < 1e-10 * f.norm());
    }

    #[test]
    fn lossy_roundtrip_rmse() {
        let f = random_field(5, 5, 7);
        let s = encode_field(&f, &EncodingConfig::default()).unwrap();
        let back = decode_field(&s).unwrap();
        let rmse = (f.values().iter().zip(back.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            / f.values().len() as f64)
            .sqrt();
        let max = f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(rmse <= 1e-6 * max);
    }

    #[test]
    fn zero_field_rejected() {
        let f = Field2D::new(vec![0.0; 4], 2, 2).unwrap();
        assert!(matches!(encode_field(&f, &EncodingConfig::default()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn field_validation() {
        assert!(Field2D::new(vec![0.0; 6], 2, 3).is_err());
        assert!(Field2D::new(vec![0.0; 2], 1, 2).is_err());
        assert!(Field2D::new(vec![0.0; 3], 2, 2).is_err());
        assert!(Field2D::new(vec![0.0, f64::NAN, 0.0, 0.0], 2, 2).is_err());
    }

    #[test]
    fn shift_examples() {
        let f = random_field(3, 3, 11);
        let shifted = shift_field(&f, 1.0);
        assert!(shifted.min() >= 0.0);
        assert_eq!(shifted.shift(), 1.0);
        assert_eq!(shift_field(&f, 0.0), f);
        // dyadic data: shift and unshift are exact
        let d = Field2D::from_fn(3, 3, |i, j| (i as f64 - 3.5) / 4.0 + j as f64 / 8.0).unwrap();
        let back = unshift_field(&shift_field(&d, 1.0));
        assert_eq!(back.values(), d.values());
        assert_eq!(back.shift(), 0.0);
    }

    #[test]
    fn decode_respects_size_limit() {
        let f = random_field(2, 2, 1);
        let s = encode_field(&f, &EncodingConfig::default()).unwrap();
        assert!(matches!(decode_field_with_limit(&s, 3), Err(Error::SizeLimit { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn lossless_roundtrip_both_orderings(nx in 1usize..=7, ny in 1usize..=7, seed in any::<u64>()) {
            let f = random_field(nx, ny, seed);
            for ordering in Ordering::ALL {
                let cfg = EncodingConfig::default().with_ordering(ordering).with_cutoff(0.0);
                let s = encode_field(&f, &cfg).unwrap();
                let back = decode_field(&s).unwrap();
                prop_assert!(max_rel_diff(&f, &back) <= 1e-12);
                prop_assert!((s.scale * s.mps.norm() - f.norm()).abs() <= 1e-10 * f.norm());
            }
        }
    }
}
