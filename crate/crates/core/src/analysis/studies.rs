use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rmse;
use super::spline::{bspline_resample, Boundary};
use crate::encoding::{decode_field, encode_field, shift_field, EncodedState, EncodingConfig, Field2D};
use crate::error::{Error, Result};
use crate::resources::{resource_report, MagicConfig, ResourceReport};

/// A study control parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<usize> for ParamValue {
    fn from(v: usize) -> Self {
        ParamValue::Int(v as i64)
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Real(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_string())
    }
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(v) => Some(*v as f64),
            ParamValue::Real(v) => Some(*v),
            ParamValue::Text(_) => None,
        }
    }
}

/// One row of a study: control parameters and the resources measured.
///
/// Magic columns are `None` when magic measurement is off.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    #[serde(flatten)]
    pub params: BTreeMap<String, ParamValue>,
    pub s_vn_norm: f64,
    pub s_vn_bits: f64,
    pub argmax_bond: Option<usize>,
    pub m2_bits: Option<f64>,
    pub m2_norm: Option<f64>,
    /// Standard error of `m2_bits`.
    pub m2_stderr: Option<f64>,
    pub m2_method: Option<String>,
    pub chi_max: usize,
    pub discarded_weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    /// Spread across images, for aggregated rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_vn_norm_std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m2_norm_std: Option<f64>,
}

impl StudyRow {
    pub fn from_report(params: BTreeMap<String, ParamValue>, report: &ResourceReport) -> Self {
        StudyRow {
            params,
            s_vn_norm: report.entropy.max_normalized,
            s_vn_bits: report.entropy.max_bits(),
            argmax_bond: report.entropy.argmax_bond,
            m2_bits: report.magic.as_ref().map(|m| m.m2_bits),
            m2_norm: report.m2_norm(),
            m2_stderr: report.magic.as_ref().map(|m| m.stderr_bits),
            m2_method: report.magic.as_ref().map(|m| m.method.tag().to_string()),
            chi_max: report.chi_max,
            discarded_weight: report.discarded_weight,
            rmse: None,
            s_vn_norm_std: None,
            m2_norm_std: None,
        }
    }

    pub fn param(&self, key: &str) -> Option<&ParamValue> {
        self.params.get(key)
    }
}

/// Configuration snapshot needed to regenerate a table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub encoding: Vec<EncodingConfig>,
    pub magic: MagicConfig,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyTable {
    pub study: String,
    pub provenance: Provenance,
    pub rows: Vec<StudyRow>,
}

fn params<const K: usize>(pairs: [(&str, ParamValue); K]) -> BTreeMap<String, ParamValue> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// An encoded field and its resources.
#[derive(Clone, Debug)]
pub struct Measurement {
    pub state: EncodedState,
    pub report: ResourceReport,
}

/// Encode, compress and measure one field.
///
/// Every measurement uses `magic.seed` directly, so rows that encode the same
/// state get identical sampled estimates.
pub fn measure_field(field: &Field2D, encoding: &EncodingConfig, magic: &MagicConfig) -> Result<Measurement> {
    let state = encode_field(field, encoding)?;
    let report = resource_report(&state, magic)?;
    Ok(Measurement { state, report })
}

fn provenance(encoding: &[EncodingConfig], magic: &MagicConfig, boundary: Option<Boundary>) -> Provenance {
    let seeds = if magic.method == crate::resources::MagicChoice::Off {
        Vec::new()
    } else {
        vec![magic.seed]
    };
    Provenance {
        encoding: encoding.to_vec(),
        magic: *magic,
        seeds,
        boundary,
    }
}

/// `(nx − k, ny − k)` for `k = 0, 1, …` while both exponents stay at least `min_exp`.
pub fn halving_levels(nx: usize, ny: usize, min_exp: usize) -> Vec<(usize, usize)> {
    let min_exp = min_exp.max(1);
    (0..)
        .map(|k| (nx.wrapping_sub(k), ny.wrapping_sub(k)))
        .take_while(|&(a, b)| a >= min_exp && b >= min_exp && a <= nx && b <= ny)
        .collect()
}

/// Downsample to each level, measure, and record the error of resampling the
/// coarse grid back to the source shape.
pub fn coarse_grain_study(
    field: &Field2D,
    levels: &[(usize, usize)],
    encoding: &EncodingConfig,
    magic: &MagicConfig,
    boundary: Boundary,
) -> Result<StudyTable> {
    for &(nx, ny) in levels {
        if nx < 1 || ny < 1 || nx > field.nx() || ny > field.ny() {
            return Err(Error::InvalidInput(format!(
                "level ({nx}, {ny}) is not within 1..=({}, {})",
                field.nx(),
                field.ny()
            )));
        }
    }
    let rows = levels
        .par_iter()
        .map(|&(nx, ny)| -> Result<StudyRow> {
            let coarse = bspline_resample(field, nx, ny, boundary)?;
            let m = measure_field(&coarse, encoding, magic)?;
            let back = bspline_resample(&coarse, field.nx(), field.ny(), boundary)?;
            let mut row = StudyRow::from_report(
                params([
                    ("nx", nx.into()),
                    ("ny", ny.into()),
                    ("grid_points", (1usize << (nx + ny)).into()),
                ]),
                &m.report,
            );
            row.rmse = Some(rmse(field, &back)?);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StudyTable {
        study: "coarse".into(),
        provenance: provenance(&[*encoding], magic, Some(boundary)),
        rows,
    })
}

/// Measure the field after adding each shift.
pub fn shift_sweep(
    field: &Field2D,
    shifts: &[f64],
    encoding: &EncodingConfig,
    magic: &MagicConfig,
) -> Result<StudyTable> {
    let rows = shifts
        .par_iter()
        .map(|&x| -> Result<StudyRow> {
            let m = measure_field(&shift_field(field, x), encoding, magic)?;
            Ok(StudyRow::from_report(params([("shift", x.into())]), &m.report))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StudyTable {
        study: "shift".into(),
        provenance: provenance(&[*encoding], magic, None),
        rows,
    })
}

/// Measure the same field under several encodings and check that all of them
/// decode to the same content within their truncation error.
pub fn ordering_comparison(
    field: &Field2D,
    encodings: &[EncodingConfig],
    magic: &MagicConfig,
) -> Result<StudyTable> {
    if encodings.len() < 2 {
        return Err(Error::InvalidInput("need at least two encodings to compare".into()));
    }
    let measured = encodings
        .par_iter()
        .map(|cfg| measure_field(field, cfg, magic))
        .collect::<Result<Vec<_>>>()?;
    let reference = decode_field(&measured[0].state)?;
    let dw0 = measured[0].state.truncation.discarded_weight;
    for (cfg, m) in encodings.iter().zip(&measured).skip(1) {
        let decoded = decode_field(&m.state)?;
        let diff: f64 = reference
            .values()
            .iter()
            .zip(decoded.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let dw = m.state.truncation.discarded_weight;
        let tol = field.norm() * (2.0 * (dw0.sqrt() + dw.sqrt()) + 1e-9);
        if diff > tol {
            return Err(Error::Numerical(format!(
                "ordering {} decodes to different content: |diff| = {diff:e} > {tol:e}",
                cfg.ordering
            )));
        }
    }
    let rows = encodings
        .iter()
        .zip(&measured)
        .map(|(cfg, m)| {
            let mut p = params([("ordering", cfg.ordering.tag().into())]);
            if let Some(r) = cfg.max_rank {
                p.insert("max_rank".into(), r.into());
            }
            StudyRow::from_report(p, &m.report)
        })
        .collect();
    Ok(StudyTable {
        study: "ordering".into(),
        provenance: provenance(encodings, magic, None),
        rows,
    })
}

/// One row per snapshot, keyed by its index `t`.
pub fn time_series_analysis(
    snapshots: &[Field2D],
    encoding: &EncodingConfig,
    magic: &MagicConfig,
) -> Result<StudyTable> {
    if snapshots.is_empty() {
        return Err(Error::InvalidInput("time series needs at least one snapshot".into()));
    }
    let rows = snapshots
        .par_iter()
        .enumerate()
        .map(|(t, f)| -> Result<StudyRow> {
            let m = measure_field(f, encoding, magic)?;
            Ok(StudyRow::from_report(params([("t", t.into())]), &m.report))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StudyTable {
        study: "timeseries".into(),
        provenance: provenance(&[*encoding], magic, None),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomBaselineConfig {
    pub count: usize,
    pub nx: usize,
    pub ny: usize,
    pub range: (f64, f64),
    pub levels: Vec<(usize, usize)>,
    pub seed: u64,
    pub boundary: Boundary,
}

impl RandomBaselineConfig {
    /// Image `index`, drawn from stream `index` of the seeded generator.
    pub fn image(&self, index: usize) -> Result<Field2D> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let (lo, hi) = self.range;
        Field2D::from_fn(self.nx, self.ny, |_, _| rng.random_range(lo..hi))
            .map(|f| f.with_label("random"))
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Coarse-grain `count` uniform random images and average the resources per
/// level. `chi_max` is the largest over images; other columns are means.
pub fn random_image_baseline(
    config: &RandomBaselineConfig,
    encoding: &EncodingConfig,
    magic: &MagicConfig,
) -> Result<StudyTable> {
    if config.count == 0 {
        return Err(Error::InvalidInput("count must be at least 1".into()));
    }
    let (lo, hi) = config.range;
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidInput(format!("invalid value range ({lo}, {hi})")));
    }
    let tables = (0..config.count)
        .into_par_iter()
        .map(|i| {
            let image = config.image(i)?;
            coarse_grain_study(&image, &config.levels, encoding, magic, config.boundary)
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = config
        .levels
        .iter()
        .enumerate()
        .map(|(li, &(nx, ny))| {
            let per_image: Vec<&StudyRow> = tables.iter().map(|t| &t.rows[li]).collect();
            let collect = |f: &dyn Fn(&StudyRow) -> f64| per_image.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let (s_mean, s_std) = mean_std(&collect(&|r| r.s_vn_norm));
            let (sb_mean, _) = mean_std(&collect(&|r| r.s_vn_bits));
            let (dw_mean, _) = mean_std(&collect(&|r| r.discarded_weight));
            let (rmse_mean, _) = mean_std(&collect(&|r| r.rmse.unwrap_or(0.0)));
            let magic_stats = per_image[0].m2_bits.map(|_| {
                let bits = mean_std(&collect(&|r| r.m2_bits.unwrap_or(f64::NAN)));
                let norm = mean_std(&collect(&|r| r.m2_norm.unwrap_or(f64::NAN)));
                let se: f64 = per_image.iter().map(|r| r.m2_stderr.unwrap_or(0.0).powi(2)).sum::<f64>();
                (bits.0, norm.0, norm.1, se.sqrt() / per_image.len() as f64)
            });
            StudyRow {
                params: params([
                    ("nx", nx.into()),
                    ("ny", ny.into()),
                    ("grid_points", (1usize << (nx + ny)).into()),
                    ("count", config.count.into()),
                    ("range_lo", lo.into()),
                    ("range_hi", hi.into()),
                ]),
                s_vn_norm: s_mean,
                s_vn_bits: sb_mean,
                argmax_bond: None,
                m2_bits: magic_stats.map(|m| m.0),
                m2_norm: magic_stats.map(|m| m.1),
                m2_stderr: magic_stats.map(|m| m.3),
                m2_method: per_image[0].m2_method.clone(),
                chi_max: per_image.iter().map(|r| r.chi_max).max().unwrap_or(1),
                discarded_weight: dw_mean,
                rmse: Some(rmse_mean),
                s_vn_norm_std: Some(s_std),
                m2_norm_std: magic_stats.map(|m| m.2),
            }
        })
        .collect();

    let mut prov = provenance(&[*encoding], magic, Some(config.boundary));
    prov.seeds.insert(0, config.seed);
    Ok(StudyTable {
        study: "random-baseline".into(),
        provenance: prov,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::Ordering;
    use crate::resources::MagicChoice;
    use std::f64::consts::PI;

    fn smooth(nx: usize, ny: usize) -> Field2D {
        let (r, c) = ((1usize << nx) as f64, (1usize << ny) as f64);
        Field2D::from_fn(nx, ny, |i, j| (2.0 * PI * i as f64 / r).sin() * (2.0 * PI * j as f64 / c).cos() + 0.5).unwrap()
    }

    fn random(nx: usize, ny: usize, seed: u64) -> Field2D {
        RandomBaselineConfig {
            count: 1,
            nx,
            ny,
            range: (-1.0, 1.0),
            levels: vec![],
            seed,
            boundary: Boundary::Periodic,
        }
        .image(0)
        .unwrap()
    }

    #[test]
    fn halving_ladder() {
        assert_eq!(halving_levels(6, 6, 2), vec![(6, 6), (5, 5), (4, 4), (3, 3), (2, 2)]);
        assert_eq!(halving_levels(2, 4, 1), vec![(2, 4), (1, 3)]);
    }

    #[test]
    fn identity_level_matches_direct_encoding() {
        let f = random(4, 4, 1);
        let enc = EncodingConfig::default();
        let magic = MagicConfig::default();
        let t = coarse_grain_study(&f, &[(4, 4)], &enc, &magic, Boundary::Periodic).unwrap();
        let direct = measure_field(&f, &enc, &magic).unwrap();
        assert_eq!(t.rows[0].rmse, Some(0.0));
        assert_eq!(t.rows[0].s_vn_norm, direct.report.entropy.max_normalized);
        assert_eq!(t.rows[0].m2_bits, direct.report.magic.map(|m| m.m2_bits));
    }

    #[test]
    fn smooth_field_coarse_grains_cleanly() {
        let f = smooth(6, 6);
        let t = coarse_grain_study(&f, &[(6, 6), (5, 5), (4, 4)], &EncodingConfig::default(), &MagicConfig::off(), Boundary::Periodic).unwrap();
        for row in &t.rows {
            assert!(row.rmse.unwrap() <= 1e-3, "{row:?}");
            // sin·cos plus a constant has quantics rank at most 5
            assert!(row.chi_max <= 5, "{}", row.chi_max);
            assert_eq!(row.m2_bits, None);
        }
        assert!(coarse_grain_study(&f, &[(7, 6)], &EncodingConfig::default(), &MagicConfig::off(), Boundary::Periodic).is_err());
    }

    #[test]
    fn zero_shift_row_equals_baseline() {
        let f = random(5, 5, 2);
        let magic = MagicConfig::default().with_method(MagicChoice::Sampled).with_samples(300).with_seed(7);
        let enc = EncodingConfig::default();
        let t = shift_sweep(&f, &[0.0, 1.0], &enc, &magic).unwrap();
        let direct = measure_field(&f, &enc, &magic).unwrap();
        let base = StudyRow::from_report(t.rows[0].params.clone(), &direct.report);
        assert_eq!(t.rows[0], base);
        assert_eq!(t.provenance.seeds, vec![7]);
    }

    #[test]
    fn y_symmetric_field_orderings_agree() {
        // f(i, j) = g(i) h(j) + g2(i) h2(j) with h, h2 symmetric under bit reversal of j
        let ny = 3;
        let rev = |j: usize| (0..ny).fold(0, |acc, b| acc | ((j >> b) & 1) << (ny - 1 - b));
        let f = Field2D::from_fn(4, ny, |i, j| {
            let s = (j + rev(j)) as f64;
            (i as f64 + 1.0).sin() * s + (i as f64 * 0.3).cos() * (s * s)
        })
        .unwrap();
        let encs = [
            EncodingConfig::default(),
            EncodingConfig::default().with_ordering(Ordering::ReverseY),
        ];
        let t = ordering_comparison(&f, &encs, &MagicConfig::default()).unwrap();
        assert!((t.rows[0].s_vn_norm - t.rows[1].s_vn_norm).abs() < 1e-10);
        assert!((t.rows[0].m2_bits.unwrap() - t.rows[1].m2_bits.unwrap()).abs() < 1e-10);
        assert!(ordering_comparison(&f, &encs[..1], &MagicConfig::default()).is_err());
    }

    #[test]
    fn constant_time_series() {
        let f = smooth(3, 3);
        let t = time_series_analysis(&[f.clone(), f.clone(), f], &EncodingConfig::default(), &MagicConfig::default()).unwrap();
        assert_eq!(t.rows.len(), 3);
        for r in &t.rows[1..] {
            assert_eq!(r.s_vn_norm, t.rows[0].s_vn_norm);
            assert_eq!(r.m2_bits, t.rows[0].m2_bits);
        }
        assert!(time_series_analysis(&[], &EncodingConfig::default(), &MagicConfig::default()).is_err());
    }

    #[test]
    fn single_random_image_is_near_maximal() {
        let cfg = RandomBaselineConfig {
            count: 1,
            nx: 6,
            ny: 6,
            range: (-1.0, 1.0),
            levels: vec![(6, 6)],
            seed: 3,
            boundary: Boundary::Periodic,
        };
        let t = random_image_baseline(&cfg, &EncodingConfig::default(), &MagicConfig::off()).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.rows[0].s_vn_norm > 0.95, "{}", t.rows[0].s_vn_norm);
        assert_eq!(t.provenance.seeds, vec![3]);
    }
}
