//! Measurement protocols: resampling, reconstruction error and the
//! coarse-grain, shift, ordering, random-image and time-series studies.

mod spline;
mod studies;

pub use spline::{bspline_resample, resample_1d, resample_grid, Boundary};
pub use studies::{
    coarse_grain_study, halving_levels, measure_field, ordering_comparison, random_image_baseline,
    shift_sweep, time_series_analysis, Measurement, ParamValue, Provenance, RandomBaselineConfig,
    StudyRow, StudyTable,
};

use crate::encoding::Field2D;
use crate::error::{Error, Result};

/// Root mean squared difference of two equally shaped fields.
pub fn rmse(a: &Field2D, b: &Field2D) -> Result<f64> {
    if (a.rows(), a.cols()) != (b.rows(), b.cols()) {
        return Err(Error::Shape(format!(
            "cannot compare {}x{} with {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let sum: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok((sum / a.values().len() as f64).sqrt())
}

/// `1 − rmse / (max − min)` of the reference field.
pub fn reconstruction_accuracy(reference: &Field2D, reconstruction: &Field2D) -> Result<f64> {
    let delta = rmse(reference, reconstruction)?;
    let range = reference.max() - reference.min();
    let scale = if range > 0.0 {
        range
    } else {
        reference.max().abs().max(f64::MIN_POSITIVE)
    };
    Ok(1.0 - delta / scale)
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties; `None` when
/// either input is constant or the lengths differ.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va * vb).sqrt())
}
