//! Separable cubic B-spline resampling on uniform grids.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encoding::Field2D;
use crate::error::{Error, Result};

const POLE: f64 = -0.267_949_192_431_122_7; // √3 − 2
const GAIN: f64 = 6.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Wrap-around; target sample `j` sits at `j · n_src / n_tgt`.
    #[default]
    Periodic,
    /// Mirror extension about the end samples, which are kept fixed.
    Clamped,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::Clamped => "clamped",
        })
    }
}

impl FromStr for Boundary {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "clamped" => Ok(Boundary::Clamped),
            other => Err(format!("unknown boundary {other:?} (expected periodic or clamped)")),
        }
    }
}

fn beta3(t: f64) -> f64 {
    let a = t.abs();
    if a < 1.0 {
        2.0 / 3.0 - a * a + a * a * a / 2.0
    } else if a < 2.0 {
        let b = 2.0 - a;
        b * b * b / 6.0
    } else {
        0.0
    }
}

/// Interpolation coefficients so that `Σ c_k β₃(i − k) = f_i` at every sample.
fn prefilter(samples: &[f64], boundary: Boundary) -> Vec<f64> {
    let n = samples.len();
    if n == 1 {
        return samples.to_vec();
    }
    let z = POLE;
    let mut c: Vec<f64> = samples.iter().map(|v| v * GAIN).collect();
    match boundary {
        Boundary::Periodic => {
            let zn = z.powi(n as i32);
            let mut sum = 0.0;
            let mut zi = 1.0;
            for i in 0..n {
                sum += zi * c[(n - i) % n];
                zi *= z;
            }
            let first = sum / (1.0 - zn);
            c[0] = first;
            for k in 1..n {
                c[k] += z * c[k - 1];
            }
            let mut sum = 0.0;
            let mut zi = 1.0;
            for i in 0..n {
                sum += zi * c[(n - 1 + i) % n];
                zi *= z;
            }
            c[n - 1] = -z / (1.0 - zn) * sum;
        }
        Boundary::Clamped => {
            let z2n = z.powi(2 * n as i32 - 2);
            let mut sum = c[0] + z.powi(n as i32 - 1) * c[n - 1];
            for k in 1..n - 1 {
                sum += (z.powi(k as i32) + z.powi(2 * n as i32 - 2 - k as i32)) * c[k];
            }
            c[0] = sum / (1.0 - z2n);
            for k in 1..n {
                c[k] += z * c[k - 1];
            }
            c[n - 1] = z / (z * z - 1.0) * (c[n - 1] + z * c[n - 2]);
        }
    }
    for k in (0..n - 1).rev() {
        c[k] = z * (c[k + 1] - c[k]);
    }
    c
}

fn coefficient(c: &[f64], k: isize, boundary: Boundary) -> f64 {
    let n = c.len() as isize;
    let idx = match boundary {
        Boundary::Periodic => k.rem_euclid(n),
        Boundary::Clamped => {
            if n == 1 {
                0
            } else {
                let period = 2 * (n - 1);
                let m = k.rem_euclid(period);
                if m < n {
                    m
                } else {
                    period - m
                }
            }
        }
    };
    c[idx as usize]
}

fn evaluate(c: &[f64], u: f64, boundary: Boundary) -> f64 {
    let base = u.floor() as isize;
    (base - 1..=base + 2)
        .map(|k| coefficient(c, k, boundary) * beta3(u - k as f64))
        .sum()
}

fn target_coordinates(n_src: usize, n_tgt: usize, boundary: Boundary) -> Vec<f64> {
    match boundary {
        Boundary::Periodic => (0..n_tgt).map(|j| j as f64 * n_src as f64 / n_tgt as f64).collect(),
        Boundary::Clamped if n_tgt == 1 => vec![0.0],
        Boundary::Clamped => (0..n_tgt)
            .map(|j| j as f64 * (n_src - 1) as f64 / (n_tgt - 1) as f64)
            .collect(),
    }
}

/// Resample one line of samples to `n_tgt` points.
pub fn resample_1d(samples: &[f64], n_tgt: usize, boundary: Boundary) -> Vec<f64> {
    if samples.len() == n_tgt {
        return samples.to_vec();
    }
    let c = prefilter(samples, boundary);
    target_coordinates(samples.len(), n_tgt, boundary)
        .into_iter()
        .map(|u| evaluate(&c, u, boundary))
        .collect()
}

/// Resample a row-major `rows × cols` grid to `rows_tgt × cols_tgt`, first
/// along rows (x) and then along columns (y).
pub fn resample_grid(
    values: &[f64],
    rows: usize,
    cols: usize,
    rows_tgt: usize,
    cols_tgt: usize,
    boundary: Boundary,
) -> Result<Vec<f64>> {
    if values.len() != rows * cols {
        return Err(Error::Shape(format!(
            "{} values for a {rows}x{cols} grid",
            values.len()
        )));
    }
    if rows == 0 || cols == 0 || rows_tgt == 0 || cols_tgt == 0 {
        return Err(Error::InvalidInput("grid extents must be positive".into()));
    }
    if rows == rows_tgt && cols == cols_tgt {
        return Ok(values.to_vec());
    }
    // along x: each column independently
    let mut mid = vec![0.0; rows_tgt * cols];
    let mut column = vec![0.0; rows];
    for j in 0..cols {
        for i in 0..rows {
            column[i] = values[i * cols + j];
        }
        for (i, v) in resample_1d(&column, rows_tgt, boundary).into_iter().enumerate() {
            mid[i * cols + j] = v;
        }
    }
    let mut out = Vec::with_capacity(rows_tgt * cols_tgt);
    for row in mid.chunks(cols) {
        out.extend(resample_1d(row, cols_tgt, boundary));
    }
    Ok(out)
}

/// Resample a field onto a `2^nx_tgt × 2^ny_tgt` grid.
pub fn bspline_resample(field: &Field2D, nx_tgt: usize, ny_tgt: usize, boundary: Boundary) -> Result<Field2D> {
    if nx_tgt < 1 || ny_tgt < 1 {
        return Err(Error::InvalidInput(format!(
            "target exponents must be >= 1, got ({nx_tgt}, {ny_tgt})"
        )));
    }
    let (rows, cols) = (1usize << nx_tgt, 1usize << ny_tgt);
    let values = resample_grid(field.values(), field.rows(), field.cols(), rows, cols, boundary)?;
    field.reshaped(values, rows, cols)
}
