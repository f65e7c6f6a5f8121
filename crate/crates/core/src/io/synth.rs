use serde::{Deserialize, Serialize};

use crate::encoding::{Domain, Field2D};
use crate::error::{Error, Result};

/// Parameters of the shear-flow initial condition.
///
/// The grid covers `x ∈ [0, 1)` and `y ∈ [-1, 1)`, both periodic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearIcParams {
    pub n_s: usize,
    pub n_b: usize,
    pub w: f64,
    pub nx: usize,
    pub ny: usize,
    /// Shear centers `y_k`; evenly spaced when `None`.
    pub shear_centers: Option<Vec<f64>>,
}

impl ShearIcParams {
    pub fn new(n_s: usize, n_b: usize, w: f64, nx: usize, ny: usize) -> Self {
        ShearIcParams {
            n_s,
            n_b,
            w,
            nx,
            ny,
            shear_centers: None,
        }
    }

    /// `y_k = -1 + (k + ½)·2/n_s`, or the explicit list.
    pub fn centers(&self) -> Vec<f64> {
        match &self.shear_centers {
            Some(c) => c.clone(),
            None => (0..self.n_s)
                .map(|k| -1.0 + (k as f64 + 0.5) * 2.0 / self.n_s as f64)
                .collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_s < 1 || self.n_b < 1 {
            return Err(Error::InvalidInput("n_s and n_b must be at least 1".into()));
        }
        if !(self.w > 0.0 && self.w.is_finite()) {
            return Err(Error::InvalidInput(format!("w must be positive, got {}", self.w)));
        }
        if self.nx < 1 || self.ny < 1 {
            return Err(Error::InvalidInput("grid exponents must be at least 1".into()));
        }
        if let Some(c) = &self.shear_centers {
            if c.len() != self.n_s {
                return Err(Error::InvalidInput(format!(
                    "{} shear centers given for n_s = {}",
                    c.len(),
                    self.n_s
                )));
            }
        }
        Ok(())
    }
}

pub const SHEAR_DOMAIN_X: (f64, f64) = (0.0, 1.0);
pub const SHEAR_DOMAIN_Y: (f64, f64) = (-1.0, 1.0);

/// Minimum-image distance on the periodic y interval.
fn periodic_distance(a: f64, b: f64) -> f64 {
    let period = SHEAR_DOMAIN_Y.1 - SHEAR_DOMAIN_Y.0;
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Velocity initial condition `(u_x, u_y)`.
///
/// `u_x = Σ_k (-1)^k tanh((y - y_k)/(n_s w))` and
/// `u_y = Σ_k sin(n_b π x) exp(-25 |y - y_k|²/w²)`, with `|y - y_k|` the
/// periodic distance.
pub fn synth_shear_ic(params: &ShearIcParams) -> Result<(Field2D, Field2D)> {
    params.validate()?;
    let centers = params.centers();
    let (rows, cols) = (1usize << params.nx, 1usize << params.ny);
    let x = |i: usize| SHEAR_DOMAIN_X.0 + (SHEAR_DOMAIN_X.1 - SHEAR_DOMAIN_X.0) * i as f64 / rows as f64;
    let y = |j: usize| SHEAR_DOMAIN_Y.0 + (SHEAR_DOMAIN_Y.1 - SHEAR_DOMAIN_Y.0) * j as f64 / cols as f64;
    let width = params.n_s as f64 * params.w;
    let w2 = params.w * params.w;
    let domain = Domain {
        x: SHEAR_DOMAIN_X,
        y: SHEAR_DOMAIN_Y,
        periodic: (true, true),
    };

    let ux = Field2D::from_fn(params.nx, params.ny, |_, j| {
        centers
            .iter()
            .enumerate()
            .map(|(k, &yk)| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * ((y(j) - yk) / width).tanh()
            })
            .sum()
    })?
    .with_label("ux")
    .with_domain(domain.clone());

    let uy = Field2D::from_fn(params.nx, params.ny, |i, j| {
        let s = (params.n_b as f64 * std::f64::consts::PI * x(i)).sin();
        centers
            .iter()
            .map(|&yk| {
                let d = periodic_distance(y(j), yk);
                s * (-25.0 * d * d / w2).exp()
            })
            .sum()
    })?
    .with_label("uy")
    .with_domain(domain);

    Ok((ux, uy))
}
