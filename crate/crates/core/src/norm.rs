use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;

/// Discrete norm selector. `Lp(f64::INFINITY)` is the maximum norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    L2,
    H1,
    Lp(f64),
}

pub fn norm(field: &SpectralField, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::L2 => Ok(field.mass().sqrt()),
        NormKind::H1 => {
            let grid = field.grid();
            let k2 = grid.wave_number_sq();
            let sum: f64 = field
                .coeffs()
                .iter()
                .zip(&k2)
                .map(|(c, k2)| (1.0 + k2) * c.norm_sqr())
                .sum();
            Ok((grid.volume() * sum).sqrt())
        }
        NormKind::Lp(p) => lp_norm(field.grid(), &field.values(), p),
    }
}

/// Grid quadrature `(h Σ |u_k|^p)^{1/p}`, or `max |u_k|` for `p = ∞`.
pub fn lp_norm(grid: &Grid, values: &[Complex64], p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "Lp exponent must be >= 1, got {p}"
        )));
    }
    if p.is_infinite() {
        return Ok(values.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    let sum: f64 = if p == 2.0 {
        values.iter().map(|v| v.norm_sqr()).sum()
    } else {
        values.iter().map(|v| v.norm().powf(p)).sum()
    };
    Ok((grid.cell_volume() * sum).powf(1.0 / p))
}
