//! Diagonal Fourier-space operators.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{same_grid, SpectralField};
use crate::grid::Grid;

/// Below this modulus `φ₁` is evaluated from its Taylor polynomial.
pub const PHI1_SERIES_THRESHOLD: f64 = 1e-4;

/// Cutoff profile of the frequency filter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterShape {
    /// C^∞ radial step between radius 1 and 2.
    #[default]
    Smooth,
    /// Indicator of the closed unit ball.
    Sharp,
}

/// Operator acting on Fourier coefficients by pointwise multiplication.
#[derive(Clone, Debug)]
pub struct Multiplier {
    grid: Arc<Grid>,
    symbol: Vec<Complex64>,
}

impl Multiplier {
    pub fn from_symbol(grid: &Arc<Grid>, symbol: Vec<Complex64>) -> Result<Self> {
        if symbol.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                got: symbol.len(),
            });
        }
        Ok(Multiplier {
            grid: Arc::clone(grid),
            symbol,
        })
    }

    /// Symbol given as a function of `|μ_l|²`.
    pub fn radial(grid: &Arc<Grid>, f: impl Fn(f64) -> Complex64) -> Self {
        let symbol = grid.wave_number_sq().into_iter().map(f).collect();
        Multiplier {
            grid: Arc::clone(grid),
            symbol,
        }
    }

    pub fn identity(grid: &Arc<Grid>) -> Self {
        Multiplier::radial(grid, |_| Complex64::new(1.0, 0.0))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    pub fn apply(&self, field: &SpectralField) -> Result<SpectralField> {
        let mut out = field.clone();
        self.apply_in_place(&mut out)?;
        Ok(out)
    }

    pub fn apply_in_place(&self, field: &mut SpectralField) -> Result<()> {
        if !same_grid(&self.grid, field.grid()) {
            return Err(Error::GridMismatch);
        }
        self.apply_to_coeffs(field.coeffs_mut());
        Ok(())
    }

    pub(crate) fn apply_to_coeffs(&self, coeffs: &mut [Complex64]) {
        for (c, s) in coeffs.iter_mut().zip(&self.symbol) {
            *c *= s;
        }
    }

    /// `self ∘ other`, i.e. the pointwise product of the symbols.
    pub fn compose(&self, other: &Multiplier) -> Result<Multiplier> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Multiplier {
            grid: Arc::clone(&self.grid),
            symbol: self
                .symbol
                .iter()
                .zip(&other.symbol)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn scaled(&self, s: Complex64) -> Multiplier {
        Multiplier {
            grid: Arc::clone(&self.grid),
            symbol: self.symbol.iter().map(|c| c * s).collect(),
        }
    }
}

fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`.
fn smooth_step(t: f64) -> f64 {
    let a = bump(t);
    let b = bump(1.0 - t);
    a / (a + b)
}

/// Radial cutoff profile `χ(|x|)`.
pub fn cutoff(shape: FilterShape, r: f64) -> f64 {
    match shape {
        FilterShape::Smooth => {
            if r <= 1.0 {
                1.0
            } else if r >= 2.0 {
                0.0
            } else {
                smooth_step(2.0 - r)
            }
        }
        FilterShape::Sharp => {
            if r <= 1.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Frequency filter with symbol `χ(τ^{1/2} μ_l)`.
pub fn build_filter(grid: &Arc<Grid>, tau: f64, shape: FilterShape) -> Result<Multiplier> {
    check_step(tau)?;
    let sqrt_tau = tau.sqrt();
    Ok(Multiplier::radial(grid, |k2| {
        Complex64::new(cutoff(shape, sqrt_tau * k2.sqrt()), 0.0)
    }))
}

/// Free Schrödinger flow `e^{itΔ}`, symbol `e^{-it|μ_l|²}`.
pub fn build_free_flow(grid: &Arc<Grid>, t: f64) -> Multiplier {
    Multiplier::radial(grid, |k2| Complex64::from_polar(1.0, -t * k2))
}

/// `φ₁(iτΔ)`, symbol `φ₁(-iτ|μ_l|²)`.
pub fn build_phi1(grid: &Arc<Grid>, tau: f64) -> Result<Multiplier> {
    check_step(tau)?;
    Ok(Multiplier::radial(grid, |k2| {
        phi1(Complex64::new(0.0, -tau * k2))
    }))
}

/// `(-Δ)^γ`, symbol `|μ_l|^{2γ}`.
pub fn build_fractional_laplacian(grid: &Arc<Grid>, gamma: f64) -> Result<Multiplier> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "fractional power must be nonnegative, got {gamma}"
        )));
    }
    Ok(Multiplier::radial(grid, |k2| {
        Complex64::new(if k2 == 0.0 && gamma == 0.0 { 1.0 } else { k2.powf(gamma) }, 0.0)
    }))
}

fn check_step(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "time step must be positive, got {tau}"
        )))
    }
}

/// `φ₁(z) = (e^z - 1)/z`, with `φ₁(0) = 1`.
pub fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < PHI1_SERIES_THRESHOLD {
        let one = Complex64::new(1.0, 0.0);
        one + z * (0.5 + z * (1.0 / 6.0 + z / 24.0))
    } else {
        exp_m1(z) / z
    }
}

/// `e^z - 1` without cancellation for small `|z|`.
fn exp_m1(z: Complex64) -> Complex64 {
    let (s, c) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    let em1 = z.re.exp_m1();
    Complex64::new(em1 * c - 2.0 * half * half, z.re.exp() * s)
}
