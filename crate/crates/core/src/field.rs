use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// A complex field on a periodic grid.
///
/// The Fourier coefficients are the stored representation; node samples are
/// produced on demand by an inverse transform.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

pub(crate) fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl SpectralField {
    /// Transforms node samples into a field.
    pub fn from_values(grid: &Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        let mut coeffs = values;
        grid.forward_in_place(&mut coeffs)?;
        Ok(SpectralField {
            grid: Arc::clone(grid),
            coeffs,
        })
    }

    pub fn from_coeffs(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(SpectralField {
            grid: Arc::clone(grid),
            coeffs,
        })
    }

    /// Samples `f` at the grid nodes (unused trailing coordinates are zero).
    pub fn from_fn<F>(grid: &Arc<Grid>, f: F) -> Self
    where
        F: Fn(&[f64; 3]) -> Complex64 + Sync + Send,
    {
        let values: Vec<_> = grid.nodes().par_iter().map(f).collect();
        SpectralField::from_values(grid, values).expect("sizes match by construction")
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        SpectralField {
            grid: Arc::clone(grid),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Node samples.
    pub fn values(&self) -> Vec<Complex64> {
        self.grid
            .inverse(&self.coeffs)
            .expect("sizes match by construction")
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn check_same_grid(&self, other: &SpectralField) -> Result<()> {
        if same_grid(&self.grid, &other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `self - other`.
    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.check_same_grid(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(SpectralField {
            grid: Arc::clone(&self.grid),
            coeffs,
        })
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: Complex64, other: &SpectralField) -> Result<SpectralField> {
        self.check_same_grid(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + s * b)
            .collect();
        Ok(SpectralField {
            grid: Arc::clone(&self.grid),
            coeffs,
        })
    }

    pub fn scale(&self, s: Complex64) -> SpectralField {
        SpectralField {
            grid: Arc::clone(&self.grid),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Squared L² norm from the coefficients, `|Ω| Σ |c_l|²`.
    pub fn mass(&self) -> f64 {
        self.grid.volume() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Zero-pads (or truncates) the spectrum onto another grid on the same
    /// box. Lattice points that exist on both grids keep their coefficient.
    pub fn resample(&self, target: &Arc<Grid>) -> Result<SpectralField> {
        let mut out = SpectralField::zeros(target);
        if target.len() >= self.grid.len() {
            let map = self.grid.embedding_into(target)?;
            for (c, &i) in self.coeffs.iter().zip(&map) {
                out.coeffs[i] = *c;
            }
        } else {
            let map = target.embedding_into(&self.grid)?;
            for (c, &i) in out.coeffs.iter_mut().zip(&map) {
                *c = self.coeffs[i];
            }
        }
        Ok(out)
    }
}
