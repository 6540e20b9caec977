use std::path::PathBuf;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::groundstate::{solve_ground_state, GroundStateMethod, GroundStateProblem};

/// Initial datum of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `e^{-|x-c|²/(2w²)}`; the center defaults to the origin.
    Gaussian {
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        center: Vec<f64>,
        #[serde(default = "unit")]
        width: f64,
    },
    /// `φ(x - shift) e^{i k·x}` with `φ` the positive ground state at
    /// frequency `omega`.
    BoostedGroundState {
        omega: f64,
        shift: Vec<f64>,
        momentum: Vec<f64>,
    },
    /// A field stored in the binary artifact format.
    Artifact { path: PathBuf },
}

fn unit() -> f64 {
    1.0
}

impl InitialSpec {
    pub fn standard_gaussian() -> Self {
        InitialSpec::Gaussian {
            center: Vec::new(),
            width: 1.0,
        }
    }
}

/// Ground-state diagnostics carried into reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundStateSummary {
    pub omega: f64,
    pub residual: f64,
    pub iterations: usize,
    pub method: GroundStateMethod,
    pub max_boundary: f64,
    pub asymmetry: f64,
    pub grid: crate::grid::GridSpec,
}

/// An initial datum on the run grid.
#[derive(Clone, Debug)]
pub struct PreparedInitial {
    pub field: SpectralField,
    pub ground_state: Option<GroundStateSummary>,
}

/// Box twice as long per axis around the same center, with the same spacing.
///
/// Node counts are powers of two, so the run grid's nodes are a subset of it.
pub fn ground_state_grid(grid: &Grid) -> Result<Grid> {
    let mut bounds = Vec::with_capacity(grid.dim());
    let mut n = Vec::with_capacity(grid.dim());
    for (j, &(a, b)) in grid.bounds().iter().enumerate() {
        let (mid, len) = (0.5 * (a + b), b - a);
        bounds.push((mid - len, mid + len));
        n.push(2 * grid.shape()[j]);
    }
    Grid::new(&bounds, &n)
}

fn check_len(v: &[f64], d: usize, what: &str) -> Result<()> {
    if v.len() != d {
        return Err(Error::InvalidParameter(format!("{what} has {} components, grid has {d} axes", v.len())));
    }
    Ok(())
}

impl InitialSpec {
    pub fn prepare(&self, grid: &Arc<Grid>) -> Result<PreparedInitial> {
        let d = grid.dim();
        match self {
            InitialSpec::Gaussian { center, width } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidParameter(format!("gaussian width must be positive, got {width}")));
                }
                let center = if center.is_empty() { vec![0.0; d] } else { center.clone() };
                check_len(&center, d, "gaussian center")?;
                let field = SpectralField::from_fn(grid, |x| {
                    let r2: f64 = (0..d).map(|j| (x[j] - center[j]).powi(2)).sum();
                    Complex64::new((-0.5 * r2 / (width * width)).exp(), 0.0)
                });
                Ok(PreparedInitial {
                    field,
                    ground_state: None,
                })
            }
            InitialSpec::BoostedGroundState { omega, shift, momentum } => {
                check_len(shift, d, "shift")?;
                check_len(momentum, d, "momentum")?;
                boosted_ground_state(grid, *omega, shift, momentum)
            }
            InitialSpec::Artifact { path } => {
                let stored = crate::io::read_field(path)?;
                if stored.grid().bounds() != grid.bounds() {
                    return Err(Error::GridMismatch);
                }
                Ok(PreparedInitial {
                    field: stored.resample(grid)?,
                    ground_state: None,
                })
            }
        }
    }
}

fn boosted_ground_state(grid: &Arc<Grid>, omega: f64, shift: &[f64], momentum: &[f64]) -> Result<PreparedInitial> {
    let big = Arc::new(ground_state_grid(grid)?);
    let state = solve_ground_state(&GroundStateProblem::new(omega, Arc::clone(&big)))?;
    let summary = GroundStateSummary {
        omega,
        residual: state.residual,
        iterations: state.iterations,
        method: state.method,
        max_boundary: state.max_boundary(),
        asymmetry: state.asymmetry(),
        grid: big.spec(),
    };
    // Translate by `shift` exactly in Fourier space, then read off the
    // nodes of the run box, which sit at offset N_j/2 inside the big box.
    let mut coeffs = state.field.into_coeffs();
    for (i, c) in coeffs.iter_mut().enumerate() {
        let idx = big.unravel(i);
        let phase: f64 = (0..big.dim()).map(|j| big.wave_number(j, idx[j]) * shift[j]).sum();
        *c *= Complex64::from_polar(1.0, -phase);
    }
    let values = big.inverse(&coeffs)?;
    let d = grid.dim();
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let idx = grid.unravel(i);
        let mut big_idx = [0usize; 3];
        let mut phase = 0.0;
        for j in 0..d {
            big_idx[j] = idx[j] + grid.shape()[j] / 2;
            phase += momentum[j] * grid.node(j, idx[j]);
        }
        // ground state is real; drop the roundoff imaginary part
        let phi = values[big.ravel(&big_idx[..d])].re;
        out.push(Complex64::from_polar(phi, phase));
    }
    Ok(PreparedInitial {
        field: SpectralField::from_values(grid, out)?,
        ground_state: Some(summary),
    })
}
