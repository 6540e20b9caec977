//! Positive ground state of `-Δφ + ωφ - φ³ = 0` on a periodic box.
//!
//! The main solver is Petviashvili's iteration
//! `φ̂ ← M^{3/2} (φ³)^ / (ω + |μ|²)` with the stabilizing factor
//! `M = ⟨(ω-Δ)φ, φ⟩ / ⟨φ³, φ⟩`, taking `|φ|` after every sweep. If the
//! residual stagnates the solver switches to a preconditioned gradient flow
//! on the action, projected back onto the Nehari manifold
//! `⟨(ω-Δ)φ, φ⟩ = ∫ φ⁴` after every step.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;

/// Largest admissible `|φ|` on the box boundary.
pub const BOUNDARY_DECAY: f64 = 1e-10;

/// Iterations over which the residual must drop by [`STAGNATION_FACTOR`].
const STAGNATION_WINDOW: usize = 40;
const STAGNATION_FACTOR: f64 = 0.5;
/// Step of the projected gradient flow.
const FLOW_STEP: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct GroundStateProblem {
    pub omega: f64,
    pub grid: Arc<Grid>,
    /// Target for `‖-Δφ + ωφ - φ³‖_{L²}`.
    pub tol: f64,
    pub max_iter: usize,
}

impl GroundStateProblem {
    pub fn new(omega: f64, grid: Arc<Grid>) -> Self {
        GroundStateProblem {
            omega,
            grid,
            tol: 1e-10,
            max_iter: 2000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroundStateMethod {
    Petviashvili,
    NehariFlow,
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub field: SpectralField,
    pub omega: f64,
    pub residual: f64,
    pub iterations: usize,
    pub method: GroundStateMethod,
    /// Residual after every iteration.
    pub history: Vec<f64>,
}

impl GroundState {
    /// Largest `|φ|` over nodes on the lower face of any axis (the box boundary).
    pub fn max_boundary(&self) -> f64 {
        max_boundary(&self.field)
    }

    /// Largest `|φ(x) - φ(Rx)|` over reflections through the box center and,
    /// on square grids, axis permutations.
    pub fn asymmetry(&self) -> f64 {
        asymmetry(&self.field)
    }
}

struct Workspace {
    grid: Arc<Grid>,
    omega: f64,
    symbol: Vec<f64>,
}

impl Workspace {
    /// `(φ³)^` for real nodal values.
    fn cube(&self, coeffs: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut nodes = coeffs.to_vec();
        self.grid.inverse_in_place(&mut nodes).expect("sized to grid");
        let mut cube: Vec<Complex64> = nodes.iter().map(|v| Complex64::new(v.re.powi(3), 0.0)).collect();
        self.grid.forward_in_place(&mut cube).expect("sized to grid");
        (nodes, cube)
    }

    fn residual(&self, coeffs: &[Complex64], cube: &[Complex64]) -> f64 {
        let sum: f64 = coeffs
            .iter()
            .zip(cube)
            .zip(&self.symbol)
            .map(|((c, q), l)| (l * c - q).norm_sqr())
            .sum();
        (self.grid.volume() * sum).sqrt()
    }

    /// Replaces the field by `|φ|` at the nodes.
    fn positive_part(&self, coeffs: &mut [Complex64]) {
        self.grid.inverse_in_place(coeffs).expect("sized to grid");
        for c in coeffs.iter_mut() {
            *c = Complex64::new(c.norm(), 0.0);
        }
        self.grid.forward_in_place(coeffs).expect("sized to grid");
    }

    fn petviashvili(&self, coeffs: &mut [Complex64], cube: &[Complex64]) {
        let (mut num, mut den) = (0.0, 0.0);
        for ((c, q), l) in coeffs.iter().zip(cube).zip(&self.symbol) {
            num += l * c.norm_sqr();
            den += (c.conj() * q).re;
        }
        let m = (num / den).powf(1.5);
        for ((c, q), l) in coeffs.iter_mut().zip(cube).zip(&self.symbol) {
            *c = m * q / l;
        }
    }

    /// `φ ← φ - δ(ω-Δ)^{-1}((ω-Δ)φ - φ³)`, then rescaled onto the Nehari manifold.
    fn nehari_flow(&self, coeffs: &mut [Complex64], cube: &[Complex64]) {
        for ((c, q), l) in coeffs.iter_mut().zip(cube).zip(&self.symbol) {
            *c -= FLOW_STEP * (*c - q / l);
        }
        let (_, cube) = self.cube(coeffs);
        let (mut quad, mut quartic) = (0.0, 0.0);
        for ((c, q), l) in coeffs.iter().zip(&cube).zip(&self.symbol) {
            quad += l * c.norm_sqr();
            quartic += (c.conj() * q).re;
        }
        let t = (quad / quartic).sqrt();
        coeffs.iter_mut().for_each(|c| *c *= t);
    }
}

/// Solves for the positive ground state centered in the box.
pub fn solve_ground_state(problem: &GroundStateProblem) -> Result<GroundState> {
    let omega = problem.omega;
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
    }
    if !(problem.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", problem.tol)));
    }
    let grid = &problem.grid;
    if grid.dim() > 2 {
        return Err(Error::InvalidParameter("ground states are computed in one or two dimensions".into()));
    }
    let d = grid.dim();
    let center: Vec<f64> = grid.bounds().iter().map(|(a, b)| 0.5 * (a + b)).collect();
    let amplitude = (2.0 * omega).sqrt();
    let guess = SpectralField::from_fn(grid, |x| {
        let r2: f64 = (0..d).map(|j| (x[j] - center[j]).powi(2)).sum();
        Complex64::new(amplitude * (-0.5 * omega * r2).exp(), 0.0)
    });
    let ws = Workspace {
        grid: Arc::clone(grid),
        omega,
        symbol: grid.wave_number_sq().into_iter().map(|k2| omega + k2).collect(),
    };
    debug_assert!(ws.omega == omega);

    let mut coeffs = guess.into_coeffs();
    let mut method = GroundStateMethod::Petviashvili;
    let mut history = Vec::new();
    let (_, mut cube) = ws.cube(&coeffs);
    let mut residual = ws.residual(&coeffs, &cube);
    for iter in 1..=problem.max_iter {
        match method {
            GroundStateMethod::Petviashvili => ws.petviashvili(&mut coeffs, &cube),
            GroundStateMethod::NehariFlow => ws.nehari_flow(&mut coeffs, &cube),
        }
        ws.positive_part(&mut coeffs);
        cube = ws.cube(&coeffs).1;
        residual = ws.residual(&coeffs, &cube);
        if !residual.is_finite() {
            return Err(Error::NoConvergence {
                iterations: iter,
                residual,
            });
        }
        history.push(residual);
        if residual < problem.tol {
            let field = SpectralField::from_coeffs(grid, coeffs)?;
            let state = GroundState {
                field,
                omega,
                residual,
                iterations: iter,
                method,
                history,
            };
            let boundary = state.max_boundary();
            if boundary > BOUNDARY_DECAY {
                return Err(Error::BoundaryDecay { max_boundary: boundary });
            }
            return Ok(state);
        }
        if method == GroundStateMethod::Petviashvili && iter >= STAGNATION_WINDOW {
            let earlier = history[iter - STAGNATION_WINDOW];
            if residual > STAGNATION_FACTOR * earlier {
                method = GroundStateMethod::NehariFlow;
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: problem.max_iter,
        residual,
    })
}

/// `‖-Δφ + ωφ - φ³‖_{L²}` of a real field.
pub fn stationary_residual(phi: &SpectralField, omega: f64) -> f64 {
    let grid = phi.grid();
    let ws = Workspace {
        grid: Arc::clone(grid),
        omega,
        symbol: grid.wave_number_sq().into_iter().map(|k2| omega + k2).collect(),
    };
    let (_, cube) = ws.cube(phi.coeffs());
    ws.residual(phi.coeffs(), &cube)
}

fn max_boundary(field: &SpectralField) -> f64 {
    let grid = field.grid();
    let values = field.values();
    values
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let idx = grid.unravel(*i);
            (0..grid.dim()).any(|j| idx[j] == 0)
        })
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max)
}

fn asymmetry(field: &SpectralField) -> f64 {
    let grid = field.grid();
    let d = grid.dim();
    let n = grid.shape();
    let values = field.values();
    let square = d == 2 && n[0] == n[1] && grid.bounds()[0] == grid.bounds()[1];
    let mut worst: f64 = 0.0;
    for (i, v) in values.iter().enumerate() {
        let idx = grid.unravel(i);
        let mut reflected = [0usize; 3];
        for j in 0..d {
            reflected[j] = (n[j] - idx[j]) % n[j];
        }
        worst = worst.max((v - values[grid.ravel(&reflected[..d])]).norm());
        for j in 0..d {
            let mut single = idx;
            single[j] = reflected[j];
            worst = worst.max((v - values[grid.ravel(&single[..d])]).norm());
        }
        if square {
            worst = worst.max((v - values[grid.ravel(&[idx[1], idx[0]])]).norm());
        }
    }
    worst
}
