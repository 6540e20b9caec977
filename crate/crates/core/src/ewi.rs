//! Filtered first-order exponential wave integrator.
//!
//! One step maps `ψⁿ` to
//!
//! ```text
//! ψⁿ⁺¹ = e^{iτΔ} ψⁿ − iτ φ₁(iτΔ) Π_τ (V ψⁿ + β |ψⁿ|^{2σ} ψⁿ)
//! ```
//!
//! and an evolution starts from `ψ⁰ = Π_τ ψ₀`. All work happens on Fourier
//! coefficients; the nonlinearity is evaluated at the nodes of the base grid
//! and the potential through the oversampled product of [`PotentialField`].

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{same_grid, SpectralField};
use crate::grid::Grid;
use crate::multiplier::{build_filter, build_free_flow, build_phi1, FilterShape, Multiplier};
use crate::potential::PotentialField;

/// Relative slack when checking that `T/τ` is an integer.
const STEP_COUNT_SLACK: f64 = 1e-9;

/// Parameters of one evolution.
#[derive(Clone, Debug)]
pub struct EwiParams {
    pub tau: f64,
    pub t_final: f64,
    pub beta: f64,
    pub sigma: f64,
    /// `None` switches the filter off (diagnostics only).
    pub filter: Option<FilterShape>,
    pub grid: Arc<Grid>,
    pub potential: Arc<PotentialField>,
}

impl EwiParams {
    pub fn new(
        tau: f64,
        t_final: f64,
        beta: f64,
        sigma: f64,
        filter: Option<FilterShape>,
        potential: Arc<PotentialField>,
    ) -> Result<Self> {
        let params = EwiParams {
            tau,
            t_final,
            beta,
            sigma,
            filter,
            grid: Arc::clone(potential.grid()),
            potential,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {}", self.tau)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidParameter("beta must be finite".into()));
        }
        if !same_grid(&self.grid, self.potential.grid()) {
            return Err(Error::GridMismatch);
        }
        self.steps().map(|_| ())
    }

    /// `N = T/τ`, required to be a positive integer.
    pub fn steps(&self) -> Result<usize> {
        let ratio = self.t_final / self.tau;
        let n = ratio.round();
        if !(n >= 1.0) || (ratio - n).abs() > STEP_COUNT_SLACK * n {
            return Err(Error::InvalidParameter(format!(
                "final time {} is not a positive integer multiple of tau = {}",
                self.t_final, self.tau
            )));
        }
        Ok(n as usize)
    }

    /// Same setup with another time step.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        let mut p = self.clone();
        p.tau = tau;
        p.validate()?;
        Ok(p)
    }

    /// `Π_τ`, or the identity when the filter is off.
    pub fn filter_multiplier(&self) -> Result<Multiplier> {
        match self.filter {
            Some(shape) => build_filter(&self.grid, self.tau, shape),
            None => Ok(Multiplier::identity(&self.grid)),
        }
    }
}

/// Pointwise `β |ψ|^{2σ} ψ`, returned as a field.
pub fn nonlinearity(psi: &SpectralField, beta: f64, sigma: f64) -> Result<SpectralField> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    if beta == 0.0 {
        return Ok(SpectralField::zeros(psi.grid()));
    }
    let mut values = psi.values();
    apply_nonlinearity(&mut values, beta, sigma);
    SpectralField::from_values(psi.grid(), values)
}

fn apply_nonlinearity(values: &mut [Complex64], beta: f64, sigma: f64) {
    if sigma == 1.0 {
        values.par_iter_mut().for_each(|v| *v *= beta * v.norm_sqr());
    } else {
        values
            .par_iter_mut()
            .for_each(|v| *v *= beta * v.norm_sqr().powf(sigma));
    }
}

/// State of the integrator at step `n`.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub step: usize,
    /// `t_n = n τ`.
    pub time: f64,
    pub field: SpectralField,
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    /// `‖ψⁿ‖_{L²}` for every step covered, starting with the initial state.
    pub mass_trace: Vec<f64>,
}

impl Trajectory {
    /// The last recorded snapshot.
    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    /// Largest `|‖ψⁿ‖ − ‖ψ⁰‖|` over the trace.
    pub fn max_mass_drift(&self) -> f64 {
        let Some(&first) = self.mass_trace.first() else {
            return 0.0;
        };
        self.mass_trace
            .iter()
            .map(|m| (m - first).abs())
            .fold(0.0, f64::max)
    }
}

/// Precomputed symbols and buffers for repeated steps.
pub struct Stepper {
    params: EwiParams,
    free: Vec<Complex64>,
    /// `−iτ φ₁(−iτ|μ|²) χ(√τ|μ|)`.
    kick: Vec<Complex64>,
    filter: Multiplier,
    nodes: Vec<Complex64>,
    rhs: Vec<Complex64>,
    fine: Vec<Complex64>,
}

impl Stepper {
    pub fn new(params: &EwiParams) -> Result<Self> {
        params.validate()?;
        let grid = &params.grid;
        let filter = params.filter_multiplier()?;
        let free = build_free_flow(grid, params.tau).symbol().to_vec();
        let phi1 = build_phi1(grid, params.tau)?;
        let scale = Complex64::new(0.0, -params.tau);
        let kick = phi1
            .symbol()
            .iter()
            .zip(filter.symbol())
            .map(|(p, f)| scale * p * f)
            .collect();
        Ok(Stepper {
            params: params.clone(),
            free,
            kick,
            filter,
            nodes: vec![Complex64::new(0.0, 0.0); grid.len()],
            rhs: vec![Complex64::new(0.0, 0.0); grid.len()],
            fine: Vec::new(),
        })
    }

    pub fn params(&self) -> &EwiParams {
        &self.params
    }

    pub fn filter(&self) -> &Multiplier {
        &self.filter
    }

    /// `ψ⁰ = Π_τ ψ₀`.
    pub fn initial_state(&self, psi0: &SpectralField) -> Result<SpectralField> {
        self.filter.apply(psi0)
    }

    /// `V ψ + β|ψ|^{2σ}ψ` for the coefficients in `coeffs`, left in `self.rhs`.
    fn forcing(&mut self, coeffs: &[Complex64]) {
        let p = &self.params;
        if p.beta == 0.0 {
            self.rhs.iter_mut().for_each(|r| *r = Complex64::new(0.0, 0.0));
        } else {
            self.nodes.copy_from_slice(coeffs);
            p.grid
                .inverse_in_place(&mut self.nodes)
                .expect("buffer sized to the grid");
            apply_nonlinearity(&mut self.nodes, p.beta, p.sigma);
            p.grid
                .forward_in_place(&mut self.nodes)
                .expect("buffer sized to the grid");
            self.rhs.copy_from_slice(&self.nodes);
        }
        if !p.potential.is_zero() {
            p.potential.apply_coeffs(coeffs, &mut self.nodes, &mut self.fine);
            for (r, v) in self.rhs.iter_mut().zip(&self.nodes) {
                *r += v;
            }
        }
    }

    /// Advances `coeffs` by one step in place.
    pub fn step_coeffs(&mut self, coeffs: &mut [Complex64]) {
        self.forcing(coeffs);
        for (((c, e), k), r) in coeffs.iter_mut().zip(&self.free).zip(&self.kick).zip(&self.rhs) {
            *c = e * *c + k * r;
        }
    }

    /// The forcing increment `−iτ φ₁(iτΔ) Π_τ (Vψ + β|ψ|^{2σ}ψ)` alone.
    pub fn increment(&mut self, psi: &SpectralField) -> Result<SpectralField> {
        if !same_grid(&self.params.grid, psi.grid()) {
            return Err(Error::GridMismatch);
        }
        self.forcing(psi.coeffs());
        let out = self.kick.iter().zip(&self.rhs).map(|(k, r)| k * r).collect();
        SpectralField::from_coeffs(&self.params.grid, out)
    }

    /// One step on a field.
    pub fn step(&mut self, psi: &SpectralField) -> Result<SpectralField> {
        if !same_grid(&self.params.grid, psi.grid()) {
            return Err(Error::GridMismatch);
        }
        if !psi.is_finite() {
            return Err(Error::NonFinite {
                step: 0,
                last_norm: f64::NAN,
            });
        }
        let mut coeffs = psi.coeffs().to_vec();
        self.step_coeffs(&mut coeffs);
        SpectralField::from_coeffs(&self.params.grid, coeffs)
    }

    /// Runs steps `start+1 ..= end` from `state` (the state at step `start`).
    ///
    /// Snapshots are taken at multiples of `stride` and at `end`; the mass
    /// trace covers `start ..= end`.
    pub fn run(&mut self, state: &SpectralField, start: usize, end: usize, stride: usize) -> Result<Trajectory> {
        self.run_observed(state, start, end, stride, |_, _| {})
    }

    /// As [`Stepper::run`], calling `observe(n, coeffs)` after every step and
    /// once for the starting state.
    pub fn run_observed<F>(
        &mut self,
        state: &SpectralField,
        start: usize,
        end: usize,
        stride: usize,
        mut observe: F,
    ) -> Result<Trajectory>
    where
        F: FnMut(usize, &[Complex64]),
    {
        if !same_grid(&self.params.grid, state.grid()) {
            return Err(Error::GridMismatch);
        }
        if stride == 0 {
            return Err(Error::InvalidParameter("snapshot stride must be positive".into()));
        }
        let grid = Arc::clone(&self.params.grid);
        let tau = self.params.tau;
        let mut coeffs = state.coeffs().to_vec();
        let mut traj = Trajectory::default();
        let first_norm = state.mass().sqrt();
        if !first_norm.is_finite() {
            return Err(Error::NonFinite {
                step: start,
                last_norm: f64::NAN,
            });
        }
        traj.mass_trace.push(first_norm);
        observe(start, &coeffs);
        traj.snapshots.push(Snapshot {
            step: start,
            time: start as f64 * tau,
            field: state.clone(),
        });
        for n in start + 1..=end {
            self.step_coeffs(&mut coeffs);
            let norm = (grid.volume() * coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt();
            if !norm.is_finite() {
                return Err(Error::NonFinite {
                    step: n,
                    last_norm: *traj.mass_trace.last().expect("trace starts nonempty"),
                });
            }
            traj.mass_trace.push(norm);
            observe(n, &coeffs);
            if n % stride == 0 || n == end {
                traj.snapshots.push(Snapshot {
                    step: n,
                    time: n as f64 * tau,
                    field: SpectralField::from_coeffs(&grid, coeffs.clone())?,
                });
            }
        }
        Ok(traj)
    }
}

/// A single step of the scheme.
pub fn ewi_step(psi: &SpectralField, params: &EwiParams) -> Result<SpectralField> {
    Stepper::new(params)?.step(psi)
}

/// Full evolution from the unfiltered datum `psi0` over `T/τ` steps.
pub fn evolve(psi0: &SpectralField, params: &EwiParams, stride: usize) -> Result<Trajectory> {
    let mut stepper = Stepper::new(params)?;
    let start = stepper.initial_state(psi0)?;
    stepper.run(&start, 0, params.steps()?, stride)
}

/// Continues an evolution from a stored snapshot without re-filtering it,
/// up to `T/τ` steps in total.
pub fn evolve_from(snapshot: &Snapshot, params: &EwiParams, stride: usize) -> Result<Trajectory> {
    let total = params.steps()?;
    if snapshot.step > total {
        return Err(Error::InvalidParameter(format!(
            "snapshot step {} exceeds the {total} steps of the run",
            snapshot.step
        )));
    }
    Stepper::new(params)?.run(&snapshot.field, snapshot.step, total, stride)
}

/// Scheme settings stored next to trajectories and reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub tau: f64,
    pub t_final: f64,
    pub beta: f64,
    pub sigma: f64,
    pub filter: Option<FilterShape>,
}

impl From<&EwiParams> for SchemeSummary {
    fn from(p: &EwiParams) -> Self {
        SchemeSummary {
            tau: p.tau,
            t_final: p.t_final,
            beta: p.beta,
            sigma: p.sigma,
            filter: p.filter,
        }
    }
}
