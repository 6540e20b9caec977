use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::initial::{GroundStateSummary, InitialSpec};
use crate::error::{Error, Result};
use crate::ewi::{EwiParams, Snapshot, Stepper};
use crate::grid::Grid;
use crate::multiplier::FilterShape;
use crate::potential::{realize, PotentialSpec, RealizeOptions};

/// Evolution of a localized datum among point-like potential centers.
#[derive(Clone, Debug)]
pub struct DynamicsConfig {
    pub grid: Arc<Grid>,
    pub potential: PotentialSpec,
    pub realize: RealizeOptions,
    pub tau: f64,
    pub t_final: f64,
    pub beta: f64,
    pub sigma: f64,
    pub filter: Option<FilterShape>,
    pub initial: InitialSpec,
    /// Centers tested for the first approach of the density centroid.
    pub centers: Vec<Vec<f64>>,
    pub approach_radius: f64,
    pub snapshot_stride: usize,
}

/// First center the centroid comes close to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Approach {
    pub center_index: usize,
    pub center: Vec<f64>,
    pub step: usize,
    pub time: f64,
    pub distance: f64,
    /// False when the centroid never entered the approach radius and this is
    /// the closest pass over the whole run instead.
    pub within_radius: bool,
}

#[derive(Clone, Debug)]
pub struct DynamicsReport {
    pub snapshots: Vec<Snapshot>,
    /// `‖ψⁿ‖_{L²}` for every step.
    pub mass_trace: Vec<f64>,
    /// `max_n |‖ψⁿ‖ − ‖ψ⁰‖| / ‖ψ⁰‖`.
    pub relative_mass_drift: f64,
    /// `∫ x |ψⁿ|² / ∫ |ψⁿ|²` for every step.
    pub centroids: Vec<Vec<f64>>,
    pub first_approach: Option<Approach>,
    pub ground_state: Option<GroundStateSummary>,
    pub tau: f64,
}

/// Every inverse-power center in a potential description.
pub fn potential_centers(spec: &PotentialSpec) -> Vec<Vec<f64>> {
    match spec {
        PotentialSpec::InversePower { centers, .. } => centers.clone(),
        PotentialSpec::Sum { terms } => terms.iter().flat_map(potential_centers).collect(),
        _ => Vec::new(),
    }
}

fn centroid(grid: &Grid, values: &[Complex64]) -> Vec<f64> {
    let d = grid.dim();
    let mut moment = vec![0.0; d];
    let mut mass = 0.0;
    for (i, v) in values.iter().enumerate() {
        let w = v.norm_sqr();
        let idx = grid.unravel(i);
        mass += w;
        for (j, m) in moment.iter_mut().enumerate() {
            *m += w * grid.node(j, idx[j]);
        }
    }
    moment.into_iter().map(|m| m / mass).collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// The first center whose `radius`-ball the centroid path enters, or else the
/// center of the closest pass.
pub fn first_approach(centroids: &[Vec<f64>], centers: &[Vec<f64>], tau: f64, radius: f64) -> Option<Approach> {
    let mut closest: Option<Approach> = None;
    for (step, c) in centroids.iter().enumerate() {
        for (k, center) in centers.iter().enumerate() {
            let dist = distance(c, center);
            let approach = Approach {
                center_index: k,
                center: center.clone(),
                step,
                time: step as f64 * tau,
                distance: dist,
                within_radius: dist <= radius,
            };
            if approach.within_radius {
                // nearest among the centers inside the radius at this step
                let nearest = centers
                    .iter()
                    .enumerate()
                    .map(|(k, x)| (k, distance(c, x)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("nonempty");
                return Some(Approach {
                    center_index: nearest.0,
                    center: centers[nearest.0].clone(),
                    distance: nearest.1,
                    ..approach
                });
            }
            if closest.as_ref().map_or(true, |a| dist < a.distance) {
                closest = Some(approach);
            }
        }
    }
    closest
}

pub fn run_dynamics_demo(cfg: &DynamicsConfig) -> Result<DynamicsReport> {
    let d = cfg.grid.dim();
    if cfg.centers.iter().any(|c| c.len() != d) {
        return Err(Error::InvalidParameter("approach centers must match the grid dimension".into()));
    }
    if !(cfg.approach_radius > 0.0) {
        return Err(Error::InvalidParameter("approach radius must be positive".into()));
    }
    let potential = Arc::new(realize(&cfg.potential, &cfg.grid, cfg.realize)?);
    let prepared = cfg.initial.prepare(&cfg.grid)?;
    let params = EwiParams::new(cfg.tau, cfg.t_final, cfg.beta, cfg.sigma, cfg.filter, potential)?;
    let mut stepper = Stepper::new(&params)?;
    let start = stepper.initial_state(&prepared.field)?;
    let steps = params.steps()?;

    let grid = Arc::clone(&cfg.grid);
    let mut centroids = Vec::with_capacity(steps + 1);
    let mut buffer = vec![Complex64::new(0.0, 0.0); grid.len()];
    let traj = stepper.run_observed(&start, 0, steps, cfg.snapshot_stride, |_, coeffs| {
        buffer.copy_from_slice(coeffs);
        grid.inverse_in_place(&mut buffer).expect("sized to grid");
        centroids.push(centroid(&grid, &buffer));
    })?;

    let first = traj.mass_trace[0];
    let relative_mass_drift = traj.max_mass_drift() / first;
    let first_approach = first_approach(&centroids, &cfg.centers, cfg.tau, cfg.approach_radius);
    Ok(DynamicsReport {
        snapshots: traj.snapshots,
        mass_trace: traj.mass_trace,
        relative_mass_drift,
        centroids,
        first_approach,
        ground_state: prepared.ground_state,
        tau: cfg.tau,
    })
}
