use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::initial::{GroundStateSummary, InitialSpec};
use super::{fit_order, OrderFit};
use crate::error::{Error, Result};
use crate::ewi::{EwiParams, Stepper};
use crate::field::SpectralField;
use crate::grid::{Grid, GridSpec};
use crate::multiplier::FilterShape;
use crate::norm::{norm, NormKind};
use crate::potential::{realize, PotentialField, PotentialSpec, RealizeOptions, SingularTreatment};

/// Errors below this fraction of the reference norm count as roundoff.
pub const DEGENERATE_LEVEL: f64 = 1e-10;
/// Largest relative change of the largest-τ errors when the reference step
/// is halved before the report is flagged.
pub const REFERENCE_TOLERANCE: f64 = 0.05;
/// The reference step must be at most this fraction of the smallest τ.
pub const REFERENCE_GAP: f64 = 0.25;

/// A time-step sweep at fixed spatial resolution.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub grid: Arc<Grid>,
    pub potential: PotentialSpec,
    pub realize: RealizeOptions,
    pub t_final: f64,
    pub beta: f64,
    pub sigma: f64,
    pub filter: Option<FilterShape>,
    /// Strictly decreasing.
    pub tau_list: Vec<f64>,
    pub tau_ref: f64,
    pub initial: InitialSpec,
    /// Subset of `{L2, H1}`.
    pub norms: Vec<NormKind>,
    /// Also run the reference at `tau_ref / 2` and compare.
    pub check_reference: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau_list.is_empty() {
            return Err(Error::InvalidParameter("empty time-step list".into()));
        }
        if self.tau_list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidParameter("time steps must be strictly decreasing".into()));
        }
        let smallest = *self.tau_list.last().expect("nonempty");
        if !(self.tau_ref <= REFERENCE_GAP * smallest * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "reference step {} must be at most a quarter of the smallest step {smallest}",
                self.tau_ref
            )));
        }
        if self.norms.is_empty() || self.norms.iter().any(|n| !matches!(n, NormKind::L2 | NormKind::H1)) {
            return Err(Error::InvalidParameter("sweep norms must be a nonempty subset of L2, H1".into()));
        }
        Ok(())
    }

    fn params(&self, tau: f64, potential: &Arc<PotentialField>) -> Result<EwiParams> {
        EwiParams::new(tau, self.t_final, self.beta, self.sigma, self.filter, Arc::clone(potential))
    }
}

/// One sweep member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    /// `‖ψ_ref(T) − ψ_τ(T)‖`; absent when not requested or the run failed.
    pub err_l2: Option<f64>,
    pub err_h1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl SweepRow {
    pub fn error(&self, kind: NormKind) -> Option<f64> {
        match kind {
            NormKind::L2 => self.err_l2,
            NormKind::H1 => self.err_h1,
            NormKind::Lp(_) => None,
        }
    }
}

/// Outcome of the optional reference rerun at half the step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCheck {
    pub tau_half: f64,
    /// Largest relative change over the requested norms for the largest τ.
    pub max_relative_change: f64,
    pub flagged: bool,
}

/// Run description recorded in the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    pub treatment: SingularTreatment,
    pub oversample: usize,
    pub t_final: f64,
    pub beta: f64,
    pub sigma: f64,
    pub filter: Option<FilterShape>,
    pub tau_ref: f64,
    pub initial: InitialSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_state: Option<GroundStateSummary>,
}

/// Wall-clock seconds, kept out of the deterministic report body.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub setup: f64,
    pub reference: f64,
    pub members: Vec<f64>,
    pub reference_check: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub norms: Vec<NormKind>,
    /// Sorted by τ, largest first.
    pub rows: Vec<SweepRow>,
    pub fit_l2: Option<OrderFit>,
    pub fit_h1: Option<OrderFit>,
    /// Why a requested fit is missing.
    pub fit_notes: Vec<String>,
    /// Every error is at roundoff level (the scheme is exact for the setup).
    pub degenerate: bool,
    /// Errors decrease with τ in every requested norm, allowing one inversion
    /// at the smallest τ.
    pub monotone: bool,
    pub reference_check: Option<ReferenceCheck>,
    pub meta: ReportMeta,
    #[serde(skip)]
    pub timings: Timings,
}

impl ConvergenceReport {
    pub fn fit(&self, kind: NormKind) -> Option<&OrderFit> {
        match kind {
            NormKind::L2 => self.fit_l2.as_ref(),
            NormKind::H1 => self.fit_h1.as_ref(),
            NormKind::Lp(_) => None,
        }
    }

    /// Members that produced errors.
    pub fn succeeded(&self) -> usize {
        self.rows.iter().filter(|r| r.failure.is_none()).count()
    }
}

fn final_state(params: &EwiParams, psi0: &SpectralField) -> Result<SpectralField> {
    let mut stepper = Stepper::new(params)?;
    let start = stepper.initial_state(psi0)?;
    let steps = params.steps()?;
    let traj = stepper.run(&start, 0, steps, steps)?;
    Ok(traj.snapshots.into_iter().last().expect("run records its end").field)
}

fn errors(norms: &[NormKind], reference: &SpectralField, state: &SpectralField) -> Result<(Option<f64>, Option<f64>)> {
    let diff = reference.sub(state)?;
    let mut out = (None, None);
    for kind in norms {
        match kind {
            NormKind::L2 => out.0 = Some(norm(&diff, NormKind::L2)?),
            NormKind::H1 => out.1 = Some(norm(&diff, NormKind::H1)?),
            NormKind::Lp(_) => {}
        }
    }
    Ok(out)
}

/// True when `errors` (τ descending) decrease, allowing the last pair to invert.
pub(crate) fn decreasing_with_one_tail_inversion(errors: &[f64]) -> bool {
    let n = errors.len();
    errors
        .windows(2)
        .enumerate()
        .all(|(i, w)| w[1] < w[0] || i + 2 == n)
}

/// Reference run first, then all members concurrently; errors at `T`.
pub fn run_convergence(sweep: &SweepConfig) -> Result<ConvergenceReport> {
    sweep.validate()?;
    let clock = Instant::now();
    let potential = Arc::new(realize(&sweep.potential, &sweep.grid, sweep.realize)?);
    let prepared = sweep.initial.prepare(&sweep.grid)?;
    // every member must divide T before anything expensive runs
    for &tau in &sweep.tau_list {
        sweep.params(tau, &potential)?;
    }
    let mut timings = Timings {
        setup: clock.elapsed().as_secs_f64(),
        ..Timings::default()
    };

    let clock = Instant::now();
    let reference = final_state(&sweep.params(sweep.tau_ref, &potential)?, &prepared.field)?;
    timings.reference = clock.elapsed().as_secs_f64();

    let members: Vec<(SweepRow, f64)> = sweep
        .tau_list
        .par_iter()
        .map(|&tau| {
            let clock = Instant::now();
            let outcome = sweep
                .params(tau, &potential)
                .and_then(|p| final_state(&p, &prepared.field))
                .and_then(|state| errors(&sweep.norms, &reference, &state));
            let row = match outcome {
                Ok((err_l2, err_h1)) => SweepRow {
                    tau,
                    err_l2,
                    err_h1,
                    failure: None,
                },
                Err(e) => SweepRow {
                    tau,
                    err_l2: None,
                    err_h1: None,
                    failure: Some(e.to_string()),
                },
            };
            (row, clock.elapsed().as_secs_f64())
        })
        .collect();
    let (rows, member_times): (Vec<SweepRow>, Vec<f64>) = members.into_iter().unzip();
    timings.members = member_times;

    let scale = norm(&reference, NormKind::H1)?;
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.failure.is_none()).collect();
    let degenerate = !ok.is_empty()
        && ok.iter().all(|r| {
            sweep
                .norms
                .iter()
                .all(|&k| r.error(k).is_some_and(|e| e <= DEGENERATE_LEVEL * scale))
        });

    let mut fit_l2 = None;
    let mut fit_h1 = None;
    let mut fit_notes = Vec::new();
    let mut monotone = true;
    for &kind in &sweep.norms {
        let (taus, errs): (Vec<f64>, Vec<f64>) = ok.iter().filter_map(|r| r.error(kind).map(|e| (r.tau, e))).unzip();
        monotone &= decreasing_with_one_tail_inversion(&errs);
        if degenerate {
            fit_notes.push(format!("{kind:?}: degenerate, errors at roundoff level"));
            continue;
        }
        match fit_order(&taus, &errs) {
            Ok(fit) if kind == NormKind::L2 => fit_l2 = Some(fit),
            Ok(fit) => fit_h1 = Some(fit),
            Err(e) => fit_notes.push(format!("{kind:?}: {e}")),
        }
    }

    let reference_check = if sweep.check_reference {
        let clock = Instant::now();
        let tau_half = 0.5 * sweep.tau_ref;
        let finer = final_state(&sweep.params(tau_half, &potential)?, &prepared.field)?;
        let mut change: f64 = 0.0;
        if let Some(first) = ok.first() {
            let coarse = final_state(&sweep.params(first.tau, &potential)?, &prepared.field)?;
            let (l2, h1) = errors(&sweep.norms, &finer, &coarse)?;
            for (new, old) in [(l2, first.err_l2), (h1, first.err_h1)] {
                if let (Some(new), Some(old)) = (new, old) {
                    change = change.max((new - old).abs() / old.max(f64::MIN_POSITIVE));
                }
            }
        }
        timings.reference_check = Some(clock.elapsed().as_secs_f64());
        Some(ReferenceCheck {
            tau_half,
            max_relative_change: change,
            flagged: !(change < REFERENCE_TOLERANCE),
        })
    } else {
        None
    };

    Ok(ConvergenceReport {
        norms: sweep.norms.clone(),
        rows,
        fit_l2,
        fit_h1,
        fit_notes,
        degenerate,
        monotone,
        reference_check,
        meta: ReportMeta {
            grid: sweep.grid.spec(),
            potential: sweep.potential.clone(),
            treatment: sweep.realize.treatment,
            oversample: potential.oversample(),
            t_final: sweep.t_final,
            beta: sweep.beta,
            sigma: sweep.sigma,
            filter: sweep.filter,
            tau_ref: sweep.tau_ref,
            initial: sweep.initial.clone(),
            ground_state: prepared.ground_state,
        },
        timings,
    })
}
