//! Convergence sweeps, the discrete Strichartz probe and the four-center
//! dynamics run, plus the least-squares order fit they share.

mod convergence;
mod dynamics;
mod initial;
mod strichartz;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use convergence::{
    run_convergence, ConvergenceReport, ReferenceCheck, ReportMeta, SweepConfig, SweepRow, Timings, DEGENERATE_LEVEL,
    REFERENCE_GAP, REFERENCE_TOLERANCE,
};
pub use dynamics::{first_approach, potential_centers, run_dynamics_demo, Approach, DynamicsConfig, DynamicsReport};
pub use initial::{ground_state_grid, GroundStateSummary, InitialSpec, PreparedInitial};
pub use strichartz::{strichartz_probe, AdmissiblePair, Exponent, StrichartzConfig, StrichartzReport, StrichartzRow};

/// Least-squares line through `(ln τ, ln e)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square deviation of `ln e` from the fitted line.
    pub residual: f64,
    pub points: usize,
}

/// Fits `e ≈ C τ^p` and returns the slope `p`.
pub fn fit_order(taus: &[f64], errors: &[f64]) -> Result<OrderFit> {
    if taus.len() != errors.len() {
        return Err(Error::SizeMismatch {
            expected: taus.len(),
            got: errors.len(),
        });
    }
    if taus.len() < 3 {
        return Err(Error::InsufficientData(taus.len()));
    }
    if let Some(bad) = errors.iter().chain(taus).find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "order fit needs positive finite steps and errors, got {bad}"
        )));
    }
    let x: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("order fit needs distinct steps".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(OrderFit {
        slope,
        intercept,
        residual,
        points: taus.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn taus() -> Vec<f64> {
        (0..6).map(|k| 0.1 * 0.5f64.powi(k)).collect()
    }

    #[test]
    fn exact_power_laws() {
        let t = taus();
        let e: Vec<f64> = t.iter().map(|t| 0.3 * t).collect();
        let fit = fit_order(&t, &e).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        let e: Vec<f64> = t.iter().map(|t| 2.0 * t.sqrt()).collect();
        assert!((fit_order(&t, &e).unwrap().slope - 0.5).abs() < 1e-12);
    }

    #[test]
    fn perturbed_line_against_normal_equations() {
        let t = taus();
        let e: Vec<f64> = t
            .iter()
            .enumerate()
            .map(|(k, t)| t * (1.0 + if k % 2 == 0 { 0.05 } else { -0.05 }))
            .collect();
        let fit = fit_order(&t, &e).unwrap();
        // normal equations solved independently: [n Σx; Σx Σx²][b; p] = [Σy; Σxy]
        let x: Vec<f64> = t.iter().map(|v| v.ln()).collect();
        let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
        let (n, sx, sxx) = (x.len() as f64, x.iter().sum::<f64>(), x.iter().map(|v| v * v).sum::<f64>());
        let (sy, sxy) = (y.iter().sum::<f64>(), x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>());
        let p = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!((fit.slope - p).abs() < 1e-12);
        assert!((fit.slope - 1.0).abs() < 0.05);
        assert!(fit.residual > 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(fit_order(&[0.1, 0.05], &[1.0, 0.5]), Err(Error::InsufficientData(2))));
        assert!(fit_order(&[0.1, 0.05, 0.025], &[1.0, 0.0, 0.2]).is_err());
        assert!(fit_order(&[0.1, 0.05, 0.025], &[1.0, -0.5, 0.2]).is_err());
        assert!(fit_order(&[0.1, 0.1, 0.1], &[1.0, 0.5, 0.2]).is_err());
    }

    proptest! {
        #[test]
        fn recovers_any_power(p in 0.1f64..3.0, c in 1e-6f64..1e3) {
            let t = taus();
            let e: Vec<f64> = t.iter().map(|t| c * t.powf(p)).collect();
            let fit = fit_order(&t, &e).unwrap();
            prop_assert!((fit.slope - p).abs() < 1e-10);
            prop_assert!((fit.intercept - c.ln()).abs() < 1e-8);
        }
    }
}
