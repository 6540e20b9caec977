//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.
//!
//! Run with `cargo test -p ewi-core --test acceptance -- --nocapture` to see
//! the lines as they are produced. `EWI_ACCEPTANCE=5,7` restricts the run to
//! the listed criteria; the others print SKIP.

use std::sync::Arc;

use ewi_core::config::preset;
use ewi_core::ewi::{ewi_step, evolve, EwiParams};
use ewi_core::experiments::{
    run_convergence, run_dynamics_demo, strichartz_probe, AdmissiblePair, ConvergenceReport, Exponent,
};
use ewi_core::groundstate::{solve_ground_state, stationary_residual, GroundStateProblem};
use ewi_core::io::{write_dynamics, RunInfo};
use ewi_core::multiplier::{build_filter, build_free_flow, build_phi1, phi1};
use ewi_core::potential::{realize, FourierMode};
use ewi_core::{norm, FilterShape, Grid, NormKind, PotentialSpec, RealizeOptions, SpectralField};
use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn sweep(name: &str) -> Result<ConvergenceReport, String> {
    let cfg = preset(name).map_err(|e| e.to_string())?;
    let sweep = cfg.sweep().map_err(|e| e.to_string())?;
    run_convergence(&sweep).map_err(|e| e.to_string())
}

fn slopes(report: &ConvergenceReport) -> (Option<f64>, Option<f64>) {
    (report.fit_l2.as_ref().map(|f| f.slope), report.fit_h1.as_ref().map(|f| f.slope))
}

fn describe(name: &str, report: &ConvergenceReport) -> String {
    let (l2, h1) = slopes(report);
    let fmt = |s: Option<f64>| s.map_or("none".to_string(), |s| format!("{s:.3}"));
    format!(
        "{name}: L2 order {}, H1 order {}, monotone {}, failed members {}",
        fmt(l2),
        fmt(h1),
        report.monotone,
        report.rows.len() - report.succeeded()
    )
}

fn order_criterion(name: &str, l2: (f64, f64), h1: Option<(f64, f64)>) -> Outcome {
    let report = sweep(name)?;
    let (sl2, sh1) = slopes(&report);
    let ok_l2 = sl2.is_some_and(|s| within(s, l2.0, l2.1));
    let ok_h1 = match h1 {
        Some((lo, hi)) => sh1.is_some_and(|s| within(s, lo, hi)),
        None => true,
    };
    check(ok_l2 && ok_h1, describe(name, &report))
}

fn criterion_1() -> Outcome {
    order_criterion("fig1a", (0.90, 1.10), Some((0.40, 0.60)))
}

fn criterion_2() -> Outcome {
    order_criterion("fig1b", (0.70, 0.90), Some((0.30, 0.50)))
}

fn criterion_3() -> Outcome {
    order_criterion("fig2a", (0.90, f64::INFINITY), Some((0.40, 0.60)))
}

fn criterion_4() -> Outcome {
    let a = order_criterion("fig3a", (0.85, f64::INFINITY), None);
    let b = order_criterion("fig3b", (0.85, f64::INFINITY), None);
    let detail = |o: &Outcome| match o {
        Ok(s) | Err(s) => s.clone(),
    };
    check(a.is_ok() && b.is_ok(), format!("{}; {}", detail(&a), detail(&b)))
}

/// One step on `A e^{ikx}` with constant `V = c` against the exact
/// `A e^{ikx} e^{-i(k² + c + β|A|²)τ}`.
fn plane_wave_local_error(tau: f64) -> f64 {
    let (k, c, beta, amp) = (3.0, 2.0, 1.0, 0.8);
    let grid = Arc::new(Grid::new(&[(0.0, 2.0 * std::f64::consts::PI)], &[64]).unwrap());
    let v = Arc::new(realize(&PotentialSpec::Constant { value: c }, &grid, RealizeOptions::default()).unwrap());
    let params = EwiParams::new(tau, tau, beta, 1.0, Some(FilterShape::Smooth), v).unwrap();
    let psi = SpectralField::from_fn(&grid, |x| Complex64::from_polar(amp, k * x[0]));
    let stepped = ewi_step(&psi, &params).unwrap();
    let lambda = k * k + c + beta * amp * amp;
    let exact = SpectralField::from_fn(&grid, |x| Complex64::from_polar(amp, k * x[0] - lambda * tau));
    norm(&stepped.sub(&exact).unwrap(), NormKind::L2).unwrap()
}

fn criterion_5() -> Outcome {
    // √τ k ≤ 1 for every τ here, so the filter passes the wave untouched.
    let taus = [0.04, 0.02, 0.01, 0.005];
    let errors: Vec<f64> = taus.iter().map(|&t| plane_wave_local_error(t)).collect();
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let ok = ratios.iter().all(|r| (r - 4.0).abs() <= 0.4);
    check(ok, format!("local error ratios {ratios:.4?}"))
}

fn random_field(grid: &Arc<Grid>, seed: u64) -> SpectralField {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let values = (0..grid.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    SpectralField::from_values(grid, values).unwrap()
}

/// Coefficients of the lattice points of `coarse` inside `fine`'s band and back.
fn pad(coarse: &Grid, fine: &Grid, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); fine.len()];
    for (i, &j) in coarse.embedding_into(fine).unwrap().iter().enumerate() {
        out[j] = coeffs[i];
    }
    out
}

fn property_suite() -> Vec<(&'static str, bool, String)> {
    let mut results = Vec::new();
    let g1 = Arc::new(Grid::new(&[(-16.0, 16.0)], &[512]).unwrap());
    let g2 = Arc::new(Grid::new(&[(-8.0, 8.0), (-4.0, 4.0)], &[64, 32]).unwrap());
    let g3 = Arc::new(Grid::cube(3, -4.0, 4.0, 16).unwrap());

    // Parseval with average-normalized coefficients: mean |v|² = Σ |c|².
    let mut worst: f64 = 0.0;
    for (s, g) in [&g1, &g2, &g3].into_iter().enumerate() {
        let f = random_field(g, s as u64);
        let lhs: f64 = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / g.len() as f64;
        let rhs: f64 = f.coeffs().iter().map(|c| c.norm_sqr()).sum();
        worst = worst.max((lhs - rhs).abs() / rhs);
    }
    results.push(("Parseval", worst <= 1e-12, format!("relative defect {worst:.2e}")));

    let mut worst: f64 = 0.0;
    for (s, g) in [&g1, &g2, &g3].into_iter().enumerate() {
        let f = random_field(g, 10 + s as u64);
        let before = norm(&f, NormKind::L2).unwrap();
        for t in [1e-3, 0.37, 5.0] {
            let after = norm(&build_free_flow(g, t).apply(&f).unwrap(), NormKind::L2).unwrap();
            worst = worst.max((after - before).abs() / before);
        }
    }
    results.push(("free-flow isometry", worst <= 1e-12, format!("relative defect {worst:.2e}")));

    let mut bad = 0usize;
    for g in [&g1, &g2, &g3] {
        let k2 = g.wave_number_sq();
        for tau in [1e-4, 1e-3, 0.01, 0.1] {
            for shape in [FilterShape::Smooth, FilterShape::Sharp] {
                let filter = build_filter(g, tau, shape).unwrap();
                for (s, k2) in filter.symbol().iter().zip(&k2) {
                    let r = (tau * k2).sqrt();
                    let pass = r <= 1.0 && *s != Complex64::new(1.0, 0.0);
                    let stop = r >= 2.0 && *s != Complex64::new(0.0, 0.0);
                    bad += (pass || stop) as usize;
                }
            }
        }
    }
    results.push(("filter passband exactness", bad == 0, format!("{bad} modes off")));

    let at_zero = phi1(Complex64::new(0.0, 0.0));
    let mut largest: f64 = 0.0;
    for g in [&g1, &g2, &g3] {
        for tau in [1e-4, 1e-2, 1.0] {
            for s in build_phi1(g, tau).unwrap().symbol() {
                largest = largest.max(s.norm());
            }
        }
    }
    results.push((
        "phi1(0) = 1 and |phi1 symbol| <= 1",
        at_zero == Complex64::new(1.0, 0.0) && largest <= 1.0,
        format!("phi1(0) = {at_zero}, max |symbol| = {largest}"),
    ));

    // Band-limited potential and field: the product on a 4x finer grid is
    // exact, and its base-band coefficients are the Galerkin product.
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    let modes: Vec<FourierMode> = (0..g2.len())
        .map(|i| FourierMode {
            l: g2.lattice(i)[..2].to_vec(),
            re: rng.gen_range(-1.0..1.0),
            im: rng.gen_range(-1.0..1.0),
        })
        .collect();
    let spec = PotentialSpec::Modes { modes };
    let psi = random_field(&g2, 22);
    let fine = Arc::new(g2.refined(4).unwrap());
    let mut worst: f64 = 0.0;
    for factor in [2, 4] {
        let v = realize(&spec, &g2, RealizeOptions { oversample: Some(factor), ..Default::default() }).unwrap();
        let product = v.apply(&psi).unwrap();
        let own: Vec<Complex64> = v.fine_values().iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let own = v.fine_grid().forward(&own).unwrap();
        let v_fine = fine.inverse(&pad(v.fine_grid(), &fine, &own)).unwrap();
        let psi_fine = fine.inverse(&pad(&g2, &fine, psi.coeffs())).unwrap();
        let prod: Vec<Complex64> = v_fine.iter().zip(&psi_fine).map(|(a, b)| a * b).collect();
        let prod = fine.forward(&prod).unwrap();
        for (i, &j) in g2.embedding_into(&fine).unwrap().iter().enumerate() {
            worst = worst.max((product.coeffs()[i] - prod[j]).norm());
        }
    }
    results.push(("de-aliased product vs fine grid", worst <= 1e-10, format!("max difference {worst:.2e}")));

    let mut cfg = preset("fig1a").unwrap();
    cfg.scheme.tau = Some(0.01);
    let (params, datum) = cfg.single_run().unwrap();
    let drift = |tau: f64| evolve(&datum, &params.with_tau(tau).unwrap(), usize::MAX).unwrap().max_mass_drift();
    let (coarse, fine_drift) = (drift(0.01), drift(0.005));
    let ratio = coarse / fine_drift;
    results.push((
        "mass-drift halving on the 1D preset",
        within(ratio, 1.5, 2.5),
        format!("drifts {coarse:.3e} / {fine_drift:.3e} = {ratio:.3}"),
    ));
    results
}

fn criterion_6() -> Outcome {
    let results = property_suite();
    let ok = results.iter().all(|r| r.1);
    let detail = results
        .iter()
        .map(|(name, ok, d)| format!("{name} {} ({d})", if *ok { "ok" } else { "FAILED" }))
        .collect::<Vec<_>>()
        .join("; ");
    check(ok, detail)
}

fn criterion_7() -> Outcome {
    let cfg = preset("strichartz-1d").map_err(|e| e.to_string())?;
    let probe = cfg.strichartz().map_err(|e| e.to_string())?;
    let two = Exponent::finite(Ratio::from_integer(2)).unwrap();
    let four = Exponent::finite(Ratio::from_integer(4)).unwrap();
    let eight = Exponent::finite(Ratio::from_integer(8)).unwrap();
    let taus: Vec<f64> = (3..=9).map(|k| 0.5f64.powi(k)).collect();
    if probe.tau_list != taus || probe.pair != AdmissiblePair::new(eight, four, 1).unwrap() {
        return Err(format!("preset does not probe (8,4) over 2^-3..2^-9: {:?}", probe.tau_list));
    }
    let pair_report = strichartz_probe(&probe).map_err(|e| e.to_string())?;

    let mut energy = probe.clone();
    energy.pair = AdmissiblePair::new(Exponent::INFINITY, two, 1).unwrap();
    let energy_report = strichartz_probe(&energy).map_err(|e| e.to_string())?;
    let max_energy = energy_report.rows.iter().map(|r| r.ratio).fold(0.0, f64::max);

    let excluded = AdmissiblePair::new(two, Exponent::INFINITY, 2);
    let ok = max_energy <= 1.0 + 1e-12 && pair_report.spread <= 2.0 && excluded.is_err();
    check(
        ok,
        format!(
            "(inf,2) max ratio {max_energy:.15}; (8,4) max/min {:.4}; (2,inf) in d=2 {}",
            pair_report.spread,
            match excluded {
                Err(e) => format!("rejected: {e}"),
                Ok(_) => "accepted".into(),
            }
        ),
    )
}

fn criterion_8() -> Outcome {
    let line = Arc::new(Grid::new(&[(-32.0, 32.0)], &[1024]).unwrap());
    let state = solve_ground_state(&GroundStateProblem::new(1.0, Arc::clone(&line))).map_err(|e| e.to_string())?;
    let sech_error = state
        .field
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| (v - 2f64.sqrt() / line.node(0, k).cosh()).norm())
        .fold(0.0, f64::max);

    let plane = Arc::new(Grid::cube(2, -16.0, 16.0, 512).unwrap());
    let state = solve_ground_state(&GroundStateProblem::new(3.0, plane)).map_err(|e| e.to_string())?;
    let residual = stationary_residual(&state.field, 3.0);
    let values = state.field.values();
    let positive = values.iter().all(|v| v.re >= -1e-10 && v.im.abs() <= 1e-12);
    let asymmetry = state.asymmetry();
    check(
        sech_error <= 1e-6 && residual < 1e-8 && positive && asymmetry <= 1e-8,
        format!(
            "1D sech error {sech_error:.2e}; 2D residual {residual:.2e}, positive {positive}, asymmetry {asymmetry:.2e}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let cfg = preset("fig4").map_err(|e| e.to_string())?;
    let demo = cfg.dynamics().map_err(|e| e.to_string())?;
    if demo.tau != 1e-3 || demo.grid.shape() != [256, 256] {
        return Err("preset is not tau = 1e-3 on 256^2".into());
    }
    let report = run_dynamics_demo(&demo).map_err(|e| format!("run aborted: {e}"))?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let files = write_dynamics(&report, &RunInfo::default(), dir.path()).map_err(|e| e.to_string())?;
    let emitted = !files.is_empty() && files.iter().all(|f| f.is_file());
    let drift = report.relative_mass_drift;
    let approach = report.first_approach.as_ref();
    let upper = approach.is_some_and(|a| a.within_radius && a.center == vec![0.0, 1.0]);
    check(
        drift < 1e-2 && upper && emitted,
        format!(
            "mass drift {drift:.3e}; first approach {:?}; {} snapshots",
            approach.map(|a| (&a.center, a.time, a.within_radius)),
            files.len()
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 line preset, alpha 0.51", criterion_1),
        ("2 line preset, alpha 0.76", criterion_2),
        ("3 plane Coulomb", criterion_3),
        ("4 cube Bessel potentials", criterion_4),
        ("5 local error", criterion_5),
        ("6 property suite", criterion_6),
        ("7 Strichartz probe", criterion_7),
        ("8 ground state", criterion_8),
        ("9 four-center dynamics", criterion_9),
    ];
    let only: Option<Vec<String>> = std::env::var("EWI_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').map(|s| s.trim().to_string()).collect());
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let number = name.split(' ').next().unwrap_or_default();
        if only.as_ref().is_some_and(|o| !o.iter().any(|s| s == number)) {
            println!("SKIP criterion {name}");
            continue;
        }
        let clock = std::time::Instant::now();
        let outcome = run();
        let secs = clock.elapsed().as_secs_f64();
        match &outcome {
            Ok(d) => println!("PASS criterion {name} [{secs:.0} s]: {d}"),
            Err(d) => {
                println!("FAIL criterion {name} [{secs:.0} s]: {d}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
