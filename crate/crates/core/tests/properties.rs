//! Randomized invariants of the spectral kernel and one scheme step.

use std::sync::Arc;

use ewi_core::ewi::{ewi_step, EwiParams};
use ewi_core::multiplier::{build_filter, build_free_flow, build_phi1};
use ewi_core::potential::realize;
use ewi_core::{norm, FilterShape, Grid, NormKind, PotentialSpec, RealizeOptions, SpectralField};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn grid_strategy() -> impl Strategy<Value = Arc<Grid>> {
    (1usize..=3, 2u32..=5, 1.0f64..10.0, -3.0f64..3.0).prop_map(|(d, p, len, left)| {
        let n = 1usize << if d == 3 { p.min(4) } else { p + 1 };
        Arc::new(Grid::cube(d, left, left + len, n).unwrap())
    })
}

fn field(grid: &Arc<Grid>, seed: u64) -> SpectralField {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let values = (0..grid.len())
        .map(|_| Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
        .collect();
    SpectralField::from_values(grid, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval(grid in grid_strategy(), seed in any::<u64>()) {
        let f = field(&grid, seed);
        let mean_sq = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / grid.len() as f64;
        let coeff_sq: f64 = f.coeffs().iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((mean_sq - coeff_sq).abs() <= 1e-12 * coeff_sq);
    }

    #[test]
    fn free_flow_is_an_isometric_group(grid in grid_strategy(), seed in any::<u64>(), s in 0.0f64..3.0, t in 0.0f64..3.0) {
        let f = field(&grid, seed);
        let n0 = norm(&f, NormKind::L2).unwrap();
        let once = build_free_flow(&grid, s + t).apply(&f).unwrap();
        let twice = build_free_flow(&grid, t).apply(&build_free_flow(&grid, s).apply(&f).unwrap()).unwrap();
        prop_assert!((norm(&once, NormKind::L2).unwrap() - n0).abs() <= 1e-12 * n0);
        // phases t|μ|² reach ~1e5 here; each carries an ulp of roundoff
        let max_phase = (s + t) * grid.wave_number_sq().iter().fold(0.0f64, |a, &b| a.max(b));
        let slack = 1e-12f64.max(8.0 * f64::EPSILON * max_phase);
        prop_assert!(norm(&once.sub(&twice).unwrap(), NormKind::L2).unwrap() <= slack * n0);
    }

    #[test]
    fn filter_and_phi1_are_contractions(grid in grid_strategy(), seed in any::<u64>(), tau in 1e-4f64..1.0) {
        let f = field(&grid, seed);
        let n0 = norm(&f, NormKind::L2).unwrap();
        for shape in [FilterShape::Smooth, FilterShape::Sharp] {
            let filtered = build_filter(&grid, tau, shape).unwrap().apply(&f).unwrap();
            prop_assert!(norm(&filtered, NormKind::L2).unwrap() <= n0 * (1.0 + 1e-14));
        }
        for s in build_phi1(&grid, tau).unwrap().symbol() {
            prop_assert!(s.norm() <= 1.0);
        }
    }

    #[test]
    fn unforced_step_is_the_free_flow(grid in grid_strategy(), seed in any::<u64>(), tau in 1e-3f64..0.5) {
        let v = Arc::new(realize(&PotentialSpec::zero(), &grid, RealizeOptions::default()).unwrap());
        let params = EwiParams::new(tau, tau, 0.0, 1.0, Some(FilterShape::Smooth), v).unwrap();
        let f = field(&grid, seed);
        let stepped = ewi_step(&f, &params).unwrap();
        let free = build_free_flow(&grid, tau).apply(&f).unwrap();
        let n0 = norm(&f, NormKind::L2).unwrap();
        prop_assert!(norm(&stepped.sub(&free).unwrap(), NormKind::L2).unwrap() <= 1e-13 * n0);
    }

    #[test]
    fn constant_potential_step_commutes_with_phase(grid in grid_strategy(), seed in any::<u64>(), theta in 0.0f64..6.3) {
        let v = Arc::new(realize(&PotentialSpec::Constant { value: 1.5 }, &grid, RealizeOptions::default()).unwrap());
        let params = EwiParams::new(0.01, 0.01, 1.0, 1.0, Some(FilterShape::Smooth), v).unwrap();
        let f = field(&grid, seed);
        let rot = Complex64::from_polar(1.0, theta);
        let a = ewi_step(&f.scale(rot), &params).unwrap();
        let b = ewi_step(&f, &params).unwrap().scale(rot);
        let n0 = norm(&f, NormKind::L2).unwrap();
        prop_assert!(norm(&a.sub(&b).unwrap(), NormKind::L2).unwrap() <= 1e-13 * n0);
    }
}
