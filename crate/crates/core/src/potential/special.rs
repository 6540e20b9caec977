//! Fourier transform of the screened inverse power `|x|^{-α} e^{-|x|²/(2s²)}`.
//!
//! In `R^d` its transform is radial:
//! `f̂(ξ) = π^{d/2} Γ(a) (2s²)^a / Γ(b) · M(a; b; -|ξ|² s²/2)`
//! with `a = (d-α)/2`, `b = d/2` and `M` Kummer's confluent hypergeometric
//! function.

use libm::tgamma;

/// Below this argument `M(a;b;-z)` is summed through Kummer's transformation,
/// above it through the large-argument expansion (truncation error ~`e^{-z}`).
const ASYMPTOTIC_FROM: f64 = 40.0;

/// `M(a; b; -z)` for `z >= 0` and `b > a > 0`.
pub(crate) fn kummer_neg(a: f64, b: f64, z: f64) -> f64 {
    debug_assert!(z >= 0.0 && b > a && a > 0.0);
    if z < ASYMPTOTIC_FROM {
        // e^{-z} M(b-a; b; z): every term is positive.
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut n = 0.0;
        while term > 1e-17 * sum {
            term *= (b - a + n) / (b + n) * z / (n + 1.0);
            sum += term;
            n += 1.0;
        }
        (-z).exp() * sum
    } else {
        let mut term: f64 = 1.0;
        let mut sum: f64 = 1.0;
        let mut s = 0.0;
        loop {
            let next = term * (a + s) * (a - b + 1.0 + s) / ((s + 1.0) * z);
            if next.abs() >= term.abs() || next.abs() < 1e-17 * sum.abs() {
                break;
            }
            term = next;
            sum += term;
            s += 1.0;
        }
        tgamma(b) / tgamma(b - a) * z.powf(-a) * sum
    }
}

/// Radial transform of `|x|^{-α} e^{-|x|²/(2s²)}` in `d` dimensions.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ScreenedTransform {
    a: f64,
    b: f64,
    s: f64,
    scale: f64,
}

impl ScreenedTransform {
    pub fn new(d: usize, alpha: f64, s: f64) -> Self {
        let a = 0.5 * (d as f64 - alpha);
        let b = 0.5 * d as f64;
        let scale = std::f64::consts::PI.powf(b) * tgamma(a) * (2.0 * s * s).powf(a) / tgamma(b);
        ScreenedTransform { a, b, s, scale }
    }

    /// `f̂` at `|ξ|² = k2`.
    pub fn at(&self, k2: f64) -> f64 {
        self.scale * kummer_neg(self.a, self.b, 0.5 * k2 * self.s * self.s)
    }

    /// `|x|^{-α} e^{-|x|²/(2s²)}` at `|x|² = r2 > 0`.
    pub fn screened(&self, r2: f64, alpha: f64) -> f64 {
        r2.powf(-0.5 * alpha) * (-0.5 * r2 / (self.s * self.s)).exp()
    }

    /// `|x|^{-α} (1 - e^{-|x|²/(2s²)})`, continuous with value 0 at the origin.
    pub fn remainder(&self, r2: f64, alpha: f64) -> f64 {
        if r2 == 0.0 {
            return 0.0;
        }
        -r2.powf(-0.5 * alpha) * (-0.5 * r2 / (self.s * self.s)).exp_m1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_parameters_give_exponential() {
        for &z in &[0.0, 0.3, 5.0, 39.0] {
            let got = kummer_neg(0.7, 0.7 + 1e-14, z);
            assert!((got - (-z as f64).exp()).abs() < 1e-12, "z {z}");
        }
    }

    #[test]
    fn error_function_identity_across_branches() {
        // M(1/2; 3/2; -z) = √π erf(√z) / (2√z)
        for &z in &[1e-6, 0.1, 2.0, 10.0, 39.99, 40.01, 100.0, 1e4, 1e7] {
            let got = kummer_neg(0.5, 1.5, z);
            let r = z.sqrt();
            let exact = std::f64::consts::PI.sqrt() * libm::erf(r) / (2.0 * r);
            assert!((got - exact).abs() < 1e-13 * exact, "z {z}: {got} vs {exact}");
        }
    }

    // 2 ∫_0^∞ r^{-α} e^{-r²/2s²} cos(kr) dr after r = t^p, p = 1/(1-α),
    // which removes the singularity.
    fn one_dimensional_quadrature(alpha: f64, s: f64, k: f64) -> f64 {
        let p = 1.0 / (1.0 - alpha);
        let t_max = (12.0 * s).powf(1.0 / p);
        let panels = 4000;
        let h = t_max / panels as f64;
        let (nodes, weights) = ([-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6], [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9]);
        let mut sum = 0.0;
        for m in 0..panels {
            let mid = (m as f64 + 0.5) * h;
            for (x, w) in nodes.iter().zip(weights) {
                let t = mid + 0.5 * h * x;
                let r = t.powf(p);
                sum += w * 0.5 * h * p * (-r * r / (2.0 * s * s)).exp() * (k * r).cos();
            }
        }
        2.0 * sum
    }

    #[test]
    fn one_dimensional_transform_matches_quadrature() {
        for &alpha in &[0.51, 0.76, 0.99] {
            let f = ScreenedTransform::new(1, alpha, 1.3);
            for &k in &[0.0, 0.7, 3.0, 6.5] {
                let exact = one_dimensional_quadrature(alpha, 1.3, k);
                let got = f.at(k * k);
                assert!((got - exact).abs() < 1e-9 * exact.abs().max(1e-3), "alpha {alpha} k {k}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn three_dimensional_coulomb_limit() {
        // For α = 1, d = 3: f̂ = 4π/k² (1 + 1/(ks)² + 3/(ks)⁴ + ...).
        let f = ScreenedTransform::new(3, 1.0, 0.5);
        let k2: f64 = 1e6;
        let x = 1.0 / (k2 * 0.25);
        let got = f.at(k2);
        assert!((got * k2 / (4.0 * std::f64::consts::PI) - (1.0 + x + 3.0 * x * x)).abs() < 1e-12);
    }

    #[test]
    fn remainder_plus_screened_is_the_power() {
        let f = ScreenedTransform::new(2, 1.0, 0.8);
        for &r2 in &[1e-8, 0.01, 1.0, 30.0] {
            let sum = f.screened(r2, 1.0) + f.remainder(r2, 1.0);
            assert!((sum - 1.0 / r2.sqrt()).abs() < 1e-12 / r2.sqrt());
        }
        assert_eq!(f.remainder(0.0, 1.0), 0.0);
    }
}
