use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::multiplier::{build_filter, FilterShape};
use crate::norm::{lp_norm, NormKind};

/// A Lebesgue exponent in `[1, ∞]`, stored as its exact reciprocal.
///
/// Written as `"inf"`, an integer, or a fraction such as `"8/3"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Exponent {
    reciprocal: Ratio<i64>,
}

impl Exponent {
    pub const INFINITY: Exponent = Exponent {
        reciprocal: Ratio::new_raw(0, 1),
    };

    pub fn finite(p: Ratio<i64>) -> Result<Self> {
        if p < Ratio::from_integer(1) {
            return Err(Error::InvalidParameter(format!("exponent {p} is below 1")));
        }
        Ok(Exponent { reciprocal: p.recip() })
    }

    pub fn from_reciprocal(reciprocal: Ratio<i64>) -> Result<Self> {
        if reciprocal < Ratio::from_integer(0) || reciprocal > Ratio::from_integer(1) {
            return Err(Error::InvalidParameter(format!("reciprocal exponent {reciprocal} outside [0, 1]")));
        }
        Ok(Exponent { reciprocal })
    }

    pub fn reciprocal(&self) -> Ratio<i64> {
        self.reciprocal
    }

    pub fn is_infinite(&self) -> bool {
        *self.reciprocal.numer() == 0
    }

    pub fn value(&self) -> f64 {
        if self.is_infinite() {
            f64::INFINITY
        } else {
            *self.reciprocal.denom() as f64 / *self.reciprocal.numer() as f64
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.reciprocal.recip())
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if matches!(s, "inf" | "infinity" | "∞") {
            return Ok(Exponent::INFINITY);
        }
        let p: Ratio<i64> = s
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("cannot read exponent {s:?}; use an integer, a/b or inf")))?;
        Exponent::finite(p)
    }
}

impl TryFrom<String> for Exponent {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Exponent> for String {
    fn from(e: Exponent) -> String {
        e.to_string()
    }
}

/// A pair `(q, r)` in dimension `d` with `2/q = d(1/2 − 1/r)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPair", into = "RawPair")]
pub struct AdmissiblePair {
    q: Exponent,
    r: Exponent,
    d: usize,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    q: Exponent,
    r: Exponent,
    d: usize,
}

impl TryFrom<RawPair> for AdmissiblePair {
    type Error = Error;

    fn try_from(raw: RawPair) -> Result<Self> {
        AdmissiblePair::new(raw.q, raw.r, raw.d)
    }
}

impl From<AdmissiblePair> for RawPair {
    fn from(p: AdmissiblePair) -> Self {
        RawPair { q: p.q, r: p.r, d: p.d }
    }
}

impl AdmissiblePair {
    pub fn new(q: Exponent, r: Exponent, d: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::Inadmissible(format!("dimension {d} is not 1, 2 or 3")));
        }
        let half = Ratio::new(1, 2);
        let (iq, ir) = (q.reciprocal(), r.reciprocal());
        let lhs = iq * 2;
        let rhs = (half - ir) * d as i64;
        if lhs != rhs {
            return Err(Error::Inadmissible(format!(
                "2/q = {lhs} but d(1/2 - 1/r) = {rhs} for (q, r, d) = ({q}, {r}, {d})"
            )));
        }
        if iq > half || ir > half {
            return Err(Error::Inadmissible(format!("need q, r >= 2, got ({q}, {r})")));
        }
        if d == 2 && iq == half && r.is_infinite() {
            return Err(Error::Inadmissible("(q, r, d) = (2, inf, 2) is the excluded endpoint".into()));
        }
        Ok(AdmissiblePair { q, r, d })
    }

    /// `(q₀, r₀) = (4p₀/d, 2p₀/(p₀−1))`, the pair attached to an `L^{p₀}`
    /// potential bound.
    pub fn from_potential_exponent(p0: Ratio<i64>, d: usize) -> Result<Self> {
        if p0 <= Ratio::from_integer(1) {
            return Err(Error::Inadmissible(format!("potential exponent {p0} must exceed 1")));
        }
        let q = Exponent::from_reciprocal(Ratio::from_integer(d as i64) / (p0 * 4))?;
        let r = Exponent::from_reciprocal((p0 - 1) / (p0 * 2))?;
        AdmissiblePair::new(q, r, d)
    }

    pub fn q(&self) -> Exponent {
        self.q
    }

    pub fn r(&self) -> Exponent {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.d
    }
}

/// Probe of `‖e^{itΔ}Π_{τ/4}φ‖_{ℓ^q_τ([0,T]; L^r)} / ‖φ‖_{L²}`.
#[derive(Clone, Debug)]
pub struct StrichartzConfig {
    pub pair: AdmissiblePair,
    pub t_final: f64,
    pub tau_list: Vec<f64>,
    pub filter: FilterShape,
    pub datum: SpectralField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrichartzRow {
    pub tau: f64,
    /// Number of sampled times `t_k = kτ ≤ T`, including `t_0 = 0`.
    pub samples: usize,
    pub norm: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrichartzReport {
    pub pair: AdmissiblePair,
    pub t_final: f64,
    pub datum_l2: f64,
    pub rows: Vec<StrichartzRow>,
    /// Largest over smallest ratio across the sweep.
    pub spread: f64,
}

fn probe_one(grid: &Arc<Grid>, cfg: &StrichartzConfig, tau: f64) -> Result<(usize, f64)> {
    let filtered = build_filter(grid, 0.25 * tau, cfg.filter)?.apply(&cfg.datum)?;
    let k2 = grid.wave_number_sq();
    let samples = (cfg.t_final / tau * (1.0 + 1e-12)).floor() as usize + 1;
    let r = cfg.pair.r().value();
    let q = cfg.pair.q();
    let mut acc: f64 = 0.0;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    for k in 0..samples {
        let t = k as f64 * tau;
        // e^{itΔ} has symbol e^{-it|μ|²}; built per time to avoid drift.
        for ((v, c), k2) in values.iter_mut().zip(filtered.coeffs()).zip(&k2) {
            *v = c * Complex64::from_polar(1.0, -t * k2);
        }
        let lr = if r == 2.0 {
            (grid.volume() * values.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
        } else {
            grid.inverse_in_place(&mut values)?;
            lp_norm(grid, &values, r)?
        };
        if q.is_infinite() {
            acc = acc.max(lr);
        } else {
            acc += tau * lr.powf(q.value());
        }
    }
    let total = if q.is_infinite() { acc } else { acc.powf(1.0 / q.value()) };
    Ok((samples, total))
}

pub fn strichartz_probe(cfg: &StrichartzConfig) -> Result<StrichartzReport> {
    let grid = Arc::clone(cfg.datum.grid());
    if grid.dim() != cfg.pair.dim() {
        return Err(Error::InvalidParameter(format!(
            "pair is for dimension {}, datum lives in {}",
            cfg.pair.dim(),
            grid.dim()
        )));
    }
    if cfg.tau_list.is_empty() || cfg.tau_list.iter().any(|t| !(*t > 0.0 && *t <= cfg.t_final)) {
        return Err(Error::InvalidParameter("time steps must lie in (0, T]".into()));
    }
    let datum_l2 = crate::norm::norm(&cfg.datum, NormKind::L2)?;
    if !(datum_l2 > 0.0) {
        return Err(Error::InvalidParameter("datum has zero mass".into()));
    }
    let mut rows = Vec::with_capacity(cfg.tau_list.len());
    for &tau in &cfg.tau_list {
        let (samples, value) = probe_one(&grid, cfg, tau)?;
        rows.push(StrichartzRow {
            tau,
            samples,
            norm: value,
            ratio: value / datum_l2,
        });
    }
    let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(StrichartzReport {
        pair: cfg.pair,
        t_final: cfg.t_final,
        datum_l2,
        rows,
        spread: max / min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(s: &str) -> Exponent {
        s.parse().unwrap()
    }

    #[test]
    fn exponent_parsing_round_trip() {
        for s in ["inf", "2", "8", "8/3", "4"] {
            assert_eq!(ex(s).to_string(), s);
        }
        assert!(ex("inf").is_infinite());
        assert_eq!(ex("8/3").reciprocal(), Ratio::new(3, 8));
        assert!("1/2".parse::<Exponent>().is_err());
        assert!("x".parse::<Exponent>().is_err());
        let json = serde_json::to_string(&ex("8/3")).unwrap();
        assert_eq!(json, "\"8/3\"");
    }

    #[test]
    fn admissibility_is_exact() {
        assert!(AdmissiblePair::new(ex("inf"), ex("2"), 1).is_ok());
        assert!(AdmissiblePair::new(ex("8"), ex("4"), 1).is_ok());
        assert!(AdmissiblePair::new(ex("4"), ex("inf"), 1).is_ok());
        assert!(AdmissiblePair::new(ex("2"), ex("6"), 3).is_ok());
        assert!(AdmissiblePair::new(ex("8/3"), ex("8"), 2).is_ok());
        assert!(matches!(AdmissiblePair::new(ex("2"), ex("inf"), 2), Err(Error::Inadmissible(_))));
        assert!(matches!(AdmissiblePair::new(ex("8"), ex("5"), 1), Err(Error::Inadmissible(_))));
        // 2/q = 3(1/2 - 1/r) with q < 2
        assert!(AdmissiblePair::new(ex("3/2"), ex("18"), 3).is_err());
    }

    #[test]
    fn potential_exponent_pairs() {
        let p = AdmissiblePair::from_potential_exponent(Ratio::from_integer(2), 1).unwrap();
        assert_eq!(p.q(), ex("8"));
        assert_eq!(p.r(), ex("4"));
        let p = AdmissiblePair::from_potential_exponent(Ratio::from_integer(3), 2).unwrap();
        assert_eq!(p.q(), ex("6"));
        assert_eq!(p.r(), ex("3"));
    }

    #[test]
    fn pair_serde_rejects_inadmissible() {
        let ok: AdmissiblePair = serde_json::from_str(r#"{"q":"8","r":"4","d":1}"#).unwrap();
        assert_eq!(ok.q(), ex("8"));
        assert!(serde_json::from_str::<AdmissiblePair>(r#"{"q":"2","r":"inf","d":2}"#).is_err());
    }

    fn gaussian_config(pair: AdmissiblePair, taus: Vec<f64>) -> StrichartzConfig {
        let g = Arc::new(Grid::new(&[(-32.0, 32.0)], &[1024]).unwrap());
        StrichartzConfig {
            pair,
            t_final: 1.0,
            tau_list: taus,
            filter: FilterShape::Smooth,
            datum: SpectralField::from_fn(&g, |x| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0)),
        }
    }

    #[test]
    fn energy_pair_is_a_contraction() {
        let pair = AdmissiblePair::new(Exponent::INFINITY, ex("2"), 1).unwrap();
        let report = strichartz_probe(&gaussian_config(pair, vec![0.125, 0.0625, 0.03125])).unwrap();
        for row in &report.rows {
            assert!(row.ratio <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn finite_sum_against_direct_evaluation() {
        // At T = τ the sum has two terms; evaluate them from the exact
        // free Gaussian |u(t,x)| = (1+4t²)^{-1/4} e^{-x²/(2(1+4t²))}
        // (the filter is inactive on this datum to roundoff).
        let pair = AdmissiblePair::new(ex("8"), ex("4"), 1).unwrap();
        let tau = 1.0 / 32.0;
        let mut cfg = gaussian_config(pair, vec![tau]);
        cfg.t_final = tau;
        let report = strichartz_probe(&cfg).unwrap();
        let l4 = |t: f64| {
            let s = 1.0 + 4.0 * t * t;
            // ∫ |u|⁴ = s^{-1} √(π s / 2)
            (s.powi(-1) * (std::f64::consts::PI * s / 2.0).sqrt()).powf(0.25)
        };
        let expected = (tau * (l4(0.0).powi(8) + l4(tau).powi(8))).powf(1.0 / 8.0);
        assert_eq!(report.rows[0].samples, 2);
        assert!((report.rows[0].norm - expected).abs() < 1e-10 * expected);
    }
}
