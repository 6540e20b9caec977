//! External potentials: declarative specs, realization on a grid, and the
//! de-aliased product `V ψ`.
//!
//! A realized potential keeps real samples on an oversampled grid. The
//! product zero-pads `ψ` onto that grid, multiplies pointwise, transforms
//! back and keeps the base band, which is exact for band-limited products
//! that fit the fine lattice.
//!
//! Inverse powers are by default realized spectrally: each center is split
//! into `Z|x-c|^{-α} e^{-|x-c|²/(2s²)}`, whose Fourier coefficients are known
//! in closed form, plus a remainder that vanishes like `|x-c|^{2-α}` and is
//! sampled pointwise. The fine samples are then the fine-band truncation of
//! `V`, and with any oversampling factor the base-band product equals the
//! Galerkin product `Π_N(V ψ)` up to the remainder's aliasing.
//!
//! Random coefficients are drawn from `ChaCha20Rng::seed_from_u64(seed)`,
//! real part first, over the lattice in lexicographic order of `l` with each
//! `l_j` running from `-N_j/2` to `N_j/2 - 1` (axis 0 slowest).

mod quadrature;
mod special;

use std::sync::Arc;

use num_complex::Complex64;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{same_grid, SpectralField};
use crate::grid::Grid;
use quadrature::{integrate_inverse_power, Cell};
use special::ScreenedTransform;

/// Seed used when a random potential does not name one.
pub const DEFAULT_SEED: u64 = 20_250_101;

/// Relative tolerance of the singular-cell quadrature.
pub const CELL_QUADRATURE_TOL: f64 = 1e-8;

/// One Fourier mode `v̂_l` of an explicitly listed potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierMode {
    pub l: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Declarative potential description.
///
/// The Fourier family (`Bessel`, `Random`, `Modes`) defines
/// `V(x) = Re Σ_l v̂_l e^{iμ_l·(x-a)}` over the lattice of the grid it is
/// realized on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `Σ_j Z_j / |x - x_j|^α`.
    InversePower {
        centers: Vec<Vec<f64>>,
        charges: Vec<f64>,
        alpha: f64,
    },
    /// `v̂_l = (1 + |μ_l|²)^{-exponent}`.
    Bessel { exponent: f64 },
    /// `v̂_0 = mean`, `v̂_l = ξ_l / |μ_l|^{decay}` with `ξ_l` uniform on
    /// `[-1,1] + i[-1,1]`. The index set is `{-M_j/2, …, M_j/2-1}` with
    /// `M = lattice`, or the base lattice when unset.
    Random {
        decay: f64,
        #[serde(default = "one")]
        mean: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lattice: Option<Vec<usize>>,
    },
    /// Explicit coefficient list; unlisted modes are zero.
    Modes { modes: Vec<FourierMode> },
    Constant { value: f64 },
    Sum { terms: Vec<PotentialSpec> },
}

fn one() -> f64 {
    1.0
}

impl PotentialSpec {
    pub fn zero() -> Self {
        PotentialSpec::Constant { value: 0.0 }
    }

    /// Single-center inverse power potential `charge / |x - center|^alpha`.
    pub fn inverse_power(center: &[f64], charge: f64, alpha: f64) -> Self {
        PotentialSpec::InversePower {
            centers: vec![center.to_vec()],
            charges: vec![charge],
            alpha,
        }
    }

    fn has_inverse_power(&self) -> bool {
        match self {
            PotentialSpec::InversePower { .. } => true,
            PotentialSpec::Sum { terms } => terms.iter().any(|t| t.has_inverse_power()),
            _ => false,
        }
    }


    /// Fills every unset random seed with `seed`.
    pub fn resolve_seed(&mut self, seed: u64) {
        match self {
            PotentialSpec::Random { seed: s @ None, .. } => *s = Some(seed),
            PotentialSpec::Sum { terms } => terms.iter_mut().for_each(|t| t.resolve_seed(seed)),
            _ => {}
        }
    }

    /// Overrides every random seed with `seed`.
    pub fn override_seed(&mut self, seed: u64) {
        match self {
            PotentialSpec::Random { seed: s, .. } => *s = Some(seed),
            PotentialSpec::Sum { terms } => terms.iter_mut().for_each(|t| t.override_seed(seed)),
            _ => {}
        }
    }

    /// Smallest oversampling factor for which the product with a base-band
    /// field is alias-free on the base band.
    fn min_oversample(&self, grid: &Grid) -> usize {
        match self {
            PotentialSpec::Random { lattice: Some(m), .. } => {
                let mut factor = 2;
                for (j, &mj) in m.iter().enumerate().take(grid.dim()) {
                    let n = grid.shape()[j];
                    while factor < 8 && (factor * n < mj + n || factor * n <= mj) {
                        factor *= 2;
                    }
                }
                factor
            }
            PotentialSpec::Sum { terms } => terms.iter().map(|t| t.min_oversample(grid)).max().unwrap_or(2),
            _ => 2,
        }
    }

    fn constant_value(&self) -> Option<f64> {
        match self {
            PotentialSpec::Constant { value } => Some(*value),
            PotentialSpec::Sum { terms } => terms.iter().map(|t| t.constant_value()).sum(),
            _ => None,
        }
    }
}

/// How inverse-power singularities are represented.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SingularTreatment {
    /// Closed-form coefficients for a screened singular part.
    #[default]
    Spectral,
    /// Point values, except that fine cells within `radius` cell widths of a
    /// center take cell averages. `None` picks a per-dimension default.
    CellAverage {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<usize>,
    },
}

/// Realization options.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RealizeOptions {
    /// Fine-grid factor per axis; one of 2, 4, 8. `None` picks the default.
    pub oversample: Option<usize>,
    pub treatment: SingularTreatment,
}

impl RealizeOptions {
    /// Oversampling factor used for `spec` on `grid`: 4 for cell-averaged
    /// inverse powers, otherwise the smallest alias-free factor (normally 2).
    pub fn resolved_oversample(&self, spec: &PotentialSpec, grid: &Grid) -> usize {
        self.oversample.unwrap_or(match self.treatment {
            SingularTreatment::CellAverage { .. } if spec.has_inverse_power() => 4.max(spec.min_oversample(grid)),
            _ => spec.min_oversample(grid),
        })
    }
}

/// Default averaging radius in fine cells for dimension `d`.
pub fn default_averaging_radius(d: usize) -> usize {
    match d {
        1 => 32,
        2 => 8,
        _ => 2,
    }
}

/// A potential realized on a grid.
#[derive(Clone, Debug)]
pub struct PotentialField {
    grid: Arc<Grid>,
    fine_grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
    fine_values: Vec<f64>,
    embed: Vec<usize>,
    constant: Option<f64>,
    max_imag: f64,
}

impl PotentialField {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn fine_grid(&self) -> &Arc<Grid> {
        &self.fine_grid
    }

    pub fn oversample(&self) -> usize {
        self.fine_grid.shape()[0] / self.grid.shape()[0]
    }

    /// Base-band Fourier coefficients. Nyquist rows carry the folded sum of
    /// the `±N/2` fine modes, so the array is Hermitian on the base lattice.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Real samples on the oversampled grid.
    pub fn fine_values(&self) -> &[f64] {
        &self.fine_values
    }

    /// Largest imaginary part discarded when the samples were formed.
    pub fn max_discarded_imag(&self) -> f64 {
        self.max_imag
    }

    /// `Some(c)` when the potential is the constant `c`.
    pub fn constant(&self) -> Option<f64> {
        self.constant
    }

    pub fn is_zero(&self) -> bool {
        self.constant == Some(0.0)
    }

    /// `V ψ` projected onto the base band.
    pub fn apply(&self, psi: &SpectralField) -> Result<SpectralField> {
        if !same_grid(&self.grid, psi.grid()) {
            return Err(Error::GridMismatch);
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        let mut work = Vec::new();
        self.apply_coeffs(psi.coeffs(), &mut out, &mut work);
        SpectralField::from_coeffs(&self.grid, out)
    }

    /// Hot-path product on raw coefficient arrays. `work` is resized as needed.
    pub(crate) fn apply_coeffs(&self, coeffs: &[Complex64], out: &mut [Complex64], work: &mut Vec<Complex64>) {
        if let Some(c) = self.constant {
            for (o, v) in out.iter_mut().zip(coeffs) {
                *o = v * c;
            }
            return;
        }
        work.clear();
        work.resize(self.fine_grid.len(), Complex64::new(0.0, 0.0));
        for (c, &i) in coeffs.iter().zip(&self.embed) {
            work[i] = *c;
        }
        self.fine_grid
            .inverse_in_place(work)
            .expect("work buffer sized to the fine grid");
        work.par_iter_mut()
            .zip(self.fine_values.par_iter())
            .for_each(|(w, v)| *w *= v);
        self.fine_grid
            .forward_in_place(work)
            .expect("work buffer sized to the fine grid");
        for (o, &i) in out.iter_mut().zip(&self.embed) {
            *o = work[i];
        }
    }

    /// Pointwise sum of two potentials realized on the same fine grid.
    pub fn add(&self, other: &PotentialField) -> Result<PotentialField> {
        if !same_grid(&self.fine_grid, &other.fine_grid) || !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        let values: Vec<f64> = self
            .fine_values
            .iter()
            .zip(&other.fine_values)
            .map(|(a, b)| a + b)
            .collect();
        let constant = match (self.constant, other.constant) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        let mut field = from_fine_values(&self.grid, &self.fine_grid, values, constant)?;
        field.max_imag = self.max_imag.max(other.max_imag);
        Ok(field)
    }
}

fn check_oversample(factor: usize) -> Result<()> {
    if matches!(factor, 2 | 4 | 8) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "oversampling factor must be 2, 4 or 8, got {factor}"
        )))
    }
}

/// Realizes any potential spec on `grid`.
pub fn realize(spec: &PotentialSpec, grid: &Arc<Grid>, opts: RealizeOptions) -> Result<PotentialField> {
    let factor = opts.resolved_oversample(spec, grid);
    check_oversample(factor)?;
    let fine = Arc::new(grid.refined(factor)?);
    let values = fine_samples(spec, grid, &fine, opts)?;
    from_fine_values(grid, &fine, values.samples, spec.constant_value()).map(|mut f| {
        f.max_imag = values.max_imag;
        f
    })
}

/// Realizes `Σ_j Z_j / |x - x_j|^α`.
pub fn realize_inverse_power(spec: &PotentialSpec, grid: &Arc<Grid>, opts: RealizeOptions) -> Result<PotentialField> {
    match spec {
        PotentialSpec::InversePower { .. } => realize(spec, grid, opts),
        _ => Err(Error::InvalidParameter("expected an inverse-power spec".into())),
    }
}

/// Realizes a Fourier-coefficient potential.
pub fn realize_fourier(spec: &PotentialSpec, grid: &Arc<Grid>, opts: RealizeOptions) -> Result<PotentialField> {
    match spec {
        PotentialSpec::Bessel { .. } | PotentialSpec::Random { .. } | PotentialSpec::Modes { .. } => {
            realize(spec, grid, opts)
        }
        _ => Err(Error::InvalidParameter("expected a Fourier-coefficient spec".into())),
    }
}

struct Samples {
    samples: Vec<f64>,
    max_imag: f64,
}

fn fine_samples(spec: &PotentialSpec, grid: &Arc<Grid>, fine: &Arc<Grid>, opts: RealizeOptions) -> Result<Samples> {
    match spec {
        PotentialSpec::Constant { value } => Ok(Samples {
            samples: vec![*value; fine.len()],
            max_imag: 0.0,
        }),
        PotentialSpec::InversePower {
            centers,
            charges,
            alpha,
        } => {
            let terms = inverse_power_terms(fine, centers, charges, *alpha)?;
            match opts.treatment {
                SingularTreatment::Spectral => spectral_samples(fine, &terms, *alpha),
                SingularTreatment::CellAverage { radius } => {
                    let radius = radius.unwrap_or_else(|| default_averaging_radius(grid.dim()));
                    let mut values = vec![0.0; fine.len()];
                    let nodes = fine.nodes();
                    for (c, z) in &terms {
                        let term = inverse_power_term(fine, &nodes, c, *z, *alpha, radius);
                        for (v, t) in values.iter_mut().zip(term) {
                            *v += t;
                        }
                    }
                    Ok(Samples {
                        samples: values,
                        max_imag: 0.0,
                    })
                }
            }
        }
        PotentialSpec::Bessel { .. } | PotentialSpec::Random { .. } | PotentialSpec::Modes { .. } => {
            fourier_samples(spec, grid, fine)
        }
        PotentialSpec::Sum { terms } => {
            let mut acc = Samples {
                samples: vec![0.0; fine.len()],
                max_imag: 0.0,
            };
            for t in terms {
                let part = fine_samples(t, grid, fine, opts)?;
                for (a, b) in acc.samples.iter_mut().zip(&part.samples) {
                    *a += b;
                }
                acc.max_imag = acc.max_imag.max(part.max_imag);
            }
            Ok(acc)
        }
    }
}

fn from_fine_values(grid: &Arc<Grid>, fine: &Arc<Grid>, values: Vec<f64>, constant: Option<f64>) -> Result<PotentialField> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("potential has non-finite samples".into()));
    }
    let mut spectrum: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fine.forward_in_place(&mut spectrum)?;
    let coeffs = fold_to_band(&spectrum, fine, grid);
    let embed = grid.embedding_into(fine)?;
    Ok(PotentialField {
        grid: Arc::clone(grid),
        fine_grid: Arc::clone(fine),
        coeffs,
        fine_values: values,
        embed,
        constant,
        max_imag: 0.0,
    })
}

/// Restricts a fine spectrum to the base band, folding `+N/2` onto `-N/2`.
fn fold_to_band(spectrum: &[Complex64], fine: &Grid, base: &Grid) -> Vec<Complex64> {
    let d = base.dim();
    let mut out = vec![Complex64::new(0.0, 0.0); base.len()];
    for (i, c) in spectrum.iter().enumerate() {
        let mut l = fine.lattice(i);
        let mut inside = true;
        for j in 0..d {
            let half = (base.shape()[j] / 2) as i64;
            if l[j] == half {
                l[j] = -half;
            } else if l[j] < -half || l[j] > half {
                inside = false;
            }
        }
        if inside {
            let pos = base.lattice_position(&l[..d]).expect("folded index lies in band");
            out[pos] += c;
        }
    }
    out
}

fn inverse_power_terms(fine: &Grid, centers: &[Vec<f64>], charges: &[f64], alpha: f64) -> Result<Vec<([f64; 3], f64)>> {
    let d = fine.dim();
    if centers.is_empty() || centers.len() != charges.len() {
        return Err(Error::InvalidParameter(format!(
            "inverse-power potential needs matching nonempty centers and charges ({} vs {})",
            centers.len(),
            charges.len()
        )));
    }
    if !(alpha > 0.0 && alpha < d as f64) {
        return Err(Error::InvalidParameter(format!(
            "inverse-power exponent must satisfy 0 < alpha < d = {d}, got {alpha}"
        )));
    }
    let mut pts = Vec::with_capacity(centers.len());
    for c in centers {
        if c.len() != d {
            return Err(Error::InvalidParameter(format!(
                "center {c:?} does not have {d} coordinates"
            )));
        }
        let mut p = [0.0; 3];
        for j in 0..d {
            let (a, b) = fine.bounds()[j];
            if !(a <= c[j] && c[j] <= b) {
                return Err(Error::InvalidParameter(format!(
                    "center {c:?} lies outside the box"
                )));
            }
            p[j] = c[j];
        }
        pts.push(p);
    }
    Ok(pts.into_iter().zip(charges.iter().copied()).collect())
}

/// Screening width for a center. Periodic images beyond the nearest ring
/// stay below `e^{-32}` inside the box, and the nearest images vary no faster
/// than the screened part itself.
fn screening_width(fine: &Grid, c: &[f64; 3]) -> Result<f64> {
    let d = fine.dim();
    let mut s = f64::INFINITY;
    let mut h_max: f64 = 0.0;
    for j in 0..d {
        let (a, b) = fine.bounds()[j];
        let gap = (c[j] - a).min(b - c[j]);
        s = s.min((b - a) / 8.0).min(gap / 3.0);
        h_max = h_max.max(fine.spacing(j));
    }
    if s < 4.0 * h_max {
        return Err(Error::InvalidParameter(format!(
            "center {:?} is too close to the boundary for the spectral treatment; use cell averages",
            &c[..d]
        )));
    }
    Ok(s)
}

fn spectral_samples(fine: &Grid, terms: &[([f64; 3], f64)], alpha: f64) -> Result<Samples> {
    let d = fine.dim();
    let nodes = fine.nodes();
    let k2 = fine.wave_number_sq();
    let lengths: Vec<f64> = (0..d).map(|j| fine.length(j)).collect();
    let images: Vec<[f64; 3]> = (0..3usize.pow(d as u32))
        .map(|m| {
            let mut shift = [0.0; 3];
            let mut rest = m;
            for j in 0..d {
                shift[j] = ((rest % 3) as f64 - 1.0) * lengths[j];
                rest /= 3;
            }
            shift
        })
        .filter(|shift| shift.iter().any(|&x| x != 0.0))
        .collect();

    let mut remainder = vec![Complex64::new(0.0, 0.0); fine.len()];
    let mut singular = vec![Complex64::new(0.0, 0.0); fine.len()];
    for (c, z) in terms {
        let f = ScreenedTransform::new(d, alpha, screening_width(fine, c)?);
        remainder.par_iter_mut().zip(nodes.par_iter()).for_each(|(v, x)| {
            let dist2 = |shift: &[f64; 3]| (0..d).map(|j| (x[j] - c[j] - shift[j]).powi(2)).sum::<f64>();
            let mut val = f.remainder(dist2(&[0.0; 3]), alpha);
            for shift in &images {
                val -= f.screened(dist2(shift), alpha);
            }
            v.re += z * val;
        });
        let scale = z / fine.volume();
        singular.par_iter_mut().enumerate().for_each(|(i, v)| {
            let idx = fine.unravel(i);
            let phase: f64 = (0..d)
                .map(|j| fine.wave_number(j, idx[j]) * (c[j] - fine.bounds()[j].0))
                .sum();
            *v += Complex64::from_polar(scale * f.at(k2[i]), -phase);
        });
    }
    fine.forward_in_place(&mut remainder)?;
    for (r, s) in remainder.iter_mut().zip(&singular) {
        *r += s;
    }
    fine.inverse_in_place(&mut remainder)?;
    let max_imag = remainder.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    Ok(Samples {
        samples: remainder.iter().map(|c| c.re).collect(),
        max_imag,
    })
}

/// Samples of `z / |x - c|^α`; nodes whose dual cell lies within `radius`
/// cells of `c` take the cell average instead of the point value.
fn inverse_power_term(fine: &Grid, nodes: &[[f64; 3]], c: &[f64; 3], z: f64, alpha: f64, radius: usize) -> Vec<f64> {
    let d = fine.dim();
    let mut values: Vec<f64> = nodes
        .par_iter()
        .map(|x| {
            let r2: f64 = (0..d).map(|j| (x[j] - c[j]).powi(2)).sum();
            z * r2.powf(-0.5 * alpha)
        })
        .collect();

    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    let mut nearest = [0i64; 3];
    for j in 0..d {
        let h = fine.spacing(j);
        let a = fine.bounds()[j].0;
        let k = ((c[j] - a) / h).round() as i64;
        nearest[j] = k;
        let n = fine.shape()[j] as i64;
        lo[j] = (k - radius as i64 - 1).clamp(0, n - 1) as usize;
        hi[j] = (k + radius as i64 + 1).clamp(0, n - 1) as usize;
    }
    let count: usize = (0..d).map(|j| hi[j] - lo[j] + 1).product();
    let mut near = Vec::new();
    for m in 0..count {
        let mut rest = m;
        let mut idx = [0usize; 3];
        for j in (0..d).rev() {
            let w = hi[j] - lo[j] + 1;
            idx[j] = lo[j] + rest % w;
            rest /= w;
        }
        let mut cell = Cell {
            lo: [0.0; 3],
            hi: [0.0; 3],
            d,
        };
        let mut off2 = 0.0;
        for j in 0..d {
            let x = fine.node(j, idx[j]);
            let h = fine.spacing(j);
            cell.lo[j] = x - 0.5 * h;
            cell.hi[j] = x + 0.5 * h;
            off2 += ((idx[j] as i64 - nearest[j]) as f64).powi(2);
        }
        if off2.sqrt() <= radius as f64 || cell.contains(c) {
            near.push((fine.ravel(&idx[..d]), cell));
        }
    }
    let averages: Vec<(usize, f64)> = near
        .par_iter()
        .map(|(i, cell)| {
            let integral = integrate_inverse_power(cell, c, alpha, CELL_QUADRATURE_TOL);
            (*i, z * integral / cell.volume())
        })
        .collect();
    for (i, v) in averages {
        values[i] = v;
    }
    values
}

fn fourier_samples(spec: &PotentialSpec, grid: &Grid, fine: &Grid) -> Result<Samples> {
    let d = grid.dim();
    let mut spectrum = vec![Complex64::new(0.0, 0.0); fine.len()];
    let mut deposit = |l: &[i64], v: Complex64| {
        let neg: Vec<i64> = l.iter().map(|x| -x).collect();
        let p = fine.lattice_position(l).expect("base lattice fits the fine band");
        let q = fine.lattice_position(&neg).expect("negated base lattice fits the fine band");
        spectrum[p] += 0.5 * v;
        spectrum[q] += 0.5 * v.conj();
    };
    let k2 = grid.wave_number_sq();
    match spec {
        PotentialSpec::Bessel { exponent } => {
            for (i, k2) in k2.iter().enumerate() {
                let l = grid.lattice(i);
                deposit(&l[..d], Complex64::new((1.0 + k2).powf(-exponent), 0.0));
            }
        }
        PotentialSpec::Random {
            decay,
            mean,
            seed,
            lattice,
        } => {
            let shape = match lattice {
                Some(m) => {
                    if m.len() != d || m.iter().zip(fine.shape()).any(|(&mj, &nf)| mj < 2 || mj % 2 != 0 || mj >= nf) {
                        return Err(Error::InvalidParameter(format!(
                            "random lattice {m:?} must have {d} even sizes below the fine grid {:?}",
                            fine.shape()
                        )));
                    }
                    m.clone()
                }
                None => grid.shape().to_vec(),
            };
            let mut rng = ChaCha20Rng::seed_from_u64(seed.unwrap_or(DEFAULT_SEED));
            let unit = Uniform::new_inclusive(-1.0, 1.0);
            for l in lexicographic_lattice(&shape) {
                if l.iter().all(|&x| x == 0) {
                    deposit(&l, Complex64::new(*mean, 0.0));
                    continue;
                }
                let mu2: f64 = (0..d)
                    .map(|j| (2.0 * std::f64::consts::PI * l[j] as f64 / grid.length(j)).powi(2))
                    .sum();
                let xi = Complex64::new(unit.sample(&mut rng), unit.sample(&mut rng));
                deposit(&l, xi / mu2.powf(0.5 * decay));
            }
        }
        PotentialSpec::Modes { modes } => {
            for m in modes {
                if m.l.len() != d || grid.lattice_position(&m.l).is_none() {
                    return Err(Error::InvalidParameter(format!(
                        "mode {:?} is not on the grid lattice",
                        m.l
                    )));
                }
                deposit(&m.l, Complex64::new(m.re, m.im));
            }
        }
        _ => unreachable!("only Fourier-family specs reach here"),
    }
    fine.inverse_in_place(&mut spectrum)?;
    let max_imag = spectrum.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    Ok(Samples {
        samples: spectrum.iter().map(|c| c.re).collect(),
        max_imag,
    })
}

/// Lattice `{-n_j/2, …, n_j/2-1}` in lexicographic order, axis 0 slowest.
fn lexicographic_lattice(shape: &[usize]) -> Vec<Vec<i64>> {
    let d = shape.len();
    let total: usize = shape.iter().product();
    let mut out = Vec::with_capacity(total);
    for m in 0..total {
        let mut rest = m;
        let mut l = vec![0i64; d];
        for j in (0..d).rev() {
            let n = shape[j];
            l[j] = (rest % n) as i64 - (n / 2) as i64;
            rest /= n;
        }
        out.push(l);
    }
    out
}
