//! Periodic box grids and their discrete Fourier transforms.
//!
//! Fields are stored row-major (axis 0 slowest). Fourier coefficients use
//! the standard FFT ordering on every axis: storage index `k` carries the
//! lattice index `l = k` for `k < N/2` and `l = k - N` otherwise, so the
//! unmatched Nyquist index `-N/2` sits at `k = N/2`.
//!
//! Coefficients are averages,
//! `c_l = (1/N_total) Σ_k u_k exp(-i μ_l·(x_k - a))`,
//! which makes a constant field map to a single coefficient equal to that
//! constant and keeps multiplier symbols independent of resolution.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lines per parallel FFT task.
const LINES_PER_TASK: usize = 16;

#[derive(Clone)]
struct AxisPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Plain-data description of a grid, used for configs and artifact headers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub bounds: Vec<[f64; 2]>,
    pub n: Vec<usize>,
}

/// A uniform periodic grid on `Π_j (a_j, b_j)` with `N_j` nodes per axis.
///
/// Immutable after construction; FFT plans are built once and shared.
#[derive(Clone)]
pub struct Grid {
    bounds: Vec<(f64, f64)>,
    n: Vec<usize>,
    plans: Vec<AxisPlan>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("bounds", &self.bounds)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.bounds == other.bounds && self.n == other.n
    }
}

impl Grid {
    /// Builds a grid in `d = bounds.len()` dimensions.
    ///
    /// Every `N_j` must be a power of two no smaller than 4 and every
    /// interval must be non-empty.
    pub fn new(bounds: &[(f64, f64)], n: &[usize]) -> Result<Self> {
        let d = bounds.len();
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3, got {d}"
            )));
        }
        if n.len() != d {
            return Err(Error::InvalidGrid(format!(
                "{} point counts given for {d} axes",
                n.len()
            )));
        }
        for (j, (&(a, b), &nj)) in bounds.iter().zip(n).enumerate() {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::InvalidGrid(format!(
                    "axis {j}: empty or non-finite interval ({a}, {b})"
                )));
            }
            if nj < 4 || !nj.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "axis {j}: point count {nj} is not a power of two >= 4"
                )));
            }
        }
        let mut planner = FftPlanner::new();
        let plans = n
            .iter()
            .map(|&nj| AxisPlan {
                forward: planner.plan_fft_forward(nj),
                inverse: planner.plan_fft_inverse(nj),
            })
            .collect();
        Ok(Grid {
            bounds: bounds.to_vec(),
            n: n.to_vec(),
            plans,
        })
    }

    /// Cube `(a, b)^d` with `n` points on every axis.
    pub fn cube(d: usize, a: f64, b: f64, n: usize) -> Result<Self> {
        Grid::new(&vec![(a, b); d], &vec![n; d])
    }

    pub fn from_spec(spec: &GridSpec) -> Result<Self> {
        let bounds: Vec<_> = spec.bounds.iter().map(|b| (b[0], b[1])).collect();
        Grid::new(&bounds, &spec.n)
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            bounds: self.bounds.iter().map(|&(a, b)| [a, b]).collect(),
            n: self.n.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.n
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self, axis: usize) -> f64 {
        let (a, b) = self.bounds[axis];
        b - a
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.length(axis) / self.n[axis] as f64
    }

    /// Cell volume `h = Π h_j`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.spacing(j)).product()
    }

    /// Box volume `|Ω|`.
    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.length(j)).product()
    }

    /// Coordinate of node `k` on `axis`.
    pub fn node(&self, axis: usize, k: usize) -> f64 {
        self.bounds[axis].0 + k as f64 * self.spacing(axis)
    }

    /// Lattice index `l` stored at FFT position `k` on `axis`.
    pub fn lattice_index(&self, axis: usize, k: usize) -> i64 {
        let n = self.n[axis];
        if k < n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        }
    }

    /// Wave number `2π l / (b - a)` at FFT position `k` on `axis`.
    pub fn wave_number(&self, axis: usize, k: usize) -> f64 {
        2.0 * PI * self.lattice_index(axis, k) as f64 / self.length(axis)
    }

    /// Row-major multi-index of a flat index.
    pub fn unravel(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for j in (0..self.dim()).rev() {
            idx[j] = flat % self.n[j];
            flat /= self.n[j];
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.n)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Physical coordinates of every node, flattened row-major.
    pub fn nodes(&self) -> Vec<[f64; 3]> {
        (0..self.len())
            .map(|flat| {
                let idx = self.unravel(flat);
                let mut x = [0.0; 3];
                for j in 0..self.dim() {
                    x[j] = self.node(j, idx[j]);
                }
                x
            })
            .collect()
    }

    /// Wave vectors `μ_l` in storage order.
    pub fn wave_vectors(&self) -> Vec<[f64; 3]> {
        (0..self.len())
            .map(|flat| {
                let idx = self.unravel(flat);
                let mut mu = [0.0; 3];
                for j in 0..self.dim() {
                    mu[j] = self.wave_number(j, idx[j]);
                }
                mu
            })
            .collect()
    }

    /// `|μ_l|²` in storage order.
    pub fn wave_number_sq(&self) -> Vec<f64> {
        self.wave_vectors()
            .iter()
            .map(|mu| mu.iter().map(|m| m * m).sum())
            .collect()
    }

    /// Lattice multi-index `l` of a flat storage index.
    pub fn lattice(&self, flat: usize) -> [i64; 3] {
        let idx = self.unravel(flat);
        let mut l = [0i64; 3];
        for j in 0..self.dim() {
            l[j] = self.lattice_index(j, idx[j]);
        }
        l
    }

    /// Flat storage index of lattice point `l`, if it lies in the band.
    pub fn lattice_position(&self, l: &[i64]) -> Option<usize> {
        let mut flat = 0usize;
        for (j, &lj) in l.iter().enumerate().take(self.dim()) {
            let n = self.n[j] as i64;
            if lj < -n / 2 || lj >= n / 2 {
                return None;
            }
            flat = flat * self.n[j] + lj.rem_euclid(n) as usize;
        }
        Some(flat)
    }

    /// The same box with every point count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Grid> {
        let n: Vec<_> = self.n.iter().map(|&n| n * factor).collect();
        Grid::new(&self.bounds, &n)
    }

    /// Flat indices in `fine` of each lattice point of `self`, in `self`'s
    /// storage order. Both grids must share the box and `fine` must be at
    /// least as large on every axis.
    pub fn embedding_into(&self, fine: &Grid) -> Result<Vec<usize>> {
        if fine.bounds != self.bounds || fine.dim() != self.dim() {
            return Err(Error::GridMismatch);
        }
        if self.n.iter().zip(&fine.n).any(|(c, f)| f < c) {
            return Err(Error::GridMismatch);
        }
        Ok((0..self.len())
            .map(|flat| {
                let l = self.lattice(flat);
                fine.lattice_position(&l[..self.dim()])
                    .expect("coarse band is contained in the fine band")
            })
            .collect())
    }

    fn check_len(&self, data: &[Complex64]) -> Result<()> {
        if data.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                got: data.len(),
            });
        }
        Ok(())
    }

    /// Samples to coefficients, in place.
    pub fn forward_in_place(&self, data: &mut [Complex64]) -> Result<()> {
        self.check_len(data)?;
        self.transform(data, false);
        let scale = 1.0 / self.len() as f64;
        data.par_iter_mut().for_each(|c| *c *= scale);
        Ok(())
    }

    /// Coefficients to samples, in place.
    pub fn inverse_in_place(&self, data: &mut [Complex64]) -> Result<()> {
        self.check_len(data)?;
        self.transform(data, true);
        Ok(())
    }

    pub fn forward(&self, values: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = values.to_vec();
        self.forward_in_place(&mut out)?;
        Ok(out)
    }

    pub fn inverse(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = coeffs.to_vec();
        self.inverse_in_place(&mut out)?;
        Ok(out)
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let d = self.dim();
        for axis in 0..d {
            let plan = &self.plans[axis];
            let fft = if inverse { &plan.inverse } else { &plan.forward };
            let n = self.n[axis];
            let inner: usize = self.n[axis + 1..].iter().product();
            if inner == 1 {
                fft_lines(fft.as_ref(), data, n);
            } else {
                let mut buf = vec![Complex64::new(0.0, 0.0); n * inner];
                for block in data.chunks_exact_mut(n * inner) {
                    transpose(block, &mut buf, n, inner);
                    fft_lines(fft.as_ref(), &mut buf, n);
                    transpose(&buf, block, inner, n);
                }
            }
        }
    }
}

/// FFT of every contiguous length-`n` line of `data`.
fn fft_lines(fft: &dyn Fft<f64>, data: &mut [Complex64], n: usize) {
    let chunk = n * LINES_PER_TASK;
    if data.len() <= chunk {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(data, &mut scratch);
        return;
    }
    data.par_chunks_mut(chunk).for_each_init(
        || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
        |scratch, lines| fft.process_with_scratch(lines, scratch),
    );
}

/// Writes the transpose of the `rows × cols` matrix `src` into `dst`.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const TILE: usize = 16;
    for r0 in (0..rows).step_by(TILE) {
        for c0 in (0..cols).step_by(TILE) {
            for r in r0..(r0 + TILE).min(rows) {
                for c in c0..(c0 + TILE).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}
