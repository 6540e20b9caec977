//! Cell integrals of inverse-power singularities.
//!
//! Smooth integrands go through adaptive tensor Gauss-Legendre cubature. A box
//! with the singular point at one corner is handled through the homogeneity
//! of `|x|^{-α}`: halving every edge scales the corner sub-box integral by
//! `2^{α-d}`, so `I(B) = S(B) / (1 - 2^{α-d})` where `S` sums the remaining
//! (smooth) children.

const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

const MAX_DEPTH: usize = 24;

/// Axis-aligned box `[lo_j, hi_j]`, `d <= 3`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Cell {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub d: usize,
}

impl Cell {
    pub fn volume(&self) -> f64 {
        (0..self.d).map(|j| self.hi[j] - self.lo[j]).product()
    }

    fn children(&self) -> impl Iterator<Item = Cell> + '_ {
        let d = self.d;
        (0..1usize << d).map(move |mask| {
            let mut c = *self;
            for j in 0..d {
                let mid = 0.5 * (self.lo[j] + self.hi[j]);
                if mask & (1 << j) == 0 {
                    c.hi[j] = mid;
                } else {
                    c.lo[j] = mid;
                }
            }
            c
        })
    }

    pub fn contains(&self, p: &[f64; 3]) -> bool {
        (0..self.d).all(|j| self.lo[j] <= p[j] && p[j] <= self.hi[j])
    }
}

fn gauss_legendre<F: Fn(&[f64; 3]) -> f64>(f: &F, cell: &Cell) -> f64 {
    let d = cell.d;
    let half: Vec<f64> = (0..d).map(|j| 0.5 * (cell.hi[j] - cell.lo[j])).collect();
    let mid: Vec<f64> = (0..d).map(|j| 0.5 * (cell.hi[j] + cell.lo[j])).collect();
    let m = GL_NODES.len();
    let total = m.pow(d as u32);
    let mut sum = 0.0;
    let mut x = [0.0; 3];
    for idx in 0..total {
        let mut rest = idx;
        let mut w = 1.0;
        for j in 0..d {
            let q = rest % m;
            rest /= m;
            x[j] = mid[j] + half[j] * GL_NODES[q];
            w *= GL_WEIGHTS[q];
        }
        sum += w * f(&x);
    }
    sum * half.iter().product::<f64>()
}

/// Adaptive cubature of a smooth integrand to absolute tolerance `tol`.
pub(crate) fn integrate_smooth<F: Fn(&[f64; 3]) -> f64>(f: &F, cell: &Cell, tol: f64) -> f64 {
    let whole = gauss_legendre(f, cell);
    refine(f, cell, whole, tol, 0)
}

fn refine<F: Fn(&[f64; 3]) -> f64>(f: &F, cell: &Cell, whole: f64, tol: f64, depth: usize) -> f64 {
    let parts: Vec<(Cell, f64)> = cell.children().map(|c| (c, gauss_legendre(f, &c))).collect();
    let split: f64 = parts.iter().map(|(_, v)| v).sum();
    if (split - whole).abs() <= tol || depth >= MAX_DEPTH {
        return split;
    }
    let child_tol = tol / parts.len() as f64;
    parts
        .iter()
        .map(|(c, v)| refine(f, c, *v, child_tol, depth + 1))
        .sum()
}

/// `∫_cell |x - center|^{-alpha} dx` to relative tolerance `rel_tol`.
///
/// Requires `alpha < d`. The center may lie anywhere; when it lies in the
/// closed cell the cell is split at the center and each piece is integrated
/// through the corner recursion.
pub(crate) fn integrate_inverse_power(cell: &Cell, center: &[f64; 3], alpha: f64, rel_tol: f64) -> f64 {
    let d = cell.d;
    let f = |x: &[f64; 3]| {
        let r2: f64 = (0..d).map(|j| (x[j] - center[j]).powi(2)).sum();
        r2.powf(-0.5 * alpha)
    };
    if !cell.contains(center) {
        let rough = gauss_legendre(&f, cell).abs().max(f64::MIN_POSITIVE);
        return integrate_smooth(&f, cell, rel_tol * rough);
    }
    let mut total = 0.0;
    for mask in 0..1usize << d {
        let mut piece = *cell;
        let mut empty = false;
        for j in 0..d {
            if mask & (1 << j) == 0 {
                piece.hi[j] = center[j];
            } else {
                piece.lo[j] = center[j];
            }
            if piece.hi[j] <= piece.lo[j] {
                empty = true;
            }
        }
        if !empty {
            total += corner_box(&f, &piece, center, alpha, rel_tol);
        }
    }
    total
}

/// Integral over a box having the singular point at one of its corners.
fn corner_box<F: Fn(&[f64; 3]) -> f64>(f: &F, piece: &Cell, center: &[f64; 3], alpha: f64, rel_tol: f64) -> f64 {
    let d = piece.d;
    let ratio = 2f64.powf(alpha - d as f64);
    let mut smooth_parts = Vec::new();
    for child in piece.children() {
        let touches = (0..d).all(|j| child.lo[j] == center[j] || child.hi[j] == center[j]);
        if !touches {
            smooth_parts.push(child);
        }
    }
    let rough: f64 = smooth_parts.iter().map(|c| gauss_legendre(f, c)).sum();
    let tol = rel_tol * rough.abs().max(f64::MIN_POSITIVE) / smooth_parts.len() as f64;
    let sum: f64 = smooth_parts.iter().map(|c| integrate_smooth(f, c, tol)).sum();
    sum / (1.0 - ratio)
}
