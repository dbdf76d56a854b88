//! Two-mode Wigner function from the Fock expansion, normalized so that
//! `integral W dx1 dp1 dx2 dp2 = 1`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, C64};
use crate::special::laguerre;

pub const PHASE_SPACE_LIMIT: f64 = 4.0;

fn factorial_ratio(n: usize, m: usize) -> f64 {
    // n! / m! for n <= m
    (n + 1..=m).fold(1.0, |acc, k| acc / k as f64)
}

/// Wigner function of `|m><n|` at `(x, p)`.
pub fn element_wigner(m: usize, n: usize, x: f64, p: f64) -> C64 {
    if m < n {
        return element_wigner(n, m, x, p).conj();
    }
    let alpha_conj = C64::new(x, -p) / std::f64::consts::SQRT_2;
    let r2 = alpha_conj.norm_sqr();
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let prefactor = sign * factorial_ratio(n, m).sqrt() * (-2.0 * r2).exp() * laguerre(n, m - n, 4.0 * r2) / PI;
    (alpha_conj * 2.0).powu((m - n) as u32) * prefactor
}

/// Table of `W_{|k><m|}(x, p)` indexed `k * d + m`.
fn element_table(d: usize, x: f64, p: f64) -> Vec<C64> {
    (0..d * d).map(|km| element_wigner(km / d, km % d, x, p)).collect()
}

fn combine(rho: &DensityMatrix, w1: &[C64], w2: &[C64]) -> f64 {
    let cutoff = rho.cutoff();
    let d = cutoff.mode_dim();
    let data = rho.matrix();
    let mut acc = C64::new(0.0, 0.0);
    for (i, (k, l)) in cutoff.basis().enumerate() {
        for (j, (m, n)) in cutoff.basis().enumerate() {
            acc += data[(i, j)] * w1[k * d + m] * w2[l * d + n];
        }
    }
    acc.re
}

pub fn wigner_at(rho: &DensityMatrix, x1: f64, p1: f64, x2: f64, p2: f64) -> f64 {
    let d = rho.cutoff().mode_dim();
    combine(rho, &element_table(d, x1, p1), &element_table(d, x2, p2))
}

pub fn wigner_origin(rho: &DensityMatrix) -> f64 {
    wigner_at(rho, 0.0, 0.0, 0.0, 0.0)
}

/// Per-mode phase-space axes.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceGrid {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhaseSpaceGrid {
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        let inside = |v: &[f64]| v.iter().all(|a| a.abs() <= PHASE_SPACE_LIMIT);
        if x.is_empty() || p.is_empty() || !inside(&x) || !inside(&p) {
            return Err(Error::InvalidParameter(format!(
                "phase-space axes must be nonempty and lie within [-{PHASE_SPACE_LIMIT}, {PHASE_SPACE_LIMIT}]"
            )));
        }
        Ok(PhaseSpaceGrid { x, p })
    }

    pub fn symmetric(half_width: f64, points: usize) -> Result<Self> {
        let axis = crate::homodyne::uniform_axis(-half_width, half_width, points);
        Self::new(axis.clone(), axis)
    }

    fn points(&self) -> Vec<(f64, f64)> {
        self.x
            .iter()
            .flat_map(|&x| self.p.iter().map(move |&p| (x, p)))
            .collect()
    }
}

/// `W(x1, p1, x2, p2)` on the product grid, flattened in the order
/// `((x1 * np + p1) * nx + x2) * np + p2`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub grid: PhaseSpaceGrid,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn at(&self, i1: usize, j1: usize, i2: usize, j2: usize) -> f64 {
        let (nx, np) = (self.grid.x.len(), self.grid.p.len());
        self.values[((i1 * np + j1) * nx + i2) * np + j2]
    }
}

pub fn wigner(rho: &DensityMatrix, grid: &PhaseSpaceGrid) -> WignerGrid {
    let d = rho.cutoff().mode_dim();
    let tables: Vec<Vec<C64>> = grid
        .points()
        .iter()
        .map(|&(x, p)| element_table(d, x, p))
        .collect();
    let values = tables
        .par_iter()
        .flat_map_iter(|w1| tables.iter().map(|w2| combine(rho, w1, w2)))
        .collect();
    WignerGrid {
        grid: grid.clone(),
        values,
    }
}

/// `W(X, P, X, P)`; rows follow `X`, columns `P`.
pub fn wigner_cross_section(rho: &DensityMatrix, grid: &PhaseSpaceGrid) -> DMatrix<f64> {
    let d = rho.cutoff().mode_dim();
    let values: Vec<f64> = grid
        .points()
        .par_iter()
        .map(|&(x, p)| {
            let w = element_table(d, x, p);
            combine(rho, &w, &w)
        })
        .collect();
    DMatrix::from_row_slice(grid.x.len(), grid.p.len(), &values)
}
