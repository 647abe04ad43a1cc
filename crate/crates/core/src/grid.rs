//! Uniform periodic grids and complex fields on them.

use crate::error::{Error, Result};
use crate::fourier;
use crate::util;
use num_complex::Complex64;

/// Uniform periodic grid over a box `[origin_i, origin_i + len_i)` per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub shape: Vec<usize>,
    pub origin: Vec<f64>,
    pub step: Vec<f64>,
}

impl Grid {
    pub fn new(shape: Vec<usize>, origin: Vec<f64>, step: Vec<f64>) -> Self {
        assert_eq!(shape.len(), origin.len());
        assert_eq!(shape.len(), step.len());
        Grid { shape, origin, step }
    }

    /// Grid over the torus `[0, 2π)^d` with `m` points per axis.
    pub fn torus(d: usize, m: usize) -> Self {
        let step = 2.0 * std::f64::consts::PI / m as f64;
        Grid::new(vec![m; d], vec![0.0; d], vec![step; d])
    }

    /// Centered square box `[-half, half)` with `m` points per axis.
    pub fn centered(d: usize, m: usize, half: f64) -> Self {
        let step = 2.0 * half / m as f64;
        Grid::new(vec![m; d], vec![-half; d], vec![step; d])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axis_len(&self, ax: usize) -> f64 {
        self.shape[ax] as f64 * self.step[ax]
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(ax, &i)| self.origin[ax] + i as f64 * self.step[ax])
            .collect()
    }

    /// Angular wavenumbers per axis, in DFT bin order.
    pub fn wavenumbers(&self, ax: usize) -> Vec<f64> {
        let n = self.shape[ax];
        let base = 2.0 * std::f64::consts::PI / self.axis_len(ax);
        (0..n)
            .map(|m| fourier::signed_index(m, n) as f64 * base)
            .collect()
    }

    pub fn same_layout(&self, other: &Grid) -> bool {
        self.shape == other.shape
            && self
                .origin
                .iter()
                .zip(&other.origin)
                .all(|(a, b)| (a - b).abs() < 1e-12)
            && self
                .step
                .iter()
                .zip(&other.step)
                .all(|(a, b)| (a - b).abs() < 1e-12)
    }
}

/// Complex scalar field on a grid, row-major storage.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Grid,
    pub data: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        ScalarField { grid, data: vec![Complex64::default(); n] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut field = ScalarField::zeros(grid);
        let grid = field.grid.clone();
        util::for_each_multi_index(&grid.shape, |flat, idx| {
            field.data[flat] = f(&grid.point(idx));
        });
        field
    }

    pub fn sup_norm(&self) -> f64 {
        util::sup_norm(&self.data)
    }
}

/// `n` complex components over a shared grid: envelopes `A_j`, soliton
/// components `B_j`, and the scalar case (`n = 1`).
#[derive(Debug, Clone)]
pub struct VectorField {
    pub grid: Grid,
    pub components: Vec<Vec<Complex64>>,
}

impl VectorField {
    pub fn zeros(grid: Grid, n: usize) -> Self {
        let len = grid.len();
        VectorField {
            grid,
            components: vec![vec![Complex64::default(); len]; n],
        }
    }

    pub fn ncomp(&self) -> usize {
        self.components.len()
    }

    pub fn from_components(grid: Grid, components: Vec<Vec<Complex64>>) -> Result<Self> {
        let len = grid.len();
        if components.iter().any(|c| c.len() != len) {
            return Err(Error::config("component length does not match grid size"));
        }
        Ok(VectorField { grid, components })
    }

    /// Forward DFT of every component (in place).
    pub fn fft_forward(&mut self) {
        let shape = self.grid.shape.clone();
        for c in &mut self.components {
            fourier::fft_forward(c, &shape);
        }
    }

    /// Inverse DFT of every component (in place).
    pub fn fft_inverse(&mut self) {
        let shape = self.grid.shape.clone();
        for c in &mut self.components {
            fourier::fft_inverse(c, &shape);
        }
    }

    /// Pointwise sup norm over all components.
    pub fn sup_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| util::sup_norm(c))
            .fold(0.0, f64::max)
    }

    /// l2 norm over grid and components (unweighted coefficient norm).
    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| util::norm_sq(c))
            .sum::<f64>()
            .sqrt()
    }

    /// Real part of the inner product `Σ_j Σ_x a_j(x) conj(b_j(x))`.
    pub fn inner_re(&self, other: &VectorField) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| util::dot(a, b).re)
            .sum()
    }

    /// Maximum modulus over the outermost one-cell shell of the box.
    pub fn boundary_sup(&self) -> f64 {
        let shape = &self.grid.shape;
        let mut sup: f64 = 0.0;
        util::for_each_multi_index(shape, |flat, idx| {
            let on_boundary = idx
                .iter()
                .zip(shape)
                .any(|(&i, &n)| i == 0 || i + 1 == n);
            if on_boundary {
                for c in &self.components {
                    sup = sup.max(c[flat].norm());
                }
            }
        });
        sup
    }

    /// Fraction of spectral energy in the top octave `|K|_∞ ≥ K_max/2`.
    pub fn spectral_tail_fraction(&self) -> f64 {
        let shape = self.grid.shape.clone();
        let mut tail = 0.0;
        let mut total = 0.0;
        for comp in &self.components {
            let mut spec = comp.clone();
            fourier::fft_forward(&mut spec, &shape);
            util::for_each_multi_index(&shape, |flat, idx| {
                let mut in_tail = false;
                for (ax, &m) in idx.iter().enumerate() {
                    let s = fourier::signed_index(m, shape[ax]).unsigned_abs() as usize;
                    // top octave: |s| in [n/4, n/2]
                    if 4 * s >= shape[ax] {
                        in_tail = true;
                    }
                }
                let e = spec[flat].norm_sqr();
                total += e;
                if in_tail {
                    tail += e;
                }
            });
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }
}
