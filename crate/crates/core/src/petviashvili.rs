//! Standing gap solitons of the stationary CME by Petviashvili iteration in
//! Fourier variables, plus parameter continuation in Ω across the gap.
//!
//! The stationary system `ΩB = L(∇)B - N(B)` is solved as the fixed point
//! `B = (L - Ω)^{-1} N(B)`, stabilized per iteration by
//! `S = <(L-Ω)B, B> / <N(B), B>` raised to the power 3/2 (the classical
//! convergent exponent for a cubic nonlinearity). Everything spectral: the
//! symbol inverse is an exact pointwise Hermitian solve per Fourier mode, and
//! the cubic is evaluated pseudospectrally with 2x zero padding, which keeps
//! grid-scale checkerboard modes out of the iteration.

use crate::cme::CmeModel;
use crate::error::{Error, Result};
use crate::fourier;
use crate::grid::{Grid, VectorField};
use crate::linalg::{self, JacobiWorkspace};
use crate::util;
use num_complex::Complex64;

/// Default solver options.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Relative update below which the iteration is considered stationary.
    pub tol_update: f64,
    /// Sup-norm bound on the stationary residual of an accepted solution.
    pub tol_residual: f64,
    /// Stabilizing-factor exponent (3/2 for the cubic nonlinearity).
    pub gamma_exp: f64,
    /// Minimum distance from Ω to the symbol spectrum over the grid.
    pub dist_min: f64,
    /// Enforce the boundary-shell localization invariant.
    pub check_localization: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iter: 500,
            tol_update: 1e-10,
            tol_residual: 1e-8,
            gamma_exp: 1.5,
            dist_min: 1e-3,
            check_localization: true,
        }
    }
}

/// Pointwise symbol data over a grid's Fourier modes: the inverse of
/// `L(iK) - Ω` per mode, plus spectral distance bookkeeping.
pub struct SymbolInverse {
    n: usize,
    shape: Vec<usize>,
    inv: Vec<Complex64>,
    /// Minimum over grid modes of the distance from Ω to the symbol spectrum.
    pub min_distance: f64,
}

impl SymbolInverse {
    /// Build the per-mode inverse tables. Errors on a near-singular mode
    /// (condition number above 1e12), naming the offending K.
    pub fn new(model: &CmeModel, omega: f64, grid: &Grid) -> Result<Self> {
        let n = model.n();
        let d = grid.dim();
        if model.dim() != d {
            return Err(Error::config("model dimension does not match the grid"));
        }
        let waves: Vec<Vec<f64>> = (0..d).map(|ax| grid.wavenumbers(ax)).collect();
        let len = grid.len();
        let mut inv = vec![Complex64::default(); len * n * n];
        let mut ws = JacobiWorkspace::default();
        let mut sym = vec![Complex64::default(); n * n];
        let mut vals = vec![0.0; n];
        let mut vecs = vec![Complex64::default(); n * n];
        let mut min_distance = f64::INFINITY;
        let mut result: Result<()> = Ok(());
        util::for_each_multi_index(&grid.shape, |flat, idx| {
            if result.is_err() {
                return;
            }
            let k: Vec<f64> = (0..d).map(|ax| waves[ax][idx[ax]]).collect();
            // symbol diag(vg·K) - κ
            for r in 0..n {
                for c in 0..n {
                    sym[r * n + c] = -model.kappa[(r, c)];
                }
                let t: f64 = model.vg[r].iter().zip(&k).map(|(v, kk)| v * kk).sum();
                sym[r * n + r] += Complex64::new(t, 0.0);
            }
            linalg::small_herm_eigen(&sym, n, &mut ws, &mut vals, &mut vecs);
            let mut dmin = f64::INFINITY;
            let mut dmax: f64 = 0.0;
            for &v in vals.iter() {
                dmin = dmin.min((v - omega).abs());
                dmax = dmax.max((v - omega).abs());
            }
            min_distance = min_distance.min(dmin);
            if dmin == 0.0 || dmax / dmin > 1e12 {
                result = Err(Error::numerical(format!(
                    "symbol - Ω is near singular at K = {k:?} (distance {dmin:.3e})"
                )));
                return;
            }
            // inverse via the eigen decomposition: V diag(1/(λ-Ω)) V†
            let block = &mut inv[flat * n * n..(flat + 1) * n * n];
            for r in 0..n {
                for c in 0..n {
                    let mut acc = Complex64::default();
                    for j in 0..n {
                        // column j of V holds eigenvector j: vecs[j*n + row]
                        acc += vecs[j * n + r] * vecs[j * n + c].conj()
                            / Complex64::new(vals[j] - omega, 0.0);
                    }
                    block[r * n + c] = acc;
                }
            }
        });
        result?;
        Ok(SymbolInverse {
            n,
            shape: grid.shape.clone(),
            inv,
            min_distance,
        })
    }

    /// Apply the per-mode inverse to component spectra (in place).
    pub fn apply(&self, spectra: &mut [Vec<Complex64>]) {
        assert_eq!(spectra.len(), self.n);
        let n = self.n;
        let len: usize = self.shape.iter().product();
        let mut tmp = vec![Complex64::default(); n];
        for flat in 0..len {
            let block = &self.inv[flat * n * n..(flat + 1) * n * n];
            for r in 0..n {
                let mut acc = Complex64::default();
                for c in 0..n {
                    acc += block[r * n + c] * spectra[c][flat];
                }
                tmp[r] = acc;
            }
            for r in 0..n {
                spectra[r][flat] = tmp[r];
            }
        }
    }
}

/// Apply the symbol `L(iK)` itself to component spectra (in place).
fn apply_symbol_spectra(model: &CmeModel, grid: &Grid, spectra: &mut [Vec<Complex64>]) {
    let n = model.n();
    let d = grid.dim();
    let waves: Vec<Vec<f64>> = (0..d).map(|ax| grid.wavenumbers(ax)).collect();
    // transport projections vg·K per mode and component, reusing one pass
    let mut tmp = vec![Complex64::default(); n];
    let mut k = vec![0.0f64; d];
    let mut flat = 0usize;
    util::for_each_multi_index(&grid.shape, |_, idx| {
        for ax in 0..d {
            k[ax] = waves[ax][idx[ax]];
        }
        for r in 0..n {
            let t: f64 = model.vg[r].iter().zip(&k).map(|(v, kk)| v * kk).sum();
            let mut acc = Complex64::new(t, 0.0) * spectra[r][flat];
            for c in 0..n {
                acc -= model.kappa[(r, c)] * spectra[c][flat];
            }
            tmp[r] = acc;
        }
        for r in 0..n {
            spectra[r][flat] = tmp[r];
        }
        flat += 1;
    });
}

/// `(L(∇) - Ω)^{-1}` applied to a physical-space field: exact pointwise
/// Hermitian solve per Fourier mode.
pub fn apply_symbol_inverse(
    field: &VectorField,
    omega: f64,
    model: &CmeModel,
) -> Result<VectorField> {
    let tables = SymbolInverse::new(model, omega, &field.grid)?;
    let mut work = field.clone();
    work.fft_forward();
    tables.apply(&mut work.components);
    work.fft_inverse();
    Ok(work)
}

/// `L(∇)` applied to a physical-space field.
pub fn apply_symbol(field: &VectorField, model: &CmeModel) -> VectorField {
    let mut work = field.clone();
    work.fft_forward();
    apply_symbol_spectra(model, &field.grid, &mut work.components);
    work.fft_inverse();
    work
}

/// Cubic nonlinearity evaluated pseudospectrally with 2x zero padding,
/// given component spectra; returns the (truncated) spectra of N(B).
fn cubic_spectra(
    model: &CmeModel,
    shape: &[usize],
    spectra: &[Vec<Complex64>],
) -> Vec<Vec<Complex64>> {
    let fine_shape: Vec<usize> = shape.iter().map(|&s| 2 * s).collect();
    let n = model.n();
    let mut fine: Vec<Vec<Complex64>> = spectra
        .iter()
        .map(|s| {
            let mut f = fourier::resize_spectrum(s, shape, &fine_shape);
            fourier::fft_inverse(&mut f, &fine_shape);
            f
        })
        .collect();
    let mut out: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); fine[0].len()]; n];
    model.gamma.apply_cubic(&fine, &mut out);
    for o in out.iter_mut() {
        fourier::fft_forward(o, &fine_shape);
    }
    // free the fine-grid physical buffers before the truncation allocates
    fine.clear();
    out.into_iter()
        .map(|o| fourier::resize_spectrum(&o, &fine_shape, shape))
        .collect()
}

/// The stationary residual `ΩB - L(∇)B + N(B)` in the sup norm, recomposed
/// independently of the iteration map: forward symbol application plus the
/// pointwise cubic on the padded grid (the Galerkin cubic, consistent with
/// the spectral discretization being solved — an aliased collocation cubic
/// would instead measure grid truncation error).
pub fn stationary_residual(model: &CmeModel, omega: f64, field: &VectorField) -> f64 {
    let shape = field.grid.shape.clone();
    let mut spectra: Vec<Vec<Complex64>> = field.components.clone();
    for s in spectra.iter_mut() {
        fourier::fft_forward(s, &shape);
    }
    let nhat = cubic_spectra(model, &shape, &spectra);
    let mut lb = spectra.clone();
    apply_symbol_spectra(model, &field.grid, &mut lb);
    let mut sup: f64 = 0.0;
    for j in 0..model.n() {
        let mut res: Vec<Complex64> = (0..spectra[j].len())
            .map(|i| omega * spectra[j][i] - lb[j][i] + nhat[j][i])
            .collect();
        fourier::fft_inverse(&mut res, &shape);
        sup = sup.max(util::sup_norm(&res));
    }
    sup
}

/// Largest Nyquist-bin spectral amplitude relative to the spectral peak, per
/// the checkerboard-mode guard.
pub fn checkerboard_fraction(field: &VectorField) -> f64 {
    let shape = field.grid.shape.clone();
    let mut worst: f64 = 0.0;
    for comp in &field.components {
        let mut spec = comp.clone();
        fourier::fft_forward(&mut spec, &shape);
        let peak = util::sup_norm(&spec);
        if peak == 0.0 {
            continue;
        }
        let mut nyq: f64 = 0.0;
        util::for_each_multi_index(&shape, |flat, idx| {
            let on_nyquist = idx.iter().zip(&shape).any(|(&m, &nn)| {
                nn % 2 == 0 && m == nn / 2
            });
            if on_nyquist {
                nyq = nyq.max(spec[flat].norm());
            }
        });
        worst = worst.max(nyq / peak);
    }
    worst
}

/// A converged standing soliton.
#[derive(Debug, Clone)]
pub struct SolitonSolution {
    pub omega: f64,
    pub field: VectorField,
    pub residual: f64,
    pub iterations: usize,
    /// Final stabilizing factor (must be 1 to within 1e-6).
    pub s_factor: f64,
    /// Labeled symmetry diagnostics (sup norms of the tested relations).
    pub symmetry: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

/// Standard-deviation of `|B_j|` over a ring at the component's e-folding
/// radius, relative to the peak. Zero for radially symmetric moduli.
pub fn angular_asymmetry(field: &VectorField, component: usize) -> f64 {
    let grid = &field.grid;
    assert_eq!(grid.dim(), 2, "ring diagnostic is two dimensional");
    let comp = &field.components[component];
    let n0 = grid.shape[0];
    let n1 = grid.shape[1];
    let peak = util::sup_norm(comp);
    if peak == 0.0 {
        return 0.0;
    }
    // e-folding radius along the positive x-axis from the box center
    let c0 = n0 / 2;
    let c1 = n1 / 2;
    let mut radius = grid.step[0];
    for i in 1..n0 / 2 {
        if comp[(c0 + i) * n1 + c1].norm() <= peak / std::f64::consts::E {
            radius = i as f64 * grid.step[0];
            break;
        }
    }
    let samples = 256;
    let mut vals = Vec::with_capacity(samples);
    for s in 0..samples {
        let th = 2.0 * std::f64::consts::PI * s as f64 / samples as f64;
        let x = radius * th.cos();
        let y = radius * th.sin();
        // bilinear interpolation of |B|
        let fx = (x - grid.origin[0]) / grid.step[0];
        let fy = (y - grid.origin[1]) / grid.step[1];
        let (i0, j0) = (fx.floor() as usize, fy.floor() as usize);
        let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
        let at = |i: usize, j: usize| comp[i * n1 + j].norm();
        let v = at(i0, j0) * (1.0 - tx) * (1.0 - ty)
            + at(i0 + 1, j0) * tx * (1.0 - ty)
            + at(i0, j0 + 1) * (1.0 - tx) * ty
            + at(i0 + 1, j0 + 1) * tx * ty;
        vals.push(v);
    }
    let mean = vals.iter().sum::<f64>() / samples as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / samples as f64;
    var.sqrt() / peak
}

fn symmetry_diagnostics(field: &VectorField) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    if field.ncomp() == 4 {
        let sup_diff_conj = |a: &[Complex64], b: &[Complex64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y.conj()).norm())
                .fold(0.0f64, f64::max)
        };
        let sup_diff = |a: &[Complex64], b: &[Complex64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0f64, f64::max)
        };
        let c = &field.components;
        out.push(("|B2 - conj(B1)|".to_string(), sup_diff_conj(&c[1], &c[0])));
        out.push(("|B4 - conj(B3)|".to_string(), sup_diff_conj(&c[3], &c[2])));
        out.push(("|B1 - B2|".to_string(), sup_diff(&c[0], &c[1])));
        let plus: Vec<Complex64> = c[0].iter().zip(&c[2]).map(|(a, b)| a + b).collect();
        out.push(("|B1 + B3|".to_string(), util::sup_norm(&plus)));
    }
    if field.grid.dim() == 2 {
        out.push((
            "angular asymmetry of |B1|".to_string(),
            angular_asymmetry(field, 0),
        ));
    }
    out
}

/// Petviashvili iteration for `ΩB = L(∇)B - N(B)` from an initial guess.
pub fn petviashvili_solve(
    model: &CmeModel,
    omega: f64,
    initial: &VectorField,
    opts: SolveOptions,
) -> Result<SolitonSolution> {
    let grid = initial.grid.clone();
    let shape = grid.shape.clone();
    if initial.ncomp() != model.n() {
        return Err(Error::config("initial guess has the wrong component count"));
    }
    let norm0 = initial.l2_norm();
    if norm0 == 0.0 {
        return Err(Error::config("initial guess must be nonzero"));
    }
    let tables = SymbolInverse::new(model, omega, &grid)?;
    if tables.min_distance < opts.dist_min {
        return Err(Error::numerical(format!(
            "Ω = {omega} is only {:.3e} away from the symbol spectrum over the grid; \
             need a gap margin of at least {:.1e}",
            tables.min_distance, opts.dist_min
        )));
    }

    let mut warnings = Vec::new();
    let mut spectra: Vec<Vec<Complex64>> = initial.components.clone();
    for s in spectra.iter_mut() {
        fourier::fft_forward(s, &shape);
    }
    let mut residual_history: Vec<f64> = Vec::new();
    #[allow(unused_assignments)]
    let mut s_factor = f64::NAN;
    #[allow(unused_assignments)]
    let mut iterations = 0usize;

    let trace = std::env::var("GAPSOL_TRACE").is_ok();
    for iter in 1..=opts.max_iter {
        iterations = iter;
        let t_iter = std::time::Instant::now();
        let nhat = cubic_spectra(model, &shape, &spectra);
        let t_cubic = t_iter.elapsed();
        // S = <(L-Ω)B, B> / <N(B), B>, inner products over modes and components
        let t_sym0 = std::time::Instant::now();
        let mut lb = spectra.clone();
        apply_symbol_spectra(model, &grid, &mut lb);
        let t_sym = t_sym0.elapsed();
        let mut num = Complex64::default();
        let mut den = Complex64::default();
        for j in 0..model.n() {
            let omega_b: Vec<Complex64> = spectra[j].iter().map(|v| v * omega).collect();
            let shifted: Vec<Complex64> = lb[j]
                .iter()
                .zip(&omega_b)
                .map(|(l, o)| l - o)
                .collect();
            num += util::dot(&shifted, &spectra[j]);
            den += util::dot(&nhat[j], &spectra[j]);
        }
        if den.norm() == 0.0 {
            return Err(Error::numerical("nonlinearity vanished on the iterate"));
        }
        let ratio = num / den;
        if ratio.im.abs() > 1e-6 * ratio.re.abs().max(1.0) {
            warnings.push(format!(
                "stabilizing ratio has imaginary residue {:.3e} at iteration {iter}",
                ratio.im
            ));
        }
        let s = ratio.re;
        if s <= 0.0 {
            return Err(Error::numerical(format!(
                "stabilizing factor became non-positive (S = {s:.3e}); \
                 sign-indefinite configuration"
            )));
        }
        s_factor = s;
        let weight = Complex64::new(s.powf(opts.gamma_exp), 0.0);
        let mut next = nhat;
        tables.apply(&mut next);
        for comp in next.iter_mut() {
            for v in comp.iter_mut() {
                *v *= weight;
            }
        }
        // relative update in the spectral l2 norm
        let mut diff_sq = 0.0;
        let mut norm_sq = 0.0;
        for j in 0..model.n() {
            for (a, b) in next[j].iter().zip(&spectra[j]) {
                diff_sq += (a - b).norm_sqr();
                norm_sq += b.norm_sqr();
            }
        }
        let rel = (diff_sq / norm_sq).sqrt();
        spectra = next;
        if trace {
            eprintln!("iter {iter}: rel {rel:.3e} S {s:.6} cubic {t_cubic:?} sym {t_sym:?} total {:?}", t_iter.elapsed());
        }

        let iterate_norm = norm_sq.sqrt();
        if !iterate_norm.is_finite() || iterate_norm > 1e6 * norm0 * shape.iter().product::<usize>() as f64 {
            return Err(Error::numerical("Petviashvili iteration diverged"));
        }

        if rel < opts.tol_update {
            // candidate fixed point: check the physical residual
            let mut field = VectorField::zeros(grid.clone(), model.n());
            for (c, s) in field.components.iter_mut().zip(&spectra) {
                *c = s.clone();
                fourier::fft_inverse(c, &shape);
            }
            let res = stationary_residual(model, omega, &field);
            residual_history.push(res);
            if res < opts.tol_residual {
                if (s_factor - 1.0).abs() > 1e-6 {
                    return Err(Error::numerical(format!(
                        "stabilizing factor did not settle to 1 (S = {s_factor})"
                    )));
                }
                if opts.check_localization {
                    let interior = field.sup_norm();
                    let boundary = field.boundary_sup();
                    if boundary > 1e-6 * interior {
                        return Err(Error::resolution(format!(
                            "solution touches the boundary: shell/peak = {:.2e}",
                            boundary / interior
                        )));
                    }
                }
                let symmetry = symmetry_diagnostics(&field);
                return Ok(SolitonSolution {
                    omega,
                    field,
                    residual: res,
                    iterations,
                    s_factor,
                    symmetry,
                    warnings,
                });
            }
        }
    }
    Err(Error::numerical(format!(
        "Petviashvili did not converge in {} iterations (residual history: {:?})",
        opts.max_iter,
        residual_history.iter().rev().take(5).collect::<Vec<_>>()
    )))
}

/// One continuation record: the solution summary at one Ω.
#[derive(Debug, Clone)]
pub struct BranchEntry {
    pub omega: f64,
    pub peak: f64,
    pub residual: f64,
    pub iterations: usize,
    pub symmetry: Vec<(String, f64)>,
}

/// Result of a continuation run in Ω.
#[derive(Debug, Clone)]
pub struct SolitonBranch {
    pub entries: Vec<BranchEntry>,
    pub completed: bool,
    pub abort_reason: Option<String>,
    pub final_solution: Option<SolitonSolution>,
}

/// Minimum continuation step before aborting.
pub const D_OMEGA_MIN: f64 = 1e-4;

/// Continue a converged solution from its Ω toward `omega_target` in steps of
/// `d_omega`, seeding each solve from the previous solution and halving the
/// step on failure (down to `D_OMEGA_MIN`).
pub fn continue_in_omega(
    model: &CmeModel,
    start: &SolitonSolution,
    omega_target: f64,
    d_omega: f64,
    opts: SolveOptions,
) -> Result<SolitonBranch> {
    if d_omega <= 0.0 {
        return Err(Error::config("continuation step must be positive"));
    }
    let mut entries = vec![BranchEntry {
        omega: start.omega,
        peak: start.field.sup_norm(),
        residual: start.residual,
        iterations: start.iterations,
        symmetry: start.symmetry.clone(),
    }];
    let mut current = start.clone();
    if omega_target == start.omega {
        return Ok(SolitonBranch {
            entries,
            completed: true,
            abort_reason: None,
            final_solution: Some(current),
        });
    }
    let dir = (omega_target - start.omega).signum();
    let mut step = d_omega;
    let mut omega = start.omega;
    while (omega_target - omega) * dir > 1e-12 {
        let next_omega = if (omega_target - omega) * dir <= step {
            omega_target
        } else {
            omega + dir * step
        };
        match petviashvili_solve(model, next_omega, &current.field, opts) {
            Ok(sol) => {
                entries.push(BranchEntry {
                    omega: sol.omega,
                    peak: sol.field.sup_norm(),
                    residual: sol.residual,
                    iterations: sol.iterations,
                    symmetry: sol.symmetry.clone(),
                });
                current = sol;
                omega = next_omega;
            }
            Err(err) => {
                step /= 2.0;
                if step < D_OMEGA_MIN {
                    return Ok(SolitonBranch {
                        entries,
                        completed: false,
                        abort_reason: Some(format!(
                            "step fell below {D_OMEGA_MIN:.1e} at Ω = {next_omega}: {err}"
                        )),
                        final_solution: Some(current),
                    });
                }
            }
        }
    }
    Ok(SolitonBranch {
        entries,
        completed: true,
        abort_reason: None,
        final_solution: Some(current),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cme::GammaTensor;
    use crate::rational::RationalVec;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    /// N = 1 model with zero transport: symbol is the constant -κ₁₁.
    fn scalar_model(kappa11: f64, gamma: f64) -> CmeModel {
        let mut tensor = GammaTensor::empty(1);
        tensor.insert(0, 0, 0, 0, Complex64::new(gamma, 0.0));
        CmeModel::new(
            vec![vec![0.0]],
            DMatrix::from_element(1, 1, Complex64::new(kappa11, 0.0)),
            tensor,
            vec![RationalVec::parse("1/5").unwrap()],
        )
        .unwrap()
    }

    fn hyperbolic_model() -> CmeModel {
        // 1D two-mode model with a (-1, 1) gap
        let kap = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::default(),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::default(),
            ],
        );
        CmeModel::new(
            vec![vec![1.0], vec![-1.0]],
            kap,
            GammaTensor::empty(2),
            vec![
                RationalVec::parse("1/5").unwrap(),
                RationalVec::parse("-1/5").unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn inverse_rejected_on_spectrum() {
        // κ = 0: hyperplane spectrum passes through every Ω at some K
        let model = CmeModel::new(
            vec![vec![1.0], vec![-1.0]],
            DMatrix::from_element(2, 2, Complex64::default()),
            GammaTensor::empty(2),
            vec![
                RationalVec::parse("1/5").unwrap(),
                RationalVec::parse("-1/5").unwrap(),
            ],
        )
        .unwrap();
        let field = VectorField::zeros(Grid::centered(1, 64, 10.0), 2);
        assert!(apply_symbol_inverse(&field, 0.0, &model).is_err());
    }

    #[test]
    fn inverse_matches_direct_solve_on_constant_field() {
        let model = hyperbolic_model();
        let grid = Grid::centered(1, 32, 10.0);
        let mut field = VectorField::zeros(grid, 2);
        let b = [Complex64::new(0.3, -0.1), Complex64::new(-0.2, 0.5)];
        for j in 0..2 {
            field.components[j].iter_mut().for_each(|v| *v = b[j]);
        }
        let omega = 0.4;
        let out = apply_symbol_inverse(&field, omega, &model).unwrap();
        // constant field lives at K = 0: (−κ − Ω)⁻¹ b
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(-omega, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(-omega, 0.0),
            ],
        );
        let rhs = nalgebra::DVector::from_row_slice(&b);
        let expect = m.lu().solve(&rhs).unwrap();
        for j in 0..2 {
            for v in &out.components[j] {
                assert!((v - expect[j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn symbol_then_inverse_round_trip() {
        let model = hyperbolic_model();
        let grid = Grid::centered(1, 64, 10.0);
        let mut field = VectorField::zeros(grid.clone(), 2);
        // deterministic pseudo-random field
        let mut state = 12345u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for j in 0..2 {
            for v in field.components[j].iter_mut() {
                *v = Complex64::new(next(), next());
            }
        }
        let omega = 0.3;
        let inv = apply_symbol_inverse(&field, omega, &model).unwrap();
        let mut back = apply_symbol(&inv, &model);
        for j in 0..2 {
            for (b, i) in back.components[j].iter_mut().zip(&inv.components[j]) {
                *b -= omega * i;
            }
        }
        for j in 0..2 {
            for (a, b) in field.components[j].iter().zip(&back.components[j]) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn scalar_fixed_point_matches_algebra() {
        // symbol - Ω = -κ₁₁ - Ω = δ; fixed point |b|² = δ/γ
        let model = scalar_model(-1.0, 2.0);
        let omega = 0.5;
        let delta = 1.0 - omega;
        let grid = Grid::centered(1, 16, 5.0);
        let mut init = VectorField::zeros(grid, 1);
        init.components[0]
            .iter_mut()
            .for_each(|v| *v = Complex64::new(0.3, 0.0));
        let opts = SolveOptions { check_localization: false, ..Default::default() };
        let sol = petviashvili_solve(&model, omega, &init, opts).unwrap();
        let expect = (delta / 2.0).sqrt();
        for v in &sol.field.components[0] {
            assert_abs_diff_eq!(v.norm(), expect, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(sol.s_factor, 1.0, epsilon = 1e-6);
        assert!(sol.residual < 1e-8);
    }

    #[test]
    fn converged_solution_is_a_fixed_point_when_refed() {
        let model = scalar_model(-1.0, 2.0);
        let omega = 0.5;
        let grid = Grid::centered(1, 16, 5.0);
        let mut init = VectorField::zeros(grid, 1);
        init.components[0]
            .iter_mut()
            .for_each(|v| *v = Complex64::new(0.3, 0.0));
        let opts = SolveOptions { check_localization: false, ..Default::default() };
        let first = petviashvili_solve(&model, omega, &init, opts).unwrap();
        let second = petviashvili_solve(&model, omega, &first.field, opts).unwrap();
        assert!(second.iterations <= 2, "took {} iterations", second.iterations);
        for (a, b) in first.field.components[0].iter().zip(&second.field.components[0]) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_length_continuation_returns_input() {
        let model = scalar_model(-1.0, 2.0);
        let omega = 0.5;
        let grid = Grid::centered(1, 16, 5.0);
        let mut init = VectorField::zeros(grid, 1);
        init.components[0]
            .iter_mut()
            .for_each(|v| *v = Complex64::new(0.3, 0.0));
        let opts = SolveOptions { check_localization: false, ..Default::default() };
        let sol = petviashvili_solve(&model, omega, &init, opts).unwrap();
        let branch = continue_in_omega(&model, &sol, omega, 0.01, opts).unwrap();
        assert!(branch.completed);
        assert_eq!(branch.entries.len(), 1);
        let fin = branch.final_solution.unwrap();
        for (a, b) in sol.field.components[0].iter().zip(&fin.field.components[0]) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn scalar_continuation_tracks_amplitude_law() {
        let model = scalar_model(-1.0, 2.0);
        let grid = Grid::centered(1, 16, 5.0);
        let mut init = VectorField::zeros(grid, 1);
        init.components[0]
            .iter_mut()
            .for_each(|v| *v = Complex64::new(0.3, 0.0));
        let opts = SolveOptions { check_localization: false, ..Default::default() };
        let sol = petviashvili_solve(&model, 0.5, &init, opts).unwrap();
        let branch = continue_in_omega(&model, &sol, 0.2, 0.05, opts).unwrap();
        assert!(branch.completed);
        for e in &branch.entries {
            let expect = ((1.0 - e.omega) / 2.0).sqrt();
            assert_abs_diff_eq!(e.peak, expect, epsilon = 1e-8);
            assert!(e.residual < 1e-8);
        }
    }

    #[test]
    fn divergence_guard_trips_on_bad_sign() {
        // Γ with the wrong sign: S < 0 on the first iteration
        let model = scalar_model(-1.0, -2.0);
        let omega = 0.5;
        let grid = Grid::centered(1, 16, 5.0);
        let mut init = VectorField::zeros(grid, 1);
        init.components[0]
            .iter_mut()
            .for_each(|v| *v = Complex64::new(0.3, 0.0));
        let opts = SolveOptions { check_localization: false, ..Default::default() };
        assert!(petviashvili_solve(&model, omega, &init, opts).is_err());
    }
}
