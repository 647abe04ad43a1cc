//! Bloch eigenvalue problem for a periodic potential, discretized by a
//! plane-wave Galerkin basis `e^{i η·x}`, `|η|_∞ ≤ G`.
//!
//! The operator `-|∇ + ik|² + V` is diagonal in the kinetic part
//! (`|k + η|²`) and convolutional in the potential (`V̂(η - η')`), so the
//! truncated matrix is Hermitian and dense. Matrix sizes stay modest
//! (`(2G+1)^d`), so a dense solve gives the full spectrum for band counting.

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::linalg;
use crate::potential::PeriodicPotential;
use crate::rational::RationalVec;
use crate::{fourier, util};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Tolerance scale for the eigen-residual check after a solve.
pub const TOL_EIG: f64 = 1e-8;
/// Modes closer than `TOL_DEGEN · max(1, |ω|)` are flagged degenerate.
pub const TOL_DEGEN: f64 = 1e-8;
/// Modulus ties in the gauge anchor resolve to the lexicographically
/// smallest η below this tolerance.
pub const TIE_TOL: f64 = 1e-12;

/// Number of plane-wave basis functions at cutoff `g` in dimension `d`.
pub fn basis_size(g: i64, d: usize) -> usize {
    (2 * g as usize + 1).pow(d as u32)
}

/// Lattice vector of the `flat`-th basis function (lexicographic order,
/// first axis most significant, each axis running `-G..=G`).
pub fn eta_at(flat: usize, g: i64, d: usize) -> Vec<i64> {
    let n = 2 * g as usize + 1;
    let mut rem = flat;
    let mut eta = vec![0i64; d];
    for ax in (0..d).rev() {
        eta[ax] = (rem % n) as i64 - g;
        rem /= n;
    }
    eta
}

/// Flat index of a lattice vector with `|η|_∞ ≤ G`.
pub fn flat_of_eta(eta: &[i64], g: i64) -> usize {
    let n = 2 * g as usize + 1;
    let mut flat = 0usize;
    for &e in eta {
        debug_assert!(e.abs() <= g);
        flat = flat * n + (e + g) as usize;
    }
    flat
}

/// One carrier Bloch wave: eigenpair of the truncated Bloch problem at a
/// fixed wavevector, gauge-fixed and normalized (`Σ |c_η|² = 1`).
#[derive(Debug, Clone)]
pub struct BlochMode {
    /// Band index, 1-based in ascending eigenvalue order.
    pub band: usize,
    /// Exact wavevector in the Brillouin zone `(-1/2, 1/2]^d`.
    pub k: RationalVec,
    pub omega: f64,
    pub cutoff: i64,
    /// Plane-wave coefficients in `eta_at` order.
    pub coeffs: Vec<Complex64>,
    pub group_velocity: Vec<f64>,
    /// Set when another band sits within the degeneracy tolerance.
    pub degenerate: bool,
}

impl BlochMode {
    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    /// Build a mode from raw coefficients (normalizes and gauge-fixes).
    /// Mostly useful for tests and synthetic carriers.
    pub fn from_coeffs(
        band: usize,
        k: RationalVec,
        omega: f64,
        cutoff: i64,
        mut coeffs: Vec<Complex64>,
    ) -> Result<Self> {
        let d = k.dim();
        if coeffs.len() != basis_size(cutoff, d) {
            return Err(Error::config("coefficient vector length does not match cutoff"));
        }
        let norm = util::norm_sq(&coeffs).sqrt();
        if norm == 0.0 {
            return Err(Error::config("zero coefficient vector"));
        }
        for c in &mut coeffs {
            *c /= norm;
        }
        linalg::gauge_fix(&mut coeffs, TIE_TOL);
        let mut mode = BlochMode {
            band,
            k,
            omega,
            cutoff,
            coeffs,
            group_velocity: vec![0.0; d],
            degenerate: false,
        };
        mode.group_velocity = hellmann_feynman(&mode);
        Ok(mode)
    }
}

/// Assemble the truncated operator `-|∇ + ik|² + V` at wavevector `k`:
/// diagonal `|k + η|²`, off-diagonal `V̂(η - η')`.
pub fn build_planewave_operator(
    v: &PeriodicPotential,
    k: &[f64],
    g: i64,
) -> Result<DMatrix<Complex64>> {
    let d = v.dim();
    if k.len() != d {
        return Err(Error::config("wavevector dimension does not match potential"));
    }
    if g < v.support_radius() {
        return Err(Error::config(format!(
            "cutoff G = {} is smaller than the potential support radius {}",
            g,
            v.support_radius()
        )));
    }
    let n = basis_size(g, d);
    let mut h = DMatrix::<Complex64>::zeros(n, n);
    for row in 0..n {
        let eta_r = eta_at(row, g, d);
        let kin: f64 = eta_r
            .iter()
            .zip(k)
            .map(|(&e, &ki)| (ki + e as f64).powi(2))
            .sum();
        h[(row, row)] = Complex64::new(kin, 0.0) + v.coeff(&vec![0; d]);
        for (eta, &coeff) in v.coeffs() {
            if eta.iter().all(|&e| e == 0) {
                continue;
            }
            // column η' with η - η' = eta  =>  η' = η_r - eta
            let eta_c: Vec<i64> = eta_r.iter().zip(eta).map(|(&a, &b)| a - b).collect();
            if eta_c.iter().all(|&e| e.abs() <= g) {
                h[(row, flat_of_eta(&eta_c, g))] += coeff;
            }
        }
    }
    debug_assert!(linalg::hermiticity_defect(&h) <= 1e-12);
    Ok(h)
}

/// Group velocity by the Hellmann-Feynman identity, which in the plane-wave
/// basis reduces to `Σ_η 2(k + η) |c_η|²`. Exact for the truncated family.
fn hellmann_feynman(mode: &BlochMode) -> Vec<f64> {
    let d = mode.dim();
    let k = mode.k.to_f64();
    let mut vg = vec![0.0; d];
    for (flat, c) in mode.coeffs.iter().enumerate() {
        let w = c.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let eta = eta_at(flat, mode.cutoff, d);
        for ax in 0..d {
            vg[ax] += 2.0 * (k[ax] + eta[ax] as f64) * w;
        }
    }
    vg
}

/// Group velocity of a normalized mode. Errors on modes flagged degenerate,
/// where the eigenvalue derivative is not well defined band-wise.
pub fn group_velocity(mode: &BlochMode) -> Result<Vec<f64>> {
    if mode.degenerate {
        return Err(Error::numerical(format!(
            "band {} at k = {} is degenerate; group velocity undefined",
            mode.band,
            mode.k.format()
        )));
    }
    Ok(hellmann_feynman(mode))
}

/// Solve the Bloch problem, returning bands `1..=n_max` as gauge-fixed,
/// normalized modes with group velocities populated.
pub fn solve_bloch(
    v: &PeriodicPotential,
    k: &RationalVec,
    g: i64,
    n_max: usize,
) -> Result<Vec<BlochMode>> {
    let kf = k.to_f64();
    let h = build_planewave_operator(v, &kf, g)?;
    let n = h.nrows();
    if n_max > n {
        return Err(Error::config(format!(
            "requested {n_max} bands but the basis has only {n} functions"
        )));
    }
    let (values, vectors) = linalg::herm_eigen(&h)?;
    let mut modes = Vec::with_capacity(n_max);
    for band in 0..n_max {
        let omega = values[band];
        let mut coeffs: Vec<Complex64> = vectors.column(band).iter().copied().collect();
        linalg::gauge_fix(&mut coeffs, TIE_TOL);
        // eigen-residual in the truncated basis
        let mut res: f64 = 0.0;
        for row in 0..n {
            let mut acc = Complex64::default();
            for col in 0..n {
                acc += h[(row, col)] * coeffs[col];
            }
            res += (acc - omega * coeffs[row]).norm_sqr();
        }
        let res = res.sqrt();
        if res > TOL_EIG * omega.abs().max(1.0) {
            return Err(Error::numerical(format!(
                "eigen-residual {res:.3e} too large for band {} at k = {}",
                band + 1,
                k.format()
            )));
        }
        let tol = TOL_DEGEN * omega.abs().max(1.0);
        let degenerate = (band > 0 && (omega - values[band - 1]).abs() < tol)
            || (band + 1 < n && (values[band + 1] - omega).abs() < tol);
        let mut mode = BlochMode {
            band: band + 1,
            k: k.clone(),
            omega,
            cutoff: g,
            coeffs,
            group_velocity: vec![0.0; v.dim()],
            degenerate,
        };
        mode.group_velocity = hellmann_feynman(&mode);
        modes.push(mode);
    }
    Ok(modes)
}

/// Band frequencies only, at a floating-point wavevector (for k-path sweeps).
pub fn band_frequencies(
    v: &PeriodicPotential,
    k: &[f64],
    g: i64,
    n_max: usize,
) -> Result<Vec<f64>> {
    let h = build_planewave_operator(v, k, g)?;
    if n_max > h.nrows() {
        return Err(Error::config("n_max exceeds basis size"));
    }
    let vals = linalg::herm_eigenvalues(&h)?;
    Ok(vals[..n_max].to_vec())
}

/// Evaluate `p(x) = Σ_η c_η e^{i η·x}` on a uniform `m^d` torus grid by a
/// zero-padded inverse FFT. Requires `m ≥ 2(2G+1)` so that downstream
/// quadratic products of modes stay alias-free.
pub fn evaluate_bloch_on_grid(mode: &BlochMode, m: usize) -> Result<ScalarField> {
    let d = mode.dim();
    let g = mode.cutoff;
    let min_m = 2 * (2 * g as usize + 1);
    if m < min_m {
        return Err(Error::resolution(format!(
            "grid {m} per axis too small for cutoff G = {g}; need at least {min_m}"
        )));
    }
    let grid = Grid::torus(d, m);
    let mut field = ScalarField::zeros(grid);
    let shape = vec![m; d];
    for (flat, &c) in mode.coeffs.iter().enumerate() {
        if c.norm() == 0.0 {
            continue;
        }
        let eta = eta_at(flat, g, d);
        let mut bin = 0usize;
        for &e in &eta {
            let b = fourier::bin_of_signed(e, m).expect("cutoff fits the grid");
            bin = bin * m + b;
        }
        field.data[bin] = c;
    }
    fourier::fft_inverse(&mut field.data, &shape);
    // fft_inverse divides by the grid size; the plain sum over η must not.
    let scale = field.data.len() as f64;
    for v in &mut field.data {
        *v *= scale;
    }
    Ok(field)
}

/// Frequencies along a k-path: rows of `(k, ω_1..ω_nmax)` for CSV emission.
pub fn band_structure(
    v: &PeriodicPotential,
    k_path: &[Vec<f64>],
    g: i64,
    n_max: usize,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    k_path
        .iter()
        .map(|k| Ok((k.clone(), band_frequencies(v, k, g, n_max)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rat(s: &str) -> RationalVec {
        RationalVec::parse(s).unwrap()
    }

    #[test]
    fn free_operator_is_diagonal_kinetic() {
        // V = 0, k = 0, G = 1, d = 1: diag(1, 0, 1) in η-order (-1, 0, 1)
        let v = PeriodicPotential::zero(1);
        let h = build_planewave_operator(&v, &[0.0], 1).unwrap();
        assert_eq!(h.nrows(), 3);
        for r in 0..3 {
            for c in 0..3 {
                let expect = if r == c { [1.0, 0.0, 1.0][r] } else { 0.0 };
                assert_abs_diff_eq!(h[(r, c)].re, expect, epsilon = 1e-15);
                assert_abs_diff_eq!(h[(r, c)].im, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn coscos_coupling_pattern() {
        // V = cos(x1)cos(x2): exactly 4 off-diagonal couplings per interior row.
        let v = PeriodicPotential::cosine_product(2, 1.0);
        let g = 3;
        let h = build_planewave_operator(&v, &[0.1, -0.3], g).unwrap();
        let n = h.nrows();
        for row in 0..n {
            let eta = eta_at(row, g, 2);
            if eta.iter().all(|e| e.abs() < g) {
                let nonzero = (0..n)
                    .filter(|&c| c != row && h[(row, c)].norm() > 0.0)
                    .count();
                assert_eq!(nonzero, 4, "row {row} (η = {eta:?})");
            }
        }
    }

    #[test]
    fn operator_hermitian_to_machine_precision() {
        let v = PeriodicPotential::cosine_product(2, 1.0);
        let h = build_planewave_operator(&v, &[-0.2, -0.4], 6).unwrap();
        assert!(linalg::hermiticity_defect(&h) <= 1e-12);
    }

    #[test]
    fn cutoff_below_support_rejected() {
        let v = PeriodicPotential::cosine(1, vec![3], 1.0).unwrap();
        assert!(build_planewave_operator(&v, &[0.0], 2).is_err());
    }

    #[test]
    fn free_bands_are_kinetic_energies() {
        // d = 2, k = (0.1, 0.2): ω₁ = |k|² = 0.05, eigenvector on η = 0
        let v = PeriodicPotential::zero(2);
        let modes = solve_bloch(&v, &rat("1/10 1/5"), 3, 1).unwrap();
        assert_abs_diff_eq!(modes[0].omega, 0.05, epsilon = 1e-12);
        let center = flat_of_eta(&[0, 0], 3);
        assert_abs_diff_eq!(modes[0].coeffs[center].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn coscos_band4_near_paper_value() {
        let v = PeriodicPotential::cosine_product(2, 1.0);
        let modes = solve_bloch(&v, &rat("-1/5 -2/5"), 8, 4).unwrap();
        assert_abs_diff_eq!(modes[3].omega, 0.9942, epsilon = 2e-3);
    }

    #[test]
    fn band_symmetry_under_k_reflection() {
        let v = PeriodicPotential::cosine_product(2, 1.0);
        for k in [rat("3/10 1/10"), rat("-1/4 2/5"), rat("1/8 -3/8")] {
            let plus = solve_bloch(&v, &k, 6, 4).unwrap();
            let minus = solve_bloch(&v, &k.neg(), 6, 4).unwrap();
            for (a, b) in plus.iter().zip(&minus) {
                assert_abs_diff_eq!(a.omega, b.omega, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn group_velocity_free_band() {
        // eigenvector concentrated at η*: v_g = 2(k + η*)
        let v = PeriodicPotential::zero(2);
        let modes = solve_bloch(&v, &rat("1/10 1/5"), 3, 1).unwrap();
        let vg = group_velocity(&modes[0]).unwrap();
        assert_abs_diff_eq!(vg[0], 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(vg[1], 0.4, epsilon = 1e-12);
    }

    #[test]
    fn group_velocity_antisymmetric_in_k() {
        let v = PeriodicPotential::cosine_product(2, 1.0);
        let k = rat("3/10 1/10");
        let plus = solve_bloch(&v, &k, 6, 4).unwrap();
        let minus = solve_bloch(&v, &k.neg(), 6, 4).unwrap();
        for (a, b) in plus.iter().zip(&minus) {
            if a.degenerate || b.degenerate {
                continue;
            }
            let va = group_velocity(a).unwrap();
            let vb = group_velocity(b).unwrap();
            for ax in 0..2 {
                assert_abs_diff_eq!(va[ax], -vb[ax], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn group_velocity_matches_finite_differences() {
        let v = PeriodicPotential::cosine_product(2, 1.0);
        let k = rat("-1/5 -2/5");
        let g = 6;
        let modes = solve_bloch(&v, &k, g, 4).unwrap();
        let mode = &modes[3];
        let vg = group_velocity(mode).unwrap();
        let h = 1e-4;
        let kf = k.to_f64();
        for ax in 0..2 {
            let mut kp = kf.clone();
            kp[ax] += h;
            let mut km = kf.clone();
            km[ax] -= h;
            let op = band_frequencies(&v, &kp, g, 4).unwrap()[3];
            let om = band_frequencies(&v, &km, g, 4).unwrap()[3];
            let fd = (op - om) / (2.0 * h);
            assert_abs_diff_eq!(vg[ax], fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn degenerate_bands_flagged_and_rejected() {
        // free problem at k = 0: bands 2..5 all share the eigenvalue 1
        let v = PeriodicPotential::zero(2);
        let modes = solve_bloch(&v, &rat("0 0"), 2, 3).unwrap();
        assert!(modes[1].degenerate);
        assert!(group_velocity(&modes[1]).is_err());
        assert!(!modes[0].degenerate);
    }

    #[test]
    fn gauge_deterministic_across_solves() {
        let v = PeriodicPotential::cosine_product(2, 1.0);
        let k = rat("-1/5 -2/5");
        let a = solve_bloch(&v, &k, 6, 4).unwrap();
        let b = solve_bloch(&v, &k, 6, 4).unwrap();
        for (ma, mb) in a.iter().zip(&b) {
            for (x, y) in ma.coeffs.iter().zip(&mb.coeffs) {
                assert!((x - y).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn modes_orthonormal_at_fixed_k() {
        let v = PeriodicPotential::cosine_product(2, 1.0);
        let modes = solve_bloch(&v, &rat("-1/5 -2/5"), 6, 5).unwrap();
        for (i, a) in modes.iter().enumerate() {
            assert_abs_diff_eq!(util::norm_sq(&a.coeffs), 1.0, epsilon = 1e-12);
            for b in modes.iter().skip(i + 1) {
                assert!(util::dot(&a.coeffs, &b.coeffs).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn evaluate_constant_and_single_wave() {
        let mut coeffs = vec![Complex64::default(); basis_size(1, 2)];
        coeffs[flat_of_eta(&[0, 0], 1)] = Complex64::new(1.0, 0.0);
        let mode = BlochMode::from_coeffs(1, rat("0 0"), 0.0, 1, coeffs).unwrap();
        let field = evaluate_bloch_on_grid(&mode, 8).unwrap();
        for v in &field.data {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }

        let mut coeffs = vec![Complex64::default(); basis_size(1, 2)];
        coeffs[flat_of_eta(&[1, 0], 1)] = Complex64::new(1.0, 0.0);
        let mode = BlochMode::from_coeffs(1, rat("0 0"), 0.0, 1, coeffs).unwrap();
        let field = evaluate_bloch_on_grid(&mode, 8).unwrap();
        let grid = field.grid.clone();
        util::for_each_multi_index(&grid.shape, |flat, idx| {
            let x = grid.point(idx);
            let expect = Complex64::new(x[0].cos(), x[0].sin());
            assert!((field.data[flat] - expect).norm() < 1e-12);
        });
    }

    #[test]
    fn evaluate_parseval_and_direct_sum() {
        let v = PeriodicPotential::cosine_product(2, 1.0);
        let modes = solve_bloch(&v, &rat("-1/5 -2/5"), 4, 4).unwrap();
        let mode = &modes[3];
        let field = evaluate_bloch_on_grid(mode, 2 * (2 * 4 + 1)).unwrap();
        let mean_sq = util::norm_sq(&field.data) / field.data.len() as f64;
        assert_abs_diff_eq!(mean_sq, 1.0, epsilon = 1e-12);
        // direct summation oracle at a few grid points
        let grid = field.grid.clone();
        for idx in [vec![0usize, 0], vec![3, 7], vec![11, 2]] {
            let x = grid.point(&idx);
            let mut direct = Complex64::default();
            for (flat, c) in mode.coeffs.iter().enumerate() {
                let eta = eta_at(flat, mode.cutoff, 2);
                let ph: f64 = eta.iter().zip(&x).map(|(&e, &xi)| e as f64 * xi).sum();
                direct += c * Complex64::new(ph.cos(), ph.sin());
            }
            let flat = idx[0] * grid.shape[1] + idx[1];
            assert!((field.data[flat] - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn evaluate_grid_too_small_rejected() {
        let v = PeriodicPotential::cosine_product(2, 1.0);
        let modes = solve_bloch(&v, &rat("0 0"), 4, 1).unwrap();
        assert!(evaluate_bloch_on_grid(&modes[0], 17).is_err());
    }
}
