//! Assembly of the coupled-mode model: resonance index sets, the coupling
//! matrix κ induced by the perturbation W, and the cubic tensor γ induced by
//! σ, all by spectral quadrature of Bloch-function products.
//!
//! Integrands are trigonometric polynomials, so an FFT-grid mean with enough
//! padding integrates them exactly; the default quadrature grid uses
//! `4(2G+1)` points per axis (alias-free for quartic products).

use crate::bloch::{self, BlochMode};
use crate::error::{Error, Result};
use crate::potential::{PeriodicPotential, PerturbationPotential};
use crate::rational::{self, RationalVec};
use crate::util;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Tolerance for lattice-membership tests on floating-point wavevectors.
pub const TOL_RES: f64 = 1e-9;
/// Same-k carrier modes must be L²-orthogonal to this tolerance.
pub const TOL_CARRIER_ORTHO: f64 = 1e-8;
/// Default frequency tolerance for the shared carrier frequency.
pub const TOL_OMEGA: f64 = 1e-6;

/// The N carrier Bloch waves sharing one temporal frequency.
#[derive(Debug, Clone)]
pub struct CarrierSet {
    pub modes: Vec<BlochMode>,
    pub omega0: f64,
    pub tol_omega: f64,
}

impl CarrierSet {
    pub fn new(modes: Vec<BlochMode>, tol_omega: f64) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::config("carrier set must contain at least one mode"));
        }
        let d = modes[0].dim();
        let g = modes[0].cutoff;
        if modes.iter().any(|m| m.dim() != d || m.cutoff != g) {
            return Err(Error::config(
                "all carriers must share the dimension and plane-wave cutoff",
            ));
        }
        let omega0 = modes.iter().map(|m| m.omega).sum::<f64>() / modes.len() as f64;
        for m in &modes {
            if (m.omega - omega0).abs() > tol_omega {
                return Err(Error::config(format!(
                    "carrier (band {}, k = {}) has ω = {:.9}, outside tol {:.1e} of ω₀ = {:.9}",
                    m.band,
                    m.k.format(),
                    m.omega,
                    tol_omega,
                    omega0
                )));
            }
        }
        for (i, a) in modes.iter().enumerate() {
            for b in modes.iter().skip(i + 1) {
                if a.band == b.band && a.k == b.k {
                    return Err(Error::config("carriers must be pairwise distinct (band, k)"));
                }
                if a.k == b.k {
                    let overlap = util::dot(&a.coeffs, &b.coeffs).norm();
                    if overlap > TOL_CARRIER_ORTHO {
                        return Err(Error::config(format!(
                            "same-k carriers (bands {}, {}) are not orthogonal: overlap {overlap:.3e}",
                            a.band, b.band
                        )));
                    }
                }
            }
        }
        Ok(CarrierSet { modes, omega0, tol_omega })
    }

    pub fn n(&self) -> usize {
        self.modes.len()
    }

    pub fn dim(&self) -> usize {
        self.modes[0].dim()
    }

    pub fn cutoff(&self) -> i64 {
        self.modes[0].cutoff
    }

    pub fn wavevectors(&self) -> Vec<RationalVec> {
        self.modes.iter().map(|m| m.k.clone()).collect()
    }

    /// Solve the Bloch problem at the requested carriers and assemble the set.
    pub fn from_potential(
        v: &PeriodicPotential,
        carriers: &[(usize, RationalVec)],
        g: i64,
        tol_omega: f64,
    ) -> Result<Self> {
        let mut modes = Vec::with_capacity(carriers.len());
        for (band, k) in carriers {
            let solved = bloch::solve_bloch(v, k, g, *band)?;
            modes.push(solved[*band - 1].clone());
        }
        CarrierSet::new(modes, tol_omega)
    }
}

/// Resonant cubic triples for target mode `j` (0-based): all `(α, β, γ)` with
/// `k_α - k_β + k_γ ∈ k_j + Z^d`, exactly, in lexicographic order.
pub fn resonant_triples(carriers: &[RationalVec], j: usize) -> Vec<(usize, usize, usize)> {
    let n = carriers.len();
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let comb = RationalVec::resonance_combination(
                    &carriers[a],
                    &carriers[b],
                    &carriers[c],
                    &carriers[j],
                );
                if comb.is_integer() {
                    out.push((a, b, c));
                }
            }
        }
    }
    out
}

/// Sparse cubic tensor γ over resonant quadruples `(j; α, β, γ)`, 0-based.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GammaTensor {
    pub n: usize,
    entries: BTreeMap<(usize, usize, usize, usize), Complex64>,
}

impl GammaTensor {
    pub fn empty(n: usize) -> Self {
        GammaTensor { n, entries: BTreeMap::new() }
    }

    pub fn from_entries(
        n: usize,
        entries: BTreeMap<(usize, usize, usize, usize), Complex64>,
    ) -> Self {
        GammaTensor { n, entries }
    }

    /// Value at a quadruple; zero for non-resonant (absent) indices.
    pub fn get(&self, j: usize, a: usize, b: usize, c: usize) -> Complex64 {
        self.entries.get(&(j, a, b, c)).copied().unwrap_or_default()
    }

    pub fn insert(&mut self, j: usize, a: usize, b: usize, c: usize, v: Complex64) {
        self.entries.insert((j, a, b, c), v);
    }

    pub fn iter(
        &self,
    ) -> impl Iterator<Item = (&(usize, usize, usize, usize), &Complex64)> {
        self.entries.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Pointwise cubic nonlinearity `N_j(A) = Σ γ_j^{(α,β,γ)} A_α conj(A_β) A_γ`
    /// over equal-length component buffers. Output buffers are overwritten.
    pub fn apply_cubic(&self, comps: &[Vec<Complex64>], out: &mut [Vec<Complex64>]) {
        use rayon::prelude::*;
        assert_eq!(comps.len(), self.n);
        assert_eq!(out.len(), self.n);
        let len = comps.first().map(|c| c.len()).unwrap_or(0);
        let chunk = len.div_ceil(4 * rayon::current_num_threads().max(1)).max(1024);
        out.par_iter_mut().enumerate().for_each(|(j, oj)| {
            oj.par_chunks_mut(chunk).enumerate().for_each(|(ci, block)| {
                let start = ci * chunk;
                block.iter_mut().for_each(|v| *v = Complex64::default());
                for (&(tj, a, b, c), &g) in &self.entries {
                    if tj != j {
                        continue;
                    }
                    let fa = &comps[a][start..start + block.len()];
                    let fb = &comps[b][start..start + block.len()];
                    let fc = &comps[c][start..start + block.len()];
                    for i in 0..block.len() {
                        block[i] += g * fa[i] * fb[i].conj() * fc[i];
                    }
                }
            });
        });
    }

    /// Contraction `Σ_j η_j Σ_res γ_j^{(α,β,γ)} η_α conj(η_β) η_γ` (transpose
    /// pairing on the outer index, so a global phase of η rotates the result).
    pub fn contract(&self, eta: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::default();
        for (&(j, a, b, c), &g) in &self.entries {
            acc += eta[j] * g * eta[a] * eta[b].conj() * eta[c];
        }
        acc
    }

    /// Checks the swap identity `γ_j^{(α,β,γ)} = γ_j^{(γ,β,α)}` and the
    /// conjugation identity `conj(γ_j^{(α,β,γ)}) = γ_γ^{(β,α,j)}`; returns the
    /// worst defect.
    pub fn symmetry_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        for (&(j, a, b, c), &g) in &self.entries {
            defect = defect.max((g - self.get(j, c, b, a)).norm());
            defect = defect.max((g.conj() - self.get(c, b, a, j)).norm());
        }
        defect
    }
}

/// The assembled coupled-mode model: transport velocities, Hermitian coupling
/// matrix and sparse cubic tensor, plus the carrier wavevectors that define
/// the resonance bookkeeping.
#[derive(Debug, Clone)]
pub struct CmeModel {
    pub vg: Vec<Vec<f64>>,
    pub kappa: DMatrix<Complex64>,
    pub gamma: GammaTensor,
    pub carriers: Vec<RationalVec>,
}

impl CmeModel {
    pub fn new(
        vg: Vec<Vec<f64>>,
        kappa: DMatrix<Complex64>,
        gamma: GammaTensor,
        carriers: Vec<RationalVec>,
    ) -> Result<Self> {
        let n = vg.len();
        if n == 0 {
            return Err(Error::config("model must have at least one mode"));
        }
        let d = vg[0].len();
        if vg.iter().any(|v| v.len() != d) {
            return Err(Error::config("group velocities disagree in dimension"));
        }
        if kappa.nrows() != n || kappa.ncols() != n {
            return Err(Error::config("κ size does not match the mode count"));
        }
        if gamma.n != n {
            return Err(Error::config("γ tensor size does not match the mode count"));
        }
        if carriers.len() != n || carriers.iter().any(|k| k.dim() != d) {
            return Err(Error::config("carrier wavevectors do not match the model"));
        }
        let scale = kappa.iter().map(|v| v.norm()).fold(1.0, f64::max);
        if crate::linalg::hermiticity_defect(&kappa) > 1e-9 * scale {
            return Err(Error::config("κ must be Hermitian"));
        }
        Ok(CmeModel { vg, kappa, gamma, carriers })
    }

    pub fn n(&self) -> usize {
        self.vg.len()
    }

    pub fn dim(&self) -> usize {
        self.vg[0].len()
    }
}

/// Quadrature grid size per axis that is alias-free for quartic products of
/// modes at cutoff `g`.
pub fn quadrature_grid_size(g: i64) -> usize {
    4 * (2 * g as usize + 1)
}

fn grid_mean(values: &[Complex64]) -> Complex64 {
    util::pairwise_sum(values) / values.len() as f64
}

/// Torus quadrature of a pointwise product of band-limited factors: the grid
/// mean, exact once alias-free.
fn product_mean(
    sigma: Option<&[Complex64]>,
    factors: &[(&[Complex64], bool)],
    phase: Option<&[Complex64]>,
) -> Complex64 {
    let len = factors[0].0.len();
    let mut buf = vec![Complex64::new(1.0, 0.0); len];
    if let Some(s) = sigma {
        buf.iter_mut().zip(s).for_each(|(b, &v)| *b *= v);
    }
    for &(f, conj) in factors {
        if conj {
            buf.iter_mut().zip(f).for_each(|(b, &v)| *b *= v.conj());
        } else {
            buf.iter_mut().zip(f).for_each(|(b, &v)| *b *= v);
        }
    }
    if let Some(p) = phase {
        buf.iter_mut().zip(p).for_each(|(b, &v)| *b *= v);
    }
    grid_mean(&buf)
}

/// `e^{i μ·x}` sampled on the `m^d` torus grid for an integer vector μ.
fn lattice_phase(mu: &[i64], m: usize) -> Vec<Complex64> {
    let d = mu.len();
    let shape = vec![m; d];
    let mut out = vec![Complex64::default(); m.pow(d as u32)];
    util::for_each_multi_index(&shape, |flat, idx| {
        let ph: f64 = mu
            .iter()
            .zip(idx)
            .map(|(&mu_ax, &i)| 2.0 * std::f64::consts::PI * mu_ax as f64 * i as f64 / m as f64)
            .sum();
        out[flat] = Complex64::new(ph.cos(), ph.sin());
    });
    out
}

/// Evaluate all carrier modes on the shared quadrature grid.
fn carrier_fields(carriers: &CarrierSet, m: usize) -> Result<Vec<Vec<Complex64>>> {
    carriers
        .modes
        .iter()
        .map(|mode| Ok(bloch::evaluate_bloch_on_grid(mode, m)?.data))
        .collect()
}

/// Coupling matrix `κ_{jr} = -Σ_m a_m <e^{i(k_r + l_m - k_j)·x} p_r, p_j>`
/// over the resonant perturbation terms. The result must be Hermitian
/// (guaranteed by the W pairing); it is symmetrized after the defect check.
pub fn kappa_matrix(carriers: &CarrierSet, w: &PerturbationPotential) -> Result<DMatrix<Complex64>> {
    kappa_matrix_on_grid(carriers, w, quadrature_grid_size(carriers.cutoff()))
}

/// `kappa_matrix` with an explicit quadrature grid (used by convergence tests).
pub fn kappa_matrix_on_grid(
    carriers: &CarrierSet,
    w: &PerturbationPotential,
    m: usize,
) -> Result<DMatrix<Complex64>> {
    let n = carriers.n();
    let d = carriers.dim();
    if w.dim() != d {
        return Err(Error::config("W dimension does not match the carriers"));
    }
    let mut kappa = DMatrix::<Complex64>::zeros(n, n);
    if w.is_zero() {
        return Ok(kappa);
    }
    let fields = carrier_fields(carriers, m)?;
    let ks: Vec<Vec<f64>> = carriers.modes.iter().map(|mo| mo.k.to_f64()).collect();
    for j in 0..n {
        for r in 0..n {
            let mut acc = Complex64::default();
            for term in w.terms() {
                // resonance: k_r + l_m - k_j must be a dual-lattice vector
                let nu: Vec<f64> = (0..d)
                    .map(|ax| ks[r][ax] + term.l[ax] - ks[j][ax])
                    .collect();
                let (mu, dist) = rational::nearest_lattice_vector(&nu);
                if dist > TOL_RES {
                    continue;
                }
                let phase = lattice_phase(&mu, m);
                let integral = product_mean(
                    None,
                    &[(&fields[r], false), (&fields[j], true)],
                    Some(&phase),
                );
                acc -= term.a * integral;
            }
            kappa[(j, r)] = acc;
        }
    }
    let scale = kappa.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let defect = crate::linalg::hermiticity_defect(&kappa);
    if defect > 1e-9 * scale {
        return Err(Error::numerical(format!(
            "κ quadrature produced a non-Hermitian matrix (defect {defect:.3e}); \
             this signals a gauge or quadrature bug"
        )));
    }
    // make hermiticity exact for downstream eigensolves
    let herm = (kappa.clone() + kappa.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(herm)
}

/// Cubic tensor `γ_j^{(α,β,γ)} = -<σ p_α conj(p_β) p_γ e^{iμ·x}, p_j>` over
/// the resonant quadruples, μ the exact integer combination of carrier
/// wavevectors.
pub fn gamma_tensor(carriers: &CarrierSet, sigma: &PeriodicPotential) -> Result<GammaTensor> {
    gamma_tensor_on_grid(carriers, sigma, quadrature_grid_size(carriers.cutoff()))
}

/// `gamma_tensor` with an explicit quadrature grid (used by convergence tests).
pub fn gamma_tensor_on_grid(
    carriers: &CarrierSet,
    sigma: &PeriodicPotential,
    m: usize,
) -> Result<GammaTensor> {
    let n = carriers.n();
    let d = carriers.dim();
    if sigma.dim() != d {
        return Err(Error::config("σ dimension does not match the carriers"));
    }
    let min_m = 4 * (2 * carriers.cutoff() as usize + 1);
    if m < min_m {
        return Err(Error::resolution(format!(
            "quadrature grid {m} too small for alias-free quartic products; need {min_m}"
        )));
    }
    let mut tensor = GammaTensor::empty(n);
    if sigma.is_zero() {
        return Ok(tensor);
    }
    let fields = carrier_fields(carriers, m)?;
    let grid = crate::grid::Grid::torus(d, m);
    let sigma_field = sigma.sample(&grid).data;
    let kvecs = carriers.wavevectors();
    for j in 0..n {
        for (a, b, c) in resonant_triples(&kvecs, j) {
            let comb = RationalVec::resonance_combination(&kvecs[a], &kvecs[b], &kvecs[c], &kvecs[j]);
            let mu: Vec<i64> = comb.0.iter().map(|r| *r.numer() / *r.denom()).collect();
            let phase = lattice_phase(&mu, m);
            let integral = product_mean(
                Some(&sigma_field),
                &[
                    (&fields[a], false),
                    (&fields[b], true),
                    (&fields[c], false),
                    (&fields[j], true),
                ],
                Some(&phase),
            );
            tensor.insert(j, a, b, c, -integral);
        }
    }
    let defect = tensor.symmetry_defect();
    if defect > 1e-10 * tensor.max_abs().max(1.0) {
        return Err(Error::numerical(format!(
            "γ tensor violates its symmetry identities (defect {defect:.3e})"
        )));
    }
    Ok(tensor)
}

/// Assemble the full model from carriers, W and σ. Group velocities come from
/// the Hellmann-Feynman formula on each carrier.
pub fn assemble_model(
    carriers: &CarrierSet,
    w: &PerturbationPotential,
    sigma: &PeriodicPotential,
) -> Result<CmeModel> {
    let vg: Result<Vec<Vec<f64>>> = carriers.modes.iter().map(bloch::group_velocity).collect();
    CmeModel::new(
        vg?,
        kappa_matrix(carriers, w)?,
        gamma_tensor(carriers, sigma)?,
        carriers.wavevectors(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{basis_size, flat_of_eta, BlochMode};
    use approx::assert_abs_diff_eq;

    fn rat(s: &str) -> RationalVec {
        RationalVec::parse(s).unwrap()
    }

    /// Synthetic single-plane-wave carrier `p = e^{i η·x}` at wavevector k.
    fn plane_carrier(band: usize, k: &str, eta: &[i64], g: i64) -> BlochMode {
        let k = rat(k);
        let mut coeffs = vec![Complex64::default(); basis_size(g, k.dim())];
        coeffs[flat_of_eta(eta, g)] = Complex64::new(1.0, 0.0);
        BlochMode::from_coeffs(band, k, 1.0, g, coeffs).unwrap()
    }

    #[test]
    fn single_mode_always_self_resonant() {
        let ks = vec![rat("1/7 3/7")];
        assert_eq!(resonant_triples(&ks, 0), vec![(0, 0, 0)]);
    }

    #[test]
    fn two_mode_resonances_generic_and_half_lattice() {
        // generic: k1 - k2 ∉ (1/2)Z² keeps (2,1,2) out
        let generic = vec![rat("1/5 0"), rat("-1/10 0")];
        let triples = resonant_triples(&generic, 0);
        assert_eq!(triples, vec![(0, 0, 0), (0, 1, 1), (1, 1, 0)]);
        // half-lattice: k1 - k2 ∈ (1/2)Z² adds it
        let half = vec![rat("1/4 0"), rat("-1/4 0")];
        let triples = resonant_triples(&half, 0);
        assert!(half[0].sub(&half[1]).in_half_lattice());
        assert_eq!(triples, vec![(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)]);
        assert!(triples.contains(&(1, 0, 1)), "A₂²conj(A₁) term present");
    }

    #[test]
    fn kappa_zero_for_zero_perturbation() {
        let carriers = CarrierSet::new(
            vec![
                plane_carrier(1, "1/5 0", &[0, 0], 2),
                plane_carrier(1, "-1/10 0", &[0, 0], 2),
            ],
            TOL_OMEGA,
        )
        .unwrap();
        let w = PerturbationPotential::zero(2);
        let kappa = kappa_matrix(&carriers, &w).unwrap();
        assert!(kappa.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn kappa_two_mode_cosine_example() {
        // W = 2cos((k1-k2)·x) + 1 with k1 - k2 ∉ (1/2)Z²:
        // κ_jj = -1, κ_12 = -<p₂, p₁>
        let k1 = rat("1/5 0");
        let k2 = rat("-1/10 0");
        let carriers = CarrierSet::new(
            vec![
                plane_carrier(1, "1/5 0", &[0, 0], 2),
                plane_carrier(1, "-1/10 0", &[0, 0], 2),
            ],
            TOL_OMEGA,
        )
        .unwrap();
        let l: Vec<f64> = k1
            .to_f64()
            .iter()
            .zip(k2.to_f64())
            .map(|(a, b)| a - b)
            .collect();
        let w = PerturbationPotential::cosine(2, l, 2.0)
            .unwrap()
            .with_constant(1.0)
            .unwrap();
        let kappa = kappa_matrix(&carriers, &w).unwrap();
        assert_abs_diff_eq!(kappa[(0, 0)].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(kappa[(1, 1)].re, -1.0, epsilon = 1e-12);
        // p₁ = p₂ = 1 pointwise, so <p₂, p₁> = 1 and κ₁₂ = -1
        assert_abs_diff_eq!(kappa[(0, 1)].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(kappa[(0, 1)].im, 0.0, epsilon = 1e-12);
        assert!((kappa[(1, 0)] - kappa[(0, 1)].conj()).norm() < 1e-12);
    }

    #[test]
    fn gamma_zero_for_zero_sigma() {
        let carriers = CarrierSet::new(vec![plane_carrier(1, "1/7 2/7", &[0, 0], 2)], TOL_OMEGA)
            .unwrap();
        let gamma = gamma_tensor(&carriers, &PeriodicPotential::zero(2)).unwrap();
        assert!(gamma.is_empty());
    }

    #[test]
    fn gamma_constant_mode_is_minus_one() {
        // N = 1, σ = 1, p ≡ 1: γ^(1,1,1) = -<|p|⁴> = -1
        let carriers = CarrierSet::new(vec![plane_carrier(1, "1/7 2/7", &[0, 0], 2)], TOL_OMEGA)
            .unwrap();
        let gamma = gamma_tensor(&carriers, &PeriodicPotential::constant(2, 1.0)).unwrap();
        let v = gamma.get(0, 0, 0, 0);
        assert_abs_diff_eq!(v.re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
    }

    fn coscos_carriers(g: i64) -> CarrierSet {
        let v = PeriodicPotential::cosine_product(2, 1.0);
        let ks = ["-1/5 -2/5", "1/5 -2/5", "1/5 2/5", "-1/5 2/5"];
        let modes: Vec<BlochMode> = ks
            .iter()
            .map(|k| bloch::solve_bloch(&v, &rat(k), g, 4).unwrap().remove(3))
            .collect();
        CarrierSet::new(modes, TOL_OMEGA).unwrap()
    }

    #[test]
    fn gamma_symmetries_on_coscos_carriers() {
        let carriers = coscos_carriers(4);
        let gamma = gamma_tensor(&carriers, &PeriodicPotential::constant(2, 1.0)).unwrap();
        assert!(!gamma.is_empty());
        assert!(gamma.symmetry_defect() < 1e-10 * gamma.max_abs());
        // the four-corner resonance structure: 9 triples per target mode
        let kvecs = carriers.wavevectors();
        for j in 0..4 {
            assert_eq!(resonant_triples(&kvecs, j).len(), 9);
        }
    }

    #[test]
    fn quadrature_exact_once_alias_free() {
        let carriers = coscos_carriers(4);
        let sigma = PeriodicPotential::constant(2, 1.0);
        let m = quadrature_grid_size(4);
        let coarse = gamma_tensor_on_grid(&carriers, &sigma, m).unwrap();
        let fine = gamma_tensor_on_grid(&carriers, &sigma, 2 * m).unwrap();
        for (key, v) in coarse.iter() {
            assert!((v - fine.get(key.0, key.1, key.2, key.3)).norm() < 1e-10);
        }
        let w = PerturbationPotential::cosine(2, vec![0.4, 0.0], 1.0).unwrap();
        let kc = kappa_matrix_on_grid(&carriers, &w, m).unwrap();
        let kf = kappa_matrix_on_grid(&carriers, &w, 2 * m).unwrap();
        assert!((&kc - &kf).iter().all(|v| v.norm() < 1e-10));
    }

    #[test]
    fn carrier_validation_rejects_frequency_mismatch() {
        let g = 2;
        let mut a = plane_carrier(1, "1/5 0", &[0, 0], g);
        let b = plane_carrier(1, "-1/10 0", &[0, 0], g);
        a.omega = 1.5; // far from b's ω = 1.0
        assert!(CarrierSet::new(vec![a, b], TOL_OMEGA).is_err());
    }

    #[test]
    fn carrier_validation_rejects_duplicates_and_nonorthogonal() {
        let g = 2;
        let a = plane_carrier(1, "1/5 0", &[0, 0], g);
        let b = plane_carrier(1, "1/5 0", &[0, 0], g);
        assert!(CarrierSet::new(vec![a.clone(), b], TOL_OMEGA).is_err());
        // same k, different band labels, but identical (non-orthogonal) content
        let mut c = plane_carrier(1, "1/5 0", &[0, 0], g);
        c.band = 2;
        assert!(CarrierSet::new(vec![a, c], TOL_OMEGA).is_err());
    }
}
