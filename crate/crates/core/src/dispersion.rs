//! CME dispersion relation: symbol evaluation, sampling-based spectral gap
//! detection, band-edge data (gradient, Hessian, definiteness), the N = 2 and
//! N = 4 closed forms, odd-N root existence, and moving-frame spectra.
//!
//! Gap scanning is sampling-based and certifies gaps only up to the scan
//! resolution; a coarse far-field sweep at `|K| ∈ {R_K, 2R_K}` guards against
//! false gaps from the asymptotically linear dispersion sheets, surfaced by
//! the `asymptotic_cover_checked` flag.

use crate::cme::CmeModel;
use crate::error::{Error, Result};
use crate::linalg::{self, JacobiWorkspace};
use crate::rational::RationalVec;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

/// Gradient threshold below which a point qualifies as a band-edge extremum.
pub const TOL_EDGE: f64 = 1e-6;
/// Eigenvalues closer than this (relative) count as degenerate for edges.
pub const TOL_DEGEN: f64 = 1e-8;

/// One dispersion sample: sorted eigenvalues and gauge-fixed orthonormal
/// eigenvectors of the symbol at a wavevector `K`.
#[derive(Debug, Clone)]
pub struct SymbolSample {
    pub k: Vec<f64>,
    pub omegas: Vec<f64>,
    /// Unit eigenvectors, one per eigenvalue, gauge-fixed (largest-modulus
    /// entry real positive, ties to lowest index).
    pub eigenvectors: Vec<Vec<Complex64>>,
}

/// Symbol of the spatial CME operator at wavevector `K`:
/// `diag(v_g^{(j)}·K) - κ`. Hermitian by construction.
pub fn cme_symbol(model: &CmeModel, k: &[f64]) -> DMatrix<Complex64> {
    let n = model.n();
    let mut m = -model.kappa.clone();
    for j in 0..n {
        let transport: f64 = model.vg[j].iter().zip(k).map(|(v, kk)| v * kk).sum();
        m[(j, j)] += Complex64::new(transport, 0.0);
    }
    m
}

fn symbol_flat(model: &CmeModel, k: &[f64], buf: &mut [Complex64]) {
    let n = model.n();
    for r in 0..n {
        for c in 0..n {
            buf[r * n + c] = -model.kappa[(r, c)];
        }
        let transport: f64 = model.vg[r].iter().zip(k).map(|(v, kk)| v * kk).sum();
        buf[r * n + r] += Complex64::new(transport, 0.0);
    }
}

/// Full eigendecomposition of the symbol at `K`.
pub fn dispersion_eigen(model: &CmeModel, k: &[f64]) -> Result<SymbolSample> {
    let n = model.n();
    let mut buf = vec![Complex64::default(); n * n];
    symbol_flat(model, k, &mut buf);
    let mut ws = JacobiWorkspace::default();
    let mut values = vec![0.0; n];
    let mut vectors = vec![Complex64::default(); n * n];
    linalg::small_herm_eigen(&buf, n, &mut ws, &mut values, &mut vectors);
    let mut eigenvectors = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = vectors[j * n..(j + 1) * n].to_vec();
        linalg::gauge_fix(&mut v, 1e-12);
        eigenvectors.push(v);
    }
    Ok(SymbolSample { k: k.to_vec(), omegas: values, eigenvectors })
}

/// Eigenvalues of the symbol only (no vectors), ascending.
pub fn dispersion_eigenvalues(model: &CmeModel, k: &[f64]) -> Vec<f64> {
    let n = model.n();
    let mut buf = vec![Complex64::default(); n * n];
    symbol_flat(model, k, &mut buf);
    let mut ws = JacobiWorkspace::default();
    let mut values = vec![0.0; n];
    linalg::small_herm_eigenvalues(&buf, n, &mut ws, &mut values);
    values
}

// ---------------------------------------------------------------------------
// gap scanning
// ---------------------------------------------------------------------------

/// Result of a sampling-based gap scan over `|K|_∞ ≤ R_K`.
#[derive(Debug, Clone)]
pub struct GapReport {
    pub r_k: f64,
    pub h_k: f64,
    pub h_omega: f64,
    pub window: (f64, f64),
    /// Union of the sampled spectrum, as maximal intervals (resolution h_Ω).
    pub covered: Vec<(f64, f64)>,
    /// Open intervals of the window at distance > h_Ω from every sample.
    pub gaps: Vec<(f64, f64)>,
    /// True when the far-field angular sweep at `|K| ∈ {R_K, 2R_K}` added no
    /// spectrum inside the candidate gaps.
    pub asymptotic_cover_checked: bool,
}

struct ScanAccum {
    mask: Vec<u64>,
    buf: Vec<Complex64>,
    vals: Vec<f64>,
    ws: JacobiWorkspace,
}

struct MaskSpec {
    lo: f64,
    q: f64,
    bins: usize,
}

impl MaskSpec {
    fn mark(&self, mask: &mut [u64], v: f64) {
        let t = (v - self.lo) / self.q;
        if t >= 0.0 && t < self.bins as f64 {
            let b = t as usize;
            mask[b / 64] |= 1u64 << (b % 64);
        }
    }
    fn is_marked(&self, mask: &[u64], b: usize) -> bool {
        mask[b / 64] & (1u64 << (b % 64)) != 0
    }
    fn words(&self) -> usize {
        self.bins.div_ceil(64)
    }
}

fn or_masks(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x |= y;
    }
    a
}

/// Extract gaps and covered intervals from a coverage mask. Endpoints carry
/// the full `h_Ω` margin from every sample (quantization is accounted for).
fn gaps_from_mask(spec: &MaskSpec, mask: &[u64], window: (f64, f64), h_omega: f64) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let mut gaps = Vec::new();
    let mut covered = Vec::new();
    let marked: Vec<usize> = (0..spec.bins).filter(|&b| spec.is_marked(mask, b)).collect();
    if marked.is_empty() {
        gaps.push(window);
        return (gaps, covered);
    }
    // gaps between consecutive marked bins, plus the window boundary segments
    let push_gap = |gaps: &mut Vec<(f64, f64)>, lo: f64, hi: f64| {
        let lo = lo.max(window.0);
        let hi = hi.min(window.1);
        if hi > lo {
            gaps.push((lo, hi));
        }
    };
    let first_sample_lb = spec.lo + marked[0] as f64 * spec.q;
    push_gap(&mut gaps, window.0, first_sample_lb - h_omega);
    for w in marked.windows(2) {
        let (b1, b2) = (w[0], w[1]);
        if b2 - b1 > 1 {
            // sample below ≤ lo+(b1+1)q, sample above ≥ lo+b2·q
            let left = spec.lo + (b1 + 1) as f64 * spec.q + h_omega;
            let right = spec.lo + b2 as f64 * spec.q - h_omega;
            push_gap(&mut gaps, left, right);
        }
    }
    let last_sample_ub = spec.lo + (marked[marked.len() - 1] + 1) as f64 * spec.q;
    push_gap(&mut gaps, last_sample_ub + h_omega, window.1);

    // covered intervals: clusters of marked bins separated by ≤ 2h_Ω of space
    let merge_bins = (2.0 * h_omega / spec.q).ceil() as usize;
    let mut start = marked[0];
    let mut prev = marked[0];
    for &b in &marked[1..] {
        if b - prev > merge_bins {
            covered.push((spec.lo + start as f64 * spec.q, spec.lo + (prev + 1) as f64 * spec.q));
            start = b;
        }
        prev = b;
    }
    covered.push((spec.lo + start as f64 * spec.q, spec.lo + (prev + 1) as f64 * spec.q));
    (gaps, covered)
}

/// Unit directions for the far-field sweep.
fn sweep_directions(d: usize) -> Result<Vec<Vec<f64>>> {
    match d {
        1 => Ok(vec![vec![1.0], vec![-1.0]]),
        2 => {
            let m = 1440;
            Ok((0..m)
                .map(|i| {
                    let th = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                    vec![th.cos(), th.sin()]
                })
                .collect())
        }
        3 => {
            // Fibonacci sphere, deterministic
            let m = 2000;
            let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
            Ok((0..m)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * i as f64;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect())
        }
        _ => Err(Error::config("gap scans support d ≤ 3")),
    }
}

fn scan_core(
    model: &CmeModel,
    shift: Option<&[f64]>,
    window: (f64, f64),
    r_k: f64,
    h_k: f64,
    h_omega: f64,
) -> Result<GapReport> {
    if window.1 <= window.0 {
        return Err(Error::config("empty frequency window"));
    }
    if r_k <= 0.0 || h_k <= 0.0 || h_omega <= 0.0 {
        return Err(Error::config("scan parameters must be positive"));
    }
    let d = model.dim();
    let n = model.n();
    if let Some(v) = shift {
        if v.len() != d {
            return Err(Error::config("frame velocity dimension mismatch"));
        }
    }
    let q = h_omega / 8.0;
    let lo = window.0 - h_omega - 2.0 * q;
    let hi = window.1 + h_omega + 2.0 * q;
    let bins = ((hi - lo) / q).ceil() as usize + 1;
    let spec = MaskSpec { lo, q, bins };

    let steps = (2.0 * r_k / h_k).round() as usize + 1;
    let axis: Vec<f64> = (0..steps).map(|i| -r_k + i as f64 * h_k).collect();
    let inner_count = axis.len().pow(d as u32 - 1);

    let mask = (0..axis.len())
        .into_par_iter()
        .fold(
            || ScanAccum {
                mask: vec![0u64; spec.words()],
                buf: vec![Complex64::default(); n * n],
                vals: vec![0.0; n],
                ws: JacobiWorkspace::default(),
            },
            |mut acc, i0| {
                let mut k = vec![0.0; d];
                k[0] = axis[i0];
                let mut idx = vec![0usize; d - 1];
                for _ in 0..inner_count {
                    for (ax, &i) in idx.iter().enumerate() {
                        k[ax + 1] = axis[i];
                    }
                    symbol_flat(model, &k, &mut acc.buf);
                    linalg::small_herm_eigenvalues(&acc.buf, n, &mut acc.ws, &mut acc.vals);
                    let dot: f64 = shift
                        .map(|v| v.iter().zip(&k).map(|(a, b)| a * b).sum())
                        .unwrap_or(0.0);
                    for &om in acc.vals.iter() {
                        spec.mark(&mut acc.mask, om - dot);
                    }
                    for ax in (0..d - 1).rev() {
                        idx[ax] += 1;
                        if idx[ax] < axis.len() {
                            break;
                        }
                        idx[ax] = 0;
                    }
                }
                acc
            },
        )
        .map(|acc| acc.mask)
        .reduce(|| vec![0u64; spec.words()], or_masks);

    let (base_gaps, _) = gaps_from_mask(&spec, &mask, window, h_omega);

    // far-field sweep at |K| in {R_K, 2R_K}
    let mut swept = mask.clone();
    {
        let mut buf = vec![Complex64::default(); n * n];
        let mut vals = vec![0.0; n];
        let mut ws = JacobiWorkspace::default();
        for dir in sweep_directions(d)? {
            for r in [r_k, 2.0 * r_k] {
                let k: Vec<f64> = dir.iter().map(|x| x * r).collect();
                symbol_flat(model, &k, &mut buf);
                linalg::small_herm_eigenvalues(&buf, n, &mut ws, &mut vals);
                let dot: f64 = shift
                    .map(|v| v.iter().zip(&k).map(|(a, b)| a * b).sum())
                    .unwrap_or(0.0);
                for &om in vals.iter() {
                    spec.mark(&mut swept, om - dot);
                }
            }
        }
    }
    let (gaps, covered) = gaps_from_mask(&spec, &swept, window, h_omega);
    let unchanged = gaps.len() == base_gaps.len()
        && gaps
            .iter()
            .zip(&base_gaps)
            .all(|(a, b)| (a.0 - b.0).abs() <= 2.0 * q && (a.1 - b.1).abs() <= 2.0 * q);

    Ok(GapReport {
        r_k,
        h_k,
        h_omega,
        window,
        covered,
        gaps,
        asymptotic_cover_checked: unchanged,
    })
}

/// Scan the dispersion relation for spectral gaps inside `window`.
pub fn scan_gap(
    model: &CmeModel,
    window: (f64, f64),
    r_k: f64,
    h_k: f64,
    h_omega: f64,
) -> Result<GapReport> {
    scan_core(model, None, window, r_k, h_k, h_omega)
}

/// Gap scan of the moving-frame dispersion `Ω_j(K) - v·K`.
pub fn moving_frame_scan(
    model: &CmeModel,
    v: &[f64],
    window: (f64, f64),
    r_k: f64,
    h_k: f64,
    h_omega: f64,
) -> Result<GapReport> {
    scan_core(model, Some(v), window, r_k, h_k, h_omega)
}

// ---------------------------------------------------------------------------
// closed forms
// ---------------------------------------------------------------------------

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Closed-form N = 2 gap interval. Returns the interval iff the group
/// velocities are anti-parallel (`v1 = -α v2`, α > 0); for parallel or
/// linearly independent velocities there is no gap.
pub fn n2_gap_closed_form(
    vg1: &[f64],
    vg2: &[f64],
    kappa: &DMatrix<Complex64>,
) -> Result<Option<(f64, f64)>> {
    if kappa.nrows() != 2 {
        return Err(Error::config("closed form requires a 2-mode model"));
    }
    let (n1, n2) = (norm2(vg1), norm2(vg2));
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::config("zero group velocity"));
    }
    if kappa[(0, 0)].im.abs() > 1e-12 || kappa[(1, 1)].im.abs() > 1e-12 {
        return Err(Error::config("κ diagonal must be real"));
    }
    // anti-parallel test: unit vectors sum to zero
    let anti = vg1
        .iter()
        .zip(vg2)
        .map(|(a, b)| (a / n1 + b / n2).abs())
        .fold(0.0, f64::max)
        < 1e-9;
    if !anti {
        return Ok(None);
    }
    let k11 = kappa[(0, 0)].re;
    let k22 = kappa[(1, 1)].re;
    let k12 = kappa[(0, 1)].norm();
    let center = -(k22 * n1 + k11 * n2) / (n1 + n2);
    let half = 2.0 * k12 * (n1 * n2).sqrt() / (n1 + n2);
    if half <= 0.0 {
        return Ok(None);
    }
    Ok(Some((center - half, center + half)))
}

/// Sufficient condition for a spectral gap around 0 in the symmetric
/// four-mode system: `|α₁|² > 2(|α₂|² + |α₃|²)`.
pub fn n4_gap_condition(alpha1: Complex64, alpha2: Complex64, alpha3: Complex64) -> bool {
    alpha1.norm_sqr() > 2.0 * (alpha2.norm_sqr() + alpha3.norm_sqr())
}

/// Coupling matrix of the symmetric four-mode system.
pub fn n4_symmetric_kappa(
    alpha1: Complex64,
    alpha2: Complex64,
    alpha3: Complex64,
) -> DMatrix<Complex64> {
    let z = Complex64::default();
    let (a1, a2, a3) = (alpha1, alpha2, alpha3);
    DMatrix::from_row_slice(
        4,
        4,
        &[
            z, a1, a3, a2, //
            a1.conj(), z, a2.conj(), a3.conj(), //
            a3.conj(), a2, z, a1, //
            a2.conj(), a3, a1.conj(), z,
        ],
    )
}

/// Symmetric four-mode model with transport velocities `±v, ±w` and no cubic
/// tensor (dispersion-only).
pub fn n4_symmetric_model(
    alpha1: Complex64,
    alpha2: Complex64,
    alpha3: Complex64,
    v: [f64; 2],
    w: [f64; 2],
) -> Result<CmeModel> {
    let vg = vec![
        vec![v[0], v[1]],
        vec![-v[0], -v[1]],
        vec![w[0], w[1]],
        vec![-w[0], -w[1]],
    ];
    let det = v[0] * w[1] - w[0] * v[1];
    if det.abs() < 1e-12 {
        return Err(Error::config("v and w must be linearly independent"));
    }
    let kappa = n4_symmetric_kappa(alpha1, alpha2, alpha3);
    // rectangle carrier layout compatible with the ±v, ±w pairing
    let carriers = vec![
        RationalVec::parse("1/5 2/5").unwrap(),
        RationalVec::parse("-1/5 -2/5").unwrap(),
        RationalVec::parse("-1/5 2/5").unwrap(),
        RationalVec::parse("1/5 -2/5").unwrap(),
    ];
    CmeModel::new(vg, kappa, crate::cme::GammaTensor::empty(4), carriers)
}

/// Rewrite a symmetric four-mode model in the sheared coordinates that align
/// the transport directions with the axes: velocities become
/// `(±1,0), (0,±1)`; κ, γ and the carriers are unchanged. The dispersion
/// surface is the same up to the linear change of `K`.
pub fn transform_to_axes(model: &CmeModel) -> Result<CmeModel> {
    if model.n() != 4 || model.dim() != 2 {
        return Err(Error::config("axis transform applies to 4-mode models in d = 2"));
    }
    let v = &model.vg[0];
    let w = &model.vg[2];
    for ax in 0..2 {
        if (model.vg[1][ax] + v[ax]).abs() > 1e-12 || (model.vg[3][ax] + w[ax]).abs() > 1e-12 {
            return Err(Error::config("velocities must pair as ±v, ±w"));
        }
    }
    if (v[0] * w[1] - w[0] * v[1]).abs() < 1e-12 {
        return Err(Error::config("v and w must be linearly independent"));
    }
    let vg = vec![
        vec![1.0, 0.0],
        vec![-1.0, 0.0],
        vec![0.0, 1.0],
        vec![0.0, -1.0],
    ];
    CmeModel::new(vg, model.kappa.clone(), model.gamma.clone(), model.carriers.clone())
}

/// Real roots (ascending) of the quartic dispersion relation of the
/// axis-aligned symmetric four-mode system at `(K_ξ, K_η)`.
pub fn n4_quartic_roots(
    alpha1: Complex64,
    alpha2: Complex64,
    alpha3: Complex64,
    k_xi: f64,
    k_eta: f64,
) -> Vec<f64> {
    let (a1, a2, a3) = (alpha1, alpha2, alpha3);
    let s: f64 = a1.norm_sqr() + a2.norm_sqr() + a3.norm_sqr();
    let c2 = -(k_xi * k_xi + k_eta * k_eta + 2.0 * s);
    let c1 = 4.0 * ((a1.conj() * a2 * a3).re + (a1 * a2.conj() * a3).re);
    let c0 = (k_xi * k_eta + a2.norm_sqr() - a3.norm_sqr()).powi(2)
        + a1.norm_sqr() * (k_xi * k_xi + k_eta * k_eta + a1.norm_sqr())
        - 2.0 * (a1.norm_sqr() * (a3 * a3) + a2 * a2 * (a1.conj() * a1.conj())).re;
    linalg::quartic_real_roots(0.0, c2, c1, c0)
}

/// `sin(2θ)` candidates for far-field directions along which the
/// axis-aligned symmetric system's dispersion tends to `Ω` as `r → ∞`
/// (meaningful for `|Ω| ≥ |α₁|`). Returns values with `|sin 2θ| ≤ 1`.
pub fn n4_far_field_sin2theta(
    alpha1: Complex64,
    alpha2: Complex64,
    alpha3: Complex64,
    omega: f64,
    r: f64,
) -> Vec<f64> {
    let (a1, a2, a3) = (alpha1, alpha2, alpha3);
    let s: f64 = a1.norm_sqr() + a2.norm_sqr() + a3.norm_sqr();
    let psi = omega.powi(4) - 2.0 * omega * omega * s
        + 4.0 * omega * ((a1.conj() * a2 * a3).re + (a1 * a2.conj() * a3).re)
        + a1.norm_sqr() * a1.norm_sqr()
        - 2.0 * a1.norm_sqr() * (a3 * a3).re
        - 2.0 * (a1.conj() * a1.conj() * a2 * a2).re;
    let disc = r * r * (omega * omega - a1.norm_sqr()) - psi;
    let mut out = Vec::new();
    if disc < 0.0 {
        return out;
    }
    let root = disc.sqrt();
    for sign in [1.0, -1.0] {
        let s2 = (2.0 / (r * r)) * (a3.norm_sqr() - a2.norm_sqr() + sign * root);
        if s2.abs() <= 1.0 {
            out.push(s2);
        }
    }
    out
}

/// A real root `ρ` of `det(symbol(ρ·dir) - Ω)` for odd-N models: the
/// determinant is an odd-degree real polynomial in ρ, so a root exists for
/// every Ω once no transport velocity is orthogonal to the direction.
pub fn odd_n_real_root(model: &CmeModel, omega: f64, direction: &[f64]) -> Result<f64> {
    let n = model.n();
    if n % 2 == 0 {
        return Err(Error::config("root existence argument applies to odd N"));
    }
    let min_proj = model
        .vg
        .iter()
        .map(|v| v.iter().zip(direction).map(|(a, b)| a * b).sum::<f64>().abs())
        .fold(f64::INFINITY, f64::min);
    if min_proj < 1e-3 {
        return Err(Error::numerical(
            "direction nearly orthogonal to a transport velocity; pick another",
        ));
    }
    let f = |rho: f64| -> f64 {
        let k: Vec<f64> = direction.iter().map(|x| x * rho).collect();
        let m = cme_symbol(model, &k) - DMatrix::from_diagonal_element(n, n, Complex64::new(omega, 0.0));
        m.determinant().re
    };
    let kappa_scale: f64 = (0..n)
        .map(|r| (0..n).map(|c| model.kappa[(r, c)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut radius = 4.0 * (omega.abs() + kappa_scale + 1.0) / min_proj;
    for _ in 0..8 {
        let (fl, fr) = (f(-radius), f(radius));
        if fl == 0.0 {
            return Ok(-radius);
        }
        if fr == 0.0 {
            return Ok(radius);
        }
        if fl.signum() != fr.signum() {
            let (mut a, mut b) = (-radius, radius);
            let mut fa = fl;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let fm = f(mid);
                if fm == 0.0 {
                    return Ok(mid);
                }
                if fa.signum() == fm.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            return Ok(0.5 * (a + b));
        }
        radius *= 4.0;
    }
    Err(Error::numerical(
        "no sign change found for the odd-degree determinant (unexpected)",
    ))
}

// ---------------------------------------------------------------------------
// band edges
// ---------------------------------------------------------------------------

/// Definiteness verdict of a band-edge Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    PositiveDefinite,
    NegativeDefinite,
    Indefinite,
    /// Some Hessian eigenvalue is numerically zero (flat or linear sheet).
    Degenerate,
}

/// Band-edge data at `(j₀, K₀)`: frequency, eigenvector, gradient, Hessian.
#[derive(Debug, Clone)]
pub struct EdgeData {
    /// 1-based band index (ascending eigenvalue order).
    pub band: usize,
    pub k0: Vec<f64>,
    pub omega_star: f64,
    /// Gauge-fixed unit eigenvector at the edge.
    pub eta: Vec<Complex64>,
    pub gradient: Vec<f64>,
    pub hessian: DMatrix<f64>,
    pub definiteness: Definiteness,
    /// Distance to the nearest other eigenvalue at K₀.
    pub simplicity_margin: f64,
}

impl EdgeData {
    /// Whether the recorded gradient qualifies K₀ as an extremum.
    pub fn is_extremum(&self) -> bool {
        norm2(&self.gradient) <= TOL_EDGE
    }
}

/// Eigenvalue of the tracked band at `k`, matched to the reference
/// eigenvector by maximal overlap rather than sort order.
fn tracked_omega(model: &CmeModel, k: &[f64], eta_ref: &[Complex64]) -> Result<f64> {
    let sample = dispersion_eigen(model, k)?;
    let n = model.n();
    let mut best = 0usize;
    let mut best_ov = -1.0;
    let mut second = -1.0;
    for j in 0..n {
        let ov = crate::util::dot(eta_ref, &sample.eigenvectors[j]).norm();
        if ov > best_ov {
            second = best_ov;
            best_ov = ov;
            best = j;
        } else if ov > second {
            second = ov;
        }
    }
    if best_ov < 0.7 {
        return Err(Error::numerical(format!(
            "eigenvector tracking lost the band at K = {k:?} (best overlap {best_ov:.3})"
        )));
    }
    if second > 0.95 * best_ov {
        return Err(Error::numerical(format!(
            "eigenvector tracking ambiguous at K = {k:?} (overlaps {best_ov:.3} vs {second:.3})"
        )));
    }
    Ok(sample.omegas[best])
}

fn fd_gradient_hessian(
    model: &CmeModel,
    k0: &[f64],
    eta: &[Complex64],
    omega0: f64,
    h: f64,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let d = k0.len();
    let omega_at = |k: &[f64]| tracked_omega(model, k, eta);
    let mut grad = vec![0.0; d];
    let mut hess = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        let mut kp = k0.to_vec();
        kp[i] += h;
        let mut km = k0.to_vec();
        km[i] -= h;
        let (op, om) = (omega_at(&kp)?, omega_at(&km)?);
        grad[i] = (op - om) / (2.0 * h);
        hess[(i, i)] = (op - 2.0 * omega0 + om) / (h * h);
        for j in (i + 1)..d {
            let mut kpp = k0.to_vec();
            kpp[i] += h;
            kpp[j] += h;
            let mut kpm = k0.to_vec();
            kpm[i] += h;
            kpm[j] -= h;
            let mut kmp = k0.to_vec();
            kmp[i] -= h;
            kmp[j] += h;
            let mut kmm = k0.to_vec();
            kmm[i] -= h;
            kmm[j] -= h;
            let mixed = (omega_at(&kpp)? - omega_at(&kpm)? - omega_at(&kmp)? + omega_at(&kmm)?)
                / (4.0 * h * h);
            hess[(i, j)] = mixed;
            hess[(j, i)] = mixed;
        }
    }
    Ok((grad, hess))
}

/// Characterize the band `band` (1-based) of the dispersion relation at `K₀`:
/// frequency, eigenvector, gradient and Hessian by tracked central finite
/// differences with one Richardson refinement, and a definiteness verdict.
pub fn band_edge(model: &CmeModel, band: usize, k0: &[f64], h_edge: f64) -> Result<EdgeData> {
    let n = model.n();
    if band == 0 || band > n {
        return Err(Error::config(format!("band must be in 1..={n}")));
    }
    let sample = dispersion_eigen(model, k0)?;
    let j0 = band - 1;
    let omega_star = sample.omegas[j0];
    let margin = sample
        .omegas
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != j0)
        .map(|(_, om)| (om - omega_star).abs())
        .fold(f64::INFINITY, f64::min);
    if margin <= TOL_DEGEN * omega_star.abs().max(1.0) {
        return Err(Error::numerical(format!(
            "eigenvalue at K₀ is degenerate (margin {margin:.3e}); edge analysis requires simplicity"
        )));
    }
    let eta = sample.eigenvectors[j0].clone();
    let (g1, h1) = fd_gradient_hessian(model, k0, &eta, omega_star, h_edge)?;
    let (g2, h2) = fd_gradient_hessian(model, k0, &eta, omega_star, h_edge / 2.0)?;
    // one Richardson step: fourth-order from two second-order stencils
    let gradient: Vec<f64> = g1
        .iter()
        .zip(&g2)
        .map(|(a, b)| (4.0 * b - a) / 3.0)
        .collect();
    let hessian = (h2.clone() * 4.0 - h1.clone()) / 3.0;
    let hessian = (hessian.clone() + hessian.transpose()) * 0.5;

    let hc = hessian.map(|x| Complex64::new(x, 0.0));
    let eigs = linalg::herm_eigenvalues(&hc)?;
    let scale = eigs.iter().map(|x| x.abs()).fold(1.0, f64::max);
    let tol = 1e-4 * scale;
    let definiteness = if eigs.iter().any(|x| x.abs() <= tol) {
        Definiteness::Degenerate
    } else if eigs.iter().all(|&x| x > 0.0) {
        Definiteness::PositiveDefinite
    } else if eigs.iter().all(|&x| x < 0.0) {
        Definiteness::Indefinite.pick_negative(eigs.iter().all(|&x| x < 0.0))
    } else {
        Definiteness::Indefinite
    };

    Ok(EdgeData {
        band,
        k0: k0.to_vec(),
        omega_star,
        eta,
        gradient,
        hessian,
        definiteness,
        simplicity_margin: margin,
    })
}

impl Definiteness {
    fn pick_negative(self, all_neg: bool) -> Definiteness {
        if all_neg {
            Definiteness::NegativeDefinite
        } else {
            self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cme::GammaTensor;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn example_n4_model() -> CmeModel {
        // α₁ = 3, α₂ = α₃ = 1, v = (0,1), w = (1,0)
        n4_symmetric_model(c(3.0), c(1.0), c(1.0), [0.0, 1.0], [1.0, 0.0]).unwrap()
    }

    fn two_mode_model(vg1: Vec<f64>, vg2: Vec<f64>, kappa: DMatrix<Complex64>) -> CmeModel {
        let d = vg1.len();
        let carriers = if d == 1 {
            vec![
                RationalVec::parse("1/5").unwrap(),
                RationalVec::parse("-1/5").unwrap(),
            ]
        } else {
            vec![
                RationalVec::parse("1/5 0").unwrap(),
                RationalVec::parse("-1/5 0").unwrap(),
            ]
        };
        CmeModel::new(vec![vg1, vg2], kappa, GammaTensor::empty(2), carriers).unwrap()
    }

    #[test]
    fn symbol_zero_kappa_at_origin() {
        let model = two_mode_model(
            vec![1.0],
            vec![-1.0],
            DMatrix::from_element(2, 2, Complex64::default()),
        );
        let m = cme_symbol(&model, &[0.0]);
        assert!(m.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn symbol_two_mode_closed_form() {
        // 1D, v1 = -v2 = v, κ₁₁ = κ₂₂ real: Ω = -κ₁₁ ± sqrt(v²K² + |κ₁₂|²)
        let k12 = Complex64::new(0.3, 0.4);
        let kap = DMatrix::from_row_slice(2, 2, &[c(0.7), k12, k12.conj(), c(0.7)]);
        let model = two_mode_model(vec![1.3], vec![-1.3], kap);
        for kk in [-2.0, -0.3, 0.0, 1.1, 4.0] {
            let vals = dispersion_eigenvalues(&model, &[kk]);
            let root = ((1.3 * kk).powi(2) + k12.norm_sqr()).sqrt();
            assert_abs_diff_eq!(vals[0], -0.7 - root, epsilon = 1e-12);
            assert_abs_diff_eq!(vals[1], -0.7 + root, epsilon = 1e-12);
        }
    }

    #[test]
    fn hyperplanes_without_coupling() {
        let model = two_mode_model(
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            DMatrix::from_element(2, 2, Complex64::default()),
        );
        let k = [0.7, -1.9];
        let vals = dispersion_eigenvalues(&model, &k);
        let mut expect = [k[1], k[0]];
        expect.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(vals[0], expect[0], epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], expect[1], epsilon = 1e-12);
    }

    #[test]
    fn example_edge_eigenpair_at_origin() {
        let model = example_n4_model();
        let s = dispersion_eigen(&model, &[0.0, 0.0]).unwrap();
        // spectrum of -κ: {-5, -1, 3, 3}
        assert_abs_diff_eq!(s.omegas[0], -5.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.omegas[1], -1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.omegas[2], 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.omegas[3], 3.0, epsilon = 1e-10);
        // eigenvector ±(1/2)(-1,-1,1,1); our gauge makes the first entry positive
        let eta = &s.eigenvectors[1];
        let expect = [0.5, 0.5, -0.5, -0.5];
        for (v, e) in eta.iter().zip(expect) {
            assert_abs_diff_eq!(v.re, e, epsilon = 1e-10);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn quartic_matches_eigensolve() {
        let model = transform_to_axes(&example_n4_model()).unwrap();
        // axis model: vg1 = (1,0) pairs with K_ξ = K₁
        let mut worst: f64 = 0.0;
        for (kx, ke) in [(0.3, -1.2), (1.7, 0.4), (2.4, 0.7), (-3.0, 3.0)] {
            let eig = dispersion_eigenvalues(&model, &[kx, ke]);
            let roots = n4_quartic_roots(c(3.0), c(1.0), c(1.0), kx, ke);
            assert_eq!(roots.len(), 4);
            for (a, b) in eig.iter().zip(&roots) {
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst < 1e-9, "worst root discrepancy {worst:.2e}");
        // K = 0 carries a double root (Ω = 3); root accuracy degrades to √ε there
        let eig = dispersion_eigenvalues(&model, &[0.0, 0.0]);
        let roots = n4_quartic_roots(c(3.0), c(1.0), c(1.0), 0.0, 0.0);
        for (a, b) in eig.iter().zip(&roots) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn quartic_decoupled_pairs_when_cross_couplings_vanish() {
        let (kx, ke) = (0.8, -0.5);
        let roots = n4_quartic_roots(c(3.0), c(0.0), c(0.0), kx, ke);
        let mut expect = vec![
            -(kx * kx + 9.0).sqrt(),
            (kx * kx + 9.0).sqrt(),
            -(ke * ke + 9.0).sqrt(),
            (ke * ke + 9.0).sqrt(),
        ];
        expect.sort_by(f64::total_cmp);
        assert_eq!(roots.len(), 4);
        for (r, e) in roots.iter().zip(&expect) {
            assert_abs_diff_eq!(*r, *e, epsilon = 1e-10);
        }
        // symmetric about 0
        assert_abs_diff_eq!(roots[0] + roots[3], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(roots[1] + roots[2], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn gap_condition_examples() {
        assert!(n4_gap_condition(c(3.0), c(1.0), c(1.0)));
        assert!(!n4_gap_condition(c(1.0), c(1.0), c(1.0)));
        assert!(!n4_gap_condition(c(2.0), c(1.0), c(1.0)));
    }

    #[test]
    fn n2_closed_form_cases() {
        let kap = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        // 1D anti-parallel: gap (-1, 1)
        let gap = n2_gap_closed_form(&[1.0], &[-1.0], &kap).unwrap().unwrap();
        assert_abs_diff_eq!(gap.0, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gap.1, 1.0, epsilon = 1e-12);
        // parallel: none
        assert!(n2_gap_closed_form(&[2.0, 0.0], &[1.0, 0.0], &kap).unwrap().is_none());
        // linearly independent: none
        assert!(n2_gap_closed_form(&[0.0, 1.0], &[1.0, 0.0], &kap).unwrap().is_none());
        // anti-parallel with α = 2: centered interval
        let gap = n2_gap_closed_form(&[0.0, 2.0], &[0.0, -1.0], &kap).unwrap().unwrap();
        let half = 2.0 * 2.0f64.sqrt() / 3.0;
        assert_abs_diff_eq!(gap.1, half, epsilon = 1e-12);
    }

    #[test]
    fn scan_finds_example_gap() {
        let model = example_n4_model();
        let report = scan_gap(&model, (-6.0, 6.0), 12.0, 0.05, 1e-2).unwrap();
        assert_eq!(report.gaps.len(), 1, "gaps: {:?}", report.gaps);
        let (lo, hi) = report.gaps[0];
        assert!((lo + 1.0).abs() < 0.05, "lower edge {lo}");
        assert!((hi - 3.0).abs() < 0.05, "upper edge {hi}");
        assert!(report.asymptotic_cover_checked);
    }

    #[test]
    fn moving_frame_zero_velocity_matches_standing_scan() {
        let model = example_n4_model();
        let a = scan_gap(&model, (-6.0, 6.0), 8.0, 0.1, 1e-2).unwrap();
        let b = moving_frame_scan(&model, &[0.0, 0.0], (-6.0, 6.0), 8.0, 0.1, 1e-2).unwrap();
        assert_eq!(a.gaps.len(), b.gaps.len());
        for (x, y) in a.gaps.iter().zip(&b.gaps) {
            assert_abs_diff_eq!(x.0, y.0, epsilon = 1e-12);
            assert_abs_diff_eq!(x.1, y.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn empty_window_rejected() {
        let model = example_n4_model();
        assert!(scan_gap(&model, (1.0, 1.0), 5.0, 0.1, 1e-2).is_err());
    }

    #[test]
    fn edge_data_of_example_model() {
        let model = example_n4_model();
        let edge = band_edge(&model, 2, &[0.0, 0.0], 1e-3).unwrap();
        assert_abs_diff_eq!(edge.omega_star, -1.0, epsilon = 1e-10);
        assert!(edge.is_extremum(), "gradient {:?}", edge.gradient);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { -0.25 } else { 0.0 };
                assert_abs_diff_eq!(edge.hessian[(i, j)], expect, epsilon = 1e-2);
            }
        }
        assert_eq!(edge.definiteness, Definiteness::NegativeDefinite);
        assert!(edge.simplicity_margin > 1.0);
    }

    #[test]
    fn edge_hessian_step_refinement_stable() {
        let model = example_n4_model();
        let e1 = band_edge(&model, 2, &[0.0, 0.0], 1e-3).unwrap();
        let e2 = band_edge(&model, 2, &[0.0, 0.0], 5e-4).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((e1.hessian[(i, j)] - e2.hessian[(i, j)]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn edge_zero_kappa_degenerate_verdict() {
        // hyperplane dispersion: Hessian 0 everywhere it is simple
        let model = two_mode_model(
            vec![0.3, 1.0],
            vec![1.0, 0.2],
            DMatrix::from_element(2, 2, Complex64::default()),
        );
        let edge = band_edge(&model, 1, &[0.4, 0.7], 1e-3).unwrap();
        assert_eq!(edge.definiteness, Definiteness::Degenerate);
    }

    #[test]
    fn edge_errors_on_degenerate_eigenvalue() {
        let model = example_n4_model();
        // band 3 and 4 coincide at K = 0
        assert!(band_edge(&model, 3, &[0.0, 0.0], 1e-3).is_err());
    }

    #[test]
    fn odd_model_has_roots_for_every_omega() {
        // deterministic pseudo-random 3-mode model
        let kap = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.3),
                Complex64::new(0.5, 0.2),
                Complex64::new(-0.1, 0.7),
                Complex64::new(0.5, -0.2),
                c(-0.4),
                Complex64::new(0.9, -0.3),
                Complex64::new(-0.1, -0.7),
                Complex64::new(0.9, 0.3),
                c(0.1),
            ],
        );
        let carriers = vec![
            RationalVec::parse("1/5 0").unwrap(),
            RationalVec::parse("-1/5 1/5").unwrap(),
            RationalVec::parse("0 -1/5").unwrap(),
        ];
        let model = CmeModel::new(
            vec![vec![1.0, 0.3], vec![-0.6, 0.8], vec![0.2, -1.1]],
            kap,
            GammaTensor::empty(3),
            carriers,
        )
        .unwrap();
        for (omega, th) in [(-7.3, 0.3f64), (0.0, 1.1), (2.2, 2.0), (9.9, 4.0)] {
            let dir = [th.cos(), th.sin()];
            let rho = odd_n_real_root(&model, omega, &dir).unwrap();
            let k: Vec<f64> = dir.iter().map(|x| x * rho).collect();
            let vals = dispersion_eigenvalues(&model, &k);
            let nearest = vals
                .iter()
                .map(|v| (v - omega).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-6, "Ω = {omega}: nearest eigenvalue {nearest:.2e}");
        }
    }

    #[test]
    fn spectrum_invariant_under_diagonal_gauge() {
        let model = example_n4_model();
        // conjugate κ by a diagonal unitary; eigenvalues must not move
        let phases = [0.3, -1.2, 2.5, 0.9];
        let mut kap = model.kappa.clone();
        for r in 0..4 {
            for cidx in 0..4 {
                let ph = Complex64::new(0.0, phases[cidx] - phases[r]).exp();
                kap[(r, cidx)] *= ph;
            }
        }
        let rotated = CmeModel::new(model.vg.clone(), kap, GammaTensor::empty(4), model.carriers.clone()).unwrap();
        for k in [[0.0, 0.0], [1.3, -0.4], [-2.0, 5.0]] {
            let a = dispersion_eigenvalues(&model, &k);
            let b = dispersion_eigenvalues(&rotated, &k);
            for (x, y) in a.iter().zip(&b) {
                assert_abs_diff_eq!(*x, *y, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn far_field_angles_match_dispersion() {
        let (a1, a2, a3) = (c(3.0), c(1.0), c(1.0));
        for omega in [3.5, -4.0, 6.0] {
            for r in [100.0, 1000.0] {
                let sins = n4_far_field_sin2theta(a1, a2, a3, omega, r);
                assert!(!sins.is_empty(), "Ω = {omega}, r = {r}");
                let s2 = sins[0];
                let theta = 0.5 * s2.asin();
                let roots =
                    n4_quartic_roots(a1, a2, a3, r * theta.cos(), r * theta.sin());
                let nearest = roots
                    .iter()
                    .map(|v| (v - omega).abs())
                    .fold(f64::INFINITY, f64::min);
                assert!(nearest < 1e-3, "Ω = {omega}, r = {r}: nearest {nearest:.2e}");
            }
        }
    }
}
