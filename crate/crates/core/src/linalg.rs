//! Hermitian eigensolvers and a real-quartic root finder.
//!
//! Large Bloch operators go through nalgebra's dense Hermitian solver. The
//! dispersion scans evaluate millions of tiny (N ≤ 8) Hermitian problems, so
//! those use an allocation-free cyclic Jacobi iteration on a caller-provided
//! buffer instead.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Max |H - H†| entry. Zero for an exactly Hermitian matrix.
pub fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut defect: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            defect = defect.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    defect
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending,
/// eigenvectors as matching columns.
pub fn herm_eigen(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let defect = hermiticity_defect(m);
    let scale = m.iter().map(|v| v.norm()).fold(1.0, f64::max);
    if defect > 1e-12 * scale {
        return Err(Error::numerical(format!(
            "matrix is not Hermitian (defect {defect:.3e})"
        )));
    }
    let eig = m
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::numerical("Hermitian eigensolver did not converge"))?;
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

/// Ascending eigenvalues only.
pub fn herm_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let mut vals: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Scratch space for the small Jacobi solver; reuse across calls.
#[derive(Debug, Clone, Default)]
pub struct JacobiWorkspace {
    a: Vec<Complex64>,
    v: Vec<Complex64>,
}

/// Cyclic Jacobi eigenvalues of a small Hermitian matrix given in row-major
/// order. Writes ascending eigenvalues into `out`.
pub fn small_herm_eigenvalues(
    matrix: &[Complex64],
    n: usize,
    ws: &mut JacobiWorkspace,
    out: &mut [f64],
) {
    jacobi(matrix, n, ws, false);
    for i in 0..n {
        out[i] = ws.a[i * n + i].re;
    }
    out[..n].sort_by(f64::total_cmp);
}

/// Cyclic Jacobi eigendecomposition of a small Hermitian matrix. Returns
/// ascending eigenvalues; the corresponding unit eigenvectors are written as
/// consecutive length-`n` runs into `vectors`.
pub fn small_herm_eigen(
    matrix: &[Complex64],
    n: usize,
    ws: &mut JacobiWorkspace,
    values: &mut [f64],
    vectors: &mut [Complex64],
) {
    jacobi(matrix, n, ws, true);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| ws.a[p * n + p].re.total_cmp(&ws.a[q * n + q].re));
    for (slot, &col) in order.iter().enumerate() {
        values[slot] = ws.a[col * n + col].re;
        for row in 0..n {
            // ws.v holds the accumulated unitary, column `col` is the vector.
            vectors[slot * n + row] = ws.v[row * n + col];
        }
    }
}

fn jacobi(matrix: &[Complex64], n: usize, ws: &mut JacobiWorkspace, want_vectors: bool) {
    assert_eq!(matrix.len(), n * n);
    ws.a.clear();
    ws.a.extend_from_slice(matrix);
    if want_vectors {
        ws.v.clear();
        ws.v.resize(n * n, Complex64::default());
        for i in 0..n {
            ws.v[i * n + i] = Complex64::new(1.0, 0.0);
        }
    }
    let scale = matrix.iter().map(|x| x.norm()).fold(f64::MIN_POSITIVE, f64::max);
    let tol = 1e-15 * scale;
    let a = &mut ws.a;
    let v = &mut ws.v;
    for _sweep in 0..60 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[p * n + q].norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let abs_apq = apq.norm();
                if abs_apq <= tol {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                // Phase removal: with u = apq/|apq| the block becomes real
                // symmetric; then a standard Jacobi rotation angle.
                let u = apq / abs_apq;
                let tau = (aqq - app) / (2.0 * abs_apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = diag(1, conj(u)) · [[c, s], [-s, c]] on the (p,q) plane;
                // G† A G zeroes the (p,q) entry.
                let g_pp = Complex64::new(c, 0.0);
                let g_pq = Complex64::new(s, 0.0);
                let g_qp = -s * u.conj();
                let g_qq = c * u.conj();
                // A <- G† A G, touching rows/cols p and q.
                for r in 0..n {
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    a[r * n + p] = arp * g_pp + arq * g_qp;
                    a[r * n + q] = arp * g_pq + arq * g_qq;
                }
                for cidx in 0..n {
                    let apc = a[p * n + cidx];
                    let aqc = a[q * n + cidx];
                    a[p * n + cidx] = g_pp.conj() * apc + g_qp.conj() * aqc;
                    a[q * n + cidx] = g_pq.conj() * apc + g_qq.conj() * aqc;
                }
                // Clean the targeted entries to keep hermiticity exact.
                let mean = 0.5 * (a[p * n + q] + a[q * n + p].conj());
                a[p * n + q] = mean;
                a[q * n + p] = mean.conj();
                if want_vectors {
                    for r in 0..n {
                        let vrp = v[r * n + p];
                        let vrq = v[r * n + q];
                        v[r * n + p] = vrp * g_pp + vrq * g_qp;
                        v[r * n + q] = vrp * g_pq + vrq * g_qq;
                    }
                }
            }
        }
    }
}

/// Deterministic eigenvector gauge: the entry of largest modulus is made real
/// and positive. Ties within `tie_tol` resolve to the lowest index.
pub fn gauge_fix(v: &mut [Complex64], tie_tol: f64) {
    let mut best = 0usize;
    let mut best_norm = v[0].norm();
    for (i, x) in v.iter().enumerate().skip(1) {
        let xn = x.norm();
        if xn > best_norm + tie_tol {
            best = i;
            best_norm = xn;
        }
    }
    if best_norm == 0.0 {
        return;
    }
    let phase = v[best] / best_norm;
    let rot = phase.conj();
    for x in v.iter_mut() {
        *x *= rot;
    }
    // remove residual imaginary dust on the anchor entry
    v[best] = Complex64::new(v[best].re.abs(), 0.0);
}

/// Real roots of `x⁴ + c3 x³ + c2 x² + c1 x + c0`, ascending. Roots come from
/// the companion matrix and get one Newton polish each.
pub fn quartic_real_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let companion = DMatrix::<f64>::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, 0.0, -c0, //
            1.0, 0.0, 0.0, -c1, //
            0.0, 1.0, 0.0, -c2, //
            0.0, 0.0, 1.0, -c3,
        ],
    );
    let eigs: DVector<Complex64> = companion.complex_eigenvalues();
    let scale = [c3.abs(), c2.abs(), c1.abs(), c0.abs(), 1.0]
        .into_iter()
        .fold(0.0, f64::max);
    let poly = |x: Complex64| (((x + c3) * x + c2) * x + c1) * x + c0;
    let dpoly = |x: Complex64| ((4.0 * x + 3.0 * c3) * x + 2.0 * c2) * x + c1;
    let mut roots = Vec::new();
    for &e in eigs.iter() {
        let mut z = e;
        for _ in 0..3 {
            let d = dpoly(z);
            if d.norm() < 1e-300 {
                break;
            }
            z -= poly(z) / d;
        }
        if z.im.abs() <= 1e-8 * (1.0 + z.re.abs().max(scale)) {
            roots.push(z.re);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> DMatrix<Complex64> {
        // small deterministic LCG, avoids a rand dependency in unit tests
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(17);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(next(), 0.0);
            for j in (i + 1)..n {
                let v = Complex64::new(next(), next());
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        m
    }

    #[test]
    fn jacobi_matches_nalgebra() {
        for n in 2..=6 {
            for seed in 0..8u64 {
                let m = random_hermitian(n, seed + 100 * n as u64);
                let reference = herm_eigenvalues(&m).unwrap();
                let flat: Vec<Complex64> = (0..n * n)
                    .map(|i| m[(i / n, i % n)])
                    .collect();
                let mut ws = JacobiWorkspace::default();
                let mut vals = vec![0.0; n];
                small_herm_eigenvalues(&flat, n, &mut ws, &mut vals);
                for (a, b) in reference.iter().zip(&vals) {
                    assert!((a - b).abs() < 1e-11, "n={n} seed={seed}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn jacobi_vectors_are_eigenvectors() {
        let n = 4;
        let m = random_hermitian(n, 7);
        let flat: Vec<Complex64> = (0..n * n).map(|i| m[(i / n, i % n)]).collect();
        let mut ws = JacobiWorkspace::default();
        let mut vals = vec![0.0; n];
        let mut vecs = vec![Complex64::default(); n * n];
        small_herm_eigen(&flat, n, &mut ws, &mut vals, &mut vecs);
        for j in 0..n {
            let v = &vecs[j * n..(j + 1) * n];
            // residual ||Av - λv||
            let mut res: f64 = 0.0;
            for r in 0..n {
                let mut acc = Complex64::default();
                for c in 0..n {
                    acc += m[(r, c)] * v[c];
                }
                res = res.max((acc - vals[j] * v[r]).norm());
            }
            assert!(res < 1e-11, "residual {res}");
            let nrm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            assert!((nrm - 1.0).abs() < 1e-12);
        }
        // ascending order
        for j in 1..n {
            assert!(vals[j] >= vals[j - 1]);
        }
    }

    #[test]
    fn gauge_anchor_real_positive_with_tie_break() {
        let mut v = vec![
            Complex64::new(0.0, -0.5),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.5),
        ];
        gauge_fix(&mut v, 1e-12);
        // all moduli tie at 0.5, anchor is index 0
        assert!(v[0].re > 0.0 && v[0].im.abs() < 1e-15);
    }

    #[test]
    fn quartic_roots_known_factorization() {
        // (x-1)(x+2)(x-3)(x+4) = x⁴ + 2x³ - 13x² - 14x + 24
        let roots = quartic_real_roots(2.0, -13.0, -14.0, 24.0);
        let expect = [-4.0, -2.0, 1.0, 3.0];
        assert_eq!(roots.len(), 4);
        for (r, e) in roots.iter().zip(expect) {
            assert!((r - e).abs() < 1e-12);
        }
    }

    #[test]
    fn quartic_complex_pair_excluded() {
        // (x²+1)(x-2)(x+5) = x⁴ + 3x³ - 9x² + 3x - 10
        let roots = quartic_real_roots(3.0, -9.0, 3.0, -10.0);
        assert_eq!(roots.len(), 2);
        assert!((roots[0] + 5.0).abs() < 1e-12);
        assert!((roots[1] - 2.0).abs() < 1e-12);
    }
}
