//! Small numeric helpers shared across modules.

use num_complex::Complex64;

/// Pairwise summation of complex values. Used for all inner products so that
/// reductions are deterministic and accurate independent of thread count.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    if values.len() <= 64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise summation of real values.
pub fn pairwise_sum_f64(values: &[f64]) -> f64 {
    if values.len() <= 64 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_f64(&values[..mid]) + pairwise_sum_f64(&values[mid..])
}

/// `Σ a_i conj(b_i)` with pairwise reduction, without materializing products.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len());
    if a.len() <= 64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            acc += x * y.conj();
        }
        return acc;
    }
    let mid = a.len() / 2;
    dot(&a[..mid], &b[..mid]) + dot(&a[mid..], &b[mid..])
}

/// Squared l2 norm with pairwise reduction.
pub fn norm_sq(a: &[Complex64]) -> f64 {
    if a.len() <= 64 {
        return a.iter().map(|x| x.norm_sqr()).sum();
    }
    let mid = a.len() / 2;
    norm_sq(&a[..mid]) + norm_sq(&a[mid..])
}

/// Maximum modulus over a slice.
pub fn sup_norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Iterate over all multi-indices in `[0, shape_0) × ... × [0, shape_{d-1})`
/// in row-major order (last axis fastest), calling `f(flat_index, index)`.
pub fn for_each_multi_index(shape: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let total: usize = shape.iter().product();
    let mut idx = vec![0usize; shape.len()];
    for flat in 0..total {
        f(flat, &idx);
        for ax in (0..shape.len()).rev() {
            idx[ax] += 1;
            if idx[ax] < shape[ax] {
                break;
            }
            idx[ax] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<Complex64> = (0..1000)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64).cos()))
            .collect();
        let naive: Complex64 = xs.iter().sum();
        let pw = pairwise_sum(&xs);
        assert!((naive - pw).norm() < 1e-12);
    }

    #[test]
    fn multi_index_row_major() {
        let mut seen = Vec::new();
        for_each_multi_index(&[2, 3], |flat, idx| seen.push((flat, idx.to_vec())));
        assert_eq!(seen[0], (0, vec![0, 0]));
        assert_eq!(seen[1], (1, vec![0, 1]));
        assert_eq!(seen[3], (3, vec![1, 0]));
        assert_eq!(seen.len(), 6);
    }
}
