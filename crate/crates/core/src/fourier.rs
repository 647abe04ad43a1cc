//! n-dimensional FFTs on flat row-major buffers, plus spectral resampling.
//!
//! Conventions: `fft_forward` computes the plain DFT sum `Σ f_j e^{-i2π m·j/n}`
//! (no scaling); `fft_inverse` includes the `1/N` factor so the pair is an
//! identity. Spectral resampling preserves the trigonometric interpolant, i.e.
//! field values on the grid, not raw coefficient values.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type PlanKey = (usize, bool);

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((len, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// Signed frequency index of DFT bin `m` on a length-`n` axis.
/// Bins `0..ceil(n/2)` are non-negative, the rest wrap to negative.
pub fn signed_index(m: usize, n: usize) -> i64 {
    if m < n.div_ceil(2) {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// DFT bin holding signed frequency `s` on a length-`n` axis, if representable.
pub fn bin_of_signed(s: i64, n: usize) -> Option<usize> {
    let half = n as i64 / 2;
    let lo = -half;
    let hi = (n as i64 - 1) / 2;
    if s < lo || s > hi {
        None
    } else if s >= 0 {
        Some(s as usize)
    } else {
        Some((s + n as i64) as usize)
    }
}

fn transform_axis(data: &mut [Complex64], shape: &[usize], axis: usize, inverse: bool) {
    let n = shape[axis];
    if n == 1 {
        return;
    }
    let fft = plan(n, inverse);
    let stride: usize = shape[axis + 1..].iter().product();
    let block = n * stride;
    if stride == 1 {
        data.par_chunks_exact_mut(n).for_each_init(
            || vec![Complex64::default(); fft.get_inplace_scratch_len()],
            |scratch, lane| fft.process_with_scratch(lane, scratch),
        );
    } else {
        data.par_chunks_exact_mut(block).for_each_init(
            || {
                (
                    vec![Complex64::default(); n],
                    vec![Complex64::default(); fft.get_inplace_scratch_len()],
                )
            },
            |(lane, scratch), chunk| {
                for s in 0..stride {
                    for j in 0..n {
                        lane[j] = chunk[j * stride + s];
                    }
                    fft.process_with_scratch(lane, scratch);
                    for j in 0..n {
                        chunk[j * stride + s] = lane[j];
                    }
                }
            },
        );
    }
}

/// In-place forward DFT along every axis.
pub fn fft_forward(data: &mut [Complex64], shape: &[usize]) {
    debug_assert_eq!(data.len(), shape.iter().product::<usize>());
    for axis in 0..shape.len() {
        transform_axis(data, shape, axis, false);
    }
}

/// In-place inverse DFT along every axis, including the `1/N` factor.
pub fn fft_inverse(data: &mut [Complex64], shape: &[usize]) {
    debug_assert_eq!(data.len(), shape.iter().product::<usize>());
    for axis in 0..shape.len() {
        transform_axis(data, shape, axis, true);
    }
    let scale = 1.0 / data.len() as f64;
    data.par_iter_mut().for_each(|v| *v *= scale);
}

/// Resample an unnormalized spectrum from `src_shape` to `dst_shape` so that
/// the trigonometric interpolant (grid values after `fft_inverse`) is
/// preserved. Growing an axis zero-pads; an even source axis splits its
/// Nyquist bin across `±n/2`. Shrinking truncates, folding `±n/2` onto the
/// destination Nyquist bin.
pub fn resize_spectrum(
    src: &[Complex64],
    src_shape: &[usize],
    dst_shape: &[usize],
) -> Vec<Complex64> {
    assert_eq!(src_shape.len(), dst_shape.len());
    let dst_len: usize = dst_shape.iter().product();
    let mut dst = vec![Complex64::default(); dst_len];
    let d = src_shape.len();

    // Per-axis map: source bin -> primary target and (rarely) a secondary
    // target when an even-source Nyquist coefficient splits across ±n/2.
    type Target = Option<(usize, f64)>;
    let mut primary: Vec<Vec<Target>> = Vec::with_capacity(d);
    let mut secondary: Vec<Vec<Target>> = Vec::with_capacity(d);
    for ax in 0..d {
        let n1 = src_shape[ax];
        let n2 = dst_shape[ax];
        let mut prim = Vec::with_capacity(n1);
        let mut sec = Vec::with_capacity(n1);
        for m in 0..n1 {
            let s = signed_index(m, n1);
            if n2 > n1 && n1 % 2 == 0 && s == -(n1 as i64) / 2 {
                prim.push(bin_of_signed(s, n2).map(|b| (b, 0.5)));
                sec.push(bin_of_signed(-s, n2).map(|b| (b, 0.5)));
            } else {
                prim.push(bin_of_signed(s, n2).map(|b| (b, 1.0)));
                sec.push(None);
            }
        }
        primary.push(prim);
        secondary.push(sec);
    }

    let total_scale = dst_len as f64 / src.len() as f64;
    let mut idx = [0usize; 8];
    debug_assert!(d <= 8);
    for (flat, &v) in src.iter().enumerate() {
        let _ = flat;
        // fast path: single target per axis
        let mut dead = false;
        let mut split_mask = 0usize;
        for ax in 0..d {
            match primary[ax][idx[ax]] {
                None => {
                    dead = true;
                    break;
                }
                Some(_) => {
                    if secondary[ax][idx[ax]].is_some() {
                        split_mask |= 1 << ax;
                    }
                }
            }
        }
        if !dead {
            if split_mask == 0 {
                let mut bin = 0usize;
                for ax in 0..d {
                    bin = bin * dst_shape[ax] + primary[ax][idx[ax]].unwrap().0;
                }
                dst[bin] += v * total_scale;
            } else {
                // enumerate every primary/secondary combination on split axes
                let combos = 1usize << d;
                for combo in 0..combos {
                    if combo & !split_mask != 0 {
                        continue;
                    }
                    let mut bin = 0usize;
                    let mut w = total_scale;
                    for ax in 0..d {
                        let t = if combo >> ax & 1 == 0 {
                            primary[ax][idx[ax]].unwrap()
                        } else {
                            secondary[ax][idx[ax]].unwrap()
                        };
                        bin = bin * dst_shape[ax] + t.0;
                        w *= t.1;
                    }
                    dst[bin] += v * w;
                }
            }
        }
        for ax in (0..d).rev() {
            idx[ax] += 1;
            if idx[ax] < src_shape[ax] {
                break;
            }
            idx[ax] = 0;
        }
    }
    dst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_1d(n: usize, f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        (0..n)
            .map(|j| f(2.0 * std::f64::consts::PI * j as f64 / n as f64))
            .collect()
    }

    #[test]
    fn forward_inverse_identity() {
        let shape = [6, 5];
        let data: Vec<Complex64> = (0..30)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut work = data.clone();
        fft_forward(&mut work, &shape);
        fft_inverse(&mut work, &shape);
        for (a, b) in data.iter().zip(&work) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_matches_plain_dft_sum() {
        let n = 8;
        let data = field_1d(n, |x| Complex64::new(x.cos(), 0.5 * (2.0 * x).sin()));
        let mut work = data.clone();
        fft_forward(&mut work, &[n]);
        for m in 0..n {
            let mut acc = Complex64::default();
            for (j, v) in data.iter().enumerate() {
                let ph = -2.0 * std::f64::consts::PI * m as f64 * j as f64 / n as f64;
                acc += v * Complex64::new(ph.cos(), ph.sin());
            }
            assert!((acc - work[m]).norm() < 1e-10);
        }
    }

    #[test]
    fn upsample_preserves_band_limited_values() {
        // e^{2ix} on 8 points, upsampled to 12, must equal e^{2ix} there.
        let src = field_1d(8, |x| Complex64::new((2.0 * x).cos(), (2.0 * x).sin()));
        let mut spec = src.clone();
        fft_forward(&mut spec, &[8]);
        let mut up = resize_spectrum(&spec, &[8], &[12]);
        fft_inverse(&mut up, &[12]);
        let expect = field_1d(12, |x| Complex64::new((2.0 * x).cos(), (2.0 * x).sin()));
        for (a, b) in up.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn signed_index_wraps() {
        assert_eq!(signed_index(0, 6), 0);
        assert_eq!(signed_index(2, 6), 2);
        assert_eq!(signed_index(3, 6), -3);
        assert_eq!(signed_index(5, 6), -1);
        assert_eq!(bin_of_signed(-1, 6), Some(5));
        assert_eq!(bin_of_signed(3, 6), None);
        assert_eq!(bin_of_signed(-3, 6), Some(3));
    }
}
