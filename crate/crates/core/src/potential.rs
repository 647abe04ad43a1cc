//! Periodic potentials given by finitely many Fourier coefficients, and the
//! small perturbation potential that couples carrier modes.

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Real `2πZ^d`-periodic function with finitely supported Fourier data:
/// `V(x) = Σ_η v_η e^{i η·x}` with `v_{-η} = conj(v_η)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicPotential {
    dim: usize,
    coeffs: BTreeMap<Vec<i64>, Complex64>,
}

impl PeriodicPotential {
    /// Build from raw coefficients; enforces the realness pairing.
    pub fn new(dim: usize, coeffs: BTreeMap<Vec<i64>, Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("potential dimension must be positive"));
        }
        for (eta, &v) in &coeffs {
            if eta.len() != dim {
                return Err(Error::config(format!(
                    "coefficient index {eta:?} does not match dimension {dim}"
                )));
            }
            let minus: Vec<i64> = eta.iter().map(|e| -e).collect();
            let w = coeffs.get(&minus).copied().unwrap_or_default();
            if (w - v.conj()).norm() > 1e-12 * (1.0 + v.norm()) {
                return Err(Error::config(format!(
                    "realness violated: coeff at -{eta:?} must be the conjugate of coeff at {eta:?}"
                )));
            }
        }
        let coeffs = coeffs
            .into_iter()
            .filter(|(_, v)| v.norm() > 0.0)
            .collect();
        Ok(PeriodicPotential { dim, coeffs })
    }

    pub fn zero(dim: usize) -> Self {
        PeriodicPotential { dim, coeffs: BTreeMap::new() }
    }

    /// Constant potential `value`.
    pub fn constant(dim: usize, value: f64) -> Self {
        let mut coeffs = BTreeMap::new();
        if value != 0.0 {
            coeffs.insert(vec![0; dim], Complex64::new(value, 0.0));
        }
        PeriodicPotential { dim, coeffs }
    }

    /// Separable product `amplitude · cos(x_1)···cos(x_d)`:
    /// coefficients `amplitude/2^d` at every sign combination of the ones
    /// vector.
    pub fn cosine_product(dim: usize, amplitude: f64) -> Self {
        let mut coeffs = BTreeMap::new();
        let corners = 1usize << dim;
        let value = Complex64::new(amplitude / (corners as f64), 0.0);
        for mask in 0..corners {
            let eta: Vec<i64> = (0..dim)
                .map(|ax| if mask >> ax & 1 == 0 { 1 } else { -1 })
                .collect();
            coeffs.insert(eta, value);
        }
        PeriodicPotential { dim, coeffs }
    }

    /// `amplitude · cos(η·x)` for an integer direction η.
    pub fn cosine(dim: usize, eta: Vec<i64>, amplitude: f64) -> Result<Self> {
        if eta.len() != dim {
            return Err(Error::config("cosine direction does not match dimension"));
        }
        let mut coeffs = BTreeMap::new();
        let half = Complex64::new(amplitude / 2.0, 0.0);
        let minus: Vec<i64> = eta.iter().map(|e| -e).collect();
        coeffs.insert(eta, half);
        coeffs.insert(minus, half);
        PeriodicPotential::new(dim, coeffs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<i64>, Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, eta: &[i64]) -> Complex64 {
        self.coeffs.get(eta).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest `|η|_∞` with a nonzero coefficient.
    pub fn support_radius(&self) -> i64 {
        self.coeffs
            .keys()
            .map(|eta| eta.iter().map(|e| e.abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Pointwise value `Σ v_η e^{i η·x}` (real by construction; returned as
    /// the real part).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = Complex64::default();
        for (eta, v) in &self.coeffs {
            let phase: f64 = eta.iter().zip(x).map(|(&e, &xi)| e as f64 * xi).sum();
            acc += v * Complex64::new(phase.cos(), phase.sin());
        }
        acc.re
    }

    /// Sample onto a torus grid.
    pub fn sample(&self, grid: &Grid) -> ScalarField {
        ScalarField::from_fn(grid.clone(), |x| Complex64::new(self.eval(x), 0.0))
    }
}

/// One term of the perturbation `W`: amplitude `a` at wavevector `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct WTerm {
    pub l: Vec<f64>,
    pub a: Complex64,
}

/// The mode-coupling perturbation `W(x) = Σ_m a_m e^{i l^(m)·x}` with the
/// pairing `a_{-m} = conj(a_m)`, `l^(-m) = -l^(m)` that keeps it real. The
/// `l^(m)` need not be integer vectors (quasiperiodic total potential).
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationPotential {
    dim: usize,
    terms: Vec<WTerm>,
}

impl PerturbationPotential {
    /// Build from the full signed list of terms; validates the pairing and
    /// pairwise-distinct wavevectors.
    pub fn new(dim: usize, terms: Vec<WTerm>) -> Result<Self> {
        for t in &terms {
            if t.l.len() != dim {
                return Err(Error::config("W term wavevector has wrong dimension"));
            }
        }
        for (i, t) in terms.iter().enumerate() {
            for u in terms.iter().skip(i + 1) {
                let dist = t
                    .l
                    .iter()
                    .zip(&u.l)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if dist < 1e-12 {
                    return Err(Error::config(
                        "W wavevectors must be pairwise distinct",
                    ));
                }
            }
            // the partner term -l must carry the conjugate amplitude
            let minus: Vec<f64> = t.l.iter().map(|x| -x).collect();
            let partner = terms.iter().find(|u| {
                u.l.iter()
                    .zip(&minus)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
                    < 1e-12
            });
            match partner {
                Some(u) if (u.a - t.a.conj()).norm() <= 1e-12 * (1.0 + t.a.norm()) => {}
                _ => {
                    return Err(Error::config(format!(
                        "W violates the realness pairing at l = {:?}: need a_(-m) = conj(a_m)",
                        t.l
                    )))
                }
            }
        }
        Ok(PerturbationPotential { dim, terms })
    }

    pub fn zero(dim: usize) -> Self {
        PerturbationPotential { dim, terms: Vec::new() }
    }

    /// `amplitude · cos(l·x)`: the pair `(l, a/2)`, `(-l, a/2)`.
    pub fn cosine(dim: usize, l: Vec<f64>, amplitude: f64) -> Result<Self> {
        let half = Complex64::new(amplitude / 2.0, 0.0);
        let minus: Vec<f64> = l.iter().map(|x| -x).collect();
        PerturbationPotential::new(
            dim,
            vec![WTerm { l, a: half }, WTerm { l: minus, a: half }],
        )
    }

    /// Add a constant (the `m = 0` term).
    pub fn with_constant(mut self, value: f64) -> Result<Self> {
        self.terms.push(WTerm {
            l: vec![0.0; self.dim],
            a: Complex64::new(value, 0.0),
        });
        PerturbationPotential::new(self.dim, self.terms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[WTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = Complex64::default();
        for t in &self.terms {
            let phase: f64 = t.l.iter().zip(x).map(|(&l, &xi)| l * xi).sum();
            acc += t.a * Complex64::new(phase.cos(), phase.sin());
        }
        acc.re
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_product_coefficients() {
        let v = PeriodicPotential::cosine_product(2, 1.0);
        assert_eq!(v.coeffs().len(), 4);
        assert!((v.coeff(&[1, 1]).re - 0.25).abs() < 1e-15);
        assert!((v.coeff(&[1, -1]).re - 0.25).abs() < 1e-15);
        assert_eq!(v.support_radius(), 1);
        // value at x = 0 is cos(0)cos(0) = 1
        assert!((v.eval(&[0.0, 0.0]) - 1.0).abs() < 1e-14);
        let x = [0.7, -1.3];
        assert!((v.eval(&x) - x[0].cos() * x[1].cos()).abs() < 1e-14);
    }

    #[test]
    fn realness_enforced() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(vec![1], Complex64::new(0.5, 0.25));
        // missing conjugate partner
        assert!(PeriodicPotential::new(1, coeffs.clone()).is_err());
        coeffs.insert(vec![-1], Complex64::new(0.5, -0.25));
        assert!(PeriodicPotential::new(1, coeffs).is_ok());
    }

    #[test]
    fn w_pairing_enforced() {
        // a_{-m} != conj(a_m) must be rejected
        let bad = PerturbationPotential::new(
            1,
            vec![
                WTerm { l: vec![0.4], a: Complex64::new(1.0, 0.5) },
                WTerm { l: vec![-0.4], a: Complex64::new(1.0, 0.5) },
            ],
        );
        assert!(bad.is_err());
        let good = PerturbationPotential::new(
            1,
            vec![
                WTerm { l: vec![0.4], a: Complex64::new(1.0, 0.5) },
                WTerm { l: vec![-0.4], a: Complex64::new(1.0, -0.5) },
            ],
        );
        assert!(good.is_ok());
    }

    #[test]
    fn w_cosine_plus_constant_matches_closed_form() {
        let w = PerturbationPotential::cosine(2, vec![0.4, 0.0], 2.0)
            .unwrap()
            .with_constant(1.0)
            .unwrap();
        let x = [1.1, 0.3];
        assert!((w.eval(&x) - (2.0 * (0.4 * x[0]).cos() + 1.0)).abs() < 1e-14);
    }
}
