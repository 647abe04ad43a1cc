//! Text interchange format for coupled-mode models. Hand-authorable, so that
//! dispersion and soliton runs can start from a written-down κ without a
//! Bloch computation.
//!
//! ```text
//! gapsol cme-model v1
//! n = 4
//! dim = 2
//! vg 1 = 0 1
//! k 1 = -1/5 -2/5
//! kappa 1 2 = 3 0          # row col = re im, all N² entries
//! gamma 1 1 1 1 = -1.2 0   # j alpha beta gamma = re im, resonant only
//! ```

use crate::cme::{self, CmeModel, GammaTensor};
use crate::error::{Error, Result};
use crate::rational::RationalVec;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt::Write as _;

const HEADER: &str = "gapsol cme-model v1";

/// Serialize a model to the text format.
pub fn write_model(model: &CmeModel) -> String {
    let n = model.n();
    let d = model.dim();
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "n = {n}");
    let _ = writeln!(out, "dim = {d}");
    for (j, vg) in model.vg.iter().enumerate() {
        let comps: Vec<String> = vg.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "vg {} = {}", j + 1, comps.join(" "));
    }
    for (j, k) in model.carriers.iter().enumerate() {
        let _ = writeln!(out, "k {} = {}", j + 1, k.format());
    }
    for r in 0..n {
        for c in 0..n {
            let v = model.kappa[(r, c)];
            let _ = writeln!(out, "kappa {} {} = {:?} {:?}", r + 1, c + 1, v.re, v.im);
        }
    }
    for (&(j, a, b, c), &g) in model.gamma.iter() {
        let _ = writeln!(
            out,
            "gamma {} {} {} {} = {:?} {:?}",
            j + 1,
            a + 1,
            b + 1,
            c + 1,
            g.re,
            g.im
        );
    }
    out
}

fn parse_complex(value: &str, what: &str) -> Result<Complex64> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(Error::config(format!("{what}: expected `re im`, got `{value}`")));
    }
    Ok(Complex64::new(
        super::parse_f64(parts[0], what)?,
        super::parse_f64(parts[1], what)?,
    ))
}

fn parse_index(tok: &str, n: usize, what: &str) -> Result<usize> {
    let i = super::parse_usize(tok, what)?;
    if i == 0 || i > n {
        return Err(Error::config(format!("{what}: index {i} out of 1..={n}")));
    }
    Ok(i - 1)
}

/// Parse the text format back into a model. Validates κ hermiticity and that
/// every γ quadruple is resonant for the declared carriers.
pub fn parse_model(text: &str) -> Result<CmeModel> {
    let mut lines = text.lines();
    let first = lines.next().map(str::trim).unwrap_or_default();
    if first != HEADER {
        return Err(Error::config(format!(
            "not a cme-model file (expected `{HEADER}`)"
        )));
    }
    let body: String = lines.collect::<Vec<_>>().join("\n");
    let entries = super::parse_sections(&body)?;
    let mut n = None;
    let mut dim = None;
    let mut vg: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut ks: BTreeMap<usize, RationalVec> = BTreeMap::new();
    let mut kappa_entries: Vec<(usize, usize, Complex64)> = Vec::new();
    let mut gamma_entries: Vec<((usize, usize, usize, usize), Complex64)> = Vec::new();

    for (section, key, value) in &entries {
        if !section.is_empty() {
            return Err(Error::config(format!("unexpected section `[{section}]`")));
        }
        let toks: Vec<&str> = key.split_whitespace().collect();
        match toks.as_slice() {
            ["n"] => n = Some(super::parse_usize(value, "n")?),
            ["dim"] => dim = Some(super::parse_usize(value, "dim")?),
            ["vg", j] => {
                let nn = n.ok_or_else(|| Error::config("n must come before vg"))?;
                let j = parse_index(j, nn, "vg")?;
                vg.insert(j, super::parse_f64_list(value, "vg")?);
            }
            ["k", j] => {
                let nn = n.ok_or_else(|| Error::config("n must come before k"))?;
                let j = parse_index(j, nn, "k")?;
                ks.insert(j, RationalVec::parse(value)?);
            }
            ["kappa", r, c] => {
                let nn = n.ok_or_else(|| Error::config("n must come before kappa"))?;
                kappa_entries.push((
                    parse_index(r, nn, "kappa")?,
                    parse_index(c, nn, "kappa")?,
                    parse_complex(value, "kappa")?,
                ));
            }
            ["gamma", j, a, b, c] => {
                let nn = n.ok_or_else(|| Error::config("n must come before gamma"))?;
                gamma_entries.push((
                    (
                        parse_index(j, nn, "gamma")?,
                        parse_index(a, nn, "gamma")?,
                        parse_index(b, nn, "gamma")?,
                        parse_index(c, nn, "gamma")?,
                    ),
                    parse_complex(value, "gamma")?,
                ));
            }
            _ => return Err(Error::config(format!("unknown model key `{key}`"))),
        }
    }
    let n = n.ok_or_else(|| Error::config("model is missing `n`"))?;
    let dim = dim.ok_or_else(|| Error::config("model is missing `dim`"))?;
    let mut vgs = Vec::with_capacity(n);
    let mut carriers = Vec::with_capacity(n);
    for j in 0..n {
        let v = vg
            .remove(&j)
            .ok_or_else(|| Error::config(format!("missing vg {}", j + 1)))?;
        if v.len() != dim {
            return Err(Error::config(format!("vg {} has wrong dimension", j + 1)));
        }
        vgs.push(v);
        let k = ks
            .remove(&j)
            .ok_or_else(|| Error::config(format!("missing k {}", j + 1)))?;
        if k.dim() != dim {
            return Err(Error::config(format!("k {} has wrong dimension", j + 1)));
        }
        carriers.push(k);
    }
    let mut kappa = DMatrix::<Complex64>::zeros(n, n);
    let mut seen = vec![false; n * n];
    for (r, c, v) in kappa_entries {
        kappa[(r, c)] = v;
        seen[r * n + c] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::config("κ must list all N² entries"));
    }
    let mut tensor = BTreeMap::new();
    for (key, v) in gamma_entries {
        let (j, a, b, c) = key;
        let comb = RationalVec::resonance_combination(
            &carriers[a],
            &carriers[b],
            &carriers[c],
            &carriers[j],
        );
        if !comb.is_integer() {
            return Err(Error::config(format!(
                "γ quadruple ({},{},{},{}) is not resonant for the declared carriers",
                j + 1,
                a + 1,
                b + 1,
                c + 1
            )));
        }
        tensor.insert(key, v);
    }
    CmeModel::new(vgs, kappa, GammaTensor::from_entries(n, tensor), carriers)
}

/// Write a model to a file.
pub fn save_model(path: &std::path::Path, model: &CmeModel) -> Result<()> {
    std::fs::write(path, write_model(model))?;
    Ok(())
}

/// Load a model from a file.
pub fn load_model(path: &std::path::Path) -> Result<CmeModel> {
    let text = std::fs::read_to_string(path)?;
    parse_model(&text)
}

/// Convenience: try to interpret resonances of the stored carriers (delegates
/// to the cme module; used by consumers that rebuild index sets).
pub fn resonant_triples_of(model: &CmeModel, j: usize) -> Vec<(usize, usize, usize)> {
    cme::resonant_triples(&model.carriers, j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion;

    #[test]
    fn model_round_trip() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let mut model =
            dispersion::n4_symmetric_model(c(3.0), c(1.0), c(1.0), [0.0, 1.0], [1.0, 0.0])
                .unwrap();
        // attach a small gamma so that path is exercised
        let mut g = GammaTensor::empty(4);
        g.insert(0, 0, 0, 0, Complex64::new(-1.2, 0.0));
        g.insert(1, 1, 1, 1, Complex64::new(-1.2, 0.0));
        model.gamma = g;
        let text = write_model(&model);
        let back = parse_model(&text).unwrap();
        assert_eq!(back.n(), 4);
        assert_eq!(back.vg, model.vg);
        assert_eq!(back.carriers, model.carriers);
        for r in 0..4 {
            for cidx in 0..4 {
                assert_eq!(back.kappa[(r, cidx)], model.kappa[(r, cidx)]);
            }
        }
        assert_eq!(back.gamma.get(0, 0, 0, 0), model.gamma.get(0, 0, 0, 0));
    }

    #[test]
    fn rejects_nonresonant_gamma() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let model =
            dispersion::n4_symmetric_model(c(3.0), c(1.0), c(1.0), [0.0, 1.0], [1.0, 0.0])
                .unwrap();
        let mut text = write_model(&model);
        // (1,1,2,1): k1 - k2 + k1 - k1 = k1 - k2 is not a lattice vector
        text.push_str("gamma 1 1 2 1 = 0.5 0\n");
        assert!(parse_model(&text).is_err());
    }

    #[test]
    fn rejects_non_hermitian_kappa() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let model =
            dispersion::n4_symmetric_model(c(3.0), c(1.0), c(1.0), [0.0, 1.0], [1.0, 0.0])
                .unwrap();
        let text = write_model(&model);
        let broken = text.replace("kappa 1 2 = 3.0 0.0", "kappa 1 2 = 3.0 0.5");
        assert!(parse_model(&broken).is_err());
    }
}
