//! Text serialization of analysis artifacts: gap reports, band-edge data and
//! soliton sidecars. Edge data parses back (the pipeline can resume from it).

use crate::dispersion::{Definiteness, EdgeData, GapReport};
use crate::error::{Error, Result};
use crate::petviashvili::{SolitonBranch, SolitonSolution};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::fmt::Write as _;

pub fn write_gap_report(report: &GapReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "gapsol gap-report v1");
    let _ = writeln!(out, "window = {:?} {:?}", report.window.0, report.window.1);
    let _ = writeln!(out, "r_k = {:?}", report.r_k);
    let _ = writeln!(out, "h_k = {:?}", report.h_k);
    let _ = writeln!(out, "h_omega = {:?}", report.h_omega);
    let _ = writeln!(
        out,
        "asymptotic_cover_checked = {}",
        report.asymptotic_cover_checked
    );
    for g in &report.gaps {
        let _ = writeln!(out, "gap = {:?} {:?}", g.0, g.1);
    }
    for c in &report.covered {
        let _ = writeln!(out, "covered = {:?} {:?}", c.0, c.1);
    }
    out
}

fn definiteness_str(d: Definiteness) -> &'static str {
    match d {
        Definiteness::PositiveDefinite => "positive-definite",
        Definiteness::NegativeDefinite => "negative-definite",
        Definiteness::Indefinite => "indefinite",
        Definiteness::Degenerate => "degenerate",
    }
}

fn definiteness_from(s: &str) -> Result<Definiteness> {
    match s {
        "positive-definite" => Ok(Definiteness::PositiveDefinite),
        "negative-definite" => Ok(Definiteness::NegativeDefinite),
        "indefinite" => Ok(Definiteness::Indefinite),
        "degenerate" => Ok(Definiteness::Degenerate),
        other => Err(Error::config(format!("unknown definiteness `{other}`"))),
    }
}

pub fn write_edge(edge: &EdgeData) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "gapsol edge v1");
    let _ = writeln!(out, "band = {}", edge.band);
    let join = |xs: &[f64]| {
        xs.iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(out, "k0 = {}", join(&edge.k0));
    let _ = writeln!(out, "omega_star = {:?}", edge.omega_star);
    let _ = writeln!(out, "gradient = {}", join(&edge.gradient));
    let hess: Vec<f64> = edge.hessian.iter().copied().collect();
    let _ = writeln!(out, "hessian = {}", join(&hess));
    let _ = writeln!(out, "definiteness = {}", definiteness_str(edge.definiteness));
    let _ = writeln!(out, "simplicity_margin = {:?}", edge.simplicity_margin);
    let eta: Vec<String> = edge
        .eta
        .iter()
        .flat_map(|c| [format!("{:?}", c.re), format!("{:?}", c.im)])
        .collect();
    let _ = writeln!(out, "eta = {}", eta.join(" "));
    out
}

pub fn parse_edge(text: &str) -> Result<EdgeData> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("gapsol edge v1") {
        return Err(Error::config("not an edge file"));
    }
    let body: String = lines.collect::<Vec<_>>().join("\n");
    let entries = super::parse_sections(&body)?;
    let mut band = None;
    let mut k0 = None;
    let mut omega_star = None;
    let mut gradient = None;
    let mut hessian: Option<Vec<f64>> = None;
    let mut definiteness = None;
    let mut margin = None;
    let mut eta: Option<Vec<Complex64>> = None;
    for (_, key, value) in &entries {
        match key.as_str() {
            "band" => band = Some(super::parse_usize(value, "band")?),
            "k0" => k0 = Some(super::parse_f64_list(value, "k0")?),
            "omega_star" => omega_star = Some(super::parse_f64(value, "omega_star")?),
            "gradient" => gradient = Some(super::parse_f64_list(value, "gradient")?),
            "hessian" => hessian = Some(super::parse_f64_list(value, "hessian")?),
            "definiteness" => definiteness = Some(definiteness_from(value)?),
            "simplicity_margin" => margin = Some(super::parse_f64(value, "margin")?),
            "eta" => {
                let vals = super::parse_f64_list(value, "eta")?;
                if vals.len() % 2 != 0 {
                    return Err(Error::config("eta needs re/im pairs"));
                }
                eta = Some(
                    vals.chunks(2)
                        .map(|p| Complex64::new(p[0], p[1]))
                        .collect(),
                );
            }
            other => return Err(Error::config(format!("unknown edge key `{other}`"))),
        }
    }
    let k0 = k0.ok_or_else(|| Error::config("edge missing k0"))?;
    let d = k0.len();
    let hess_flat = hessian.ok_or_else(|| Error::config("edge missing hessian"))?;
    if hess_flat.len() != d * d {
        return Err(Error::config("hessian has wrong size"));
    }
    Ok(EdgeData {
        band: band.ok_or_else(|| Error::config("edge missing band"))?,
        k0,
        omega_star: omega_star.ok_or_else(|| Error::config("edge missing omega_star"))?,
        eta: eta.ok_or_else(|| Error::config("edge missing eta"))?,
        gradient: gradient.ok_or_else(|| Error::config("edge missing gradient"))?,
        hessian: DMatrix::from_iterator(d, d, hess_flat),
        definiteness: definiteness.ok_or_else(|| Error::config("edge missing definiteness"))?,
        simplicity_margin: margin.ok_or_else(|| Error::config("edge missing margin"))?,
    })
}

pub fn write_soliton_sidecar(sol: &SolitonSolution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "gapsol soliton v1");
    let _ = writeln!(out, "omega = {:?}", sol.omega);
    let _ = writeln!(out, "residual = {:e}", sol.residual);
    let _ = writeln!(out, "iterations = {}", sol.iterations);
    let _ = writeln!(out, "s_factor = {:?}", sol.s_factor);
    for (k, v) in &sol.symmetry {
        let _ = writeln!(out, "symmetry: {k} = {v:e}");
    }
    for w in &sol.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

pub fn write_branch_summary(branch: &SolitonBranch) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "gapsol branch v1");
    let _ = writeln!(out, "completed = {}", branch.completed);
    if let Some(reason) = &branch.abort_reason {
        let _ = writeln!(out, "abort_reason = {reason}");
    }
    for e in &branch.entries {
        let _ = writeln!(
            out,
            "point: omega = {:?}, peak = {:e}, residual = {:e}, iterations = {}",
            e.omega, e.peak, e.residual, e.iterations
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_round_trip() {
        let edge = EdgeData {
            band: 2,
            k0: vec![0.0, 0.0],
            omega_star: -1.0,
            eta: vec![
                Complex64::new(0.5, 0.0),
                Complex64::new(0.5, 0.0),
                Complex64::new(-0.5, 0.0),
                Complex64::new(-0.5, 1e-17),
            ],
            gradient: vec![1e-13, -2e-14],
            hessian: DMatrix::from_row_slice(2, 2, &[-0.25, 1e-10, 1e-10, -0.25]),
            definiteness: Definiteness::NegativeDefinite,
            simplicity_margin: 2.0,
        };
        let text = write_edge(&edge);
        let back = parse_edge(&text).unwrap();
        assert_eq!(back.band, edge.band);
        assert_eq!(back.omega_star, edge.omega_star);
        assert_eq!(back.eta, edge.eta);
        assert_eq!(back.hessian, edge.hessian);
        assert_eq!(back.definiteness, edge.definiteness);
    }
}
