//! Run configuration: flat sectioned key-value text. Carrier wavevectors are
//! written as exact rationals (`p/q` or finite decimals) and kept exact so
//! resonance classification never depends on floating-point drift. Parsing
//! then serializing then parsing again reproduces the state exactly.

use crate::error::{Error, Result};
use crate::potential::{PerturbationPotential, PeriodicPotential, WTerm};
use crate::rational::RationalVec;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Zero,
    Constant(f64),
    CosineProduct { amplitude: f64 },
    Fourier(Vec<(Vec<i64>, Complex64)>),
}

impl PotentialSpec {
    pub fn build(&self, dim: usize) -> Result<PeriodicPotential> {
        match self {
            PotentialSpec::Zero => Ok(PeriodicPotential::zero(dim)),
            PotentialSpec::Constant(v) => Ok(PeriodicPotential::constant(dim, *v)),
            PotentialSpec::CosineProduct { amplitude } => {
                Ok(PeriodicPotential::cosine_product(dim, *amplitude))
            }
            PotentialSpec::Fourier(entries) => {
                let mut map = BTreeMap::new();
                for (eta, v) in entries {
                    map.insert(eta.clone(), *v);
                }
                PeriodicPotential::new(dim, map)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WSpec {
    pub constant: f64,
    /// `(l, amplitude)` cosine pairs, expanded to `±l` terms.
    pub cosines: Vec<(Vec<f64>, f64)>,
    /// Raw signed terms (must already satisfy the pairing).
    pub terms: Vec<(Vec<f64>, Complex64)>,
}

impl Default for WSpec {
    fn default() -> Self {
        WSpec { constant: 0.0, cosines: Vec::new(), terms: Vec::new() }
    }
}

impl WSpec {
    pub fn build(&self, dim: usize) -> Result<PerturbationPotential> {
        let mut terms: Vec<WTerm> = Vec::new();
        if self.constant != 0.0 {
            terms.push(WTerm {
                l: vec![0.0; dim],
                a: Complex64::new(self.constant, 0.0),
            });
        }
        for (l, amp) in &self.cosines {
            let half = Complex64::new(amp / 2.0, 0.0);
            terms.push(WTerm { l: l.clone(), a: half });
            terms.push(WTerm { l: l.iter().map(|x| -x).collect(), a: half });
        }
        for (l, a) in &self.terms {
            terms.push(WTerm { l: l.clone(), a: *a });
        }
        PerturbationPotential::new(dim, terms)
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.cosines.is_empty() && self.terms.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub dim: usize,
    pub epsilon: f64,
    pub v: PotentialSpec,
    pub sigma: PotentialSpec,
    pub w: WSpec,
    /// `(band, k)` carriers, exact rationals.
    pub carriers: Vec<(usize, RationalVec)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlochConfig {
    pub cutoff: i64,
    pub n_max: usize,
    pub tol_omega: f64,
}

impl Default for BlochConfig {
    fn default() -> Self {
        BlochConfig { cutoff: 12, n_max: 6, tol_omega: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionConfig {
    pub window: (f64, f64),
    pub r_k: f64,
    pub h_k: f64,
    pub h_omega: f64,
    pub h_edge: f64,
    pub edge_band: usize,
    pub edge_k0: Vec<f64>,
    pub frame_velocity: Vec<f64>,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        DispersionConfig {
            window: (-6.0, 6.0),
            r_k: 40.0,
            h_k: 0.05,
            h_omega: 1e-2,
            h_edge: 1e-3,
            edge_band: 2,
            edge_k0: vec![0.0, 0.0],
            frame_velocity: vec![0.3, 0.3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NlsConfig {
    pub lambda: f64,
    pub grid: usize,
    /// `None` auto-sizes the box from the radial profile.
    pub domain_half: Option<f64>,
    pub steps: usize,
}

impl Default for NlsConfig {
    fn default() -> Self {
        NlsConfig { lambda: 1.0, grid: 256, domain_half: None, steps: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonConfig {
    pub domain_half: f64,
    pub grid: usize,
    pub omega: Option<f64>,
    pub target_omega: Option<f64>,
    pub step: f64,
    pub max_iter: usize,
}

impl Default for SolitonConfig {
    fn default() -> Self {
        SolitonConfig {
            domain_half: 60.0,
            grid: 256,
            omega: None,
            target_omega: None,
            step: 0.01,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsConfig {
    pub cells: usize,
    pub points_per_cell: usize,
    pub slow_points: usize,
    pub dt_gp: f64,
    pub dt_cme: f64,
    pub t0: f64,
    pub epsilons: Vec<f64>,
    pub samples: usize,
    pub envelope_amp: f64,
    pub envelope_width: f64,
    pub t_end: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            cells: 60,
            points_per_cell: 8,
            slow_points: 240,
            dt_gp: 1e-3,
            dt_cme: 1e-3,
            t0: 0.5,
            epsilons: vec![0.15, 0.1, 0.067],
            samples: 11,
            envelope_amp: 1.0,
            envelope_width: 1.0,
            t_end: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub bloch: BlochConfig,
    pub dispersion: DispersionConfig,
    pub nls: NlsConfig,
    pub soliton: SolitonConfig,
    pub dynamics: DynamicsConfig,
    /// Optional model file that replaces the bloch/cme stages.
    pub model_file: Option<String>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.problem.epsilon <= 0.0 {
            return Err(Error::config("ε must be positive"));
        }
        if self.problem.carriers.is_empty() && self.model_file.is_none() {
            return Err(Error::config("need carriers or a model file"));
        }
        for (band, k) in &self.problem.carriers {
            if *band == 0 {
                return Err(Error::config("carrier bands are 1-based"));
            }
            if k.dim() != self.problem.dim {
                return Err(Error::config("carrier wavevector has wrong dimension"));
            }
        }
        let positive = [
            ("bloch.tol_omega", self.bloch.tol_omega),
            ("dispersion.r_k", self.dispersion.r_k),
            ("dispersion.h_k", self.dispersion.h_k),
            ("dispersion.h_omega", self.dispersion.h_omega),
            ("dispersion.h_edge", self.dispersion.h_edge),
            ("soliton.step", self.soliton.step),
            ("dynamics.dt_gp", self.dynamics.dt_gp),
            ("dynamics.dt_cme", self.dynamics.dt_cme),
            ("dynamics.t0", self.dynamics.t0),
        ];
        for (name, v) in positive {
            if v <= 0.0 {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

fn potential_lines(out: &mut String, name: &str, spec: &PotentialSpec) {
    let _ = writeln!(out, "[potential.{name}]");
    match spec {
        PotentialSpec::Zero => {
            let _ = writeln!(out, "kind = zero");
        }
        PotentialSpec::Constant(v) => {
            let _ = writeln!(out, "kind = constant");
            let _ = writeln!(out, "value = {v:?}");
        }
        PotentialSpec::CosineProduct { amplitude } => {
            let _ = writeln!(out, "kind = cosine-product");
            let _ = writeln!(out, "amplitude = {amplitude:?}");
        }
        PotentialSpec::Fourier(entries) => {
            let _ = writeln!(out, "kind = fourier");
            for (eta, v) in entries {
                let idx: Vec<String> = eta.iter().map(|e| e.to_string()).collect();
                let _ = writeln!(out, "coeff = {} : {:?} {:?}", idx.join(" "), v.re, v.im);
            }
        }
    }
    let _ = writeln!(out);
}

/// Canonical serialization.
pub fn write_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[problem]");
    let _ = writeln!(out, "dim = {}", cfg.problem.dim);
    let _ = writeln!(out, "epsilon = {:?}", cfg.problem.epsilon);
    let _ = writeln!(out);
    potential_lines(&mut out, "v", &cfg.problem.v);
    potential_lines(&mut out, "sigma", &cfg.problem.sigma);
    let _ = writeln!(out, "[potential.w]");
    if cfg.problem.w.constant != 0.0 {
        let _ = writeln!(out, "constant = {:?}", cfg.problem.w.constant);
    }
    for (l, amp) in &cfg.problem.w.cosines {
        let ls: Vec<String> = l.iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(out, "cosine = {} : {:?}", ls.join(" "), amp);
    }
    for (l, a) in &cfg.problem.w.terms {
        let ls: Vec<String> = l.iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(out, "term = {} : {:?} {:?}", ls.join(" "), a.re, a.im);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[carriers]");
    for (band, k) in &cfg.problem.carriers {
        let _ = writeln!(out, "carrier = {} : {}", band, k.format());
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[bloch]");
    let _ = writeln!(out, "cutoff = {}", cfg.bloch.cutoff);
    let _ = writeln!(out, "n_max = {}", cfg.bloch.n_max);
    let _ = writeln!(out, "tol_omega = {:?}", cfg.bloch.tol_omega);
    let _ = writeln!(out);
    let _ = writeln!(out, "[dispersion]");
    let _ = writeln!(out, "window = {:?} {:?}", cfg.dispersion.window.0, cfg.dispersion.window.1);
    let _ = writeln!(out, "r_k = {:?}", cfg.dispersion.r_k);
    let _ = writeln!(out, "h_k = {:?}", cfg.dispersion.h_k);
    let _ = writeln!(out, "h_omega = {:?}", cfg.dispersion.h_omega);
    let _ = writeln!(out, "h_edge = {:?}", cfg.dispersion.h_edge);
    let _ = writeln!(out, "edge_band = {}", cfg.dispersion.edge_band);
    let k0: Vec<String> = cfg.dispersion.edge_k0.iter().map(|v| format!("{v:?}")).collect();
    let _ = writeln!(out, "edge_k0 = {}", k0.join(" "));
    let fv: Vec<String> = cfg.dispersion.frame_velocity.iter().map(|v| format!("{v:?}")).collect();
    let _ = writeln!(out, "frame_velocity = {}", fv.join(" "));
    let _ = writeln!(out);
    let _ = writeln!(out, "[nls]");
    let _ = writeln!(out, "lambda = {:?}", cfg.nls.lambda);
    let _ = writeln!(out, "grid = {}", cfg.nls.grid);
    match cfg.nls.domain_half {
        Some(v) => {
            let _ = writeln!(out, "domain_half = {v:?}");
        }
        None => {
            let _ = writeln!(out, "domain_half = auto");
        }
    }
    let _ = writeln!(out, "steps = {}", cfg.nls.steps);
    let _ = writeln!(out);
    let _ = writeln!(out, "[soliton]");
    let _ = writeln!(out, "domain_half = {:?}", cfg.soliton.domain_half);
    let _ = writeln!(out, "grid = {}", cfg.soliton.grid);
    if let Some(v) = cfg.soliton.omega {
        let _ = writeln!(out, "omega = {v:?}");
    }
    if let Some(v) = cfg.soliton.target_omega {
        let _ = writeln!(out, "target_omega = {v:?}");
    }
    let _ = writeln!(out, "step = {:?}", cfg.soliton.step);
    let _ = writeln!(out, "max_iter = {}", cfg.soliton.max_iter);
    let _ = writeln!(out);
    let _ = writeln!(out, "[dynamics]");
    let _ = writeln!(out, "cells = {}", cfg.dynamics.cells);
    let _ = writeln!(out, "points_per_cell = {}", cfg.dynamics.points_per_cell);
    let _ = writeln!(out, "slow_points = {}", cfg.dynamics.slow_points);
    let _ = writeln!(out, "dt_gp = {:?}", cfg.dynamics.dt_gp);
    let _ = writeln!(out, "dt_cme = {:?}", cfg.dynamics.dt_cme);
    let _ = writeln!(out, "t0 = {:?}", cfg.dynamics.t0);
    let eps: Vec<String> = cfg.dynamics.epsilons.iter().map(|v| format!("{v:?}")).collect();
    let _ = writeln!(out, "epsilons = {}", eps.join(" "));
    let _ = writeln!(out, "samples = {}", cfg.dynamics.samples);
    let _ = writeln!(out, "envelope_amp = {:?}", cfg.dynamics.envelope_amp);
    let _ = writeln!(out, "envelope_width = {:?}", cfg.dynamics.envelope_width);
    let _ = writeln!(out, "t_end = {:?}", cfg.dynamics.t_end);
    if let Some(f) = &cfg.model_file {
        let _ = writeln!(out);
        let _ = writeln!(out, "[model]");
        let _ = writeln!(out, "file = {f}");
    }
    out
}

fn split_colon(value: &str, what: &str) -> Result<(String, String)> {
    value
        .split_once(':')
        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
        .ok_or_else(|| Error::config(format!("{what}: expected `... : ...` in `{value}`")))
}

fn parse_i64_list(s: &str, what: &str) -> Result<Vec<i64>> {
    s.split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::config(format!("bad integer for {what}: `{t}`")))
        })
        .collect()
}

/// Parse a configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let entries = super::parse_sections(text)?;
    let mut dim = None;
    let mut epsilon = None;
    let mut v_spec: Option<PotentialSpec> = None;
    let mut sigma_spec: Option<PotentialSpec> = None;
    let mut w = WSpec::default();
    let mut carriers = Vec::new();
    let mut bloch = BlochConfig::default();
    let mut dispersion = DispersionConfig::default();
    let mut nls = NlsConfig::default();
    let mut soliton = SolitonConfig::default();
    let mut dynamics = DynamicsConfig::default();
    let mut model_file = None;

    // collect per-potential raw entries first (kind decides interpretation)
    let mut pot_kind: BTreeMap<String, String> = BTreeMap::new();
    let mut pot_values: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();

    for (section, key, value) in entries {
        match section.as_str() {
            "problem" => match key.as_str() {
                "dim" => dim = Some(super::parse_usize(&value, "dim")?),
                "epsilon" => epsilon = Some(super::parse_f64(&value, "epsilon")?),
                other => return Err(Error::config(format!("unknown problem key `{other}`"))),
            },
            s if s.starts_with("potential.") => {
                let name = s.trim_start_matches("potential.").to_string();
                if key == "kind" {
                    pot_kind.insert(name, value);
                } else {
                    pot_values.entry(name).or_default().push((key, value));
                }
            }
            "carriers" => match key.as_str() {
                "carrier" => {
                    let (band, k) = split_colon(&value, "carrier")?;
                    carriers.push((
                        super::parse_usize(&band, "carrier band")?,
                        RationalVec::parse(&k)?,
                    ));
                }
                other => return Err(Error::config(format!("unknown carriers key `{other}`"))),
            },
            "bloch" => match key.as_str() {
                "cutoff" => bloch.cutoff = super::parse_usize(&value, "cutoff")? as i64,
                "n_max" => bloch.n_max = super::parse_usize(&value, "n_max")?,
                "tol_omega" => bloch.tol_omega = super::parse_f64(&value, "tol_omega")?,
                other => return Err(Error::config(format!("unknown bloch key `{other}`"))),
            },
            "dispersion" => match key.as_str() {
                "window" => {
                    let xs = super::parse_f64_list(&value, "window")?;
                    if xs.len() != 2 {
                        return Err(Error::config("window needs two numbers"));
                    }
                    dispersion.window = (xs[0], xs[1]);
                }
                "r_k" => dispersion.r_k = super::parse_f64(&value, "r_k")?,
                "h_k" => dispersion.h_k = super::parse_f64(&value, "h_k")?,
                "h_omega" => dispersion.h_omega = super::parse_f64(&value, "h_omega")?,
                "h_edge" => dispersion.h_edge = super::parse_f64(&value, "h_edge")?,
                "edge_band" => dispersion.edge_band = super::parse_usize(&value, "edge_band")?,
                "edge_k0" => dispersion.edge_k0 = super::parse_f64_list(&value, "edge_k0")?,
                "frame_velocity" => {
                    dispersion.frame_velocity = super::parse_f64_list(&value, "frame_velocity")?
                }
                other => return Err(Error::config(format!("unknown dispersion key `{other}`"))),
            },
            "nls" => match key.as_str() {
                "lambda" => nls.lambda = super::parse_f64(&value, "lambda")?,
                "grid" => nls.grid = super::parse_usize(&value, "grid")?,
                "domain_half" => {
                    nls.domain_half = if value == "auto" {
                        None
                    } else {
                        Some(super::parse_f64(&value, "domain_half")?)
                    }
                }
                "steps" => nls.steps = super::parse_usize(&value, "steps")?,
                other => return Err(Error::config(format!("unknown nls key `{other}`"))),
            },
            "soliton" => match key.as_str() {
                "domain_half" => soliton.domain_half = super::parse_f64(&value, "domain_half")?,
                "grid" => soliton.grid = super::parse_usize(&value, "grid")?,
                "omega" => soliton.omega = Some(super::parse_f64(&value, "omega")?),
                "target_omega" => {
                    soliton.target_omega = Some(super::parse_f64(&value, "target_omega")?)
                }
                "step" => soliton.step = super::parse_f64(&value, "step")?,
                "max_iter" => soliton.max_iter = super::parse_usize(&value, "max_iter")?,
                other => return Err(Error::config(format!("unknown soliton key `{other}`"))),
            },
            "dynamics" => match key.as_str() {
                "cells" => dynamics.cells = super::parse_usize(&value, "cells")?,
                "points_per_cell" => {
                    dynamics.points_per_cell = super::parse_usize(&value, "points_per_cell")?
                }
                "slow_points" => dynamics.slow_points = super::parse_usize(&value, "slow_points")?,
                "dt_gp" => dynamics.dt_gp = super::parse_f64(&value, "dt_gp")?,
                "dt_cme" => dynamics.dt_cme = super::parse_f64(&value, "dt_cme")?,
                "t0" => dynamics.t0 = super::parse_f64(&value, "t0")?,
                "epsilons" => dynamics.epsilons = super::parse_f64_list(&value, "epsilons")?,
                "samples" => dynamics.samples = super::parse_usize(&value, "samples")?,
                "envelope_amp" => {
                    dynamics.envelope_amp = super::parse_f64(&value, "envelope_amp")?
                }
                "envelope_width" => {
                    dynamics.envelope_width = super::parse_f64(&value, "envelope_width")?
                }
                "t_end" => dynamics.t_end = super::parse_f64(&value, "t_end")?,
                other => return Err(Error::config(format!("unknown dynamics key `{other}`"))),
            },
            "model" => match key.as_str() {
                "file" => model_file = Some(value),
                other => return Err(Error::config(format!("unknown model key `{other}`"))),
            },
            other => return Err(Error::config(format!("unknown section `[{other}]`"))),
        }
    }

    // interpret the potentials
    for (name, kind) in &pot_kind {
        let values = pot_values.remove(name).unwrap_or_default();
        let spec = match kind.as_str() {
            "zero" => PotentialSpec::Zero,
            "constant" => {
                let v = values
                    .iter()
                    .find(|(k, _)| k == "value")
                    .ok_or_else(|| Error::config(format!("potential.{name}: missing value")))?;
                PotentialSpec::Constant(super::parse_f64(&v.1, "value")?)
            }
            "cosine-product" => {
                let v = values
                    .iter()
                    .find(|(k, _)| k == "amplitude")
                    .ok_or_else(|| Error::config(format!("potential.{name}: missing amplitude")))?;
                PotentialSpec::CosineProduct { amplitude: super::parse_f64(&v.1, "amplitude")? }
            }
            "fourier" => {
                let mut entries = Vec::new();
                for (k, v) in &values {
                    if k != "coeff" {
                        return Err(Error::config(format!(
                            "potential.{name}: unknown key `{k}`"
                        )));
                    }
                    let (eta, c) = split_colon(v, "coeff")?;
                    let cs = super::parse_f64_list(&c, "coeff")?;
                    if cs.len() != 2 {
                        return Err(Error::config("coeff needs `re im`"));
                    }
                    entries.push((parse_i64_list(&eta, "coeff")?, Complex64::new(cs[0], cs[1])));
                }
                PotentialSpec::Fourier(entries)
            }
            other => {
                return Err(Error::config(format!(
                    "potential.{name}: unknown kind `{other}`"
                )))
            }
        };
        match name.as_str() {
            "v" => v_spec = Some(spec),
            "sigma" => sigma_spec = Some(spec),
            "w" => return Err(Error::config("potential.w uses term/cosine/constant keys")),
            other => return Err(Error::config(format!("unknown potential `{other}`"))),
        }
    }
    // W entries arrive without a kind
    if let Some(values) = pot_values.remove("w") {
        for (k, v) in values {
            match k.as_str() {
                "constant" => w.constant = super::parse_f64(&v, "w constant")?,
                "cosine" => {
                    let (l, amp) = split_colon(&v, "w cosine")?;
                    w.cosines.push((
                        super::parse_f64_list(&l, "w cosine")?,
                        super::parse_f64(&amp, "w cosine amplitude")?,
                    ));
                }
                "term" => {
                    let (l, a) = split_colon(&v, "w term")?;
                    let cs = super::parse_f64_list(&a, "w term")?;
                    if cs.len() != 2 {
                        return Err(Error::config("w term needs `re im`"));
                    }
                    w.terms.push((
                        super::parse_f64_list(&l, "w term")?,
                        Complex64::new(cs[0], cs[1]),
                    ));
                }
                other => return Err(Error::config(format!("unknown w key `{other}`"))),
            }
        }
    }
    if !pot_values.is_empty() {
        let names: Vec<&String> = pot_values.keys().collect();
        return Err(Error::config(format!(
            "potential sections without a kind: {names:?}"
        )));
    }

    let cfg = RunConfig {
        problem: ProblemConfig {
            dim: dim.ok_or_else(|| Error::config("missing problem.dim"))?,
            epsilon: epsilon.unwrap_or(0.1),
            v: v_spec.unwrap_or(PotentialSpec::Zero),
            sigma: sigma_spec.unwrap_or(PotentialSpec::Zero),
            w,
            carriers,
        },
        bloch,
        dispersion,
        nls,
        soliton,
        dynamics,
        model_file,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_config() -> RunConfig {
        RunConfig {
            problem: ProblemConfig {
                dim: 2,
                epsilon: 0.1,
                v: PotentialSpec::CosineProduct { amplitude: 1.0 },
                sigma: PotentialSpec::Constant(1.0),
                w: WSpec {
                    constant: 1.0,
                    cosines: vec![(vec![0.4, 0.0], 2.0)],
                    terms: vec![],
                },
                carriers: vec![
                    (4, RationalVec::parse("-1/5 -2/5").unwrap()),
                    (4, RationalVec::parse("1/5 -2/5").unwrap()),
                ],
            },
            bloch: BlochConfig::default(),
            dispersion: DispersionConfig::default(),
            nls: NlsConfig::default(),
            soliton: SolitonConfig {
                omega: Some(-0.99),
                target_omega: Some(-0.8),
                ..Default::default()
            },
            dynamics: DynamicsConfig::default(),
            model_file: None,
        }
    }

    #[test]
    fn config_round_trips_exactly() {
        let cfg = example_config();
        let text = write_config(&cfg);
        let back = parse_config(&text).unwrap();
        assert_eq!(back, cfg);
        // and the echo of the echo is identical text
        assert_eq!(write_config(&back), text);
    }

    #[test]
    fn rejects_unknown_keys_and_nonpositive_tolerances() {
        let cfg = example_config();
        let mut text = write_config(&cfg);
        text.push_str("\n[bloch]\nbogus = 1\n");
        assert!(parse_config(&text).is_err());
        let bad = write_config(&cfg).replace("h_k = 0.05", "h_k = -0.05");
        assert!(parse_config(&bad).is_err());
    }

    #[test]
    fn carriers_parse_decimals_to_exact_rationals() {
        let text = "\n[problem]\ndim = 2\nepsilon = 0.1\n\n[carriers]\ncarrier = 4 : -0.2 -0.4\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(
            cfg.problem.carriers[0].1,
            RationalVec::parse("-1/5 -2/5").unwrap()
        );
    }

    #[test]
    fn potentials_build() {
        let cfg = example_config();
        let v = cfg.problem.v.build(2).unwrap();
        assert_eq!(v.support_radius(), 1);
        let w = cfg.problem.w.build(2).unwrap();
        assert_eq!(w.terms().len(), 3);
        assert!((w.eval(&[0.0, 0.0]) - 3.0).abs() < 1e-14);
    }
}
