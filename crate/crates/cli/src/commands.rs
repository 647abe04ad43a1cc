//! Subcommand implementations: thin orchestration over the core crate.

use gapsol_core::bloch;
use gapsol_core::cme::{self, CarrierSet, CmeModel};
use gapsol_core::dispersion::{self, EdgeData, GapReport};
use gapsol_core::dynamics::{self, EnvelopeInit, EnvelopeState, GpSetup, GpState, ScalingConfig};
use gapsol_core::grid::Grid;
use gapsol_core::io::{binary, config::RunConfig, csv, model_format, report};
use gapsol_core::nls_seed::{self, ContinuationOptions};
use gapsol_core::petviashvili::{self, SolveOptions};
use gapsol_core::{Error, Result};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;

fn load_config(path: &Path) -> Result<RunConfig> {
    gapsol_core::io::config::load_config(path)
        .map_err(|e| Error::config(format!("config {}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<CmeModel> {
    model_format::load_model(path)
        .map_err(|e| Error::config(format!("model file {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn carriers_from_config(cfg: &RunConfig) -> Result<CarrierSet> {
    let v = cfg.problem.v.build(cfg.problem.dim)?;
    CarrierSet::from_potential(
        &v,
        &cfg.problem.carriers,
        cfg.bloch.cutoff,
        cfg.bloch.tol_omega,
    )
}

fn model_from_config(cfg: &RunConfig) -> Result<(CarrierSet, CmeModel)> {
    let carriers = carriers_from_config(cfg)?;
    let w = cfg.problem.w.build(cfg.problem.dim)?;
    let sigma = cfg.problem.sigma.build(cfg.problem.dim)?;
    let model = cme::assemble_model(&carriers, &w, &sigma)?;
    Ok((carriers, model))
}

pub fn bands(config: &Path, path_spec: &str, samples: usize, out: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let v = cfg.problem.v.build(cfg.problem.dim)?;
    let corners: Result<Vec<Vec<f64>>> = path_spec
        .split(';')
        .map(|seg| gapsol_core::io::parse_f64_list(seg, "k-path corner"))
        .collect();
    let corners = corners?;
    if corners.len() < 2 {
        return Err(Error::config("k-path needs at least two corners"));
    }
    let mut k_path = Vec::new();
    for pair in corners.windows(2) {
        for s in 0..samples {
            let t = s as f64 / samples as f64;
            let k: Vec<f64> = pair[0]
                .iter()
                .zip(&pair[1])
                .map(|(a, b)| a + t * (b - a))
                .collect();
            k_path.push(k);
        }
    }
    k_path.push(corners.last().unwrap().clone());
    let rows = bloch::band_structure(&v, &k_path, cfg.bloch.cutoff, cfg.bloch.n_max)?;
    let header = csv::band_header(cfg.problem.dim, cfg.bloch.n_max);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut file = std::io::BufWriter::new(std::fs::File::create(out)?);
    csv::write_csv(
        &mut file,
        &header_refs,
        rows.into_iter().map(|(k, om)| {
            let mut row = k;
            row.extend(om);
            row
        }),
    )?;
    Ok(())
}

pub fn coeffs(config: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let (_, model) = model_from_config(&cfg)?;
    model_format::save_model(out, &model)?;
    println!(
        "model: N = {}, |κ|max = {:.6}, γ entries = {}",
        model.n(),
        model.kappa.iter().map(|v| v.norm()).fold(0.0, f64::max),
        model.gamma.iter().count()
    );
    Ok(())
}

pub fn dispersion_surface(model: &Path, radius: f64, step: f64, out: &Path) -> Result<()> {
    let model = load_model(model)?;
    let d = model.dim();
    if d > 2 {
        return Err(Error::config("surface emission supports d <= 2"));
    }
    let steps = (2.0 * radius / step).round() as usize + 1;
    let axis: Vec<f64> = (0..steps).map(|i| -radius + i as f64 * step).collect();
    let header = csv::dispersion_header(d, model.n());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut rows = Vec::new();
    if d == 1 {
        for &k in &axis {
            let mut row = vec![k];
            row.extend(dispersion::dispersion_eigenvalues(&model, &[k]));
            rows.push(row);
        }
    } else {
        for &kx in &axis {
            for &ky in &axis {
                let mut row = vec![kx, ky];
                row.extend(dispersion::dispersion_eigenvalues(&model, &[kx, ky]));
                rows.push(row);
            }
        }
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(out)?);
    csv::write_csv(&mut file, &header_refs, rows.into_iter())?;
    Ok(())
}

fn print_gap_report(report: &GapReport) {
    if report.gaps.is_empty() {
        println!("no gaps found in ({}, {})", report.window.0, report.window.1);
    }
    for g in &report.gaps {
        println!("gap: ({:.6}, {:.6})", g.0, g.1);
    }
    println!(
        "asymptotic_cover_checked = {}",
        report.asymptotic_cover_checked
    );
}

pub fn gap(model: &Path, config: Option<&Path>, out: &Path) -> Result<()> {
    let model = load_model(model)?;
    let dc = match config {
        Some(p) => load_config(p)?.dispersion,
        None => Default::default(),
    };
    let rep = dispersion::scan_gap(&model, dc.window, dc.r_k, dc.h_k, dc.h_omega)?;
    print_gap_report(&rep);
    write_text(out, &report::write_gap_report(&rep))
}

pub fn moving_gap(model: &Path, config: Option<&Path>, velocity: &str, out: &Path) -> Result<()> {
    let model = load_model(model)?;
    let dc = match config {
        Some(p) => load_config(p)?.dispersion,
        None => Default::default(),
    };
    let v = gapsol_core::io::parse_f64_list(velocity, "frame velocity")?;
    let rep = dispersion::moving_frame_scan(&model, &v, dc.window, dc.r_k, dc.h_k, dc.h_omega)?;
    print_gap_report(&rep);
    write_text(out, &report::write_gap_report(&rep))
}

pub fn edge(
    model: &Path,
    config: Option<&Path>,
    band: Option<usize>,
    k0: Option<&str>,
    out: &Path,
) -> Result<()> {
    let model = load_model(model)?;
    let dc = match config {
        Some(p) => load_config(p)?.dispersion,
        None => Default::default(),
    };
    let band = band.unwrap_or(dc.edge_band);
    let k0 = match k0 {
        Some(s) => gapsol_core::io::parse_f64_list(s, "k0")?,
        None => dc.edge_k0.clone(),
    };
    let edge = dispersion::band_edge(&model, band, &k0, dc.h_edge)?;
    println!(
        "edge: band {} at {:?}: Ω* = {:.6}, {:?}, margin {:.3e}",
        edge.band, edge.k0, edge.omega_star, edge.definiteness, edge.simplicity_margin
    );
    write_text(out, &report::write_edge(&edge))
}

pub fn nls_seed(
    model_path: &Path,
    edge_path: &Path,
    config: &Path,
    out: &Path,
    profile_csv: Option<&Path>,
) -> Result<()> {
    let model = load_model(model_path)?;
    let edge_text = std::fs::read_to_string(edge_path)
        .map_err(|e| Error::config(format!("edge file {}: {e}", edge_path.display())))?;
    let edge: EdgeData = report::parse_edge(&edge_text)?;
    let cfg = load_config(config)?;
    let eps = cfg.problem.epsilon;
    let problem = nls_seed::effective_nls_coeffs(&model, &edge, cfg.nls.lambda)?;
    println!(
        "effective NLS: λ = {}, μ = {:.6}, Γ = {:.6} (im {:.2e})",
        problem.lambda, problem.mu, problem.gamma, problem.gamma_imag
    );
    let profile = nls_seed::shoot_radial(&problem.radial_problem())?;
    println!(
        "radial profile: amplitude {:.8}, e-folding radius {:.4}",
        profile.amplitude(),
        profile.e_folding_radius()
    );
    if let Some(csv_path) = profile_csv {
        let mut file = std::io::BufWriter::new(std::fs::File::create(csv_path)?);
        csv::write_csv(
            &mut file,
            &["rho", "c"],
            profile
                .c
                .iter()
                .enumerate()
                .map(|(i, &c)| vec![i as f64 * profile.step, c]),
        )?;
    }
    let copts = ContinuationOptions {
        steps: cfg.nls.steps,
        grid_points: cfg.nls.grid,
        domain_half: Some(
            cfg.nls
                .domain_half
                .unwrap_or(eps * cfg.soliton.domain_half),
        ),
        ..Default::default()
    };
    let c_field = nls_seed::continue_anisotropy(&profile, &problem, copts)?;
    let target = Grid::centered(model.dim(), cfg.soliton.grid, cfg.soliton.domain_half);
    let ansatz = nls_seed::build_cme_ansatz(&c_field, &edge, eps, &target)?;
    binary::write_vector_field(out, &ansatz)?;
    println!("seed written: peak {:.6}", ansatz.sup_norm());
    Ok(())
}

pub fn soliton(
    model: &Path,
    omega: f64,
    seed_file: &Path,
    out: &Path,
    sidecar: Option<&Path>,
) -> Result<()> {
    let model = load_model(model)?;
    let seed = binary::read_vector_field(seed_file)
        .map_err(|e| Error::config(format!("seed file {}: {e}", seed_file.display())))?;
    let sol = petviashvili::petviashvili_solve(&model, omega, &seed, SolveOptions::default())?;
    println!(
        "converged in {} iterations: residual {:.3e}, S = {:.9}",
        sol.iterations, sol.residual, sol.s_factor
    );
    for (k, v) in &sol.symmetry {
        println!("  {k} = {v:.3e}");
    }
    binary::write_vector_field(out, &sol.field)?;
    if let Some(p) = sidecar {
        write_text(p, &report::write_soliton_sidecar(&sol))?;
    }
    Ok(())
}

pub fn continue_branch(
    model: &Path,
    start_field: &Path,
    from: f64,
    to: f64,
    step: f64,
    out_dir: &Path,
) -> Result<()> {
    let model = load_model(model)?;
    let field = binary::read_vector_field(start_field)?;
    std::fs::create_dir_all(out_dir)?;
    // re-anchor the starting field as a converged solution at `from`
    let start = petviashvili::petviashvili_solve(&model, from, &field, SolveOptions::default())?;
    let branch = petviashvili::continue_in_omega(&model, &start, to, step, SolveOptions::default())?;
    write_text(
        &out_dir.join("branch.txt"),
        &report::write_branch_summary(&branch),
    )?;
    if let Some(fin) = &branch.final_solution {
        binary::write_vector_field(&out_dir.join("final.gsfb"), &fin.field)?;
        write_text(
            &out_dir.join("final.txt"),
            &report::write_soliton_sidecar(fin),
        )?;
    }
    if !branch.completed {
        return Err(Error::numerical(format!(
            "continuation aborted: {}",
            branch.abort_reason.unwrap_or_default()
        )));
    }
    println!("branch complete: {} points", branch.entries.len());
    Ok(())
}

pub fn evolve_cme(model: &Path, field: &Path, dt: f64, t_end: f64, out: &Path) -> Result<()> {
    let model = load_model(model)?;
    let f = binary::read_vector_field(field)?;
    let state = EnvelopeState { field: f, time: 0.0 };
    let evolved = dynamics::evolve_cme(&model, &state, dt, t_end)?;
    binary::write_vector_field(out, &evolved.field)?;
    Ok(())
}

pub fn evolve_gp(config: &Path, field: &Path, dt: f64, t_end: f64, out: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let setup = GpSetup {
        v: cfg.problem.v.build(cfg.problem.dim)?,
        w: cfg.problem.w.build(cfg.problem.dim)?,
        sigma: cfg.problem.sigma.build(cfg.problem.dim)?,
        eps: cfg.problem.epsilon,
        cells: cfg.dynamics.cells,
        points_per_cell: cfg.dynamics.points_per_cell,
    };
    let f = binary::read_vector_field(field)?;
    if f.ncomp() != 1 {
        return Err(Error::config("the GP field has one component"));
    }
    let state = GpState {
        field: gapsol_core::grid::ScalarField {
            grid: f.grid.clone(),
            data: f.components.into_iter().next().unwrap(),
        },
        time: 0.0,
    };
    let evolved = dynamics::evolve_gp(&setup, &state, dt, t_end)?;
    let out_field = gapsol_core::grid::VectorField::from_components(
        evolved.field.grid.clone(),
        vec![evolved.field.data],
    )?;
    binary::write_vector_field(out, &out_field)?;
    println!("evolved to t = {t_end}");
    Ok(())
}

pub fn validate_scaling(
    config: &Path,
    epsilons: Option<&str>,
    t0: Option<f64>,
    out: &Path,
) -> Result<()> {
    let cfg = load_config(config)?;
    let (carriers, model) = model_from_config(&cfg)?;
    let mut eps_list = cfg.dynamics.epsilons.clone();
    if let Some(s) = epsilons {
        eps_list = s
            .split(',')
            .map(|t| gapsol_core::io::parse_f64(t, "epsilon"))
            .collect::<Result<Vec<f64>>>()?;
    }
    let study = ScalingConfig {
        carriers,
        model,
        v: cfg.problem.v.build(cfg.problem.dim)?,
        w: cfg.problem.w.build(cfg.problem.dim)?,
        sigma: cfg.problem.sigma.build(cfg.problem.dim)?,
        eps_list,
        t0: t0.unwrap_or(cfg.dynamics.t0),
        cells: cfg.dynamics.cells,
        points_per_cell: cfg.dynamics.points_per_cell,
        slow_points: cfg.dynamics.slow_points,
        dt_gp: cfg.dynamics.dt_gp,
        dt_cme: cfg.dynamics.dt_cme,
        init: EnvelopeInit::Gaussian { amp: cfg.dynamics.envelope_amp, width: cfg.dynamics.envelope_width },
        samples: cfg.dynamics.samples,
    };
    let rep = dynamics::error_scaling_study(&study)?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(out)?);
    csv::write_csv(
        &mut file,
        &["epsilon", "sup_error", "included"],
        rep.rows.iter().map(|r| {
            vec![r.eps, r.sup_error, if r.included { 1.0 } else { 0.0 }]
        }),
    )?;
    for r in &rep.rows {
        println!(
            "ε = {:<8} sup error = {:.6e} {}",
            r.eps,
            r.sup_error,
            if r.included { "" } else { &r.note }
        );
    }
    println!("slope = {:.4}  (initial error {:.3e})", rep.slope, rep.initial_error);
    Ok(())
}

fn sha256_hex(path: &Path) -> Result<(String, u64)> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok((hex::encode(hasher.finalize()), bytes.len() as u64))
}

pub fn pipeline(
    config: &Path,
    out_dir: &Path,
    model_file: Option<&Path>,
    edge_file: Option<&Path>,
    seed_file: Option<&Path>,
) -> Result<()> {
    let cfg = load_config(config)?;
    std::fs::create_dir_all(out_dir)?;
    let mut artifacts: Vec<std::path::PathBuf> = Vec::new();
    let stage = |name: &str| println!("[pipeline] {name}");

    // model: from a supplied file, the config's model reference, or assembly
    let model = if let Some(p) = model_file {
        stage("model (from file)");
        load_model(p)?
    } else if let Some(f) = &cfg.model_file {
        stage("model (from config reference)");
        load_model(Path::new(f))?
    } else {
        stage("bloch + coefficients");
        let (_, model) = model_from_config(&cfg)?;
        model
    };
    let model_path = out_dir.join("model.txt");
    model_format::save_model(&model_path, &model)?;
    artifacts.push(model_path);

    stage("gap scan");
    let dc = &cfg.dispersion;
    let gap_report = dispersion::scan_gap(&model, dc.window, dc.r_k, dc.h_k, dc.h_omega)
        .map_err(|e| Error::numerical(format!("stage gap: {e}")))?;
    print_gap_report(&gap_report);
    let gap_path = out_dir.join("gap.txt");
    write_text(&gap_path, &report::write_gap_report(&gap_report))?;
    artifacts.push(gap_path);
    if gap_report.gaps.is_empty() {
        return Err(Error::numerical(
            "stage gap: no spectral gap found; cannot construct solitons".to_string(),
        ));
    }

    let edge = if let Some(p) = edge_file {
        stage("edge (from file)");
        let text = std::fs::read_to_string(p)
            .map_err(|e| Error::config(format!("edge file {}: {e}", p.display())))?;
        report::parse_edge(&text)?
    } else {
        stage("band edge");
        dispersion::band_edge(&model, dc.edge_band, &dc.edge_k0, dc.h_edge)
            .map_err(|e| Error::numerical(format!("stage edge: {e}")))?
    };
    let edge_path = out_dir.join("edge.txt");
    write_text(&edge_path, &report::write_edge(&edge))?;
    artifacts.push(edge_path);

    let eps = cfg.problem.epsilon;
    let omega0 = cfg
        .soliton
        .omega
        .unwrap_or(edge.omega_star + eps * eps * cfg.nls.lambda);

    let seed = if let Some(p) = seed_file {
        stage("seed (from file)");
        binary::read_vector_field(p)
            .map_err(|e| Error::config(format!("seed file {}: {e}", p.display())))?
    } else {
        stage("asymptotic seed");
        let problem = nls_seed::effective_nls_coeffs(&model, &edge, cfg.nls.lambda)
            .map_err(|e| Error::numerical(format!("stage seed: {e}")))?;
        println!(
            "  λ = {}, μ = {:.6}, Γ = {:.6}",
            problem.lambda, problem.mu, problem.gamma
        );
        let profile = nls_seed::shoot_radial(&problem.radial_problem())
            .map_err(|e| Error::numerical(format!("stage seed (shooting): {e}")))?;
        let copts = ContinuationOptions {
            steps: cfg.nls.steps,
            grid_points: cfg.nls.grid,
            domain_half: Some(cfg.nls.domain_half.unwrap_or(eps * cfg.soliton.domain_half)),
            ..Default::default()
        };
        let c_field = nls_seed::continue_anisotropy(&profile, &problem, copts)
            .map_err(|e| Error::numerical(format!("stage seed (continuation): {e}")))?;
        let target = Grid::centered(model.dim(), cfg.soliton.grid, cfg.soliton.domain_half);
        nls_seed::build_cme_ansatz(&c_field, &edge, eps, &target)
            .map_err(|e| Error::numerical(format!("stage seed (ansatz): {e}")))?
    };
    let seed_path = out_dir.join("seed.gsfb");
    binary::write_vector_field(&seed_path, &seed)?;
    artifacts.push(seed_path);

    stage("petviashvili");
    let opts = SolveOptions { max_iter: cfg.soliton.max_iter, ..Default::default() };
    let sol = petviashvili::petviashvili_solve(&model, omega0, &seed, opts)
        .map_err(|e| Error::numerical(format!("stage soliton: {e}")))?;
    println!(
        "  Ω = {}: {} iterations, residual {:.3e}",
        sol.omega, sol.iterations, sol.residual
    );
    let sol_path = out_dir.join("soliton.gsfb");
    binary::write_vector_field(&sol_path, &sol.field)?;
    artifacts.push(sol_path);
    let sidecar_path = out_dir.join("soliton.txt");
    write_text(&sidecar_path, &report::write_soliton_sidecar(&sol))?;
    artifacts.push(sidecar_path);

    if let Some(target) = cfg.soliton.target_omega {
        stage("continuation in Ω");
        let branch = petviashvili::continue_in_omega(&model, &sol, target, cfg.soliton.step, opts)
            .map_err(|e| Error::numerical(format!("stage continuation: {e}")))?;
        let branch_path = out_dir.join("branch.txt");
        write_text(&branch_path, &report::write_branch_summary(&branch))?;
        artifacts.push(branch_path);
        if let Some(fin) = &branch.final_solution {
            let fin_path = out_dir.join("soliton_final.gsfb");
            binary::write_vector_field(&fin_path, &fin.field)?;
            artifacts.push(fin_path);
        }
        if !branch.completed {
            return Err(Error::numerical(format!(
                "stage continuation: {}",
                branch.abort_reason.unwrap_or_default()
            )));
        }
    }

    stage("manifest");
    let mut manifest = String::new();
    for p in &artifacts {
        let (hash, size) = sha256_hex(p)?;
        let name = p.file_name().unwrap().to_string_lossy();
        manifest.push_str(&format!("{name} {hash} {size}\n"));
    }
    let mut f = std::fs::File::create(out_dir.join("manifest.txt"))?;
    f.write_all(manifest.as_bytes())?;
    println!("[pipeline] done: {} artifacts", artifacts.len());
    Ok(())
}
