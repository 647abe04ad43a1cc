//! Time evolution of the CME system and the full Gross-Pitaevskii equation,
//! wave-packet assembly, and the empirical approximation-error scaling study.
//!
//! The CME integrator is an integrating-factor (Lawson) RK4: the stiff
//! transport-plus-coupling part is applied exactly per Fourier mode through
//! the unitary `exp(-i L(K) dt)`, the cubic term by RK4 in the interaction
//! picture. The GP integrator is Strang split-step Fourier; both pointwise
//! substeps are phase multiplications, so the discrete mass is conserved to
//! roundoff by construction.

use crate::bloch::{self, BlochMode};
use crate::cme::{CarrierSet, CmeModel};
use crate::error::{Error, Result};
use crate::fourier;
use crate::grid::{Grid, ScalarField, VectorField};
use crate::linalg::{self, JacobiWorkspace};
use crate::potential::{PerturbationPotential, PeriodicPotential};
use crate::util;
use num_complex::Complex64;

/// Spectral-tail fraction above which an envelope is considered
/// under-resolved.
pub const TAIL_GUARD: f64 = 1e-6;

/// Envelope state: N complex amplitudes on the slow grid at slow time T.
/// The model that generated it travels separately.
#[derive(Debug, Clone)]
pub struct EnvelopeState {
    pub field: VectorField,
    pub time: f64,
}

/// Per-mode propagator table `exp(-i L(K) dt/2)`.
struct HalfStepPropagator {
    n: usize,
    table: Vec<Complex64>,
}

impl HalfStepPropagator {
    fn new(model: &CmeModel, grid: &Grid, dt: f64) -> Self {
        let n = model.n();
        let d = grid.dim();
        let waves: Vec<Vec<f64>> = (0..d).map(|ax| grid.wavenumbers(ax)).collect();
        let len = grid.len();
        let mut table = vec![Complex64::default(); len * n * n];
        let mut ws = JacobiWorkspace::default();
        let mut sym = vec![Complex64::default(); n * n];
        let mut vals = vec![0.0; n];
        let mut vecs = vec![Complex64::default(); n * n];
        let mut k = vec![0.0; d];
        let mut flat = 0usize;
        util::for_each_multi_index(&grid.shape, |_, idx| {
            for ax in 0..d {
                k[ax] = waves[ax][idx[ax]];
            }
            for r in 0..n {
                for c in 0..n {
                    sym[r * n + c] = -model.kappa[(r, c)];
                }
                let t: f64 = model.vg[r].iter().zip(&k).map(|(v, kk)| v * kk).sum();
                sym[r * n + r] += Complex64::new(t, 0.0);
            }
            linalg::small_herm_eigen(&sym, n, &mut ws, &mut vals, &mut vecs);
            let block = &mut table[flat * n * n..(flat + 1) * n * n];
            for r in 0..n {
                for c in 0..n {
                    let mut acc = Complex64::default();
                    for j in 0..n {
                        let phase = Complex64::new(0.0, -vals[j] * dt / 2.0).exp();
                        acc += vecs[j * n + r] * phase * vecs[j * n + c].conj();
                    }
                    block[r * n + c] = acc;
                }
            }
            flat += 1;
        });
        HalfStepPropagator { n, table }
    }

    fn apply(&self, spectra: &mut [Vec<Complex64>]) {
        let n = self.n;
        let len = spectra[0].len();
        let mut tmp = vec![Complex64::default(); n];
        for flat in 0..len {
            let block = &self.table[flat * n * n..(flat + 1) * n * n];
            for r in 0..n {
                let mut acc = Complex64::default();
                for c in 0..n {
                    acc += block[r * n + c] * spectra[c][flat];
                }
                tmp[r] = acc;
            }
            for r in 0..n {
                spectra[r][flat] = tmp[r];
            }
        }
    }
}

/// `i N̂(A)` evaluated pseudospectrally (2x padded cubic) from spectra.
fn nonlinear_term(
    model: &CmeModel,
    shape: &[usize],
    spectra: &[Vec<Complex64>],
) -> Vec<Vec<Complex64>> {
    let fine_shape: Vec<usize> = shape.iter().map(|&s| 2 * s).collect();
    let n = model.n();
    let fine: Vec<Vec<Complex64>> = spectra
        .iter()
        .map(|s| {
            let mut f = fourier::resize_spectrum(s, shape, &fine_shape);
            fourier::fft_inverse(&mut f, &fine_shape);
            f
        })
        .collect();
    let mut out: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); fine[0].len()]; n];
    model.gamma.apply_cubic(&fine, &mut out);
    let i = Complex64::new(0.0, 1.0);
    for o in out.iter_mut() {
        o.iter_mut().for_each(|v| *v *= i);
        fourier::fft_forward(o, &fine_shape);
    }
    out.into_iter()
        .map(|o| fourier::resize_spectrum(&o, &fine_shape, shape))
        .collect()
}

fn axpy(y: &mut [Vec<Complex64>], a: Complex64, x: &[Vec<Complex64>]) {
    for (yc, xc) in y.iter_mut().zip(x) {
        for (yv, xv) in yc.iter_mut().zip(xc) {
            *yv += a * xv;
        }
    }
}

/// Largest stable-accuracy step for the cubic term, from the current
/// nonlinearity magnitude.
pub fn cme_dt_max(model: &CmeModel, state: &EnvelopeState) -> f64 {
    let amp = state.field.sup_norm();
    let strength: f64 = (0..model.n())
        .map(|j| {
            model
                .gamma
                .iter()
                .filter(|(&(tj, ..), _)| tj == j)
                .map(|(_, g)| g.norm())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    0.5 / (strength * amp * amp + 1e-12)
}

/// Evolve the envelope system to `t_end` with the integrating-factor RK4.
pub fn evolve_cme(
    model: &CmeModel,
    state: &EnvelopeState,
    dt: f64,
    t_end: f64,
) -> Result<EnvelopeState> {
    if dt <= 0.0 {
        return Err(Error::config("time step must be positive"));
    }
    let dt_max = cme_dt_max(model, state);
    if dt > dt_max {
        return Err(Error::config(format!(
            "dt = {dt} exceeds the nonlinearity-limited step {dt_max:.3e}"
        )));
    }
    let span = t_end - state.time;
    if span < 0.0 {
        return Err(Error::config("t_end lies before the state time"));
    }
    let tail = state.field.spectral_tail_fraction();
    if tail > TAIL_GUARD {
        return Err(Error::resolution(format!(
            "envelope spectral tail fraction {tail:.3e} exceeds {TAIL_GUARD:.0e}; use a larger grid"
        )));
    }
    let grid = state.field.grid.clone();
    let shape = grid.shape.clone();
    let n = model.n();
    let full_steps = (span / dt).floor() as usize;
    let remainder = span - full_steps as f64 * dt;

    let mut spectra: Vec<Vec<Complex64>> = state.field.components.clone();
    for s in spectra.iter_mut() {
        fourier::fft_forward(s, &shape);
    }

    let run_block = |spectra: &mut Vec<Vec<Complex64>>, h: f64, steps: usize| {
        if steps == 0 || h == 0.0 {
            return;
        }
        let e_half = HalfStepPropagator::new(model, &grid, h);
        for _ in 0..steps {
            // Lawson RK4 with the exact unitary linear flow
            let htc = Complex64::new(h, 0.0);
            let k1 = nonlinear_term(model, &shape, spectra);
            let mut stage = spectra.clone();
            axpy(&mut stage, htc * 0.5, &k1);
            e_half.apply(&mut stage);
            let k2 = nonlinear_term(model, &shape, &stage);
            let mut e_psi = spectra.clone();
            e_half.apply(&mut e_psi);
            let mut stage = e_psi.clone();
            axpy(&mut stage, htc * 0.5, &k2);
            let k3 = nonlinear_term(model, &shape, &stage);
            let mut e2_psi = e_psi.clone();
            e_half.apply(&mut e2_psi);
            let mut ek3 = k3.clone();
            e_half.apply(&mut ek3);
            let mut stage = e2_psi.clone();
            axpy(&mut stage, htc, &ek3);
            let k4 = nonlinear_term(model, &shape, &stage);

            // ψ⁺ = E²ψ + h/6 (E²k1 + 2E(k2 + k3) + k4)
            let mut acc = k1;
            e_half.apply(&mut acc);
            e_half.apply(&mut acc);
            let mut mid = k2;
            axpy(&mut mid, Complex64::new(1.0, 0.0), &k3);
            e_half.apply(&mut mid);
            axpy(&mut acc, Complex64::new(2.0, 0.0), &mid);
            axpy(&mut acc, Complex64::new(1.0, 0.0), &k4);
            *spectra = e2_psi;
            axpy(spectra, htc / 6.0, &acc);
        }
    };
    run_block(&mut spectra, dt, full_steps);
    if remainder > 1e-12 * dt.max(1.0) {
        run_block(&mut spectra, remainder, 1);
    }

    let mut field = VectorField::zeros(grid, n);
    for (c, s) in field.components.iter_mut().zip(&spectra) {
        *c = s.clone();
        fourier::fft_inverse(c, &shape);
    }
    let tail = field.spectral_tail_fraction();
    if tail > TAIL_GUARD {
        return Err(Error::resolution(format!(
            "envelope spectral tail grew to {tail:.3e}; use a larger grid"
        )));
    }
    Ok(EnvelopeState { field, time: t_end })
}

// ---------------------------------------------------------------------------
// Gross-Pitaevskii evolution
// ---------------------------------------------------------------------------

/// Geometry and potentials of the fast problem. The box is `[0, 2π·cells)^d`
/// with `points_per_cell` grid points per period.
#[derive(Debug, Clone)]
pub struct GpSetup {
    pub v: PeriodicPotential,
    pub w: PerturbationPotential,
    pub sigma: PeriodicPotential,
    pub eps: f64,
    pub cells: usize,
    pub points_per_cell: usize,
}

impl GpSetup {
    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    pub fn grid(&self) -> Grid {
        let d = self.dim();
        let m = self.cells * self.points_per_cell;
        let step = 2.0 * std::f64::consts::PI / self.points_per_cell as f64;
        Grid::new(vec![m; d], vec![0.0; d], vec![step; d])
    }

    /// The box must hold every perturbation wavevector exactly: each `l^(m)`
    /// a multiple of the fundamental `1/cells`.
    pub fn validate(&self) -> Result<()> {
        if self.cells == 0 || self.points_per_cell == 0 {
            return Err(Error::config("box must have positive extent"));
        }
        for term in self.w.terms() {
            for &l in &term.l {
                let scaled = l * self.cells as f64;
                if (scaled - scaled.round()).abs() > 1e-9 {
                    return Err(Error::config(format!(
                        "perturbation wavevector component {l} is incommensurate with a \
                         {}-cell box; it must be a multiple of 1/{}",
                        self.cells, self.cells
                    )));
                }
            }
        }
        Ok(())
    }

    /// Check that carrier wavevectors sit on the box's dual lattice, and
    /// suggest the nearest compliant box size otherwise.
    pub fn validate_carriers(&self, carriers: &[crate::rational::RationalVec]) -> Result<()> {
        let fits = |cells: usize| {
            carriers.iter().all(|k| {
                k.0.iter()
                    .all(|r| (r * cells as i64).is_integer())
            })
        };
        if fits(self.cells) {
            return Ok(());
        }
        for delta in 1..=16usize {
            for cand in [self.cells.saturating_sub(delta), self.cells + delta] {
                if cand > 0 && fits(cand) {
                    return Err(Error::config(format!(
                        "carrier wavevectors are not representable on a {}-cell box; \
                         the nearest compliant size is {} cells",
                        self.cells, cand
                    )));
                }
            }
        }
        Err(Error::config(format!(
            "carrier wavevectors are not representable on a {}-cell box",
            self.cells
        )))
    }
}

/// Fast-field state.
#[derive(Debug, Clone)]
pub struct GpState {
    pub field: ScalarField,
    pub time: f64,
}

/// Discrete mass `Σ |u|² · cell volume`.
pub fn gp_mass(state: &GpState) -> f64 {
    let vol: f64 = state.field.grid.step.iter().product();
    util::norm_sq(&state.field.data) * vol
}

/// Strang split-step Fourier evolution of the Gross-Pitaevskii field:
/// half-step pointwise phase for potential plus nonlinearity, full kinetic
/// step in Fourier space.
pub fn evolve_gp(setup: &GpSetup, state: &GpState, dt: f64, t_end: f64) -> Result<GpState> {
    if dt <= 0.0 {
        return Err(Error::config("time step must be positive"));
    }
    setup.validate()?;
    let span = t_end - state.time;
    if span < 0.0 {
        return Err(Error::config("t_end lies before the state time"));
    }
    let grid = state.field.grid.clone();
    let shape = grid.shape.clone();
    let d = grid.dim();

    // static tables: total potential and kinetic phases
    let mut vtot = vec![0.0f64; grid.len()];
    let mut sig = vec![0.0f64; grid.len()];
    {
        let mut flat = 0usize;
        util::for_each_multi_index(&shape, |_, idx| {
            let x = grid.point(idx);
            vtot[flat] = setup.v.eval(&x) + setup.eps * setup.w.eval(&x);
            sig[flat] = setup.sigma.eval(&x);
            flat += 1;
        });
    }
    let waves: Vec<Vec<f64>> = (0..d).map(|ax| grid.wavenumbers(ax)).collect();
    let kinetic_phase = |h: f64| -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); grid.len()];
        let mut flat = 0usize;
        util::for_each_multi_index(&shape, |_, idx| {
            let k2: f64 = (0..d).map(|ax| waves[ax][idx[ax]].powi(2)).sum();
            out[flat] = Complex64::new(0.0, -k2 * h).exp();
            flat += 1;
        });
        out
    };

    let mut u = state.field.data.clone();
    let step_block = |u: &mut Vec<Complex64>, h: f64, steps: usize| {
        if steps == 0 || h == 0.0 {
            return;
        }
        let kin = kinetic_phase(h);
        for _ in 0..steps {
            for i in 0..u.len() {
                let phase = -(vtot[i] + sig[i] * u[i].norm_sqr()) * h / 2.0;
                u[i] *= Complex64::new(0.0, phase).exp();
            }
            fourier::fft_forward(u, &shape);
            for (v, k) in u.iter_mut().zip(&kin) {
                *v *= k;
            }
            fourier::fft_inverse(u, &shape);
            for i in 0..u.len() {
                let phase = -(vtot[i] + sig[i] * u[i].norm_sqr()) * h / 2.0;
                u[i] *= Complex64::new(0.0, phase).exp();
            }
        }
    };
    let full_steps = (span / dt).floor() as usize;
    let remainder = span - full_steps as f64 * dt;
    step_block(&mut u, dt, full_steps);
    if remainder > 1e-12 * dt.max(1.0) {
        step_block(&mut u, remainder, 1);
    }
    Ok(GpState {
        field: ScalarField { grid, data: u },
        time: t_end,
    })
}

// ---------------------------------------------------------------------------
// wave-packet assembly
// ---------------------------------------------------------------------------

/// Sample a Bloch mode exactly on one periodicity cell of the fast grid
/// (direct summation over coefficients; no aliasing).
fn mode_on_cell(mode: &BlochMode, points_per_cell: usize) -> Vec<Complex64> {
    let d = mode.dim();
    let shape = vec![points_per_cell; d];
    let mut out = vec![Complex64::default(); points_per_cell.pow(d as u32)];
    let step = 2.0 * std::f64::consts::PI / points_per_cell as f64;
    util::for_each_multi_index(&shape, |flat, idx| {
        let x: Vec<f64> = idx.iter().map(|&i| i as f64 * step).collect();
        let mut acc = Complex64::default();
        for (cf, &c) in mode.coeffs.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let eta = bloch::eta_at(cf, mode.cutoff, d);
            let ph: f64 = eta.iter().zip(&x).map(|(&e, &xi)| e as f64 * xi).sum();
            acc += c * Complex64::new(ph.cos(), ph.sin());
        }
        out[flat] = acc;
    });
    out
}

/// Assemble the wave packet
/// `u(x,t) = √ε Σ_j A_j(εx, εt) p_j(x) e^{i(k_j·x - ω₀ t)}`
/// on the fast grid, Fourier-interpolating the envelopes onto it.
pub fn assemble_uapp(
    carriers: &CarrierSet,
    envelope: &EnvelopeState,
    eps: f64,
    setup: &GpSetup,
    t: f64,
) -> Result<ScalarField> {
    let fast = setup.grid();
    let d = fast.dim();
    let n = carriers.n();
    if envelope.field.ncomp() != n {
        return Err(Error::config("envelope component count does not match carriers"));
    }
    // the slow box must be the ε-scaled fast box
    let slow = &envelope.field.grid;
    for ax in 0..d {
        let expect = eps * fast.axis_len(ax);
        if (slow.axis_len(ax) - expect).abs() > 1e-9 * expect {
            return Err(Error::config(format!(
                "slow box length {} does not match ε × fast box {}",
                slow.axis_len(ax),
                expect
            )));
        }
    }
    if (envelope.time - eps * t).abs() > 1e-9 * (1.0 + envelope.time.abs()) {
        return Err(Error::config(format!(
            "envelope time {} is not ε·t = {}",
            envelope.time,
            eps * t
        )));
    }
    setup.validate_carriers(&carriers.wavevectors())?;

    // Fourier-upsample each envelope to the fast resolution
    let fast_shape = fast.shape.clone();
    let slow_shape = slow.shape.clone();
    let ups: Vec<Vec<Complex64>> = envelope
        .field
        .components
        .iter()
        .map(|c| {
            let mut spec = c.clone();
            fourier::fft_forward(&mut spec, &slow_shape);
            let mut up = fourier::resize_spectrum(&spec, &slow_shape, &fast_shape);
            fourier::fft_inverse(&mut up, &fast_shape);
            up
        })
        .collect();

    let p_cells: Vec<Vec<Complex64>> = carriers
        .modes
        .iter()
        .map(|m| mode_on_cell(m, setup.points_per_cell))
        .collect();
    // separable carrier phases e^{i k_j,ax · x_ax}
    let phases: Vec<Vec<Vec<Complex64>>> = carriers
        .modes
        .iter()
        .map(|m| {
            let kf = m.k.to_f64();
            (0..d)
                .map(|ax| {
                    (0..fast.shape[ax])
                        .map(|i| {
                            let x = i as f64 * fast.step[ax];
                            Complex64::new((kf[ax] * x).cos(), (kf[ax] * x).sin())
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let omega0 = carriers.omega0;
    let time_phase = Complex64::new(0.0, -omega0 * t).exp();
    let scale = eps.sqrt();
    let ppc = setup.points_per_cell;
    let mut out = ScalarField::zeros(fast.clone());
    util::for_each_multi_index(&fast_shape, |flat, idx| {
        let mut acc = Complex64::default();
        for j in 0..n {
            let mut cell_flat = 0usize;
            let mut carrier = Complex64::new(1.0, 0.0);
            for ax in 0..d {
                cell_flat = cell_flat * ppc + (idx[ax] % ppc);
                carrier *= phases[j][ax][idx[ax]];
            }
            acc += ups[j][flat] * p_cells[j][cell_flat] * carrier;
        }
        out.data[flat] = scale * acc * time_phase;
    });
    Ok(out)
}

// ---------------------------------------------------------------------------
// error-scaling study
// ---------------------------------------------------------------------------

/// Initial envelope shapes for the study.
#[derive(Debug, Clone, Copy)]
pub enum EnvelopeInit {
    /// `A_j(X, 0) = amp · e^{-|X|²/width²}` for every component.
    Gaussian { amp: f64, width: f64 },
}

impl EnvelopeInit {
    pub fn build(&self, grid: &Grid, n: usize) -> VectorField {
        match *self {
            EnvelopeInit::Gaussian { amp, width } => {
                let mut f = VectorField::zeros(grid.clone(), n);
                let g = grid.clone();
                // center of the periodic box
                let center: Vec<f64> = (0..g.dim())
                    .map(|ax| g.origin[ax] + 0.5 * g.axis_len(ax))
                    .collect();
                let mut flat = 0usize;
                util::for_each_multi_index(&g.shape, |_, idx| {
                    let x = g.point(idx);
                    let r2: f64 = x
                        .iter()
                        .zip(&center)
                        .map(|(xi, ci)| (xi - ci) * (xi - ci))
                        .sum();
                    let v = Complex64::new(amp * (-r2 / (width * width)).exp(), 0.0);
                    for c in f.components.iter_mut() {
                        c[flat] = v;
                    }
                    flat += 1;
                });
                f
            }
        }
    }
}

/// Configuration of the approximation-error study.
pub struct ScalingConfig {
    pub carriers: CarrierSet,
    pub model: CmeModel,
    pub v: PeriodicPotential,
    pub w: PerturbationPotential,
    pub sigma: PeriodicPotential,
    pub eps_list: Vec<f64>,
    pub t0: f64,
    pub cells: usize,
    pub points_per_cell: usize,
    pub slow_points: usize,
    pub dt_gp: f64,
    pub dt_cme: f64,
    pub init: EnvelopeInit,
    /// Number of equispaced sample times in `[0, ε⁻¹ T₀]` (11 by default).
    pub samples: usize,
}

/// One run of the study.
#[derive(Debug, Clone)]
pub struct ScalingRow {
    pub eps: f64,
    pub sup_error: f64,
    pub included: bool,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `log(error)` against `log(ε)`.
    pub slope: f64,
    /// Largest error recorded at t = 0 (must vanish by construction).
    pub initial_error: f64,
}

/// Run the study: for each ε evolve the GP field from `u^app(·, 0)` to
/// `t = ε⁻¹T₀` and the envelopes to `T = T₀`, recording the sup-norm error
/// over the sample times, then fit the scaling exponent.
pub fn error_scaling_study(cfg: &ScalingConfig) -> Result<ScalingReport> {
    if cfg.eps_list.len() < 3 {
        return Err(Error::config("need at least three ε values for a slope"));
    }
    if cfg.t0 <= 0.0 {
        return Err(Error::config("T₀ must be positive"));
    }
    let d = cfg.carriers.dim();
    let mut rows = Vec::new();
    let mut initial_error: f64 = 0.0;
    for &eps in &cfg.eps_list {
        let setup = GpSetup {
            v: cfg.v.clone(),
            w: cfg.w.clone(),
            sigma: cfg.sigma.clone(),
            eps,
            cells: cfg.cells,
            points_per_cell: cfg.points_per_cell,
        };
        setup.validate()?;
        setup.validate_carriers(&cfg.model.carriers)?;
        let fast = setup.grid();
        let slow = Grid::new(
            vec![cfg.slow_points; d],
            vec![0.0; d],
            (0..d)
                .map(|ax| eps * fast.axis_len(ax) / cfg.slow_points as f64)
                .collect(),
        );
        let a0 = cfg.init.build(&slow, cfg.model.n());
        // localized envelopes must decay at the slow-box edge
        let boundary = a0.boundary_sup();
        let peak = a0.sup_norm();
        if boundary > 1e-5 * peak {
            return Err(Error::resolution(format!(
                "initial envelope reaches the slow-box edge at ε = {eps} \
                 (boundary/peak = {:.2e}); enlarge the box",
                boundary / peak
            )));
        }
        let mut env = EnvelopeState { field: a0, time: 0.0 };
        let u0 = assemble_uapp(&cfg.carriers, &env, eps, &setup, 0.0)?;
        let mass0 = util::norm_sq(&u0.data);
        let mut gp = GpState { field: u0, time: 0.0 };

        // t = 0: identical assembly on both sides, so the error vanishes
        let uapp0 = assemble_uapp(&cfg.carriers, &env, eps, &setup, 0.0)?;
        let err0 = gp
            .field
            .data
            .iter()
            .zip(&uapp0.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        initial_error = initial_error.max(err0);

        let t_final = cfg.t0 / eps;
        let mut sup_err = err0;
        let mut note = String::new();
        let mut included = true;
        for s in 1..cfg.samples {
            let t_s = t_final * s as f64 / (cfg.samples - 1) as f64;
            gp = evolve_gp(&setup, &gp, cfg.dt_gp, t_s)?;
            env = match evolve_cme(&cfg.model, &env, cfg.dt_cme, eps * t_s) {
                Ok(e) => e,
                Err(Error::Resolution(msg)) => {
                    included = false;
                    note = format!("excluded: {msg}");
                    break;
                }
                Err(e) => return Err(e),
            };
            let uapp = assemble_uapp(&cfg.carriers, &env, eps, &setup, t_s)?;
            let err = gp
                .field
                .data
                .iter()
                .zip(&uapp.data)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0f64, f64::max);
            sup_err = sup_err.max(err);
            // mass guard on the GP run
            let mass = util::norm_sq(&gp.field.data);
            if (mass - mass0).abs() > 1e-8 * mass0 * (1.0 + t_s) {
                included = false;
                note = format!("excluded: mass drift {:.3e} at t = {t_s:.3}", (mass - mass0) / mass0);
                break;
            }
        }
        rows.push(ScalingRow { eps, sup_error: sup_err, included, note });
    }
    // least-squares fit over the included rows
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.included && r.sup_error > 0.0)
        .map(|r| (r.eps.ln(), r.sup_error.ln()))
        .collect();
    if pts.len() < 2 {
        let notes: Vec<String> = rows
            .iter()
            .map(|r| format!("ε = {}: {}", r.eps, if r.included { "ok" } else { &r.note }))
            .collect();
        return Err(Error::numerical(format!(
            "too few included runs to fit a slope ({})",
            notes.join("; ")
        )));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(ScalingReport { rows, slope, initial_error })
}
