use gapsol_core::cme::{self, CarrierSet};
use gapsol_core::dynamics::*;
use gapsol_core::potential::*;
use gapsol_core::rational::RationalVec;
use gapsol_core::grid::Grid;
use gapsol_core::util;

fn run_case(name: &str, carriers: CarrierSet, w: PerturbationPotential, sigma: PeriodicPotential, v: PeriodicPotential, eps: f64, t0: f64) {
    let model = cme::assemble_model(&carriers, &w, &sigma).unwrap();
    println!("--- {name}: N = {}, omega0 = {:.6}", model.n(), carriers.omega0);
    for j in 0..model.n() {
        println!("  vg[{j}] = {:?}", model.vg[j]);
    }
    println!("  kappa = {:?}", model.kappa.iter().map(|v| (v.re*1e4).round()/1e4).collect::<Vec<_>>());
    for (k, g) in model.gamma.iter() { println!("  gamma{:?} = {:.4} {:+.1e}i", k, g.re, g.im); }
    let setup = GpSetup { v, w, sigma, eps, cells: 20, points_per_cell: 8 };
    let fast = setup.grid();
    let slow = Grid::new(vec![160; 2], vec![0.0; 2],
        (0..2).map(|ax| eps * fast.axis_len(ax) / 160.0).collect());
    let a0 = EnvelopeInit::Gaussian { amp: 1.0 }.build(&slow, model.n());
    let mut env = EnvelopeState { field: a0, time: 0.0 };
    let u0 = assemble_uapp(&carriers, &env, eps, &setup, 0.0).unwrap();
    let mut gp = GpState { field: u0, time: 0.0 };
    let tf = t0 / eps;
    for s in 1..=4 {
        let ts = tf * s as f64 / 4.0;
        gp = evolve_gp(&setup, &gp, 1e-3, ts).unwrap();
        env = evolve_cme(&model, &env, 1e-3, eps * ts).unwrap();
        let uapp = assemble_uapp(&carriers, &env, eps, &setup, ts).unwrap();
        let err = gp.field.data.iter().zip(&uapp.data).map(|(a, b)| (a - b).norm()).fold(0.0f64, f64::max);
        let gp_sup = util::sup_norm(&gp.field.data);
        println!("  t = {ts:7.3}: sup err = {err:.4e}  (|u| sup {gp_sup:.4})");
    }
}

fn main() {
    let v = PeriodicPotential::cosine_product(2, 1.0);
    let eps = 0.1;
    let t0 = 0.25;
    // (a) single carrier, no W, no sigma: transport only

    // (b) two carriers + W, no sigma: kappa only
    for amp in [2.0f64, 1.0, 0.5] {
        let w = PerturbationPotential::cosine(2, vec![0.5, 0.0], amp).unwrap().with_constant(amp / 2.0).unwrap();
        let c2 = CarrierSet::from_potential(&v, &[
            (1, RationalVec::parse("1/4 0").unwrap()),
            (1, RationalVec::parse("-1/4 0").unwrap())], 8, 1e-6).unwrap();
        run_case(&format!("kappa only, W amp {amp}"), c2, w, PeriodicPotential::zero(2), v.clone(), eps, t0);
    }
    let c2b = CarrierSet::from_potential(&v, &[
        (1, RationalVec::parse("1/4 0").unwrap()),
        (1, RationalVec::parse("-1/4 0").unwrap())], 8, 1e-6).unwrap();
    run_case("two carriers, no W", c2b, PerturbationPotential::zero(2), PeriodicPotential::zero(2), v.clone(), eps, t0);
    // (c) single carrier + sigma, no W: gamma only

}
