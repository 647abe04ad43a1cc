use gapsol_core::cme::{self, CarrierSet};
use gapsol_core::dynamics::*;
use gapsol_core::potential::*;
use gapsol_core::rational::RationalVec;
use gapsol_core::grid::Grid;

fn main() {
    let v = PeriodicPotential::cosine_product(2, 1.0);
    let t0 = 0.5;
    let mut pts = Vec::new();
    for eps in [0.15f64, 0.1, 0.067] {
        let carriers = CarrierSet::from_potential(&v, &[(1, RationalVec::parse("1/4 0").unwrap())], 8, 1e-6).unwrap();
        let model = cme::assemble_model(&carriers, &PerturbationPotential::zero(2), &PeriodicPotential::zero(2)).unwrap();
        let setup = GpSetup { v: v.clone(), w: PerturbationPotential::zero(2), sigma: PeriodicPotential::zero(2), eps, cells: 36, points_per_cell: 8 };
        let fast = setup.grid();
        let slow = Grid::new(vec![144; 2], vec![0.0; 2], (0..2).map(|ax| eps * fast.axis_len(ax) / 144.0).collect());
        let a0 = EnvelopeInit::Gaussian { amp: 0.5, width: 2.0 }.build(&slow, 1);
        let mut env = EnvelopeState { field: a0, time: 0.0 };
        let u0 = assemble_uapp(&carriers, &env, eps, &setup, 0.0).unwrap();
        let mut gp = GpState { field: u0, time: 0.0 };
        let tf = t0 / eps;
        let mut sup_err = 0.0f64;
        for s in 1..=5 {
            let ts = tf * s as f64 / 5.0;
            gp = evolve_gp(&setup, &gp, 1e-3, ts).unwrap();
            env = evolve_cme(&model, &env, 1e-3, eps * ts).unwrap();
            let uapp = assemble_uapp(&carriers, &env, eps, &setup, ts).unwrap();
            let err = gp.field.data.iter().zip(&uapp.data).map(|(a, b)| (a - b).norm()).fold(0.0f64, f64::max);
            sup_err = sup_err.max(err);
        }
        println!("eps {eps}: sup err {sup_err:.5e}");
        pts.push((eps.ln(), sup_err.ln()));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    println!("transport-only slope = {:.3}", (n * sxy - sx * sy) / (n * sxx - sx * sx));
}
