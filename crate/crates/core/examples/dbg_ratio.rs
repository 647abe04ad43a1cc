use gapsol_core::io::model_format;
use gapsol_core::nls_seed::{self, ContinuationOptions};
use gapsol_core::dispersion;
use gapsol_core::grid::Grid;
use gapsol_core::petviashvili;
use std::path::Path;

fn main() {
    let base = model_format::load_model(Path::new("/tmp/gapsol_smoke/ex41_model.txt")).unwrap();
    // asymmetric couplings: generic case without the extra cancellations
    let c = |x: f64| num_complex::Complex64::new(x, 0.0);
    let kappa = dispersion::n4_symmetric_kappa(c(3.0), c(1.2), c(0.8));
    let model = gapsol_core::cme::CmeModel::new(base.vg.clone(), kappa, base.gamma.clone(), base.carriers.clone()).unwrap();
    let edge = dispersion::band_edge(&model, 2, &[0.0, 0.0], 1e-3).unwrap();
    let problem = nls_seed::effective_nls_coeffs(&model, &edge, 1.0).unwrap();
    let profile = nls_seed::shoot_radial(&problem.radial_problem()).unwrap();
    let target = Grid::centered(2, 256, 60.0);
    let mut residuals = Vec::new();
    for eps in [0.2f64, 0.1] {
        let copts = ContinuationOptions { grid_points: 256, domain_half: Some(eps * 60.0), ..Default::default() };
        let cf = nls_seed::continue_anisotropy(&profile, &problem, copts).unwrap();
        let omega = edge.omega_star + eps * eps;
        let frozen = nls_seed::build_cme_ansatz(&cf, &edge, eps, &target).unwrap();
        let rf = petviashvili::stationary_residual(&model, omega, &frozen);
        let tracked = nls_seed::build_cme_ansatz_tracked(&cf, &edge, eps, &target, &model).unwrap();
        let rt = petviashvili::stationary_residual(&model, omega, &tracked);
        println!("eps {eps}: frozen {rf:.4e}  tracked {rt:.4e}");
        residuals.push((rf, rt));
    }
    println!("frozen ratio  = {:.3}", residuals[0].0 / residuals[1].0);
    println!("tracked ratio = {:.3}", residuals[0].1 / residuals[1].1);
}
