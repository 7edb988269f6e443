use aml_core::engine::*;
use aml_core::models::msm::{msm_simulate, MsmModel, MsmParams};
use aml_core::numerics::optim::{levenberg_marquardt, OptimConfig};
use aml_core::numerics::rng::RngStream;

#[test]
#[ignore]
fn msm_k_profile() {
    let truth = MsmParams::new(1.5, 0.4, 5.0, 0.01, 4).unwrap();
    let t = 2000;
    let mut stream = RngStream::new(900, 0);
    let returns = msm_simulate(&truth, t, &mut stream);
    let model = MsmModel::default();
    let data = Dataset::series(returns);
    let beta = constrained_fit(&model, &data, &Default::default()).unwrap();
    println!("beta = {:?}", beta.values());
    let bank = SimBank::new(900, 0, 50, t);
    let matcher = ScoreMatch::new(&model, &data, &beta, &bank).unwrap();

    let zeta0 = beta.values().to_vec();
    for k in 2..=9 {
        let mut th = zeta0.clone();
        th[4] = k as f64;
        let c_fixed = matcher.criterion(&th).unwrap();
        // one-ish Gauss-Newton pass over zeta at this k
        let resid = |z: &[f64]| {
            let full = vec![z[0], z[1], z[2], z[3], k as f64];
            matcher.residuals(&full)
        };
        let cfg = OptimConfig { max_iters: 3, ..OptimConfig::for_simulated() };
        let bounds = vec![(1.0 + 1e-6, 2.0 - 1e-6), (1e-4, 1.0), (1.0 + 1e-4, 60.0), (1e-6, 10.0)];
        let out = levenberg_marquardt(
            resid,
            &[zeta0[0], zeta0[1], zeta0[2], zeta0[3]],
            &bounds,
            &cfg,
        )
        .unwrap();
        println!(
            "k = {k}: criterion(zeta-hat) = {c_fixed:.5e}  after 3 GN iters = {:.5e}  zeta = [{:.3}, {:.3}, {:.2}, {:.5}]",
            out.f, out.x[0], out.x[1], out.x[2], out.x[3]
        );
    }
}
