//! Refinement study of the equality case on the Gaussian soliton: both
//! second-order entropy residuals decay at second order under joint
//! (h, dt) refinement.
//!
//! Run: `cargo run -p wentropy-core --example soliton_refinement --release`

use wentropy_core::entropy::{h_entropy_curve, second_order_lhs, EntropyCoefficients};
use wentropy_core::geometry::{
    gaussian_datum, normalize_datum, CompatibilityMode, EffectiveDim, FlowScenario, MetricFamily,
    PotentialFamily, PotentialKind,
};
use wentropy_core::grid::GridSpec;
use wentropy_core::operators::propagator::HeatPropagator;

fn main() {
    let kappa = 1.0f64;
    let half_width = 8.0;
    for n in [64usize, 128, 256, 512] {
        let grid: GridSpec<f64> = GridSpec::euclidean_box(1, n, half_width).unwrap();
        let pot = PotentialFamily {
            base: PotentialKind::Quadratic { kappa, normalized: true },
            mode: CompatibilityMode::Free,
        };
        let mut datum = gaussian_datum(&grid, 0.9, [0.4, 0.0]);
        let mu = wentropy_core::geometry::measure_weights(
            &grid,
            &MetricFamily::StaticEuclidean,
            &pot,
            0.0,
        )
        .unwrap();
        normalize_datum(&mut datum, &mu);
        let t_grid: Vec<f64> = (0..21).map(|i| 0.15 + 0.025 * i as f64).collect();
        let scenario = FlowScenario::new(
            grid,
            MetricFamily::StaticEuclidean,
            pot,
            kappa,
            EffectiveDim::Infinite,
            t_grid,
            datum,
        )
        .unwrap();
        let prop = HeatPropagator::new(&scenario);
        let curve = h_entropy_curve(&scenario, &prop).unwrap();
        let coeffs = EntropyCoefficients::new(kappa);
        let mut worst_kk2 = 0.0f64;
        let mut worst_w = 0.0f64;
        for i in 4..curve.t.len() - 4 {
            let t = curve.t[i];
            let lhs = second_order_lhs(&curve, i).unwrap();
            let scale = 2.0 * coeffs.d(t) * curve.hessian_integral[i];
            worst_kk2 = worst_kk2.max((lhs / scale).abs());
            let pref = coeffs.w_prefactor(t);
            let w_resid = curve.dw_fd[i] + pref * curve.hessian_integral[i];
            worst_w = worst_w.max((w_resid / (pref * curve.hessian_integral[i])).abs());
        }
        println!(
            "n = {n:4}  h = {:.5}  rel_kk2 = {worst_kk2:.3e}  rel_w = {worst_w:.3e}",
            16.0 / n as f64
        );
    }
}
