//! Margin survey: the five semigroup inequalities and the entropy
//! monotonicity statements on three super-flow scenarios, plus the
//! near-eigen detection of a deliberately violating flow.
//!
//! Run: `cargo run -p wentropy-core --example superflow_margins --release`

use wentropy_core::entropy::{h_entropy_curve, EntropyCoefficients};
use wentropy_core::geometry::curvature::residual_floor;
use wentropy_core::geometry::{
    gaussian_datum, normalize_datum, CompatibilityMode, EffectiveDim, FlowScenario, MetricFamily,
    PotentialFamily, PotentialKind, TrigTerm,
};
use wentropy_core::grid::GridSpec;
use wentropy_core::inequalities::{
    gradient_estimate_check, margin_slack, theorem_suite, GeneratorKind, TestFamily,
};
use wentropy_core::operators::propagator::HeatPropagator;

fn curve_stats(scenario: &FlowScenario<f64>) {
    let prop = HeatPropagator::new(scenario);
    let curve = h_entropy_curve(scenario, &prop).unwrap();
    let coeffs = EntropyCoefficients::new(scenario.k);
    let mut max_dh = f64::NEG_INFINITY;
    let mut max_wres = f64::NEG_INFINITY;
    for i in 2..curve.t.len() - 2 {
        max_dh = max_dh.max(curve.dh_fd[i]);
        let pref = coeffs.w_prefactor(curve.t[i]);
        max_wres = max_wres.max(curve.dw_fd[i] + pref * curve.hessian_integral[i]);
    }
    println!("  max dH/dt = {max_dh:.3e}   max (dW/dt + pref*hess) = {max_wres:.3e}");
}

fn suite(scenario: &FlowScenario<f64>, family: &TestFamily<f64>, pairs: &[(f64, f64)]) {
    let prop = HeatPropagator::new(scenario);
    let h = scenario.grid.h();
    for &(s, t) in pairs {
        let reports = theorem_suite(scenario, &prop, s, t, family, 1.0).unwrap();
        print!("  (s,t)=({s},{t}): ");
        for r in &reports {
            print!("{}: {:.2e} ", r.id, r.min_margin);
        }
        println!("   [h² = {:.2e}]", h * h);
    }
}

fn main() {
    // (a) static OU soliton, K = 1
    let grid: GridSpec<f64> = GridSpec::euclidean_box(1, 256, 8.0).unwrap();
    let pot = PotentialFamily {
        base: PotentialKind::Quadratic { kappa: 1.0, normalized: true },
        mode: CompatibilityMode::Free,
    };
    let mut datum = gaussian_datum(&grid, 0.9, [0.4, 0.0]);
    let mu =
        wentropy_core::geometry::measure_weights(&grid, &MetricFamily::StaticEuclidean, &pot, 0.0)
            .unwrap();
    normalize_datum(&mut datum, &mu);
    let t_grid: Vec<f64> = (0..16).map(|i| 0.1 + 0.05 * i as f64).collect();
    let ou = FlowScenario::new(
        grid,
        MetricFamily::StaticEuclidean,
        pot,
        1.0,
        EffectiveDim::Infinite,
        t_grid.clone(),
        datum,
    )
    .unwrap();
    println!("(a) OU soliton:");
    suite(
        &ou,
        &TestFamily::new(GeneratorKind::GaussianBumps, 50, 1001),
        &[(0.0, 0.25), (0.05, 0.3)],
    );
    curve_stats(&ou);

    // (b) isotropic scaling with compensated potential, K from the residual
    let grid: GridSpec<f64> = GridSpec::torus(1, 256).unwrap();
    let datum = grid.sample(|x| (0.3 * x[0].cos()).exp());
    let mk_scaling = |k: f64, datum: Vec<f64>| {
        FlowScenario::new(
            GridSpec::torus(1, 256).unwrap(),
            MetricFamily::IsotropicScaling { lambda: 0.2 },
            PotentialFamily {
                base: PotentialKind::TrigSum {
                    terms: vec![TrigTerm { amplitude: 0.3, freq: [1, 0], phase: 0.0 }],
                },
                mode: CompatibilityMode::FixedMeasure,
            },
            k,
            EffectiveDim::Infinite,
            (0..16).map(|i| 0.1 + 0.05 * i as f64).collect(),
            datum,
        )
        .unwrap()
    };
    let probe = mk_scaling(0.0, datum.clone());
    let floor = residual_floor(&probe, EffectiveDim::Infinite, 0.0, 25).unwrap();
    let k_b = floor - 1e-3;
    println!("(b) scaling flow: measured K = {k_b:.6}");
    let scaling = mk_scaling(k_b, datum);
    suite(
        &scaling,
        &TestFamily::new(GeneratorKind::RandomTrig, 50, 1002),
        &[(0.0, 0.25), (0.05, 0.3)],
    );
    curve_stats(&scaling);

    // (c) 2-D conformal flow, K from the residual
    let mk_conformal = |k: f64| {
        let grid: GridSpec<f64> = GridSpec::torus(2, 48).unwrap();
        let datum = grid.sample(|x| (0.3 * x[0].cos()).exp());
        FlowScenario::new(
            grid,
            MetricFamily::Conformal2d { amplitude: 0.05, freq: [1, 0], phase: 0.0, decay: 1.0 },
            PotentialFamily {
                base: PotentialKind::TrigSum {
                    terms: vec![
                        TrigTerm { amplitude: 0.2, freq: [1, 0], phase: 0.0 },
                        TrigTerm { amplitude: 0.1, freq: [0, 1], phase: 0.0 },
                    ],
                },
                mode: CompatibilityMode::FixedMeasure,
            },
            k,
            EffectiveDim::Infinite,
            (0..16).map(|i| 0.1 + 0.05 * i as f64).collect(),
            datum,
        )
        .unwrap()
    };
    let probe = mk_conformal(0.0);
    let floor = residual_floor(&probe, EffectiveDim::Infinite, 0.0, 25).unwrap();
    let k_c = floor - 1e-3;
    println!("(c) conformal flow: measured K = {k_c:.6}");
    let conformal = mk_conformal(k_c);
    suite(
        &conformal,
        &TestFamily::new(GeneratorKind::RandomTrig, 50, 1003),
        &[(0.0, 0.25), (0.1, 0.35)],
    );
    curve_stats(&conformal);

    // violating flow detection
    let grid: GridSpec<f64> = GridSpec::torus(1, 256).unwrap();
    let violating = FlowScenario::new(
        grid.clone(),
        MetricFamily::StaticEuclidean,
        PotentialFamily {
            base: PotentialKind::TrigSum {
                terms: vec![TrigTerm { amplitude: 0.5, freq: [1, 0], phase: 0.0 }],
            },
            mode: CompatibilityMode::Free,
        },
        0.0,
        EffectiveDim::Infinite,
        (0..16).map(|i| 0.1 + 0.05 * i as f64).collect(),
        vec![1.0; 256],
    )
    .unwrap();
    let prop = HeatPropagator::new(&violating);
    let family = TestFamily::new(GeneratorKind::NearEigen, 8, 7);
    for tau in [1e-3, 1e-2] {
        let report = gradient_estimate_check(&violating, &prop, 0.0, tau, &family, 1.0).unwrap();
        let slack = margin_slack(&grid, 1.0, family.amplitude_scale());
        println!(
            "violating, tau={tau:.0e}: min margin = {:.3e} (slack {slack:.3e}, detected: {})",
            report.min_margin,
            !report.pass
        );
    }
    let reports = theorem_suite(&violating, &prop, 0.0, 1e-2, &family, 1.0).unwrap();
    print!("violating full suite at tau=1e-2: ");
    for r in &reports {
        print!("{}: {:.2e} ", r.id, r.min_margin);
    }
    println!();
}
