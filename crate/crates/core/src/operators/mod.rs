//! Discrete Witten Laplacian in divergence form, plus the Bochner / Γ₂
//! machinery built on it.
//!
//! The operator is assembled from edge conductances
//! `κ_e = e^{-φ} γ^{(n-2)/2} h^{n-2}` evaluated at edge midpoints, acting as
//! `(Lu)_i = (1/w_i) Σ_{e∋i} κ_e (u_j - u_i)` against the node weights
//! `w_i = e^{-φ} γ^{n/2} h^n`. Self-adjointness in `⟨·,·⟩_μ`, zero row sums
//! and the integration-by-parts identity are then exact by construction.

pub mod fields;
pub mod propagator;
pub mod solver;

use crate::error::Result;
use crate::geometry::{EffectiveDim, FlowScenario, MetricAt};
use crate::grid::GridSpec;
use crate::scalar::Scalar;
use fields::{grad_inner, gradient, gradient_sq, metric_hessian};

/// Discrete Witten Laplacian at a fixed time.
pub struct WittenOperator<S> {
    /// Time tag of the assembly.
    pub time: S,
    /// μ-weights of the nodes.
    pub weights: Vec<S>,
    /// `cond[axis][i]`: conductance of the edge from `i` to its `+1` neighbor
    /// along `axis`; zero at box walls.
    cond: [Vec<S>; 2],
    /// `neigh[axis][i]`: that neighbor's index (`usize::MAX` at walls).
    neigh: [Vec<usize>; 2],
    dim: usize,
}

impl<S: Scalar> WittenOperator<S> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Visits every edge as `(i, j, κ_e)`.
    pub fn for_each_edge(&self, mut f: impl FnMut(usize, usize, S)) {
        for axis in 0..self.dim {
            for (i, (&kappa, &j)) in self.cond[axis].iter().zip(&self.neigh[axis]).enumerate() {
                if j != usize::MAX {
                    f(i, j, kappa);
                }
            }
        }
    }

    pub fn apply_into(&self, u: &[S], out: &mut [S]) {
        for o in out.iter_mut() {
            *o = S::zero();
        }
        for axis in 0..self.dim {
            for (i, (&kappa, &j)) in self.cond[axis].iter().zip(&self.neigh[axis]).enumerate() {
                if j != usize::MAX {
                    let flux = kappa * (u[j] - u[i]);
                    out[i] = out[i] + flux;
                    out[j] = out[j] - flux;
                }
            }
        }
        for (o, w) in out.iter_mut().zip(&self.weights) {
            *o = *o / *w;
        }
    }

    pub fn apply(&self, u: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); u.len()];
        self.apply_into(u, &mut out);
        out
    }

    /// Dirichlet form `Σ_e κ_e (u_j - u_i)(v_j - v_i) = ⟨∇u, ∇v⟩_μ = -⟨Lu, v⟩_μ`.
    pub fn dirichlet(&self, u: &[S], v: &[S]) -> S {
        let mut acc = S::zero();
        self.for_each_edge(|i, j, kappa| {
            acc = acc + kappa * (u[j] - u[i]) * (v[j] - v[i]);
        });
        acc
    }

    /// `⟨u, v⟩_μ`.
    pub fn mu_inner(&self, u: &[S], v: &[S]) -> S {
        u.iter().zip(v).zip(&self.weights).map(|((ui, vi), wi)| *ui * *vi * *wi).sum()
    }

    pub fn mu_norm(&self, u: &[S]) -> S {
        self.mu_inner(u, u).sqrt()
    }

    /// Diagonal of `-L` (used by the iterative solver preconditioner):
    /// `Σ_{e∋i} κ_e / w_i`.
    pub fn neg_diagonal(&self) -> Vec<S> {
        let mut diag = vec![S::zero(); self.len()];
        self.for_each_edge(|i, j, kappa| {
            diag[i] = diag[i] + kappa;
            diag[j] = diag[j] + kappa;
        });
        for (d, w) in diag.iter_mut().zip(&self.weights) {
            *d = *d / *w;
        }
        diag
    }
}

/// Assembles the divergence-form Witten Laplacian of the scenario at `t`.
pub fn assemble_witten<S: Scalar>(scenario: &FlowScenario<S>, t: S) -> Result<WittenOperator<S>> {
    let grid = &scenario.grid;
    let n = grid.dim();
    let len = grid.len();
    let weights = scenario.measure_at(t)?.weights;
    let h = grid.h();
    let half_h = h * S::real(0.5);
    // h^{n-2}
    let edge_scale = match n {
        1 => h.recip(),
        _ => S::one(),
    };
    let mut cond = [vec![S::zero(); len], Vec::new()];
    let mut neigh = [vec![usize::MAX; len], Vec::new()];
    if n == 2 {
        cond[1] = vec![S::zero(); len];
        neigh[1] = vec![usize::MAX; len];
    }
    let exponent = (n as f64 - 2.0) / 2.0;
    for axis in 0..n {
        for i in 0..len {
            let Some(j) = grid.neighbor(i, axis, 1) else { continue };
            let mut mid = grid.pos(i);
            mid[axis] = mid[axis] + half_h;
            let phi = scenario.potential.phi(&scenario.metric, n, t, mid);
            let gamma = scenario.metric.gamma(t, mid);
            let metric_power = match n {
                1 => gamma.sqrt().recip(), // γ^{-1/2}
                _ => {
                    debug_assert_eq!(exponent, 0.0);
                    S::one()
                }
            };
            cond[axis][i] = (-phi).exp() * metric_power * edge_scale;
            neigh[axis][i] = j;
        }
    }
    Ok(WittenOperator { time: t, weights, cond, neigh, dim: n })
}

/// Semigroup-form Γ₂: `½ L|∇u|²_g - ⟨∇u, ∇Lu⟩_g`, evaluated through the
/// assembled operator.
pub fn gamma2_with<S: Scalar>(
    grid: &GridSpec<S>,
    metric: &MetricAt<S>,
    op: &WittenOperator<S>,
    u: &[S],
) -> Vec<S> {
    let gsq = gradient_sq(grid, metric, u);
    let l_gsq = op.apply(&gsq);
    let lu = op.apply(u);
    let cross = grad_inner(grid, metric, u, &lu);
    l_gsq
        .iter()
        .zip(&cross)
        .map(|(a, b)| S::real(0.5) * *a - *b)
        .collect()
}

/// Γ₂ of the scenario at time `t` (assembles the operator internally).
pub fn gamma2<S: Scalar>(scenario: &FlowScenario<S>, t: S, u: &[S]) -> Result<Vec<S>> {
    let op = assemble_witten(scenario, t)?;
    let metric = scenario.metric_at(t)?;
    Ok(gamma2_with(&scenario.grid, &metric, &op, u))
}

/// Max-norm gap between the semigroup-form Γ₂ and the direct Bochner form
/// `|∇²u|²_g + Ric(L)(∇u, ∇u)`. Box wall cells (two layers) are excluded:
/// the zero-flux closure is only first-order consistent pointwise there.
pub fn bochner_residual<S: Scalar>(scenario: &FlowScenario<S>, t: S, u: &[S]) -> Result<S> {
    let grid = &scenario.grid;
    let metric = scenario.metric_at(t)?;
    let op = assemble_witten(scenario, t)?;
    let semigroup = gamma2_with(grid, &metric, &op, u);
    let hess = metric_hessian(grid, &metric, u);
    let ric_l = crate::geometry::curvature::bakry_emery_ricci(scenario, t, EffectiveDim::Infinite)?;
    let [ux, uy] = gradient(grid, u);
    let mut worst = S::zero();
    for i in 0..u.len() {
        if !grid.is_interior(i, 2) {
            continue;
        }
        let gamma = metric.gamma(i);
        let gy = if grid.dim() == 2 { uy[i] } else { S::zero() };
        let direct = hess.norm_sq_g(i, gamma) + ric_l.quad_with_gradient(i, ux[i], gy, gamma);
        worst = worst.max((semigroup[i] - direct).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        CompatibilityMode, FlowScenario, MetricFamily, PotentialFamily, PotentialKind, TrigTerm,
    };
    use crate::grid::GridSpec;

    fn t_grid() -> Vec<f64> {
        vec![0.0, 0.1, 0.2, 0.3, 0.4]
    }

    fn flat_torus_scenario(n: usize) -> FlowScenario<f64> {
        FlowScenario::new(
            GridSpec::torus(1, n).unwrap(),
            MetricFamily::StaticEuclidean,
            PotentialFamily { base: PotentialKind::Zero, mode: CompatibilityMode::Free },
            0.0,
            EffectiveDim::Infinite,
            t_grid(),
            vec![1.0; n],
        )
        .unwrap()
    }

    fn ou_box_scenario(n: usize, kappa: f64, half_width: f64) -> FlowScenario<f64> {
        let grid = GridSpec::euclidean_box(1, n, half_width).unwrap();
        let len = grid.len();
        FlowScenario::new(
            grid,
            MetricFamily::StaticEuclidean,
            PotentialFamily {
                base: PotentialKind::Quadratic { kappa, normalized: false },
                mode: CompatibilityMode::Free,
            },
            kappa,
            EffectiveDim::Infinite,
            t_grid(),
            vec![1.0; len],
        )
        .unwrap()
    }

    #[test]
    fn flat_torus_operator_is_periodic_second_difference() {
        let scenario = flat_torus_scenario(64);
        let op = assemble_witten(&scenario, 0.0).unwrap();
        let u: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).sin()).collect();
        let lu = op.apply(&u);
        let h = scenario.grid.h();
        for i in 0..64 {
            let expected = (u[(i + 1) % 64] - 2.0 * u[i] + u[(i + 63) % 64]) / (h * h);
            assert!((lu[i] - expected).abs() < 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn operator_annihilates_constants_exactly() {
        for scenario in [flat_torus_scenario(32), ou_box_scenario(64, 1.0, 8.0)] {
            let op = assemble_witten(&scenario, 0.0).unwrap();
            let lu = op.apply(&vec![3.7; op.len()]);
            assert!(lu.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn integration_by_parts_is_exact() {
        let scenario = ou_box_scenario(96, 0.5, 11.0);
        let op = assemble_witten(&scenario, 0.0).unwrap();
        let u: Vec<f64> = (0..op.len()).map(|i| ((i * 2654435761) % 1000) as f64 / 500.0 - 1.0).collect();
        let lu = op.apply(&u);
        let lhs = op.dirichlet(&u, &u);
        let rhs = -op.mu_inner(&lu, &u);
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn operator_is_mu_self_adjoint() {
        let scenario = ou_box_scenario(96, 1.0, 8.0);
        let op = assemble_witten(&scenario, 0.0).unwrap();
        let u: Vec<f64> = (0..op.len()).map(|i| (i as f64 * 0.17).sin()).collect();
        let v: Vec<f64> = (0..op.len()).map(|i| (i as f64 * 0.05).cos()).collect();
        let asym = (op.mu_inner(&op.apply(&u), &v) - op.mu_inner(&u, &op.apply(&v))).abs();
        assert!(asym <= 1e-12 * op.mu_norm(&u) * op.mu_norm(&v));
    }

    #[test]
    fn conductances_are_nonnegative() {
        let grid = GridSpec::torus(2, 16).unwrap();
        let scenario = FlowScenario::new(
            grid,
            MetricFamily::Conformal2d { amplitude: 0.1, freq: [1, 0], phase: 0.2, decay: 0.5 },
            PotentialFamily {
                base: PotentialKind::TrigSum {
                    terms: vec![TrigTerm { amplitude: 0.3, freq: [1, 1], phase: 0.0 }],
                },
                mode: CompatibilityMode::FixedMeasure,
            },
            0.0,
            EffectiveDim::Infinite,
            t_grid(),
            vec![1.0; 256],
        )
        .unwrap();
        let op = assemble_witten(&scenario, 0.15).unwrap();
        op.for_each_edge(|_, _, kappa| assert!(kappa > 0.0));
    }

    #[test]
    fn gamma2_of_constant_vanishes() {
        let scenario = flat_torus_scenario(32);
        let g2 = gamma2(&scenario, 0.0, &vec![5.0; 32]).unwrap();
        assert!(g2.iter().all(|v| v.abs() < 1e-20));
    }

    #[test]
    fn gamma2_of_sin_is_sin_squared() {
        let scenario = flat_torus_scenario(128);
        let u = scenario.grid.sample(|x| x[0].sin());
        let g2 = gamma2(&scenario, 0.0, &u).unwrap();
        let h = scenario.grid.h();
        for i in 0..u.len() {
            let expected = scenario.grid.pos(i)[0].sin().powi(2);
            assert!((g2[i] - expected).abs() < 3.0 * h * h, "node {i}");
        }
    }

    #[test]
    fn gamma2_of_linear_field_on_soliton_is_k_ell_squared() {
        // flat box, φ = K‖x‖²/2, u = ℓ·x: Γ₂ = K ℓ² since ∇²u = 0 and
        // Ric(L) = K Id. The edge quadrature of the drift leaves an O(h²)
        // error whose constant grows like |Kx|³, so check the core region
        // and the refinement ratio.
        let k = 1.0;
        let ell = 0.7;
        let mut errs = Vec::new();
        for n in [256usize, 512] {
            let scenario = ou_box_scenario(n, k, 8.0);
            let u = scenario.grid.sample(|x| ell * x[0]);
            let g2 = gamma2(&scenario, 0.0, &u).unwrap();
            let err = (0..u.len())
                .filter(|&i| scenario.grid.pos(i)[0].abs() <= 4.0)
                .map(|i| (g2[i] - k * ell * ell).abs())
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        assert!(errs[0] < 0.05 * k * ell * ell, "error {}", errs[0]);
        let ratio = errs[0] / errs[1];
        assert!((ratio - 4.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn bochner_residual_halves_at_second_order() {
        let mut residuals = Vec::new();
        for n in [64usize, 128] {
            let grid = GridSpec::torus(1, n).unwrap();
            let scenario = FlowScenario::new(
                grid,
                MetricFamily::StaticEuclidean,
                PotentialFamily {
                    base: PotentialKind::TrigSum {
                        terms: vec![TrigTerm { amplitude: 0.4, freq: [1, 0], phase: 0.0 }],
                    },
                    mode: CompatibilityMode::Free,
                },
                0.0,
                EffectiveDim::Infinite,
                t_grid(),
                vec![1.0; n],
            )
            .unwrap();
            let u = scenario.grid.sample(|x| 1.0 + 0.5 * x[0].sin() + 0.2 * (2.0 * x[0]).cos());
            residuals.push(bochner_residual(&scenario, 0.0, &u).unwrap());
        }
        let ratio = residuals[0] / residuals[1];
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
    }

    #[test]
    fn bochner_residual_on_quadratic_under_ou_refines_second_order() {
        let mut residuals = Vec::new();
        for n in [256usize, 512] {
            let scenario = ou_box_scenario(n, 1.0, 8.0);
            let u = scenario.grid.sample(|x| 1.0 + 0.1 * x[0] + 0.05 * x[0] * x[0]);
            residuals.push(bochner_residual(&scenario, 0.0, &u).unwrap());
        }
        let h: f64 = 16.0 / 256.0;
        // the constant carries the |φ'|³ weight of the box edge region
        assert!(residuals[0] < 10.0 * h * h, "residual {}", residuals[0]);
        let ratio = residuals[0] / residuals[1];
        assert!((ratio - 4.0).abs() < 1.0, "ratio {ratio}");
    }
}
