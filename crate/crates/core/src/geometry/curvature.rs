//! Curvature quantities: Ricci tensor closed forms, Bakry-Emery tensors,
//! and super-flow residual fields.

use crate::error::{ModelError, Result};
use crate::geometry::{EffectiveDim, FlowScenario, MetricFamily, SymTensorField};
use crate::grid::GridSpec;
use crate::operators::fields::{d1, flat_laplacian, metric_hessian};
use crate::scalar::Scalar;

/// Ricci tensor of `g(t)`. Flat variants are zero; for `g = e^{2a} δ` on the
/// 2-D torus the closed form is `Ric = -(Δ₀ a) δ` with the flat Laplacian
/// taken by central differences.
pub fn ricci_tensor<S: Scalar>(
    grid: &GridSpec<S>,
    metric: &MetricFamily<S>,
    t: S,
) -> Result<SymTensorField<S>> {
    let mut out = SymTensorField::zeros(grid.dim(), grid.len());
    match metric.metric_at(grid, t)? {
        crate::geometry::MetricAt::Conformal { a } => {
            let lap = flat_laplacian(grid, &a);
            out.add_diag_field(&lap, S::real(-1.0));
            Ok(out)
        }
        _ => Ok(out),
    }
}

/// `Ric_{m,n}(L) = Ric + ∇²_g φ - ∇φ⊗∇φ/(m-n)`; `m = ∞` drops the last term
/// exactly, `m = n` is admissible only for constant potentials.
pub fn bakry_emery_ricci<S: Scalar>(
    scenario: &FlowScenario<S>,
    t: S,
    m: EffectiveDim<S>,
) -> Result<SymTensorField<S>> {
    let grid = &scenario.grid;
    let n = grid.dim();
    if let EffectiveDim::Finite(mv) = m {
        let nf = S::real(n as f64);
        if mv < nf {
            return Err(ModelError::InvalidDimension { m: mv.as_f64(), n });
        }
        if mv == nf && !scenario.potential.is_constant() {
            return Err(ModelError::ConventionViolation);
        }
    }
    let metric_at = scenario.metric_at(t)?;
    let phi = scenario.phi_field(t);
    let mut ric = ricci_tensor(grid, &scenario.metric, t)?;
    let hess = metric_hessian(grid, &metric_at, &phi);
    ric.sub_assign(&hess, S::real(-1.0));
    if let EffectiveDim::Finite(mv) = m {
        let nf = S::real(n as f64);
        if mv > nf {
            let inv = (mv - nf).recip();
            let gx = d1(grid, &phi, 0);
            let gy = if n == 2 { d1(grid, &phi, 1) } else { Vec::new() };
            for i in 0..grid.len() {
                ric.xx[i] = ric.xx[i] - inv * gx[i] * gx[i];
                if n == 2 {
                    ric.xy[i] = ric.xy[i] - inv * gx[i] * gy[i];
                    ric.yy[i] = ric.yy[i] - inv * gy[i] * gy[i];
                }
            }
        }
    }
    Ok(ric)
}

/// The super-flow tensor `T = ½ ∂_t g + Ric_{m,n}(L) - K g` at time `t`.
pub fn super_flow_tensor<S: Scalar>(
    scenario: &FlowScenario<S>,
    t: S,
    m: EffectiveDim<S>,
    k: S,
) -> Result<SymTensorField<S>> {
    let grid = &scenario.grid;
    let mut tensor = bakry_emery_ricci(scenario, t, m)?;
    let half = S::real(0.5);
    for idx in 0..grid.len() {
        let x = grid.pos(idx);
        let shift = half * scenario.metric.gamma_dot(t, x) - k * scenario.metric.gamma(t, x);
        tensor.xx[idx] = tensor.xx[idx] + shift;
        if grid.dim() == 2 {
            tensor.yy[idx] = tensor.yy[idx] + shift;
        }
    }
    Ok(tensor)
}

/// Per-node minimum eigenvalue of `g^{-1}(½ ∂_t g + Ric_{m,n}(L) - K g)`.
/// The scenario is a `(K, m)`-super Perelman Ricci flow iff this field stays
/// nonnegative over the whole time window.
pub fn super_flow_residual<S: Scalar>(
    scenario: &FlowScenario<S>,
    t: S,
    m: EffectiveDim<S>,
    k: S,
) -> Result<Vec<S>> {
    let tensor = super_flow_tensor(scenario, t, m, k)?;
    let metric_at = scenario.metric_at(t)?;
    Ok((0..tensor.len())
        .map(|idx| tensor.min_eig_generalized(idx, metric_at.gamma(idx)))
        .collect())
}

/// Location, direction and value of the worst residual eigenvalue at `t`.
pub struct ResidualMinimizer<S> {
    pub node: usize,
    pub eigvec: [S; 2],
    pub min_eig: S,
}

pub fn residual_minimizer<S: Scalar>(
    scenario: &FlowScenario<S>,
    t: S,
    m: EffectiveDim<S>,
    k: S,
) -> Result<ResidualMinimizer<S>> {
    let tensor = super_flow_tensor(scenario, t, m, k)?;
    let metric_at = scenario.metric_at(t)?;
    let mut node = 0;
    let mut min_eig = S::infinity();
    for idx in 0..tensor.len() {
        let eig = tensor.min_eig_generalized(idx, metric_at.gamma(idx));
        if eig < min_eig {
            min_eig = eig;
            node = idx;
        }
    }
    Ok(ResidualMinimizer { node, eigvec: tensor.min_eig_vector(node), min_eig })
}

/// Minimum of the residual over the nodes and a time sampling, the measured
/// largest `K` for which the scenario is still a `(K, m)`-super flow.
pub fn residual_floor<S: Scalar>(
    scenario: &FlowScenario<S>,
    m: EffectiveDim<S>,
    k: S,
    time_samples: usize,
) -> Result<S> {
    let t_end = scenario.t_end();
    let mut floor = S::infinity();
    for i in 0..time_samples {
        let t = t_end * S::real(i as f64) / S::real((time_samples - 1).max(1) as f64);
        let field = super_flow_residual(scenario, t, m, k)?;
        floor = field.iter().copied().fold(floor, S::min);
    }
    Ok(floor)
}
