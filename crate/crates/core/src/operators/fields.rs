//! Second-order finite-difference stencils and metric-aware field operators.
//!
//! Interior nodes use central differences; box walls fall back to one-sided
//! stencils of the same order, so all first and second derivatives are exact
//! on quadratics. Mixed derivatives compose the two one-dimensional first
//! derivatives, which keeps the wall behavior consistent.

use crate::geometry::{MetricAt, SymTensorField};
use crate::grid::{DomainKind, GridSpec};
use crate::scalar::{sq, Scalar};

/// Iterates grid lines along `axis` as `(base, stride)` pairs.
fn lines<S: Scalar>(grid: &GridSpec<S>, axis: usize) -> Vec<(usize, usize)> {
    let n = grid.points_per_axis();
    match (grid.dim(), axis) {
        (1, _) => vec![(0, 1)],
        (_, 0) => (0..n).map(|iy| (iy * n, 1)).collect(),
        _ => (0..n).map(|ix| (ix, n)).collect(),
    }
}

/// First derivative along `axis`, second order everywhere.
pub fn d1<S: Scalar>(grid: &GridSpec<S>, u: &[S], axis: usize) -> Vec<S> {
    let n = grid.points_per_axis();
    let h = grid.h();
    let half = S::real(0.5) / h;
    let mut out = vec![S::zero(); u.len()];
    let periodic = grid.domain() == DomainKind::PeriodicTorus;
    for (base, stride) in lines(grid, axis) {
        let at = |i: usize| u[base + i * stride];
        for i in 0..n {
            let v = if periodic {
                (at((i + 1) % n) - at((i + n - 1) % n)) * half
            } else if i == 0 {
                (S::real(-3.0) * at(0) + S::real(4.0) * at(1) - at(2)) * half
            } else if i == n - 1 {
                (S::real(3.0) * at(n - 1) - S::real(4.0) * at(n - 2) + at(n - 3)) * half
            } else {
                (at(i + 1) - at(i - 1)) * half
            };
            out[base + i * stride] = v;
        }
    }
    out
}

/// Pure second derivative along `axis`, second order everywhere.
pub fn d2_axis<S: Scalar>(grid: &GridSpec<S>, u: &[S], axis: usize) -> Vec<S> {
    let n = grid.points_per_axis();
    let inv_h2 = (grid.h() * grid.h()).recip();
    let mut out = vec![S::zero(); u.len()];
    let periodic = grid.domain() == DomainKind::PeriodicTorus;
    let two = S::real(2.0);
    for (base, stride) in lines(grid, axis) {
        let at = |i: usize| u[base + i * stride];
        for i in 0..n {
            let v = if periodic {
                (at((i + 1) % n) - two * at(i) + at((i + n - 1) % n)) * inv_h2
            } else if i == 0 {
                (two * at(0) - S::real(5.0) * at(1) + S::real(4.0) * at(2) - at(3)) * inv_h2
            } else if i == n - 1 {
                (two * at(n - 1) - S::real(5.0) * at(n - 2) + S::real(4.0) * at(n - 3)
                    - at(n - 4))
                    * inv_h2
            } else {
                (at(i + 1) - two * at(i) + at(i - 1)) * inv_h2
            };
            out[base + i * stride] = v;
        }
    }
    out
}

/// Mixed derivative `∂_x ∂_y u` (2-D only), as the composition `d1_y ∘ d1_x`.
pub fn d_mixed<S: Scalar>(grid: &GridSpec<S>, u: &[S]) -> Vec<S> {
    debug_assert_eq!(grid.dim(), 2);
    let dx = d1(grid, u, 0);
    d1(grid, &dx, 1)
}

/// Flat Laplacian `Δ₀ u = Σ ∂²_i u`.
pub fn flat_laplacian<S: Scalar>(grid: &GridSpec<S>, u: &[S]) -> Vec<S> {
    let mut out = d2_axis(grid, u, 0);
    if grid.dim() == 2 {
        for (o, v) in out.iter_mut().zip(d2_axis(grid, u, 1)) {
            *o = *o + v;
        }
    }
    out
}

/// Coordinate gradient `(∂_x u, ∂_y u)`; the second component is empty in 1-D.
pub fn gradient<S: Scalar>(grid: &GridSpec<S>, u: &[S]) -> [Vec<S>; 2] {
    let gx = d1(grid, u, 0);
    let gy = if grid.dim() == 2 { d1(grid, u, 1) } else { Vec::new() };
    [gx, gy]
}

/// `|∇u|²_g = γ^{-1} Σ (∂_i u)²`.
pub fn gradient_sq<S: Scalar>(grid: &GridSpec<S>, metric: &MetricAt<S>, u: &[S]) -> Vec<S> {
    let [gx, gy] = gradient(grid, u);
    (0..u.len())
        .map(|i| {
            let raw = sq(gx[i]) + if grid.dim() == 2 { sq(gy[i]) } else { S::zero() };
            raw / metric.gamma(i)
        })
        .collect()
}

/// Pointwise `⟨∇u, ∇v⟩_g = γ^{-1} Σ ∂_i u ∂_i v`.
pub fn grad_inner<S: Scalar>(
    grid: &GridSpec<S>,
    metric: &MetricAt<S>,
    u: &[S],
    v: &[S],
) -> Vec<S> {
    let [ux, uy] = gradient(grid, u);
    let [vx, vy] = gradient(grid, v);
    (0..u.len())
        .map(|i| {
            let raw = ux[i] * vx[i] + if grid.dim() == 2 { uy[i] * vy[i] } else { S::zero() };
            raw / metric.gamma(i)
        })
        .collect()
}

/// Metric-compatible Hessian `(∇²u)_{ij} = ∂_i∂_j u - Γ^k_{ij} ∂_k u`.
///
/// Flat and isotropically scaled metrics have vanishing Christoffels; the
/// conformal case applies the closed-form symbols of a single conformal
/// factor, with `∂a` taken by the same central stencils.
pub fn metric_hessian<S: Scalar>(
    grid: &GridSpec<S>,
    metric: &MetricAt<S>,
    u: &[S],
) -> SymTensorField<S> {
    let dim = grid.dim();
    let mut out = SymTensorField::zeros(dim, u.len());
    out.xx = d2_axis(grid, u, 0);
    if dim == 2 {
        out.yy = d2_axis(grid, u, 1);
        out.xy = d_mixed(grid, u);
    }
    if let Some(a) = metric.conformal_exponent() {
        // Γ^k_{ij} for g = e^{2a} δ contracts against ∂u as:
        //   (∇²u)_xx = ∂²_x u - a_x u_x + a_y u_y
        //   (∇²u)_xy = ∂_x∂_y u - a_y u_x - a_x u_y
        //   (∇²u)_yy = ∂²_y u - a_y u_y + a_x u_x
        let [ax, ay] = gradient(grid, a);
        let [ux, uy] = gradient(grid, u);
        for i in 0..u.len() {
            out.xx[i] = out.xx[i] - ax[i] * ux[i] + ay[i] * uy[i];
            out.xy[i] = out.xy[i] - ay[i] * ux[i] - ax[i] * uy[i];
            out.yy[i] = out.yy[i] - ay[i] * uy[i] + ax[i] * ux[i];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn gradient_sq_of_constant_vanishes() {
        let g: GridSpec<f64> = GridSpec::torus(1, 32).unwrap();
        let u = vec![2.5; 32];
        let gs = gradient_sq(&g, &MetricAt::Flat, &u);
        assert!(gs.iter().all(|v| v.abs() < 1e-24));
    }

    #[test]
    fn gradient_sq_of_sin_is_cos_squared() {
        let g: GridSpec<f64> = GridSpec::torus(1, 128).unwrap();
        let u = g.sample(|x| x[0].sin());
        let gs = gradient_sq(&g, &MetricAt::Flat, &u);
        let h = g.h();
        for (i, v) in gs.iter().enumerate() {
            let expected = g.pos(i)[0].cos().powi(2);
            assert!((v - expected).abs() < 2.0 * h * h, "node {i}");
        }
    }

    #[test]
    fn conformal_gradient_sq_applies_inverse_factor() {
        let g: GridSpec<f64> = GridSpec::torus(2, 32).unwrap();
        let a: Vec<f64> = g.sample(|x| 0.1 * x[0].cos());
        let metric = MetricAt::Conformal { a: a.clone() };
        let u = g.sample(|x| (x[0] + 0.3).sin());
        let flat = gradient_sq(&g, &MetricAt::Flat, &u);
        let conf = gradient_sq(&g, &metric, &u);
        for i in 0..u.len() {
            let expected = (-2.0 * a[i]).exp() * flat[i];
            assert!((conf[i] - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn hessian_exact_on_quadratics_including_walls() {
        let g: GridSpec<f64> = GridSpec::euclidean_box(1, 64, 8.0).unwrap();
        let u = g.sample(|x| 0.5 * x[0] * x[0]);
        let hess = metric_hessian(&g, &MetricAt::Flat, &u);
        for v in &hess.xx {
            assert!((v - 1.0).abs() < 1e-11, "{v}");
        }
        // linear field on the interior chart has zero Hessian
        let lin = g.sample(|x| 3.0 * x[0] + 1.0);
        let hess = metric_hessian(&g, &MetricAt::Flat, &lin);
        for v in &hess.xx {
            assert!(v.abs() < 1e-11);
        }
    }

    #[test]
    fn mixed_hessian_exact_on_xy() {
        let g: GridSpec<f64> = GridSpec::euclidean_box(2, 24, 2.0).unwrap();
        let u = g.sample(|x| x[0] * x[1]);
        let hess = metric_hessian(&g, &MetricAt::Flat, &u);
        for i in 0..u.len() {
            assert!(hess.xx[i].abs() < 1e-12);
            assert!(hess.yy[i].abs() < 1e-12);
            assert!((hess.xy[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hessian_of_sin_converges_second_order() {
        let mut errs = Vec::new();
        for n in [64usize, 128] {
            let g: GridSpec<f64> = GridSpec::torus(1, n).unwrap();
            let u = g.sample(|x| x[0].sin());
            let hess = metric_hessian(&g, &MetricAt::Flat, &u);
            let err = (0..n)
                .map(|i| (hess.xx[i] + g.pos(i)[0].sin()).abs())
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 2.0).abs() < 0.1, "observed order {order}");
    }
}
