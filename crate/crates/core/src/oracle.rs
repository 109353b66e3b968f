//! Closed-form Ornstein-Uhlenbeck and Euclidean heat-kernel references.
//!
//! The generator is `L = Δ + K x·∇` (drift field `K x`, either sign), whose
//! transition kernel with respect to Lebesgue measure is the Gaussian
//! `N(e^{Kt} x, v_K(t) Id)` with `v_K(t) = (e^{2Kt} - 1)/K`. Everything here
//! is an exact formula; no stochastic simulation and no grids. These values
//! serve as ground truth for the discrete operators and entropy functionals.

use crate::error::{ModelError, Result};
use crate::scalar::{sq, Scalar};

/// Parameters of the Ornstein-Uhlenbeck reference process.
#[derive(Clone, Debug, PartialEq)]
pub struct OuParams<S> {
    /// Ambient dimension `m >= 1`.
    pub dim: usize,
    /// Signed drift rate: the drift field is `drift * x`.
    pub drift: S,
    /// Base point `x` of the kernel.
    pub base_point: Vec<S>,
}

impl<S: Scalar> OuParams<S> {
    pub fn new(dim: usize, drift: S, base_point: Vec<S>) -> Self {
        assert!(dim >= 1, "ambient dimension must be >= 1");
        assert_eq!(base_point.len(), dim, "base point dimension mismatch");
        OuParams { dim, drift, base_point }
    }

    /// Centered kernel in `dim` dimensions with drift rate `k`.
    pub fn centered(dim: usize, k: S) -> Self {
        Self::new(dim, k, vec![S::zero(); dim])
    }
}

/// Kernel variance `v_K(t) = (e^{2Kt} - 1)/K`, continuous through `K = 0`
/// where it equals `2t`.
pub fn ou_variance<S: Scalar>(k: S, t: S) -> S {
    if k == S::zero() {
        S::real(2.0) * t
    } else {
        (S::real(2.0) * k * t).exp_m1() / k
    }
}

/// `σ_K²(t) = (e^{2Kt} - 1)/(2K)`, the half-variance entering the entropy
/// closed form; equals `t` at `K = 0`.
pub fn ou_sigma_sq<S: Scalar>(k: S, t: S) -> S {
    ou_variance(k, t) * S::real(0.5)
}

/// Transition density of the drift-`K` process at `y`, with respect to
/// Lebesgue measure: the `N(e^{Kt} x, v_K(t) Id)` density. At `K = 0` this
/// is exactly the Euclidean heat kernel with the `√2`-noise normalization.
pub fn ou_kernel<S: Scalar>(params: &OuParams<S>, y: &[S], t: S) -> Result<S> {
    if !(t > S::zero()) {
        return Err(ModelError::NonPositiveTime { t: t.as_f64() });
    }
    assert_eq!(y.len(), params.dim);
    let v = ou_variance(params.drift, t);
    let mean_scale = (params.drift * t).exp();
    let mut dist_sq = S::zero();
    for (yi, xi) in y.iter().zip(&params.base_point) {
        dist_sq = dist_sq + sq(*yi - mean_scale * *xi);
    }
    let two_pi_v = S::real(2.0) * S::PI() * v;
    let m_half = S::real(params.dim as f64) * S::real(0.5);
    Ok((-dist_sq / (S::real(2.0) * v)).exp() / two_pi_v.powf(m_half))
}

/// Boltzmann-Shannon entropy of the kernel with respect to Lebesgue measure:
/// `-(m/2)(1 + log(4π σ_K²(t)))`, independent of the base point.
pub fn ou_kernel_entropy<S: Scalar>(params: &OuParams<S>, t: S) -> Result<S> {
    if !(t > S::zero()) {
        return Err(ModelError::NonPositiveTime { t: t.as_f64() });
    }
    let sigma_sq = ou_sigma_sq(params.drift, t);
    let m_half = S::real(params.dim as f64) * S::real(0.5);
    Ok(-m_half * (S::one() + (S::real(4.0) * S::PI() * sigma_sq).ln()))
}

/// Small-time truncation `-(m/2)(1 + log(4πt) + Kt + K²t²/6)` together with
/// the remainder `ou_kernel_entropy - truncation`.
///
/// The cubic term of `log(σ_K²/t)` cancels against the quadratic and cubic
/// Taylor corrections, so the remainder scales like `(m/360) K⁴ t⁴`; the
/// observed log-log slope is asserted empirically rather than assumed.
pub fn ou_entropy_expansion<S: Scalar>(params: &OuParams<S>, t: S) -> Result<(S, S)> {
    let m_half = S::real(params.dim as f64) * S::real(0.5);
    let k = params.drift;
    let kt = k * t;
    let truncated = -m_half
        * (S::one() + (S::real(4.0) * S::PI() * t).ln() + kt + sq(kt) / S::real(6.0));
    let exact = ou_kernel_entropy(params, t)?;
    Ok((truncated, exact - truncated))
}

/// Euclidean heat kernel `(4πt)^{-n/2} exp(-|x-y|²/(4t))` for `∂_t u = Δu`.
pub fn euclid_kernel<S: Scalar>(n: usize, x: &[S], y: &[S], t: S) -> Result<S> {
    if !(t > S::zero()) {
        return Err(ModelError::NonPositiveTime { t: t.as_f64() });
    }
    assert_eq!(x.len(), n);
    assert_eq!(y.len(), n);
    let mut dist_sq = S::zero();
    for (xi, yi) in x.iter().zip(y) {
        dist_sq = dist_sq + sq(*xi - *yi);
    }
    let four_pi_t = S::real(4.0) * S::PI() * t;
    let n_half = S::real(n as f64) * S::real(0.5);
    Ok((-dist_sq / (S::real(4.0) * t)).exp() / four_pi_t.powf(n_half))
}

/// Entropy of the Euclidean kernel with respect to Lebesgue measure.
pub fn euclid_kernel_entropy<S: Scalar>(n: usize, t: S) -> S {
    let n_half = S::real(n as f64) * S::real(0.5);
    -n_half * (S::one() + (S::real(4.0) * S::PI() * t).ln())
}

/// Symmetric matrix in dimension 1 or 2, stored as the upper triangle.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SymMat<S> {
    pub dim: usize,
    pub xx: S,
    pub xy: S,
    pub yy: S,
}

impl<S: Scalar> SymMat<S> {
    pub fn isotropic(dim: usize, v: S) -> Self {
        assert!(dim == 1 || dim == 2);
        SymMat { dim, xx: v, xy: S::zero(), yy: if dim == 2 { v } else { S::zero() } }
    }

    pub fn det(&self) -> S {
        match self.dim {
            1 => self.xx,
            _ => self.xx * self.yy - sq(self.xy),
        }
    }

    pub fn is_positive_definite(&self) -> bool {
        self.xx > S::zero() && self.det() > S::zero()
    }

    pub fn add_scaled_identity(&self, v: S) -> Self {
        SymMat {
            dim: self.dim,
            xx: self.xx + v,
            xy: self.xy,
            yy: if self.dim == 2 { self.yy + v } else { S::zero() },
        }
    }

    pub fn scale(&self, s: S) -> Self {
        SymMat { dim: self.dim, xx: self.xx * s, xy: self.xy * s, yy: self.yy * s }
    }

    /// Quadratic form `zᵀ A⁻¹ z` (the matrix must be positive-definite).
    pub fn inv_quad(&self, z: &[S]) -> S {
        match self.dim {
            1 => sq(z[0]) / self.xx,
            _ => {
                let det = self.det();
                (self.yy * sq(z[0]) - S::real(2.0) * self.xy * z[0] * z[1] + self.xx * sq(z[1]))
                    / det
            }
        }
    }
}

/// Gaussian-shaped field `A exp(-½ (y-b)ᵀ Σ⁻¹ (y-b))`.
///
/// `covariance = None` encodes the constant field `A` (the flat,
/// infinite-covariance limit), which the semigroup leaves untouched.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianField<S> {
    pub mean: Vec<S>,
    pub covariance: Option<SymMat<S>>,
    pub prefactor: S,
}

impl<S: Scalar> GaussianField<S> {
    pub fn new(mean: Vec<S>, covariance: SymMat<S>, prefactor: S) -> Result<Self> {
        if !covariance.is_positive_definite() {
            return Err(ModelError::DegenerateCovariance);
        }
        assert_eq!(mean.len(), covariance.dim);
        Ok(GaussianField { mean, covariance: Some(covariance), prefactor })
    }

    /// Constant field of the given value.
    pub fn constant(dim: usize, value: S) -> Self {
        GaussianField { mean: vec![S::zero(); dim], covariance: None, prefactor: value }
    }

    /// Normalized probability density `N(mean, covariance)`.
    pub fn density(mean: Vec<S>, covariance: SymMat<S>) -> Result<Self> {
        let dim = covariance.dim;
        if !covariance.is_positive_definite() {
            return Err(ModelError::DegenerateCovariance);
        }
        let two_pi = S::real(2.0) * S::PI();
        let norm = (two_pi.powi(dim as i32) * covariance.det()).sqrt().recip();
        Self::new(mean, covariance, norm)
    }

    pub fn eval(&self, y: &[S]) -> S {
        match &self.covariance {
            None => self.prefactor,
            Some(cov) => {
                let mut z = [S::zero(); 2];
                for (i, (yi, bi)) in y.iter().zip(&self.mean).enumerate() {
                    z[i] = *yi - *bi;
                }
                self.prefactor * (-cov.inv_quad(&z[..cov.dim]) * S::real(0.5)).exp()
            }
        }
    }

    /// Total mass `∫ f dy` of the field.
    pub fn mass(&self) -> Option<S> {
        self.covariance.map(|cov| {
            let two_pi = S::real(2.0) * S::PI();
            self.prefactor * (two_pi.powi(cov.dim as i32) * cov.det()).sqrt()
        })
    }
}

/// Exact action of the drift-`K` semigroup `P_{s,t}` on a Gaussian field,
/// obtained by Gaussian convolution of the transition kernel:
///
/// `mean' = e^{-Kτ} mean`, `Σ' = e^{-2Kτ}(Σ + v_K(τ) Id)`,
/// `A' = A √(det Σ / det(Σ + v_K(τ) Id))`, with `τ = t - s`.
pub fn mehler_propagate<S: Scalar>(
    field: &GaussianField<S>,
    params: &OuParams<S>,
    s: S,
    t: S,
) -> Result<GaussianField<S>> {
    if t < s {
        return Err(ModelError::TimeOutOfRange { t: t.as_f64(), lo: s.as_f64(), hi: f64::INFINITY });
    }
    let tau = t - s;
    let cov = match &field.covariance {
        None => return Ok(field.clone()),
        Some(cov) => *cov,
    };
    if tau == S::zero() {
        return Ok(field.clone());
    }
    let v = ou_variance(params.drift, tau);
    let shifted = cov.add_scaled_identity(v);
    if !shifted.is_positive_definite() {
        return Err(ModelError::DegenerateCovariance);
    }
    let decay = (-params.drift * tau).exp();
    let new_cov = shifted.scale(sq(decay));
    if !new_cov.is_positive_definite() {
        return Err(ModelError::DegenerateCovariance);
    }
    let mean: Vec<S> = field.mean.iter().map(|b| *b * decay).collect();
    let prefactor = field.prefactor * (cov.det() / shifted.det()).sqrt();
    GaussianField::new(mean, new_cov, prefactor)
}

/// `Ent(u | μ)` for `u` whose law against Lebesgue is `p = N(b, σ² Id)` and
/// `dμ = e^{-φ} dy` with `φ(y) = κ|y|²/2 + c₀`, i.e. `u = p e^{φ}`:
///
/// `Ent(u|μ) = -(m/2)(1 + log 2πσ²) + (κ/2)(|b|² + mσ²) + c₀`.
pub fn gaussian_relative_entropy<S: Scalar>(mean_sq: S, var: S, dim: usize, kappa: S, c0: S) -> S {
    let m = S::real(dim as f64);
    let half = S::real(0.5);
    -m * half * (S::one() + (S::real(2.0) * S::PI() * var).ln())
        + kappa * half * (mean_sq + m * var)
        + c0
}

/// Fisher information `∫ |∇u|²/u dμ` in the same setting:
/// `m σ² (κ - 1/σ²)² + κ² |b|²`.
pub fn gaussian_fisher_info<S: Scalar>(mean_sq: S, var: S, dim: usize, kappa: S) -> S {
    let m = S::real(dim as f64);
    m * var * sq(kappa - var.recip()) + sq(kappa) * mean_sq
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI: f64 = std::f64::consts::PI;

    fn midpoint_grid(half_width: f64, n: usize) -> (Vec<f64>, f64) {
        let h = 2.0 * half_width / n as f64;
        ((0..n).map(|i| -half_width + (i as f64 + 0.5) * h).collect(), h)
    }

    #[test]
    fn zero_drift_kernel_is_euclidean_heat_kernel() {
        let params = OuParams::centered(1, 0.0);
        for (y, t) in [(0.3, 0.2), (-1.1, 0.05), (2.0, 1.0)] {
            let ou = ou_kernel(&params, &[y], t).unwrap();
            let expected = (4.0 * PI * t).powf(-0.5) * (-y * y / (4.0 * t)).exp();
            assert!((ou - expected).abs() <= 1e-15 * expected);
            let ek = euclid_kernel(1, &[0.0], &[y], t).unwrap();
            assert!((ou - ek).abs() <= 1e-15 * expected);
        }
    }

    #[test]
    fn kernel_peak_value_is_prefactor() {
        let params = OuParams::new(2, 0.7, vec![0.4, -0.3]);
        let t = 0.6;
        let mean: Vec<f64> = params.base_point.iter().map(|x| x * (0.7f64 * t).exp()).collect();
        let got = ou_kernel(&params, &mean, t).unwrap();
        let v = ou_variance(0.7, t);
        let expected = (2.0 * PI * v).powi(-1);
        assert!((got - expected).abs() <= 1e-14 * expected);
    }

    #[test]
    fn kernel_mass_is_one_under_quadrature() {
        for k in [0.8, -0.6] {
            let params = OuParams::new(1, k, vec![0.5]);
            let t = 0.5;
            let (xs, h) = midpoint_grid(12.0, 4096);
            let mass: f64 = xs.iter().map(|&y| ou_kernel(&params, &[y], t).unwrap() * h).sum();
            assert!((mass - 1.0).abs() < 1e-8, "k={k}: mass = {mass}");
        }
    }

    #[test]
    fn kernel_rejects_nonpositive_time() {
        let params = OuParams::centered(1, 1.0);
        assert!(matches!(ou_kernel(&params, &[0.0], 0.0), Err(ModelError::NonPositiveTime { .. })));
        assert!(euclid_kernel(1, &[0.0], &[0.0], -0.1).is_err());
    }

    #[test]
    fn entropy_closed_form_special_values() {
        // m=2, K=0, t = 1/(4π): σ² = t so the log vanishes and Ent = -m/2.
        let params = OuParams::centered(2, 0.0);
        let ent = ou_kernel_entropy(&params, 1.0 / (4.0 * PI)).unwrap();
        assert!((ent + 1.0).abs() < 1e-14);

        // m=1, K=1, t=1: -(1/2)(1 + log(4π (e²-1)/2)).
        let params = OuParams::centered(1, 1.0);
        let expected = -0.5 * (1.0 + (4.0 * PI * (1.0f64.exp().powi(2) - 1.0) / 2.0).ln());
        let ent = ou_kernel_entropy(&params, 1.0).unwrap();
        assert!((ent - expected).abs() < 1e-14);
    }

    #[test]
    fn entropy_matches_quadrature_of_u_log_u() {
        for &(m, k, t) in &[(1usize, 0.5f64, 0.25f64), (1, -0.5, 1.0), (2, 1.0, 0.25)] {
            let params = OuParams::centered(m, k);
            let closed = ou_kernel_entropy(&params, t).unwrap();
            let spread = ou_variance(k, t).sqrt() * 10.0 + 1.0f64;
            let quad = if m == 1 {
                let (xs, h) = midpoint_grid(spread, 8192);
                xs.iter()
                    .map(|&y| {
                        let u = ou_kernel(&params, &[y], t).unwrap();
                        u * u.ln() * h
                    })
                    .sum::<f64>()
            } else {
                let (xs, h) = midpoint_grid(spread, 512);
                let mut acc = 0.0;
                for &x in &xs {
                    for &y in &xs {
                        let u = ou_kernel(&params, &[x, y], t).unwrap();
                        if u > 0.0 {
                            acc += u * u.ln() * h * h;
                        }
                    }
                }
                acc
            };
            assert!((closed - quad).abs() < 1e-6, "(m,k,t)=({m},{k},{t}): {closed} vs {quad}");
        }
    }

    #[test]
    fn expansion_remainder_vanishes_at_zero_drift() {
        let params = OuParams::centered(2, 0.0);
        for t in [1e-3, 1e-2, 1e-1] {
            let (_, rem) = ou_entropy_expansion(&params, t).unwrap();
            assert_eq!(rem, 0.0);
        }
    }

    #[test]
    fn expansion_remainder_order_at_least_three() {
        let params = OuParams::centered(3, 1.0);
        let ts: Vec<f64> = (0..7).map(|i| 3e-3 * 10f64.powf(i as f64 * 0.25)).collect();
        let mut logs = Vec::new();
        for &t in &ts {
            let (_, rem) = ou_entropy_expansion(&params, t).unwrap();
            logs.push((t.ln(), rem.abs().ln()));
        }
        let n = logs.len() as f64;
        let sx: f64 = logs.iter().map(|p| p.0).sum();
        let sy: f64 = logs.iter().map(|p| p.1).sum();
        let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!(slope >= 3.0, "observed remainder order {slope}");
        assert!((slope - 4.0).abs() < 0.3, "remainder order should be close to 4, got {slope}");
    }

    #[test]
    fn expansion_remainder_scales_linearly_in_m() {
        // m enters both the exact entropy and the truncation as a prefactor;
        // evaluate where the remainder dominates the subtraction roundoff.
        let t = 0.3f64;
        let (_, r1) = ou_entropy_expansion(&OuParams::centered(1, 1.0f64), t).unwrap();
        let (_, r3) = ou_entropy_expansion(&OuParams::centered(3, 1.0f64), t).unwrap();
        assert!((r3 - 3.0 * r1).abs() <= 1e-10 * r3.abs(), "{r1} {r3}");
    }

    #[test]
    fn mehler_identity_and_constants() {
        let params = OuParams::centered(1, -0.8);
        let field = GaussianField::new(vec![0.3], SymMat::isotropic(1, 0.5), 2.0).unwrap();
        let same = mehler_propagate(&field, &params, 0.2, 0.2).unwrap();
        assert_eq!(same, field);
        let c = GaussianField::constant(1, 3.5);
        let moved = mehler_propagate(&c, &params, 0.0, 1.0).unwrap();
        assert_eq!(moved.eval(&[1.7]), 3.5);
    }

    #[test]
    fn mehler_semigroup_composition_is_exact() {
        for k in [0.6f64, -0.9] {
            let params = OuParams::centered(2, k);
            let field = GaussianField::new(
                vec![0.4, -0.2],
                SymMat { dim: 2, xx: 0.7, xy: 0.1, yy: 0.9 },
                1.3,
            )
            .unwrap();
            let direct = mehler_propagate(&field, &params, 0.0, 0.7).unwrap();
            let mid = mehler_propagate(&field, &params, 0.0, 0.3).unwrap();
            let composed = mehler_propagate(&mid, &params, 0.3, 0.7).unwrap();
            for (a, b) in direct.mean.iter().zip(&composed.mean) {
                assert!((a - b).abs() < 1e-12);
            }
            let (ca, cb) = (direct.covariance.unwrap(), composed.covariance.unwrap());
            assert!((ca.xx - cb.xx).abs() < 1e-12);
            assert!((ca.xy - cb.xy).abs() < 1e-12);
            assert!((ca.yy - cb.yy).abs() < 1e-12);
            assert!((direct.prefactor - composed.prefactor).abs() < 1e-12);
        }
    }

    #[test]
    fn mehler_matches_kernel_convolution_quadrature() {
        let k = -1.0;
        let params = OuParams::centered(1, k);
        let field = GaussianField::new(vec![0.5], SymMat::isotropic(1, 0.4), 0.9).unwrap();
        let tau = 0.35;
        let propagated = mehler_propagate(&field, &params, 0.0, tau).unwrap();
        let (ys, h) = midpoint_grid(10.0, 4096);
        for x in [0.0, 0.4, -1.2] {
            // P_τ f(x) = ∫ f(y) k(x, y, τ) dy with the kernel based at x.
            let based = OuParams::new(1, k, vec![x]);
            let integral: f64 = ys
                .iter()
                .map(|&y| field.eval(&[y]) * ou_kernel(&based, &[y], tau).unwrap() * h)
                .sum();
            let exact = propagated.eval(&[x]);
            assert!((integral - exact).abs() < 1e-10, "x={x}: {integral} vs {exact}");
        }
    }

    #[test]
    fn kernel_satisfies_backward_equation_in_x() {
        // ∂_t u = Δ_x u + K x·∇_x u, finite-difference residual O(h² + δ²).
        let k = 0.8;
        let t = 0.4;
        let y = [0.3];
        let dt = 1e-5;
        let mut worst: f64 = 0.0;
        for h in [1e-3, 5e-4] {
            let mut max_resid: f64 = 0.0;
            for i in -20..=20 {
                let x = 0.1 * i as f64;
                let u = |xx: f64, tt: f64| {
                    ou_kernel(&OuParams::new(1, k, vec![xx]), &y, tt).unwrap()
                };
                let du_dt = (u(x, t + dt) - u(x, t - dt)) / (2.0 * dt);
                let lap = (u(x + h, t) - 2.0 * u(x, t) + u(x - h, t)) / (h * h);
                let grad = (u(x + h, t) - u(x - h, t)) / (2.0 * h);
                let resid = (du_dt - lap - k * x * grad).abs();
                max_resid = max_resid.max(resid);
            }
            worst = worst.max(max_resid);
        }
        assert!(worst < 1e-5, "backward-equation residual {worst}");
    }

    #[test]
    fn gaussian_relative_entropy_and_fisher_match_quadrature() {
        // u = p e^{φ} with p = N(b, σ²), φ = κ y²/2 + c₀.
        let (b, var, kappa, c0) = (0.4, 0.6, 1.0, 0.25);
        let closed_ent = gaussian_relative_entropy(b * b, var, 1, kappa, c0);
        let closed_fisher = gaussian_fisher_info(b * b, var, 1, kappa);
        let (ys, h) = midpoint_grid(14.0, 16384);
        let p = |y: f64| {
            (2.0 * PI * var).powf(-0.5) * (-(y - b) * (y - b) / (2.0 * var)).exp()
        };
        let mut ent = 0.0;
        let mut fisher = 0.0;
        for &yv in &ys {
            let phi = kappa * yv * yv / 2.0 + c0;
            let u = p(yv) * phi.exp();
            // d/dy log u = -(y-b)/σ² + κ y
            let dlog = -(yv - b) / var + kappa * yv;
            ent += u * u.ln() * (-phi).exp() * h;
            fisher += dlog * dlog * u * (-phi).exp() * h;
        }
        assert!((ent - closed_ent).abs() < 1e-8, "{ent} vs {closed_ent}");
        assert!((fisher - closed_fisher).abs() < 1e-7, "{fisher} vs {closed_fisher}");
    }
}
