//! Observed-order fitting for grid refinement studies.

use crate::scalar::Scalar;

/// Outcome of an order fit over a refinement ladder.
#[derive(Clone, Debug, PartialEq)]
pub enum OrderOutcome<S> {
    /// Least-squares slope of `log residual` against `log h`.
    Order(S),
    /// Residuals at or below the floor on every level.
    Exact,
    /// Residuals failed to decrease under refinement.
    NoConvergence,
}

/// Fits the observed order of accuracy from `(h, residual)` pairs.
/// Residuals at or below `zero_floor` on all levels count as exact.
pub fn observed_order<S: Scalar>(hs: &[S], residuals: &[S], zero_floor: S) -> OrderOutcome<S> {
    assert_eq!(hs.len(), residuals.len());
    assert!(hs.len() >= 2, "need at least two refinement levels");
    if residuals.iter().all(|r| r.abs() <= zero_floor) {
        return OrderOutcome::Exact;
    }
    // hs are expected largest-first; any residual growth under refinement is
    // flagged instead of fitted.
    let mut sorted: Vec<(S, S)> =
        hs.iter().copied().zip(residuals.iter().copied()).collect();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    for pair in sorted.windows(2) {
        if pair[1].1 >= pair[0].1 {
            return OrderOutcome::NoConvergence;
        }
    }
    let logs: Vec<(S, S)> =
        sorted.iter().map(|(h, r)| (h.ln(), r.max(zero_floor).ln())).collect();
    let n = S::real(logs.len() as f64);
    let sx: S = logs.iter().map(|p| p.0).sum();
    let sy: S = logs.iter().map(|p| p.1).sum();
    let sxx: S = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: S = logs.iter().map(|p| p.0 * p.1).sum();
    OrderOutcome::Order((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

/// Least-squares slope of `log|y|` against `log x` (no monotonicity check),
/// used for asymptotic-order sweeps.
pub fn log_log_slope<S: Scalar>(xs: &[S], ys: &[S]) -> S {
    assert_eq!(xs.len(), ys.len());
    let pts: Vec<(S, S)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| y.abs() > S::zero())
        .map(|(x, y)| (x.ln(), y.abs().ln()))
        .collect();
    let n = S::real(pts.len() as f64);
    let sx: S = pts.iter().map(|p| p.0).sum();
    let sy: S = pts.iter().map(|p| p.1).sum();
    let sxx: S = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: S = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
