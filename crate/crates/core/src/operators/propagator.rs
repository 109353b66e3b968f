//! Time-inhomogeneous heat semigroup `P_{s,t}` via Crank-Nicolson stepping.
//!
//! Each step solves `(I - dt/2 L_mid) u⁺ = (I + dt/2 L_mid) u` with the
//! operator refreshed at the step midpoint, which keeps second-order
//! accuracy for time-dependent families. Positive data falls back to
//! implicit-Euler sub-steps if a step loses positivity (the step matrices
//! are M-matrices, so implicit Euler is unconditionally positivity
//! preserving). Mass `∫ u dμ` is conserved per step by the zero-row-sum
//! structure whenever the measure is fixed.

use crate::error::{ModelError, Result};
use crate::geometry::FlowScenario;
use crate::grid::DomainKind;
use crate::scalar::Scalar;

use super::solver::{pcg_weighted, BandedMatrix, CyclicTridiag};
use super::{assemble_witten, WittenOperator};

/// Propagator of `∂_t u = L_t u` over a scenario.
pub struct HeatPropagator<'a, S> {
    pub scenario: &'a FlowScenario<S>,
    /// Step control: `dt <= min(h, segment)/substep_divisor`.
    pub substep_divisor: usize,
    /// Relative residual target of the iterative torus-2D solver.
    pub pcg_rel_tol: S,
    pub pcg_max_iter: usize,
}

enum StepSolver<S> {
    Direct(BandedMatrix<S>),
    Cyclic(CyclicTridiag<S>),
    /// Jacobi-preconditioned CG in the μ-inner product.
    Iterative { precond: Vec<S> },
}

impl<'a, S: Scalar> HeatPropagator<'a, S> {
    pub fn new(scenario: &'a FlowScenario<S>) -> Self {
        HeatPropagator {
            scenario,
            substep_divisor: 4,
            pcg_rel_tol: S::epsilon() * S::real(100.0),
            pcg_max_iter: 4000,
        }
    }

    pub fn with_divisor(scenario: &'a FlowScenario<S>, substep_divisor: usize) -> Self {
        HeatPropagator { substep_divisor, ..Self::new(scenario) }
    }

    /// `P_{s,t} f` for strictly positive `f`.
    pub fn evolve(&self, f: &[S], s: S, t: S) -> Result<Vec<S>> {
        self.check_interval(s, t)?;
        check_positive(f)?;
        let mut cols = vec![f.to_vec()];
        self.advance(&mut cols, s, t, true)?;
        Ok(cols.pop().unwrap())
    }

    /// `P_{s,t}` applied to a batch of (possibly signed) payload fields;
    /// the step factorizations are shared across columns.
    pub fn evolve_many(&self, fields: &[Vec<S>], s: S, t: S) -> Result<Vec<Vec<S>>> {
        self.check_interval(s, t)?;
        let mut cols = fields.to_vec();
        self.advance(&mut cols, s, t, false)?;
        Ok(cols)
    }

    /// Evolves positive `f` given at time `start`, returning the state at
    /// each of the (increasing) `samples`.
    pub fn evolve_path(&self, f: &[S], start: S, samples: &[S]) -> Result<Vec<Vec<S>>> {
        check_positive(f)?;
        let mut prev = start;
        for &t in samples {
            self.check_interval(prev, t)?;
            prev = t;
        }
        let mut cols = vec![f.to_vec()];
        let mut out = Vec::with_capacity(samples.len());
        let mut cur = start;
        for &t in samples {
            self.advance(&mut cols, cur, t, true)?;
            out.push(cols[0].clone());
            cur = t;
        }
        Ok(out)
    }

    fn check_interval(&self, s: S, t: S) -> Result<()> {
        if !(s >= S::zero()) || t < s {
            return Err(ModelError::TimeOutOfRange {
                t: t.as_f64(),
                lo: s.as_f64(),
                hi: self.scenario.t_end().as_f64(),
            });
        }
        // allow slight overshoot of t_end from rounding of sample grids
        let hi = self.scenario.t_end() * (S::one() + S::real(1e-9));
        if t > hi {
            return Err(ModelError::TimeOutOfRange {
                t: t.as_f64(),
                lo: s.as_f64(),
                hi: self.scenario.t_end().as_f64(),
            });
        }
        Ok(())
    }

    fn advance(&self, cols: &mut [Vec<S>], t0: S, t1: S, positive: bool) -> Result<()> {
        let total = t1 - t0;
        if total == S::zero() {
            return Ok(());
        }
        let h = self.scenario.grid.h();
        let dt_max = h.min(total) / S::real(self.substep_divisor.max(1) as f64);
        let n_sub = (total / dt_max).ceil().as_f64() as usize;
        let n_sub = n_sub.max(1);
        let dt = total / S::real(n_sub as f64);
        let static_op = !self.scenario.metric.is_time_dependent();
        let mut cached: Option<(WittenOperator<S>, StepSolver<S>)> = None;
        let mut saved: Vec<Vec<S>> = Vec::new();
        for k in 0..n_sub {
            let a = t0 + dt * S::real(k as f64);
            if cached.is_none() || !static_op {
                let op = assemble_witten(self.scenario, a + dt * S::real(0.5))?;
                let solver = self.build_solver(&op, dt * S::real(0.5));
                cached = Some((op, solver));
            }
            let (op, solver) = cached.as_ref().unwrap();
            if positive {
                saved.clear();
                saved.extend(cols.iter().cloned());
            }
            for col in cols.iter_mut() {
                self.cn_column(op, solver, col, dt);
            }
            if positive && cols.iter().any(|c| !is_positive(c)) {
                for (col, save) in cols.iter_mut().zip(&saved) {
                    col.clone_from(save);
                }
                self.implicit_euler(cols, a, dt, 4)?;
                if let Some(min) =
                    cols.iter().map(|c| c.iter().copied().fold(S::infinity(), S::min)).reduce(S::min)
                {
                    if !(min > S::zero()) {
                        return Err(ModelError::PositivityFailure { min: min.as_f64() });
                    }
                }
            }
        }
        Ok(())
    }

    fn cn_column(&self, op: &WittenOperator<S>, solver: &StepSolver<S>, col: &mut Vec<S>, dt: S) {
        let half_dt = dt * S::real(0.5);
        let lu = op.apply(col);
        let rhs: Vec<S> = col.iter().zip(&lu).map(|(c, l)| *c + half_dt * *l).collect();
        self.solve_step(op, solver, half_dt, rhs, col);
    }

    fn solve_step(
        &self,
        op: &WittenOperator<S>,
        solver: &StepSolver<S>,
        gamma: S,
        mut rhs: Vec<S>,
        col: &mut Vec<S>,
    ) {
        match solver {
            StepSolver::Direct(lu) => {
                lu.solve(&mut rhs);
                *col = rhs;
            }
            StepSolver::Cyclic(cy) => {
                cy.solve(&mut rhs);
                *col = rhs;
            }
            StepSolver::Iterative { precond } => {
                // x ↦ x - γ L x, symmetric positive-definite in ⟨·,·⟩_μ
                let apply = |u: &[S], out: &mut [S]| {
                    op.apply_into(u, out);
                    for (o, ui) in out.iter_mut().zip(u) {
                        *o = *ui - gamma * *o;
                    }
                };
                pcg_weighted(
                    apply,
                    precond,
                    &op.weights,
                    &rhs,
                    col,
                    self.pcg_rel_tol,
                    self.pcg_max_iter,
                );
            }
        }
    }

    fn build_solver(&self, op: &WittenOperator<S>, gamma: S) -> StepSolver<S> {
        let grid = &self.scenario.grid;
        match (grid.domain(), grid.dim()) {
            (DomainKind::EuclideanBox, dim) => {
                let hb = if dim == 1 { 1 } else { grid.points_per_axis() };
                let n = op.len();
                let mut m = BandedMatrix::zeros(n, hb);
                let mut diag = vec![S::one(); n];
                op.for_each_edge(|i, j, kappa| {
                    diag[i] = diag[i] + gamma * kappa / op.weights[i];
                    diag[j] = diag[j] + gamma * kappa / op.weights[j];
                    m.set(i, j, -gamma * kappa / op.weights[i]);
                    m.set(j, i, -gamma * kappa / op.weights[j]);
                });
                for (i, d) in diag.iter().enumerate() {
                    m.set(i, i, *d);
                }
                m.factor();
                StepSolver::Direct(m)
            }
            (DomainKind::PeriodicTorus, 1) => {
                let n = op.len();
                let mut diag = vec![S::one(); n];
                let mut sub = vec![S::zero(); n];
                let mut sup = vec![S::zero(); n];
                let mut corner_top = S::zero();
                let mut corner_bot = S::zero();
                op.for_each_edge(|i, j, kappa| {
                    diag[i] = diag[i] + gamma * kappa / op.weights[i];
                    diag[j] = diag[j] + gamma * kappa / op.weights[j];
                    if j == i + 1 {
                        sup[i] = -gamma * kappa / op.weights[i];
                        sub[j] = -gamma * kappa / op.weights[j];
                    } else {
                        // wrap edge (n-1, 0)
                        corner_bot = -gamma * kappa / op.weights[i];
                        corner_top = -gamma * kappa / op.weights[j];
                    }
                });
                StepSolver::Cyclic(CyclicTridiag::new(&diag, &sub, &sup, corner_top, corner_bot))
            }
            (DomainKind::PeriodicTorus, _) => {
                let mut precond = op.neg_diagonal();
                for p in precond.iter_mut() {
                    *p = S::one() + gamma * *p;
                }
                StepSolver::Iterative { precond }
            }
        }
    }

    fn implicit_euler(&self, cols: &mut [Vec<S>], t0: S, dt: S, parts: usize) -> Result<()> {
        let sub_dt = dt / S::real(parts as f64);
        for p in 0..parts {
            let end = t0 + sub_dt * S::real((p + 1) as f64);
            let op = assemble_witten(self.scenario, end)?;
            let solver = self.build_solver(&op, sub_dt);
            for col in cols.iter_mut() {
                let rhs = col.clone();
                self.solve_step(&op, &solver, sub_dt, rhs, col);
            }
        }
        Ok(())
    }
}

fn is_positive<S: Scalar>(f: &[S]) -> bool {
    f.iter().all(|v| *v > S::zero())
}

fn check_positive<S: Scalar>(f: &[S]) -> Result<()> {
    let min = f.iter().copied().fold(S::infinity(), S::min);
    if !(min > S::zero()) {
        return Err(ModelError::NonPositiveField { min: min.as_f64() });
    }
    Ok(())
}
