//! Linear solvers for the Crank-Nicolson steps.
//!
//! Box domains produce banded systems solved by a direct LU factorization
//! (no pivoting: the matrices are strictly diagonally dominant M-matrices).
//! The 1-D torus adds one wrap edge, handled by the Sherman-Morrison cyclic
//! reduction on top of the tridiagonal solve. The 2-D torus is not banded,
//! so it uses preconditioned conjugate gradients in the μ-weighted inner
//! product, where the step matrix is symmetric positive-definite.

use crate::scalar::Scalar;

/// Banded matrix with half-bandwidth `hb`, row-major band storage.
pub struct BandedMatrix<S> {
    n: usize,
    hb: usize,
    data: Vec<S>,
}

impl<S: Scalar> BandedMatrix<S> {
    pub fn zeros(n: usize, hb: usize) -> Self {
        BandedMatrix { n, hb, data: vec![S::zero(); n * (2 * hb + 1)] }
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.hb >= row && col <= row + self.hb);
        row * (2 * self.hb + 1) + (col + self.hb - row)
    }

    pub fn set(&mut self, row: usize, col: usize, value: S) {
        let s = self.slot(row, col);
        self.data[s] = value;
    }

    pub fn get(&self, row: usize, col: usize) -> S {
        self.data[self.slot(row, col)]
    }

    /// In-place LU factorization without pivoting.
    pub fn factor(&mut self) {
        let n = self.n;
        let hb = self.hb;
        for k in 0..n {
            let pivot = self.get(k, k);
            let i_max = (k + hb).min(n - 1);
            for i in (k + 1)..=i_max {
                let l = self.get(i, k) / pivot;
                self.set(i, k, l);
                if l != S::zero() {
                    for j in (k + 1)..=i_max {
                        let v = self.get(i, j) - l * self.get(k, j);
                        self.set(i, j, v);
                    }
                }
            }
        }
    }

    /// Solves `A x = b` in place after `factor`.
    pub fn solve(&self, b: &mut [S]) {
        let n = self.n;
        let hb = self.hb;
        for i in 1..n {
            let j_min = i.saturating_sub(hb);
            let mut acc = b[i];
            for j in j_min..i {
                acc = acc - self.get(i, j) * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let j_max = (i + hb).min(n - 1);
            let mut acc = b[i];
            for j in (i + 1)..=j_max {
                acc = acc - self.get(i, j) * b[j];
            }
            b[i] = acc / self.get(i, i);
        }
    }
}

/// Factored cyclic tridiagonal system (1-D torus): tridiagonal core plus a
/// rank-one Sherman-Morrison correction for the wrap entries.
pub struct CyclicTridiag<S> {
    core: BandedMatrix<S>,
    z: Vec<S>,
    v_first: S,
    v_last: S,
    denom: S,
}

impl<S: Scalar> CyclicTridiag<S> {
    /// `diag`, `sub` (`sub[i]` couples row `i` to `i-1`, `sub[0]` unused),
    /// `sup` (`sup[i]` couples row `i` to `i+1`, last unused), and the two
    /// corner entries `(0, n-1)` and `(n-1, 0)`.
    pub fn new(diag: &[S], sub: &[S], sup: &[S], corner_top: S, corner_bot: S) -> Self {
        let n = diag.len();
        let gamma = -diag[0];
        let mut core = BandedMatrix::zeros(n, 1);
        for i in 0..n {
            let mut d = diag[i];
            if i == 0 {
                d = d - gamma;
            }
            if i == n - 1 {
                d = d - corner_top * corner_bot / gamma;
            }
            core.set(i, i, d);
            if i > 0 {
                core.set(i, i - 1, sub[i]);
            }
            if i + 1 < n {
                core.set(i, i + 1, sup[i]);
            }
        }
        core.factor();
        let mut z = vec![S::zero(); n];
        z[0] = gamma;
        z[n - 1] = corner_bot;
        core.solve(&mut z);
        let v_first = S::one();
        let v_last = corner_top / gamma;
        let denom = S::one() + v_first * z[0] + v_last * z[n - 1];
        CyclicTridiag { core, z, v_first, v_last, denom }
    }

    pub fn solve(&self, b: &mut [S]) {
        let n = b.len();
        self.core.solve(b);
        let factor = (self.v_first * b[0] + self.v_last * b[n - 1]) / self.denom;
        for (bi, zi) in b.iter_mut().zip(&self.z) {
            *bi = *bi - factor * *zi;
        }
    }
}

/// Preconditioned conjugate gradients in the weighted inner product
/// `⟨u, v⟩ = Σ w_i u_i v_i`. Returns the iteration count; panics are not
/// possible, non-convergence leaves the best iterate in `x`.
pub fn pcg_weighted<S: Scalar>(
    apply: impl Fn(&[S], &mut [S]),
    precond_diag: &[S],
    w: &[S],
    b: &[S],
    x: &mut [S],
    rel_tol: S,
    max_iter: usize,
) -> usize {
    let n = b.len();
    let dot = |u: &[S], v: &[S]| -> S {
        u.iter().zip(v).zip(w).map(|((ui, vi), wi)| *ui * *vi * *wi).sum()
    };
    let mut r = vec![S::zero(); n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let b_norm = dot(b, b).sqrt();
    let tol = rel_tol * if b_norm > S::zero() { b_norm } else { S::one() };
    let mut z: Vec<S> = r.iter().zip(precond_diag).map(|(ri, di)| *ri / *di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![S::zero(); n];
    for iter in 0..max_iter {
        if dot(&r, &r).sqrt() <= tol {
            return iter;
        }
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / precond_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    max_iter
}
