//! Dense complex linear solvers: partial-pivoting LU and restarted GMRES.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::CVec3;

/// Required relative residual of every forward solve.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

pub(crate) fn stack(v: &[CVec3]) -> DVector<Complex64> {
    DVector::from_iterator(3 * v.len(), v.iter().flat_map(|x| x.iter().copied()))
}

pub(crate) fn unstack(x: &DVector<Complex64>) -> Vec<CVec3> {
    x.as_slice().chunks(3).map(|c| CVec3::new(c[0], c[1], c[2])).collect()
}

pub(crate) fn check_residual(residual: f64) -> Result<()> {
    if residual > SOLVE_TOLERANCE || !residual.is_finite() {
        return Err(Error::Solver(format!("relative residual {residual:e} above {SOLVE_TOLERANCE:e}")));
    }
    Ok(())
}

/// Which solver to use for a dense system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolverMethod {
    Direct,
    Gmres { restart: usize, tolerance: f64, max_iterations: usize },
}

impl Default for SolverMethod {
    fn default() -> Self {
        SolverMethod::Direct
    }
}

impl SolverMethod {
    pub fn gmres_default() -> Self {
        SolverMethod::Gmres { restart: 60, tolerance: 1e-12, max_iterations: 2000 }
    }
}

/// Smallest ratio `min |U_ii| / max |U_ii|` accepted from the factorization.
pub const PIVOT_RATIO_FLOOR: f64 = 1e-13;

/// LU factorization of a square complex matrix.
pub struct DenseLu {
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    pub pivot_ratio: f64,
}

impl DenseLu {
    pub fn new(a: DMatrix<Complex64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Solver("matrix is not square".into()));
        }
        let lu = a.lu();
        let u = lu.u();
        let diag: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].norm()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        let pivot_ratio = if max > 0.0 { min / max } else { 0.0 };
        if !(pivot_ratio > PIVOT_RATIO_FLOOR) {
            return Err(Error::Solver(format!("ill-conditioned factorization: pivot ratio {pivot_ratio:e}")));
        }
        Ok(Self { lu, pivot_ratio })
    }

    pub fn solve(&self, b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        self.lu.solve(b).ok_or_else(|| Error::Solver("singular factorization".into()))
    }
}

/// Relative residual `‖Ax − b‖ / ‖b‖` (zero when `b = 0` and `x = 0`).
pub fn relative_residual(a: &DMatrix<Complex64>, x: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    let r = a * x - b;
    let nb = b.norm();
    if nb == 0.0 {
        r.norm()
    } else {
        r.norm() / nb
    }
}

/// Outcome of a GMRES run.
#[derive(Debug, Clone)]
pub struct GmresReport {
    pub solution: DVector<Complex64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Restarted GMRES with modified Gram–Schmidt and Givens rotations.
pub fn gmres<F>(apply: F, b: &DVector<Complex64>, restart: usize, tol: f64, max_iterations: usize) -> Result<GmresReport>
where
    F: Fn(&DVector<Complex64>) -> DVector<Complex64>,
{
    let n = b.len();
    let bnorm = b.norm();
    let mut x = DVector::<Complex64>::zeros(n);
    if bnorm == 0.0 {
        return Ok(GmresReport { solution: x, iterations: 0, relative_residual: 0.0 });
    }
    let m = restart.max(1).min(n.max(1));
    let mut total = 0usize;
    loop {
        let r = b - apply(&x);
        let beta = r.norm();
        if beta / bnorm <= tol {
            return Ok(GmresReport { solution: x, iterations: total, relative_residual: beta / bnorm });
        }
        if total >= max_iterations {
            return Err(Error::Solver(format!(
                "GMRES did not converge in {total} iterations (relative residual {:e})",
                beta / bnorm
            )));
        }
        let mut v: Vec<DVector<Complex64>> = vec![r / Complex64::new(beta, 0.0)];
        let mut h = DMatrix::<Complex64>::zeros(m + 1, m);
        let mut cs = vec![Complex64::default(); m];
        let mut sn = vec![Complex64::default(); m];
        let mut g = DVector::<Complex64>::zeros(m + 1);
        g[0] = Complex64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            let mut w = apply(&v[k]);
            for (i, vi) in v.iter().enumerate() {
                let hik = vi.dotc(&w);
                h[(i, k)] = hik;
                w -= vi * hik;
            }
            let wn = w.norm();
            h[(k + 1, k)] = Complex64::new(wn, 0.0);
            for i in 0..k {
                let t = cs[i].conj() * h[(i, k)] + sn[i].conj() * h[(i + 1, k)];
                h[(i + 1, k)] = -sn[i] * h[(i, k)] + cs[i] * h[(i + 1, k)];
                h[(i, k)] = t;
            }
            let a = h[(k, k)];
            let bb = h[(k + 1, k)];
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if den == 0.0 {
                (Complex64::new(1.0, 0.0), Complex64::default())
            } else {
                (a / den, bb / den)
            };
            cs[k] = c;
            sn[k] = s;
            h[(k, k)] = c.conj() * a + s.conj() * bb;
            h[(k + 1, k)] = Complex64::default();
            g[k + 1] = -s * g[k];
            g[k] = c.conj() * g[k];
            total += 1;
            k_used = k + 1;
            if g[k + 1].norm() / bnorm <= tol || wn == 0.0 || total >= max_iterations {
                break;
            }
            v.push(w / Complex64::new(wn, 0.0));
        }
        let mut y = DVector::<Complex64>::zeros(k_used);
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in (i + 1)..k_used {
                s -= h[(i, j)] * y[j];
            }
            y[i] = s / h[(i, i)];
        }
        for (i, yi) in y.iter().enumerate() {
            x += &v[i] * *yi;
        }
    }
}
