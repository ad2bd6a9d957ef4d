//! Jacobi-preconditioned MINRES for symmetric, possibly indefinite systems.
//!
//! Follows the Paige–Saunders recurrences. The preconditioner is the
//! inverse of `|diag(K)|`, which stays positive definite when `K` is
//! indefinite.

use super::sparse::{axpy, dot, norm2, SparseSym};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct MinresStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `K x = rhs` to relative residual `tol`, `K` symmetric.
pub fn minres_solve(k: &SparseSym, rhs: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, MinresStats)> {
    let n = k.dim();
    if rhs.len() != n {
        return Err(Error::InvalidParameter("rhs length mismatch".into()));
    }
    let rhs_norm = norm2(rhs);
    let mut x = vec![0.0; n];
    if rhs_norm == 0.0 {
        return Ok((x, MinresStats { iterations: 0, relative_residual: 0.0 }));
    }
    let inv_diag: Vec<f64> = k
        .diagonal()
        .into_iter()
        .map(|d| if d.abs() > 0.0 { 1.0 / d.abs() } else { 1.0 })
        .collect();
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&inv_diag).map(|(a, b)| a * b).collect() };

    let mut r1 = rhs.to_vec();
    let mut y = precond(&r1);
    let beta1 = dot(&r1, &y).sqrt();

    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut r2 = r1.clone();
    let mut v = vec![0.0; n];

    let mut true_res = f64::INFINITY;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        k.mul_vec_into(&v, &mut y);
        if it >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        y = precond(&r2);
        oldb = beta;
        let beta_sq = dot(&r2, &y);
        if beta_sq < 0.0 {
            return Err(Error::IndefiniteBreakdown("preconditioner lost positivity".into()));
        }
        beta = beta_sq.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        let w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
        w = v
            .iter()
            .zip(&w1)
            .zip(&w2)
            .map(|((vi, a), b)| (vi - oldeps * a - delta * b) * denom)
            .collect();
        axpy(phi, &w, &mut x);

        // phibar tracks the preconditioned residual; confirm with the true one.
        if phibar <= 0.5 * tol * beta1 || beta == 0.0 {
            let mut r = k.mul_vec(&x);
            for (ri, bi) in r.iter_mut().zip(rhs) {
                *ri = bi - *ri;
            }
            true_res = norm2(&r) / rhs_norm;
            if true_res <= tol {
                return Ok((x, MinresStats { iterations: it, relative_residual: true_res }));
            }
            if beta == 0.0 {
                break;
            }
        }
    }
    if !true_res.is_finite() {
        let mut r = k.mul_vec(&x);
        for (ri, bi) in r.iter_mut().zip(rhs) {
            *ri = bi - *ri;
        }
        true_res = norm2(&r) / rhs_norm;
    }
    Err(Error::IndefiniteBreakdown(format!(
        "minres stalled after {it} iterations at relative residual {true_res:e}"
    )))
}
