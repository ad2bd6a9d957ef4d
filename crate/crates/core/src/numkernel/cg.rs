//! Jacobi-preconditioned conjugate gradients.

use super::sparse::{axpy, dot, norm2, SparseSym};
use crate::error::{Error, Result};

/// Default relative residual for linear solves.
pub const DEFAULT_LINEAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `K x = rhs` for symmetric positive definite `K` to relative
/// residual `tol`. The iteration cap is `10 * dim`.
pub fn cg_solve(k: &SparseSym, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    cg_solve_observed(k, rhs, None, tol, |_, _| {}).map(|(x, _)| x)
}

/// Same as [`cg_solve`] with an optional starting guess and an observer
/// that sees every iterate.
pub fn cg_solve_observed<F>(
    k: &SparseSym,
    rhs: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    mut observe: F,
) -> Result<(Vec<f64>, CgStats)>
where
    F: FnMut(usize, &[f64]),
{
    let n = k.dim();
    if rhs.len() != n {
        return Err(Error::InvalidParameter(format!(
            "rhs length {} does not match operator dimension {n}",
            rhs.len()
        )));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} outside (0, 1)")));
    }
    let rhs_norm = norm2(rhs);
    let mut x = match x0 {
        Some(g) => g.to_vec(),
        None => vec![0.0; n],
    };
    if rhs_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok((x, CgStats { iterations: 0, relative_residual: 0.0 }));
    }

    let inv_diag: Vec<f64> = k
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut r = rhs.to_vec();
    if x0.is_some() {
        let kx = k.mul_vec(&x);
        axpy(-1.0, &kx, &mut r);
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut kp = vec![0.0; n];
    let cap = 10 * n.max(1);

    let mut res = norm2(&r) / rhs_norm;
    observe(0, &x);
    let mut it = 0;
    while res > tol {
        if it == cap {
            return Err(Error::NoConvergence { solver: "cg", iterations: it, residual: res });
        }
        it += 1;
        k.mul_vec_into(&p, &mut kp);
        let pkp = dot(&p, &kp);
        if !(pkp > 0.0) {
            return Err(Error::NoConvergence { solver: "cg", iterations: it, residual: res });
        }
        let alpha = rz / pkp;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &kp, &mut r);
        observe(it, &x);
        res = norm2(&r) / rhs_norm;
        if res <= tol {
            break;
        }
        for ((zi, ri), di) in z.iter_mut().zip(&r).zip(&inv_diag) {
            *zi = ri * di;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }

    // Recurrence drift check on the true residual.
    let mut true_r = k.mul_vec(&x);
    for (t, b) in true_r.iter_mut().zip(rhs) {
        *t = b - *t;
    }
    let true_res = norm2(&true_r) / rhs_norm;
    if true_res > 10.0 * tol {
        return Err(Error::NoConvergence { solver: "cg", iterations: it, residual: true_res });
    }
    Ok((x, CgStats { iterations: it, relative_residual: true_res }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let k = SparseSym::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let x = cg_solve(&k, &[3.0, 3.0], 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_takes_one_iteration() {
        let k = SparseSym::identity(5);
        let r = [1.0, -2.0, 3.0, 0.5, 7.0];
        let (x, stats) = cg_solve_observed(&k, &r, None, 1e-12, |_, _| {}).unwrap();
        assert_eq!(stats.iterations, 1);
        assert_eq!(x, r.to_vec());
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let k = SparseSym::identity(3);
        assert_eq!(cg_solve(&k, &[0.0; 3], 1e-9).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let k = SparseSym::identity(2);
        assert!(matches!(cg_solve(&k, &[1.0, 1.0], 1.5), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn indefinite_matrix_reports_no_convergence() {
        let k = SparseSym::from_diagonal(&[1.0, -1.0]);
        let e = cg_solve(&k, &[1.0, 1.0], 1e-10).unwrap_err();
        assert!(matches!(e, Error::NoConvergence { .. }));
    }
}
