//! Smallest and nearest eigenpairs of symmetric pencils `A v = λ G v`.

use serde::Serialize;

use super::cg::cg_solve;
use super::minres::minres_solve;
use super::sparse::{norm2, SparseSym};
use crate::error::{Error, Result};

/// Default relative eigen-residual.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy)]
pub struct EigenConfig {
    /// Stop once `‖Av − λGv‖ ≤ tol ‖Av‖`.
    pub tol: f64,
    /// Relative residual for the inner linear solves.
    pub inner_tol: f64,
    pub max_iter: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self { tol: DEFAULT_EIGEN_TOL, inner_tol: 1e-9, max_iter: 500 }
    }
}

impl EigenConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, inner_tol: (tol * 1e-2).clamp(1e-13, 1e-9), ..Self::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub lambda: f64,
    pub vector: Vec<f64>,
    /// `‖Av − λGv‖₂`.
    pub residual: f64,
    pub iterations: usize,
    pub sign_definite: bool,
    /// `vᵀGv` after normalization: `+1`, `-1`, or `1` for definite pencils.
    pub signature: f64,
}

impl EigenPair {
    pub fn relative_residual(&self, a: &SparseSym) -> f64 {
        let av = norm2(&a.mul_vec(&self.vector));
        if av == 0.0 {
            0.0
        } else {
            self.residual / av
        }
    }
}

/// Tolerance on the wrong-signed entries of a max-normalized vector.
pub const SIGN_SLACK: f64 = 1e-8;

/// Normalizes `v` by its largest entry in absolute value, flipping the global
/// sign so that the largest entry is positive. Returns whether every entry is
/// then `≥ -SIGN_SLACK`.
pub fn orient_and_check_sign(v: &mut [f64]) -> bool {
    let (mut peak, mut at) = (0.0f64, 0usize);
    for (i, x) in v.iter().enumerate() {
        if x.abs() > peak {
            peak = x.abs();
            at = i;
        }
    }
    if peak == 0.0 {
        return false;
    }
    if v[at] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v.iter().all(|&x| x / peak >= -SIGN_SLACK)
}

/// Flips `v` so its largest-magnitude entry is positive, without rescaling,
/// and reports sign-definiteness as in [`orient_and_check_sign`].
fn orient_in_place(v: &mut [f64]) -> bool {
    let mut scaled = v.to_vec();
    let definite = orient_and_check_sign(&mut scaled);
    let peak = v.iter().fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m });
    if peak < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    definite
}

fn residual_norm(a: &SparseSym, g: &SparseSym, lambda: f64, x: &[f64]) -> (f64, f64) {
    let ax = a.mul_vec(x);
    let gx = g.mul_vec(x);
    let r: f64 = ax.iter().zip(&gx).map(|(p, q)| (p - lambda * q).powi(2)).sum::<f64>().sqrt();
    (r, norm2(&ax))
}

/// Smallest eigenpair of `A v = λ Mlike v` for `A` SPD and `Mlike` PSD, by
/// inverse iteration with CG inner solves. The vector is normalized to
/// `vᵀ Mlike v = 1`.
pub fn inverse_power(a: &SparseSym, mlike: &SparseSym, cfg: &EigenConfig) -> Result<EigenPair> {
    let n = a.dim();
    if mlike.dim() != n {
        return Err(Error::InvalidParameter("pencil dimension mismatch".into()));
    }
    let mut x = vec![1.0; n];
    let m0 = mlike.quad_form(&x);
    if !(m0 > 0.0) {
        // Constant start lies in the null space; fall back to a ramp.
        x = (0..n).map(|i| 1.0 + (i as f64 + 1.0) / n as f64).collect();
    }
    let mut last_res = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let rhs = mlike.mul_vec(&x);
        if norm2(&rhs) == 0.0 {
            return Err(Error::ZeroPencil);
        }
        let y = cg_solve(a, &rhs, cfg.inner_tol)?;
        let my = mlike.quad_form(&y);
        if !(my > 0.0) {
            return Err(Error::ZeroPencil);
        }
        let s = 1.0 / my.sqrt();
        x = y.into_iter().map(|v| v * s).collect();
        let lambda = a.quad_form(&x);
        let (res, ax) = residual_norm(a, mlike, lambda, &x);
        last_res = if ax > 0.0 { res / ax } else { 0.0 };
        if last_res <= cfg.tol {
            let sign_definite = orient_in_place(&mut x);
            return Ok(EigenPair {
                lambda,
                vector: x,
                residual: res,
                iterations: it,
                sign_definite,
                signature: 1.0,
            });
        }
    }
    Err(Error::NoConvergence { solver: "inverse_power", iterations: cfg.max_iter, residual: last_res })
}

/// Eigenpair of `A v = λ G v` (symmetric `A`, symmetric possibly indefinite
/// `G`) with eigenvalue nearest `shift`, by shift-and-invert iteration with
/// MINRES inner solves. The vector is normalized to `|vᵀGv| = 1` and the
/// sign of `vᵀGv` is reported in [`EigenPair::signature`].
pub fn pencil_nearest(a: &SparseSym, g: &SparseSym, shift: f64, cfg: &EigenConfig) -> Result<EigenPair> {
    let n = a.dim();
    if g.dim() != n {
        return Err(Error::InvalidParameter("pencil dimension mismatch".into()));
    }
    let shifted = a.lin_comb(1.0, g, -shift);
    let inner_cap = 20 * n + 200;
    let mut x = vec![1.0; n];
    let mut last_res = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let rhs = g.mul_vec(&x);
        if norm2(&rhs) == 0.0 {
            return Err(Error::ZeroPencil);
        }
        let (mut y, _) = minres_solve(&shifted, &rhs, cfg.inner_tol, inner_cap)?;
        let ynorm = norm2(&y);
        if !(ynorm > 0.0) || !ynorm.is_finite() {
            return Err(Error::IndefiniteBreakdown("shifted solve returned a null iterate".into()));
        }
        y.iter_mut().for_each(|v| *v /= ynorm);
        let gy = g.quad_form(&y);
        // Rayleigh update only once vᵀGv is safely away from zero.
        if gy.abs() <= 1e-12 {
            x = y;
            continue;
        }
        let s = 1.0 / gy.abs().sqrt();
        y.iter_mut().for_each(|v| *v *= s);
        x = y;
        let signature = gy.signum();
        let lambda = a.quad_form(&x) * signature;
        let (res, ax) = residual_norm(a, g, lambda, &x);
        last_res = if ax > 0.0 { res / ax } else { 0.0 };
        if last_res <= cfg.tol {
            let sign_definite = orient_in_place(&mut x);
            return Ok(EigenPair { lambda, vector: x, residual: res, iterations: it, sign_definite, signature });
        }
    }
    Err(Error::NoConvergence { solver: "pencil_nearest", iterations: cfg.max_iter, residual: last_res })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> EigenConfig {
        EigenConfig { tol: 1e-10, inner_tol: 1e-13, max_iter: 500 }
    }

    #[test]
    fn inverse_power_diagonal() {
        let a = SparseSym::from_diagonal(&[2.0, 3.0]);
        let m = SparseSym::identity(2);
        let p = inverse_power(&a, &m, &tight()).unwrap();
        assert!((p.lambda - 2.0).abs() < 1e-10);
        assert!((p.vector[0].abs() - 1.0).abs() < 1e-8 && p.vector[1].abs() < 1e-5);
    }

    #[test]
    fn inverse_power_singular_mass() {
        let a = SparseSym::from_diagonal(&[2.0, 3.0]);
        let m = SparseSym::from_diagonal(&[1.0, 0.0]);
        let p = inverse_power(&a, &m, &tight()).unwrap();
        assert!((p.lambda - 2.0).abs() < 1e-12);
        assert_eq!(p.vector[1], 0.0);
    }

    #[test]
    fn inverse_power_zero_pencil() {
        let a = SparseSym::from_diagonal(&[2.0, 3.0]);
        let m = SparseSym::from_diagonal(&[0.0, 0.0]);
        assert!(matches!(inverse_power(&a, &m, &tight()), Err(Error::ZeroPencil)));
    }

    #[test]
    fn laplacian_1d_first_eigenvalue() {
        // Linear elements on (0,1), 64 intervals, Dirichlet ends.
        let intervals = 64;
        let h = 1.0 / intervals as f64;
        let n = intervals - 1;
        let mut ta = Vec::new();
        let mut tm = Vec::new();
        for i in 0..n {
            ta.push((i, i, 2.0 / h));
            tm.push((i, i, 4.0 * h / 6.0));
            if i + 1 < n {
                for (r, c) in [(i, i + 1), (i + 1, i)] {
                    ta.push((r, c, -1.0 / h));
                    tm.push((r, c, h / 6.0));
                }
            }
        }
        let a = SparseSym::from_triplets(n, &ta).unwrap();
        let m = SparseSym::from_triplets(n, &tm).unwrap();
        let p = inverse_power(&a, &m, &EigenConfig::default()).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((p.lambda - pi2).abs() / pi2 < 5e-3, "{}", p.lambda);
        assert!(p.sign_definite);
    }

    #[test]
    fn pencil_positive_branch() {
        let a = SparseSym::from_diagonal(&[1.0, 2.0]);
        let g = SparseSym::from_diagonal(&[1.0, -1.0]);
        let p = pencil_nearest(&a, &g, 0.5, &tight()).unwrap();
        assert!((p.lambda - 1.0).abs() < 1e-10);
        assert_eq!(p.signature, 1.0);
        let rq = a.quad_form(&p.vector) / g.quad_form(&p.vector);
        assert!((rq - p.lambda).abs() < 1e-10);
    }

    #[test]
    fn pencil_negative_branch() {
        let a = SparseSym::from_diagonal(&[1.0, 2.0]);
        let g = SparseSym::from_diagonal(&[1.0, -1.0]);
        let p = pencil_nearest(&a, &g, -1.5, &tight()).unwrap();
        assert!((p.lambda + 2.0).abs() < 1e-10);
        assert_eq!(p.signature, -1.0);
        assert!((g.quad_form(&p.vector) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn sign_check_tolerates_roundoff() {
        let mut v = vec![-1.0, -0.5, 1e-10];
        assert!(orient_and_check_sign(&mut v));
        assert_eq!(v[0], 1.0);
        let mut w = vec![1.0, -0.1];
        assert!(!orient_and_check_sign(&mut w));
    }
}
