//! Limiting exterior problems on `R^n \ B`: closed forms for the ball and a
//! radial finite-element oracle on a truncated domain.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::roots::bisect;

/// Surface area of the unit sphere in `R^n`, `2 π^{n/2} / Γ(n/2)`, via the
/// recurrence `σ_{n+2} = 2π σ_n / n` from `σ_2 = 2π`, `σ_3 = 4π`.
pub fn unit_sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    assert!(n >= 1, "dimension must be positive");
    let (mut k, mut s) = match n % 2 {
        0 => (2, 2.0 * PI),
        _ => (1, 2.0),
    };
    if n == 3 {
        return 4.0 * PI;
    }
    while k < n {
        s *= 2.0 * PI / k as f64;
        k += 2;
    }
    s
}

/// `λ*(κ) = σ_n (n-2) (κ-1)/κ` for the unit ball, with `λ*(1) = 0`.
pub fn lambda_star_ball(kappa: f64, n: usize) -> f64 {
    if kappa == 1.0 {
        return 0.0;
    }
    unit_sphere_area(n) * (n as f64 - 2.0) * (kappa - 1.0) / kappa
}

/// Limiting cell constants for the unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StarConstants {
    pub n: usize,
    pub sigma_n: f64,
    pub cap_star: f64,
    pub lambda_dir_star: f64,
    pub lambda_st_star: f64,
}

pub fn star_constants(n: usize) -> Result<StarConstants> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("dimension {n} < 3")));
    }
    let sigma_n = unit_sphere_area(n);
    let c = (n as f64 - 2.0) * sigma_n;
    Ok(StarConstants { n, sigma_n, cap_star: c, lambda_dir_star: c, lambda_st_star: c })
}

/// Geometric radial grid on `[1, R]` with `m` intervals, graded so that
/// half of the points fall in `[1, min(10, R)]`-ish.
pub fn radial_grid(radius: f64, m: usize) -> Result<Vec<f64>> {
    let half = m / 2;
    let target = 10f64.min(1.0 + 0.5 * (radius - 1.0));
    let frac = (target - 1.0) / (radius - 1.0);
    // (q^half - 1)/(q^m - 1) = frac; uniform grid when frac >= 1/2.
    let ratio = if frac >= half as f64 / m as f64 {
        1.0
    } else {
        let g = |q: f64| ((q.powi(half as i32) - 1.0) / (q.powi(m as i32) - 1.0)) - frac;
        bisect(|q| Ok(g(q)), 1.0 + 1e-12, 2.0, 1e-15, 300)?.root
    };
    let mut rho = Vec::with_capacity(m + 1);
    if ratio == 1.0 {
        for j in 0..=m {
            rho.push(1.0 + (radius - 1.0) * j as f64 / m as f64);
        }
    } else {
        let denom = ratio.powi(m as i32) - 1.0;
        for j in 0..=m {
            rho.push(1.0 + (radius - 1.0) * (ratio.powi(j as i32) - 1.0) / denom);
        }
    }
    rho[m] = radius;
    Ok(rho)
}

/// Truncated radial oracle for `λ*(κ)`.
///
/// Minimizes `σ_n ∫_1^R z'² ρ^{n-1} dρ` over continuous piecewise-linear
/// `z` subject to `z(1)² − κ z(R)² = ±1`. The minimizer is discrete
/// harmonic, so the problem reduces to the 2×2 energy matrix of the two
/// discrete harmonic functions with boundary data `(1, 0)` and `(0, 1)`,
/// and a 2×2 sign-indefinite pencil.
pub fn exterior_numeric(kappa: f64, n: usize, radius: f64, m: usize) -> Result<f64> {
    if !(kappa > 0.0) || n < 3 || !(radius > 1.0) || m < 8 {
        return Err(Error::InvalidParameter(format!(
            "exterior_numeric needs kappa > 0, n >= 3, R > 1, m >= 8 (got {kappa}, {n}, {radius}, {m})"
        )));
    }
    if kappa == 1.0 {
        return Ok(0.0);
    }
    let rho = radial_grid(radius, m)?;
    let sigma = unit_sphere_area(n);
    let p = n as f64;
    // Element conductances σ ∫ ρ^{n-1} dρ / h².
    let cond: Vec<f64> = rho
        .windows(2)
        .map(|w| {
            let h = w[1] - w[0];
            sigma * (w[1].powf(p) - w[0].powf(p)) / p / (h * h)
        })
        .collect();

    let h_inner = discrete_harmonic(&cond, 1.0, 0.0);
    let h_outer = discrete_harmonic(&cond, 0.0, 1.0);
    let energy = |u: &[f64], v: &[f64]| -> f64 {
        cond.iter().enumerate().map(|(e, k)| k * (u[e + 1] - u[e]) * (v[e + 1] - v[e])).sum()
    };
    let e11 = energy(&h_inner, &h_inner);
    let e12 = energy(&h_inner, &h_outer);
    let e22 = energy(&h_outer, &h_outer);

    // det(E − θ diag(1, −κ)) = −κθ² + (κ e11 − e22) θ + (e11 e22 − e12²) = 0
    let a = -kappa;
    let b = kappa * e11 - e22;
    let c = e11 * e22 - e12 * e12;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::ConstraintInfeasible { kappa });
    }
    let sq = disc.sqrt();
    // Stable pair of roots.
    let q = -0.5 * (b + b.signum() * sq);
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    let (lo, hi) = (r1.min(r2), r1.max(r2));
    let lambda = if kappa > 1.0 { hi } else { lo };
    if (kappa > 1.0 && !(lambda > 0.0)) || (kappa < 1.0 && !(lambda < 0.0)) {
        return Err(Error::ConstraintInfeasible { kappa });
    }
    Ok(lambda)
}

/// Nodal values of the discrete harmonic function on a 1D chain with
/// element conductances `cond` and end values `left`, `right`.
fn discrete_harmonic(cond: &[f64], left: f64, right: f64) -> Vec<f64> {
    // In 1D the interior equations say the flux k_e (u_{e+1} - u_e) is the
    // same on every element.
    let resistance: f64 = cond.iter().map(|k| 1.0 / k).sum();
    let flux = (right - left) / resistance;
    let mut u = Vec::with_capacity(cond.len() + 1);
    let mut acc = left;
    u.push(acc);
    for k in cond {
        acc += flux / k;
        u.push(acc);
    }
    let last = u.len() - 1;
    u[last] = right;
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_areas() {
        assert_eq!(unit_sphere_area(3), 4.0 * PI);
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-15);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn ball_closed_form_examples() {
        assert!((lambda_star_ball(2.0, 3) - 2.0 * PI).abs() < 1e-12);
        assert_eq!(lambda_star_ball(1.0, 3), 0.0);
        assert!((lambda_star_ball(0.5, 3) + 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn star_constants_examples() {
        let c3 = star_constants(3).unwrap();
        assert_eq!(c3.cap_star, 4.0 * PI);
        assert_eq!(c3.cap_star, c3.lambda_dir_star);
        assert_eq!(c3.lambda_st_star, c3.cap_star);
        let c4 = star_constants(4).unwrap();
        assert!((c4.cap_star - 4.0 * PI * PI).abs() < 1e-12);
        assert!((lambda_star_ball(1e12, 3) - c3.lambda_st_star).abs() < 1e-9);
        assert!(star_constants(2).is_err());
    }

    #[test]
    fn golden_formula() {
        for &k in &[0.1, 0.5, 0.99, 1.5, 7.0] {
            for n in 3..7 {
                let expect = unit_sphere_area(n) * (n as f64 - 2.0) * (k - 1.0) / k;
                assert_eq!(lambda_star_ball(k, n), expect);
            }
        }
    }

    #[test]
    fn small_kappa_limit() {
        // -κ λ*(κ) → (n-2) σ_n as κ → 0.
        let v = -1e-9 * lambda_star_ball(1e-9, 3);
        assert!((v - 4.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn radial_grid_shape() {
        let g = radial_grid(1000.0, 512).unwrap();
        assert_eq!(g.len(), 513);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[512], 1000.0);
        assert!((g[256] - 10.0).abs() < 1e-8);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn numeric_matches_closed_form() {
        for kappa in [0.5, 2.0] {
            let exact = lambda_star_ball(kappa, 3);
            let num = exterior_numeric(kappa, 3, 1000.0, 512).unwrap();
            assert!((num - exact).abs() / exact.abs() < 2e-3, "{kappa}: {num} vs {exact}");
        }
    }

    #[test]
    fn numeric_truncation_error_shrinks_with_radius() {
        let exact = lambda_star_ball(2.0, 3);
        let errs: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&r| (exterior_numeric(2.0, 3, r, 512).unwrap() - exact).abs())
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn numeric_is_monotone_in_kappa() {
        let ks = [0.1, 0.3, 0.6, 0.9, 1.0, 1.2, 2.0, 5.0, 50.0];
        let vals: Vec<f64> = ks.iter().map(|&k| exterior_numeric(k, 3, 200.0, 256).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]), "{vals:?}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(exterior_numeric(2.0, 3, 1.0, 64).is_err());
        assert!(exterior_numeric(2.0, 3, 10.0, 4).is_err());
        assert!(exterior_numeric(-1.0, 3, 10.0, 64).is_err());
    }
}
