//! Executable acceptance suite. Every criterion is a plain function that
//! runs its computation, compares against its oracle at the stated
//! tolerance, and reports a pass/fail outcome with a one-line detail.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cellmesh::{build_cell_mesh, OuterMode};
use crate::cellspec::{
    capacity, cell_spectrum, extrapolate_star, kappa_sweep, lambda_dir, lambda_eps_kappa, CellOptions, CellSetup,
};
use crate::assembly::{assemble_cell_forms, constraint_form};
use crate::error::{Error, Result};
use crate::exterior::{exterior_numeric, lambda_star_ball};
use crate::homog::{convergence_study, regime_sweep, Source, StudyOptions, Trend};
use crate::numkernel::{cg_solve, inverse_power, pencil_nearest, EigenConfig, SparseSym};
use crate::strangeterm::{kappa_star, strange_term_curve, ClosedForm};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2}. {:<34} {:>8.2}s / {:>5.0}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.budget_seconds,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidateOptions {
    /// Flip the sign of the volume term of the constraint form, to check
    /// that the suite catches a broken pencil.
    pub inject_sign_fault: bool,
}

impl ValidateOptions {
    fn cell(&self) -> CellOptions {
        CellOptions { flip_constraint_sign: self.inject_sign_fault, ..CellOptions::default() }
    }
}

struct Criterion {
    id: u8,
    name: &'static str,
    budget: f64,
    quick: bool,
    run: fn(&ValidateOptions) -> Result<(bool, String)>,
}

const CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, name: "ball closed-form chain", budget: 1.0, quick: true, run: closed_form_chain },
    Criterion { id: 2, name: "exterior numeric oracle", budget: 1.0, quick: true, run: exterior_oracle },
    Criterion { id: 3, name: "strange-term limits", budget: 1.0, quick: true, run: strange_term_limits },
    Criterion { id: 4, name: "cell-problem identities", budget: 120.0, quick: false, run: cell_identities },
    Criterion { id: 5, name: "monotonicity in kappa", budget: 180.0, quick: false, run: monotonicity },
    Criterion { id: 6, name: "Dirichlet bound for kappa < 1", budget: 120.0, quick: false, run: dirichlet_bound },
    Criterion { id: 7, name: "capacity vs Dirichlet trend", budget: 180.0, quick: false, run: capacity_trend },
    Criterion { id: 8, name: "critical-scaling limits", budget: 600.0, quick: false, run: critical_limits },
    Criterion { id: 9, name: "homogenization convergence", budget: 1200.0, quick: false, run: homogenization },
    Criterion { id: 10, name: "regime classification", budget: 600.0, quick: false, run: regimes },
    Criterion { id: 11, name: "kernel oracles", budget: 5.0, quick: true, run: kernel_oracles },
];

pub const NUM_CRITERIA: u8 = 11;

/// Runs a single criterion by number (1–11).
pub fn run_criterion(id: u8, opts: &ValidateOptions) -> Result<CriterionOutcome> {
    let crit = CRITERIA
        .iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::InvalidParameter(format!("no criterion {id}")))?;
    let start = Instant::now();
    let (ok, detail) = match (crit.run)(opts) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let seconds = start.elapsed().as_secs_f64();
    let in_budget = seconds < crit.budget;
    let detail = if in_budget { detail } else { format!("{detail}; over runtime budget") };
    Ok(CriterionOutcome { id, name: crit.name, passed: ok && in_budget, detail, seconds, budget_seconds: crit.budget })
}

/// Runs the full suite, or with `quick` only the closed-form and
/// small-mesh checks.
pub fn run_suite(quick: bool, opts: &ValidateOptions) -> Vec<CriterionOutcome> {
    CRITERIA
        .iter()
        .filter(|s| !quick || s.quick)
        .map(|s| run_criterion(s.id, opts).expect("criterion ids are valid"))
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn closed_form_chain(_: &ValidateOptions) -> Result<(bool, String)> {
    let l2 = lambda_star_ball(2.0, 3);
    let lh = lambda_star_ball(0.5, 3);
    let ks = kappa_star(4.0 * PI, &ClosedForm { n: 3 }, Some(1e-10))?;
    let ok = (l2 - 2.0 * PI).abs() <= 1e-12
        && (lh + 4.0 * PI).abs() <= 1e-12
        && (ks.kappa_star - 0.5).abs() <= 1e-10
        && (ks.strange_term - 2.0 * PI).abs() <= 1e-10;
    Ok((ok, format!("λ*(2)={l2:.12}, λ*(1/2)={lh:.12}, κ*(4π)={:.12}, βκ*={:.12}", ks.kappa_star, ks.strange_term)))
}

fn exterior_oracle(_: &ValidateOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for kappa in [0.5, 2.0] {
        worst = worst.max(rel(exterior_numeric(kappa, 3, 1000.0, 512)?, lambda_star_ball(kappa, 3)));
    }
    Ok((worst <= 2e-3, format!("max relative gap {worst:.3e} (limit 2e-3)")))
}

fn strange_term_limits(_: &ValidateOptions) -> Result<(bool, String)> {
    let ball = ClosedForm { n: 3 };
    let small = kappa_star(1e-6, &ball, None)?.strange_term;
    let big = kappa_star(1e6, &ball, None)?.strange_term;
    let curve = strange_term_curve(&[0.1, 1.0, 10.0, 100.0], &ball, None)?;
    let increasing = curve.windows(2).all(|w| w[1].strange_term > w[0].strange_term);
    let big_gap = rel(big, 4.0 * PI);
    let ok = small <= 1e-6 && big_gap <= 2e-5 && increasing;
    Ok((ok, format!("β=1e-6 → {small:.3e}, β=1e6 gap {big_gap:.2e}, increasing={increasing}")))
}

fn cell_identities(opts: &ValidateOptions) -> Result<(bool, String)> {
    let setup = CellSetup::critical(0.5, 3)?;
    let mut ok = true;
    let mut parts = vec![format!("{} dofs", setup.periodic_forms.dofs.n_dofs)];
    for kappa in [0.5, 2.0] {
        let p = lambda_eps_kappa(&setup.periodic, &setup.periodic_forms, kappa, setup.ball_shift_guess(kappa), &opts.cell())?;
        let mut v = p.vector.clone();
        let definite = crate::numkernel::orient_and_check_sign(&mut v);
        let d = p.diagnostics;
        ok &= definite && d.rayleigh_residual <= 1e-7 && d.bdav_residual <= 1e-6;
        parts.push(format!("κ={kappa}: λ={:.6}, rayleigh {:.1e}, bdav {:.1e}", p.lambda, d.rayleigh_residual, d.bdav_residual));
    }
    Ok((ok, parts.join("; ")))
}

const MONO_KAPPAS: [f64; 6] = [0.3, 0.6, 0.9, 1.5, 2.0, 3.0];

fn monotonicity(opts: &ValidateOptions) -> Result<(bool, String)> {
    let setup = CellSetup::critical(0.5, 2)?;
    let sweep = kappa_sweep(&setup, &MONO_KAPPAS, &opts.cell())?;
    let lambdas: Vec<f64> = sweep.iter().map(|p| p.lambda).collect();
    let ok = lambdas.windows(2).all(|w| w[1] >= w[0] - 1e-8);
    let list: Vec<String> = lambdas.iter().map(|l| format!("{l:.5}")).collect();
    Ok((ok, format!("λ = [{}]", list.join(", "))))
}

fn dirichlet_bound(opts: &ValidateOptions) -> Result<(bool, String)> {
    let setup = CellSetup::critical(0.5, 2)?;
    let cell = opts.cell();
    let dir = lambda_dir(&setup.periodic, &setup.periodic_forms, &cell)?.lambda;
    let sweep = kappa_sweep(&setup, &[0.3, 0.6, 0.9], &cell)?;
    let worst = sweep.iter().map(|p| -p.kappa * p.lambda - dir).fold(f64::NEG_INFINITY, f64::max);
    Ok((worst <= 1e-10, format!("Λ^Dir={dir:.6}, max(−κλ − Λ^Dir)={worst:.4e}")))
}

fn capacity_trend(opts: &ValidateOptions) -> Result<(bool, String)> {
    let cell = opts.cell();
    let ratio = |eps: f64| -> Result<f64> {
        let s = CellSetup::critical(eps, 2)?;
        let cap = capacity(&s.bounded, &s.bounded_forms, &cell)?.cap;
        let dir = lambda_dir(&s.periodic, &s.periodic_forms, &cell)?.lambda;
        Ok(cap / dir)
    };
    let (coarse, fine) = (ratio(0.5)?, ratio(0.25)?);
    // Condenser bracket between the circumscribed and inscribed spheres of
    // the cell, for the ε = 1/2 hole.
    let s = CellSetup::critical(0.5, 2)?;
    let cap = capacity(&s.bounded, &s.bounded_forms, &cell)?.cap;
    let r = s.r_cell;
    let (lower, upper) = (4.0 * PI / (1.0 / r - 2.0 / 3f64.sqrt()), 4.0 * PI / (1.0 / r - 2.0));
    let ok = (0.9..=1.1).contains(&fine) && (fine - 1.0).abs() < (coarse - 1.0).abs() && lower <= cap && cap <= upper;
    Ok((ok, format!("Cap/Λ^Dir: ε=1/2 {coarse:.4}, ε=1/4 {fine:.4}; Cap(r=0.25)={cap:.4} in [{lower:.4}, {upper:.4}]")))
}

const CHAIN: [f64; 3] = [0.5, 1.0 / 3.0, 0.25];

fn critical_limits(opts: &ValidateOptions) -> Result<(bool, String)> {
    let cell = opts.cell();
    let (mut lam, mut st, mut dir) = (Vec::new(), Vec::new(), Vec::new());
    for eps in CHAIN {
        let s = CellSetup::critical(eps, 2)?;
        let sp = cell_spectrum(&s, Some(2.0), &cell)?;
        lam.push((eps, sp.lambda_eps_kappa.unwrap_or(f64::NAN)));
        st.push((eps, sp.lambda_st));
        dir.push((eps, sp.lambda_dir));
    }
    let (l, s, d) = (extrapolate_star(&lam)?, extrapolate_star(&st)?, extrapolate_star(&dir)?);
    let gaps = [rel(l.limit, 2.0 * PI), rel(s.limit, 4.0 * PI), rel(d.limit, 4.0 * PI)];
    let ok = gaps.iter().all(|g| *g <= 0.15);
    Ok((
        ok,
        format!(
            "λ(ε,2)/ε² → {:.4} (gap {:.1}%), Λ^St/ε² → {:.4} ({:.1}%), Λ^Dir/ε² → {:.4} ({:.1}%)",
            l.limit,
            100.0 * gaps[0],
            s.limit,
            100.0 * gaps[1],
            d.limit,
            100.0 * gaps[2]
        ),
    ))
}

fn homogenization(opts: &ValidateOptions) -> Result<(bool, String)> {
    let study = StudyOptions { cell: opts.cell(), ..StudyOptions::default() };
    let report = convergence_study(&CHAIN, 0.0, 4.0 * PI, &Source::default_sine(), 2, &study)?;
    if let Some(r) = report.rows.iter().find(|r| r.failure.is_some()) {
        return Ok((false, format!("row ε={} failed: {}", r.eps, r.failure.as_deref().unwrap_or(""))));
    }
    let errs: Vec<f64> = report.rows.iter().map(|r| r.l2_error).collect();
    let q: Vec<f64> = report.rows.iter().map(|r| r.rate_quotient).collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let spread = q.iter().cloned().fold(0.0, f64::max) / q.iter().cloned().fold(f64::INFINITY, f64::min);
    let ok = decreasing && spread <= 10.0;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ");
    Ok((ok, format!("L2 errors [{}], rate quotient spread {spread:.2}", fmt(&errs))))
}

fn regimes(opts: &ValidateOptions) -> Result<(bool, String)> {
    let cell = opts.cell();
    let mut ok = true;
    let mut parts = Vec::new();
    for (a, want) in [(4.0, Trend::DecreasingToZero), (2.0, Trend::IncreasingToInfinity), (3.0, Trend::Settling)] {
        match regime_sweep(a, &CHAIN, 2.0, 2, &cell) {
            Ok(rec) => {
                let good = rec.trend == want;
                ok &= good;
                let ratios: Vec<String> = rec.ratios.iter().map(|r| format!("{r:.3}")).collect();
                parts.push(format!("a={a}: ratios [{}] {:?}", ratios.join(", "), rec.trend));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("a={a}: {e}"));
            }
        }
    }
    Ok((ok, parts.join("; ")))
}

/// Dense oracles for the small-problem kernel checks.
pub mod oracle {
    use super::*;

    pub fn dense(a: &SparseSym) -> DMatrix<f64> {
        let n = a.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Eigenvalues `λ` of `A v = λ B v` for SPD `A` and PSD `B`, via
    /// `L⁻¹ B L⁻ᵀ` with `A = LLᵀ`; returns the smallest finite one.
    pub fn smallest_definite(a: &SparseSym, b: &SparseSym) -> Result<f64> {
        let chol = dense(a).cholesky().ok_or_else(|| Error::InvalidParameter("A is not positive definite".into()))?;
        let s = congruence(&chol, &dense(b));
        let top = s.symmetric_eigenvalues().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(top > 0.0) {
            return Err(Error::ZeroPencil);
        }
        Ok(1.0 / top)
    }

    fn congruence(chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let l = chol.l();
        let x = l.solve_lower_triangular(b).expect("Cholesky factor is invertible");
        let y = l.solve_lower_triangular(&x.transpose()).expect("Cholesky factor is invertible");
        0.5 * (&y + y.transpose())
    }

    /// The pencil eigenvalue `A v = λ G v` on the branch picked by `side`
    /// (`+1`: smallest positive-type eigenvalue above `mu`; `−1`: largest
    /// negative-type eigenvalue below `mu`), for a `mu` at which `A − μG` is
    /// positive definite.
    pub fn pencil_branch(a: &SparseSym, g: &SparseSym, mu: f64, side: f64) -> Result<f64> {
        let c = dense(a) - mu * dense(g);
        let chol = c.cholesky().ok_or_else(|| Error::InvalidParameter(format!("A − {mu}G is not positive definite")))?;
        let theta = congruence(&chol, &dense(g)).symmetric_eigenvalues();
        // (A − μG) v = (λ − μ) G v, so θ = 1/(λ − μ) for S = L⁻¹GL⁻ᵀ.
        let pick = if side > 0.0 {
            theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        } else {
            theta.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        if pick * side <= 0.0 {
            return Err(Error::WrongBranch { lambda: f64::NAN, reason: "no eigenvalue on the requested side".into() });
        }
        Ok(mu + 1.0 / pick)
    }

    /// Scans `mu = guess/2^k` until `A − μG` is positive definite.
    pub fn pencil_branch_scan(a: &SparseSym, g: &SparseSym, guess: f64, side: f64) -> Result<f64> {
        let mut mu = guess;
        for _ in 0..40 {
            mu *= 0.5;
            if let Ok(l) = pencil_branch(a, g, mu, side) {
                return Ok(l);
            }
        }
        Err(Error::InvalidParameter("no definitizing shift found".into()))
    }

    pub fn solve(k: &SparseSym, rhs: &[f64]) -> Result<Vec<f64>> {
        let chol = dense(k).cholesky().ok_or_else(|| Error::InvalidParameter("not positive definite".into()))?;
        Ok(chol.solve(&DVector::from_column_slice(rhs)).as_slice().to_vec())
    }

    /// Random SPD matrix `QᵀQ + n I` with a fixed seed.
    pub fn random_spd(n: usize, seed: u64) -> SparseSym {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let k = q.transpose() * &q + DMatrix::identity(n, n) * n as f64;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| k[(i, j)]).collect()).collect();
        SparseSym::from_dense(&rows)
    }
}

fn kernel_oracles(opts: &ValidateOptions) -> Result<(bool, String)> {
    let cell = opts.cell();
    let cfg = EigenConfig { tol: 1e-11, inner_tol: 1e-13, max_iter: 2000 };
    let mut worst: f64 = 0.0;

    // Smallest assembled pencil: level-1 periodic cell.
    let mesh = build_cell_mesh(0.25, 1, OuterMode::Periodic)?;
    let forms = assemble_cell_forms(&mesh)?;
    let n = forms.dofs.n_dofs;
    let pencil_opts = CellOptions { eigen: cfg, ..cell };
    for kappa in [0.5, 2.0] {
        let mut g = constraint_form(&forms, kappa);
        if cell.flip_constraint_sign {
            g = forms.b.lin_comb(1.0 / forms.s_h, &forms.m, kappa);
        }
        let guess = 0.25 * lambda_star_ball(kappa, 3);
        let side = (kappa - 1.0).signum();
        let exact = oracle::pencil_branch_scan(&forms.a, &g, guess, side)?;
        let got = lambda_eps_kappa(&mesh, &forms, kappa, guess, &pencil_opts)?;
        worst = worst.max(rel(got.lambda, exact));
        // The accepted pair is also a plain pencil_nearest fixed point.
        let again = pencil_nearest(&forms.a, &g, got.diagnostics.shift_used, &cfg)?.lambda;
        worst = worst.max(rel(again, exact));
    }

    // Definite pencils: Dirichlet eigenproblem on the same cell.
    let free = forms.dofs.free_dofs(&forms.dofs.hole);
    let a = forms.a.principal_submatrix(&free);
    let m = forms.m.principal_submatrix(&free);
    let exact = oracle::smallest_definite(&a, &m)?;
    worst = worst.max(rel(inverse_power(&a, &m, &cfg)?.lambda, exact));

    // CG against a dense solve on a fixed-seed SPD matrix.
    let k = oracle::random_spd(50, 7);
    let rhs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
    let x = cg_solve(&k, &rhs, 1e-13)?;
    let y = oracle::solve(&k, &rhs)?;
    let cg_gap = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);

    let ok = worst <= 1e-8 && cg_gap <= 1e-8;
    Ok((ok, format!("{n}-dof pencil, max eigen gap {worst:.2e}, CG gap {cg_gap:.2e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_oracle_on_diagonal_pencil() {
        let a = SparseSym::from_diagonal(&[1.0, 2.0]);
        let g = SparseSym::from_diagonal(&[1.0, -1.0]);
        assert!((oracle::pencil_branch(&a, &g, 0.5, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((oracle::pencil_branch(&a, &g, -1.5, -1.0).unwrap() + 2.0).abs() < 1e-14);
        let m = SparseSym::from_diagonal(&[1.0, 0.0]);
        let two = SparseSym::from_diagonal(&[2.0, 3.0]);
        assert!((oracle::smallest_definite(&two, &m).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn quick_suite_passes() {
        for o in run_suite(true, &ValidateOptions::default()) {
            assert!(o.passed, "{}", o.line());
        }
    }

    #[test]
    fn unknown_criterion() {
        assert!(run_criterion(12, &ValidateOptions::default()).is_err());
    }
}
