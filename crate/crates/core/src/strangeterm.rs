//! `κ*(β)` solving `−λ*(κ) = β` on `(0, 1)`, and the strange term `βκ*(β)`.

use serde::Serialize;

use crate::cellspec::{extrapolate_star, lambda_eps_kappa, CellOptions, CellSetup};
use crate::error::{Error, Result};
use crate::exterior::{exterior_numeric, lambda_star_ball, unit_sphere_area};
use crate::roots::bisect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorId {
    ClosedForm,
    ExteriorNumeric,
    CellExtrapolated,
}

impl EvaluatorId {
    pub fn as_str(self) -> &'static str {
        match self {
            EvaluatorId::ClosedForm => "closed_form",
            EvaluatorId::ExteriorNumeric => "exterior_numeric",
            EvaluatorId::CellExtrapolated => "cell_extrapolated",
        }
    }
}

/// A source of `λ*(κ)` values, nondecreasing in κ.
pub trait LambdaStar {
    fn id(&self) -> EvaluatorId;
    fn eval(&self, kappa: f64) -> Result<f64>;
    /// Bracket width at which the bisection stops by default.
    fn default_tol(&self) -> Result<f64> {
        Ok(1e-6)
    }
}

/// Ball closed form `σ_n(n−2)(κ−1)/κ`.
#[derive(Debug, Clone, Copy)]
pub struct ClosedForm {
    pub n: usize,
}

impl LambdaStar for ClosedForm {
    fn id(&self) -> EvaluatorId {
        EvaluatorId::ClosedForm
    }
    fn eval(&self, kappa: f64) -> Result<f64> {
        Ok(lambda_star_ball(kappa, self.n))
    }
    fn default_tol(&self) -> Result<f64> {
        Ok(1e-10)
    }
}

/// Truncated radial exterior problem.
#[derive(Debug, Clone, Copy)]
pub struct ExteriorNumeric {
    pub n: usize,
    pub radius: f64,
    pub intervals: usize,
}

impl Default for ExteriorNumeric {
    fn default() -> Self {
        Self { n: 3, radius: 1000.0, intervals: 512 }
    }
}

impl LambdaStar for ExteriorNumeric {
    fn id(&self) -> EvaluatorId {
        EvaluatorId::ExteriorNumeric
    }
    fn eval(&self, kappa: f64) -> Result<f64> {
        exterior_numeric(kappa, self.n, self.radius, self.intervals)
    }
}

/// Richardson limit of `λ(ε, κ)/ε²` over a chain of critical-scaling cells.
pub struct CellExtrapolated {
    pub setups: Vec<CellSetup>,
    pub opts: CellOptions,
}

impl CellExtrapolated {
    pub fn critical(eps_list: &[f64], level: u32, opts: CellOptions) -> Result<Self> {
        let setups = eps_list.iter().map(|&e| CellSetup::critical(e, level)).collect::<Result<_>>()?;
        Ok(Self { setups, opts })
    }

    pub fn extrapolation(&self, kappa: f64) -> Result<crate::cellspec::Extrapolation> {
        let mut samples = Vec::with_capacity(self.setups.len());
        for s in &self.setups {
            let p = lambda_eps_kappa(&s.periodic, &s.periodic_forms, kappa, s.ball_shift_guess(kappa), &self.opts)?;
            samples.push((s.eps, p.lambda));
        }
        extrapolate_star(&samples)
    }
}

impl LambdaStar for CellExtrapolated {
    fn id(&self) -> EvaluatorId {
        EvaluatorId::CellExtrapolated
    }
    fn eval(&self, kappa: f64) -> Result<f64> {
        Ok(self.extrapolation(kappa)?.limit)
    }
    /// Widened to the extrapolation uncertainty at κ = 1/2, converted to a
    /// κ-width with the smallest ball slope `σ_n(n−2)` on `(0, 1)`.
    fn default_tol(&self) -> Result<f64> {
        let u = self.extrapolation(0.5)?.uncertainty;
        Ok((u / unit_sphere_area(3)).clamp(1e-6, 0.1))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StrangeTermResult {
    pub beta: f64,
    pub kappa_star: f64,
    pub strange_term: f64,
    pub evaluator_id: EvaluatorId,
    pub iterations: usize,
    pub bracket_width: f64,
    /// `|λ*(κ*) + β|`.
    pub residual: f64,
}

impl StrangeTermResult {
    pub const CSV_HEADER: &'static str = "beta,kappa_star,strange_term,evaluator_id,iterations,bracket_width";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.15e},{:.15e},{},{},{:.3e}",
            self.beta,
            self.kappa_star,
            self.strange_term,
            self.evaluator_id.as_str(),
            self.iterations,
            self.bracket_width
        )
    }
}

const MAX_BRACKET_HALVINGS: usize = 60;

/// Solves `−λ*(κ) = β` for `κ ∈ (0, 1)` by bisection. `tol` defaults to the
/// evaluator's bracket tolerance.
pub fn kappa_star(beta: f64, eval: &dyn LambdaStar, tol: Option<f64>) -> Result<StrangeTermResult> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be positive and finite")));
    }
    let tol = match tol {
        Some(t) => t,
        None => eval.default_tol()?,
    };
    let g = |kappa: f64| -> Result<f64> {
        if kappa >= 1.0 {
            // λ*(1) = 0 by convention.
            return Ok(-beta);
        }
        Ok(-eval.eval(kappa)? - beta)
    };
    let finish = |kappa: f64, iterations: usize, width: f64| -> Result<StrangeTermResult> {
        let residual = (eval.eval(kappa)? + beta).abs();
        Ok(StrangeTermResult {
            beta,
            kappa_star: kappa,
            strange_term: beta * kappa,
            evaluator_id: eval.id(),
            iterations,
            bracket_width: width,
            residual,
        })
    };

    // Shrink the lower end until −λ*(lo) exceeds β.
    let mut lo = 0.5;
    let mut shrinks = 0;
    loop {
        let v = g(lo)?;
        if v == 0.0 {
            return finish(lo, 0, 0.0);
        }
        if v > 0.0 {
            break;
        }
        shrinks += 1;
        if shrinks > MAX_BRACKET_HALVINGS {
            return Err(Error::BracketFailure { lo, hi: 1.0 });
        }
        lo *= 0.5;
    }
    let hi = (2.0 * lo).min(1.0);
    let b = bisect(g, lo, hi, tol, 200)?;
    finish(b.root, b.iterations, b.width)
}

/// `kappa_star` over a sorted list of β values.
pub fn strange_term_curve(betas: &[f64], eval: &dyn LambdaStar, tol: Option<f64>) -> Result<Vec<StrangeTermResult>> {
    if betas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("betas must be strictly increasing".into()));
    }
    betas.iter().map(|&b| kappa_star(b, eval, tol)).collect()
}

/// Closed form of the strange term for the ball: `σ_n(n−2)β/(σ_n(n−2)+β)`.
pub fn strange_term_ball(beta: f64, n: usize) -> f64 {
    let c = unit_sphere_area(n) * (n as f64 - 2.0);
    c * beta / (c + beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const BALL: ClosedForm = ClosedForm { n: 3 };

    #[test]
    fn four_pi_is_the_midpoint() {
        let r = kappa_star(4.0 * PI, &BALL, None).unwrap();
        assert!((r.kappa_star - 0.5).abs() <= 1e-10);
        assert!((r.strange_term - 2.0 * PI).abs() <= 1e-10);
        assert_eq!(r.evaluator_id, EvaluatorId::ClosedForm);
    }

    #[test]
    fn matches_ball_closed_form() {
        for beta in [1e-3, 1.0, 7.5, 100.0, 1e4] {
            let r = kappa_star(beta, &BALL, None).unwrap();
            let exact = strange_term_ball(beta, 3);
            assert!((r.strange_term - exact).abs() <= 1e-9 * beta.max(1.0), "{beta}");
            assert!(r.residual <= 1e-7 * beta.max(1.0));
        }
        let r = kappa_star(1.0, &BALL, None).unwrap();
        assert!((r.strange_term - 0.926288).abs() < 1e-6);
    }

    #[test]
    fn limits_in_beta() {
        assert!(kappa_star(1e-6, &BALL, None).unwrap().strange_term <= 1e-6);
        let big = kappa_star(1e6, &BALL, None).unwrap().strange_term;
        assert!((big - 4.0 * PI).abs() / (4.0 * PI) <= 2e-5);
    }

    #[test]
    fn curve_increases_and_stays_below_cap() {
        let curve = strange_term_curve(&[0.1, 1.0, 10.0, 100.0], &BALL, None).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].strange_term > w[0].strange_term);
            assert!(w[1].kappa_star < w[0].kappa_star);
        }
        for r in &curve {
            assert!(r.strange_term < r.beta.min(4.0 * PI));
        }
        assert!(strange_term_curve(&[1.0, 0.5], &BALL, None).is_err());
    }

    #[test]
    fn exterior_evaluator_agrees() {
        let a = kappa_star(4.0 * PI, &BALL, None).unwrap();
        let b = kappa_star(4.0 * PI, &ExteriorNumeric::default(), None).unwrap();
        assert_eq!(b.evaluator_id, EvaluatorId::ExteriorNumeric);
        assert!((a.kappa_star - b.kappa_star).abs() <= 1e-3);
    }

    struct Flat;
    impl LambdaStar for Flat {
        fn id(&self) -> EvaluatorId {
            EvaluatorId::ClosedForm
        }
        fn eval(&self, _: f64) -> Result<f64> {
            Ok(-1.0)
        }
    }

    #[test]
    fn bad_evaluator_and_beta() {
        assert!(matches!(kappa_star(5.0, &Flat, None), Err(Error::BracketFailure { .. })));
        assert!(kappa_star(0.0, &BALL, None).is_err());
        assert!(kappa_star(f64::NAN, &BALL, None).is_err());
    }
}
