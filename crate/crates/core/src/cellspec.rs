//! The four cell quantities behind the strange term: the Dirichlet
//! eigenvalue `Λ^Dir(ε)`, the Steklov-type eigenvalue `Λ^St(ε)`, the
//! condenser capacity `Cap(ε)` and the signed pencil eigenvalue `λ(ε, κ)`,
//! together with their ε²-rescaled limits.

use serde::Serialize;

use crate::assembly::{assemble_cell_forms, constraint_form, FormSet, LinearSystem};
use crate::cellmesh::{build_cell_mesh, cell_hole_radius, CellMesh, OuterMode};
use crate::error::{Error, Result};
use crate::exterior::lambda_star_ball;
use crate::numkernel::{cg_solve, dot, inverse_power, pencil_nearest, EigenConfig, EigenPair};
use crate::roots::bisect;

/// Solver settings for the cell problems.
#[derive(Debug, Clone, Copy)]
pub struct CellOptions {
    pub eigen: EigenConfig,
    pub linear_tol: f64,
    /// Bounded re-shifts when the pencil converges to the wrong branch.
    pub max_reshifts: usize,
    /// Fault injection for the validation harness: flips the sign of the
    /// volume term in the constraint form.
    #[doc(hidden)]
    pub flip_constraint_sign: bool,
}

impl Default for CellOptions {
    fn default() -> Self {
        Self {
            eigen: EigenConfig { tol: 1e-10, inner_tol: 1e-12, max_iter: 400 },
            linear_tol: 1e-11,
            max_reshifts: 8,
            flip_constraint_sign: false,
        }
    }
}

/// Periodic and bounded meshes of one cell, with assembled forms.
#[derive(Debug, Clone)]
pub struct CellSetup {
    pub eps: f64,
    pub r_cell: f64,
    pub level: u32,
    pub periodic: CellMesh,
    pub periodic_forms: FormSet,
    pub bounded: CellMesh,
    pub bounded_forms: FormSet,
}

impl CellSetup {
    pub fn new(eps: f64, r_cell: f64, level: u32) -> Result<Self> {
        let periodic = build_cell_mesh(r_cell, level, OuterMode::Periodic)?;
        let bounded = periodic.with_outer_mode(OuterMode::DirichletOuter);
        let periodic_forms = assemble_cell_forms(&periodic)?;
        let bounded_forms = assemble_cell_forms(&bounded)?;
        Ok(Self { eps, r_cell, level, periodic, periodic_forms, bounded, bounded_forms })
    }

    /// Holes of physical radius `eps^a` (cell radius `eps^{a-1}`).
    pub fn scaled(eps: f64, a: f64, level: u32) -> Result<Self> {
        let r = cell_hole_radius(eps, a, 3)?;
        Self::new(eps, r, level)
    }

    /// Critical scaling `a = n/(n-2) = 3`.
    pub fn critical(eps: f64, level: u32) -> Result<Self> {
        Self::scaled(eps, 3.0, level)
    }

    /// `ε² λ*(κ)` rescaled to the actual hole size: `r^{n-2} λ*_ball(κ)`.
    /// Equals `ε² λ*(κ)` under critical scaling.
    pub fn ball_shift_guess(&self, kappa: f64) -> f64 {
        self.r_cell * lambda_star_ball(kappa, 3)
    }
}

/// An eigenvalue with its eigenvector expanded to all dofs of the mesh it
/// was computed on.
#[derive(Debug, Clone, Serialize)]
pub struct CellEigen {
    pub lambda: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub sign_definite: bool,
}

fn expand(free: &[usize], n: usize, values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (&i, &v) in free.iter().zip(values) {
        out[i] = v;
    }
    out
}

/// `Λ^Dir(ε)`: first Dirichlet eigenvalue on the torus minus the hole.
/// The eigenvector is `M`-normalized and zero on the hole.
pub fn lambda_dir(mesh: &CellMesh, forms: &FormSet, opts: &CellOptions) -> Result<CellEigen> {
    if mesh.outer_mode != OuterMode::Periodic {
        return Err(Error::InvalidParameter("lambda_dir needs a periodic cell mesh".into()));
    }
    let free = forms.dofs.free_dofs(&forms.dofs.hole);
    let a = forms.a.principal_submatrix(&free);
    let m = forms.m.principal_submatrix(&free);
    let pair = inverse_power(&a, &m, &opts.eigen)?;
    Ok(CellEigen {
        lambda: pair.lambda,
        vector: expand(&free, forms.dofs.n_dofs, &pair.vector),
        iterations: pair.iterations,
        residual: pair.residual,
        sign_definite: pair.sign_definite,
    })
}

/// `Λ^St(ε)`: Steklov-type eigenvalue on the cell with zero outer data;
/// the eigenvector satisfies `ψᵀ(B/s_h)ψ = 1`.
pub fn lambda_st(mesh: &CellMesh, forms: &FormSet, opts: &CellOptions) -> Result<CellEigen> {
    if mesh.outer_mode != OuterMode::DirichletOuter {
        return Err(Error::InvalidParameter("lambda_st needs a bounded cell mesh".into()));
    }
    let free = forms.dofs.free_dofs(&forms.dofs.outer);
    let a = forms.a.principal_submatrix(&free);
    let b = forms.b.principal_submatrix(&free).scale(1.0 / forms.s_h);
    let pair = inverse_power(&a, &b, &opts.eigen)?;
    Ok(CellEigen {
        lambda: pair.lambda,
        vector: expand(&free, forms.dofs.n_dofs, &pair.vector),
        iterations: pair.iterations,
        residual: pair.residual,
        sign_definite: pair.sign_definite,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Capacity {
    pub cap: f64,
    /// Harmonic potential: 0 on the hole, 1 on the cube.
    pub zeta: Vec<f64>,
}

/// Condenser capacity of the hole in the cell.
pub fn capacity(mesh: &CellMesh, forms: &FormSet, opts: &CellOptions) -> Result<Capacity> {
    if mesh.outer_mode != OuterMode::DirichletOuter {
        return Err(Error::InvalidParameter("capacity needs a bounded cell mesh".into()));
    }
    let n = forms.dofs.n_dofs;
    let constrained: Vec<bool> = (0..n).map(|d| forms.dofs.hole[d] || forms.dofs.outer[d]).collect();
    let values: Vec<f64> = (0..n).map(|d| if forms.dofs.outer[d] { 1.0 } else { 0.0 }).collect();
    let sys = LinearSystem::eliminate(&forms.a, &vec![0.0; n], &constrained, &values);
    let x = cg_solve(&sys.k, &sys.rhs, opts.linear_tol)?;
    let zeta = sys.expand(&x);
    Ok(Capacity { cap: forms.a.quad_form(&zeta), zeta })
}

/// Post-checks recorded for an accepted `λ(ε, κ)` eigenpair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KappaDiagnostics {
    /// `|⨍_{∂H} v − κ ∫ v| / max|v|`.
    pub bdav_residual: f64,
    /// `|vᵀAv − λ vᵀGv| / |vᵀAv|`.
    pub rayleigh_residual: f64,
    /// `vᵀGv`, `±1` by normalization.
    pub constraint_value: f64,
    pub eigen_residual: f64,
    pub iterations: usize,
    pub shift_used: f64,
    pub reshifts: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaEigen {
    pub kappa: f64,
    /// Signed: positive for `κ > 1`, negative for `κ < 1`.
    pub lambda: f64,
    /// Periodic-dof eigenvector, normalized to `|vᵀGv| = 1`, positive.
    pub vector: Vec<f64>,
    /// `∫ v` over the cell.
    pub mean_integral: f64,
    pub diagnostics: KappaDiagnostics,
}

fn branch_check(pair: &EigenPair, kappa: f64) -> std::result::Result<(), String> {
    let want = (kappa - 1.0).signum();
    if !pair.sign_definite {
        return Err("eigenvector changes sign".into());
    }
    if pair.signature != want {
        return Err(format!("constraint sign {} but kappa - 1 has sign {want}", pair.signature));
    }
    if pair.lambda.signum() != want || pair.lambda == 0.0 {
        return Err("eigenvalue has the wrong sign".into());
    }
    Ok(())
}

/// Shift sequence for branch retries: the guess, then halved and doubled
/// alternately.
fn shift_sequence(guess: f64, retries: usize) -> Vec<f64> {
    let mut out = vec![guess];
    let mut k = 1;
    while out.len() <= retries {
        let f = 2f64.powi(k);
        out.push(guess / f);
        if out.len() <= retries {
            out.push(guess * f);
        }
        k += 1;
    }
    out
}

/// `λ(ε, κ)` and its sign-definite eigenvector on the periodic cell.
pub fn lambda_eps_kappa(
    mesh: &CellMesh,
    forms: &FormSet,
    kappa: f64,
    shift_guess: f64,
    opts: &CellOptions,
) -> Result<KappaEigen> {
    if mesh.outer_mode != OuterMode::Periodic {
        return Err(Error::InvalidParameter("lambda_eps_kappa needs a periodic cell mesh".into()));
    }
    if !(kappa > 0.0) || kappa == 1.0 {
        return Err(Error::InvalidParameter(format!("kappa = {kappa} must be positive and != 1")));
    }
    if kappa > 1.0 && !(kappa * forms.vol_h > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa * |cell| = {} must exceed 1",
            kappa * forms.vol_h
        )));
    }
    let g = if opts.flip_constraint_sign {
        forms.b.lin_comb(1.0 / forms.s_h, &forms.m, kappa)
    } else {
        constraint_form(forms, kappa)
    };
    let mut last_err = None;
    for (reshifts, shift) in shift_sequence(shift_guess, opts.max_reshifts).into_iter().enumerate() {
        let pair = match pencil_nearest(&forms.a, &g, shift, &opts.eigen) {
            Ok(p) => p,
            Err(e @ (Error::IndefiniteBreakdown(_) | Error::NoConvergence { .. })) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        if let Err(reason) = branch_check(&pair, kappa) {
            last_err = Some(Error::WrongBranch { lambda: pair.lambda, reason });
            continue;
        }
        let v = &pair.vector;
        let ones = vec![1.0; v.len()];
        let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let boundary_mean = forms.b.bilinear(&ones, v) / forms.s_h;
        let mean_integral = forms.m.bilinear(&ones, v);
        let bdav_residual = (boundary_mean - kappa * mean_integral).abs() / peak;
        let vav = forms.a.quad_form(v);
        let vgv = g.quad_form(v);
        let rayleigh_residual = (vav - pair.lambda * vgv).abs() / vav.abs().max(f64::MIN_POSITIVE);
        return Ok(KappaEigen {
            kappa,
            lambda: pair.lambda,
            vector: pair.vector.clone(),
            mean_integral,
            diagnostics: KappaDiagnostics {
                bdav_residual,
                rayleigh_residual,
                constraint_value: vgv,
                eigen_residual: pair.residual,
                iterations: pair.iterations,
                shift_used: shift,
                reshifts,
            },
        });
    }
    Err(last_err.unwrap_or(Error::WrongBranch { lambda: f64::NAN, reason: "no shifts tried".into() }))
}

/// `λ(ε, κ)` over a list of κ values, each shift taken from the previous
/// accepted eigenvalue on the same side of 1 (falling back to the ball
/// guess when switching sides).
pub fn kappa_sweep(setup: &CellSetup, kappas: &[f64], opts: &CellOptions) -> Result<Vec<KappaEigen>> {
    let mut out: Vec<KappaEigen> = Vec::with_capacity(kappas.len());
    for &kappa in kappas {
        let guess = match out.last() {
            Some(prev) if (prev.kappa - 1.0).signum() == (kappa - 1.0).signum() => {
                // Scale the previous eigenvalue by the ratio of ball limits.
                prev.lambda * lambda_star_ball(kappa, 3) / lambda_star_ball(prev.kappa, 3)
            }
            _ => setup.ball_shift_guess(kappa),
        };
        out.push(lambda_eps_kappa(&setup.periodic, &setup.periodic_forms, kappa, guess, opts)?);
    }
    Ok(out)
}

/// All cell quantities at one ε.
#[derive(Debug, Clone, Serialize)]
pub struct CellSpectrum {
    pub eps: f64,
    pub r_cell: f64,
    pub level: u32,
    pub kappa: Option<f64>,
    pub lambda_dir: f64,
    pub lambda_st: f64,
    pub cap: f64,
    pub lambda_eps_kappa: Option<f64>,
    pub lambda_dir_over_eps2: f64,
    pub lambda_st_over_eps2: f64,
    pub cap_over_eps2: f64,
    pub lambda_over_eps2: Option<f64>,
    pub vol_h: f64,
    pub s_h: f64,
    pub dir_sign_definite: bool,
    pub st_sign_definite: bool,
    pub capacity_in_unit_range: bool,
    pub diagnostics: Option<KappaDiagnostics>,
}

impl CellSpectrum {
    pub const CSV_HEADER: &'static str =
        "eps,kappa,lambda,lambda_over_eps2,lambda_dir,lambda_st,cap,bdav_residual,rayleigh_residual";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.12e}"));
        let d = self.diagnostics;
        format!(
            "{},{},{},{},{:.12e},{:.12e},{:.12e},{},{}",
            self.eps,
            opt(self.kappa),
            opt(self.lambda_eps_kappa),
            opt(self.lambda_over_eps2),
            self.lambda_dir,
            self.lambda_st,
            self.cap,
            opt(d.map(|d| d.bdav_residual)),
            opt(d.map(|d| d.rayleigh_residual)),
        )
    }
}

pub fn cell_spectrum(setup: &CellSetup, kappa: Option<f64>, opts: &CellOptions) -> Result<CellSpectrum> {
    let dir = lambda_dir(&setup.periodic, &setup.periodic_forms, opts)?;
    let st = lambda_st(&setup.bounded, &setup.bounded_forms, opts)?;
    let cap = capacity(&setup.bounded, &setup.bounded_forms, opts)?;
    let pencil = match kappa {
        Some(k) => Some(lambda_eps_kappa(
            &setup.periodic,
            &setup.periodic_forms,
            k,
            setup.ball_shift_guess(k),
            opts,
        )?),
        None => None,
    };
    let e2 = setup.eps * setup.eps;
    Ok(CellSpectrum {
        eps: setup.eps,
        r_cell: setup.r_cell,
        level: setup.level,
        kappa,
        lambda_dir: dir.lambda,
        lambda_st: st.lambda,
        cap: cap.cap,
        lambda_eps_kappa: pencil.as_ref().map(|p| p.lambda),
        lambda_dir_over_eps2: dir.lambda / e2,
        lambda_st_over_eps2: st.lambda / e2,
        cap_over_eps2: cap.cap / e2,
        lambda_over_eps2: pencil.as_ref().map(|p| p.lambda / e2),
        vol_h: setup.periodic_forms.vol_h,
        s_h: setup.periodic_forms.s_h,
        dir_sign_definite: dir.sign_definite,
        st_sign_definite: st.sign_definite,
        capacity_in_unit_range: cap.zeta.iter().all(|&z| (-1e-12..=1.0 + 1e-12).contains(&z)),
        diagnostics: pencil.map(|p| p.diagnostics),
    })
}

/// ε²-rescaled sequence and its first-order Richardson limit.
#[derive(Debug, Clone, Serialize)]
pub struct Extrapolation {
    pub limit: f64,
    pub rescaled: Vec<(f64, f64)>,
    /// Observed convergence order in ε from the last three samples, when
    /// the differences are consistent.
    pub fitted_order: Option<f64>,
    /// Set when the rescaled values are not settling monotonically.
    pub non_monotone: bool,
    /// `|limit − last rescaled value|`.
    pub uncertainty: f64,
}

/// Richardson extrapolation of `value/ε²` assuming `O(ε)` convergence,
/// from samples `(ε, value)` given in decreasing ε.
pub fn extrapolate_star(samples: &[(f64, f64)]) -> Result<Extrapolation> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    if samples.windows(2).any(|w| !(w[1].0 < w[0].0)) || samples.iter().any(|s| !(s.0 > 0.0)) {
        return Err(Error::InvalidParameter("samples must have positive, strictly decreasing eps".into()));
    }
    let rescaled: Vec<(f64, f64)> = samples.iter().map(|&(e, v)| (e, v / (e * e))).collect();
    let k = rescaled.len();
    let (e1, s1) = rescaled[k - 2];
    let (e2, s2) = rescaled[k - 1];
    let limit = (e1 * s2 - e2 * s1) / (e1 - e2);

    let diffs: Vec<f64> = rescaled.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let mut non_monotone = diffs.windows(2).any(|d| d[0].signum() != d[1].signum());
    let mut fitted_order = None;
    if k >= 3 {
        let (ea, sa) = rescaled[k - 3];
        let ratio = (sa - s1) / (s1 - s2);
        if ratio.is_finite() && ratio > 0.0 {
            let g = |p: f64| Ok((ea.powf(p) - e1.powf(p)) / (e1.powf(p) - e2.powf(p)) - ratio);
            fitted_order = bisect(g, 0.05, 8.0, 1e-10, 200).ok().map(|b| b.root);
        } else {
            non_monotone = true;
        }
    }
    Ok(Extrapolation { limit, rescaled, fitted_order, non_monotone, uncertainty: (limit - s2).abs() })
}

/// `M_{ε,κ} = ∫ v` for a periodic-dof vector.
pub fn cell_integral(forms: &FormSet, v: &[f64]) -> f64 {
    dot(&forms.m.mul_vec(v), &vec![1.0; v.len()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn setup() -> CellSetup {
        CellSetup::new(0.5, 0.25, 2).unwrap()
    }

    #[test]
    fn extrapolation_examples() {
        let c = 3.7;
        let eps = [0.5, 1.0 / 3.0, 0.25];
        let exact: Vec<(f64, f64)> = eps.iter().map(|&e| (e, c * e * e)).collect();
        assert!((extrapolate_star(&exact).unwrap().limit - c).abs() < 1e-14);
        let first: Vec<(f64, f64)> = eps.iter().map(|&e| (e, c * e * e * (1.0 + e))).collect();
        let ex = extrapolate_star(&first).unwrap();
        assert!((ex.limit - c).abs() < 1e-12);
        assert!((ex.fitted_order.unwrap() - 1.0).abs() < 1e-6);
        assert!(!ex.non_monotone);
        let second: Vec<(f64, f64)> = eps.iter().map(|&e| (e, c * e * e * (1.0 + e * e))).collect();
        assert!((extrapolate_star(&second).unwrap().fitted_order.unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn extrapolation_flags_oscillation_and_bad_input() {
        let s = [(0.5, 0.25), (0.4, 0.32), (0.3, 0.135)];
        assert!(extrapolate_star(&s).unwrap().non_monotone);
        assert!(extrapolate_star(&[(0.5, 1.0)]).is_err());
        assert!(extrapolate_star(&[(0.25, 1.0), (0.5, 1.0)]).is_err());
    }

    #[test]
    fn shifts_alternate() {
        assert_eq!(shift_sequence(4.0, 4), vec![4.0, 2.0, 8.0, 1.0, 16.0]);
    }

    #[test]
    fn dirichlet_eigen_is_positive_and_definite() {
        let s = setup();
        let d = lambda_dir(&s.periodic, &s.periodic_forms, &CellOptions::default()).unwrap();
        assert!(d.lambda > 0.0 && d.sign_definite);
        assert!(d.vector.iter().enumerate().all(|(i, v)| !s.periodic_forms.dofs.hole[i] || *v == 0.0));
        assert!(lambda_dir(&s.bounded, &s.bounded_forms, &CellOptions::default()).is_err());
    }

    #[test]
    fn steklov_below_capacity_and_zero_outside() {
        let s = setup();
        let opts = CellOptions::default();
        let st = lambda_st(&s.bounded, &s.bounded_forms, &opts).unwrap();
        let cap = capacity(&s.bounded, &s.bounded_forms, &opts).unwrap();
        assert!(st.lambda <= cap.cap + 1e-10, "{} vs {}", st.lambda, cap.cap);
        for (d, &outer) in s.bounded_forms.dofs.outer.iter().enumerate() {
            if outer {
                assert_eq!(st.vector[d], 0.0);
            }
        }
        let norm = s.bounded_forms.b.quad_form(&st.vector) / s.bounded_forms.s_h;
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(cap.zeta.iter().all(|&z| (-1e-12..=1.0 + 1e-12).contains(&z)));
    }

    #[test]
    fn capacity_inside_spherical_condenser_bracket() {
        let s = setup();
        let cap = capacity(&s.bounded, &s.bounded_forms, &CellOptions::default()).unwrap().cap;
        let r = 0.25;
        let lower = 4.0 * PI / (1.0 / r - 2.0 / 3f64.sqrt());
        let upper = 4.0 * PI / (1.0 / r - 2.0);
        assert!(lower <= cap && cap <= upper, "{lower} <= {cap} <= {upper}");
    }

    #[test]
    fn pencil_branches_and_identities() {
        let s = setup();
        let opts = CellOptions::default();
        for kappa in [0.5, 2.0] {
            let guess = s.ball_shift_guess(kappa);
            let p = lambda_eps_kappa(&s.periodic, &s.periodic_forms, kappa, guess, &opts).unwrap();
            assert_eq!(p.lambda.signum(), (kappa - 1.0).signum());
            assert!(p.diagnostics.bdav_residual <= 1e-6, "{:?}", p.diagnostics);
            assert!(p.diagnostics.rayleigh_residual <= 1e-7);
            assert!((p.diagnostics.constraint_value.abs() - 1.0).abs() < 1e-10);
            assert!(p.vector.iter().all(|&x| x > -1e-8));
        }
    }

    #[test]
    fn pencil_rejects_excluded_kappa() {
        let s = setup();
        let opts = CellOptions::default();
        assert!(lambda_eps_kappa(&s.periodic, &s.periodic_forms, 1.0, 0.1, &opts).is_err());
        assert!(lambda_eps_kappa(&s.periodic, &s.periodic_forms, 1.01, 0.1, &opts).is_err());
        assert!(lambda_eps_kappa(&s.bounded, &s.bounded_forms, 2.0, 0.1, &opts).is_err());
    }

    #[test]
    fn small_kappa_bound_holds() {
        let s = setup();
        let opts = CellOptions::default();
        let dir = lambda_dir(&s.periodic, &s.periodic_forms, &opts).unwrap().lambda;
        for p in kappa_sweep(&s, &[0.3, 0.6, 0.9], &opts).unwrap() {
            assert!(-p.kappa * p.lambda <= dir + 1e-10);
        }
    }
}
