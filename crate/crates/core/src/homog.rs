//! The perforated Robin problem, the homogenized problem with its strange
//! term, the oscillating corrector, and the studies comparing them.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::assembly::{assemble_domain_system, assemble_load, assemble_volume, DomainForms, LinearSystem};
use crate::cellmesh::{build_perforated_mesh, cell_hole_radius, critical_exponent, mu_coeff, CellMesh, PerforatedMesh};
use crate::cellspec::{lambda_eps_kappa, CellOptions, CellSetup};
use crate::error::{Error, Result};
use crate::exterior::lambda_star_ball;
use crate::fem::{self, Hex};
use crate::numkernel::{cg_solve, dot};
use crate::strangeterm::{kappa_star, ClosedForm};

/// Right-hand side `f` of both problems.
#[derive(Clone)]
pub enum Source {
    /// `amplitude · sin(πx) sin(πy) sin(πz)`.
    SineProduct { amplitude: f64 },
    Custom(Arc<dyn Fn([f64; 3]) -> f64 + Send + Sync>),
}

impl Source {
    /// The sine product whose homogenized solution is the unit sine
    /// product when `α + c = 2π`.
    pub fn default_sine() -> Self {
        Source::SineProduct { amplitude: 3.0 * PI * PI + 2.0 * PI }
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        match self {
            Source::SineProduct { amplitude } => amplitude * sine_product(x),
            Source::Custom(f) => f(x),
        }
    }

    pub fn is_nonnegative_sine(&self) -> bool {
        matches!(self, Source::SineProduct { amplitude } if *amplitude >= 0.0)
    }
}

impl std::fmt::Debug for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::SineProduct { amplitude } => write!(f, "SineProduct({amplitude})"),
            Source::Custom(_) => write!(f, "Custom"),
        }
    }
}

fn sine_product(x: [f64; 3]) -> f64 {
    (PI * x[0]).sin() * (PI * x[1]).sin() * (PI * x[2]).sin()
}

fn sine_product_grad(x: [f64; 3]) -> [f64; 3] {
    let (s, c) = (x.map(|t| (PI * t).sin()), x.map(|t| (PI * t).cos()));
    [PI * c[0] * s[1] * s[2], PI * s[0] * c[1] * s[2], PI * s[0] * s[1] * c[2]]
}

/// Closed-form homogenized solution for a sine-product source.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SineSolution {
    /// `u₀ = coefficient · sin(πx) sin(πy) sin(πz)`.
    pub coefficient: f64,
}

impl SineSolution {
    pub fn new(amplitude: f64, alpha: f64, c: f64) -> Self {
        Self { coefficient: amplitude / (3.0 * PI * PI + alpha + c) }
    }
    pub fn value(&self, x: [f64; 3]) -> f64 {
        self.coefficient * sine_product(x)
    }
    pub fn grad(&self, x: [f64; 3]) -> [f64; 3] {
        sine_product_grad(x).map(|g| self.coefficient * g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    UEps,
    U0,
    Corrector,
}

#[derive(Debug, Clone)]
pub enum FieldMesh {
    Perforated(Arc<PerforatedMesh>),
    Grid(Arc<GridMesh>),
}

impl FieldMesh {
    pub fn nodes(&self) -> &[[f64; 3]] {
        match self {
            FieldMesh::Perforated(m) => &m.nodes,
            FieldMesh::Grid(g) => &g.nodes,
        }
    }
    pub fn hexes(&self) -> &[[usize; 8]] {
        match self {
            FieldMesh::Perforated(m) => &m.hexes,
            FieldMesh::Grid(g) => &g.hexes,
        }
    }
}

/// Nodal Q1 values on a mesh.
#[derive(Debug, Clone)]
pub struct FieldOnMesh {
    pub kind: FieldKind,
    pub mesh: FieldMesh,
    pub values: Vec<f64>,
    /// `½uᵀKu − uᵀF` at the solution, for solved fields.
    pub energy: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldDump<'a> {
    pub kind: FieldKind,
    pub values: &'a [f64],
}

impl FieldOnMesh {
    pub fn dump(&self) -> FieldDump<'_> {
        FieldDump { kind: self.kind, values: &self.values }
    }
}

/// Uniform hexahedral grid of the unit cube.
#[derive(Debug, Clone)]
pub struct GridMesh {
    pub n: usize,
    pub nodes: Vec<[f64; 3]>,
    pub hexes: Vec<[usize; 8]>,
    pub boundary: Vec<bool>,
}

impl GridMesh {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("grid needs at least one interval".into()));
        }
        let p = n + 1;
        let h = 1.0 / n as f64;
        let id = |i: usize, j: usize, k: usize| i + p * (j + p * k);
        let mut nodes = Vec::with_capacity(p * p * p);
        let mut boundary = Vec::with_capacity(p * p * p);
        for k in 0..p {
            for j in 0..p {
                for i in 0..p {
                    nodes.push([i as f64 * h, j as f64 * h, k as f64 * h]);
                    boundary.push([i, j, k].iter().any(|&c| c == 0 || c == n));
                }
            }
        }
        let mut hexes = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    hexes.push([
                        id(i, j, k),
                        id(i + 1, j, k),
                        id(i + 1, j + 1, k),
                        id(i, j + 1, k),
                        id(i, j, k + 1),
                        id(i + 1, j, k + 1),
                        id(i + 1, j + 1, k + 1),
                        id(i, j + 1, k + 1),
                    ]);
                }
            }
        }
        Ok(Self { n, nodes, hexes, boundary })
    }
}

/// Q1 solution of `−Δu + (α + c)u = f` in the unit cube, `u = 0` on the
/// boundary.
pub fn solve_homogenized(grid_n: usize, alpha: f64, c: f64, f: &Source, linear_tol: f64) -> Result<FieldOnMesh> {
    if !(c >= 0.0) || !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("need alpha >= 0 and c >= 0 (got {alpha}, {c})")));
    }
    let grid = Arc::new(GridMesh::new(grid_n)?);
    let n = grid.nodes.len();
    let identity: Vec<usize> = (0..n).collect();
    let (a, m) = assemble_volume(&grid.nodes, &grid.hexes, &identity, n)?;
    let load = assemble_load(&grid.nodes, &grid.hexes, n, &|x| f.eval(x))?;
    let k = a.lin_comb(1.0, &m, alpha + c);
    let sys = LinearSystem::eliminate(&k, &load, &grid.boundary, &vec![0.0; n]);
    let x = cg_solve(&sys.k, &sys.rhs, linear_tol)?;
    let u = sys.expand(&x);
    let energy = 0.5 * k.quad_form(&u) - dot(&u, &load);
    Ok(FieldOnMesh { kind: FieldKind::U0, mesh: FieldMesh::Grid(grid), values: u, energy: Some(energy) })
}

/// Nodal interpolant of the closed-form homogenized solution on a grid.
pub fn homogenized_closed_form(grid_n: usize, solution: SineSolution) -> Result<FieldOnMesh> {
    let grid = Arc::new(GridMesh::new(grid_n)?);
    let values = grid.nodes.iter().map(|&x| solution.value(x)).collect();
    Ok(FieldOnMesh { kind: FieldKind::U0, mesh: FieldMesh::Grid(grid), values, energy: None })
}

/// Solution of the perforated Robin problem on `pmesh`.
pub fn solve_perforated(
    pmesh: Arc<PerforatedMesh>,
    alpha: f64,
    beta: f64,
    mu: f64,
    f: &Source,
    linear_tol: f64,
) -> Result<(FieldOnMesh, DomainForms)> {
    let (forms, sys) = assemble_domain_system(&pmesh, alpha, beta, mu, &|x| f.eval(x))?;
    let x = cg_solve(&sys.k, &sys.rhs, linear_tol)?;
    let u = sys.expand(&x);
    let energy = forms.energy(&u);
    let field = FieldOnMesh { kind: FieldKind::UEps, mesh: FieldMesh::Perforated(pmesh), values: u, energy: Some(energy) };
    Ok((field, forms))
}

fn same_template(a: &CellMesh, b: &CellMesh) -> bool {
    a.level == b.level
        && a.hole_radius == b.hole_radius
        && a.nodes.len() == b.nodes.len()
        && a.hexes == b.hexes
        && a.nodes.iter().zip(&b.nodes).all(|(p, q)| p == q)
}

/// `w(x) = v(x/ε)/M` tiled over the perforated mesh, with `M = ∫ v` over
/// the cell. `cell` is the periodic mesh `v` was computed on.
pub fn build_corrector(cell: &CellMesh, v: &[f64], cell_integral: f64, pmesh: Arc<PerforatedMesh>) -> Result<FieldOnMesh> {
    if !same_template(cell, &pmesh.cell) {
        return Err(Error::MeshMismatch("perforated mesh was not tiled from the eigenvector's cell mesh".into()));
    }
    let dofs = cell.dof_map();
    if v.len() != dofs.n_dofs {
        return Err(Error::MeshMismatch(format!("eigenvector has {} entries, cell has {} dofs", v.len(), dofs.n_dofs)));
    }
    if !(cell_integral.abs() > 0.0) {
        return Err(Error::InvalidParameter("cell integral of the eigenvector vanishes".into()));
    }
    let values = pmesh.template_node.iter().map(|&t| v[dofs.node_to_dof[t]] / cell_integral).collect();
    Ok(FieldOnMesh { kind: FieldKind::Corrector, mesh: FieldMesh::Perforated(pmesh), values, energy: None })
}

/// `ε⁻ⁿ ∫ w` over one cell of the perforated mesh (cells numbered x-fastest).
pub fn corrector_cell_average(w: &FieldOnMesh, cell_index: usize) -> Result<f64> {
    let FieldMesh::Perforated(pm) = &w.mesh else {
        return Err(Error::InvalidParameter("corrector lives on a perforated mesh".into()));
    };
    let per = pm.cell.hexes.len();
    if cell_index >= pm.cells_per_side.pow(3) {
        return Err(Error::InvalidParameter(format!("cell {cell_index} out of range")));
    }
    let mut total = 0.0;
    for h in &pm.hexes[cell_index * per..(cell_index + 1) * per] {
        let coords: Hex = h.map(|i| pm.nodes[i]);
        for p in fem::hex_points(&coords) {
            let val: f64 = (0..8).map(|a| p.shape[a] * w.values[h[a]]).sum();
            total += val * p.weight;
        }
    }
    Ok(total / pm.eps.powi(3))
}

/// Relative residual of the corrector equation
/// `−Δw + (κλ/ε²) w = 0` in `Ω_ε`, `∂_ν w = (λ/ε²) w / μ_h` on `Γ_ε`, tested
/// against every node off `∂Ω`. `μ_h` is the discrete counterpart of `μ_ε`
/// built from the discrete cell hole area `s_h`.
pub fn corrector_robin_residual(w: &FieldOnMesh, forms: &DomainForms, lambda: f64, kappa: f64, s_h: f64) -> Result<f64> {
    let FieldMesh::Perforated(pm) = &w.mesh else {
        return Err(Error::InvalidParameter("corrector lives on a perforated mesh".into()));
    };
    let e2 = pm.eps * pm.eps;
    let mu_h = s_h / pm.eps;
    let aw = forms.a.mul_vec(&w.values);
    let mw = forms.m.mul_vec(&w.values);
    let bw = forms.b_gamma.mul_vec(&w.values);
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for i in 0..pm.num_nodes() {
        if pm.dirichlet[i] {
            continue;
        }
        let r = aw[i] + kappa * lambda / e2 * mw[i] - lambda / e2 / mu_h * bw[i];
        num += r * r;
        den += aw[i] * aw[i];
    }
    Ok((num / den.max(f64::MIN_POSITIVE)).sqrt())
}

fn gauss3() -> [(f64, f64); 3] {
    let g = (0.6f64).sqrt();
    [(-g, 5.0 / 9.0), (0.0, 8.0 / 9.0), (g, 5.0 / 9.0)]
}

/// Integrates `integrand(x, u, ∇u, w, ∇w)` over the mesh with a 3×3×3
/// Gauss rule, `u` and `w` being nodal Q1 fields.
fn integrate_pair<F>(nodes: &[[f64; 3]], hexes: &[[usize; 8]], u: &[f64], w: &[f64], integrand: F) -> f64
where
    F: Fn([f64; 3], f64, [f64; 3], f64, [f64; 3]) -> f64,
{
    let g = gauss3();
    let mut total = 0.0;
    for h in hexes {
        let coords: Hex = h.map(|i| nodes[i]);
        for (a, wa) in g {
            for (b, wb) in g {
                for (c, wc) in g {
                    let p = fem::hex_point(&coords, [a, b, c], wa * wb * wc);
                    let (mut uv, mut ug, mut wv, mut wg) = (0.0, [0.0; 3], 0.0, [0.0; 3]);
                    for k in 0..8 {
                        uv += p.shape[k] * u[h[k]];
                        wv += p.shape[k] * w[h[k]];
                        for r in 0..3 {
                            ug[r] += p.grad[k][r] * u[h[k]];
                            wg[r] += p.grad[k][r] * w[h[k]];
                        }
                    }
                    total += integrand(p.x, uv, ug, wv, wg) * p.weight;
                }
            }
        }
    }
    total
}

/// `‖u − u₀‖_{L²}` over the mesh of `u`, with `u₀` evaluated exactly.
pub fn l2_error(u: &FieldOnMesh, exact: &SineSolution) -> f64 {
    let nodes = u.mesh.nodes();
    integrate_pair(nodes, u.mesh.hexes(), &u.values, &u.values, |x, uv, _, _, _| (uv - exact.value(x)).powi(2)).sqrt()
}

/// `‖u − w u₀‖_{H¹}` with `u₀` evaluated exactly.
pub fn h1_corrector_error(u: &FieldOnMesh, w: &FieldOnMesh, exact: &SineSolution) -> f64 {
    integrate_pair(u.mesh.nodes(), u.mesh.hexes(), &u.values, &w.values, |x, uv, ug, wv, wg| {
        let (u0, g0) = (exact.value(x), exact.grad(x));
        let d = uv - wv * u0;
        let mut s = d * d;
        for r in 0..3 {
            let dg = ug[r] - (wg[r] * u0 + wv * g0[r]);
            s += dg * dg;
        }
        s
    })
    .sqrt()
}

/// `‖w − 1‖_{L²}` over the corrector's mesh.
pub fn corrector_l2_deviation(w: &FieldOnMesh) -> f64 {
    integrate_pair(w.mesh.nodes(), w.mesh.hexes(), &w.values, &w.values, |_, v, _, _, _| (v - 1.0).powi(2)).sqrt()
}

/// Ratio `(1/μ)∫_Γ u² / (‖∇u‖² + ‖u‖²)` measured on a perforated solution.
pub fn trace_ratio(u: &FieldOnMesh, forms: &DomainForms) -> f64 {
    let boundary = forms.b_gamma.quad_form(&u.values) / forms.mu;
    boundary / (forms.a.quad_form(&u.values) + forms.m.quad_form(&u.values))
}

/// Mean of `u²` over `Γ_ε`.
pub fn gamma_mean_square(u: &FieldOnMesh, forms: &DomainForms) -> f64 {
    let ones = vec![1.0; u.values.len()];
    forms.b_gamma.quad_form(&u.values) / forms.b_gamma.quad_form(&ones)
}

/// One ε of a convergence study.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub dofs: usize,
    pub kappa_star: f64,
    pub lambda: f64,
    pub l2_error: f64,
    pub h1_corrector_error: f64,
    pub eta: f64,
    pub mu: f64,
    pub rate_quotient: f64,
    pub corrector_l2_deviation: f64,
    pub robin_residual: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub alpha: f64,
    pub beta: f64,
    pub level: u32,
    pub strange_term: f64,
    /// Rows in decreasing ε.
    pub rows: Vec<ConvergenceRow>,
    /// The decreasing-error property is an empirical check at these ε, not
    /// a proven rate.
    pub note: &'static str,
}

impl ConvergenceReport {
    pub const CSV_HEADER: &'static str =
        "eps,dofs,l2_error,h1_corrector_error,eta,mu,rate_quotient,kappa_star,lambda,corrector_l2_deviation,robin_residual,failure";

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.3e},{}",
                    r.eps,
                    r.dofs,
                    r.l2_error,
                    r.h1_corrector_error,
                    r.eta,
                    r.mu,
                    r.rate_quotient,
                    r.kappa_star,
                    r.lambda,
                    r.corrector_l2_deviation,
                    r.robin_residual,
                    r.failure.as_deref().unwrap_or("")
                )
            })
            .collect()
    }

    pub fn failed(&self) -> bool {
        self.rows.iter().any(|r| r.failure.is_some())
    }
}

#[derive(Debug, Clone)]
pub struct StudyOptions {
    pub cell: CellOptions,
    pub linear_tol: f64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self { cell: CellOptions::default(), linear_tol: 1e-10 }
    }
}

#[allow(clippy::too_many_arguments)]
fn convergence_row(eps: f64, alpha: f64, beta: f64, kstar: f64, exact: &SineSolution, f: &Source, level: u32, opts: &StudyOptions) -> Result<ConvergenceRow> {
    let cells = (1.0 / eps).round() as usize;
    if cells == 0 || ((cells as f64) * eps - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("eps = {eps} is not 1/N")));
    }
    let setup = CellSetup::critical(eps, level)?;
    let pencil = lambda_eps_kappa(&setup.periodic, &setup.periodic_forms, kstar, setup.ball_shift_guess(kstar), &opts.cell)?;
    let mu = mu_coeff(eps, 3, setup.r_cell);
    let pmesh = Arc::new(build_perforated_mesh(cells, setup.r_cell, level)?);
    let (u, forms) = solve_perforated(pmesh.clone(), alpha, beta, mu, f, opts.linear_tol)?;
    let w = build_corrector(&setup.periodic, &pencil.vector, pencil.mean_integral, pmesh.clone())?;
    let eta = (beta + pencil.lambda / (eps * eps)).abs();
    let h1 = h1_corrector_error(&u, &w, exact);
    Ok(ConvergenceRow {
        eps,
        dofs: pmesh.num_nodes() - pmesh.dirichlet.iter().filter(|d| **d).count(),
        kappa_star: kstar,
        lambda: pencil.lambda,
        l2_error: l2_error(&u, exact),
        h1_corrector_error: h1,
        eta,
        mu,
        rate_quotient: h1 / (eps + eta + mu),
        corrector_l2_deviation: corrector_l2_deviation(&w),
        robin_residual: corrector_robin_residual(&w, &forms, pencil.lambda, kstar, setup.periodic_forms.s_h)?,
        failure: None,
    })
}

/// Perforated vs homogenized solutions at critical scaling over `eps_list`
/// (each `1/N`), with the strange term from the ball closed form. Rows
/// that fail carry the error and NaN values.
pub fn convergence_study(
    eps_list: &[f64],
    alpha: f64,
    beta: f64,
    f: &Source,
    level: u32,
    opts: &StudyOptions,
) -> Result<ConvergenceReport> {
    let Source::SineProduct { amplitude } = *f else {
        return Err(Error::InvalidParameter("the convergence study needs the sine-product source".into()));
    };
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("eps_list must be strictly decreasing".into()));
    }
    let ks = kappa_star(beta, &ClosedForm { n: 3 }, None)?;
    let exact = SineSolution::new(amplitude, alpha, ks.strange_term);
    let rows = eps_list
        .iter()
        .map(|&eps| {
            convergence_row(eps, alpha, beta, ks.kappa_star, &exact, f, level, opts).unwrap_or_else(|e| ConvergenceRow {
                eps,
                dofs: 0,
                kappa_star: ks.kappa_star,
                lambda: f64::NAN,
                l2_error: f64::NAN,
                h1_corrector_error: f64::NAN,
                eta: f64::NAN,
                mu: f64::NAN,
                rate_quotient: f64::NAN,
                corrector_l2_deviation: f64::NAN,
                robin_residual: f64::NAN,
                failure: Some(e.to_string()),
            })
        })
        .collect();
    Ok(ConvergenceReport {
        alpha,
        beta,
        level,
        strange_term: ks.strange_term,
        rows,
        note: "decreasing L2 error is checked empirically; no rate is known a priori",
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// Holes too small: `λ/ε² → 0`.
    DecreasingToZero,
    /// Holes too large: `λ/ε² → ∞`.
    IncreasingToInfinity,
    Settling,
    Unclassified,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeRow {
    pub eps: f64,
    pub r_cell: f64,
    pub lambda: f64,
    pub lambda_over_eps2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeRecord {
    pub a: f64,
    pub kappa: f64,
    pub level: u32,
    pub rows: Vec<RegimeRow>,
    /// `(λ/ε²)_{k+1} / (λ/ε²)_k` between consecutive rows.
    pub ratios: Vec<f64>,
    pub trend: Trend,
    /// The regime the exponent belongs to.
    pub expected: Trend,
}

impl RegimeRecord {
    pub const CSV_HEADER: &'static str = "a,kappa,eps,r_cell,lambda,lambda_over_eps2";

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| format!("{},{},{},{:.12e},{:.12e},{:.12e}", self.a, self.kappa, r.eps, r.r_cell, r.lambda, r.lambda_over_eps2))
            .collect()
    }
}

/// Classifies consecutive ratios: all `≤ 1/2` is decreasing, all `≥ 2`
/// increasing, all within `[1/2, 2]` settling.
pub fn classify_ratios(ratios: &[f64]) -> Trend {
    if ratios.is_empty() {
        Trend::Unclassified
    } else if ratios.iter().all(|&r| r <= 0.5) {
        Trend::DecreasingToZero
    } else if ratios.iter().all(|&r| r >= 2.0) {
        Trend::IncreasingToInfinity
    } else if ratios.iter().all(|&r| (0.5..=2.0).contains(&r)) {
        Trend::Settling
    } else {
        Trend::Unclassified
    }
}

/// `λ(ε, κ)/ε²` for holes of cell radius `ε^{a−1}` and its trend.
pub fn regime_sweep(a: f64, eps_list: &[f64], kappa: f64, level: u32, opts: &CellOptions) -> Result<RegimeRecord> {
    if !(a > 1.0) {
        return Err(Error::InvalidParameter(format!("scaling exponent a = {a} must exceed 1")));
    }
    let gamma = critical_exponent(3);
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let r_cell = cell_hole_radius(eps, a, 3)?;
        let setup = CellSetup::new(eps, r_cell, level)?;
        let guess = r_cell * lambda_star_ball(kappa, 3);
        let p = lambda_eps_kappa(&setup.periodic, &setup.periodic_forms, kappa, guess, opts)?;
        rows.push(RegimeRow { eps, r_cell, lambda: p.lambda, lambda_over_eps2: p.lambda / (eps * eps) });
    }
    let ratios: Vec<f64> = rows.windows(2).map(|w| w[1].lambda_over_eps2 / w[0].lambda_over_eps2).collect();
    let expected = if (a - gamma).abs() < 1e-12 {
        Trend::Settling
    } else if a > gamma {
        Trend::DecreasingToZero
    } else {
        Trend::IncreasingToInfinity
    };
    Ok(RegimeRecord { a, kappa, level, rows, trend: classify_ratios(&ratios), ratios, expected })
}
