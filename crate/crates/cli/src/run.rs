//! One function per subcommand, each turning a resolved config into a
//! report.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use robinhom_core::cellmesh::{build_perforated_mesh, cell_hole_radius, mu_coeff};
use robinhom_core::cellspec::{cell_spectrum, CellOptions, CellSetup, CellSpectrum};
use robinhom_core::exterior::{exterior_numeric, lambda_star_ball, star_constants, StarConstants};
use robinhom_core::homog::{
    convergence_study, l2_error, regime_sweep, solve_homogenized, solve_perforated, trace_ratio, RegimeRecord,
    SineSolution, Source, StudyOptions,
};
use robinhom_core::numkernel::EigenConfig;
use robinhom_core::strangeterm::{
    kappa_star, strange_term_curve, CellExtrapolated, ClosedForm, ExteriorNumeric, LambdaStar, StrangeTermResult,
};
use robinhom_core::validate::{run_suite, ValidateOptions};
use robinhom_core::SparseSym;

use crate::config::{Evaluator, RunConfig};
use crate::output::{emit, render, write_json, Report};
use crate::{CliError, EXIT_OK, EXIT_VALIDATION_FAILED};

pub fn dispatch(cfg: &RunConfig) -> Result<i32, CliError> {
    let start = Instant::now();
    let report = match cfg.subcommand {
        "cell-spectrum" => cell_spectrum_cmd(cfg)?,
        "exterior" => exterior_cmd(cfg)?,
        "strange-term" => strange_term_cmd(cfg)?,
        "homogenize" => homogenize_cmd(cfg)?,
        "convergence" => convergence_cmd(cfg)?,
        "regimes" => regimes_cmd(cfg)?,
        "validate" => return validate_cmd(cfg, start),
        other => return Err(CliError::Config(format!("unknown subcommand {other}"))),
    };
    let text = render(cfg, &report, start.elapsed().as_secs_f64())?;
    emit(cfg, &text)?;
    Ok(EXIT_OK)
}

fn cell_options(cfg: &RunConfig) -> CellOptions {
    let d = CellOptions::default();
    CellOptions {
        eigen: EigenConfig { tol: cfg.eigen_tol, inner_tol: (cfg.eigen_tol * 1e-2).clamp(1e-14, 1e-9), ..d.eigen },
        linear_tol: cfg.linear_tol,
        ..d
    }
}

fn dump_matrices(dir: &Path, mats: &[(&str, &SparseSym)]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for (name, m) in mats {
        let path = dir.join(format!("{name}.txt"));
        std::fs::write(&path, m.to_coordinate_text()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn cell_spectrum_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let opts = cell_options(cfg);
    let a = cfg.a[0];
    let mut rows: Vec<CellSpectrum> = Vec::new();
    for (i, &eps) in cfg.eps.iter().enumerate() {
        let setup = CellSetup::scaled(eps, a, cfg.level)?;
        if i == 0 {
            if let Some(path) = &cfg.mesh_dump {
                write_json(path, &setup.periodic.to_json())?;
            }
            if let Some(dir) = &cfg.matrix_dump {
                let f = &setup.periodic_forms;
                dump_matrices(dir, &[("A", &f.a), ("M", &f.m), ("B", &f.b)])?;
            }
        }
        if cfg.kappa.is_empty() {
            rows.push(cell_spectrum(&setup, None, &opts)?);
        }
        for &kappa in &cfg.kappa {
            rows.push(cell_spectrum(&setup, Some(kappa), &opts)?);
        }
    }
    let csv = rows.iter().map(|r| r.csv_row()).collect();
    Report::new(&rows, CellSpectrum::CSV_HEADER, csv)
}

#[derive(Serialize)]
struct ExteriorRow {
    kappa: f64,
    n: usize,
    closed_form: f64,
    numeric: f64,
    relative_gap: f64,
}

#[derive(Serialize)]
struct ExteriorReport {
    constants: StarConstants,
    radius: f64,
    intervals: usize,
    rows: Vec<ExteriorRow>,
}

fn exterior_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut rows = Vec::new();
    for &kappa in &cfg.kappa {
        let closed_form = lambda_star_ball(kappa, cfg.n);
        let numeric = exterior_numeric(kappa, cfg.n, cfg.radius, cfg.intervals)?;
        let relative_gap = if closed_form == 0.0 { numeric.abs() } else { ((numeric - closed_form) / closed_form).abs() };
        rows.push(ExteriorRow { kappa, n: cfg.n, closed_form, numeric, relative_gap });
    }
    let csv = rows
        .iter()
        .map(|r| format!("{},{},{:.15e},{:.15e},{:.3e}", r.kappa, r.n, r.closed_form, r.numeric, r.relative_gap))
        .collect();
    let report = ExteriorReport { constants: star_constants(cfg.n)?, radius: cfg.radius, intervals: cfg.intervals, rows };
    Report::new(&report, "kappa,n,closed_form,numeric,relative_gap", csv)
}

fn strange_term_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let eval: Box<dyn LambdaStar> = match cfg.evaluator {
        Evaluator::ClosedForm => Box::new(ClosedForm { n: cfg.n }),
        Evaluator::ExteriorNumeric => Box::new(ExteriorNumeric { n: cfg.n, radius: cfg.radius, intervals: cfg.intervals }),
        Evaluator::CellExtrapolated => {
            if cfg.n != 3 {
                return Err(CliError::Config("the cell evaluator is meshed in three dimensions only".into()));
            }
            if cfg.eps.len() < 2 {
                return Err(CliError::Config("the cell evaluator needs at least two eps values".into()));
            }
            Box::new(CellExtrapolated::critical(&cfg.eps, cfg.level, cell_options(cfg))?)
        }
    };
    let results: Vec<StrangeTermResult> = if cfg.beta.len() == 1 {
        vec![kappa_star(cfg.beta[0], eval.as_ref(), cfg.tol)?]
    } else {
        strange_term_curve(&cfg.beta, eval.as_ref(), cfg.tol)?
    };
    let csv = results.iter().map(|r| r.csv_row()).collect();
    Report::new(&results, StrangeTermResult::CSV_HEADER, csv)
}

#[derive(Serialize)]
struct HomogenizeResult {
    eps: f64,
    r_cell: f64,
    dofs: usize,
    alpha: f64,
    beta: f64,
    mu: f64,
    kappa_star: f64,
    strange_term: f64,
    energy: f64,
    /// `‖u_ε − u₀‖_{L²(Ω_ε)}` against the closed-form `u₀`.
    l2_error: f64,
    /// Relative L² gap between the grid solution for `u₀` and its closed form.
    homogenized_grid_gap: f64,
    trace_ratio: f64,
}

const HOMOGENIZE_HEADER: &str =
    "eps,r_cell,dofs,alpha,beta,mu,kappa_star,strange_term,energy,l2_error,homogenized_grid_gap,trace_ratio";

fn homogenize_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let eps = cfg.eps[0];
    let beta = cfg.beta[0];
    let cells = (1.0 / eps).round() as usize;
    let r_cell = cell_hole_radius(eps, cfg.a[0], 3)?;
    let ks = kappa_star(beta, &ClosedForm { n: 3 }, None)?;
    let f = Source::default_sine();
    let Source::SineProduct { amplitude } = f else { unreachable!() };
    let exact = SineSolution::new(amplitude, cfg.alpha, ks.strange_term);

    let pmesh = Arc::new(build_perforated_mesh(cells, r_cell, cfg.level)?);
    if let Some(path) = &cfg.mesh_dump {
        write_json(path, &pmesh.to_json())?;
    }
    let mu = mu_coeff(eps, 3, r_cell);
    let (u, forms) = solve_perforated(pmesh.clone(), cfg.alpha, beta, mu, &f, cfg.linear_tol)?;
    if let Some(dir) = &cfg.matrix_dump {
        dump_matrices(dir, &[("A", &forms.a), ("M", &forms.m), ("B", &forms.b_gamma)])?;
    }
    if let Some(path) = &cfg.field_dump {
        write_json(path, &serde_json::json!({ "mesh": pmesh.to_json(), "fields": [u.dump()] }))?;
    }
    let u0 = solve_homogenized(cfg.grid_n, cfg.alpha, ks.strange_term, &f, cfg.linear_tol)?;
    let u0_norm = exact.coefficient.abs() * 0.5f64.powf(1.5);
    let result = HomogenizeResult {
        eps,
        r_cell,
        dofs: pmesh.num_nodes() - pmesh.dirichlet.iter().filter(|d| **d).count(),
        alpha: cfg.alpha,
        beta,
        mu,
        kappa_star: ks.kappa_star,
        strange_term: ks.strange_term,
        energy: u.energy.unwrap_or(f64::NAN),
        l2_error: l2_error(&u, &exact),
        homogenized_grid_gap: l2_error(&u0, &exact) / u0_norm,
        trace_ratio: trace_ratio(&u, &forms),
    };
    let r = &result;
    let row = format!(
        "{},{:.12e},{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
        r.eps, r.r_cell, r.dofs, r.alpha, r.beta, r.mu, r.kappa_star, r.strange_term, r.energy, r.l2_error,
        r.homogenized_grid_gap, r.trace_ratio
    );
    Report::new(&result, HOMOGENIZE_HEADER, vec![row])
}

fn convergence_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let opts = StudyOptions { cell: cell_options(cfg), linear_tol: cfg.linear_tol };
    let report = convergence_study(&cfg.eps, cfg.alpha, cfg.beta[0], &Source::default_sine(), cfg.level, &opts)?;
    if let Some(r) = report.rows.iter().find(|r| r.failure.is_some()) {
        eprintln!("robinhom: row eps={} failed: {}", r.eps, r.failure.as_deref().unwrap_or(""));
    }
    let rows = report.csv_rows();
    Report::new(&report, robinhom_core::homog::ConvergenceReport::CSV_HEADER, rows)
}

fn regimes_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let opts = cell_options(cfg);
    let mut records: Vec<RegimeRecord> = Vec::new();
    for &a in &cfg.a {
        records.push(regime_sweep(a, &cfg.eps, cfg.kappa[0], cfg.level, &opts)?);
    }
    let rows = records.iter().flat_map(|r| r.csv_rows()).collect();
    Report::new(&records, RegimeRecord::CSV_HEADER, rows)
}

fn validate_cmd(cfg: &RunConfig, start: Instant) -> Result<i32, CliError> {
    let outcomes = run_suite(cfg.quick, &ValidateOptions { inject_sign_fault: cfg.inject_fault });
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if cfg.output.is_some() {
        let csv = outcomes
            .iter()
            .map(|o| format!("{},{},{},{:.3},{}", o.id, o.name, o.passed, o.seconds, o.detail.replace(',', ";")))
            .collect();
        let report = Report::new(&outcomes, "id,name,passed,seconds,detail", csv)?;
        emit(cfg, &render(cfg, &report, start.elapsed().as_secs_f64())?)?;
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_VALIDATION_FAILED })
}
