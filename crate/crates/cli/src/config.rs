//! Command-line flags, the JSON config file, and the validated run
//! configuration they resolve to (flags over file over defaults).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "robinhom", version, about = "Strange terms and homogenization of Robin problems on perforated domains")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON config file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write results here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for parallel assembly (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Eigen residual tolerance for cell problems.
    #[arg(long, global = true)]
    pub eigen_tol: Option<f64>,
    /// Relative residual tolerance for linear solves.
    #[arg(long, global = true)]
    pub linear_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluator {
    ClosedForm,
    ExteriorNumeric,
    CellExtrapolated,
}

/// Accepts decimals and fractions such as `1/3`.
fn parse_number(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            let q: f64 = q.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            p / q
        }
        None => s.trim().parse().map_err(|e| format!("{s}: {e}"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("{s} is not a finite number"))
    }
}

#[derive(Debug, Args, Default)]
pub struct ProblemArgs {
    /// Space dimension (meshed problems need 3).
    #[arg(long)]
    pub n: Option<usize>,
    /// Period(s) ε, comma separated; fractions like 1/3 accepted.
    #[arg(long, value_delimiter = ',', value_parser = parse_number)]
    pub eps: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_number)]
    pub kappa: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_number)]
    pub beta: Vec<f64>,
    #[arg(long, value_parser = parse_number)]
    pub alpha: Option<f64>,
    /// Hole scaling exponent(s): physical hole radius ε^a.
    #[arg(long, value_delimiter = ',', value_parser = parse_number)]
    pub a: Vec<f64>,
    /// Cell mesh refinement level.
    #[arg(long)]
    pub level: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Λ^Dir, Λ^St, Cap and λ(ε, κ) on the periodicity cell.
    CellSpectrum {
        #[command(flatten)]
        p: ProblemArgs,
        /// Write the periodic cell mesh (first ε) as JSON.
        #[arg(long)]
        mesh_dump: Option<PathBuf>,
        /// Write A, M, B of the first ε as coordinate text into this directory.
        #[arg(long)]
        matrix_dump: Option<PathBuf>,
    },
    /// Limiting exterior eigenvalue λ*(κ): closed form and radial solver.
    Exterior {
        #[command(flatten)]
        p: ProblemArgs,
        /// Truncation radius of the radial problem.
        #[arg(long, value_parser = parse_number)]
        radius: Option<f64>,
        /// Radial intervals.
        #[arg(long)]
        intervals: Option<usize>,
    },
    /// κ*(β) and the strange term βκ*(β).
    StrangeTerm {
        #[command(flatten)]
        p: ProblemArgs,
        #[arg(long, value_enum)]
        evaluator: Option<Evaluator>,
        /// Bisection bracket tolerance (default depends on the evaluator).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Perforated solution at one ε against the homogenized solution.
    Homogenize {
        #[command(flatten)]
        p: ProblemArgs,
        /// Intervals per side of the homogenized grid.
        #[arg(long)]
        grid_n: Option<usize>,
        #[arg(long)]
        mesh_dump: Option<PathBuf>,
        #[arg(long)]
        matrix_dump: Option<PathBuf>,
        /// Write the mesh JSON plus nodal values of u_ε.
        #[arg(long)]
        field_dump: Option<PathBuf>,
    },
    /// Error table over a chain of ε at critical scaling.
    Convergence {
        #[command(flatten)]
        p: ProblemArgs,
    },
    /// λ(ε, κ)/ε² trends for sub-, super- and critical hole scalings.
    Regimes {
        #[command(flatten)]
        p: ProblemArgs,
    },
    /// Runs the acceptance suite and prints a pass/fail table.
    Validate {
        /// Closed-form and small-mesh checks only.
        #[arg(long)]
        quick: bool,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CellSpectrum { .. } => "cell-spectrum",
            Command::Exterior { .. } => "exterior",
            Command::StrangeTerm { .. } => "strange-term",
            Command::Homogenize { .. } => "homogenize",
            Command::Convergence { .. } => "convergence",
            Command::Regimes { .. } => "regimes",
            Command::Validate { .. } => "validate",
        }
    }

    fn problem(&self) -> Option<&ProblemArgs> {
        match self {
            Command::CellSpectrum { p, .. }
            | Command::Exterior { p, .. }
            | Command::StrangeTerm { p, .. }
            | Command::Homogenize { p, .. }
            | Command::Convergence { p }
            | Command::Regimes { p } => Some(p),
            Command::Validate { .. } => None,
        }
    }
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<usize>,
    pub eps: Option<Vec<f64>>,
    pub kappa: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub a: Option<Vec<f64>>,
    pub level: Option<u32>,
    pub eigen_tol: Option<f64>,
    pub linear_tol: Option<f64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
    pub radius: Option<f64>,
    pub intervals: Option<usize>,
    pub grid_n: Option<usize>,
    pub evaluator: Option<Evaluator>,
    pub tol: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }
}

/// Fully resolved, validated configuration; echoed into every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: &'static str,
    pub n: usize,
    pub eps: Vec<f64>,
    pub kappa: Vec<f64>,
    pub beta: Vec<f64>,
    pub alpha: f64,
    pub a: Vec<f64>,
    pub level: u32,
    pub eigen_tol: f64,
    pub linear_tol: f64,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
    pub radius: f64,
    pub intervals: usize,
    pub grid_n: usize,
    pub evaluator: Evaluator,
    pub tol: Option<f64>,
    pub quick: bool,
    pub inject_fault: bool,
    pub mesh_dump: Option<PathBuf>,
    pub matrix_dump: Option<PathBuf>,
    pub field_dump: Option<PathBuf>,
}

const CHAIN: [f64; 3] = [0.5, 1.0 / 3.0, 0.25];

fn pick_list(cli: &[f64], file: &Option<Vec<f64>>, default: &[f64]) -> Vec<f64> {
    if !cli.is_empty() {
        cli.to_vec()
    } else if let Some(f) = file {
        f.clone()
    } else {
        default.to_vec()
    }
}

impl RunConfig {
    pub fn resolve(cli: &Cli, file: &FileConfig) -> Result<Self, String> {
        let cmd = &cli.command;
        let name = cmd.name();
        let empty = ProblemArgs::default();
        let p = cmd.problem().unwrap_or(&empty);
        let four_pi = 4.0 * PI;
        let (d_eps, d_kappa, d_beta, d_a): (&[f64], &[f64], &[f64], &[f64]) = match name {
            "cell-spectrum" => (&[0.5], &[], &[four_pi], &[3.0]),
            "exterior" => (&[0.5], &[0.5, 2.0], &[four_pi], &[3.0]),
            "strange-term" => (&CHAIN, &[], &[four_pi], &[3.0]),
            "homogenize" => (&[0.5], &[], &[four_pi], &[3.0]),
            "convergence" => (&CHAIN, &[], &[four_pi], &[3.0]),
            "regimes" => (&CHAIN, &[2.0], &[four_pi], &[4.0, 2.0, 3.0]),
            _ => (&[0.5], &[], &[four_pi], &[3.0]),
        };
        let (mut radius, mut intervals, mut grid_n, mut evaluator, mut tol) = (None, None, None, None, None);
        let (mut quick, mut inject_fault) = (false, false);
        let (mut mesh_dump, mut matrix_dump, mut field_dump) = (None, None, None);
        match cmd {
            Command::CellSpectrum { mesh_dump: m, matrix_dump: x, .. } => {
                mesh_dump = m.clone();
                matrix_dump = x.clone();
            }
            Command::Exterior { radius: r, intervals: i, .. } => {
                radius = *r;
                intervals = *i;
            }
            Command::StrangeTerm { evaluator: e, tol: t, .. } => {
                evaluator = *e;
                tol = *t;
            }
            Command::Homogenize { grid_n: g, mesh_dump: m, matrix_dump: x, field_dump: f, .. } => {
                grid_n = *g;
                mesh_dump = m.clone();
                matrix_dump = x.clone();
                field_dump = f.clone();
            }
            Command::Validate { quick: q, inject_fault: f } => {
                quick = *q;
                inject_fault = *f;
            }
            Command::Convergence { .. } | Command::Regimes { .. } => {}
        }
        let g = &cli.global;
        let cfg = RunConfig {
            subcommand: name,
            n: p.n.or(file.n).unwrap_or(3),
            eps: pick_list(&p.eps, &file.eps, d_eps),
            kappa: pick_list(&p.kappa, &file.kappa, d_kappa),
            beta: pick_list(&p.beta, &file.beta, d_beta),
            alpha: p.alpha.or(file.alpha).unwrap_or(0.0),
            a: pick_list(&p.a, &file.a, d_a),
            level: p.level.or(file.level).unwrap_or(2),
            eigen_tol: g.eigen_tol.or(file.eigen_tol).unwrap_or(1e-10),
            linear_tol: g.linear_tol.or(file.linear_tol).unwrap_or(1e-10),
            output: g.output.clone().or_else(|| file.output.clone()),
            format: g.format.or(file.format).unwrap_or(Format::Json),
            threads: g.threads.or(file.threads),
            radius: radius.or(file.radius).unwrap_or(1000.0),
            intervals: intervals.or(file.intervals).unwrap_or(512),
            grid_n: grid_n.or(file.grid_n).unwrap_or(16),
            evaluator: evaluator.or(file.evaluator).unwrap_or(Evaluator::ClosedForm),
            tol: tol.or(file.tol),
            quick,
            inject_fault,
            mesh_dump,
            matrix_dump,
            field_dump,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        let meshed = matches!(self.subcommand, "cell-spectrum" | "homogenize" | "convergence" | "regimes");
        if self.n < 3 {
            return Err(format!("n = {} must be at least 3", self.n));
        }
        if meshed && self.n != 3 {
            return Err(format!("{} is meshed in three dimensions only (got n = {})", self.subcommand, self.n));
        }
        if let Some(bad) = self.eps.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(format!("eps = {bad} must lie in (0, 1]"));
        }
        if matches!(self.subcommand, "homogenize" | "convergence") {
            if let Some(bad) = self.eps.iter().find(|e| ((1.0 / **e).round() * **e - 1.0).abs() > 1e-9) {
                return Err(format!("eps = {bad} must be 1/N for the perforated cube"));
            }
        }
        if self.subcommand == "homogenize" && self.eps.len() != 1 {
            return Err("homogenize takes a single eps".into());
        }
        if matches!(self.subcommand, "convergence" | "regimes" | "strange-term") && self.eps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err("eps must be strictly decreasing".into());
        }
        if self.eps.is_empty() {
            return Err("eps list is empty".into());
        }
        if let Some(bad) = self.kappa.iter().find(|k| !(**k > 0.0)) {
            return Err(format!("kappa = {bad} must be positive"));
        }
        if matches!(self.subcommand, "cell-spectrum" | "regimes") && self.kappa.contains(&1.0) {
            return Err("kappa = 1 is excluded".into());
        }
        if self.subcommand == "regimes" && self.kappa.len() != 1 {
            return Err("regimes takes a single kappa".into());
        }
        if let Some(bad) = self.beta.iter().find(|b| !(**b > 0.0)) {
            return Err(format!("beta = {bad} must be positive"));
        }
        if self.subcommand == "strange-term" && self.beta.windows(2).any(|w| !(w[0] < w[1])) {
            return Err("beta values must be strictly increasing".into());
        }
        if matches!(self.subcommand, "homogenize" | "convergence") && self.beta.len() != 1 {
            return Err(format!("{} takes a single beta", self.subcommand));
        }
        if !(self.alpha >= 0.0) {
            return Err(format!("alpha = {} must be nonnegative", self.alpha));
        }
        if let Some(bad) = self.a.iter().find(|a| !(**a > 1.0)) {
            return Err(format!("a = {bad} must exceed 1"));
        }
        if self.subcommand == "cell-spectrum" && self.a.len() != 1 {
            return Err("cell-spectrum takes a single scaling exponent".into());
        }
        if !(1..=8).contains(&self.level) {
            return Err(format!("level = {} must be between 1 and 8", self.level));
        }
        for (name, t) in [("eigen-tol", self.eigen_tol), ("linear-tol", self.linear_tol)] {
            if !(t > 0.0 && t < 1.0) {
                return Err(format!("{name} = {t} must lie in (0, 1)"));
            }
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(format!("tol = {t} must lie in (0, 1)"));
            }
        }
        if self.threads == Some(0) {
            return Err("threads must be positive".into());
        }
        if !(self.radius > 1.0) {
            return Err(format!("radius = {} must exceed 1", self.radius));
        }
        if self.intervals < 8 {
            return Err(format!("intervals = {} must be at least 8", self.intervals));
        }
        if self.grid_n == 0 {
            return Err("grid-n must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("robinhom").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn fractions_parse() {
        assert_eq!(parse_number("1/4").unwrap(), 0.25);
        assert_eq!(parse_number("2").unwrap(), 2.0);
        assert!(parse_number("1/0").is_err());
        assert!(parse_number("x").is_err());
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let cli = parse(&["convergence", "--alpha", "2"]);
        let file = FileConfig { alpha: Some(1.0), level: Some(3), ..FileConfig::default() };
        let cfg = RunConfig::resolve(&cli, &file).unwrap();
        assert_eq!(cfg.alpha, 2.0);
        assert_eq!(cfg.level, 3);
        assert_eq!(cfg.eps, CHAIN.to_vec());
    }

    #[test]
    fn rejects_bad_values() {
        let file = FileConfig::default();
        for args in [
            &["cell-spectrum", "--kappa", "1"][..],
            &["convergence", "--eps", "0.3"],
            &["homogenize", "--level", "0"],
            &["strange-term", "--beta=-1"],
            &["cell-spectrum", "--n", "4"],
            &["regimes", "--a", "1"],
        ] {
            assert!(RunConfig::resolve(&parse(args), &file).is_err(), "{args:?}");
        }
    }
}
