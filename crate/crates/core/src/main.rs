use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use cusp_spectra::counting::{cusp_mode_counts, eigenvalues_below};
use cusp_spectra::modes::ModeOperator;
use cusp_spectra::verify::{run_all, VerifyConfig};
use cusp_spectra::weyl::{geometric_grid, weyl_report_with, DEFAULT_HEADROOM};
use cusp_spectra::{discreteness_verdict, surface_bracket, BoundaryCondition, Surface, Verdict};

const THREADS_VAR: &str = "CUSP_SPECTRA_THREADS";

/// Eigenvalue counts and Weyl-law checks for magnetic Laplacians on
/// hyperbolic cusps.
#[derive(Debug, Parser)]
#[command(name = "cusp-spectra", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dirichlet/Neumann bracket of N(λ) for the surface.
    Count {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        lambda: f64,
    },
    /// Per-mode eigenvalues below λ on one cusp.
    Eigenvalues {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        lambda: f64,
        /// 0-based cusp index.
        #[arg(long, default_value_t = 0)]
        cusp: usize,
        #[arg(long, value_enum, default_value_t = Bc::Dirichlet)]
        bc: Bc,
    },
    /// Weyl report on a geometric λ grid.
    Weyl {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        lambda_max: f64,
        #[arg(long, default_value_t = 100.0)]
        lambda_min: f64,
        #[arg(long, default_value_t = 32)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_HEADROOM)]
        headroom: f64,
    },
    /// Full verification battery; exits nonzero on any failure.
    Verify {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON file overriding verification thresholds.
        #[arg(long)]
        thresholds: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Io {
    /// Surface JSON; defaults to the built-in reference surface.
    #[arg(long)]
    surface: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Bc {
    Dirichlet,
    Neumann,
}

impl From<Bc> for BoundaryCondition {
    fn from(bc: Bc) -> Self {
        match bc {
            Bc::Dirichlet => BoundaryCondition::Dirichlet,
            Bc::Neumann => BoundaryCondition::Neumann,
        }
    }
}

/// Failures that are the caller's fault: bad config or an unsupported surface.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

#[derive(Debug, Serialize, Deserialize)]
struct CountOutput {
    lambda: f64,
    lower: u64,
    upper: u64,
    near_degenerate: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModeEigenvalues {
    ell: i64,
    eigenvalues: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EigenvaluesOutput {
    cusp: usize,
    lambda: f64,
    bc: BoundaryCondition,
    modes: Vec<ModeEigenvalues>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize =
            v.trim().parse().map_err(|_| UsageError(format!("{THREADS_VAR} must be a positive integer, got {v:?}")))?;
        if n == 0 {
            bail!(UsageError(format!("{THREADS_VAR} must be positive")));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn load_surface(path: Option<&Path>) -> anyhow::Result<Surface> {
    match path {
        None => Ok(Surface::reference()),
        Some(p) => {
            Surface::from_path(p).map_err(|e| UsageError(format!("cannot load surface {}: {e}", p.display())).into())
        }
    }
}

fn require_discrete(s: &Surface) -> anyhow::Result<()> {
    if let Verdict::Essential { bottom, integral_cusps } = discreteness_verdict(s) {
        bail!(UsageError(format!(
            "spectrum is not discrete: discreteness requires every cusp holonomy to lie outside 2πZ, \
             but cusps {integral_cusps:?} (0-based) have integral flux; essential spectrum starts at {bottom}"
        )));
    }
    Ok(())
}

fn open_out(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Count { io, lambda } => {
            let s = load_surface(io.surface.as_deref())?;
            require_discrete(&s)?;
            let b = surface_bracket(&s, lambda).map_err(|e| UsageError(e.to_string()))?;
            let res = CountOutput { lambda, lower: b.lower, upper: b.upper, near_degenerate: b.near_degenerate };
            let mut out = open_out(io.out.as_deref())?;
            match io.format.unwrap_or(Format::Json) {
                Format::Json => emit_json(&mut out, &res)?,
                Format::Csv => {
                    writeln!(out, "lambda,lower,upper,near_degenerate")?;
                    writeln!(out, "{:.16e},{},{},{}", res.lambda, res.lower, res.upper, res.near_degenerate)?;
                }
            }
            out.flush()?;
        }
        Command::Eigenvalues { io, lambda, cusp, bc } => {
            let s = load_surface(io.surface.as_deref())?;
            let Some(c) = s.cusps().get(cusp) else {
                bail!(UsageError(format!("cusp index {cusp} out of range (surface has {})", s.cusps().len())));
            };
            if c.is_integral() {
                bail!(UsageError(format!(
                    "cusp {cusp} has integral flux: its modes are not discrete (discreteness requires holonomy outside 2πZ)"
                )));
            }
            let bc = BoundaryCondition::from(bc);
            let counts = cusp_mode_counts(c, lambda, bc)?;
            let mut modes = Vec::new();
            for (ell, r) in &counts.modes {
                if r.count > 0 {
                    let eigenvalues = eigenvalues_below(&ModeOperator::p(c, *ell, bc), lambda)?;
                    modes.push(ModeEigenvalues { ell: *ell, eigenvalues });
                }
            }
            let res = EigenvaluesOutput { cusp, lambda, bc, modes };
            let mut out = open_out(io.out.as_deref())?;
            match io.format.unwrap_or(Format::Json) {
                Format::Json => emit_json(&mut out, &res)?,
                Format::Csv => {
                    writeln!(out, "ell,index,eigenvalue")?;
                    for m in &res.modes {
                        for (k, e) in m.eigenvalues.iter().enumerate() {
                            writeln!(out, "{},{},{:.16e}", m.ell, k + 1, e)?;
                        }
                    }
                }
            }
            out.flush()?;
        }
        Command::Weyl { io, lambda_max, lambda_min, grid, headroom } => {
            let s = load_surface(io.surface.as_deref())?;
            require_discrete(&s)?;
            let lambdas = geometric_grid(lambda_min, lambda_max, grid).map_err(|e| UsageError(e.to_string()))?;
            let report = weyl_report_with(&s, &lambdas, headroom)?;
            log::info!(
                "fit D: C {:.4} validation {:.4}; fit N: C {:.4} validation {:.4}; passed {}",
                report.fit_d.fitted_constant,
                report.fit_d.validation_max,
                report.fit_n.fitted_constant,
                report.fit_n.validation_max,
                report.passed()
            );
            let mut out = open_out(io.out.as_deref())?;
            match io.format.unwrap_or(Format::Csv) {
                Format::Csv => report.write_csv(&mut out)?,
                Format::Json => writeln!(out, "{}", report.to_json()?)?,
            }
            out.flush()?;
        }
        Command::Verify { io, seed, thresholds } => {
            if io.surface.is_some() {
                log::warn!("verify runs a fixed battery; --surface is ignored");
            }
            let cfg = match thresholds {
                None => VerifyConfig::default(),
                Some(p) => {
                    let text = std::fs::read_to_string(&p).with_context(|| format!("cannot read {}", p.display()))?;
                    serde_json::from_str(&text)
                        .map_err(|e| UsageError(format!("bad thresholds file {}: {e}", p.display())))?
                }
            };
            let report = run_all(&cfg, seed)?;
            for c in &report.checks {
                eprintln!("{}", c.line());
            }
            let mut out = open_out(io.out.as_deref())?;
            match io.format.unwrap_or(Format::Json) {
                Format::Json => emit_json(&mut out, &report)?,
                Format::Csv => {
                    writeln!(out, "check,passed,metric")?;
                    for c in &report.checks {
                        writeln!(out, "{},{},{:.16e}", c.name, c.passed, c.metric)?;
                    }
                }
            }
            out.flush()?;
            if !report.passed {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
