//! Command-line driver: structural checks, single runs and convergence
//! sweeps.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::assembly::{FieldKind, MaterialParams, PhSystem, Scheme};
use crate::error::{Error, Result};
use crate::mesh::Diagonal;
use crate::report::{convergence_csv, convergence_json, convergence_svg, rate_checks, RunConventions};
use crate::study::{build_system, convergence_study, run_manufactured, StudyConfig};

/// Exit status when a structural invariant is violated.
pub const EXIT_INVARIANT: i32 = 2;
/// Exit status when a convergence rate falls short.
pub const EXIT_RATE: i32 = 3;
/// Exit status for configuration, numerical and I/O errors.
pub const EXIT_ERROR: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "phplate", version, about = "Mixed finite elements for port-Hamiltonian plates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check symmetry, skewness and definiteness of the assembled matrices.
    Verify(CommonArgs),
    /// Integrate the manufactured solution and write energy and error files.
    Run(CommonArgs),
    /// Run a mesh sweep and report convergence rates.
    Converge(CommonArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DiagonalArg {
    Right,
    Left,
    Crossed,
}

impl From<DiagonalArg> for Diagonal {
    fn from(d: DiagonalArg) -> Self {
        match d {
            DiagonalArg::Right => Diagonal::Right,
            DiagonalArg::Left => Diagonal::Left,
            DiagonalArg::Crossed => Diagonal::Crossed,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct CommonArgs {
    /// Discretization: bjt, afw (Mindlin) or hhj (Kirchhoff)
    #[arg(long)]
    pub scheme: Scheme,
    /// Polynomial degree (1 to 3).
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
    /// Mesh resolutions, comma separated.
    #[arg(long = "n", value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Time step as a fraction of the mesh size.
    #[arg(long, default_value_t = 0.1)]
    pub dt_factor: f64,
    /// Final time.
    #[arg(long, default_value_t = 1.0)]
    pub tf: f64,
    /// Young modulus.
    #[arg(long = "E")]
    pub young: Option<f64>,
    /// Poisson ratio.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Density.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Plate thickness.
    #[arg(long)]
    pub thickness: Option<f64>,
    /// Shear correction factor.
    #[arg(long)]
    pub kshear: Option<f64>,
    /// Diagonal pattern of triangular meshes.
    #[arg(long, value_enum, default_value_t = DiagonalArg::Right)]
    pub diagonal: DiagonalArg,
    /// Switch off the manufactured force and torque.
    #[arg(long)]
    pub unforced: bool,
    /// Output directory; nothing is written without it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output formats, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [OutputFormat::Csv, OutputFormat::Json, OutputFormat::Svg])]
    pub format: Vec<OutputFormat>,
}

impl CommonArgs {
    pub fn params(&self) -> MaterialParams {
        let mut p = self.scheme.default_params();
        p.young = self.young.unwrap_or(p.young);
        p.poisson = self.nu.unwrap_or(p.poisson);
        p.density = self.rho.unwrap_or(p.density);
        p.thickness = self.thickness.unwrap_or(p.thickness);
        p.shear_correction = self.kshear.unwrap_or(p.shear_correction);
        p
    }

    pub fn config(&self) -> StudyConfig {
        StudyConfig {
            scheme: self.scheme,
            degree: self.degree,
            params: self.params(),
            dt_factor: self.dt_factor,
            final_time: self.tf,
            diagonal: self.diagonal.into(),
            forced: !self.unforced,
        }
    }

    fn wants(&self, format: OutputFormat) -> bool {
        self.format.contains(&format)
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit status.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Verify(args) => cmd_verify(args, out),
        Command::Run(args) => cmd_run(args, out),
        Command::Converge(args) => cmd_convergence(args, out),
    }
}

fn prepare_out_dir(args: &CommonArgs) -> Result<Option<&Path>> {
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Ok(Some(dir.as_path()))
        }
        None => Ok(None),
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Structural facts about one assembled system.
#[derive(Clone, Debug, serde::Serialize)]
pub struct StructureSummary {
    pub n: usize,
    pub mass_symmetry: f64,
    pub structure_skewness: f64,
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
    pub multiplier_dofs: usize,
    pub dofs: Vec<(String, usize)>,
    pub holds: bool,
}

pub fn structure_summary(system: &PhSystem, n: usize) -> Result<StructureSummary> {
    let report = system.structure_report();
    let inertia = system.mass_inertia()?;
    let multiplier_dofs = system.free_count(FieldKind::Multiplier);
    let definite_ok = if system.scheme() == Scheme::Afw {
        inertia.negative == multiplier_dofs && inertia.zero == 0
    } else {
        inertia.negative == 0 && inertia.zero == 0
    };
    Ok(StructureSummary {
        n,
        mass_symmetry: report.mass_symmetry,
        structure_skewness: report.structure_skewness,
        positive: inertia.positive,
        negative: inertia.negative,
        zero: inertia.zero,
        multiplier_dofs,
        dofs: system
            .fields()
            .iter()
            .map(|b| (b.kind.label().to_string(), system.free_count(b.kind)))
            .collect(),
        holds: report.holds() && definite_ok,
    })
}

pub fn cmd_verify(args: &CommonArgs, out: &mut dyn Write) -> Result<i32> {
    let config = args.config();
    let dir = prepare_out_dir(args)?;
    let mut summaries = Vec::new();
    for &n in &args.n {
        let system = match build_system(&config, n) {
            Err(Error::Structure(msg)) => {
                writeln!(out, "{} n={n} k={}: structure violated: {msg}", args.scheme, args.degree)?;
                return Ok(EXIT_INVARIANT);
            }
            other => other?,
        };
        let s = structure_summary(&system, n)?;
        let definiteness = if s.negative == 0 && s.zero == 0 {
            "symmetric positive definite".to_string()
        } else {
            format!(
                "symmetric indefinite (negative inertia {} , multiplier dofs {})",
                s.negative, s.multiplier_dofs
            )
            .replace(" ,", ",")
        };
        writeln!(
            out,
            "{} n={n} k={}: M: {definiteness}, symmetry defect {:.1e}; J: skew (residual {:.1e} < 1e-12)",
            args.scheme, args.degree, s.mass_symmetry, s.structure_skewness
        )?;
        let dofs: Vec<String> = s.dofs.iter().map(|(f, d)| format!("{f}={d}")).collect();
        writeln!(out, "  dofs: {}", dofs.join(" "))?;
        if !s.holds {
            writeln!(out, "  invariant violated")?;
        }
        summaries.push(s);
    }
    if let Some(dir) = dir {
        if args.wants(OutputFormat::Json) {
            write_json(
                &dir.join("verify.json"),
                &json!({ "scheme": args.scheme, "degree": args.degree, "levels": summaries }),
            )?;
        }
    }
    Ok(if summaries.iter().all(|s| s.holds) { 0 } else { EXIT_INVARIANT })
}

pub fn cmd_run(args: &CommonArgs, out: &mut dyn Write) -> Result<i32> {
    let config = args.config();
    let dir = prepare_out_dir(args)?;
    for &n in &args.n {
        let run = run_manufactured(&config, n)?;
        writeln!(
            out,
            "{} n={n} k={}: {} steps of {:.3e}, power residual {:.1e}, energy drift {:.1e}",
            args.scheme, args.degree, run.steps, run.dt, run.relative_power_residual, run.relative_energy_drift
        )?;
        for e in &run.errors {
            writeln!(out, "  {:<8} {} error {:.6e}", e.field.label(), e.norm, e.error)?;
        }
        if let Some(dir) = dir {
            if args.wants(OutputFormat::Csv) {
                let mut buf = Vec::new();
                run.trajectory.write_energy_csv(&mut buf)?;
                fs::write(dir.join(format!("energy_n{n}.csv")), buf)?;
            }
            if args.wants(OutputFormat::Json) {
                write_json(
                    &dir.join(format!("errors_n{n}.json")),
                    &json!({
                        "config": config,
                        "conventions": RunConventions::new(config.dt_factor),
                        "run": run,
                    }),
                )?;
            }
        }
    }
    Ok(0)
}

pub fn cmd_convergence(args: &CommonArgs, out: &mut dyn Write) -> Result<i32> {
    let config = args.config();
    let dir = prepare_out_dir(args)?;
    let study = convergence_study(&config, &args.n)?;
    for f in &study.fields {
        let rates: Vec<String> = f
            .rates
            .iter()
            .flat_map(|r| r.successive.iter())
            .map(|r| format!("{r:.3}"))
            .collect();
        writeln!(
            out,
            "{:<8} {} rates [{}] fitted {} finest-three {}",
            f.field.label(),
            f.norm,
            rates.join(", "),
            f.rates.as_ref().map_or("-".into(), |r| format!("{:.3}", r.fitted)),
            f.fine_slope.map_or("-".into(), |s| format!("{s:.3}")),
        )?;
    }
    let checks = rate_checks(&study);
    for c in checks.iter().filter(|c| !c.passed) {
        writeln!(
            out,
            "rate check failed: {} slope {} below {:.2}",
            c.field.label(),
            c.slope.map_or("-".into(), |s| format!("{s:.3}")),
            c.threshold
        )?;
    }
    if let Some(dir) = dir {
        if args.wants(OutputFormat::Csv) {
            fs::write(dir.join("convergence.csv"), convergence_csv(&study))?;
        }
        if args.wants(OutputFormat::Json) {
            write_json(&dir.join("convergence.json"), &convergence_json(&study))?;
        }
        if args.wants(OutputFormat::Svg) {
            for f in &study.fields {
                let title = format!("{} ({}), {} k={}", f.field.label(), f.norm, args.scheme, args.degree);
                fs::write(
                    dir.join(format!("convergence_{}.svg", f.field.label())),
                    convergence_svg(f, args.degree, &title),
                )?;
            }
        }
    }
    Ok(if checks.iter().all(|c| c.passed) { 0 } else { EXIT_RATE })
}
