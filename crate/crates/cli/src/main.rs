//! `fermi-hj`: command-line workbench for classical mechanics of fermionic
//! systems. Subcommands cover derivation, integration, the generating-function
//! pipeline, and the canonical-transformation checks; every run emits a
//! deterministic JSON or human-readable text report.

use clap::{Args, Parser, Subcommand, ValueEnum};
use fermi_hj_core::grid::TimeGrid;
use fermi_hj_core::hj::{
    assemble_hj_system, generate_even_ansatz, reduce, reduce_hpf, verify_candidate,
    InteractingClosedForm,
};
use fermi_hj_core::mechanics::{euler_lagrange, legendre, DeriveConvention, ElSign};
use fermi_hj_core::model::parse_model;
use fermi_hj_core::report::{
    derive_report, hj_assemble_report, hj_reduce_report, hj_verify_report, integrate_report,
    xform_check_report, ConfigEcho,
};
use fermi_hj_core::scalar::ScalarEnv;
use fermi_hj_core::xform::{
    build_canonical_data, check_finite_canonical, check_matrix_form, check_wave_relation,
    IdentityResidual,
};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::path::PathBuf;

const DEFAULT_GRID: (f64, f64, usize) = (0.0, 10.0, 2001);
const DEFAULT_TOL_GRID: f64 = 1e-9;
const DEFAULT_TOL_EXACT: f64 = 1e-12;

#[derive(Parser)]
#[command(
    name = "fermi-hj",
    version,
    about = "Workbench for classical mechanics of fermionic systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive momenta, constraints, the Hamiltonian, and equations of motion
    Derive(StageArgs),
    /// Integrate the equations of motion with fixed-step RK4
    Integrate(StageArgs),
    /// Generating-function pipeline
    #[command(subcommand)]
    Hj(HjCommand),
    /// Canonical-transformation checks
    #[command(subcommand)]
    Xform(XformCommand),
}

#[derive(Subcommand)]
enum HjCommand {
    /// Assemble the constraint, constant, and evolution equations
    Assemble(StageArgs),
    /// Solve the constraints and match the evolution equation
    Reduce(StageArgs),
    /// Check a closed-form coefficient family on a grid
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum XformCommand {
    /// Check the finite-transformation, wave, and matrix-form identities
    Check(StageArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Left,
    Right,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

#[derive(Args)]
struct StageArgs {
    /// Model file (.fhj)
    model: PathBuf,
    /// Parameter binding NAME=VALUE; VALUE may be complex, e.g. 2, -0.5, 1+2i, -i
    #[arg(short = 'p', long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Evaluation grid T0,T1,N (default 0,10,2001)
    #[arg(long, value_name = "T0,T1,N", allow_hyphen_values = true)]
    grid: Option<String>,
    /// Odd-derivative convention
    #[arg(long, value_enum, default_value = "left")]
    convention: ConventionArg,
    /// Euler-Lagrange sign branch: "-" (default) or "+"
    #[arg(
        long = "el-sign",
        value_name = "SIGN",
        default_value = "-",
        allow_hyphen_values = true
    )]
    el_sign: String,
    /// Report format
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Write the report to a file instead of stdout
    #[arg(short = 'o', long = "output", value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    stage: StageArgs,
    /// Closed-form coefficient family to check ("default")
    #[arg(long = "closed-form", value_name = "FAMILY")]
    closed_form: Option<String>,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let usage_ok =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if usage_ok { 0 } else { 1 };
        }
    };
    match run(cli) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

/// Execute the selected stage; `Ok(passed)` reflects the report's checks.
fn run(cli: Cli) -> Result<bool, String> {
    let (stage, closed_form) = match &cli.command {
        Command::Derive(s) | Command::Integrate(s) => (s, None),
        Command::Hj(HjCommand::Assemble(s)) | Command::Hj(HjCommand::Reduce(s)) => (s, None),
        Command::Hj(HjCommand::Verify(v)) => (&v.stage, Some(v.closed_form.as_deref())),
        Command::Xform(XformCommand::Check(s)) => (s, None),
    };
    let convention = match stage.convention {
        ConventionArg::Left => DeriveConvention::Left,
        ConventionArg::Right => DeriveConvention::Right,
    };
    let el_sign = parse_el_sign(&stage.el_sign)?;
    let params = parse_params(&stage.params)?;
    let grid = parse_grid(stage.grid.as_deref())?;
    let (tol_grid, tol_exact) = tolerances()?;
    let source = std::fs::read_to_string(&stage.model)
        .map_err(|e| format!("cannot read `{}`: {e}", stage.model.display()))?;
    let spec = parse_model(&source).map_err(|d| format!("{d}"))?;
    let uses_grid = matches!(
        cli.command,
        Command::Integrate(_) | Command::Hj(HjCommand::Verify(_)) | Command::Xform(_)
    );
    let echo = ConfigEcho {
        model: spec.name.clone(),
        path: stage.model.display().to_string(),
        params: params.clone(),
        grid: if uses_grid { Some(grid) } else { None },
        convention,
        el_sign,
        tol_grid,
        tol_exact,
    };
    let mut env = ScalarEnv::new();
    for (name, value) in &params {
        env = env.with_param(name, *value);
    }

    let report = match &cli.command {
        Command::Derive(_) => {
            let canon = legendre(&spec, convention).map_err(stringify)?;
            let els = euler_lagrange(&spec, convention, el_sign).map_err(stringify)?;
            derive_report(echo, &canon, &els)
        }
        Command::Integrate(_) => {
            let els = euler_lagrange(&spec, convention, el_sign).map_err(stringify)?;
            let system =
                fermi_hj_core::dynamics::extract_component_odes(&spec, &els).map_err(stringify)?;
            let (basis, initial) = system.default_initial().map_err(stringify)?;
            let traj = fermi_hj_core::dynamics::integrate(&system, &basis, &initial, grid, &env)
                .map_err(stringify)?;
            let residuals =
                fermi_hj_core::dynamics::residual_check(&system, &els, &traj, &env)
                    .map_err(stringify)?;
            let named: Vec<(String, f64)> = els
                .iter()
                .zip(&residuals)
                .map(|(e, r)| (e.variable.clone(), *r))
                .collect();
            integrate_report(echo, &traj, &named)
        }
        Command::Hj(HjCommand::Assemble(_)) => {
            let canon = legendre(&spec, convention).map_err(stringify)?;
            let ansatz = generate_even_ansatz(&spec).map_err(stringify)?;
            let system = assemble_hj_system(&spec, &canon, ansatz, convention, el_sign)
                .map_err(stringify)?;
            hj_assemble_report(echo, &system)
        }
        Command::Hj(HjCommand::Reduce(_)) => {
            let reduced = reduce(&spec, convention, el_sign, true).map_err(stringify)?;
            let hpf = reduce_hpf(&reduced).map_err(stringify)?;
            hj_reduce_report(echo, &reduced, &hpf)
        }
        Command::Hj(HjCommand::Verify(_)) => {
            let family = closed_form.flatten().ok_or_else(|| {
                "hj verify needs a coefficient family: pass --closed-form default".to_string()
            })?;
            let cf = closed_form_family(family, &params, el_sign)?;
            let reduced = reduce(&spec, convention, el_sign, true).map_err(stringify)?;
            let mut family_env = cf.env();
            for (name, value) in &params {
                family_env = family_env.with_param(name, *value);
            }
            let outcome =
                verify_candidate(&spec, &reduced, &family_env, grid).map_err(stringify)?;
            hj_verify_report(echo, &outcome)
        }
        Command::Xform(XformCommand::Check(_)) => {
            let cf = closed_form_family("default", &params, el_sign)?.gauge();
            let sample_times =
                [grid.t0, 0.5 * (grid.t0 + grid.t1), grid.t1];
            let mut finite: BTreeMap<String, f64> = BTreeMap::new();
            let mut wave: BTreeMap<String, f64> = BTreeMap::new();
            for &t in &sample_times {
                let data = build_canonical_data(&spec, &cf, t).map_err(stringify)?;
                for r in check_finite_canonical(&data).map_err(stringify)? {
                    let worst = finite.entry(r.name).or_insert(0.0);
                    *worst = worst.max(r.residual);
                }
                for r in check_wave_relation(&data).map_err(stringify)? {
                    let worst = wave.entry(r.name).or_insert(0.0);
                    *worst = worst.max(r.residual);
                }
            }
            let collect = |m: BTreeMap<String, f64>| -> Vec<IdentityResidual> {
                m.into_iter()
                    .map(|(name, residual)| IdentityResidual { name, residual })
                    .collect()
            };
            let matrix = check_matrix_form(&spec, &cf, grid).map_err(stringify)?;
            xform_check_report(echo, &collect(finite), &collect(wave), &matrix)
        }
    };

    let bytes = match stage.format {
        FormatArg::Json => report.to_json_bytes(),
        FormatArg::Text => report.to_text().into_bytes(),
    };
    match &stage.output {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| format!("cannot write `{}`: {e}", path.display()))?,
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| format!("cannot write report: {e}"))?;
        }
    }
    Ok(report.passed())
}

fn stringify(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn parse_el_sign(s: &str) -> Result<ElSign, String> {
    match s {
        "-" | "minus" => Ok(ElSign::Minus),
        "+" | "plus" => Ok(ElSign::Plus),
        other => Err(format!("invalid --el-sign `{other}` (expected `+` or `-`)")),
    }
}

fn tolerances() -> Result<(f64, f64), String> {
    let tol_grid = match std::env::var("FERMI_HJ_TOL") {
        Ok(v) => {
            let t: f64 = v
                .trim()
                .parse()
                .map_err(|_| format!("invalid FERMI_HJ_TOL `{v}`"))?;
            if !(t > 0.0) {
                return Err(format!("FERMI_HJ_TOL must be positive, got `{v}`"));
            }
            t
        }
        Err(_) => DEFAULT_TOL_GRID,
    };
    Ok((tol_grid, DEFAULT_TOL_EXACT))
}

fn parse_grid(arg: Option<&str>) -> Result<TimeGrid, String> {
    let (t0, t1, n) = match arg {
        None => DEFAULT_GRID,
        Some(s) => {
            let parts: Vec<&str> = s.split(',').collect();
            if parts.len() != 3 {
                return Err(format!("invalid --grid `{s}` (expected T0,T1,N)"));
            }
            let t0: f64 =
                parts[0].trim().parse().map_err(|_| format!("invalid grid start `{}`", parts[0]))?;
            let t1: f64 =
                parts[1].trim().parse().map_err(|_| format!("invalid grid end `{}`", parts[1]))?;
            let n: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| format!("invalid grid point count `{}`", parts[2]))?;
            (t0, t1, n)
        }
    };
    TimeGrid::new(t0, t1, n).map_err(stringify)
}

fn parse_params(args: &[String]) -> Result<BTreeMap<String, Complex64>, String> {
    let mut out = BTreeMap::new();
    for arg in args {
        let (name, value) = arg
            .split_once('=')
            .ok_or_else(|| format!("invalid -p `{arg}` (expected NAME=VALUE)"))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(format!("invalid -p `{arg}`: empty name"));
        }
        let parsed = parse_complex(value.trim())
            .ok_or_else(|| format!("invalid value `{value}` for parameter `{name}`"))?;
        out.insert(name.to_string(), parsed);
    }
    Ok(out)
}

/// Parse a complex literal: `2`, `-0.5`, `3i`, `-i`, `1+2i`, `2.5-0.5i`.
fn parse_complex(s: &str) -> Option<Complex64> {
    if s.is_empty() {
        return None;
    }
    if let Ok(re) = s.parse::<f64>() {
        return Some(Complex64::new(re, 0.0));
    }
    if let Some(im) = parse_imaginary(s) {
        return Some(Complex64::new(0.0, im));
    }
    // split at the sign that separates real and imaginary parts: the last
    // '+'/'-' that is not leading and not part of an exponent
    let bytes = s.as_bytes();
    for i in (1..bytes.len()).rev() {
        let c = bytes[i] as char;
        if (c == '+' || c == '-') && !matches!(bytes[i - 1] as char, 'e' | 'E') {
            let re: f64 = s[..i].parse().ok()?;
            let im = parse_imaginary(&s[i..])?;
            return Some(Complex64::new(re, im));
        }
    }
    None
}

fn parse_imaginary(s: &str) -> Option<f64> {
    let body = s.strip_suffix(['i', 'j'])?;
    match body {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        other => other.parse().ok(),
    }
}

fn closed_form_family(
    name: &str,
    params: &BTreeMap<String, Complex64>,
    el_sign: ElSign,
) -> Result<InteractingClosedForm, String> {
    if name != "default" {
        return Err(format!("unknown closed-form family `{name}` (available: default)"));
    }
    let k = match params.get("k") {
        Some(v) => {
            if v.im.abs() > 0.0 {
                return Err("closed-form family needs a real coupling k".to_string());
            }
            v.re
        }
        None => 1.0,
    };
    Ok(InteractingClosedForm::with_branch(k, el_sign))
}
