//! `monopole-lab`: command-line front end for the laboratory.
//!
//! Every subcommand reads one `RunConfig`, assembled in three layers:
//! built-in defaults, then an optional `key=value` file (`--config`), then
//! the command-line flags. Artifacts land in the output directory as CSV
//! and JSON files whose bytes depend only on the configuration, never on
//! thread scheduling.
//!
//! Exit codes: 0 on success, 2 for configuration or validation problems,
//! 3 when a solve finishes but fails its cross-check (or does not finish).

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use monopole_core::dynamics::{
    cone_residual, integrate, max_conserved_drift, max_speed_squared_drift, max_turn_angle,
    planar_arc_length, quadratic_fit_r2, unroll_cone, DynamicsError,
};
use monopole_core::geometry::{dirac_condition, monopole_mass_estimate};
use monopole_core::semiclassics::{
    almost_spectrum, bohr_sommerfeld_levels, enumerate_quantized_tori, SemiclassicsError,
    WellProblem,
};
use monopole_core::serialize::{levels_to_csv, levels_to_json, trajectory_to_csv, unrolled_to_csv};
use monopole_core::spectral::{
    compare_spectra, exact_spectrum, numeric_spectrum, tamm_spectrum, SpectralError,
    SpectrumLevel, DEFAULT_CLUSTER_TOL,
};

#[derive(Parser)]
#[command(
    name = "monopole-lab",
    version,
    about = "Spectra, orbits, and torus quantization for a magnetic charge on the sphere"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the grid spectrum and compare it with the closed form
    Spectrum(Overrides),
    /// Quantize invariant tori and cross-check the level formula
    Semiclassical(Overrides),
    /// Leading-order levels of the harmonic well, with self-check
    Wkb(Overrides),
    /// Integrate the canonical orbit and develop its cone
    Dynamics(Overrides),
    /// Summary of the closed-form routes and coupling constants
    Report(Overrides),
}

/// Command-line layer of the configuration. Each flag shadows the config
/// key named after its field.
#[derive(Args, Clone, Default)]
struct Overrides {
    /// key=value configuration file applied before the flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// magnetic charge n (config key `n`)
    #[arg(long, allow_negative_numbers = true)]
    n: Option<i64>,
    /// inverse semiclassical step N = 1/ħ (config key `N`)
    #[arg(long = "N")]
    n_inv: Option<u32>,
    /// energy cutoff for assembled spectra (config key `e_max`)
    #[arg(long)]
    e_max: Option<f64>,
    /// number of colatitude grid points (config key `grid_size`)
    #[arg(long = "grid")]
    grid_size: Option<usize>,
    /// orbit coupling λ (config key `lambda`)
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// integrator time step (config key `step`)
    #[arg(long)]
    step: Option<f64>,
    /// integration span (config key `duration`)
    #[arg(long)]
    duration: Option<f64>,
    /// highest level index for closed-form routes (config key `j_max`)
    #[arg(long)]
    j_max: Option<u32>,
    /// output directory (config key `output_path`)
    #[arg(long = "out", value_name = "DIR")]
    output_path: Option<PathBuf>,
    /// level-table format, csv or json (config key `format`)
    #[arg(long)]
    format: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Format {
    Csv,
    Json,
}

struct RunConfig {
    n: i64,
    /// Whether `n` came from the user rather than the default.
    n_explicit: bool,
    n_inv: u32,
    e_max: f64,
    grid_size: usize,
    lambda: f64,
    step: f64,
    duration: f64,
    j_max: u32,
    output_path: PathBuf,
    format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: -1,
            n_explicit: false,
            n_inv: 1,
            e_max: 9.0,
            grid_size: 1000,
            lambda: 1.0,
            step: 1e-3,
            duration: 10.0,
            j_max: 5,
            output_path: PathBuf::from("."),
            format: Format::Csv,
        }
    }
}

enum CliError {
    /// Bad configuration or arguments: exit code 2.
    Validation(String),
    /// A computation ran but failed, or failed its cross-check: exit code 3.
    Solver(String),
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::GridTooCoarse { .. } | SpectralError::CountOutOfRange { .. } => {
                CliError::Validation(e.to_string())
            }
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<SemiclassicsError> for CliError {
    fn from(e: SemiclassicsError) -> Self {
        match e {
            SemiclassicsError::ChargeMismatch { .. } => CliError::Validation(e.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::BadTimeGrid { .. } => CliError::Validation(e.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("i/o: {e}"))
    }
}

fn parse_format(raw: &str) -> Result<Format, CliError> {
    match raw {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        other => Err(CliError::Validation(format!(
            "format must be \"csv\" or \"json\", got {other:?}"
        ))),
    }
}

fn parse_value<T>(key: &str, value: &str) -> Result<T, CliError>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| {
        CliError::Validation(format!("config key `{key}`: cannot parse {value:?}: {e}"))
    })
}

/// Apply a `key=value` file. Blank lines and `#` comments are skipped;
/// any key outside the configuration schema is an error.
fn apply_config_file(cfg: &mut RunConfig, path: &PathBuf) -> Result<(), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("config file {}: {e}", path.display())))?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Validation(format!(
                "config line {}: expected key=value, got {line:?}",
                lineno + 1
            ))
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "n" => {
                cfg.n = parse_value(key, value)?;
                cfg.n_explicit = true;
            }
            "N" => cfg.n_inv = parse_value(key, value)?,
            "e_max" => cfg.e_max = parse_value(key, value)?,
            "grid_size" => cfg.grid_size = parse_value(key, value)?,
            "lambda" => cfg.lambda = parse_value(key, value)?,
            "step" => cfg.step = parse_value(key, value)?,
            "duration" => cfg.duration = parse_value(key, value)?,
            "j_max" => cfg.j_max = parse_value(key, value)?,
            "output_path" => cfg.output_path = PathBuf::from(value),
            "format" => cfg.format = parse_format(value)?,
            unknown => {
                return Err(CliError::Validation(format!(
                    "unknown configuration key `{unknown}`"
                )))
            }
        }
    }
    Ok(())
}

fn apply_overrides(cfg: &mut RunConfig, o: &Overrides) -> Result<(), CliError> {
    if let Some(n) = o.n {
        cfg.n = n;
        cfg.n_explicit = true;
    }
    if let Some(v) = o.n_inv {
        cfg.n_inv = v;
    }
    if let Some(v) = o.e_max {
        cfg.e_max = v;
    }
    if let Some(v) = o.grid_size {
        cfg.grid_size = v;
    }
    if let Some(v) = o.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = o.step {
        cfg.step = v;
    }
    if let Some(v) = o.duration {
        cfg.duration = v;
    }
    if let Some(v) = o.j_max {
        cfg.j_max = v;
    }
    if let Some(v) = &o.output_path {
        cfg.output_path = v.clone();
    }
    if let Some(v) = &o.format {
        cfg.format = parse_format(v)?;
    }
    Ok(())
}

fn write_text(cfg: &RunConfig, name: &str, text: &str) -> Result<(), CliError> {
    fs::write(cfg.output_path.join(name), text)?;
    Ok(())
}

fn write_levels(cfg: &RunConfig, stem: &str, levels: &[SpectrumLevel]) -> Result<(), CliError> {
    match cfg.format {
        Format::Csv => write_text(cfg, &format!("{stem}.csv"), &levels_to_csv(levels)),
        Format::Json => {
            let mut text = levels_to_json(levels);
            text.push('\n');
            write_text(cfg, &format!("{stem}.json"), &text)
        }
    }
}

fn pretty(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("plain json values render");
    text.push('\n');
    text
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<(), CliError> {
    let numeric = numeric_spectrum(cfg.n, cfg.e_max, cfg.grid_size, DEFAULT_CLUSTER_TOL)?;
    if numeric.is_empty() {
        return Err(CliError::Solver(format!(
            "no levels found below the cutoff {}",
            cfg.e_max
        )));
    }
    let exact = exact_spectrum(cfg.n.unsigned_abs() as u32, cfg.j_max);
    write_levels(cfg, "spectrum_numeric", &numeric)?;
    write_levels(cfg, "spectrum_exact", &exact)?;

    let compared = numeric.len().min(exact.len());
    let report = compare_spectra(&numeric, &exact, compared)?;
    let mut within = report.all_multiplicities_match;
    for row in &report.rows {
        within &= if row.value_b == 0.0 {
            row.abs_err < 1e-6
        } else {
            row.abs_err / row.value_b.abs() < 1e-3
        };
    }
    let doc = serde_json::json!({
        "charge": cfg.n,
        "e_max": cfg.e_max,
        "grid_size": cfg.grid_size,
        "levels_compared": compared,
        "comparison": report,
        "within_tolerance": within,
    });
    write_text(cfg, "spectrum_compare.json", &pretty(&doc))?;
    if within {
        Ok(())
    } else {
        Err(CliError::Solver(format!(
            "grid spectrum disagrees with the closed form beyond tolerance; see {}",
            cfg.output_path.join("spectrum_compare.json").display()
        )))
    }
}

fn cmd_semiclassical(cfg: &RunConfig) -> Result<(), CliError> {
    // The torus route needs charge 0 or ±N; default to the canonical −N when
    // the user leaves the charge unset.
    let charge = if cfg.n_explicit {
        cfg.n
    } else {
        -i64::from(cfg.n_inv)
    };

    if cfg.n_inv == 0 {
        // ħ → ∞ has no torus lattice; publish the formula route alone.
        let formula = almost_spectrum(charge.unsigned_abs() as u32, cfg.j_max);
        write_levels(cfg, "semiclassical_levels", &formula)?;
        let doc = serde_json::json!({
            "n_inv": 0,
            "charge": charge,
            "torus_levels": [],
            "formula_levels": formula,
            "checked": false,
        });
        write_text(cfg, "quantized_tori.json", &pretty(&doc))?;
        return Ok(());
    }

    let formula = almost_spectrum(cfg.n_inv, cfg.j_max);
    let cutoff = formula.last().expect("j_max spans at least one level").value + 0.5;
    let tori = enumerate_quantized_tori(cfg.n_inv, charge, cutoff)?;
    write_levels(cfg, "semiclassical_levels", &formula)?;

    let mut max_abs_err = 0.0f64;
    let mut agrees = tori.len() == formula.len();
    if agrees {
        for (a, b) in tori.iter().zip(formula.iter()) {
            max_abs_err = max_abs_err.max((a.energy - b.value).abs());
            agrees &= a.multiplicity == b.multiplicity;
        }
        agrees &= max_abs_err < 1e-6;
    }
    let doc = serde_json::json!({
        "n_inv": cfg.n_inv,
        "charge": charge,
        "cutoff": cutoff,
        "torus_levels": tori,
        "formula_levels": formula,
        "max_abs_err": max_abs_err,
        "checked": true,
        "agrees": agrees,
    });
    write_text(cfg, "quantized_tori.json", &pretty(&doc))?;
    if agrees {
        Ok(())
    } else {
        Err(CliError::Solver(format!(
            "torus enumeration disagrees with the level formula; see {}",
            cfg.output_path.join("quantized_tori.json").display()
        )))
    }
}

fn cmd_wkb(cfg: &RunConfig) -> Result<(), CliError> {
    let mut out = String::from("q,hbar,energy,exact,abs_err\n");
    let mut worst = 0.0f64;
    for hbar in [1.0, 0.2] {
        let well = WellProblem::new(|x: f64| 0.5 * x * x, 1.0, hbar, (-40.0, 40.0));
        let levels = bohr_sommerfeld_levels(&well, cfg.j_max as usize)?;
        for (q, &e) in levels.iter().enumerate() {
            let exact = hbar * (q as f64 + 0.5);
            let err = (e - exact).abs();
            worst = worst.max(err);
            writeln!(out, "{q},{hbar},{e},{exact},{err}").expect("string writes succeed");
        }
    }
    write_text(cfg, "wkb_levels.csv", &out)?;
    if worst < 1e-9 {
        Ok(())
    } else {
        Err(CliError::Solver(format!(
            "harmonic self-check failed: worst error {worst:.3e}"
        )))
    }
}

fn cmd_dynamics(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.lambda == 0.0 {
        return Err(CliError::Validation(
            "coupling 0 develops no cone; pass a nonzero --lambda".into(),
        ));
    }
    let traj = integrate(
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        cfg.lambda,
        cfg.step,
        cfg.duration,
    )?;
    let cone = unroll_cone(&traj)?;
    write_text(cfg, "trajectory.csv", &trajectory_to_csv(&traj))?;
    write_text(cfg, "unrolled_cone.csv", &unrolled_to_csv(&cone))?;

    let (c, b, a, rms) = quadratic_fit_r2(&traj);
    let doc = serde_json::json!({
        "lambda": cfg.lambda,
        "step": cfg.step,
        "duration": cfg.duration,
        "states": traj.states.len(),
        "speed_squared_drift": max_speed_squared_drift(&traj),
        "conserved_vector_drift": max_conserved_drift(&traj),
        "cone_residual": cone_residual(&traj),
        "quadratic_fit": { "c": c, "b": b, "a": a, "rms": rms },
        "half_angle": cone.half_angle,
        "opening_factor": cone.opening_factor,
        "max_turn_angle": max_turn_angle(&cone),
        "arc_length": planar_arc_length(&cone),
    });
    write_text(cfg, "dynamics_invariants.json", &pretty(&doc))
}

fn cmd_report(cfg: &RunConfig) -> Result<(), CliError> {
    let mut exact_vs_almost = Vec::new();
    for n_abs in 0u32..=3 {
        let exact = exact_spectrum(n_abs, 5);
        let almost = almost_spectrum(n_abs, 5);
        let rows: Vec<_> = exact
            .iter()
            .zip(almost.iter())
            .map(|(e, a)| {
                serde_json::json!({
                    "exact": e.value,
                    "almost": a.value,
                    "offset": a.value - e.value,
                    "multiplicity": e.multiplicity,
                })
            })
            .collect();
        exact_vs_almost.push(serde_json::json!({ "n_abs": n_abs, "levels": rows }));
    }
    let dirac_samples: Vec<_> = [(1.0, 0.5), (1.0, 1.0), (2.0, 0.25), (1.0, 0.4)]
        .iter()
        .map(|&(e, g)| {
            let (n, residual) = dirac_condition(e, g);
            serde_json::json!({ "e": e, "g": g, "n": n, "residual": residual })
        })
        .collect();
    let alpha = 1.0 / 137.0;
    let doc = serde_json::json!({
        "unit_charge_series": tamm_spectrum(5),
        "exact_vs_almost": exact_vs_almost,
        "dirac_samples": dirac_samples,
        "alpha": alpha,
        "mass_ratio": monopole_mass_estimate(alpha),
        "g_over_e": 0.5 / alpha,
    });
    write_text(cfg, "report.json", &pretty(&doc))
}

fn configure_threads() -> Result<(), CliError> {
    match std::env::var("MONOPOLE_LAB_THREADS") {
        Ok(raw) => {
            let threads: usize = raw.trim().parse().map_err(|_| {
                CliError::Validation(format!(
                    "MONOPOLE_LAB_THREADS must be a positive integer, got {raw:?}"
                ))
            })?;
            if threads == 0 {
                return Err(CliError::Validation(
                    "MONOPOLE_LAB_THREADS must be a positive integer, got 0".into(),
                ));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| CliError::Validation(format!("thread pool: {e}")))
        }
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(e) => Err(CliError::Validation(format!("MONOPOLE_LAB_THREADS: {e}"))),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let (overrides, runner): (&Overrides, fn(&RunConfig) -> Result<(), CliError>) =
        match &cli.command {
            Command::Spectrum(o) => (o, cmd_spectrum),
            Command::Semiclassical(o) => (o, cmd_semiclassical),
            Command::Wkb(o) => (o, cmd_wkb),
            Command::Dynamics(o) => (o, cmd_dynamics),
            Command::Report(o) => (o, cmd_report),
        };
    let mut cfg = RunConfig::default();
    if let Some(path) = &overrides.config {
        apply_config_file(&mut cfg, path)?;
    }
    apply_overrides(&mut cfg, overrides)?;
    fs::create_dir_all(&cfg.output_path)?;
    runner(&cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
