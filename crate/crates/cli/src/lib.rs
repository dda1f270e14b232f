//! Command-line front end for `twisted-tori`.
//!
//! Exit codes: 0 success, 1 invalid input (parse, regularity, domain,
//! orientation), 2 numerical failure or a failing `verify` battery.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use twisted_tori::curve::{self, beta_grid, CurveSpec};
use twisted_tori::geometry::GeometryFrame;
use twisted_tori::ode;
use twisted_tori::reduction::{self, DoublePointOptions};
use twisted_tori::stationarity::{self, LogRhoCosineFamily, ScanOptions, StationarityOptions};
use twisted_tori::verify::{self, BatteryOptions};
use twisted_tori::Error;

pub const DEFAULT_SAMPLES: usize = 2048;

#[derive(Debug, Parser)]
#[command(name = "twisted-tori", version, about = "Geometry of twisted Lagrangian tori in C^2")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Grid size along the curve; a power of two, at least 64.
    #[arg(long, global = true, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Override a tolerance, e.g. `--tol stationarity=1e-9`. Repeatable.
    #[arg(long = "tol", global = true, value_name = "NAME=VAL", value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Geometry frames, stationarity report and curve data for a curve spec.
    Analyze { input: PathBuf },
    /// Stationarity report and defect trace.
    Stationarity { input: PathBuf },
    /// Defect landscape over a curve family.
    Scan { input: PathBuf },
    /// Profile ODE, period bookkeeping and closure gap.
    Ode {
        /// Optional JSON file `{"c": .., "k": ..}`; flags take precedence.
        input: Option<PathBuf>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        k: Option<i64>,
        /// Number of uniform samples over one period.
        #[arg(long, default_value_t = 1024)]
        steps: usize,
    },
    /// Reduced curve, level-set residual and pullback residuals.
    Reduce { input: PathBuf },
    /// Double points of the torus.
    Intersections { input: PathBuf },
    /// Full invariant battery.
    Verify,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (name, val) = s.split_once('=').ok_or_else(|| format!("expected NAME=VAL, got `{s}`"))?;
    let v: f64 = val.trim().parse().map_err(|e| format!("bad value in `{s}`: {e}"))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(format!("tolerance must be positive and finite, got `{s}`"));
    }
    Ok((name.trim().to_string(), v))
}

/// Recognised `--tol` names.
pub const TOLERANCE_NAMES: [&str; 6] = ["stationarity", "product", "symmetry", "newton", "merge", "touch"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub output_dir: PathBuf,
    pub n_samples: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub seed: u64,
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        Self {
            command: cli.command,
            output_dir: cli.out,
            n_samples: cli.samples,
            tolerances: cli.tol.into_iter().collect(),
            seed: cli.seed,
        }
    }
}

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_)
            | Error::RegularityViolation { .. }
            | Error::DomainError(_)
            | Error::OrientationError { .. }
            | Error::InvalidSpec(_) => Failure::Invalid(e.to_string()),
            Error::IntegrationFailure(_)
            | Error::BudgetExhausted { .. }
            | Error::CrossCheckMismatch { .. }
            | Error::Io(_) => Failure::Numerical(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

impl RunConfig {
    fn validate(&self) -> Outcome {
        if self.n_samples < 64 || !self.n_samples.is_power_of_two() {
            return Err(Failure::Invalid(format!(
                "--samples must be a power of two and at least 64, got {}",
                self.n_samples
            )));
        }
        if let Some(name) = self.tolerances.keys().find(|k| !TOLERANCE_NAMES.contains(&k.as_str())) {
            return Err(Failure::Invalid(format!(
                "unknown tolerance `{name}`; expected one of {}",
                TOLERANCE_NAMES.join(", ")
            )));
        }
        Ok(())
    }

    fn tol(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    fn stationarity_options(&self) -> StationarityOptions {
        let d = StationarityOptions::default();
        StationarityOptions {
            n_samples: self.n_samples,
            tolerance: self.tol("stationarity", d.tolerance),
            product_tolerance: self.tol("product", d.product_tolerance),
        }
    }

    fn double_point_options(&self) -> DoublePointOptions {
        let d = DoublePointOptions::default();
        DoublePointOptions {
            symmetry_tol: self.tol("symmetry", d.symmetry_tol),
            newton_tol: self.tol("newton", d.newton_tol),
            merge_tol: self.tol("merge", d.merge_tol),
            touch_tol: self.tol("touch", d.touch_tol),
            ..d
        }
    }
}

/// Parses `args` (including the program name) and runs. Help and version
/// requests exit 0; malformed arguments exit 1.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&RunConfig::from(cli)),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                1
            } else {
                0
            }
        }
    }
}

/// Executes one command and returns the process exit code.
pub fn run(config: &RunConfig) -> i32 {
    match execute(config) {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Invalid(m) => eprintln!("error: {m}"),
                Failure::Numerical(m) => eprintln!("numerical failure: {m}"),
            }
            f.exit_code()
        }
    }
}

fn execute(config: &RunConfig) -> Outcome {
    config.validate()?;
    match &config.command {
        Command::Analyze { input } => analyze(config, &read_curve(input)?),
        Command::Stationarity { input } => stationarity_cmd(config, &read_curve(input)?),
        Command::Scan { input } => scan(config, input),
        Command::Ode { input, c, k, steps } => ode_cmd(config, input.as_deref(), *c, *k, *steps),
        Command::Reduce { input } => reduce(config, &read_curve(input)?),
        Command::Intersections { input } => intersections(config, &read_curve(input)?),
        Command::Verify => verify_cmd(config),
    }
}

fn read_text(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn read_curve(path: &Path) -> std::result::Result<CurveSpec, Failure> {
    let spec = CurveSpec::from_json(&read_text(path)?)?;
    spec.check_regularity()?;
    Ok(spec)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Outcome {
    fs::create_dir_all(dir).map_err(Error::from)?;
    fs::write(dir.join(name), contents).map_err(Error::from)?;
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    write_file(dir, name, &text)
}

/// Formats with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Plot-ready CSV tables with fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, x) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{}", fmt_num(*x));
            }
            s.push('\n');
        }
        s
    }
}

/// Writes each table as `<name>` inside `output_dir`.
pub fn emit_plotdata(tables: &[Table], output_dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(output_dir)?;
    for t in tables {
        fs::write(output_dir.join(&t.name), t.to_csv())?;
    }
    Ok(())
}

fn frames_table(curve: &CurveSpec, n: usize) -> Result<Table, Error> {
    let mut t = Table::new(
        "frames.csv",
        &["beta", "alpha", "g_aa", "g_bb", "C", "norm_H", "rho_norm_H", "div_JH"],
    );
    for beta in beta_grid(n) {
        let fr = GeometryFrame::new(&curve::eval_jet(curve, beta)?, 0.0)?;
        t.rows.push(vec![
            beta,
            0.0,
            fr.metric.g_aa,
            fr.metric.g_bb,
            fr.c,
            fr.norm_h,
            fr.rho_norm_h,
            fr.div_jh,
        ]);
    }
    Ok(t)
}

fn defect_trace_table(curve: &CurveSpec, n: usize, c: f64) -> Result<Table, Error> {
    let mut t = Table::new("defect_trace.csv", &["beta", "s", "rho_norm_H"]);
    for p in stationarity::trace(curve, n, c)? {
        t.rows.push(vec![p.beta, p.s, p.rho_norm_h]);
    }
    Ok(t)
}

fn stationarity_report(config: &RunConfig, curve: &CurveSpec) -> std::result::Result<serde_json::Value, Failure> {
    let rep = stationarity::analyze(curve, &config.stationarity_options())?;
    let crit = stationarity::count_critical_points(curve);
    println!(
        "c = {}, defect = {:.3e}, verdict = {:?}",
        rep.c_estimate, rep.defect, rep.verdict
    );
    Ok(json!({
        "report": rep,
        "critical_points": crit,
        "winding_number": curve::winding_number(curve, config.n_samples)?,
        "orientation": curve::orientation_check(curve, config.n_samples)?,
        "grid": { "n_samples": config.n_samples, "beta_min": 0.0, "beta_max_exclusive": std::f64::consts::TAU },
    }))
}

fn analyze(config: &RunConfig, curve: &CurveSpec) -> Outcome {
    let mut report = stationarity_report(config, curve)?;
    report["u_star"] = json!(curve::u_star(curve)?);
    report["total_curvature"] = json!(curve::total_curvature(curve)?);
    let c = report["report"]["c_estimate"].as_f64().unwrap_or(f64::NAN);
    write_json(&config.output_dir, "report.json", &report)?;
    write_file(&config.output_dir, "curve.json", &format!("{}\n", curve.to_json()?))?;
    let tables = [
        frames_table(curve, config.n_samples)?,
        defect_trace_table(curve, config.n_samples, c)?,
    ];
    emit_plotdata(&tables, &config.output_dir)?;
    Ok(())
}

fn stationarity_cmd(config: &RunConfig, curve: &CurveSpec) -> Outcome {
    let report = stationarity_report(config, curve)?;
    let c = report["report"]["c_estimate"].as_f64().unwrap_or(f64::NAN);
    write_json(&config.output_dir, "report.json", &report)?;
    emit_plotdata(&[defect_trace_table(curve, config.n_samples, c)?], &config.output_dir)?;
    Ok(())
}

/// Scan input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub family: String,
    pub harmonics: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub min_rho_variance: Option<f64>,
}

fn default_grid() -> usize {
    ScanOptions::default().grid_per_dim
}

fn default_budget() -> usize {
    ScanOptions::default().budget
}

fn scan(config: &RunConfig, input: &Path) -> Outcome {
    let spec: FamilySpec = serde_json::from_str(&read_text(input)?).map_err(Error::from)?;
    if spec.family != "log_rho_cosine" {
        return Err(Failure::Invalid(format!(
            "unknown family `{}`; supported: log_rho_cosine",
            spec.family
        )));
    }
    if spec.lower.len() != spec.harmonics.len() || spec.upper.len() != spec.harmonics.len() {
        return Err(Failure::Invalid("lower/upper must have one entry per harmonic".into()));
    }
    let family = LogRhoCosineFamily {
        harmonics: spec.harmonics.clone(),
        lower: spec.lower.clone(),
        upper: spec.upper.clone(),
    };
    let opts = ScanOptions {
        grid_per_dim: spec.grid,
        budget: spec.budget,
        seed: config.seed,
        n_samples: config.n_samples,
        min_rho_variance: spec.min_rho_variance,
    };
    let res = stationarity::scan_family(&family, &opts)?;
    println!("argmin = {:?}, min defect = {:.3e}", res.argmin, res.min_defect);

    let mut cols: Vec<&str> = res.param_names.iter().map(String::as_str).collect();
    cols.extend(["defect", "c_estimate", "excluded"]);
    let mut t = Table::new("landscape.csv", &cols);
    for row in &res.rows {
        let mut r = row.params.clone();
        r.extend([row.defect, row.c_estimate, if row.excluded { 1.0 } else { 0.0 }]);
        t.rows.push(r);
    }
    emit_plotdata(&[t], &config.output_dir)?;
    write_json(
        &config.output_dir,
        "scan.json",
        &json!({
            "family": spec,
            "param_names": res.param_names,
            "argmin": res.argmin,
            "min_defect": res.min_defect,
            "polish_evals": res.polish_evals,
            "seed": config.seed,
            "n_samples": config.n_samples,
            "scope": "evidence covers only the scanned family; other tori in the same Hamiltonian isotopy class are not examined",
        }),
    )?;
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OdeInput {
    c: f64,
    #[serde(default)]
    k: i64,
}

fn ode_cmd(config: &RunConfig, input: Option<&Path>, c: Option<f64>, k: Option<i64>, steps: usize) -> Outcome {
    let file: Option<OdeInput> = match input {
        Some(p) => Some(serde_json::from_str(&read_text(p)?).map_err(Error::from)?),
        None => None,
    };
    let c = c
        .or(file.as_ref().map(|f| f.c))
        .ok_or_else(|| Failure::Invalid("ode needs --c or an input file".into()))?;
    let k = k.or(file.as_ref().map(|f| f.k)).unwrap_or(0);
    let profile = ode::integrate_profile_k(c, k, steps)?;
    let h = &profile.header;
    println!(
        "u1 = {}, u_star = {}, required_u_star = {}, closure_gap = {}",
        h.u1, h.u_star, h.required_u_star, h.closure_gap
    );
    write_json(
        &config.output_dir,
        "header.json",
        &json!({
            "c": h.c,
            "k": h.k,
            "r_min": h.r_min,
            "r_max": h.r_max,
            "u1": h.u1,
            "u_star": h.u_star,
            "required_u_star": h.required_u_star,
            "closure_gap": h.closure_gap,
            "K": profile.k_coeff,
            "I_star": profile.i_star,
            "r_underline": profile.r_underline,
            "numeric_u1": profile.numeric_u1,
            "numeric_period": profile.numeric_period,
            "angular_closure_defect": profile.angular_closure_defect,
            "max_constraint_residual": profile.max_constraint_residual,
            "max_unit_speed_residual": profile.max_unit_speed_residual,
            "n_steps": steps,
        }),
    )?;
    let mut t = Table::new("profile.csv", &["u", "R", "rho_candidate", "f"]);
    for s in &profile.samples {
        t.rows.push(vec![s.u, s.r, s.rho, s.f]);
    }
    emit_plotdata(&[t], &config.output_dir)?;
    Ok(())
}

fn reduce(config: &RunConfig, curve: &CurveSpec) -> Outcome {
    let reduced = reduction::reduced_curve(curve);
    let grid = (config.n_samples / 16).max(64);
    let level = reduction::level_set_check(curve, grid);
    let identity = reduction::reduction_identity_residual(curve, grid);
    let pull = reduction::verify_pullbacks(100, config.seed);
    println!(
        "reduced winding = {}, max |h∘F| = {:.3e}, max pullback residual = {:.3e}",
        reduced.k,
        level,
        pull.max_residual()
    );
    write_file(&config.output_dir, "reduced_curve.json", &format!("{}\n", reduced.to_json()?))?;
    write_json(&config.output_dir, "pullbacks.json", &pull)?;
    write_json(
        &config.output_dir,
        "reduce.json",
        &json!({
            "winding_number": curve::winding_number(curve, config.n_samples)?,
            "reduced_winding_number": curve::winding_number(&reduced, config.n_samples)?,
            "max_abs_h_on_torus": level,
            "max_l_minus_gamma_sq_half": identity,
            "grid": grid,
        }),
    )?;
    Ok(())
}

fn intersections(config: &RunConfig, curve: &CurveSpec) -> Outcome {
    let set = reduction::find_double_points_with(curve, &config.double_point_options())?;
    match &set {
        reduction::DoublePointSet::Points { points } => println!("{} double points", points.len()),
        reduction::DoublePointSet::CentrallySymmetric { beta_shift } => {
            println!("centrally symmetric (beta shift {beta_shift}); the torus is a 2:1 cover")
        }
    }
    write_json(&config.output_dir, "double_points.json", &set)?;
    Ok(())
}

fn verify_cmd(config: &RunConfig) -> Outcome {
    let opts = BatteryOptions {
        seed: config.seed,
        n_samples: config.n_samples,
    };
    let checks = verify::run_battery(&opts);
    for c in &checks {
        println!("{}", c.line());
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", checks.len(), failed);
    write_json(&config.output_dir, "verify.json", &checks)?;
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} invariant checks failed")));
    }
    Ok(())
}
