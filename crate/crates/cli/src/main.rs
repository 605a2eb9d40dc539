//! Command-line surface for the `foliate` library.
//!
//! Exit codes: 0 on success, 1 when a requested check fails (or a
//! simulation blows up), 2 on usage or configuration errors. Every
//! subcommand prints its resolved settings (including the seed) before
//! running and one summary line afterwards, and writes its files under
//! `--out` (default `./out/<subcommand>-<unix-seconds>`).

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use foliate::foliation::{
    check_atlas, check_chart_roundtrip, check_foliated_transition, check_invariance,
    defect_chart_pair, orbit_foliation, polar_atlas, poly_ratios_quantity, poly_tail_quantity,
    radius_quantity, sinusoid_profile_quantity, sinusoid_shape_quantity, ActedSpace, CheckReport,
    FoliationError, InvariantQuantity,
};
use foliate::groups::{
    orbit_grid, solve_relating, GroupError, GroupFamily, RelateOutcome,
};
use foliate::harness::{
    emit_report, run_equivariance_suite, run_transfer_experiment, ConfigError, EquivSuiteConfig,
    ExperimentConfig, HarnessError, ReportFormat, TransferReport,
};
use foliate::pendulum::{
    estimate_period, simulate, PendulumError, PendulumParams, STANDARD_GRAVITY,
};
use foliate::taskspace::{TaskError, TaskFamily, TaskPoint};

#[derive(Parser)]
#[command(
    name = "foliate",
    version,
    term_width = 100,
    about = "Transformation groups on task spaces, orbit foliations, and leaf-constrained transfer"
)]
struct Cli {
    /// Seed for randomized operations; results are byte-identical given it
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default ./out/<subcommand>-<unix-seconds>)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads where supported; never changes output bytes
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply a grid of group elements to one task and write the orbit
    Orbit(OrbitArgs),
    /// Decide whether two tasks are related by a group element
    Relate(RelateArgs),
    /// Check chart round-trips and transition structure of an atlas
    CheckFoliation(CheckFoliationArgs),
    /// Check that a quantity is constant under a group action
    CheckInvariance(CheckInvarianceArgs),
    /// Sweep learner equivariance over random tasks and elements
    CheckEquivariance(CheckEquivarianceArgs),
    /// Run the transfer-benefit experiment and write reports
    Transfer(TransferArgs),
    /// Integrate pendulum dynamics and write the trajectory
    PendulumSim(PendulumSimArgs),
    /// Re-emit an existing transfer report in another format
    Report(ReportArgs),
}

#[derive(Args)]
struct OrbitArgs {
    /// Task family: sinusoid or poly-<dim>
    #[arg(long, default_value = "sinusoid")]
    task: String,
    /// Task coordinates, comma-separated
    #[arg(long, allow_hyphen_values = true)]
    coords: String,
    /// Group family: translation, affine, or rotation-2d
    #[arg(long)]
    group: GroupFamily,
    /// Group element parameters, comma-separated; repeat for each element
    #[arg(long = "element", value_name = "PARAMS", required = true, allow_hyphen_values = true)]
    elements: Vec<String>,
}

#[derive(Args)]
struct RelateArgs {
    /// Task family: sinusoid or poly-<dim>
    #[arg(long, default_value = "sinusoid")]
    task: String,
    /// Group family to search in
    #[arg(long)]
    group: GroupFamily,
    /// Coordinates of the base task, comma-separated
    #[arg(long, allow_hyphen_values = true)]
    from: String,
    /// Coordinates of the candidate task, comma-separated
    #[arg(long, allow_hyphen_values = true)]
    to: String,
    /// Evaluation grid size on the task domain
    #[arg(long, default_value_t = 101)]
    grid_n: usize,
    /// Maximum pointwise residual for acceptance
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct CheckFoliationArgs {
    /// polar, defect-pair, sinusoid-translation, sinusoid-affine,
    /// poly-translation-<dim>, or poly-affine-<dim>
    #[arg(long)]
    atlas: String,
    /// Sample points per check
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Finite-difference step for the transition check
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    /// Largest acceptable violation
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct CheckInvarianceArgs {
    /// radius, sinusoid-shape, sinusoid-profile, poly-tail-<dim>, or
    /// poly-ratios-<dim>
    #[arg(long)]
    quantity: String,
    /// Group family acting on the quantity's space
    #[arg(long)]
    group: GroupFamily,
    /// Random (point, element) pairs to test
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Largest acceptable change of the quantity
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct CheckEquivarianceArgs {
    /// Random cases; each yields one closed-model and one open-model row
    #[arg(long, default_value_t = 50)]
    cases: usize,
    /// Training points per fit
    #[arg(long, default_value_t = 40)]
    n_points: usize,
    /// Label noise during fitting
    #[arg(long, default_value_t = 0.1)]
    noise_sigma: f64,
    /// Largest acceptable parameter gap for closed models
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct TransferArgs {
    /// Experiment configuration file (`key = value` lines, `#` comments)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. --set trials=10; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct PendulumSimArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    mass: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    length: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    damping: f64,
    #[arg(long, default_value_t = STANDARD_GRAVITY, allow_negative_numbers = true)]
    gravity: f64,
    /// Initial angle in radians
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    theta0: f64,
    /// Initial angular velocity in radians per second
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    omega0: f64,
    /// Integration step in seconds
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 10_000)]
    steps: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// Existing report.json to convert
    #[arg(long)]
    input: PathBuf,
    /// Target format: json, csv, or svg
    #[arg(long)]
    format: String,
}

enum CliError {
    Usage(String),
    Run(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Run(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<TaskError> for CliError {
    fn from(e: TaskError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<FoliationError> for CliError {
    fn from(e: FoliationError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<PendulumError> for CliError {
    fn from(e: PendulumError) -> Self {
        match e {
            PendulumError::NonFinite { .. } => CliError::Run(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(c) => CliError::Usage(c.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(format!("i/o failure: {e}"))
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let seed = cli.seed;
    let out = cli.out;
    let jobs = cli.jobs;
    match cli.command {
        Command::Orbit(args) => run_orbit(args, seed, out),
        Command::Relate(args) => run_relate(args, seed, out),
        Command::CheckFoliation(args) => run_check_foliation(args, seed, out),
        Command::CheckInvariance(args) => run_check_invariance(args, seed, out),
        Command::CheckEquivariance(args) => run_check_equivariance(args, seed, out),
        Command::Transfer(args) => run_transfer(args, seed, out, jobs),
        Command::PendulumSim(args) => run_pendulum_sim(args, seed, out),
        Command::Report(args) => run_report(args, seed, out),
    }
}

/// Round-trippable float text, shared with the library's CSV output.
fn float_text(v: f64) -> String {
    format!("{v:.16e}")
}

fn out_dir(sub: &str, out: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = out.unwrap_or_else(|| {
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        PathBuf::from("out").join(format!("{sub}-{stamp}"))
    });
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn print_settings(sub: &str, pairs: &[(&str, String)], dir: &Path) {
    println!("subcommand = {sub}");
    for (k, v) in pairs {
        println!("{k} = {v}");
    }
    println!("out = {}", dir.display());
}

fn parse_floats(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("`{t}` is not a number")))
        })
        .collect()
}

fn parse_task_family(s: &str) -> Result<TaskFamily, CliError> {
    if s == "sinusoid" {
        return Ok(TaskFamily::sinusoid());
    }
    if let Some(dim) = s.strip_prefix("poly-") {
        let dim: usize = dim
            .parse()
            .map_err(|_| CliError::Usage(format!("bad polynomial dimension in `{s}`")))?;
        if dim == 0 {
            return Err(CliError::Usage("polynomial dimension must be at least 1".into()));
        }
        return Ok(TaskFamily::poly_basis(dim));
    }
    Err(CliError::Usage(format!(
        "unknown task family `{s}` (expected sinusoid or poly-<dim>)"
    )))
}

fn task_point(family: &TaskFamily, coords_text: &str) -> Result<TaskPoint, CliError> {
    let coords = parse_floats(coords_text)?;
    Ok(TaskPoint::new(family.clone(), coords)?)
}

fn run_orbit(args: OrbitArgs, seed: Option<u64>, out: Option<PathBuf>) -> Result<i32, CliError> {
    let family = parse_task_family(&args.task)?;
    let f = task_point(&family, &args.coords)?;
    let param_grid: Vec<Vec<f64>> = args
        .elements
        .iter()
        .map(|e| parse_floats(e))
        .collect::<Result<_, _>>()?;
    let dir = out_dir("orbit", out)?;
    print_settings(
        "orbit",
        &[
            ("task", family.name().to_string()),
            ("coords", args.coords.clone()),
            ("group", args.group.to_string()),
            ("elements", param_grid.len().to_string()),
            ("seed", seed.unwrap_or(42).to_string()),
        ],
        &dir,
    );
    let orbit = orbit_grid(&f, args.group, &param_grid)?;
    let param_names: &[&str] = match args.group {
        GroupFamily::Translation => &["a"],
        GroupFamily::Affine => &["a", "b"],
        GroupFamily::Rotation2D => &["angle"],
    };
    let mut csv = String::new();
    let coord_names: Vec<String> = (0..family.coord_dim()).map(|i| format!("c{i}")).collect();
    csv.push_str(&param_names.join(","));
    csv.push(',');
    csv.push_str(&coord_names.join(","));
    csv.push('\n');
    for (params, point) in param_grid.iter().zip(&orbit) {
        let mut cells: Vec<String> = params.iter().map(|&v| float_text(v)).collect();
        cells.extend(point.coords().iter().map(|&v| float_text(v)));
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    let path = dir.join("orbit.csv");
    fs::write(&path, csv)?;
    println!(
        "orbit of {} elements written to {}",
        orbit.len(),
        path.display()
    );
    Ok(0)
}

fn run_relate(args: RelateArgs, seed: Option<u64>, out: Option<PathBuf>) -> Result<i32, CliError> {
    let family = parse_task_family(&args.task)?;
    let f = task_point(&family, &args.from)?;
    let g = task_point(&family, &args.to)?;
    let dir = out_dir("relate", out)?;
    print_settings(
        "relate",
        &[
            ("task", family.name().to_string()),
            ("group", args.group.to_string()),
            ("from", args.from.clone()),
            ("to", args.to.clone()),
            ("grid_n", args.grid_n.to_string()),
            ("tol", format!("{}", args.tol)),
            ("seed", seed.unwrap_or(42).to_string()),
        ],
        &dir,
    );
    let grid = family.domain().grid(args.grid_n);
    let outcome = solve_relating(&f, &g, args.group, &grid, args.tol)?;
    let (json, line, code) = match &outcome {
        RelateOutcome::Related(elem) => (
            serde_json::json!({
                "outcome": "related",
                "group": args.group.to_string(),
                "params": elem.params(),
            }),
            format!("related: {elem}"),
            0,
        ),
        RelateOutcome::NotRelated { residual } => (
            serde_json::json!({
                "outcome": "not-related",
                "group": args.group.to_string(),
                "residual": residual,
            }),
            format!("not related under {} (best residual {residual:.3e})", args.group),
            1,
        ),
        RelateOutcome::Degenerate => (
            serde_json::json!({
                "outcome": "degenerate",
                "group": args.group.to_string(),
            }),
            "degenerate: the base task does not determine a relating element".to_string(),
            1,
        ),
    };
    fs::write(
        dir.join("relate.json"),
        format!("{}\n", serde_json::to_string_pretty(&json).map_err(|e| CliError::Run(e.to_string()))?),
    )?;
    println!("{line}");
    Ok(code)
}

enum AtlasChoice {
    Atlas(foliate::foliation::Atlas),
    DefectPair,
}

fn parse_atlas(name: &str) -> Result<AtlasChoice, CliError> {
    let atlas = match name {
        "polar" => return Ok(AtlasChoice::Atlas(polar_atlas())),
        "defect-pair" => return Ok(AtlasChoice::DefectPair),
        "sinusoid-translation" => {
            orbit_foliation(GroupFamily::Translation, &TaskFamily::sinusoid())?
        }
        "sinusoid-affine" => orbit_foliation(GroupFamily::Affine, &TaskFamily::sinusoid())?,
        other => {
            let (group, dim_text) = if let Some(rest) = other.strip_prefix("poly-translation-") {
                (GroupFamily::Translation, rest)
            } else if let Some(rest) = other.strip_prefix("poly-affine-") {
                (GroupFamily::Affine, rest)
            } else {
                return Err(CliError::Usage(format!(
                    "unknown atlas `{other}` (polar, defect-pair, sinusoid-translation, \
                     sinusoid-affine, poly-translation-<dim>, poly-affine-<dim>)"
                )));
            };
            let dim: usize = dim_text
                .parse()
                .map_err(|_| CliError::Usage(format!("bad dimension in atlas `{other}`")))?;
            if dim == 0 {
                return Err(CliError::Usage("polynomial dimension must be at least 1".into()));
            }
            orbit_foliation(group, &TaskFamily::poly_basis(dim))?
        }
    };
    Ok(AtlasChoice::Atlas(atlas))
}

fn write_reports_json(dir: &Path, reports: &[CheckReport]) -> Result<PathBuf, CliError> {
    let path = dir.join("report.json");
    let body = serde_json::to_string_pretty(reports).map_err(|e| CliError::Run(e.to_string()))?;
    fs::write(&path, format!("{body}\n"))?;
    Ok(path)
}

fn run_check_foliation(
    args: CheckFoliationArgs,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<i32, CliError> {
    let seed = seed.unwrap_or(42);
    let choice = parse_atlas(&args.atlas)?;
    let dir = out_dir("check-foliation", out)?;
    print_settings(
        "check-foliation",
        &[
            ("atlas", args.atlas.clone()),
            ("samples", args.samples.to_string()),
            ("step", format!("{}", args.step)),
            ("tol", format!("{}", args.tol)),
            ("seed", seed.to_string()),
        ],
        &dir,
    );
    let reports = match choice {
        AtlasChoice::Atlas(atlas) => check_atlas(&atlas, args.samples, args.step, args.tol, seed)?,
        AtlasChoice::DefectPair => {
            let (base, skew) = defect_chart_pair();
            vec![
                check_chart_roundtrip(&base, args.samples, args.tol, seed),
                check_chart_roundtrip(&skew, args.samples, args.tol, seed.wrapping_add(1)),
                check_foliated_transition(
                    &base,
                    &skew,
                    args.samples,
                    args.step,
                    args.tol,
                    seed.wrapping_add(2),
                )?,
                check_foliated_transition(
                    &skew,
                    &base,
                    args.samples,
                    args.step,
                    args.tol,
                    seed.wrapping_add(3),
                )?,
            ]
        }
    };
    let path = write_reports_json(&dir, &reports)?;
    let failures = reports.iter().filter(|r| !r.pass).count();
    println!(
        "checks = {}, failures = {}, report {}",
        reports.len(),
        failures,
        path.display()
    );
    Ok(if failures == 0 { 0 } else { 1 })
}

fn parse_quantity(name: &str) -> Result<(InvariantQuantity, ActedSpace), CliError> {
    let pair = match name {
        "radius" => (radius_quantity(), ActedSpace::plane()),
        "sinusoid-shape" => (sinusoid_shape_quantity(), ActedSpace::tasks(TaskFamily::sinusoid())),
        "sinusoid-profile" => (
            sinusoid_profile_quantity(),
            ActedSpace::tasks(TaskFamily::sinusoid()),
        ),
        other => {
            let (make, rest): (fn(usize) -> InvariantQuantity, &str) =
                if let Some(rest) = other.strip_prefix("poly-tail-") {
                    (poly_tail_quantity, rest)
                } else if let Some(rest) = other.strip_prefix("poly-ratios-") {
                    (poly_ratios_quantity, rest)
                } else {
                    return Err(CliError::Usage(format!(
                        "unknown quantity `{other}` (radius, sinusoid-shape, sinusoid-profile, \
                         poly-tail-<dim>, poly-ratios-<dim>)"
                    )));
                };
            let dim: usize = rest
                .parse()
                .map_err(|_| CliError::Usage(format!("bad dimension in quantity `{other}`")))?;
            if dim < 2 {
                return Err(CliError::Usage(
                    "polynomial quantities need dimension at least 2".into(),
                ));
            }
            (make(dim), ActedSpace::tasks(TaskFamily::poly_basis(dim)))
        }
    };
    Ok(pair)
}

fn run_check_invariance(
    args: CheckInvarianceArgs,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<i32, CliError> {
    let seed = seed.unwrap_or(42);
    let (quantity, space) = parse_quantity(&args.quantity)?;
    let dir = out_dir("check-invariance", out)?;
    print_settings(
        "check-invariance",
        &[
            ("quantity", args.quantity.clone()),
            ("group", args.group.to_string()),
            ("samples", args.samples.to_string()),
            ("tol", format!("{}", args.tol)),
            ("seed", seed.to_string()),
        ],
        &dir,
    );
    let report = check_invariance(&quantity, args.group, &space, args.samples, args.tol, seed)?;
    let path = write_reports_json(&dir, std::slice::from_ref(&report))?;
    println!(
        "{}: {} (max violation {:.3e}), report {}",
        report.check,
        if report.pass { "pass" } else { "fail" },
        report.max_violation,
        path.display()
    );
    Ok(if report.pass { 0 } else { 1 })
}

fn run_check_equivariance(
    args: CheckEquivarianceArgs,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<i32, CliError> {
    let cfg = EquivSuiteConfig {
        cases: args.cases,
        n_points: args.n_points,
        noise_sigma: args.noise_sigma,
        tol: args.tol,
        seed: seed.unwrap_or(EquivSuiteConfig::default().seed),
    };
    let dir = out_dir("check-equivariance", out)?;
    print_settings(
        "check-equivariance",
        &[
            ("cases", cfg.cases.to_string()),
            ("n_points", cfg.n_points.to_string()),
            ("noise_sigma", format!("{}", cfg.noise_sigma)),
            ("tol", format!("{}", cfg.tol)),
            ("seed", cfg.seed.to_string()),
        ],
        &dir,
    );
    let report = run_equivariance_suite(&cfg)?;
    let path = dir.join("report.json");
    fs::write(&path, format!("{}\n", report.to_json()?))?;
    println!("{}, report {}", report.summary_line(), path.display());
    Ok(if report.pass { 0 } else { 1 })
}

fn run_transfer(
    args: TransferArgs,
    seed: Option<u64>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
) -> Result<i32, CliError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    for pair in &args.set {
        let (key, value) = pair.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("--set expects key=value, got `{pair}`"))
        })?;
        cfg.apply(key.trim(), value.trim())?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(j) = jobs {
        cfg.jobs = j;
    }
    cfg.validate()?;
    let dir = out_dir("transfer", out)?;
    println!("subcommand = transfer");
    println!("{}", cfg.resolved_text());
    println!("jobs = {}", cfg.jobs);
    println!("out = {}", dir.display());
    let report = run_transfer_experiment(&cfg)?;
    fs::write(dir.join("resolved-config.txt"), format!("{}\n", cfg.resolved_text()))?;
    emit_report(&report, ReportFormat::Json, &dir)?;
    emit_report(&report, ReportFormat::Csv, &dir)?;
    emit_report(&report, ReportFormat::Svg, &dir)?;
    println!("{}", report.summary_line());
    Ok(0)
}

fn run_pendulum_sim(
    args: PendulumSimArgs,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<i32, CliError> {
    let params = PendulumParams::new(args.mass, args.length, args.damping)?
        .with_gravity(args.gravity)?;
    let dir = out_dir("pendulum-sim", out)?;
    print_settings(
        "pendulum-sim",
        &[
            ("mass", format!("{}", args.mass)),
            ("length", format!("{}", args.length)),
            ("damping", format!("{}", args.damping)),
            ("gravity", format!("{}", args.gravity)),
            ("theta0", format!("{}", args.theta0)),
            ("omega0", format!("{}", args.omega0)),
            ("dt", format!("{}", args.dt)),
            ("steps", args.steps.to_string()),
            ("seed", seed.unwrap_or(42).to_string()),
        ],
        &dir,
    );
    let traj = simulate(&params, (args.theta0, args.omega0), args.dt, args.steps)?;
    let path = dir.join("trajectory.csv");
    let mut bytes = Vec::new();
    traj.write_csv(&mut bytes)?;
    fs::write(&path, bytes)?;
    let period = estimate_period(&traj)
        .map(|p| format!("{p:.6}"))
        .unwrap_or_else(|| "none".to_string());
    println!(
        "steps = {}, energy drift = {:.3e}, period = {period}, trajectory {}",
        args.steps,
        traj.max_energy_drift(),
        path.display()
    );
    Ok(0)
}

fn run_report(args: ReportArgs, seed: Option<u64>, out: Option<PathBuf>) -> Result<i32, CliError> {
    let format: ReportFormat = args
        .format
        .parse()
        .map_err(|e: String| CliError::Usage(e))?;
    let text = fs::read_to_string(&args.input)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.input.display())))?;
    let report = TransferReport::from_json(&text)
        .map_err(|e| CliError::Usage(format!("{} is not a transfer report: {e}", args.input.display())))?;
    let dir = out_dir("report", out)?;
    print_settings(
        "report",
        &[
            ("input", args.input.display().to_string()),
            ("format", args.format.clone()),
            ("seed", seed.unwrap_or(report.config.seed).to_string()),
        ],
        &dir,
    );
    let path = emit_report(&report, format, &dir)?;
    println!("written {}", path.display());
    Ok(0)
}
