//! Command-line front end.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::bench::{
    forest_scene_id, gen_forest_scene, run_monte_carlo, run_sweep, write_report, BenchConfig,
    BenchError, ForestParams, ReportFormat, SweepSpec,
};
use crate::collision::{CheckError, CheckParams, Method, SafetyMode};
use crate::field::{
    edt, ingest_xyz, load_grid, save_grid, voxelize_with_budget, AnalyticField, AnyGrid,
    DistanceField, DistanceGrid, FieldError, LookupMode, OutOfBounds, Scene, DEFAULT_MAX_DISTANCE,
    DEFAULT_VOXEL_BUDGET,
};
use crate::geometry::{Aabb, Capsule, GeometryError, Point3};
use crate::kinematics::{ChainModel, KinematicsError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_FORMAT: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_COLLISION: i32 = 10;

/// Environment variable read when `--threads` is absent.
pub const THREADS_ENV: &str = "EDFCAP_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "edfcap",
    version,
    about = "Collision checks for slender links in distance fields"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rasterize a JSON scene into an occupancy grid.
    Voxelize {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        res: f64,
        #[arg(long)]
        out: PathBuf,
        /// Maximum number of voxels.
        #[arg(long, default_value_t = DEFAULT_VOXEL_BUDGET)]
        budget: u64,
    },
    /// Distance transform of an occupancy grid.
    Edf {
        /// Occupancy grid file.
        #[arg(long, conflicts_with = "scene")]
        occ: Option<PathBuf>,
        /// Scene to voxelize first (needs --res).
        #[arg(long, requires = "res")]
        scene: Option<PathBuf>,
        #[arg(long)]
        res: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_DISTANCE)]
        max_distance: f64,
    },
    /// Voxelize an ASCII `x y z` point cloud.
    Cloud2occ {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        res: f64,
        #[arg(long)]
        out: PathBuf,
        /// Grid bounds as x1,y1,z1,x2,y2,z2; defaults to the padded cloud extent.
        #[arg(long)]
        bounds: Option<String>,
    },
    /// Check one capsule. Prints "free" (exit 0) or "collision" (exit 10).
    Check {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Capsule as x1,y1,z1,x2,y2,z2,r.
        #[arg(long, allow_hyphen_values = true)]
        capsule: String,
        /// bi | uni | fixed[:sep] | oracle[:step]
        #[arg(long, default_value = "bi")]
        method: String,
        /// Sphere separation for `--method fixed`.
        #[arg(long)]
        sep: Option<f64>,
        /// Sampling step for `--method oracle`.
        #[arg(long)]
        step: Option<f64>,
        /// Print query statistics to stderr.
        #[arg(long)]
        verbose: bool,
    },
    /// Monte-Carlo benchmark over random crane configurations.
    Bench {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Parameter sweep over the telescopic link.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        variable: SweepVariable,
        /// Comma-separated, strictly increasing values.
        #[arg(long)]
        values: String,
    },
    /// Describe a grid, scene or chain model file.
    Info { file: PathBuf },
    /// Generate a synthetic forest scene.
    Forest {
        #[arg(long, default_value_t = ForestParams::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = ForestParams::default().extent)]
        extent: f64,
        #[arg(long, default_value_t = ForestParams::default().n_trunks)]
        trunks: usize,
        #[arg(long, default_value_t = ForestParams::default().clutter)]
        clutter: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVariable {
    Length,
    Radius,
    Safety,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SafetyKind {
    Radius,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OobArg {
    Free,
    Occupied,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Distance (or occupancy) grid file.
    #[arg(long, conflicts_with = "scene", required_unless_present = "scene")]
    pub field: Option<PathBuf>,
    /// JSON scene; voxelized at --res unless --analytic.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long)]
    pub res: Option<f64>,
    /// Use the exact analytic distance of the scene.
    #[arg(long, requires = "scene")]
    pub analytic: bool,
    /// Lookup value outside the grid.
    #[arg(long, value_enum, default_value = "free")]
    pub oob: OobArg,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Safety distance d_s (m).
    #[arg(long, default_value_t = 0.0)]
    pub safety: f64,
    #[arg(long, value_enum, default_value = "radius")]
    pub safety_mode: SafetyKind,
    /// conservative | raw
    #[arg(long, default_value = "conservative")]
    pub lookup: LookupMode,
    /// Collision margin added to the effective radius (m).
    #[arg(long, default_value_t = 0.0)]
    pub margin: f64,
    #[arg(long, default_value_t = CheckParams::default().max_queries)]
    pub max_queries: u64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Chain model JSON; defaults to the built-in crane7.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Comma-separated methods.
    #[arg(long, default_value = "bi,uni,fixed:0.1,fixed:0.3,fixed:0.5")]
    pub methods: String,
    /// Report file; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Worker threads (0 = all cores). Overrides EDFCAP_THREADS.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Stop checking a configuration at its first colliding link.
    #[arg(long)]
    pub short_circuit: bool,
}

/// Error with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        let code = match e {
            FieldError::Io(_) => EXIT_IO,
            FieldError::Format { .. }
            | FieldError::Parse { .. }
            | FieldError::Json(_)
            | FieldError::InvalidScene(_)
            | FieldError::EmptyInput(_) => EXIT_FORMAT,
            FieldError::Resource { .. }
            | FieldError::InvalidArgument(_)
            | FieldError::Geometry(_) => EXIT_NUMERIC,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<KinematicsError> for CliError {
    fn from(e: KinematicsError) -> Self {
        let code = match e {
            KinematicsError::Io(_) => EXIT_IO,
            KinematicsError::Json(_) | KinematicsError::InvalidModel(_) => EXIT_FORMAT,
            _ => EXIT_NUMERIC,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<CheckError> for CliError {
    fn from(e: CheckError) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: e.to_string(),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: e.to_string(),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        let code = match e {
            BenchError::Io(_) | BenchError::Csv(_) => EXIT_IO,
            BenchError::Json(_) => EXIT_FORMAT,
            BenchError::Kinematics { .. } | BenchError::Check { .. } => EXIT_NUMERIC,
            BenchError::Invalid(_) | BenchError::Geometry(_) => EXIT_NUMERIC,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

/// Parse comma-separated decimals, requiring exactly `n` when given.
fn parse_floats(flag: &str, text: &str, n: Option<usize>) -> Result<Vec<f64>, CliError> {
    let values = text
        .split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::usage(format!("--{flag}: '{t}' is not a finite number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(n) = n {
        if values.len() != n {
            return Err(CliError::usage(format!(
                "--{flag}: expected {n} comma-separated values, got {}",
                values.len()
            )));
        }
    }
    Ok(values)
}

fn parse_capsule(text: &str) -> Result<Capsule, CliError> {
    let v = parse_floats("capsule", text, Some(7))?;
    Capsule::from_endpoints(
        Point3::new(v[0], v[1], v[2]),
        Point3::new(v[3], v[4], v[5]),
        v[6],
    )
    .map_err(|e| CliError::usage(format!("--capsule: {e}")))
}

fn parse_method(text: &str, sep: Option<f64>, step: Option<f64>) -> Result<Method, CliError> {
    let text = match (text, sep, step) {
        ("fixed", Some(s), _) => format!("fixed:{s}"),
        ("oracle", _, Some(s)) => format!("oracle:{s}"),
        ("fixed", None, _) => {
            return Err(CliError::usage("--method fixed needs --sep or fixed:<sep>"))
        }
        ("oracle", _, None) => {
            return Err(CliError::usage(
                "--method oracle needs --step or oracle:<step>",
            ))
        }
        (t, _, _) => t.to_string(),
    };
    text.parse::<Method>()
        .map_err(|e| CliError::usage(e.to_string()))
}

fn parse_methods(text: &str) -> Result<Vec<Method>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<Method>()
                .map_err(|e| CliError::usage(e.to_string()))
        })
        .collect()
}

fn resolve_params(p: &ParamArgs) -> Result<CheckParams, CliError> {
    let safety = match p.safety_mode {
        SafetyKind::Radius => SafetyMode::AddToRadius(p.safety),
        SafetyKind::Distance => SafetyMode::SubtractFromDistance(p.safety),
    };
    let params = CheckParams {
        lookup_mode: p.lookup,
        safety,
        collision_margin: p.margin,
        max_queries: p.max_queries,
        ..CheckParams::default()
    };
    params
        .validate()
        .map_err(|e| CliError::usage(e.to_string()))?;
    Ok(params)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

struct LoadedField {
    field: Box<dyn DistanceField + Sync>,
    scene_id: String,
    description: String,
}

fn distance_grid_from(grid: AnyGrid) -> DistanceGrid {
    match grid {
        AnyGrid::Distance(d) => d,
        AnyGrid::Occupancy(o) => edt(&o, DEFAULT_MAX_DISTANCE),
    }
}

fn load_field(args: &FieldArgs) -> Result<LoadedField, CliError> {
    let oob = match args.oob {
        OobArg::Free => OutOfBounds::TreatFree,
        OobArg::Occupied => OutOfBounds::TreatOccupied,
    };
    if let Some(path) = &args.field {
        let grid = distance_grid_from(load_grid(path)?).with_out_of_bounds(oob);
        return Ok(LoadedField {
            field: Box::new(grid),
            scene_id: stem(path),
            description: format!("grid:{}", path.display()),
        });
    }
    let path = args
        .scene
        .as_ref()
        .expect("clap enforces --field or --scene");
    let scene = Scene::load(path)?;
    if args.analytic {
        return Ok(LoadedField {
            field: Box::new(AnalyticField::new(scene)),
            scene_id: stem(path),
            description: format!("analytic:{}", path.display()),
        });
    }
    let res = args
        .res
        .ok_or_else(|| CliError::usage("--scene needs --res (or --analytic)"))?;
    let occ = voxelize_with_budget(&scene, res, DEFAULT_VOXEL_BUDGET)?;
    let grid = edt(&occ, DEFAULT_MAX_DISTANCE).with_out_of_bounds(oob);
    Ok(LoadedField {
        field: Box::new(grid),
        scene_id: format!("{}@{res}", stem(path)),
        description: format!("voxel:{}@{res}", path.display()),
    })
}

fn threads(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("{THREADS_ENV}: '{v}' is not a thread count"))),
        Err(_) => Ok(0),
    }
}

/// Run a parsed command. Returns the exit code on success.
pub fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Voxelize {
            scene,
            res,
            out,
            budget,
        } => {
            let occ = voxelize_with_budget(&Scene::load(&scene)?, res, budget)?;
            save_grid(&out, &AnyGrid::Occupancy(occ))?;
        }
        Command::Edf {
            occ,
            scene,
            res,
            out,
            max_distance,
        } => {
            if !(max_distance.is_finite() && max_distance > 0.0) {
                return Err(CliError::usage("--max-distance must be positive"));
            }
            let grid = match (occ, scene) {
                (Some(path), _) => match load_grid(path)? {
                    AnyGrid::Occupancy(o) => o,
                    AnyGrid::Distance(_) => {
                        return Err(CliError {
                            code: EXIT_FORMAT,
                            message: "--occ: file holds a distance grid, not occupancy".into(),
                        })
                    }
                },
                (None, Some(path)) => {
                    let res = res.expect("clap enforces --res with --scene");
                    voxelize_with_budget(&Scene::load(path)?, res, DEFAULT_VOXEL_BUDGET)?
                }
                (None, None) => return Err(CliError::usage("edf needs --occ or --scene")),
            };
            save_grid(&out, &AnyGrid::Distance(edt(&grid, max_distance)))?;
        }
        Command::Cloud2occ {
            cloud,
            res,
            out,
            bounds,
        } => {
            let bounds = bounds
                .map(|b| -> Result<Aabb, CliError> {
                    let v = parse_floats("bounds", &b, Some(6))?;
                    Aabb::new(Point3::new(v[0], v[1], v[2]), Point3::new(v[3], v[4], v[5]))
                        .map_err(|e| CliError::usage(format!("--bounds: {e}")))
                })
                .transpose()?;
            let occ = ingest_xyz(&cloud, res, bounds)?;
            save_grid(&out, &AnyGrid::Occupancy(occ))?;
        }
        Command::Check {
            field,
            params,
            capsule,
            method,
            sep,
            step,
            verbose,
        } => {
            let capsule = parse_capsule(&capsule)?;
            let method = parse_method(&method, sep, step)?;
            let params = resolve_params(&params)?;
            let loaded = load_field(&field)?;
            let report = method.check(&capsule, loaded.field.as_ref(), &params)?;
            if verbose {
                eprintln!(
                    "method={method} queries={} effective_radius={} field={}",
                    report.queries, report.effective_radius, loaded.description
                );
            }
            println!("{}", report.verdict);
            return Ok(if report.verdict.is_collision() {
                EXIT_COLLISION
            } else {
                EXIT_OK
            });
        }
        Command::Bench { run } => run_bench(&run, None)?,
        Command::Sweep {
            run,
            variable,
            values,
        } => {
            let v = parse_floats("values", &values, None)?;
            let spec = match variable {
                SweepVariable::Length => SweepSpec::LinkLength(v),
                SweepVariable::Radius => SweepSpec::LinkRadius(v),
                SweepVariable::Safety => SweepSpec::SafetyMode(v),
            };
            spec.validate()
                .map_err(|e| CliError::usage(e.to_string()))?;
            run_bench(&run, Some(spec))?;
        }
        Command::Info { file } => info(&file)?,
        Command::Forest {
            seed,
            extent,
            trunks,
            clutter,
            out,
        } => {
            let p = ForestParams {
                seed,
                extent,
                n_trunks: trunks,
                clutter,
                ..ForestParams::default()
            };
            let scene = gen_forest_scene(&p).map_err(|e| CliError::usage(e.to_string()))?;
            scene.save(&out)?;
            eprintln!(
                "{}: {} primitives",
                forest_scene_id(&p),
                scene.primitives.len()
            );
        }
    }
    Ok(EXIT_OK)
}

fn run_bench(run: &RunArgs, sweep: Option<SweepSpec>) -> Result<(), CliError> {
    let methods = parse_methods(&run.methods)?;
    let params = resolve_params(&run.params)?;
    let threads = threads(run.threads)?;
    let (model, model_id) = match &run.model {
        Some(p) => (ChainModel::load(p)?, p.display().to_string()),
        None => (ChainModel::crane7(), "builtin:crane7".to_string()),
    };
    if run.samples == 0 {
        return Err(CliError::usage("--samples must be at least 1"));
    }
    let loaded = load_field(&run.field)?;

    let mut config = BenchConfig::new(run.samples, run.seed);
    config.params = params;
    config.short_circuit = run.short_circuit;

    let mut echo = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        echo.insert(k.to_string(), v);
    };
    put(
        "command",
        if sweep.is_some() { "sweep" } else { "bench" }.into(),
    );
    put("field", loaded.description.clone());
    put("oob", format!("{:?}", run.field.oob).to_lowercase());
    put("model", model_id);
    put("samples", run.samples.to_string());
    put("seed", run.seed.to_string());
    put(
        "methods",
        methods
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    put("lookup", params.lookup_mode.to_string());
    put("safety", params.safety.to_string());
    put("margin", params.collision_margin.to_string());
    put("max_queries", params.max_queries.to_string());
    put("short_circuit", run.short_circuit.to_string());
    if let Some(spec) = &sweep {
        put("sweep", spec.variable().to_string());
        put(
            "values",
            spec.values()
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    echo.insert("threads".into(), pool.current_num_threads().to_string());
    let field = loaded.field.as_ref();
    let reports = pool.install(|| match &sweep {
        None => {
            run_monte_carlo(&model, field, &methods, &config, &loaded.scene_id).map(|r| vec![r])
        }
        Some(spec) => run_sweep(spec, &model, field, &methods, &config, &loaded.scene_id),
    })?;

    let format = match run.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Json => ReportFormat::Json,
    };
    match &run.out {
        Some(path) => write_report(&reports, &echo, path, format)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            match format {
                ReportFormat::Csv => crate::bench::write_csv(&mut stdout, &reports, &echo)?,
                ReportFormat::Json => crate::bench::write_json(&mut stdout, &reports, &echo)?,
            }
        }
    }
    Ok(())
}

fn info(path: &Path) -> Result<(), CliError> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(&crate::field::GRID_MAGIC) {
        let grid = crate::field::read_grid(bytes.as_slice())?;
        let h = grid.header();
        println!("kind: {:?}", grid.kind());
        println!("dims: {} x {} x {}", h.dims[0], h.dims[1], h.dims[2]);
        println!("resolution: {}", h.resolution);
        println!("origin: {}, {}, {}", h.origin.x, h.origin.y, h.origin.z);
        match &grid {
            AnyGrid::Occupancy(o) => println!("occupied: {}", o.occupied_count()),
            AnyGrid::Distance(d) => {
                println!("max_distance: {}", d.max_distance);
                let zeros = d.values.iter().filter(|&&v| v == 0.0).count();
                println!("zero_voxels: {zeros}");
            }
        }
        return Ok(());
    }
    let text = String::from_utf8(bytes).map_err(|_| CliError {
        code: EXIT_FORMAT,
        message: format!("{}: not a grid, scene or model file", path.display()),
    })?;
    if let Ok(model) = ChainModel::from_json(&text) {
        println!("model: {}", model.name);
        println!("joints: {}", model.dof());
        for (i, j) in model.joints.iter().enumerate() {
            println!(
                "  q{} {} {:?} limits [{}, {}]",
                i + 1,
                j.name,
                j.kind,
                j.limits[0],
                j.limits[1]
            );
        }
        for l in &model.collision_links {
            println!(
                "  link {} frames {}..{} radius {}",
                l.name, l.start_frame, l.end_frame, l.radius
            );
        }
        return Ok(());
    }
    let scene = Scene::from_json(&text)?;
    let (lo, hi) = (scene.bounds.min, scene.bounds.max);
    println!("scene primitives: {}", scene.primitives.len());
    println!(
        "bounds: {}, {}, {} .. {}, {}, {}",
        lo.x, lo.y, lo.z, hi.x, hi.y, hi.z
    );
    Ok(())
}

fn subcommand_help(args: &[OsString]) -> Option<String> {
    let mut cmd = Cli::command();
    let name = args.iter().skip(1).find_map(|a| {
        let a = a.to_str()?;
        cmd.get_subcommands()
            .any(|s| s.get_name() == a)
            .then(|| a.to_string())
    })?;
    Some(cmd.find_subcommand_mut(&name)?.render_help().to_string())
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn main_with_args(args: Vec<OsString>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    EXIT_OK
                }
                kind => {
                    let _ = e.print();
                    if kind == ErrorKind::UnknownArgument {
                        if let Some(help) = subcommand_help(&args) {
                            eprintln!("\n{help}");
                        }
                    }
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capsule_flag() {
        let c = parse_capsule("0,0,0,4,0,0,0.3").unwrap();
        assert_eq!(c.length(), 4.0);
        assert_eq!(c.radius(), 0.3);
        assert!(parse_capsule("0,0,0,4,0,0").is_err());
        assert!(parse_capsule("0,0,0,0,0,0,0.3").is_err());
        assert!(parse_capsule("0,0,0,4,0,x,0.3").is_err());
    }

    #[test]
    fn method_flag() {
        assert_eq!(parse_method("bi", None, None).unwrap(), Method::Bi);
        assert_eq!(
            parse_method("fixed", Some(0.3), None).unwrap(),
            Method::Fixed(0.3)
        );
        assert_eq!(
            parse_method("fixed:0.2", None, None).unwrap(),
            Method::Fixed(0.2)
        );
        assert_eq!(
            parse_method("oracle", None, Some(0.01)).unwrap(),
            Method::Oracle(0.01)
        );
        assert!(parse_method("fixed", None, None).is_err());
        assert!(parse_method("fixed:-1", None, None).is_err());
        assert_eq!(
            parse_methods("bi, uni,fixed:0.5").unwrap(),
            vec![Method::Bi, Method::Uni, Method::Fixed(0.5)]
        );
    }

    #[test]
    fn safety_flags() {
        let p = ParamArgs {
            safety: 0.1,
            safety_mode: SafetyKind::Distance,
            lookup: LookupMode::Raw,
            margin: 0.0,
            max_queries: 100,
        };
        let r = resolve_params(&p).unwrap();
        assert_eq!(r.safety, SafetyMode::SubtractFromDistance(0.1));
        assert_eq!(r.lookup_mode, LookupMode::Raw);
        let bad = ParamArgs { safety: -1.0, ..p };
        assert!(resolve_params(&bad).is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
