//! Monte-Carlo benchmark harness and parameter sweeps.
//!
//! Every method sees the same configuration sequence (paired design). Sample
//! `i` is drawn from its own random stream, so results do not depend on the
//! number of worker threads.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{CheckError, CheckParams, Method, SafetyMode};
use crate::field::{DistanceField, FieldError, LookupMode, Scene};
use crate::geometry::{Aabb, Capsule, GeometryError, Point3, ScenePrimitive};
use crate::kinematics::{sample_configuration, ChainModel, Configuration, KinematicsError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("sample {index} at q = {q:?}: {source}")]
    Check {
        index: u64,
        q: Vec<f64>,
        #[source]
        source: CheckError,
    },
    #[error("sample {index} at q = {q:?}: {source}")]
    Kinematics {
        index: u64,
        q: Vec<f64>,
        #[source]
        source: KinematicsError,
    },
    #[error("invalid benchmark setup: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("report i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("report csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("report json: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<CheckError> for BenchError {
    fn from(e: CheckError) -> Self {
        BenchError::Invalid(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Synthetic forest scenes

/// Radius of the vertical cylinder around the origin kept free of trunks and
/// clutter (the crane base).
pub const CLEAR_RADIUS: f64 = 2.0;

/// Parameters of a synthetic forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub seed: u64,
    /// Side length of the square footprint centered on the origin (m).
    pub extent: f64,
    pub n_trunks: usize,
    /// Half-width range of the square trunk cross-section (m).
    pub trunk_radius: [f64; 2],
    pub trunk_height: [f64; 2],
    /// Fraction of trunks with a canopy sphere; also the number of loose
    /// clutter spheres relative to `n_trunks`.
    pub clutter: f64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            seed: 7,
            extent: 20.0,
            n_trunks: 25,
            trunk_radius: [0.1, 0.3],
            trunk_height: [4.0, 10.0],
            clutter: 0.3,
        }
    }
}

/// Height of the scene bounds above the ground.
pub const FOREST_CEILING: f64 = 12.0;
const GROUND_THICKNESS: f64 = 8.0;
const MAX_ATTEMPTS: usize = 1000;

fn range(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Ground slab, vertical box trunks, canopy spheres on trunk tops and loose
/// clutter spheres. Nothing but the ground enters the cylinder of radius
/// [`CLEAR_RADIUS`] around the z axis.
pub fn gen_forest_scene(p: &ForestParams) -> Result<Scene, BenchError> {
    let ok = |v: f64| v.is_finite() && v > 0.0;
    if !ok(p.extent)
        || !p.trunk_radius.iter().chain(&p.trunk_height).all(|&v| ok(v))
        || p.trunk_radius[0] > p.trunk_radius[1]
        || p.trunk_height[0] > p.trunk_height[1]
        || !(0.0..=1.0).contains(&p.clutter)
    {
        return Err(BenchError::Invalid(format!("forest parameters: {p:?}")));
    }
    let half = 0.5 * p.extent;
    let bounds = Aabb::new(
        Point3::new(-half, -half, -GROUND_THICKNESS),
        Point3::new(half, half, FOREST_CEILING),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut prims = vec![ScenePrimitive::cuboid(
        bounds.min,
        Point3::new(half, half, 0.0),
    )?];

    for _ in 0..p.n_trunks {
        let w = range(&mut rng, p.trunk_radius);
        let h = range(&mut rng, p.trunk_height).min(FOREST_CEILING);
        if w >= half {
            continue;
        }
        let spot = (0..MAX_ATTEMPTS).find_map(|_| {
            let x = rng.random_range(-half + w..half - w);
            let y = rng.random_range(-half + w..half - w);
            // xy distance from the axis to the nearest point of the box
            let dx = (x.abs() - w).max(0.0);
            let dy = (y.abs() - w).max(0.0);
            (dx.hypot(dy) > CLEAR_RADIUS).then_some((x, y))
        });
        let Some((x, y)) = spot else { continue };
        prims.push(ScenePrimitive::cuboid(
            Point3::new(x - w, y - w, 0.0),
            Point3::new(x + w, y + w, h),
        )?);
        if rng.random_bool(p.clutter) {
            let r = rng
                .random_range(0.8..1.8f64)
                .min(half - x.abs())
                .min(half - y.abs())
                .min(FOREST_CEILING - h);
            let c = Point3::new(x, y, h);
            if r > 0.2 && c.x.hypot(c.y) > CLEAR_RADIUS + r {
                prims.push(ScenePrimitive::sphere(c, r)?);
            }
        }
    }

    let n_clutter = (p.clutter * p.n_trunks as f64).round() as usize;
    for _ in 0..n_clutter {
        let r = rng.random_range(0.2..0.8f64);
        if r >= half {
            continue;
        }
        let spot = (0..MAX_ATTEMPTS).find_map(|_| {
            let x = rng.random_range(-half + r..half - r);
            let y = rng.random_range(-half + r..half - r);
            (x.hypot(y) > CLEAR_RADIUS + r).then_some((x, y))
        });
        let Some((x, y)) = spot else { continue };
        let z = rng.random_range(0.0..6.0);
        prims.push(ScenePrimitive::sphere(Point3::new(x, y, z), r)?);
    }

    Ok(Scene::new(bounds, prims).expect("forest primitives lie inside the bounds"))
}

// ---------------------------------------------------------------------------
// Monte-Carlo runs

/// Changes applied to the telescopic link in sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkOverride {
    pub length: Option<f64>,
    pub radius: Option<f64>,
}

/// Which links a run checks.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkSelection {
    #[default]
    All,
    /// Only the telescopic link, optionally reshaped.
    Telescopic(LinkOverride),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub samples: u64,
    pub seed: u64,
    pub params: CheckParams,
    /// Stop at the first colliding link of a configuration.
    pub short_circuit: bool,
    pub links: LinkSelection,
    /// Joint values forced after sampling, as `(joint index, value)`.
    pub fixed_joints: Vec<(usize, f64)>,
}

impl BenchConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self {
            samples,
            seed,
            params: CheckParams::default(),
            short_circuit: false,
            links: LinkSelection::All,
            fixed_joints: Vec::new(),
        }
    }
}

/// Per-sample results of one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub method: Method,
    pub collisions: Vec<bool>,
    pub queries: Vec<u64>,
    pub nanos: Vec<u64>,
}

/// Paired per-sample results of all methods.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRun {
    pub config: BenchConfig,
    pub methods: Vec<MethodRun>,
}

impl BenchRun {
    pub fn method(&self, m: Method) -> Option<&MethodRun> {
        self.methods.iter().find(|r| r.method == m)
    }
}

struct SampleOutcome {
    collision: bool,
    queries: u64,
    nanos: u64,
}

fn capsules_for(
    model: &ChainModel,
    q: &Configuration,
    links: LinkSelection,
) -> Result<Vec<Capsule>, KinematicsError> {
    let mut caps = model.forward(q)?;
    if let LinkSelection::Telescopic(ov) = links {
        let idx = model
            .telescopic_link()
            .ok_or_else(|| KinematicsError::InvalidModel("model has no telescopic link".into()))?;
        let mut c = caps.swap_remove(idx);
        if let Some(len) = ov.length {
            c = Capsule::new(c.axis.with_length(len)?, c.radius())?;
        }
        if let Some(r) = ov.radius {
            c = Capsule::new(c.axis, r)?;
        }
        caps = vec![c];
    }
    Ok(caps)
}

/// Run all `methods` on `config.samples` paired configurations.
pub fn run_paired<F: DistanceField + Sync + ?Sized>(
    model: &ChainModel,
    field: &F,
    methods: &[Method],
    config: &BenchConfig,
) -> Result<BenchRun, BenchError> {
    if config.samples == 0 {
        return Err(BenchError::Invalid("samples must be at least 1".into()));
    }
    if methods.is_empty() {
        return Err(BenchError::Invalid("no methods given".into()));
    }
    config.params.validate()?;
    for m in methods {
        m.validate()?;
    }
    for &(j, v) in &config.fixed_joints {
        let Some(spec) = model.joints.get(j) else {
            return Err(BenchError::Invalid(format!("fixed joint {j} out of range")));
        };
        if !spec.contains(v) {
            return Err(BenchError::Invalid(format!(
                "fixed joint {j} value {v} outside limits"
            )));
        }
    }
    let params = CheckParams {
        record_alphas: false,
        ..config.params
    };

    let per_sample: Vec<Vec<SampleOutcome>> = (0..config.samples)
        .into_par_iter()
        .map(|index| {
            let mut q = sample_configuration(model, config.seed, index);
            for &(j, v) in &config.fixed_joints {
                q.0[j] = v;
            }
            let caps =
                capsules_for(model, &q, config.links).map_err(|source| BenchError::Kinematics {
                    index,
                    q: q.0.clone(),
                    source,
                })?;
            methods
                .iter()
                .map(|m| {
                    let mut out = SampleOutcome {
                        collision: false,
                        queries: 0,
                        nanos: 0,
                    };
                    for cap in &caps {
                        let t0 = Instant::now();
                        let rep = m.check(cap, field, &params);
                        out.nanos += t0.elapsed().as_nanos() as u64;
                        let rep = rep.map_err(|source| BenchError::Check {
                            index,
                            q: q.0.clone(),
                            source,
                        })?;
                        out.queries += rep.queries;
                        if rep.verdict.is_collision() {
                            out.collision = true;
                            if config.short_circuit {
                                break;
                            }
                        }
                    }
                    Ok(out)
                })
                .collect()
        })
        .collect::<Result<_, BenchError>>()?;

    let methods = methods
        .iter()
        .enumerate()
        .map(|(k, &method)| MethodRun {
            method,
            collisions: per_sample.iter().map(|s| s[k].collision).collect(),
            queries: per_sample.iter().map(|s| s[k].queries).collect(),
            nanos: per_sample.iter().map(|s| s[k].nanos).collect(),
        })
        .collect();
    Ok(BenchRun {
        config: config.clone(),
        methods,
    })
}

/// Monte-Carlo benchmark reduced to summary statistics.
pub fn run_monte_carlo<F: DistanceField + Sync + ?Sized>(
    model: &ChainModel,
    field: &F,
    methods: &[Method],
    config: &BenchConfig,
    scene_id: &str,
) -> Result<BenchReport, BenchError> {
    Ok(run_paired(model, field, methods, config)?.report(scene_id))
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub method: Method,
    pub samples: u64,
    pub collision_fraction: f64,
    pub mean_queries: f64,
    pub median_queries: f64,
    pub p99_queries: u64,
    pub mean_ns: f64,
    pub median_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub scene_id: String,
    pub seed: u64,
    pub samples: u64,
    pub lookup_mode: LookupMode,
    pub safety: SafetyMode,
    /// Sweep variable and value, when part of a sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepPoint>,
    pub methods: Vec<MethodStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub variable: String,
    pub value: f64,
}

fn mean(v: &[u64]) -> f64 {
    v.iter().map(|&x| x as f64).sum::<f64>() / v.len() as f64
}

fn median(sorted: &[u64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        0.5 * (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64)
    }
}

/// Nearest-rank percentile of a sorted nonempty slice.
fn percentile(sorted: &[u64], p: f64) -> u64 {
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

impl MethodRun {
    pub fn stats(&self) -> MethodStats {
        let n = self.collisions.len();
        let mut q = self.queries.clone();
        q.sort_unstable();
        let mut t = self.nanos.clone();
        t.sort_unstable();
        MethodStats {
            method: self.method,
            samples: n as u64,
            collision_fraction: self.collisions.iter().filter(|&&c| c).count() as f64 / n as f64,
            mean_queries: mean(&q),
            median_queries: median(&q),
            p99_queries: percentile(&q, 0.99),
            mean_ns: mean(&t),
            median_ns: median(&t),
        }
    }

    pub fn mean_queries(&self) -> f64 {
        mean(&self.queries)
    }

    pub fn collision_fraction(&self) -> f64 {
        self.stats().collision_fraction
    }
}

impl BenchRun {
    pub fn report(&self, scene_id: &str) -> BenchReport {
        BenchReport {
            scene_id: scene_id.to_string(),
            seed: self.config.seed,
            samples: self.config.samples,
            lookup_mode: self.config.params.lookup_mode,
            safety: self.config.params.safety,
            sweep: None,
            methods: self.methods.iter().map(MethodRun::stats).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(format!("unknown format '{s}' (csv | json)")),
        }
    }
}

/// CSV columns of a benchmark report, in order.
pub const CSV_COLUMNS: [&str; 11] = [
    "scene_id",
    "seed",
    "method",
    "param",
    "samples",
    "collision_fraction",
    "mean_queries",
    "median_queries",
    "p99_queries",
    "mean_ns",
    "median_ns",
];

/// Extra leading columns of a sweep table.
pub const SWEEP_COLUMNS: [&str; 3] = ["sweep", "value", "safety"];

fn method_name(m: &Method) -> &'static str {
    match m {
        Method::Uni => "uni",
        Method::Bi => "bi",
        Method::Fixed(_) => "fixed",
        Method::Oracle(_) => "oracle",
    }
}

fn stats_row(r: &BenchReport, s: &MethodStats) -> Vec<String> {
    vec![
        r.scene_id.clone(),
        r.seed.to_string(),
        method_name(&s.method).to_string(),
        s.method.param().map(|p| p.to_string()).unwrap_or_default(),
        s.samples.to_string(),
        s.collision_fraction.to_string(),
        s.mean_queries.to_string(),
        s.median_queries.to_string(),
        s.p99_queries.to_string(),
        s.mean_ns.to_string(),
        s.median_ns.to_string(),
    ]
}

/// Write `# key = value` lines echoing the run configuration.
fn write_comments<W: Write>(out: &mut W, config: &BTreeMap<String, String>) -> std::io::Result<()> {
    for (k, v) in config {
        writeln!(out, "# {k} = {v}")?;
    }
    Ok(())
}

/// Write reports as CSV. Sweep reports get [`SWEEP_COLUMNS`] prepended.
pub fn write_csv<W: Write>(
    out: &mut W,
    reports: &[BenchReport],
    config: &BTreeMap<String, String>,
) -> Result<(), BenchError> {
    write_comments(out, config)?;
    let sweep = reports.iter().any(|r| r.sweep.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = Vec::new();
    if sweep {
        header.extend(SWEEP_COLUMNS);
    }
    header.extend(CSV_COLUMNS);
    w.write_record(&header)?;
    for r in reports {
        for s in &r.methods {
            let mut row = Vec::new();
            if sweep {
                let (var, val) = r
                    .sweep
                    .as_ref()
                    .map(|p| (p.variable.clone(), p.value.to_string()))
                    .unwrap_or_default();
                row.extend([var, val, r.safety.to_string()]);
            }
            row.extend(stats_row(r, s));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct JsonDoc {
    config: BTreeMap<String, String>,
    reports: Vec<BenchReport>,
}

pub fn write_json<W: Write>(
    out: &mut W,
    reports: &[BenchReport],
    config: &BTreeMap<String, String>,
) -> Result<(), BenchError> {
    let doc = JsonDoc {
        config: config.clone(),
        reports: reports.to_vec(),
    };
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)?;
    Ok(())
}

/// Parse a document written by [`write_json`].
pub fn read_json(text: &str) -> Result<(BTreeMap<String, String>, Vec<BenchReport>), BenchError> {
    let doc: JsonDoc = serde_json::from_str(text)?;
    Ok((doc.config, doc.reports))
}

/// Write reports to `path` in the given format.
pub fn write_report(
    reports: &[BenchReport],
    config: &BTreeMap<String, String>,
    path: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<(), BenchError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        ReportFormat::Csv => write_csv(&mut file, reports, config)?,
        ReportFormat::Json => write_json(&mut file, reports, config)?,
    }
    file.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Sweeps

/// Fixed telescope extension used by the radius sweep (m).
pub const RADIUS_SWEEP_EXTENSION: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variable", content = "values", rename_all = "snake_case")]
pub enum SweepSpec {
    LinkLength(Vec<f64>),
    LinkRadius(Vec<f64>),
    /// Safety distances; each is run with both handling modes.
    SafetyMode(Vec<f64>),
}

impl SweepSpec {
    pub fn values(&self) -> &[f64] {
        match self {
            SweepSpec::LinkLength(v) | SweepSpec::LinkRadius(v) | SweepSpec::SafetyMode(v) => v,
        }
    }

    pub fn variable(&self) -> &'static str {
        match self {
            SweepSpec::LinkLength(_) => "link_length",
            SweepSpec::LinkRadius(_) => "link_radius",
            SweepSpec::SafetyMode(_) => "safety_distance",
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let v = self.values();
        let bad = |m: &str| {
            Err(BenchError::Invalid(format!(
                "{} sweep: {m}",
                self.variable()
            )))
        };
        if v.is_empty() {
            return bad("no values");
        }
        if !v.windows(2).all(|w| w[0] < w[1]) {
            return bad("values must be strictly increasing");
        }
        let min_ok = match self {
            SweepSpec::SafetyMode(_) => v[0] >= 0.0,
            _ => v[0] > 0.0,
        };
        if !min_ok || !v.iter().all(|x| x.is_finite()) {
            return bad("values out of range");
        }
        Ok(())
    }
}

/// Run a sweep over the telescopic link. Yields one report per value, or two
/// per value (radius mode first) for safety sweeps.
pub fn run_sweep<F: DistanceField + Sync + ?Sized>(
    spec: &SweepSpec,
    model: &ChainModel,
    field: &F,
    methods: &[Method],
    base: &BenchConfig,
    scene_id: &str,
) -> Result<Vec<BenchReport>, BenchError> {
    Ok(run_sweep_paired(spec, model, field, methods, base)?
        .into_iter()
        .map(|(point, run)| BenchReport {
            sweep: Some(point),
            ..run.report(scene_id)
        })
        .collect())
}

/// Sweep returning the per-sample runs.
pub fn run_sweep_paired<F: DistanceField + Sync + ?Sized>(
    spec: &SweepSpec,
    model: &ChainModel,
    field: &F,
    methods: &[Method],
    base: &BenchConfig,
) -> Result<Vec<(SweepPoint, BenchRun)>, BenchError> {
    spec.validate()?;
    let telescope = model
        .telescopic_link()
        .ok_or_else(|| BenchError::Invalid("model has no telescopic link".into()))?;
    let point = |value| SweepPoint {
        variable: spec.variable().to_string(),
        value,
    };
    let mut out = Vec::new();
    for &value in spec.values() {
        let mut cfg = base.clone();
        match spec {
            SweepSpec::LinkLength(_) => {
                cfg.links = LinkSelection::Telescopic(LinkOverride {
                    length: Some(value),
                    radius: None,
                });
            }
            SweepSpec::LinkRadius(_) => {
                let joint = model.collision_links[telescope]
                    .length_extension_joint
                    .expect("telescopic link has an extension joint");
                cfg.links = LinkSelection::Telescopic(LinkOverride {
                    length: None,
                    radius: Some(value),
                });
                cfg.fixed_joints.retain(|&(j, _)| j != joint);
                cfg.fixed_joints.push((joint, RADIUS_SWEEP_EXTENSION));
            }
            SweepSpec::SafetyMode(_) => {
                cfg.links = LinkSelection::Telescopic(LinkOverride::default());
                for mode in [
                    SafetyMode::AddToRadius(value),
                    SafetyMode::SubtractFromDistance(value),
                ] {
                    let mut c = cfg.clone();
                    c.params.safety = mode;
                    out.push((point(value), run_paired(model, field, methods, &c)?));
                }
                continue;
            }
        }
        out.push((point(value), run_paired(model, field, methods, &cfg)?));
    }
    Ok(out)
}

/// Free-space field: every lookup returns the same large distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmptyField(pub f64);

impl DistanceField for EmptyField {
    fn distance(&self, _: &Point3, _: LookupMode) -> f64 {
        self.0
    }
}

/// Report id of a generated forest.
pub fn forest_scene_id(p: &ForestParams) -> String {
    format!("forest-s{}-n{}", p.seed, p.n_trunks)
}

impl From<FieldError> for BenchError {
    fn from(e: FieldError) -> Self {
        BenchError::Invalid(e.to_string())
    }
}
