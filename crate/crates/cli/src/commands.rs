//! The five pipeline commands. Each writes into an output directory and
//! finishes with a manifest.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use surfdraw_core::mapping::map_strokes;
use surfdraw_core::metrics::{benchmark, DeformationReport, MethodRun};
use surfdraw_core::suite::Shape;
use surfdraw_core::surface::io::write_ply_samples;
use surfdraw_core::surface::sampling::sample_partial_view;
use surfdraw_core::trajectory::{
    apply_correction, attach_poses, densify_slerp, detect_and_recover, discontinuity_report, PoseTrajectory,
    RecoveryAnnotatedTrajectory,
};
use surfdraw_core::{Error, Method, Point3, Stroke3D};

use crate::config::{input_paths, load_strokes, BenchCell, PipelineConfig, SurfaceSpec};
use crate::error::{CliError, CliResult};
use crate::manifest::{hash_inputs, RunManifest, RunRecorder, FORMAT_VERSION};

fn config_json(cfg: &PipelineConfig) -> serde_json::Value {
    serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null)
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn method_dir(m: Method) -> String {
    m.as_str().to_ascii_lowercase()
}

fn bytes_of(f: impl FnOnce(&mut Vec<u8>) -> surfdraw_core::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::Stage(e.to_string()))?;
    Ok(buf)
}

/// Scalar results of one method, without timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub samples: usize,
    pub succeeded: bool,
    pub mean_abs_local: Option<f64>,
    pub mean_signed_local: Option<f64>,
    pub mean_abs_global: Option<f64>,
    pub mean_signed_global: Option<f64>,
    pub global_pairs: usize,
    pub back_facing: usize,
    pub plane_fit_fallbacks: usize,
    pub dropped_bridge_points: usize,
    pub conformal_energy: Option<f64>,
    pub chart_scale: Option<f64>,
    pub error: Option<String>,
}

impl From<&DeformationReport> for MethodSummary {
    fn from(r: &DeformationReport) -> Self {
        let d = r.diagnostics.clone().unwrap_or_default();
        MethodSummary {
            method: r.method,
            samples: r.samples,
            succeeded: r.succeeded(),
            mean_abs_local: r.mean_abs_local,
            mean_signed_local: r.mean_signed_local,
            mean_abs_global: r.mean_abs_global,
            mean_signed_global: r.mean_signed_global,
            global_pairs: r.global.len(),
            back_facing: d.back_facing.len(),
            plane_fit_fallbacks: d.plane_fit_fallbacks.len(),
            dropped_bridge_points: d.dropped_bridge_points,
            conformal_energy: d.conformal_energy,
            chart_scale: d.chart_scale,
            error: r.error.clone(),
        }
    }
}

const SUMMARY_HEADER: &str = "method,samples,status,mean_abs_local,mean_signed_local,mean_abs_global,mean_signed_global,\
global_pairs,back_facing,plane_fit_fallbacks,dropped_bridge_points,error";

fn summary_row(s: &MethodSummary) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        s.method,
        s.samples,
        if s.succeeded { "ok" } else { "failed" },
        num(s.mean_abs_local),
        num(s.mean_signed_local),
        num(s.mean_abs_global),
        num(s.mean_signed_global),
        s.global_pairs,
        s.back_facing,
        s.plane_fit_fallbacks,
        s.dropped_bridge_points,
        csv_field(s.error.as_deref().unwrap_or("")),
    )
}

/// Maps the strokes with every selected method and scores each result.
pub fn cmd_map(cfg: &PipelineConfig, out: &Path) -> CliResult<RunManifest> {
    cfg.validate()?;
    let spec = cfg.require_surface()?;
    let inputs = hash_inputs(&input_paths(cfg))?;
    let strokes = load_strokes(cfg.strokes.as_ref(), spec, cfg.workspace.as_ref())?;
    let mut rec = RunRecorder::new(out.into(), "map", config_json(cfg), inputs);
    let surface = rec.stage("load_surface", |_| spec.load(cfg.mapping.sample_count, cfg.seed))?;
    let runs = rec.stage("map", |_| benchmark(&surface, &strokes, &cfg.methods, &cfg.mapping_config(Method::Baseline)));
    let mut summary = format!("{SUMMARY_HEADER}\n");
    let mut timings = String::from("method,duration_s\n");
    let mut summaries = Vec::new();
    for MethodRun { report, output } in &runs {
        let dir = method_dir(report.method);
        let s = MethodSummary::from(report);
        summary.push_str(&summary_row(&s));
        summary.push('\n');
        let _ = writeln!(timings, "{},{:?}", report.method, report.duration_s);
        if let Some(out) = output {
            rec.write_json(&format!("{dir}/strokes3d.json"), &out.strokes)?;
            rec.write(&format!("{dir}/local_error.csv"), &bytes_of(|b| report.write_local_csv(b))?)?;
            rec.write(&format!("{dir}/global_error.csv"), &bytes_of(|b| report.write_global_csv(b))?)?;
        }
        rec.write_json(&format!("{dir}/summary.json"), &s)?;
        if let Some(e) = &report.error {
            rec.fail(format!("{}: {e}", report.method));
        }
        summaries.push(s);
    }
    rec.write("summary.csv", summary.as_bytes())?;
    rec.write_json("summary.json", &summaries)?;
    rec.write("timings.csv", timings.as_bytes())?;
    rec.finish()
}

/// Densified trajectory of one pen (color group) as exported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub format_version: u32,
    pub group: String,
    pub standoff: f64,
    pub max_step_angle: f64,
    pub max_step_dist: f64,
    /// Poses re-expressed for the estimated in-hand grasp.
    pub corrected: bool,
    pub trajectory: PoseTrajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscontinuityFile {
    pub group: String,
    pub max_step_angle: f64,
    /// `(pose index, jump in radians)` before densification.
    pub raw: Vec<(usize, f64)>,
    pub densified: Vec<(usize, f64)>,
}

fn file_tag(tag: &str) -> String {
    tag.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Strokes grouped by color tag in order of first appearance; untagged
/// strokes form the `default` group.
pub fn group_by_color(strokes: Vec<Stroke3D>) -> Vec<(String, Vec<Stroke3D>)> {
    let mut groups: Vec<(String, Vec<Stroke3D>)> = Vec::new();
    for s in strokes {
        let tag = s.color.clone().unwrap_or_else(|| "default".into());
        match groups.iter_mut().find(|(t, _)| *t == tag) {
            Some((_, g)) => g.push(s),
            None => groups.push((tag, vec![s])),
        }
    }
    groups
}

/// Pen poses along mapped strokes, one densified trajectory per color tag.
/// Strokes come from `mapped` (a `strokes3d.json`) or are mapped here with
/// the configured trajectory method.
pub fn cmd_trajectory(cfg: &PipelineConfig, mapped: Option<&Path>, out: &Path) -> CliResult<RunManifest> {
    let p = &cfg.trajectory;
    let max_angle = p.max_step_angle_deg.to_radians();
    for (name, v) in [("max_step_angle_deg", p.max_step_angle_deg), ("max_step_dist", p.max_step_dist)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::Usage(format!("{name} must be positive, got {v}")));
        }
    }
    if !(p.standoff.is_finite() && p.standoff >= 0.0) {
        return Err(CliError::Usage(format!("standoff must be non-negative, got {}", p.standoff)));
    }
    let mut rec;
    let strokes3d: Vec<Stroke3D> = match mapped {
        Some(path) => {
            let inputs = hash_inputs(&[path.to_path_buf()])?;
            let text = fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
            let strokes: Vec<Stroke3D> = serde_json::from_str(&text).map_err(|e| CliError::input(path, e))?;
            if strokes.is_empty() {
                return Err(CliError::input(path, Error::InvalidArgument("no strokes".into())));
            }
            rec = RunRecorder::new(out.into(), "trajectory", config_json(cfg), inputs);
            strokes
        }
        None => {
            cfg.validate()?;
            let spec = cfg.require_surface()?;
            let inputs = hash_inputs(&input_paths(cfg))?;
            let strokes = load_strokes(cfg.strokes.as_ref(), spec, cfg.workspace.as_ref())?;
            rec = RunRecorder::new(out.into(), "trajectory", config_json(cfg), inputs);
            let surface = rec.stage("load_surface", |_| spec.load(cfg.mapping.sample_count, cfg.seed))?;
            let mapping = cfg.mapping_config(p.method);
            match rec.stage("map", |_| map_strokes(&strokes, &surface, &mapping)) {
                Ok(o) => {
                    rec.write_json("strokes3d.json", &o.strokes)?;
                    o.strokes
                }
                Err(e) => {
                    rec.fail(format!("{}: {e}", p.method));
                    return rec.finish();
                }
            }
        }
    };
    let groups = group_by_color(strokes3d);
    for (tag, strokes) in groups {
        let name = file_tag(&tag);
        let result = rec.stage(&format!("poses:{tag}"), |_| -> surfdraw_core::Result<_> {
            let raw = attach_poses(&strokes, p.standoff)?;
            let dense = densify_slerp(&raw, max_angle, p.max_step_dist)?;
            let report = DiscontinuityFile {
                group: tag.clone(),
                max_step_angle: max_angle,
                raw: discontinuity_report(&raw, max_angle),
                densified: discontinuity_report(&dense, max_angle),
            };
            let dense = match &p.grasp {
                Some(g) => apply_correction(&dense, g)?,
                None => dense,
            };
            Ok((dense, report))
        });
        let (trajectory, report) = match result {
            Ok(r) => r,
            Err(e @ Error::InvalidArgument(_)) => return Err(CliError::Usage(e.to_string())),
            Err(e) => {
                rec.fail(format!("{tag}: {e}"));
                continue;
            }
        };
        if !report.densified.is_empty() {
            rec.fail(format!("{tag}: {} steps exceed the angular bound", report.densified.len()));
        }
        rec.write(&format!("trajectory_{name}.csv"), &bytes_of(|b| trajectory.write_csv(b))?)?;
        let file = TrajectoryFile {
            format_version: FORMAT_VERSION,
            group: tag.clone(),
            standoff: p.standoff,
            max_step_angle: max_angle,
            max_step_dist: p.max_step_dist,
            corrected: p.grasp.is_some(),
            trajectory,
        };
        rec.write_json(&format!("trajectory_{name}.json"), &file)?;
        rec.write_json(&format!("discontinuities_{name}.json"), &report)?;
    }
    rec.finish()
}

/// Measured tip positions: a JSON list of `[x, y, z]`, or CSV rows `x,y,z`
/// with an optional header.
pub fn read_measured(path: &Path) -> CliResult<Vec<Point3>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let pts: Vec<[f64; 3]> = serde_json::from_str(&text).map_err(|e| CliError::input(path, e))?;
        return Ok(pts.into_iter().map(Point3::from).collect());
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let vals: Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        match vals {
            Ok(v) if v.len() == 3 => out.push(Point3::new(v[0], v[1], v[2])),
            Err(_) if i == 0 => continue,
            _ => {
                return Err(CliError::input(path, Error::Parse(format!("line {}: expected x,y,z", i + 1))));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryFile {
    pub format_version: u32,
    pub skip_events: usize,
    pub recovery: RecoveryAnnotatedTrajectory,
}

/// Compares a measured tip trace with a planned trajectory and inserts skip
/// and lift events.
pub fn cmd_recover(cfg: &PipelineConfig, planned: &Path, measured: &Path, out: &Path) -> CliResult<RunManifest> {
    let p = &cfg.trajectory;
    if !(p.threshold.is_finite() && p.threshold > 0.0) {
        return Err(CliError::Usage(format!("threshold must be positive, got {}", p.threshold)));
    }
    if !(p.lift.is_finite() && p.lift >= 0.0) {
        return Err(CliError::Usage(format!("lift must be non-negative, got {}", p.lift)));
    }
    let inputs = hash_inputs(&[planned.to_path_buf(), measured.to_path_buf()])?;
    let text = fs::read_to_string(planned).map_err(|e| CliError::input(planned, e))?;
    let plan: TrajectoryFile = serde_json::from_str(&text).map_err(|e| CliError::input(planned, e))?;
    let trace = read_measured(measured)?;
    let recovery = detect_and_recover(&plan.trajectory, &trace, p.threshold, p.lift).map_err(|e| match e {
        Error::LengthMismatch { expected, actual } => CliError::Usage(format!(
            "{} has {actual} positions but the planned trajectory has {expected} pen-down poses",
            measured.display()
        )),
        e => CliError::Usage(e.to_string()),
    })?;
    let mut rec = RunRecorder::new(out.into(), "recover", config_json(cfg), inputs);
    rec.write("deviation.csv", &bytes_of(|b| recovery.write_deviation_csv(b))?)?;
    rec.write("executed.csv", &bytes_of(|b| recovery.flatten().write_csv(b))?)?;
    let file = RecoveryFile { format_version: FORMAT_VERSION, skip_events: recovery.lifts.len(), recovery };
    println!("skip events: {}", file.skip_events);
    rec.write_json("recovery.json", &file)?;
    rec.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateStats {
    pub count: usize,
    pub sensor: [f64; 3],
    pub faces_sampled: usize,
    pub seed: u64,
}

/// Viewpoint-weighted partial-view samples of a mesh, as PLY.
pub fn cmd_template(cfg: &PipelineConfig, out: &Path) -> CliResult<RunManifest> {
    let spec = cfg.require_surface()?;
    let inputs = hash_inputs(&input_paths(cfg))?;
    let mesh = spec.load_mesh()?;
    let t = &cfg.template;
    let samples = sample_partial_view(&mesh, &Point3::from(t.sensor), t.count, cfg.seed).map_err(|e| match e {
        Error::InvalidArgument(m) => CliError::Usage(m),
        e => CliError::Stage(format!("{}: {e}", spec.label())),
    })?;
    let mut rec = RunRecorder::new(out.into(), "template", config_json(cfg), inputs);
    rec.write("template.ply", &bytes_of(|b| write_ply_samples(b, &samples))?)?;
    let faces: BTreeSet<_> = samples.iter().filter_map(|s| s.source.face()).collect();
    let stats = TemplateStats { count: samples.len(), sensor: t.sensor, faces_sampled: faces.len(), seed: cfg.seed };
    rec.write_json("template.json", &stats)?;
    rec.finish()
}

/// The analytic plane, box, cylinder and hemisphere cases, each with its
/// built-in lattice.
pub fn builtin_suite(methods: &[Method]) -> Vec<BenchCell> {
    Shape::ALL
        .iter()
        .map(|s| BenchCell {
            surface: SurfaceSpec::Builtin { name: s.name().into() },
            strokes: None,
            methods: methods.to_vec(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub surface: String,
    pub points: usize,
    #[serde(flatten)]
    pub summary: MethodSummary,
}

struct CellOutcome {
    label: String,
    points: usize,
    runs: Vec<MethodRun>,
    error: Option<String>,
}

fn run_cell(cfg: &PipelineConfig, cell: &BenchCell, label: String) -> CellOutcome {
    let attempt = || -> CliResult<(usize, Vec<MethodRun>)> {
        let strokes = load_strokes(cell.strokes.as_ref(), &cell.surface, None)?;
        let surface = cell.surface.load(cfg.mapping.sample_count, cfg.seed)?;
        let runs = benchmark(&surface, &strokes, &cell.methods, &cfg.mapping_config(Method::Baseline));
        Ok((strokes.point_count(), runs))
    };
    match attempt() {
        Ok((points, runs)) => CellOutcome { label, points, runs, error: None },
        Err(e) => CellOutcome { label, points: 0, runs: Vec::new(), error: Some(e.to_string()) },
    }
}

/// Runs every benchmark cell (in parallel) and writes one consolidated
/// table. Cell and method failures are recorded and the batch continues.
pub fn cmd_bench(cfg: &PipelineConfig, out: &Path) -> CliResult<RunManifest> {
    cfg.mapping.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let cells = match &cfg.bench {
        Some(c) => c.clone(),
        None => builtin_suite(&cfg.methods),
    };
    if cells.is_empty() {
        return Err(CliError::Usage("benchmark manifest lists no cells".into()));
    }
    for cell in &cells {
        cell.surface.shape()?;
        if cell.methods.is_empty() {
            return Err(CliError::Usage(format!("benchmark cell {} lists no methods", cell.surface.label())));
        }
    }
    let inputs = hash_inputs(&input_paths(cfg))?;
    let mut labels: Vec<String> = Vec::new();
    for cell in &cells {
        let base = cell.surface.label();
        let n = labels.iter().filter(|l| l.split('#').next() == Some(base.as_str())).count();
        labels.push(if n == 0 { base } else { format!("{base}#{n}") });
    }
    let mut rec = RunRecorder::new(out.into(), "bench", config_json(cfg), inputs);
    let outcomes: Vec<CellOutcome> = rec.stage("bench", |_| {
        cells.par_iter().zip(labels.into_par_iter()).map(|(cell, label)| run_cell(cfg, cell, label)).collect()
    });

    let mut long = format!("surface,points,{SUMMARY_HEADER}\n");
    let mut timings = String::from("surface,method,duration_s\n");
    let mut rows = Vec::new();
    let methods: Vec<Method> = Method::ALL.into_iter().filter(|m| cells.iter().any(|c| c.methods.contains(m))).collect();
    let mut table = String::from("surface");
    for m in &methods {
        let _ = write!(table, ",{m}_mean_abs_local,{m}_mean_abs_global");
    }
    table.push('\n');
    for o in &outcomes {
        if let Some(e) = &o.error {
            rec.fail(format!("{}: {e}", o.label));
        }
        table.push_str(&csv_field(&o.label));
        for m in &methods {
            match o.runs.iter().find(|r| r.report.method == *m) {
                Some(r) => {
                    let _ = write!(table, ",{},{}", num(r.report.mean_abs_local), num(r.report.mean_abs_global));
                }
                None => table.push_str(",,"),
            }
        }
        table.push('\n');
        for r in &o.runs {
            let s = MethodSummary::from(&r.report);
            let _ = writeln!(long, "{},{},{}", csv_field(&o.label), o.points, summary_row(&s));
            let _ = writeln!(timings, "{},{},{:?}", csv_field(&o.label), s.method, r.report.duration_s);
            if let Some(e) = &s.error {
                rec.fail(format!("{} {}: {e}", o.label, s.method));
            }
            rows.push(BenchRow { surface: o.label.clone(), points: o.points, summary: s });
        }
    }
    rec.write("bench.csv", long.as_bytes())?;
    rec.write("bench_table.csv", table.as_bytes())?;
    rec.write_json("bench.json", &rows)?;
    rec.write("timings.csv", timings.as_bytes())?;
    rec.finish()
}

/// Output directory: explicit flag, then config, then `SURFDRAW_OUT`, then
/// `surfdraw-out`.
pub fn resolve_out(flag: Option<PathBuf>, cfg: &PipelineConfig) -> PathBuf {
    flag.or_else(|| cfg.out.clone())
        .or_else(|| std::env::var_os("SURFDRAW_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("surfdraw-out"))
}
