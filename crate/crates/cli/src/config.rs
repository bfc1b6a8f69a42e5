//! JSON pipeline configuration and input loading.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use surfdraw_core::mapping::{lattice, scale_to_workspace, Box2, MappingConfig};
use surfdraw_core::suite::Shape;
use surfdraw_core::surface::io::{load_mesh, load_point_cloud};
use surfdraw_core::trajectory::{
    GraspCorrection, DEFAULT_LIFT, DEFAULT_MAX_STEP_ANGLE, DEFAULT_MAX_STEP_DIST, DEFAULT_STANDOFF, DEFAULT_THRESHOLD,
};
use surfdraw_core::{Method, Point2, Point3, Stroke2D, StrokeSet2D, SurfaceModel, TriangleMesh};

use crate::error::{CliError, CliResult};

/// Neighbors used to estimate point-cloud normals when the file has none.
const NORMAL_NEIGHBORS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceSpec {
    Mesh {
        path: PathBuf,
    },
    Pointcloud {
        path: PathBuf,
        /// Normals are oriented toward this point when estimated.
        #[serde(default = "default_viewpoint")]
        viewpoint: [f64; 3],
    },
    Builtin {
        name: String,
    },
}

fn default_viewpoint() -> [f64; 3] {
    [0.0, 0.0, 1e4]
}

impl SurfaceSpec {
    /// Mesh or point cloud chosen by file extension.
    pub fn from_path(path: PathBuf) -> Self {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        match ext.as_str() {
            "xyz" | "txt" | "pts" => SurfaceSpec::Pointcloud { path, viewpoint: default_viewpoint() },
            _ => SurfaceSpec::Mesh { path },
        }
    }

    pub fn path(&self) -> Option<&Path> {
        match self {
            SurfaceSpec::Mesh { path } | SurfaceSpec::Pointcloud { path, .. } => Some(path),
            SurfaceSpec::Builtin { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SurfaceSpec::Builtin { name } => name.clone(),
            SurfaceSpec::Mesh { path } | SurfaceSpec::Pointcloud { path, .. } => {
                path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            }
        }
    }

    pub fn shape(&self) -> CliResult<Option<Shape>> {
        match self {
            SurfaceSpec::Builtin { name } => name.parse().map(Some).map_err(|e: surfdraw_core::Error| CliError::Usage(e.to_string())),
            _ => Ok(None),
        }
    }

    pub fn load_mesh(&self) -> CliResult<TriangleMesh> {
        match self {
            SurfaceSpec::Mesh { path } => load_mesh(path).map_err(|e| CliError::input(path, e)),
            SurfaceSpec::Builtin { .. } => {
                let shape = self.shape()?.expect("builtin spec");
                shape.mesh().map_err(|e| CliError::Stage(e.to_string()))
            }
            SurfaceSpec::Pointcloud { path, .. } => {
                Err(CliError::Usage(format!("{} is a point cloud; a mesh is required", path.display())))
            }
        }
    }

    /// Surface model with `samples` random samples for meshes.
    pub fn load(&self, samples: usize, seed: u64) -> CliResult<SurfaceModel> {
        match self {
            SurfaceSpec::Pointcloud { path, viewpoint } => {
                let cloud = load_point_cloud(path).map_err(|e| CliError::input(path, e))?;
                let model = match &cloud.normals {
                    Some(n) => SurfaceModel::from_point_cloud(&cloud.points, n),
                    None => SurfaceModel::from_points(&cloud.points, NORMAL_NEIGHBORS, &Point3::from(*viewpoint)),
                };
                model.map_err(|e| CliError::input(path, e))
            }
            _ => {
                let mesh = self.load_mesh()?;
                SurfaceModel::from_mesh(mesh, samples, seed).map_err(|e| CliError::Stage(e.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrokeSource {
    File { path: PathBuf },
    /// `rows` horizontal then `cols` vertical strokes over `[min_x, min_y, max_x, max_y]`.
    Lattice { rows: usize, cols: usize, points: usize, region: [f64; 4] },
}

/// Stroke file: a list of strokes, bare or under a `strokes` key.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum StrokeFile {
    List(Vec<Stroke2D>),
    Document { strokes: Vec<Stroke2D> },
}

pub fn read_stroke_file(path: &Path) -> CliResult<StrokeSet2D> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    let file: StrokeFile = serde_json::from_str(&text).map_err(|e| CliError::input(path, e))?;
    let strokes = match file {
        StrokeFile::List(s) | StrokeFile::Document { strokes: s } => s,
    };
    StrokeSet2D::new(strokes).map_err(|e| CliError::input(path, e))
}

fn box2(r: &[f64; 4]) -> Box2 {
    Box2::new(Point2::new(r[0], r[1]), Point2::new(r[2], r[3]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryParams {
    /// Method used when the trajectory stage maps strokes itself.
    pub method: Method,
    pub standoff: f64,
    pub max_step_angle_deg: f64,
    pub max_step_dist: f64,
    pub threshold: f64,
    pub lift: f64,
    pub grasp: Option<GraspCorrection>,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        TrajectoryParams {
            method: Method::Ei,
            standoff: DEFAULT_STANDOFF,
            max_step_angle_deg: DEFAULT_MAX_STEP_ANGLE.to_degrees(),
            max_step_dist: DEFAULT_MAX_STEP_DIST,
            threshold: DEFAULT_THRESHOLD,
            lift: DEFAULT_LIFT,
            grasp: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemplateParams {
    pub sensor: [f64; 3],
    pub count: usize,
}

impl Default for TemplateParams {
    fn default() -> Self {
        TemplateParams { sensor: [0.0, 0.0, 500.0], count: 100_000 }
    }
}

/// One benchmark cell: a surface, its strokes and the methods to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchCell {
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub strokes: Option<StrokeSource>,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub surface: Option<SurfaceSpec>,
    pub strokes: Option<StrokeSource>,
    /// Strokes are scaled uniformly and centered into this box.
    pub workspace: Option<[f64; 4]>,
    pub methods: Vec<Method>,
    pub mapping: MappingConfig,
    pub trajectory: TrajectoryParams,
    pub template: TemplateParams,
    /// Benchmark cells; the built-in analytic suite when absent.
    pub bench: Option<Vec<BenchCell>>,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            surface: None,
            strokes: None,
            workspace: None,
            methods: all_methods(),
            mapping: MappingConfig::default(),
            trajectory: TrajectoryParams::default(),
            template: TemplateParams::default(),
            bench: None,
            out: None,
            seed: 0,
        }
    }
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn rebase_surface(base: &Path, s: &mut SurfaceSpec) {
    if let SurfaceSpec::Mesh { path } | SurfaceSpec::Pointcloud { path, .. } = s {
        rebase(base, path);
    }
}

fn rebase_strokes(base: &Path, s: &mut StrokeSource) {
    if let StrokeSource::File { path } = s {
        rebase(base, path);
    }
}

impl PipelineConfig {
    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text).map_err(|e| CliError::input(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(s) = &mut cfg.surface {
            rebase_surface(base, s);
        }
        if let Some(s) = &mut cfg.strokes {
            rebase_strokes(base, s);
        }
        for cell in cfg.bench.iter_mut().flatten() {
            rebase_surface(base, &mut cell.surface);
            if let Some(s) = &mut cell.strokes {
                rebase_strokes(base, s);
            }
        }
        if let Some(o) = &mut cfg.out {
            rebase(base, o);
        }
        Ok(cfg)
    }

    /// Mapping parameters with the pipeline seed applied.
    pub fn mapping_config(&self, method: Method) -> MappingConfig {
        MappingConfig { method, seed: self.seed, ..self.mapping.clone() }
    }

    pub fn require_surface(&self) -> CliResult<&SurfaceSpec> {
        self.surface.as_ref().ok_or_else(|| CliError::Usage("no surface given (use --surface, --builtin or the config)".into()))
    }

    pub fn validate(&self) -> CliResult<()> {
        self.mapping.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.methods.is_empty() {
            return Err(CliError::Usage("no mapping method selected".into()));
        }
        if let Some(w) = &self.workspace {
            if !(w[2] > w[0] && w[3] > w[1]) {
                return Err(CliError::Usage(format!("workspace {w:?} is empty")));
            }
        }
        Ok(())
    }
}

/// Strokes from `source`, or the built-in lattice of `surface`.
pub fn load_strokes(
    source: Option<&StrokeSource>,
    surface: &SurfaceSpec,
    workspace: Option<&[f64; 4]>,
) -> CliResult<StrokeSet2D> {
    let set = match source {
        Some(StrokeSource::File { path }) => read_stroke_file(path)?,
        Some(StrokeSource::Lattice { rows, cols, points, region }) => {
            lattice(box2(region), *rows, *cols, *points).map_err(|e| CliError::Usage(e.to_string()))?
        }
        None => match surface.shape()? {
            Some(shape) => shape.strokes().map_err(|e| CliError::Stage(e.to_string()))?,
            None => return Err(CliError::Usage("no strokes given (use --strokes or the config)".into())),
        },
    };
    match workspace {
        Some(w) => scale_to_workspace(&set, &box2(w)).map_err(|e| CliError::Usage(e.to_string())),
        None => Ok(set),
    }
}

/// Paths of every file input referenced by the config.
pub fn input_paths(cfg: &PipelineConfig) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let push_surface = |s: &SurfaceSpec, out: &mut Vec<PathBuf>| out.extend(s.path().map(Path::to_path_buf));
    if let Some(s) = &cfg.surface {
        push_surface(s, &mut out);
    }
    if let Some(StrokeSource::File { path }) = &cfg.strokes {
        out.push(path.clone());
    }
    for cell in cfg.bench.iter().flatten() {
        push_surface(&cell.surface, &mut out);
        if let Some(StrokeSource::File { path }) = &cell.strokes {
            out.push(path.clone());
        }
    }
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg: PipelineConfig =
            serde_json::from_str(r#"{"surface": {"kind": "builtin", "name": "cylinder"}, "methods": ["EI", "baseline"]}"#)
                .unwrap();
        assert_eq!(cfg.methods, vec![Method::Ei, Method::Baseline]);
        assert_eq!(cfg.mapping.sample_count, 100_000);
        assert_eq!(cfg.trajectory.threshold, 2.0);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"surfce": null}"#).is_err());
    }

    #[test]
    fn stroke_file_both_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        fs::write(&a, r#"[{"id": "s", "points": [[0, 0], [1, 0]], "color": "red"}]"#).unwrap();
        let b = dir.path().join("b.json");
        fs::write(&b, r#"{"strokes": [{"id": "s", "points": [[0, 0], [1, 0]]}]}"#).unwrap();
        assert_eq!(read_stroke_file(&a).unwrap().strokes()[0].color.as_deref(), Some("red"));
        assert_eq!(read_stroke_file(&b).unwrap().point_count(), 2);
    }

    #[test]
    fn surface_kind_from_extension() {
        assert!(matches!(SurfaceSpec::from_path("a.OBJ".into()), SurfaceSpec::Mesh { .. }));
        assert!(matches!(SurfaceSpec::from_path("a.xyz".into()), SurfaceSpec::Pointcloud { .. }));
    }
}
