//! 2D stroke to 3D surface mapping.

pub mod baseline;
pub mod chart;
pub mod lscm;
pub mod metrology;
pub mod sequence;
pub mod stroke;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, UnitVector3};
use crate::surface::SurfaceModel;

pub use baseline::BaselineMapper;
pub use chart::{register_strokes_to_chart, ChartMapper, Registration};
pub use lscm::{lscm_unfold, ParamChart};
pub use metrology::{transport, MetrologyMapper};
pub use sequence::{sequence_strokes, Mapped, Note, PointMapper};
pub use stroke::{lattice, scale_to_workspace, Box2, MappedPoint, Stroke2D, Stroke3D, StrokeSet2D, SurfacePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "baseline", alias = "BASELINE", alias = "Baseline")]
    Baseline,
    #[serde(rename = "DI", alias = "di")]
    Di,
    #[serde(rename = "EI", alias = "ei")]
    Ei,
    #[serde(rename = "SI", alias = "si")]
    Si,
    #[serde(rename = "II", alias = "ii")]
    Ii,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Baseline, Method::Di, Method::Ei, Method::Si, Method::Ii];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Di => "DI",
            Method::Ei => "EI",
            Method::Si => "SI",
            Method::Ii => "II",
        }
    }

    pub fn is_metrology(&self) -> bool {
        matches!(self, Method::Di | Method::Ei)
    }

    pub fn is_parameterized(&self) -> bool {
        matches!(self, Method::Si | Method::Ii)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Method::Baseline),
            "di" => Ok(Method::Di),
            "ei" => Ok(Method::Ei),
            "si" => Ok(Method::Si),
            "ii" => Ok(Method::Ii),
            _ => Err(Error::InvalidArgument(format!(
                "unknown method {s:?} (expected baseline, DI, EI, SI or II)"
            ))),
        }
    }
}

/// How strokes are scaled onto a parameterization chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    /// Median ratio of chart edge length to 3D edge length.
    #[default]
    Fit,
    /// Chart units per mm.
    Explicit(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MappingConfig {
    pub method: Method,
    /// Random surface samples drawn in addition to mesh vertices.
    pub sample_count: usize,
    pub k_neighbors: usize,
    pub seed: u64,
    /// Surface point the first stroke point maps to. Defaults to the
    /// projection of that point along `direction`.
    pub start: Option<SurfacePoint>,
    /// Projection direction for the baseline and for locating the default start.
    pub direction: UnitVector3,
    pub scale_mode: ScaleMode,
    /// Overrides the surface's gating radius.
    pub snap_tolerance: Option<f64>,
}

impl Default for MappingConfig {
    fn default() -> Self {
        MappingConfig {
            method: Method::Baseline,
            sample_count: 100_000,
            k_neighbors: 10,
            seed: 0,
            start: None,
            direction: -crate::geometry::z_axis(),
            scale_mode: ScaleMode::Fit,
            snap_tolerance: None,
        }
    }
}

impl MappingConfig {
    pub fn new(method: Method) -> Self {
        MappingConfig { method, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count < 1 {
            return Err(Error::InvalidArgument("sample_count must be at least 1".into()));
        }
        if matches!(self.method, Method::Ei) && self.k_neighbors < 3 {
            return Err(Error::InvalidArgument(format!("k_neighbors must be at least 3, got {}", self.k_neighbors)));
        }
        if let Some(t) = self.snap_tolerance {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument(format!("snap tolerance must be positive, got {t}")));
            }
        }
        if let ScaleMode::Explicit(s) = self.scale_mode {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!("explicit scale must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

/// Location of a pen-down point: stroke index and point index within it.
pub type PointRef = (usize, usize);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MappingDiagnostics {
    pub snap_tolerance: f64,
    pub start: Option<SurfacePoint>,
    /// Points where the local plane fit was degenerate and the nearest
    /// sample was used instead.
    pub plane_fit_fallbacks: Vec<PointRef>,
    /// Points whose surface normal is at 90° or more from the reversed
    /// projection direction.
    pub back_facing: Vec<PointRef>,
    pub dropped_bridge_points: usize,
    pub conformal_energy: Option<f64>,
    pub solver_iterations: Option<usize>,
    /// Chart units per mm used for registration.
    pub chart_scale: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MappingOutput {
    pub strokes: Vec<Stroke3D>,
    pub diagnostics: MappingDiagnostics,
}

/// Projects the first stroke point along `direction` to obtain the start
/// position and normal.
pub fn default_start(set: &StrokeSet2D, surface: &SurfaceModel, direction: &UnitVector3) -> Result<SurfacePoint> {
    let mapper = BaselineMapper::new(surface, *direction)?;
    let first = set.strokes()[0].points[0];
    mapper.project(&first).map_err(|e| sequence::locate(e, 0, 0))
}

/// Maps every stroke with `cfg.method`, bridging consecutive strokes with
/// pen-up points.
pub fn map_strokes(set: &StrokeSet2D, surface: &SurfaceModel, cfg: &MappingConfig) -> Result<MappingOutput> {
    cfg.validate()?;
    let owned;
    let surface = match cfg.snap_tolerance {
        Some(t) => {
            owned = surface.clone().with_snap_tolerance(t);
            &owned
        }
        None => surface,
    };
    let mut diagnostics = MappingDiagnostics { snap_tolerance: surface.snap_tolerance(), ..Default::default() };
    let start = || -> Result<SurfacePoint> {
        match cfg.start {
            Some(s) => {
                let (_, d) = surface.index().nearest(&s.position)?;
                if d > surface.snap_tolerance() {
                    return Err(Error::LeftSurface { stroke: 0, point: 0, distance: d, tolerance: surface.snap_tolerance() });
                }
                Ok(s)
            }
            None => default_start(set, surface, &cfg.direction),
        }
    };
    let (strokes, notes) = match cfg.method {
        Method::Baseline => {
            let mapper = BaselineMapper::new(surface, cfg.direction)?;
            sequence_strokes(set, &mapper)?
        }
        Method::Di | Method::Ei => {
            let s = start()?;
            diagnostics.start = Some(s);
            let mapper = MetrologyMapper::new(surface, s, cfg.method == Method::Ei, cfg.k_neighbors);
            sequence_strokes(set, &mapper)?
        }
        Method::Si | Method::Ii => {
            let mesh = surface
                .mesh()
                .ok_or_else(|| Error::InvalidArgument(format!("{} needs a mesh surface", cfg.method)))?;
            let s = start()?;
            diagnostics.start = Some(s);
            let chart = lscm_unfold(mesh, None)?;
            diagnostics.conformal_energy = Some(chart.conformal_energy);
            diagnostics.solver_iterations = Some(chart.solver_iterations);
            let reg = register_strokes_to_chart(set, &chart, mesh, &s, cfg.scale_mode, surface.snap_tolerance())?;
            diagnostics.chart_scale = Some(reg.scale);
            let mapper = ChartMapper::new(&chart, mesh, surface.samples(), cfg.method == Method::Ii);
            sequence_strokes(&reg.strokes, &mapper)?
        }
    };
    for (r, note) in notes.notes {
        match note {
            Note::PlaneFitFallback => diagnostics.plane_fit_fallbacks.push(r),
            Note::BackFacing => diagnostics.back_facing.push(r),
        }
    }
    diagnostics.dropped_bridge_points = notes.dropped_bridge_points;
    Ok(MappingOutput { strokes, diagnostics })
}

/// Distance from `p` to the nearest surface sample.
pub fn surface_distance(surface: &SurfaceModel, p: &Point3) -> Result<f64> {
    surface.index().nearest(p).map(|(_, d)| d)
}
