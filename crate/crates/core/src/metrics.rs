//! Local and global deformation of mapped strokes.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{map_strokes, MappingConfig, MappingDiagnostics, MappingOutput, Method, PointRef, Stroke2D, Stroke3D, StrokeSet2D};
use crate::surface::SurfaceModel;

/// 2D pairs closer than this count as coincident (lattice crossings).
pub const COINCIDENT_PAIR: f64 = 1e-6;

/// Relative length change of every segment:
/// `(|q_i q_i+1| - |p_i p_i+1|) / |p_i p_i+1|`, over pen-down points.
pub fn local_error(stroke2d: &Stroke2D, stroke3d: &Stroke3D) -> Result<Vec<f64>> {
    let q = stroke3d.pen_down_positions();
    if q.len() != stroke2d.points.len() {
        return Err(Error::LengthMismatch { expected: stroke2d.points.len(), actual: q.len() });
    }
    Ok(stroke2d
        .points
        .windows(2)
        .zip(q.windows(2))
        .map(|(p, q)| {
            let l2 = (p[1] - p[0]).norm();
            ((q[1] - q[0]).norm() - l2) / l2
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalPair {
    pub a: PointRef,
    pub b: PointRef,
    pub dist_2d: f64,
    pub dist_3d: f64,
    /// `dist_3d - dist_2d` in mm.
    pub value: f64,
}

/// Cross-stroke point pairs whose distance is compared before and after
/// mapping: every pair closer than [`COINCIDENT_PAIR`]; if the whole set has
/// none, the closest pair of each stroke pair instead.
pub fn closest_pairs(set: &StrokeSet2D) -> Vec<(PointRef, PointRef, f64)> {
    let strokes = set.strokes();
    let mut coincident = Vec::new();
    let mut minima = Vec::new();
    for (i, a) in strokes.iter().enumerate() {
        for (j, b) in strokes.iter().enumerate().skip(i + 1) {
            let mut best: Option<(PointRef, PointRef, f64)> = None;
            for (m, p) in a.points.iter().enumerate() {
                for (n, q) in b.points.iter().enumerate() {
                    let d = (p - q).norm();
                    if d < COINCIDENT_PAIR {
                        coincident.push(((i, m), (j, n), d));
                    }
                    if best.is_none_or(|(_, _, bd)| d < bd) {
                        best = Some(((i, m), (j, n), d));
                    }
                }
            }
            minima.extend(best);
        }
    }
    if coincident.is_empty() {
        minima
    } else {
        coincident
    }
}

/// Distance change of each closest cross-stroke pair.
pub fn global_error(set2d: &StrokeSet2D, set3d: &[Stroke3D]) -> Result<Vec<GlobalPair>> {
    if set3d.len() != set2d.strokes().len() {
        return Err(Error::LengthMismatch { expected: set2d.strokes().len(), actual: set3d.len() });
    }
    let mapped: Vec<_> = set3d.iter().map(|s| s.pen_down_positions()).collect();
    for (s, m) in set2d.strokes().iter().zip(&mapped) {
        if s.points.len() != m.len() {
            return Err(Error::LengthMismatch { expected: s.points.len(), actual: m.len() });
        }
    }
    Ok(closest_pairs(set2d)
        .into_iter()
        .map(|(a, b, dist_2d)| {
            let dist_3d = (mapped[a.0][a.1] - mapped[b.0][b.1]).norm();
            GlobalPair { a, b, dist_2d, dist_3d, value: dist_3d - dist_2d }
        })
        .collect())
}

/// In-order mean; `None` for an empty series.
pub fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut n = 0usize;
    let mut sum = 0.0;
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalErrorSeries {
    pub stroke_id: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationReport {
    pub method: Method,
    pub samples: usize,
    pub mean_abs_local: Option<f64>,
    pub mean_signed_local: Option<f64>,
    pub mean_abs_global: Option<f64>,
    pub mean_signed_global: Option<f64>,
    pub local: Vec<LocalErrorSeries>,
    pub global: Vec<GlobalPair>,
    /// Wall-clock seconds spent mapping, chart construction included.
    pub duration_s: f64,
    pub error: Option<String>,
    pub diagnostics: Option<MappingDiagnostics>,
}

impl DeformationReport {
    pub fn failed(method: Method, samples: usize, duration_s: f64, error: &Error) -> Self {
        DeformationReport {
            method,
            samples,
            mean_abs_local: None,
            mean_signed_local: None,
            mean_abs_global: None,
            mean_signed_global: None,
            local: Vec::new(),
            global: Vec::new(),
            duration_s,
            error: Some(error.to_string()),
            diagnostics: None,
        }
    }

    /// Scores one mapping result.
    pub fn evaluate(
        method: Method,
        samples: usize,
        set2d: &StrokeSet2D,
        output: &MappingOutput,
        duration_s: f64,
    ) -> Result<Self> {
        let local = set2d
            .strokes()
            .iter()
            .zip(&output.strokes)
            .map(|(a, b)| Ok(LocalErrorSeries { stroke_id: a.id.clone(), values: local_error(a, b)? }))
            .collect::<Result<Vec<_>>>()?;
        let global = global_error(set2d, &output.strokes)?;
        let flat = || local.iter().flat_map(|s| s.values.iter().copied());
        Ok(DeformationReport {
            method,
            samples,
            mean_abs_local: mean(flat().map(f64::abs)),
            mean_signed_local: mean(flat()),
            mean_abs_global: mean(global.iter().map(|g| g.value.abs())),
            mean_signed_global: mean(global.iter().map(|g| g.value)),
            local,
            global,
            duration_s,
            error: None,
            diagnostics: Some(output.diagnostics.clone()),
        })
    }

    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }

    /// One row per segment: `stroke,stroke_id,segment,value`.
    pub fn write_local_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "stroke,stroke_id,segment,value")?;
        for (s, series) in self.local.iter().enumerate() {
            for (i, v) in series.values.iter().enumerate() {
                writeln!(w, "{s},{},{i},{v:?}", series.stroke_id)?;
            }
        }
        Ok(())
    }

    /// One row per pair.
    pub fn write_global_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "stroke_a,point_a,stroke_b,point_b,dist_2d,dist_3d,value")?;
        for g in &self.global {
            writeln!(
                w,
                "{},{},{},{},{:?},{:?},{:?}",
                g.a.0, g.a.1, g.b.0, g.b.1, g.dist_2d, g.dist_3d, g.value
            )?;
        }
        Ok(())
    }
}

/// One benchmarked method: its report and, on success, the mapped strokes.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub report: DeformationReport,
    pub output: Option<MappingOutput>,
}

/// Maps the same strokes with each method in turn. Failures are recorded in
/// the report and the batch continues.
pub fn benchmark(surface: &SurfaceModel, strokes: &StrokeSet2D, methods: &[Method], cfg: &MappingConfig) -> Vec<MethodRun> {
    methods
        .iter()
        .map(|&method| {
            let cfg = MappingConfig { method, ..cfg.clone() };
            let t0 = Instant::now();
            let result = map_strokes(strokes, surface, &cfg);
            let duration = t0.elapsed().as_secs_f64();
            let samples = surface.samples().len();
            match result.and_then(|out| {
                let report = DeformationReport::evaluate(method, samples, strokes, &out, duration)?;
                Ok((report, out))
            }) {
                Ok((report, out)) => MethodRun { report, output: Some(out) },
                Err(e) => MethodRun { report: DeformationReport::failed(method, samples, duration, &e), output: None },
            }
        })
        .collect()
}
