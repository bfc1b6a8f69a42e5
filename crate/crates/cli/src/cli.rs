//! Command-line arguments and their mapping onto the pipeline config.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use surfdraw_core::Method;

use crate::config::{PipelineConfig, StrokeSource, SurfaceSpec};
use crate::error::{CliError, CliResult};

pub const LONG_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (output format 1)");

#[derive(Debug, Parser)]
#[command(name = "surfdraw", version = LONG_VERSION, about = "Map 2D drawing strokes onto 3D surfaces and plan pen trajectories")]
pub struct Cli {
    /// JSON pipeline config; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for surface sampling (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default: config `out`, then $SURFDRAW_OUT, then ./surfdraw-out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct InputArgs {
    /// Mesh (.obj, .ply) or point cloud (.xyz) file.
    #[arg(long, conflicts_with = "builtin")]
    pub surface: Option<PathBuf>,
    /// Treat a .ply surface as a point cloud.
    #[arg(long)]
    pub pointcloud: bool,
    /// Built-in surface: plane, box, cylinder or hemisphere.
    #[arg(long)]
    pub builtin: Option<String>,
    /// JSON stroke file.
    #[arg(long)]
    pub strokes: Option<PathBuf>,
    /// Random surface samples added to mesh vertices.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Map strokes with each method and write error reports.
    Map {
        #[command(flatten)]
        input: InputArgs,
        /// Mapping method (baseline, DI, EI, SI, II); repeatable.
        #[arg(long = "method")]
        methods: Vec<Method>,
    },
    /// Build densified pen-pose trajectories, one per color tag.
    Trajectory {
        #[command(flatten)]
        input: InputArgs,
        /// Mapped strokes (`strokes3d.json`) to use instead of mapping.
        #[arg(long)]
        mapped: Option<PathBuf>,
        /// Mapping method used when strokes are mapped inline (default EI).
        #[arg(long)]
        method: Option<Method>,
        /// Pen-up height above the surface, mm.
        #[arg(long)]
        standoff: Option<f64>,
        /// Largest orientation change between poses, degrees.
        #[arg(long)]
        max_step_angle: Option<f64>,
        /// Largest tip travel between poses, mm.
        #[arg(long)]
        max_step_dist: Option<f64>,
    },
    /// Flag tip deviations against a planned trajectory and insert lifts.
    Recover {
        /// Trajectory JSON written by `trajectory`.
        #[arg(long)]
        planned: PathBuf,
        /// Measured tip positions (JSON list or x,y,z CSV), one per pen-down pose.
        #[arg(long)]
        measured: PathBuf,
        /// Deviation in mm that triggers a skip.
        #[arg(long)]
        threshold: Option<f64>,
        /// Lift height in mm.
        #[arg(long)]
        lift: Option<f64>,
    },
    /// Sample the camera-facing part of a mesh into a PLY template.
    Template {
        #[command(flatten)]
        input: InputArgs,
        /// Sensor position `x,y,z` in mm.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        sensor: Option<Vec<f64>>,
    },
    /// Run the benchmark cells and write a consolidated table.
    Bench {
        /// Random surface samples per mesh.
        #[arg(long)]
        samples: Option<usize>,
        /// Restrict the built-in suite to these methods; repeatable.
        #[arg(long = "method")]
        methods: Vec<Method>,
    },
}

impl InputArgs {
    fn apply(&self, cfg: &mut PipelineConfig) -> CliResult<()> {
        if let Some(p) = &self.surface {
            cfg.surface = Some(if self.pointcloud {
                SurfaceSpec::Pointcloud { path: p.clone(), viewpoint: [0.0, 0.0, 1e4] }
            } else {
                SurfaceSpec::from_path(p.clone())
            });
        }
        if let Some(name) = &self.builtin {
            let spec = SurfaceSpec::Builtin { name: name.clone() };
            spec.shape()?;
            cfg.surface = Some(spec);
        }
        if let Some(p) = &self.strokes {
            cfg.strokes = Some(StrokeSource::File { path: p.clone() });
        }
        if let Some(n) = self.samples {
            cfg.mapping.sample_count = n;
        }
        Ok(())
    }
}

impl Cli {
    /// Config file (if any) with flags applied on top.
    pub fn pipeline_config(&self) -> CliResult<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::read(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        match &self.command {
            Command::Map { input, methods } => {
                input.apply(&mut cfg)?;
                if !methods.is_empty() {
                    cfg.methods = methods.clone();
                }
            }
            Command::Trajectory { input, method, standoff, max_step_angle, max_step_dist, .. } => {
                input.apply(&mut cfg)?;
                let t = &mut cfg.trajectory;
                t.method = method.unwrap_or(t.method);
                t.standoff = standoff.unwrap_or(t.standoff);
                t.max_step_angle_deg = max_step_angle.unwrap_or(t.max_step_angle_deg);
                t.max_step_dist = max_step_dist.unwrap_or(t.max_step_dist);
            }
            Command::Recover { threshold, lift, .. } => {
                let t = &mut cfg.trajectory;
                t.threshold = threshold.unwrap_or(t.threshold);
                t.lift = lift.unwrap_or(t.lift);
            }
            Command::Template { input, sensor } => {
                input.apply(&mut cfg)?;
                if let Some(n) = input.samples {
                    cfg.template.count = n;
                }
                if let Some(s) = sensor {
                    cfg.template.sensor = s
                        .as_slice()
                        .try_into()
                        .map_err(|_| CliError::Usage("--sensor needs three coordinates".into()))?;
                }
            }
            Command::Bench { samples, methods } => {
                if let Some(n) = samples {
                    cfg.mapping.sample_count = *n;
                }
                if !methods.is_empty() {
                    cfg.methods = methods.clone();
                }
            }
        }
        Ok(cfg)
    }
}
