//! Mapping of 2D drawing strokes onto 3D surfaces, deformation metrics, and
//! pen-pose trajectories.

pub mod error;
pub mod geometry;
pub mod grid;
pub mod kdtree;
pub mod mapping;
pub mod metrics;
pub mod sparse;
pub mod suite;
pub mod surface;
pub mod trajectory;

pub use error::{Error, Result};
pub use geometry::{Point2, Point3, RigidTransform, UnitQuaternion, UnitVector3, Vector2, Vector3};
pub use mapping::{map_strokes, MappingConfig, Method, Stroke2D, Stroke3D, StrokeSet2D};
pub use surface::{SurfaceModel, TriangleMesh};
pub use trajectory::{PenPose, PoseTrajectory};
