//! Built-in analytic benchmark cases with lattice strokes.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mapping::{lattice, Box2, StrokeSet2D};
use crate::surface::{generators, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// 90 × 90 mm grid at z = 0 with 1 mm spacing.
    Plane,
    /// 100 mm cube without its bottom face.
    Box,
    /// Half-cylinder of radius 50 mm and length 100 mm (bounding box
    /// 100 × 100 × 50), 180 vertices around each end.
    Cylinder,
    /// Hemisphere of radius 50 mm, 180 × 180 grid.
    Hemisphere,
}

impl Shape {
    pub const ALL: [Shape; 4] = [Shape::Plane, Shape::Box, Shape::Cylinder, Shape::Hemisphere];

    pub fn name(&self) -> &'static str {
        match self {
            Shape::Plane => "plane",
            Shape::Box => "box",
            Shape::Cylinder => "cylinder",
            Shape::Hemisphere => "sphere",
        }
    }

    pub fn mesh(&self) -> Result<TriangleMesh> {
        match self {
            Shape::Plane => generators::plane_grid(90.0, 90.0, 1.0),
            Shape::Box => generators::box_mesh(100.0, 100.0, 100.0, true),
            Shape::Cylinder => generators::half_cylinder(50.0, 100.0, 180, 2),
            Shape::Hemisphere => generators::hemisphere(50.0, 180, 180),
        }
    }

    /// Drawing region side length in mm.
    pub fn region(&self) -> f64 {
        match self {
            Shape::Hemisphere => 60.0,
            _ => 80.0,
        }
    }

    /// Lattice of horizontal then vertical strokes covering the region
    /// centered on the origin: 9 + 9 strokes of 81 points, or 7 + 7 of 61
    /// on the hemisphere.
    pub fn strokes(&self) -> Result<StrokeSet2D> {
        let side = self.region();
        let (lines, points) = match self {
            Shape::Hemisphere => (7, 61),
            _ => (9, 81),
        };
        lattice(Box2::centered(side, side), lines, lines, points)
    }
}

impl std::str::FromStr for Shape {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        Shape::ALL
            .into_iter()
            .find(|shape| shape.name() == s || (s == "hemisphere" && *shape == Shape::Hemisphere))
            .ok_or_else(|| crate::error::Error::InvalidArgument(format!("unknown built-in surface {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_shapes() {
        let s = Shape::Cylinder.strokes().unwrap();
        assert_eq!(s.strokes().len(), 18);
        assert_eq!(s.point_count(), 18 * 81);
        let s = Shape::Hemisphere.strokes().unwrap();
        assert_eq!(s.strokes().len(), 14);
        assert!(s.strokes().iter().all(|st| st.points.len() == 61));
    }

    #[test]
    fn mesh_sizes() {
        assert_eq!(Shape::Cylinder.mesh().unwrap().vertices().len(), 360);
        assert_eq!(Shape::Plane.mesh().unwrap().vertices().len(), 91 * 91);
        assert_eq!("hemisphere".parse::<Shape>().unwrap(), Shape::Hemisphere);
    }
}
