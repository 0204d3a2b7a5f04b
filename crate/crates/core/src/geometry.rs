//! Points, vectors and the camera-to-work-frame rotation.

use std::ops::{Add, Mul, Sub};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point (or displacement) in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn normalized(self) -> Point3 {
        self * (1.0 / self.norm())
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(v: [f64; 3]) -> Self {
        Point3::new(v[0], v[1], v[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        p.to_array()
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Fixed rotation taking camera-frame vectors into the work frame.
///
/// Both frames share the camera centre as origin, so the same rotation maps
/// points and displacements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkFrame {
    rotation: Matrix3<f64>,
}

impl WorkFrame {
    /// X_W = -Z_cam, Y_W = X_cam, Z_W = -Y_cam: X points from the scene back
    /// toward the camera and Z is up for a level camera.
    pub fn camera_default() -> Self {
        Self {
            rotation: Matrix3::new(
                0.0, 0.0, -1.0, //
                1.0, 0.0, 0.0, //
                0.0, -1.0, 0.0,
            ),
        }
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
        }
    }

    /// Builds a work frame from row-major rotation rows, checking that the
    /// matrix is a proper rotation.
    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        let m = Matrix3::from_fn(|r, c| rows[r][c]);
        let ortho = (m.transpose() * m - Matrix3::identity()).amax();
        if !m.iter().all(|v| v.is_finite()) || ortho > 1e-9 || (m.determinant() - 1.0).abs() > 1e-9
        {
            return Err(Error::Config(
                "work_frame must be a proper rotation (orthonormal, det +1)".into(),
            ));
        }
        Ok(Self { rotation: m })
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let m = &self.rotation;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn to_work(&self, p: Point3) -> Point3 {
        let m = &self.rotation;
        Point3::new(
            m[(0, 0)] * p.x + m[(0, 1)] * p.y + m[(0, 2)] * p.z,
            m[(1, 0)] * p.x + m[(1, 1)] * p.y + m[(1, 2)] * p.z,
            m[(2, 0)] * p.x + m[(2, 1)] * p.y + m[(2, 2)] * p.z,
        )
    }

    pub fn to_camera(&self, p: Point3) -> Point3 {
        let m = &self.rotation;
        Point3::new(
            m[(0, 0)] * p.x + m[(1, 0)] * p.y + m[(2, 0)] * p.z,
            m[(0, 1)] * p.x + m[(1, 1)] * p.y + m[(2, 1)] * p.z,
            m[(0, 2)] * p.x + m[(1, 2)] * p.y + m[(2, 2)] * p.z,
        )
    }
}

impl Default for WorkFrame {
    fn default() -> Self {
        Self::camera_default()
    }
}
