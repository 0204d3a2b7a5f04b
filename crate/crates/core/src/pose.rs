//! Approach pose from the angular distribution of visible fruit points.
//!
//! All inputs are work-frame coordinates: X points from the fruit back
//! toward the camera, Z is up. Azimuth `theta` is measured about Z from X,
//! elevation `phi` from the XY plane.

use std::f64::consts::FRAC_PI_3;

use nalgebra::Matrix3;
use thiserror::Error;

use crate::geometry::Point3;
use crate::hough::Sphere;

/// Default symmetric limit on both pose angles.
pub const DEFAULT_ANGLE_LIMIT: f64 = FRAC_PI_3;

/// Points closer than this to the centre have no usable direction.
pub const MIN_OFFSET: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PoseError {
    #[error("point coincides with the centre")]
    DegeneratePoint,
    #[error("no point has a usable direction from the centre")]
    NoUsablePoints,
}

/// Azimuth and elevation of `p` as seen from `c`.
pub fn point_angles(p: Point3, c: Point3) -> Result<(f64, f64), PoseError> {
    let d = p - c;
    if d.norm() < MIN_OFFSET {
        return Err(PoseError::DegeneratePoint);
    }
    let r_xy = d.x.hypot(d.y);
    Ok((d.y.atan2(d.x), d.z.atan2(r_xy)))
}

/// `Rz(theta) * Ry(phi)` written out element by element.
pub fn rotation_matrix(theta: f64, phi: f64) -> Matrix3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Matrix3::new(
        ct * cp, -st, ct * sp, //
        st * cp, ct, st * sp, //
        -sp, 0.0, cp,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FruitPose {
    pub theta: f64,
    pub phi: f64,
    pub rotation: Matrix3<f64>,
    /// Mean angles before clamping.
    pub raw_theta: f64,
    pub raw_phi: f64,
    /// Points that contributed (non-degenerate).
    pub used_points: usize,
}

impl FruitPose {
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self {
            theta,
            phi,
            rotation: rotation_matrix(theta, phi),
            raw_theta: theta,
            raw_phi: phi,
            used_points: 0,
        }
    }

    /// Unit vector from the fruit centre toward the unblocked side.
    pub fn approach_direction(&self) -> Point3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Point3::new(ct * cp, st * cp, sp)
    }

    pub fn rotation_rows(&self) -> [[f64; 3]; 3] {
        let m = &self.rotation;
        std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]))
    }
}

/// Mean point angles about the sphere centre, each clamped to
/// `[-angle_limit, angle_limit]`.
pub fn estimate_pose(points: &[Point3], sphere: &Sphere, angle_limit: f64) -> Result<FruitPose, PoseError> {
    let (mut sum_t, mut sum_p, mut n) = (0.0, 0.0, 0usize);
    for &p in points {
        if let Ok((t, f)) = point_angles(p, sphere.center) {
            sum_t += t;
            sum_p += f;
            n += 1;
        }
    }
    if n == 0 {
        return Err(PoseError::NoUsablePoints);
    }
    let raw_theta = sum_t / n as f64;
    let raw_phi = sum_p / n as f64;
    let theta = raw_theta.clamp(-angle_limit, angle_limit);
    let phi = raw_phi.clamp(-angle_limit, angle_limit);
    Ok(FruitPose {
        theta,
        phi,
        rotation: rotation_matrix(theta, phi),
        raw_theta,
        raw_phi,
        used_points: n,
    })
}
