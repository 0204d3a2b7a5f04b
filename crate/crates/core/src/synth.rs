//! Synthetic frames with known geometry: fruits are spheres, branches are
//! capped cylinders and other elements are axis-aligned boxes, all in the
//! camera frame. Every pixel ray is intersected analytically.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::frame::{backproject, save_frame, CameraFrame, CameraIntrinsics, Raster, SemanticClass};
use crate::geometry::{Point3, WorkFrame};
use crate::pose::point_angles;

pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FruitSpec {
    pub id: u16,
    pub center: Point3,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub start: Point3,
    pub end: Point3,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub min: Point3,
    pub max: Point3,
}

fn default_work_frame() -> [[f64; 3]; 3] {
    WorkFrame::camera_default().rows()
}

/// Scene description; positions are camera-frame metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub intrinsics: CameraIntrinsics,
    #[serde(default)]
    pub depth_noise_sigma: f64,
    /// Camera-to-work rotation rows.
    #[serde(default = "default_work_frame")]
    pub work_frame: [[f64; 3]; 3],
    #[serde(default)]
    pub fruits: Vec<FruitSpec>,
    #[serde(default)]
    pub branches: Vec<BranchSpec>,
    #[serde(default)]
    pub boxes: Vec<BoxSpec>,
}

impl SceneSpec {
    pub fn new(intrinsics: CameraIntrinsics) -> Self {
        Self {
            intrinsics,
            depth_noise_sigma: 0.0,
            work_frame: default_work_frame(),
            fruits: Vec::new(),
            branches: Vec::new(),
            boxes: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        WorkFrame::from_rows(self.work_frame)?;
        let mut ids: Vec<u16> = self.fruits.iter().map(|f| f.id).collect();
        ids.sort_unstable();
        let bad = |m: String| Err(Error::Config(m));
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("fruit ids must be unique".into());
        }
        if ids.first() == Some(&0) {
            return bad("fruit id 0 is reserved for background".into());
        }
        if self.fruits.iter().any(|f| !(f.radius > 0.0)) || self.branches.iter().any(|b| !(b.radius > 0.0)) {
            return bad("radii must be positive".into());
        }
        if self.branches.iter().any(|b| b.start.distance(b.end) <= 0.0) {
            return bad("branch endpoints must differ".into());
        }
        if !(self.depth_noise_sigma >= 0.0) {
            return bad("depth_noise_sigma must be non-negative".into());
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: SceneSpec = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        spec.validate().map_err(|e| Error::format(path, e.to_string()))?;
        Ok(spec)
    }

    pub fn work_frame(&self) -> WorkFrame {
        WorkFrame::from_rows(self.work_frame).unwrap_or_default()
    }
}

/// Ray parameter of the nearest forward hit of `origin + t * dir`.
pub fn intersect_sphere(dir: Point3, center: Point3, radius: f64) -> Option<f64> {
    let a = dir.norm_squared();
    let b = dir.dot(center);
    let c = center.norm_squared() - radius * radius;
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    [(b - s) / a, (b + s) / a].into_iter().find(|&t| t > 0.0)
}

pub fn intersect_capped_cylinder(dir: Point3, start: Point3, end: Point3, radius: f64) -> Option<f64> {
    let axis_vec = end - start;
    let len = axis_vec.norm();
    let axis = axis_vec * (1.0 / len);
    let w = Point3::ORIGIN - start;
    let d_perp = dir - axis * dir.dot(axis);
    let w_perp = w - axis * w.dot(axis);
    let mut best: Option<f64> = None;
    let mut take = |t: f64| {
        if t > 0.0 && best.is_none_or(|b| t < b) {
            best = Some(t);
        }
    };

    let a = d_perp.norm_squared();
    if a > 0.0 {
        let b = d_perp.dot(w_perp);
        let c = w_perp.norm_squared() - radius * radius;
        let disc = b * b - a * c;
        if disc >= 0.0 {
            let s = disc.sqrt();
            for t in [(-b - s) / a, (-b + s) / a] {
                let h = (w + dir * t).dot(axis);
                if (0.0..=len).contains(&h) {
                    take(t);
                }
            }
        }
    }
    let dn = dir.dot(axis);
    if dn != 0.0 {
        for cap in [start, end] {
            let t = (cap - Point3::ORIGIN).dot(axis) / dn;
            let q = dir * t - cap;
            if (q - axis * q.dot(axis)).norm_squared() <= radius * radius {
                take(t);
            }
        }
    }
    best
}

pub fn intersect_box(dir: Point3, min: Point3, max: Point3) -> Option<f64> {
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for (d, lo, hi) in [(dir.x, min.x, max.x), (dir.y, min.y, max.y), (dir.z, min.z, max.z)] {
        if d == 0.0 {
            if !(lo..=hi).contains(&0.0) {
                return None;
            }
            continue;
        }
        let (a, b) = (lo / d, hi / d);
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    if t0 > t1 || t1 <= 0.0 {
        return None;
    }
    Some(if t0 > 0.0 { t0 } else { t1 })
}

/// What a pixel ray hit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    None,
    Fruit(u16),
    Branch(usize),
    Box(usize),
}

/// Camera-frame ray through pixel centre `(u, v)`, scaled so its depth
/// component is 1.
pub fn pixel_ray(u: usize, v: usize, intr: &CameraIntrinsics) -> Point3 {
    Point3::new((u as f64 - intr.cx) / intr.fx, (v as f64 - intr.cy) / intr.fy, 1.0)
}

/// Nearest surface along a depth-normalised ray; the returned parameter is
/// the depth of the hit.
pub fn cast(spec: &SceneSpec, dir: Point3) -> (Surface, f64) {
    let mut best = (Surface::None, f64::INFINITY);
    let mut offer = |s: Surface, t: Option<f64>| {
        if let Some(t) = t {
            if t < best.1 {
                best = (s, t);
            }
        }
    };
    for f in &spec.fruits {
        offer(Surface::Fruit(f.id), intersect_sphere(dir, f.center, f.radius));
    }
    for (i, b) in spec.branches.iter().enumerate() {
        offer(Surface::Branch(i), intersect_capped_cylinder(dir, b.start, b.end, b.radius));
    }
    for (i, b) in spec.boxes.iter().enumerate() {
        offer(Surface::Box(i), intersect_box(dir, b.min, b.max));
    }
    best
}

/// Render output before depth quantisation.
#[derive(Debug, Clone)]
pub struct RenderedFrame {
    pub intrinsics: CameraIntrinsics,
    /// Exact hit depth in metres, 0 where nothing was hit.
    pub clean_depth: Raster<f64>,
    /// `clean_depth` plus noise, clamped at 0.
    pub depth: Raster<f64>,
    pub surfaces: Raster<SurfaceCode>,
}

/// Compact per-pixel surface tag: 0 none, fruit ids as-is in the low
/// 16 bits, branches and boxes tagged in the high bits.
pub type SurfaceCode = u32;

const BRANCH_TAG: u32 = 1 << 16;
const BOX_TAG: u32 = 2 << 16;

fn encode(s: Surface) -> SurfaceCode {
    match s {
        Surface::None => 0,
        Surface::Fruit(id) => id as u32,
        Surface::Branch(i) => BRANCH_TAG | i as u32,
        Surface::Box(i) => BOX_TAG | i as u32,
    }
}

pub fn decode(code: SurfaceCode) -> Surface {
    match code >> 16 {
        0 if code == 0 => Surface::None,
        0 => Surface::Fruit(code as u16),
        1 => Surface::Branch((code & 0xffff) as usize),
        _ => Surface::Box((code & 0xffff) as usize),
    }
}

/// Casts every pixel ray. Noise is seeded per pixel (stream = pixel index),
/// so the result does not depend on scheduling.
pub fn render(spec: &SceneSpec, seed: u64) -> Result<RenderedFrame> {
    spec.validate()?;
    let intr = spec.intrinsics;
    let (w, h) = (intr.width, intr.height);
    let noise = (spec.depth_noise_sigma > 0.0)
        .then(|| Normal::new(0.0, spec.depth_noise_sigma).expect("finite sigma"));

    let rows: Vec<Vec<(SurfaceCode, f64, f64)>> = (0..h)
        .into_par_iter()
        .map(|v| {
            (0..w)
                .map(|u| {
                    let (surface, t) = cast(spec, pixel_ray(u, v, &intr));
                    if surface == Surface::None {
                        return (0, 0.0, 0.0);
                    }
                    let noisy = match &noise {
                        Some(n) => {
                            let mut rng = ChaCha8Rng::seed_from_u64(seed);
                            rng.set_stream((v * w + u) as u64);
                            (t + n.sample(&mut rng)).max(0.0)
                        }
                        None => t,
                    };
                    (encode(surface), t, noisy)
                })
                .collect()
        })
        .collect();

    let flat: Vec<_> = rows.into_iter().flatten().collect();
    Ok(RenderedFrame {
        intrinsics: intr,
        clean_depth: Raster::from_vec(w, h, flat.iter().map(|p| p.1).collect())?,
        depth: Raster::from_vec(w, h, flat.iter().map(|p| p.2).collect())?,
        surfaces: Raster::from_vec(w, h, flat.iter().map(|p| p.0).collect())?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum VisibilityError {
    #[error("fruit {0} has no visible pixel")]
    NotVisible(u16),
}

impl RenderedFrame {
    /// Quantises depth to sensor units and derives the label masks.
    pub fn to_camera_frame(&self) -> CameraFrame {
        let scale = self.intrinsics.depth_scale;
        let depth = self.depth.map(|d| (d / scale).round().clamp(0.0, u16::MAX as f64) as u16);
        let fruit_mask = self.surfaces.map(|c| match decode(c) {
            Surface::Fruit(id) => id,
            _ => 0,
        });
        let semantic_mask = self.surfaces.map(|c| match decode(c) {
            Surface::Branch(_) => SemanticClass::BranchTrunk as u8,
            Surface::Box(_) => SemanticClass::OtherElement as u8,
            _ => SemanticClass::Background as u8,
        });
        CameraFrame {
            depth,
            fruit_mask,
            semantic_mask,
            intrinsics: self.intrinsics,
        }
    }

    /// Exact (noise-free) camera-frame points of the pixels showing `fruit`.
    pub fn visible_points(&self, fruit: u16) -> Vec<Point3> {
        let exact = CameraIntrinsics {
            depth_scale: 1.0,
            ..self.intrinsics
        };
        let mut out = Vec::new();
        for v in 0..self.intrinsics.height {
            for u in 0..self.intrinsics.width {
                if decode(self.surfaces.get(u, v)) == Surface::Fruit(fruit) {
                    if let Some(p) = backproject(u as f64, v as f64, self.clean_depth.get(u, v), &exact) {
                        out.push(p);
                    }
                }
            }
        }
        out
    }

    /// Mean work-frame `(theta, phi)` of the visible pixels of `fruit` about
    /// its true centre.
    pub fn visible_angles(&self, spec: &SceneSpec, fruit: u16) -> std::result::Result<(f64, f64, usize), VisibilityError> {
        let f = spec
            .fruits
            .iter()
            .find(|f| f.id == fruit)
            .ok_or(VisibilityError::NotVisible(fruit))?;
        let wf = spec.work_frame();
        let pts = self.visible_points(fruit);
        if pts.is_empty() {
            return Err(VisibilityError::NotVisible(fruit));
        }
        let (mut st, mut sp) = (0.0, 0.0);
        let mut n = 0usize;
        for p in &pts {
            if let Ok((t, ph)) = point_angles(wf.to_work(*p - f.center), Point3::ORIGIN) {
                st += t;
                sp += ph;
                n += 1;
            }
        }
        Ok((st / n as f64, sp / n as f64, pts.len()))
    }
}

/// Ground-truth mean visible angles of one fruit (noise-free render).
pub fn analytic_visible_angles(spec: &SceneSpec, fruit: u16) -> Result<std::result::Result<(f64, f64), VisibilityError>> {
    let clean = SceneSpec {
        depth_noise_sigma: 0.0,
        ..spec.clone()
    };
    let r = render(&clean, 0)?;
    Ok(r.visible_angles(spec, fruit).map(|(t, p, _)| (t, p)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FruitTruth {
    pub id: u16,
    pub center_m: Point3,
    pub center_work_m: Point3,
    pub radius_m: f64,
    pub visible_pixels: usize,
    pub visible_theta_rad: Option<f64>,
    pub visible_phi_rad: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub depth_noise_sigma: f64,
    pub intrinsics: CameraIntrinsics,
    pub work_frame: [[f64; 3]; 3],
    pub fruits: Vec<FruitTruth>,
    pub branches: Vec<BranchSpec>,
    pub boxes: Vec<BoxSpec>,
}

pub fn ground_truth(spec: &SceneSpec, seed: u64, rendered: &RenderedFrame) -> GroundTruth {
    let wf = spec.work_frame();
    let clean = if spec.depth_noise_sigma == 0.0 {
        None
    } else {
        render(&SceneSpec { depth_noise_sigma: 0.0, ..spec.clone() }, 0).ok()
    };
    let base = clean.as_ref().unwrap_or(rendered);
    GroundTruth {
        seed,
        depth_noise_sigma: spec.depth_noise_sigma,
        intrinsics: spec.intrinsics,
        work_frame: spec.work_frame,
        fruits: spec
            .fruits
            .iter()
            .map(|f| {
                let vis = base.visible_angles(spec, f.id).ok();
                FruitTruth {
                    id: f.id,
                    center_m: f.center,
                    center_work_m: wf.to_work(f.center),
                    radius_m: f.radius,
                    visible_pixels: vis.map_or(0, |v| v.2),
                    visible_theta_rad: vis.map(|v| v.0),
                    visible_phi_rad: vis.map(|v| v.1),
                }
            })
            .collect(),
        branches: spec.branches.clone(),
        boxes: spec.boxes.clone(),
    }
}

/// Renders `spec` and writes a frame directory plus `ground_truth.json`.
pub fn render_frame(spec: &SceneSpec, seed: u64, out_dir: &Path) -> Result<GroundTruth> {
    let rendered = render(spec, seed)?;
    save_frame(&rendered.to_camera_frame(), out_dir)?;
    let gt = ground_truth(spec, seed, &rendered);
    let path = out_dir.join(GROUND_TRUTH_FILE);
    let json = serde_json::to_string_pretty(&gt).expect("ground truth serializes");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(gt)
}

/// A 640x480 camera with an 80-pixel-wide image of a 40 mm-radius fruit at
/// 0.4 m, millimetre depth units.
pub fn vga_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics {
        fx: 400.0,
        fy: 400.0,
        cx: 320.0,
        cy: 240.0,
        width: 640,
        height: 480,
        depth_scale: 0.001,
    }
}
