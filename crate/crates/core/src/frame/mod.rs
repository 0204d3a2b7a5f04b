//! Frame ingest: depth + mask rasters, pinhole back-projection and
//! per-object point cloud extraction.

mod io;
pub mod regions;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;

pub use io::{
    load_frame, load_intrinsics, load_label_mask, save_frame, save_label_mask, DEPTH_FILE, FRUIT_MASK_FILE, INTRINSICS_FILE,
    SEMANTIC_MASK_FILE,
};
pub use regions::{label_components, remove_small_regions, Components};

/// Default minimum connected-region area, in pixels.
pub const DEFAULT_MIN_REGION_AREA: usize = 200;

/// Row-major 2-D raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Copy> Raster<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Structure(format!(
                "raster of {}x{} needs {} samples, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// Metres per depth unit.
    pub depth_scale: f64,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.cx >= 0.0
            && self.cx < self.width as f64
            && self.cy >= 0.0
            && self.cy < self.height as f64
            && self.depth_scale > 0.0
            && self.depth_scale.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Structure(format!("invalid intrinsics {self:?}")))
        }
    }
}

/// Semantic class codes as stored in `semantic_mask.png`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum SemanticClass {
    Background = 0,
    BranchTrunk = 1,
    OtherElement = 2,
}

impl SemanticClass {
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Self::Background),
            1 => Some(Self::BranchTrunk),
            2 => Some(Self::OtherElement),
            _ => None,
        }
    }
}

/// Obstacle classes that get an occupancy map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleClass {
    BranchTrunk,
    OtherElement,
}

impl ObstacleClass {
    pub const ALL: [ObstacleClass; 2] = [ObstacleClass::BranchTrunk, ObstacleClass::OtherElement];

    pub fn as_str(self) -> &'static str {
        match self {
            ObstacleClass::BranchTrunk => "branch_trunk",
            ObstacleClass::OtherElement => "other_element",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "branch_trunk" => Some(ObstacleClass::BranchTrunk),
            "other_element" => Some(ObstacleClass::OtherElement),
            _ => None,
        }
    }

    fn semantic(self) -> SemanticClass {
        match self {
            ObstacleClass::BranchTrunk => SemanticClass::BranchTrunk,
            ObstacleClass::OtherElement => SemanticClass::OtherElement,
        }
    }
}

/// One captured frame: depth in sensor units plus the two label masks.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraFrame {
    pub depth: Raster<u16>,
    /// Fruit instance ids, 0 = background.
    pub fruit_mask: Raster<u16>,
    /// Semantic class codes (see [`SemanticClass`]).
    pub semantic_mask: Raster<u8>,
    pub intrinsics: CameraIntrinsics,
}

impl CameraFrame {
    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        let dims = self.depth.dims();
        if self.fruit_mask.dims() != dims || self.semantic_mask.dims() != dims {
            return Err(Error::Structure(format!(
                "mask/depth dimensions differ: depth {:?}, fruit_mask {:?}, semantic_mask {:?}",
                dims,
                self.fruit_mask.dims(),
                self.semantic_mask.dims()
            )));
        }
        if dims != (self.intrinsics.width, self.intrinsics.height) {
            return Err(Error::Structure(format!(
                "image is {}x{} but intrinsics say {}x{}",
                dims.0, dims.1, self.intrinsics.width, self.intrinsics.height
            )));
        }
        if let Some(bad) = self
            .semantic_mask
            .as_slice()
            .iter()
            .find(|&&c| SemanticClass::from_code(c).is_none())
        {
            return Err(Error::Structure(format!("unknown semantic label {bad}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CloudLabel {
    Fruit(u16),
    Obstacle(ObstacleClass),
}

/// Labelled point set for one fruit instance or one obstacle class.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectCloud {
    pub points: Vec<Point3>,
    pub label: CloudLabel,
    /// Pixels of the cleaned mask region, including depth holes.
    pub source_pixel_count: usize,
}

impl ObjectCloud {
    pub fn new(label: CloudLabel, points: Vec<Point3>) -> Self {
        let source_pixel_count = points.len();
        Self {
            points,
            label,
            source_pixel_count,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same label and provenance, different points.
    pub fn with_points(&self, points: Vec<Point3>) -> Self {
        Self {
            points,
            label: self.label,
            source_pixel_count: self.source_pixel_count,
        }
    }
}

/// Pinhole back-projection of pixel `(u, v)` with depth `d` (sensor units).
///
/// Returns `None` for `d <= 0`, the "no depth" marker. `d` is a float so
/// unquantized depth from the synthetic renderer can be projected too.
pub fn backproject(u: f64, v: f64, d: f64, intr: &CameraIntrinsics) -> Option<Point3> {
    if d <= 0.0 || !d.is_finite() {
        return None;
    }
    let z = d * intr.depth_scale;
    Some(Point3::new(
        (u - intr.cx) * z / intr.fx,
        (v - intr.cy) * z / intr.fy,
        z,
    ))
}

/// Splits a frame into one cloud per fruit instance plus one cloud per
/// obstacle class.
///
/// Fruit clouds come first in ascending instance id, followed by branch/trunk
/// and other-element (always present, possibly empty). Fruit pixels never
/// reach obstacle clouds, and zero-depth pixels are skipped.
pub fn extract_clouds(frame: &CameraFrame, min_region_area: usize) -> Result<Vec<ObjectCloud>> {
    frame.validate()?;
    let intr = &frame.intrinsics;
    let (w, h) = frame.depth.dims();

    let mut fruit_ids: BTreeMap<u16, ()> = BTreeMap::new();
    for &id in frame.fruit_mask.as_slice() {
        if id != 0 {
            fruit_ids.insert(id, ());
        }
    }

    let collect = |mask: &Raster<bool>, label: CloudLabel| {
        let mut points = Vec::new();
        let mut pixels = 0usize;
        for y in 0..h {
            for x in 0..w {
                if !mask.get(x, y) {
                    continue;
                }
                pixels += 1;
                if let Some(p) = backproject(x as f64, y as f64, frame.depth.get(x, y) as f64, intr) {
                    points.push(p);
                }
            }
        }
        ObjectCloud {
            points,
            label,
            source_pixel_count: pixels,
        }
    };

    let mut clouds = Vec::new();
    for &id in fruit_ids.keys() {
        let mask = remove_small_regions(&frame.fruit_mask.map(|v| v == id), min_region_area);
        if mask.as_slice().iter().any(|&b| b) {
            clouds.push(collect(&mask, CloudLabel::Fruit(id)));
        }
    }

    for class in ObstacleClass::ALL {
        let code = class.semantic() as u8;
        let raw = Raster::from_vec(
            w,
            h,
            frame
                .semantic_mask
                .as_slice()
                .iter()
                .zip(frame.fruit_mask.as_slice())
                .map(|(&s, &f)| s == code && f == 0)
                .collect(),
        )?;
        let mask = remove_small_regions(&raw, min_region_area);
        clouds.push(collect(&mask, CloudLabel::Obstacle(class)));
    }
    Ok(clouds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intr(w: usize, h: usize) -> CameraIntrinsics {
        CameraIntrinsics {
            fx: 400.0,
            fy: 400.0,
            cx: w as f64 / 2.0,
            cy: h as f64 / 2.0,
            width: w,
            height: h,
            depth_scale: 0.001,
        }
    }

    #[test]
    fn principal_ray() {
        let i = intr(640, 480);
        let p = backproject(i.cx, i.cy, 1000.0, &i).unwrap();
        assert_eq!(p, Point3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn forty_five_degree_ray() {
        let i = intr(640, 480);
        let p = backproject(i.cx + i.fx, i.cy, 1000.0, &i).unwrap();
        assert!((p.x - 1.0).abs() < 1e-12 && p.y == 0.0 && p.z == 1.0);
    }

    #[test]
    fn zero_depth_is_a_hole() {
        assert!(backproject(1.0, 1.0, 0.0, &intr(4, 4)).is_none());
    }

    fn blank(w: usize, h: usize) -> CameraFrame {
        CameraFrame {
            depth: Raster::filled(w, h, 0),
            fruit_mask: Raster::filled(w, h, 0),
            semantic_mask: Raster::filled(w, h, 0),
            intrinsics: intr(w, h),
        }
    }

    #[test]
    fn single_fruit_gives_two_empty_obstacle_clouds() {
        let mut f = blank(40, 30);
        for y in 5..25 {
            for x in 5..25 {
                f.fruit_mask.set(x, y, 7);
                f.depth.set(x, y, 500);
            }
        }
        let clouds = extract_clouds(&f, 200).unwrap();
        assert_eq!(clouds.len(), 3);
        assert_eq!(clouds[0].label, CloudLabel::Fruit(7));
        assert_eq!(clouds[0].len(), 400);
        assert!(clouds[1].is_empty() && clouds[2].is_empty());
        assert_eq!(clouds[1].label, CloudLabel::Obstacle(ObstacleClass::BranchTrunk));
    }

    #[test]
    fn fruit_wins_label_conflicts() {
        let mut f = blank(20, 20);
        for y in 0..20 {
            for x in 0..20 {
                f.depth.set(x, y, 800);
                f.semantic_mask.set(x, y, 1);
            }
        }
        for y in 0..10 {
            for x in 0..20 {
                f.fruit_mask.set(x, y, 1);
            }
        }
        let clouds = extract_clouds(&f, 1).unwrap();
        assert_eq!(clouds[0].len(), 200);
        assert_eq!(clouds[1].len(), 200);
        let fruit: std::collections::HashSet<_> =
            clouds[0].points.iter().map(|p| (p.x.to_bits(), p.y.to_bits())).collect();
        assert!(clouds[1].points.iter().all(|p| !fruit.contains(&(p.x.to_bits(), p.y.to_bits()))));
    }

    #[test]
    fn holes_are_skipped_but_counted_as_source_pixels() {
        let mut f = blank(10, 10);
        for y in 0..10 {
            for x in 0..10 {
                f.fruit_mask.set(x, y, 2);
                if x != 0 {
                    f.depth.set(x, y, 300);
                }
            }
        }
        let clouds = extract_clouds(&f, 0).unwrap();
        assert_eq!(clouds[0].len(), 90);
        assert_eq!(clouds[0].source_pixel_count, 100);
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let mut f = blank(10, 10);
        f.semantic_mask = Raster::filled(10, 9, 0);
        assert!(matches!(extract_clouds(&f, 0), Err(Error::Structure(_))));
    }

    #[test]
    fn unknown_semantic_code_rejected() {
        let mut f = blank(4, 4);
        f.semantic_mask.set(1, 1, 9);
        assert!(f.validate().is_err());
    }
}
