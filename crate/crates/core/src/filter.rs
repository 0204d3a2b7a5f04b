//! Point cloud denoising, degenerate-object rejection and voxel
//! downsampling into computation candidates.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::ObjectCloud;
use crate::geometry::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Neighbour search radius, metres.
    pub nn_radius: f64,
    /// Minimum number of other points within `nn_radius` for an inlier.
    pub min_neighbors: usize,
    /// Minimum candidate count for an object to be modelled.
    pub min_points: usize,
    /// Largest accepted ratio of bounding-box extents.
    pub max_axis_ratio: f64,
    /// Cell size of the candidate downsampling grid, metres.
    pub downsample_voxel: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            nn_radius: 0.010,
            min_neighbors: 4,
            min_points: 30,
            max_axis_ratio: 3.0,
            downsample_voxel: 0.005,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.nn_radius > 0.0
            && self.min_neighbors >= 1
            && self.min_points >= 4
            && self.max_axis_ratio >= 1.0
            && self.downsample_voxel > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid filter settings {self:?}")))
        }
    }
}

type CellKey = (i64, i64, i64);

fn cell_of(p: Point3, size: f64) -> CellKey {
    (
        (p.x / size).floor() as i64,
        (p.y / size).floor() as i64,
        (p.z / size).floor() as i64,
    )
}

/// Radius outlier removal: keeps points with at least `min_neighbors` other
/// points within `nn_radius` (closed ball). Input order is preserved.
pub fn euclidean_denoise(cloud: &ObjectCloud, cfg: &FilterConfig) -> ObjectCloud {
    let pts = &cloud.points;
    let r = cfg.nn_radius;
    let r2 = r * r;
    let mut grid: HashMap<CellKey, Vec<usize>> = HashMap::new();
    for (i, &p) in pts.iter().enumerate() {
        grid.entry(cell_of(p, r)).or_default().push(i);
    }

    let keep: Vec<bool> = pts
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let (cx, cy, cz) = cell_of(p, r);
            let mut count = 0usize;
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let Some(members) = grid.get(&(cx + dx, cy + dy, cz + dz)) else {
                            continue;
                        };
                        for &j in members {
                            if j != i && (pts[j] - p).norm_squared() <= r2 {
                                count += 1;
                                if count >= cfg.min_neighbors {
                                    return true;
                                }
                            }
                        }
                    }
                }
            }
            false
        })
        .collect();

    cloud.with_points(
        pts.iter()
            .zip(keep)
            .filter_map(|(&p, k)| k.then_some(p))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Degeneracy {
    InsufficientPoints { count: usize, min: usize },
    AxisImbalance { ratio: f64, max: f64 },
}

impl Degeneracy {
    pub fn code(&self) -> &'static str {
        match self {
            Degeneracy::InsufficientPoints { .. } => "insufficient_points",
            Degeneracy::AxisImbalance { .. } => "axis_imbalance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Accept,
    Reject(Degeneracy),
}

/// Axis-aligned extents of a cloud, `[0; 3]` when empty.
pub fn bounding_extents(points: &[Point3]) -> [f64; 3] {
    if points.is_empty() {
        return [0.0; 3];
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for (a, v) in p.to_array().into_iter().enumerate() {
            lo[a] = lo[a].min(v);
            hi[a] = hi[a].max(v);
        }
    }
    [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]]
}

/// Rejects clouds that are too small or whose bounding box is strongly
/// elongated. Extents are floored at the downsampling voxel size.
pub fn reject_degenerate(cloud: &ObjectCloud, cfg: &FilterConfig) -> Verdict {
    if cloud.len() < cfg.min_points {
        return Verdict::Reject(Degeneracy::InsufficientPoints {
            count: cloud.len(),
            min: cfg.min_points,
        });
    }
    let ext = bounding_extents(&cloud.points).map(|e| e.max(cfg.downsample_voxel));
    let max = ext.iter().copied().fold(f64::MIN, f64::max);
    let min = ext.iter().copied().fold(f64::MAX, f64::min);
    let ratio = max / min;
    if ratio > cfg.max_axis_ratio {
        Verdict::Reject(Degeneracy::AxisImbalance {
            ratio,
            max: cfg.max_axis_ratio,
        })
    } else {
        Verdict::Accept
    }
}

/// Replaces the points of each occupied grid cell by their centroid.
/// The grid is anchored at the origin; output is ordered by cell key.
pub fn voxel_downsample(cloud: &ObjectCloud, voxel: f64) -> ObjectCloud {
    let mut cells: BTreeMap<CellKey, (Point3, usize)> = BTreeMap::new();
    for &p in &cloud.points {
        let e = cells.entry(cell_of(p, voxel)).or_insert((Point3::ORIGIN, 0));
        e.0 = e.0 + p;
        e.1 += 1;
    }
    cloud.with_points(
        cells
            .into_values()
            .map(|(sum, n)| sum * (1.0 / n as f64))
            .collect(),
    )
}
