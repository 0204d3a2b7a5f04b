//! Binary voxel occupancy maps for obstacle classes.
//!
//! A map is a snapshot: the set of voxel keys that received at least one
//! point. Keys are signed integer triples relative to the map origin; voxel
//! `(i, j, k)` spans `[i*res, (i+1)*res)` on each axis.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::{ObjectCloud, ObstacleClass};
use crate::geometry::Point3;

pub const DEFAULT_RESOLUTION: f64 = 0.010;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VoxelKey {
    pub i: i32,
    pub j: i32,
    pub k: i32,
}

const MORTON_BITS: u32 = 21;
const MORTON_OFFSET: i64 = 1 << (MORTON_BITS - 1);

fn spread_bits(v: u64) -> u64 {
    let mut x = v & 0x1f_ffff;
    x = (x | x << 32) & 0x1f00000000ffff;
    x = (x | x << 16) & 0x1f0000ff0000ff;
    x = (x | x << 8) & 0x100f00f00f00f00f;
    x = (x | x << 4) & 0x10c30c30c30c30c3;
    x = (x | x << 2) & 0x1249249249249249;
    x
}

impl VoxelKey {
    pub const fn new(i: i32, j: i32, k: i32) -> Self {
        Self { i, j, k }
    }

    pub fn containing(p: Point3, resolution: f64) -> Self {
        Self {
            i: (p.x / resolution).floor() as i32,
            j: (p.y / resolution).floor() as i32,
            k: (p.z / resolution).floor() as i32,
        }
    }

    pub fn center(self, resolution: f64) -> Point3 {
        Point3::new(
            (self.i as f64 + 0.5) * resolution,
            (self.j as f64 + 0.5) * resolution,
            (self.k as f64 + 0.5) * resolution,
        )
    }

    /// 63-bit Morton (Z-order) code; keys are offset into 21 unsigned bits
    /// per axis, so `|coordinate| < 2^20` is required.
    pub fn morton(self) -> Option<u64> {
        let enc = |c: i32| {
            let v = c as i64 + MORTON_OFFSET;
            (0..(1i64 << MORTON_BITS)).contains(&v).then_some(v as u64)
        };
        let (x, y, z) = (enc(self.i)?, enc(self.j)?, enc(self.k)?);
        Some(spread_bits(x) | spread_bits(y) << 1 | spread_bits(z) << 2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMap {
    resolution: f64,
    class: ObstacleClass,
    occupied: BTreeSet<VoxelKey>,
}

/// One voxel returned by [`OccupancyMap::query_radius`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelHit {
    pub key: VoxelKey,
    pub center: Point3,
    pub distance: f64,
}

impl OccupancyMap {
    pub fn new(resolution: f64, class: ObstacleClass) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::Config(format!("map resolution must be positive, got {resolution}")));
        }
        Ok(Self {
            resolution,
            class,
            occupied: BTreeSet::new(),
        })
    }

    pub fn from_points<'a>(
        points: impl IntoIterator<Item = &'a Point3>,
        resolution: f64,
        class: ObstacleClass,
    ) -> Result<Self> {
        let mut map = Self::new(resolution, class)?;
        for &p in points {
            map.occupied.insert(VoxelKey::containing(p, resolution));
        }
        Ok(map)
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn class(&self) -> ObstacleClass {
        self.class
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn contains(&self, key: VoxelKey) -> bool {
        self.occupied.contains(&key)
    }

    pub fn insert(&mut self, key: VoxelKey) -> bool {
        self.occupied.insert(key)
    }

    /// Occupied keys in ascending key order.
    pub fn keys(&self) -> impl Iterator<Item = VoxelKey> + '_ {
        self.occupied.iter().copied()
    }

    /// Occupied voxels whose centre lies in the closed ball around `center`,
    /// nearest first, ties in key order.
    pub fn query_radius(&self, center: Point3, radius: f64) -> Vec<VoxelHit> {
        let r2 = radius * radius;
        let res = self.resolution;
        let mut hits = Vec::new();
        let mut consider = |key: VoxelKey| {
            let c = key.center(res);
            let d2 = (c - center).norm_squared();
            if d2 <= r2 {
                hits.push(VoxelHit {
                    key,
                    center: c,
                    distance: d2.sqrt(),
                });
            }
        };

        let lo = VoxelKey::containing(center - Point3::new(radius, radius, radius), res);
        let hi = VoxelKey::containing(center + Point3::new(radius, radius, radius), res);
        let span = |a: i32, b: i32| (b as i64 - a as i64 + 1) as u128;
        let probes = span(lo.i, hi.i) * span(lo.j, hi.j) * span(lo.k, hi.k);
        if probes < self.occupied.len() as u128 {
            for i in lo.i..=hi.i {
                for j in lo.j..=hi.j {
                    for k in lo.k..=hi.k {
                        let key = VoxelKey::new(i, j, k);
                        if self.occupied.contains(&key) {
                            consider(key);
                        }
                    }
                }
            }
        } else {
            self.occupied.iter().copied().for_each(&mut consider);
        }
        hits.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.key.cmp(&b.key)));
        hits
    }

    /// Text serialization: a `voxmap v1 <res> <class> <count>` header
    /// followed by one `x y z` voxel centre per line (6 decimals).
    pub fn to_voxmap_string(&self) -> String {
        let mut s = String::with_capacity(32 + 30 * self.len());
        let _ = writeln!(
            s,
            "voxmap v1 {} {} {}",
            self.resolution,
            self.class.as_str(),
            self.len()
        );
        for key in &self.occupied {
            let c = key.center(self.resolution);
            let _ = writeln!(s, "{:.6} {:.6} {:.6}", c.x, c.y, c.z);
        }
        s
    }

    pub fn parse_voxmap(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty file")?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "voxmap" || fields[1] != "v1" {
            return Err(format!("bad header {header:?}"));
        }
        let resolution: f64 = fields[2].parse().map_err(|_| format!("bad resolution {:?}", fields[2]))?;
        let class = ObstacleClass::parse(fields[3]).ok_or_else(|| format!("bad class {:?}", fields[3]))?;
        let count: usize = fields[4].parse().map_err(|_| format!("bad count {:?}", fields[4]))?;
        let mut map = Self::new(resolution, class).map_err(|e| e.to_string())?;
        for (n, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let c: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| format!("line {}: bad coordinates", n + 2))?;
            if c.len() != 3 {
                return Err(format!("line {}: expected 3 coordinates", n + 2));
            }
            let key = |v: f64| (v / resolution - 0.5).round();
            let (i, j, k) = (key(c[0]), key(c[1]), key(c[2]));
            let k3 = VoxelKey::new(i as i32, j as i32, k as i32);
            let back = k3.center(resolution);
            if (back - Point3::new(c[0], c[1], c[2])).norm() > 0.25 * resolution {
                return Err(format!("line {}: point is not a voxel centre", n + 2));
            }
            map.occupied.insert(k3);
        }
        if map.len() != count {
            return Err(format!("header says {count} voxels, found {}", map.len()));
        }
        Ok(map)
    }

    pub fn export(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_voxmap_string()).map_err(|e| Error::io(path, e))
    }

    pub fn import(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_voxmap(&text).map_err(|m| Error::format(path, m))
    }

    /// ASCII PLY point export of voxel centres for external viewers.
    pub fn export_ply(&self, path: &Path) -> Result<()> {
        let mut s = format!(
            "ply\nformat ascii 1.0\ncomment voxel centres, class {}, resolution {}\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
            self.class.as_str(),
            self.resolution,
            self.len()
        );
        for key in &self.occupied {
            let c = key.center(self.resolution);
            let _ = writeln!(s, "{:.6} {:.6} {:.6}", c.x, c.y, c.z);
        }
        fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

/// Builds the binary map of an obstacle cloud at the given resolution.
pub fn build_map(cloud: &ObjectCloud, class: ObstacleClass, resolution: f64) -> Result<OccupancyMap> {
    OccupancyMap::from_points(&cloud.points, resolution, class)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::CloudLabel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn branch_cloud(points: Vec<Point3>) -> ObjectCloud {
        ObjectCloud::new(CloudLabel::Obstacle(ObstacleClass::BranchTrunk), points)
    }

    #[test]
    fn empty_cloud_empty_map() {
        let m = build_map(&branch_cloud(vec![]), ObstacleClass::BranchTrunk, 0.01).unwrap();
        assert!(m.is_empty());
        assert!(m.query_radius(Point3::ORIGIN, 1.0).is_empty());
    }

    #[test]
    fn points_in_one_voxel() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = (0..1000)
            .map(|_| Point3::new(rng.random_range(0.1..0.109), rng.random_range(-0.02..-0.011), rng.random_range(0.5..0.509)))
            .collect();
        let m = build_map(&branch_cloud(pts), ObstacleClass::BranchTrunk, 0.01).unwrap();
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn closed_ball_boundary() {
        let mut m = OccupancyMap::new(0.01, ObstacleClass::BranchTrunk).unwrap();
        m.insert(VoxelKey::new(19, 0, 0));
        // centre (0.195, 0.005, 0.005)
        let c = Point3::new(-0.005, 0.005, 0.005);
        let d = VoxelKey::new(19, 0, 0).center(0.01).distance(c);
        let hits = m.query_radius(c, d);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].distance, d);
    }

    #[test]
    fn morton_interleaves() {
        let o = MORTON_OFFSET as i32;
        assert_eq!(VoxelKey::new(-o, -o, -o).morton(), Some(0));
        assert_eq!(VoxelKey::new(1 - o, -o, -o).morton(), Some(1));
        assert_eq!(VoxelKey::new(-o, 1 - o, -o).morton(), Some(2));
        assert_eq!(VoxelKey::new(-o, -o, 1 - o).morton(), Some(4));
        assert_eq!(VoxelKey::new(3 - o, -o, -o).morton(), Some(0b1001));
        assert_eq!(VoxelKey::new(o, 0, 0).morton(), None);
    }

    #[test]
    fn header_and_records() {
        let mut m = OccupancyMap::new(0.01, ObstacleClass::OtherElement).unwrap();
        for k in [VoxelKey::new(0, 0, 0), VoxelKey::new(-3, 2, 40), VoxelKey::new(1, 1, 1)] {
            m.insert(k);
        }
        let s = m.to_voxmap_string();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("voxmap v1 0.01 other_element 3"));
        assert_eq!(lines.next(), Some("-0.025000 0.025000 0.405000"));
        assert_eq!(OccupancyMap::parse_voxmap(&s).unwrap(), m);
    }

    #[test]
    fn empty_map_round_trips() {
        let m = OccupancyMap::new(0.02, ObstacleClass::BranchTrunk).unwrap();
        let s = m.to_voxmap_string();
        assert_eq!(s, "voxmap v1 0.02 branch_trunk 0\n");
        assert_eq!(OccupancyMap::parse_voxmap(&s).unwrap(), m);
    }

    #[test]
    fn count_mismatch_rejected() {
        assert!(OccupancyMap::parse_voxmap("voxmap v1 0.01 branch_trunk 2\n0.005 0.005 0.005\n").is_err());
        assert!(OccupancyMap::parse_voxmap("voxmap v2 0.01 branch_trunk 0\n").is_err());
    }

    proptest::proptest! {
        #[test]
        fn build_is_order_invariant(raw in proptest::collection::vec((-0.3f64..0.3, -0.3f64..0.3, 0.1f64..0.9), 0..200), seed in 0u64..100) {
            let pts: Vec<Point3> = raw.into_iter().map(|(x, y, z)| Point3::new(x, y, z)).collect();
            let a = build_map(&branch_cloud(pts.clone()), ObstacleClass::BranchTrunk, 0.01).unwrap();
            let mut shuffled = pts.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rng.random_range(0..=i));
            }
            shuffled.extend(pts.iter().take(10));
            let b = build_map(&branch_cloud(shuffled), ObstacleClass::BranchTrunk, 0.01).unwrap();
            proptest::prop_assert_eq!(a, b);
        }

        #[test]
        fn query_nested_in_radius(seed in 0u64..200, r1 in 0.01f64..0.3, dr in 0.0f64..0.2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = OccupancyMap::new(0.01, ObstacleClass::BranchTrunk).unwrap();
            for _ in 0..300 {
                m.insert(VoxelKey::new(rng.random_range(-20..20), rng.random_range(-20..20), rng.random_range(-20..20)));
            }
            let c = Point3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
            let small: BTreeSet<_> = m.query_radius(c, r1).into_iter().map(|h| h.key).collect();
            let large: BTreeSet<_> = m.query_radius(c, r1 + dr).into_iter().map(|h| h.key).collect();
            proptest::prop_assert!(small.is_subset(&large));
        }
    }
}
