//! Sphere Hough transform over (centre x, centre y, centre z, radius).
//!
//! Every candidate point votes once for each centre bin whose distance to
//! the point falls inside the accepted radius interval; the radius bin is the
//! one containing that distance. The maximal bin is the sphere estimate.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error as CrateError, Result};
use crate::geometry::Point3;

/// Largest bin count stored as a dense array.
pub const DENSE_LIMIT: usize = 1 << 24;

const MIN_POINTS_PER_TASK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoughConfig {
    pub center_step: f64,
    pub radius_step: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// Padding added around the point bounds when searching for centres.
    pub center_margin: f64,
}

impl Default for HoughConfig {
    fn default() -> Self {
        Self {
            center_step: 0.005,
            radius_step: 0.005,
            r_min: 0.025,
            r_max: 0.060,
            center_margin: 0.060,
        }
    }
}

impl HoughConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.center_step, self.radius_step, self.r_min, self.r_max, self.center_margin]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if positive && self.r_min < self.r_max && self.radius_step <= self.r_max - self.r_min {
            Ok(())
        } else {
            Err(CrateError::Config(format!("invalid Hough settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Point3,
    pub radius: f64,
}

/// Evenly spaced bin centres `start + i * step`, `i < count`. Each bin spans
/// half a step either side of its centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl Axis {
    /// Bins covering `[lo, hi]` with the first centre at `lo`.
    pub fn covering(lo: f64, hi: f64, step: f64) -> Self {
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Self { start: lo, step, count }
    }

    pub fn center(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn last(&self) -> f64 {
        self.center(self.count.saturating_sub(1))
    }

    /// Bin edges, `count + 1` values.
    pub fn edges(&self) -> Vec<f64> {
        (0..=self.count)
            .map(|i| self.start + (i as f64 - 0.5) * self.step)
            .collect()
    }

    /// Index range of centres within `[v - reach, v + reach]`, widened by a
    /// hair so rounding never drops a qualifying bin, clipped to the axis.
    fn window(&self, v: f64, reach: f64) -> std::ops::Range<usize> {
        if self.count == 0 {
            return 0..0;
        }
        const SLACK: f64 = 1e-7;
        let lo = ((v - reach - self.start) / self.step - SLACK).ceil();
        let hi = ((v + reach - self.start) / self.step + SLACK).floor() + 1.0;
        let clip = |x: f64| x.clamp(0.0, self.count as f64) as usize;
        clip(lo)..clip(hi).max(clip(lo))
    }
}

/// Discretised parameter space for one object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRange {
    pub x: Axis,
    pub y: Axis,
    pub z: Axis,
    pub r: Axis,
    pub r_min: f64,
    pub r_max: f64,
}

impl SearchRange {
    pub fn bin_count(&self) -> usize {
        self.x.count * self.y.count * self.z.count * self.r.count
    }

    fn index(&self, ix: usize, iy: usize, iz: usize, ir: usize) -> usize {
        ((ix * self.y.count + iy) * self.z.count + iz) * self.r.count + ir
    }

    fn unindex(&self, mut idx: usize) -> [usize; 4] {
        let ir = idx % self.r.count;
        idx /= self.r.count;
        let iz = idx % self.z.count;
        idx /= self.z.count;
        let iy = idx % self.y.count;
        [idx / self.y.count, iy, iz, ir]
    }

    /// Radius bin of an accepted distance, `None` outside `[r_min, r_max]`.
    pub fn radius_bin(&self, r: f64) -> Option<usize> {
        if !(r >= self.r_min && r <= self.r_max) {
            return None;
        }
        // r >= start, so truncating x + 0.5 rounds half away from zero
        // without a libm call
        let i = ((r - self.r.start) / self.r.step + 0.5) as usize;
        Some(i.min(self.r.count - 1))
    }
}

fn radius_axis(cfg: &HoughConfig) -> Axis {
    Axis::covering(cfg.r_min, cfg.r_max, cfg.radius_step)
}

/// Centre search range from the point bounds padded by `center_margin`;
/// radius range from the accepted interval.
pub fn search_range(points: &[Point3], cfg: &HoughConfig) -> SearchRange {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for (a, v) in p.to_array().into_iter().enumerate() {
            lo[a] = lo[a].min(v);
            hi[a] = hi[a].max(v);
        }
    }
    let axis = |a: usize| {
        if points.is_empty() {
            Axis { start: 0.0, step: cfg.center_step, count: 0 }
        } else {
            Axis::covering(lo[a] - cfg.center_margin, hi[a] + cfg.center_margin, cfg.center_step)
        }
    };
    SearchRange {
        x: axis(0),
        y: axis(1),
        z: axis(2),
        r: radius_axis(cfg),
        r_min: cfg.r_min,
        r_max: cfg.r_max,
    }
}

#[derive(Debug, Clone)]
enum Votes {
    Dense(Vec<u32>),
    Sparse(HashMap<usize, u32>),
}

impl Votes {
    fn with_bins(bins: usize, dense_limit: usize) -> Self {
        if bins <= dense_limit {
            Votes::Dense(vec![0; bins])
        } else {
            Votes::Sparse(HashMap::new())
        }
    }

    fn get(&self, idx: usize) -> u32 {
        match self {
            Votes::Dense(v) => v[idx],
            Votes::Sparse(m) => m.get(&idx).copied().unwrap_or(0),
        }
    }

    #[cfg(test)]
    fn bump(&mut self, idx: usize) {
        match self {
            Votes::Dense(v) => v[idx] += 1,
            Votes::Sparse(m) => *m.entry(idx).or_insert(0) += 1,
        }
    }

    fn merge(mut self, other: Votes) -> Votes {
        match (&mut self, other) {
            (Votes::Dense(a), Votes::Dense(b)) => a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
            (Votes::Sparse(a), Votes::Sparse(b)) => {
                for (k, v) in b {
                    *a.entry(k).or_insert(0) += v;
                }
            }
            (Votes::Dense(a), Votes::Sparse(b)) => b.into_iter().for_each(|(k, v)| a[k] += v),
            (Votes::Sparse(_), Votes::Dense(b)) => return Votes::Dense(b).merge(self),
        }
        self
    }

    fn nonzero(&self) -> Vec<(usize, u32)> {
        let mut out: Vec<(usize, u32)> = match self {
            Votes::Dense(v) => v.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (i, c)).collect(),
            Votes::Sparse(m) => m.iter().filter(|(_, &c)| c > 0).map(|(&i, &c)| (i, c)).collect(),
        };
        out.sort_unstable();
        out
    }
}

/// 4-D vote accumulator over a [`SearchRange`].
#[derive(Debug, Clone)]
pub struct HoughGrid {
    range: SearchRange,
    votes: Votes,
}

impl PartialEq for HoughGrid {
    fn eq(&self, other: &Self) -> bool {
        self.range == other.range && self.votes.nonzero() == other.votes.nonzero()
    }
}

impl HoughGrid {
    pub fn empty(range: SearchRange) -> Self {
        Self::with_limit(range, DENSE_LIMIT)
    }

    fn with_limit(range: SearchRange, dense_limit: usize) -> Self {
        Self {
            votes: Votes::with_bins(range.bin_count(), dense_limit),
            range,
        }
    }

    pub fn range(&self) -> &SearchRange {
        &self.range
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.votes, Votes::Dense(_))
    }

    pub fn get(&self, ix: usize, iy: usize, iz: usize, ir: usize) -> u32 {
        self.votes.get(self.range.index(ix, iy, iz, ir))
    }

    pub fn total_votes(&self) -> u64 {
        self.votes.nonzero().iter().map(|&(_, c)| c as u64).sum()
    }

    /// Nonzero bins as `([ix, iy, iz, ir], votes)` in index order.
    pub fn nonzero_bins(&self) -> Vec<([usize; 4], u32)> {
        self.votes
            .nonzero()
            .into_iter()
            .map(|(i, c)| (self.range.unindex(i), c))
            .collect()
    }

    /// Adds another grid over the same range. Merging is associative and
    /// commutative.
    pub fn merge(self, other: HoughGrid) -> Result<HoughGrid> {
        if self.range != other.range {
            return Err(CrateError::Contract("cannot merge Hough grids over different ranges".into()));
        }
        Ok(HoughGrid {
            range: self.range,
            votes: self.votes.merge(other.votes),
        })
    }

    /// Casts the votes of `points` into this grid.
    pub fn accumulate(&mut self, points: &[Point3]) {
        let range = self.range;
        match &mut self.votes {
            // a bin collects at most one vote per point, so no wrap
            Votes::Dense(v) => cast_votes(&range, points, |i| v[i] = v[i].wrapping_add(1)),
            Votes::Sparse(m) => cast_votes(&range, points, |i| *m.entry(i).or_insert(0) += 1),
        }
    }
}

fn cast_votes(range: &SearchRange, points: &[Point3], mut add: impl FnMut(usize)) {
    let (r_min2, r_max2) = (range.r_min * range.r_min, range.r_max * range.r_max);
    let (ny, nz, nr) = (range.y.count, range.z.count, range.r.count);
    let zc: Vec<f64> = (0..nz).map(|i| range.z.center(i)).collect();
    // squared upper edges of all radius bins but the last
    let edges2: Vec<f64> = (0..nr.saturating_sub(1))
        .map(|k| {
            let e = range.r.start + (k as f64 + 0.5) * range.r.step;
            e * e
        })
        .collect();
    for p in points {
        for ix in range.x.window(p.x, range.r_max) {
            let dx = p.x - range.x.center(ix);
            let dx2 = dx * dx;
            if dx2 > r_max2 {
                continue;
            }
            for iy in range.y.window(p.y, (r_max2 - dx2).sqrt()) {
                let dy = p.y - range.y.center(iy);
                let dxy2 = dx2 + dy * dy;
                if dxy2 > r_max2 {
                    continue;
                }
                let outer = (r_max2 - dxy2).sqrt();
                let inner = (r_min2 - dxy2).max(0.0).sqrt();
                let below = range.z.window(p.z - 0.5 * (outer + inner), 0.5 * (outer - inner));
                let above = range.z.window(p.z + 0.5 * (outer + inner), 0.5 * (outer - inner));
                let above = above.start.max(below.end)..above.end.max(below.end);
                for span in [below, above] {
                    // bin indices stay below bin_count(), so plain wrapping
                    // arithmetic is exact here
                    let base = ((ix * ny + iy) * nz + span.start) * nr;
                    for (iz, &z) in zc[span].iter().enumerate() {
                        let dz = p.z - z;
                        let r2 = dxy2 + dz * dz;
                        if r2 >= r_min2 && r2 <= r_max2 {
                            let ir = edges2.iter().fold(0usize, |n, &e| n.wrapping_add(usize::from(r2 >= e)));
                            add(base.wrapping_add(iz.wrapping_mul(nr)).wrapping_add(ir));
                        }
                    }
                }
            }
        }
    }
}

/// Accumulates votes for `points` over their own search range. Points are
/// voted in parallel chunks whose grids are summed.
pub fn vote(points: &[Point3], cfg: &HoughConfig) -> HoughGrid {
    vote_in_range(points, search_range(points, cfg))
}

pub fn vote_in_range(points: &[Point3], range: SearchRange) -> HoughGrid {
    vote_with_limit(points, range, DENSE_LIMIT)
}

fn vote_with_limit(points: &[Point3], range: SearchRange, dense_limit: usize) -> HoughGrid {
    let tasks = rayon::current_num_threads()
        .min(points.len() / MIN_POINTS_PER_TASK)
        .max(1);
    let chunk = points.len().div_ceil(tasks).max(1);
    points
        .par_chunks(chunk)
        .map(|part| {
            let mut g = HoughGrid::with_limit(range, dense_limit);
            g.accumulate(part);
            g
        })
        .reduce(
            || HoughGrid::with_limit(range, dense_limit),
            |a, b| a.merge(b).expect("same range"),
        )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum HoughError {
    #[error("no bin received a vote")]
    NoConsensus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereEstimate {
    pub sphere: Sphere,
    pub votes: u32,
    /// `[ix, iy, iz, ir]` of the winning bin.
    pub bin: [usize; 4],
}

/// Parameters of the maximal bin. Ties go to the smallest radius, then the
/// lexicographically smallest centre.
pub fn estimate_sphere(grid: &HoughGrid) -> std::result::Result<SphereEstimate, HoughError> {
    let r = grid.range();
    let key = |idx: usize| {
        let [ix, iy, iz, ir] = r.unindex(idx);
        (ir, ix, iy, iz)
    };
    let mut best: Option<(usize, u32)> = None;
    let mut consider = |idx: usize, c: u32| {
        if c == 0 {
            return;
        }
        best = match best {
            Some((b, bc)) if bc > c || (bc == c && key(b) <= key(idx)) => Some((b, bc)),
            _ => Some((idx, c)),
        };
    };
    match &grid.votes {
        Votes::Dense(v) => v.iter().enumerate().for_each(|(i, &c)| consider(i, c)),
        Votes::Sparse(m) => m.iter().for_each(|(&i, &c)| consider(i, c)),
    }
    let (idx, votes) = best.ok_or(HoughError::NoConsensus)?;
    let [ix, iy, iz, ir] = r.unindex(idx);
    Ok(SphereEstimate {
        sphere: Sphere {
            center: Point3::new(r.x.center(ix), r.y.center(iy), r.z.center(iz)),
            radius: r.r.center(ir),
        },
        votes,
        bin: [ix, iy, iz, ir],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    // Reference accumulator: every point, every centre triple, every radius
    // bin tested by interval membership.
    pub(crate) fn naive_votes(points: &[Point3], range: &SearchRange) -> Vec<u32> {
        let mut grid = vec![0u32; range.bin_count()];
        let lo_edge = |k: usize| if k == 0 { range.r_min } else { range.r.start + (k as f64 - 0.5) * range.r.step };
        let hi_edge = |k: usize| if k + 1 == range.r.count { range.r_max } else { range.r.start + (k as f64 + 0.5) * range.r.step };
        for p in points {
            for ix in 0..range.x.count {
                for iy in 0..range.y.count {
                    for iz in 0..range.z.count {
                        let (dx, dy, dz) = (p.x - range.x.center(ix), p.y - range.y.center(iy), p.z - range.z.center(iz));
                        let r = (dx * dx + dy * dy + dz * dz).sqrt();
                        for k in 0..range.r.count {
                            let last = k + 1 == range.r.count;
                            if r >= lo_edge(k) && (r < hi_edge(k) || (last && r <= hi_edge(k))) {
                                grid[((ix * range.y.count + iy) * range.z.count + iz) * range.r.count + k] += 1;
                            }
                        }
                    }
                }
            }
        }
        grid
    }

    fn dense(grid: &HoughGrid) -> Vec<u32> {
        let mut v = vec![0u32; grid.range().bin_count()];
        for (b, c) in grid.nonzero_bins() {
            v[grid.range().index(b[0], b[1], b[2], b[3])] = c;
        }
        v
    }

    fn sphere_points(c: Point3, r: f64, n: usize, sigma: f64, seed: u64) -> Vec<Point3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma.max(1e-300)).unwrap();
        (0..n)
            .map(|_| {
                let u: f64 = rng.random_range(-1.0..1.0);
                let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let s = (1.0 - u * u).sqrt();
                let dir = Point3::new(s * t.cos(), s * t.sin(), u);
                let e = if sigma > 0.0 { Point3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng)) } else { Point3::ORIGIN };
                c + dir * r + e
            })
            .collect()
    }

    #[test]
    fn single_point_range() {
        let cfg = HoughConfig { center_margin: 0.06, center_step: 0.005, ..Default::default() };
        let r = search_range(&[Point3::new(0.0, 0.0, 0.4)], &cfg);
        assert_eq!(r.x.count, 25);
        assert!((r.x.start + 0.06).abs() < 1e-15);
        assert!((r.x.last() - 0.06).abs() < 1e-12);
        assert_eq!(r.z.count, 25);
    }

    #[test]
    fn radius_axis_has_eight_bins() {
        let r = radius_axis(&HoughConfig::default());
        assert_eq!(r.count, 8);
        assert!((r.last() - 0.060).abs() < 1e-12);
        assert_eq!(r.edges().len(), 9);
    }

    #[test]
    fn one_step_span_adds_one_bin() {
        let cfg = HoughConfig::default();
        let pts = [Point3::new(0.0, 0.0, 0.4), Point3::new(0.005, 0.0, 0.4)];
        let r = search_range(&pts, &cfg);
        assert_eq!(r.x.count, 2 + 2 * 12);
        assert_eq!(r.y.count, 1 + 2 * 12);
    }

    #[test]
    fn exact_sphere_on_bin_centre() {
        let cfg = HoughConfig::default();
        // anchor point fixes the grid so that (0, 0, 0.4) is a bin centre
        let mut pts = sphere_points(Point3::new(0.0, 0.0, 0.4), 0.04, 50, 0.0, 11);
        let range = search_range(&pts, &cfg);
        let snap = |a: &Axis, v: f64| a.center(((v - a.start) / a.step).round() as usize);
        let c = Point3::new(snap(&range.x, 0.0), snap(&range.y, 0.0), snap(&range.z, 0.4));
        pts = sphere_points(c, 0.04, 50, 0.0, 11);
        let grid = vote_in_range(&pts, range);
        let ix = ((c.x - range.x.start) / range.x.step).round() as usize;
        let iy = ((c.y - range.y.start) / range.y.step).round() as usize;
        let iz = ((c.z - range.z.start) / range.z.step).round() as usize;
        assert_eq!(grid.get(ix, iy, iz, 3), 50);
        let est = estimate_sphere(&grid).unwrap();
        assert_eq!(est.votes, 50);
        assert_eq!(est.bin, [ix, iy, iz, 3]);
        assert!((est.sphere.radius - 0.04).abs() < 1e-12);
    }

    #[test]
    fn no_points_no_votes() {
        let grid = vote(&[], &HoughConfig::default());
        assert_eq!(grid.total_votes(), 0);
        assert_eq!(estimate_sphere(&grid), Err(HoughError::NoConsensus));
    }

    #[test]
    fn noisy_sphere_matches_naive_reference() {
        let pts = sphere_points(Point3::new(0.01, -0.02, 0.4), 0.04, 200, 0.002, 12);
        let cfg = HoughConfig::default();
        let range = search_range(&pts, &cfg);
        let grid = vote_in_range(&pts, range);
        assert_eq!(dense(&grid), naive_votes(&pts, &range));
    }

    #[test]
    fn sparse_storage_same_votes() {
        let pts = sphere_points(Point3::new(0.0, 0.0, 0.4), 0.035, 120, 0.002, 13);
        let range = search_range(&pts, &HoughConfig::default());
        let d = vote_with_limit(&pts, range, DENSE_LIMIT);
        let s = vote_with_limit(&pts, range, 0);
        assert!(d.is_dense() && !s.is_dense());
        assert_eq!(d, s);
        assert_eq!(estimate_sphere(&d), estimate_sphere(&s));
    }

    #[test]
    fn tie_prefers_smaller_radius() {
        let range = SearchRange {
            x: Axis { start: 0.0, step: 0.005, count: 3 },
            y: Axis { start: 0.0, step: 0.005, count: 3 },
            z: Axis { start: 0.0, step: 0.005, count: 3 },
            r: Axis { start: 0.025, step: 0.005, count: 8 },
            r_min: 0.025,
            r_max: 0.060,
        };
        let mut g = HoughGrid::empty(range);
        for _ in 0..4 {
            g.votes.bump(range.index(0, 0, 0, 3)); // 40 mm
            g.votes.bump(range.index(2, 2, 2, 1)); // 30 mm
        }
        let est = estimate_sphere(&g).unwrap();
        assert_eq!(est.bin, [2, 2, 2, 1]);
        assert!((est.sphere.radius - 0.030).abs() < 1e-12);
        g.votes.bump(range.index(1, 0, 0, 1));
        g.votes.bump(range.index(1, 0, 0, 1));
        g.votes.bump(range.index(1, 0, 0, 1));
        g.votes.bump(range.index(1, 0, 0, 1));
        assert_eq!(estimate_sphere(&g).unwrap().bin, [1, 0, 0, 1]);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

        #[test]
        fn order_and_chunking_do_not_matter(seed in 0u64..10_000, split in 1usize..79) {
            let pts = sphere_points(Point3::new(0.0, 0.0, 0.5), 0.04, 80, 0.002, seed);
            let range = search_range(&pts, &HoughConfig::default());
            let whole = vote_in_range(&pts, range);
            let mut rev = pts.clone();
            rev.reverse();
            proptest::prop_assert_eq!(&vote_in_range(&rev, range), &whole);
            let merged = vote_in_range(&pts[..split], range).merge(vote_in_range(&pts[split..], range)).unwrap();
            proptest::prop_assert_eq!(&merged, &whole);
        }

        #[test]
        fn translation_moves_estimate(seed in 0u64..10_000, tx in -0.1f64..0.1, ty in -0.1f64..0.1, tz in -0.1f64..0.1) {
            let cfg = HoughConfig::default();
            let pts = sphere_points(Point3::new(0.0, 0.0, 0.5), 0.04, 150, 0.0, seed);
            let t = Point3::new(tx, ty, tz);
            let moved: Vec<Point3> = pts.iter().map(|&p| p + t).collect();
            let a = estimate_sphere(&vote(&pts, &cfg)).unwrap().sphere;
            let b = estimate_sphere(&vote(&moved, &cfg)).unwrap().sphere;
            let shift = b.center - a.center - t;
            for d in shift.to_array() {
                proptest::prop_assert!(d.abs() <= cfg.center_step + 1e-9, "shift {:?}", shift);
            }
        }
    }

    #[test]
    fn occluded_patch_keeps_argmax() {
        let cfg = HoughConfig::default();
        // exact samples on a lat/long lattice; remove a 40% azimuthal wedge
        let c0 = Point3::new(0.0, 0.0, 0.5);
        let lattice = |keep: &dyn Fn(f64) -> bool| {
            let mut v = Vec::new();
            for i in 1..20 {
                let pol = std::f64::consts::PI * i as f64 / 20.0;
                for j in 0..40 {
                    let az = std::f64::consts::TAU * j as f64 / 40.0;
                    if keep(az) {
                        v.push(c0 + Point3::new(pol.sin() * az.cos(), pol.sin() * az.sin(), pol.cos()) * 0.04);
                    }
                }
            }
            v
        };
        let full = lattice(&|_| true);
        let range = search_range(&full, &cfg);
        let snap = |a: &Axis, v: f64| ((v - a.start) / a.step).round() as usize;
        let target = [snap(&range.x, c0.x), snap(&range.y, c0.y), snap(&range.z, c0.z)];
        let cut = lattice(&|az| az >= 0.4 * std::f64::consts::TAU);
        let a = estimate_sphere(&vote_in_range(&full, range)).unwrap();
        let b = estimate_sphere(&vote_in_range(&cut, range)).unwrap();
        assert_eq!(a.bin, b.bin);
        assert_eq!(&a.bin[..3], &target[..]);
        assert!(b.votes < a.votes);
    }
}
