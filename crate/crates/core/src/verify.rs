//! Pose verification with an angular obstacle histogram.
//!
//! Barriers near a fruit (obstacle voxels and neighbouring fruits) deposit a
//! penalty into the `(theta, phi)` bin of their direction from the fruit
//! centre. The penalty summed over a window around the estimated pose maps
//! to a confidence in `(0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::ObstacleClass;
use crate::geometry::Point3;
use crate::hough::Sphere;
use crate::occupancy::OccupancyMap;
use crate::pose::{point_angles, FruitPose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    /// Barrier search radius around the fruit centre, metres.
    pub neighborhood_r: f64,
    /// Log base of the distance term.
    pub beta: f64,
    /// Confidence threshold for picking.
    pub tau: f64,
    pub bin_deg: f64,
    /// Half-width of the lookup window around the pose, degrees.
    pub cone_halfwidth_deg: f64,
    /// Lower distance clamp, metres.
    pub d_min: f64,
    pub alpha_branch: f64,
    pub alpha_other: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            neighborhood_r: 0.200,
            beta: 50.0,
            tau: 0.6,
            bin_deg: 5.0,
            cone_halfwidth_deg: 10.0,
            d_min: 0.010,
            alpha_branch: 1.0,
            alpha_other: 0.5,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        let bins = 360.0 / self.bin_deg;
        let ok = self.neighborhood_r > self.d_min
            && self.d_min > 0.0
            && self.beta > 1.0
            && self.tau > 0.0
            && self.tau < 1.0
            && self.bin_deg > 0.0
            && (bins - bins.round()).abs() < 1e-9
            && (180.0 / self.bin_deg).fract().abs() < 1e-9
            && self.cone_halfwidth_deg >= 0.0
            && self.alpha_branch >= 0.0
            && self.alpha_other >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid verification settings {self:?}")))
        }
    }

    pub fn alpha(&self, class: BarrierClass) -> f64 {
        match class {
            BarrierClass::BranchTrunk => self.alpha_branch,
            BarrierClass::OtherElement | BarrierClass::Fruit => self.alpha_other,
        }
    }

    /// Distance term `1 / log_beta(d)` with `d` in millimetres after
    /// clamping to `[d_min, neighborhood_r]`.
    pub fn distance_term(&self, distance: f64) -> f64 {
        let d_mm = distance.clamp(self.d_min, self.neighborhood_r) * 1000.0;
        self.beta.ln() / d_mm.ln()
    }

    pub fn penalty(&self, class: BarrierClass, distance: f64) -> f64 {
        self.alpha(class) * self.distance_term(distance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierClass {
    BranchTrunk,
    OtherElement,
    Fruit,
}

impl From<ObstacleClass> for BarrierClass {
    fn from(c: ObstacleClass) -> Self {
        match c {
            ObstacleClass::BranchTrunk => BarrierClass::BranchTrunk,
            ObstacleClass::OtherElement => BarrierClass::OtherElement,
        }
    }
}

/// Penalty histogram over theta in `[-180, 180)` and phi in `[-90, 90)`
/// degrees. Entries are indexed `[theta_bin][phi_bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleHistogram {
    bin_deg: f64,
    theta_bins: usize,
    phi_bins: usize,
    values: Vec<f64>,
}

impl ObstacleHistogram {
    pub fn zeros(bin_deg: f64) -> Self {
        let theta_bins = (360.0 / bin_deg).round() as usize;
        let phi_bins = (180.0 / bin_deg).round() as usize;
        Self {
            bin_deg,
            theta_bins,
            phi_bins,
            values: vec![0.0; theta_bins * phi_bins],
        }
    }

    pub fn bin_deg(&self) -> f64 {
        self.bin_deg
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.theta_bins, self.phi_bins)
    }

    pub fn get(&self, t: usize, p: usize) -> f64 {
        self.values[t * self.phi_bins + p]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Bin containing the direction `(theta, phi)` in radians.
    pub fn bin_of(&self, theta: f64, phi: f64) -> (usize, usize) {
        let t = (theta.to_degrees() + 180.0).rem_euclid(360.0);
        let p = phi.to_degrees() + 90.0;
        let ti = ((t / self.bin_deg).floor() as usize).min(self.theta_bins - 1);
        let pi = ((p / self.bin_deg).floor().max(0.0) as usize).min(self.phi_bins - 1);
        (ti, pi)
    }

    /// Bin centre in degrees.
    pub fn bin_center_deg(&self, t: usize, p: usize) -> (f64, f64) {
        (
            -180.0 + (t as f64 + 0.5) * self.bin_deg,
            -90.0 + (p as f64 + 0.5) * self.bin_deg,
        )
    }

    pub fn add(&mut self, theta: f64, phi: f64, value: f64) {
        let (t, p) = self.bin_of(theta, phi);
        self.values[t * self.phi_bins + p] += value;
    }

    /// Sum over bins whose centre lies within `halfwidth_deg` of the
    /// direction in both angles (theta distance wraps).
    pub fn window_sum(&self, theta: f64, phi: f64, halfwidth_deg: f64) -> f64 {
        let (td, pd) = (theta.to_degrees(), phi.to_degrees());
        let mut sum = 0.0;
        for t in 0..self.theta_bins {
            for p in 0..self.phi_bins {
                let (ct, cp) = self.bin_center_deg(t, p);
                let dt = (ct - td + 180.0).rem_euclid(360.0) - 180.0;
                if dt.abs() <= halfwidth_deg && (cp - pd).abs() <= halfwidth_deg {
                    sum += self.get(t, p);
                }
            }
        }
        sum
    }
}

/// Accumulates penalties of all barriers within `neighborhood_r` of the
/// fruit centre. Other fruits are given by their sphere centres.
pub fn build_histogram(
    fruit_center: Point3,
    maps: &[&OccupancyMap],
    other_fruits: &[Sphere],
    cfg: &VerifyConfig,
) -> ObstacleHistogram {
    let mut hist = ObstacleHistogram::zeros(cfg.bin_deg);
    let mut deposit = |at: Point3, distance: f64, class: BarrierClass| {
        if let Ok((t, p)) = point_angles(at, fruit_center) {
            hist.add(t, p, cfg.penalty(class, distance));
        }
    };
    for map in maps {
        for hit in map.query_radius(fruit_center, cfg.neighborhood_r) {
            deposit(hit.center, hit.distance, map.class().into());
        }
    }
    for other in other_fruits {
        let d = other.center.distance(fruit_center);
        if d <= cfg.neighborhood_r {
            deposit(other.center, d, BarrierClass::Fruit);
        }
    }
    hist
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PickDecision {
    pub confidence: f64,
    pub can_pick: bool,
    pub window_penalty: f64,
}

/// Maps a summed window penalty to confidence: `2 / (1 + exp(h))`, so an
/// empty window gives 1 and the value falls monotonically toward 0.
pub fn confidence_from_penalty(window_penalty: f64) -> f64 {
    2.0 / (1.0 + window_penalty.exp())
}

pub fn confidence(hist: &ObstacleHistogram, pose: &FruitPose, cfg: &VerifyConfig) -> PickDecision {
    let window_penalty = hist.window_sum(pose.theta, pose.phi, cfg.cone_halfwidth_deg);
    let confidence = confidence_from_penalty(window_penalty);
    PickDecision {
        confidence,
        can_pick: confidence >= cfg.tau,
        window_penalty,
    }
}

/// Adds an extra penalty field evaluated at every bin centre (angles in
/// radians). Negative or non-finite penalties are rejected.
pub fn add_constraint_penalty(
    hist: &ObstacleHistogram,
    field: impl Fn(f64, f64) -> f64,
) -> Result<ObstacleHistogram> {
    let mut out = hist.clone();
    for t in 0..hist.theta_bins {
        for p in 0..hist.phi_bins {
            let (ct, cp) = hist.bin_center_deg(t, p);
            let v = field(ct.to_radians(), cp.to_radians());
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Contract(format!(
                    "constraint penalty {v} at ({ct}, {cp}) deg is not a non-negative number"
                )));
            }
            out.values[t * hist.phi_bins + p] += v;
        }
    }
    Ok(out)
}
