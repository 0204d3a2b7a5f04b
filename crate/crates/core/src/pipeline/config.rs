use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::filter::FilterConfig;
use crate::frame::DEFAULT_MIN_REGION_AREA;
use crate::geometry::WorkFrame;
use crate::hough::HoughConfig;
use crate::occupancy::DEFAULT_RESOLUTION;
use crate::pose::DEFAULT_ANGLE_LIMIT;
use crate::verify::VerifyConfig;

/// Every tunable of the per-frame pipeline as one flat key-value document.
///
/// Lengths are metres, angles radians unless the key says `_deg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub min_region_area: usize,

    pub nn_radius: f64,
    pub min_neighbors: usize,
    pub min_points: usize,
    pub max_axis_ratio: f64,
    pub downsample_voxel: f64,

    pub map_resolution: f64,

    pub center_step: f64,
    pub radius_step: f64,
    /// Accepted fruit radius interval `[r_min, r_max]`.
    pub r_accept: [f64; 2],
    pub center_margin: f64,

    /// Symmetric limit on the pose angles.
    pub clamp: f64,
    /// Camera-to-work rotation, row-major.
    pub work_frame: [[f64; 3]; 3],

    pub verify: bool,
    pub neighborhood_r: f64,
    pub beta: f64,
    pub tau: f64,
    pub bin_deg: f64,
    pub cone_halfwidth_deg: f64,
    pub d_min: f64,
    pub alpha_branch: f64,
    pub alpha_other: f64,

    /// Also write voxel centres as PLY point files.
    pub export_ply: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let f = FilterConfig::default();
        let h = HoughConfig::default();
        let v = VerifyConfig::default();
        Self {
            min_region_area: DEFAULT_MIN_REGION_AREA,
            nn_radius: f.nn_radius,
            min_neighbors: f.min_neighbors,
            min_points: f.min_points,
            max_axis_ratio: f.max_axis_ratio,
            downsample_voxel: f.downsample_voxel,
            map_resolution: DEFAULT_RESOLUTION,
            center_step: h.center_step,
            radius_step: h.radius_step,
            r_accept: [h.r_min, h.r_max],
            center_margin: h.center_margin,
            clamp: DEFAULT_ANGLE_LIMIT,
            work_frame: WorkFrame::camera_default().rows(),
            verify: true,
            neighborhood_r: v.neighborhood_r,
            beta: v.beta,
            tau: v.tau,
            bin_deg: v.bin_deg,
            cone_halfwidth_deg: v.cone_halfwidth_deg,
            d_min: v.d_min,
            alpha_branch: v.alpha_branch,
            alpha_other: v.alpha_other,
            export_ply: false,
        }
    }
}

impl PipelineConfig {
    pub fn filter(&self) -> FilterConfig {
        FilterConfig {
            nn_radius: self.nn_radius,
            min_neighbors: self.min_neighbors,
            min_points: self.min_points,
            max_axis_ratio: self.max_axis_ratio,
            downsample_voxel: self.downsample_voxel,
        }
    }

    pub fn hough(&self) -> HoughConfig {
        HoughConfig {
            center_step: self.center_step,
            radius_step: self.radius_step,
            r_min: self.r_accept[0],
            r_max: self.r_accept[1],
            center_margin: self.center_margin,
        }
    }

    pub fn verification(&self) -> VerifyConfig {
        VerifyConfig {
            neighborhood_r: self.neighborhood_r,
            beta: self.beta,
            tau: self.tau,
            bin_deg: self.bin_deg,
            cone_halfwidth_deg: self.cone_halfwidth_deg,
            d_min: self.d_min,
            alpha_branch: self.alpha_branch,
            alpha_other: self.alpha_other,
        }
    }

    pub fn frame(&self) -> Result<WorkFrame> {
        WorkFrame::from_rows(self.work_frame)
    }

    pub fn validate(&self) -> Result<()> {
        self.filter().validate()?;
        self.hough().validate()?;
        self.verification().validate()?;
        self.frame()?;
        if !(self.map_resolution > 0.0 && self.map_resolution.is_finite()) {
            return Err(Error::Config("map_resolution must be positive".into()));
        }
        if !(self.clamp > 0.0 && self.clamp <= std::f64::consts::PI) {
            return Err(Error::Config("clamp must be in (0, pi]".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> std::result::Result<Self, String> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|m| Error::format(path, m))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }
}
