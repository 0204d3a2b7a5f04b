//! Fruit localisation and pick planning from a single RGB-D frame.
//!
//! A frame (depth image, per-fruit instance mask, obstacle class mask and
//! pinhole intrinsics) becomes a ranked list of fruit spheres with approach
//! poses and pick confidences, plus voxel maps of the obstacles around them.

pub mod error;
pub mod filter;
pub mod frame;
pub mod geometry;
pub mod hough;
pub mod metrics;
pub mod occupancy;
pub mod pipeline;
pub mod pose;
pub mod synth;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{Point3, WorkFrame};
pub use pipeline::{process_frame, process_frame_dir, PipelineConfig};
