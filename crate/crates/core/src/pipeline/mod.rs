//! Per-frame workflow: masks and depth in, obstacle maps and a ranked pick
//! list out.
//!
//! Stages run in a fixed order: cloud extraction, denoising, obstacle
//! mapping, per-fruit modelling (downsample, degeneracy check, sphere vote,
//! pose) and pose verification. Geometry downstream of extraction is in the
//! work frame.

mod config;
mod output;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

pub use config::PipelineConfig;
pub use output::{
    bench_report, write_outputs, BenchReport, EntryDiagnostics, FruitEntry, PickList, Rejected, StageTimings, CONFIDENCE_MODEL, PICK_LIST_FILE,
    TIMING_FILE,
};

use crate::error::Result;
use crate::filter::{euclidean_denoise, reject_degenerate, voxel_downsample, Verdict};
use crate::frame::{extract_clouds, load_frame, CameraFrame, CloudLabel, ObjectCloud, ObstacleClass};
use crate::geometry::Point3;
use crate::hough::{estimate_sphere, vote, Sphere};
use crate::occupancy::{build_map, OccupancyMap};
use crate::pose::{estimate_pose, FruitPose};
use crate::verify::{build_histogram, confidence, PickDecision};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Diagnostics {
    pub raw_points: usize,
    pub denoised_points: usize,
    pub candidates: usize,
    pub votes: u32,
}

/// Why a fruit was dropped before a sphere was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    InsufficientPoints,
    AxisImbalance,
    NoConsensus,
}

impl Rejection {
    pub fn as_str(self) -> &'static str {
        match self {
            Rejection::InsufficientPoints => "insufficient_points",
            Rejection::AxisImbalance => "axis_imbalance",
            Rejection::NoConsensus => "no_consensus",
        }
    }
}

/// Modelled fruit: a sphere, possibly a pose, and (after verification) a
/// pick decision.
#[derive(Debug, Clone, PartialEq)]
pub struct FruitModel {
    pub id: u16,
    pub sphere: Sphere,
    /// `None` when no candidate point had a usable direction.
    pub pose: Option<FruitPose>,
    pub decision: Option<PickDecision>,
    pub diagnostics: Diagnostics,
}

impl FruitModel {
    pub fn confidence(&self) -> f64 {
        self.decision.map_or(0.0, |d| d.confidence)
    }

    pub fn can_pick(&self) -> bool {
        self.decision.is_some_and(|d| d.can_pick)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FruitOutcome {
    Modelled(FruitModel),
    Rejected {
        id: u16,
        reason: Rejection,
        diagnostics: Diagnostics,
    },
}

/// Everything a frame produces.
#[derive(Debug, Clone)]
pub struct FrameResult {
    pub frame_id: String,
    pub config_digest: String,
    /// Sorted by confidence, highest first; ties by id.
    pub fruits: Vec<FruitModel>,
    pub rejected: Vec<(u16, Rejection)>,
    pub maps: Vec<OccupancyMap>,
    pub timings: StageTimings,
}

fn to_work(cloud: &ObjectCloud, cfg: &PipelineConfig) -> Result<ObjectCloud> {
    let wf = cfg.frame()?;
    Ok(cloud.with_points(cloud.points.iter().map(|&p| wf.to_work(p)).collect()))
}

/// Sphere and pose for one fruit from its denoised work-frame cloud.
pub fn model_fruit(id: u16, raw_points: usize, denoised: &ObjectCloud, cfg: &PipelineConfig) -> FruitOutcome {
    let filter = cfg.filter();
    let candidates = voxel_downsample(denoised, filter.downsample_voxel);
    let mut diagnostics = Diagnostics {
        raw_points,
        denoised_points: denoised.len(),
        candidates: candidates.len(),
        votes: 0,
    };
    if let Verdict::Reject(d) = reject_degenerate(&candidates, &filter) {
        let reason = match d {
            crate::filter::Degeneracy::InsufficientPoints { .. } => Rejection::InsufficientPoints,
            crate::filter::Degeneracy::AxisImbalance { .. } => Rejection::AxisImbalance,
        };
        return FruitOutcome::Rejected { id, reason, diagnostics };
    }
    let grid = vote(&candidates.points, &cfg.hough());
    let Ok(est) = estimate_sphere(&grid) else {
        return FruitOutcome::Rejected {
            id,
            reason: Rejection::NoConsensus,
            diagnostics,
        };
    };
    diagnostics.votes = est.votes;
    let pose = estimate_pose(&candidates.points, &est.sphere, cfg.clamp).ok();
    FruitOutcome::Modelled(FruitModel {
        id,
        sphere: est.sphere,
        pose,
        decision: None,
        diagnostics,
    })
}

/// Scores every modelled fruit against the obstacle maps and the other
/// fruits, then orders them by confidence.
pub fn verify_and_rank(fruits: &mut Vec<FruitModel>, maps: &[OccupancyMap], cfg: &PipelineConfig) {
    let vcfg = cfg.verification();
    let spheres: Vec<(u16, Sphere)> = fruits.iter().map(|f| (f.id, f.sphere)).collect();
    let map_refs: Vec<&OccupancyMap> = maps.iter().collect();
    let decisions: Vec<Option<PickDecision>> = fruits
        .par_iter()
        .map(|f| {
            let pose = f.pose?;
            if !cfg.verify {
                return Some(PickDecision {
                    confidence: 1.0,
                    can_pick: true,
                    window_penalty: 0.0,
                });
            }
            let others: Vec<Sphere> = spheres.iter().filter(|(id, _)| *id != f.id).map(|(_, s)| *s).collect();
            let hist = build_histogram(f.sphere.center, &map_refs, &others, &vcfg);
            Some(confidence(&hist, &pose, &vcfg))
        })
        .collect();
    for (f, d) in fruits.iter_mut().zip(decisions) {
        f.decision = d;
    }
    fruits.sort_by(|a, b| b.confidence().total_cmp(&a.confidence()).then(a.id.cmp(&b.id)));
}

/// Runs the whole workflow on an in-memory frame.
pub fn process_frame(frame: &CameraFrame, frame_id: &str, cfg: &PipelineConfig) -> Result<FrameResult> {
    cfg.validate()?;
    let mut timings = StageTimings::default();
    let clock = Instant::now();
    let clouds: Vec<ObjectCloud> = extract_clouds(frame, cfg.min_region_area)?
        .iter()
        .map(|c| to_work(c, cfg))
        .collect::<Result<_>>()?;
    timings.ingest = clock.elapsed();
    process_clouds(clouds, frame_id, cfg, timings)
}

fn process_clouds(
    clouds: Vec<ObjectCloud>,
    frame_id: &str,
    cfg: &PipelineConfig,
    mut timings: StageTimings,
) -> Result<FrameResult> {
    let filter = cfg.filter();

    let clock = Instant::now();
    let denoised: Vec<(ObjectCloud, usize)> = clouds
        .par_iter()
        .map(|c| (euclidean_denoise(c, &filter), c.len()))
        .collect();
    timings.denoise = clock.elapsed();

    let clock = Instant::now();
    let mut maps = Vec::new();
    for class in ObstacleClass::ALL {
        let cloud = denoised
            .iter()
            .map(|(c, _)| c)
            .find(|c| c.label == CloudLabel::Obstacle(class));
        let empty = ObjectCloud::new(CloudLabel::Obstacle(class), Vec::new());
        maps.push(build_map(cloud.unwrap_or(&empty), class, cfg.map_resolution)?);
    }
    timings.maps = clock.elapsed();

    let clock = Instant::now();
    let outcomes: Vec<FruitOutcome> = denoised
        .par_iter()
        .filter_map(|(c, raw)| match c.label {
            CloudLabel::Fruit(id) => Some(model_fruit(id, *raw, c, cfg)),
            CloudLabel::Obstacle(_) => None,
        })
        .collect();
    timings.model = clock.elapsed();

    let mut fruits = Vec::new();
    let mut rejected = Vec::new();
    for o in outcomes {
        match o {
            FruitOutcome::Modelled(m) => fruits.push(m),
            FruitOutcome::Rejected { id, reason, .. } => rejected.push((id, reason)),
        }
    }

    let clock = Instant::now();
    verify_and_rank(&mut fruits, &maps, cfg);
    timings.verify = clock.elapsed();

    Ok(FrameResult {
        frame_id: frame_id.to_string(),
        config_digest: cfg.digest(),
        fruits,
        rejected,
        maps,
        timings,
    })
}

fn frame_id_of(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

/// Loads a frame directory and runs the workflow without writing outputs.
pub fn run_frame_dir(frame_dir: &Path, cfg: &PipelineConfig) -> Result<FrameResult> {
    let clock = Instant::now();
    let frame = load_frame(frame_dir)?;
    let load = clock.elapsed();
    let mut result = process_frame(&frame, &frame_id_of(frame_dir), cfg)?;
    result.timings.ingest += load;
    Ok(result)
}

/// Loads, processes and writes `pick_list.json`, one voxmap per obstacle
/// class and `timing.txt` into `out_dir`.
pub fn process_frame_dir(frame_dir: &Path, cfg: &PipelineConfig, out_dir: &Path) -> Result<FrameResult> {
    let mut result = run_frame_dir(frame_dir, cfg)?;
    write_outputs(&mut result, cfg, out_dir)?;
    Ok(result)
}

/// Work-frame centre of a fruit model, convenient for comparisons.
pub fn fruit_center(result: &FrameResult, id: u16) -> Option<Point3> {
    result.fruits.iter().find(|f| f.id == id).map(|f| f.sphere.center)
}
