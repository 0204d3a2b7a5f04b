use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{run_frame_dir, FrameResult, FruitModel, PipelineConfig};
use crate::error::{Error, Result};

pub const PICK_LIST_FILE: &str = "pick_list.json";
pub const TIMING_FILE: &str = "timing.txt";
pub const CONFIDENCE_MODEL: &str = "logistic_window_penalty";

/// Wall time per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub ingest: Duration,
    pub denoise: Duration,
    pub maps: Duration,
    pub model: Duration,
    pub verify: Duration,
    pub write: Duration,
}

impl StageTimings {
    pub const NAMES: [&'static str; 6] = ["ingest", "denoise", "maps", "model", "verify", "write"];

    pub fn as_array(&self) -> [Duration; 6] {
        [self.ingest, self.denoise, self.maps, self.model, self.verify, self.write]
    }

    pub fn total(&self) -> Duration {
        self.as_array().iter().sum()
    }

    pub fn table(&self) -> String {
        let mut s = String::from("stage      ms\n");
        for (name, d) in Self::NAMES.iter().zip(self.as_array()) {
            let _ = writeln!(s, "{name:<8} {:>8.3}", d.as_secs_f64() * 1e3);
        }
        let _ = writeln!(s, "{:<8} {:>8.3}", "total", self.total().as_secs_f64() * 1e3);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryDiagnostics {
    pub raw_points: usize,
    pub denoised_points: usize,
    pub candidates: usize,
    pub votes: u32,
    pub window_penalty: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FruitEntry {
    pub id: u16,
    pub center_m: [f64; 3],
    pub radius_m: f64,
    pub theta_rad: Option<f64>,
    pub phi_rad: Option<f64>,
    #[serde(rename = "R_pose")]
    pub r_pose: Option<[[f64; 3]; 3]>,
    pub approach_dir: Option<[f64; 3]>,
    pub confidence: f64,
    pub can_pick: bool,
    pub rejection: Option<String>,
    pub diagnostics: EntryDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejected {
    pub id: u16,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PickList {
    pub frame_id: String,
    pub config_digest: String,
    pub confidence_model: String,
    pub coordinate_frame: String,
    pub fruits: Vec<FruitEntry>,
    pub rejected: Vec<Rejected>,
}

impl FruitEntry {
    fn from_model(f: &FruitModel, verify: bool) -> Self {
        let d = &f.diagnostics;
        FruitEntry {
            id: f.id,
            center_m: f.sphere.center.to_array(),
            radius_m: f.sphere.radius,
            theta_rad: f.pose.map(|p| p.theta),
            phi_rad: f.pose.map(|p| p.phi),
            r_pose: f.pose.map(|p| p.rotation_rows()),
            approach_dir: f.pose.map(|p| p.approach_direction().to_array()),
            confidence: f.confidence(),
            can_pick: f.can_pick(),
            rejection: f.pose.is_none().then(|| "pose_estimation_failed".to_string()),
            diagnostics: EntryDiagnostics {
                raw_points: d.raw_points,
                denoised_points: d.denoised_points,
                candidates: d.candidates,
                votes: d.votes,
                window_penalty: if verify {
                    f.decision.map(|x| x.window_penalty)
                } else {
                    None
                },
            },
        }
    }
}

impl PickList {
    pub fn from_result(result: &FrameResult, cfg: &PipelineConfig) -> Self {
        PickList {
            frame_id: result.frame_id.clone(),
            config_digest: result.config_digest.clone(),
            confidence_model: CONFIDENCE_MODEL.to_string(),
            coordinate_frame: "work".to_string(),
            fruits: result
                .fruits
                .iter()
                .map(|f| FruitEntry::from_model(f, cfg.verify))
                .collect(),
            rejected: result
                .rejected
                .iter()
                .map(|(id, r)| Rejected {
                    id: *id,
                    reason: r.as_str().to_string(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pick list serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the pick list, the obstacle maps and the timing table. The write
/// stage time is recorded into `result.timings` before the table is written.
pub fn write_outputs(result: &mut FrameResult, cfg: &PipelineConfig, out_dir: &Path) -> Result<()> {
    let clock = Instant::now();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let list = PickList::from_result(result, cfg);
    write_file(&out_dir.join(PICK_LIST_FILE), &list.to_json())?;
    for map in &result.maps {
        let stem = map.class().as_str();
        map.export(&out_dir.join(format!("{stem}.voxmap")))?;
        if cfg.export_ply {
            map.export_ply(&out_dir.join(format!("{stem}.ply")))?;
        }
    }
    result.timings.write = clock.elapsed();
    write_file(&out_dir.join(TIMING_FILE), &result.timings.table())
}

/// Per-stage statistics over a batch of frames, in milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub frames: usize,
    pub fruits: usize,
    /// `(stage, mean, p95)`; the last row is the total.
    pub rows: Vec<(String, f64, f64)>,
}

impl BenchReport {
    pub fn table(&self) -> String {
        let mut s = format!("{} frames, {} fruits\nstage       mean_ms   p95_ms\n", self.frames, self.fruits);
        for (name, mean, p95) in &self.rows {
            let _ = writeln!(s, "{name:<8} {mean:>10.3} {p95:>8.3}");
        }
        s
    }
}

fn p95(sorted: &[f64]) -> f64 {
    // nearest rank
    let rank = ((0.95 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Runs every frame subdirectory of `frames_dir` (sorted by name) without
/// writing outputs.
pub fn bench_report(frames_dir: &Path, cfg: &PipelineConfig) -> Result<BenchReport> {
    let mut dirs: Vec<_> = fs::read_dir(frames_dir)
        .map_err(|e| Error::io(frames_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::format(frames_dir, "no frame directories found"));
    }
    let mut samples: Vec<[f64; 7]> = Vec::with_capacity(dirs.len());
    let mut fruits = 0;
    for dir in &dirs {
        let r = run_frame_dir(dir, cfg)?;
        fruits += r.fruits.len();
        let mut row = [0.0; 7];
        for (slot, d) in row.iter_mut().zip(r.timings.as_array()) {
            *slot = d.as_secs_f64() * 1e3;
        }
        row[6] = r.timings.total().as_secs_f64() * 1e3;
        samples.push(row);
    }
    let names = StageTimings::NAMES.iter().copied().chain(["total"]);
    let rows = names
        .enumerate()
        .map(|(i, name)| {
            let mut col: Vec<f64> = samples.iter().map(|s| s[i]).collect();
            col.sort_by(f64::total_cmp);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            (name.to_string(), mean, p95(&col))
        })
        .collect();
    Ok(BenchReport {
        frames: dirs.len(),
        fruits,
        rows,
    })
}
