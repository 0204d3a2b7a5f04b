//! Detection (precision / recall / F1) and segmentation (MIoU) scores.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::{label_components, load_label_mask, Raster};

/// IoU needed for a predicted component to match a true one.
pub const MATCH_IOU: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DetectionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// Pixel confusion matrix (`matrix[i][j]`: true class `i` predicted `j`)
/// plus object-level detection counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionCounts {
    pub classes: usize,
    pub matrix: Vec<Vec<u64>>,
    pub detection: DetectionCounts,
}

impl ConfusionCounts {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            matrix: vec![vec![0; classes]; classes],
            detection: DetectionCounts::default(),
        }
    }

    pub fn from_matrix(matrix: Vec<Vec<u64>>) -> Self {
        Self {
            classes: matrix.len(),
            matrix,
            detection: DetectionCounts::default(),
        }
    }

    pub fn accumulate(&mut self, other: &ConfusionCounts) -> Result<()> {
        if other.classes != self.classes {
            return Err(Error::Contract("class counts differ".into()));
        }
        for (a, b) in self.matrix.iter_mut().zip(&other.matrix) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.detection.tp += other.detection.tp;
        self.detection.fp += other.detection.fp;
        self.detection.fn_ += other.detection.fn_;
        Ok(())
    }

    /// Same counts with predictions and truth swapped.
    pub fn transposed(&self) -> Self {
        let k = self.classes;
        Self {
            classes: k,
            matrix: (0..k).map(|i| (0..k).map(|j| self.matrix[j][i]).collect()).collect(),
            detection: DetectionCounts {
                tp: self.detection.tp,
                fp: self.detection.fn_,
                fn_: self.detection.fp,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionScores {
    /// `None` when there are no predictions.
    pub precision: Option<f64>,
    /// `None` when there are no true objects.
    pub recall: Option<f64>,
    /// Harmonic mean; 0 when undefined (see `f1_defined`).
    pub f1: f64,
    pub f1_defined: bool,
}

pub fn detection_scores(c: &DetectionCounts) -> DetectionScores {
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    DetectionScores {
        precision,
        recall,
        f1: f1.unwrap_or(0.0),
        f1_defined: f1.is_some(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiouResult {
    /// `None` when every class is empty.
    pub value: Option<f64>,
    /// Per-class IoU, `None` for classes with no true or predicted pixel.
    pub per_class: Vec<Option<f64>>,
    /// Classes left out of the mean.
    pub excluded: Vec<usize>,
}

pub fn miou(c: &ConfusionCounts) -> MiouResult {
    let k = c.classes;
    let per_class: Vec<Option<f64>> = (0..k)
        .map(|i| {
            let diag = c.matrix[i][i];
            let row: u64 = c.matrix[i].iter().sum();
            let col: u64 = (0..k).map(|j| c.matrix[j][i]).sum();
            let union = row + col - diag;
            (union > 0).then(|| diag as f64 / union as f64)
        })
        .collect();
    let included: Vec<f64> = per_class.iter().flatten().copied().collect();
    MiouResult {
        value: (!included.is_empty()).then(|| included.iter().sum::<f64>() / included.len() as f64),
        excluded: per_class
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_none())
            .map(|(i, _)| i)
            .collect(),
        per_class,
    }
}

/// Pixel tally plus greedy component matching. Objects are 8-connected
/// regions of one nonzero label; a predicted and a true object match when
/// they share the label and their IoU is at least [`MATCH_IOU`], taking
/// pairs in order of decreasing IoU.
pub fn masks_to_counts(pred: &Raster<u16>, truth: &Raster<u16>, classes: usize) -> Result<ConfusionCounts> {
    if pred.dims() != truth.dims() {
        return Err(Error::Structure(format!(
            "prediction is {:?} but truth is {:?}",
            pred.dims(),
            truth.dims()
        )));
    }
    let mut counts = ConfusionCounts::new(classes);
    for (&p, &t) in pred.as_slice().iter().zip(truth.as_slice()) {
        if p as usize >= classes || t as usize >= classes {
            return Err(Error::Contract(format!("label {} outside [0, {classes})", p.max(t))));
        }
        counts.matrix[t as usize][p as usize] += 1;
    }

    let pc = label_components(pred);
    let tc = label_components(truth);
    let mut inter: HashMap<(u32, u32), u64> = HashMap::new();
    for i in 0..pred.as_slice().len() {
        let (a, b) = (pc.labels[i], tc.labels[i]);
        if a != 0 && b != 0 && pred.as_slice()[i] == truth.as_slice()[i] {
            *inter.entry((a, b)).or_insert(0) += 1;
        }
    }
    let mut pairs: Vec<(f64, u32, u32)> = inter
        .into_iter()
        .map(|((a, b), n)| {
            let union = pc.areas[a as usize - 1] as u64 + tc.areas[b as usize - 1] as u64 - n;
            (n as f64 / union as f64, a, b)
        })
        .filter(|&(iou, _, _)| iou >= MATCH_IOU)
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_p = vec![false; pc.count() + 1];
    let mut used_t = vec![false; tc.count() + 1];
    let mut tp = 0u64;
    for (_, a, b) in pairs {
        if !used_p[a as usize] && !used_t[b as usize] {
            used_p[a as usize] = true;
            used_t[b as usize] = true;
            tp += 1;
        }
    }
    counts.detection = DetectionCounts {
        tp,
        fp: pc.count() as u64 - tp,
        fn_: tc.count() as u64 - tp,
    };
    Ok(counts)
}

/// Scores over a set of mask pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub images: usize,
    pub match_iou: f64,
    pub counts: ConfusionCounts,
    pub detection: DetectionScores,
    pub miou: MiouResult,
}

impl EvalReport {
    pub fn from_counts(images: usize, counts: ConfusionCounts) -> Self {
        EvalReport {
            images,
            match_iou: MATCH_IOU,
            detection: detection_scores(&counts.detection),
            miou: miou(&counts),
            counts,
        }
    }

    pub fn text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.6}"));
        let d = &self.detection;
        let c = &self.counts.detection;
        let mut s = format!(
            "images {}  classes {}  match IoU >= {}\n",
            self.images, self.counts.classes, self.match_iou
        );
        let _ = writeln!(s, "TP {}  FP {}  FN {}", c.tp, c.fp, c.fn_);
        let _ = writeln!(s, "precision {}", opt(d.precision));
        let _ = writeln!(s, "recall    {}", opt(d.recall));
        let _ = writeln!(s, "f1        {}{}", format_args!("{:.6}", d.f1), if d.f1_defined { "" } else { " (undefined)" });
        let _ = writeln!(s, "miou      {}", opt(self.miou.value));
        for (i, v) in self.miou.per_class.iter().enumerate() {
            let _ = writeln!(s, "  class {i}: {}", v.map_or("excluded (empty)".to_string(), |x| format!("{x:.6}")));
        }
        s
    }
}

/// Pairs every `*.png` in `truth_dir` with the same file name in `pred_dir`
/// and accumulates counts over all pairs.
pub fn evaluate_dirs(pred_dir: &Path, truth_dir: &Path, classes: usize) -> Result<EvalReport> {
    if classes == 0 {
        return Err(Error::Config("class count must be positive".into()));
    }
    let mut names: Vec<_> = fs::read_dir(truth_dir)
        .map_err(|e| Error::io(truth_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Error::format(truth_dir, "no PNG masks found"));
    }
    let mut total = ConfusionCounts::new(classes);
    for truth_path in &names {
        let pred_path = pred_dir.join(truth_path.file_name().expect("file name"));
        let truth = load_label_mask(truth_path)?;
        let pred = load_label_mask(&pred_path)?;
        let counts = masks_to_counts(&pred, &truth, classes).map_err(|e| Error::format(&pred_path, e.to_string()))?;
        total.accumulate(&counts)?;
    }
    Ok(EvalReport::from_counts(names.len(), total))
}
