//! Detection ingestion: per-frame detector output is read from disk,
//! rescaled into the canonical resolution, passed through the detection
//! sigmoid, and cut into fixed-length overlapping clips.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All geometry is evaluated in this resolution regardless of the source
/// video's size, so distance thresholds mean the same thing everywhere.
pub const CANONICAL_WIDTH: f64 = 1280.0;
pub const CANONICAL_HEIGHT: f64 = 720.0;

/// Default clip length in frames.
pub const DEFAULT_CLIP_LEN: usize = 18;
/// Default overlap between consecutive clips, in frames.
pub const DEFAULT_OVERLAP: usize = 6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VideoMeta {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub frames: u32,
    pub fps: f64,
}

/// Per-class sigmoid center; raw detector scores are normalized relative
/// to the model's own threshold so scores are comparable across classes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassModelMeta {
    pub label: String,
    pub threshold: f64,
}

/// One detector output in source-resolution pixels. `x`/`y` is the top-left
/// corner; `vx`/`vy` is the average optical flow inside the box.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawDetection {
    pub video: String,
    pub frame: u32,
    pub class: String,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub score: f64,
    pub vx: f64,
    pub vy: f64,
}

/// A detection in canonical coordinates: center-form box, unit-interval
/// normalized score `f`, and flow rescaled into canonical pixels/frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
    pub height: f64,
    pub class: String,
    pub f: f64,
    pub vx: f64,
    pub vy: f64,
    /// Position within its frame's detection list, in file order.
    pub source_index: u32,
}

/// A fixed-length window of frames, each holding per-class detection lists.
/// The unit of search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Clip {
    pub clip_id: String,
    pub video_id: String,
    pub start_frame: u32,
    pub frames: Vec<BTreeMap<String, Vec<Detection>>>,
}

impl Clip {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Detections of `class` in frame `t` (empty slice when none).
    pub fn class_frame(&self, t: usize, class: &str) -> &[Detection] {
        self.frames[t].get(class).map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn clip_id(video_id: &str, start_frame: u32) -> String {
    format!("{video_id}:{start_frame:06}")
}

/// An ingested corpus: declared videos and classes plus raw detections
/// grouped by video and frame. Immutable after ingestion.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub videos: Vec<VideoMeta>,
    pub classes: Vec<ClassModelMeta>,
    frames: BTreeMap<String, Vec<Vec<RawDetection>>>,
}

#[derive(Debug, Deserialize)]
struct MetaFile {
    videos: Vec<VideoMeta>,
    classes: Vec<ClassModelMeta>,
}

/// Read a detection stream (one JSON record per line) and its metadata
/// document, validating every record against the declared videos and
/// classes. Detections within a frame keep file order, which defines
/// their `source_index`.
pub fn ingest(detections_path: &Path, meta_path: &Path) -> Result<Corpus> {
    let meta_text = std::fs::read_to_string(meta_path).map_err(|source| Error::Io {
        path: meta_path.display().to_string(),
        source,
    })?;
    let meta: MetaFile = serde_json::from_str(&meta_text).map_err(|e| Error::Parse {
        path: meta_path.display().to_string(),
        line: e.line(),
        msg: e.to_string(),
    })?;

    let file = std::fs::File::open(detections_path).map_err(|source| Error::Io {
        path: detections_path.display().to_string(),
        source,
    })?;
    let reader = std::io::BufReader::new(file);

    Corpus::from_parts(meta.videos, meta.classes, reader.lines().map(|l| l.map_err(|source| Error::Io {
        path: detections_path.display().to_string(),
        source,
    })), &detections_path.display().to_string())
}

impl Corpus {
    /// Assemble a corpus from already-decoded parts. Used by the synthetic
    /// generator and by tests; `ingest` is the file-backed entry point.
    pub fn new(
        videos: Vec<VideoMeta>,
        classes: Vec<ClassModelMeta>,
        detections: Vec<RawDetection>,
    ) -> Result<Corpus> {
        let mut corpus = Corpus::empty(videos, classes)?;
        for (i, d) in detections.into_iter().enumerate() {
            corpus.push(d, "<memory>", i + 1)?;
        }
        Ok(corpus)
    }

    fn from_parts<I>(
        videos: Vec<VideoMeta>,
        classes: Vec<ClassModelMeta>,
        lines: I,
        path: &str,
    ) -> Result<Corpus>
    where
        I: Iterator<Item = Result<String>>,
    {
        let mut corpus = Corpus::empty(videos, classes)?;
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawDetection = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.to_string(),
                line: lineno + 1,
                msg: e.to_string(),
            })?;
            corpus.push(raw, path, lineno + 1)?;
        }
        Ok(corpus)
    }

    fn empty(videos: Vec<VideoMeta>, classes: Vec<ClassModelMeta>) -> Result<Corpus> {
        let mut frames = BTreeMap::new();
        for v in &videos {
            if v.width == 0 || v.height == 0 {
                return Err(Error::Contract(format!(
                    "video {:?} has zero width or height",
                    v.id
                )));
            }
            if frames
                .insert(v.id.clone(), vec![Vec::new(); v.frames as usize])
                .is_some()
            {
                return Err(Error::Reference(format!("duplicate video id {:?}", v.id)));
            }
        }
        Ok(Corpus {
            videos,
            classes,
            frames,
        })
    }

    fn push(&mut self, raw: RawDetection, path: &str, line: usize) -> Result<()> {
        if raw.w <= 0.0 || raw.h <= 0.0 {
            return Err(Error::Parse {
                path: path.to_string(),
                line,
                msg: format!("non-positive box size {}x{}", raw.w, raw.h),
            });
        }
        if !self.classes.iter().any(|c| c.label == raw.class) {
            return Err(Error::Reference(format!(
                "detection references undeclared class {:?}",
                raw.class
            )));
        }
        let frames = self.frames.get_mut(&raw.video).ok_or_else(|| {
            Error::Reference(format!("detection references undeclared video {:?}", raw.video))
        })?;
        let slot = frames.get_mut(raw.frame as usize).ok_or_else(|| {
            Error::Reference(format!(
                "detection in video {:?} at frame {} out of range",
                raw.video, raw.frame
            ))
        })?;
        slot.push(raw);
        Ok(())
    }

    pub fn video(&self, id: &str) -> Option<&VideoMeta> {
        self.videos.iter().find(|v| v.id == id)
    }

    pub fn class_threshold(&self, label: &str) -> Option<f64> {
        self.classes
            .iter()
            .find(|c| c.label == label)
            .map(|c| c.threshold)
    }

    pub fn raw_frames(&self, video_id: &str) -> Option<&[Vec<RawDetection>]> {
        self.frames.get(video_id).map(Vec::as_slice)
    }

    /// Total raw detection count, across all videos.
    pub fn detection_count(&self) -> usize {
        self.frames.values().map(|v| v.iter().map(Vec::len).sum::<usize>()).sum()
    }

    /// Split one video into fixed-length clips with canonical detections.
    /// Only full-length windows are emitted; trailing partials are dropped.
    pub fn video_clips(&self, video_id: &str, clip_len: usize, overlap: usize) -> Result<Vec<Clip>> {
        assert!(clip_len > overlap, "clip_len must exceed overlap");
        let meta = self
            .video(video_id)
            .ok_or_else(|| Error::Reference(format!("unknown video {:?}", video_id)))?;
        let frames = &self.frames[video_id];
        let starts = clip_starts(meta.frames as usize, clip_len, overlap);

        let mut clips = Vec::with_capacity(starts.len());
        for start in starts {
            let mut clip_frames = Vec::with_capacity(clip_len);
            for t in start..start + clip_len {
                let mut by_class: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
                for (idx, raw) in frames[t].iter().enumerate() {
                    let threshold = self.class_threshold(&raw.class).expect("class validated");
                    let det = canonical_detection(raw, meta, threshold, idx as u32);
                    by_class.entry(raw.class.clone()).or_default().push(det);
                }
                clip_frames.push(by_class);
            }
            clips.push(Clip {
                clip_id: clip_id(video_id, start as u32),
                video_id: video_id.to_string(),
                start_frame: start as u32,
                frames: clip_frames,
            });
        }
        Ok(clips)
    }

    /// All clips for all videos, ordered by video id then start frame.
    pub fn clips(&self, clip_len: usize, overlap: usize) -> Result<Vec<Clip>> {
        let mut ids: Vec<&str> = self.videos.iter().map(|v| v.id.as_str()).collect();
        ids.sort_unstable();
        let mut out = Vec::new();
        for id in ids {
            out.extend(self.video_clips(id, clip_len, overlap)?);
        }
        Ok(out)
    }
}

/// Start frames of the full-length windows covering `num_frames` frames.
pub fn clip_starts(num_frames: usize, clip_len: usize, overlap: usize) -> Vec<usize> {
    assert!(clip_len > overlap, "clip_len must exceed overlap");
    let stride = clip_len - overlap;
    if num_frames < clip_len {
        return Vec::new();
    }
    (0..=(num_frames - clip_len) / stride)
        .map(|i| i * stride)
        .collect()
}

/// Rescale a source-resolution box and flow vector into canonical space and
/// convert the box to center form. Flow is rescaled along with geometry so
/// pixel-per-frame thresholds are resolution independent.
pub fn rescale_to_canonical(raw: &RawDetection, meta: &VideoMeta) -> (f64, f64, f64, f64, f64, f64) {
    let sx = CANONICAL_WIDTH / meta.width as f64;
    let sy = CANONICAL_HEIGHT / meta.height as f64;
    let width = raw.w * sx;
    let height = raw.h * sy;
    let cx = (raw.x + raw.w / 2.0) * sx;
    let cy = (raw.y + raw.h / 2.0) * sy;
    (cx, cy, width, height, raw.vx * sx, raw.vy * sy)
}

/// Detection-score sigmoid: 1/(1+exp(-2(score - threshold))). The center is
/// the class model's own threshold and the scale is fixed at 2.
pub fn normalize_score(raw_score: f64, threshold: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * (raw_score - threshold)).exp())
}

fn canonical_detection(
    raw: &RawDetection,
    meta: &VideoMeta,
    threshold: f64,
    source_index: u32,
) -> Detection {
    let (cx, cy, width, height, vx, vy) = rescale_to_canonical(raw, meta);
    Detection {
        cx,
        cy,
        width,
        height,
        class: raw.class.clone(),
        f: normalize_score(raw.score, threshold),
        vx,
        vy,
        source_index,
    }
}
