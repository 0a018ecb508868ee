//! Detection-based single-object tracking. A track picks one detection per
//! frame; its score sums the normalized detection scores and the motion
//! coherence between consecutive picks, maximized by dynamic programming
//! over the detection lattice.

use serde::Serialize;

use crate::detect::{Clip, Detection};

/// Motion-coherence sigmoid center (canonical pixels).
const COHERENCE_CENTER: f64 = 50.0;
/// Motion-coherence sigmoid scale.
const COHERENCE_SCALE: f64 = -1.0 / 11.0;

/// One detection index per frame for a single object, with the track score.
#[derive(Debug, Clone, Serialize)]
pub struct Track {
    pub class: String,
    pub picks: Vec<usize>,
    pub score: f64,
}

/// Agreement between a detection's flow-projected center and the center
/// actually picked in the next frame. 1 when the projection lands exactly
/// on the next center, decaying through 0.5 at 50 canonical pixels.
pub fn motion_coherence(prev: &Detection, cur: &Detection) -> f64 {
    let dx = prev.cx + prev.vx - cur.cx;
    let dy = prev.cy + prev.vy - cur.cy;
    let d = dx.hypot(dy);
    1.0 / (1.0 + (-COHERENCE_SCALE * (d - COHERENCE_CENTER)).exp())
}

/// Recompute a track's score left-to-right from its picks. This is the
/// canonical summation order; the DP accumulates in the same order so the
/// returned score reproduces exactly.
pub fn track_score(clip: &Clip, class: &str, picks: &[usize]) -> f64 {
    let mut acc = 0.0;
    for (t, &j) in picks.iter().enumerate() {
        let dets = clip.class_frame(t, class);
        if t > 0 {
            acc += motion_coherence(&clip.class_frame(t - 1, class)[picks[t - 1]], &dets[j]);
        }
        acc += dets[j].f;
    }
    acc
}

/// Highest-scoring track for `class` through the clip, or `None` when some
/// frame has no detections of the class. Viterbi in O(T * J^2); ties prefer
/// the lower detection index.
pub fn best_track(clip: &Clip, class: &str) -> Option<Track> {
    let t_len = clip.len();
    if t_len == 0 {
        return None;
    }
    let frames: Vec<&[Detection]> = (0..t_len).map(|t| clip.class_frame(t, class)).collect();
    if frames.iter().any(|f| f.is_empty()) {
        return None;
    }

    let mut scores: Vec<f64> = frames[0].iter().map(|d| d.f).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(t_len);

    for t in 1..t_len {
        let mut next = vec![f64::NEG_INFINITY; frames[t].len()];
        let mut ptr = vec![0usize; frames[t].len()];
        for (j, cur) in frames[t].iter().enumerate() {
            let mut best = f64::NEG_INFINITY;
            let mut best_prev = 0;
            for (i, prev) in frames[t - 1].iter().enumerate() {
                let cand = scores[i] + motion_coherence(prev, cur);
                if cand > best {
                    best = cand;
                    best_prev = i;
                }
            }
            next[j] = best + cur.f;
            ptr[j] = best_prev;
        }
        scores = next;
        back.push(ptr);
    }

    let mut last = 0;
    for j in 1..scores.len() {
        if scores[j] > scores[last] {
            last = j;
        }
    }

    let mut picks = vec![0usize; t_len];
    picks[t_len - 1] = last;
    for t in (1..t_len).rev() {
        picks[t - 1] = back[t - 1][picks[t]];
    }

    // Re-evaluate along the winning path so the reported score is the exact
    // left-to-right sum of its terms.
    let score = track_score(clip, class, &picks);
    Some(Track {
        class: class.to_string(),
        picks,
        score,
    })
}
