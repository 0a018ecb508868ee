//! Corpus-level retrieval: a query-independent on-disk cache of canonical
//! per-clip detections, parallel scoring of every clip against a parsed
//! query, and deterministic ranking. Also a word-order-blind baseline that
//! ranks clips by summed per-class best-track scores alone.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detect::{Clip, Corpus, DEFAULT_CLIP_LEN, DEFAULT_OVERLAP};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::parser::QueryPlan;
use crate::predicates::ParameterSet;
use crate::sentence::{joint_score, SentenceScore};
use crate::tracker::best_track;

const MANIFEST: &str = "manifest.json";
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestEntry {
    id: String,
    file: String,
    sha256: String,
    clips: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    clip_len: usize,
    overlap: usize,
    videos: Vec<ManifestEntry>,
}

/// The materialized clip cache, held in memory after indexing or loading.
#[derive(Debug, Clone)]
pub struct DetectionCache {
    pub clip_len: usize,
    pub overlap: usize,
    /// Ordered by video id, then start frame.
    pub clips: Vec<Clip>,
}

/// What indexing did: total clips plus how many video files actually
/// changed on disk (zero on a re-run over unchanged input).
#[derive(Debug, Clone, Serialize)]
pub struct IndexReport {
    pub clips: usize,
    pub videos: usize,
    pub written: usize,
    pub unchanged: usize,
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

/// Split every video into clips and persist them under `dir`: one JSON file
/// per video plus a manifest with content hashes. Files whose hash already
/// matches are left untouched, so re-indexing unchanged input rewrites
/// nothing.
pub fn index_corpus(corpus: &Corpus, dir: &Path, clip_len: usize, overlap: usize) -> Result<IndexReport> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let old: Option<Manifest> = match std::fs::read_to_string(dir.join(MANIFEST)) {
        Ok(text) => serde_json::from_str(&text).ok(),
        Err(_) => None,
    };
    let old_hashes: BTreeMap<&str, &str> = old
        .iter()
        .filter(|m| m.version == CACHE_VERSION && m.clip_len == clip_len && m.overlap == overlap)
        .flat_map(|m| m.videos.iter().map(|v| (v.id.as_str(), v.sha256.as_str())))
        .collect();

    let mut ids: Vec<&str> = corpus.videos.iter().map(|v| v.id.as_str()).collect();
    ids.sort_unstable();

    let mut entries = Vec::with_capacity(ids.len());
    let mut total = 0;
    let mut written = 0;
    let mut unchanged = 0;
    for id in ids {
        let clips = corpus.video_clips(id, clip_len, overlap)?;
        total += clips.len();
        let bytes = serde_json::to_vec(&clips).expect("clips serialize");
        let hash = sha256_hex(&bytes);
        let file = format!("video-{id}.json");
        let path = dir.join(&file);
        if old_hashes.get(id) == Some(&hash.as_str()) && path.exists() {
            unchanged += 1;
        } else {
            write_bytes(&path, &bytes)?;
            written += 1;
        }
        entries.push(ManifestEntry {
            id: id.to_string(),
            file,
            sha256: hash,
            clips: clips.len(),
        });
    }
    let manifest = Manifest {
        version: CACHE_VERSION,
        clip_len,
        overlap,
        videos: entries,
    };
    let bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    let path = dir.join(MANIFEST);
    if std::fs::read(&path).ok().as_deref() != Some(bytes.as_slice()) {
        write_bytes(&path, &bytes)?;
    }
    Ok(IndexReport {
        clips: total,
        videos: manifest.videos.len(),
        written,
        unchanged,
    })
}

/// Convenience: index at the default 18-frame / 6-overlap scheme.
pub fn index_corpus_default(corpus: &Corpus, dir: &Path) -> Result<IndexReport> {
    index_corpus(corpus, dir, DEFAULT_CLIP_LEN, DEFAULT_OVERLAP)
}

/// Load a cache directory, verifying every file against the manifest.
pub fn load_cache(dir: &Path) -> Result<DetectionCache> {
    let manifest_path = dir.join(MANIFEST);
    let manifest: Manifest = serde_json::from_str(&read_to_string(&manifest_path)?).map_err(|e| {
        Error::Parse {
            path: manifest_path.display().to_string(),
            line: e.line(),
            msg: e.to_string(),
        }
    })?;
    if manifest.version != CACHE_VERSION {
        return Err(Error::Contract(format!(
            "cache version {} unsupported (expected {CACHE_VERSION}); re-run index",
            manifest.version
        )));
    }
    let mut clips = Vec::new();
    for entry in &manifest.videos {
        let path = dir.join(&entry.file);
        let bytes = std::fs::read(&path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        if sha256_hex(&bytes) != entry.sha256 {
            return Err(Error::Contract(format!(
                "cache file {} does not match its manifest hash; re-run index",
                entry.file
            )));
        }
        let video_clips: Vec<Clip> = serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        clips.extend(video_clips);
    }
    Ok(DetectionCache {
        clip_len: manifest.clip_len,
        overlap: manifest.overlap,
        clips,
    })
}

impl DetectionCache {
    /// Build an in-memory cache directly (no disk round trip).
    pub fn from_corpus(corpus: &Corpus, clip_len: usize, overlap: usize) -> Result<DetectionCache> {
        Ok(DetectionCache {
            clip_len,
            overlap,
            clips: corpus.clips(clip_len, overlap)?,
        })
    }

    pub fn clip(&self, clip_id: &str) -> Option<&Clip> {
        self.clips.iter().find(|c| c.clip_id == clip_id)
    }
}

/// One ranked result. `rank` is 1-based and contiguous.
#[derive(Debug, Clone, Serialize)]
pub struct SearchHit {
    pub rank: usize,
    pub clip_id: String,
    pub score: f64,
    pub result: SentenceScore,
}

/// Score every cached clip against the plan and return the top `k` finite
/// hits at or above `threshold`, sorted by descending score with ties
/// broken by clip id. Clips are scored in parallel; the ranking is
/// independent of thread count.
pub fn search(
    plan: &QueryPlan,
    cache: &DetectionCache,
    lexicon: &Lexicon,
    params: &ParameterSet,
    prune: usize,
    k: usize,
    threshold: f64,
) -> Result<Vec<SearchHit>> {
    let scored: Vec<(usize, SentenceScore)> = cache
        .clips
        .par_iter()
        .enumerate()
        .map(|(i, clip)| joint_score(clip, plan, lexicon, params, prune).map(|s| (i, s)))
        .collect::<Result<_>>()?;
    let mut hits: Vec<(usize, SentenceScore)> = scored
        .into_iter()
        .filter(|(_, s)| s.score.is_finite() && s.score >= threshold)
        .collect();
    hits.sort_by(|(i, a), (j, b)| {
        b.score
            .partial_cmp(&a.score)
            .expect("finite scores")
            .then_with(|| cache.clips[*i].clip_id.cmp(&cache.clips[*j].clip_id))
    });
    hits.truncate(k);
    Ok(hits
        .into_iter()
        .enumerate()
        .map(|(r, (i, result))| SearchHit {
            rank: r + 1,
            clip_id: cache.clips[i].clip_id.clone(),
            score: result.score,
            result,
        })
        .collect())
}

/// A baseline result: no tracks, just the summed per-class tracker score.
#[derive(Debug, Clone, Serialize)]
pub struct BaselineHit {
    pub rank: usize,
    pub clip_id: String,
    pub score: f64,
}

/// Word-order-blind baseline: rank clips by the sum of each queried class's
/// independent best-track score. Clips missing any queried class in some
/// frame are excluded. Role-swapped queries have the same class multiset,
/// so they always rank identically here.
pub fn baseline_search(classes: &[String], cache: &DetectionCache, k: usize) -> Vec<BaselineHit> {
    let scored: Vec<Option<f64>> = cache
        .clips
        .par_iter()
        .map(|clip| {
            let mut acc = 0.0;
            for class in classes {
                acc += best_track(clip, class)?.score;
            }
            Some(acc)
        })
        .collect();
    let mut hits: Vec<(usize, f64)> = scored
        .into_iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|s| (i, s)))
        .collect();
    hits.sort_by(|(i, a), (j, b)| {
        b.partial_cmp(a)
            .expect("finite scores")
            .then_with(|| cache.clips[*i].clip_id.cmp(&cache.clips[*j].clip_id))
    });
    hits.truncate(k);
    hits.into_iter()
        .enumerate()
        .map(|(r, (i, score))| BaselineHit {
            rank: r + 1,
            clip_id: cache.clips[i].clip_id.clone(),
            score,
        })
        .collect()
}

/// Stable JSON rendering of a hit list, including the boxes each track
/// passes through (looked up from the cache).
pub fn hits_to_json(hits: &[SearchHit], cache: &DetectionCache) -> serde_json::Value {
    let items: Vec<serde_json::Value> = hits
        .iter()
        .map(|h| {
            let clip = cache.clip(&h.clip_id).expect("hit came from this cache");
            let tracks: Vec<serde_json::Value> = h
                .result
                .tracks
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let boxes: Vec<serde_json::Value> = t
                        .picks
                        .iter()
                        .enumerate()
                        .map(|(frame, &pick)| {
                            let d = &clip.class_frame(frame, &t.class)[pick];
                            serde_json::json!({
                                "cx": d.cx, "cy": d.cy,
                                "width": d.width, "height": d.height,
                            })
                        })
                        .collect();
                    serde_json::json!({
                        "participant": i,
                        "class": t.class,
                        "picks": t.picks,
                        "boxes": boxes,
                    })
                })
                .collect();
            let word_paths: Vec<serde_json::Value> = h
                .result
                .word_paths
                .iter()
                .map(|w| serde_json::json!({"word": w.word, "states": w.states}))
                .collect();
            serde_json::json!({
                "rank": h.rank,
                "clip": h.clip_id,
                "score": h.score,
                "tracks": tracks,
                "word_paths": word_paths,
            })
        })
        .collect();
    serde_json::Value::Array(items)
}

/// Resolve the cache directory for a corpus directory.
pub fn cache_dir(corpus_dir: &Path) -> PathBuf {
    corpus_dir.join("cache")
}
