//! Threshold learning by exhaustive grid search. An example is classified
//! positive when its sentence is feasible on its clip (the joint score is
//! finite); the trainer evaluates every grid point and returns the one with
//! the most correct classifications, preferring the earliest point in grid
//! order on ties.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::detect::Clip;
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::parser::{parse, QueryPlan};
use crate::predicates::ParameterSet;
use crate::sentence::joint_score;

/// A labeled (clip, sentence) pair.
#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub clip: Clip,
    pub sentence: String,
    pub positive: bool,
}

/// Candidate values per parameter. Every combination must itself be a valid
/// `ParameterSet`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub far: Vec<f64>,
    pub close: Vec<f64>,
    pub stationary: Vec<f64>,
    pub d_closing: Vec<f64>,
    pub d_angle: Vec<f64>,
    pub d_pp: Vec<f64>,
    pub d_quickly: Vec<f64>,
    pub d_slowly: Vec<f64>,
    pub overlap: Vec<f64>,
}

impl GridSpec {
    pub fn size(&self) -> usize {
        self.dims().iter().map(|d| d.len()).product()
    }

    fn dims(&self) -> [&[f64]; 9] {
        [
            &self.far,
            &self.close,
            &self.stationary,
            &self.d_closing,
            &self.d_angle,
            &self.d_pp,
            &self.d_quickly,
            &self.d_slowly,
            &self.overlap,
        ]
    }

    fn validate(&self) -> Result<()> {
        if self.dims().iter().any(|d| d.is_empty()) {
            return Err(Error::Contract("every grid dimension needs at least one value".into()));
        }
        Ok(())
    }

    /// Grid points in documented order: `far` is the outermost dimension,
    /// `overlap` the innermost.
    pub fn points(&self) -> Vec<ParameterSet> {
        let mut out = Vec::with_capacity(self.size());
        for &far in &self.far {
            for &close in &self.close {
                for &stationary in &self.stationary {
                    for &d_closing in &self.d_closing {
                        for &d_angle in &self.d_angle {
                            for &d_pp in &self.d_pp {
                                for &d_quickly in &self.d_quickly {
                                    for &d_slowly in &self.d_slowly {
                                        for &overlap in &self.overlap {
                                            out.push(ParameterSet {
                                                far,
                                                close,
                                                stationary,
                                                d_closing,
                                                d_angle,
                                                d_pp,
                                                d_quickly,
                                                d_slowly,
                                                overlap,
                                            });
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// What the search found: the winning point, its training accuracy, the
/// per-example verdicts under it, and how many grid points were scored.
#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub params: ParameterSet,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    pub evaluated_points: usize,
    /// Per example, whether the winning point classified it correctly.
    pub verdicts: Vec<bool>,
}

fn verdicts(
    examples: &[(&TrainingExample, QueryPlan)],
    lexicon: &Lexicon,
    params: &ParameterSet,
    prune: usize,
) -> Result<Vec<bool>> {
    examples
        .iter()
        .map(|(ex, plan)| {
            let s = joint_score(&ex.clip, plan, lexicon, params, prune)?;
            Ok(s.is_feasible() == ex.positive)
        })
        .collect()
}

/// Evaluate every grid point against the examples and keep the most
/// accurate one (earliest in grid order on ties). Points run in parallel;
/// the argmax reduction is by (accuracy, point index) and therefore
/// deterministic.
pub fn grid_search(
    examples: &[TrainingExample],
    grid: &GridSpec,
    lexicon: &Lexicon,
    prune: usize,
) -> Result<TrainReport> {
    grid.validate()?;
    if !examples.iter().any(|e| e.positive) || !examples.iter().any(|e| !e.positive) {
        return Err(Error::Contract(
            "training set needs at least one positive and one negative example".into(),
        ));
    }
    let parsed: Vec<(&TrainingExample, QueryPlan)> = examples
        .iter()
        .map(|e| Ok((e, parse(&e.sentence)?)))
        .collect::<Result<_>>()?;

    let points = grid.points();
    let evaluations = AtomicUsize::new(0);
    let scored: Vec<usize> = points
        .par_iter()
        .map(|p| {
            evaluations.fetch_add(1, Ordering::Relaxed);
            Ok(verdicts(&parsed, lexicon, p, prune)?
                .into_iter()
                .filter(|&ok| ok)
                .count())
        })
        .collect::<Result<_>>()?;
    let evaluated_points = evaluations.load(Ordering::Relaxed);
    debug_assert_eq!(evaluated_points, grid.size());

    let (best_idx, &correct) = scored
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.cmp(b).then(j.cmp(i)))
        .expect("grid is nonempty");
    let params = points[best_idx].clone();
    // re-derive the verdicts from the returned point so the report cannot
    // drift from the model it describes
    let final_verdicts = verdicts(&parsed, lexicon, &params, prune)?;
    assert_eq!(final_verdicts.iter().filter(|&&ok| ok).count(), correct);
    Ok(TrainReport {
        params,
        correct,
        total: examples.len(),
        accuracy: correct as f64 / examples.len() as f64,
        evaluated_points,
        verdicts: final_verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{
        demo_params, far_pair_scene, generate, overlap_stationary_scene, parallel_scene,
        ride_scene, NoiseModel, SceneSpec,
    };
    use std::f64::consts::PI;

    fn clip_for(scene: &SceneSpec) -> Clip {
        let (corpus, _) = generate(std::slice::from_ref(scene)).unwrap();
        corpus.video_clips(&scene.id, 18, 6).unwrap().remove(0)
    }

    /// 3 riding positives, 3 non-riding negatives, separable exactly at the
    /// demo parameter values.
    fn examples() -> Vec<TrainingExample> {
        let ride = "The person rode the horse".to_string();
        let mut out = Vec::new();
        for (i, scene) in [
            ride_scene("p0", 1, NoiseModel::default()),
            ride_scene("p1", 2, NoiseModel::default()),
            ride_scene("p2", 3, NoiseModel::default()),
        ]
        .iter()
        .enumerate()
        {
            let mut scene = scene.clone();
            scene.id = format!("p{i}");
            out.push(TrainingExample {
                clip: clip_for(&scene),
                sentence: ride.clone(),
                positive: true,
            });
        }
        for scene in [
            far_pair_scene("n0", 4, NoiseModel::default()),
            parallel_scene("n1", 5, NoiseModel::default()),
            overlap_stationary_scene("n2", 6, NoiseModel::default()),
        ] {
            out.push(TrainingExample {
                clip: clip_for(&scene),
                sentence: ride.clone(),
                positive: false,
            });
        }
        out
    }

    /// A small grid containing the separating point. Slow overlapping
    /// movers (1.5 px/frame) would fool stationary = 1, and loose overlap
    /// thresholds are probed on both sides of the rider's IOU of ~0.24.
    fn grid() -> GridSpec {
        GridSpec {
            far: vec![200.0],
            close: vec![80.0],
            stationary: vec![1.0, 2.0],
            d_closing: vec![2.0],
            d_angle: vec![PI / 6.0, PI / 3.0],
            d_pp: vec![10.0],
            d_quickly: vec![8.0],
            d_slowly: vec![4.0],
            overlap: vec![0.1, 0.2, 0.5],
        }
    }

    #[test]
    fn recovers_a_separating_point() {
        let lex = Lexicon::stock();
        let report = grid_search(&examples(), &grid(), &lex, 12).unwrap();
        assert_eq!(report.correct, 6);
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.evaluated_points, 12);
        assert!(report.verdicts.iter().all(|&v| v));
        // riding must still be feasible at the returned point
        let demo = demo_params();
        assert!(report.params.overlap <= 0.24);
        assert!(report.params.validate().is_ok());
        assert_eq!(report.params.far, demo.far);
    }

    #[test]
    fn single_point_grid_returns_that_point() {
        let lex = Lexicon::stock();
        let g = GridSpec {
            far: vec![200.0],
            close: vec![80.0],
            stationary: vec![2.0],
            d_closing: vec![2.0],
            d_angle: vec![PI / 6.0],
            d_pp: vec![10.0],
            d_quickly: vec![8.0],
            d_slowly: vec![4.0],
            overlap: vec![0.9], // too strict for the rider: positives fail
        };
        let report = grid_search(&examples(), &g, &lex, 12).unwrap();
        assert_eq!(report.evaluated_points, 1);
        assert_eq!(report.params.overlap, 0.9);
        // negatives still classify correctly, positives cannot
        assert_eq!(report.correct, 3);
    }

    #[test]
    fn unseparable_data_reported_honestly() {
        let lex = Lexicon::stock();
        let scene = ride_scene("x", 1, NoiseModel::default());
        let clip = clip_for(&scene);
        let ex = vec![
            TrainingExample {
                clip: clip.clone(),
                sentence: "The person rode the horse".into(),
                positive: true,
            },
            TrainingExample {
                clip,
                sentence: "The person rode the horse".into(),
                positive: false,
            },
        ];
        let report = grid_search(&ex, &grid(), &lex, 12).unwrap();
        assert_eq!(report.correct, 1);
        assert_eq!(report.accuracy, 0.5);
    }

    #[test]
    fn needs_both_labels() {
        let lex = Lexicon::stock();
        let mut ex = examples();
        ex.retain(|e| e.positive);
        assert!(matches!(
            grid_search(&ex, &grid(), &lex, 12).unwrap_err(),
            Error::Contract(_)
        ));
    }

    #[test]
    fn tie_break_prefers_earliest_point() {
        // with only negatives distinguishable, many points tie; the first
        // grid point must win
        let lex = Lexicon::stock();
        let g = grid();
        let report = grid_search(&examples(), &g, &lex, 12).unwrap();
        let points = g.points();
        let first_perfect = points
            .iter()
            .position(|p| {
                let ex = examples();
                ex.iter().all(|e| {
                    let plan = parse(&e.sentence).unwrap();
                    let s = joint_score(&e.clip, &plan, &lex, p, 12).unwrap();
                    s.is_feasible() == e.positive
                })
            })
            .unwrap();
        assert_eq!(report.params, points[first_perfect]);
    }
}
