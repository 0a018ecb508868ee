//! Shared fixtures for the pipeline benchmarks: a clean planted ride clip
//! and a noisy distractor clip, both at the default 18-frame length.

use vidsent_core::detect::Clip;
use vidsent_core::synth::{generate, parallel_scene, ride_scene, NoiseModel};

fn single_clip(scene: &vidsent_core::synth::SceneSpec) -> Clip {
    let (corpus, _) = generate(std::slice::from_ref(scene)).unwrap();
    let mut clips = corpus.video_clips(&scene.id, 18, 6).unwrap();
    clips.remove(0)
}

pub fn ride_clip() -> Clip {
    single_clip(&ride_scene("bench", 1, NoiseModel::default()))
}

pub fn noisy_distractor_clip() -> Clip {
    single_clip(&parallel_scene(
        "bench",
        2,
        NoiseModel {
            score_jitter: 0.2,
            dropout: 0.0,
            clutter_per_frame: 4,
        },
    ))
}
