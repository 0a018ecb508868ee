//! Compositional video search: score video clips against sentential queries
//! by jointly tracking the query's participants and checking each word's
//! finite-state meaning over geometric predicates on the tracks.

pub mod detect;
pub mod error;
pub mod lexicon;
pub mod parser;
pub mod predicates;
pub mod reference;
pub mod search;
pub mod sentence;
pub mod synth;
pub mod tracker;
pub mod train;

pub use detect::{Clip, ClassModelMeta, Corpus, Detection, RawDetection, VideoMeta};
pub use error::{Error, Result};
pub use lexicon::{Lexicon, WordFsm, WordRegex};
pub use parser::{parse, QueryPlan};
pub use predicates::{ParameterSet, PredicateExpr, Primitive};
pub use sentence::{feasible, joint_score, SentenceScore};
pub use tracker::{best_track, Track};
