//! Command-line front end: index detection corpora, parse sentential
//! queries, run searches and baselines, train parameters, and generate
//! synthetic corpora.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/processing error.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use vidsent_core::detect::{ingest, Corpus, DEFAULT_CLIP_LEN, DEFAULT_OVERLAP};
use vidsent_core::parser::{enumerate_template_queries, parse};
use vidsent_core::predicates::ParameterSet;
use vidsent_core::search::{
    baseline_search, cache_dir, hits_to_json, index_corpus, load_cache, search, DetectionCache,
};
use vidsent_core::synth::{demo_params, discrimination_scenes, generate, SceneSpec};
use vidsent_core::tracker::best_track;
use vidsent_core::train::{grid_search, GridSpec, TrainingExample};
use vidsent_core::Lexicon;

#[derive(Parser)]
#[command(name = "vidsent", version, about = "Compositional video search over detection streams")]
struct Cli {
    /// Size of the rayon thread pool (default: one per CPU).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus directory holding detections.jsonl, meta.json, and cache/.
    /// Falls back to $VIDSENT_CORPUS.
    #[arg(long, env = "VIDSENT_CORPUS")]
    corpus: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Split a corpus into clips and write the detection cache.
    Index {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = DEFAULT_CLIP_LEN)]
        clip_len: usize,
        #[arg(long, default_value_t = DEFAULT_OVERLAP)]
        overlap: usize,
        #[arg(long)]
        json: bool,
    },
    /// Parse a sentence and print its participants and word instances.
    Parse {
        sentence: String,
        #[arg(long)]
        json: bool,
    },
    /// Validate a lexicon file (or the built-in one) and list its words.
    Lexicon {
        /// Lexicon JSON file; the built-in lexicon when omitted.
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Best single-object track for one class on one cached clip.
    Track {
        clip_id: String,
        class: String,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        json: bool,
    },
    /// Rank cached clips against a sentence.
    Search {
        sentence: String,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long, allow_hyphen_values = true, default_value_t = f64::NEG_INFINITY)]
        threshold: f64,
        #[arg(long, default_value_t = 12)]
        prune: usize,
        /// Parameter-set JSON file; built-in demo parameters when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Word-order-blind baseline: rank clips by per-class tracker scores.
    Baseline {
        sentence: String,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long)]
        json: bool,
    },
    /// Grid-search predicate parameters on labelled clips.
    Train {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// JSON array of {"clip", "sentence", "positive"} records.
        #[arg(long)]
        labels: PathBuf,
        /// Grid JSON: candidate values per parameter.
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value_t = 12)]
        prune: usize,
        #[arg(long)]
        json: bool,
    },
    /// Generate a synthetic corpus with planted events.
    Synth {
        /// Output corpus directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Scene-spec JSON file; the built-in 50-video discrimination
        /// corpus when omitted.
        #[arg(long)]
        scenes: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Enumerate the two-noun query templates and the subset kept after
    /// filtering out queries no planted corpus can satisfy.
    ExpandQueries {
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 2 on usage errors by default; keep 2 for data errors
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(workers) = cli.workers {
        if workers == 0 {
            eprintln!("error: --workers must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn emit(value: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn load_corpus(dir: &Path) -> Result<Corpus> {
    let corpus = ingest(&dir.join("detections.jsonl"), &dir.join("meta.json"))?;
    Ok(corpus)
}

fn load_cache_at(dir: &Path) -> Result<DetectionCache> {
    load_cache(&cache_dir(dir))
        .with_context(|| format!("no usable cache under {}; run `vidsent index` first", dir.display()))
}

fn load_params(path: Option<&Path>) -> Result<ParameterSet> {
    let p = match path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => demo_params(),
    };
    p.validate()?;
    Ok(p)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Index {
            corpus,
            clip_len,
            overlap,
            json,
        } => {
            if clip_len <= overlap {
                return Err(anyhow!("--clip-len must exceed --overlap"));
            }
            let loaded = load_corpus(&corpus.corpus)?;
            let report = index_corpus(&loaded, &cache_dir(&corpus.corpus), clip_len, overlap)?;
            if json {
                emit(&serde_json::to_value(&report)?)?;
            } else {
                println!(
                    "indexed {} clips across {} videos ({} files written, {} unchanged)",
                    report.clips, report.videos, report.written, report.unchanged
                );
            }
            Ok(())
        }
        Command::Parse { sentence, json } => {
            let plan = parse(&sentence)?;
            if json {
                emit(&serde_json::to_value(&plan)?)?;
            } else {
                println!("sentence: {}", plan.sentence);
                for p in &plan.participants {
                    println!("  participant {}: {}", p.index, p.class);
                }
                for w in &plan.words {
                    let theta: Vec<String> = w.theta.iter().map(|t| t.to_string()).collect();
                    println!("  word {}({})", w.lexeme, theta.join(", "));
                }
            }
            Ok(())
        }
        Command::Lexicon { file, json } => {
            let lex = match &file {
                Some(path) => Lexicon::load(path)?,
                None => Lexicon::stock(),
            };
            if json {
                emit(&lex.to_json())?;
            } else {
                for (word, fsm) in lex.words() {
                    println!(
                        "{} arity={} states={} min_len={}",
                        word.name,
                        fsm.arity,
                        fsm.num_states(),
                        fsm.min_len
                    );
                }
            }
            Ok(())
        }
        Command::Track {
            clip_id,
            class,
            corpus,
            json,
        } => {
            let cache = load_cache_at(&corpus.corpus)?;
            let clip = cache
                .clip(&clip_id)
                .ok_or_else(|| anyhow!("clip {clip_id:?} is not in the cache"))?;
            let track = best_track(clip, &class)
                .ok_or_else(|| anyhow!("clip {clip_id:?} has a frame with no {class:?} detection"))?;
            if json {
                emit(&serde_json::to_value(&track)?)?;
            } else {
                println!("score: {}", track.score);
                println!("picks: {:?}", track.picks);
            }
            Ok(())
        }
        Command::Search {
            sentence,
            corpus,
            top,
            threshold,
            prune,
            params,
            json,
        } => {
            let plan = parse(&sentence)?;
            let cache = load_cache_at(&corpus.corpus)?;
            let lex = Lexicon::stock();
            let p = load_params(params.as_deref())?;
            let hits = search(&plan, &cache, &lex, &p, prune, top, threshold)?;
            if json {
                emit(&hits_to_json(&hits, &cache))?;
            } else if hits.is_empty() {
                println!("no hits");
            } else {
                for h in &hits {
                    println!("{:>3}  {}  {}", h.rank, h.clip_id, h.score);
                }
            }
            Ok(())
        }
        Command::Baseline {
            sentence,
            corpus,
            top,
            json,
        } => {
            let plan = parse(&sentence)?;
            let classes: Vec<String> = plan.participants.iter().map(|p| p.class.clone()).collect();
            let cache = load_cache_at(&corpus.corpus)?;
            let hits = baseline_search(&classes, &cache, top);
            if json {
                emit(&serde_json::to_value(&hits)?)?;
            } else if hits.is_empty() {
                println!("no hits");
            } else {
                for h in &hits {
                    println!("{:>3}  {}  {}", h.rank, h.clip_id, h.score);
                }
            }
            Ok(())
        }
        Command::Train {
            corpus,
            labels,
            grid,
            prune,
            json,
        } => {
            let cache = load_cache_at(&corpus.corpus)?;
            let text = std::fs::read_to_string(&labels)
                .with_context(|| format!("reading {}", labels.display()))?;
            #[derive(serde::Deserialize)]
            struct Label {
                clip: String,
                sentence: String,
                positive: bool,
            }
            let records: Vec<Label> =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", labels.display()))?;
            let examples: Vec<TrainingExample> = records
                .into_iter()
                .map(|r| {
                    let clip = cache
                        .clip(&r.clip)
                        .ok_or_else(|| anyhow!("labelled clip {:?} is not in the cache", r.clip))?;
                    Ok(TrainingExample {
                        clip: clip.clone(),
                        sentence: r.sentence,
                        positive: r.positive,
                    })
                })
                .collect::<Result<_>>()?;
            let text = std::fs::read_to_string(&grid)
                .with_context(|| format!("reading {}", grid.display()))?;
            let spec: GridSpec =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", grid.display()))?;
            let report = grid_search(&examples, &spec, &Lexicon::stock(), prune)?;
            if json {
                emit(&serde_json::to_value(&report)?)?;
            } else {
                println!(
                    "best point classifies {}/{} (accuracy {:.3}) after {} evaluations",
                    report.correct, report.total, report.accuracy, report.evaluated_points
                );
                println!("{}", serde_json::to_string_pretty(&report.params)?);
            }
            Ok(())
        }
        Command::Synth {
            out,
            seed,
            scenes,
            json,
        } => {
            let scenes: Vec<SceneSpec> = match &scenes {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
                }
                None => discrimination_scenes(seed),
            };
            let (corpus, truth) = generate(&scenes)?;
            std::fs::create_dir_all(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            let mut jsonl = Vec::new();
            let mut ids: Vec<&str> = corpus.videos.iter().map(|v| v.id.as_str()).collect();
            ids.sort_unstable();
            for id in &ids {
                for frame in corpus.raw_frames(id).expect("own video id") {
                    for d in frame {
                        serde_json::to_writer(&mut jsonl, d)?;
                        jsonl.push(b'\n');
                    }
                }
            }
            std::fs::write(out.join("detections.jsonl"), jsonl)?;
            let meta = serde_json::json!({
                "videos": corpus.videos,
                "classes": corpus.classes,
            });
            std::fs::write(out.join("meta.json"), serde_json::to_vec_pretty(&meta)?)?;
            std::fs::write(out.join("truth.json"), serde_json::to_vec_pretty(&truth)?)?;
            let summary = serde_json::json!({
                "videos": corpus.videos.len(),
                "detections": corpus.detection_count(),
                "planted": truth.iter().filter(|t| t.sentence.is_some()).count(),
            });
            if json {
                emit(&summary)?;
            } else {
                println!(
                    "wrote {} videos ({} detections, {} planted events) to {}",
                    corpus.videos.len(),
                    corpus.detection_count(),
                    truth.iter().filter(|t| t.sentence.is_some()).count(),
                    out.display()
                );
            }
            Ok(())
        }
        Command::ExpandQueries { json } => {
            let q = enumerate_template_queries();
            if json {
                emit(&serde_json::json!({
                    "all": q.all,
                    "kept": q.kept,
                    "removed": q.removed(),
                }))?;
            } else {
                for s in &q.kept {
                    println!("{s}");
                }
                eprintln!("{} templates, {} kept, {} removed", q.all.len(), q.kept.len(), q.removed());
            }
            Ok(())
        }
    }
}
