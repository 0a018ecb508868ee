//! Sentential-query parsing. A small fixed grammar covers noun phrases,
//! transitive verbs, adverbs, and spatial/motion prepositional phrases:
//!
//! ```text
//! S    -> NP VP
//! NP   -> D ["other"] N [PP]
//! D    -> "the"
//! N    -> "person" | "horse"
//! PP   -> P NP
//! P    -> "to the left of" | "to the right of"
//! VP   -> V NP [Adv] [PPm]
//! V    -> "lead" | "rode" | "approached"
//! Adv  -> "quickly" | "slowly"
//! PPm  -> Pm NP | "leftward" | "rightward" | "from the left" | "from the right"
//! Pm   -> "towards" | "away from"
//! ```
//!
//! Parsing determines the participant set and binds every word instance to
//! an ordered tuple of participant indices (the track-to-role mapping).

use serde::Serialize;

use crate::error::{Error, Result};

/// An entity slot introduced by a noun phrase, realized as one tracker.
#[derive(Debug, Clone, Serialize)]
pub struct Participant {
    pub index: usize,
    pub class: String,
}

/// One word occurrence bound to the participants filling its roles, in
/// role order.
#[derive(Debug, Clone, Serialize)]
pub struct WordInstance {
    pub lexeme: String,
    pub theta: Vec<usize>,
}

/// A parsed query: participants plus role-bound word instances.
#[derive(Debug, Clone, Serialize)]
pub struct QueryPlan {
    pub sentence: String,
    pub participants: Vec<Participant>,
    pub words: Vec<WordInstance>,
}

const NOUNS: [&str; 2] = ["person", "horse"];
const ADVERBS: [&str; 2] = ["quickly", "slowly"];
const SPATIAL_PREPS: [&str; 2] = ["to the left of", "to the right of"];
const MOTION_PREPS: [&str; 2] = ["towards", "away from"];
const DIRECTION_PHRASES: [&str; 2] = ["from the left", "from the right"];

/// Multiword lexemes, longest first for greedy matching.
const PHRASES: [&str; 5] = [
    "to the left of",
    "to the right of",
    "from the left",
    "from the right",
    "away from",
];

/// Which of a verb's two roles is the moving one, for adverb and motion
/// modifier binding: the mount carries the motion for `ride`, the agent
/// for `lead` and `approach`.
fn mover_role(verb: &str) -> usize {
    match verb {
        "ride" => 1,
        _ => 0,
    }
}

fn verb_stem(word: &str) -> Option<&'static str> {
    match word {
        "ride" | "rode" => Some("ride"),
        "lead" | "led" => Some("lead"),
        "approach" | "approached" => Some("approach"),
        _ => None,
    }
}

/// Split a sentence into lexemes: lowercase, punctuation stripped, greedy
/// longest match so multiword entries come out as single tokens, verb
/// inflections mapped to their stems.
pub fn tokenize(sentence: &str) -> Result<Vec<String>> {
    let cleaned: String = sentence
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphabetic() || c == ' ' { c } else { ' ' })
        .collect();
    let words: Vec<&str> = cleaned.split_whitespace().collect();

    let singles = ["the", "other", "person", "horse", "quickly", "slowly", "leftward", "rightward", "towards"];

    let mut out = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let phrase = PHRASES.iter().find(|p| {
            let parts: Vec<&str> = p.split(' ').collect();
            words[i..].starts_with(&parts)
        });
        if let Some(p) = phrase {
            out.push(p.to_string());
            i += p.split(' ').count();
            continue;
        }
        let w = words[i];
        if let Some(stem) = verb_stem(w) {
            out.push(stem.to_string());
        } else if singles.contains(&w) {
            out.push(w.to_string());
        } else {
            return Err(Error::Query(format!(
                "unknown token {:?} at position {}",
                w,
                i + 1
            )));
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<String>,
    pos: usize,
    participants: Vec<Participant>,
    words: Vec<WordInstance>,
}

impl Parser {
    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(String::as_str)
    }

    fn next_is(&self, lexeme: &str) -> bool {
        self.peek() == Some(lexeme)
    }

    fn expect(&mut self, what: &str, pred: impl Fn(&str) -> bool) -> Result<String> {
        match self.peek() {
            Some(tok) if pred(tok) => {
                let tok = tok.to_string();
                self.pos += 1;
                Ok(tok)
            }
            Some(tok) => Err(Error::Query(format!(
                "expected {what} but found {tok:?} at token {}",
                self.pos + 1
            ))),
            None => Err(Error::Query(format!("expected {what} at end of query"))),
        }
    }

    /// Resolve a noun mention to a participant. Mentions marked "other"
    /// always introduce a fresh participant; otherwise the mention corefers
    /// with the earliest same-class participant, skipping the companion
    /// argument of the phrase being built.
    fn resolve(&mut self, class: &str, other: bool, exclude: Option<usize>) -> usize {
        if !other {
            if let Some(p) = self
                .participants
                .iter()
                .find(|p| p.class == class && Some(p.index) != exclude)
            {
                return p.index;
            }
        }
        let index = self.participants.len();
        self.participants.push(Participant {
            index,
            class: class.to_string(),
        });
        self.words.push(WordInstance {
            lexeme: class.to_string(),
            theta: vec![index],
        });
        index
    }

    fn parse_np(&mut self, exclude: Option<usize>) -> Result<usize> {
        self.expect("\"the\"", |t| t == "the")?;
        let other = if self.next_is("other") {
            self.pos += 1;
            true
        } else {
            false
        };
        let noun = self.expect("a noun", |t| NOUNS.contains(&t))?;
        let head = self.resolve(&noun, other, exclude);
        if let Some(prep) = self.peek().filter(|t| SPATIAL_PREPS.contains(t)) {
            let prep = prep.to_string();
            self.pos += 1;
            let object = self.parse_np(Some(head))?;
            self.words.push(WordInstance {
                lexeme: prep,
                theta: vec![head, object],
            });
        }
        Ok(head)
    }

    fn parse_vp(&mut self, subject: usize) -> Result<()> {
        let verb = self.expect("a verb", |t| verb_stem(t).is_some())?;
        let object = self.parse_np(Some(subject))?;
        self.words.push(WordInstance {
            lexeme: verb.clone(),
            theta: vec![subject, object],
        });

        let core = [subject, object];
        let mover = core[mover_role(&verb)];
        let non_mover = core[1 - mover_role(&verb)];

        if let Some(adv) = self.peek().filter(|t| ADVERBS.contains(t)) {
            let adv = adv.to_string();
            self.pos += 1;
            self.words.push(WordInstance {
                lexeme: adv,
                theta: vec![mover],
            });
        }

        if let Some(tok) = self.peek() {
            if MOTION_PREPS.contains(&tok) {
                let prep = tok.to_string();
                self.pos += 1;
                let landmark = self.parse_np(Some(mover))?;
                self.words.push(WordInstance {
                    lexeme: prep,
                    theta: vec![mover, landmark],
                });
            } else if DIRECTION_PHRASES.contains(&tok) {
                let phrase = tok.to_string();
                self.pos += 1;
                self.words.push(WordInstance {
                    lexeme: phrase,
                    theta: vec![mover, non_mover],
                });
            } else if tok == "leftward" || tok == "rightward" {
                let adv = tok.to_string();
                self.pos += 1;
                self.words.push(WordInstance {
                    lexeme: adv,
                    theta: vec![mover],
                });
            }
        }
        Ok(())
    }
}

/// Parse a sentential query into its plan.
pub fn parse(sentence: &str) -> Result<QueryPlan> {
    let tokens = tokenize(sentence)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        participants: Vec::new(),
        words: Vec::new(),
    };
    let subject = parser.parse_np(None)?;
    parser.parse_vp(subject)?;
    if parser.pos != parser.tokens.len() {
        return Err(Error::Query(format!(
            "unexpected trailing token {:?} at token {}",
            parser.tokens[parser.pos],
            parser.pos + 1
        )));
    }
    Ok(QueryPlan {
        sentence: sentence.to_string(),
        participants: parser.participants,
        words: parser.words,
    })
}

/// The generated query inventory: everything the template produces, and
/// the subset kept after removing combinations with no plausible positives
/// (people riding people, horses riding anything).
#[derive(Debug, Clone)]
pub struct TemplateQueries {
    pub all: Vec<String>,
    pub kept: Vec<String>,
}

impl TemplateQueries {
    pub fn removed(&self) -> usize {
        self.all.len() - self.kept.len()
    }
}

/// Expand the query template over person/horse participants.
pub fn enumerate_template_queries() -> TemplateQueries {
    let nouns = ["person", "horse"];
    let advs = ["", " quickly", " slowly"];
    let dirs = ["", " from the left", " from the right"];

    let mut all = Vec::new();
    let mut kept = Vec::new();
    for x in nouns {
        for y in nouns {
            for adv in advs {
                for dir in dirs {
                    let s = format!("The {x} approached the {y}{adv}{dir}");
                    all.push(s.clone());
                    kept.push(s);
                }
            }
            for verb in ["lead", "rode"] {
                let mut motions = vec![String::new(), " leftward".into(), " rightward".into()];
                for pm in ["towards", "away from"] {
                    for z in nouns {
                        motions.push(format!(" {pm} the {z}"));
                    }
                }
                let rideable = verb != "rode" || (x == "person" && y == "horse");
                for adv in advs {
                    for motion in &motions {
                        let s = format!("The {x} {verb} the {y}{adv}{motion}");
                        all.push(s.clone());
                        if rideable {
                            kept.push(s);
                        }
                    }
                }
            }
        }
    }
    TemplateQueries { all, kept }
}
