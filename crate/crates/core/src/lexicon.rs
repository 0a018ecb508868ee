//! Word meanings as extended regular expressions over predicate
//! expressions, compiled to nondeterministic finite-state machines. A
//! state accepts a frame when its predicate holds of the detections bound
//! to the word's roles; an accepted state path contributes 0 to a score
//! and anything else contributes negative infinity.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Value};

use crate::detect::Detection;
use crate::error::{Error, Result};
use crate::predicates::{ParameterSet, PredicateExpr, Primitive};

/// Extended regex over predicate atoms: concatenation, one-or-more (`+`),
/// and t-or-more (`{t,}`).
#[derive(Debug, Clone, PartialEq)]
pub enum Regex {
    Atom(PredicateExpr),
    Concat(Vec<Regex>),
    Plus(Box<Regex>),
    AtLeast(u32, Box<Regex>),
}

/// A named word definition: ordered roles and a regex body.
#[derive(Debug, Clone)]
pub struct WordRegex {
    pub name: String,
    pub roles: Vec<String>,
    pub body: Regex,
}

impl WordRegex {
    pub fn arity(&self) -> usize {
        self.roles.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.roles.is_empty() || self.roles.len() > 2 {
            return Err(self.err("words take one or two roles"));
        }
        let mut referenced = Vec::new();
        self.check_body(&self.body, &mut referenced)?;
        referenced.sort_unstable();
        referenced.dedup();
        if referenced.len() != self.roles.len() {
            return Err(self.err("every declared role must be referenced by some predicate"));
        }
        Ok(())
    }

    fn check_body(&self, re: &Regex, referenced: &mut Vec<usize>) -> Result<()> {
        match re {
            Regex::Atom(expr) => {
                expr.validate(self.roles.len())
                    .map_err(|e| self.err(&e.to_string()))?;
                expr.referenced_slots(referenced);
                Ok(())
            }
            Regex::Concat(xs) => xs.iter().try_for_each(|x| self.check_body(x, referenced)),
            Regex::Plus(x) => self.check_body(x, referenced),
            Regex::AtLeast(t, x) => {
                if *t < 1 {
                    return Err(self.err("repetition bound must be at least 1"));
                }
                self.check_body(x, referenced)
            }
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Lexicon {
            word: self.name.clone(),
            msg: msg.to_string(),
        }
    }
}

/// A compiled word machine. States carry predicate atoms (indices into
/// `atoms`); `succ` is the binary transition relation as successor lists.
#[derive(Debug, Clone)]
pub struct WordFsm {
    pub name: String,
    pub arity: usize,
    /// The distinct predicate atoms appearing in the word's regex.
    pub atoms: Vec<PredicateExpr>,
    /// Per-state atom index; a state accepts a frame when its atom holds.
    pub state_atom: Vec<usize>,
    pub starts: Vec<usize>,
    pub accepts: Vec<usize>,
    pub succ: Vec<Vec<usize>>,
    /// Length of the shortest accepted sequence (structural shortest path).
    pub min_len: usize,
}

impl WordFsm {
    pub fn num_states(&self) -> usize {
        self.state_atom.len()
    }

    /// Acceptance over an abstract per-frame state feasibility relation:
    /// true iff some path from a start state to an accepting state is
    /// feasible at every frame with every transition allowed.
    pub fn accepts_with(&self, t_len: usize, feasible: impl Fn(usize, usize) -> bool) -> bool {
        if t_len == 0 {
            return false;
        }
        let n = self.num_states();
        let mut reach = vec![false; n];
        for &s in &self.starts {
            if feasible(0, s) {
                reach[s] = true;
            }
        }
        for t in 1..t_len {
            let mut next = vec![false; n];
            for (s, &r) in reach.iter().enumerate() {
                if r {
                    for &q in &self.succ[s] {
                        if !next[q] && feasible(t, q) {
                            next[q] = true;
                        }
                    }
                }
            }
            reach = next;
        }
        self.accepts.iter().any(|&s| reach[s])
    }

    /// Recognize per-role tracks: 0 when the word describes them, negative
    /// infinity otherwise.
    pub fn recognize(&self, tracks: &[Vec<&Detection>], params: &ParameterSet) -> Result<f64> {
        if tracks.len() != self.arity {
            return Err(Error::Contract(format!(
                "word {:?} takes {} track(s), got {}",
                self.name,
                self.arity,
                tracks.len()
            )));
        }
        let t_len = tracks.first().map(Vec::len).unwrap_or(0);
        if t_len == 0 || tracks.iter().any(|tr| tr.len() != t_len) {
            return Err(Error::Contract(format!(
                "word {:?} requires equal nonempty track lengths",
                self.name
            )));
        }
        let ok = self.accepts_with(t_len, |t, s| {
            let binding: Vec<&Detection> = tracks.iter().map(|tr| tr[t]).collect();
            self.atoms[self.state_atom[s]].eval(&binding, params)
        });
        Ok(if ok { 0.0 } else { f64::NEG_INFINITY })
    }
}

struct Frag {
    starts: Vec<usize>,
    accepts: Vec<usize>,
}

struct Builder {
    atoms: Vec<PredicateExpr>,
    state_atom: Vec<usize>,
    succ: Vec<Vec<usize>>,
}

impl Builder {
    fn atom_id(&mut self, expr: &PredicateExpr) -> usize {
        if let Some(i) = self.atoms.iter().position(|a| a == expr) {
            i
        } else {
            self.atoms.push(expr.clone());
            self.atoms.len() - 1
        }
    }

    fn new_state(&mut self, atom: usize) -> usize {
        self.state_atom.push(atom);
        self.succ.push(Vec::new());
        self.state_atom.len() - 1
    }

    fn link(&mut self, from: &[usize], to: &[usize]) {
        for &f in from {
            for &t in to {
                if !self.succ[f].contains(&t) {
                    self.succ[f].push(t);
                }
            }
        }
    }

    fn build(&mut self, re: &Regex) -> Frag {
        match re {
            Regex::Atom(expr) => {
                let a = self.atom_id(expr);
                let s = self.new_state(a);
                Frag {
                    starts: vec![s],
                    accepts: vec![s],
                }
            }
            Regex::Concat(xs) => {
                let (first, rest) = xs.split_first().expect("concat is nonempty");
                let first = self.build(first);
                let starts = first.starts;
                let mut accepts = first.accepts;
                for x in rest {
                    let next = self.build(x);
                    self.link(&accepts, &next.starts);
                    accepts = next.accepts;
                }
                Frag { starts, accepts }
            }
            Regex::Plus(x) => {
                let f = self.build(x);
                self.link(&f.accepts.clone(), &f.starts.clone());
                f
            }
            Regex::AtLeast(t, x) => {
                // t chained copies with a loop on the last.
                let mut parts: Vec<Regex> = Vec::with_capacity(*t as usize);
                for _ in 0..t - 1 {
                    parts.push((**x).clone());
                }
                parts.push(Regex::Plus(x.clone()));
                if parts.len() == 1 {
                    self.build(&parts.pop().unwrap())
                } else {
                    self.build(&Regex::Concat(parts))
                }
            }
        }
    }
}

/// Compile a validated word regex to its machine.
pub fn compile_fsm(word: &WordRegex) -> WordFsm {
    let mut b = Builder {
        atoms: Vec::new(),
        state_atom: Vec::new(),
        succ: Vec::new(),
    };
    let frag = b.build(&word.body);
    let min_len = shortest_accepted(&b.succ, &frag.starts, &frag.accepts);
    WordFsm {
        name: word.name.clone(),
        arity: word.arity(),
        atoms: b.atoms,
        state_atom: b.state_atom,
        starts: frag.starts,
        accepts: frag.accepts,
        succ: b.succ,
        min_len,
    }
}

/// BFS over the state graph; each visited state consumes one frame.
fn shortest_accepted(succ: &[Vec<usize>], starts: &[usize], accepts: &[usize]) -> usize {
    let n = succ.len();
    let mut dist = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    for &s in starts {
        if dist[s] == usize::MAX {
            dist[s] = 1;
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        for &q in &succ[s] {
            if dist[q] == usize::MAX {
                dist[q] = dist[s] + 1;
                queue.push_back(q);
            }
        }
    }
    accepts
        .iter()
        .map(|&s| dist[s])
        .min()
        .expect("accepting state exists")
}

/// A loaded lexicon: validated word regexes plus their compiled machines.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: BTreeMap<String, (WordRegex, WordFsm)>,
}

impl Lexicon {
    pub fn from_words(words: Vec<WordRegex>) -> Result<Lexicon> {
        let mut entries = BTreeMap::new();
        for w in words {
            w.validate()?;
            let fsm = compile_fsm(&w);
            let name = w.name.clone();
            if entries.insert(name.clone(), (w, fsm)).is_some() {
                return Err(Error::Lexicon {
                    word: name,
                    msg: "duplicate word name".into(),
                });
            }
        }
        Ok(Lexicon { entries })
    }

    /// The built-in fifteen-entry lexicon.
    pub fn stock() -> Lexicon {
        Lexicon::from_words(stock_words()).expect("stock lexicon is valid")
    }

    pub fn load(path: &Path) -> Result<Lexicon> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        Lexicon::from_json(&value)
    }

    pub fn from_json(value: &Value) -> Result<Lexicon> {
        let items = value
            .as_array()
            .ok_or_else(|| Error::Contract("lexicon file must be a JSON array".into()))?;
        let mut words = Vec::with_capacity(items.len());
        for item in items {
            let name = item
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Contract("lexicon entry missing name".into()))?
                .to_string();
            let roles: Vec<String> = item
                .get("roles")
                .and_then(Value::as_array)
                .map(|a| a.iter().filter_map(Value::as_str).map(String::from).collect())
                .unwrap_or_default();
            let body = item
                .get("regex")
                .ok_or_else(|| Error::Lexicon {
                    word: name.clone(),
                    msg: "missing regex".into(),
                })
                .and_then(|v| regex_from_json(v, &roles))
                .map_err(|e| Error::Lexicon {
                    word: name.clone(),
                    msg: e.to_string(),
                })?;
            words.push(WordRegex { name, roles, body });
        }
        Lexicon::from_words(words)
    }

    pub fn to_json(&self) -> Value {
        let items: Vec<Value> = self
            .entries
            .values()
            .map(|(w, _)| {
                json!({
                    "name": w.name,
                    "roles": w.roles,
                    "regex": regex_to_json(&w.body, &w.roles),
                })
            })
            .collect();
        Value::Array(items)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&WordRegex> {
        self.entries.get(name).map(|(w, _)| w)
    }

    pub fn fsm(&self, name: &str) -> Result<&WordFsm> {
        self.entries
            .get(name)
            .map(|(_, f)| f)
            .ok_or_else(|| Error::Query(format!("word {name:?} is not in the lexicon")))
    }

    pub fn words(&self) -> impl Iterator<Item = (&WordRegex, &WordFsm)> {
        self.entries.values().map(|(w, f)| (w, f))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

fn regex_from_json(value: &Value, roles: &[String]) -> Result<Regex> {
    if let Value::Array(items) = value {
        if let Some(head) = items.first().and_then(Value::as_str) {
            match head {
                "concat" => {
                    if items.len() < 2 {
                        return Err(Error::Contract("concat needs operands".into()));
                    }
                    return Ok(Regex::Concat(
                        items[1..]
                            .iter()
                            .map(|v| regex_from_json(v, roles))
                            .collect::<Result<_>>()?,
                    ));
                }
                "plus" => {
                    if items.len() != 2 {
                        return Err(Error::Contract("plus takes one operand".into()));
                    }
                    return Ok(Regex::Plus(Box::new(regex_from_json(&items[1], roles)?)));
                }
                "atleast" => {
                    if items.len() != 3 {
                        return Err(Error::Contract("atleast takes a bound and an operand".into()));
                    }
                    let t = items[1]
                        .as_u64()
                        .ok_or_else(|| Error::Contract("atleast bound must be an integer".into()))?;
                    return Ok(Regex::AtLeast(
                        t as u32,
                        Box::new(regex_from_json(&items[2], roles)?),
                    ));
                }
                _ => {}
            }
        }
    }
    Ok(Regex::Atom(PredicateExpr::from_json(value, roles)?))
}

fn regex_to_json(re: &Regex, roles: &[String]) -> Value {
    match re {
        Regex::Atom(expr) => expr.to_json(roles),
        Regex::Concat(xs) => {
            let mut items = vec![json!("concat")];
            items.extend(xs.iter().map(|x| regex_to_json(x, roles)));
            Value::Array(items)
        }
        Regex::Plus(x) => json!(["plus", regex_to_json(x, roles)]),
        Regex::AtLeast(t, x) => json!(["atleast", t, regex_to_json(x, roles)]),
    }
}

// --- stock lexicon -------------------------------------------------------

fn atom(expr: PredicateExpr) -> Regex {
    Regex::Atom(expr)
}

fn plus(re: Regex) -> Regex {
    Regex::Plus(Box::new(re))
}

fn at_least(t: u32, re: Regex) -> Regex {
    Regex::AtLeast(t, Box::new(re))
}

fn padded(t: u32, core: PredicateExpr) -> Regex {
    Regex::Concat(vec![
        plus(atom(PredicateExpr::True)),
        at_least(t, atom(core)),
        plus(atom(PredicateExpr::True)),
    ])
}

fn p(prim: Primitive, slots: &[usize]) -> PredicateExpr {
    PredicateExpr::prim(prim, slots)
}

fn unary(name: &str, body: Regex) -> WordRegex {
    WordRegex {
        name: name.into(),
        roles: vec!["a".into()],
        body,
    }
}

fn binary(name: &str, body: Regex) -> WordRegex {
    WordRegex {
        name: name.into(),
        roles: vec!["a".into(), "b".into()],
        body,
    }
}

/// The fifteen built-in words. Nouns hold whenever every frame's detection
/// has the right class; the rest pad a sustained core predicate with
/// unconstrained lead-in and lead-out frames, except the motion
/// prepositions, whose phases must cover the whole sequence.
fn stock_words() -> Vec<WordRegex> {
    use Primitive::*;
    let a = &[0usize][..];
    let ab = &[0usize, 1][..];

    // The leader is ahead of its follower along their shared direction of
    // motion, and not glued to it.
    let lead_core = PredicateExpr::And(vec![
        PredicateExpr::Not(Box::new(p(ReallyClose, ab))),
        p(MovingTogether, ab),
        PredicateExpr::Or(vec![
            PredicateExpr::And(vec![p(LeftOf, ab), p(Leftward, a)]),
            PredicateExpr::And(vec![p(RightOf, ab), p(Rightward, a)]),
        ]),
    ]);

    // Riding is sustained co-motion with overlap. The class constraint on
    // the rider is what makes the relation directional: the geometry alone
    // is symmetric in its two arguments, and without the constraint the
    // role-swapped sentence would score identically on every clip.
    let ride_core = PredicateExpr::And(vec![
        p(IsClass("person".into()), a),
        p(MovingTogether, ab),
        p(Overlapping, ab),
    ]);

    vec![
        unary("person", plus(atom(p(IsClass("person".into()), a)))),
        unary("horse", plus(atom(p(IsClass("horse".into()), a)))),
        unary("quickly", padded(3, p(Quickly, a))),
        unary("slowly", padded(3, p(Slowly, a))),
        unary("leftward", padded(5, p(Leftward, a))),
        unary("rightward", padded(5, p(Rightward, a))),
        binary("from the left", padded(5, p(LeftOf, ab))),
        binary("from the right", padded(5, p(RightOf, ab))),
        binary("to the left of", padded(3, p(LeftOf, ab))),
        binary("to the right of", padded(3, p(RightOf, ab))),
        binary(
            "towards",
            Regex::Concat(vec![
                plus(atom(p(StationaryButFar, ab))),
                at_least(3, atom(p(Approaching, ab))),
                plus(atom(p(StationaryButClose, ab))),
            ]),
        ),
        binary(
            "away from",
            Regex::Concat(vec![
                plus(atom(p(StationaryButClose, ab))),
                at_least(3, atom(p(Departing, ab))),
                plus(atom(p(StationaryButFar, ab))),
            ]),
        ),
        binary("ride", padded(5, ride_core)),
        binary("lead", padded(5, lead_core)),
        binary("approach", padded(5, p(Approaching, ab))),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params() -> ParameterSet {
        ParameterSet {
            far: 200.0,
            close: 80.0,
            stationary: 2.0,
            d_closing: 2.0,
            d_angle: PI / 6.0,
            d_pp: 10.0,
            d_quickly: 8.0,
            d_slowly: 4.0,
            overlap: 0.2,
        }
    }

    fn det(class: &str, vx: f64) -> Detection {
        Detection {
            cx: 100.0,
            cy: 100.0,
            width: 20.0,
            height: 20.0,
            class: class.into(),
            f: 0.5,
            vx,
            vy: 0.0,
            source_index: 0,
        }
    }

    #[test]
    fn stock_has_fifteen_entries_with_expected_arities() {
        let lex = Lexicon::stock();
        assert_eq!(lex.len(), 15);
        let expect = [
            ("person", 1),
            ("horse", 1),
            ("quickly", 1),
            ("slowly", 1),
            ("leftward", 1),
            ("rightward", 1),
            ("ride", 2),
            ("lead", 2),
            ("approach", 2),
            ("towards", 2),
            ("away from", 2),
            ("to the left of", 2),
            ("to the right of", 2),
            ("from the left", 2),
            ("from the right", 2),
        ];
        for (name, arity) in expect {
            assert_eq!(lex.get(name).unwrap().arity(), arity, "{name}");
        }
    }

    #[test]
    fn minimum_accepted_lengths() {
        let lex = Lexicon::stock();
        let expect = [
            ("person", 1),
            ("horse", 1),
            ("quickly", 5),
            ("slowly", 5),
            ("leftward", 7),
            ("rightward", 7),
            ("ride", 7),
            ("lead", 7),
            ("approach", 7),
            ("towards", 5),
            ("away from", 5),
            ("to the left of", 5),
            ("to the right of", 5),
            ("from the left", 7),
            ("from the right", 7),
        ];
        for (name, len) in expect {
            assert_eq!(lex.fsm(name).unwrap().min_len, len, "{name}");
        }
    }

    #[test]
    fn single_atom_accepts_exactly_length_one() {
        let w = unary("solo", atom(p(Primitive::Quickly, &[0])));
        let fsm = compile_fsm(&w);
        assert_eq!(fsm.num_states(), 1);
        assert_eq!(fsm.min_len, 1);
        let fast = det("person", 20.0);
        let pr = params();
        assert_eq!(fsm.recognize(&[vec![&fast]], &pr).unwrap(), 0.0);
        assert_eq!(
            fsm.recognize(&[vec![&fast, &fast]], &pr).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn noun_accepts_uniform_class_track() {
        let lex = Lexicon::stock();
        let fsm = lex.fsm("person").unwrap();
        let d = det("person", 0.0);
        let track: Vec<&Detection> = std::iter::repeat(&d).take(18).collect();
        assert_eq!(fsm.recognize(&[track], &params()).unwrap(), 0.0);
        let h = det("horse", 0.0);
        let mut mixed: Vec<&Detection> = std::iter::repeat(&d).take(17).collect();
        mixed.push(&h);
        assert_eq!(
            fsm.recognize(&[mixed], &params()).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn quickly_rejects_below_minimum_length() {
        let lex = Lexicon::stock();
        let fsm = lex.fsm("quickly").unwrap();
        let fast = det("person", 20.0);
        let track: Vec<&Detection> = std::iter::repeat(&fast).take(4).collect();
        assert_eq!(
            fsm.recognize(&[track], &params()).unwrap(),
            f64::NEG_INFINITY
        );
        let track5: Vec<&Detection> = std::iter::repeat(&fast).take(5).collect();
        assert_eq!(fsm.recognize(&[track5], &params()).unwrap(), 0.0);
    }

    #[test]
    fn unknown_primitive_fails_to_load() {
        let v = json!([{
            "name": "bogus",
            "roles": ["a"],
            "regex": ["plus", ["pred", "flies", "a"]],
        }]);
        let err = Lexicon::from_json(&v).unwrap_err();
        assert!(matches!(err, Error::Lexicon { ref word, .. } if word == "bogus"), "{err}");
    }

    #[test]
    fn duplicate_word_fails_to_load() {
        let entry = json!({
            "name": "dup",
            "roles": ["a"],
            "regex": ["plus", ["class", "a", "person"]],
        });
        let err = Lexicon::from_json(&json!([entry, entry])).unwrap_err();
        assert!(matches!(err, Error::Lexicon { ref word, .. } if word == "dup"));
    }

    #[test]
    fn zero_repetition_bound_rejected() {
        let v = json!([{
            "name": "bad",
            "roles": ["a"],
            "regex": ["atleast", 0, ["class", "a", "person"]],
        }]);
        assert!(Lexicon::from_json(&v).is_err());
    }

    #[test]
    fn stock_round_trips_through_json() {
        let lex = Lexicon::stock();
        let reloaded = Lexicon::from_json(&lex.to_json()).unwrap();
        assert_eq!(reloaded.len(), 15);
        for (w, fsm) in lex.words() {
            let r = reloaded.fsm(&w.name).unwrap();
            assert_eq!(r.num_states(), fsm.num_states(), "{}", w.name);
            assert_eq!(r.min_len, fsm.min_len, "{}", w.name);
        }
    }

    /// Brute-force recognition by enumerating every state sequence.
    fn brute_recognize(fsm: &WordFsm, feasible: &dyn Fn(usize, usize) -> bool, t_len: usize) -> bool {
        let n = fsm.num_states();
        let mut seq = vec![0usize; t_len];
        loop {
            let mut ok = fsm.starts.contains(&seq[0]) && fsm.accepts.contains(&seq[t_len - 1]);
            if ok {
                for t in 0..t_len {
                    if !feasible(t, seq[t]) {
                        ok = false;
                        break;
                    }
                    if t > 0 && !fsm.succ[seq[t - 1]].contains(&seq[t]) {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return true;
            }
            let mut t = 0;
            loop {
                if t == t_len {
                    return false;
                }
                seq[t] += 1;
                if seq[t] < n {
                    break;
                }
                seq[t] = 0;
                t += 1;
            }
        }
    }

    #[test]
    fn reachability_matches_state_sequence_enumeration() {
        // pseudo-random feasibility patterns over small words and lengths
        let lex = Lexicon::stock();
        for name in ["quickly", "towards", "person"] {
            let fsm = lex.fsm(name).unwrap();
            assert!(fsm.num_states() <= 6);
            for t_len in 1..=5 {
                for seed in 0..40u64 {
                    let feasible = |t: usize, s: usize| {
                        let x = seed
                            .wrapping_mul(6364136223846793005)
                            .wrapping_add((t * 31 + s * 7) as u64);
                        (x >> 17) % 3 != 0
                    };
                    assert_eq!(
                        fsm.accepts_with(t_len, feasible),
                        brute_recognize(fsm, &feasible, t_len),
                        "{name} t_len={t_len} seed={seed}"
                    );
                }
            }
        }
    }
    #[test]
    fn shipped_lexicon_file_matches_builtin() {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/lexicon.json");
        let loaded = Lexicon::load(&path).unwrap();
        assert_eq!(loaded.to_json(), Lexicon::stock().to_json());
    }
}
