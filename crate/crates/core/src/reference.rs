//! Slow reference implementations used to cross-check the production
//! algorithms in tests: a direct regex matcher over per-frame truth
//! assignments, and brute-force enumeration for the tracker and the joint
//! sentence objective. Nothing here shares code with the optimized paths.

use crate::detect::{Clip, Detection};
use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, Regex, WordFsm, WordRegex};
use crate::parser::QueryPlan;
use crate::predicates::{ParameterSet, PredicateExpr};
use crate::tracker::{motion_coherence, track_score};

/// Does `re` match frames `i..j` exactly, where an atom matches a single
/// frame on which it holds? `⁺` is one-or-more concatenations and `{t,}` is
/// expanded directly as t-1 copies followed by `⁺`.
fn matches_span(re: &Regex, holds: &dyn Fn(usize, &PredicateExpr) -> bool, i: usize, j: usize) -> bool {
    match re {
        Regex::Atom(expr) => j == i + 1 && holds(i, expr),
        Regex::Concat(xs) => concat_matches(xs, holds, i, j),
        Regex::Plus(x) => {
            // one copy covering everything, or one copy then the rest
            (i + 1..=j).any(|m| {
                matches_span(x, holds, i, m) && (m == j || matches_span(re, holds, m, j))
            })
        }
        Regex::AtLeast(t, x) => {
            let mut parts: Vec<Regex> = vec![(**x).clone(); (*t as usize).saturating_sub(1)];
            parts.push(Regex::Plus(x.clone()));
            concat_matches(&parts, holds, i, j)
        }
    }
}

fn concat_matches(xs: &[Regex], holds: &dyn Fn(usize, &PredicateExpr) -> bool, i: usize, j: usize) -> bool {
    match xs {
        [] => i == j,
        [x] => matches_span(x, holds, i, j),
        [x, rest @ ..] => {
            (i..=j).any(|m| matches_span(x, holds, i, m) && concat_matches(rest, holds, m, j))
        }
    }
}

/// Reference acceptance: does the regex generate the whole frame sequence
/// under the given per-frame atom truths?
pub fn regex_accepts(re: &Regex, t_len: usize, holds: &dyn Fn(usize, &PredicateExpr) -> bool) -> bool {
    t_len > 0 && matches_span(re, holds, 0, t_len)
}

/// A reference matcher specialized for exhaustive sweeps: atoms are
/// replaced by indices into a fixed atom list and spans are memoized, but
/// the semantics are still the direct interval-splitting definition, not
/// the compiled state machine.
pub struct CompiledRef {
    nodes: Vec<RefNode>,
    root: usize,
}

enum RefNode {
    Atom(usize),
    /// Binary concatenation: left then right.
    Seq(usize, usize),
    Plus(usize),
}

impl CompiledRef {
    /// Compile against the atom list the truth bitmasks will index.
    pub fn new(re: &Regex, atoms: &[PredicateExpr]) -> CompiledRef {
        let expanded = expand_repeats(re);
        let mut nodes = Vec::new();
        let root = Self::build(&expanded, atoms, &mut nodes);
        CompiledRef { nodes, root }
    }

    fn build(re: &Regex, atoms: &[PredicateExpr], nodes: &mut Vec<RefNode>) -> usize {
        let node = match re {
            Regex::Atom(expr) => RefNode::Atom(
                atoms
                    .iter()
                    .position(|a| a == expr)
                    .expect("atom appears in the atom list"),
            ),
            Regex::Concat(xs) => {
                let ids: Vec<usize> = xs.iter().map(|x| Self::build(x, atoms, nodes)).collect();
                let mut it = ids.into_iter().rev();
                let mut right = it.next().expect("concat is nonempty");
                for left in it {
                    nodes.push(RefNode::Seq(left, right));
                    right = nodes.len() - 1;
                }
                return right;
            }
            Regex::Plus(x) => RefNode::Plus(Self::build(x, atoms, nodes)),
            Regex::AtLeast(..) => unreachable!("expanded above"),
        };
        nodes.push(node);
        nodes.len() - 1
    }

    /// Accept iff the regex generates all of `truth`, where `truth[t]` has
    /// bit `a` set when atom `a` holds at frame `t`.
    pub fn accepts(&self, truth: &[usize]) -> bool {
        self.accepts_with_scratch(truth, &mut RefScratch::default())
    }

    /// As `accepts`, reusing a caller-held memo buffer. Exhaustive sweeps
    /// call this millions of times; the scratch avoids per-call allocation
    /// via generation stamps.
    pub fn accepts_with_scratch(&self, truth: &[usize], scratch: &mut RefScratch) -> bool {
        let t_len = truth.len();
        if t_len == 0 {
            return false;
        }
        let span = t_len + 1;
        let need = self.nodes.len() * span * span;
        if scratch.memo.len() < need {
            scratch.memo = vec![0; need];
            scratch.gen = 0;
        }
        scratch.gen += 1;
        self.matches(self.root, 0, t_len, truth, scratch, span)
    }

    fn matches(&self, node: usize, i: usize, j: usize, truth: &[usize], scratch: &mut RefScratch, span: usize) -> bool {
        let key = node * span * span + i * span + j;
        let entry = scratch.memo[key];
        if entry >> 1 == scratch.gen {
            return entry & 1 == 1;
        }
        // stamp a provisional "false" so (impossible) cycles terminate
        scratch.memo[key] = scratch.gen << 1;
        let out = match self.nodes[node] {
            RefNode::Atom(a) => j == i + 1 && truth[i] & (1 << a) != 0,
            RefNode::Seq(l, r) => (i + 1..j)
                .any(|m| self.matches(l, i, m, truth, scratch, span) && self.matches(r, m, j, truth, scratch, span)),
            RefNode::Plus(c) => (i + 1..=j).any(|m| {
                self.matches(c, i, m, truth, scratch, span)
                    && (m == j || self.matches(node, m, j, truth, scratch, span))
            }),
        };
        scratch.memo[key] = (scratch.gen << 1) | out as u64;
        out
    }
}

/// Reusable memo for `CompiledRef::accepts_with_scratch`.
#[derive(Default)]
pub struct RefScratch {
    memo: Vec<u64>,
    gen: u64,
}

/// Exhaustively compare a compiled word machine against the direct regex
/// semantics over every atom-truth assignment of every length up to
/// `max_len`, returning the number of sequences checked or a description
/// of the first disagreement.
///
/// Both sides are evaluated as suffix-indexed dynamic programs (level `i`
/// depends only on frames `>= i`) and the enumeration varies frame 0
/// fastest, so each step refreshes only the changed levels. A periodic
/// subsample is re-checked against the plain `CompiledRef` matcher and
/// `WordFsm::accepts_with` to pin the incremental sweep to them.
pub fn verify_word_equivalence(
    word: &WordRegex,
    fsm: &WordFsm,
    max_len: usize,
) -> std::result::Result<u64, String> {
    assert!(max_len <= 16, "truth bitsets are 32 bits wide");
    let combos = 1usize << fsm.atoms.len();
    let slow = CompiledRef::new(&word.body, &fsm.atoms);
    let mut checked = 0u64;
    for t_len in 1..=max_len {
        let mut sweep = EquivSweep::new(&slow, fsm, t_len);
        let mut truth = vec![0usize; t_len];
        for i in (0..t_len).rev() {
            sweep.refresh_level(i, &truth);
        }
        let total = (combos as u64).pow(t_len as u32);
        let mut step = 0u64;
        loop {
            let expected = sweep.regex_verdict();
            let compiled = sweep.fsm_verdict();
            if compiled != expected {
                return Err(format!(
                    "{}: machine {compiled} vs regex {expected} at t_len={t_len} truth={truth:?}",
                    word.name
                ));
            }
            if step % 9973 == 0 {
                let plain_ref = slow.accepts(&truth);
                let plain_fsm =
                    fsm.accepts_with(t_len, |t, s| truth[t] & (1 << fsm.state_atom[s]) != 0);
                if expected != plain_ref || compiled != plain_fsm {
                    return Err(format!(
                        "{}: sweep drifted from plain evaluators at truth={truth:?}",
                        word.name
                    ));
                }
            }
            checked += 1;
            step += 1;
            if step == total {
                break;
            }
            // mixed-radix increment, frame 0 fastest; refresh changed levels
            let mut changed = 0;
            for (slot, v) in truth.iter_mut().enumerate() {
                changed = slot;
                *v += 1;
                if *v < combos {
                    break;
                }
                *v = 0;
            }
            for i in (0..=changed).rev() {
                sweep.refresh_level(i, &truth);
            }
        }
    }
    Ok(checked)
}

struct EquivSweep<'a> {
    re: &'a CompiledRef,
    fsm: &'a WordFsm,
    succ_mask: Vec<u64>,
    starts_mask: u64,
    accepts_mask: u64,
    /// Per atom-truth combination, the states whose atom holds.
    feas_mask: Vec<u64>,
    t_len: usize,
    /// ends[node][i]: bitset of j such that the node matches frames i..j.
    ends: Vec<Vec<u32>>,
    /// back[i]: states from which an accepting final frame is reachable.
    back: Vec<u64>,
}

impl<'a> EquivSweep<'a> {
    fn new(re: &'a CompiledRef, fsm: &'a WordFsm, t_len: usize) -> EquivSweep<'a> {
        let n = fsm.num_states();
        assert!(n <= 64, "state masks are 64 bits wide");
        let succ_mask = (0..n)
            .map(|s| fsm.succ[s].iter().fold(0u64, |m, &q| m | 1 << q))
            .collect();
        let starts_mask = fsm.starts.iter().fold(0u64, |m, &s| m | 1 << s);
        let accepts_mask = fsm.accepts.iter().fold(0u64, |m, &s| m | 1 << s);
        let feas_mask = (0..1usize << fsm.atoms.len())
            .map(|c| {
                (0..n)
                    .filter(|&s| c & (1 << fsm.state_atom[s]) != 0)
                    .fold(0u64, |m, s| m | 1 << s)
            })
            .collect();
        EquivSweep {
            re,
            fsm,
            succ_mask,
            starts_mask,
            accepts_mask,
            feas_mask,
            t_len,
            ends: vec![vec![0u32; t_len]; re.nodes.len()],
            back: vec![0u64; t_len],
        }
    }

    /// Recompute level `i` of both dynamic programs from the truth row.
    fn refresh_level(&mut self, i: usize, truth: &[usize]) {
        // children precede parents in the node list, so one ascending pass
        // sees every dependency; Plus nodes reference only higher levels
        for node in 0..self.re.nodes.len() {
            let e = match self.re.nodes[node] {
                RefNode::Atom(a) => {
                    if truth[i] & (1 << a) != 0 {
                        1u32 << (i + 1)
                    } else {
                        0
                    }
                }
                RefNode::Seq(l, r) => {
                    let mut e = 0u32;
                    let mut ms = self.ends[l][i];
                    while ms != 0 {
                        let m = ms.trailing_zeros() as usize;
                        ms &= ms - 1;
                        if m < self.t_len {
                            e |= self.ends[r][m];
                        }
                    }
                    e
                }
                RefNode::Plus(c) => {
                    let base = self.ends[c][i];
                    let mut e = base;
                    let mut ms = base;
                    while ms != 0 {
                        let m = ms.trailing_zeros() as usize;
                        ms &= ms - 1;
                        if m < self.t_len {
                            e |= self.ends[node][m];
                        }
                    }
                    e
                }
            };
            self.ends[node][i] = e;
        }
        let feas = self.feas_mask[truth[i]];
        self.back[i] = if i + 1 == self.t_len {
            self.accepts_mask & feas
        } else {
            let nxt = self.back[i + 1];
            let mut b = 0u64;
            for s in 0..self.fsm.num_states() {
                if self.succ_mask[s] & nxt != 0 {
                    b |= 1 << s;
                }
            }
            b & feas
        };
    }

    fn regex_verdict(&self) -> bool {
        self.ends[self.re.root][0] & (1 << self.t_len) != 0
    }

    fn fsm_verdict(&self) -> bool {
        self.starts_mask & self.back[0] != 0
    }
}

/// Rewrite `{t,}` as its direct expansion so repeated matching does not
/// rebuild it on every call.
pub fn expand_repeats(re: &Regex) -> Regex {
    match re {
        Regex::Atom(_) => re.clone(),
        Regex::Concat(xs) => Regex::Concat(xs.iter().map(expand_repeats).collect()),
        Regex::Plus(x) => Regex::Plus(Box::new(expand_repeats(x))),
        Regex::AtLeast(t, x) => {
            let x = expand_repeats(x);
            let mut parts: Vec<Regex> = vec![x.clone(); (*t as usize).saturating_sub(1)];
            parts.push(Regex::Plus(Box::new(x)));
            if parts.len() == 1 {
                parts.pop().unwrap()
            } else {
                Regex::Concat(parts)
            }
        }
    }
}

/// Best track score by exhaustive enumeration of every pick sequence.
pub fn brute_best_track(clip: &Clip, class: &str) -> Option<f64> {
    let t_len = clip.len();
    let sizes: Vec<usize> = (0..t_len).map(|t| clip.class_frame(t, class).len()).collect();
    if t_len == 0 || sizes.iter().any(|&s| s == 0) {
        return None;
    }
    let mut best = f64::NEG_INFINITY;
    for picks in MixedRadix::new(&sizes) {
        let s = track_score(clip, class, &picks);
        if s > best {
            best = s;
        }
    }
    Some(best)
}

/// Joint sentence score by exhaustive enumeration: every combination of
/// per-participant pick sequences (same-class participants distinct within
/// a frame), keeping those where every word's regex matches the atom truths
/// induced by its bound detections. Tracker terms are summed in the same
/// canonical order as the production scorer.
pub fn brute_joint(
    clip: &Clip,
    plan: &QueryPlan,
    lexicon: &Lexicon,
    params: &ParameterSet,
) -> Result<f64> {
    let t_len = clip.len();
    if t_len == 0 {
        return Err(Error::Contract("clip has no frames".into()));
    }
    let l = plan.participants.len();
    let words: Vec<_> = plan
        .words
        .iter()
        .map(|w| lexicon.get(&w.lexeme).ok_or_else(|| Error::Query(format!("word {:?} is not in the lexicon", w.lexeme))))
        .collect::<Result<Vec<_>>>()?;

    let slices: Vec<Vec<&[Detection]>> = plan
        .participants
        .iter()
        .map(|p| (0..t_len).map(|t| clip.class_frame(t, &p.class)).collect())
        .collect();
    // flatten (participant, frame) into one radix vector: picks for
    // participant i at frame t live at position i * t_len + t
    let sizes: Vec<usize> = (0..l)
        .flat_map(|i| (0..t_len).map(move |t| (i, t)))
        .map(|(i, t)| slices[i][t].len())
        .collect();
    if sizes.iter().any(|&s| s == 0) {
        return Ok(f64::NEG_INFINITY);
    }

    let mut best = f64::NEG_INFINITY;
    'assign: for flat in MixedRadix::new(&sizes) {
        let pick = |i: usize, t: usize| flat[i * t_len + t];
        for t in 0..t_len {
            for i in 0..l {
                for j in 0..i {
                    if plan.participants[i].class == plan.participants[j].class
                        && pick(i, t) == pick(j, t)
                    {
                        continue 'assign;
                    }
                }
            }
        }
        for (w, word) in plan.words.iter().zip(&words) {
            let holds = |t: usize, expr: &PredicateExpr| {
                let binding: Vec<&Detection> =
                    w.theta.iter().map(|&p| &slices[p][t][pick(p, t)]).collect();
                expr.eval(&binding, params)
            };
            if !regex_accepts(&word.body, t_len, &holds) {
                continue 'assign;
            }
        }
        let mut acc = 0.0;
        for i in 0..l {
            acc += slices[i][0][pick(i, 0)].f;
        }
        for t in 1..t_len {
            for (i, s) in slices.iter().enumerate() {
                acc += motion_coherence(&s[t - 1][pick(i, t - 1)], &s[t][pick(i, t)]);
            }
            for (i, s) in slices.iter().enumerate() {
                acc += s[t][pick(i, t)].f;
            }
        }
        if acc > best {
            best = acc;
        }
    }
    Ok(best)
}

/// Iterator over every digit vector of a mixed-radix counter.
pub struct MixedRadix {
    sizes: Vec<usize>,
    cur: Vec<usize>,
    done: bool,
}

impl MixedRadix {
    pub fn new(sizes: &[usize]) -> MixedRadix {
        MixedRadix {
            sizes: sizes.to_vec(),
            cur: vec![0; sizes.len()],
            done: sizes.iter().any(|&s| s == 0),
        }
    }
}

impl Iterator for MixedRadix {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let mut i = self.sizes.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.cur[i] += 1;
            if self.cur[i] < self.sizes[i] {
                break;
            }
            self.cur[i] = 0;
        }
        Some(out)
    }
}
