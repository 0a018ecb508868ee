//! The joint sentence tracker: simultaneously choose one track per query
//! participant and one accepting state path per word, maximizing the summed
//! tracker scores subject to every word machine accepting. Exact Viterbi
//! over the cross product of the participant detection lattices and the
//! word state lattices; word terms are 0 or negative infinity, so they act
//! as hard constraints that can only depress the tracker score.

use std::collections::HashMap;

use serde::Serialize;

use crate::detect::{Clip, Detection};
use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, WordFsm};
use crate::parser::QueryPlan;
use crate::predicates::ParameterSet;
use crate::tracker::{motion_coherence, track_score, Track};

/// Default per-class, per-frame detection prune width before the product DP.
pub const DEFAULT_PRUNE: usize = 12;

/// One word's chosen state per frame.
#[derive(Debug, Clone, Serialize)]
pub struct WordPath {
    pub word: String,
    pub states: Vec<usize>,
}

/// Outcome of scoring one clip against one plan. `score` is negative
/// infinity exactly when no assignment satisfies every word; when finite,
/// re-summing the returned assignment reproduces it bit for bit.
#[derive(Debug, Clone, Serialize)]
pub struct SentenceScore {
    pub score: f64,
    pub tracks: Vec<Track>,
    pub word_paths: Vec<WordPath>,
}

impl SentenceScore {
    pub fn infeasible() -> SentenceScore {
        SentenceScore {
            score: f64::NEG_INFINITY,
            tracks: Vec::new(),
            word_paths: Vec::new(),
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.score.is_finite()
    }
}

fn validate<'a>(plan: &QueryPlan, lexicon: &'a Lexicon) -> Result<Vec<&'a WordFsm>> {
    if plan.participants.is_empty() || plan.words.is_empty() {
        return Err(Error::Contract("plan has no participants or no words".into()));
    }
    let mut fsms = Vec::with_capacity(plan.words.len());
    for w in &plan.words {
        let fsm = lexicon.fsm(&w.lexeme)?;
        if w.theta.len() != fsm.arity {
            return Err(Error::Contract(format!(
                "word {:?} takes {} role(s), bound to {}",
                w.lexeme,
                fsm.arity,
                w.theta.len()
            )));
        }
        if w.theta.iter().any(|&i| i >= plan.participants.len()) {
            return Err(Error::Contract(format!(
                "word {:?} references a participant out of range",
                w.lexeme
            )));
        }
        fsms.push(fsm);
    }
    Ok(fsms)
}

/// Candidate detection indices for one participant in one frame: the top
/// `prune` detections of its class by normalized score (ties keep the lower
/// index), returned in ascending index order.
fn prune_candidates(dets: &[Detection], prune: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dets.len()).collect();
    idx.sort_by(|&a, &b| {
        dets[b].f.partial_cmp(&dets[a].f).unwrap().then(a.cmp(&b))
    });
    idx.truncate(prune);
    idx.sort_unstable();
    idx
}

/// All per-frame participant detection assignments, in lexicographic order.
/// Distinct participants of the same class must pick distinct detections.
fn frame_j_tuples(cands: &[&[usize]], classes: &[&str]) -> Vec<Vec<usize>> {
    let l = cands.len();
    let mut out = Vec::new();
    let mut pos = vec![0usize; l];
    if cands.iter().any(|c| c.is_empty()) {
        return out;
    }
    'outer: loop {
        let tuple: Vec<usize> = (0..l).map(|i| cands[i][pos[i]]).collect();
        let clash = (0..l).any(|i| {
            (0..i).any(|j| classes[i] == classes[j] && tuple[i] == tuple[j])
        });
        if !clash {
            out.push(tuple);
        }
        let mut i = l;
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            pos[i] += 1;
            if pos[i] < cands[i].len() {
                break;
            }
            pos[i] = 0;
        }
    }
    out
}

/// Feasible-state bitmask for one word given its bound detections: bit s is
/// set when state s's predicate holds of the binding.
fn state_mask(fsm: &WordFsm, binding: &[&Detection], params: &ParameterSet) -> u64 {
    let atom_truth: Vec<bool> = fsm.atoms.iter().map(|a| a.eval(binding, params)).collect();
    let mut mask = 0u64;
    for (s, &a) in fsm.state_atom.iter().enumerate() {
        if atom_truth[a] {
            mask |= 1 << s;
        }
    }
    mask
}

struct KSpace {
    tuples: Vec<Vec<usize>>,
    start: Vec<bool>,
    accept: Vec<bool>,
    /// Per k-tuple, the predecessor k-tuples allowed by every word's
    /// transition relation, ascending.
    allowed_prev: Vec<Vec<u32>>,
}

impl KSpace {
    fn build(fsms: &[&WordFsm]) -> KSpace {
        let radices: Vec<usize> = fsms.iter().map(|f| f.num_states()).collect();
        let total: usize = radices.iter().product();
        let mut tuples = Vec::with_capacity(total);
        let mut cur = vec![0usize; radices.len()];
        for _ in 0..total {
            tuples.push(cur.clone());
            for i in (0..radices.len()).rev() {
                cur[i] += 1;
                if cur[i] < radices[i] {
                    break;
                }
                cur[i] = 0;
            }
        }
        let start = tuples
            .iter()
            .map(|t| {
                t.iter()
                    .zip(fsms)
                    .all(|(&s, f)| f.starts.contains(&s))
            })
            .collect();
        let accept = tuples
            .iter()
            .map(|t| {
                t.iter()
                    .zip(fsms)
                    .all(|(&s, f)| f.accepts.contains(&s))
            })
            .collect();
        // per-word successor bitmasks, then the product transition relation
        let succ_mask: Vec<Vec<u64>> = fsms
            .iter()
            .map(|f| {
                (0..f.num_states())
                    .map(|s| f.succ[s].iter().fold(0u64, |m, &q| m | (1 << q)))
                    .collect()
            })
            .collect();
        let allowed_prev = (0..total)
            .map(|kc| {
                (0..total as u32)
                    .filter(|&kp| {
                        tuples[kp as usize]
                            .iter()
                            .zip(&tuples[kc])
                            .zip(&succ_mask)
                            .all(|((&sp, &sc), m)| m[sp] & (1 << sc) != 0)
                    })
                    .collect()
            })
            .collect();
        KSpace {
            tuples,
            start,
            accept,
            allowed_prev,
        }
    }

    fn len(&self) -> usize {
        self.tuples.len()
    }
}

/// Score `clip` against `plan`: the exact maximum of Σf + Σg + Σh + Σa over
/// every choice of per-participant tracks (class-filtered, top-`prune` per
/// frame) and per-word accepting state paths. Ties prefer the
/// lexicographically least (detection-tuple, state-tuple) path.
pub fn joint_score(
    clip: &Clip,
    plan: &QueryPlan,
    lexicon: &Lexicon,
    params: &ParameterSet,
    prune: usize,
) -> Result<SentenceScore> {
    params.validate()?;
    let fsms = validate(plan, lexicon)?;
    let t_len = clip.len();
    if t_len == 0 {
        return Err(Error::Contract("clip has no frames".into()));
    }
    if prune == 0 {
        return Err(Error::Contract("prune width must be positive".into()));
    }
    let l = plan.participants.len();
    let classes: Vec<&str> = plan.participants.iter().map(|p| p.class.as_str()).collect();

    // per participant per frame: the class detection slice and the pruned
    // candidate indices into it
    let slices: Vec<Vec<&[Detection]>> = (0..l)
        .map(|i| (0..t_len).map(|t| clip.class_frame(t, classes[i])).collect())
        .collect();
    let cands: Vec<Vec<Vec<usize>>> = (0..l)
        .map(|i| (0..t_len).map(|t| prune_candidates(slices[i][t], prune)).collect())
        .collect();

    let j_tuples: Vec<Vec<Vec<usize>>> = (0..t_len)
        .map(|t| {
            let per: Vec<&[usize]> = (0..l).map(|i| cands[i][t].as_slice()).collect();
            frame_j_tuples(&per, &classes)
        })
        .collect();
    if j_tuples.iter().any(|j| j.is_empty()) {
        return Ok(SentenceScore::infeasible());
    }

    let kspace = KSpace::build(&fsms);
    let k_len = kspace.len();

    // feasible-state bitmask per (frame, j-tuple, word), memoized on the
    // word's bound detection indices
    let masks_at = |t: usize, jt: &[usize], memo: &mut HashMap<(usize, Vec<usize>), u64>| -> Vec<u64> {
        plan.words
            .iter()
            .zip(&fsms)
            .enumerate()
            .map(|(w, (word, fsm))| {
                let bound: Vec<usize> = word.theta.iter().map(|&p| jt[p]).collect();
                *memo.entry((w, bound.clone())).or_insert_with(|| {
                    let binding: Vec<&Detection> = word
                        .theta
                        .iter()
                        .zip(&bound)
                        .map(|(&p, &d)| &slices[p][t][d])
                        .collect();
                    state_mask(fsm, &binding, params)
                })
            })
            .collect()
    };

    let k_ok = |masks: &[u64], k: usize| {
        kspace.tuples[k]
            .iter()
            .zip(masks)
            .all(|(&s, &m)| m & (1 << s) != 0)
    };

    // frame 0: detection scores in participant order, start states only
    let mut memo = HashMap::new();
    let mut dp = vec![f64::NEG_INFINITY; j_tuples[0].len() * k_len];
    for (ji, jt) in j_tuples[0].iter().enumerate() {
        let masks = masks_at(0, jt, &mut memo);
        let mut acc = 0.0;
        for (i, &d) in jt.iter().enumerate() {
            acc += slices[i][0][d].f;
        }
        for k in 0..k_len {
            if kspace.start[k] && k_ok(&masks, k) {
                dp[ji * k_len + k] = acc;
            }
        }
    }

    // backpointers per frame: (previous j-tuple, previous k-tuple)
    let mut back: Vec<Vec<(u32, u32)>> = Vec::with_capacity(t_len);

    for t in 1..t_len {
        let prev_j = &j_tuples[t - 1];
        let cur_j = &j_tuples[t];
        let mut memo = HashMap::new();

        // per previous j-tuple, best score over allowed predecessor states
        // for each current k-tuple (with its earliest argmax state)
        let mut m_val = vec![f64::NEG_INFINITY; prev_j.len() * k_len];
        let mut m_arg = vec![0u32; prev_j.len() * k_len];
        for jp in 0..prev_j.len() {
            let row = &dp[jp * k_len..(jp + 1) * k_len];
            for kc in 0..k_len {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0u32;
                for &kp in &kspace.allowed_prev[kc] {
                    let v = row[kp as usize];
                    if v > best {
                        best = v;
                        arg = kp;
                    }
                }
                m_val[jp * k_len + kc] = best;
                m_arg[jp * k_len + kc] = arg;
            }
        }

        let mut next = vec![f64::NEG_INFINITY; cur_j.len() * k_len];
        let mut bp = vec![(0u32, 0u32); cur_j.len() * k_len];
        for (jc, jt) in cur_j.iter().enumerate() {
            let masks = masks_at(t, jt, &mut memo);
            let feasible_k: Vec<usize> = (0..k_len).filter(|&k| k_ok(&masks, k)).collect();
            if feasible_k.is_empty() {
                continue;
            }
            for (jp, pt) in prev_j.iter().enumerate() {
                // motion coherence per participant, in participant order
                let gs: Vec<f64> = (0..l)
                    .map(|i| motion_coherence(&slices[i][t - 1][pt[i]], &slices[i][t][jt[i]]))
                    .collect();
                for &kc in &feasible_k {
                    let mut cand = m_val[jp * k_len + kc];
                    if cand == f64::NEG_INFINITY {
                        continue;
                    }
                    for &g in &gs {
                        cand += g;
                    }
                    let cell = jc * k_len + kc;
                    if cand > next[cell] {
                        next[cell] = cand;
                        bp[cell] = (jp as u32, m_arg[jp * k_len + kc]);
                    }
                }
            }
            for &kc in &feasible_k {
                let cell = jc * k_len + kc;
                if next[cell] > f64::NEG_INFINITY {
                    for (i, &d) in jt.iter().enumerate() {
                        next[cell] += slices[i][t][d].f;
                    }
                }
            }
        }
        dp = next;
        back.push(bp);
    }

    // best accepting terminal cell, lexicographic tie-break
    let last_j = j_tuples[t_len - 1].len();
    let mut best_cell = None;
    let mut best = f64::NEG_INFINITY;
    for j in 0..last_j {
        for k in 0..k_len {
            if kspace.accept[k] && dp[j * k_len + k] > best {
                best = dp[j * k_len + k];
                best_cell = Some((j, k));
            }
        }
    }
    let Some((mut j, mut k)) = best_cell else {
        return Ok(SentenceScore::infeasible());
    };

    // backtrace the (j, k) chain
    let mut chain = vec![(0usize, 0usize); t_len];
    chain[t_len - 1] = (j, k);
    for t in (1..t_len).rev() {
        let (pj, pk) = back[t - 1][j * k_len + k];
        j = pj as usize;
        k = pk as usize;
        chain[t - 1] = (j, k);
    }

    let picks: Vec<Vec<usize>> = (0..l)
        .map(|i| (0..t_len).map(|t| j_tuples[t][chain[t].0][i]).collect())
        .collect();
    let states: Vec<Vec<usize>> = (0..plan.words.len())
        .map(|w| (0..t_len).map(|t| kspace.tuples[chain[t].1][w]).collect())
        .collect();

    // report the exact left-to-right sum over the chosen assignment; the DP
    // accumulates in the same order so this must agree with `best`
    let score = recompute_score(clip, plan, lexicon, params, &picks, &states)?;
    debug_assert_eq!(score, best);

    let tracks = (0..l)
        .map(|i| Track {
            class: classes[i].to_string(),
            picks: picks[i].clone(),
            score: track_score(clip, classes[i], &picks[i]),
        })
        .collect();
    let word_paths = plan
        .words
        .iter()
        .zip(states)
        .map(|(w, states)| WordPath {
            word: w.lexeme.clone(),
            states,
        })
        .collect();
    Ok(SentenceScore {
        score,
        tracks,
        word_paths,
    })
}

/// Re-sum Σf + Σg + Σh + Σa over a complete assignment: detection scores for
/// frame 0, then per frame every coherence term followed by every detection
/// score, all in participant order. Word terms are 0 when satisfied and turn
/// the whole sum to negative infinity otherwise.
pub fn recompute_score(
    clip: &Clip,
    plan: &QueryPlan,
    lexicon: &Lexicon,
    params: &ParameterSet,
    picks: &[Vec<usize>],
    states: &[Vec<usize>],
) -> Result<f64> {
    let fsms = validate(plan, lexicon)?;
    let t_len = clip.len();
    let l = plan.participants.len();
    if picks.len() != l || states.len() != plan.words.len() {
        return Err(Error::Contract("assignment shape does not match plan".into()));
    }
    if picks.iter().chain(states).any(|v| v.len() != t_len) {
        return Err(Error::Contract("assignment length does not match clip".into()));
    }
    let det = |i: usize, t: usize| -> Result<&Detection> {
        clip.class_frame(t, &plan.participants[i].class)
            .get(picks[i][t])
            .ok_or_else(|| Error::Contract(format!("pick out of range for participant {i} frame {t}")))
    };

    // distinct-detection constraint between same-class participants
    for t in 0..t_len {
        for i in 0..l {
            for j in 0..i {
                if plan.participants[i].class == plan.participants[j].class
                    && picks[i][t] == picks[j][t]
                {
                    return Ok(f64::NEG_INFINITY);
                }
            }
        }
    }

    // word constraints: start/accept states, transitions, per-frame atoms
    for ((word, fsm), path) in plan.words.iter().zip(&fsms).zip(states) {
        if !fsm.starts.contains(&path[0]) || !fsm.accepts.contains(&path[t_len - 1]) {
            return Ok(f64::NEG_INFINITY);
        }
        for t in 0..t_len {
            if t > 0 && !fsm.succ[path[t - 1]].contains(&path[t]) {
                return Ok(f64::NEG_INFINITY);
            }
            let binding = word
                .theta
                .iter()
                .map(|&p| det(p, t))
                .collect::<Result<Vec<_>>>()?;
            if !fsm.atoms[fsm.state_atom[path[t]]].eval(&binding, params) {
                return Ok(f64::NEG_INFINITY);
            }
        }
    }

    let mut acc = 0.0;
    for i in 0..l {
        acc += det(i, 0)?.f;
    }
    for t in 1..t_len {
        for (i, p) in picks.iter().enumerate() {
            acc += motion_coherence(det(i, t - 1)?, &clip.class_frame(t, &plan.participants[i].class)[p[t]]);
        }
        for i in 0..l {
            acc += det(i, t)?.f;
        }
    }
    Ok(acc)
}

/// True iff `joint_score` would be finite. Cheap screens first: every word's
/// shortest accepted length must fit in the clip and every participant's
/// class must be detected in every frame.
pub fn feasible(
    clip: &Clip,
    plan: &QueryPlan,
    lexicon: &Lexicon,
    params: &ParameterSet,
    prune: usize,
) -> Result<bool> {
    let t_len = clip.len();
    for w in &plan.words {
        if lexicon.fsm(&w.lexeme)?.min_len > t_len {
            return Ok(false);
        }
    }
    for p in &plan.participants {
        if (0..t_len).any(|t| clip.class_frame(t, &p.class).is_empty()) {
            return Ok(false);
        }
    }
    Ok(joint_score(clip, plan, lexicon, params, prune)?.is_feasible())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::clip_id;
    use crate::parser::{parse, Participant, WordInstance};
    use crate::tracker::best_track;
    use std::collections::BTreeMap;
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

    fn det(class: &str, cx: f64, cy: f64, w: f64, h: f64, f: f64, vx: f64) -> Detection {
        Detection {
            cx,
            cy,
            width: w,
            height: h,
            class: class.into(),
            f,
            vx,
            vy: 0.0,
            source_index: 0,
        }
    }

    fn clip_of(frames: Vec<Vec<Detection>>) -> Clip {
        let frames = frames
            .into_iter()
            .map(|dets| {
                let mut m: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
                for d in dets {
                    m.entry(d.class.clone()).or_default().push(d);
                }
                m
            })
            .collect();
        Clip {
            clip_id: clip_id("v", 0),
            video_id: "v".into(),
            start_frame: 0,
            frames,
        }
    }

    fn noun_plan(classes: &[&str]) -> QueryPlan {
        QueryPlan {
            sentence: classes.join(" "),
            participants: classes
                .iter()
                .enumerate()
                .map(|(index, c)| Participant {
                    index,
                    class: c.to_string(),
                })
                .collect(),
            words: classes
                .iter()
                .enumerate()
                .map(|(index, c)| WordInstance {
                    lexeme: c.to_string(),
                    theta: vec![index],
                })
                .collect(),
        }
    }

    /// Co-moving, overlapping person-on-horse geometry for `t_len` frames.
    fn ride_clip(t_len: usize) -> Clip {
        let frames = (0..t_len)
            .map(|t| {
                let x = 200.0 + 6.0 * t as f64;
                vec![
                    det("horse", x, 400.0, 220.0, 160.0, 0.9, 6.0),
                    det("person", x, 380.0, 70.0, 120.0, 0.8, 6.0),
                ]
            })
            .collect();
        clip_of(frames)
    }

    #[test]
    fn single_noun_reduces_to_best_track() {
        let clip = clip_of(vec![
            vec![det("person", 100.0, 100.0, 20.0, 40.0, 0.9, 3.0)],
            vec![det("person", 103.0, 100.0, 20.0, 40.0, 0.7, 3.0)],
            vec![det("person", 106.0, 100.0, 20.0, 40.0, 0.8, 0.0)],
        ]);
        let lex = Lexicon::stock();
        let s = joint_score(&clip, &noun_plan(&["person"]), &lex, &params(), 12).unwrap();
        let t = best_track(&clip, "person").unwrap();
        assert_eq!(s.score, t.score);
        assert_eq!(s.tracks[0].picks, t.picks);
    }

    #[test]
    fn two_nouns_sum_independent_tracks() {
        let clip = ride_clip(3);
        let lex = Lexicon::stock();
        let s = joint_score(&clip, &noun_plan(&["person", "horse"]), &lex, &params(), 12).unwrap();
        let expect = {
            // canonical order: both f's at frame 0, then per frame g's then f's
            let p = best_track(&clip, "person").unwrap();
            let h = best_track(&clip, "horse").unwrap();
            recompute_score(
                &clip,
                &noun_plan(&["person", "horse"]),
                &lex,
                &params(),
                &[p.picks, h.picks],
                &[vec![0; 3], vec![0; 3]],
            )
            .unwrap()
        };
        assert_eq!(s.score, expect);
    }

    #[test]
    fn missing_class_frame_is_infeasible() {
        let mut frames = vec![
            vec![
                det("horse", 200.0, 400.0, 220.0, 160.0, 0.9, 6.0),
                det("person", 200.0, 380.0, 70.0, 120.0, 0.8, 6.0),
            ];
            8
        ];
        frames[4].retain(|d| d.class != "horse");
        let clip = clip_of(frames);
        let lex = Lexicon::stock();
        let plan = parse("The person rode the horse").unwrap();
        let s = joint_score(&clip, &plan, &lex, &params(), 12).unwrap();
        assert_eq!(s.score, f64::NEG_INFINITY);
        assert!(s.tracks.is_empty());
        assert!(!feasible(&clip, &plan, &lex, &params(), 12).unwrap());
    }

    #[test]
    fn word_min_length_exceeding_clip_is_infeasible() {
        let clip = ride_clip(4); // quickly needs 5 frames
        let lex = Lexicon::stock();
        let plan = parse("The person rode the horse quickly").unwrap();
        assert!(!feasible(&clip, &plan, &lex, &params(), 12).unwrap());
        let s = joint_score(&clip, &plan, &lex, &params(), 12).unwrap();
        assert_eq!(s.score, f64::NEG_INFINITY);
    }

    #[test]
    fn ride_discriminates_word_order() {
        let clip = ride_clip(8);
        let lex = Lexicon::stock();
        let p = params();
        let fwd = joint_score(&clip, &parse("The person rode the horse").unwrap(), &lex, &p, 12).unwrap();
        let rev = joint_score(&clip, &parse("The horse rode the person").unwrap(), &lex, &p, 12).unwrap();
        assert!(fwd.is_feasible());
        assert_eq!(rev.score, f64::NEG_INFINITY);
    }

    #[test]
    fn joint_never_beats_independent_tracks() {
        let clip = ride_clip(8);
        let lex = Lexicon::stock();
        let plan = parse("The person rode the horse").unwrap();
        let s = joint_score(&clip, &plan, &lex, &params(), 12).unwrap();
        let bound = best_track(&clip, "person").unwrap().score + best_track(&clip, "horse").unwrap().score;
        assert!(s.score <= bound + 1e-9);
    }

    #[test]
    fn same_class_participants_need_distinct_detections() {
        let lex = Lexicon::stock();
        let plan = parse("The horse approached the horse").unwrap();
        assert_eq!(plan.participants.len(), 2);
        // mover closes on a stationary companion: feasible with two horses
        let two = clip_of(
            (0..8)
                .map(|t| {
                    vec![
                        det("horse", 800.0 - 12.0 * t as f64, 400.0, 100.0, 80.0, 0.9, -12.0),
                        det("horse", 200.0, 400.0, 100.0, 80.0, 0.9, 0.0),
                    ]
                })
                .collect(),
        );
        assert!(joint_score(&two, &plan, &lex, &params(), 12).unwrap().is_feasible());
        // a single horse cannot fill both roles
        let one = clip_of(
            (0..8)
                .map(|t| vec![det("horse", 800.0 - 12.0 * t as f64, 400.0, 100.0, 80.0, 0.9, -12.0)])
                .collect(),
        );
        let s = joint_score(&one, &plan, &lex, &params(), 12).unwrap();
        assert_eq!(s.score, f64::NEG_INFINITY);
    }

    #[test]
    fn returned_assignment_recomputes_exactly() {
        let clip = ride_clip(8);
        let lex = Lexicon::stock();
        let p = params();
        let plan = parse("The person rode the horse").unwrap();
        let s = joint_score(&clip, &plan, &lex, &p, 12).unwrap();
        let picks: Vec<Vec<usize>> = s.tracks.iter().map(|t| t.picks.clone()).collect();
        let states: Vec<Vec<usize>> = s.word_paths.iter().map(|w| w.states.clone()).collect();
        let again = recompute_score(&clip, &plan, &lex, &p, &picks, &states).unwrap();
        assert_eq!(s.score, again);
    }

    #[test]
    fn prune_keeps_highest_scores() {
        let dets = vec![
            det("person", 0.0, 0.0, 10.0, 10.0, 0.2, 0.0),
            det("person", 0.0, 0.0, 10.0, 10.0, 0.9, 0.0),
            det("person", 0.0, 0.0, 10.0, 10.0, 0.9, 0.0),
            det("person", 0.0, 0.0, 10.0, 10.0, 0.5, 0.0),
        ];
        assert_eq!(prune_candidates(&dets, 2), vec![1, 2]);
        assert_eq!(prune_candidates(&dets, 3), vec![1, 2, 3]);
        assert_eq!(prune_candidates(&dets, 10), vec![0, 1, 2, 3]);
    }
}
