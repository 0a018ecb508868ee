//! The joint sentence tracker against brute-force enumeration of every
//! track assignment, with word acceptance decided by the direct regex
//! matcher, on random small instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use vidsent_core::detect::{clip_id, Clip, Detection};
use vidsent_core::lexicon::{Lexicon, Regex, WordRegex};
use vidsent_core::parser::{Participant, QueryPlan, WordInstance};
use vidsent_core::predicates::{ParameterSet, PredicateExpr, Primitive};
use vidsent_core::reference::brute_joint;
use vidsent_core::sentence::{feasible, joint_score};

fn params() -> ParameterSet {
    ParameterSet {
        far: 300.0,
        close: 120.0,
        stationary: 3.0,
        d_closing: 2.0,
        d_angle: PI / 4.0,
        d_pp: 10.0,
        d_quickly: 10.0,
        d_slowly: 6.0,
        overlap: 0.15,
    }
}

/// Short words (at most 4 states each) so tiny clips can still be feasible.
fn tiny_lexicon() -> Lexicon {
    let a = &[0usize][..];
    let ab = &[0usize, 1][..];
    let atom = |p: Primitive, s: &[usize]| Regex::Atom(PredicateExpr::prim(p, s));
    let plus = |r: Regex| Regex::Plus(Box::new(r));
    let unary = |name: &str, body: Regex| WordRegex {
        name: name.into(),
        roles: vec!["a".into()],
        body,
    };
    let binary = |name: &str, body: Regex| WordRegex {
        name: name.into(),
        roles: vec!["a".into(), "b".into()],
        body,
    };
    Lexicon::from_words(vec![
        unary("person", plus(atom(Primitive::IsClass("person".into()), a))),
        unary("horse", plus(atom(Primitive::IsClass("horse".into()), a))),
        binary("near", plus(atom(Primitive::Close, ab))),
        binary("apart", plus(atom(Primitive::Far, ab))),
        unary("still", plus(atom(Primitive::Stationary, a))),
        unary(
            "shift",
            Regex::Concat(vec![
                plus(atom(Primitive::Stationary, a)),
                plus(atom(Primitive::Quickly, a)),
            ]),
        ),
        binary(
            "brush",
            Regex::Concat(vec![
                plus(atom(Primitive::Far, ab)),
                Regex::AtLeast(2, Box::new(atom(Primitive::Close, ab))),
            ]),
        ),
    ])
    .unwrap()
}

fn random_clip(rng: &mut ChaCha8Rng, t_len: usize, max_j: usize) -> Clip {
    let frames = (0..t_len)
        .map(|_| {
            let mut m: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
            for class in ["person", "horse"] {
                let dets: Vec<Detection> = (0..rng.gen_range(1..=max_j))
                    .map(|idx| Detection {
                        cx: rng.gen_range(0.0..1280.0),
                        cy: rng.gen_range(0.0..720.0),
                        width: rng.gen_range(20.0..250.0),
                        height: rng.gen_range(20.0..250.0),
                        class: class.into(),
                        f: rng.gen_range(0.0..1.0),
                        vx: rng.gen_range(-20.0..20.0),
                        vy: rng.gen_range(-20.0..20.0),
                        source_index: idx as u32,
                    })
                    .collect();
                m.insert(class.to_string(), dets);
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

fn random_plan(rng: &mut ChaCha8Rng) -> QueryPlan {
    let l = rng.gen_range(1..=2);
    let participants: Vec<Participant> = (0..l)
        .map(|index| Participant {
            index,
            class: if rng.gen_bool(0.5) { "person" } else { "horse" }.to_string(),
        })
        .collect();
    let mut words: Vec<WordInstance> = participants
        .iter()
        .map(|p| WordInstance {
            lexeme: p.class.clone(),
            theta: vec![p.index],
        })
        .collect();
    // at most one constraining word on top of the nouns (W <= 3)
    if rng.gen_bool(0.8) {
        if l == 2 && rng.gen_bool(0.6) {
            let lexeme = ["near", "apart", "brush"][rng.gen_range(0..3)];
            let flip = rng.gen_bool(0.5);
            words.push(WordInstance {
                lexeme: lexeme.into(),
                theta: if flip { vec![1, 0] } else { vec![0, 1] },
            });
        } else {
            let lexeme = ["still", "shift"][rng.gen_range(0..2)];
            words.push(WordInstance {
                lexeme: lexeme.into(),
                theta: vec![rng.gen_range(0..l)],
            });
        }
    }
    QueryPlan {
        sentence: "<synthetic>".into(),
        participants,
        words,
    }
}

#[test]
fn joint_dp_matches_brute_force_on_200_random_instances() {
    let lex = tiny_lexicon();
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut finite = 0;
    let mut infeasible = 0;
    for i in 0..200 {
        let t_len = rng.gen_range(1..=4);
        let clip = random_clip(&mut rng, t_len, 3);
        let plan = random_plan(&mut rng);
        let fast = joint_score(&clip, &plan, &lex, &p, 12).unwrap();
        let slow = brute_joint(&clip, &plan, &lex, &p).unwrap();
        assert_eq!(fast.score, slow, "instance {i}: plan {plan:?}");
        assert_eq!(
            feasible(&clip, &plan, &lex, &p, 12).unwrap(),
            slow.is_finite(),
            "instance {i}"
        );
        if slow.is_finite() {
            finite += 1;
        } else {
            infeasible += 1;
        }
    }
    // the sample must exercise both outcomes to mean anything
    assert!(finite >= 20, "only {finite} finite instances");
    assert!(infeasible >= 20, "only {infeasible} infeasible instances");
}
