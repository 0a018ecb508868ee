//! The detection-level predicate inventory: boolean geometric and kinematic
//! tests on one or two detections, parameterized by nine shared thresholds.
//! Word meanings are built as regular expressions over boolean expressions
//! of these primitives.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::detect::Detection;
use crate::error::{Error, Result};

/// The nine learned thresholds shared by every predicate. Distances are in
/// canonical pixels, speeds in canonical pixels/frame, angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub far: f64,
    pub close: f64,
    pub stationary: f64,
    pub d_closing: f64,
    pub d_angle: f64,
    pub d_pp: f64,
    pub d_quickly: f64,
    pub d_slowly: f64,
    pub overlap: f64,
}

impl ParameterSet {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("far", self.far),
            ("close", self.close),
            ("stationary", self.stationary),
            ("d_closing", self.d_closing),
            ("d_angle", self.d_angle),
            ("d_pp", self.d_pp),
            ("d_quickly", self.d_quickly),
            ("d_slowly", self.d_slowly),
        ];
        for (name, v) in nonneg {
            if v < 0.0 {
                return Err(Error::Contract(format!("parameter {name} must be nonnegative")));
            }
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::Contract("parameter overlap must lie in [0,1]".into()));
        }
        if self.d_slowly <= self.stationary {
            return Err(Error::Contract(
                "d_slowly must exceed stationary".into(),
            ));
        }
        Ok(())
    }
}

/// Flow direction, with angle 0 pointing toward increasing x. Zero flow
/// maps to 0; every orientation-consuming predicate also requires the
/// magnitude to exceed `stationary`, so the value there is immaterial.
pub fn flow_orientation(d: &Detection) -> f64 {
    if d.vx == 0.0 && d.vy == 0.0 {
        0.0
    } else {
        d.vy.atan2(d.vx)
    }
}

pub fn flow_magnitude(d: &Detection) -> f64 {
    d.vx.hypot(d.vy)
}

/// Shift a detection one frame forward along its flow vector, size unchanged.
pub fn project(d: &Detection) -> Detection {
    Detection {
        cx: d.cx + d.vx,
        cy: d.cy + d.vy,
        ..d.clone()
    }
}

/// Angular difference on the circle, in [0, pi].
pub fn angle_diff(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Horizontal gap between two boxes: center distance minus both half-widths.
/// Negative when the boxes overlap horizontally.
pub fn horizontal_gap(a: &Detection, b: &Detection) -> f64 {
    (a.cx - b.cx).abs() - a.width / 2.0 - b.width / 2.0
}

/// Rectangle intersection-over-union on canonical center-form boxes.
pub fn iou(a: &Detection, b: &Detection) -> f64 {
    let ix = overlap_1d(a.cx, a.width, b.cx, b.width);
    let iy = overlap_1d(a.cy, a.height, b.cy, b.height);
    let inter = ix * iy;
    let union = a.width * a.height + b.width * b.height - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

fn overlap_1d(c1: f64, w1: f64, c2: f64, w2: f64) -> f64 {
    let lo = (c1 - w1 / 2.0).max(c2 - w2 / 2.0);
    let hi = (c1 + w1 / 2.0).min(c2 + w2 / 2.0);
    (hi - lo).max(0.0)
}

/// The primitive predicates. Unary primitives test a single detection,
/// binary primitives a pair; `MovingDirection` carries its reference angle
/// and ignores its second argument, keeping the two-argument signature.
#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    Far,
    ReallyClose,
    Close,
    Stationary,
    Closing,
    Departing,
    MovingDirection(f64),
    LeftOf,
    RightOf,
    Leftward,
    Rightward,
    StationaryButFar,
    StationaryButClose,
    MovingTogether,
    Approaching,
    Quickly,
    Slowly,
    Overlapping,
    /// Class-membership test used by noun entries.
    IsClass(String),
}

impl Primitive {
    pub fn arity(&self) -> usize {
        use Primitive::*;
        match self {
            Stationary | Leftward | Rightward | Quickly | Slowly | IsClass(_) => 1,
            MovingDirection(_) => 2,
            _ => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        use Primitive::*;
        match self {
            Far => "far",
            ReallyClose => "really-close",
            Close => "close",
            Stationary => "stationary",
            Closing => "closing",
            Departing => "departing",
            MovingDirection(_) => "moving-direction",
            LeftOf => "left-of",
            RightOf => "right-of",
            Leftward => "leftward",
            Rightward => "rightward",
            StationaryButFar => "stationary-but-far",
            StationaryButClose => "stationary-but-close",
            MovingTogether => "moving-together",
            Approaching => "approaching",
            Quickly => "quickly",
            Slowly => "slowly",
            Overlapping => "overlapping",
            IsClass(_) => "is-class",
        }
    }

    pub fn from_name(name: &str) -> Option<Primitive> {
        use Primitive::*;
        Some(match name {
            "far" => Far,
            "really-close" => ReallyClose,
            "close" => Close,
            "stationary" => Stationary,
            "closing" => Closing,
            "departing" => Departing,
            "left-of" => LeftOf,
            "right-of" => RightOf,
            "leftward" => Leftward,
            "rightward" => Rightward,
            "stationary-but-far" => StationaryButFar,
            "stationary-but-close" => StationaryButClose,
            "moving-together" => MovingTogether,
            "approaching" => Approaching,
            "quickly" => Quickly,
            "slowly" => Slowly,
            "overlapping" => Overlapping,
            _ => return None,
        })
    }

    /// Evaluate on bound detections. `args` length must match `arity`.
    pub fn eval(&self, args: &[&Detection], p: &ParameterSet) -> bool {
        use Primitive::*;
        match self {
            Far => horizontal_gap(args[0], args[1]) > p.far,
            ReallyClose => horizontal_gap(args[0], args[1]) < p.close / 2.0,
            Close => horizontal_gap(args[0], args[1]) < p.close,
            Stationary => flow_magnitude(args[0]) <= p.stationary,
            Closing => {
                let (a, b) = (args[0], args[1]);
                (a.cx - b.cx).abs() > (project(a).cx - project(b).cx).abs() + p.d_closing
            }
            Departing => {
                let (a, b) = (args[0], args[1]);
                (a.cx - b.cx).abs() < (project(a).cx - project(b).cx).abs() - p.d_closing
            }
            MovingDirection(alpha) => moving_direction(args[0], *alpha, p),
            LeftOf => args[0].cx < args[1].cx + p.d_pp,
            RightOf => args[0].cx > args[1].cx + p.d_pp,
            Leftward => moving_direction(args[0], PI, p),
            Rightward => moving_direction(args[0], 0.0, p),
            StationaryButFar => {
                Far.eval(args, p)
                    && flow_magnitude(args[0]) <= p.stationary
                    && flow_magnitude(args[1]) <= p.stationary
            }
            StationaryButClose => {
                Close.eval(args, p)
                    && flow_magnitude(args[0]) <= p.stationary
                    && flow_magnitude(args[1]) <= p.stationary
            }
            MovingTogether => {
                angle_diff(flow_orientation(args[0]), flow_orientation(args[1])) < p.d_angle
                    && flow_magnitude(args[0]) > p.stationary
                    && flow_magnitude(args[1]) > p.stationary
            }
            Approaching => Closing.eval(args, p) && flow_magnitude(args[1]) <= p.stationary,
            Quickly => flow_magnitude(args[0]) > p.d_quickly,
            Slowly => {
                let m = flow_magnitude(args[0]);
                p.stationary < m && m < p.d_slowly
            }
            Overlapping => iou(args[0], args[1]) >= p.overlap,
            IsClass(label) => args[0].class == *label,
        }
    }
}

fn moving_direction(a: &Detection, alpha: f64, p: &ParameterSet) -> bool {
    angle_diff(flow_orientation(a), alpha) < p.d_angle && flow_magnitude(a) > p.stationary
}

/// A boolean expression over primitives, with argument slots referring to a
/// word's declared roles by position.
#[derive(Debug, Clone, PartialEq)]
pub enum PredicateExpr {
    True,
    Prim { prim: Primitive, slots: Vec<usize> },
    And(Vec<PredicateExpr>),
    Or(Vec<PredicateExpr>),
    Not(Box<PredicateExpr>),
}

impl PredicateExpr {
    pub fn prim(prim: Primitive, slots: &[usize]) -> PredicateExpr {
        PredicateExpr::Prim {
            prim,
            slots: slots.to_vec(),
        }
    }

    /// Evaluate against a binding of role slot -> detection. Slots are
    /// validated at load time; an out-of-range slot here is a bug.
    pub fn eval(&self, binding: &[&Detection], p: &ParameterSet) -> bool {
        match self {
            PredicateExpr::True => true,
            PredicateExpr::Prim { prim, slots } => {
                let mut args: [&Detection; 2] = [binding[0]; 2];
                for (i, &s) in slots.iter().enumerate() {
                    args[i] = binding[s];
                }
                prim.eval(&args[..slots.len()], p)
            }
            PredicateExpr::And(xs) => xs.iter().all(|x| x.eval(binding, p)),
            PredicateExpr::Or(xs) => xs.iter().any(|x| x.eval(binding, p)),
            PredicateExpr::Not(x) => !x.eval(binding, p),
        }
    }

    /// Check arities and slot references against a role count.
    pub fn validate(&self, role_count: usize) -> Result<()> {
        match self {
            PredicateExpr::True => Ok(()),
            PredicateExpr::Prim { prim, slots } => {
                if slots.len() != prim.arity() {
                    return Err(Error::Contract(format!(
                        "primitive {} takes {} argument(s), got {}",
                        prim.name(),
                        prim.arity(),
                        slots.len()
                    )));
                }
                for &s in slots {
                    if s >= role_count {
                        return Err(Error::Contract(format!(
                            "primitive {} references undeclared role slot {s}",
                            prim.name()
                        )));
                    }
                }
                Ok(())
            }
            PredicateExpr::And(xs) | PredicateExpr::Or(xs) => {
                xs.iter().try_for_each(|x| x.validate(role_count))
            }
            PredicateExpr::Not(x) => x.validate(role_count),
        }
    }

    /// Role slots referenced anywhere in the expression.
    pub fn referenced_slots(&self, out: &mut Vec<usize>) {
        match self {
            PredicateExpr::True => {}
            PredicateExpr::Prim { slots, .. } => out.extend_from_slice(slots),
            PredicateExpr::And(xs) | PredicateExpr::Or(xs) => {
                xs.iter().for_each(|x| x.referenced_slots(out))
            }
            PredicateExpr::Not(x) => x.referenced_slots(out),
        }
    }

    /// Decode from the lexicon's JSON form. Atoms look like
    /// `["pred","far","a","b"]`, `["class","a","person"]`, `"true"`, and
    /// combine with `["and",...]`, `["or",...]`, `["not",x]`.
    pub fn from_json(value: &Value, roles: &[String]) -> Result<PredicateExpr> {
        let slot = |name: &Value| -> Result<usize> {
            let name = name
                .as_str()
                .ok_or_else(|| Error::Contract(format!("role name must be a string: {name}")))?;
            roles
                .iter()
                .position(|r| r == name)
                .ok_or_else(|| Error::Contract(format!("undeclared role {name:?}")))
        };
        match value {
            Value::String(s) if s == "true" => Ok(PredicateExpr::True),
            Value::Array(items) if !items.is_empty() => {
                let head = items[0]
                    .as_str()
                    .ok_or_else(|| Error::Contract(format!("bad expression head: {}", items[0])))?;
                match head {
                    "and" | "or" => {
                        let xs = items[1..]
                            .iter()
                            .map(|v| PredicateExpr::from_json(v, roles))
                            .collect::<Result<Vec<_>>>()?;
                        Ok(if head == "and" {
                            PredicateExpr::And(xs)
                        } else {
                            PredicateExpr::Or(xs)
                        })
                    }
                    "not" => {
                        if items.len() != 2 {
                            return Err(Error::Contract("not takes one operand".into()));
                        }
                        Ok(PredicateExpr::Not(Box::new(PredicateExpr::from_json(
                            &items[1], roles,
                        )?)))
                    }
                    "class" => {
                        if items.len() != 3 {
                            return Err(Error::Contract("class takes a role and a label".into()));
                        }
                        let s = slot(&items[1])?;
                        let label = items[2]
                            .as_str()
                            .ok_or_else(|| Error::Contract("class label must be a string".into()))?;
                        Ok(PredicateExpr::prim(Primitive::IsClass(label.into()), &[s]))
                    }
                    "pred" => {
                        let name = items
                            .get(1)
                            .and_then(Value::as_str)
                            .ok_or_else(|| Error::Contract("pred needs a primitive name".into()))?;
                        if name == "moving-direction" {
                            if items.len() != 5 {
                                return Err(Error::Contract(
                                    "moving-direction takes two roles and an angle".into(),
                                ));
                            }
                            let a = slot(&items[2])?;
                            let b = slot(&items[3])?;
                            let alpha = items[4].as_f64().ok_or_else(|| {
                                Error::Contract("moving-direction angle must be a number".into())
                            })?;
                            return Ok(PredicateExpr::prim(
                                Primitive::MovingDirection(alpha),
                                &[a, b],
                            ));
                        }
                        let prim = Primitive::from_name(name).ok_or_else(|| {
                            Error::Contract(format!("unknown primitive {name:?}"))
                        })?;
                        let slots = items[2..]
                            .iter()
                            .map(slot)
                            .collect::<Result<Vec<_>>>()?;
                        if slots.len() != prim.arity() {
                            return Err(Error::Contract(format!(
                                "primitive {name} takes {} argument(s), got {}",
                                prim.arity(),
                                slots.len()
                            )));
                        }
                        Ok(PredicateExpr::Prim { prim, slots })
                    }
                    other => Err(Error::Contract(format!("unknown expression head {other:?}"))),
                }
            }
            other => Err(Error::Contract(format!("bad predicate expression: {other}"))),
        }
    }

    pub fn to_json(&self, roles: &[String]) -> Value {
        match self {
            PredicateExpr::True => json!("true"),
            PredicateExpr::Prim { prim, slots } => match prim {
                Primitive::IsClass(label) => json!(["class", roles[slots[0]], label]),
                Primitive::MovingDirection(alpha) => {
                    json!(["pred", "moving-direction", roles[slots[0]], roles[slots[1]], alpha])
                }
                _ => {
                    let mut items = vec![json!("pred"), json!(prim.name())];
                    items.extend(slots.iter().map(|&s| json!(roles[s])));
                    Value::Array(items)
                }
            },
            PredicateExpr::And(xs) => {
                let mut items = vec![json!("and")];
                items.extend(xs.iter().map(|x| x.to_json(roles)));
                Value::Array(items)
            }
            PredicateExpr::Or(xs) => {
                let mut items = vec![json!("or")];
                items.extend(xs.iter().map(|x| x.to_json(roles)));
                Value::Array(items)
            }
            PredicateExpr::Not(x) => json!(["not", x.to_json(roles)]),
        }
    }
}
