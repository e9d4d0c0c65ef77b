//! Fusion schedules over Hamiltonians: frame clocks, expression trees and
//! spectral gap profiles.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::operator::HermitianOperator;
use super::AqcError;

/// Ground-cluster width used when none is given.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;
/// Default number of grid points for profiles.
pub const DEFAULT_GRID: usize = 512;
/// Smallest grid accepted by [`gap_profile`].
pub const MIN_GRID: usize = 16;

/// `H_s = (1 - s) H_0 + s H_1`.
pub fn fuse_h(h0: &HermitianOperator, h1: &HermitianOperator, s: f64) -> Result<HermitianOperator, AqcError> {
    if !(0.0..=1.0).contains(&s) || s.is_nan() {
        return Err(AqcError::WeightOutOfRange(s));
    }
    h0.combine(1.0 - s, h1, s)
}

/// Deformed time frames `t_i = scale_i * min(1, alpha^-i t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameClock {
    alpha: f64,
    scales: Vec<f64>,
}

impl FrameClock {
    pub fn new(alpha: f64, frames: usize) -> Result<Self, AqcError> {
        Self::with_scales(alpha, vec![1.0; frames])
    }

    pub fn with_scales(alpha: f64, scales: Vec<f64>) -> Result<Self, AqcError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(AqcError::AlphaOutOfRange(alpha));
        }
        if scales.is_empty() {
            return Err(AqcError::NoFrames);
        }
        if let Some(&bad) = scales.iter().find(|s| !(**s > 0.0 && **s <= 1.0)) {
            return Err(AqcError::ScaleOutOfRange(bad));
        }
        Ok(Self { alpha, scales })
    }

    /// Two-frame clock with `t_0 = t` and `t_1 = a * min(1, t / alpha)`.
    pub fn scaled_pair(a: f64, alpha: f64) -> Result<Self, AqcError> {
        Self::with_scales(alpha, vec![1.0, a])
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn frames(&self) -> usize {
        self.scales.len()
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn frame_time(&self, frame: usize, t: f64) -> Result<f64, AqcError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(AqcError::TimeOutOfRange(t));
        }
        let scale = *self
            .scales
            .get(frame)
            .ok_or(AqcError::FrameOutOfRange { frame, frames: self.frames() })?;
        let deformed = (t / self.alpha.powi(frame as i32)).min(1.0);
        Ok(scale * deformed)
    }
}

/// How a fusion node picks its interpolation weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FuseRule {
    /// Weight is the frame time `t_i`.
    Frame(usize),
    /// `a ▷ b = (1 - t/2) a + (t/2) b`.
    HalfTime,
    /// Weight `min(cap, t)`.
    ClampedTime(f64),
}

impl FuseRule {
    fn weight(&self, t: f64, clock: &FrameClock) -> Result<f64, AqcError> {
        match *self {
            FuseRule::Frame(i) => clock.frame_time(i, t),
            FuseRule::HalfTime => Ok(0.5 * t),
            FuseRule::ClampedTime(cap) => Ok(cap.min(t)),
        }
    }
}

impl fmt::Display for FuseRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FuseRule::Frame(i) => write!(f, "@{i}"),
            FuseRule::HalfTime => write!(f, "@star"),
            FuseRule::ClampedTime(cap) => write!(f, "@star:{cap}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleExpr {
    Leaf {
        name: String,
        op: Arc<HermitianOperator>,
    },
    Fuse {
        rule: FuseRule,
        left: Box<ScheduleExpr>,
        right: Box<ScheduleExpr>,
    },
}

impl ScheduleExpr {
    pub fn leaf(name: impl Into<String>, op: HermitianOperator) -> Self {
        ScheduleExpr::Leaf {
            name: name.into(),
            op: Arc::new(op),
        }
    }

    pub fn fuse(rule: FuseRule, left: ScheduleExpr, right: ScheduleExpr) -> Self {
        ScheduleExpr::Fuse {
            rule,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Shared qubit count of all leaves.
    pub fn qubits(&self) -> Result<usize, AqcError> {
        match self {
            ScheduleExpr::Leaf { op, .. } => Ok(op.qubits()),
            ScheduleExpr::Fuse { left, right, .. } => {
                let (l, r) = (left.qubits()?, right.qubits()?);
                if l != r {
                    return Err(AqcError::Malformed(format!(
                        "leaves on {l} and {r} qubits"
                    )));
                }
                Ok(l)
            }
        }
    }

    pub fn check(&self, clock: &FrameClock) -> Result<(), AqcError> {
        self.qubits()?;
        self.check_frames(clock)
    }

    fn check_frames(&self, clock: &FrameClock) -> Result<(), AqcError> {
        match self {
            ScheduleExpr::Leaf { .. } => Ok(()),
            ScheduleExpr::Fuse { rule, left, right } => {
                match *rule {
                    FuseRule::Frame(i) if i >= clock.frames() => {
                        return Err(AqcError::Malformed(format!(
                            "frame {i} but clock has {} frames",
                            clock.frames()
                        )))
                    }
                    FuseRule::ClampedTime(cap) if !(0.0..=1.0).contains(&cap) => {
                        return Err(AqcError::Malformed(format!("clamp {cap} outside [0,1]")))
                    }
                    _ => {}
                }
                left.check_frames(clock)?;
                right.check_frames(clock)
            }
        }
    }

    fn eval_unchecked(&self, t: f64, clock: &FrameClock) -> Result<HermitianOperator, AqcError> {
        match self {
            ScheduleExpr::Leaf { op, .. } => Ok((**op).clone()),
            ScheduleExpr::Fuse { rule, left, right } => {
                let s = rule.weight(t, clock)?;
                let l = left.eval_unchecked(t, clock)?;
                let r = right.eval_unchecked(t, clock)?;
                fuse_h(&l, &r, s)
            }
        }
    }
}

impl fmt::Display for ScheduleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleExpr::Leaf { name, .. } => write!(f, "{name}"),
            ScheduleExpr::Fuse { rule, left, right } => write!(f, "(fuse{rule} {left} {right})"),
        }
    }
}

/// Evaluates the tree bottom-up, each node fusing with its rule's weight.
pub fn eval_schedule(expr: &ScheduleExpr, t: f64, clock: &FrameClock) -> Result<HermitianOperator, AqcError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(AqcError::TimeOutOfRange(t));
    }
    expr.check(clock)?;
    expr.eval_unchecked(t, clock)
}

/// Parses `(fuse@1 (fuse@0 H0 Horacle) H1)`. Names resolve against `env`,
/// whose entries may themselves be sub-schedules.
pub fn parse_schedule(text: &str, env: &BTreeMap<String, ScheduleExpr>) -> Result<ScheduleExpr, AqcError> {
    let tokens = tokenize(text);
    let mut pos = 0;
    let expr = parse_node(&tokens, &mut pos, env)?;
    if pos != tokens.len() {
        return Err(AqcError::Parse(format!("trailing input at token {pos}")));
    }
    Ok(expr)
}

fn tokenize(text: &str) -> Vec<String> {
    text.replace('(', " ( ")
        .replace(')', " ) ")
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn parse_node(tokens: &[String], pos: &mut usize, env: &BTreeMap<String, ScheduleExpr>) -> Result<ScheduleExpr, AqcError> {
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| AqcError::Parse("unexpected end of expression".into()))?;
    *pos += 1;
    if tok == ")" {
        return Err(AqcError::Parse("unexpected ')'".into()));
    }
    if tok != "(" {
        return env
            .get(tok)
            .cloned()
            .ok_or_else(|| AqcError::Parse(format!("unknown operator `{tok}`")));
    }
    let head = tokens
        .get(*pos)
        .ok_or_else(|| AqcError::Parse("missing fuse head".into()))?;
    *pos += 1;
    let rule = parse_rule(head)?;
    let left = parse_node(tokens, pos, env)?;
    let right = parse_node(tokens, pos, env)?;
    match tokens.get(*pos) {
        Some(t) if t == ")" => *pos += 1,
        _ => return Err(AqcError::Parse("expected ')' after two operands".into())),
    }
    Ok(ScheduleExpr::fuse(rule, left, right))
}

fn parse_rule(head: &str) -> Result<FuseRule, AqcError> {
    let tag = head
        .strip_prefix("fuse@")
        .ok_or_else(|| AqcError::Parse(format!("expected fuse@<tag>, got `{head}`")))?;
    if tag == "star" {
        return Ok(FuseRule::HalfTime);
    }
    if let Some(cap) = tag.strip_prefix("star:") {
        let cap: f64 = cap
            .parse()
            .map_err(|_| AqcError::Parse(format!("bad clamp `{cap}`")))?;
        return Ok(FuseRule::ClampedTime(cap));
    }
    tag.parse::<usize>()
        .map(FuseRule::Frame)
        .map_err(|_| AqcError::Parse(format!("bad frame tag `{tag}`")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapPoint {
    pub t: f64,
    pub ground: f64,
    /// Distance from the ground cluster to the next level; infinite when the
    /// whole spectrum lies in the ground cluster.
    pub gap: f64,
    pub degeneracy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapProfile {
    pub points: Vec<GapPoint>,
    /// Minimum gap over the interior grid (endpoints excluded).
    pub g_min: f64,
    pub t_at_min: f64,
    /// `1 / g_min^2`.
    pub computation_time: f64,
}

/// Ground energy, cluster size and cluster gap of one operator.
pub fn spectral_gap(h: &HermitianOperator, degeneracy_tol: f64) -> (f64, usize, f64) {
    let values = h.eigenvalues();
    let ground = values[0];
    let degeneracy = values.iter().take_while(|&&v| v <= ground + degeneracy_tol).count();
    let gap = values
        .get(degeneracy)
        .map(|&v| v - ground)
        .unwrap_or(f64::INFINITY);
    (ground, degeneracy, gap)
}

pub fn gap_profile(
    expr: &ScheduleExpr,
    clock: &FrameClock,
    grid: usize,
    degeneracy_tol: f64,
) -> Result<GapProfile, AqcError> {
    if grid < MIN_GRID {
        return Err(AqcError::GridTooSmall(grid));
    }
    expr.check(clock)?;
    let step = 1.0 / (grid - 1) as f64;
    let points = (0..grid)
        .into_par_iter()
        .map(|i| {
            let t = if i == grid - 1 { 1.0 } else { i as f64 * step };
            let h = expr.eval_unchecked(t, clock)?;
            let (ground, degeneracy, gap) = spectral_gap(&h, degeneracy_tol);
            Ok(GapPoint {
                t,
                ground,
                gap,
                degeneracy,
            })
        })
        .collect::<Result<Vec<_>, AqcError>>()?;
    let (t_at_min, g_min) = points[1..grid - 1]
        .iter()
        .map(|p| (p.t, p.gap))
        .fold((f64::NAN, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    Ok(GapProfile {
        points,
        g_min,
        t_at_min,
        computation_time: 1.0 / (g_min * g_min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aqc::operator::{projector_x, projector_z};
    use approx::assert_abs_diff_eq;

    fn qubit_env() -> BTreeMap<String, ScheduleExpr> {
        let mut env = BTreeMap::new();
        env.insert("A".into(), ScheduleExpr::leaf("A", projector_x(0, 1, 0).unwrap()));
        env.insert("B".into(), ScheduleExpr::leaf("B", projector_z(1, 0).unwrap()));
        env
    }

    #[test]
    fn frame_times() {
        let clock = FrameClock::new(0.5, 3).unwrap();
        assert_abs_diff_eq!(clock.frame_time(0, 0.3).unwrap(), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(clock.frame_time(1, 0.3).unwrap(), 0.6, epsilon = 1e-15);
        assert_eq!(clock.frame_time(2, 0.3).unwrap(), 1.0);
        assert!(clock.frame_time(3, 0.3).is_err());
        let scaled = FrameClock::with_scales(0.5, vec![1.0, 0.7, 0.2]).unwrap();
        for (i, s) in [1.0, 0.7, 0.2].iter().enumerate() {
            assert_eq!(scaled.frame_time(i, 1.0).unwrap(), *s);
        }
        let pair = FrameClock::scaled_pair(0.95, 0.5).unwrap();
        assert_abs_diff_eq!(pair.frame_time(1, 0.4).unwrap(), 0.76, epsilon = 1e-15);
    }

    #[test]
    fn clock_validation() {
        assert!(FrameClock::new(1.0, 2).is_err());
        assert!(FrameClock::new(0.0, 2).is_err());
        assert!(FrameClock::with_scales(0.5, vec![1.0, 1.5]).is_err());
        assert!(FrameClock::with_scales(0.5, vec![0.0]).is_err());
    }

    #[test]
    fn fuse_endpoints_and_idempotence() {
        let a = projector_x(0, 1, 0).unwrap();
        let b = projector_z(1, 0).unwrap();
        assert_eq!(fuse_h(&a, &b, 0.0).unwrap().max_abs_diff(&a), 0.0);
        assert_eq!(fuse_h(&a, &b, 1.0).unwrap().max_abs_diff(&b), 0.0);
        assert!(fuse_h(&a, &a, 0.37).unwrap().max_abs_diff(&a) < 1e-15);
        let mid = fuse_h(&a, &b, 0.5).unwrap().eigenvalues();
        let r = 2f64.sqrt() / 4.0;
        assert_abs_diff_eq!(mid[0], 0.5 - r, epsilon = 1e-14);
        assert_abs_diff_eq!(mid[1], 0.5 + r, epsilon = 1e-14);
    }

    #[test]
    fn parse_and_print_round_trip() {
        let env = qubit_env();
        let text = "(fuse@1 (fuse@star A B) (fuse@star:0.95 B A))";
        let expr = parse_schedule(text, &env).unwrap();
        assert_eq!(expr.to_string(), text);
        assert!(parse_schedule("(fuse@1 A)", &env).is_err());
        assert!(parse_schedule("(fuse@x A B)", &env).is_err());
        assert!(parse_schedule("C", &env).is_err());
        assert!(parse_schedule("(fuse@0 A B) B", &env).is_err());
    }

    #[test]
    fn eval_rejects_bad_frame() {
        let env = qubit_env();
        let expr = parse_schedule("(fuse@2 A B)", &env).unwrap();
        let clock = FrameClock::new(0.5, 2).unwrap();
        assert!(matches!(eval_schedule(&expr, 0.5, &clock), Err(AqcError::Malformed(_))));
    }

    #[test]
    fn single_leaf_evaluates_to_itself() {
        let env = qubit_env();
        let clock = FrameClock::new(0.5, 1).unwrap();
        let h = eval_schedule(&env["A"], 0.3, &clock).unwrap();
        assert_eq!(h.max_abs_diff(&projector_x(0, 1, 0).unwrap()), 0.0);
    }

    #[test]
    fn constant_schedule_profile() {
        let env = qubit_env();
        let clock = FrameClock::new(0.5, 1).unwrap();
        let expr = parse_schedule("(fuse@0 B B)", &env).unwrap();
        let profile = gap_profile(&expr, &clock, 32, DEFAULT_DEGENERACY_TOL).unwrap();
        assert_abs_diff_eq!(profile.g_min, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(profile.computation_time, 1.0, epsilon = 1e-13);
        assert!(gap_profile(&expr, &clock, 8, DEFAULT_DEGENERACY_TOL).is_err());
    }

    #[test]
    fn closed_form_qubit_gap() {
        let env = qubit_env();
        let clock = FrameClock::new(0.5, 1).unwrap();
        let expr = parse_schedule("(fuse@0 A B)", &env).unwrap();
        let profile = gap_profile(&expr, &clock, 101, DEFAULT_DEGENERACY_TOL).unwrap();
        for p in &profile.points {
            let s = p.t;
            let expected = ((1.0 - s).powi(2) + s * s).sqrt();
            assert_abs_diff_eq!(p.gap, expected, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(profile.t_at_min, 0.5, epsilon = 1e-12);
    }
}
