//! Local rewrite moves on machines and bounded equivalence search.

mod canon;
mod search;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::machine::{Interaction, MachineError, Orientation, TangleMachine};

pub use canon::canonical_key;
pub use search::{equivalent, SearchLimits, Verdict, DEFAULT_DEPTH_CAP, DEFAULT_NODE_CAP};

/// Weight given to inserted interactions over weighted quandles when a site
/// does not name one.
pub const DEFAULT_INSERT_WEIGHT: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewriteError {
    #[error("site does not match the {kind} pattern: {reason}")]
    PatternMismatch { kind: MoveKind, reason: String },
    #[error("malformed site: {0}")]
    InvalidSite(String),
    #[error("move would touch register arc {0:?}")]
    Register(String),
    #[error("move would break the machine: {0}")]
    Broken(String),
    #[error(transparent)]
    Machine(#[from] MachineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MoveKind {
    #[serde(rename = "R1-insert")]
    R1Insert,
    #[serde(rename = "R1-delete")]
    R1Delete,
    #[serde(rename = "R2-insert")]
    R2Insert,
    #[serde(rename = "R2-delete")]
    R2Delete,
    #[serde(rename = "R3-slide")]
    R3Slide,
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MoveKind::R1Insert => "R1-insert",
            MoveKind::R1Delete => "R1-delete",
            MoveKind::R2Insert => "R2-insert",
            MoveKind::R2Delete => "R2-delete",
            MoveKind::R3Slide => "R3-slide",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlideDirection {
    /// The first interaction's patients pass under the second's agent.
    Right,
    /// Undoes a right slide.
    Left,
}

/// Where to apply a move.
///
/// * `R1-insert`: `arcs = [a]`, adds a kink on `a`.
/// * `R1-delete`: `interactions = [kink]`.
/// * `R2-insert`: `arcs = [patient, agent]`.
/// * `R2-delete`: `interactions = [first, second]`, a stacked forward and
///   reverse pair under one agent.
/// * `R3-slide`: `interactions = [moving, crossing]` and a direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteSite {
    #[serde(rename = "move")]
    pub kind: MoveKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interactions: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub arcs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<SlideDirection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

impl RewriteSite {
    pub fn r1_insert(arc: &str, weight: Option<f64>) -> Self {
        Self::new(MoveKind::R1Insert, &[], &[arc], None, weight)
    }

    pub fn r1_delete(interaction: &str) -> Self {
        Self::new(MoveKind::R1Delete, &[interaction], &[], None, None)
    }

    pub fn r2_insert(patient: &str, agent: &str, weight: Option<f64>) -> Self {
        Self::new(MoveKind::R2Insert, &[], &[patient, agent], None, weight)
    }

    pub fn r2_delete(first: &str, second: &str) -> Self {
        Self::new(MoveKind::R2Delete, &[first, second], &[], None, None)
    }

    pub fn r3_slide(moving: &str, crossing: &str, direction: SlideDirection) -> Self {
        Self::new(MoveKind::R3Slide, &[moving, crossing], &[], Some(direction), None)
    }

    fn new(kind: MoveKind, interactions: &[&str], arcs: &[&str], direction: Option<SlideDirection>, weight: Option<f64>) -> Self {
        Self {
            kind,
            interactions: interactions.iter().map(|s| s.to_string()).collect(),
            arcs: arcs.iter().map(|s| s.to_string()).collect(),
            direction,
            weight,
        }
    }

    /// Checks that the site carries exactly the arguments its move needs.
    pub fn check_shape(&self) -> Result<(), RewriteError> {
        let (ints, arcs, dir, weight) = match self.kind {
            MoveKind::R1Insert => (0, 1, false, true),
            MoveKind::R1Delete => (1, 0, false, false),
            MoveKind::R2Insert => (0, 2, false, true),
            MoveKind::R2Delete => (2, 0, false, false),
            MoveKind::R3Slide => (2, 0, true, false),
        };
        if self.interactions.len() != ints || self.arcs.len() != arcs || self.direction.is_some() != dir || (!weight && self.weight.is_some()) {
            return Err(RewriteError::InvalidSite(format!(
                "{} takes {ints} interaction(s), {arcs} arc(s){}{}",
                self.kind,
                if dir { ", a direction" } else { "" },
                if weight { " and an optional weight" } else { "" }
            )));
        }
        Ok(())
    }
}

fn mismatch(kind: MoveKind, reason: impl Into<String>) -> RewriteError {
    RewriteError::PatternMismatch {
        kind,
        reason: reason.into(),
    }
}

fn interaction_index(m: &TangleMachine, id: &str) -> Result<usize, RewriteError> {
    m.interactions
        .iter()
        .position(|i| i.id == id)
        .ok_or_else(|| MachineError::UnknownInteraction(id.to_string()).into())
}

fn require_arc(m: &TangleMachine, a: &str) -> Result<(), RewriteError> {
    if m.has_arc(a) {
        Ok(())
    } else {
        Err(MachineError::UnknownArc(a.to_string()).into())
    }
}

fn require_free(m: &TangleMachine, a: &str) -> Result<(), RewriteError> {
    if m.is_register(a) {
        Err(RewriteError::Register(a.to_string()))
    } else {
        Ok(())
    }
}

fn insert_weight(m: &TangleMachine, w: Option<f64>) -> Option<f64> {
    if m.quandle.is_finite() {
        w
    } else {
        Some(w.unwrap_or(DEFAULT_INSERT_WEIGHT))
    }
}

/// Inserts `new` right after `after` in the arc list.
fn insert_arc_after(m: &mut TangleMachine, after: &str, new: String) {
    let pos = m.arcs.iter().position(|a| a == after).map_or(m.arcs.len(), |p| p + 1);
    m.arcs.insert(pos, new);
}

/// Moves the input-patient role of `from` to `to`.
fn hand_over_input(m: &mut TangleMachine, from: &str, to: &str) {
    if let Some((k, p)) = m.input_site(from) {
        m.interactions[k].pairs[p].0 = to.to_string();
    }
}

pub fn apply_move(m: &TangleMachine, site: &RewriteSite) -> Result<TangleMachine, RewriteError> {
    site.check_shape()?;
    let out = match site.kind {
        MoveKind::R1Insert => r1_insert(m, &site.arcs[0], site.weight)?,
        MoveKind::R1Delete => r1_delete(m, &site.interactions[0])?,
        MoveKind::R2Insert => r2_insert(m, &site.arcs[0], &site.arcs[1], site.weight)?,
        MoveKind::R2Delete => r2_delete(m, &site.interactions[0], &site.interactions[1])?,
        MoveKind::R3Slide => match site.direction.expect("shape checked") {
            SlideDirection::Right => r3_right(m, &site.interactions[0], &site.interactions[1])?,
            SlideDirection::Left => r3_left(m, &site.interactions[0], &site.interactions[1])?,
        },
    };
    let report = out.validate();
    if !report.is_empty() {
        return Err(RewriteError::Broken(report.to_string()));
    }
    Ok(out)
}

fn r1_insert(m: &TangleMachine, a: &str, weight: Option<f64>) -> Result<TangleMachine, RewriteError> {
    require_arc(m, a)?;
    require_free(m, a)?;
    let mut out = m.clone();
    let k = m.fresh_arc(&format!("{a}'"));
    hand_over_input(&mut out, a, &k);
    insert_arc_after(&mut out, a, k.clone());
    let mut kink = Interaction::new(m.fresh_interaction("r1"), k.clone(), &[(a, &k)]);
    kink.weight = insert_weight(m, weight);
    out.interactions.push(kink);
    Ok(out)
}

fn r1_delete(m: &TangleMachine, id: &str) -> Result<TangleMachine, RewriteError> {
    let idx = interaction_index(m, id)?;
    let kink = &m.interactions[idx];
    if !kink.is_kink() {
        return Err(mismatch(MoveKind::R1Delete, format!("{id} is not a kink")));
    }
    let (x, y) = kink.pairs[0].clone();
    require_free(m, &y)?;
    let mut out = m.clone();
    out.interactions.remove(idx);
    out.merge_arc(&y, &x);
    Ok(out)
}

fn r2_insert(m: &TangleMachine, a: &str, b: &str, weight: Option<f64>) -> Result<TangleMachine, RewriteError> {
    require_arc(m, a)?;
    require_arc(m, b)?;
    require_free(m, a)?;
    if a == b {
        return Err(mismatch(MoveKind::R2Insert, "patient and agent coincide"));
    }
    let mut out = m.clone();
    let mid = m.fresh_arc(&format!("{a}'"));
    out.arcs.push(mid.clone());
    let end = out.fresh_arc(&format!("{a}''"));
    out.arcs.pop();
    hand_over_input(&mut out, a, &end);
    insert_arc_after(&mut out, a, mid.clone());
    insert_arc_after(&mut out, &mid, end.clone());
    let w = insert_weight(m, weight);
    let first_id = m.fresh_interaction("r2");
    let mut first = Interaction::new(first_id.clone(), b, &[(a, &mid)]);
    first.weight = w;
    out.interactions.push(first);
    let mut second = Interaction::new(out.fresh_interaction("r2"), b, &[(&mid, &end)]).reversed();
    second.weight = w;
    out.interactions.push(second);
    Ok(out)
}

fn r2_delete(m: &TangleMachine, first: &str, second: &str) -> Result<TangleMachine, RewriteError> {
    let kind = MoveKind::R2Delete;
    let (i1, i2) = (interaction_index(m, first)?, interaction_index(m, second)?);
    let (a, b) = (&m.interactions[i1], &m.interactions[i2]);
    if i1 == i2 {
        return Err(mismatch(kind, "needs two interactions"));
    }
    if a.agent != b.agent {
        return Err(mismatch(kind, "agents differ"));
    }
    if a.weight != b.weight {
        return Err(mismatch(kind, "weights differ"));
    }
    if a.orientation == b.orientation {
        return Err(mismatch(kind, "orientations must be opposite"));
    }
    if a.pairs.len() != b.pairs.len() {
        return Err(mismatch(kind, "pair counts differ"));
    }
    let counts = m.patient_counts();
    let mut merges = Vec::new();
    for (x, mid) in &a.pairs {
        let (_, y) = b
            .pairs
            .iter()
            .find(|(u, _)| u == mid)
            .ok_or_else(|| mismatch(kind, format!("{mid} does not continue into {second}")))?;
        if counts[mid.as_str()].agent > 0 {
            return Err(mismatch(kind, format!("{mid} is an agent elsewhere")));
        }
        require_free(m, mid)?;
        require_free(m, y)?;
        merges.push((mid.clone(), y.clone(), x.clone()));
    }
    let mut out = m.clone();
    out.interactions.retain(|i| i.id != first && i.id != second);
    for (mid, y, x) in merges {
        out.arcs.retain(|c| *c != mid);
        if y != x {
            out.merge_arc(&y, &x);
        }
    }
    Ok(out)
}

struct Slide {
    moving: usize,
    crossing: usize,
    /// `(outer, inner, far)` per moving pair: right slides read
    /// `(input, output, crossing output)`, left slides read
    /// `(far input, input, output)`.
    chains: Vec<(String, String, String)>,
    /// The moving agent's pair in the crossing interaction.
    agent_pair: (String, String),
}

fn slide_site(m: &TangleMachine, moving: &str, crossing: &str, right: bool) -> Result<Slide, RewriteError> {
    let kind = MoveKind::R3Slide;
    let (im, ic) = (interaction_index(m, moving)?, interaction_index(m, crossing)?);
    if im == ic {
        return Err(mismatch(kind, "needs two interactions"));
    }
    let (a, b) = (&m.interactions[im], &m.interactions[ic]);
    if a.agent == b.agent {
        return Err(mismatch(kind, "agents coincide"));
    }
    if a.arcs().any(|x| *x == b.agent) {
        return Err(mismatch(kind, format!("{} touches {moving}", b.agent)));
    }
    let agent_pair = b
        .pairs
        .iter()
        .find(|(x, y)| if right { *x == a.agent } else { *y == a.agent })
        .cloned()
        .ok_or_else(|| mismatch(kind, format!("agent {} is not a patient of {crossing}", a.agent)))?;
    let counts = m.patient_counts();
    let mut chains = Vec::new();
    for (x, u) in &a.pairs {
        let inner = if right { u } else { x };
        let link = b
            .pairs
            .iter()
            .find(|(p, q)| if right { p == inner } else { q == inner })
            .ok_or_else(|| mismatch(kind, format!("{inner} does not meet {crossing}")))?;
        if counts[inner.as_str()].agent > 0 {
            return Err(mismatch(kind, format!("{inner} is an agent elsewhere")));
        }
        require_free(m, inner)?;
        chains.push(if right {
            (x.clone(), u.clone(), link.1.clone())
        } else {
            (link.0.clone(), x.clone(), u.clone())
        });
    }
    Ok(Slide {
        moving: im,
        crossing: ic,
        chains,
        agent_pair,
    })
}

fn replace_arc_slot(m: &mut TangleMachine, old: &str, new: String) {
    if let Some(slot) = m.arcs.iter_mut().find(|a| *a == old) {
        *slot = new;
    }
}

/// `(x ▷ a) ▷ b` becomes `(x ▷ b) ▷ (a ▷ b)`.
fn r3_right(m: &TangleMachine, moving: &str, crossing: &str) -> Result<TangleMachine, RewriteError> {
    let s = slide_site(m, moving, crossing, true)?;
    let mut out = m.clone();
    let mut fresh_names = Vec::new();
    for (_, u, _) in &s.chains {
        let mut probe = out.clone();
        probe.arcs.extend(fresh_names.iter().cloned());
        let fresh = probe.fresh_arc(&format!("{u}'"));
        replace_arc_slot(&mut out, u, fresh.clone());
        fresh_names.push(fresh);
    }
    let crossing_pairs: Vec<(String, String)> = m.interactions[s.crossing]
        .pairs
        .iter()
        .map(|(p, q)| match s.chains.iter().position(|(_, u, _)| u == p) {
            Some(k) => (s.chains[k].0.clone(), fresh_names[k].clone()),
            None => (p.clone(), q.clone()),
        })
        .collect();
    out.interactions[s.crossing].pairs = crossing_pairs;
    let moving_i = &mut out.interactions[s.moving];
    moving_i.agent = s.agent_pair.1.clone();
    moving_i.pairs = s
        .chains
        .iter()
        .zip(&fresh_names)
        .map(|((_, _, o), f)| (f.clone(), o.clone()))
        .collect();
    Ok(out)
}

/// `(x ▷ b) ▷ (a ▷ b)` becomes `(x ▷ a) ▷ b`.
fn r3_left(m: &TangleMachine, moving: &str, crossing: &str) -> Result<TangleMachine, RewriteError> {
    let s = slide_site(m, moving, crossing, false)?;
    let mut out = m.clone();
    let mut fresh_names = Vec::new();
    for (_, u, _) in &s.chains {
        let mut probe = out.clone();
        probe.arcs.extend(fresh_names.iter().cloned());
        let base = u.strip_suffix('\'').unwrap_or(u);
        let fresh = probe.fresh_arc(base);
        replace_arc_slot(&mut out, u, fresh.clone());
        fresh_names.push(fresh);
    }
    let crossing_pairs: Vec<(String, String)> = m.interactions[s.crossing]
        .pairs
        .iter()
        .map(|(p, q)| match s.chains.iter().position(|(_, u, _)| u == q) {
            Some(k) => (fresh_names[k].clone(), s.chains[k].2.clone()),
            None => (p.clone(), q.clone()),
        })
        .collect();
    out.interactions[s.crossing].pairs = crossing_pairs;
    let moving_i = &mut out.interactions[s.moving];
    moving_i.agent = s.agent_pair.0.clone();
    moving_i.pairs = s
        .chains
        .iter()
        .zip(&fresh_names)
        .map(|((x, _, _), f)| (x.clone(), f.clone()))
        .collect();
    Ok(out)
}

/// Every site at which a move applies, with the rewritten machine. Insert
/// moves are offered once per weight in `insert_weights`.
pub fn successors(m: &TangleMachine, insert_weights: &[Option<f64>]) -> Vec<(RewriteSite, TangleMachine)> {
    let mut sites = Vec::new();
    let ids: Vec<&str> = m.interactions.iter().map(|i| i.id.as_str()).collect();
    for id in &ids {
        sites.push(RewriteSite::r1_delete(id));
    }
    for a in &ids {
        for b in &ids {
            if a != b {
                sites.push(RewriteSite::r2_delete(a, b));
                sites.push(RewriteSite::r3_slide(a, b, SlideDirection::Right));
                sites.push(RewriteSite::r3_slide(a, b, SlideDirection::Left));
            }
        }
    }
    for &w in insert_weights {
        for a in &m.arcs {
            sites.push(RewriteSite::r1_insert(a, w));
            for b in &m.arcs {
                if a != b {
                    sites.push(RewriteSite::r2_insert(a, b, w));
                }
            }
        }
    }
    sites
        .into_iter()
        .filter_map(|s| apply_move(m, &s).ok().map(|out| (s, out)))
        .collect()
}

pub fn applicable_sites(m: &TangleMachine, insert_weights: &[Option<f64>]) -> Vec<RewriteSite> {
    successors(m, insert_weights).into_iter().map(|(s, _)| s).collect()
}

/// Insert weights to try on `m`: none for finite quandles, else the
/// weights already present (or the default).
pub fn insert_weights_for(machines: &[&TangleMachine]) -> Vec<Option<f64>> {
    let Some(first) = machines.first() else {
        return vec![None];
    };
    if first.quandle.is_finite() {
        return vec![None];
    }
    let mut ws: Vec<f64> = machines
        .iter()
        .flat_map(|m| m.interactions.iter().filter_map(|i| i.weight))
        .collect();
    ws.sort_by(f64::total_cmp);
    ws.dedup();
    if ws.is_empty() {
        ws.push(DEFAULT_INSERT_WEIGHT);
    }
    ws.into_iter().map(Some).collect()
}

/// The normal form used for keys: reverse interactions read forward with
/// their pairs swapped.
pub(crate) fn orientation_normalized(i: &Interaction) -> Vec<(String, String)> {
    match i.orientation {
        Orientation::Forward => i.pairs.clone(),
        Orientation::Reverse => i.pairs.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
    }
}
