//! Tangle machines: registers (arcs) and interactions in which an agent arc
//! acts on ordered pairs of patient arcs.

mod catalog;
mod compose;
mod enumerate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quandle::{Element, Quandle, QuandleError, QuandleOps};

pub use catalog::{figure_eight, fusion_chain, r3_left, square_a, square_b, trefoil, unknot};
pub use compose::connect_sum;
pub use enumerate::{
    enumerate_colorings, for_each_coloring, ColoringCount, EnumLimits, DEFAULT_MAX_ARCS,
    DEFAULT_MAX_CARRIER, LIST_CAP,
};

/// Absolute tolerance for conflicts on continuous carriers.
pub const PROPAGATION_TOL: f64 = 1e-9;

pub type Coloring = BTreeMap<String, Element>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MachineError {
    #[error("unknown arc {0:?}")]
    UnknownArc(String),
    #[error("unknown interaction {0:?}")]
    UnknownInteraction(String),
    #[error("no colour for arc {0:?}")]
    MissingColour(String),
    #[error("underdetermined: no interaction reaches {}", .0.join(", "))]
    Underdetermined(Vec<String>),
    #[error("inconsistent: arc {arc:?} gets conflicting colours at interaction {interaction:?}")]
    Inconsistent { arc: String, interaction: String },
    #[error("cyclic: unknown arcs {} depend on each other", .0.join(", "))]
    Cyclic(Vec<String>),
    #[error("{0} is not a finite quandle")]
    NotFinite(String),
    #[error("{what} of size {size} exceeds the enumeration cap {cap}")]
    TooLarge { what: &'static str, size: usize, cap: usize },
    #[error("patient linearity: {0}")]
    Linearity(String),
    #[error("invalid machine: {0}")]
    Invalid(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Quandle(#[from] QuandleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Orientation {
    #[serde(rename = "fwd")]
    Forward,
    /// The patient equation reads through the inverse operation.
    #[serde(rename = "rev")]
    Reverse,
}

impl Orientation {
    pub fn flipped(self) -> Self {
        match self {
            Orientation::Forward => Orientation::Reverse,
            Orientation::Reverse => Orientation::Forward,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Forward => "fwd",
            Orientation::Reverse => "rev",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interaction {
    pub id: String,
    pub agent: String,
    /// Ordered `(input, output)` patient pairs.
    pub pairs: Vec<(String, String)>,
    pub weight: Option<f64>,
    pub frame: Option<usize>,
    pub orientation: Orientation,
}

impl Interaction {
    pub fn new(id: impl Into<String>, agent: impl Into<String>, pairs: &[(&str, &str)]) -> Self {
        Self {
            id: id.into(),
            agent: agent.into(),
            pairs: pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            weight: None,
            frame: None,
            orientation: Orientation::Forward,
        }
    }

    pub fn with_weight(mut self, w: f64) -> Self {
        self.weight = Some(w);
        self
    }

    pub fn reversed(mut self) -> Self {
        self.orientation = self.orientation.flipped();
        self
    }

    /// A single-pair self-interaction whose agent is one of its own patients.
    pub fn is_kink(&self) -> bool {
        self.pairs.len() == 1 && (self.agent == self.pairs[0].0 || self.agent == self.pairs[0].1)
    }

    pub fn arcs(&self) -> impl Iterator<Item = &String> {
        std::iter::once(&self.agent).chain(self.pairs.iter().flat_map(|(a, b)| [a, b]))
    }

    /// Output colour of a pair from its input colour.
    pub fn forward(&self, q: &Quandle, input: &Element, agent: &Element) -> Result<Element, QuandleError> {
        match self.orientation {
            Orientation::Forward => q.apply(input, agent, self.weight),
            Orientation::Reverse => q.unapply(input, agent, self.weight),
        }
    }

    /// Input colour of a pair from its output colour.
    pub fn backward(&self, q: &Quandle, output: &Element, agent: &Element) -> Result<Element, QuandleError> {
        match self.orientation {
            Orientation::Forward => q.unapply(output, agent, self.weight),
            Orientation::Reverse => q.apply(output, agent, self.weight),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangleMachine {
    pub name: String,
    pub quandle: Quandle,
    /// Arc ids in declaration order.
    pub arcs: Vec<String>,
    pub interactions: Vec<Interaction>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// The arc, interaction or register the violation is about.
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, subject: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            subject: subject.to_string(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| format!("{}: {}", v.subject, v.message)).collect();
        f.write_str(&parts.join("; "))
    }
}

/// How often an arc occurs as an input and as an output patient.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PatientCounts {
    pub input: usize,
    pub output: usize,
    pub agent: usize,
}

impl TangleMachine {
    pub fn new(name: impl Into<String>, quandle: Quandle) -> Self {
        Self {
            name: name.into(),
            quandle,
            arcs: Vec::new(),
            interactions: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn with_arcs(mut self, arcs: &[&str]) -> Self {
        self.arcs.extend(arcs.iter().map(|a| a.to_string()));
        self
    }

    pub fn with_interaction(mut self, i: Interaction) -> Self {
        self.interactions.push(i);
        self
    }

    pub fn with_registers(mut self, inputs: &[&str], outputs: &[&str]) -> Self {
        self.inputs = inputs.iter().map(|a| a.to_string()).collect();
        self.outputs = outputs.iter().map(|a| a.to_string()).collect();
        self
    }

    /// The same machine over another quandle.
    pub fn rebound(&self, quandle: Quandle) -> Self {
        Self {
            quandle,
            ..self.clone()
        }
    }

    pub fn has_arc(&self, a: &str) -> bool {
        self.arcs.iter().any(|x| x == a)
    }

    pub fn interaction(&self, id: &str) -> Result<&Interaction, MachineError> {
        self.interactions
            .iter()
            .find(|i| i.id == id)
            .ok_or_else(|| MachineError::UnknownInteraction(id.to_string()))
    }

    pub fn is_register(&self, a: &str) -> bool {
        self.inputs.iter().chain(&self.outputs).any(|x| x == a)
    }

    pub fn patient_counts(&self) -> BTreeMap<&str, PatientCounts> {
        let mut counts: BTreeMap<&str, PatientCounts> = self.arcs.iter().map(|a| (a.as_str(), PatientCounts::default())).collect();
        for i in &self.interactions {
            counts.entry(i.agent.as_str()).or_default().agent += 1;
            for (a, b) in &i.pairs {
                counts.entry(a.as_str()).or_default().input += 1;
                counts.entry(b.as_str()).or_default().output += 1;
            }
        }
        counts
    }

    pub fn counts_of(&self, arc: &str) -> PatientCounts {
        self.patient_counts().get(arc).copied().unwrap_or_default()
    }

    /// The pair, by interaction index and pair index, with `arc` as input.
    pub fn input_site(&self, arc: &str) -> Option<(usize, usize)> {
        self.pair_site(arc, true)
    }

    /// The pair with `arc` as output.
    pub fn output_site(&self, arc: &str) -> Option<(usize, usize)> {
        self.pair_site(arc, false)
    }

    fn pair_site(&self, arc: &str, input: bool) -> Option<(usize, usize)> {
        self.interactions.iter().enumerate().find_map(|(k, i)| {
            i.pairs
                .iter()
                .position(|(a, b)| if input { a == arc } else { b == arc })
                .map(|p| (k, p))
        })
    }

    /// Whether following patient pairs forward from `arc` returns to it.
    pub fn on_closed_strand(&self, arc: &str) -> bool {
        let mut current = arc.to_string();
        for _ in 0..=self.arcs.len() {
            let Some((k, p)) = self.input_site(&current) else {
                return false;
            };
            current = self.interactions[k].pairs[p].1.clone();
            if current == arc {
                return true;
            }
        }
        false
    }

    /// Replaces every occurrence of arc `from` by `to` and drops `from`
    /// from the arc list.
    pub(crate) fn merge_arc(&mut self, from: &str, to: &str) {
        let sub = |a: &mut String| {
            if a == from {
                *a = to.to_string();
            }
        };
        for i in &mut self.interactions {
            sub(&mut i.agent);
            for (a, b) in &mut i.pairs {
                sub(a);
                sub(b);
            }
        }
        for r in self.inputs.iter_mut().chain(self.outputs.iter_mut()) {
            sub(r);
        }
        self.arcs.retain(|a| a != from);
        dedup_keep_order(&mut self.inputs);
        dedup_keep_order(&mut self.outputs);
    }

    /// A fresh arc id derived from `base`.
    pub fn fresh_arc(&self, base: &str) -> String {
        fresh(base, |c| self.has_arc(c))
    }

    pub fn fresh_interaction(&self, base: &str) -> String {
        fresh(base, |c| self.interactions.iter().any(|i| i.id == c))
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut declared = BTreeSet::new();
        for a in &self.arcs {
            if !declared.insert(a.as_str()) {
                report.push(a, "arc declared twice");
            }
        }
        let mut ids = BTreeSet::new();
        for i in &self.interactions {
            if !ids.insert(i.id.as_str()) {
                report.push(&i.id, "interaction id used twice");
            }
            for a in i.arcs().collect::<BTreeSet<_>>() {
                if !declared.contains(a.as_str()) {
                    report.push(a, format!("undeclared arc in interaction {}", i.id));
                }
            }
            if i.pairs.is_empty() {
                report.push(&i.id, "interaction has no patient pairs");
            }
            for (a, b) in &i.pairs {
                if a == b {
                    report.push(&i.id, format!("pair {a}->{b} has equal input and output"));
                }
            }
            if !i.is_kink() && i.pairs.iter().any(|(a, b)| *a == i.agent || *b == i.agent) {
                report.push(&i.id, format!("agent {} is also a patient", i.agent));
            }
            if self.quandle.is_finite() {
                continue;
            }
            match i.weight {
                None => report.push(&i.id, format!("{} needs a weight", self.quandle.kind())),
                Some(w) if !self.quandle.weight_in_domain(w) => report.push(&i.id, format!("weight {w} outside (0,1)")),
                _ => {}
            }
        }
        for (arc, c) in self.patient_counts() {
            if c.input > 1 {
                report.push(arc, format!("input patient of {} interactions", c.input));
            }
            if c.output > 1 {
                report.push(arc, format!("output patient of {} interactions", c.output));
            }
        }
        let counts = self.patient_counts();
        for r in &self.inputs {
            if !declared.contains(r.as_str()) {
                report.push(r, "undeclared input register");
            } else if counts[r.as_str()].output > 0 {
                report.push(r, "input register is an output patient");
            }
        }
        for r in &self.outputs {
            if !declared.contains(r.as_str()) {
                report.push(r, "undeclared output register");
            } else if counts[r.as_str()].input > 0 {
                report.push(r, "output register is an input patient");
            }
        }
        report
    }

    pub fn ensure_valid(&self) -> Result<(), MachineError> {
        let report = self.validate();
        if report.is_empty() {
            Ok(())
        } else {
            Err(MachineError::Invalid(report.to_string()))
        }
    }
}

pub(crate) fn fresh(base: &str, taken: impl Fn(&str) -> bool) -> String {
    if !taken(base) {
        return base.to_string();
    }
    (1..)
        .map(|n| format!("{base}.{n}"))
        .find(|c| !taken(c))
        .expect("unbounded candidates")
}

fn dedup_keep_order(v: &mut Vec<String>) {
    let mut seen = BTreeSet::new();
    v.retain(|x| seen.insert(x.clone()));
}

fn colour<'a>(c: &'a Coloring, arc: &str) -> Result<&'a Element, MachineError> {
    c.get(arc).ok_or_else(|| MachineError::MissingColour(arc.to_string()))
}

/// Whether every interaction equation holds: exactly for finite carriers,
/// within relative tolerance `tol` otherwise.
pub fn check_coloring(m: &TangleMachine, c: &Coloring, tol: f64) -> Result<bool, MachineError> {
    for a in &m.arcs {
        colour(c, a)?;
    }
    for i in &m.interactions {
        let agent = colour(c, &i.agent)?;
        for (a, b) in &i.pairs {
            let expected = i.forward(&m.quandle, colour(c, a)?, agent)?;
            if !expected.approx_eq(colour(c, b)?, tol) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Extends a partial colouring through the interaction equations.
pub fn propagate(m: &TangleMachine, partial: &Coloring) -> Result<Coloring, MachineError> {
    for a in partial.keys() {
        if !m.has_arc(a) {
            return Err(MachineError::UnknownArc(a.clone()));
        }
    }
    let mut c = partial.clone();
    let q = &m.quandle;
    let mut changed = true;
    while changed {
        changed = false;
        for i in &m.interactions {
            for (a, b) in &i.pairs {
                let (ca, cb, cg) = (c.get(a).cloned(), c.get(b).cloned(), c.get(&i.agent).cloned());
                // A kink forces its two patients to agree.
                let derived = if i.is_kink() {
                    match (&ca, &cb) {
                        (Some(x), None) => Some((b, x.clone())),
                        (None, Some(y)) => Some((a, y.clone())),
                        _ => None,
                    }
                } else {
                    match (&ca, &cb, &cg) {
                        (Some(x), None, Some(g)) => Some((b, i.forward(q, x, g)?)),
                        (None, Some(y), Some(g)) => Some((a, i.backward(q, y, g)?)),
                        _ => None,
                    }
                };
                if let Some((arc, value)) = derived {
                    c.insert(arc.clone(), value);
                    changed = true;
                } else if let (Some(x), Some(y), Some(g)) = (&ca, &cb, &cg) {
                    let expected = i.forward(q, x, g)?;
                    let conflict = if q.is_finite() {
                        expected != *y
                    } else {
                        !(expected.distance(y) <= PROPAGATION_TOL)
                    };
                    if conflict {
                        return Err(MachineError::Inconsistent {
                            arc: b.clone(),
                            interaction: i.id.clone(),
                        });
                    }
                }
            }
        }
    }
    let unknown: Vec<String> = m.arcs.iter().filter(|a| !c.contains_key(*a)).cloned().collect();
    if unknown.is_empty() {
        return Ok(c);
    }
    match dependency_cycle(m, &unknown) {
        Some(cycle) => Err(MachineError::Cyclic(cycle)),
        None => Err(MachineError::Underdetermined(unknown)),
    }
}

/// Unknown arcs on a cycle of the input-to-output and agent-to-output
/// dependency graph, if one exists.
fn dependency_cycle(m: &TangleMachine, unknown: &[String]) -> Option<Vec<String>> {
    let set: BTreeSet<&str> = unknown.iter().map(|s| s.as_str()).collect();
    let mut edges: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for i in &m.interactions {
        for (a, b) in &i.pairs {
            for src in [a.as_str(), i.agent.as_str()] {
                if src != b && set.contains(src) && set.contains(b.as_str()) {
                    edges.entry(src).or_default().insert(b.as_str());
                }
            }
        }
    }
    // Kahn's algorithm: whatever cannot be peeled off lies on or behind a cycle.
    let mut indegree: BTreeMap<&str, usize> = set.iter().map(|a| (*a, 0)).collect();
    for targets in edges.values() {
        for t in targets {
            *indegree.get_mut(t).unwrap() += 1;
        }
    }
    let mut queue: Vec<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(a, _)| *a).collect();
    while let Some(a) = queue.pop() {
        indegree.remove(a);
        for t in edges.get(a).into_iter().flatten() {
            if let Some(d) = indegree.get_mut(t) {
                *d -= 1;
                if *d == 0 {
                    queue.push(t);
                }
            }
        }
    }
    if indegree.is_empty() {
        None
    } else {
        Some(indegree.keys().map(|a| a.to_string()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quandle::QuandleKind;
    use nalgebra::DVector;

    fn d3() -> Quandle {
        Quandle::dihedral(3).unwrap()
    }

    fn single() -> TangleMachine {
        TangleMachine::new("single", d3())
            .with_arcs(&["a", "b", "c"])
            .with_interaction(Interaction::new("i", "b", &[("a", "c")]))
            .with_registers(&["a", "b"], &["c"])
    }

    #[test]
    fn minimal_machine_is_valid() {
        assert!(single().validate().is_empty());
    }

    #[test]
    fn double_input_patient_is_one_violation() {
        let m = single()
            .with_arcs(&["d"])
            .with_interaction(Interaction::new("j", "b", &[("a", "d")]))
            .with_registers(&[], &[]);
        let report = m.validate();
        assert_eq!(report.violations.len(), 1, "{report}");
        assert_eq!(report.violations[0].subject, "a");
    }

    #[test]
    fn weight_out_of_domain_names_interaction() {
        let q = Quandle::new(QuandleKind::Linear(1)).unwrap();
        let m = TangleMachine::new("w", q)
            .with_arcs(&["a", "b", "c"])
            .with_interaction(Interaction::new("i", "b", &[("a", "c")]).with_weight(1.5));
        let report = m.validate();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].subject, "i");
    }

    #[test]
    fn propagate_single_interaction() {
        let partial = Coloring::from([("a".into(), Element::Residue(0)), ("b".into(), Element::Residue(1))]);
        let c = propagate(&single(), &partial).unwrap();
        assert_eq!(c["c"], Element::Residue(2));
        let back = propagate(&single(), &Coloring::from([("c".into(), Element::Residue(2)), ("b".into(), Element::Residue(1))])).unwrap();
        assert_eq!(back["a"], Element::Residue(0));
    }

    #[test]
    fn propagate_errors() {
        let partial = Coloring::from([("a".into(), Element::Residue(0))]);
        assert!(matches!(propagate(&single(), &partial), Err(MachineError::Underdetermined(_))));
        let bad = Coloring::from([
            ("a".into(), Element::Residue(0)),
            ("b".into(), Element::Residue(1)),
            ("c".into(), Element::Residue(1)),
        ]);
        assert!(matches!(propagate(&single(), &bad), Err(MachineError::Inconsistent { .. })));
        let closed = Coloring::from([("a0".into(), Element::Residue(0))]);
        let r = propagate(&trefoil(d3()), &closed);
        assert!(matches!(r, Err(MachineError::Cyclic(_))), "{r:?}");
    }

    #[test]
    fn reverse_orientation_uses_inverse() {
        let q = Quandle::new(QuandleKind::Linear(1)).unwrap();
        let m = TangleMachine::new("r", q)
            .with_arcs(&["a", "b", "c"])
            .with_interaction(Interaction::new("i", "b", &[("a", "c")]).with_weight(0.5).reversed());
        let v = |x: f64| Element::Vector(DVector::from_element(1, x));
        let c = propagate(&m, &Coloring::from([("a".into(), v(1.0)), ("b".into(), v(2.0))])).unwrap();
        assert_eq!(c["c"], v(0.0));
        assert!(check_coloring(&m, &c, 1e-12).unwrap());
    }

    #[test]
    fn kinks_force_equal_patients() {
        let m = TangleMachine::new("kink", d3())
            .with_arcs(&["x", "k"])
            .with_interaction(Interaction::new("r", "k", &[("x", "k")]));
        assert!(m.validate().is_empty());
        let c = propagate(&m, &Coloring::from([("x".into(), Element::Residue(2))])).unwrap();
        assert_eq!(c["k"], Element::Residue(2));
    }

    #[test]
    fn missing_colour_is_an_error() {
        assert!(matches!(check_coloring(&single(), &Coloring::new(), 0.0), Err(MachineError::MissingColour(_))));
    }
}
