//! Exact colouring enumeration over finite quandles by backtracking with
//! forced propagation.

use std::collections::HashMap;

use serde::Serialize;

use super::{Coloring, MachineError, Orientation, TangleMachine};
use crate::quandle::{Element, Quandle, QuandleOps};

pub const DEFAULT_MAX_CARRIER: usize = 16;
pub const DEFAULT_MAX_ARCS: usize = 24;
/// Colourings are listed only when there are at most this many.
pub const LIST_CAP: u128 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumLimits {
    pub max_carrier: usize,
    pub max_arcs: usize,
}

impl Default for EnumLimits {
    fn default() -> Self {
        Self {
            max_carrier: DEFAULT_MAX_CARRIER,
            max_arcs: DEFAULT_MAX_ARCS,
        }
    }
}

impl EnumLimits {
    /// Parses `N` (carrier cap) or `N,M` (carrier and arc caps).
    pub fn parse_override(text: &str) -> Option<Self> {
        let mut limits = Self::default();
        let mut parts = text.split(',').map(|p| p.trim().parse::<usize>());
        limits.max_carrier = parts.next()?.ok()?;
        if let Some(arcs) = parts.next() {
            limits.max_arcs = arcs.ok()?;
        }
        parts.next().is_none().then_some(limits)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColoringCount {
    pub count: u128,
    /// Present when `count <= LIST_CAP`.
    pub colorings: Option<Vec<Coloring>>,
}

/// `out = table[in][agent]` and `in = inverse[out][agent]`.
struct Constraint {
    agent: usize,
    input: usize,
    output: usize,
    forward: usize,
    backward: usize,
}

struct Problem {
    k: usize,
    tables: Vec<Vec<usize>>,
    constraints: Vec<Constraint>,
    by_arc: Vec<Vec<usize>>,
}

const UNSET: usize = usize::MAX;

impl Problem {
    fn new(m: &TangleMachine, q: &Quandle, elements: &[Element]) -> Result<Self, MachineError> {
        let k = elements.len();
        let index: HashMap<String, usize> = elements.iter().enumerate().map(|(i, e)| (e.to_string(), i)).collect();
        let lookup = |e: Element| index[&e.to_string()];
        // Weights are irrelevant for finite carriers, so one table pair suffices.
        let mut apply = Vec::with_capacity(k * k);
        let mut unapply = Vec::with_capacity(k * k);
        for x in elements {
            for y in elements {
                apply.push(lookup(q.apply(x, y, None)?));
                unapply.push(lookup(q.unapply(x, y, None)?));
            }
        }
        let arc_index: HashMap<&str, usize> = m.arcs.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
        let idx = |a: &str| arc_index.get(a).copied().ok_or_else(|| MachineError::UnknownArc(a.to_string()));
        let mut constraints = Vec::new();
        let mut by_arc = vec![Vec::new(); m.arcs.len()];
        for i in &m.interactions {
            let (forward, backward) = match i.orientation {
                Orientation::Forward => (0, 1),
                Orientation::Reverse => (1, 0),
            };
            for (a, b) in &i.pairs {
                let c = Constraint {
                    agent: idx(&i.agent)?,
                    input: idx(a)?,
                    output: idx(b)?,
                    forward,
                    backward,
                };
                for arc in [c.agent, c.input, c.output] {
                    if !by_arc[arc].contains(&constraints.len()) {
                        by_arc[arc].push(constraints.len());
                    }
                }
                constraints.push(c);
            }
        }
        Ok(Self {
            k,
            tables: vec![apply, unapply],
            constraints,
            by_arc,
        })
    }

    fn table(&self, which: usize, x: usize, y: usize) -> usize {
        self.tables[which][x * self.k + y]
    }

    /// Assigns and propagates; returns false on conflict. Every assignment
    /// is pushed on `trail`.
    fn assign(&self, values: &mut [usize], trail: &mut Vec<usize>, arc: usize, v: usize) -> bool {
        let mut queue = vec![(arc, v)];
        while let Some((arc, v)) = queue.pop() {
            if values[arc] != UNSET {
                if values[arc] != v {
                    return false;
                }
                continue;
            }
            values[arc] = v;
            trail.push(arc);
            for &ci in &self.by_arc[arc] {
                let c = &self.constraints[ci];
                let (g, x, y) = (values[c.agent], values[c.input], values[c.output]);
                if g == UNSET {
                    continue;
                }
                match (x != UNSET, y != UNSET) {
                    (true, true) => {
                        if self.table(c.forward, x, g) != y {
                            return false;
                        }
                    }
                    (true, false) => queue.push((c.output, self.table(c.forward, x, g))),
                    (false, true) => queue.push((c.input, self.table(c.backward, y, g))),
                    (false, false) => {}
                }
            }
        }
        true
    }

    fn search(&self, values: &mut Vec<usize>, next: usize, visit: &mut dyn FnMut(&[usize])) {
        let Some(arc) = (next..values.len()).find(|&a| values[a] == UNSET) else {
            visit(values);
            return;
        };
        for v in 0..self.k {
            let mut trail = Vec::new();
            if self.assign(values, &mut trail, arc, v) {
                self.search(values, arc + 1, visit);
            }
            for a in trail {
                values[a] = UNSET;
            }
        }
    }

    /// Whether some arc's colour is the only one consistent with the rest.
    fn is_confusable(&self, values: &[usize]) -> bool {
        (0..values.len()).any(|arc| {
            (0..self.k).filter(|&v| v != values[arc]).all(|v| {
                let mut trial = values.to_vec();
                trial[arc] = v;
                self.by_arc[arc].iter().any(|&ci| {
                    let c = &self.constraints[ci];
                    self.table(c.forward, trial[c.input], trial[c.agent]) != trial[c.output]
                })
            })
        })
    }
}

fn carrier(m: &TangleMachine, q: &Quandle, limits: &EnumLimits) -> Result<Vec<Element>, MachineError> {
    if !q.is_finite() {
        return Err(MachineError::NotFinite(q.kind().to_string()));
    }
    let size = q.kind().carrier_size().unwrap_or(usize::MAX);
    if size > limits.max_carrier {
        return Err(MachineError::TooLarge {
            what: "carrier",
            size,
            cap: limits.max_carrier,
        });
    }
    if m.arcs.len() > limits.max_arcs {
        return Err(MachineError::TooLarge {
            what: "machine",
            size: m.arcs.len(),
            cap: limits.max_arcs,
        });
    }
    Ok(q.elements().expect("finite carrier within caps"))
}

/// Calls `visit` with each valid colouring of `m` over `q`, as element
/// indices into `q.elements()` in arc declaration order.
pub fn for_each_coloring(
    m: &TangleMachine,
    q: &Quandle,
    limits: &EnumLimits,
    confusable_only: bool,
    visit: &mut dyn FnMut(&[usize]),
) -> Result<(), MachineError> {
    m.ensure_valid_structure()?;
    let elements = carrier(m, q, limits)?;
    let problem = Problem::new(m, q, &elements)?;
    let mut values = vec![UNSET; m.arcs.len()];
    let mut filtered = |vals: &[usize]| {
        if !confusable_only || problem.is_confusable(vals) {
            visit(vals);
        }
    };
    problem.search(&mut values, 0, &mut filtered);
    Ok(())
}

/// Counts valid colourings of `m` over the finite quandle `q`.
pub fn enumerate_colorings(m: &TangleMachine, q: &Quandle, limits: &EnumLimits, confusable_only: bool) -> Result<ColoringCount, MachineError> {
    let elements = carrier(m, q, limits)?;
    let mut count: u128 = 0;
    let mut list = Some(Vec::new());
    for_each_coloring(m, q, limits, confusable_only, &mut |vals| {
        count += 1;
        if count > LIST_CAP {
            list = None;
        }
        if let Some(list) = list.as_mut() {
            list.push(m.arcs.iter().cloned().zip(vals.iter().map(|&v| elements[v].clone())).collect());
        }
    })?;
    Ok(ColoringCount { count, colorings: list })
}

impl TangleMachine {
    /// Structural checks needed by enumeration: declared arcs, no duplicate
    /// ids. Weights and registers do not matter for finite counts.
    pub(crate) fn ensure_valid_structure(&self) -> Result<(), MachineError> {
        let report = self.validate();
        let relevant: Vec<_> = report
            .violations
            .iter()
            .filter(|v| v.message.starts_with("undeclared arc") || v.message.contains("twice"))
            .collect();
        match relevant.first() {
            Some(v) => Err(MachineError::Invalid(format!("{}: {}", v.subject, v.message))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{check_coloring, figure_eight, trefoil, unknot};

    fn d(n: usize) -> Quandle {
        Quandle::dihedral(n).unwrap()
    }

    fn count(m: &TangleMachine, q: &Quandle) -> u128 {
        enumerate_colorings(m, q, &EnumLimits::default(), false).unwrap().count
    }

    #[test]
    fn knot_counts() {
        assert_eq!(count(&trefoil(d(3)), &d(3)), 9);
        assert_eq!(count(&trefoil(d(3)), &d(5)), 5);
        assert_eq!(count(&figure_eight(d(3)), &d(3)), 3);
        assert_eq!(count(&figure_eight(d(3)), &d(5)), 25);
        for k in 2..=7 {
            assert_eq!(count(&unknot(d(3)), &d(k)), k as u128);
        }
    }

    #[test]
    fn listed_colorings_are_valid() {
        let m = trefoil(d(3));
        let result = enumerate_colorings(&m, &d(3), &EnumLimits::default(), false).unwrap();
        let list = result.colorings.unwrap();
        assert_eq!(list.len(), 9);
        for c in &list {
            assert!(check_coloring(&m, c, 0.0).unwrap());
        }
    }

    #[test]
    fn caps_are_enforced() {
        let m = trefoil(d(3));
        assert!(matches!(
            enumerate_colorings(&m, &d(17), &EnumLimits::default(), false),
            Err(MachineError::TooLarge { what: "carrier", .. })
        ));
        let tight = EnumLimits { max_carrier: 16, max_arcs: 2 };
        assert!(enumerate_colorings(&m, &d(3), &tight, false).is_err());
        assert_eq!(EnumLimits::parse_override("20"), Some(EnumLimits { max_carrier: 20, max_arcs: 24 }));
        assert_eq!(EnumLimits::parse_override("8,30"), Some(EnumLimits { max_carrier: 8, max_arcs: 30 }));
        assert_eq!(EnumLimits::parse_override("x"), None);
    }

    #[test]
    fn confusable_filter() {
        // every trefoil colouring determines each arc from the other two
        let q = d(3);
        assert_eq!(enumerate_colorings(&trefoil(q), &q, &EnumLimits::default(), true).unwrap().count, 9);
        // a lone arc is never determined
        assert_eq!(enumerate_colorings(&unknot(q), &q, &EnumLimits::default(), true).unwrap().count, 0);
    }
}
