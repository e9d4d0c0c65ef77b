//! Colouring-count capacity and connect-sum complexity.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::machine::{check_coloring, enumerate_colorings, Coloring, EnumLimits, MachineError, TangleMachine};
use crate::quandle::{Element, Quandle};

pub const MAX_K: usize = 16;
/// Machines with at most this many interactions get an exhaustive
/// partition search in [`complexity`].
pub const EXHAUSTIVE_INTERACTIONS: usize = 10;
const COLOUR_TOL: f64 = 1e-9;

/// Number of valid colourings of `m` by dihedral(k).
pub fn cap_k(m: &TangleMachine, k: usize, limits: &EnumLimits, confusable_only: bool) -> Result<u128, MachineError> {
    if !(2..=MAX_K).contains(&k) {
        return Err(MachineError::Invalid(format!("k = {k} outside 2..={MAX_K}")));
    }
    let q = Quandle::dihedral(k)?;
    Ok(enumerate_colorings(m, &q, limits, confusable_only)?.count)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    pub family: &'static str,
    pub cap: BTreeMap<usize, u128>,
    /// Max of `Cap_k^(1/k)` over the computed `k`, a lower bound for the
    /// supremum.
    pub capacity: f64,
    pub argmax: usize,
    pub confusable_only: bool,
}

pub fn capacity(m: &TangleMachine, kmax: usize, limits: &EnumLimits, confusable_only: bool) -> Result<CapacityReport, MachineError> {
    if !(2..=MAX_K).contains(&kmax) {
        return Err(MachineError::Invalid(format!("kmax = {kmax} outside 2..={MAX_K}")));
    }
    let counts = (2..=kmax)
        .into_par_iter()
        .map(|k| cap_k(m, k, limits, confusable_only).map(|c| (k, c)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut best = (f64::NEG_INFINITY, 2);
    for &(k, c) in &counts {
        let root = (c as f64).powf(1.0 / k as f64);
        if root > best.0 {
            best = (root, k);
        }
    }
    Ok(CapacityReport {
        family: "dihedral",
        cap: counts.into_iter().collect(),
        capacity: best.0,
        argmax: best.1,
        confusable_only,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub complexity: usize,
    /// Interaction ids per block of the best decomposition found.
    pub blocks: Vec<Vec<String>>,
    pub exhaustive: bool,
}

struct Blocks<'a> {
    m: &'a TangleMachine,
    c: &'a Coloring,
    arcs: Vec<BTreeSet<&'a str>>,
}

impl<'a> Blocks<'a> {
    fn new(m: &'a TangleMachine, c: &'a Coloring) -> Self {
        let arcs = m.interactions.iter().map(|i| i.arcs().map(|a| a.as_str()).collect()).collect();
        Self { m, c, arcs }
    }

    /// Boundary arcs of each block: arcs it shares with another block.
    fn boundaries(&self, assignment: &[usize], blocks: usize) -> Vec<BTreeSet<&'a str>> {
        let mut touching: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
        for (k, &b) in assignment.iter().enumerate() {
            for a in &self.arcs[k] {
                touching.entry(a).or_default().insert(b);
            }
        }
        let mut out = vec![BTreeSet::new(); blocks];
        for (a, bs) in touching {
            if bs.len() > 1 {
                for b in bs {
                    out[b].insert(a);
                }
            }
        }
        out
    }

    fn monochromatic(&self, arcs: &BTreeSet<&str>) -> bool {
        let mut colours = arcs.iter().map(|a| &self.c[*a]);
        match colours.next() {
            None => true,
            Some(first) => colours.all(|e: &Element| e.approx_eq(first, COLOUR_TOL)),
        }
    }

    fn valid(&self, assignment: &[usize], blocks: usize) -> bool {
        self.boundaries(assignment, blocks).iter().all(|b| self.monochromatic(b))
    }

    fn report(&self, assignment: &[usize], blocks: usize, exhaustive: bool) -> ComplexityReport {
        let mut groups = vec![Vec::new(); blocks];
        for (k, &b) in assignment.iter().enumerate() {
            groups[b].push(self.m.interactions[k].id.clone());
        }
        groups.retain(|g| !g.is_empty());
        ComplexityReport {
            complexity: groups.len(),
            blocks: groups,
            exhaustive,
        }
    }

    /// All set partitions as restricted growth strings.
    fn exhaustive(&self) -> ComplexityReport {
        let n = self.arcs.len();
        let mut best = (vec![0; n], 1);
        let mut current = vec![0usize; n];
        fn walk(s: &Blocks, k: usize, used: usize, current: &mut Vec<usize>, best: &mut (Vec<usize>, usize)) {
            if k == current.len() {
                if used > best.1 && s.valid(current, used) {
                    *best = (current.clone(), used);
                }
                return;
            }
            for b in 0..=used {
                current[k] = b;
                walk(s, k + 1, used.max(b + 1), current, best);
            }
        }
        if n > 0 {
            current[0] = 0;
            walk(self, 1, 1, &mut current, &mut best);
        }
        self.report(&best.0, best.1, true)
    }

    /// Starts from singletons and merges across offending boundary arcs.
    fn greedy(&self) -> ComplexityReport {
        let n = self.arcs.len();
        let mut assignment: Vec<usize> = (0..n).collect();
        loop {
            let boundaries = self.boundaries(&assignment, n);
            let Some(bad) = (0..n).find(|&b| !self.monochromatic(&boundaries[b])) else {
                break;
            };
            let arcs: Vec<&str> = boundaries[bad].iter().copied().collect();
            let first = &self.c[arcs[0]];
            let offending = arcs
                .iter()
                .find(|a| !self.c[**a].approx_eq(first, COLOUR_TOL))
                .expect("boundary is not monochromatic");
            let other = (0..n)
                .find(|&k| assignment[k] != bad && self.arcs[k].contains(offending))
                .map(|k| assignment[k])
                .expect("boundary arcs touch another block");
            for b in &mut assignment {
                if *b == other {
                    *b = bad;
                }
            }
        }
        let mut relabel = BTreeMap::new();
        for b in &mut assignment {
            let next = relabel.len();
            *b = *relabel.entry(*b).or_insert(next);
        }
        self.report(&assignment, relabel.len(), false)
    }
}

/// Largest number of blocks in a decomposition of the interactions whose
/// shared arcs are monochromatic on each block's boundary.
pub fn complexity(m: &TangleMachine, c: &Coloring) -> Result<ComplexityReport, MachineError> {
    if !check_coloring(m, c, COLOUR_TOL)? {
        return Err(MachineError::Invalid("colouring does not satisfy the interaction equations".into()));
    }
    let blocks = Blocks::new(m, c);
    if m.interactions.is_empty() {
        return Ok(ComplexityReport {
            complexity: 0,
            blocks: Vec::new(),
            exhaustive: true,
        });
    }
    if m.interactions.len() <= EXHAUSTIVE_INTERACTIONS {
        Ok(blocks.exhaustive())
    } else {
        Ok(blocks.greedy())
    }
}
