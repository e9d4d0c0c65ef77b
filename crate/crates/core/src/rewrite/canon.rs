//! Relabeling-invariant machine keys by colour refinement and
//! individualization.

use std::collections::BTreeMap;

use super::orientation_normalized;
use crate::machine::TangleMachine;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Role {
    Agent,
    Input,
    Output,
}

struct Shape {
    header: String,
    /// `(label, agent, pairs)` with the label covering weight and frame.
    interactions: Vec<(String, usize, Vec<(usize, usize)>)>,
    registers: Vec<(bool, bool)>,
    /// Per arc: `(role, interaction)` incidences.
    incidence: Vec<Vec<(Role, usize)>>,
}

impl Shape {
    fn of(m: &TangleMachine) -> Self {
        let index: BTreeMap<&str, usize> = m.arcs.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
        let mut incidence = vec![Vec::new(); m.arcs.len()];
        let mut interactions = Vec::new();
        for (k, i) in m.interactions.iter().enumerate() {
            let agent = index[i.agent.as_str()];
            incidence[agent].push((Role::Agent, k));
            let pairs: Vec<(usize, usize)> = orientation_normalized(i)
                .iter()
                .map(|(a, b)| (index[a.as_str()], index[b.as_str()]))
                .collect();
            for &(a, b) in &pairs {
                incidence[a].push((Role::Input, k));
                incidence[b].push((Role::Output, k));
            }
            let weight = i.weight.map_or("-".to_string(), |w| format!("{:016x}", w.to_bits()));
            let frame = i.frame.map_or("-".to_string(), |f| f.to_string());
            interactions.push((format!("{weight}/{frame}"), agent, pairs));
        }
        let registers = m
            .arcs
            .iter()
            .map(|a| (m.inputs.contains(a), m.outputs.contains(a)))
            .collect();
        Self {
            header: format!("{}|{}|{}", m.quandle.kind(), m.arcs.len(), m.interactions.len()),
            interactions,
            registers,
            incidence,
        }
    }

    /// Rank of each signature among the sorted distinct signatures.
    fn ranks<T: Ord + Clone>(sigs: &[T]) -> Vec<usize> {
        let mut sorted = sigs.to_vec();
        sorted.sort();
        sorted.dedup();
        sigs.iter().map(|s| sorted.binary_search(s).unwrap()).collect()
    }

    fn interaction_colours(&self, arc: &[usize]) -> Vec<usize> {
        let sigs: Vec<(String, usize, Vec<(usize, usize)>)> = self
            .interactions
            .iter()
            .map(|(label, agent, pairs)| {
                let mut p: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (arc[a], arc[b])).collect();
                p.sort();
                (label.clone(), arc[*agent], p)
            })
            .collect();
        Self::ranks(&sigs)
    }

    /// Refines arc colours until the partition is stable.
    fn refine(&self, mut arc: Vec<usize>) -> Vec<usize> {
        loop {
            let inter = self.interaction_colours(&arc);
            let sigs: Vec<(usize, Vec<(Role, usize)>)> = arc
                .iter()
                .enumerate()
                .map(|(a, &c)| {
                    let mut inc: Vec<(Role, usize)> = self.incidence[a].iter().map(|&(r, k)| (r, inter[k])).collect();
                    inc.sort();
                    (c, inc)
                })
                .collect();
            let next = Self::ranks(&sigs);
            if classes(&next) == classes(&arc) {
                return next;
            }
            arc = next;
        }
    }

    fn serialize(&self, arc: &[usize]) -> String {
        let mut ints: Vec<String> = self
            .interactions
            .iter()
            .map(|(label, agent, pairs)| {
                let mut p: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (arc[a], arc[b])).collect();
                p.sort();
                let p: Vec<String> = p.iter().map(|(a, b)| format!("{a}>{b}")).collect();
                format!("{label}:{}:{}", arc[*agent], p.join(","))
            })
            .collect();
        ints.sort();
        let mut regs: Vec<String> = self
            .registers
            .iter()
            .enumerate()
            .filter(|(_, (i, o))| *i || *o)
            .map(|(a, (i, o))| format!("{}{}{}", arc[a], if *i { "i" } else { "" }, if *o { "o" } else { "" }))
            .collect();
        regs.sort();
        format!("{}|{}|{}", self.header, regs.join(","), ints.join(";"))
    }

    fn search(&self, arc: Vec<usize>, best: &mut Option<String>) {
        let arc = self.refine(arc);
        let n = arc.len();
        let mut sizes = vec![0usize; n.max(1)];
        for &c in &arc {
            sizes[c] += 1;
        }
        let Some(cell) = (0..n).find(|&c| sizes[c] > 1) else {
            let key = self.serialize(&arc);
            if best.as_ref().is_none_or(|b| key < *b) {
                *best = Some(key);
            }
            return;
        };
        for v in (0..n).filter(|&a| arc[a] == cell) {
            let split: Vec<usize> = arc
                .iter()
                .enumerate()
                .map(|(a, &c)| 2 * c + usize::from(c == cell && a != v))
                .collect();
            self.search(split, best);
        }
    }
}

fn classes(colours: &[usize]) -> usize {
    let mut c = colours.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

/// A key equal for machines that agree up to renaming arcs and
/// interactions, reading reverse interactions as forward ones with swapped
/// patients. Machine names are ignored.
pub fn canonical_key(m: &TangleMachine) -> String {
    let shape = Shape::of(m);
    let initial = Shape::ranks(&shape.registers);
    let mut best = None;
    shape.search(initial, &mut best);
    best.unwrap_or_else(|| shape.serialize(&[]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{figure_eight, r3_left, trefoil, Interaction};
    use crate::quandle::Quandle;

    fn relabeled(m: &TangleMachine) -> TangleMachine {
        let mut out = m.clone();
        let rename = |a: &str| format!("z_{}", a.chars().rev().collect::<String>());
        out.arcs = m.arcs.iter().rev().map(|a| rename(a)).collect();
        out.interactions.reverse();
        for i in &mut out.interactions {
            i.id = format!("{}x", i.id);
            i.agent = rename(&i.agent);
            for (a, b) in &mut i.pairs {
                *a = rename(a);
                *b = rename(b);
            }
        }
        out.inputs = m.inputs.iter().map(|a| rename(a)).collect();
        out.outputs = m.outputs.iter().map(|a| rename(a)).collect();
        out
    }

    #[test]
    fn relabeling_invariance() {
        let q = Quandle::dihedral(3).unwrap();
        for m in [trefoil(q), figure_eight(q), r3_left(q)] {
            assert_eq!(canonical_key(&m), canonical_key(&relabeled(&m)));
        }
        assert_ne!(canonical_key(&trefoil(q)), canonical_key(&figure_eight(q)));
    }

    #[test]
    fn flipped_orientation_with_swapped_pair() {
        let q = Quandle::dihedral(3).unwrap();
        let m = r3_left(q);
        let mut flipped = m.clone();
        let s = &mut flipped.interactions[0];
        *s = Interaction::new("s", "y", &[("u", "x")]).reversed();
        assert_eq!(canonical_key(&m), canonical_key(&flipped));
        let mut only_flag = m.clone();
        only_flag.interactions[0].orientation = only_flag.interactions[0].orientation.flipped();
        assert_ne!(canonical_key(&m), canonical_key(&only_flag));
    }

    #[test]
    fn mirror_registers_matter() {
        let q = Quandle::dihedral(3).unwrap();
        let m = r3_left(q);
        let mut other = m.clone();
        other.outputs.pop();
        assert_ne!(canonical_key(&m), canonical_key(&other));
    }
}
