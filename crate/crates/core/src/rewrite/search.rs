//! Bounded breadth-first equivalence search.

use std::collections::HashSet;

use serde::Serialize;

use super::{canonical_key, insert_weights_for, successors, RewriteSite};
use crate::machine::{enumerate_colorings, EnumLimits, TangleMachine};
use crate::quandle::Quandle;

pub const DEFAULT_DEPTH_CAP: usize = 6;
pub const DEFAULT_NODE_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub depth_cap: usize,
    pub node_cap: usize,
    pub enumeration: EnumLimits,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self {
            depth_cap: DEFAULT_DEPTH_CAP,
            node_cap: DEFAULT_NODE_CAP,
            enumeration: EnumLimits::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    /// `moves` rewrite the first machine into the second.
    Equivalent { moves: Vec<RewriteSite> },
    Distinguished { witness: String },
    Unknown { reason: String, explored: usize },
}

/// Compares colouring counts over dihedral(3) and dihedral(5), reporting
/// every mismatch, then searches move sequences of length at most `depth`
/// (clamped to the cap).
pub fn equivalent(m1: &TangleMachine, m2: &TangleMachine, depth: usize, limits: &SearchLimits) -> Verdict {
    if m1.quandle != m2.quandle {
        return Verdict::Unknown {
            reason: format!("machines are bound to different quandles ({} vs {})", m1.quandle.kind(), m2.quandle.kind()),
            explored: 0,
        };
    }
    let mut witnesses = Vec::new();
    for k in [3, 5] {
        let q = Quandle::dihedral(k).expect("k >= 2");
        let counts = (
            enumerate_colorings(m1, &q, &limits.enumeration, false),
            enumerate_colorings(m2, &q, &limits.enumeration, false),
        );
        if let (Ok(a), Ok(b)) = counts {
            if a.count != b.count {
                witnesses.push(format!("dihedral({k}) counts {} vs {}", a.count, b.count));
            }
        }
    }
    if !witnesses.is_empty() {
        return Verdict::Distinguished {
            witness: witnesses.join("; "),
        };
    }
    let target = canonical_key(m2);
    if canonical_key(m1) == target {
        return Verdict::Equivalent { moves: Vec::new() };
    }
    let depth = depth.min(limits.depth_cap);
    let weights = insert_weights_for(&[m1, m2]);
    let mut seen = HashSet::from([canonical_key(m1)]);
    let mut frontier = vec![(m1.clone(), Vec::<RewriteSite>::new())];
    for _ in 0..depth {
        let mut next = Vec::new();
        for (m, path) in &frontier {
            for (site, out) in successors(m, &weights) {
                let key = canonical_key(&out);
                if key == target {
                    let mut moves = path.clone();
                    moves.push(site);
                    return Verdict::Equivalent { moves };
                }
                if seen.len() >= limits.node_cap {
                    return Verdict::Unknown {
                        reason: format!("node cap {} reached", limits.node_cap),
                        explored: seen.len(),
                    };
                }
                if seen.insert(key) {
                    let mut moves = path.clone();
                    moves.push(site);
                    next.push((out, moves));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Verdict::Unknown {
        reason: format!("no move sequence of length <= {depth} found"),
        explored: seen.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{figure_eight, r3_left, trefoil, unknot};
    use crate::rewrite::{apply_move, SlideDirection};

    fn d3() -> Quandle {
        Quandle::dihedral(3).unwrap()
    }

    #[test]
    fn distinguished_by_counts() {
        let limits = SearchLimits::default();
        assert_eq!(
            equivalent(&trefoil(d3()), &unknot(d3()), 4, &limits),
            Verdict::Distinguished {
                witness: "dihedral(3) counts 9 vs 3".into()
            }
        );
        assert_eq!(
            equivalent(&figure_eight(d3()), &trefoil(d3()), 4, &limits),
            Verdict::Distinguished {
                witness: "dihedral(3) counts 3 vs 9; dihedral(5) counts 25 vs 5".into()
            }
        );
    }

    #[test]
    fn one_move_certificate() {
        let m = r3_left(d3());
        let site = RewriteSite::r3_slide("s", "t", SlideDirection::Right);
        let moved = apply_move(&m, &site).unwrap();
        match equivalent(&m, &moved, 3, &SearchLimits::default()) {
            Verdict::Equivalent { moves } => {
                assert_eq!(moves.len(), 1);
                let replay = apply_move(&m, &moves[0]).unwrap();
                assert_eq!(canonical_key(&replay), canonical_key(&moved));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn depth_zero_is_unknown() {
        let m = r3_left(d3());
        let moved = apply_move(&m, &RewriteSite::r1_insert("u", None)).unwrap();
        assert!(matches!(equivalent(&m, &moved, 0, &SearchLimits::default()), Verdict::Unknown { .. }));
    }
}
