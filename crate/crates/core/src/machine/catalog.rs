//! Small fixture machines.

use super::{Interaction, TangleMachine};
use crate::quandle::Quandle;

/// One closed arc and no interactions.
pub fn unknot(q: Quandle) -> TangleMachine {
    TangleMachine::new("unknot", q).with_arcs(&["a"])
}

/// A closed strand of `n` arcs with crossing `k` turning arc `k-1` into arc
/// `k` under the agent chosen by `agent(k)`.
fn closed_knot(name: &str, q: Quandle, agents: &[usize]) -> TangleMachine {
    let n = agents.len();
    let arcs: Vec<String> = (0..n).map(|k| format!("a{k}")).collect();
    let mut m = TangleMachine::new(name, q);
    m.arcs = arcs.clone();
    for (k, &agent) in agents.iter().enumerate() {
        let input = arcs[(k + n - 1) % n].as_str();
        m.interactions.push(Interaction::new(format!("c{k}"), arcs[agent].clone(), &[(input, arcs[k].as_str())]));
    }
    m
}

/// Three arcs, three crossings; each crossing is over the next arc.
pub fn trefoil(q: Quandle) -> TangleMachine {
    closed_knot("trefoil", q, &[1, 2, 0])
}

pub fn figure_eight(q: Quandle) -> TangleMachine {
    closed_knot("figure-eight", q, &[2, 3, 0, 1])
}

/// The left side of R3: `(x ▷ y) ▷ z`, with `y` also passing under `z`.
pub fn r3_left(q: Quandle) -> TangleMachine {
    TangleMachine::new("r3-left", q)
        .with_arcs(&["x", "y", "z", "u", "out", "y2"])
        .with_interaction(Interaction::new("s", "y", &[("x", "u")]))
        .with_interaction(Interaction::new("t", "z", &[("u", "out"), ("y", "y2")]))
        .with_registers(&["x", "y", "z"], &["out", "y2"])
}

/// Computes `z ▷_{w2} (x ▷_{w1} y)` for weighted quandles.
pub fn fusion_chain(q: Quandle, w1: f64, w2: f64) -> TangleMachine {
    TangleMachine::new("fusion-chain", q)
        .with_arcs(&["x", "y", "z", "m", "out"])
        .with_interaction(Interaction::new("i1", "y", &[("x", "m")]).with_weight(w1))
        .with_interaction(Interaction::new("i2", "m", &[("z", "out")]).with_weight(w2))
        .with_registers(&["x", "y", "z"], &["out"])
}

/// Two interactions glued along the arcs `b` and `c`, which carry
/// different colours in any non-constant colouring.
pub fn square_a(q: Quandle) -> TangleMachine {
    TangleMachine::new("square-a", q)
        .with_arcs(&["a", "b", "c", "d"])
        .with_interaction(Interaction::new("i1", "b", &[("a", "c")]))
        .with_interaction(Interaction::new("i2", "c", &[("b", "d")]))
        .with_registers(&["a", "b"], &["d"])
}

/// Two interactions glued along the horizontal strands `h1` and `h2`.
pub fn square_b(q: Quandle) -> TangleMachine {
    TangleMachine::new("square-b", q)
        .with_arcs(&["p", "x1", "x2", "h1", "h2", "r", "y1", "y2"])
        .with_interaction(Interaction::new("i1", "p", &[("x1", "h1"), ("x2", "h2")]))
        .with_interaction(Interaction::new("i2", "r", &[("h1", "y1"), ("h2", "y2")]))
        .with_registers(&["p", "x1", "x2", "r"], &["y1", "y2"])
}
