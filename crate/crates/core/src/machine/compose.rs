//! Connect sum of two machines along one arc of each.

use super::{MachineError, TangleMachine};

fn suffixed(m: &TangleMachine, tag: &str) -> TangleMachine {
    let s = |a: &String| format!("{a}#{tag}");
    let mut out = m.clone();
    out.arcs = m.arcs.iter().map(s).collect();
    for i in &mut out.interactions {
        i.id = s(&i.id);
        i.agent = s(&i.agent);
        for (a, b) in &mut i.pairs {
            *a = s(a);
            *b = s(b);
        }
    }
    out.inputs = m.inputs.iter().map(s).collect();
    out.outputs = m.outputs.iter().map(s).collect();
    out
}

/// Joins `m1` and `m2` along `a1` and `a2`.
///
/// The arcs are identified when the merged arc stays patient-linear, for
/// example an output register of `m1` with an input register of `m2`, or
/// any arc with an arc that is no patient at all. Two arcs on closed strands
/// are instead cut and reconnected crosswise, the usual connect sum of
/// knots. Ids get the suffixes `#1` and `#2`.
pub fn connect_sum(m1: &TangleMachine, a1: &str, m2: &TangleMachine, a2: &str) -> Result<TangleMachine, MachineError> {
    for (m, a) in [(m1, a1), (m2, a2)] {
        if !m.has_arc(a) {
            return Err(MachineError::UnknownArc(a.to_string()));
        }
    }
    if m1.quandle != m2.quandle {
        return Err(MachineError::Invalid(format!(
            "quandles differ: {} vs {}",
            m1.quandle.kind(),
            m2.quandle.kind()
        )));
    }
    let (c1, c2) = (m1.counts_of(a1), m2.counts_of(a2));
    let mut sum = suffixed(m1, "1");
    let right = suffixed(m2, "2");
    let (x, y) = (format!("{a1}#1"), format!("{a2}#2"));
    sum.name = format!("{}#{}", m1.name, m2.name);
    sum.arcs.extend(right.arcs);
    sum.interactions.extend(right.interactions);
    sum.inputs.extend(right.inputs);
    sum.outputs.extend(right.outputs);

    if c1.input + c2.input <= 1 && c1.output + c2.output <= 1 {
        sum.merge_arc(&y, &x);
        let merged = sum.counts_of(&x);
        if merged.output > 0 {
            sum.inputs.retain(|r| *r != x);
        }
        if merged.input > 0 {
            sum.outputs.retain(|r| *r != x);
        }
        return Ok(sum);
    }
    let closed = |m: &TangleMachine, a: &str| {
        let c = m.counts_of(a);
        c.input == 1 && c.output == 1 && m.on_closed_strand(a) && !m.is_register(a)
    };
    if !(closed(m1, a1) && closed(m2, a2)) {
        return Err(MachineError::Linearity(format!(
            "joining {a1} and {a2} would make one arc the patient of too many interactions"
        )));
    }
    // Cut each arc just after the crossing that emits it: `x` keeps its
    // start and runs into the far side of `y`, while `y` keeps its start and
    // runs into the far side of `x`.
    let (k1, p1) = sum.input_site(&x).expect("closed strand");
    let (k2, p2) = sum.input_site(&y).expect("closed strand");
    sum.interactions[k1].pairs[p1].0 = y.clone();
    sum.interactions[k2].pairs[p2].0 = x.clone();
    for i in &mut sum.interactions {
        if i.agent == x {
            i.agent = y.clone();
        } else if i.agent == y {
            i.agent = x.clone();
        }
    }
    Ok(sum)
}
