//! The `.tm` machine document format.
//!
//! ```text
//! # comments start with '#'
//! machine trefoil
//! quandle dihedral 3
//! arcs a0 a1 a2
//! interaction c0 agent=a1 in=[a2] out=[a0]
//! inputs
//! outputs
//! color a0=0
//! ```
//!
//! Interactions also take `weight=<w>`, `frame=<i>` and `orient=<fwd|rev>`.

use std::fmt::Write as _;

use tangleforge::machine::{Coloring, Interaction, MachineError, Orientation, TangleMachine};
use tangleforge::quandle::{Quandle, QuandleKind};

#[derive(Debug, Clone, PartialEq)]
pub struct TmDocument {
    pub machine: TangleMachine,
    /// Colours declared with `color` lines.
    pub coloring: Coloring,
}

fn syntax(line: usize, message: impl Into<String>) -> MachineError {
    MachineError::Syntax {
        line,
        message: message.into(),
    }
}

/// Drops a `#` comment that starts the line or follows whitespace, so arc
/// names such as `a#1` survive.
fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

/// Whitespace-separated fields, keeping bracketed groups together.
fn fields(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut depth = 0usize;
    for ch in text.chars() {
        match ch {
            '[' | '(' => depth += 1,
            ']' | ')' => depth = depth.saturating_sub(1),
            _ => {}
        }
        if ch.is_whitespace() && depth == 0 {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
        } else {
            current.push(ch);
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

fn names(text: &str) -> Vec<String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn arc_list(line: usize, key: &str, value: &str) -> Result<Vec<String>, MachineError> {
    let inner = value
        .strip_prefix('[')
        .and_then(|v| v.strip_suffix(']'))
        .ok_or_else(|| syntax(line, format!("{key}= expects a bracketed list, got {value:?}")))?;
    Ok(names(inner))
}

fn parse_interaction(line: usize, rest: &str) -> Result<Interaction, MachineError> {
    let mut tokens = fields(rest).into_iter();
    let id = tokens.next().ok_or_else(|| syntax(line, "interaction needs an id"))?;
    if id.contains('=') {
        return Err(syntax(line, format!("interaction id expected before {id:?}")));
    }
    let (mut agent, mut ins, mut outs) = (None, None, None);
    let mut interaction = Interaction::new(id.clone(), "", &[]);
    for token in tokens {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| syntax(line, format!("expected key=value, got {token:?}")))?;
        match key {
            "agent" => agent = Some(value.to_string()),
            "in" => ins = Some(arc_list(line, key, value)?),
            "out" => outs = Some(arc_list(line, key, value)?),
            "weight" => {
                let w: f64 = value.parse().map_err(|_| syntax(line, format!("bad weight {value:?}")))?;
                interaction.weight = Some(w);
            }
            "frame" => {
                let f: usize = value.parse().map_err(|_| syntax(line, format!("bad frame {value:?}")))?;
                interaction.frame = Some(f);
            }
            "orient" => {
                interaction.orientation = match value {
                    "fwd" => Orientation::Forward,
                    "rev" => Orientation::Reverse,
                    _ => return Err(syntax(line, format!("orient must be fwd or rev, got {value:?}"))),
                }
            }
            _ => return Err(syntax(line, format!("unknown interaction field {key:?}"))),
        }
    }
    interaction.agent = agent.ok_or_else(|| syntax(line, format!("interaction {id} has no agent=")))?;
    let ins = ins.ok_or_else(|| syntax(line, format!("interaction {id} has no in=")))?;
    let outs = outs.ok_or_else(|| syntax(line, format!("interaction {id} has no out=")))?;
    if ins.len() != outs.len() {
        return Err(syntax(line, format!("interaction {id} has {} inputs but {} outputs", ins.len(), outs.len())));
    }
    interaction.pairs = ins.into_iter().zip(outs).collect();
    Ok(interaction)
}

/// Parses a document and validates the machine it describes.
pub fn parse_tm(text: &str) -> Result<TmDocument, MachineError> {
    let mut name = None;
    let mut quandle: Option<Quandle> = None;
    let mut arcs = Vec::new();
    let mut interactions = Vec::new();
    let (mut inputs, mut outputs) = (Vec::new(), Vec::new());
    let mut colours = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let (keyword, rest) = content.split_once(char::is_whitespace).unwrap_or((content, ""));
        let rest = rest.trim();
        match keyword {
            "machine" => {
                if name.is_some() {
                    return Err(syntax(line, "second machine line"));
                }
                if rest.is_empty() {
                    return Err(syntax(line, "machine needs a name"));
                }
                name = Some(rest.to_string());
            }
            "quandle" => {
                if quandle.is_some() {
                    return Err(syntax(line, "second quandle line"));
                }
                let kind: QuandleKind = rest.parse().map_err(|e| syntax(line, format!("{e}")))?;
                quandle = Some(Quandle::new(kind).map_err(|e| syntax(line, format!("{e}")))?);
            }
            "arcs" => arcs.extend(names(rest)),
            "interaction" => interactions.push(parse_interaction(line, rest)?),
            "inputs" => inputs.extend(names(rest)),
            "outputs" => outputs.extend(names(rest)),
            "color" | "colour" => {
                let (arc, literal) = rest
                    .split_once('=')
                    .ok_or_else(|| syntax(line, format!("expected color <arc>=<literal>, got {rest:?}")))?;
                colours.push((line, arc.trim().to_string(), literal.trim().to_string()));
            }
            _ => return Err(syntax(line, format!("unknown keyword {keyword:?}"))),
        }
    }
    let quandle = quandle.ok_or_else(|| syntax(0, "missing quandle line"))?;
    let mut machine = TangleMachine::new(name.unwrap_or_else(|| "machine".into()), quandle);
    machine.arcs = arcs;
    machine.interactions = interactions;
    machine.inputs = inputs;
    machine.outputs = outputs;
    machine.ensure_valid()?;
    let mut coloring = Coloring::new();
    for (line, arc, literal) in colours {
        if !machine.has_arc(&arc) {
            return Err(syntax(line, format!("colour for undeclared arc {arc:?}")));
        }
        let e = quandle.parse_element(&literal).map_err(|e| syntax(line, format!("arc {arc}: {e}")))?;
        if coloring.insert(arc.clone(), e).is_some() {
            return Err(syntax(line, format!("arc {arc} coloured twice")));
        }
    }
    Ok(TmDocument { machine, coloring })
}

/// Writes the canonical form: declaration order kept, optional fields only
/// when set, colours sorted by arc.
pub fn serialize_tm(machine: &TangleMachine, coloring: &Coloring) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "machine {}", machine.name);
    let _ = writeln!(out, "quandle {}", machine.quandle.kind());
    let _ = writeln!(out, "arcs {}", machine.arcs.join(" "));
    for i in &machine.interactions {
        let (ins, outs): (Vec<&str>, Vec<&str>) = i.pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).unzip();
        let _ = write!(out, "interaction {} agent={} in=[{}] out=[{}]", i.id, i.agent, ins.join(","), outs.join(","));
        if let Some(w) = i.weight {
            let _ = write!(out, " weight={w}");
        }
        if let Some(f) = i.frame {
            let _ = write!(out, " frame={f}");
        }
        if i.orientation == Orientation::Reverse {
            out.push_str(" orient=rev");
        }
        out.push('\n');
    }
    if !machine.inputs.is_empty() {
        let _ = writeln!(out, "inputs {}", machine.inputs.join(" "));
    }
    if !machine.outputs.is_empty() {
        let _ = writeln!(out, "outputs {}", machine.outputs.join(" "));
    }
    for (arc, e) in coloring {
        let _ = writeln!(out, "color {arc}={e}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use tangleforge::machine::{r3_left, trefoil};
    use tangleforge::quandle::Element;

    #[test]
    fn minimal_document() {
        let doc = parse_tm("quandle dihedral 3\narcs a\n").unwrap();
        assert_eq!(doc.machine.arcs, vec!["a"]);
        assert!(doc.machine.interactions.is_empty());
    }

    #[test]
    fn round_trip_catalog() {
        let q = Quandle::dihedral(3).unwrap();
        for m in [trefoil(q), r3_left(q)] {
            let text = serialize_tm(&m, &Coloring::new());
            assert_eq!(parse_tm(&text).unwrap().machine, m);
        }
    }

    #[test]
    fn errors_carry_lines() {
        let err = parse_tm("quandle dihedral 3\narcs a\nbogus\n").unwrap_err();
        assert_eq!(err.to_string(), "line 3: unknown keyword \"bogus\"");
        let err = parse_tm("quandle dihedral 3\narcs a b\ninteraction i agent=b in=[a] out=[c]\n").unwrap_err();
        assert!(err.to_string().contains("\"c\"") || err.to_string().contains(" c:"), "{err}");
        let err = parse_tm("quandle dihedral 3\narcs a\ncolor a=x\n").unwrap_err();
        assert!(err.to_string().starts_with("line 3:"), "{err}");
    }

    #[test]
    fn hash_inside_names_and_trailing_comments() {
        let doc = parse_tm("quandle dihedral 5  # d5\narcs a#1 b#2 # two arcs\ncolor a#1=4\n").unwrap();
        assert_eq!(doc.machine.arcs, vec!["a#1", "b#2"]);
        assert_eq!(doc.coloring["a#1"], Element::Residue(4));
    }

    #[test]
    fn bracketed_lists_with_spaces_and_gaussian_colours() {
        let text = "quandle gaussian-ci 2\narcs x y z\ninteraction i agent=y in=[x] out=[z] weight=0.25 frame=1 orient=rev\ncolor x=N([1, 2]; [[2, 0.5], [0.5, 1]])\n";
        let doc = parse_tm(text).unwrap();
        let i = &doc.machine.interactions[0];
        assert_eq!((i.weight, i.frame, i.orientation), (Some(0.25), Some(1), Orientation::Reverse));
        let again = parse_tm(&serialize_tm(&doc.machine, &doc.coloring)).unwrap();
        assert_eq!(again, doc);
    }
}
