//! Serializers: DOT graphs, PROMELA-style process encodings and the native
//! line-oriented model file format.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::ia::{ActionKind, ActionSignature, AutomatonError, InterfaceAutomaton, StateId};
use crate::mcheck::ProcessNetwork;
use crate::symbol::Symbol;

#[derive(Debug, Error)]
pub enum ModelFormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

/// Deterministic DOT rendering. Input transitions are labelled `?a`,
/// output transitions `!a`; nodes are ordered by state id.
pub fn emit_dot(ia: &InterfaceAutomaton) -> String {
    let mut out = String::new();
    out.push_str("digraph ia {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=circle];\n");
    out.push_str("  __start [shape=none label=\"\"];\n");
    let _ = writeln!(out, "  __start -> s{};", ia.initial().0);
    for q in ia.states() {
        let _ = writeln!(out, "  s{} [label=\"{}\"];", q.0, ia.name_of(q));
    }
    for (from, label, to) in ia.transitions() {
        let _ = writeln!(
            out,
            "  s{} -> s{} [label=\"{}\"];",
            from.0,
            to.0,
            ia.signature().decorate(label)
        );
    }
    out.push_str("}\n");
    out
}

/// Serializes an automaton in the native model format:
///
/// ```text
/// ia v1
/// inputs read write
/// outputs rok
/// states 4
/// initial 0
/// name 0 idle
/// trans 0 read 2
/// ```
pub fn emit_model(ia: &InterfaceAutomaton) -> String {
    let mut out = String::from("ia v1\n");
    let ins: Vec<&str> = ia.signature().inputs().iter().map(|s| s.as_str()).collect();
    let outs: Vec<&str> = ia
        .signature()
        .outputs()
        .iter()
        .map(|s| s.as_str())
        .collect();
    let _ = writeln!(out, "inputs {}", ins.join(" "));
    let _ = writeln!(out, "outputs {}", outs.join(" "));
    let _ = writeln!(out, "states {}", ia.state_count());
    let _ = writeln!(out, "initial {}", ia.initial().0);
    for q in ia.states() {
        let name = ia.name_of(q);
        if name != format!("q{}", q.0) {
            let _ = writeln!(out, "name {} {}", q.0, name);
        }
    }
    for (from, label, to) in ia.transitions() {
        let _ = writeln!(out, "trans {} {} {}", from.0, label, to.0);
    }
    out
}

/// Parses the native model format back into an automaton.
pub fn parse_model(text: &str) -> Result<InterfaceAutomaton, ModelFormatError> {
    let err = |line: usize, message: &str| ModelFormatError::Parse {
        line,
        message: message.to_string(),
    };
    let mut inputs: Option<Vec<Symbol>> = None;
    let mut outputs: Option<Vec<Symbol>> = None;
    let mut states: Option<u32> = None;
    let mut initial: Option<u32> = None;
    let mut names: BTreeMap<u32, String> = BTreeMap::new();
    let mut transitions: Vec<(StateId, Symbol, StateId)> = Vec::new();
    let mut saw_magic = false;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !saw_magic {
            if tokens != ["ia", "v1"] {
                return Err(err(lineno, "expected magic header `ia v1`"));
            }
            saw_magic = true;
            continue;
        }
        match tokens[0] {
            "inputs" => inputs = Some(tokens[1..].iter().map(Symbol::new).collect()),
            "outputs" => outputs = Some(tokens[1..].iter().map(Symbol::new).collect()),
            "states" => {
                let n = tokens
                    .get(1)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(lineno, "states needs a count"))?;
                states = Some(n);
            }
            "initial" => {
                let n = tokens
                    .get(1)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(lineno, "initial needs a state id"))?;
                initial = Some(n);
            }
            "name" => {
                let id: u32 = tokens
                    .get(1)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(lineno, "name needs a state id"))?;
                let text = tokens.get(2..).unwrap_or_default().join(" ");
                names.insert(id, text);
            }
            "trans" => {
                if tokens.len() != 4 {
                    return Err(err(lineno, "trans needs `from symbol to`"));
                }
                let from: u32 = tokens[1]
                    .parse()
                    .map_err(|_| err(lineno, "bad source state id"))?;
                let to: u32 = tokens[3]
                    .parse()
                    .map_err(|_| err(lineno, "bad target state id"))?;
                transitions.push((StateId(from), Symbol::new(tokens[2]), StateId(to)));
            }
            other => {
                return Err(err(lineno, &format!("unknown directive `{other}`")));
            }
        }
    }
    if !saw_magic {
        return Err(err(0, "empty model file"));
    }
    let signature = ActionSignature::new(
        inputs.ok_or_else(|| err(0, "missing inputs line"))?,
        outputs.ok_or_else(|| err(0, "missing outputs line"))?,
    )?;
    let state_count = states.ok_or_else(|| err(0, "missing states line"))?;
    let initial = StateId(initial.ok_or_else(|| err(0, "missing initial line"))?);
    let ia = InterfaceAutomaton::new(signature, state_count, initial, transitions)?;
    let full_names: Vec<String> = (0..state_count)
        .map(|i| names.get(&i).cloned().unwrap_or_else(|| format!("q{i}")))
        .collect();
    Ok(ia.with_names(full_names))
}

fn sanitize(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    if s.chars().next().map_or(true, |c| c.is_ascii_digit()) {
        s.insert(0, 'p');
    }
    s
}

/// Encodes a network as PROMELA-style text: one process type per automaton,
/// each parameterized by an input and an output channel, all channels
/// unbuffered, every transition inside an atomic block, and a deterministic
/// init wiring the network together. The text is self-consistent; running
/// it through an external checker is not part of this toolkit.
pub fn emit_promela(net: &ProcessNetwork) -> String {
    let processes = net.processes();

    // Global sorted action table.
    let mut actions: Vec<Symbol> = processes
        .iter()
        .flat_map(|p| {
            p.automaton
                .signature()
                .inputs()
                .iter()
                .chain(p.automaton.signature().outputs().iter())
                .cloned()
        })
        .collect();
    actions.sort();
    actions.dedup();
    let mtype_of: BTreeMap<&Symbol, String> = actions
        .iter()
        .map(|a| (a, format!("m_{}", sanitize(a.as_str()))))
        .collect();

    // Channel classes: the emitter's output channel is the receiver's input
    // channel, so connected endpoints collapse into one rendezvous channel.
    // Union-find over 2 endpoints per process (out = 2i, in = 2i + 1).
    let mut parent: Vec<usize> = (0..processes.len() * 2).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for a in &actions {
        let emitter = processes
            .iter()
            .position(|p| p.automaton.signature().outputs().contains(a));
        let receiver = processes
            .iter()
            .position(|p| p.automaton.signature().inputs().contains(a));
        if let (Some(e), Some(r)) = (emitter, receiver) {
            let (re, rr) = (find(&mut parent, 2 * e), find(&mut parent, 2 * r + 1));
            parent[re] = rr;
        }
    }
    let mut channel_of: BTreeMap<usize, usize> = BTreeMap::new();
    let mut endpoint_channel = vec![0usize; processes.len() * 2];
    for (i, ch) in endpoint_channel.iter_mut().enumerate() {
        let root = find(&mut parent, i);
        let next = channel_of.len();
        *ch = *channel_of.entry(root).or_insert(next);
    }

    let mut out = String::new();
    let mtypes: Vec<&str> = actions.iter().map(|a| mtype_of[a].as_str()).collect();
    let _ = writeln!(out, "mtype = {{ {} }};", mtypes.join(", "));
    out.push('\n');

    for p in processes {
        let _ = writeln!(
            out,
            "proctype P_{}(chan InChannel; chan OutChannel) {{",
            sanitize(&p.name)
        );
        let _ = writeln!(out, "    int s = {};", p.automaton.initial().0);
        out.push_str("    do\n");
        for (from, label, to) in p.automaton.transitions() {
            let m = &mtype_of[label];
            let op = match p.automaton.signature().kind_of(label) {
                Some(ActionKind::Input) => format!("InChannel?{m}"),
                _ => format!("OutChannel!{m}"),
            };
            let _ = writeln!(
                out,
                "    :: atomic {{ s == {} -> {}; s = {} }}",
                from.0, op, to.0
            );
        }
        for t in &p.terminal {
            let _ = writeln!(out, "    :: atomic {{ s == {} -> break }}", t.0);
        }
        out.push_str("    od\n}\n\n");
    }

    out.push_str("init {\n");
    let channel_count = channel_of.len();
    for c in 0..channel_count {
        let _ = writeln!(out, "    chan ch{c} = [0] of {{ mtype }};");
    }
    out.push_str("    atomic {\n");
    for (i, p) in processes.iter().enumerate() {
        let _ = writeln!(
            out,
            "        run P_{}(ch{}, ch{});",
            sanitize(&p.name),
            endpoint_channel[2 * i + 1],
            endpoint_channel[2 * i],
        );
    }
    out.push_str("    }\n}\n");
    out
}
