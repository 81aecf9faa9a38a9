//! The two producer-consumer case studies and the interrupt scenario.
//!
//! Case study 1: a planner bursts N messages to a controller over one
//! channel and then waits on a second channel for an acknowledgment that
//! the whole sequence was executed; both ends loop forever. Case study 2:
//! two bounded producers feed one consumer that alternates reads from both
//! channels a bounded number of times. Channels are instances of identified
//! port models; loop bounds are unrolled into automaton states.

use thiserror::Error;

use std::collections::BTreeMap;

use crate::ia::{ActionSignature, AutomatonError, InterfaceAutomaton, StateId};
use crate::learner::{learn_ia, LearnError, LearnStats};
use crate::mcheck::{ComposeError, ProcessInstance, ProcessNetwork};
use crate::sim::{FusionProfile, InterruptStyle, PortKind, PortSul, SimError};
use crate::symbol::Symbol;
use crate::teacher::{EqConfig, SulTeacher};
use crate::translate::{mealy_view, ViewStep};

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
}

/// Where the channel models come from: a fresh identification run against
/// the simulator, or the reference construction derived from its exhaustive
/// semantics. The two are isomorphic; reference skips the queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PortModelSource {
    Learned,
    Reference,
}

fn port_model(
    kind: &PortKind,
    profile: FusionProfile,
    source: PortModelSource,
) -> Result<InterfaceAutomaton, CaseError> {
    match source {
        PortModelSource::Reference => Ok(crate::sim::reference_port_ia(kind, profile)?),
        PortModelSource::Learned => {
            let sul = PortSul::new(kind.clone(), profile)?;
            let mut teacher = SulTeacher::new(sul, EqConfig::default());
            let (ia, _stats) = learn_ia(&mut teacher)?;
            Ok(ia)
        }
    }
}

/// Renames every action of `ia` with a channel prefix, e.g. `write` to
/// `c1_write`.
fn prefix_rename(
    ia: &InterfaceAutomaton,
    prefix: &str,
) -> Result<InterfaceAutomaton, AutomatonError> {
    let map: BTreeMap<Symbol, Symbol> = ia
        .signature()
        .inputs()
        .iter()
        .chain(ia.signature().outputs().iter())
        .map(|s| (s.clone(), Symbol::new(format!("{prefix}{s}"))))
        .collect();
    ia.rename(&map)
}

fn sig(inputs: Vec<Symbol>, outputs: Vec<Symbol>) -> Result<ActionSignature, AutomatonError> {
    ActionSignature::new(inputs, outputs)
}

// ---------------------------------------------------------------------------
// Case study 1

/// Which port discipline backs both channels of case study 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Case1Port {
    NonStrict,
    /// Strict FIFO of the given capacity.
    Strict { capacity: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Case1Params {
    /// Messages per burst: the planner writes this many per cycle, the
    /// controller reads this many per cycle.
    pub n: u32,
    pub port: Case1Port,
    pub source: PortModelSource,
}

impl Case1Params {
    pub fn validate(&self) -> Result<(), CaseError> {
        if self.n < 1 {
            return Err(CaseError::BadParams("burst length must be >= 1".into()));
        }
        if let Case1Port::Strict { capacity } = self.port {
            if capacity < 1 {
                return Err(CaseError::BadParams("capacity must be >= 1".into()));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self.port {
            Case1Port::NonStrict => "Buffered Port (non-strict)".to_string(),
            Case1Port::Strict { capacity } => {
                format!("Buffered Port (strict, N={capacity})")
            }
        }
    }
}

/// The planner: bursts N writes to channel 1, then requests and awaits one
/// acknowledgment from channel 2, forever.
fn planner_automaton(n: u32) -> Result<InterfaceAutomaton, AutomatonError> {
    let write = Symbol::new("c1_write");
    let ack_read = Symbol::new("c2_read");
    let ack = Symbol::new("c2_rok");
    let mut transitions = Vec::new();
    for i in 0..n {
        transitions.push((StateId(i), write.clone(), StateId(i + 1)));
    }
    transitions.push((StateId(n), ack_read.clone(), StateId(n + 1)));
    transitions.push((StateId(n + 1), ack.clone(), StateId(0)));
    InterfaceAutomaton::new(
        sig(vec![ack], vec![write, ack_read])?,
        n + 2,
        StateId(0),
        transitions,
    )
}

/// The controller: reads N messages from channel 1 in strict order, then
/// writes one acknowledgment to channel 2, forever.
fn controller_automaton(n: u32) -> Result<InterfaceAutomaton, AutomatonError> {
    let read = Symbol::new("c1_read");
    let rok = Symbol::new("c1_rok");
    let ack_write = Symbol::new("c2_write");
    let mut transitions = Vec::new();
    for i in 0..n {
        transitions.push((StateId(2 * i), read.clone(), StateId(2 * i + 1)));
        transitions.push((StateId(2 * i + 1), rok.clone(), StateId(2 * i + 2)));
    }
    transitions.push((StateId(2 * n), ack_write.clone(), StateId(0)));
    InterfaceAutomaton::new(
        sig(vec![rok], vec![read, ack_write])?,
        2 * n + 1,
        StateId(0),
        transitions,
    )
}

/// Builds the planner/controller network: the two code models plus one port
/// model instance per channel. Both processes loop forever, so there are no
/// terminal markings and any stuck state is a deadlock.
pub fn build_case1(params: &Case1Params) -> Result<ProcessNetwork, CaseError> {
    params.validate()?;
    let kind = match params.port {
        Case1Port::NonStrict => PortKind::nonstrict(),
        Case1Port::Strict { capacity } => PortKind::strict(capacity),
    };
    let port = port_model(&kind, FusionProfile::Calibrated, params.source)?;
    let ch1 = prefix_rename(&port, "c1_")?;
    let ch2 = prefix_rename(&port, "c2_")?;
    let net = ProcessNetwork::new(vec![
        ProcessInstance::new("planner", planner_automaton(params.n)?),
        ProcessInstance::new("controller", controller_automaton(params.n)?),
        ProcessInstance::new("ch1", ch1).with_all_terminal(),
        ProcessInstance::new("ch2", ch2).with_all_terminal(),
    ])?;
    net.require_closed()?;
    Ok(net)
}

// ---------------------------------------------------------------------------
// Case study 2

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Case2Params {
    /// Loop bound of producer 1.
    pub n1: u32,
    /// Loop bound of producer 2.
    pub n2: u32,
    /// Loop bound of the consumer.
    pub n3: u32,
    /// Capacity of both strict channels.
    pub size: u32,
    /// Replace the consumer's blocking read of channel 1 with a
    /// non-blocking poll.
    pub nonblocking_first: bool,
    pub source: PortModelSource,
}

impl Case2Params {
    pub fn validate(&self) -> Result<(), CaseError> {
        if self.n1 < 1 || self.n2 < 1 || self.n3 < 1 {
            return Err(CaseError::BadParams("loop bounds must be >= 1".into()));
        }
        if self.size < 1 {
            return Err(CaseError::BadParams("buffer size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!(
            "{}{} {} {} {}",
            self.n1,
            if self.nonblocking_first { "*" } else { "" },
            self.n2,
            self.n3,
            self.size
        )
    }
}

/// A producer: a straight chain of `n` writes ending in a terminal state.
fn producer_automaton(n: u32, channel: &str) -> Result<InterfaceAutomaton, AutomatonError> {
    let write = Symbol::new(format!("{channel}_write"));
    let transitions: Vec<_> = (0..n)
        .map(|i| (StateId(i), write.clone(), StateId(i + 1)))
        .collect();
    InterfaceAutomaton::new(sig(vec![], vec![write])?, n + 1, StateId(0), transitions)
}

/// The consumer: per iteration one read from channel 1 (blocking, or a
/// non-blocking poll retried until data arrives), then one blocking read
/// from channel 2; terminal after `n3` iterations.
fn consumer_automaton(n3: u32, nonblocking_first: bool) -> Result<InterfaceAutomaton, AutomatonError> {
    let c1_read = Symbol::new("c1_read");
    let c1_read_nb = Symbol::new("c1_read_nb");
    let c1_rok = Symbol::new("c1_rok");
    let c1_nodata = Symbol::new("c1_nodata");
    let c2_read = Symbol::new("c2_read");
    let c2_rok = Symbol::new("c2_rok");

    let mut transitions = Vec::new();
    for i in 0..n3 {
        let base = 4 * i;
        if nonblocking_first {
            transitions.push((StateId(base), c1_read_nb.clone(), StateId(base + 1)));
            transitions.push((StateId(base + 1), c1_rok.clone(), StateId(base + 2)));
            // No data yet: poll again.
            transitions.push((StateId(base + 1), c1_nodata.clone(), StateId(base)));
        } else {
            transitions.push((StateId(base), c1_read.clone(), StateId(base + 1)));
            transitions.push((StateId(base + 1), c1_rok.clone(), StateId(base + 2)));
        }
        transitions.push((StateId(base + 2), c2_read.clone(), StateId(base + 3)));
        transitions.push((StateId(base + 3), c2_rok.clone(), StateId(base + 4)));
    }
    let inputs = if nonblocking_first {
        vec![c1_rok, c1_nodata, c2_rok]
    } else {
        vec![c1_rok, c2_rok]
    };
    let outputs = if nonblocking_first {
        vec![c1_read_nb, c2_read]
    } else {
        vec![c1_read, c2_read]
    };
    InterfaceAutomaton::new(sig(inputs, outputs)?, 4 * n3 + 1, StateId(0), transitions)
}

/// Builds the two-producers/one-consumer network with strict channels of
/// the given capacity. Terminal markings are each chain's end state.
pub fn build_case2(params: &Case2Params) -> Result<ProcessNetwork, CaseError> {
    params.validate()?;
    let ch1_kind = if params.nonblocking_first {
        PortKind::strict(params.size).with_nonblocking_read()
    } else {
        PortKind::strict(params.size)
    };
    // The consumer must observe empty polls to decide its branch, so the
    // non-blocking channel model keeps `nodata` visible.
    let ch1_profile = if params.nonblocking_first {
        FusionProfile::Verification
    } else {
        FusionProfile::Calibrated
    };
    let ch1 = prefix_rename(&port_model(&ch1_kind, ch1_profile, params.source)?, "c1_")?;
    let ch2 = prefix_rename(
        &port_model(
            &PortKind::strict(params.size),
            FusionProfile::Calibrated,
            params.source,
        )?,
        "c2_",
    )?;

    let p1 = producer_automaton(params.n1, "c1")?;
    let p2 = producer_automaton(params.n2, "c2")?;
    let p3 = consumer_automaton(params.n3, params.nonblocking_first)?;

    let net = ProcessNetwork::new(vec![
        ProcessInstance::new("p1", p1).with_terminal([StateId(params.n1)]),
        ProcessInstance::new("p2", p2).with_terminal([StateId(params.n2)]),
        ProcessInstance::new("p3", p3).with_terminal([StateId(4 * params.n3)]),
        ProcessInstance::new("ch1", ch1).with_all_terminal(),
        ProcessInstance::new("ch2", ch2).with_all_terminal(),
    ])?;
    // The blocking variant leaves the channel's non-blocking inputs and the
    // consumer's unused read unconnected only when models mismatch; a fully
    // closed network is still required.
    net.require_closed()?;
    Ok(net)
}

/// Shrinks case-2 loop bounds while preserving the verdict: all bounds drop
/// by the same amount, keeping their pairwise differences and their
/// relation to the buffer slack. Returns the original parameters when they
/// are already small.
pub fn compress_case2(params: &Case2Params) -> (Case2Params, bool) {
    let floor = params.size + 4;
    let min = params.n1.min(params.n2).min(params.n3);
    if min <= floor {
        return (params.clone(), false);
    }
    let d = min - floor;
    let mut reduced = params.clone();
    reduced.n1 -= d;
    reduced.n2 -= d;
    reduced.n3 -= d;
    (reduced, true)
}

// ---------------------------------------------------------------------------
// Interrupt scenario

/// The pair of identified interrupt models: the behavior as implemented and
/// the behavior as documented.
#[derive(Debug, Clone)]
pub struct InterruptComparison {
    pub actual: InterfaceAutomaton,
    pub expected: InterfaceAutomaton,
    pub actual_stats: LearnStats,
    pub expected_stats: LearnStats,
}

/// Identifies the interruptible write port in both semantic styles.
pub fn interrupt_scenario() -> Result<InterruptComparison, CaseError> {
    let learn_style = |style: InterruptStyle| -> Result<(InterfaceAutomaton, LearnStats), CaseError> {
        let kind = PortKind::standard().with_interrupt(style);
        let sul = PortSul::new(kind, FusionProfile::Calibrated)?;
        let mut teacher = SulTeacher::new(sul, EqConfig::default());
        Ok(learn_ia(&mut teacher)?)
    };
    let (actual, actual_stats) = learn_style(InterruptStyle::Actual)?;
    let (expected, expected_stats) = learn_style(InterruptStyle::Expected)?;
    Ok(InterruptComparison {
        actual,
        expected,
        actual_stats,
        expected_stats,
    })
}

impl InterruptComparison {
    /// Whether a model completes the interrupt immediately when it arrives
    /// during a blocked write: after `write, intr` the interrupt completion
    /// is observable without any further read.
    pub fn has_early_unblock(ia: &InterfaceAutomaton) -> Result<bool, AutomatonError> {
        let steps = mealy_view(ia, &[Symbol::new("write"), Symbol::new("intr")])?;
        Ok(matches!(
            steps.get(1),
            Some(ViewStep::Emitted(outs))
                if outs.iter().any(|o| o.as_str().contains("intr_done"))
        ))
    }
}
