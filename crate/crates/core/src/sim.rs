//! Deterministic simulator of publish-subscribe port components: the system
//! under learning.
//!
//! The simulator is a pure state machine over abstract messages. Each step
//! consumes one input (`write`, `read`, `read_nb`, `intr`) and either
//! refuses it (the component would block the calling thread without any
//! state change) or accepts it and emits a list of concrete completion
//! events. A fusion map then folds that list into the single abstract output
//! symbol the learner sees; the map is a declared, versioned part of the
//! harness configuration.
//!
//! Port disciplines:
//! * standard: write and read are a rendezvous; either side blocks until
//!   the other arrives, delivery and completion happen together.
//! * buffered non-strict: writes always succeed and overwrite any unread
//!   message; reads block while the buffer is empty.
//! * buffered strict: a FIFO of capacity N that never drops; writes block
//!   at a full buffer, reads block at an empty one.
//! * `read_nb` extension (buffered ports): a read that never blocks and
//!   reports `nodata` on an empty buffer.
//! * `intr` extension (standard port): interrupts the write port. In the
//!   `actual` style the interrupt waits for a write already in transfer and
//!   only unblocks future writes; in the `expected` style it also aborts
//!   the in-flight write immediately.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::ia::InterfaceAutomaton;
use crate::mealy::MealyMachine;
use crate::sul::{SulAlphabet, SulError, SulSession};
use crate::symbol::Symbol;
use crate::translate::{mealy_to_ia, TranslateOptions};

pub const INPUT_WRITE: &str = "write";
pub const INPUT_READ: &str = "read";
pub const INPUT_READ_NB: &str = "read_nb";
pub const INPUT_INTR: &str = "intr";

pub const OUT_QUIESCENCE: &str = "quiescence";
pub const OUT_BLOCKED: &str = "blocked";

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid port kind: {0}")]
    InvalidKind(String),
}

/// Which of the interrupt semantics the simulator exhibits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum InterruptStyle {
    /// As implemented: an interrupt issued during a transfer completes only
    /// after that write finishes.
    Actual,
    /// As documented: the interrupt aborts the in-flight write immediately.
    Expected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PortVariant {
    Standard,
    BufferedNonStrict,
    BufferedStrict,
}

/// Alphabet extensions a port configuration may enable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Extensions {
    pub nonblocking_read: bool,
    pub interrupt: Option<InterruptStyle>,
}

/// A validated port configuration.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PortKind {
    pub variant: PortVariant,
    /// FIFO capacity; strict variant only.
    pub capacity: Option<u32>,
    pub extensions: Extensions,
}

impl PortKind {
    pub fn standard() -> Self {
        PortKind {
            variant: PortVariant::Standard,
            capacity: None,
            extensions: Extensions::default(),
        }
    }

    pub fn nonstrict() -> Self {
        PortKind {
            variant: PortVariant::BufferedNonStrict,
            capacity: None,
            extensions: Extensions::default(),
        }
    }

    pub fn strict(capacity: u32) -> Self {
        PortKind {
            variant: PortVariant::BufferedStrict,
            capacity: Some(capacity),
            extensions: Extensions::default(),
        }
    }

    pub fn with_nonblocking_read(mut self) -> Self {
        self.extensions.nonblocking_read = true;
        self
    }

    pub fn with_interrupt(mut self, style: InterruptStyle) -> Self {
        self.extensions.interrupt = Some(style);
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        match self.variant {
            PortVariant::BufferedStrict => match self.capacity {
                Some(n) if n >= 1 => {}
                Some(_) => return Err(SimError::InvalidKind("capacity must be >= 1".into())),
                None => {
                    return Err(SimError::InvalidKind(
                        "strict buffered port needs a capacity".into(),
                    ))
                }
            },
            _ => {
                if self.capacity.is_some() {
                    return Err(SimError::InvalidKind(
                        "capacity is only meaningful for the strict buffered port".into(),
                    ));
                }
            }
        }
        if self.extensions.nonblocking_read && self.variant == PortVariant::Standard {
            return Err(SimError::InvalidKind(
                "non-blocking read is a buffered-port feature".into(),
            ));
        }
        if self.extensions.interrupt.is_some() && self.variant != PortVariant::Standard {
            return Err(SimError::InvalidKind(
                "the interrupt scenario targets the standard port".into(),
            ));
        }
        Ok(())
    }

    /// Input symbols of this configuration, sorted.
    pub fn input_symbols(&self) -> Vec<Symbol> {
        let mut v = vec![Symbol::new(INPUT_READ), Symbol::new(INPUT_WRITE)];
        if self.extensions.nonblocking_read {
            v.push(Symbol::new(INPUT_READ_NB));
        }
        if self.extensions.interrupt.is_some() {
            v.push(Symbol::new(INPUT_INTR));
        }
        v.sort();
        v
    }

    /// Short human-readable label used in reports.
    pub fn label(&self) -> String {
        let base = match self.variant {
            PortVariant::Standard => "port".to_string(),
            PortVariant::BufferedNonStrict => "buffered port (non-strict)".to_string(),
            PortVariant::BufferedStrict => format!(
                "buffered port (strict, N={})",
                self.capacity.unwrap_or(0)
            ),
        };
        let mut marks = String::new();
        if self.extensions.nonblocking_read {
            marks.push('*');
        }
        if self.extensions.interrupt.is_some() {
            marks.push('i');
        }
        format!("{base}{marks}")
    }
}

/// Concrete completion events observed by the wrapper threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PortEvent {
    WriteOk,
    ReadOk,
    NoData,
    IntrDone,
}

impl PortEvent {
    pub fn name(&self) -> &'static str {
        match self {
            PortEvent::WriteOk => "wok",
            PortEvent::ReadOk => "rok",
            PortEvent::NoData => "nodata",
            PortEvent::IntrDone => "intr_done",
        }
    }
}

/// Result of one concrete step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    /// The call would block the issuing thread with no state change; the
    /// input is not accepted here.
    Refused,
    /// The call went through; zero or more completion events were observed,
    /// in order.
    Events(Vec<PortEvent>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PortInput {
    Write,
    Read,
    ReadNb,
    Intr,
}

impl PortInput {
    fn parse(s: &Symbol) -> Option<PortInput> {
        match s.as_str() {
            INPUT_WRITE => Some(PortInput::Write),
            INPUT_READ => Some(PortInput::Read),
            INPUT_READ_NB => Some(PortInput::ReadNb),
            INPUT_INTR => Some(PortInput::Intr),
            _ => None,
        }
    }
}

/// The concrete port simulator. Messages are content-free; sequence tags
/// exist only so tests can check delivery order.
#[derive(Debug, Clone)]
pub struct PortSim {
    kind: PortKind,
    started: bool,
    /// Buffered variants: queued message tags, FIFO order.
    buffer: VecDeque<u32>,
    /// Standard variant: the tag of an accepted write still in transfer.
    pending_write: Option<u32>,
    reader_waiting: bool,
    interrupted: bool,
    intr_waiting: bool,
    next_tag: u32,
    delivered: Vec<u32>,
}

impl PortSim {
    pub fn new(kind: PortKind) -> Result<Self, SimError> {
        kind.validate()?;
        Ok(PortSim {
            kind,
            started: false,
            buffer: VecDeque::new(),
            pending_write: None,
            reader_waiting: false,
            interrupted: false,
            intr_waiting: false,
            next_tag: 0,
            delivered: Vec::new(),
        })
    }

    pub fn kind(&self) -> &PortKind {
        &self.kind
    }

    /// Tags delivered to the reader so far, in delivery order.
    pub fn delivered_tags(&self) -> &[u32] {
        &self.delivered
    }

    /// Current number of buffered (unread) messages.
    pub fn buffered_len(&self) -> usize {
        self.buffer.len() + usize::from(self.pending_write.is_some())
    }

    /// Releases all resources and reinitializes; tags restart at zero so
    /// behavior after a reset is identical to a fresh session.
    pub fn reset(&mut self) {
        self.started = true;
        self.buffer.clear();
        self.pending_write = None;
        self.reader_waiting = false;
        self.interrupted = false;
        self.intr_waiting = false;
        self.next_tag = 0;
        self.delivered.clear();
    }

    /// Control-state key, ignoring message tags. Two sims with equal keys
    /// behave identically on all futures.
    fn control_key(&self) -> (usize, bool, bool, bool, bool) {
        (
            self.buffer.len(),
            self.pending_write.is_some(),
            self.reader_waiting,
            self.interrupted,
            self.intr_waiting,
        )
    }

    fn fresh_tag(&mut self) -> u32 {
        let t = self.next_tag;
        self.next_tag += 1;
        t
    }

    fn deliver(&mut self, tag: u32) {
        self.delivered.push(tag);
    }

    fn step_input(&mut self, input: PortInput) -> Result<StepOutcome, SulError> {
        if !self.started {
            return Err(SulError::NotReset);
        }
        let outcome = match (self.kind.variant, input) {
            (PortVariant::Standard, PortInput::Write) => {
                if self.interrupted {
                    // Future writes return without blocking; nothing is
                    // transferred on an interrupted port.
                    StepOutcome::Events(vec![PortEvent::WriteOk])
                } else if self.pending_write.is_some() {
                    StepOutcome::Refused
                } else if self.reader_waiting {
                    let tag = self.fresh_tag();
                    self.deliver(tag);
                    self.reader_waiting = false;
                    StepOutcome::Events(vec![PortEvent::WriteOk, PortEvent::ReadOk])
                } else {
                    let tag = self.fresh_tag();
                    self.pending_write = Some(tag);
                    StepOutcome::Events(vec![])
                }
            }
            (PortVariant::Standard, PortInput::Read) => {
                if self.reader_waiting {
                    StepOutcome::Refused
                } else if let Some(tag) = self.pending_write.take() {
                    self.deliver(tag);
                    let mut events = vec![PortEvent::ReadOk, PortEvent::WriteOk];
                    if self.intr_waiting {
                        // The interrupt was waiting for this transfer to
                        // finish; it completes now.
                        self.intr_waiting = false;
                        self.interrupted = true;
                        events.push(PortEvent::IntrDone);
                    }
                    StepOutcome::Events(events)
                } else {
                    self.reader_waiting = true;
                    StepOutcome::Events(vec![])
                }
            }
            (PortVariant::Standard, PortInput::Intr) => {
                if self.intr_waiting {
                    StepOutcome::Refused
                } else if self.interrupted {
                    StepOutcome::Events(vec![PortEvent::IntrDone])
                } else if self.pending_write.is_some() {
                    match self.kind.extensions.interrupt {
                        Some(InterruptStyle::Actual) => {
                            self.intr_waiting = true;
                            StepOutcome::Events(vec![])
                        }
                        Some(InterruptStyle::Expected) => {
                            self.pending_write = None;
                            self.interrupted = true;
                            StepOutcome::Events(vec![PortEvent::WriteOk, PortEvent::IntrDone])
                        }
                        None => unreachable!("intr parsed only when enabled"),
                    }
                } else {
                    self.interrupted = true;
                    StepOutcome::Events(vec![PortEvent::IntrDone])
                }
            }
            (PortVariant::BufferedNonStrict, PortInput::Write) => {
                let tag = self.fresh_tag();
                if self.reader_waiting {
                    self.deliver(tag);
                    self.reader_waiting = false;
                    StepOutcome::Events(vec![PortEvent::WriteOk, PortEvent::ReadOk])
                } else {
                    // Keeps the most recent message only.
                    self.buffer.clear();
                    self.buffer.push_back(tag);
                    StepOutcome::Events(vec![PortEvent::WriteOk])
                }
            }
            (PortVariant::BufferedStrict, PortInput::Write) => {
                let capacity = self.kind.capacity.unwrap() as usize;
                if self.reader_waiting {
                    let tag = self.fresh_tag();
                    self.deliver(tag);
                    self.reader_waiting = false;
                    StepOutcome::Events(vec![PortEvent::WriteOk, PortEvent::ReadOk])
                } else if self.buffer.len() < capacity {
                    let tag = self.fresh_tag();
                    self.buffer.push_back(tag);
                    StepOutcome::Events(vec![PortEvent::WriteOk])
                } else {
                    StepOutcome::Refused
                }
            }
            (
                PortVariant::BufferedNonStrict | PortVariant::BufferedStrict,
                PortInput::Read,
            ) => {
                if self.reader_waiting {
                    StepOutcome::Refused
                } else if let Some(tag) = self.buffer.pop_front() {
                    self.deliver(tag);
                    StepOutcome::Events(vec![PortEvent::ReadOk])
                } else {
                    self.reader_waiting = true;
                    StepOutcome::Events(vec![])
                }
            }
            (
                PortVariant::BufferedNonStrict | PortVariant::BufferedStrict,
                PortInput::ReadNb,
            ) => {
                if self.reader_waiting {
                    StepOutcome::Refused
                } else if let Some(tag) = self.buffer.pop_front() {
                    self.deliver(tag);
                    StepOutcome::Events(vec![PortEvent::ReadOk])
                } else {
                    StepOutcome::Events(vec![PortEvent::NoData])
                }
            }
            _ => {
                return Err(SulError::Protocol(format!(
                    "input not meaningful for this port variant: {input:?}"
                )))
            }
        };
        debug_assert!(
            !(self.reader_waiting && (self.pending_write.is_some() || !self.buffer.is_empty())),
            "a waiting reader implies nothing deliverable"
        );
        if let Some(n) = self.kind.capacity {
            debug_assert!(self.buffer.len() <= n as usize);
        }
        Ok(outcome)
    }
}

/// Named, versioned mapping from concrete step outcomes to abstract output
/// symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FusionProfile {
    /// Every event list is rendered literally; refusals look like
    /// quiescence, as a human probing the component would see them.
    Raw,
    /// The identification profile: write acknowledgments and empty
    /// non-blocking reads are folded into quiescence, deliveries fuse into a
    /// single `rok`, refusals carry the reserved `blocked` output so the
    /// translation drops those inputs.
    Calibrated,
    /// Like `Calibrated` but `nodata` stays observable, which composed code
    /// models need to branch on empty non-blocking reads.
    Verification,
}

impl FusionProfile {
    pub fn name(&self) -> &'static str {
        match self {
            FusionProfile::Raw => "raw-v1",
            FusionProfile::Calibrated => "calibrated-v1",
            FusionProfile::Verification => "verification-v1",
        }
    }

    pub fn parse(s: &str) -> Option<FusionProfile> {
        match s.trim_end_matches("-v1") {
            "raw" => Some(FusionProfile::Raw),
            "calibrated" => Some(FusionProfile::Calibrated),
            "verification" => Some(FusionProfile::Verification),
            _ => None,
        }
    }

    /// The reserved refusal output, when the profile distinguishes refusals
    /// from quiescence.
    pub fn refusal_symbol(&self) -> Option<Symbol> {
        match self {
            FusionProfile::Raw => None,
            _ => Some(Symbol::new(OUT_BLOCKED)),
        }
    }

    /// Folds one concrete outcome into the abstract output symbol.
    pub fn abstract_output(&self, outcome: &StepOutcome) -> Symbol {
        let quiescence = Symbol::new(OUT_QUIESCENCE);
        match outcome {
            StepOutcome::Refused => self
                .refusal_symbol()
                .unwrap_or(quiescence),
            StepOutcome::Events(events) => {
                let kept: Vec<&'static str> = match self {
                    FusionProfile::Raw => events.iter().map(PortEvent::name).collect(),
                    FusionProfile::Calibrated => events
                        .iter()
                        .filter(|e| !matches!(e, PortEvent::WriteOk | PortEvent::NoData))
                        .map(PortEvent::name)
                        .collect(),
                    FusionProfile::Verification => events
                        .iter()
                        .filter(|e| !matches!(e, PortEvent::WriteOk))
                        .map(PortEvent::name)
                        .collect(),
                };
                if kept.is_empty() {
                    quiescence
                } else {
                    Symbol::new(kept.join("+"))
                }
            }
        }
    }
}

/// A port simulator wrapped with a fusion map: the session the learner
/// drives.
#[derive(Debug, Clone)]
pub struct PortSul {
    sim: PortSim,
    profile: FusionProfile,
    alphabet: SulAlphabet,
}

impl PortSul {
    pub fn new(kind: PortKind, profile: FusionProfile) -> Result<Self, SimError> {
        let sim = PortSim::new(kind.clone())?;
        let alphabet = discover_alphabet(&kind, profile)?;
        Ok(PortSul {
            sim,
            profile,
            alphabet,
        })
    }

    pub fn kind(&self) -> &PortKind {
        &self.sim.kind
    }

    pub fn profile(&self) -> FusionProfile {
        self.profile
    }

    pub fn sim(&self) -> &PortSim {
        &self.sim
    }
}

impl SulSession for PortSul {
    fn alphabet(&self) -> &SulAlphabet {
        &self.alphabet
    }

    fn reset(&mut self) -> Result<(), SulError> {
        self.sim.reset();
        Ok(())
    }

    fn step(&mut self, input: &Symbol) -> Result<Symbol, SulError> {
        let parsed = PortInput::parse(input)
            .filter(|_| self.alphabet.inputs.contains(input))
            .ok_or_else(|| SulError::UnknownSymbol(input.clone()))?;
        let outcome = self.sim.step_input(parsed)?;
        Ok(self.profile.abstract_output(&outcome))
    }
}

/// Builds a session for a port configuration. Raw fusion: outputs are the
/// literal completion events.
pub fn make_port(kind: PortKind) -> Result<PortSul, SimError> {
    PortSul::new(kind, FusionProfile::Raw)
}

/// Exhaustively enumerates the abstract behavior of a port configuration
/// under a fusion profile, as a Mealy machine over control states. This is
/// the reference semantics: independent of any learning, derived directly
/// from the simulator by breadth-first exploration.
pub fn exhaustive_port_mealy(
    kind: &PortKind,
    profile: FusionProfile,
) -> Result<MealyMachine, SimError> {
    let inputs = kind.input_symbols();
    let mut seed = PortSim::new(kind.clone())?;
    seed.reset();

    let mut index: BTreeMap<(usize, bool, bool, bool, bool), u32> = BTreeMap::new();
    let mut reps: Vec<PortSim> = Vec::new();
    let mut table: Vec<Vec<(Symbol, u32)>> = Vec::new();
    index.insert(seed.control_key(), 0);
    reps.push(seed);

    let mut frontier = vec![0u32];
    while let Some(q) = frontier.pop() {
        let mut row = Vec::with_capacity(inputs.len());
        for i in &inputs {
            let mut sim = reps[q as usize].clone();
            let parsed = PortInput::parse(i).expect("input symbols are parseable");
            let outcome = sim.step_input(parsed).expect("sim already reset");
            let out = profile.abstract_output(&outcome);
            let key = sim.control_key();
            let next = match index.get(&key) {
                Some(&id) => id,
                None => {
                    let id = reps.len() as u32;
                    index.insert(key, id);
                    reps.push(sim);
                    frontier.push(id);
                    id
                }
            };
            row.push((out, next));
        }
        while table.len() <= q as usize {
            table.push(Vec::new());
        }
        table[q as usize] = row;
    }

    let outputs: BTreeSet<Symbol> = table
        .iter()
        .flatten()
        .map(|(o, _)| o.clone())
        .collect();
    let quiescence = Symbol::new(OUT_QUIESCENCE);
    let inputs_for_lookup = inputs.clone();
    Ok(MealyMachine::new(
        inputs,
        outputs,
        quiescence,
        table.len() as u32,
        0,
        |q, i| {
            let idx = inputs_for_lookup.iter().position(|s| s == i).unwrap();
            table[q as usize][idx].clone()
        },
    )
    .expect("exploration yields a complete machine"))
}

/// The abstract alphabet of a port configuration under a profile,
/// discovered by exhaustive exploration.
pub fn discover_alphabet(
    kind: &PortKind,
    profile: FusionProfile,
) -> Result<SulAlphabet, SimError> {
    let machine = exhaustive_port_mealy(kind, profile)?;
    Ok(SulAlphabet::new(
        kind.input_symbols(),
        machine.outputs().iter().cloned(),
        Symbol::new(OUT_QUIESCENCE),
        profile.refusal_symbol(),
    ))
}

/// The reference interface automaton of a port configuration: the minimized
/// exhaustive machine pushed through the translation. Learning the same
/// configuration must produce an isomorphic automaton.
pub fn reference_port_ia(
    kind: &PortKind,
    profile: FusionProfile,
) -> Result<InterfaceAutomaton, SimError> {
    let machine = exhaustive_port_mealy(kind, profile)?.minimize();
    Ok(mealy_to_ia(
        &machine,
        &TranslateOptions {
            refusal: profile.refusal_symbol(),
        },
    )
    .expect("translation of a valid machine succeeds"))
}
