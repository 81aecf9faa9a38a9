//! Interface automata: states, input/output actions and a labelled
//! transition relation.
//!
//! An automaton here is a quintuple of input actions, output actions, states,
//! an initial state and a transition relation. Inputs are environment-driven
//! and written `?a`, outputs are system-driven and written `!a`. States carry
//! opaque integer identities; pretty names are metadata only and never affect
//! comparison or hashing.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::symbol::Symbol;

#[derive(Debug, Error)]
pub enum AutomatonError {
    #[error("action signature invalid: {0}")]
    BadSignature(String),
    #[error("unknown state id {0}")]
    UnknownState(u32),
    #[error("unknown action symbol `{0}`")]
    UnknownAction(Symbol),
    #[error("automaton is not deterministic: state {state} has {count} successors under `{action}`")]
    NotDeterministic {
        state: u32,
        action: Symbol,
        count: usize,
    },
    #[error("automata have different action signatures")]
    SignatureMismatch,
    #[error("renaming is not injective: `{0}` and `{1}` map to the same symbol")]
    RenameCollision(Symbol, Symbol),
}

/// Whether an action is consumed or produced by the automaton.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    Input,
    Output,
}

/// The input and output action sets of an automaton. The two sets are
/// disjoint and at least one action must exist. Either side may be empty on
/// its own: an all-quiescent machine translates into an automaton with only
/// input transitions, and a pure producer process has only outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSignature {
    inputs: BTreeSet<Symbol>,
    outputs: BTreeSet<Symbol>,
}

impl ActionSignature {
    pub fn new<I, O>(inputs: I, outputs: O) -> Result<Self, AutomatonError>
    where
        I: IntoIterator<Item = Symbol>,
        O: IntoIterator<Item = Symbol>,
    {
        let inputs: BTreeSet<Symbol> = inputs.into_iter().collect();
        let outputs: BTreeSet<Symbol> = outputs.into_iter().collect();
        if inputs.is_empty() && outputs.is_empty() {
            return Err(AutomatonError::BadSignature("no actions at all".into()));
        }
        for s in inputs.iter().chain(outputs.iter()) {
            if !s.is_well_formed() {
                return Err(AutomatonError::BadSignature(format!(
                    "symbol `{s}` is empty or contains whitespace"
                )));
            }
        }
        if let Some(s) = inputs.intersection(&outputs).next() {
            return Err(AutomatonError::BadSignature(format!(
                "`{s}` is both an input and an output"
            )));
        }
        Ok(ActionSignature { inputs, outputs })
    }

    pub fn inputs(&self) -> &BTreeSet<Symbol> {
        &self.inputs
    }

    pub fn outputs(&self) -> &BTreeSet<Symbol> {
        &self.outputs
    }

    pub fn kind_of(&self, action: &Symbol) -> Option<ActionKind> {
        if self.inputs.contains(action) {
            Some(ActionKind::Input)
        } else if self.outputs.contains(action) {
            Some(ActionKind::Output)
        } else {
            None
        }
    }

    pub fn contains(&self, action: &Symbol) -> bool {
        self.kind_of(action).is_some()
    }

    /// Renders an action with its direction prefix: `?a` for inputs,
    /// `!a` for outputs.
    pub fn decorate(&self, action: &Symbol) -> String {
        match self.kind_of(action) {
            Some(ActionKind::Input) => format!("?{action}"),
            Some(ActionKind::Output) => format!("!{action}"),
            None => action.to_string(),
        }
    }
}

/// Opaque state identity. Ids are dense: an automaton with `n` states uses
/// ids `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u32);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite alternating sequence of states and actions, starting and ending
/// in a state: `q0, a0, q1, ..., qn`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionFragment {
    pub states: Vec<StateId>,
    pub actions: Vec<Symbol>,
}

impl ExecutionFragment {
    pub fn first(&self) -> StateId {
        self.states[0]
    }

    pub fn last(&self) -> StateId {
        *self.states.last().expect("fragment has at least one state")
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Result of running an action sequence from the initial state of a
/// deterministic automaton. An undefined step is not an error; callers use
/// the failing index for conformance checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunOutcome {
    Complete(ExecutionFragment),
    /// The longest legal prefix, plus the index of the action that had no
    /// transition.
    Stuck {
        fragment: ExecutionFragment,
        failed_index: usize,
    },
}

#[derive(Debug, Clone)]
pub struct InterfaceAutomaton {
    signature: ActionSignature,
    state_count: u32,
    initial: StateId,
    names: Vec<String>,
    /// Sorted transition triples; the canonical representation.
    transitions: BTreeSet<(StateId, Symbol, StateId)>,
    /// Adjacency index derived from `transitions`.
    adj: BTreeMap<(StateId, Symbol), BTreeSet<StateId>>,
}

impl InterfaceAutomaton {
    /// Builds and validates an automaton. Every transition endpoint must be a
    /// known state and every label a signature action.
    pub fn new(
        signature: ActionSignature,
        state_count: u32,
        initial: StateId,
        transitions: impl IntoIterator<Item = (StateId, Symbol, StateId)>,
    ) -> Result<Self, AutomatonError> {
        if state_count == 0 {
            return Err(AutomatonError::BadSignature("no states".into()));
        }
        if initial.0 >= state_count {
            return Err(AutomatonError::UnknownState(initial.0));
        }
        let transitions: BTreeSet<(StateId, Symbol, StateId)> = transitions.into_iter().collect();
        let mut adj: BTreeMap<(StateId, Symbol), BTreeSet<StateId>> = BTreeMap::new();
        for (from, label, to) in &transitions {
            if from.0 >= state_count {
                return Err(AutomatonError::UnknownState(from.0));
            }
            if to.0 >= state_count {
                return Err(AutomatonError::UnknownState(to.0));
            }
            if !signature.contains(label) {
                return Err(AutomatonError::UnknownAction(label.clone()));
            }
            adj.entry((*from, label.clone())).or_default().insert(*to);
        }
        let names = (0..state_count).map(|i| format!("q{i}")).collect();
        Ok(InterfaceAutomaton {
            signature,
            state_count,
            initial,
            names,
            transitions,
            adj,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len() as u32, self.state_count);
        self.names = names;
        self
    }

    pub fn signature(&self) -> &ActionSignature {
        &self.signature
    }

    pub fn state_count(&self) -> u32 {
        self.state_count
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.state_count).map(StateId)
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn name_of(&self, q: StateId) -> &str {
        &self.names[q.0 as usize]
    }

    pub fn transitions(&self) -> impl Iterator<Item = &(StateId, Symbol, StateId)> {
        self.transitions.iter()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    fn check_state(&self, q: StateId) -> Result<(), AutomatonError> {
        if q.0 >= self.state_count {
            return Err(AutomatonError::UnknownState(q.0));
        }
        Ok(())
    }

    /// The next-state set: all states reachable from `q` in one step
    /// labelled `a`.
    pub fn next_states(&self, q: StateId, a: &Symbol) -> Result<BTreeSet<StateId>, AutomatonError> {
        self.check_state(q)?;
        if !self.signature.contains(a) {
            return Err(AutomatonError::UnknownAction(a.clone()));
        }
        Ok(self
            .adj
            .get(&(q, a.clone()))
            .cloned()
            .unwrap_or_default())
    }

    /// Actions with at least one transition out of `q`.
    pub fn enabled(&self, q: StateId) -> BTreeSet<Symbol> {
        self.adj
            .range((q, Symbol::new(""))..(StateId(q.0 + 1), Symbol::new("")))
            .filter(|(_, tos)| !tos.is_empty())
            .map(|((_, a), _)| a.clone())
            .collect()
    }

    /// The set of output actions enabled in `q`. A state is quiescent
    /// exactly when this set is empty.
    pub fn observable_out(&self, q: StateId) -> Result<BTreeSet<Symbol>, AutomatonError> {
        self.check_state(q)?;
        Ok(self
            .enabled(q)
            .into_iter()
            .filter(|a| self.signature.kind_of(a) == Some(ActionKind::Output))
            .collect())
    }

    pub fn is_quiescent(&self, q: StateId) -> Result<bool, AutomatonError> {
        Ok(self.observable_out(q)?.is_empty())
    }

    /// Checks that every (state, action) pair has at most one successor.
    pub fn is_deterministic(&self) -> bool {
        self.adj.values().all(|tos| tos.len() <= 1)
    }

    pub fn require_deterministic(&self) -> Result<(), AutomatonError> {
        for ((q, a), tos) in &self.adj {
            if tos.len() > 1 {
                return Err(AutomatonError::NotDeterministic {
                    state: q.0,
                    action: a.clone(),
                    count: tos.len(),
                });
            }
        }
        Ok(())
    }

    /// Runs an action sequence from the initial state of a deterministic
    /// automaton, returning either the full fragment or the longest legal
    /// prefix and the failing index.
    pub fn run_fragment(&self, actions: &[Symbol]) -> Result<RunOutcome, AutomatonError> {
        self.require_deterministic()?;
        let mut states = vec![self.initial];
        let mut taken = Vec::new();
        for (i, a) in actions.iter().enumerate() {
            let here = *states.last().unwrap();
            let next = self.next_states(here, a)?;
            match next.iter().next() {
                Some(&to) => {
                    states.push(to);
                    taken.push(a.clone());
                }
                None => {
                    return Ok(RunOutcome::Stuck {
                        fragment: ExecutionFragment {
                            states,
                            actions: taken,
                        },
                        failed_index: i,
                    });
                }
            }
        }
        Ok(RunOutcome::Complete(ExecutionFragment {
            states,
            actions: taken,
        }))
    }

    /// States reachable from the initial state, in BFS discovery order.
    pub fn reachable(&self) -> Vec<StateId> {
        let mut seen = vec![false; self.state_count as usize];
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        seen[self.initial.0 as usize] = true;
        queue.push_back(self.initial);
        while let Some(q) = queue.pop_front() {
            order.push(q);
            for a in self.enabled(q) {
                for &to in &self.adj[&(q, a.clone())] {
                    if !seen[to.0 as usize] {
                        seen[to.0 as usize] = true;
                        queue.push_back(to);
                    }
                }
            }
        }
        order
    }

    /// Restricts the automaton to its reachable part, renumbering states in
    /// BFS discovery order.
    pub fn trim(&self) -> InterfaceAutomaton {
        let order = self.reachable();
        let mut remap = BTreeMap::new();
        for (i, q) in order.iter().enumerate() {
            remap.insert(*q, StateId(i as u32));
        }
        let transitions: BTreeSet<_> = self
            .transitions
            .iter()
            .filter_map(|(f, a, t)| {
                Some((*remap.get(f)?, a.clone(), *remap.get(t)?))
            })
            .collect();
        let names = order.iter().map(|q| self.names[q.0 as usize].clone()).collect();
        InterfaceAutomaton::new(
            self.signature.clone(),
            order.len() as u32,
            remap[&self.initial],
            transitions,
        )
        .expect("trim preserves validity")
        .with_names(names)
    }

    /// Applies a symbol renaming to the whole alphabet. Symbols absent from
    /// the map keep their name. The map must not merge two actions.
    pub fn rename(&self, map: &BTreeMap<Symbol, Symbol>) -> Result<InterfaceAutomaton, AutomatonError> {
        let rename = |s: &Symbol| map.get(s).cloned().unwrap_or_else(|| s.clone());
        let all: Vec<Symbol> = self
            .signature
            .inputs()
            .iter()
            .chain(self.signature.outputs().iter())
            .cloned()
            .collect();
        let mut seen: BTreeMap<Symbol, Symbol> = BTreeMap::new();
        for s in &all {
            let r = rename(s);
            if let Some(prev) = seen.insert(r, s.clone()) {
                return Err(AutomatonError::RenameCollision(prev, s.clone()));
            }
        }
        let signature = ActionSignature::new(
            self.signature.inputs().iter().map(&rename),
            self.signature.outputs().iter().map(&rename),
        )?;
        let transitions = self
            .transitions
            .iter()
            .map(|(f, a, t)| (*f, rename(a), *t));
        Ok(InterfaceAutomaton::new(
            signature,
            self.state_count,
            self.initial,
            transitions,
        )?
        .with_names(self.names.clone()))
    }

    /// Merges behaviorally equivalent states of a deterministic automaton,
    /// treating inputs and outputs uniformly as edge labels. Partition
    /// refinement: the initial partition groups states by enabled-label set,
    /// refinement splits by per-label successor block until stable. The
    /// result is restricted to reachable states and canonically numbered.
    pub fn minimize(&self) -> Result<InterfaceAutomaton, AutomatonError> {
        self.require_deterministic()?;
        let trimmed = self.trim();
        let n = trimmed.state_count as usize;
        let labels: Vec<Symbol> = trimmed
            .signature
            .inputs()
            .iter()
            .chain(trimmed.signature.outputs().iter())
            .cloned()
            .collect();

        // block[q] = index of q's current partition block
        let mut block: Vec<usize> = {
            let mut sig_to_block: BTreeMap<BTreeSet<Symbol>, usize> = BTreeMap::new();
            let mut blocks = Vec::with_capacity(n);
            for q in trimmed.states() {
                let sig = trimmed.enabled(q);
                let next = sig_to_block.len();
                blocks.push(*sig_to_block.entry(sig).or_insert(next));
            }
            blocks
        };

        loop {
            let mut sig_to_block: BTreeMap<(usize, Vec<Option<usize>>), usize> = BTreeMap::new();
            let mut next_block = vec![0usize; n];
            for q in trimmed.states() {
                let succ_sig: Vec<Option<usize>> = labels
                    .iter()
                    .map(|a| {
                        trimmed.adj.get(&(q, a.clone())).and_then(|tos| {
                            tos.iter().next().map(|t| block[t.0 as usize])
                        })
                    })
                    .collect();
                let key = (block[q.0 as usize], succ_sig);
                let fresh = sig_to_block.len();
                next_block[q.0 as usize] = *sig_to_block.entry(key).or_insert(fresh);
            }
            // Keying on the old block means refinement only ever splits, so
            // an unchanged block count is a fixpoint.
            let stable =
                sig_to_block.len() == block.iter().collect::<BTreeSet<_>>().len();
            block = next_block;
            if stable {
                break;
            }
        }

        // Renumber blocks in BFS order from the initial block for a canonical
        // result.
        let block_of = |q: StateId| block[q.0 as usize];
        let mut repr: BTreeMap<usize, StateId> = BTreeMap::new();
        for q in trimmed.states() {
            repr.entry(block_of(q)).or_insert(q);
        }
        let mut numbering: BTreeMap<usize, u32> = BTreeMap::new();
        let mut queue = VecDeque::new();
        numbering.insert(block_of(trimmed.initial), 0);
        queue.push_back(block_of(trimmed.initial));
        while let Some(b) = queue.pop_front() {
            let q = repr[&b];
            for a in &labels {
                if let Some(tos) = trimmed.adj.get(&(q, a.clone())) {
                    if let Some(&to) = tos.iter().next() {
                        let tb = block_of(to);
                        if !numbering.contains_key(&tb) {
                            numbering.insert(tb, numbering.len() as u32);
                            queue.push_back(tb);
                        }
                    }
                }
            }
        }

        let transitions: BTreeSet<_> = trimmed
            .transitions
            .iter()
            .map(|(f, a, t)| {
                (
                    StateId(numbering[&block_of(*f)]),
                    a.clone(),
                    StateId(numbering[&block_of(*t)]),
                )
            })
            .collect();
        InterfaceAutomaton::new(
            trimmed.signature.clone(),
            numbering.len() as u32,
            StateId(0),
            transitions,
        )
    }

    /// Finds the unique label-preserving bijection between the reachable
    /// states of two deterministic automata that maps initial state to
    /// initial state, or `None` if the automata are not isomorphic.
    pub fn isomorphic(
        &self,
        other: &InterfaceAutomaton,
    ) -> Result<Option<BTreeMap<StateId, StateId>>, AutomatonError> {
        self.require_deterministic()?;
        other.require_deterministic()?;
        if self.signature != other.signature {
            return Err(AutomatonError::SignatureMismatch);
        }
        let a = self.trim();
        let b = other.trim();
        if a.state_count != b.state_count || a.transitions.len() != b.transitions.len() {
            return Ok(None);
        }
        let mut map: BTreeMap<StateId, StateId> = BTreeMap::new();
        let mut rmap: BTreeMap<StateId, StateId> = BTreeMap::new();
        let mut queue = VecDeque::new();
        map.insert(a.initial, b.initial);
        rmap.insert(b.initial, a.initial);
        queue.push_back((a.initial, b.initial));
        while let Some((qa, qb)) = queue.pop_front() {
            if a.enabled(qa) != b.enabled(qb) {
                return Ok(None);
            }
            for label in a.enabled(qa) {
                let ta = *a.adj[&(qa, label.clone())].iter().next().unwrap();
                let tb = *b.adj[&(qb, label.clone())].iter().next().unwrap();
                match (map.get(&ta), rmap.get(&tb)) {
                    (None, None) => {
                        map.insert(ta, tb);
                        rmap.insert(tb, ta);
                        queue.push_back((ta, tb));
                    }
                    (Some(&mapped), _) if mapped == tb => {}
                    _ => return Ok(None),
                }
            }
        }
        // Translate back to the untrimmed automata: trim() renumbers, so the
        // mapping is expressed on trimmed ids; recompute on originals.
        let order_a = self.reachable();
        let order_b = other.reachable();
        let mut result = BTreeMap::new();
        for (qa, qb) in &map {
            result.insert(order_a[qa.0 as usize], order_b[qb.0 as usize]);
        }
        Ok(Some(result))
    }
}
