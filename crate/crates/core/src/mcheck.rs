//! Explicit-state verification of automata networks.
//!
//! A network composes interface automata under asynchronous interleaving.
//! An action shared between exactly one emitter (output) and one receiver
//! (input) fires as a single joint step; an output known to only one process
//! interleaves on its own; an input with no emitter can never fire in the
//! closed network. The reachability graph is explored on the fly, depth
//! first by default, looking for composite states with no successors in
//! which some process sits outside its terminal marking.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rustc_hash::{FxHashMap, FxHashSet};
use smallvec::SmallVec;
use thiserror::Error;

use crate::ia::{InterfaceAutomaton, StateId};
use crate::symbol::Symbol;

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("action `{0}` has more than one emitting process")]
    TwoEmitters(Symbol),
    #[error("action `{0}` has more than one receiving process")]
    TwoReceivers(Symbol),
    #[error("action `{0}` of process `{1}` has no communication partner")]
    UnmatchedAction(Symbol, String),
    #[error("composite state needs {0} bits, the packed search supports 64")]
    StateSpaceTooWide(u32),
    #[error("composite state has wrong arity or an out-of-range component")]
    MalformedState,
}

/// One automaton in a network, with its legitimate completion states.
#[derive(Debug, Clone)]
pub struct ProcessInstance {
    pub name: String,
    pub automaton: InterfaceAutomaton,
    /// States counting as normal completion; a global state in which every
    /// process is terminal is quiescent, not deadlocked.
    pub terminal: Vec<StateId>,
}

impl ProcessInstance {
    pub fn new(name: impl Into<String>, automaton: InterfaceAutomaton) -> Self {
        ProcessInstance {
            name: name.into(),
            automaton,
            terminal: Vec::new(),
        }
    }

    pub fn with_terminal(mut self, terminal: impl IntoIterator<Item = StateId>) -> Self {
        self.terminal = terminal.into_iter().collect();
        self
    }

    /// Marks every state as legitimate completion. The idiom for passive
    /// infrastructure such as channel models: they idle wherever the code
    /// processes leave them and never owe further progress.
    pub fn with_all_terminal(mut self) -> Self {
        self.terminal = self.automaton.states().collect();
        self
    }

    /// True when every state is a terminal marking.
    pub fn always_terminal(&self) -> bool {
        self.terminal.len() as u32 == self.automaton.state_count()
    }
}

/// A tuple of per-process local states.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompositeState(pub SmallVec<[u32; 8]>);

impl CompositeState {
    pub fn components(&self) -> &[u32] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ActionClass {
    /// Output of `emitter` synchronized with the same-named input of
    /// `receiver`; fires jointly.
    Sync { emitter: u32, receiver: u32 },
    /// Output known to a single process; interleaves alone.
    Solo { owner: u32 },
    /// Input with no emitter in this closed network; never fires.
    Dead,
}

struct CompiledProcess {
    terminal: Vec<bool>,
    /// Per local state, sorted by action id: (action, targets).
    by_state: Vec<Vec<(u32, SmallVec<[u32; 2]>)>>,
}

/// A validated, compiled network of processes.
pub struct ProcessNetwork {
    processes: Vec<ProcessInstance>,
    actions: Vec<Symbol>,
    classes: Vec<ActionClass>,
    compiled: Vec<CompiledProcess>,
    bits: Vec<u32>,
    shifts: Vec<u32>,
}

impl ProcessNetwork {
    pub fn new(processes: Vec<ProcessInstance>) -> Result<Self, ComposeError> {
        // Global action table, sorted for deterministic ids.
        let mut names: Vec<Symbol> = processes
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
        names.sort();
        names.dedup();
        let id_of: BTreeMap<Symbol, u32> = names
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();

        let mut emitters: Vec<Vec<u32>> = vec![Vec::new(); names.len()];
        let mut receivers: Vec<Vec<u32>> = vec![Vec::new(); names.len()];
        for (pi, p) in processes.iter().enumerate() {
            for o in p.automaton.signature().outputs() {
                emitters[id_of[o] as usize].push(pi as u32);
            }
            for i in p.automaton.signature().inputs() {
                receivers[id_of[i] as usize].push(pi as u32);
            }
        }
        let mut classes = Vec::with_capacity(names.len());
        for (aid, name) in names.iter().enumerate() {
            if emitters[aid].len() > 1 {
                return Err(ComposeError::TwoEmitters(name.clone()));
            }
            if receivers[aid].len() > 1 {
                return Err(ComposeError::TwoReceivers(name.clone()));
            }
            let class = match (emitters[aid].first(), receivers[aid].first()) {
                (Some(&e), Some(&r)) => ActionClass::Sync {
                    emitter: e,
                    receiver: r,
                },
                (Some(&e), None) => ActionClass::Solo { owner: e },
                (None, _) => ActionClass::Dead,
            };
            classes.push(class);
        }

        let compiled = processes
            .iter()
            .map(|p| {
                let n = p.automaton.state_count() as usize;
                let mut by_state: Vec<Vec<(u32, SmallVec<[u32; 2]>)>> = vec![Vec::new(); n];
                for (from, label, to) in p.automaton.transitions() {
                    let aid = id_of[label];
                    let row = &mut by_state[from.0 as usize];
                    match row.iter_mut().find(|(a, _)| *a == aid) {
                        Some((_, targets)) => targets.push(to.0),
                        None => row.push((aid, SmallVec::from_slice(&[to.0]))),
                    }
                }
                for row in &mut by_state {
                    row.sort_by_key(|(a, _)| *a);
                    for (_, targets) in row.iter_mut() {
                        targets.sort_unstable();
                    }
                }
                let mut terminal = vec![false; n];
                for t in &p.terminal {
                    terminal[t.0 as usize] = true;
                }
                CompiledProcess { terminal, by_state }
            })
            .collect();

        let bits: Vec<u32> = processes
            .iter()
            .map(|p| 32 - (p.automaton.state_count().max(2) - 1).leading_zeros())
            .collect();
        let total: u32 = bits.iter().sum();
        if total > 64 {
            return Err(ComposeError::StateSpaceTooWide(total));
        }
        let mut shifts = Vec::with_capacity(bits.len());
        let mut acc = 0;
        for b in &bits {
            shifts.push(acc);
            acc += b;
        }

        Ok(ProcessNetwork {
            processes,
            actions: names,
            classes,
            compiled,
            bits,
            shifts,
        })
    }

    /// Checks that every output action has a receiver, which is what a
    /// closed case-study network requires. Fails naming the first
    /// unmatched action.
    pub fn require_closed(&self) -> Result<(), ComposeError> {
        for (aid, class) in self.classes.iter().enumerate() {
            if let ActionClass::Solo { owner } = class {
                return Err(ComposeError::UnmatchedAction(
                    self.actions[aid].clone(),
                    self.processes[*owner as usize].name.clone(),
                ));
            }
        }
        Ok(())
    }

    pub fn processes(&self) -> &[ProcessInstance] {
        &self.processes
    }

    pub fn initial_state(&self) -> CompositeState {
        CompositeState(
            self.processes
                .iter()
                .map(|p| p.automaton.initial().0)
                .collect(),
        )
    }

    fn check_state(&self, s: &CompositeState) -> Result<(), ComposeError> {
        if s.0.len() != self.processes.len() {
            return Err(ComposeError::MalformedState);
        }
        for (pi, &q) in s.0.iter().enumerate() {
            if q >= self.processes[pi].automaton.state_count() {
                return Err(ComposeError::MalformedState);
            }
        }
        Ok(())
    }

    fn pack(&self, s: &CompositeState) -> u64 {
        let mut key = 0u64;
        for (i, &q) in s.0.iter().enumerate() {
            key |= (q as u64) << self.shifts[i];
        }
        key
    }

    fn unpack(&self, key: u64) -> CompositeState {
        CompositeState(
            self.bits
                .iter()
                .zip(&self.shifts)
                .map(|(b, sh)| ((key >> sh) & ((1u64 << b) - 1)) as u32)
                .collect(),
        )
    }

    fn successors_ids(&self, s: &CompositeState) -> Vec<(u32, CompositeState)> {
        let mut out = Vec::new();
        for (pi, proc_) in self.compiled.iter().enumerate() {
            let local = s.0[pi] as usize;
            for (aid, targets) in &proc_.by_state[local] {
                match self.classes[*aid as usize] {
                    ActionClass::Sync { emitter, receiver } => {
                        if emitter as usize != pi {
                            continue; // fired from the emitter side
                        }
                        let r = receiver as usize;
                        let recv_row = &self.compiled[r].by_state[s.0[r] as usize];
                        let Ok(idx) = recv_row.binary_search_by_key(aid, |(a, _)| *a) else {
                            continue; // receiver not enabled: no joint step
                        };
                        for &et in targets {
                            for &rt in &recv_row[idx].1 {
                                let mut next = s.clone();
                                next.0[pi] = et;
                                next.0[r] = rt;
                                out.push((*aid, next));
                            }
                        }
                    }
                    ActionClass::Solo { owner } => {
                        if owner as usize != pi {
                            continue;
                        }
                        for &t in targets {
                            let mut next = s.clone();
                            next.0[pi] = t;
                            out.push((*aid, next));
                        }
                    }
                    ActionClass::Dead => {}
                }
            }
        }
        out
    }

    /// Enabled steps from a composite state: interleaved solo moves plus
    /// joint synchronized moves, in deterministic order.
    pub fn compose_step(
        &self,
        s: &CompositeState,
    ) -> Result<Vec<(Symbol, CompositeState)>, ComposeError> {
        self.check_state(s)?;
        Ok(self
            .successors_ids(s)
            .into_iter()
            .map(|(aid, state)| (self.actions[aid as usize].clone(), state))
            .collect())
    }

    fn all_terminal(&self, s: &CompositeState) -> bool {
        s.0.iter()
            .enumerate()
            .all(|(pi, &q)| self.compiled[pi].terminal[q as usize])
    }

    /// Size of the full reachable composite-state space, exploring past any
    /// deadlock states. Returns the count and whether the exploration was
    /// exhaustive within the limit.
    pub fn count_reachable(&self, max_states: usize) -> (usize, bool) {
        let initial = self.initial_state();
        let mut visited: FxHashSet<u64> = FxHashSet::default();
        visited.insert(self.pack(&initial));
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(initial);
        while let Some(state) = queue.pop_front() {
            for (_, next) in self.successors_ids(&state) {
                if visited.insert(self.pack(&next)) {
                    if visited.len() >= max_states {
                        return (visited.len(), false);
                    }
                    queue.push_back(next);
                }
            }
        }
        (visited.len(), true)
    }

    /// Explores the reachable composite states and reports the first
    /// deadlock, or `Ok` after exhausting the space within limits.
    pub fn find_deadlock(&self, limits: &SearchLimits) -> Verdict {
        let started = Instant::now();
        match limits.order {
            SearchOrder::Dfs => self.search_dfs(limits, started),
            SearchOrder::Bfs => self.search_bfs(limits, started),
        }
    }

    fn verdict(
        &self,
        conclusion: Conclusion,
        witness: Option<Witness>,
        explored: usize,
        started: Instant,
    ) -> Verdict {
        Verdict {
            conclusion,
            witness,
            states_explored: explored,
            elapsed: started.elapsed(),
            // Count-based proxy: key plus hash-set slot per stored state.
            peak_memory_estimate: explored * (std::mem::size_of::<u64>() * 2),
        }
    }

    fn search_dfs(&self, limits: &SearchLimits, started: Instant) -> Verdict {
        struct Frame {
            entry: Option<(u32, CompositeState)>,
            succs: Vec<(u32, CompositeState)>,
            next: usize,
        }
        let initial = self.initial_state();
        let mut visited: FxHashSet<u64> = FxHashSet::default();
        visited.insert(self.pack(&initial));
        let initial_succs = self.successors_ids(&initial);
        if initial_succs.is_empty() && !self.all_terminal(&initial) {
            return self.verdict(
                Conclusion::Deadlock,
                Some(Witness { steps: Vec::new() }),
                visited.len(),
                started,
            );
        }
        let mut stack = vec![Frame {
            entry: None,
            succs: initial_succs,
            next: 0,
        }];
        while let Some(frame) = stack.last_mut() {
            if frame.next >= frame.succs.len() {
                stack.pop();
                continue;
            }
            let (aid, state) = frame.succs[frame.next].clone();
            frame.next += 1;
            if !visited.insert(self.pack(&state)) {
                continue;
            }
            if visited.len() > limits.max_states {
                return self.verdict(Conclusion::Inconclusive, None, visited.len(), started);
            }
            let succs = self.successors_ids(&state);
            if succs.is_empty() && !self.all_terminal(&state) {
                let mut steps: Vec<(Symbol, CompositeState)> = stack
                    .iter()
                    .filter_map(|f| f.entry.clone())
                    .map(|(a, s)| (self.actions[a as usize].clone(), s))
                    .collect();
                steps.push((self.actions[aid as usize].clone(), state));
                return self.verdict(
                    Conclusion::Deadlock,
                    Some(Witness { steps }),
                    visited.len(),
                    started,
                );
            }
            stack.push(Frame {
                entry: Some((aid, state)),
                succs,
                next: 0,
            });
        }
        self.verdict(Conclusion::Ok, None, visited.len(), started)
    }

    fn search_bfs(&self, limits: &SearchLimits, started: Instant) -> Verdict {
        let initial = self.initial_state();
        let init_key = self.pack(&initial);
        let mut visited: FxHashSet<u64> = FxHashSet::default();
        let mut parent: FxHashMap<u64, (u64, u32)> = FxHashMap::default();
        let mut queue = std::collections::VecDeque::new();
        visited.insert(init_key);
        queue.push_back(initial);
        while let Some(state) = queue.pop_front() {
            let succs = self.successors_ids(&state);
            if succs.is_empty() && !self.all_terminal(&state) {
                let witness = self.rebuild_witness(&parent, init_key, self.pack(&state));
                return self.verdict(
                    Conclusion::Deadlock,
                    Some(witness),
                    visited.len(),
                    started,
                );
            }
            let here = self.pack(&state);
            for (aid, next) in succs {
                let key = self.pack(&next);
                if visited.insert(key) {
                    if visited.len() > limits.max_states {
                        return self.verdict(
                            Conclusion::Inconclusive,
                            None,
                            visited.len(),
                            started,
                        );
                    }
                    parent.insert(key, (here, aid));
                    queue.push_back(next);
                }
            }
        }
        self.verdict(Conclusion::Ok, None, visited.len(), started)
    }

    fn rebuild_witness(
        &self,
        parent: &FxHashMap<u64, (u64, u32)>,
        init_key: u64,
        mut at: u64,
    ) -> Witness {
        let mut rev = Vec::new();
        while at != init_key {
            let (prev, aid) = parent[&at];
            rev.push((self.actions[aid as usize].clone(), self.unpack(at)));
            at = prev;
        }
        rev.reverse();
        Witness { steps: rev }
    }

    /// Replays a witness from the initial state, checking that every step is
    /// a legal successor and that the final state is stuck and not all
    /// terminal. Returns the stuck state on success.
    pub fn replay_witness(&self, witness: &Witness) -> Result<CompositeState, ComposeError> {
        let mut here = self.initial_state();
        for (action, state) in &witness.steps {
            let succs = self.compose_step(&here)?;
            if !succs.iter().any(|(a, s)| a == action && s == state) {
                return Err(ComposeError::MalformedState);
            }
            here = state.clone();
        }
        if !self.successors_ids(&here).is_empty() || self.all_terminal(&here) {
            return Err(ComposeError::MalformedState);
        }
        Ok(here)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchOrder {
    Dfs,
    Bfs,
}

#[derive(Debug, Clone)]
pub struct SearchLimits {
    pub max_states: usize,
    pub order: SearchOrder,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_states: 50_000_000,
            order: SearchOrder::Dfs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conclusion {
    /// Exhaustive within limits, no deadlock.
    Ok,
    Deadlock,
    /// Limits hit before the space was exhausted; explicitly distinct from
    /// `Ok`.
    Inconclusive,
}

impl Conclusion {
    pub fn label(&self) -> &'static str {
        match self {
            Conclusion::Ok => "OK",
            Conclusion::Deadlock => "deadlock",
            Conclusion::Inconclusive => "inconclusive",
        }
    }
}

/// A replayable trace from the initial composite state to a stuck one.
#[derive(Debug, Clone)]
pub struct Witness {
    pub steps: Vec<(Symbol, CompositeState)>,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub conclusion: Conclusion,
    pub witness: Option<Witness>,
    pub states_explored: usize,
    pub elapsed: Duration,
    /// Rough bytes proxy derived from the visited-set size.
    pub peak_memory_estimate: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ia::ActionSignature;

    fn ia(
        inputs: &[&str],
        outputs: &[&str],
        states: u32,
        trans: &[(u32, &str, u32)],
    ) -> InterfaceAutomaton {
        let sig = ActionSignature::new(
            inputs.iter().map(|s| Symbol::new(s)),
            outputs.iter().map(|s| Symbol::new(s)),
        )
        .unwrap();
        InterfaceAutomaton::new(
            sig,
            states,
            StateId(0),
            trans
                .iter()
                .map(|(f, a, t)| (StateId(*f), Symbol::new(a), StateId(*t))),
        )
        .unwrap()
    }

    #[test]
    fn independent_processes_interleave() {
        // Two processes, each with one solo output transition: two
        // successors from the initial composite state.
        let p1 = ia(&[], &["a"], 2, &[(0, "a", 1)]);
        let p2 = ia(&[], &["b"], 2, &[(0, "b", 1)]);
        let net = ProcessNetwork::new(vec![
            ProcessInstance::new("p1", p1),
            ProcessInstance::new("p2", p2),
        ])
        .unwrap();
        let succ = net.compose_step(&net.initial_state()).unwrap();
        assert_eq!(succ.len(), 2);
    }

    #[test]
    fn synchronization_requires_both_sides() {
        // Emitter ready to output `a`, receiver not enabled on it: no step.
        let emitter = ia(&["go"], &["a"], 2, &[(0, "a", 1)]);
        let receiver = ia(&["a"], &["go"], 2, &[(1, "a", 1)]);
        let net = ProcessNetwork::new(vec![
            ProcessInstance::new("e", emitter),
            ProcessInstance::new("r", receiver),
        ])
        .unwrap();
        let succ = net.compose_step(&net.initial_state()).unwrap();
        assert!(succ.is_empty());
    }

    #[test]
    fn joint_step_moves_both_processes() {
        let emitter = ia(&["x"], &["a"], 2, &[(0, "a", 1)]);
        let receiver = ia(&["a"], &["x"], 2, &[(0, "a", 1)]);
        let net = ProcessNetwork::new(vec![
            ProcessInstance::new("e", emitter),
            ProcessInstance::new("r", receiver),
        ])
        .unwrap();
        let succ = net.compose_step(&net.initial_state()).unwrap();
        assert_eq!(succ.len(), 1);
        let (action, state) = &succ[0];
        assert_eq!(action, &Symbol::new("a"));
        assert_eq!(state.components(), &[1, 1]);
    }

    #[test]
    fn two_emitters_rejected() {
        let p1 = ia(&["i1"], &["a"], 1, &[]);
        let p2 = ia(&["i2"], &["a"], 1, &[]);
        assert!(matches!(
            ProcessNetwork::new(vec![
                ProcessInstance::new("p1", p1),
                ProcessInstance::new("p2", p2),
            ]),
            Err(ComposeError::TwoEmitters(_))
        ));
    }

    #[test]
    fn all_terminal_quiescence_is_ok_not_deadlock() {
        let p = ia(&["x"], &["a"], 2, &[(0, "a", 1)]);
        let q = ia(&["a"], &["x"], 2, &[(0, "a", 1)]);
        let net = ProcessNetwork::new(vec![
            ProcessInstance::new("p", p).with_terminal([StateId(1)]),
            ProcessInstance::new("q", q).with_terminal([StateId(1)]),
        ])
        .unwrap();
        let v = net.find_deadlock(&SearchLimits::default());
        assert_eq!(v.conclusion, Conclusion::Ok);
        assert_eq!(v.states_explored, 2);
    }

    #[test]
    fn stuck_nonterminal_state_is_a_deadlock_with_valid_witness() {
        let p = ia(&["x"], &["a"], 3, &[(0, "a", 1)]);
        let q = ia(&["a"], &["x"], 2, &[(0, "a", 1)]);
        let net = ProcessNetwork::new(vec![
            ProcessInstance::new("p", p).with_terminal([StateId(2)]),
            ProcessInstance::new("q", q).with_terminal([StateId(1)]),
        ])
        .unwrap();
        for order in [SearchOrder::Dfs, SearchOrder::Bfs] {
            let v = net.find_deadlock(&SearchLimits {
                max_states: 1000,
                order,
            });
            assert_eq!(v.conclusion, Conclusion::Deadlock);
            let w = v.witness.expect("deadlock carries a witness");
            let stuck = net.replay_witness(&w).unwrap();
            assert_eq!(stuck.components(), &[1, 1]);
        }
    }

    #[test]
    fn state_limit_yields_inconclusive() {
        let p = ia(&["x"], &["a"], 4, &[(0, "a", 1), (1, "a", 2), (2, "a", 3)]);
        let q = ia(&["a"], &["x"], 1, &[(0, "a", 0)]);
        let net = ProcessNetwork::new(vec![
            ProcessInstance::new("p", p),
            ProcessInstance::new("q", q),
        ])
        .unwrap();
        let v = net.find_deadlock(&SearchLimits {
            max_states: 2,
            order: SearchOrder::Dfs,
        });
        assert_eq!(v.conclusion, Conclusion::Inconclusive);
    }

    #[test]
    fn unmatched_output_detected_by_closed_check() {
        let p = ia(&["x"], &["a"], 2, &[(0, "a", 1)]);
        let q = ia(&["b"], &["x"], 1, &[]);
        let net = ProcessNetwork::new(vec![
            ProcessInstance::new("p", p),
            ProcessInstance::new("q", q),
        ])
        .unwrap();
        match net.require_closed() {
            Err(ComposeError::UnmatchedAction(a, proc_name)) => {
                assert_eq!(a, Symbol::new("a"));
                assert_eq!(proc_name, "p");
            }
            other => panic!("expected unmatched action, got {other:?}"),
        }
    }
}
