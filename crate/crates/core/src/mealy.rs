//! Deterministic, input-complete Mealy machines.
//!
//! These are the intermediate artifacts of learning: one output symbol per
//! input symbol, with a distinguished quiescence output standing for "no
//! observable reaction".

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use thiserror::Error;

use crate::symbol::{Symbol, Word};

#[derive(Debug, Error)]
pub enum MealyError {
    #[error("machine invalid: {0}")]
    Invalid(String),
    #[error("unknown input symbol `{0}`")]
    UnknownInput(Symbol),
}

/// A deterministic input-complete transducer. For every state and input
/// there is exactly one (output, next state) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MealyMachine {
    inputs: Vec<Symbol>,
    outputs: BTreeSet<Symbol>,
    quiescence: Symbol,
    state_count: u32,
    initial: u32,
    /// Row-major: `trans[state * inputs.len() + input_index]`.
    trans: Vec<(Symbol, u32)>,
}

impl MealyMachine {
    /// Builds and validates a machine from a total transition map.
    pub fn new(
        inputs: impl IntoIterator<Item = Symbol>,
        outputs: impl IntoIterator<Item = Symbol>,
        quiescence: Symbol,
        state_count: u32,
        initial: u32,
        transition: impl Fn(u32, &Symbol) -> (Symbol, u32),
    ) -> Result<Self, MealyError> {
        let mut inputs: Vec<Symbol> = inputs.into_iter().collect();
        inputs.sort();
        inputs.dedup();
        if inputs.is_empty() {
            return Err(MealyError::Invalid("no input symbols".into()));
        }
        let mut outputs: BTreeSet<Symbol> = outputs.into_iter().collect();
        outputs.insert(quiescence.clone());
        if state_count == 0 {
            return Err(MealyError::Invalid("no states".into()));
        }
        if initial >= state_count {
            return Err(MealyError::Invalid(format!(
                "initial state {initial} out of range"
            )));
        }
        let mut trans = Vec::with_capacity(state_count as usize * inputs.len());
        for q in 0..state_count {
            for i in &inputs {
                let (o, to) = transition(q, i);
                if !outputs.contains(&o) {
                    return Err(MealyError::Invalid(format!(
                        "output `{o}` at state {q} not in output alphabet"
                    )));
                }
                if to >= state_count {
                    return Err(MealyError::Invalid(format!(
                        "successor {to} at state {q} out of range"
                    )));
                }
                trans.push((o, to));
            }
        }
        Ok(MealyMachine {
            inputs,
            outputs,
            quiescence,
            state_count,
            initial,
            trans,
        })
    }

    /// Convenience constructor from an explicit (state, input) -> (output,
    /// next) table.
    pub fn from_table(
        inputs: &[&str],
        quiescence: &str,
        initial: u32,
        rows: &[&[(&str, u32)]],
    ) -> Result<Self, MealyError> {
        let input_syms: Vec<Symbol> = {
            let mut v: Vec<Symbol> = inputs.iter().map(|s| Symbol::new(s)).collect();
            v.sort();
            v
        };
        if rows.iter().any(|r| r.len() != input_syms.len()) {
            return Err(MealyError::Invalid(
                "row width differs from input count".into(),
            ));
        }
        let outputs: BTreeSet<Symbol> = rows
            .iter()
            .flat_map(|r| r.iter().map(|(o, _)| Symbol::new(o)))
            .collect();
        let rows: Vec<Vec<(Symbol, u32)>> = rows
            .iter()
            .map(|r| r.iter().map(|(o, t)| (Symbol::new(o), *t)).collect())
            .collect();
        MealyMachine::new(
            input_syms.clone(),
            outputs,
            Symbol::new(quiescence),
            rows.len() as u32,
            initial,
            |q, i| {
                let idx = input_syms.iter().position(|s| s == i).unwrap();
                rows[q as usize][idx].clone()
            },
        )
    }

    pub fn inputs(&self) -> &[Symbol] {
        &self.inputs
    }

    pub fn outputs(&self) -> &BTreeSet<Symbol> {
        &self.outputs
    }

    pub fn quiescence(&self) -> &Symbol {
        &self.quiescence
    }

    pub fn state_count(&self) -> u32 {
        self.state_count
    }

    pub fn initial(&self) -> u32 {
        self.initial
    }

    fn input_index(&self, i: &Symbol) -> Result<usize, MealyError> {
        self.inputs
            .binary_search(i)
            .map_err(|_| MealyError::UnknownInput(i.clone()))
    }

    /// The (output, next state) pair for one step.
    pub fn step(&self, q: u32, input: &Symbol) -> Result<(Symbol, u32), MealyError> {
        let idx = self.input_index(input)?;
        Ok(self.trans[q as usize * self.inputs.len() + idx].clone())
    }

    /// Runs a word from the initial state and returns the output word.
    pub fn output_word(&self, word: &[Symbol]) -> Result<Word, MealyError> {
        let mut q = self.initial;
        let mut out = Vec::with_capacity(word.len());
        for i in word {
            let (o, next) = self.step(q, i)?;
            out.push(o);
            q = next;
        }
        Ok(out)
    }

    /// The state reached after a word, without collecting outputs.
    pub fn state_after(&self, word: &[Symbol]) -> Result<u32, MealyError> {
        let mut q = self.initial;
        for i in word {
            q = self.step(q, i)?.1;
        }
        Ok(q)
    }

    /// States reachable from the initial state, BFS order over sorted inputs.
    fn reachable(&self) -> Vec<u32> {
        let mut seen = vec![false; self.state_count as usize];
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        seen[self.initial as usize] = true;
        queue.push_back(self.initial);
        while let Some(q) = queue.pop_front() {
            order.push(q);
            for i in &self.inputs {
                let (_, to) = self.step(q, i).unwrap();
                if !seen[to as usize] {
                    seen[to as usize] = true;
                    queue.push_back(to);
                }
            }
        }
        order
    }

    /// Language-equivalent machine with the minimum number of states.
    /// Partition refinement: states start grouped by their output row and are
    /// split by successor blocks until stable; unreachable states are
    /// discarded first. States of the result are numbered in BFS order.
    pub fn minimize(&self) -> MealyMachine {
        let order = self.reachable();
        let index_of: BTreeMap<u32, usize> =
            order.iter().enumerate().map(|(i, q)| (*q, i)).collect();
        let n = order.len();

        let mut block: Vec<usize> = {
            let mut row_to_block: BTreeMap<Vec<Symbol>, usize> = BTreeMap::new();
            let mut blocks = Vec::with_capacity(n);
            for &q in &order {
                let row: Vec<Symbol> = self
                    .inputs
                    .iter()
                    .map(|i| self.step(q, i).unwrap().0)
                    .collect();
                let fresh = row_to_block.len();
                blocks.push(*row_to_block.entry(row).or_insert(fresh));
            }
            blocks
        };

        loop {
            let mut sig_to_block: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
            let mut next = vec![0usize; n];
            for (pos, &q) in order.iter().enumerate() {
                let succ: Vec<usize> = self
                    .inputs
                    .iter()
                    .map(|i| block[index_of[&self.step(q, i).unwrap().1]])
                    .collect();
                let key = (block[pos], succ);
                let fresh = sig_to_block.len();
                next[pos] = *sig_to_block.entry(key).or_insert(fresh);
            }
            if sig_to_block.len() == block.iter().collect::<BTreeSet<_>>().len() {
                block = next;
                break;
            }
            block = next;
        }

        // Canonical numbering of blocks: BFS from the initial block.
        let mut repr: BTreeMap<usize, u32> = BTreeMap::new();
        for (pos, &q) in order.iter().enumerate() {
            repr.entry(block[pos]).or_insert(q);
        }
        let mut numbering: BTreeMap<usize, u32> = BTreeMap::new();
        let mut queue = VecDeque::new();
        let init_block = block[index_of[&self.initial]];
        numbering.insert(init_block, 0);
        queue.push_back(init_block);
        while let Some(b) = queue.pop_front() {
            let q = repr[&b];
            for i in &self.inputs {
                let (_, to) = self.step(q, i).unwrap();
                let tb = block[index_of[&to]];
                if !numbering.contains_key(&tb) {
                    numbering.insert(tb, numbering.len() as u32);
                    queue.push_back(tb);
                }
            }
        }

        let block_count = numbering.len() as u32;
        let mut new_repr: BTreeMap<u32, u32> = BTreeMap::new();
        for (b, num) in &numbering {
            new_repr.insert(*num, repr[b]);
        }
        MealyMachine::new(
            self.inputs.clone(),
            self.outputs.clone(),
            self.quiescence.clone(),
            block_count,
            0,
            |q, i| {
                let old = new_repr[&q];
                let (o, to) = self.step(old, i).unwrap();
                (o, numbering[&block[index_of[&to]]])
            },
        )
        .expect("quotient of a valid machine is valid")
    }

    /// Tests isomorphism of two machines by comparing their canonical forms.
    /// Both machines must already be minimal for this to coincide with
    /// behavioral equivalence; on non-minimal machines it is strict
    /// structural isomorphism of the reachable parts.
    pub fn isomorphic_to(&self, other: &MealyMachine) -> bool {
        if self.inputs != other.inputs {
            return false;
        }
        let a = self.canonical_form();
        let b = other.canonical_form();
        a == b
    }

    /// Canonical relabeling: BFS numbering over sorted inputs.
    fn canonical_form(&self) -> Vec<(Symbol, u32)> {
        let order = self.reachable();
        let renum: BTreeMap<u32, u32> = order
            .iter()
            .enumerate()
            .map(|(i, q)| (*q, i as u32))
            .collect();
        let mut rows = Vec::new();
        for &q in &order {
            for i in &self.inputs {
                let (o, to) = self.step(q, i).unwrap();
                rows.push((o, renum[&to]));
            }
        }
        rows
    }

    /// Shortest word distinguishing this machine from `other`, found by BFS
    /// over the state product. Returns `None` when the machines are
    /// behaviorally equivalent. Used by the perfect equivalence oracle.
    pub fn shortest_distinguishing_word(&self, other: &MealyMachine) -> Option<Word> {
        if self.inputs != other.inputs {
            // Incomparable alphabets: treat the first unique input as the
            // distinguishing word.
            let i = self
                .inputs
                .iter()
                .chain(other.inputs.iter())
                .find(|i| !self.inputs.contains(i) || !other.inputs.contains(i))?;
            return Some(vec![i.clone()]);
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert((self.initial, other.initial));
        queue.push_back((self.initial, other.initial, Vec::new()));
        while let Some((qa, qb, word)) = queue.pop_front() {
            for i in &self.inputs {
                let (oa, ta) = self.step(qa, i).unwrap();
                let (ob, tb) = other.step(qb, i).unwrap();
                let mut w = word.clone();
                w.push(i.clone());
                if oa != ob {
                    return Some(w);
                }
                if seen.insert((ta, tb)) {
                    queue.push_back((ta, tb, w));
                }
            }
        }
        None
    }

    /// Generates a random reachable machine and minimizes it until the
    /// requested size is hit; the generator for learner round-trip tests.
    pub fn random_minimal(
        rng: &mut impl Rng,
        inputs: &[Symbol],
        outputs: &[Symbol],
        quiescence: &Symbol,
        states: u32,
    ) -> MealyMachine {
        assert!(!inputs.is_empty() && states > 0);
        let mut all_outputs: Vec<Symbol> = outputs.to_vec();
        if !all_outputs.contains(quiescence) {
            all_outputs.push(quiescence.clone());
        }
        loop {
            let table: Vec<(Symbol, u32)> = (0..states as usize * inputs.len())
                .map(|_| {
                    (
                        all_outputs[rng.gen_range(0..all_outputs.len())].clone(),
                        rng.gen_range(0..states),
                    )
                })
                .collect();
            let sorted_inputs = {
                let mut v = inputs.to_vec();
                v.sort();
                v
            };
            let m = MealyMachine::new(
                inputs.to_vec(),
                all_outputs.clone(),
                quiescence.clone(),
                states,
                0,
                |q, i| {
                    let idx = sorted_inputs.iter().position(|s| s == i).unwrap();
                    table[q as usize * sorted_inputs.len() + idx].clone()
                },
            )
            .unwrap();
            let min = m.minimize();
            if min.state_count() == states {
                return min;
            }
        }
    }
}
