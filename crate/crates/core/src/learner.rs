//! Active inference of Mealy machines from an observation table.
//!
//! The table keeps a prefix-closed set of access words (short rows plus
//! their one-step extensions) and a set of suffix columns that starts from
//! all single-letter words. Cells hold the output tail of the system's
//! answer. The loop fills the table, restores closedness by promoting
//! extension rows, conjectures a machine, and asks the teacher for
//! equivalence; every counterexample contributes all of its suffixes as new
//! columns. Learning ends when an equivalence query passes.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::ia::{AutomatonError, InterfaceAutomaton};
use crate::mealy::MealyMachine;
use crate::symbol::{Symbol, Word};
use crate::teacher::{TeachError, Teacher};
use crate::translate::{mealy_to_ia, TranslateOptions};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error(transparent)]
    Teacher(#[from] TeachError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error("teacher returned `{0:?}` as a counterexample but hypothesis and system agree on it")]
    BadCounterexample(Word),
    #[error("conjecture did not grow after counterexample {0:?}; aborting")]
    NoProgress(Word),
}

/// Counters for one learning run.
#[derive(Debug, Clone, Default)]
pub struct LearnStats {
    /// Output queries answered by executing the system (#MM).
    pub mm_queries: usize,
    /// Equivalence queries asked (#EQ).
    pub eq_queries: usize,
    /// System resets issued (#Experiments).
    pub experiments: usize,
    /// Wall-clock duration of the run.
    pub elapsed: Duration,
    /// State count of each successive conjecture.
    pub conjecture_sizes: Vec<u32>,
}

/// The learner's working state.
pub struct ObservationTable {
    inputs: Vec<Symbol>,
    /// Access words of short rows, kept sorted; the first is always the
    /// empty word.
    short: BTreeSet<Word>,
    /// Suffix columns; contains every single-letter word from the start.
    columns: BTreeSet<Word>,
    /// Filled cells: (row access word, column) -> output tail.
    cells: BTreeMap<Word, BTreeMap<Word, Word>>,
}

impl ObservationTable {
    fn new(inputs: Vec<Symbol>) -> Self {
        let columns = inputs.iter().map(|i| vec![i.clone()]).collect();
        ObservationTable {
            inputs,
            short: BTreeSet::from([Vec::new()]),
            columns,
            cells: BTreeMap::new(),
        }
    }

    pub fn short_row_count(&self) -> usize {
        self.short.len()
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    fn extensions(&self) -> Vec<Word> {
        let mut out = Vec::new();
        for u in &self.short {
            for i in &self.inputs {
                let mut w = u.clone();
                w.push(i.clone());
                if !self.short.contains(&w) {
                    out.push(w);
                }
            }
        }
        out
    }

    fn fill(&mut self, teacher: &mut impl Teacher) -> Result<(), LearnError> {
        let rows: Vec<Word> = self.short.iter().cloned().chain(self.extensions()).collect();
        for u in rows {
            for e in self.columns.clone() {
                let have = self.cells.get(&u).map_or(false, |r| r.contains_key(&e));
                if have {
                    continue;
                }
                let mut w = u.clone();
                w.extend(e.iter().cloned());
                let out = teacher.output_query(&w)?;
                let tail = out[u.len()..].to_vec();
                self.cells.entry(u.clone()).or_default().insert(e, tail);
            }
        }
        Ok(())
    }

    fn row_signature(&self, u: &Word) -> Vec<Word> {
        let row = &self.cells[u];
        self.columns.iter().map(|e| row[e].clone()).collect()
    }

    /// Promotes unclosed extension rows until every extension row matches a
    /// short row. Ties resolve to the lexicographically smallest access word.
    fn close(&mut self, teacher: &mut impl Teacher) -> Result<(), LearnError> {
        loop {
            self.fill(teacher)?;
            let short_sigs: BTreeSet<Vec<Word>> = self
                .short
                .iter()
                .map(|u| self.row_signature(u))
                .collect();
            let unclosed = self
                .extensions()
                .into_iter()
                .find(|u| !short_sigs.contains(&self.row_signature(u)));
            match unclosed {
                Some(u) => {
                    self.short.insert(u);
                }
                None => return Ok(()),
            }
        }
    }

    /// Builds the conjecture. Requires a closed, filled table. Short rows
    /// are pairwise distinct by construction, so each distinct signature is
    /// one machine state.
    fn conjecture(&self, quiescence: &Symbol, outputs: &BTreeSet<Symbol>) -> MealyMachine {
        let shorts: Vec<&Word> = self.short.iter().collect();
        let mut sig_to_state: BTreeMap<Vec<Word>, u32> = BTreeMap::new();
        for u in &shorts {
            let sig = self.row_signature(u);
            let fresh = sig_to_state.len() as u32;
            let prev = sig_to_state.insert(sig, fresh);
            debug_assert!(prev.is_none(), "short rows must be pairwise distinct");
        }
        // The empty word is the first short row, so the initial state is the
        // state of its signature.
        let initial = sig_to_state[&self.row_signature(&Vec::new())];

        let mut table: BTreeMap<(u32, Symbol), (Symbol, u32)> = BTreeMap::new();
        for u in &shorts {
            let from = sig_to_state[&self.row_signature(u)];
            for i in &self.inputs {
                let mut ui = (*u).clone();
                ui.push(i.clone());
                let succ_sig = self.row_signature(&ui);
                let to = sig_to_state[&succ_sig];
                let out = self.cells[*u][&vec![i.clone()]]
                    .last()
                    .expect("single-letter column has one output")
                    .clone();
                table.insert((from, i.clone()), (out, to));
            }
        }
        let mut all_outputs = outputs.clone();
        all_outputs.extend(table.values().map(|(o, _)| o.clone()));
        MealyMachine::new(
            self.inputs.clone(),
            all_outputs,
            quiescence.clone(),
            sig_to_state.len() as u32,
            initial,
            |q, i| table[&(q, i.clone())].clone(),
        )
        .expect("closed table yields a complete machine")
    }

    /// Adds every suffix of a counterexample word as a column.
    fn add_counterexample(&mut self, ce: &Word) {
        for start in 0..ce.len() {
            self.columns.insert(ce[start..].to_vec());
        }
    }
}

/// Learns a deterministic, input-complete Mealy machine consistent with
/// every answer the teacher gave during the run.
pub fn learn_mealy(
    teacher: &mut impl Teacher,
) -> Result<(MealyMachine, LearnStats), LearnError> {
    let started = Instant::now();
    let alphabet = teacher.alphabet().clone();
    let mut table = ObservationTable::new(alphabet.inputs.clone());
    let mut stats = LearnStats::default();
    let quiescence = alphabet.quiescence.clone();
    let declared: BTreeSet<Symbol> = alphabet.outputs.iter().cloned().collect();

    loop {
        table.close(teacher)?;
        let hypothesis = table.conjecture(&quiescence, &declared);
        if let Some(prev) = stats.conjecture_sizes.last() {
            debug_assert!(hypothesis.state_count() > *prev);
        }
        stats.conjecture_sizes.push(hypothesis.state_count());
        stats.eq_queries += 1;
        match teacher.equivalence_query(&hypothesis)? {
            None => {
                let t = teacher.stats();
                stats.mm_queries = t.mm_executed;
                stats.experiments = t.experiments;
                stats.elapsed = started.elapsed();
                return Ok((hypothesis, stats));
            }
            Some(ce) => {
                let actual = teacher.output_query(&ce)?;
                let predicted = hypothesis.output_word(&ce).map_err(|_| {
                    LearnError::BadCounterexample(ce.clone())
                })?;
                if actual == predicted {
                    return Err(LearnError::BadCounterexample(ce));
                }
                let before = hypothesis.state_count();
                table.add_counterexample(&ce);
                table.close(teacher)?;
                let after = table.conjecture(&quiescence, &declared).state_count();
                if after <= before {
                    return Err(LearnError::NoProgress(ce));
                }
            }
        }
    }
}

/// Learns a machine and translates it into an interface automaton. The
/// alphabet's refusal output, when declared, marks inputs that are dropped
/// by the translation.
pub fn learn_ia(
    teacher: &mut impl Teacher,
) -> Result<(InterfaceAutomaton, LearnStats), LearnError> {
    let refusal = teacher.alphabet().refusal.clone();
    let (machine, stats) = learn_mealy(teacher)?;
    let ia = mealy_to_ia(&machine, &TranslateOptions { refusal })?;
    Ok((ia, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sul::MealySul;
    use crate::teacher::{EqConfig, PerfectTeacher, SulTeacher};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_system_learns_single_state_without_counterexamples() {
        let target = MealyMachine::from_table(
            &["a", "b"],
            "quiescence",
            0,
            &[&[("quiescence", 0), ("quiescence", 0)]],
        )
        .unwrap();
        let mut teacher = SulTeacher::new(MealySul::new(target), EqConfig::default());
        let (m, stats) = learn_mealy(&mut teacher).unwrap();
        assert_eq!(m.state_count(), 1);
        assert_eq!(stats.eq_queries, 1);
        assert_eq!(stats.conjecture_sizes, vec![1]);
    }

    #[test]
    fn random_targets_learned_exactly_with_perfect_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let inputs = [Symbol::new("a"), Symbol::new("b"), Symbol::new("c")];
        let outputs = [Symbol::new("x"), Symbol::new("y")];
        let q = Symbol::new("quiescence");
        for _ in 0..10 {
            let target = MealyMachine::random_minimal(&mut rng, &inputs, &outputs, &q, 6);
            let mut teacher = PerfectTeacher::new(target.clone());
            let (m, stats) = learn_mealy(&mut teacher).unwrap();
            assert!(m.isomorphic_to(&target.minimize()));
            // Termination bound: at most one equivalence query per state.
            assert!(stats.eq_queries as u32 <= target.state_count());
            // Monotone growth of conjectures.
            assert!(stats
                .conjecture_sizes
                .windows(2)
                .all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn hypothesis_consistent_with_entire_cache_at_the_end() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let inputs = [Symbol::new("a"), Symbol::new("b")];
        let outputs = [Symbol::new("x")];
        let q = Symbol::new("quiescence");
        let target = MealyMachine::random_minimal(&mut rng, &inputs, &outputs, &q, 5);
        let mut teacher = SulTeacher::new(MealySul::new(target), EqConfig::default());
        let (m, _) = learn_mealy(&mut teacher).unwrap();
        for (ins, outs) in teacher.cache().unwrap().traces() {
            assert_eq!(m.output_word(&ins).unwrap(), outs, "cache replay mismatch");
        }
    }

    #[test]
    fn conjectures_are_minimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let inputs = [Symbol::new("a"), Symbol::new("b")];
        let outputs = [Symbol::new("x"), Symbol::new("y")];
        let q = Symbol::new("quiescence");
        let target = MealyMachine::random_minimal(&mut rng, &inputs, &outputs, &q, 6);
        let mut teacher = SulTeacher::new(MealySul::new(target), EqConfig::default());
        let (m, _) = learn_mealy(&mut teacher).unwrap();
        let minimized = m.minimize();
        assert_eq!(minimized.state_count(), m.state_count());
        assert!(minimized.isomorphic_to(&m));
    }

    #[test]
    fn lying_teacher_counterexample_is_rejected() {
        struct Lying(PerfectTeacher);
        impl Teacher for Lying {
            fn alphabet(&self) -> &crate::sul::SulAlphabet {
                self.0.alphabet()
            }
            fn output_query(&mut self, word: &[Symbol]) -> Result<Word, TeachError> {
                self.0.output_query(word)
            }
            fn equivalence_query(
                &mut self,
                hypothesis: &MealyMachine,
            ) -> Result<Option<Word>, TeachError> {
                // Claim a counterexample even when the hypothesis is right.
                match self.0.equivalence_query(hypothesis)? {
                    Some(ce) => Ok(Some(ce)),
                    None => Ok(Some(vec![Symbol::new("a")])),
                }
            }
            fn stats(&self) -> crate::teacher::TeacherStats {
                self.0.stats()
            }
        }
        let target =
            MealyMachine::from_table(&["a"], "quiescence", 0, &[&[("x", 0)]]).unwrap();
        let mut teacher = Lying(PerfectTeacher::new(target));
        assert!(matches!(
            learn_mealy(&mut teacher),
            Err(LearnError::BadCounterexample(_))
        ));
    }
}
