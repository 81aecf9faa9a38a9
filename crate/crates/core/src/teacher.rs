//! Approximation of the minimally adequate teacher.
//!
//! Output queries run against a resettable session through the trace cache;
//! equivalence queries are approximated by conformance testing: a W-method
//! suite with a configurable extra-state bound, followed by seeded random
//! words. Every executed trace enters the cache; every reset is counted as
//! one experiment.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cache::{CacheConflict, TraceCache};
use crate::mealy::MealyMachine;
use crate::sul::{SulAlphabet, SulError, SulSession};
use crate::symbol::{Symbol, Word};

#[derive(Debug, Error)]
pub enum TeachError {
    #[error(transparent)]
    DeterminismViolation(#[from] CacheConflict),
    #[error("query transport failure: {0}")]
    Sul(#[from] SulError),
}

/// Conformance-testing parameters for approximated equivalence queries.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EqConfig {
    /// Upper bound on suspected extra states beyond the hypothesis.
    pub extra_states: usize,
    /// Number of random test words appended after the W suite.
    pub random_words: usize,
    /// Maximum length of a random test word.
    pub max_word_len: usize,
    /// Seed for the random phase; fixed per run for reproducibility.
    pub rng_seed: u64,
}

impl Default for EqConfig {
    fn default() -> Self {
        EqConfig {
            extra_states: 2,
            random_words: 200,
            max_word_len: 24,
            rng_seed: 0xAC_0FFE,
        }
    }
}

/// Query counters backing the learning report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TeacherStats {
    /// Output queries answered by actually running the system.
    pub mm_executed: usize,
    /// Resets issued; every executed word costs exactly one.
    pub experiments: usize,
}

/// The teacher interface the learner drives: output queries and approximated
/// equivalence queries.
pub trait Teacher {
    fn alphabet(&self) -> &SulAlphabet;
    fn output_query(&mut self, word: &[Symbol]) -> Result<Word, TeachError>;
    fn equivalence_query(&mut self, hypothesis: &MealyMachine)
        -> Result<Option<Word>, TeachError>;
    fn stats(&self) -> TeacherStats;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum QuerySource {
    Output,
    Conformance,
}

/// Teacher backed by a live session. Owns the session exclusively; queries
/// are strictly sequential.
pub struct SulTeacher<S: SulSession> {
    sul: S,
    cache: Option<TraceCache>,
    eq: EqConfig,
    rng: ChaCha8Rng,
    stats: TeacherStats,
}

impl<S: SulSession> SulTeacher<S> {
    pub fn new(sul: S, eq: EqConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(eq.rng_seed);
        SulTeacher {
            sul,
            cache: Some(TraceCache::new()),
            eq,
            rng,
            stats: TeacherStats::default(),
        }
    }

    /// Disables the cache: every query is executed on the system.
    pub fn without_cache(mut self) -> Self {
        self.cache = None;
        self
    }

    pub fn cache(&self) -> Option<&TraceCache> {
        self.cache.as_ref()
    }

    pub fn into_session(self) -> S {
        self.sul
    }

    fn run_word(&mut self, word: &[Symbol], source: QuerySource) -> Result<Word, TeachError> {
        if word.is_empty() {
            return Ok(Vec::new());
        }
        if let Some(cache) = &self.cache {
            if let Some(outputs) = cache.lookup(word) {
                return Ok(outputs);
            }
        }
        self.sul.reset()?;
        self.stats.experiments += 1;
        if source == QuerySource::Output {
            self.stats.mm_executed += 1;
        }
        let mut outputs = Vec::with_capacity(word.len());
        for i in word {
            outputs.push(self.sul.step(i)?);
        }
        if let Some(cache) = &mut self.cache {
            cache.insert(word, &outputs)?;
        }
        Ok(outputs)
    }
}

impl<S: SulSession> Teacher for SulTeacher<S> {
    fn alphabet(&self) -> &SulAlphabet {
        self.sul.alphabet()
    }

    fn output_query(&mut self, word: &[Symbol]) -> Result<Word, TeachError> {
        self.run_word(word, QuerySource::Output)
    }

    fn equivalence_query(
        &mut self,
        hypothesis: &MealyMachine,
    ) -> Result<Option<Word>, TeachError> {
        let mut suite = w_method_suite(hypothesis, self.eq.extra_states);
        let inputs = hypothesis.inputs().to_vec();
        for _ in 0..self.eq.random_words {
            let len = self.rng.gen_range(1..=self.eq.max_word_len.max(1));
            let w: Word = (0..len)
                .map(|_| inputs[self.rng.gen_range(0..inputs.len())].clone())
                .collect();
            suite.push(w);
        }
        for w in suite {
            let predicted = hypothesis
                .output_word(&w)
                .expect("suite words stay inside the hypothesis alphabet");
            let actual = self.run_word(&w, QuerySource::Conformance)?;
            if predicted != actual {
                return Ok(Some(w));
            }
        }
        Ok(None)
    }

    fn stats(&self) -> TeacherStats {
        self.stats
    }
}

/// Teacher with full knowledge of the target machine: output queries are
/// simulated and equivalence queries are exact. The reference oracle for
/// learner round-trip tests.
pub struct PerfectTeacher {
    target: MealyMachine,
    alphabet: SulAlphabet,
    stats: TeacherStats,
}

impl PerfectTeacher {
    pub fn new(target: MealyMachine) -> Self {
        let alphabet = SulAlphabet::new(
            target.inputs().to_vec(),
            target.outputs().iter().cloned(),
            target.quiescence().clone(),
            None,
        );
        PerfectTeacher {
            target,
            alphabet,
            stats: TeacherStats::default(),
        }
    }
}

impl Teacher for PerfectTeacher {
    fn alphabet(&self) -> &SulAlphabet {
        &self.alphabet
    }

    fn output_query(&mut self, word: &[Symbol]) -> Result<Word, TeachError> {
        if word.is_empty() {
            return Ok(Vec::new());
        }
        self.stats.mm_executed += 1;
        self.stats.experiments += 1;
        Ok(self.target.output_word(word).expect("alphabet checked"))
    }

    fn equivalence_query(
        &mut self,
        hypothesis: &MealyMachine,
    ) -> Result<Option<Word>, TeachError> {
        Ok(self.target.shortest_distinguishing_word(hypothesis))
    }

    fn stats(&self) -> TeacherStats {
        self.stats
    }
}

/// Access words: the shortest input word reaching each hypothesis state,
/// BFS order over sorted inputs.
fn state_cover(machine: &MealyMachine) -> Vec<Word> {
    let mut cover: Vec<Option<Word>> = vec![None; machine.state_count() as usize];
    cover[machine.initial() as usize] = Some(Vec::new());
    let mut queue = VecDeque::new();
    queue.push_back(machine.initial());
    while let Some(q) = queue.pop_front() {
        let here = cover[q as usize].clone().unwrap();
        for i in machine.inputs() {
            let (_, to) = machine.step(q, i).unwrap();
            if cover[to as usize].is_none() {
                let mut w = here.clone();
                w.push(i.clone());
                cover[to as usize] = Some(w);
                queue.push_back(to);
            }
        }
    }
    cover.into_iter().flatten().collect()
}

/// A characterization set: for every pair of distinct hypothesis states, a
/// word on which their outputs differ. Falls back to the empty word for
/// single-state machines.
fn characterization_set(machine: &MealyMachine) -> Vec<Word> {
    let n = machine.state_count();
    let mut set: BTreeSet<Word> = BTreeSet::new();
    for s in 0..n {
        for t in (s + 1)..n {
            if let Some(w) = distinguishing_word(machine, s, t) {
                set.insert(w);
            }
        }
    }
    if set.is_empty() {
        set.insert(Vec::new());
    }
    set.into_iter().collect()
}

/// Shortest word separating two states of one machine, by BFS over state
/// pairs.
fn distinguishing_word(machine: &MealyMachine, s: u32, t: u32) -> Option<Word> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert((s, t));
    queue.push_back((s, t, Vec::new()));
    while let Some((a, b, word)) = queue.pop_front() {
        for i in machine.inputs() {
            let (oa, na) = machine.step(a, i).unwrap();
            let (ob, nb) = machine.step(b, i).unwrap();
            let mut w = word.clone();
            w.push(i.clone());
            if oa != ob {
                return Some(w);
            }
            if seen.insert((na, nb)) {
                queue.push_back((na, nb, w));
            }
        }
    }
    None
}

/// The deterministic part of the conformance suite: transition cover,
/// padded with every middle section of length up to `extra_states`,
/// concatenated with the characterization set.
pub fn w_method_suite(hypothesis: &MealyMachine, extra_states: usize) -> Vec<Word> {
    let cover = state_cover(hypothesis);
    let inputs = hypothesis.inputs();
    let mut transition_cover: Vec<Word> = cover.clone();
    for c in &cover {
        for i in inputs {
            let mut w = c.clone();
            w.push(i.clone());
            transition_cover.push(w);
        }
    }
    let wset = characterization_set(hypothesis);

    let mut middles: Vec<Word> = vec![Vec::new()];
    let mut frontier: Vec<Word> = vec![Vec::new()];
    for _ in 0..extra_states {
        let mut next = Vec::new();
        for m in &frontier {
            for i in inputs {
                let mut w = m.clone();
                w.push(i.clone());
                next.push(w);
            }
        }
        middles.extend(next.iter().cloned());
        frontier = next;
    }
    middles.sort();

    let mut suite: Vec<Word> = Vec::new();
    let mut seen: BTreeSet<Word> = BTreeSet::new();
    for p in &transition_cover {
        for m in &middles {
            for w in &wset {
                let full: Word = p.iter().chain(m.iter()).chain(w.iter()).cloned().collect();
                if !full.is_empty() && seen.insert(full.clone()) {
                    suite.push(full);
                }
            }
        }
    }
    suite
}
