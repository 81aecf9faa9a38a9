//! The system-under-learning abstraction: a resettable component that
//! consumes one input symbol per step and answers with one output symbol.

use thiserror::Error;

use crate::mealy::MealyMachine;
use crate::symbol::Symbol;

#[derive(Debug, Error)]
pub enum SulError {
    #[error("step before reset")]
    NotReset,
    #[error("symbol `{0}` not in the session alphabet")]
    UnknownSymbol(Symbol),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
}

/// The abstract alphabet a session speaks. `quiescence` is the output that
/// stands for "no observable reaction" and is always a member of `outputs`;
/// `refusal`, when present, marks inputs the component does not accept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SulAlphabet {
    pub inputs: Vec<Symbol>,
    pub outputs: Vec<Symbol>,
    pub quiescence: Symbol,
    pub refusal: Option<Symbol>,
}

impl SulAlphabet {
    pub fn new(
        inputs: impl IntoIterator<Item = Symbol>,
        outputs: impl IntoIterator<Item = Symbol>,
        quiescence: Symbol,
        refusal: Option<Symbol>,
    ) -> Self {
        let mut inputs: Vec<Symbol> = inputs.into_iter().collect();
        inputs.sort();
        inputs.dedup();
        let mut outputs: Vec<Symbol> = outputs.into_iter().collect();
        outputs.push(quiescence.clone());
        if let Some(r) = &refusal {
            outputs.push(r.clone());
        }
        outputs.sort();
        outputs.dedup();
        SulAlphabet {
            inputs,
            outputs,
            quiescence,
            refusal,
        }
    }
}

/// A resettable system under learning. After a reset, identical input words
/// must yield identical output words; stepping before the first reset is
/// illegal.
pub trait SulSession {
    fn alphabet(&self) -> &SulAlphabet;
    fn reset(&mut self) -> Result<(), SulError>;
    fn step(&mut self, input: &Symbol) -> Result<Symbol, SulError>;
}

/// A Mealy machine exposed as a session; the ground-truth system in learner
/// tests.
#[derive(Debug, Clone)]
pub struct MealySul {
    machine: MealyMachine,
    alphabet: SulAlphabet,
    state: Option<u32>,
}

impl MealySul {
    pub fn new(machine: MealyMachine) -> Self {
        let alphabet = SulAlphabet::new(
            machine.inputs().to_vec(),
            machine.outputs().iter().cloned(),
            machine.quiescence().clone(),
            None,
        );
        MealySul {
            machine,
            alphabet,
            state: None,
        }
    }

    pub fn machine(&self) -> &MealyMachine {
        &self.machine
    }
}

impl SulSession for MealySul {
    fn alphabet(&self) -> &SulAlphabet {
        &self.alphabet
    }

    fn reset(&mut self) -> Result<(), SulError> {
        self.state = Some(self.machine.initial());
        Ok(())
    }

    fn step(&mut self, input: &Symbol) -> Result<Symbol, SulError> {
        let q = self.state.ok_or(SulError::NotReset)?;
        let (o, to) = self
            .machine
            .step(q, input)
            .map_err(|_| SulError::UnknownSymbol(input.clone()))?;
        self.state = Some(to);
        Ok(o)
    }
}
