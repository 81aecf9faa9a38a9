//! Identification and verification toolkit for publish-subscribe port
//! components.
//!
//! The crate learns finite-state models (interface automata) of simulated
//! middleware ports by active querying, optionally over a TCP proxy, and
//! verifies networks of such automata composed with control-code models by
//! explicit-state deadlock search. Serializers for a native model format,
//! DOT graphs and PROMELA-style process encodings round out the toolkit.

pub mod cache;
pub mod casestudies;
pub mod config;
pub mod export;
pub mod ia;
pub mod learner;
pub mod mcheck;
pub mod mealy;
pub mod remote;
pub mod report;
pub mod sim;
pub mod sul;
pub mod symbol;
pub mod teacher;
pub mod translate;

pub use cache::TraceCache;
pub use ia::{ActionSignature, ExecutionFragment, InterfaceAutomaton, RunOutcome, StateId};
pub use learner::{learn_ia, learn_mealy, LearnStats, ObservationTable};
pub use mcheck::{CompositeState, Conclusion, ProcessNetwork, SearchOrder, Verdict};
pub use mealy::MealyMachine;
pub use sim::{FusionProfile, InterruptStyle, PortKind, PortSim, PortSul};
pub use sul::{SulAlphabet, SulSession};
pub use symbol::{Symbol, Word};
pub use teacher::{EqConfig, PerfectTeacher, SulTeacher, Teacher};
