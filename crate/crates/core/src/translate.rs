//! Translation of learned Mealy machines into interface automata.
//!
//! Each machine transition `q --i/o--> q'` with a real output becomes the
//! two-step chain `q --?i--> m --!o--> q'` through a fresh intermediate
//! state. A quiescent step becomes the single input transition `q --?i-->
//! q'`. A step labelled with the refusal output (when the alphabet declares
//! one) marks an input the component does not accept there and produces no
//! transition at all. Behaviorally equivalent states are merged afterwards,
//! treating inputs and outputs uniformly as edge labels.

use std::collections::BTreeSet;

use crate::ia::{ActionSignature, AutomatonError, InterfaceAutomaton, StateId};
use crate::mealy::MealyMachine;
use crate::symbol::Symbol;

/// Options for the translation.
#[derive(Debug, Clone, Default)]
pub struct TranslateOptions {
    /// Output symbol marking refused inputs; transitions carrying it are
    /// dropped instead of translated.
    pub refusal: Option<Symbol>,
}

/// Translates a Mealy machine into a deterministic interface automaton.
pub fn mealy_to_ia(
    machine: &MealyMachine,
    opts: &TranslateOptions,
) -> Result<InterfaceAutomaton, AutomatonError> {
    let quiescence = machine.quiescence().clone();
    let outputs: BTreeSet<Symbol> = machine
        .outputs()
        .iter()
        .filter(|o| **o != quiescence && Some(*o) != opts.refusal.as_ref())
        .cloned()
        .collect();
    let signature = ActionSignature::new(machine.inputs().iter().cloned(), outputs)?;

    let n = machine.state_count();
    let mut transitions = Vec::new();
    let mut next_fresh = n;
    for q in 0..n {
        for i in machine.inputs() {
            let (o, to) = machine.step(q, i).expect("input-complete");
            if Some(&o) == opts.refusal.as_ref() {
                continue;
            }
            if o == quiescence {
                transitions.push((StateId(q), i.clone(), StateId(to)));
            } else {
                let mid = StateId(next_fresh);
                next_fresh += 1;
                transitions.push((StateId(q), i.clone(), mid));
                transitions.push((mid, o.clone(), StateId(to)));
            }
        }
    }
    let expanded = InterfaceAutomaton::new(
        signature,
        next_fresh.max(1),
        StateId(machine.initial()),
        transitions,
    )?;
    expanded.minimize()
}

/// One step of the Mealy-style view of a translated automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViewStep {
    /// The input was accepted; the emitted output actions follow, in order.
    /// An empty list is a quiescent step.
    Emitted(Vec<Symbol>),
    /// The input has no transition in the current state.
    Refused,
}

/// Runs an input word over an automaton the way a tester would: feed each
/// input, then follow output transitions until a quiescent state is reached,
/// recording the outputs seen. Stops at the first refused input. Requires a
/// deterministic automaton whose states never mix enabled inputs and
/// outputs, which holds for every translated machine.
pub fn mealy_view(
    ia: &InterfaceAutomaton,
    word: &[Symbol],
) -> Result<Vec<ViewStep>, AutomatonError> {
    ia.require_deterministic()?;
    let mut here = ia.initial();
    let mut steps = Vec::with_capacity(word.len());
    for input in word {
        let next = ia.next_states(here, input)?;
        let Some(&to) = next.iter().next() else {
            steps.push(ViewStep::Refused);
            return Ok(steps);
        };
        here = to;
        let mut emitted = Vec::new();
        loop {
            let outs = ia.observable_out(here)?;
            let Some(o) = outs.iter().next().cloned() else {
                break;
            };
            let succ = ia.next_states(here, &o)?;
            let &to = succ.iter().next().expect("enabled output has a successor");
            emitted.push(o);
            here = to;
        }
        steps.push(ViewStep::Emitted(emitted));
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::word;

    #[test]
    fn all_quiescent_machine_becomes_input_self_loops() {
        let m = MealyMachine::from_table(
            &["a", "b"],
            "quiescence",
            0,
            &[&[("quiescence", 0), ("quiescence", 0)]],
        )
        .unwrap();
        let ia = mealy_to_ia(&m, &TranslateOptions::default()).unwrap();
        assert_eq!(ia.state_count(), 1);
        assert_eq!(ia.transition_count(), 2);
        for (from, label, to) in ia.transitions() {
            assert_eq!(from, to);
            assert!(ia.signature().inputs().contains(label));
        }
        assert!(ia.signature().outputs().is_empty());
    }

    #[test]
    fn single_output_expands_to_intermediate_state() {
        let m = MealyMachine::from_table(&["i"], "quiescence", 0, &[&[("o", 0)]]).unwrap();
        let ia = mealy_to_ia(&m, &TranslateOptions::default()).unwrap();
        assert_eq!(ia.state_count(), 2);
        assert_eq!(ia.transition_count(), 2);
        let q0 = ia.initial();
        let mid = *ia
            .next_states(q0, &Symbol::new("i"))
            .unwrap()
            .iter()
            .next()
            .unwrap();
        assert_ne!(mid, q0);
        assert_eq!(
            ia.next_states(mid, &Symbol::new("o"))
                .unwrap()
                .into_iter()
                .collect::<Vec<_>>(),
            vec![q0]
        );
    }

    #[test]
    fn refused_inputs_are_dropped() {
        let m = MealyMachine::from_table(
            &["a", "b"],
            "quiescence",
            0,
            &[&[("blocked", 0), ("o", 1)], &[("quiescence", 0), ("blocked", 1)]],
        )
        .unwrap();
        let opts = TranslateOptions {
            refusal: Some(Symbol::new("blocked")),
        };
        let ia = mealy_to_ia(&m, &opts).unwrap();
        // state 0: `a` refused, `b` emits o; state 1: `a` quiescent back to
        // 0, `b` refused.
        assert!(ia
            .next_states(ia.initial(), &Symbol::new("a"))
            .unwrap()
            .is_empty());
        assert!(!ia.signature().outputs().contains(&Symbol::new("blocked")));
        let steps = mealy_view(&ia, &word(&["b", "a", "b"])).unwrap();
        assert_eq!(
            steps,
            vec![
                ViewStep::Emitted(vec![Symbol::new("o")]),
                ViewStep::Emitted(vec![]),
                ViewStep::Emitted(vec![Symbol::new("o")]),
            ]
        );
    }

    #[test]
    fn translation_preserves_behavior_on_random_words() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let inputs = [Symbol::new("a"), Symbol::new("b")];
        let outputs = [Symbol::new("x"), Symbol::new("y")];
        let q = Symbol::new("quiescence");
        for _ in 0..20 {
            let m = MealyMachine::random_minimal(&mut rng, &inputs, &outputs, &q, 5);
            let ia = mealy_to_ia(&m, &TranslateOptions::default()).unwrap();
            for _ in 0..50 {
                let w: Vec<Symbol> = (0..rng.gen_range(0..12))
                    .map(|_| inputs[rng.gen_range(0..inputs.len())].clone())
                    .collect();
                let expected: Vec<ViewStep> = m
                    .output_word(&w)
                    .unwrap()
                    .into_iter()
                    .map(|o| {
                        if o == q {
                            ViewStep::Emitted(vec![])
                        } else {
                            ViewStep::Emitted(vec![o])
                        }
                    })
                    .collect();
                assert_eq!(mealy_view(&ia, &w).unwrap(), expected);
            }
        }
    }
}
