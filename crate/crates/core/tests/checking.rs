//! Deadlock-search checks against an independent full-enumeration oracle,
//! plus the two case studies at reduced bounds.

use std::collections::{BTreeSet, VecDeque};

use midlearn_core::casestudies::{
    build_case1, build_case2, compress_case2, Case1Params, Case1Port, Case2Params,
    PortModelSource,
};
use midlearn_core::ia::{ActionSignature, InterfaceAutomaton, StateId};
use midlearn_core::mcheck::{
    CompositeState, Conclusion, ProcessInstance, ProcessNetwork, SearchLimits, SearchOrder,
};
use midlearn_core::symbol::Symbol;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent oracle: plain breadth-first enumeration of the reachable
/// composite states into an explicit set, reporting whether any stuck,
/// not-all-terminal state exists. Shares no search code with the checker.
fn oracle_has_deadlock(net: &ProcessNetwork) -> (bool, usize) {
    let mut seen: BTreeSet<CompositeState> = BTreeSet::new();
    let mut queue = VecDeque::new();
    let initial = net.initial_state();
    seen.insert(initial.clone());
    queue.push_back(initial);
    let all_terminal = |s: &CompositeState| {
        net.processes().iter().enumerate().all(|(i, p)| {
            p.terminal
                .iter()
                .any(|t| t.0 == s.components()[i])
        })
    };
    while let Some(state) = queue.pop_front() {
        let succs = net.compose_step(&state).unwrap();
        if succs.is_empty() && !all_terminal(&state) {
            return (true, seen.len());
        }
        for (_, next) in succs {
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    (false, seen.len())
}

/// Random closed network: every output is wired to exactly one input of a
/// different process; transitions are random over each process's own
/// alphabet.
fn random_network(rng: &mut ChaCha8Rng) -> ProcessNetwork {
    loop {
        let proc_count = rng.gen_range(2..=3usize);
        let action_count = rng.gen_range(2..=5usize);
        let mut emits: Vec<Vec<Symbol>> = vec![Vec::new(); proc_count];
        let mut receives: Vec<Vec<Symbol>> = vec![Vec::new(); proc_count];
        for a in 0..action_count {
            let emitter = rng.gen_range(0..proc_count);
            let mut receiver = rng.gen_range(0..proc_count);
            while receiver == emitter {
                receiver = rng.gen_range(0..proc_count);
            }
            let sym = Symbol::new(format!("a{a}"));
            emits[emitter].push(sym.clone());
            receives[receiver].push(sym);
        }
        let mut processes = Vec::new();
        let mut ok = true;
        for pi in 0..proc_count {
            if emits[pi].is_empty() && receives[pi].is_empty() {
                ok = false;
                break;
            }
            let states = rng.gen_range(1..=6u32);
            let sig = ActionSignature::new(receives[pi].clone(), emits[pi].clone()).unwrap();
            let labels: Vec<Symbol> = receives[pi]
                .iter()
                .chain(emits[pi].iter())
                .cloned()
                .collect();
            let mut transitions = Vec::new();
            for q in 0..states {
                for label in &labels {
                    if rng.gen_bool(0.6) {
                        transitions.push((
                            StateId(q),
                            label.clone(),
                            StateId(rng.gen_range(0..states)),
                        ));
                    }
                }
            }
            let ia = InterfaceAutomaton::new(sig, states, StateId(0), transitions).unwrap();
            let mut instance = ProcessInstance::new(format!("p{pi}"), ia);
            if rng.gen_bool(0.4) {
                instance = instance.with_terminal([StateId(rng.gen_range(0..states))]);
            }
            processes.push(instance);
        }
        if !ok {
            continue;
        }
        if let Ok(net) = ProcessNetwork::new(processes) {
            return net;
        }
    }
}

#[test]
fn verdicts_match_the_full_enumeration_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let mut deadlocks = 0;
    for round in 0..60 {
        let net = random_network(&mut rng);
        let (oracle_dl, oracle_states) = oracle_has_deadlock(&net);
        for order in [SearchOrder::Dfs, SearchOrder::Bfs] {
            let v = net.find_deadlock(&SearchLimits {
                max_states: 1_000_000,
                order,
            });
            let got_dl = v.conclusion == Conclusion::Deadlock;
            assert_eq!(
                got_dl, oracle_dl,
                "round {round}: {order:?} disagrees with oracle"
            );
            if got_dl {
                let w = v.witness.expect("deadlock carries a witness");
                net.replay_witness(&w).expect("witness must replay");
            } else {
                assert_eq!(v.conclusion, Conclusion::Ok);
                // Exhaustive searches agree on the reachable count.
                assert_eq!(v.states_explored, oracle_states, "round {round}");
            }
        }
        if oracle_dl {
            deadlocks += 1;
        }
    }
    // The generator must exercise both verdicts.
    assert!(deadlocks > 5 && deadlocks < 55, "got {deadlocks}/60 deadlocks");
}

#[test]
fn case1_nonstrict_deadlocks_and_strict_is_ok() {
    let nonstrict = build_case1(&Case1Params {
        n: 6,
        port: Case1Port::NonStrict,
        source: PortModelSource::Reference,
    })
    .unwrap();
    let v = nonstrict.find_deadlock(&SearchLimits::default());
    assert_eq!(v.conclusion, Conclusion::Deadlock);
    let witness = v.witness.expect("deadlock witness");
    nonstrict.replay_witness(&witness).unwrap();

    for capacity in [1u32, 6] {
        let strict = build_case1(&Case1Params {
            n: 6,
            port: Case1Port::Strict { capacity },
            source: PortModelSource::Reference,
        })
        .unwrap();
        let v = strict.find_deadlock(&SearchLimits::default());
        assert_eq!(v.conclusion, Conclusion::Ok, "strict N={capacity}");
    }
}

#[test]
fn case1_verdicts_agree_with_oracle_and_orders() {
    for (params, expect_deadlock) in [
        (
            Case1Params {
                n: 2,
                port: Case1Port::NonStrict,
                source: PortModelSource::Reference,
            },
            true,
        ),
        (
            Case1Params {
                n: 2,
                port: Case1Port::Strict { capacity: 2 },
                source: PortModelSource::Reference,
            },
            false,
        ),
        (
            Case1Params {
                n: 6,
                port: Case1Port::Strict { capacity: 1 },
                source: PortModelSource::Reference,
            },
            false,
        ),
    ] {
        let net = build_case1(&params).unwrap();
        let (oracle_dl, _) = oracle_has_deadlock(&net);
        assert_eq!(oracle_dl, expect_deadlock);
        for order in [SearchOrder::Dfs, SearchOrder::Bfs] {
            let v = net.find_deadlock(&SearchLimits {
                max_states: 1_000_000,
                order,
            });
            assert_eq!(v.conclusion == Conclusion::Deadlock, expect_deadlock);
        }
    }
}

#[test]
fn case1_strict_n1_reachable_graph_is_small_and_ok() {
    let net = build_case1(&Case1Params {
        n: 1,
        port: Case1Port::Strict { capacity: 1 },
        source: PortModelSource::Reference,
    })
    .unwrap();
    let (dl, states) = oracle_has_deadlock(&net);
    assert!(!dl);
    // Small enough to enumerate by hand; freeze the count as a regression
    // anchor.
    assert!(states <= 32, "reachable graph grew to {states}");
    let v = net.find_deadlock(&SearchLimits::default());
    assert_eq!(v.conclusion, Conclusion::Ok);
    assert_eq!(v.states_explored, states);
}

#[test]
fn case1_initial_successors_match_hand_enumeration() {
    let net = build_case1(&Case1Params {
        n: 2,
        port: Case1Port::Strict { capacity: 2 },
        source: PortModelSource::Reference,
    })
    .unwrap();
    // Level 1: the planner can hand its first message to channel 1, or the
    // controller can register its read request with channel 1.
    let initial = net.initial_state();
    let level1: BTreeSet<String> = net
        .compose_step(&initial)
        .unwrap()
        .into_iter()
        .map(|(a, _)| a.to_string())
        .collect();
    let expected: BTreeSet<String> = ["c1_write", "c1_read"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    assert_eq!(level1, expected);
    // Level 2, after the write: a second write, the read request, or the
    // read request's delivery never fires yet (no read pending).
    let after_write = net
        .compose_step(&initial)
        .unwrap()
        .into_iter()
        .find(|(a, _)| a.as_str() == "c1_write")
        .unwrap()
        .1;
    let level2: BTreeSet<String> = net
        .compose_step(&after_write)
        .unwrap()
        .into_iter()
        .map(|(a, _)| a.to_string())
        .collect();
    let expected2: BTreeSet<String> = ["c1_write", "c1_read"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    assert_eq!(level2, expected2);
}

#[test]
fn case2_small_grid_reproduces_the_verdict_pattern() {
    let base = Case2Params {
        n1: 4,
        n2: 4,
        n3: 4,
        size: 2,
        nonblocking_first: false,
        source: PortModelSource::Reference,
    };
    let expect = [
        (Case2Params { ..base.clone() }, Conclusion::Ok),
        (
            Case2Params {
                n1: 2,
                ..base.clone()
            },
            Conclusion::Deadlock,
        ),
        (
            Case2Params {
                n2: 2,
                ..base.clone()
            },
            Conclusion::Deadlock,
        ),
        (
            Case2Params {
                n1: 2,
                nonblocking_first: true,
                ..base.clone()
            },
            Conclusion::Ok,
        ),
    ];
    for (params, conclusion) in expect {
        let net = build_case2(&params).unwrap();
        let v = net.find_deadlock(&SearchLimits::default());
        assert_eq!(v.conclusion, conclusion, "params {params:?}");
        let (oracle_dl, _) = oracle_has_deadlock(&net);
        assert_eq!(oracle_dl, conclusion == Conclusion::Deadlock);
        if let Some(w) = v.witness {
            net.replay_witness(&w).unwrap();
        }
    }
}

#[test]
fn case2_monotonicity_under_blocking_reads() {
    // With equal bounds the network completes; shrinking a producer bound
    // below the consumer bound on a blocking channel starves the consumer.
    let ok = Case2Params {
        n1: 5,
        n2: 5,
        n3: 5,
        size: 2,
        nonblocking_first: false,
        source: PortModelSource::Reference,
    };
    assert_eq!(
        build_case2(&ok)
            .unwrap()
            .find_deadlock(&SearchLimits::default())
            .conclusion,
        Conclusion::Ok
    );
    for n1 in 1..5 {
        let p = Case2Params {
            n1,
            ..ok.clone()
        };
        assert_eq!(
            build_case2(&p)
                .unwrap()
                .find_deadlock(&SearchLimits::default())
                .conclusion,
            Conclusion::Deadlock,
            "n1={n1}"
        );
    }
    for n2 in 1..5 {
        let p = Case2Params {
            n2,
            ..ok.clone()
        };
        assert_eq!(
            build_case2(&p)
                .unwrap()
                .find_deadlock(&SearchLimits::default())
                .conclusion,
            Conclusion::Deadlock,
            "n2={n2}"
        );
    }
}

#[test]
fn compression_preserves_verdicts() {
    for (params, expect) in [
        (
            Case2Params {
                n1: 30,
                n2: 30,
                n3: 30,
                size: 2,
                nonblocking_first: false,
                source: PortModelSource::Reference,
            },
            Conclusion::Ok,
        ),
        (
            Case2Params {
                n1: 25,
                n2: 30,
                n3: 30,
                size: 2,
                nonblocking_first: false,
                source: PortModelSource::Reference,
            },
            Conclusion::Deadlock,
        ),
        (
            Case2Params {
                n1: 25,
                n2: 30,
                n3: 30,
                size: 2,
                nonblocking_first: true,
                source: PortModelSource::Reference,
            },
            Conclusion::Ok,
        ),
    ] {
        let (reduced, was_compressed) = compress_case2(&params);
        assert!(was_compressed);
        let full = build_case2(&params)
            .unwrap()
            .find_deadlock(&SearchLimits::default());
        let small = build_case2(&reduced)
            .unwrap()
            .find_deadlock(&SearchLimits::default());
        assert_eq!(full.conclusion, expect);
        assert_eq!(small.conclusion, expect);
        assert!(small.states_explored <= full.states_explored);
    }
}

#[test]
fn early_deadlock_discovery_is_cheap_under_dfs() {
    // Depth-first search hits the non-strict deadlock after a thin slice of
    // that model's own reachable space.
    let nonstrict = build_case1(&Case1Params {
        n: 100,
        port: Case1Port::NonStrict,
        source: PortModelSource::Reference,
    })
    .unwrap();
    let dl = nonstrict.find_deadlock(&SearchLimits {
        max_states: 10_000_000,
        order: SearchOrder::Dfs,
    });
    assert_eq!(dl.conclusion, Conclusion::Deadlock);
    let (whole_space, complete) = nonstrict.count_reachable(10_000_000);
    assert!(complete);
    assert!(
        dl.states_explored * 100 < whole_space,
        "deadlock took {} states, the whole space has {}",
        dl.states_explored,
        whole_space
    );
}

#[test]
fn learned_and_reference_channel_models_give_identical_verdicts() {
    for port in [Case1Port::NonStrict, Case1Port::Strict { capacity: 2 }] {
        let learned = build_case1(&Case1Params {
            n: 2,
            port,
            source: PortModelSource::Learned,
        })
        .unwrap();
        let reference = build_case1(&Case1Params {
            n: 2,
            port,
            source: PortModelSource::Reference,
        })
        .unwrap();
        let a = learned.find_deadlock(&SearchLimits::default());
        let b = reference.find_deadlock(&SearchLimits::default());
        assert_eq!(a.conclusion, b.conclusion);
        assert_eq!(a.states_explored, b.states_explored);
    }
}
