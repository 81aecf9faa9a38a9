//! Loopback tests for the TCP teacher-to-system protocol.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;

use midlearn_core::learner::learn_ia;
use midlearn_core::remote::{serve, RemoteSul};
use midlearn_core::sim::{FusionProfile, PortKind, PortSul};
use midlearn_core::sul::{SulError, SulSession};
use midlearn_core::symbol::Symbol;
use midlearn_core::teacher::{EqConfig, SulTeacher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spawn_server(kind: PortKind, profile: FusionProfile) -> (String, thread::JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let session = PortSul::new(kind, profile).unwrap();
    let handle = thread::spawn(move || {
        serve(session, listener).unwrap();
    });
    (addr, handle)
}

#[test]
fn proxy_is_transparent_on_a_thousand_random_words() {
    let (addr, handle) = spawn_server(PortKind::strict(2), FusionProfile::Raw);
    let mut proxy = RemoteSul::connect(&addr).unwrap();
    let mut local = PortSul::new(PortKind::strict(2), FusionProfile::Raw).unwrap();
    assert_eq!(proxy.alphabet(), local.alphabet());

    let inputs = local.alphabet().inputs.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..1000 {
        proxy.reset().unwrap();
        local.reset().unwrap();
        let len = rng.gen_range(0..10);
        for _ in 0..len {
            let i = &inputs[rng.gen_range(0..inputs.len())];
            assert_eq!(proxy.step(i).unwrap(), local.step(i).unwrap());
        }
    }
    proxy.bye().unwrap();
    handle.join().unwrap();
}

#[test]
fn learning_over_loopback_matches_in_process_learning() {
    let (addr, handle) = spawn_server(PortKind::standard(), FusionProfile::Calibrated);
    let proxy = RemoteSul::connect(&addr).unwrap();
    let mut remote_teacher = SulTeacher::new(proxy, EqConfig::default());
    let (remote_model, _) = learn_ia(&mut remote_teacher).unwrap();

    let local = PortSul::new(PortKind::standard(), FusionProfile::Calibrated).unwrap();
    let mut local_teacher = SulTeacher::new(local, EqConfig::default());
    let (local_model, _) = learn_ia(&mut local_teacher).unwrap();

    assert!(remote_model.isomorphic(&local_model).unwrap().is_some());
    remote_teacher.into_session().bye().unwrap();
    handle.join().unwrap();
}

#[test]
fn unknown_symbol_crosses_the_wire_as_an_error() {
    let (addr, handle) = spawn_server(PortKind::standard(), FusionProfile::Raw);
    let mut proxy = RemoteSul::connect(&addr).unwrap();
    proxy.reset().unwrap();
    assert!(matches!(
        proxy.step(&Symbol::new("bogus")),
        Err(SulError::UnknownSymbol(_))
    ));
    proxy.bye().unwrap();
    handle.join().unwrap();
}

#[test]
fn server_survives_client_disconnects() {
    let (addr, handle) = spawn_server(PortKind::standard(), FusionProfile::Raw);
    for _ in 0..3 {
        let mut proxy = RemoteSul::connect(&addr).unwrap();
        proxy.reset().unwrap();
        proxy.step(&Symbol::new("write")).unwrap();
        drop(proxy); // disconnect without BYE
    }
    // A fresh client still gets clean behavior.
    let mut proxy = RemoteSul::connect(&addr).unwrap();
    proxy.reset().unwrap();
    assert_eq!(
        proxy.step(&Symbol::new("read")).unwrap(),
        Symbol::new("quiescence")
    );
    proxy.bye().unwrap();
    handle.join().unwrap();
}

#[test]
fn server_killed_mid_learning_surfaces_a_transport_error() {
    // A budgeted relay: accepts one client, forwards a fixed number of
    // requests to a real session, then drops the connection.
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let handle = thread::spawn(move || {
        let mut session = PortSul::new(PortKind::standard(), FusionProfile::Calibrated).unwrap();
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut writer = stream;
        let mut line = String::new();
        for served in 0..60 {
            line.clear();
            if reader.read_line(&mut line).unwrap() == 0 {
                return;
            }
            let trimmed = line.trim();
            let response = match trimmed {
                "HELLO" => "OK midlearn-sul 1".to_string(),
                "ALPHABET" => {
                    let a = session.alphabet();
                    let ins: Vec<&str> = a.inputs.iter().map(|s| s.as_str()).collect();
                    let outs: Vec<&str> = a.outputs.iter().map(|s| s.as_str()).collect();
                    format!("IN {} / OUT {}", ins.join(" "), outs.join(" "))
                }
                "RESET" => {
                    session.reset().unwrap();
                    "OK".to_string()
                }
                _ if trimmed.starts_with("STEP ") => {
                    let sym = Symbol::new(trimmed.trim_start_matches("STEP "));
                    match session.step(&sym) {
                        Ok(o) if o == session.alphabet().quiescence => "QUIESCENT".into(),
                        Ok(o) => format!("OUT {o}"),
                        Err(_) => "ERR unknown-symbol".into(),
                    }
                }
                _ => "ERR unknown-verb".to_string(),
            };
            let _ = served;
            writer.write_all(response.as_bytes()).unwrap();
            writer.write_all(b"\n").unwrap();
        }
        // Budget exhausted: hard-drop mid-run.
        drop(writer);
    });

    let proxy = RemoteSul::connect(&addr).unwrap();
    let mut teacher = SulTeacher::new(proxy, EqConfig::default());
    let err = learn_ia(&mut teacher).unwrap_err();
    let text = err.to_string();
    assert!(
        text.contains("transport"),
        "expected a transport diagnostic, got: {text}"
    );
    // The cache survives the abort.
    assert!(teacher.cache().unwrap().trace_count() > 0);
    handle.join().unwrap();
}

#[test]
fn raw_protocol_lines_match_the_specification() {
    let (addr, handle) = spawn_server(PortKind::standard(), FusionProfile::Raw);
    let mut stream = TcpStream::connect(&addr).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut ask = |line: &str| -> String {
        stream.write_all(line.as_bytes()).unwrap();
        stream.write_all(b"\n").unwrap();
        let mut response = String::new();
        reader.read_line(&mut response).unwrap();
        response.trim_end().to_string()
    };
    assert_eq!(ask("HELLO"), "OK midlearn-sul 1");
    assert_eq!(ask("RESET"), "OK");
    assert_eq!(ask("STEP read"), "QUIESCENT");
    assert_eq!(ask("STEP bogus"), "ERR unknown-symbol");
    assert_eq!(ask("RESET"), "OK");
    assert_eq!(ask("STEP write"), "QUIESCENT");
    assert_eq!(ask("STEP read"), "OUT rok+wok");
    assert_eq!(ask("NOPE"), "ERR unknown-verb");
    assert_eq!(ask("BYE"), "OK");
    handle.join().unwrap();
}
