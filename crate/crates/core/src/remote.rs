//! Driving a system under learning across a TCP connection.
//!
//! The protocol is a line-based ASCII exchange in strict lockstep: one
//! LF-terminated request, one LF-terminated response, tokens separated by
//! single spaces.
//!
//! ```text
//! HELLO                -> OK midlearn-sul 1
//! ALPHABET             -> IN <inputs...> / OUT <outputs...>
//! RESET                -> OK
//! STEP <symbol>        -> OUT <symbol> | QUIESCENT | ERR unknown-symbol
//! BYE                  -> OK            (server shuts down)
//! anything else        -> ERR <reason>
//! ```
//!
//! Quiescent steps travel as the dedicated `QUIESCENT` token; the reserved
//! output names `quiescence` and `blocked` identify the quiescence and
//! refusal symbols in the ALPHABET response, so a proxy reconstructs the
//! exact local alphabet descriptor.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};

use thiserror::Error;

use crate::sim::{OUT_BLOCKED, OUT_QUIESCENCE};
use crate::sul::{SulAlphabet, SulError, SulSession};
use crate::symbol::Symbol;

pub const HELLO_RESPONSE: &str = "OK midlearn-sul 1";

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("session quiescence symbol must be the reserved name `quiescence`, got `{0}`")]
    NonCanonicalQuiescence(Symbol),
}

enum Flow {
    Continue,
    Shutdown,
}

fn respond(session: &mut impl SulSession, line: &str) -> (String, Flow) {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    match tokens.as_slice() {
        ["HELLO"] => (HELLO_RESPONSE.to_string(), Flow::Continue),
        ["ALPHABET"] => {
            let a = session.alphabet();
            let ins: Vec<&str> = a.inputs.iter().map(|s| s.as_str()).collect();
            let outs: Vec<&str> = a.outputs.iter().map(|s| s.as_str()).collect();
            (
                format!("IN {} / OUT {}", ins.join(" "), outs.join(" ")),
                Flow::Continue,
            )
        }
        ["RESET"] => match session.reset() {
            Ok(()) => ("OK".to_string(), Flow::Continue),
            Err(_) => ("ERR reset-failed".to_string(), Flow::Continue),
        },
        ["STEP", symbol] => {
            let sym = Symbol::new(*symbol);
            match session.step(&sym) {
                Ok(out) if out == session.alphabet().quiescence => {
                    ("QUIESCENT".to_string(), Flow::Continue)
                }
                Ok(out) => (format!("OUT {out}"), Flow::Continue),
                Err(SulError::UnknownSymbol(_)) => {
                    ("ERR unknown-symbol".to_string(), Flow::Continue)
                }
                Err(SulError::NotReset) => ("ERR session-state".to_string(), Flow::Continue),
                Err(_) => ("ERR internal".to_string(), Flow::Continue),
            }
        }
        ["BYE"] => ("OK".to_string(), Flow::Shutdown),
        [] => ("ERR empty-request".to_string(), Flow::Continue),
        _ => ("ERR unknown-verb".to_string(), Flow::Continue),
    }
}

/// Serves one client at a time on an already-bound listener; concurrent
/// connection attempts queue at the accept layer. Returns after a client
/// says BYE. A dropped connection resets the session and the server waits
/// for the next client.
pub fn serve(mut session: impl SulSession, listener: TcpListener) -> Result<(), ServeError> {
    if session.alphabet().quiescence != Symbol::new(OUT_QUIESCENCE) {
        return Err(ServeError::NonCanonicalQuiescence(
            session.alphabet().quiescence.clone(),
        ));
    }
    loop {
        let (stream, _peer) = listener.accept()?;
        match serve_client(&mut session, stream) {
            Ok(Flow::Shutdown) => return Ok(()),
            Ok(Flow::Continue) | Err(_) => {
                // Client went away or transport broke: release the run and
                // take the next connection.
                let _ = session.reset();
            }
        }
    }
}

/// Binds `addr` and serves on it.
pub fn serve_addr(session: impl SulSession, addr: impl ToSocketAddrs) -> Result<(), ServeError> {
    let listener = TcpListener::bind(addr)?;
    serve(session, listener)
}

fn serve_client(
    session: &mut impl SulSession,
    stream: TcpStream,
) -> Result<Flow, std::io::Error> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Ok(Flow::Continue); // client disconnected
        }
        let (response, flow) = respond(session, line.trim_end_matches(['\r', '\n']));
        writer.write_all(response.as_bytes())?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        if matches!(flow, Flow::Shutdown) {
            return Ok(Flow::Shutdown);
        }
    }
}

/// Client-side proxy: a session whose reset and step run over the wire.
/// Behaviorally indistinguishable from the remote session.
pub struct RemoteSul {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    alphabet: SulAlphabet,
}

impl RemoteSul {
    /// Connects, handshakes and fetches the remote alphabet.
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, SulError> {
        let stream = TcpStream::connect(addr).map_err(transport)?;
        let reader = BufReader::new(stream.try_clone().map_err(transport)?);
        let mut proxy = RemoteSul {
            reader,
            writer: stream,
            alphabet: SulAlphabet::new(
                [],
                [],
                Symbol::new(OUT_QUIESCENCE),
                None,
            ),
        };
        let hello = proxy.request("HELLO")?;
        if hello != HELLO_RESPONSE {
            return Err(SulError::Protocol(format!(
                "unexpected handshake response `{hello}`"
            )));
        }
        let alphabet_line = proxy.request("ALPHABET")?;
        proxy.alphabet = parse_alphabet(&alphabet_line)?;
        Ok(proxy)
    }

    /// Sends BYE, shutting the remote server down.
    pub fn bye(mut self) -> Result<(), SulError> {
        self.request("BYE")?;
        Ok(())
    }

    fn request(&mut self, line: &str) -> Result<String, SulError> {
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.write_all(b"\n"))
            .and_then(|_| self.writer.flush())
            .map_err(transport)?;
        let mut response = String::new();
        let n = self.reader.read_line(&mut response).map_err(transport)?;
        if n == 0 {
            return Err(SulError::Transport("server closed the connection".into()));
        }
        Ok(response.trim_end_matches(['\r', '\n']).to_string())
    }
}

fn transport(e: std::io::Error) -> SulError {
    SulError::Transport(e.to_string())
}

fn parse_alphabet(line: &str) -> Result<SulAlphabet, SulError> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let slash = tokens
        .iter()
        .position(|t| *t == "/")
        .ok_or_else(|| SulError::Protocol(format!("malformed alphabet line `{line}`")))?;
    if tokens.first() != Some(&"IN") || tokens.get(slash + 1) != Some(&"OUT") {
        return Err(SulError::Protocol(format!(
            "malformed alphabet line `{line}`"
        )));
    }
    let inputs: Vec<Symbol> = tokens[1..slash].iter().map(Symbol::new).collect();
    let outputs: Vec<Symbol> = tokens[slash + 2..].iter().map(Symbol::new).collect();
    let quiescence = Symbol::new(OUT_QUIESCENCE);
    if !outputs.contains(&quiescence) {
        return Err(SulError::Protocol(
            "remote alphabet lacks the reserved quiescence output".into(),
        ));
    }
    let refusal = outputs
        .iter()
        .find(|o| o.as_str() == OUT_BLOCKED)
        .cloned();
    Ok(SulAlphabet::new(inputs, outputs, quiescence, refusal))
}

impl SulSession for RemoteSul {
    fn alphabet(&self) -> &SulAlphabet {
        &self.alphabet
    }

    fn reset(&mut self) -> Result<(), SulError> {
        match self.request("RESET")?.as_str() {
            "OK" => Ok(()),
            other => Err(SulError::Protocol(format!(
                "unexpected RESET response `{other}`"
            ))),
        }
    }

    fn step(&mut self, input: &Symbol) -> Result<Symbol, SulError> {
        let response = self.request(&format!("STEP {input}"))?;
        if response == "QUIESCENT" {
            return Ok(self.alphabet.quiescence.clone());
        }
        if let Some(sym) = response.strip_prefix("OUT ") {
            return Ok(Symbol::new(sym.trim()));
        }
        match response.as_str() {
            "ERR unknown-symbol" => Err(SulError::UnknownSymbol(input.clone())),
            "ERR session-state" => Err(SulError::NotReset),
            other => Err(SulError::Protocol(format!(
                "unexpected STEP response `{other}`"
            ))),
        }
    }
}
