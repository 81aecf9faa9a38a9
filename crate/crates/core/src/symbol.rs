//! Action and output symbols.
//!
//! Symbols are short identifiers shared across alphabets, words, traces and
//! automata. They are reference-counted so that words can be cloned freely
//! during learning without copying string data.

use std::borrow::Borrow;
use std::fmt;
use std::sync::Arc;

/// An action or output symbol. Ordering and hashing follow the underlying
/// string, so symbol sets and transition maps have a stable order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: impl AsRef<str>) -> Self {
        Symbol(Arc::from(name.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// A symbol is well formed when it is non-empty and free of whitespace,
    /// which keeps the wire protocol and the model file format unambiguous.
    pub fn is_well_formed(&self) -> bool {
        !self.0.is_empty() && !self.0.chars().any(char::is_whitespace)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl From<String> for Symbol {
    fn from(s: String) -> Self {
        Symbol::new(s)
    }
}

impl Borrow<str> for Symbol {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for Symbol {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// A finite input word.
pub type Word = Vec<Symbol>;

/// Builds a word from string literals; test and example helper.
pub fn word(symbols: &[&str]) -> Word {
    symbols.iter().map(|s| Symbol::new(s)).collect()
}
