//! The query cache: a rooted tree of executed traces.
//!
//! Edges are labelled by input symbols and each node carries the output
//! observed for the edge leading into it. A query whose word is a prefix of
//! an already-executed trace is answered from the tree without touching the
//! system. Inserting a trace that contradicts a stored annotation is a
//! determinism violation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::symbol::{Symbol, Word};

#[derive(Debug, Error)]
#[error("determinism violation at step {index} of {word:?}: cached `{cached}`, observed `{observed}`")]
pub struct CacheConflict {
    pub word: Word,
    pub index: usize,
    pub cached: Symbol,
    pub observed: Symbol,
}

#[derive(Debug, Default, Clone)]
struct Node {
    children: BTreeMap<Symbol, (Symbol, Node)>,
}

/// Prefix tree of executed SUL runs.
#[derive(Debug, Default, Clone)]
pub struct TraceCache {
    root: Node,
    traces: usize,
}

impl TraceCache {
    pub fn new() -> Self {
        TraceCache::default()
    }

    /// Number of inserted traces (not nodes).
    pub fn trace_count(&self) -> usize {
        self.traces
    }

    /// Answers `word` from the tree when the whole word is covered.
    pub fn lookup(&self, word: &[Symbol]) -> Option<Word> {
        let mut node = &self.root;
        let mut outputs = Vec::with_capacity(word.len());
        for i in word {
            let (o, next) = node.children.get(i)?;
            outputs.push(o.clone());
            node = next;
        }
        Some(outputs)
    }

    /// Stores an executed trace, verifying that the shared prefix agrees
    /// with existing annotations.
    pub fn insert(&mut self, word: &[Symbol], outputs: &[Symbol]) -> Result<(), CacheConflict> {
        assert_eq!(word.len(), outputs.len(), "trace shape mismatch");
        let mut node = &mut self.root;
        for (idx, (i, o)) in word.iter().zip(outputs).enumerate() {
            if let Some((cached, _)) = node.children.get(i) {
                if cached != o {
                    return Err(CacheConflict {
                        word: word.to_vec(),
                        index: idx,
                        cached: cached.clone(),
                        observed: o.clone(),
                    });
                }
            }
            node = &mut node
                .children
                .entry(i.clone())
                .or_insert_with(|| (o.clone(), Node::default()))
                .1;
        }
        self.traces += 1;
        Ok(())
    }

    /// All root-to-leaf traces currently stored, as (inputs, outputs) pairs.
    /// Used to replay the cache against a conjecture.
    pub fn traces(&self) -> Vec<(Word, Word)> {
        fn walk(node: &Node, ins: &mut Word, outs: &mut Word, acc: &mut Vec<(Word, Word)>) {
            if node.children.is_empty() {
                if !ins.is_empty() {
                    acc.push((ins.clone(), outs.clone()));
                }
                return;
            }
            for (i, (o, next)) in &node.children {
                ins.push(i.clone());
                outs.push(o.clone());
                walk(next, ins, outs, acc);
                ins.pop();
                outs.pop();
            }
        }
        let mut acc = Vec::new();
        walk(&self.root, &mut Vec::new(), &mut Vec::new(), &mut acc);
        acc
    }

    /// Debug dump of the tree in DOT format.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph trace_cache {\n  n0 [label=\"\" shape=point];\n");
        let mut counter = 1usize;
        fn walk(node: &Node, id: usize, counter: &mut usize, out: &mut String) {
            for (i, (o, next)) in &node.children {
                let child = *counter;
                *counter += 1;
                let _ = writeln!(out, "  n{child} [label=\"{o}\"];");
                let _ = writeln!(out, "  n{id} -> n{child} [label=\"{i}\"];");
                walk(next, child, counter, out);
            }
        }
        walk(&self.root, 0, &mut counter, &mut out);
        out.push_str("}\n");
        out
    }
}
