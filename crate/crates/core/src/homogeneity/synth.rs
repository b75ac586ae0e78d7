//! Shortest-program search over annotation pairs.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use super::program::{tokenize, CaseMode, Instruction, LookupTable, TransformProgram};
use super::signature_of;
use crate::error::{Error, Result};

pub const MAX_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub column: String,
    pub pairs: Vec<Pair>,
}

impl Annotation {
    pub fn source_signature(&self) -> Result<String> {
        shared_signature(self.pairs.iter().map(|p| p.source.as_str()), "sources")
    }

    pub fn target_signature(&self) -> Result<String> {
        shared_signature(self.pairs.iter().map(|p| p.target.as_str()), "targets")
    }
}

fn shared_signature<'a>(mut values: impl Iterator<Item = &'a str>, what: &str) -> Result<String> {
    let first = values
        .next()
        .map(signature_of)
        .ok_or_else(|| Error::invalid("annotation has no pairs"))?;
    for v in values {
        let s = signature_of(v);
        if s != first {
            return Err(Error::invalid(format!(
                "annotation {what} disagree on format: '{first}' vs '{s}'"
            )));
        }
    }
    Ok(first)
}

type Key = (usize, usize, Vec<(u8, usize, usize, usize, String)>);

struct PairView {
    tokens: Vec<String>,
    target: Vec<char>,
}

impl PairView {
    fn rest(&self, pos: usize) -> &[char] {
        &self.target[pos..]
    }

    /// New position if `out` matches the target at `pos`.
    fn advance(&self, pos: usize, out: &str) -> Option<usize> {
        let out: Vec<char> = out.chars().collect();
        (!out.is_empty() && self.rest(pos).starts_with(&out)).then_some(pos + out.len())
    }
}

/// Instructions that emit a non-empty prefix of the first pair's remaining target.
fn candidates(view: &PairView, pos: usize, const_ok: &dyn Fn(char) -> bool) -> Vec<Instruction> {
    let rest = view.rest(pos);
    let tokens: Vec<&str> = view.tokens.iter().map(String::as_str).collect();
    let mut out = Vec::new();
    let mut push = |ins: Instruction| {
        if let Some(s) = ins.eval(&tokens) {
            if view.advance(pos, &s).is_some() {
                out.push(ins);
            }
        }
    };
    for (i, tok) in view.tokens.iter().enumerate() {
        let token = i + 1;
        push(Instruction::EmitToken { token });
        for table in LookupTable::ALL {
            push(Instruction::EmitMapped { token, table });
        }
        for case in [CaseMode::Upper, CaseMode::Lower, CaseMode::Title] {
            push(Instruction::EmitCase { token, case });
        }
        let n = tok.chars().count();
        for start in 0..n {
            for end in start + 1..=n {
                if start == 0 && end == n {
                    continue;
                }
                push(Instruction::EmitSubstr { token, start, end });
            }
        }
    }
    for len in 1..=rest.len() {
        if !const_ok(rest[len - 1]) {
            break;
        }
        out.push(Instruction::EmitConst {
            text: rest[..len].iter().collect(),
        });
    }
    out
}

/// Finds the program with the fewest instructions, then the least constant text,
/// then the smallest instruction sequence, that maps every source to its target.
pub fn synthesize_program(annotation: &Annotation) -> Result<TransformProgram> {
    annotation.source_signature()?;
    annotation.target_signature()?;
    let views: Vec<PairView> = annotation
        .pairs
        .iter()
        .map(|p| PairView {
            tokens: tokenize(&p.source).into_iter().map(str::to_string).collect(),
            target: p.target.chars().collect(),
        })
        .collect();
    let source_chars: HashSet<char> = views.iter().flat_map(|v| v.tokens.iter().flat_map(|t| t.chars())).collect();
    let const_ok = |c: char| !source_chars.contains(&c);

    let start = vec![0usize; views.len()];
    let goal: Vec<usize> = views.iter().map(|v| v.target.len()).collect();
    let mut heap: BinaryHeap<Reverse<(Key, Vec<usize>, Vec<Instruction>)>> = BinaryHeap::new();
    let mut settled: BTreeSet<Vec<usize>> = BTreeSet::new();
    heap.push(Reverse(((0, 0, Vec::new()), start, Vec::new())));

    while let Some(Reverse((key, state, program))) = heap.pop() {
        if state == goal {
            return Ok(TransformProgram::new(program));
        }
        if !settled.insert(state.clone()) || key.0 >= MAX_DEPTH {
            continue;
        }
        'ins: for ins in candidates(&views[0], state[0], &const_ok) {
            let mut next = Vec::with_capacity(views.len());
            for (view, &pos) in views.iter().zip(&state) {
                let tokens: Vec<&str> = view.tokens.iter().map(String::as_str).collect();
                match ins.eval(&tokens).and_then(|s| view.advance(pos, &s)) {
                    Some(p) => next.push(p),
                    None => continue 'ins,
                }
            }
            if settled.contains(&next) {
                continue;
            }
            let const_len = match &ins {
                Instruction::EmitConst { text } => text.chars().count(),
                _ => 0,
            };
            let mut ranks = key.2.clone();
            ranks.push(ins.rank());
            let mut prog = program.clone();
            prog.push(ins);
            heap.push(Reverse(((key.0 + 1, key.1 + const_len, ranks), next, prog)));
        }
    }
    Err(Error::NoProgram)
}
