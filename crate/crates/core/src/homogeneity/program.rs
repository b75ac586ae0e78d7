//! A small string transformation language over tokenised inputs.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Maximal runs of digits or of letters; everything else separates tokens.
pub fn tokenize(input: &str) -> Vec<&str> {
    #[derive(PartialEq, Clone, Copy)]
    enum Class {
        Digit,
        Letter,
        Other,
    }
    let class = |c: char| {
        if c.is_ascii_digit() {
            Class::Digit
        } else if c.is_alphabetic() {
            Class::Letter
        } else {
            Class::Other
        }
    };
    let mut out = Vec::new();
    let mut start: Option<(usize, Class)> = None;
    for (i, ch) in input.char_indices() {
        let cl = class(ch);
        if matches!(start, Some((_, prev)) if prev == cl) {
            continue;
        }
        if let Some((s, _)) = start {
            out.push(&input[s..i]);
        }
        start = (cl != Class::Other).then_some((i, cl));
    }
    if let Some((s, _)) = start {
        out.push(&input[s..]);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseMode {
    Upper,
    Lower,
    Title,
}

/// Output forms of the built-in month-name table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LookupTable {
    #[serde(rename = "month_names:number")]
    MonthNumber,
    #[serde(rename = "month_names:abbrev")]
    MonthAbbrev,
    #[serde(rename = "month_names:full")]
    MonthFull,
}

const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

/// Month number 1..=12 for "7", "07", "jul" or "July" (case-insensitive).
fn month_of(token: &str) -> Option<usize> {
    if token.chars().all(|c| c.is_ascii_digit()) {
        return token.parse::<usize>().ok().filter(|m| (1..=12).contains(m));
    }
    let lower = token.to_lowercase();
    MONTHS
        .iter()
        .position(|m| {
            let m = m.to_lowercase();
            lower == m || (lower.chars().count() == 3 && m.starts_with(&lower))
        })
        .map(|i| i + 1)
}

impl LookupTable {
    pub const ALL: [LookupTable; 3] = [LookupTable::MonthNumber, LookupTable::MonthAbbrev, LookupTable::MonthFull];

    pub fn map(self, token: &str) -> Option<String> {
        let m = month_of(token)?;
        Some(match self {
            LookupTable::MonthNumber => format!("{m:02}"),
            LookupTable::MonthAbbrev => MONTHS[m - 1][..3].to_string(),
            LookupTable::MonthFull => MONTHS[m - 1].to_string(),
        })
    }
}

fn apply_case(s: &str, mode: CaseMode) -> String {
    match mode {
        CaseMode::Upper => s.to_uppercase(),
        CaseMode::Lower => s.to_lowercase(),
        CaseMode::Title => {
            let mut chars = s.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().chain(chars.flat_map(char::to_lowercase)).collect(),
                None => String::new(),
            }
        }
    }
}

/// Token indices are 1-based; substring bounds are 0-based character offsets, end exclusive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Instruction {
    EmitToken { token: usize },
    EmitSubstr { token: usize, start: usize, end: usize },
    EmitConst { text: String },
    EmitCase { token: usize, case: CaseMode },
    EmitMapped { token: usize, table: LookupTable },
}

impl Instruction {
    /// Output of this instruction on a tokenised input, or `None` when inapplicable.
    pub fn eval(&self, tokens: &[&str]) -> Option<String> {
        let tok = |i: usize| i.checked_sub(1).and_then(|i| tokens.get(i)).copied();
        match self {
            Instruction::EmitToken { token } => tok(*token).map(str::to_string),
            Instruction::EmitSubstr { token, start, end } => {
                let t = tok(*token)?;
                let chars: Vec<char> = t.chars().collect();
                (start < end && *end <= chars.len()).then(|| chars[*start..*end].iter().collect())
            }
            Instruction::EmitConst { text } => Some(text.clone()),
            Instruction::EmitCase { token, case } => tok(*token).map(|t| apply_case(t, *case)),
            Instruction::EmitMapped { token, table } => tok(*token).and_then(|t| table.map(t)),
        }
    }

    /// Ordering key used to pick among equally short programs.
    pub(crate) fn rank(&self) -> (u8, usize, usize, usize, String) {
        match self {
            Instruction::EmitToken { token } => (0, *token, 0, 0, String::new()),
            Instruction::EmitMapped { token, table } => (1, *token, *table as usize, 0, String::new()),
            Instruction::EmitCase { token, case } => (2, *token, *case as usize, 0, String::new()),
            Instruction::EmitSubstr { token, start, end } => (3, *token, *start, *end, String::new()),
            Instruction::EmitConst { text } => (4, 0, 0, 0, text.clone()),
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::EmitToken { token } => write!(f, "EmitToken({token})"),
            Instruction::EmitSubstr { token, start, end } => write!(f, "EmitSubstr({token}, {start}, {end})"),
            Instruction::EmitConst { text } => write!(f, "Const({text:?})"),
            Instruction::EmitCase { token, case } => write!(f, "EmitCase({token}, {case:?})"),
            Instruction::EmitMapped { token, table } => write!(f, "EmitMapped({token}, {table:?})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransformProgram {
    pub instructions: Vec<Instruction>,
}

impl TransformProgram {
    pub fn new(instructions: Vec<Instruction>) -> Self {
        TransformProgram { instructions }
    }

    pub fn apply(&self, input: &str) -> Option<String> {
        let tokens = tokenize(input);
        let mut out = String::new();
        for ins in &self.instructions {
            out.push_str(&ins.eval(&tokens)?);
        }
        Some(out)
    }

    pub fn const_len(&self) -> usize {
        self.instructions
            .iter()
            .map(|i| match i {
                Instruction::EmitConst { text } => text.chars().count(),
                _ => 0,
            })
            .sum()
    }
}

impl fmt::Display for TransformProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.instructions.iter().map(|i| i.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}
