//! Reader and writer for the QDIMACS text format.
//!
//! The reader is tolerant where benchmark files commonly deviate from the
//! standard: consecutive same-quantifier lines are merged into one block,
//! header counts are advisory (mismatches are reported as diagnostics, not
//! errors), tautological clauses are dropped, and matrix variables missing
//! from the prefix are closed existentially.

use crate::formula::{Lit, Pcnf, Prefix, Quant, Var};
use std::fmt;

/// Non-fatal observations made while parsing.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct ParseDiagnostics {
    pub dropped_tautologies: usize,
    pub free_vars_closed: usize,
    /// Line of the first non-fatal anomaly (header count mismatch), if any.
    pub line: Option<usize>,
    pub header_mismatch: bool,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ParseErrorKind {
    EmptyInput,
    MissingHeader,
    MalformedHeader,
    UnexpectedToken(String),
    VarOutOfRange { var: i64, max_var: u32 },
    MissingTerminator,
    DuplicateQuantification(u32),
    QuantifierAfterClauses,
    EmptyQuantifierBlock,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match &self.kind {
            ParseErrorKind::EmptyInput => "empty input".to_string(),
            ParseErrorKind::MissingHeader => "missing `p cnf` header".to_string(),
            ParseErrorKind::MalformedHeader => "malformed `p cnf` header".to_string(),
            ParseErrorKind::UnexpectedToken(t) => format!("unexpected token `{t}`"),
            ParseErrorKind::VarOutOfRange { var, max_var } => {
                format!("variable {var} exceeds declared maximum {max_var}")
            }
            ParseErrorKind::MissingTerminator => "missing terminating 0".to_string(),
            ParseErrorKind::DuplicateQuantification(v) => {
                format!("variable {v} quantified twice")
            }
            ParseErrorKind::QuantifierAfterClauses => {
                "quantifier line after first clause".to_string()
            }
            ParseErrorKind::EmptyQuantifierBlock => "empty quantifier block".to_string(),
        };
        write!(f, "line {}: {}", self.line, msg)
    }
}

impl std::error::Error for ParseError {}

struct Tokens<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

enum Tok<'a> {
    Word(&'a [u8]),
    Eof,
}

impl<'a> Tokens<'a> {
    fn new(bytes: &'a [u8]) -> Tokens<'a> {
        Tokens {
            bytes,
            pos: 0,
            line: 1,
        }
    }

    /// Next whitespace-delimited token, skipping `c` comment lines.
    fn next(&mut self) -> Tok<'a> {
        loop {
            while self.pos < self.bytes.len() {
                let b = self.bytes[self.pos];
                if b == b'\n' {
                    self.line += 1;
                    self.pos += 1;
                } else if b.is_ascii_whitespace() {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if self.pos >= self.bytes.len() {
                return Tok::Eof;
            }
            // Comment lines start with `c` as the first token of a line.
            if self.bytes[self.pos] == b'c' && self.at_line_start_token() {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            let start = self.pos;
            while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            return Tok::Word(&self.bytes[start..self.pos]);
        }
    }

    fn at_line_start_token(&self) -> bool {
        // `c` introduces a comment only if followed by whitespace/EOL.
        match self.bytes.get(self.pos + 1) {
            None => true,
            Some(b) => b.is_ascii_whitespace(),
        }
    }
}

fn parse_int(word: &[u8]) -> Option<i64> {
    let s = std::str::from_utf8(word).ok()?;
    s.parse::<i64>().ok()
}

/// Parses QDIMACS text. Returns the PCNF together with diagnostics, or a
/// syntax error carrying the offending line number.
pub fn parse(input: &[u8]) -> Result<(Pcnf, ParseDiagnostics), ParseError> {
    let mut toks = Tokens::new(input);
    let mut diags = ParseDiagnostics::default();

    // Header.
    let max_var;
    let declared_clauses;
    match toks.next() {
        Tok::Eof => {
            return Err(ParseError {
                line: toks.line,
                kind: ParseErrorKind::EmptyInput,
            })
        }
        Tok::Word(b"p") => {
            let line = toks.line;
            let bad = |line| ParseError {
                line,
                kind: ParseErrorKind::MalformedHeader,
            };
            match toks.next() {
                Tok::Word(b"cnf") => {}
                _ => return Err(bad(line)),
            }
            max_var = match toks.next() {
                Tok::Word(w) => match parse_int(w) {
                    // Bounded so literals fit the packed representation.
                    Some(n) if (0..=i64::from(u32::MAX >> 1)).contains(&n) => n as u32,
                    _ => return Err(bad(line)),
                },
                Tok::Eof => return Err(bad(line)),
            };
            declared_clauses = match toks.next() {
                Tok::Word(w) => match parse_int(w) {
                    Some(n) if n >= 0 => n as u64,
                    _ => return Err(bad(line)),
                },
                Tok::Eof => return Err(bad(line)),
            };
        }
        Tok::Word(w) => {
            return Err(ParseError {
                line: toks.line,
                kind: if w.first().is_some_and(|b| {
                    *b == b'-' || b.is_ascii_digit() || *b == b'a' || *b == b'e'
                }) {
                    ParseErrorKind::MissingHeader
                } else {
                    ParseErrorKind::UnexpectedToken(String::from_utf8_lossy(w).into_owned())
                },
            })
        }
    }

    let check_var = |v: i64, line: usize| -> Result<Var, ParseError> {
        let id = v.unsigned_abs();
        if id == 0 || id > u64::from(max_var) {
            return Err(ParseError {
                line,
                kind: ParseErrorKind::VarOutOfRange {
                    var: v,
                    max_var,
                },
            });
        }
        Ok(Var::new(id as u32))
    };

    let mut blocks: Vec<(Quant, Vec<Var>)> = Vec::new();
    let mut quantified = vec![false; max_var as usize];
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    let mut in_matrix = false;

    loop {
        match toks.next() {
            Tok::Eof => break,
            Tok::Word(w @ (b"a" | b"e")) => {
                let line = toks.line;
                if in_matrix {
                    return Err(ParseError {
                        line,
                        kind: ParseErrorKind::QuantifierAfterClauses,
                    });
                }
                let quant = if w == b"a" { Quant::Forall } else { Quant::Exists };
                let mut vars = Vec::new();
                loop {
                    match toks.next() {
                        Tok::Eof => {
                            return Err(ParseError {
                                line: toks.line,
                                kind: ParseErrorKind::MissingTerminator,
                            })
                        }
                        Tok::Word(w) => {
                            let n = parse_int(w).ok_or_else(|| ParseError {
                                line: toks.line,
                                kind: ParseErrorKind::UnexpectedToken(
                                    String::from_utf8_lossy(w).into_owned(),
                                ),
                            })?;
                            if n == 0 {
                                break;
                            }
                            if n < 0 {
                                return Err(ParseError {
                                    line: toks.line,
                                    kind: ParseErrorKind::UnexpectedToken(format!("{n}")),
                                });
                            }
                            let v = check_var(n, toks.line)?;
                            if quantified[v.index()] {
                                return Err(ParseError {
                                    line: toks.line,
                                    kind: ParseErrorKind::DuplicateQuantification(v.id()),
                                });
                            }
                            quantified[v.index()] = true;
                            vars.push(v);
                        }
                    }
                }
                if vars.is_empty() {
                    return Err(ParseError {
                        line,
                        kind: ParseErrorKind::EmptyQuantifierBlock,
                    });
                }
                blocks.push((quant, vars));
            }
            Tok::Word(w) => {
                let n = parse_int(w).ok_or_else(|| ParseError {
                    line: toks.line,
                    kind: ParseErrorKind::UnexpectedToken(String::from_utf8_lossy(w).into_owned()),
                })?;
                in_matrix = true;
                let mut lits = Vec::new();
                let mut cur = n;
                loop {
                    if cur == 0 {
                        break;
                    }
                    check_var(cur, toks.line)?;
                    lits.push(Lit::from_dimacs(cur));
                    cur = match toks.next() {
                        Tok::Eof => {
                            return Err(ParseError {
                                line: toks.line,
                                kind: ParseErrorKind::MissingTerminator,
                            })
                        }
                        Tok::Word(w) => parse_int(w).ok_or_else(|| ParseError {
                            line: toks.line,
                            kind: ParseErrorKind::UnexpectedToken(
                                String::from_utf8_lossy(w).into_owned(),
                            ),
                        })?,
                    };
                }
                clauses.push(lits);
            }
        }
    }

    if clauses.len() as u64 != declared_clauses {
        diags.header_mismatch = true;
        diags.line.get_or_insert(toks.line);
    }

    let prefix = Prefix::new(blocks).map_err(|e| ParseError {
        line: toks.line,
        kind: match e {
            crate::formula::PrefixError::DuplicateVar(v) => {
                ParseErrorKind::DuplicateQuantification(v.id())
            }
            crate::formula::PrefixError::EmptyBlock => ParseErrorKind::EmptyQuantifierBlock,
        },
    })?;
    let (psi, pd) = Pcnf::new(prefix, clauses);
    diags.dropped_tautologies = pd.dropped_tautologies;
    diags.free_vars_closed = pd.free_vars_closed;
    Ok((psi, diags))
}

/// Writes a PCNF in QDIMACS format. `parse(write(ψ))` is structurally `ψ`.
pub fn write(psi: &Pcnf) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "p cnf {} {}\n",
        psi.max_var(),
        psi.clauses.len()
    ));
    for b in psi.prefix.blocks() {
        out.push(match b.quant {
            Quant::Forall => 'a',
            Quant::Exists => 'e',
        });
        for v in &b.vars {
            out.push_str(&format!(" {v}"));
        }
        out.push_str(" 0\n");
    }
    for c in &psi.clauses {
        for l in c.lits() {
            out.push_str(&format!("{l} "));
        }
        out.push_str("0\n");
    }
    out
}
