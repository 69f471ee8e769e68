//! Human-readable stack-script rendering of conditions.
//!
//! Disjunctions become nested `IF`/`ELSE`/`ENDIF` blocks, one branch per
//! disjunct; conjunctions are emitted in sequence. The text parses back into
//! the normalized condition tree.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use super::{Condition, Digest};
use crate::types::Party;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("unexpected end of script")]
    UnexpectedEnd,
    #[error("unexpected token `{0}`")]
    UnexpectedToken(String),
    #[error("malformed push `{0}`")]
    BadPush(String),
    #[error("empty branch")]
    EmptyBranch,
}

/// Renders `condition` (after normalization) as indented script text.
pub fn emit_script(condition: &Condition) -> String {
    let mut out = String::new();
    emit(&condition.normalize(), 0, &mut out);
    out
}

fn line(out: &mut String, depth: usize, text: &str) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push_str(text);
    out.push('\n');
}

fn emit(condition: &Condition, depth: usize, out: &mut String) {
    match condition {
        Condition::AnyoneCanSpend => line(out, depth, "TRUE"),
        Condition::Hashlock(d) => line(out, depth, &format!("SHA256 <{d}> EQUALVERIFY")),
        Condition::AbsTimelock(t) => line(out, depth, &format!("<{t}> CHECKLOCKTIMEVERIFY DROP")),
        Condition::RelTimelock(t) => line(out, depth, &format!("<{t}> CHECKSEQUENCEVERIFY DROP")),
        Condition::SigBy { signers, threshold } => {
            if signers.len() == 1 && *threshold == 1 {
                let p = signers.iter().next().unwrap();
                line(out, depth, &format!("<{p}> CHECKSIGVERIFY"));
            } else {
                let mut text = format!("<{threshold}>");
                for p in signers {
                    let _ = write!(text, " <{p}>");
                }
                let _ = write!(text, " <{}> CHECKMULTISIGVERIFY", signers.len());
                line(out, depth, &text);
            }
        }
        Condition::All(children) => children.iter().for_each(|c| emit(c, depth, out)),
        Condition::Any(children) => emit_branches(children, depth, out),
    }
}

fn emit_branches(children: &[Condition], depth: usize, out: &mut String) {
    match children {
        [] => {}
        [only] => emit(only, depth, out),
        [first, rest @ ..] => {
            line(out, depth, "IF");
            emit(first, depth + 1, out);
            line(out, depth, "ELSE");
            emit_branches(rest, depth + 1, out);
            line(out, depth, "ENDIF");
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Push {
    Party(Party),
    Digest(Digest),
    Number(u64),
}

fn parse_push(token: &str) -> Result<Push, ScriptError> {
    let inner = token
        .strip_prefix('<')
        .and_then(|t| t.strip_suffix('>'))
        .ok_or_else(|| ScriptError::UnexpectedToken(token.to_string()))?;
    if let Ok(p) = inner.parse::<Party>() {
        return Ok(Push::Party(p));
    }
    if inner.len() == 64 {
        let mut bytes = [0u8; 32];
        hex::decode_to_slice(inner, &mut bytes).map_err(|_| ScriptError::BadPush(token.into()))?;
        return Ok(Push::Digest(Digest(bytes)));
    }
    inner.parse().map(Push::Number).map_err(|_| ScriptError::BadPush(token.into()))
}

struct Parser<'a> {
    tokens: Vec<&'a str>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn next(&mut self) -> Result<&'a str, ScriptError> {
        let t = self.tokens.get(self.pos).copied().ok_or(ScriptError::UnexpectedEnd)?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: &str) -> Result<(), ScriptError> {
        match self.next()? {
            t if t == want => Ok(()),
            t => Err(ScriptError::UnexpectedToken(t.to_string())),
        }
    }

    fn peek(&self) -> Option<&'a str> {
        self.tokens.get(self.pos).copied()
    }

    /// Parses items until `ELSE`, `ENDIF` or end of input.
    fn sequence(&mut self) -> Result<Condition, ScriptError> {
        let mut items = Vec::new();
        while let Some(t) = self.peek() {
            if t == "ELSE" || t == "ENDIF" {
                break;
            }
            items.push(self.item()?);
        }
        match items.len() {
            0 => Err(ScriptError::EmptyBranch),
            1 => Ok(items.pop().unwrap()),
            _ => Ok(Condition::All(items)),
        }
    }

    fn item(&mut self) -> Result<Condition, ScriptError> {
        let token = self.next()?;
        match token {
            "TRUE" => Ok(Condition::AnyoneCanSpend),
            "IF" => {
                let left = self.sequence()?;
                self.expect("ELSE")?;
                let right = self.sequence()?;
                self.expect("ENDIF")?;
                Ok(Condition::Any(vec![left, right]))
            }
            "SHA256" => {
                let push = parse_push(self.next()?)?;
                self.expect("EQUALVERIFY")?;
                match push {
                    Push::Digest(d) => Ok(Condition::Hashlock(d)),
                    _ => Err(ScriptError::BadPush(format!("{push:?}"))),
                }
            }
            t if t.starts_with('<') => self.after_push(parse_push(t)?),
            t => Err(ScriptError::UnexpectedToken(t.to_string())),
        }
    }

    fn after_push(&mut self, push: Push) -> Result<Condition, ScriptError> {
        match push {
            Push::Party(p) => {
                self.expect("CHECKSIGVERIFY")?;
                Ok(Condition::sig(p))
            }
            Push::Number(n) => match self.next()? {
                "CHECKLOCKTIMEVERIFY" => {
                    self.expect("DROP")?;
                    Ok(Condition::AbsTimelock(n))
                }
                "CHECKSEQUENCEVERIFY" => {
                    self.expect("DROP")?;
                    Ok(Condition::RelTimelock(n))
                }
                t => {
                    let mut signers = BTreeSet::new();
                    let mut push = parse_push(t)?;
                    while let Push::Party(p) = push {
                        signers.insert(p);
                        push = parse_push(self.next()?)?;
                    }
                    let Push::Number(count) = push else {
                        return Err(ScriptError::BadPush(format!("{push:?}")));
                    };
                    self.expect("CHECKMULTISIGVERIFY")?;
                    if count as usize != signers.len() {
                        return Err(ScriptError::BadPush(format!("<{count}>")));
                    }
                    Ok(Condition::SigBy { signers, threshold: n as usize })
                }
            },
            Push::Digest(d) => Err(ScriptError::BadPush(d.to_string())),
        }
    }
}

/// Parses script text produced by [`emit_script`].
pub fn parse_script(text: &str) -> Result<Condition, ScriptError> {
    let mut parser = Parser { tokens: text.split_whitespace().collect(), pos: 0 };
    let condition = parser.sequence()?;
    match parser.peek() {
        None => Ok(condition.normalize()),
        Some(t) => Err(ScriptError::UnexpectedToken(t.to_string())),
    }
}
