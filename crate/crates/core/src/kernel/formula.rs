//! Propositional formulas and their concrete syntax.
//!
//! Grammar (loosest binding first):
//!
//! ```text
//! F ::= F "->" F      right-associative
//!     | F "\/" F      right-associative
//!     | F "/\" F      right-associative
//!     | ident | "⊤" | "⊥" | "(" F ")"
//! ```
//!
//! The Unicode connectives `→`, `∨`, `∧` are accepted as input aliases; the
//! printer always emits the ASCII forms with the minimum number of parentheses.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    Atom(String),
    Truth,
    Falsity,
    Implies(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    pub fn implies(lhs: Formula, rhs: Formula) -> Self {
        Formula::Implies(Box::new(lhs), Box::new(rhs))
    }

    pub fn and(lhs: Formula, rhs: Formula) -> Self {
        Formula::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: Formula, rhs: Formula) -> Self {
        Formula::Or(Box::new(lhs), Box::new(rhs))
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Truth | Formula::Falsity => 1,
            Formula::Implies(a, b) | Formula::And(a, b) | Formula::Or(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Children in left-to-right order (empty for atoms and constants).
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom(_) | Formula::Truth | Formula::Falsity => Vec::new(),
            Formula::Implies(a, b) | Formula::And(a, b) | Formula::Or(a, b) => vec![a, b],
        }
    }

    /// Distinct atom names, sorted.
    pub fn atoms(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_atoms(&self, out: &mut Vec<String>) {
        match self {
            Formula::Atom(name) => out.push(name.clone()),
            Formula::Truth | Formula::Falsity => {}
            Formula::Implies(a, b) | Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (op, lhs, rhs) = match self {
            Formula::Atom(name) => return f.write_str(name),
            Formula::Truth => return f.write_str("⊤"),
            Formula::Falsity => return f.write_str("⊥"),
            Formula::Implies(a, b) => ("->", a, b),
            Formula::Or(a, b) => ("\\/", a, b),
            Formula::And(a, b) => ("/\\", a, b),
        };
        let prec = self.precedence();
        // All binary connectives are right-associative.
        if lhs.precedence() <= prec {
            write!(f, "({lhs})")?;
        } else {
            write!(f, "{lhs}")?;
        }
        write!(f, " {op} ")?;
        if rhs.precedence() < prec {
            write!(f, "({rhs})")
        } else {
            write!(f, "{rhs}")
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("parse error at {position}: {message}")]
pub struct ParseError {
    /// Character offset into the input.
    pub position: usize,
    pub message: String,
}

pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(is_ident_continue)
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Ident(String),
    Top,
    Bot,
    Arrow,
    And,
    Or,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let token = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => Token::LParen,
            ')' => Token::RParen,
            '⊤' => Token::Top,
            '⊥' => Token::Bot,
            '→' => Token::Arrow,
            '∧' => Token::And,
            '∨' => Token::Or,
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 1;
                Token::Arrow
            }
            '/' if chars.get(i + 1) == Some(&'\\') => {
                i += 1;
                Token::And
            }
            '\\' if chars.get(i + 1) == Some(&'/') => {
                i += 1;
                Token::Or
            }
            c if c.is_alphabetic() || c == '_' => {
                while i + 1 < chars.len() && is_ident_continue(chars[i + 1]) {
                    i += 1;
                }
                Token::Ident(chars[start..=i].iter().collect())
            }
            other => return Err(ParseError { position: start, message: format!("unexpected character {other:?}") }),
        };
        out.push((start, token));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { position: self.offset(), message: message.into() }
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Token::Arrow) {
            self.pos += 1;
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.conjunction()?;
        if self.peek() == Some(&Token::Or) {
            self.pos += 1;
            let rhs = self.disjunction()?;
            return Ok(Formula::or(lhs, rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.primary()?;
        if self.peek() == Some(&Token::And) {
            self.pos += 1;
            let rhs = self.conjunction()?;
            return Ok(Formula::and(lhs, rhs));
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        let token = self.peek().cloned().ok_or_else(|| self.error("unexpected end of input"))?;
        match token {
            Token::Ident(name) => {
                self.pos += 1;
                Ok(Formula::Atom(name))
            }
            Token::Top => {
                self.pos += 1;
                Ok(Formula::Truth)
            }
            Token::Bot => {
                self.pos += 1;
                Ok(Formula::Falsity)
            }
            Token::LParen => {
                self.pos += 1;
                let inner = self.implication()?;
                if self.peek() != Some(&Token::RParen) {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            other => Err(self.error(format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses a formula; the whole input must be consumed.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0, end: text.chars().count() };
    let formula = parser.implication()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.error("trailing input"));
    }
    Ok(formula)
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}
