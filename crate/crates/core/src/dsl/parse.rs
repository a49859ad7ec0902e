//! Lexer and recursive-descent parser for schematic terms.
//!
//! ```text
//! term       := [scalar] coeff* factor* ['|' constraint]
//! coeff      := ('a' | 'O' | 'R' | 'delta' | 'C' | '|u|' | '|uInf|') ['^' exp]
//! factor     := ('nab' ['^' idx])* base ['^' idx]
//! base       := NAME | '(' NAME (',' NAME)* ')'
//! idx        := INT | VAR [('+'|'-') INT]
//! constraint := atom ('+' atom)* '=' ('i' [('+'|'-') INT] | INT)
//! ```

use num_traits::{One, Zero};

use crate::dsl::term::{Constraint, Factor, Idx, SchematicTerm, Total, GLOBAL};
use crate::error::{Error, Result};
use crate::monomial::{base_of, CoeffClass, WeightMonomial};
use crate::quantity::QuantityCatalog;
use crate::rational::{parse_q, Q};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Abs(String),
    Caret,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Bar,
    Plus,
    Minus,
    Eq,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str, line0: usize) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (line0, 1usize);
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        let start = (line, col);
        let push = |out: &mut Vec<Spanned>, tok| {
            out.push(Spanned {
                tok,
                line: start.0,
                col: start.1,
            })
        };
        if c == '\n' {
            line += 1;
            col = 1;
            k += 1;
            continue;
        }
        if c.is_whitespace() || c == '*' || c == '·' {
            k += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut j = k;
            while j < chars.len()
                && (chars[j].is_ascii_alphanumeric() || chars[j] == '_' || chars[j] == '\'')
            {
                j += 1;
            }
            let s: String = chars[k..j].iter().collect();
            push(&mut out, Tok::Ident(s));
            col += j - k;
            k = j;
            continue;
        }
        if c.is_ascii_digit() {
            let mut j = k;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j + 1 < chars.len() && chars[j] == '/' && chars[j + 1].is_ascii_digit() {
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
            }
            let s: String = chars[k..j].iter().collect();
            push(&mut out, Tok::Num(s));
            col += j - k;
            k = j;
            continue;
        }
        if c == '|' {
            // `|u|`-style absolute values versus the constraint bar.
            let mut j = k + 1;
            while j < chars.len()
                && (chars[j].is_ascii_alphanumeric() || chars[j] == '_' || chars[j] == '\'')
            {
                j += 1;
            }
            if j > k + 1 && j < chars.len() && chars[j] == '|' {
                let s: String = chars[k..=j].iter().collect();
                if base_of(&s).is_some() {
                    push(&mut out, Tok::Abs(s));
                    col += j + 1 - k;
                    k = j + 1;
                    continue;
                }
            }
            push(&mut out, Tok::Bar);
            k += 1;
            col += 1;
            continue;
        }
        let tok = match c {
            '^' => Tok::Caret,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '=' => Tok::Eq,
            _ => {
                return Err(Error::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character `{c}`"),
                });
            }
        };
        push(&mut out, tok);
        k += 1;
        col += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    cat: &'a QuantityCatalog,
    end: (usize, usize),
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (line, col) = self.here();
        Err(Error::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn int(&mut self) -> Result<i64> {
        match self.bump() {
            Some(Tok::Num(s)) if !s.contains('/') => {
                s.parse().or_else(|_| self.err("integer too large"))
            }
            _ => {
                self.pos -= 1;
                self.err("expected integer")
            }
        }
    }

    /// Signed rational, braced or bare.
    fn exponent(&mut self) -> Result<Q> {
        let braced = self.peek() == Some(&Tok::LBrace);
        if braced {
            self.pos += 1;
        }
        let neg = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        let v = match self.bump() {
            Some(Tok::Num(s)) => parse_q(&s)?,
            _ => {
                self.pos -= 1;
                return self.err("expected exponent");
            }
        };
        if braced {
            self.expect(Tok::RBrace, "`}`")?;
        }
        Ok(if neg { -v } else { v })
    }

    fn idx(&mut self) -> Result<Idx> {
        let braced = self.peek() == Some(&Tok::LBrace);
        if braced {
            self.pos += 1;
        }
        let out = match self.peek().cloned() {
            Some(Tok::Num(_)) => {
                let n = self.int()?;
                Idx::Lit(u32::try_from(n).or_else(|_| self.err("index out of range"))?)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if !is_index_name(&name) {
                    self.pos -= 1;
                    return self.err(format!("bad index `{name}`"));
                }
                let off = self.offset()?;
                Idx::Var { name, off }
            }
            _ => return self.err("expected index"),
        };
        if braced {
            self.expect(Tok::RBrace, "`}`")?;
        }
        Ok(out)
    }

    fn offset(&mut self) -> Result<i32> {
        let sign = match self.peek() {
            Some(Tok::Plus) => 1,
            Some(Tok::Minus) => -1,
            _ => return Ok(0),
        };
        if !matches!(self.peek2(), Some(Tok::Num(_))) {
            return Ok(0);
        }
        self.pos += 1;
        let n = self.int()?;
        Ok(sign * n as i32)
    }

    fn name(&mut self) -> Result<String> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) => {
                if !self.cat.contains(&s) {
                    return Err(Error::UnknownSymbol(s));
                }
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected quantity name"),
        }
    }

    fn term(&mut self) -> Result<SchematicTerm> {
        let mut scalar = Q::one();
        let neg = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        if let Some(Tok::Num(s)) = self.peek().cloned() {
            scalar = parse_q(&s)?;
            self.pos += 1;
        }
        if neg {
            scalar = -scalar;
        }
        if scalar.is_zero() {
            return self.err("zero scalar");
        }

        let mut coeff = WeightMonomial::one();
        loop {
            let sym = match self.peek() {
                Some(Tok::Ident(s)) if s == "C" => {
                    self.pos += 1;
                    coeff.class = CoeffClass::Bounded;
                    continue;
                }
                Some(Tok::Ident(s)) if matches!(s.as_str(), "a" | "O" | "R" | "delta") => s.clone(),
                Some(Tok::Abs(s)) => s.clone(),
                _ => break,
            };
            self.pos += 1;
            let base = base_of(&sym).expect("coefficient symbol");
            let e = if self.peek() == Some(&Tok::Caret) {
                self.pos += 1;
                self.exponent()?
            } else {
                Q::one()
            };
            coeff.set_exp(base, coeff.exp(base) + e);
        }

        let mut factors = Vec::new();
        loop {
            let mut deriv: Option<Idx> = None;
            while matches!(self.peek(), Some(Tok::Ident(s)) if s == "nab") {
                self.pos += 1;
                let d = if self.peek() == Some(&Tok::Caret) {
                    self.pos += 1;
                    self.idx()?
                } else {
                    Idx::Lit(1)
                };
                deriv = Some(match (deriv, d) {
                    (None, d) => d,
                    (Some(Idx::Lit(x)), Idx::Lit(y)) => Idx::Lit(x + y),
                    (Some(Idx::Lit(x)), Idx::Var { name, off })
                    | (Some(Idx::Var { name, off }), Idx::Lit(x)) => Idx::Var {
                        name,
                        off: off + x as i32,
                    },
                    _ => return self.err("two symbolic derivative counts on one factor"),
                });
            }
            let class = match self.peek() {
                Some(Tok::LParen) => {
                    self.pos += 1;
                    let mut names = vec![self.name()?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        names.push(self.name()?);
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    names
                }
                Some(Tok::Ident(_)) => vec![self.name()?],
                _ if deriv.is_some() => return self.err("expected quantity after `nab`"),
                _ => break,
            };
            let power = if self.peek() == Some(&Tok::Caret) {
                self.pos += 1;
                self.idx()?
            } else {
                Idx::Lit(1)
            };
            factors.push(Factor {
                class,
                deriv: deriv.unwrap_or(Idx::Lit(0)),
                power,
            });
        }

        let constraint = if self.peek() == Some(&Tok::Bar) {
            self.pos += 1;
            Some(self.constraint()?)
        } else {
            None
        };
        if self.pos < self.toks.len() {
            return self.err("unexpected token");
        }
        if factors.is_empty() && coeff.is_one() && scalar.is_one() {
            return self.err("empty term");
        }
        let t = SchematicTerm {
            scalar,
            coeff,
            factors,
            constraint,
        };
        validate(&t).or_else(|m| self.err(m))?;
        Ok(t)
    }

    fn constraint(&mut self) -> Result<Constraint> {
        let mut vars = Vec::new();
        let mut konst: i64 = 0;
        loop {
            match self.peek().cloned() {
                Some(Tok::Ident(v)) if is_index_name(&v) && v != GLOBAL => {
                    self.pos += 1;
                    vars.push(v);
                }
                Some(Tok::Num(_)) => konst += self.int()?,
                _ => return self.err("expected index variable"),
            }
            match self.peek() {
                Some(Tok::Plus) => self.pos += 1,
                Some(Tok::Eq) => {
                    self.pos += 1;
                    break;
                }
                _ => return self.err("expected `+` or `=`"),
            }
        }
        let total = match self.peek().cloned() {
            Some(Tok::Ident(v)) if v == GLOBAL => {
                self.pos += 1;
                Total::Sym(self.offset()? - konst as i32)
            }
            Some(Tok::Num(_)) => Total::Lit(self.int()? - konst),
            _ => return self.err("expected `i` or integer after `=`"),
        };
        if vars.is_empty() {
            return self.err("constraint without variables");
        }
        Ok(Constraint { vars, total })
    }
}

fn is_index_name(s: &str) -> bool {
    s == GLOBAL
        || (s.starts_with('i') && s.len() > 1 && s[1..].chars().all(|c| c.is_ascii_digit()))
        || (s.starts_with('j') && s[1..].chars().all(|c| c.is_ascii_digit()))
}

/// Structural checks shared by the parser and constructors.
pub fn validate(t: &SchematicTerm) -> std::result::Result<(), String> {
    let cvars: Vec<&str> = t
        .constraint
        .iter()
        .flat_map(|c| c.vars.iter().map(String::as_str))
        .collect();
    for f in &t.factors {
        for idx in [&f.deriv, &f.power] {
            if let Some(v) = idx.var_name() {
                if v != GLOBAL && !cvars.contains(&v) {
                    return Err(format!("index `{v}` not in constraint"));
                }
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    for v in &cvars {
        if !seen.insert(*v) {
            return Err(format!("index `{v}` repeated in constraint"));
        }
    }
    Ok(())
}

pub fn parse_term_at(src: &str, line: usize) -> Result<SchematicTerm> {
    parse_term_with(src, line, QuantityCatalog::builtin())
}

fn parse_term_with(src: &str, line: usize, cat: &QuantityCatalog) -> Result<SchematicTerm> {
    let toks = lex(src, line)?;
    let end = (
        line,
        src.lines()
            .last()
            .map(|l| l.chars().count() + 1)
            .unwrap_or(1),
    );
    let mut p = Parser {
        toks,
        pos: 0,
        cat,
        end,
    };
    p.term()
}

/// Parses and normalizes one term.
pub fn parse_term(src: &str) -> Result<SchematicTerm> {
    Ok(crate::dsl::normalize::normalize_term(&parse_raw(src)?))
}

/// Parses without normalizing (scalars and factor order preserved).
pub fn parse_raw(src: &str) -> Result<SchematicTerm> {
    parse_term_at(src, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_factor_alternative() {
        let t = parse_raw("nab^{i1} psi^{i2} nab^{i3} (psi, chih) nab^{i4} Psi | i1+i2+i3+i4=i")
            .unwrap();
        assert_eq!(t.factors.len(), 3);
        assert_eq!(t.factors[1].class, vec!["psi", "chih"]);
        assert_eq!(t.constraint.as_ref().unwrap().total, Total::Sym(0));
    }

    #[test]
    fn single_quantity() {
        let t = parse_raw("rho").unwrap();
        assert_eq!(t.factors.len(), 1);
        assert!(t.constraint.is_none());
    }

    #[test]
    fn coefficient_prefix() {
        let t = parse_raw("a^{3/2} |u|^{-3} nab^{i} alphabar").unwrap();
        assert_eq!(t.coeff.to_string(), "a^{3/2} |u|^{-3}");
        assert_eq!(t.factors[0].deriv, Idx::var("i", 0));
    }

    #[test]
    fn constant_moves_to_total() {
        let t = parse_raw("nab^{i1} psi^{i2+1} nab^{i3} rho | i1+i2+i3+1=i").unwrap();
        assert_eq!(t.constraint.unwrap().total, Total::Sym(-1));
    }

    #[test]
    fn errors_carry_position_and_symbol() {
        match parse_raw("rho nab") {
            Err(Error::Syntax { line: 1, col, .. }) => assert!(col >= 5),
            other => panic!("{other:?}"),
        }
        assert_eq!(parse_raw("rho xi"), Err(Error::UnknownSymbol("xi".into())));
        assert!(matches!(
            parse_raw("nab^{i1} rho"),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn scalars() {
        let t = parse_raw("-1/2 trchi beta").unwrap();
        assert_eq!(t.scalar, crate::rational::q(-1, 2));
    }
}
