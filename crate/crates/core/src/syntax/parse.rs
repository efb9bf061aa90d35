//! Recursive-descent parser for the ASCII term and formula language.
//!
//! ```text
//! term    := var | op "(" term ("," term)* ")" | const
//! formula := disj ("->" formula)?
//! disj    := conj ("|" conj)*
//! conj    := unary ("&" unary)*
//! unary   := "!" unary | ("exists" | "forall") var "." formula | "(" formula ")" | atom
//! atom    := term ("==" | "!=") term | rel "(" term ("," term)* ")"
//! ```
//!
//! `a -> b` elaborates to `!a | b` and `t != u` to `!(t == u)`.

use super::{AlgSignature, Formula, RelSignature, Term};
use crate::error::{Error, ParseError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    EqEq,
    NotEq,
    Bang,
    Amp,
    Pipe,
    Arrow,
    End,
}

fn lex(text: &str) -> std::result::Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'.' => Tok::Dot,
            b'&' => Tok::Amp,
            b'|' => Tok::Pipe,
            b'=' if bytes.get(i + 1) == Some(&b'=') => {
                i += 1;
                Tok::EqEq
            }
            b'!' if bytes.get(i + 1) == Some(&b'=') => {
                i += 1;
                Tok::NotEq
            }
            b'!' => Tok::Bang,
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Arrow
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                return Err(ParseError {
                    pos: i,
                    message: format!("unexpected character `{}`", text[i..].chars().next().unwrap_or('?')),
                })
            }
        };
        i += 1;
        out.push((tok, start));
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    sig: &'a AlgSignature,
    rels: Option<&'a RelSignature>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse(ParseError { pos: self.pos(), message: message.into() }))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected {what}"))
        }
    }

    fn finish(&mut self) -> Result<()> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            self.fail("unexpected trailing input")
        }
    }

    fn term(&mut self) -> Result<Term> {
        let name = match self.peek().clone() {
            Tok::Ident(name) => name,
            _ => return self.fail("expected a term"),
        };
        if name == "exists" || name == "forall" {
            return self.fail(format!("`{name}` cannot be used as a term"));
        }
        self.bump();
        if *self.peek() == Tok::LParen {
            let (_, arity) = self.sig.lookup(&name).ok_or_else(|| Error::UnknownSymbol(name.clone()))?;
            let args = self.args()?;
            if args.len() != arity {
                return Err(Error::Arity { name, expected: arity, found: args.len() });
            }
            return Ok(Term::Op(name, args));
        }
        match self.sig.lookup(&name) {
            Some((_, 0)) => Ok(Term::Op(name, Vec::new())),
            Some((_, arity)) => Err(Error::Arity { name, expected: arity, found: 0 }),
            None => Ok(Term::Var(name)),
        }
    }

    fn args(&mut self) -> Result<Vec<Term>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        Ok(args)
    }

    fn formula(&mut self) -> Result<Formula> {
        let lhs = self.disj()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(lhs.not().or(rhs));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> Result<Formula> {
        let mut acc = self.conj()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            acc = acc.or(self.conj()?);
        }
        Ok(acc)
    }

    fn conj(&mut self) -> Result<Formula> {
        let mut acc = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            acc = acc.and(self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(self.unary()?.not())
            }
            Tok::LParen => {
                self.bump();
                let inner = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(kw) if kw == "exists" || kw == "forall" => {
                self.bump();
                let var = match self.bump() {
                    Tok::Ident(v) if v != "exists" && v != "forall" && self.sig.lookup(&v).is_none() => v,
                    _ => {
                        self.at -= 1;
                        return self.fail("expected a variable after quantifier");
                    }
                };
                self.expect(Tok::Dot, "`.`")?;
                let body = self.formula()?;
                Ok(if kw == "exists" { Formula::exists(var, body) } else { Formula::forall(var, body) })
            }
            Tok::Ident(name) => {
                if let (Some(rels), Tok::LParen) = (self.rels, self.peek2()) {
                    if let Some((_, arity)) = rels.lookup(&name) {
                        self.bump();
                        let args = self.args()?;
                        if args.len() != arity {
                            return Err(Error::Arity { name, expected: arity, found: args.len() });
                        }
                        return Ok(Formula::Rel(name, args));
                    }
                }
                let lhs = self.term()?;
                match self.bump() {
                    Tok::EqEq => Ok(Formula::Eq(lhs, self.term()?)),
                    Tok::NotEq => Ok(Formula::Eq(lhs, self.term()?).not()),
                    _ => {
                        self.at -= 1;
                        self.fail("expected `==` or `!=`")
                    }
                }
            }
            _ => self.fail("expected a formula"),
        }
    }
}

pub fn parse_term(text: &str, sig: &AlgSignature) -> Result<Term> {
    let mut p = Parser { toks: lex(text)?, at: 0, sig, rels: None };
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_formula(text: &str, sig: &AlgSignature, rels: &RelSignature) -> Result<Formula> {
    let mut p = Parser { toks: lex(text)?, at: 0, sig, rels: Some(rels) };
    let u = p.formula()?;
    p.finish()?;
    Ok(u)
}
