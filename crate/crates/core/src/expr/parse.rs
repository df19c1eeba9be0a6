//! Expression parser.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?
//! primary := number | '(' expr ')' | ident primes? index? call?
//! index   := '[' int (',' int)* ']'
//! call    := '(' expr (',' expr)* ')'
//! ```
//!
//! Jet coordinates are written `u[1,0,2]` (one count per independent
//! variable) or, when every independent variable is a single letter, as
//! `u_xtt`. Formal derivatives of undetermined functions are `w'(z)` for
//! unary functions and `F[1,0](x,t)` in general.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;

use super::ast::{Ast, Callee};
use super::poly::Q;
use super::{AtomKind, Expr, Func, Name, Symbol};
use crate::error::{Error, Result};
use crate::jet::MultiIndex;

/// Symbol declarations that drive identifier resolution.
#[derive(Clone, Debug, Default)]
pub struct Context {
    pub independents: Vec<String>,
    /// Extra base variables (e.g. invariants of a reduction).
    pub auxiliaries: Vec<String>,
    pub dependents: Vec<String>,
    pub constants: Vec<String>,
    /// Undetermined functions with their arity.
    pub functions: BTreeMap<String, usize>,
    /// Expressions assumed positive; `abs(e)` of such an `e` simplifies to `e`.
    pub positive: Vec<Expr>,
}

impl Context {
    pub fn new(independents: &[&str], dependents: &[&str]) -> Self {
        Context {
            independents: independents.iter().map(|s| s.to_string()).collect(),
            dependents: dependents.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn with_constants(mut self, names: &[&str]) -> Self {
        self.constants.extend(names.iter().map(|s| s.to_string()));
        self
    }

    pub fn with_auxiliaries(mut self, names: &[&str]) -> Self {
        self.auxiliaries.extend(names.iter().map(|s| s.to_string()));
        self
    }

    pub fn with_function(mut self, name: &str, arity: usize) -> Self {
        self.functions.insert(name.to_string(), arity);
        self
    }

    pub fn p(&self) -> usize {
        self.independents.len()
    }

    fn short_jets(&self) -> bool {
        self.independents.iter().all(|s| s.chars().count() == 1)
    }

    /// Parses and normalizes.
    pub fn parse(&self, text: &str) -> Result<Expr> {
        let ast = self.parse_ast(text)?;
        let e = super::normalize(&ast)?;
        self.apply_assumptions(&e)
    }

    pub fn parse_ast(&self, text: &str) -> Result<Ast> {
        let mut p = Parser {
            ctx: self,
            src: text,
            pos: 0,
            depth: 0,
        };
        let ast = p.expr()?;
        p.skip_ws();
        if p.pos < text.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(ast)
    }

    /// Drops `abs` around expressions declared positive.
    pub fn apply_assumptions(&self, e: &Expr) -> Result<Expr> {
        if self.positive.is_empty() {
            return Ok(e.clone());
        }
        let f = |a: &super::Atom| -> Option<Expr> {
            match a.kind() {
                AtomKind::Func(Func::Abs, arg) if self.positive.contains(arg) => Some(arg.clone()),
                _ => None,
            }
        };
        e.map_atoms(&f)
    }

    /// Jet coordinate symbol for a dependent variable.
    pub fn jet(&self, dep: &str, counts: &[u32]) -> Symbol {
        Symbol::jet(dep, MultiIndex::new(counts.to_vec()))
    }

    /// Prints using `u_xt` shorthand when available.
    pub fn print(&self, e: &Expr) -> String {
        e.render(&|s| self.symbol_name(s))
    }

    pub fn symbol_name(&self, s: &Symbol) -> String {
        match s {
            Symbol::Jet(n, j) if j.order() > 0 && self.short_jets() && j.len() == self.p() => {
                let mut out = format!("{}_", n);
                for (i, k) in j.counts().iter().enumerate() {
                    for _ in 0..*k {
                        out.push_str(&self.independents[i]);
                    }
                }
                out
            }
            _ => super::ast::default_symbol(s),
        }
    }
}

/// Parses `text` against `ctx` and normalizes the result.
pub fn parse(ctx: &Context, text: &str) -> Result<Expr> {
    ctx.parse(text)
}

pub fn parse_ast(ctx: &Context, text: &str) -> Result<Ast> {
    ctx.parse_ast(text)
}

struct Parser<'a> {
    ctx: &'a Context,
    src: &'a str,
    pos: usize,
    depth: usize,
}

const MAX_DEPTH: usize = 200;

const BUILTINS: &[&str] = &["exp", "log", "ln", "sin", "cos", "tan", "arctan", "atan", "abs", "sqrt"];

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c)))
        }
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                terms.push(Ast::Neg(Box::new(self.term()?)));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Ast::Add(terms)
        })
    }

    fn term(&mut self) -> Result<Ast> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                let rhs = self.unary()?;
                acc = match acc {
                    Ast::Mul(mut v) => {
                        v.push(rhs);
                        Ast::Mul(v)
                    }
                    a => Ast::Mul(vec![a, rhs]),
                };
            } else if self.eat('/') {
                let rhs = self.unary()?;
                acc = Ast::Div(Box::new(acc), Box::new(rhs));
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Ast> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.err("expression nested too deeply"));
        }
        let r = if self.eat('-') {
            self.unary().map(|a| Ast::Neg(Box::new(a)))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        };
        self.depth -= 1;
        r
    }

    fn power(&mut self) -> Result<Ast> {
        let base = self.primary()?;
        if self.eat('^') {
            let e = self.unary()?;
            return Ok(Ast::Pow(Box::new(base), Box::new(e)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Ast> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_alphabetic() || c == '_' => self.ident(),
            Some(c) => Err(self.err(&format!("unexpected character `{}`", c))),
        }
    }

    fn number(&mut self) -> Result<Ast> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        let int_part = &self.src[start..self.pos];
        let mut value = if int_part.is_empty() {
            Q::zero()
        } else {
            Q::from_integer(int_part.parse::<BigInt>().map_err(|_| self.err("bad number"))?)
        };
        if self.peek() == Some('.') {
            self.bump();
            let fs = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
            let frac = &self.src[fs..self.pos];
            if frac.is_empty() && int_part.is_empty() {
                return Err(Error::Syntax {
                    pos: start,
                    msg: "bad number".into(),
                });
            }
            if !frac.is_empty() {
                let n: BigInt = frac.parse().map_err(|_| self.err("bad number"))?;
                let d = num_traits::pow(BigInt::from(10), frac.len());
                value += Q::new(n, d);
            }
        }
        Ok(Ast::Num(value))
    }

    fn ident(&mut self) -> Result<Ast> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_') {
            self.bump();
        }
        let name = self.src[start..self.pos].to_string();
        let mut primes = 0u32;
        while self.peek() == Some('\'') {
            self.bump();
            primes += 1;
        }
        let index = if self.peek() == Some('[') {
            self.bump();
            let mut v = Vec::new();
            loop {
                self.skip_ws();
                let s = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.bump();
                }
                let k: u32 = self.src[s..self.pos]
                    .parse()
                    .map_err(|_| self.err("expected derivative count"))?;
                v.push(k);
                if self.eat(',') {
                    continue;
                }
                self.expect(']')?;
                break;
            }
            Some(v)
        } else {
            None
        };
        // a call must follow immediately (after optional whitespace)
        let save = self.pos;
        self.skip_ws();
        let call = self.peek() == Some('(');
        if !call {
            self.pos = save;
        }
        if call {
            return self.call(name, start, primes, index);
        }
        if primes > 0 {
            return Err(Error::Syntax {
                pos: start,
                msg: format!("derivative marks on `{}` require an argument list", name),
            });
        }
        self.symbol(name, start, index)
    }

    fn call(&mut self, name: String, start: usize, primes: u32, index: Option<Vec<u32>>) -> Result<Ast> {
        self.expect('(')?;
        let mut args = vec![self.expr()?];
        while self.eat(',') {
            args.push(self.expr()?);
        }
        self.expect(')')?;
        if let Some(&arity) = self.ctx.functions.get(&name) {
            if args.len() != arity {
                return Err(Error::Syntax {
                    pos: start,
                    msg: format!("`{}` takes {} argument(s), got {}", name, arity, args.len()),
                });
            }
            let derivs = match (primes, index) {
                (0, None) => vec![0; arity],
                (k, None) if arity == 1 => vec![k],
                (0, Some(v)) if v.len() == arity => v,
                _ => {
                    return Err(Error::Syntax {
                        pos: start,
                        msg: format!("malformed derivative of `{}`", name),
                    })
                }
            };
            return Ok(Ast::Call(
                Callee::Apply {
                    name: Name::from(name.as_str()),
                    derivs,
                },
                args,
            ));
        }
        if !BUILTINS.contains(&name.as_str()) {
            return Err(Error::UnknownIdentifier { name, pos: start });
        }
        if primes > 0 || index.is_some() || args.len() != 1 {
            return Err(Error::Syntax {
                pos: start,
                msg: format!("`{}` takes exactly one argument", name),
            });
        }
        let callee = match Func::from_name(&name) {
            Some(f) => Callee::Func(f),
            None => Callee::Sqrt,
        };
        Ok(Ast::Call(callee, args))
    }

    fn symbol(&mut self, name: String, start: usize, index: Option<Vec<u32>>) -> Result<Ast> {
        let ctx = self.ctx;
        let p = ctx.p();
        if ctx.dependents.contains(&name) {
            let counts = match index {
                Some(v) if v.len() == p => v,
                Some(_) => {
                    return Err(Error::Syntax {
                        pos: start,
                        msg: format!("jet index of `{}` needs {} entries", name, p),
                    })
                }
                None => vec![0; p],
            };
            return Ok(Ast::Sym(Symbol::jet(&name, MultiIndex::new(counts))));
        }
        if index.is_some() {
            return Err(Error::UnknownIdentifier { name, pos: start });
        }
        if ctx.independents.contains(&name) || ctx.auxiliaries.contains(&name) {
            return Ok(Ast::Sym(Symbol::var(&name)));
        }
        if ctx.constants.contains(&name) {
            return Ok(Ast::Sym(Symbol::constant(&name)));
        }
        if name == "i" {
            return Ok(Ast::Sym(Symbol::ImagUnit));
        }
        if let Some(sym) = self.shorthand(&name) {
            return Ok(Ast::Sym(sym));
        }
        Err(Error::UnknownIdentifier { name, pos: start })
    }

    fn shorthand(&self, name: &str) -> Option<Symbol> {
        let ctx = self.ctx;
        if !ctx.short_jets() {
            return None;
        }
        let (dep, suffix) = name.rsplit_once('_')?;
        if !ctx.dependents.iter().any(|d| d == dep) || suffix.is_empty() {
            return None;
        }
        let mut counts = vec![0u32; ctx.p()];
        for ch in suffix.chars() {
            let i = ctx.independents.iter().position(|v| v.chars().next() == Some(ch))?;
            counts[i] += 1;
        }
        Some(Symbol::jet(dep, MultiIndex::new(counts)))
    }
}
