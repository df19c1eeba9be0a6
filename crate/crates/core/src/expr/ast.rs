//! Syntax trees: the parse result and the printing intermediate.

use std::fmt;

use num_traits::{One, Signed, Zero};

use super::poly::{Mono, Poly, Q};
use super::{AtomKind, Expr, Func, Name, Symbol};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub enum Callee {
    Func(Func),
    Sqrt,
    /// Undetermined function with formal derivative counts per slot.
    Apply { name: Name, derivs: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Ast {
    /// Nonnegative rational literal.
    Num(Q),
    Sym(Symbol),
    Neg(Box<Ast>),
    Add(Vec<Ast>),
    Mul(Vec<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, Box<Ast>),
    Call(Callee, Vec<Ast>),
}

pub(crate) fn to_expr(ast: &Ast) -> Result<Expr> {
    Ok(match ast {
        Ast::Num(q) => Expr::rational(q.clone()),
        Ast::Sym(s) => Expr::sym(s.clone()),
        Ast::Neg(a) => -to_expr(a)?,
        Ast::Add(v) => {
            let mut acc = Expr::zero();
            for a in v {
                acc = &acc + &to_expr(a)?;
            }
            acc
        }
        Ast::Mul(v) => {
            let mut acc = Expr::one();
            for a in v {
                acc = &acc * &to_expr(a)?;
            }
            acc
        }
        Ast::Div(a, b) => to_expr(a)?.try_div(&to_expr(b)?)?,
        Ast::Pow(a, b) => to_expr(a)?.pow(&to_expr(b)?)?,
        Ast::Call(c, args) => {
            let args = args.iter().map(to_expr).collect::<Result<Vec<_>>>()?;
            match c {
                Callee::Func(f) => Expr::apply_func(*f, &args[0]),
                Callee::Sqrt => args[0].sqrt(),
                Callee::Apply { name, derivs } => Expr::apply(name.clone(), derivs.clone(), args),
            }
        }
    })
}

fn num(q: Q) -> Ast {
    Ast::Num(q)
}

fn atom_ast(a: &super::Atom) -> Ast {
    match a.kind() {
        AtomKind::Sym(s) => Ast::Sym(s.clone()),
        AtomKind::Func(f, arg) => Ast::Call(Callee::Func(*f), vec![arg.to_ast()]),
        AtomKind::Root(b, 2) => Ast::Call(Callee::Sqrt, vec![b.to_ast()]),
        AtomKind::Root(b, q) => Ast::Pow(
            Box::new(b.to_ast()),
            Box::new(num(Q::new(1.into(), (*q).into()))),
        ),
        AtomKind::Apply { name, derivs, args } => Ast::Call(
            Callee::Apply {
                name: name.clone(),
                derivs: derivs.clone(),
            },
            args.iter().map(Expr::to_ast).collect(),
        ),
    }
}

/// Product of a nonnegative coefficient and a monomial.
fn term_ast(m: &Mono, c: &Q) -> Ast {
    let mut factors = Vec::new();
    if !c.is_one() || m.is_one() {
        factors.push(num(c.clone()));
    }
    for (a, k) in &m.0 {
        let base = atom_ast(a);
        if *k == 1 {
            factors.push(base);
        } else {
            factors.push(Ast::Pow(Box::new(base), Box::new(num(Q::from_integer((*k).into())))));
        }
    }
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        Ast::Mul(factors)
    }
}

fn poly_ast(p: &Poly) -> Ast {
    if p.is_zero() {
        return num(Q::zero());
    }
    let mut terms: Vec<Ast> = p
        .terms()
        .iter()
        .map(|(m, c)| {
            let t = term_ast(m, &c.abs());
            if c.is_negative() {
                Ast::Neg(Box::new(t))
            } else {
                t
            }
        })
        .collect();
    if terms.len() == 1 {
        terms.pop().unwrap()
    } else {
        Ast::Add(terms)
    }
}

impl Expr {
    pub fn to_ast(&self) -> Ast {
        let n = poly_ast(self.numerator());
        if self.denominator().is_one() {
            return n;
        }
        Ast::Div(Box::new(n), Box::new(poly_ast(self.denominator())))
    }

    /// Renders with a custom symbol printer.
    pub fn render(&self, sym: &dyn Fn(&Symbol) -> String) -> String {
        let mut s = String::new();
        self.to_ast().write(&mut s, sym);
        s
    }
}

/// Default symbol printing: jets as `u[1,0]`, or bare `u` at order zero.
pub fn default_symbol(s: &Symbol) -> String {
    match s {
        Symbol::Var(n) | Symbol::Const(n) => n.to_string(),
        Symbol::ImagUnit => "i".to_string(),
        Symbol::Jet(n, j) => {
            if j.order() == 0 {
                n.to_string()
            } else {
                let parts: Vec<String> = j.counts().iter().map(|k| k.to_string()).collect();
                format!("{}[{}]", n, parts.join(","))
            }
        }
    }
}

const P_ADD: u8 = 1;
const P_MUL: u8 = 2;
const P_NEG: u8 = 3;
const P_POW: u8 = 4;
const P_ATOM: u8 = 5;

impl Ast {
    fn prec(&self) -> u8 {
        match self {
            Ast::Num(q) if !q.is_integer() => P_MUL,
            Ast::Num(_) | Ast::Sym(_) | Ast::Call(..) => P_ATOM,
            Ast::Neg(_) => P_NEG,
            Ast::Add(_) => P_ADD,
            Ast::Mul(_) | Ast::Div(..) => P_MUL,
            Ast::Pow(..) => P_POW,
        }
    }

    fn write_at(&self, out: &mut String, min: u8, sym: &dyn Fn(&Symbol) -> String) {
        if self.prec() < min {
            out.push('(');
            self.write(out, sym);
            out.push(')');
        } else {
            self.write(out, sym);
        }
    }

    pub(crate) fn write(&self, out: &mut String, sym: &dyn Fn(&Symbol) -> String) {
        match self {
            Ast::Num(q) => out.push_str(&q.to_string()),
            Ast::Sym(s) => out.push_str(&sym(s)),
            Ast::Neg(a) => {
                out.push('-');
                a.write_at(out, P_MUL, sym);
            }
            Ast::Add(v) => {
                for (k, a) in v.iter().enumerate() {
                    match (k, a) {
                        (0, _) => a.write_at(out, P_ADD, sym),
                        (_, Ast::Neg(inner)) => {
                            out.push_str(" - ");
                            inner.write_at(out, P_MUL, sym);
                        }
                        _ => {
                            out.push_str(" + ");
                            a.write_at(out, P_MUL, sym);
                        }
                    }
                }
            }
            Ast::Mul(v) => {
                for (k, a) in v.iter().enumerate() {
                    if k > 0 {
                        out.push('*');
                    }
                    // a rational literal is only safe in leading position
                    let min = if k == 0 { P_MUL } else { P_POW };
                    a.write_at(out, min, sym);
                }
            }
            Ast::Div(a, b) => {
                a.write_at(out, P_MUL, sym);
                out.push('/');
                b.write_at(out, P_POW, sym);
            }
            Ast::Pow(a, b) => {
                a.write_at(out, P_ATOM, sym);
                out.push('^');
                b.write_at(out, P_ATOM, sym);
            }
            Ast::Call(c, args) => {
                match c {
                    Callee::Func(f) => out.push_str(f.name()),
                    Callee::Sqrt => out.push_str("sqrt"),
                    Callee::Apply { name, derivs } => {
                        out.push_str(name);
                        if derivs.iter().any(|d| *d > 0) {
                            if derivs.len() == 1 && derivs[0] <= 3 {
                                for _ in 0..derivs[0] {
                                    out.push('\'');
                                }
                            } else {
                                let parts: Vec<String> = derivs.iter().map(|d| d.to_string()).collect();
                                out.push('[');
                                out.push_str(&parts.join(","));
                                out.push(']');
                            }
                        }
                    }
                }
                out.push('(');
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    a.write(out, sym);
                }
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write(&mut s, &default_symbol);
        f.write_str(&s)
    }
}
