//! Concrete-syntax printing of terms and commands.

use std::fmt::{self, Write};

use super::ast::{Command, Term};
use super::sugar::{match_tuple_command, match_tuple_term};

pub fn fmt_float(x: f64) -> String {
    format!("{x:?}")
}

pub fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_float(*x)).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Top,
    Sum,
    Postfix,
}

fn write_args(out: &mut String, arg: &Term) {
    match arg {
        Term::Tuple(ts) if ts.len() != 1 => {
            out.push('(');
            for (i, t) in ts.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_term(out, t, Prec::Top);
            }
            out.push(')');
        }
        _ => {
            out.push('(');
            write_term(out, arg, Prec::Top);
            out.push(')');
        }
    }
}

fn write_term(out: &mut String, t: &Term, prec: Prec) {
    match t {
        Term::Var(x) => out.push_str(x),
        Term::Const(v) => out.push_str(&fmt_vec(v)),
        Term::App(f, m) => {
            let _ = write!(out, "{f}");
            write_args(out, m);
        }
        Term::Proj(i, m) => {
            let _ = write!(out, "proj<{i}>(");
            write_term(out, m, Prec::Top);
            out.push(')');
        }
        Term::Tuple(ts) => {
            out.push('(');
            for (i, m) in ts.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_term(out, m, Prec::Top);
            }
            if ts.len() == 1 {
                out.push(',');
            }
            out.push(')');
        }
        Term::Plus(a, b) => {
            if prec > Prec::Sum {
                out.push('(');
            }
            write_term(out, a, Prec::Sum);
            out.push_str(" + ");
            write_term(out, b, Prec::Postfix);
            if prec > Prec::Sum {
                out.push(')');
            }
        }
        Term::Let(x, m, n) => {
            if prec > Prec::Top {
                out.push('(');
            }
            if let Some((xs, m2, n2)) = match_tuple_term(t) {
                let _ = write!(out, "let ({}) <- ", xs.join(", "));
                write_term(out, m2, Prec::Top);
                out.push_str(" in ");
                write_term(out, n2, Prec::Top);
            } else {
                let _ = write!(out, "let {x} <- ");
                write_term(out, m, Prec::Top);
                out.push_str(" in ");
                write_term(out, n, Prec::Top);
            }
            if prec > Prec::Top {
                out.push(')');
            }
        }
        Term::Rd { seed, binder, body, point } => {
            write_term(out, seed, Prec::Postfix);
            let _ = write!(out, ".rd({binder}. ");
            write_term(out, body, Prec::Top);
            out.push_str(")(");
            write_term(out, point, Prec::Top);
            out.push(')');
        }
    }
}

pub fn term_to_string(t: &Term) -> String {
    let mut s = String::new();
    write_term(&mut s, t, Prec::Top);
    s
}

fn write_command(out: &mut String, c: &Command, nested: bool) {
    match c {
        Command::Ret(m) => {
            out.push_str("ret ");
            write_term(out, m, Prec::Postfix);
        }
        Command::Op(op, m) => {
            let _ = write!(out, "{op}@");
            write_args(out, m);
        }
        Command::Let(x, p, q) => {
            if nested {
                out.push('(');
            }
            if let Some((xs, p2, q2)) = match_tuple_command(c) {
                let _ = write!(out, "let ({}) <= ", xs.join(", "));
                write_command(out, p2, matches!(p2, Command::Let(..)));
                out.push_str(" in ");
                write_command(out, q2, false);
            } else {
                let _ = write!(out, "let {x} <= ");
                write_command(out, p, matches!(**p, Command::Let(..)));
                out.push_str(" in ");
                write_command(out, q, false);
            }
            if nested {
                out.push(')');
            }
        }
        Command::Handle { seed, binders, body, handler } => {
            if nested {
                out.push('(');
            }
            out.push_str("rev handle(");
            write_term(out, seed, Prec::Top);
            let _ = write!(out, ") <{}>. ", binders.join(", "));
            write_command(out, body, false);
            let _ = write!(out, " with {}", handler.label.as_deref().unwrap_or("<anonymous>"));
            if nested {
                out.push(')');
            }
        }
    }
}

pub fn command_to_string(c: &Command) -> String {
    let mut s = String::new();
    write_command(&mut s, c, false);
    s
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&term_to_string(self))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&command_to_string(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{FunSym, Prim};

    #[test]
    fn plus_associates_left() {
        let t = Term::plus(Term::plus(Term::var("a"), Term::var("b")), Term::var("c"));
        assert_eq!(t.to_string(), "a + b + c");
        let t = Term::plus(Term::var("a"), Term::plus(Term::var("b"), Term::var("c")));
        assert_eq!(t.to_string(), "a + (b + c)");
    }

    #[test]
    fn rd_and_apps() {
        let f = FunSym::new(Prim::Swish, vec![2]);
        let t = Term::rd(Term::var("w"), "x", Term::app(f.clone(), Term::var("x")), Term::var("v"));
        assert_eq!(t.to_string(), "w.rd(x. swish<2>(x))(v)");
        let g = FunSym::new(Prim::Matmul, vec![2, 2]).rd_of();
        let t = Term::app(g, Term::pair(Term::var("u"), Term::var("p")));
        assert_eq!(t.to_string(), "rd[matmul<2,2>](u, p)");
    }

    #[test]
    fn floats_use_debug_format() {
        assert_eq!(Term::constant(vec![1.0, -0.5]).to_string(), "[1.0, -0.5]");
    }
}
