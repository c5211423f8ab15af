//! Tuple-binding sugar `let (x1, .., xn) <- M in N` and its command analogue.
//!
//! The sugar expands to a fresh binder for the whole tuple followed by one
//! projection per component. The fresh binder is a deterministic function of
//! the pieces, so the printer can recognise an expansion and fold it back.

use std::collections::BTreeSet;

use super::ast::{Command, Name, Term};
use super::names::{collect_command_names, collect_term_names, fresh_name};

const TUPLE_HINT: &str = "t";

fn tuple_binder(xs: &[Name], mut names: BTreeSet<Name>) -> Name {
    names.extend(xs.iter().cloned());
    names.insert(TUPLE_HINT.to_string());
    fresh_name(&names, TUPLE_HINT)
}

pub fn term_tuple_binder(xs: &[Name], m: &Term, n: &Term) -> Name {
    let mut names = BTreeSet::new();
    collect_term_names(m, &mut names);
    collect_term_names(n, &mut names);
    tuple_binder(xs, names)
}

pub fn command_tuple_binder(xs: &[Name], p: &Command, q: &Command) -> Name {
    let mut names = BTreeSet::new();
    collect_command_names(p, &mut names);
    collect_command_names(q, &mut names);
    tuple_binder(xs, names)
}

/// `let t <- m in let x1 <- proj1(t) in ... n` with the given tuple binder.
pub fn let_tuple_term_with(t: &str, xs: &[Name], m: Term, n: Term) -> Term {
    let mut body = n;
    for (i, x) in xs.iter().enumerate().rev() {
        body = Term::let_(x, Term::proj(i + 1, Term::var(t)), body);
    }
    Term::let_(t, m, body)
}

pub fn let_tuple_term(xs: &[Name], m: Term, n: Term) -> Term {
    let t = term_tuple_binder(xs, &m, &n);
    let_tuple_term_with(&t, xs, m, n)
}

/// `let t <= p in let x1 <= ret proj1(t) in ... q` with the given tuple binder.
pub fn let_tuple_command_with(t: &str, xs: &[Name], p: Command, q: Command) -> Command {
    let mut body = q;
    for (i, x) in xs.iter().enumerate().rev() {
        body = Command::let_(x, Command::ret(Term::proj(i + 1, Term::var(t))), body);
    }
    Command::let_(t, p, body)
}

pub fn let_tuple_command(xs: &[Name], p: Command, q: Command) -> Command {
    let t = command_tuple_binder(xs, &p, &q);
    let_tuple_command_with(&t, xs, p, q)
}

/// Recognises an expansion produced by [`let_tuple_term`]: returns the
/// component binders, the bound term and the remaining body.
pub fn match_tuple_term(t: &Term) -> Option<(Vec<Name>, &Term, &Term)> {
    let Term::Let(p, m, body) = t else { return None };
    let mut xs = Vec::new();
    let mut body_ref: &Term = body.as_ref();
    while let Term::Let(x, rhs, rest) = body_ref {
        match rhs.as_ref() {
            Term::Proj(i, inner) if *i == xs.len() + 1 && inner.as_var() == Some(p) => {
                xs.push(x.clone());
                body_ref = rest.as_ref();
            }
            _ => break,
        }
    }
    if xs.len() < 2 {
        return None;
    }
    // The binder must be exactly the one the expansion would pick.
    if term_tuple_binder(&xs, m, body_ref) != *p {
        return None;
    }
    Some((xs, m.as_ref(), body_ref))
}

pub fn match_tuple_command(c: &Command) -> Option<(Vec<Name>, &Command, &Command)> {
    let Command::Let(p, first, body) = c else { return None };
    let mut xs = Vec::new();
    let mut body_ref: &Command = body.as_ref();
    while let Command::Let(x, rhs, rest) = body_ref {
        match rhs.as_ref() {
            Command::Ret(Term::Proj(i, inner)) if *i == xs.len() + 1 && inner.as_var() == Some(p) => {
                xs.push(x.clone());
                body_ref = rest.as_ref();
            }
            _ => break,
        }
    }
    if xs.len() < 2 {
        return None;
    }
    if command_tuple_binder(&xs, first, body_ref) != *p {
        return None;
    }
    Some((xs, first.as_ref(), body_ref))
}
