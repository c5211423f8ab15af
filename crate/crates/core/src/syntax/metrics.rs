//! Handler nesting depth and derivation-tree size.

use super::ast::{Command, Handler, Term};

pub fn command_depth(c: &Command) -> usize {
    match c {
        Command::Ret(_) | Command::Op(..) => 0,
        Command::Let(_, p, q) => command_depth(p).max(command_depth(q)),
        Command::Handle { body, handler, .. } => 1 + command_depth(body).max(handler_depth(handler)),
    }
}

/// Omitted clauses are handler-free, so only the written ones matter.
pub fn handler_depth(h: &Handler) -> usize {
    h.clauses
        .values()
        .map(|cl| command_depth(&cl.fwd).max(command_depth(&cl.bwd)))
        .fold(command_depth(&h.ret_clause), usize::max)
}

pub fn term_size(t: &Term) -> usize {
    match t {
        Term::Var(_) | Term::Const(_) => 1,
        Term::App(_, m) | Term::Proj(_, m) => 1 + term_size(m),
        Term::Tuple(ts) => 1 + ts.iter().map(term_size).sum::<usize>(),
        Term::Plus(a, b) | Term::Let(_, a, b) => 1 + term_size(a) + term_size(b),
        Term::Rd { seed, body, point, .. } => 1 + term_size(seed) + term_size(body) + term_size(point),
    }
}

pub fn command_size(c: &Command) -> usize {
    match c {
        Command::Ret(m) => term_size(m),
        Command::Op(_, m) => 2 + term_size(m),
        Command::Let(_, p, q) => 1 + command_size(p) + command_size(q),
        Command::Handle { seed, body, handler, .. } => {
            1 + term_size(seed) + command_size(body) + handler_size(handler)
        }
    }
}

/// Sums over the written clauses only; the implicit defaults add a constant
/// per signature entry, which no recursion argument depends on.
pub fn handler_size(h: &Handler) -> usize {
    1 + command_size(&h.ret_clause)
        + h.clauses
            .values()
            .map(|cl| command_size(&cl.fwd) + command_size(&cl.bwd))
            .sum::<usize>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{FunSym, OpName, Prim};
    use std::sync::Arc;

    fn identity_handler() -> Arc<Handler> {
        Arc::new(Handler::new("x", Command::ret(Term::var("x"))))
    }

    #[test]
    fn depth_basics() {
        assert_eq!(command_depth(&Command::ret(Term::var("m"))), 0);
        assert_eq!(command_depth(&Command::op(OpName::get("l"), Term::unit())), 0);
        let h0 = identity_handler();
        let inner = Command::handle(Term::var("x"), vec!["y".into()], Command::ret(Term::var("y")), h0.clone());
        let outer = Command::handle(Term::constant(vec![1.0]), vec!["x".into()], inner, h0);
        assert_eq!(command_depth(&outer), 2);
    }

    #[test]
    fn size_basics() {
        assert_eq!(term_size(&Term::var("x")), 1);
        let f = FunSym::new(Prim::Swish, vec![1]);
        assert_eq!(term_size(&Term::app(f, Term::var("x"))), 2);
        assert_eq!(command_size(&Command::op(OpName::new("Op", vec![], vec![]), Term::var("x"))), 3);
    }
}
