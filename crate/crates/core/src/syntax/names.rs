//! Free variables, fresh names and capture-avoiding substitution.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{Command, Handler, Name, Term};

pub type Subst = BTreeMap<Name, Term>;

/// Splits `x#3` into (`x`, Some(3)).
fn split_suffix(name: &str) -> (&str, Option<u64>) {
    if let Some(pos) = name.rfind('#') {
        if let Ok(k) = name[pos + 1..].parse::<u64>() {
            return (&name[..pos], Some(k));
        }
    }
    (name, None)
}

/// Deterministic fresh name: `hint` itself when free, else `hint#k` with the least `k ≥ 1`.
pub fn fresh_name(avoid: &BTreeSet<Name>, hint: &str) -> Name {
    if !avoid.contains(hint) {
        return hint.to_string();
    }
    let (base, _) = split_suffix(hint);
    (1..)
        .map(|k| format!("{base}#{k}"))
        .find(|n| !avoid.contains(n))
        .unwrap()
}

/// A pool of names in use; every name it hands out is added to the pool.
#[derive(Clone, Debug, Default)]
pub struct NameSupply {
    used: BTreeSet<Name>,
}

impl NameSupply {
    pub fn new() -> Self {
        NameSupply::default()
    }

    pub fn avoiding<I: IntoIterator<Item = Name>>(names: I) -> Self {
        NameSupply { used: names.into_iter().collect() }
    }

    pub fn reserve(&mut self, name: &str) {
        self.used.insert(name.to_string());
    }

    pub fn reserve_term(&mut self, t: &Term) {
        collect_term_names(t, &mut self.used);
    }

    pub fn reserve_command(&mut self, c: &Command) {
        collect_command_names(c, &mut self.used);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.used.contains(name)
    }

    /// Always suffixed, so a generated name never looks like a surface identifier.
    pub fn fresh(&mut self, hint: &str) -> Name {
        let (base, _) = split_suffix(hint);
        let name = (1..)
            .map(|k| format!("{base}#{k}"))
            .find(|n| !self.used.contains(n))
            .unwrap();
        self.used.insert(name.clone());
        name
    }
}

pub fn free_vars_term(t: &Term) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    fv_term(t, &mut Vec::new(), &mut out);
    out
}

pub fn free_vars_command(c: &Command) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    fv_command(c, &mut Vec::new(), &mut out);
    out
}

fn fv_term(t: &Term, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match t {
        Term::Var(x) => {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        }
        Term::Const(_) => {}
        Term::App(_, m) | Term::Proj(_, m) => fv_term(m, bound, out),
        Term::Plus(a, b) => {
            fv_term(a, bound, out);
            fv_term(b, bound, out);
        }
        Term::Tuple(ts) => ts.iter().for_each(|m| fv_term(m, bound, out)),
        Term::Let(x, m, n) => {
            fv_term(m, bound, out);
            bound.push(x.clone());
            fv_term(n, bound, out);
            bound.pop();
        }
        Term::Rd { seed, binder, body, point } => {
            fv_term(seed, bound, out);
            fv_term(point, bound, out);
            bound.push(binder.clone());
            fv_term(body, bound, out);
            bound.pop();
        }
    }
}

fn fv_command(c: &Command, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match c {
        Command::Ret(m) | Command::Op(_, m) => fv_term(m, bound, out),
        Command::Let(x, p, q) => {
            fv_command(p, bound, out);
            bound.push(x.clone());
            fv_command(q, bound, out);
            bound.pop();
        }
        Command::Handle { seed, binders, body, .. } => {
            fv_term(seed, bound, out);
            let depth = bound.len();
            bound.extend(binders.iter().cloned());
            fv_command(body, bound, out);
            bound.truncate(depth);
        }
    }
}

/// Every name occurring in the term, bound or free.
pub fn collect_term_names(t: &Term, out: &mut BTreeSet<Name>) {
    match t {
        Term::Var(x) => {
            out.insert(x.clone());
        }
        Term::Const(_) => {}
        Term::App(_, m) | Term::Proj(_, m) => collect_term_names(m, out),
        Term::Plus(a, b) => {
            collect_term_names(a, out);
            collect_term_names(b, out);
        }
        Term::Tuple(ts) => ts.iter().for_each(|m| collect_term_names(m, out)),
        Term::Let(x, m, n) => {
            out.insert(x.clone());
            collect_term_names(m, out);
            collect_term_names(n, out);
        }
        Term::Rd { seed, binder, body, point } => {
            out.insert(binder.clone());
            collect_term_names(seed, out);
            collect_term_names(body, out);
            collect_term_names(point, out);
        }
    }
}

/// Every name occurring in the command, including inside handlers.
pub fn collect_command_names(c: &Command, out: &mut BTreeSet<Name>) {
    match c {
        Command::Ret(m) | Command::Op(_, m) => collect_term_names(m, out),
        Command::Let(x, p, q) => {
            out.insert(x.clone());
            collect_command_names(p, out);
            collect_command_names(q, out);
        }
        Command::Handle { seed, binders, body, handler } => {
            collect_term_names(seed, out);
            out.extend(binders.iter().cloned());
            collect_command_names(body, out);
            collect_handler_names(handler, out);
        }
    }
}

pub fn collect_handler_names(h: &Handler, out: &mut BTreeSet<Name>) {
    out.insert(h.ret_binder.clone());
    collect_command_names(&h.ret_clause, out);
    for cl in h.clauses.values() {
        out.insert(cl.fwd_binder.clone());
        out.insert(cl.bwd_binders.0.clone());
        out.insert(cl.bwd_binders.1.clone());
        collect_command_names(&cl.fwd, out);
        collect_command_names(&cl.bwd, out);
    }
}

pub fn all_names_command(c: &Command) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    collect_command_names(c, &mut out);
    out
}

pub fn all_names_term(t: &Term) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    collect_term_names(t, &mut out);
    out
}

fn range_fvs(s: &Subst) -> BTreeSet<Name> {
    s.values().flat_map(free_vars_term).collect()
}

/// Drops `x` from the substitution and, when `x` would capture a variable of the
/// substituted terms, renames it. Returns the (possibly new) binder and the
/// substitution to apply under it.
fn enter_binder(x: &Name, s: &Subst, body_names: impl FnOnce() -> BTreeSet<Name>) -> (Name, Subst) {
    let mut inner = s.clone();
    inner.remove(x);
    if inner.is_empty() {
        return (x.clone(), inner);
    }
    let captured = range_fvs(&inner);
    if !captured.contains(x) {
        return (x.clone(), inner);
    }
    let mut avoid = captured;
    avoid.extend(body_names());
    avoid.extend(inner.keys().cloned());
    let x2 = fresh_name(&avoid, x);
    inner.insert(x.clone(), Term::Var(x2.clone()));
    (x2, inner)
}

/// Simultaneous capture-avoiding substitution.
pub fn subst_term(t: &Term, s: &Subst) -> Term {
    if s.is_empty() {
        return t.clone();
    }
    match t {
        Term::Var(x) => s.get(x).cloned().unwrap_or_else(|| t.clone()),
        Term::Const(_) => t.clone(),
        Term::App(f, m) => Term::App(f.clone(), Box::new(subst_term(m, s))),
        Term::Proj(i, m) => Term::Proj(*i, Box::new(subst_term(m, s))),
        Term::Plus(a, b) => Term::plus(subst_term(a, s), subst_term(b, s)),
        Term::Tuple(ts) => Term::Tuple(ts.iter().map(|m| subst_term(m, s)).collect()),
        Term::Let(x, m, n) => {
            let m2 = subst_term(m, s);
            let (x2, inner) = enter_binder(x, s, || all_names_term(n));
            Term::Let(x2, Box::new(m2), Box::new(subst_term(n, &inner)))
        }
        Term::Rd { seed, binder, body, point } => {
            let (b2, inner) = enter_binder(binder, s, || all_names_term(body));
            Term::Rd {
                seed: Box::new(subst_term(seed, s)),
                binder: b2,
                body: Box::new(subst_term(body, &inner)),
                point: Box::new(subst_term(point, s)),
            }
        }
    }
}

pub fn subst_term1(t: &Term, x: &str, v: &Term) -> Term {
    let mut s = Subst::new();
    s.insert(x.to_string(), v.clone());
    subst_term(t, &s)
}

/// Substitution into commands. Handlers are closed and left untouched; the
/// body of a reverse handle only sees its own binders besides outer term variables.
pub fn subst_command(c: &Command, s: &Subst) -> Command {
    if s.is_empty() {
        return c.clone();
    }
    match c {
        Command::Ret(m) => Command::Ret(subst_term(m, s)),
        Command::Op(op, m) => Command::Op(op.clone(), subst_term(m, s)),
        Command::Let(x, p, q) => {
            let p2 = subst_command(p, s);
            let (x2, inner) = enter_binder(x, s, || all_names_command(q));
            Command::Let(x2, Box::new(p2), Box::new(subst_command(q, &inner)))
        }
        Command::Handle { seed, binders, body, handler } => {
            let seed2 = subst_term(seed, s);
            let mut inner = s.clone();
            for b in binders {
                inner.remove(b);
            }
            let captured = range_fvs(&inner);
            let body2 = if binders.iter().any(|b| captured.contains(b)) {
                // Rename the clashing binders first.
                let mut avoid = captured;
                avoid.extend(all_names_command(body));
                avoid.extend(inner.keys().cloned());
                avoid.extend(binders.iter().cloned());
                let mut renaming = Subst::new();
                let mut new_binders = Vec::with_capacity(binders.len());
                for b in binders {
                    if avoid.contains(b) && range_fvs(&inner).contains(b) {
                        let b2 = fresh_name(&avoid, b);
                        avoid.insert(b2.clone());
                        renaming.insert(b.clone(), Term::Var(b2.clone()));
                        new_binders.push(b2);
                    } else {
                        new_binders.push(b.clone());
                    }
                }
                let renamed = subst_command(body, &renaming);
                return Command::Handle {
                    seed: seed2,
                    binders: new_binders,
                    body: Box::new(subst_command(&renamed, &inner)),
                    handler: handler.clone(),
                };
            } else {
                subst_command(body, &inner)
            };
            Command::Handle {
                seed: seed2,
                binders: binders.clone(),
                body: Box::new(body2),
                handler: handler.clone(),
            }
        }
    }
}

pub fn subst_command1(c: &Command, x: &str, v: &Term) -> Command {
    let mut s = Subst::new();
    s.insert(x.to_string(), v.clone());
    subst_command(c, &s)
}

/// Renames every bound variable of a term to a fresh name from the supply.
pub fn freshen_term(t: &Term, supply: &mut NameSupply) -> Term {
    match t {
        Term::Var(_) | Term::Const(_) => t.clone(),
        Term::App(f, m) => Term::App(f.clone(), Box::new(freshen_term(m, supply))),
        Term::Proj(i, m) => Term::Proj(*i, Box::new(freshen_term(m, supply))),
        Term::Plus(a, b) => Term::plus(freshen_term(a, supply), freshen_term(b, supply)),
        Term::Tuple(ts) => Term::Tuple(ts.iter().map(|m| freshen_term(m, supply)).collect()),
        Term::Let(x, m, n) => {
            let m2 = freshen_term(m, supply);
            let x2 = supply.fresh(x);
            let n2 = freshen_term(&subst_term1(n, x, &Term::Var(x2.clone())), supply);
            Term::Let(x2, Box::new(m2), Box::new(n2))
        }
        Term::Rd { seed, binder, body, point } => {
            let b2 = supply.fresh(binder);
            let body2 = freshen_term(&subst_term1(body, binder, &Term::Var(b2.clone())), supply);
            Term::Rd {
                seed: Box::new(freshen_term(seed, supply)),
                binder: b2,
                body: Box::new(body2),
                point: Box::new(freshen_term(point, supply)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[&str]) -> BTreeSet<Name> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn fresh_names() {
        assert_eq!(fresh_name(&set(&["x"]), "x"), "x#1");
        assert_eq!(fresh_name(&set(&[]), "y"), "y");
        assert_eq!(fresh_name(&set(&["x", "x#1"]), "x"), "x#2");
    }

    #[test]
    fn supply_always_suffixes() {
        let mut s = NameSupply::avoiding(set(&["y#1"]));
        assert_eq!(s.fresh("y"), "y#2");
        assert_eq!(s.fresh("y#2"), "y#3");
        assert_eq!(s.fresh("z"), "z#1");
    }

    #[test]
    fn variable_hit_and_miss() {
        let c = Term::constant(vec![1.0]);
        assert_eq!(subst_term1(&Term::var("x"), "x", &c), c);
        assert_eq!(subst_term1(&Term::var("y"), "x", &c), Term::var("y"));
    }

    #[test]
    fn shadowing_binder_stops_substitution() {
        let c = Term::constant(vec![1.0]);
        let t = Term::let_("x", Term::var("x"), Term::var("x"));
        let out = subst_term1(&t, "x", &c);
        assert_eq!(out, Term::let_("x", c, Term::var("x")));
    }

    #[test]
    fn capture_is_avoided() {
        // (let y <- 1 in x + y)[y/x] must not capture.
        let t = Term::let_("y", Term::constant(vec![1.0]), Term::plus(Term::var("x"), Term::var("y")));
        let out = subst_term1(&t, "x", &Term::var("y"));
        match out {
            Term::Let(b, _, body) => {
                assert_ne!(b, "y");
                assert_eq!(*body, Term::plus(Term::var("y"), Term::var(&b)));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn command_subst() {
        let v = Term::constant(vec![2.0]);
        let c = Command::let_("x", Command::ret(Term::var("x")), Command::op(crate::syntax::OpName::get("l"), Term::var("x")));
        let out = subst_command1(&c, "x", &v);
        assert_eq!(
            out,
            Command::let_("x", Command::ret(v), Command::op(crate::syntax::OpName::get("l"), Term::var("x")))
        );
    }

    #[test]
    fn free_vars() {
        let t = Term::rd(Term::var("w"), "x", Term::plus(Term::var("x"), Term::var("k")), Term::var("v"));
        assert_eq!(free_vars_term(&t), set(&["k", "v", "w"]));
    }
}
