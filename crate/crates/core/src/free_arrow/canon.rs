//! Canonical forms of pure functions.
//!
//! A body is evaluated symbolically into a hash-consed DAG: lets are
//! substituted, projections of tuples reduced, tuples of consecutive
//! projections contracted, reverse derivatives expanded and dead code dropped.
//! The DAG is then printed back with one let per shared computation, in
//! first-use order and with fixed binder names. Two bodies equal up to these
//! laws print identically.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::EvalError;
use crate::signature::fun_sig;
use crate::syntax::{FunSym, NameSupply, Term, Ty, TyEnv};
use crate::term_eval::rewrite_rd;

use super::PureFun;

pub const INPUT: &str = "x";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Node {
    Input,
    Const(Vec<u64>),
    App(FunSym, usize),
    Plus(usize, usize),
    Tuple(Vec<usize>),
    Proj(usize, usize),
}

#[derive(Default)]
struct Dag {
    nodes: Vec<Node>,
    tys: Vec<Ty>,
    consts: HashMap<usize, Arc<[f64]>>,
    index: HashMap<Node, usize>,
}

fn shape(detail: String) -> EvalError {
    EvalError::ShapeMismatch { detail }
}

impl Dag {
    fn intern(&mut self, node: Node, ty: Ty) -> usize {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(node.clone());
        self.tys.push(ty);
        self.index.insert(node, id);
        id
    }

    fn build(&mut self, env: &mut Vec<(String, usize)>, t: &Term) -> Result<usize, EvalError> {
        match t {
            Term::Var(x) => env
                .iter()
                .rev()
                .find(|(n, _)| n == x)
                .map(|(_, id)| *id)
                .ok_or_else(|| EvalError::Stuck { term: format!("free variable {x} in a pure function") }),
            Term::Const(v) => {
                let id = self.intern(Node::Const(v.iter().map(|x| x.to_bits()).collect()), Ty::Base(v.len()));
                self.consts.entry(id).or_insert_with(|| v.clone());
                Ok(id)
            }
            Term::App(f, m) => {
                let a = self.build(env, m)?;
                let sig = fun_sig(f).map_err(|e| shape(e.to_string()))?;
                Ok(self.intern(Node::App(f.clone(), a), sig.cod))
            }
            Term::Plus(a, b) => {
                let (a, b) = (self.build(env, a)?, self.build(env, b)?);
                let ty = self.tys[a].clone();
                Ok(self.intern(Node::Plus(a, b), ty))
            }
            Term::Tuple(ms) => {
                let ids = ms.iter().map(|m| self.build(env, m)).collect::<Result<Vec<_>, _>>()?;
                if let Some(whole) = self.eta(&ids) {
                    return Ok(whole);
                }
                let ty = Ty::Prod(ids.iter().map(|&i| self.tys[i].clone()).collect());
                Ok(self.intern(Node::Tuple(ids), ty))
            }
            Term::Proj(i, m) => {
                let a = self.build(env, m)?;
                if let Node::Tuple(cs) = &self.nodes[a] {
                    return cs.get(*i - 1).copied().ok_or_else(|| shape(format!("projection {i} of a tuple")));
                }
                let ty = match &self.tys[a] {
                    Ty::Prod(cs) if *i >= 1 && *i <= cs.len() => cs[*i - 1].clone(),
                    other => return Err(shape(format!("projection {i} of {other}"))),
                };
                Ok(self.intern(Node::Proj(*i, a), ty))
            }
            Term::Let(x, m, n) => {
                let a = self.build(env, m)?;
                env.push((x.clone(), a));
                let out = self.build(env, n);
                env.pop();
                out
            }
            Term::Rd { seed, binder, body, point } => {
                let (s, p) = (self.build(env, seed)?, self.build(env, point)?);
                let mut supply = NameSupply::new();
                supply.reserve_term(body);
                supply.reserve(binder);
                for (n, _) in env.iter() {
                    supply.reserve(n);
                }
                let (sn, pn) = (supply.fresh("w"), supply.fresh("v"));
                let mut tenv = TyEnv::new();
                for (n, id) in env.iter() {
                    tenv = tenv.extend_front(n, self.tys[*id].clone());
                }
                let tenv = tenv.extend_front(&sn, self.tys[s].clone()).extend_front(&pn, self.tys[p].clone());
                let unfolded = rewrite_rd(&tenv, &Term::var(&sn), &Term::var(&pn), binder, body)?;
                env.push((sn, s));
                env.push((pn, p));
                let out = self.build(env, &unfolded);
                env.truncate(env.len() - 2);
                out
            }
        }
    }

    /// `(proj1 a, …, projn a)` with `a` an n-tuple is `a`.
    fn eta(&self, ids: &[usize]) -> Option<usize> {
        let mut whole = None;
        for (k, &id) in ids.iter().enumerate() {
            match &self.nodes[id] {
                Node::Proj(i, a) if *i == k + 1 && whole.is_none_or(|w| w == *a) => whole = Some(*a),
                _ => return None,
            }
        }
        let w = whole?;
        match &self.tys[w] {
            Ty::Prod(cs) if cs.len() == ids.len() => Some(w),
            _ => None,
        }
    }

    fn children(&self, id: usize) -> Vec<usize> {
        match &self.nodes[id] {
            Node::Input | Node::Const(_) => vec![],
            Node::App(_, a) | Node::Proj(_, a) => vec![*a],
            Node::Plus(a, b) => vec![*a, *b],
            Node::Tuple(cs) => cs.clone(),
        }
    }

    fn emit(&self, root: usize) -> Term {
        let mut uses = vec![0usize; self.nodes.len()];
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(id) = stack.pop() {
            for c in self.children(id) {
                uses[c] += 1;
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        let shared = |id: usize| {
            uses[id] >= 2 && matches!(self.nodes[id], Node::App(..) | Node::Plus(..) | Node::Tuple(_))
        };
        let mut names: HashMap<usize, String> = HashMap::new();
        let mut lets: Vec<(String, Term)> = Vec::new();
        let mut done = vec![false; self.nodes.len()];
        // iterative post-order so deep chains do not exhaust the stack
        let mut work = vec![(root, false)];
        while let Some((id, expanded)) = work.pop() {
            if done[id] {
                continue;
            }
            if !expanded {
                work.push((id, true));
                for c in self.children(id).into_iter().rev() {
                    if !done[c] {
                        work.push((c, false));
                    }
                }
                continue;
            }
            done[id] = true;
            if shared(id) && id != root {
                let t = self.expr(id, &names);
                let name = format!("v{}", lets.len());
                lets.push((name.clone(), t));
                names.insert(id, name);
            }
        }
        let mut out = self.expr(root, &names);
        for (name, t) in lets.into_iter().rev() {
            out = Term::Let(name, Box::new(t), Box::new(out));
        }
        out
    }

    fn expr(&self, id: usize, names: &HashMap<usize, String>) -> Term {
        let sub = |c: usize| match names.get(&c) {
            Some(n) => Term::var(n),
            None => self.expr(c, names),
        };
        match &self.nodes[id] {
            Node::Input => Term::var(INPUT),
            Node::Const(_) => Term::Const(self.consts[&id].clone()),
            Node::App(f, a) => Term::app(f.clone(), sub(*a)),
            Node::Plus(a, b) => Term::plus(sub(*a), sub(*b)),
            Node::Tuple(cs) => Term::Tuple(cs.iter().map(|&c| sub(c)).collect()),
            Node::Proj(i, a) => Term::proj(*i, sub(*a)),
        }
    }
}

/// The canonical form of `binder : dom ⊢ body`.
pub fn canonical_fun(binder: &str, body: &Term, dom: &Ty) -> Result<PureFun, EvalError> {
    let mut dag = Dag::default();
    let input = dag.intern(Node::Input, dom.clone());
    let mut env = vec![(binder.to_string(), input)];
    let root = dag.build(&mut env, body)?;
    Ok(PureFun { binder: INPUT.into(), body: dag.emit(root), dom: dom.clone(), cod: dag.tys[root].clone() })
}

pub fn canonical(f: &PureFun) -> Result<PureFun, EvalError> {
    canonical_fun(&f.binder, &f.body, &f.dom)
}
