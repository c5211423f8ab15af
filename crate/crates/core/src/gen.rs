//! Random generators of well-typed terms and commands for property tests.
//!
//! Generated terms use only primitives that are smooth almost everywhere
//! and tie-free (no `pool`, no `round`), so finite differences stay valid.

use rand::seq::SliceRandom;
use rand::Rng;

use std::sync::Arc;

use crate::free_arrow::{ArrTerm, PureFun};
use crate::syntax::{Command, FunSym, Handler, Name, OpName, Prim, Term, Ty};

const MAX_DIM: usize = 12;

pub struct TermGen<R> {
    pub rng: R,
    counter: usize,
}

impl<R: Rng> TermGen<R> {
    pub fn new(rng: R) -> Self {
        TermGen { rng, counter: 0 }
    }

    fn fresh(&mut self, hint: &str) -> Name {
        self.counter += 1;
        format!("{hint}{}", self.counter)
    }

    pub fn constant(&mut self, n: usize) -> Term {
        Term::constant((0..n).map(|_| (self.rng.gen_range(-1.5f64..1.5) * 64.0).round() / 64.0).collect())
    }

    fn leaf(&mut self, env: &[(Name, Ty)], k: usize) -> Term {
        let hits: Vec<&Name> = env.iter().filter(|(_, t)| *t == Ty::Base(k)).map(|(x, _)| x).collect();
        if !hits.is_empty() && self.rng.gen_bool(0.8) {
            Term::var(hits.choose(&mut self.rng).unwrap())
        } else {
            self.constant(k)
        }
    }

    /// A term of type `Real(k)` over the base-typed variables in `env`,
    /// nested at most `depth` constructors deep.
    pub fn term(&mut self, env: &[(Name, Ty)], k: usize, depth: usize) -> Term {
        if depth == 0 {
            return self.leaf(env, k);
        }
        let d = depth - 1;
        loop {
            let choice = self.rng.gen_range(0..14);
            let t = match choice {
                0 => Term::app(FunSym::new(Prim::Swish, vec![k]), self.term(env, k, d)),
                1 => Term::plus(self.term(env, k, d), self.term(env, k, d)),
                2 => {
                    let s = self.term(env, 1, d);
                    Term::app(FunSym::new(Prim::Smul, vec![k]), Term::pair(s, self.term(env, k, d)))
                }
                3 => {
                    let a = self.term(env, k, d);
                    Term::app(FunSym::new(Prim::Minus, vec![k]), Term::pair(a, self.term(env, k, d)))
                }
                4 => {
                    let j = self.rng.gen_range(1..=3);
                    if j * k > MAX_DIM {
                        continue;
                    }
                    let w = self.term(env, j * k, d);
                    Term::app(FunSym::new(Prim::Matmul, vec![j, k]), Term::pair(w, self.term(env, j, d)))
                }
                5 => {
                    let j = self.rng.gen_range(1..=3);
                    let y = self.fresh("y");
                    let m = self.term(env, j, d);
                    let mut inner = env.to_vec();
                    inner.push((y.clone(), Ty::Base(j)));
                    Term::let_(&y, m, self.term(&inner, k, d))
                }
                6 => {
                    let j = self.rng.gen_range(1..=3);
                    let (a, b) = (self.term(env, k, d), self.term(env, j, d));
                    if self.rng.gen_bool(0.5) {
                        Term::proj(1, Term::pair(a, b))
                    } else {
                        Term::proj(2, Term::pair(b, a))
                    }
                }
                7 => {
                    let a = divisor(&mut self.rng, k);
                    Term::app(FunSym::new(Prim::Transpose, vec![a, k / a]), self.term(env, k, d))
                }
                8 => {
                    let m = divisor(&mut self.rng, k);
                    let y = self.term(env, m, d);
                    Term::app(FunSym::new(Prim::Outer, vec![k / m, m]), Term::pair(y, self.term(env, k / m, d)))
                }
                9 => {
                    let j = self.rng.gen_range(1..=k);
                    Term::app(FunSym::new(Prim::Padding, vec![1, j, k]), self.term(env, j, d))
                }
                10 => {
                    let j = self.rng.gen_range(1..=3);
                    Term::app(FunSym::new(Prim::Upscale, vec![1, j, k]), self.term(env, j, d))
                }
                11 => {
                    if k < 2 {
                        continue;
                    }
                    let c = self.rng.gen_range(1..k);
                    let a = self.term(env, c, d);
                    Term::app(FunSym::new(Prim::Concat, vec![c, k - c, 1]), Term::pair(a, self.term(env, k - c, d)))
                }
                12 => {
                    let m = self.rng.gen_range(1..=2);
                    let n = k + m - 1;
                    let x = self.term(env, n, d);
                    Term::app(FunSym::new(Prim::Conv, vec![n, m, 1, 1]), Term::pair(x, self.term(env, m, d)))
                }
                _ => self.leaf(env, k),
            };
            return t;
        }
    }
}

fn divisor<R: Rng>(rng: &mut R, k: usize) -> usize {
    let ds: Vec<usize> = (1..=k).filter(|d| k.is_multiple_of(*d)).collect();
    *ds.choose(rng).unwrap()
}

/// Signature and handlers for [`CommandGen`]: an activation operation
/// `Act<k>` and a heap slot `w`, with one handler per carrier `Real(1..=4)`.
pub const COMMAND_LAB: &str = "
loc w : 3;
op Act<k> : Real(k) ~> Real(k);
def Uses(a : Real(1), b : Real(2), c : Real(3), d : Real(4)) =
  let _ <= Act<1>@(a) in let _ <= Act<2>@(b) in let _ <= Act<3>@(c) in Act<4>@(d);
handler H1 : Real(1) {
  ret x => ret smul<1>([0.5], x);
  Act<k>@(x) => ret (swish<k>(x), x) | y, z => ret rd[swish<k>](y, z);
}
handler H2 : Real(2) {
  ret x => ret minus<2>(x, [1.0, -1.0]);
  Act<k>@(x) => let s <= get<w>@() in ret (swish<k>(x), x) | y, z => ret rd[swish<k>](y, z);
}
handler H3 : Real(3) {
  ret x => let _ <= put<w>@(x) in ret x;
  Act<k>@(x) => ret (x, zeros<0>) | y, z => ret y;
}
handler H4 : Real(4) {
  ret x => ret x;
  Act<k>@(x) => ret (swish<k>(x), x) | y, z => ret rd[swish<k>](y, z);
}
";

/// Random closed commands over [`COMMAND_LAB`]: lets, heap access,
/// activations and reverse handlers. Every user operation sits under a
/// handler, so generated commands run to a value. Handlers are sequenced
/// but never nested, since an outer handler would have to differentiate
/// the reverse derivatives produced by an inner one.
pub struct CommandGen<R> {
    pub terms: TermGen<R>,
    /// Handler for carrier `Real(c)` at index `c - 1`.
    handlers: Vec<Arc<Handler>>,
    counter: usize,
}

impl<R: Rng> CommandGen<R> {
    pub fn new(rng: R, handlers: Vec<Arc<Handler>>) -> Self {
        CommandGen { terms: TermGen::new(rng), handlers, counter: 0 }
    }

    fn fresh(&mut self) -> Name {
        self.counter += 1;
        format!("u{}", self.counter)
    }

    fn term(&mut self, env: &[(Name, Ty)], k: usize) -> Term {
        let d = self.terms.rng.gen_range(0..=2);
        self.terms.term(env, k, d)
    }

    fn handle(&mut self, env: &[(Name, Ty)], k: usize, depth: usize) -> Command {
        let c = self.terms.rng.gen_range(1..=self.handlers.len());
        let seed = self.term(env, k);
        let y = self.fresh();
        let body = self.command(&[(y.clone(), Ty::Base(k))], c, depth, true);
        Command::handle(seed, vec![y], body, self.handlers[c - 1].clone())
    }

    /// A command of type `Real(k)` over `env`; operations only when `handled`,
    /// new handlers only when not.
    pub fn command(&mut self, env: &[(Name, Ty)], k: usize, depth: usize, handled: bool) -> Command {
        let choice = if depth == 0 { self.terms.rng.gen_range(0..2) } else { self.terms.rng.gen_range(0..6) };
        let d = depth.saturating_sub(1);
        match choice {
            1 if handled => Command::op(OpName::new("Act", vec![], vec![k]), self.term(env, k)),
            2 => {
                let j = self.terms.rng.gen_range(1..=4);
                let y = self.fresh();
                let p = self.command(env, j, d, handled);
                let mut inner = env.to_vec();
                inner.push((y.clone(), Ty::Base(j)));
                Command::let_(&y, p, self.command(&inner, k, d, handled))
            }
            3 => {
                let y = self.fresh();
                let mut inner = env.to_vec();
                inner.push((y.clone(), Ty::Base(3)));
                Command::let_(&y, Command::op(OpName::get("w"), Term::unit()), self.command(&inner, k, d, handled))
            }
            4 => {
                let y = self.fresh();
                let v = self.term(env, 3);
                Command::let_(&y, Command::op(OpName::put("w"), v), self.command(env, k, d, handled))
            }
            5 if !handled => self.handle(env, k, d),
            _ => Command::ret(self.term(env, k)),
        }
    }

    /// A closed command starting with a reverse handler.
    pub fn closed(&mut self, depth: usize) -> Command {
        let (j, k) = (self.terms.rng.gen_range(1..=4), self.terms.rng.gen_range(1..=4));
        let first = self.handle(&[], j, depth);
        let y = self.fresh();
        let rest = self.command(&[(y.clone(), Ty::Base(j))], k, depth, false);
        Command::let_(&y, first, rest)
    }
}

/// Random pure functions and arrow terms over small types, drawing
/// operations from the given user and heap operation leaves.
pub struct ArrowGen<R> {
    pub terms: TermGen<R>,
    pub user_ops: Vec<ArrTerm>,
    pub heap_ops: Vec<ArrTerm>,
}

impl<R: Rng> ArrowGen<R> {
    pub fn new(rng: R, user_ops: Vec<ArrTerm>, heap_ops: Vec<ArrTerm>) -> Self {
        ArrowGen { terms: TermGen::new(rng), user_ops, heap_ops }
    }

    pub fn base(&mut self) -> Ty {
        Ty::real(self.terms.rng.gen_range(1..=3))
    }

    /// A base type or a pair of them.
    pub fn ty(&mut self) -> Ty {
        if self.terms.rng.gen_bool(0.3) {
            Ty::pair(self.base(), self.base())
        } else {
            self.base()
        }
    }

    fn body(&mut self, env: &[(Name, Ty)], cod: &Ty) -> Term {
        match cod {
            Ty::Base(0) => Term::unit(),
            Ty::Base(k) => {
                let d = self.terms.rng.gen_range(0..=2);
                self.terms.term(env, *k, d)
            }
            Ty::Prod(cs) => Term::Tuple(cs.iter().map(|c| self.body(env, c)).collect()),
        }
    }

    pub fn fun(&mut self, dom: &Ty, cod: &Ty) -> PureFun {
        // bind every base leaf of the input to a variable
        fn leaves(t: Term, ty: &Ty, out: &mut Vec<(Term, Ty)>) {
            match ty {
                Ty::Base(_) => out.push((t, ty.clone())),
                Ty::Prod(cs) => {
                    for (i, c) in cs.iter().enumerate() {
                        leaves(Term::proj(i + 1, t.clone()), c, out);
                    }
                }
            }
        }
        let mut ls = Vec::new();
        leaves(Term::var("p"), dom, &mut ls);
        let env: Vec<(Name, Ty)> = ls.iter().enumerate().map(|(i, (_, t))| (format!("c{i}"), t.clone())).collect();
        let mut body = self.body(&env, cod);
        for (i, (t, _)) in ls.into_iter().enumerate().rev() {
            body = Term::let_(&format!("c{i}"), t, body);
        }
        PureFun::new("p", body, dom.clone()).expect("generated functions typecheck")
    }

    /// An arrow `dom → cod` nested `depth` combinators deep; user
    /// operations only when `user` is set.
    pub fn arrow(&mut self, dom: &Ty, cod: &Ty, depth: usize, user: bool) -> ArrTerm {
        let choice = if depth == 0 { 0 } else { self.terms.rng.gen_range(0..4) };
        match choice {
            1 => {
                let mid = self.base();
                self.arrow(dom, &mid, depth - 1, user).seq(self.arrow(&mid, cod, depth - 1, user))
            }
            2 => {
                let pool = if user && self.terms.rng.gen_bool(0.4) { &self.user_ops } else { &self.heap_ops };
                let op = pool.choose(&mut self.terms.rng).expect("operations to draw from").clone();
                let into = ArrTerm::Arr(self.fun(dom, &op.dom()));
                let rest = self.arrow(&op.cod(), cod, depth - 1, user);
                into.seq(op).seq(rest)
            }
            3 => {
                let (x, y, z) = (self.base(), self.base(), self.base());
                let into = ArrTerm::Arr(self.fun(dom, &Ty::pair(x.clone(), z.clone())));
                let mid = ArrTerm::first(z.clone(), self.arrow(&x, &y, depth - 1, user));
                into.seq(mid).seq(ArrTerm::Arr(self.fun(&Ty::pair(y, z), cod)))
            }
            _ => ArrTerm::Arr(self.fun(dom, cod)),
        }
    }
}
