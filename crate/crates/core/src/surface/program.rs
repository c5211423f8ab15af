//! Lowering a parsed module to core syntax.
//!
//! Handler clauses are templates over an operation family. Each template is
//! instantiated for every concrete operation that can reach the handler: the
//! instances used by `main`, `forward` and the defs, plus whatever the
//! instantiated clause bodies use in turn, up to a fixpoint.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, TypeError};
use crate::signature::{DimExpr, OpFamily, Signature, TyExpr};
use crate::syntax::sugar::{let_tuple_command, let_tuple_term};
use crate::syntax::{Command, FunSym, Handler, OpClause, OpName, Term, Ty, TyEnv};
use crate::term_eval::eval_term;
use crate::typecheck::Checker;
use crate::values::{Heap, TieBreak, Value};

use super::ast::*;
use super::parser::{parse_command, parse_module, parse_term};

type Dims = BTreeMap<String, i64>;

fn malformed(detail: impl Into<String>) -> Error {
    Error::Type(TypeError::Malformed { detail: detail.into() })
}

fn unknown(name: &str) -> Error {
    Error::Type(TypeError::UnknownSymbol { name: name.to_string() })
}

fn dim_err(context: &str, detail: String) -> Error {
    Error::Type(TypeError::BadDimension { context: context.to_string(), detail })
}

/// A `def` after lowering: its parameters and inlined body.
#[derive(Clone, Debug, PartialEq)]
pub struct Def {
    pub params: TyEnv,
    pub body: Command,
}

/// One line of a successful check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckLine {
    pub kind: &'static str,
    pub name: String,
    pub ty: String,
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.kind == "main" || self.kind == "forward" {
            write!(f, "{} : {}", self.name, self.ty)
        } else {
            write!(f, "{} {} : {}", self.kind, self.name, self.ty)
        }
    }
}

#[derive(Clone, Debug)]
pub struct Program {
    pub module: Module,
    pub sig: Signature,
    pub dims: Dims,
    pub consts: BTreeMap<String, Value>,
    pub defs: BTreeMap<String, Def>,
    pub handlers: BTreeMap<String, Arc<Handler>>,
    /// Declared handler carriers.
    pub carriers: BTreeMap<String, Ty>,
    pub main: Option<Command>,
    pub forward: Option<Command>,
    pub target: Option<Term>,
    heap_spec: Vec<(String, HeapInit)>,
}

/// Name resolution in effect while lowering one piece of syntax.
#[derive(Clone, Default)]
struct Scope {
    dims: Dims,
    /// Location variables of a clause template.
    locs: BTreeMap<String, String>,
    bound: Vec<String>,
}

impl Scope {
    fn with_bound<I: IntoIterator<Item = String>>(&self, names: I) -> Scope {
        let mut s = self.clone();
        s.bound.extend(names);
        s
    }
}

struct Lowerer<'a> {
    families: &'a BTreeMap<String, OpDecl>,
    consts: &'a BTreeMap<String, Value>,
    defs: &'a BTreeMap<String, DefItem>,
    handlers: &'a BTreeMap<String, Arc<Handler>>,
    global: &'a Dims,
    /// Defs being expanded, to reject recursion.
    expanding: std::cell::RefCell<Vec<String>>,
}

fn pat_names(p: &LetPat) -> Vec<String> {
    match p {
        LetPat::Var(x) => vec![x.clone()],
        LetPat::Tuple(xs) => xs.clone(),
    }
}

fn dup_check(xs: &[String], what: &str) -> Result<(), Error> {
    let set: BTreeSet<&String> = xs.iter().collect();
    if set.len() != xs.len() {
        return Err(malformed(format!("repeated name in {what} `({})`", xs.join(", "))));
    }
    Ok(())
}

impl Lowerer<'_> {
    fn eval_dims(&self, ds: &[DimExpr], scope: &Scope, context: &str) -> Result<Vec<usize>, Error> {
        ds.iter().map(|d| d.eval_dim(&scope.dims).map_err(|e| dim_err(context, e))).collect()
    }

    fn term(&self, t: &STerm, scope: &Scope) -> Result<Term, Error> {
        Ok(match t {
            STerm::Var(x) => {
                if scope.bound.iter().any(|b| b == x) {
                    Term::var(x)
                } else if let Some(v) = self.consts.get(x) {
                    v.to_term()
                } else {
                    Term::var(x)
                }
            }
            STerm::Vec(xs) => Term::constant(xs.clone()),
            STerm::Zeros(d) => Term::zeros(d.eval_dim(&scope.dims).map_err(|e| dim_err("zeros", e))?),
            STerm::App { prim, rd, dims, args } => {
                let ds = self.eval_dims(dims, scope, prim.name())?;
                let f = FunSym { prim: *prim, dims: ds, rd: *rd };
                let args = args.iter().map(|a| self.term(a, scope)).collect::<Result<Vec<_>, _>>()?;
                Term::app(f, Term::tuple_or_single(args))
            }
            STerm::Plus(a, b) => Term::plus(self.term(a, scope)?, self.term(b, scope)?),
            STerm::Tuple(ts) => Term::Tuple(ts.iter().map(|m| self.term(m, scope)).collect::<Result<_, _>>()?),
            STerm::Proj(i, m) => {
                if *i == 0 {
                    return Err(malformed("projections are numbered from 1"));
                }
                Term::proj(*i, self.term(m, scope)?)
            }
            STerm::Let(p, m, n) => {
                let m = self.term(m, scope)?;
                let names = pat_names(p);
                dup_check(&names, "let pattern")?;
                let n = self.term(n, &scope.with_bound(names.clone()))?;
                match p {
                    LetPat::Var(x) => Term::let_(x, m, n),
                    LetPat::Tuple(xs) => let_tuple_term(xs, m, n),
                }
            }
            STerm::Rd { seed, binder, body, point } => Term::rd(
                self.term(seed, scope)?,
                binder,
                self.term(body, &scope.with_bound([binder.clone()]))?,
                self.term(point, scope)?,
            ),
        })
    }

    /// Location and dimension counts of a family.
    fn family_shape(&self, name: &str) -> Result<(usize, usize), Error> {
        match name {
            "get" | "put" => Ok((1, 0)),
            _ => self
                .families
                .get(name)
                .map(|d| (d.loc_params.len(), d.dim_params.len()))
                .ok_or_else(|| unknown(name)),
        }
    }

    /// Splits written parameters into location names and dimension expressions.
    fn split_params<'r>(&self, r: &'r SOpRef) -> Result<(Vec<String>, Vec<&'r DimExpr>), Error> {
        let (nl, nd) = self.family_shape(&r.name)?;
        let (locs, dims): (&[DimExpr], Vec<&DimExpr>) = match &r.dims_after_colon {
            Some(after) => (&r.params[..], after.iter().collect()),
            None if r.params.len() >= nl => (&r.params[..nl], r.params[nl..].iter().collect()),
            None => (&r.params[..], Vec::new()),
        };
        if locs.len() != nl || dims.len() != nd {
            return Err(Error::Type(TypeError::ArityMismatch {
                term: r.name.clone(),
                expected: format!("{nl} locations and {nd} dimensions"),
                found: format!("{} locations and {} dimensions", locs.len(), dims.len()),
            }));
        }
        let locs = locs
            .iter()
            .map(|l| match l {
                DimExpr::Var(v) => Ok(v.clone()),
                other => Err(malformed(format!("`{other}` is not a location name in {}", r.name))),
            })
            .collect::<Result<_, _>>()?;
        Ok((locs, dims))
    }

    fn op_name(&self, r: &SOpRef, scope: &Scope) -> Result<OpName, Error> {
        let (locs, dims) = self.split_params(r)?;
        let locs = locs.into_iter().map(|l| scope.locs.get(&l).cloned().unwrap_or(l)).collect();
        let dims = dims
            .into_iter()
            .map(|d| d.eval_dim(&scope.dims).map_err(|e| dim_err(&r.name, e)))
            .collect::<Result<_, _>>()?;
        Ok(OpName::new(&r.name, locs, dims))
    }

    fn command(&self, c: &SCommand, scope: &Scope) -> Result<Command, Error> {
        Ok(match c {
            SCommand::Ret(t) => Command::ret(self.term(t, scope)?),
            SCommand::Op(r, args) => {
                let op = self.op_name(r, scope)?;
                let args = args.iter().map(|a| self.term(a, scope)).collect::<Result<Vec<_>, _>>()?;
                Command::op(op, Term::tuple_or_single(args))
            }
            SCommand::Let(p, first, rest) => {
                let first = self.command(first, scope)?;
                let names = pat_names(p);
                dup_check(&names, "let pattern")?;
                let rest = self.command(rest, &scope.with_bound(names))?;
                match p {
                    LetPat::Var(x) => Command::let_(x, first, rest),
                    LetPat::Tuple(xs) => let_tuple_command(xs, first, rest),
                }
            }
            SCommand::Handle { seed, binders, body, handler } => {
                let h = self.handlers.get(handler).ok_or_else(|| unknown(handler))?.clone();
                let seed = self.term(seed, scope)?;
                let body = self.command(body, &scope.with_bound(binders.iter().cloned()))?;
                Command::handle(seed, binders.clone(), body, h)
            }
            SCommand::Ref(name) => {
                let d = self.defs.get(name).ok_or_else(|| unknown(name))?;
                if self.expanding.borrow().contains(name) {
                    return Err(malformed(format!("def `{name}` refers to itself")));
                }
                self.expanding.borrow_mut().push(name.clone());
                let out = self.def_body(d);
                self.expanding.borrow_mut().pop();
                out?
            }
        })
    }

    fn def_body(&self, d: &DefItem) -> Result<Command, Error> {
        let scope = Scope { dims: self.global.clone(), ..Scope::default() }
            .with_bound(d.params.iter().map(|(x, _)| x.clone()));
        self.command(&d.body, &scope)
    }

    /// Binds the pattern of `cl` against a concrete instance.
    fn match_clause(&self, cl: &ClauseDef, op: &OpName) -> Result<Option<Scope>, Error> {
        if cl.op.name != op.family {
            return Ok(None);
        }
        let (locs, dims) = self.split_params(&cl.op)?;
        let mut scope = Scope { dims: self.global.clone(), ..Scope::default() };
        for (pat, loc) in locs.iter().zip(&op.locs) {
            match scope.locs.get(pat) {
                Some(bound) if bound != loc => return Ok(None),
                _ => {
                    scope.locs.insert(pat.clone(), loc.clone());
                }
            }
        }
        let mut bound_here = BTreeSet::new();
        let mut deferred = Vec::new();
        for (pat, &val) in dims.iter().zip(&op.dims) {
            let val = val as i64;
            match pat {
                DimExpr::Var(v) if !bound_here.contains(v) => {
                    bound_here.insert(v.clone());
                    scope.dims.insert(v.clone(), val);
                }
                other => deferred.push((*other, val)),
            }
        }
        for (pat, val) in deferred {
            match pat.eval(&scope.dims) {
                Ok(x) if x == val => {}
                Ok(_) => return Ok(None),
                Err(e) => return Err(dim_err(&cl.op.name, e)),
            }
        }
        Ok(Some(scope))
    }

    fn clause(&self, sig: &Signature, cl: &ClauseDef, op: &OpName, scope: &Scope) -> Result<OpClause, Error> {
        let fwd = self.command(&cl.fwd, &scope.with_bound([cl.fwd_binder.clone()]))?;
        let (y, z) = &cl.bwd_binders;
        if y == z {
            return Err(malformed(format!("backward binders of {op} must differ")));
        }
        let bwd = self.command(&cl.bwd, &scope.with_bound([y.clone(), z.clone()]))?;
        let aux_ty = match &cl.aux {
            Some(t) => t.eval(&scope.dims).map_err(|e| dim_err(&op.to_string(), e))?,
            None => Checker::new(sig).infer_aux_ty(op, &cl.fwd_binder, &fwd)?,
        };
        Ok(OpClause { fwd_binder: cl.fwd_binder.clone(), fwd, bwd_binders: cl.bwd_binders.clone(), bwd, aux_ty })
    }

    /// The handler restricted to the given instances.
    fn handler(&self, sig: &Signature, h: &HandlerDef, instances: &BTreeSet<OpName>) -> Result<Handler, Error> {
        let scope = Scope { dims: self.global.clone(), ..Scope::default() };
        let ret = self.command(&h.ret, &scope.with_bound([h.ret_binder.clone()]))?;
        let mut out = Handler::new(&h.ret_binder, ret).with_label(&h.name);
        for op in instances {
            for cl in &h.clauses {
                if let Some(sc) = self.match_clause(cl, op)? {
                    out = out.with_clause(op.clone(), self.clause(sig, cl, op, &sc)?);
                    break;
                }
            }
        }
        Ok(out)
    }
}

/// Operation instances a command can perform, ignoring heap operations and
/// the insides of handlers.
fn collect_ops(c: &Command, out: &mut BTreeSet<OpName>) {
    match c {
        Command::Ret(_) => {}
        Command::Op(op, _) => {
            if !op.is_heap_op() {
                out.insert(op.clone());
            }
        }
        Command::Let(_, p, q) => {
            collect_ops(p, out);
            collect_ops(q, out);
        }
        Command::Handle { body, .. } => collect_ops(body, out),
    }
}

fn collect_handler_ops(h: &Handler, out: &mut BTreeSet<OpName>) {
    collect_ops(&h.ret_clause, out);
    for cl in h.clauses.values() {
        collect_ops(&cl.fwd, out);
        collect_ops(&cl.bwd, out);
    }
}

/// Replaces global dimension names that are not family parameters.
fn close_ty(t: &TyExpr, params: &[String], global: &Dims) -> TyExpr {
    fn close_dim(d: &DimExpr, params: &[String], global: &Dims) -> DimExpr {
        let go = |e: &DimExpr| Box::new(close_dim(e, params, global));
        match d {
            DimExpr::Var(v) if !params.contains(v) => global.get(v).map_or_else(|| d.clone(), |n| DimExpr::Num(*n)),
            DimExpr::Num(_) | DimExpr::Var(_) => d.clone(),
            DimExpr::Add(a, b) => DimExpr::Add(go(a), go(b)),
            DimExpr::Sub(a, b) => DimExpr::Sub(go(a), go(b)),
            DimExpr::Mul(a, b) => DimExpr::Mul(go(a), go(b)),
            DimExpr::Div(a, b) => DimExpr::Div(go(a), go(b)),
            DimExpr::CeilDiv(a, b) => DimExpr::CeilDiv(go(a), go(b)),
        }
    }
    match t {
        TyExpr::Real(d) => TyExpr::Real(close_dim(d, params, global)),
        TyExpr::Prod(cs) => TyExpr::Prod(cs.iter().map(|c| close_ty(c, params, global)).collect()),
    }
}

fn check_fresh(seen: &mut BTreeSet<String>, kind: &str, name: &str) -> Result<(), Error> {
    if !seen.insert(format!("{kind}:{name}")) {
        return Err(malformed(format!("{kind} `{name}` is declared twice")));
    }
    Ok(())
}

impl Program {
    pub fn parse(src: &str) -> Result<Program, Error> {
        Program::from_module(parse_module(src)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Program, Error> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Program::parse(&src)
    }

    pub fn from_module(module: Module) -> Result<Program, Error> {
        let mut seen = BTreeSet::new();
        let mut dims = Dims::new();
        let mut sig = Signature::new();
        let mut families = BTreeMap::new();
        let mut const_items = Vec::new();
        let mut def_items = BTreeMap::new();
        let mut handler_items: Vec<&HandlerDef> = Vec::new();
        let (mut main_s, mut forward_s, mut target_s) = (None, None, None);
        let mut heap_spec = Vec::new();

        for it in &module.items {
            match it {
                Item::Dim(n, d) => {
                    check_fresh(&mut seen, "dim", n)?;
                    let v = d.eval(&dims).map_err(|e| dim_err(n, e))?;
                    dims.insert(n.clone(), v);
                }
                Item::Loc(n, d) => {
                    check_fresh(&mut seen, "location", n)?;
                    sig.locations.insert(n.clone(), d.eval_dim(&dims).map_err(|e| dim_err(n, e))?);
                }
                Item::Op(o) => {
                    check_fresh(&mut seen, "op", &o.name)?;
                    if o.name == "get" || o.name == "put" {
                        return Err(malformed(format!("`{}` is a built-in operation", o.name)));
                    }
                    let params: Vec<String> = o.dim_params.clone();
                    let fam = OpFamily {
                        name: o.name.clone(),
                        loc_params: o.loc_params.clone(),
                        dim_params: o.dim_params.clone(),
                        coarity: close_ty(&o.coarity, &params, &dims),
                        arity: close_ty(&o.arity, &params, &dims),
                    };
                    sig.families.insert(o.name.clone(), fam);
                    families.insert(o.name.clone(), o.clone());
                }
                Item::Const(n, t) => {
                    check_fresh(&mut seen, "const", n)?;
                    const_items.push((n.clone(), t.clone()));
                }
                Item::Def(d) => {
                    check_fresh(&mut seen, "def", &d.name)?;
                    def_items.insert(d.name.clone(), d.clone());
                }
                Item::Handler(h) => {
                    check_fresh(&mut seen, "handler", &h.name)?;
                    handler_items.push(h);
                }
                Item::Main(c) => {
                    check_fresh(&mut seen, "main", "main")?;
                    main_s = Some(c.clone());
                }
                Item::Forward(c) => {
                    check_fresh(&mut seen, "forward", "forward")?;
                    forward_s = Some(c.clone());
                }
                Item::Target(t) => {
                    check_fresh(&mut seen, "target", "target")?;
                    target_s = Some(t.clone());
                }
                Item::Heap(slots) => heap_spec.extend(slots.iter().cloned()),
            }
        }

        // constants may use earlier constants
        let mut consts = BTreeMap::new();
        let no_defs = BTreeMap::new();
        let no_handlers = BTreeMap::new();
        for (n, t) in &const_items {
            let lw = Lowerer {
                families: &families,
                consts: &consts,
                defs: &no_defs,
                handlers: &no_handlers,
                global: &dims,
                expanding: Default::default(),
            };
            let term = lw.term(t, &Scope { dims: dims.clone(), ..Scope::default() })?;
            let v = eval_term(&term, TieBreak::First).map_err(|e| malformed(format!("constant `{n}`: {e}")))?;
            consts.insert(n.clone(), v);
        }

        // first pass with placeholder handlers, to find the operation instances
        let stubs: BTreeMap<String, Arc<Handler>> = handler_items
            .iter()
            .map(|h| (h.name.clone(), Arc::new(Handler::new("x", Command::ret(Term::var("x"))).with_label(&h.name))))
            .collect();
        let stub_lw = Lowerer {
            families: &families,
            consts: &consts,
            defs: &def_items,
            handlers: &stubs,
            global: &dims,
            expanding: Default::default(),
        };
        let global_scope = Scope { dims: dims.clone(), ..Scope::default() };
        let mut instances = BTreeSet::new();
        for c in main_s.iter().chain(forward_s.iter()) {
            collect_ops(&stub_lw.command(c, &global_scope)?, &mut instances);
        }
        for d in def_items.values() {
            collect_ops(&stub_lw.def_body(d)?, &mut instances);
        }
        loop {
            let before = instances.len();
            for h in &handler_items {
                let built = stub_lw.handler(&sig, h, &instances)?;
                collect_handler_ops(&built, &mut instances);
            }
            if instances.len() == before {
                break;
            }
        }

        // final pass: handlers in file order, each seeing the ones before it
        let mut handlers = BTreeMap::new();
        for h in &handler_items {
            let lw = Lowerer {
                families: &families,
                consts: &consts,
                defs: &def_items,
                handlers: &handlers,
                global: &dims,
                expanding: Default::default(),
            };
            let built = Arc::new(lw.handler(&sig, h, &instances)?);
            handlers.insert(h.name.clone(), built);
        }
        let mut carriers = BTreeMap::new();
        for h in &handler_items {
            if let Some(c) = &h.carrier {
                carriers.insert(h.name.clone(), c.eval(&dims).map_err(|e| dim_err(&h.name, e))?);
            }
        }

        let lw = Lowerer {
            families: &families,
            consts: &consts,
            defs: &def_items,
            handlers: &handlers,
            global: &dims,
            expanding: Default::default(),
        };
        let mut defs = BTreeMap::new();
        for (n, d) in &def_items {
            let params = d
                .params
                .iter()
                .map(|(x, t)| Ok((x.clone(), t.eval(&dims).map_err(|e| dim_err(n, e))?)))
                .collect::<Result<Vec<_>, Error>>()?;
            defs.insert(n.clone(), Def { params: TyEnv::from_entries(params), body: lw.def_body(d)? });
        }
        let main = main_s.as_ref().map(|c| lw.command(c, &global_scope)).transpose()?;
        let forward = forward_s.as_ref().map(|c| lw.command(c, &global_scope)).transpose()?;
        let target = target_s.as_ref().map(|t| lw.term(t, &global_scope)).transpose()?;

        for (l, _) in &heap_spec {
            if !sig.locations.contains_key(l) {
                return Err(Error::Type(TypeError::UnknownLocation { name: l.clone() }));
            }
        }

        Ok(Program { module, sig, dims, consts, defs, handlers, carriers, main, forward, target, heap_spec })
    }

    fn lowerer<'a>(&'a self, def_items: &'a BTreeMap<String, DefItem>, families: &'a BTreeMap<String, OpDecl>) -> Lowerer<'a> {
        Lowerer {
            families,
            consts: &self.consts,
            defs: def_items,
            handlers: &self.handlers,
            global: &self.dims,
            expanding: Default::default(),
        }
    }

    fn surface_tables(&self) -> (BTreeMap<String, DefItem>, BTreeMap<String, OpDecl>) {
        let mut defs = BTreeMap::new();
        let mut fams = BTreeMap::new();
        for it in &self.module.items {
            match it {
                Item::Def(d) => {
                    defs.insert(d.name.clone(), d.clone());
                }
                Item::Op(o) => {
                    fams.insert(o.name.clone(), o.clone());
                }
                _ => {}
            }
        }
        (defs, fams)
    }

    /// Parses and lowers a command in the scope of this program. Operations
    /// that no handler clause was instantiated for fall back to forwarding.
    pub fn command(&self, src: &str) -> Result<Command, Error> {
        let c = parse_command(src)?;
        let (defs, fams) = self.surface_tables();
        self.lowerer(&defs, &fams).command(&c, &Scope { dims: self.dims.clone(), ..Scope::default() })
    }

    pub fn term(&self, src: &str) -> Result<Term, Error> {
        let t = parse_term(src)?;
        let (defs, fams) = self.surface_tables();
        self.lowerer(&defs, &fams).term(&t, &Scope { dims: self.dims.clone(), ..Scope::default() })
    }

    pub fn handler(&self, name: &str) -> Result<&Arc<Handler>, Error> {
        self.handlers.get(name).ok_or_else(|| unknown(name))
    }

    pub fn def(&self, name: &str) -> Result<&Def, Error> {
        self.defs.get(name).ok_or_else(|| unknown(name))
    }

    pub fn main(&self) -> Result<&Command, Error> {
        self.main.as_ref().ok_or_else(|| Error::Input("the program has no `main`".into()))
    }

    /// The handler of the outermost `rev handle` in `main`, which also
    /// interprets operations when running `forward`.
    pub fn main_handler(&self) -> Option<&Arc<Handler>> {
        match self.main.as_ref()? {
            Command::Handle { handler, .. } => Some(handler),
            _ => None,
        }
    }

    /// Typechecks every def, every annotated handler, `main` and `forward`.
    pub fn check(&self) -> Result<Vec<CheckLine>, Error> {
        let ck = Checker::new(&self.sig);
        let empty = TyEnv::new();
        let mut out = Vec::new();
        for (n, d) in &self.defs {
            let t = ck.check_command(&empty, &d.params, &d.body)?;
            out.push(CheckLine { kind: "def", name: n.clone(), ty: t.to_string() });
        }
        for (n, h) in &self.handlers {
            if let Some(c) = self.carriers.get(n) {
                let ht = ck.check_handler(h, c)?;
                out.push(CheckLine { kind: "handler", name: n.clone(), ty: ht.to_string() });
            }
        }
        if let Some(f) = &self.forward {
            let t = ck.check_command(&empty, &empty, f)?;
            out.push(CheckLine { kind: "forward", name: "forward".into(), ty: t.to_string() });
        }
        if let Some(m) = &self.main {
            let t = ck.check_command(&empty, &empty, m)?;
            out.push(CheckLine { kind: "main", name: "main".into(), ty: t.to_string() });
        }
        Ok(out)
    }

    /// Type of `main`.
    pub fn main_type(&self) -> Result<Ty, Error> {
        Ok(Checker::new(&self.sig).check_command(&TyEnv::new(), &TyEnv::new(), self.main()?)?)
    }

    /// The declared initial heap; random slots are drawn from `seed` in
    /// declaration order and undeclared locations start at zero.
    pub fn initial_heap(&self, seed: u64) -> Result<Heap, Error> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut slots = Vec::new();
        for (l, init) in &self.heap_spec {
            let n = self.sig.locations[l];
            let data = match init {
                HeapInit::Values(xs) => {
                    if xs.len() != n {
                        return Err(malformed(format!("heap slot `{l}` has {} values but is declared {n}", xs.len())));
                    }
                    xs.clone()
                }
                HeapInit::Zeros => vec![0.0; n],
                HeapInit::Uniform(lo, hi) => (0..n).map(|_| rng.gen_range(*lo..*hi)).collect(),
            };
            slots.push((l.clone(), data));
        }
        Ok(Heap::from_slots(slots).completed(&self.sig))
    }

    /// Initial heap with the slots of a JSON object laid over it.
    pub fn heap_with_overrides(&self, seed: u64, json: Option<&serde_json::Value>) -> Result<Heap, Error> {
        let base = self.initial_heap(seed)?;
        let Some(j) = json else { return Ok(base) };
        let over = Heap::from_json(j).map_err(Error::Input)?;
        over.validate(&self.sig).map_err(Error::Input)?;
        let mut slots: BTreeMap<String, Vec<f64>> = base.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect();
        for (k, v) in over.iter() {
            slots.insert(k.to_string(), v.to_vec());
        }
        Ok(Heap::from_slots(slots))
    }

    pub fn source(&self) -> String {
        super::printer::module_to_source(&self.module)
    }
}
