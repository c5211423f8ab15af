use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub type Name = String;

/// `Real(n)` or an n-ary product. One-component products are never built.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ty {
    Base(usize),
    Prod(Vec<Ty>),
}

impl Ty {
    pub fn real(n: usize) -> Ty {
        Ty::Base(n)
    }

    pub fn unit() -> Ty {
        Ty::Base(0)
    }

    /// Product of the given components; a single component collapses to itself.
    pub fn prod(mut components: Vec<Ty>) -> Ty {
        if components.len() == 1 {
            components.pop().unwrap()
        } else {
            Ty::Prod(components)
        }
    }

    pub fn pair(a: Ty, b: Ty) -> Ty {
        Ty::Prod(vec![a, b])
    }

    pub fn is_base(&self) -> bool {
        matches!(self, Ty::Base(_))
    }

    /// Splits the type into `n` components the way a binder list of length `n` sees it.
    pub fn split(&self, n: usize) -> Option<Vec<Ty>> {
        if n == 1 {
            return Some(vec![self.clone()]);
        }
        match self {
            Ty::Prod(cs) if cs.len() == n => Some(cs.clone()),
            _ => None,
        }
    }

    /// Replaces every empty product by `Real(0)`; both denote the unit.
    pub fn canonical(&self) -> Ty {
        match self {
            Ty::Base(n) => Ty::Base(*n),
            Ty::Prod(cs) if cs.is_empty() => Ty::Base(0),
            Ty::Prod(cs) => Ty::Prod(cs.iter().map(Ty::canonical).collect()),
        }
    }

    /// Type equality up to the two spellings of the unit type.
    pub fn equiv(&self, other: &Ty) -> bool {
        self.canonical() == other.canonical()
    }

    /// Total number of scalar leaves.
    pub fn flat_len(&self) -> usize {
        match self {
            Ty::Base(n) => *n,
            Ty::Prod(cs) => cs.iter().map(Ty::flat_len).sum(),
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Base(n) => write!(f, "Real({n})"),
            Ty::Prod(cs) if cs.is_empty() => write!(f, "()"),
            Ty::Prod(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    match c {
                        Ty::Prod(inner) if !inner.is_empty() => write!(f, "({c})")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

/// Ordered typing environment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TyEnv {
    entries: Vec<(Name, Ty)>,
}

impl TyEnv {
    pub fn new() -> Self {
        TyEnv { entries: Vec::new() }
    }

    pub fn from_entries(entries: Vec<(Name, Ty)>) -> Self {
        let mut env = TyEnv::new();
        for (n, t) in entries {
            env.push_back(n, t);
        }
        env
    }

    pub fn entries(&self) -> &[(Name, Ty)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<&Ty> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    /// `x : A, Γ`; an older binding of the same name is shadowed and dropped.
    pub fn extend_front(&self, name: &str, ty: Ty) -> TyEnv {
        let mut entries = Vec::with_capacity(self.entries.len() + 1);
        entries.push((name.to_string(), ty));
        entries.extend(self.entries.iter().filter(|(n, _)| n != name).cloned());
        TyEnv { entries }
    }

    pub fn push_back(&mut self, name: Name, ty: Ty) {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, ty));
    }

    /// `Γ, Δ` where names of `Δ` win on clashes.
    pub fn concat(&self, delta: &TyEnv) -> TyEnv {
        let mut entries: Vec<(Name, Ty)> = self
            .entries
            .iter()
            .filter(|(n, _)| !delta.contains(n))
            .cloned()
            .collect();
        entries.extend(delta.entries.iter().cloned());
        TyEnv { entries }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn types(&self) -> Vec<Ty> {
        self.entries.iter().map(|(_, t)| t.clone()).collect()
    }
}

/// Primitive function families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prim {
    Swish,
    Smul,
    Minus,
    Matmul,
    Transpose,
    Outer,
    Conv,
    Pool,
    Padding,
    Upscale,
    Concat,
    Round,
}

impl Prim {
    pub const ALL: [Prim; 12] = [
        Prim::Swish,
        Prim::Smul,
        Prim::Minus,
        Prim::Matmul,
        Prim::Transpose,
        Prim::Outer,
        Prim::Conv,
        Prim::Pool,
        Prim::Padding,
        Prim::Upscale,
        Prim::Concat,
        Prim::Round,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Prim::Swish => "swish",
            Prim::Smul => "smul",
            Prim::Minus => "minus",
            Prim::Matmul => "matmul",
            Prim::Transpose => "transpose",
            Prim::Outer => "outer",
            Prim::Conv => "conv",
            Prim::Pool => "pool",
            Prim::Padding => "padding",
            Prim::Upscale => "upscale",
            Prim::Concat => "concat",
            Prim::Round => "round",
        }
    }

    pub fn from_name(s: &str) -> Option<Prim> {
        Prim::ALL.iter().copied().find(|p| p.name() == s)
    }

    /// Number of dimension parameters the family takes.
    pub fn arity(self) -> usize {
        match self {
            Prim::Swish | Prim::Smul | Prim::Minus | Prim::Round => 1,
            Prim::Matmul | Prim::Transpose | Prim::Outer => 2,
            Prim::Pool | Prim::Padding | Prim::Upscale | Prim::Concat => 3,
            Prim::Conv => 4,
        }
    }
}

/// A concrete function symbol such as `matmul<2,3>` or `rd[swish<3>]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FunSym {
    pub prim: Prim,
    pub dims: Vec<usize>,
    pub rd: bool,
}

impl FunSym {
    pub fn new(prim: Prim, dims: Vec<usize>) -> Self {
        FunSym { prim, dims, rd: false }
    }

    pub fn rd_of(&self) -> FunSym {
        FunSym { prim: self.prim, dims: self.dims.clone(), rd: true }
    }
}

impl fmt::Display for FunSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        let base = format!("{}<{}>", self.prim.name(), dims.join(","));
        if self.rd {
            write!(f, "rd[{base}]")
        } else {
            write!(f, "{base}")
        }
    }
}

/// A concrete operation instance such as `linear<l0:2,3>` or `get<l0>`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpName {
    pub family: String,
    pub locs: Vec<String>,
    pub dims: Vec<usize>,
}

impl OpName {
    pub fn new(family: &str, locs: Vec<String>, dims: Vec<usize>) -> Self {
        OpName { family: family.to_string(), locs, dims }
    }

    pub fn get(loc: &str) -> Self {
        OpName::new("get", vec![loc.to_string()], vec![])
    }

    pub fn put(loc: &str) -> Self {
        OpName::new("put", vec![loc.to_string()], vec![])
    }

    pub fn is_heap_op(&self) -> bool {
        self.family == "get" || self.family == "put"
    }
}

impl fmt::Display for OpName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family)?;
        if self.locs.is_empty() && self.dims.is_empty() {
            return Ok(());
        }
        let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        match (self.locs.is_empty(), self.dims.is_empty()) {
            (false, true) => write!(f, "<{}>", self.locs.join(",")),
            (true, false) => write!(f, "<{}>", dims.join(",")),
            _ => write!(f, "<{}:{}>", self.locs.join(","), dims.join(",")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Var(Name),
    /// A vector literal of type `Real(len)`.
    Const(Arc<[f64]>),
    App(FunSym, Box<Term>),
    Plus(Box<Term>, Box<Term>),
    Tuple(Vec<Term>),
    /// 1-based projection.
    Proj(usize, Box<Term>),
    Let(Name, Box<Term>, Box<Term>),
    /// `seed.rd(binder. body)(point)`
    Rd {
        seed: Box<Term>,
        binder: Name,
        body: Box<Term>,
        point: Box<Term>,
    },
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn constant(v: Vec<f64>) -> Term {
        Term::Const(v.into())
    }

    pub fn zeros(n: usize) -> Term {
        Term::Const(vec![0.0; n].into())
    }

    pub fn unit() -> Term {
        Term::Const(Arc::from(Vec::<f64>::new()))
    }

    pub fn app(f: FunSym, arg: Term) -> Term {
        Term::App(f, Box::new(arg))
    }

    pub fn plus(a: Term, b: Term) -> Term {
        Term::Plus(Box::new(a), Box::new(b))
    }

    pub fn proj(i: usize, t: Term) -> Term {
        Term::Proj(i, Box::new(t))
    }

    pub fn let_(x: &str, m: Term, n: Term) -> Term {
        Term::Let(x.to_string(), Box::new(m), Box::new(n))
    }

    pub fn rd(seed: Term, binder: &str, body: Term, point: Term) -> Term {
        Term::Rd {
            seed: Box::new(seed),
            binder: binder.to_string(),
            body: Box::new(body),
            point: Box::new(point),
        }
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Tuple(vec![a, b])
    }

    /// Tuple of the given components; one component stands for itself.
    pub fn tuple_or_single(mut ts: Vec<Term>) -> Term {
        if ts.len() == 1 {
            ts.pop().unwrap()
        } else {
            Term::Tuple(ts)
        }
    }

    /// Syntactic values: variables, constants and tuples of values.
    pub fn is_value(&self) -> bool {
        match self {
            Term::Var(_) | Term::Const(_) => true,
            Term::Tuple(ts) => ts.iter().all(Term::is_value),
            _ => false,
        }
    }

    /// Closed values: constants and tuples of closed values.
    pub fn is_closed_value(&self) -> bool {
        match self {
            Term::Const(_) => true,
            Term::Tuple(ts) => ts.iter().all(Term::is_closed_value),
            _ => false,
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(x) => Some(x),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Ret(Term),
    Op(OpName, Term),
    Let(Name, Box<Command>, Box<Command>),
    Handle {
        seed: Term,
        binders: Vec<Name>,
        body: Box<Command>,
        handler: Arc<Handler>,
    },
}

impl Command {
    pub fn ret(t: Term) -> Command {
        Command::Ret(t)
    }

    pub fn op(op: OpName, t: Term) -> Command {
        Command::Op(op, t)
    }

    pub fn let_(x: &str, p: Command, q: Command) -> Command {
        Command::Let(x.to_string(), Box::new(p), Box::new(q))
    }

    pub fn handle(seed: Term, binders: Vec<Name>, body: Command, handler: Arc<Handler>) -> Command {
        Command::Handle { seed, binders, body: Box::new(body), handler }
    }
}

/// One operation clause `(x ↦ fwd | y, z ↦ bwd)` with its auxiliary type.
#[derive(Clone, Debug, PartialEq)]
pub struct OpClause {
    pub fwd_binder: Name,
    pub fwd: Command,
    pub bwd_binders: (Name, Name),
    pub bwd: Command,
    pub aux_ty: Ty,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Handler {
    /// Display name; handlers written in source files are always named.
    pub label: Option<String>,
    pub ret_binder: Name,
    pub ret_clause: Command,
    pub clauses: BTreeMap<OpName, OpClause>,
}

impl Handler {
    pub fn new(ret_binder: &str, ret_clause: Command) -> Self {
        Handler {
            label: None,
            ret_binder: ret_binder.to_string(),
            ret_clause,
            clauses: BTreeMap::new(),
        }
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn with_clause(mut self, op: OpName, clause: OpClause) -> Self {
        self.clauses.insert(op, clause);
        self
    }
}

/// The clause used for an operation the handler does not mention:
/// forward the operation outwards and contribute a zero gradient.
pub fn default_clause(op: &OpName, coarity: &Ty) -> OpClause {
    OpClause {
        fwd_binder: "x".into(),
        fwd: Command::let_(
            "y",
            Command::op(op.clone(), Term::var("x")),
            Command::ret(Term::pair(Term::var("y"), Term::unit())),
        ),
        bwd_binders: ("y".into(), "z".into()),
        bwd: Command::ret(zero_term(coarity)),
        aux_ty: Ty::unit(),
    }
}

/// The all-zero closed value of a type, as a term.
pub fn zero_term(ty: &Ty) -> Term {
    match ty {
        Ty::Base(n) => Term::zeros(*n),
        Ty::Prod(cs) => Term::Tuple(cs.iter().map(zero_term).collect()),
    }
}
