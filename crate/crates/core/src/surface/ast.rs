//! Source-level syntax: dimensions stay symbolic until lowering.

use crate::signature::{DimExpr, TyExpr};
use crate::syntax::Prim;

#[derive(Clone, Debug, PartialEq)]
pub enum LetPat {
    Var(String),
    Tuple(Vec<String>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum STerm {
    /// A bound variable or a named constant.
    Var(String),
    Vec(Vec<f64>),
    Zeros(DimExpr),
    App { prim: Prim, rd: bool, dims: Vec<DimExpr>, args: Vec<STerm> },
    Plus(Box<STerm>, Box<STerm>),
    Tuple(Vec<STerm>),
    Proj(usize, Box<STerm>),
    Let(LetPat, Box<STerm>, Box<STerm>),
    Rd { seed: Box<STerm>, binder: String, body: Box<STerm>, point: Box<STerm> },
}

/// `Name<a, b : c, d>` as written. Without a colon the split between
/// locations and dimensions comes from the family declaration.
#[derive(Clone, Debug, PartialEq)]
pub struct SOpRef {
    pub name: String,
    pub params: Vec<DimExpr>,
    pub dims_after_colon: Option<Vec<DimExpr>>,
}

impl SOpRef {
    pub fn plain(name: &str) -> Self {
        SOpRef { name: name.to_string(), params: Vec::new(), dims_after_colon: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SCommand {
    Ret(STerm),
    Op(SOpRef, Vec<STerm>),
    Let(LetPat, Box<SCommand>, Box<SCommand>),
    Handle { seed: STerm, binders: Vec<String>, body: Box<SCommand>, handler: String },
    /// A named `def`, inlined at lowering.
    Ref(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpDecl {
    pub name: String,
    pub loc_params: Vec<String>,
    pub dim_params: Vec<String>,
    pub coarity: TyExpr,
    pub arity: TyExpr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClauseDef {
    /// Pattern: identifiers bind, numbers must match.
    pub op: SOpRef,
    pub fwd_binder: String,
    pub fwd: SCommand,
    pub bwd_binders: (String, String),
    pub aux: Option<TyExpr>,
    pub bwd: SCommand,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HandlerDef {
    pub name: String,
    pub carrier: Option<TyExpr>,
    pub ret_binder: String,
    pub ret: SCommand,
    pub clauses: Vec<ClauseDef>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DefItem {
    pub name: String,
    pub params: Vec<(String, TyExpr)>,
    pub body: SCommand,
}

#[derive(Clone, Debug, PartialEq)]
pub enum HeapInit {
    Values(Vec<f64>),
    Zeros,
    Uniform(f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Dim(String, DimExpr),
    Loc(String, DimExpr),
    Op(OpDecl),
    Const(String, STerm),
    Def(DefItem),
    Handler(HandlerDef),
    Main(SCommand),
    Forward(SCommand),
    Target(STerm),
    Heap(Vec<(String, HeapInit)>),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Module {
    pub items: Vec<Item>,
}
