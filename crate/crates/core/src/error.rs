use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    pub fn new(line: usize, col: usize, msg: impl Into<String>) -> Self {
        ParseError { line, col, msg: msg.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind")]
pub enum TypeError {
    #[error("unbound variable `{name}`")]
    UnboundVariable { name: String },
    #[error("unknown symbol `{name}`")]
    UnknownSymbol { name: String },
    #[error("in `{term}`: expected {expected}, found {found}")]
    ArityMismatch { term: String, expected: String, found: String },
    #[error("`+` needs a common base type, found {left} and {right} in `{term}`")]
    PlusOnNonBase { term: String, left: String, right: String },
    #[error("projection {index} out of range for {ty} in `{term}`")]
    ProjOutOfRange { term: String, index: usize, ty: String },
    #[error("reverse derivative `{term}`: {detail}")]
    RdShapeMismatch { term: String, detail: String },
    #[error("handler {handler} has carrier {expected} but the handled body has type {found}")]
    HandlerCarrierMismatch { handler: String, expected: String, found: String },
    #[error("seed of `{command}` has type {ty}, which does not split into {binders} components")]
    RevHandleSeedNotProduct { command: String, ty: String, binders: usize },
    #[error("binder list `{binders}` is empty or repeats a name")]
    BinderCountMismatch { binders: String },
    #[error("return clause of {handler} maps {carrier} to {found}")]
    RetClauseNotEndomorphic { handler: String, carrier: String, found: String },
    #[error("forward clause of {op}: expected {expected}, found {found}")]
    ForwardClauseShape { op: String, expected: String, found: String },
    #[error("backward clause of {op}: expected {expected}, found {found}")]
    BackwardClauseShape { op: String, expected: String, found: String },
    #[error("handler clause for heap operation {op}")]
    HeapOpInHandler { op: String },
    #[error("unknown location `{name}`")]
    UnknownLocation { name: String },
    #[error("cannot infer the carrier of a handler whose return clause is not typeable: {detail}")]
    CarrierUnknown { detail: String },
    #[error("dimension error in {context}: {detail}")]
    BadDimension { context: String, detail: String },
    #[error("{detail}")]
    Malformed { detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind")]
pub enum EvalError {
    #[error("{f} is undefined at this argument: {detail}")]
    Partiality { f: String, detail: String },
    #[error("shape mismatch: {detail}")]
    ShapeMismatch { detail: String },
    #[error("stuck term `{term}`")]
    Stuck { term: String },
    #[error("stuck command `{command}`")]
    StuckCommand { command: String },
    #[error("unhandled operation {op}")]
    UnhandledOperation { op: String },
    #[error("no reverse derivative for {f}")]
    MissingRdPartner { f: String },
    #[error("operation {op} survived every handler")]
    ResidualOperation { op: String },
    #[error("command does not classify: {detail}")]
    UnhandledShape { detail: String },
    #[error("fuel exhausted after {steps} steps")]
    FuelExhausted { steps: u64 },
    #[error("step {step} changed the type from {before} to {after}")]
    TypePreservation { step: u64, before: String, after: String },
    #[error("step {step} no longer typechecks: {detail}")]
    IllTypedStep { step: u64, detail: String },
    #[error("handler firing at step {step} did not decrease depth ({before} -> {after})")]
    DepthIncrease { step: u64, before: usize, after: usize },
}

/// Any failure surfaced to a driver, with its process exit status.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("type error: {0}")]
    Type(#[from] TypeError),
    #[error("runtime error: {0}")]
    Eval(#[from] EvalError),
    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),
    #[error("{0}")]
    Input(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Type(_) | Error::Input(_) => 1,
            Error::Eval(_) => 2,
            Error::OracleMismatch(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Type(_) => "type",
            Error::Eval(_) => "runtime",
            Error::OracleMismatch(_) => "oracle_mismatch",
            Error::Input(_) => "input",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let detail = match self {
            Error::Parse(e) => serde_json::to_value(e).unwrap_or_default(),
            Error::Type(e) => serde_json::to_value(e).unwrap_or_default(),
            Error::Eval(e) => serde_json::to_value(e).unwrap_or_default(),
            Error::OracleMismatch(_) | Error::Input(_) => serde_json::Value::Null,
        };
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "detail": detail,
        })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
