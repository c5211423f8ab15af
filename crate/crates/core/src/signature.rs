//! Function-symbol and operation signatures.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::TypeError;
use crate::syntax::{FunSym, OpName, Prim, Ty};

/// Arithmetic over dimension parameters, as written in operation declarations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DimExpr {
    Num(i64),
    Var(String),
    Add(Box<DimExpr>, Box<DimExpr>),
    Sub(Box<DimExpr>, Box<DimExpr>),
    Mul(Box<DimExpr>, Box<DimExpr>),
    /// Floor division.
    Div(Box<DimExpr>, Box<DimExpr>),
    /// `ceil(a / b)`.
    CeilDiv(Box<DimExpr>, Box<DimExpr>),
}

impl DimExpr {
    pub fn eval(&self, env: &BTreeMap<String, i64>) -> Result<i64, String> {
        Ok(match self {
            DimExpr::Num(n) => *n,
            DimExpr::Var(v) => *env.get(v).ok_or_else(|| format!("unbound dimension `{v}`"))?,
            DimExpr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            DimExpr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            DimExpr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            DimExpr::Div(a, b) | DimExpr::CeilDiv(a, b) => {
                let (x, y) = (a.eval(env)?, b.eval(env)?);
                if y == 0 {
                    return Err("division by zero in dimension".into());
                }
                if matches!(self, DimExpr::Div(..)) {
                    x.div_euclid(y)
                } else {
                    -((-x).div_euclid(y))
                }
            }
        })
    }

    pub fn eval_dim(&self, env: &BTreeMap<String, i64>) -> Result<usize, String> {
        let v = self.eval(env)?;
        usize::try_from(v).map_err(|_| format!("negative dimension {v} from `{self}`"))
    }

    fn prec(&self) -> u8 {
        match self {
            DimExpr::Add(..) | DimExpr::Sub(..) => 1,
            DimExpr::Mul(..) | DimExpr::Div(..) => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for DimExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &DimExpr, min: u8| {
            if e.prec() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            DimExpr::Num(n) => write!(f, "{n}"),
            DimExpr::Var(v) => write!(f, "{v}"),
            DimExpr::CeilDiv(a, b) => {
                write!(f, "ceil(")?;
                wrap(f, a, 2)?;
                write!(f, " / ")?;
                wrap(f, b, 3)?;
                write!(f, ")")
            }
            DimExpr::Add(a, b) | DimExpr::Sub(a, b) | DimExpr::Mul(a, b) | DimExpr::Div(a, b) => {
                let (op, p) = match self {
                    DimExpr::Add(..) => ("+", 1),
                    DimExpr::Sub(..) => ("-", 1),
                    DimExpr::Mul(..) => ("*", 2),
                    _ => ("/", 2),
                };
                wrap(f, a, p)?;
                write!(f, " {op} ")?;
                wrap(f, b, p + 1)
            }
        }
    }
}

/// A type with dimension expressions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TyExpr {
    Real(DimExpr),
    Prod(Vec<TyExpr>),
}

impl TyExpr {
    pub fn eval(&self, env: &BTreeMap<String, i64>) -> Result<Ty, String> {
        Ok(match self {
            TyExpr::Real(d) => Ty::Base(d.eval_dim(env)?),
            TyExpr::Prod(cs) => Ty::prod(cs.iter().map(|c| c.eval(env)).collect::<Result<_, _>>()?),
        })
    }
}

impl fmt::Display for TyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TyExpr::Real(d) => write!(f, "Real({d})"),
            TyExpr::Prod(cs) if cs.is_empty() => write!(f, "()"),
            TyExpr::Prod(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    match c {
                        TyExpr::Prod(inner) if !inner.is_empty() => write!(f, "({c})")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

/// A declared family `name<locs : dims> : A ~> B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpFamily {
    pub name: String,
    pub loc_params: Vec<String>,
    pub dim_params: Vec<String>,
    pub coarity: TyExpr,
    pub arity: TyExpr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OpKind {
    User,
    Get(String),
    Put(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpSig {
    pub name: OpName,
    pub coarity: Ty,
    pub arity: Ty,
    pub kind: OpKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunSig {
    pub sym: FunSym,
    pub dom: Ty,
    pub cod: Ty,
    pub rd_partner: Option<FunSym>,
}

fn r(n: usize) -> Ty {
    Ty::Base(n)
}

fn shape_of(prim: Prim, d: &[usize]) -> Result<(Ty, Ty), String> {
    let need = prim.arity();
    if d.len() != need {
        return Err(format!("{} takes {need} dimension parameters, got {}", prim.name(), d.len()));
    }
    Ok(match prim {
        Prim::Swish | Prim::Round => (r(d[0]), r(d[0])),
        Prim::Smul => (Ty::pair(r(1), r(d[0])), r(d[0])),
        Prim::Minus => (Ty::pair(r(d[0]), r(d[0])), r(d[0])),
        Prim::Matmul => (Ty::pair(r(d[0] * d[1]), r(d[0])), r(d[1])),
        Prim::Transpose => (r(d[0] * d[1]), r(d[0] * d[1])),
        Prim::Outer => (Ty::pair(r(d[1]), r(d[0])), r(d[0] * d[1])),
        Prim::Conv => {
            let (n, m, c, co) = (d[0], d[1], d[2], d[3]);
            if m == 0 || m > n {
                return Err(format!("conv filter size {m} must be in 1..={n}"));
            }
            (Ty::pair(r(c * n), r(c * co * m)), r(co * (n - m + 1)))
        }
        Prim::Pool => {
            let (n, m, c) = (d[0], d[1], d[2]);
            if m == 0 {
                return Err("pool window must be positive".into());
            }
            (r(c * n), r(c * n.div_ceil(m)))
        }
        Prim::Padding => {
            let (c, n, m) = (d[0], d[1], d[2]);
            if m < n {
                return Err(format!("padding target {m} is smaller than source {n}"));
            }
            (r(c * n), r(c * m))
        }
        Prim::Upscale => {
            let (c, n, m) = (d[0], d[1], d[2]);
            if n == 0 && m > 0 {
                return Err("cannot upscale an empty image".into());
            }
            (r(c * n), r(c * m))
        }
        Prim::Concat => {
            let (c, c2, n) = (d[0], d[1], d[2]);
            (Ty::pair(r(c * n), r(c2 * n)), r((c + c2) * n))
        }
    })
}

/// Signature of a function symbol. Every primitive has a reverse derivative,
/// but derivatives of derivatives are not provided.
pub fn fun_sig(f: &FunSym) -> Result<FunSig, TypeError> {
    let (dom, cod) = shape_of(f.prim, &f.dims).map_err(|detail| TypeError::ArityMismatch {
        term: f.to_string(),
        expected: format!("{} dimension parameters", f.prim.arity()),
        found: detail,
    })?;
    if f.rd {
        Ok(FunSig { sym: f.clone(), dom: Ty::pair(cod, dom.clone()), cod: dom, rd_partner: None })
    } else {
        Ok(FunSig { sym: f.clone(), dom, cod, rd_partner: Some(f.rd_of()) })
    }
}

/// Locations and operation families of a program.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub locations: BTreeMap<String, usize>,
    pub families: BTreeMap<String, OpFamily>,
}

impl Signature {
    pub fn new() -> Self {
        Signature::default()
    }

    pub fn with_location(mut self, name: &str, dim: usize) -> Self {
        self.locations.insert(name.to_string(), dim);
        self
    }

    pub fn with_family(mut self, fam: OpFamily) -> Self {
        self.families.insert(fam.name.clone(), fam);
        self
    }

    pub fn location(&self, name: &str) -> Result<usize, TypeError> {
        self.locations
            .get(name)
            .copied()
            .ok_or_else(|| TypeError::UnknownLocation { name: name.to_string() })
    }

    pub fn op_sig(&self, op: &OpName) -> Result<OpSig, TypeError> {
        let arity_err = |expected: String| TypeError::ArityMismatch {
            term: op.to_string(),
            expected,
            found: format!("{} locations and {} dimensions", op.locs.len(), op.dims.len()),
        };
        match op.family.as_str() {
            "get" | "put" => {
                if op.locs.len() != 1 || !op.dims.is_empty() {
                    return Err(arity_err("exactly one location".into()));
                }
                let loc = &op.locs[0];
                let n = self.location(loc)?;
                let (coarity, arity, kind) = if op.family == "get" {
                    (Ty::unit(), Ty::Base(n), OpKind::Get(loc.clone()))
                } else {
                    (Ty::Base(n), Ty::unit(), OpKind::Put(loc.clone()))
                };
                Ok(OpSig { name: op.clone(), coarity, arity, kind })
            }
            fam => {
                let family = self
                    .families
                    .get(fam)
                    .ok_or_else(|| TypeError::UnknownSymbol { name: op.to_string() })?;
                if family.loc_params.len() != op.locs.len() || family.dim_params.len() != op.dims.len() {
                    return Err(arity_err(format!(
                        "{} locations and {} dimensions",
                        family.loc_params.len(),
                        family.dim_params.len()
                    )));
                }
                for l in &op.locs {
                    self.location(l)?;
                }
                let env: BTreeMap<String, i64> = family
                    .dim_params
                    .iter()
                    .cloned()
                    .zip(op.dims.iter().map(|&d| d as i64))
                    .collect();
                let eval = |t: &TyExpr| {
                    t.eval(&env).map_err(|detail| TypeError::ArityMismatch {
                        term: op.to_string(),
                        expected: t.to_string(),
                        found: detail,
                    })
                };
                Ok(OpSig { name: op.clone(), coarity: eval(&family.coarity)?, arity: eval(&family.arity)?, kind: OpKind::User })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rd_partner_shape() {
        for p in Prim::ALL {
            let dims: Vec<usize> = match p {
                Prim::Conv => vec![5, 2, 2, 3],
                Prim::Padding | Prim::Upscale => vec![2, 3, 5],
                _ => vec![3; p.arity()],
            };
            let f = FunSym::new(p, dims);
            let s = fun_sig(&f).unwrap();
            let rd = fun_sig(s.rd_partner.as_ref().unwrap()).unwrap();
            assert_eq!(rd.dom, Ty::pair(s.cod.clone(), s.dom.clone()));
            assert_eq!(rd.cod, s.dom);
        }
    }

    #[test]
    fn conv_and_pool_shapes() {
        let s = fun_sig(&FunSym::new(Prim::Conv, vec![3, 2, 1, 1])).unwrap();
        assert_eq!(s.dom, Ty::pair(Ty::Base(3), Ty::Base(2)));
        assert_eq!(s.cod, Ty::Base(2));
        let s = fun_sig(&FunSym::new(Prim::Pool, vec![5, 2, 3])).unwrap();
        assert_eq!(s.cod, Ty::Base(9));
    }

    #[test]
    fn dim_arithmetic() {
        let env: BTreeMap<String, i64> = [("n".to_string(), 134)].into_iter().collect();
        let e = DimExpr::CeilDiv(
            Box::new(DimExpr::Sub(Box::new(DimExpr::Var("n".into())), Box::new(DimExpr::Num(2)))),
            Box::new(DimExpr::Num(2)),
        );
        assert_eq!(e.eval(&env).unwrap(), 66);
        assert_eq!(e.to_string(), "ceil((n - 2) / 2)");
    }

    #[test]
    fn heap_ops() {
        let sig = Signature::new().with_location("l0", 6);
        let g = sig.op_sig(&OpName::get("l0")).unwrap();
        assert_eq!((g.coarity, g.arity), (Ty::unit(), Ty::Base(6)));
        let p = sig.op_sig(&OpName::put("l0")).unwrap();
        assert_eq!((p.coarity, p.arity), (Ty::Base(6), Ty::unit()));
        assert!(sig.op_sig(&OpName::get("l9")).is_err());
    }
}
