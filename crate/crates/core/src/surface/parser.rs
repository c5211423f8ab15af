//! Recursive-descent parser for programs, commands and terms.

use crate::error::ParseError;
use crate::signature::{DimExpr, TyExpr};
use crate::syntax::Prim;

use super::ast::*;
use super::lexer::{lex, Tok, Token};

const KEYWORDS: [&str; 14] =
    ["let", "in", "ret", "rev", "handle", "with", "proj", "zeros", "rd", "main", "forward", "target", "heap", "handler"];

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    pub fn new(src: &str) -> PResult<Self> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError::new(t.line, t.col, msg)
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(x) => format!("`{x}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`, found {}", self.describe())))
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.is_kw(s) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`, found {}", self.describe())))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(format!("expected a name, found {}", self.describe()))),
        }
    }

    fn int(&mut self) -> PResult<u64> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.error(format!("expected an integer, found {}", self.describe()))),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        let neg = self.eat_sym("-");
        let x = match self.peek().clone() {
            Tok::Int(n) => n as f64,
            Tok::Num(x) => x,
            _ => return Err(self.error(format!("expected a number, found {}", self.describe()))),
        };
        self.bump();
        Ok(if neg { -x } else { x })
    }

    pub fn at_end(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn expect_end(&self) -> PResult<()> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error(format!("unexpected {} after the end", self.describe())))
        }
    }

    // ---- dimensions and types

    pub fn dim(&mut self) -> PResult<DimExpr> {
        let mut e = self.dim_term()?;
        loop {
            if self.eat_sym("+") {
                e = DimExpr::Add(Box::new(e), Box::new(self.dim_term()?));
            } else if self.eat_sym("-") {
                e = DimExpr::Sub(Box::new(e), Box::new(self.dim_term()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn dim_term(&mut self) -> PResult<DimExpr> {
        let mut e = self.dim_atom()?;
        loop {
            if self.eat_sym("*") {
                e = DimExpr::Mul(Box::new(e), Box::new(self.dim_atom()?));
            } else if self.eat_sym("/") {
                e = DimExpr::Div(Box::new(e), Box::new(self.dim_atom()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn dim_atom(&mut self) -> PResult<DimExpr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                i64::try_from(n).map(DimExpr::Num).map_err(|_| self.error("dimension too large"))
            }
            Tok::Ident(s) if s == "ceil" && matches!(self.peek_at(1), Tok::Sym("(")) => {
                self.bump();
                self.expect_sym("(")?;
                let inner = self.dim()?;
                self.expect_sym(")")?;
                match inner {
                    DimExpr::Div(a, b) => Ok(DimExpr::CeilDiv(a, b)),
                    _ => Err(self.error("`ceil` expects a division `ceil(a / b)`")),
                }
            }
            Tok::Ident(_) => Ok(DimExpr::Var(self.ident()?)),
            Tok::Sym("(") => {
                self.bump();
                let e = self.dim()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            _ => Err(self.error(format!("expected a dimension, found {}", self.describe()))),
        }
    }

    fn dim_list(&mut self, stop: &[&str]) -> PResult<Vec<DimExpr>> {
        let mut out = Vec::new();
        if stop.iter().any(|s| self.is_sym(s)) {
            return Ok(out);
        }
        loop {
            out.push(self.dim()?);
            if !self.eat_sym(",") {
                return Ok(out);
            }
        }
    }

    pub fn ty(&mut self) -> PResult<TyExpr> {
        let first = self.ty_atom()?;
        if !self.is_sym("*") {
            return Ok(first);
        }
        let mut cs = vec![first];
        while self.eat_sym("*") {
            cs.push(self.ty_atom()?);
        }
        Ok(TyExpr::Prod(cs))
    }

    fn ty_atom(&mut self) -> PResult<TyExpr> {
        if self.is_kw("Real") {
            self.bump();
            self.expect_sym("(")?;
            let d = self.dim()?;
            self.expect_sym(")")?;
            return Ok(TyExpr::Real(d));
        }
        if self.eat_sym("(") {
            if self.eat_sym(")") {
                return Ok(TyExpr::Prod(Vec::new()));
            }
            let t = self.ty()?;
            self.expect_sym(")")?;
            return Ok(t);
        }
        Err(self.error(format!("expected a type, found {}", self.describe())))
    }

    // ---- terms

    pub fn term(&mut self) -> PResult<STerm> {
        if self.is_kw("let") {
            self.bump();
            let pat = self.let_pat()?;
            self.expect_sym("<-")?;
            let m = self.term()?;
            self.expect_kw("in")?;
            let n = self.term()?;
            return Ok(STerm::Let(pat, Box::new(m), Box::new(n)));
        }
        let mut t = self.postfix()?;
        while self.eat_sym("+") {
            let r = self.postfix()?;
            t = STerm::Plus(Box::new(t), Box::new(r));
        }
        Ok(t)
    }

    fn let_pat(&mut self) -> PResult<LetPat> {
        if self.eat_sym("(") {
            let mut xs = vec![self.ident()?];
            while self.eat_sym(",") {
                xs.push(self.ident()?);
            }
            self.expect_sym(")")?;
            Ok(LetPat::Tuple(xs))
        } else {
            Ok(LetPat::Var(self.ident()?))
        }
    }

    fn postfix(&mut self) -> PResult<STerm> {
        let mut t = self.atom()?;
        while self.is_sym(".") && matches!(self.peek_at(1), Tok::Ident(s) if s == "rd") {
            self.bump();
            self.bump();
            self.expect_sym("(")?;
            let binder = self.ident()?;
            self.expect_sym(".")?;
            let body = self.term()?;
            self.expect_sym(")")?;
            self.expect_sym("(")?;
            let point = self.term()?;
            self.expect_sym(")")?;
            t = STerm::Rd { seed: Box::new(t), binder, body: Box::new(body), point: Box::new(point) };
        }
        Ok(t)
    }

    fn args(&mut self) -> PResult<Vec<STerm>> {
        self.expect_sym("(")?;
        let mut out = Vec::new();
        if self.eat_sym(")") {
            return Ok(out);
        }
        loop {
            out.push(self.term()?);
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    fn prim_app(&mut self) -> PResult<(Prim, Vec<DimExpr>)> {
        let name = self.ident()?;
        let prim = Prim::from_name(&name).ok_or_else(|| self.error(format!("unknown function `{name}`")))?;
        self.expect_sym("<")?;
        let dims = self.dim_list(&[">"])?;
        self.expect_sym(">")?;
        Ok((prim, dims))
    }

    fn atom(&mut self) -> PResult<STerm> {
        match self.peek().clone() {
            Tok::Sym("[") => {
                self.bump();
                let mut xs = Vec::new();
                if !self.is_sym("]") {
                    loop {
                        xs.push(self.number()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                self.expect_sym("]")?;
                Ok(STerm::Vec(xs))
            }
            Tok::Sym("(") => {
                self.bump();
                if self.eat_sym(")") {
                    return Ok(STerm::Tuple(Vec::new()));
                }
                let first = self.term()?;
                if self.eat_sym(")") {
                    return Ok(first);
                }
                let mut ts = vec![first];
                while self.eat_sym(",") {
                    if self.is_sym(")") {
                        break;
                    }
                    ts.push(self.term()?);
                }
                self.expect_sym(")")?;
                Ok(STerm::Tuple(ts))
            }
            Tok::Ident(s) if s == "zeros" => {
                self.bump();
                self.expect_sym("<")?;
                let d = self.dim()?;
                self.expect_sym(">")?;
                Ok(STerm::Zeros(d))
            }
            Tok::Ident(s) if s == "proj" => {
                self.bump();
                self.expect_sym("<")?;
                let i = self.int()? as usize;
                self.expect_sym(">")?;
                self.expect_sym("(")?;
                let m = self.term()?;
                self.expect_sym(")")?;
                Ok(STerm::Proj(i, Box::new(m)))
            }
            Tok::Ident(s) if s == "rd" && matches!(self.peek_at(1), Tok::Sym("[")) => {
                self.bump();
                self.bump();
                let (prim, dims) = self.prim_app()?;
                self.expect_sym("]")?;
                let args = self.args()?;
                Ok(STerm::App { prim, rd: true, dims, args })
            }
            Tok::Ident(_) if matches!(self.peek_at(1), Tok::Sym("<")) => {
                let (prim, dims) = self.prim_app()?;
                let args = self.args()?;
                Ok(STerm::App { prim, rd: false, dims, args })
            }
            Tok::Ident(_) => Ok(STerm::Var(self.ident()?)),
            _ => Err(self.error(format!("expected a term, found {}", self.describe()))),
        }
    }

    // ---- commands

    fn op_ref(&mut self) -> PResult<SOpRef> {
        let name = self.ident()?;
        let mut r = SOpRef::plain(&name);
        if self.eat_sym("<") {
            r.params = self.dim_list(&[":", ">"])?;
            if self.eat_sym(":") {
                r.dims_after_colon = Some(self.dim_list(&[">"])?);
            }
            self.expect_sym(">")?;
        }
        Ok(r)
    }

    pub fn command(&mut self) -> PResult<SCommand> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "let" => {
                self.bump();
                let pat = self.let_pat()?;
                self.expect_sym("<=")?;
                let p = self.command()?;
                self.expect_kw("in")?;
                let q = self.command()?;
                Ok(SCommand::Let(pat, Box::new(p), Box::new(q)))
            }
            Tok::Ident(s) if s == "ret" => {
                self.bump();
                Ok(SCommand::Ret(self.term()?))
            }
            Tok::Ident(s) if s == "rev" => {
                self.bump();
                self.expect_kw("handle")?;
                self.expect_sym("(")?;
                let seed = self.term()?;
                self.expect_sym(")")?;
                self.expect_sym("<")?;
                let mut binders = vec![self.ident()?];
                while self.eat_sym(",") {
                    binders.push(self.ident()?);
                }
                self.expect_sym(">")?;
                self.expect_sym(".")?;
                let body = self.command()?;
                self.expect_kw("with")?;
                let handler = self.ident()?;
                Ok(SCommand::Handle { seed, binders, body: Box::new(body), handler })
            }
            Tok::Sym("(") => {
                self.bump();
                let c = self.command()?;
                self.expect_sym(")")?;
                Ok(c)
            }
            Tok::Ident(_) if matches!(self.peek_at(1), Tok::Sym("<") | Tok::Sym("@")) => {
                let op = self.op_ref()?;
                self.expect_sym("@")?;
                let args = self.args()?;
                Ok(SCommand::Op(op, args))
            }
            Tok::Ident(_) => Ok(SCommand::Ref(self.ident()?)),
            _ => Err(self.error(format!("expected a command, found {}", self.describe()))),
        }
    }

    // ---- items

    fn name_list(&mut self, stop: &[&str]) -> PResult<Vec<String>> {
        let mut out = Vec::new();
        if stop.iter().any(|s| self.is_sym(s)) {
            return Ok(out);
        }
        loop {
            out.push(self.ident()?);
            if !self.eat_sym(",") {
                return Ok(out);
            }
        }
    }

    fn op_decl(&mut self) -> PResult<OpDecl> {
        let name = self.ident()?;
        let (mut loc_params, mut dim_params) = (Vec::new(), Vec::new());
        if self.eat_sym("<") {
            let first = self.name_list(&[":", ">"])?;
            if self.eat_sym(":") {
                loc_params = first;
                dim_params = self.name_list(&[">"])?;
            } else {
                dim_params = first;
            }
            self.expect_sym(">")?;
        }
        self.expect_sym(":")?;
        let coarity = self.ty()?;
        self.expect_sym("~>")?;
        let arity = self.ty()?;
        Ok(OpDecl { name, loc_params, dim_params, coarity, arity })
    }

    fn clause(&mut self) -> PResult<ClauseDef> {
        let op = self.op_ref()?;
        self.expect_sym("@")?;
        self.expect_sym("(")?;
        let fwd_binder = self.ident()?;
        self.expect_sym(")")?;
        self.expect_sym("=>")?;
        let fwd = self.command()?;
        self.expect_sym("|")?;
        let y = self.ident()?;
        self.expect_sym(",")?;
        let z = self.ident()?;
        let aux = if self.eat_sym(":") { Some(self.ty()?) } else { None };
        self.expect_sym("=>")?;
        let bwd = self.command()?;
        Ok(ClauseDef { op, fwd_binder, fwd, bwd_binders: (y, z), aux, bwd })
    }

    fn handler_def(&mut self) -> PResult<HandlerDef> {
        let name = self.ident()?;
        let carrier = if self.eat_sym(":") { Some(self.ty()?) } else { None };
        self.expect_sym("{")?;
        self.expect_kw("ret")?;
        let ret_binder = self.ident()?;
        self.expect_sym("=>")?;
        let ret = self.command()?;
        self.expect_sym(";")?;
        let mut clauses = Vec::new();
        while !self.eat_sym("}") {
            clauses.push(self.clause()?);
            self.expect_sym(";")?;
        }
        Ok(HandlerDef { name, carrier, ret_binder, ret, clauses })
    }

    fn heap_init(&mut self) -> PResult<HeapInit> {
        if self.is_kw("zeros") {
            self.bump();
            return Ok(HeapInit::Zeros);
        }
        if self.is_kw("uniform") {
            self.bump();
            self.expect_sym("(")?;
            let lo = self.number()?;
            self.expect_sym(",")?;
            let hi = self.number()?;
            self.expect_sym(")")?;
            if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
                return Err(self.error("uniform bounds must satisfy lo < hi"));
            }
            return Ok(HeapInit::Uniform(lo, hi));
        }
        match self.atom()? {
            STerm::Vec(xs) => Ok(HeapInit::Values(xs)),
            _ => Err(self.error("expected a vector, `zeros` or `uniform(lo, hi)`")),
        }
    }

    pub fn item(&mut self) -> PResult<Item> {
        let kw = match self.peek().clone() {
            Tok::Ident(s) => s,
            _ => return Err(self.error(format!("expected an item, found {}", self.describe()))),
        };
        self.bump();
        let item = match kw.as_str() {
            "dim" => {
                let n = self.ident()?;
                self.expect_sym("=")?;
                Item::Dim(n, self.dim()?)
            }
            "loc" => {
                let n = self.ident()?;
                self.expect_sym(":")?;
                Item::Loc(n, self.dim()?)
            }
            "op" => Item::Op(self.op_decl()?),
            "const" => {
                let n = self.ident()?;
                self.expect_sym("=")?;
                Item::Const(n, self.term()?)
            }
            "def" => {
                let name = self.ident()?;
                let mut params = Vec::new();
                if self.eat_sym("(") {
                    if !self.is_sym(")") {
                        loop {
                            let x = self.ident()?;
                            self.expect_sym(":")?;
                            params.push((x, self.ty()?));
                            if !self.eat_sym(",") {
                                break;
                            }
                        }
                    }
                    self.expect_sym(")")?;
                }
                self.expect_sym("=")?;
                Item::Def(DefItem { name, params, body: self.command()? })
            }
            "handler" => {
                let h = self.handler_def()?;
                // the closing brace ends the item
                return Ok(Item::Handler(h));
            }
            "main" => {
                self.expect_sym("=")?;
                Item::Main(self.command()?)
            }
            "forward" => {
                self.expect_sym("=")?;
                Item::Forward(self.command()?)
            }
            "target" => {
                self.expect_sym("=")?;
                Item::Target(self.term()?)
            }
            "heap" => {
                self.expect_sym("{")?;
                let mut slots = Vec::new();
                while !self.eat_sym("}") {
                    let l = self.ident()?;
                    self.expect_sym("=")?;
                    slots.push((l, self.heap_init()?));
                    self.expect_sym(";")?;
                }
                return Ok(Item::Heap(slots));
            }
            other => {
                self.pos -= 1;
                return Err(self.error(format!("unknown item `{other}`")));
            }
        };
        self.expect_sym(";")?;
        Ok(item)
    }

    pub fn module(&mut self) -> PResult<Module> {
        let mut items = Vec::new();
        while !self.at_end() {
            items.push(self.item()?);
        }
        Ok(Module { items })
    }
}

pub fn parse_module(src: &str) -> Result<Module, ParseError> {
    Parser::new(src)?.module()
}

pub fn parse_command(src: &str) -> Result<SCommand, ParseError> {
    let mut p = Parser::new(src)?;
    let c = p.command()?;
    p.expect_end()?;
    Ok(c)
}

pub fn parse_term(src: &str) -> Result<STerm, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    p.expect_end()?;
    Ok(t)
}

pub fn parse_ty(src: &str) -> Result<TyExpr, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    p.expect_end()?;
    Ok(t)
}
