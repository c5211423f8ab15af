//! Source printing; `parse(print(m)) == m` for every module the parser accepts.

use std::fmt::Write;

use crate::signature::{DimExpr, TyExpr};
use crate::syntax::pretty::fmt_vec;

use super::ast::*;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Top,
    Sum,
    Postfix,
}

fn dims(ds: &[DimExpr]) -> String {
    ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
}

fn pat(p: &LetPat) -> String {
    match p {
        LetPat::Var(x) => x.clone(),
        LetPat::Tuple(xs) => format!("({})", xs.join(", ")),
    }
}

fn args(out: &mut String, ts: &[STerm]) {
    out.push('(');
    for (i, t) in ts.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        term(out, t, Prec::Top);
    }
    out.push(')');
}

fn term(out: &mut String, t: &STerm, prec: Prec) {
    match t {
        STerm::Var(x) => out.push_str(x),
        STerm::Vec(xs) => out.push_str(&fmt_vec(xs)),
        STerm::Zeros(d) => {
            let _ = write!(out, "zeros<{d}>");
        }
        STerm::App { prim, rd, dims: ds, args: a } => {
            if *rd {
                let _ = write!(out, "rd[{}<{}>]", prim.name(), dims(ds));
            } else {
                let _ = write!(out, "{}<{}>", prim.name(), dims(ds));
            }
            args(out, a);
        }
        STerm::Plus(a, b) => {
            let wrap = prec > Prec::Sum;
            if wrap {
                out.push('(');
            }
            term(out, a, Prec::Sum);
            out.push_str(" + ");
            term(out, b, Prec::Postfix);
            if wrap {
                out.push(')');
            }
        }
        STerm::Tuple(ts) => {
            args(out, ts);
            if ts.len() == 1 {
                out.pop();
                out.push_str(",)");
            }
        }
        STerm::Proj(i, m) => {
            let _ = write!(out, "proj<{i}>(");
            term(out, m, Prec::Top);
            out.push(')');
        }
        STerm::Let(p, m, n) => {
            let wrap = prec > Prec::Top;
            if wrap {
                out.push('(');
            }
            let _ = write!(out, "let {} <- ", pat(p));
            term(out, m, Prec::Top);
            out.push_str(" in ");
            term(out, n, Prec::Top);
            if wrap {
                out.push(')');
            }
        }
        STerm::Rd { seed, binder, body, point } => {
            term(out, seed, Prec::Postfix);
            let _ = write!(out, ".rd({binder}. ");
            term(out, body, Prec::Top);
            out.push_str(")(");
            term(out, point, Prec::Top);
            out.push(')');
        }
    }
}

pub fn term_to_source(t: &STerm) -> String {
    let mut s = String::new();
    term(&mut s, t, Prec::Top);
    s
}

fn op_ref(r: &SOpRef) -> String {
    let mut s = r.name.clone();
    if r.params.is_empty() && r.dims_after_colon.is_none() {
        return s;
    }
    s.push('<');
    s.push_str(&dims(&r.params));
    if let Some(ds) = &r.dims_after_colon {
        s.push_str(" : ");
        s.push_str(&dims(ds));
    }
    s.push('>');
    s
}

fn newline(out: &mut String, indent: usize) {
    out.push('\n');
    out.push_str(&" ".repeat(indent));
}

fn command(out: &mut String, c: &SCommand, indent: usize, wrap: bool) {
    match c {
        SCommand::Ret(t) => {
            out.push_str("ret ");
            // a `let` term would swallow a following `in`
            term(out, t, if matches!(t, STerm::Let(..)) { Prec::Postfix } else { Prec::Top });
        }
        SCommand::Op(r, a) => {
            out.push_str(&op_ref(r));
            out.push('@');
            args(out, a);
        }
        SCommand::Ref(n) => out.push_str(n),
        SCommand::Let(p, first, rest) => {
            if wrap {
                out.push('(');
            }
            let _ = write!(out, "let {} <= ", pat(p));
            command(out, first, indent + 4, matches!(**first, SCommand::Let(..)));
            out.push_str(" in");
            newline(out, indent);
            command(out, rest, indent, false);
            if wrap {
                out.push(')');
            }
        }
        SCommand::Handle { seed, binders, body, handler } => {
            if wrap {
                out.push('(');
            }
            out.push_str("rev handle(");
            term(out, seed, Prec::Top);
            let _ = write!(out, ") <{}>.", binders.join(", "));
            newline(out, indent + 2);
            command(out, body, indent + 2, false);
            newline(out, indent);
            let _ = write!(out, "with {handler}");
            if wrap {
                out.push(')');
            }
        }
    }
}

pub fn command_to_source(c: &SCommand) -> String {
    let mut s = String::new();
    command(&mut s, c, 0, false);
    s
}

fn ty(t: &TyExpr) -> String {
    t.to_string()
}

fn item(out: &mut String, it: &Item) {
    match it {
        Item::Dim(n, d) => {
            let _ = writeln!(out, "dim {n} = {d};");
        }
        Item::Loc(n, d) => {
            let _ = writeln!(out, "loc {n} : {d};");
        }
        Item::Op(o) => {
            out.push_str("op ");
            out.push_str(&o.name);
            if !o.loc_params.is_empty() {
                let _ = write!(out, "<{} : {}>", o.loc_params.join(", "), o.dim_params.join(", "));
            } else if !o.dim_params.is_empty() {
                let _ = write!(out, "<{}>", o.dim_params.join(", "));
            }
            let _ = writeln!(out, " : {} ~> {};", ty(&o.coarity), ty(&o.arity));
        }
        Item::Const(n, t) => {
            let _ = writeln!(out, "const {n} = {};", term_to_source(t));
        }
        Item::Def(d) => {
            let _ = write!(out, "def {}", d.name);
            if !d.params.is_empty() {
                let ps: Vec<String> = d.params.iter().map(|(x, t)| format!("{x} : {}", ty(t))).collect();
                let _ = write!(out, "({})", ps.join(", "));
            }
            out.push_str(" =");
            newline(out, 2);
            command(out, &d.body, 2, false);
            out.push_str(";\n");
        }
        Item::Handler(h) => {
            let _ = write!(out, "handler {}", h.name);
            if let Some(c) = &h.carrier {
                let _ = write!(out, " : {}", ty(c));
            }
            out.push_str(" {");
            newline(out, 2);
            let _ = write!(out, "ret {} =>", h.ret_binder);
            newline(out, 4);
            command(out, &h.ret, 4, false);
            out.push(';');
            for cl in &h.clauses {
                newline(out, 2);
                let _ = write!(out, "{}@({}) =>", op_ref(&cl.op), cl.fwd_binder);
                newline(out, 4);
                command(out, &cl.fwd, 4, false);
                newline(out, 2);
                let _ = write!(out, "| {}, {}", cl.bwd_binders.0, cl.bwd_binders.1);
                if let Some(a) = &cl.aux {
                    let _ = write!(out, " : {}", ty(a));
                }
                out.push_str(" =>");
                newline(out, 4);
                command(out, &cl.bwd, 4, false);
                out.push(';');
            }
            out.push_str("\n}\n");
        }
        Item::Main(c) | Item::Forward(c) => {
            out.push_str(if matches!(it, Item::Main(_)) { "main =" } else { "forward =" });
            newline(out, 2);
            command(out, c, 2, false);
            out.push_str(";\n");
        }
        Item::Target(t) => {
            let _ = writeln!(out, "target = {};", term_to_source(t));
        }
        Item::Heap(slots) => {
            out.push_str("heap {\n");
            for (l, init) in slots {
                let v = match init {
                    HeapInit::Values(xs) => fmt_vec(xs),
                    HeapInit::Zeros => "zeros".into(),
                    HeapInit::Uniform(a, b) => format!("uniform({a:?}, {b:?})"),
                };
                let _ = writeln!(out, "  {l} = {v};");
            }
            out.push_str("}\n");
        }
    }
}

pub fn module_to_source(m: &Module) -> String {
    let mut s = String::new();
    for (i, it) in m.items.iter().enumerate() {
        // blank line between multi-line items
        if i > 0 && matches!(it, Item::Def(_) | Item::Handler(_) | Item::Main(_) | Item::Forward(_) | Item::Heap(_)) {
            s.push('\n');
        }
        item(&mut s, it);
    }
    s
}
