//! Randomly instantiated congruence axioms and algebra laws, shared by the
//! property tests and the acceptance suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gen::ArrowGen;
use crate::grad_oracle::random_value;
use crate::surface::Program;
use crate::syntax::{OpName, Term, Ty};
use crate::typecheck::Checker;
use crate::values::{Heap, TieBreak, Value};

use super::{evaluate_arr, normalize, ArrTerm, Denoter, NormalForm, PureFun};

/// A location `l` of six weights, one user operation and a handler for it.
pub const LAB: &str = "
loc l : 6;
op Linear<l : n, m> : Real(n) ~> Real(m);
handler H : Real(3) {
  ret x => ret x;
  Linear<l : n, m>@(x) =>
    let w <= get<l>@() in
    ret (matmul<n, m>(w, x), (w, x))
  | y, z : Real(n * m) * Real(n) =>
    let (w, x) <= ret z in
    let _ <= put<l>@(minus<n * m>(w, outer<n, m>(y, x))) in
    ret matmul<m, n>(transpose<n, m>(w), y);
}
main = rev handle([1.0, 2.0]) <x>. Linear<l : 2, 3>@(x) with H;
";

pub fn lab() -> Program {
    Program::parse(LAB).expect("the lab program parses")
}

pub fn linear() -> ArrTerm {
    ArrTerm::op(OpName::new("Linear", vec!["l".into()], vec![2, 3]), Ty::real(2), Ty::real(3))
}

pub fn get() -> ArrTerm {
    ArrTerm::op(OpName::get("l"), Ty::unit(), Ty::real(6))
}

pub fn put() -> ArrTerm {
    ArrTerm::op(OpName::put("l"), Ty::real(6), Ty::unit())
}

pub type LabGen = ArrowGen<ChaCha8Rng>;

/// Arrow generator over the lab operations; `get` is drawn twice as often
/// as `put`.
pub fn lab_gen(seed: u64) -> LabGen {
    ArrowGen::new(ChaCha8Rng::seed_from_u64(seed), vec![linear()], vec![get(), get(), put()])
}

pub fn random_heap<R: Rng>(rng: &mut R) -> Heap {
    Heap::from_slots([("l".to_string(), (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect())])
}

pub fn id_times(f: &PureFun, left: &Ty) -> PureFun {
    let p = Term::var("q");
    let body = Term::pair(Term::proj(1, p.clone()), f.apply_term(&Term::proj(2, p)));
    PureFun::new("q", body, Ty::pair(left.clone(), f.dom.clone())).expect("well typed")
}

pub fn times_id(f: &PureFun, right: &Ty) -> PureFun {
    let p = Term::var("q");
    let body = Term::pair(f.apply_term(&Term::proj(1, p.clone())), Term::proj(2, p));
    PureFun::new("q", body, Ty::pair(f.dom.clone(), right.clone())).expect("well typed")
}

fn pi1(a: &Ty, b: &Ty) -> PureFun {
    PureFun::new("q", Term::proj(1, Term::var("q")), Ty::pair(a.clone(), b.clone())).expect("well typed")
}

/// `A × (B × C) → (A × B) × C`.
fn assoc(a: &Ty, b: &Ty, c: &Ty) -> PureFun {
    let q = Term::var("q");
    let bc = Term::proj(2, q.clone());
    let body = Term::pair(Term::pair(Term::proj(1, q), Term::proj(1, bc.clone())), Term::proj(2, bc));
    PureFun::new("q", body, Ty::pair(a.clone(), Ty::pair(b.clone(), c.clone()))).expect("well typed")
}

pub const AXIOMS: [&str; 9] = [
    "associativity",
    "arr of a composite",
    "left unit",
    "right unit",
    "sliding a pure map past first",
    "first then projection",
    "first then reassociation",
    "first of arr",
    "first of a composite",
];

/// Both sides of axiom `k` (indexing [`AXIOMS`]), instantiated at random.
pub fn axiom(k: usize, g: &mut LabGen) -> (ArrTerm, ArrTerm) {
    let (x, y, w, v) = (g.ty(), g.ty(), g.ty(), g.ty());
    let d = 2;
    match k {
        0 => {
            let (a, b, c) = (g.arrow(&x, &y, d, true), g.arrow(&y, &w, d, true), g.arrow(&w, &v, d, true));
            (a.clone().seq(b.clone()).seq(c.clone()), a.seq(b.seq(c)))
        }
        1 => {
            let (f, h) = (g.fun(&x, &y), g.fun(&y, &w));
            (ArrTerm::Arr(f.then(&h)), ArrTerm::Arr(f).seq(ArrTerm::Arr(h)))
        }
        2 => {
            let a = g.arrow(&x, &y, d, true);
            (ArrTerm::Arr(PureFun::identity(&x)).seq(a.clone()), a)
        }
        3 => {
            let a = g.arrow(&x, &y, d, true);
            (a.clone().seq(ArrTerm::Arr(PureFun::identity(&y))), a)
        }
        4 => {
            let (z, z2) = (w, v);
            let a = g.arrow(&x, &y, d, true);
            let f = g.fun(&z, &z2);
            let lhs = ArrTerm::first(z.clone(), a.clone()).seq(ArrTerm::Arr(id_times(&f, &y)));
            let rhs = ArrTerm::Arr(id_times(&f, &x)).seq(ArrTerm::first(z2, a));
            (lhs, rhs)
        }
        5 => {
            let a = g.arrow(&x, &y, d, true);
            let lhs = ArrTerm::first(w.clone(), a.clone()).seq(ArrTerm::Arr(pi1(&y, &w)));
            (lhs, ArrTerm::Arr(pi1(&x, &w)).seq(a))
        }
        6 => {
            let (z1, z2) = (w, v);
            let a = g.arrow(&x, &y, d, true);
            let zz = Ty::pair(z1.clone(), z2.clone());
            let lhs = ArrTerm::first(zz, a.clone()).seq(ArrTerm::Arr(assoc(&y, &z1, &z2)));
            let rhs = ArrTerm::Arr(assoc(&x, &z1, &z2)).seq(ArrTerm::first(z2, ArrTerm::first(z1, a)));
            (lhs, rhs)
        }
        7 => {
            let f = g.fun(&x, &y);
            (ArrTerm::first(w.clone(), ArrTerm::Arr(f.clone())), ArrTerm::Arr(times_id(&f, &w)))
        }
        _ => {
            let (a, b) = (g.arrow(&x, &y, d, true), g.arrow(&y, &w, d, true));
            let lhs = ArrTerm::first(v.clone(), a.clone().seq(b.clone()));
            (lhs, ArrTerm::first(v.clone(), a).seq(ArrTerm::first(v, b)))
        }
    }
}

pub fn nf(a: &ArrTerm) -> Result<NormalForm, String> {
    a.well_formed()?;
    normalize(a).map_err(|e| format!("normalizing {a}: {e}"))
}

fn run(a: &ArrTerm, heap: &Heap, input: &Value) -> Result<(Heap, Value), String> {
    evaluate_arr(a, heap, input, TieBreak::First).map_err(|e| format!("evaluating {a}: {e}"))
}

/// Relative closeness of values and heaps.
pub fn close(a: &(Heap, Value), b: &(Heap, Value), tol: f64) -> Result<(), String> {
    let near = |x: &[f64], y: &[f64]| {
        x.len() == y.len() && x.iter().zip(y).all(|(p, q)| (p - q).abs() <= tol * p.abs().max(1.0))
    };
    if !near(&a.1.flatten(), &b.1.flatten()) {
        return Err(format!("values {} and {}", a.1, b.1));
    }
    for (loc, x) in a.0.iter() {
        if !b.0.slot(loc).is_some_and(|y| near(x, y)) {
            return Err(format!("heaps differ at {loc}"));
        }
    }
    Ok(())
}

/// Both sides of axiom `k` at `seed` have the same normal form.
pub fn check_axiom(k: usize, seed: u64) -> Result<(), String> {
    let mut g = lab_gen(seed);
    let (lhs, rhs) = axiom(k, &mut g);
    let (a, b) = (nf(&lhs)?, nf(&rhs)?);
    if a == b {
        Ok(())
    } else {
        Err(format!("{}:\n  {a}\n  {b}", AXIOMS[k]))
    }
}

/// Folding the identity is the continuation, both as normal forms and
/// as functions of heap and input.
pub fn check_unit_law(seed: u64, tol: f64) -> Result<(), String> {
    let p = lab();
    let checker = Checker::new(&p.sig);
    let den = Denoter::new(&checker);
    let h = p.handler("H").map_err(|e| e.to_string())?;
    let mut g = lab_gen(seed);
    let x = g.ty();
    let k = g.arrow(&x, &x, 3, false);
    let lhs = den.fold(h, &nf(&ArrTerm::Arr(PureFun::identity(&x)))?, k.clone()).map_err(|e| e.to_string())?;
    if nf(&lhs)? != nf(&k)? {
        return Err(format!("unit law: {lhs} and {k} normalize differently"));
    }
    let (heap, input) = (random_heap(&mut g.terms.rng), random_value(&x, &mut g.terms.rng));
    close(&run(&lhs, &heap, &input)?, &run(&k, &heap, &input)?, tol)
}

/// Folding `a >>> b` is folding `a` over the fold of `b`.
pub fn check_composition_law(seed: u64, tol: f64) -> Result<(), String> {
    let p = lab();
    let checker = Checker::new(&p.sig);
    let den = Denoter::new(&checker);
    let h = p.handler("H").map_err(|e| e.to_string())?;
    let mut g = lab_gen(seed);
    let (x, y) = (g.ty(), g.ty());
    let (a, b) = (g.arrow(&x, &y, 2, true), g.arrow(&y, &x, 2, true));
    let k = g.arrow(&x, &x, 2, false);
    let fold = |n: &NormalForm, k: ArrTerm| den.fold(h, n, k).map_err(|e| e.to_string());
    let whole = fold(&nf(&a.clone().seq(b.clone()))?, k.clone())?;
    let split = fold(&nf(&a)?, fold(&nf(&b)?, k)?)?;
    let (heap, input) = (random_heap(&mut g.terms.rng), random_value(&x, &mut g.terms.rng));
    close(&run(&whole, &heap, &input)?, &run(&split, &heap, &input)?, tol)
}

/// Normalizing does not change what a heap-only arrow computes.
pub fn check_meaning_preserved(seed: u64, tol: f64) -> Result<(), String> {
    let mut g = lab_gen(seed);
    let (x, y) = (g.ty(), g.ty());
    let a = g.arrow(&x, &y, 3, false);
    let n = nf(&a)?;
    let (heap, input) = (random_heap(&mut g.terms.rng), random_value(&x, &mut g.terms.rng));
    let normal = n.to_arr().map_err(|e| e.to_string())?;
    close(&run(&a, &heap, &input)?, &run(&normal, &heap, &input)?, tol)
}
