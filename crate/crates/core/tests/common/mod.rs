//! Independent oracles shared by the integration suites.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use lr_core::equivalence::{subterm_closure, Enumerator};
use lr_core::statics::{typecheck_with_hole, HoleTyping, StoreTyping, TermCtx};
use lr_core::surface::{parse_program, Program};
use lr_core::{Feature, LangLevel, Name, Term, Type};

pub fn golden(name: &str) -> Program {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_program(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// Simultaneous substitution.

/// Applies `map` to every free variable of `e` at once. Each term binder is
/// renamed to a fresh `_s<n>` on the way down, so nothing can be captured
/// whatever the substituted terms contain.
pub fn subst_simultaneous(e: &Term, map: &BTreeMap<Name, Term>) -> Term {
    let mut counter = 0;
    go(e, map, &mut counter)
}

fn fresh(counter: &mut usize) -> Name {
    *counter += 1;
    Name::from(format!("_s{counter}"))
}

fn under(x: &Name, map: &BTreeMap<Name, Term>, counter: &mut usize) -> (Name, BTreeMap<Name, Term>) {
    let y = fresh(counter);
    let mut inner = map.clone();
    inner.insert(x.clone(), Term::Var(y.clone()));
    (y, inner)
}

fn go(e: &Term, map: &BTreeMap<Name, Term>, n: &mut usize) -> Term {
    let b = |t: &Term, n: &mut usize| Box::new(go(t, map, n));
    match e {
        Term::Var(x) => map.get(x).cloned().unwrap_or_else(|| e.clone()),
        Term::True | Term::False | Term::Int(_) | Term::Loc(_) | Term::Hole => e.clone(),
        Term::Lam(x, t, body) => {
            let (y, inner) = under(x, map, n);
            Term::Lam(y, t.clone(), Box::new(go(body, &inner, n)))
        }
        Term::Case { scrutinee, left_var, left, right_var, right } => {
            let s = b(scrutinee, n);
            let (lv, li) = under(left_var, map, n);
            let l = Box::new(go(left, &li, n));
            let (rv, ri) = under(right_var, map, n);
            let r = Box::new(go(right, &ri, n));
            Term::Case { scrutinee: s, left_var: lv, left: l, right_var: rv, right: r }
        }
        Term::Unpack(a, x, packed, body) => {
            let p = b(packed, n);
            let (y, inner) = under(x, map, n);
            Term::Unpack(a.clone(), y, p, Box::new(go(body, &inner, n)))
        }
        Term::If(c, t, f) => Term::If(b(c, n), b(t, n), b(f, n)),
        Term::App(f, a) => Term::App(b(f, n), b(a, n)),
        Term::Pair(l, r) => Term::Pair(b(l, n), b(r, n)),
        Term::Fst(a) => Term::Fst(b(a, n)),
        Term::Snd(a) => Term::Snd(b(a, n)),
        Term::Inl(a, t) => Term::Inl(b(a, n), t.clone()),
        Term::Inr(a, t) => Term::Inr(b(a, n), t.clone()),
        Term::TyLam(a, body) => Term::TyLam(a.clone(), b(body, n)),
        Term::TyApp(f, t) => Term::TyApp(b(f, n), t.clone()),
        Term::Pack(w, p, t) => Term::Pack(w.clone(), b(p, n), t.clone()),
        Term::Fold(a, t) => Term::Fold(b(a, n), t.clone()),
        Term::Unfold(a) => Term::Unfold(b(a, n)),
        Term::Alloc(a) => Term::Alloc(b(a, n)),
        Term::Assign(l, r) => Term::Assign(b(l, n), b(r, n)),
        Term::Deref(a) => Term::Deref(b(a, n)),
        Term::IntEq(l, r) => Term::IntEq(b(l, n), b(r, n)),
        Term::Not(a) => Term::Not(b(a, n)),
    }
}

// ---------------------------------------------------------------------------
// Brute-force grammar unrolling.

/// What the enumerator is asked for: terms, or contexts around `hole`.
#[derive(Clone)]
pub struct Request {
    pub level: LangLevel,
    pub base: Vec<Type>,
    pub hole: Option<HoleTyping>,
    pub ty: Type,
}

impl Request {
    pub fn enumerator(&self) -> Enumerator {
        let en = Enumerator::new(self.level, &self.base);
        match &self.hole {
            Some(h) => en.with_hole(h.clone()),
            None => en,
        }
    }
}

#[derive(Clone)]
struct Scope {
    delta: Vec<Name>,
    gamma: Vec<(Name, Type)>,
    /// Instantiated bodies of the polymorphic types in scope when each type
    /// variable was bound; a type abstraction's body may need them as
    /// annotations.
    opened: Vec<Type>,
}

impl Scope {
    fn bind(&self, x: Name, t: Type) -> Scope {
        let mut s = self.clone();
        s.gamma.push((x, t));
        s
    }
    fn bind_ty(&self, a: Name, known: &[Type]) -> Scope {
        let mut s = self.clone();
        let bodies: Vec<Type> = known
            .iter()
            .filter_map(|t| match t {
                Type::Forall(b, body) => Some(body.subst(b, &Type::Var(a.clone()))),
                _ => None,
            })
            .collect();
        s.opened.extend(subterm_closure(&bodies));
        s.delta.push(a);
        s
    }
    fn ctx(&self) -> TermCtx {
        self.gamma.iter().cloned().collect()
    }
}

struct Unroller<'a> {
    req: &'a Request,
    en: Enumerator,
    ints: Vec<i64>,
}

fn in_set(t: &Type, set: &[Type]) -> bool {
    set.iter().any(|u| u.alpha_eq(t))
}

impl Unroller<'_> {
    fn universe(&self, s: &Scope) -> Vec<Type> {
        self.en.universe(&s.delta, &s.gamma)
    }

    fn annotations(&self, s: &Scope) -> Vec<Type> {
        let mut out = self.universe(s);
        for t in &s.opened {
            if !in_set(t, &out) {
                out.push(t.clone());
            }
        }
        out
    }

    /// Every raw term of exactly `size` whose variables are in scope, with
    /// annotations drawn from the scope's universe. Nothing is typechecked.
    fn raw(&self, s: &Scope, size: usize, hole: bool) -> Vec<Term> {
        let mut out = Vec::new();
        if size == 0 {
            return out;
        }
        let u = self.annotations(s);
        let depth = s.gamma.len() + s.delta.len();
        let x = Name::from(format!("v{depth}"));
        let a = Name::from(format!("t{depth}"));
        if size == 1 {
            if hole {
                out.push(Term::Hole);
            } else {
                out.extend(s.gamma.iter().map(|(x, _)| Term::Var(x.clone())));
                out.extend([Term::True, Term::False]);
                out.extend(self.ints.iter().map(|&n| Term::Int(n)));
            }
            return out;
        }
        let n = size - 1;
        // Unary forms.
        for c in self.raw(s, n, hole) {
            let bx = || Box::new(c.clone());
            out.extend([
                Term::Not(bx()),
                Term::Fst(bx()),
                Term::Snd(bx()),
                Term::Unfold(bx()),
                Term::Alloc(bx()),
                Term::Deref(bx()),
            ]);
            for t in &u {
                out.push(Term::TyApp(bx(), t.clone()));
                out.push(Term::Fold(bx(), t.clone()));
                for w in &u {
                    out.push(Term::Pack(w.clone(), bx(), t.clone()));
                }
            }
            for t in &u {
                for t2 in &u {
                    let sum = Type::sum(t.clone(), t2.clone());
                    out.push(Term::Inl(bx(), sum.clone()));
                    out.push(Term::Inr(bx(), sum));
                }
            }
        }
        // TyLam bodies see the new type variable.
        for c in self.raw(&s.bind_ty(a.clone(), &u), n, hole) {
            out.push(Term::TyLam(a.clone(), Box::new(c)));
        }
        for t in &u {
            for c in self.raw(&s.bind(x.clone(), t.clone()), n, hole) {
                out.push(Term::Lam(x.clone(), t.clone(), Box::new(c)));
            }
        }
        // Binary forms.
        for (i, j) in splits(n, 2) {
            for hl in hole_spots(hole, 2) {
                let ls = self.raw(s, i, hl[0]);
                let rs = self.raw(s, j, hl[1]);
                for l in &ls {
                    for r in &rs {
                        let (bl, br) = (Box::new(l.clone()), Box::new(r.clone()));
                        out.push(Term::App(bl.clone(), br.clone()));
                        out.push(Term::Pair(bl.clone(), br.clone()));
                        out.push(Term::Assign(bl.clone(), br.clone()));
                        out.push(Term::IntEq(bl, br));
                    }
                }
                // unpack <a, x> = l in r, with x at every opened body type.
                let sa = s.bind_ty(a.clone(), &[]);
                for e in &u {
                    let Type::Exists(b, body) = e else { continue };
                    let opened = body.subst(b, &Type::Var(a.clone()));
                    let bodies = self.raw(&sa.bind(x.clone(), opened.clone()), j, hl[1]);
                    for l in &ls {
                        for r in &bodies {
                            out.push(Term::Unpack(a.clone(), x.clone(), Box::new(l.clone()), Box::new(r.clone())));
                        }
                    }
                }
            }
        }
        // Ternary forms.
        for parts in splits3(n) {
            for hl in hole_spots(hole, 3) {
                let cs = self.raw(s, parts[0], hl[0]);
                let ts = self.raw(s, parts[1], hl[1]);
                let fs = self.raw(s, parts[2], hl[2]);
                for t in &ts {
                    for f in &fs {
                        for c in &cs {
                            out.push(Term::If(Box::new(c.clone()), Box::new(t.clone()), Box::new(f.clone())));
                        }
                    }
                }
                for l in &u {
                    for r in &u {
                        let ts = self.raw(&s.bind(x.clone(), l.clone()), parts[1], hl[1]);
                        let fs = self.raw(&s.bind(x.clone(), r.clone()), parts[2], hl[2]);
                        for t in &ts {
                            for f in &fs {
                                for c in &cs {
                                    out.push(Term::case(c.clone(), x.clone(), t.clone(), x.clone(), f.clone()));
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn type_of(&self, s: &Scope, e: &Term) -> Option<Type> {
        let hole = self.req.hole.clone().unwrap_or(HoleTyping { delta: vec![], gamma: TermCtx::new(), ty: Type::Bool });
        typecheck_with_hole(&StoreTyping::new(), &s.delta, &s.ctx(), e, &hole).ok()
    }

    /// Elimination forms only at universe types, with their intermediate
    /// types in the universe too.
    fn restricted(&self, s: &Scope, e: &Term) -> bool {
        let Some(ty) = self.type_of(s, e) else { return false };
        let u = self.universe(s);
        let ok = match e {
            Term::If(..) | Term::Deref(_) | Term::Assign(..) => in_set(&ty, &u),
            Term::App(_, arg) => in_set(&ty, &u) && self.type_of(s, arg).is_some_and(|t| in_set(&t, &u)),
            Term::Fst(p) => {
                in_set(&ty, &u) && matches!(self.type_of(s, p), Some(Type::Prod(_, r)) if in_set(&r, &u))
            }
            Term::Snd(p) => {
                in_set(&ty, &u) && matches!(self.type_of(s, p), Some(Type::Prod(l, _)) if in_set(&l, &u))
            }
            Term::Case { scrutinee, .. } => {
                in_set(&ty, &u)
                    && matches!(self.type_of(s, scrutinee), Some(Type::Sum(l, r)) if in_set(&l, &u) && in_set(&r, &u))
            }
            Term::Unpack(_, _, p, _) | Term::Unfold(p) => {
                in_set(&ty, &u) && self.type_of(s, p).is_some_and(|t| in_set(&t, &u))
            }
            Term::TyApp(f, t) => {
                in_set(&ty, &u) && in_set(t, &u) && self.type_of(s, f).is_some_and(|t| in_set(&t, &u))
            }
            Term::Pack(w, ..) => in_set(w, &u),
            _ => true,
        };
        ok && self.children_restricted(s, e)
    }

    fn children_restricted(&self, s: &Scope, e: &Term) -> bool {
        match e {
            Term::Lam(x, t, body) => self.restricted(&s.bind(x.clone(), t.clone()), body),
            Term::TyLam(a, body) => self.restricted(&s.bind_ty(a.clone(), &[]), body),
            Term::Case { scrutinee, left_var, left, right_var, right } => {
                let Some(Type::Sum(l, r)) = self.type_of(s, scrutinee) else { return false };
                self.restricted(s, scrutinee)
                    && self.restricted(&s.bind(left_var.clone(), *l), left)
                    && self.restricted(&s.bind(right_var.clone(), *r), right)
            }
            Term::Unpack(a, x, p, body) => {
                let Some(Type::Exists(b, inner)) = self.type_of(s, p) else { return false };
                let opened = inner.subst(&b, &Type::Var(a.clone()));
                self.restricted(s, p) && self.restricted(&s.bind_ty(a.clone(), &[]).bind(x.clone(), opened), body)
            }
            _ => e.children().into_iter().all(|c| self.restricted(s, c)),
        }
    }
}

fn splits(n: usize, k: usize) -> Vec<(usize, usize)> {
    assert_eq!(k, 2);
    (1..n).map(|i| (i, n - i)).collect()
}

fn splits3(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for i in 1..n {
        for j in 1..n - i {
            out.push([i, j, n - i - j]);
        }
    }
    out
}

fn hole_spots(hole: bool, k: usize) -> Vec<Vec<bool>> {
    if !hole {
        return vec![vec![false; k]];
    }
    (0..k).map(|h| (0..k).map(|i| i == h).collect()).collect()
}

/// The terms (or contexts) of exactly `size` that a grammar unrolling
/// accepts, in canonical form.
pub fn brute_force(req: &Request, size: usize) -> HashSet<Term> {
    let u = Unroller { req, en: req.enumerator(), ints: vec![0, 1] };
    let root = Scope { delta: vec![], gamma: vec![], opened: vec![] };
    let hole = req.hole.is_some();
    u.raw(&root, size, hole)
        .into_iter()
        .filter(|e| req.level.check(e).is_ok())
        .filter(|e| !hole || e.hole_count() == 1)
        .filter(|e| u.type_of(&root, e).is_some_and(|t| t.alpha_eq(&req.ty)))
        .filter(|e| u.restricted(&root, e))
        .map(|e| e.canonical())
        .collect()
}

/// The enumerator's answer, canonicalized, plus the raw count (to detect
/// duplicates).
pub fn enumerated(req: &Request, size: usize) -> (HashSet<Term>, usize) {
    let mut en = req.enumerator();
    let list = if req.hole.is_some() { en.contexts(&[], &[], &req.ty, size) } else { en.terms(&[], &[], &req.ty, size) };
    (list.iter().map(Term::canonical).collect(), list.len())
}

/// The scenarios the enumerator is cross-checked on.
pub fn enumerator_requests() -> Vec<(String, Request)> {
    let pkg = Type::exists("a", Type::prod(Type::var("a"), Type::arrow(Type::var("a"), Type::Bool)));
    let stlc = LangLevel::stlc();
    let mut out = Vec::new();
    for ty in [Type::Bool, Type::Int, Type::arrow(Type::Bool, Type::Bool), Type::prod(Type::Bool, Type::Int)] {
        out.push((
            format!("stlc terms : {ty}"),
            Request { level: stlc, base: vec![ty.clone()], hole: None, ty },
        ));
    }
    let full = LangLevel::full();
    let mu = Type::mu("a", Type::arrow(Type::var("a"), Type::Bool));
    let some = Type::exists("a", Type::var("a"));
    let id = Type::forall("a", Type::arrow(Type::var("a"), Type::var("a")));
    for ty in [Type::Bool, some, id, Type::reference(Type::Bool), mu] {
        out.push((
            format!("full terms : {ty}"),
            Request { level: full, base: vec![ty.clone()], hole: None, ty },
        ));
    }
    let ex = stlc.with(Feature::SystemF).with(Feature::Existential);
    out.push((
        format!("contexts [{pkg}] : Bool"),
        Request {
            level: ex,
            base: vec![Type::Bool],
            hole: Some(HoleTyping { delta: vec![], gamma: TermCtx::new(), ty: pkg }),
            ty: Type::Bool,
        },
    ));
    out.push((
        "contexts [Bool -> Bool] : Bool".to_string(),
        Request {
            level: stlc,
            base: vec![Type::Bool],
            hole: Some(HoleTyping { delta: vec![], gamma: TermCtx::new(), ty: Type::arrow(Type::Bool, Type::Bool) }),
            ty: Type::Bool,
        },
    ));
    out
}

/// Compares the enumerator with the unrolling for every scenario and size
/// up to `max`. Returns the scenarios that disagree.
pub fn enumerator_mismatches(max: usize) -> Vec<String> {
    let mut bad = Vec::new();
    for (name, req) in enumerator_requests() {
        for size in 1..=max {
            let oracle = brute_force(&req, size);
            let (mine, raw) = enumerated(&req, size);
            if mine != oracle || raw != mine.len() {
                let missing: Vec<String> = oracle.difference(&mine).take(3).map(|t| t.to_string()).collect();
                let extra: Vec<String> = mine.difference(&oracle).take(3).map(|t| t.to_string()).collect();
                bad.push(format!(
                    "{name} size {size}: oracle {} enumerated {} (raw {raw}) missing {missing:?} extra {extra:?}",
                    oracle.len(),
                    mine.len()
                ));
            }
        }
    }
    bad
}
