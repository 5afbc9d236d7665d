//! Abstract syntax for terms and types across every language level.
//!
//! Binders use source names. Substitution freshens a binder only when it
//! would capture a free name of the substituted term, so closed values
//! (the common case in the semantic checks) are substituted without any
//! renaming. Alpha-equivalence is decided by comparing canonical forms in
//! which each bound name is replaced by its binder depth.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// A term or type variable name.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl From<String> for Name {
    fn from(s: String) -> Self {
        Name(Arc::from(s))
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A heap location. Never produced by the parser.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Loc(pub u64);

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#l{}", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Type {
    Bool,
    Int,
    Arrow(Box<Type>, Box<Type>),
    Prod(Box<Type>, Box<Type>),
    Sum(Box<Type>, Box<Type>),
    Forall(Name, Box<Type>),
    Exists(Name, Box<Type>),
    Mu(Name, Box<Type>),
    Ref(Box<Type>),
    Var(Name),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Term {
    Var(Name),
    True,
    False,
    Int(i64),
    If(Box<Term>, Box<Term>, Box<Term>),
    Lam(Name, Type, Box<Term>),
    App(Box<Term>, Box<Term>),
    Pair(Box<Term>, Box<Term>),
    Fst(Box<Term>),
    Snd(Box<Term>),
    /// Left injection annotated with the full sum type.
    Inl(Box<Term>, Type),
    /// Right injection annotated with the full sum type.
    Inr(Box<Term>, Type),
    Case {
        scrutinee: Box<Term>,
        left_var: Name,
        left: Box<Term>,
        right_var: Name,
        right: Box<Term>,
    },
    TyLam(Name, Box<Term>),
    TyApp(Box<Term>, Type),
    /// `pack <witness, payload> as annot` where `annot` is the existential type.
    Pack(Type, Box<Term>, Type),
    /// `unpack <tyvar, var> = packed in body`
    Unpack(Name, Name, Box<Term>, Box<Term>),
    /// Fold annotated with the recursive type.
    Fold(Box<Term>, Type),
    Unfold(Box<Term>),
    Alloc(Box<Term>),
    Assign(Box<Term>, Box<Term>),
    Deref(Box<Term>),
    Loc(Loc),
    IntEq(Box<Term>, Box<Term>),
    Not(Box<Term>),
    /// The hole of a program context. Only the equivalence module builds these.
    Hole,
}

/// Picks a name derived from `base` that is not in `avoid`.
pub fn fresh_name(base: &Name, avoid: &BTreeSet<Name>) -> Name {
    let stem = base.as_str().trim_end_matches(|c: char| c.is_ascii_digit() || c == '_');
    let stem = if stem.is_empty() { "v" } else { stem };
    (1u64..)
        .map(|i| Name::from(format!("{stem}_{i}")))
        .find(|n| !avoid.contains(n))
        .expect("unbounded name supply")
}

impl Type {
    pub fn arrow(a: Type, b: Type) -> Type {
        Type::Arrow(Box::new(a), Box::new(b))
    }

    pub fn prod(a: Type, b: Type) -> Type {
        Type::Prod(Box::new(a), Box::new(b))
    }

    pub fn sum(a: Type, b: Type) -> Type {
        Type::Sum(Box::new(a), Box::new(b))
    }

    pub fn forall(a: impl Into<Name>, body: Type) -> Type {
        Type::Forall(a.into(), Box::new(body))
    }

    pub fn exists(a: impl Into<Name>, body: Type) -> Type {
        Type::Exists(a.into(), Box::new(body))
    }

    pub fn mu(a: impl Into<Name>, body: Type) -> Type {
        Type::Mu(a.into(), Box::new(body))
    }

    pub fn reference(a: Type) -> Type {
        Type::Ref(Box::new(a))
    }

    pub fn var(a: impl Into<Name>) -> Type {
        Type::Var(a.into())
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Type::Bool | Type::Int => {}
            Type::Var(a) => {
                if !bound.contains(a) {
                    out.insert(a.clone());
                }
            }
            Type::Arrow(a, b) | Type::Prod(a, b) | Type::Sum(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Type::Ref(a) => a.collect_free(bound, out),
            Type::Forall(x, body) | Type::Exists(x, body) | Type::Mu(x, body) => {
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn mentions_var(&self, a: &Name) -> bool {
        self.free_vars().contains(a)
    }

    /// Capture-avoiding substitution `self[replacement/var]`.
    pub fn subst(&self, var: &Name, replacement: &Type) -> Type {
        let fv = replacement.free_vars();
        self.subst_with(var, replacement, &fv)
    }

    fn subst_with(&self, var: &Name, rep: &Type, rep_fv: &BTreeSet<Name>) -> Type {
        match self {
            Type::Bool | Type::Int => self.clone(),
            Type::Var(a) => {
                if a == var {
                    rep.clone()
                } else {
                    self.clone()
                }
            }
            Type::Arrow(a, b) => Type::arrow(a.subst_with(var, rep, rep_fv), b.subst_with(var, rep, rep_fv)),
            Type::Prod(a, b) => Type::prod(a.subst_with(var, rep, rep_fv), b.subst_with(var, rep, rep_fv)),
            Type::Sum(a, b) => Type::sum(a.subst_with(var, rep, rep_fv), b.subst_with(var, rep, rep_fv)),
            Type::Ref(a) => Type::reference(a.subst_with(var, rep, rep_fv)),
            Type::Forall(x, body) | Type::Exists(x, body) | Type::Mu(x, body) => {
                if x == var {
                    return self.clone();
                }
                let (x, body) = if rep_fv.contains(x) {
                    let mut avoid = rep_fv.clone();
                    avoid.extend(body.free_vars());
                    avoid.insert(var.clone());
                    let fresh = fresh_name(x, &avoid);
                    let renamed = body.subst(x, &Type::Var(fresh.clone()));
                    (fresh, renamed)
                } else {
                    (x.clone(), (**body).clone())
                };
                let body = Box::new(body.subst_with(var, rep, rep_fv));
                match self {
                    Type::Forall(..) => Type::Forall(x, body),
                    Type::Exists(..) => Type::Exists(x, body),
                    _ => Type::Mu(x, body),
                }
            }
        }
    }

    /// The one-level unfolding `body[mu a. body / a]` of a recursive type.
    pub fn unfold_mu(&self) -> Option<Type> {
        match self {
            Type::Mu(a, body) => Some(body.subst(a, self)),
            _ => None,
        }
    }

    /// Replaces every bound name with a depth-indexed name that cannot clash
    /// with source identifiers.
    pub fn canonical(&self) -> Type {
        self.canon(&mut Vec::new())
    }

    fn canon(&self, env: &mut Vec<Name>) -> Type {
        match self {
            Type::Bool | Type::Int => self.clone(),
            Type::Var(a) => match env.iter().rposition(|b| b == a) {
                Some(i) => Type::Var(bound_type_name(i)),
                None => self.clone(),
            },
            Type::Arrow(a, b) => Type::arrow(a.canon(env), b.canon(env)),
            Type::Prod(a, b) => Type::prod(a.canon(env), b.canon(env)),
            Type::Sum(a, b) => Type::sum(a.canon(env), b.canon(env)),
            Type::Ref(a) => Type::reference(a.canon(env)),
            Type::Forall(x, body) | Type::Exists(x, body) | Type::Mu(x, body) => {
                let name = bound_type_name(env.len());
                env.push(x.clone());
                let body = Box::new(body.canon(env));
                env.pop();
                match self {
                    Type::Forall(..) => Type::Forall(name, body),
                    Type::Exists(..) => Type::Exists(name, body),
                    _ => Type::Mu(name, body),
                }
            }
        }
    }

    pub fn alpha_eq(&self, other: &Type) -> bool {
        self == other || self.canonical() == other.canonical()
    }

    /// All syntactic subterms, outermost first.
    pub fn subterms(&self) -> Vec<Type> {
        let mut out = vec![self.clone()];
        match self {
            Type::Arrow(a, b) | Type::Prod(a, b) | Type::Sum(a, b) => {
                out.extend(a.subterms());
                out.extend(b.subterms());
            }
            Type::Ref(a) => out.extend(a.subterms()),
            Type::Forall(_, b) | Type::Exists(_, b) | Type::Mu(_, b) => out.extend(b.subterms()),
            Type::Bool | Type::Int | Type::Var(_) => {}
        }
        out
    }

    pub fn size(&self) -> usize {
        match self {
            Type::Bool | Type::Int | Type::Var(_) => 1,
            Type::Arrow(a, b) | Type::Prod(a, b) | Type::Sum(a, b) => 1 + a.size() + b.size(),
            Type::Ref(a) => 1 + a.size(),
            Type::Forall(_, b) | Type::Exists(_, b) | Type::Mu(_, b) => 1 + b.size(),
        }
    }

    pub fn features(&self) -> LangLevel {
        let mut level = LangLevel::empty();
        self.add_features(&mut level);
        level
    }

    fn add_features(&self, level: &mut LangLevel) {
        match self {
            Type::Bool => level.insert(Feature::Base),
            Type::Int => level.insert(Feature::Int),
            Type::Arrow(a, b) => {
                level.insert(Feature::Base);
                a.add_features(level);
                b.add_features(level);
            }
            Type::Prod(a, b) => {
                level.insert(Feature::Pairs);
                a.add_features(level);
                b.add_features(level);
            }
            Type::Sum(a, b) => {
                level.insert(Feature::Sums);
                a.add_features(level);
                b.add_features(level);
            }
            Type::Ref(a) => {
                level.insert(Feature::Ref);
                a.add_features(level);
            }
            Type::Forall(_, b) => {
                level.insert(Feature::SystemF);
                b.add_features(level);
            }
            Type::Exists(_, b) => {
                level.insert(Feature::Existential);
                b.add_features(level);
            }
            Type::Mu(_, b) => {
                level.insert(Feature::Mu);
                b.add_features(level);
            }
            // A type variable is licensed by any of the binders that introduce one.
            Type::Var(_) => {}
        }
    }
}

fn bound_type_name(depth: usize) -> Name {
    Name::from(format!("%t{depth}"))
}

fn bound_term_name(depth: usize) -> Name {
    Name::from(format!("%x{depth}"))
}

impl Term {
    pub fn var(x: impl Into<Name>) -> Term {
        Term::Var(x.into())
    }

    pub fn lam(x: impl Into<Name>, ty: Type, body: Term) -> Term {
        Term::Lam(x.into(), ty, Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn if_(c: Term, t: Term, e: Term) -> Term {
        Term::If(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }

    pub fn fst(a: Term) -> Term {
        Term::Fst(Box::new(a))
    }

    pub fn snd(a: Term) -> Term {
        Term::Snd(Box::new(a))
    }

    pub fn inl(a: Term, sum: Type) -> Term {
        Term::Inl(Box::new(a), sum)
    }

    pub fn inr(a: Term, sum: Type) -> Term {
        Term::Inr(Box::new(a), sum)
    }

    pub fn case(scrutinee: Term, left_var: impl Into<Name>, left: Term, right_var: impl Into<Name>, right: Term) -> Term {
        Term::Case {
            scrutinee: Box::new(scrutinee),
            left_var: left_var.into(),
            left: Box::new(left),
            right_var: right_var.into(),
            right: Box::new(right),
        }
    }

    pub fn ty_lam(a: impl Into<Name>, body: Term) -> Term {
        Term::TyLam(a.into(), Box::new(body))
    }

    pub fn ty_app(e: Term, ty: Type) -> Term {
        Term::TyApp(Box::new(e), ty)
    }

    pub fn pack(witness: Type, payload: Term, annot: Type) -> Term {
        Term::Pack(witness, Box::new(payload), annot)
    }

    pub fn unpack(a: impl Into<Name>, x: impl Into<Name>, packed: Term, body: Term) -> Term {
        Term::Unpack(a.into(), x.into(), Box::new(packed), Box::new(body))
    }

    pub fn fold(e: Term, annot: Type) -> Term {
        Term::Fold(Box::new(e), annot)
    }

    pub fn unfold(e: Term) -> Term {
        Term::Unfold(Box::new(e))
    }

    pub fn alloc(e: Term) -> Term {
        Term::Alloc(Box::new(e))
    }

    pub fn assign(l: Term, r: Term) -> Term {
        Term::Assign(Box::new(l), Box::new(r))
    }

    pub fn deref(e: Term) -> Term {
        Term::Deref(Box::new(e))
    }

    pub fn int_eq(a: Term, b: Term) -> Term {
        Term::IntEq(Box::new(a), Box::new(b))
    }

    pub fn not(a: Term) -> Term {
        Term::Not(Box::new(a))
    }

    pub fn bool(b: bool) -> Term {
        if b {
            Term::True
        } else {
            Term::False
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Term::True => Some(true),
            Term::False => Some(false),
            _ => None,
        }
    }

    pub fn is_value(&self) -> bool {
        match self {
            Term::True | Term::False | Term::Int(_) | Term::Lam(..) | Term::TyLam(..) | Term::Loc(_) => true,
            Term::Pair(a, b) => a.is_value() && b.is_value(),
            Term::Inl(v, _) | Term::Inr(v, _) | Term::Fold(v, _) => v.is_value(),
            Term::Pack(_, v, _) => v.is_value(),
            _ => false,
        }
    }

    /// Immediate subterms, in the order the parser records their spans.
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Var(_) | Term::True | Term::False | Term::Int(_) | Term::Loc(_) | Term::Hole => vec![],
            Term::If(a, b, c) => vec![a, b, c],
            Term::Lam(_, _, b) | Term::TyLam(_, b) => vec![b],
            Term::App(a, b) | Term::Pair(a, b) | Term::Assign(a, b) | Term::IntEq(a, b) | Term::Unpack(_, _, a, b) => {
                vec![a, b]
            }
            Term::Fst(a)
            | Term::Snd(a)
            | Term::Inl(a, _)
            | Term::Inr(a, _)
            | Term::TyApp(a, _)
            | Term::Pack(_, a, _)
            | Term::Fold(a, _)
            | Term::Unfold(a)
            | Term::Alloc(a)
            | Term::Deref(a)
            | Term::Not(a) => vec![a],
            Term::Case { scrutinee, left, right, .. } => vec![scrutinee, left, right],
        }
    }

    /// Number of term constructors. Types are not counted; a hole counts one.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Term::size).sum::<usize>()
    }

    pub fn hole_count(&self) -> usize {
        match self {
            Term::Hole => 1,
            _ => self.children().into_iter().map(Term::hole_count).sum(),
        }
    }

    pub fn locations(&self) -> BTreeSet<Loc> {
        let mut out = BTreeSet::new();
        self.collect_locs(&mut out);
        out
    }

    fn collect_locs(&self, out: &mut BTreeSet<Loc>) {
        if let Term::Loc(l) = self {
            out.insert(*l);
        }
        for c in self.children() {
            c.collect_locs(out);
        }
    }

    /// Type annotations carried directly by this node.
    pub fn annotations(&self) -> Vec<&Type> {
        match self {
            Term::Lam(_, t, _) | Term::Inl(_, t) | Term::Inr(_, t) | Term::TyApp(_, t) | Term::Fold(_, t) => vec![t],
            Term::Pack(w, _, t) => vec![w, t],
            _ => vec![],
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free_vars(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_vars(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        let under = |x: &Name, body: &Term, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>| {
            bound.push(x.clone());
            body.collect_free_vars(bound, out);
            bound.pop();
        };
        match self {
            Term::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Term::Lam(x, _, body) => under(x, body, bound, out),
            Term::Case { scrutinee, left_var, left, right_var, right } => {
                scrutinee.collect_free_vars(bound, out);
                under(left_var, left, bound, out);
                under(right_var, right, bound, out);
            }
            Term::Unpack(_, x, packed, body) => {
                packed.collect_free_vars(bound, out);
                under(x, body, bound, out);
            }
            _ => {
                for c in self.children() {
                    c.collect_free_vars(bound, out);
                }
            }
        }
    }

    pub fn free_type_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free_type_vars(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_type_vars(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        for t in self.annotations() {
            for a in t.free_vars() {
                if !bound.contains(&a) {
                    out.insert(a);
                }
            }
        }
        match self {
            Term::TyLam(a, body) => {
                bound.push(a.clone());
                body.collect_free_type_vars(bound, out);
                bound.pop();
            }
            Term::Unpack(a, _, packed, body) => {
                packed.collect_free_type_vars(bound, out);
                bound.push(a.clone());
                body.collect_free_type_vars(bound, out);
                bound.pop();
            }
            _ => {
                for c in self.children() {
                    c.collect_free_type_vars(bound, out);
                }
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty() && self.free_type_vars().is_empty()
    }

    /// Capture-avoiding substitution `self[value/var]`.
    pub fn subst(&self, var: &Name, value: &Term) -> Term {
        let fv = value.free_vars();
        let ftv = value.free_type_vars();
        self.subst_with(var, value, &fv, &ftv)
    }

    fn subst_with(&self, var: &Name, value: &Term, fv: &BTreeSet<Name>, ftv: &BTreeSet<Name>) -> Term {
        let go = |t: &Term| Box::new(t.subst_with(var, value, fv, ftv));
        // Substitutes under a term binder, freshening it if it would capture.
        let under = |x: &Name, body: &Term| -> (Name, Box<Term>) {
            if x == var {
                return (x.clone(), Box::new(body.clone()));
            }
            if fv.contains(x) {
                let mut avoid = fv.clone();
                avoid.extend(body.free_vars());
                avoid.insert(var.clone());
                let fresh = fresh_name(x, &avoid);
                let renamed = body.subst(x, &Term::Var(fresh.clone()));
                (fresh, Box::new(renamed.subst_with(var, value, fv, ftv)))
            } else {
                (x.clone(), Box::new(body.subst_with(var, value, fv, ftv)))
            }
        };
        // Freshens a type binder that would capture a free type variable of `value`.
        let under_ty = |a: &Name, body: &Term| -> (Name, Term) {
            if ftv.contains(a) {
                let mut avoid = ftv.clone();
                avoid.extend(body.free_type_vars());
                let fresh = fresh_name(a, &avoid);
                (fresh.clone(), body.subst_type(a, &Type::Var(fresh)))
            } else {
                (a.clone(), body.clone())
            }
        };
        match self {
            Term::Var(x) => {
                if x == var {
                    value.clone()
                } else {
                    self.clone()
                }
            }
            Term::True | Term::False | Term::Int(_) | Term::Loc(_) | Term::Hole => self.clone(),
            Term::If(a, b, c) => Term::If(go(a), go(b), go(c)),
            Term::Lam(x, t, body) => {
                let (x, body) = under(x, body);
                Term::Lam(x, t.clone(), body)
            }
            Term::App(a, b) => Term::App(go(a), go(b)),
            Term::Pair(a, b) => Term::Pair(go(a), go(b)),
            Term::Fst(a) => Term::Fst(go(a)),
            Term::Snd(a) => Term::Snd(go(a)),
            Term::Inl(a, t) => Term::Inl(go(a), t.clone()),
            Term::Inr(a, t) => Term::Inr(go(a), t.clone()),
            Term::Case { scrutinee, left_var, left, right_var, right } => {
                let (left_var, left) = under(left_var, left);
                let (right_var, right) = under(right_var, right);
                Term::Case { scrutinee: go(scrutinee), left_var, left, right_var, right }
            }
            Term::TyLam(a, body) => {
                let (a, body) = under_ty(a, body);
                Term::TyLam(a, go(&body))
            }
            Term::TyApp(a, t) => Term::TyApp(go(a), t.clone()),
            Term::Pack(w, a, t) => Term::Pack(w.clone(), go(a), t.clone()),
            Term::Unpack(a, x, packed, body) => {
                let (a, body) = under_ty(a, body);
                let (x, body) = under(x, &body);
                Term::Unpack(a, x, go(packed), body)
            }
            Term::Fold(a, t) => Term::Fold(go(a), t.clone()),
            Term::Unfold(a) => Term::Unfold(go(a)),
            Term::Alloc(a) => Term::Alloc(go(a)),
            Term::Assign(a, b) => Term::Assign(go(a), go(b)),
            Term::Deref(a) => Term::Deref(go(a)),
            Term::IntEq(a, b) => Term::IntEq(go(a), go(b)),
            Term::Not(a) => Term::Not(go(a)),
        }
    }

    /// Capture-avoiding substitution of a type for a type variable, reaching
    /// every annotation in the term.
    pub fn subst_type(&self, var: &Name, ty: &Type) -> Term {
        let fv = ty.free_vars();
        self.subst_type_with(var, ty, &fv)
    }

    fn subst_type_with(&self, var: &Name, ty: &Type, fv: &BTreeSet<Name>) -> Term {
        let go = |t: &Term| Box::new(t.subst_type_with(var, ty, fv));
        let st = |t: &Type| t.subst_with(var, ty, fv);
        let under_ty = |a: &Name, body: &Term| -> Option<(Name, Term)> {
            if a == var {
                return None;
            }
            if fv.contains(a) {
                let mut avoid = fv.clone();
                avoid.extend(body.free_type_vars());
                avoid.insert(var.clone());
                let fresh = fresh_name(a, &avoid);
                Some((fresh.clone(), body.subst_type(a, &Type::Var(fresh))))
            } else {
                Some((a.clone(), body.clone()))
            }
        };
        match self {
            Term::Var(_) | Term::True | Term::False | Term::Int(_) | Term::Loc(_) | Term::Hole => self.clone(),
            Term::If(a, b, c) => Term::If(go(a), go(b), go(c)),
            Term::Lam(x, t, body) => Term::Lam(x.clone(), st(t), go(body)),
            Term::App(a, b) => Term::App(go(a), go(b)),
            Term::Pair(a, b) => Term::Pair(go(a), go(b)),
            Term::Fst(a) => Term::Fst(go(a)),
            Term::Snd(a) => Term::Snd(go(a)),
            Term::Inl(a, t) => Term::Inl(go(a), st(t)),
            Term::Inr(a, t) => Term::Inr(go(a), st(t)),
            Term::Case { scrutinee, left_var, left, right_var, right } => Term::Case {
                scrutinee: go(scrutinee),
                left_var: left_var.clone(),
                left: go(left),
                right_var: right_var.clone(),
                right: go(right),
            },
            Term::TyLam(a, body) => match under_ty(a, body) {
                None => self.clone(),
                Some((a, body)) => Term::TyLam(a, go(&body)),
            },
            Term::TyApp(a, t) => Term::TyApp(go(a), st(t)),
            Term::Pack(w, a, t) => Term::Pack(st(w), go(a), st(t)),
            Term::Unpack(a, x, packed, body) => match under_ty(a, body) {
                None => Term::Unpack(a.clone(), x.clone(), go(packed), body.clone()),
                Some((a, body)) => Term::Unpack(a, x.clone(), go(packed), go(&body)),
            },
            Term::Fold(a, t) => Term::Fold(go(a), st(t)),
            Term::Unfold(a) => Term::Unfold(go(a)),
            Term::Alloc(a) => Term::Alloc(go(a)),
            Term::Assign(a, b) => Term::Assign(go(a), go(b)),
            Term::Deref(a) => Term::Deref(go(a)),
            Term::IntEq(a, b) => Term::IntEq(go(a), go(b)),
            Term::Not(a) => Term::Not(go(a)),
        }
    }

    /// Replaces the single hole with `e`, verbatim. Binders above the hole
    /// capture free variables of `e`.
    pub fn fill_hole(&self, e: &Term) -> Term {
        match self {
            Term::Hole => e.clone(),
            _ => self.map_children(|c| c.fill_hole(e)),
        }
    }

    /// Rebuilds this node with each immediate subterm mapped through `f`.
    pub fn map_children(&self, mut f: impl FnMut(&Term) -> Term) -> Term {
        let mut g = |t: &Term| Box::new(f(t));
        match self {
            Term::Var(_) | Term::True | Term::False | Term::Int(_) | Term::Loc(_) | Term::Hole => self.clone(),
            Term::If(a, b, c) => {
                let a = g(a);
                let b = g(b);
                Term::If(a, b, g(c))
            }
            Term::Lam(x, t, body) => Term::Lam(x.clone(), t.clone(), g(body)),
            Term::App(a, b) => {
                let a = g(a);
                Term::App(a, g(b))
            }
            Term::Pair(a, b) => {
                let a = g(a);
                Term::Pair(a, g(b))
            }
            Term::Fst(a) => Term::Fst(g(a)),
            Term::Snd(a) => Term::Snd(g(a)),
            Term::Inl(a, t) => Term::Inl(g(a), t.clone()),
            Term::Inr(a, t) => Term::Inr(g(a), t.clone()),
            Term::Case { scrutinee, left_var, left, right_var, right } => {
                let scrutinee = g(scrutinee);
                let left = g(left);
                Term::Case { scrutinee, left_var: left_var.clone(), left, right_var: right_var.clone(), right: g(right) }
            }
            Term::TyLam(a, body) => Term::TyLam(a.clone(), g(body)),
            Term::TyApp(a, t) => Term::TyApp(g(a), t.clone()),
            Term::Pack(w, a, t) => Term::Pack(w.clone(), g(a), t.clone()),
            Term::Unpack(a, x, packed, body) => {
                let packed = g(packed);
                Term::Unpack(a.clone(), x.clone(), packed, g(body))
            }
            Term::Fold(a, t) => Term::Fold(g(a), t.clone()),
            Term::Unfold(a) => Term::Unfold(g(a)),
            Term::Alloc(a) => Term::Alloc(g(a)),
            Term::Assign(a, b) => {
                let a = g(a);
                Term::Assign(a, g(b))
            }
            Term::Deref(a) => Term::Deref(g(a)),
            Term::IntEq(a, b) => {
                let a = g(a);
                Term::IntEq(a, g(b))
            }
            Term::Not(a) => Term::Not(g(a)),
        }
    }

    /// Applies `f` to every location node.
    pub fn map_locs(&self, f: &impl Fn(Loc) -> Loc) -> Term {
        match self {
            Term::Loc(l) => Term::Loc(f(*l)),
            _ => self.map_children(|c| c.map_locs(f)),
        }
    }

    pub fn canonical(&self) -> Term {
        self.canon(&mut Vec::new(), &mut Vec::new())
    }

    fn canon(&self, terms: &mut Vec<Name>, types: &mut Vec<Name>) -> Term {
        let canon_ty = |t: &Type, types: &mut Vec<Name>| t.canon(types);
        match self {
            Term::Var(x) => match terms.iter().rposition(|y| y == x) {
                Some(i) => Term::Var(bound_term_name(i)),
                None => self.clone(),
            },
            Term::Lam(x, t, body) => {
                let t = canon_ty(t, types);
                let name = bound_term_name(terms.len());
                terms.push(x.clone());
                let body = body.canon(terms, types);
                terms.pop();
                Term::Lam(name, t, Box::new(body))
            }
            Term::Case { scrutinee, left_var, left, right_var, right } => {
                let scrutinee = Box::new(scrutinee.canon(terms, types));
                let name = bound_term_name(terms.len());
                terms.push(left_var.clone());
                let left = Box::new(left.canon(terms, types));
                terms.pop();
                terms.push(right_var.clone());
                let right = Box::new(right.canon(terms, types));
                terms.pop();
                Term::Case { scrutinee, left_var: name.clone(), left, right_var: name, right }
            }
            Term::TyLam(a, body) => {
                let name = bound_type_name(types.len());
                types.push(a.clone());
                let body = body.canon(terms, types);
                types.pop();
                Term::TyLam(name, Box::new(body))
            }
            Term::Unpack(a, x, packed, body) => {
                let packed = packed.canon(terms, types);
                let tname = bound_type_name(types.len());
                let xname = bound_term_name(terms.len());
                types.push(a.clone());
                terms.push(x.clone());
                let body = body.canon(terms, types);
                terms.pop();
                types.pop();
                Term::Unpack(tname, xname, Box::new(packed), Box::new(body))
            }
            Term::Inl(a, t) => Term::Inl(Box::new(a.canon(terms, types)), canon_ty(t, types)),
            Term::Inr(a, t) => Term::Inr(Box::new(a.canon(terms, types)), canon_ty(t, types)),
            Term::TyApp(a, t) => Term::TyApp(Box::new(a.canon(terms, types)), canon_ty(t, types)),
            Term::Pack(w, a, t) => {
                let w = canon_ty(w, types);
                let t = canon_ty(t, types);
                Term::Pack(w, Box::new(a.canon(terms, types)), t)
            }
            Term::Fold(a, t) => Term::Fold(Box::new(a.canon(terms, types)), canon_ty(t, types)),
            _ => self.map_children(|c| c.canon(terms, types)),
        }
    }

    pub fn alpha_eq(&self, other: &Term) -> bool {
        self == other || self.canonical() == other.canonical()
    }

    pub fn features(&self) -> LangLevel {
        let mut level = LangLevel::empty();
        self.add_features(&mut level);
        level
    }

    fn add_features(&self, level: &mut LangLevel) {
        let feature = match self {
            Term::Var(_) | Term::True | Term::False | Term::If(..) | Term::Lam(..) | Term::App(..) | Term::Not(_) | Term::Hole => {
                Feature::Base
            }
            Term::Int(_) | Term::IntEq(..) => Feature::Int,
            Term::Pair(..) | Term::Fst(_) | Term::Snd(_) => Feature::Pairs,
            Term::Inl(..) | Term::Inr(..) | Term::Case { .. } => Feature::Sums,
            Term::TyLam(..) | Term::TyApp(..) => Feature::SystemF,
            Term::Pack(..) | Term::Unpack(..) => Feature::Existential,
            Term::Fold(..) | Term::Unfold(_) => Feature::Mu,
            Term::Alloc(_) | Term::Assign(..) | Term::Deref(_) | Term::Loc(_) => Feature::Ref,
        };
        level.insert(feature);
        for t in self.annotations() {
            t.add_features(level);
        }
        for c in self.children() {
            c.add_features(level);
        }
    }
}

/// A language feature gating a group of constructors.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Feature {
    Base,
    Pairs,
    Sums,
    Int,
    SystemF,
    Existential,
    Mu,
    Ref,
}

impl Feature {
    pub const ALL: [Feature; 8] = [
        Feature::Base,
        Feature::Pairs,
        Feature::Sums,
        Feature::Int,
        Feature::SystemF,
        Feature::Existential,
        Feature::Mu,
        Feature::Ref,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Base => "base",
            Feature::Pairs => "pairs",
            Feature::Sums => "sums",
            Feature::Int => "int",
            Feature::SystemF => "systemF",
            Feature::Existential => "existential",
            Feature::Mu => "mu",
            Feature::Ref => "ref",
        }
    }

    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

/// A set of enabled features.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct LangLevel(u16);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LevelError {
    #[error("construct requires feature `{}` which the level does not enable", .0.name())]
    Disabled(Feature),
    #[error("unknown language level or feature `{0}`")]
    Unknown(String),
}

impl LangLevel {
    pub fn empty() -> Self {
        LangLevel(0)
    }

    pub fn full() -> Self {
        Self::of(&Feature::ALL)
    }

    pub fn of(features: &[Feature]) -> Self {
        let mut level = Self::empty();
        for f in features {
            level.insert(*f);
        }
        level
    }

    /// Booleans, functions, pairs, sums and integers.
    pub fn stlc() -> Self {
        Self::of(&[Feature::Base, Feature::Pairs, Feature::Sums, Feature::Int])
    }

    pub fn with(mut self, f: Feature) -> Self {
        self.insert(f);
        self
    }

    pub fn insert(&mut self, f: Feature) {
        self.0 |= f.bit();
    }

    pub fn has(&self, f: Feature) -> bool {
        self.0 & f.bit() != 0
    }

    pub fn contains(&self, other: &LangLevel) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn features(&self) -> Vec<Feature> {
        Feature::ALL.iter().copied().filter(|f| self.has(*f)).collect()
    }

    /// Accepts `e` iff every constructor and annotation in it is enabled.
    pub fn check(&self, e: &Term) -> Result<(), LevelError> {
        let used = e.features();
        match used.features().into_iter().find(|f| !self.has(*f)) {
            Some(f) => Err(LevelError::Disabled(f)),
            None => Ok(()),
        }
    }
}

impl fmt::Display for LangLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.features().into_iter().map(Feature::name).collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for LangLevel {
    type Err = LevelError;

    /// Named levels (`base`, `stlc`, `systemf`, `exists`, `mu`, `ref`, `full`)
    /// or a comma-separated feature list.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let named = match s.to_ascii_lowercase().as_str() {
            "base" => Some(LangLevel::of(&[Feature::Base])),
            "stlc" => Some(LangLevel::stlc()),
            "systemf" | "f" => Some(LangLevel::stlc().with(Feature::SystemF)),
            "exists" | "existential" => Some(LangLevel::stlc().with(Feature::SystemF).with(Feature::Existential)),
            "mu" => Some(LangLevel::stlc().with(Feature::Mu)),
            "ref" => Some(LangLevel::stlc().with(Feature::Ref)),
            "full" | "all" => Some(LangLevel::full()),
            _ => None,
        };
        if let Some(level) = named {
            return Ok(level);
        }
        let mut level = LangLevel::of(&[Feature::Base]);
        for part in s.split(',') {
            let part = part.trim();
            let f = Feature::ALL
                .iter()
                .copied()
                .find(|f| f.name().eq_ignore_ascii_case(part))
                .ok_or_else(|| LevelError::Unknown(part.to_string()))?;
            level.insert(f);
        }
        Ok(level)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id_bool() -> Term {
        Term::lam("x", Type::Bool, Term::var("x"))
    }

    #[test]
    fn subst_hits_variable() {
        assert_eq!(Term::var("x").subst(&"x".into(), &Term::True), Term::True);
    }

    #[test]
    fn subst_under_unrelated_binder() {
        let e = Term::lam("y", Type::Bool, Term::var("x"));
        assert_eq!(e.subst(&"x".into(), &Term::True), Term::lam("y", Type::Bool, Term::True));
    }

    #[test]
    fn subst_respects_shadowing() {
        let e = Term::lam("x", Type::Bool, Term::var("x"));
        assert_eq!(e.subst(&"x".into(), &Term::True), e);
    }

    #[test]
    fn subst_avoids_capture_of_open_values() {
        // (\y:Bool. x)[y/x] must not become \y. y
        let e = Term::lam("y", Type::Bool, Term::var("x"));
        let out = e.subst(&"x".into(), &Term::var("y"));
        match &out {
            Term::Lam(b, _, body) => {
                assert_ne!(b.as_str(), "y");
                assert_eq!(**body, Term::var("y"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn subst_type_simple_and_shadowed() {
        let a: Name = "a".into();
        let t = Type::arrow(Type::var("a"), Type::var("a"));
        assert_eq!(t.subst(&a, &Type::Bool), Type::arrow(Type::Bool, Type::Bool));
        let shadow = Type::forall("a", Type::var("a"));
        assert_eq!(shadow.subst(&a, &Type::Bool), shadow);
    }

    #[test]
    fn unfold_list_type() {
        // mu a. Bool + (Int * a)
        let body = Type::sum(Type::Bool, Type::prod(Type::Int, Type::var("a")));
        let mu = Type::mu("a", body);
        let expected = Type::sum(Type::Bool, Type::prod(Type::Int, mu.clone()));
        assert_eq!(mu.unfold_mu().unwrap(), expected);
    }

    #[test]
    fn subst_type_avoids_capture() {
        // (all b. a -> b)[b/a] renames the binder
        let t = Type::forall("b", Type::arrow(Type::var("a"), Type::var("b")));
        let out = t.subst(&"a".into(), &Type::var("b"));
        let expected = Type::forall("c", Type::arrow(Type::var("b"), Type::var("c")));
        assert!(out.alpha_eq(&expected), "{out:?}");
    }

    #[test]
    fn alpha_equivalence() {
        let a = Type::forall("a", Type::arrow(Type::var("a"), Type::var("a")));
        let b = Type::forall("b", Type::arrow(Type::var("b"), Type::var("b")));
        let c = Type::forall("a", Type::arrow(Type::var("a"), Type::Bool));
        assert!(a.alpha_eq(&b));
        assert!(!a.alpha_eq(&c));
        assert!(id_bool().alpha_eq(&Term::lam("y", Type::Bool, Term::var("y"))));
        assert!(!Type::var("a").alpha_eq(&Type::var("b")));
    }

    #[test]
    fn alpha_eq_distinguishes_binder_structure() {
        let k1 = Term::lam("x", Type::Bool, Term::lam("y", Type::Bool, Term::var("x")));
        let k2 = Term::lam("x", Type::Bool, Term::lam("y", Type::Bool, Term::var("y")));
        assert!(!k1.alpha_eq(&k2));
        let k3 = Term::lam("a", Type::Bool, Term::lam("b", Type::Bool, Term::var("a")));
        assert!(k1.alpha_eq(&k3));
    }

    #[test]
    fn free_type_vars() {
        let mu = Type::mu("a", Type::sum(Type::Bool, Type::prod(Type::Int, Type::var("a"))));
        assert!(mu.free_vars().is_empty());
        let open = Type::arrow(Type::var("a"), Type::var("b"));
        let fv: Vec<_> = open.free_vars().into_iter().map(|n| n.to_string()).collect();
        assert_eq!(fv, vec!["a", "b"]);
    }

    #[test]
    fn free_vars_of_unpack() {
        let body = Term::app(Term::snd(Term::var("p")), Term::fst(Term::var("p")));
        let e = Term::unpack("a", "p", Term::var("pkg"), body);
        let fv: Vec<_> = e.free_vars().into_iter().map(|n| n.to_string()).collect();
        assert_eq!(fv, vec!["pkg"]);
    }

    #[test]
    fn values() {
        assert!(Term::pair(Term::True, Term::Int(3)).is_value());
        assert!(!Term::pair(Term::True, Term::app(id_bool(), Term::True)).is_value());
        assert!(Term::fold(Term::True, Type::mu("a", Type::Bool)).is_value());
        assert!(Term::Loc(Loc(0)).is_value());
        assert!(!Term::var("x").is_value());
    }

    #[test]
    fn level_check() {
        let e = Term::pair(Term::True, Term::Int(1));
        assert!(LangLevel::stlc().check(&e).is_ok());
        assert_eq!(
            LangLevel::of(&[Feature::Base, Feature::Pairs]).check(&e),
            Err(LevelError::Disabled(Feature::Int))
        );
        assert!(LangLevel::stlc().check(&Term::alloc(Term::True)).is_err());
        assert_eq!("ref".parse::<LangLevel>().unwrap(), LangLevel::stlc().with(Feature::Ref));
        assert!("pairs,int".parse::<LangLevel>().unwrap().has(Feature::Int));
        assert!("bogus".parse::<LangLevel>().is_err());
    }

    #[test]
    fn hole_filling_captures() {
        let ctx = Term::lam("y", Type::Bool, Term::Hole);
        let filled = ctx.fill_hole(&Term::var("y"));
        assert_eq!(filled, Term::lam("y", Type::Bool, Term::var("y")));
        assert_eq!(ctx.size() - 1 + Term::var("y").size(), filled.size());
    }
}
