//! Algorithmic typechecker for `Σ; Δ; Γ ⊢ e : τ`.
//!
//! Every constructor has exactly one rule, so checking is syntax directed.
//! Type equality is α-equivalence. Locations are typed from the store
//! typing Σ, which lets preservation be tested on intermediate states.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::dynamics::Heap;
use crate::kernel::{fresh_name, Loc, Name, Term, Type};
use crate::surface::{SourceSpan, SpanTree};

/// Type variables in scope, in binding order.
pub type TypeCtx = Vec<Name>;
/// Term variables in scope. Extending with an existing name shadows it.
pub type TermCtx = BTreeMap<Name, Type>;
pub type StoreTyping = BTreeMap<Loc, Type>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeErrorKind {
    UnboundVar(Name),
    Mismatch { expected: Type, found: Type },
    /// The term's type has the wrong outer shape, e.g. applying a non-function.
    Shape { expected: &'static str, found: Type },
    IllFormedType(Type),
    ScopeEscape { var: Name, ty: Type },
    UnknownLocation(Loc),
    UnexpectedHole,
    HoleEnvironment(String),
}

impl fmt::Display for TypeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeErrorKind::UnboundVar(x) => write!(f, "unbound variable `{x}`"),
            TypeErrorKind::Mismatch { expected, found } => write!(f, "expected `{expected}`, found `{found}`"),
            TypeErrorKind::Shape { expected, found } => write!(f, "expected {expected}, found `{found}`"),
            TypeErrorKind::IllFormedType(t) => write!(f, "type `{t}` mentions unbound type variables"),
            TypeErrorKind::ScopeEscape { var, ty } => {
                write!(f, "type variable `{var}` escapes its scope in result type `{ty}`")
            }
            TypeErrorKind::UnknownLocation(l) => write!(f, "location {l} is not in the store typing"),
            TypeErrorKind::UnexpectedHole => write!(f, "hole outside of a program context"),
            TypeErrorKind::HoleEnvironment(why) => write!(f, "hole environment mismatch: {why}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{rule}: {kind}")]
pub struct TypeError {
    pub rule: &'static str,
    pub kind: TypeErrorKind,
    /// Child indices from the root to the failing subterm, see [`Term::children`].
    pub path: Vec<usize>,
}

impl TypeError {
    pub fn span(&self, spans: &SpanTree) -> SourceSpan {
        spans.resolve(&self.path)
    }
}

/// Typing of the hole when checking a program context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HoleTyping {
    pub delta: TypeCtx,
    pub gamma: TermCtx,
    pub ty: Type,
}

pub fn wf_type(delta: &[Name], t: &Type) -> bool {
    t.free_vars().iter().all(|a| delta.contains(a))
}

pub fn wf_ctx(delta: &[Name], gamma: &TermCtx) -> bool {
    gamma.values().all(|t| wf_type(delta, t))
}

/// `dom(h) = dom(Σ)` and every stored value has its declared type.
pub fn heap_well_typed(h: &Heap, sigma: &StoreTyping) -> bool {
    h.len() == sigma.len()
        && h.iter().all(|(l, v)| match sigma.get(l) {
            Some(t) => typecheck(sigma, &[], &TermCtx::new(), v).is_ok_and(|found| found.alpha_eq(t)),
            None => false,
        })
}

pub fn typecheck(sigma: &StoreTyping, delta: &[Name], gamma: &TermCtx, e: &Term) -> Result<Type, TypeError> {
    Checker { sigma, hole: None, path: Vec::new() }.check(&mut delta.to_vec(), gamma, e)
}

pub fn typecheck_closed(e: &Term) -> Result<Type, TypeError> {
    typecheck(&StoreTyping::new(), &[], &TermCtx::new(), e)
}

/// Typechecks a context, treating its hole as an axiom described by `hole`.
pub fn typecheck_with_hole(
    sigma: &StoreTyping,
    delta: &[Name],
    gamma: &TermCtx,
    e: &Term,
    hole: &HoleTyping,
) -> Result<Type, TypeError> {
    Checker { sigma, hole: Some(hole), path: Vec::new() }.check(&mut delta.to_vec(), gamma, e)
}

struct Checker<'a> {
    sigma: &'a StoreTyping,
    hole: Option<&'a HoleTyping>,
    path: Vec<usize>,
}

impl Checker<'_> {
    fn err<T>(&self, rule: &'static str, kind: TypeErrorKind) -> Result<T, TypeError> {
        Err(TypeError { rule, kind, path: self.path.clone() })
    }

    fn child(&mut self, i: usize, delta: &mut TypeCtx, gamma: &TermCtx, e: &Term) -> Result<Type, TypeError> {
        self.path.push(i);
        let r = self.check(delta, gamma, e)?;
        self.path.pop();
        Ok(r)
    }

    fn wf(&self, rule: &'static str, delta: &[Name], t: &Type) -> Result<(), TypeError> {
        if wf_type(delta, t) {
            Ok(())
        } else {
            self.err(rule, TypeErrorKind::IllFormedType(t.clone()))
        }
    }

    fn same(&self, rule: &'static str, expected: &Type, found: &Type) -> Result<(), TypeError> {
        if expected.alpha_eq(found) {
            Ok(())
        } else {
            self.err(rule, TypeErrorKind::Mismatch { expected: expected.clone(), found: found.clone() })
        }
    }

    /// Chooses a binder name for a new type variable that does not clash with Δ.
    fn bind_tyvar(delta: &TypeCtx, gamma: &TermCtx, a: &Name) -> Name {
        if !delta.contains(a) {
            return a.clone();
        }
        let mut avoid: BTreeSet<Name> = delta.iter().cloned().collect();
        for t in gamma.values() {
            avoid.extend(t.free_vars());
        }
        fresh_name(a, &avoid)
    }

    fn check(&mut self, delta: &mut TypeCtx, gamma: &TermCtx, e: &Term) -> Result<Type, TypeError> {
        match e {
            Term::Var(x) => match gamma.get(x) {
                Some(t) => Ok(t.clone()),
                None => self.err("T-Var", TypeErrorKind::UnboundVar(x.clone())),
            },
            Term::True | Term::False => Ok(Type::Bool),
            Term::Int(_) => Ok(Type::Int),
            Term::If(c, t, f) => {
                let ct = self.child(0, delta, gamma, c)?;
                self.path.push(0);
                self.same("T-If", &Type::Bool, &ct)?;
                self.path.pop();
                let tt = self.child(1, delta, gamma, t)?;
                let ft = self.child(2, delta, gamma, f)?;
                self.same("T-If", &tt, &ft)?;
                Ok(tt)
            }
            Term::Lam(x, ty, body) => {
                self.wf("T-Abs", delta, ty)?;
                let mut inner = gamma.clone();
                inner.insert(x.clone(), ty.clone());
                let bt = self.child(0, delta, &inner, body)?;
                Ok(Type::arrow(ty.clone(), bt))
            }
            Term::App(f, a) => {
                let ft = self.child(0, delta, gamma, f)?;
                let at = self.child(1, delta, gamma, a)?;
                match ft {
                    Type::Arrow(dom, cod) => {
                        self.path.push(1);
                        self.same("T-App", &dom, &at)?;
                        self.path.pop();
                        Ok(*cod)
                    }
                    other => self.err("T-App", TypeErrorKind::Shape { expected: "a function type", found: other }),
                }
            }
            Term::Pair(a, b) => {
                let at = self.child(0, delta, gamma, a)?;
                let bt = self.child(1, delta, gamma, b)?;
                Ok(Type::prod(at, bt))
            }
            Term::Fst(a) | Term::Snd(a) => {
                let rule = if matches!(e, Term::Fst(_)) { "T-Fst" } else { "T-Snd" };
                match self.child(0, delta, gamma, a)? {
                    Type::Prod(l, r) => Ok(if matches!(e, Term::Fst(_)) { *l } else { *r }),
                    other => self.err(rule, TypeErrorKind::Shape { expected: "a product type", found: other }),
                }
            }
            Term::Inl(a, ann) | Term::Inr(a, ann) => {
                let left = matches!(e, Term::Inl(..));
                let rule = if left { "T-Inl" } else { "T-Inr" };
                self.wf(rule, delta, ann)?;
                let Type::Sum(l, r) = ann else {
                    return self.err(rule, TypeErrorKind::Shape { expected: "a sum type annotation", found: ann.clone() });
                };
                let at = self.child(0, delta, gamma, a)?;
                self.same(rule, if left { l } else { r }, &at)?;
                Ok(ann.clone())
            }
            Term::Case { scrutinee, left_var, left, right_var, right } => {
                let (l, r) = match self.child(0, delta, gamma, scrutinee)? {
                    Type::Sum(l, r) => (*l, *r),
                    other => return self.err("T-Case", TypeErrorKind::Shape { expected: "a sum type", found: other }),
                };
                let mut lg = gamma.clone();
                lg.insert(left_var.clone(), l);
                let lt = self.child(1, delta, &lg, left)?;
                let mut rg = gamma.clone();
                rg.insert(right_var.clone(), r);
                let rt = self.child(2, delta, &rg, right)?;
                self.same("T-Case", &lt, &rt)?;
                Ok(lt)
            }
            Term::TyLam(a, body) => {
                let b = Self::bind_tyvar(delta, gamma, a);
                let body = if &b == a { (**body).clone() } else { body.subst_type(a, &Type::Var(b.clone())) };
                delta.push(b.clone());
                let r = self.child(0, delta, gamma, &body);
                delta.pop();
                Ok(Type::Forall(b, Box::new(r?)))
            }
            Term::TyApp(f, ty) => {
                self.wf("T-TApp", delta, ty)?;
                match self.child(0, delta, gamma, f)? {
                    Type::Forall(a, body) => Ok(body.subst(&a, ty)),
                    other => self.err("T-TApp", TypeErrorKind::Shape { expected: "a universal type", found: other }),
                }
            }
            Term::Pack(witness, payload, ann) => {
                self.wf("T-Pack", delta, witness)?;
                self.wf("T-Pack", delta, ann)?;
                let Type::Exists(a, body) = ann else {
                    return self.err("T-Pack", TypeErrorKind::Shape { expected: "an existential annotation", found: ann.clone() });
                };
                let pt = self.child(0, delta, gamma, payload)?;
                self.same("T-Pack", &body.subst(a, witness), &pt)?;
                Ok(ann.clone())
            }
            Term::Unpack(a, x, packed, body) => {
                let (b, inner) = match self.child(0, delta, gamma, packed)? {
                    Type::Exists(b, inner) => (b, *inner),
                    other => {
                        return self.err("T-Unpack", TypeErrorKind::Shape { expected: "an existential type", found: other })
                    }
                };
                let a2 = Self::bind_tyvar(delta, gamma, a);
                let body = if &a2 == a { (**body).clone() } else { body.subst_type(a, &Type::Var(a2.clone())) };
                let mut g = gamma.clone();
                g.insert(x.clone(), inner.subst(&b, &Type::Var(a2.clone())));
                delta.push(a2.clone());
                let r = self.child(1, delta, &g, &body);
                delta.pop();
                let rt = r?;
                if !wf_type(delta, &rt) {
                    return self.err("T-Unpack", TypeErrorKind::ScopeEscape { var: a.clone(), ty: rt });
                }
                Ok(rt)
            }
            Term::Fold(a, ann) => {
                self.wf("T-Fold", delta, ann)?;
                let Some(unrolled) = ann.unfold_mu() else {
                    return self.err("T-Fold", TypeErrorKind::Shape { expected: "a recursive type annotation", found: ann.clone() });
                };
                let at = self.child(0, delta, gamma, a)?;
                self.same("T-Fold", &unrolled, &at)?;
                Ok(ann.clone())
            }
            Term::Unfold(a) => {
                let at = self.child(0, delta, gamma, a)?;
                match at.unfold_mu() {
                    Some(t) => Ok(t),
                    None => self.err("T-Unfold", TypeErrorKind::Shape { expected: "a recursive type", found: at }),
                }
            }
            Term::Alloc(a) => Ok(Type::reference(self.child(0, delta, gamma, a)?)),
            Term::Assign(l, r) => {
                let lt = self.child(0, delta, gamma, l)?;
                let rt = self.child(1, delta, gamma, r)?;
                match lt {
                    Type::Ref(inner) => {
                        self.path.push(1);
                        self.same("T-Assign", &inner, &rt)?;
                        self.path.pop();
                        Ok(rt)
                    }
                    other => self.err("T-Assign", TypeErrorKind::Shape { expected: "a reference type", found: other }),
                }
            }
            Term::Deref(a) => match self.child(0, delta, gamma, a)? {
                Type::Ref(inner) => Ok(*inner),
                other => self.err("T-Deref", TypeErrorKind::Shape { expected: "a reference type", found: other }),
            },
            Term::Loc(l) => match self.sigma.get(l) {
                Some(t) => Ok(Type::reference(t.clone())),
                None => self.err("T-Loc", TypeErrorKind::UnknownLocation(*l)),
            },
            Term::IntEq(a, b) => {
                let at = self.child(0, delta, gamma, a)?;
                self.path.push(0);
                self.same("T-IntEq", &Type::Int, &at)?;
                self.path.pop();
                let bt = self.child(1, delta, gamma, b)?;
                self.path.push(1);
                self.same("T-IntEq", &Type::Int, &bt)?;
                self.path.pop();
                Ok(Type::Bool)
            }
            Term::Not(a) => {
                let at = self.child(0, delta, gamma, a)?;
                self.same("T-Not", &Type::Bool, &at)?;
                Ok(Type::Bool)
            }
            Term::Hole => {
                let Some(hole) = self.hole else {
                    return self.err("T-Hole", TypeErrorKind::UnexpectedHole);
                };
                if let Some(a) = hole.delta.iter().find(|a| !delta.contains(a)) {
                    return self.err("T-Hole", TypeErrorKind::HoleEnvironment(format!("type variable `{a}` not in scope")));
                }
                for (x, t) in &hole.gamma {
                    match gamma.get(x) {
                        Some(found) if found.alpha_eq(t) => {}
                        Some(found) => {
                            return self.err(
                                "T-Hole",
                                TypeErrorKind::HoleEnvironment(format!("`{x}` has type `{found}`, hole expects `{t}`")),
                            )
                        }
                        None => {
                            return self.err("T-Hole", TypeErrorKind::HoleEnvironment(format!("`{x}` not in scope")))
                        }
                    }
                }
                Ok(hole.ty.clone())
            }
        }
    }
}
