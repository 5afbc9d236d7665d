//! Unary logical predicates: strong normalization and the safety
//! interpretation, both checked with finitely many quantifier instances.
//!
//! Quantifiers over argument values range over a [`ValueCorpus`]. A check
//! that passed only because its quantifiers were finitized answers
//! [`Verdict::UpToBounds`]; a failure always carries a replayable witness.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::dynamics::{eval_star, Allocator, Config, Cycle, EvalResult};
use crate::equivalence::gen_value_corpus;
use crate::kernel::{Name, Term, Type};
use crate::statics::{typecheck_closed, TermCtx, TypeError};

/// Why a check could only be answered relative to its bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Limit {
    Fuel,
    Corpus,
    Catalog,
    CatalogExhausted,
    Worlds,
    Contexts,
    Depth,
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Limit::Fuel => "fuel",
            Limit::Corpus => "corpus",
            Limit::Catalog => "catalog",
            Limit::CatalogExhausted => "CatalogExhausted",
            Limit::Worlds => "worlds",
            Limit::Contexts => "contexts",
            Limit::Depth => "depth",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub term: Option<Term>,
    pub detail: String,
}

impl Witness {
    pub fn new(term: Term, detail: impl Into<String>) -> Self {
        Witness { term: Some(term), detail: detail.into() }
    }

    pub fn detail(detail: impl Into<String>) -> Self {
        Witness { term: None, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Proven,
    Disproven(Witness),
    UpToBounds(BTreeSet<Limit>),
}

impl Verdict {
    pub fn bounded(limit: Limit) -> Verdict {
        Verdict::UpToBounds(BTreeSet::from([limit]))
    }

    pub fn disproven(term: Term, detail: impl Into<String>) -> Verdict {
        Verdict::Disproven(Witness::new(term, detail))
    }

    pub fn is_proven(&self) -> bool {
        matches!(self, Verdict::Proven)
    }

    pub fn is_disproven(&self) -> bool {
        matches!(self, Verdict::Disproven(_))
    }

    /// Conjunction: a refutation wins, bounds accumulate.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (d @ Verdict::Disproven(_), _) | (_, d @ Verdict::Disproven(_)) => d,
            (Verdict::UpToBounds(mut a), Verdict::UpToBounds(b)) => {
                a.extend(b);
                Verdict::UpToBounds(a)
            }
            (u @ Verdict::UpToBounds(_), Verdict::Proven) | (Verdict::Proven, u @ Verdict::UpToBounds(_)) => u,
            (Verdict::Proven, Verdict::Proven) => Verdict::Proven,
        }
    }

    /// Weakens a non-refutation to a bounded answer.
    pub fn limited_by(self, limit: Limit) -> Verdict {
        match self {
            Verdict::Disproven(w) => Verdict::Disproven(w),
            other => other.and(Verdict::bounded(limit)),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Proven => "Proven",
            Verdict::Disproven(_) => "Disproven",
            Verdict::UpToBounds(_) => "UpToBounds",
        }
    }

    /// Stable one-line rendering.
    pub fn line(&self, bounds: &Bounds) -> String {
        let witness = match self {
            Verdict::Disproven(w) => match &w.term {
                Some(t) => format!("\"{t}\""),
                None => format!("\"{}\"", w.detail),
            },
            _ => "-".to_string(),
        };
        let mut out = format!("VERDICT {} WITNESS {witness} BOUNDS {bounds}", self.label());
        if let Verdict::UpToBounds(limits) = self {
            let l: Vec<String> = limits.iter().map(Limit::to_string).collect();
            out.push_str(&format!(" limit={}", l.join(",")));
        }
        out
    }
}

/// The bounds a check ran under, echoed in every verdict line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub fuel: usize,
    pub corpus: usize,
    pub k: Option<usize>,
    pub catalog: Option<usize>,
    pub ctx: Option<usize>,
}

impl Bounds {
    pub fn new(fuel: usize, corpus: usize) -> Self {
        Bounds { fuel, corpus, k: None, catalog: None, ctx: None }
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fuel={} corpus={}", self.fuel, self.corpus)?;
        if let Some(k) = self.k {
            write!(f, " k={k}")?;
        }
        if let Some(c) = self.catalog {
            write!(f, " catalog={c}")?;
        }
        if let Some(c) = self.ctx {
            write!(f, " ctx={c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("term is not closed: {0}")]
    NotClosed(Term),
    #[error("type `{0}` has free type variables")]
    OpenType(Type),
    #[error("no interpretation for type `{0}` in this relation")]
    Unsupported(Type),
    #[error("ill-typed input: {0}")]
    IllTyped(#[from] TypeError),
    #[error("{0}")]
    Invalid(String),
}

/// Finite samples of closed values per type, built on demand and shared.
pub struct ValueCorpus {
    depth: usize,
    seed: u64,
    extra_ints: Vec<i64>,
    cache: Mutex<HashMap<Type, Arc<Vec<Term>>>>,
}

impl fmt::Debug for ValueCorpus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ValueCorpus").field("depth", &self.depth).field("seed", &self.seed).finish()
    }
}

impl ValueCorpus {
    pub fn new(depth: usize, seed: u64) -> Self {
        ValueCorpus { depth, seed, extra_ints: vec![], cache: Mutex::new(HashMap::new()) }
    }

    /// Adds integer literals to the `Int` entry.
    pub fn with_extra_ints(mut self, ints: impl IntoIterator<Item = i64>) -> Self {
        for n in ints {
            if !self.extra_ints.contains(&n) {
                self.extra_ints.push(n);
            }
        }
        self.cache.lock().unwrap().clear();
        self
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self, ty: &Type) -> Arc<Vec<Term>> {
        let key = ty.canonical();
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return v.clone();
        }
        let mut vs = gen_value_corpus(ty, self.depth, self.seed);
        if !self.extra_ints.is_empty() {
            vs = self.add_ints(ty, vs);
        }
        let vs = Arc::new(vs);
        self.cache.lock().unwrap().insert(key, vs.clone());
        vs
    }

    fn add_ints(&self, ty: &Type, mut vs: Vec<Term>) -> Vec<Term> {
        match ty {
            Type::Int => {
                for &n in &self.extra_ints {
                    if !vs.contains(&Term::Int(n)) {
                        vs.push(Term::Int(n));
                    }
                }
                vs
            }
            Type::Prod(a, b) => {
                let (xs, ys) = (self.values(a), self.values(b));
                let mut out = Vec::new();
                for x in xs.iter() {
                    for y in ys.iter() {
                        out.push(Term::pair(x.clone(), y.clone()));
                    }
                }
                out
            }
            Type::Sum(a, b) => {
                let mut out: Vec<Term> = self.values(a).iter().map(|v| Term::inl(v.clone(), ty.clone())).collect();
                out.extend(self.values(b).iter().map(|v| Term::inr(v.clone(), ty.clone())));
                out
            }
            _ => vs,
        }
    }

    /// Whether the entry for `ty` lists every closed value of that type.
    pub fn exhaustive(ty: &Type) -> bool {
        match ty {
            Type::Bool => true,
            Type::Prod(a, b) | Type::Sum(a, b) => Self::exhaustive(a) && Self::exhaustive(b),
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub fuel: usize,
    /// Bound on nested arrow and recursive-type unrollings.
    pub nesting: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { fuel: 10_000, nesting: 3 }
    }
}

fn run(e: &Term, fuel: usize) -> EvalResult {
    eval_star(&Config::new(e.clone()), fuel, &mut Allocator::Sequential, true)
}

/// Strong normalization at `ty`: well-typed, evaluates to a value, and
/// the value's eliminations are again strongly normalizing.
pub fn sn_check(e: &Term, ty: &Type, corpus: &ValueCorpus, opts: CheckOptions) -> Result<Verdict, CheckError> {
    if !e.is_closed() {
        return Err(CheckError::NotClosed(e.clone()));
    }
    if !ty.is_closed() {
        return Err(CheckError::OpenType(ty.clone()));
    }
    Ok(sn(e, ty, corpus, opts, opts.nesting))
}

fn sn(e: &Term, ty: &Type, corpus: &ValueCorpus, opts: CheckOptions, nesting: usize) -> Verdict {
    match typecheck_closed(e) {
        Ok(found) if found.alpha_eq(ty) => {}
        Ok(found) => return Verdict::disproven(e.clone(), format!("has type {found}, not {ty}")),
        Err(err) => return Verdict::disproven(e.clone(), format!("ill-typed: {err}")),
    }
    let v = match run(e, opts.fuel) {
        EvalResult::Value { value, .. } => value,
        EvalResult::Stuck { reason, .. } => return Verdict::disproven(e.clone(), format!("stuck: {reason}")),
        EvalResult::FuelExhausted { cycle: Some(_), .. } => {
            return Verdict::disproven(e.clone(), "diverges: configuration repeats")
        }
        EvalResult::FuelExhausted { .. } => return Verdict::bounded(Limit::Fuel),
    };
    match ty {
        Type::Bool | Type::Int => Verdict::Proven,
        _ if nesting == 0 => Verdict::bounded(Limit::Depth),
        Type::Arrow(a, b) => {
            let mut verdict = Verdict::bounded(Limit::Corpus);
            for arg in corpus.values(a).iter() {
                if sn(arg, a, corpus, opts, nesting - 1).is_disproven() {
                    continue;
                }
                verdict = verdict.and(sn(&Term::app(e.clone(), arg.clone()), b, corpus, opts, nesting - 1));
                if verdict.is_disproven() {
                    break;
                }
            }
            verdict
        }
        Type::Prod(a, b) => match &v {
            Term::Pair(x, y) => sn(x, a, corpus, opts, nesting).and(sn(y, b, corpus, opts, nesting)),
            _ => Verdict::disproven(e.clone(), "product value is not a pair"),
        },
        Type::Sum(a, b) => match &v {
            Term::Inl(x, _) => sn(x, a, corpus, opts, nesting),
            Term::Inr(x, _) => sn(x, b, corpus, opts, nesting),
            _ => Verdict::disproven(e.clone(), "sum value is not an injection"),
        },
        Type::Forall(a, body) => {
            let mut verdict = Verdict::bounded(Limit::Corpus);
            for t in [Type::Bool, Type::Int] {
                verdict = verdict.and(sn(&Term::ty_app(e.clone(), t.clone()), &body.subst(a, &t), corpus, opts, nesting - 1));
            }
            verdict
        }
        Type::Exists(a, body) => match &v {
            Term::Pack(w, p, _) => sn(p, &body.subst(a, w), corpus, opts, nesting - 1),
            _ => Verdict::disproven(e.clone(), "existential value is not a package"),
        },
        Type::Mu(..) => match &v {
            Term::Fold(p, _) => sn(p, &ty.unfold_mu().expect("mu"), corpus, opts, nesting - 1),
            _ => Verdict::disproven(e.clone(), "recursive value is not a fold"),
        },
        Type::Ref(_) | Type::Var(_) => Verdict::bounded(Limit::Depth),
    }
}

/// Membership of a closed value in the value interpretation of `ty`.
/// Typing is not required; only the shape and behaviour of `v` matter.
pub fn v_member(v: &Term, ty: &Type, corpus: &ValueCorpus, opts: CheckOptions) -> Result<Verdict, CheckError> {
    precheck(v, ty)?;
    vm(v, ty, corpus, opts, opts.nesting)
}

/// Membership in the expression interpretation: every irreducible
/// result is in the value interpretation.
pub fn e_member(e: &Term, ty: &Type, corpus: &ValueCorpus, opts: CheckOptions) -> Result<Verdict, CheckError> {
    precheck(e, ty)?;
    em(e, ty, corpus, opts, opts.nesting)
}

fn precheck(e: &Term, ty: &Type) -> Result<(), CheckError> {
    if !e.is_closed() {
        return Err(CheckError::NotClosed(e.clone()));
    }
    if !ty.is_closed() {
        return Err(CheckError::OpenType(ty.clone()));
    }
    if ty.subterms().iter().any(|t| matches!(t, Type::Ref(_))) {
        return Err(CheckError::Unsupported(ty.clone()));
    }
    Ok(())
}

fn em(e: &Term, ty: &Type, corpus: &ValueCorpus, opts: CheckOptions, nesting: usize) -> Result<Verdict, CheckError> {
    match run(e, opts.fuel) {
        EvalResult::Value { value, .. } => vm(&value, ty, corpus, opts, nesting),
        EvalResult::Stuck { config, reason, .. } => {
            Ok(Verdict::disproven(config.expr, format!("stuck ({reason}) while evaluating {e}")))
        }
        EvalResult::FuelExhausted { .. } => Ok(Verdict::bounded(Limit::Fuel)),
    }
}

fn vm(v: &Term, ty: &Type, corpus: &ValueCorpus, opts: CheckOptions, nesting: usize) -> Result<Verdict, CheckError> {
    if !v.is_value() {
        return Ok(Verdict::disproven(v.clone(), "not a value"));
    }
    let wrong = |what: &str| Ok(Verdict::disproven(v.clone(), format!("not {what} of type {ty}")));
    match ty {
        Type::Bool => match v {
            Term::True | Term::False => Ok(Verdict::Proven),
            _ => wrong("a boolean"),
        },
        Type::Int => match v {
            Term::Int(_) => Ok(Verdict::Proven),
            _ => wrong("an integer"),
        },
        Type::Prod(a, b) => match v {
            Term::Pair(x, y) => Ok(vm(x, a, corpus, opts, nesting)?.and(vm(y, b, corpus, opts, nesting)?)),
            _ => wrong("a pair"),
        },
        Type::Sum(a, b) => match v {
            Term::Inl(x, _) => vm(x, a, corpus, opts, nesting),
            Term::Inr(x, _) => vm(x, b, corpus, opts, nesting),
            _ => wrong("an injection"),
        },
        Type::Arrow(a, b) => {
            let Term::Lam(x, _, body) = v else { return wrong("a function") };
            if nesting == 0 {
                return Ok(Verdict::bounded(Limit::Depth));
            }
            let mut verdict = Verdict::Proven;
            for arg in corpus.values(a).iter() {
                if vm(arg, a, corpus, opts, nesting - 1)?.is_disproven() {
                    continue;
                }
                let r = em(&body.subst(x, arg), b, corpus, opts, nesting - 1)?;
                verdict = verdict.and(r);
                if let Verdict::Disproven(w) = verdict {
                    let detail = format!("applied to {arg}: {}", w.detail);
                    return Ok(Verdict::Disproven(Witness { term: Some(Term::app(v.clone(), arg.clone())), detail }));
                }
            }
            if !ValueCorpus::exhaustive(a) {
                verdict = verdict.limited_by(Limit::Corpus);
            }
            Ok(verdict)
        }
        Type::Forall(a, body) => {
            let Term::TyLam(b, inner) = v else { return wrong("a type abstraction") };
            if nesting == 0 {
                return Ok(Verdict::bounded(Limit::Depth));
            }
            let mut verdict = Verdict::bounded(Limit::Corpus);
            for t in [Type::Bool, Type::Int] {
                verdict = verdict.and(em(&inner.subst_type(b, &t), &body.subst(a, &t), corpus, opts, nesting - 1)?);
            }
            Ok(verdict)
        }
        Type::Exists(a, body) => match v {
            Term::Pack(w, p, _) if w.is_closed() => vm(p, &body.subst(a, w), corpus, opts, nesting),
            _ => wrong("a package"),
        },
        Type::Mu(..) => match v {
            Term::Fold(p, _) if nesting > 0 => vm(p, &ty.unfold_mu().expect("mu"), corpus, opts, nesting - 1),
            Term::Fold(..) => Ok(Verdict::bounded(Limit::Depth)),
            _ => wrong("a fold"),
        },
        Type::Ref(_) | Type::Var(_) => Err(CheckError::Unsupported(ty.clone())),
    }
}

/// Runs `e` from the empty heap, reporting stuck states. Divergence is
/// reported as bounded, together with the repeating configurations when
/// the cycle detector fires.
pub fn safe_check(e: &Term, fuel: usize, alloc: &mut Allocator) -> Result<(Verdict, Option<Cycle>), CheckError> {
    if !e.is_closed() {
        return Err(CheckError::NotClosed(e.clone()));
    }
    Ok(safe_check_config(&Config::new(e.clone()), fuel, alloc))
}

pub fn safe_check_config(c: &Config, fuel: usize, alloc: &mut Allocator) -> (Verdict, Option<Cycle>) {
    match eval_star(c, fuel, alloc, true) {
        EvalResult::Value { .. } => (Verdict::Proven, None),
        EvalResult::Stuck { config, reason, .. } => {
            (Verdict::disproven(config.expr, format!("stuck: {reason}")), None)
        }
        EvalResult::FuelExhausted { cycle, .. } => (Verdict::bounded(Limit::Fuel), cycle),
    }
}

/// Which unary predicate a substitution is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    StrongNormalization,
    Safety,
}

/// `γ ⊨ Γ`: same domain, and every binding satisfies the predicate at
/// its declared type.
pub fn gamma_satisfies(
    gamma_subst: &BTreeMap<Name, Term>,
    gamma: &TermCtx,
    corpus: &ValueCorpus,
    opts: CheckOptions,
    mode: Mode,
) -> Result<Verdict, CheckError> {
    let dom_a: BTreeSet<&Name> = gamma_subst.keys().collect();
    let dom_b: BTreeSet<&Name> = gamma.keys().collect();
    if dom_a != dom_b {
        return Ok(Verdict::Disproven(Witness::detail("substitution and context have different domains")));
    }
    let mut verdict = Verdict::Proven;
    for (x, v) in gamma_subst {
        let ty = &gamma[x];
        let r = match mode {
            Mode::StrongNormalization => sn_check(v, ty, corpus, opts)?,
            Mode::Safety => v_member(v, ty, corpus, opts)?,
        };
        if let Verdict::Disproven(w) = r {
            return Ok(Verdict::Disproven(Witness { term: w.term, detail: format!("binding {x}: {}", w.detail) }));
        }
        verdict = verdict.and(r);
    }
    Ok(verdict)
}

/// Closes `e` with a value substitution.
pub fn close(e: &Term, gamma_subst: &BTreeMap<Name, Term>) -> Term {
    gamma_subst.iter().fold(e.clone(), |acc, (x, v)| acc.subst(x, v))
}
