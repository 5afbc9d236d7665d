//! The binary logical relation for polymorphic and existential types.
//!
//! Type variables are interpreted by finite relations. Universal
//! quantification over relations ranges over a [`Catalog`]; existential
//! quantification tries caller-supplied relations, a relation read off the
//! packages themselves, and then the catalog.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::dynamics::{eval_star, Allocator, Config, EvalResult};
use crate::kernel::{Name, Term, Type};
use crate::logrel::{CheckError, Limit, ValueCorpus, Verdict, Witness};
use crate::statics::{typecheck, typecheck_closed, StoreTyping, TermCtx};
use crate::surface::RelationLiteral;

/// A finite relation between closed values of two closed types.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteRel {
    left: Type,
    right: Type,
    pairs: Vec<(Term, Term)>,
}

impl FiniteRel {
    pub fn new(left: Type, right: Type, pairs: Vec<(Term, Term)>) -> Result<Self, CheckError> {
        for t in [&left, &right] {
            if !t.is_closed() {
                return Err(CheckError::OpenType(t.clone()));
            }
        }
        let mut kept: Vec<(Term, Term)> = Vec::new();
        for (a, b) in pairs {
            for (v, t) in [(&a, &left), (&b, &right)] {
                if !v.is_value() {
                    return Err(CheckError::Invalid(format!("`{v}` is not a value")));
                }
                let found = typecheck_closed(v)?;
                if !found.alpha_eq(t) {
                    return Err(CheckError::Invalid(format!("`{v}` has type {found}, not {t}")));
                }
            }
            if !kept.iter().any(|(x, y)| x.alpha_eq(&a) && y.alpha_eq(&b)) {
                kept.push((a, b));
            }
        }
        Ok(FiniteRel { left, right, pairs: kept })
    }

    /// Builds a relation from its literal form. Without a type header the
    /// types are read off the first pair.
    pub fn from_literal(lit: &RelationLiteral) -> Result<Self, CheckError> {
        let (left, right) = match &lit.types {
            Some((l, r)) => (l.clone(), r.clone()),
            None => {
                let (a, b) = lit
                    .pairs
                    .first()
                    .ok_or_else(|| CheckError::Invalid("an empty relation needs a type header".into()))?;
                (typecheck_closed(a)?, typecheck_closed(b)?)
            }
        };
        FiniteRel::new(left, right, lit.pairs.clone())
    }

    pub fn empty(left: Type, right: Type) -> Self {
        FiniteRel { left, right, pairs: vec![] }
    }

    pub fn left(&self) -> &Type {
        &self.left
    }

    pub fn right(&self) -> &Type {
        &self.right
    }

    pub fn pairs(&self) -> &[(Term, Term)] {
        &self.pairs
    }

    pub fn contains(&self, a: &Term, b: &Term) -> bool {
        self.pairs.iter().any(|(x, y)| x.alpha_eq(a) && y.alpha_eq(b))
    }
}

impl fmt::Display for FiniteRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R : {} ~ {} {{", self.left, self.right)?;
        for (i, (a, b)) in self.pairs.iter().enumerate() {
            write!(f, "{} ({a}, {b})", if i == 0 { "" } else { ";" })?;
        }
        write!(f, " }}")
    }
}

/// Interpretation of type variables by relations.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelSubst(BTreeMap<Name, FiniteRel>);

impl RelSubst {
    pub fn new() -> Self {
        RelSubst::default()
    }

    pub fn extend(&self, a: &Name, r: FiniteRel) -> RelSubst {
        let mut m = self.0.clone();
        m.insert(a.clone(), r);
        RelSubst(m)
    }

    pub fn get(&self, a: &Name) -> Option<&FiniteRel> {
        self.0.get(a)
    }

    pub fn domain(&self) -> impl Iterator<Item = &Name> {
        self.0.keys()
    }

    pub fn left(&self, t: &Type) -> Type {
        self.0.iter().fold(t.clone(), |acc, (a, r)| acc.subst(a, &r.left))
    }

    pub fn right(&self, t: &Type) -> Type {
        self.0.iter().fold(t.clone(), |acc, (a, r)| acc.subst(a, &r.right))
    }

    pub fn left_term(&self, e: &Term) -> Term {
        self.0.iter().fold(e.clone(), |acc, (a, r)| acc.subst_type(a, &r.left))
    }

    pub fn right_term(&self, e: &Term) -> Term {
        self.0.iter().fold(e.clone(), |acc, (a, r)| acc.subst_type(a, &r.right))
    }
}

impl fmt::Display for RelSubst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(a, r)| format!("{a} -> {r}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Candidate relations for the quantifiers over all relations.
#[derive(Clone, Debug, Default)]
pub struct Catalog {
    entries: Vec<FiniteRel>,
}

impl Catalog {
    pub fn new(entries: Vec<FiniteRel>) -> Self {
        Catalog { entries }
    }

    /// Empty, identity, function-graph and singleton relations over the
    /// corpora of `Bool` and `Int`, interleaved across type pairs and kinds
    /// and truncated to `size`.
    pub fn standard(corpus: &ValueCorpus, size: usize) -> Self {
        let pairs = [(Type::Bool, Type::Bool), (Type::Int, Type::Int), (Type::Int, Type::Bool), (Type::Bool, Type::Int)];
        let mut columns: Vec<Vec<FiniteRel>> = Vec::new();
        for (l, r) in pairs {
            let mut col = vec![FiniteRel::empty(l.clone(), r.clone())];
            let lv = corpus.values(&l);
            let rv = corpus.values(&r);
            if l == r {
                col.push(FiniteRel { left: l.clone(), right: r.clone(), pairs: lv.iter().map(|v| (v.clone(), v.clone())).collect() });
            }
            let funs = corpus.values(&Type::arrow(l.clone(), r.clone()));
            let mut graphs = Vec::new();
            for f in funs.iter().take(8) {
                let mut g = Vec::new();
                for v in lv.iter() {
                    if let EvalResult::Value { value, .. } = run(&Term::app(f.clone(), v.clone()), 1000) {
                        g.push((v.clone(), value));
                    }
                }
                let rel = FiniteRel { left: l.clone(), right: r.clone(), pairs: g };
                if !graphs.contains(&rel) {
                    graphs.push(rel);
                }
            }
            let mut singles = Vec::new();
            for a in lv.iter() {
                for b in rv.iter() {
                    singles.push(FiniteRel { left: l.clone(), right: r.clone(), pairs: vec![(a.clone(), b.clone())] });
                }
            }
            // Alternate graphs and singletons so both kinds survive truncation.
            let (mut gi, mut si) = (graphs.into_iter(), singles.into_iter());
            loop {
                match (gi.next(), si.next()) {
                    (None, None) => break,
                    (g, s) => col.extend(g.into_iter().chain(s)),
                }
            }
            columns.push(col);
        }
        let mut entries = Vec::new();
        let longest = columns.iter().map(Vec::len).max().unwrap_or(0);
        'fill: for i in 0..longest {
            for col in &columns {
                if let Some(r) = col.get(i) {
                    if entries.len() == size {
                        break 'fill;
                    }
                    entries.push(r.clone());
                }
            }
        }
        Catalog { entries }
    }

    pub fn entries(&self) -> &[FiniteRel] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn run(e: &Term, fuel: usize) -> EvalResult {
    eval_star(&Config::new(e.clone()), fuel, &mut Allocator::Sequential, false)
}

/// Cap on the number of candidate pairs drawn for higher-order types.
const PAIR_CAP: usize = 16;
const PAIR_PROBES: usize = 256;
/// Cap on closing substitutions tried by [`Relational::log_equiv_check`].
const CLOSING_CAP: usize = 512;

/// The binary relation, parameterized by its finitization.
pub struct Relational {
    pub catalog: Catalog,
    pub corpus: ValueCorpus,
    pub fuel: usize,
    /// Relations offered first for existential packages.
    pub supplied: Vec<FiniteRel>,
    /// Bound on nested quantifier and arrow unrollings.
    pub nesting: usize,
}

impl Relational {
    pub fn new(catalog: Catalog, corpus: ValueCorpus, fuel: usize) -> Self {
        Relational { catalog, corpus, fuel, supplied: vec![], nesting: 3 }
    }

    pub fn with_supplied(mut self, rels: Vec<FiniteRel>) -> Self {
        self.supplied = rels;
        self
    }

    /// Pairs in `V[ty]ρ`, drawn from finite sources, and whether they are
    /// all of them.
    pub fn related_pairs(&self, ty: &Type, rho: &RelSubst) -> Result<(Vec<(Term, Term)>, bool), CheckError> {
        self.pairs_at(ty, rho, self.nesting)
    }

    fn pairs_at(&self, ty: &Type, rho: &RelSubst, nesting: usize) -> Result<(Vec<(Term, Term)>, bool), CheckError> {
        Ok(match ty {
            Type::Var(a) => {
                let r = rho.get(a).ok_or_else(|| CheckError::OpenType(ty.clone()))?;
                (r.pairs.clone(), true)
            }
            Type::Bool => (vec![(Term::True, Term::True), (Term::False, Term::False)], true),
            Type::Int => (self.corpus.values(&Type::Int).iter().map(|v| (v.clone(), v.clone())).collect(), false),
            Type::Prod(a, b) => {
                let (xs, ex) = self.pairs_at(a, rho, nesting)?;
                let (ys, ey) = self.pairs_at(b, rho, nesting)?;
                let mut out = Vec::new();
                for (x1, x2) in &xs {
                    for (y1, y2) in &ys {
                        out.push((Term::pair(x1.clone(), y1.clone()), Term::pair(x2.clone(), y2.clone())));
                    }
                }
                (out, ex && ey)
            }
            Type::Sum(a, b) => {
                let (l, r) = (rho.left(ty), rho.right(ty));
                let (xs, ex) = self.pairs_at(a, rho, nesting)?;
                let (ys, ey) = self.pairs_at(b, rho, nesting)?;
                let mut out: Vec<(Term, Term)> =
                    xs.into_iter().map(|(x1, x2)| (Term::inl(x1, l.clone()), Term::inl(x2, r.clone()))).collect();
                out.extend(ys.into_iter().map(|(y1, y2)| (Term::inr(y1, l.clone()), Term::inr(y2, r.clone()))));
                (out, ex && ey)
            }
            Type::Mu(..) | Type::Ref(_) => return Err(CheckError::Unsupported(ty.clone())),
            _ => {
                let (l, r) = (rho.left(ty), rho.right(ty));
                let (lv, rv) = (self.corpus.values(&l), self.corpus.values(&r));
                let mut candidates: Vec<(usize, usize)> = Vec::new();
                if l.alpha_eq(&r) {
                    candidates.extend((0..lv.len().min(rv.len())).map(|i| (i, i)));
                }
                for i in 0..lv.len() {
                    for j in 0..rv.len() {
                        if !(l.alpha_eq(&r) && i == j) {
                            candidates.push((i, j));
                        }
                    }
                }
                let mut out = Vec::new();
                for (i, j) in candidates.into_iter().take(PAIR_PROBES) {
                    if out.len() == PAIR_CAP || nesting == 0 {
                        break;
                    }
                    if !self.v_rel(&lv[i], &rv[j], ty, rho, nesting - 1)?.is_disproven() {
                        out.push((lv[i].clone(), rv[j].clone()));
                    }
                }
                (out, false)
            }
        })
    }

    /// `(v1, v2) ∈ V[ty]ρ`.
    pub fn v_rel_member(&self, v1: &Term, v2: &Term, ty: &Type, rho: &RelSubst) -> Result<Verdict, CheckError> {
        self.precheck(v1, v2, ty, rho)?;
        self.v_rel(v1, v2, ty, rho, self.nesting)
    }

    /// `(e1, e2) ∈ E[ty]ρ`: both run to related values.
    pub fn e_rel_member(&self, e1: &Term, e2: &Term, ty: &Type, rho: &RelSubst) -> Result<Verdict, CheckError> {
        self.precheck(e1, e2, ty, rho)?;
        self.e_rel(e1, e2, ty, rho, self.nesting)
    }

    fn precheck(&self, e1: &Term, e2: &Term, ty: &Type, rho: &RelSubst) -> Result<(), CheckError> {
        for e in [e1, e2] {
            if !e.is_closed() {
                return Err(CheckError::NotClosed(e.clone()));
            }
        }
        if let Some(a) = ty.free_vars().into_iter().find(|a| rho.get(a).is_none()) {
            return Err(CheckError::Invalid(format!("type variable {a} is not interpreted")));
        }
        Ok(())
    }

    fn e_rel(&self, e1: &Term, e2: &Term, ty: &Type, rho: &RelSubst, nesting: usize) -> Result<Verdict, CheckError> {
        let mut vals = Vec::new();
        for e in [e1, e2] {
            match run(e, self.fuel) {
                EvalResult::Value { value, .. } => vals.push(value),
                EvalResult::Stuck { reason, .. } => return Ok(Verdict::disproven(e.clone(), format!("stuck: {reason}"))),
                EvalResult::FuelExhausted { .. } => return Ok(Verdict::bounded(Limit::Fuel)),
            }
        }
        self.v_rel(&vals[0], &vals[1], ty, rho, nesting)
    }

    fn v_rel(&self, v1: &Term, v2: &Term, ty: &Type, rho: &RelSubst, nesting: usize) -> Result<Verdict, CheckError> {
        for (v, t) in [(v1, rho.left(ty)), (v2, rho.right(ty))] {
            match typecheck_closed(v) {
                Ok(found) if found.alpha_eq(&t) => {}
                Ok(found) => return Ok(Verdict::disproven(v.clone(), format!("has type {found}, expected {t}"))),
                Err(e) => return Ok(Verdict::disproven(v.clone(), format!("ill-typed: {e}"))),
            }
        }
        let pair = || Term::pair(v1.clone(), v2.clone());
        match ty {
            Type::Bool | Type::Int => {
                if v1 == v2 {
                    Ok(Verdict::Proven)
                } else {
                    Ok(Verdict::disproven(pair(), format!("{v1} and {v2} differ at {ty}")))
                }
            }
            Type::Var(a) => {
                let r = rho.get(a).ok_or_else(|| CheckError::OpenType(ty.clone()))?;
                if r.contains(v1, v2) {
                    Ok(Verdict::Proven)
                } else {
                    Ok(Verdict::disproven(pair(), format!("({v1}, {v2}) is not in the relation for {a}")))
                }
            }
            Type::Prod(a, b) => match (v1, v2) {
                (Term::Pair(x1, y1), Term::Pair(x2, y2)) => {
                    let first = self.v_rel(x1, x2, a, rho, nesting)?;
                    if first.is_disproven() {
                        return Ok(first);
                    }
                    Ok(first.and(self.v_rel(y1, y2, b, rho, nesting)?))
                }
                _ => Ok(Verdict::disproven(pair(), "not both pairs")),
            },
            Type::Sum(a, b) => match (v1, v2) {
                (Term::Inl(x1, _), Term::Inl(x2, _)) => self.v_rel(x1, x2, a, rho, nesting),
                (Term::Inr(x1, _), Term::Inr(x2, _)) => self.v_rel(x1, x2, b, rho, nesting),
                _ => Ok(Verdict::disproven(pair(), "injections differ")),
            },
            Type::Arrow(a, b) => {
                if nesting == 0 {
                    return Ok(Verdict::bounded(Limit::Corpus));
                }
                let (args, exhaustive) = self.pairs_at(a, rho, nesting - 1)?;
                let mut verdict = Verdict::Proven;
                for (x1, x2) in &args {
                    let r = self.e_rel(&Term::app(v1.clone(), x1.clone()), &Term::app(v2.clone(), x2.clone()), b, rho, nesting - 1)?;
                    if let Verdict::Disproven(w) = r {
                        let detail = format!("on arguments ({x1}, {x2}): {}", w.detail);
                        return Ok(Verdict::Disproven(Witness { term: w.term, detail }));
                    }
                    verdict = verdict.and(r);
                }
                Ok(if exhaustive { verdict } else { verdict.limited_by(Limit::Corpus) })
            }
            Type::Forall(a, body) => {
                if nesting == 0 {
                    return Ok(Verdict::bounded(Limit::Catalog));
                }
                let mut verdict = Verdict::bounded(Limit::Catalog);
                for r in self.catalog.entries() {
                    let e1 = Term::ty_app(v1.clone(), r.left.clone());
                    let e2 = Term::ty_app(v2.clone(), r.right.clone());
                    let res = self.e_rel(&e1, &e2, body, &rho.extend(a, r.clone()), nesting - 1)?;
                    if let Verdict::Disproven(w) = res {
                        let detail = format!("instantiated with {r}: {}", w.detail);
                        return Ok(Verdict::Disproven(Witness { term: w.term, detail }));
                    }
                    verdict = verdict.and(res);
                }
                Ok(verdict)
            }
            Type::Exists(a, body) => {
                let (Term::Pack(w1, p1, _), Term::Pack(w2, p2, _)) = (v1, v2) else {
                    return Ok(Verdict::disproven(pair(), "not both packages"));
                };
                let mut candidates: Vec<FiniteRel> = Vec::new();
                let fits = |r: &FiniteRel| r.left.alpha_eq(w1) && r.right.alpha_eq(w2);
                candidates.extend(self.supplied.iter().filter(|r| fits(r)).cloned());
                let mut harvested = Vec::new();
                harvest(body, a, p1, p2, &mut harvested);
                if let Ok(r) = FiniteRel::new(w1.clone(), w2.clone(), harvested) {
                    candidates.push(r);
                }
                candidates.extend(self.catalog.entries().iter().filter(|r| fits(r)).cloned());
                let mut best: Option<Verdict> = None;
                for r in candidates {
                    let res = self.v_rel(p1, p2, body, &rho.extend(a, r), nesting)?;
                    match res {
                        Verdict::Proven => return Ok(Verdict::Proven),
                        Verdict::UpToBounds(_) => {
                            if best.is_none() {
                                best = Some(res);
                            }
                        }
                        Verdict::Disproven(_) => {}
                    }
                }
                Ok(best.unwrap_or_else(|| Verdict::bounded(Limit::CatalogExhausted)))
            }
            Type::Mu(..) | Type::Ref(_) => Err(CheckError::Unsupported(ty.clone())),
        }
    }

    /// `Δ; Γ ⊢ e1 ≈ e2 : ty`, checked over catalog-built `ρ` and
    /// corpus-built `γ`.
    pub fn log_equiv_check(
        &self,
        delta: &[Name],
        gamma: &TermCtx,
        e1: &Term,
        e2: &Term,
        ty: &Type,
    ) -> Result<Verdict, CheckError> {
        for e in [e1, e2] {
            let found = typecheck(&StoreTyping::new(), delta, gamma, e)?;
            if !found.alpha_eq(ty) {
                return Err(CheckError::Invalid(format!("`{e}` has type {found}, not {ty}")));
            }
        }
        let mut verdict = Verdict::Proven;
        let mut rhos = vec![RelSubst::new()];
        for a in delta {
            let mut next = Vec::new();
            for rho in &rhos {
                for r in self.catalog.entries() {
                    next.push(rho.extend(a, r.clone()));
                }
            }
            next.truncate(CLOSING_CAP);
            rhos = next;
        }
        if !delta.is_empty() {
            verdict = verdict.limited_by(Limit::Catalog);
        }
        let mut tried = 0;
        for rho in &rhos {
            let mut gammas: Vec<Vec<(Name, Term, Term)>> = vec![vec![]];
            for (x, t) in gamma {
                let (pairs, exhaustive) = self.related_pairs(t, rho)?;
                if !exhaustive {
                    verdict = verdict.limited_by(Limit::Corpus);
                }
                let mut next = Vec::new();
                for g in &gammas {
                    for (a, b) in &pairs {
                        let mut g2 = g.clone();
                        g2.push((x.clone(), a.clone(), b.clone()));
                        next.push(g2);
                    }
                }
                if next.len() > CLOSING_CAP {
                    next.truncate(CLOSING_CAP);
                    verdict = verdict.limited_by(Limit::Corpus);
                }
                gammas = next;
            }
            for g in gammas {
                if tried == CLOSING_CAP {
                    return Ok(verdict.limited_by(Limit::Corpus));
                }
                tried += 1;
                let close = |e: Term, left: bool| {
                    g.iter().fold(e, |acc, (x, a, b)| acc.subst(x, if left { a } else { b }))
                };
                let c1 = close(rho.left_term(e1), true);
                let c2 = close(rho.right_term(e2), false);
                let res = self.e_rel(&c1, &c2, ty, rho, self.nesting)?;
                if let Verdict::Disproven(w) = res {
                    let bindings: Vec<String> = g.iter().map(|(x, a, b)| format!("{x} = ({a}, {b})")).collect();
                    let detail = format!("under rho = {rho}, gamma = {{{}}}: {}", bindings.join(", "), w.detail);
                    return Ok(Verdict::Disproven(Witness { term: w.term, detail }));
                }
                verdict = verdict.and(res);
            }
        }
        Ok(verdict)
    }

    /// Checks that relating at `ty[ty2/a]` agrees with relating at `ty`
    /// with `a` interpreted by the relation of `ty2`. Returns Disproven on
    /// the first sample where exactly one side fails.
    pub fn compositionality_oracle(
        &self,
        ty: &Type,
        ty2: &Type,
        a: &Name,
        rho: &RelSubst,
        samples: &[(Term, Term)],
    ) -> Result<Verdict, CheckError> {
        let mut ints = BTreeSet::new();
        for (x, y) in samples {
            int_literals(x, &mut ints);
            int_literals(y, &mut ints);
        }
        let corpus = ValueCorpus::new(self.corpus.depth(), 0).with_extra_ints(ints);
        let inner = Relational {
            catalog: self.catalog.clone(),
            corpus,
            fuel: self.fuel,
            supplied: self.supplied.clone(),
            nesting: self.nesting,
        };
        let (graph, _) = inner.related_pairs(ty2, rho)?;
        let mut kept = Vec::new();
        for (x, y) in graph {
            if !inner.v_rel_member(&x, &y, ty2, rho)?.is_disproven() {
                kept.push((x, y));
            }
        }
        let r = FiniteRel { left: rho.left(ty2), right: rho.right(ty2), pairs: kept };
        let extended = rho.extend(a, r);
        let substituted = ty.subst(a, ty2);
        for (x, y) in samples {
            let direct = inner.v_rel_member(x, y, &substituted, rho)?;
            let semantic = inner.v_rel_member(x, y, ty, &extended)?;
            if direct.is_disproven() != semantic.is_disproven() {
                return Ok(Verdict::disproven(
                    Term::pair(x.clone(), y.clone()),
                    format!("syntactic: {}, semantic: {}", direct.label(), semantic.label()),
                ));
            }
        }
        Ok(Verdict::Proven)
    }
}

fn harvest(body: &Type, a: &Name, p1: &Term, p2: &Term, out: &mut Vec<(Term, Term)>) {
    match (body, p1, p2) {
        (Type::Var(b), _, _) if b == a => out.push((p1.clone(), p2.clone())),
        (Type::Prod(x, y), Term::Pair(l1, r1), Term::Pair(l2, r2)) => {
            harvest(x, a, l1, l2, out);
            harvest(y, a, r1, r2, out);
        }
        (Type::Sum(x, _), Term::Inl(l, _), Term::Inl(r, _)) => harvest(x, a, l, r, out),
        (Type::Sum(_, y), Term::Inr(l, _), Term::Inr(r, _)) => harvest(y, a, l, r, out),
        _ => {}
    }
}

fn int_literals(e: &Term, out: &mut BTreeSet<i64>) {
    if let Term::Int(n) = e {
        out.insert(*n);
    }
    for c in e.children() {
        int_literals(c, out);
    }
}

/// The parametricity consequences that can be run directly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FreeTheorem {
    /// `e : ∀α.α→α` returns its argument.
    Identity,
    /// `e : ∀α.α→Bool` ignores its argument.
    Constant,
    /// As [`FreeTheorem::Constant`], across two instantiations.
    ConstCrossType,
    /// `e : ∀α.(τ→α)→α` commutes with `k : τ→τk`.
    Continuation,
}

impl std::str::FromStr for FreeTheorem {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "identity" => Ok(FreeTheorem::Identity),
            "constant" => Ok(FreeTheorem::Constant),
            "constCrossType" | "const-cross-type" => Ok(FreeTheorem::ConstCrossType),
            "continuation" => Ok(FreeTheorem::Continuation),
            _ => Err(format!("unknown free theorem `{s}`")),
        }
    }
}

fn expect_type(e: &Term, want: &Type) -> Result<(), CheckError> {
    let found = typecheck_closed(e)?;
    if found.alpha_eq(want) {
        Ok(())
    } else {
        Err(CheckError::Invalid(format!("`{e}` has type {found}, not {want}")))
    }
}

fn value_of(e: &Term, fuel: usize) -> Result<Term, Verdict> {
    match run(e, fuel) {
        EvalResult::Value { value, .. } => Ok(value),
        EvalResult::Stuck { reason, .. } => Err(Verdict::disproven(e.clone(), format!("stuck: {reason}"))),
        EvalResult::FuelExhausted { .. } => Err(Verdict::bounded(Limit::Fuel)),
    }
}

fn poly(a: &str, body: Type) -> Type {
    Type::forall(a, body)
}

/// `e[ty] v ⟶* v`.
pub fn free_identity(e: &Term, ty: &Type, v: &Term, fuel: usize) -> Result<Verdict, CheckError> {
    expect_type(e, &poly("a", Type::arrow(Type::var("a"), Type::var("a"))))?;
    expect_type(v, ty)?;
    let app = Term::app(Term::ty_app(e.clone(), ty.clone()), v.clone());
    Ok(match value_of(&app, fuel) {
        Ok(r) if r.alpha_eq(v) => Verdict::Proven,
        Ok(r) => Verdict::disproven(app, format!("returned {r}, not {v}")),
        Err(verdict) => verdict,
    })
}

/// `e[ty1] v1` and `e[ty2] v2` reach the same boolean.
pub fn free_constant(e: &Term, ty1: &Type, v1: &Term, ty2: &Type, v2: &Term, fuel: usize) -> Result<Verdict, CheckError> {
    expect_type(e, &poly("a", Type::arrow(Type::var("a"), Type::Bool)))?;
    expect_type(v1, ty1)?;
    expect_type(v2, ty2)?;
    let a1 = Term::app(Term::ty_app(e.clone(), ty1.clone()), v1.clone());
    let a2 = Term::app(Term::ty_app(e.clone(), ty2.clone()), v2.clone());
    let (r1, r2) = match (value_of(&a1, fuel), value_of(&a2, fuel)) {
        (Ok(r1), Ok(r2)) => (r1, r2),
        (Err(v), _) | (_, Err(v)) => return Ok(v),
    };
    Ok(if r1 == r2 {
        Verdict::Proven
    } else {
        Verdict::disproven(Term::pair(a1, a2), format!("results {r1} and {r2} differ"))
    })
}

/// `e[tk] k` against `k (e[ty] (λx:ty.x))`.
pub fn free_continuation(rel: &Relational, e: &Term, ty: &Type, k: &Term, tk: &Type) -> Result<Verdict, CheckError> {
    let a = Type::var("a");
    expect_type(e, &poly("a", Type::arrow(Type::arrow(ty.clone(), a.clone()), a)))?;
    expect_type(k, &Type::arrow(ty.clone(), tk.clone()))?;
    let id = Term::lam("x", ty.clone(), Term::var("x"));
    let lhs = Term::app(Term::ty_app(e.clone(), tk.clone()), k.clone());
    let rhs = Term::app(k.clone(), Term::app(Term::ty_app(e.clone(), ty.clone()), id));
    if matches!(tk, Type::Bool | Type::Int) {
        let (r1, r2) = match (value_of(&lhs, rel.fuel), value_of(&rhs, rel.fuel)) {
            (Ok(r1), Ok(r2)) => (r1, r2),
            (Err(v), _) | (_, Err(v)) => return Ok(v),
        };
        Ok(if r1 == r2 {
            Verdict::Proven
        } else {
            Verdict::disproven(Term::pair(lhs, rhs), format!("results {r1} and {r2} differ"))
        })
    } else {
        rel.log_equiv_check(&[], &TermCtx::new(), &lhs, &rhs, tk)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{parse_relation_literal, parse_term, parse_type};

    fn rel() -> Relational {
        let corpus = ValueCorpus::new(3, 0);
        let catalog = Catalog::standard(&corpus, 16);
        Relational::new(catalog, corpus, 10_000)
    }

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn ty(s: &str) -> Type {
        parse_type(s).unwrap()
    }

    const PKG: &str = "ex a. a * (a -> Bool)";

    fn e1() -> Term {
        t(&format!("pack <Int, <1, \\x:Int. x = 0>> as {PKG}"))
    }

    fn e2() -> Term {
        t(&format!("pack <Bool, <true, \\x:Bool. not x>> as {PKG}"))
    }

    fn e3() -> Term {
        t(&format!("pack <Int, <1, \\x:Int. x = 1>> as {PKG}"))
    }

    #[test]
    fn relation_literals() {
        let r = FiniteRel::from_literal(&parse_relation_literal("R : Int ~ Bool { (1, true) }").unwrap()).unwrap();
        assert!(r.contains(&Term::Int(1), &Term::True));
        assert!(!r.contains(&Term::True, &Term::Int(1)));
        let bare = FiniteRel::from_literal(&parse_relation_literal("{ (1, true) }").unwrap()).unwrap();
        assert_eq!(bare, r);
        assert!(FiniteRel::from_literal(&parse_relation_literal("R : Int ~ Int { (1, true) }").unwrap()).is_err());
    }

    #[test]
    fn base_clauses() {
        let r = rel();
        let rho = RelSubst::new();
        assert!(r.v_rel_member(&Term::True, &Term::False, &Type::Bool, &rho).unwrap().is_disproven());
        assert_eq!(r.e_rel_member(&t("(\\x:Bool. x) true"), &Term::True, &Type::Bool, &rho).unwrap(), Verdict::Proven);
        assert!(r.e_rel_member(&Term::True, &Term::Int(1), &Type::Bool, &rho).unwrap().is_disproven());
        let lhs = t("(\\x:Int. x = 0) 1");
        let rhs = t("(\\x:Bool. not x) true");
        assert_eq!(r.e_rel_member(&lhs, &rhs, &Type::Bool, &rho).unwrap(), Verdict::Proven);
    }

    #[test]
    fn type_variables_use_the_relation() {
        let r = rel();
        let rex = FiniteRel::new(Type::Int, Type::Bool, vec![(Term::Int(1), Term::True)]).unwrap();
        let rho = RelSubst::new().extend(&Name::new("a"), rex);
        assert_eq!(r.v_rel_member(&Term::Int(1), &Term::True, &Type::var("a"), &rho).unwrap(), Verdict::Proven);
        assert!(r.v_rel_member(&Term::Int(2), &Term::True, &Type::var("a"), &rho).unwrap().is_disproven());
    }

    #[test]
    fn packages() {
        let rex = FiniteRel::new(Type::Int, Type::Bool, vec![(Term::Int(1), Term::True)]).unwrap();
        let r = rel().with_supplied(vec![rex]);
        let v = r.log_equiv_check(&[], &TermCtx::new(), &e1(), &e2(), &ty(PKG)).unwrap();
        assert_eq!(v, Verdict::Proven);
        let v = r.log_equiv_check(&[], &TermCtx::new(), &e1(), &e3(), &ty(PKG)).unwrap();
        assert_eq!(v, Verdict::bounded(Limit::CatalogExhausted));
        // The relation read off the packages suffices on its own.
        assert_eq!(rel().log_equiv_check(&[], &TermCtx::new(), &e1(), &e2(), &ty(PKG)).unwrap(), Verdict::Proven);
    }

    #[test]
    fn polymorphic_identity_is_self_related() {
        let id = t("/\\a. \\x:a. x");
        let v = rel().v_rel_member(&id, &id, &ty("all a. a -> a"), &RelSubst::new()).unwrap();
        assert_eq!(v, Verdict::bounded(Limit::Catalog));
        let yes = t("/\\a. \\x:a. true");
        let no = t("/\\a. \\x:a. false");
        let v = rel().v_rel_member(&yes, &no, &ty("all a. a -> Bool"), &RelSubst::new()).unwrap();
        assert!(v.is_disproven());
    }

    #[test]
    fn open_terms() {
        let gamma: TermCtx = [(Name::new("x"), Type::Bool)].into();
        let x = Term::var("x");
        assert_eq!(rel().log_equiv_check(&[], &gamma, &x, &x, &Type::Bool).unwrap(), Verdict::Proven);
        let v = rel().log_equiv_check(&[], &gamma, &x, &t("not x"), &Type::Bool).unwrap();
        assert!(v.is_disproven());
    }

    #[test]
    fn free_theorems() {
        let id = t("/\\a. \\x:a. x");
        assert_eq!(free_identity(&id, &Type::Bool, &Term::False, 100).unwrap(), Verdict::Proven);
        let k = t("/\\a. \\x:a. true");
        assert_eq!(free_constant(&k, &Type::Int, &Term::Int(1), &Type::Int, &Term::Int(2), 100).unwrap(), Verdict::Proven);
        let e = t("/\\a. \\f: Int -> a. f 3");
        let kf = t("\\n:Int. n = 3");
        assert_eq!(free_continuation(&rel(), &e, &Type::Int, &kf, &Type::Bool).unwrap(), Verdict::Proven);
    }

    #[test]
    fn compositionality_on_simple_types() {
        let r = rel();
        let a = Name::new("a");
        let samples = vec![(Term::True, Term::True), (Term::True, Term::False)];
        assert_eq!(r.compositionality_oracle(&Type::var("a"), &Type::Bool, &a, &RelSubst::new(), &samples).unwrap(), Verdict::Proven);
        let fs = vec![(t("\\x:Bool. x"), t("\\x:Bool. x")), (t("\\x:Bool. x"), t("\\x:Bool. not x"))];
        assert_eq!(r.compositionality_oracle(&ty("a -> a"), &Type::Bool, &a, &RelSubst::new(), &fs).unwrap(), Verdict::Proven);
    }

    #[test]
    fn catalog_shape() {
        let corpus = ValueCorpus::new(3, 0);
        let c = Catalog::standard(&corpus, 16);
        assert_eq!(c.len(), 16);
        assert!(c.entries().iter().any(|r| r.pairs().is_empty()));
        assert!(c.entries().iter().all(|r| FiniteRel::new(r.left.clone(), r.right.clone(), r.pairs.clone()).is_ok()));
    }
}
