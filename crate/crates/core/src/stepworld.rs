//! Step-indexed interpretations for recursive types and references.
//!
//! Worlds map locations to syntactic types; a location is in the
//! interpretation of `Ref τ` when the world assigns it a type α-equal to
//! `τ`. Future worlds and argument values are sampled, so acceptances are
//! qualified by bounds while refutations are concrete.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{step_in_place, Allocator, Config, Heap, Rule};
use crate::kernel::{Loc, Name, Term, Type};
use crate::logrel::{CheckError, Limit, ValueCorpus, Verdict, Witness};
use crate::statics::{typecheck, StoreTyping, TermCtx};
use crate::surface::{parse_world_literal, ParseError};

/// A finite map from locations to closed types.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct World(BTreeMap<Loc, Type>);

impl World {
    pub fn new() -> Self {
        World::default()
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        Ok(parse_world_literal(text)?.into_iter().collect())
    }

    pub fn get(&self, l: &Loc) -> Option<&Type> {
        self.0.get(l)
    }

    pub fn insert(&mut self, l: Loc, t: Type) {
        self.0.insert(l, t);
    }

    pub fn with(&self, l: Loc, t: Type) -> World {
        let mut w = self.clone();
        w.insert(l, t);
        w
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Loc, &Type)> {
        self.0.iter()
    }

    pub fn store_typing(&self) -> StoreTyping {
        self.0.clone()
    }

    /// A location not in the world.
    pub fn fresh(&self) -> Loc {
        Loc(self.0.keys().next_back().map_or(0, |l| l.0 + 1))
    }
}

impl FromIterator<(Loc, Type)> for World {
    fn from_iter<I: IntoIterator<Item = (Loc, Type)>>(it: I) -> Self {
        World(it.into_iter().collect())
    }
}

impl fmt::Display for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(l, t)| format!("{l} : {t}")).collect();
        write!(f, "W {{ {} }}", parts.join("; "))
    }
}

/// `w2 ⊒ w1`: `w2` keeps every assignment of `w1`.
pub fn future_world(w2: &World, w1: &World) -> bool {
    w1.iter().all(|(l, t)| w2.get(l).is_some_and(|t2| t2.alpha_eq(t)))
}

/// A finite set of indexed values, closed under smaller indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IndexedPredicate(BTreeSet<(usize, Term)>);

impl IndexedPredicate {
    /// The downward closure of `facts`.
    pub fn closure(facts: impl IntoIterator<Item = (usize, Term)>) -> Self {
        let mut set = BTreeSet::new();
        for (k, v) in facts {
            for j in 0..=k {
                set.insert((j, v.clone()));
            }
        }
        IndexedPredicate(set)
    }

    pub fn facts(&self) -> &BTreeSet<(usize, Term)> {
        &self.0
    }

    pub fn contains(&self, k: usize, v: &Term) -> bool {
        self.0.contains(&(k, v.clone()))
    }

    pub fn is_downward_closed(&self) -> bool {
        self.0.iter().all(|(k, v)| (0..*k).all(|j| self.0.contains(&(j, v.clone()))))
    }

    pub fn union(&self, other: &Self) -> Self {
        IndexedPredicate(self.0.union(&other.0).cloned().collect())
    }

    pub fn intersection(&self, other: &Self) -> Self {
        IndexedPredicate(self.0.intersection(&other.0).cloned().collect())
    }
}

/// The facts with index below `k`.
pub fn k_cut(k: usize, p: &IndexedPredicate) -> IndexedPredicate {
    IndexedPredicate(p.0.iter().filter(|(n, _)| *n < k).cloned().collect())
}

pub fn k_equal(k: usize, p: &IndexedPredicate, q: &IndexedPredicate) -> bool {
    k_cut(k, p) == k_cut(k, q)
}

/// Checks the step-indexed interpretations against sampled worlds and
/// corpus arguments.
pub struct StepChecker {
    pub corpus: ValueCorpus,
    pub fuel: usize,
    /// Number of sampled proper extensions per future-world quantifier.
    pub extensions: usize,
    pub seed: u64,
    memo: Mutex<HashMap<(usize, Term, Type, World), Verdict>>,
}

const MAX_ARGS: usize = 12;
const MAX_SUBSTS: usize = 64;

impl StepChecker {
    pub fn new(corpus: ValueCorpus, fuel: usize, seed: u64) -> Self {
        StepChecker { corpus, fuel, extensions: 3, seed, memo: Mutex::new(HashMap::new()) }
    }

    /// `(k, v) ∈ V[ty](w)`.
    pub fn v_member_k(&self, k: usize, v: &Term, ty: &Type, w: &World) -> Result<Verdict, CheckError> {
        if !ty.is_closed() {
            return Err(CheckError::OpenType(ty.clone()));
        }
        if !v.free_vars().is_empty() {
            return Err(CheckError::NotClosed(v.clone()));
        }
        self.vk(k, v, ty, w)
    }

    fn vk(&self, k: usize, v: &Term, ty: &Type, w: &World) -> Result<Verdict, CheckError> {
        let key = (k, v.clone(), ty.clone(), w.clone());
        if let Some(r) = self.memo.lock().unwrap().get(&key) {
            return Ok(r.clone());
        }
        let r = self.vk_uncached(k, v, ty, w)?;
        self.memo.lock().unwrap().insert(key, r.clone());
        Ok(r)
    }

    fn vk_uncached(&self, k: usize, v: &Term, ty: &Type, w: &World) -> Result<Verdict, CheckError> {
        if !v.is_value() {
            return Ok(Verdict::disproven(v.clone(), "not a value"));
        }
        let wrong = |what: &str| Ok(Verdict::disproven(v.clone(), format!("not {what} at {ty} (k={k})")));
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
                Term::Pair(x, y) => {
                    let first = self.vk(k, x, a, w)?;
                    if first.is_disproven() {
                        return Ok(first);
                    }
                    Ok(first.and(self.vk(k, y, b, w)?))
                }
                _ => wrong("a pair"),
            },
            Type::Sum(a, b) => match v {
                Term::Inl(x, _) => self.vk(k, x, a, w),
                Term::Inr(x, _) => self.vk(k, x, b, w),
                _ => wrong("an injection"),
            },
            Type::Mu(..) => match v {
                Term::Fold(..) if k == 0 => Ok(Verdict::Proven),
                Term::Fold(p, _) => self.vk(k - 1, p, &ty.unfold_mu().expect("mu"), w),
                _ => wrong("a fold"),
            },
            Type::Ref(t) => match v {
                Term::Loc(l) => match w.get(l) {
                    Some(found) if found.alpha_eq(t) => Ok(Verdict::Proven),
                    Some(found) => Ok(Verdict::disproven(v.clone(), format!("world assigns {found}, not {t}"))),
                    None => Ok(Verdict::disproven(v.clone(), "location outside the world")),
                },
                _ => wrong("a location"),
            },
            Type::Arrow(a, b) => {
                let Term::Lam(x, _, body) = v else { return wrong("a function") };
                let mut verdict = Verdict::UpToBounds(BTreeSet::from([Limit::Worlds, Limit::Corpus]));
                let mut indices = vec![k, k.div_ceil(2)];
                indices.dedup();
                // Without a reference in sight, extra cells cannot be observed.
                let worlds = if has_ref(ty) || !v.locations().is_empty() { self.future_worlds(w, ty) } else { vec![w.clone()] };
                for w2 in worlds {
                    let Some(h) = self.heap_for(&w2) else { continue };
                    for arg in self.arguments(a, &w2) {
                        for &j in &indices {
                            if self.vk(j, &arg, a, &w2)?.is_disproven() {
                                continue;
                            }
                            let r = self.ek(j, &body.subst(x, &arg), b, &w2, &h)?;
                            if let Verdict::Disproven(wit) = r {
                                let detail = format!("j={j}, argument {arg}, world {w2}: {}", wit.detail);
                                return Ok(Verdict::Disproven(Witness { term: wit.term, detail }));
                            }
                            verdict = verdict.and(r);
                        }
                    }
                }
                Ok(verdict)
            }
            Type::Forall(..) | Type::Exists(..) | Type::Var(_) => Err(CheckError::Unsupported(ty.clone())),
        }
    }

    /// `(k, e) ∈ E[ty](w)` when started from `h`.
    pub fn e_member_k(&self, k: usize, e: &Term, ty: &Type, w: &World, h: &Heap) -> Result<Verdict, CheckError> {
        if !ty.is_closed() {
            return Err(CheckError::OpenType(ty.clone()));
        }
        if !e.free_vars().is_empty() {
            return Err(CheckError::NotClosed(e.clone()));
        }
        self.ek(k, e, ty, w, h)
    }

    fn ek(&self, k: usize, e: &Term, ty: &Type, w: &World, h: &Heap) -> Result<Verdict, CheckError> {
        let mut cur = Config::with_heap(h.clone(), e.clone());
        let mut w2 = w.clone();
        let mut alloc = Allocator::Sequential;
        for i in 0..k {
            if cur.expr.is_value() {
                let sat = self.heap_sat(k - i, &cur.heap, &w2)?;
                if sat.is_disproven() {
                    return Ok(sat);
                }
                return Ok(sat.and(self.vk(k - i, &cur.expr, ty, &w2)?));
            }
            if i + 1 == k {
                break;
            }
            if i >= self.fuel {
                return Ok(Verdict::bounded(Limit::Fuel));
            }
            match step_in_place(&mut cur, &mut alloc) {
                Ok(Some(Rule::Alloc)) => {
                    let l = cur.heap.locs().last().expect("allocation adds a location");
                    let stored = cur.heap.get(&l).expect("allocated").clone();
                    match typecheck(&w2.store_typing(), &[], &TermCtx::new(), &stored) {
                        Ok(t) => w2.insert(l, t),
                        Err(err) => {
                            return Ok(Verdict::disproven(stored, format!("allocated value is ill-typed: {err}")))
                        }
                    }
                }
                Ok(_) => {}
                Err(reason) => {
                    return Ok(Verdict::disproven(cur.expr, format!("stuck after {i} steps: {reason}")));
                }
            }
        }
        // No irreducible state within the index.
        Ok(Verdict::Proven)
    }

    /// `h :_k w`. Stored values are checked one index down, which keeps the
    /// check well founded when a cell holds a function reading that cell.
    pub fn heap_sat(&self, k: usize, h: &Heap, w: &World) -> Result<Verdict, CheckError> {
        let dh: BTreeSet<Loc> = h.locs().collect();
        let dw: BTreeSet<Loc> = w.iter().map(|(l, _)| *l).collect();
        if dh != dw {
            return Ok(Verdict::Disproven(Witness::detail("heap and world have different domains")));
        }
        let mut verdict = Verdict::Proven;
        let Some(j) = k.checked_sub(1) else { return Ok(verdict) };
        for (l, t) in w.iter() {
            let r = self.vk(j, h.get(l).expect("same domain"), t, w)?;
            if let Verdict::Disproven(wit) = r {
                return Ok(Verdict::Disproven(Witness { term: Some(Term::Loc(*l)), detail: format!("at {l}: {}", wit.detail) }));
            }
            verdict = verdict.and(r);
        }
        Ok(verdict)
    }

    /// Checks `Γ ⊢ e : ty` semantically at index `k` and world `w`, over
    /// corpus-built substitutions and one heap satisfying `w`.
    pub fn sem_safe_k(&self, gamma: &TermCtx, e: &Term, ty: &Type, k: usize, w: &World) -> Result<Verdict, CheckError> {
        let found = typecheck(&w.store_typing(), &[], gamma, e)?;
        if !found.alpha_eq(ty) {
            return Err(CheckError::Invalid(format!("`{e}` has type {found}, not {ty}")));
        }
        let Some(h) = self.heap_for(w) else {
            return Ok(Verdict::bounded(Limit::Worlds));
        };
        let mut substs: Vec<Vec<(Name, Term)>> = vec![vec![]];
        let mut verdict = Verdict::Proven;
        for (x, t) in gamma {
            let mut next = Vec::new();
            for s in &substs {
                for v in self.arguments(t, w) {
                    if self.vk(k, &v, t, w)?.is_disproven() {
                        continue;
                    }
                    let mut s2 = s.clone();
                    s2.push((x.clone(), v));
                    next.push(s2);
                }
            }
            verdict = verdict.limited_by(Limit::Corpus);
            next.truncate(MAX_SUBSTS);
            substs = next;
        }
        for s in substs {
            let closed = s.iter().fold(e.clone(), |acc, (x, v)| acc.subst(x, v));
            let r = self.ek(k, &closed, ty, w, &h)?;
            if let Verdict::Disproven(wit) = r {
                let binds: Vec<String> = s.iter().map(|(x, v)| format!("{x} = {v}")).collect();
                let detail = format!("gamma = {{{}}}: {}", binds.join(", "), wit.detail);
                return Ok(Verdict::Disproven(Witness { term: wit.term, detail }));
            }
            verdict = verdict.and(r);
        }
        Ok(verdict)
    }

    /// `w` itself plus a few extensions at fresh locations. The sample
    /// depends only on `w`, `ty` and the seed.
    pub fn future_worlds(&self, w: &World, ty: &Type) -> Vec<World> {
        let mut pool = vec![Type::Bool, Type::Int];
        for t in ty.subterms() {
            if let Type::Ref(inner) = t {
                if inner.is_closed() && !pool.iter().any(|p| p.alpha_eq(&inner)) {
                    pool.push(*inner);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (w.len() as u64).wrapping_mul(0x9e37_79b9));
        let mut out = vec![w.clone()];
        for _ in 0..self.extensions {
            let t = pool.choose(&mut rng).expect("nonempty").clone();
            let ext = w.with(w.fresh(), t);
            if self.heap_for(&ext).is_some() && !out.contains(&ext) {
                out.push(ext);
            }
        }
        out
    }

    /// A heap whose cells hold sample values of the world's types.
    pub fn heap_for(&self, w: &World) -> Option<Heap> {
        let mut h = Heap::new();
        for (l, t) in w.iter() {
            h.insert(*l, self.sample(t, w, 3)?);
        }
        Some(h)
    }

    fn sample(&self, ty: &Type, w: &World, depth: usize) -> Option<Term> {
        if !has_ref(ty) {
            if let Some(v) = self.corpus.values(ty).first() {
                return Some(v.clone());
            }
        }
        if depth == 0 {
            return None;
        }
        match ty {
            Type::Ref(t) => w.iter().find(|(_, u)| u.alpha_eq(t)).map(|(l, _)| Term::Loc(*l)),
            Type::Prod(a, b) => Some(Term::pair(self.sample(a, w, depth - 1)?, self.sample(b, w, depth - 1)?)),
            Type::Sum(a, b) => self
                .sample(a, w, depth - 1)
                .map(|v| Term::inl(v, ty.clone()))
                .or_else(|| self.sample(b, w, depth - 1).map(|v| Term::inr(v, ty.clone()))),
            Type::Arrow(a, b) => Some(Term::lam("x", (**a).clone(), self.sample(b, w, depth - 1)?)),
            Type::Mu(..) => Some(Term::fold(self.sample(&ty.unfold_mu()?, w, depth - 1)?, ty.clone())),
            _ => None,
        }
    }

    /// Candidate arguments of type `ty` under `w`.
    fn arguments(&self, ty: &Type, w: &World) -> Vec<Term> {
        let mut out: Vec<Term> = if has_ref(ty) { vec![] } else { self.corpus.values(ty).to_vec() };
        if let Type::Ref(t) = ty {
            out.extend(w.iter().filter(|(_, u)| u.alpha_eq(t)).map(|(l, _)| Term::Loc(*l)));
        }
        if out.is_empty() {
            out.extend(self.sample(ty, w, 3));
        }
        out.truncate(MAX_ARGS);
        out
    }
}

fn has_ref(t: &Type) -> bool {
    t.subterms().iter().any(|s| matches!(s, Type::Ref(_)))
}
