//! Random type-directed generation of well-typed terms.
//!
//! The generator works goal-first: given a target type it tries a shuffled
//! list of strategies (leaves, introduction forms, eliminations of bound
//! variables, let-bindings written as β-redexes, conditionals, ...) and
//! backtracks when a strategy cannot be completed within its size budget.
//! Everything is driven by one seeded ChaCha stream, so output is a pure
//! function of the arguments.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::enumerate::{tyvar_name, var_name};
use crate::kernel::{Feature, LangLevel, Name, Term, Type};
use crate::statics::TermCtx;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no inhabitant of `{ty}` found within size {size}")]
pub struct GenerationFailed {
    pub ty: Type,
    pub size: usize,
}

type Gamma = Vec<(Name, Type)>;

const WORK_LIMIT: usize = 1500;
const RESTARTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Strategy {
    Leaf,
    Intro,
    Eliminate,
    Let,
    If,
    Case,
    Unpack,
    TyApp,
    Project,
    Deref,
    Assign,
}

pub struct Generator {
    level: LangLevel,
    rng: ChaCha8Rng,
    work: usize,
}

/// A term with `delta; gamma ⊢ e : ty` and `size(e) ≤ size`.
pub fn gen_well_typed(
    level: LangLevel,
    delta: &[Name],
    gamma: &TermCtx,
    ty: &Type,
    size: usize,
    seed: u64,
) -> Result<Term, GenerationFailed> {
    let gamma: Gamma = gamma.iter().map(|(x, t)| (x.clone(), t.clone())).collect();
    // A search that wandered into a dead end is restarted from a fresh stream.
    let mut g = Generator::new(level, seed);
    for _ in 0..RESTARTS {
        g.work = WORK_LIMIT;
        if let Some(e) = g.term(delta, &gamma, ty, size) {
            return Ok(e);
        }
    }
    Err(GenerationFailed { ty: ty.clone(), size })
}

/// A random closed type built from the features of `level`.
pub fn gen_type(level: LangLevel, depth: usize, seed: u64) -> Type {
    Generator::new(level, seed).random_type(&[], depth)
}

impl Generator {
    pub fn new(level: LangLevel, seed: u64) -> Self {
        Generator { level, rng: ChaCha8Rng::seed_from_u64(seed), work: WORK_LIMIT }
    }

    fn has(&self, f: Feature) -> bool {
        self.level.has(f)
    }

    pub fn random_type(&mut self, delta: &[Name], depth: usize) -> Type {
        let mut leaves = vec![Type::Bool];
        if self.has(Feature::Int) {
            leaves.push(Type::Int);
        }
        leaves.extend(delta.iter().map(|a| Type::Var(a.clone())));
        if depth == 0 || self.rng.gen_bool(0.35) {
            return leaves.choose(&mut self.rng).unwrap().clone();
        }
        let mut shapes = vec![0];
        for (f, s) in [
            (Feature::Pairs, 1),
            (Feature::Sums, 2),
            (Feature::Ref, 3),
            (Feature::SystemF, 4),
            (Feature::Existential, 5),
            (Feature::Mu, 6),
        ] {
            if self.has(f) {
                shapes.push(s);
            }
        }
        match *shapes.choose(&mut self.rng).unwrap() {
            0 => Type::arrow(self.random_type(delta, depth - 1), self.random_type(delta, depth - 1)),
            1 => Type::prod(self.random_type(delta, depth - 1), self.random_type(delta, depth - 1)),
            2 => Type::sum(self.random_type(delta, depth - 1), self.random_type(delta, depth - 1)),
            3 => Type::reference(self.random_type(delta, depth - 1)),
            s => {
                let a = tyvar_name(delta);
                let mut d2 = delta.to_vec();
                d2.push(a.clone());
                let body = self.random_type(&d2, depth - 1);
                match s {
                    4 => Type::Forall(a, Box::new(body)),
                    5 => Type::Exists(a, Box::new(body)),
                    _ => self.random_mu(delta, depth),
                }
            }
        }
    }

    /// Recursive types whose values are easy to build: lists, streams of
    /// functions, and the self-application type.
    fn random_mu(&mut self, delta: &[Name], depth: usize) -> Type {
        let a = tyvar_name(delta);
        let av = Type::Var(a.clone());
        let elem = if self.has(Feature::Int) { Type::Int } else { Type::Bool };
        let mut bodies = vec![Type::arrow(av.clone(), av.clone()), Type::arrow(av.clone(), Type::Bool)];
        if self.has(Feature::Sums) && self.has(Feature::Pairs) {
            bodies.push(Type::sum(Type::Bool, Type::prod(elem.clone(), av.clone())));
        }
        if self.has(Feature::Sums) {
            bodies.push(Type::sum(Type::Bool, av.clone()));
        }
        if depth > 1 && self.has(Feature::Pairs) {
            bodies.push(Type::prod(elem, Type::arrow(Type::Bool, av)));
        }
        let body = bodies.choose(&mut self.rng).unwrap().clone();
        Type::Mu(a, Box::new(body))
    }

    /// Types offered as intermediate types for lets, cases and projections.
    fn pool(&mut self, delta: &[Name], gamma: &Gamma, ty: &Type) -> Vec<Type> {
        let mut pool = vec![Type::Bool, Type::arrow(Type::Bool, Type::Bool)];
        if self.has(Feature::Int) {
            pool.push(Type::Int);
            pool.push(Type::arrow(Type::Int, Type::Bool));
        }
        if self.has(Feature::Pairs) {
            pool.push(Type::prod(Type::Bool, if self.has(Feature::Int) { Type::Int } else { Type::Bool }));
        }
        if self.has(Feature::Sums) {
            pool.push(Type::sum(Type::Bool, if self.has(Feature::Int) { Type::Int } else { Type::Bool }));
        }
        if self.has(Feature::Ref) {
            pool.push(Type::reference(Type::Bool));
            pool.push(Type::reference(ty.clone()));
        }
        if self.has(Feature::SystemF) {
            pool.push(Type::forall("a", Type::arrow(Type::var("a"), Type::var("a"))));
        }
        if self.has(Feature::Existential) && self.has(Feature::Pairs) {
            pool.push(Type::exists("a", Type::prod(Type::var("a"), Type::arrow(Type::var("a"), Type::Bool))));
        }
        if self.has(Feature::Mu) {
            let m = self.random_mu(delta, 2);
            pool.push(m);
        }
        pool.extend(delta.iter().map(|a| Type::Var(a.clone())));
        pool.extend(gamma.iter().map(|(_, t)| t.clone()));
        pool.push(ty.clone());
        pool.retain(|t| t.free_vars().iter().all(|a| delta.contains(a)));
        pool
    }

    fn pick(&mut self, pool: &[Type]) -> Type {
        pool.choose(&mut self.rng).unwrap().clone()
    }

    /// Splits `budget` into `k` random positive parts.
    fn split(&mut self, budget: usize, k: usize) -> Vec<usize> {
        let mut parts = vec![1; k];
        let mut rest = budget - k;
        for i in 0..k {
            if rest == 0 {
                break;
            }
            let share = if i + 1 == k { rest } else { self.rng.gen_range(0..=rest) };
            parts[i] += share;
            rest -= share;
        }
        parts.shuffle(&mut self.rng);
        parts
    }

    pub fn term(&mut self, delta: &[Name], gamma: &Gamma, ty: &Type, budget: usize) -> Option<Term> {
        if budget == 0 || self.work == 0 {
            return None;
        }
        self.work -= 1;
        let mut strategies: Vec<(Strategy, u32)> = vec![(Strategy::Leaf, if budget <= 2 { 8 } else { 2 })];
        if budget >= 2 {
            strategies.push((Strategy::Intro, 6));
            strategies.push((Strategy::Eliminate, 4));
            if self.has(Feature::Ref) {
                strategies.push((Strategy::Deref, 1));
            }
        }
        if budget >= 3 {
            if self.has(Feature::Pairs) {
                strategies.push((Strategy::Project, 1));
            }
            if self.has(Feature::SystemF) {
                strategies.push((Strategy::TyApp, 1));
            }
            if self.has(Feature::Ref) {
                strategies.push((Strategy::Assign, 1));
            }
        }
        if budget >= 4 {
            strategies.push((Strategy::Let, 3));
            strategies.push((Strategy::If, 2));
            if self.has(Feature::Sums) {
                strategies.push((Strategy::Case, 1));
            }
            if self.has(Feature::Existential) && self.has(Feature::Pairs) {
                strategies.push((Strategy::Unpack, 1));
            }
        }
        while !strategies.is_empty() {
            let i = {
                let total: u32 = strategies.iter().map(|(_, w)| w).sum();
                let mut r = self.rng.gen_range(0..total);
                strategies.iter().position(|(_, w)| {
                    if r < *w {
                        true
                    } else {
                        r -= w;
                        false
                    }
                })?
            };
            let (s, _) = strategies.remove(i);
            if let Some(e) = self.attempt(s, delta, gamma, ty, budget) {
                return Some(e);
            }
            if self.work == 0 {
                return None;
            }
        }
        None
    }

    fn attempt(&mut self, s: Strategy, delta: &[Name], gamma: &Gamma, ty: &Type, budget: usize) -> Option<Term> {
        match s {
            Strategy::Leaf => self.leaf(gamma, ty),
            Strategy::Intro => self.intro(delta, gamma, ty, budget),
            Strategy::Eliminate => {
                let mut vars: Vec<(Name, Type)> = visible(gamma).into_iter().filter(|(_, t)| reaches(t, ty, 3)).collect();
                vars.shuffle(&mut self.rng);
                for (x, t) in vars {
                    if let Some(e) = self.eliminate(delta, gamma, Term::Var(x), &t, ty, budget - 1, 3) {
                        return Some(e);
                    }
                }
                None
            }
            Strategy::Let => {
                let pool = self.pool(delta, gamma, ty);
                let a = self.pick(&pool);
                let parts = self.split(budget - 2, 2);
                let bound = self.term(delta, gamma, &a, parts[0])?;
                let x = var_name(gamma);
                let mut g2 = gamma.clone();
                g2.push((x.clone(), a.clone()));
                let body = self.term(delta, &g2, ty, parts[1])?;
                Some(Term::app(Term::lam(x, a, body), bound))
            }
            Strategy::If => {
                let parts = self.split(budget - 1, 3);
                let c = self.term(delta, gamma, &Type::Bool, parts[0])?;
                let t = self.term(delta, gamma, ty, parts[1])?;
                let f = self.term(delta, gamma, ty, parts[2])?;
                Some(Term::if_(c, t, f))
            }
            Strategy::Case => {
                let pool = self.pool(delta, gamma, ty);
                let (a, b) = (self.pick(&pool), self.pick(&pool));
                let parts = self.split(budget - 1, 3);
                let scrutinee = self.term(delta, gamma, &Type::sum(a.clone(), b.clone()), parts[0])?;
                let x = var_name(gamma);
                let mut gl = gamma.clone();
                gl.push((x.clone(), a));
                let mut gr = gamma.clone();
                gr.push((x.clone(), b));
                let l = self.term(delta, &gl, ty, parts[1])?;
                let r = self.term(delta, &gr, ty, parts[2])?;
                Some(Term::case(scrutinee, x.clone(), l, x, r))
            }
            Strategy::Unpack => {
                let pool = self.pool(delta, gamma, ty);
                let exists: Vec<Type> = pool.into_iter().filter(|t| matches!(t, Type::Exists(..))).collect();
                let e = exists.choose(&mut self.rng)?.clone();
                let Type::Exists(b, body) = &e else { unreachable!() };
                let parts = self.split(budget - 1, 2);
                let packed = self.term(delta, gamma, &e, parts[0])?;
                let a = tyvar_name(delta);
                let x = var_name(gamma);
                let mut d2 = delta.to_vec();
                d2.push(a.clone());
                let mut g2 = gamma.clone();
                g2.push((x.clone(), body.subst(b, &Type::Var(a.clone()))));
                let inner = self.term(&d2, &g2, ty, parts[1])?;
                Some(Term::unpack(a, x, packed, inner))
            }
            Strategy::TyApp => {
                // Abstract some occurrences of a subterm of the goal.
                let mut subs = ty.subterms();
                subs.retain(|s| s.free_vars().iter().all(|a| delta.contains(a)));
                let t = subs.choose(&mut self.rng)?.clone();
                let a = tyvar_name(delta);
                let abstracted = abstract_type(ty, &t, &Type::Var(a.clone()), &mut self.rng);
                let poly = Type::Forall(a, Box::new(abstracted));
                let f = self.term(delta, gamma, &poly, budget - 1)?;
                Some(Term::ty_app(f, t))
            }
            Strategy::Project => {
                let pool = self.pool(delta, gamma, ty);
                let other = self.pick(&pool);
                if self.rng.gen_bool(0.5) {
                    Some(Term::fst(self.term(delta, gamma, &Type::prod(ty.clone(), other), budget - 1)?))
                } else {
                    Some(Term::snd(self.term(delta, gamma, &Type::prod(other, ty.clone()), budget - 1)?))
                }
            }
            Strategy::Deref => Some(Term::deref(self.term(delta, gamma, &Type::reference(ty.clone()), budget - 1)?)),
            Strategy::Assign => {
                let parts = self.split(budget - 1, 2);
                let l = self.term(delta, gamma, &Type::reference(ty.clone()), parts[0])?;
                let r = self.term(delta, gamma, ty, parts[1])?;
                Some(Term::assign(l, r))
            }
        }
    }

    fn leaf(&mut self, gamma: &Gamma, ty: &Type) -> Option<Term> {
        let mut options: Vec<Term> =
            visible(gamma).into_iter().filter(|(_, t)| t.alpha_eq(ty)).map(|(x, _)| Term::Var(x)).collect();
        match ty {
            Type::Bool => options.extend([Term::True, Term::False]),
            Type::Int if self.has(Feature::Int) => {
                let n = if self.rng.gen_bool(0.9) { self.rng.gen_range(-3..=3) } else { self.rng.gen() };
                options.push(Term::Int(n));
            }
            _ => {}
        }
        options.choose(&mut self.rng).cloned()
    }

    fn intro(&mut self, delta: &[Name], gamma: &Gamma, ty: &Type, budget: usize) -> Option<Term> {
        match ty {
            Type::Arrow(a, b) => {
                let x = var_name(gamma);
                let mut g2 = gamma.clone();
                g2.push((x.clone(), (**a).clone()));
                let body = self.term(delta, &g2, b, budget - 1)?;
                Some(Term::lam(x, (**a).clone(), body))
            }
            Type::Prod(a, b) if self.has(Feature::Pairs) && budget >= 3 => {
                let parts = self.split(budget - 1, 2);
                let l = self.term(delta, gamma, a, parts[0])?;
                let r = self.term(delta, gamma, b, parts[1])?;
                Some(Term::pair(l, r))
            }
            Type::Sum(a, b) if self.has(Feature::Sums) => {
                if self.rng.gen_bool(0.5) {
                    Some(Term::inl(self.term(delta, gamma, a, budget - 1)?, ty.clone()))
                } else {
                    Some(Term::inr(self.term(delta, gamma, b, budget - 1)?, ty.clone()))
                }
            }
            Type::Forall(a, body) if self.has(Feature::SystemF) => {
                let b = tyvar_name(delta);
                let mut d2 = delta.to_vec();
                d2.push(b.clone());
                let inner = self.term(&d2, gamma, &body.subst(a, &Type::Var(b.clone())), budget - 1)?;
                Some(Term::ty_lam(b, inner))
            }
            Type::Exists(a, body) if self.has(Feature::Existential) => {
                let mut witnesses = vec![Type::Bool];
                if self.has(Feature::Int) {
                    witnesses.push(Type::Int);
                }
                witnesses.push(Type::arrow(Type::Bool, Type::Bool));
                witnesses.extend(delta.iter().map(|a| Type::Var(a.clone())));
                let w = witnesses.choose(&mut self.rng).unwrap().clone();
                let payload = self.term(delta, gamma, &body.subst(a, &w), budget - 1)?;
                Some(Term::pack(w, payload, ty.clone()))
            }
            Type::Mu(..) if self.has(Feature::Mu) => {
                let unrolled = ty.unfold_mu()?;
                Some(Term::fold(self.term(delta, gamma, &unrolled, budget - 1)?, ty.clone()))
            }
            Type::Ref(a) if self.has(Feature::Ref) => Some(Term::alloc(self.term(delta, gamma, a, budget - 1)?)),
            Type::Bool => {
                if self.has(Feature::Int) && budget >= 3 && self.rng.gen_bool(0.5) {
                    let parts = self.split(budget - 1, 2);
                    let l = self.term(delta, gamma, &Type::Int, parts[0])?;
                    let r = self.term(delta, gamma, &Type::Int, parts[1])?;
                    Some(Term::int_eq(l, r))
                } else {
                    Some(Term::not(self.term(delta, gamma, &Type::Bool, budget - 1)?))
                }
            }
            _ => None,
        }
    }

    /// Applies eliminators to `e : have` until it has type `want`.
    #[allow(clippy::too_many_arguments)]
    fn eliminate(
        &mut self,
        delta: &[Name],
        gamma: &Gamma,
        e: Term,
        have: &Type,
        want: &Type,
        budget: usize,
        depth: usize,
    ) -> Option<Term> {
        if have.alpha_eq(want) {
            return Some(e);
        }
        if budget == 0 || depth == 0 {
            return None;
        }
        match have {
            Type::Arrow(a, b) if reaches(b, want, depth) && budget >= 2 => {
                let parts = self.split(budget, 2);
                let arg = self.term(delta, gamma, a, parts[0])?;
                self.eliminate(delta, gamma, Term::app(e, arg), b, want, parts[1] - 1, depth)
            }
            Type::Prod(a, b) => {
                if reaches(a, want, depth) && (!reaches(b, want, depth) || self.rng.gen_bool(0.5)) {
                    self.eliminate(delta, gamma, Term::fst(e), a, want, budget - 1, depth)
                } else {
                    self.eliminate(delta, gamma, Term::snd(e), b, want, budget - 1, depth)
                }
            }
            Type::Forall(a, body) => {
                let inst = if body.subst(a, want).alpha_eq(want) || reaches(&body.subst(a, want), want, depth) {
                    want.clone()
                } else {
                    Type::Bool
                };
                let next = body.subst(a, &inst);
                self.eliminate(delta, gamma, Term::ty_app(e, inst), &next, want, budget - 1, depth)
            }
            Type::Mu(..) => {
                let next = have.unfold_mu()?;
                self.eliminate(delta, gamma, Term::unfold(e), &next, want, budget - 1, depth - 1)
            }
            Type::Ref(a) => self.eliminate(delta, gamma, Term::deref(e), a, want, budget - 1, depth),
            _ => None,
        }
    }
}

/// Innermost binding of each name.
fn visible(gamma: &Gamma) -> Vec<(Name, Type)> {
    let mut out: Vec<(Name, Type)> = Vec::new();
    for (x, t) in gamma.iter().rev() {
        if !out.iter().any(|(y, _)| y == x) {
            out.push((x.clone(), t.clone()));
        }
    }
    out
}

/// Whether some chain of eliminators takes `have` to `want`.
fn reaches(have: &Type, want: &Type, depth: usize) -> bool {
    if have.alpha_eq(want) {
        return true;
    }
    if depth == 0 {
        return false;
    }
    match have {
        Type::Arrow(_, b) => reaches(b, want, depth),
        Type::Prod(a, b) => reaches(a, want, depth) || reaches(b, want, depth),
        Type::Ref(a) => reaches(a, want, depth),
        Type::Forall(a, body) => reaches(&body.subst(a, want), want, depth) || reaches(&body.subst(a, &Type::Bool), want, depth),
        Type::Mu(..) => have.unfold_mu().is_some_and(|u| reaches(&u, want, depth - 1)),
        _ => false,
    }
}

/// Replaces a random nonempty subset of the occurrences of `target` in `t`.
fn abstract_type(t: &Type, target: &Type, var: &Type, rng: &mut ChaCha8Rng) -> Type {
    fn go(t: &Type, target: &Type, var: &Type, rng: &mut ChaCha8Rng, hit: &mut bool) -> Type {
        if t == target && (!*hit || rng.gen_bool(0.6)) {
            *hit = true;
            return var.clone();
        }
        match t {
            Type::Arrow(a, b) => Type::arrow(go(a, target, var, rng, hit), go(b, target, var, rng, hit)),
            Type::Prod(a, b) => Type::prod(go(a, target, var, rng, hit), go(b, target, var, rng, hit)),
            Type::Sum(a, b) => Type::sum(go(a, target, var, rng, hit), go(b, target, var, rng, hit)),
            Type::Ref(a) => Type::reference(go(a, target, var, rng, hit)),
            // Do not abstract under binders: the target might mention the bound name.
            _ => t.clone(),
        }
    }
    let mut hit = false;
    go(t, target, var, rng, &mut hit)
}
