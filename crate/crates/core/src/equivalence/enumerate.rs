//! Exhaustive, type-directed enumeration of terms and one-hole contexts.
//!
//! Every enumerated term has exactly the requested size. Elimination forms
//! need an intermediate type that the target does not determine (the
//! argument of an application, the scrutinee of a case, ...); those are
//! drawn from a finite universe: the caller's base types plus every
//! subterm of a type bound in Γ. Elimination forms are only produced at
//! universe types; other types are reached by introduction alone. Binders get depth-indexed names, so no two
//! results are α-equivalent.

use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use crate::kernel::{Feature, LangLevel, Name, Term, Type};
use crate::statics::HoleTyping;

type Gamma = Vec<(Name, Type)>;
type EnvId = usize;
type TyId = usize;
type Key = (EnvId, TyId, usize, bool);

struct Form {
    specs: Vec<Spec>,
    make: Rc<dyn Fn(&[Term]) -> Term>,
}

#[derive(Clone, Copy)]
struct Spec {
    env: EnvId,
    ty: TyId,
}

struct Env {
    delta: Vec<Name>,
    gamma: Gamma,
    universe: Vec<Type>,
}

pub struct Enumerator {
    level: LangLevel,
    base: Vec<Type>,
    int_pool: Vec<i64>,
    hole: Option<HoleTyping>,
    envs: Vec<Env>,
    env_ids: HashMap<(Vec<Name>, Gamma), EnvId>,
    types: Vec<Type>,
    type_ids: HashMap<Type, TyId>,
    forms: HashMap<(EnvId, TyId), Rc<Vec<Form>>>,
    memo: HashMap<Key, Rc<Vec<Term>>>,
    counts: HashMap<Key, u128>,
}

pub fn var_name(gamma: &[(Name, Type)]) -> Name {
    let mut i = gamma.len();
    loop {
        let n = Name::from(format!("x{i}"));
        if !gamma.iter().any(|(x, _)| *x == n) {
            return n;
        }
        i += 1;
    }
}

pub fn tyvar_name(delta: &[Name]) -> Name {
    let mut i = delta.len();
    loop {
        let n = Name::from(format!("a{i}"));
        if !delta.contains(&n) {
            return n;
        }
        i += 1;
    }
}

/// Closure of `types` under taking subterms, deduplicated up to α.
pub fn subterm_closure(types: &[Type]) -> Vec<Type> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for t in types {
        for s in t.subterms() {
            if seen.insert(s.canonical()) {
                out.push(s);
            }
        }
    }
    out
}

impl Enumerator {
    pub fn new(level: LangLevel, base: &[Type]) -> Self {
        let mut seeds = vec![Type::Bool];
        if level.has(Feature::Int) {
            seeds.push(Type::Int);
        }
        seeds.extend(base.iter().cloned());
        Enumerator {
            level,
            base: subterm_closure(&seeds),
            int_pool: vec![0, 1],
            hole: None,
            envs: Vec::new(),
            env_ids: HashMap::new(),
            types: Vec::new(),
            type_ids: HashMap::new(),
            forms: HashMap::new(),
            memo: HashMap::new(),
            counts: HashMap::new(),
        }
    }

    fn reset(&mut self) {
        self.envs.clear();
        self.env_ids.clear();
        self.types.clear();
        self.type_ids.clear();
        self.forms.clear();
        self.memo.clear();
        self.counts.clear();
    }

    /// Enables context enumeration with the given hole typing.
    pub fn with_hole(mut self, hole: HoleTyping) -> Self {
        let mut seeds = self.base.clone();
        seeds.push(hole.ty.clone());
        seeds.extend(hole.gamma.values().cloned());
        self.base = subterm_closure(&seeds);
        self.hole = Some(hole);
        self.reset();
        self
    }

    pub fn with_int_pool(mut self, pool: Vec<i64>) -> Self {
        self.int_pool = pool;
        self.reset();
        self
    }

    pub fn level(&self) -> LangLevel {
        self.level
    }

    /// The intermediate types available under `delta; gamma`.
    pub fn universe(&self, delta: &[Name], gamma: &[(Name, Type)]) -> Vec<Type> {
        let mut seeds = self.base.clone();
        seeds.extend(gamma.iter().map(|(_, t)| t.clone()));
        subterm_closure(&seeds)
            .into_iter()
            .filter(|t| t.free_vars().iter().all(|a| delta.contains(a)))
            .collect()
    }

    fn env(&mut self, delta: Vec<Name>, gamma: Gamma) -> EnvId {
        let key = (delta, gamma);
        if let Some(&id) = self.env_ids.get(&key) {
            return id;
        }
        let universe = self.universe(&key.0, &key.1);
        let id = self.envs.len();
        self.envs.push(Env { delta: key.0.clone(), gamma: key.1.clone(), universe });
        self.env_ids.insert(key, id);
        id
    }

    fn ty(&mut self, t: Type) -> TyId {
        if let Some(&id) = self.type_ids.get(&t) {
            return id;
        }
        let id = self.types.len();
        self.types.push(t.clone());
        self.type_ids.insert(t, id);
        id
    }

    /// All terms of exactly `size` with `delta; gamma ⊢ e : ty`.
    pub fn terms(&mut self, delta: &[Name], gamma: &[(Name, Type)], ty: &Type, size: usize) -> Rc<Vec<Term>> {
        let s = Spec { env: self.env(delta.to_vec(), gamma.to_vec()), ty: self.ty(ty.clone()) };
        self.gen(s, size, false)
    }

    /// All contexts of exactly `size` (the hole counts one) with result
    /// type `ty`. Requires [`Enumerator::with_hole`].
    pub fn contexts(&mut self, delta: &[Name], gamma: &[(Name, Type)], ty: &Type, size: usize) -> Rc<Vec<Term>> {
        assert!(self.hole.is_some(), "context enumeration needs a hole typing");
        let s = Spec { env: self.env(delta.to_vec(), gamma.to_vec()), ty: self.ty(ty.clone()) };
        self.gen(s, size, true)
    }

    fn hole_fits(&self, s: Spec) -> bool {
        let Some(h) = &self.hole else { return false };
        let env = &self.envs[s.env];
        h.ty.alpha_eq(&self.types[s.ty])
            && h.delta.iter().all(|a| env.delta.contains(a))
            && h.gamma.iter().all(|(x, t)| {
                env.gamma.iter().rev().find(|(y, _)| y == x).is_some_and(|(_, found)| found.alpha_eq(t))
            })
    }

    fn gen(&mut self, s: Spec, size: usize, hole: bool) -> Rc<Vec<Term>> {
        let key = (s.env, s.ty, size, hole);
        if let Some(r) = self.memo.get(&key) {
            return r.clone();
        }
        let out = Rc::new(self.compute(s, size, hole));
        self.memo.insert(key, out.clone());
        out
    }

    fn compute(&mut self, s: Spec, size: usize, hole: bool) -> Vec<Term> {
        let mut out = Vec::new();
        if size == 0 {
            return out;
        }
        if size == 1 {
            if hole {
                if self.hole_fits(s) {
                    out.push(Term::Hole);
                }
                return out;
            }
            let ty = &self.types[s.ty];
            let mut bound: Vec<&Name> = Vec::new();
            for (x, t) in self.envs[s.env].gamma.iter().rev() {
                if bound.contains(&x) {
                    continue;
                }
                bound.push(x);
                if t.alpha_eq(ty) {
                    out.push(Term::Var(x.clone()));
                }
            }
            match ty {
                Type::Bool => out.extend([Term::True, Term::False]),
                Type::Int if self.level.has(Feature::Int) => out.extend(self.int_pool.iter().map(|&n| Term::Int(n))),
                _ => {}
            }
            return out;
        }

        let forms = self.forms(s);
        for form in forms.iter() {
            self.build(&form.specs, size, hole, &mut out, &*form.make);
        }
        out
    }

    /// Number of results of [`Enumerator::gen`], without building them.
    fn count(&mut self, s: Spec, size: usize, hole: bool) -> u128 {
        let key = (s.env, s.ty, size, hole);
        if let Some(r) = self.memo.get(&key) {
            return r.len() as u128;
        }
        if let Some(&n) = self.counts.get(&key) {
            return n;
        }
        let n = if size <= 1 {
            self.gen(s, size, hole).len() as u128
        } else {
            let mut n: u128 = 0;
            let forms = self.forms(s);
            for form in forms.iter() {
                n = n.saturating_add(self.count_form(&form.specs, size, hole));
            }
            n
        };
        self.counts.insert(key, n);
        n
    }

    fn count_form(&mut self, specs: &[Spec], size: usize, hole: bool) -> u128 {
        let k = specs.len();
        if size < k + 1 {
            return 0;
        }
        let hole_positions: Vec<Option<usize>> = if hole { (0..k).map(Some).collect() } else { vec![None] };
        let mut total: u128 = 0;
        for hp in hole_positions {
            for split in compositions(size - 1, k) {
                let mut prod: u128 = 1;
                for i in hole_first(k, hp) {
                    prod = prod.saturating_mul(self.count(specs[i], split[i], hp == Some(i)));
                    if prod == 0 {
                        break;
                    }
                }
                total = total.saturating_add(prod);
            }
        }
        total
    }

    /// Every compound form whose result has type `ty`, in output order.
    fn forms(&mut self, s: Spec) -> Rc<Vec<Form>> {
        if let Some(f) = self.forms.get(&(s.env, s.ty)) {
            return f.clone();
        }
        let f = Rc::new(self.make_forms(s));
        self.forms.insert((s.env, s.ty), f.clone());
        f
    }

    fn make_forms(&mut self, s: Spec) -> Vec<Form> {
        let lv = self.level;
        let mut forms: Vec<Form> = Vec::new();
        let d = self.envs[s.env].delta.clone();
        let g = self.envs[s.env].gamma.clone();
        let universe = self.envs[s.env].universe.clone();
        let ty = self.types[s.ty].clone();
        let env = s.env;
        let mut push = |specs: Vec<Spec>, make: Rc<dyn Fn(&[Term]) -> Term>| forms.push(Form { specs, make });
        macro_rules! spec {
            ($t:expr) => {
                Spec { env, ty: self.ty($t) }
            };
            ($d:expr, $g:expr, $t:expr) => {
                Spec { env: self.env($d, $g), ty: self.ty($t) }
            };
        }

        // Introduction forms, determined by the target.
        match &ty {
            Type::Arrow(a, b) => {
                let x = var_name(&g);
                let mut g2 = g.clone();
                g2.push((x.clone(), (**a).clone()));
                let s = spec!(d.clone(), g2, (**b).clone());
                let a = (**a).clone();
                push(vec![s], Rc::new(move |c| Term::Lam(x.clone(), a.clone(), Box::new(c[0].clone()))));
            }
            Type::Forall(b, body) if lv.has(Feature::SystemF) => {
                let a = tyvar_name(&d);
                let mut d2 = d.clone();
                d2.push(a.clone());
                let s = spec!(d2, g.clone(), body.subst(b, &Type::Var(a.clone())));
                push(vec![s], Rc::new(move |c| Term::TyLam(a.clone(), Box::new(c[0].clone()))));
            }
            Type::Prod(a, b) if lv.has(Feature::Pairs) => {
                let specs = vec![spec!((**a).clone()), spec!((**b).clone())];
                push(specs, Rc::new(|c| Term::pair(c[0].clone(), c[1].clone())));
            }
            Type::Sum(a, b) if lv.has(Feature::Sums) => {
                let t = ty.clone();
                push(vec![spec!((**a).clone())], Rc::new(move |c| Term::inl(c[0].clone(), t.clone())));
                let t = ty.clone();
                push(vec![spec!((**b).clone())], Rc::new(move |c| Term::inr(c[0].clone(), t.clone())));
            }
            Type::Exists(b, body) if lv.has(Feature::Existential) => {
                for w in &universe {
                    let s = spec!(body.subst(b, w));
                    let (w, t) = (w.clone(), ty.clone());
                    push(vec![s], Rc::new(move |c| Term::pack(w.clone(), c[0].clone(), t.clone())));
                }
            }
            Type::Mu(..) if lv.has(Feature::Mu) => {
                let s = spec!(ty.unfold_mu().expect("mu type"));
                let t = ty.clone();
                push(vec![s], Rc::new(move |c| Term::fold(c[0].clone(), t.clone())));
            }
            Type::Ref(a) if lv.has(Feature::Ref) => {
                push(vec![spec!((**a).clone())], Rc::new(|c| Term::alloc(c[0].clone())));
            }
            Type::Bool => {
                push(vec![spec!(Type::Bool)], Rc::new(|c| Term::not(c[0].clone())));
                if lv.has(Feature::Int) {
                    let specs = vec![spec!(Type::Int), spec!(Type::Int)];
                    push(specs, Rc::new(|c| Term::int_eq(c[0].clone(), c[1].clone())));
                }
            }
            _ => {}
        }

        // Elimination forms, only at universe types. Anything else is
        // built by its introduction form, which keeps the set of
        // intermediate types finite.
        if !universe.iter().any(|u| u.alpha_eq(&ty)) {
            return forms;
        }
        let specs = vec![spec!(Type::Bool), s, s];
        push(specs, Rc::new(|c| Term::if_(c[0].clone(), c[1].clone(), c[2].clone())));
        for a in &universe {
            let specs = vec![spec!(Type::arrow(a.clone(), ty.clone())), spec!(a.clone())];
            push(specs, Rc::new(|c| Term::app(c[0].clone(), c[1].clone())));
        }
        if lv.has(Feature::Pairs) {
            for b in &universe {
                push(vec![spec!(Type::prod(ty.clone(), b.clone()))], Rc::new(|c| Term::fst(c[0].clone())));
                push(vec![spec!(Type::prod(b.clone(), ty.clone()))], Rc::new(|c| Term::snd(c[0].clone())));
            }
        }
        if lv.has(Feature::Sums) {
            let x = var_name(&g);
            for a in &universe {
                for b in &universe {
                    let mut gl = g.clone();
                    gl.push((x.clone(), a.clone()));
                    let mut gr = g.clone();
                    gr.push((x.clone(), b.clone()));
                    let specs = vec![
                        spec!(Type::sum(a.clone(), b.clone())),
                        spec!(d.clone(), gl, ty.clone()),
                        spec!(d.clone(), gr, ty.clone()),
                    ];
                    let x = x.clone();
                    push(specs, Rc::new(move |c| Term::case(c[0].clone(), x.clone(), c[1].clone(), x.clone(), c[2].clone())));
                }
            }
        }
        if lv.has(Feature::Existential) {
            let a = tyvar_name(&d);
            let x = var_name(&g);
            for e in &universe {
                let Type::Exists(b, body) = e else { continue };
                let mut d2 = d.clone();
                d2.push(a.clone());
                let mut g2 = g.clone();
                g2.push((x.clone(), body.subst(b, &Type::Var(a.clone()))));
                let specs = vec![spec!(e.clone()), spec!(d2, g2, ty.clone())];
                let (a, x) = (a.clone(), x.clone());
                push(specs, Rc::new(move |c| Term::unpack(a.clone(), x.clone(), c[0].clone(), c[1].clone())));
            }
        }
        if lv.has(Feature::SystemF) {
            for f in &universe {
                let Type::Forall(b, body) = f else { continue };
                for t in &universe {
                    if body.subst(b, t).alpha_eq(&ty) {
                        let t = t.clone();
                        push(vec![spec!(f.clone())], Rc::new(move |c| Term::ty_app(c[0].clone(), t.clone())));
                    }
                }
            }
        }
        if lv.has(Feature::Mu) {
            for m in &universe {
                if m.unfold_mu().is_some_and(|u| u.alpha_eq(&ty)) {
                    push(vec![spec!(m.clone())], Rc::new(|c| Term::unfold(c[0].clone())));
                }
            }
        }
        if lv.has(Feature::Ref) {
            push(vec![spec!(Type::reference(ty.clone()))], Rc::new(|c| Term::deref(c[0].clone())));
            let specs = vec![spec!(Type::reference(ty.clone())), s];
            push(specs, Rc::new(|c| Term::assign(c[0].clone(), c[1].clone())));
        }
        forms
    }

    /// Adds `make(children)` for every way of filling `specs` with terms
    /// whose sizes sum to `size - 1`; with `hole`, exactly one child is a
    /// context.
    fn build(&mut self, specs: &[Spec], size: usize, hole: bool, out: &mut Vec<Term>, make: &dyn Fn(&[Term]) -> Term) {
        let k = specs.len();
        if size < k + 1 {
            return;
        }
        let hole_positions: Vec<Option<usize>> = if hole { (0..k).map(Some).collect() } else { vec![None] };
        for hp in hole_positions {
            for split in compositions(size - 1, k) {
                // Children are only built when every position is inhabited.
                if hole_first(k, hp).into_iter().any(|i| self.count(specs[i], split[i], hp == Some(i)) == 0) {
                    continue;
                }
                let lists: Vec<Rc<Vec<Term>>> =
                    (0..k).map(|i| self.gen(specs[i], split[i], hp == Some(i))).collect();
                let mut idx = vec![0usize; k];
                'odometer: loop {
                    let children: Vec<Term> = (0..k).map(|i| lists[i][idx[i]].clone()).collect();
                    out.push(make(&children));
                    let mut j = k;
                    loop {
                        if j == 0 {
                            break 'odometer;
                        }
                        j -= 1;
                        idx[j] += 1;
                        if idx[j] < lists[j].len() {
                            continue 'odometer;
                        }
                        idx[j] = 0;
                    }
                }
            }
        }
    }
}

/// Child positions with the hole first; it is the one most often empty.
fn hole_first(k: usize, hp: Option<usize>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..k).collect();
    if let Some(h) = hp {
        order.remove(h);
        order.insert(0, h);
    }
    order
}

/// Ordered ways of writing `n` as a sum of `k` positive parts.
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return if n == 0 { vec![vec![]] } else { vec![] };
    }
    if k == 1 {
        return if n >= 1 { vec![vec![n]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=n.saturating_sub(k - 1) {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}
