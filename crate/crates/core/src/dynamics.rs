//! Small-step call-by-value semantics over configurations `⟨h, e⟩`.
//!
//! The redex is found by a left-to-right search through the evaluation
//! positions of each constructor. Allocation is pluggable so that tests can
//! check that results do not depend on which fresh location is chosen.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kernel::{Loc, Term};

/// A finite map from locations to closed values. Iteration follows
/// allocation order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Heap {
    cells: IndexMap<Loc, Term>,
}

impl Heap {
    pub fn new() -> Self {
        Heap::default()
    }

    pub fn get(&self, l: &Loc) -> Option<&Term> {
        self.cells.get(l)
    }

    pub fn contains(&self, l: &Loc) -> bool {
        self.cells.contains_key(l)
    }

    /// Inserts or overwrites. Overwriting keeps the original position.
    pub fn insert(&mut self, l: Loc, v: Term) {
        self.cells.insert(l, v);
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Loc, &Term)> {
        self.cells.iter()
    }

    pub fn locs(&self) -> impl Iterator<Item = Loc> + '_ {
        self.cells.keys().copied()
    }

    /// Position of `l` in allocation order.
    pub fn index_of(&self, l: &Loc) -> Option<usize> {
        self.cells.get_index_of(l)
    }
}

impl FromIterator<(Loc, Term)> for Heap {
    fn from_iter<I: IntoIterator<Item = (Loc, Term)>>(iter: I) -> Self {
        Heap { cells: iter.into_iter().collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub heap: Heap,
    pub expr: Term,
}

impl Config {
    pub fn new(expr: Term) -> Self {
        Config { heap: Heap::new(), expr }
    }

    pub fn with_heap(heap: Heap, expr: Term) -> Self {
        Config { heap, expr }
    }

    /// Location-renaming and α-invariant key. Locations are renumbered in
    /// order of first occurrence, starting from the expression and then
    /// following the heap; cells unreachable from the expression are
    /// dropped since they cannot influence the rest of the run.
    pub fn canonical_key(&self) -> (Term, Vec<Term>) {
        let mut order: Vec<Loc> = Vec::new();
        let mut seen: BTreeMap<Loc, u64> = BTreeMap::new();
        let visit = |t: &Term, order: &mut Vec<Loc>, seen: &mut BTreeMap<Loc, u64>| {
            collect_locs_in_order(t, &mut |l| {
                if !seen.contains_key(&l) {
                    seen.insert(l, order.len() as u64);
                    order.push(l);
                }
            });
        };
        visit(&self.expr, &mut order, &mut seen);
        let mut i = 0;
        while i < order.len() {
            if let Some(v) = self.heap.get(&order[i]) {
                let v = v.clone();
                visit(&v, &mut order, &mut seen);
            }
            i += 1;
        }
        let rename = |l: Loc| Loc(seen.get(&l).copied().unwrap_or(u64::MAX));
        let expr = self.expr.map_locs(&rename).canonical();
        let cells = order
            .iter()
            .map(|l| match self.heap.get(l) {
                Some(v) => v.map_locs(&rename).canonical(),
                None => Term::Hole,
            })
            .collect();
        (expr, cells)
    }
}

fn collect_locs_in_order(t: &Term, f: &mut impl FnMut(Loc)) {
    if let Term::Loc(l) = t {
        f(*l);
    }
    for c in t.children() {
        collect_locs_in_order(c, f);
    }
}

#[derive(Clone, Debug)]
pub enum Allocator {
    Sequential,
    Randomized(ChaCha8Rng),
}

impl Allocator {
    pub fn randomized(seed: u64) -> Self {
        Allocator::Randomized(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn fresh(&mut self, heap: &Heap) -> Loc {
        match self {
            Allocator::Sequential => {
                let mut n = heap.len() as u64;
                while heap.contains(&Loc(n)) {
                    n += 1;
                }
                Loc(n)
            }
            Allocator::Randomized(rng) => loop {
                let l = Loc(rng.gen_range(0..1_000_000));
                if !heap.contains(&l) {
                    return l;
                }
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Beta,
    IfTrue,
    IfFalse,
    Fst,
    Snd,
    CaseInl,
    CaseInr,
    TyBeta,
    Unpack,
    UnfoldFold,
    Alloc,
    Assign,
    Deref,
    IntEq,
    Not,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Beta => "E-Beta",
            Rule::IfTrue => "E-IfTrue",
            Rule::IfFalse => "E-IfFalse",
            Rule::Fst => "E-Fst",
            Rule::Snd => "E-Snd",
            Rule::CaseInl => "E-CaseInl",
            Rule::CaseInr => "E-CaseInr",
            Rule::TyBeta => "E-TyBeta",
            Rule::Unpack => "E-Unpack",
            Rule::UnfoldFold => "E-UnfoldFold",
            Rule::Alloc => "E-Alloc",
            Rule::Assign => "E-Assign",
            Rule::Deref => "E-Deref",
            Rule::IntEq => "E-IntEq",
            Rule::Not => "E-Not",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StuckReason {
    DerefDangling(Loc),
    AssignDangling(Loc),
    IllFormedRedex,
}

impl fmt::Display for StuckReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StuckReason::DerefDangling(l) => write!(f, "DerefDangling({l})"),
            StuckReason::AssignDangling(l) => write!(f, "AssignDangling({l})"),
            StuckReason::IllFormedRedex => write!(f, "IllFormedRedex"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Stepped(Config, Rule),
    IsValue,
    Stuck(StuckReason),
}

enum Local {
    Stepped(Rule),
    Value,
    Stuck(StuckReason),
}

/// Takes one step of `c`, returning the successor configuration.
pub fn step(c: &Config, alloc: &mut Allocator) -> StepOutcome {
    let mut next = c.clone();
    match step_in_place(&mut next, alloc) {
        Ok(Some(rule)) => StepOutcome::Stepped(next, rule),
        Ok(None) => StepOutcome::IsValue,
        Err(r) => StepOutcome::Stuck(r),
    }
}

/// Steps `c` in place. `Ok(None)` means `c.expr` is already a value; on
/// `Err` the configuration is left unchanged.
pub fn step_in_place(c: &mut Config, alloc: &mut Allocator) -> Result<Option<Rule>, StuckReason> {
    match reduce(&mut c.expr, &mut c.heap, alloc) {
        Local::Stepped(r) => Ok(Some(r)),
        Local::Value => Ok(None),
        Local::Stuck(r) => Err(r),
    }
}

fn take(e: &mut Term) -> Term {
    std::mem::replace(e, Term::True)
}

/// Descends into the first non-value child in evaluation order, if any.
macro_rules! descend {
    ($child:expr, $heap:expr, $alloc:expr) => {
        if !$child.is_value() {
            return match reduce($child, $heap, $alloc) {
                Local::Value => Local::Stuck(StuckReason::IllFormedRedex),
                other => other,
            };
        }
    };
}

fn reduce(e: &mut Term, heap: &mut Heap, alloc: &mut Allocator) -> Local {
    if e.is_value() {
        return Local::Value;
    }
    let rule = match e {
        Term::If(c, _, _) => {
            descend!(c, heap, alloc);
            match **c {
                Term::True => Rule::IfTrue,
                Term::False => Rule::IfFalse,
                _ => return Local::Stuck(StuckReason::IllFormedRedex),
            }
        }
        Term::App(f, a) => {
            descend!(f, heap, alloc);
            descend!(a, heap, alloc);
            if !matches!(**f, Term::Lam(..)) {
                return Local::Stuck(StuckReason::IllFormedRedex);
            }
            Rule::Beta
        }
        Term::Pair(a, b) => {
            descend!(a, heap, alloc);
            descend!(b, heap, alloc);
            return Local::Stuck(StuckReason::IllFormedRedex);
        }
        Term::Fst(a) | Term::Snd(a) => {
            descend!(a, heap, alloc);
            if !matches!(**a, Term::Pair(..)) {
                return Local::Stuck(StuckReason::IllFormedRedex);
            }
            if matches!(e, Term::Fst(_)) {
                Rule::Fst
            } else {
                Rule::Snd
            }
        }
        Term::Inl(a, _) | Term::Inr(a, _) | Term::Fold(a, _) | Term::Pack(_, a, _) => {
            descend!(a, heap, alloc);
            return Local::Stuck(StuckReason::IllFormedRedex);
        }
        Term::Case { scrutinee, .. } => {
            descend!(scrutinee, heap, alloc);
            match **scrutinee {
                Term::Inl(..) => Rule::CaseInl,
                Term::Inr(..) => Rule::CaseInr,
                _ => return Local::Stuck(StuckReason::IllFormedRedex),
            }
        }
        Term::TyApp(f, _) => {
            descend!(f, heap, alloc);
            if !matches!(**f, Term::TyLam(..)) {
                return Local::Stuck(StuckReason::IllFormedRedex);
            }
            Rule::TyBeta
        }
        Term::Unpack(_, _, p, _) => {
            descend!(p, heap, alloc);
            if !matches!(**p, Term::Pack(..)) {
                return Local::Stuck(StuckReason::IllFormedRedex);
            }
            Rule::Unpack
        }
        Term::Unfold(a) => {
            descend!(a, heap, alloc);
            if !matches!(**a, Term::Fold(..)) {
                return Local::Stuck(StuckReason::IllFormedRedex);
            }
            Rule::UnfoldFold
        }
        Term::Alloc(a) => {
            descend!(a, heap, alloc);
            Rule::Alloc
        }
        Term::Assign(l, r) => {
            descend!(l, heap, alloc);
            descend!(r, heap, alloc);
            match **l {
                Term::Loc(loc) if heap.contains(&loc) => Rule::Assign,
                Term::Loc(loc) => return Local::Stuck(StuckReason::AssignDangling(loc)),
                _ => return Local::Stuck(StuckReason::IllFormedRedex),
            }
        }
        Term::Deref(a) => {
            descend!(a, heap, alloc);
            match **a {
                Term::Loc(loc) if heap.contains(&loc) => Rule::Deref,
                Term::Loc(loc) => return Local::Stuck(StuckReason::DerefDangling(loc)),
                _ => return Local::Stuck(StuckReason::IllFormedRedex),
            }
        }
        Term::IntEq(a, b) => {
            descend!(a, heap, alloc);
            descend!(b, heap, alloc);
            if !matches!((&**a, &**b), (Term::Int(_), Term::Int(_))) {
                return Local::Stuck(StuckReason::IllFormedRedex);
            }
            Rule::IntEq
        }
        Term::Not(a) => {
            descend!(a, heap, alloc);
            if a.as_bool().is_none() {
                return Local::Stuck(StuckReason::IllFormedRedex);
            }
            Rule::Not
        }
        _ => return Local::Stuck(StuckReason::IllFormedRedex),
    };
    let redex = take(e);
    *e = contract(redex, rule, heap, alloc);
    Local::Stepped(rule)
}

/// Fires `rule` on a redex already known to match it.
fn contract(redex: Term, rule: Rule, heap: &mut Heap, alloc: &mut Allocator) -> Term {
    match (rule, redex) {
        (Rule::IfTrue, Term::If(_, t, _)) => *t,
        (Rule::IfFalse, Term::If(_, _, f)) => *f,
        (Rule::Beta, Term::App(f, a)) => match *f {
            Term::Lam(x, _, body) => body.subst(&x, &a),
            _ => unreachable!(),
        },
        (Rule::Fst, Term::Fst(p)) | (Rule::Snd, Term::Snd(p)) => match *p {
            Term::Pair(a, b) => {
                if rule == Rule::Fst {
                    *a
                } else {
                    *b
                }
            }
            _ => unreachable!(),
        },
        (Rule::CaseInl | Rule::CaseInr, Term::Case { scrutinee, left_var, left, right_var, right }) => match *scrutinee {
            Term::Inl(v, _) => left.subst(&left_var, &v),
            Term::Inr(v, _) => right.subst(&right_var, &v),
            _ => unreachable!(),
        },
        (Rule::TyBeta, Term::TyApp(f, t)) => match *f {
            Term::TyLam(a, body) => body.subst_type(&a, &t),
            _ => unreachable!(),
        },
        (Rule::Unpack, Term::Unpack(a, x, p, body)) => match *p {
            Term::Pack(w, v, _) => body.subst_type(&a, &w).subst(&x, &v),
            _ => unreachable!(),
        },
        (Rule::UnfoldFold, Term::Unfold(a)) => match *a {
            Term::Fold(v, _) => *v,
            _ => unreachable!(),
        },
        (Rule::Alloc, Term::Alloc(v)) => {
            let l = alloc.fresh(heap);
            heap.insert(l, *v);
            Term::Loc(l)
        }
        (Rule::Assign, Term::Assign(l, v)) => match *l {
            Term::Loc(l) => {
                heap.insert(l, (*v).clone());
                *v
            }
            _ => unreachable!(),
        },
        (Rule::Deref, Term::Deref(l)) => match *l {
            Term::Loc(l) => heap.get(&l).cloned().expect("checked before contraction"),
            _ => unreachable!(),
        },
        (Rule::IntEq, Term::IntEq(a, b)) => match (*a, *b) {
            (Term::Int(x), Term::Int(y)) => Term::bool(x == y),
            _ => unreachable!(),
        },
        (Rule::Not, Term::Not(a)) => Term::bool(!a.as_bool().expect("checked before contraction")),
        _ => unreachable!("rule does not match redex"),
    }
}

/// Two step counts at which α-equivalent configurations were observed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cycle {
    pub first_step: usize,
    pub repeat_step: usize,
    pub first: Config,
    pub repeat: Config,
}

impl Cycle {
    pub fn period(&self) -> usize {
        self.repeat_step - self.first_step
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalResult {
    Value { value: Term, heap: Heap, steps: usize },
    Stuck { config: Config, reason: StuckReason, steps: usize },
    FuelExhausted { config: Config, steps: usize, cycle: Option<Cycle> },
}

impl EvalResult {
    pub fn steps(&self) -> usize {
        match self {
            EvalResult::Value { steps, .. } | EvalResult::Stuck { steps, .. } | EvalResult::FuelExhausted { steps, .. } => {
                *steps
            }
        }
    }

    pub fn value(&self) -> Option<&Term> {
        match self {
            EvalResult::Value { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn is_stuck(&self) -> bool {
        matches!(self, EvalResult::Stuck { .. })
    }
}

/// Runs at most `fuel` steps. With `detect_cycles`, records the first time
/// the run revisits a configuration equal up to α-renaming and location
/// renaming.
pub fn eval_star(c: &Config, fuel: usize, alloc: &mut Allocator, detect_cycles: bool) -> EvalResult {
    let mut cur = c.clone();
    let mut seen: HashMap<(Term, Vec<Term>), (usize, Config)> = HashMap::new();
    let mut cycle = None;
    if detect_cycles {
        seen.insert(cur.canonical_key(), (0, cur.clone()));
    }
    let mut steps = 0;
    loop {
        if cur.expr.is_value() {
            return EvalResult::Value { value: cur.expr, heap: cur.heap, steps };
        }
        if steps >= fuel {
            return EvalResult::FuelExhausted { config: cur, steps, cycle };
        }
        match step_in_place(&mut cur, alloc) {
            Ok(Some(_)) => steps += 1,
            Ok(None) => unreachable!("values handled above"),
            Err(reason) => return EvalResult::Stuck { config: cur, reason, steps },
        }
        if detect_cycles && cycle.is_none() {
            let key = cur.canonical_key();
            if let Some((first_step, first)) = seen.get(&key) {
                cycle = Some(Cycle { first_step: *first_step, repeat_step: steps, first: first.clone(), repeat: cur.clone() });
                seen.clear();
            } else {
                seen.insert(key, (steps, cur.clone()));
            }
        }
    }
}

pub fn eval_closed(e: &Term, fuel: usize) -> EvalResult {
    eval_star(&Config::new(e.clone()), fuel, &mut Allocator::Sequential, false)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    /// Configuration reached by this step.
    pub config: Config,
    pub rule: Rule,
}

/// The first `fuel` steps of the run, each with the rule that fired.
pub fn trace(c: &Config, fuel: usize, alloc: &mut Allocator) -> Vec<TraceEntry> {
    let mut cur = c.clone();
    let mut out = Vec::new();
    while out.len() < fuel {
        match step_in_place(&mut cur, alloc) {
            Ok(Some(rule)) => out.push(TraceEntry { config: cur.clone(), rule }),
            _ => break,
        }
    }
    out
}

/// Renders a configuration with locations renumbered in allocation order.
pub fn render_config(c: &Config) -> (String, String) {
    let rename = |l: Loc| Loc(c.heap.index_of(&l).map(|i| i as u64).unwrap_or(l.0));
    let expr = c.expr.map_locs(&rename).to_string();
    let cells: Vec<String> = c
        .heap
        .iter()
        .map(|(l, v)| format!("{}: {}", rename(*l), v.map_locs(&rename)))
        .collect();
    (expr, format!("{{{}}}", cells.join(", ")))
}

pub fn trace_line(n: usize, entry: &TraceEntry) -> String {
    let (expr, heap) = render_config(&entry.config);
    format!("STEP {n} RULE {} EXPR {expr} HEAP {heap}", entry.rule)
}
