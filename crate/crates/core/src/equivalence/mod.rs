//! Program contexts, plugging, and the search for distinguishing contexts,
//! plus the term and value generators shared by the test harnesses.

mod corpus;
mod enumerate;
mod generate;

use std::thread;

pub use corpus::{gen_value_corpus, ENTRY_CAP, INT_SAMPLES};
pub use enumerate::{subterm_closure, tyvar_name, var_name, Enumerator};
pub use generate::{gen_type, gen_well_typed, GenerationFailed, Generator};

use crate::dynamics::{eval_star, Allocator, Config, EvalResult};
use crate::kernel::{Feature, LangLevel, Term, Type};
use crate::logrel::{Limit, Verdict, Witness};
use crate::statics::{typecheck, typecheck_with_hole, HoleTyping, StoreTyping, TermCtx};

/// The hole's typing and the type the whole context must have.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextTyping {
    pub hole: HoleTyping,
    pub result: Type,
}

impl ContextTyping {
    /// Closed terms of type `ty`, observed at `Bool`.
    pub fn closed(ty: Type) -> Self {
        ContextTyping {
            hole: HoleTyping { delta: vec![], gamma: TermCtx::new(), ty },
            result: Type::Bool,
        }
    }
}

/// Replaces the hole verbatim; variables of `e` may be captured.
pub fn plug(c: &Term, e: &Term) -> Term {
    c.fill_hole(e)
}

pub fn context_typecheck(c: &Term, ct: &ContextTyping) -> bool {
    c.hole_count() == 1
        && typecheck_with_hole(&StoreTyping::new(), &[], &TermCtx::new(), c, &ct.hole)
            .is_ok_and(|t| t.alpha_eq(&ct.result))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distinction {
    pub context: Term,
    pub size: usize,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Clone, Debug)]
pub struct DistinguishReport {
    pub verdict: Verdict,
    pub found: Option<Distinction>,
    pub bound: usize,
    pub fuel: usize,
    pub contexts_tried: usize,
}

impl DistinguishReport {
    pub fn line(&self) -> String {
        match &self.found {
            Some(d) => format!("DISTINGUISHED size={} ctx={} lhs={} rhs={}", d.size, d.context, d.lhs, d.rhs),
            None => format!("NO-CONTEXT bound={} fuel={}", self.bound, self.fuel),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Outcome {
    Value(Term),
    Cycles,
    Unknown,
}

impl Outcome {
    fn show(&self) -> String {
        match self {
            Outcome::Value(v) => v.to_string(),
            Outcome::Cycles => "diverges".to_string(),
            Outcome::Unknown => "?".to_string(),
        }
    }
}

fn observe(e: &Term, fuel: usize, cycles: bool) -> Outcome {
    match eval_star(&Config::new(e.clone()), fuel, &mut Allocator::Sequential, cycles) {
        EvalResult::Value { value, .. } => Outcome::Value(value),
        EvalResult::FuelExhausted { cycle: Some(_), .. } if cycles => Outcome::Cycles,
        _ => Outcome::Unknown,
    }
}

fn distinguishes(a: &Outcome, b: &Outcome) -> bool {
    match (a, b) {
        (Outcome::Value(x), Outcome::Value(y)) => !x.alpha_eq(y),
        (Outcome::Value(_), Outcome::Cycles) | (Outcome::Cycles, Outcome::Value(_)) => true,
        _ => false,
    }
}

/// Searches well-typed contexts of size at most `size_bound`, smallest
/// first, for one under which `e1` and `e2` produce different observations.
pub fn distinguish(
    e1: &Term,
    e2: &Term,
    ct: &ContextTyping,
    size_bound: usize,
    fuel: usize,
    level: LangLevel,
) -> DistinguishReport {
    // Both sides must fit the hole.
    for e in [e1, e2] {
        let gamma = &ct.hole.gamma;
        let ok = typecheck(&StoreTyping::new(), &ct.hole.delta, gamma, e).is_ok_and(|t| t.alpha_eq(&ct.hole.ty));
        if !ok {
            return DistinguishReport {
                verdict: Verdict::Disproven(Witness::new(e.clone(), format!("does not have hole type {}", ct.hole.ty))),
                found: None,
                bound: size_bound,
                fuel,
                contexts_tried: 0,
            };
        }
    }
    let cycles = level.has(Feature::Mu) || level.has(Feature::Ref);
    let mut en = Enumerator::new(level, &[ct.result.clone()]).with_hole(ct.hole.clone());
    let mut tried = 0;
    for size in 1..=size_bound {
        let ctxs = en.contexts(&[], &[], &ct.result, size);
        tried += ctxs.len();
        if let Some((c, lhs, rhs)) = search(&ctxs, e1, e2, fuel, cycles) {
            let found = Distinction { context: c.clone(), size, lhs: lhs.show(), rhs: rhs.show() };
            return DistinguishReport {
                verdict: Verdict::Disproven(Witness::new(c, format!("lhs={} rhs={}", found.lhs, found.rhs))),
                found: Some(found),
                bound: size_bound,
                fuel,
                contexts_tried: tried,
            };
        }
    }
    DistinguishReport {
        verdict: Verdict::bounded(Limit::Contexts),
        found: None,
        bound: size_bound,
        fuel,
        contexts_tried: tried,
    }
}

/// First distinguishing context in enumeration order, evaluated in parallel.
fn search(ctxs: &[Term], e1: &Term, e2: &Term, fuel: usize, cycles: bool) -> Option<(Term, Outcome, Outcome)> {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(16);
    let chunk = ctxs.len().div_ceil(workers).max(64);
    let hits: Vec<Option<(usize, Outcome, Outcome)>> = thread::scope(|s| {
        let handles: Vec<_> = ctxs
            .chunks(chunk)
            .enumerate()
            .map(|(ci, part)| {
                s.spawn(move || {
                    part.iter().enumerate().find_map(|(i, c)| {
                        let a = observe(&plug(c, e1), fuel, cycles);
                        let b = observe(&plug(c, e2), fuel, cycles);
                        distinguishes(&a, &b).then_some((ci * chunk + i, a, b))
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    hits.into_iter().flatten().min_by_key(|(i, ..)| *i).map(|(i, a, b)| (ctxs[i].clone(), a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Name;
    use crate::surface::{parse_context, parse_term, parse_type};

    #[test]
    fn plugging_is_literal() {
        let c = parse_context("\\y:Bool. []").unwrap();
        let e = parse_term("if y then false else true").unwrap();
        let p = plug(&c, &e);
        assert_eq!(p, parse_term("\\y:Bool. if y then false else true").unwrap());
        assert_eq!(p.size(), c.size() - 1 + e.size());
        assert_eq!(plug(&Term::Hole, &e), e);
    }

    #[test]
    fn context_typing() {
        assert!(context_typecheck(&Term::Hole, &ContextTyping::closed(Type::Bool)));
        let c = parse_context("\\y:Bool. []").unwrap();
        let ct = ContextTyping {
            hole: HoleTyping { delta: vec![], gamma: [(Name::new("y"), Type::Bool)].into(), ty: Type::Bool },
            result: parse_type("Bool -> Bool").unwrap(),
        };
        assert!(context_typecheck(&c, &ct));
        let bad = parse_context("if [] then 1 else true").unwrap();
        assert!(!context_typecheck(&bad, &ContextTyping::closed(Type::Bool)));
    }

    #[test]
    fn distinguish_booleans_and_self() {
        let ct = ContextTyping::closed(Type::Bool);
        let r = distinguish(&Term::True, &Term::False, &ct, 3, 100, LangLevel::stlc());
        assert!(r.verdict.is_disproven());
        assert_eq!(r.found.as_ref().unwrap().size, 1);
        assert_eq!(r.line(), "DISTINGUISHED size=1 ctx=[] lhs=true rhs=false");
        let r = distinguish(&Term::True, &Term::True, &ct, 4, 100, LangLevel::stlc());
        assert_eq!(r.verdict, Verdict::bounded(Limit::Contexts));
        assert_eq!(r.line(), "NO-CONTEXT bound=4 fuel=100");
    }

    #[test]
    fn distinguish_functions() {
        let ty = parse_type("Bool -> Bool").unwrap();
        let id = parse_term("\\x:Bool. x").unwrap();
        let not = parse_term("\\x:Bool. not x").unwrap();
        let r = distinguish(&id, &not, &ContextTyping::closed(ty), 4, 100, LangLevel::stlc());
        let d = r.found.expect("a context applying the function");
        assert!(d.size <= 3);
    }
}
