//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed.

mod common;

use std::collections::{BTreeMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lr_core::dynamics::{eval_closed, eval_star, step_in_place, trace, Allocator, Config, EvalResult, Rule};
use lr_core::equivalence::{distinguish, gen_type, gen_well_typed, ContextTyping, Generator};
use lr_core::logrel::{sn_check, CheckOptions, Limit, ValueCorpus, Verdict};
use lr_core::relational::{free_constant, free_continuation, free_identity, Catalog, FiniteRel, RelSubst, Relational};
use lr_core::statics::{heap_well_typed, typecheck, typecheck_closed, StoreTyping, TermCtx};
use lr_core::stepworld::{future_world, k_equal, IndexedPredicate, StepChecker, World};
use lr_core::surface::{parse_relation_literal, parse_term, parse_type};
use lr_core::{Feature, LangLevel, Loc, Name, Term, Type};

type Outcome = Result<String, String>;

/// Wall-clock limit for the existential equivalence check.
const EQUIV_SECONDS: u64 = 10;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pkg() -> Type {
    parse_type("ex a. a * (a -> Bool)").unwrap()
}

// 1 ------------------------------------------------------------------------

fn golden_typings() -> Outcome {
    for name in ["e1.lam", "e2.lam"] {
        let t = typecheck_closed(&common::golden(name).term).map_err(|e| format!("{name}: {e}"))?;
        ensure(t == pkg(), || format!("{name} has type {t}"))?;
    }
    let t = typecheck_closed(&common::golden("omega.lam").term).map_err(|e| e.to_string())?;
    ensure(t.to_string() == "(mu a. a -> a) -> (mu a. a -> a)", || format!("omega has type {t}"))?;
    let t = typecheck_closed(&common::golden("landin.lam").term).map_err(|e| e.to_string())?;
    ensure(t == Type::Int, || format!("landin has type {t}"))?;
    match typecheck_closed(&common::golden("leak.lam").term) {
        Ok(t) => Err(format!("leaking unpack accepted at {t}")),
        Err(e) => Ok(format!("e1, e2 : {}; omega : {}; landin : Int; leak rejected ({})", pkg(), "(mu a. a -> a) -> (mu a. a -> a)", e.kind)),
    }
}

// 2 ------------------------------------------------------------------------

fn golden_dynamics() -> Outcome {
    for (src, want) in [("(\\x:Int. x = 0) 1", Term::False), ("(\\x:Bool. not x) true", Term::False)] {
        let r = eval_closed(&parse_term(src).unwrap(), 100);
        ensure(r.value() == Some(&want), || format!("{src} gave {r:?}"))?;
    }
    let landin = common::golden("landin.lam").term;
    let steps = trace(&Config::new(landin.clone()), 12, &mut Allocator::Sequential);
    let rules: Vec<Rule> = steps.iter().map(|s| s.rule).collect();
    let setup = [Rule::Alloc, Rule::Beta, Rule::Assign, Rule::Beta, Rule::Deref, Rule::Beta];
    ensure(rules[..6] == setup, || format!("setup rules {rules:?}"))?;
    // After the setup the run alternates Deref, Beta through two configurations.
    for i in 6..rules.len() {
        ensure(rules[i] == rules[i - 2], || format!("rule {i} breaks the period: {rules:?}"))?;
        ensure(steps[i].config == steps[i - 2].config, || format!("configuration {i} differs from {}", i - 2))?;
    }
    ensure(steps[5].config != steps[6].config, || "period 1".into())?;
    match eval_star(&Config::new(landin), 10_000, &mut Allocator::Sequential, true) {
        EvalResult::FuelExhausted { steps, cycle: Some(c), .. } => {
            ensure(c.period() == 2, || format!("cycle period {}", c.period()))?;
            Ok(format!("both programs reach false; landin: 6 setup steps, 2-cycle from step {}, {steps} steps exhausted", c.first_step))
        }
        other => Err(format!("landin did not cycle: {other:?}")),
    }
}

// 3 ------------------------------------------------------------------------

fn existential_equivalence() -> Outcome {
    let e1 = common::golden("e1.lam").term;
    let e2 = common::golden("e2.lam").term;
    let e3 = common::golden("e3.lam").term;
    let corpus = || ValueCorpus::new(3, 0);
    let lit = parse_relation_literal("{(1,true)}").unwrap();
    let r = FiniteRel::from_literal(&lit).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let rel = Relational::new(Catalog::standard(&corpus(), 16), corpus(), 10_000).with_supplied(vec![r]);
    let v = rel.log_equiv_check(&[], &TermCtx::new(), &e1, &e2, &pkg()).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(!v.is_disproven(), || format!("equiv refuted: {v:?}"))?;
    ensure(took < Duration::from_secs(EQUIV_SECONDS), || format!("equiv took {took:?}"))?;

    let level = LangLevel::stlc().with(Feature::Existential);
    let ct = ContextTyping::closed(pkg());
    let same = distinguish(&e1, &e2, &ct, 8, 10_000, level);
    ensure(same.found.is_none(), || same.line())?;
    ensure(same.verdict == Verdict::bounded(Limit::Contexts), || format!("{:?}", same.verdict))?;
    let diff = distinguish(&e1, &e3, &ct, 8, 10_000, level);
    let d = diff.found.as_ref().ok_or_else(|| diff.line())?;
    ensure(d.size <= 8 && d.lhs == "false" && d.rhs == "true", || diff.line())?;
    Ok(format!(
        "equiv {} in {:.2}s; e1/e2: {} contexts, none distinguishing; e1/e3: {}",
        v.label(),
        took.as_secs_f64(),
        same.contexts_tried,
        diff.line()
    ))
}

// 4 ------------------------------------------------------------------------

fn inhabitants(ty: &Type, want: usize, size: usize, seed0: u64) -> Vec<Term> {
    let level = LangLevel::stlc().with(Feature::SystemF);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for seed in seed0..seed0 + 400 {
        if let Ok(e) = gen_well_typed(level, &[], &TermCtx::new(), ty, size, seed) {
            if seen.insert(e.canonical()) {
                out.push(e);
            }
        }
        if out.len() == want {
            break;
        }
    }
    out
}

fn sample_value(corpus: &ValueCorpus, ty: &Type, rng: &mut ChaCha8Rng) -> Option<Term> {
    corpus.values(ty).choose(rng).cloned()
}

fn free_theorems() -> Outcome {
    let corpus = ValueCorpus::new(2, 0);
    let stlc = LangLevel::stlc();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let fail = |what: &str, e: &Term, v: &Verdict| format!("{what} failed for {e}: {v:?}");

    // Identity.
    let id_ty = parse_type("all a. a -> a").unwrap();
    let mut ids = vec![parse_term("/\\a. \\x:a. x").unwrap()];
    ids.extend(inhabitants(&id_ty, 8, 10, 100));
    ensure(ids.len() >= 6, || format!("only {} identity inhabitants", ids.len()))?;
    let mut checked = 0;
    let mut seed = 0;
    while checked < 100 {
        seed += 1;
        let ty = gen_type(stlc, 2, seed);
        let Some(v) = sample_value(&corpus, &ty, &mut rng) else { continue };
        for e in &ids {
            let r = free_identity(e, &ty, &v, 10_000).map_err(|err| err.to_string())?;
            ensure(r.is_proven(), || fail("identity", e, &r))?;
        }
        checked += 1;
    }

    // Constant, within one type and across two.
    let const_ty = parse_type("all a. a -> Bool").unwrap();
    let consts = inhabitants(&const_ty, 6, 10, 200);
    ensure(consts.len() >= 2, || format!("only {} constant inhabitants", consts.len()))?;
    let (mut same, mut cross) = (0, 0);
    let mut seed = 1000;
    while same < 100 || cross < 100 {
        seed += 1;
        let e = &consts[seed as usize % consts.len()];
        let t1 = gen_type(stlc, 2, seed);
        let t2 = gen_type(stlc, 2, seed + 7919);
        let (Some(v1), Some(w1), Some(v2)) =
            (sample_value(&corpus, &t1, &mut rng), sample_value(&corpus, &t1, &mut rng), sample_value(&corpus, &t2, &mut rng))
        else {
            continue;
        };
        if same < 100 {
            let r = free_constant(e, &t1, &v1, &t1, &w1, 10_000).map_err(|err| err.to_string())?;
            ensure(r.is_proven(), || fail("constant", e, &r))?;
            same += 1;
        }
        if cross < 100 {
            let r = free_constant(e, &t1, &v1, &t2, &v2, 10_000).map_err(|err| err.to_string())?;
            ensure(r.is_proven(), || fail("constCrossType", e, &r))?;
            cross += 1;
        }
    }

    // Continuations with a base result type.
    let rel = Relational::new(Catalog::standard(&corpus, 16), ValueCorpus::new(2, 0), 10_000);
    let mut cont = 0;
    let mut seed = 5000;
    while cont < 25 && seed < 6000 {
        seed += 1;
        let ty = gen_type(stlc, 1, seed);
        let tk = if seed % 2 == 0 { Type::Bool } else { Type::Int };
        let poly = Type::forall("a", Type::arrow(Type::arrow(ty.clone(), Type::var("a")), Type::var("a")));
        let level = stlc.with(Feature::SystemF);
        let Ok(e) = gen_well_typed(level, &[], &TermCtx::new(), &poly, 12, seed) else { continue };
        let Ok(k) = gen_well_typed(stlc, &[], &TermCtx::new(), &Type::arrow(ty.clone(), tk.clone()), 8, seed) else {
            continue;
        };
        let r = free_continuation(&rel, &e, &ty, &k, &tk).map_err(|err| err.to_string())?;
        ensure(r.is_proven(), || format!("continuation failed for {e} with {k}: {r:?}"))?;
        cont += 1;
    }
    ensure(cont == 25, || format!("only {cont} continuation instances generated"))?;
    Ok(format!(
        "identity 100 x {} inhabitants; constant {same}, constCrossType {cross} over {} inhabitants; continuation {cont}",
        ids.len(),
        consts.len()
    ))
}

// 5 ------------------------------------------------------------------------

fn strong_normalization() -> Outcome {
    let level = LangLevel::stlc();
    let corpus = ValueCorpus::new(3, 0);
    let opts = CheckOptions { fuel: 10_000, ..CheckOptions::default() };
    let (mut terms, mut steps_max, mut bounded) = (0, 0, 0);
    let mut seed = 0;
    while terms < 1000 {
        seed += 1;
        let ty = gen_type(level, 2, seed);
        let Ok(e) = gen_well_typed(level, &[], &TermCtx::new(), &ty, 30, seed) else { continue };
        ensure(e.size() <= 30, || format!("generated term of size {}", e.size()))?;
        match eval_closed(&e, 10_000) {
            EvalResult::Value { steps, .. } => steps_max = steps_max.max(steps),
            other => return Err(format!("{e} did not normalize: {other:?}")),
        }
        let v = sn_check(&e, &ty, &corpus, opts).map_err(|err| format!("{e}: {err}"))?;
        ensure(!v.is_disproven(), || format!("sn_check refuted {e}: {v:?}"))?;
        if !v.is_proven() {
            bounded += 1;
        }
        terms += 1;
    }
    Ok(format!("{terms} terms normalize (max {steps_max} steps); sn_check: {} proven, {bounded} up to bounds", terms - bounded))
}

// 6 ------------------------------------------------------------------------

/// Runs `e` step by step, extending the store typing at each allocation
/// and re-checking the configuration's type.
fn preserved_run(e: &Term, ty: &Type, fuel: usize, mut alloc: Allocator) -> Result<Option<Term>, String> {
    let mut c = Config::new(e.clone());
    let mut sigma = StoreTyping::new();
    for _ in 0..fuel {
        if c.expr.is_value() {
            return Ok(Some(c.expr));
        }
        match step_in_place(&mut c, &mut alloc) {
            Ok(Some(_)) => {}
            Ok(None) => unreachable!(),
            Err(reason) => return Err(format!("{e} stuck: {reason}")),
        }
        for (l, v) in c.heap.iter() {
            if !sigma.contains_key(l) {
                let t = typecheck(&sigma, &[], &TermCtx::new(), v).map_err(|err| format!("stored {v}: {err}"))?;
                sigma.insert(*l, t);
            }
        }
        let t = typecheck(&sigma, &[], &TermCtx::new(), &c.expr).map_err(|err| format!("{} after stepping {e}: {err}", c.expr))?;
        ensure(t.alpha_eq(ty), || format!("{} has type {t}, expected {ty}", c.expr))?;
        ensure(heap_well_typed(&c.heap, &sigma), || format!("heap ill-typed while running {e}"))?;
    }
    Ok(None)
}

fn type_safety() -> Outcome {
    let level = LangLevel::full();
    let (mut terms, mut values, mut with_refs) = (0, 0, 0);
    let mut seed = 0;
    while terms < 1000 {
        seed += 1;
        let ty = gen_type(level, 2, seed);
        let Ok(e) = gen_well_typed(level, &[], &TermCtx::new(), &ty, 20, seed) else { continue };
        for alloc in [Allocator::Sequential, Allocator::randomized(seed)] {
            if preserved_run(&e, &ty, 1000, alloc)?.is_some() {
                values += 1;
            }
        }
        if e.to_string().contains("ref ") {
            with_refs += 1;
        }
        terms += 1;
    }
    Ok(format!("{terms} terms x 2 allocators: 0 stuck, {values} runs reached values, preservation held at every step ({with_refs} terms allocate)"))
}

// 7 ------------------------------------------------------------------------

fn step_types() -> Vec<Type> {
    [
        "Bool",
        "Int",
        "Bool * Int",
        "Bool + Int",
        "Int -> Bool",
        "Bool -> Bool",
        "mu a. Bool + Int * a",
        "mu a. a -> a",
        "Ref Bool",
        "Ref Int",
        "Ref (Int -> Int)",
        "Ref Bool -> Bool",
    ]
    .iter()
    .map(|s| parse_type(s).unwrap())
    .collect()
}

fn random_world(rng: &mut ChaCha8Rng, base: &World) -> World {
    let pool = ["Bool", "Int", "Int -> Int", "Ref Bool"].map(|s| parse_type(s).unwrap());
    let mut w = base.clone();
    for _ in 0..rng.gen_range(0..3) {
        let l = Loc(rng.gen_range(0..6));
        if w.get(&l).is_none() {
            w.insert(l, pool.choose(rng).unwrap().clone());
        }
    }
    w
}

/// A value for `ty` under `w`, sometimes of the wrong type on purpose.
fn random_value(rng: &mut ChaCha8Rng, corpus: &ValueCorpus, ty: &Type, w: &World, types: &[Type]) -> Term {
    let ty = if rng.gen_bool(0.2) { types.choose(rng).unwrap() } else { ty };
    if let Type::Ref(_) = ty {
        let locs: Vec<Loc> = w.iter().map(|(l, _)| *l).collect();
        return Term::Loc(*locs.choose(rng).unwrap_or(&Loc(9)));
    }
    corpus.values(ty).choose(rng).cloned().unwrap_or(Term::True)
}

struct Fact {
    k: usize,
    v: Term,
    ty: Type,
    w: World,
}

fn sample_facts(n: usize, seed: u64) -> Vec<Fact> {
    let corpus = ValueCorpus::new(2, seed);
    let types = step_types();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let ty = types.choose(&mut rng).unwrap().clone();
            let w = random_world(&mut rng, &World::new());
            let v = random_value(&mut rng, &corpus, &ty, &w, &types);
            Fact { k: rng.gen_range(0..12), v, ty, w }
        })
        .collect()
}

fn holds(c: &StepChecker, k: usize, v: &Term, ty: &Type, w: &World) -> Result<bool, String> {
    Ok(!c.v_member_k(k, v, ty, w).map_err(|e| format!("{v} : {ty}: {e}"))?.is_disproven())
}

fn step_index_laws() -> Outcome {
    let checker = StepChecker::new(ValueCorpus::new(2, 0), 1000, 7);
    // Downward closure.
    let (mut down_held, mut down_failed) = (0, 0);
    for f in sample_facts(500, 71) {
        if holds(&checker, f.k, &f.v, &f.ty, &f.w)? {
            down_held += 1;
            for j in 0..f.k {
                ensure(holds(&checker, j, &f.v, &f.ty, &f.w)?, || {
                    format!("{} : {} holds at {} but not at {j} in {}", f.v, f.ty, f.k, f.w)
                })?;
            }
        } else {
            down_failed += 1;
        }
    }
    ensure(down_held > 100 && down_failed > 10, || format!("degenerate sample: {down_held} hold, {down_failed} fail"))?;

    // World monotonicity.
    let mut rng = ChaCha8Rng::seed_from_u64(72);
    let mut mono = 0;
    for f in sample_facts(500, 73) {
        if !holds(&checker, f.k, &f.v, &f.ty, &f.w)? {
            continue;
        }
        let mut later = checker.future_worlds(&f.w, &f.ty);
        later.push(random_world(&mut rng, &f.w));
        for w2 in later {
            assert!(future_world(&w2, &f.w));
            ensure(holds(&checker, f.k, &f.v, &f.ty, &w2)?, || format!("{} : {} lost moving from {} to {w2}", f.v, f.ty, f.w))?;
            mono += 1;
        }
    }

    // Future worlds form a partial order.
    let mut rng = ChaCha8Rng::seed_from_u64(74);
    let (mut related, mut eq) = (0, 0);
    for _ in 0..200 {
        let w1 = random_world(&mut rng, &World::new());
        let w2 = if rng.gen_bool(0.5) { random_world(&mut rng, &w1) } else { random_world(&mut rng, &World::new()) };
        let w3 = if rng.gen_bool(0.5) { random_world(&mut rng, &w2) } else { random_world(&mut rng, &World::new()) };
        for w in [&w1, &w2, &w3] {
            ensure(future_world(w, w), || format!("{w} not reflexive"))?;
        }
        for (a, b) in [(&w1, &w2), (&w2, &w3), (&w1, &w3)] {
            if future_world(a, b) && future_world(b, a) {
                ensure(a == b, || format!("{a} and {b} mutually extend but differ"))?;
                eq += 1;
            }
        }
        if future_world(&w3, &w2) && future_world(&w2, &w1) {
            ensure(future_world(&w3, &w1), || format!("{w3} / {w2} / {w1} not transitive"))?;
            related += 1;
        }
    }
    ensure(related > 20, || format!("only {related} chains"))?;

    // k-equality.
    let mut rng = ChaCha8Rng::seed_from_u64(75);
    let vals = [Term::True, Term::False, Term::Int(0), Term::Int(1)];
    let pred = |rng: &mut ChaCha8Rng| {
        IndexedPredicate::closure((0..rng.gen_range(0..5)).map(|_| (rng.gen_range(0..8), vals.choose(rng).unwrap().clone())))
    };
    let mut strict = 0;
    for _ in 0..200 {
        let p = pred(&mut rng);
        let q = if rng.gen_bool(0.3) { p.clone() } else { pred(&mut rng) };
        ensure(p.is_downward_closed() && q.is_downward_closed(), || "closure not downward closed".into())?;
        ensure(k_equal(0, &p, &q), || "k_equal(0) not total".into())?;
        for k in 0..10 {
            if k_equal(k + 1, &p, &q) {
                ensure(k_equal(k, &p, &q), || format!("k_equal({}) but not k_equal({k})", k + 1))?;
            } else if k_equal(k, &p, &q) {
                strict += 1;
            }
        }
    }
    ensure(strict > 0, || "k_equal never strictly refined".into())?;
    Ok(format!(
        "downward closure on 500 facts ({down_held} hold); monotonicity over {mono} world moves; 200 world triples ({related} chains, {eq} equal pairs); 200 predicate pairs"
    ))
}

// 8 ------------------------------------------------------------------------

fn compositionality() -> Result<String, String> {
    let corpus = ValueCorpus::new(2, 0);
    let rel = Relational::new(Catalog::standard(&corpus, 16), ValueCorpus::new(2, 0), 1000);
    let level = LangLevel::stlc();
    let a = Name::new("a");
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut done, mut refuted) = (0, 0);
    let mut seed = 0;
    while done < 200 {
        seed += 1;
        let ty = Generator::new(level, seed).random_type(&[a.clone()], 2);
        if !ty.mentions_var(&a) {
            continue;
        }
        let ty2 = gen_type(level, 1, seed + 1);
        let inst = ty.subst(&a, &ty2);
        let vs = corpus.values(&inst);
        let (Some(x), Some(y)) = (vs.choose(&mut rng), vs.choose(&mut rng)) else { continue };
        let y = if rng.gen_bool(0.5) { x } else { y };
        if rel.v_rel_member(x, y, &inst, &RelSubst::new()).map_err(|e| e.to_string())?.is_disproven() {
            refuted += 1;
        }
        let v = rel
            .compositionality_oracle(&ty, &ty2, &a, &RelSubst::new(), &[(x.clone(), y.clone())])
            .map_err(|e| format!("{ty} [{ty2}/a]: {e}"))?;
        ensure(v.is_proven(), || format!("{ty} with a = {ty2} on ({x}, {y}): {v:?}"))?;
        done += 1;
    }
    Ok(format!("{done} instances ({refuted} unrelated pairs)"))
}

/// Binders renamed to `x` or `y` where that captures nothing, so the
/// substitution has shadowing to get through.
fn shadow(e: &Term, rng: &mut ChaCha8Rng) -> Term {
    let pick = |rng: &mut ChaCha8Rng| Name::new(if rng.gen_bool(0.5) { "x" } else { "y" });
    match e {
        Term::Lam(v, t, body) => {
            let body = shadow(body, rng);
            let n = pick(rng);
            if body.free_vars().contains(&n) && n != *v {
                return Term::Lam(v.clone(), t.clone(), Box::new(body));
            }
            Term::Lam(n.clone(), t.clone(), Box::new(body.subst(v, &Term::Var(n))))
        }
        _ => e.map_children(|c| shadow(c, rng)),
    }
}

fn substitution() -> Result<String, String> {
    let level = LangLevel::stlc();
    let corpus = ValueCorpus::new(2, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (x, y) = (Name::new("x"), Name::new("y"));
    let (mut done, mut shadowed) = (0, 0);
    let mut seed = 0;
    while done < 200 {
        seed += 1;
        let tx = gen_type(level, 1, seed);
        let ty_ = gen_type(level, 1, seed + 1);
        let gamma: TermCtx = [(x.clone(), tx.clone()), (y.clone(), ty_.clone())].into();
        let goal = gen_type(level, 2, seed + 2);
        let Ok(e) = gen_well_typed(level, &[], &gamma, &goal, 14, seed) else { continue };
        let e = shadow(&e, &mut rng);
        let (Some(v), Some(v2)) = (sample_value(&corpus, &tx, &mut rng), sample_value(&corpus, &ty_, &mut rng)) else {
            continue;
        };
        let lhs = e.subst(&x, &v).subst(&y, &v2);
        let rhs = common::subst_simultaneous(&e, &BTreeMap::from([(x.clone(), v.clone()), (y.clone(), v2.clone())]));
        ensure(lhs.alpha_eq(&rhs), || format!("{e} with x={v}, y={v2}: {lhs} vs {rhs}"))?;
        if e.to_string().contains("\\x:") || e.to_string().contains("\\y:") {
            shadowed += 1;
        }
        done += 1;
    }
    Ok(format!("{done} triples ({shadowed} with shadowing binders)"))
}

fn oracle_equivalences() -> Outcome {
    let comp = compositionality()?;
    let bad = common::enumerator_mismatches(4);
    ensure(bad.is_empty(), || bad.join("; "))?;
    let scenarios = common::enumerator_requests().len();
    let subst = substitution()?;
    Ok(format!("compositionality: {comp}; enumerator = unrolling on {scenarios} scenarios, sizes 1-4; substitution: {subst}"))
}

// 9 ------------------------------------------------------------------------

fn allocator_independence() -> Outcome {
    let level = LangLevel::stlc().with(Feature::Ref);
    let (mut programs, mut values, mut allocating) = (0, 0, 0);
    let mut seed = 0;
    while programs < 200 {
        seed += 1;
        let ty = if seed % 2 == 0 { Type::Bool } else { Type::Int };
        let Ok(e) = gen_well_typed(level, &[], &TermCtx::new(), &ty, 24, seed) else { continue };
        let c = Config::new(e.clone());
        let a = eval_star(&c, 10_000, &mut Allocator::Sequential, false);
        let b = eval_star(&c, 10_000, &mut Allocator::randomized(seed), false);
        match (&a, &b) {
            (EvalResult::Value { value: x, heap, .. }, EvalResult::Value { value: y, .. }) => {
                ensure(x == y, || format!("{e}: {x} under seq, {y} under rand"))?;
                values += 1;
                if !heap.is_empty() {
                    allocating += 1;
                }
            }
            (EvalResult::FuelExhausted { .. }, EvalResult::FuelExhausted { .. }) => {}
            _ => return Err(format!("{e}: {a:?} vs {b:?}")),
        }
        programs += 1;
    }
    ensure(allocating > 20, || format!("only {allocating} programs allocate"))?;
    Ok(format!("{programs} programs, {values} values identical, {allocating} of them allocate"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("golden typings", golden_typings),
        ("golden dynamics", golden_dynamics),
        ("existential equivalence", existential_equivalence),
        ("free theorems", free_theorems),
        ("strong normalization", strong_normalization),
        ("type-safety fuzzing", type_safety),
        ("step-index laws", step_index_laws),
        ("oracle equivalences", oracle_equivalences),
        ("allocator independence", allocator_independence),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({secs:.1}s) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({secs:.1}s) {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
