//! `lr`: typecheck, run and relate programs of the lr calculi.
//!
//! Exit codes: 0 success or Proven, 1 Disproven, 2 only bounded answers,
//! 3 usage, parse or type errors.

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lr_core::dynamics::{eval_star, render_config, trace, trace_line, Allocator, Config, Cycle, EvalResult};
use lr_core::equivalence::{distinguish, gen_type, gen_value_corpus, gen_well_typed, ContextTyping};
use lr_core::logrel::{
    e_member, safe_check, sn_check, v_member, Bounds, CheckError, CheckOptions, ValueCorpus, Verdict,
};
use lr_core::relational::{free_constant, free_continuation, free_identity, Catalog, FiniteRel, FreeTheorem, Relational};
use lr_core::statics::{typecheck, TermCtx, TypeError};
use lr_core::stepworld::{StepChecker, World};
use lr_core::surface::{parse_program, parse_relation_literal, parse_term, parse_term_with_locs, parse_type, Program};
use lr_core::{Feature, LangLevel, Term, Type};

#[derive(Parser)]
#[command(name = "lr", version, about = "Executable logical relations workbench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args, Clone)]
struct Opts {
    /// Maximum evaluation steps per run.
    #[arg(long, global = true, default_value_t = 10_000)]
    fuel: usize,
    /// Step index for step-indexed checks.
    #[arg(long, global = true, default_value_t = 25)]
    k: usize,
    #[arg(long, global = true, default_value_t = 3)]
    corpus_depth: usize,
    #[arg(long, global = true, default_value_t = 16)]
    catalog_size: usize,
    /// Largest context size tried by `distinguish`.
    #[arg(long, global = true, default_value_t = 8)]
    ctx_size: usize,
    #[arg(long, global = true, env = "LR_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = AllocKind::Seq)]
    alloc: AllocKind,
    /// Language level, overriding the file's `-- level:` pragma.
    #[arg(long, global = true)]
    level: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = OutputMode::Human)]
    output: OutputMode,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AllocKind {
    Seq,
    Rand,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputMode {
    Human,
    Lines,
}

#[derive(Clone, Copy, ValueEnum)]
enum Demo {
    Omega,
    Landin,
    Packages,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the type of a program.
    Check { file: String },
    /// Evaluate a program from the empty heap.
    Eval { file: String },
    /// Print every step of an evaluation.
    Trace { file: String },
    /// Check strong normalization.
    Sn {
        file: String,
        #[arg(long = "type")]
        ty: Option<String>,
    },
    /// Check that evaluation never gets stuck.
    Safe { file: String },
    /// Check membership in the unary interpretation of a type.
    Member {
        file: String,
        #[arg(long = "type")]
        ty: Option<String>,
        /// World literal, e.g. `W { #l0 : Bool }`.
        #[arg(long)]
        world: Option<String>,
    },
    /// Check logical equivalence of two closed programs.
    Equiv {
        left: String,
        right: String,
        #[arg(long = "type")]
        ty: Option<String>,
        /// Relation literal offered for existential packages.
        #[arg(long)]
        rel: Vec<String>,
    },
    /// Search for a program context telling two programs apart.
    Distinguish {
        left: String,
        right: String,
        #[arg(long = "type")]
        ty: Option<String>,
    },
    /// Run a free theorem on a polymorphic program.
    FreeThm {
        file: String,
        #[arg(long)]
        kind: FreeTheorem,
        /// Type instantiations, in order.
        #[arg(long)]
        inst: Vec<String>,
        /// Argument terms, in order.
        #[arg(long)]
        arg: Vec<String>,
    },
    /// Run one of the built-in examples.
    Demo {
        #[arg(value_enum)]
        which: Demo,
        #[arg(long)]
        rel: Vec<String>,
    },
    /// Generate well-typed terms.
    Gen {
        #[arg(long = "type")]
        ty: Option<String>,
        #[arg(long, default_value_t = 12)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

struct Failure(String);

impl From<CheckError> for Failure {
    fn from(e: CheckError) -> Self {
        Failure(format!("ERROR check {e}"))
    }
}

type Outcome = Result<u8, Failure>;

struct Out {
    lines: bool,
}

impl Out {
    fn record(&self, s: impl AsRef<str>) {
        println!("{}", s.as_ref());
    }

    fn note(&self, s: impl AsRef<str>) {
        if !self.lines {
            println!("{}", s.as_ref());
        }
    }
}

fn code(v: &Verdict) -> u8 {
    match v {
        Verdict::Proven => 0,
        Verdict::Disproven(_) => 1,
        Verdict::UpToBounds(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let out = Out { lines: cli.opts.output == OutputMode::Lines };
    match run(&cli.cmd, &cli.opts, &out) {
        Ok(c) => ExitCode::from(c),
        Err(Failure(msg)) => {
            println!("{msg}");
            ExitCode::from(3)
        }
    }
}

fn level_override(opts: &Opts) -> Result<Option<LangLevel>, Failure> {
    opts.level
        .as_deref()
        .map(|s| s.parse::<LangLevel>().map_err(|e| Failure(format!("ERROR usage --level: {e}"))))
        .transpose()
}

fn load(path: &str, opts: &Opts) -> Result<Program, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure(format!("ERROR io {path}: {e}")))?;
    let mut prog = parse_program(&text).map_err(|e| Failure(format!("ERROR parse {path}: {e}")))?;
    if let Some(level) = level_override(opts)? {
        level.check(&prog.term).map_err(|e| Failure(format!("ERROR level {path}: {e}")))?;
        prog.level = level;
    }
    Ok(prog)
}

fn type_error(path: &str, prog: &Program, e: &TypeError) -> Failure {
    let span = e.span(&prog.spans);
    Failure(format!("ERROR type {path}:{}:{} {e}", span.line, span.column))
}

fn type_of(path: &str, prog: &Program) -> Result<Type, Failure> {
    typecheck(&Default::default(), &[], &TermCtx::new(), &prog.term).map_err(|e| type_error(path, prog, &e))
}

fn type_arg(s: &str) -> Result<Type, Failure> {
    parse_type(s).map_err(|e| Failure(format!("ERROR parse type `{s}`: {e}")))
}

fn term_arg(s: &str) -> Result<Term, Failure> {
    parse_term(s).map_err(|e| Failure(format!("ERROR parse term `{s}`: {e}")))
}

fn relation_arg(s: &str) -> Result<FiniteRel, Failure> {
    let lit = parse_relation_literal(s).map_err(|e| Failure(format!("ERROR parse --rel: {e}")))?;
    FiniteRel::from_literal(&lit).map_err(|e| Failure(format!("ERROR --rel: {e}")))
}

fn allocator(opts: &Opts) -> Allocator {
    match opts.alloc {
        AllocKind::Seq => Allocator::Sequential,
        AllocKind::Rand => Allocator::randomized(opts.seed),
    }
}

fn bounds(opts: &Opts) -> Bounds {
    Bounds::new(opts.fuel, opts.corpus_depth)
}

fn relational(opts: &Opts, supplied: Vec<FiniteRel>) -> Relational {
    let catalog = Catalog::standard(&ValueCorpus::new(opts.corpus_depth, opts.seed), opts.catalog_size);
    Relational::new(catalog, ValueCorpus::new(opts.corpus_depth, opts.seed), opts.fuel).with_supplied(supplied)
}

fn header(name: &str, opts: &Opts, out: &Out) {
    let alloc = match opts.alloc {
        AllocKind::Seq => "seq",
        AllocKind::Rand => "rand",
    };
    out.record(format!("RUN cmd={name} seed={} alloc={alloc}", opts.seed));
}

fn report_cycle(c: &Cycle, out: &Out) {
    out.note(format!("configuration repeats every {} steps", c.period()));
    out.record(format!("CYCLE first={} repeat={} period={}", c.first_step, c.repeat_step, c.period()));
    for (n, cfg) in [(c.first_step, &c.first), (c.repeat_step, &c.repeat)] {
        let (e, h) = render_config(cfg);
        out.record(format!("CONFIG step={n} EXPR {e} HEAP {h}"));
    }
}

fn report_eval(r: &EvalResult, out: &Out) -> u8 {
    match r {
        EvalResult::Value { value, steps, .. } => {
            out.record(format!("RESULT value {value} steps={steps}"));
            0
        }
        EvalResult::Stuck { config, reason, steps } => {
            out.record(format!("RESULT stuck {reason} steps={steps} at {}", config.expr));
            1
        }
        EvalResult::FuelExhausted { steps, cycle, .. } => {
            out.record(format!("RESULT fuel-exhausted steps={steps}"));
            if let Some(c) = cycle {
                report_cycle(c, out);
            }
            2
        }
    }
}

fn run(cmd: &Cmd, opts: &Opts, out: &Out) -> Outcome {
    match cmd {
        Cmd::Check { file } => {
            let prog = load(file, opts)?;
            let t = type_of(file, &prog)?;
            if out.lines {
                out.record(format!("TYPE {t}"));
            } else {
                out.record(t.to_string());
            }
            Ok(0)
        }
        Cmd::Eval { file } => {
            let prog = load(file, opts)?;
            type_of(file, &prog)?;
            header("eval", opts, out);
            let r = eval_star(&Config::new(prog.term), opts.fuel, &mut allocator(opts), true);
            Ok(report_eval(&r, out))
        }
        Cmd::Trace { file } => {
            let prog = load(file, opts)?;
            type_of(file, &prog)?;
            header("trace", opts, out);
            let start = Config::new(prog.term);
            for (i, entry) in trace(&start, opts.fuel, &mut allocator(opts)).iter().enumerate() {
                out.record(trace_line(i + 1, entry));
            }
            let r = eval_star(&start, opts.fuel, &mut allocator(opts), true);
            Ok(report_eval(&r, out))
        }
        Cmd::Sn { file, ty } => {
            let prog = load(file, opts)?;
            let t = match ty {
                Some(s) => type_arg(s)?,
                None => type_of(file, &prog)?,
            };
            header("sn", opts, out);
            let corpus = ValueCorpus::new(opts.corpus_depth, opts.seed);
            let v = sn_check(&prog.term, &t, &corpus, CheckOptions { fuel: opts.fuel, nesting: 3 })?;
            out.record(v.line(&bounds(opts)));
            Ok(code(&v))
        }
        Cmd::Safe { file } => {
            let prog = load(file, opts)?;
            type_of(file, &prog)?;
            header("safe", opts, out);
            let (v, cycle) = safe_check(&prog.term, opts.fuel, &mut allocator(opts))?;
            if let Some(c) = &cycle {
                report_cycle(c, out);
            }
            out.record(v.line(&bounds(opts)));
            Ok(code(&v))
        }
        Cmd::Member { file, ty, world } => member(file, ty.as_deref(), world.as_deref(), opts, out),
        Cmd::Equiv { left, right, ty, rel } => {
            let (l, r) = (load(left, opts)?, load(right, opts)?);
            let t = match ty {
                Some(s) => type_arg(s)?,
                None => type_of(left, &l)?,
            };
            let supplied = rel.iter().map(|s| relation_arg(s)).collect::<Result<Vec<_>, _>>()?;
            header("equiv", opts, out);
            let v = relational(opts, supplied).log_equiv_check(&[], &TermCtx::new(), &l.term, &r.term, &t)?;
            let mut b = bounds(opts);
            b.catalog = Some(opts.catalog_size);
            out.record(v.line(&b));
            Ok(code(&v))
        }
        Cmd::Distinguish { left, right, ty } => {
            let (l, r) = (load(left, opts)?, load(right, opts)?);
            let t = match ty {
                Some(s) => type_arg(s)?,
                None => type_of(left, &l)?,
            };
            let level = level_override(opts)?.unwrap_or_else(|| union_level(&l.term, &r.term, &t));
            header("distinguish", opts, out);
            let report = distinguish(&l.term, &r.term, &ContextTyping::closed(t), opts.ctx_size, opts.fuel, level);
            out.note(format!("{} contexts tried", report.contexts_tried));
            out.record(report.line());
            let mut b = bounds(opts);
            b.ctx = Some(opts.ctx_size);
            out.record(report.verdict.line(&b));
            Ok(code(&report.verdict))
        }
        Cmd::FreeThm { file, kind, inst, arg } => free_thm(file, *kind, inst, arg, opts, out),
        Cmd::Demo { which, rel } => demo(*which, rel, opts, out),
        Cmd::Gen { ty, size, count } => {
            let level = level_override(opts)?.unwrap_or_else(LangLevel::full);
            let t = match ty {
                Some(s) => type_arg(s)?,
                None => gen_type(level, 3, opts.seed),
            };
            header("gen", opts, out);
            let mut status = 0;
            for i in 0..*count {
                let seed = opts.seed.wrapping_add(i as u64);
                match gen_well_typed(level, &[], &TermCtx::new(), &t, *size, seed) {
                    Ok(e) => out.record(format!("TERM seed={seed} type={t} term={e}")),
                    Err(err) => {
                        out.record(format!("GENERATION-FAILED seed={seed} {err}"));
                        status = 1;
                    }
                }
            }
            Ok(status)
        }
    }
}

/// The smallest level covering both terms and their type.
fn union_level(a: &Term, b: &Term, t: &Type) -> LangLevel {
    let mut level = LangLevel::stlc();
    for f in a.features().features().into_iter().chain(b.features().features()).chain(t.features().features()) {
        level.insert(f);
    }
    level
}

fn member(file: &str, ty: Option<&str>, world: Option<&str>, opts: &Opts, out: &Out) -> Outcome {
    let text = fs::read_to_string(file).map_err(|e| Failure(format!("ERROR io {file}: {e}")))?;
    // Members may mention locations of the world, so they are read with
    // location literals enabled.
    let (term, file_level) = match parse_program(&text) {
        Ok(p) => (p.term, p.level),
        Err(_) => {
            let term = parse_term_with_locs(&text).map_err(|e| Failure(format!("ERROR parse {file}: {e}")))?;
            (term, LangLevel::full())
        }
    };
    let w = match world {
        Some(s) => World::parse(s).map_err(|e| Failure(format!("ERROR parse --world: {e}")))?,
        None => World::new(),
    };
    let t = match ty {
        Some(s) => type_arg(s)?,
        None => typecheck(&w.store_typing(), &[], &TermCtx::new(), &term)
            .map_err(|e| Failure(format!("ERROR type {file} {e}")))?,
    };
    let level = level_override(opts)?.unwrap_or(file_level);
    header("member", opts, out);
    let corpus = ValueCorpus::new(opts.corpus_depth, opts.seed);
    let mut b = bounds(opts);
    let stepped = (level.has(Feature::Mu) || level.has(Feature::Ref)) && !t.features().has(Feature::SystemF)
        && !t.features().has(Feature::Existential);
    let v = if stepped {
        b.k = Some(opts.k);
        let sc = StepChecker::new(corpus, opts.fuel, opts.seed);
        if term.is_value() {
            sc.v_member_k(opts.k, &term, &t, &w)?
        } else {
            let Some(h) = sc.heap_for(&w) else {
                return Err(Failure("ERROR no heap satisfies the world".into()));
            };
            sc.e_member_k(opts.k, &term, &t, &w, &h)?
        }
    } else {
        let o = CheckOptions { fuel: opts.fuel, nesting: 3 };
        if term.is_value() {
            v_member(&term, &t, &corpus, o)?
        } else {
            e_member(&term, &t, &corpus, o)?
        }
    };
    out.record(v.line(&b));
    Ok(code(&v))
}

fn pick(ty: &Type, opts: &Opts, offset: u64) -> Result<Term, Failure> {
    let vs = gen_value_corpus(ty, opts.corpus_depth, opts.seed);
    if vs.is_empty() {
        return Err(Failure(format!("ERROR no sample values of type {ty}; pass --arg")));
    }
    Ok(vs[((opts.seed.wrapping_add(offset)) % vs.len() as u64) as usize].clone())
}

fn free_thm(file: &str, kind: FreeTheorem, inst: &[String], args: &[String], opts: &Opts, out: &Out) -> Outcome {
    let prog = load(file, opts)?;
    type_of(file, &prog)?;
    let types = inst.iter().map(|s| type_arg(s)).collect::<Result<Vec<_>, _>>()?;
    let terms = args.iter().map(|s| term_arg(s)).collect::<Result<Vec<_>, _>>()?;
    let ty_at = |i: usize, default: Type| types.get(i).cloned().unwrap_or(default);
    let term_at = |i: usize, ty: &Type| match terms.get(i) {
        Some(t) => Ok(t.clone()),
        None => pick(ty, opts, i as u64),
    };
    header("free-thm", opts, out);
    let e = &prog.term;
    let v = match kind {
        FreeTheorem::Identity => {
            let t = ty_at(0, Type::Bool);
            let v = term_at(0, &t)?;
            out.note(format!("instantiating at {t} with {v}"));
            free_identity(e, &t, &v, opts.fuel)?
        }
        FreeTheorem::Constant => {
            let t = ty_at(0, Type::Int);
            let (a, b) = (term_at(0, &t)?, term_at(1, &t)?);
            free_constant(e, &t, &a, &t, &b, opts.fuel)?
        }
        FreeTheorem::ConstCrossType => {
            let (t1, t2) = (ty_at(0, Type::Bool), ty_at(1, Type::Int));
            let (a, b) = (term_at(0, &t1)?, term_at(1, &t2)?);
            free_constant(e, &t1, &a, &t2, &b, opts.fuel)?
        }
        FreeTheorem::Continuation => {
            let (t, tk) = (ty_at(0, Type::Int), ty_at(1, Type::Bool));
            let k = match terms.first() {
                Some(k) => k.clone(),
                None => gen_well_typed(LangLevel::stlc(), &[], &TermCtx::new(), &Type::arrow(t.clone(), tk.clone()), 8, opts.seed)
                    .map_err(|err| Failure(format!("ERROR {err}; pass --arg")))?,
            };
            out.note(format!("continuation {k}"));
            free_continuation(&relational(opts, vec![]), e, &t, &k, &tk)?
        }
    };
    out.record(v.line(&bounds(opts)));
    Ok(code(&v))
}

const PKG: &str = "ex a. a * (a -> Bool)";

fn demo(which: Demo, rel: &[String], opts: &Opts, out: &Out) -> Outcome {
    let term = |s: &str| parse_term(s).expect("built-in example parses");
    match which {
        Demo::Omega => {
            header("demo-omega", opts, out);
            let m = "mu a. a -> a";
            let w = format!("\\x: {m}. (unfold x) x");
            let t = typecheck(&Default::default(), &[], &TermCtx::new(), &term(&w)).expect("omega typechecks");
            out.record(format!("TYPE {t}"));
            let app = term(&format!("({w}) (fold ({w}) as {m})"));
            let (v, cycle) = safe_check(&app, opts.fuel, &mut allocator(opts))?;
            if let Some(c) = &cycle {
                report_cycle(c, out);
            }
            out.record(v.line(&bounds(opts)));
            Ok(code(&v))
        }
        Demo::Landin => {
            header("demo-landin", opts, out);
            let e = term("((\\x: Ref (Int -> Int). (\\y: Int -> Int. !x) (x := \\n:Int. !x 0)) (ref (\\x:Int. x))) 0");
            let t = typecheck(&Default::default(), &[], &TermCtx::new(), &e).expect("landin typechecks");
            out.record(format!("TYPE {t}"));
            let start = Config::new(e.clone());
            for (i, entry) in trace(&start, 8.min(opts.fuel), &mut allocator(opts)).iter().enumerate() {
                out.record(trace_line(i + 1, entry));
            }
            let (v, cycle) = safe_check(&e, opts.fuel, &mut allocator(opts))?;
            if let Some(c) = &cycle {
                report_cycle(c, out);
            }
            out.record(v.line(&bounds(opts)));
            Ok(code(&v))
        }
        Demo::Packages => {
            header("demo-packages", opts, out);
            let e1 = term(&format!("pack <Int, <1, \\x:Int. x = 0>> as {PKG}"));
            let e2 = term(&format!("pack <Bool, <true, \\x:Bool. not x>> as {PKG}"));
            let e3 = term(&format!("pack <Int, <1, \\x:Int. x = 1>> as {PKG}"));
            let ty = parse_type(PKG).expect("package type parses");
            let supplied = rel.iter().map(|s| relation_arg(s)).collect::<Result<Vec<_>, _>>()?;
            let mut b = bounds(opts);
            b.catalog = Some(opts.catalog_size);
            let v = relational(opts, supplied).log_equiv_check(&[], &TermCtx::new(), &e1, &e2, &ty)?;
            out.note("e1 ~ e2:");
            out.record(v.line(&b));
            let level = LangLevel::stlc().with(Feature::Existential);
            let mut b = bounds(opts);
            b.ctx = Some(opts.ctx_size);
            out.note("a context telling e1 from e3:");
            let r = distinguish(&e1, &e3, &ContextTyping::closed(ty), opts.ctx_size, opts.fuel, level);
            out.record(r.line());
            out.record(r.verdict.line(&b));
            Ok(code(&v))
        }
    }
}
