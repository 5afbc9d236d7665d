//! Finite samples of closed values, indexed by type.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::enumerate::Enumerator;
use crate::kernel::{Feature, LangLevel, Name, Term, Type};

/// Cap on the number of values listed for one type.
pub const ENTRY_CAP: usize = 48;

pub const INT_SAMPLES: [i64; 7] = [-2, -1, 0, 1, 2, i64::MIN, i64::MAX];

/// Closed values of type `ty`.
///
/// `Bool` is exhaustive and `Int` is a fixed sample. Functions are
/// λ-abstractions whose bodies are all terms of size at most `depth`, in
/// increasing size. Reference and variable types have no closed values
/// without a heap, so their entries are empty.
pub fn gen_value_corpus(ty: &Type, depth: usize, seed: u64) -> Vec<Term> {
    let mut level = LangLevel::stlc();
    for f in ty.features().features() {
        level.insert(f);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    values(level, &[], ty, depth, &mut rng)
}

fn values(level: LangLevel, delta: &[Name], ty: &Type, depth: usize, rng: &mut ChaCha8Rng) -> Vec<Term> {
    let mut out = match ty {
        Type::Bool => vec![Term::True, Term::False],
        Type::Int => INT_SAMPLES.iter().map(|&n| Term::Int(n)).collect(),
        Type::Prod(a, b) => {
            let (xs, ys) = (values(level, delta, a, depth, rng), values(level, delta, b, depth, rng));
            let mut out = Vec::new();
            for x in &xs {
                for y in &ys {
                    out.push(Term::pair(x.clone(), y.clone()));
                }
            }
            out
        }
        Type::Sum(a, b) => {
            let mut out: Vec<Term> =
                values(level, delta, a, depth, rng).into_iter().map(|v| Term::inl(v, ty.clone())).collect();
            out.extend(values(level, delta, b, depth, rng).into_iter().map(|v| Term::inr(v, ty.clone())));
            out
        }
        Type::Arrow(..) | Type::Forall(..) => abstractions(level, delta, ty, depth),
        Type::Exists(a, body) => {
            let mut out = Vec::new();
            for w in [Type::Bool, Type::Int] {
                for v in values(level, delta, &body.subst(a, &w), depth, rng) {
                    out.push(Term::pack(w.clone(), v, ty.clone()));
                }
            }
            out
        }
        Type::Mu(..) if depth > 0 => {
            let unrolled = ty.unfold_mu().expect("mu type");
            values(level, delta, &unrolled, depth - 1, rng).into_iter().map(|v| Term::fold(v, ty.clone())).collect()
        }
        Type::Mu(..) | Type::Ref(_) | Type::Var(_) => vec![],
    };
    if out.len() > ENTRY_CAP {
        // Keep the smallest values, sampling among those of the cut-off size.
        out.sort_by_key(Term::size);
        let cutoff = out[ENTRY_CAP - 1].size();
        let mut keep: Vec<Term> = out.iter().filter(|v| v.size() < cutoff).cloned().collect();
        let mut tail: Vec<Term> = out.into_iter().filter(|v| v.size() == cutoff).collect();
        tail.shuffle(rng);
        let room = ENTRY_CAP - keep.len();
        keep.extend(tail.into_iter().take(room));
        out = keep;
    }
    out
}

/// Values of arrow and universal type, built from enumerated bodies.
fn abstractions(level: LangLevel, delta: &[Name], ty: &Type, depth: usize) -> Vec<Term> {
    if matches!(ty, Type::Forall(..)) && !level.has(Feature::SystemF) {
        return vec![];
    }
    let mut en = Enumerator::new(level, &[ty.clone()]);
    let mut out = Vec::new();
    for n in 2..=depth + 1 {
        for e in en.terms(delta, &[], ty, n).iter() {
            if e.is_value() {
                out.push(e.clone());
            }
        }
        if out.len() >= ENTRY_CAP * 4 {
            break;
        }
    }
    out
}
