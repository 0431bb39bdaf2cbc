//! Seeded generators shared by the integration and acceptance tests.
#![allow(dead_code)]

use carleman_ibp::rational::ratio;
use carleman_ibp::{
    BilinearPart, Deriv, FactorExponents, ScalarExponents, Schema, Symbol, Term, TermList, Weight,
};
use num_rational::BigRational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_coeff(rng: &mut ChaCha8Rng) -> BigRational {
    let mut p = 0;
    while p == 0 {
        p = rng.gen_range(-20..=20);
    }
    ratio(p, rng.gen_range(1..=6))
}

pub fn random_weight(rng: &mut ChaCha8Rng, schema: Schema) -> Weight {
    let lam = rng.gen_range(0..=8);
    let gamma = rng.gen_range(0..=2);
    match schema {
        Schema::Poly => Weight::new(
            ScalarExponents::new(lam, 0, gamma),
            FactorExponents::new().with(Symbol::Mu, rng.gen_range(0..=8)),
        ),
        Schema::Exp => {
            let mut factors = FactorExponents::new();
            for sym in [
                Symbol::Phi(1),
                Symbol::Phi(2),
                Symbol::Phi(3),
                Symbol::Phi(4),
                Symbol::Varphi,
                Symbol::VarphiT,
            ] {
                if rng.gen_bool(0.5) {
                    factors.set(sym, rng.gen_range(1..=8));
                }
            }
            Weight::new(
                ScalarExponents::new(lam, rng.gen_range(0..=8), gamma),
                factors,
            )
        }
    }
}

/// A canonical, unflagged engine input: x-orders at most 4, time order at
/// most 1 in the first slot.
pub fn random_term(rng: &mut ChaCha8Rng, schema: Schema) -> Term {
    let bilinear = BilinearPart::new(
        Deriv::new(rng.gen_range(0..=1), rng.gen_range(0..=4)),
        Deriv::x(rng.gen_range(0..=4)),
    )
    .canonical();
    Term::new(
        schema,
        random_coeff(rng),
        random_weight(rng, schema),
        bilinear,
    )
}

pub fn random_list(rng: &mut ChaCha8Rng, schema: Schema, n: usize) -> TermList {
    TermList::from_terms(schema, (0..n).map(|_| random_term(rng, schema))).unwrap()
}

/// Rational points with `t` in `[T/10, 9T/10]` for `T = 1` and `x` in `[0, 1]`.
pub fn interior_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<(BigRational, BigRational)> {
    (0..n)
        .map(|_| {
            (
                ratio(rng.gen_range(100..=900), 1000),
                ratio(rng.gen_range(0..=1000), 1000),
            )
        })
        .collect()
}
