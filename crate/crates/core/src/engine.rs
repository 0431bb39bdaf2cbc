//! The integration-by-parts rewriting engine.
//!
//! A bilinear term `c · W · w_b · w_c` with `b = (bt, bx)` and `c = (0, cx)`
//! is rewritten by moving one x-derivative (or the single t-derivative) out
//! into a total derivative until it is terminal: flagged, a perfect square
//! with no time derivative, or of the cross shape `w_{t x^k} w_{x^{k+1}}`.

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rational::half;
use crate::term::{BilinearPart, Deriv, DivergenceFlags, Term, TermList};
use crate::weight::{Direction, WeightModel};

pub fn is_terminal(term: &Term) -> bool {
    let b = term.bilinear.first;
    let c = term.bilinear.second;
    term.coeff.is_zero() || term.flags.any() || b.t + b.x == c.x
}

/// `|cx - bx - bt|`.
pub fn gap(term: &Term) -> u32 {
    let b = term.bilinear.first;
    let c = term.bilinear.second;
    (c.x as i64 - b.x as i64 - b.t as i64).unsigned_abs() as u32
}

/// A measure that strictly decreases from a non-terminal term to each of
/// its non-terminal rewrite children: `2·gap - δ`, where `δ = 1` when the
/// first slot carries the time derivative and is at least as x-heavy as the
/// second. The plain gap stalls on `w_{t x^k} w_{x^{k+2}} → w_{t x^{k+1}} w_{x^{k+1}}`.
pub fn termination_measure(term: &Term) -> u32 {
    let b = term.bilinear.first;
    let c = term.bilinear.second;
    let delta = u32::from(b.t == 1 && b.x >= c.x);
    2 * gap(term) - delta
}

fn check_shape(term: &Term) -> Result<()> {
    let bl = term.bilinear;
    if bl.second.t != 0 {
        return Err(Error::Contract(format!(
            "second slot carries a time derivative: {:?}",
            bl
        )));
    }
    if bl.first.t > 1 {
        return Err(Error::Contract(format!(
            "first slot has time order {} > 1",
            bl.first.t
        )));
    }
    if term.flags.dt && term.flags.dx {
        return Err(Error::Contract("term carries both divergence flags".into()));
    }
    Ok(())
}

struct Emitter<'a> {
    src: &'a Term,
    model: &'a WeightModel,
    out: Vec<Term>,
}

impl Emitter<'_> {
    fn plain(&mut self, coeff: BigRational, bilinear: BilinearPart, flags: DivergenceFlags) {
        let term =
            Term::new(self.src.schema, coeff, self.src.weight.clone(), bilinear).with_flags(flags);
        self.push(term);
    }

    fn weight_derivative(
        &mut self,
        coeff: BigRational,
        bilinear: BilinearPart,
        dir: Direction,
    ) -> Result<()> {
        let dw = self.model.diff_factor_product(&self.src.weight, dir)?;
        for (w, c) in &dw {
            self.push(Term::new(self.src.schema, &coeff * c, w.clone(), bilinear));
        }
        Ok(())
    }

    fn push(&mut self, mut term: Term) {
        if term.coeff.is_zero() {
            return;
        }
        term.bilinear = term.bilinear.canonical();
        self.out.push(term);
    }
}

/// One application of the rewrite rules to a non-terminal term. Children
/// are canonical, unmerged and nonzero, in emission order.
pub fn rewrite_step(term: &Term, model: &WeightModel) -> Result<Vec<Term>> {
    check_shape(term)?;
    if is_terminal(term) {
        return Err(Error::Contract(
            "rewrite_step called on a terminal term".into(),
        ));
    }
    if term.schema != model.schema() {
        return Err(Error::MixedSchema {
            expected: model.schema(),
            found: term.schema,
        });
    }
    let Deriv { t: bt, x: bx } = term.bilinear.first;
    let cx = term.bilinear.second.x;
    let c = term.coeff.clone();
    let mut em = Emitter {
        src: term,
        model,
        out: Vec::with_capacity(4),
    };
    let pair = |a: Deriv, b: u32| BilinearPart::new(a, Deriv::x(b));

    if bt == 1 && bx == cx {
        // w_{t x^k} w_{x^k} = ½ (w_{x^k}^2)_t
        let sq = BilinearPart::square(bx);
        em.plain(&c * half(), sq, DivergenceFlags::T);
        em.weight_derivative(-&c * half(), sq, Direction::T)?;
    } else if bt == 0 && cx == bx + 1 {
        // w_{x^k} w_{x^{k+1}} = ½ (w_{x^k}^2)_x
        let sq = BilinearPart::square(bx);
        em.plain(&c * half(), sq, DivergenceFlags::X);
        em.weight_derivative(-&c * half(), sq, Direction::X)?;
    } else if cx > bx {
        let b = Deriv::new(bt, bx);
        em.plain(c.clone(), pair(b, cx - 1), DivergenceFlags::X);
        em.plain(
            -&c,
            pair(Deriv::new(bt, bx + 1), cx - 1),
            DivergenceFlags::NONE,
        );
        em.weight_derivative(-&c, pair(b, cx - 1), Direction::X)?;
    } else {
        let lowered = Deriv::new(bt, bx - 1);
        em.plain(c.clone(), pair(lowered, cx), DivergenceFlags::X);
        em.plain(-&c, pair(lowered, cx + 1), DivergenceFlags::NONE);
        em.weight_derivative(-&c, pair(lowered, cx), Direction::X)?;
    }
    Ok(em.out)
}

/// Rewrites every non-terminal term until none remain; the result is merged.
pub fn reduce(list: &TermList, model: &WeightModel) -> Result<TermList> {
    let mut current = list.clone();
    loop {
        let mut next = TermList::new(list.schema());
        let mut changed = false;
        for term in current.iter() {
            check_shape(&term)?;
            if is_terminal(&term) {
                next.push_key(term.key(), term.coeff);
            } else {
                changed = true;
                for child in rewrite_step(&term, model)? {
                    next.push_key(child.key(), child.coeff);
                }
            }
        }
        if !changed {
            return Ok(next);
        }
        current = next;
    }
}

/// Per-loop snapshots of an unmerged breadth-first reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub loops: Vec<Vec<Term>>,
}

impl Trace {
    pub fn last(&self) -> Option<&[Term]> {
        self.loops.last().map(Vec::as_slice)
    }
}

/// Like [`reduce`], but rows are never merged: each loop replaces every
/// non-terminal row in place by its children, and the row list after each
/// loop is recorded. Returns the merged final list and the trace.
pub fn reduce_traced(rows: &[Term], model: &WeightModel) -> Result<(TermList, Trace)> {
    let schema = model.schema();
    let mut current: Vec<Term> = rows
        .iter()
        .map(|t| {
            if t.schema != schema {
                return Err(Error::MixedSchema {
                    expected: schema,
                    found: t.schema,
                });
            }
            t.canonicalize()
        })
        .collect::<Result<_>>()?;
    let mut loops = Vec::new();
    loop {
        let mut next = Vec::with_capacity(current.len() * 3);
        let mut changed = false;
        for term in &current {
            check_shape(term)?;
            if is_terminal(term) {
                next.push(term.clone());
            } else {
                changed = true;
                next.extend(rewrite_step(term, model)?);
            }
        }
        if !changed {
            break;
        }
        loops.push(next.clone());
        current = next;
    }
    let merged = TermList::from_terms(schema, current)?;
    Ok((merged, Trace { loops }))
}
