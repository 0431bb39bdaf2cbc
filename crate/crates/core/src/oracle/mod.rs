//! Independent checks of engine output.
//!
//! The formal check removes divergence flags by differentiating them out
//! with the full product rule and compares merged lists exactly. The numeric
//! check in [`numeric`] evaluates both sides at sample points from closed
//! forms of the weights and a test polynomial, with derivatives carried by
//! dual numbers instead of the rewrite rules.

pub mod numeric;

use crate::error::{Error, Result};
use crate::term::{BilinearPart, Deriv, DivergenceFlags, Term, TermList};
use crate::weight::{Direction, WeightModel};

/// Flag-free expansion of one term. Slots may acquire time derivatives in
/// either position; they are ordered by the general canonical slot rule.
pub fn expand_divergence(term: &Term, model: &WeightModel) -> Result<TermList> {
    let mut out = TermList::new(term.schema);
    let dir = match (term.flags.dt, term.flags.dx) {
        (false, false) => {
            out.push(term.clone())?;
            return Ok(out);
        }
        (true, false) => Direction::T,
        (false, true) => Direction::X,
        (true, true) => {
            return Err(Error::Contract(
                "a term cannot carry both divergence flags".into(),
            ))
        }
    };
    let bump = |d: Deriv| match dir {
        Direction::T => Deriv::new(d.t + 1, d.x),
        Direction::X => Deriv::new(d.t, d.x + 1),
    };
    let BilinearPart { first, second } = term.bilinear;
    let plain = |coeff, weight, bilinear| {
        Term::new(term.schema, coeff, weight, bilinear).with_flags(DivergenceFlags::NONE)
    };
    for (w, c) in &model.diff_factor_product(&term.weight, dir)? {
        out.push(plain(&term.coeff * c, w.clone(), term.bilinear))?;
    }
    out.push(plain(
        term.coeff.clone(),
        term.weight.clone(),
        BilinearPart::new(bump(first), second),
    ))?;
    out.push(plain(
        term.coeff.clone(),
        term.weight.clone(),
        BilinearPart::new(first, bump(second)),
    ))?;
    Ok(out)
}

/// Flag-free expansion of a whole list, merged.
pub fn expand_all(list: &TermList, model: &WeightModel) -> Result<TermList> {
    let mut out = TermList::new(list.schema());
    for term in list.iter() {
        out.extend_list(&expand_divergence(&term, model)?)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdentityCheck {
    Ok,
    /// `expand(output) - expand(input)`, nonzero.
    Diff(TermList),
}

impl IdentityCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, IdentityCheck::Ok)
    }
}

/// Checks that `output` denotes the same function as `input` once every
/// total derivative is expanded.
pub fn verify_identity(
    input: &TermList,
    output: &TermList,
    model: &WeightModel,
) -> Result<IdentityCheck> {
    let diff = expand_all(output, model)?.difference(&expand_all(input, model)?)?;
    Ok(if diff.is_empty() {
        IdentityCheck::Ok
    } else {
        IdentityCheck::Diff(diff)
    })
}
