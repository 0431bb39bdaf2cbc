//! Conjugation of `γ∂t + ∂x⁴` (and of `∂x²`) by the weight `e^{λ·potential}`,
//! the split of the result into multiplier groups, and the products of
//! multiplier groups that feed the engine.
//!
//! With `ℓ = λψ` (or `λρ`) the conjugated space derivative is
//! `D̃ = ∂x - ℓ_x`, so `θ∂x^n(θ^{-1}w) = D̃^n w`. The time part contributes
//! `γ w_t - γ ℓ_t w`; `ℓ_t` has no symbol in either schema and is carried as
//! an [`Omitted`] marker.

use std::fmt;

use crate::error::{Error, Result};
use crate::rational::rat;
use crate::term::{
    BilinearPart, Deriv, FactorExponents, ScalarExponents, Term, TermList, UnaryKey, UnaryList,
    UnaryTerm, Weight,
};
use crate::weight::{Direction, RhoMonomial, WeightModel, WeightPoly};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorOrder {
    /// `∂x²`, with no time part.
    Second,
    /// `γ∂t + ∂x⁴`.
    Fourth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OperatorSpec {
    pub order: OperatorOrder,
    /// Carry γ as a symbolic scalar; when false γ is instantiated as 1.
    pub gamma_present: bool,
}

impl OperatorSpec {
    pub fn second() -> Self {
        Self {
            order: OperatorOrder::Second,
            gamma_present: false,
        }
    }

    pub fn fourth(gamma_present: bool) -> Self {
        Self {
            order: OperatorOrder::Fourth,
            gamma_present,
        }
    }

    fn space_order(&self) -> u32 {
        match self.order {
            OperatorOrder::Second => 2,
            OperatorOrder::Fourth => 4,
        }
    }

    fn gamma_weight(&self) -> Weight {
        Weight::new(
            ScalarExponents::new(0, 0, u32::from(self.gamma_present)),
            FactorExponents::new(),
        )
    }
}

/// Parts of the expansion that are known but not representable as terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Omitted {
    /// `-γ ℓ_t w`
    EllTimeW,
}

impl fmt::Display for Omitted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Omitted::EllTimeW => f.write_str("omitted: l_t*w term"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conjugation {
    pub op: OperatorSpec,
    pub terms: UnaryList,
    pub omitted: Vec<Omitted>,
}

fn ell_x(model: &WeightModel) -> Result<WeightPoly> {
    model.expand_potential(&[RhoMonomial::new(rat(1), 1, [1, 0, 0, 0])])
}

/// `D̃ = ∂x - ℓ_x` applied to a unary list.
fn conjugated_dx(list: &UnaryList, ell: &WeightPoly, model: &WeightModel) -> Result<UnaryList> {
    let mut out = UnaryList::new(list.schema());
    for term in list.iter() {
        let dw = model.diff_factor_product(&term.weight, Direction::X)?;
        for (w, c) in &dw {
            out.add_key(
                UnaryKey {
                    deriv: term.deriv,
                    weight: w.clone(),
                },
                c * &term.coeff,
            );
        }
        out.add_key(
            UnaryKey {
                deriv: Deriv::new(term.deriv.t, term.deriv.x + 1),
                weight: term.weight.clone(),
            },
            term.coeff.clone(),
        );
        for (w, c) in ell {
            out.add_key(
                UnaryKey {
                    deriv: term.deriv,
                    weight: term.weight.mul(w),
                },
                -(c * &term.coeff),
            );
        }
    }
    Ok(out)
}

/// Expands `θ P (θ^{-1} w)` as unary terms.
pub fn conjugate(op: OperatorSpec, model: &WeightModel) -> Result<Conjugation> {
    let schema = model.schema();
    let ell = ell_x(model)?;
    let mut list = UnaryList::from_terms(
        schema,
        [UnaryTerm::new(schema, rat(1), Weight::one(), Deriv::x(0))],
    )?;
    for _ in 0..op.space_order() {
        list = conjugated_dx(&list, &ell, model)?;
    }
    let mut omitted = Vec::new();
    if op.order == OperatorOrder::Fourth {
        list.push(UnaryTerm::new(
            schema,
            rat(1),
            op.gamma_weight(),
            Deriv::new(1, 0),
        ))?;
        omitted.push(Omitted::EllTimeW);
    }
    Ok(Conjugation {
        op,
        terms: list,
        omitted,
    })
}

/// The multiplier groups `I1..I4` (`J1..J4` for the exponential weight).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplierSplit {
    pub groups: [UnaryList; 4],
    /// Markers carried by the fourth group.
    pub omitted: Vec<Omitted>,
}

impl MultiplierSplit {
    pub fn group(&self, i: usize) -> &UnaryList {
        &self.groups[i - 1]
    }

    /// Sum of the listed groups, 1-based.
    pub fn sum_of(&self, which: &[usize]) -> Result<UnaryList> {
        let schema = self.groups[0].schema();
        let mut out = UnaryList::new(schema);
        for &i in which {
            out.extend_list(self.group(i))?;
        }
        Ok(out)
    }
}

/// `(deriv, coeff, λ power, potential-derivative powers)`; the time entry
/// is handled separately.
type Shape = (Deriv, i64, u32, [u32; 4]);

fn fourth_order_shapes() -> [Vec<Shape>; 4] {
    let x = Deriv::x;
    [
        vec![
            (x(3), -4, 1, [1, 0, 0, 0]),
            (x(1), -4, 3, [3, 0, 0, 0]),
            (x(0), -6, 3, [2, 1, 0, 0]),
        ],
        vec![
            (x(4), 1, 0, [0, 0, 0, 0]),
            (x(2), 6, 2, [2, 0, 0, 0]),
            (x(0), 1, 4, [4, 0, 0, 0]),
            (x(0), 3, 2, [0, 2, 0, 0]),
            (x(0), 4, 2, [1, 0, 1, 0]),
        ],
        vec![
            (x(2), -6, 1, [0, 1, 0, 0]),
            (x(1), 12, 2, [1, 1, 0, 0]),
            (x(1), -4, 1, [0, 0, 1, 0]),
        ],
        vec![(x(0), -1, 1, [0, 0, 0, 1])],
    ]
}

fn second_order_shapes() -> [Vec<Shape>; 4] {
    let x = Deriv::x;
    [
        vec![(x(1), -2, 1, [1, 0, 0, 0])],
        vec![
            (x(2), 1, 0, [0, 0, 0, 0]),
            (x(0), 1, 2, [2, 0, 0, 0]),
            (x(0), -1, 1, [0, 1, 0, 0]),
        ],
        vec![],
        vec![],
    ]
}

/// The hardcoded multiplier groups for an operator, expanded into monomials
/// of the model's schema.
pub fn multiplier_templates(op: OperatorSpec, model: &WeightModel) -> Result<[UnaryList; 4]> {
    let schema = model.schema();
    let shapes = match op.order {
        OperatorOrder::Second => second_order_shapes(),
        OperatorOrder::Fourth => fourth_order_shapes(),
    };
    let mut groups: [UnaryList; 4] = std::array::from_fn(|_| UnaryList::new(schema));
    for (group, entries) in groups.iter_mut().zip(shapes.iter()) {
        for &(deriv, c, lam, powers) in entries {
            let poly = model.expand_potential(&[RhoMonomial::new(rat(c), lam, powers)])?;
            for (w, coeff) in poly {
                group.add_key(UnaryKey { deriv, weight: w }, coeff);
            }
        }
    }
    if op.order == OperatorOrder::Fourth {
        groups[0].push(UnaryTerm::new(
            schema,
            rat(1),
            op.gamma_weight(),
            Deriv::new(1, 0),
        ))?;
    }
    Ok(groups)
}

/// Routes every term of a conjugation to the group whose hardcoded shape
/// lists its key, then checks each routed group against its template.
pub fn split_multiplier(conj: &Conjugation, model: &WeightModel) -> Result<MultiplierSplit> {
    let schema = conj.terms.schema();
    if schema != model.schema() {
        return Err(Error::MixedSchema {
            expected: model.schema(),
            found: schema,
        });
    }
    let templates = multiplier_templates(conj.op, model)?;
    let mut groups: [UnaryList; 4] = std::array::from_fn(|_| UnaryList::new(schema));
    for term in conj.terms.iter() {
        let key = term.key();
        let mut homes = templates
            .iter()
            .enumerate()
            .filter(|(_, g)| g.contains_key(&key));
        let (i, _) = homes.next().ok_or_else(|| {
            Error::Grouping(format!(
                "{} matches no multiplier group",
                crate::codec::emit_sparse_unary_row(&term)
            ))
        })?;
        if homes.next().is_some() {
            return Err(Error::Grouping(format!(
                "{} matches more than one multiplier group",
                crate::codec::emit_sparse_unary_row(&term)
            )));
        }
        groups[i].push(term)?;
    }
    for (i, (got, want)) in groups.iter().zip(templates.iter()).enumerate() {
        if got != want {
            return Err(Error::Grouping(format!(
                "group {} differs from its expected shape",
                i + 1
            )));
        }
    }
    Ok(MultiplierSplit {
        groups,
        omitted: conj.omitted.clone(),
    })
}

/// Bilinear products of two unary lists. With `cross_only`, products of a
/// term with an identical term (the diagonal `|I|²` part) are skipped.
pub fn multiply(left: &UnaryList, right: &UnaryList, cross_only: bool) -> Result<TermList> {
    let schema = left.schema();
    if right.schema() != schema {
        return Err(Error::MixedSchema {
            expected: schema,
            found: right.schema(),
        });
    }
    let mut out = TermList::new(schema);
    for l in left.iter() {
        for r in right.iter() {
            if cross_only && l.key() == r.key() {
                continue;
            }
            out.push(Term::new(
                schema,
                &l.coeff * &r.coeff,
                l.weight.mul(&r.weight),
                BilinearPart::new(l.deriv, r.deriv),
            ))?;
        }
    }
    Ok(out)
}
