//! Pointwise evaluation of term lists.
//!
//! Every factor is evaluated as a dual number `(value, ∂t, ∂x)`, so a
//! flagged term `(P)_t` or `(P)_x` is the matching component of the product
//! `P`. Weights come from their closed forms:
//!
//! * poly: `μ = 2(x - x0)`, exact over the rationals;
//! * exp: `ϕ = e^{sφ(x)} / (t(T-t))` with φ a rational polynomial, in `f64`.
//!
//! `w` is a rational bivariate polynomial, differentiated exactly.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{rat, ratio, to_f64};
use crate::term::{Deriv, Schema, Symbol, Term, TermList};
use crate::weight::WeightModel;

/// `Σ c · t^i · x^j`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BivariatePoly {
    pub terms: Vec<(u32, u32, BigRational)>,
}

fn falling(n: u32, k: u32) -> Option<BigRational> {
    if k > n {
        return None;
    }
    Some(rat(((n - k + 1)..=n).map(i64::from).product()))
}

fn pow(base: &BigRational, e: u32) -> BigRational {
    num_traits::pow(base.clone(), e as usize)
}

impl BivariatePoly {
    pub fn new(terms: Vec<(u32, u32, BigRational)>) -> Self {
        Self { terms }
    }

    /// `∂t^a ∂x^b` of the polynomial at `(t, x)`.
    pub fn eval_deriv(&self, d: Deriv, t: &BigRational, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for (i, j, c) in &self.terms {
            if let (Some(ft), Some(fx)) = (falling(*i, d.t), falling(*j, d.x)) {
                acc += c * ft * fx * pow(t, i - d.t) * pow(x, j - d.x);
            }
        }
        acc
    }
}

/// `Σ c_k x^k`, coefficients indexed by power.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UnivariatePoly {
    pub coeffs: Vec<BigRational>,
}

impl UnivariatePoly {
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        Self { coeffs }
    }

    pub fn eval_deriv(&self, k: u32, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for (j, c) in self.coeffs.iter().enumerate() {
            if let Some(f) = falling(j as u32, k) {
                acc += c * f * pow(x, j as u32 - k);
            }
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumericConfig {
    pub x0: BigRational,
    pub t0: BigRational,
    pub beta: BigRational,
    pub t_final: BigRational,
    pub length: BigRational,
    pub s: BigRational,
    pub lam: BigRational,
    pub gamma: BigRational,
    pub w: BivariatePoly,
    pub phi: UnivariatePoly,
    /// Sample points `(t, x)`.
    pub samples: Vec<(BigRational, BigRational)>,
}

impl NumericConfig {
    /// A configuration with moderate parameters, a test polynomial with
    /// nonvanishing derivatives up to sixth order in x, and no samples.
    pub fn standard() -> Self {
        let q = ratio;
        Self {
            x0: q(3, 2),
            t0: q(1, 2),
            beta: rat(1),
            t_final: rat(1),
            length: rat(1),
            s: q(3, 4),
            lam: q(5, 4),
            gamma: rat(1),
            w: BivariatePoly::new(vec![
                (0, 7, q(1, 9)),
                (1, 6, q(-2, 7)),
                (0, 5, q(3, 5)),
                (2, 4, q(1, 3)),
                (1, 3, q(-5, 4)),
                (0, 2, rat(2)),
                (1, 1, q(1, 2)),
                (2, 0, q(-3, 2)),
                (0, 0, q(7, 3)),
                (3, 2, q(2, 5)),
            ]),
            phi: UnivariatePoly::new(vec![
                q(1, 5),
                q(1, 2),
                q(-1, 3),
                q(1, 4),
                q(-1, 7),
                q(1, 11),
                q(1, 13),
            ]),
            samples: Vec::new(),
        }
    }

    pub fn with_samples(mut self, samples: Vec<(BigRational, BigRational)>) -> Self {
        self.samples = samples;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.x0 <= self.length {
            return Err(Error::Malformed(format!(
                "x0 = {} must exceed L = {}",
                self.x0, self.length
            )));
        }
        if !self.t_final.is_positive() {
            return Err(Error::Malformed("T must be positive".into()));
        }
        for (t, x) in &self.samples {
            if !t.is_positive() || t >= &self.t_final {
                return Err(Error::Singularity {
                    t: t.to_string(),
                    x: x.to_string(),
                });
            }
        }
        Ok(())
    }
}

trait Field:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn null() -> Self;
    fn from_rational(q: &BigRational) -> Self;
    fn powu(&self, e: u32) -> Self;
}

impl Field for BigRational {
    fn null() -> Self {
        <BigRational as Zero>::zero()
    }

    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }

    fn powu(&self, e: u32) -> Self {
        pow(self, e)
    }
}

impl Field for f64 {
    fn null() -> Self {
        0.0
    }

    fn from_rational(q: &BigRational) -> Self {
        to_f64(q)
    }

    fn powu(&self, e: u32) -> Self {
        self.powi(e as i32)
    }
}

/// A value with its first partial derivatives in t and x.
#[derive(Debug, Clone, PartialEq)]
struct Dual<F> {
    v: F,
    dt: F,
    dx: F,
}

impl<F: Field> Dual<F> {
    fn new(v: F, dt: F, dx: F) -> Self {
        Self { v, dt, dx }
    }

    fn constant(v: F) -> Self {
        Self::new(v, F::null(), F::null())
    }

    fn add(&self, o: &Self) -> Self {
        Self::new(
            self.v.clone() + o.v.clone(),
            self.dt.clone() + o.dt.clone(),
            self.dx.clone() + o.dx.clone(),
        )
    }

    fn mul(&self, o: &Self) -> Self {
        Self::new(
            self.v.clone() * o.v.clone(),
            self.dt.clone() * o.v.clone() + self.v.clone() * o.dt.clone(),
            self.dx.clone() * o.v.clone() + self.v.clone() * o.dx.clone(),
        )
    }

    fn scale(&self, c: F) -> Self {
        Self::new(
            self.v.clone() * c.clone(),
            self.dt.clone() * c.clone(),
            self.dx.clone() * c,
        )
    }

    fn powi(&self, e: u32) -> Self {
        let mut acc = Self::constant(F::from_rational(&BigRational::one()));
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }
}

impl Dual<f64> {
    fn exp(&self) -> Self {
        let e = self.v.exp();
        Self::new(e, e * self.dt, e * self.dx)
    }

    fn recip(&self) -> Self {
        let r = 1.0 / self.v;
        Self::new(r, -self.dt * r * r, -self.dx * r * r)
    }
}

/// Per-point factor values shared by all terms.
struct PointContext<'a, F> {
    cfg: &'a NumericConfig,
    t: &'a BigRational,
    x: &'a BigRational,
    weights: Vec<(Symbol, Dual<F>)>,
    w_values: BTreeMap<Deriv, F>,
}

impl<'a, F: Field> PointContext<'a, F> {
    fn new(cfg: &'a NumericConfig, t: &'a BigRational, x: &'a BigRational) -> Self {
        Self {
            cfg,
            t,
            x,
            weights: Vec::new(),
            w_values: BTreeMap::new(),
        }
    }

    fn w_value(&mut self, d: Deriv) -> F {
        let (cfg, t, x) = (self.cfg, self.t, self.x);
        self.w_values
            .entry(d)
            .or_insert_with(|| F::from_rational(&cfg.w.eval_deriv(d, t, x)))
            .clone()
    }

    fn w(&mut self, d: Deriv) -> Dual<F> {
        Dual::new(
            self.w_value(d),
            self.w_value(Deriv::new(d.t + 1, d.x)),
            self.w_value(Deriv::new(d.t, d.x + 1)),
        )
    }

    fn symbol(&mut self, sym: Symbol) -> Result<Dual<F>>
    where
        Self: SymbolSource<F>,
    {
        if let Some((_, d)) = self.weights.iter().find(|(s, _)| *s == sym) {
            return Ok(d.clone());
        }
        let d = self.closed_form(sym)?;
        self.weights.push((sym, d.clone()));
        Ok(d)
    }

    fn term(&mut self, term: &Term) -> Result<F>
    where
        Self: SymbolSource<F>,
    {
        let cfg = self.cfg;
        let sc = term.weight.scalars;
        let scalar = F::from_rational(&term.coeff)
            * F::from_rational(&cfg.lam).powu(sc.lam)
            * F::from_rational(&cfg.s).powu(sc.s)
            * F::from_rational(&cfg.gamma).powu(sc.gamma);
        let mut acc = Dual::constant(scalar);
        for (sym, e) in term.weight.factors.iter() {
            acc = acc.mul(&self.symbol(sym)?.powi(e));
        }
        let first = self.w(term.bilinear.first);
        let second = self.w(term.bilinear.second);
        acc = acc.mul(&first).mul(&second);
        Ok(if term.flags.dt {
            acc.dt
        } else if term.flags.dx {
            acc.dx
        } else {
            acc.v
        })
    }
}

trait SymbolSource<F> {
    fn closed_form(&self, sym: Symbol) -> Result<Dual<F>>;
}

impl SymbolSource<BigRational> for PointContext<'_, BigRational> {
    fn closed_form(&self, sym: Symbol) -> Result<Dual<BigRational>> {
        match sym {
            Symbol::Mu => Ok(Dual::new(rat(2) * (self.x - &self.cfg.x0), rat(0), rat(2))),
            other => Err(Error::SchemaViolation {
                symbol: other,
                schema: Schema::Poly,
            }),
        }
    }
}

impl SymbolSource<f64> for PointContext<'_, f64> {
    fn closed_form(&self, sym: Symbol) -> Result<Dual<f64>> {
        let cfg = self.cfg;
        let phi = |k| to_f64(&cfg.phi.eval_deriv(k, self.x));
        let tf = to_f64(&cfg.t_final);
        let t = Dual::new(to_f64(self.t), 1.0, 0.0);
        // g = t(T - t), g' = T - 2t
        let g = t.mul(&Dual::new(tf - t.v, -1.0, 0.0));
        let gp = Dual::new(tf - 2.0 * t.v, -2.0, 0.0);
        let r = g.recip();
        let e = Dual::new(phi(0), 0.0, phi(1)).scale(to_f64(&cfg.s)).exp();
        Ok(match sym {
            Symbol::Phi(k) => Dual::new(phi(k), 0.0, phi(k + 1)),
            Symbol::Varphi => e.mul(&r),
            // q' = -g'/g^2
            Symbol::VarphiT => e.mul(&gp.mul(&r.powi(2)).scale(-1.0)),
            // q'' = 2/g^2 + 2 g'^2/g^3
            Symbol::VarphiTT => e.mul(
                &r.powi(2)
                    .scale(2.0)
                    .add(&gp.powi(2).mul(&r.powi(3)).scale(2.0)),
            ),
            Symbol::Mu => {
                return Err(Error::SchemaViolation {
                    symbol: sym,
                    schema: Schema::Exp,
                })
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NumericValue {
    Exact(BigRational),
    Float(f64),
}

impl NumericValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            NumericValue::Exact(q) => to_f64(q),
            NumericValue::Float(v) => *v,
        }
    }
}

fn check_model(list: &TermList, model: &WeightModel) -> Result<()> {
    if list.schema() != model.schema() {
        return Err(Error::MixedSchema {
            expected: model.schema(),
            found: list.schema(),
        });
    }
    Ok(())
}

/// Per sample point: the value of the list and the sum of the absolute
/// values of its terms.
fn eval_with_magnitude(list: &TermList, cfg: &NumericConfig) -> Result<Vec<(NumericValue, f64)>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.samples.len());
    for (t, x) in &cfg.samples {
        match list.schema() {
            Schema::Poly => {
                let mut ctx = PointContext::<BigRational>::new(cfg, t, x);
                let mut sum = BigRational::zero();
                let mut mag = 0.0;
                for term in list.iter() {
                    let v = ctx.term(&term)?;
                    mag += to_f64(&v).abs();
                    sum += v;
                }
                out.push((NumericValue::Exact(sum), mag));
            }
            Schema::Exp => {
                let mut ctx = PointContext::<f64>::new(cfg, t, x);
                let mut sum = 0.0;
                let mut mag = 0.0;
                for term in list.iter() {
                    let v = ctx.term(&term)?;
                    mag += v.abs();
                    sum += v;
                }
                out.push((NumericValue::Float(sum), mag));
            }
        }
    }
    Ok(out)
}

/// Value of the list at each sample point of `cfg`.
pub fn numeric_eval(
    list: &TermList,
    cfg: &NumericConfig,
    model: &WeightModel,
) -> Result<Vec<NumericValue>> {
    check_model(list, model)?;
    Ok(eval_with_magnitude(list, cfg)?
        .into_iter()
        .map(|(v, _)| v)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleComparison {
    pub t: BigRational,
    pub x: BigRational,
    pub lhs: NumericValue,
    pub rhs: NumericValue,
    /// Zero for exact agreement; otherwise `|lhs - rhs|` divided by the
    /// largest of `|lhs|`, `|rhs|` and the term-magnitude sums of both sides.
    pub rel_error: f64,
}

/// Evaluates both lists at every sample point. Exact values must agree
/// exactly; floating values within `tol` relative error.
pub fn numeric_compare(
    lhs: &TermList,
    rhs: &TermList,
    cfg: &NumericConfig,
    model: &WeightModel,
) -> Result<Vec<SampleComparison>> {
    check_model(lhs, model)?;
    check_model(rhs, model)?;
    let left = eval_with_magnitude(lhs, cfg)?;
    let right = eval_with_magnitude(rhs, cfg)?;
    let mut out = Vec::with_capacity(left.len());
    for (((l, lm), (r, rm)), (t, x)) in left.into_iter().zip(right).zip(&cfg.samples) {
        let rel_error = match (&l, &r) {
            (NumericValue::Exact(a), NumericValue::Exact(b)) if a == b => 0.0,
            _ => {
                let (a, b) = (l.as_f64(), r.as_f64());
                let scale = a.abs().max(b.abs()).max(lm).max(rm);
                if scale == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / scale
                }
            }
        };
        out.push(SampleComparison {
            t: t.clone(),
            x: x.clone(),
            lhs: l,
            rhs: r,
            rel_error,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::parse_row;

    fn cfg() -> NumericConfig {
        NumericConfig::standard().with_samples(vec![(ratio(1, 2), ratio(1, 3))])
    }

    #[test]
    fn polynomial_derivatives() {
        let p = BivariatePoly::new(vec![(1, 3, rat(2))]); // 2 t x^3
        let (t, x) = (rat(2), rat(3));
        assert_eq!(p.eval_deriv(Deriv::new(0, 0), &t, &x), rat(108));
        assert_eq!(p.eval_deriv(Deriv::new(1, 2), &t, &x), rat(36));
        assert_eq!(p.eval_deriv(Deriv::new(2, 0), &t, &x), rat(0));
        let u = UnivariatePoly::new(vec![rat(1), rat(0), rat(3)]);
        assert_eq!(u.eval_deriv(1, &rat(2)), rat(12));
        assert_eq!(u.eval_deriv(3, &rat(2)), rat(0));
    }

    #[test]
    fn empty_list_is_zero() {
        let v = numeric_eval(&TermList::new(Schema::Poly), &cfg(), &WeightModel::poly()).unwrap();
        assert_eq!(v, [NumericValue::Exact(rat(0))]);
    }

    #[test]
    fn divergence_of_mu_square_is_exact() {
        // (μ^2 w^2)_x = 4 μ w^2 + 2 μ^2 w w_x
        let m = WeightModel::poly();
        let flagged = TermList::from_terms(
            Schema::Poly,
            [parse_row("1,0,2,0,0,0,0,1", Schema::Poly).unwrap()],
        )
        .unwrap();
        let expanded = TermList::from_terms(
            Schema::Poly,
            ["4,0,1,0,0,0,0,0", "2,0,2,0,0,1,0,0"]
                .iter()
                .map(|r| parse_row(r, Schema::Poly).unwrap()),
        )
        .unwrap();
        let cmp = numeric_compare(&flagged, &expanded, &cfg(), &m).unwrap();
        assert_eq!(cmp[0].rel_error, 0.0);
        assert_eq!(cmp[0].lhs, cmp[0].rhs);
    }

    #[test]
    fn singular_sample_is_rejected() {
        let c = NumericConfig::standard().with_samples(vec![(rat(1), rat(0))]);
        assert!(matches!(c.validate(), Err(Error::Singularity { .. })));
        let mut c = NumericConfig::standard();
        c.x0 = ratio(1, 2);
        assert!(c.validate().is_err());
    }

    #[test]
    fn varphi_time_derivative_matches_difference_quotient() {
        let c = NumericConfig::standard().with_samples(vec![(ratio(1, 3), ratio(1, 3))]);
        let m = WeightModel::exp();
        let vt = TermList::from_terms(
            Schema::Exp,
            [parse_row("1,0,0,0,0,0,0,0,1,0,0,0,0,0", Schema::Exp).unwrap()],
        )
        .unwrap();
        let v = TermList::from_terms(
            Schema::Exp,
            [parse_row("1,0,0,0,0,0,0,1,0,0,0,0,0,0", Schema::Exp).unwrap()],
        )
        .unwrap();
        let h = ratio(1, 1_000_000);
        // Compare ϕ_t w^2 against the centered quotient of ϕ w^2 minus the w part.
        let base = &c.samples[0];
        let wv = |t: &BigRational| to_f64(&c.w.eval_deriv(Deriv::new(0, 0), t, &base.1));
        let phi_at = |t: BigRational| {
            let cc = cfg().with_samples(vec![(t.clone(), base.1.clone())]);
            numeric_eval(&v, &cc, &m).unwrap()[0].as_f64() / wv(&t).powi(2)
        };
        let quotient = (phi_at(&base.0 + &h) - phi_at(&base.0 - &h)) / (2.0 * to_f64(&h));
        let exact = numeric_eval(&vt, &c, &m).unwrap()[0].as_f64() / wv(&base.0).powi(2);
        assert!(
            (quotient - exact).abs() <= 1e-6 * exact.abs(),
            "{quotient} vs {exact}"
        );
    }
}
