//! The term data model: weighted differential monomials, their canonical
//! form, and the merged, totally ordered [`TermList`].
//!
//! A bilinear [`Term`] denotes
//!
//! ```text
//! coeff · λ^lam s^s γ^gamma · Π sym^e · w_{t^bt x^bx} · w_{t^ct x^cx}
//! ```
//!
//! optionally wrapped in a total derivative `( … )_t` or `( … )_x` (the
//! divergence flags). A [`UnaryTerm`] carries a single derivative of `w`
//! and is what the conjugation step produces before multipliers are paired.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::lincomb::LinComb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Schema {
    /// Polynomial weight `ψ = (x-x0)^2 - β(t-t0)^2`, tracked through `μ = 2(x-x0)`.
    Poly,
    /// Singular exponential weight built from `e^{sφ(x)} / (t(T-t))`.
    Exp,
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Schema::Poly => "poly",
            Schema::Exp => "exp",
        })
    }
}

impl FromStr for Schema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "poly" => Ok(Schema::Poly),
            "exp" => Ok(Schema::Exp),
            other => Err(Error::Malformed(format!("unknown schema `{other}`"))),
        }
    }
}

/// Weight-factor symbols. `Phi(k)` is the k-th x-derivative of the
/// space profile φ; `Varphi` is `e^{sφ}/(t(T-t))` and `VarphiT`,
/// `VarphiTT` its first and second time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Mu,
    Phi(u32),
    Varphi,
    VarphiT,
    VarphiTT,
}

impl Symbol {
    pub fn belongs_to(self, schema: Schema) -> bool {
        match (self, schema) {
            (Symbol::Mu, Schema::Poly) => true,
            (Symbol::Phi(k), Schema::Exp) => k >= 1,
            (Symbol::Varphi | Symbol::VarphiT | Symbol::VarphiTT, Schema::Exp) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Mu => f.write_str("mu"),
            Symbol::Phi(k) => write!(f, "phi_{}", "x".repeat(*k as usize)),
            Symbol::Varphi => f.write_str("vphi"),
            Symbol::VarphiT => f.write_str("vphi_t"),
            Symbol::VarphiTT => f.write_str("vphi_tt"),
        }
    }
}

impl FromStr for Symbol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "mu" => return Ok(Symbol::Mu),
            "vphi" => return Ok(Symbol::Varphi),
            "vphi_t" => return Ok(Symbol::VarphiT),
            "vphi_tt" => return Ok(Symbol::VarphiTT),
            _ => {}
        }
        if let Some(xs) = s.strip_prefix("phi_") {
            if !xs.is_empty() && xs.bytes().all(|b| b == b'x') {
                return Ok(Symbol::Phi(xs.len() as u32));
            }
        }
        Err(Error::UnsupportedSymbol(s.to_string()))
    }
}

/// Powers of the scalar parameters λ, s and γ.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ScalarExponents {
    pub lam: u32,
    pub s: u32,
    pub gamma: u32,
}

impl ScalarExponents {
    pub fn new(lam: u32, s: u32, gamma: u32) -> Self {
        Self { lam, s, gamma }
    }

    /// Degree in the large parameters, `lam + s`.
    pub fn grade(self) -> u32 {
        self.lam + self.s
    }
}

impl std::ops::Mul for ScalarExponents {
    type Output = Self;

    fn mul(self, other: Self) -> Self {
        Self {
            lam: self.lam + other.lam,
            s: self.s + other.s,
            gamma: self.gamma + other.gamma,
        }
    }
}

/// Sparse map from weight symbol to a positive exponent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FactorExponents(BTreeMap<Symbol, u32>);

impl FactorExponents {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, sym: Symbol) -> u32 {
        self.0.get(&sym).copied().unwrap_or(0)
    }

    pub fn set(&mut self, sym: Symbol, exp: u32) {
        if exp == 0 {
            self.0.remove(&sym);
        } else {
            self.0.insert(sym, exp);
        }
    }

    pub fn with(mut self, sym: Symbol, exp: u32) -> Self {
        self.set(sym, exp);
        self
    }

    pub fn bump(&mut self, sym: Symbol, delta: i64) {
        let next = self.get(sym) as i64 + delta;
        assert!(next >= 0, "exponent of {sym} would become negative");
        self.set(sym, next as u32);
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&sym, &e) in &other.0 {
            out.set(sym, out.get(sym) + e);
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, u32)> + '_ {
        self.0.iter().map(|(&s, &e)| (s, e))
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.0.keys().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Descending lexicographic comparison of the dense exponent vectors,
    /// indexed by symbol in ascending order.
    fn cmp_desc(&self, other: &Self) -> Ordering {
        let mut a = self.0.iter().peekable();
        let mut b = other.0.iter().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Less,
                (None, Some(_)) => return Ordering::Greater,
                (Some((sa, ea)), Some((sb, eb))) => match sa.cmp(sb) {
                    Ordering::Less => return Ordering::Less,
                    Ordering::Greater => return Ordering::Greater,
                    Ordering::Equal => {
                        let ord = eb.cmp(ea);
                        if ord != Ordering::Equal {
                            return ord;
                        }
                        a.next();
                        b.next();
                    }
                },
            }
        }
    }
}

impl FromIterator<(Symbol, u32)> for FactorExponents {
    fn from_iter<I: IntoIterator<Item = (Symbol, u32)>>(iter: I) -> Self {
        let mut out = Self::new();
        for (sym, e) in iter {
            out.set(sym, out.get(sym) + e);
        }
        out
    }
}

/// A weight monomial without its coefficient: scalar powers times a
/// product of weight symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Weight {
    pub scalars: ScalarExponents,
    pub factors: FactorExponents,
}

impl Weight {
    pub fn new(scalars: ScalarExponents, factors: FactorExponents) -> Self {
        Self { scalars, factors }
    }

    pub fn one() -> Self {
        Self::default()
    }

    pub fn mul(&self, other: &Weight) -> Weight {
        Weight {
            scalars: self.scalars * other.scalars,
            factors: self.factors.mul(&other.factors),
        }
    }

    pub fn validate(&self, schema: Schema) -> Result<()> {
        for sym in self.factors.symbols() {
            if !sym.belongs_to(schema) {
                return Err(Error::SchemaViolation {
                    symbol: sym,
                    schema,
                });
            }
        }
        if schema == Schema::Poly && self.scalars.s != 0 {
            return Err(Error::Malformed(
                "the poly schema has no s parameter".into(),
            ));
        }
        Ok(())
    }
}

/// Heavier weights sort first: λ, then s, then γ, then factor exponents.
impl Ord for Weight {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.scalars, other.scalars);
        b.lam
            .cmp(&a.lam)
            .then(b.s.cmp(&a.s))
            .then(b.gamma.cmp(&a.gamma))
            .then_with(|| self.factors.cmp_desc(&other.factors))
    }
}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Derivative multi-order `∂_t^t ∂_x^x` applied to `w`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Deriv {
    pub t: u32,
    pub x: u32,
}

impl Deriv {
    pub const fn new(t: u32, x: u32) -> Self {
        Self { t, x }
    }

    pub const fn x(x: u32) -> Self {
        Self { t: 0, x }
    }
}

/// The product `w_first · w_second`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct BilinearPart {
    pub first: Deriv,
    pub second: Deriv,
}

impl BilinearPart {
    pub const fn new(first: Deriv, second: Deriv) -> Self {
        Self { first, second }
    }

    /// Diagonal pure-x square `w_{x^k}^2`.
    pub const fn square(k: u32) -> Self {
        Self::new(Deriv::x(k), Deriv::x(k))
    }

    /// Orders the slots: higher t-order first, then lower x-order first.
    /// For engine terms (second slot t-free) this is exactly the rule
    /// "if the first slot is t-free, its x-order does not exceed the second".
    pub fn canonical(self) -> Self {
        let swap = match self.first.t.cmp(&self.second.t) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.first.x > self.second.x,
        };
        if swap {
            Self::new(self.second, self.first)
        } else {
            self
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.first == self.second
    }

    pub fn x_orders(&self) -> [u32; 2] {
        [self.first.x, self.second.x]
    }
}

/// Heavier derivative content sorts first.
impl Ord for BilinearPart {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .second
            .x
            .cmp(&self.second.x)
            .then(other.first.cmp(&self.first))
            .then(other.second.t.cmp(&self.second.t))
    }
}

impl PartialOrd for BilinearPart {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct DivergenceFlags {
    pub dt: bool,
    pub dx: bool,
}

impl DivergenceFlags {
    pub const NONE: Self = Self {
        dt: false,
        dx: false,
    };
    pub const T: Self = Self {
        dt: true,
        dx: false,
    };
    pub const X: Self = Self {
        dt: false,
        dx: true,
    };

    pub fn any(self) -> bool {
        self.dt || self.dx
    }
}

/// Space-boundary rows first, then time-boundary rows, then interior rows.
impl Ord for DivergenceFlags {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dx.cmp(&self.dx).then(other.dt.cmp(&self.dt))
    }
}

impl PartialOrd for DivergenceFlags {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Everything in a [`Term`] except the coefficient. Its `Ord` is the
/// canonical term order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TermKey {
    pub flags: DivergenceFlags,
    pub bilinear: BilinearPart,
    pub weight: Weight,
}

impl Ord for TermKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.flags
            .cmp(&other.flags)
            .then_with(|| self.bilinear.cmp(&other.bilinear))
            .then_with(|| self.weight.cmp(&other.weight))
    }
}

impl PartialOrd for TermKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub coeff: BigRational,
    pub weight: Weight,
    pub bilinear: BilinearPart,
    pub flags: DivergenceFlags,
    pub schema: Schema,
}

impl Term {
    pub fn new(schema: Schema, coeff: BigRational, weight: Weight, bilinear: BilinearPart) -> Self {
        Self {
            coeff,
            weight,
            bilinear,
            flags: DivergenceFlags::NONE,
            schema,
        }
    }

    pub fn with_flags(mut self, flags: DivergenceFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn key(&self) -> TermKey {
        TermKey {
            flags: self.flags,
            bilinear: self.bilinear,
            weight: self.weight.clone(),
        }
    }

    pub fn from_key(schema: Schema, key: TermKey, coeff: BigRational) -> Self {
        Self {
            coeff,
            weight: key.weight,
            bilinear: key.bilinear,
            flags: key.flags,
            schema,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.weight.validate(self.schema)
    }

    /// Validates the term and puts its bilinear slots in canonical order.
    /// Coefficients are always reduced and zero exponents are never stored,
    /// so those parts of the canonical form hold by construction.
    pub fn canonicalize(&self) -> Result<Term> {
        self.validate()?;
        let mut out = self.clone();
        out.bilinear = out.bilinear.canonical();
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }
}

/// The canonical strict total order on terms; the coefficient only breaks
/// ties between otherwise identical terms.
pub fn term_order(a: &Term, b: &Term) -> Ordering {
    a.key().cmp(&b.key()).then_with(|| a.coeff.cmp(&b.coeff))
}

/// A merged multiset of canonical terms in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermList {
    schema: Schema,
    body: LinComb<TermKey>,
}

impl TermList {
    pub fn new(schema: Schema) -> Self {
        Self {
            schema,
            body: LinComb::new(),
        }
    }

    pub fn from_terms(schema: Schema, terms: impl IntoIterator<Item = Term>) -> Result<Self> {
        let mut out = Self::new(schema);
        for t in terms {
            out.push(t)?;
        }
        Ok(out)
    }

    pub fn schema(&self) -> Schema {
        self.schema
    }

    /// Adds one term, merging it with any like term already present.
    pub fn push(&mut self, term: Term) -> Result<()> {
        if term.schema != self.schema {
            return Err(Error::MixedSchema {
                expected: self.schema,
                found: term.schema,
            });
        }
        let term = term.canonicalize()?;
        let coeff = term.coeff.clone();
        self.body.add(term.key(), coeff);
        Ok(())
    }

    /// Adds a term whose key is known to be canonical and valid.
    pub(crate) fn push_key(&mut self, key: TermKey, coeff: BigRational) {
        self.body.add(key, coeff);
    }

    pub fn extend_list(&mut self, other: &TermList) -> Result<()> {
        self.same_schema(other)?;
        self.body.add_all(&other.body);
        Ok(())
    }

    /// `self - other`, exactly.
    pub fn difference(&self, other: &TermList) -> Result<TermList> {
        self.same_schema(other)?;
        let mut out = self.clone();
        out.body.sub_all(&other.body);
        Ok(out)
    }

    pub fn scaled(&self, factor: &BigRational) -> TermList {
        TermList {
            schema: self.schema,
            body: self.body.scaled(factor),
        }
    }

    pub fn len(&self) -> usize {
        self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Term> + '_ {
        self.body
            .iter()
            .map(|(k, c)| Term::from_key(self.schema, k.clone(), c.clone()))
    }

    pub fn terms(&self) -> Vec<Term> {
        self.iter().collect()
    }

    pub fn coeff_of(&self, key: &TermKey) -> Option<&BigRational> {
        self.body.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &TermKey> {
        self.body.keys()
    }

    pub fn filter(&self, mut keep: impl FnMut(&Term) -> bool) -> TermList {
        let mut out = TermList::new(self.schema);
        for t in self.iter() {
            if keep(&t) {
                out.push_key(t.key(), t.coeff);
            }
        }
        out
    }

    fn same_schema(&self, other: &TermList) -> Result<()> {
        if self.schema == other.schema {
            Ok(())
        } else {
            Err(Error::MixedSchema {
                expected: self.schema,
                found: other.schema,
            })
        }
    }
}

/// Merges like terms of one schema; zero results are dropped and the output
/// is in canonical order.
pub fn merge(schema: Schema, terms: impl IntoIterator<Item = Term>) -> Result<TermList> {
    TermList::from_terms(schema, terms)
}

/// A weight monomial times a single derivative of `w`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UnaryTerm {
    pub coeff: BigRational,
    pub weight: Weight,
    pub deriv: Deriv,
    pub schema: Schema,
}

impl UnaryTerm {
    pub fn new(schema: Schema, coeff: BigRational, weight: Weight, deriv: Deriv) -> Self {
        Self {
            coeff,
            weight,
            deriv,
            schema,
        }
    }

    pub fn key(&self) -> UnaryKey {
        UnaryKey {
            deriv: self.deriv,
            weight: self.weight.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UnaryKey {
    pub deriv: Deriv,
    pub weight: Weight,
}

/// Higher derivatives first, then heavier weights.
impl Ord for UnaryKey {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .deriv
            .cmp(&self.deriv)
            .then_with(|| self.weight.cmp(&other.weight))
    }
}

impl PartialOrd for UnaryKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A merged list of unary terms, e.g. one multiplier group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnaryList {
    schema: Schema,
    body: LinComb<UnaryKey>,
}

impl UnaryList {
    pub fn new(schema: Schema) -> Self {
        Self {
            schema,
            body: LinComb::new(),
        }
    }

    pub fn from_terms(schema: Schema, terms: impl IntoIterator<Item = UnaryTerm>) -> Result<Self> {
        let mut out = Self::new(schema);
        for t in terms {
            out.push(t)?;
        }
        Ok(out)
    }

    pub fn schema(&self) -> Schema {
        self.schema
    }

    pub fn push(&mut self, term: UnaryTerm) -> Result<()> {
        if term.schema != self.schema {
            return Err(Error::MixedSchema {
                expected: self.schema,
                found: term.schema,
            });
        }
        term.weight.validate(self.schema)?;
        let coeff = term.coeff.clone();
        self.body.add(term.key(), coeff);
        Ok(())
    }

    pub(crate) fn add_key(&mut self, key: UnaryKey, coeff: BigRational) {
        self.body.add(key, coeff);
    }

    pub fn extend_list(&mut self, other: &UnaryList) -> Result<()> {
        if self.schema != other.schema {
            return Err(Error::MixedSchema {
                expected: self.schema,
                found: other.schema,
            });
        }
        self.body.add_all(&other.body);
        Ok(())
    }

    pub fn coeff_of(&self, key: &UnaryKey) -> Option<&BigRational> {
        self.body.get(key)
    }

    pub fn contains_key(&self, key: &UnaryKey) -> bool {
        self.body.get(key).is_some()
    }

    pub fn len(&self) -> usize {
        self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = UnaryTerm> + '_ {
        self.body.iter().map(|(k, c)| UnaryTerm {
            coeff: c.clone(),
            weight: k.weight.clone(),
            deriv: k.deriv,
            schema: self.schema,
        })
    }
}
