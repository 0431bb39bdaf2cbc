//! Weight-function symbol tables and their exact differentiation rules.
//!
//! The `poly-psi` model tracks `ψ = (x-x0)^2 - β(t-t0)^2` through the single
//! symbol `μ = 2(x-x0)`, with `∂x μ = 2` and `∂t μ = 0` (the time part of ψ
//! only enters through `ℓ_t`, which the engine never sees).
//!
//! The `exp-rho` model tracks `ϕ = e^{sφ(x)} / (t(T-t))` and the derivatives
//! of the space profile φ:
//!
//! | symbol     | ∂x                | ∂t        |
//! |------------|-------------------|-----------|
//! | `φ^(k)`    | `φ^(k+1)`         | 0         |
//! | `ϕ`        | `s φ_x ϕ`         | `ϕ_t`     |
//! | `ϕ_t`      | `s φ_x ϕ_t`       | `ϕ_tt`    |
//! | `ϕ_tt`     | error             | error     |
//!
//! The additive constant inside ρ differentiates away, so ρ itself never
//! appears; only its x-derivatives do, through [`expand_rho_powers`].

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::lincomb::LinComb;
use crate::rational::rat;
use crate::term::{FactorExponents, ScalarExponents, Schema, Symbol, Weight};

/// A rational combination of weight monomials.
pub type WeightPoly = LinComb<Weight>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    T,
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WeightModel {
    schema: Schema,
}

/// One row of a model's symbol table, for display.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolInfo {
    pub symbol: Symbol,
    pub name: &'static str,
    pub x_rule: String,
    pub t_rule: String,
}

impl WeightModel {
    pub const POLY_NAME: &'static str = "poly-psi";
    pub const EXP_NAME: &'static str = "exp-rho";

    pub fn poly() -> Self {
        Self {
            schema: Schema::Poly,
        }
    }

    pub fn exp() -> Self {
        Self {
            schema: Schema::Exp,
        }
    }

    pub fn for_schema(schema: Schema) -> Self {
        Self { schema }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            Self::POLY_NAME => Some(Self::poly()),
            Self::EXP_NAME => Some(Self::exp()),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.schema {
            Schema::Poly => Self::POLY_NAME,
            Schema::Exp => Self::EXP_NAME,
        }
    }

    pub fn schema(&self) -> Schema {
        self.schema
    }

    pub fn contains(&self, sym: Symbol) -> bool {
        sym.belongs_to(self.schema)
    }

    /// The finite part of the symbol table (φ derivatives listed to fourth order).
    pub fn symbol_table(&self) -> Vec<SymbolInfo> {
        match self.schema {
            Schema::Poly => vec![SymbolInfo {
                symbol: Symbol::Mu,
                name: "μ",
                x_rule: "2".into(),
                t_rule: "0".into(),
            }],
            Schema::Exp => {
                let mut rows: Vec<SymbolInfo> = (1..=4)
                    .map(|k| SymbolInfo {
                        symbol: Symbol::Phi(k),
                        name: ["φ_x", "φ_xx", "φ_xxx", "φ_xxxx"][k as usize - 1],
                        x_rule: format!("{}", Symbol::Phi(k + 1)),
                        t_rule: "0".into(),
                    })
                    .collect();
                rows.push(SymbolInfo {
                    symbol: Symbol::Varphi,
                    name: "ϕ",
                    x_rule: "s phi_x vphi".into(),
                    t_rule: "vphi_t".into(),
                });
                rows.push(SymbolInfo {
                    symbol: Symbol::VarphiT,
                    name: "ϕ_t",
                    x_rule: "s phi_x vphi_t".into(),
                    t_rule: "vphi_tt".into(),
                });
                rows.push(SymbolInfo {
                    symbol: Symbol::VarphiTT,
                    name: "ϕ_tt",
                    x_rule: "-".into(),
                    t_rule: "-".into(),
                });
                rows
            }
        }
    }

    /// Derivative of a single symbol as a weight polynomial.
    pub fn symbol_rule(&self, sym: Symbol, dir: Direction) -> Result<WeightPoly> {
        if !self.contains(sym) {
            return Err(Error::SchemaViolation {
                symbol: sym,
                schema: self.schema,
            });
        }
        let mono = |s: u32, factors: &[(Symbol, u32)]| {
            Weight::new(
                ScalarExponents::new(0, s, 0),
                factors.iter().copied().collect(),
            )
        };
        let out = match (sym, dir) {
            (Symbol::Mu, Direction::X) => WeightPoly::single(Weight::one(), rat(2)),
            (Symbol::Mu, Direction::T) => WeightPoly::new(),
            (Symbol::Phi(k), Direction::X) => {
                WeightPoly::single(mono(0, &[(Symbol::Phi(k + 1), 1)]), rat(1))
            }
            (Symbol::Phi(_), Direction::T) => WeightPoly::new(),
            (Symbol::Varphi, Direction::X) => {
                WeightPoly::single(mono(1, &[(Symbol::Phi(1), 1), (Symbol::Varphi, 1)]), rat(1))
            }
            (Symbol::Varphi, Direction::T) => {
                WeightPoly::single(mono(0, &[(Symbol::VarphiT, 1)]), rat(1))
            }
            (Symbol::VarphiT, Direction::X) => WeightPoly::single(
                mono(1, &[(Symbol::Phi(1), 1), (Symbol::VarphiT, 1)]),
                rat(1),
            ),
            (Symbol::VarphiT, Direction::T) => {
                WeightPoly::single(mono(0, &[(Symbol::VarphiTT, 1)]), rat(1))
            }
            (Symbol::VarphiTT, _) => return Err(Error::TerminalSymbol(sym)),
        };
        Ok(out)
    }

    /// Product-rule derivative of a weight monomial (coefficient 1).
    pub fn diff_factor_product(&self, weight: &Weight, dir: Direction) -> Result<WeightPoly> {
        let mut out = WeightPoly::new();
        for (sym, e) in weight.factors.iter() {
            let rule = self.symbol_rule(sym, dir)?;
            if rule.is_empty() {
                continue;
            }
            let mut base = weight.clone();
            base.factors.bump(sym, -1);
            let mult = rat(e as i64);
            for (w, c) in &rule {
                out.add(base.mul(w), c * &mult);
            }
        }
        Ok(out)
    }

    /// Derivative of a weight polynomial.
    pub fn diff_poly(&self, poly: &WeightPoly, dir: Direction) -> Result<WeightPoly> {
        let mut out = WeightPoly::new();
        for (w, c) in poly {
            let d = self.diff_factor_product(w, dir)?;
            out.add_all(&d.scaled(c));
        }
        Ok(out)
    }

    /// The k-th x-derivative of the weight potential (ψ for `poly-psi`, ρ for
    /// `exp-rho`), `k >= 1`. For ρ the first three come from the closed-form
    /// table; higher ones are obtained by differentiating that table.
    pub fn potential_derivative(&self, k: u32) -> Result<WeightPoly> {
        if k == 0 {
            return Err(Error::UnsupportedSymbol(
                "the undifferentiated potential".into(),
            ));
        }
        match self.schema {
            Schema::Poly => Ok(match k {
                1 => WeightPoly::single(factor_weight(0, &[(Symbol::Mu, 1)]), rat(1)),
                2 => WeightPoly::single(Weight::one(), rat(2)),
                _ => WeightPoly::new(),
            }),
            Schema::Exp => {
                if k <= 3 {
                    Ok(rho_table(k))
                } else {
                    let below = self.potential_derivative(k - 1)?;
                    self.diff_poly(&below, Direction::X)
                }
            }
        }
    }

    /// Expands a polynomial in potential derivatives into weight monomials
    /// for either schema.
    pub fn expand_potential(&self, expr: &[RhoMonomial]) -> Result<WeightPoly> {
        let derivs: Vec<WeightPoly> = (1..=4)
            .map(|k| self.potential_derivative(k))
            .collect::<Result<_>>()?;
        let mut out = WeightPoly::new();
        for m in expr {
            let mut acc = WeightPoly::single(
                Weight::new(m.scalars, FactorExponents::new()),
                m.coeff.clone(),
            );
            for (i, &p) in m.powers.iter().enumerate() {
                for _ in 0..p {
                    acc = poly_mul(&acc, &derivs[i]);
                }
            }
            out.add_all(&acc);
        }
        Ok(out)
    }
}

fn factor_weight(s: u32, factors: &[(Symbol, u32)]) -> Weight {
    Weight::new(
        ScalarExponents::new(0, s, 0),
        factors.iter().copied().collect(),
    )
}

/// `ρ_x`, `ρ_xx`, `ρ_xxx` in terms of s, φ derivatives and ϕ.
fn rho_table(k: u32) -> WeightPoly {
    use Symbol::{Phi, Varphi};
    // (coefficient, power of s, factors)
    type Row = (i64, u32, Vec<(Symbol, u32)>);
    let terms: Vec<Row> = match k {
        1 => vec![(1, 1, vec![(Phi(1), 1), (Varphi, 1)])],
        2 => vec![
            (1, 2, vec![(Phi(1), 2), (Varphi, 1)]),
            (1, 1, vec![(Phi(2), 1), (Varphi, 1)]),
        ],
        3 => vec![
            (1, 3, vec![(Phi(1), 3), (Varphi, 1)]),
            (3, 2, vec![(Phi(1), 1), (Phi(2), 1), (Varphi, 1)]),
            (1, 1, vec![(Phi(3), 1), (Varphi, 1)]),
        ],
        _ => unreachable!("table covers orders 1..=3"),
    };
    terms
        .into_iter()
        .map(|(c, s, f)| (factor_weight(s, &f), rat(c)))
        .collect()
}

pub fn poly_mul(a: &WeightPoly, b: &WeightPoly) -> WeightPoly {
    let mut out = WeightPoly::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            out.add(wa.mul(wb), ca * cb);
        }
    }
    out
}

/// `coeff · scalars · ρ_x^p1 ρ_xx^p2 ρ_xxx^p3 ρ_xxxx^p4`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhoMonomial {
    pub coeff: BigRational,
    pub scalars: ScalarExponents,
    pub powers: [u32; 4],
}

impl RhoMonomial {
    pub fn new(coeff: BigRational, lam: u32, powers: [u32; 4]) -> Self {
        Self {
            coeff,
            scalars: ScalarExponents::new(lam, 0, 0),
            powers,
        }
    }
}

/// Substitutes the closed forms of `ρ_x`, `ρ_xx`, `ρ_xxx` and expands into
/// exp-schema monomials. `ρ_xxxx` is rejected.
pub fn expand_rho_powers(expr: &[RhoMonomial]) -> Result<WeightPoly> {
    if expr.iter().any(|m| m.powers[3] != 0) {
        return Err(Error::UnsupportedSymbol("rho_xxxx".into()));
    }
    WeightModel::exp().expand_potential(expr)
}
