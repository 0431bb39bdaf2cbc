//! Sorting terminal rows into boundary, energy and cross groups, boundary
//! filters, leading-order extraction, sign verdicts, and text output.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::codec::{parse_rows, write_groups};
use crate::engine::is_terminal;
use crate::error::{Error, Result};
use crate::term::{BilinearPart, Deriv, Schema, Symbol, Term, TermList, Weight};
use crate::weight::WeightPoly;

/// Lateral boundary conditions, by the x-orders that vanish there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryFilter {
    None,
    /// `w = w_x = 0`
    Clamped,
    /// `w = w_xx = 0`
    Hinged,
    /// Compactly supported `w`: every space-boundary row vanishes.
    Compact,
}

impl BoundaryFilter {
    /// Whether a space-boundary row with these slots vanishes. Time orders
    /// are ignored: `w_t` and `w_tx` vanish wherever `w` and `w_x` do.
    pub fn deletes(self, bilinear: &BilinearPart) -> bool {
        let vanishing: &[u32] = match self {
            BoundaryFilter::None => return false,
            BoundaryFilter::Compact => return true,
            BoundaryFilter::Clamped => &[0, 1],
            BoundaryFilter::Hinged => &[0, 2],
        };
        bilinear.x_orders().iter().any(|k| vanishing.contains(k))
    }
}

impl fmt::Display for BoundaryFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryFilter::None => "none",
            BoundaryFilter::Clamped => "clamped",
            BoundaryFilter::Hinged => "hinged",
            BoundaryFilter::Compact => "compact",
        })
    }
}

impl FromStr for BoundaryFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(BoundaryFilter::None),
            "clamped" => Ok(BoundaryFilter::Clamped),
            "hinged" => Ok(BoundaryFilter::Hinged),
            "compact" => Ok(BoundaryFilter::Compact),
            other => Err(Error::Malformed(format!(
                "unknown boundary condition `{other}`"
            ))),
        }
    }
}

/// Order of a term in the large parameters: total degree in λ and s, then
/// the λ-degree.
pub fn grade_key(term: &Term) -> (u32, u32) {
    let sc = term.weight.scalars;
    (sc.grade(), sc.lam)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graded {
    pub leading: TermList,
    pub subleading: TermList,
    pub rest: TermList,
}

/// Splits a group into its top grade, the next grade, and everything else.
pub fn leading(group: &TermList) -> Graded {
    let mut keys: Vec<(u32, u32)> = group.iter().map(|t| grade_key(&t)).collect();
    keys.sort_unstable_by(|a, b| b.cmp(a));
    keys.dedup();
    let top = keys.first().copied();
    let next = keys.get(1).copied();
    Graded {
        leading: group.filter(|t| Some(grade_key(t)) == top),
        subleading: group.filter(|t| Some(grade_key(t)) == next),
        rest: group.filter(|t| {
            let k = Some(grade_key(t));
            k != top && k != next
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Positive,
    Negative,
    Indefinite,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Positive => "positive",
            Sign::Negative => "negative",
            Sign::Indefinite => "indefinite",
        })
    }
}

/// Sign assumptions for weight symbols. λ and s are positive; γ is
/// indefinite unless overridden.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignContext {
    symbols: BTreeMap<Symbol, Sign>,
    pub gamma: Sign,
}

impl Default for SignContext {
    fn default() -> Self {
        let symbols = [
            (Symbol::Mu, Sign::Negative),
            (Symbol::Varphi, Sign::Positive),
            (Symbol::VarphiT, Sign::Indefinite),
            (Symbol::VarphiTT, Sign::Indefinite),
        ]
        .into_iter()
        .collect();
        Self {
            symbols,
            gamma: Sign::Indefinite,
        }
    }
}

impl SignContext {
    /// φ derivatives default to indefinite.
    pub fn sign_of_symbol(&self, sym: Symbol) -> Sign {
        self.symbols.get(&sym).copied().unwrap_or(Sign::Indefinite)
    }

    pub fn set(&mut self, sym: Symbol, sign: Sign) {
        self.symbols.insert(sym, sign);
    }
}

fn flip(sign: Sign) -> Sign {
    match sign {
        Sign::Positive => Sign::Negative,
        Sign::Negative => Sign::Positive,
        Sign::Indefinite => Sign::Indefinite,
    }
}

/// Sign of a term as a function of `(t, x)`. Only unflagged perfect squares
/// can have a definite sign.
pub fn sign_of(term: &Term, ctx: &SignContext) -> Sign {
    if term.flags.any() || !term.bilinear.is_diagonal() {
        return Sign::Indefinite;
    }
    let mut sign = if term.coeff.is_positive() {
        Sign::Positive
    } else {
        Sign::Negative
    };
    let mut apply = |s: Sign, e: u32| {
        if e % 2 == 1 {
            sign = match s {
                Sign::Positive => sign,
                Sign::Negative => flip(sign),
                Sign::Indefinite => Sign::Indefinite,
            };
        }
    };
    apply(ctx.gamma, term.weight.scalars.gamma);
    for (sym, e) in term.weight.factors.iter() {
        apply(ctx.sign_of_symbol(sym), e);
    }
    sign
}

pub fn sign_report(leading: &TermList, ctx: &SignContext) -> Vec<(Term, Sign)> {
    leading
        .iter()
        .map(|t| (t.clone(), sign_of(&t, ctx)))
        .collect()
}

/// The weight aggregate of `w_t w_x` rows, plus rows of any other cross shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossSummary {
    pub aggregate: WeightPoly,
    pub unexpected: TermList,
}

pub fn cross_summary(cross: &TermList) -> CrossSummary {
    let shape = BilinearPart::new(Deriv::new(1, 0), Deriv::x(1));
    let mut aggregate = WeightPoly::new();
    for t in cross.iter().filter(|t| t.bilinear == shape) {
        aggregate.add(t.weight.clone(), t.coeff.clone());
    }
    CrossSummary {
        aggregate,
        unexpected: cross.filter(|t| t.bilinear != shape),
    }
}

/// Classified terminal rows. The time-boundary, space-boundary, energy,
/// cross and audit groups partition the classified input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub schema: Schema,
    pub time_boundary: TermList,
    pub space_boundary: TermList,
    /// Rows `W · w_{x^k}^2`, keyed by `k`.
    pub energy: BTreeMap<u32, TermList>,
    /// Unflagged rows `W · w_{t x^k} w_{x^{k+1}}`.
    pub cross: TermList,
    /// Rows removed by the boundary filter or by dropping time boundaries.
    pub audit: TermList,
    pub energy_grades: BTreeMap<u32, Graded>,
    /// Space-boundary rows graded per bilinear shape.
    pub boundary_grades: BTreeMap<BilinearPart, Graded>,
    /// Verdicts for the leading energy rows.
    pub sign_verdicts: BTreeMap<u32, Vec<(Term, Sign)>>,
}

impl Report {
    fn from_groups(
        schema: Schema,
        time_boundary: TermList,
        space_boundary: TermList,
        energy: BTreeMap<u32, TermList>,
        cross: TermList,
        audit: TermList,
    ) -> Self {
        let energy_grades: BTreeMap<u32, Graded> =
            energy.iter().map(|(&k, g)| (k, leading(g))).collect();
        let mut shapes: BTreeMap<BilinearPart, TermList> = BTreeMap::new();
        for t in space_boundary.iter() {
            shapes
                .entry(t.bilinear)
                .or_insert_with(|| TermList::new(schema))
                .push_key(t.key(), t.coeff);
        }
        let boundary_grades = shapes.iter().map(|(&b, g)| (b, leading(g))).collect();
        let ctx = SignContext::default();
        let sign_verdicts = energy_grades
            .iter()
            .map(|(&k, g)| (k, sign_report(&g.leading, &ctx)))
            .collect();
        Self {
            schema,
            time_boundary,
            space_boundary,
            energy,
            cross,
            audit,
            energy_grades,
            boundary_grades,
            sign_verdicts,
        }
    }

    /// All leading energy rows, highest derivative order first.
    pub fn leading_energy(&self) -> TermList {
        let mut out = TermList::new(self.schema);
        for g in self.energy_grades.values() {
            out.extend_list(&g.leading).expect("one schema");
        }
        out
    }

    /// All leading space-boundary rows.
    pub fn leading_boundary(&self) -> TermList {
        let mut out = TermList::new(self.schema);
        for g in self.boundary_grades.values() {
            out.extend_list(&g.leading).expect("one schema");
        }
        out
    }

    pub fn subleading_boundary(&self) -> TermList {
        let mut out = TermList::new(self.schema);
        for g in self.boundary_grades.values() {
            out.extend_list(&g.subleading).expect("one schema");
        }
        out
    }

    pub fn cross_summary(&self) -> CrossSummary {
        cross_summary(&self.cross)
    }

    /// Every classified row, audit included, merged.
    pub fn recombined(&self) -> TermList {
        let mut out = TermList::new(self.schema);
        for part in [
            &self.time_boundary,
            &self.space_boundary,
            &self.cross,
            &self.audit,
        ] {
            out.extend_list(part).expect("one schema");
        }
        for g in self.energy.values() {
            out.extend_list(g).expect("one schema");
        }
        out
    }
}

/// Routes terminal rows by flags and shape.
pub fn classify(list: &TermList, bc: BoundaryFilter, drop_time_boundary: bool) -> Result<Report> {
    let schema = list.schema();
    let mut time_boundary = TermList::new(schema);
    let mut space_boundary = TermList::new(schema);
    let mut energy: BTreeMap<u32, TermList> = BTreeMap::new();
    let mut cross = TermList::new(schema);
    let mut audit = TermList::new(schema);
    for t in list.iter() {
        if !is_terminal(&t) {
            return Err(Error::Contract(format!(
                "cannot classify a non-terminal row: {}",
                crate::codec::emit_sparse_row(&t)
            )));
        }
        if t.flags.dt && t.flags.dx {
            return Err(Error::Contract("row carries both divergence flags".into()));
        }
        let target = if t.flags.dt {
            if drop_time_boundary {
                &mut audit
            } else {
                &mut time_boundary
            }
        } else if t.flags.dx {
            if bc.deletes(&t.bilinear) {
                &mut audit
            } else {
                &mut space_boundary
            }
        } else if t.bilinear.first.t == 0 {
            energy
                .entry(t.bilinear.first.x)
                .or_insert_with(|| TermList::new(schema))
        } else {
            &mut cross
        };
        target.push_key(t.key(), t.coeff);
    }
    Ok(Report::from_groups(
        schema,
        time_boundary,
        space_boundary,
        energy,
        cross,
        audit,
    ))
}

// ---------------------------------------------------------------- LaTeX

fn latex_power(base: &str, e: u32) -> String {
    match e {
        0 => String::new(),
        1 => base.to_string(),
        _ => format!("{base}^{{{e}}}"),
    }
}

fn latex_symbol(sym: Symbol) -> String {
    match sym {
        Symbol::Mu => "\\mu".into(),
        Symbol::Phi(k) => format!("\\phi_{{{}}}", "x".repeat(k as usize)),
        Symbol::Varphi => "\\varphi".into(),
        Symbol::VarphiT => "\\varphi_{t}".into(),
        Symbol::VarphiTT => "\\varphi_{tt}".into(),
    }
}

/// `\lambda^{a}s^{b}\gamma^{c}` followed by the weight symbols.
pub fn latex_weight(weight: &Weight) -> String {
    let sc = weight.scalars;
    let mut out = latex_power("\\lambda", sc.lam);
    out += &latex_power("s", sc.s);
    out += &latex_power("\\gamma", sc.gamma);
    for (sym, e) in weight.factors.iter() {
        out += &latex_power(&latex_symbol(sym), e);
    }
    out
}

fn latex_deriv(letter: char, d: Deriv) -> String {
    if d.t == 0 && d.x == 0 {
        return letter.to_string();
    }
    format!(
        "{letter}_{{{}{}}}",
        "t".repeat(d.t as usize),
        "x".repeat(d.x as usize)
    )
}

fn letter(schema: Schema) -> char {
    match schema {
        Schema::Poly => 'w',
        Schema::Exp => 'u',
    }
}

/// Signed coefficient prefix: `-`, `` for 1, `3`, `\frac{1}{2}`.
fn latex_coeff(c: &BigRational) -> String {
    let sign = if c.is_negative() { "-" } else { "" };
    let a = c.abs();
    if a.is_one() {
        return sign.to_string();
    }
    if a.is_integer() {
        format!("{sign}{a}")
    } else {
        format!("{sign}\\frac{{{}}}{{{}}}", a.numer(), a.denom())
    }
}

fn latex_body(term: &Term) -> String {
    let l = letter(term.schema);
    let b = term.bilinear;
    let slots = if b.is_diagonal() {
        format!("{}^{{2}}", latex_deriv(l, b.first))
    } else {
        format!("{} {}", latex_deriv(l, b.first), latex_deriv(l, b.second))
    };
    let weight = latex_weight(&term.weight);
    if weight.is_empty() {
        slots
    } else {
        format!("{weight} {slots}")
    }
}

/// One term, e.g. `-4(\lambda^{5}\mu^{5} w w_{xx})_{x}`.
pub fn latex_term(term: &Term) -> String {
    let coeff = latex_coeff(&term.coeff);
    let body = latex_body(term);
    if term.flags.dx {
        format!("{coeff}({body})_{{x}}")
    } else if term.flags.dt {
        format!("{coeff}({body})_{{t}}")
    } else {
        format!("{coeff}{body}")
    }
}

/// A signed sum of terms in list order; `0` when empty.
pub fn latex_sum(list: &TermList) -> String {
    let mut out = String::new();
    for (i, t) in list.iter().enumerate() {
        let s = latex_term(&t);
        if i == 0 {
            out.push_str(&s);
        } else if let Some(rest) = s.strip_prefix('-') {
            let _ = write!(out, " - {rest}");
        } else {
            let _ = write!(out, " + {s}");
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// A weight polynomial, e.g. the cross aggregate.
pub fn latex_weight_poly(poly: &WeightPoly) -> String {
    let mut out = String::new();
    for (i, (w, c)) in poly.iter().enumerate() {
        let mut s = latex_coeff(c);
        let body = latex_weight(w);
        if body.is_empty() {
            s = c.to_string();
        } else {
            s.push_str(&body);
        }
        if i == 0 {
            out.push_str(&s);
        } else if let Some(rest) = s.strip_prefix('-') {
            let _ = write!(out, " - {rest}");
        } else {
            let _ = write!(out, " + {s}");
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn named_groups(report: &Report) -> Vec<(String, TermList)> {
    let mut groups = vec![
        ("time-boundary".to_string(), report.time_boundary.clone()),
        ("space-boundary".to_string(), report.space_boundary.clone()),
    ];
    for (k, g) in report.energy.iter().rev() {
        groups.push((format!("energy-{k}"), g.clone()));
    }
    groups.push(("cross".into(), report.cross.clone()));
    groups.push(("audit".into(), report.audit.clone()));
    groups
}

fn derived_groups(report: &Report) -> Vec<(String, TermList)> {
    let mut groups = Vec::new();
    for (k, g) in report.energy_grades.iter().rev() {
        groups.push((format!("leading-energy-{k}"), g.leading.clone()));
        groups.push((format!("subleading-energy-{k}"), g.subleading.clone()));
    }
    groups.push(("leading-boundary".into(), report.leading_boundary()));
    groups.push(("subleading-boundary".into(), report.subleading_boundary()));
    groups
}

/// LaTeX rendering: a `%` header per group, then one term per line.
pub fn emit_latex(report: &Report) -> String {
    let mut out = String::new();
    for (name, g) in named_groups(report)
        .into_iter()
        .chain(derived_groups(report))
    {
        let _ = writeln!(out, "% {name}");
        for t in g.iter() {
            let _ = writeln!(out, "{}", latex_term(&t));
        }
    }
    let cs = report.cross_summary();
    if !cs.aggregate.is_empty() {
        let _ = writeln!(out, "% cross-aggregate");
        let _ = writeln!(out, "B = {}", latex_weight_poly(&cs.aggregate));
    }
    out
}

/// Table rendering: the row-file format with one named group per class,
/// derived leading/subleading groups, and sign verdicts as trailing comments.
pub fn emit_table(report: &Report) -> String {
    let groups: Vec<(String, Vec<Term>)> = named_groups(report)
        .into_iter()
        .chain(derived_groups(report))
        .map(|(n, g)| (n, g.terms()))
        .collect();
    let mut out = write_groups(report.schema, &groups);
    for (k, verdicts) in report.sign_verdicts.iter().rev() {
        for (t, sign) in verdicts {
            let _ = writeln!(out, "# sign energy-{k} {sign}: {}", latex_term(t));
        }
    }
    out
}

/// Reads a table back. Derived groups and verdicts are recomputed from the
/// partition groups.
pub fn parse_table(text: &str) -> Result<Report> {
    let file = parse_rows(text, None)?;
    let schema = file.header.schema;
    let list = |rows: &[Term]| TermList::from_terms(schema, rows.iter().cloned());
    let mut time_boundary = TermList::new(schema);
    let mut space_boundary = TermList::new(schema);
    let mut energy = BTreeMap::new();
    let mut cross = TermList::new(schema);
    let mut audit = TermList::new(schema);
    for (name, rows) in &file.groups {
        match name.as_str() {
            "time-boundary" => time_boundary = list(rows)?,
            "space-boundary" => space_boundary = list(rows)?,
            "cross" => cross = list(rows)?,
            "audit" => audit = list(rows)?,
            other => {
                if let Some(k) = other.strip_prefix("energy-") {
                    let k: u32 = k
                        .parse()
                        .map_err(|_| Error::Malformed(format!("bad group name `{other}`")))?;
                    energy.insert(k, list(rows)?);
                }
            }
        }
    }
    Ok(Report::from_groups(
        schema,
        time_boundary,
        space_boundary,
        energy,
        cross,
        audit,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::parse_row;
    use crate::rational::rat;

    fn poly(rows: &[&str]) -> TermList {
        TermList::from_terms(
            Schema::Poly,
            rows.iter().map(|r| parse_row(r, Schema::Poly).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn latex_of_flagged_row() {
        let t = parse_row("-4,5,5,0,0,2,0,1", Schema::Poly).unwrap();
        assert_eq!(latex_term(&t), "-4(\\lambda^{5}\\mu^{5} w w_{xx})_{x}");
    }

    #[test]
    fn latex_of_energy_and_fractions() {
        let t = parse_row("1/2,1,0,0,2,2,1,0", Schema::Poly).unwrap();
        assert_eq!(latex_term(&t), "\\frac{1}{2}(\\lambda w_{xx}^{2})_{t}");
        let t = parse_row("1,0,0,1,0,1,0,0", Schema::Poly).unwrap();
        assert_eq!(latex_term(&t), "w_{t} w_{x}");
    }

    #[test]
    fn sign_rules() {
        let ctx = SignContext::default();
        let s = |r: &str| sign_of(&parse_row(r, Schema::Poly).unwrap(), &ctx);
        assert_eq!(s("16,7,6,0,0,0,0,0"), Sign::Positive);
        assert_eq!(s("-3,1,2,0,0,0,0,0"), Sign::Negative);
        assert_eq!(s("5,1,1,0,1,1,0,0"), Sign::Negative);
        assert_eq!(s("5,1,2,0,0,1,0,0"), Sign::Indefinite);
        let e = parse_row("8,7,8,8,0,0,0,7,0,0,0,0,0,0", Schema::Exp).unwrap();
        assert_eq!(sign_of(&e, &ctx), Sign::Positive);
        let mut scaled = e.clone();
        scaled.coeff = rat(1000);
        assert_eq!(sign_of(&scaled, &ctx), Sign::Positive);
    }

    #[test]
    fn grading_single_row() {
        let g = leading(&poly(&["3,2,0,0,1,1,0,0"]));
        assert_eq!(g.leading.len(), 1);
        assert!(g.subleading.is_empty() && g.rest.is_empty());
    }

    #[test]
    fn grading_tie_breaks_on_lambda() {
        let g = leading(
            &TermList::from_terms(
                Schema::Exp,
                [
                    "60,3,4,4,0,0,0,3,0,0,2,2,0,0",
                    "60,3,3,2,1,0,0,3,0,0,2,2,0,0",
                    "-40,2,4,4,0,0,0,2,0,0,2,2,0,0",
                ]
                .iter()
                .map(|r| parse_row(r, Schema::Exp).unwrap()),
            )
            .unwrap(),
        );
        assert_eq!(g.leading.len(), 1);
        assert_eq!(g.subleading.terms()[0].weight.scalars.lam, 3);
        assert_eq!(g.rest.len(), 1);
    }

    #[test]
    fn filters() {
        let b = |f, s| BilinearPart::new(Deriv::x(f), Deriv::x(s));
        assert!(BoundaryFilter::Clamped.deletes(&b(1, 2)));
        assert!(!BoundaryFilter::Clamped.deletes(&b(2, 3)));
        assert!(BoundaryFilter::Hinged.deletes(&b(2, 3)));
        assert!(!BoundaryFilter::Hinged.deletes(&b(1, 3)));
        assert!(BoundaryFilter::Clamped.deletes(&BilinearPart::new(Deriv::new(1, 1), Deriv::x(2))));
        assert!(!BoundaryFilter::None.deletes(&b(0, 0)));
    }

    #[test]
    fn non_terminal_rows_are_rejected() {
        assert!(classify(&poly(&["1,0,0,0,0,3,0,0"]), BoundaryFilter::None, false).is_err());
    }

    #[test]
    fn empty_report_renders_headers_only() {
        let r = classify(&TermList::new(Schema::Poly), BoundaryFilter::None, false).unwrap();
        let tex = emit_latex(&r);
        assert!(tex.lines().all(|l| l.starts_with('%')));
        assert_eq!(parse_table(&emit_table(&r)).unwrap(), r);
    }

    #[test]
    fn partition_and_round_trip() {
        let input = poly(&[
            "-4,5,5,0,0,2,0,1",
            "1/2,1,0,0,2,2,1,0",
            "960,5,2,0,0,0,0,0",
            "-60,5,4,0,1,1,0,0",
            "2,1,1,1,0,1,0,0",
        ]);
        let r = classify(&input, BoundaryFilter::Clamped, true).unwrap();
        assert_eq!(r.recombined(), input);
        assert_eq!(r.audit.len(), 2);
        assert_eq!(r.cross.len(), 1);
        let table = emit_table(&r);
        let back = parse_table(&table).unwrap();
        assert_eq!(back, r);
        assert_eq!(emit_table(&back), table);
    }
}
