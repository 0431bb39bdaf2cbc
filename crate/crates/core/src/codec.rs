//! Row codecs and the row-file format.
//!
//! Fixed rows are comma-separated integer columns (the first column is a
//! rational `p` or `p/q`):
//!
//! | schema | kind     | columns |
//! |--------|----------|---------|
//! | poly   | bilinear | `c, λ, μ, bt, bx, cx, dt, dx` |
//! | exp    | bilinear | `c, λ, s, φx, φxx, φxxx, φxxxx, ϕ, ϕt, bt, bx, cx, dt, dx` |
//! | poly   | unary    | `c, λ, μ, t, x` |
//! | exp    | unary    | `c, λ, s, φx, φxx, φxxx, φxxxx, ϕ, ϕt, t, x` |
//!
//! Sparse rows hold anything, including γ powers, φ derivatives past the
//! fourth, `vphi_tt`, and oracle terms with a timed second slot:
//!
//! ```text
//! coeff; lam^a s^b gamma^c; sym^e ...; (bt,bx)(ct,cx); (dt,dx)
//! coeff; lam^a s^b gamma^c; sym^e ...; (t,x)               # unary
//! ```
//!
//! An empty scalar or factor product is written `1`. A file starts with
//! `# schema=poly|exp format=fixed|sparse [kind=unary]`; other lines
//! starting with `#` are comments, except `# group=NAME`, which opens a
//! named group in table files.

use std::fmt::Write as _;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::rational::parse_rational;
use crate::term::{
    BilinearPart, Deriv, DivergenceFlags, FactorExponents, ScalarExponents, Schema, Symbol, Term,
    TermList, UnaryList, UnaryTerm, Weight,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowFormat {
    Fixed,
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Bilinear,
    Unary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub schema: Schema,
    pub format: RowFormat,
    pub kind: RowKind,
}

impl Header {
    pub fn render(&self) -> String {
        let mut s = format!(
            "# schema={} format={}",
            self.schema,
            match self.format {
                RowFormat::Fixed => "fixed",
                RowFormat::Sparse => "sparse",
            }
        );
        if self.kind == RowKind::Unary {
            s.push_str(" kind=unary");
        }
        s
    }

    fn parse(line: &str, line_no: usize) -> Result<Option<Header>> {
        let Some(body) = line.trim().strip_prefix('#') else {
            return Ok(None);
        };
        let mut schema = None;
        let mut format = RowFormat::Fixed;
        let mut kind = RowKind::Bilinear;
        for pair in body.split_whitespace() {
            let Some((k, v)) = pair.split_once('=') else {
                continue;
            };
            match k {
                "schema" => {
                    schema = Some(
                        v.parse()
                            .map_err(|_| Error::parse(line_no, format!("bad schema `{v}`")))?,
                    )
                }
                "format" => {
                    format = match v {
                        "fixed" => RowFormat::Fixed,
                        "sparse" => RowFormat::Sparse,
                        _ => return Err(Error::parse(line_no, format!("bad format `{v}`"))),
                    }
                }
                "kind" => {
                    kind = match v {
                        "unary" => RowKind::Unary,
                        "bilinear" => RowKind::Bilinear,
                        _ => return Err(Error::parse(line_no, format!("bad kind `{v}`"))),
                    }
                }
                _ => {}
            }
        }
        Ok(schema.map(|schema| Header {
            schema,
            format,
            kind,
        }))
    }
}

const EXP_FIXED_SYMBOLS: [Symbol; 6] = [
    Symbol::Phi(1),
    Symbol::Phi(2),
    Symbol::Phi(3),
    Symbol::Phi(4),
    Symbol::Varphi,
    Symbol::VarphiT,
];

type FieldResult<T> = std::result::Result<T, String>;

fn split_fields(line: &str, expected: usize) -> FieldResult<Vec<&str>> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != expected {
        return Err(format!(
            "expected {expected} comma-separated fields, found {}",
            fields.len()
        ));
    }
    Ok(fields)
}

fn coeff_field(text: &str) -> FieldResult<BigRational> {
    parse_rational(text).ok_or_else(|| format!("`{text}` is not a rational number"))
}

fn nat_field(text: &str, what: &str) -> FieldResult<u32> {
    if let Ok(v) = text.parse::<i64>() {
        if v < 0 {
            return Err(format!("negative {what} `{text}`"));
        }
        return u32::try_from(v).map_err(|_| format!("{what} `{text}` is too large"));
    }
    Err(format!("{what} `{text}` is not an integer"))
}

fn flag_field(text: &str) -> FieldResult<bool> {
    match nat_field(text, "divergence flag")? {
        0 => Ok(false),
        1 => Ok(true),
        v => Err(format!("divergence flag must be 0 or 1, found {v}")),
    }
}

/// Parses the weight columns of a fixed row (everything between the
/// coefficient and the derivative columns).
fn fixed_weight(schema: Schema, cols: &[&str]) -> FieldResult<Weight> {
    let nat = |i: usize| nat_field(cols[i], "exponent");
    match schema {
        Schema::Poly => Ok(Weight::new(
            ScalarExponents::new(nat(0)?, 0, 0),
            FactorExponents::new().with(Symbol::Mu, nat(1)?),
        )),
        Schema::Exp => {
            let mut factors = FactorExponents::new();
            for (i, sym) in EXP_FIXED_SYMBOLS.iter().enumerate() {
                factors.set(*sym, nat(2 + i)?);
            }
            Ok(Weight::new(
                ScalarExponents::new(nat(0)?, nat(1)?, 0),
                factors,
            ))
        }
    }
}

fn weight_width(schema: Schema) -> usize {
    match schema {
        Schema::Poly => 2,
        Schema::Exp => 8,
    }
}

fn parse_fixed(line: &str, schema: Schema) -> FieldResult<Term> {
    let w = weight_width(schema);
    let f = split_fields(line, 1 + w + 5)?;
    let coeff = coeff_field(f[0])?;
    let weight = fixed_weight(schema, &f[1..1 + w])?;
    let d = &f[1 + w..];
    let bt = nat_field(d[0], "derivative order")?;
    let bx = nat_field(d[1], "derivative order")?;
    let cx = nat_field(d[2], "derivative order")?;
    let flags = DivergenceFlags {
        dt: flag_field(d[3])?,
        dx: flag_field(d[4])?,
    };
    Ok(Term::new(
        schema,
        coeff,
        weight,
        BilinearPart::new(Deriv::new(bt, bx), Deriv::x(cx)),
    )
    .with_flags(flags))
}

fn fixed_weight_columns(schema: Schema, weight: &Weight) -> Result<Vec<u32>> {
    let reject = |reason: String| Err(Error::FixedLayout { schema, reason });
    if weight.scalars.gamma != 0 {
        return reject("a γ power has no column".into());
    }
    match schema {
        Schema::Poly => {
            if let Some(sym) = weight.factors.symbols().find(|s| *s != Symbol::Mu) {
                return reject(format!("symbol {sym} has no column"));
            }
            Ok(vec![weight.scalars.lam, weight.factors.get(Symbol::Mu)])
        }
        Schema::Exp => {
            if let Some(sym) = weight
                .factors
                .symbols()
                .find(|s| !EXP_FIXED_SYMBOLS.contains(s))
            {
                return reject(format!("symbol {sym} has no column"));
            }
            let mut cols = vec![weight.scalars.lam, weight.scalars.s];
            cols.extend(EXP_FIXED_SYMBOLS.iter().map(|s| weight.factors.get(*s)));
            Ok(cols)
        }
    }
}

fn join_row(coeff: &BigRational, cols: impl IntoIterator<Item = u32>) -> String {
    let mut s = coeff.to_string();
    for c in cols {
        let _ = write!(s, ",{c}");
    }
    s
}

/// Parses one fixed-layout bilinear row. Errors carry line number 1; use
/// [`parse_rows`] for files.
pub fn parse_row(line: &str, schema: Schema) -> Result<Term> {
    parse_fixed(line, schema).map_err(|m| Error::parse(1, m))
}

/// Emits the fixed-layout row of a bilinear term, or fails when the term
/// needs the sparse format.
pub fn emit_row(term: &Term) -> Result<String> {
    let schema = term.schema;
    if term.bilinear.second.t != 0 {
        return Err(Error::FixedLayout {
            schema,
            reason: "the second slot carries a time derivative".into(),
        });
    }
    let mut cols = fixed_weight_columns(schema, &term.weight)?;
    let b = term.bilinear;
    cols.extend([
        b.first.t,
        b.first.x,
        b.second.x,
        term.flags.dt as u32,
        term.flags.dx as u32,
    ]);
    Ok(join_row(&term.coeff, cols))
}

fn emit_scalars(s: &ScalarExponents) -> String {
    let parts: Vec<String> = [("lam", s.lam), ("s", s.s), ("gamma", s.gamma)]
        .into_iter()
        .filter(|(_, e)| *e != 0)
        .map(|(n, e)| format!("{n}^{e}"))
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join(" ")
    }
}

fn emit_factors(f: &FactorExponents) -> String {
    let parts: Vec<String> = f.iter().map(|(s, e)| format!("{s}^{e}")).collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join(" ")
    }
}

fn power_items(text: &str) -> FieldResult<Vec<(&str, u32)>> {
    let text = text.trim();
    if text == "1" || text.is_empty() {
        return Ok(Vec::new());
    }
    text.split_whitespace()
        .map(|item| match item.split_once('^') {
            Some((name, e)) => Ok((name, nat_field(e, "exponent")?)),
            None => Ok((item, 1)),
        })
        .collect()
}

fn parse_scalars(text: &str) -> FieldResult<ScalarExponents> {
    let mut s = ScalarExponents::default();
    for (name, e) in power_items(text)? {
        match name {
            "lam" => s.lam += e,
            "s" => s.s += e,
            "gamma" => s.gamma += e,
            other => return Err(format!("unknown scalar `{other}`")),
        }
    }
    Ok(s)
}

fn parse_factors(text: &str) -> FieldResult<FactorExponents> {
    power_items(text)?
        .into_iter()
        .map(|(name, e)| {
            name.parse::<Symbol>()
                .map(|s| (s, e))
                .map_err(|_| format!("unknown symbol `{name}`"))
        })
        .collect()
}

fn parse_pairs(text: &str) -> FieldResult<Vec<(u32, u32)>> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut out = Vec::new();
    let mut rest = compact.as_str();
    while !rest.is_empty() {
        let inner = rest
            .strip_prefix('(')
            .and_then(|r| r.split_once(')'))
            .ok_or_else(|| format!("malformed pair list `{text}`"))?;
        let (a, b) = inner
            .0
            .split_once(',')
            .ok_or_else(|| format!("malformed pair `({})`", inner.0))?;
        out.push((
            nat_field(a, "derivative order")?,
            nat_field(b, "derivative order")?,
        ));
        rest = inner.1;
    }
    Ok(out)
}

fn parse_sparse(line: &str, schema: Schema) -> FieldResult<Term> {
    let f: Vec<&str> = line.split(';').collect();
    if f.len() != 5 {
        return Err(format!(
            "expected 5 `;`-separated fields, found {}",
            f.len()
        ));
    }
    let coeff = coeff_field(f[0].trim())?;
    let weight = Weight::new(parse_scalars(f[1])?, parse_factors(f[2])?);
    let slots = parse_pairs(f[3])?;
    if slots.len() != 2 {
        return Err("expected two derivative slots".into());
    }
    let flags = parse_pairs(f[4])?;
    if flags.len() != 1 {
        return Err("expected one flag pair".into());
    }
    let to_flag = |v: u32| match v {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(format!("divergence flag must be 0 or 1, found {v}")),
    };
    Ok(Term::new(
        schema,
        coeff,
        weight,
        BilinearPart::new(
            Deriv::new(slots[0].0, slots[0].1),
            Deriv::new(slots[1].0, slots[1].1),
        ),
    )
    .with_flags(DivergenceFlags {
        dt: to_flag(flags[0].0)?,
        dx: to_flag(flags[0].1)?,
    }))
}

pub fn parse_sparse_row(line: &str, schema: Schema) -> Result<Term> {
    parse_sparse(line, schema).map_err(|m| Error::parse(1, m))
}

pub fn emit_sparse_row(term: &Term) -> String {
    let b = term.bilinear;
    format!(
        "{}; {}; {}; ({},{})({},{}); ({},{})",
        term.coeff,
        emit_scalars(&term.weight.scalars),
        emit_factors(&term.weight.factors),
        b.first.t,
        b.first.x,
        b.second.t,
        b.second.x,
        term.flags.dt as u32,
        term.flags.dx as u32
    )
}

fn parse_unary(line: &str, schema: Schema) -> FieldResult<UnaryTerm> {
    if line.contains(';') {
        let f: Vec<&str> = line.split(';').collect();
        if f.len() != 4 {
            return Err(format!(
                "expected 4 `;`-separated fields, found {}",
                f.len()
            ));
        }
        let coeff = coeff_field(f[0].trim())?;
        let weight = Weight::new(parse_scalars(f[1])?, parse_factors(f[2])?);
        let d = parse_pairs(f[3])?;
        if d.len() != 1 {
            return Err("expected one derivative pair".into());
        }
        return Ok(UnaryTerm::new(
            schema,
            coeff,
            weight,
            Deriv::new(d[0].0, d[0].1),
        ));
    }
    let w = weight_width(schema);
    let f = split_fields(line, 1 + w + 2)?;
    let coeff = coeff_field(f[0])?;
    let weight = fixed_weight(schema, &f[1..1 + w])?;
    Ok(UnaryTerm::new(
        schema,
        coeff,
        weight,
        Deriv::new(
            nat_field(f[1 + w], "derivative order")?,
            nat_field(f[2 + w], "derivative order")?,
        ),
    ))
}

pub fn parse_unary_row(line: &str, schema: Schema) -> Result<UnaryTerm> {
    parse_unary(line, schema).map_err(|m| Error::parse(1, m))
}

pub fn emit_unary_row(term: &UnaryTerm) -> Result<String> {
    let mut cols = fixed_weight_columns(term.schema, &term.weight)?;
    cols.extend([term.deriv.t, term.deriv.x]);
    Ok(join_row(&term.coeff, cols))
}

pub fn emit_sparse_unary_row(term: &UnaryTerm) -> String {
    format!(
        "{}; {}; {}; ({},{})",
        term.coeff,
        emit_scalars(&term.weight.scalars),
        emit_factors(&term.weight.factors),
        term.deriv.t,
        term.deriv.x
    )
}

/// Parses a single bilinear row, detecting the sparse layout by its `;`.
fn parse_any(line: &str, schema: Schema, line_no: usize) -> Result<Term> {
    let parsed = if line.contains(';') {
        parse_sparse(line, schema)
    } else {
        parse_fixed(line, schema)
    };
    let term = parsed.map_err(|m| Error::parse(line_no, m))?;
    term.validate()
        .map_err(|e| Error::parse(line_no, e.to_string()))?;
    Ok(term)
}

/// A parsed row file: header plus rows split into named groups. Rows before
/// any `# group=` line land in a group with an empty name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowFile<T> {
    pub header: Header,
    pub groups: Vec<(String, Vec<T>)>,
}

impl<T: Clone> RowFile<T> {
    pub fn rows(&self) -> Vec<T> {
        self.groups
            .iter()
            .flat_map(|(_, r)| r.iter().cloned())
            .collect()
    }

    pub fn group(&self, name: &str) -> Option<&[T]> {
        self.groups
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, r)| r.as_slice())
    }
}

fn scan<T>(
    text: &str,
    schema_hint: Option<Schema>,
    expected_kind: RowKind,
    mut row: impl FnMut(&str, Schema, usize) -> Result<T>,
) -> Result<RowFile<T>> {
    let mut header: Option<Header> = None;
    let mut groups: Vec<(String, Vec<T>)> = vec![(String::new(), Vec::new())];
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(body) = line.strip_prefix('#') {
            if header.is_none() {
                if let Some(h) = Header::parse(line, line_no)? {
                    if let Some(hint) = schema_hint {
                        if hint != h.schema {
                            return Err(Error::parse(
                                line_no,
                                format!("file schema {} does not match requested {hint}", h.schema),
                            ));
                        }
                    }
                    if h.kind != expected_kind {
                        return Err(Error::parse(line_no, "unexpected row kind in header"));
                    }
                    header = Some(h);
                    continue;
                }
            }
            if let Some(name) = body.trim().strip_prefix("group=") {
                groups.push((name.trim().to_string(), Vec::new()));
            }
            continue;
        }
        let h = match header {
            Some(h) => h,
            None => {
                let schema = schema_hint
                    .ok_or_else(|| Error::parse(line_no, "missing `# schema=...` header"))?;
                let h = Header {
                    schema,
                    format: if line.contains(';') {
                        RowFormat::Sparse
                    } else {
                        RowFormat::Fixed
                    },
                    kind: expected_kind,
                };
                header = Some(h);
                h
            }
        };
        let parsed = row(line, h.schema, line_no)?;
        groups.last_mut().expect("nonempty").1.push(parsed);
    }
    let header = match (header, schema_hint) {
        (Some(h), _) => h,
        (None, Some(schema)) => Header {
            schema,
            format: RowFormat::Fixed,
            kind: expected_kind,
        },
        (None, None) => return Err(Error::parse(1, "missing `# schema=...` header")),
    };
    if groups[0].1.is_empty() && groups.len() > 1 {
        groups.remove(0);
    }
    Ok(RowFile { header, groups })
}

/// Parses a bilinear row file. Rows are returned exactly as written:
/// unmerged, in file order, not canonicalized.
pub fn parse_rows(text: &str, schema_hint: Option<Schema>) -> Result<RowFile<Term>> {
    scan(text, schema_hint, RowKind::Bilinear, parse_any)
}

pub fn parse_unary_rows(text: &str, schema_hint: Option<Schema>) -> Result<RowFile<UnaryTerm>> {
    scan(
        text,
        schema_hint,
        RowKind::Unary,
        |line, schema, line_no| {
            let t = parse_unary(line, schema).map_err(|m| Error::parse(line_no, m))?;
            t.weight
                .validate(schema)
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
            Ok(t)
        },
    )
}

/// Reads a bilinear row file into a merged list.
pub fn read_term_list(text: &str, schema_hint: Option<Schema>) -> Result<TermList> {
    let file = parse_rows(text, schema_hint)?;
    TermList::from_terms(file.header.schema, file.rows())
}

pub fn read_unary_list(text: &str, schema_hint: Option<Schema>) -> Result<UnaryList> {
    let file = parse_unary_rows(text, schema_hint)?;
    UnaryList::from_terms(file.header.schema, file.rows())
}

fn fits_fixed(term: &Term) -> bool {
    emit_row(term).is_ok()
}

/// Writes named groups of bilinear rows. The fixed layout is used when every
/// row fits it, otherwise the whole file is sparse.
pub fn write_groups(schema: Schema, groups: &[(String, Vec<Term>)]) -> String {
    let all_fixed = groups.iter().all(|(_, rows)| rows.iter().all(fits_fixed));
    let header = Header {
        schema,
        format: if all_fixed {
            RowFormat::Fixed
        } else {
            RowFormat::Sparse
        },
        kind: RowKind::Bilinear,
    };
    let mut out = header.render();
    out.push('\n');
    for (name, rows) in groups {
        if !name.is_empty() {
            let _ = writeln!(out, "# group={name}");
        }
        for t in rows {
            let line = if all_fixed {
                emit_row(t).expect("checked fits_fixed")
            } else {
                emit_sparse_row(t)
            };
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

pub fn write_rows(schema: Schema, rows: &[Term]) -> String {
    write_groups(schema, &[(String::new(), rows.to_vec())])
}

pub fn write_term_list(list: &TermList) -> String {
    write_rows(list.schema(), &list.terms())
}

pub fn write_unary_list(list: &UnaryList) -> String {
    write_unary_groups(list.schema(), &[(String::new(), list.iter().collect())])
}

/// Unary counterpart of [`write_groups`].
pub fn write_unary_groups(schema: Schema, groups: &[(String, Vec<UnaryTerm>)]) -> String {
    let all_fixed = groups
        .iter()
        .all(|(_, rows)| rows.iter().all(|t| emit_unary_row(t).is_ok()));
    let header = Header {
        schema,
        format: if all_fixed {
            RowFormat::Fixed
        } else {
            RowFormat::Sparse
        },
        kind: RowKind::Unary,
    };
    let mut out = header.render();
    out.push('\n');
    for (name, rows) in groups {
        if !name.is_empty() {
            let _ = writeln!(out, "# group={name}");
        }
        for t in rows {
            let line = if all_fixed {
                emit_unary_row(t).expect("checked")
            } else {
                emit_sparse_unary_row(t)
            };
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}
