//! Named end-to-end scenarios with golden expectations.
//!
//! | name                   | operator   | weight   | product              | boundary |
//! |------------------------|------------|----------|----------------------|----------|
//! | `prop1-second-order`   | `∂x²`      | poly-psi | `I1 · I2`            | none     |
//! | `thm1-poly`            | `∂t + ∂x⁴` | poly-psi | `I1 · (I2 + I3)`     | compact  |
//! | `thm2-exp-clamped`     | `∂t + ∂x⁴` | exp-rho  | `J1 · (J2 + J3)`     | clamped  |
//! | `thm2-exp-hinged`      | `∂t + ∂x⁴` | exp-rho  | `J1 · (J2 + J3)`     | hinged   |
//! | `thm2-cross-reduction` | `∂t + ∂x⁴` | exp-rho  | `B u_x · (u_t - J1)` | none     |
//!
//! In the last scenario `B` is the cross aggregate computed by the
//! `thm2-exp-clamped` pipeline and `u_t - J1` is the space part of the
//! first multiplier group with its sign flipped; only the
//! `(λ, s, ϕ)`-degrees of the leading energy rows are checked there.
//!
//! Hand expansion of the poly leading energies (each product of an `I1`
//! entry with an `I2 + I3` entry, integrated by parts on its own):
//!
//! | energy          | contributions                                                   | total |
//! |-----------------|-----------------------------------------------------------------|-------|
//! | `λ³μ² w_xx²`    | `72` (`μw_xxx·μ²w_xx`), `96` (`μw_xxx·μw_x`), `-36` (`μ³w_x·w_xxxx`), `-12` (`μ²w·w_xxxx`) | 120 |
//! | `λ⁵μ⁴ w_x²`     | `120` (`μ³w_x·μ²w_xx`), `72` (`μ²w·μ²w_xx`), `-60` (`μw_xxx·μ⁴w`), `-96` (`μ³w_x·μw_x`) | 36 |
//! | `λ⁷μ⁶ w²`       | `28` (`μ³w_x·μ⁴w`), `-12` (`μ²w·μ⁴w`)                           | 16 |

use std::collections::BTreeSet;

use crate::classify::{classify, grade_key, BoundaryFilter, Report, Sign};
use crate::codec::{parse_rows, write_groups, write_term_list, RowFile};
use crate::conjugation::{conjugate, multiply, split_multiplier, OperatorSpec};
use crate::engine::reduce;
use crate::error::{Error, Result};
use crate::oracle::{verify_identity, IdentityCheck};
use crate::term::{Deriv, Symbol, Term, TermList, UnaryList, UnaryTerm};
use crate::weight::WeightModel;

pub const PRESET_NAMES: [&str; 5] = [
    "prop1-second-order",
    "thm1-poly",
    "thm2-exp-clamped",
    "thm2-exp-hinged",
    "thm2-cross-reduction",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Product {
    /// `group(left) · Σ group(right)`, 1-based group numbers.
    Groups {
        left: usize,
        right: &'static [usize],
    },
    /// `B w_x` times the negated space part of the first group.
    CrossReduction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub op: OperatorSpec,
    pub model: WeightModel,
    pub product: Product,
    pub bc: BoundaryFilter,
    pub drop_time_boundary: bool,
    /// Golden rows in the table format.
    pub golden: &'static str,
}

pub fn preset(name: &str) -> Result<Preset> {
    let fourth_times_rest = Product::Groups {
        left: 1,
        right: &[2, 3],
    };
    let p = match name {
        "prop1-second-order" => Preset {
            name: "prop1-second-order",
            op: OperatorSpec::second(),
            model: WeightModel::poly(),
            product: Product::Groups {
                left: 1,
                right: &[2],
            },
            bc: BoundaryFilter::None,
            drop_time_boundary: false,
            golden: include_str!("../goldens/prop1-second-order.rows"),
        },
        "thm1-poly" => Preset {
            name: "thm1-poly",
            op: OperatorSpec::fourth(false),
            model: WeightModel::poly(),
            product: fourth_times_rest,
            bc: BoundaryFilter::Compact,
            drop_time_boundary: true,
            golden: include_str!("../goldens/thm1-poly.rows"),
        },
        "thm2-exp-clamped" => Preset {
            name: "thm2-exp-clamped",
            op: OperatorSpec::fourth(false),
            model: WeightModel::exp(),
            product: fourth_times_rest,
            bc: BoundaryFilter::Clamped,
            drop_time_boundary: true,
            golden: include_str!("../goldens/thm2-exp-clamped.rows"),
        },
        "thm2-exp-hinged" => Preset {
            name: "thm2-exp-hinged",
            op: OperatorSpec::fourth(false),
            model: WeightModel::exp(),
            product: fourth_times_rest,
            bc: BoundaryFilter::Hinged,
            drop_time_boundary: true,
            golden: include_str!("../goldens/thm2-exp-hinged.rows"),
        },
        "thm2-cross-reduction" => Preset {
            name: "thm2-cross-reduction",
            op: OperatorSpec::fourth(false),
            model: WeightModel::exp(),
            product: Product::CrossReduction,
            bc: BoundaryFilter::None,
            drop_time_boundary: false,
            golden: include_str!("../goldens/thm2-cross-reduction.rows"),
        },
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(p)
}

impl Preset {
    pub fn goldens(&self) -> Result<RowFile<Term>> {
        parse_rows(self.golden, Some(self.model.schema()))
    }

    /// The bilinear product fed to the engine.
    pub fn input(&self) -> Result<TermList> {
        let conj = conjugate(self.op, &self.model)?;
        let split = split_multiplier(&conj, &self.model)?;
        match self.product {
            Product::Groups { left, right } => {
                multiply(split.group(left), &split.sum_of(right)?, false)
            }
            Product::CrossReduction => {
                let schema = self.model.schema();
                let source = preset("thm2-exp-clamped")?;
                let report = classify(
                    &reduce(&source.input()?, &source.model)?,
                    source.bc,
                    source.drop_time_boundary,
                )?;
                let b = report.cross_summary().aggregate;
                let left = UnaryList::from_terms(
                    schema,
                    b.iter()
                        .map(|(w, c)| UnaryTerm::new(schema, c.clone(), w.clone(), Deriv::x(1))),
                )?;
                let tail = UnaryList::from_terms(
                    schema,
                    split
                        .group(1)
                        .iter()
                        .filter(|t| t.deriv.t == 0)
                        .map(|t| UnaryTerm::new(schema, -t.coeff, t.weight, t.deriv)),
                )?;
                multiply(&left, &tail, false)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl GoldenCheck {
    fn exact(name: &str, expected: &TermList, got: &TermList) -> Self {
        let passed = expected == got;
        let detail = if passed {
            format!("{} rows match", expected.len())
        } else {
            format!(
                "expected:\n{}got:\n{}",
                write_term_list(expected),
                write_term_list(got)
            )
        };
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn flag(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PresetRun {
    pub preset: Preset,
    pub input: TermList,
    pub output: TermList,
    pub report: Report,
    pub identity: IdentityCheck,
    pub checks: Vec<GoldenCheck>,
}

impl PresetRun {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn all_energy(report: &Report) -> TermList {
    let mut out = TermList::new(report.schema);
    for g in report.energy.values() {
        out.extend_list(g).expect("one schema");
    }
    out
}

fn degree(t: &Term) -> (u32, u32, u32) {
    let sc = t.weight.scalars;
    (sc.lam, sc.s, t.weight.factors.get(Symbol::Varphi))
}

fn check_group(name: &str, golden: &TermList, report: &Report) -> GoldenCheck {
    match name {
        "divergence" => {
            let mut boundary = report.space_boundary.clone();
            boundary
                .extend_list(&report.time_boundary)
                .expect("one schema");
            GoldenCheck::exact(name, golden, &boundary)
        }
        "energy" => GoldenCheck::exact(name, golden, &all_energy(report)),
        "leading-energy" => GoldenCheck::exact(name, golden, &report.leading_energy()),
        "cross" => {
            let mut check = GoldenCheck::exact(name, golden, &report.cross);
            let summary = report.cross_summary();
            let expected = crate::classify::cross_summary(golden).aggregate;
            if summary.aggregate != expected || !summary.unexpected.is_empty() {
                check.passed = false;
                check.detail.push_str("\ncross aggregate differs");
            }
            check
        }
        "leading-boundary" => GoldenCheck::exact(name, golden, &report.leading_boundary()),
        "subleading-boundary" => {
            let grades = |l: &TermList| -> BTreeSet<_> {
                l.iter().map(|t| (t.bilinear, grade_key(&t))).collect()
            };
            let want = grades(golden);
            let got = grades(&report.subleading_boundary());
            GoldenCheck::flag(
                name,
                want == got,
                format!("expected grades {want:?}, got {got:?}"),
            )
        }
        "degree-pattern" => {
            let mut problems = Vec::new();
            for g in golden.iter() {
                let k = g.bilinear.first.x;
                let leading = report
                    .energy_grades
                    .get(&k)
                    .map(|gr| gr.leading.terms())
                    .unwrap_or_default();
                if leading.is_empty() || leading.iter().any(|t| degree(t) != degree(&g)) {
                    problems.push(format!(
                        "order {k}: expected (lam, s, vphi) = {:?}, got {:?}",
                        degree(&g),
                        leading.iter().map(degree).collect::<Vec<_>>()
                    ));
                }
            }
            GoldenCheck::flag(name, problems.is_empty(), problems.join("; "))
        }
        other => GoldenCheck::flag(other, false, format!("unknown golden group `{other}`")),
    }
}

/// Runs the pipeline of a preset and checks it against its goldens.
pub fn run_preset(name: &str) -> Result<PresetRun> {
    let preset = preset(name)?;
    let schema = preset.model.schema();
    let input = preset.input()?;
    let output = reduce(&input, &preset.model)?;
    let identity = verify_identity(&input, &output, &preset.model)?;
    let report = classify(&output, preset.bc, preset.drop_time_boundary)?;

    let mut checks = vec![GoldenCheck::flag(
        "identity",
        identity.is_ok(),
        match &identity {
            IdentityCheck::Ok => "expanded output equals input".into(),
            IdentityCheck::Diff(d) => format!("residual:\n{}", write_term_list(d)),
        },
    )];
    let goldens = preset.goldens()?;
    let reemitted = write_groups(schema, &goldens.groups);
    checks.push(GoldenCheck::flag(
        "golden-file",
        reemitted == preset.golden,
        "golden file re-emits byte for byte".into(),
    ));
    for (group, rows) in &goldens.groups {
        let list = TermList::from_terms(schema, rows.iter().cloned())?;
        checks.push(check_group(group, &list, &report));
        if group == "leading-energy" {
            let bad: Vec<String> = report
                .sign_verdicts
                .values()
                .flatten()
                .filter(|(_, s)| *s != Sign::Positive)
                .map(|(t, s)| format!("{} is {s}", crate::classify::latex_term(t)))
                .collect();
            checks.push(GoldenCheck::flag(
                "leading-energy-signs",
                bad.is_empty(),
                bad.join("; "),
            ));
        }
    }
    Ok(PresetRun {
        preset,
        input,
        output,
        report,
        identity,
        checks,
    })
}
