use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use carleman_ibp::classify::{classify, emit_latex, emit_table, BoundaryFilter};
use carleman_ibp::codec::{
    parse_rows, parse_unary_rows, write_groups, write_term_list, write_unary_groups,
};
use carleman_ibp::conjugation::{conjugate, multiply, split_multiplier, OperatorSpec};
use carleman_ibp::engine::{reduce, reduce_traced};
use carleman_ibp::oracle::{verify_identity, IdentityCheck};
use carleman_ibp::presets::{run_preset, PRESET_NAMES};
use carleman_ibp::{Schema, TermList, UnaryList, WeightModel};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "carleman-ibp",
    version,
    about = "Integration-by-parts engine for weighted energy identities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemaArg {
    Poly,
    Exp,
}

impl From<SchemaArg> for Schema {
    fn from(s: SchemaArg) -> Self {
        match s {
            SchemaArg::Poly => Schema::Poly,
            SchemaArg::Exp => Schema::Exp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BcArg {
    None,
    Clamped,
    Hinged,
    /// Drop every space-boundary row.
    Compact,
}

impl From<BcArg> for BoundaryFilter {
    fn from(b: BcArg) -> Self {
        match b {
            BcArg::None => BoundaryFilter::None,
            BcArg::Clamped => BoundaryFilter::Clamped,
            BcArg::Hinged => BoundaryFilter::Hinged,
            BcArg::Compact => BoundaryFilter::Compact,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OperatorArg {
    Second,
    Fourth,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a row file by parts until every row is terminal.
    Reduce {
        #[arg(long, value_enum)]
        schema: SchemaArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write the unmerged row list after every rewriting loop.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Sort terminal rows into boundary, energy and cross groups.
    Classify {
        #[arg(long, value_enum)]
        schema: SchemaArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "none")]
        bc: BcArg,
        #[arg(long)]
        drop_time_boundary: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        latex: Option<PathBuf>,
    },
    /// Expand a conjugated operator and split it into multiplier groups.
    Conjugate {
        #[arg(long, value_enum)]
        operator: OperatorArg,
        #[arg(long, value_enum)]
        schema: SchemaArg,
        /// Keep γ as a symbol instead of setting it to 1.
        #[arg(long)]
        gamma: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Multiply two unary row files into bilinear rows.
    Multiply {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// Comma-separated group names of the left file to sum (default: all rows).
        #[arg(long, value_delimiter = ',')]
        left_groups: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        right_groups: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Skip products of a term with itself.
        #[arg(long)]
        cross_only: bool,
    },
    /// Check that two row files denote the same expression.
    Verify {
        #[arg(long, value_enum)]
        schema: SchemaArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run a named scenario and compare it with its goldens.
    Preset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
        name: String,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        latex: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn read_terms(path: &Path, schema: Schema) -> Result<TermList> {
    let file =
        parse_rows(&read(path)?, Some(schema)).with_context(|| path.display().to_string())?;
    TermList::from_terms(schema, file.rows()).with_context(|| path.display().to_string())
}

fn read_unary(path: &Path, groups: &[String]) -> Result<UnaryList> {
    let file = parse_unary_rows(&read(path)?, None).with_context(|| path.display().to_string())?;
    let rows = if groups.is_empty() {
        file.rows()
    } else {
        let mut rows = Vec::new();
        for g in groups {
            match file.group(g) {
                Some(r) => rows.extend_from_slice(r),
                None => bail!("{}: no group `{g}`", path.display()),
            }
        }
        rows
    };
    Ok(UnaryList::from_terms(file.header.schema, rows)?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Reduce {
            schema,
            input,
            out,
            trace,
        } => {
            let schema = Schema::from(schema);
            let model = WeightModel::for_schema(schema);
            let file = parse_rows(&read(&input)?, Some(schema))
                .with_context(|| input.display().to_string())?;
            let result = match trace {
                Some(path) => {
                    let (merged, trace) = reduce_traced(&file.rows(), &model)?;
                    let groups: Vec<(String, Vec<_>)> = trace
                        .loops
                        .into_iter()
                        .enumerate()
                        .map(|(i, rows)| (format!("loop-{}", i + 1), rows))
                        .collect();
                    write(&path, &write_groups(schema, &groups))?;
                    merged
                }
                None => reduce(&TermList::from_terms(schema, file.rows())?, &model)?,
            };
            write(&out, &write_term_list(&result))?;
        }
        Command::Classify {
            schema,
            input,
            bc,
            drop_time_boundary,
            out,
            latex,
        } => {
            let list = read_terms(&input, schema.into())?;
            let report = classify(&list, bc.into(), drop_time_boundary)?;
            write(&out, &emit_table(&report))?;
            if let Some(path) = latex {
                write(&path, &emit_latex(&report))?;
            }
        }
        Command::Conjugate {
            operator,
            schema,
            gamma,
            out,
        } => {
            let model = WeightModel::for_schema(schema.into());
            let op = match operator {
                OperatorArg::Second => OperatorSpec::second(),
                OperatorArg::Fourth => OperatorSpec::fourth(gamma),
            };
            let conj = conjugate(op, &model)?;
            let split = split_multiplier(&conj, &model)?;
            let groups: Vec<(String, Vec<_>)> = split
                .groups
                .iter()
                .enumerate()
                .filter(|(_, g)| !g.is_empty())
                .map(|(i, g)| ((i + 1).to_string(), g.iter().collect()))
                .collect();
            let mut text = write_unary_groups(model.schema(), &groups);
            for marker in &conj.omitted {
                text.push_str(&format!("# {marker}\n"));
            }
            write(&out, &text)?;
        }
        Command::Multiply {
            left,
            right,
            left_groups,
            right_groups,
            out,
            cross_only,
        } => {
            let l = read_unary(&left, &left_groups)?;
            let r = read_unary(&right, &right_groups)?;
            write(&out, &write_term_list(&multiply(&l, &r, cross_only)?))?;
        }
        Command::Verify {
            schema,
            input,
            output,
        } => {
            let schema = Schema::from(schema);
            let model = WeightModel::for_schema(schema);
            let a = read_terms(&input, schema)?;
            let b = read_terms(&output, schema)?;
            if let IdentityCheck::Diff(diff) = verify_identity(&a, &b, &model)? {
                println!("identity fails; expand(output) - expand(input):");
                print!("{}", write_term_list(&diff));
                return Ok(ExitCode::FAILURE);
            }
            println!("identity holds");
        }
        Command::Preset {
            name,
            report,
            latex,
        } => {
            let run = run_preset(&name)?;
            for c in &run.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                println!("{status} {name}/{}", c.name);
                if !c.passed {
                    println!("{}", c.detail);
                }
            }
            if let Some(path) = report {
                write(&path, &emit_table(&run.report))?;
            }
            if let Some(path) = latex {
                write(&path, &emit_latex(&run.report))?;
            }
            if !run.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
