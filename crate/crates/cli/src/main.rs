//! Command-line entry point: drives the product engine, the certified
//! symbol reduction, the relative Chow computations, the product bound,
//! and the reciprocity checker, and emits JSON or text reports.
//!
//! Exit codes: 0 when the computation succeeded and any verification
//! (stabilization, oracle agreement, zero-certificate) holds; 2 when the
//! computation ran but did not stabilize or verify; 1 on errors.

use std::io::Write;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};

use clap::{Args, Parser, Subcommand};
use mackey_core::chow::{Modulus, ProductBound};
use mackey_core::ffield::Field;
use mackey_core::groups::{Functor, GroupValue};
use mackey_core::mackey::{
    reduce_symbol, stabilization_scan, validate_certificate, FinitePoint, Presentation,
    Strategy, Symbol,
};
use mackey_core::poly::parse_poly;
use mackey_core::reciprocity::{
    find_conductor, oracle_check, reciprocity_sum, test_functions, OpenCurve, Section,
};
use mackey_core::report::{self, ReciprocityInstance, ReciprocityReport};

#[derive(Parser)]
#[command(
    name = "mackey",
    about = "Exact Mackey products of algebraic groups over finite fields, \
             relative Chow groups of open subsets of the projective line, \
             and certified symbol reduction",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Base field, as p^d (for example 3^1 or 2^2).
    #[arg(long)]
    field: String,
    /// Output format.
    #[arg(long, default_value = "json", value_parser = ["json", "text"])]
    format: String,
    /// Write the report to a file instead of standard output.
    #[arg(long)]
    output: Option<std::path::PathBuf>,
    /// Seed for sampled instance families; recorded in every report.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include wall-clock timing in the report (breaks byte-identical
    /// reproducibility of reports).
    #[arg(long, default_value_t = false)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the product of functors at the base point, scanning the
    /// extension-degree bound and reporting stabilization.
    Mackey {
        #[command(flatten)]
        common: Common,
        /// Comma-separated functor labels: GA, GM, GENJAC:<poly>, ELL:a,b, Z.
        #[arg(long)]
        functors: String,
        /// Largest extension degree of the truncation.
        #[arg(long)]
        dmax: u32,
        /// Smallest extension degree of the scan.
        #[arg(long, default_value_t = 1)]
        dmin: u32,
    },
    /// Reduce a symbol by a named strategy and emit the re-validated
    /// certificate.
    ProveZero {
        #[command(flatten)]
        common: Common,
        /// Comma-separated functor labels for the symbol slots.
        #[arg(long)]
        functors: String,
        /// The point p^d the entries live at (an extension of the field).
        #[arg(long)]
        point: String,
        /// Semicolon-separated entry payloads, one per slot.
        #[arg(long)]
        entries: String,
        /// Reduction strategy.
        #[arg(long, value_parser = ["GA_CHAIN", "DIVISIBILITY"])]
        strategy: String,
    },
    /// Relative Chow group of the complement of the modulus support,
    /// ramped to stabilization and compared with the Jacobian oracle.
    Chow {
        #[command(flatten)]
        common: Common,
        /// Modulus literal, e.g. "2*inf", "(0)+(inf)", "(t^2+1)".
        #[arg(long)]
        modulus: String,
    },
    /// Finiteness bound for a product of two open curves with split
    /// modulus.
    ProductBound {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m1: String,
        #[arg(long)]
        m2: String,
        /// Truncation bound for the product factor.
        #[arg(long, default_value_t = 3)]
        dmax: u32,
    },
    /// Verify the reciprocity law for a section on an open curve and find
    /// its conductor.
    Reciprocity {
        #[command(flatten)]
        common: Common,
        /// Section literal: GA:<f> or GM:<f>.
        #[arg(long)]
        section: String,
        /// Curve literal: P1-{0,inf}.
        #[arg(long)]
        curve: String,
        /// Multiplicity bound of the conductor search.
        #[arg(long, default_value_t = 3)]
        bound: u32,
        /// Number of test functions per verification.
        #[arg(long, default_value_t = 100)]
        instances: usize,
    },
}

fn parse_field(s: &str) -> anyhow::Result<Field> {
    let (p, d) = s
        .split_once('^')
        .ok_or_else(|| anyhow!("field must be written p^d, got {:?}", s))?;
    let p: u64 = p.trim().parse().context("bad characteristic")?;
    let d: u32 = d.trim().parse().context("bad degree")?;
    Ok(Field::new(p, d)?)
}

fn parse_functors(base: &Field, s: &str) -> anyhow::Result<Vec<Functor>> {
    s.split(',')
        .map(|part| Ok(Functor::parse(part.trim(), base)?))
        .collect()
}

fn parse_entry(functor: &Functor, point: &Field, s: &str) -> anyhow::Result<GroupValue> {
    let s = s.trim();
    let v = match functor {
        Functor::Ga | Functor::Gm => {
            let elem = if s.contains(':') {
                let e: mackey_core::ffield::FieldElem = s.parse()?;
                e.embed(point)?
            } else {
                let c: i64 = s.parse().context("entry must be an integer or p^d:[..]")?;
                point.from_i64(c)
            };
            match functor {
                Functor::Ga => GroupValue::ga(point, elem)?,
                _ => GroupValue::gm(point, elem)?,
            }
        }
        Functor::GenJac(m) => {
            let rep = parse_poly(point, s)?;
            GroupValue::genjac(m, point, rep)?
        }
        Functor::Elliptic(a, b) => {
            if s == "inf" {
                GroupValue::elliptic(a, b, point, None)?
            } else {
                let inner = s
                    .strip_prefix('(')
                    .and_then(|x| x.strip_suffix(')'))
                    .unwrap_or(s);
                let (x, y) = inner
                    .split_once(',')
                    .ok_or_else(|| anyhow!("elliptic entry must be (x,y) or inf"))?;
                let xv = parse_poly(point, x.trim())?.coeff(0);
                let yv = parse_poly(point, y.trim())?.coeff(0);
                GroupValue::elliptic(a, b, point, Some((xv, yv)))?
            }
        }
        Functor::ConstZ => {
            let n: i64 = s.parse().context("constant-functor entry must be an integer")?;
            GroupValue::const_z(point, n)
        }
    };
    Ok(v)
}

fn emit(common: &Common, json: serde_json::Value) -> anyhow::Result<()> {
    let body = if common.format == "text" {
        report::render_text(&json)
    } else {
        let mut s = serde_json::to_string_pretty(&json)?;
        s.push('\n');
        s
    };
    match &common.output {
        Some(path) => std::fs::write(path, body)
            .with_context(|| format!("writing report to {}", path.display()))?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn elapsed_ms(start: Instant, timing: bool) -> u64 {
    if timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

fn run() -> anyhow::Result<i32> {
    let cli = Cli::parse();
    match cli.command {
        Command::Mackey {
            common,
            functors,
            dmax,
            dmin,
        } => {
            let start = Instant::now();
            let base = parse_field(&common.field)?;
            let functors = parse_functors(&base, &functors)?;
            let scan = stabilization_scan(&functors, &base, dmin, dmax)?;
            let last = Presentation::build_cached(&functors, &base, dmax)?;
            let rep = report::mackey_report(
                &functors,
                &base,
                &scan,
                last.generator_count(),
                last.relation_count(),
                common.seed,
                elapsed_ms(start, common.timing),
            );
            emit(&common, serde_json::to_value(&rep)?)?;
            Ok(if scan.stabilized { 0 } else { 2 })
        }
        Command::ProveZero {
            common,
            functors,
            point,
            entries,
            strategy,
        } => {
            let start = Instant::now();
            let base = parse_field(&common.field)?;
            let functors = parse_functors(&base, &functors)?;
            let point = parse_field(&point)?;
            let entry_parts: Vec<&str> = entries.split(';').collect();
            if entry_parts.len() != functors.len() {
                bail!(
                    "{} entries provided for {} slots",
                    entry_parts.len(),
                    functors.len()
                );
            }
            let values = functors
                .iter()
                .zip(&entry_parts)
                .map(|(f, s)| parse_entry(f, &point, s))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let symbol = Symbol::new(
                functors.clone(),
                FinitePoint::new(base.clone(), point)?,
                values,
            )?;
            let strat = Strategy::parse(&strategy)?;
            let cert = reduce_symbol(&symbol, strat)?;
            let revalidated = validate_certificate(&cert).is_ok();
            let rep = report::certificate_report(
                &cert,
                strat.label(),
                revalidated,
                common.seed,
                elapsed_ms(start, common.timing),
            );
            emit(&common, serde_json::to_value(&rep)?)?;
            Ok(if cert.claims_zero() && revalidated { 0 } else { 2 })
        }
        Command::Chow { common, modulus } => {
            let start = Instant::now();
            let base = parse_field(&common.field)?;
            let m = Modulus::parse(&base, &modulus)?;
            let res = mackey_core::chow::relative_chow_stabilized(&m)?;
            let rep = report::chow_report(
                modulus.clone(),
                &res,
                common.seed,
                elapsed_ms(start, common.timing),
            );
            emit(&common, serde_json::to_value(&rep)?)?;
            Ok(if res.stabilized && res.oracle_agrees { 0 } else { 2 })
        }
        Command::ProductBound {
            common,
            m1,
            m2,
            dmax,
        } => {
            let start = Instant::now();
            let base = parse_field(&common.field)?;
            let mod1 = Modulus::parse(&base, &m1)?;
            let mod2 = Modulus::parse(&base, &m2)?;
            let b: ProductBound = mackey_core::chow::product_bound(&mod1, &mod2, dmax)?;
            let ok = b.mackey_stabilized && b.bound.is_some();
            let rep = report::product_bound_report(
                &base,
                m1,
                m2,
                &b,
                common.seed,
                elapsed_ms(start, common.timing),
            );
            emit(&common, serde_json::to_value(&rep)?)?;
            Ok(if ok { 0 } else { 2 })
        }
        Command::Reciprocity {
            common,
            section,
            curve,
            bound,
            instances,
        } => {
            let start = Instant::now();
            let base = parse_field(&common.field)?;
            let curve_v = OpenCurve::parse(&base, &curve)?;
            let section_v = Section::parse(&base, &section)?;
            let conductor = find_conductor(&section_v, &curve_v, bound, instances, common.seed)?;
            let family = test_functions(&curve_v, &conductor, instances, common.seed)?;
            let mut inst = Vec::with_capacity(family.len());
            let mut all_pass = true;
            let mut oracle_all = true;
            for f in &family {
                let vanishes = reciprocity_sum(&section_v, f, &curve_v)?.is_identity();
                let oracle = oracle_check(&section_v, f, &curve_v)?;
                all_pass &= vanishes;
                oracle_all &= oracle;
                inst.push(ReciprocityInstance {
                    test_function: f.to_string(),
                    vanishes,
                    oracle_agrees: oracle,
                });
            }
            let rep = ReciprocityReport {
                command: "reciprocity".into(),
                base_field: base.to_string(),
                curve,
                section,
                conductor: Some(conductor.to_string()),
                instances: inst,
                all_pass,
                oracle_agrees: oracle_all,
                sample_note: "finite sample over the enumerated congruence family; the law \
                              quantifies over all sections and curves"
                    .into(),
                seed: common.seed,
                wall_time_ms: elapsed_ms(start, common.timing),
            };
            emit(&common, serde_json::to_value(&rep)?)?;
            Ok(if all_pass && oracle_all { 0 } else { 2 })
        }
    }
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {:#}", e);
            std::process::exit(1);
        }
    }
}
