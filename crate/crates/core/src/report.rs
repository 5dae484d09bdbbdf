//! Report schemas shared by the command-line interface and the acceptance
//! suite. Reports are plain data; with timing disabled the serialization is
//! byte-identical across runs for a fixed configuration and seed.

use serde::Serialize;

use crate::chow::{ChowResult, ProductBound};
use crate::groups::{GroupValue, Payload};
use crate::mackey::{Certificate, Rule, ScanResult, Term};
use crate::zlinalg::PresentedGroup;

#[derive(Serialize, Debug, Clone)]
pub struct StructureReport {
    pub invariant_factors: Vec<String>,
    pub free_rank: usize,
    pub order: Option<String>,
}

impl StructureReport {
    pub fn from_group(g: &PresentedGroup) -> StructureReport {
        StructureReport {
            invariant_factors: g.invariant_factors.iter().map(|f| f.to_string()).collect(),
            free_rank: g.free_rank,
            order: g.order().map(|o| o.to_string()),
        }
    }
}

#[derive(Serialize, Debug, Clone)]
pub struct MackeyReport {
    pub command: String,
    pub functors: Vec<String>,
    pub base_field: String,
    pub degree_bound: u32,
    pub generator_count: usize,
    pub relation_count: usize,
    pub invariant_factors: Vec<String>,
    pub free_rank: usize,
    pub order: Option<String>,
    pub stabilized: bool,
    pub per_degree: Vec<(u32, StructureReport)>,
    pub seed: u64,
    pub wall_time_ms: u64,
}

#[derive(Serialize, Debug, Clone)]
pub struct CertificateStepReport {
    pub rule: String,
    pub parameters: String,
    pub result: Vec<String>,
}

#[derive(Serialize, Debug, Clone)]
pub struct CertificateReport {
    pub command: String,
    pub strategy: String,
    pub initial: String,
    pub steps: Vec<CertificateStepReport>,
    pub final_form: Vec<String>,
    pub proves_zero: bool,
    pub revalidated: bool,
    pub degree_bound: u32,
    pub seed: u64,
    pub wall_time_ms: u64,
}

#[derive(Serialize, Debug, Clone)]
pub struct ChowReport {
    pub command: String,
    pub base_field: String,
    pub modulus: String,
    pub normalized_modulus: String,
    pub normalization: Option<String>,
    pub n_pts: usize,
    pub n_fun: usize,
    pub generator_count: usize,
    pub relation_count: usize,
    pub full: StructureReport,
    pub degree_zero: StructureReport,
    pub stabilized: bool,
    pub per_bound: Vec<(usize, StructureReport, StructureReport)>,
    pub oracle_order: String,
    pub oracle_agrees: bool,
    pub seed: u64,
    pub wall_time_ms: u64,
}

#[derive(Serialize, Debug, Clone)]
pub struct ProductBoundReport {
    pub command: String,
    pub base_field: String,
    pub modulus_1: String,
    pub modulus_2: String,
    pub jacobian_order_1: String,
    pub jacobian_order_2: String,
    pub mackey_factor: Option<String>,
    pub mackey_stabilized: bool,
    pub bound: Option<String>,
    /// The finiteness certificate: the bound group surjects onto the
    /// degree-zero relative Chow group of the product.
    pub certificate: String,
    /// Non-split moduli on the product reduce to this split shape.
    pub reduction_note: String,
    pub seed: u64,
    pub wall_time_ms: u64,
}

#[derive(Serialize, Debug, Clone)]
pub struct ReciprocityInstance {
    pub test_function: String,
    pub vanishes: bool,
    pub oracle_agrees: bool,
}

#[derive(Serialize, Debug, Clone)]
pub struct ReciprocityReport {
    pub command: String,
    pub base_field: String,
    pub curve: String,
    pub section: String,
    pub conductor: Option<String>,
    pub instances: Vec<ReciprocityInstance>,
    pub all_pass: bool,
    pub oracle_agrees: bool,
    pub sample_note: String,
    pub seed: u64,
    pub wall_time_ms: u64,
}

/// Textual payload encoding used inside reports.
pub fn group_value_text(v: &GroupValue) -> String {
    match v.payload() {
        Payload::Ga(a) => a.to_string(),
        Payload::Gm(a) => a.to_string(),
        Payload::GenJac(r) => format!("[{}]", r),
        Payload::Elliptic(None) => "inf".into(),
        Payload::Elliptic(Some((x, y))) => format!("({},{})", x, y),
        Payload::ConstZ(n) => n.to_string(),
    }
}

pub fn group_value_json(v: &GroupValue) -> serde_json::Value {
    serde_json::json!({
        "functor": v.functor().label(),
        "point": v.point().to_string(),
        "payload": group_value_text(v),
    })
}

/// JSON encoding of a value-group structure: invariant factors, size, and
/// realizing generators.
pub fn group_structure_json(s: &crate::groups::GroupStructure) -> serde_json::Value {
    serde_json::json!({
        "functor": s.functor.label(),
        "point": s.point.to_string(),
        "invariant_factors": s.orders,
        "size": s.size,
        "generators": s.generators.iter().map(group_value_json).collect::<Vec<_>>(),
    })
}

pub fn symbol_text(s: &crate::mackey::Symbol) -> String {
    let entries: Vec<String> = s.entries().iter().map(group_value_text).collect();
    format!(
        "{{{}}}_{}/{}",
        entries.join(", "),
        s.point().ext(),
        s.point().base()
    )
}

fn term_text(t: &Term) -> String {
    if t.coeff == 1 {
        symbol_text(&t.symbol)
    } else {
        format!("{}*{}", t.coeff, symbol_text(&t.symbol))
    }
}

fn rule_parameters(rule: &Rule) -> String {
    match rule {
        Rule::Multilinearity { slot } => format!("slot={}", slot),
        Rule::ProjectionFormula { slot, via } => format!("slot={}, via={}", slot, via),
        Rule::TraceLift { slot, witness } => {
            format!("slot={}, witness={}", slot, group_value_text(witness))
        }
        Rule::Divisibility {
            slot,
            prime,
            witness,
        } => format!(
            "slot={}, prime={}, witness={}",
            slot,
            prime,
            group_value_text(witness)
        ),
        Rule::IdentityKill { slot } => format!("slot={}", slot),
        Rule::IMove => String::new(),
        Rule::PushforwardNormalization { new_base } => format!("new_base={}", new_base),
    }
}

pub fn certificate_report(
    cert: &Certificate,
    strategy: &str,
    revalidated: bool,
    seed: u64,
    wall_time_ms: u64,
) -> CertificateReport {
    CertificateReport {
        command: "prove-zero".into(),
        strategy: strategy.into(),
        initial: symbol_text(&cert.initial),
        steps: cert
            .steps
            .iter()
            .map(|s| CertificateStepReport {
                rule: s.rule.name().into(),
                parameters: rule_parameters(&s.rule),
                result: s.result.iter().map(term_text).collect(),
            })
            .collect(),
        final_form: cert.final_form.iter().map(term_text).collect(),
        proves_zero: cert.claims_zero(),
        revalidated,
        degree_bound: cert.degree_bound,
        seed,
        wall_time_ms,
    }
}

pub fn mackey_report(
    functors: &[crate::groups::Functor],
    base: &crate::ffield::Field,
    scan: &ScanResult,
    generator_count: usize,
    relation_count: usize,
    seed: u64,
    wall_time_ms: u64,
) -> MackeyReport {
    let last = scan.final_structure();
    MackeyReport {
        command: "mackey".into(),
        functors: functors.iter().map(|f| f.label()).collect(),
        base_field: base.to_string(),
        degree_bound: scan.per_degree.last().expect("nonempty scan").0,
        generator_count,
        relation_count,
        invariant_factors: last
            .invariant_factors
            .iter()
            .map(|f| f.to_string())
            .collect(),
        free_rank: last.free_rank,
        order: last.order().map(|o| o.to_string()),
        stabilized: scan.stabilized,
        per_degree: scan
            .per_degree
            .iter()
            .map(|(d, s)| (*d, StructureReport::from_group(s)))
            .collect(),
        seed,
        wall_time_ms,
    }
}

pub fn chow_report(
    modulus_text: String,
    res: &ChowResult,
    seed: u64,
    wall_time_ms: u64,
) -> ChowReport {
    ChowReport {
        command: "chow".into(),
        base_field: res.last.modulus.base().to_string(),
        modulus: modulus_text,
        normalized_modulus: res.last.modulus.to_string(),
        normalization: res
            .last
            .normalization
            .as_ref()
            .map(|c| format!("t -> 1/(t - {})", c)),
        n_pts: res.last.n_pts,
        n_fun: res.last.n_fun,
        generator_count: res.last.generator_count,
        relation_count: res.last.relation_count,
        full: StructureReport::from_group(&res.last.full),
        degree_zero: StructureReport::from_group(&res.last.degree_zero),
        stabilized: res.stabilized,
        per_bound: res
            .per_bound
            .iter()
            .map(|(n, f, k)| {
                (
                    *n,
                    StructureReport::from_group(f),
                    StructureReport::from_group(k),
                )
            })
            .collect(),
        oracle_order: res.oracle_order.to_string(),
        oracle_agrees: res.oracle_agrees,
        seed,
        wall_time_ms,
    }
}

pub fn product_bound_report(
    base: &crate::ffield::Field,
    m1: String,
    m2: String,
    b: &ProductBound,
    seed: u64,
    wall_time_ms: u64,
) -> ProductBoundReport {
    ProductBoundReport {
        command: "product-bound".into(),
        base_field: base.to_string(),
        modulus_1: m1,
        modulus_2: m2,
        jacobian_order_1: b.j1_order.to_string(),
        jacobian_order_2: b.j2_order.to_string(),
        mackey_factor: b.mackey_factor.as_ref().map(|m| m.to_string()),
        mackey_stabilized: b.mackey_stabilized,
        bound: b.bound.as_ref().map(|x| x.to_string()),
        certificate: "J1(F) + J2(F) + (J1 x J2)(F) surjects onto the degree-zero relative \
                      Chow group of the product with split modulus; the product of the three \
                      orders bounds its size"
            .into(),
        reduction_note: "a modulus on the product that is not of split shape is dominated by \
                         a sufficiently large split one, whose relative Chow group surjects \
                         onto the original; the bound therefore applies after that reduction"
            .into(),
        seed,
        wall_time_ms,
    }
}

/// Human-readable rendering of any serializable report.
pub fn render_text<T: Serialize>(report: &T) -> String {
    let v = serde_json::to_value(report).expect("serializable report");
    let mut out = String::new();
    render_value(&v, 0, &mut out);
    out
}

fn render_value(v: &serde_json::Value, indent: usize, out: &mut String) {
    use std::fmt::Write;
    match v {
        serde_json::Value::Object(map) => {
            for (k, val) in map {
                match val {
                    serde_json::Value::Object(_) | serde_json::Value::Array(_) => {
                        let _ = writeln!(out, "{:indent$}{}:", "", k, indent = indent);
                        render_value(val, indent + 2, out);
                    }
                    _ => {
                        let _ = writeln!(
                            out,
                            "{:indent$}{}: {}",
                            "",
                            k,
                            scalar_text(val),
                            indent = indent
                        );
                    }
                }
            }
        }
        serde_json::Value::Array(items) => {
            for item in items {
                match item {
                    serde_json::Value::Object(_) | serde_json::Value::Array(_) => {
                        let _ = writeln!(out, "{:indent$}-", "", indent = indent);
                        render_value(item, indent + 2, out);
                    }
                    _ => {
                        let _ = writeln!(
                            out,
                            "{:indent$}- {}",
                            "",
                            scalar_text(item),
                            indent = indent
                        );
                    }
                }
            }
        }
        _ => {
            use std::fmt::Write;
            let _ = writeln!(out, "{:indent$}{}", "", scalar_text(v), indent = indent);
        }
    }
}

fn scalar_text(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Null => "none".into(),
        other => other.to_string(),
    }
}
