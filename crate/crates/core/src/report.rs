//! Machine-readable report documents: JSON (with a `schema: 1` version
//! field) and CSV (fixed column sets, comma-free cells, `\n` line endings).
//! Formatting uses Rust's shortest-round-trip float display, so CSV output
//! parses back losslessly and identical inputs give byte-identical bytes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lhvm::SimulationReport;
use crate::rational::format_rat;
use crate::solver::{CertificateReport, SolveResult, ThresholdReport, Witness};

pub const SCHEMA_VERSION: u32 = 1;

fn finish_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report serializes");
    s.push('\n');
    s
}

fn split_csv_line(line: &str, expected: usize) -> Result<Vec<&str>> {
    let parts: Vec<&str> = line.trim_end().split(',').collect();
    if parts.len() != expected {
        return Err(Error::Parse(format!(
            "expected {expected} CSV fields, found {} in {line:?}",
            parts.len()
        )));
    }
    Ok(parts)
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad {name} field: {s:?}")))
}

// ---------------------------------------------------------------------------
// bound
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsDoc {
    pub schema: u32,
    pub c: String,
    pub independent: f64,
    pub correlated: f64,
    /// The correlated formula is backed only at c = c_Q; anywhere else it is
    /// a formula extrapolation.
    pub correlated_extrapolated: bool,
}

impl BoundsDoc {
    pub fn to_json(&self) -> String {
        finish_json(self)
    }

    pub fn to_csv(&self) -> String {
        format!(
            "c,independent,correlated,correlated_extrapolated\n{},{},{},{}\n",
            self.c, self.independent, self.correlated, self.correlated_extrapolated
        )
    }
}

// ---------------------------------------------------------------------------
// f-eval
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FEvalDoc {
    pub schema: u32,
    pub t: String,
    pub f_value: f64,
    pub f_argmax: f64,
    pub g_value: f64,
}

impl FEvalDoc {
    pub fn to_json(&self) -> String {
        finish_json(self)
    }

    pub fn to_csv(&self) -> String {
        format!(
            "t,f_value,f_argmax,g_value\n{},{},{},{}\n",
            self.t, self.f_value, self.f_argmax, self.g_value
        )
    }
}

// ---------------------------------------------------------------------------
// table1
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableOneRow {
    pub regime: String,
    pub correlated: f64,
    pub independent: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableOneDoc {
    pub schema: u32,
    pub rows: Vec<TableOneRow>,
}

impl TableOneDoc {
    pub fn to_json(&self) -> String {
        finish_json(self)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("regime,correlated,independent\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.regime, r.correlated, r.independent));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// solve results (solve-uniform / solve-dist)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set_x: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set_y: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_x: Option<Vec<(String, String)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_y: Option<Vec<(String, String)>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveDoc {
    pub schema: u32,
    pub n: usize,
    pub c: String,
    pub value: f64,
    pub bracket_low: f64,
    pub bracket_high: f64,
    pub constraint: String,
    pub witness_size_x: usize,
    pub witness_size_y: usize,
    pub exhaustive: bool,
    pub witness: WitnessDoc,
}

pub const SOLVE_CSV_HEADER: &str =
    "n,c,value,bracket_low,bracket_high,constraint,witness_size_x,witness_size_y,exhaustive";

impl SolveDoc {
    pub fn from_result(r: &SolveResult) -> Self {
        let witness = match &r.witness {
            Witness::Sets { x, y } => WitnessDoc {
                kind: "sets".into(),
                set_x: Some(x.members().iter().map(|m| m.to_string()).collect()),
                set_y: Some(y.members().iter().map(|m| m.to_string()).collect()),
                p_x: None,
                p_y: None,
            },
            Witness::Distribution(d) => WitnessDoc {
                kind: "distribution".into(),
                set_x: None,
                set_y: None,
                p_x: Some(
                    d.p_x()
                        .iter()
                        .map(|(k, v)| (k.to_string(), format_rat(v)))
                        .collect(),
                ),
                p_y: Some(
                    d.p_y()
                        .iter()
                        .map(|(k, v)| (k.to_string(), format_rat(v)))
                        .collect(),
                ),
            },
        };
        SolveDoc {
            schema: SCHEMA_VERSION,
            n: r.n,
            c: format_rat(&r.c),
            value: r.value,
            bracket_low: r.bracket_low,
            bracket_high: r.bracket_high,
            constraint: format_rat(&r.constraint_value),
            witness_size_x: r.witness.size_x(),
            witness_size_y: r.witness.size_y(),
            exhaustive: r.exhaustive,
            witness,
        }
    }

    pub fn to_json(&self) -> String {
        finish_json(self)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            self.c,
            self.value,
            self.bracket_low,
            self.bracket_high,
            self.constraint,
            self.witness_size_x,
            self.witness_size_y,
            self.exhaustive
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{SOLVE_CSV_HEADER}\n{}\n", self.csv_row())
    }
}

/// The CSV-visible fields of a solve report; `parse_solve_csv` inverts
/// `SolveDoc::to_csv` over these.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveCsvRow {
    pub n: usize,
    pub c: String,
    pub value: f64,
    pub bracket_low: f64,
    pub bracket_high: f64,
    pub constraint: String,
    pub witness_size_x: usize,
    pub witness_size_y: usize,
    pub exhaustive: bool,
}

pub fn parse_solve_csv(text: &str) -> Result<SolveCsvRow> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?;
    if header.trim_end() != SOLVE_CSV_HEADER {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    let row = lines
        .next()
        .ok_or_else(|| Error::Parse("missing CSV row".into()))?;
    let f = split_csv_line(row, 9)?;
    Ok(SolveCsvRow {
        n: parse_field(f[0], "n")?,
        c: f[1].to_string(),
        value: parse_field(f[2], "value")?,
        bracket_low: parse_field(f[3], "bracket_low")?,
        bracket_high: parse_field(f[4], "bracket_high")?,
        constraint: f[5].to_string(),
        witness_size_x: parse_field(f[6], "witness_size_x")?,
        witness_size_y: parse_field(f[7], "witness_size_y")?,
        exhaustive: parse_field(f[8], "exhaustive")?,
    })
}

impl SolveCsvRow {
    pub fn of(doc: &SolveDoc) -> Self {
        SolveCsvRow {
            n: doc.n,
            c: doc.c.clone(),
            value: doc.value,
            bracket_low: doc.bracket_low,
            bracket_high: doc.bracket_high,
            constraint: doc.constraint.clone(),
            witness_size_x: doc.witness_size_x,
            witness_size_y: doc.witness_size_y,
            exhaustive: doc.exhaustive,
        }
    }
}

// ---------------------------------------------------------------------------
// threshold construction / convergence table
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdRowDoc {
    pub n: u64,
    pub l: u64,
    pub size_log2: f64,
    pub constraint: String,
    pub objective: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdDoc {
    pub schema: u32,
    pub c: String,
    pub rows: Vec<ThresholdRowDoc>,
}

pub const THRESHOLD_CSV_HEADER: &str = "n,l,size_log2,constraint,objective,excess";

impl ThresholdDoc {
    pub fn from_reports(c: &crate::rational::Rat, reports: &[ThresholdReport]) -> Self {
        ThresholdDoc {
            schema: SCHEMA_VERSION,
            c: format_rat(c),
            rows: reports
                .iter()
                .map(|t| ThresholdRowDoc {
                    n: t.n,
                    l: t.l,
                    size_log2: t.size_log2,
                    constraint: format_rat(&t.constraint),
                    objective: t.objective,
                    excess: t.excess,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        finish_json(self)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(THRESHOLD_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.n, r.l, r.size_log2, r.constraint, r.objective, r.excess
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// converse certificate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub schema: u32,
    pub n: usize,
    pub m: usize,
    pub c: String,
    pub size_x: usize,
    pub size_y: usize,
    pub a_bar: Vec<String>,
    pub b_bar: Vec<String>,
    pub gap: String,
    pub entropy_sum: f64,
    pub exact_exponent: f64,
    pub f_at_relaxed: f64,
    pub relaxed_applicable: bool,
    pub certified_size_bound_log2: f64,
    pub size_product_log2: f64,
}

pub const CERTIFICATE_CSV_HEADER: &str = "n,m,c,size_x,size_y,gap,entropy_sum,exact_exponent,f_at_relaxed,relaxed_applicable,certified_size_bound_log2,size_product_log2";

impl CertificateDoc {
    pub fn from_report(r: &CertificateReport) -> Self {
        CertificateDoc {
            schema: SCHEMA_VERSION,
            n: r.n,
            m: r.m,
            c: format_rat(&r.c),
            size_x: r.size_x,
            size_y: r.size_y,
            a_bar: r.a_bar.values().iter().map(format_rat).collect(),
            b_bar: r.b_bar.values().iter().map(format_rat).collect(),
            gap: format_rat(&r.gap),
            entropy_sum: r.entropy_sum,
            exact_exponent: r.exact_exponent,
            f_at_relaxed: r.f_at_relaxed,
            relaxed_applicable: r.relaxed_applicable,
            certified_size_bound_log2: r.certified_size_bound_log2,
            size_product_log2: r.size_product_log2,
        }
    }

    pub fn to_json(&self) -> String {
        finish_json(self)
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{CERTIFICATE_CSV_HEADER}\n{},{},{},{},{},{},{},{},{},{},{},{}\n",
            self.n,
            self.m,
            self.c,
            self.size_x,
            self.size_y,
            self.gap,
            self.entropy_sum,
            self.exact_exponent,
            self.f_at_relaxed,
            self.relaxed_applicable,
            self.certified_size_bound_log2,
            self.size_product_log2
        )
    }
}

// ---------------------------------------------------------------------------
// simulation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationDoc {
    pub schema: u32,
    pub runs: u64,
    pub empirical_s: f64,
    pub standard_error: f64,
    pub empirical_p: f64,
    pub seed: u64,
}

pub const SIMULATION_CSV_HEADER: &str = "runs,empirical_s,standard_error,empirical_p,seed";

impl SimulationDoc {
    pub fn from_report(r: &SimulationReport) -> Self {
        SimulationDoc {
            schema: SCHEMA_VERSION,
            runs: r.runs,
            empirical_s: r.empirical_s,
            standard_error: r.standard_error,
            empirical_p: r.empirical_p,
            seed: r.seed,
        }
    }

    pub fn to_json(&self) -> String {
        finish_json(self)
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{SIMULATION_CSV_HEADER}\n{},{},{},{},{}\n",
            self.runs, self.empirical_s, self.standard_error, self.empirical_p, self.seed
        )
    }
}

pub fn parse_simulation_csv(text: &str) -> Result<SimulationDoc> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?;
    if header.trim_end() != SIMULATION_CSV_HEADER {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    let row = lines
        .next()
        .ok_or_else(|| Error::Parse("missing CSV row".into()))?;
    let f = split_csv_line(row, 5)?;
    Ok(SimulationDoc {
        schema: SCHEMA_VERSION,
        runs: parse_field(f[0], "runs")?,
        empirical_s: parse_field(f[1], "empirical_s")?,
        standard_error: parse_field(f[2], "standard_error")?,
        empirical_p: parse_field(f[3], "empirical_p")?,
        seed: parse_field(f[4], "seed")?,
    })
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyRowDoc {
    pub suite: String,
    pub property: String,
    pub statement: String,
    pub samples: usize,
    pub worst_margin: f64,
    pub informational: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyDoc {
    pub schema: u32,
    pub seed: u64,
    pub samples: usize,
    pub all_pass: bool,
    pub rows: Vec<VerifyRowDoc>,
}

pub const VERIFY_CSV_HEADER: &str = "suite,property,statement,samples,worst_margin,informational,pass";

impl VerifyDoc {
    pub fn to_json(&self) -> String {
        finish_json(self)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(VERIFY_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            debug_assert!(!r.property.contains(',') && !r.statement.contains(','));
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.suite, r.property, r.statement, r.samples, r.worst_margin, r.informational, r.pass
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_csv_round_trip() {
        let doc = SolveDoc {
            schema: SCHEMA_VERSION,
            n: 2,
            c: "1/7".into(),
            value: 1.0 / 3.0,
            bracket_low: 1.0 / 9.0,
            bracket_high: 1.0 / 3.0,
            constraint: "1/9".into(),
            witness_size_x: 3,
            witness_size_y: 3,
            exhaustive: true,
            witness: WitnessDoc {
                kind: "sets".into(),
                set_x: Some(vec!["00".into()]),
                set_y: Some(vec!["00".into()]),
                p_x: None,
                p_y: None,
            },
        };
        let parsed = parse_solve_csv(&doc.to_csv()).unwrap();
        assert_eq!(parsed, SolveCsvRow::of(&doc));
        assert!(parse_solve_csv("nope\n1,2\n").is_err());
    }

    #[test]
    fn simulation_csv_round_trip() {
        let doc = SimulationDoc {
            schema: SCHEMA_VERSION,
            runs: 1000,
            empirical_s: 2.8300000000000005,
            standard_error: 0.0012345678901234567,
            empirical_p: 0.3535,
            seed: 42,
        };
        let parsed = parse_simulation_csv(&doc.to_csv()).unwrap();
        assert_eq!(parsed.empirical_s, doc.empirical_s);
        assert_eq!(parsed.standard_error, doc.standard_error);
        assert_eq!(parsed.runs, doc.runs);
        assert_eq!(parsed.seed, doc.seed);
    }

    #[test]
    fn json_has_schema_field() {
        let doc = BoundsDoc {
            schema: SCHEMA_VERSION,
            c: "1/4".into(),
            independent: 0.25,
            correlated: 0.24,
            correlated_extrapolated: true,
        };
        let text = doc.to_json();
        assert!(text.contains("\"schema\": 1"));
        assert!(text.ends_with('\n'));
    }
}
