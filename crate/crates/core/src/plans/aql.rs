//! Batch-size × AQL plan tables and the code-letter sample sizes.
//!
//! The tables ship as `data/aql_plans.v1.csv`, one record per cell. Blank
//! cells are kept as records with empty `n`/`c` and look up as not-found.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Embedded table data, byte-for-byte what [`export_csv`] emits for all cases.
pub const PLAN_TABLE_CSV: &str = include_str!("../../data/aql_plans.v1.csv");

const HEADER: &str = "batch_lo,batch_hi,aql,n,c,case";

/// AQL columns present in the tables.
pub const AQL_LEVELS: [f64; 4] = [0.025, 0.04, 0.065, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseId {
    CaseI,
    CaseII,
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseId::CaseI => "CaseI",
            CaseId::CaseII => "CaseII",
        })
    }
}

impl std::str::FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "CaseI" | "I" | "i" | "1" => Ok(CaseId::CaseI),
            "CaseII" | "II" | "ii" | "2" => Ok(CaseId::CaseII),
            other => Err(Error::invalid("case", format!("unknown case `{other}`"))),
        }
    }
}

/// `(sample size, rejection threshold)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanCell {
    pub n: u64,
    pub c: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AqlPlanEntry {
    pub batch_lo: u64,
    /// `None` for the open-ended top row.
    pub batch_hi: Option<u64>,
    pub aql: f64,
    /// `None` for a blank table cell.
    pub cell: Option<PlanCell>,
    pub case_id: CaseId,
}

impl AqlPlanEntry {
    pub fn contains(&self, batch_size: u64) -> bool {
        batch_size >= self.batch_lo && self.batch_hi.is_none_or(|hi| batch_size <= hi)
    }

    fn csv_row(&self) -> String {
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.batch_lo,
            opt(self.batch_hi),
            self.aql,
            opt(self.cell.map(|c| c.n)),
            opt(self.cell.map(|c| c.c)),
            self.case_id
        )
    }
}

fn parse_count(field: &str, line: usize, raw: &str) -> Result<Option<u64>> {
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse()
        .map(Some)
        .map_err(|_| Error::PlanTable(format!("line {line}: bad {field} `{raw}`")))
}

fn parse_table(text: &str) -> Result<Vec<AqlPlanEntry>> {
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err(Error::PlanTable("missing header".into()));
    }
    let mut entries = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        let [lo, hi, aql, n, c, case] = fields[..] else {
            return Err(Error::PlanTable(format!("line {lineno}: expected 6 fields")));
        };
        let batch_lo = parse_count("batch_lo", lineno, lo)?
            .ok_or_else(|| Error::PlanTable(format!("line {lineno}: empty batch_lo")))?;
        let batch_hi = parse_count("batch_hi", lineno, hi)?;
        let aql: f64 = aql
            .parse()
            .map_err(|_| Error::PlanTable(format!("line {lineno}: bad aql `{aql}`")))?;
        let cell = match (parse_count("n", lineno, n)?, parse_count("c", lineno, c)?) {
            (Some(n), Some(c)) => Some(PlanCell { n, c }),
            (None, None) => None,
            _ => return Err(Error::PlanTable(format!("line {lineno}: half-blank cell"))),
        };
        let case_id = case
            .parse()
            .map_err(|_| Error::PlanTable(format!("line {lineno}: bad case `{case}`")))?;
        entries.push(AqlPlanEntry {
            batch_lo,
            batch_hi,
            aql,
            cell,
            case_id,
        });
    }
    Ok(entries)
}

/// Every record of the embedded tables, in file order.
pub fn plan_table() -> &'static [AqlPlanEntry] {
    static TABLE: OnceLock<Vec<AqlPlanEntry>> = OnceLock::new();
    TABLE.get_or_init(|| parse_table(PLAN_TABLE_CSV).expect("embedded plan table is well formed"))
}

/// CSV export with header `batch_lo,batch_hi,aql,n,c,case`; blank cells
/// export as empty fields. `None` exports both cases.
pub fn export_csv(case: Option<CaseId>) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for entry in plan_table()
        .iter()
        .filter(|e| case.is_none_or(|c| e.case_id == c))
    {
        out.push_str(&entry.csv_row());
        out.push('\n');
    }
    out
}

fn canonical_aql(aql: f64) -> Result<f64> {
    AQL_LEVELS
        .iter()
        .copied()
        .find(|level| (level - aql).abs() < 1e-12)
        .ok_or_else(|| {
            Error::invalid(
                "aql",
                format!("must be one of 0.025, 0.04, 0.065, 0.1; got {aql}"),
            )
        })
}

/// Table cell for a batch size; blank cells are [`Error::PlanNotFound`].
pub fn lookup_plan(batch_size: u64, aql: f64, case: CaseId) -> Result<PlanCell> {
    if batch_size < 2 {
        return Err(Error::invalid("batch_size", "must be at least 2"));
    }
    let aql = canonical_aql(aql)?;
    plan_table()
        .iter()
        .find(|e| e.case_id == case && e.aql == aql && e.contains(batch_size))
        .and_then(|e| e.cell)
        .ok_or(Error::PlanNotFound {
            batch_size,
            aql,
            case: case.to_string(),
        })
}

/// Sample-size code letters and their sample sizes (I and O are not used).
pub const CODE_LETTERS: [(char, u64); 16] = [
    ('A', 2),
    ('B', 3),
    ('C', 5),
    ('D', 8),
    ('E', 13),
    ('F', 20),
    ('G', 32),
    ('H', 50),
    ('J', 80),
    ('K', 125),
    ('L', 200),
    ('M', 315),
    ('N', 500),
    ('P', 800),
    ('Q', 1250),
    ('R', 2000),
];

pub fn code_letter_size(letter: char) -> Result<u64> {
    let upper = letter.to_ascii_uppercase();
    CODE_LETTERS
        .iter()
        .find(|(l, _)| *l == upper)
        .map(|&(_, n)| n)
        .ok_or(Error::UnknownCodeLetter(letter))
}
