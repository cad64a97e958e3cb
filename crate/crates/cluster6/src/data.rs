//! Dataset ingestion and machine-readable output.
//!
//! Two text formats come in: measurement tables (stabilizer key, expectation
//! value, one-sigma uncertainty, Bell-expression membership flags) and raw
//! count tables (measurement setting, outcome string, count). One goes out:
//! the JSON analysis report, written with sorted keys and fixed 6-significant
//! -digit decimals so identical inputs give byte-identical files.
//!
//! The reference dataset of the experiment is bundled as `table1` and keeps
//! the printed digits of the source table verbatim.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::bell::{AnalysisReport, ExprName};
use crate::error::{Error, Result};
use crate::graph::Subset;
use crate::pauli::{Pauli, PauliString};
use crate::sim::SampleCounts;

const TABLE1_CSV: &str = include_str!("../data/table1.csv");
const TABLE_HEADER: &str = "stabilizer,value,sigma,flags_B,flags_beta,flags_betaprime";

/// A value with a one-sigma uncertainty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub sigma: f64,
}

/// A table of measured stabilizer expectation values keyed by generator
/// subset, with optional Bell-expression membership flags, per-row
/// annotations, and published reference values for derived quantities.
#[derive(Clone, Debug, Default)]
pub struct MeasurementTable {
    records: BTreeMap<Subset, Measured>,
    flags: BTreeMap<Subset, BTreeSet<ExprName>>,
    annotations: BTreeMap<Subset, Vec<String>>,
    references: BTreeMap<String, Measured>,
    dataset_id: Option<String>,
}

impl MeasurementTable {
    /// The bundled reference dataset.
    pub fn bundled_table1() -> Result<Self> {
        let mut table = Self::parse_str(TABLE1_CSV, "table1")?;
        table.dataset_id = Some("table1".into());
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let name = path.display().to_string();
        let mut table = Self::parse_str(&text, &name)?;
        table.dataset_id = Some(name);
        Ok(table)
    }

    /// Parse the CSV format. `origin` only labels error messages.
    pub fn parse_str(text: &str, origin: &str) -> Result<Self> {
        let mut table = MeasurementTable::default();
        let mut header: Option<Vec<String>> = None;
        let mut line_of: BTreeMap<Subset, usize> = BTreeMap::new();
        let fail = |line: usize, msg: String| Error::TableParse {
            path: origin.to_string(),
            line,
            msg,
        };

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                table.ingest_comment(comment.trim(), lineno, origin)?;
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            let Some(columns) = &header else {
                header = Some(cells.iter().map(|c| c.to_string()).collect());
                let cols = header.as_ref().unwrap();
                for required in ["stabilizer", "value", "sigma"] {
                    if !cols.iter().any(|c| c == required) {
                        return Err(fail(lineno, format!("header is missing the {required:?} column")));
                    }
                }
                continue;
            };

            let cell = |name: &str| -> Option<&str> {
                columns
                    .iter()
                    .position(|c| c == name)
                    .and_then(|i| cells.get(i))
                    .copied()
            };
            let key = cell("stabilizer")
                .ok_or_else(|| fail(lineno, "missing stabilizer cell".into()))?;
            let subset = Subset::parse(key)
                .map_err(|e| fail(lineno, format!("invalid subset key: {e}")))?;
            if let Some(first) = line_of.get(&subset) {
                return Err(Error::DuplicateSubset {
                    key: subset.key(),
                    line: *first,
                });
            }
            line_of.insert(subset, lineno);

            let value: f64 = cell("value")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| fail(lineno, "bad expectation value".into()))?;
            let sigma: f64 = cell("sigma")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| fail(lineno, "bad sigma".into()))?;
            if sigma < 0.0 || !sigma.is_finite() || !value.is_finite() {
                return Err(fail(lineno, format!("value {value} +- {sigma} is not usable")));
            }
            if subset.is_empty() && (value != 1.0 || sigma != 0.0) {
                return Err(fail(
                    lineno,
                    format!("identity record must be 1 +- 0, got {value} +- {sigma}"),
                ));
            }
            // soft physical bound: flag, do not reject
            if value.abs() > 1.0 + 3.0 * sigma {
                table
                    .annotations
                    .entry(subset)
                    .or_default()
                    .push(format!("value {value} outside [-1, 1] by more than 3 sigma"));
            }

            for name in ExprName::all() {
                let column = format!("flags_{name}");
                match cell(&column) {
                    None | Some("") => {}
                    Some(flag) if flag == name.as_str() => {
                        table.flags.entry(subset).or_default().insert(name);
                    }
                    Some(other) => {
                        return Err(fail(
                            lineno,
                            format!("unexpected flag {other:?} in column {column}"),
                        ));
                    }
                }
            }
            table.records.insert(subset, Measured { value, sigma });
        }
        if table.records.is_empty() {
            return Err(Error::Parse(format!("{origin}: no data rows")));
        }
        Ok(table)
    }

    fn ingest_comment(&mut self, comment: &str, lineno: usize, origin: &str) -> Result<()> {
        if let Some(reference) = comment.strip_prefix("reference:") {
            let parts: Vec<&str> = reference.splitn(2, '=').collect();
            let (name, rest) = match parts.as_slice() {
                [name, rest] => (name.trim(), rest.trim()),
                _ => {
                    return Err(Error::TableParse {
                        path: origin.into(),
                        line: lineno,
                        msg: format!("malformed reference comment {comment:?}"),
                    })
                }
            };
            let (value, sigma) = rest.split_once("+-").ok_or_else(|| Error::TableParse {
                path: origin.into(),
                line: lineno,
                msg: format!("malformed reference comment {comment:?}"),
            })?;
            let parse = |t: &str| -> Result<f64> {
                t.trim().parse().map_err(|_| Error::TableParse {
                    path: origin.into(),
                    line: lineno,
                    msg: format!("bad number in reference comment {comment:?}"),
                })
            };
            self.references.insert(
                name.to_string(),
                Measured {
                    value: parse(value)?,
                    sigma: parse(sigma)?,
                },
            );
        } else if let Some(note) = comment.strip_prefix("note(") {
            if let Some((key, text)) = note.split_once("):") {
                if let Ok(subset) = Subset::parse(key) {
                    self.annotations
                        .entry(subset)
                        .or_default()
                        .push(text.trim().to_string());
                }
            }
        }
        Ok(())
    }

    /// Serialize back to CSV. Floats use the shortest round-trip form, so a
    /// write/load cycle reproduces every value and sigma exactly.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for (name, m) in &self.references {
            writeln!(out, "# reference: {name} = {} +- {}", m.value, m.sigma).unwrap();
        }
        for (subset, notes) in &self.annotations {
            for note in notes {
                writeln!(out, "# note({}): {note}", subset.key()).unwrap();
            }
        }
        out.push_str(TABLE_HEADER);
        out.push('\n');
        for (subset, m) in &self.records {
            let flag = |name: ExprName| {
                if self.flags.get(subset).is_some_and(|f| f.contains(&name)) {
                    name.as_str()
                } else {
                    ""
                }
            };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                subset.key(),
                m.value,
                m.sigma,
                flag(ExprName::B),
                flag(ExprName::Beta),
                flag(ExprName::BetaPrime),
            )
            .unwrap();
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn get(&self, subset: &Subset) -> Option<Measured> {
        self.records.get(subset).copied()
    }

    pub fn insert(&mut self, subset: Subset, m: Measured) {
        self.records.insert(subset, m);
    }

    pub fn remove(&mut self, subset: &Subset) -> Option<Measured> {
        self.records.remove(subset)
    }

    pub fn set_flag(&mut self, subset: Subset, name: ExprName) {
        self.flags.entry(subset).or_default().insert(name);
    }

    pub fn records(&self) -> impl Iterator<Item = (&Subset, &Measured)> {
        self.records.iter()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Subsets flagged as members of the given Bell expression.
    pub fn flagged(&self, name: ExprName) -> BTreeSet<Subset> {
        self.flags
            .iter()
            .filter(|(_, flags)| flags.contains(&name))
            .map(|(subset, _)| *subset)
            .collect()
    }

    pub fn annotations(&self, subset: &Subset) -> &[String] {
        self.annotations.get(subset).map_or(&[], Vec::as_slice)
    }

    pub fn references(&self) -> &BTreeMap<String, Measured> {
        &self.references
    }

    pub fn dataset_id(&self) -> Option<&str> {
        self.dataset_id.as_deref()
    }

    pub fn set_dataset_id(&mut self, id: impl Into<String>) {
        self.dataset_id = Some(id.into());
    }
}

/// One row of a raw count table: a joint measurement setting, an outcome
/// string, and how many times it was seen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountRow {
    /// One basis letter (X, Y, or Z) per qubit, in index order.
    pub setting: Vec<Pauli>,
    /// One +-1 outcome per qubit.
    pub outcomes: Vec<i8>,
    pub count: u64,
}

/// Raw coincidence counts grouped by measurement setting.
#[derive(Clone, Debug, Default)]
pub struct CountTable {
    n: usize,
    rows: Vec<CountRow>,
}

impl CountTable {
    pub fn new(n: usize) -> Self {
        CountTable { n, rows: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[CountRow] {
        &self.rows
    }

    pub fn push(&mut self, row: CountRow) -> Result<()> {
        if row.setting.len() != self.n || row.outcomes.len() != self.n {
            return Err(Error::Setting(format!(
                "row width {} does not match table width {}",
                row.setting.len().max(row.outcomes.len()),
                self.n
            )));
        }
        if row.setting.contains(&Pauli::I) {
            return Err(Error::Setting("setting letters must be X, Y, or Z".into()));
        }
        if row.outcomes.iter().any(|&o| o != 1 && o != -1) {
            return Err(Error::Setting("outcomes must be +-1".into()));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Append every outcome of a sampling run as one row per outcome string.
    pub fn extend_from_samples(&mut self, samples: &SampleCounts) -> Result<()> {
        let contiguous = samples.labels().iter().enumerate().all(|(i, &l)| l == i + 1);
        if !contiguous || samples.labels().len() != self.n {
            return Err(Error::Setting(
                "count tables need contiguous qubit labels 1..=n".into(),
            ));
        }
        for (&outcome_idx, &count) in samples.counts() {
            self.push(CountRow {
                setting: samples.setting().to_vec(),
                outcomes: samples.outcomes(outcome_idx),
                count,
            })?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_str(&text, &path.display().to_string())
    }

    /// Parse the "setting,outcome,count" CSV. Spaces inside the setting are
    /// ignored, so "XZY ZXX" and "XZYZXX" read the same.
    pub fn parse_str(text: &str, origin: &str) -> Result<Self> {
        let fail = |line: usize, msg: String| Error::TableParse {
            path: origin.to_string(),
            line,
            msg,
        };
        let mut table: Option<CountTable> = None;
        let mut saw_header = false;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !saw_header {
                if line != "setting,outcome,count" {
                    return Err(fail(lineno, format!("expected header \"setting,outcome,count\", got {line:?}")));
                }
                saw_header = true;
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != 3 {
                return Err(fail(lineno, format!("expected 3 cells, got {}", cells.len())));
            }
            let mut setting = Vec::new();
            for c in cells[0].chars().filter(|c| !c.is_whitespace()) {
                setting.push(match c {
                    'X' => Pauli::X,
                    'Y' => Pauli::Y,
                    'Z' => Pauli::Z,
                    _ => return Err(fail(lineno, format!("bad setting letter {c:?}"))),
                });
            }
            let mut outcomes = Vec::new();
            for c in cells[1].chars().filter(|c| !c.is_whitespace()) {
                outcomes.push(match c {
                    '+' => 1i8,
                    '-' => -1i8,
                    _ => return Err(fail(lineno, format!("bad outcome symbol {c:?}"))),
                });
            }
            let count: u64 = cells[2]
                .parse()
                .map_err(|_| fail(lineno, format!("bad count {:?}", cells[2])))?;
            let table = table.get_or_insert_with(|| CountTable::new(setting.len()));
            table
                .push(CountRow { setting, outcomes, count })
                .map_err(|e| fail(lineno, e.to_string()))?;
        }
        table.ok_or_else(|| Error::Parse(format!("{origin}: no count rows")))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("setting,outcome,count\n");
        for row in &self.rows {
            let setting: String = row.setting.iter().map(|p| p.to_string()).collect();
            let outcome: String = row
                .outcomes
                .iter()
                .map(|&o| if o > 0 { '+' } else { '-' })
                .collect();
            writeln!(out, "{setting},{outcome},{}", row.count).unwrap();
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Estimate stabilizer expectations from raw counts, pooling every setting
/// compatible with each target (letters agree wherever the target is
/// non-identity). Sigma is the binomial standard error sqrt((1-v^2)/N).
pub fn counts_to_expectations(
    counts: &CountTable,
    targets: &[(Subset, PauliString)],
) -> Result<MeasurementTable> {
    let mut table = MeasurementTable::default();
    for (subset, op) in targets {
        let sign = op
            .phase()
            .as_sign()
            .ok_or_else(|| Error::NonHermitian(op.to_string()))?;
        let support = op.support();
        if support.iter().any(|&q| q > counts.n()) {
            return Err(Error::NoCompatibleSetting(format!("{} = {op}", subset.key())));
        }
        let mut weighted = 0.0f64;
        let mut total = 0u64;
        for row in counts.rows() {
            let compatible = support.iter().all(|&q| row.setting[q - 1] == op.letter(q));
            if !compatible {
                continue;
            }
            let product: i64 = support.iter().map(|&q| row.outcomes[q - 1] as i64).product();
            weighted += (product * row.count as i64) as f64;
            total += row.count;
        }
        if total == 0 {
            return Err(Error::NoCompatibleSetting(format!("{} = {op}", subset.key())));
        }
        let value = sign * weighted / total as f64;
        let sigma = ((1.0 - value * value).max(0.0) / total as f64).sqrt();
        table.insert(*subset, Measured { value, sigma });
    }
    Ok(table)
}

/// Format with 6 significant digits, round-half-even, plain decimal.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.000000".into();
    }
    let negative = x.is_sign_negative();
    let formatted = format!("{:.16e}", x.abs());
    let (mantissa, exponent) = formatted.split_once('e').expect("exponential form");
    let mut exp: i32 = exponent.parse().expect("exponent");
    let mut digits: Vec<u8> = mantissa
        .bytes()
        .filter(u8::is_ascii_digit)
        .map(|b| b - b'0')
        .collect();

    if digits.len() > 6 {
        let first_dropped = digits[6];
        let rest_nonzero = digits[7..].iter().any(|&d| d != 0);
        let round_up =
            first_dropped > 5 || (first_dropped == 5 && (rest_nonzero || digits[5] % 2 == 1));
        digits.truncate(6);
        if round_up {
            let mut i = 5;
            loop {
                if digits[i] < 9 {
                    digits[i] += 1;
                    break;
                }
                digits[i] = 0;
                if i == 0 {
                    digits.insert(0, 1);
                    digits.truncate(6);
                    exp += 1;
                    break;
                }
                i -= 1;
            }
        }
    } else {
        digits.resize(6, 0);
    }

    let digit_str: String = digits.iter().map(|d| (d + b'0') as char).collect();
    let body = if exp >= 5 {
        let mut s = digit_str;
        s.extend(std::iter::repeat('0').take((exp - 5) as usize));
        s
    } else if exp >= 0 {
        let split = (exp + 1) as usize;
        format!("{}.{}", &digit_str[..split], &digit_str[split..])
    } else {
        let zeros: String = std::iter::repeat('0').take((-exp - 1) as usize).collect();
        format!("0.{zeros}{digit_str}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                write!(out, "\\u{:04x}", c as u32).unwrap();
            }
            c => out.push(c),
        }
    }
    out
}

fn json_number(x: Option<f64>) -> String {
    match x {
        Some(v) => format_sig6(v),
        None => "null".into(),
    }
}

/// Render an analysis report as deterministic JSON: keys sorted, numbers at
/// 6 significant digits, LF line endings.
pub fn report_json(report: &AnalysisReport) -> String {
    let mut out = String::from("{\n");
    out.push_str("  \"expressions\": [\n");
    for (i, e) in report.expressions.iter().enumerate() {
        out.push_str("    {\n");
        writeln!(out, "      \"degree\": {},", format_sig6(e.degree)).unwrap();
        writeln!(out, "      \"lhv_bound\": {},", format_sig6(e.lhv_bound)).unwrap();
        writeln!(out, "      \"name\": \"{}\",", json_escape(&e.name)).unwrap();
        writeln!(out, "      \"quantum_max\": {},", format_sig6(e.quantum_max)).unwrap();
        writeln!(out, "      \"sigma\": {},", format_sig6(e.sigma)).unwrap();
        writeln!(out, "      \"value\": {},", format_sig6(e.value)).unwrap();
        writeln!(out, "      \"violation_sigmas\": {}", json_number(e.violation_sigmas)).unwrap();
        out.push_str(if i + 1 < report.expressions.len() {
            "    },\n"
        } else {
            "    }\n"
        });
    }
    out.push_str("  ],\n");
    out.push_str("  \"fidelity\": {\n");
    writeln!(out, "    \"sigma\": {},", format_sig6(report.fidelity.sigma)).unwrap();
    writeln!(out, "    \"value\": {}", format_sig6(report.fidelity.value)).unwrap();
    out.push_str("  },\n");
    out.push_str("  \"metadata\": {\n");
    match &report.dataset {
        Some(d) => writeln!(out, "    \"dataset\": \"{}\",", json_escape(d)).unwrap(),
        None => writeln!(out, "    \"dataset\": null,").unwrap(),
    }
    if report.notes.is_empty() {
        writeln!(out, "    \"notes\": [],").unwrap();
    } else {
        writeln!(out, "    \"notes\": [").unwrap();
        for (i, note) in report.notes.iter().enumerate() {
            let comma = if i + 1 < report.notes.len() { "," } else { "" };
            writeln!(out, "      \"{}\"{comma}", json_escape(note)).unwrap();
        }
        writeln!(out, "    ],").unwrap();
    }
    writeln!(out, "    \"version\": \"{}\"", env!("CARGO_PKG_VERSION")).unwrap();
    out.push_str("  },\n");
    out.push_str("  \"witness\": {\n");
    writeln!(out, "    \"sigma\": {},", format_sig6(report.witness.sigma)).unwrap();
    writeln!(out, "    \"value\": {},", format_sig6(report.witness.value)).unwrap();
    writeln!(
        out,
        "    \"violation_sigmas\": {}",
        json_number(report.witness_violation_sigmas)
    )
    .unwrap();
    out.push_str("  }\n");
    out.push_str("}\n");
    out
}

/// Write the JSON report to a file.
pub fn write_report(report: &AnalysisReport, path: &Path) -> Result<()> {
    std::fs::write(path, report_json(report)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell;
    use crate::graph::lc6_tilde;
    use crate::sim::{build_named_state, NamedState, NoiseSpec};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    #[test]
    fn bundled_dataset_shape() {
        let table = MeasurementTable::bundled_table1().unwrap();
        assert_eq!(table.len(), 64);
        assert_eq!(table.flagged(ExprName::B).len(), 16);
        assert_eq!(table.flagged(ExprName::Beta).len(), 4);
        assert_eq!(table.flagged(ExprName::BetaPrime).len(), 4);
        assert_eq!(table.dataset_id(), Some("table1"));

        // the two identical rows of the source table are both present
        let a = table.get(&Subset::parse("g1*g3*g5*g6").unwrap()).unwrap();
        let b = table.get(&Subset::parse("g1*g4*g5*g6").unwrap()).unwrap();
        assert_eq!(a.value, 0.4465);
        assert_eq!(b.value, 0.4465);

        // the suspected-typo sigma row carries its provenance note
        let g2g5 = Subset::parse("g2*g5").unwrap();
        assert_eq!(table.get(&g2g5).unwrap().sigma, 0.0066);
        assert!(table.annotations(&g2g5)[0].contains("00066"));

        assert_eq!(table.references().get("B").unwrap().value, 7.018);
        assert_eq!(table.references().get("fidelity").unwrap().value, 0.6350);
    }

    #[test]
    fn parse_single_rows() {
        let text = "stabilizer,value,sigma,flags_B,flags_beta,flags_betaprime\n\
                    g1,0.5928,0.0075,,beta,\n\
                    I,1.0000,0.0000,,,\n";
        let table = MeasurementTable::parse_str(text, "test").unwrap();
        let g1 = Subset::parse("g1").unwrap();
        assert_eq!(table.get(&g1).unwrap().value, 0.5928);
        assert!(table.flagged(ExprName::Beta).contains(&g1));
        assert!(table.get(&Subset::EMPTY).is_some());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(
            MeasurementTable::parse_str("", "empty"),
            Err(Error::Parse(_))
        ));

        let text = "stabilizer,value,sigma\ng1,abc,0.1\n";
        match MeasurementTable::parse_str(text, "test") {
            Err(Error::TableParse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }

        let text = "stabilizer,value,sigma\ng1,0.5,0.1\ng1,0.6,0.1\n";
        match MeasurementTable::parse_str(text, "test") {
            Err(Error::DuplicateSubset { key, .. }) => assert_eq!(key, "g1"),
            other => panic!("unexpected {other:?}"),
        }

        let text = "stabilizer,value,sigma\nh7,0.5,0.1\n";
        assert!(matches!(
            MeasurementTable::parse_str(text, "test"),
            Err(Error::TableParse { line: 2, .. })
        ));

        let text = "stabilizer,value,sigma\nI,0.9,0.0\n";
        assert!(MeasurementTable::parse_str(text, "test").is_err());

        let text = "value,sigma\n0.5,0.1\n";
        assert!(MeasurementTable::parse_str(text, "test").is_err());
    }

    #[test]
    fn out_of_range_values_are_flagged_not_rejected() {
        let text = "stabilizer,value,sigma\ng1,1.5,0.01\n";
        let table = MeasurementTable::parse_str(text, "test").unwrap();
        let g1 = Subset::parse("g1").unwrap();
        assert_eq!(table.get(&g1).unwrap().value, 1.5);
        assert!(!table.annotations(&g1).is_empty());

        // 3-sigma slack keeps marginal rows clean
        let text = "stabilizer,value,sigma\ng1,1.02,0.01\n";
        let table = MeasurementTable::parse_str(text, "test").unwrap();
        assert!(table.annotations(&g1).is_empty());
    }

    #[test]
    fn unknown_columns_are_ignored() {
        let text = "stabilizer,comment,value,sigma\ng1,anything,0.5,0.1\n";
        let table = MeasurementTable::parse_str(text, "test").unwrap();
        assert_eq!(table.get(&Subset::parse("g1").unwrap()).unwrap().value, 0.5);
    }

    #[test]
    fn csv_round_trip_preserves_bundled_table() {
        let table = MeasurementTable::bundled_table1().unwrap();
        let text = table.to_csv_string();
        let back = MeasurementTable::parse_str(&text, "round-trip").unwrap();
        assert_eq!(back.len(), table.len());
        for (subset, m) in table.records() {
            let rt = back.get(subset).unwrap();
            assert_eq!(rt.value, m.value);
            assert_eq!(rt.sigma, m.sigma);
        }
        for name in ExprName::all() {
            assert_eq!(back.flagged(name), table.flagged(name));
        }
        assert_eq!(back.references(), table.references());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact_for_arbitrary_tables(
            rows in proptest::collection::btree_map(0u64..64, (-1.05f64..1.05, 0.0f64..0.2), 1..40)
        ) {
            let mut table = MeasurementTable::default();
            for (mask, (value, sigma)) in rows {
                if mask == 0 {
                    continue;
                }
                table.insert(Subset::from_mask(mask), Measured { value, sigma });
            }
            prop_assume!(!table.is_empty());
            let text = table.to_csv_string();
            let back = MeasurementTable::parse_str(&text, "prop").unwrap();
            for (subset, m) in table.records() {
                let rt = back.get(subset).unwrap();
                prop_assert_eq!(rt.value.to_bits(), m.value.to_bits());
                prop_assert_eq!(rt.sigma.to_bits(), m.sigma.to_bits());
            }
        }
    }

    #[test]
    fn count_rows_estimate_expectations() {
        // perfect ZZ correlation
        let mut counts = CountTable::new(2);
        counts
            .push(CountRow {
                setting: vec![Pauli::Z, Pauli::Z],
                outcomes: vec![1, 1],
                count: 500,
            })
            .unwrap();
        counts
            .push(CountRow {
                setting: vec![Pauli::Z, Pauli::Z],
                outcomes: vec![-1, -1],
                count: 500,
            })
            .unwrap();
        let zz = PauliString::parse(2, "Z1Z2").unwrap();
        let subset = Subset::parse("g1").unwrap();
        let table = counts_to_expectations(&counts, &[(subset, zz)]).unwrap();
        let m = table.get(&subset).unwrap();
        assert_eq!(m.value, 1.0);
        assert_eq!(m.sigma, 0.0);

        // 90/10 split on each side
        let mut counts = CountTable::new(2);
        for (outcomes, count) in [
            (vec![1i8, 1], 450u64),
            (vec![1, -1], 50),
            (vec![-1, 1], 50),
            (vec![-1, -1], 450),
        ] {
            counts
                .push(CountRow {
                    setting: vec![Pauli::Z, Pauli::Z],
                    outcomes,
                    count,
                })
                .unwrap();
        }
        let zz = PauliString::parse(2, "Z1Z2").unwrap();
        let table = counts_to_expectations(&counts, &[(subset, zz)]).unwrap();
        let m = table.get(&subset).unwrap();
        assert!((m.value - 0.8).abs() < 1e-12);
        assert!((m.sigma - (0.36f64 / 1000.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn signed_targets_flip_the_estimate() {
        let mut counts = CountTable::new(1);
        counts
            .push(CountRow {
                setting: vec![Pauli::Z],
                outcomes: vec![1],
                count: 100,
            })
            .unwrap();
        let minus_z = PauliString::parse(1, "-Z1").unwrap();
        let subset = Subset::parse("g1").unwrap();
        let table = counts_to_expectations(&counts, &[(subset, minus_z)]).unwrap();
        assert_eq!(table.get(&subset).unwrap().value, -1.0);
    }

    #[test]
    fn coverage_error_names_the_target() {
        let mut counts = CountTable::new(2);
        counts
            .push(CountRow {
                setting: vec![Pauli::Z, Pauli::Z],
                outcomes: vec![1, 1],
                count: 10,
            })
            .unwrap();
        let xx = PauliString::parse(2, "X1X2").unwrap();
        let err = counts_to_expectations(&counts, &[(Subset::parse("g2").unwrap(), xx)]).unwrap_err();
        assert!(err.to_string().contains("X1X2"), "{err}");
    }

    #[test]
    fn count_table_round_trip_and_errors() {
        let text = "setting,outcome,count\nXZY ZXX,++-+-+,42\nXZYZXX,-+-+-+,7\n";
        let table = CountTable::parse_str(text, "test").unwrap();
        assert_eq!(table.n(), 6);
        assert_eq!(table.rows().len(), 2);
        assert_eq!(table.rows()[0].count, 42);
        assert_eq!(table.rows()[0].setting[0], Pauli::X);
        assert_eq!(table.rows()[0].outcomes[2], -1);

        let back = CountTable::parse_str(&table.to_csv_string(), "round-trip").unwrap();
        assert_eq!(back.rows(), table.rows());

        assert!(CountTable::parse_str("", "empty").is_err());
        assert!(CountTable::parse_str("setting,outcome,count\nQZ,++,1\n", "bad").is_err());
        assert!(CountTable::parse_str("setting,outcome,count\nZZ,+?,1\n", "bad").is_err());
        assert!(CountTable::parse_str("wrong,header,here\n", "bad").is_err());
    }

    #[test]
    fn sampling_round_trip_recovers_a_generator() {
        let state = build_named_state(NamedState::Lc6Tilde);
        let stabs = lc6_tilde();
        let g4 = Subset::parse("g4").unwrap();
        let op = *stabs.element(&g4).unwrap(); // Z1Z4

        let setting: BTreeMap<usize, Pauli> = (1..=6).map(|q| (q, Pauli::Z)).collect();
        let shots = 100_000;
        let samples = state.sample_setting(&setting, shots, 9).unwrap();
        let mut counts = CountTable::new(6);
        counts.extend_from_samples(&samples).unwrap();
        let table = counts_to_expectations(&counts, &[(g4, op)]).unwrap();
        let m = table.get(&g4).unwrap();
        assert!((m.value - 1.0).abs() < 3.0 / (shots as f64).sqrt(), "{}", m.value);
    }

    #[test]
    fn sampled_estimates_converge_within_five_sigma() {
        // white noise p = 0.7, so the estimator really has spread
        let state = build_named_state(NamedState::Lc6Tilde)
            .apply_noise(&NoiseSpec::white(0.7).unwrap())
            .unwrap();
        let stabs = lc6_tilde();
        let g16 = Subset::parse("g1*g6").unwrap();
        let op = *stabs.element(&g16).unwrap();
        let setting: BTreeMap<usize, Pauli> =
            op.support().into_iter().map(|q| (q, op.letter(q))).collect();

        let trials = 100;
        let mut failures = 0;
        for seed in 0..trials {
            let samples = state.sample_setting(&setting, 2000, seed).unwrap();
            let mut counts = CountTable::new(6);
            counts.extend_from_samples(&samples).unwrap();
            let m = counts_to_expectations(&counts, &[(g16, op)])
                .unwrap()
                .get(&g16)
                .unwrap();
            if (m.value - 0.7).abs() >= 5.0 * m.sigma {
                failures += 1;
            }
        }
        assert!(failures <= 1, "{failures} of {trials} trials outside 5 sigma");
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.0), "0.000000");
        assert_eq!(format_sig6(1.0), "1.00000");
        assert_eq!(format_sig6(-1.0), "-1.00000");
        assert_eq!(format_sig6(16.0), "16.0000");
        assert_eq!(format_sig6(0.6349984375), "0.634998");
        assert_eq!(format_sig6(0.00083285793), "0.000832858");
        assert_eq!(format_sig6(2.325), "2.32500");
        assert_eq!(format_sig6(162.09059366), "162.091");
        assert_eq!(format_sig6(1234567.0), "1234570");
        assert_eq!(format_sig6(-0.270), "-0.270000");
        // round-half-even on exact ties (both are binary-exact decimals)
        assert_eq!(format_sig6(2.265625), "2.26562"); // even digit stays
        assert_eq!(format_sig6(1.984375), "1.98438"); // odd digit rounds up
    }

    #[test]
    fn report_json_is_deterministic_and_contains_the_headlines() {
        let stabs = lc6_tilde();
        let table = MeasurementTable::bundled_table1().unwrap();
        let report = bell::full_report(&table, &stabs).unwrap();
        let a = report_json(&report);
        let b = report_json(&report);
        assert_eq!(a, b);
        assert!(a.contains("\"value\": 0.634998"));
        assert!(a.contains("\"sigma\": 0.000832858"));
        assert!(a.contains("\"value\": -0.269997"));
        assert!(a.contains("\"lhv_bound\": 4.00000"));
        assert!(a.contains("\"quantum_max\": 16.0000"));
        assert!(a.contains("\"dataset\": \"table1\""));
        assert!(a.contains("7.018"));

        let state = build_named_state(NamedState::Lc6Tilde);
        let report = bell::full_report(&state, &stabs).unwrap();
        let json = report_json(&report);
        assert!(json.contains("\"value\": -1.00000"));
        assert!(json.contains("\"sigma\": 0.000000"));
        assert!(json.contains("\"violation_sigmas\": null"));
    }
}
