//! Multiplication and broadcast accounting, closed-form costs, and reports.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::RingParams;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MulPath {
    /// Work done only to produce or check MAC tags.
    Tag,
    /// Work on value shares.
    Value,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub tag: u64,
    pub value: u64,
}

impl Tally {
    pub fn plus(self, o: Tally) -> Tally {
        Tally { tag: self.tag + o.tag, value: self.value + o.value }
    }
}

/// One party's multiplication counters, bucketed by step label.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MulCounter {
    by_step: BTreeMap<String, Tally>,
}

impl MulCounter {
    pub fn add(&mut self, step: &str, path: MulPath, n: u64) {
        let t = self.by_step.entry(step.to_string()).or_default();
        match path {
            MulPath::Tag => t.tag += n,
            MulPath::Value => t.value += n,
        }
    }

    pub fn get(&self, step: &str) -> Tally {
        self.by_step.get(step).copied().unwrap_or_default()
    }

    /// Sum over labels starting with `prefix`.
    pub fn prefixed(&self, prefix: &str) -> Tally {
        self.by_step
            .iter()
            .filter(|(k, _)| k.starts_with(prefix))
            .fold(Tally::default(), |a, (_, t)| a.plus(*t))
    }

    pub fn total(&self) -> Tally {
        self.by_step.values().fold(Tally::default(), |a, t| a.plus(*t))
    }

    pub fn steps(&self) -> impl Iterator<Item = (&str, Tally)> {
        self.by_step.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn reset(&mut self) {
        self.by_step.clear();
    }
}

/// Tag-path multiplications of one SPDZ2k matrix product: 3*T1*T2*T3 + T1*T3.
pub fn formula_baseline_tag(t1: u64, t2: u64, t3: u64) -> u64 {
    3 * t1 * t2 * t3 + t1 * t3
}

/// Tag-path multiplications of one compact matrix product:
/// 4*T1*T3 + 2*T2*T3 + 3*T1*T2 + T1.
pub fn formula_compact_tag(t1: u64, t2: u64, t3: u64) -> u64 {
    4 * t1 * t3 + 2 * t2 * t3 + 3 * t1 * t2 + t1
}

pub fn formula_tag_ratio(t1: u64, t2: u64, t3: u64) -> f64 {
    formula_baseline_tag(t1, t2, t3) as f64 / formula_compact_tag(t1, t2, t3) as f64
}

/// Value-path multiplications at party 1. The baseline reuses the E*U
/// product computed for the tags; the compact variant computes it on the
/// value side only.
pub fn formula_value(protocol: Protocol, t1: u64, t2: u64, t3: u64) -> u64 {
    match protocol {
        Protocol::Baseline => 2 * t1 * t2 * t3,
        Protocol::CompactTag => 3 * t1 * t2 * t3,
    }
}

/// Key products of the baseline's separate truncation (delta_i * D/2^f).
pub fn formula_trunc_tag(protocol: Protocol, t1: u64, t3: u64) -> u64 {
    match protocol {
        Protocol::Baseline => t1 * t3,
        Protocol::CompactTag => 0,
    }
}

/// Estimated local-compute speedup at party 1: all baseline
/// multiplications over all compact ones.
pub fn formula_speedup(t1: u64, t2: u64, t3: u64) -> f64 {
    let base = formula_baseline_tag(t1, t2, t3) + t1 * t3 + formula_value(Protocol::Baseline, t1, t2, t3);
    let compact = formula_compact_tag(t1, t2, t3) + formula_value(Protocol::CompactTag, t1, t2, t3);
    base as f64 / compact as f64
}

/// Broadcast elements per party for multiply-then-truncate (E, U and D).
pub fn formula_broadcast_elements(t1: u64, t2: u64, t3: u64) -> u64 {
    t1 * t2 + t2 * t3 + t1 * t3
}

/// Broadcast bytes per party. BatchRec openings travel mod 2^(k+s); the
/// optimistic D opening of the compact variant travels mod 2^(k+2s).
pub fn formula_broadcast_bytes(p: &RingParams, protocol: Protocol, t1: u64, t2: u64, t3: u64) -> u64 {
    let ks = p.w_ks().div_ceil(8) as u64;
    let k2s = p.w_k2s().div_ceil(8) as u64;
    match protocol {
        Protocol::Baseline => (t1 * t2 + t2 * t3 + t1 * t3) * ks,
        Protocol::CompactTag => (t1 * t2 + t2 * t3) * ks + t1 * t3 * k2s,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Baseline,
    #[serde(rename = "compacttag")]
    CompactTag,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Baseline => "baseline",
            Protocol::CompactTag => "compacttag",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Closed-form counts; nothing is executed.
    Formula,
    /// Counts read from the counters of a simulated run.
    Instrumented,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Formula => "formula",
            Mode::Instrumented => "instrumented",
        }
    }
}

/// One report line. Counts are per party (party 1 for value work).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub label: String,
    pub t1: u64,
    pub t2: u64,
    pub t3: u64,
    /// Independent copies of the product (layer batch); counts include it.
    pub batch: u64,
    pub protocol: Protocol,
    pub mode: Mode,
    /// Tag-path multiplications of the product, the quantity the closed
    /// forms count (for the compact variant this includes truncation).
    pub tag_mults: u64,
    /// Key products of the separate baseline truncation; 0 for compact.
    pub trunc_tag_mults: u64,
    pub value_mults: u64,
    pub broadcast_elements: u64,
    pub broadcast_bytes: u64,
    pub baseline_tag_formula: u64,
    pub compact_tag_formula: u64,
    /// baseline_tag_formula / compact_tag_formula
    pub tag_ratio: f64,
    /// tag_mults / (tag_mults + value_mults)
    pub tag_share: f64,
    /// formula_speedup of the shape
    pub est_speedup: f64,
    pub wall_ms: f64,
}

impl CostRow {
    /// Row built purely from the closed forms.
    pub fn formula(label: &str, params: &RingParams, protocol: Protocol, t1: u64, t2: u64, t3: u64) -> CostRow {
        let tag = match protocol {
            Protocol::Baseline => formula_baseline_tag(t1, t2, t3),
            Protocol::CompactTag => formula_compact_tag(t1, t2, t3),
        };
        let value = formula_value(protocol, t1, t2, t3);
        let mut row = CostRow {
            label: label.to_string(),
            t1,
            t2,
            t3,
            batch: 1,
            protocol,
            mode: Mode::Formula,
            tag_mults: tag,
            trunc_tag_mults: formula_trunc_tag(protocol, t1, t3),
            value_mults: value,
            broadcast_elements: formula_broadcast_elements(t1, t2, t3),
            broadcast_bytes: formula_broadcast_bytes(params, protocol, t1, t2, t3),
            baseline_tag_formula: 0,
            compact_tag_formula: 0,
            tag_ratio: 0.0,
            tag_share: 0.0,
            est_speedup: 0.0,
            wall_ms: 0.0,
        };
        row.fill_derived();
        row
    }

    /// Scales every count by `batch` copies of the product.
    pub fn with_batch(mut self, batch: u64) -> CostRow {
        let b = batch / self.batch.max(1);
        self.tag_mults *= b;
        self.trunc_tag_mults *= b;
        self.value_mults *= b;
        self.broadcast_elements *= b;
        self.broadcast_bytes *= b;
        self.batch = batch;
        self.fill_derived();
        self
    }

    pub(crate) fn fill_derived(&mut self) {
        let b = self.batch.max(1);
        self.baseline_tag_formula = b * formula_baseline_tag(self.t1, self.t2, self.t3);
        self.compact_tag_formula = b * formula_compact_tag(self.t1, self.t2, self.t3);
        self.est_speedup = formula_speedup(self.t1, self.t2, self.t3);
        self.tag_ratio = self.baseline_tag_formula as f64 / self.compact_tag_formula as f64;
        let tags = self.tag_mults + self.trunc_tag_mults;
        let all = tags + self.value_mults;
        self.tag_share = if all == 0 { 0.0 } else { tags as f64 / all as f64 };
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub schema_version: u32,
    pub params: Option<RingParams>,
    pub parties: usize,
    pub note: String,
    pub rows: Vec<CostRow>,
    pub wall_ms: f64,
}

impl Default for CostReport {
    fn default() -> Self {
        CostReport {
            schema_version: REPORT_SCHEMA_VERSION,
            params: None,
            parties: 0,
            note: String::new(),
            rows: Vec::new(),
            wall_ms: 0.0,
        }
    }
}

pub const CSV_HEADER: [&str; 18] = [
    "label",
    "t1",
    "t2",
    "t3",
    "batch",
    "protocol",
    "mode",
    "tag_mults",
    "trunc_tag_mults",
    "value_mults",
    "broadcast_elements",
    "broadcast_bytes",
    "baseline_tag_formula",
    "compact_tag_formula",
    "tag_ratio",
    "tag_share",
    "est_speedup",
    "wall_ms",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Format(format!("unknown format `{other}`"))),
        }
    }
}

impl CostReport {
    /// Row whose counters are the sums of all rows with `protocol`.
    pub fn aggregate(&self, label: &str, protocol: Protocol) -> Option<CostRow> {
        let rows: Vec<&CostRow> = self.rows.iter().filter(|r| r.protocol == protocol).collect();
        let first = rows.first()?;
        let mut acc = CostRow {
            label: label.to_string(),
            t1: 0,
            t2: 0,
            t3: 0,
            batch: 0,
            protocol,
            mode: first.mode,
            tag_mults: 0,
            trunc_tag_mults: 0,
            value_mults: 0,
            broadcast_elements: 0,
            broadcast_bytes: 0,
            baseline_tag_formula: 0,
            compact_tag_formula: 0,
            tag_ratio: 0.0,
            tag_share: 0.0,
            est_speedup: 0.0,
            wall_ms: 0.0,
        };
        let (mut base_all, mut compact_all) = (0u64, 0u64);
        for r in rows {
            let b = r.batch.max(1);
            base_all += b
                * (formula_baseline_tag(r.t1, r.t2, r.t3) + r.t1 * r.t3 + formula_value(Protocol::Baseline, r.t1, r.t2, r.t3));
            compact_all +=
                b * (formula_compact_tag(r.t1, r.t2, r.t3) + formula_value(Protocol::CompactTag, r.t1, r.t2, r.t3));
            acc.batch += b;
            acc.tag_mults += r.tag_mults;
            acc.trunc_tag_mults += r.trunc_tag_mults;
            acc.value_mults += r.value_mults;
            acc.broadcast_elements += r.broadcast_elements;
            acc.broadcast_bytes += r.broadcast_bytes;
            acc.baseline_tag_formula += r.baseline_tag_formula;
            acc.compact_tag_formula += r.compact_tag_formula;
            acc.wall_ms += r.wall_ms;
        }
        acc.tag_ratio = acc.baseline_tag_formula as f64 / acc.compact_tag_formula.max(1) as f64;
        let tags = acc.tag_mults + acc.trunc_tag_mults;
        let all = tags + acc.value_mults;
        acc.tag_share = if all == 0 { 0.0 } else { tags as f64 / all as f64 };
        acc.est_speedup = base_all as f64 / compact_all.max(1) as f64;
        Some(acc)
    }

    pub fn write<W: Write>(&self, out: W, format: Format) -> Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(out, self).map_err(|e| Error::Format(e.to_string()))
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(CSV_HEADER).map_err(csv_err)?;
                for r in &self.rows {
                    w.write_record([
                        r.label.clone(),
                        r.t1.to_string(),
                        r.t2.to_string(),
                        r.t3.to_string(),
                        r.batch.to_string(),
                        r.protocol.name().to_string(),
                        r.mode.name().to_string(),
                        r.tag_mults.to_string(),
                        r.trunc_tag_mults.to_string(),
                        r.value_mults.to_string(),
                        r.broadcast_elements.to_string(),
                        r.broadcast_bytes.to_string(),
                        r.baseline_tag_formula.to_string(),
                        r.compact_tag_formula.to_string(),
                        format!("{:.4}", r.tag_ratio),
                        format!("{:.4}", r.tag_share),
                        format!("{:.4}", r.est_speedup),
                        format!("{:.3}", r.wall_ms),
                    ])
                    .map_err(csv_err)?;
                }
                w.flush()?;
                Ok(())
            }
        }
    }

    pub fn to_string(&self, format: Format) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf, format)?;
        String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<CostReport> {
        serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Writes a report to `path`, or stdout when `path` is None.
pub fn emit_report(report: &CostReport, format: Format, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            report.write(std::io::BufWriter::new(f), format)
        }
        None => report.write(std::io::stdout().lock(), format),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_formula_examples() {
        assert_eq!(formula_baseline_tag(1, 1, 1), 4);
        assert_eq!(formula_baseline_tag(16, 12, 8), 4736);
        assert_eq!(formula_baseline_tag(2048, 1024, 1024), 6_444_548_096);
    }

    #[test]
    fn compact_formula_examples() {
        assert_eq!(formula_compact_tag(1, 1, 1), 10);
        assert_eq!(formula_compact_tag(16, 12, 8), 1296);
        assert_eq!(formula_compact_tag(2048, 1024, 1024), 16_779_264);
        let r = formula_tag_ratio(2048, 1024, 1024);
        assert!((r - 384.07).abs() < 0.01, "{r}");
    }

    #[test]
    fn empty_report_is_header_only() {
        let s = CostReport::default().to_string(Format::Csv).unwrap();
        assert_eq!(s.trim_end(), CSV_HEADER.join(","));
    }

    #[test]
    fn json_round_trip() {
        let p = RingParams::k64();
        let mut rep = CostReport { params: Some(p), parties: 2, ..Default::default() };
        rep.rows.push(CostRow::formula("a", &p, Protocol::Baseline, 16, 12, 8));
        rep.rows.push(CostRow::formula("b", &p, Protocol::CompactTag, 3, 5, 7));
        let back = CostReport::from_json(&rep.to_string(Format::Json).unwrap()).unwrap();
        assert_eq!(back, rep);
    }

    #[test]
    fn aggregate_sums_rows() {
        let p = RingParams::k32();
        let mut rep = CostReport::default();
        let shapes = [(4, 5, 6), (7, 8, 9), (1, 1, 1)];
        for (i, (a, b, c)) in shapes.iter().enumerate() {
            rep.rows.push(CostRow::formula(&format!("l{i}"), &p, Protocol::CompactTag, *a, *b, *c));
        }
        let agg = rep.aggregate("total", Protocol::CompactTag).unwrap();
        let want: u64 = shapes.iter().map(|(a, b, c)| formula_compact_tag(*a, *b, *c)).sum();
        assert_eq!(agg.tag_mults, want);
        let elems: u64 = shapes.iter().map(|(a, b, c)| formula_broadcast_elements(*a, *b, *c)).sum();
        assert_eq!(agg.broadcast_elements, elems);
        assert!(rep.aggregate("x", Protocol::Baseline).is_none());
    }

    #[test]
    fn batch_scales_counts() {
        let p = RingParams::k64();
        let one = CostRow::formula("a", &p, Protocol::CompactTag, 4, 5, 6);
        let four = one.clone().with_batch(4);
        assert_eq!(four.tag_mults, 4 * one.tag_mults);
        assert_eq!(four.broadcast_bytes, 4 * one.broadcast_bytes);
        assert_eq!(four.tag_ratio, one.tag_ratio);
    }

    #[test]
    fn value_formula_by_protocol() {
        assert_eq!(formula_value(Protocol::Baseline, 2, 3, 4), 48);
        assert_eq!(formula_value(Protocol::CompactTag, 2, 3, 4), 72);
        let s = formula_speedup(2048, 1024, 1024);
        assert!((s - 5.0 / 3.0).abs() < 0.01, "{s}");
    }

    #[test]
    fn counter_buckets() {
        let mut c = MulCounter::default();
        c.add("compact.tag", MulPath::Tag, 5);
        c.add("compact.z", MulPath::Value, 7);
        c.add("check", MulPath::Tag, 1);
        assert_eq!(c.prefixed("compact.").tag, 5);
        assert_eq!(c.prefixed("compact.").value, 7);
        assert_eq!(c.total(), Tally { tag: 6, value: 7 });
    }
}
