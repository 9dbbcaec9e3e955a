//! Aggregates over slot-record CSV files, whether they come from the simulator
//! (`--export-slots`) or from drive-test logs converted to the same schema.
//!
//! Throughput samples are per scheduled slot: an acknowledged TB contributes
//! `tbs_bits / slot duration`, a NACKed one contributes zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mac::SlotRecord;
use crate::nr_tables::{modulation_name, McsTableId};

pub const RSRP_MIN_DBM: f64 = -156.0;
pub const RSRP_MAX_DBM: f64 = -31.0;
pub const DEFAULT_BIN_WIDTH_DB: f64 = 2.0;
pub const DEFAULT_MIN_N: usize = 30;
/// Slot length of the 120 kHz numerology the records are assumed to use.
pub const SLOT_DURATION_S: f64 = 1.0 / 8000.0;

pub const COLUMNS: [&str; 12] = [
    "slot",
    "time_s",
    "distance_m",
    "rsrp_dbm",
    "sinr_db",
    "table",
    "mcs",
    "qm",
    "n_prb",
    "tbs_bits",
    "new_tx",
    "ack",
];
pub const OPTIONAL_COLUMNS: [&str; 2] = ["carrier_id", "case"];

#[derive(Debug, Clone, PartialEq)]
pub struct FieldRecord {
    pub slot: SlotRecord,
    pub carrier_id: Option<u32>,
    /// Free-form test-case label (e.g. a route or location name).
    pub case: Option<String>,
}

impl From<SlotRecord> for FieldRecord {
    fn from(slot: SlotRecord) -> Self {
        Self {
            slot,
            carrier_id: None,
            case: None,
        }
    }
}

impl FieldRecord {
    pub fn mac_mbps(&self) -> f64 {
        if self.slot.ack {
            f64::from(self.slot.tbs_bits) / SLOT_DURATION_S / 1e6
        } else {
            0.0
        }
    }
}

// ---------------------------------------------------------------------------
// CSV I/O
// ---------------------------------------------------------------------------

fn parse_err(line: u64, column: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column: column.to_string(),
        message: message.into(),
    }
}

fn field<'a>(row: &'a csv::StringRecord, idx: usize, line: u64, name: &str) -> Result<&'a str> {
    row.get(idx)
        .ok_or_else(|| parse_err(line, name, "missing field"))
}

fn num<T: std::str::FromStr>(
    row: &csv::StringRecord,
    idx: usize,
    line: u64,
    name: &str,
) -> Result<T> {
    let s = field(row, idx, line, name)?;
    s.parse().map_err(|_| {
        parse_err(
            line,
            name,
            format!("`{s}` is not a valid {}", std::any::type_name::<T>()),
        )
    })
}

fn flag(row: &csv::StringRecord, idx: usize, line: u64, name: &str) -> Result<bool> {
    match field(row, idx, line, name)?.to_ascii_lowercase().as_str() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(parse_err(
            line,
            name,
            format!("`{other}` is not a boolean (0/1)"),
        )),
    }
}

/// Reads a slot-record CSV. Lines starting with `#` are ignored; the header
/// must contain every column in [`COLUMNS`] (in any order).
pub fn parse_records<R: Read>(reader: R) -> Result<Vec<FieldRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, "", e.to_string()))?
        .clone();
    let position = |name: &str| header.iter().position(|h| h == name);
    let mut idx = [0usize; COLUMNS.len()];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = position(name).ok_or_else(|| parse_err(1, name, "missing column in header"))?;
    }
    let carrier_idx = position("carrier_id");
    let case_idx = position("case");

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, "", e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let table_str = field(&row, idx[5], line, "table")?;
        let table: McsTableId = table_str
            .parse()
            .map_err(|_| parse_err(line, "table", format!("`{table_str}` is not 1, 2 or 4")))?;
        let rec = SlotRecord {
            slot: num(&row, idx[0], line, "slot")?,
            time_s: num(&row, idx[1], line, "time_s")?,
            distance_m: num(&row, idx[2], line, "distance_m")?,
            rsrp_dbm: num(&row, idx[3], line, "rsrp_dbm")?,
            sinr_db: num(&row, idx[4], line, "sinr_db")?,
            table,
            mcs_index: num(&row, idx[6], line, "mcs")?,
            qm: num(&row, idx[7], line, "qm")?,
            n_prb: num(&row, idx[8], line, "n_prb")?,
            tbs_bits: num(&row, idx[9], line, "tbs_bits")?,
            new_tx: flag(&row, idx[10], line, "new_tx")?,
            ack: flag(&row, idx[11], line, "ack")?,
        };
        if !(RSRP_MIN_DBM..=RSRP_MAX_DBM).contains(&rec.rsrp_dbm) {
            return Err(parse_err(
                line,
                "rsrp_dbm",
                format!(
                    "{} outside [{RSRP_MIN_DBM}, {RSRP_MAX_DBM}] dBm",
                    rec.rsrp_dbm
                ),
            ));
        }
        if rec.mcs_index > 31 {
            return Err(parse_err(
                line,
                "mcs",
                format!("{} outside 0..=31", rec.mcs_index),
            ));
        }
        if ![2, 4, 6, 8, 10].contains(&rec.qm) {
            return Err(parse_err(
                line,
                "qm",
                format!("{} is not a modulation order", rec.qm),
            ));
        }
        let carrier_id = match carrier_idx
            .and_then(|i| row.get(i))
            .filter(|s| !s.is_empty())
        {
            Some(_) => Some(num(&row, carrier_idx.unwrap(), line, "carrier_id")?),
            None => None,
        };
        let case = case_idx
            .and_then(|i| row.get(i))
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        out.push(FieldRecord {
            slot: rec,
            carrier_id,
            case,
        });
    }
    Ok(out)
}

pub fn read_records_file(path: &Path) -> Result<Vec<FieldRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_records(std::io::BufReader::new(file))
}

/// Writes records in the schema read by [`parse_records`]. Floats use the
/// shortest representation that reads back to the same value.
pub fn write_records<W: Write>(writer: W, records: &[FieldRecord]) -> Result<()> {
    let with_carrier = records.iter().any(|r| r.carrier_id.is_some());
    let with_case = records.iter().any(|r| r.case.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());

    let mut header: Vec<&str> = COLUMNS.to_vec();
    if with_carrier {
        header.push("carrier_id");
    }
    if with_case {
        header.push("case");
    }
    w.write_record(&header).map_err(io)?;
    for r in records {
        let s = &r.slot;
        let mut row = vec![
            s.slot.to_string(),
            s.time_s.to_string(),
            s.distance_m.to_string(),
            s.rsrp_dbm.to_string(),
            s.sinr_db.to_string(),
            s.table.to_string(),
            s.mcs_index.to_string(),
            s.qm.to_string(),
            s.n_prb.to_string(),
            s.tbs_bits.to_string(),
            u8::from(s.new_tx).to_string(),
            u8::from(s.ack).to_string(),
        ];
        if with_carrier {
            row.push(r.carrier_id.map(|c| c.to_string()).unwrap_or_default());
        }
        if with_case {
            row.push(r.case.clone().unwrap_or_default());
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Aggregates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtilizationWeight {
    ByPrb,
    ByTb,
}

/// Share of scheduled PRBs (or TBs) per modulation order. Empty input gives
/// an empty map.
pub fn modulation_utilization(
    records: &[FieldRecord],
    weight: UtilizationWeight,
) -> BTreeMap<u8, f64> {
    let mut counts: BTreeMap<u8, u64> = BTreeMap::new();
    for r in records {
        let w = match weight {
            UtilizationWeight::ByPrb => u64::from(r.slot.n_prb),
            UtilizationWeight::ByTb => 1,
        };
        *counts.entry(r.slot.qm).or_default() += w;
    }
    let total: u64 = counts.values().sum();
    if total == 0 {
        return BTreeMap::new();
    }
    counts
        .into_iter()
        .map(|(qm, c)| (qm, c as f64 / total as f64))
        .collect()
}

pub fn retransmission_rate(records: &[FieldRecord]) -> f64 {
    if records.is_empty() {
        log::warn!("retransmission rate of an empty record set is reported as 0");
        return 0.0;
    }
    let retx = records.iter().filter(|r| !r.slot.new_tx).count();
    retx as f64 / records.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinnedCurve {
    pub table: McsTableId,
    pub bin_center_dbm: f64,
    pub mean_mbps: f64,
    pub ci95_halfwidth_mbps: f64,
    pub n: usize,
}

/// Mean and sample standard deviation, summed in sorted order so the result
/// does not depend on input order.
fn mean_std(values: &mut [f64]) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let mut dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    dev.sort_by(f64::total_cmp);
    (mean, (dev.iter().sum::<f64>() / (n - 1.0)).sqrt())
}

/// Per-table RSRP-binned MAC throughput with normal-approximation 95% CIs.
/// Bins with fewer than `min_n` samples are dropped.
pub fn binned_throughput(
    records: &[FieldRecord],
    bin_width_db: f64,
    min_n: usize,
) -> Result<Vec<BinnedCurve>> {
    if !(bin_width_db > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "bin width {bin_width_db} must be > 0"
        )));
    }
    let mut bins: BTreeMap<(McsTableId, i64), Vec<f64>> = BTreeMap::new();
    for r in records {
        let bin = (r.slot.rsrp_dbm / bin_width_db).floor() as i64;
        bins.entry((r.slot.table, bin))
            .or_default()
            .push(r.mac_mbps());
    }
    Ok(bins
        .into_iter()
        .filter(|(_, v)| !v.is_empty() && v.len() >= min_n)
        .map(|((table, bin), mut v)| {
            let (mean, std) = mean_std(&mut v);
            BinnedCurve {
                table,
                bin_center_dbm: (bin as f64 + 0.5) * bin_width_db,
                mean_mbps: mean,
                ci95_halfwidth_mbps: 1.96 * std / (v.len() as f64).sqrt(),
                n: v.len(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableGain {
    /// `None` for the all-cases summary.
    pub case: Option<String>,
    pub mean_table1_mbps: Option<f64>,
    pub mean_table2_mbps: Option<f64>,
    /// `(T2 - T1) / T1` in percent; absent when either table is missing.
    pub gain_pct: Option<f64>,
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableGainSummary {
    pub per_case: Vec<TableGain>,
    pub overall: TableGain,
}

fn table_gain(case: Option<String>, records: &[&FieldRecord]) -> TableGain {
    let mean_for = |t: McsTableId| {
        let mut v: Vec<f64> = records
            .iter()
            .filter(|r| r.slot.table == t)
            .map(|r| r.mac_mbps())
            .collect();
        (!v.is_empty()).then(|| mean_std(&mut v).0)
    };
    let t1 = mean_for(McsTableId::Table1);
    let t2 = mean_for(McsTableId::Table2);
    let gain_pct = match (t1, t2) {
        (Some(a), Some(b)) if a > 0.0 => Some(100.0 * (b - a) / a),
        _ => None,
    };
    TableGain {
        case,
        mean_table1_mbps: t1,
        mean_table2_mbps: t2,
        gain_pct,
        partial: gain_pct.is_none(),
    }
}

/// Mean MAC-throughput gain of table 2 over table 1, per case label and overall.
pub fn table_gain_summary(records: &[FieldRecord]) -> TableGainSummary {
    let mut cases: BTreeMap<Option<String>, Vec<&FieldRecord>> = BTreeMap::new();
    for r in records {
        cases.entry(r.case.clone()).or_default().push(r);
    }
    let per_case = cases
        .into_iter()
        .map(|(c, rs)| table_gain(c, &rs))
        .collect();
    let all: Vec<&FieldRecord> = records.iter().collect();
    TableGainSummary {
        per_case,
        overall: table_gain(None, &all),
    }
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub n_records: usize,
    /// Keyed by table; `None` = all tables together.
    pub utilization_prb: BTreeMap<Option<McsTableId>, BTreeMap<u8, f64>>,
    pub utilization_tb: BTreeMap<Option<McsTableId>, BTreeMap<u8, f64>>,
    pub retx: BTreeMap<Option<McsTableId>, (usize, f64)>,
    pub curves: Vec<BinnedCurve>,
    pub gains: TableGainSummary,
    pub bin_width_db: f64,
    pub min_n: usize,
}

pub fn analyze(records: &[FieldRecord], bin_width_db: f64, min_n: usize) -> Result<AnalysisReport> {
    let mut groups: BTreeMap<Option<McsTableId>, Vec<FieldRecord>> = BTreeMap::new();
    groups.insert(None, records.to_vec());
    for r in records {
        groups
            .entry(Some(r.slot.table))
            .or_default()
            .push(r.clone());
    }
    Ok(AnalysisReport {
        n_records: records.len(),
        utilization_prb: groups
            .iter()
            .map(|(k, v)| (*k, modulation_utilization(v, UtilizationWeight::ByPrb)))
            .collect(),
        utilization_tb: groups
            .iter()
            .map(|(k, v)| (*k, modulation_utilization(v, UtilizationWeight::ByTb)))
            .collect(),
        retx: groups
            .iter()
            .map(|(k, v)| (*k, (v.len(), retransmission_rate(v))))
            .collect(),
        curves: binned_throughput(records, bin_width_db, min_n)?,
        gains: table_gain_summary(records),
        bin_width_db,
        min_n,
    })
}

fn table_label(t: Option<McsTableId>) -> String {
    t.map_or_else(|| "all".to_string(), |t| t.to_string())
}

impl AnalysisReport {
    pub fn utilization_csv(&self) -> String {
        let mut s = String::from("table,qm,modulation,prb_share,tb_share\n");
        for (table, shares) in &self.utilization_prb {
            for (qm, prb) in shares {
                let tb = self.utilization_tb[table].get(qm).copied().unwrap_or(0.0);
                let _ = writeln!(
                    s,
                    "{},{qm},{},{prb:.6},{tb:.6}",
                    table_label(*table),
                    modulation_name(*qm)
                );
            }
        }
        s
    }

    pub fn retx_csv(&self) -> String {
        let mut s = String::from("table,transmissions,retx_rate\n");
        for (table, (n, rate)) in &self.retx {
            let _ = writeln!(s, "{},{n},{rate:.6}", table_label(*table));
        }
        s
    }

    pub fn curves_csv(&self) -> String {
        let mut s = String::from("table,bin_center_dbm,mean_mbps,ci95_halfwidth_mbps,n\n");
        for c in &self.curves {
            let _ = writeln!(
                s,
                "{},{},{:.3},{:.3},{}",
                c.table, c.bin_center_dbm, c.mean_mbps, c.ci95_halfwidth_mbps, c.n
            );
        }
        s
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "records: {}", self.n_records);
        let _ = writeln!(
            s,
            "rsrp bin width: {} dB, min samples per bin: {}",
            self.bin_width_db, self.min_n
        );
        for (table, (n, rate)) in &self.retx {
            let _ = writeln!(
                s,
                "table {}: {n} transmissions, retx rate {:.2}%",
                table_label(*table),
                100.0 * rate
            );
        }
        let fmt_opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.1}"));
        let mut gains: Vec<&TableGain> = self.gains.per_case.iter().collect();
        gains.push(&self.gains.overall);
        for g in gains {
            let label = g
                .case
                .as_deref()
                .unwrap_or(if std::ptr::eq(g, &self.gains.overall) {
                    "overall"
                } else {
                    "(unlabelled)"
                });
            let _ = writeln!(
                s,
                "gain {label}: table1 {} Mbps, table2 {} Mbps, gain {}%{}",
                fmt_opt(g.mean_table1_mbps),
                fmt_opt(g.mean_table2_mbps),
                g.gain_pct
                    .map_or_else(|| "n/a".to_string(), |x| format!("{x:.2}")),
                if g.partial { " (partial)" } else { "" }
            );
        }
        s
    }

    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("utilization.csv"), self.utilization_csv())?;
        fs::write(dir.join("retx.csv"), self.retx_csv())?;
        fs::write(dir.join("binned_curves.csv"), self.curves_csv())?;
        fs::write(dir.join("summary.txt"), self.summary_text())?;
        Ok(())
    }
}
