//! PDSCH MCS index tables, CQI tables and transport block size determination.
//!
//! All rows are transcribed into the text files under `data/` (one row per
//! line, `index qm rate_x1024 se`, with `reserved` / `out_of_range` markers)
//! and parsed once on first use. The data is immutable afterwards.

mod tbs;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use tbs::{compute_tbs, TbsInput, SMALL_TBS_MAX_NINFO};

const MCS_TABLE1_SRC: &str = include_str!("../../data/mcs_table1.txt");
const MCS_TABLE2_SRC: &str = include_str!("../../data/mcs_table2.txt");
const MCS_TABLE4_SRC: &str = include_str!("../../data/mcs_table4.txt");
const CQI_TABLE2_SRC: &str = include_str!("../../data/cqi_table2.txt");
const CQI_TABLE3_SRC: &str = include_str!("../../data/cqi_table3.txt");
const CQI_TABLE5_SRC: &str = include_str!("../../data/cqi_table5.txt");
const TBS_SMALL_SRC: &str = include_str!("../../data/tbs_small.txt");

/// Number of rows in every PDSCH MCS index table.
pub const MCS_ROWS: usize = 32;
/// Number of rows in every 4-bit CQI table.
pub const CQI_ROWS: usize = 16;

// ---------------------------------------------------------------------------
// Table identifiers
// ---------------------------------------------------------------------------

/// PDSCH MCS index table (`mcs-Table` in RRC).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum McsTableId {
    /// qam64
    Table1,
    /// qam256
    Table2,
    /// qam1024 (Rel-17)
    Table4,
}

impl McsTableId {
    pub const ALL: [McsTableId; 3] = [McsTableId::Table1, McsTableId::Table2, McsTableId::Table4];

    pub fn number(self) -> u8 {
        match self {
            McsTableId::Table1 => 1,
            McsTableId::Table2 => 2,
            McsTableId::Table4 => 4,
        }
    }

    /// CQI table a UE configured with this MCS table reports against.
    pub fn cqi_table(self) -> CqiTableId {
        match self {
            McsTableId::Table1 => CqiTableId::Table2,
            McsTableId::Table2 => CqiTableId::Table3,
            McsTableId::Table4 => CqiTableId::Table5,
        }
    }

    /// Highest modulation order present in the table.
    pub fn max_qm(self) -> u8 {
        match self {
            McsTableId::Table1 => 6,
            McsTableId::Table2 => 8,
            McsTableId::Table4 => 10,
        }
    }

    fn slot(self) -> usize {
        match self {
            McsTableId::Table1 => 0,
            McsTableId::Table2 => 1,
            McsTableId::Table4 => 2,
        }
    }
}

impl fmt::Display for McsTableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for McsTableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "table1" | "qam64" => Ok(McsTableId::Table1),
            "2" | "table2" | "qam256" => Ok(McsTableId::Table2),
            "4" | "table4" | "qam1024" => Ok(McsTableId::Table4),
            other => Err(Error::UnknownTable(other.to_string())),
        }
    }
}

/// 4-bit CQI table, named by its TS 38.214 table number (5.2.2.1-x).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CqiTableId {
    /// Table 5.2.2.1-2, up to 64QAM.
    Table2,
    /// Table 5.2.2.1-3, up to 256QAM.
    Table3,
    /// Table 5.2.2.1-5, up to 1024QAM.
    Table5,
}

impl CqiTableId {
    pub const ALL: [CqiTableId; 3] = [CqiTableId::Table2, CqiTableId::Table3, CqiTableId::Table5];

    pub fn number(self) -> u8 {
        match self {
            CqiTableId::Table2 => 2,
            CqiTableId::Table3 => 3,
            CqiTableId::Table5 => 5,
        }
    }

    fn slot(self) -> usize {
        match self {
            CqiTableId::Table2 => 0,
            CqiTableId::Table3 => 1,
            CqiTableId::Table5 => 2,
        }
    }
}

impl fmt::Display for CqiTableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for CqiTableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "2" => Ok(CqiTableId::Table2),
            "3" => Ok(CqiTableId::Table3),
            "5" => Ok(CqiTableId::Table5),
            other => Err(Error::UnknownTable(other.to_string())),
        }
    }
}

// ---------------------------------------------------------------------------
// Rows
// ---------------------------------------------------------------------------

/// One row of a PDSCH MCS index table.
///
/// Reserved rows (retransmission-only indexes) carry the modulation order
/// but no code rate; `code_rate_x1024` and `spectral_efficiency` are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsEntry {
    pub table: McsTableId,
    pub index: u8,
    /// Modulation order Qm in bits per symbol.
    pub qm: u8,
    /// Target code rate times 1024. Some rows are half-integers (682.5).
    pub code_rate_x1024: f64,
    /// Spectral efficiency in bits per resource element, as printed (4 dp).
    pub spectral_efficiency: f64,
    pub reserved: bool,
}

impl McsEntry {
    pub fn code_rate(&self) -> f64 {
        self.code_rate_x1024 / 1024.0
    }

    /// Code rate in units of 1/2048; exact for every transcribed row.
    pub fn code_rate_x2048(&self) -> u32 {
        (self.code_rate_x1024 * 2.0).round() as u32
    }

    pub fn modulation_name(&self) -> &'static str {
        modulation_name(self.qm)
    }
}

/// One row of a 4-bit CQI table. Row 0 is "out of range".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqiEntry {
    pub table: CqiTableId,
    pub cqi: u8,
    pub qm: u8,
    pub code_rate_x1024: f64,
    pub spectral_efficiency: f64,
    pub out_of_range: bool,
}

pub fn modulation_name(qm: u8) -> &'static str {
    match qm {
        2 => "QPSK",
        4 => "16QAM",
        6 => "64QAM",
        8 => "256QAM",
        10 => "1024QAM",
        _ => "unknown",
    }
}

// ---------------------------------------------------------------------------
// Parsing of the bundled text tables
// ---------------------------------------------------------------------------

struct Tables {
    mcs: [Vec<McsEntry>; 3],
    cqi: [Vec<CqiEntry>; 3],
    tbs_small: Vec<u32>,
}

fn data_lines(src: &str) -> impl Iterator<Item = Vec<&str>> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split_whitespace().collect())
}

fn parse_mcs(table: McsTableId, src: &str) -> Vec<McsEntry> {
    let rows: Vec<McsEntry> = data_lines(src)
        .map(|f| {
            let index: u8 = f[0].parse().expect("mcs index");
            let qm: u8 = f[1].parse().expect("mcs qm");
            if f[2] == "reserved" {
                McsEntry {
                    table,
                    index,
                    qm,
                    code_rate_x1024: 0.0,
                    spectral_efficiency: 0.0,
                    reserved: true,
                }
            } else {
                McsEntry {
                    table,
                    index,
                    qm,
                    code_rate_x1024: f[2].parse().expect("mcs rate"),
                    spectral_efficiency: f[3].parse().expect("mcs se"),
                    reserved: false,
                }
            }
        })
        .collect();
    assert_eq!(rows.len(), MCS_ROWS, "MCS table {table} must have 32 rows");
    rows
}

fn parse_cqi(table: CqiTableId, src: &str) -> Vec<CqiEntry> {
    let rows: Vec<CqiEntry> = data_lines(src)
        .map(|f| {
            let cqi: u8 = f[0].parse().expect("cqi index");
            if f[1] == "out_of_range" {
                CqiEntry {
                    table,
                    cqi,
                    qm: 0,
                    code_rate_x1024: 0.0,
                    spectral_efficiency: 0.0,
                    out_of_range: true,
                }
            } else {
                CqiEntry {
                    table,
                    cqi,
                    qm: f[1].parse().expect("cqi qm"),
                    code_rate_x1024: f[2].parse().expect("cqi rate"),
                    spectral_efficiency: f[3].parse().expect("cqi se"),
                    out_of_range: false,
                }
            }
        })
        .collect();
    assert_eq!(rows.len(), CQI_ROWS, "CQI table {table} must have 16 rows");
    rows
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| Tables {
        mcs: [
            parse_mcs(McsTableId::Table1, MCS_TABLE1_SRC),
            parse_mcs(McsTableId::Table2, MCS_TABLE2_SRC),
            parse_mcs(McsTableId::Table4, MCS_TABLE4_SRC),
        ],
        cqi: [
            parse_cqi(CqiTableId::Table2, CQI_TABLE2_SRC),
            parse_cqi(CqiTableId::Table3, CQI_TABLE3_SRC),
            parse_cqi(CqiTableId::Table5, CQI_TABLE5_SRC),
        ],
        tbs_small: data_lines(TBS_SMALL_SRC)
            .map(|f| f[1].parse().expect("tbs value"))
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// Lookups
// ---------------------------------------------------------------------------

/// All 32 rows of an MCS table, reserved rows included.
pub fn mcs_table(table: McsTableId) -> &'static [McsEntry] {
    &tables().mcs[table.slot()]
}

/// All 16 rows of a CQI table.
pub fn cqi_table(table: CqiTableId) -> &'static [CqiEntry] {
    &tables().cqi[table.slot()]
}

/// The 93-entry small-TBS table used when `N_info <= 3824`.
pub fn small_tbs_table() -> &'static [u32] {
    &tables().tbs_small
}

pub fn lookup_mcs(table: McsTableId, index: i64) -> Result<McsEntry> {
    if !(0..MCS_ROWS as i64).contains(&index) {
        return Err(Error::McsIndexOutOfRange(index));
    }
    Ok(mcs_table(table)[index as usize])
}

pub fn lookup_cqi(table: CqiTableId, cqi: i64) -> Result<CqiEntry> {
    if !(0..CQI_ROWS as i64).contains(&cqi) {
        return Err(Error::CqiOutOfRange(cqi));
    }
    Ok(cqi_table(table)[cqi as usize])
}

/// Highest non-reserved row of an MCS table.
pub fn top_mcs(table: McsTableId) -> McsEntry {
    *mcs_table(table)
        .iter()
        .rev()
        .find(|e| !e.reserved)
        .expect("every MCS table has usable rows")
}

pub fn max_spectral_efficiency(table: McsTableId) -> f64 {
    mcs_table(table)
        .iter()
        .filter(|e| !e.reserved)
        .map(|e| e.spectral_efficiency)
        .fold(0.0, f64::max)
}

/// Ratio of the peak spectral efficiencies of two MCS tables.
pub fn peak_spectral_ratio(a: McsTableId, b: McsTableId) -> f64 {
    max_spectral_efficiency(a) / max_spectral_efficiency(b)
}

// ---------------------------------------------------------------------------
// Transcription checksums
// ---------------------------------------------------------------------------

fn digest_lines<I: IntoIterator<Item = String>>(lines: I) -> String {
    let mut hasher = Sha256::new();
    for line in lines {
        hasher.update(line.as_bytes());
        hasher.update(b"\n");
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// SHA-256 over the canonical `(index, Qm, rate, SE)` sequence of an MCS table.
pub fn mcs_table_checksum(table: McsTableId) -> String {
    digest_lines(mcs_table(table).iter().map(|e| {
        if e.reserved {
            format!("{},{},reserved", e.index, e.qm)
        } else {
            format!(
                "{},{},{},{:.4}",
                e.index, e.qm, e.code_rate_x1024, e.spectral_efficiency
            )
        }
    }))
}

pub fn cqi_table_checksum(table: CqiTableId) -> String {
    digest_lines(cqi_table(table).iter().map(|e| {
        if e.out_of_range {
            format!("{},out_of_range", e.cqi)
        } else {
            format!(
                "{},{},{},{:.4}",
                e.cqi, e.qm, e.code_rate_x1024, e.spectral_efficiency
            )
        }
    }))
}

/// Renders an MCS table as CSV (`index,qm,modulation,rate_x1024,se,reserved`).
pub fn mcs_table_csv(table: McsTableId) -> String {
    let mut out = String::from("index,qm,modulation,rate_x1024,se,reserved\n");
    for e in mcs_table(table) {
        if e.reserved {
            out.push_str(&format!(
                "{},{},{},,,1\n",
                e.index,
                e.qm,
                e.modulation_name()
            ));
        } else {
            out.push_str(&format!(
                "{},{},{},{},{:.4},0\n",
                e.index,
                e.qm,
                e.modulation_name(),
                e.code_rate_x1024,
                e.spectral_efficiency
            ));
        }
    }
    out
}

pub fn cqi_table_csv(table: CqiTableId) -> String {
    let mut out = String::from("cqi,qm,modulation,rate_x1024,se\n");
    for e in cqi_table(table) {
        if e.out_of_range {
            out.push_str(&format!("{},,out of range,,\n", e.cqi));
        } else {
            out.push_str(&format!(
                "{},{},{},{},{:.4}\n",
                e.cqi,
                e.qm,
                modulation_name(e.qm),
                e.code_rate_x1024,
                e.spectral_efficiency
            ));
        }
    }
    out
}
