//! Slow, literal reference implementations used only by tests.
//!
//! Nothing here calls into the library's own arithmetic for the quantity under
//! test; table rows are read from the library only as inputs.

#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use fr2sim::mac::{dl_symbols_in_slot, MacConfig};
use fr2sim::nr_tables::{mcs_table, top_mcs, CqiTableId, McsEntry, McsTableId};

/// One compared case.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub case_id: String,
    pub main: f64,
    pub oracle: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
}

impl OracleReport {
    pub fn new(case_id: impl Into<String>, main: f64, oracle: f64) -> Self {
        let abs_diff = (main - oracle).abs();
        Self {
            case_id: case_id.into(),
            main,
            oracle,
            abs_diff,
            rel_diff: if oracle != 0.0 {
                abs_diff / oracle.abs()
            } else {
                abs_diff
            },
        }
    }
}

/// Summary over a batch of reports; every case is kept, passes included.
pub fn summarize(name: &str, reports: &[OracleReport], abs_tol: f64) -> (usize, Vec<OracleReport>) {
    let failures: Vec<OracleReport> = reports
        .iter()
        .filter(|r| !(r.abs_diff <= abs_tol))
        .cloned()
        .collect();
    let worst = reports.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    println!(
        "{name}: {} cases, {} mismatches, worst |diff| {worst:e}",
        reports.len(),
        failures.len()
    );
    (reports.len(), failures)
}

// ---------------------------------------------------------------------------
// TBS
// ---------------------------------------------------------------------------

/// TS 38.214 Table 5.1.3.2-1, typed in independently of the data file.
pub const SMALL_TBS: [u32; 93] = [
    24, 32, 40, 48, 56, 64, 72, 80, 88, 96, 104, 112, 120, 128, 136, 144, 152, 160, 168, 176, 184,
    192, 208, 224, 240, 256, 272, 288, 304, 320, 336, 352, 368, 384, 408, 432, 456, 480, 504, 528,
    552, 576, 608, 640, 672, 704, 736, 768, 808, 848, 888, 928, 984, 1032, 1064, 1128, 1160, 1192,
    1224, 1256, 1288, 1320, 1352, 1416, 1480, 1544, 1608, 1672, 1736, 1800, 1864, 1928, 2024, 2088,
    2152, 2216, 2280, 2408, 2472, 2536, 2600, 2664, 2728, 2792, 2856, 2976, 3104, 3240, 3368, 3496,
    3624, 3752, 3824,
];

/// Step-by-step transport block size, following the text of the procedure.
pub fn tbs_oracle(
    n_prb: u32,
    n_symbols: u32,
    n_dmrs: u32,
    x_overhead: u32,
    n_layers: u32,
    mcs: &McsEntry,
) -> u32 {
    // Step 1: resource elements
    let n_re_prime = 12 * n_symbols as i64 - n_dmrs as i64 - x_overhead as i64;
    assert!(n_re_prime > 0);
    let n_re = (n_re_prime.min(156) * n_prb as i64) as f64;

    // Step 2: unquantized information bits
    let r = mcs.code_rate_x1024 / 1024.0;
    let qm = mcs.qm as f64;
    let v = n_layers as f64;
    let n_info = n_re * r * qm * v;

    if n_info <= 3824.0 {
        // Step 3
        let n = (n_info.log2().floor() as i32 - 6).max(3);
        let step = 2f64.powi(n);
        let n_info_q = (step * (n_info / step).floor()).max(24.0);
        // closest table entry not less than N'_info
        for &t in SMALL_TBS.iter() {
            if t as f64 >= n_info_q {
                return t;
            }
        }
        unreachable!("N'_info <= 3824 always has a table entry");
    }

    // Step 4
    let n = (n_info - 24.0).log2().floor() as i32 - 5;
    let step = 2f64.powi(n);
    let n_info_q = (step * ((n_info - 24.0) / step).round()).max(3840.0);
    let tbs = if r <= 0.25 {
        let c = ((n_info_q + 24.0) / 3816.0).ceil();
        8.0 * c * ((n_info_q + 24.0) / (8.0 * c)).ceil() - 24.0
    } else if n_info_q > 8424.0 {
        let c = ((n_info_q + 24.0) / 8424.0).ceil();
        8.0 * c * ((n_info_q + 24.0) / (8.0 * c)).ceil() - 24.0
    } else {
        8.0 * ((n_info_q + 24.0) / 8.0).ceil() - 24.0
    };
    tbs as u32
}

// ---------------------------------------------------------------------------
// Path loss
// ---------------------------------------------------------------------------

/// UMi street-canyon LOS, evaluated straight from the formula.
pub fn path_loss_oracle(d2d: f64, fc_ghz: f64, h_bs: f64, h_ut: f64) -> f64 {
    let d2d = if d2d < 10.0 { 10.0 } else { d2d };
    let d3d = (d2d.powi(2) + (h_bs - h_ut).powi(2)).sqrt();
    let d_bp = 4.0 * (h_bs - 1.0) * (h_ut - 1.0) * fc_ghz * 1.0e9 / 3.0e8;
    let pl1 = 32.4 + 21.0 * d3d.log10() + 20.0 * fc_ghz.log10();
    if d2d <= d_bp {
        pl1
    } else {
        32.4 + 40.0 * d3d.log10() + 20.0 * fc_ghz.log10()
            - 9.5 * (d_bp.powi(2) + (h_bs - h_ut).powi(2)).log10()
    }
}

// ---------------------------------------------------------------------------
// ILLA
// ---------------------------------------------------------------------------

/// Scans every MCS row from index 0 up, keeping the last usable one whose
/// 50% point lies at or below the CQI point plus `offset_db`.
pub fn illa_scan_oracle(cqi_se: f64, table: McsTableId, offset_db: f64, gap_db: f64) -> u8 {
    let target = 10.0 * (2f64.powf(cqi_se) - 1.0).log10() + gap_db + offset_db;
    let mut chosen = 0u8;
    for row in mcs_table(table) {
        if row.reserved {
            continue;
        }
        let need = 10.0 * (2f64.powf(row.spectral_efficiency) - 1.0).log10() + gap_db;
        if need <= target {
            chosen = row.index;
        }
    }
    chosen
}

pub fn cqi_se(table: CqiTableId, cqi: u8) -> f64 {
    fr2sim::nr_tables::cqi_table(table)[cqi as usize].spectral_efficiency
}

// ---------------------------------------------------------------------------
// Peak throughput
// ---------------------------------------------------------------------------

/// Slots per second times the period-averaged TBS at the top MCS, every DL
/// and special slot carrying one new TB.
pub fn peak_throughput_closed_form(table: McsTableId, mac: &MacConfig) -> f64 {
    let top = top_mcs(table);
    let period = mac.tdd.period_slots as u64;
    let bits_per_period: u64 = (0..period)
        .map(|s| dl_symbols_in_slot(&mac.tdd, s))
        .filter(|&sym| sym > mac.control_symbols)
        .map(|sym| {
            tbs_oracle(
                mac.n_prb,
                sym - mac.control_symbols,
                mac.dmrs_re_per_prb,
                mac.x_overhead,
                mac.n_layers,
                &top,
            ) as u64
        })
        .sum();
    bits_per_period as f64 / (period as f64 * mac.tdd.slot_duration_s)
}
