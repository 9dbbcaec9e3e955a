//! Inner-loop MCS selection from CQI, outer-loop SINR offset control from
//! HARQ feedback, and hysteresis-based switching between the qam64 and
//! qam256 tables.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nr_tables::{lookup_cqi, mcs_table, CqiTableId, McsEntry, McsTableId};
use crate::phy::{snr_at_bler50, BlerModel, Feedback};

pub const OLLA_OFFSET_LIMIT_DB: f64 = 15.0;

/// Half-width of the adaptive-table hysteresis band around the derived crossover.
pub const SWITCH_HYSTERESIS_DB: f64 = 3.0;

// ---------------------------------------------------------------------------
// Outer loop
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OllaState {
    pub offset_db: f64,
    pub step_down_db: f64,
    pub step_up_db: f64,
    pub target_bler: f64,
}

impl OllaState {
    /// Steps sized so that the fixed point sits at `target_bler` NACKs.
    pub fn new(target_bler: f64, step_down_db: f64) -> Result<Self> {
        if !(target_bler > 0.0 && target_bler < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "olla target {target_bler} not in (0, 1)"
            )));
        }
        if !(step_down_db > 0.0) {
            return Err(Error::InvalidConfig("olla step must be > 0".into()));
        }
        Ok(Self {
            offset_db: 0.0,
            step_down_db,
            step_up_db: step_down_db * target_bler / (1.0 - target_bler),
            target_bler,
        })
    }

    pub fn update(&mut self, feedback: Feedback) {
        *self = olla_update(*self, feedback);
    }
}

pub fn olla_update(olla: OllaState, feedback: Feedback) -> OllaState {
    let delta = match feedback {
        Feedback::Ack => olla.step_up_db,
        Feedback::Nack => -olla.step_down_db,
    };
    OllaState {
        offset_db: (olla.offset_db + delta).clamp(-OLLA_OFFSET_LIMIT_DB, OLLA_OFFSET_LIMIT_DB),
        ..olla
    }
}

// ---------------------------------------------------------------------------
// Inner loop
// ---------------------------------------------------------------------------

/// Highest usable MCS whose 50%-BLER SNR does not exceed the CQI-implied
/// SINR plus the outer-loop offset. Falls back to index 0.
pub fn illa_select_mcs(
    cqi: u8,
    cqi_table: CqiTableId,
    table: McsTableId,
    olla: &OllaState,
    model: &BlerModel,
) -> Result<McsEntry> {
    if cqi == 0 {
        return Err(Error::CqiOutOfRangeScheduled);
    }
    let row = lookup_cqi(cqi_table, i64::from(cqi))?;
    let sinr_est = snr_at_bler50(row.spectral_efficiency, model) + olla.offset_db;
    let rows = mcs_table(table);
    Ok(rows
        .iter()
        .rev()
        .filter(|e| !e.reserved)
        .find(|e| snr_at_bler50(e.spectral_efficiency, model) <= sinr_est)
        .copied()
        .unwrap_or(rows[0]))
}

// ---------------------------------------------------------------------------
// Table selection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableModeKind {
    Fixed1,
    Fixed2,
    Fixed4,
    Adaptive,
}

impl TableModeKind {
    pub fn fixed(table: McsTableId) -> Self {
        match table {
            McsTableId::Table1 => TableModeKind::Fixed1,
            McsTableId::Table2 => TableModeKind::Fixed2,
            McsTableId::Table4 => TableModeKind::Fixed4,
        }
    }

    /// Table used before any channel report arrives.
    pub fn initial_table(self) -> McsTableId {
        match self {
            TableModeKind::Fixed1 | TableModeKind::Adaptive => McsTableId::Table1,
            TableModeKind::Fixed2 => McsTableId::Table2,
            TableModeKind::Fixed4 => McsTableId::Table4,
        }
    }
}

impl fmt::Display for TableModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableModeKind::Fixed1 => "1",
            TableModeKind::Fixed2 => "2",
            TableModeKind::Fixed4 => "4",
            TableModeKind::Adaptive => "adaptive",
        })
    }
}

impl FromStr for TableModeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "adaptive" | "a" => Ok(TableModeKind::Adaptive),
            other => other.parse::<McsTableId>().map(TableModeKind::fixed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableMode {
    pub mode: TableModeKind,
    pub switch_up_sinr_db: f64,
    pub switch_down_sinr_db: f64,
}

impl TableMode {
    pub fn fixed(table: McsTableId) -> Self {
        let (up, down) = derived_switch_thresholds(&BlerModel::default());
        Self {
            mode: TableModeKind::fixed(table),
            switch_up_sinr_db: up,
            switch_down_sinr_db: down,
        }
    }

    pub fn adaptive(model: &BlerModel) -> Self {
        let (up, down) = derived_switch_thresholds(model);
        Self {
            mode: TableModeKind::Adaptive,
            switch_up_sinr_db: up,
            switch_down_sinr_db: down,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.switch_up_sinr_db > self.switch_down_sinr_db) {
            return Err(Error::InvalidConfig(format!(
                "table.switch_up_db ({}) must exceed table.switch_down_db ({})",
                self.switch_up_sinr_db, self.switch_down_sinr_db
            )));
        }
        Ok(())
    }
}

pub fn select_table(mode: &TableMode, filtered_sinr_db: f64, current: McsTableId) -> McsTableId {
    match mode.mode {
        TableModeKind::Fixed1 => McsTableId::Table1,
        TableModeKind::Fixed2 => McsTableId::Table2,
        TableModeKind::Fixed4 => McsTableId::Table4,
        TableModeKind::Adaptive => {
            if filtered_sinr_db >= mode.switch_up_sinr_db {
                McsTableId::Table2
            } else if filtered_sinr_db <= mode.switch_down_sinr_db {
                McsTableId::Table1
            } else {
                current
            }
        }
    }
}

fn goodput(se: f64, sinr_db: f64, model: &BlerModel) -> f64 {
    let x = model.waterfall_slope_per_db * (sinr_db - snr_at_bler50(se, model));
    se / (1.0 + (-x).exp())
}

/// Lowest SINR (0.01 dB grid) at which some 256QAM row of table 2 has a
/// higher expected first-transmission goodput than every row of table 1.
pub fn goodput_crossover_db(model: &BlerModel) -> f64 {
    let ses = |table: McsTableId, min_qm: u8| -> Vec<f64> {
        mcs_table(table)
            .iter()
            .filter(|e| !e.reserved && e.qm >= min_qm)
            .map(|e| e.spectral_efficiency)
            .collect()
    };
    let table1 = ses(McsTableId::Table1, 0);
    let qam256 = ses(McsTableId::Table2, 8);
    let best = |rows: &[f64], s: f64| {
        rows.iter()
            .map(|&se| goodput(se, s, model))
            .fold(0.0, f64::max)
    };
    (0..=6000)
        .map(|i| -10.0 + 0.01 * f64::from(i))
        .find(|&s| best(&qam256, s) > best(&table1, s))
        .unwrap_or(f64::INFINITY)
}

/// `(switch_up, switch_down)` = crossover +/- the hysteresis half-width.
pub fn derived_switch_thresholds(model: &BlerModel) -> (f64, f64) {
    let c = goodput_crossover_db(model);
    (c + SWITCH_HYSTERESIS_DB, c - SWITCH_HYSTERESIS_DB)
}
