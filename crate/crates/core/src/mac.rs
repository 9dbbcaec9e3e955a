//! TDD airtime, HARQ bookkeeping, single-UE full-buffer scheduling and the
//! throughput / retransmission accounting of a run.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::link_adapt::{illa_select_mcs, select_table, OllaState, TableMode};
use crate::nr_tables::{compute_tbs, McsEntry, McsTableId, TbsInput};
use crate::phy::{select_cqi, BlerModel, Feedback};

pub const SYMBOLS_PER_SLOT: u32 = 14;

// ---------------------------------------------------------------------------
// TDD pattern
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Downlink,
    Special,
    Uplink,
}

/// Periodic `D..D S U..U` slot pattern with one special slot per period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TddPattern {
    pub period_slots: u32,
    pub dl_slots: u32,
    pub special_dl_symbols: u32,
    pub special_ul_symbols: u32,
    pub ul_slots: u32,
    pub slot_duration_s: f64,
}

impl Default for TddPattern {
    /// DDDSU at 120 kHz SCS, special slot 10 DL / 1 UL symbols.
    fn default() -> Self {
        Self {
            period_slots: 5,
            dl_slots: 3,
            special_dl_symbols: 10,
            special_ul_symbols: 1,
            ul_slots: 1,
            slot_duration_s: 1.0 / 8000.0,
        }
    }
}

impl TddPattern {
    pub fn validate(&self) -> Result<()> {
        if self.dl_slots + self.ul_slots + 1 != self.period_slots {
            return Err(Error::InvalidConfig(format!(
                "TDD period {} != {} DL + 1 special + {} UL",
                self.period_slots, self.dl_slots, self.ul_slots
            )));
        }
        if self.special_dl_symbols + self.special_ul_symbols > SYMBOLS_PER_SLOT {
            return Err(Error::InvalidConfig(
                "special slot symbols exceed 14".into(),
            ));
        }
        if self.ul_slots == 0 {
            return Err(Error::InvalidConfig(
                "at least one UL slot is needed for HARQ feedback".into(),
            ));
        }
        if !(self.slot_duration_s > 0.0) {
            return Err(Error::InvalidConfig("slot duration must be > 0".into()));
        }
        Ok(())
    }

    pub fn slot_kind(&self, slot_index: u64) -> SlotKind {
        let pos = (slot_index % u64::from(self.period_slots)) as u32;
        if pos < self.dl_slots {
            SlotKind::Downlink
        } else if pos == self.dl_slots {
            SlotKind::Special
        } else {
            SlotKind::Uplink
        }
    }

    pub fn slots_per_second(&self) -> f64 {
        1.0 / self.slot_duration_s
    }

    /// Share of slot-symbols usable for downlink over one period.
    pub fn dl_symbol_fraction(&self) -> f64 {
        let dl = self.dl_slots * SYMBOLS_PER_SLOT + self.special_dl_symbols;
        f64::from(dl) / f64::from(self.period_slots * SYMBOLS_PER_SLOT)
    }

    /// First UL slot at least `min_gap` slots after `tx_slot`.
    pub fn feedback_slot(&self, tx_slot: u64, min_gap: u64) -> u64 {
        (tx_slot + min_gap..)
            .find(|&s| self.slot_kind(s) == SlotKind::Uplink)
            .expect("validated pattern has UL slots")
    }
}

pub fn dl_symbols_in_slot(pattern: &TddPattern, slot_index: u64) -> u32 {
    match pattern.slot_kind(slot_index) {
        SlotKind::Downlink => SYMBOLS_PER_SLOT,
        SlotKind::Special => pattern.special_dl_symbols,
        SlotKind::Uplink => 0,
    }
}

// ---------------------------------------------------------------------------
// HARQ
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarqProcess {
    pub id: u8,
    pub tb_bits: u32,
    pub mcs: McsEntry,
    pub tx_count: u32,
    pub max_tx: u32,
    pub active: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarqOutcome {
    Completed,
    Retransmit,
    /// Retry budget exhausted; the TB is lost.
    Dropped,
}

pub fn process_feedback(process: &mut HarqProcess, feedback: Feedback) -> Result<HarqOutcome> {
    if !process.active {
        return Err(Error::InactiveProcess(process.id));
    }
    Ok(match feedback {
        Feedback::Ack => {
            process.active = false;
            HarqOutcome::Completed
        }
        Feedback::Nack if process.tx_count < process.max_tx => {
            process.tx_count += 1;
            HarqOutcome::Retransmit
        }
        Feedback::Nack => {
            process.active = false;
            HarqOutcome::Dropped
        }
    })
}

// ---------------------------------------------------------------------------
// Slot records
// ---------------------------------------------------------------------------

/// Outcome of one scheduled downlink slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRecord {
    pub slot: u64,
    pub time_s: f64,
    pub distance_m: f64,
    pub rsrp_dbm: f64,
    pub sinr_db: f64,
    pub table: McsTableId,
    pub mcs_index: u8,
    pub qm: u8,
    pub n_prb: u32,
    pub tbs_bits: u32,
    pub new_tx: bool,
    pub ack: bool,
}

// ---------------------------------------------------------------------------
// Scheduler
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacConfig {
    pub tdd: TddPattern,
    pub n_prb: u32,
    pub n_layers: u32,
    pub dmrs_re_per_prb: u32,
    pub x_overhead: u32,
    /// PDCCH symbols taken from each downlink slot.
    pub control_symbols: u32,
    pub max_tx: u32,
    pub harq_processes: u8,
    /// Minimum slots between a PDSCH and its HARQ-ACK.
    pub feedback_delay_slots: u64,
}

impl Default for MacConfig {
    fn default() -> Self {
        Self {
            tdd: TddPattern::default(),
            n_prb: 66,
            n_layers: 2,
            dmrs_re_per_prb: 12,
            x_overhead: 0,
            control_symbols: 1,
            max_tx: 4,
            harq_processes: 16,
            feedback_delay_slots: 2,
        }
    }
}

impl MacConfig {
    pub fn validate(&self) -> Result<()> {
        self.tdd.validate()?;
        if self.max_tx == 0 {
            return Err(Error::InvalidConfig("harq.max_tx must be >= 1".into()));
        }
        if !(1..=16).contains(&self.harq_processes) {
            return Err(Error::InvalidConfig(
                "harq.processes must be in 1..=16".into(),
            ));
        }
        if !(1..=4).contains(&self.n_layers) {
            return Err(Error::InvalidConfig("phy.n_layers must be in 1..=4".into()));
        }
        if self.n_prb == 0 {
            return Err(Error::InvalidConfig("n_prb must be >= 1".into()));
        }
        Ok(())
    }
}

/// A transmission decided by the scheduler, before its CRC is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    pub process_id: u8,
    pub mcs: McsEntry,
    pub tbs_bits: u32,
    pub tx_count: u32,
    pub new_tx: bool,
    pub dl_symbols: u32,
}

#[derive(Debug, Clone, Copy)]
struct PendingFeedback {
    process_id: u8,
    due_slot: u64,
    feedback: Feedback,
    first_tx: bool,
}

/// Per-UE MAC state: HARQ processes, link adaptation and the latest channel report.
#[derive(Debug, Clone)]
pub struct UeScheduler {
    cfg: MacConfig,
    table_mode: TableMode,
    bler_model: BlerModel,
    pub olla: OllaState,
    pub current_table: McsTableId,
    reported_sinr_db: Option<f64>,
    filtered_sinr_db: Option<f64>,
    processes: Vec<HarqProcess>,
    retx_queue: VecDeque<u8>,
    pending: VecDeque<PendingFeedback>,
    pub dropped_tbs: u64,
}

/// Smoothing weight of a new report in the filtered SINR used for table switching.
const SINR_FILTER_WEIGHT: f64 = 0.25;

impl UeScheduler {
    pub fn new(
        cfg: MacConfig,
        table_mode: TableMode,
        bler_model: BlerModel,
        olla: OllaState,
    ) -> Self {
        let placeholder = crate::nr_tables::mcs_table(McsTableId::Table1)[0];
        let processes = (0..cfg.harq_processes)
            .map(|id| HarqProcess {
                id,
                tb_bits: 0,
                mcs: placeholder,
                tx_count: 0,
                max_tx: cfg.max_tx,
                active: false,
            })
            .collect();
        Self {
            cfg,
            table_mode,
            bler_model,
            olla,
            current_table: table_mode.mode.initial_table(),
            reported_sinr_db: None,
            filtered_sinr_db: None,
            processes,
            retx_queue: VecDeque::new(),
            pending: VecDeque::new(),
            dropped_tbs: 0,
        }
    }

    pub fn config(&self) -> &MacConfig {
        &self.cfg
    }

    /// Applies a (possibly stale) channel report and re-evaluates the MCS table.
    pub fn report_channel(&mut self, sinr_db: f64) {
        self.reported_sinr_db = Some(sinr_db);
        let filtered = match self.filtered_sinr_db {
            Some(prev) => prev + SINR_FILTER_WEIGHT * (sinr_db - prev),
            None => sinr_db,
        };
        self.filtered_sinr_db = Some(filtered);
        self.current_table = select_table(&self.table_mode, filtered, self.current_table);
    }

    pub fn current_cqi(&self) -> u8 {
        self.reported_sinr_db.map_or(0, |s| {
            select_cqi(s, self.current_table.cqi_table(), &self.bler_model)
        })
    }

    pub fn active_processes(&self) -> usize {
        self.processes.iter().filter(|p| p.active).count()
    }

    pub fn pending_retransmissions(&self) -> usize {
        self.retx_queue.len()
    }

    /// Decides what, if anything, goes out in `slot_index`.
    ///
    /// Pending retransmissions take priority (oldest first, same MCS and TBS);
    /// otherwise a new TB is built from the current CQI if a process is free.
    pub fn schedule_slot(&mut self, slot_index: u64) -> Option<Transmission> {
        let dl_symbols = dl_symbols_in_slot(&self.cfg.tdd, slot_index);
        if dl_symbols == 0 {
            return None;
        }
        if let Some(id) = self.retx_queue.pop_front() {
            let p = &self.processes[id as usize];
            return Some(Transmission {
                process_id: id,
                mcs: p.mcs,
                tbs_bits: p.tb_bits,
                tx_count: p.tx_count,
                new_tx: false,
                dl_symbols,
            });
        }

        let cqi = self.current_cqi();
        if cqi == 0 {
            return None;
        }
        let free = self.processes.iter().position(|p| !p.active)?;
        let table = self.current_table;
        let mcs =
            illa_select_mcs(cqi, table.cqi_table(), table, &self.olla, &self.bler_model).ok()?;
        let tbs = compute_tbs(&TbsInput {
            n_prb: self.cfg.n_prb,
            n_symbols_data: dl_symbols.checked_sub(self.cfg.control_symbols)?,
            n_dmrs_re_per_prb: self.cfg.dmrs_re_per_prb,
            x_overhead: self.cfg.x_overhead,
            n_layers: self.cfg.n_layers,
            mcs,
        })
        .ok()?;

        let p = &mut self.processes[free];
        p.tb_bits = tbs;
        p.mcs = mcs;
        p.tx_count = 1;
        p.active = true;
        Some(Transmission {
            process_id: p.id,
            mcs,
            tbs_bits: tbs,
            tx_count: 1,
            new_tx: true,
            dl_symbols,
        })
    }

    /// Queues the CRC outcome of `tx` for the next eligible UL slot.
    pub fn record_outcome(&mut self, tx: &Transmission, slot_index: u64, feedback: Feedback) {
        self.pending.push_back(PendingFeedback {
            process_id: tx.process_id,
            due_slot: self
                .cfg
                .tdd
                .feedback_slot(slot_index, self.cfg.feedback_delay_slots),
            feedback,
            first_tx: tx.new_tx,
        });
    }

    /// Delivers every HARQ-ACK due by `slot_index`.
    ///
    /// Only first-transmission feedback drives the outer loop.
    pub fn deliver_feedback(&mut self, slot_index: u64) -> Result<()> {
        while self
            .pending
            .front()
            .is_some_and(|p| p.due_slot <= slot_index)
        {
            let fb = self.pending.pop_front().expect("front checked");
            if fb.first_tx {
                self.olla.update(fb.feedback);
            }
            match process_feedback(&mut self.processes[fb.process_id as usize], fb.feedback)? {
                HarqOutcome::Completed => {}
                HarqOutcome::Retransmit => self.retx_queue.push_back(fb.process_id),
                HarqOutcome::Dropped => self.dropped_tbs += 1,
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunMetrics {
    pub duration_s: f64,
    pub mac_throughput_bps: f64,
    pub phy_throughput_bps: f64,
    pub retx_rate: f64,
    /// Scheduled-PRB share per modulation order Qm.
    pub modulation_utilization: BTreeMap<u8, f64>,
    pub mean_rsrp_dbm: f64,
    pub transmissions: u64,
    pub retransmissions: u64,
    pub dropped_tbs: u64,
    pub total_slots: u64,
    /// Slot-symbols of scheduled DL slots over all slot-symbols of the run.
    pub scheduled_symbol_fraction: f64,
    pub slot_records: Option<Vec<SlotRecord>>,
}

impl RunMetrics {
    pub fn utilization(&self, qm: u8) -> f64 {
        self.modulation_utilization.get(&qm).copied().unwrap_or(0.0)
    }
}

/// Streaming form of [`accumulate_metrics`], so long runs need not keep records.
#[derive(Debug, Clone, Default)]
pub struct MetricsAccumulator {
    mac_bits: u64,
    phy_bits: u64,
    transmissions: u64,
    retransmissions: u64,
    prb_by_qm: BTreeMap<u8, u64>,
    rsrp_sum: f64,
}

impl MetricsAccumulator {
    pub fn push(&mut self, r: &SlotRecord) {
        self.phy_bits += u64::from(r.tbs_bits);
        if r.ack {
            self.mac_bits += u64::from(r.tbs_bits);
        }
        self.transmissions += 1;
        if !r.new_tx {
            self.retransmissions += 1;
        }
        *self.prb_by_qm.entry(r.qm).or_default() += u64::from(r.n_prb);
        self.rsrp_sum += r.rsrp_dbm;
    }

    pub fn finish(self, duration_s: f64) -> RunMetrics {
        if self.transmissions == 0 || !(duration_s > 0.0) {
            return RunMetrics {
                duration_s: duration_s.max(0.0),
                ..RunMetrics::default()
            };
        }
        let total_prb: u64 = self.prb_by_qm.values().sum();
        let n = self.transmissions as f64;
        RunMetrics {
            duration_s,
            mac_throughput_bps: self.mac_bits as f64 / duration_s,
            phy_throughput_bps: self.phy_bits as f64 / duration_s,
            retx_rate: self.retransmissions as f64 / n,
            modulation_utilization: self
                .prb_by_qm
                .into_iter()
                .map(|(qm, prb)| (qm, prb as f64 / total_prb as f64))
                .collect(),
            mean_rsrp_dbm: self.rsrp_sum / n,
            transmissions: self.transmissions,
            retransmissions: self.retransmissions,
            ..RunMetrics::default()
        }
    }
}

pub fn accumulate_metrics(records: &[SlotRecord], duration_s: f64) -> RunMetrics {
    let mut acc = MetricsAccumulator::default();
    for r in records {
        acc.push(r);
    }
    acc.finish(duration_s)
}
