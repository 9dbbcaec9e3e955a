//! Mobility trajectories, the slot-by-slot simulation loop and distance sweeps.
//!
//! A run is fully determined by its [`ScenarioConfig`] (including the seed):
//! shadowing, fast fading and CRC draws each use their own labelled random
//! stream derived from the master seed.

use std::fmt;

use rayon::prelude::*;

use crate::channel::{sample_link, ChannelState, FadingParams, LinkBudget};
use crate::error::{Error, Result};
use crate::link_adapt::{OllaState, TableMode, TableModeKind};
use crate::mac::{
    MacConfig, MetricsAccumulator, RunMetrics, SlotRecord, UeScheduler, SYMBOLS_PER_SLOT,
};
use crate::phy::{bler, draw_crc, BlerModel};
use crate::rng::{substream, Stream};

pub const WALKING_SPEED_MPS: f64 = 1.375;
pub const BIKING_SPEED_MPS: f64 = 6.7;
/// How far the walking route takes the UE beyond its start point.
pub const WALK_EXCURSION_M: f64 = 45.0;
pub const BIKING_DURATION_S: f64 = 30.0;
/// Walking duration used by the original MATLAB runs; shorter than a full
/// 90 m round trip at walking speed.
pub const STRICT_WALKING_DURATION_S: f64 = 60.0;
pub const STRICT_BIKING_DURATION_S: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioKind {
    Stationary,
    /// Out to `WALK_EXCURSION_M` beyond the start and back, repeatedly.
    Walking,
    /// Straight away from the gNB.
    Biking,
    /// Constant distance; speed only drives the Doppler spread.
    FixedDistance(f64),
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioKind::Stationary => f.write_str("stationary"),
            ScenarioKind::Walking => f.write_str("walking"),
            ScenarioKind::Biking => f.write_str("biking"),
            ScenarioKind::FixedDistance(d) => write!(f, "fixed({d})"),
        }
    }
}

impl ScenarioKind {
    pub fn default_speed_mps(&self) -> f64 {
        match self {
            ScenarioKind::Walking => WALKING_SPEED_MPS,
            ScenarioKind::Biking => BIKING_SPEED_MPS,
            ScenarioKind::Stationary | ScenarioKind::FixedDistance(_) => 0.0,
        }
    }

    /// Full walking round trip, biking run length, or one second otherwise.
    pub fn default_duration_s(&self, speed_mps: f64) -> f64 {
        match self {
            ScenarioKind::Walking if speed_mps > 0.0 => 2.0 * WALK_EXCURSION_M / speed_mps,
            ScenarioKind::Biking => BIKING_DURATION_S,
            _ => 1.0,
        }
    }

    pub fn strict_duration_s(&self) -> Option<f64> {
        match self {
            ScenarioKind::Walking => Some(STRICT_WALKING_DURATION_S),
            ScenarioKind::Biking => Some(STRICT_BIKING_DURATION_S),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub initial_distance_m: f64,
    pub duration_s: f64,
    pub speed_mps: f64,
    pub seed: u64,
    pub table_mode: TableMode,
    pub budget: LinkBudget,
    pub fading: FadingParams,
    pub bler: BlerModel,
    pub olla_target_bler: f64,
    pub olla_step_down_db: f64,
    pub mac: MacConfig,
    pub cqi_period_slots: u32,
    pub cqi_delay_slots: u32,
    /// Keep every [`SlotRecord`] in the returned metrics.
    pub keep_records: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let bler = BlerModel::default();
        Self {
            kind: ScenarioKind::Stationary,
            initial_distance_m: 10.0,
            duration_s: 1.0,
            speed_mps: 0.0,
            seed: 1,
            table_mode: TableMode::fixed(crate::McsTableId::Table2),
            budget: LinkBudget::default(),
            fading: FadingParams::default(),
            bler,
            olla_target_bler: 0.1,
            olla_step_down_db: 0.5,
            mac: MacConfig::default(),
            cqi_period_slots: 40,
            cqi_delay_slots: 8,
            keep_records: false,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) {
            return Err(Error::InvalidConfig(
                "scenario.duration_s must be > 0".into(),
            ));
        }
        if !(self.speed_mps >= 0.0) {
            return Err(Error::InvalidConfig(
                "scenario.speed_mps must be >= 0".into(),
            ));
        }
        if self.kind == ScenarioKind::Stationary && self.speed_mps != 0.0 {
            return Err(Error::InvalidConfig(
                "stationary scenario requires speed 0".into(),
            ));
        }
        let d = match self.kind {
            ScenarioKind::FixedDistance(d) => d,
            _ => self.initial_distance_m,
        };
        if !(d > 0.0) {
            return Err(Error::InvalidConfig("distance must be > 0".into()));
        }
        if self.cqi_period_slots == 0 {
            return Err(Error::InvalidConfig("cqi.period_slots must be >= 1".into()));
        }
        if self.mac.n_prb != self.budget.n_prb {
            return Err(Error::InvalidConfig(
                "scheduled PRBs must match the budget bandwidth".into(),
            ));
        }
        self.budget.validate()?;
        self.fading.validate()?;
        self.bler.validate()?;
        self.table_mode.validate()?;
        self.mac.validate()?;
        OllaState::new(self.olla_target_bler, self.olla_step_down_db)?;
        Ok(())
    }

    pub fn n_slots(&self) -> u64 {
        let per_s = self.mac.tdd.slots_per_second();
        let slots = (self.duration_s * per_s - 1e-9).ceil().max(0.0) as u64;
        slots.max(u64::from(self.mac.tdd.period_slots))
    }
}

// ---------------------------------------------------------------------------
// Trajectory
// ---------------------------------------------------------------------------

pub fn trajectory_distance(cfg: &ScenarioConfig, t_s: f64) -> Result<f64> {
    if !(t_s >= 0.0 && t_s <= cfg.duration_s + 1e-9) {
        return Err(Error::TimeOutsideRun {
            t_s,
            duration_s: cfg.duration_s,
        });
    }
    Ok(distance_at(cfg, t_s))
}

fn distance_at(cfg: &ScenarioConfig, t_s: f64) -> f64 {
    let d0 = cfg.initial_distance_m;
    match cfg.kind {
        ScenarioKind::Stationary => d0,
        ScenarioKind::FixedDistance(d) => d,
        ScenarioKind::Biking => d0 + cfg.speed_mps * t_s,
        ScenarioKind::Walking => {
            let travelled = (cfg.speed_mps * t_s) % (2.0 * WALK_EXCURSION_M);
            if travelled <= WALK_EXCURSION_M {
                d0 + travelled
            } else {
                d0 + 2.0 * WALK_EXCURSION_M - travelled
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Slot loop
// ---------------------------------------------------------------------------

/// Runs one scenario slot by slot.
///
/// Per slot: move the UE, advance shadowing and fading, sample the link,
/// deliver due HARQ feedback, refresh the channel report on CQI occasions
/// (using the SINR seen `cqi_delay_slots` earlier), schedule, then draw the CRC.
pub fn run(cfg: &ScenarioConfig) -> Result<RunMetrics> {
    cfg.validate()?;

    let n_slots = cfg.n_slots();
    let slot_s = cfg.mac.tdd.slot_duration_s;
    let olla = OllaState::new(cfg.olla_target_bler, cfg.olla_step_down_db)?;
    let mut ue = UeScheduler::new(cfg.mac, cfg.table_mode, cfg.bler, olla);
    let mut channel = ChannelState::new(
        distance_at(cfg, 0.0),
        &cfg.fading,
        substream(cfg.seed, Stream::Shadow),
        substream(cfg.seed, Stream::Fading),
    );
    let mut crc_rng = substream(cfg.seed, Stream::Crc);

    let history_len = cfg.cqi_delay_slots as usize + 1;
    let mut sinr_history = vec![0.0; history_len];
    let mut acc = MetricsAccumulator::default();
    let mut scheduled_symbols = 0u64;
    let mut records = cfg.keep_records.then(Vec::new);

    for slot in 0..n_slots {
        let t = (slot as f64 * slot_s).min(cfg.duration_s);
        let d = distance_at(cfg, t);
        channel.advance_shadow(d, cfg.fading.shadow_sigma_db, cfg.fading.shadow_decorr_m);
        let dt = if slot == 0 { 0.0 } else { slot_s };
        channel.advance_fading(dt, cfg.speed_mps, &cfg.budget, cfg.fading.k_factor_db);
        let link = sample_link(d, &channel, &cfg.budget);

        sinr_history[slot as usize % history_len] = link.sinr_db;
        ue.deliver_feedback(slot)?;
        if slot % u64::from(cfg.cqi_period_slots) == 0 {
            let observed = slot.saturating_sub(u64::from(cfg.cqi_delay_slots));
            ue.report_channel(sinr_history[observed as usize % history_len]);
        }

        let Some(tx) = ue.schedule_slot(slot) else {
            continue;
        };
        let p = bler(link.sinr_db, &tx.mcs, tx.tx_count, &cfg.bler)?;
        let feedback = draw_crc(p, &mut crc_rng);
        ue.record_outcome(&tx, slot, feedback);

        let record = SlotRecord {
            slot,
            time_s: slot as f64 * slot_s,
            distance_m: d,
            rsrp_dbm: link.rsrp_dbm,
            sinr_db: link.sinr_db,
            table: tx.mcs.table,
            mcs_index: tx.mcs.index,
            qm: tx.mcs.qm,
            n_prb: cfg.mac.n_prb,
            tbs_bits: tx.tbs_bits,
            new_tx: tx.new_tx,
            ack: feedback.is_ack(),
        };
        acc.push(&record);
        scheduled_symbols += u64::from(tx.dl_symbols);
        if let Some(r) = records.as_mut() {
            r.push(record);
        }
    }

    let duration = n_slots as f64 * slot_s;
    Ok(RunMetrics {
        dropped_tbs: ue.dropped_tbs,
        total_slots: n_slots,
        scheduled_symbol_fraction: scheduled_symbols as f64
            / (n_slots as f64 * f64::from(SYMBOLS_PER_SLOT)),
        slot_records: records,
        ..acc.finish(duration)
    })
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub distance_m: f64,
    pub table: TableModeKind,
    pub seed: u64,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub distance_m: f64,
    pub table: TableModeKind,
    pub n_seeds: usize,
    pub mean_mac_bps: f64,
    pub std_mac_bps: f64,
    pub mean_phy_bps: f64,
    pub mean_retx_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// One row per (distance, table, seed), in input order.
    pub rows: Vec<SweepRow>,
    /// Seed statistics per (distance, table).
    pub curve: Vec<CurvePoint>,
}

impl SweepResult {
    pub fn point(&self, distance_m: f64, table: TableModeKind) -> Option<&CurvePoint> {
        self.curve
            .iter()
            .find(|p| p.table == table && (p.distance_m - distance_m).abs() < 1e-9)
    }
}

/// Config for one fixed-distance point of a sweep; the template's speed is
/// kept so the fast fading matches its mobility class.
pub fn sweep_point_config(
    template: &ScenarioConfig,
    distance_m: f64,
    table: TableModeKind,
    seed: u64,
) -> ScenarioConfig {
    let mut cfg = template.clone();
    cfg.kind = ScenarioKind::FixedDistance(distance_m);
    cfg.initial_distance_m = distance_m;
    cfg.table_mode.mode = table;
    cfg.seed = seed;
    cfg.keep_records = false;
    cfg
}

/// Runs every (distance, table, seed) combination on the current rayon pool.
pub fn sweep(
    template: &ScenarioConfig,
    distances: &[f64],
    tables: &[TableModeKind],
    seeds: &[u64],
) -> Result<SweepResult> {
    if distances.iter().any(|d| !(*d > 0.0)) || distances.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(
            "sweep distances must be positive and ascending".into(),
        ));
    }
    let jobs: Vec<(f64, TableModeKind, u64)> = distances
        .iter()
        .flat_map(|&d| {
            tables
                .iter()
                .flat_map(move |&t| seeds.iter().map(move |&s| (d, t, s)))
        })
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(d, t, s)| {
            run(&sweep_point_config(template, d, t, s)).map(|metrics| SweepRow {
                distance_m: d,
                table: t,
                seed: s,
                metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let curve = rows
        .chunks(seeds.len().max(1))
        .filter(|c| !c.is_empty())
        .map(|chunk| {
            let n = chunk.len() as f64;
            let mean = chunk
                .iter()
                .map(|r| r.metrics.mac_throughput_bps)
                .sum::<f64>()
                / n;
            let var = if chunk.len() > 1 {
                chunk
                    .iter()
                    .map(|r| (r.metrics.mac_throughput_bps - mean).powi(2))
                    .sum::<f64>()
                    / (n - 1.0)
            } else {
                0.0
            };
            CurvePoint {
                distance_m: chunk[0].distance_m,
                table: chunk[0].table,
                n_seeds: chunk.len(),
                mean_mac_bps: mean,
                std_mac_bps: var.sqrt(),
                mean_phy_bps: chunk
                    .iter()
                    .map(|r| r.metrics.phy_throughput_bps)
                    .sum::<f64>()
                    / n,
                mean_retx_rate: chunk.iter().map(|r| r.metrics.retx_rate).sum::<f64>() / n,
            }
        })
        .collect();
    Ok(SweepResult { rows, curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nr_tables::McsTableId;
    use approx::assert_abs_diff_eq;

    fn walking() -> ScenarioConfig {
        ScenarioConfig {
            kind: ScenarioKind::Walking,
            speed_mps: WALKING_SPEED_MPS,
            duration_s: 2.0 * WALK_EXCURSION_M / WALKING_SPEED_MPS,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn walking_profile() {
        let cfg = walking();
        assert_eq!(trajectory_distance(&cfg, 0.0).unwrap(), 10.0);
        let apex = WALK_EXCURSION_M / WALKING_SPEED_MPS;
        assert_abs_diff_eq!(
            trajectory_distance(&cfg, apex).unwrap(),
            55.0,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            trajectory_distance(&cfg, cfg.duration_s).unwrap(),
            10.0,
            epsilon = 1e-6
        );
        assert!(trajectory_distance(&cfg, cfg.duration_s + 1.0).is_err());
        assert!(trajectory_distance(&cfg, -0.1).is_err());
    }

    #[test]
    fn biking_profile() {
        let cfg = ScenarioConfig {
            kind: ScenarioKind::Biking,
            speed_mps: BIKING_SPEED_MPS,
            duration_s: 30.0,
            ..ScenarioConfig::default()
        };
        assert_abs_diff_eq!(
            trajectory_distance(&cfg, 30.0).unwrap(),
            211.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn trajectory_is_continuous() {
        let cfg = walking();
        let dt = 1e-3;
        let mut prev = trajectory_distance(&cfg, 0.0).unwrap();
        let mut t = dt;
        while t <= cfg.duration_s {
            let d = trajectory_distance(&cfg, t).unwrap();
            assert!((d - prev).abs() <= cfg.speed_mps * dt + 1e-9);
            prev = d;
            t += dt;
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = ScenarioConfig {
            duration_s: 0.0,
            ..ScenarioConfig::default()
        };
        assert!(run(&bad).is_err());
        let bad = ScenarioConfig {
            speed_mps: 1.0,
            ..ScenarioConfig::default()
        };
        assert!(matches!(run(&bad), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn short_run_is_well_defined() {
        let cfg = ScenarioConfig {
            duration_s: 0.01,
            ..ScenarioConfig::default()
        };
        let m = run(&cfg).unwrap();
        assert_eq!(m.total_slots, 80);
        assert!(m.transmissions > 0);
        assert!(m.mac_throughput_bps <= m.phy_throughput_bps);
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = ScenarioConfig {
            duration_s: 0.2,
            keep_records: true,
            ..walking()
        };
        assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
        let other = ScenarioConfig {
            seed: 2,
            ..cfg.clone()
        };
        assert_ne!(run(&cfg).unwrap(), run(&other).unwrap());
    }

    #[test]
    fn sweep_reduces_to_run() {
        let template = ScenarioConfig {
            duration_s: 0.05,
            table_mode: TableMode::fixed(McsTableId::Table1),
            ..ScenarioConfig::default()
        };
        let res = sweep(&template, &[120.0], &[TableModeKind::Fixed2], &[9]).unwrap();
        let direct = run(&sweep_point_config(
            &template,
            120.0,
            TableModeKind::Fixed2,
            9,
        ))
        .unwrap();
        assert_eq!(res.rows.len(), 1);
        assert_eq!(res.rows[0].metrics, direct);
        assert_eq!(res.curve[0].mean_mac_bps, direct.mac_throughput_bps);
        assert!(sweep(&template, &[20.0, 10.0], &[TableModeKind::Fixed2], &[1]).is_err());
    }
}
