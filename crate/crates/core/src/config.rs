//! Run configuration: flat `key = value` files with `#` comments, bundled
//! presets, and per-key provenance for the reproducibility header.
//!
//! Every key has a default, so an empty file is a valid configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::channel::{FadingParams, LinkBudget};
use crate::error::{Error, Result};
use crate::link_adapt::{derived_switch_thresholds, TableMode, TableModeKind};
use crate::mac::MacConfig;
use crate::phy::BlerModel;
use crate::scenario::{ScenarioConfig, ScenarioKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Float,
    /// Float or `auto` (derived from other settings).
    FloatOrAuto,
    /// Float or `none`.
    FloatOrNone,
    Int,
    Bool,
    Scenario,
    Table,
}

impl ValueKind {
    fn expected(self) -> &'static str {
        match self {
            ValueKind::Float => "a number",
            ValueKind::FloatOrAuto => "a number or `auto`",
            ValueKind::FloatOrNone => "a number or `none`",
            ValueKind::Int => "a non-negative integer",
            ValueKind::Bool => "true or false",
            ValueKind::Scenario => "one of stationary, walking, biking, fixed",
            ValueKind::Table => "one of 1, 2, 4, adaptive",
        }
    }

    fn check(self, v: &str) -> bool {
        match self {
            ValueKind::Float => v.parse::<f64>().is_ok_and(f64::is_finite),
            ValueKind::FloatOrAuto => v == "auto" || ValueKind::Float.check(v),
            ValueKind::FloatOrNone => v == "none" || ValueKind::Float.check(v),
            ValueKind::Int => v.parse::<u64>().is_ok(),
            ValueKind::Bool => matches!(v, "true" | "false"),
            ValueKind::Scenario => matches!(v, "stationary" | "walking" | "biking" | "fixed"),
            ValueKind::Table => v.parse::<TableModeKind>().is_ok(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub key: &'static str,
    pub kind: ValueKind,
    pub default: &'static str,
    pub doc: &'static str,
}

const fn key(
    key: &'static str,
    kind: ValueKind,
    default: &'static str,
    doc: &'static str,
) -> KeySpec {
    KeySpec {
        key,
        kind,
        default,
        doc,
    }
}

use ValueKind::*;

pub const KEYS: &[KeySpec] = &[
    key("seed", Int, "1", "master random seed"),
    key("scenario.kind", Scenario, "stationary", "mobility profile (fixed = constant distance)"),
    key("scenario.initial_distance_m", Float, "10", "UE-gNB 2D distance at t = 0, m"),
    key("scenario.duration_s", FloatOrAuto, "auto", "run length, s (auto: walking round trip 65.5 s, biking 30 s, else 1 s; original runs used walking 60 s)"),
    key("scenario.speed_mps", FloatOrAuto, "auto", "UE speed, m/s (auto: walking 1.375, biking 6.7, else 0)"),
    key("scenario.strict_paper_duration", Bool, "false", "force walking 60 s / biking 30 s durations"),
    key("budget.eirp_dbm", Float, "67", "downlink effective radiated power, dBm"),
    key("budget.ue_rx_gain_db", Float, "1", "UE receive antenna gain, dB"),
    key("budget.noise_figure_db", Float, "10", "UE noise figure, dB"),
    key("budget.gnb_rx_gain_db", Float, "29.5", "gNB receive gain, dB (uplink only; unused)"),
    key("budget.n_prb", Int, "66", "scheduled bandwidth in PRBs"),
    key("budget.scs_khz", Float, "120", "subcarrier spacing, kHz"),
    key("budget.carrier_ghz", Float, "24.8", "carrier frequency, GHz"),
    key("budget.h_bs_m", Float, "10", "gNB antenna height, m"),
    key("budget.h_ut_m", Float, "1.5", "UE antenna height, m"),
    key("budget.sinr_ceiling_db", FloatOrNone, "none", "transmitter-impairment SINR cap, dB"),
    key("fading.k_factor_db", Float, "10", "Rician K factor, dB"),
    key("shadow.sigma_db", Float, "4", "log-normal shadowing standard deviation, dB"),
    key("shadow.decorr_m", Float, "10", "shadowing decorrelation distance, m"),
    key("bler.gap_db", Float, "1.5", "SNR gap of the 50% BLER point above Shannon, dB"),
    key("bler.slope_per_db", Float, "2", "logistic waterfall slope, 1/dB"),
    key("bler.harq_gain_db", Float, "3", "chase-combining SINR gain per retransmission, dB"),
    key("olla.target_bler", Float, "0.1", "outer-loop first-transmission BLER target"),
    key("olla.step_down_db", Float, "0.5", "outer-loop offset decrease on NACK, dB"),
    key("table.mode", Table, "2", "MCS table: 1, 2, 4 or adaptive (switch between 1 and 2)"),
    key("table.switch_up_db", FloatOrAuto, "auto", "adaptive: filtered SINR to move to table 2 (auto: goodput crossover + 3 dB)"),
    key("table.switch_down_db", FloatOrAuto, "auto", "adaptive: filtered SINR to fall back to table 1 (auto: crossover - 3 dB)"),
    key("cqi.period_slots", Int, "40", "CQI reporting period, slots"),
    key("cqi.delay_slots", Int, "8", "age of the SINR a CQI report describes, slots"),
    key("harq.max_tx", Int, "4", "maximum transmissions per TB"),
    key("harq.processes", Int, "16", "number of HARQ processes"),
    key("harq.feedback_delay_slots", Int, "2", "minimum PDSCH to HARQ-ACK gap, slots"),
    key("phy.n_layers", Int, "2", "MIMO layers"),
    key("phy.dmrs_re_per_prb", Int, "12", "DMRS resource elements per PRB"),
    key("phy.x_overhead", Int, "0", "higher-layer overhead per PRB (0, 6, 12, 18)"),
    key("phy.control_symbols", Int, "1", "PDCCH symbols per DL slot"),
];

pub const PRESETS: &[(&str, &str)] = &[
    ("paper-fig5", include_str!("../presets/paper-fig5.conf")),
    (
        "table2-default",
        include_str!("../presets/table2-default.conf"),
    ),
    (
        "fwa-stationary",
        include_str!("../presets/fwa-stationary.conf"),
    ),
];

pub fn key_spec(name: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.key == name)
}

fn nearest_key(name: &str) -> &'static str {
    KEYS.iter()
        .map(|k| (strsim::levenshtein(name, k.key), k.key))
        .min()
        .map_or("", |(_, k)| k)
}

/// Where a configuration value came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Default,
    Preset(String),
    File(String),
    Flag,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Default => f.write_str("default"),
            Source::Preset(p) => write!(f, "preset:{p}"),
            Source::File(p) => write!(f, "file:{p}"),
            Source::Flag => f.write_str("flag"),
        }
    }
}

/// Fully resolved key/value set, one entry per known key.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, (String, Source)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            values: KEYS
                .iter()
                .map(|k| (k.key, (k.default.to_string(), Source::Default)))
                .collect(),
        }
    }
}

impl RunConfig {
    pub fn from_preset(name: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_preset(name)?;
        Ok(cfg)
    }

    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            Error::InvalidConfig(format!(
                "unknown preset `{name}` (available: {})",
                names.join(", ")
            ))
        })?;
        self.apply_text(text, &Source::Preset(name.to_string()))
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.apply_text(&text, &Source::File(path.display().to_string()))
    }

    pub fn apply_text(&mut self, text: &str, source: &Source) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: n as u64 + 1,
                column: String::new(),
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(k.trim(), v.trim(), source.clone())?;
        }
        Ok(())
    }

    /// Parses a `key=value` command-line assignment.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("expected key=value, got `{assignment}`"))
        })?;
        self.set(k.trim(), v.trim(), Source::Flag)
    }

    pub fn set(&mut self, name: &str, value: &str, source: Source) -> Result<()> {
        let spec = key_spec(name).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "unknown key `{name}` (did you mean `{}`?)",
                nearest_key(name)
            ))
        })?;
        let value = value.to_ascii_lowercase();
        if !spec.kind.check(&value) {
            return Err(Error::InvalidConfig(format!(
                "key `{name}`: expected {}, got `{value}`",
                spec.kind.expected()
            )));
        }
        self.values.insert(spec.key, (value, source));
        Ok(())
    }

    pub fn get(&self, name: &str) -> &str {
        &self.values[name].0
    }

    pub fn source(&self, name: &str) -> &Source {
        &self.values[name].1
    }

    fn float(&self, name: &str) -> f64 {
        self.get(name).parse().expect("checked on insert")
    }

    fn opt_float(&self, name: &str) -> Option<f64> {
        self.get(name).parse().ok()
    }

    fn int<T: TryFrom<u64>>(&self, name: &str) -> Result<T> {
        let v: u64 = self.get(name).parse().expect("checked on insert");
        T::try_from(v)
            .map_err(|_| Error::InvalidConfig(format!("key `{name}`: {v} is out of range")))
    }

    /// `key=value` lines in key order; the basis of the config hash.
    pub fn canonical_text(&self) -> String {
        self.values
            .iter()
            .map(|(k, (v, _))| format!("{k}={v}\n"))
            .collect()
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical_text().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Non-default settings with their provenance.
    pub fn overrides(&self) -> Vec<String> {
        self.values
            .iter()
            .filter(|(_, (_, s))| *s != Source::Default)
            .map(|(k, (v, s))| format!("{k}={v} ({s})"))
            .collect()
    }

    pub fn seed(&self) -> u64 {
        self.get("seed").parse().expect("checked on insert")
    }

    pub fn to_scenario(&self) -> Result<ScenarioConfig> {
        let kind = match self.get("scenario.kind") {
            "walking" => ScenarioKind::Walking,
            "biking" => ScenarioKind::Biking,
            "fixed" => ScenarioKind::FixedDistance(self.float("scenario.initial_distance_m")),
            _ => ScenarioKind::Stationary,
        };
        let speed = self
            .opt_float("scenario.speed_mps")
            .unwrap_or_else(|| kind.default_speed_mps());
        let strict = self.get("scenario.strict_paper_duration") == "true";
        let duration = match (strict, kind.strict_duration_s()) {
            (true, Some(d)) => d,
            _ => self
                .opt_float("scenario.duration_s")
                .unwrap_or_else(|| kind.default_duration_s(speed)),
        };

        let bler = BlerModel {
            shannon_gap_db: self.float("bler.gap_db"),
            waterfall_slope_per_db: self.float("bler.slope_per_db"),
            harq_combining_gain_db: self.float("bler.harq_gain_db"),
        };
        let (auto_up, auto_down) = derived_switch_thresholds(&bler);
        let table_mode = TableMode {
            mode: self.get("table.mode").parse()?,
            switch_up_sinr_db: self.opt_float("table.switch_up_db").unwrap_or(auto_up),
            switch_down_sinr_db: self.opt_float("table.switch_down_db").unwrap_or(auto_down),
        };
        let n_prb = self.int("budget.n_prb")?;
        let budget = LinkBudget {
            eirp_dbm: self.float("budget.eirp_dbm"),
            ue_rx_gain_db: self.float("budget.ue_rx_gain_db"),
            noise_figure_db: self.float("budget.noise_figure_db"),
            n_prb,
            scs_hz: self.float("budget.scs_khz") * 1e3,
            carrier_freq_ghz: self.float("budget.carrier_ghz"),
            h_bs_m: self.float("budget.h_bs_m"),
            h_ut_m: self.float("budget.h_ut_m"),
            sinr_ceiling_db: self.opt_float("budget.sinr_ceiling_db"),
            gnb_rx_gain_db: self.float("budget.gnb_rx_gain_db"),
        };
        let mac = MacConfig {
            n_prb,
            n_layers: self.int("phy.n_layers")?,
            dmrs_re_per_prb: self.int("phy.dmrs_re_per_prb")?,
            x_overhead: self.int("phy.x_overhead")?,
            control_symbols: self.int("phy.control_symbols")?,
            max_tx: self.int("harq.max_tx")?,
            harq_processes: self.int("harq.processes")?,
            feedback_delay_slots: self.int("harq.feedback_delay_slots")?,
            ..MacConfig::default()
        };
        let cfg = ScenarioConfig {
            kind,
            initial_distance_m: self.float("scenario.initial_distance_m"),
            duration_s: duration,
            speed_mps: speed,
            seed: self.seed(),
            table_mode,
            budget,
            fading: FadingParams {
                k_factor_db: self.float("fading.k_factor_db"),
                shadow_sigma_db: self.float("shadow.sigma_db"),
                shadow_decorr_m: self.float("shadow.decorr_m"),
            },
            bler,
            olla_target_bler: self.float("olla.target_bler"),
            olla_step_down_db: self.float("olla.step_down_db"),
            mac,
            cqi_period_slots: self.int("cqi.period_slots")?,
            cqi_delay_slots: self.int("cqi.delay_slots")?,
            keep_records: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Config-key reference shown by `--help`.
pub fn keys_help() -> String {
    let width = KEYS.iter().map(|k| k.key.len()).max().unwrap_or(0);
    let mut s = String::from("Configuration keys (`--set key=value` or a config file):\n");
    for k in KEYS {
        s.push_str(&format!(
            "  {:width$}  {} [default: {}]\n",
            k.key, k.doc, k.default
        ));
    }
    s.push_str("Presets: ");
    s.push_str(
        &PRESETS
            .iter()
            .map(|(n, _)| *n)
            .collect::<Vec<_>>()
            .join(", "),
    );
    s
}
