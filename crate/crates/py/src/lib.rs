//! Python bindings: table lookups, TBS, channel and BLER helpers, and the
//! `run` / `sweep` / `analyze` entry points driven by presets and overrides.

use std::collections::BTreeMap;
use std::path::PathBuf;

use fr2sim::channel::{self, LinkBudget};
use fr2sim::config::RunConfig;
use fr2sim::fieldstats;
use fr2sim::link_adapt::TableModeKind;
use fr2sim::mac::RunMetrics;
use fr2sim::nr_tables::{self, CqiTableId, McsTableId, TbsInput};
use fr2sim::phy::{self, BlerModel};
use fr2sim::scenario;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: fr2sim::Error) -> PyErr {
    match e {
        fr2sim::Error::Io(m) => PyOSError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn mcs_id(table: u8) -> PyResult<McsTableId> {
    table.to_string().parse().map_err(py_err)
}

fn cqi_id(table: u8) -> PyResult<CqiTableId> {
    table.to_string().parse().map_err(py_err)
}

// ---------------------------------------------------------------------------
// Classes
// ---------------------------------------------------------------------------

#[pyclass(name = "McsEntry", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyMcsEntry {
    table: u8,
    index: u8,
    qm: u8,
    code_rate_x1024: f64,
    spectral_efficiency: f64,
    reserved: bool,
}

#[pymethods]
impl PyMcsEntry {
    fn __repr__(&self) -> String {
        format!(
            "McsEntry(table={}, index={}, qm={}, code_rate_x1024={}, spectral_efficiency={}, reserved={})",
            self.table,
            self.index,
            self.qm,
            self.code_rate_x1024,
            self.spectral_efficiency,
            if self.reserved { "True" } else { "False" }
        )
    }
}

impl From<nr_tables::McsEntry> for PyMcsEntry {
    fn from(e: nr_tables::McsEntry) -> Self {
        Self {
            table: e.table.number(),
            index: e.index,
            qm: e.qm,
            code_rate_x1024: e.code_rate_x1024,
            spectral_efficiency: e.spectral_efficiency,
            reserved: e.reserved,
        }
    }
}

#[pyclass(name = "CqiEntry", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyCqiEntry {
    table: u8,
    cqi: u8,
    qm: u8,
    code_rate_x1024: f64,
    spectral_efficiency: f64,
    out_of_range: bool,
}

#[pymethods]
impl PyCqiEntry {
    fn __repr__(&self) -> String {
        format!(
            "CqiEntry(table={}, cqi={}, qm={}, code_rate_x1024={}, spectral_efficiency={})",
            self.table, self.cqi, self.qm, self.code_rate_x1024, self.spectral_efficiency
        )
    }
}

#[pyclass(name = "RunMetrics", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyRunMetrics {
    duration_s: f64,
    mac_throughput_bps: f64,
    phy_throughput_bps: f64,
    retx_rate: f64,
    /// Scheduled-PRB share keyed by modulation order.
    modulation_utilization: BTreeMap<u8, f64>,
    mean_rsrp_dbm: f64,
    transmissions: u64,
    retransmissions: u64,
    dropped_tbs: u64,
    total_slots: u64,
    scheduled_symbol_fraction: f64,
    config_sha256: String,
}

#[pymethods]
impl PyRunMetrics {
    fn __repr__(&self) -> String {
        format!(
            "RunMetrics(mac={:.3} Mbps, phy={:.3} Mbps, retx_rate={:.4}, slots={})",
            self.mac_throughput_bps / 1e6,
            self.phy_throughput_bps / 1e6,
            self.retx_rate,
            self.total_slots
        )
    }
}

impl PyRunMetrics {
    fn new(m: RunMetrics, config_sha256: String) -> Self {
        Self {
            duration_s: m.duration_s,
            mac_throughput_bps: m.mac_throughput_bps,
            phy_throughput_bps: m.phy_throughput_bps,
            retx_rate: m.retx_rate,
            modulation_utilization: m.modulation_utilization,
            mean_rsrp_dbm: m.mean_rsrp_dbm,
            transmissions: m.transmissions,
            retransmissions: m.retransmissions,
            dropped_tbs: m.dropped_tbs,
            total_slots: m.total_slots,
            scheduled_symbol_fraction: m.scheduled_symbol_fraction,
            config_sha256,
        }
    }
}

#[pyclass(name = "CurvePoint", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyCurvePoint {
    distance_m: f64,
    table: String,
    n_seeds: usize,
    mean_mac_bps: f64,
    std_mac_bps: f64,
    mean_phy_bps: f64,
    mean_retx_rate: f64,
}

#[pymethods]
impl PyCurvePoint {
    fn __repr__(&self) -> String {
        format!(
            "CurvePoint(distance_m={}, table={}, mean_mac={:.3} Mbps)",
            self.distance_m,
            self.table,
            self.mean_mac_bps / 1e6
        )
    }
}

// ---------------------------------------------------------------------------
// Functions
// ---------------------------------------------------------------------------

#[pyfunction]
fn lookup_mcs(table: u8, index: i64) -> PyResult<PyMcsEntry> {
    nr_tables::lookup_mcs(mcs_id(table)?, index)
        .map(Into::into)
        .map_err(py_err)
}

#[pyfunction]
fn lookup_cqi(table: u8, cqi: i64) -> PyResult<PyCqiEntry> {
    let e = nr_tables::lookup_cqi(cqi_id(table)?, cqi).map_err(py_err)?;
    Ok(PyCqiEntry {
        table: e.table.number(),
        cqi: e.cqi,
        qm: e.qm,
        code_rate_x1024: e.code_rate_x1024,
        spectral_efficiency: e.spectral_efficiency,
        out_of_range: e.out_of_range,
    })
}

#[pyfunction]
#[pyo3(signature = (n_prb, n_symbols, table, mcs_index, n_layers = 2, n_dmrs_re_per_prb = 12, x_overhead = 0))]
fn compute_tbs(
    n_prb: u32,
    n_symbols: u32,
    table: u8,
    mcs_index: i64,
    n_layers: u32,
    n_dmrs_re_per_prb: u32,
    x_overhead: u32,
) -> PyResult<u32> {
    let mcs = nr_tables::lookup_mcs(mcs_id(table)?, mcs_index).map_err(py_err)?;
    nr_tables::compute_tbs(&TbsInput {
        n_prb,
        n_symbols_data: n_symbols,
        n_dmrs_re_per_prb,
        x_overhead,
        n_layers,
        mcs,
    })
    .map_err(py_err)
}

fn budget(carrier_ghz: Option<f64>, h_bs_m: Option<f64>, h_ut_m: Option<f64>) -> LinkBudget {
    let d = LinkBudget::default();
    LinkBudget {
        carrier_freq_ghz: carrier_ghz.unwrap_or(d.carrier_freq_ghz),
        h_bs_m: h_bs_m.unwrap_or(d.h_bs_m),
        h_ut_m: h_ut_m.unwrap_or(d.h_ut_m),
        ..d
    }
}

#[pyfunction]
#[pyo3(signature = (distance_m, carrier_ghz = None, h_bs_m = None, h_ut_m = None))]
fn path_loss_db(
    distance_m: f64,
    carrier_ghz: Option<f64>,
    h_bs_m: Option<f64>,
    h_ut_m: Option<f64>,
) -> f64 {
    channel::umi_los_path_loss(distance_m, &budget(carrier_ghz, h_bs_m, h_ut_m))
}

#[pyfunction]
#[pyo3(signature = (carrier_ghz = None, h_bs_m = None, h_ut_m = None))]
fn breakpoint_distance_m(
    carrier_ghz: Option<f64>,
    h_bs_m: Option<f64>,
    h_ut_m: Option<f64>,
) -> f64 {
    channel::breakpoint_distance(&budget(carrier_ghz, h_bs_m, h_ut_m))
}

#[pyfunction]
fn snr_at_bler50(spectral_efficiency: f64) -> f64 {
    phy::snr_at_bler50(spectral_efficiency, &BlerModel::default())
}

#[pyfunction]
#[pyo3(signature = (sinr_db, table, mcs_index, tx_count = 1))]
fn bler(sinr_db: f64, table: u8, mcs_index: i64, tx_count: u32) -> PyResult<f64> {
    let mcs = nr_tables::lookup_mcs(mcs_id(table)?, mcs_index).map_err(py_err)?;
    phy::bler(sinr_db, &mcs, tx_count, &BlerModel::default()).map_err(py_err)
}

#[pyfunction]
fn select_cqi(sinr_db: f64, cqi_table: u8) -> PyResult<u8> {
    Ok(phy::select_cqi(
        sinr_db,
        cqi_id(cqi_table)?,
        &BlerModel::default(),
    ))
}

fn resolve(
    preset: Option<&str>,
    overrides: Option<BTreeMap<String, String>>,
) -> PyResult<RunConfig> {
    let mut cfg = match preset {
        Some(p) => RunConfig::from_preset(p).map_err(py_err)?,
        None => RunConfig::default(),
    };
    for (k, v) in overrides.unwrap_or_default() {
        cfg.apply_assignment(&format!("{k}={v}")).map_err(py_err)?;
    }
    Ok(cfg)
}

/// Runs one scenario. `overrides` maps config keys to values as strings.
#[pyfunction]
#[pyo3(signature = (preset = None, overrides = None))]
fn run(
    py: Python<'_>,
    preset: Option<&str>,
    overrides: Option<BTreeMap<String, String>>,
) -> PyResult<PyRunMetrics> {
    let cfg = resolve(preset, overrides)?;
    let sc = cfg.to_scenario().map_err(py_err)?;
    let m = py.detach(|| scenario::run(&sc)).map_err(py_err)?;
    Ok(PyRunMetrics::new(m, cfg.hash()))
}

/// Seed-averaged throughput versus distance.
#[pyfunction]
#[pyo3(signature = (distances_m, tables = vec!["1".to_string(), "2".to_string(), "4".to_string()], seeds = vec![1, 2, 3, 4, 5], preset = None, overrides = None))]
fn sweep(
    py: Python<'_>,
    distances_m: Vec<f64>,
    tables: Vec<String>,
    seeds: Vec<u64>,
    preset: Option<&str>,
    overrides: Option<BTreeMap<String, String>>,
) -> PyResult<Vec<PyCurvePoint>> {
    let template = resolve(preset, overrides)?.to_scenario().map_err(py_err)?;
    let tables: Vec<TableModeKind> = tables
        .iter()
        .map(|t| t.parse())
        .collect::<fr2sim::Result<_>>()
        .map_err(py_err)?;
    let res = py
        .detach(|| scenario::sweep(&template, &distances_m, &tables, &seeds))
        .map_err(py_err)?;
    Ok(res
        .curve
        .into_iter()
        .map(|p| PyCurvePoint {
            distance_m: p.distance_m,
            table: p.table.to_string(),
            n_seeds: p.n_seeds,
            mean_mac_bps: p.mean_mac_bps,
            std_mac_bps: p.std_mac_bps,
            mean_phy_bps: p.mean_phy_bps,
            mean_retx_rate: p.mean_retx_rate,
        })
        .collect())
}

/// Aggregates a slot-record CSV; writes the report files when `out_dir` is
/// given and returns the summary text.
#[pyfunction]
#[pyo3(signature = (path, bin_width_db = fieldstats::DEFAULT_BIN_WIDTH_DB, min_n = fieldstats::DEFAULT_MIN_N, out_dir = None))]
fn analyze(
    path: PathBuf,
    bin_width_db: f64,
    min_n: usize,
    out_dir: Option<PathBuf>,
) -> PyResult<String> {
    let records = fieldstats::read_records_file(&path).map_err(py_err)?;
    let report = fieldstats::analyze(&records, bin_width_db, min_n).map_err(py_err)?;
    if let Some(dir) = out_dir {
        report.write_to_dir(&dir).map_err(py_err)?;
    }
    Ok(report.summary_text())
}

#[pymodule(name = "fr2sim")]
fn fr2sim_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyMcsEntry>()?;
    m.add_class::<PyCqiEntry>()?;
    m.add_class::<PyRunMetrics>()?;
    m.add_class::<PyCurvePoint>()?;
    m.add_function(wrap_pyfunction!(lookup_mcs, m)?)?;
    m.add_function(wrap_pyfunction!(lookup_cqi, m)?)?;
    m.add_function(wrap_pyfunction!(compute_tbs, m)?)?;
    m.add_function(wrap_pyfunction!(path_loss_db, m)?)?;
    m.add_function(wrap_pyfunction!(breakpoint_distance_m, m)?)?;
    m.add_function(wrap_pyfunction!(snr_at_bler50, m)?)?;
    m.add_function(wrap_pyfunction!(bler, m)?)?;
    m.add_function(wrap_pyfunction!(select_cqi, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    Ok(())
}
