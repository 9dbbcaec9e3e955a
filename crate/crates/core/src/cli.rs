//! Command-line front end: `tables`, `sim`, `sweep` and `analyze`.
//!
//! Exit codes: 0 success, 1 usage error, 2 input or parse error, 3 internal
//! invariant violation. Every CSV starts with `#` comment lines carrying the
//! tool version, seed and a hash of the resolved configuration.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{keys_help, RunConfig};
use crate::error::Error;
use crate::fieldstats::{self, FieldRecord, DEFAULT_BIN_WIDTH_DB, DEFAULT_MIN_N};
use crate::link_adapt::TableModeKind;
use crate::mac::RunMetrics;
use crate::nr_tables::{cqi_table_csv, mcs_table_csv, CqiTableId, McsTableId};
use crate::scenario::{self, SweepResult};
use crate::svg::{line_chart, Series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "fr2sim",
    version,
    about = "FR2 downlink link-adaptation simulator and drive-test statistics",
    after_help = keys_help()
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the built-in MCS / CQI tables.
    Tables {
        #[command(subcommand)]
        action: TablesAction,
    },
    /// Run one scenario and print its metrics.
    Sim(SimArgs),
    /// Throughput versus distance for several MCS tables and seeds.
    Sweep(SweepArgs),
    /// Aggregate a slot-record CSV (simulated or measured).
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Subcommand)]
pub enum TablesAction {
    /// Dump one table as CSV.
    Dump {
        /// MCS table number (1, 2 or 4).
        #[arg(long, conflicts_with = "cqi_table")]
        mcs_table: Option<McsTableId>,
        /// CQI table number (2, 3 or 5).
        #[arg(long)]
        cqi_table: Option<u8>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Bundled preset applied before --config and --set.
    #[arg(long)]
    pub preset: Option<String>,
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one key (repeatable), e.g. `--set budget.eirp_dbm=30`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Shorthand for `--set seed=N`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use the walking 60 s / biking 30 s durations of the original runs.
    #[arg(long)]
    pub strict_paper_duration: bool,
    /// Add a generation timestamp to output headers (breaks byte-identical reruns).
    #[arg(long)]
    pub timestamp: bool,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    /// Metrics CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write every scheduled slot as a slot-record CSV.
    #[arg(long)]
    pub export_slots: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    /// Table modes to compare (1, 2, 4, adaptive).
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    pub tables: Vec<TableModeKind>,
    #[arg(long, default_value_t = 10.0)]
    pub min_d: f64,
    #[arg(long, default_value_t = 400.0)]
    pub max_d: f64,
    #[arg(long, default_value_t = 10.0)]
    pub step: f64,
    /// Number of seeds, counting up from the configured seed.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    /// Worker threads (default: number of processors).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Per-run CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed-averaged curve CSV.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Throughput-versus-distance chart.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH_DB)]
    pub bin_width: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_N)]
    pub min_n: usize,
    /// Report directory.
    #[arg(long, default_value = "report")]
    pub out: PathBuf,
    /// RSRP-binned throughput chart.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Invariant(_) => EXIT_INVARIANT,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Invariant(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::UnknownTable(_)
            | Error::TimeOutsideRun { .. } => CliError::Input(e.to_string()),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", path.display()))
}

type CliResult<T> = std::result::Result<T, CliError>;

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Tables { action } => tables(action),
        Command::Sim(a) => sim(a),
        Command::Sweep(a) => sweep(a),
        Command::Analyze(a) => analyze(a),
    }
}

fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(io_err(p)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Input(format!("stdout: {e}"))),
    }
}

fn tables(action: TablesAction) -> CliResult<()> {
    let TablesAction::Dump {
        mcs_table,
        cqi_table,
    } = action;
    let csv = match (mcs_table, cqi_table) {
        (Some(t), None) => mcs_table_csv(t),
        (None, Some(n)) => {
            let t = CqiTableId::ALL
                .into_iter()
                .find(|t| t.number() == n)
                .ok_or_else(|| {
                    CliError::Usage(format!("CQI table {n} not available (2, 3 or 5)"))
                })?;
            cqi_table_csv(t)
        }
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --mcs-table or --cqi-table".into(),
            ))
        }
    };
    emit(None, &csv)
}

pub fn resolve_config(args: &ConfigArgs) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(p) = &args.preset {
        cfg.apply_preset(p)?;
    }
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    for s in &args.set {
        cfg.apply_assignment(s)?;
    }
    if let Some(seed) = args.seed {
        cfg.apply_assignment(&format!("seed={seed}"))?;
    }
    if args.strict_paper_duration {
        cfg.apply_assignment("scenario.strict_paper_duration=true")?;
    }
    Ok(cfg)
}

/// `#` comment lines identifying the producing build and configuration.
pub fn header(cfg: &RunConfig, timestamp: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# fr2sim {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# seed: {}", cfg.seed());
    let _ = writeln!(s, "# config-sha256: {}", cfg.hash());
    for o in cfg.overrides() {
        let _ = writeln!(s, "# set: {o}");
    }
    if timestamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let _ = writeln!(s, "# generated-unix: {secs}");
    }
    s
}

const UTIL_QMS: [u8; 5] = [2, 4, 6, 8, 10];

fn metrics_fields(m: &RunMetrics) -> String {
    let util: Vec<String> = UTIL_QMS
        .iter()
        .map(|&q| format!("{:.6}", m.utilization(q)))
        .collect();
    format!(
        "{:.6},{:.6},{:.6},{},{:.4}",
        m.mac_throughput_bps / 1e6,
        m.phy_throughput_bps / 1e6,
        m.retx_rate,
        util.join(","),
        m.mean_rsrp_dbm
    )
}

const METRICS_COLUMNS: &str = "mac_mbps,phy_mbps,retx_rate,util_qpsk,util_16qam,util_64qam,util_256qam,util_1024qam,mean_rsrp_dbm";

fn sim(args: SimArgs) -> CliResult<()> {
    let cfg = resolve_config(&args.cfg)?;
    let mut scenario = cfg.to_scenario()?;
    scenario.keep_records = args.export_slots.is_some();
    let metrics = scenario::run(&scenario)?;
    let head = header(&cfg, args.cfg.timestamp);

    let mut out = head.clone();
    let _ = writeln!(
        out,
        "scenario,table,seed,duration_s,{METRICS_COLUMNS},transmissions,retransmissions,dropped_tbs,dl_symbol_fraction"
    );
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{:.6}",
        scenario.kind,
        scenario.table_mode.mode,
        scenario.seed,
        metrics.duration_s,
        metrics_fields(&metrics),
        metrics.transmissions,
        metrics.retransmissions,
        metrics.dropped_tbs,
        metrics.scheduled_symbol_fraction
    );
    emit(args.out.as_deref(), &out)?;

    if let Some(path) = &args.export_slots {
        let records: Vec<FieldRecord> = metrics
            .slot_records
            .unwrap_or_default()
            .into_iter()
            .map(FieldRecord::from)
            .collect();
        let mut buf = head.into_bytes();
        fieldstats::write_records(&mut buf, &records)?;
        fs::write(path, buf).map_err(io_err(path))?;
    }
    Ok(())
}

fn sweep_distances(a: &SweepArgs) -> CliResult<Vec<f64>> {
    if !(a.min_d > 0.0 && a.max_d >= a.min_d && a.step > 0.0) {
        return Err(CliError::Usage(
            "need 0 < --min-d <= --max-d and --step > 0".into(),
        ));
    }
    let n = ((a.max_d - a.min_d) / a.step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| a.min_d + i as f64 * a.step).collect())
}

pub fn sweep_rows_csv(res: &SweepResult) -> String {
    let mut s = format!("distance_m,table,seed,{METRICS_COLUMNS}\n");
    for r in &res.rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.distance_m,
            r.table,
            r.seed,
            metrics_fields(&r.metrics)
        );
    }
    s
}

pub fn sweep_curve_csv(res: &SweepResult) -> String {
    let mut s = String::from(
        "distance_m,table,n_seeds,mean_mac_mbps,std_mac_mbps,mean_phy_mbps,mean_retx_rate\n",
    );
    for p in &res.curve {
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{:.6},{:.6},{:.6}",
            p.distance_m,
            p.table,
            p.n_seeds,
            p.mean_mac_bps / 1e6,
            p.std_mac_bps / 1e6,
            p.mean_phy_bps / 1e6,
            p.mean_retx_rate
        );
    }
    s
}

fn sweep(args: SweepArgs) -> CliResult<()> {
    let cfg = resolve_config(&args.cfg)?;
    let template = cfg.to_scenario()?;
    let distances = sweep_distances(&args)?;
    if args.seeds == 0 || args.tables.is_empty() {
        return Err(CliError::Usage(
            "need at least one seed and one table".into(),
        ));
    }
    let seeds: Vec<u64> = (0..args.seeds)
        .map(|i| template.seed.wrapping_add(i))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Invariant(e.to_string()))?;
    let res = pool.install(|| scenario::sweep(&template, &distances, &args.tables, &seeds))?;

    let head = header(&cfg, args.cfg.timestamp);
    emit(args.out.as_deref(), &(head.clone() + &sweep_rows_csv(&res)))?;
    if let Some(path) = &args.curve {
        fs::write(path, head + &sweep_curve_csv(&res)).map_err(io_err(path))?;
    }
    if let Some(path) = &args.svg {
        let series: Vec<Series> = args
            .tables
            .iter()
            .map(|&t| Series {
                name: format!("MCS table {t}"),
                points: res
                    .curve
                    .iter()
                    .filter(|p| p.table == t)
                    .map(|p| (p.distance_m, p.mean_mac_bps / 1e6))
                    .collect(),
            })
            .collect();
        let svg = line_chart(
            "Downlink MAC throughput vs distance",
            "distance (m)",
            "throughput (Mbps)",
            &series,
        );
        fs::write(path, svg).map_err(io_err(path))?;
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> CliResult<()> {
    if !(args.bin_width > 0.0) {
        return Err(CliError::Usage("--bin-width must be > 0".into()));
    }
    let records = fieldstats::read_records_file(&args.input)?;
    let report = fieldstats::analyze(&records, args.bin_width, args.min_n)?;
    report.write_to_dir(&args.out)?;
    if let Some(path) = &args.svg {
        let series: Vec<Series> = McsTableId::ALL
            .iter()
            .map(|&t| Series {
                name: format!("MCS table {t}"),
                points: report
                    .curves
                    .iter()
                    .filter(|c| c.table == t)
                    .map(|c| (c.bin_center_dbm, c.mean_mbps))
                    .collect(),
            })
            .filter(|s| !s.points.is_empty())
            .collect();
        let svg = line_chart(
            "MAC throughput vs SS-RSRP",
            "RSRP (dBm)",
            "throughput (Mbps)",
            &series,
        );
        fs::write(path, svg).map_err(io_err(path))?;
    }
    eprint!("{}", report.summary_text());
    Ok(())
}
