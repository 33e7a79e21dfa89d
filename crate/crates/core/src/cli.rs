//! Command-line front end. [`dispatch`] parses arguments, runs one
//! subcommand and returns the process exit code.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{BalanceMode, PafConfig, SyncMode};
use crate::error::{Error, Result};
use crate::gnn::tensor::Tensor;
use crate::gnn::{host_reference, run_inference, ConfigChoice, GnnModel};
use crate::matrix::{degree_stats, DegreeStats, DenseMatrix, SparseFormat, SparseMatrix};
use crate::mtx::{load_matrix_market, write_matrix_market};
use crate::normalize::{normalize_adjacency, GnnKind, DEFAULT_FIXED_POINT_SCALE};
use crate::partition::capacity::validate_capacity;
use crate::partition::plan::LoadedGraph;
use crate::profile::CostProfile;
use crate::scalar::{Scalar, ValueKind};
use crate::sim::baseline::{baseline_cost, BaselineKind};
use crate::sim::report::{ExecutionReport, CSV_HEADER};
use crate::sim::{simulate_aggregation, simulate_cost};
use crate::synth::{power_law_graph, seeded_features, PowerLawSpec};
use crate::topology::PimTopology;
use crate::tuner::{calibrate, plan_for, tune_stats, CalibrationGrid, GraphStats, SimulatedMachine, TuneOutcome};

#[derive(Parser, Debug)]
#[command(name = "pimgnn", version, about = "Plan, tune and simulate GNN aggregation on PIM machines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a MatrixMarket graph and print its statistics as JSON.
    Ingest(IngestArgs),
    /// Write a seeded power-law graph as MatrixMarket.
    Gen(GenArgs),
    /// Print the tile plan of an explicit configuration as JSON.
    Plan(PlanArgs),
    /// Search the configuration space and print the outcome as JSON.
    Tune(TuneArgs),
    /// Run one aggregation and print its report.
    RunAggr(RunAggrArgs),
    /// Run a multi-layer GNN and print the inference report.
    Infer(InferArgs),
    /// Compare tuned configurations against the baselines (CSV).
    Bench(BenchArgs),
    /// Calibrate a cost profile against the simulated machine.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct TopologyArgs {
    #[arg(long, default_value_t = 32)]
    pub devices: usize,
    #[arg(long, default_value_t = 64)]
    pub cores_per_device: usize,
    #[arg(long, default_value_t = 16)]
    pub threads: usize,
    #[arg(long, default_value_t = 64 << 20)]
    pub bank_bytes: usize,
    #[arg(long, default_value_t = 64 << 10)]
    pub scratchpad_bytes: usize,
}

impl TopologyArgs {
    pub fn topology(&self) -> Result<PimTopology> {
        let topo = PimTopology {
            threads_per_core: self.threads,
            bank_capacity: self.bank_bytes,
            scratchpad_capacity: self.scratchpad_bytes,
            ..PimTopology::new(self.devices, self.cores_per_device)?
        };
        topo.validate()?;
        Ok(topo)
    }
}

#[derive(Args, Debug, Clone)]
pub struct MachineArgs {
    #[command(flatten)]
    pub topology: TopologyArgs,
    /// Cost profile JSON; the built-in UPMEM-like profile when omitted.
    #[arg(long)]
    pub profile: Option<PathBuf>,
}

impl MachineArgs {
    fn resolve(&self) -> Result<(PimTopology, CostProfile)> {
        let profile = match &self.profile {
            Some(p) => CostProfile::load(p)?,
            None => CostProfile::upmem_like(),
        };
        Ok((self.topology.topology()?, profile))
    }
}

#[derive(Args, Debug, Clone)]
pub struct GraphArgs {
    /// MatrixMarket adjacency.
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value = "int32")]
    pub kind: ValueKind,
}

/// Adjacency preprocessing applied before aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggrModel {
    None,
    Gcn,
    Gin,
    Sage,
}

impl AggrModel {
    fn kind(self) -> Option<GnnKind> {
        match self {
            AggrModel::None => None,
            AggrModel::Gcn => Some(GnnKind::Gcn),
            AggrModel::Gin => Some(GnnKind::Gin),
            AggrModel::Sage => Some(GnnKind::Sage),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct NormalizeArgs {
    #[arg(long, value_enum, default_value = "none")]
    pub model: AggrModel,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    /// Fixed-point scale of normalized integer weights.
    #[arg(long, default_value_t = DEFAULT_FIXED_POINT_SCALE)]
    pub scale: i64,
}

impl NormalizeArgs {
    fn apply<T: Scalar>(&self, a: &SparseMatrix<T>) -> Result<SparseMatrix<T>> {
        match self.model.kind() {
            Some(kind) => normalize_adjacency(a, kind, self.eps, self.scale),
            None => Ok(a.clone()),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ExplicitConfig {
    #[arg(long)]
    pub sp: Option<usize>,
    #[arg(long)]
    pub dp: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub grp: usize,
    #[arg(long, default_value = "csr")]
    pub format: SparseFormat,
    #[arg(long, default_value = "edg")]
    pub cluster_scheme: BalanceMode,
    #[arg(long, default_value = "edg")]
    pub core_scheme: BalanceMode,
    #[arg(long, default_value = "lock-free")]
    pub sync: SyncMode,
}

impl ExplicitConfig {
    fn config(&self) -> Option<PafConfig> {
        Some(PafConfig {
            sp: self.sp?,
            dp: self.dp?,
            grp: self.grp,
            format: self.format,
            cluster_scheme: self.cluster_scheme,
            core_scheme: self.core_scheme,
            sync: self.sync,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, default_value_t = 4096)]
    pub nodes: usize,
    #[arg(long, default_value_t = 8.0)]
    pub avg_degree: f64,
    #[arg(long, default_value_t = 2.2)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub hidden: usize,
    #[command(flatten)]
    pub config: ExplicitConfig,
    #[command(flatten)]
    pub machine: MachineArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub hidden: usize,
    #[arg(long, default_value = "csr")]
    pub format: SparseFormat,
    #[command(flatten)]
    pub normalize: NormalizeArgs,
    #[command(flatten)]
    pub machine: MachineArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunAggrArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub hidden: usize,
    /// `auto`, or a JSON file holding a configuration or a tune outcome.
    #[arg(long, conflicts_with_all = ["sp", "dp"])]
    pub config: Option<String>,
    #[command(flatten)]
    pub explicit: ExplicitConfig,
    #[command(flatten)]
    pub normalize: NormalizeArgs,
    #[command(flatten)]
    pub machine: MachineArgs,
    /// Feature tensor JSON; seeded features when omitted.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    pub report_format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the aggregated matrix as a tensor JSON.
    #[arg(long)]
    pub output_tensor: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InferArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Model JSON; a seeded model of `--arch` and `--dims` when omitted.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    #[arg(long, default_value = "gcn")]
    pub arch: GnnKind,
    /// Input width followed by the output width of every layer.
    #[arg(long, value_delimiter = ',', default_value = "16,16,16,8")]
    pub dims: Vec<usize>,
    #[arg(long, conflicts_with_all = ["sp", "dp"])]
    pub config: Option<String>,
    #[command(flatten)]
    pub explicit: ExplicitConfig,
    #[arg(long, default_value_t = DEFAULT_FIXED_POINT_SCALE)]
    pub scale: i64,
    #[command(flatten)]
    pub machine: MachineArgs,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Check the result against the host-only forward pass.
    #[arg(long)]
    pub verify: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub output_tensor: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub hidden: usize,
    #[arg(long, value_delimiter = ',', default_value = "paf-csr,paf-coo,grande,sp1,sp2")]
    pub schemes: Vec<BenchScheme>,
    #[command(flatten)]
    pub normalize: NormalizeArgs,
    #[command(flatten)]
    pub machine: MachineArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchScheme {
    PafCsr,
    PafCoo,
    Grande,
    Sp1,
    Sp2,
}

impl BenchScheme {
    fn label(self) -> &'static str {
        match self {
            BenchScheme::PafCsr => "paf-csr",
            BenchScheme::PafCoo => "paf-coo",
            BenchScheme::Grande => "grande",
            BenchScheme::Sp1 => "sp1",
            BenchScheme::Sp2 => "sp2",
        }
    }
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub topology: TopologyArgs,
    /// Ground-truth profile of the simulated machine.
    #[arg(long)]
    pub ground: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs `body` with `$t` bound to the scalar type of `$kind`.
macro_rules! with_kind {
    ($kind:expr, $t:ident, $body:expr) => {
        match $kind {
            ValueKind::Int32 => {
                type $t = i32;
                $body
            }
            ValueKind::Int16 => {
                type $t = i16;
                $body
            }
            ValueKind::Int8 => {
                type $t = i8;
                $body
            }
            ValueKind::Float32 => {
                type $t = f32;
                $body
            }
        }
    };
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code. Diagnostics go to `err` as a single line.
pub fn dispatch<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let _ = writeln!(err, "{}", first_line(&e.to_string()));
            return 2;
        }
    };
    match run(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", first_line(&e.to_string()));
            1
        }
    }
}

fn first_line(s: &str) -> &str {
    s.lines().find(|l| !l.trim().is_empty()).unwrap_or(s).trim_end()
}

fn emit(path: Option<&Path>, out: &mut dyn Write, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_json(path: Option<&Path>, out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(path, out, &text)
}

pub fn run(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Ingest(a) => with_kind!(a.graph.kind, T, ingest::<T>(&a, out)),
        Command::Gen(a) => gen(&a, out),
        Command::Plan(a) => with_kind!(a.graph.kind, T, plan::<T>(&a, out)),
        Command::Tune(a) => with_kind!(a.graph.kind, T, tune_cmd::<T>(&a, out)),
        Command::RunAggr(a) => with_kind!(a.graph.kind, T, run_aggr::<T>(&a, out)),
        Command::Infer(a) => with_kind!(a.graph.kind, T, infer::<T>(&a, out)),
        Command::Bench(a) => with_kind!(a.graph.kind, T, bench::<T>(&a, out)),
        Command::Calibrate(a) => calibrate_cmd(&a, out),
    }
}

#[derive(Debug, Serialize)]
struct GraphSummary {
    rows: usize,
    cols: usize,
    nnz: usize,
    kind: ValueKind,
    symmetric: bool,
    self_loops: usize,
    degree: DegreeStats,
}

fn ingest<T: Scalar>(a: &IngestArgs, out: &mut dyn Write) -> Result<()> {
    let m = load_matrix_market::<T>(&a.graph.graph)?;
    let symmetric = {
        let mut fwd: Vec<(usize, usize)> = m.iter().map(|(r, c, _)| (r, c)).collect();
        let mut rev: Vec<(usize, usize)> = fwd.iter().map(|&(r, c)| (c, r)).collect();
        fwd.sort_unstable();
        rev.sort_unstable();
        fwd == rev
    };
    let summary = GraphSummary {
        rows: m.n_rows(),
        cols: m.n_cols(),
        nnz: m.nnz(),
        kind: T::KIND,
        symmetric,
        self_loops: m.iter().filter(|&(r, c, _)| r == c).count(),
        degree: degree_stats(&m),
    };
    emit_json(a.out.as_deref(), out, &summary)
}

fn gen(a: &GenArgs, out: &mut dyn Write) -> Result<()> {
    let m = power_law_graph::<i32>(&PowerLawSpec {
        nodes: a.nodes,
        avg_degree: a.avg_degree,
        alpha: a.alpha,
        seed: a.seed,
    })?;
    let mut buf = Vec::new();
    write_matrix_market(&m, &mut buf)?;
    emit(a.out.as_deref(), out, &String::from_utf8_lossy(&buf))
}

fn plan<T: Scalar>(a: &PlanArgs, out: &mut dyn Write) -> Result<()> {
    let (topo, _) = a.machine.resolve()?;
    let cfg = a
        .config
        .config()
        .ok_or_else(|| Error::Geometry("plan needs --sp and --dp".into()))?;
    let m = load_matrix_market::<T>(&a.graph.graph)?;
    let g = LoadedGraph::load(&m, a.hidden, &cfg, &topo)?;
    validate_capacity(&g.plan, &g.plan.topology)?;
    let mut text = g.plan.to_json()?;
    text.push('\n');
    emit(a.out.as_deref(), out, &text)
}

fn tune_outcome<T: Scalar>(
    a: &SparseMatrix<T>,
    hidden: usize,
    format: SparseFormat,
    topo: &PimTopology,
    profile: &CostProfile,
) -> Result<TuneOutcome> {
    tune_stats(&GraphStats::new(a)?, hidden, topo, profile, format, T::KIND)
}

fn tune_cmd<T: Scalar>(a: &TuneArgs, out: &mut dyn Write) -> Result<()> {
    let (topo, profile) = a.machine.resolve()?;
    let m = a.normalize.apply(&load_matrix_market::<T>(&a.graph.graph)?)?;
    let outcome = tune_outcome(&m, a.hidden, a.format, &topo, &profile)?;
    let mut text = outcome.to_json()?;
    text.push('\n');
    emit(a.out.as_deref(), out, &text)
}

/// Reads a configuration file holding either a bare configuration or a
/// tune outcome.
pub fn load_config(path: impl AsRef<Path>) -> Result<PafConfig> {
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let inner = match value.get("config") {
        Some(c) => c.clone(),
        None => value,
    };
    Ok(serde_json::from_value(inner)?)
}

fn config_choice(config: Option<&str>, explicit: &ExplicitConfig) -> Result<ConfigChoice> {
    match config {
        Some("auto") => Ok(ConfigChoice::Auto(explicit.format)),
        Some(path) => Ok(ConfigChoice::Fixed(load_config(path)?)),
        None => explicit
            .config()
            .map(ConfigChoice::Fixed)
            .ok_or_else(|| Error::Geometry("give --config auto|FILE or both --sp and --dp".into())),
    }
}

fn load_features<T: Scalar>(path: Option<&Path>, n: usize, k: usize, seed: u64) -> Result<DenseMatrix<T>> {
    let f = match path {
        Some(p) => Tensor::load(p)?.to_dense::<T>()?,
        None => seeded_features::<T>(n, k, 8, seed)?,
    };
    if f.shape() != (n, k) {
        return Err(Error::DimensionMismatch {
            op: "features",
            expected: format!("{n} x {k}"),
            found: format!("{} x {}", f.n_rows(), f.n_cols()),
        });
    }
    Ok(f)
}

fn write_report(report: &ExecutionReport, format: ReportFormat, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match format {
        ReportFormat::Json => {
            let mut text = report.to_json()?;
            text.push('\n');
            emit(path, out, &text)
        }
        ReportFormat::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            emit(path, out, &String::from_utf8_lossy(&buf))
        }
    }
}

fn run_aggr<T: Scalar>(a: &RunAggrArgs, out: &mut dyn Write) -> Result<()> {
    let (topo, profile) = a.machine.resolve()?;
    let m = a.normalize.apply(&load_matrix_market::<T>(&a.graph.graph)?)?;
    let cfg = match config_choice(a.config.as_deref(), &a.explicit)? {
        ConfigChoice::Fixed(cfg) => cfg,
        ConfigChoice::Auto(format) => tune_outcome(&m, a.hidden, format, &topo, &profile)?.config,
    };
    let f = load_features::<T>(a.features.as_deref(), m.n_cols(), a.hidden, a.seed)?;
    let g = LoadedGraph::load(&m, a.hidden, &cfg, &topo)?;
    let (result, report) = simulate_aggregation(&g, &f, &profile)?;
    if let Some(p) = &a.output_tensor {
        let result = match a.normalize.model.kind() {
            Some(_) => result.map(|v| v.descale(a.normalize.scale)),
            None => result,
        };
        Tensor::from_dense(&result).save(p)?;
    }
    write_report(&report, a.report_format, a.out.as_deref(), out)
}

fn infer<T: Scalar>(a: &InferArgs, out: &mut dyn Write) -> Result<()> {
    let (topo, profile) = a.machine.resolve()?;
    let graph = load_matrix_market::<T>(&a.graph.graph)?;
    let model = match &a.model_file {
        Some(p) => GnnModel::<T>::load(p)?,
        None => GnnModel::<T>::seeded(a.arch, &a.dims, a.seed)?,
    };
    let in_dim = match &a.model_file {
        Some(_) => model.layers.first().and_then(|l| l.in_dim()).unwrap_or(0),
        None => a.dims.first().copied().unwrap_or(0),
    };
    let f = load_features::<T>(a.features.as_deref(), graph.n_rows(), in_dim, a.seed)?;
    let choice = config_choice(a.config.as_deref(), &a.explicit)?;
    let (result, report) = run_inference(&model, &graph, &f, choice, a.scale, &topo, &profile)?;
    if a.verify {
        let reference = host_reference(&model, &graph, &f, a.scale)?;
        if reference != result {
            return Err(Error::InvalidMatrix("inference output differs from the host reference".into()));
        }
    }
    if let Some(p) = &a.output_tensor {
        Tensor::from_dense(&result).save(p)?;
    }
    let mut text = report.to_json()?;
    text.push('\n');
    emit(a.out.as_deref(), out, &text)
}

/// Cost report of one scheme on `m` at width `hidden`.
pub fn bench_report<T: Scalar>(
    scheme: BenchScheme,
    m: &SparseMatrix<T>,
    stats: &GraphStats,
    hidden: usize,
    topo: &PimTopology,
    profile: &CostProfile,
) -> Result<ExecutionReport> {
    let baseline = |kind| baseline_cost(kind, m, hidden, topo, profile);
    match scheme {
        BenchScheme::PafCsr | BenchScheme::PafCoo => {
            let format = if scheme == BenchScheme::PafCsr {
                SparseFormat::Csr
            } else {
                SparseFormat::Coo
            };
            let outcome = tune_stats(stats, hidden, topo, profile, format, T::KIND)?;
            let plan = plan_for(stats, hidden, &outcome.config, topo, T::KIND)?;
            validate_capacity(&plan, &plan.topology)?;
            Ok(simulate_cost(&plan, profile, scheme.label()))
        }
        BenchScheme::Grande => baseline(BaselineKind::Grande),
        BenchScheme::Sp1 => baseline(BaselineKind::Sp1),
        BenchScheme::Sp2 => baseline(BaselineKind::Sp2),
    }
}

fn bench<T: Scalar>(a: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let (topo, profile) = a.machine.resolve()?;
    let m = a.normalize.apply(&load_matrix_market::<T>(&a.graph.graph)?)?;
    let stats = GraphStats::new(&m)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for &scheme in &a.schemes {
        match bench_report(scheme, &m, &stats, a.hidden, &topo, &profile) {
            Ok(r) => r.write_csv_rows(&mut w, scheme.label())?,
            Err(e) => w.write_record([scheme.label(), "error", "", &first_line(&e.to_string()).replace('\n', " "), "", "", ""])?,
        }
    }
    let buf = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    emit(a.out.as_deref(), out, &String::from_utf8_lossy(&buf))
}

fn calibrate_cmd(a: &CalibrateArgs, out: &mut dyn Write) -> Result<()> {
    let ground = match &a.ground {
        Some(p) => CostProfile::load(p)?,
        None => CostProfile::upmem_like(),
    };
    let machine = SimulatedMachine {
        topology: a.topology.topology()?,
        ground,
    };
    let profile = calibrate(&machine, &CalibrationGrid::default())?;
    let mut text = profile.to_json()?;
    text.push('\n');
    emit(a.out.as_deref(), out, &text)
}
