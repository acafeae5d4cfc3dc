//! The `snc` command-line front end.
//!
//! Every subcommand writes its data files into `--out` together with a
//! `<subcommand>.manifest.json` recording the arguments, the resolved
//! parameters, the seed and the tool version. `snc replay <manifest>` reruns
//! the recorded invocation and compares the outputs byte for byte.
//!
//! Exit codes: 0 ok, 1 validation failure, 2 bad input.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytics::{rate_region_grid, GridSpec, PathProfile, RateRegionGrid, Scheme};
use crate::codec::CodeParams;
use crate::complexity::ComplexityBudget;
use crate::error::{invalid, Result};
use crate::lifecycle::{Decision, Event, FunctionDescriptor, Orchestrator, ServiceDescriptor};
use crate::linkdb::{GeoLink, GeoNode, LinkDb, LinkObservation, NodeRole};
use crate::optimizer::{
    connectivity_gain, reliability_gain_sweep, write_gain_csv, ConnectivityResult, Objective,
    OptimizerConfig,
};
use crate::oracle::{RelayMode, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;

#[derive(Parser, Debug, Clone, Serialize)]
#[command(name = "snc", version, about = "Systematic network coding analysis toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Two-hop achievable rate regions for coding at the relay and end-to-end coding.
    RateRegion(RateRegionArgs),
    /// Coded versus uncoded reliability over path length.
    Reliability(ReliabilityArgs),
    /// Connectivity gain table.
    Connectivity(ConnectivityArgs),
    /// Monte-Carlo check of the analytic reliability.
    Validate(ValidateArgs),
    /// Scripted instantiate, monitor, recode and terminate scenario.
    LifecycleDemo(LifecycleArgs),
    /// Rerun a manifest and compare outputs.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::RateRegion(_) => "rate-region",
            Command::Reliability(_) => "reliability",
            Command::Connectivity(_) => "connectivity",
            Command::Validate(_) => "validate",
            Command::LifecycleDemo(_) => "lifecycle-demo",
            Command::Replay(_) => "replay",
        }
    }

    fn run_args_mut(&mut self) -> Option<&mut RunArgs> {
        match self {
            Command::RateRegion(a) => Some(&mut a.run),
            Command::Reliability(a) => Some(&mut a.run),
            Command::Connectivity(a) => Some(&mut a.run),
            Command::Validate(a) => Some(&mut a.run),
            Command::LifecycleDemo(a) => Some(&mut a.run),
            Command::Replay(_) => None,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RunArgs {
    /// Output directory.
    #[arg(long, default_value = "snc-out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Ignore parameter flags and use the built-in reference configuration.
    #[arg(long)]
    pub defaults: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CodeArgs {
    /// Source packets per generation.
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    /// Packet length in bytes.
    #[arg(long = "L", default_value_t = 100)]
    pub packet_bytes: usize,
    /// Field exponent (GF(2^q)).
    #[arg(long, default_value_t = 8)]
    pub q: u8,
}

impl CodeArgs {
    fn template(&self) -> Result<CodeParams> {
        CodeParams::new(self.k, self.k, self.q, self.packet_bytes)
    }
}

/// Accepts plain integers or integral scientific notation such as `8e6`.
fn parse_gates(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("not a gate count: {s}"))?;
    if f >= 1.0 && f.fract() == 0.0 && f < u64::MAX as f64 {
        Ok(f as u64)
    } else {
        Err(format!("not a positive integral gate count: {s}"))
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BudgetArgs {
    /// Uniform ceilings, one budget per value.
    #[arg(long, value_delimiter = ',', value_parser = parse_gates)]
    pub beta0: Vec<u64>,
    #[arg(long, value_parser = parse_gates)]
    pub beta0_source: Option<u64>,
    #[arg(long, value_parser = parse_gates)]
    pub beta0_relay: Option<u64>,
    #[arg(long, value_parser = parse_gates)]
    pub beta0_dest: Option<u64>,
}

impl BudgetArgs {
    /// Each listed ceiling with the per-role overrides applied.
    fn budgets(&self, fallback: &[u64]) -> Result<Vec<ComplexityBudget>> {
        let base = if self.beta0.is_empty() { fallback } else { &self.beta0 };
        base.iter()
            .map(|&b| {
                ComplexityBudget::new(
                    self.beta0_source.unwrap_or(b),
                    self.beta0_relay.unwrap_or(b),
                    self.beta0_dest.unwrap_or(b),
                )
            })
            .collect()
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RateRegionArgs {
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    /// Residual erasure target.
    #[arg(long, default_value_t = 0.05)]
    pub eta0: f64,
    #[arg(long, default_value_t = 0.5)]
    pub rate_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rate_max: f64,
    #[arg(long, default_value_t = 0.5)]
    pub delta_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    /// Exit with status 1 unless both grids are transpose-symmetric.
    #[arg(long)]
    pub check_symmetry: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ReliabilityArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.15])]
    pub delta: Vec<f64>,
    #[arg(long, default_value_t = 0.8)]
    pub rho0: f64,
    /// Longest path swept.
    #[arg(long, default_value_t = 20)]
    pub hops: usize,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Utility)]
    pub objective: ObjectiveArg,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveArg {
    Utility,
    MaxRedundancy,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ConnectivityArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.15])]
    pub delta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.85])]
    pub rho0: Vec<f64>,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ValidateArgs {
    /// Block codes as `k:n`.
    #[arg(long, value_delimiter = ',', default_values = ["1:2", "10:12", "50:60", "50:63"])]
    pub code: Vec<String>,
    #[arg(long, default_value_t = 8)]
    pub q: u8,
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.15, 0.3])]
    pub delta: Vec<f64>,
    /// Path length; every hop up to it is compared.
    #[arg(long, default_value_t = 3)]
    pub hops: usize,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 3.0)]
    pub z: f64,
    #[arg(long, value_enum, default_value_t = RelayModeArg::DecodeReencode)]
    pub relay_mode: RelayModeArg,
    /// Subtracted from every analytic reliability before comparing.
    #[arg(long, default_value_t = 0.0)]
    pub perturb: f64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelayModeArg {
    DecodeReencode,
    ForwardOnly,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LifecycleArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    /// Initial erasure rate of every link.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Loss ratio reported during the spike.
    #[arg(long, default_value_t = 0.2)]
    pub spike: f64,
    #[arg(long, default_value_t = 0.8)]
    pub rho0: f64,
    #[arg(long, default_value_t = 2)]
    pub hops: usize,
    #[arg(long, value_parser = parse_gates, default_value = "10000000")]
    pub beta0: u64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Where to rerun; defaults to `replay/` next to the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Arguments after the program name, as given.
    pub args: Vec<String>,
    pub params: serde_json::Value,
    pub seed: u64,
    pub version: String,
    /// Output files, relative to the manifest's directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// A finished subcommand: files written and whether its checks passed.
struct Outcome {
    outputs: Vec<String>,
    passed: bool,
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
        }
    };
    let args: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli.command, &args) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VALIDATION,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_BAD_INPUT
        }
    }
}

fn with_defaults(cmd: Command) -> Result<Command> {
    let mut cmd = cmd;
    let Some(run) = cmd.run_args_mut().cloned() else {
        return Ok(cmd);
    };
    if !run.defaults {
        return Ok(cmd);
    }
    let mut fresh = Cli::try_parse_from(["snc", cmd.name()])
        .map_err(|e| invalid(e.to_string()))?
        .command;
    *fresh.run_args_mut().expect("same subcommand") = run;
    cmd = fresh;
    Ok(cmd)
}

fn execute(cmd: Command, args: &[String]) -> Result<bool> {
    let cmd = with_defaults(cmd)?;
    if let Command::Replay(r) = &cmd {
        return replay(r);
    }
    let mut cmd = cmd;
    let run = cmd.run_args_mut().expect("non-replay").clone();
    fs::create_dir_all(&run.out)?;
    let outcome = match &cmd {
        Command::RateRegion(a) => cmd_rate_region(a)?,
        Command::Reliability(a) => cmd_reliability(a)?,
        Command::Connectivity(a) => cmd_connectivity(a)?,
        Command::Validate(a) => cmd_validate(a)?,
        Command::LifecycleDemo(a) => cmd_lifecycle_demo(a)?,
        Command::Replay(_) => unreachable!(),
    };
    let manifest = RunManifest {
        subcommand: cmd.name().into(),
        args: args.to_vec(),
        params: serde_json::to_value(&cmd)?,
        seed: run.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        outputs: outcome.outputs,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(run.out.join(format!("{}.manifest.json", cmd.name())), text)?;
    Ok(outcome.passed)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn write_grid(grid: &RateRegionGrid, run: &RunArgs) -> Result<String> {
    let name = format!("rate_region_{}.{}", grid.scheme, run.format.ext());
    match run.format {
        Format::Csv => {
            let mut w = create(&run.out, &name)?;
            grid.write_csv(&mut w)?;
            w.flush()?;
        }
        Format::Json => write_json(&run.out, &name, grid)?,
    }
    Ok(name)
}

/// Feasible-cell counts and shape checks for a pair of rate-region grids.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionSummary {
    pub nc_feasible: usize,
    pub e2e_feasible: usize,
    pub area_ratio: Option<f64>,
    pub nc_product_mismatches: usize,
    pub e2e_product_mismatches: usize,
    pub nc_symmetric: bool,
    pub e2e_symmetric: bool,
}

impl RegionSummary {
    pub fn of(nc: &RateRegionGrid, e2e: &RateRegionGrid) -> Self {
        let (a, b) = (nc.feasible_count(), e2e.feasible_count());
        Self {
            nc_feasible: a,
            e2e_feasible: b,
            area_ratio: (b > 0).then(|| a as f64 / b as f64),
            nc_product_mismatches: nc.product_set_mismatches().len(),
            e2e_product_mismatches: e2e.product_set_mismatches().len(),
            nc_symmetric: nc.is_transpose_symmetric(),
            e2e_symmetric: e2e.is_transpose_symmetric(),
        }
    }
}

fn cmd_rate_region(a: &RateRegionArgs) -> Result<Outcome> {
    let spec = GridSpec {
        k: a.k,
        rate_min: a.rate_min,
        rate_max: a.rate_max,
        eta0: a.eta0,
        delta_max: a.delta_max,
        step: a.grid_step,
    };
    if !(a.eta0 > 0.0 && a.eta0 < 1.0) {
        return Err(invalid(format!("eta0 {} outside (0,1)", a.eta0)));
    }
    let nc = rate_region_grid(Scheme::NcCase, &spec)?;
    let e2e = rate_region_grid(Scheme::EndToEnd, &spec)?;
    let outputs = vec![write_grid(&nc, &a.run)?, write_grid(&e2e, &a.run)?];
    let s = RegionSummary::of(&nc, &e2e);
    println!(
        "rate-region: nc_feasible={} e2e_feasible={} area_ratio={} nc_product_mismatches={} symmetric={}",
        s.nc_feasible,
        s.e2e_feasible,
        s.area_ratio.map(|r| format!("{r:.4}")).unwrap_or_else(|| "undefined".into()),
        s.nc_product_mismatches,
        s.nc_symmetric && s.e2e_symmetric
    );
    let passed = !a.check_symmetry || (s.nc_symmetric && s.e2e_symmetric);
    Ok(Outcome { outputs, passed })
}

fn cmd_reliability(a: &ReliabilityArgs) -> Result<Outcome> {
    let template = a.code.template()?;
    let objective = match a.objective {
        ObjectiveArg::Utility => Objective::UtilityArgmax,
        ObjectiveArg::MaxRedundancy => Objective::MaxRedundancy,
    };
    let config = OptimizerConfig { objective, ..OptimizerConfig::default() };
    let mut records = Vec::new();
    for budget in a.budget.budgets(&[8_000_000, 10_000_000])? {
        for &delta in &a.delta {
            let sweep = reliability_gain_sweep(&template, delta, a.rho0, &budget, a.hops, &config)?;
            let reach = sweep.iter().take_while(|r| r.rho_nc >= a.rho0).count();
            println!("reliability: beta0={} delta={delta} target met up to h={reach}", budget.beta0_source);
            records.extend(sweep);
        }
    }
    let name = format!("reliability.{}", a.run.format.ext());
    match a.run.format {
        Format::Csv => {
            let mut w = create(&a.run.out, &name)?;
            write_gain_csv(&mut w, &records)?;
            w.flush()?;
        }
        Format::Json => write_json(&a.run.out, &name, &records)?,
    }
    Ok(Outcome { outputs: vec![name], passed: true })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConnectivityRow {
    pub beta0: u64,
    pub delta: f64,
    pub rho0: f64,
    #[serde(flatten)]
    pub result: ConnectivityResult,
}

pub const CONNECTIVITY_CSV_HEADER: &str = "beta0,delta,rho0,h_nc,h_unc,gamma,n_single_hop,n_multi_hop,capped";

impl ConnectivityRow {
    pub fn csv_row(&self) -> String {
        let r = &self.result;
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.beta0,
            self.delta,
            self.rho0,
            r.h_nc,
            r.h_unc,
            r.gamma.map(|g| g.to_string()).unwrap_or_else(|| "undefined".into()),
            r.n_single_hop,
            r.n_multi_hop,
            r.capped
        )
    }
}

/// Connectivity gain over the full grid, keyed by the source ceiling.
pub fn connectivity_table(
    template: &CodeParams,
    budgets: &[ComplexityBudget],
    deltas: &[f64],
    rho0s: &[f64],
) -> Result<Vec<ConnectivityRow>> {
    let mut rows = Vec::new();
    for b in budgets {
        for &delta in deltas {
            for &rho0 in rho0s {
                rows.push(ConnectivityRow {
                    beta0: b.beta0_source,
                    delta,
                    rho0,
                    result: connectivity_gain(template, delta, rho0, b, None)?,
                });
            }
        }
    }
    Ok(rows)
}

/// Pairs breaking "gamma nondecreasing in the ceiling, nonincreasing in
/// delta". Undefined gammas are skipped.
pub fn monotonicity_violations(rows: &[ConnectivityRow]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for (j, b) in rows.iter().enumerate() {
            let (Some(ga), Some(gb)) = (a.result.gamma, b.result.gamma) else { continue };
            let bad_beta = a.delta == b.delta && a.rho0 == b.rho0 && a.beta0 < b.beta0 && ga > gb;
            let bad_delta = a.beta0 == b.beta0 && a.rho0 == b.rho0 && a.delta < b.delta && ga < gb;
            if bad_beta || bad_delta {
                out.push((i, j));
            }
        }
    }
    out
}

fn cmd_connectivity(a: &ConnectivityArgs) -> Result<Outcome> {
    let template = a.code.template()?;
    let budgets = a.budget.budgets(&[5_000_000, 8_000_000, 10_000_000])?;
    let rows = connectivity_table(&template, &budgets, &a.delta, &a.rho0)?;
    let violations = monotonicity_violations(&rows);
    for r in &rows {
        println!(
            "connectivity: beta0={} delta={} rho0={} h_nc={} h_unc={} gamma={}",
            r.beta0,
            r.delta,
            r.rho0,
            r.result.h_nc,
            r.result.h_unc,
            r.result.gamma.map(|g| format!("{g:.3}")).unwrap_or_else(|| "undefined".into())
        );
    }
    println!("connectivity: monotonicity violations={}", violations.len());
    let name = format!("connectivity.{}", a.run.format.ext());
    match a.run.format {
        Format::Csv => {
            let mut w = create(&a.run.out, &name)?;
            writeln!(w, "{CONNECTIVITY_CSV_HEADER}")?;
            for r in &rows {
                writeln!(w, "{}", r.csv_row())?;
            }
            w.flush()?;
        }
        Format::Json => write_json(&a.run.out, &name, &rows)?,
    }
    Ok(Outcome { outputs: vec![name], passed: true })
}

fn parse_code(s: &str) -> Result<(usize, usize)> {
    let (k, n) = s.split_once(':').ok_or_else(|| invalid(format!("code {s} is not k:n")))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| invalid(format!("code {s} is not k:n")));
    Ok((parse(k)?, parse(n)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationRow {
    pub k: usize,
    pub n: usize,
    pub delta: f64,
    pub hop: usize,
    pub quantity: String,
    pub analytic: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub z_score: f64,
    pub pass: bool,
}

const VALIDATION_CSV_HEADER: &str = "k,n,delta,hop,quantity,analytic,estimate,stderr,z_score,pass";

fn cmd_validate(a: &ValidateArgs) -> Result<Outcome> {
    let codes: Vec<(usize, usize)> = a.code.iter().map(|c| parse_code(c)).collect::<Result<_>>()?;
    let mode = match a.relay_mode {
        RelayModeArg::DecodeReencode => RelayMode::DecodeReencode,
        RelayModeArg::ForwardOnly => RelayMode::ForwardOnly,
    };
    let mut rows = Vec::new();
    let mut index = 0u64;
    for &(k, n) in &codes {
        for &delta in &a.delta {
            let params = CodeParams::new(k, n, a.q, 1)?;
            let path = PathProfile::homogeneous(delta, a.hops)?;
            let cfg = SimConfig::new(params, path, a.trials, a.run.seed.wrapping_add(index)).with_mode(mode);
            index += 1;
            let est = crate::oracle::simulate(&cfg)?;
            let analytic: Vec<f64> = cfg.analytic_rho()?.iter().map(|r| r - a.perturb).collect();
            let report = crate::oracle::compare(&analytic, &est, a.z)?;
            for c in &report.rows {
                rows.push(ValidationRow {
                    k,
                    n,
                    delta,
                    hop: c.hop,
                    quantity: c.quantity.clone(),
                    analytic: c.analytic,
                    estimate: c.estimate,
                    stderr: c.stderr,
                    z_score: c.z_score(),
                    pass: c.pass,
                });
            }
        }
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    println!("validate: {}/{} comparisons within {} standard errors", rows.len() - failed, rows.len(), a.z);
    for r in rows.iter().filter(|r| !r.pass) {
        println!(
            "validate: FAIL k={} n={} delta={} hop={} {} analytic={:.6} estimate={:.6} z={:.2}",
            r.k, r.n, r.delta, r.hop, r.quantity, r.analytic, r.estimate, r.z_score
        );
    }
    let name = format!("validate.{}", a.run.format.ext());
    match a.run.format {
        Format::Csv => {
            let mut w = create(&a.run.out, &name)?;
            writeln!(w, "{VALIDATION_CSV_HEADER}")?;
            for r in &rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.k, r.n, r.delta, r.hop, r.quantity, r.analytic, r.estimate, r.stderr, r.z_score, r.pass
                )?;
            }
            w.flush()?;
        }
        Format::Json => write_json(&a.run.out, &name, &rows)?,
    }
    Ok(Outcome { outputs: vec![name], passed: failed == 0 })
}

fn demo_orchestrator(a: &LifecycleArgs, t0: DateTime<Utc>) -> Result<Orchestrator> {
    if a.hops == 0 {
        return Err(invalid("hops must be at least 1"));
    }
    let mut db = LinkDb::empty();
    for i in 0..=a.hops {
        let role = match i {
            0 => NodeRole::Source,
            i if i == a.hops => NodeRole::Sink,
            _ => NodeRole::Relay,
        };
        db.add_node(GeoNode { id: format!("n{i}"), lat: 0.0, lon: 10.0 * i as f64, role, nc_capable: true })?;
    }
    for i in 0..a.hops {
        db.add_link(GeoLink {
            src: format!("n{i}"),
            dst: format!("n{}", i + 1),
            delta: a.delta,
            samples: 0,
            updated_at: t0,
        })?;
    }
    let mut o = Orchestrator::new(db);
    o.register_function(FunctionDescriptor { name: "snc".into(), resource_units: 1 })?;
    o.register_service(ServiceDescriptor {
        name: "demo".into(),
        src: "n0".into(),
        dst: format!("n{}", a.hops),
        function: "snc".into(),
        k: a.code.k,
        q: a.code.q,
        packet_bytes: a.code.packet_bytes,
        rho0: a.rho0,
        budget: ComplexityBudget::uniform(a.beta0)?,
    })?;
    Ok(o)
}

/// Losses out of `sent` packets at independent erasure rate `p`.
fn sample_losses(rng: &mut ChaCha8Rng, sent: u64, p: f64) -> u64 {
    (0..sent).filter(|_| rng.random::<f64>() < p).count() as u64
}

const DEMO_PACKETS: u64 = 1000;
const DEMO_MAX_SPIKE_TICKS: usize = 20;

fn cmd_lifecycle_demo(a: &LifecycleArgs) -> Result<Outcome> {
    if !(0.0..=1.0).contains(&a.spike) {
        return Err(invalid(format!("spike {} outside [0,1]", a.spike)));
    }
    let t0: DateTime<Utc> = "2024-01-01T00:00:00Z".parse().expect("fixed epoch");
    let mut o = demo_orchestrator(a, t0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.run.seed);
    let id = o.create_instance();
    for e in [
        Event::UserRequest { service: "demo".into() },
        Event::OeDispatch,
        Event::VimAllocationAck { units: 1 },
        Event::VnfmConfigAck,
    ] {
        o.handle_event(&id, e)?;
    }
    let mut tick = 0i64;
    let mut report = |rng: &mut ChaCha8Rng, p: f64| -> Vec<LinkObservation> {
        tick += 1;
        (0..a.hops)
            .map(|i| LinkObservation {
                src: format!("n{i}"),
                dst: format!("n{}", i + 1),
                sent: DEMO_PACKETS,
                lost: sample_losses(rng, DEMO_PACKETS, p),
                timestamp: t0 + chrono::Duration::seconds(tick),
            })
            .collect()
    };
    let mut policies = vec![o.monitoring_tick(&id, report(&mut rng, a.delta))?];
    for _ in 0..DEMO_MAX_SPIKE_TICKS {
        let p = o.monitoring_tick(&id, report(&mut rng, a.spike))?;
        let stop = p.decision != Decision::Keep;
        policies.push(p);
        if stop {
            break;
        }
    }
    for e in [Event::TerminationRequest, Event::VnfmTerminationAck, Event::VimTerminationAck] {
        o.handle_event(&id, e)?;
    }
    for p in &policies {
        println!(
            "lifecycle-demo: loss={:.3} reliability={:.4} decision={}",
            p.observed_loss,
            p.reliability,
            serde_json::to_string(&p.decision)?
        );
    }
    let log_name = "lifecycle.jsonl".to_string();
    let mut w = create(&a.run.out, &log_name)?;
    o.write_log(&mut w)?;
    w.flush()?;
    let policy_name = "lifecycle_policy.json".to_string();
    write_json(&a.run.out, &policy_name, &policies)?;
    Ok(Outcome { outputs: vec![log_name, policy_name], passed: true })
}

fn replay(r: &ReplayArgs) -> Result<bool> {
    let manifest = RunManifest::load(&r.manifest)?;
    let origin = r.manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let target = r.out.clone().unwrap_or_else(|| origin.join("replay"));
    let argv = std::iter::once("snc".to_string()).chain(manifest.args.iter().cloned());
    let mut cmd = Cli::try_parse_from(argv).map_err(|e| invalid(format!("manifest arguments: {e}")))?.command;
    if matches!(cmd, Command::Replay(_)) {
        return Err(invalid("manifest records a replay"));
    }
    cmd.run_args_mut().expect("non-replay").out = target.clone();
    execute(cmd, &manifest.args)?;
    let mut identical = true;
    for name in &manifest.outputs {
        let same = fs::read(origin.join(name))? == fs::read(target.join(name))?;
        println!("replay: {name} {}", if same { "identical" } else { "differs" });
        identical &= same;
    }
    Ok(identical)
}
