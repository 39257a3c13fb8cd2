//! Command-line front end.
//!
//! Every subcommand reads and writes the plain-text formats of the library.
//! `--config FILE` supplies `key = value` defaults for the subcommand's flags;
//! flags given on the command line win. Exit status is 0 on success, 2 when
//! `detect` flags at least one window, 1 on any error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::characterize::{characterize_windows, write_classifications, write_throttles};
use crate::detect::{compute_thresholds, read_verdicts, write_verdicts, Conditions, DetectionRun, FactorTable, ToleranceFactors};
use crate::error::{Error, Result};
use crate::eval::{
    per_attack_breakdown, read_grid, read_window_records, score_records_by_protocol, sweep, window_labels,
    window_records, write_breakdown, write_roc, write_score, write_score_row, write_window_records, ScoreReport,
    Truth, WindowRecords,
};
use crate::flow::ProtocolCategory;
use crate::interchange::{load_events, load_truth, open_text, write_events, write_truth};
use crate::kdd::{self, KddDosFilter, KddFlowIdentity, RecordCountWindowing, Split};
use crate::profile::{PerFlowBasis, ProfileOptions, ProfileSet, DEFAULT_WINDOW_SECONDS};
use crate::simulate::{generate, ScenarioConfig, ScenarioKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_ATTACK: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fvba", version, about = "Flow-volume based flooding DDoS detection", args_override_self = true)]
pub struct Cli {
    /// File of `key = value` lines used as defaults for the subcommand flags
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads; output does not depend on it
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build per-protocol normal profiles from an attack-free event file
    Profile(ProfileArgs),
    /// Flag windows that leave the profile
    Detect(DetectArgs),
    /// Sort the flows of flagged windows into normal, suspicious and attack
    Characterize(CharacterizeArgs),
    /// Generate a labelled scenario event stream
    Simulate(SimulateArgs),
    /// Ingest KDD 99 records, optionally evaluating against a training file
    Kdd(KddArgs),
    /// Score a tolerance-factor grid
    Sweep(SweepArgs),
    /// Score a verdict file against ground truth
    Score(ScoreArgs),
}

#[derive(Debug, Clone, Args)]
pub struct FactorArgs {
    /// r1 for every protocol
    #[arg(long)]
    pub r1: Option<f64>,
    /// r2 for every protocol
    #[arg(long)]
    pub r2: Option<f64>,
    /// r3 (UDP lower volume bound)
    #[arg(long)]
    pub r3: Option<f64>,
    #[arg(long)]
    pub tcp_r1: Option<f64>,
    #[arg(long)]
    pub tcp_r2: Option<f64>,
    #[arg(long)]
    pub udp_r1: Option<f64>,
    #[arg(long)]
    pub udp_r2: Option<f64>,
    #[arg(long)]
    pub udp_r3: Option<f64>,
    #[arg(long)]
    pub icmp_r1: Option<f64>,
    #[arg(long)]
    pub icmp_r2: Option<f64>,
}

impl FactorArgs {
    /// Tuned per-protocol defaults, overridden by the shared flags and then
    /// by the protocol-specific ones.
    pub fn table(&self) -> Result<FactorTable> {
        let mut table = FactorTable::default();
        for p in ProtocolCategory::ALL {
            let base = table.get(p);
            let (r1, r2, r3) = match p {
                ProtocolCategory::Tcp => (self.tcp_r1, self.tcp_r2, None),
                ProtocolCategory::Udp => (self.udp_r1, self.udp_r2, self.udp_r3.or(self.r3)),
                ProtocolCategory::Icmp => (self.icmp_r1, self.icmp_r2, None),
            };
            let factors = ToleranceFactors::new(
                r1.or(self.r1).unwrap_or(base.r1()),
                r2.or(self.r2).unwrap_or(base.r2()),
                r3.or(base.r3()),
            )?;
            table.set(p, factors);
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConditionArg {
    All,
    Volume,
    Flow,
}

impl From<ConditionArg> for Conditions {
    fn from(c: ConditionArg) -> Self {
        match c {
            ConditionArg::All => Conditions::ALL,
            ConditionArg::Volume => Conditions::VOLUME_ONLY,
            ConditionArg::Flow => Conditions::FLOW_ONLY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Capture,
    Window,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Unit {
    Window,
    Record,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    AttackFree,
    HighRate,
    LowRate,
    VariedRate,
}

impl From<ScenarioArg> for ScenarioKind {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::AttackFree => ScenarioKind::AttackFree,
            ScenarioArg::HighRate => ScenarioKind::HighRateDisruptive,
            ScenarioArg::LowRate => ScenarioKind::DilutedLowRate,
            ScenarioArg::VariedRate => ScenarioKind::VariedRate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Training,
    Testing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IdentityArg {
    ServiceFlag,
    Record,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Attack-free flow events
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long, default_value_t = DEFAULT_WINDOW_SECONDS)]
    pub window_seconds: f64,
    /// Train on exactly the first N windows of each protocol
    #[arg(long, value_name = "N")]
    pub training_windows: Option<usize>,
    /// Per-flow byte totals over the whole capture or per window
    #[arg(long, value_enum, default_value_t = BasisArg::Capture)]
    pub per_flow_basis: BasisArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub profile: PathBuf,
    #[command(flatten)]
    pub factors: FactorArgs,
    #[arg(long, value_enum, default_value_t = ConditionArg::All)]
    pub conditions: ConditionArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CharacterizeArgs {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub profile: PathBuf,
    #[command(flatten)]
    pub factors: FactorArgs,
    #[arg(long, value_enum, default_value_t = ConditionArg::All)]
    pub conditions: ConditionArg,
    /// Flow classifications
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rate-throttle recommendations for suspicious flows
    #[arg(long)]
    pub throttles: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub clients: Option<u32>,
    /// Requests per second per client
    #[arg(long)]
    pub request_rate: Option<f64>,
    #[arg(long)]
    pub request_bytes: Option<u64>,
    /// Per-client link rate, bits per second
    #[arg(long)]
    pub link_bps: Option<f64>,
    /// Share of legitimate requests carried over UDP
    #[arg(long)]
    pub udp_fraction: Option<f64>,
    #[arg(long)]
    pub zombies: Option<u32>,
    #[arg(long)]
    pub high_rate_bps: Option<f64>,
    #[arg(long)]
    pub low_rate_bps: Option<f64>,
    /// Share of high-rate zombies in a varied-rate attack
    #[arg(long)]
    pub high_rate_fraction: Option<f64>,
    #[arg(long)]
    pub attack_start: Option<f64>,
    #[arg(long)]
    pub attack_end: Option<f64>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_WINDOW_SECONDS)]
    pub window_seconds: f64,
    /// Event file
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flow truth sidecar
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

impl SimulateArgs {
    pub fn config(&self) -> ScenarioConfig {
        let mut c = ScenarioConfig::desk_scale(self.scenario.into());
        c.seed = self.seed;
        c.window_length = self.window_seconds;
        macro_rules! apply {
            ($($field:ident <- $arg:ident),*) => {
                $(if let Some(v) = self.$arg { c.$field = v; })*
            };
        }
        apply!(
            legit_clients <- clients,
            legit_request_rate <- request_rate,
            legit_bytes_per_request <- request_bytes,
            legit_link_bps <- link_bps,
            legit_udp_fraction <- udp_fraction,
            zombies <- zombies,
            high_rate_bps <- high_rate_bps,
            low_rate_bps <- low_rate_bps,
            high_rate_fraction <- high_rate_fraction,
            attack_start <- attack_start,
            attack_end <- attack_end,
            duration <- duration
        );
        c
    }
}

#[derive(Debug, Args)]
pub struct KddArgs {
    /// KDD record file, plain or gzip
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Training)]
    pub split: SplitArg,
    /// Records per synthetic window
    #[arg(long, default_value_t = kdd::DEFAULT_RECORDS_PER_WINDOW)]
    pub record_window: usize,
    #[arg(long, value_enum, default_value_t = IdentityArg::ServiceFlag)]
    pub identity: IdentityArg,
    #[arg(long, default_value_t = DEFAULT_WINDOW_SECONDS)]
    pub window_seconds: f64,
    /// Training file whose normal records build the profiles; enables scoring
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[command(flatten)]
    pub factors: FactorArgs,
    /// Record and label counts (default stdout)
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Flow events of the retained records
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-window record truth
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Profiles built from the training file
    #[arg(long)]
    pub profile_out: Option<PathBuf>,
    /// Per-protocol scores (default stdout)
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Per-attack detection table (default stdout)
    #[arg(long)]
    pub breakdown: Option<PathBuf>,
    /// Verdicts of the scored run
    #[arg(long)]
    pub verdicts: Option<PathBuf>,
}

impl KddArgs {
    fn windowing(&self) -> RecordCountWindowing {
        RecordCountWindowing {
            records_per_window: self.record_window,
            identity: match self.identity {
                IdentityArg::ServiceFlag => KddFlowIdentity::ServiceFlag,
                IdentityArg::Record => KddFlowIdentity::PerRecord,
            },
            window_length: self.window_seconds,
        }
    }
}

#[derive(Debug, Args)]
pub struct TruthArgs {
    /// Flow events; needed with --truth, and by sweep
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Flow truth sidecar
    #[arg(long, requires = "events", conflicts_with = "window_truth")]
    pub truth: Option<PathBuf>,
    /// Per-window record truth
    #[arg(long)]
    pub window_truth: Option<PathBuf>,
    /// Scoring unit; defaults to window for flow truth, record for window truth
    #[arg(long, value_enum)]
    pub unit: Option<Unit>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[command(flatten)]
    pub truth: TruthArgs,
    /// Grid file, one `r1 r2 [r3]` row per point
    #[arg(long, conflicts_with = "range")]
    pub grid: Option<PathBuf>,
    /// `FROM:TO[:STEP]`, sweeping r1 = r2 = r3 together
    #[arg(long)]
    pub range: Option<String>,
    #[arg(long, value_enum, default_value_t = ConditionArg::All)]
    pub conditions: ConditionArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub verdicts: PathBuf,
    #[command(flatten)]
    pub truth: TruthArgs,
    #[arg(long, default_value_t = DEFAULT_WINDOW_SECONDS)]
    pub window_seconds: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-attack table (record unit only)
    #[arg(long)]
    pub breakdown: Option<PathBuf>,
}

/// An error tagged with the pipeline stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: String,
    pub source: Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {}

type CliResult<T> = std::result::Result<T, StageError>;

trait Stage<T> {
    fn stage(self, name: &str) -> CliResult<T>;
}

impl<T, E: Into<Error>> Stage<T> for std::result::Result<T, E> {
    fn stage(self, name: &str) -> CliResult<T> {
        self.map_err(|e| StageError { stage: name.to_string(), source: e.into() })
    }
}

fn stage_err(name: &str, message: impl Into<String>) -> StageError {
    StageError { stage: name.to_string(), source: Error::Parameter(message.into()) }
}

const SUBCOMMANDS: [&str; 7] = ["profile", "detect", "characterize", "simulate", "kdd", "sweep", "score"];

/// Reads `key = value` lines into `--key=value` arguments.
pub fn read_config(path: &Path) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path)?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(&name, i + 1, "expected key = value"))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(Error::parse(&name, i + 1, format!("invalid key '{key}'")));
        }
        out.push(format!("--{key}={}", value.trim()).into());
    }
    Ok(out)
}

/// Moves config-file settings in front of the command-line flags so that the
/// latter override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut config = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut iter = args.into_iter();
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            config = iter.next().map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let settings = read_config(&path)?;
    match rest.iter().position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref())) {
        Some(at) => {
            rest.splice(at + 1..at + 1, settings);
            Ok(rest)
        }
        None => Ok(rest),
    }
}

/// Parses arguments and runs the subcommand, printing errors to stderr.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("fvba: config: {e}");
            return EXIT_ERROR;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("fvba: {e}");
            EXIT_ERROR
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<i32> {
    let jobs = cli.jobs;
    match &cli.command {
        Command::Profile(a) => cmd_profile(a, jobs),
        Command::Detect(a) => cmd_detect(a, jobs),
        Command::Characterize(a) => cmd_characterize(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Kdd(a) => cmd_kdd(a, jobs),
        Command::Sweep(a) => cmd_sweep(a, jobs),
        Command::Score(a) => cmd_score(a),
    }
}

fn create(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn emit(path: &Option<PathBuf>, stage: &str, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> CliResult<()> {
    let mut w = create(path).stage(stage)?;
    f(&mut w).stage(stage)?;
    w.flush().stage(stage)
}

fn load_profile(path: &Path) -> CliResult<ProfileSet> {
    ProfileSet::load(path).stage("reading profile")
}

fn cmd_profile(a: &ProfileArgs, jobs: usize) -> CliResult<i32> {
    let events = load_events(&a.events).stage("reading events")?;
    let options = ProfileOptions {
        per_flow_basis: match a.per_flow_basis {
            BasisArg::Capture => PerFlowBasis::Capture,
            BasisArg::Window => PerFlowBasis::Window,
        },
        training_windows: a.training_windows,
    };
    let set = ProfileSet::train(&events, a.window_seconds, options, jobs).stage("profiling")?;
    emit(&a.out, "writing profile", |w| set.write_to(w))?;
    Ok(EXIT_OK)
}

fn detection_run(events: &Path, profile: &Path, conditions: ConditionArg) -> CliResult<DetectionRun> {
    let profiles = load_profile(profile)?;
    let events = load_events(events).stage("reading events")?;
    Ok(DetectionRun::from_events(&events, profiles)
        .stage("windowing")?
        .with_conditions(conditions.into()))
}

fn cmd_detect(a: &DetectArgs, jobs: usize) -> CliResult<i32> {
    let factors = a.factors.table().stage("tolerance factors")?;
    let run = detection_run(&a.events, &a.profile, a.conditions)?;
    let verdicts = crate::with_jobs(jobs, || run.verdicts(&factors)).stage("detection")?;
    emit(&a.out, "writing verdicts", |w| write_verdicts(w, &verdicts))?;
    Ok(if verdicts.iter().any(|v| v.is_attack()) { EXIT_ATTACK } else { EXIT_OK })
}

fn cmd_characterize(a: &CharacterizeArgs) -> CliResult<i32> {
    let factors = a.factors.table().stage("tolerance factors")?;
    let run = detection_run(&a.events, &a.profile, a.conditions)?;
    let mut windows = Vec::new();
    for (&p, samples) in run.windows() {
        if samples.is_empty() {
            continue;
        }
        let profile = run.profiles().get(p).ok_or(Error::MissingProfile(p)).stage("characterization")?;
        let thresholds = compute_thresholds(profile, &factors.get(p)).stage("thresholds")?;
        windows.extend(characterize_windows(samples, profile, &thresholds, run.conditions()).stage("characterization")?);
    }
    // protocols are characterised one after another; interleave by window
    windows.sort_by_key(|w| (w.window_index, w.classifications.first().map(|c| c.key.protocol())));
    emit(&a.out, "writing classifications", |w| write_classifications(w, &windows))?;
    if a.throttles.is_some() {
        emit(&a.throttles, "writing throttles", |w| write_throttles(w, &windows))?;
    }
    Ok(EXIT_OK)
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<i32> {
    let stream = generate(&a.config()).stage("simulation")?;
    emit(&a.out, "writing events", |w| write_events(w, &stream.events))?;
    if a.truth.is_some() {
        emit(&a.truth, "writing truth", |w| write_truth(w, &stream.truth))?;
    }
    Ok(EXIT_OK)
}

fn cmd_kdd(a: &KddArgs, jobs: usize) -> CliResult<i32> {
    let split = match a.split {
        SplitArg::Training => Split::Training,
        SplitArg::Testing => Split::Testing,
    };
    let windowing = a.windowing();
    windowing.validate().stage("windowing")?;
    let filter = KddDosFilter::default();
    let load = kdd::load(&a.input, &filter, split).stage("parsing records")?;
    emit(&a.summary, "writing summary", |w| kdd::write_summary(w, &load.summary))?;

    if a.out.is_some() {
        let events = kdd::to_flow_events(&load.connections, &windowing).stage("flow events")?;
        emit(&a.out, "writing events", |w| write_events(w, &events))?;
    }
    if a.truth.is_some() {
        let windows = kdd::to_windows(&load.connections, &windowing).stage("windowing")?;
        emit(&a.truth, "writing truth", |w| write_window_records(w, &windows.truth))?;
    }

    let Some(train_path) = &a.train else {
        return Ok(EXIT_OK);
    };
    let factors = a.factors.table().stage("tolerance factors")?;
    let normal = if *train_path == a.input && split == Split::Training {
        load.normal()
    } else {
        kdd::load(train_path, &filter, Split::Training)
            .stage("parsing training records")?
            .normal()
    };
    let profiles = kdd::train_profiles(&normal, &windowing, ProfileOptions::default()).stage("profiling")?;
    finish_kdd(a, &profiles, &load.connections, &windowing, &factors, jobs)
}

fn finish_kdd(
    a: &KddArgs,
    profiles: &ProfileSet,
    target: &[kdd::KddConnection],
    windowing: &RecordCountWindowing,
    factors: &FactorTable,
    jobs: usize,
) -> CliResult<i32> {
    if a.profile_out.is_some() {
        emit(&a.profile_out, "writing profile", |w| profiles.write_to(w))?;
    }
    let result = kdd::evaluate(profiles, target, windowing, factors, jobs).stage("evaluation")?;
    if a.verdicts.is_some() {
        emit(&a.verdicts, "writing verdicts", |w| write_verdicts(w, &result.verdicts))?;
    }
    emit(&a.scores, "writing scores", |w| write_protocol_scores(w, &result.per_protocol, &result.overall))?;
    emit(&a.breakdown, "writing breakdown", |w| write_breakdown(w, &result.breakdown))?;
    Ok(EXIT_OK)
}

fn write_protocol_scores(
    mut w: &mut dyn Write,
    per_protocol: &BTreeMap<ProtocolCategory, ScoreReport>,
    overall: &ScoreReport,
) -> Result<()> {
    let mut rows = per_protocol.iter();
    match rows.next() {
        Some((p, r)) => write_score(&mut w, p.as_str(), r)?,
        None => return write_score(&mut w, "overall", overall),
    }
    for (p, r) in rows {
        write_score_row(&mut w, p.as_str(), r)?;
    }
    write_score_row(&mut w, "overall", overall)
}

enum LoadedTruth {
    Flows(BTreeMap<u64, bool>, Vec<WindowRecords>),
    Windows(Vec<WindowRecords>),
}

fn load_truth_args(t: &TruthArgs, window_length: f64) -> CliResult<(LoadedTruth, Unit)> {
    match (&t.truth, &t.window_truth) {
        (Some(truth), None) => {
            let events_path = t.events.as_ref().ok_or_else(|| stage_err("reading truth", "--truth needs --events"))?;
            let events = load_events(events_path).stage("reading events")?;
            let truth = load_truth(truth).stage("reading truth")?;
            let labels = window_labels(&events, &truth, window_length).stage("labelling windows")?;
            let records = window_records(&events, &truth, window_length).stage("labelling windows")?;
            Ok((LoadedTruth::Flows(labels, records), t.unit.unwrap_or(Unit::Window)))
        }
        (None, Some(path)) => {
            let records = read_window_records(open_text(path).stage("reading truth")?, &path.display().to_string())
                .stage("reading truth")?;
            Ok((LoadedTruth::Windows(records), t.unit.unwrap_or(Unit::Record)))
        }
        _ => Err(stage_err("reading truth", "give exactly one of --truth or --window-truth")),
    }
}

fn to_truth(loaded: LoadedTruth, unit: Unit) -> Truth {
    match (loaded, unit) {
        (LoadedTruth::Flows(labels, _), Unit::Window) => Truth::Windows(labels),
        (LoadedTruth::Flows(_, records), Unit::Record) | (LoadedTruth::Windows(records), Unit::Record) => {
            Truth::Records(records)
        }
        (LoadedTruth::Windows(records), Unit::Window) => {
            let mut labels: BTreeMap<u64, bool> = BTreeMap::new();
            for r in &records {
                *labels.entry(r.window_index).or_default() |= r.is_attack();
            }
            Truth::Windows(labels)
        }
    }
}

/// `FROM:TO[:STEP]` expanded to factor triples with `r1 = r2 = r3`.
pub fn parse_range(spec: &str) -> Result<Vec<ToleranceFactors>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|e| Error::param(format!("range '{spec}': {e}"))))
        .collect::<Result<_>>()?;
    let (from, to, step) = match parts[..] {
        [from, to] => (from, to, 1.0),
        [from, to, step] => (from, to, step),
        _ => return Err(Error::param(format!("range '{spec}' must be FROM:TO or FROM:TO:STEP"))),
    };
    if step.is_nan() || step <= 0.0 || to < from {
        return Err(Error::param(format!("range '{spec}' is empty or has a non-positive step")));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| {
            let r = from + i as f64 * step;
            ToleranceFactors::new(r, r, Some(r))
        })
        .collect()
}

fn cmd_sweep(a: &SweepArgs, jobs: usize) -> CliResult<i32> {
    let grid = match (&a.grid, &a.range) {
        (Some(path), None) => {
            let file = File::open(path).stage("reading grid")?;
            read_grid(BufReader::new(file), &path.display().to_string()).stage("reading grid")?
        }
        (None, Some(spec)) => parse_range(spec).stage("reading grid")?,
        _ => return Err(stage_err("reading grid", "give exactly one of --grid or --range")),
    };
    let profiles = load_profile(&a.profile)?;
    let window_length = profiles.window_length().stage("reading profile")?;
    let events_path = a
        .truth
        .events
        .as_ref()
        .ok_or_else(|| stage_err("reading events", "--events is required"))?;
    let events = load_events(events_path).stage("reading events")?;
    let (loaded, unit) = load_truth_args(&a.truth, window_length)?;
    let truth = to_truth(loaded, unit);
    let run = DetectionRun::from_events(&events, profiles)
        .stage("windowing")?
        .with_conditions(a.conditions.into());
    let points = sweep(&run, &truth, &grid, jobs).stage("sweep")?;
    emit(&a.out, "writing roc", |w| write_roc(w, &points))?;
    Ok(EXIT_OK)
}

fn cmd_score(a: &ScoreArgs) -> CliResult<i32> {
    let verdicts = {
        let r = open_text(&a.verdicts).stage("reading verdicts")?;
        read_verdicts(r, &a.verdicts.display().to_string()).stage("reading verdicts")?
    };
    let (loaded, unit) = load_truth_args(&a.truth, a.window_seconds)?;
    let truth = to_truth(loaded, unit);
    match &truth {
        Truth::Windows(_) => {
            let report = truth.score(&verdicts).stage("scoring")?;
            emit(&a.out, "writing scores", |w| write_score(w, "window", &report))?;
            if a.breakdown.is_some() {
                return Err(stage_err("scoring", "--breakdown needs record-unit scoring"));
            }
        }
        Truth::Records(records) => {
            let per_protocol = score_records_by_protocol(&verdicts, records).stage("scoring")?;
            let overall = truth.score(&verdicts).stage("scoring")?;
            emit(&a.out, "writing scores", |w| write_protocol_scores(w, &per_protocol, &overall))?;
            if a.breakdown.is_some() {
                let rows = per_attack_breakdown(&verdicts, records).stage("scoring")?;
                emit(&a.breakdown, "writing breakdown", |w| write_breakdown(w, &rows))?;
            }
        }
    }
    Ok(EXIT_OK)
}
