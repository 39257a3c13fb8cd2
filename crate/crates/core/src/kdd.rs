//! KDD Cup 99 connection records: parsing, DoS filtering, record-count
//! windowing and the train/test evaluation pipeline.
//!
//! Records carry no usable timestamps, so windows are formed from `W`
//! consecutive records of one protocol in file order. Each record adds
//! `src_bytes + dst_bytes` to the flow it belongs to.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use crate::detect::{DetectionRun, FactorTable, VerdictReport};
use crate::error::{Error, Result};
use crate::eval::{per_attack_breakdown, score_records_by_protocol, AttackRow, ScoreReport, WindowRecords};
use crate::flow::{Address, FlowEvent, FlowKey, GroundTruthLabel, ProtocolCategory, WindowSample};
use crate::interchange::{open_text, quantize_timestamp};
use crate::profile::{build_profile_with, ProfileOptions, ProfileSet, DEFAULT_WINDOW_SECONDS};

pub const FEATURE_COUNT: usize = 41;
const NUMERIC_COUNT: usize = 38;
pub const DEFAULT_RECORDS_PER_WINDOW: usize = 100;

pub const TRAINING_FILE: &str = "kddcup.data_10_percent";
pub const TESTING_FILE: &str = "corrected";

/// DoS attacks of the 10% training file.
pub const TRAINING_DOS: [&str; 6] = ["back", "land", "neptune", "pod", "smurf", "teardrop"];
/// DoS attacks that appear only in the test file.
pub const TESTING_ONLY_DOS: [&str; 4] = ["apache2", "mailbomb", "processtable", "udpstorm"];

/// One connection record: 41 features and a label.
#[derive(Debug, Clone, PartialEq)]
pub struct KddRecord {
    /// The 38 continuous features in file order (feature 1 and 5..41).
    numeric: Vec<f64>,
    protocol: ProtocolCategory,
    service: String,
    flag: String,
    label: GroundTruthLabel,
}

impl KddRecord {
    pub fn parse_line(line: &str) -> std::result::Result<Self, String> {
        let fields: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
        if fields.len() != FEATURE_COUNT + 1 {
            return Err(format!("expected {} fields, found {}", FEATURE_COUNT + 1, fields.len()));
        }
        let protocol = match fields[1] {
            "tcp" => ProtocolCategory::Tcp,
            "udp" => ProtocolCategory::Udp,
            "icmp" => ProtocolCategory::Icmp,
            other => return Err(format!("unknown protocol_type '{other}'")),
        };
        let mut numeric = Vec::with_capacity(NUMERIC_COUNT);
        for (i, f) in fields[..FEATURE_COUNT].iter().enumerate() {
            if (1..=3).contains(&i) {
                continue;
            }
            let v: f64 = f
                .parse()
                .map_err(|_| format!("feature {} is not numeric: '{f}'", i + 1))?;
            if !v.is_finite() {
                return Err(format!("feature {} is not finite", i + 1));
            }
            numeric.push(v);
        }
        for (i, name) in [(2, "service"), (3, "flag")] {
            if fields[i].is_empty() || fields[i].chars().any(char::is_whitespace) {
                return Err(format!("invalid {name} '{}'", fields[i]));
            }
        }
        let label: GroundTruthLabel = fields[FEATURE_COUNT].parse().map_err(|e: Error| e.to_string())?;
        let record = KddRecord {
            numeric,
            protocol,
            service: fields[2].to_string(),
            flag: fields[3].to_string(),
            label,
        };
        if record.src_bytes() < 0.0 || record.dst_bytes() < 0.0 {
            return Err("negative byte count".into());
        }
        Ok(record)
    }

    /// Comma-separated line in the original layout, label with trailing '.'.
    pub fn to_line(&self) -> String {
        let mut parts: Vec<String> = Vec::with_capacity(FEATURE_COUNT + 1);
        parts.push(self.numeric[0].to_string());
        parts.push(self.protocol.to_string());
        parts.push(self.service.clone());
        parts.push(self.flag.clone());
        parts.extend(self.numeric[1..].iter().map(f64::to_string));
        parts.push(format!("{}.", self.label));
        parts.join(",")
    }

    pub fn protocol(&self) -> ProtocolCategory {
        self.protocol
    }

    pub fn service(&self) -> &str {
        &self.service
    }

    pub fn flag(&self) -> &str {
        &self.flag
    }

    pub fn label(&self) -> &GroundTruthLabel {
        &self.label
    }

    /// Continuous feature by its 1-based position in the record; `None` for
    /// the symbolic features 2..4 and out-of-range positions.
    pub fn feature(&self, position: usize) -> Option<f64> {
        match position {
            1 => Some(self.numeric[0]),
            5..=FEATURE_COUNT => Some(self.numeric[position - 4]),
            _ => None,
        }
    }

    pub fn src_bytes(&self) -> f64 {
        self.numeric[1]
    }

    pub fn dst_bytes(&self) -> f64 {
        self.numeric[2]
    }

    /// Bytes the connection adds to its flow: `src_bytes + dst_bytes`, but at
    /// least one so that payload-free connections still count as flows.
    pub fn volume_bytes(&self) -> u64 {
        ((self.src_bytes() + self.dst_bytes()).round() as u64).max(1)
    }
}

/// Streaming reader yielding records or line-positioned parse errors.
pub struct KddReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    source_name: String,
}

impl<R: BufRead> KddReader<R> {
    pub fn new(reader: R, source_name: impl Into<String>) -> Self {
        KddReader { lines: reader.lines(), line_no: 0, source_name: source_name.into() }
    }
}

impl<R: BufRead> Iterator for KddReader<R> {
    type Item = Result<KddRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(
                KddRecord::parse_line(&line).map_err(|msg| Error::parse(&self.source_name, self.line_no, msg)),
            );
        }
    }
}

pub fn parse(reader: impl BufRead, source_name: &str) -> Result<Vec<KddRecord>> {
    KddReader::new(reader, source_name).collect()
}

/// Opens a plain or gzip-compressed record file.
pub fn open(path: &Path) -> Result<KddReader<Box<dyn BufRead>>> {
    Ok(KddReader::new(open_text(path)?, path.display().to_string()))
}

pub fn write_records(mut w: impl Write, records: &[KddRecord]) -> Result<()> {
    for r in records {
        writeln!(w, "{}", r.to_line())?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Training,
    Testing,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "training" | "train" => Ok(Split::Training),
            "testing" | "test" => Ok(Split::Testing),
            other => Err(Error::param(format!("unknown split '{other}' (expected training or testing)"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Training => "training",
            Split::Testing => "testing",
        })
    }
}

/// DoS attack names per split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KddDosFilter {
    pub training_attacks: BTreeSet<String>,
    pub testing_attacks: BTreeSet<String>,
}

impl Default for KddDosFilter {
    fn default() -> Self {
        let training_attacks: BTreeSet<String> = TRAINING_DOS.iter().map(|s| s.to_string()).collect();
        let mut testing_attacks = training_attacks.clone();
        testing_attacks.extend(TESTING_ONLY_DOS.iter().map(|s| s.to_string()));
        KddDosFilter { training_attacks, testing_attacks }
    }
}

impl KddDosFilter {
    pub fn attacks(&self, split: Split) -> &BTreeSet<String> {
        match split {
            Split::Training => &self.training_attacks,
            Split::Testing => &self.testing_attacks,
        }
    }

    /// Whether the label is kept for the split: normal, or a DoS attack.
    pub fn keeps(&self, label: &GroundTruthLabel, split: Split) -> bool {
        match label {
            GroundTruthLabel::Normal => true,
            GroundTruthLabel::Attack(name) => self.attacks(split).contains(name),
        }
    }
}

/// Splits records into DoS and normal, discarding every other category.
pub fn filter_dos(
    records: impl IntoIterator<Item = KddRecord>,
    filter: &KddDosFilter,
    split: Split,
) -> (Vec<KddRecord>, Vec<KddRecord>) {
    let attacks = filter.attacks(split);
    let mut dos = Vec::new();
    let mut normal = Vec::new();
    for r in records {
        match &r.label {
            GroundTruthLabel::Normal => normal.push(r),
            GroundTruthLabel::Attack(name) if attacks.contains(name) => dos.push(r),
            GroundTruthLabel::Attack(_) => {}
        }
    }
    (dos, normal)
}

/// How records map to flow keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KddFlowIdentity {
    /// Records sharing (protocol, service, flag) form one flow.
    #[default]
    ServiceFlag,
    /// Every record is its own flow.
    PerRecord,
}

impl FromStr for KddFlowIdentity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "service-flag" => Ok(KddFlowIdentity::ServiceFlag),
            "record" => Ok(KddFlowIdentity::PerRecord),
            other => Err(Error::param(format!("unknown flow identity '{other}' (expected service-flag or record)"))),
        }
    }
}

/// Connection reduced to what the detector uses.
#[derive(Debug, Clone, PartialEq)]
pub struct KddConnection {
    pub protocol: ProtocolCategory,
    pub service: Address,
    pub flag: Address,
    pub bytes: u64,
    pub label: GroundTruthLabel,
    /// Position among the records of the file, from 0.
    pub ordinal: u64,
}

impl KddConnection {
    pub fn from_record(record: &KddRecord, ordinal: u64) -> Self {
        KddConnection {
            protocol: record.protocol,
            service: Address::new(&record.service).expect("validated on parse"),
            flag: Address::new(&record.flag).expect("validated on parse"),
            bytes: record.volume_bytes(),
            label: record.label.clone(),
            ordinal,
        }
    }

    pub fn flow_key(&self, identity: KddFlowIdentity) -> FlowKey {
        let src = match identity {
            KddFlowIdentity::ServiceFlag => self.flag.clone(),
            KddFlowIdentity::PerRecord => Address::new(format!("r{}", self.ordinal)).expect("non-empty"),
        };
        FlowKey::new(self.protocol, src, 0, self.service.clone(), 0).expect("port-free key")
    }
}

/// Record-count windowing parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordCountWindowing {
    pub records_per_window: usize,
    pub identity: KddFlowIdentity,
    /// Nominal window length stamped on the samples.
    pub window_length: f64,
}

impl Default for RecordCountWindowing {
    fn default() -> Self {
        RecordCountWindowing {
            records_per_window: DEFAULT_RECORDS_PER_WINDOW,
            identity: KddFlowIdentity::default(),
            window_length: DEFAULT_WINDOW_SECONDS,
        }
    }
}

impl RecordCountWindowing {
    pub fn validate(&self) -> Result<()> {
        if self.records_per_window == 0 {
            return Err(Error::param("records per window must be positive"));
        }
        if !(self.window_length > 0.0 && self.window_length.is_finite()) {
            return Err(Error::param("window length must be positive"));
        }
        Ok(())
    }
}

/// Windowed view of a connection sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct KddWindows {
    pub samples: BTreeMap<ProtocolCategory, Vec<WindowSample>>,
    pub truth: Vec<WindowRecords>,
}

/// Groups connections per protocol, in order, into windows of `W` records.
/// The last window of a protocol may hold fewer records.
pub fn to_windows(connections: &[KddConnection], windowing: &RecordCountWindowing) -> Result<KddWindows> {
    windowing.validate()?;
    let w = windowing.records_per_window;
    let mut by_protocol: BTreeMap<ProtocolCategory, Vec<&KddConnection>> = BTreeMap::new();
    for c in connections {
        by_protocol.entry(c.protocol).or_default().push(c);
    }
    let mut samples = BTreeMap::new();
    let mut truth = Vec::new();
    for (protocol, conns) in by_protocol {
        let mut out = Vec::with_capacity(conns.len().div_ceil(w));
        for (i, chunk) in conns.chunks(w).enumerate() {
            let mut per_flow: BTreeMap<FlowKey, u64> = BTreeMap::new();
            let mut counts: BTreeMap<GroundTruthLabel, u64> = BTreeMap::new();
            for c in chunk {
                *per_flow.entry(c.flow_key(windowing.identity)).or_default() += c.bytes;
                *counts.entry(c.label.clone()).or_default() += 1;
            }
            let index = i as u64;
            out.push(WindowSample::new(
                index,
                index as f64 * windowing.window_length,
                windowing.window_length,
                protocol,
                per_flow,
            )?);
            truth.push(WindowRecords { protocol, window_index: index, counts });
        }
        samples.insert(protocol, out);
    }
    Ok(KddWindows { samples, truth })
}

/// Flow events that window back into exactly the samples of [`to_windows`]:
/// record `j` of window `w` is stamped `(w + (j + 0.5) / W) · Δ`.
pub fn to_flow_events(connections: &[KddConnection], windowing: &RecordCountWindowing) -> Result<Vec<FlowEvent>> {
    windowing.validate()?;
    let w = windowing.records_per_window;
    let mut seen: BTreeMap<ProtocolCategory, usize> = BTreeMap::new();
    let mut events = Vec::with_capacity(connections.len());
    for c in connections {
        let n = seen.entry(c.protocol).or_default();
        let (window, j) = (*n / w, *n % w);
        *n += 1;
        let t = (window as f64 + (j as f64 + 0.5) / w as f64) * windowing.window_length;
        events.push(FlowEvent::new(quantize_timestamp(t), c.flow_key(windowing.identity), c.bytes)?);
    }
    events.sort_by(|a, b| a.timestamp().total_cmp(&b.timestamp()));
    Ok(events)
}

/// Record and label counts of one file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KddSummary {
    pub records: u64,
    pub per_label: BTreeMap<GroundTruthLabel, u64>,
    pub per_protocol: BTreeMap<ProtocolCategory, u64>,
    /// DoS instances per (attack, protocol).
    pub dos: BTreeMap<(String, ProtocolCategory), u64>,
}

/// A parsed file: counts over every record plus the retained DoS and normal
/// connections in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct KddLoad {
    pub split: Split,
    pub summary: KddSummary,
    pub connections: Vec<KddConnection>,
}

impl KddLoad {
    pub fn normal(&self) -> Vec<KddConnection> {
        self.connections.iter().filter(|c| !c.label.is_attack()).cloned().collect()
    }
}

/// Streams records once, counting everything and retaining DoS and normal
/// connections.
pub fn load_records(
    records: impl IntoIterator<Item = Result<KddRecord>>,
    filter: &KddDosFilter,
    split: Split,
) -> Result<KddLoad> {
    let mut summary = KddSummary::default();
    let mut connections = Vec::new();
    for (i, r) in records.into_iter().enumerate() {
        let r = r?;
        summary.records += 1;
        *summary.per_label.entry(r.label.clone()).or_default() += 1;
        *summary.per_protocol.entry(r.protocol).or_default() += 1;
        if filter.keeps(&r.label, split) {
            if let GroundTruthLabel::Attack(name) = &r.label {
                *summary.dos.entry((name.clone(), r.protocol)).or_default() += 1;
            }
            connections.push(KddConnection::from_record(&r, i as u64));
        }
    }
    Ok(KddLoad { split, summary, connections })
}

pub fn load(path: &Path, filter: &KddDosFilter, split: Split) -> Result<KddLoad> {
    load_records(open(path)?, filter, split)
}

/// Profiles every protocol from normal connections only.
pub fn train_profiles(
    normal: &[KddConnection],
    windowing: &RecordCountWindowing,
    options: ProfileOptions,
) -> Result<ProfileSet> {
    if let Some(c) = normal.iter().find(|c| c.label.is_attack()) {
        return Err(Error::param(format!("training connection {} is labelled {}", c.ordinal, c.label)));
    }
    let windows = to_windows(normal, windowing)?;
    let mut set = ProfileSet::new();
    for samples in windows.samples.values() {
        set.insert(build_profile_with(samples, options)?);
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KddEvaluation {
    pub overall: ScoreReport,
    pub per_protocol: BTreeMap<ProtocolCategory, ScoreReport>,
    pub breakdown: Vec<AttackRow>,
    pub verdicts: Vec<VerdictReport>,
    pub truth: Vec<WindowRecords>,
}

/// Detects over the windows of `target` and scores per record.
pub fn evaluate(
    profiles: &ProfileSet,
    target: &[KddConnection],
    windowing: &RecordCountWindowing,
    factors: &FactorTable,
    jobs: usize,
) -> Result<KddEvaluation> {
    let windows = to_windows(target, windowing)?;
    let run = DetectionRun::from_windows(windows.samples, profiles.clone())?;
    let verdicts = crate::with_jobs(jobs, || run.verdicts(factors))?;
    let per_protocol = score_records_by_protocol(&verdicts, &windows.truth)?;
    let mut overall = ScoreReport::default();
    for r in per_protocol.values() {
        overall.detected += r.detected;
        overall.actual_attacks += r.actual_attacks;
        overall.false_alarms += r.false_alarms;
        overall.normal_events += r.normal_events;
    }
    let breakdown = per_attack_breakdown(&verdicts, &windows.truth)?;
    Ok(KddEvaluation { overall, per_protocol, breakdown, verdicts, truth: windows.truth })
}

pub fn write_summary(mut w: impl Write, summary: &KddSummary) -> Result<()> {
    writeln!(w, "kind\tname\tprotocol\tcount")?;
    writeln!(w, "records\tall\t-\t{}", summary.records)?;
    for (p, n) in &summary.per_protocol {
        writeln!(w, "protocol\t-\t{p}\t{n}")?;
    }
    for ((name, p), n) in &summary.dos {
        writeln!(w, "dos\t{name}\t{p}\t{n}")?;
    }
    for (label, n) in &summary.per_label {
        writeln!(w, "label\t{label}\t-\t{n}")?;
    }
    Ok(())
}
