//! Scoring of verdicts against ground truth, tolerance-factor sweeps and
//! per-attack breakdowns.
//!
//! Two scoring units are supported. Window scoring treats every window as one
//! event, attack if any protocol in it carries attack traffic. Record scoring
//! weights each protocol window by the records it holds, so a window verdict
//! counts once per record.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::detect::{DetectionRun, FactorTable, ToleranceFactors, VerdictReport};
use crate::error::{Error, Result};
use crate::flow::{FlowEvent, FlowKey, GroundTruthLabel, ProtocolCategory};
use crate::profile::window_index;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScoreReport {
    pub detected: u64,
    pub actual_attacks: u64,
    pub false_alarms: u64,
    pub normal_events: u64,
}

impl ScoreReport {
    pub fn from_counts(detected: u64, actual_attacks: u64, false_alarms: u64, normal_events: u64) -> Result<Self> {
        if detected > actual_attacks || false_alarms > normal_events {
            return Err(Error::param(format!(
                "inconsistent counts: detected {detected}/{actual_attacks}, false alarms {false_alarms}/{normal_events}"
            )));
        }
        Ok(ScoreReport { detected, actual_attacks, false_alarms, normal_events })
    }

    /// `d / n`, undefined without attack events.
    pub fn detection_rate(&self) -> Option<f64> {
        ratio(self.detected, self.actual_attacks)
    }

    /// `f / m`, undefined without normal events.
    pub fn false_positive_rate(&self) -> Option<f64> {
        ratio(self.false_alarms, self.normal_events)
    }

    fn add(&mut self, other: ScoreReport) {
        self.detected += other.detected;
        self.actual_attacks += other.actual_attacks;
        self.false_alarms += other.false_alarms;
        self.normal_events += other.normal_events;
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// `100·num/den` cut (not rounded) to `decimals` places, computed in integer
/// arithmetic. This is how the published result tables print percentages:
/// 222867/229853 is 96.96..% and appears as "96.9".
pub fn truncated_percent(num: u64, den: u64, decimals: u32) -> Option<String> {
    if den == 0 {
        return None;
    }
    let scale = 10u128.pow(decimals);
    let scaled = num as u128 * 100 * scale / den as u128;
    let whole = scaled / scale;
    if decimals == 0 {
        Some(whole.to_string())
    } else {
        let frac = scaled % scale;
        Some(format!("{whole}.{frac:0width$}", width = decimals as usize))
    }
}

/// `100·num/den` rounded half-up to `decimals` places, in integer arithmetic.
pub fn rounded_percent(num: u64, den: u64, decimals: u32) -> Option<String> {
    if den == 0 {
        return None;
    }
    let scale = 10u128.pow(decimals);
    let den = den as u128;
    let scaled = (num as u128 * 100 * scale * 2 + den) / (2 * den);
    let whole = scaled / scale;
    if decimals == 0 {
        Some(whole.to_string())
    } else {
        Some(format!("{whole}.{:0width$}", scaled % scale, width = decimals as usize))
    }
}

/// Per-window attack flags, OR-ed over protocols.
fn window_alarms(verdicts: &[VerdictReport]) -> BTreeMap<u64, bool> {
    let mut out: BTreeMap<u64, bool> = BTreeMap::new();
    for v in verdicts {
        *out.entry(v.window_index).or_default() |= v.is_attack();
    }
    out
}

/// Scores verdicts window by window. Every window of `truth` must have a
/// verdict and vice versa.
pub fn score(verdicts: &[VerdictReport], truth: &BTreeMap<u64, bool>) -> Result<ScoreReport> {
    let alarms = window_alarms(verdicts);
    if alarms.len() != truth.len() || alarms.keys().zip(truth.keys()).any(|(a, b)| a != b) {
        let missing = truth.keys().find(|w| !alarms.contains_key(w));
        let extra = alarms.keys().find(|w| !truth.contains_key(w));
        return Err(Error::param(format!(
            "verdicts and truth cover different windows (first without verdict: {missing:?}, first without truth: {extra:?})"
        )));
    }
    let mut r = ScoreReport::default();
    for (w, &attack) in truth {
        let flagged = alarms[w];
        if attack {
            r.actual_attacks += 1;
            r.detected += u64::from(flagged);
        } else {
            r.normal_events += 1;
            r.false_alarms += u64::from(flagged);
        }
    }
    Ok(r)
}

/// Window truth of a labelled event stream: a window is an attack window when
/// it holds any event of an attack-labelled flow. Covers every window from 0
/// to the last event's.
pub fn window_labels(
    events: &[FlowEvent],
    truth: &BTreeMap<FlowKey, GroundTruthLabel>,
    window_length: f64,
) -> Result<BTreeMap<u64, bool>> {
    let Some(last) = events.last() else {
        return Ok(BTreeMap::new());
    };
    let n = window_index(last.timestamp(), window_length) + 1;
    let mut out: BTreeMap<u64, bool> = (0..n).map(|w| (w, false)).collect();
    for e in events {
        let label = truth
            .get(e.key())
            .ok_or_else(|| Error::param(format!("flow {} has no truth label", e.key())))?;
        if label.is_attack() {
            out.insert(window_index(e.timestamp(), window_length), true);
        }
    }
    Ok(out)
}

/// Record counts per label inside one protocol window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowRecords {
    pub protocol: ProtocolCategory,
    pub window_index: u64,
    pub counts: BTreeMap<GroundTruthLabel, u64>,
}

impl WindowRecords {
    pub fn is_attack(&self) -> bool {
        self.counts.iter().any(|(l, &c)| l.is_attack() && c > 0)
    }

    pub fn attack_records(&self) -> u64 {
        self.counts.iter().filter(|(l, _)| l.is_attack()).map(|(_, c)| c).sum()
    }

    pub fn normal_records(&self) -> u64 {
        self.counts.get(&GroundTruthLabel::Normal).copied().unwrap_or(0)
    }
}

/// Record-level truth of a labelled event stream: one record per event.
pub fn window_records(
    events: &[FlowEvent],
    truth: &BTreeMap<FlowKey, GroundTruthLabel>,
    window_length: f64,
) -> Result<Vec<WindowRecords>> {
    let mut grouped: BTreeMap<(ProtocolCategory, u64), BTreeMap<GroundTruthLabel, u64>> = BTreeMap::new();
    let mut last: BTreeMap<ProtocolCategory, u64> = BTreeMap::new();
    for e in events {
        let label = truth
            .get(e.key())
            .ok_or_else(|| Error::param(format!("flow {} has no truth label", e.key())))?;
        let p = e.key().protocol();
        let w = window_index(e.timestamp(), window_length);
        *grouped.entry((p, w)).or_default().entry(label.clone()).or_default() += 1;
        last.insert(p, w);
    }
    // windows without records still exist for the detector
    for (p, end) in last {
        for w in 0..=end {
            grouped.entry((p, w)).or_default();
        }
    }
    Ok(grouped
        .into_iter()
        .map(|((protocol, window_index), counts)| WindowRecords { protocol, window_index, counts })
        .collect())
}

fn verdict_map(verdicts: &[VerdictReport]) -> BTreeMap<(ProtocolCategory, u64), bool> {
    verdicts
        .iter()
        .map(|v| ((v.protocol, v.window_index), v.is_attack()))
        .collect()
}

fn check_coverage(
    alarms: &BTreeMap<(ProtocolCategory, u64), bool>,
    truth: &[WindowRecords],
) -> Result<()> {
    let keys: BTreeSet<_> = truth.iter().map(|t| (t.protocol, t.window_index)).collect();
    if keys.len() != truth.len() {
        return Err(Error::param("record truth lists a protocol window twice"));
    }
    if keys.len() != alarms.len() || keys.iter().any(|k| !alarms.contains_key(k)) {
        return Err(Error::param(
            "verdicts and record truth cover different protocol windows",
        ));
    }
    Ok(())
}

/// Scores verdicts record by record: each record takes its window's verdict.
pub fn score_records(verdicts: &[VerdictReport], truth: &[WindowRecords]) -> Result<ScoreReport> {
    Ok(score_records_by_protocol(verdicts, truth)?
        .into_values()
        .fold(ScoreReport::default(), |mut acc, r| {
            acc.add(r);
            acc
        }))
}

/// Record scores split by protocol.
pub fn score_records_by_protocol(
    verdicts: &[VerdictReport],
    truth: &[WindowRecords],
) -> Result<BTreeMap<ProtocolCategory, ScoreReport>> {
    let alarms = verdict_map(verdicts);
    check_coverage(&alarms, truth)?;
    let mut out: BTreeMap<ProtocolCategory, ScoreReport> = BTreeMap::new();
    for t in truth {
        let flagged = alarms[&(t.protocol, t.window_index)];
        let r = out.entry(t.protocol).or_default();
        let attacks = t.attack_records();
        let normal = t.normal_records();
        r.actual_attacks += attacks;
        r.normal_events += normal;
        if flagged {
            r.detected += attacks;
            r.false_alarms += normal;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackRow {
    pub attack: String,
    pub protocol: ProtocolCategory,
    pub detected: u64,
    pub total: u64,
}

impl AttackRow {
    pub fn rate(&self) -> Option<f64> {
        ratio(self.detected, self.total)
    }
}

/// One row per (attack name, protocol) present in the truth, ordered by name.
pub fn per_attack_breakdown(verdicts: &[VerdictReport], truth: &[WindowRecords]) -> Result<Vec<AttackRow>> {
    let alarms = verdict_map(verdicts);
    check_coverage(&alarms, truth)?;
    let mut rows: BTreeMap<(String, ProtocolCategory), (u64, u64)> = BTreeMap::new();
    for t in truth {
        let flagged = alarms[&(t.protocol, t.window_index)];
        for (label, &count) in &t.counts {
            if let GroundTruthLabel::Attack(name) = label {
                if count == 0 {
                    continue;
                }
                let e = rows.entry((name.clone(), t.protocol)).or_default();
                e.1 += count;
                if flagged {
                    e.0 += count;
                }
            }
        }
    }
    Ok(rows
        .into_iter()
        .map(|((attack, protocol), (detected, total))| AttackRow { attack, protocol, detected, total })
        .collect())
}

/// Ground truth for scoring, in either unit.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    Windows(BTreeMap<u64, bool>),
    Records(Vec<WindowRecords>),
}

impl Truth {
    pub fn score(&self, verdicts: &[VerdictReport]) -> Result<ScoreReport> {
        match self {
            Truth::Windows(t) => score(verdicts, t),
            Truth::Records(t) => score_records(verdicts, t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocPoint {
    pub factors: ToleranceFactors,
    pub report: ScoreReport,
}

impl RocPoint {
    pub fn detection_rate(&self) -> Option<f64> {
        self.report.detection_rate()
    }

    pub fn false_positive_rate(&self) -> Option<f64> {
        self.report.false_positive_rate()
    }
}

/// Re-thresholds a fixed detection run at every grid point and scores it.
/// Each grid point applies to all protocols, with `r3` reaching UDP only.
/// Points are evaluated on `jobs` threads; output follows the grid order.
pub fn sweep(run: &DetectionRun, truth: &Truth, grid: &[ToleranceFactors], jobs: usize) -> Result<Vec<RocPoint>> {
    if grid.is_empty() {
        return Err(Error::param("sweep grid is empty"));
    }
    crate::with_jobs(jobs, || {
        grid.par_iter()
            .map(|f| {
                let verdicts = run.verdicts(&FactorTable::uniform(*f))?;
                Ok(RocPoint { factors: *f, report: truth.score(&verdicts)? })
            })
            .collect()
    })
}

fn fmt_rate(r: Option<f64>) -> String {
    r.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn fmt_factor(r: Option<f64>) -> String {
    r.map_or_else(|| "-".to_string(), |v| v.to_string())
}

pub fn write_score(mut w: impl Write, label: &str, r: &ScoreReport) -> Result<()> {
    writeln!(w, "scope\tdetected\tattacks\tfalse_alarms\tnormal\tdetection_rate\tfalse_positive_rate")?;
    write_score_row(&mut w, label, r)
}

pub fn write_score_row(mut w: impl Write, label: &str, r: &ScoreReport) -> Result<()> {
    writeln!(
        w,
        "{label}\t{}\t{}\t{}\t{}\t{}\t{}",
        r.detected,
        r.actual_attacks,
        r.false_alarms,
        r.normal_events,
        fmt_rate(r.detection_rate()),
        fmt_rate(r.false_positive_rate())
    )?;
    Ok(())
}

pub fn write_roc(mut w: impl Write, points: &[RocPoint]) -> Result<()> {
    writeln!(
        w,
        "r1\tr2\tr3\tdetected\tattacks\tfalse_alarms\tnormal\tdetection_rate\tfalse_positive_rate"
    )?;
    for p in points {
        let r = &p.report;
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            p.factors.r1(),
            p.factors.r2(),
            fmt_factor(p.factors.r3()),
            r.detected,
            r.actual_attacks,
            r.false_alarms,
            r.normal_events,
            fmt_rate(r.detection_rate()),
            fmt_rate(r.false_positive_rate())
        )?;
    }
    Ok(())
}

pub fn write_breakdown(mut w: impl Write, rows: &[AttackRow]) -> Result<()> {
    writeln!(w, "attack\tprotocol\tdetected\ttotal\trate")?;
    for row in rows {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            row.attack,
            row.protocol,
            row.detected,
            row.total,
            fmt_rate(row.rate())
        )?;
    }
    Ok(())
}

/// Reads a sweep grid: `r1<TAB>r2<TAB>r3` per line, `r3` may be `-`.
/// A header line starting with `r1` and `#` comments are skipped.
pub fn read_grid(r: impl BufRead, source_name: &str) -> Result<Vec<ToleranceFactors>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("r1") {
            continue;
        }
        let err = |msg: String| Error::parse(source_name, i + 1, msg);
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(err(format!("expected 2 or 3 factors, found {}", fields.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("factor '{s}': {e}")));
        let r3 = match fields.get(2) {
            None | Some(&"-") => None,
            Some(s) => Some(num(s)?),
        };
        out.push(ToleranceFactors::new(num(fields[0])?, num(fields[1])?, r3).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

pub fn write_window_records(mut w: impl Write, truth: &[WindowRecords]) -> Result<()> {
    writeln!(w, "protocol\twindow\tlabel\trecords")?;
    for t in truth {
        for (label, count) in &t.counts {
            writeln!(w, "{}\t{}\t{}\t{}", t.protocol, t.window_index, label, count)?;
        }
        if t.counts.is_empty() {
            writeln!(w, "{}\t{}\t-\t0", t.protocol, t.window_index)?;
        }
    }
    Ok(())
}

pub fn read_window_records(r: impl BufRead, source_name: &str) -> Result<Vec<WindowRecords>> {
    let mut grouped: BTreeMap<(ProtocolCategory, u64), BTreeMap<GroundTruthLabel, u64>> = BTreeMap::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("protocol")) {
            continue;
        }
        let err = |msg: String| Error::parse(source_name, i + 1, msg);
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        }
        let protocol = fields[0].parse().map_err(|e: Error| err(e.to_string()))?;
        let window = fields[1].parse::<u64>().map_err(|e| err(format!("window: {e}")))?;
        let counts = grouped.entry((protocol, window)).or_default();
        if fields[2] == "-" {
            continue;
        }
        let label: GroundTruthLabel = fields[2].parse().map_err(|e: Error| err(e.to_string()))?;
        let n = fields[3].parse::<u64>().map_err(|e| err(format!("records: {e}")))?;
        if counts.insert(label, n).is_some() {
            return Err(err("label repeated for this window".into()));
        }
    }
    Ok(grouped
        .into_iter()
        .map(|((protocol, window_index), counts)| WindowRecords { protocol, window_index, counts })
        .collect())
}
