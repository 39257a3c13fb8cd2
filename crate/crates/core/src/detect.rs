//! Threshold computation and per-window attack verdicts.
//!
//! Thresholds are tolerance factors times the profile's standard deviations:
//! `x_th = r1·S_V`, `V_th = r2·S_F` and, for UDP only, `x_th^L = r3·S_V`.
//! A window is flagged when its volume or flow count exceeds the profile mean
//! by more than the matching threshold, or (UDP) when its volume falls below
//! the mean by more than the lower bound. Equality never raises an alarm.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{ProtocolCategory, WindowSample};
use crate::profile::{windowize_protocols, NormalProfile, ProfileSet};

/// Multipliers applied to the profile standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceFactors {
    r1: f64,
    r2: f64,
    r3: Option<f64>,
}

fn check_factor(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("tolerance factor {name} must be positive, got {v}")))
    }
}

impl ToleranceFactors {
    pub fn new(r1: f64, r2: f64, r3: Option<f64>) -> Result<Self> {
        check_factor("r1", r1)?;
        check_factor("r2", r2)?;
        if let Some(r3) = r3 {
            check_factor("r3", r3)?;
        }
        Ok(ToleranceFactors { r1, r2, r3 })
    }

    /// Tuned operating points per protocol:
    /// TCP `r1=1, r2=5`; UDP `r1=6, r2=8, r3=1.5`; ICMP `r1=5, r2=6`.
    pub fn table_default(protocol: ProtocolCategory) -> Self {
        match protocol {
            ProtocolCategory::Tcp => ToleranceFactors { r1: 1.0, r2: 5.0, r3: None },
            ProtocolCategory::Udp => ToleranceFactors { r1: 6.0, r2: 8.0, r3: Some(1.5) },
            ProtocolCategory::Icmp => ToleranceFactors { r1: 5.0, r2: 6.0, r3: None },
        }
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn r3(&self) -> Option<f64> {
        self.r3
    }

    /// Drops `r3` for protocols that have no lower volume bound.
    pub fn for_protocol(&self, protocol: ProtocolCategory) -> Self {
        match protocol {
            ProtocolCategory::Udp => *self,
            _ => ToleranceFactors { r3: None, ..*self },
        }
    }
}

/// Per-protocol factors used by a detection run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorTable {
    pub tcp: ToleranceFactors,
    pub udp: ToleranceFactors,
    pub icmp: ToleranceFactors,
}

impl Default for FactorTable {
    fn default() -> Self {
        FactorTable {
            tcp: ToleranceFactors::table_default(ProtocolCategory::Tcp),
            udp: ToleranceFactors::table_default(ProtocolCategory::Udp),
            icmp: ToleranceFactors::table_default(ProtocolCategory::Icmp),
        }
    }
}

impl FactorTable {
    /// The same factors for every protocol; `r3` only reaches UDP.
    pub fn uniform(factors: ToleranceFactors) -> Self {
        FactorTable {
            tcp: factors.for_protocol(ProtocolCategory::Tcp),
            udp: factors,
            icmp: factors.for_protocol(ProtocolCategory::Icmp),
        }
    }

    pub fn get(&self, protocol: ProtocolCategory) -> ToleranceFactors {
        match protocol {
            ProtocolCategory::Tcp => self.tcp,
            ProtocolCategory::Udp => self.udp,
            ProtocolCategory::Icmp => self.icmp,
        }
    }

    pub fn set(&mut self, protocol: ProtocolCategory, factors: ToleranceFactors) {
        match protocol {
            ProtocolCategory::Tcp => self.tcp = factors,
            ProtocolCategory::Udp => self.udp = factors,
            ProtocolCategory::Icmp => self.icmp = factors,
        }
    }
}

/// Detection bounds for one protocol profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    protocol: ProtocolCategory,
    x_th: f64,
    v_th: f64,
    x_th_lower: Option<f64>,
}

impl Thresholds {
    pub fn protocol(&self) -> ProtocolCategory {
        self.protocol
    }

    /// Upper volume threshold, `r1·S_V`.
    pub fn x_th(&self) -> f64 {
        self.x_th
    }

    /// Flow threshold, `r2·S_F`.
    pub fn v_th(&self) -> f64 {
        self.v_th
    }

    /// Lower volume threshold magnitude, `r3·S_V` (UDP only).
    pub fn x_th_lower(&self) -> Option<f64> {
        self.x_th_lower
    }
}

pub fn compute_thresholds(profile: &NormalProfile, factors: &ToleranceFactors) -> Result<Thresholds> {
    let protocol = profile.protocol();
    let x_th_lower = match (protocol, factors.r3) {
        (ProtocolCategory::Udp, Some(r3)) => Some(r3 * profile.volume_std()),
        (ProtocolCategory::Udp, None) => return Err(Error::MissingFactor(protocol)),
        (_, Some(_)) => {
            return Err(Error::param(format!(
                "r3 only applies to udp, but was supplied for {protocol}"
            )))
        }
        (_, None) => None,
    };
    Ok(Thresholds {
        protocol,
        x_th: factors.r1 * profile.volume_std(),
        v_th: factors.r2 * profile.flow_std(),
        x_th_lower,
    })
}

/// Which detection condition fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Trigger {
    VolumeUpper,
    VolumeLower,
    Flow,
}

impl Trigger {
    pub fn as_str(self) -> &'static str {
        match self {
            Trigger::VolumeUpper => "volume_upper",
            Trigger::VolumeLower => "volume_lower",
            Trigger::Flow => "flow",
        }
    }
}

impl FromStr for Trigger {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "volume_upper" => Ok(Trigger::VolumeUpper),
            "volume_lower" => Ok(Trigger::VolumeLower),
            "flow" => Ok(Trigger::Flow),
            other => Err(Error::param(format!("unknown trigger '{other}'"))),
        }
    }
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which metrics take part in detection. Both by default; single-metric
/// runs are used for ablations and ROC sub-sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conditions {
    pub volume: bool,
    pub flow: bool,
}

impl Conditions {
    pub const ALL: Conditions = Conditions { volume: true, flow: true };
    pub const VOLUME_ONLY: Conditions = Conditions { volume: true, flow: false };
    pub const FLOW_ONLY: Conditions = Conditions { volume: false, flow: true };
}

impl Default for Conditions {
    fn default() -> Self {
        Conditions::ALL
    }
}

impl FromStr for Conditions {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" | "volume,flow" | "flow,volume" => Ok(Conditions::ALL),
            "volume" => Ok(Conditions::VOLUME_ONLY),
            "flow" => Ok(Conditions::FLOW_ONLY),
            other => Err(Error::param(format!("unknown condition set '{other}'"))),
        }
    }
}

/// Attack verdict for one protocol window.
#[derive(Debug, Clone, PartialEq)]
pub struct VerdictReport {
    pub window_index: u64,
    pub protocol: ProtocolCategory,
    pub triggered: BTreeSet<Trigger>,
    /// `X_in − X_n*`
    pub volume_deviation: f64,
    /// `F_in − F_n*`
    pub flow_deviation: f64,
}

impl VerdictReport {
    pub fn is_attack(&self) -> bool {
        !self.triggered.is_empty()
    }
}

pub fn detect(
    sample: &WindowSample,
    profile: &NormalProfile,
    thresholds: &Thresholds,
) -> Result<VerdictReport> {
    detect_with(sample, profile, thresholds, Conditions::ALL)
}

pub fn detect_with(
    sample: &WindowSample,
    profile: &NormalProfile,
    thresholds: &Thresholds,
    conditions: Conditions,
) -> Result<VerdictReport> {
    let protocol = sample.protocol();
    if profile.protocol() != protocol || thresholds.protocol() != protocol {
        return Err(Error::param(format!(
            "protocol mismatch: sample {protocol}, profile {}, thresholds {}",
            profile.protocol(),
            thresholds.protocol()
        )));
    }
    if profile.window_length() != sample.window_length() {
        return Err(Error::param(format!(
            "window length mismatch: sample {}, profile {}",
            sample.window_length(),
            profile.window_length()
        )));
    }

    let volume_deviation = sample.volume() as f64 - profile.volume_mean();
    let flow_deviation = sample.flow_count() as f64 - profile.flow_mean();

    let mut triggered = BTreeSet::new();
    if conditions.volume {
        if volume_deviation > thresholds.x_th() {
            triggered.insert(Trigger::VolumeUpper);
        }
        if let Some(lower) = thresholds.x_th_lower() {
            if -volume_deviation > lower {
                triggered.insert(Trigger::VolumeLower);
            }
        }
    }
    if conditions.flow && flow_deviation > thresholds.v_th() {
        triggered.insert(Trigger::Flow);
    }

    Ok(VerdictReport {
        window_index: sample.window_index(),
        protocol,
        triggered,
        volume_deviation,
        flow_deviation,
    })
}

/// Windowed samples of a capture paired with the profiles they are judged
/// against. Thresholds are recomputed per call, so one run can be re-scored
/// under many factor settings.
#[derive(Debug, Clone)]
pub struct DetectionRun {
    profiles: ProfileSet,
    windows: BTreeMap<ProtocolCategory, Vec<WindowSample>>,
    conditions: Conditions,
}

impl DetectionRun {
    /// Windows `events` with the profiles' window length. Protocols with
    /// traffic but no profile are an error.
    pub fn from_events(events: &[crate::flow::FlowEvent], profiles: ProfileSet) -> Result<Self> {
        let window_length = profiles.window_length()?;
        if let Some(e) = events
            .iter()
            .find(|e| profiles.get(e.key().protocol()).is_none())
        {
            return Err(Error::MissingProfile(e.key().protocol()));
        }
        let windows = windowize_protocols(events, window_length, &profiles.protocols())?;
        Self::from_windows(windows, profiles)
    }

    pub fn from_windows(
        windows: BTreeMap<ProtocolCategory, Vec<WindowSample>>,
        profiles: ProfileSet,
    ) -> Result<Self> {
        for (protocol, samples) in &windows {
            if !samples.is_empty() && profiles.get(*protocol).is_none() {
                return Err(Error::MissingProfile(*protocol));
            }
        }
        Ok(DetectionRun {
            profiles,
            windows,
            conditions: Conditions::ALL,
        })
    }

    pub fn with_conditions(mut self, conditions: Conditions) -> Self {
        self.conditions = conditions;
        self
    }

    pub fn conditions(&self) -> Conditions {
        self.conditions
    }

    pub fn profiles(&self) -> &ProfileSet {
        &self.profiles
    }

    pub fn windows(&self) -> &BTreeMap<ProtocolCategory, Vec<WindowSample>> {
        &self.windows
    }

    /// Verdicts for every window, ordered by (window index, protocol).
    pub fn verdicts(&self, factors: &FactorTable) -> Result<Vec<VerdictReport>> {
        let mut out = Vec::new();
        for (&protocol, samples) in &self.windows {
            if samples.is_empty() {
                continue;
            }
            let profile = self
                .profiles
                .get(protocol)
                .ok_or(Error::MissingProfile(protocol))?;
            let thresholds = compute_thresholds(profile, &factors.get(protocol))?;
            let verdicts = samples
                .par_iter()
                .map(|s| detect_with(s, profile, &thresholds, self.conditions))
                .collect::<Result<Vec<_>>>()?;
            out.extend(verdicts);
        }
        out.sort_by_key(|v| (v.window_index, v.protocol));
        Ok(out)
    }
}

const VERDICT_HEADER: &str = "window\tprotocol\tattack\ttriggered\tvolume_deviation\tflow_deviation";

fn format_triggered(set: &BTreeSet<Trigger>) -> String {
    if set.is_empty() {
        "-".to_string()
    } else {
        set.iter().map(|t| t.as_str()).collect::<Vec<_>>().join(",")
    }
}

pub fn write_verdicts(mut w: impl Write, verdicts: &[VerdictReport]) -> Result<()> {
    writeln!(w, "{VERDICT_HEADER}")?;
    for v in verdicts {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            v.window_index,
            v.protocol,
            u8::from(v.is_attack()),
            format_triggered(&v.triggered),
            v.volume_deviation,
            v.flow_deviation
        )?;
    }
    Ok(())
}

pub fn read_verdicts(r: impl BufRead, source_name: &str) -> Result<Vec<VerdictReport>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.is_empty() || line == VERDICT_HEADER {
            continue;
        }
        let err = |msg: String| Error::parse(source_name, line_no, msg);
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", fields.len())));
        }
        let window_index = fields[0]
            .parse::<u64>()
            .map_err(|e| err(format!("window: {e}")))?;
        let protocol = fields[1].parse().map_err(|e: Error| err(e.to_string()))?;
        let is_attack = match fields[2] {
            "1" => true,
            "0" => false,
            other => return Err(err(format!("attack flag must be 0 or 1, got {other}"))),
        };
        let triggered = if fields[3] == "-" {
            BTreeSet::new()
        } else {
            fields[3]
                .split(',')
                .map(str::parse)
                .collect::<Result<BTreeSet<Trigger>>>()
                .map_err(|e| err(e.to_string()))?
        };
        if triggered.is_empty() == is_attack {
            return Err(err("attack flag disagrees with triggered set".into()));
        }
        let volume_deviation = fields[4]
            .parse::<f64>()
            .map_err(|e| err(format!("volume_deviation: {e}")))?;
        let flow_deviation = fields[5]
            .parse::<f64>()
            .map_err(|e| err(format!("flow_deviation: {e}")))?;
        out.push(VerdictReport {
            window_index,
            protocol,
            triggered,
            volume_deviation,
            flow_deviation,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{Address, FlowKey};
    use crate::profile::PerFlowBasis;

    fn profile(protocol: ProtocolCategory, vm: f64, vs: f64, fm: f64, fs: f64) -> NormalProfile {
        NormalProfile::from_parts(protocol, 0.2, 10, vm, vs, fm, fs, 0.0, 0.0, PerFlowBasis::Capture)
            .unwrap()
    }

    /// Sample with `flows` distinct flows carrying `volume` bytes in total.
    fn sample(protocol: ProtocolCategory, volume: u64, flows: u64) -> WindowSample {
        let mut m = BTreeMap::new();
        let dst = Address::new("victim").unwrap();
        for i in 0..flows {
            let src = Address::new(format!("h{i}")).unwrap();
            let key = match protocol {
                ProtocolCategory::Icmp => FlowKey::icmp(src, dst.clone()),
                ProtocolCategory::Tcp => FlowKey::tcp(src, 1000, dst.clone(), 80),
                ProtocolCategory::Udp => FlowKey::udp(src, 1000, dst.clone(), 53),
            };
            let share = volume / flows + u64::from(i < volume % flows);
            m.insert(key, share);
        }
        WindowSample::new(0, 0.0, 0.2, protocol, m).unwrap()
    }

    #[test]
    fn zero_variance_gives_zero_thresholds() {
        let p = profile(ProtocolCategory::Tcp, 100.0, 0.0, 5.0, 0.0);
        let t = compute_thresholds(&p, &ToleranceFactors::new(6.0, 6.0, None).unwrap()).unwrap();
        assert_eq!((t.x_th(), t.v_th(), t.x_th_lower()), (0.0, 0.0, None));
    }

    #[test]
    fn tcp_thresholds_at_six_sigma() {
        let p = profile(ProtocolCategory::Tcp, 0.0, 10.0, 0.0, 2.0);
        let t = compute_thresholds(&p, &ToleranceFactors::new(6.0, 6.0, None).unwrap()).unwrap();
        assert_eq!((t.x_th(), t.v_th()), (60.0, 12.0));
    }

    #[test]
    fn udp_thresholds_with_lower_bound() {
        let p = profile(ProtocolCategory::Udp, 0.0, 10.0, 0.0, 2.0);
        let t = compute_thresholds(&p, &ToleranceFactors::table_default(ProtocolCategory::Udp))
            .unwrap();
        assert_eq!((t.x_th(), t.v_th(), t.x_th_lower()), (60.0, 16.0, Some(15.0)));
    }

    #[test]
    fn r3_strictness() {
        let udp = profile(ProtocolCategory::Udp, 0.0, 10.0, 0.0, 2.0);
        let tcp = profile(ProtocolCategory::Tcp, 0.0, 10.0, 0.0, 2.0);
        let no_r3 = ToleranceFactors::new(6.0, 6.0, None).unwrap();
        let with_r3 = ToleranceFactors::new(6.0, 6.0, Some(1.0)).unwrap();
        assert!(matches!(compute_thresholds(&udp, &no_r3), Err(Error::MissingFactor(_))));
        assert!(matches!(compute_thresholds(&tcp, &with_r3), Err(Error::Parameter(_))));
    }

    #[test]
    fn factors_must_be_positive() {
        assert!(ToleranceFactors::new(0.0, 1.0, None).is_err());
        assert!(ToleranceFactors::new(1.0, -1.0, None).is_err());
        assert!(ToleranceFactors::new(1.0, 1.0, Some(0.0)).is_err());
        assert!(ToleranceFactors::new(1.0, 1.0, Some(f64::INFINITY)).is_err());
    }

    #[test]
    fn no_deviation_no_attack() {
        let p = profile(ProtocolCategory::Tcp, 1000.0, 10.0, 4.0, 2.0);
        let t = compute_thresholds(&p, &ToleranceFactors::new(6.0, 6.0, None).unwrap()).unwrap();
        let v = detect(&sample(ProtocolCategory::Tcp, 1000, 4), &p, &t).unwrap();
        assert!(!v.is_attack());
        assert_eq!((v.volume_deviation, v.flow_deviation), (0.0, 0.0));
    }

    #[test]
    fn volume_surge_triggers_upper() {
        let p = profile(ProtocolCategory::Tcp, 1000.0, 10.0, 4.0, 2.0);
        let t = compute_thresholds(&p, &ToleranceFactors::new(6.0, 6.0, None).unwrap()).unwrap();
        let v = detect(&sample(ProtocolCategory::Tcp, 1100, 4), &p, &t).unwrap();
        assert_eq!(v.triggered, BTreeSet::from([Trigger::VolumeUpper]));
    }

    #[test]
    fn many_small_flows_trigger_flow_only() {
        let p = profile(ProtocolCategory::Tcp, 1000.0, 10.0, 4.0, 2.0);
        let t = compute_thresholds(&p, &ToleranceFactors::new(6.0, 6.0, None).unwrap()).unwrap();
        let v = detect(&sample(ProtocolCategory::Tcp, 1010, 54), &p, &t).unwrap();
        assert_eq!(v.volume_deviation, 10.0);
        assert_eq!(v.flow_deviation, 50.0);
        assert_eq!(v.triggered, BTreeSet::from([Trigger::Flow]));
        let vol_only = detect_with(&sample(ProtocolCategory::Tcp, 1010, 54), &p, &t, Conditions::VOLUME_ONLY)
            .unwrap();
        assert!(!vol_only.is_attack());
    }

    #[test]
    fn udp_volume_drop_triggers_lower() {
        let p = profile(ProtocolCategory::Udp, 1000.0, 10.0, 4.0, 2.0);
        let t = compute_thresholds(&p, &ToleranceFactors::new(6.0, 8.0, Some(1.5)).unwrap())
            .unwrap();
        let v = detect(&sample(ProtocolCategory::Udp, 980, 4), &p, &t).unwrap();
        assert_eq!(v.volume_deviation, -20.0);
        assert_eq!(v.triggered, BTreeSet::from([Trigger::VolumeLower]));
    }

    #[test]
    fn equality_is_attack_free() {
        let p = profile(ProtocolCategory::Udp, 1000.0, 10.0, 4.0, 2.0);
        let t = compute_thresholds(&p, &ToleranceFactors::new(6.0, 6.0, Some(1.5)).unwrap())
            .unwrap();
        // +60 volume, +12 flows, both exactly on threshold
        assert!(!detect(&sample(ProtocolCategory::Udp, 1060, 16), &p, &t).unwrap().is_attack());
        // -15 volume, exactly on the lower bound
        assert!(!detect(&sample(ProtocolCategory::Udp, 985, 4), &p, &t).unwrap().is_attack());
    }

    #[test]
    fn protocol_mismatch_rejected() {
        let p = profile(ProtocolCategory::Tcp, 1000.0, 10.0, 4.0, 2.0);
        let t = compute_thresholds(&p, &ToleranceFactors::new(6.0, 6.0, None).unwrap()).unwrap();
        assert!(matches!(
            detect(&sample(ProtocolCategory::Icmp, 10, 1), &p, &t),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn verdict_tsv_round_trip() {
        let verdicts = vec![
            VerdictReport {
                window_index: 3,
                protocol: ProtocolCategory::Udp,
                triggered: BTreeSet::from([Trigger::Flow, Trigger::VolumeUpper]),
                volume_deviation: 1234.5,
                flow_deviation: -0.25,
            },
            VerdictReport {
                window_index: 4,
                protocol: ProtocolCategory::Tcp,
                triggered: BTreeSet::new(),
                volume_deviation: 0.0,
                flow_deviation: 1.0,
            },
        ];
        let mut buf = Vec::new();
        write_verdicts(&mut buf, &verdicts).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("3\tudp\t1\tvolume_upper,flow\t1234.5\t-0.25\n"));
        assert_eq!(read_verdicts(&buf[..], "mem").unwrap(), verdicts);
    }

    #[test]
    fn verdict_reader_rejects_inconsistent_flag() {
        let text = "0\ttcp\t1\t-\t0\t0\n";
        assert!(read_verdicts(text.as_bytes(), "mem").is_err());
    }
}
