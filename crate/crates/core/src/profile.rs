//! Windowed aggregation and normal-profile construction.
//!
//! Events are bucketed into fixed windows `[w·Δ, (w+1)·Δ)` per protocol. A
//! profile summarises attack-free windows: mean and population standard
//! deviation of the window volume and flow count, plus the mean and standard
//! deviation of per-flow byte totals used for six-sigma characterisation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{FlowEvent, FlowKey, ProtocolCategory, WindowSample};

/// Default number of training windows (60 s of traffic at 200 ms windows).
pub const DEFAULT_TRAINING_WINDOWS: usize = 300;

/// Default monitoring window length in seconds.
pub const DEFAULT_WINDOW_SECONDS: f64 = 0.2;

const PROFILE_FORMAT: &str = "fvba-profile";
const PROFILE_VERSION: u32 = 1;

fn check_window_length(window_length: f64) -> Result<()> {
    if window_length > 0.0 && window_length.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!(
            "window length must be positive, got {window_length}"
        )))
    }
}

fn check_sorted(events: &[FlowEvent]) -> Result<()> {
    for (i, pair) in events.windows(2).enumerate() {
        if pair[1].timestamp() < pair[0].timestamp() {
            return Err(Error::Ordering {
                index: i + 1,
                previous: pair[0].timestamp(),
                timestamp: pair[1].timestamp(),
            });
        }
    }
    Ok(())
}

/// Index of the window containing `timestamp`.
pub fn window_index(timestamp: f64, window_length: f64) -> u64 {
    (timestamp / window_length).floor() as u64
}

/// Aggregates one protocol's events into consecutive windows.
///
/// Windows start at index 0 and run through the window holding the last
/// matching event; windows without traffic are emitted empty.
pub fn windowize(
    events: &[FlowEvent],
    window_length: f64,
    protocol: ProtocolCategory,
) -> Result<Vec<WindowSample>> {
    let mut all = windowize_protocols(events, window_length, &[protocol])?;
    Ok(all.remove(&protocol).unwrap_or_default())
}

/// Single-pass variant of [`windowize`] for several protocols at once.
///
/// Every requested protocol gets an entry; a protocol with no events maps to
/// an empty sequence.
pub fn windowize_protocols(
    events: &[FlowEvent],
    window_length: f64,
    protocols: &[ProtocolCategory],
) -> Result<BTreeMap<ProtocolCategory, Vec<WindowSample>>> {
    check_window_length(window_length)?;
    check_sorted(events)?;

    let mut buckets: BTreeMap<ProtocolCategory, Vec<BTreeMap<FlowKey, u64>>> =
        protocols.iter().map(|&p| (p, Vec::new())).collect();

    for event in events {
        let Some(windows) = buckets.get_mut(&event.key().protocol()) else {
            continue;
        };
        let idx = window_index(event.timestamp(), window_length) as usize;
        if windows.len() <= idx {
            windows.resize_with(idx + 1, BTreeMap::new);
        }
        *windows[idx].entry(event.key().clone()).or_insert(0) += event.bytes();
    }

    buckets
        .into_iter()
        .map(|(protocol, windows)| {
            let samples = windows
                .into_iter()
                .enumerate()
                .map(|(i, flows)| {
                    WindowSample::new(
                        i as u64,
                        i as f64 * window_length,
                        window_length,
                        protocol,
                        flows,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((protocol, samples))
        })
        .collect()
}

/// How per-flow byte totals are formed for the six-sigma statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PerFlowBasis {
    /// Each flow's bytes summed over the whole training capture.
    #[default]
    Capture,
    /// Each (window, flow) pair is one observation.
    Window,
}

impl PerFlowBasis {
    pub fn as_str(self) -> &'static str {
        match self {
            PerFlowBasis::Capture => "capture",
            PerFlowBasis::Window => "window",
        }
    }
}

impl FromStr for PerFlowBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "capture" => Ok(PerFlowBasis::Capture),
            "window" => Ok(PerFlowBasis::Window),
            other => Err(Error::param(format!("unknown per-flow basis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProfileOptions {
    pub per_flow_basis: PerFlowBasis,
    /// Train on exactly the first `l` windows of each protocol instead of
    /// every window of the capture.
    pub training_windows: Option<usize>,
}

/// Normal traffic profile for one protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalProfile {
    protocol: ProtocolCategory,
    window_length: f64,
    training_windows: usize,
    volume_mean: f64,
    volume_std: f64,
    flow_mean: f64,
    flow_std: f64,
    per_flow_mean: f64,
    per_flow_std: f64,
    per_flow_basis: PerFlowBasis,
}

impl NormalProfile {
    /// Assembles a profile from already-computed statistics.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        protocol: ProtocolCategory,
        window_length: f64,
        training_windows: usize,
        volume_mean: f64,
        volume_std: f64,
        flow_mean: f64,
        flow_std: f64,
        per_flow_mean: f64,
        per_flow_std: f64,
        per_flow_basis: PerFlowBasis,
    ) -> Result<Self> {
        check_window_length(window_length)?;
        if training_windows == 0 {
            return Err(Error::param("profile needs at least one training window"));
        }
        let named = [
            ("volume_mean", volume_mean),
            ("volume_std", volume_std),
            ("flow_mean", flow_mean),
            ("flow_std", flow_std),
            ("per_flow_mean", per_flow_mean),
            ("per_flow_std", per_flow_std),
        ];
        for (name, value) in named {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::param(format!(
                    "{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        Ok(NormalProfile {
            protocol,
            window_length,
            training_windows,
            volume_mean,
            volume_std,
            flow_mean,
            flow_std,
            per_flow_mean,
            per_flow_std,
            per_flow_basis,
        })
    }

    pub fn protocol(&self) -> ProtocolCategory {
        self.protocol
    }

    pub fn window_length(&self) -> f64 {
        self.window_length
    }

    pub fn training_windows(&self) -> usize {
        self.training_windows
    }

    /// Mean window volume, X_n*.
    pub fn volume_mean(&self) -> f64 {
        self.volume_mean
    }

    /// Standard deviation of window volume, S_V.
    pub fn volume_std(&self) -> f64 {
        self.volume_std
    }

    /// Mean flow count per window, F_n*.
    pub fn flow_mean(&self) -> f64 {
        self.flow_mean
    }

    /// Standard deviation of the flow count, S_F.
    pub fn flow_std(&self) -> f64 {
        self.flow_std
    }

    pub fn per_flow_mean(&self) -> f64 {
        self.per_flow_mean
    }

    pub fn per_flow_std(&self) -> f64 {
        self.per_flow_std
    }

    pub fn per_flow_basis(&self) -> PerFlowBasis {
        self.per_flow_basis
    }
}

/// Streaming mean / population variance.
#[derive(Debug, Default, Clone, Copy)]
struct Running {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.mean
        }
    }

    fn population_std(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.m2 / self.n as f64).max(0.0).sqrt()
        }
    }
}

/// Builds a profile with the default per-flow basis (capture totals).
pub fn build_profile(samples: &[WindowSample]) -> Result<NormalProfile> {
    build_profile_with(samples, ProfileOptions::default())
}

pub fn build_profile_with(
    samples: &[WindowSample],
    options: ProfileOptions,
) -> Result<NormalProfile> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: samples.len(),
        });
    }
    let protocol = samples[0].protocol();
    let window_length = samples[0].window_length();
    if let Some(s) = samples.iter().find(|s| s.protocol() != protocol) {
        return Err(Error::param(format!(
            "mixed protocols in training samples: {protocol} and {}",
            s.protocol()
        )));
    }
    if let Some(s) = samples.iter().find(|s| s.window_length() != window_length) {
        return Err(Error::param(format!(
            "mixed window lengths in training samples: {window_length} and {}",
            s.window_length()
        )));
    }

    let mut volume = Running::default();
    let mut flows = Running::default();
    for s in samples {
        volume.push(s.volume() as f64);
        flows.push(s.flow_count() as f64);
    }

    let mut per_flow = Running::default();
    match options.per_flow_basis {
        PerFlowBasis::Capture => {
            let mut totals: BTreeMap<&FlowKey, u64> = BTreeMap::new();
            for s in samples {
                for (k, &b) in s.per_flow_bytes() {
                    *totals.entry(k).or_insert(0) += b;
                }
            }
            totals.values().for_each(|&b| per_flow.push(b as f64));
        }
        PerFlowBasis::Window => {
            for s in samples {
                s.per_flow_bytes()
                    .values()
                    .for_each(|&b| per_flow.push(b as f64));
            }
        }
    }

    NormalProfile::from_parts(
        protocol,
        window_length,
        samples.len(),
        volume.mean(),
        volume.population_std(),
        flows.mean(),
        flows.population_std(),
        per_flow.mean(),
        per_flow.population_std(),
        options.per_flow_basis,
    )
}

/// Profiles for every protocol seen in a training capture.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileSet {
    profiles: BTreeMap<ProtocolCategory, NormalProfile>,
}

impl ProfileSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, profile: NormalProfile) -> Option<NormalProfile> {
        self.profiles.insert(profile.protocol(), profile)
    }

    pub fn get(&self, protocol: ProtocolCategory) -> Option<&NormalProfile> {
        self.profiles.get(&protocol)
    }

    pub fn iter(&self) -> impl Iterator<Item = &NormalProfile> {
        self.profiles.values()
    }

    pub fn protocols(&self) -> Vec<ProtocolCategory> {
        self.profiles.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Window length shared by all profiles.
    pub fn window_length(&self) -> Result<f64> {
        let mut lengths = self.profiles.values().map(|p| p.window_length());
        let first = lengths
            .next()
            .ok_or_else(|| Error::param("profile set is empty"))?;
        if lengths.any(|l| l != first) {
            return Err(Error::param("profiles disagree on window length"));
        }
        Ok(first)
    }

    /// Windows an attack-free capture and profiles each protocol present in it.
    pub fn train(
        events: &[FlowEvent],
        window_length: f64,
        options: ProfileOptions,
        jobs: usize,
    ) -> Result<Self> {
        let mut present: Vec<ProtocolCategory> =
            events.iter().map(|e| e.key().protocol()).collect();
        present.sort();
        present.dedup();
        if present.is_empty() {
            return Err(Error::InsufficientData { needed: 2, got: 0 });
        }
        let windows = windowize_protocols(events, window_length, &present)?;
        let profiles = crate::with_jobs(jobs, || {
            windows
                .par_iter()
                .map(|(_, samples)| match options.training_windows {
                    Some(l) if samples.len() < l => Err(Error::InsufficientData {
                        needed: l,
                        got: samples.len(),
                    }),
                    Some(l) => build_profile_with(&samples[..l], options),
                    None => build_profile_with(samples, options),
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let mut set = ProfileSet::new();
        for p in profiles {
            set.insert(p);
        }
        Ok(set)
    }

    /// Renders the versioned `key=value` document.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "format={PROFILE_FORMAT}");
        let _ = writeln!(out, "version={PROFILE_VERSION}");
        for p in self.profiles.values() {
            out.push('\n');
            let _ = writeln!(out, "protocol={}", p.protocol);
            let _ = writeln!(out, "window_length={}", p.window_length);
            let _ = writeln!(out, "training_windows={}", p.training_windows);
            let _ = writeln!(out, "volume_mean={}", p.volume_mean);
            let _ = writeln!(out, "volume_std={}", p.volume_std);
            let _ = writeln!(out, "flow_mean={}", p.flow_mean);
            let _ = writeln!(out, "flow_std={}", p.flow_std);
            let _ = writeln!(out, "per_flow_mean={}", p.per_flow_mean);
            let _ = writeln!(out, "per_flow_std={}", p.per_flow_std);
            let _ = writeln!(out, "per_flow_basis={}", p.per_flow_basis.as_str());
        }
        out
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn read_from(r: impl BufRead, source_name: &str) -> Result<Self> {
        let mut header: BTreeMap<String, String> = BTreeMap::new();
        let mut sections: Vec<(usize, BTreeMap<String, String>)> = Vec::new();

        for (i, line) in r.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(source_name, line_no, "expected field=value"))?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if key == "protocol" {
                sections.push((line_no, BTreeMap::new()));
            }
            let target = match sections.last_mut() {
                Some((_, fields)) => fields,
                None => &mut header,
            };
            if target.insert(key.clone(), value).is_some() {
                return Err(Error::parse(source_name, line_no, format!("duplicate field {key}")));
            }
        }

        if header.get("format").map(String::as_str) != Some(PROFILE_FORMAT) {
            return Err(Error::parse(source_name, 1, "not a profile document"));
        }
        match header.get("version").map(String::as_str) {
            Some(v) if v == PROFILE_VERSION.to_string() => {}
            other => {
                return Err(Error::parse(
                    source_name,
                    2,
                    format!("unsupported profile version {other:?}"),
                ))
            }
        }

        let mut set = ProfileSet::new();
        for (line_no, fields) in sections {
            let err = |msg: String| Error::parse(source_name, line_no, msg);
            let get = |name: &str| -> Result<&String> {
                fields
                    .get(name)
                    .ok_or_else(|| err(format!("missing field {name}")))
            };
            let real = |name: &str| -> Result<f64> {
                get(name)?
                    .parse::<f64>()
                    .map_err(|e| err(format!("field {name}: {e}")))
            };
            let protocol: ProtocolCategory = get("protocol")?.parse()?;
            let training_windows = get("training_windows")?
                .parse::<usize>()
                .map_err(|e| err(format!("field training_windows: {e}")))?;
            let basis = match fields.get("per_flow_basis") {
                Some(b) => b.parse()?,
                None => PerFlowBasis::default(),
            };
            let profile = NormalProfile::from_parts(
                protocol,
                real("window_length")?,
                training_windows,
                real("volume_mean")?,
                real("volume_std")?,
                real("flow_mean")?,
                real("flow_std")?,
                real("per_flow_mean")?,
                real("per_flow_std")?,
                basis,
            )
            .map_err(|e| err(e.to_string()))?;
            if set.insert(profile).is_some() {
                return Err(err(format!("duplicate profile for {protocol}")));
            }
        }
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file), &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::Address;

    fn key(src: &str) -> FlowKey {
        FlowKey::tcp(Address::new(src).unwrap(), 1000, Address::new("srv").unwrap(), 80)
    }

    fn ev(t: f64, src: &str, bytes: u64) -> FlowEvent {
        FlowEvent::new(t, key(src), bytes).unwrap()
    }

    fn sample_with_volume(i: u64, volume: u64) -> WindowSample {
        let mut m = BTreeMap::new();
        if volume > 0 {
            m.insert(key("a"), volume);
        }
        WindowSample::new(i, i as f64 * 0.2, 0.2, ProtocolCategory::Tcp, m).unwrap()
    }

    #[test]
    fn empty_input_has_no_windows() {
        assert!(windowize(&[], 0.2, ProtocolCategory::Tcp).unwrap().is_empty());
    }

    #[test]
    fn same_flow_in_one_window() {
        let events = [ev(0.05, "a", 100), ev(0.15, "a", 100)];
        let w = windowize(&events, 0.2, ProtocolCategory::Tcp).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].volume(), 200);
        assert_eq!(w[0].flow_count(), 1);
    }

    #[test]
    fn gaps_produce_empty_windows() {
        let events = [ev(0.05, "a", 10), ev(0.65, "b", 20)];
        let w = windowize(&events, 0.2, ProtocolCategory::Tcp).unwrap();
        assert_eq!(w.len(), 4);
        assert_eq!(w.iter().map(|s| s.volume()).collect::<Vec<_>>(), [10, 0, 0, 20]);
        assert_eq!(w[3].window_index(), 3);
    }

    #[test]
    fn other_protocols_are_skipped() {
        let udp = FlowKey::udp(Address::new("z").unwrap(), 5, Address::new("srv").unwrap(), 53);
        let events = [ev(0.05, "a", 10), FlowEvent::new(0.5, udp, 999).unwrap()];
        let w = windowize(&events, 0.2, ProtocolCategory::Tcp).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].volume(), 10);
    }

    #[test]
    fn unsorted_input_is_rejected() {
        let events = [ev(0.3, "a", 10), ev(0.1, "a", 10)];
        assert!(matches!(
            windowize(&events, 0.2, ProtocolCategory::Tcp),
            Err(Error::Ordering { index: 1, .. })
        ));
    }

    #[test]
    fn bad_window_length_is_rejected() {
        for len in [0.0, -0.2, f64::NAN] {
            assert!(matches!(
                windowize(&[], len, ProtocolCategory::Tcp),
                Err(Error::Parameter(_))
            ));
        }
    }

    #[test]
    fn constant_series_has_zero_std() {
        let s: Vec<_> = (0..3).map(|i| sample_with_volume(i, 100)).collect();
        let p = build_profile(&s).unwrap();
        assert_eq!(p.volume_mean(), 100.0);
        assert_eq!(p.volume_std(), 0.0);
    }

    #[test]
    fn two_point_population_std() {
        let s = [sample_with_volume(0, 90), sample_with_volume(1, 110)];
        let p = build_profile(&s).unwrap();
        assert_eq!(p.volume_mean(), 100.0);
        assert_eq!(p.volume_std(), 10.0);
        assert_eq!(p.training_windows(), 2);
    }

    #[test]
    fn empty_windows_count_toward_profile() {
        let s = [sample_with_volume(0, 200), sample_with_volume(1, 0)];
        let p = build_profile(&s).unwrap();
        assert_eq!(p.volume_mean(), 100.0);
        assert_eq!(p.flow_mean(), 0.5);
    }

    #[test]
    fn per_flow_capture_vs_window_basis() {
        // flow a: 100 + 300 across two windows, flow b: 200 in window 0
        let mut w0 = BTreeMap::new();
        w0.insert(key("a"), 100);
        w0.insert(key("b"), 200);
        let mut w1 = BTreeMap::new();
        w1.insert(key("a"), 300);
        let s = [
            WindowSample::new(0, 0.0, 0.2, ProtocolCategory::Tcp, w0).unwrap(),
            WindowSample::new(1, 0.2, 0.2, ProtocolCategory::Tcp, w1).unwrap(),
        ];
        let capture = build_profile(&s).unwrap();
        assert_eq!(capture.per_flow_mean(), 300.0);
        assert_eq!(capture.per_flow_std(), 100.0);

        let window = build_profile_with(
            &s,
            ProfileOptions {
                per_flow_basis: PerFlowBasis::Window,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(window.per_flow_mean(), 200.0);
        assert!((window.per_flow_std() - (20000.0f64 / 3.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            build_profile(&[sample_with_volume(0, 1)]),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ));
        assert!(matches!(
            build_profile(&[]),
            Err(Error::InsufficientData { got: 0, .. })
        ));
    }

    #[test]
    fn mixed_protocols_rejected() {
        let udp = WindowSample::new(1, 0.2, 0.2, ProtocolCategory::Udp, BTreeMap::new()).unwrap();
        assert!(matches!(
            build_profile(&[sample_with_volume(0, 1), udp]),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn profile_text_round_trip() {
        let s: Vec<_> = (0..5).map(|i| sample_with_volume(i, 17 * i + 3)).collect();
        let mut set = ProfileSet::new();
        set.insert(build_profile(&s).unwrap());
        let text = set.to_text();
        assert!(text.starts_with("format=fvba-profile\nversion=1\n"));
        let back = ProfileSet::read_from(text.as_bytes(), "mem").unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn profile_text_rejects_bad_version_and_missing_fields() {
        let bad = "format=fvba-profile\nversion=9\n";
        assert!(ProfileSet::read_from(bad.as_bytes(), "mem").is_err());
        let missing = "format=fvba-profile\nversion=1\nprotocol=tcp\nwindow_length=0.2\n";
        let err = ProfileSet::read_from(missing.as_bytes(), "mem").unwrap_err();
        assert!(err.to_string().contains("missing field"), "{err}");
    }

    #[test]
    fn training_window_limit() {
        let k = key("a");
        let events: Vec<_> = (0..10)
            .map(|i| FlowEvent::new(i as f64 * 0.2 + 0.1, k.clone(), 100 + 10 * i).unwrap())
            .collect();
        let limited = ProfileOptions { training_windows: Some(4), ..Default::default() };
        let set = ProfileSet::train(&events, 0.2, limited, 1).unwrap();
        let p = set.get(ProtocolCategory::Tcp).unwrap();
        assert_eq!(p.training_windows(), 4);
        assert_eq!(p.volume_mean(), 115.0);
        let too_many = ProfileOptions { training_windows: Some(11), ..Default::default() };
        assert!(matches!(
            ProfileSet::train(&events, 0.2, too_many, 1),
            Err(Error::InsufficientData { needed: 11, got: 10 })
        ));
    }
}
