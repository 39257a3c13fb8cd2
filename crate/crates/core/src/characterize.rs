//! Per-flow characterisation of attack windows with six-sigma control limits.
//!
//! Flows whose window byte count lies inside `[m − 3s, m + 3s]` are normal,
//! beyond `m ± 6s` they are attack flows, and in between suspicious. A flow
//! that was already active in the preceding window is never reported as an
//! attack flow; it is demoted to suspicious (flash-crowd guard).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use crate::detect::{detect_with, Conditions, Thresholds};
use crate::error::{Error, Result};
use crate::flow::{FlowKey, WindowSample};
use crate::profile::NormalProfile;

/// Lower bound on the normal volume when computing relative attack strength.
pub const STRENGTH_EPSILON: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaLimits {
    pub ucl_ss: f64,
    pub lcl_ss: f64,
    pub ucl_as: f64,
    pub lcl_as: f64,
}

/// Control limits at three and six standard deviations around `mean`.
/// Negative lower limits are kept as computed.
pub fn sigma_limits(mean: f64, std: f64) -> Result<SigmaLimits> {
    if !mean.is_finite() || !std.is_finite() {
        return Err(Error::param("sigma limits need finite mean and std"));
    }
    if std < 0.0 {
        return Err(Error::param(format!("standard deviation must be non-negative, got {std}")));
    }
    Ok(SigmaLimits {
        ucl_ss: mean + 3.0 * std,
        lcl_ss: mean - 3.0 * std,
        ucl_as: mean + 6.0 * std,
        lcl_as: mean - 6.0 * std,
    })
}

impl SigmaLimits {
    pub fn from_profile(profile: &NormalProfile) -> Result<Self> {
        sigma_limits(profile.per_flow_mean(), profile.per_flow_std())
    }

    /// Band for a byte count, before any history adjustment.
    pub fn band(&self, bytes: u64) -> Band {
        let b = bytes as f64;
        if b > self.ucl_as || b < self.lcl_as {
            Band::Attack
        } else if b >= self.lcl_ss && b <= self.ucl_ss {
            Band::Normal
        } else {
            Band::Suspicious
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Band {
    Normal,
    Suspicious,
    Attack,
}

impl Band {
    pub fn as_str(self) -> &'static str {
        match self {
            Band::Normal => "normal",
            Band::Suspicious => "suspicious",
            Band::Attack => "attack",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowClassification {
    pub key: FlowKey,
    pub bytes: u64,
    pub band: Band,
    /// The flow would have been an attack flow but was active in the
    /// previous window.
    pub excluded_by_history: bool,
}

/// Classifies every flow of a window, in key order.
pub fn classify_flows(
    per_flow_bytes: &BTreeMap<FlowKey, u64>,
    limits: &SigmaLimits,
    previously_active: &BTreeSet<FlowKey>,
) -> Vec<FlowClassification> {
    per_flow_bytes
        .iter()
        .map(|(key, &bytes)| {
            let band = limits.band(bytes);
            let demote = band == Band::Attack && previously_active.contains(key);
            FlowClassification {
                key: key.clone(),
                bytes,
                band: if demote { Band::Suspicious } else { band },
                excluded_by_history: demote,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThrottleDirective {
    pub flow: FlowKey,
    /// Fraction of the flow's rate to let through, in (0, 1].
    pub rate_multiplier: f64,
}

/// Relative volume excess `(X_in − X_n*) / max(X_n*, ε)`, floored at zero.
pub fn attack_strength(volume: u64, volume_mean: f64) -> f64 {
    let excess = volume as f64 - volume_mean;
    if excess <= 0.0 {
        0.0
    } else {
        excess / volume_mean.max(STRENGTH_EPSILON)
    }
}

/// One directive per suspicious flow with multiplier `1 / (1 + strength)`.
pub fn throttle_directives<'a>(
    suspicious: impl IntoIterator<Item = &'a FlowKey>,
    attack_strength: f64,
) -> Result<Vec<ThrottleDirective>> {
    if !attack_strength.is_finite() || attack_strength < 0.0 {
        return Err(Error::param(format!(
            "attack strength must be finite and non-negative, got {attack_strength}"
        )));
    }
    let rate_multiplier = 1.0 / (1.0 + attack_strength);
    Ok(suspicious
        .into_iter()
        .map(|flow| ThrottleDirective {
            flow: flow.clone(),
            rate_multiplier,
        })
        .collect())
}

/// Characterisation of one attack-flagged window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowCharacterization {
    pub window_index: u64,
    pub classifications: Vec<FlowClassification>,
    pub attack_strength: f64,
    pub throttles: Vec<ThrottleDirective>,
}

impl WindowCharacterization {
    pub fn flows_in(&self, band: Band) -> impl Iterator<Item = &FlowKey> {
        self.classifications
            .iter()
            .filter(move |c| c.band == band)
            .map(|c| &c.key)
    }
}

/// Runs detection over consecutive windows of one protocol and
/// characterises the flows of every flagged window. The history set for a
/// window is the flows of the window immediately before it.
pub fn characterize_windows(
    samples: &[WindowSample],
    profile: &NormalProfile,
    thresholds: &Thresholds,
    conditions: Conditions,
) -> Result<Vec<WindowCharacterization>> {
    let limits = SigmaLimits::from_profile(profile)?;
    let empty = BTreeSet::new();
    let mut out = Vec::new();
    let mut previous: Option<&WindowSample> = None;
    for sample in samples {
        let verdict = detect_with(sample, profile, thresholds, conditions)?;
        if verdict.is_attack() {
            let history = match previous {
                Some(p) if p.window_index() + 1 == sample.window_index() => p.active_keys(),
                _ => empty.clone(),
            };
            let classifications = classify_flows(sample.per_flow_bytes(), &limits, &history);
            let strength = attack_strength(sample.volume(), profile.volume_mean());
            let suspicious = classifications
                .iter()
                .filter(|c| c.band == Band::Suspicious)
                .map(|c| &c.key);
            let throttles = throttle_directives(suspicious, strength)?;
            out.push(WindowCharacterization {
                window_index: sample.window_index(),
                classifications,
                attack_strength: strength,
                throttles,
            });
        }
        previous = Some(sample);
    }
    Ok(out)
}

fn write_key(w: &mut impl Write, key: &FlowKey) -> std::io::Result<()> {
    write!(
        w,
        "{}\t{}\t{}\t{}\t{}",
        key.protocol(),
        key.src_addr(),
        key.src_port(),
        key.dst_addr(),
        key.dst_port()
    )
}

/// Tab-separated classification table with a header row.
pub fn write_classifications(mut w: impl Write, windows: &[WindowCharacterization]) -> Result<()> {
    writeln!(w, "window\tproto\tsrc\tsport\tdst\tdport\tbytes\tband\texcluded")?;
    for win in windows {
        for c in &win.classifications {
            write!(w, "{}\t", win.window_index)?;
            write_key(&mut w, &c.key)?;
            writeln!(w, "\t{}\t{}\t{}", c.bytes, c.band, u8::from(c.excluded_by_history))?;
        }
    }
    Ok(())
}

pub fn write_throttles(mut w: impl Write, windows: &[WindowCharacterization]) -> Result<()> {
    writeln!(w, "window\tproto\tsrc\tsport\tdst\tdport\trate_multiplier")?;
    for win in windows {
        for t in &win.throttles {
            write!(w, "{}\t", win.window_index)?;
            write_key(&mut w, &t.flow)?;
            writeln!(w, "\t{}", t.rate_multiplier)?;
        }
    }
    Ok(())
}
