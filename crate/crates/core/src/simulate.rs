//! Synthetic flooding scenarios at the victim's access point.
//!
//! Legitimate clients issue requests with Poisson arrivals; each request is a
//! new flow whose bytes are delivered at the client's link rate, emitted in
//! short chunks. A share of the requests travel over UDP (QUIC-style), the
//! rest over TCP. Zombies are UDP sources of constant mean rate with
//! exponential inter-packet gaps and fixed packet size, active only during
//! the attack interval.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::flow::{Address, FlowEvent, FlowKey, GroundTruthLabel};
use crate::interchange::quantize_timestamp;
use crate::profile::window_index;

const VICTIM: &str = "203.0.113.10";
const HTTP_PORT: u16 = 80;
const QUIC_PORT: u16 = 443;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    AttackFree,
    HighRateDisruptive,
    DilutedLowRate,
    VariedRate,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::AttackFree => "attack-free",
            ScenarioKind::HighRateDisruptive => "high-rate",
            ScenarioKind::DilutedLowRate => "low-rate",
            ScenarioKind::VariedRate => "varied-rate",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "attack-free" | "none" => Ok(ScenarioKind::AttackFree),
            "high-rate" => Ok(ScenarioKind::HighRateDisruptive),
            "low-rate" | "diluted-low-rate" => Ok(ScenarioKind::DilutedLowRate),
            "varied-rate" => Ok(ScenarioKind::VariedRate),
            other => Err(Error::param(format!("unknown scenario kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub legit_clients: u32,
    /// Mean requests per second per client.
    pub legit_request_rate: f64,
    pub legit_bytes_per_request: u64,
    /// Per-client delivery rate in bits per second.
    pub legit_link_bps: f64,
    /// Share of requests carried over UDP.
    pub legit_udp_fraction: f64,
    /// Spacing of the chunks a transfer is emitted in.
    pub chunk_seconds: f64,
    pub zombies: u32,
    pub high_rate_bps: f64,
    pub low_rate_bps: f64,
    /// Share of zombies on the high rate in a varied-rate attack.
    pub high_rate_fraction: f64,
    pub packet_bytes: u64,
    pub attack_start: f64,
    pub attack_end: f64,
    pub duration: f64,
    /// Window length used to derive `attack_windows`.
    pub window_length: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Desk-scale test bed: 40 busy clients, 100 zombies at 3 Mbps (high) or
    /// 0.1 Mbps (low), attack during [25 s, 50 s) of a 75 s run.
    pub fn desk_scale(kind: ScenarioKind) -> Self {
        ScenarioConfig {
            kind,
            legit_clients: 40,
            legit_request_rate: 9.0,
            legit_bytes_per_request: 125_000,
            legit_link_bps: 2_200_000.0,
            legit_udp_fraction: 0.5,
            chunk_seconds: 0.05,
            zombies: if kind == ScenarioKind::AttackFree { 0 } else { 100 },
            high_rate_bps: 3_000_000.0,
            low_rate_bps: 100_000.0,
            high_rate_fraction: 0.5,
            packet_bytes: 1000,
            attack_start: 25.0,
            attack_end: 50.0,
            duration: 75.0,
            window_length: 0.2,
            seed: 1,
        }
    }

    /// Attack-free capture long enough for `windows` training windows.
    pub fn training(windows: usize, seed: u64) -> Self {
        let mut c = Self::desk_scale(ScenarioKind::AttackFree);
        c.duration = windows as f64 * c.window_length;
        c.attack_start = 0.0;
        c.attack_end = c.duration;
        c.seed = seed;
        c
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("legit_request_rate", self.legit_request_rate),
            ("legit_link_bps", self.legit_link_bps),
            ("chunk_seconds", self.chunk_seconds),
            ("high_rate_bps", self.high_rate_bps),
            ("low_rate_bps", self.low_rate_bps),
            ("duration", self.duration),
            ("window_length", self.window_length),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        if self.legit_clients == 0 {
            return Err(Error::param("at least one legitimate client is required"));
        }
        if self.legit_bytes_per_request == 0 || self.packet_bytes == 0 {
            return Err(Error::param("request and packet sizes must be positive"));
        }
        for (name, v) in [
            ("legit_udp_fraction", self.legit_udp_fraction),
            ("high_rate_fraction", self.high_rate_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.kind != ScenarioKind::AttackFree
            && !(self.attack_start >= 0.0
                && self.attack_start < self.attack_end
                && self.attack_end <= self.duration)
        {
            return Err(Error::param(format!(
                "attack interval [{}, {}) must satisfy 0 <= start < end <= duration {}",
                self.attack_start, self.attack_end, self.duration
            )));
        }
        if (self.zombies == 0) != (self.kind == ScenarioKind::AttackFree) {
            return Err(Error::param(format!(
                "{} scenario with {} zombies: zombies must be zero exactly when attack-free",
                self.kind, self.zombies
            )));
        }
        Ok(())
    }

    /// Per-zombie mean rates in bits per second.
    pub fn zombie_rates(&self) -> Vec<f64> {
        let n = self.zombies as usize;
        match self.kind {
            ScenarioKind::AttackFree => Vec::new(),
            ScenarioKind::HighRateDisruptive => vec![self.high_rate_bps; n],
            ScenarioKind::DilutedLowRate => vec![self.low_rate_bps; n],
            ScenarioKind::VariedRate => {
                let high = (n as f64 * self.high_rate_fraction).round() as usize;
                let mut rates = vec![self.high_rate_bps; high];
                rates.resize(n, self.low_rate_bps);
                rates
            }
        }
    }
}

/// Generated events with per-flow ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEventStream {
    pub events: Vec<FlowEvent>,
    pub truth: BTreeMap<FlowKey, GroundTruthLabel>,
    /// Windows containing at least one attack event.
    pub attack_windows: BTreeSet<u64>,
    pub window_length: f64,
}

impl LabeledEventStream {
    /// Number of windows spanned by the events.
    pub fn window_count(&self) -> u64 {
        self.events
            .last()
            .map_or(0, |e| window_index(e.timestamp(), self.window_length) + 1)
    }

    /// Per-window ground truth over every window of the stream.
    pub fn window_labels(&self) -> BTreeMap<u64, bool> {
        (0..self.window_count())
            .map(|w| (w, self.attack_windows.contains(&w)))
            .collect()
    }
}

fn client_address(i: u32) -> Address {
    Address::new(format!("10.1.{}.{}", i / 250, i % 250 + 1)).expect("valid token")
}

fn zombie_address(j: u32) -> Address {
    Address::new(format!("198.18.{}.{}", j / 250, j % 250 + 1)).expect("valid token")
}

pub fn generate(config: &ScenarioConfig) -> Result<LabeledEventStream> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let victim = Address::new(VICTIM).expect("valid token");
    let mut events = Vec::new();
    let mut truth = BTreeMap::new();

    let arrivals = Exp::new(config.legit_request_rate)
        .map_err(|e| Error::param(format!("request rate: {e}")))?;
    let bytes_per_sec = config.legit_link_bps / 8.0;
    let total = config.legit_bytes_per_request;
    let warmup = total as f64 / bytes_per_sec + config.chunk_seconds;
    for i in 0..config.legit_clients {
        let addr = client_address(i);
        let mut port: u16 = rng.random_range(1024..60000);
        // start early so the capture opens in steady state
        let mut t = -warmup;
        loop {
            t += arrivals.sample(&mut rng);
            if t >= config.duration {
                break;
            }
            let udp = rng.random_bool(config.legit_udp_fraction);
            port = if port == u16::MAX { 1024 } else { port + 1 };
            let key = if udp {
                FlowKey::udp(addr.clone(), port, victim.clone(), QUIC_PORT)
            } else {
                FlowKey::tcp(addr.clone(), port, victim.clone(), HTTP_PORT)
            };
            let mut sent = 0u64;
            let mut emitted = false;
            let mut k = 0u64;
            while sent < total {
                let ts = quantize_timestamp(t + k as f64 * config.chunk_seconds);
                if ts >= config.duration {
                    break;
                }
                let target = ((bytes_per_sec * config.chunk_seconds * (k + 1) as f64).round()
                    as u64)
                    .min(total);
                if ts < 0.0 {
                    sent = target;
                } else if target > sent {
                    events.push(FlowEvent::new(ts, key.clone(), target - sent)?);
                    sent = target;
                    emitted = true;
                }
                k += 1;
            }
            if emitted {
                truth.insert(key, GroundTruthLabel::Normal);
            }
        }
    }

    let attack_label = GroundTruthLabel::attack(config.kind.as_str())?;
    for (j, rate) in config.zombie_rates().into_iter().enumerate() {
        let addr = zombie_address(j as u32);
        let key = FlowKey::udp(
            addr,
            rng.random_range(1024..=u16::MAX),
            victim.clone(),
            rng.random_range(1..=u16::MAX),
        );
        let gap = Exp::new(rate / (config.packet_bytes as f64 * 8.0))
            .map_err(|e| Error::param(format!("zombie rate: {e}")))?;
        let mut t = config.attack_start + gap.sample(&mut rng);
        let mut emitted = false;
        while t < config.attack_end {
            let ts = quantize_timestamp(t);
            if ts >= config.attack_start && ts < config.attack_end {
                events.push(FlowEvent::new(ts, key.clone(), config.packet_bytes)?);
                emitted = true;
            }
            t += gap.sample(&mut rng);
        }
        if emitted {
            truth.insert(key, attack_label.clone());
        }
    }

    events.sort_by(|a, b| a.timestamp().total_cmp(&b.timestamp()));

    let attack_windows = events
        .iter()
        .filter(|e| truth.get(e.key()).is_some_and(GroundTruthLabel::is_attack))
        .map(|e| window_index(e.timestamp(), config.window_length))
        .collect();

    Ok(LabeledEventStream {
        events,
        truth,
        attack_windows,
        window_length: config.window_length,
    })
}
