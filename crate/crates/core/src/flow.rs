//! Core flow types shared by every stage of the pipeline.
//!
//! A flow is identified by its 5-tuple (protocol, source address, destination
//! address, source port, destination port). Addresses are opaque tokens: the
//! detector never interprets them, it only needs equality and ordering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Transport protocol category. Profiles and verdicts are kept per category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtocolCategory {
    Tcp,
    Udp,
    Icmp,
}

impl ProtocolCategory {
    pub const ALL: [ProtocolCategory; 3] = [
        ProtocolCategory::Tcp,
        ProtocolCategory::Udp,
        ProtocolCategory::Icmp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolCategory::Tcp => "tcp",
            ProtocolCategory::Udp => "udp",
            ProtocolCategory::Icmp => "icmp",
        }
    }
}

impl fmt::Display for ProtocolCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tcp" => Ok(ProtocolCategory::Tcp),
            "udp" => Ok(ProtocolCategory::Udp),
            "icmp" => Ok(ProtocolCategory::Icmp),
            other => Err(Error::param(format!("unknown protocol '{other}'"))),
        }
    }
}

/// Opaque address token. Any non-empty string without whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address(Arc<str>);

impl Address {
    pub fn new(token: impl AsRef<str>) -> Result<Self> {
        let token = token.as_ref();
        if token.is_empty() || token.chars().any(char::is_whitespace) {
            return Err(Error::param(format!(
                "address token must be non-empty without whitespace: {token:?}"
            )));
        }
        Ok(Address(Arc::from(token)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// 5-tuple flow identity. ICMP keys always carry zero ports.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowKey {
    protocol: ProtocolCategory,
    src_addr: Address,
    dst_addr: Address,
    src_port: u16,
    dst_port: u16,
}

impl FlowKey {
    pub fn new(
        protocol: ProtocolCategory,
        src_addr: Address,
        src_port: u16,
        dst_addr: Address,
        dst_port: u16,
    ) -> Result<Self> {
        if protocol == ProtocolCategory::Icmp && (src_port != 0 || dst_port != 0) {
            return Err(Error::param(format!(
                "icmp flow key must have zero ports, got {src_port}/{dst_port}"
            )));
        }
        Ok(FlowKey {
            protocol,
            src_addr,
            dst_addr,
            src_port,
            dst_port,
        })
    }

    pub fn tcp(src: Address, src_port: u16, dst: Address, dst_port: u16) -> Self {
        FlowKey {
            protocol: ProtocolCategory::Tcp,
            src_addr: src,
            dst_addr: dst,
            src_port,
            dst_port,
        }
    }

    pub fn udp(src: Address, src_port: u16, dst: Address, dst_port: u16) -> Self {
        FlowKey {
            protocol: ProtocolCategory::Udp,
            src_addr: src,
            dst_addr: dst,
            src_port,
            dst_port,
        }
    }

    pub fn icmp(src: Address, dst: Address) -> Self {
        FlowKey {
            protocol: ProtocolCategory::Icmp,
            src_addr: src,
            dst_addr: dst,
            src_port: 0,
            dst_port: 0,
        }
    }

    pub fn protocol(&self) -> ProtocolCategory {
        self.protocol
    }

    pub fn src_addr(&self) -> &Address {
        &self.src_addr
    }

    pub fn dst_addr(&self) -> &Address {
        &self.dst_addr
    }

    pub fn src_port(&self) -> u16 {
        self.src_port
    }

    pub fn dst_port(&self) -> u16 {
        self.dst_port
    }
}

impl fmt::Display for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}:{} > {}:{}",
            self.protocol, self.src_addr, self.src_port, self.dst_addr, self.dst_port
        )
    }
}

/// A byte arrival for one flow at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowEvent {
    timestamp: f64,
    key: FlowKey,
    bytes: u64,
}

impl FlowEvent {
    pub fn new(timestamp: f64, key: FlowKey, bytes: u64) -> Result<Self> {
        if !timestamp.is_finite() || timestamp < 0.0 {
            return Err(Error::param(format!(
                "event timestamp must be finite and non-negative, got {timestamp}"
            )));
        }
        if bytes == 0 {
            return Err(Error::param("event byte count must be at least 1"));
        }
        Ok(FlowEvent {
            timestamp,
            key,
            bytes,
        })
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn key(&self) -> &FlowKey {
        &self.key
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }
}

/// Per-protocol aggregate of one monitoring window `[start, start + length)`.
///
/// `volume` is the total byte count and `flow_count` the number of distinct
/// flow keys; both are derived from `per_flow_bytes` at construction so they
/// can never disagree with it.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    window_index: u64,
    window_start: f64,
    window_length: f64,
    protocol: ProtocolCategory,
    volume: u64,
    per_flow_bytes: BTreeMap<FlowKey, u64>,
}

impl WindowSample {
    pub fn new(
        window_index: u64,
        window_start: f64,
        window_length: f64,
        protocol: ProtocolCategory,
        per_flow_bytes: BTreeMap<FlowKey, u64>,
    ) -> Result<Self> {
        if !(window_length > 0.0 && window_length.is_finite()) {
            return Err(Error::param(format!(
                "window length must be positive, got {window_length}"
            )));
        }
        if let Some((key, _)) = per_flow_bytes.iter().find(|(_, &b)| b == 0) {
            return Err(Error::param(format!("flow {key} has zero bytes in window")));
        }
        if let Some(key) = per_flow_bytes.keys().find(|k| k.protocol() != protocol) {
            return Err(Error::param(format!(
                "flow {key} does not belong to {protocol} window"
            )));
        }
        let volume = per_flow_bytes.values().sum();
        Ok(WindowSample {
            window_index,
            window_start,
            window_length,
            protocol,
            volume,
            per_flow_bytes,
        })
    }

    pub fn window_index(&self) -> u64 {
        self.window_index
    }

    pub fn window_start(&self) -> f64 {
        self.window_start
    }

    pub fn window_length(&self) -> f64 {
        self.window_length
    }

    pub fn protocol(&self) -> ProtocolCategory {
        self.protocol
    }

    /// Total bytes in the window.
    pub fn volume(&self) -> u64 {
        self.volume
    }

    /// Number of distinct flows seen in the window.
    pub fn flow_count(&self) -> usize {
        self.per_flow_bytes.len()
    }

    pub fn per_flow_bytes(&self) -> &BTreeMap<FlowKey, u64> {
        &self.per_flow_bytes
    }

    pub fn active_keys(&self) -> BTreeSet<FlowKey> {
        self.per_flow_bytes.keys().cloned().collect()
    }
}

/// Ground-truth label of a flow, record or window.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroundTruthLabel {
    Normal,
    Attack(String),
}

impl GroundTruthLabel {
    pub fn attack(name: &str) -> Result<Self> {
        let name = name.trim().to_ascii_lowercase();
        if name.is_empty() || name == "normal" || name.chars().any(char::is_whitespace) {
            return Err(Error::param(format!("invalid attack name {name:?}")));
        }
        Ok(GroundTruthLabel::Attack(name))
    }

    pub fn is_attack(&self) -> bool {
        matches!(self, GroundTruthLabel::Attack(_))
    }

    pub fn as_str(&self) -> &str {
        match self {
            GroundTruthLabel::Normal => "normal",
            GroundTruthLabel::Attack(name) => name,
        }
    }
}

impl fmt::Display for GroundTruthLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GroundTruthLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_end_matches('.');
        if s.eq_ignore_ascii_case("normal") {
            Ok(GroundTruthLabel::Normal)
        } else {
            GroundTruthLabel::attack(s)
        }
    }
}
