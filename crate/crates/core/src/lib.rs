//! Flow-volume based detection of flooding DDoS attacks.
//!
//! Traffic is cut into fixed windows per protocol. A profile of attack-free
//! windows (volume and flow-count statistics) yields thresholds; windows that
//! exceed them are flagged, and the flows of a flagged window are sorted into
//! normal, suspicious and attack bands with six-sigma control limits.
//!
//! ```
//! use fvba::{build_profile, compute_thresholds, detect, windowize, ToleranceFactors};
//! use fvba::{Address, FlowEvent, FlowKey, ProtocolCategory};
//!
//! let victim = Address::new("victim").unwrap();
//! let mut events = Vec::new();
//! for w in 0..20u32 {
//!     for c in 0..(3 + w % 2) {
//!         let key = FlowKey::tcp(Address::new(format!("c{c}")).unwrap(), 4000, victim.clone(), 80);
//!         events.push(FlowEvent::new(w as f64 * 0.2 + 0.01, key, 1000 + 10 * w as u64).unwrap());
//!     }
//! }
//! let windows = windowize(&events, 0.2, ProtocolCategory::Tcp).unwrap();
//! let profile = build_profile(&windows).unwrap();
//! let thr = compute_thresholds(&profile, &ToleranceFactors::new(1.0, 5.0, None).unwrap()).unwrap();
//! let verdict = detect(&windows[0], &profile, &thr).unwrap();
//! assert!(!verdict.is_attack());
//! ```

pub mod characterize;
pub mod cli;
pub mod detect;
pub mod error;
pub mod eval;
pub mod flow;
pub mod interchange;
pub mod kdd;
pub mod profile;
pub mod simulate;

pub use characterize::{
    attack_strength, characterize_windows, classify_flows, sigma_limits, throttle_directives, Band,
    FlowClassification, SigmaLimits, ThrottleDirective, WindowCharacterization,
};
pub use detect::{
    compute_thresholds, detect, detect_with, Conditions, DetectionRun, FactorTable, Thresholds,
    ToleranceFactors, Trigger, VerdictReport,
};
pub use error::{Error, Result};
pub use flow::{Address, FlowEvent, FlowKey, GroundTruthLabel, ProtocolCategory, WindowSample};
pub use profile::{
    build_profile, build_profile_with, windowize, windowize_protocols, NormalProfile, PerFlowBasis,
    ProfileOptions, ProfileSet,
};
pub use simulate::{generate, LabeledEventStream, ScenarioConfig, ScenarioKind};

/// Runs `f` on a pool of `jobs` worker threads (at least one).
pub(crate) fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
