//! Sort the flows of flagged windows into normal, suspicious and attack bands
//! and derive throttling directives for the suspicious ones.
//!
//! A handful of heavy zombies stand out against a per-window flow profile.
//! A zombie that was already active in the previous window is demoted to
//! suspicious and throttled rather than dropped.
//!
//! cargo run --release --example characterize_flows

use std::collections::BTreeMap;

use fvba::{
    characterize_windows, compute_thresholds, generate, windowize, Band, Conditions, PerFlowBasis, ProfileOptions,
    ProfileSet, ProtocolCategory, ScenarioConfig, ScenarioKind, ToleranceFactors,
};

fn main() -> fvba::Result<()> {
    let options = ProfileOptions { per_flow_basis: PerFlowBasis::Window, ..Default::default() };
    let training = generate(&ScenarioConfig::training(300, 1000))?;
    let profiles = ProfileSet::train(&training.events, 0.2, options, 4)?;
    let udp = profiles.get(ProtocolCategory::Udp).expect("training has UDP traffic");

    let mut config = ScenarioConfig::desk_scale(ScenarioKind::HighRateDisruptive);
    config.zombies = 15;
    config.high_rate_bps = 20e6;
    config.duration = 40.0;
    config.attack_start = 20.0;
    config.attack_end = 30.0;
    let capture = generate(&config)?;

    let windows = windowize(&capture.events, 0.2, ProtocolCategory::Udp)?;
    let thresholds = compute_thresholds(udp, &ToleranceFactors::table_default(ProtocolCategory::Udp))?;
    let flagged = characterize_windows(&windows, udp, &thresholds, Conditions::ALL)?;
    let labels = capture.window_labels();
    let during: Vec<_> = flagged.iter().filter(|w| labels[&w.window_index]).collect();
    println!("{} UDP windows flagged, {} inside the attack", flagged.len(), during.len());

    for w in during.iter().take(4) {
        let mut counts: BTreeMap<Band, usize> = BTreeMap::new();
        let mut zombies: BTreeMap<Band, usize> = BTreeMap::new();
        for c in &w.classifications {
            *counts.entry(c.band).or_default() += 1;
            if capture.truth.get(&c.key).is_some_and(|l| l.is_attack()) {
                *zombies.entry(c.band).or_default() += 1;
            }
        }
        println!(
            "window {} strength {:.2}: {:?} (zombie flows {:?}), {} throttled to {:.3} of their rate",
            w.window_index,
            w.attack_strength,
            counts,
            zombies,
            w.throttles.len(),
            w.throttles.first().map_or(1.0, |t| t.rate_multiplier)
        );
    }
    Ok(())
}
