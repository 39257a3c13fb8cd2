//! Train on an attack-free capture, then watch a high-rate flood trip the
//! volume and flow thresholds.
//!
//! cargo run --release --example profile_and_detect

use fvba::{generate, DetectionRun, FactorTable, ProfileOptions, ProfileSet, ScenarioConfig, ScenarioKind};

fn main() -> fvba::Result<()> {
    let training = generate(&ScenarioConfig::training(300, 1000))?;
    let profiles = ProfileSet::train(&training.events, 0.2, ProfileOptions::default(), 4)?;
    for p in profiles.iter() {
        println!(
            "{:<4} volume {:>10.0} ± {:<8.0} flows {:>6.1} ± {:.1}",
            p.protocol(),
            p.volume_mean(),
            p.volume_std(),
            p.flow_mean(),
            p.flow_std()
        );
    }

    let config = ScenarioConfig::desk_scale(ScenarioKind::HighRateDisruptive);
    let attack = generate(&config)?;
    let run = DetectionRun::from_events(&attack.events, profiles)?;
    let verdicts = run.verdicts(&FactorTable::default())?;

    let labels = attack.window_labels();
    let report = fvba::eval::score(&verdicts, &labels)?;
    println!(
        "attack windows detected {}/{}, false alarms {}/{}",
        report.detected, report.actual_attacks, report.false_alarms, report.normal_events
    );
    // first alarms after the flood starts
    let first = (config.attack_start / 0.2) as u64;
    for v in verdicts.iter().filter(|v| v.is_attack() && v.window_index >= first).take(5) {
        let triggers: Vec<_> = v.triggered.iter().map(|t| t.as_str()).collect();
        println!(
            "  window {:>3} {:<4} volume {:+.0} B, flows {:+.0} [{}] truth={}",
            v.window_index,
            v.protocol,
            v.volume_deviation,
            v.flow_deviation,
            triggers.join(","),
            if labels[&v.window_index] { "attack" } else { "normal" }
        );
    }
    Ok(())
}
