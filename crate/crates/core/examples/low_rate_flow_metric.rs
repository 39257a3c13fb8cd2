//! Many zombies each sending a trickle barely move the byte volume, but the
//! number of distinct flows jumps. Compare volume-only, flow-only and the
//! combined rule on the same capture.
//!
//! cargo run --release --example low_rate_flow_metric

use fvba::eval::Truth;
use fvba::{generate, Conditions, DetectionRun, FactorTable, ProfileOptions, ProfileSet, ScenarioConfig, ScenarioKind, ToleranceFactors};

fn main() -> fvba::Result<()> {
    let training = generate(&ScenarioConfig::training(300, 1000))?;
    let profiles = ProfileSet::train(&training.events, 0.2, ProfileOptions::default(), 4)?;

    let config = ScenarioConfig::desk_scale(ScenarioKind::DilutedLowRate);
    println!(
        "{} zombies at {} bit/s each, attack between {} s and {} s",
        config.zombies, config.low_rate_bps, config.attack_start, config.attack_end
    );
    let capture = generate(&config)?;
    let truth = Truth::Windows(capture.window_labels());
    let run = DetectionRun::from_events(&capture.events, profiles)?;
    let factors = FactorTable::uniform(ToleranceFactors::new(6.0, 6.0, Some(6.0))?);

    for (name, conditions) in [
        ("volume only", Conditions::VOLUME_ONLY),
        ("flow only", Conditions::FLOW_ONLY),
        ("both", Conditions::ALL),
    ] {
        let report = truth.score(&run.clone().with_conditions(conditions).verdicts(&factors)?)?;
        println!(
            "{name:<12} detected {:>3}/{:<3} false alarms {}/{}",
            report.detected, report.actual_attacks, report.false_alarms, report.normal_events
        );
    }
    Ok(())
}
