//! Trade detection against false alarms by sweeping the tolerance factors.
//!
//! cargo run --release --example roc_sweep

use fvba::eval::{sweep, write_roc, Truth};
use fvba::{generate, DetectionRun, ProfileOptions, ProfileSet, ScenarioConfig, ScenarioKind, ToleranceFactors};

fn main() -> fvba::Result<()> {
    let training = generate(&ScenarioConfig::training(300, 1000))?;
    let profiles = ProfileSet::train(&training.events, 0.2, ProfileOptions::default(), 4)?;

    let capture = generate(&ScenarioConfig::desk_scale(ScenarioKind::VariedRate))?;
    let run = DetectionRun::from_events(&capture.events, profiles)?;
    let truth = Truth::Windows(capture.window_labels());

    let grid = (1..=16)
        .map(|i| {
            let r = i as f64 * 0.5;
            ToleranceFactors::new(r, r, Some(r))
        })
        .collect::<fvba::Result<Vec<_>>>()?;
    let points = sweep(&run, &truth, &grid, 4)?;
    write_roc(std::io::stdout().lock(), &points)
}
