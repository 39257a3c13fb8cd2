//! Write a simulated capture, its flow labels and a profile to disk, then
//! read them back. These are the files the command-line tool exchanges.
//!
//! cargo run --example scenario_files [DIR]

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use fvba::interchange::{load_events, load_truth, write_events, write_truth};
use fvba::{generate, ProfileOptions, ProfileSet, ScenarioConfig, ScenarioKind};

fn main() -> fvba::Result<()> {
    let dir = std::env::args_os().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let mut config = ScenarioConfig::desk_scale(ScenarioKind::DilutedLowRate);
    config.duration = 15.0;
    config.attack_start = 5.0;
    config.attack_end = 10.0;
    let capture = generate(&config)?;

    let events_path = dir.join("fvba-events.tsv");
    let truth_path = dir.join("fvba-truth.tsv");
    let profile_path = dir.join("fvba-profile.txt");
    write_events(BufWriter::new(File::create(&events_path)?), &capture.events)?;
    write_truth(BufWriter::new(File::create(&truth_path)?), &capture.truth)?;

    let events = load_events(&events_path)?;
    let truth = load_truth(&truth_path)?;
    assert_eq!(events.len(), capture.events.len());
    assert_eq!(truth, capture.truth);
    println!("{} events, {} labelled flows in {}", events.len(), truth.len(), dir.display());

    let training = generate(&ScenarioConfig::training(100, 7))?;
    let profiles = ProfileSet::train(&training.events, 0.2, ProfileOptions::default(), 1)?;
    profiles.save(&profile_path)?;
    assert_eq!(ProfileSet::load(&profile_path)?, profiles);
    print!("{}", profiles.to_text());
    Ok(())
}
