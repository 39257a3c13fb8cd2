//! Profile the normal connections of a KDD Cup 1999 file and score the DoS
//! records of another, per protocol and per attack.
//!
//! cargo run --release --example kdd_pipeline -- kddcup.data_10_percent.gz corrected.gz
//!
//! Without arguments a small synthetic sample in the same format is used.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fvba::eval::write_breakdown;
use fvba::kdd::{self, KddDosFilter, KddLoad, KddRecord, RecordCountWindowing, Split};
use fvba::{FactorTable, ProfileOptions};

fn record(protocol: &str, service: &str, flag: &str, src: u64, dst: u64, label: &str) -> String {
    format!("0,{protocol},{service},{flag},{src},{dst}{},{label}.", ",0".repeat(35))
}

fn synthetic(split: Split, seed: u64) -> fvba::Result<KddLoad> {
    // normal traffic over a few services, plus smurf and neptune bursts in the
    // test split: smurf floods large echo replies, neptune spreads half-open
    // connections over many ports
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tcp_services = ["http", "smtp", "ftp_data", "ftp", "telnet", "pop_3", "finger", "auth"];
    let mut lines = Vec::new();
    for _ in 0..6000 {
        let line = match rng.random_range(0..10) {
            0..=6 => {
                let service = tcp_services[rng.random_range(0..tcp_services.len())];
                let flag = if rng.random_bool(0.1) { "REJ" } else { "SF" };
                record("tcp", service, flag, rng.random_range(100..600), rng.random_range(0..8000), "normal")
            }
            7 | 8 => record("udp", "domain_u", "SF", rng.random_range(30..60), rng.random_range(50..200), "normal"),
            _ => record("icmp", "ecr_i", "SF", rng.random_range(20..100), 0, "normal"),
        };
        lines.push(line);
    }
    if split == Split::Testing {
        let at = lines.len() / 2;
        for _ in 0..500 {
            lines.insert(at, record("icmp", "ecr_i", "SF", 1032, 0, "smurf"));
            lines.insert(at, record("tcp", &format!("private{}", rng.random_range(0..200)), "S0", 0, 0, "neptune"));
        }
    }
    let records: Vec<KddRecord> = kdd::parse(lines.join("\n").as_bytes(), "synthetic")?;
    kdd::load_records(records.into_iter().map(Ok), &KddDosFilter::default(), split)
}

fn main() -> fvba::Result<()> {
    let paths: Vec<PathBuf> = std::env::args_os().skip(1).map(PathBuf::from).collect();
    let filter = KddDosFilter::default();
    let (train, test) = match paths.as_slice() {
        [train, test] => (kdd::load(train, &filter, Split::Training)?, kdd::load(test, &filter, Split::Testing)?),
        _ => {
            println!("no files given; using a synthetic sample");
            (synthetic(Split::Training, 1)?, synthetic(Split::Testing, 2)?)
        }
    };
    println!("training: {} records, testing: {} records", train.summary.records, test.summary.records);

    let windowing = RecordCountWindowing::default();
    let profiles = kdd::train_profiles(&train.normal(), &windowing, ProfileOptions::default())?;
    let result = kdd::evaluate(&profiles, &test.connections, &windowing, &FactorTable::default(), 4)?;
    for (protocol, r) in &result.per_protocol {
        println!(
            "{protocol:<4} detected {}/{} attack records, {} of {} normal records in flagged windows",
            r.detected, r.actual_attacks, r.false_alarms, r.normal_events
        );
    }
    write_breakdown(std::io::stdout().lock(), &result.breakdown)
}
