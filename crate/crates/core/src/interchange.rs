//! Plain-text interchange formats for flow events and flow ground truth.
//!
//! Events: one per line,
//! `timestamp<TAB>proto<TAB>src<TAB>sport<TAB>dst<TAB>dport<TAB>bytes`,
//! with timestamps printed to microsecond precision.
//!
//! Truth sidecar: `proto<TAB>src<TAB>sport<TAB>dst<TAB>dport<TAB>label`, one
//! line per flow key.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::flow::{Address, FlowEvent, FlowKey, GroundTruthLabel};

/// Rounds a timestamp down to the microsecond grid used by the event format.
pub fn quantize_timestamp(t: f64) -> f64 {
    (t * 1e6).floor() / 1e6
}

/// Opens a text file, transparently decompressing gzip input.
pub fn open_text(path: &Path) -> Result<Box<dyn BufRead>> {
    let mut file = File::open(path)?;
    let mut magic = [0u8; 2];
    let n = file.read(&mut magic)?;
    let file = File::open(path)?;
    if n == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(GzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

fn parse_key(fields: &[&str], err: &dyn Fn(String) -> Error) -> Result<FlowKey> {
    let protocol = fields[0].parse().map_err(|e: Error| err(e.to_string()))?;
    let src = Address::new(fields[1]).map_err(|e| err(e.to_string()))?;
    let sport = fields[2]
        .parse::<u16>()
        .map_err(|e| err(format!("source port: {e}")))?;
    let dst = Address::new(fields[3]).map_err(|e| err(e.to_string()))?;
    let dport = fields[4]
        .parse::<u16>()
        .map_err(|e| err(format!("destination port: {e}")))?;
    FlowKey::new(protocol, src, sport, dst, dport).map_err(|e| err(e.to_string()))
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

pub fn write_events(mut w: impl Write, events: &[FlowEvent]) -> Result<()> {
    for e in events {
        write!(w, "{:.6}\t", e.timestamp())?;
        write_key(&mut w, e.key())?;
        writeln!(w, "\t{}", e.bytes())?;
    }
    Ok(())
}

pub fn read_events(r: impl BufRead, source_name: &str) -> Result<Vec<FlowEvent>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::parse(source_name, line_no, msg);
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 7 {
            return Err(err(format!("expected 7 fields, found {}", fields.len())));
        }
        let timestamp = fields[0]
            .parse::<f64>()
            .map_err(|e| err(format!("timestamp: {e}")))?;
        let key = parse_key(&fields[1..6], &err)?;
        let bytes = fields[6]
            .parse::<u64>()
            .map_err(|e| err(format!("bytes: {e}")))?;
        out.push(FlowEvent::new(timestamp, key, bytes).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

pub fn load_events(path: &Path) -> Result<Vec<FlowEvent>> {
    read_events(open_text(path)?, &path.display().to_string())
}

pub fn write_truth(mut w: impl Write, truth: &BTreeMap<FlowKey, GroundTruthLabel>) -> Result<()> {
    for (key, label) in truth {
        write_key(&mut w, key)?;
        writeln!(w, "\t{label}")?;
    }
    Ok(())
}

pub fn read_truth(r: impl BufRead, source_name: &str) -> Result<BTreeMap<FlowKey, GroundTruthLabel>> {
    let mut out = BTreeMap::new();
    for (i, line) in r.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::parse(source_name, line_no, msg);
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", fields.len())));
        }
        let key = parse_key(&fields[..5], &err)?;
        let label = fields[5].parse().map_err(|e: Error| err(e.to_string()))?;
        if out.insert(key, label).is_some() {
            return Err(err("duplicate flow key".into()));
        }
    }
    Ok(out)
}

pub fn load_truth(path: &Path) -> Result<BTreeMap<FlowKey, GroundTruthLabel>> {
    read_truth(open_text(path)?, &path.display().to_string())
}
