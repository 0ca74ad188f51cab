//! Record and ground-truth CSV files.
//!
//! Records carry only what a detector sees: `index,pair,u,v` with `u, v` in
//! `{+1, -1}` and a 1-based per-pair measurement index. Hidden values and
//! device states live in a separate ground-truth file.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use hvbell_core::simulate::Pair;
use hvbell_core::{RecordSequence, Run, Spin};

#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    index: usize,
    pair: String,
    u: String,
    v: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct TruthRow {
    index: usize,
    pair: String,
    hidden: usize,
    device_u: Option<usize>,
    device_v: Option<usize>,
}

fn spin_text(s: Spin) -> &'static str {
    match s {
        Spin::Up => "+1",
        Spin::Down => "-1",
    }
}

fn parse_spin(text: &str) -> Result<Spin> {
    match text.trim() {
        "+1" | "1" => Ok(Spin::Up),
        "-1" => Ok(Spin::Down),
        other => bail!("outcome {other:?} is not +1 or -1"),
    }
}

/// Writes pairs in `AB, CB, AC` order; absent pairs are skipped.
pub fn write_records<W: Write>(out: W, records: &BTreeMap<Pair, RecordSequence>) -> Result<()> {
    // Explicit header so an empty file still parses.
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["index", "pair", "u", "v"])?;
    for (pair, seq) in records {
        for (i, &(u, v)) in seq.outcomes().iter().enumerate() {
            w.serialize(RecordRow {
                index: i + 1,
                pair: pair.as_str().to_owned(),
                u: spin_text(u).to_owned(),
                v: spin_text(v).to_owned(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads records grouped by pair. Within a pair, indices must run `1, 2, …`
/// in file order.
pub fn read_records<R: Read>(input: R, source: &str) -> Result<BTreeMap<Pair, RecordSequence>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().with_context(|| format!("{source}: missing header"))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["index", "pair", "u", "v"] {
        bail!("{source}: header must be index,pair,u,v");
    }
    let mut outcomes: BTreeMap<Pair, Vec<(Spin, Spin)>> = BTreeMap::new();
    for (line, row) in r.deserialize::<RecordRow>().enumerate() {
        let at = || format!("{source}: record {}", line + 1);
        let row = row.with_context(at)?;
        let pair: Pair = row.pair.parse().with_context(at)?;
        let seq = outcomes.entry(pair).or_default();
        if row.index != seq.len() + 1 {
            bail!("{}: index {} out of sequence for pair {}", at(), row.index, pair.as_str());
        }
        seq.push((parse_spin(&row.u).with_context(at)?, parse_spin(&row.v).with_context(at)?));
    }
    outcomes
        .into_iter()
        .map(|(p, o)| Ok((p, RecordSequence::new(o)?)))
        .collect()
}

/// Hidden values and device states, all 1-based.
pub fn write_ground_truth<W: Write>(out: W, runs: &[Run; 3]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for pair in Pair::ALL {
        let run = &runs[pair.index()];
        let devices = run.devices();
        for (i, &k) in run.hidden().iter().enumerate() {
            w.serialize(TruthRow {
                index: i + 1,
                pair: pair.as_str().to_owned(),
                hidden: k + 1,
                device_u: devices.map(|d| d.states_u[i] + 1),
                device_v: devices.map(|d| d.states_v[i] + 1),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
