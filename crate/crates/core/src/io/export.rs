//! Bit-stable CSV and JSON export, and the reverse path for recomputing
//! metrics from disk.
//!
//! All floats are written in 9-decimal fixed point. The metrics stored in
//! `summary.json` are computed from the rounded log, so recomputing them
//! from the CSV files reproduces them exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::SimulationConfig;
use crate::engine::{BatchResult, RunResult, SlotRecord};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricSummary, RunMetrics};
use crate::model::{HolderId, TradeRecord, Venue};

pub const TRADE_COLUMNS: [&str; 8] = [
    "slot",
    "venue",
    "ticket_id",
    "buyer_id",
    "seller_id",
    "price",
    "mev_available",
    "mev_extracted",
];
pub const SLOT_COLUMNS: [&str; 4] = ["slot", "quoted_price", "outstanding", "winner_id"];

/// 9-decimal fixed point; negative zero prints as zero.
pub fn fmt9(x: f64) -> String {
    let s = format!("{x:.9}");
    if s == "-0.000000000" { "0.000000000".to_string() } else { s }
}

/// The value `fmt9` would read back as.
pub fn round9(x: f64) -> f64 {
    fmt9(x).parse().expect("fixed-point float parses")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

pub fn write_trades(path: &Path, trades: &[TradeRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(TRADE_COLUMNS)?;
    for t in trades {
        w.write_record([
            t.slot.to_string(),
            t.venue.as_str().to_string(),
            t.ticket_id.to_string(),
            opt(t.buyer_id),
            opt(t.seller_id),
            fmt9(t.price),
            opt(t.mev_available.map(fmt9)),
            opt(t.mev_extracted.map(fmt9)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_slots(path: &Path, slots: &[SlotRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SLOT_COLUMNS)?;
    for s in slots {
        w.write_record([
            s.slot.to_string(),
            opt(s.quoted_price.map(fmt9)),
            s.outstanding.to_string(),
            opt(s.winner),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn reader(path: &Path, expected: &[&str]) -> Result<csv::Reader<fs::File>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != expected {
        return Err(Error::config(
            path.display().to_string(),
            format!("expected columns {expected:?}, found {header:?}"),
        ));
    }
    Ok(r)
}

fn field<T: std::str::FromStr>(path: &Path, row: usize, col: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::config(path.display().to_string(), format!("row {row}: bad {col} `{s}`")))
}

fn opt_field<T: std::str::FromStr>(path: &Path, row: usize, col: &str, s: &str) -> Result<Option<T>> {
    if s.is_empty() { Ok(None) } else { field(path, row, col, s).map(Some) }
}

pub fn read_trades(path: &Path) -> Result<Vec<TradeRecord>> {
    let mut r = reader(path, &TRADE_COLUMNS)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let venue = Venue::parse(&rec[1])
            .ok_or_else(|| Error::config(path.display().to_string(), format!("row {row}: bad venue `{}`", &rec[1])))?;
        out.push(TradeRecord {
            slot: field(path, row, "slot", &rec[0])?,
            venue,
            ticket_id: field(path, row, "ticket_id", &rec[2])?,
            buyer_id: opt_field::<u32>(path, row, "buyer_id", &rec[3])?.map(HolderId),
            seller_id: opt_field::<u32>(path, row, "seller_id", &rec[4])?.map(HolderId),
            price: field(path, row, "price", &rec[5])?,
            mev_available: opt_field(path, row, "mev_available", &rec[6])?,
            mev_extracted: opt_field(path, row, "mev_extracted", &rec[7])?,
        });
    }
    Ok(out)
}

/// `(slot, quoted_price)` pairs of a `slots.csv`.
pub fn read_quotes(path: &Path) -> Result<Vec<(u64, Option<f64>)>> {
    let mut r = reader(path, &SLOT_COLUMNS)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        out.push((field(path, i + 2, "slot", &rec[0])?, opt_field(path, i + 2, "quoted_price", &rec[1])?));
    }
    Ok(out)
}

/// The trade log and quotes exactly as they will be read back from disk.
fn rounded(result: &RunResult) -> (Vec<TradeRecord>, Vec<(u64, Option<f64>)>) {
    let trades = result
        .final_state
        .trade_log
        .iter()
        .map(|t| TradeRecord {
            price: round9(t.price),
            mev_available: t.mev_available.map(round9),
            mev_extracted: t.mev_extracted.map(round9),
            ..t.clone()
        })
        .collect();
    let quotes = result.slots.iter().map(|s| (s.slot, s.quoted_price.map(round9))).collect();
    (trades, quotes)
}

/// Metrics of the exported (rounded) log.
pub fn exported_metrics(result: &RunResult) -> RunMetrics {
    let (trades, quotes) = rounded(result);
    metrics::compute_run_metrics(&trades, &quotes, result.config.slots_per_epoch)
}

/// Rounds every metric to 9 decimals for display in JSON.
pub fn round_metrics(m: &RunMetrics) -> RunMetrics {
    let r = |x: Option<f64>| x.map(round9);
    RunMetrics {
        largest_market_share: r(m.largest_market_share),
        nakamoto: m.nakamoto,
        hhi: r(m.hhi),
        mev_share_primary: r(m.mev_share_primary),
        mev_share_combined: r(m.mev_share_combined),
        gk_measure: r(m.gk_measure),
        delta_variance: r(m.delta_variance),
        redeemed: m.redeemed,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: SimulationConfig,
    pub seed: u64,
    pub metrics: RunMetrics,
    pub total_mev_captured: f64,
    pub total_mev_available: f64,
    pub unfilled_slots: u64,
    pub supply_violations: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub config: SimulationConfig,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunMetrics>,
    pub aggregate: BTreeMap<String, MetricSummary>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes `trades.csv`, `slots.csv` and `summary.json` into `dir`.
pub fn export_run(result: &RunResult, dir: &Path) -> Result<RunMetrics> {
    fs::create_dir_all(dir)?;
    write_trades(&dir.join("trades.csv"), &result.final_state.trade_log)?;
    write_slots(&dir.join("slots.csv"), &result.slots)?;
    let metrics = exported_metrics(result);
    let summary = RunSummary {
        config: result.config.clone(),
        seed: result.seed,
        metrics: round_metrics(&metrics),
        total_mev_captured: round9(result.final_state.total_mev_captured),
        total_mev_available: round9(result.final_state.total_mev_available),
        unfilled_slots: result.final_state.unfilled_slots,
        supply_violations: result.supply_violations.clone(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(metrics)
}

/// Exports every run into `dir/run-NN/` and writes the aggregate summary.
pub fn export_batch(batch: &BatchResult, dir: &Path) -> Result<BatchSummary> {
    fs::create_dir_all(dir)?;
    let mut runs = Vec::with_capacity(batch.runs.len());
    for (i, r) in batch.runs.iter().enumerate() {
        runs.push(export_run(r, &dir.join(format!("run-{i:02}")))?);
    }
    let aggregate = metrics::aggregate(&runs)
        .into_iter()
        .map(|(k, s)| {
            let s = MetricSummary {
                mean: s.mean.map(round9),
                std: s.std.map(round9),
                runs: s.runs,
            };
            (k, s)
        })
        .collect();
    let summary = BatchSummary {
        config: batch.runs.first().map(|r| r.config.clone()).unwrap_or_default(),
        seeds: batch.runs.iter().map(|r| r.seed).collect(),
        runs: runs.iter().map(round_metrics).collect(),
        aggregate,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Recomputes a run's metrics from an exported run directory.
pub fn recompute_metrics(dir: &Path) -> Result<RunMetrics> {
    let summary: RunSummary = serde_json::from_str(&fs::read_to_string(dir.join("summary.json"))?)?;
    let trades = read_trades(&dir.join("trades.csv"))?;
    let quotes = read_quotes(&dir.join("slots.csv"))?;
    Ok(metrics::compute_run_metrics(&trades, &quotes, summary.config.slots_per_epoch))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point() {
        assert_eq!(fmt9(0.1), "0.100000000");
        assert_eq!(fmt9(-1e-12), "0.000000000");
        assert_eq!(fmt9(1234.5), "1234.500000000");
        assert_eq!(round9(0.1234567891234), 0.123456789);
    }

    #[test]
    fn trades_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let trades = vec![
            TradeRecord {
                slot: 3,
                venue: Venue::Redemption,
                ticket_id: 9,
                buyer_id: None,
                seller_id: Some(HolderId(2)),
                price: 0.5,
                mev_available: Some(0.75),
                mev_extracted: Some(0.5),
            },
            TradeRecord {
                slot: 4,
                venue: Venue::Secondary,
                ticket_id: 1,
                buyer_id: Some(HolderId(1)),
                seller_id: Some(HolderId(7)),
                price: 0.25,
                mev_available: None,
                mev_extracted: None,
            },
        ];
        write_trades(&p, &trades).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.starts_with("slot,venue,ticket_id,buyer_id,seller_id,price,mev_available,mev_extracted\n"));
        assert_eq!(read_trades(&p).unwrap(), trades);
    }

    #[test]
    fn header_mismatch_names_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("slots.csv");
        fs::write(&p, "slot,price\n1,2\n").unwrap();
        let err = read_quotes(&p).unwrap_err();
        assert!(err.to_string().contains("slots.csv"));
    }
}
