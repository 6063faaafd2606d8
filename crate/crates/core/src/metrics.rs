//! Run-level metrics, computed from the trade log and the per-slot quotes.
//!
//! Every metric that has no defined value for a run (no redemptions, too few
//! prices) is `None` and serializes as `null`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{HolderId, TicketId, TradeRecord, Venue};

/// Share of the 51% threshold used by the Nakamoto coefficient.
pub const NAKAMOTO_THRESHOLD: f64 = 0.51;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub largest_market_share: Option<f64>,
    pub nakamoto: Option<u32>,
    pub hhi: Option<f64>,
    /// Primary revenue of redeemed tickets over the MEV of their slots.
    pub mev_share_primary: Option<f64>,
    /// As `mev_share_primary`, but priced at each ticket's last acquisition,
    /// resales included.
    pub mev_share_combined: Option<f64>,
    pub gk_measure: Option<f64>,
    pub delta_variance: Option<f64>,
    pub redeemed: u64,
}

/// Fraction of redeemed tickets owned by each holder at redemption.
pub fn market_shares(trades: &[TradeRecord]) -> BTreeMap<HolderId, f64> {
    let mut counts: BTreeMap<HolderId, u64> = BTreeMap::new();
    for t in trades.iter().filter(|t| t.venue == Venue::Redemption) {
        if let Some(h) = t.seller_id {
            *counts.entry(h).or_default() += 1;
        }
    }
    let total: u64 = counts.values().sum();
    counts
        .into_iter()
        .map(|(h, c)| (h, c as f64 / total as f64))
        .collect()
}

/// Smallest number of holders whose combined share reaches 51%.
pub fn nakamoto(shares: &[f64]) -> u32 {
    let mut sorted = shares.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    for (k, s) in sorted.iter().enumerate() {
        acc += s;
        if acc >= NAKAMOTO_THRESHOLD {
            return k as u32 + 1;
        }
    }
    sorted.len() as u32
}

/// Herfindahl-Hirschman index on the 0..=10000 scale.
pub fn hhi(shares: &[f64]) -> f64 {
    10_000.0 * shares.iter().map(|s| s * s).sum::<f64>()
}

/// `captured / available`; not clipped above 1.
pub fn mev_share(captured: f64, available: f64) -> Option<f64> {
    (available > 0.0).then(|| (captured / available).max(0.0))
}

/// Mean per-epoch Garman-Klass estimate over epochs that have prices.
/// Non-positive prices are ignored since the estimator is logarithmic.
pub fn gk_measure(series: &[(u64, f64)], slots_per_epoch: u64) -> Option<f64> {
    let mut epochs: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for &(slot, p) in series.iter().filter(|(_, p)| *p > 0.0) {
        epochs.entry(slot / slots_per_epoch).or_default().push(p);
    }
    if epochs.is_empty() {
        return None;
    }
    let k = 2.0 * std::f64::consts::LN_2 - 1.0;
    let total: f64 = epochs
        .values()
        .map(|ps| {
            let (o, c) = (ps[0], ps[ps.len() - 1]);
            let h = ps.iter().copied().fold(f64::MIN, f64::max);
            let l = ps.iter().copied().fold(f64::MAX, f64::min);
            0.5 * (h / l).ln().powi(2) - k * (c / o).ln().powi(2)
        })
        .sum();
    Some(total / epochs.len() as f64)
}

/// Population variance of consecutive price differences. Needs three prices.
pub fn delta_variance(prices: &[f64]) -> Option<f64> {
    if prices.len() < 3 {
        return None;
    }
    let deltas: Vec<f64> = prices.windows(2).map(|w| w[1] - w[0]).collect();
    let n = deltas.len() as f64;
    let mean = deltas.iter().sum::<f64>() / n;
    Some(deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n)
}

/// One price per slot after slot 0: the mean executed primary price, or the
/// posted quote when nothing sold. Slots with neither are skipped.
pub fn price_series(trades: &[TradeRecord], quotes: &[(u64, Option<f64>)]) -> Vec<(u64, f64)> {
    let mut sums: BTreeMap<u64, (f64, u64)> = BTreeMap::new();
    for t in trades.iter().filter(|t| t.venue == Venue::Primary && t.slot > 0) {
        let e = sums.entry(t.slot).or_default();
        e.0 += t.price;
        e.1 += 1;
    }
    let mut series: BTreeMap<u64, f64> = sums.into_iter().map(|(s, (sum, n))| (s, sum / n as f64)).collect();
    for &(slot, quote) in quotes {
        if let (true, Some(q)) = (slot > 0, quote) {
            series.entry(slot).or_insert(q);
        }
    }
    series.into_iter().collect()
}

/// Computes every metric of a run. `quotes` lists each slot's posted price.
pub fn compute_run_metrics(trades: &[TradeRecord], quotes: &[(u64, Option<f64>)], slots_per_epoch: u64) -> RunMetrics {
    let shares: Vec<f64> = market_shares(trades).into_values().collect();
    let redeemed = trades.iter().filter(|t| t.venue == Venue::Redemption).count() as u64;

    let mut last_primary: BTreeMap<TicketId, f64> = BTreeMap::new();
    let mut last_acquisition: BTreeMap<TicketId, f64> = BTreeMap::new();
    let (mut primary, mut combined, mut available) = (0.0, 0.0, 0.0);
    for t in trades {
        match t.venue {
            Venue::Primary => {
                last_primary.insert(t.ticket_id, t.price);
                last_acquisition.insert(t.ticket_id, t.price);
            }
            Venue::Secondary => {
                last_acquisition.insert(t.ticket_id, t.price);
            }
            Venue::Redemption => {
                primary += last_primary.get(&t.ticket_id).copied().unwrap_or(0.0);
                combined += last_acquisition.get(&t.ticket_id).copied().unwrap_or(0.0);
                available += t.mev_available.unwrap_or(0.0);
            }
            Venue::Refund => {}
        }
    }

    let series = price_series(trades, quotes);
    let prices: Vec<f64> = series.iter().map(|&(_, p)| p).collect();
    let defined = !shares.is_empty();
    RunMetrics {
        largest_market_share: defined.then(|| shares.iter().copied().fold(0.0, f64::max)),
        nakamoto: defined.then(|| nakamoto(&shares)),
        hhi: defined.then(|| hhi(&shares)),
        mev_share_primary: mev_share(primary, available),
        mev_share_combined: mev_share(combined, available),
        gk_measure: gk_measure(&series, slots_per_epoch),
        delta_variance: delta_variance(&prices),
        redeemed,
    }
}

impl RunMetrics {
    /// Metrics by name, for aggregation and reporting.
    pub fn named(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("largest_market_share", self.largest_market_share),
            ("nakamoto", self.nakamoto.map(f64::from)),
            ("hhi", self.hhi),
            ("mev_share_primary", self.mev_share_primary),
            ("mev_share_combined", self.mev_share_combined),
            ("gk_measure", self.gk_measure),
            ("delta_variance", self.delta_variance),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    /// Population standard deviation across runs.
    pub std: Option<f64>,
    /// Runs in which the metric was defined.
    pub runs: usize,
}

/// Per-metric mean and standard deviation across runs, skipping runs in
/// which a metric is undefined.
pub fn aggregate(runs: &[RunMetrics]) -> BTreeMap<String, MetricSummary> {
    let mut out = BTreeMap::new();
    if runs.is_empty() {
        return out;
    }
    for (i, (name, _)) in runs[0].named().into_iter().enumerate() {
        let xs: Vec<f64> = runs.iter().filter_map(|r| r.named()[i].1).collect();
        let n = xs.len();
        let mean = (n > 0).then(|| xs.iter().sum::<f64>() / n as f64);
        let std = mean.map(|m| (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64).sqrt());
        out.insert(name.to_string(), MetricSummary { mean, std, runs: n });
    }
    out
}
