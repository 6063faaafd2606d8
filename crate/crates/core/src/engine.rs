//! The per-slot loop and multi-run batches.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{SellingMechanism, SimulationConfig};
use crate::environment;
use crate::error::Result;
use crate::lifecycle;
use crate::market::{new_market, Market};
use crate::mechanisms;
use crate::metrics::{self, MetricSummary, RunMetrics};
use crate::model::{HolderId, MarketState, TicketHolder, TicketState};
use crate::secondary;

/// What a slot looked like once all four sub-steps ran.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: u64,
    /// Posted price in force during the slot's primary sale.
    pub quoted_price: Option<f64>,
    pub outstanding: u64,
    pub available_mev: f64,
    pub volatility: f64,
    /// Holder that redeemed the slot, `None` if it went unfilled.
    pub winner: Option<HolderId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: SimulationConfig,
    pub seed: u64,
    pub final_state: MarketState,
    pub holders: Vec<TicketHolder>,
    pub slots: Vec<SlotRecord>,
    pub metrics: RunMetrics,
    /// Slots at which a fixed-supply mechanism did not hold its supply.
    pub supply_violations: Vec<String>,
}

impl RunResult {
    pub fn quotes(&self) -> Vec<(u64, Option<f64>)> {
        self.slots.iter().map(|s| (s.slot, s.quoted_price)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub runs: Vec<RunResult>,
    pub aggregate: BTreeMap<String, MetricSummary>,
}

/// Seed of run `run_index` in a batch.
pub fn run_seed(seed: u64, run_index: u32) -> u64 {
    seed.wrapping_add(run_index as u64)
}

fn assign_lottery(market: &mut Market) {
    let slot = market.state.slot;
    let horizon = market.config.enhanced_lookahead.unwrap_or(0);
    let covered: BTreeSet<u64> = market
        .tickets
        .live()
        .filter(|t| t.state == TicketState::Assigned)
        .filter_map(|t| t.assigned_slot)
        .collect();
    for target in slot..=slot + horizon {
        if !covered.contains(&target) {
            lifecycle::lottery_assign(market, target);
        }
    }
}

fn posted_price(market: &Market) -> Result<Option<f64>> {
    Ok(match market.config.selling_mechanism {
        SellingMechanism::Eip1559 => market.state.quoted_price,
        SellingMechanism::Amm => Some(mechanisms::current_amm_price(market)?),
        _ => None,
    })
}

fn supply_check(market: &Market, when: &str, violations: &mut Vec<String>) {
    let max = market.config.max_tickets;
    if market.state.outstanding != max {
        violations.push(format!(
            "slot {} ({when}): {} outstanding, supply is {max}",
            market.state.slot, market.state.outstanding
        ));
    }
}

/// Advances the market by one slot.
///
/// Sub-steps, in order: slot bookkeeping (environment, expiry, issuance,
/// lottery), primary sale, secondary market, redemption and price update.
/// With `assign_after_sale` the lottery runs right after the primary sale.
pub fn step(market: &mut Market) -> Result<SlotRecord> {
    step_checked(market, &mut Vec::new())
}

fn step_checked(market: &mut Market, violations: &mut Vec<String>) -> Result<SlotRecord> {
    let cfg = &market.config;
    let fixed = cfg.selling_mechanism.is_fixed_supply();
    let jit = cfg.assign_after_sale;

    // 1. meta data
    market.state.slot += 1;
    let slot = market.state.slot;
    market.state.epoch = slot / market.config.slots_per_epoch;
    let env = environment::draw_slot(slot, market.config.mev_scale, market.config.price_vola, &mut market.env_rng)?;
    market.env = Some(env);
    lifecycle::expire_tickets(market);
    mechanisms::issue_flexible_supply(market);
    if !jit {
        assign_lottery(market);
    }

    // 2. primary market
    lifecycle::refund_round(market)?;
    let quoted_price = posted_price(market)?;
    mechanisms::primary_sale(market)?;
    if jit {
        if fixed {
            supply_check(market, "after sale", violations);
        }
        lifecycle::lottery_assign(market, slot);
    }

    // 3. secondary market
    secondary::run_secondary_round(market)?;

    // 4. redemption
    let winner = match lifecycle::assigned_to(market, slot) {
        Some(id) => {
            let owner = market.ticket(id).owner.holder();
            lifecycle::redeem(market, id, &env)?;
            owner
        }
        None => {
            market.state.unfilled_slots += 1;
            None
        }
    };
    match market.config.selling_mechanism {
        SellingMechanism::Eip1559 => {
            let cfg = &market.config;
            let price = market.state.quoted_price.expect("quoted price set");
            market.state.quoted_price = Some(mechanisms::eip1559_update_price(
                price,
                market.state.outstanding,
                cfg.eip1559_target(),
                cfg.eip1559_adjust_factor,
            ));
        }
        SellingMechanism::Amm => market.state.quoted_price = Some(mechanisms::current_amm_price(market)?),
        _ => {}
    }
    if fixed && !jit {
        supply_check(market, "slot boundary", violations);
    }
    market.check_consistency()?;

    Ok(SlotRecord {
        slot,
        quoted_price,
        outstanding: market.state.outstanding,
        available_mev: env.available_mev,
        volatility: env.volatility,
        winner,
    })
}

/// Runs `config.timesteps` slots from a fresh market seeded with `seed`.
pub fn run(config: &SimulationConfig, seed: u64) -> Result<RunResult> {
    let mut market = new_market(config.clone(), seed)?;
    let mut violations = Vec::new();
    if market.config.selling_mechanism.is_fixed_supply() {
        supply_check(&market, "initial allocation", &mut violations);
    }
    let mut slots = Vec::with_capacity(config.timesteps as usize);
    for _ in 0..config.timesteps {
        slots.push(step_checked(&mut market, &mut violations)?);
    }
    let quotes: Vec<(u64, Option<f64>)> = slots.iter().map(|s| (s.slot, s.quoted_price)).collect();
    let metrics = metrics::compute_run_metrics(&market.state.trade_log, &quotes, config.slots_per_epoch);
    Ok(RunResult {
        config: market.config,
        seed,
        final_state: market.state,
        holders: market.holders,
        slots,
        metrics,
        supply_violations: violations,
    })
}

/// Runs `config.runs` independent runs with seeds `seed + i`, in parallel,
/// and aggregates their metrics. Results are in run order.
pub fn run_batch(config: &SimulationConfig) -> Result<BatchResult> {
    config.validate()?;
    let runs = (0..config.runs)
        .into_par_iter()
        .map(|i| run(config, run_seed(config.seed, i)))
        .collect::<Result<Vec<_>>>()?;
    let metrics: Vec<RunMetrics> = runs.iter().map(|r| r.metrics.clone()).collect();
    Ok(BatchResult {
        aggregate: metrics::aggregate(&metrics),
        runs,
    })
}
