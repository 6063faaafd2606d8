//! Builder population and the valuations and bids derived from it.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::config::BiddingStrategy;
use crate::error::{Error, Result};
use crate::model::{HolderId, Tier, TicketHolder};

/// Floor applied to non-positive volatility specialisation draws.
pub const VOLA_SPEC_FLOOR: f64 = 0.1;

/// Seeds `n` holders with ids `1..=n`.
///
/// The first 20% of ids are top builders, the next 40% middle and the rest
/// tail; each tier draws funds and capture rates from its own uniform window.
/// Per holder the stream is consumed in the order funds, capture rate,
/// aggressiveness, volatility specialisation.
pub fn seed_holders<R: Rng + ?Sized>(n: u32, rng: &mut R) -> Result<Vec<TicketHolder>> {
    if n == 0 {
        return Err(Error::config("number_of_ticket_holders", "must be at least 1"));
    }
    let aggressiveness = Normal::new(0.15, 0.02).expect("valid normal");
    let spec = Normal::new(1.0, 0.5).expect("valid normal");
    let n_f = n as f64;

    let holders = (1..=n)
        .map(|id| {
            let id_f = id as f64;
            let (tier, funds, capture) = if id_f <= n_f * 0.2 {
                (Tier::Top, (400.0, 1000.0), (0.85, 0.95))
            } else if id_f <= n_f * 0.6 {
                (Tier::Middle, (300.0, 700.0), (0.75, 0.85))
            } else {
                (Tier::Tail, (200.0, 500.0), (0.6, 0.75))
            };
            let available_funds = rng.random_range(funds.0..funds.1);
            let mev_capture_rate = rng.random_range(capture.0..capture.1);
            let aggressiveness = aggressiveness.sample(rng);
            let mut vola_spec_factor = spec.sample(rng);
            if vola_spec_factor <= 0.0 {
                vola_spec_factor = VOLA_SPEC_FLOOR;
            }
            TicketHolder {
                id: HolderId(id),
                tier,
                available_funds,
                mev_capture_rate,
                aggressiveness,
                vola_spec_factor,
                tickets: BTreeSet::new(),
                accumulated_earnings: 0.0,
                accumulated_costs: 0.0,
            }
        })
        .collect();
    Ok(holders)
}

/// Ticket-specific factors a holder folds into its valuation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TicketContext {
    /// Probability the ticket is assigned before it expires; 1 when the
    /// ticket does not expire or already has a slot.
    pub expiry_discount: f64,
    /// Volatility adjustment when the slot's volatility is known, else 1.
    pub volatility_adjustment: f64,
}

impl Default for TicketContext {
    fn default() -> Self {
        TicketContext {
            expiry_discount: 1.0,
            volatility_adjustment: 1.0,
        }
    }
}

pub fn intrinsic_valuation(holder: &TicketHolder, mev_scale_estimate: f64, ctx: TicketContext) -> f64 {
    mev_scale_estimate
        * holder.mev_capture_rate
        * (1.0 - holder.aggressiveness)
        * ctx.expiry_discount
        * ctx.volatility_adjustment
}

/// Valuation under a given strategy's information set. Only
/// `UniformAroundMedian` consumes randomness.
pub fn strategy_valuation<R: Rng + ?Sized>(
    holder: &TicketHolder,
    strategy: BiddingStrategy,
    mev_scale_estimate: f64,
    ctx: TicketContext,
    rng: &mut R,
) -> f64 {
    let discounts = ctx.expiry_discount * ctx.volatility_adjustment;
    let v = match strategy {
        BiddingStrategy::UniformAroundMedian => {
            // median of an exponential with mean `scale`
            let median = mev_scale_estimate * std::f64::consts::LN_2;
            rng.random_range(0.5 * median..=1.5 * median) * discounts
        }
        BiddingStrategy::NaiveHistorical => mev_scale_estimate * (1.0 - holder.aggressiveness) * discounts,
        BiddingStrategy::CaptureAware
        | BiddingStrategy::CompetitionAdjusted
        | BiddingStrategy::Truthful
        | BiddingStrategy::QuotedThreshold => intrinsic_valuation(holder, mev_scale_estimate, ctx),
    };
    v.max(0.0)
}

/// Sealed first-price bid. `n_bidders` counts all active bidders, floored at 2.
pub fn bid_fpa(holder: &TicketHolder, valuation: f64, strategy: BiddingStrategy, n_bidders: usize) -> f64 {
    let bid = match strategy {
        BiddingStrategy::CompetitionAdjusted => {
            let n = n_bidders.max(2) as f64;
            (n - 1.0) / n * valuation
        }
        _ => valuation,
    };
    bid.min(holder.available_funds).max(0.0)
}

/// Truthful second-price bid, capped by the budget.
pub fn bid_spa(holder: &TicketHolder, valuation: f64) -> f64 {
    valuation.min(holder.available_funds).max(0.0)
}

pub fn quoted_decision(holder: &TicketHolder, quoted_price: f64, valuation: f64) -> bool {
    quoted_price < valuation && holder.can_afford(quoted_price)
}

/// `max(0, 1 + (vola - expected) * spec)`.
pub fn volatility_adjustment(vola_slot: f64, expected_vola: f64, vola_spec_factor: f64) -> f64 {
    (1.0 + (vola_slot - expected_vola) * vola_spec_factor).max(0.0)
}
