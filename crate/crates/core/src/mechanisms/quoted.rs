//! Posted-price mechanisms: the EIP-1559 style batch and the exponential AMM.

use rand::seq::SliceRandom;

use crate::agents;
use crate::error::{Error, Result};
use crate::market::Market;
use crate::model::TradeRecord;

/// Lowest quoted price the multiplicative update can reach.
pub const EIP1559_PRICE_FLOOR: f64 = 1e-6;

/// `price · (1 + (outstanding − target) / target / adjust_factor)`, floored.
pub fn eip1559_update_price(price: f64, outstanding: u64, target: u64, adjust_factor: f64) -> f64 {
    let target = target.max(1) as f64;
    let delta = (outstanding as f64 - target) / target;
    (price * (1.0 + delta / adjust_factor)).max(EIP1559_PRICE_FLOOR)
}

/// Price of the next ticket: `e^b · (e^((x+1)/q) − e^(x/q))`.
pub fn amm_price(excess: u64, adjust_quotient: f64, b: f64) -> Result<f64> {
    if !(adjust_quotient.is_finite() && adjust_quotient > 0.0) {
        return Err(Error::config("amm_adjust_factor", format!("must be > 0, got {adjust_quotient}")));
    }
    let x = excess as f64;
    let q = adjust_quotient;
    // e^(x/q) · (e^(1/q) − 1), with expm1 for the small difference
    Ok((b + x / q).exp() * (1.0 / q).exp_m1())
}

/// `ln(target_price) / target_amount`.
pub fn derive_b(target_price: f64, target_amount: u64) -> Result<f64> {
    if !(target_price.is_finite() && target_price > 0.0) {
        return Err(Error::parameter("target_price", format!("must be > 0, got {target_price}")));
    }
    if target_amount == 0 {
        return Err(Error::parameter("target_amount", "must be at least 1"));
    }
    Ok(target_price.ln() / target_amount as f64)
}

fn shuffled_holders(market: &mut Market) -> Vec<usize> {
    let mut order: Vec<usize> = (0..market.holders.len()).collect();
    order.shuffle(&mut market.rng);
    order
}

fn top_up_inventory(market: &mut Market, level: usize) {
    while market.tickets.inventory_len() < level {
        market.mint_ticket(false);
    }
}

/// Whether holder `idx` buys the front inventory ticket at `price`.
fn wants_front_ticket(market: &Market, idx: usize, price: f64) -> bool {
    let Some(tid) = market.tickets.inventory().next() else {
        return false;
    };
    let holder = &market.holders[idx];
    let ctx = market.ticket_context(holder, market.ticket(tid), false);
    let v = agents::intrinsic_valuation(holder, market.config.mev_scale, ctx);
    agents::quoted_decision(holder, price, v)
}

fn buy_front_ticket(market: &mut Market, idx: usize, price: f64) -> Result<TradeRecord> {
    let tid = market.tickets.inventory().next().expect("inventory checked");
    let id = market.holders[idx].id;
    market.sell_primary(tid, id, price)
}

/// One batch at the current quoted price: holders in random order, at most
/// one ticket each, at most `eip1559_max_tickets` in total. The price is not
/// touched here.
pub fn eip1559_sell(market: &mut Market) -> Result<Vec<TradeRecord>> {
    let cap = market.config.eip1559_max_tickets as usize;
    top_up_inventory(market, cap);
    let price = market.state.quoted_price.expect("quoted price set for EIP1559");
    let mut out = Vec::new();
    for idx in shuffled_holders(market) {
        if out.len() == cap {
            break;
        }
        if wants_front_ticket(market, idx, price) {
            out.push(buy_front_ticket(market, idx, price)?);
        }
    }
    Ok(out)
}

/// Holders in random order each face the current curve price and buy at most
/// one ticket; every purchase moves the curve up by one.
pub fn amm_sell(market: &mut Market) -> Result<Vec<TradeRecord>> {
    top_up_inventory(market, market.holders.len());
    let mut out = Vec::new();
    for idx in shuffled_holders(market) {
        let price = current_amm_price(market)?;
        if wants_front_ticket(market, idx, price) {
            out.push(buy_front_ticket(market, idx, price)?);
            market.state.excess_tickets_held += 1;
        }
    }
    market.state.quoted_price = Some(current_amm_price(market)?);
    Ok(out)
}

pub fn current_amm_price(market: &Market) -> Result<f64> {
    amm_price(
        market.state.excess_tickets_held,
        market.config.amm_adjust_factor,
        market.config.amm_b(),
    )
}

/// Sells the initial batch round-robin over a shuffled holder order until the
/// batch is gone or a full round finds no buyer. The EIP-1559 batch sells at
/// the initial price; the AMM batch walks up the curve.
pub fn allocate_quoted_initial(market: &mut Market, amm: bool) -> Result<Vec<TradeRecord>> {
    let order = shuffled_holders(market);
    let mut out = Vec::new();
    loop {
        let mut bought = false;
        for &idx in &order {
            if market.tickets.inventory_len() == 0 {
                return Ok(out);
            }
            let price = if amm {
                current_amm_price(market)?
            } else {
                market.state.quoted_price.expect("quoted price set")
            };
            if wants_front_ticket(market, idx, price) {
                out.push(buy_front_ticket(market, idx, price)?);
                if amm {
                    market.state.excess_tickets_held += 1;
                }
                bought = true;
            }
        }
        if !bought {
            if amm {
                market.state.quoted_price = Some(current_amm_price(market)?);
            }
            return Ok(out);
        }
    }
}
