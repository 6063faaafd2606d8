//! Sealed-bid single-ticket auctions.

use serde::{Deserialize, Serialize};

use crate::agents;
use crate::config::SellingMechanism;
use crate::error::Result;
use crate::market::Market;
use crate::model::{HolderId, TicketId, TradeRecord};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub holder: HolderId,
    pub amount: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    pub winner: Option<HolderId>,
    /// Zero when nobody wins.
    pub clearing_price: f64,
    /// Bids that entered the auction, after invalid ones were dropped.
    pub all_bids: Vec<Bid>,
}

impl AuctionOutcome {
    fn no_sale(all_bids: Vec<Bid>) -> Self {
        AuctionOutcome {
            winner: None,
            clearing_price: 0.0,
            all_bids,
        }
    }
}

fn valid_bids(bids: &[Bid]) -> Vec<Bid> {
    bids.iter().copied().filter(|b| b.amount.is_finite() && b.amount >= 0.0).collect()
}

/// Index of the highest bid; ties go to the lowest holder id.
fn best(bids: &[Bid]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, b) in bids.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(j) => {
                let cur = &bids[j];
                if b.amount > cur.amount || (b.amount == cur.amount && b.holder < cur.holder) {
                    best = Some(i);
                }
            }
        }
    }
    best
}

/// Highest bidder wins and pays its bid. Negative or non-finite bids are dropped.
pub fn run_fpa(bids: &[Bid]) -> AuctionOutcome {
    let bids = valid_bids(bids);
    match best(&bids) {
        Some(i) => AuctionOutcome {
            winner: Some(bids[i].holder),
            clearing_price: bids[i].amount,
            all_bids: bids,
        },
        None => AuctionOutcome::no_sale(bids),
    }
}

/// Highest bid at or above `reserve` wins and pays `max(second-highest bid, reserve)`.
pub fn run_spa(bids: &[Bid], reserve: f64) -> AuctionOutcome {
    let bids = valid_bids(bids);
    let qualifying: Vec<Bid> = bids.iter().copied().filter(|b| b.amount >= reserve).collect();
    let Some(i) = best(&qualifying) else {
        return AuctionOutcome::no_sale(bids);
    };
    let winner = qualifying[i].holder;
    let second = bids
        .iter()
        .filter(|b| b.holder != winner)
        .map(|b| b.amount)
        .fold(f64::NEG_INFINITY, f64::max);
    AuctionOutcome {
        winner: Some(winner),
        clearing_price: second.max(reserve),
        all_bids: bids,
    }
}

/// Collects every funded holder's bid for `ticket_id` and runs the
/// configured auction. Zero bids are not submitted.
pub fn collect_bids(market: &mut Market, ticket_id: TicketId, proposes_now: bool) -> Vec<Bid> {
    let strategy = market.config.agent_bidding_strategy;
    let mechanism = market.config.selling_mechanism;
    let scale = market.config.mev_scale;
    let n_bidders = market.active_bidders();
    let mut bids = Vec::new();
    for i in 0..market.holders.len() {
        let holder = &market.holders[i];
        if holder.available_funds <= 0.0 {
            continue;
        }
        let ctx = market.ticket_context(holder, market.ticket(ticket_id), proposes_now);
        let v = agents::strategy_valuation(&market.holders[i], strategy, scale, ctx, &mut market.rng);
        let holder = &market.holders[i];
        let amount = match mechanism {
            SellingMechanism::Spa => agents::bid_spa(holder, v),
            _ => agents::bid_fpa(holder, v, strategy, n_bidders),
        };
        if amount > 0.0 {
            bids.push(Bid {
                holder: holder.id,
                amount,
            });
        }
    }
    bids
}

/// Auctions one inventory ticket. `None` when no positive bid arrives.
pub fn auction_ticket(market: &mut Market, ticket_id: TicketId, proposes_now: bool) -> Result<Option<TradeRecord>> {
    let bids = collect_bids(market, ticket_id, proposes_now);
    let outcome = match market.config.selling_mechanism {
        SellingMechanism::Spa => run_spa(&bids, market.config.spa_reserve),
        _ => run_fpa(&bids),
    };
    match outcome.winner {
        Some(w) => market.sell_primary(ticket_id, w, outcome.clearing_price).map(Some),
        None => Ok(None),
    }
}

/// Auctions the whole protocol inventory, one ticket at a time, in offer order.
pub fn auction_inventory(market: &mut Market, proposes_now: bool) -> Result<Vec<TradeRecord>> {
    let queue: Vec<TicketId> = market.tickets.inventory().collect();
    let mut out = Vec::new();
    for id in queue {
        if let Some(rec) = auction_ticket(market, id, proposes_now)? {
            out.push(rec);
        }
    }
    Ok(out)
}
