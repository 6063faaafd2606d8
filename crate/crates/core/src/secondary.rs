//! Per-slot resale venue: one second-price auction per listed ticket.

use serde::{Deserialize, Serialize};

use crate::agents;
use crate::error::Result;
use crate::market::Market;
use crate::mechanisms::{run_spa, Bid};
use crate::model::{HolderId, Ticket, TicketHolder, TicketId, TradeRecord};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResaleOffer {
    pub seller: HolderId,
    pub ticket_id: TicketId,
    /// The seller's own valuation; the auction reserve.
    pub min_price: f64,
}

/// What `holder` would pay for `ticket` now: its intrinsic valuation,
/// discounted by the remaining validity unless the ticket already has a
/// slot, and adjusted for volatility when that slot is the current one.
pub fn price_resale_ticket(market: &Market, holder: &TicketHolder, ticket: &Ticket) -> f64 {
    let ctx = market.ticket_context(holder, ticket, false);
    agents::intrinsic_valuation(holder, market.config.mev_scale, ctx)
}

/// Each holder lists the ticket it values least (lowest id on ties).
pub fn collect_offers(market: &Market) -> Vec<ResaleOffer> {
    market
        .holders
        .iter()
        .filter_map(|h| {
            h.tickets
                .iter()
                .map(|&id| (id, price_resale_ticket(market, h, market.ticket(id))))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .map(|(ticket_id, min_price)| ResaleOffer {
                    seller: h.id,
                    ticket_id,
                    min_price,
                })
        })
        .collect()
}

/// Runs one resale round. Offers are auctioned in seller-id order; bids are
/// re-read before each auction so budgets reflect earlier purchases.
pub fn run_secondary_round(market: &mut Market) -> Result<Vec<TradeRecord>> {
    if !market.config.secondary_market {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for offer in collect_offers(market) {
        let ticket = market.ticket(offer.ticket_id);
        let bids: Vec<Bid> = market
            .holders
            .iter()
            .filter(|h| h.id != offer.seller && h.available_funds > 0.0)
            .map(|h| Bid {
                holder: h.id,
                amount: price_resale_ticket(market, h, ticket).min(h.available_funds),
            })
            .filter(|b| b.amount > 0.0)
            .collect();
        let outcome = run_spa(&bids, offer.min_price);
        if let Some(buyer) = outcome.winner {
            out.push(market.transfer(offer.ticket_id, offer.seller, buyer, outcome.clearing_price)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimulationConfig;
    use crate::lifecycle;
    use crate::market::new_market;
    use crate::model::{Owner, SlotEnvironment, TicketState};

    fn market(secondary: bool, expiry: Option<u64>) -> Market {
        let cfg = SimulationConfig {
            secondary_market: secondary,
            expiry_period: expiry,
            ..Default::default()
        };
        new_market(cfg, 12).unwrap()
    }

    #[test]
    fn disabled_is_empty() {
        let mut m = market(false, None);
        assert!(run_secondary_round(&mut m).unwrap().is_empty());
    }

    #[test]
    fn plain_intrinsic_value() {
        let m = market(true, None);
        let h = &m.holders[3];
        let t = m.ticket(0);
        let v = price_resale_ticket(&m, h, t);
        let expected = 0.05 * h.mev_capture_rate * (1.0 - h.aggressiveness);
        assert!((v - expected).abs() < 1e-15);
    }

    #[test]
    fn remaining_validity_is_used() {
        let mut m = market(true, Some(50));
        let id = 0;
        m.ticket_mut(id).issued_slot = 100;
        m.ticket_mut(id).expiry_slot = Some(150);
        m.ticket_mut(id).state = TicketState::Held;
        m.state.slot = 110;
        let h = m.holders[0].clone();
        let v = price_resale_ticket(&m, &h, m.ticket(id));
        let (x, z) = m.assignment_window();
        let ev = lifecycle::expected_value_factor(x, z, 40).unwrap();
        assert!((v - agents::intrinsic_valuation(&h, 0.05, Default::default()) * ev).abs() < 1e-15);
    }

    #[test]
    fn same_slot_ticket_carries_volatility() {
        let mut m = market(true, None);
        m.expected_vola = 1.0;
        m.state.slot = 1;
        m.env = Some(SlotEnvironment {
            slot: 1,
            available_mev: 0.05,
            volatility: 1.5,
        });
        let id = lifecycle::lottery_assign(&mut m, 1).unwrap();
        let mut h = m.holders[0].clone();
        h.vola_spec_factor = 1.0;
        let base = agents::intrinsic_valuation(&h, 0.05, Default::default());
        let v = price_resale_ticket(&m, &h, m.ticket(id));
        assert!((v - 1.5 * base).abs() < 1e-15);
    }

    fn staged(seller_value: f64, bids: &[f64]) -> (Market, Vec<TradeRecord>) {
        // holder 1 holds ticket 0; valuations are set through capture rates
        let mut m = market(true, None);
        for h in m.holders.iter_mut() {
            h.aggressiveness = 0.0;
            h.mev_capture_rate = 0.0;
        }
        for id in 1..m.state.current_ticket_id {
            let owner = m.ticket(id).owner.holder().unwrap();
            m.holder_mut(owner).tickets.remove(&id);
            m.ticket_mut(id).state = TicketState::Redeemed;
            m.tickets.retire(id);
            m.state.outstanding -= 1;
        }
        let owner = m.ticket(0).owner.holder().unwrap();
        m.holder_mut(owner).tickets.remove(&0);
        m.ticket_mut(0).owner = Owner::Holder(HolderId(1));
        m.holder_mut(HolderId(1)).tickets.insert(0);
        m.holders[0].mev_capture_rate = seller_value / 0.05;
        for (i, &b) in bids.iter().enumerate() {
            m.holders[i + 1].mev_capture_rate = b / 0.05;
        }
        m.check_consistency().unwrap();
        let trades = run_secondary_round(&mut m).unwrap();
        (m, trades)
    }

    #[test]
    fn clears_at_second_bid() {
        let (m, trades) = staged(0.03, &[0.05, 0.04]);
        assert_eq!(trades.len(), 1);
        assert!((trades[0].price - 0.04).abs() < 1e-12);
        assert_eq!(trades[0].buyer_id, Some(HolderId(2)));
        assert_eq!(m.ticket(0).owner, Owner::Holder(HolderId(2)));
        m.check_consistency().unwrap();
    }

    #[test]
    fn reserve_not_met() {
        let (_, trades) = staged(0.06, &[0.05, 0.04]);
        assert!(trades.is_empty());
    }

    #[test]
    fn reserve_binds_single_bidder() {
        let (_, trades) = staged(0.03, &[0.05]);
        assert!((trades[0].price - 0.03).abs() < 1e-12);
    }

    /// Clearing prices over a bid grid match a direct enumeration of who
    /// beats whom.
    #[test]
    fn matches_enumeration() {
        let grid = [0.01, 0.02, 0.03, 0.04];
        for &s in &grid {
            for &a in &grid {
                for &b in &grid {
                    let (_, trades) = staged(s, &[a, b]);
                    let max = a.max(b);
                    if max < s {
                        assert!(trades.is_empty());
                        continue;
                    }
                    let winner = if a >= b { HolderId(2) } else { HolderId(3) };
                    let second = a.min(b).max(s);
                    assert_eq!(trades.len(), 1);
                    assert_eq!(trades[0].buyer_id, Some(winner));
                    assert!((trades[0].price - second).abs() < 1e-12);
                    assert!(trades[0].price >= s - 1e-12);
                }
            }
        }
    }
}
