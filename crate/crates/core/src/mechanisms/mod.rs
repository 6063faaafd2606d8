//! Primary-market pricing and allocation.

mod auction;
mod quoted;

pub use auction::{auction_inventory, auction_ticket, collect_bids, run_fpa, run_spa, AuctionOutcome, Bid};
pub use quoted::{
    allocate_quoted_initial, amm_price, amm_sell, current_amm_price, derive_b, eip1559_sell,
    eip1559_update_price, EIP1559_PRICE_FLOOR,
};

use crate::config::SellingMechanism;
use crate::error::Result;
use crate::market::Market;
use crate::model::{TicketState, TradeRecord};

/// Sells the slot-0 batch: sequential single-ticket auctions for FPA/SPA,
/// round-robin at the quoted price otherwise.
pub fn allocate_initial(market: &mut Market) -> Result<Vec<TradeRecord>> {
    match market.config.selling_mechanism {
        SellingMechanism::Fpa | SellingMechanism::Spa => auction_inventory(market, false),
        SellingMechanism::Eip1559 => allocate_quoted_initial(market, false),
        SellingMechanism::Amm => allocate_quoted_initial(market, true),
    }
}

/// Mints enough tickets that the supply not spent on the current slot is
/// back at `max_tickets`.
pub fn refill_fixed_supply(market: &mut Market) {
    let slot = market.state.slot;
    let live = market
        .tickets
        .live()
        .filter(|t| !(t.state == TicketState::Assigned && t.assigned_slot == Some(slot)))
        .count() as u64;
    for _ in live..market.config.max_tickets {
        market.mint_ticket(false);
    }
}

/// The primary-sale sub-step of a slot.
pub fn primary_sale(market: &mut Market) -> Result<Vec<TradeRecord>> {
    match market.config.selling_mechanism {
        SellingMechanism::Fpa | SellingMechanism::Spa => {
            refill_fixed_supply(market);
            let jit = market.config.assign_after_sale;
            auction_inventory(market, jit)
        }
        SellingMechanism::Eip1559 => eip1559_sell(market),
        SellingMechanism::Amm => amm_sell(market),
    }
}

/// New tickets offered by flexible-supply mechanisms at the start of a slot.
pub fn issue_flexible_supply(market: &mut Market) {
    let level = match market.config.selling_mechanism {
        SellingMechanism::Eip1559 => market.config.eip1559_max_tickets as usize,
        SellingMechanism::Amm => market.holders.len(),
        _ => return,
    };
    while market.tickets.inventory_len() < level {
        market.mint_ticket(false);
    }
}
