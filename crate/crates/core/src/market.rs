//! The mutable world of one run and the bookkeeping primitives every
//! mechanism goes through.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::{self, TicketContext};
use crate::config::SimulationConfig;
use crate::environment;
use crate::error::{Error, Result};
use crate::lifecycle;
use crate::mechanisms;
use crate::model::{
    HolderId, MarketState, Owner, SlotEnvironment, Ticket, TicketBook, TicketHolder, TicketId, TicketState,
    TradeRecord, Venue,
};

/// Stream id of the environment draws within a run's ChaCha seed.
const ENV_STREAM: u64 = 1;

/// Everything a run mutates. Confined to one thread; `Send` so batches can
/// fan runs out.
#[derive(Clone, Debug)]
pub struct Market {
    pub config: SimulationConfig,
    pub state: MarketState,
    pub tickets: TicketBook,
    pub holders: Vec<TicketHolder>,
    /// Environment of the slot being processed.
    pub env: Option<SlotEnvironment>,
    pub expected_vola: f64,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) env_rng: ChaCha8Rng,
}

/// Builds the initial market and sells the slot-0 batch through the
/// configured mechanism.
pub fn new_market(config: SimulationConfig, seed: u64) -> Result<Market> {
    let mut market = init_market(config, seed)?;
    mechanisms::allocate_initial(&mut market)?;
    Ok(market)
}

/// Seeds holders and mints the first ticket batch at slot 0, all of it
/// still unsold.
///
/// Holder seeding, the initial allocation, lotteries and purchase ordering
/// consume one ChaCha8 stream; MEV and volatility come from a second stream
/// of the same seed so every mechanism sees the same environment.
pub fn init_market(config: SimulationConfig, seed: u64) -> Result<Market> {
    config.validate()?;
    let rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env_rng = rng.clone();
    env_rng.set_stream(ENV_STREAM);

    let mut market = Market {
        expected_vola: environment::expected_volatility(config.price_vola),
        config,
        state: MarketState::new(),
        tickets: TicketBook::new(),
        holders: Vec::new(),
        env: None,
        rng,
        env_rng,
    };
    market.holders = agents::seed_holders(market.config.number_of_ticket_holders, &mut market.rng)?;
    if market.config.selling_mechanism == crate::config::SellingMechanism::Eip1559 {
        market.state.quoted_price = Some(market.config.initial_ticket_price);
    }
    lifecycle::issue_initial(&mut market);
    Ok(market)
}

impl Market {
    pub fn holder(&self, id: HolderId) -> &TicketHolder {
        &self.holders[id.index()]
    }

    pub(crate) fn holder_mut(&mut self, id: HolderId) -> &mut TicketHolder {
        &mut self.holders[id.index()]
    }

    pub fn ticket(&self, id: TicketId) -> &Ticket {
        self.tickets.get(id).expect("ticket id in range")
    }

    pub(crate) fn ticket_mut(&mut self, id: TicketId) -> &mut Ticket {
        self.tickets.get_mut(id).expect("ticket id in range")
    }

    pub(crate) fn invariant(&self, detail: impl Into<String>) -> Error {
        Error::Invariant {
            slot: self.state.slot,
            detail: detail.into(),
        }
    }

    /// Mints a ticket into protocol inventory. Expiring tickets start to
    /// age as soon as they are on the market.
    pub(crate) fn mint_ticket(&mut self, front_of_queue: bool) -> TicketId {
        let id = self.state.current_ticket_id;
        self.state.current_ticket_id += 1;
        let slot = self.state.slot;
        let expiry = self.config.expiry_period.map(|p| slot + p);
        self.tickets.mint(Ticket::new(id, slot, expiry), front_of_queue)
    }

    /// Sells an inventory ticket to `buyer` and credits the protocol.
    pub(crate) fn sell_primary(&mut self, ticket_id: TicketId, buyer: HolderId, price: f64) -> Result<TradeRecord> {
        let t = self.ticket(ticket_id);
        if t.state != TicketState::Unsold {
            return Err(self.invariant(format!("primary sale of ticket {ticket_id} in state {:?}", t.state)));
        }
        if price < 0.0 || !price.is_finite() {
            return Err(self.invariant(format!("primary sale at invalid price {price}")));
        }
        self.tickets.take_from_inventory(ticket_id);
        let t = self.ticket_mut(ticket_id);
        t.owner = Owner::Holder(buyer);
        t.state = TicketState::Held;
        t.purchase_price = price;
        let h = self.holder_mut(buyer);
        h.available_funds -= price;
        h.accumulated_costs += price;
        h.tickets.insert(ticket_id);
        self.state.total_mev_captured += price;
        self.state.outstanding += 1;
        let rec = TradeRecord {
            slot: self.state.slot,
            venue: Venue::Primary,
            ticket_id,
            buyer_id: Some(buyer),
            seller_id: None,
            price,
            mev_available: None,
            mev_extracted: None,
        };
        self.state.trade_log.push(rec.clone());
        Ok(rec)
    }

    /// Holder-to-holder transfer; the seller keeps the proceeds.
    pub(crate) fn transfer(&mut self, ticket_id: TicketId, seller: HolderId, buyer: HolderId, price: f64) -> Result<TradeRecord> {
        let t = self.ticket(ticket_id);
        if t.owner != Owner::Holder(seller) || !t.state.is_outstanding() {
            return Err(self.invariant(format!("ticket {ticket_id} is not transferable by holder {seller}")));
        }
        let t = self.ticket_mut(ticket_id);
        t.owner = Owner::Holder(buyer);
        t.purchase_price = price;
        let s = self.holder_mut(seller);
        s.tickets.remove(&ticket_id);
        s.available_funds += price;
        s.accumulated_earnings += price;
        let b = self.holder_mut(buyer);
        b.tickets.insert(ticket_id);
        b.available_funds -= price;
        b.accumulated_costs += price;
        let rec = TradeRecord {
            slot: self.state.slot,
            venue: Venue::Secondary,
            ticket_id,
            buyer_id: Some(buyer),
            seller_id: Some(seller),
            price,
            mev_available: None,
            mev_extracted: None,
        };
        self.state.trade_log.push(rec.clone());
        Ok(rec)
    }

    /// Supply parameters `(X, Z)` of the expiry discount: slots assigned per
    /// epoch and tickets in circulation. `X` is clamped to `Z` when the supply
    /// is smaller than an epoch.
    pub fn assignment_window(&self) -> (u64, u64) {
        let z = self.config.max_tickets.max(1);
        (self.config.slots_per_epoch.min(z), z)
    }

    /// Valuation context of `ticket` for `holder` at the current slot.
    ///
    /// `proposes_now` marks a ticket that will propose the current slot
    /// (already assigned to it, or sold just in time): no expiry risk, and the
    /// slot's volatility is known.
    pub fn ticket_context(&self, holder: &TicketHolder, ticket: &Ticket, proposes_now: bool) -> TicketContext {
        let slot = self.state.slot;
        let proposes_now = proposes_now || ticket.assigned_slot == Some(slot);
        let expiry_discount = if proposes_now || ticket.assigned_slot.is_some() {
            1.0
        } else {
            match ticket.remaining_validity(slot) {
                Some(s) => {
                    let (x, z) = self.assignment_window();
                    lifecycle::expected_value_factor(x, z, s).unwrap_or(0.0)
                }
                None => 1.0,
            }
        };
        let volatility_adjustment = match (proposes_now, self.env) {
            (true, Some(env)) => {
                agents::volatility_adjustment(env.volatility, self.expected_vola, holder.vola_spec_factor)
            }
            _ => 1.0,
        };
        TicketContext {
            expiry_discount,
            volatility_adjustment,
        }
    }

    /// Holders still able to pay for anything.
    pub fn active_bidders(&self) -> usize {
        self.holders.iter().filter(|h| h.available_funds > 0.0).count()
    }

    pub fn count_state(&self, state: TicketState) -> usize {
        self.tickets.live().filter(|t| t.state == state).count()
    }

    /// Full-scan consistency check of the ledgers.
    pub fn check_consistency(&self) -> Result<()> {
        let outstanding = self.tickets.live().filter(|t| t.state.is_outstanding()).count() as u64;
        if outstanding != self.state.outstanding {
            return Err(self.invariant(format!(
                "outstanding counter {} disagrees with scan {}",
                self.state.outstanding, outstanding
            )));
        }
        for h in &self.holders {
            if h.available_funds < -1e-9 {
                return Err(self.invariant(format!("holder {} has negative funds {}", h.id, h.available_funds)));
            }
            for &tid in &h.tickets {
                let t = self.ticket(tid);
                if t.owner != Owner::Holder(h.id) || !t.state.is_outstanding() {
                    return Err(self.invariant(format!("holder {} lists ticket {tid} it does not hold", h.id)));
                }
            }
        }
        let held: usize = self.holders.iter().map(|h| h.tickets.len()).sum();
        if held as u64 != outstanding {
            return Err(self.invariant(format!("{held} tickets in holder books, {outstanding} outstanding")));
        }
        Ok(())
    }
}
