//! Shared domain types: tickets, holders, per-slot environment, global market
//! state and the trade ledger.
//!
//! Currency is an abstract, real-valued ETH amount throughout.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Monotone ticket identifier, starting at 0.
pub type TicketId = u64;

/// Builder identifier. Ids are 1-indexed so the tier boundaries of the
/// seeding rule (`id <= 0.2 n`, `id <= 0.6 n`) apply verbatim.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HolderId(pub u32);

impl HolderId {
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for HolderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Owner {
    Protocol,
    Holder(HolderId),
}

impl Owner {
    pub fn holder(self) -> Option<HolderId> {
        match self {
            Owner::Protocol => None,
            Owner::Holder(id) => Some(id),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TicketState {
    Unsold,
    Held,
    Assigned,
    Redeemed,
    Expired,
    Refunded,
}

impl TicketState {
    pub fn is_terminal(self) -> bool {
        matches!(self, TicketState::Redeemed | TicketState::Expired | TicketState::Refunded)
    }

    /// Sold and not yet consumed.
    pub fn is_outstanding(self) -> bool {
        matches!(self, TicketState::Held | TicketState::Assigned)
    }
}

/// One execution right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ticket {
    pub id: TicketId,
    pub owner: Owner,
    pub state: TicketState,
    pub issued_slot: u64,
    pub expiry_slot: Option<u64>,
    pub assigned_slot: Option<u64>,
    pub assigned_epoch: Option<u64>,
    /// Cost basis of the current owner.
    pub purchase_price: f64,
    pub redeemed_slot: Option<u64>,
    pub redeemed_epoch: Option<u64>,
}

impl Ticket {
    pub fn new(id: TicketId, issued_slot: u64, expiry_slot: Option<u64>) -> Self {
        Ticket {
            id,
            owner: Owner::Protocol,
            state: TicketState::Unsold,
            issued_slot,
            expiry_slot,
            assigned_slot: None,
            assigned_epoch: None,
            purchase_price: 0.0,
            redeemed_slot: None,
            redeemed_epoch: None,
        }
    }

    /// Slots of validity left at `slot`; `None` for non-expiring tickets.
    pub fn remaining_validity(&self, slot: u64) -> Option<u64> {
        self.expiry_slot.map(|e| e.saturating_sub(slot))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Top,
    Middle,
    Tail,
}

/// A builder agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TicketHolder {
    pub id: HolderId,
    pub tier: Tier,
    pub available_funds: f64,
    pub mev_capture_rate: f64,
    /// Required margin, applied as a `(1 - a)` haircut on valuations.
    pub aggressiveness: f64,
    pub vola_spec_factor: f64,
    pub tickets: BTreeSet<TicketId>,
    pub accumulated_earnings: f64,
    pub accumulated_costs: f64,
}

impl TicketHolder {
    pub fn can_afford(&self, price: f64) -> bool {
        price <= self.available_funds
    }
}

/// Exogenous state of one slot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotEnvironment {
    pub slot: u64,
    pub available_mev: f64,
    pub volatility: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Venue {
    Primary,
    Secondary,
    Refund,
    Redemption,
}

impl Venue {
    pub fn as_str(self) -> &'static str {
        match self {
            Venue::Primary => "primary",
            Venue::Secondary => "secondary",
            Venue::Refund => "refund",
            Venue::Redemption => "redemption",
        }
    }

    pub fn parse(s: &str) -> Option<Venue> {
        match s {
            "primary" => Some(Venue::Primary),
            "secondary" => Some(Venue::Secondary),
            "refund" => Some(Venue::Refund),
            "redemption" => Some(Venue::Redemption),
            _ => None,
        }
    }
}

/// One ledger entry. `None` on either side means the protocol.
///
/// | venue      | buyer   | seller  | price                    |
/// |------------|---------|---------|--------------------------|
/// | primary    | holder  | none    | paid to the protocol     |
/// | secondary  | holder  | holder  | paid to the seller       |
/// | refund     | none    | holder  | paid back to the holder  |
/// | redemption | none    | holder  | MEV extracted by holder  |
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub slot: u64,
    pub venue: Venue,
    pub ticket_id: TicketId,
    pub buyer_id: Option<HolderId>,
    pub seller_id: Option<HolderId>,
    pub price: f64,
    pub mev_available: Option<f64>,
    pub mev_extracted: Option<f64>,
}

/// Global mutable state of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    pub slot: u64,
    pub epoch: u64,
    pub current_ticket_id: TicketId,
    pub outstanding: u64,
    pub quoted_price: Option<f64>,
    pub excess_tickets_held: u64,
    /// Net protocol revenue: primary sales minus refunds.
    pub total_mev_captured: f64,
    pub total_mev_available: f64,
    pub unfilled_slots: u64,
    pub trade_log: Vec<TradeRecord>,
}

impl MarketState {
    pub fn new() -> Self {
        MarketState {
            slot: 0,
            epoch: 0,
            current_ticket_id: 0,
            outstanding: 0,
            quoted_price: None,
            excess_tickets_held: 0,
            total_mev_captured: 0.0,
            total_mev_available: 0.0,
            unfilled_slots: 0,
            trade_log: Vec::new(),
        }
    }
}

impl Default for MarketState {
    fn default() -> Self {
        Self::new()
    }
}

/// All tickets ever minted, plus indices over the live ones.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TicketBook {
    tickets: Vec<Ticket>,
    live: BTreeSet<TicketId>,
    inventory: VecDeque<TicketId>,
}

impl TicketBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tickets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tickets.is_empty()
    }

    pub fn get(&self, id: TicketId) -> Option<&Ticket> {
        self.tickets.get(id as usize)
    }

    pub(crate) fn get_mut(&mut self, id: TicketId) -> Option<&mut Ticket> {
        self.tickets.get_mut(id as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Ticket> {
        self.tickets.iter()
    }

    /// Non-terminal tickets in id order.
    pub fn live(&self) -> impl Iterator<Item = &Ticket> + '_ {
        self.live.iter().map(move |&id| &self.tickets[id as usize])
    }

    /// Unsold protocol inventory in offer order.
    pub fn inventory(&self) -> impl Iterator<Item = TicketId> + '_ {
        self.inventory.iter().copied()
    }

    pub fn inventory_len(&self) -> usize {
        self.inventory.len()
    }

    pub(crate) fn mint(&mut self, ticket: Ticket, front: bool) -> TicketId {
        let id = ticket.id;
        debug_assert_eq!(id as usize, self.tickets.len());
        self.tickets.push(ticket);
        self.live.insert(id);
        if front {
            self.inventory.push_front(id);
        } else {
            self.inventory.push_back(id);
        }
        id
    }

    pub(crate) fn take_from_inventory(&mut self, id: TicketId) {
        self.inventory.retain(|&t| t != id);
    }

    pub(crate) fn retire(&mut self, id: TicketId) {
        self.live.remove(&id);
        self.inventory.retain(|&t| t != id);
    }
}
