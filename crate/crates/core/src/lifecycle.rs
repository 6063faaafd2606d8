//! Ticket issuance, lottery assignment, redemption, expiry and refunds.

use rand::Rng;

use crate::agents;
use crate::error::{Error, Result};
use crate::market::Market;
use crate::model::{HolderId, Owner, SlotEnvironment, TicketId, TicketState, TradeRecord, Venue};

/// Mints the initial batch at slot 0. With expiry enabled, ticket `i`
/// expires at slot `i + expiry_period`.
pub fn issue_initial(market: &mut Market) -> Vec<TicketId> {
    (0..market.config.max_tickets)
        .map(|_| {
            let id = market.mint_ticket(false);
            if let Some(period) = market.config.expiry_period {
                market.ticket_mut(id).expiry_slot = Some(id + period);
            }
            id
        })
        .collect()
}

/// Probability that an unassigned ticket is drawn before it expires:
/// `1 - (1 - X/Z)^(S/X)`, where `X` slots are assigned per window, `Z`
/// tickets circulate and `S` slots of validity remain.
pub fn expected_value_factor(x: u64, z: u64, s: u64) -> Result<f64> {
    if x == 0 {
        return Err(Error::parameter("x", "at least one slot per assignment window"));
    }
    if z < x {
        return Err(Error::parameter("z", format!("tickets in circulation ({z}) fewer than window ({x})")));
    }
    let (x, z, s) = (x as f64, z as f64, s as f64);
    Ok(1.0 - (1.0 - x / z).powf(s / x))
}

/// Draws one held, unassigned ticket uniformly and assigns it to `target_slot`.
/// Returns `None` when no ticket is eligible.
pub fn lottery_assign(market: &mut Market, target_slot: u64) -> Option<TicketId> {
    let eligible: Vec<TicketId> = market
        .tickets
        .live()
        .filter(|t| t.state == TicketState::Held)
        .map(|t| t.id)
        .collect();
    if eligible.is_empty() {
        return None;
    }
    let pick = eligible[market.rng.random_range(0..eligible.len())];
    let epoch = target_slot / market.config.slots_per_epoch;
    let t = market.ticket_mut(pick);
    t.state = TicketState::Assigned;
    t.assigned_slot = Some(target_slot);
    t.assigned_epoch = Some(epoch);
    Some(pick)
}

/// The ticket assigned to propose `slot`, if any.
pub fn assigned_to(market: &Market, slot: u64) -> Option<TicketId> {
    market
        .tickets
        .live()
        .find(|t| t.state == TicketState::Assigned && t.assigned_slot == Some(slot))
        .map(|t| t.id)
}

/// Redeems the ticket assigned to the current slot: the owner extracts its
/// share of the slot's MEV, scaled by its volatility adjustment.
pub fn redeem(market: &mut Market, ticket_id: TicketId, env: &SlotEnvironment) -> Result<TradeRecord> {
    let slot = market.state.slot;
    let t = market.ticket(ticket_id);
    if t.state != TicketState::Assigned || t.assigned_slot != Some(slot) {
        return Err(market.invariant(format!(
            "ticket {ticket_id} redeemed in state {:?} assigned to {:?}",
            t.state, t.assigned_slot
        )));
    }
    let Owner::Holder(owner) = t.owner else {
        return Err(market.invariant(format!("assigned ticket {ticket_id} has no holder")));
    };
    let holder = market.holder(owner);
    let adj = agents::volatility_adjustment(env.volatility, market.expected_vola, holder.vola_spec_factor);
    let extracted = env.available_mev * holder.mev_capture_rate * adj;

    let epoch = slot / market.config.slots_per_epoch;
    let t = market.ticket_mut(ticket_id);
    t.state = TicketState::Redeemed;
    t.redeemed_slot = Some(slot);
    t.redeemed_epoch = Some(epoch);
    market.tickets.retire(ticket_id);

    let h = market.holder_mut(owner);
    h.tickets.remove(&ticket_id);
    h.available_funds += extracted;
    h.accumulated_earnings += extracted;

    market.state.outstanding -= 1;
    market.state.total_mev_available += env.available_mev;
    market.state.excess_tickets_held = market.state.excess_tickets_held.saturating_sub(1);

    let rec = TradeRecord {
        slot,
        venue: Venue::Redemption,
        ticket_id,
        buyer_id: None,
        seller_id: Some(owner),
        price: extracted,
        mev_available: Some(env.available_mev),
        mev_extracted: Some(extracted),
    };
    market.state.trade_log.push(rec.clone());
    Ok(rec)
}

/// Expires every unsold or held ticket whose expiry slot has passed.
/// Tickets already assigned a slot never expire.
pub fn expire_tickets(market: &mut Market) -> u64 {
    if market.config.expiry_period.is_none() {
        return 0;
    }
    let slot = market.state.slot;
    let due: Vec<TicketId> = market
        .tickets
        .live()
        .filter(|t| matches!(t.state, TicketState::Unsold | TicketState::Held))
        .filter(|t| t.expiry_slot.is_some_and(|e| e < slot))
        .map(|t| t.id)
        .collect();
    for &id in &due {
        let t = market.ticket_mut(id);
        let was_held = t.state == TicketState::Held;
        t.state = TicketState::Expired;
        let owner = t.owner.holder();
        market.tickets.retire(id);
        if was_held {
            market.state.outstanding -= 1;
            market.state.excess_tickets_held = market.state.excess_tickets_held.saturating_sub(1);
            if let Some(owner) = owner {
                market.holder_mut(owner).tickets.remove(&id);
            }
        }
    }
    due.len() as u64
}

/// Returns an unallocated ticket to the protocol for `purchase_price × (1 − factor)`.
/// The refunded id is retired and a fresh ticket takes its place at the
/// front of the protocol inventory.
pub fn refund(market: &mut Market, holder: HolderId, ticket_id: TicketId) -> Result<TradeRecord> {
    let Some(factor) = market.config.reimbursement_factor else {
        return Err(Error::config("reimbursement_factor", "refunds are disabled"));
    };
    let t = market.ticket(ticket_id);
    if t.owner != Owner::Holder(holder) {
        return Err(Error::parameter("ticket_id", format!("ticket {ticket_id} is not held by {holder}")));
    }
    if t.state != TicketState::Held {
        return Err(Error::parameter(
            "ticket_id",
            format!("only unallocated tickets are refundable; ticket {ticket_id} is {:?}", t.state),
        ));
    }
    let amount = t.purchase_price * (1.0 - factor);

    market.ticket_mut(ticket_id).state = TicketState::Refunded;
    market.tickets.retire(ticket_id);
    let h = market.holder_mut(holder);
    h.tickets.remove(&ticket_id);
    h.available_funds += amount;
    h.accumulated_costs -= amount;
    market.state.outstanding -= 1;
    market.state.total_mev_captured -= amount;
    market.state.excess_tickets_held = market.state.excess_tickets_held.saturating_sub(1);
    market.mint_ticket(true);

    let rec = TradeRecord {
        slot: market.state.slot,
        venue: Venue::Refund,
        ticket_id,
        buyer_id: None,
        seller_id: Some(holder),
        price: amount,
        mev_available: None,
        mev_extracted: None,
    };
    market.state.trade_log.push(rec.clone());
    Ok(rec)
}

/// Each holder refunds at most one unallocated ticket per slot, and only
/// when the refund exceeds what the ticket is worth to it.
pub fn refund_round(market: &mut Market) -> Result<Vec<TradeRecord>> {
    let Some(factor) = market.config.reimbursement_factor else {
        return Ok(Vec::new());
    };
    let scale = market.config.mev_scale;
    let mut out = Vec::new();
    for idx in 0..market.holders.len() {
        let holder = &market.holders[idx];
        let candidate = holder
            .tickets
            .iter()
            .map(|&id| market.ticket(id))
            .filter(|t| t.state == TicketState::Held)
            .map(|t| {
                let value = agents::intrinsic_valuation(holder, scale, market.ticket_context(holder, t, false));
                (t.id, t.purchase_price * (1.0 - factor) - value)
            })
            .filter(|&(_, gain)| gain > 0.0)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        if let Some((tid, _)) = candidate {
            let id = holder.id;
            out.push(refund(market, id, tid)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{BiddingStrategy, SellingMechanism, SimulationConfig};
    use crate::market::new_market;
    use crate::model::TicketState;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env(slot: u64, mev: f64, vola: f64) -> SlotEnvironment {
        SlotEnvironment {
            slot,
            available_mev: mev,
            volatility: vola,
        }
    }

    #[test]
    fn ev_factor_examples() {
        assert_eq!(expected_value_factor(32, 1024, 0).unwrap(), 0.0);
        assert_eq!(expected_value_factor(32, 32, 64).unwrap(), 1.0);
        assert_eq!(expected_value_factor(32, 32, 32).unwrap(), 1.0);
        let v = expected_value_factor(32, 1024, 1024).unwrap();
        assert!((v - (1.0 - (31.0f64 / 32.0).powi(32))).abs() < 1e-15);
        assert!((v - 0.638).abs() < 5e-4, "{v}");
        assert!(expected_value_factor(32, 16, 10).is_err());
    }

    #[test]
    fn ev_factor_decays_each_slot() {
        let mut prev = expected_value_factor(32, 1024, 100).unwrap();
        for s in (0..100).rev() {
            let v = expected_value_factor(32, 1024, s).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    fn config() -> SimulationConfig {
        SimulationConfig {
            max_tickets: 32,
            expiry_period: Some(100),
            ..Default::default()
        }
    }

    #[test]
    fn initial_expiry_is_linear_in_id() {
        let m = new_market(config(), 1).unwrap();
        assert_eq!(m.ticket(5).expiry_slot, Some(105));
        let m = new_market(SimulationConfig { expiry_period: None, ..config() }, 1).unwrap();
        assert!(m.tickets.iter().all(|t| t.expiry_slot.is_none()));
    }

    #[test]
    fn single_held_ticket_is_drawn() {
        let cfg = SimulationConfig {
            selling_mechanism: SellingMechanism::Spa,
            agent_bidding_strategy: BiddingStrategy::Truthful,
            max_tickets: 1,
            ..Default::default()
        };
        let mut m = new_market(cfg, 4).unwrap();
        assert_eq!(m.count_state(TicketState::Held), 1);
        assert_eq!(lottery_assign(&mut m, 1), Some(0));
        assert_eq!(lottery_assign(&mut m, 2), None);
    }

    #[test]
    fn lottery_is_uniform() {
        // chi-square goodness of fit over k equally likely tickets
        let k = 8usize;
        let trials = 16_000usize;
        let cfg = SimulationConfig {
            max_tickets: k as u64,
            ..Default::default()
        };
        let base = new_market(cfg, 77).unwrap();
        let mut counts = vec![0usize; k];
        let mut m = base.clone();
        m.rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..trials {
            let id = lottery_assign(&mut m, 1).unwrap();
            counts[id as usize] += 1;
            let t = m.ticket_mut(id);
            t.state = TicketState::Held;
            t.assigned_slot = None;
            t.assigned_epoch = None;
        }
        let expected = trials as f64 / k as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // chi-square critical value, 7 degrees of freedom, alpha = 0.01
        assert!(chi2 < 18.475, "chi2 = {chi2}, counts = {counts:?}");
        let p = 1.0 / k as f64;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - expected).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn expired_tickets_leave_no_proposer() {
        let mut m = new_market(SimulationConfig { expiry_period: Some(1), ..config() }, 2).unwrap();
        m.state.slot = 1_000;
        let n = expire_tickets(&mut m);
        assert_eq!(n, 32);
        assert_eq!(m.state.outstanding, 0);
        assert_eq!(lottery_assign(&mut m, 1_000), None);
        m.check_consistency().unwrap();
    }

    #[test]
    fn expiry_boundary() {
        let mut m = new_market(config(), 2).unwrap();
        // ticket 0 expires at slot 100
        m.state.slot = 100;
        assert_eq!(expire_tickets(&mut m), 0);
        m.state.slot = 101;
        assert_eq!(expire_tickets(&mut m), 1);
        assert_eq!(m.ticket(0).state, TicketState::Expired);
    }

    #[test]
    fn assigned_ticket_survives_expiry() {
        let mut m = new_market(config(), 2).unwrap();
        let id = lottery_assign(&mut m, 100).unwrap();
        m.ticket_mut(id).expiry_slot = Some(50);
        m.state.slot = 100;
        expire_tickets(&mut m);
        assert_eq!(m.ticket(id).state, TicketState::Assigned);
        let rec = redeem(&mut m, id, &env(100, 0.1, 1.0)).unwrap();
        assert_eq!(rec.venue, Venue::Redemption);
    }

    #[test]
    fn no_expiry_no_expirations() {
        let mut m = new_market(SimulationConfig { expiry_period: None, ..config() }, 2).unwrap();
        m.state.slot = 1_000_000;
        assert_eq!(expire_tickets(&mut m), 0);
    }

    fn redeem_with(capture: f64, spec: f64, mev: f64, vola: f64) -> f64 {
        let cfg = SimulationConfig {
            price_vola: Some((0.0, 0.0)),
            ..config()
        };
        let mut m = new_market(cfg, 8).unwrap();
        m.state.slot = 1;
        let id = lottery_assign(&mut m, 1).unwrap();
        let owner = m.ticket(id).owner.holder().unwrap();
        m.holder_mut(owner).mev_capture_rate = capture;
        m.holder_mut(owner).vola_spec_factor = spec;
        let before = m.holder(owner).accumulated_earnings;
        let rec = redeem(&mut m, id, &env(1, mev, vola)).unwrap();
        assert_eq!(m.ticket(id).state, TicketState::Redeemed);
        assert_eq!(m.holder(owner).accumulated_earnings - before, rec.price);
        m.check_consistency().unwrap();
        rec.mev_extracted.unwrap()
    }

    #[test]
    fn redemption_examples() {
        // expected volatility is exactly 1 with sigma = 0
        assert!((redeem_with(0.9, 1.0, 0.1, 1.0) - 0.09).abs() < 1e-12);
        assert_eq!(redeem_with(0.9, 1.0, 0.0, 1.0), 0.0);
        assert!((redeem_with(0.8, 1.0, 0.1, 1.5) - 0.12).abs() < 1e-12);
    }

    #[test]
    fn redeeming_unassigned_aborts() {
        let mut m = new_market(config(), 8).unwrap();
        m.state.slot = 1;
        let err = redeem(&mut m, 0, &env(1, 0.1, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Invariant { .. }));
    }

    fn refundable(factor: f64) -> Market {
        let cfg = SimulationConfig {
            selling_mechanism: SellingMechanism::Amm,
            agent_bidding_strategy: BiddingStrategy::QuotedThreshold,
            reimbursement_factor: Some(factor),
            initial_ticket_price: 0.001,
            ..Default::default()
        };
        new_market(cfg, 5).unwrap()
    }

    fn held_ticket(m: &Market) -> (HolderId, TicketId) {
        let t = m.tickets.live().find(|t| t.state == TicketState::Held).unwrap();
        (t.owner.holder().unwrap(), t.id)
    }

    #[test]
    fn refund_amounts() {
        for (factor, expected) in [(0.2, 0.8), (1.0, 0.0)] {
            let mut m = refundable(factor);
            let (h, t) = held_ticket(&m);
            m.ticket_mut(t).purchase_price = 1.0;
            m.state.total_mev_captured += 1.0 - 0.001;
            let revenue = m.state.total_mev_captured;
            let inventory = m.tickets.inventory_len();
            let rec = refund(&mut m, h, t).unwrap();
            assert!((rec.price - expected).abs() < 1e-12);
            assert!((revenue - m.state.total_mev_captured - expected).abs() < 1e-12);
            assert_eq!(m.ticket(t).state, TicketState::Refunded);
            assert_eq!(m.tickets.inventory_len(), inventory + 1);
            // the replacement is offered first
            let front = m.tickets.inventory().next().unwrap();
            assert_eq!(front, m.state.current_ticket_id - 1);
        }
    }

    #[test]
    fn assigned_ticket_not_refundable() {
        let mut m = refundable(0.2);
        let (h, t) = held_ticket(&m);
        m.ticket_mut(t).state = TicketState::Assigned;
        m.ticket_mut(t).assigned_slot = Some(3);
        assert!(refund(&mut m, h, t).is_err());
    }
}
