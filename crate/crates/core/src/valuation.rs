//! Closed-form ticket pricing and sizing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slots in a year of 12-second slots.
pub const SLOTS_PER_YEAR: u64 = 2_628_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerpetualParams {
    /// Expected reward per slot.
    pub mu_r: f64,
    /// Carry cost per period.
    pub c: f64,
    /// Per-slot discount rate.
    pub d: f64,
    /// Tickets in circulation.
    pub n: u64,
}

/// Value of an unallocated, non-expiring ticket: `(mu_r - c) / (d·n + 1)`.
/// Negative when carrying costs exceed the expected reward.
pub fn perpetual_ticket_value(p: PerpetualParams) -> Result<f64> {
    let denom = p.d * p.n as f64 + 1.0;
    if !(denom > 0.0) {
        return Err(Error::parameter("d", format!("d·n + 1 must be positive, got {denom}")));
    }
    Ok((p.mu_r - p.c) / denom)
}

/// Compound-equivalent per-slot rate of an annual rate.
pub fn slot_discount_rate(annual_rate: f64, slots_per_year: u64) -> Result<f64> {
    if !(annual_rate > -1.0) {
        return Err(Error::parameter("annual_rate", format!("must exceed -1, got {annual_rate}")));
    }
    if slots_per_year == 0 {
        return Err(Error::parameter("slots_per_year", "must be at least 1"));
    }
    Ok((annual_rate.ln_1p() / slots_per_year as f64).exp_m1())
}

/// Smallest ticket count at which all tickets together capture at least
/// `1 − p_var` of the perpetual reward stream: `ceil((1 − p) / (d·p))`.
pub fn min_tickets_for_capture(d: f64, p_var: f64) -> Result<u64> {
    if !(p_var > 0.0 && p_var < 1.0) {
        return Err(Error::parameter("p_var", format!("must lie in (0, 1), got {p_var}")));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::parameter("d", format!("must be positive, got {d}")));
    }
    Ok(((1.0 - p_var) / (d * p_var)).ceil() as u64)
}

/// Present value of every future reward, `mu_r / d`.
pub fn npv_all_rewards(mu_r: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::parameter("d", "a zero discount rate makes the reward stream infinitely valuable"));
    }
    Ok(mu_r / d)
}

/// Probability mass held by already allocated tickets, `min(1, lookahead / n)`.
pub fn allocated_probability_share(lookahead_slots: u64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::parameter("n", "must be at least 1"));
    }
    Ok((lookahead_slots as f64 / n as f64).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(mu_r: f64, c: f64, d: f64, n: u64) -> PerpetualParams {
        PerpetualParams { mu_r, c, d, n }
    }

    #[test]
    fn perpetual_examples() {
        assert_eq!(perpetual_ticket_value(params(0.05, 0.0, 0.0, 77)).unwrap(), 0.05);
        assert_eq!(perpetual_ticket_value(params(0.05, 0.05, 1e-3, 5)).unwrap(), 0.0);
        let v = perpetual_ticket_value(params(0.05, 0.0, 2.03732e-8, 1_000_000)).unwrap();
        assert!((v - 0.05 / 1.0203732).abs() < 1e-15);
        assert!((v - 0.049002).abs() < 1e-6);
        assert!(perpetual_ticket_value(params(0.05, 0.1, 0.0, 1)).unwrap() < 0.0);
    }

    #[test]
    fn discount_rate_examples() {
        assert_eq!(slot_discount_rate(0.0, SLOTS_PER_YEAR).unwrap(), 0.0);
        let d = slot_discount_rate(0.055, SLOTS_PER_YEAR).unwrap();
        let oracle = 1.055f64.powf(1.0 / SLOTS_PER_YEAR as f64) - 1.0;
        assert!((d - oracle).abs() / oracle < 1e-6);
        let d20 = slot_discount_rate(0.20, SLOTS_PER_YEAR).unwrap();
        let oracle20 = 1.2f64.powf(1.0 / SLOTS_PER_YEAR as f64) - 1.0;
        assert!((d20 - oracle20).abs() / oracle20 < 1e-6);
        assert!(slot_discount_rate(-1.0, SLOTS_PER_YEAR).is_err());
    }

    #[test]
    fn min_tickets_rejects_bad_p() {
        assert!(min_tickets_for_capture(1e-8, 0.0).is_err());
        assert!(min_tickets_for_capture(1e-8, 1.0).is_err());
        assert!(min_tickets_for_capture(0.0, 0.5).is_err());
    }

    #[test]
    fn npv_examples() {
        assert_eq!(npv_all_rewards(0.0, 1e-8).unwrap(), 0.0);
        assert!(npv_all_rewards(175.0, 0.0).is_err());
        let d = slot_discount_rate(0.20, SLOTS_PER_YEAR).unwrap();
        assert!((npv_all_rewards(175.0, d).unwrap() * d - 175.0).abs() < 1e-6);
    }

    #[test]
    fn allocated_share_examples() {
        assert_eq!(allocated_probability_share(32, 1024).unwrap(), 0.03125);
        assert_eq!(allocated_probability_share(0, 9).unwrap(), 0.0);
        assert_eq!(allocated_probability_share(2048, 1024).unwrap(), 1.0);
        assert!(allocated_probability_share(1, 0).is_err());
    }

    #[test]
    fn large_supply_captures_the_stream() {
        let d = slot_discount_rate(0.055, SLOTS_PER_YEAR).unwrap();
        let mu = 175.0;
        let npv = npv_all_rewards(mu, d).unwrap();
        for p in [0.05, 0.5, 0.9] {
            let n = min_tickets_for_capture(d, p).unwrap();
            let total = n as f64 * perpetual_ticket_value(params(mu, 0.0, d, n)).unwrap();
            assert!((npv - total).abs() / npv <= p);
            // one ticket fewer misses the bound
            let fewer = (n - 1) as f64 * perpetual_ticket_value(params(mu, 0.0, d, n - 1)).unwrap();
            assert!((npv - fewer).abs() / npv > p);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn monotone(mu in 0.001f64..10.0, d in 1e-9f64..1e-3, n in 1u64..1_000_000) {
                let v = perpetual_ticket_value(params(mu, 0.0, d, n)).unwrap();
                prop_assert!(perpetual_ticket_value(params(mu, 0.0, d, n + 1)).unwrap() < v);
                prop_assert!(perpetual_ticket_value(params(mu, 0.0, d * 1.5, n)).unwrap() < v);
                prop_assert!(perpetual_ticket_value(params(mu * 1.5, 0.0, d, n)).unwrap() > v);
            }
        }
    }
}
