//! Simulation parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SellingMechanism {
    #[serde(rename = "FPA")]
    Fpa,
    #[serde(rename = "SPA")]
    Spa,
    #[serde(rename = "EIP1559")]
    Eip1559,
    #[serde(rename = "AMM")]
    Amm,
}

impl SellingMechanism {
    pub fn is_auction(self) -> bool {
        matches!(self, SellingMechanism::Fpa | SellingMechanism::Spa)
    }

    /// Auction mechanisms keep a fixed ticket supply; quoted ones let it float.
    pub fn is_fixed_supply(self) -> bool {
        self.is_auction()
    }
}

/// How holders turn their information into a bid or a purchase decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiddingStrategy {
    /// Uniform draw in `[0.5, 1.5]` times the historical median MEV.
    UniformAroundMedian,
    /// Historical mean MEV less the holder's margin; ignores capture ability.
    NaiveHistorical,
    /// Full intrinsic valuation including the holder's capture rate.
    CaptureAware,
    /// Capture-aware valuation shaded by `(n - 1) / n`. FPA only.
    CompetitionAdjusted,
    /// Capture-aware valuation bid as-is. SPA only.
    Truthful,
    /// Buy whenever the quoted price is below the capture-aware valuation.
    QuotedThreshold,
}

/// Every parameter of a run. Field names follow the simulator's `sys_params`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub selling_mechanism: SellingMechanism,
    /// Fixed supply for auction mechanisms; size of the initial batch otherwise.
    pub max_tickets: u64,
    pub initial_ticket_price: f64,
    /// Mean of the exponential per-slot MEV.
    pub mev_scale: f64,
    pub slots_per_epoch: u64,
    pub number_of_ticket_holders: u32,
    pub secondary_market: bool,
    /// `(mu, sigma)` of the log-normal per-slot volatility; `None` disables it.
    pub price_vola: Option<(f64, f64)>,
    pub agent_bidding_strategy: BiddingStrategy,
    pub eip1559_max_tickets: u64,
    pub eip1559_adjust_factor: f64,
    /// Target outstanding count. Defaults to four tickets per holder.
    #[serde(default)]
    pub eip1559_target: Option<u64>,
    pub amm_adjust_factor: f64,
    /// Bonding-curve offset. Defaults to `derive_b(initial_ticket_price, 1)`.
    #[serde(default)]
    pub amm_b: Option<f64>,
    pub expiry_period: Option<u64>,
    /// Share of the purchase price withheld on refund. `Some` enables refunds.
    pub reimbursement_factor: Option<f64>,
    pub enhanced_lookahead: Option<u64>,
    /// Run the lottery after the primary sale so the ticket just sold proposes
    /// the current slot (just-in-time auctions).
    #[serde(default)]
    pub assign_after_sale: bool,
    #[serde(default)]
    pub spa_reserve: f64,
    pub timesteps: u64,
    pub runs: u32,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            selling_mechanism: SellingMechanism::Fpa,
            max_tickets: 32,
            initial_ticket_price: 0.05,
            mev_scale: 0.05,
            slots_per_epoch: 32,
            number_of_ticket_holders: 10,
            secondary_market: false,
            price_vola: Some((0.0, 0.2)),
            agent_bidding_strategy: BiddingStrategy::CaptureAware,
            eip1559_max_tickets: 4,
            eip1559_adjust_factor: 8.0,
            eip1559_target: None,
            amm_adjust_factor: 6.0,
            amm_b: None,
            expiry_period: None,
            reimbursement_factor: None,
            enhanced_lookahead: None,
            assign_after_sale: false,
            spa_reserve: 0.0,
            timesteps: 1000,
            runs: 10,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        fn positive(field: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be a positive finite number, got {v}")))
            }
        }
        fn at_least_one(field: &str, v: u64) -> Result<()> {
            if v >= 1 {
                Ok(())
            } else {
                Err(Error::config(field, "must be at least 1"))
            }
        }

        at_least_one("max_tickets", self.max_tickets)?;
        at_least_one("slots_per_epoch", self.slots_per_epoch)?;
        at_least_one("number_of_ticket_holders", self.number_of_ticket_holders as u64)?;
        at_least_one("runs", self.runs as u64)?;
        positive("mev_scale", self.mev_scale)?;
        positive("initial_ticket_price", self.initial_ticket_price)?;

        if let Some((mu, sigma)) = self.price_vola {
            if !mu.is_finite() || !sigma.is_finite() || sigma < 0.0 {
                return Err(Error::config(
                    "price_vola",
                    format!("expected finite (mu, sigma >= 0), got ({mu}, {sigma})"),
                ));
            }
        }
        if !(self.spa_reserve.is_finite() && self.spa_reserve >= 0.0) {
            return Err(Error::config("spa_reserve", "must be >= 0"));
        }
        if let Some(period) = self.expiry_period {
            at_least_one("expiry_period", period)?;
        }
        if let Some(f) = self.reimbursement_factor {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::config("reimbursement_factor", format!("must lie in [0, 1], got {f}")));
            }
            if self.expiry_period.is_some() {
                return Err(Error::config(
                    "reimbursement_factor",
                    "expiring tickets cannot also be refundable; unset expiry_period or reimbursement_factor",
                ));
            }
        }
        if let Some(k) = self.enhanced_lookahead {
            at_least_one("enhanced_lookahead", k)?;
            if self.assign_after_sale {
                return Err(Error::config(
                    "enhanced_lookahead",
                    "lookahead assignment is incompatible with assign_after_sale",
                ));
            }
        }
        if self.assign_after_sale && !self.selling_mechanism.is_auction() {
            return Err(Error::config("assign_after_sale", "only supported for FPA and SPA"));
        }

        use BiddingStrategy::*;
        let ok = match self.selling_mechanism {
            SellingMechanism::Fpa => matches!(
                self.agent_bidding_strategy,
                UniformAroundMedian | NaiveHistorical | CaptureAware | CompetitionAdjusted
            ),
            SellingMechanism::Spa => self.agent_bidding_strategy == Truthful,
            SellingMechanism::Eip1559 | SellingMechanism::Amm => self.agent_bidding_strategy == QuotedThreshold,
        };
        if !ok {
            return Err(Error::config(
                "agent_bidding_strategy",
                format!(
                    "{:?} is not available for {:?}",
                    self.agent_bidding_strategy, self.selling_mechanism
                ),
            ));
        }

        match self.selling_mechanism {
            SellingMechanism::Eip1559 => {
                at_least_one("eip1559_max_tickets", self.eip1559_max_tickets)?;
                positive("eip1559_adjust_factor", self.eip1559_adjust_factor)?;
                if let Some(t) = self.eip1559_target {
                    at_least_one("eip1559_target", t)?;
                }
            }
            SellingMechanism::Amm => {
                positive("amm_adjust_factor", self.amm_adjust_factor)?;
                if let Some(b) = self.amm_b {
                    if !b.is_finite() {
                        return Err(Error::config("amm_b", "must be finite"));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn eip1559_target(&self) -> u64 {
        self.eip1559_target
            .unwrap_or(self.number_of_ticket_holders as u64 * 4)
    }

    pub fn amm_b(&self) -> f64 {
        self.amm_b.unwrap_or_else(|| {
            crate::mechanisms::derive_b(self.initial_ticket_price, 1).unwrap_or(0.0)
        })
    }

    pub fn refundable(&self) -> bool {
        self.reimbursement_factor.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        SimulationConfig::default().validate().unwrap();
    }

    #[test]
    fn zero_holders_names_field() {
        let cfg = SimulationConfig {
            number_of_ticket_holders: 0,
            ..Default::default()
        };
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("number_of_ticket_holders"), "{err}");
    }

    #[test]
    fn expiring_and_refundable_rejected() {
        let cfg = SimulationConfig {
            expiry_period: Some(64),
            reimbursement_factor: Some(0.2),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn reimbursement_range() {
        let cfg = SimulationConfig {
            reimbursement_factor: Some(1.5),
            ..Default::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("reimbursement_factor"));
    }

    #[test]
    fn strategy_must_fit_mechanism() {
        let cfg = SimulationConfig {
            selling_mechanism: SellingMechanism::Spa,
            agent_bidding_strategy: BiddingStrategy::CompetitionAdjusted,
            ..Default::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("agent_bidding_strategy"));
    }

    #[test]
    fn unknown_key_is_named() {
        let mut v = serde_json::to_value(SimulationConfig::default()).unwrap();
        v.as_object_mut().unwrap().insert("max_tikets".into(), 3.into());
        let err = serde_json::from_value::<SimulationConfig>(v).unwrap_err();
        assert!(err.to_string().contains("max_tikets"), "{err}");
    }
}
