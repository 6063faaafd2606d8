//! The six mechanism designs studied, as ready-made configurations.

use serde::{Deserialize, Serialize};

use crate::config::{BiddingStrategy, SellingMechanism, SimulationConfig};
use crate::error::{Error, Result};

/// Outstanding tickets per holder targeted by the `flexible-1559` preset.
pub const FLEXIBLE_1559_TARGET_PER_HOLDER: u64 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// 32 expiring tickets sold by sequential first-price auctions.
    SimpleFpa,
    /// One ticket per slot sold by a just-in-time second-price auction.
    JitSpa,
    /// Floating supply sold in capped batches at an EIP-1559 style price.
    Flexible1559,
    /// 1024 perpetual tickets, second-price auctions, 32-slot lookahead.
    FixedSpa,
    /// Floating supply priced by an exponential bonding curve, with refunds.
    FlexibleAmm,
    /// 1024 perpetual tickets, first-price auctions and a resale market.
    FixedFpaResale,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::SimpleFpa,
        Preset::JitSpa,
        Preset::Flexible1559,
        Preset::FixedSpa,
        Preset::FlexibleAmm,
        Preset::FixedFpaResale,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SimpleFpa => "simple-fpa",
            Preset::JitSpa => "jit-spa",
            Preset::Flexible1559 => "flexible-1559",
            Preset::FixedSpa => "fixed-spa",
            Preset::FlexibleAmm => "flexible-amm",
            Preset::FixedFpaResale => "fixed-fpa-resale",
        }
    }

    pub fn from_name(name: &str) -> Result<Preset> {
        Preset::ALL.into_iter().find(|p| p.name() == name).ok_or_else(|| {
            let known: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
            Error::config("preset", format!("unknown preset `{name}`; expected one of {}", known.join(", ")))
        })
    }

    /// The preset's configuration. The design leaves the EIP-1559 target and
    /// the AMM offset open: the 1559 preset targets ten tickets per holder,
    /// the AMM offset is derived from the initial price.
    pub fn config(self) -> SimulationConfig {
        let base = SimulationConfig::default();
        match self {
            Preset::SimpleFpa => SimulationConfig {
                selling_mechanism: SellingMechanism::Fpa,
                max_tickets: 32,
                expiry_period: Some(64),
                agent_bidding_strategy: BiddingStrategy::CaptureAware,
                ..base
            },
            Preset::JitSpa => SimulationConfig {
                selling_mechanism: SellingMechanism::Spa,
                max_tickets: 1,
                expiry_period: Some(1),
                secondary_market: true,
                assign_after_sale: true,
                agent_bidding_strategy: BiddingStrategy::Truthful,
                ..base
            },
            Preset::Flexible1559 => SimulationConfig {
                selling_mechanism: SellingMechanism::Eip1559,
                max_tickets: 40,
                secondary_market: true,
                eip1559_max_tickets: 4,
                eip1559_adjust_factor: 8.0,
                eip1559_target: Some(FLEXIBLE_1559_TARGET_PER_HOLDER * base.number_of_ticket_holders as u64),
                agent_bidding_strategy: BiddingStrategy::QuotedThreshold,
                ..base
            },
            Preset::FixedSpa => SimulationConfig {
                selling_mechanism: SellingMechanism::Spa,
                max_tickets: 1024,
                enhanced_lookahead: Some(32),
                agent_bidding_strategy: BiddingStrategy::Truthful,
                ..base
            },
            Preset::FlexibleAmm => SimulationConfig {
                selling_mechanism: SellingMechanism::Amm,
                max_tickets: 32,
                amm_adjust_factor: 25.0,
                reimbursement_factor: Some(0.2),
                agent_bidding_strategy: BiddingStrategy::QuotedThreshold,
                ..base
            },
            Preset::FixedFpaResale => SimulationConfig {
                selling_mechanism: SellingMechanism::Fpa,
                max_tickets: 1024,
                secondary_market: true,
                agent_bidding_strategy: BiddingStrategy::CaptureAware,
                ..base
            },
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
