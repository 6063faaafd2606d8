//! Exogenous per-slot processes: available MEV and token-price volatility.

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};

use crate::error::{Error, Result};
use crate::model::SlotEnvironment;

/// One exponential draw with mean `mev_scale`.
pub fn draw_mev<R: Rng + ?Sized>(mev_scale: f64, rng: &mut R) -> Result<f64> {
    if !(mev_scale.is_finite() && mev_scale > 0.0) {
        return Err(Error::config("mev_scale", format!("must be > 0, got {mev_scale}")));
    }
    let exp = Exp::new(1.0 / mev_scale).map_err(|e| Error::config("mev_scale", e.to_string()))?;
    Ok(exp.sample(rng))
}

/// One log-normal volatility draw, or exactly `1.0` (without touching the
/// stream) when volatility is disabled.
pub fn draw_volatility<R: Rng + ?Sized>(price_vola: Option<(f64, f64)>, rng: &mut R) -> Result<f64> {
    let Some((mu, sigma)) = price_vola else {
        return Ok(1.0);
    };
    if sigma < 0.0 || !sigma.is_finite() || !mu.is_finite() {
        return Err(Error::config("price_vola", format!("invalid (mu, sigma) = ({mu}, {sigma})")));
    }
    let dist = LogNormal::new(mu, sigma).map_err(|e| Error::config("price_vola", e.to_string()))?;
    Ok(dist.sample(rng))
}

/// Mean of the volatility distribution, `exp(mu + sigma^2 / 2)`; `1.0` when disabled.
pub fn expected_volatility(price_vola: Option<(f64, f64)>) -> f64 {
    match price_vola {
        Some((mu, sigma)) => (mu + sigma * sigma / 2.0).exp(),
        None => 1.0,
    }
}

/// Draws the environment of `slot`: MEV first, then volatility.
pub fn draw_slot<R: Rng + ?Sized>(
    slot: u64,
    mev_scale: f64,
    price_vola: Option<(f64, f64)>,
    rng: &mut R,
) -> Result<SlotEnvironment> {
    let available_mev = draw_mev(mev_scale, rng)?;
    let volatility = draw_volatility(price_vola, rng)?;
    Ok(SlotEnvironment {
        slot,
        available_mev,
        volatility,
    })
}
