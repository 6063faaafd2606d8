//! Agent-based simulation of execution ticket markets.
//!
//! Execution tickets are protocol-issued rights to propose a future slot. A
//! run seeds a population of builders, sells tickets through one of four
//! primary mechanisms (first- or second-price auctions, an EIP-1559 style
//! posted price, or an exponential bonding curve), assigns slots by lottery,
//! optionally lets holders resell, and records every trade. Metrics on
//! concentration, protocol revenue and price stability are computed from the
//! trade log.
//!
//! ```
//! use etsim::{engine, io::Preset};
//!
//! let mut config = Preset::SimpleFpa.config();
//! config.timesteps = 64;
//! let result = engine::run(&config, 42).unwrap();
//! assert_eq!(result.metrics.redeemed, 64);
//! assert!(result.supply_violations.is_empty());
//! ```
//!
//! Runs are deterministic in `(config, seed)`.

pub mod agents;
pub mod config;
pub mod engine;
pub mod environment;
pub mod error;
pub mod io;
pub mod lifecycle;
pub mod market;
pub mod mechanisms;
pub mod metrics;
pub mod model;
pub mod secondary;
pub mod valuation;

pub use config::{BiddingStrategy, SellingMechanism, SimulationConfig};
pub use engine::{run, run_batch, step, BatchResult, RunResult, SlotRecord};
pub use error::{Error, Result};
pub use market::{init_market, new_market, Market};
pub use metrics::RunMetrics;
