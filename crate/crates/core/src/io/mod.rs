//! Configuration loading, presets and result export.

mod export;
mod load;
mod presets;

pub use export::{
    export_batch, export_run, exported_metrics, fmt9, read_quotes, read_trades, recompute_metrics, round9,
    round_metrics, write_slots, write_trades, BatchSummary, RunSummary, SLOT_COLUMNS, TRADE_COLUMNS,
};
pub use load::{load_config, parse_override, read_config_file};
pub use presets::{Preset, FLEXIBLE_1559_TARGET_PER_HOLDER};
