//! Compiles the guide's code samples as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
mod model {}
#[doc = include_str!("../../../book/src/mechanisms.md")]
mod mechanisms {}
#[doc = include_str!("../../../book/src/lifecycle.md")]
mod lifecycle {}
#[doc = include_str!("../../../book/src/secondary.md")]
mod secondary {}
#[doc = include_str!("../../../book/src/metrics.md")]
mod metrics {}
#[doc = include_str!("../../../book/src/valuation.md")]
mod valuation {}
#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
