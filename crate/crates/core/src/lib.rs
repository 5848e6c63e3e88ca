//! Mining ticker mentions and buy/sell signals from archived forum submissions and
//! backtesting them against daily market data.
//!
//! The numeric core ([`market`], [`signals`], [`backtest`]) is generic over a [`Scalar`]
//! (`f32` or `f64`); the aliases below fix it to `f64`, which the pipeline uses.

pub mod backtest;
pub mod corpus;
pub mod dates;
pub mod horizon;
pub mod lexer;
pub mod market;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod signals;
pub mod synthetic;

pub use dates::DateRange;
pub use horizon::{Horizon, WindowLengths};
pub use scalar::Scalar;

pub type PriceBar = market::PriceBar<f64>;
pub type RawBar = market::RawBar<f64>;
pub type DayFeatures = market::DayFeatures<f64>;
pub type PriceSeries = market::PriceSeries<f64>;
pub type DailySummary = signals::DailySummary<f64>;
pub type EvaluationReport = backtest::EvaluationReport<f64>;

pub type PriceSeriesF32 = market::PriceSeries<f32>;
pub type DailySummaryF32 = signals::DailySummary<f32>;
pub type EvaluationReportF32 = backtest::EvaluationReport<f32>;
