//! Configuration-driven experiment harness: Monte Carlo accuracy tables,
//! empirical estimation runs, forecast backtests, and timing studies, with
//! stamped CSV/JSON emission.

mod backtest;
mod config;
mod empirical;
mod monte_carlo;
mod output;
mod timing;

pub use backtest::{run_backtest, BacktestReport};
pub use config::{preset, preset_names, presets, EstimatorId, ExperimentConfig, ModelId};
pub use empirical::{read_returns, run_empirical, EmpiricalRequest, FitReport};
pub use monte_carlo::{run_monte_carlo, AccuracyRow, McReport, RawRecord};
pub use output::{write_accuracy_csv, write_json, write_raw_csv, write_timing_csv};
pub use timing::{run_timing, TimingRow};
