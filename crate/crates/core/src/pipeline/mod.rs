//! Development, production and comparison stages.
//!
//! Development turns the persona generator into a labelled dataset and a
//! trained model. Production replays a day for the configured users: every
//! slot each user's context is encoded, the model proposes a tolerance
//! profile, the policy turns it into a target rate, RBs are assigned jointly
//! and the measured satisfaction is fed back into the model. Comparison pairs
//! a personalized and a baseline run slot by slot.

mod compare;
mod development;
mod production;
mod results;

pub use compare::{compare, write_hourly_csv, ComparisonReport, HourlyPoint};
pub use development::{generate_dev_dataset, run_development, train_on, DevelopmentRun};
pub use production::{production_seed, run_production, ProductionRun, TsRecord};
pub use results::{read_results_csv, read_summary, summarize, write_results_csv, write_summary, ResultRow, RunSummary};
