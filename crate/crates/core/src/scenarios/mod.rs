//! Configurable experiments that assemble the other modules into the six
//! scenario families (centralized baseline, plain Fed-Avg, correlation
//! bundling, convolutional model, differential privacy, secure
//! aggregation) and write their result tables.

mod config;
mod report;
mod run;

pub use config::{
    apply_override, ClippingMode, ClusteringConfig, DataSource, DpSweep, ScenarioConfig,
    ScenarioId, OUTPUT_ROOT_ENV,
};
pub use report::{emit_report, table_csv, table_header, table_row, CLIP_SWEEP_HEADER};
pub use run::{load_clients, run_scenario, run_scenario_with, ResultRow, RowKind, ScenarioResult};
