//! File ingestion, refinery siting, synthetic benchmarks and experiment
//! runs behind the `blendopt` binary.

mod experiment;
mod ingest;
mod site;
mod synthetic;

pub use experiment::{run_experiment, Mode, RunConfig, RunSummary, SweepRow};
pub use ingest::{
    assemble, default_biomass, export, ingest, read_biomass, read_curves, read_suppliers, thermal_for_demand,
    write_biomass, write_curves, write_suppliers, InputPaths, RefineryParams, SupplierRecord, DEFAULT_BIOMASS_CSV,
    DEFAULT_EFFICIENCY, DEFAULT_TOTAL_SUPPLY, MEGA_PER_GIGA_BTU, THERMAL_PER_DT,
};
pub use site::site_refinery;
pub use synthetic::{benchmark_refinery, generate, SyntheticConfig};
