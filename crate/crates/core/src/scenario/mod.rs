//! Named scenarios: strict configuration, sweep expansion, and the engine
//! pipeline that writes CSV/JSON artifacts.

mod config;
mod run;

pub use config::{
    parse_config, parse_config_with, parse_value, set_path, Engine, EnsembleConfig, GridConfig, ModelConfig, RecurrenceConfig,
    ScenarioConfig, ScenarioName, SemiclassicalConfig, StateConfig, TimeConfig,
};
pub use run::{
    build_setup, exact_config, run_scenario, BohmSummary, ExactSummary, RecurrenceSummary, RunReport, Section,
    SemiclassicalSummary, SolitonSummary,
};
