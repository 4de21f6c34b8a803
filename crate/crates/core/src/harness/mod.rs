//! Experiment configuration, execution and result files.

mod config;
mod metrics;
mod output;
mod runner;

pub use config::{load_config, Algo, ConfigBuilder, ExperimentConfig, GameKind, Params};
pub use metrics::{
    aggregate_cumulative, aggregate_curves, cumulative_average, windowed_mean, AggregatePoint,
    MetricSeries,
};
pub use output::{
    render_curve_svg, write_colormap_csv, write_colormap_ppm, write_outputs, write_run_csv,
    write_snapshot_csv, OutputPaths,
};
pub use runner::{
    build_agents, build_environment, matrix_spec, run_cala, run_episodes, run_experiment,
    run_experiment_detailed, run_single, RunOutput,
};
