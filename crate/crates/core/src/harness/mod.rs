//! Scenarios, noise, metrics and regularisation sweeps.

mod bicubic;
mod images;
mod metrics;
mod noise;
mod scenario;
mod sweep;

pub use bicubic::{bicubic_upsample, crop};
pub use images::{phantom, read_pgm, write_pgm};
pub use metrics::{mse, psnr, psnr_from_mse, PEAK};
pub use noise::add_noise;
pub use scenario::{build_operator, build_scenario, ImageSource, Scenario, ScenarioKind, SR_FACTOR};
pub use sweep::{
    draw_seed, named_denoiser, run_sweep, run_sweep_on, solve_cell, ExperimentSpec, FidelityChoice, L2Kind, PriorSpec,
    SolverSpec, SweepResult, SweepRow, CSV_HEADER,
};
