mod anonymize;
mod detect;
mod eval;
mod histogram;

use std::time::Instant;

pub use anonymize::run_anonymize;
pub use detect::run_detect;
pub use eval::{
    run_eval_det, run_eval_embed, run_eval_seg, EmbedEvalOutput, DEFAULT_HIST_BINS,
    DEFAULT_HIST_HI, DEFAULT_HIST_LO,
};
pub use histogram::{read_column, run_histogram};

use crate::error::{CliError, CliResult};

fn thread_pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::failure(format!("cannot start worker pool: {e}")))
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1000.0
}
