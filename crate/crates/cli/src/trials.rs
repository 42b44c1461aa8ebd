//! The multi-trial experiment driver: seeded random starts, one solve per
//! trial on a worker pool, JSONL records in trial order, and the eigenvalue
//! cluster summary.

use std::io::Write;
use std::time::Instant;

use beigen::{random_feasible, solve, Objective};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;
use crate::summary::{summarize, Summary};

/// One line of the JSONL output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub lambda: f64,
    pub res: f64,
    pub iters: usize,
    pub backtracks: u64,
    pub time_ms: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct TrialsOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

/// Runs `cfg.trials` solves from independent seeded starts. Records are
/// returned in trial order regardless of scheduling.
pub fn run_trials(cfg: &RunConfig) -> Result<TrialsOutput> {
    cfg.validate()?;
    let (tensor, bform) = cfg.build_instance()?;
    let dim = tensor.dim();
    let objective = Objective::new(tensor, bform, cfg.sense)?;
    let records = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<TrialRecord> {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(trial as u64));
            let x0 = random_feasible(objective.bform(), dim, &mut rng)?;
            let started = Instant::now();
            let outcome = solve(&objective, &x0, &cfg.solver)?;
            Ok(TrialRecord {
                trial,
                lambda: outcome.eigenpair.lambda,
                res: outcome.residual(),
                iters: outcome.iterations,
                backtracks: outcome.total_backtracks,
                time_ms: started.elapsed().as_secs_f64() * 1e3,
                converged: outcome.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&records);
    Ok(TrialsOutput { records, summary })
}

/// Writes records as JSON, one per line, in trial order.
pub fn write_jsonl(records: &[TrialRecord], mut out: impl Write) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
