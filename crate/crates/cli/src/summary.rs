//! Eigenvalue clustering and the run summary table.

use serde::Serialize;

use crate::trials::TrialRecord;

/// Converged eigenvalues within this absolute distance of a cluster's
/// running mean belong to that cluster.
pub const CLUSTER_TOL: f64 = 5e-5;

#[derive(Debug, Clone, Serialize)]
pub struct ClusterRow {
    pub lambda: f64,
    pub occ: usize,
    pub iter: f64,
    pub iter_in: f64,
    pub time_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub suc: usize,
    pub clusters: Vec<ClusterRow>,
}

/// Clusters the converged trials by eigenvalue (ascending) and averages the
/// per-cluster iteration, backtrack and time columns. Occurrence counts over
/// all clusters sum to the success count.
pub fn summarize(records: &[TrialRecord]) -> Summary {
    let mut converged: Vec<&TrialRecord> = records.iter().filter(|r| r.converged).collect();
    converged.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());

    struct Acc {
        lambda_sum: f64,
        iters: usize,
        backtracks: u64,
        time_ms: f64,
        count: usize,
    }
    let mut groups: Vec<Acc> = Vec::new();
    for rec in converged.iter() {
        let fits = groups
            .last()
            .map(|g| (rec.lambda - g.lambda_sum / g.count as f64).abs() <= CLUSTER_TOL)
            .unwrap_or(false);
        if fits {
            let g = groups.last_mut().unwrap();
            g.lambda_sum += rec.lambda;
            g.iters += rec.iters;
            g.backtracks += rec.backtracks;
            g.time_ms += rec.time_ms;
            g.count += 1;
        } else {
            groups.push(Acc {
                lambda_sum: rec.lambda,
                iters: rec.iters,
                backtracks: rec.backtracks,
                time_ms: rec.time_ms,
                count: 1,
            });
        }
    }

    Summary {
        trials: records.len(),
        suc: converged.len(),
        clusters: groups
            .into_iter()
            .map(|g| ClusterRow {
                lambda: g.lambda_sum / g.count as f64,
                occ: g.count,
                iter: g.iters as f64 / g.count as f64,
                iter_in: g.backtracks as f64 / g.count as f64,
                time_ms: g.time_ms / g.count as f64,
            })
            .collect(),
    }
}

fn format_lambda(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 5e-5) {
        format!("{v:.4e}")
    } else {
        format!("{v:.4}")
    }
}

/// Renders the summary as an aligned text table.
pub fn render_table(summary: &Summary) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>14} {:>6} {:>8} {:>8} {:>10}\n",
        "lambda", "occ", "iter", "iter-in", "time(ms)"
    ));
    for row in &summary.clusters {
        out.push_str(&format!(
            "{:>14} {:>6} {:>8.1} {:>8.1} {:>10.3}\n",
            format_lambda(row.lambda),
            row.occ,
            row.iter,
            row.iter_in,
            row.time_ms
        ));
    }
    out.push_str(&format!("suc {}/{}\n", summary.suc, summary.trials));
    out
}
