use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const CSV_HEADER_COMMENT: &str = "# dialogue-her metrics v1";
pub const CSV_COLUMNS: [&str; 12] = [
    "run",
    "seed",
    "epoch",
    "success_rate",
    "mean_reward",
    "mean_turns",
    "pool_size",
    "generated_ther",
    "generated_sher",
    "discarded_stitches",
    "epsilon",
    "greedy_success_rate",
];

/// Success rate used for the epochs-to-threshold metric.
pub const SUCCESS_THRESHOLD: f64 = 0.5;
/// Trailing window (epochs) smoothing curves before thresholding.
pub const SMOOTHING_WINDOW: usize = 5;

/// One epoch of one run. `success_rate` is measured on the training
/// dialogues themselves; `greedy_success_rate` on separate greedy rollouts.
/// Counters are cumulative over the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub run: usize,
    pub seed: u64,
    pub epoch: usize,
    pub success_rate: f64,
    pub mean_reward: f64,
    pub mean_turns: f64,
    pub pool_size: usize,
    pub generated_ther: usize,
    pub generated_sher: usize,
    pub discarded_stitches: usize,
    pub epsilon: f64,
    pub greedy_success_rate: Option<f64>,
}

pub fn write_csv<W: Write>(rows: &[MetricsRow], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER_COMMENT}")?;
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for r in rows {
        let greedy = r.greedy_success_rate.map(|g| format!("{g:.6}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{},{},{},{},{:.6},{}",
            r.run,
            r.seed,
            r.epoch,
            r.success_rate,
            r.mean_reward,
            r.mean_turns,
            r.pool_size,
            r.generated_ther,
            r.generated_sher,
            r.discarded_stitches,
            r.epsilon,
            greedy
        )?;
    }
    Ok(())
}

pub fn csv_string(rows: &[MetricsRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is ascii")
}

/// Success curve of each run, ordered by run id.
pub fn curves(rows: &[MetricsRow]) -> Vec<Vec<f64>> {
    let runs = rows.iter().map(|r| r.run + 1).max().unwrap_or(0);
    let mut out = vec![Vec::new(); runs];
    for r in rows {
        out[r.run].push(r.success_rate);
    }
    out
}

fn smoothed(curve: &[f64]) -> Vec<f64> {
    (0..curve.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(SMOOTHING_WINDOW);
            curve[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}

/// First epoch (1-based count) at which the smoothed curve reaches
/// `threshold`; `None` if it never does.
pub fn epochs_to_threshold(curve: &[f64], threshold: f64) -> Option<usize> {
    smoothed(curve).iter().position(|&v| v >= threshold).map(|i| i + 1)
}

/// Normalised area under the success curve (mean success over epochs).
pub fn auc(curve: &[f64]) -> f64 {
    if curve.is_empty() {
        0.0
    } else {
        curve.iter().sum::<f64>() / curve.len() as f64
    }
}

/// Mean success over the last tenth of the epochs (at least one).
pub fn final_success(curve: &[f64]) -> f64 {
    let k = (curve.len() / 10).max(1).min(curve.len());
    auc(&curve[curve.len() - k..])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { mean, std: var.sqrt() }
    }
}

/// Per-strategy aggregate over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub label: String,
    pub runs: usize,
    pub final_success: MeanStd,
    pub auc: MeanStd,
    /// Epochs to the success threshold per run; runs never reaching it
    /// count as the full number of epochs.
    pub epochs_to_threshold: MeanStd,
    pub runs_reaching_threshold: usize,
    pub per_run_epochs_to_threshold: Vec<Option<usize>>,
    pub per_run_final: Vec<f64>,
    pub per_run_auc: Vec<f64>,
}

pub fn summarize(label: &str, rows: &[MetricsRow]) -> Summary {
    let cs = curves(rows);
    let epochs = cs.iter().map(Vec::len).max().unwrap_or(0);
    let ett: Vec<Option<usize>> = cs
        .iter()
        .map(|c| epochs_to_threshold(c, SUCCESS_THRESHOLD))
        .collect();
    let ett_f: Vec<f64> = ett.iter().map(|e| e.unwrap_or(epochs) as f64).collect();
    let finals: Vec<f64> = cs.iter().map(|c| final_success(c)).collect();
    let aucs: Vec<f64> = cs.iter().map(|c| auc(c)).collect();
    Summary {
        label: label.to_string(),
        runs: cs.len(),
        final_success: MeanStd::of(&finals),
        auc: MeanStd::of(&aucs),
        epochs_to_threshold: MeanStd::of(&ett_f),
        runs_reaching_threshold: ett.iter().filter(|e| e.is_some()).count(),
        per_run_epochs_to_threshold: ett,
        per_run_final: finals,
        per_run_auc: aucs,
    }
}

/// Summaries of several experiments run on the same environment.
pub fn compare_strategies(results: &[(ExperimentConfig, Vec<MetricsRow>)]) -> Result<Vec<Summary>> {
    if results.len() < 2 {
        return Err(Error::Refused("a comparison needs at least two experiments".into()));
    }
    let key = results[0].0.environment_key()?;
    for (cfg, _) in &results[1..] {
        if cfg.environment_key()? != key {
            return Err(Error::Refused(
                "experiments run on different environments cannot be compared".into(),
            ));
        }
    }
    Ok(results
        .iter()
        .map(|(cfg, rows)| summarize(&label(cfg), rows))
        .collect())
}

pub fn label(cfg: &ExperimentConfig) -> String {
    if cfg.strategy.stitching() {
        format!("{} (kl<={})", cfg.strategy, cfg.her.kl_threshold)
    } else {
        cfg.strategy.to_string()
    }
}

pub fn format_summaries(summaries: &[Summary]) -> String {
    let mut s = format!(
        "{:<24} {:>4} {:>15} {:>15} {:>17} {:>7}\n",
        "strategy", "runs", "final success", "auc", "epochs to 0.5", "reached"
    );
    for m in summaries {
        s += &format!(
            "{:<24} {:>4} {:>7.3} ± {:<5.3} {:>7.3} ± {:<5.3} {:>8.1} ± {:<6.1} {:>4}/{}\n",
            m.label,
            m.runs,
            m.final_success.mean,
            m.final_success.std,
            m.auc.mean,
            m.auc.std,
            m.epochs_to_threshold.mean,
            m.epochs_to_threshold.std,
            m.runs_reaching_threshold,
            m.runs
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_metrics() {
        let c = [0.0, 0.2, 0.6, 0.8, 0.9, 1.0, 1.0, 1.0, 1.0, 1.0];
        // trailing means: 0, .1, .267, .4, .5 -> reached at epoch 5
        assert_eq!(epochs_to_threshold(&c, 0.5), Some(5));
        assert_eq!(epochs_to_threshold(&[0.1; 5], 0.5), None);
        assert!((auc(&c) - 0.75).abs() < 1e-12);
        assert_eq!(final_success(&c), 1.0);
    }

    #[test]
    fn mean_std() {
        let m = MeanStd::of(&[1.0, 3.0]);
        assert_eq!(m.mean, 2.0);
        assert!((m.std - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn differing_environments_refused() {
        let a = ExperimentConfig::default();
        let mut b = ExperimentConfig::default();
        b.env.belief_noise = 0.1;
        let res = compare_strategies(&[(a, vec![]), (b, vec![])]);
        assert!(matches!(res, Err(Error::Refused(_))));
    }
}
