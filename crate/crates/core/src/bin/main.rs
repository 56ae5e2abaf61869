use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use dialogue_her::harness::{
    compare_strategies, format_summaries, run_experiment, write_csv, ExperimentConfig, MetricsRow,
    Strategy,
};

#[derive(Parser)]
#[command(version, about = "Hindsight replay experiments for goal-oriented dialogue policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment configuration; unspecified keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated run seeds (overrides the config's seeds and run count).
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Output CSV path (per-strategy files get a suffix when several run).
    #[arg(long, default_value = "metrics.csv")]
    out: PathBuf,
    /// 1000 epochs x 100 dialogues on the 29-slot schema.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    episodes_per_epoch: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one strategy over all seeds.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        strategy: Option<String>,
        /// Write generated dialogues to this directory as JSON lines.
        #[arg(long)]
        dump_her: Option<PathBuf>,
    },
    /// Train several strategies on the same environment and summarise.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "ER,T-HER,S-HER")]
        strategy: Vec<String>,
    },
    /// Stitching strategy over a range of divergence thresholds.
    SweepKl {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "S-HER")]
        strategy: String,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.2,0.5,2.0")]
        thresholds: Vec<f64>,
    },
    /// Strategies without warm start and with a 1k pool.
    ColdStart {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "ER,PER,T-HER,S-HER,T+S-HER")]
        strategy: Vec<String>,
    },
}

fn base_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if c.paper_scale {
        cfg = cfg.paper_scale();
    }
    if !c.seeds.is_empty() {
        cfg.seeds = c.seeds.clone();
        cfg.n_runs = c.seeds.len();
    }
    if let Some(e) = c.epochs {
        cfg.epochs = e;
    }
    if let Some(e) = c.episodes_per_epoch {
        cfg.episodes_per_epoch = e;
    }
    Ok(cfg)
}

fn parse_strategies(names: &[String]) -> Result<Vec<Strategy>> {
    names
        .iter()
        .map(|n| n.parse::<Strategy>().map_err(Into::into))
        .collect()
}

fn suffixed(out: &Path, tag: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("metrics");
    let tag: String = tag
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect();
    out.with_file_name(format!("{stem}_{tag}.csv"))
}

fn save(rows: &[MetricsRow], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    write_csv(rows, &mut w)?;
    w.flush()?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn run_all(configs: Vec<ExperimentConfig>, out: &Path, tags: Vec<String>) -> Result<()> {
    for c in &configs {
        c.validate()?;
    }
    let mut results = Vec::new();
    for (cfg, tag) in configs.into_iter().zip(tags) {
        eprintln!("running {tag}");
        let rows = run_experiment(&cfg)?;
        save(&rows, &suffixed(out, &tag))?;
        results.push((cfg, rows));
    }
    print!("{}", format_summaries(&compare_strategies(&results)?));
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { common, strategy, dump_her } => {
            let mut cfg = base_config(&common)?;
            if let Some(s) = strategy {
                cfg.strategy = s.parse()?;
            }
            cfg.dump_dir = dump_her;
            cfg.validate()?;
            let rows = run_experiment(&cfg)?;
            save(&rows, &common.out)?;
            let summary = dialogue_her::harness::summarize(&dialogue_her::harness::label(&cfg), &rows);
            print!("{}", format_summaries(&[summary]));
        }
        Command::Compare { common, strategy } => {
            let base = base_config(&common)?;
            let strategies = parse_strategies(&strategy)?;
            let tags = strategies.iter().map(|s| s.to_string()).collect();
            let configs = strategies
                .into_iter()
                .map(|s| ExperimentConfig { strategy: s, ..base.clone() })
                .collect();
            run_all(configs, &common.out, tags)?;
        }
        Command::SweepKl { common, strategy, thresholds } => {
            let mut base = base_config(&common)?;
            base.strategy = strategy.parse()?;
            if !base.strategy.stitching() {
                anyhow::bail!("{} does not stitch; the threshold has no effect", base.strategy);
            }
            let tags = thresholds.iter().map(|t| format!("kl{t}")).collect();
            let configs = thresholds
                .iter()
                .map(|&t| {
                    let mut c = base.clone();
                    c.her.kl_threshold = t;
                    c
                })
                .collect();
            run_all(configs, &common.out, tags)?;
        }
        Command::ColdStart { common, strategy } => {
            let base = base_config(&common)?.cold_start();
            let strategies = parse_strategies(&strategy)?;
            let tags = strategies.iter().map(|s| format!("cold_{s}")).collect();
            let configs = strategies
                .into_iter()
                .map(|s| ExperimentConfig { strategy: s, ..base.clone() })
                .collect();
            run_all(configs, &common.out, tags)?;
        }
    }
    Ok(())
}
