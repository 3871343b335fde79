use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use isocone_core::experiment::{draws_csv, run_experiment, ExperimentConfig, ExperimentOutcome};
use isocone_core::limit::{limit_check, McPlan, Scenario};
use isocone_core::{
    empirical_pmf, level_partition, regression_means, truncated_level_partition, Direction,
    Execution, IsotonicSolver, PreOrder, Sample, WeightedFunction,
};
use serde_json::json;

/// Isotonic regression over finite pre-orders and limit-law simulation.
#[derive(Parser)]
#[command(name = "isocone", version)]
struct Cli {
    /// Worker threads for replicate loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weighted isotonic (or antitonic) regression of a value vector.
    Solve {
        #[arg(long)]
        preorder: PathBuf,
        #[arg(long)]
        values: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        antitonic: bool,
    },
    /// Comparable level sets of a reference isotonic vector.
    Partition {
        #[arg(long)]
        preorder: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Keep only the M level sets of largest absolute value.
        #[arg(long, value_name = "M")]
        truncate: Option<usize>,
    },
    /// Empirical pmf from draws (0-based element indices) and its antitonic fit.
    FitPmf {
        #[arg(long)]
        preorder: PathBuf,
        #[arg(long)]
        draws: PathBuf,
    },
    /// Cell means from `index,response` pairs and their weighted isotonic fit.
    FitReg {
        #[arg(long)]
        preorder: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
    },
    /// Finite-sample law against the Gaussian limit law.
    Simulate {
        #[arg(long, value_enum)]
        scenario: ScenarioKind,
        #[arg(long)]
        preorder: PathBuf,
        /// Truth: the pmf for `pmf`, the regression function for `reg`.
        #[arg(long)]
        g0: PathBuf,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        reps: usize,
        #[arg(long, env = "ISOCONE_SEED", default_value_t = 0)]
        seed: u64,
        /// Noise level for `reg`.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Directory for mcreport.json and the draw CSVs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs a JSON experiment configuration.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; falls back to `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long, env = "ISOCONE_SEED")]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioKind {
    Pmf,
    Reg,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_preorder(path: &Path) -> Result<PreOrder> {
    PreOrder::from_json_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// Rows of a CSV file split into fields; a first row that does not parse as
/// numbers is treated as a header.
fn csv_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = read(path)?;
    let mut rows: Vec<Vec<String>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|f| f.trim().to_string()).collect())
        .collect();
    if let Some(first) = rows.first() {
        if first.iter().any(|f| f.parse::<f64>().is_err()) {
            rows.remove(0);
        }
    }
    Ok(rows)
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, field: &str) -> Result<T> {
    field.parse().map_err(|_| {
        anyhow!(
            "{}: row {}: cannot parse {field:?}",
            path.display(),
            line + 1
        )
    })
}

fn read_vector(path: &Path) -> Result<Vec<f64>> {
    csv_rows(path)?
        .iter()
        .enumerate()
        .map(|(i, row)| parse_field(path, i, &row[0]))
        .collect()
}

fn vector_csv(v: &[f64]) -> String {
    let mut out = String::new();
    for x in v {
        writeln!(out, "{x}").unwrap();
    }
    out
}

fn columns_csv(header: &[&str], columns: &[&[f64]]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..columns[0].len() {
        let row: Vec<String> = columns.iter().map(|c| c[i].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn execution(threads: Option<usize>) -> Execution {
    match threads {
        Some(1) => Execution::Sequential,
        _ => Execution::default(),
    }
}

fn run(cli: Cli) -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let exec = execution(cli.threads);

    match cli.command {
        Command::Solve {
            preorder,
            values,
            weights,
            antitonic,
        } => {
            let order = read_preorder(&preorder)?;
            let values = read_vector(&values)?;
            let f = match weights {
                Some(w) => WeightedFunction::new(values, read_vector(&w)?)?,
                None => WeightedFunction::unit(values)?,
            };
            let direction = if antitonic {
                Direction::Antitonic
            } else {
                Direction::Isotonic
            };
            let fit = IsotonicSolver::new(&order).fit_directed(&f, direction)?;
            print!("{}", vector_csv(&fit.fitted));
            eprintln!(
                "{}",
                json!({
                    "objective": fit.objective,
                    "blocks": fit.blocks.len(),
                    "diagnostics": fit.diagnostics,
                })
            );
        }
        Command::Partition {
            preorder,
            reference,
            truncate,
        } => {
            let order = read_preorder(&preorder)?;
            let g0 = read_vector(&reference)?;
            let lp = match truncate {
                Some(m) => truncated_level_partition(&order, &g0, m)?,
                None => level_partition(&order, &g0)?,
            };
            let labels = |members: &[usize]| -> Vec<&str> {
                members
                    .iter()
                    .map(|&m| order.labels()[m].as_str())
                    .collect()
            };
            let sets: Vec<_> = lp
                .sets
                .iter()
                .map(|s| {
                    json!({
                        "component": s.component,
                        "level": s.level,
                        "value": s.value,
                        "members": s.members,
                        "labels": labels(&s.members),
                    })
                })
                .collect();
            let out = json!({
                "sets": sets,
                "epsilon_tilde": lp.epsilon_tilde,
                "truncated": lp.is_truncated(),
                "tail_set": lp.tail_set,
                "tail_labels": labels(&lp.tail_set),
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::FitPmf { preorder, draws } => {
            let order = read_preorder(&preorder)?;
            let draws: Vec<usize> = csv_rows(&draws)?
                .iter()
                .enumerate()
                .map(|(i, row)| parse_field(&draws, i, &row[0]))
                .collect::<Result<_>>()?;
            let out = empirical_pmf(&order, &Sample::PmfDraws(draws))?;
            print!(
                "{}",
                columns_csv(
                    &["basic", "isotonized"],
                    &[&out.basic.values, &out.isotonized.fitted]
                )
            );
        }
        Command::FitReg { preorder, pairs } => {
            let order = read_preorder(&preorder)?;
            let rows = csv_rows(&pairs)?;
            let mut sample = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                if row.len() < 2 {
                    bail!(
                        "{}: row {}: expected index,response",
                        pairs.display(),
                        i + 1
                    );
                }
                sample.push((
                    parse_field(&pairs, i, &row[0])?,
                    parse_field(&pairs, i, &row[1])?,
                ));
            }
            let out = regression_means(&order, &Sample::RegressionPairs(sample))?;
            let weights = out.empirical_weights.unwrap_or_default();
            print!(
                "{}",
                columns_csv(
                    &["basic", "weight", "isotonized"],
                    &[&out.basic.values, &weights, &out.isotonized.fitted]
                )
            );
        }
        Command::Simulate {
            scenario,
            preorder,
            g0,
            n,
            reps,
            seed,
            sigma,
            out,
        } => {
            let order = read_preorder(&preorder)?;
            let truth = read_vector(&g0)?;
            let scenario = match scenario {
                ScenarioKind::Pmf => Scenario::Pmf { p: truth },
                ScenarioKind::Reg => Scenario::Regression {
                    design: vec![1.0 / truth.len() as f64; truth.len()],
                    g0: truth,
                    sigma,
                },
            };
            let check = limit_check(
                &scenario,
                &order,
                n,
                &McPlan::new(reps, seed).with_execution(exec),
            )?;
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                fs::write(
                    dir.join("mcreport.json"),
                    serde_json::to_string_pretty(&check.report)?,
                )?;
                fs::write(dir.join("raw_draws.csv"), draws_csv(&check.finite.raw))?;
                fs::write(
                    dir.join("finite_draws.csv"),
                    draws_csv(&check.finite.isotonized),
                )?;
                fs::write(dir.join("limit_draws.csv"), draws_csv(&check.limit))?;
            }
            println!("{}", serde_json::to_string_pretty(&check.report)?);
        }
        Command::Experiment { config, out, seed } => {
            let mut cfg = ExperimentConfig::from_json_str(&read(&config)?)
                .with_context(|| format!("parsing {}", config.display()))?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if cfg.execution.is_none() {
                cfg.execution = Some(exec);
            }
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .ok_or_else(|| anyhow!("no output directory: pass --out or set output_dir"))?;
            let files: Vec<String> = match run_experiment(&cfg, &dir)? {
                ExperimentOutcome::Figure1(summaries) => summaries
                    .iter()
                    .map(|s| format!("distances_n{}.csv", s.n))
                    .chain(["summary.json".to_string()])
                    .collect(),
                ExperimentOutcome::LimitCheck(_) => {
                    ["mcreport.json", "finite_draws.csv", "limit_draws.csv"]
                        .iter()
                        .map(|s| s.to_string())
                        .collect()
                }
            };
            println!("{}", json!({ "output_dir": dir, "files": files }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = match err.downcast_ref::<isocone_core::Error>() {
                Some(_) => "validation",
                None if err.downcast_ref::<std::io::Error>().is_some() => "io",
                None => "runtime",
            };
            let chain: Vec<String> = err.chain().map(|e| e.to_string()).collect();
            eprintln!("{}", json!({ "error": chain.join(": "), "kind": kind }));
            ExitCode::FAILURE
        }
    }
}
