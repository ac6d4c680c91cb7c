//! Batch front end: factorize / unfold / cluster-eval / gen-manifold /
//! convert, driven by flags or a key/value config document (flags override
//! the file). Exit codes: 0 success, 2 config error, 3 data or format error,
//! 4 numeric failure.

// index loops mirror the math; `!(x > 0)` checks intentionally reject NaN
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod report;
mod tasks;
mod tensor_io;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, Task};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "hyperntf", version, about = "Nonnegative tensor factorization with hypergraph smoothing, spectral manifold unfolding, and clustering evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factor a tensor (hyperntf | ntf | ntd | hosvd) and write the reduced data
    Factorize(TaskArgs),
    /// Embed points in fewer dimensions (hypergraph-le | graph-le | lle)
    Unfold(TaskArgs),
    /// Factorize, then score k-means clustering of the reduced data
    ClusterEval(TaskArgs),
    /// Sample a synthetic 3-D manifold to CSV
    GenManifold(TaskArgs),
    /// Convert between CSV and the binary tensor format
    Convert(TaskArgs),
}

impl Command {
    fn task(&self) -> Task {
        match self {
            Command::Factorize(_) => Task::Factorize,
            Command::Unfold(_) => Task::Unfold,
            Command::ClusterEval(_) => Task::ClusterEval,
            Command::GenManifold(_) => Task::GenManifold,
            Command::Convert(_) => Task::Convert,
        }
    }

    fn args(self) -> TaskArgs {
        match self {
            Command::Factorize(a)
            | Command::Unfold(a)
            | Command::ClusterEval(a)
            | Command::GenManifold(a)
            | Command::Convert(a) => a,
        }
    }
}

#[derive(Args)]
struct TaskArgs {
    /// Key/value config document; individual flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input tensor (.tnsr) or CSV matrix / point file
    #[arg(long)]
    input: Option<PathBuf>,
    /// Ground-truth label CSV, or the IDX label file next to --images
    #[arg(long)]
    labels: Option<PathBuf>,
    /// IDX image file (pairs with --labels)
    #[arg(long)]
    images: Option<PathBuf>,
    /// hyperntf | ntf | ntd | hosvd | hypergraph-le | graph-le | lle
    #[arg(long)]
    method: Option<String>,
    /// CP rank / embedding dimension
    #[arg(long)]
    rank: Option<usize>,
    /// Per-mode ranks for ntd / hosvd, comma separated
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    /// Regularization strength
    #[arg(long)]
    lambda: Option<f64>,
    /// Neighbor count for hypergraph / graph construction
    #[arg(long)]
    knn: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol_obj: Option<f64>,
    #[arg(long)]
    tol_rse: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// k-means repetitions for cluster-eval
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory (or target file for convert)
    #[arg(long)]
    output: Option<PathBuf>,
    /// punctured_sphere | gaussian | twin_peaks | toroidal_helix
    #[arg(long)]
    kind: Option<String>,
    /// Sample count for generated manifolds
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    noise_sd: Option<f64>,
    /// unit | heat-kernel
    #[arg(long)]
    weight_scheme: Option<String>,
    /// Subsample size for IDX import (0 = all)
    #[arg(long)]
    limit: Option<usize>,
}

impl TaskArgs {
    fn into_config(self) -> Result<ExperimentConfig, CliError> {
        let mut c = ExperimentConfig {
            input: self.input,
            labels: self.labels,
            images: self.images,
            rank: self.rank,
            ranks: self.ranks,
            lambda: self.lambda,
            knn: self.knn,
            max_iter: self.max_iter,
            tol_obj: self.tol_obj,
            tol_rse: self.tol_rse,
            seed: self.seed,
            runs: self.runs,
            output: self.output,
            samples: self.samples,
            noise_sd: self.noise_sd,
            limit: self.limit,
            ..ExperimentConfig::default()
        };
        if let Some(m) = self.method {
            c.method = Some(m.parse()?);
        }
        if let Some(k) = self.kind {
            c.kind = Some(k.parse().map_err(|e: hyperntf_core::Error| CliError::Config(e.to_string()))?);
        }
        if let Some(w) = self.weight_scheme {
            c.weight_scheme =
                Some(w.parse().map_err(|e: hyperntf_core::Error| CliError::Config(e.to_string()))?);
        }
        Ok(c)
    }
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    let task = cli.command.task();
    let args = cli.command.args();

    let config_path = args.config.clone();
    let overrides = args.into_config()?;
    let mut config = match &config_path {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    config.merge_overrides(overrides);
    if let Some(declared) = config.task {
        if declared != task {
            return Err(CliError::Config(format!(
                "config declares task `{}` but the `{}` subcommand was invoked",
                declared.as_str(),
                task.as_str()
            )));
        }
    }
    config.task = Some(task);
    config.validate_ranges()?;

    let started = std::time::Instant::now();
    let report = tasks::run_experiment(&config)?;
    print!("{}", report.render());
    println!("wall_time_seconds: {:.3}", started.elapsed().as_secs_f64());
    Ok(())
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
