//! Task pipelines behind the subcommands. Each returns the rendered report;
//! artifact files land in the output directory, written atomically.

use std::path::{Path, PathBuf};

use hyperntf_core::embedding::{
    gen_manifold, graph_spectral_embed, hypergraph_spectral_embed, lle_embed,
    neighborhood_preservation, EmbeddingResult, ManifoldKind, PointCloud,
};
use hyperntf_core::evaluation::evaluate_clustering;
use hyperntf_core::factorization::{
    hosvd, hyperntf_solve, ntd_solve, ntf_solve, SolveTrace, SolverConfig,
};
use hyperntf_core::hypergraph::WeightScheme;
use hyperntf_core::tensor::{rse, DenseMatrix, DenseTensor};

use crate::config::{ExperimentConfig, Method, Task};
use crate::error::CliError;
use crate::report::{
    write_coords_csv, write_matrix_csv, write_report, write_trace_csv, RunReport,
};
use crate::tensor_io::{
    import_idx, load_csv_tensor, load_labels, load_tensor, load_tnsr, require_nonnegative,
    save_tnsr, tensor_csv,
};

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport, CliError> {
    match config.task.expect("task set by the caller") {
        Task::Factorize => factorize(config),
        Task::Unfold => unfold(config),
        Task::ClusterEval => cluster_eval(config),
        Task::GenManifold => gen_manifold_task(config),
        Task::Convert => convert(config),
    }
}

fn output_dir(config: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let dir = ExperimentConfig::require(&config.output, "output")?;
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn dims_string(dims: &[usize]) -> String {
    dims.iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

/// Solver settings from the config with the documented defaults: the
/// regularized method defaults to the common protocol values lambda = 4,
/// k = 3; plain NTF pins lambda to 0.
fn solver_config(config: &ExperimentConfig, method: Method) -> SolverConfig {
    let defaults = SolverConfig::default();
    let lambda = match method {
        Method::HyperNtf => config.lambda.unwrap_or(4.0),
        _ => 0.0,
    };
    SolverConfig {
        rank: config.rank.unwrap_or(defaults.rank),
        lambda,
        knn: config.knn.unwrap_or(3),
        max_iter: config.max_iter.unwrap_or(defaults.max_iter),
        tol_rse: config.tol_rse.unwrap_or(defaults.tol_rse),
        tol_obj: config.tol_obj.unwrap_or(defaults.tol_obj),
        seed: config.seed.unwrap_or(0),
        weight_scheme: config.weight_scheme.unwrap_or(WeightScheme::Unit),
        ..defaults
    }
}

fn echo_solver_keys(report: &mut RunReport, sc: &SolverConfig, method: Method) {
    if method.is_factorization() {
        report.push("rank", sc.rank.to_string());
        report.push_f64("lambda", sc.lambda);
        report.push("knn", sc.knn.to_string());
        report.push("max_iter", sc.max_iter.to_string());
        report.push_f64("tol_obj", sc.tol_obj);
        report.push_f64("tol_rse", sc.tol_rse);
        report.push("seed", sc.seed.to_string());
        report.push(
            "weight_scheme",
            match sc.weight_scheme {
                WeightScheme::Unit => "unit",
                WeightScheme::HeatKernel => "heat-kernel",
            },
        );
    }
}

fn mode_ranks(config: &ExperimentConfig, order: usize) -> Result<Vec<usize>, CliError> {
    match (&config.ranks, config.rank) {
        (Some(ranks), _) => {
            if ranks.len() != order {
                return Err(CliError::Config(format!(
                    "ranks has {} entries for an order-{order} tensor",
                    ranks.len()
                )));
            }
            Ok(ranks.clone())
        }
        (None, Some(rank)) => Ok(vec![rank; order]),
        (None, None) => Err(CliError::Config(
            "missing required field `rank` (or `ranks`)".into(),
        )),
    }
}

/// Outcome of a factorization run: the sample-mode embedding plus the trace
/// when the method iterates.
struct FactorOutcome {
    z: DenseMatrix,
    trace: Option<SolveTrace>,
    final_rse: f64,
}

fn run_factorization(
    x: &DenseTensor,
    config: &ExperimentConfig,
    method: Method,
    input: &Path,
) -> Result<FactorOutcome, CliError> {
    if method != Method::Hosvd {
        require_nonnegative(x, input)?;
    }
    match method {
        Method::HyperNtf | Method::Ntf => {
            let sc = solver_config(config, method);
            let (model, trace) = if method == Method::HyperNtf {
                hyperntf_solve(x, &sc)?
            } else {
                ntf_solve(x, &sc)?
            };
            let final_rse = *trace.rse.last().unwrap_or(&f64::NAN);
            Ok(FactorOutcome {
                z: model.z,
                trace: Some(trace),
                final_rse,
            })
        }
        Method::Ntd => {
            let sc = solver_config(config, method);
            let ranks = mode_ranks(config, x.order())?;
            let (model, trace) = ntd_solve(x, &ranks, &sc)?;
            let final_rse = *trace.rse.last().unwrap_or(&f64::NAN);
            Ok(FactorOutcome {
                z: model.sample_factor().clone(),
                trace: Some(trace),
                final_rse,
            })
        }
        Method::Hosvd => {
            let ranks = mode_ranks(config, x.order())?;
            let model = hosvd(x, &ranks)?;
            let recon = model.reconstruct()?;
            Ok(FactorOutcome {
                z: model.sample_factor().clone(),
                trace: None,
                final_rse: rse(x, &recon)?,
            })
        }
        Method::HypergraphLe | Method::GraphLe | Method::Lle => Err(CliError::Config(format!(
            "method `{}` is not a factorization",
            method.as_str()
        ))),
    }
}

fn z_header(cols: usize) -> Vec<String> {
    (1..=cols).map(|j| format!("z{j}")).collect()
}

fn factorize(config: &ExperimentConfig) -> Result<RunReport, CliError> {
    let input = ExperimentConfig::require(&config.input, "input")?;
    let method = ExperimentConfig::require(&config.method, "method")?;
    if !method.is_factorization() {
        return Err(CliError::Config(format!(
            "method `{}` is not a factorization; use the unfold task",
            method.as_str()
        )));
    }
    let dir = output_dir(config)?;
    let x = load_tensor(&input)?;

    let mut report = RunReport::new();
    report.push("task", "factorize");
    report.push("method", method.as_str());
    report.push("input", input.display().to_string());
    report.push("dims", dims_string(x.dims()));
    if matches!(method, Method::Ntd | Method::Hosvd) {
        let ranks = mode_ranks(config, x.order())?;
        report.push(
            "ranks",
            ranks
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        if method == Method::Hosvd {
            report.push("seed", config.seed.unwrap_or(0).to_string());
        }
    }
    let sc = solver_config(config, method);
    if method != Method::Hosvd {
        echo_solver_keys(&mut report, &sc, method);
    }

    let outcome = run_factorization(&x, config, method, &input)?;

    if let Some(trace) = &outcome.trace {
        report.push_trace_summary(trace);
        write_trace_csv(trace, &dir.join("trace.csv"))?;
    } else {
        report.push_f64("final_rse", outcome.final_rse);
    }
    write_matrix_csv(&outcome.z, &z_header(outcome.z.cols()), &dir.join("z.csv"))?;
    let artifacts = if outcome.trace.is_some() {
        "report.txt,z.csv,trace.csv"
    } else {
        "report.txt,z.csv"
    };
    report.push("artifacts", artifacts);
    write_report(&report, &dir)?;
    Ok(report)
}

/// Neighbor-count defaults for the bundled manifolds.
fn default_knn(kind: ManifoldKind) -> usize {
    match kind {
        ManifoldKind::PuncturedSphere => 44,
        ManifoldKind::Gaussian => 25,
        ManifoldKind::TwinPeaks => 15,
        ManifoldKind::ToroidalHelix => 10,
    }
}

/// Point CSV: four or more columns mean the last one is the color tag;
/// otherwise every column is a coordinate and the row index colors.
fn load_points(path: &Path) -> Result<PointCloud, CliError> {
    let rows = crate::tensor_io::read_csv_rows(path)?;
    let m = rows.len();
    let total_cols = rows[0].len();
    let (coord_cols, has_color) = if total_cols >= 4 {
        (total_cols - 1, true)
    } else {
        (total_cols, false)
    };
    let mut points = DenseMatrix::zeros(m, coord_cols);
    let mut color = Vec::with_capacity(m);
    for (i, row) in rows.iter().enumerate() {
        for j in 0..coord_cols {
            points.set(i, j, row[j]);
        }
        color.push(if has_color { row[total_cols - 1] } else { i as f64 });
    }
    Ok(PointCloud { points, color })
}

fn unfold(config: &ExperimentConfig) -> Result<RunReport, CliError> {
    let method = ExperimentConfig::require(&config.method, "method")?;
    if !method.is_embedding() {
        return Err(CliError::Config(format!(
            "method `{}` is not an embedding; use the factorize task",
            method.as_str()
        )));
    }
    let dir = output_dir(config)?;
    let d = config.rank.unwrap_or(2);
    let seed = config.seed.unwrap_or(0);

    let mut report = RunReport::new();
    report.push("task", "unfold");
    report.push("method", method.as_str());

    let (pc, knn) = match (&config.input, config.kind) {
        (Some(path), _) => {
            let knn = ExperimentConfig::require(&config.knn, "knn")?;
            report.push("input", path.display().to_string());
            (load_points(path)?, knn)
        }
        (None, Some(kind)) => {
            let m = config.samples.unwrap_or(1000);
            let noise = config.noise_sd.unwrap_or(0.0);
            let knn = config.knn.unwrap_or_else(|| default_knn(kind));
            report.push("kind", kind.as_str());
            report.push("samples", m.to_string());
            report.push_f64("noise_sd", noise);
            (gen_manifold(kind, m, seed, noise)?, knn)
        }
        (None, None) => {
            return Err(CliError::Config(
                "unfold needs either `input` points or a manifold `kind`".into(),
            ))
        }
    };
    report.push("knn", knn.to_string());
    report.push("rank", d.to_string());
    report.push("seed", seed.to_string());

    let embed: EmbeddingResult = match method {
        Method::HypergraphLe => hypergraph_spectral_embed(&pc, knn, d)?,
        Method::GraphLe => graph_spectral_embed(&pc, knn, d)?,
        Method::Lle => lle_embed(&pc, knn, d)?,
        _ => unreachable!("validated above"),
    };
    let preservation = neighborhood_preservation(&pc, &embed, knn)?;
    report.push_f64("preservation", preservation);

    let names: Vec<String> = (1..=d).map(|j| format!("e{j}")).collect();
    write_coords_csv(&embed.coords, &pc.color, &names, &dir.join("embedding.csv"))?;
    report.push("artifacts", "report.txt,embedding.csv");
    write_report(&report, &dir)?;
    Ok(report)
}

fn cluster_eval(config: &ExperimentConfig) -> Result<RunReport, CliError> {
    let method = ExperimentConfig::require(&config.method, "method")?;
    if !method.is_factorization() {
        return Err(CliError::Config(format!(
            "method `{}` cannot produce reduced data for cluster-eval",
            method.as_str()
        )));
    }
    let dir = output_dir(config)?;
    let seed = config.seed.unwrap_or(0);
    let runs = config.runs.unwrap_or(10);

    let mut report = RunReport::new();
    report.push("task", "cluster-eval");
    report.push("method", method.as_str());

    let (x, truth, input_path) = match (&config.images, &config.input) {
        (Some(images), _) => {
            let labels = ExperimentConfig::require(&config.labels, "labels")?;
            let limit = config.limit.unwrap_or(0);
            report.push("images", images.display().to_string());
            report.push("labels", labels.display().to_string());
            if limit > 0 {
                report.push("limit", limit.to_string());
            }
            let (x, truth) = import_idx(images, &labels, limit, seed)?;
            (x, truth, images.clone())
        }
        (None, Some(input)) => {
            let labels = ExperimentConfig::require(&config.labels, "labels")?;
            report.push("input", input.display().to_string());
            report.push("labels", labels.display().to_string());
            let x = load_tensor(input)?;
            let truth = load_labels(&labels)?;
            (x, truth, input.clone())
        }
        (None, None) => {
            return Err(CliError::Config(
                "cluster-eval needs `input` or `images`".into(),
            ))
        }
    };
    let m = *x.dims().last().expect("nonempty dims");
    if truth.len() != m {
        return Err(CliError::Data(format!(
            "{} labels for {m} samples",
            truth.len()
        )));
    }
    report.push("dims", dims_string(x.dims()));

    let sc = solver_config(config, method);
    echo_solver_keys(&mut report, &sc, method);
    report.push("runs", runs.to_string());

    let outcome = run_factorization(&x, config, method, &input_path)?;
    if let Some(trace) = &outcome.trace {
        report.push_trace_summary(trace);
        write_trace_csv(trace, &dir.join("trace.csv"))?;
    } else {
        report.push_f64("final_rse", outcome.final_rse);
    }

    let classes = truth.iter().max().map(|&c| c + 1).unwrap_or(1);
    let cluster = evaluate_clustering(&outcome.z, &truth, classes, runs, seed)?;
    report.push("classes", classes.to_string());
    report.push_f64("acc_mean", cluster.acc_mean);
    report.push_f64("acc_std", cluster.acc_std);
    report.push_f64("nmi_mean", cluster.nmi_mean);
    report.push_f64("nmi_std", cluster.nmi_std);

    write_matrix_csv(&outcome.z, &z_header(outcome.z.cols()), &dir.join("z.csv"))?;
    let artifacts = if outcome.trace.is_some() {
        "report.txt,z.csv,trace.csv"
    } else {
        "report.txt,z.csv"
    };
    report.push("artifacts", artifacts);
    write_report(&report, &dir)?;
    Ok(report)
}

fn gen_manifold_task(config: &ExperimentConfig) -> Result<RunReport, CliError> {
    let kind = ExperimentConfig::require(&config.kind, "kind")?;
    let dir = output_dir(config)?;
    let m = config.samples.unwrap_or(1000);
    let noise = config.noise_sd.unwrap_or(0.0);
    let seed = config.seed.unwrap_or(0);
    let pc = gen_manifold(kind, m, seed, noise)?;

    let names = vec!["x".to_string(), "y".to_string(), "z".to_string()];
    write_coords_csv(&pc.points, &pc.color, &names, &dir.join("points.csv"))?;

    let mut report = RunReport::new();
    report.push("task", "gen-manifold");
    report.push("kind", kind.as_str());
    report.push("samples", m.to_string());
    report.push_f64("noise_sd", noise);
    report.push("seed", seed.to_string());
    report.push("artifacts", "report.txt,points.csv");
    write_report(&report, &dir)?;
    Ok(report)
}

fn convert(config: &ExperimentConfig) -> Result<RunReport, CliError> {
    let input = ExperimentConfig::require(&config.input, "input")?;
    let output = ExperimentConfig::require(&config.output, "output")?;
    let ext = |p: &Path| {
        p.extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase()
    };
    match (ext(&input).as_str(), ext(&output).as_str()) {
        ("csv", "tnsr") => {
            let t = load_csv_tensor(&input)?;
            save_tnsr(&t, &output)?;
        }
        ("tnsr", "csv") => {
            let t = load_tnsr(&input)?;
            crate::report::atomic_write(&output, tensor_csv(&t)?.as_bytes())?;
        }
        (a, b) => {
            return Err(CliError::Config(format!(
                "cannot convert `.{a}` to `.{b}`; supported: csv<->tnsr"
            )))
        }
    }
    let mut report = RunReport::new();
    report.push("task", "convert");
    report.push("input", input.display().to_string());
    report.push("artifacts", output.display().to_string());
    Ok(report)
}
