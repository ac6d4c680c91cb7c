//! Thin wasm-bindgen layer over the core crate for the browser demo page.
//! Three operations: sample a synthetic manifold, unfold it to 2-D by one of
//! the three embedding routes, and run the regularized factorization on a
//! synthetic clustered tensor to watch the objective fall.
//!
//! Build with `wasm-pack build crates/wasm-demo --target web` and serve the
//! `www/` directory (see the README).

use wasm_bindgen::prelude::*;

use hyperntf_core::embedding::{
    gen_manifold, graph_spectral_embed, hypergraph_spectral_embed, lle_embed,
    neighborhood_preservation, ManifoldKind, PointCloud,
};
use hyperntf_core::evaluation::evaluate_clustering;
use hyperntf_core::factorization::{hyperntf_solve, SolverConfig};
use hyperntf_core::synthetic::blob_tensor;

fn parse_kind(kind: &str) -> Result<ManifoldKind, String> {
    kind.parse::<ManifoldKind>().map_err(|e| e.to_string())
}

/// Flattened point cloud: xyz triples plus a color scalar per point.
#[wasm_bindgen]
pub struct ManifoldData {
    points: Vec<f64>,
    color: Vec<f64>,
}

#[wasm_bindgen]
impl ManifoldData {
    #[wasm_bindgen(getter)]
    pub fn points(&self) -> Vec<f64> {
        self.points.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn color(&self) -> Vec<f64> {
        self.color.clone()
    }
}

fn flatten_cloud(pc: &PointCloud) -> ManifoldData {
    let m = pc.len();
    let mut points = Vec::with_capacity(3 * m);
    for i in 0..m {
        for d in 0..3 {
            points.push(pc.points.get(i, d));
        }
    }
    ManifoldData {
        points,
        color: pc.color.clone(),
    }
}

fn build_manifold(
    kind: &str,
    samples: usize,
    seed: u32,
    noise_sd: f64,
) -> Result<PointCloud, String> {
    gen_manifold(parse_kind(kind)?, samples, seed as u64, noise_sd).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn generate_manifold(
    kind: &str,
    samples: usize,
    seed: u32,
    noise_sd: f64,
) -> Result<ManifoldData, JsError> {
    let pc = build_manifold(kind, samples, seed, noise_sd).map_err(|e| JsError::new(&e))?;
    Ok(flatten_cloud(&pc))
}

/// 2-D embedding with its provenance: xy pairs, color, neighborhood
/// preservation score, and the original 3-D points for side-by-side display.
#[wasm_bindgen]
pub struct UnfoldData {
    coords: Vec<f64>,
    color: Vec<f64>,
    points: Vec<f64>,
    preservation: f64,
}

#[wasm_bindgen]
impl UnfoldData {
    #[wasm_bindgen(getter)]
    pub fn coords(&self) -> Vec<f64> {
        self.coords.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn color(&self) -> Vec<f64> {
        self.color.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn points(&self) -> Vec<f64> {
        self.points.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn preservation(&self) -> f64 {
        self.preservation
    }
}

fn unfold_impl(
    kind: &str,
    samples: usize,
    k: usize,
    method: &str,
    seed: u32,
    noise_sd: f64,
) -> Result<UnfoldData, String> {
    let pc = build_manifold(kind, samples, seed, noise_sd)?;
    let embed = match method {
        "hypergraph-le" => hypergraph_spectral_embed(&pc, k, 2),
        "graph-le" => graph_spectral_embed(&pc, k, 2),
        "lle" => lle_embed(&pc, k, 2),
        other => return Err(format!("unknown method `{other}`")),
    }
    .map_err(|e| e.to_string())?;
    let preservation = neighborhood_preservation(&pc, &embed, k).map_err(|e| e.to_string())?;
    let m = pc.len();
    let mut coords = Vec::with_capacity(2 * m);
    for i in 0..m {
        coords.push(embed.coords.get(i, 0));
        coords.push(embed.coords.get(i, 1));
    }
    let cloud = flatten_cloud(&pc);
    Ok(UnfoldData {
        coords,
        color: cloud.color,
        points: cloud.points,
        preservation,
    })
}

#[wasm_bindgen]
pub fn unfold_manifold(
    kind: &str,
    samples: usize,
    k: usize,
    method: &str,
    seed: u32,
    noise_sd: f64,
) -> Result<UnfoldData, JsError> {
    unfold_impl(kind, samples, k, method, seed, noise_sd).map_err(|e| JsError::new(&e))
}

/// Factorization run on a synthetic clustered tensor: per-sweep objective and
/// reconstruction error, the two widest reduced-data columns for plotting,
/// ground-truth labels, and clustering scores.
#[wasm_bindgen]
pub struct FactorizationData {
    objective: Vec<f64>,
    rse: Vec<f64>,
    z: Vec<f64>,
    labels: Vec<u32>,
    acc_mean: f64,
    nmi_mean: f64,
    iterations: usize,
}

#[wasm_bindgen]
impl FactorizationData {
    #[wasm_bindgen(getter)]
    pub fn objective(&self) -> Vec<f64> {
        self.objective.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn rse(&self) -> Vec<f64> {
        self.rse.clone()
    }

    /// xy pairs: the two reduced-data columns with the largest variance.
    #[wasm_bindgen(getter)]
    pub fn z(&self) -> Vec<f64> {
        self.z.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn labels(&self) -> Vec<u32> {
        self.labels.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn acc_mean(&self) -> f64 {
        self.acc_mean
    }

    #[wasm_bindgen(getter)]
    pub fn nmi_mean(&self) -> f64 {
        self.nmi_mean
    }

    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

fn factorization_impl(
    classes: usize,
    per_class: usize,
    rank: usize,
    lambda: f64,
    knn: usize,
    max_iter: usize,
    seed: u32,
) -> Result<FactorizationData, String> {
    if !(2..=8).contains(&classes) || !(3..=200).contains(&per_class) {
        return Err("classes must be 2..=8, per_class 3..=200".into());
    }
    let (x, truth) = blob_tensor(6, 6, classes, per_class, 0.08, seed as u64);
    let config = SolverConfig {
        rank,
        lambda,
        knn,
        max_iter,
        seed: seed as u64,
        ..SolverConfig::default()
    };
    let (model, trace) = hyperntf_solve(&x, &config).map_err(|e| e.to_string())?;
    let report =
        evaluate_clustering(&model.z, &truth, classes, 10, seed as u64).map_err(|e| e.to_string())?;

    // pick the two widest columns of Z for the scatter
    let m = model.z.rows();
    let mut spread: Vec<(f64, usize)> = (0..model.z.cols())
        .map(|j| {
            let col = model.z.col(j);
            let mean: f64 = col.iter().sum::<f64>() / m as f64;
            let var: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
            (var, j)
        })
        .collect();
    spread.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let cx = spread[0].1;
    let cy = spread.get(1).map(|&(_, j)| j).unwrap_or(cx);
    let mut z = Vec::with_capacity(2 * m);
    for i in 0..m {
        z.push(model.z.get(i, cx));
        z.push(model.z.get(i, cy));
    }
    Ok(FactorizationData {
        objective: trace.objective.clone(),
        rse: trace.rse.clone(),
        z,
        labels: truth.iter().map(|&l| l as u32).collect(),
        acc_mean: report.acc_mean,
        nmi_mean: report.nmi_mean,
        iterations: trace.iterations(),
    })
}

#[wasm_bindgen]
pub fn factorization_demo(
    classes: usize,
    per_class: usize,
    rank: usize,
    lambda: f64,
    knn: usize,
    max_iter: usize,
    seed: u32,
) -> Result<FactorizationData, JsError> {
    factorization_impl(classes, per_class, rank, lambda, knn, max_iter, seed)
        .map_err(|e| JsError::new(&e))
}
