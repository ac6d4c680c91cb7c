//! Synthetic 3-D manifold generators and low-dimensional unfolding by three
//! routes: hypergraph-Laplacian spectral embedding, graph-Laplacian
//! eigenmaps, and locally linear embedding. A neighborhood-preservation score
//! quantifies how much local structure an embedding keeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::factorization::fix_sign;
use crate::hypergraph::{
    build_knn_graph, build_knn_hypergraph, graph_laplacian, hypergraph_laplacian, knn_search,
    WeightScheme,
};
use crate::linalg::eigh;
use crate::synthetic::standard_normal;
use crate::tensor::DenseMatrix;
use crate::Result;

/// Points with a scalar tag per sample carried along for plotting, so the
/// geometric correspondence between input and embedding stays visible.
#[derive(Debug, Clone)]
pub struct PointCloud {
    /// M x D matrix, rows are samples.
    pub points: DenseMatrix,
    pub color: Vec<f64>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn rows_vec(&self) -> Vec<Vec<f64>> {
        (0..self.points.rows()).map(|i| self.points.row(i)).collect()
    }
}

/// Which family of synthetic surface to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldKind {
    PuncturedSphere,
    Gaussian,
    TwinPeaks,
    ToroidalHelix,
}

impl ManifoldKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ManifoldKind::PuncturedSphere => "punctured_sphere",
            ManifoldKind::Gaussian => "gaussian",
            ManifoldKind::TwinPeaks => "twin_peaks",
            ManifoldKind::ToroidalHelix => "toroidal_helix",
        }
    }
}

impl std::str::FromStr for ManifoldKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "punctured_sphere" => Ok(ManifoldKind::PuncturedSphere),
            "gaussian" => Ok(ManifoldKind::Gaussian),
            "twin_peaks" => Ok(ManifoldKind::TwinPeaks),
            "toroidal_helix" => Ok(ManifoldKind::ToroidalHelix),
            other => Err(Error::invalid(format!("unknown manifold kind `{other}`"))),
        }
    }
}

/// Embedding method tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedMethod {
    HypergraphLaplacian,
    GraphLaplacian,
    Lle,
}

impl EmbedMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            EmbedMethod::HypergraphLaplacian => "hypergraph-le",
            EmbedMethod::GraphLaplacian => "graph-le",
            EmbedMethod::Lle => "lle",
        }
    }
}

/// Low-dimensional coordinates plus the spectral bookkeeping behind them.
#[derive(Debug, Clone)]
pub struct EmbeddingResult {
    /// M x d coordinates; columns follow ascending retained eigenvalues.
    pub coords: DenseMatrix,
    pub method: EmbedMethod,
    /// The eigenvalues whose eigenvectors were kept, ascending.
    pub eigenvalues: Vec<f64>,
}

fn punctured_sphere_point(px: f64, py: f64) -> [f64; 3] {
    let a = 4.0 / (4.0 + px * px + py * py);
    [a * px, a * py, 2.0 * (1.0 - a)]
}

fn gaussian_point(x: f64, y: f64) -> [f64; 3] {
    [x, y, (-(x * x + y * y) / 2.0).exp()]
}

fn twin_peaks_point(x: f64, y: f64) -> [f64; 3] {
    [x, y, (std::f64::consts::PI * x).sin() * (3.0 * y).tanh()]
}

fn toroidal_helix_point(t: f64) -> [f64; 3] {
    let r = 2.0 + (8.0 * t).cos();
    [r * t.cos(), r * t.sin(), (8.0 * t).sin()]
}

/// Sample `m` points from a synthetic surface, optionally jittered by
/// isotropic Gaussian noise. The color channel tracks the natural parameter
/// (the curve parameter for the helix, height for the surfaces).
pub fn gen_manifold(kind: ManifoldKind, m: usize, seed: u64, noise_sd: f64) -> Result<PointCloud> {
    if m < 4 {
        return Err(Error::invalid("need at least 4 samples"));
    }
    if noise_sd < 0.0 {
        return Err(Error::invalid("noise_sd must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = DenseMatrix::zeros(m, 3);
    let mut color = Vec::with_capacity(m);
    for i in 0..m {
        let (p, c) = match kind {
            ManifoldKind::PuncturedSphere => {
                // area-uniform draw from the radius-5 disk
                let r = 5.0 * rng.random_range(0.0..1.0f64).sqrt();
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                let p = punctured_sphere_point(r * theta.cos(), r * theta.sin());
                (p, p[2])
            }
            ManifoldKind::Gaussian => {
                let x = rng.random_range(-2.0..2.0);
                let y = rng.random_range(-2.0..2.0);
                let p = gaussian_point(x, y);
                (p, p[2])
            }
            ManifoldKind::TwinPeaks => {
                let x = rng.random_range(-1.0..1.0);
                let y = rng.random_range(-1.0..1.0);
                let p = twin_peaks_point(x, y);
                (p, p[2])
            }
            ManifoldKind::ToroidalHelix => {
                let t = rng.random_range(0.0..std::f64::consts::TAU);
                (toroidal_helix_point(t), t)
            }
        };
        for d in 0..3 {
            points.set(i, d, p[d]);
        }
        color.push(c);
    }
    if noise_sd > 0.0 {
        for i in 0..m {
            for d in 0..3 {
                let v = points.get(i, d) + noise_sd * standard_normal(&mut rng);
                points.set(i, d, v);
            }
        }
    }
    Ok(PointCloud { points, color })
}

fn validate_embed_dims(m: usize, d: usize) -> Result<()> {
    if d < 1 || d + 2 > m {
        return Err(Error::invalid(format!(
            "embedding dimension {d} out of range 1..={} for {m} samples",
            m.saturating_sub(2)
        )));
    }
    Ok(())
}

/// Shared spectral tail: eigendecompose a Laplacian, drop the (near-)zero
/// eigenvalues, keep the next `d` eigenvectors with a deterministic sign.
fn spectral_from_laplacian(
    l: &DenseMatrix,
    d: usize,
    method: EmbedMethod,
) -> Result<EmbeddingResult> {
    let m = l.rows();
    let (vals, vecs) = eigh(l)?;
    let max_eig = vals.last().copied().unwrap_or(0.0).max(0.0);
    let cutoff = 1e-8 * max_eig;
    let zeros = vals.iter().filter(|&&v| v < cutoff).count().max(1);
    let available = m - zeros;
    if available < d {
        return Err(Error::DegenerateSpectrum {
            components: zeros,
            available,
            requested: d,
        });
    }
    let mut coords = DenseMatrix::zeros(m, d);
    let mut eigenvalues = Vec::with_capacity(d);
    for j in 0..d {
        coords.col_mut(j).copy_from_slice(vecs.col(zeros + j));
        fix_sign(coords.col_mut(j));
        eigenvalues.push(vals[zeros + j]);
    }
    Ok(EmbeddingResult {
        coords,
        method,
        eigenvalues,
    })
}

/// Spectral embedding through the k-NN hypergraph Laplacian
/// `D_V - H W D_E^{-1} H^T` (unit edge weights).
pub fn hypergraph_spectral_embed(pc: &PointCloud, k: usize, d: usize) -> Result<EmbeddingResult> {
    validate_embed_dims(pc.len(), d)?;
    let samples = pc.rows_vec();
    let g = build_knn_hypergraph(&samples, k, WeightScheme::Unit)?;
    let l = hypergraph_laplacian(&g);
    spectral_from_laplacian(&l, d, EmbedMethod::HypergraphLaplacian)
}

/// Laplacian eigenmaps over the symmetric 0/1 k-NN graph.
pub fn graph_spectral_embed(pc: &PointCloud, k: usize, d: usize) -> Result<EmbeddingResult> {
    validate_embed_dims(pc.len(), d)?;
    let samples = pc.rows_vec();
    let w = build_knn_graph(&samples, k)?;
    let l = graph_laplacian(&w)?;
    spectral_from_laplacian(&l, d, EmbedMethod::GraphLaplacian)
}

/// Reconstruction weight rows for LLE: for each sample, the affine weights
/// over its k nearest neighbors minimizing the reconstruction residual, local
/// Gram regularized by `1e-3 * trace / k`.
pub(crate) fn lle_weight_rows(samples: &[Vec<f64>], k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    lle_weight_rows_with_reg(samples, k, 1e-3)
}

fn lle_weight_rows_with_reg(
    samples: &[Vec<f64>],
    k: usize,
    reg_factor: f64,
) -> Result<Vec<Vec<(usize, f64)>>> {
    let index = knn_search(samples, k)?;
    let mut rows = Vec::with_capacity(samples.len());
    for (i, nbrs) in index.neighbors.iter().enumerate() {
        let mut gram = DenseMatrix::zeros(k, k);
        for (a, &(na, _)) in nbrs.iter().enumerate() {
            for (b, &(nb, _)) in nbrs.iter().enumerate() {
                let mut s = 0.0;
                for ((xa, xb), xi) in samples[na].iter().zip(&samples[nb]).zip(&samples[i]) {
                    s += (xi - xa) * (xi - xb);
                }
                gram.set(a, b, s);
            }
        }
        let trace: f64 = (0..k).map(|a| gram.get(a, a)).sum();
        let reg = reg_factor * trace / k as f64;
        for a in 0..k {
            let v = gram.get(a, a) + reg;
            gram.set(a, a, v);
        }
        let w = crate::linalg::solve(&gram, &vec![1.0; k]).map_err(|_| Error::NumericFailure {
            point: i,
            detail: "singular local Gram in LLE weight solve".into(),
        })?;
        let total: f64 = w.iter().sum();
        if total == 0.0 || !total.is_finite() {
            return Err(Error::NumericFailure {
                point: i,
                detail: "LLE weights do not normalize".into(),
            });
        }
        rows.push(
            nbrs.iter()
                .zip(&w)
                .map(|(&(n, _), &wv)| (n, wv / total))
                .collect(),
        );
    }
    Ok(rows)
}

/// Locally linear embedding: per-point affine reconstruction weights over the
/// k-NN, then the eigenvectors 2..d+1 of `(I - W)^T (I - W)`.
pub fn lle_embed(pc: &PointCloud, k: usize, d: usize) -> Result<EmbeddingResult> {
    let m = pc.len();
    validate_embed_dims(m, d)?;
    let samples = pc.rows_vec();
    let rows = lle_weight_rows(&samples, k)?;

    // E = (I - W)^T (I - W) assembled from the sparse weight rows
    let mut e = DenseMatrix::zeros(m, m);
    for i in 0..m {
        e.set(i, i, 1.0);
    }
    for (i, row) in rows.iter().enumerate() {
        for &(j, w) in row {
            let v = e.get(i, j) - w;
            e.set(i, j, v);
            let v = e.get(j, i) - w;
            e.set(j, i, v);
        }
        for &(j1, w1) in row {
            for &(j2, w2) in row {
                let v = e.get(j1, j2) + w1 * w2;
                e.set(j1, j2, v);
            }
        }
    }

    let (vals, vecs) = eigh(&e)?;
    let mut coords = DenseMatrix::zeros(m, d);
    let mut eigenvalues = Vec::with_capacity(d);
    for j in 0..d {
        coords.col_mut(j).copy_from_slice(vecs.col(1 + j));
        fix_sign(coords.col_mut(j));
        eigenvalues.push(vals[1 + j]);
    }
    Ok(EmbeddingResult {
        coords,
        method: EmbedMethod::Lle,
        eigenvalues,
    })
}

/// Mean over samples of the fraction of k-nearest neighbors shared between
/// the high-dimensional points and the embedding.
pub fn neighborhood_preservation(
    high: &PointCloud,
    low: &EmbeddingResult,
    k: usize,
) -> Result<f64> {
    let m = high.len();
    if low.coords.rows() != m {
        return Err(Error::invalid(format!(
            "size mismatch: {} high points vs {} embedded",
            m,
            low.coords.rows()
        )));
    }
    let high_idx = knn_search(&high.rows_vec(), k)?;
    let low_rows: Vec<Vec<f64>> = (0..m).map(|i| low.coords.row(i)).collect();
    let low_idx = knn_search(&low_rows, k)?;
    let mut total = 0.0;
    for i in 0..m {
        let a: std::collections::HashSet<usize> =
            high_idx.neighbors[i].iter().map(|&(n, _)| n).collect();
        let shared = low_idx.neighbors[i]
            .iter()
            .filter(|&&(n, _)| a.contains(&n))
            .count();
        total += shared as f64 / k as f64;
    }
    Ok(total / m as f64)
}
