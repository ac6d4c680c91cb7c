//! k-NN hypergraphs and graphs over samples, their degree structure, and the
//! hypergraph Laplacian `L = D_V - H W D_E^{-1} H^T`.
//!
//! One hyperedge is grown per sample: the sample itself plus its k nearest
//! neighbors, so every edge degree is k+1. The incidence matrix is kept in
//! factored sparse form (vertex lists per edge); the dense Laplacian is only
//! materialized on request, and the solver-facing operations
//! ([`Hypergraph::penalty`], [`Hypergraph::smooth`]) stay on the sparse path.

use crate::error::Error;
use crate::tensor::DenseMatrix;
use crate::Result;

/// Per-sample nearest neighbors, sorted by distance (ties broken toward the
/// lower sample index). A sample is never its own neighbor.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    pub neighbors: Vec<Vec<(usize, f64)>>,
}

impl NeighborIndex {
    pub fn k(&self) -> usize {
        self.neighbors.first().map(|n| n.len()).unwrap_or(0)
    }
}

/// Hyperedge weighting scheme for [`build_knn_hypergraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightScheme {
    /// All hyperedges weigh 1.
    #[default]
    Unit,
    /// Mean heat-kernel affinity `exp(-d^2 / sigma^2)` over vertex pairs in
    /// the edge, with `sigma` the median pairwise sample distance.
    HeatKernel,
}

impl std::str::FromStr for WeightScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(WeightScheme::Unit),
            "heat-kernel" => Ok(WeightScheme::HeatKernel),
            other => Err(Error::invalid(format!("unknown weight scheme `{other}`"))),
        }
    }
}

/// Undirected hypergraph in incidence form.
#[derive(Debug, Clone)]
pub struct Hypergraph {
    num_vertices: usize,
    /// Sorted, deduplicated vertex ids per hyperedge.
    edges: Vec<Vec<usize>>,
    /// Positive weight per hyperedge.
    weights: Vec<f64>,
    /// d_V(i) = sum over edges containing i of w(e).
    vertex_degrees: Vec<f64>,
    /// d_E(e) = number of vertices in e.
    edge_degrees: Vec<f64>,
}

impl Hypergraph {
    /// Assemble from explicit edge lists and weights, recomputing degrees.
    pub fn new(num_vertices: usize, edges: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self> {
        if edges.len() != weights.len() {
            return Err(Error::invalid("one weight per hyperedge required"));
        }
        let mut norm_edges = Vec::with_capacity(edges.len());
        for (e, mut verts) in edges.into_iter().enumerate() {
            verts.sort_unstable();
            verts.dedup();
            if verts.len() < 2 {
                return Err(Error::invalid(format!(
                    "hyperedge {e} has fewer than 2 vertices"
                )));
            }
            if let Some(&v) = verts.last() {
                if v >= num_vertices {
                    return Err(Error::invalid(format!(
                        "hyperedge {e} references vertex {v} out of range"
                    )));
                }
            }
            norm_edges.push(verts);
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::invalid("hyperedge weights must be positive"));
        }
        let mut vertex_degrees = vec![0.0; num_vertices];
        let mut edge_degrees = Vec::with_capacity(norm_edges.len());
        for (verts, &w) in norm_edges.iter().zip(&weights) {
            edge_degrees.push(verts.len() as f64);
            for &v in verts {
                vertex_degrees[v] += w;
            }
        }
        Ok(Hypergraph {
            num_vertices,
            edges: norm_edges,
            weights,
            vertex_degrees,
            edge_degrees,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn vertex_degrees(&self) -> &[f64] {
        &self.vertex_degrees
    }

    pub fn edge_degrees(&self) -> &[f64] {
        &self.edge_degrees
    }

    /// Dense incidence matrix H (num_vertices x num_edges, 0/1 entries).
    pub fn incidence(&self) -> DenseMatrix {
        let mut h = DenseMatrix::zeros(self.num_vertices, self.edges.len());
        for (e, verts) in self.edges.iter().enumerate() {
            for &v in verts {
                h.set(v, e, 1.0);
            }
        }
        h
    }

    /// `tr(Z^T L Z)` evaluated through the factored form, never touching the
    /// dense Laplacian:
    /// `sum_i d_V(i) ||Z_i||^2 - sum_e (w_e / d_E(e)) ||sum_{i in e} Z_i||^2`.
    pub fn penalty(&self, z: &DenseMatrix) -> Result<f64> {
        if z.rows() != self.num_vertices {
            return Err(Error::invalid(format!(
                "penalty expects {} rows, got {}",
                self.num_vertices,
                z.rows()
            )));
        }
        let j = z.cols();
        let mut acc = 0.0;
        for col in 0..j {
            let zc = z.col(col);
            for (i, &d) in self.vertex_degrees.iter().enumerate() {
                acc += d * zc[i] * zc[i];
            }
            for (e, verts) in self.edges.iter().enumerate() {
                let mut s = 0.0;
                for &v in verts {
                    s += zc[v];
                }
                acc -= self.weights[e] / self.edge_degrees[e] * s * s;
            }
        }
        Ok(acc)
    }

    /// `H W D_E^{-1} H^T Z` via per-edge accumulation (the positive part of
    /// the Laplacian action), O(sum of edge sizes * cols).
    pub fn smooth(&self, z: &DenseMatrix) -> Result<DenseMatrix> {
        if z.rows() != self.num_vertices {
            return Err(Error::invalid(format!(
                "smooth expects {} rows, got {}",
                self.num_vertices,
                z.rows()
            )));
        }
        let mut out = DenseMatrix::zeros(z.rows(), z.cols());
        for col in 0..z.cols() {
            let zc = z.col(col);
            let oc = out.col_mut(col);
            for (e, verts) in self.edges.iter().enumerate() {
                let mut s = 0.0;
                for &v in verts {
                    s += zc[v];
                }
                let scale = self.weights[e] / self.edge_degrees[e];
                let add = scale * s;
                for &v in verts {
                    oc[v] += add;
                }
            }
        }
        Ok(out)
    }
}

/// Brute-force exact k-nearest-neighbor search under Euclidean distance.
/// Ties resolve toward the lower sample index, making results deterministic.
pub fn knn_search(samples: &[Vec<f64>], k: usize) -> Result<NeighborIndex> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::invalid("knn_search needs at least 2 samples"));
    }
    if k < 1 || k > m - 1 {
        return Err(Error::invalid(format!(
            "k = {k} out of range 1..={}",
            m - 1
        )));
    }
    let dim = samples[0].len();
    if samples.iter().any(|s| s.len() != dim) {
        return Err(Error::invalid("samples must share a dimension"));
    }
    let mut neighbors = Vec::with_capacity(m);
    let mut dists: Vec<(f64, usize)> = Vec::with_capacity(m - 1);
    for i in 0..m {
        dists.clear();
        for (l, other) in samples.iter().enumerate() {
            if l == i {
                continue;
            }
            let mut d2 = 0.0;
            for (a, b) in samples[i].iter().zip(other) {
                let d = a - b;
                d2 += d * d;
            }
            dists.push((d2.sqrt(), l));
        }
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        neighbors.push(dists[..k].iter().map(|&(d, l)| (l, d)).collect());
    }
    Ok(NeighborIndex { neighbors })
}

/// One hyperedge per sample: the sample plus its k nearest neighbors, so
/// every edge degree is k+1 and E = M.
pub fn build_knn_hypergraph(
    samples: &[Vec<f64>],
    k: usize,
    scheme: WeightScheme,
) -> Result<Hypergraph> {
    let index = knn_search(samples, k)?;
    let m = samples.len();
    let mut edges = Vec::with_capacity(m);
    for (i, nbrs) in index.neighbors.iter().enumerate() {
        let mut verts: Vec<usize> = Vec::with_capacity(k + 1);
        verts.push(i);
        verts.extend(nbrs.iter().map(|&(l, _)| l));
        edges.push(verts);
    }
    let weights = match scheme {
        WeightScheme::Unit => vec![1.0; m],
        WeightScheme::HeatKernel => {
            let sigma = median_pairwise_distance(samples);
            let sigma2 = if sigma > 0.0 { sigma * sigma } else { 1.0 };
            edges
                .iter()
                .map(|verts| {
                    let mut acc = 0.0;
                    let mut count = 0usize;
                    for (a, &va) in verts.iter().enumerate() {
                        for &vb in verts.iter().skip(a + 1) {
                            let mut d2 = 0.0;
                            for (x, y) in samples[va].iter().zip(&samples[vb]) {
                                let d = x - y;
                                d2 += d * d;
                            }
                            acc += (-d2 / sigma2).exp();
                            count += 1;
                        }
                    }
                    acc / count as f64
                })
                .collect()
        }
    };
    Hypergraph::new(m, edges, weights)
}

fn median_pairwise_distance(samples: &[Vec<f64>]) -> f64 {
    let m = samples.len();
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            let mut d2 = 0.0;
            for (a, b) in samples[i].iter().zip(&samples[j]) {
                let d = a - b;
                d2 += d * d;
            }
            dists.push(d2.sqrt());
        }
    }
    let mid = dists.len() / 2;
    let (_, med, _) = dists.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap());
    *med
}

/// Symmetric 0/1 k-NN adjacency: `w_ij = 1` iff i is among the k nearest of j
/// or vice versa. Zero diagonal.
pub fn build_knn_graph(samples: &[Vec<f64>], k: usize) -> Result<DenseMatrix> {
    let index = knn_search(samples, k)?;
    let m = samples.len();
    let mut w = DenseMatrix::zeros(m, m);
    for (i, nbrs) in index.neighbors.iter().enumerate() {
        for &(l, _) in nbrs {
            w.set(i, l, 1.0);
            w.set(l, i, 1.0);
        }
    }
    Ok(w)
}

/// Dense hypergraph Laplacian `D_V - H W D_E^{-1} H^T`.
pub fn hypergraph_laplacian(g: &Hypergraph) -> DenseMatrix {
    let m = g.num_vertices();
    let mut l = DenseMatrix::zeros(m, m);
    for (i, &d) in g.vertex_degrees().iter().enumerate() {
        l.set(i, i, d);
    }
    for (e, verts) in g.edges().iter().enumerate() {
        let scale = g.weights()[e] / g.edge_degrees()[e];
        for &a in verts {
            for &b in verts {
                let v = l.get(a, b) - scale;
                l.set(a, b, v);
            }
        }
    }
    l
}

/// Graph Laplacian `D - W` for a symmetric weight matrix.
pub fn graph_laplacian(w: &DenseMatrix) -> Result<DenseMatrix> {
    if w.rows() != w.cols() {
        return Err(Error::invalid("graph Laplacian needs a square matrix"));
    }
    let m = w.rows();
    let mut l = DenseMatrix::zeros(m, m);
    for i in 0..m {
        let mut degree = 0.0;
        for j in 0..m {
            degree += w.get(i, j);
            l.set(i, j, -w.get(i, j));
        }
        l.set(i, i, degree - w.get(i, i));
    }
    Ok(l)
}

/// `tr(Z^T L Z)` for a dense Laplacian; equals the pairwise half-sum
/// `1/2 sum_e sum_{i,j} w(e) h(i,e) h(j,e) / d_E(e) * ||Z_i - Z_j||^2`.
pub fn regularizer_value(l: &DenseMatrix, z: &DenseMatrix) -> Result<f64> {
    if l.rows() != l.cols() || l.rows() != z.rows() {
        return Err(Error::invalid(format!(
            "regularizer shapes: L is {}x{}, Z is {}x{}",
            l.rows(),
            l.cols(),
            z.rows(),
            z.cols()
        )));
    }
    let m = l.rows();
    let mut acc = 0.0;
    for col in 0..z.cols() {
        let zc = z.col(col);
        for j in 0..m {
            let lc = l.col(j);
            let mut s = 0.0;
            for i in 0..m {
                s += lc[i] * zc[i];
            }
            acc += zc[j] * s;
        }
    }
    Ok(acc)
}
