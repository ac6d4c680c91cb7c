//! Clustering and scoring over reduced data: seeded k-means (k-means++ start,
//! Lloyd iterations), clustering accuracy by optimal label assignment, and
//! normalized mutual information, with a repeated-run harness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::tensor::DenseMatrix;
use crate::Result;

/// Per-run and aggregated clustering scores. Standard deviations are
/// population deviations over the runs, so a single run reports zero.
#[derive(Debug, Clone)]
pub struct ClusterReport {
    pub runs: usize,
    pub seeds: Vec<u64>,
    pub acc: Vec<f64>,
    pub nmi: Vec<f64>,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub nmi_mean: f64,
    pub nmi_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn row_dist2(z: &DenseMatrix, i: usize, center: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (d, &c) in center.iter().enumerate() {
        let diff = z.get(i, d) - c;
        acc += diff * diff;
    }
    acc
}

/// Lloyd's k-means over the rows of `z` with k-means++ seeding. Empty
/// clusters are re-seeded to the point farthest from its assigned centroid.
/// Deterministic for a given seed; ties in assignment go to the lower
/// centroid index.
pub fn kmeans(z: &DenseMatrix, k: usize, seed: u64, max_iter: usize) -> Result<Vec<usize>> {
    let m = z.rows();
    let dim = z.cols();
    if k < 1 || k > m {
        return Err(Error::invalid(format!("k = {k} out of range 1..={m}")));
    }
    if z.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("k-means input must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(z.row(rng.random_range(0..m)));
    let mut best_d2 = vec![0.0f64; m];
    while centers.len() < k {
        let mut total = 0.0;
        for i in 0..m {
            let mut best = f64::INFINITY;
            for c in &centers {
                best = best.min(row_dist2(z, i, c));
            }
            best_d2[i] = best;
            total += best;
        }
        let next = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = m - 1;
            for (i, &d2) in best_d2.iter().enumerate() {
                if target < d2 {
                    chosen = i;
                    break;
                }
                target -= d2;
            }
            chosen
        } else {
            // all remaining mass at distance zero (duplicate points)
            rng.random_range(0..m)
        };
        centers.push(z.row(next));
    }

    let mut labels = vec![0usize; m];
    for _ in 0..max_iter.max(1) {
        // assignment
        let mut changed = false;
        for i in 0..m {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = row_dist2(z, i, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }

        // update
        let mut counts = vec![0usize; k];
        let mut sums = vec![vec![0.0; dim]; k];
        for i in 0..m {
            counts[labels[i]] += 1;
            for d in 0..dim {
                sums[labels[i]][d] += z.get(i, d);
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // farthest point from its own centroid takes over
                let mut far_i = 0usize;
                let mut far_d = -1.0;
                for i in 0..m {
                    let d = row_dist2(z, i, &centers[labels[i]]);
                    if d > far_d {
                        far_d = d;
                        far_i = i;
                    }
                }
                centers[c] = z.row(far_i);
                labels[far_i] = c;
                changed = true;
            } else {
                for d in 0..dim {
                    centers[c][d] = sums[c][d] / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(labels)
}

/// Contingency table with `pred` on rows and `truth` on columns.
fn contingency(pred: &[usize], truth: &[usize]) -> Result<Vec<Vec<f64>>> {
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!(
            "label length mismatch: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::invalid("labels must be nonempty"));
    }
    let kp = pred.iter().max().unwrap() + 1;
    let kt = truth.iter().max().unwrap() + 1;
    let mut table = vec![vec![0.0; kt]; kp];
    for (&p, &t) in pred.iter().zip(truth) {
        table[p][t] += 1.0;
    }
    Ok(table)
}

/// Maximum-weight perfect assignment on a square score matrix by the
/// potential-based Hungarian algorithm, O(n^3). Returns the total score of
/// the best assignment.
fn hungarian_max(score: &[Vec<f64>]) -> f64 {
    let n = score.len();
    // minimize the negated scores; 1-indexed arrays with a 0 sentinel column
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut assignment = vec![0usize; n + 1]; // column -> row
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        assignment[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = assignment[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = -score[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[assignment[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if assignment[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            assignment[j0] = assignment[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut total = 0.0;
    for j in 1..=n {
        if assignment[j] != 0 {
            total += score[assignment[j] - 1][j - 1];
        }
    }
    total
}

/// Clustering accuracy: the best fraction of agreeing samples over all
/// bijections between predicted and true labels, found by optimal assignment
/// on the contingency table.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let n = table.len().max(table[0].len());
    let mut square = vec![vec![0.0; n]; n];
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            square[i][j] = c;
        }
    }
    Ok(hungarian_max(&square) / pred.len() as f64)
}

/// Normalized mutual information with square-root normalization and natural
/// logarithms. Two single-cluster partitions score 1; if exactly one side
/// carries no information, the score is 0.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let m = pred.len() as f64;
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..table[0].len())
        .map(|j| table.iter().map(|r| r[j]).sum())
        .collect();
    let entropy = |sums: &[f64]| -> f64 {
        sums.iter()
            .filter(|&&s| s > 0.0)
            .map(|&s| {
                let p = s / m;
                -p * p.ln()
            })
            .sum()
    };
    let h_pred = entropy(&row_sums);
    let h_truth = entropy(&col_sums);
    if h_pred == 0.0 && h_truth == 0.0 {
        return Ok(1.0);
    }
    if h_pred == 0.0 || h_truth == 0.0 {
        return Ok(0.0);
    }
    let mut info = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0.0 {
                let p = c / m;
                info += p * (p / (row_sums[i] / m * (col_sums[j] / m))).ln();
            }
        }
    }
    Ok((info / (h_pred * h_truth).sqrt()).clamp(0.0, 1.0))
}

const KMEANS_MAX_ITER: usize = 300;

/// Repeated k-means over the rows of `z` with seeds `base_seed ..
/// base_seed + runs`, scored against the ground truth.
pub fn evaluate_clustering(
    z: &DenseMatrix,
    truth: &[usize],
    k: usize,
    runs: usize,
    base_seed: u64,
) -> Result<ClusterReport> {
    if runs < 1 {
        return Err(Error::invalid("runs must be at least 1"));
    }
    if truth.len() != z.rows() {
        return Err(Error::invalid(format!(
            "{} truth labels for {} samples",
            truth.len(),
            z.rows()
        )));
    }
    let mut acc = Vec::with_capacity(runs);
    let mut nmi_scores = Vec::with_capacity(runs);
    let mut seeds = Vec::with_capacity(runs);
    for r in 0..runs {
        let seed = base_seed + r as u64;
        let labels = kmeans(z, k, seed, KMEANS_MAX_ITER)?;
        acc.push(clustering_accuracy(&labels, truth)?);
        nmi_scores.push(nmi(&labels, truth)?);
        seeds.push(seed);
    }
    let (acc_mean, acc_std) = mean_std(&acc);
    let (nmi_mean, nmi_std) = mean_std(&nmi_scores);
    Ok(ClusterReport {
        runs,
        seeds,
        acc,
        nmi: nmi_scores,
        acc_mean,
        acc_std,
        nmi_mean,
        nmi_std,
    })
}
