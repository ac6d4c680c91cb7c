//! Seeded generators for the demos and test suites: low-rank nonnegative
//! tensors with known factors, Tucker syntheses, and separated sample
//! classes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::{cp_reconstruct, DenseMatrix, DenseTensor};

/// Nonnegative CP tensor with known uniform(0.1, 1.1) factors.
/// Returns the tensor and the generating factors (sample mode last).
pub fn cp_lowrank_tensor(dims: &[usize], rank: usize, seed: u64) -> (DenseTensor, Vec<DenseMatrix>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factors: Vec<DenseMatrix> = dims
        .iter()
        .map(|&d| {
            let data = (0..d * rank).map(|_| rng.random_range(0.1..1.1)).collect();
            DenseMatrix::from_vec(d, rank, data).expect("sized by construction")
        })
        .collect();
    let refs: Vec<&DenseMatrix> = factors.iter().collect();
    let x = cp_reconstruct(&refs).expect("consistent factors");
    (x, factors)
}

/// Nonnegative Tucker synthesis with a uniform(0.1, 1.1) core and factors.
pub fn tucker_tensor(dims: &[usize], ranks: &[usize], seed: u64) -> DenseTensor {
    sparse_tucker_tensor(dims, ranks, 0.0, seed)
}

/// Parts-based nonnegative Tucker synthesis: factor entries are zeroed with
/// probability `zero_prob`, the survivors uniform(0.1, 1.1). Sparse factors
/// have low column coherence, which keeps the synthesis recoverable;
/// all-dense uniform factors are nearly collinear and multiplicative updates
/// crawl on them.
pub fn sparse_tucker_tensor(
    dims: &[usize],
    ranks: &[usize],
    zero_prob: f64,
    seed: u64,
) -> DenseTensor {
    assert_eq!(dims.len(), ranks.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let core_len: usize = ranks.iter().product();
    let core_data: Vec<f64> = (0..core_len).map(|_| rng.random_range(0.1..1.1)).collect();
    let mut t = DenseTensor::new(ranks.to_vec(), core_data).expect("sized");
    for (mode, (&d, &r)) in dims.iter().zip(ranks).enumerate() {
        let data = (0..d * r)
            .map(|_| {
                if zero_prob > 0.0 && rng.random_range(0.0..1.0) < zero_prob {
                    0.0
                } else {
                    rng.random_range(0.1..1.1)
                }
            })
            .collect();
        let u = DenseMatrix::from_vec(d, r, data).expect("sized");
        t = t.mode_mat_product(&u, mode).expect("consistent dims");
    }
    t
}

/// Order-3 sample tensor of `classes * per_class` slices built from
/// disjoint-support prototypes, so the classes are separable at CP rank
/// `classes`. Each sample is its class prototype scaled by a random positive
/// factor plus uniform noise of amplitude `noise`. Returns the tensor
/// (samples on the last mode) and the ground-truth labels.
pub fn blob_tensor(
    rows: usize,
    cols: usize,
    classes: usize,
    per_class: usize,
    noise: f64,
    seed: u64,
) -> (DenseTensor, Vec<usize>) {
    assert!(classes >= 1 && rows * cols >= classes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = rows * cols;
    // prototype c occupies pixels [c * pixels/classes, (c+1) * pixels/classes)
    let span = pixels / classes;
    let mut prototypes = Vec::with_capacity(classes);
    for c in 0..classes {
        let mut p = vec![0.0; pixels];
        let hi = if c == classes - 1 { pixels } else { (c + 1) * span };
        for v in p.iter_mut().take(hi).skip(c * span) {
            *v = rng.random_range(0.5..1.0);
        }
        prototypes.push(p);
    }
    let m = classes * per_class;
    let mut data = vec![0.0; pixels * m];
    let mut labels = Vec::with_capacity(m);
    for s in 0..m {
        let c = s % classes;
        labels.push(c);
        let scale = rng.random_range(0.8..1.2);
        let slice = &mut data[s * pixels..(s + 1) * pixels];
        for (v, &p) in slice.iter_mut().zip(&prototypes[c]) {
            *v = scale * p + rng.random_range(0.0..noise.max(f64::MIN_POSITIVE));
        }
    }
    let t = DenseTensor::new(vec![rows, cols, m], data).expect("sized");
    (t, labels)
}

/// Isotropic Gaussian point clusters with centers `separation` apart along
/// coordinate axes; rows are samples. Returns the matrix and labels.
pub fn gaussian_blobs(
    classes: usize,
    per_class: usize,
    dim: usize,
    separation: f64,
    std_dev: f64,
    seed: u64,
) -> (DenseMatrix, Vec<usize>) {
    assert!(dim >= 1 && classes >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = classes * per_class;
    let mut points = DenseMatrix::zeros(m, dim);
    let mut labels = Vec::with_capacity(m);
    for s in 0..m {
        let c = s % classes;
        labels.push(c);
        for d in 0..dim {
            let center = if d == c % dim {
                separation * (1.0 + (c / dim) as f64)
            } else {
                0.0
            };
            points.set(s, d, center + std_dev * standard_normal(&mut rng));
        }
    }
    (points, labels)
}

/// One standard-normal draw by the Box-Muller transform; consumes exactly two
/// uniforms per call so streams stay reproducible.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_tensor_is_nonnegative_and_labeled() {
        let (t, labels) = blob_tensor(5, 5, 3, 10, 0.05, 1);
        assert_eq!(t.dims(), &[5, 5, 30]);
        assert_eq!(labels.len(), 30);
        assert!(t.data().iter().all(|&v| v >= 0.0));
        assert_eq!(labels.iter().filter(|&&c| c == 0).count(), 10);
    }

    #[test]
    fn generators_are_deterministic() {
        let (a, _) = cp_lowrank_tensor(&[4, 5, 6], 2, 9);
        let (b, _) = cp_lowrank_tensor(&[4, 5, 6], 2, 9);
        assert_eq!(a, b);
        let ta = tucker_tensor(&[4, 5, 6], &[2, 2, 2], 9);
        let tb = tucker_tensor(&[4, 5, 6], &[2, 2, 2], 9);
        assert_eq!(ta, tb);
    }

    #[test]
    fn gaussian_blobs_are_separated() {
        let (points, labels) = gaussian_blobs(3, 20, 4, 10.0, 0.5, 3);
        assert_eq!(points.rows(), 60);
        // class means are far apart relative to the spread
        let mut means = vec![vec![0.0; 4]; 3];
        for s in 0..60 {
            for d in 0..4 {
                means[labels[s]][d] += points.get(s, d) / 20.0;
            }
        }
        for a in 0..3 {
            for b in a + 1..3 {
                let dist: f64 = (0..4)
                    .map(|d| (means[a][d] - means[b][d]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(dist > 5.0);
            }
        }
    }
}
