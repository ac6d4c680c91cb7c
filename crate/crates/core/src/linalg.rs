//! Small dense linear-algebra kernels: a symmetric eigensolver and a pivoted
//! linear solve. No external numeric dependencies; everything the embeddings
//! and baselines need fits in a few hundred lines.

use crate::error::Error;
use crate::tensor::DenseMatrix;
use crate::Result;

/// Eigendecomposition of a real symmetric matrix.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns. Classic two-stage scheme: Householder reduction
/// to tridiagonal form followed by the implicit-shift QL iteration, with the
/// transforms accumulated.
pub fn eigh(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a.rows();
    if n != a.cols() {
        return Err(Error::invalid(format!(
            "eigh needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if n == 0 {
        return Err(Error::invalid("eigh needs a nonempty matrix"));
    }
    let mut v = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    ql_implicit(&mut v, &mut d, &mut e)?;
    sort_ascending(&mut d, &mut v);
    Ok((d, v))
}

/// Householder reduction; `v` comes in as the symmetric matrix and leaves as
/// the accumulated orthogonal transform, `d` as the diagonal and `e` as the
/// subdiagonal of the tridiagonal form.
fn tridiagonalize(v: &mut DenseMatrix, d: &mut [f64], e: &mut [f64]) {
    let n = v.rows();
    for j in 0..n {
        d[j] = v.get(n - 1, j);
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v.get(i - 1, j);
                v.set(i, j, 0.0);
                v.set(j, i, 0.0);
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }

            for j in 0..i {
                let f = d[j];
                v.set(j, i, f);
                let mut g = e[j] + v.get(j, j) * f;
                for k in j + 1..i {
                    g += v.get(k, j) * d[k];
                    e[k] += v.get(k, j) * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    let val = v.get(k, j) - (f * e[k] + g * d[k]);
                    v.set(k, j, val);
                }
                d[j] = v.get(i - 1, j);
                v.set(i, j, 0.0);
            }
        }
        d[i] = h;
    }

    // accumulate transformations
    for i in 0..n - 1 {
        v.set(n - 1, i, v.get(i, i));
        v.set(i, i, 1.0);
        let h = d[i + 1];
        if h != 0.0 {
            for (k, item) in d.iter_mut().enumerate().take(i + 1) {
                *item = v.get(k, i + 1) / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v.get(k, i + 1) * v.get(k, j);
                }
                for k in 0..=i {
                    let val = v.get(k, j) - g * d[k];
                    v.set(k, j, val);
                }
            }
        }
        for k in 0..=i {
            v.set(k, i + 1, 0.0);
        }
    }
    for j in 0..n {
        d[j] = v.get(n - 1, j);
        v.set(n - 1, j, 0.0);
    }
    v.set(n - 1, n - 1, 1.0);
    e[0] = 0.0;
}

/// Implicit-shift QL sweeps on the tridiagonal form, rotations applied to the
/// accumulated transform in `v`.
fn ql_implicit(v: &mut DenseMatrix, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 64 {
                    return Err(Error::NumericFailure {
                        point: l,
                        detail: "eigenvalue iteration did not converge".into(),
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    for k in 0..n {
                        let h = v.get(k, i + 1);
                        v.set(k, i + 1, s * v.get(k, i) + c * h);
                        v.set(k, i, c * v.get(k, i) - s * h);
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

fn sort_ascending(d: &mut [f64], v: &mut DenseMatrix) {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let old_d = d.to_vec();
    let old_v = v.clone();
    for (new, &old) in order.iter().enumerate() {
        d[new] = old_d[old];
        v.col_mut(new).copy_from_slice(old_v.col(old));
    }
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting. Fails when
/// the system is singular to working precision.
pub fn solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if n != a.cols() || b.len() != n {
        return Err(Error::invalid(format!(
            "solve shape mismatch: {}x{} with rhs length {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    let scale = a.data().iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    if scale == 0.0 {
        return Err(Error::NumericFailure {
            point: 0,
            detail: "singular system (zero matrix)".into(),
        });
    }
    let tiny = scale * 1e-14;
    let mut m = a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_abs = m.get(col, col).abs();
        for r in col + 1..n {
            let v = m.get(r, col).abs();
            if v > pivot_abs {
                pivot_abs = v;
                pivot_row = r;
            }
        }
        if pivot_abs <= tiny {
            return Err(Error::NumericFailure {
                point: col,
                detail: "singular system".into(),
            });
        }
        if pivot_row != col {
            for c in 0..n {
                let tmp = m.get(col, c);
                m.set(col, c, m.get(pivot_row, c));
                m.set(pivot_row, c, tmp);
            }
            x.swap(col, pivot_row);
        }
        let pivot = m.get(col, col);
        for r in col + 1..n {
            let factor = m.get(r, col) / pivot;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                let v = m.get(r, c) - factor * m.get(col, c);
                m.set(r, c, v);
            }
            x[r] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for c in col + 1..n {
            s -= m.get(col, c) * x[c];
        }
        x[col] = s / m.get(col, col);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = rng.random_range(-1.0..1.0);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    #[test]
    fn eigh_diagonal_matrix() {
        let mut m = DenseMatrix::zeros(3, 3);
        m.set(0, 0, 3.0);
        m.set(1, 1, -1.0);
        m.set(2, 2, 2.0);
        let (vals, vecs) = eigh(&m).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-12);
        assert!((vals[1] - 2.0).abs() < 1e-12);
        assert!((vals[2] - 3.0).abs() < 1e-12);
        // eigenvectors are signed basis vectors
        for j in 0..3 {
            let col = vecs.col(j);
            let mx = col.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            assert!((mx - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eigh_residual_and_orthonormality() {
        for (n, seed) in [(5usize, 1u64), (12, 2), (30, 3)] {
            let a = random_symmetric(n, seed);
            let (vals, vecs) = eigh(&a).unwrap();
            // A v = lambda v
            for j in 0..n {
                let av = a.matmul(&DenseMatrix::from_vec(n, 1, vecs.col(j).to_vec()).unwrap()).unwrap();
                for i in 0..n {
                    assert!(
                        (av.get(i, 0) - vals[j] * vecs.get(i, j)).abs() < 1e-9,
                        "residual too large at n={n}"
                    );
                }
            }
            // V^T V = I
            let vtv = vecs.gram();
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((vtv.get(i, j) - want).abs() < 1e-10);
                }
            }
            // ascending
            for w in vals.windows(2) {
                assert!(w[0] <= w[1] + 1e-12);
            }
        }
    }

    #[test]
    fn eigh_known_spectrum_complete_graph_laplacian() {
        // L = n I - 11^T has eigenvalues {0, n, ..., n}
        let n = 7;
        let mut l = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                l.set(i, j, if i == j { n as f64 - 1.0 } else { -1.0 });
            }
        }
        let (vals, _) = eigh(&l).unwrap();
        assert!(vals[0].abs() < 1e-10);
        for &v in &vals[1..] {
            assert!((v - n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn solve_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [1usize, 2, 5, 9] {
            let mut a = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    a.set(i, j, rng.random_range(-1.0..1.0));
                }
                let d = a.get(i, i);
                a.set(i, i, d + 2.0); // keep well-conditioned
            }
            let want: Vec<f64> = (0..n).map(|i| i as f64 - 1.5).collect();
            let b = a
                .matmul(&DenseMatrix::from_vec(n, 1, want.clone()).unwrap())
                .unwrap();
            let got = solve(&a, b.col(0)).unwrap();
            for i in 0..n {
                assert!((got[i] - want[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn solve_singular_fails() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            solve(&a, &[1.0, 1.0]),
            Err(Error::NumericFailure { .. })
        ));
    }
}
