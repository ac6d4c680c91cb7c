//! Dense N-way tensors and the multilinear kernels the solvers build on.
//!
//! Conventions, fixed once and used everywhere:
//!
//! * Tensor storage is linear with the **first index fastest**; the stride of
//!   mode `n` is the product of the extents of all lower modes.
//! * [`DenseMatrix`] is column-major, so a matrix is bit-identical to the
//!   order-2 tensor with the same extents.
//! * Modes are 0-based in code.
//! * `unfold(t, n)` puts mode `n` on the rows; columns enumerate the remaining
//!   indices with lower modes varying fastest.
//! * Khatri-Rao chains run in descending mode order (highest mode leftmost),
//!   which makes `unfold(cp_reconstruct(U), n) == U[n] * kr_chain(..)^T` hold
//!   exactly under the column ordering above.

use crate::error::Error;
use crate::Result;

/// Column-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from column-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Build from a row-major nested slice; handy in tests.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::invalid("matrix needs at least one row"));
        }
        let c = rows[0].len();
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("ragged rows"));
        }
        let mut m = DenseMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r + self.rows * c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r + self.rows * c] = v;
    }

    /// Column `j` as a contiguous slice.
    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Row `i` gathered into a new vector.
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::invalid(format!(
                "matmul shape mismatch: {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            for l in 0..self.cols {
                let b = other.get(l, j);
                if b == 0.0 {
                    continue;
                }
                let a = self.col(l);
                let o = out.col_mut(j);
                for i in 0..self.rows {
                    o[i] += a[i] * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * other^T`.
    pub fn matmul_bt(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.cols {
            return Err(Error::invalid(format!(
                "matmul_bt shape mismatch: {}x{} * ({}x{})^T",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.rows);
        for l in 0..self.cols {
            let a = self.col(l);
            for j in 0..other.rows {
                let b = other.get(j, l);
                if b == 0.0 {
                    continue;
                }
                let o = out.col_mut(j);
                for i in 0..self.rows {
                    o[i] += a[i] * b;
                }
            }
        }
        Ok(out)
    }

    /// Gram matrix `self^T * self`, exactly symmetric.
    pub fn gram(&self) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(self.cols, self.cols);
        for p in 0..self.cols {
            for q in p..self.cols {
                let d = dot(self.col(p), self.col(q));
                g.set(p, q, d);
                g.set(q, p, d);
            }
        }
        g
    }

    /// Element-wise product; shapes must match.
    pub fn hadamard(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::invalid(format!(
                "hadamard shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Column-wise Kronecker product; `self` and `other` must share a column
    /// count. Row index of the result runs the second factor fastest.
    pub fn khatri_rao(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.cols {
            return Err(Error::invalid(format!(
                "khatri_rao column mismatch: {} vs {}",
                self.cols, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows * other.rows, self.cols);
        for j in 0..self.cols {
            let a = self.col(j);
            let b = other.col(j);
            let o = out.col_mut(j);
            for (p, &av) in a.iter().enumerate() {
                let base = p * other.rows;
                for (q, &bv) in b.iter().enumerate() {
                    o[base + q] = av * bv;
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product with the usual block structure.
    pub fn kronecker(&self, other: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for q in 0..self.cols {
            for p in 0..self.rows {
                let a = self.get(p, q);
                for s in 0..other.cols {
                    for r in 0..other.rows {
                        out.set(p * other.rows + r, q * other.cols + s, a * other.get(r, s));
                    }
                }
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    /// Reshape into a tensor, treating this matrix as the mode-`mode`
    /// unfolding with extents `dims`.
    pub fn fold(&self, mode: usize, dims: &[usize]) -> Result<DenseTensor> {
        if mode >= dims.len() {
            return Err(Error::invalid(format!(
                "fold mode {mode} out of range for order {}",
                dims.len()
            )));
        }
        let total: usize = dims.iter().product();
        if dims.contains(&0) {
            return Err(Error::invalid("fold dims must be positive"));
        }
        if self.rows != dims[mode] || self.rows * self.cols != total {
            return Err(Error::invalid(format!(
                "fold shape mismatch: {}x{} into dims {:?} at mode {mode}",
                self.rows, self.cols, dims
            )));
        }
        let ln = dims[mode];
        let sl: usize = dims[..mode].iter().product();
        let sh = total / (sl * ln);
        let mut data = vec![0.0; total];
        for high in 0..sh {
            for i in 0..ln {
                let in_base = i + ln * sl * high; // row i, walking columns low-fastest
                let out_base = sl * (i + ln * high);
                for low in 0..sl {
                    data[out_base + low] = self.data[in_base + ln * low];
                }
            }
        }
        DenseTensor::new(dims.to_vec(), data)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Dense order-N tensor, first index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::invalid("tensor dims must be nonempty and positive"));
        }
        let total: usize = dims.iter().product();
        if data.len() != total {
            return Err(Error::invalid(format!(
                "tensor data length {} does not match dims {:?}",
                data.len(),
                dims
            )));
        }
        Ok(DenseTensor { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        Self::new(dims, vec![0.0; total])
    }

    /// Order-N super-diagonal tensor of extent `j` per mode: ones where all
    /// indices agree, zeros elsewhere.
    pub fn superdiag(j: usize, order: usize) -> Result<Self> {
        if j < 1 || order < 2 {
            return Err(Error::invalid("superdiag needs extent >= 1 and order >= 2"));
        }
        let mut t = DenseTensor::zeros(vec![j; order])?;
        // linear index of (i, i, ..., i) is i * (1 + J + J^2 + ...)
        let mut step = 0usize;
        let mut pow = 1usize;
        for _ in 0..order {
            step += pow;
            pow *= j;
        }
        for i in 0..j {
            t.data[i * step] = 1.0;
        }
        Ok(t)
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Linear offset of a multi-index.
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut off = 0;
        let mut stride = 1;
        for (m, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.dims[m]);
            off += i * stride;
            stride *= self.dims[m];
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let off = self.offset(idx);
        self.data[off] = v;
    }

    /// First strictly negative entry, if any, as (linear index, value).
    pub fn first_negative(&self) -> Option<(usize, f64)> {
        self.data
            .iter()
            .enumerate()
            .find(|(_, &v)| v < 0.0)
            .map(|(i, &v)| (i, v))
    }

    /// Mode-`mode` unfolding. Rows carry the mode index; columns enumerate the
    /// remaining indices with lower modes varying fastest.
    pub fn unfold(&self, mode: usize) -> Result<DenseMatrix> {
        if mode >= self.order() {
            return Err(Error::invalid(format!(
                "unfold mode {mode} out of range for order {}",
                self.order()
            )));
        }
        let ln = self.dims[mode];
        let sl: usize = self.dims[..mode].iter().product();
        let sh = self.len() / (sl * ln);
        let mut out = DenseMatrix::zeros(ln, self.len() / ln);
        for high in 0..sh {
            for i in 0..ln {
                let in_base = sl * (i + ln * high);
                let out_base = i + ln * sl * high;
                for low in 0..sl {
                    out.data[out_base + ln * low] = self.data[in_base + low];
                }
            }
        }
        Ok(out)
    }

    /// Contract `mode` with a vector, reducing the order by one. An order-1
    /// tensor contracts to a single-entry order-1 tensor holding the dot
    /// product.
    pub fn mode_vec_product(&self, v: &[f64], mode: usize) -> Result<DenseTensor> {
        if mode >= self.order() {
            return Err(Error::invalid(format!(
                "mode {mode} out of range for order {}",
                self.order()
            )));
        }
        if v.len() != self.dims[mode] {
            return Err(Error::invalid(format!(
                "vector length {} does not match extent {} of mode {mode}",
                v.len(),
                self.dims[mode]
            )));
        }
        let (data, dims) = contract_mode(&self.data, &self.dims, mode, v);
        let dims = if dims.is_empty() { vec![1] } else { dims };
        DenseTensor::new(dims, data)
    }

    /// Tensor-times-matrix on `mode`: entry-wise `out(.., r, ..) = sum_i
    /// a[r, i] * t(.., i, ..)`. `a.cols()` must equal the mode extent.
    pub fn mode_mat_product(&self, a: &DenseMatrix, mode: usize) -> Result<DenseTensor> {
        if mode >= self.order() {
            return Err(Error::invalid(format!(
                "mode {mode} out of range for order {}",
                self.order()
            )));
        }
        if a.cols() != self.dims[mode] {
            return Err(Error::invalid(format!(
                "matrix has {} columns, mode {mode} has extent {}",
                a.cols(),
                self.dims[mode]
            )));
        }
        let ln = self.dims[mode];
        let r = a.rows();
        let sl: usize = self.dims[..mode].iter().product();
        let sh = self.len() / (sl * ln);
        let mut dims = self.dims.clone();
        dims[mode] = r;
        let mut out = vec![0.0; sl * r * sh];
        for high in 0..sh {
            for i in 0..ln {
                let in_base = sl * (i + ln * high);
                for row in 0..r {
                    let c = a.get(row, i);
                    if c == 0.0 {
                        continue;
                    }
                    let out_base = sl * (row + r * high);
                    for low in 0..sl {
                        out[out_base + low] += c * self.data[in_base + low];
                    }
                }
            }
        }
        DenseTensor::new(dims, out)
    }

    /// Matricized tensor-times-Khatri-Rao product for `mode`, computed column
    /// by column through sequential mode-vector contractions; the Khatri-Rao
    /// factor is never materialized. `factors` holds one matrix per mode
    /// except `mode`, in ascending mode order, all with the same column count.
    pub fn mttkrp(&self, factors: &[&DenseMatrix], mode: usize) -> Result<DenseMatrix> {
        let n = self.order();
        if mode >= n {
            return Err(Error::invalid(format!(
                "mttkrp mode {mode} out of range for order {n}"
            )));
        }
        if factors.len() != n - 1 {
            return Err(Error::invalid(format!(
                "mttkrp expects {} factors, got {}",
                n - 1,
                factors.len()
            )));
        }
        let j = factors.first().map(|f| f.cols()).unwrap_or(1);
        if factors.iter().any(|f| f.cols() != j) {
            return Err(Error::invalid("mttkrp factors must share a column count"));
        }
        // factor slot for mode m (modes above `mode` shift down by one)
        let slot = |m: usize| if m < mode { m } else { m - 1 };
        for m in (0..n).filter(|&m| m != mode) {
            if factors[slot(m)].rows() != self.dims[m] {
                return Err(Error::invalid(format!(
                    "mttkrp factor for mode {m} has {} rows, expected {}",
                    factors[slot(m)].rows(),
                    self.dims[m]
                )));
            }
        }
        let mut out = DenseMatrix::zeros(self.dims[mode], j);
        for col in 0..j {
            let mut data = self.data.clone();
            let mut dims = self.dims.clone();
            // contract highest modes first so remaining positions are stable
            for m in (0..n).rev() {
                if m == mode {
                    continue;
                }
                let v = factors[slot(m)].col(col);
                let (next, next_dims) = contract_mode(&data, &dims, m, v);
                data = next;
                dims = next_dims;
            }
            debug_assert_eq!(data.len(), self.dims[mode]);
            out.col_mut(col).copy_from_slice(&data);
        }
        Ok(out)
    }

    pub fn frobenius(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }
}

/// Contract one mode of raw first-fastest data with a vector. Accumulation
/// order over the contracted index is fixed (ascending), so results do not
/// depend on any external scheduling.
fn contract_mode(data: &[f64], dims: &[usize], mode: usize, v: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let ln = dims[mode];
    let sl: usize = dims[..mode].iter().product();
    let sh = data.len() / (sl * ln);
    let mut out = vec![0.0; sl * sh];
    for high in 0..sh {
        let out_base = sl * high;
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            let in_base = sl * (i + ln * high);
            for low in 0..sl {
                out[out_base + low] += vi * data[in_base + low];
            }
        }
    }
    let mut out_dims = dims.to_vec();
    out_dims.remove(mode);
    (out, out_dims)
}

/// Khatri-Rao chain over `factors` in descending mode order, skipping
/// `skip`. An empty selection yields the 1 x J all-ones matrix.
pub fn khatri_rao_chain(factors: &[&DenseMatrix], skip: Option<usize>) -> Result<DenseMatrix> {
    let j = factors.first().map(|f| f.cols()).unwrap_or(1);
    let mut acc: Option<DenseMatrix> = None;
    for (m, f) in factors.iter().enumerate().rev() {
        if Some(m) == skip {
            continue;
        }
        acc = Some(match acc {
            None => (*f).clone(),
            Some(a) => a.khatri_rao(f)?,
        });
    }
    Ok(acc.unwrap_or_else(|| DenseMatrix {
        rows: 1,
        cols: j,
        data: vec![1.0; j],
    }))
}

/// Reconstruct the CP model with the given factor matrices (one per mode, all
/// sharing a column count); equivalent to contracting the super-diagonal core
/// with every factor.
pub fn cp_reconstruct(factors: &[&DenseMatrix]) -> Result<DenseTensor> {
    if factors.is_empty() {
        return Err(Error::invalid("cp_reconstruct needs at least one factor"));
    }
    let j = factors[0].cols();
    if factors.iter().any(|f| f.cols() != j) {
        return Err(Error::invalid(
            "cp_reconstruct factors must share a column count",
        ));
    }
    let dims: Vec<usize> = factors.iter().map(|f| f.rows()).collect();
    let chain = khatri_rao_chain(factors, Some(0))?;
    let unfold0 = factors[0].matmul_bt(&chain)?;
    unfold0.fold(0, &dims)
}

/// Relative Frobenius reconstruction error `||x - xhat||_F / ||x||_F`.
pub fn rse(x: &DenseTensor, xhat: &DenseTensor) -> Result<f64> {
    if x.dims() != xhat.dims() {
        return Err(Error::invalid(format!(
            "rse dims mismatch: {:?} vs {:?}",
            x.dims(),
            xhat.dims()
        )));
    }
    let norm = x.frobenius();
    if norm == 0.0 {
        return Err(Error::invalid("rse undefined for zero-norm reference"));
    }
    let mut acc = 0.0;
    for (a, b) in x.data().iter().zip(xhat.data()) {
        let d = a - b;
        acc += d * d;
    }
    Ok(acc.sqrt() / norm)
}
