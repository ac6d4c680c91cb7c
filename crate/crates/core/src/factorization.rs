//! Multiplicative-update solvers: the hypergraph-regularized nonnegative CP
//! factorization, plain NTF (its λ = 0 special case), nonnegative Tucker, and
//! truncated HOSVD.
//!
//! The CP-form model keeps one factor matrix per non-sample mode plus the
//! sample-mode factor `Z` (the reduced data). Each sweep updates the factor
//! matrices in ascending mode order, renormalizes their columns onto the
//! simplex with the scale absorbed into `Z`, then updates `Z`. Denominators
//! are clamped below at a configurable guard so the element-wise ratios stay
//! finite.

use crate::error::Error;
use crate::hypergraph::{build_knn_hypergraph, Hypergraph, WeightScheme};
use crate::linalg::eigh;
use crate::tensor::{cp_reconstruct, DenseMatrix, DenseTensor};
use crate::Result;

/// CP-form nonnegative model: `factors[n]` covers mode `n` for the first
/// N-1 modes, `z` covers the sample mode.
#[derive(Debug, Clone)]
pub struct FactorModel {
    pub factors: Vec<DenseMatrix>,
    pub z: DenseMatrix,
}

impl FactorModel {
    pub fn rank(&self) -> usize {
        self.z.cols()
    }

    pub fn order(&self) -> usize {
        self.factors.len() + 1
    }

    /// All mode matrices in ascending mode order, `z` last.
    pub fn all_factors(&self) -> Vec<&DenseMatrix> {
        let mut all: Vec<&DenseMatrix> = self.factors.iter().collect();
        all.push(&self.z);
        all
    }

    pub fn reconstruct(&self) -> Result<DenseTensor> {
        cp_reconstruct(&self.all_factors())
    }
}

/// Run parameters for the multiplicative-update solvers.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// CP rank J (columns of every factor).
    pub rank: usize,
    /// Regularization strength on the sample-mode smoothness penalty.
    pub lambda: f64,
    /// Neighbor count for the sample hypergraph.
    pub knn: usize,
    pub max_iter: usize,
    /// Stop when the relative squared reconstruction error drops below this.
    pub tol_rse: f64,
    /// Stop when the objective change between sweeps drops below this
    /// (relative to the first sweep's objective unless `absolute_obj_tol`).
    pub tol_obj: f64,
    /// Lower clamp applied to update-rule denominators.
    pub epsilon_guard: f64,
    pub seed: u64,
    pub weight_scheme: WeightScheme,
    /// Compare `|O_{k+1} - O_k|` against `tol_obj` directly instead of
    /// relative to the initial objective.
    pub absolute_obj_tol: bool,
    /// Apply the hypergraph terms of the Z update without the λ scaling.
    /// Off by default; with it on, the update no longer descends the λ-scaled
    /// objective, so the monotonicity guarantee is void.
    pub unscaled_z_penalty: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rank: 2,
            lambda: 0.0,
            knn: 3,
            max_iter: 500,
            tol_rse: 1e-4,
            tol_obj: 1e-6,
            epsilon_guard: 1e-12,
            seed: 0,
            weight_scheme: WeightScheme::Unit,
            absolute_obj_tol: false,
            unscaled_z_penalty: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rank < 1 {
            return Err(Error::invalid("rank must be at least 1"));
        }
        if self.lambda < 0.0 {
            return Err(Error::invalid("lambda must be nonnegative"));
        }
        if self.max_iter < 1 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if !(self.tol_rse > 0.0) || !(self.tol_obj > 0.0) || !(self.epsilon_guard > 0.0) {
            return Err(Error::invalid("tolerances and guard must be positive"));
        }
        Ok(())
    }
}

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    ObjectiveConverged,
    RseConverged,
    MaxIterations,
}

impl TerminationReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationReason::ObjectiveConverged => "objective-converged",
            TerminationReason::RseConverged => "rse-converged",
            TerminationReason::MaxIterations => "max-iterations",
        }
    }
}

/// Per-sweep history of a solve.
#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub objective: Vec<f64>,
    pub rse: Vec<f64>,
    /// Elapsed seconds from solve start to the end of each sweep (zeros on
    /// targets without a monotonic clock).
    pub iter_seconds: Vec<f64>,
    pub termination: TerminationReason,
    /// Max-norm of `min(factor, |gradient|)` over all factors at the final
    /// iterate; a diagnostic for how close the run is to stationarity.
    pub kkt_residual: f64,
}

impl SolveTrace {
    pub fn iterations(&self) -> usize {
        self.objective.len()
    }
}

#[cfg(not(target_arch = "wasm32"))]
struct Stopwatch(std::time::Instant);
#[cfg(not(target_arch = "wasm32"))]
impl Stopwatch {
    fn start() -> Self {
        Stopwatch(std::time::Instant::now())
    }
    fn elapsed(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[cfg(target_arch = "wasm32")]
struct Stopwatch;
#[cfg(target_arch = "wasm32")]
impl Stopwatch {
    fn start() -> Self {
        Stopwatch
    }
    fn elapsed(&self) -> f64 {
        0.0
    }
}

/// Random nonnegative initialization: every entry i.i.d. uniform on
/// (0.1, 1.1) so nothing starts pinned at zero, factor columns L1-normalized,
/// `Z` left unnormalized. Deterministic for a given seed.
pub fn init_factors(dims: &[usize], rank: usize, seed: u64) -> Result<FactorModel> {
    use rand::{Rng, SeedableRng};
    if dims.len() < 2 {
        return Err(Error::invalid("model needs an order-2 or higher tensor"));
    }
    if rank < 1 {
        return Err(Error::invalid("rank must be at least 1"));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut fill = |rows: usize| -> DenseMatrix {
        let data = (0..rows * rank)
            .map(|_| rng.random_range(0.1..1.1))
            .collect();
        DenseMatrix::from_vec(rows, rank, data).expect("sized by construction")
    };
    let n = dims.len();
    let mut factors = Vec::with_capacity(n - 1);
    for &d in &dims[..n - 1] {
        let mut u = fill(d);
        let (normalized, _) = normalize_columns(&u)?;
        u = normalized;
        factors.push(u);
    }
    let z = fill(dims[n - 1]);
    Ok(FactorModel { factors, z })
}

/// Squared Frobenius reconstruction error `||x - reconstruct(m)||_F^2`.
fn fidelity_sq(x: &DenseTensor, recon: &DenseTensor) -> f64 {
    let mut acc = 0.0;
    for (a, b) in x.data().iter().zip(recon.data()) {
        let d = a - b;
        acc += d * d;
    }
    acc
}

/// Full objective: squared reconstruction error plus `lambda * tr(Z^T L Z)`
/// for a dense Laplacian `l`.
pub fn objective(
    x: &DenseTensor,
    m: &FactorModel,
    l: &DenseMatrix,
    lambda: f64,
) -> Result<f64> {
    let recon = m.reconstruct()?;
    if recon.dims() != x.dims() {
        return Err(Error::invalid(format!(
            "model reconstructs {:?}, tensor is {:?}",
            recon.dims(),
            x.dims()
        )));
    }
    let penalty = if lambda != 0.0 {
        crate::hypergraph::regularizer_value(l, &m.z)?
    } else {
        0.0
    };
    Ok(fidelity_sq(x, &recon) + lambda * penalty)
}

/// Objective through the factored hypergraph form; what the solver traces.
pub fn objective_sparse(
    x: &DenseTensor,
    m: &FactorModel,
    g: Option<&Hypergraph>,
    lambda: f64,
) -> Result<f64> {
    let recon = m.reconstruct()?;
    let penalty = match g {
        Some(g) if lambda != 0.0 => g.penalty(&m.z)?,
        _ => 0.0,
    };
    Ok(fidelity_sq(x, &recon) + lambda * penalty)
}

/// Hadamard product of the Gram matrices of every mode matrix except `skip`
/// (with `z` acting as the last mode).
fn gram_hadamard(m: &FactorModel, skip: Option<usize>) -> DenseMatrix {
    let j = m.rank();
    let mut acc = DenseMatrix::from_vec(j, j, vec![1.0; j * j]).expect("square");
    for (mode, f) in m.all_factors().into_iter().enumerate() {
        if Some(mode) == skip {
            continue;
        }
        acc = acc.hadamard(&f.gram()).expect("shapes agree");
    }
    acc
}

fn mur_ratio(current: &DenseMatrix, num: &DenseMatrix, den: &DenseMatrix, guard: f64) -> DenseMatrix {
    let mut out = current.clone();
    let num = num.data();
    let den = den.data();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        *v *= num[i] / den[i].max(guard);
    }
    out
}

/// One multiplicative update of the mode-`mode` factor (`mode < N-1`):
/// numerator is the MTTKRP against all other factors, denominator the current
/// factor times the Hadamard of the other Gram matrices.
pub fn update_factor(
    x: &DenseTensor,
    m: &FactorModel,
    mode: usize,
    epsilon_guard: f64,
) -> Result<DenseMatrix> {
    if mode >= m.factors.len() {
        return Err(Error::invalid(format!(
            "update_factor mode {mode} out of range; sample mode updates through update_z"
        )));
    }
    let all = m.all_factors();
    let others: Vec<&DenseMatrix> = all
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != mode)
        .map(|(_, f)| *f)
        .collect();
    let num = x.mttkrp(&others, mode)?;
    let den = m.factors[mode].matmul(&gram_hadamard(m, Some(mode)))?;
    Ok(mur_ratio(&m.factors[mode], &num, &den, epsilon_guard))
}

/// Divide each column by its entry sum. Returns the normalized matrix and the
/// scale vector; callers preserving a CP model must multiply the matching
/// columns of `Z` by those scales.
pub fn normalize_columns(u: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>)> {
    let mut out = u.clone();
    let mut scales = Vec::with_capacity(u.cols());
    for j in 0..u.cols() {
        let s: f64 = u.col(j).iter().sum();
        if !(s > 0.0) {
            return Err(Error::DegenerateRank {
                column: j,
                iteration: None,
            });
        }
        for v in out.col_mut(j) {
            *v /= s;
        }
        scales.push(s);
    }
    Ok((out, scales))
}

/// One multiplicative update of the sample-mode factor. With a hypergraph
/// present, `lambda * H W D_E^{-1} H^T Z` joins the numerator and
/// `lambda * D_V Z` the denominator, all on the factored sparse path.
pub fn update_z(
    x: &DenseTensor,
    m: &FactorModel,
    g: Option<&Hypergraph>,
    lambda: f64,
    epsilon_guard: f64,
) -> Result<DenseMatrix> {
    update_z_scaled(x, m, g, lambda, epsilon_guard)
}

fn update_z_scaled(
    x: &DenseTensor,
    m: &FactorModel,
    g: Option<&Hypergraph>,
    scale: f64,
    epsilon_guard: f64,
) -> Result<DenseMatrix> {
    let sample_mode = m.factors.len();
    let others: Vec<&DenseMatrix> = m.factors.iter().collect();
    let mut num = x.mttkrp(&others, sample_mode)?;
    let mut den = m.z.matmul(&gram_hadamard(m, Some(sample_mode)))?;
    if let Some(g) = g {
        if scale != 0.0 {
            let smooth = g.smooth(&m.z)?;
            for (n, s) in num.data_mut().iter_mut().zip(smooth.data()) {
                *n += scale * s;
            }
            let degrees = g.vertex_degrees();
            for j in 0..den.cols() {
                let zc: Vec<f64> = m.z.col(j).to_vec();
                let dc = den.col_mut(j);
                for (i, d) in dc.iter_mut().enumerate() {
                    *d += scale * degrees[i] * zc[i];
                }
            }
        }
    }
    Ok(mur_ratio(&m.z, &num, &den, epsilon_guard))
}

/// Max-norm of `min(factor, |gradient|)` over every factor matrix; zero at an
/// exact KKT point of the nonnegativity-constrained objective.
fn kkt_residual(
    x: &DenseTensor,
    m: &FactorModel,
    g: Option<&Hypergraph>,
    lambda: f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    let all = m.all_factors();
    let n_modes = all.len();
    for mode in 0..n_modes {
        let others: Vec<&DenseMatrix> = all
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != mode)
            .map(|(_, f)| *f)
            .collect();
        let mttkrp = x.mttkrp(&others, mode)?;
        let den = all[mode].matmul(&gram_hadamard(m, Some(mode)))?;
        let is_sample_mode = mode == n_modes - 1;
        let (smooth, degrees) = if is_sample_mode && lambda != 0.0 {
            match g {
                Some(g) => (Some(g.smooth(&m.z)?), Some(g.vertex_degrees())),
                None => (None, None),
            }
        } else {
            (None, None)
        };
        let f = all[mode];
        for j in 0..f.cols() {
            for i in 0..f.rows() {
                let mut grad = 2.0 * (den.get(i, j) - mttkrp.get(i, j));
                if let (Some(s), Some(d)) = (&smooth, degrees) {
                    grad += 2.0 * lambda * (d[i] * f.get(i, j) - s.get(i, j));
                }
                worst = worst.max(f.get(i, j).min(grad.abs()));
            }
        }
    }
    Ok(worst)
}

/// Shared sweep loop for the CP-form solvers.
fn solve_cp(
    x: &DenseTensor,
    config: &SolverConfig,
    g: Option<Hypergraph>,
) -> Result<(FactorModel, SolveTrace)> {
    let dims = x.dims().to_vec();
    let mut model = init_factors(&dims, config.rank, config.seed)?;
    let xnorm = x.frobenius();
    if xnorm == 0.0 {
        return Err(Error::invalid("input tensor has zero norm"));
    }
    let z_scale = if config.unscaled_z_penalty { 1.0 } else { config.lambda };

    let watch = Stopwatch::start();
    let mut objective_trace = Vec::new();
    let mut rse_trace = Vec::new();
    let mut iter_seconds = Vec::new();
    let mut termination = TerminationReason::MaxIterations;

    for iter in 1..=config.max_iter {
        for mode in 0..model.factors.len() {
            let updated = update_factor(x, &model, mode, config.epsilon_guard)?;
            let (normalized, scales) = normalize_columns(&updated).map_err(|e| match e {
                Error::DegenerateRank { column, .. } => Error::DegenerateRank {
                    column,
                    iteration: Some(iter),
                },
                other => other,
            })?;
            model.factors[mode] = normalized;
            for (j, &s) in scales.iter().enumerate() {
                for v in model.z.col_mut(j) {
                    *v *= s;
                }
            }
        }
        model.z = update_z_scaled(x, &model, g.as_ref(), z_scale, config.epsilon_guard)?;

        let recon = model.reconstruct()?;
        let err2 = fidelity_sq(x, &recon);
        let penalty = match &g {
            Some(g) if config.lambda != 0.0 => g.penalty(&model.z)?,
            _ => 0.0,
        };
        let obj = err2 + config.lambda * penalty;
        let rse = err2.sqrt() / xnorm;
        objective_trace.push(obj);
        rse_trace.push(rse);
        iter_seconds.push(watch.elapsed());

        if rse < config.tol_rse {
            termination = TerminationReason::RseConverged;
            break;
        }
        let k = objective_trace.len();
        if k >= 2 {
            let delta = (objective_trace[k - 2] - objective_trace[k - 1]).abs();
            let reference = if config.absolute_obj_tol {
                1.0
            } else {
                objective_trace[0].max(f64::MIN_POSITIVE)
            };
            if delta < config.tol_obj * reference {
                termination = TerminationReason::ObjectiveConverged;
                break;
            }
        }
    }

    let kkt = kkt_residual(x, &model, g.as_ref(), config.lambda)?;
    Ok((
        model,
        SolveTrace {
            objective: objective_trace,
            rse: rse_trace,
            iter_seconds,
            termination,
            kkt_residual: kkt,
        },
    ))
}

fn check_nonnegative(x: &DenseTensor) -> Result<()> {
    if let Some((index, value)) = x.first_negative() {
        return Err(Error::NegativeEntry { index, value });
    }
    Ok(())
}

/// Hypergraph-regularized nonnegative CP factorization. The sample hypergraph
/// is built over the vectorized slices of the last mode; with `lambda == 0`
/// no hypergraph is built and the run reduces to plain NTF.
pub fn hyperntf_solve(x: &DenseTensor, config: &SolverConfig) -> Result<(FactorModel, SolveTrace)> {
    config.validate()?;
    check_nonnegative(x)?;
    if x.order() < 2 {
        return Err(Error::invalid("solver needs an order-2 or higher tensor"));
    }
    let g = if config.lambda != 0.0 {
        let samples = sample_slices(x);
        Some(build_knn_hypergraph(
            &samples,
            config.knn,
            config.weight_scheme,
        )?)
    } else {
        None
    };
    solve_cp(x, config, g)
}

/// Plain nonnegative tensor factorization: the regularized solver with the
/// penalty switched off.
pub fn ntf_solve(x: &DenseTensor, config: &SolverConfig) -> Result<(FactorModel, SolveTrace)> {
    let mut cfg = config.clone();
    cfg.lambda = 0.0;
    hyperntf_solve(x, &cfg)
}

/// Vectorized sample-mode slices (contiguous under first-index-fastest
/// storage).
pub fn sample_slices(x: &DenseTensor) -> Vec<Vec<f64>> {
    let n = x.order();
    let m = x.dims()[n - 1];
    let stride = x.len() / m;
    (0..m)
        .map(|i| x.data()[i * stride..(i + 1) * stride].to_vec())
        .collect()
}

/// Tucker-form model shared by the NTD and HOSVD baselines. The sample-mode
/// embedding for downstream evaluation is the last factor.
#[derive(Debug, Clone)]
pub struct TuckerModel {
    pub core: DenseTensor,
    pub factors: Vec<DenseMatrix>,
}

impl TuckerModel {
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        let mut t = self.core.clone();
        for (mode, u) in self.factors.iter().enumerate() {
            t = t.mode_mat_product(u, mode)?;
        }
        Ok(t)
    }

    pub fn sample_factor(&self) -> &DenseMatrix {
        self.factors.last().expect("at least one mode")
    }
}

/// Nonnegative Tucker decomposition by multiplicative updates on every factor
/// and the core.
pub fn ntd_solve(
    x: &DenseTensor,
    ranks: &[usize],
    config: &SolverConfig,
) -> Result<(TuckerModel, SolveTrace)> {
    use rand::{Rng, SeedableRng};
    config.validate()?;
    check_nonnegative(x)?;
    let n = x.order();
    if ranks.len() != n {
        return Err(Error::invalid(format!(
            "expected {n} ranks, got {}",
            ranks.len()
        )));
    }
    if ranks.iter().any(|&r| r < 1) {
        return Err(Error::invalid("ranks must be at least 1"));
    }
    let xnorm = x.frobenius();
    if xnorm == 0.0 {
        return Err(Error::invalid("input tensor has zero norm"));
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let mut factors: Vec<DenseMatrix> = Vec::with_capacity(n);
    for (&d, &r) in x.dims().iter().zip(ranks) {
        let data = (0..d * r).map(|_| rng.random_range(0.1..1.1)).collect();
        factors.push(DenseMatrix::from_vec(d, r, data)?);
    }
    let core_len: usize = ranks.iter().product();
    let core_data: Vec<f64> = (0..core_len).map(|_| rng.random_range(0.1..1.1)).collect();
    let mut core = DenseTensor::new(ranks.to_vec(), core_data)?;

    let watch = Stopwatch::start();
    let mut objective_trace = Vec::new();
    let mut rse_trace = Vec::new();
    let mut iter_seconds = Vec::new();
    let mut termination = TerminationReason::MaxIterations;

    for _iter in 1..=config.max_iter {
        for mode in 0..n {
            // numerator: (X x_{i!=mode} U_i^T)_(mode) * G_(mode)^T
            let mut t = x.clone();
            for (i, u) in factors.iter().enumerate() {
                if i == mode {
                    continue;
                }
                t = t.mode_mat_product(&u.transpose(), i)?;
            }
            let num = t.unfold(mode)?.matmul_bt(&core.unfold(mode)?)?;

            // denominator: U_mode * [G_(mode) * (G x_{i!=mode} U_i^T U_i)_(mode)^T]
            let mut s = core.clone();
            for (i, u) in factors.iter().enumerate() {
                if i == mode {
                    continue;
                }
                s = s.mode_mat_product(&u.gram(), i)?;
            }
            let btb = core.unfold(mode)?.matmul_bt(&s.unfold(mode)?)?;
            let den = factors[mode].matmul(&btb)?;
            factors[mode] = mur_ratio(&factors[mode], &num, &den, config.epsilon_guard);
        }

        // core update
        let mut num_core = x.clone();
        for (i, u) in factors.iter().enumerate() {
            num_core = num_core.mode_mat_product(&u.transpose(), i)?;
        }
        let mut den_core = core.clone();
        for (i, u) in factors.iter().enumerate() {
            den_core = den_core.mode_mat_product(&u.gram(), i)?;
        }
        {
            let num = num_core.data();
            let den = den_core.data();
            for (i, v) in core.data_mut().iter_mut().enumerate() {
                *v *= num[i] / den[i].max(config.epsilon_guard);
            }
        }

        let model = TuckerModel {
            core: core.clone(),
            factors: factors.clone(),
        };
        let recon = model.reconstruct()?;
        let err2 = fidelity_sq(x, &recon);
        let rse = err2.sqrt() / xnorm;
        objective_trace.push(err2);
        rse_trace.push(rse);
        iter_seconds.push(watch.elapsed());

        if rse < config.tol_rse {
            termination = TerminationReason::RseConverged;
            break;
        }
        let k = objective_trace.len();
        if k >= 2 {
            let delta = (objective_trace[k - 2] - objective_trace[k - 1]).abs();
            let reference = if config.absolute_obj_tol {
                1.0
            } else {
                objective_trace[0].max(f64::MIN_POSITIVE)
            };
            if delta < config.tol_obj * reference {
                termination = TerminationReason::ObjectiveConverged;
                break;
            }
        }
    }

    Ok((
        TuckerModel { core, factors },
        SolveTrace {
            objective: objective_trace,
            rse: rse_trace,
            iter_seconds,
            termination,
            kkt_residual: 0.0,
        },
    ))
}

/// Truncated higher-order SVD: per mode, the leading left singular vectors of
/// the unfolding (through the symmetric eigenproblem of its Gram), then the
/// core by contraction. Deterministic; each eigenvector's largest-magnitude
/// entry is made positive.
pub fn hosvd(x: &DenseTensor, ranks: &[usize]) -> Result<TuckerModel> {
    let n = x.order();
    if ranks.len() != n {
        return Err(Error::invalid(format!(
            "expected {n} ranks, got {}",
            ranks.len()
        )));
    }
    for (mode, (&r, &d)) in ranks.iter().zip(x.dims()).enumerate() {
        if r < 1 || r > d {
            return Err(Error::invalid(format!(
                "rank {r} out of range 1..={d} for mode {mode}"
            )));
        }
    }
    let mut factors = Vec::with_capacity(n);
    for (mode, &r) in ranks.iter().enumerate() {
        let unf = x.unfold(mode)?;
        let gram = unf.matmul_bt(&unf)?;
        let (_, vecs) = eigh(&gram)?;
        let d = x.dims()[mode];
        let mut u = DenseMatrix::zeros(d, r);
        for j in 0..r {
            // eigenvalues ascend; leading vectors sit at the back
            let src = vecs.col(d - 1 - j);
            u.col_mut(j).copy_from_slice(src);
            fix_sign(u.col_mut(j));
        }
        factors.push(u);
    }
    let mut core = x.clone();
    for (mode, u) in factors.iter().enumerate() {
        core = core.mode_mat_product(&u.transpose(), mode)?;
    }
    Ok(TuckerModel { core, factors })
}

/// Flip a vector's sign so its largest-magnitude entry is positive; ties go
/// to the earliest index.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    let mut best_abs = -1.0f64;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::hypergraph_laplacian;
    use crate::tensor::rse;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_nonneg_tensor(dims: &[usize], seed: u64) -> DenseTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total = dims.iter().product();
        DenseTensor::new(
            dims.to_vec(),
            (0..total).map(|_| rng.random_range(0.0..1.0)).collect(),
        )
        .unwrap()
    }

    fn monotone_within_slack(values: &[f64]) -> bool {
        let slack = 1e-9 * values.first().copied().unwrap_or(1.0).max(1.0);
        values.windows(2).all(|w| w[1] <= w[0] + slack)
    }

    #[test]
    fn init_is_deterministic_positive_and_normalized() {
        let a = init_factors(&[4, 5, 6], 3, 42).unwrap();
        let b = init_factors(&[4, 5, 6], 3, 42).unwrap();
        assert_eq!(a.factors[0], b.factors[0]);
        assert_eq!(a.z, b.z);

        for f in a.all_factors() {
            assert!(f.data().iter().all(|&v| v > 0.0));
        }
        for u in &a.factors {
            for j in 0..u.cols() {
                let s: f64 = u.col(j).iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn objective_zero_cases() {
        let m = init_factors(&[3, 4, 5], 2, 1).unwrap();
        let x = m.reconstruct().unwrap();
        let l = DenseMatrix::zeros(5, 5);
        assert!(objective(&x, &m, &l, 0.0).unwrap().abs() < 1e-18);

        // constant-row Z, exact reconstruction, lambda > 0
        let mut m2 = m.clone();
        for j in 0..m2.z.cols() {
            let v = 0.7 + j as f64;
            for e in m2.z.col_mut(j) {
                *e = v;
            }
        }
        let x2 = m2.reconstruct().unwrap();
        let samples = sample_slices(&x2);
        let g = build_knn_hypergraph(&samples, 2, WeightScheme::Unit).unwrap();
        let l = hypergraph_laplacian(&g);
        let obj = objective(&x2, &m2, &l, 3.0).unwrap();
        assert!(obj.abs() < 1e-9, "objective {obj}");
    }

    #[test]
    fn objective_matches_term_by_term_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_nonneg_tensor(&[3, 4, 6], 8);
        let mut m = init_factors(&[3, 4, 6], 2, 9).unwrap();
        for f in m.factors.iter_mut() {
            for v in f.data_mut() {
                *v *= rng.random_range(0.5..1.5);
            }
        }
        let samples = sample_slices(&x);
        let g = build_knn_hypergraph(&samples, 2, WeightScheme::Unit).unwrap();
        let l = hypergraph_laplacian(&g);
        let lambda = 2.5;
        let got = objective(&x, &m, &l, lambda).unwrap();

        // oracle: explicit reconstruction error plus the pairwise double sum
        let recon = m.reconstruct().unwrap();
        let mut err2 = 0.0;
        for (a, b) in x.data().iter().zip(recon.data()) {
            err2 += (a - b) * (a - b);
        }
        let mut pen = 0.0;
        for (e, verts) in g.edges().iter().enumerate() {
            for &i in verts {
                for &j in verts {
                    let mut d2 = 0.0;
                    for c in 0..m.z.cols() {
                        let d = m.z.get(i, c) - m.z.get(j, c);
                        d2 += d * d;
                    }
                    pen += 0.5 * g.weights()[e] / g.edge_degrees()[e] * d2;
                }
            }
        }
        let want = err2 + lambda * pen;
        assert!((got - want).abs() / want.max(1.0) < 1e-10);

        // sparse path matches too
        let sparse = objective_sparse(&x, &m, Some(&g), lambda).unwrap();
        assert!((sparse - want).abs() / want.max(1.0) < 1e-10);
    }

    #[test]
    fn update_factor_fixed_point_at_exact_reconstruction() {
        let m = init_factors(&[4, 5, 7], 3, 11).unwrap();
        let x = m.reconstruct().unwrap();
        for mode in 0..2 {
            let updated = update_factor(&x, &m, mode, 1e-12).unwrap();
            for (a, b) in updated.data().iter().zip(m.factors[mode].data()) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn update_factor_monotone_and_nonnegative_over_seeds() {
        let l = DenseMatrix::zeros(30, 30);
        for seed in 0..100 {
            let x = random_nonneg_tensor(&[4, 5, 30], 1000 + seed);
            let m = init_factors(&[4, 5, 30], 3, seed).unwrap();
            let before = objective(&x, &m, &l, 0.0).unwrap();
            let mode = (seed % 2) as usize;
            let updated = update_factor(&x, &m, mode, 1e-12).unwrap();
            assert!(updated.data().iter().all(|&v| v >= 0.0));
            let mut m2 = m.clone();
            m2.factors[mode] = updated;
            let after = objective(&x, &m2, &l, 0.0).unwrap();
            assert!(
                after <= before + 1e-9 * before.max(1.0),
                "seed {seed}: {before} -> {after}"
            );
        }
    }

    #[test]
    fn normalize_columns_cases() {
        let m = init_factors(&[4, 3, 5], 2, 13).unwrap();
        let (u, scales) = normalize_columns(&m.factors[0]).unwrap();
        // already column-stochastic from init
        for (a, b) in u.data().iter().zip(m.factors[0].data()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(scales.iter().all(|&s| (s - 1.0).abs() < 1e-12));

        let mut scaled = m.factors[0].clone();
        for v in scaled.data_mut() {
            *v *= 3.0;
        }
        let (u2, scales2) = normalize_columns(&scaled).unwrap();
        for (a, b) in u2.data().iter().zip(u.data()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(scales2.iter().all(|&s| (s - 3.0).abs() < 1e-12));

        let mut zeroed = m.factors[0].clone();
        for v in zeroed.col_mut(1) {
            *v = 0.0;
        }
        assert!(matches!(
            normalize_columns(&zeroed),
            Err(Error::DegenerateRank { column: 1, .. })
        ));
    }

    #[test]
    fn normalize_and_absorb_preserves_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut m = init_factors(&[3, 4, 6], 2, 18).unwrap();
        for f in m.factors.iter_mut() {
            for v in f.data_mut() {
                *v *= rng.random_range(0.5..4.0);
            }
        }
        let before = m.reconstruct().unwrap();
        for mode in 0..m.factors.len() {
            let (normalized, scales) = normalize_columns(&m.factors[mode]).unwrap();
            m.factors[mode] = normalized;
            for (j, &s) in scales.iter().enumerate() {
                for v in m.z.col_mut(j) {
                    *v *= s;
                }
            }
        }
        let after = m.reconstruct().unwrap();
        for (a, b) in before.data().iter().zip(after.data()) {
            assert!((a - b).abs() <= 1e-12 * before.frobenius().max(1.0));
        }
    }

    #[test]
    fn update_z_fixed_points() {
        // lambda = 0, exact reconstruction
        let m = init_factors(&[4, 5, 7], 3, 19).unwrap();
        let x = m.reconstruct().unwrap();
        let z = update_z(&x, &m, None, 0.0, 1e-12).unwrap();
        for (a, b) in z.data().iter().zip(m.z.data()) {
            assert!((a - b).abs() <= 1e-12);
        }

        // lambda > 0, exact reconstruction, row-constant Z
        let mut m2 = m.clone();
        for j in 0..m2.z.cols() {
            let v = 0.4 + 0.3 * j as f64;
            for e in m2.z.col_mut(j) {
                *e = v;
            }
        }
        let x2 = m2.reconstruct().unwrap();
        let samples = sample_slices(&x2);
        let g = build_knn_hypergraph(&samples, 2, WeightScheme::Unit).unwrap();
        let z2 = update_z(&x2, &m2, Some(&g), 4.0, 1e-12).unwrap();
        for (a, b) in z2.data().iter().zip(m2.z.data()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn update_z_monotone_with_penalty_over_seeds() {
        for seed in 0..100 {
            let x = random_nonneg_tensor(&[4, 5, 12], 2000 + seed);
            let m = init_factors(&[4, 5, 12], 3, seed).unwrap();
            let samples = sample_slices(&x);
            let g = build_knn_hypergraph(&samples, 3, WeightScheme::Unit).unwrap();
            let l = hypergraph_laplacian(&g);
            let before = objective(&x, &m, &l, 4.0).unwrap();
            let z = update_z(&x, &m, Some(&g), 4.0, 1e-12).unwrap();
            assert!(z.data().iter().all(|&v| v >= 0.0));
            let mut m2 = m.clone();
            m2.z = z;
            let after = objective(&x, &m2, &l, 4.0).unwrap();
            assert!(
                after <= before + 1e-9 * before.max(1.0),
                "seed {seed}: {before} -> {after}"
            );
        }
    }

    #[test]
    fn hyperntf_recovers_synthetic_low_rank() {
        let (x, _) = crate::synthetic::cp_lowrank_tensor(&[10, 10, 60], 3, 99);
        let mut best = f64::INFINITY;
        for seed in 0..5 {
            let config = SolverConfig {
                rank: 3,
                lambda: 0.0,
                max_iter: 2000,
                tol_rse: 1e-3,
                tol_obj: 1e-12,
                seed,
                ..SolverConfig::default()
            };
            let (_, trace) = hyperntf_solve(&x, &config).unwrap();
            best = best.min(*trace.rse.last().unwrap());
        }
        assert!(best < 1e-2, "best RSE {best}");
    }

    #[test]
    fn hyperntf_trace_monotone_and_deterministic() {
        let x = random_nonneg_tensor(&[6, 7, 30], 5);
        let config = SolverConfig {
            rank: 4,
            lambda: 4.0,
            knn: 3,
            max_iter: 60,
            ..SolverConfig::default()
        };
        let (m1, t1) = hyperntf_solve(&x, &config).unwrap();
        assert!(monotone_within_slack(&t1.objective), "{:?}", t1.objective);

        let (m2, t2) = hyperntf_solve(&x, &config).unwrap();
        assert_eq!(t1.objective, t2.objective);
        assert_eq!(t1.rse, t2.rse);
        assert_eq!(m1.z, m2.z);
        assert!(t1.kkt_residual >= 0.0 && t1.kkt_residual.is_finite());

        // factor columns land on the simplex after every sweep
        for u in &m1.factors {
            for j in 0..u.cols() {
                let s: f64 = u.col(j).iter().sum();
                assert!((s - 1.0).abs() < 1e-12, "column sum {s}");
            }
        }
        assert!(m1.z.data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn config_switches_change_behavior() {
        let x = random_nonneg_tensor(&[5, 4, 15], 61);

        // absolute objective tolerance stops on |delta| directly
        let config = SolverConfig {
            rank: 2,
            max_iter: 400,
            tol_obj: 0.1,
            absolute_obj_tol: true,
            tol_rse: 1e-12,
            ..SolverConfig::default()
        };
        let (_, trace) = hyperntf_solve(&x, &config).unwrap();
        assert_eq!(trace.termination, TerminationReason::ObjectiveConverged);
        let k = trace.objective.len();
        assert!((trace.objective[k - 2] - trace.objective[k - 1]).abs() < 0.1);

        // dropping the lambda scaling on the Z update changes the iterates
        let base = SolverConfig {
            rank: 2,
            lambda: 4.0,
            knn: 3,
            max_iter: 20,
            ..SolverConfig::default()
        };
        let unscaled = SolverConfig {
            unscaled_z_penalty: true,
            ..base.clone()
        };
        let (m_a, _) = hyperntf_solve(&x, &base).unwrap();
        let (m_b, _) = hyperntf_solve(&x, &unscaled).unwrap();
        assert_ne!(m_a.z, m_b.z);
        assert!(m_b.z.data().iter().all(|&v| v >= 0.0));

        // heat-kernel edge weights run end to end and keep the trace monotone
        let heat = SolverConfig {
            weight_scheme: WeightScheme::HeatKernel,
            ..base
        };
        let (_, trace) = hyperntf_solve(&x, &heat).unwrap();
        assert!(monotone_within_slack(&trace.objective));
    }

    #[test]
    fn hyperntf_rejects_negative_input() {
        let mut x = random_nonneg_tensor(&[3, 4, 5], 6);
        x.data_mut()[7] = -0.5;
        let err = hyperntf_solve(&x, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NegativeEntry { index: 7, .. }));
    }

    #[test]
    fn ntf_equals_lambda_zero_hyperntf_bitwise() {
        let x = random_nonneg_tensor(&[5, 6, 20], 7);
        let config = SolverConfig {
            rank: 3,
            lambda: 4.0, // ntf_solve must force this to zero
            max_iter: 40,
            seed: 3,
            ..SolverConfig::default()
        };
        let mut zeroed = config.clone();
        zeroed.lambda = 0.0;
        let (m1, t1) = ntf_solve(&x, &config).unwrap();
        let (m2, t2) = hyperntf_solve(&x, &zeroed).unwrap();
        assert_eq!(t1.objective, t2.objective);
        assert_eq!(m1.z, m2.z);
    }

    #[test]
    fn ntf_rank1_recovery() {
        let (x, _) = crate::synthetic::cp_lowrank_tensor(&[6, 5, 40], 1, 23);
        let mut best = f64::INFINITY;
        for seed in 0..3 {
            let config = SolverConfig {
                rank: 1,
                max_iter: 2000,
                tol_rse: 1e-5,
                tol_obj: 1e-13,
                seed,
                ..SolverConfig::default()
            };
            let (_, trace) = ntf_solve(&x, &config).unwrap();
            assert!(monotone_within_slack(&trace.objective));
            best = best.min(*trace.rse.last().unwrap());
        }
        assert!(best < 1e-4, "best RSE {best}");
    }

    #[test]
    fn ntd_recovers_synthetic_tucker() {
        let x = crate::synthetic::sparse_tucker_tensor(&[10, 10, 60], &[3, 3, 3], 0.5, 2);
        let mut best = f64::INFINITY;
        for seed in 0..5 {
            let config = SolverConfig {
                max_iter: 2000,
                tol_rse: 1e-3,
                tol_obj: 1e-12,
                seed,
                ..SolverConfig::default()
            };
            let (model, trace) = ntd_solve(&x, &[3, 3, 3], &config).unwrap();
            assert!(monotone_within_slack(&trace.objective));
            assert!(model.core.data().iter().all(|&v| v >= 0.0));
            assert!(model
                .factors
                .iter()
                .all(|f| f.data().iter().all(|&v| v >= 0.0)));
            best = best.min(*trace.rse.last().unwrap());
        }
        assert!(best < 1e-2, "best RSE {best}");
    }

    #[test]
    fn hosvd_orthonormal_and_exact_cases() {
        let x = random_nonneg_tensor(&[5, 4, 6], 37);
        let model = hosvd(&x, &[3, 2, 4]).unwrap();
        for u in &model.factors {
            let utu = u.gram();
            for i in 0..utu.rows() {
                for j in 0..utu.cols() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((utu.get(i, j) - want).abs() < 1e-10);
                }
            }
        }

        // rank-1 input, ranks all 1: exact
        let (r1, _) = crate::synthetic::cp_lowrank_tensor(&[5, 4, 6], 1, 41);
        let model = hosvd(&r1, &[1, 1, 1]).unwrap();
        let recon = model.reconstruct().unwrap();
        assert!(rse(&r1, &recon).unwrap() <= 1e-10);

        // full ranks: exact
        let model = hosvd(&x, &[5, 4, 6]).unwrap();
        let recon = model.reconstruct().unwrap();
        assert!(rse(&x, &recon).unwrap() <= 1e-10);

        assert!(hosvd(&x, &[6, 4, 6]).is_err());
        assert!(hosvd(&x, &[3, 2]).is_err());
    }

    #[test]
    fn solver_config_validation() {
        let bad = [
            SolverConfig { rank: 0, ..SolverConfig::default() },
            SolverConfig { tol_obj: 0.0, ..SolverConfig::default() },
            SolverConfig { lambda: -1.0, ..SolverConfig::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn reduced_data_shape_contract() {
        let x = random_nonneg_tensor(&[4, 3, 17], 51);
        let config = SolverConfig {
            rank: 2,
            max_iter: 3,
            ..SolverConfig::default()
        };
        let (m, _) = hyperntf_solve(&x, &config).unwrap();
        assert_eq!((m.z.rows(), m.z.cols()), (17, 2));
        assert_eq!(m.factors.len(), 2);
    }
}
