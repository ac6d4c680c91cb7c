//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test -p hyperntf-cli --test acceptance -- --nocapture`.

use std::process::Command;
use std::time::Instant;

use hyperntf_core::embedding::{
    gen_manifold, hypergraph_spectral_embed, neighborhood_preservation, EmbedMethod,
    EmbeddingResult, ManifoldKind,
};
use hyperntf_core::evaluation::{clustering_accuracy, evaluate_clustering, nmi};
use hyperntf_core::factorization::{
    hyperntf_solve, init_factors, normalize_columns, ntd_solve, update_factor, update_z,
    SolverConfig,
};
use hyperntf_core::hypergraph::{
    build_knn_hypergraph, hypergraph_laplacian, regularizer_value, Hypergraph, WeightScheme,
};
use hyperntf_core::linalg::eigh;
use hyperntf_core::synthetic::{blob_tensor, cp_lowrank_tensor, sparse_tucker_tensor};
use hyperntf_core::tensor::{khatri_rao_chain, DenseMatrix, DenseTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(criterion: usize, desc: &str, ok: bool, detail: String) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion:2}: {status} - {desc} ({detail})");
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn random_nonneg_tensor(rng: &mut ChaCha8Rng, dims: &[usize]) -> DenseTensor {
    let total = dims.iter().product();
    DenseTensor::new(
        dims.to_vec(),
        (0..total).map(|_| rng.random_range(0.0..1.0)).collect(),
    )
    .unwrap()
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.random_range(0.0..1.0)).collect(),
    )
    .unwrap()
}

#[test]
fn criterion_01_mttkrp_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let order = if trial % 2 == 0 { 3 } else { 4 };
        let dims: Vec<usize> = (0..order).map(|_| rng.random_range(2..=6)).collect();
        let j = rng.random_range(1..=4);
        let t = random_nonneg_tensor(&mut rng, &dims);
        let factors: Vec<DenseMatrix> = dims.iter().map(|&d| random_matrix(&mut rng, d, j)).collect();
        let refs: Vec<&DenseMatrix> = factors.iter().collect();
        for mode in 0..order {
            let others: Vec<&DenseMatrix> = (0..order).filter(|&m| m != mode).map(|m| refs[m]).collect();
            let fast = t.mttkrp(&others, mode).unwrap();
            let chain = khatri_rao_chain(&refs, Some(mode)).unwrap();
            let slow = t.unfold(mode).unwrap().matmul(&chain).unwrap();
            let mut diff2 = 0.0;
            for (a, b) in fast.data().iter().zip(slow.data()) {
                diff2 += (a - b) * (a - b);
            }
            let rel = diff2.sqrt() / slow.frobenius().max(f64::MIN_POSITIVE);
            worst = worst.max(rel);
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    verdict(
        1,
        "column-wise MTTKRP matches the materialized Khatri-Rao oracle",
        worst <= 1e-10 && elapsed < 10.0,
        format!("worst relative error {worst:.2e}, {elapsed:.1}s"),
    );
}

#[test]
fn criterion_02_regularizer_dual_form() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let m = rng.random_range(4..=10);
        let e = rng.random_range(3..=12);
        let edges: Vec<Vec<usize>> = (0..e)
            .map(|_| {
                let size = rng.random_range(2..=m.min(5));
                let mut verts: Vec<usize> = Vec::new();
                while verts.len() < size {
                    let v = rng.random_range(0..m);
                    if !verts.contains(&v) {
                        verts.push(v);
                    }
                }
                verts
            })
            .collect();
        let weights: Vec<f64> = (0..e).map(|_| rng.random_range(0.2..2.0)).collect();
        let g = Hypergraph::new(m, edges, weights).unwrap();
        let j = rng.random_range(1..=4);
        let z = DenseMatrix::from_vec(
            m,
            j,
            (0..m * j).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let l = hypergraph_laplacian(&g);
        let trace_form = regularizer_value(&l, &z).unwrap();
        let mut pairwise = 0.0;
        for (e, verts) in g.edges().iter().enumerate() {
            for &i in verts {
                for &jv in verts {
                    let mut d2 = 0.0;
                    for c in 0..z.cols() {
                        let d = z.get(i, c) - z.get(jv, c);
                        d2 += d * d;
                    }
                    pairwise += 0.5 * g.weights()[e] / g.edge_degrees()[e] * d2;
                }
            }
        }
        let rel = (trace_form - pairwise).abs() / pairwise.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    let elapsed = started.elapsed().as_secs_f64();
    verdict(
        2,
        "trace form of the penalty equals the pairwise double sum",
        worst <= 1e-10 && elapsed < 5.0,
        format!("worst relative error {worst:.2e}, {elapsed:.1}s"),
    );
}

#[test]
fn criterion_03_laplacian_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst_row = 0.0f64;
    let mut worst_eig = f64::INFINITY;
    for _ in 0..50 {
        let m = rng.random_range(6..=50);
        let dim = rng.random_range(2..=4);
        let samples: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let k = rng.random_range(1..=(m - 1).min(6));
        let g = build_knn_hypergraph(&samples, k, WeightScheme::Unit).unwrap();
        let l = hypergraph_laplacian(&g);
        for i in 0..m {
            let row_sum: f64 = (0..m).map(|j| l.get(i, j)).sum();
            worst_row = worst_row.max(row_sum.abs());
        }
        let (vals, _) = eigh(&l).unwrap();
        worst_eig = worst_eig.min(vals[0]);
    }
    verdict(
        3,
        "Laplacian annihilates constants and is positive semidefinite",
        worst_row <= 1e-12 && worst_eig >= -1e-10,
        format!("max |L1| {worst_row:.2e}, min eigenvalue {worst_eig:.2e}"),
    );
}

#[test]
fn criterion_04_objective_monotonicity() {
    let started = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    let mut runs = 0usize;
    for (li, lambda) in [0.0, 1.0, 4.0].into_iter().enumerate() {
        for s in 0..7u64 {
            runs += 1;
            let seed = 1000 * (li as u64 + 1) + s;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dims = vec![
                rng.random_range(4..=8),
                rng.random_range(4..=8),
                rng.random_range(20..=50),
            ];
            let x = random_nonneg_tensor(&mut rng, &dims);
            let config = SolverConfig {
                rank: rng.random_range(2..=5),
                lambda,
                knn: 3,
                max_iter: 500,
                seed,
                ..SolverConfig::default()
            };
            let (_, trace) = hyperntf_solve(&x, &config).unwrap();
            let scale = trace.objective[0];
            for w in trace.objective.windows(2) {
                worst = worst.max((w[1] - w[0]) / scale);
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    verdict(
        4,
        "per-sweep objective changes stay below +1e-9 relative",
        worst <= 1e-9 && elapsed < 60.0,
        format!("{runs} runs, worst relative change {worst:.2e}, {elapsed:.1}s"),
    );
}

#[test]
fn criterion_05_fixed_points() {
    // lambda = 0: the solver re-derives the same init from the seed, so one
    // sweep on an exactly reconstructable tensor must return it unchanged
    let model = init_factors(&[6, 5, 12], 3, 77).unwrap();
    let x = model.reconstruct().unwrap();
    let config = SolverConfig {
        rank: 3,
        lambda: 0.0,
        max_iter: 1,
        seed: 77,
        ..SolverConfig::default()
    };
    let (solved, _) = hyperntf_solve(&x, &config).unwrap();
    let mut worst: f64 = 0.0;
    for (a, b) in solved.z.data().iter().zip(model.z.data()) {
        worst = worst.max((a - b).abs());
    }
    for (fa, fb) in solved.factors.iter().zip(&model.factors) {
        for (a, b) in fa.data().iter().zip(fb.data()) {
            worst = worst.max((a - b).abs());
        }
    }

    // lambda = 4 with row-constant Z: one manual sweep through the public ops
    let mut m2 = init_factors(&[6, 5, 12], 3, 78).unwrap();
    for j in 0..m2.z.cols() {
        let v = 0.5 + 0.2 * j as f64;
        for e in m2.z.col_mut(j) {
            *e = v;
        }
    }
    let x2 = m2.reconstruct().unwrap();
    let samples = hyperntf_core::factorization::sample_slices(&x2);
    let g = build_knn_hypergraph(&samples, 3, WeightScheme::Unit).unwrap();
    let mut swept = m2.clone();
    let mut worst2: f64 = 0.0;
    for mode in 0..swept.factors.len() {
        let updated = update_factor(&x2, &swept, mode, 1e-12).unwrap();
        let (normalized, scales) = normalize_columns(&updated).unwrap();
        swept.factors[mode] = normalized;
        for (j, &s) in scales.iter().enumerate() {
            for v in swept.z.col_mut(j) {
                *v *= s;
            }
        }
    }
    swept.z = update_z(&x2, &swept, Some(&g), 4.0, 1e-12).unwrap();
    for (a, b) in swept.z.data().iter().zip(m2.z.data()) {
        worst2 = worst2.max((a - b).abs());
    }
    for (fa, fb) in swept.factors.iter().zip(&m2.factors) {
        for (a, b) in fa.data().iter().zip(fb.data()) {
            worst2 = worst2.max((a - b).abs());
        }
    }

    verdict(
        5,
        "exact-reconstruction models are fixed points of a full sweep",
        worst <= 1e-12 && worst2 <= 1e-12,
        format!("max drift {worst:.2e} (lambda 0), {worst2:.2e} (lambda 4, constant rows)"),
    );
}

#[test]
fn criterion_06_synthetic_recovery() {
    let started = Instant::now();
    let (x, _) = cp_lowrank_tensor(&[10, 10, 60], 3, 606);
    let mut best_cp = f64::INFINITY;
    let mut iters_cp = 0;
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
        let rse = *trace.rse.last().unwrap();
        if rse < best_cp {
            best_cp = rse;
            iters_cp = trace.iterations();
        }
    }
    let cp_elapsed = started.elapsed().as_secs_f64();

    let tucker_started = Instant::now();
    let xt = sparse_tucker_tensor(&[10, 10, 60], &[3, 3, 3], 0.5, 2);
    let mut best_tucker = f64::INFINITY;
    for seed in 0..5 {
        let config = SolverConfig {
            max_iter: 2000,
            tol_rse: 1e-3,
            tol_obj: 1e-12,
            seed,
            ..SolverConfig::default()
        };
        let (_, trace) = ntd_solve(&xt, &[3, 3, 3], &config).unwrap();
        best_tucker = best_tucker.min(*trace.rse.last().unwrap());
    }
    let tucker_elapsed = tucker_started.elapsed().as_secs_f64();
    verdict(
        6,
        "known-factor syntheses are recovered below 1e-2 RSE",
        best_cp < 1e-2
            && best_tucker < 1e-2
            && iters_cp <= 2000
            && cp_elapsed < 60.0
            && tucker_elapsed < 60.0,
        format!(
            "CP best RSE {best_cp:.2e} in {iters_cp} iters ({cp_elapsed:.1}s), Tucker best RSE {best_tucker:.2e} ({tucker_elapsed:.1}s)"
        ),
    );
}

#[test]
fn criterion_07_clustering_protocol() {
    let started = Instant::now();
    let (x, truth) = blob_tensor(5, 5, 3, 50, 0.05, 707);
    let config = SolverConfig {
        rank: 3,
        lambda: 4.0,
        knn: 3,
        max_iter: 500,
        seed: 0,
        ..SolverConfig::default()
    };
    let (model, _) = hyperntf_solve(&x, &config).unwrap();
    let report = evaluate_clustering(&model.z, &truth, 3, 10, 0).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    verdict(
        7,
        "separated sample classes cluster at ACC >= 0.95, NMI >= 0.90",
        report.acc_mean >= 0.95 && report.nmi_mean >= 0.90 && elapsed < 30.0,
        format!(
            "ACC {:.3}+/-{:.3}, NMI {:.3}+/-{:.3}, {elapsed:.1}s",
            report.acc_mean, report.acc_std, report.nmi_mean, report.nmi_std
        ),
    );
}

#[test]
fn criterion_08_reduced_shape_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let x = random_nonneg_tensor(&mut rng, &[32, 32, 1440]);
    let config = SolverConfig {
        rank: 32,
        lambda: 4.0,
        knn: 3,
        max_iter: 2,
        seed: 0,
        ..SolverConfig::default()
    };
    let (model, _) = hyperntf_solve(&x, &config).unwrap();
    verdict(
        8,
        "reduced data has samples x rank shape",
        model.z.rows() == 1440 && model.z.cols() == 32,
        format!("Z is {}x{}", model.z.rows(), model.z.cols()),
    );
}

#[test]
fn criterion_09_manifold_unfolding_beats_random_projection() {
    // absolute floor frozen from a calibration run of this pipeline
    // (measured: embedding 0.923, random projection 0.593)
    const PRESERVATION_FLOOR: f64 = 0.80;
    let started = Instant::now();
    let pc = gen_manifold(ManifoldKind::ToroidalHelix, 1000, 1, 0.0).unwrap();
    let embed = hypergraph_spectral_embed(&pc, 10, 2).unwrap();
    let score = neighborhood_preservation(&pc, &embed, 10).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut proj = DenseMatrix::zeros(3, 2);
    for v in proj.data_mut() {
        *v = hyperntf_core::synthetic::standard_normal(&mut rng);
    }
    let mut coords = DenseMatrix::zeros(1000, 2);
    for i in 0..1000 {
        for d in 0..2 {
            let mut s = 0.0;
            for a in 0..3 {
                s += pc.points.get(i, a) * proj.get(a, d);
            }
            coords.set(i, d, s);
        }
    }
    let baseline_embed = EmbeddingResult {
        coords,
        method: EmbedMethod::GraphLaplacian,
        eigenvalues: vec![],
    };
    let baseline = neighborhood_preservation(&pc, &baseline_embed, 10).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    verdict(
        9,
        "helix unfolding preserves neighborhoods above the random-projection baseline",
        score > baseline && score >= PRESERVATION_FLOOR && elapsed < 60.0,
        format!("score {score:.3} vs baseline {baseline:.3}, floor {PRESERVATION_FLOOR}, {elapsed:.1}s"),
    );
}

#[test]
fn criterion_10_metric_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut hungarian_ok = true;
    for _ in 0..200 {
        let kp = rng.random_range(1..=5usize);
        let kt = rng.random_range(1..=5usize);
        let m = rng.random_range(4..=30usize);
        let pred: Vec<usize> = (0..m).map(|_| rng.random_range(0..kp)).collect();
        let truth: Vec<usize> = (0..m).map(|_| rng.random_range(0..kt)).collect();
        let fast = clustering_accuracy(&pred, &truth).unwrap();
        let slow = brute_force_acc(&pred, &truth);
        if (fast - slow).abs() > 1e-12 {
            hungarian_ok = false;
            break;
        }
    }

    let labels: Vec<usize> = (0..40).map(|i| i % 4).collect();
    let self_nmi = nmi(&labels, &labels).unwrap();

    let mut relabel_ok = true;
    for shift in 1..4 {
        let relabeled: Vec<usize> = labels.iter().map(|&c| (c + shift) % 4).collect();
        if (clustering_accuracy(&relabeled, &labels).unwrap() - 1.0).abs() > 1e-12 {
            relabel_ok = false;
        }
    }
    verdict(
        10,
        "assignment ACC matches brute force; NMI and relabeling identities hold",
        hungarian_ok && (self_nmi - 1.0).abs() < 1e-12 && relabel_ok,
        format!("200 contingency trials, NMI(a,a) = {self_nmi}"),
    );
}

fn brute_force_acc(pred: &[usize], truth: &[usize]) -> f64 {
    let kp = pred.iter().max().unwrap() + 1;
    let kt = truth.iter().max().unwrap() + 1;
    let n = kp.max(kt);
    let mut counts = vec![vec![0.0f64; n]; n];
    for (&p, &t) in pred.iter().zip(truth) {
        counts[p][t] += 1.0;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = 0.0f64;
    fn recurse(perm: &mut Vec<usize>, at: usize, counts: &[Vec<f64>], best: &mut f64) {
        if at == perm.len() {
            let total: f64 = perm.iter().enumerate().map(|(i, &j)| counts[i][j]).sum();
            *best = best.max(total);
            return;
        }
        for i in at..perm.len() {
            perm.swap(at, i);
            recurse(perm, at + 1, counts, best);
            perm.swap(at, i);
        }
    }
    recurse(&mut perm, 0, &counts, &mut best);
    best / pred.len() as f64
}

#[test]
fn criterion_11_end_to_end_determinism() {
    let bin = env!("CARGO_BIN_EXE_hyperntf");
    let dir = tempfile::tempdir().unwrap();

    // blob fixture as CSV input + labels
    let (x, labels) = blob_tensor(4, 4, 3, 20, 0.05, 1111);
    let pixels = 16;
    let m = 60;
    let mut csv = String::from("p1\n");
    csv = csv.replace("p1", &(1..=pixels).map(|j| format!("p{j}")).collect::<Vec<_>>().join(","));
    for s in 0..m {
        let row: Vec<String> = (0..pixels)
            .map(|p| format!("{:.16e}", x.data()[s * pixels + p]))
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    let input = dir.path().join("blobs.csv");
    std::fs::write(&input, csv).unwrap();
    let labels_path = dir.path().join("labels.csv");
    let mut lcsv = String::from("label\n");
    for l in &labels {
        lcsv.push_str(&format!("{l}\n"));
    }
    std::fs::write(&labels_path, lcsv).unwrap();

    let run = |out: &str| {
        let status = Command::new(bin)
            .args([
                "cluster-eval",
                "--input",
                input.to_str().unwrap(),
                "--labels",
                labels_path.to_str().unwrap(),
                "--method",
                "hyperntf",
                "--rank",
                "3",
                "--lambda",
                "4",
                "--knn",
                "3",
                "--max-iter",
                "60",
                "--runs",
                "5",
                "--seed",
                "7",
                "--output",
                dir.path().join(out).to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        let read = |name: &str| std::fs::read(dir.path().join(out).join(name)).unwrap();
        (read("report.txt"), read("z.csv"), read("trace.csv"))
    };
    let a = run("out_a");
    let b = run("out_b");
    verdict(
        11,
        "repeated runs with one config and seed are byte-identical",
        a == b,
        format!(
            "report {} bytes, z {} bytes, trace {} bytes",
            a.0.len(),
            a.1.len(),
            a.2.len()
        ),
    );
}

#[test]
fn criterion_12_scaling_stays_subquadratic() {
    let per_sweep = |m: usize| -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1212);
        let dims = vec![6, 6, m];
        let x = random_nonneg_tensor(&mut rng, &dims);
        let config = SolverConfig {
            rank: 4,
            lambda: 4.0,
            knn: 5,
            max_iter: 30,
            tol_obj: 1e-15,
            tol_rse: 1e-12,
            seed: 1,
            ..SolverConfig::default()
        };
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let (_, trace) = hyperntf_solve(&x, &config).unwrap();
            let mut deltas: Vec<f64> = trace
                .iter_seconds
                .windows(2)
                .map(|w| w[1] - w[0])
                .collect();
            deltas.sort_by(|a, b| a.partial_cmp(b).unwrap());
            best = best.min(deltas[deltas.len() / 2]);
        }
        best
    };
    let t200 = per_sweep(200);
    let t400 = per_sweep(400);
    let ratio = t400 / t200;
    verdict(
        12,
        "doubling the sample count scales per-sweep time below 3x",
        ratio <= 3.0,
        format!("median sweep {t200:.2e}s at M=200, {t400:.2e}s at M=400, ratio {ratio:.2}"),
    );
}
