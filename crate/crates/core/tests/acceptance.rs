//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::time::Instant;

use edrknn_core::montecarlo::model_one_lambda;
use edrknn_core::{
    clt_diagnostic, density_fixed, density_knn, edr_distance, kernel_eval, kernel_moment, knn_radius, projector,
    projector_onto_span, run_cell, run_experiment, sigma_a_plugin, symmetric_eigen, estimate_lambda, generate,
    BandwidthRule, DMatrix, EstimatorConfig, ExperimentConfig, KernelKind, Method, Model, RngSeed,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MASTER_SEED: RngSeed = RngSeed(42);

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn knn_cell(model: Model, n: usize, kernel: KernelKind) -> edrknn_core::CellSummary {
    let cfg = EstimatorConfig::default().with_kernel(kernel).with_method(Method::Knn);
    run_cell(model, n, &cfg, 500, MASTER_SEED, 1).expect("cell runs")
}

/// Model 1, Gaussian, k-NN, n = 50 and 100 against reference values.
fn criterion_1() -> Outcome {
    let c50 = knn_cell(Model::One, 50, KernelKind::Gaussian);
    let c100 = knn_cell(Model::One, 100, KernelKind::Gaussian);
    let checks = [
        within(c50.mean_d, 0.557, 0.06),
        within(c100.mean_d, 0.396, 0.05),
        within(c50.sd_d, 0.202, 0.05),
        within(c100.sd_d, 0.142, 0.05),
    ];
    check(
        checks.iter().all(|&b| b),
        format!(
            "n=50 mean {:.4} (0.557±0.06) sd {:.4} (0.202±0.05); n=100 mean {:.4} (0.396±0.05) sd {:.4} (0.142±0.05)",
            c50.mean_d, c50.sd_d, c100.mean_d, c100.sd_d
        ),
    )
}

/// Model 1 at n = 200, 400 and Models 2, 3 at n = 400 (Gaussian, k-NN).
fn criterion_2() -> Outcome {
    let m1_200 = knn_cell(Model::One, 200, KernelKind::Gaussian).mean_d;
    let m1_400 = knn_cell(Model::One, 400, KernelKind::Gaussian).mean_d;
    let m2_400 = knn_cell(Model::Two, 400, KernelKind::Gaussian).mean_d;
    let m3_400 = knn_cell(Model::Three, 400, KernelKind::Gaussian).mean_d;
    let parts = [
        ("M1 n=200", m1_200, 0.266, 0.04),
        ("M1 n=400", m1_400, 0.176, 0.03),
        ("M2 n=400", m2_400, 1.266, 0.06),
        ("M3 n=400", m3_400, 1.220, 0.06),
    ];
    let detail = parts
        .iter()
        .map(|(name, v, t, tol)| {
            format!(
                "{name} {v:.4} ({t}±{tol}) {}",
                if within(*v, *t, *tol) { "ok" } else { "MISS" }
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    check(parts.iter().all(|(_, v, t, tol)| within(*v, *t, *tol)), detail)
}

/// Model 1, k-NN: mean D strictly decreasing in n for every kernel.
fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for kernel in KernelKind::ALL {
        let means: Vec<f64> = [50, 100, 200, 400]
            .into_iter()
            .map(|n| knn_cell(Model::One, n, kernel).mean_d)
            .collect();
        let ok = means.windows(2).all(|w| w[1] < w[0]);
        pass &= ok;
        detail.push(format!(
            "{kernel}: {}{}",
            means.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>().join(">"),
            if ok { "" } else { " NOT MONOTONE" }
        ));
    }
    check(pass, detail.join("; "))
}

/// Fixed-bandwidth density with h = H_n(y) equals the k-NN density bitwise.
fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    for case in 0..1000 {
        let model = Model::ALL[case % 3];
        let n = rng.random_range(10..120);
        let data = generate(model, n, RngSeed(rng.random())).unwrap().sample;
        let kernel = KernelKind::ALL[rng.random_range(0..5)];
        let y = data.ys()[rng.random_range(0..n)] + rng.random_range(-1.0..1.0);
        let cfg = EstimatorConfig::default().with_kernel(kernel);
        let h = knn_radius(data.ys().as_slice(), y, cfg.k_n(n)).unwrap();
        let fixed = EstimatorConfig {
            fixed_bandwidth_rule: BandwidthRule::Explicit(h),
            ..cfg
        };
        let a = density_knn(&data, y, &cfg).unwrap();
        let b = density_fixed(&data, y, &fixed).unwrap();
        if a.to_bits() != b.to_bits() {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("{mismatches} bitwise mismatches in 1000 cases"))
}

/// knn_radius against sorted brute force; Λ̂ for Model 1 at n = 20000
/// against the analytic ββᵀ/5.
fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut radius_mismatch = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=50);
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y = rng.random_range(-6.0..6.0);
        let k = rng.random_range(1..=n);
        let mut dist: Vec<f64> = ys.iter().map(|v| (v - y).abs()).collect();
        dist.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if knn_radius(&ys, y, k).unwrap() != dist[k - 1] {
            radius_mismatch += 1;
        }
    }

    let data = generate(Model::One, 20_000, MASTER_SEED.child(5)).unwrap().sample;
    let lambda_hat = estimate_lambda(&data, &EstimatorConfig::default()).unwrap();
    let worst = (&lambda_hat - model_one_lambda()).amax();
    check(
        radius_mismatch == 0 && worst <= 0.05,
        format!(
            "knn_radius mismatches {radius_mismatch}/500; max |Λ̂ - ββᵀ/5| = {worst:.4} (tol 0.05), Λ̂[0,0] = {:.5} vs 0.2",
            lambda_hat[(0, 0)]
        ),
    )
}

/// Eigen residual, orthonormality and reconstruction on random symmetric matrices.
fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_res, mut worst_orth, mut worst_rec) = (0.0f64, 0.0f64, 0.0f64);
    let mut pass = true;
    for _ in 0..200 {
        let d = rng.random_range(1..=10);
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = rng.random_range(-1.0..1.0) * scale;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let (vals, vecs) = symmetric_eigen(&m).unwrap();
        let res_tol = 1e-8 * vals[0].max(1.0);
        for j in 0..d {
            let r = (&m * vecs.column(j) - vecs.column(j) * vals[j]).norm();
            worst_res = worst_res.max(r / vals[0].max(1.0));
            pass &= r <= res_tol;
        }
        let orth = (vecs.transpose() * &vecs - DMatrix::<f64>::identity(d, d)).amax();
        worst_orth = worst_orth.max(orth);
        pass &= orth <= 1e-10;
        let rec = (&vecs * DMatrix::from_diagonal(&vals) * vecs.transpose() - &m).norm();
        worst_rec = worst_rec.max(rec / m.norm());
        pass &= rec <= 1e-8 * m.norm();
        pass &= vals.as_slice().windows(2).all(|w| w[0] >= w[1]);
    }
    check(
        pass,
        format!("worst scaled residual {worst_res:.2e}, orthonormality {worst_orth:.2e}, relative reconstruction {worst_rec:.2e}"),
    )
}

/// Subspace distance reference values.
fn criterion_7() -> Outcome {
    let e1 = projector(&DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
    let e2 = projector(&DMatrix::from_column_slice(2, 1, &[0.0, 1.0])).unwrap();
    let same = edr_distance(&e1, &e1).unwrap();
    let orth = edr_distance(&e1, &e2).unwrap();
    let beta = projector_onto_span(&Model::One.true_basis()).unwrap();
    let e1_5 = projector(&DMatrix::from_column_slice(5, 1, &[1.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
    let tilted = edr_distance(&beta, &e1_5).unwrap();
    check(
        same == 0.0 && within(orth, 2f64.sqrt(), 1e-12) && within(tilted, 1.5f64.sqrt(), 1e-12),
        format!("D(P,P) = {same}, D(e1,e2) - √2 = {:.1e}, D(β,e1) - √1.5 = {:.1e}", orth - 2f64.sqrt(), tilted - 1.5f64.sqrt()),
    )
}

/// Kernel symmetry, normalization, odd moments, radial monotonicity.
fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pass = true;
    let mut detail = Vec::new();
    for k in KernelKind::ALL {
        let halfwidth = if k == KernelKind::Gaussian { 12.0 } else { 1.0 };
        let symmetric = (0..1000).all(|_| {
            let t = rng.random_range(-5.0..5.0);
            kernel_eval(k, t).unwrap() == kernel_eval(k, -t).unwrap()
        });
        let m0 = kernel_moment(k, 0, 1e-4, halfwidth).unwrap();
        let m1 = kernel_moment(k, 1, 1e-4, halfwidth).unwrap();
        let m3 = kernel_moment(k, 3, 1e-4, halfwidth).unwrap();
        let monotone = (0..1000).all(|_| {
            let t = rng.random_range(-5.0..5.0);
            let a = rng.random_range(0.0..=1.0);
            kernel_eval(k, a * t).unwrap() >= kernel_eval(k, t).unwrap() - 1e-12
        });
        let ok = symmetric && within(m0, 1.0, 1e-4) && m1.abs() <= 1e-6 && m3.abs() <= 1e-6 && monotone;
        pass &= ok;
        detail.push(format!(
            "{k}: sym={symmetric} ∫K-1={:.1e} m1={m1:.1e} m3={m3:.1e} monotone={monotone}",
            m0 - 1.0
        ));
    }
    check(pass, detail.join("; "))
}

/// CLT check for Tr(Aᵀ √n (Λ̂ - Λ)) with A = e1e1ᵀ.
fn criterion_9() -> Outcome {
    let mut a = DMatrix::zeros(5, 5);
    a[(0, 0)] = 1.0;
    let cfg = EstimatorConfig::default();
    let diag = clt_diagnostic(Model::One, &a, 400, 2000, MASTER_SEED, 20_000, &cfg, 1).unwrap();
    let ratio = diag.sigma_a_sq_empirical / diag.sigma_a_sq_plugin;
    let variance_ok = (ratio - 1.0).abs() <= 0.25;
    let normal_ok = diag.normality_p_value >= 0.01;
    // Cross-check the plug-in against a direct call on the same calibration data.
    let calib = generate(Model::One, 20_000, MASTER_SEED.child(0xCA11_B8A7E)).unwrap().sample;
    let direct = sigma_a_plugin(&calib, &cfg, &a).unwrap();
    check(
        variance_ok && normal_ok && direct == diag.sigma_a_sq_plugin,
        format!(
            "empirical var {:.4e}, plug-in {:.4e} (ratio {ratio:.4}, tol ±25%); mean T {:.3}; Jarque-Bera {:.2} (p = {:.2e}, need >= 0.01)",
            diag.sigma_a_sq_empirical, diag.sigma_a_sq_plugin, diag.t_mean, diag.normality_stat, diag.normality_p_value
        ),
    )
}

/// Same master seed, same report bytes.
fn criterion_10() -> Outcome {
    let cfg = ExperimentConfig {
        sample_sizes: vec![50, 100],
        replicates: 4,
        ..Default::default()
    };
    let first = run_experiment(&cfg).unwrap();
    let threaded = run_experiment(&ExperimentConfig { threads: 3, ..cfg.clone() }).unwrap();
    let (csv_a, csv_b) = (first.to_csv().unwrap(), threaded.to_csv().unwrap());
    let (json_a, json_b) = (first.to_json().unwrap(), threaded.to_json().unwrap());
    let dir = std::env::temp_dir().join(format!("edrknn-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("a.csv"), &csv_a).unwrap();
    std::fs::write(dir.join("b.csv"), &csv_b).unwrap();
    let same_files = std::fs::read(dir.join("a.csv")).unwrap() == std::fs::read(dir.join("b.csv")).unwrap();
    let _ = std::fs::remove_dir_all(&dir);
    check(
        same_files && json_a == json_b && first.rows.len() == 60,
        format!("{} rows; CSV identical: {same_files}; JSON identical: {}", first.rows.len(), json_a == json_b),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 k-NN accuracy (model 1, n=50/100)", criterion_1),
        ("2 k-NN accuracy (n=200/400)", criterion_2),
        ("3 monotone consistency over n", criterion_3),
        ("4 method parity at matched bandwidth", criterion_4),
        ("5 oracle equivalence (radius, analytic Λ)", criterion_5),
        ("6 spectral contracts", criterion_6),
        ("7 subspace metric", criterion_7),
        ("8 kernel property suite", criterion_8),
        ("9 CLT diagnostic", criterion_9),
        ("10 determinism", criterion_10),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "criterion {name}: {} [{:.1}s] {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
