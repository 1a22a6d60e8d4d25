//! Acceptance checks. Runs as a plain binary so every verdict line is printed.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ghz_metrology::crb::{self, WeightVector};
use ghz_metrology::io::{self, FisherDoc};
use ghz_metrology::measurement::{self, oracle::cfim_brute_force_oracle};
use ghz_metrology::montecarlo::{crb_saturation_experiment, ExperimentConfig};
use ghz_metrology::qfim::{self, oracle::qfim_finite_difference_oracle, DEFAULT_RANK_TOL};
use ghz_metrology::{reparam, Chart, FisherMatrix, PhaseVector};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg()) }
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

fn alternating(d: usize) -> DVector<f64> {
    DVector::from_fn(d, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 })
}

fn closed_form_entry(n: usize, d: usize, i: usize, j: usize) -> f64 {
    let s = (n * n) as f64 / (d * d) as f64;
    let gap = (i + d - j) % d;
    if gap == 0 {
        s * (d as f64 - 1.0)
    } else if gap == 1 || gap == d - 1 {
        s * (d as f64 / 2.0 - 1.0)
    } else {
        -s
    }
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let f = qfim::qfim_pure(2, 4, &PhaseVector::zeros(4), &Chart::Original).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let expected = DMatrix::from_row_slice(4, 4, &[
        0.75, 0.25, -0.25, 0.25,
        0.25, 0.75, 0.25, -0.25,
        -0.25, 0.25, 0.75, 0.25,
        0.25, -0.25, 0.25, 0.75,
    ]);
    let err = max_abs_diff(f.entries(), &expected);
    ensure(err <= 1e-10, || format!("max deviation {err:e}"))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("max deviation {err:.1e}, {elapsed:?}"))
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for n in [2, 4, 6] {
        for d in [4, 6, 8] {
            let expected = DMatrix::from_fn(d, d, |i, j| closed_form_entry(n, d, i, j));
            let random = PhaseVector::new((0..d).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect());
            for phases in [PhaseVector::zeros(d), random] {
                let f = qfim::qfim_pure(n, d, &phases, &Chart::Original).map_err(|e| e.to_string())?;
                let err = max_abs_diff(f.entries(), &expected);
                ensure(err <= 1e-10, || format!("N={n} d={d} deviation {err:e}"))?;
                worst = worst.max(err);
            }
        }
    }
    Ok(format!("18 matrices, max deviation {worst:.1e}"))
}

fn criterion_3() -> Check {
    let mut worst = 0.0f64;
    for n in [2, 4, 6] {
        for d in [4, 6, 8] {
            let phases = PhaseVector::uniform(d, 0.1);
            let q = qfim::qfim_pure(n, d, &phases, &Chart::Original).map_err(|e| e.to_string())?;
            let c = measurement::cfim(n, d, &phases, &Chart::Original).map_err(|e| e.to_string())?;
            for f in [&q, &c] {
                let rank = qfim::rank_and_nullspace(f, DEFAULT_RANK_TOL).rank;
                ensure(rank == d - 1, || format!("{} N={n} d={d} rank {rank}", f.kind()))?;
                let res = (f.entries() * alternating(d)).norm();
                ensure(res <= 1e-10, || format!("{} N={n} d={d} residual {res:e}", f.kind()))?;
                worst = worst.max(res);
            }
        }
    }
    Ok(format!("rank d-1 for quantum and classical, max null residual {worst:.1e}"))
}

fn criterion_4() -> Check {
    let mut worst = 0.0f64;
    for n in [2usize, 4, 6] {
        for d in [4usize, 6, 8] {
            let r = std::sync::Arc::new(reparam::build_mc(d).map_err(|e| e.to_string())?);
            let original = qfim::qfim_pure(n, d, &PhaseVector::zeros(d), &Chart::Original).map_err(|e| e.to_string())?;
            let f = reparam::pushforward_fisher(&original, &r, true).map_err(|e| e.to_string())?;
            let n2 = (n * n) as f64;
            let diag_err = (f.get(0, 0) - n2).abs();
            let off = (1..f.dim()).map(|x| f.get(0, x).abs()).fold(0.0, f64::max);
            let alpha = WeightVector::unit(f.dim(), 0).map_err(|e| e.to_string())?;
            let qcrb = crb::exact_crb(&f, &alpha, 1).map_err(|e| e.to_string())?.sqrt();
            let qcrb_err = (qcrb - 1.0 / n as f64).abs();
            ensure(diag_err <= 1e-10 && off <= 1e-10 && qcrb_err <= 1e-10, || {
                format!("N={n} d={d}: diag err {diag_err:e}, off-diagonal {off:e}, qcrb err {qcrb_err:e}")
            })?;
            worst = worst.max(diag_err).max(off).max(qcrb_err);
        }
    }
    Ok(format!("θ₁θ₁ = N², decoupled, QCRB = 1/N; max error {worst:.1e}"))
}

fn criterion_5() -> Check {
    let chart = Chart::orthogonal_d4();
    let zero = PhaseVector::zeros(4);
    let q = qfim::qfim_pure(2, 4, &zero, &chart).map_err(|e| e.to_string())?;
    let c = measurement::cfim(2, 4, &zero, &chart).map_err(|e| e.to_string())?;
    let q_err = max_abs_diff(q.entries(), &DMatrix::identity(3, 3));
    let c_err = max_abs_diff(c.entries(), &DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5, 0.5])));
    ensure(q_err <= 1e-10, || format!("QFIM deviates from I₃ by {q_err:e}"))?;
    ensure(c_err <= 1e-10, || format!("classical FIM deviates from diag(1, 1/2, 1/2) by {c_err:e}"))?;
    let alpha = WeightVector::new(chart.average_phase_weights(4).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    for f in [&q, &c] {
        let sd = crb::exact_crb(f, &alpha, 1).map_err(|e| e.to_string())?.sqrt();
        ensure((sd - 0.5).abs() <= 1e-10, || format!("{} Δφ̄ bound {sd}", f.kind()))?;
    }
    Ok(format!("QFIM err {q_err:.1e}, classical err {c_err:.1e}, Δφ̄ ≥ 1/2 for both"))
}

fn random_pd(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let k = rng.random_range(2..=8);
    let b = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    &b * b.transpose() + DMatrix::identity(k, k) * 0.1
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut min_gap = f64::INFINITY;
    let mut worst_equality = 0.0f64;
    for case in 0..1000 {
        let s = random_pd(&mut rng);
        let k = s.nrows();
        let alpha: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = crb::weak_vs_exact_check(&s, &alpha).map_err(|e| format!("case {case}: {e}"))?;
        ensure(r.gap >= -1e-12 && r.diagonal_holds(1e-12), || {
            format!("case {case}: gap {:e}, diagonal {} vs {}", r.gap, r.diagonal_weak, r.diagonal_exact)
        })?;
        min_gap = min_gap.min(r.gap);

        let eig = s.clone().symmetric_eigen();
        let pick = rng.random_range(0..k);
        let v: Vec<f64> = eig.eigenvectors.column(pick).iter().copied().collect();
        let r = crb::weak_vs_exact_check(&s, &v).map_err(|e| format!("case {case}: {e}"))?;
        ensure(r.gap.abs() <= 1e-10, || format!("case {case}: eigenvector gap {:e}", r.gap))?;
        worst_equality = worst_equality.max(r.gap.abs());
    }

    let quarter = WeightVector::new(vec![0.25; 4]).map_err(|e| e.to_string())?;
    let f0 = measurement::cfim(2, 4, &PhaseVector::zeros(4), &Chart::Original).map_err(|e| e.to_string())?;
    let weak = crb::weak_crb(&f0, &quarter, 1).map_err(|e| e.to_string())?;
    let mc = Chart::mc(4).map_err(|e| e.to_string())?;
    let fmc = measurement::cfim(2, 4, &PhaseVector::zeros(4), &mc).map_err(|e| e.to_string())?;
    let avg = WeightVector::new(mc.average_phase_weights(4).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let exact = crb::exact_crb(&fmc, &avg, 1).map_err(|e| e.to_string())?;
    ensure((weak - 0.25).abs() <= 1e-10 && (exact - 0.25).abs() <= 1e-10, || {
        format!("GHZ classical Var(φ̄): weak {weak}, exact {exact}")
    })?;
    Ok(format!("1000 matrices, min gap {min_gap:.1e}, eigenvector gap ≤ {worst_equality:.1e}, GHZ weak = exact = 1/4"))
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_q = 0.0f64;
    for case in 0..20 {
        let n = 2 * rng.random_range(1..=3);
        let d = 2 * rng.random_range(2..=4);
        let phases = PhaseVector::new((0..d).map(|_| rng.random_range(-1.5..1.5)).collect());
        let chart = match rng.random_range(0..3) {
            0 => Chart::Original,
            1 => Chart::mc(d).map_err(|e| e.to_string())?,
            _ if d == 4 => Chart::orthogonal_d4(),
            _ => Chart::mc(d).map_err(|e| e.to_string())?,
        };
        let analytic = qfim::qfim_pure(n, d, &phases, &chart).map_err(|e| e.to_string())?;
        let fd = qfim_finite_difference_oracle(n, d, &phases, &chart, 1e-6).map_err(|e| e.to_string())?;
        let err = max_abs_diff(analytic.entries(), &fd);
        ensure(err <= 1e-6, || format!("case {case}: N={n} d={d} chart {} deviation {err:e}", chart.name()))?;
        worst_q = worst_q.max(err);
    }

    let mut worst_c = 0.0f64;
    let mut compared = 0;
    for _ in 0..20 {
        let n = 2 * rng.random_range(1..=3);
        let d = rng.random_range(3..=8);
        let phases = PhaseVector::new((0..d).map(|_| rng.random_range(-1.5..1.5)).collect());
        let dist = measurement::outcome_distribution(n, d, &phases).map_err(|e| e.to_string())?;
        if dist.probabilities().iter().any(|p| *p <= 1e-8) {
            continue;
        }
        let kernel = measurement::cfim(n, d, &phases, &Chart::Original).map_err(|e| e.to_string())?;
        let literal = cfim_brute_force_oracle(n, d, &phases, &Chart::Original).map_err(|e| e.to_string())?;
        let err = max_abs_diff(kernel.entries(), &literal);
        ensure(err <= 1e-6, || format!("classical N={n} d={d} deviation {err:e}"))?;
        worst_c = worst_c.max(err);
        compared += 1;
    }
    ensure(compared >= 10, || format!("only {compared} classical points had all probabilities above 1e-8"))?;
    Ok(format!("20 quantum points max {worst_q:.1e}; {compared} classical points max {worst_c:.1e}"))
}

fn criterion_8() -> Check {
    let mut lines = Vec::new();
    for n in [2usize, 4] {
        let start = Instant::now();
        let cfg = ExperimentConfig::new(n, 4, PhaseVector::uniform(4, 0.1), 100_000, 200, 8);
        let report = crb_saturation_experiment(&cfg).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        let scaled = report.variance_theta1 * (n * n) as f64 * 1e5;
        ensure((0.85..=1.15).contains(&scaled), || format!("N={n}: Var·N²·𝒩 = {scaled:.4}"))?;
        ensure(elapsed < Duration::from_secs(60), || format!("N={n} took {elapsed:?}"))?;
        lines.push(format!("N={n}: {scaled:.4} in {:.2}s", elapsed.as_secs_f64()));
    }
    Ok(format!("Var(θ̂₁)·N²·𝒩 {}", lines.join(", ")))
}

fn run_cli(args: &[&str], dir: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_ghzsense"))
        .args(args)
        .current_dir(dir)
        .env_remove("GHZ_SENSE_OUT_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        format!("{args:?} failed: {}", String::from_utf8_lossy(&status.stderr))
    })
}

fn criterion_9() -> Check {
    let runs: [&[&str]; 8] = [
        &["state", "--N", "4", "--d", "6", "--phases", "uniform:0.3"],
        &["qfim", "--N", "2", "--d", "4", "--phases", "uniform:0", "--chart", "original"],
        &["cfim", "--N", "4", "--d", "6", "--phases", "0.1,0.2,-0.1,0.05,0,0.3", "--chart", "mc"],
        &["transform", "--N", "2", "--d", "6", "--chart", "mc"],
        &["bounds", "--N", "2", "--d", "4", "--phases", "uniform:0", "--chart", "original", "--alpha", "avg"],
        &["sweep", "--N", "2,4,6", "--d", "4,6,8"],
        &["simulate", "--N", "2", "--d", "4", "--phases", "uniform:0.1", "--shots", "20000", "--replicates", "60", "--seed", "3"],
        &["simulate", "--N", "2", "--d", "4", "--phases", "uniform:0.1", "--shots", "20000", "--replicates", "60", "--seed", "3", "--format", "csv"],
    ];
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for (i, args) in runs.iter().enumerate() {
        let a = tmp.path().join(format!("run{i}a"));
        let b = tmp.path().join(format!("run{i}b"));
        for dir in [&a, &b] {
            std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
            run_cli(args, dir)?;
        }
        for entry in std::fs::read_dir(&a).map_err(|e| e.to_string())? {
            let name = entry.map_err(|e| e.to_string())?.file_name();
            let left = std::fs::read(a.join(&name)).map_err(|e| e.to_string())?;
            let right = std::fs::read(b.join(&name)).map_err(|e| e.to_string())?;
            ensure(left == right, || format!("{} differs between identical runs of {}", name.to_string_lossy(), args[0]))?;
            files += 1;
        }
    }

    // emitted Fisher JSON re-reads and re-emits byte-identically
    let text = std::fs::read_to_string(tmp.path().join("run1a").join("qfim.json")).map_err(|e| e.to_string())?;
    let doc: FisherDoc = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let f: FisherMatrix = doc.to_fisher().map_err(|e| e.to_string())?;
    let again = io::to_json(&FisherDoc::from_fisher(&f)).map_err(|e| e.to_string())?;
    ensure(again == text, || "Fisher JSON did not round-trip byte-identically".into())?;
    Ok(format!("{files} artifacts from {} commands byte-identical across reruns; JSON round-trips", runs.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("QFIM closed form at N=2, d=4", criterion_1),
        ("general QFIM closed form and phase independence", criterion_2),
        ("singularity along the alternating direction", criterion_3),
        ("block-diagonal transformed QFIM, Heisenberg bound", criterion_4),
        ("d=4 orthogonal chart", criterion_5),
        ("weak bound never exceeds exact bound", criterion_6),
        ("analytic matrices agree with numerical oracles", criterion_7),
        ("Monte Carlo saturation of the bound", criterion_8),
        ("deterministic CLI outputs", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
