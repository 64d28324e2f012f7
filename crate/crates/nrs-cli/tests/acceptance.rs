//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `--nocapture` to see them stream). The desk-scale training
//! criteria share their 5-seed runs through lazily initialised statics, and
//! a global lock keeps the heavy tests from running concurrently so the
//! wall-clock bounds stay meaningful.
//!
//! Run: `cargo test -p nrs-cli --test acceptance -- --nocapture`

use std::path::PathBuf;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use nrs_cli::commands::run_from_config;
use nrs_cli::config::Config;
use nrs_core::analysis::{
    ablate, count_costs, grad_check, grad_check_tampered, mean_std, run_once, GradCheckConfig,
    RunSettings,
};
use nrs_core::data::Labels;
use nrs_core::net::{
    build_permutation_plan, expand, expansion_map, sparse_fc_from_plan, ExpansionMode,
    GroupConvLayer,
};
use nrs_core::rng::stream_rng;
use nrs_core::train::TrainOptions;
use nrs_core::{Arch, DenseTensor, Model, NetworkSpec, Task};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lock() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn data_path(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn report(criterion: &str, pass: bool, detail: String) {
    println!(
        "criterion {criterion}: {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

// ---------------------------------------------------------------------------
// 1. permutation-FC equivalence
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_permutation_fc_equivalence() {
    let _guard = lock();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let cases = 1000;
    for case in 0..cases {
        let d = rng.gen_range(1..=64);
        let n_h = rng.gen_range(1..=3);
        let n_mul = rng.gen_range(1..=8);
        let plan = build_permutation_plan(d, n_mul, n_h, rng.gen()).unwrap();
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();

        let expanded = expand(&x, &plan).unwrap();
        let fc = sparse_fc_from_plan(&plan, ExpansionMode::SparseFrozen, &mut rng).unwrap();
        let via_fc = fc
            .forward_no_cache(&DenseTensor::from_vec(&[1, d], x))
            .unwrap();

        for (cell, (a, b)) in via_fc.row(0).iter().zip(expanded.body.data()).enumerate() {
            assert_eq!(
                a.to_bits(),
                b.to_bits(),
                "case {case}: cell {cell} differs (d={d}, n_h={n_h}, n_mul={n_mul})"
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "1 (permutation-FC equivalence)",
        elapsed < 10.0,
        format!("{cases} random (x, plan) pairs bit-equal in {elapsed:.2} s (< 10 s)"),
    );
}

// ---------------------------------------------------------------------------
// 2. feature-use balance
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_feature_use_balance() {
    let _guard = lock();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let plans = 1000;
    for _ in 0..plans {
        let d = rng.gen_range(1..=64);
        let n_h = rng.gen_range(1..=3);
        let n_mul = rng.gen_range(1..=8);
        let plan = build_permutation_plan(d, n_mul, n_h, rng.gen()).unwrap();
        let mut counts = vec![0usize; d];
        for src in expansion_map(&plan) {
            counts[src] += 1;
        }
        assert!(
            counts.iter().all(|&c| c == plan.m()),
            "unbalanced provenance for d={d}, n_h={n_h}, n_mul={n_mul}: {counts:?}"
        );
    }
    report(
        "2 (feature-use balance)",
        true,
        format!("{plans} random plans: every feature appears exactly M times"),
    );
}

// ---------------------------------------------------------------------------
// 3. convolution oracle
// ---------------------------------------------------------------------------

/// Independent reference: iterate output channels, then rows, columns and
/// the group's channels, accumulating left-to-right.
fn oracle_group_conv(
    input: &DenseTensor, // [n_h, n_h, c]
    kernel: &DenseTensor, // [n_h, n_h, n_per, c]
    n_h: usize,
    n_per: usize,
    c: usize,
) -> Vec<f64> {
    (0..c)
        .map(|k| {
            let mut acc = 0.0;
            for i in 0..n_h {
                for j in 0..n_h {
                    for p in 0..n_per {
                        acc += input.at(&[i, j, (k / n_per) * n_per + p])
                            * kernel.at(&[i, j, p, k]);
                    }
                }
            }
            acc
        })
        .collect()
}

#[test]
fn criterion_03_convolution_oracle() {
    let _guard = lock();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let cases = 500;
    for case in 0..cases {
        let n_h = rng.gen_range(1..=4);
        // cover depthwise, pairs, and the single-group (standard conv) case
        let (c, n_per) = match case % 3 {
            0 => (rng.gen_range(1..=16), 1),
            1 => (2 * rng.gen_range(1..=8), 2),
            _ => {
                let c = rng.gen_range(1..=12);
                (c, c)
            }
        };
        let mut layer = GroupConvLayer::new(n_h, n_per, c).unwrap();
        layer.init_weights(&mut ChaCha8Rng::seed_from_u64(rng.gen()));
        let body = DenseTensor::from_vec(
            &[n_h, n_h, c],
            (0..n_h * n_h * c).map(|_| rng.gen_range(-3.0..3.0)).collect(),
        );
        let got = layer
            .forward_no_cache(&body.reshape(&[1, n_h * n_h * c]).unwrap())
            .unwrap();
        let want = oracle_group_conv(&body, &layer.kernel, n_h, n_per, c);
        for (ch, (a, b)) in got.row(0).iter().zip(&want).enumerate() {
            assert_eq!(
                a.to_bits(),
                b.to_bits(),
                "case {case}: channel {ch} (n_h={n_h}, n_per={n_per}, c={c})"
            );
        }
    }
    report(
        "3 (convolution oracle)",
        true,
        format!("{cases} random shapes (n_per in {{1, 2, C}}) match the naive loop exactly"),
    );
}

// ---------------------------------------------------------------------------
// 4. gradient suite
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_gradient_suite() {
    let _guard = lock();
    let start = Instant::now();
    let spec = NetworkSpec {
        arch: Arch::Nrs,
        d: 6,
        n_mul: 2,
        n_per: 1,
        n_h: 2,
        plan_seed: 17,
        hidden: 10,
        task: Task::Classify { classes: 3 },
        expansion: ExpansionMode::Permute,
    };
    let mut rng = stream_rng(404, 0);
    let x = DenseTensor::from_vec(&[8, 6], (0..48).map(|_| rng.gen_range(-1.5..1.5)).collect());
    let labels = Labels::Classes {
        values: (0..8).map(|i| i % 3).collect(),
        k: 3,
    };
    let cfg = GradCheckConfig::default();

    let mut net = spec.build(23).unwrap();
    let clean = grad_check(&mut net, &x, &labels, &cfg).unwrap();

    let mut canary_net = spec.build(23).unwrap();
    let canary = grad_check_tampered(&mut canary_net, &x, &labels, &cfg, Some(("conv.kernel", 2.0)))
        .unwrap();

    let elapsed = start.elapsed().as_secs_f64();
    let worst = clean
        .blocks
        .iter()
        .map(|b| b.max_rel_err)
        .fold(0.0f64, f64::max);
    report(
        "4 (gradient suite)",
        clean.pass && !canary.pass && elapsed < 30.0,
        format!(
            "full-net check passed (worst rel err {worst:.2e}; tolerances 1e-5, BN 1e-4), \
             doubled-backward canary failed as required, {elapsed:.2} s (< 30 s)"
        ),
    );
}

// ---------------------------------------------------------------------------
// 5. cost formulas
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_cost_formulas() {
    let _guard = lock();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let cases = 100;
    for case in 0..cases {
        let d = rng.gen_range(1..=12);
        let n_mul = rng.gen_range(1..=6);
        let n_h = rng.gen_range(1..=3);
        let c = d * n_mul;
        // half the cases depthwise (the closed-form regime), half arbitrary
        let n_per = if case % 2 == 0 {
            1
        } else {
            let divisors: Vec<usize> = (1..=c).filter(|p| c % p == 0).collect();
            divisors[rng.gen_range(0..divisors.len())]
        };
        let spec = NetworkSpec {
            arch: Arch::Nrs,
            d,
            n_mul,
            n_per,
            n_h,
            plan_seed: rng.gen(),
            hidden: 0,
            task: Task::Classify {
                classes: rng.gen_range(2..=10),
            },
            expansion: ExpansionMode::Permute,
        };
        let mut net = spec.build(rng.gen()).unwrap();
        let reported = count_costs(net.as_nrs().unwrap());
        let enumerated: u64 = net.params().iter().map(|p| p.value.len() as u64).sum();
        assert_eq!(
            reported.total_params, enumerated,
            "case {case}: formula vs buffer enumeration (d={d}, n_mul={n_mul}, n_per={n_per}, n_h={n_h})"
        );
        if n_per == 1 {
            assert_eq!(
                reported.conv.param_reduction_vs_standard,
                Some(c as u64),
                "case {case}: param reduction must equal C_in"
            );
            assert_eq!(
                reported.conv.mac_reduction_vs_standard,
                Some((c * n_h * n_h) as u64),
                "case {case}: MAC reduction must equal C_in * H_in^2"
            );
        }
    }
    report(
        "5 (cost formulas)",
        true,
        format!(
            "{cases} random configs: counts equal buffer enumeration; depthwise reductions are \
             exactly C_in and C_in*H_in^2"
        ),
    );
}

// ---------------------------------------------------------------------------
// 6/7/8: desk-scale accuracy and the NRS vs MLP-2 direction
// ---------------------------------------------------------------------------

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct TrainedSet {
    accuracies: Vec<f64>,
    seconds: f64,
}

fn benchmark_config(dataset: &str, n_mul: usize, epochs: usize, batch: usize) -> Config {
    let mut cfg = Config::default();
    cfg.train_path = data_path(&format!("{dataset}.train.svm"));
    cfg.test_path = data_path(&format!("{dataset}.test.svm"));
    cfg.format = "libsvm".into();
    cfg.task = "classify".into();
    cfg.arch = "nrs".into();
    cfg.n_mul = n_mul;
    cfg.n_per = 1;
    cfg.n_h = 3;
    cfg.optimizer = "adam".into();
    cfg.lr = 1e-4;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.val_fraction = 0.10;
    cfg
}

fn run_seeds(mut cfg: Config, arch: &str) -> TrainedSet {
    let start = Instant::now();
    cfg.arch = arch.into();
    let mut accuracies = Vec::new();
    for seed in SEEDS {
        cfg.seed_data = seed;
        cfg.seed_model = seed;
        cfg.seed_shuffle = seed;
        let (result, _) = run_from_config(&cfg).expect("benchmark run");
        accuracies.push(result.final_metric);
    }
    TrainedSet {
        accuracies,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn satimage_dim() -> (usize, usize) {
    (36, 20) // d, n_mul per the benchmark recipe
}

fn satimage_nrs() -> &'static TrainedSet {
    static CELL: OnceLock<TrainedSet> = OnceLock::new();
    CELL.get_or_init(|| {
        let (_, n_mul) = satimage_dim();
        run_seeds(benchmark_config("satimage", n_mul, 30, 128), "nrs")
    })
}

fn letter_nrs() -> &'static TrainedSet {
    static CELL: OnceLock<TrainedSet> = OnceLock::new();
    CELL.get_or_init(|| run_seeds(benchmark_config("letter", 100, 30, 128), "nrs"))
}

fn satimage_mlp() -> &'static TrainedSet {
    static CELL: OnceLock<TrainedSet> = OnceLock::new();
    CELL.get_or_init(|| {
        let (_, n_mul) = satimage_dim();
        run_seeds(benchmark_config("satimage", n_mul, 30, 128), "mlp2")
    })
}

fn letter_mlp() -> &'static TrainedSet {
    static CELL: OnceLock<TrainedSet> = OnceLock::new();
    CELL.get_or_init(|| run_seeds(benchmark_config("letter", 100, 30, 128), "mlp2"))
}

fn fmt_accs(set: &TrainedSet) -> String {
    let (mean, std) = mean_std(&set.accuracies);
    let per_seed: Vec<String> = set.accuracies.iter().map(|a| format!("{a:.4}")).collect();
    format!("{:.4} +- {:.4} [{}]", mean, std, per_seed.join(", "))
}

#[test]
fn criterion_06_satimage_accuracy() {
    let _guard = lock();
    let set = satimage_nrs();
    let (mean, _) = mean_std(&set.accuracies);
    report(
        "6 (satimage accuracy)",
        mean >= 0.90 && set.seconds < 600.0,
        format!(
            "nMul=20 nPer=1 nH=3, adam lr 1e-4, 30 epochs, 5 seeds: test accuracy {} \
             (needs mean >= 0.900), {:.0} s (< 600 s)",
            fmt_accs(set),
            set.seconds
        ),
    );
}

#[test]
fn criterion_07_letter_accuracy() {
    let _guard = lock();
    let set = letter_nrs();
    let (mean, _) = mean_std(&set.accuracies);
    report(
        "7 (letter accuracy)",
        mean >= 0.965 && set.seconds < 1800.0,
        format!(
            "nMul=100 nPer=1 nH=3, adam lr 1e-4, 30 epochs, 5 seeds: test accuracy {} \
             (needs mean >= 0.965), {:.0} s (< 1800 s)",
            fmt_accs(set),
            set.seconds
        ),
    );
}

#[test]
fn criterion_08_nrs_beats_mlp2() {
    let _guard = lock();
    let sat_nrs = satimage_nrs();
    let sat_mlp = satimage_mlp();
    let let_nrs = letter_nrs();
    let let_mlp = letter_mlp();
    let (sat_a, _) = mean_std(&sat_nrs.accuracies);
    let (sat_b, _) = mean_std(&sat_mlp.accuracies);
    let (let_a, _) = mean_std(&let_nrs.accuracies);
    let (let_b, _) = mean_std(&let_mlp.accuracies);
    let sat_margin = sat_a - sat_b;
    let let_margin = let_a - let_b;
    report(
        "8 (NRS > MLP-2)",
        sat_margin > 0.0 && let_margin > 0.0,
        format!(
            "matched budgets and seeds; satimage: NRS {} vs MLP-2 {} (margin {:+.4}); \
             letter: NRS {} vs MLP-2 {} (margin {:+.4})",
            fmt_accs(sat_nrs),
            fmt_accs(sat_mlp),
            sat_margin,
            fmt_accs(let_nrs),
            fmt_accs(let_mlp),
            let_margin
        ),
    );
}

// ---------------------------------------------------------------------------
// 9. ablation grid
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_ablation_grid() {
    let _guard = lock();

    // diabetes, Table-1-style recipe (nMul=50, nPer=1, nH=3)
    let train_raw = nrs_core::data::libsvm::parse_libsvm(data_path("diabetes.train.svm"), None).unwrap();
    let map = nrs_core::data::LabelMap::fit(&train_raw);
    let mut train_ds = nrs_core::data::Dataset::classification("diabetes", train_raw, &map).unwrap();
    let test_raw =
        nrs_core::data::libsvm::parse_libsvm(data_path("diabetes.test.svm"), Some(train_ds.num_features()))
            .unwrap();
    let mut test_ds = nrs_core::data::Dataset::classification("diabetes-test", test_raw, &map).unwrap();
    nrs_core::data::standardize(&mut train_ds, &mut [&mut test_ds]);

    let settings = RunSettings {
        arch: Arch::Nrs,
        n_mul: 50,
        n_per: 1,
        n_h: 3,
        hidden: 0,
        expansion: ExpansionMode::Permute,
        val_fraction: 0.10,
        train: TrainOptions {
            lr: 1e-4,
            epochs: 40,
            batch_size: 32,
            shuffle_seed: 1,
            ..TrainOptions::default()
        },
        seed_data: 1,
        seed_model: 1,
    };

    let (cells, _records) = ablate(&train_ds, Some(&test_ds), &settings, 5).unwrap();
    assert_eq!(cells.len(), 4, "four ablation rows expected");
    println!("ablation on diabetes (test accuracy, 5 seeds):");
    for cell in &cells {
        println!("  {:<28} {:.4} +- {:.4}", cell.config, cell.mean, cell.std);
    }

    // mode (d) must equal standard NRS exactly under shared seeds
    let standard = run_once(&train_ds, Some(&test_ds), &settings).unwrap();
    let mut sparse_frozen = settings.clone();
    sparse_frozen.expansion = ExpansionMode::SparseFrozen;
    let mode_d = run_once(&train_ds, Some(&test_ds), &sparse_frozen).unwrap();
    let exact = mode_d.final_metric == standard.final_metric;

    // directional observation (reported, not asserted)
    let frozen_sparse_mean = cells[3].mean;
    let best_other = cells[..3].iter().map(|c| c.mean).fold(f64::MIN, f64::max);
    let direction = if frozen_sparse_mean >= best_other {
        "sparse+frozen best (matches the reported trend)"
    } else {
        "sparse+frozen not best on this draw (trend is stochastic; reported only)"
    };

    report(
        "9 (ablation grid)",
        exact,
        format!(
            "four rows produced; sparse_frozen accuracy {:.4} == standard NRS {:.4} (exact); {}",
            mode_d.final_metric, standard.final_metric, direction
        ),
    );
}

// ---------------------------------------------------------------------------
// 10. determinism of cmd_train
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_train_determinism() {
    let _guard = lock();
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str| {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_nrs"))
            .args([
                "train",
                "--train-path",
                &data_path("sonar.train.svm"),
                "--test-path",
                &data_path("sonar.test.svm"),
                "--n-mul",
                "10",
                "--n-h",
                "3",
                "--epochs",
                "5",
                "--batch-size",
                "16",
                "--out-dir",
                out,
            ])
            .output()
            .expect("binary runs");
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
    };
    let dir_a = dir.path().join("a");
    let dir_b = dir.path().join("b");
    run(dir_a.to_str().unwrap());
    run(dir_b.to_str().unwrap());

    let mut identical = true;
    let mut detail = Vec::new();
    for file in ["final.ckpt", "best.ckpt", "metrics.jsonl"] {
        let a = std::fs::read(dir_a.join(file)).unwrap();
        let b = std::fs::read(dir_b.join(file)).unwrap();
        let same = a == b;
        identical &= same;
        detail.push(format!("{file}: {}", if same { "identical" } else { "DIFFERS" }));
    }
    report(
        "10 (determinism)",
        identical,
        format!(
            "two cmd_train executions with identical config and seeds: {}",
            detail.join(", ")
        ),
    );
}
