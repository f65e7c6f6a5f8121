//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails. Criterion 8 needs a shear-flow trajectory file and is
//! skipped unless FLOWMAGIC_WELL_FILE points at one.

use std::path::PathBuf;
use std::time::Instant;

use flowmagic::analysis::{
    bspline_resample, halving_levels, measure_field, random_image_baseline, reconstruction_accuracy, resample_1d,
    spearman, Boundary, RandomBaselineConfig,
};
use flowmagic::encoding::{decode_field, encode_field, shift_field, unshift_field};
use flowmagic::io::{load_stack, synth_shear_ic, LoadOptions, Selector, ShearIcParams, DEFAULT_DATASET_PATH};
use flowmagic::resources::{entropy_profile, estimate_m2, sre2_replica, sre_dense, MagicConfig};
use flowmagic::{EncodingConfig, Field2D, Mps};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn random_state(n: usize, chi: usize, seed: u64) -> Mps {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Mps::random(n, chi, &mut rng).normalized().unwrap()
}

fn random_field(nx: usize, ny: usize, seed: u64) -> Field2D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Field2D::from_fn(nx, ny, |_, _| rng.random_range(-1.0..1.0)).unwrap()
}

fn basis_vector(n: usize, index: usize) -> Vec<f64> {
    let mut v = vec![0.0; 1 << n];
    v[index] = 1.0;
    v
}

fn ghz(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; 1 << n];
    v[0] = std::f64::consts::FRAC_1_SQRT_2;
    v[(1 << n) - 1] = std::f64::consts::FRAC_1_SQRT_2;
    v
}

fn criterion_1() -> Outcome {
    let mut within = 0;
    for seed in 0..50 {
        let mps = random_state(8, 16, 1000 + seed);
        let exact = sre_dense(&mps.to_dense().unwrap(), 2.0).unwrap().m2_bits;
        let est = estimate_m2(&mps, 10_000, seed).unwrap();
        if (est.m2_bits - exact).abs() <= 3.0 * est.stderr_bits {
            within += 1;
        }
    }
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let mps = random_state(10, 8, 2000 + seed);
        let exact = sre_dense(&mps.to_dense().unwrap(), 2.0).unwrap().m2_bits;
        let replica = sre2_replica(&mps, 8).unwrap().m2_bits;
        worst = worst.max((replica - exact).abs());
    }
    check(
        within >= 48 && worst <= 1e-10,
        format!("sampled within 3 stderr in {within}/50; replica vs dense max diff {worst:.1e}"),
    )
}

fn criterion_2() -> Outcome {
    let n = 12;
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let mps = random_state(n, 64, 3000 + seed);
        let v = mps.to_dense().unwrap();
        let profile = entropy_profile(&mps).unwrap();
        for b in 1..n {
            let m = DMatrix::from_row_slice(1 << b, 1 << (n - b), &v);
            // both reduced density matrices share their spectrum; use the smaller
            let rho = if b <= n - b { &m * m.transpose() } else { m.transpose() * &m };
            let dense: f64 = rho
                .symmetric_eigenvalues()
                .iter()
                .filter(|&&l| l > 0.0)
                .map(|&l| -l * l.log2())
                .sum();
            worst = worst.max((dense - profile.entropies_bits[b - 1]).abs());
        }
    }
    check(worst <= 1e-10, format!("max entropy diff over 20 states x 11 cuts {worst:.1e}"))
}

fn criterion_3() -> Outcome {
    let mut states: Vec<(String, Vec<f64>)> = Vec::new();
    for n in [1, 4, 8, 12] {
        states.push((format!("basis{n}"), basis_vector(n, (1 << n) / 3)));
        states.push((format!("uniform{n}"), vec![(0.5f64).powf(n as f64 / 2.0); 1 << n]));
        if n >= 2 {
            states.push((format!("ghz{n}"), ghz(n)));
        }
    }
    states.push(("bell".into(), ghz(2)));
    let mut worst = 0.0f64;
    let mut worst_name = String::new();
    for (name, v) in &states {
        // cutoff 0 would keep round-off singular values as extra bonds
        let mps = Mps::from_dense(v, 1e-12).unwrap().mps;
        let values = [
            sre_dense(v, 2.0).unwrap().m2_bits,
            sre2_replica(&mps, 12).unwrap().m2_bits,
            estimate_m2(&mps, 2000, 5).unwrap().m2_bits,
        ];
        for x in values {
            if x.abs() > worst {
                worst = x.abs();
                worst_name = name.clone();
            }
        }
    }
    let (c, s) = ((std::f64::consts::PI / 8.0).cos(), (std::f64::consts::PI / 8.0).sin());
    let target = (4.0f64 / 3.0).log2();
    let dense = sre_dense(&[c, s], 2.0).unwrap().m2_bits;
    let tilted = Mps::from_dense(&[c, s], 0.0).unwrap().mps;
    let sampled = estimate_m2(&tilted, 10_000, 9).unwrap();
    let ok = worst <= 1e-8
        && (dense - target).abs() <= 1e-6
        && (sampled.m2_bits - target).abs() <= 3.0 * sampled.stderr_bits;
    check(
        ok,
        format!(
            "stabilizer max |M2| {worst:.1e} ({worst_name}); tilted dense {dense:.6} sampled {:.4}+-{:.4} vs {target:.5}",
            sampled.m2_bits, sampled.stderr_bits
        ),
    )
}

fn max_rel(a: &Field2D, b: &Field2D) -> f64 {
    let scale = a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

fn criterion_4() -> Outcome {
    let cfg = EncodingConfig::default().with_cutoff(0.0);
    let mut worst_direct = 0.0f64;
    let mut worst_shift = 0.0f64;
    for seed in 0..5 {
        let f = random_field(6, 6, 4000 + seed);
        let direct = decode_field(&encode_field(&f, &cfg).unwrap()).unwrap();
        worst_direct = worst_direct.max(max_rel(&f, &direct));
        let shifted = decode_field(&encode_field(&shift_field(&f, 1.0), &cfg).unwrap()).unwrap();
        worst_shift = worst_shift.max(max_rel(&f, &unshift_field(&shifted)));
    }
    check(
        worst_direct <= 1e-12 && worst_shift <= 1e-12,
        format!("max relative error direct {worst_direct:.1e}, shift-by-1 {worst_shift:.1e}"),
    )
}

fn criterion_5() -> Outcome {
    let cfg = EncodingConfig::default();
    let mut chis = Vec::new();
    for seed in 0..10 {
        let f = random_field(8, 9, 5000 + seed);
        chis.push(encode_field(&f, &cfg).unwrap().truncation.chi_max);
    }
    let (ux, _) = synth_shear_ic(&ShearIcParams::new(2, 2, 0.1, 8, 9)).unwrap();
    let synth = encode_field(&ux, &cfg).unwrap().truncation.chi_max;
    let worst = chis.iter().copied().max().unwrap().max(synth);
    check(worst <= 256, format!("random chi_max {chis:?}, synthetic IC chi_max {synth}"))
}

fn criterion_6() -> Outcome {
    let levels = halving_levels(6, 6, 2);
    let curve = |range: (f64, f64)| -> Vec<f64> {
        let cfg = RandomBaselineConfig {
            count: 20,
            nx: 6,
            ny: 6,
            range,
            levels: levels.clone(),
            seed: 6,
            boundary: Boundary::Periodic,
        };
        random_image_baseline(&cfg, &EncodingConfig::default(), &MagicConfig::off())
            .unwrap()
            .rows
            .iter()
            .map(|r| r.s_vn_norm)
            .collect()
    };
    let symmetric = curve((-1.0, 1.0));
    let positive = curve((0.0, 2.0));
    let non_increasing = symmetric.windows(2).all(|w| w[1] <= w[0]);
    let below = positive.iter().zip(&symmetric).all(|(p, s)| p < s);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    check(
        non_increasing && below,
        format!("levels {levels:?}; [-1,1] {}; [0,2] {}", fmt(&symmetric), fmt(&positive)),
    )
}

fn criterion_7() -> Outcome {
    let mode = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin())
            .collect()
    };
    let f = mode(64);
    let back = resample_1d(&resample_1d(&f, 32, Boundary::Periodic), 64, Boundary::Periodic);
    let delta = f.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let g = Field2D::from_fn(6, 6, |i, j| {
        (2.0 * std::f64::consts::PI * (i as f64 / 64.0 + j as f64 / 64.0)).cos()
    })
    .unwrap();
    let coarse = bspline_resample(&g, 5, 5, Boundary::Periodic).unwrap();
    let g_back = bspline_resample(&coarse, 6, 6, Boundary::Periodic).unwrap();
    let delta_2d = g.values().iter().zip(g_back.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let mut const_err = 0.0f64;
    for boundary in [Boundary::Periodic, Boundary::Clamped] {
        let c = Field2D::from_fn(6, 5, |_, _| 0.75).unwrap();
        for (nx, ny) in [(5, 4), (3, 3), (7, 6)] {
            let r = bspline_resample(&c, nx, ny, boundary).unwrap();
            const_err = const_err.max(r.values().iter().map(|v| (v - 0.75).abs()).fold(0.0, f64::max));
        }
    }
    check(
        delta <= 1e-3 && delta_2d <= 1e-3 && const_err <= 1e-12,
        format!("mode delta 1D {delta:.1e}, 2D {delta_2d:.1e}; constant error {const_err:.1e}"),
    )
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn criterion_8() -> Outcome {
    let Some(path) = std::env::var_os("FLOWMAGIC_WELL_FILE").map(PathBuf::from) else {
        return Outcome::Skip("set FLOWMAGIC_WELL_FILE to a shear-flow trajectory to run".into());
    };
    let env_usize = |key: &str| std::env::var(key).ok().and_then(|v| v.parse().ok()).unwrap_or(0usize);
    let opts = LoadOptions {
        format: None,
        selector: Selector {
            dataset_path: Some(std::env::var("FLOWMAGIC_WELL_DATASET").unwrap_or(DEFAULT_DATASET_PATH.into())),
            index: vec![env_usize("FLOWMAGIC_WELL_TRAJECTORY")],
        },
        resample: Some(Boundary::Periodic),
    };
    let stack = match load_stack(&path, &opts) {
        Ok(s) => s,
        Err(e) => return Outcome::Fail(format!("could not load {}: {e}", path.display())),
    };
    let enc = EncodingConfig::default();
    let magic = MagicConfig::default();

    let snap = &stack[env_usize("FLOWMAGIC_WELL_SNAPSHOT").min(stack.len() - 1)];
    let accuracy = 100.0 * reconstruction_accuracy(snap, &decode_field(&encode_field(snap, &enc).unwrap()).unwrap()).unwrap();

    let mut series = [Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for f in &stack {
        for (k, field) in [f.clone(), shift_field(f, 1.0)].iter().enumerate() {
            let r = measure_field(field, &enc, &magic).unwrap().report;
            series[3 * k].push(r.chi_max as f64);
            series[3 * k + 1].push(r.entropy.max_normalized);
            series[3 * k + 2].push(r.m2_norm().unwrap_or(f64::NAN));
        }
    }
    let decrease = |k: usize| 100.0 * (1.0 - mean(&series[k + 3]) / mean(&series[k]));
    let (d_chi, d_s, d_m) = (decrease(0), decrease(1), decrease(2));
    let rho = spearman(&series[2], &series[1]).unwrap_or(f64::NAN);

    let ok_a = (accuracy - 99.7).abs() <= 0.3;
    let ok_b = (d_chi - 17.0).abs() <= 10.0 && (d_s - 17.0).abs() <= 10.0 && (d_m - 27.0).abs() <= 10.0;
    let ok_c = rho > 0.5;
    check(
        ok_a && ok_b && ok_c,
        format!(
            "(a) accuracy {accuracy:.2}% (b) decreases chi {d_chi:.1}% S {d_s:.1}% m2 {d_m:.1}% (c) spearman {rho:.3} over {} snapshots",
            stack.len()
        ),
    )
}

fn run_cli(args: &[&str]) -> i32 {
    let mut full = vec!["flowmagic"];
    full.extend_from_slice(args);
    flowmagic::cli::run(full)
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("field.npy");
    let f = random_field(4, 5, 9);
    flowmagic::io::write_field(&f, &input, flowmagic::io::FileFormat::Npy).unwrap();
    let input = input.to_str().unwrap().to_string();
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("encode", vec!["encode", "--input", &input, "--magic", "sampled", "--samples", "3000", "--seed", "4"]),
        ("shift", vec!["shift", "--input", &input, "--shifts", "-0.5,1", "--magic", "sampled", "--seed", "7"]),
        ("coarse", vec!["coarse", "--input", &input, "--levels", "3x3,2x2", "--magic", "replica"]),
        ("ordering", vec!["ordering", "--input", &input, "--magic", "dense"]),
        ("random", vec!["random-baseline", "--count", "3", "--nx", "4", "--ny", "4", "--seed", "11", "--samples", "500"]),
    ];
    let mut failures = Vec::new();
    let mut checked = 0;
    for (name, args) in &runs {
        for ext in ["json", "csv"] {
            let first = dir.path().join(format!("{name}.{ext}"));
            let second = dir.path().join(format!("{name}.replay.{ext}"));
            let mut a = args.clone();
            a.extend(["--out", first.to_str().unwrap()]);
            let replay = [
                "--threads",
                "1",
                "replay",
                "--report",
                first.to_str().unwrap(),
                "--out",
                second.to_str().unwrap(),
            ];
            if run_cli(&a) != 0 || run_cli(&replay) != 0 {
                failures.push(format!("{name}.{ext}: command failed"));
                continue;
            }
            if std::fs::read(&first).unwrap() != std::fs::read(&second).unwrap() {
                failures.push(format!("{name}.{ext}: bytes differ"));
            }
            checked += 1;
        }
    }
    check(
        failures.is_empty(),
        format!("{checked} reports replayed bit-identically; failures {failures:?}"),
    )
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failed = 0;
    for (id, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {id}: {tag} ({secs:.1}s) {detail}");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
