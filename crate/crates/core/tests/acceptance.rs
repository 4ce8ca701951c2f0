//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ambiq::binary_density::{default_grid, density_curve, posterior_density_binary, BinaryCounts};
use ambiq::frequentist::{
    bias_curve, bias_plugin, exhaustive_expected_estimator, expected_plugin, plugin_estimate, BiasConfig,
    BiasMethod, Estimator,
};
use ambiq::measures::{
    ambiguity_modified, ambiguity_new, ambiguity_old, modified_from_new, normalized_entropy,
};
use ambiq::posterior_analytics::{expected_normalized_entropy, moments};
use ambiq::posterior_sampling::sample_transformed;
use ambiq::{DirichletParams, MeasureKind, ProbabilityVector, Quadrature};

type Check = std::result::Result<String, String>;

fn pv(proper: &[f64], cs: f64) -> ProbabilityVector {
    ProbabilityVector::new(proper.to_vec(), cs).unwrap()
}

struct Moments {
    mean: f64,
    var: f64,
    se_mean: f64,
    se_var: f64,
}

fn sample_moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in xs {
        let d = (x - mean) * (x - mean);
        m2 += d;
        m4 += d * d;
    }
    let (m2, m4) = (m2 / n, m4 / n);
    Moments {
        mean,
        var: m2 * n / (n - 1.0),
        se_mean: (m2 / n).sqrt(),
        se_var: ((m4 - m2 * m2) / n).sqrt(),
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> std::result::Result<(), String> {
    if elapsed > budget {
        Err(format!("took {elapsed:.2?}, budget {budget:?}"))
    } else {
        Ok(())
    }
}

fn check_rows(rows: &[(Vec<f64>, f64, [f64; 3])], tol: f64) -> std::result::Result<f64, String> {
    let mut worst: f64 = 0.0;
    for (i, (proper, cs, want)) in rows.iter().enumerate() {
        let q = pv(proper, *cs);
        let got = [ambiguity_new(&q), ambiguity_old(&q).unwrap(), ambiguity_modified(&q).unwrap()];
        for (name, g, w) in [("new", got[0], want[0]), ("old", got[1], want[1]), ("modified", got[2], want[2])] {
            let d = (g - w).abs();
            worst = worst.max(d);
            if d > tol {
                return Err(format!("row {}: {name} = {g:.6}, expected {w}", i + 1));
            }
        }
    }
    Ok(worst)
}

fn dichotomous_table() -> Check {
    let start = Instant::now();
    let rows = vec![
        (vec![1.0, 0.0], 0.0, [0.00, 0.00, 0.00]),
        (vec![0.9, 0.1], 0.0, [0.18, 0.20, 0.36]),
        (vec![0.8, 0.2], 0.0, [0.32, 0.40, 0.64]),
        (vec![0.7, 0.3], 0.0, [0.42, 0.60, 0.84]),
        (vec![0.6, 0.4], 0.0, [0.48, 0.80, 0.96]),
        (vec![0.5, 0.5], 0.0, [0.50, 1.00, 1.00]),
        (vec![0.25, 0.25], 0.5, [0.75, 1.00, 1.00]),
        (vec![0.0, 0.0], 1.0, [1.00, 1.00, 1.00]),
    ];
    let worst = check_rows(&rows, 0.005)?;
    within_budget(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn categorical_table() -> Check {
    let start = Instant::now();
    let rows = vec![
        (vec![1.0, 0.0, 0.0, 0.0, 0.0], 0.0, [0.000, 0.000, 0.000]),
        (vec![0.8, 0.2, 0.0, 0.0, 0.0], 0.0, [0.320, 0.250, 0.400]),
        (vec![0.7, 0.3, 0.0, 0.0, 0.0], 0.0, [0.420, 0.250, 0.525]),
        (vec![0.4, 0.4, 0.2, 0.0, 0.0], 0.0, [0.640, 0.500, 0.800]),
        (vec![0.3, 0.2, 0.2, 0.15, 0.15], 0.0, [0.785, 0.875, 0.981]),
        (vec![0.2; 5], 0.0, [0.800, 1.000, 1.000]),
        (vec![0.1; 5], 0.5, [0.900, 1.000, 1.000]),
        (vec![0.0; 5], 1.0, [1.000, 1.000, 1.000]),
    ];
    let worst = check_rows(&rows, 0.0005)?;
    within_budget(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn expected_entropy() -> Check {
    let start = Instant::now();
    let alpha = [11.0, 2.0, 2.0];
    let exact = expected_normalized_entropy(&alpha).map_err(|e| e.to_string())?;
    if !(0.635..=0.645).contains(&exact) {
        return Err(format!("E[H] = {exact}"));
    }
    let params = DirichletParams::new(alpha[..2].to_vec(), alpha[2]).unwrap();
    let xs: Vec<f64> =
        params.sample(1_000_000, 2024).iter().map(|q| normalized_entropy(&q.to_vec()).unwrap()).collect();
    let mc = sample_moments(&xs);
    if (mc.mean - exact).abs() >= 5e-4 {
        return Err(format!("MC mean {:.5} vs exact {exact:.5}", mc.mean));
    }
    within_budget(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("exact {exact:.5}, MC {:.5} ± {:.1e}", mc.mean, mc.se_mean))
}

fn moments_vs_monte_carlo() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_z: f64 = 0.0;
    for case in 0..50 {
        let c = 1 + case % 6;
        let proper: Vec<f64> = (0..c).map(|_| rng.random_range(0.3..10.0)).collect();
        let params = DirichletParams::new(proper, rng.random_range(0.3..10.0)).unwrap();
        let kinds: &[MeasureKind] = if c == 1 { &[MeasureKind::New] } else { &[MeasureKind::New, MeasureKind::Modified] };
        for &kind in kinds {
            let exact = moments(&params, kind).map_err(|e| e.to_string())?;
            let xs = sample_transformed(&params, kind, 1_000_000, 100 + case as u64).map_err(|e| e.to_string())?;
            let mc = sample_moments(&xs);
            let z_mean = (mc.mean - exact.mean).abs() / mc.se_mean;
            let z_var = (mc.var - exact.variance).abs() / mc.se_var;
            worst_z = worst_z.max(z_mean).max(z_var);
            if z_mean > 4.0 || z_var > 4.0 {
                return Err(format!(
                    "case {case} {kind} α = {:?}: mean {} vs {} (z {z_mean:.2}), var {} vs {} (z {z_var:.2})",
                    params.to_vec(),
                    mc.mean,
                    exact.mean,
                    mc.var,
                    exact.variance
                ));
            }
        }
    }
    within_budget(start.elapsed(), Duration::from_secs(300))?;
    Ok(format!("largest |z| {worst_z:.2}"))
}

fn binary_density_checks() -> Check {
    let start = Instant::now();
    let configs = [
        (0, 0, 0),
        (1, 0, 0),
        (2, 2, 1),
        (3, 7, 2),
        (12, 1, 0),
        (0, 0, 9),
        (10, 10, 10),
        (25, 3, 2),
        (5, 0, 5),
        (1, 1, 20),
    ];
    let grid = default_grid();
    let q = Quadrature::new(1e-7, 50).unwrap();
    let (mut worst_norm, mut worst_sup): (f64, f64) = (0.0, 0.0);
    for (i, &(p, m, c)) in configs.iter().enumerate() {
        let counts = BinaryCounts::new(p, m, c);
        let params = counts.posterior(1.0).unwrap();
        for measure in [MeasureKind::New, MeasureKind::Modified] {
            let curve = density_curve(counts, 1.0, measure, &grid, q).map_err(|e| e.to_string())?;
            let norm_err = (curve.normalization - 1.0).abs();
            worst_norm = worst_norm.max(norm_err);
            if norm_err > 1e-3 {
                return Err(format!("{counts:?} {measure}: ∫f = {}", curve.normalization));
            }
            let mut xs = sample_transformed(&params, measure, 100_000, 500 + i as u64).map_err(|e| e.to_string())?;
            xs.sort_by(f64::total_cmp);
            let n = xs.len() as f64;
            let sup = grid
                .iter()
                .zip(&curve.cdf)
                .map(|(&a, &f)| {
                    // both one-sided limits of the empirical CDF
                    let hi = xs.partition_point(|&x| x <= a) as f64 / n;
                    let lo = xs.partition_point(|&x| x < a) as f64 / n;
                    (hi - f).abs().max((lo - f).abs())
                })
                .fold(0.0, f64::max);
            worst_sup = worst_sup.max(sup);
            if sup >= 0.015 {
                return Err(format!("{counts:?} {measure}: sup |F - F_n| = {sup:.4}"));
            }
        }
    }
    within_budget(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!("max |∫f - 1| {worst_norm:.1e}, max sup |F - F_n| {worst_sup:.4}"))
}

fn endpoint_asymptotics() -> Check {
    let q = Quadrature::default();
    let mut report = Vec::new();
    for (p, m, c) in [(0, 0, 0), (2, 2, 1), (3, 7, 2), (10, 4, 1)] {
        let counts = BinaryCounts::new(p, m, c);
        let f = |a: f64, measure| posterior_density_binary(a, counts, 1.0, measure, q).map_err(|e| e.to_string());
        let seq = [f(1.0 - 1e-2, MeasureKind::New)?, f(1.0 - 1e-3, MeasureKind::New)?, f(1.0 - 1e-4, MeasureKind::New)?];
        if !(seq[0] > seq[1] && seq[1] > seq[2] && seq[2] < 0.05) {
            return Err(format!("{counts:?} New at 1-ε: {seq:?}"));
        }
        let eps = 1e-5;
        let ratio = f(1.0 - eps, MeasureKind::Modified)? / f(1.0 - 4.0 * eps, MeasureKind::Modified)?;
        if !(1.8..=2.2).contains(&ratio) {
            return Err(format!("{counts:?} Modified ratio {ratio}"));
        }
        report.push(format!("{ratio:.4}"));
    }
    Ok(format!("Modified ratios {}", report.join(", ")))
}

fn plugin_exactness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let raw: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let q = pv(&[raw[0] / total, raw[1] / total], raw[2] / total);
        let mut prev = f64::NEG_INFINITY;
        for n in 1..=8 {
            let closed = expected_plugin(&q, n).map_err(|e| e.to_string())?;
            let brute = exhaustive_expected_estimator(&q, n, |c| plugin_estimate(c, MeasureKind::New))
                .map_err(|e| e.to_string())?;
            worst = worst.max((closed - brute).abs());
            if (closed - brute).abs() > 1e-12 {
                return Err(format!("case {case} n = {n}: {closed} vs {brute}"));
            }
            let bias = bias_plugin(&q, n).map_err(|e| e.to_string())?;
            if !(bias < 0.0 && bias > prev) {
                return Err(format!("case {case} n = {n}: bias {bias} after {prev}"));
            }
            prev = bias;
        }
    }
    Ok(format!("max |closed - enumerated| {worst:.1e}"))
}

fn measure_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for c in 2..=6usize {
        let draws = DirichletParams::symmetric(c, 1.0).unwrap().sample(100_000, c as u64);
        for q in &draws {
            let new = ambiguity_new(q);
            let modified = ambiguity_modified(q).map_err(|e| e.to_string())?;
            let old = ambiguity_old(q).map_err(|e| e.to_string())?;
            if [new, modified, old].iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(format!("C = {c}: out of range at {:?}", q.to_vec()));
            }
            if modified < new - 1e-12 {
                return Err(format!("C = {c}: modified {modified} < new {new}"));
            }
            let via = modified_from_new(new, q.cs(), c).map_err(|e| e.to_string())?;
            if (via - modified).abs() > 1e-12 {
                return Err(format!("C = {c}: relation off by {:e}", (via - modified).abs()));
            }
        }
        for _ in 0..1000 {
            let cs = rng.random_range(0.0..1.0);
            let q = ProbabilityVector::uniform(c, cs).map_err(|e| e.to_string())?;
            let want = 1.0 - (1.0 - cs) / c as f64;
            if (ambiguity_new(&q) - want).abs() > 1e-12 {
                return Err(format!("C = {c}: uniform with cs = {cs}: {}", ambiguity_new(&q)));
            }
        }
    }
    Ok("5 × 10⁵ points".into())
}

fn bias_curves() -> Check {
    let n_values = [1, 2, 5, 10, 20, 50, 100, 200, 500];
    let config = BiasConfig {
        measure: MeasureKind::New,
        estimators: vec![Estimator::Plugin, Estimator::BayesMean(1.0), Estimator::BayesMode(1.0)],
        mc_repeats: 400,
        posterior_samples: 2000,
    };
    let mut report = Vec::new();
    for (name, q) in [("balanced", pv(&[0.4, 0.4], 0.2)), ("skewed", pv(&[0.9, 0.05], 0.05))] {
        let series = bias_curve(&q, &n_values, &config, 9).map_err(|e| e.to_string())?;
        let plugin = series.curve("plugin").ok_or("no plugin curve")?;
        if plugin.method.iter().any(|m| *m != BiasMethod::Exact) {
            return Err(format!("{name}: plug-in curve not exact"));
        }
        if plugin.bias.iter().any(|&b| b >= 0.0) || plugin.bias.windows(2).any(|w| w[1] <= w[0]) {
            return Err(format!("{name}: plug-in bias not negative and increasing: {:?}", plugin.bias));
        }
        let last = n_values.len() - 1;
        for curve in &series.curves {
            let se = if curve.stderr[last].is_finite() { curve.stderr[last] } else { 0.0 };
            let bound = curve.bias[last].abs() + 3.0 * se;
            if bound >= 0.02 {
                return Err(format!("{name} {}: |bias| + 3 se = {bound:.4} at n = 500", curve.label));
            }
            report.push(format!("{name}/{} {:+.4}", curve.label, curve.bias[last]));
        }
    }
    Ok(report.join(", "))
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>, Vec<u8>) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["ambiq"];
    full.extend_from_slice(args);
    let code = ambiq::cli::run(full, &mut out, &mut err);
    (code, out, err)
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let data = d.join("records.csv");
    let mut csv = String::from("item_id,annotator_id,response\n");
    let responses = ["a", "b", "cs", "a", "a", "b", "b", "cs", "a", "b", "a", "a"];
    for (i, r) in responses.iter().enumerate() {
        csv.push_str(&format!("item{},ann{},{}\n", i % 4, i, r));
    }
    fs::write(&data, csv).map_err(|e| e.to_string())?;
    let p = |name: &str| d.join(name).to_string_lossy().into_owned();
    let data = data.to_string_lossy().into_owned();
    let (band, prior_band, bias, prior, score, rank) =
        (p("band.csv"), p("prior_band.csv"), p("bias.csv"), p("prior.csv"), p("score.csv"), p("rank.csv"));
    let commands: Vec<Vec<&str>> = vec![
        vec!["posterior", "--counts", "3,1,2", "--measure", "old", "--samples", "20000", "--density", &band,
             "--repeats", "5", "--samples-per-repeat", "20000", "--seed", "11"],
        vec!["--json", "posterior", "--counts", "4,2,1,1", "--measure", "modified", "--samples", "20000", "--seed", "5"],
        vec!["bias-curve", "--q", "0.4,0.4,0.2", "--n", "1,5,20,50", "--mc-repeats", "100",
             "--posterior-samples", "1000", "--seed", "3", "--out", &bias],
        vec!["bias-curve", "--q", "0.9,0.05,0.05", "--n", "2,10", "--mc-repeats", "50", "--posterior-samples", "1000"],
        vec!["prior-explore", "--categories", "3", "--betas", "0.5,1,2", "--mc-samples", "20000",
             "--density-out", &prior_band, "--repeats", "5", "--samples-per-repeat", "10000", "--out", &prior],
        vec!["score", "--input", &data, "--labels", "a,b", "--mc-samples", "5000", "--out", &score],
        vec!["rank", "--input", &data, "--labels", "a,b", "--mc-samples", "5000", "--key", "posterior-mean", "--out", &rank],
        vec!["--json", "rank", "--input", &data, "--labels", "a,b", "--mc-samples", "5000", "--threshold", "0.3"],
    ];
    for args in &commands {
        let first = run_cli(args);
        let first_files = snapshot(d);
        let second = run_cli(args);
        let second_files = snapshot(d);
        if first.0 != 0 {
            return Err(format!("{args:?} exited {}: {}", first.0, String::from_utf8_lossy(&first.2)));
        }
        if first != second {
            return Err(format!("{args:?}: stdout/stderr differ between runs"));
        }
        if first_files != second_files {
            return Err(format!("{args:?}: output files differ between runs"));
        }
    }
    Ok(format!("{} commands", commands.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("1 dichotomous example table", dichotomous_table),
        ("2 categorical example table", categorical_table),
        ("3 expected normalized entropy", expected_entropy),
        ("4 closed-form moments vs Monte Carlo", moments_vs_monte_carlo),
        ("5 binary analytic density", binary_density_checks),
        ("6 density endpoint asymptotics", endpoint_asymptotics),
        ("7 plug-in expectation exactness", plugin_exactness),
        ("8 measure inequalities", measure_properties),
        ("9 estimator bias curves", bias_curves),
        ("10 determinism of CLI outputs", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        match result {
            Ok(detail) => println!("PASS criterion {name} ({elapsed:.2?}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name} ({elapsed:.2?}): {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
