//! Acceptance suite. Prints one `criterion N ... PASS|FAIL` line per
//! criterion and exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use inertia_cli::{run, ExperimentConfig, RunOptions, RunReport};
use inertia_core::fractional::{fbm_covariance, stieltjes_integral, FbmGenerator};
use inertia_core::market::{
    mean_rates, on_off_gamma, simulate_feedback, solve_fluid, MarketConfig, MarketParams, RateDef, RateSpec, ScalarFn, ZSampler,
    SEPARABILITY_NON_DEGENERATE,
};
use inertia_core::stats::{convergence_slope, ks_normal, ks_two_sample, poisson_clt_check, Moments};
use inertia_core::{stream, substream, SemiMarkovSpec, SojournLaw};

type Outcome = (bool, String);

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn shipped(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&config_dir().join(format!("{name}.toml"))).expect("shipped config loads")
}

fn run_in_temp(config: &ExperimentConfig, threads: Option<usize>) -> (tempfile::TempDir, RunReport) {
    let dir = tempfile::tempdir().expect("temp dir");
    let report = run(
        config,
        &RunOptions {
            threads,
            out_dir: dir.path().to_path_buf(),
        },
    )
    .expect("run succeeds");
    (dir, report)
}

fn no_feedback_with(inactive: SojournLaw) -> ExperimentConfig {
    let mut config = shipped("no_feedback");
    config.semi_markov.as_mut().expect("section present").sojourn_laws[0] = inactive;
    config
}

fn hurst_law() -> Outcome {
    let mut medians = Vec::new();
    let mut ok = true;
    let mut detail = Vec::new();
    for alpha in [1.3, 1.5, 1.7] {
        let (_dir, report) = run_in_temp(&no_feedback_with(SojournLaw::Pareto { scale: 1.0, tail: alpha }), None);
        let h = report.manifest.hurst_estimate_median.expect("median recorded");
        let target = (3.0 - alpha) / 2.0;
        ok &= (h - target).abs() <= 0.1;
        detail.push(format!("α={alpha}: median {h:.3} vs {target:.2}"));
        medians.push(h);
    }
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    detail.push(format!("decreasing in α: {decreasing}"));
    (ok && decreasing, detail.join("; "))
}

fn brownian_case() -> Outcome {
    let (_dir, report) = run_in_temp(&no_feedback_with(SojournLaw::Exponential { rate: 1.0 }), None);
    let h = report.manifest.hurst_estimate_median.expect("median recorded");
    let k = (1.0 / report.paths[0].grid_step()).round() as usize;
    let marginal: Vec<f64> = report.paths.iter().map(|p| p.values()[k]).collect();
    let m = Moments::from_slice(&marginal);
    let ks = ks_normal(&marginal, m.mean, m.variance()).expect("ks runs");
    let ok = (0.42..=0.58).contains(&h) && ks.p_value > 0.01;
    (ok, format!("median H {h:.3}; KS of t=1 marginal vs fitted normal p = {:.3}", ks.p_value))
}

fn fluid_convergence() -> Outcome {
    let (_dir, report) = run_in_temp(&shipped("convergence"), None);
    let medians: Vec<f64> = report.convergence.iter().map(|r| r.median_sup_error).collect();
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let slope = report.manifest.convergence_slope.expect("slope recorded");
    let ok = decreasing && report.convergence.len() == 4 && (slope + 0.5).abs() <= 0.15;
    (ok, format!("medians {medians:.4?}; slope {slope:.3}"))
}

fn gaussian_match() -> Outcome {
    let spec = SemiMarkovSpec::on_off_markov(1.0, 1.0, 0.5).expect("spec");
    let def = RateDef {
        f: vec![0.0, 1.0],
        g_plus: ScalarFn::Logistic {
            amplitude: 0.6,
            steepness: 2.0,
            center: 0.0,
        },
        g_minus: ScalarFn::Logistic {
            amplitude: 0.3,
            steepness: -2.0,
            center: 0.0,
        },
        h_plus: ScalarFn::Zero,
        h_minus: ScalarFn::Zero,
        rate_bound: 0.6,
        lipschitz: 0.3,
        price_range: [-5.0, 5.0],
    };
    let rates = RateSpec::new(def, &spec).expect("rates");
    let (n, dt) = (4000usize, 1.0 / 256.0);
    let fluid = solve_fluid(&mean_rates(&rates, spec.occupation()).expect("mean rates"), 0.0, 1.0, dt).expect("fluid");
    let s1 = fluid.s.last();
    let params = MarketParams {
        n_agents: n,
        time_scale: 1.0,
        horizon: 1.0,
        grid_step: dt,
    };
    let market = MarketConfig::new(params, spec.clone(), rates.clone(), 4).expect("market");
    let scaled: Vec<f64> = (0..2000)
        .map(|k| {
            let path = simulate_feedback(&market, &mut substream(4, 0, k)).expect("simulation");
            (n as f64).sqrt() * (path.price_at(1.0) - s1)
        })
        .collect();
    let gamma = on_off_gamma(&spec, &rates, &fluid, fluid.len()).expect("gamma");
    let sampler = ZSampler::new(&fluid, &gamma).expect("sampler");
    let mut rng = substream(4, 1, 0);
    let z: Vec<f64> = (0..2000).map(|_| sampler.sample(&mut rng).z.last()).collect();
    let ks = ks_two_sample(&scaled, &z).expect("ks");
    let (a, b) = (Moments::from_slice(&scaled), Moments::from_slice(&z));
    (
        ks.p_value > 0.01,
        format!("two-sample KS p = {:.3}; Var √N(S-s) = {:.4}, Var Z = {:.4}", ks.p_value, a.variance(), b.variance()),
    )
}

fn fbm_correctness() -> Outcome {
    let (n, paths) = (256usize, 10_000u32);
    let mut ok = true;
    let mut detail = Vec::new();
    for (g, h) in [0.5, 0.75, 0.9].into_iter().enumerate() {
        let gen = FbmGenerator::new(h, n, 1.0).expect("generator");
        let points: Vec<usize> = (1..=8).map(|k| k * n / 8).collect();
        let lags: Vec<usize> = (0..6).map(|j| 1 << j).collect();
        let mut cross = vec![vec![0.0; 8]; 8];
        let mut sq = vec![0.0; lags.len()];
        let mut counts = vec![0usize; lags.len()];
        for k in 0..paths {
            let v = gen.sample(&mut substream(5, g as u32, k)).to_series().into_values();
            for i in 0..8 {
                for j in 0..8 {
                    cross[i][j] += v[points[i]] * v[points[j]];
                }
            }
            for (l, &lag) in lags.iter().enumerate() {
                for t in 0..n - lag {
                    sq[l] += (v[t + lag] - v[t]).powi(2);
                }
                counts[l] += n - lag;
            }
        }
        let mut worst: f64 = 0.0;
        let mut cov_ok = true;
        for i in 0..8 {
            for j in 0..8 {
                let emp = cross[i][j] / paths as f64;
                let exact = fbm_covariance(points[i] as f64 / n as f64, points[j] as f64 / n as f64, h).expect("covariance");
                let rel = (emp - exact).abs() / exact.abs();
                cov_ok &= rel <= 0.05 || (emp - exact).abs() <= 0.02;
                worst = worst.max(rel);
            }
        }
        let lag_sizes: Vec<f64> = lags.iter().map(|&l| l as f64).collect();
        let vars: Vec<f64> = sq.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
        let slope = convergence_slope(&lag_sizes, &vars).expect("fit").slope;
        let slope_ok = (slope - 2.0 * h).abs() <= 0.05;
        ok &= cov_ok && slope_ok;
        detail.push(format!("H={h}: max rel cov err {worst:.3}, slope {slope:.3}"));
    }
    (ok, detail.join("; "))
}

fn stieltjes_convergence() -> Outcome {
    let (h, fine, paths) = (0.75, 1usize << 14, 200u64);
    let gen = FbmGenerator::new(h, fine, 1.0).expect("generator");
    let factors = [16usize, 8, 4, 2, 1];
    let mut err = vec![0.0; factors.len()];
    let mut scale = 0.0;
    for k in 0..paths {
        let b = gen.sample(&mut stream(6, k)).to_series();
        let target = 0.5 * b.last().powi(2);
        scale += target;
        for (l, &f) in factors.iter().enumerate() {
            let coarse = b.subsample(f).expect("subsample");
            let integral = stieltjes_integral(&coarse, &coarse).expect("integral").last();
            err[l] += (integral - target).abs();
        }
    }
    let rel: Vec<f64> = err.iter().map(|e| e / scale).collect();
    let decreasing = rel.windows(2).all(|w| w[1] < w[0]);
    let last = *rel.last().expect("levels");
    (decreasing && last < 0.02, format!("relative errors dt=2^-10..2^-14: {rel:.4?}"))
}

fn poisson_clt() -> Outcome {
    let r = poisson_clt_check(1e4, 10_000, &mut stream(7, 0)).expect("check");
    (r.ks.p_value > 0.01, format!("KS p = {:.3}", r.ks.p_value))
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("read dir") {
            let p = entry.expect("entry").path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n != "manifest.json") {
                out.push((p.strip_prefix(dir).expect("prefix").display().to_string(), std::fs::read(&p).expect("read")));
            }
        }
    }
    out.sort();
    out
}

fn invariant_suites() -> Outcome {
    let mut failures = Vec::new();

    let (dir, _) = run_in_temp(&shipped("fbm"), None);
    let csv = std::fs::read_to_string(dir.path().join("runs/fbm_00000.csv")).expect("fbm csv");
    if csv.lines().count() != 16385 || !csv.starts_with("0,0\n") {
        failures.push("fbm CSV format".to_string());
    }
    if fbm_covariance(0.5, 1.0, 0.5).ok() != Some(0.5) {
        failures.push("Brownian covariance".to_string());
    }

    let mut bad_alpha = shipped("no_feedback");
    bad_alpha.semi_markov.as_mut().expect("section").sojourn_laws[0] = SojournLaw::Pareto { scale: 1.0, tail: 2.5 };
    if !bad_alpha.checks().iter().any(|c| !c.passed && c.name == "tail index α ∈ (1,2)") {
        failures.push("α = 2.5 not rejected by name".to_string());
    }
    let mut degenerate = shipped("feedback");
    degenerate.rates.as_mut().expect("section").f = vec![1.0, 1.0];
    if !degenerate.checks().iter().any(|c| !c.passed && c.name == SEPARABILITY_NON_DEGENERATE) {
        failures.push("degenerate f not rejected by name".to_string());
    }
    let mut bad_matrix = shipped("feedback");
    bad_matrix.semi_markov.as_mut().expect("section").embedded_matrix[0] = vec![0.5, 0.6];
    if bad_matrix.validate().is_ok() {
        failures.push("non-stochastic matrix accepted".to_string());
    }
    for entry in std::fs::read_dir(config_dir()).expect("configs") {
        let path = entry.expect("entry").path();
        if let Err(e) = ExperimentConfig::load(&path).and_then(|c| c.validate()) {
            failures.push(format!("{} fails validation: {e}", path.display()));
        }
    }

    for name in ["feedback", "fou", "hurst", "randcoeff"] {
        let config = shipped(name);
        let runs: Vec<_> = [1, 4, 8].into_iter().map(|t| run_in_temp(&config, Some(t))).collect();
        let trees: Vec<_> = runs.iter().map(|(d, _)| read_tree(d.path())).collect();
        let manifests: Vec<_> = runs.iter().map(|(_, r)| r.manifest.without_wall_time()).collect();
        if trees.windows(2).any(|w| w[0] != w[1]) || manifests.windows(2).any(|w| w[0] != w[1]) {
            failures.push(format!("{name} differs across 1/4/8 threads"));
        }
    }

    let detail = if failures.is_empty() {
        "format, validation and 1/4/8-thread determinism checks hold".to_string()
    } else {
        failures.join("; ")
    };
    (failures.is_empty(), detail)
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 8] = [
        (1, "Hurst law H = (3-α)/2 without feedback", hurst_law),
        (2, "Brownian case with exponential sojourns", brownian_case),
        (3, "fluid limit convergence rate", fluid_convergence),
        (4, "second-order Gaussian match", gaussian_match),
        (5, "fBm covariance and increment scaling", fbm_correctness),
        (6, "Stieltjes sum convergence", stieltjes_convergence),
        (7, "Poisson strong approximation", poisson_clt),
        (8, "invariant suites and determinism", invariant_suites),
    ];
    let mut failed = 0;
    for (n, name, check) in criteria {
        let (ok, detail) = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        println!("criterion {n} {name} ... {} ({detail})", if ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
