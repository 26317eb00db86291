//! Experiment execution. Ensemble member `k` draws from
//! `substream(seed, group, k)`, members run on a rayon pool, and results are
//! collected in member order, so outputs do not depend on the thread count.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use inertia_core::fractional::FbmGenerator;
use inertia_core::market::{
    estimate_sigma, mean_rates, no_feedback_reference, rescaled_fluctuation, rescaled_imbalance, simulate_feedback, simulate_fractional_vol,
    simulate_no_feedback, simulate_random_coeff, solve_fluid, FluidSolution, FouLimitSampler, MarketConfig, MarketParams, RateSpec,
};
use inertia_core::stats::{
    convergence_slope, hurst_dfa, hurst_rs, hurst_wavelet, hurst_wavelet_default, median, quantile, sup_error, tree_merge, EnsembleSummary,
    HurstEstimate, HurstMethod, Moments,
};
use inertia_core::{substream, GridSeries, SemiMarkovSpec, SeriesRole};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind, NoFeedbackSection};
use crate::error::{CliError, Result};
use crate::manifest::{Manifest, MANIFEST_FILE};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; rayon's default when `None`.
    pub threads: Option<usize>,
    pub out_dir: PathBuf,
}

/// Median sup error of the feedback price against its fluid limit at one
/// agent count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n_agents: usize,
    pub median_sup_error: f64,
    pub q05: f64,
    pub q95: f64,
    pub mean_orders: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: Manifest,
    pub out_dir: PathBuf,
    /// Primary series of each member, in member order.
    pub paths: Vec<GridSeries>,
    pub estimates: Vec<HurstEstimate>,
    pub convergence: Vec<ConvergenceRow>,
}

struct Outcome {
    files: Vec<(String, String)>,
    paths: Vec<GridSeries>,
    estimates: Vec<HurstEstimate>,
    convergence: Vec<ConvergenceRow>,
    manifest: Manifest,
}

impl Outcome {
    fn new(manifest: Manifest) -> Self {
        Self {
            files: Vec::new(),
            paths: Vec::new(),
            estimates: Vec::new(),
            convergence: Vec::new(),
            manifest,
        }
    }

    fn file(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    fn add_summary(&mut self) -> Result<()> {
        if self.paths.is_empty() {
            return Ok(());
        }
        let summary = EnsembleSummary::from_paths(&self.paths)?;
        self.file("summary.csv", summary.to_csv_string());
        let parts: Vec<Moments> = self.paths.iter().map(|p| Moments::from_slice(&[p.last()])).collect();
        let m = tree_merge(&parts);
        self.manifest.terminal_mean = Some(m.mean);
        self.manifest.terminal_variance = Some(m.variance());
        Ok(())
    }
}

fn run_file(prefix: &str, k: usize) -> String {
    format!("runs/{prefix}_{k:05}.csv")
}

fn members<T: Send>(count: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..count).into_par_iter().map(f).collect()
}

fn member_rng(seed: u64, group: u32, k: usize) -> inertia_core::SimRng {
    substream(seed, group, u32::try_from(k).expect("ensemble index fits in u32"))
}

fn spec_of(config: &ExperimentConfig) -> Result<SemiMarkovSpec> {
    let def = config.semi_markov.clone().ok_or_else(|| CliError::Invalid(vec!["section [semi_markov] missing".into()]))?;
    Ok(SemiMarkovSpec::try_from(def)?)
}

fn rates_of(config: &ExperimentConfig, spec: &SemiMarkovSpec) -> Result<RateSpec> {
    let def = config.rates.clone().ok_or_else(|| CliError::Invalid(vec!["section [rates] missing".into()]))?;
    Ok(RateSpec::new(def, spec)?)
}

fn market_of(config: &ExperimentConfig) -> Result<MarketParams> {
    config.market.ok_or_else(|| CliError::Invalid(vec!["section [market] missing".into()]))
}

fn fluid_of(spec: &SemiMarkovSpec, rates: &RateSpec, s0: f64, horizon: f64, dt: f64) -> Result<FluidSolution> {
    Ok(solve_fluid(&mean_rates(rates, spec.occupation())?, s0, horizon, dt)?)
}

fn fluid_rates_csv(fluid: &FluidSolution) -> String {
    let mut out = String::from("time,s,net,plus,minus,net_derivative\n");
    for k in 0..fluid.len() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fluid.s.time(k),
            fluid.s.values()[k],
            fluid.net.values()[k],
            fluid.plus.values()[k],
            fluid.minus.values()[k],
            fluid.net_derivative.values()[k]
        ));
    }
    out
}

fn estimates_csv(rows: &[(usize, HurstEstimate)]) -> String {
    let mut out = format!("run,{}\n", HurstEstimate::CSV_HEADER);
    for (k, e) in rows {
        out.push_str(&format!("{k},{}\n", e.to_csv_row()));
    }
    out
}

fn run_fluid(config: &ExperimentConfig, mut out: Outcome) -> Result<Outcome> {
    let spec = spec_of(config)?;
    let rates = rates_of(config, &spec)?;
    let section = config.fluid.as_ref().expect("validated");
    let fluid = fluid_of(&spec, &rates, section.s0, section.horizon, section.dt)?;
    out.manifest.alpha = spec.tail_index();
    out.file("fluid.csv", fluid.s.to_csv_string());
    out.file("fluid_rates.csv", fluid_rates_csv(&fluid));
    out.paths.push(fluid.s);
    Ok(out)
}

fn run_feedback(config: &ExperimentConfig, mut out: Outcome) -> Result<Outcome> {
    let spec = spec_of(config)?;
    let rates = rates_of(config, &spec)?;
    let params = market_of(config)?;
    let fluid = fluid_of(&spec, &rates, 0.0, params.horizon, params.grid_step)?;
    let market = MarketConfig::new(params, spec.clone(), rates, config.seed)?;
    let results = members(config.ensemble_size, |k| {
        let path = simulate_feedback(&market, &mut member_rng(config.seed, 0, k))?;
        let grid = path.to_grid(params.grid_step)?;
        let err = sup_error(&grid, &fluid.s)?;
        Ok((path, grid, err))
    })?;
    let mut errors_csv = String::from("run,orders,sup_error\n");
    let mut events = 0u64;
    let mut errors = Vec::new();
    for (k, (path, grid, err)) in results.into_iter().enumerate() {
        out.file(run_file("path", k), path.to_csv_string());
        errors_csv.push_str(&format!("{k},{},{err}\n", path.order_count()));
        events += path.order_count() as u64;
        errors.push(err);
        out.paths.push(grid);
    }
    out.file("fluid.csv", fluid.s.to_csv_string());
    out.file("sup_errors.csv", errors_csv);
    out.manifest.n_agents = Some(params.n_agents);
    out.manifest.time_scale = Some(params.time_scale);
    out.manifest.alpha = spec.tail_index();
    out.manifest.event_count = Some(events);
    out.manifest.median_sup_error = Some(median(&errors));
    out.add_summary()?;
    Ok(out)
}

fn run_no_feedback(config: &ExperimentConfig, mut out: Outcome) -> Result<Outcome> {
    let spec = spec_of(config)?;
    let params = market_of(config)?;
    let section = config.no_feedback.clone().unwrap_or_else(NoFeedbackSection::default);
    let hurst = spec.limit_hurst();
    let (n, t) = (params.n_agents, params.time_scale);
    let results = members(config.ensemble_size, |k| {
        let mut rng = member_rng(config.seed, 0, k);
        let psi = section.elasticity.sample(params.grid_step, params.grid_steps(), &mut rng)?;
        let price = simulate_no_feedback(n, t, &psi, &spec, &mut rng)?;
        let reference = no_feedback_reference(spec.stationary_mean(), &psi);
        let fluct = rescaled_fluctuation(&price, &reference, n, t, hurst)?;
        let est = match section.octaves {
            Some([lo, hi]) => hurst_wavelet(&fluct, lo, hi)?,
            None => hurst_wavelet_default(&fluct)?,
        };
        Ok((price, fluct, est))
    })?;
    let mut rows = Vec::new();
    for (k, (price, fluct, est)) in results.into_iter().enumerate() {
        out.file(run_file("price", k), price.to_csv_string());
        out.file(run_file("fluctuation", k), fluct.to_csv_string());
        rows.push((k, est));
        out.estimates.push(est);
        out.paths.push(fluct);
    }
    out.file("hurst.csv", estimates_csv(&rows));
    let hs: Vec<f64> = out.estimates.iter().map(|e| e.h).collect();
    out.manifest.n_agents = Some(n);
    out.manifest.time_scale = Some(t);
    out.manifest.alpha = spec.tail_index();
    out.manifest.hurst = Some(hurst);
    out.manifest.hurst_estimate_median = Some(median(&hs));
    out.add_summary()?;
    Ok(out)
}

fn run_fbm(config: &ExperimentConfig, mut out: Outcome) -> Result<Outcome> {
    let section = config.fbm.as_ref().expect("validated");
    let gen = FbmGenerator::new(section.hurst, section.n_steps, section.horizon)?;
    let paths = members(config.ensemble_size, |k| Ok(gen.sample(&mut member_rng(config.seed, 0, k)).to_series()))?;
    for (k, p) in paths.into_iter().enumerate() {
        out.file(run_file("fbm", k), p.to_csv_string());
        out.paths.push(p);
    }
    out.manifest.hurst = Some(section.hurst);
    out.add_summary()?;
    Ok(out)
}

fn run_fou(config: &ExperimentConfig, mut out: Outcome) -> Result<Outcome> {
    let spec = spec_of(config)?;
    let rates = rates_of(config, &spec)?;
    let params = market_of(config)?;
    let section = config.fou.as_ref().expect("validated");
    let hurst = section.hurst.unwrap_or_else(|| spec.limit_hurst());
    let fluid = fluid_of(&spec, &rates, 0.0, params.horizon, params.grid_step)?;
    let sigma = match section.sigma {
        Some(s) => s,
        None => {
            let ends = members(section.sigma_samples, |k| {
                let y = rescaled_imbalance(&spec, &rates, &fluid, params.n_agents, params.time_scale, hurst, &mut member_rng(config.seed, 1, k))?;
                Ok(y.last())
            })?;
            let diffusion = fluid.s.map(|s| rates.g(s)).with_role(SeriesRole::Integrand);
            let est = estimate_sigma(&ends, &diffusion, hurst)?;
            out.file(
                "sigma.csv",
                format!(
                    "sigma,empirical_variance,unit_variance,samples\n{},{},{},{}\n",
                    est.sigma, est.empirical_variance, est.unit_variance, est.samples
                ),
            );
            est.sigma
        }
    };
    let sampler = FouLimitSampler::new(&fluid, &rates, sigma, hurst)?;
    let paths = members(config.ensemble_size, |k| Ok(sampler.sample(&mut member_rng(config.seed, 0, k))))?;
    for (k, p) in paths.into_iter().enumerate() {
        out.file(run_file("fou", k), p.to_csv_string());
        out.paths.push(p);
    }
    out.file("fluid.csv", fluid.s.to_csv_string());
    out.manifest.n_agents = Some(params.n_agents);
    out.manifest.time_scale = Some(params.time_scale);
    out.manifest.alpha = spec.tail_index();
    out.manifest.hurst = Some(hurst);
    out.manifest.sigma_estimate = Some(sigma);
    out.add_summary()?;
    Ok(out)
}

fn run_hurst(config: &ExperimentConfig, mut out: Outcome) -> Result<Outcome> {
    let section = config.hurst.as_ref().expect("validated");
    let gen = FbmGenerator::new(section.hurst, section.n_steps, 1.0)?;
    let results = members(config.ensemble_size, |k| {
        let p = gen.sample(&mut member_rng(config.seed, 0, k)).to_series();
        section
            .methods
            .iter()
            .map(|m| {
                Ok(match m {
                    HurstMethod::Wavelet => hurst_wavelet_default(&p)?,
                    HurstMethod::Dfa => hurst_dfa(&p, None)?,
                    HurstMethod::RescaledRange => hurst_rs(&p, None)?,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows = Vec::new();
    for (k, ests) in results.iter().enumerate() {
        for e in ests {
            rows.push((k, *e));
            out.estimates.push(*e);
        }
    }
    out.file("hurst.csv", estimates_csv(&rows));
    let mut summary = String::from("method,median_h,q05,q95,runs\n");
    for (i, m) in section.methods.iter().enumerate() {
        let hs: Vec<f64> = results.iter().map(|r| r[i].h).collect();
        summary.push_str(&format!("{m},{},{},{},{}\n", median(&hs), quantile(&hs, 0.05), quantile(&hs, 0.95), hs.len()));
        if i == 0 {
            out.manifest.hurst_estimate_median = Some(median(&hs));
        }
    }
    out.file("summary.csv", summary);
    out.manifest.hurst = Some(section.hurst);
    Ok(out)
}

fn run_convergence(config: &ExperimentConfig, mut out: Outcome) -> Result<Outcome> {
    let spec = spec_of(config)?;
    let rates = rates_of(config, &spec)?;
    let section = config.convergence.as_ref().expect("validated");
    let fluid = fluid_of(&spec, &rates, 0.0, section.horizon, section.grid_step)?;
    let seeds = config.ensemble_size;
    let markets = section
        .sizes
        .iter()
        .map(|&n| {
            let params = MarketParams {
                n_agents: n,
                time_scale: 1.0,
                horizon: section.horizon,
                grid_step: section.grid_step,
            };
            MarketConfig::new(params, spec.clone(), rates.clone(), config.seed)
        })
        .collect::<inertia_core::Result<Vec<_>>>()?;
    let results = members(markets.len() * seeds, |job| {
        let (i, k) = (job / seeds, job % seeds);
        let group = u32::try_from(i).expect("size index fits in u32");
        let path = simulate_feedback(&markets[i], &mut member_rng(config.seed, group, k))?;
        let err = sup_error(&path.to_grid(section.grid_step)?, &fluid.s)?;
        Ok((path.order_count(), err))
    })?;
    let mut runs_csv = String::from("n_agents,run,orders,sup_error\n");
    let mut summary = String::from("n_agents,median_sup_error,q05,q95,mean_orders\n");
    let mut events = 0u64;
    for (i, &n) in section.sizes.iter().enumerate() {
        let chunk = &results[i * seeds..(i + 1) * seeds];
        let errs: Vec<f64> = chunk.iter().map(|r| r.1).collect();
        for (k, (orders, err)) in chunk.iter().enumerate() {
            runs_csv.push_str(&format!("{n},{k},{orders},{err}\n"));
            events += *orders as u64;
        }
        let row = ConvergenceRow {
            n_agents: n,
            median_sup_error: median(&errs),
            q05: quantile(&errs, 0.05),
            q95: quantile(&errs, 0.95),
            mean_orders: chunk.iter().map(|r| r.0 as f64).sum::<f64>() / seeds as f64,
        };
        summary.push_str(&format!("{n},{},{},{},{}\n", row.median_sup_error, row.q05, row.q95, row.mean_orders));
        out.convergence.push(row);
    }
    out.file("sup_errors.csv", runs_csv);
    out.file("summary.csv", summary);
    out.file("fluid.csv", fluid.s.to_csv_string());
    let sizes: Vec<f64> = out.convergence.iter().map(|r| r.n_agents as f64).collect();
    let medians: Vec<f64> = out.convergence.iter().map(|r| r.median_sup_error).collect();
    let fit = convergence_slope(&sizes, &medians)?;
    out.manifest.convergence_slope = Some(fit.slope);
    out.manifest.convergence_slope_stderr = Some(fit.slope_stderr);
    out.manifest.event_count = Some(events);
    out.manifest.time_scale = Some(1.0);
    out.manifest.alpha = spec.tail_index();
    Ok(out)
}

fn run_fracvol(config: &ExperimentConfig, mut out: Outcome) -> Result<Outcome> {
    let s = config.fracvol.as_ref().expect("validated");
    let paths = members(config.ensemble_size, |k| {
        let p = simulate_fractional_vol(&s.rate_plus, &s.rate_minus, s.time_scale, s.hurst, s.n_steps, s.horizon, &mut member_rng(config.seed, 0, k))?;
        Ok(p.price)
    })?;
    for (k, p) in paths.into_iter().enumerate() {
        out.file(run_file("price", k), p.to_csv_string());
        out.paths.push(p);
    }
    out.manifest.hurst = Some(s.hurst);
    out.manifest.time_scale = Some(s.time_scale);
    out.add_summary()?;
    Ok(out)
}

fn run_randcoeff(config: &ExperimentConfig, mut out: Outcome) -> Result<Outcome> {
    let s = config.randcoeff.as_ref().expect("validated");
    let paths = members(config.ensemble_size, |k| {
        let v = simulate_random_coeff(s.n_steps, &s.law, s.s0, &mut member_rng(config.seed, 0, k))?;
        Ok(GridSeries::new(1.0, v, SeriesRole::Price)?)
    })?;
    for (k, p) in paths.into_iter().enumerate() {
        out.file(run_file("price", k), p.to_csv_string());
        out.paths.push(p);
    }
    out.add_summary()?;
    Ok(out)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Clears the outputs of an earlier run in `dir`, so that it ends up with
/// exactly one manifest and no stale member files.
fn clear_previous(dir: &Path) -> Result<()> {
    if !dir.join(MANIFEST_FILE).exists() {
        return Ok(());
    }
    let runs = dir.join("runs");
    if runs.exists() {
        fs::remove_dir_all(&runs).map_err(|source| CliError::Write { path: runs, source })?;
    }
    Ok(())
}

/// Validates, runs and writes one experiment.
pub fn run(config: &ExperimentConfig, options: &RunOptions) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = options.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Pool(e.to_string()))?;
    let manifest = Manifest::new(config.kind, config.hash(), config.seed, config.ensemble_size);
    let outcome = Outcome::new(manifest);
    let mut out = pool.install(|| match config.kind {
        ExperimentKind::Fluid => run_fluid(config, outcome),
        ExperimentKind::Feedback => run_feedback(config, outcome),
        ExperimentKind::NoFeedback => run_no_feedback(config, outcome),
        ExperimentKind::Fbm => run_fbm(config, outcome),
        ExperimentKind::Fou => run_fou(config, outcome),
        ExperimentKind::Hurst => run_hurst(config, outcome),
        ExperimentKind::Convergence => run_convergence(config, outcome),
        ExperimentKind::Fracvol => run_fracvol(config, outcome),
        ExperimentKind::Randcoeff => run_randcoeff(config, outcome),
    })?;

    fs::create_dir_all(&options.out_dir).map_err(|source| CliError::Write {
        path: options.out_dir.clone(),
        source,
    })?;
    clear_previous(&options.out_dir)?;
    for (name, contents) in &out.files {
        write(&options.out_dir.join(name), contents)?;
        out.manifest.files.push(name.clone());
    }
    out.manifest.wall_time_s = start.elapsed().as_secs_f64();
    write(&options.out_dir.join(MANIFEST_FILE), &out.manifest.to_json())?;
    log::info!(
        "{} run wrote {} files to {} in {:.2}s",
        config.kind,
        out.files.len() + 1,
        options.out_dir.display(),
        out.manifest.wall_time_s
    );
    Ok(RunReport {
        manifest: out.manifest,
        out_dir: options.out_dir.clone(),
        paths: out.paths,
        estimates: out.estimates,
        convergence: out.convergence,
    })
}
