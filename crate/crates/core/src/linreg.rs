//! Change-point experiment on a no-intercept linear regression.
//!
//! A series `Y_t = beta * t + noise` switches slope at `t_change`. Fitting
//! `Y = beta * X` on shrinking windows ending at `t2` and comparing `chi2`,
//! `chi2_np` and `chi2_lambda` shows which metric recovers the change point.

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{argmin_first, fmt_cell, LambdaMode, TimeIndex};
use crate::scan::{
    build_grid, derive_seed, endogenise_t1, ModelFitter, ScanGrid, Window, WindowFit,
};
use crate::series::PriceSeries;

/// Piecewise-linear generator. Samples with `t < t_change` use the `pre`
/// slope and noise level, samples with `t >= t_change` the `post` ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangePointConfig {
    pub t_start: TimeIndex,
    pub t_change: TimeIndex,
    pub t_end: TimeIndex,
    pub beta_pre: f64,
    pub beta_post: f64,
    pub noise_sd_pre: f64,
    pub noise_sd_post: f64,
    /// End point of the scan; the appendix-style variant leaves the last
    /// sample out of every window.
    pub t2: TimeIndex,
    /// Shortest scanned window, in points.
    pub min_window: usize,
}

impl Default for ChangePointConfig {
    fn default() -> Self {
        Self::paper_text()
    }
}

impl ChangePointConfig {
    /// Slope 0.3 on `[-200, -100)`, 0.6 on `[-100, 1]`, unit Gaussian noise,
    /// windows `[t1, 1]` down to four points.
    pub fn paper_text() -> Self {
        Self {
            t_start: -200,
            t_change: -100,
            t_end: 1,
            beta_pre: 0.3,
            beta_post: 0.6,
            noise_sd_pre: 1.0,
            noise_sd_post: 1.0,
            t2: 1,
            min_window: 4,
        }
    }

    /// The reference script's generator: `X = 0..199`, `Y = 0.5 X + e` with
    /// `e ~ N(0, 10)`, then `Y += 4 e` on the first 100 samples and `Y *= 8`
    /// on the last 100. Windows are `X[i:-1]`, ten points at the shortest.
    pub fn appendix() -> Self {
        Self {
            t_start: 0,
            t_change: 100,
            t_end: 199,
            beta_pre: 0.5,
            beta_post: 4.0,
            noise_sd_pre: 50.0,
            noise_sd_post: 80.0,
            t2: 198,
            min_window: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start < self.t_change && self.t_change < self.t_end) {
            return Err(Error::InvalidConfig(format!(
                "need t_start < t_change < t_end, got {} / {} / {}",
                self.t_start, self.t_change, self.t_end
            )));
        }
        if !(self.noise_sd_pre >= 0.0 && self.noise_sd_post >= 0.0) {
            return Err(Error::InvalidConfig(
                "noise levels must be nonnegative".into(),
            ));
        }
        if self.t2 < self.t_start || self.t2 > self.t_end {
            return Err(Error::InvalidConfig(
                "t2 outside the generated range".into(),
            ));
        }
        Ok(())
    }

    /// The scan used by the experiment: every `t1` from `t_start` up to the
    /// shortest window.
    pub fn default_grid(&self) -> Result<ScanGrid> {
        build_grid(
            self.t2,
            (self.t2 - self.t_start + 1) as usize,
            self.min_window,
            1,
        )
    }

    pub fn mean_path(&self, t: TimeIndex) -> f64 {
        let beta = if t < self.t_change {
            self.beta_pre
        } else {
            self.beta_post
        };
        beta * t as f64
    }
}

/// Draw one realisation on `[t_start, t_end]`.
///
/// The noise stream is ChaCha8 seeded with `seed` (`seed_from_u64`), mapped
/// to standard normals by `rand_distr::StandardNormal`, one draw per sample
/// in time order.
pub fn simulate_change_point(config: &ChangePointConfig, seed: u64) -> Result<PriceSeries> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (config.t_start..=config.t_end)
        .map(|t| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let sd = if t < config.t_change {
                config.noise_sd_pre
            } else {
                config.noise_sd_post
            };
            config.mean_path(t) + sd * z
        })
        .collect();
    PriceSeries::from_values(config.t_start, values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub beta: f64,
    pub residuals: Vec<f64>,
}

/// Least-squares slope of `y = beta * x` (no intercept).
pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidConfig(format!(
            "{} x values for {} y values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: x.len(),
        });
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::Singular("sum of squared regressors is zero"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let beta = sxy / sxx;
    let residuals = x.iter().zip(y).map(|(a, b)| b - beta * a).collect();
    Ok(OlsFit { beta, residuals })
}

/// `Y = beta * t` on each window; one degree of freedom.
#[derive(Debug, Clone, Copy, Default)]
pub struct OlsFitter;

impl ModelFitter for OlsFitter {
    type Params = f64;

    fn dof(&self) -> usize {
        1
    }

    fn fit(&self, window: &Window<'_>, _seed: u64) -> Result<WindowFit<f64>> {
        let fit = ols_fit(window.times, window.values)?;
        Ok(WindowFit {
            params: fit.beta,
            residuals: fit.residuals,
            accepted: true,
        })
    }
}

/// Per-`t1` mean and 5%/95% quantiles of one metric across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBands {
    pub mean: Vec<f64>,
    pub q05: Vec<f64>,
    pub q95: Vec<f64>,
}

impl MetricBands {
    fn from_columns(columns: &[Vec<f64>]) -> Self {
        let mut bands = MetricBands {
            mean: Vec::with_capacity(columns.len()),
            q05: Vec::with_capacity(columns.len()),
            q95: Vec::with_capacity(columns.len()),
        };
        for col in columns {
            let mut sorted = col.clone();
            sorted.sort_by(f64::total_cmp);
            bands.mean.push(col.iter().sum::<f64>() / col.len() as f64);
            bands.q05.push(quantile_sorted(&sorted, 0.05));
            bands.q95.push(quantile_sorted(&sorted, 0.95));
        }
        bands
    }

    /// Position of the minimum of the mean curve (earliest on ties).
    pub fn argmin_of_mean(&self) -> Option<usize> {
        argmin_first(self.mean.iter().copied()).map(|(i, _)| i)
    }
}

/// Linear-interpolation quantile (the `(n - 1) q` rule) of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Where each run's minimum fell, per metric.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArgminHistograms {
    pub chi2: BTreeMap<TimeIndex, usize>,
    pub chi2_np: BTreeMap<TimeIndex, usize>,
    pub chi2_lambda: BTreeMap<TimeIndex, usize>,
}

/// Monte Carlo aggregate over independent realisations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub n_runs: usize,
    pub t2: TimeIndex,
    pub t1: Vec<TimeIndex>,
    pub window_len: Vec<usize>,
    pub chi2: MetricBands,
    pub chi2_np: MetricBands,
    pub chi2_lambda: MetricBands,
    pub argmin: ArgminHistograms,
    pub lambda_mean: f64,
    pub lambda_q05: f64,
    pub lambda_q95: f64,
}

/// Sidecar document: everything but the per-`t1` bands.
#[derive(Debug, Clone, Serialize)]
pub struct McSidecar<'a> {
    pub n_runs: usize,
    pub t2: TimeIndex,
    pub lambda_mean: f64,
    pub lambda_q05: f64,
    pub lambda_q95: f64,
    pub argmin: &'a ArgminHistograms,
}

struct RunResult {
    chi2: Vec<f64>,
    chi2_np: Vec<f64>,
    chi2_lambda: Vec<f64>,
    lambda: f64,
    argmin_chi2: TimeIndex,
    argmin_chi2_np: TimeIndex,
    tau: TimeIndex,
}

/// Run `n_runs` independent realisations and aggregate their scan curves.
///
/// Run `i` uses seed `derive_seed(base_seed, i)`. Aggregation happens on the
/// full collected matrix, so the result is independent of scheduling.
pub fn monte_carlo_bench(
    config: &ChangePointConfig,
    n_runs: usize,
    grid: &ScanGrid,
    base_seed: u64,
    mode: LambdaMode,
) -> Result<McSummary> {
    if n_runs == 0 {
        return Err(Error::InvalidConfig("at least one run is required".into()));
    }
    config.validate()?;
    let runs: Vec<RunResult> = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let series = simulate_change_point(config, derive_seed(base_seed, i as i64))?;
            let out = endogenise_t1(&series, grid, &OlsFitter, mode, 0)?;
            let entries = out.curve.curve.entries();
            let chi2: Vec<f64> = entries.iter().map(|e| e.cost.chi2).collect();
            let chi2_np: Vec<f64> = entries.iter().map(|e| e.cost.chi2_np).collect();
            let pick = |v: &[f64]| argmin_first(v.iter().copied()).map(|(k, _)| entries[k].t1);
            Ok(RunResult {
                argmin_chi2: pick(&chi2).ok_or(Error::NonFinite("chi2 curve"))?,
                argmin_chi2_np: pick(&chi2_np).ok_or(Error::NonFinite("chi2_np curve"))?,
                tau: out.tau,
                lambda: out.lambda.lambda,
                chi2,
                chi2_np,
                chi2_lambda: out.curve.chi2_lambda,
            })
        })
        .collect::<Result<_>>()?;

    let n_t1 = grid.len();
    let columns = |get: fn(&RunResult) -> &Vec<f64>| -> Vec<Vec<f64>> {
        (0..n_t1)
            .map(|j| runs.iter().map(|r| get(r)[j]).collect())
            .collect()
    };
    let mut argmin = ArgminHistograms::default();
    for r in &runs {
        *argmin.chi2.entry(r.argmin_chi2).or_default() += 1;
        *argmin.chi2_np.entry(r.argmin_chi2_np).or_default() += 1;
        *argmin.chi2_lambda.entry(r.tau).or_default() += 1;
    }
    let mut lambdas: Vec<f64> = runs.iter().map(|r| r.lambda).collect();
    let lambda_mean = lambdas.iter().sum::<f64>() / n_runs as f64;
    lambdas.sort_by(f64::total_cmp);

    Ok(McSummary {
        n_runs,
        t2: grid.t2(),
        t1: grid.t1_values().to_vec(),
        window_len: grid
            .t1_values()
            .iter()
            .map(|&t1| (grid.t2() - t1 + 1) as usize)
            .collect(),
        chi2: MetricBands::from_columns(&columns(|r| &r.chi2)),
        chi2_np: MetricBands::from_columns(&columns(|r| &r.chi2_np)),
        chi2_lambda: MetricBands::from_columns(&columns(|r| &r.chi2_lambda)),
        argmin,
        lambda_mean,
        lambda_q05: quantile_sorted(&lambdas, 0.05),
        lambda_q95: quantile_sorted(&lambdas, 0.95),
    })
}

pub const MC_CSV_HEADER: [&str; 11] = [
    "t1",
    "window_len",
    "chi2_mean",
    "chi2_q05",
    "chi2_q95",
    "chi2_np_mean",
    "chi2_np_q05",
    "chi2_np_q95",
    "chi2_lambda_mean",
    "chi2_lambda_q05",
    "chi2_lambda_q95",
];

impl McSummary {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(MC_CSV_HEADER)?;
        for j in 0..self.t1.len() {
            let mut row = vec![self.t1[j].to_string(), self.window_len[j].to_string()];
            for b in [&self.chi2, &self.chi2_np, &self.chi2_lambda] {
                row.extend([fmt_cell(b.mean[j]), fmt_cell(b.q05[j]), fmt_cell(b.q95[j])]);
            }
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn sidecar(&self) -> McSidecar<'_> {
        McSidecar {
            n_runs: self.n_runs,
            t2: self.t2,
            lambda_mean: self.lambda_mean,
            lambda_q05: self.lambda_q05,
            lambda_q95: self.lambda_q95,
            argmin: &self.argmin,
        }
    }

    /// `t1` at the minimum of a mean curve.
    pub fn mean_argmin(&self, bands: &MetricBands) -> Option<TimeIndex> {
        bands.argmin_of_mean().map(|k| self.t1[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let fit = ols_fit(&x, &y).unwrap();
        assert_eq!(fit.beta, 2.0);
        assert_eq!(crate::metrics::chi2(&fit.residuals).unwrap(), 0.0);

        let fit = ols_fit(&[1.0, 2.0], &[1.0, 1.0]).unwrap();
        assert!((fit.beta - 0.6).abs() < 1e-15);
    }

    #[test]
    fn ols_errors() {
        assert!(matches!(
            ols_fit(&[0.0, 0.0], &[1.0, 2.0]),
            Err(Error::Singular(_))
        ));
        assert!(ols_fit(&[1.0], &[1.0]).is_err());
        assert!(ols_fit(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn noiseless_generator_breaks_at_t_change() {
        let cfg = ChangePointConfig {
            noise_sd_pre: 0.0,
            noise_sd_post: 0.0,
            ..ChangePointConfig::paper_text()
        };
        let s = simulate_change_point(&cfg, 1).unwrap();
        assert_eq!(s.first_index(), -200);
        assert_eq!(s.last_index(), 1);
        assert_eq!(s.value_at(-101), Some(0.3 * -101.0));
        assert_eq!(s.value_at(-100), Some(0.6 * -100.0));
        assert_eq!(s.value_at(1), Some(0.6));
    }

    #[test]
    fn generator_is_seed_deterministic() {
        let cfg = ChangePointConfig::paper_text();
        let a = simulate_change_point(&cfg, 99).unwrap();
        let b = simulate_change_point(&cfg, 99).unwrap();
        let c = simulate_change_point(&cfg, 100).unwrap();
        assert_eq!(a.values(), b.values());
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn config_validation() {
        let bad = ChangePointConfig {
            t_change: -300,
            ..ChangePointConfig::paper_text()
        };
        assert!(bad.validate().is_err());
        assert!(simulate_change_point(&bad, 0).is_err());
    }

    #[test]
    fn grids_match_the_experiments() {
        let g = ChangePointConfig::paper_text().default_grid().unwrap();
        assert_eq!(
            (g.t1_values()[0], *g.t1_values().last().unwrap(), g.len()),
            (-200, -2, 199)
        );
        let g = ChangePointConfig::appendix().default_grid().unwrap();
        assert_eq!(
            (g.t1_values()[0], *g.t1_values().last().unwrap(), g.len()),
            (0, 189, 190)
        );
    }

    #[test]
    fn quantile_matches_linear_rule() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert!((quantile_sorted(&v, 0.05) - 1.2).abs() < 1e-15);
        assert!((quantile_sorted(&v, 0.95) - 4.8).abs() < 1e-15);
    }

    #[test]
    fn single_noiseless_run_finds_the_change_point() {
        let cfg = ChangePointConfig {
            noise_sd_pre: 0.0,
            noise_sd_post: 0.0,
            ..ChangePointConfig::paper_text()
        };
        let grid = cfg.default_grid().unwrap();
        let s = monte_carlo_bench(&cfg, 1, &grid, 3, LambdaMode::Intercept).unwrap();
        assert_eq!(
            s.argmin.chi2_lambda.keys().copied().collect::<Vec<_>>(),
            vec![-100]
        );
        assert_eq!(s.mean_argmin(&s.chi2_lambda), Some(-100));
    }

    #[test]
    fn summary_csv_and_sidecar() {
        let cfg = ChangePointConfig::paper_text();
        let grid = cfg.default_grid().unwrap();
        let s = monte_carlo_bench(&cfg, 20, &grid, 5, LambdaMode::Intercept).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), MC_CSV_HEADER.join(","));
        assert_eq!(text.lines().count(), 1 + 199);
        let json = serde_json::to_value(s.sidecar()).unwrap();
        let total: u64 = json["argmin"]["chi2_lambda"]
            .as_object()
            .unwrap()
            .values()
            .map(|v| v.as_u64().unwrap())
            .sum();
        assert_eq!(total, 20);
        for b in [&s.chi2, &s.chi2_np, &s.chi2_lambda] {
            for j in 0..s.t1.len() {
                assert!(b.q05[j] <= b.mean[j] && b.mean[j] <= b.q95[j]);
            }
        }
    }
}
