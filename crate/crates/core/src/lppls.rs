//! Log-periodic power law singularity (LPPLS) model and its calibration.
//!
//! The expected log-price is
//!
//! ```text
//! A + B f + C1 g + C2 h,   f = (tc - t)^m,
//!                          g = f cos(omega ln(tc - t)),
//!                          h = f sin(omega ln(tc - t)).
//! ```
//!
//! For fixed nonlinear parameters `(tc, m, omega)` the linear parameters
//! `(A, B, C1, C2)` have a closed-form least-squares solution, so calibration
//! only searches the three-dimensional nonlinear space.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{CostTriple, LambdaMode, TimeIndex};
use crate::optimize::{nelder_mead_bounded, NelderMeadOptions};
use crate::scan::{endogenise_t1, Endogenised, ModelFitter, ScanGrid, Window, WindowFit};
use crate::series::PriceSeries;

/// Degrees of freedom charged to an LPPLS window: seven model parameters
/// plus the window start.
pub const LPPLS_DOF: usize = 8;

/// Shortest window `fit_nonlinear` accepts.
pub const MIN_FIT_WINDOW: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpplsParams {
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
    pub m: f64,
    pub omega: f64,
    /// Critical time, on the same index axis as the observations.
    pub tc: f64,
}

impl LpplsParams {
    /// Fit of the bubble that ended with the October 1987 crash, with days
    /// counted from the start of 1981.
    pub fn black_monday() -> Self {
        Self {
            a: 1.8259,
            b: -0.0094,
            c1: -0.0001,
            c2: 0.0005,
            m: 0.44,
            omega: 6.5,
            tc: 1194.0,
        }
    }

    pub fn from_parts(linear: LinearParams, tc: f64, m: f64, omega: f64) -> Self {
        Self {
            a: linear.a,
            b: linear.b,
            c1: linear.c1,
            c2: linear.c2,
            m,
            omega,
            tc,
        }
    }

    pub fn linear(&self) -> LinearParams {
        LinearParams {
            a: self.a,
            b: self.b,
            c1: self.c1,
            c2: self.c2,
        }
    }

    /// The same curve with the critical time moved by `shift` index units.
    pub fn shifted(mut self, shift: f64) -> Self {
        self.tc += shift;
        self
    }
}

/// `A + B f + C1 g + C2 h` at time `t`; requires `t < tc`.
pub fn lppls_eval(params: &LpplsParams, t: f64) -> Result<f64> {
    let dt = params.tc - t;
    if !(dt > 0.0) {
        return Err(Error::Domain(format!(
            "t = {t} is not before the critical time {}",
            params.tc
        )));
    }
    let ln_dt = dt.ln();
    let f = (params.m * ln_dt).exp();
    let (s, c) = (params.omega * ln_dt).sin_cos();
    Ok(params.a + f * (params.b + params.c1 * c + params.c2 * s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
}

impl LinearParams {
    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c1, self.c2]
    }
}

/// Basis values `(f, g, h)` at each time.
fn fill_basis(times: &[f64], tc: f64, m: f64, omega: f64, out: &mut Vec<[f64; 3]>) -> bool {
    out.clear();
    for &t in times {
        let dt = tc - t;
        if !(dt > 0.0) {
            return false;
        }
        let ln_dt = dt.ln();
        let f = (m * ln_dt).exp();
        let (s, c) = (omega * ln_dt).sin_cos();
        out.push([f, f * c, f * s]);
    }
    true
}

/// The 4x4 normal equations `M [A, B, C1, C2]' = r` of the linear subproblem.
pub fn normal_equations(
    times: &[f64],
    y: &[f64],
    tc: f64,
    m: f64,
    omega: f64,
) -> Result<([[f64; 4]; 4], [f64; 4])> {
    let mut basis = Vec::with_capacity(times.len());
    if times.len() != y.len() || !fill_basis(times, tc, m, omega, &mut basis) {
        return Err(Error::Domain("invalid window for the LPPLS basis".into()));
    }
    let mut mat = [[0.0; 4]; 4];
    let mut rhs = [0.0; 4];
    for (b, &yi) in basis.iter().zip(y) {
        let row = [1.0, b[0], b[1], b[2]];
        for i in 0..4 {
            rhs[i] += row[i] * yi;
            for j in 0..4 {
                mat[i][j] += row[i] * row[j];
            }
        }
    }
    Ok((mat, rhs))
}

/// Reusable state for repeated linear solves on one window.
struct LinearSubproblem<'a> {
    times: &'a [f64],
    y: &'a [f64],
    y_mean: f64,
    basis: Vec<[f64; 3]>,
}

/// Condition number above which the Cholesky route hands over to QR.
const COND_LIMIT: f64 = 1e10;

impl<'a> LinearSubproblem<'a> {
    fn new(times: &'a [f64], y: &'a [f64]) -> Result<Self> {
        if times.len() != y.len() {
            return Err(Error::InvalidConfig(
                "times and values differ in length".into(),
            ));
        }
        if times.len() < 5 {
            return Err(Error::InsufficientData {
                needed: 5,
                got: times.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("window values"));
        }
        Ok(Self {
            times,
            y,
            y_mean: y.iter().sum::<f64>() / y.len() as f64,
            basis: Vec::with_capacity(times.len()),
        })
    }

    /// Exact least-squares `(A, B, C1, C2)` and the residual sum of squares.
    ///
    /// The intercept is eliminated by centring; the remaining 3x3 system is
    /// equilibrated and solved by Cholesky, or by QR on the centred design
    /// matrix when it is ill-conditioned.
    fn solve(&mut self, tc: f64, m: f64, omega: f64) -> Result<(LinearParams, f64)> {
        let degenerate = || Error::DegenerateBasis { tc, m, omega };
        if !(tc.is_finite() && m.is_finite() && omega.is_finite()) {
            return Err(degenerate());
        }
        if !fill_basis(self.times, tc, m, omega, &mut self.basis) {
            return Err(Error::Domain(format!(
                "critical time {tc} inside the window"
            )));
        }
        let n = self.basis.len() as f64;
        let mut mean = [0.0; 3];
        for b in &self.basis {
            for k in 0..3 {
                mean[k] += b[k];
            }
        }
        mean.iter_mut().for_each(|v| *v /= n);

        let mut gram = [[0.0; 3]; 3];
        let mut rhs = [0.0; 3];
        for (b, &yi) in self.basis.iter().zip(self.y) {
            let c = [b[0] - mean[0], b[1] - mean[1], b[2] - mean[2]];
            let yc = yi - self.y_mean;
            for i in 0..3 {
                rhs[i] += c[i] * yc;
                for j in i..3 {
                    gram[i][j] += c[i] * c[j];
                }
            }
        }
        let scale: [f64; 3] = std::array::from_fn(|i| gram[i][i].sqrt());
        if scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(degenerate());
        }
        let mut a = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                a[i][j] = gram[i][j] / (scale[i] * scale[j]);
                a[j][i] = a[i][j];
            }
        }
        let rs: [f64; 3] = std::array::from_fn(|i| rhs[i] / scale[i]);

        let z = match cholesky3(&a) {
            Some((l, cond)) if cond <= COND_LIMIT => chol_solve3(&l, &rs),
            _ => self.qr_solve(&mean, &scale).ok_or_else(degenerate)?,
        };
        let (b, c1, c2) = (z[0] / scale[0], z[1] / scale[1], z[2] / scale[2]);
        let a0 = self.y_mean - b * mean[0] - c1 * mean[1] - c2 * mean[2];
        let linear = LinearParams { a: a0, b, c1, c2 };
        let mut rss = 0.0;
        for (bv, &yi) in self.basis.iter().zip(self.y) {
            let r = yi - a0 - b * bv[0] - c1 * bv[1] - c2 * bv[2];
            rss += r * r;
        }
        if !rss.is_finite() {
            return Err(degenerate());
        }
        Ok((linear, rss))
    }

    fn qr_solve(&self, mean: &[f64; 3], scale: &[f64; 3]) -> Option<[f64; 3]> {
        let n = self.basis.len();
        let design = DMatrix::from_fn(n, 3, |i, k| (self.basis[i][k] - mean[k]) / scale[k]);
        let target = DVector::from_iterator(n, self.y.iter().map(|v| v - self.y_mean));
        let qr = design.qr();
        let r = qr.r();
        let rmax = (0..3).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
        if (0..3).any(|k| r[(k, k)].abs() <= 1e-13 * rmax) {
            return None;
        }
        let qty = qr.q().transpose() * target;
        let sol = r.solve_upper_triangular(&qty)?;
        Some([sol[0], sol[1], sol[2]])
    }
}

/// Cholesky factor of a symmetric positive definite 3x3 matrix with an
/// estimate of its 2-norm condition number.
fn cholesky3(a: &[[f64; 3]; 3]) -> Option<([[f64; 3]; 3], f64)> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let (lo, hi) = (0..3).fold((f64::INFINITY, 0.0_f64), |(lo, hi), k| {
        (lo.min(l[k][k]), hi.max(l[k][k]))
    });
    Some((l, (hi / lo).powi(2)))
}

fn chol_solve3(l: &[[f64; 3]; 3], b: &[f64; 3]) -> [f64; 3] {
    let mut z = [0.0; 3];
    for i in 0..3 {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * z[k];
        }
        z[i] = s / l[i][i];
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut s = z[i];
        for k in i + 1..3 {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Least-squares linear parameters at fixed `(tc, m, omega)`.
pub fn solve_linear_params(
    times: &[f64],
    y: &[f64],
    tc: f64,
    m: f64,
    omega: f64,
) -> Result<LinearParams> {
    LinearSubproblem::new(times, y)?
        .solve(tc, m, omega)
        .map(|(p, _)| p)
}

/// The enslaved cost: residual sum of squares after solving for the linear
/// parameters.
pub fn enslaved_cost(times: &[f64], y: &[f64], tc: f64, m: f64, omega: f64) -> Result<f64> {
    LinearSubproblem::new(times, y)?
        .solve(tc, m, omega)
        .map(|(_, rss)| rss)
}

/// Acceptance region for calibrated parameters. All bounds are strict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterBounds {
    pub m_lo: f64,
    pub m_hi: f64,
    pub omega_lo: f64,
    pub omega_hi: f64,
    /// `tc` must lie within `t2 -/+ tc_multiplier * (t2 - t1)`.
    pub tc_multiplier: f64,
}

impl Default for FilterBounds {
    fn default() -> Self {
        Self {
            m_lo: 0.1,
            m_hi: 0.9,
            omega_lo: 6.0,
            omega_hi: 13.0,
            tc_multiplier: 1.0,
        }
    }
}

impl FilterBounds {
    pub fn validate(&self) -> Result<()> {
        if self.m_lo < self.m_hi && self.omega_lo < self.omega_hi && self.tc_multiplier > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "inconsistent filter bounds {self:?}"
            )))
        }
    }
}

/// Whether a calibration on `[t1, t2]` qualifies.
pub fn apply_filters(
    params: &LpplsParams,
    t1: TimeIndex,
    t2: TimeIndex,
    bounds: &FilterBounds,
) -> bool {
    let dt = bounds.tc_multiplier * (t2 - t1) as f64;
    let t2 = t2 as f64;
    bounds.m_lo < params.m
        && params.m < bounds.m_hi
        && bounds.omega_lo < params.omega
        && params.omega < bounds.omega_hi
        && t2 - dt < params.tc
        && params.tc < t2 + dt
}

/// Box searched by the optimizer, relative to the window `[t1, t2]`.
///
/// Wider than the filters so that fits wanting to leave the qualifying
/// region can do so and be rejected. `tc` stays beyond `t2` because the
/// power law is undefined past the singularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub m: (f64, f64),
    pub omega: (f64, f64),
    /// Smallest `tc - t2`.
    pub tc_min_gap: f64,
    /// Largest `tc - t2` as a multiple of `t2 - t1`.
    pub tc_max_multiple: f64,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self {
            m: (0.01, 1.0),
            omega: (2.0, 25.0),
            tc_min_gap: 1.0,
            tc_max_multiple: 2.0,
        }
    }
}

impl SearchBox {
    fn limits(&self, t1: f64, t2: f64) -> ([f64; 3], [f64; 3]) {
        let dt = t2 - t1;
        let tc_lo = t2 + self.tc_min_gap;
        let tc_hi = (t2 + self.tc_max_multiple * dt).max(tc_lo + 1.0);
        (
            [tc_lo, self.m.0, self.omega.0],
            [tc_hi, self.m.1, self.omega.1],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Starting points drawn from the deterministic grid (36 points); any
    /// excess is drawn uniformly in the search box from the fit seed.
    pub n_starts: usize,
    /// Number of best-scoring starting points refined by local search.
    pub n_refine: usize,
    pub max_iter: usize,
    pub ftol: f64,
    pub search: SearchBox,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n_starts: 36,
            n_refine: 3,
            max_iter: 1000,
            ftol: 1e-9,
            search: SearchBox::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerStatus {
    Converged,
    MaxIter,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpplsFit {
    pub t1: TimeIndex,
    pub t2: TimeIndex,
    pub params: LpplsParams,
    pub cost: CostTriple,
    pub filter_pass: bool,
    pub status: OptimizerStatus,
}

/// The grid of starting points for a window `[t1, t2]`.
pub fn start_grid(t1: f64, t2: f64) -> Vec<[f64; 3]> {
    let dt = t2 - t1;
    let mut out = Vec::with_capacity(36);
    for tc in [t2 + 5.0, t2 + 0.25 * dt, t2 + 0.5 * dt] {
        for m in [0.2, 0.4, 0.6, 0.8] {
            for omega in [7.0, 9.0, 11.0] {
                out.push([tc, m, omega]);
            }
        }
    }
    out
}

/// Calibrate the LPPLS model on one window.
///
/// Every starting point is scored by the enslaved cost; the `n_refine` best
/// are polished by bounded Nelder–Mead over `(tc, m, omega)`, and the lowest
/// cost wins. Deterministic for a given seed and options.
pub fn fit_nonlinear(
    window: &Window<'_>,
    bounds: &FilterBounds,
    options: &FitOptions,
    seed: u64,
) -> Result<LpplsFit> {
    if window.len() < MIN_FIT_WINDOW {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_WINDOW,
            got: window.len(),
        });
    }
    let (t1, t2) = (window.t1, window.t2);
    let mut sub = LinearSubproblem::new(window.times, window.values)?;
    let (lo, hi) = options.search.limits(t1 as f64, t2 as f64);

    let mut starts: Vec<[f64; 3]> = start_grid(t1 as f64, t2 as f64)
        .into_iter()
        .take(options.n_starts)
        .map(|s| std::array::from_fn(|k| s[k].clamp(lo[k], hi[k])))
        .collect();
    if options.n_starts > starts.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while starts.len() < options.n_starts {
            starts.push(std::array::from_fn(|k| rng.random_range(lo[k]..hi[k])));
        }
    }

    let mut cost = |x: &[f64]| {
        sub.solve(x[0], x[1], x[2])
            .map_or(f64::INFINITY, |(_, rss)| rss)
    };
    let mut scored: Vec<([f64; 3], f64)> = starts.iter().map(|s| (*s, cost(s))).collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1));

    let nm = NelderMeadOptions {
        max_iter: options.max_iter,
        ftol: options.ftol,
        ..Default::default()
    };
    let mut best: Option<([f64; 3], f64, bool)> = None;
    for (x0, f0) in scored.iter().take(options.n_refine.max(1)) {
        if !f0.is_finite() {
            continue;
        }
        let run = nelder_mead_bounded(&mut cost, x0, &lo, &hi, &nm);
        if best.as_ref().is_none_or(|b| run.f < b.1) {
            best = Some(([run.x[0], run.x[1], run.x[2]], run.f, run.converged));
        }
    }

    let n = window.len();
    let Some((x, _, converged)) = best else {
        return Ok(LpplsFit {
            t1,
            t2,
            params: LpplsParams {
                a: f64::NAN,
                b: f64::NAN,
                c1: f64::NAN,
                c2: f64::NAN,
                m: f64::NAN,
                omega: f64::NAN,
                tc: f64::NAN,
            },
            cost: CostTriple::failed(n, LPPLS_DOF),
            filter_pass: false,
            status: OptimizerStatus::Degenerate,
        });
    };
    let (linear, _) = sub.solve(x[0], x[1], x[2])?;
    let params = LpplsParams::from_parts(linear, x[0], x[1], x[2]);
    let residuals = residuals(&params, window.times, window.values)?;
    Ok(LpplsFit {
        t1,
        t2,
        params,
        cost: CostTriple::from_residuals(&residuals, LPPLS_DOF)?,
        filter_pass: apply_filters(&params, t1, t2, bounds),
        status: if converged {
            OptimizerStatus::Converged
        } else {
            OptimizerStatus::MaxIter
        },
    })
}

pub fn residuals(params: &LpplsParams, times: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    times
        .iter()
        .zip(y)
        .map(|(&t, &v)| lppls_eval(params, t).map(|m| v - m))
        .collect()
}

/// Window fitter for scans; a window qualifies when its fit passes the
/// filters.
#[derive(Debug, Clone, Copy, Default)]
pub struct LpplsFitter {
    pub bounds: FilterBounds,
    pub options: FitOptions,
}

impl ModelFitter for LpplsFitter {
    type Params = LpplsFit;

    fn dof(&self) -> usize {
        LPPLS_DOF
    }

    fn fit(&self, window: &Window<'_>, seed: u64) -> Result<WindowFit<LpplsFit>> {
        let fit = fit_nonlinear(window, &self.bounds, &self.options, seed)?;
        if fit.status == OptimizerStatus::Degenerate {
            return Err(Error::DegenerateBasis {
                tc: fit.params.tc,
                m: fit.params.m,
                omega: fit.params.omega,
            });
        }
        Ok(WindowFit {
            residuals: residuals(&fit.params, window.times, window.values)?,
            accepted: fit.filter_pass,
            params: fit,
        })
    }
}

/// Select the bubble start for pseudo-present `t2`.
///
/// Windows reaching before the first observation are dropped. Entries whose
/// fits fail the filters are kept in the curve but take no part in the drift
/// estimate or the minimisation.
pub fn bubble_scan(
    series: &PriceSeries,
    grid: &ScanGrid,
    fitter: &LpplsFitter,
    mode: LambdaMode,
    seed: u64,
) -> Result<Endogenised<LpplsFit>> {
    fitter.bounds.validate()?;
    if !series.contains(grid.t2()) {
        return Err(Error::SeriesTooShort {
            need_lo: grid.t2(),
            need_hi: grid.t2(),
            have_lo: series.first_index(),
            have_hi: series.last_index(),
        });
    }
    let grid = grid.clipped_to(series.first_index());
    endogenise_t1(series, &grid, fitter, mode, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn times(lo: i64, hi: i64) -> Vec<f64> {
        (lo..=hi).map(|t| t as f64).collect()
    }

    #[test]
    fn eval_degenerate_line() {
        let p = LpplsParams {
            a: 2.0,
            b: -0.5,
            c1: 0.0,
            c2: 0.0,
            m: 1.0,
            omega: 7.0,
            tc: 100.0,
        };
        for t in [0.0, 10.0, 99.0] {
            let expect = 2.0 - 0.5 * (100.0 - t);
            assert!((lppls_eval(&p, t).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn eval_approaches_a_at_tc() {
        let p = LpplsParams::black_monday();
        let v = lppls_eval(&p, p.tc - 1e-9).unwrap();
        assert!((v - p.a).abs() < 1e-5);
        assert!(matches!(lppls_eval(&p, p.tc), Err(Error::Domain(_))));
        assert!(lppls_eval(&p, p.tc + 1.0).is_err());
    }

    #[test]
    fn constant_series_gives_pure_intercept() {
        let t = times(0, 199);
        let y = vec![3.25; t.len()];
        let lp = solve_linear_params(&t, &y, 260.0, 0.5, 8.0).unwrap();
        assert!((lp.a - 3.25).abs() < 1e-8);
        assert!(
            lp.b.abs() < 1e-8 && lp.c1.abs() < 1e-8 && lp.c2.abs() < 1e-8,
            "{lp:?}"
        );
    }

    #[test]
    fn solve_errors() {
        let t = times(0, 99);
        let y = vec![1.0; 100];
        assert!(solve_linear_params(&t, &y, 50.0, 0.5, 8.0).is_err());
        assert!(solve_linear_params(&t[..3], &y[..3], 150.0, 0.5, 8.0).is_err());
        // m = 0 makes f constant and collinear with the intercept
        assert!(matches!(
            solve_linear_params(&t, &y, 150.0, 0.0, 8.0),
            Err(Error::DegenerateBasis { .. })
        ));
    }

    #[test]
    fn filters() {
        let b = FilterBounds::default();
        let p = LpplsParams::black_monday();
        assert!(apply_filters(&p, 100, 1100, &b));
        assert!(!apply_filters(&LpplsParams { m: 0.95, ..p }, 100, 1100, &b));
        assert!(!apply_filters(
            &LpplsParams { omega: 6.0, ..p },
            100,
            1100,
            &b
        ));
        assert!(!apply_filters(
            &LpplsParams { omega: 13.0, ..p },
            100,
            1100,
            &b
        ));
        assert!(!apply_filters(&LpplsParams { m: 0.1, ..p }, 100, 1100, &b));
        // tc band is (t2 - 1000, t2 + 1000) for this window
        assert!(!apply_filters(
            &LpplsParams { tc: 2100.0, ..p },
            100,
            1100,
            &b
        ));
        assert!(apply_filters(
            &LpplsParams { tc: 2099.0, ..p },
            100,
            1100,
            &b
        ));
    }

    #[test]
    fn start_grid_layout() {
        let g = start_grid(0.0, 400.0);
        assert_eq!(g.len(), 36);
        assert_eq!(g[0], [405.0, 0.2, 7.0]);
        assert_eq!(g[35], [600.0, 0.8, 11.0]);
    }

    #[test]
    fn fit_rejects_short_windows() {
        let t = times(0, 19);
        let y = vec![0.0; 20];
        let w = Window {
            t1: 0,
            t2: 19,
            times: &t,
            values: &y,
        };
        assert!(fit_nonlinear(&w, &FilterBounds::default(), &FitOptions::default(), 0).is_err());
    }

    #[test]
    fn fit_is_deterministic() {
        let p = LpplsParams::black_monday();
        let t = times(600, 1100);
        let y: Vec<f64> = t
            .iter()
            .map(|&x| lppls_eval(&p, x).unwrap() + 0.001 * (x * 0.7).sin())
            .collect();
        let w = Window {
            t1: 600,
            t2: 1100,
            times: &t,
            values: &y,
        };
        let opts = FitOptions {
            n_starts: 40,
            ..Default::default()
        };
        let a = fit_nonlinear(&w, &FilterBounds::default(), &opts, 11).unwrap();
        let b = fit_nonlinear(&w, &FilterBounds::default(), &opts, 11).unwrap();
        assert_eq!(a, b);
    }
}
