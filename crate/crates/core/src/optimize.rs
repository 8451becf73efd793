//! Box-constrained Nelder–Mead.
//!
//! The search runs in coordinates normalised to the unit cube; trial points
//! falling outside the box are projected back onto it. Non-finite objective
//! values count as `+inf`.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop when `f_worst - f_best <= ftol * |f_best|` over the simplex.
    pub ftol: f64,
    /// Stop when the simplex spans less than this in every normalised axis.
    pub xtol: f64,
    /// Edge length of the initial simplex in normalised coordinates.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            ftol: 1e-9,
            xtol: 1e-10,
            initial_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Bounds<'a> {
    lo: &'a [f64],
    hi: &'a [f64],
}

impl Bounds<'_> {
    fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(self.hi))
            .map(|(&v, (&l, &h))| ((v - l) / (h - l)).clamp(0.0, 1.0))
            .collect()
    }

    fn unscale(&self, u: &[f64], out: &mut [f64]) {
        for (o, (&v, (&l, &h))) in out
            .iter_mut()
            .zip(u.iter().zip(self.lo.iter().zip(self.hi)))
        {
            *o = l + v.clamp(0.0, 1.0) * (h - l);
        }
    }
}

/// Minimise `f` over the box `[lower, upper]` starting from `x0`.
///
/// # Panics
/// If the slices differ in length or some `lower[i] >= upper[i]`.
pub fn nelder_mead_bounded<F>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let d = x0.len();
    assert!(d > 0 && lower.len() == d && upper.len() == d);
    assert!(
        lower.iter().zip(upper).all(|(l, h)| l < h),
        "empty search box"
    );
    let bounds = Bounds {
        lo: lower,
        hi: upper,
    };
    let mut xbuf = vec![0.0; d];
    let mut evaluations = 0usize;
    let mut eval = |u: &[f64], evaluations: &mut usize| {
        bounds.unscale(u, &mut xbuf);
        *evaluations += 1;
        let v = f(&xbuf);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let start = bounds.to_unit(x0);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let f0 = eval(&start, &mut evaluations);
    simplex.push((start.clone(), f0));
    for i in 0..d {
        let mut v = start.clone();
        v[i] = if v[i] + opts.initial_step <= 1.0 {
            v[i] + opts.initial_step
        } else {
            v[i] - opts.initial_step
        };
        let fv = eval(&v, &mut evaluations);
        simplex.push((v, fv));
    }

    let project = |u: &mut Vec<f64>| u.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let fb = simplex[0].1;
        let fw = simplex[d].1;
        let spread = (0..d)
            .map(|k| {
                simplex
                    .iter()
                    .map(|(u, _)| (u[k] - simplex[0].0[k]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if (fb.is_finite() && fw - fb <= opts.ftol * fb.abs()) || spread <= opts.xtol {
            converged = fb.is_finite();
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; d];
        for (u, _) in &simplex[..d] {
            for (c, v) in centroid.iter_mut().zip(u) {
                *c += v / d as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[d].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let mut xr = along(1.0);
        project(&mut xr);
        let fr = eval(&xr, &mut evaluations);
        if fr < simplex[0].1 {
            let mut xe = along(2.0);
            project(&mut xe);
            let fe = eval(&xe, &mut evaluations);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        let (mut xc, outside) = if fr < simplex[d].1 {
            (along(0.5), true)
        } else {
            (along(-0.5), false)
        };
        project(&mut xc);
        let fc = eval(&xc, &mut evaluations);
        if (outside && fc <= fr) || (!outside && fc < simplex[d].1) {
            simplex[d] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for (u, fu) in simplex.iter_mut().skip(1) {
            for (v, b) in u.iter_mut().zip(&best) {
                *v = b + 0.5 * (*v - b);
            }
            *fu = eval(u, &mut evaluations);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut x = vec![0.0; d];
    bounds.unscale(&simplex[0].0, &mut x);
    Minimum {
        x,
        f: simplex[0].1,
        iterations,
        evaluations,
        converged,
    }
}
