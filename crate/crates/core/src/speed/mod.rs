//! Speed curve `lambda -> lm(c_lambda)`, the critical decay rate
//! `lambda_*`, the critical speed `c_* = lm(c_{lambda_*})`, Floquet and
//! generalised principal eigenvalues, and closed-form oracles.
//!
//! Membership of `lambda` in the decreasing range is decided from
//! `D(lambda, k) = lm(c_lambda - c_{lambda + k})` at the probe offsets
//! `k0, k0/2, k0/4`.

mod floquet;
mod oracle;

pub use floquet::{
    floquet_grid, floquet_k, floquet_rate, kappa_curve, EigenCurve, EigenOptions, FloquetResult, FLOQUET_MAX_PERIODS,
    FLOQUET_TOL,
};
pub use oracle::{oracle, Oracle};

use rayon::prelude::*;

use crate::coefficients::CoefficientField;
use crate::error::{invalid, Error, Result};
use crate::eta::{compute_eta, EtaOptions, EtaSolution, DEFAULT_BURN_IN};
use crate::means::{least_mean, upper_mean, MeanEstimate, SampledFunction};
use crate::parabolic::{CellGrid, DriftSign};
use crate::scalar::Real;

pub const DEFAULT_K0: f64 = 0.05;
pub const DEFAULT_DELTA_TOL: f64 = 1e-3;
pub const DEFAULT_REFINE_TOL: f64 = 1e-3;
pub const DEFAULT_GRID_POINTS: usize = 24;
/// Tolerance of the curve invariants (envelopes).
pub const ENVELOPE_TOL: f64 = 1e-2;
/// Tolerance of the monotonicity invariant below `lambda_*`.
pub const MONOTONE_TOL: f64 = 1e-3;

/// Numerical settings shared by the per-rate runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedOptions {
    pub n_x: usize,
    pub horizon: usize,
    pub burn_in: usize,
    /// Largest averaging window; half the horizon when `None`.
    pub t_max: Option<f64>,
    pub k0: f64,
    pub delta_tol: f64,
    pub refine_tol: f64,
    /// Fraction of the positivity bound used as time step.
    pub safety: f64,
    /// Upper limit on the time step, applied after `safety`.
    pub max_dt: Option<f64>,
}

impl Default for SpeedOptions {
    fn default() -> Self {
        SpeedOptions {
            n_x: 128,
            horizon: 200,
            burn_in: DEFAULT_BURN_IN,
            t_max: None,
            k0: DEFAULT_K0,
            delta_tol: DEFAULT_DELTA_TOL,
            refine_tol: DEFAULT_REFINE_TOL,
            safety: 1.0,
            max_dt: None,
        }
    }
}

impl SpeedOptions {
    pub fn t_max(&self) -> f64 {
        self.t_max.unwrap_or(self.horizon as f64 / 2.0)
    }

    fn eta_options(&self) -> EtaOptions {
        EtaOptions {
            horizon: self.horizon,
            burn_in: self.burn_in,
            ..EtaOptions::default()
        }
    }

    /// Cell grid for rates up to `lambda_max`, stepping unit times exactly.
    pub fn grid<T: Real>(&self, cf: &CoefficientField, lambda_max: T) -> Result<CellGrid<T>> {
        CellGrid::auto_capped(
            self.n_x,
            cf,
            lambda_max,
            T::one(),
            T::lit(self.safety),
            self.max_dt.map(T::lit),
        )
    }

    pub fn probes(&self) -> [f64; 3] {
        [self.k0, self.k0 / 2.0, self.k0 / 4.0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedCurve<T> {
    pub lambda_grid: Vec<T>,
    /// `lm(c_lambda)`; NaN where the run failed.
    pub lm_c: Vec<T>,
    pub um_c: Vec<T>,
    /// `D(lambda, k)` for `k = k0, k0/2, k0/4`.
    pub d: Vec<[T; 3]>,
    pub probes: [T; 3],
    pub lambda_star: Option<T>,
    pub c_star: Option<T>,
    /// `(grid index, message)` of failed rates.
    pub failures: Vec<(usize, String)>,
    pub warnings: Vec<String>,
}

/// Outcome of the per-rate computation at `lambda` and its probes.
#[derive(Debug, Clone)]
struct RateSample<T> {
    lm: T,
    um: T,
    d: Vec<T>,
    lm_warning: Option<String>,
    warnings: Vec<String>,
}

fn speed_samples<T: Real>(es: &EtaSolution<T>) -> Result<SampledFunction<T>> {
    SampledFunction::cell_averages(T::one(), es.c_samples.clone())
}

/// Runs `lambda` and `lambda + k` for each offset on one shared grid.
fn rate_sample<T: Real>(cf: &CoefficientField, lambda: T, offsets: &[T], opts: &SpeedOptions) -> Result<RateSample<T>> {
    let k_max = offsets.iter().copied().fold(T::zero(), T::max);
    let grid = opts.grid(cf, lambda + k_max)?;
    let eo = opts.eta_options();
    let t_max = T::lit(opts.t_max());
    let base = compute_eta(cf, lambda, &grid, &eo)?;
    let c = speed_samples(&base)?;
    let lm = least_mean(&c, t_max)?;
    let um = upper_mean(&c, t_max)?;
    let mut warnings: Vec<String> = [lm.warning.clone(), um.warning.clone()]
        .into_iter()
        .flatten()
        .map(|w| format!("lambda = {lambda}: {w}"))
        .collect();
    let mut d = Vec::with_capacity(offsets.len());
    for &k in offsets {
        let probe = compute_eta(cf, lambda + k, &grid, &eo)?;
        let diff: Vec<T> = base.c_samples.iter().zip(&probe.c_samples).map(|(a, b)| *a - *b).collect();
        let est = least_mean(&SampledFunction::cell_averages(T::one(), diff)?, t_max)?;
        if let Some(w) = est.warning {
            warnings.push(format!("lambda = {lambda}, k = {k}: {w}"));
        }
        d.push(est.value);
    }
    Ok(RateSample {
        lm: lm.value,
        um: um.value,
        d,
        lm_warning: lm.warning,
        warnings,
    })
}

/// Geometric grid of `points` rates on `[0.1 l, 10 l]` with
/// `l = sqrt(lm(min_x mu) / a_min)`.
pub fn default_lambda_grid(cf: &CoefficientField, points: usize, opts: &SpeedOptions) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(invalid("points", "need at least two grid points"));
    }
    let means = MuMeans::compute(cf, opts.horizon, opts.t_max())?;
    let base = if means.lm_min > 0.0 {
        means.lm_min
    } else {
        cf.bounds.mu_sup.max(1e-3)
    };
    let hat = (base / cf.bounds.alpha_lower).sqrt();
    let (lo, hi) = ((0.1 * hat).ln(), (10.0 * hat).ln());
    Ok((0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect())
}

/// Least and upper means of `t -> min_x mu` and `t -> max_x mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuMeans {
    pub lm_min: f64,
    pub um_min: f64,
    pub lm_max: f64,
    pub um_max: f64,
}

impl MuMeans {
    /// Means over `[0, horizon]` of the unit-interval averages, with the
    /// same windows as the speed samples.
    pub fn compute(cf: &CoefficientField, horizon: usize, t_max: f64) -> Result<Self> {
        if !cf.depends_on_t() {
            let (lo, hi) = (cf.mu_min_at(0.0), cf.mu_max_at(0.0));
            return Ok(MuMeans {
                lm_min: lo,
                um_min: lo,
                lm_max: hi,
                um_max: hi,
            });
        }
        let averages = |g: &dyn Fn(f64) -> f64| {
            let v = (0..horizon)
                .map(|n| cf.integrate_in_time(g, n as f64, n as f64 + 1.0, 32))
                .collect();
            SampledFunction::cell_averages(1.0, v)
        };
        let lo = averages(&|t| cf.mu_min_at(t))?;
        let hi = averages(&|t| cf.mu_max_at(t))?;
        Ok(MuMeans {
            lm_min: least_mean(&lo, t_max)?.value,
            um_min: upper_mean(&lo, t_max)?.value,
            lm_max: least_mean(&hi, t_max)?.value,
            um_max: upper_mean(&hi, t_max)?.value,
        })
    }

    /// Envelope of `lm(c_lambda)`.
    pub fn lm_bounds(&self, cf: &CoefficientField, lambda: f64) -> (f64, f64) {
        let b = &cf.bounds;
        (
            b.alpha_lower * lambda - b.q_sup + self.lm_min / lambda,
            b.alpha_upper * lambda + b.q_sup + self.lm_max / lambda,
        )
    }

    /// Envelope of `um(c_lambda)`.
    pub fn um_bounds(&self, cf: &CoefficientField, lambda: f64) -> (f64, f64) {
        let b = &cf.bounds;
        (
            b.alpha_lower * lambda - b.q_sup + self.um_min / lambda,
            b.alpha_upper * lambda + b.q_sup + self.um_max / lambda,
        )
    }
}

/// Computes `lm(c_lambda)`, `um(c_lambda)` and the indicators `D` on a grid
/// of rates, in parallel. Failed rates are recorded and skipped.
pub fn speed_curve<T: Real>(cf: &CoefficientField, lambda_grid: &[T], opts: &SpeedOptions) -> Result<SpeedCurve<T>> {
    if lambda_grid.is_empty() {
        return Err(invalid("lambda_grid", "empty"));
    }
    if lambda_grid[0] <= T::zero() || lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("lambda_grid", "must be positive and increasing"));
    }
    let probes = opts.probes().map(T::lit);
    let results: Vec<Result<RateSample<T>>> = lambda_grid
        .par_iter()
        .map(|&lambda| rate_sample(cf, lambda, &probes, opts))
        .collect();
    let nan = T::nan();
    let mut sc = SpeedCurve {
        lambda_grid: lambda_grid.to_vec(),
        lm_c: Vec::with_capacity(lambda_grid.len()),
        um_c: Vec::with_capacity(lambda_grid.len()),
        d: Vec::with_capacity(lambda_grid.len()),
        probes,
        lambda_star: None,
        c_star: None,
        failures: Vec::new(),
        warnings: Vec::new(),
    };
    let mut first_error = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => {
                sc.lm_c.push(s.lm);
                sc.um_c.push(s.um);
                sc.d.push([s.d[0], s.d[1], s.d[2]]);
                sc.warnings.extend(s.warnings);
            }
            Err(e) => {
                sc.lm_c.push(nan);
                sc.um_c.push(nan);
                sc.d.push([nan; 3]);
                sc.failures.push((i, e.to_string()));
                first_error.get_or_insert(e);
            }
        }
    }
    match first_error {
        Some(e) if sc.failures.len() == lambda_grid.len() => Err(e),
        _ => Ok(sc),
    }
}

/// Extrapolated `-d lm(c)/d lambda` from the two smallest offsets:
/// `Q(k) = D(lambda, k) / k` is affine in `k` to leading order.
fn slope_indicator<T: Real>(d_half: T, d_quarter: T, k0: T) -> T {
    let q_half = d_half / (k0 * T::lit(0.5));
    let q_quarter = d_quarter / (k0 * T::lit(0.25));
    T::lit(2.0) * q_quarter - q_half
}

/// Result of the bisection for `lambda_*`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaStar<T> {
    pub lambda_star: T,
    pub c_star: T,
    /// Final bracket.
    pub bracket: (T, T),
    pub bisection_steps: usize,
    /// Convergence warning of the least mean behind `c_star`.
    pub c_star_warning: Option<String>,
    pub warnings: Vec<String>,
}

/// Locates `lambda_*` between the last grid rate where all three `D` are
/// positive and the first where all three are negative, then bisects on
/// `2 Q(k0/4) - Q(k0/2) > delta_tol` down to `refine_tol`. `c_*` is
/// recomputed at the midpoint of the final bracket.
pub fn find_lambda_star<T: Real>(sc: &SpeedCurve<T>, cf: &CoefficientField, opts: &SpeedOptions) -> Result<LambdaStar<T>> {
    let all = |d: &[T; 3], pos: bool| d.iter().all(|v| if pos { *v > T::zero() } else { *v < T::zero() });
    let first = sc.lambda_grid[0].as_f64();
    let last = sc.lambda_grid[sc.lambda_grid.len() - 1].as_f64();
    let no_change = Error::NoSignChange { lo: first, hi: last };
    let pos_seen = |upto: usize| (0..upto).rev().find(|&i| all(&sc.d[i], true));
    let hi = (0..sc.d.len())
        .find(|&i| all(&sc.d[i], false) && pos_seen(i).is_some())
        .ok_or(no_change.clone())?;
    let lo = pos_seen(hi).ok_or(no_change)?;
    let k0 = T::lit(opts.k0);
    let offsets = [k0 * T::lit(0.5), k0 * T::lit(0.25)];
    let delta = T::lit(opts.delta_tol);
    let (mut a, mut b) = (sc.lambda_grid[lo], sc.lambda_grid[hi]);
    let mut warnings = Vec::new();
    let mut steps = 0;
    while (b - a).as_f64() > opts.refine_tol {
        let m = (a + b) * T::lit(0.5);
        let s = rate_sample(cf, m, &offsets, opts)?;
        warnings.extend(s.warnings);
        if slope_indicator(s.d[0], s.d[1], k0) > delta {
            a = m;
        } else {
            b = m;
        }
        steps += 1;
    }
    let lambda_star = (a + b) * T::lit(0.5);
    let s = rate_sample(cf, lambda_star, &[], opts)?;
    warnings.extend(s.warnings);
    Ok(LambdaStar {
        lambda_star,
        c_star: s.lm,
        bracket: (a, b),
        bisection_steps: steps,
        c_star_warning: s.lm_warning,
        warnings,
    })
}

/// Speed curve on the default grid followed by [`find_lambda_star`]; the
/// curve carries `lambda_*`, `c_*` and all warnings.
pub fn analyse_speeds(cf: &CoefficientField, opts: &SpeedOptions) -> Result<(SpeedCurve<f64>, LambdaStar<f64>)> {
    let grid = default_lambda_grid(cf, DEFAULT_GRID_POINTS, opts)?;
    let mut sc = speed_curve(cf, &grid, opts)?;
    let star = find_lambda_star(&sc, cf, opts)?;
    sc.lambda_star = Some(star.lambda_star);
    sc.c_star = Some(star.c_star);
    sc.warnings.extend(star.warnings.iter().cloned());
    Ok((sc, star))
}

/// `lm(c_lambda)` at a single rate, with its convergence warning.
pub fn least_mean_speed<T: Real>(cf: &CoefficientField, lambda: T, opts: &SpeedOptions) -> Result<MeanEstimate<T>> {
    let es = eta_for_rate(cf, lambda, opts, DriftSign::Plus)?;
    least_mean(&speed_samples(&es)?, T::lit(opts.t_max()))
}

/// Invariants of a speed curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveReport {
    /// `max (lm_c - um_c)`; nonpositive when ordered.
    pub order_excess: f64,
    /// Largest distance outside the `lm` envelope.
    pub lm_envelope_excess: f64,
    pub um_envelope_excess: f64,
    /// Largest increase of `lm_c` between consecutive grid rates below
    /// `lambda_*`.
    pub monotone_excess: f64,
    /// Largest `|Delta (lambda lm_c)| / Delta lambda` divided by
    /// `K (Lambda^2 + 1)`, `K = a_max + sup|q| + sup|mu|`, `Lambda` the
    /// larger rate of the pair.
    pub lipschitz_ratio: f64,
}

impl CurveReport {
    pub fn holds(&self) -> bool {
        self.order_excess <= 0.0
            && self.lm_envelope_excess <= ENVELOPE_TOL
            && self.um_envelope_excess <= ENVELOPE_TOL
            && self.monotone_excess <= MONOTONE_TOL
            && self.lipschitz_ratio <= 1.0
    }
}

impl<T: Real> SpeedCurve<T> {
    fn valid(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.lambda_grid.len()).filter(|&i| self.lm_c[i].is_finite())
    }

    /// Checks ordering, envelopes, monotonicity below `lambda_*` and the
    /// Lipschitz bound of `lambda lm(c_lambda)`.
    pub fn check_invariants(&self, cf: &CoefficientField, opts: &SpeedOptions) -> Result<CurveReport> {
        let means = MuMeans::compute(cf, opts.horizon, opts.t_max())?;
        let mut rep = CurveReport {
            order_excess: f64::NEG_INFINITY,
            lm_envelope_excess: f64::NEG_INFINITY,
            um_envelope_excess: f64::NEG_INFINITY,
            monotone_excess: f64::NEG_INFINITY,
            lipschitz_ratio: 0.0,
        };
        let b = &cf.bounds;
        let k_lip = b.alpha_upper + b.q_sup + b.mu_sup.abs().max(b.mu_inf.abs());
        let idx: Vec<usize> = self.valid().collect();
        for &i in &idx {
            let (l, lm, um) = (self.lambda_grid[i].as_f64(), self.lm_c[i].as_f64(), self.um_c[i].as_f64());
            rep.order_excess = rep.order_excess.max(lm - um);
            let (lo, hi) = means.lm_bounds(cf, l);
            rep.lm_envelope_excess = rep.lm_envelope_excess.max(lo - lm).max(lm - hi);
            let (lo, hi) = means.um_bounds(cf, l);
            rep.um_envelope_excess = rep.um_envelope_excess.max(lo - um).max(um - hi);
        }
        for w in idx.windows(2) {
            let (i, j) = (w[0], w[1]);
            let (li, lj) = (self.lambda_grid[i].as_f64(), self.lambda_grid[j].as_f64());
            let (ci, cj) = (self.lm_c[i].as_f64(), self.lm_c[j].as_f64());
            if self.lambda_star.is_some_and(|s| lj < s.as_f64()) {
                rep.monotone_excess = rep.monotone_excess.max(cj - ci);
            }
            let quotient = ((lj * cj - li * ci) / (lj - li)).abs();
            rep.lipschitz_ratio = rep.lipschitz_ratio.max(quotient / (k_lip * (lj * lj + 1.0)));
        }
        Ok(rep)
    }
}

/// Re-runs `compute_eta` at one rate with the options of a speed analysis.
pub fn eta_for_rate<T: Real>(cf: &CoefficientField, lambda: T, opts: &SpeedOptions, drift: DriftSign) -> Result<EtaSolution<T>> {
    let grid = opts.grid(cf, lambda)?;
    let eo = EtaOptions {
        drift,
        ..opts.eta_options()
    };
    compute_eta(cf, lambda, &grid, &eo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{make_builtin, Family, Params};

    fn small() -> SpeedOptions {
        SpeedOptions {
            n_x: 32,
            horizon: 60,
            ..SpeedOptions::default()
        }
    }

    #[test]
    fn homogeneous_curve_matches_lambda_plus_inverse() {
        let (cf, _) = make_builtin(Family::Homogeneous, &Params::new()).unwrap();
        let sc = speed_curve::<f64>(&cf, &[0.5, 1.0, 2.0], &small()).unwrap();
        for (l, c) in sc.lambda_grid.iter().zip(&sc.lm_c) {
            assert!((c - (l + 1.0 / l)).abs() < 1e-3, "{l}: {c}");
        }
        assert!(sc.d[0].iter().all(|d| *d > 0.0));
        assert!(sc.d[2].iter().all(|d| *d < 0.0));
        // D(lambda, k) = k (1 / (lambda (lambda + k)) - 1)
        for (i, &l) in sc.lambda_grid.iter().enumerate() {
            for (j, &k) in sc.probes.iter().enumerate() {
                let exact = k * (1.0 / (l * (l + k)) - 1.0);
                assert!((sc.d[i][j] - exact).abs() < 1e-5);
            }
        }
        assert!(sc.failures.is_empty());
    }

    #[test]
    fn slope_indicator_removes_first_order_bias() {
        // D(k) = k (1/(l (l + k)) - 1) at l = 1: the extrapolation is
        // O(k^2) from -c'(1) = 0 while D(k0/4)/(k0/4) alone is O(k).
        let d = |k: f64| k * (1.0 / (1.0 + k) - 1.0);
        let k0 = 0.05;
        let q0 = slope_indicator(d(k0 / 2.0), d(k0 / 4.0), k0);
        assert!(q0.abs() < 4e-4, "{q0}");
        assert!((d(k0 / 4.0) / (k0 / 4.0)).abs() > 1e-2);
    }

    #[test]
    fn lambda_star_homogeneous_small_grid() {
        let (cf, _) = make_builtin(Family::Homogeneous, &Params::new()).unwrap();
        let opts = SpeedOptions {
            refine_tol: 0.01,
            ..small()
        };
        let sc = speed_curve::<f64>(&cf, &[0.5, 0.8, 1.3, 2.0], &opts).unwrap();
        let star = find_lambda_star(&sc, &cf, &opts).unwrap();
        assert!((star.lambda_star - 1.0).abs() < 0.02, "{}", star.lambda_star);
        assert!((star.c_star - 2.0).abs() < 0.02);
        let rep = sc.check_invariants(&cf, &opts).unwrap();
        assert!(rep.holds(), "{rep:?}");
    }

    #[test]
    fn no_sign_change_is_reported() {
        let (cf, _) = make_builtin(Family::Homogeneous, &Params::new()).unwrap();
        let sc = speed_curve::<f64>(&cf, &[0.3, 0.5], &small()).unwrap();
        assert!(matches!(find_lambda_star(&sc, &cf, &small()), Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn default_grid_spans_two_decades() {
        let (cf, _) = make_builtin(Family::Homogeneous, &Params::new()).unwrap();
        let g = default_lambda_grid(&cf, 24, &SpeedOptions::default()).unwrap();
        assert_eq!(g.len(), 24);
        assert!((g[0] - 0.1).abs() < 1e-12 && (g[23] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_unordered_grid() {
        let (cf, _) = make_builtin(Family::Homogeneous, &Params::new()).unwrap();
        assert!(speed_curve::<f64>(&cf, &[1.0, 0.5], &small()).is_err());
        assert!(speed_curve::<f64>(&cf, &[], &small()).is_err());
    }
}
