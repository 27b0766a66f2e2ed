//! Principal Floquet eigenvalues of the periodic-cell problem and the
//! generalised principal eigenvalue `kappa` of
//!
//! ```text
//! P_lambda w = w_t - a w_xx + (q - 2 lambda a) w_x - (lambda^2 a + lambda q + mu) w
//! ```
//!
//! in the space-time periodic regime, where `kappa(lambda)` is minus the
//! growth rate of the evolution `w_t = a w_xx - (q - 2 lambda a) w_x + (...) w`.

use crate::coefficients::CoefficientField;
use crate::error::{invalid, Error, Result};
use crate::parabolic::{CellGrid, DriftSign, LinearCellStepper, StateVector};
use crate::scalar::Real;

/// Fixed-point tolerance of the normalised period map.
pub const FLOQUET_TOL: f64 = 1e-8;
pub const FLOQUET_MAX_PERIODS: usize = 500;
/// Second divided differences of `k` may dip this far below zero.
pub const CONVEXITY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct FloquetResult<T> {
    /// Growth rate per unit time.
    pub k: T,
    pub time_period: T,
    pub periods: usize,
    /// Principal profile, scaled to unit maximum.
    pub profile: Vec<T>,
}

/// Time period used by the period map: the declared one, or 1 for
/// time-independent coefficients.
fn time_period(cf: &CoefficientField) -> Result<f64> {
    match cf.time_period {
        Some(p) => Ok(p),
        None if !cf.depends_on_t() => Ok(1.0),
        None => Err(Error::Unsupported(
            "Floquet eigenvalues need a declared time period for time-dependent coefficients".into(),
        )),
    }
}

/// Cell grid whose time step divides the time period.
pub fn floquet_grid<T: Real>(
    cf: &CoefficientField,
    n_x: usize,
    lambda_max: T,
    safety: T,
    max_dt: Option<T>,
) -> Result<CellGrid<T>> {
    CellGrid::auto_capped(n_x, cf, lambda_max, T::lit(time_period(cf)?), safety, max_dt)
}

/// Iterates the normalised period map from constant data until the profile
/// moves by less than [`FLOQUET_TOL`] in sup norm.
pub fn floquet_rate<T: Real>(cf: &CoefficientField, lambda: T, grid: &CellGrid<T>, sign: DriftSign) -> Result<FloquetResult<T>> {
    if !(lambda >= T::zero()) {
        return Err(invalid("lambda", "must be nonnegative"));
    }
    let tp = T::lit(time_period(cf)?);
    let steps = grid
        .steps_per(tp)
        .ok_or_else(|| invalid("dt", "the time step must divide the time period"))?;
    let mut stepper = LinearCellStepper::with_sign(*grid, cf, lambda, sign)?;
    let mut state = StateVector::constant(grid.n_x, T::one(), T::zero());
    let tol = T::lit(FLOQUET_TOL);
    let mut change = T::infinity();
    for period in 1..=FLOQUET_MAX_PERIODS {
        let prev = state.values.clone();
        stepper.advance(&mut state, steps)?;
        state.time = tp * T::from_usize_lossy(period);
        let m = state.max();
        if !(m.is_finite() && m > T::zero()) {
            return Err(Error::Overflow { time: state.time.as_f64() });
        }
        state.values.iter_mut().for_each(|v| *v /= m);
        change = prev.iter().zip(&state.values).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max);
        if change < tol {
            return Ok(FloquetResult {
                k: m.ln() / tp,
                time_period: tp,
                periods: period,
                profile: state.values,
            });
        }
    }
    Err(Error::NoConvergence {
        periods: FLOQUET_MAX_PERIODS,
        change: change.as_f64(),
    })
}

/// Principal Floquet eigenvalue `k(lambda)` of the problem solved by
/// `eta_lambda` (drift `q + 2 lambda a`).
pub fn floquet_k<T: Real>(cf: &CoefficientField, lambda: T, grid: &CellGrid<T>) -> Result<T> {
    floquet_rate(cf, lambda, grid, DriftSign::Plus).map(|r| r.k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenOptions {
    pub n_x: usize,
    pub safety: f64,
    pub max_dt: Option<f64>,
    /// Golden-section refinement of the minima of `rate / lambda` around
    /// the best grid point, down to this width; no refinement when `None`.
    pub refine_tol: Option<f64>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            n_x: 128,
            safety: 1.0,
            max_dt: None,
            refine_tol: Some(1e-4),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenCurve<T> {
    pub lambda_grid: Vec<T>,
    /// `k(lambda)`, drift `q + 2 lambda a`.
    pub k_vals: Vec<T>,
    /// `kappa(lambda)`, drift `q - 2 lambda a`.
    pub kappa_vals: Vec<T>,
    /// `-k(lambda)`: the same eigenvalue with the other drift convention.
    pub kappa_plus_vals: Vec<T>,
    /// `min_lambda k(lambda) / lambda`.
    pub c_star_floquet: T,
    pub lambda_floquet: T,
    /// `c^* = -max_lambda kappa(lambda) / lambda`.
    pub c_star_lower: T,
    /// `c^*` from `kappa_plus`.
    pub c_star_lower_plus: T,
    /// `max (kappa - (-a_min lambda^2 + sup|q| lambda - inf mu))`.
    pub phi1_excess: T,
    /// Smallest second divided difference of `k`.
    pub convexity_min: T,
}

impl<T: Real> EigenCurve<T> {
    pub fn phi1_holds(&self) -> bool {
        self.phi1_excess <= T::lit(1e-8)
    }

    pub fn convex(&self) -> bool {
        self.convexity_min >= -T::lit(CONVEXITY_TOL)
    }
}

/// Large rates get a finer grid so that the cell Peclet number stays at
/// most one.
fn rate_at<T: Real>(cf: &CoefficientField, lambda: T, opts: &EigenOptions, sign: DriftSign) -> Result<T> {
    let mut grid = floquet_grid(cf, opts.n_x, lambda, T::lit(opts.safety), opts.max_dt.map(T::lit))?;
    let pe = grid.peclet(cf, lambda);
    if pe > T::one() {
        let n_x = (T::from_usize_lossy(opts.n_x) * pe).ceil().to_usize().unwrap_or(usize::MAX);
        grid = floquet_grid(cf, n_x, lambda, T::lit(opts.safety), opts.max_dt.map(T::lit))?;
    }
    floquet_rate(cf, lambda, &grid, sign).map(|r| r.k)
}

/// Golden-section minimisation of `rate(lambda) / lambda` on `[a, b]`.
fn golden_min<T: Real>(mut a: T, mut b: T, tol: T, f: &dyn Fn(T) -> Result<T>) -> Result<(T, T)> {
    let r = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Minimum of `rates[i] / lambda[i]` over the grid, refined when interior.
fn min_speed<T: Real>(lambdas: &[T], rates: &[T], opts: &EigenOptions, f: &dyn Fn(T) -> Result<T>) -> Result<(T, T)> {
    let (i, best) = lambdas
        .iter()
        .zip(rates)
        .map(|(l, r)| *r / *l)
        .enumerate()
        .fold((0, T::infinity()), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    match opts.refine_tol {
        Some(tol) if i > 0 && i + 1 < lambdas.len() => {
            let (l, v) = golden_min(lambdas[i - 1], lambdas[i + 1], T::lit(tol), f)?;
            Ok(if v < best { (l, v) } else { (lambdas[i], best) })
        }
        _ => Ok((lambdas[i], best)),
    }
}

/// Floquet and generalised principal eigenvalues on a grid of positive
/// rates, with `c_* = min k / lambda` and `c^* = -max kappa / lambda`.
pub fn kappa_curve<T: Real>(cf: &CoefficientField, lambda_grid: &[T], opts: &EigenOptions) -> Result<EigenCurve<T>> {
    if lambda_grid.len() < 3 || lambda_grid[0] <= T::zero() || lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("lambda_grid", "need at least three positive increasing rates"));
    }
    let plus = |l: T| rate_at(cf, l, opts, DriftSign::Plus);
    let minus = |l: T| rate_at(cf, l, opts, DriftSign::Minus);
    let k_vals = lambda_grid.iter().map(|&l| plus(l)).collect::<Result<Vec<T>>>()?;
    let minus_rates = lambda_grid.iter().map(|&l| minus(l)).collect::<Result<Vec<T>>>()?;
    let (lambda_floquet, c_star_floquet) = min_speed(lambda_grid, &k_vals, opts, &|l| Ok(plus(l)? / l))?;
    let (_, c_star_lower) = min_speed(lambda_grid, &minus_rates, opts, &|l| Ok(minus(l)? / l))?;
    let b = &cf.bounds;
    let phi1_excess = lambda_grid
        .iter()
        .zip(&minus_rates)
        .map(|(&l, &r)| {
            let bound = -T::lit(b.alpha_lower) * l * l + T::lit(b.q_sup) * l - T::lit(b.mu_inf);
            -r - bound
        })
        .fold(T::neg_infinity(), T::max);
    let convexity_min = (0..lambda_grid.len() - 2)
        .map(|i| {
            let (l0, l1, l2) = (lambda_grid[i], lambda_grid[i + 1], lambda_grid[i + 2]);
            let s0 = (k_vals[i + 1] - k_vals[i]) / (l1 - l0);
            let s1 = (k_vals[i + 2] - k_vals[i + 1]) / (l2 - l1);
            T::lit(2.0) * (s1 - s0) / (l2 - l0)
        })
        .fold(T::infinity(), T::min);
    Ok(EigenCurve {
        lambda_grid: lambda_grid.to_vec(),
        kappa_plus_vals: k_vals.iter().map(|k| -*k).collect(),
        k_vals,
        kappa_vals: minus_rates.iter().map(|r| -*r).collect(),
        c_star_floquet,
        lambda_floquet,
        c_star_lower,
        c_star_lower_plus: c_star_floquet,
        phi1_excess,
        convexity_min,
    })
}
