//! Nonlinear front simulations: front position `X_theta(t)` (rightmost
//! crossing of the level `theta`), instantaneous and fitted speeds, profile
//! widths, and checks of the limits behind and ahead of the front.

use crate::coefficients::{CoefficientField, ReactionTerm};
use crate::error::{invalid, Error, Result};
use crate::means::{least_mean, MeanEstimate, SampledFunction};
use crate::parabolic::{LineGrid, NonlinearLineStepper, StateVector};
use crate::scalar::Real;

/// Offsets behind and ahead of the front at which the limits are measured.
pub const WAVE_OFFSETS: [f64; 4] = [2.0, 5.0, 10.0, 20.0];
/// Cells between the front and the right boundary below which a run is
/// considered contaminated by the boundary.
pub const BOUNDARY_CELLS: usize = 10;
/// Tolerance of [`measured_speed_analysis`] against `c^*`.
pub const NONEXISTENCE_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    /// `1` up to the origin, `0` beyond.
    Step,
    /// `min(1, exp(-lambda0 x))`.
    Exponential(f64),
    /// `u = 0` with zero boundary values.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontOptions {
    pub theta: f64,
    pub t_sim: f64,
    pub dx: f64,
    /// Spacing of the recorded trace; also the `Delta` of the
    /// instantaneous speed.
    pub record_dt: f64,
    /// `(x_min, x_max)`; chosen from the coefficient bounds when `None`.
    pub domain: Option<(f64, f64)>,
    /// Keep the profile at every `snapshot_every`-th record.
    pub snapshot_every: Option<usize>,
}

impl Default for FrontOptions {
    fn default() -> Self {
        FrontOptions {
            theta: 0.5,
            t_sim: 100.0,
            dx: 0.1,
            record_dt: 1.0,
            domain: None,
            snapshot_every: Some(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontTrace<T> {
    pub times: Vec<T>,
    /// `None` where no crossing of `theta` exists.
    pub x_theta: Vec<Option<T>>,
    /// `(X(t + Delta) - X(t)) / Delta` on each record interval.
    pub inst_speed: Vec<T>,
    /// Least-squares slope of `X` over the last half of the run.
    pub fitted_speed: Option<T>,
    pub theta: T,
    /// Distance between the rightmost crossings of 0.9 and 0.1.
    pub profile_width: Vec<Option<T>>,
    pub no_front: bool,
    /// End of the discarded initial quarter.
    pub burn_in_time: T,
    pub grid: LineGrid<T>,
    /// `(time, profile)` snapshots.
    pub snapshots: Vec<(T, Vec<T>)>,
    pub clip_total: T,
}

impl<T: Real> FrontTrace<T> {
    /// Largest decrease of `X` between consecutive records after the
    /// burn-in, in units of `dx`; at most 1 for a monotone front.
    pub fn monotone_defect(&self) -> T {
        let mut worst = T::zero();
        let mut prev: Option<T> = None;
        for (t, x) in self.times.iter().zip(&self.x_theta) {
            if *t < self.burn_in_time {
                continue;
            }
            if let (Some(p), Some(x)) = (prev, x) {
                worst = worst.max((p - *x) / self.grid.dx);
            }
            prev = *x;
        }
        worst
    }

    /// Instantaneous speeds whose interval starts after the burn-in.
    pub fn post_burn_in_speeds(&self) -> Vec<T> {
        self.times
            .iter()
            .zip(&self.inst_speed)
            .filter(|(t, _)| **t >= self.burn_in_time)
            .map(|(_, s)| *s)
            .collect()
    }
}

/// Rightmost `j + s` (fractional index) where `u` crosses `level` going
/// down, linearly interpolated.
fn rightmost_crossing<T: Real>(u: &[T], level: T) -> Option<T> {
    let j = u.iter().rposition(|v| *v >= level)?;
    if j + 1 >= u.len() {
        return None;
    }
    let (a, b) = (u[j], u[j + 1]);
    let s = if a > b { (a - level) / (a - b) } else { T::zero() };
    Some(T::from_usize_lossy(j) + s)
}

fn position<T: Real>(grid: &LineGrid<T>, u: &[T], level: T) -> Option<T> {
    rightmost_crossing(u, level).map(|r| grid.x_min + grid.dx * r)
}

/// Ordinary least-squares `(slope, intercept)`.
pub fn ols_slope<T: Real>(xs: &[T], ys: &[T]) -> Option<(T, T)> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let nf = T::from_usize_lossy(n);
    let mx = xs[..n].iter().copied().sum::<T>() / nf;
    let my = ys[..n].iter().copied().sum::<T>() / nf;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (x, y) in xs.iter().zip(ys) {
        sxy += (*x - mx) * (*y - my);
        sxx += (*x - mx) * (*x - mx);
    }
    if sxx <= T::zero() {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Default domain: twenty diffusion lengths behind the origin, and ahead
/// room for the fastest admissible front plus the reach of the initial tail.
fn default_domain(cf: &CoefficientField, init: InitialData, t_sim: f64) -> (f64, f64) {
    let b = &cf.bounds;
    let margin = 20.0 * b.alpha_upper.sqrt() + 10.0;
    let reach = match init {
        InitialData::Exponential(l0) => b.alpha_upper * l0 + b.q_sup + b.mu_sup / l0 + 2.0 * b.alpha_upper * l0,
        _ => 2.0 * (b.alpha_upper * b.mu_sup).sqrt() + b.q_sup,
    };
    (-margin, reach * t_sim + margin)
}

fn max_speed(cf: &CoefficientField, init: InitialData) -> f64 {
    let b = &cf.bounds;
    match init {
        InitialData::Exponential(l0) => b.alpha_upper * l0 + b.q_sup + b.mu_sup / l0,
        _ => 2.0 * (b.alpha_upper * b.mu_sup).sqrt() + b.q_sup,
    }
}

fn stepper_boundary<T: Real>(init: InitialData) -> (T, T) {
    match init {
        InitialData::Zero => (T::zero(), T::zero()),
        _ => (T::one(), T::zero()),
    }
}

/// Simulates `u_t - a u_xx + q u_x = f` from front-like data.
pub fn simulate_front<T: Real>(
    cf: &CoefficientField,
    rt: &ReactionTerm,
    init: InitialData,
    opts: &FrontOptions,
) -> Result<FrontTrace<T>> {
    if !(opts.theta > 0.0 && opts.theta < 1.0) {
        return Err(invalid("theta", "must lie in (0, 1)"));
    }
    if !(opts.t_sim > 0.0 && opts.record_dt > 0.0 && opts.dx > 0.0) {
        return Err(invalid("t_sim", "t_sim, record_dt and dx must be positive"));
    }
    if let InitialData::Exponential(l0) = init {
        if !(l0 > 0.0) {
            return Err(invalid("lambda0", "must be positive"));
        }
    }
    let (x_min, x_max) = opts.domain.unwrap_or_else(|| default_domain(cf, init, opts.t_sim));
    let grid = LineGrid::with_spacing(cf, T::lit(x_min), T::lit(x_max), T::lit(opts.dx), T::lit(opts.record_dt))?;
    if !matches!(init, InitialData::Zero) {
        grid.validate_width(cf, T::lit(max_speed(cf, init)), T::lit(opts.t_sim))?;
    }
    let steps = (T::lit(opts.record_dt) / grid.dt).round().to_usize().unwrap_or(1);
    let records = (opts.t_sim / opts.record_dt).round() as usize;
    let mut stepper = NonlinearLineStepper::new(grid, cf, rt)?;
    let values: Vec<T> = (0..grid.n_x)
        .map(|j| {
            let x = grid.x(j);
            match init {
                InitialData::Step => {
                    if x <= T::zero() {
                        T::one()
                    } else {
                        T::zero()
                    }
                }
                InitialData::Exponential(l0) => (-T::lit(l0) * x).exp().min(T::one()),
                InitialData::Zero => T::zero(),
            }
        })
        .collect();
    let (left, right) = stepper_boundary(init);
    stepper.set_boundary(left, right);
    let mut state = StateVector {
        values,
        time: T::zero(),
    };
    let (left, right) = stepper_boundary(init);
    state.values[0] = left;
    *state.values.last_mut().expect("grid has nodes") = right;

    let theta = T::lit(opts.theta);
    let guard = grid.x_max - grid.dx * T::from_usize_lossy(BOUNDARY_CELLS);
    let mut times = Vec::with_capacity(records + 1);
    let mut x_theta = Vec::with_capacity(records + 1);
    let mut widths = Vec::with_capacity(records + 1);
    let mut snapshots = Vec::new();
    for r in 0..=records {
        if r > 0 {
            for _ in 0..steps {
                stepper.step(&mut state)?;
            }
            state.time = T::lit(opts.record_dt) * T::from_usize_lossy(r);
        }
        let x = position(&grid, &state.values, theta);
        if let Some(x) = x {
            if x > guard {
                return Err(Error::Contaminated {
                    time: state.time.as_f64(),
                });
            }
        }
        let w = match (
            position(&grid, &state.values, T::lit(0.1)),
            position(&grid, &state.values, T::lit(0.9)),
        ) {
            (Some(lo), Some(hi)) => Some(lo - hi),
            _ => None,
        };
        times.push(state.time);
        x_theta.push(x);
        widths.push(w);
        if opts.snapshot_every.is_some_and(|k| k > 0 && r % k == 0) {
            snapshots.push((state.time, state.values.clone()));
        }
    }
    let delta = T::lit(opts.record_dt);
    let inst_speed: Vec<T> = x_theta
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => (b - a) / delta,
            _ => T::nan(),
        })
        .collect();
    let t_end = T::lit(opts.t_sim);
    let half = t_end * T::lit(0.5);
    let (fit_t, fit_x): (Vec<T>, Vec<T>) = times
        .iter()
        .zip(&x_theta)
        .filter(|(t, _)| **t >= half)
        .filter_map(|(t, x)| x.map(|x| (*t, x)))
        .unzip();
    let no_front = x_theta.iter().all(Option::is_none);
    Ok(FrontTrace {
        times,
        x_theta,
        inst_speed,
        fitted_speed: ols_slope(&fit_t, &fit_x).map(|p| p.0),
        theta,
        profile_width: widths,
        no_front,
        burn_in_time: t_end * T::lit(0.25),
        grid,
        snapshots,
        clip_total: stepper.clip_total(),
    })
}

/// Sup over post-burn-in snapshots of `|u(X - r) - 1|` and `|u(X + r)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveReport<T> {
    pub offsets: Vec<T>,
    pub behind: Vec<T>,
    pub ahead: Vec<T>,
    /// Both sequences non-increasing in the offset.
    pub monotone: bool,
    /// `ln(ahead[r1] / ahead[r2]) / (r2 - r1)` from the two largest offsets.
    pub ahead_decay_rate: Option<T>,
    pub snapshots_used: usize,
}

fn sample_at<T: Real>(grid: &LineGrid<T>, u: &[T], x: T) -> Option<T> {
    let r = (x - grid.x_min) / grid.dx;
    if r < T::zero() {
        return None;
    }
    let j = r.floor().to_usize()?;
    if j + 1 >= u.len() {
        return None;
    }
    let s = r - T::from_usize_lossy(j);
    Some(u[j] * (T::one() - s) + u[j + 1] * s)
}

/// Measures the limits behind and ahead of the front over the retained
/// snapshots after the burn-in.
pub fn transition_wave_check<T: Real>(trace: &FrontTrace<T>) -> WaveReport<T> {
    let offsets: Vec<T> = WAVE_OFFSETS.iter().map(|r| T::lit(*r)).collect();
    let mut behind = vec![T::zero(); offsets.len()];
    let mut ahead = vec![T::zero(); offsets.len()];
    let mut used = 0;
    for (t, u) in &trace.snapshots {
        if *t < trace.burn_in_time {
            continue;
        }
        let k = trace.times.iter().position(|s| s == t);
        let Some(x) = k.and_then(|k| trace.x_theta[k]) else {
            continue;
        };
        used += 1;
        for (i, r) in offsets.iter().enumerate() {
            if let Some(v) = sample_at(&trace.grid, u, x - *r) {
                behind[i] = behind[i].max((v - T::one()).abs());
            }
            if let Some(v) = sample_at(&trace.grid, u, x + *r) {
                ahead[i] = ahead[i].max(v.abs());
            }
        }
    }
    let non_increasing = |v: &[T]| v.windows(2).all(|w| w[1] <= w[0]);
    let n = offsets.len();
    let ahead_decay_rate = (ahead[n - 1] > T::zero() && ahead[n - 2] > T::zero())
        .then(|| (ahead[n - 2] / ahead[n - 1]).ln() / (offsets[n - 1] - offsets[n - 2]));
    WaveReport {
        monotone: used > 0 && non_increasing(&behind) && non_increasing(&ahead),
        offsets,
        behind,
        ahead,
        ahead_decay_rate,
        snapshots_used: used,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredSpeed<T> {
    pub estimate: MeanEstimate<T>,
    pub c_lower: Option<T>,
    /// `lm(speed) >= c^* - 0.05`, when `c^*` is given.
    pub satisfies_lower_bound: Option<bool>,
}

/// Least mean of the instantaneous speed after the burn-in, compared with
/// the non-existence bound `c^*` when available.
pub fn measured_speed_analysis<T: Real>(trace: &FrontTrace<T>, t_max: T, c_lower: Option<T>) -> Result<MeasuredSpeed<T>> {
    if trace.no_front {
        return Err(invalid("trace", "no front to measure"));
    }
    let speeds = trace.post_burn_in_speeds();
    if speeds.iter().any(|s| !s.is_finite()) {
        return Err(invalid("trace", "front position undefined after the burn-in"));
    }
    let g = SampledFunction::cell_averages(record_step(trace), speeds)?;
    let estimate = least_mean(&g, t_max)?;
    let satisfies_lower_bound = c_lower.map(|c| estimate.value >= c - T::lit(NONEXISTENCE_TOL));
    Ok(MeasuredSpeed {
        estimate,
        c_lower,
        satisfies_lower_bound,
    })
}

fn record_step<T: Real>(trace: &FrontTrace<T>) -> T {
    if trace.times.len() >= 2 {
        trace.times[1] - trace.times[0]
    } else {
        T::one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{make_builtin, Family, Params};

    #[test]
    fn crossing_interpolates() {
        let u = [1.0f64, 1.0, 0.75, 0.25, 0.0];
        assert!((rightmost_crossing(&u, 0.5).unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(rightmost_crossing(&[0.0f64; 4], 0.5), None);
        // The rightmost crossing wins over an earlier one.
        let v = [1.0f64, 0.2, 0.8, 0.0];
        assert!((rightmost_crossing(&v, 0.5).unwrap() - 2.375).abs() < 1e-12);
    }

    #[test]
    fn ols_recovers_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let (m, c) = ols_slope(&xs, &ys).unwrap();
        assert!((m - 3.0).abs() < 1e-12 && (c + 1.0).abs() < 1e-12);
        assert!(ols_slope(&[1.0f64], &[2.0]).is_none());
    }

    #[test]
    fn zero_data_has_no_front() {
        let (cf, rt) = make_builtin(Family::Homogeneous, &Params::new()).unwrap();
        let opts = FrontOptions {
            t_sim: 5.0,
            domain: Some((-10.0, 10.0)),
            ..FrontOptions::default()
        };
        let tr = simulate_front::<f64>(&cf, &rt, InitialData::Zero, &opts).unwrap();
        assert!(tr.no_front && tr.fitted_speed.is_none());
        assert!(measured_speed_analysis(&tr, 1.0, None).is_err());
    }

    #[test]
    fn homogeneous_step_front_speed() {
        let (cf, rt) = make_builtin(Family::Homogeneous, &Params::new()).unwrap();
        let opts = FrontOptions {
            t_sim: 100.0,
            ..FrontOptions::default()
        };
        let tr = simulate_front::<f64>(&cf, &rt, InitialData::Step, &opts).unwrap();
        let c = tr.fitted_speed.unwrap();
        assert!((c - 2.0).abs() < 0.06, "{c}");
        assert!(tr.monotone_defect() <= 1.0);
        assert!(tr.clip_total < 1e-6);
        let wave = transition_wave_check(&tr);
        assert!(wave.monotone, "{wave:?}");
        assert!(wave.behind[3] < 1e-3);
        let ms = measured_speed_analysis(&tr, 30.0, Some(2.0)).unwrap();
        assert_eq!(ms.satisfies_lower_bound, Some(true));
    }

    #[test]
    fn narrow_domain_is_rejected() {
        let (cf, rt) = make_builtin(Family::Homogeneous, &Params::new()).unwrap();
        let opts = FrontOptions {
            t_sim: 50.0,
            domain: Some((-10.0, 40.0)),
            ..FrontOptions::default()
        };
        assert!(simulate_front::<f64>(&cf, &rt, InitialData::Step, &opts).is_err());
    }
}
