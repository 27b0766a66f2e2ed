//! The positive x-periodic entire solution `eta_lambda` of
//!
//! ```text
//! eta_t = a eta_xx - (q + 2 lambda a) eta_x + (mu + lambda^2 a + lambda q) eta,
//! ```
//!
//! approximated by integrating from constant data at `t = -B` and
//! renormalising at every integer time. The accumulated log growth gives
//! `S_lambda(n) = (1/lambda) ln |eta(., n)|` (anchored at `S(0) = 0`) and the
//! speeds `c_lambda` on each unit interval.

use crate::coefficients::CoefficientField;
use crate::error::{invalid, Error, Result};
use crate::means::SampledFunction;
use crate::parabolic::{CellGrid, DriftSign, LinearCellStepper, StateVector};
use crate::scalar::Real;

pub const MIN_HORIZON: usize = 50;
pub const MIN_BURN_IN: usize = 10;
pub const DEFAULT_BURN_IN: usize = 20;
pub const MAX_BURN_IN: usize = 640;
pub const UNIQUENESS_TOL: f64 = 1e-6;
pub const HARNACK_FLOOR: f64 = 1e-8;
/// Allowed violation of the growth envelopes, relative (log scale).
pub const ENVELOPE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct EtaOptions {
    /// Retained integer times `0..=horizon`.
    pub horizon: usize,
    /// Initial burn-in length.
    pub burn_in: usize,
    /// Double the burn-in until the uniqueness test passes.
    pub auto_burn_in: bool,
    pub max_burn_in: usize,
    /// Time of the first retained node.
    pub t_origin: f64,
    pub drift: DriftSign,
}

impl Default for EtaOptions {
    fn default() -> Self {
        EtaOptions {
            horizon: 200,
            burn_in: DEFAULT_BURN_IN,
            auto_burn_in: true,
            max_burn_in: MAX_BURN_IN,
            t_origin: 0.0,
            drift: DriftSign::Plus,
        }
    }
}

impl EtaOptions {
    pub fn with_horizon(horizon: usize) -> Self {
        EtaOptions {
            horizon,
            ..Self::default()
        }
    }
}

/// Trajectory of the normalised cell solution at integer times.
#[derive(Debug, Clone)]
pub struct EtaSolution<T> {
    pub lambda: T,
    pub grid: CellGrid<T>,
    pub t_origin: T,
    /// `t_origin + n`, `n = 0..=H`.
    pub t_nodes: Vec<T>,
    /// Profiles scaled to unit maximum.
    pub profiles: Vec<Vec<T>>,
    /// `S_lambda(n)`, with `S(0) = 0`.
    pub log_s: Vec<T>,
    /// `c_n = S(n+1) - S(n)`.
    pub c_samples: Vec<T>,
    /// `min / max` of each profile.
    pub harnack_ratios: Vec<T>,
    pub burn_in: usize,
    /// Distance between normalised profiles from two initial data at the end
    /// of the burn-in, when checked.
    pub burn_in_distance: Option<T>,
    pub drift: DriftSign,
}

impl<T: Real> EtaSolution<T> {
    pub fn horizon(&self) -> usize {
        self.c_samples.len()
    }

    /// `c_lambda` as unit-interval averages.
    pub fn speed_function(&self) -> SampledFunction<T> {
        SampledFunction::cell_averages(T::one(), self.c_samples.clone()).expect("horizon is positive")
    }

    /// Piecewise affine `S_lambda(t)` for `t` relative to `t_origin`.
    pub fn s_at(&self, t: T) -> T {
        let h = self.horizon();
        let tc = t.max(T::zero()).min(T::from_usize_lossy(h));
        let n = tc.floor().to_usize().unwrap_or(0).min(h - 1);
        let frac = tc - T::from_usize_lossy(n);
        self.log_s[n] + frac * self.c_samples[n]
    }

    pub fn min_harnack(&self) -> T {
        self.harnack_ratios.iter().copied().fold(T::infinity(), T::min)
    }
}

fn cosine_profile<T: Real>(grid: &CellGrid<T>) -> Vec<T> {
    let two_pi = T::lit(2.0 * std::f64::consts::PI);
    (0..grid.n_x)
        .map(|j| T::one() + T::lit(0.5) * (two_pi * grid.x(j) / grid.period).cos())
        .collect()
}

fn steps_per_unit<T: Real>(grid: &CellGrid<T>) -> Result<usize> {
    grid.steps_per(T::one())
        .ok_or_else(|| invalid("dt", "the time step must divide the unit time"))
}

/// Scales `state` to unit maximum and returns the log of the old maximum.
fn renormalise<T: Real>(state: &mut StateVector<T>) -> Result<T> {
    let m = state.max();
    if !(m.is_finite() && m > T::zero()) || !state.is_finite() {
        return Err(Error::Overflow { time: state.time.as_f64() });
    }
    let inv = T::one() / m;
    state.values.iter_mut().for_each(|v| *v *= inv);
    Ok(m.ln())
}

fn sup_distance<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y).abs()).fold(T::zero(), T::max)
}

fn check_parameters<T: Real>(lambda: T, opts: &EtaOptions) -> Result<()> {
    if !(lambda > T::zero()) {
        return Err(invalid("lambda", "must be positive"));
    }
    if opts.horizon < MIN_HORIZON {
        return Err(invalid("horizon", format!("at least {MIN_HORIZON}")));
    }
    if opts.burn_in < MIN_BURN_IN {
        return Err(invalid("burn_in", format!("at least {MIN_BURN_IN}")));
    }
    Ok(())
}

/// Runs the burn-in from `t_origin - burn_in` and returns the state at
/// `t_origin`, plus the distance to a second trajectory started from
/// `1 + 0.5 cos(2 pi x / l)` when `shadow` is set.
fn burn<T: Real>(
    stepper: &mut LinearCellStepper<'_, T>,
    grid: &CellGrid<T>,
    t_origin: T,
    burn_in: usize,
    shadow: bool,
) -> Result<(StateVector<T>, Option<T>)> {
    let steps = steps_per_unit(grid)?;
    let t0 = t_origin - T::from_usize_lossy(burn_in);
    let mut main = StateVector::constant(grid.n_x, T::one(), t0);
    let mut other = shadow.then(|| StateVector {
        values: cosine_profile(grid),
        time: t0,
    });
    for k in 1..=burn_in {
        let tk = t0 + T::from_usize_lossy(k);
        stepper.advance(&mut main, steps)?;
        main.time = tk;
        renormalise(&mut main)?;
        if let Some(o) = other.as_mut() {
            stepper.advance(o, steps)?;
            o.time = tk;
            renormalise(o)?;
        }
    }
    let dist = other.map(|o| sup_distance(&main.values, &o.values));
    Ok((main, dist))
}

/// Computes `eta_lambda` on `[t_origin, t_origin + H]`.
pub fn compute_eta<T: Real>(
    cf: &CoefficientField,
    lambda: T,
    grid: &CellGrid<T>,
    opts: &EtaOptions,
) -> Result<EtaSolution<T>> {
    check_parameters(lambda, opts)?;
    let steps = steps_per_unit(grid)?;
    let mut stepper = LinearCellStepper::with_sign(*grid, cf, lambda, opts.drift)?;
    let t_origin = T::lit(opts.t_origin);
    let tol = T::lit(UNIQUENESS_TOL);

    let mut burn_in = opts.burn_in;
    let (mut state, distance) = loop {
        let (state, dist) = burn(&mut stepper, grid, t_origin, burn_in, opts.auto_burn_in)?;
        match dist {
            Some(d) if d >= tol => {
                if burn_in * 2 > opts.max_burn_in {
                    return Err(Error::NotUnique {
                        distance: d.as_f64(),
                        burn_in,
                    });
                }
                burn_in *= 2;
            }
            _ => break (state, dist),
        }
    };

    let h = opts.horizon;
    let mut t_nodes = Vec::with_capacity(h + 1);
    let mut profiles = Vec::with_capacity(h + 1);
    let mut log_s = Vec::with_capacity(h + 1);
    let mut c_samples = Vec::with_capacity(h);
    let mut ratios = Vec::with_capacity(h + 1);
    let floor = T::lit(HARNACK_FLOOR);
    let mut s = T::zero();
    for n in 0..=h {
        if n > 0 {
            stepper.advance(&mut state, steps)?;
            state.time = t_origin + T::from_usize_lossy(n);
            let c = renormalise(&mut state)? / lambda;
            c_samples.push(c);
            s += c;
        }
        let ratio = state.min() / state.max();
        if !(ratio >= floor) {
            return Err(Error::HarnackCollapse {
                ratio: ratio.as_f64(),
                time: state.time.as_f64(),
            });
        }
        t_nodes.push(state.time);
        profiles.push(state.values.clone());
        log_s.push(s);
        ratios.push(ratio);
    }
    Ok(EtaSolution {
        lambda,
        grid: *grid,
        t_origin,
        t_nodes,
        profiles,
        log_s,
        c_samples,
        harnack_ratios: ratios,
        burn_in,
        burn_in_distance: distance,
        drift: opts.drift,
    })
}

/// Integrates from the constant and the cosine initial data at `t = 0` and
/// returns the sup distance of the normalised profiles at `t = 1..=units`.
pub fn uniqueness_check<T: Real>(cf: &CoefficientField, lambda: T, grid: &CellGrid<T>, units: usize) -> Result<Vec<T>> {
    let steps = steps_per_unit(grid)?;
    let mut stepper = LinearCellStepper::new(*grid, cf, lambda)?;
    let mut a = StateVector::constant(grid.n_x, T::one(), T::zero());
    let mut b = StateVector {
        values: cosine_profile(grid),
        time: T::zero(),
    };
    let mut out = Vec::with_capacity(units);
    for k in 1..=units {
        for s in [&mut a, &mut b] {
            stepper.advance(s, steps)?;
            s.time = T::from_usize_lossy(k);
            renormalise(s)?;
        }
        out.push(sup_distance(&a.values, &b.values));
    }
    Ok(out)
}

/// Extremes of the coefficients over the cell nodes at one time.
#[derive(Debug, Clone, Copy)]
struct NodeExtremes<T> {
    a_min: T,
    a_max: T,
    q_abs: T,
    mu_min: T,
    mu_max: T,
}

fn node_extremes<T: Real>(cf: &CoefficientField, grid: &CellGrid<T>, t: T) -> NodeExtremes<T> {
    let mut e = NodeExtremes {
        a_min: T::infinity(),
        a_max: T::neg_infinity(),
        q_abs: T::zero(),
        mu_min: T::infinity(),
        mu_max: T::neg_infinity(),
    };
    let nodes = if cf.depends_on_x() { grid.n_x } else { 1 };
    for j in 0..nodes {
        let x = grid.x(j);
        let (a, q, mu) = (cf.a_at(x, t), cf.q_at(x, t), cf.mu_at(x, t));
        e.a_min = e.a_min.min(a);
        e.a_max = e.a_max.max(a);
        e.q_abs = e.q_abs.max(q.abs());
        e.mu_min = e.mu_min.min(mu);
        e.mu_max = e.mu_max.max(mu);
    }
    e
}

/// Quadrature sub-intervals per unit time for the envelope integrals.
const QUAD_PER_UNIT: usize = 32;

/// Coefficient bounds and running integrals of `min_x mu` and `max_x mu`
/// over the retained window, on the cell nodes.
struct Envelope<T> {
    alpha_lower: T,
    alpha_upper: T,
    q_sup: T,
    mu_abs: T,
    /// `int_{t_0}^{t_0 + n} min_x mu`, `n = 0..=H`.
    int_min: Vec<T>,
    int_max: Vec<T>,
}

impl<T: Real> Envelope<T> {
    fn new(cf: &CoefficientField, es: &EtaSolution<T>) -> Self {
        let b = &cf.bounds;
        let mut env = Envelope {
            alpha_lower: T::lit(b.alpha_lower),
            alpha_upper: T::lit(b.alpha_upper),
            q_sup: T::lit(b.q_sup),
            mu_abs: T::lit(b.mu_sup.abs().max(b.mu_inf.abs())),
            int_min: vec![T::zero()],
            int_max: vec![T::zero()],
        };
        let h = es.horizon();
        let t_dep = cf.depends_on_t();
        let sub = if t_dep { QUAD_PER_UNIT } else { 1 };
        let hq = T::one() / T::from_usize_lossy(sub);
        let absorb = |e: NodeExtremes<T>, env: &mut Envelope<T>| {
            env.alpha_lower = env.alpha_lower.min(e.a_min);
            env.alpha_upper = env.alpha_upper.max(e.a_max);
            env.q_sup = env.q_sup.max(e.q_abs);
            env.mu_abs = env.mu_abs.max(e.mu_min.abs()).max(e.mu_max.abs());
        };
        if !t_dep {
            let e = node_extremes(cf, &es.grid, es.t_origin);
            absorb(e, &mut env);
            for n in 1..=h {
                let k = T::from_usize_lossy(n);
                env.int_min.push(e.mu_min * k);
                env.int_max.push(e.mu_max * k);
            }
            return env;
        }
        // Composite Simpson on each unit interval.
        let mut prev = node_extremes(cf, &es.grid, es.t_origin);
        absorb(prev, &mut env);
        let (mut acc_min, mut acc_max) = (T::zero(), T::zero());
        for n in 0..h {
            let t0 = es.t_origin + T::from_usize_lossy(n);
            let (mut s_min, mut s_max) = (T::zero(), T::zero());
            for k in 0..sub {
                let tl = t0 + hq * T::from_usize_lossy(k);
                let mid = node_extremes(cf, &es.grid, tl + hq * T::lit(0.5));
                let right = node_extremes(cf, &es.grid, tl + hq);
                absorb(mid, &mut env);
                absorb(right, &mut env);
                s_min += (prev.mu_min + T::lit(4.0) * mid.mu_min + right.mu_min) * hq / T::lit(6.0);
                s_max += (prev.mu_max + T::lit(4.0) * mid.mu_max + right.mu_max) * hq / T::lit(6.0);
                prev = right;
            }
            acc_min += s_min;
            acc_max += s_max;
            env.int_min.push(acc_min);
            env.int_max.push(acc_max);
        }
        env
    }
}

/// Same-time Harnack ratios, growth envelopes and speed bounds of a
/// computed solution.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnackReport<T> {
    pub inf_ratio: T,
    pub sup_ratio: T,
    /// `(sup - inf) / inf` of the ratios over the retained window.
    pub ratio_spread: T,
    /// Largest excess (log scale) of the sup-norm growth over the upper
    /// envelope, over all retained `n` and `T = 1..=10`; nonpositive when
    /// the envelope holds.
    pub upper_excess: T,
    /// Largest shortfall (log scale) of the minimum below the lower envelope.
    pub lower_excess: T,
    /// Lipschitz constant `beta` of `S_lambda`.
    pub beta: T,
    /// `max_n |c_n| - beta (1 + lambda^2) / lambda`; nonpositive when the
    /// Lipschitz bound holds.
    pub lipschitz_excess: T,
    /// Largest excess of `c_n` beyond the unit-interval speed bounds.
    pub speed_bound_excess: T,
}

impl<T: Real> HarnackReport<T> {
    pub fn envelopes_hold(&self) -> bool {
        let tol = T::lit(ENVELOPE_TOL);
        self.upper_excess <= tol && self.lower_excess <= tol
    }

    pub fn speed_bounds_hold(&self) -> bool {
        self.speed_bound_excess <= T::lit(ENVELOPE_TOL)
    }
}

/// Checks the Harnack ratios and the envelopes
///
/// ```text
/// max eta(t+T) <= max eta(t) exp((a_max lambda + |q|) lambda T + int max mu),
/// min eta(t+T) >= C max eta(t) exp((a_min lambda - |q|) lambda T + int min mu),
/// ```
///
/// with `C` the Harnack ratio at time `t`. Fails if either is violated by
/// more than [`ENVELOPE_TOL`] relative.
pub fn harnack_report<T: Real>(es: &EtaSolution<T>, cf: &CoefficientField) -> Result<HarnackReport<T>> {
    let lam = es.lambda;
    let env = Envelope::new(cf, es);
    let h = es.horizon();
    let inf_ratio = es.min_harnack();
    let sup_ratio = es.harnack_ratios.iter().copied().fold(T::zero(), T::max);
    let up_rate = (env.alpha_upper * lam + env.q_sup) * lam;
    let low_rate = (env.alpha_lower * lam - env.q_sup) * lam;
    let mut upper_excess = T::neg_infinity();
    let mut lower_excess = T::neg_infinity();
    let mut worst = (0, 0, T::neg_infinity());
    for n in 0..h {
        for span in 1..=10usize.min(h - n) {
            let m = n + span;
            let span_t = T::from_usize_lossy(span);
            let growth = lam * (es.log_s[m] - es.log_s[n]);
            let up = up_rate * span_t + env.int_max[m] - env.int_max[n];
            let ex_up = growth - up;
            let log_min = growth + es.harnack_ratios[m].ln();
            let low = es.harnack_ratios[n].ln() + low_rate * span_t + env.int_min[m] - env.int_min[n];
            let ex_low = low - log_min;
            upper_excess = upper_excess.max(ex_up);
            lower_excess = lower_excess.max(ex_low);
            let e = ex_up.max(ex_low);
            if e > worst.2 {
                worst = (n, span, e);
            }
        }
    }
    if worst.2 > T::lit(ENVELOPE_TOL) {
        return Err(Error::EnvelopeViolation {
            n: worst.0,
            span: worst.1,
            excess: worst.2.as_f64(),
        });
    }
    let beta = env.alpha_upper + env.q_sup + env.mu_abs - inf_ratio.ln();
    let c_max = es.c_samples.iter().map(|c| c.abs()).fold(T::zero(), T::max);
    let lipschitz_excess = c_max - beta * (T::one() + lam * lam) / lam;
    let mut speed_bound_excess = T::neg_infinity();
    for n in 0..h {
        let c = es.c_samples[n];
        let lo = env.alpha_lower * lam - env.q_sup + (env.int_min[n + 1] - env.int_min[n]) / lam;
        let hi = env.alpha_upper * lam + env.q_sup + (env.int_max[n + 1] - env.int_max[n]) / lam;
        speed_bound_excess = speed_bound_excess.max(lo - c).max(c - hi);
    }
    Ok(HarnackReport {
        inf_ratio,
        sup_ratio,
        ratio_spread: (sup_ratio - inf_ratio) / inf_ratio,
        upper_excess,
        lower_excess,
        beta,
        lipschitz_excess,
        speed_bound_excess,
    })
}

/// `ln eta` (with `|eta(., t_origin)| = 1`) at every time step of a window,
/// regenerated from the stored integer-time profiles.
#[derive(Debug, Clone)]
pub struct FineTrajectory<T> {
    pub lambda: T,
    pub grid: CellGrid<T>,
    /// Time of the first record.
    pub t_start: T,
    pub log_eta: Vec<Vec<T>>,
}

impl<T: Real> FineTrajectory<T> {
    pub fn t_end(&self) -> T {
        self.t_start + self.grid.dt * T::from_usize_lossy(self.log_eta.len() - 1)
    }

    /// Index of the record at time `t`; `t` must lie on the time lattice.
    pub fn index(&self, t: T) -> Option<usize> {
        let r = (t - self.t_start) / self.grid.dt;
        let k = r.round();
        if (r - k).abs() > T::lit(1e-6) || k < T::zero() {
            return None;
        }
        k.to_usize().filter(|&k| k < self.log_eta.len())
    }

    /// `ln eta(x, t)`, linear in `x` between nodes, periodic.
    pub fn log_eta_at(&self, x: T, t: T) -> T {
        let k = self.index(t).expect("time on the trajectory lattice");
        let g = &self.grid;
        let xi = (x / g.dx).floor();
        let frac = x / g.dx - xi;
        let n = g.n_x as i64;
        let i0 = (xi.to_i64().unwrap_or(0)).rem_euclid(n) as usize;
        let i1 = (i0 + 1) % g.n_x;
        let row = &self.log_eta[k];
        if frac <= T::lit(1e-12) {
            row[i0]
        } else {
            row[i0] * (T::one() - frac) + row[i1] * frac
        }
    }
}

/// Regenerates `eta` at every time step on `[t_origin + n0, t_origin + n1]`.
pub fn fine_trajectory<T: Real>(
    es: &EtaSolution<T>,
    cf: &CoefficientField,
    n0: usize,
    n1: usize,
) -> Result<FineTrajectory<T>> {
    if !(n0 < n1 && n1 <= es.horizon()) {
        return Err(invalid("window", "must lie inside the computed horizon"));
    }
    let steps = steps_per_unit(&es.grid)?;
    let mut stepper = LinearCellStepper::with_sign(es.grid, cf, es.lambda, es.drift)?;
    let mut log_eta = Vec::with_capacity((n1 - n0) * steps + 1);
    for n in n0..n1 {
        let offset = es.lambda * es.log_s[n];
        let mut st = StateVector {
            values: es.profiles[n].clone(),
            time: es.t_nodes[n],
        };
        if n == n0 {
            log_eta.push(st.values.iter().map(|v| v.ln() + offset).collect());
        }
        for _ in 0..steps {
            stepper.step(&mut st)?;
            log_eta.push(st.values.iter().map(|v| v.ln() + offset).collect());
        }
    }
    Ok(FineTrajectory {
        lambda: es.lambda,
        grid: es.grid,
        t_start: es.t_nodes[n0],
        log_eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{make_builtin, Family, ParamValue, Params};

    fn grid_for(cf: &CoefficientField, n_x: usize, lambda: f64) -> CellGrid<f64> {
        CellGrid::auto(n_x, cf, lambda, 1.0, 1.0).unwrap()
    }

    #[test]
    fn homogeneous_speed_is_lambda_plus_mu_over_lambda() {
        let (cf, _) = make_builtin(Family::Homogeneous, &Params::new()).unwrap();
        let g = grid_for(&cf, 32, 1.0);
        let es = compute_eta(&cf, 1.0, &g, &EtaOptions::with_horizon(60)).unwrap();
        assert!(es.c_samples.iter().all(|c| (c - 2.0).abs() < 1e-4));
        assert!(es.harnack_ratios.iter().all(|r| (r - 1.0).abs() < 1e-12));
        assert!(es.profiles.iter().all(|p| p.iter().copied().fold(0.0, f64::max) == 1.0));
        let rep = harnack_report(&es, &cf).unwrap();
        assert!(rep.envelopes_hold() && rep.speed_bounds_hold() && rep.lipschitz_excess <= 0.0);
    }

    #[test]
    fn homogeneous_uniqueness_distance_decays_at_the_cosine_rate() {
        let (cf, _) = make_builtin(Family::Homogeneous, &Params::new()).unwrap();
        let g = grid_for(&cf, 32, 1.0);
        let trace = uniqueness_check(&cf, 1.0, &g, 20).unwrap();
        // The cosine mode of the second datum decays like e^{-(2 pi / l)^2 t} = e^{-t}.
        assert!(*trace.last().unwrap() < 1e-6);
        let rate = (trace[5] / trace[15]).ln() / 10.0;
        assert!((rate - 1.0).abs() < 0.05, "{rate}");
    }

    #[test]
    fn time_only_speed_matches_integral_of_mu() {
        let (cf, _) = make_builtin(Family::TimeOnly, &Params::new()).unwrap();
        let lambda = 0.8;
        let g = grid_for(&cf, 32, lambda);
        let es = compute_eta(&cf, lambda, &g, &EtaOptions::with_horizon(60)).unwrap();
        for (n, c) in es.c_samples.iter().enumerate() {
            let t = n as f64;
            // int_n^{n+1} (1 + 0.5 sin s) ds
            let integral = 1.0 + 0.5 * (t.cos() - (t + 1.0).cos());
            assert!((c - (lambda + integral / lambda)).abs() < 1e-4, "n = {n}: {c} vs {}", lambda + integral / lambda);
        }
    }

    #[test]
    fn advection_speed_subtracts_drift() {
        let mut p = Params::new();
        p.insert("q".into(), ParamValue::Text("0.5".into()));
        let (cf, _) = make_builtin(Family::AdvectionTime, &p).unwrap();
        let lambda = 1.3;
        let g = grid_for(&cf, 32, lambda);
        let es = compute_eta(&cf, lambda, &g, &EtaOptions::with_horizon(50)).unwrap();
        let expect = lambda - 0.5 + 1.0 / lambda;
        assert!(es.c_samples.iter().all(|c| (c - expect).abs() < 1e-4));
    }

    #[test]
    fn space_periodic_uniqueness_and_harnack() {
        let (cf, _) = make_builtin(Family::SpacePeriodic, &Params::new()).unwrap();
        let g = grid_for(&cf, 64, 1.0);
        let trace = uniqueness_check(&cf, 1.0, &g, 40).unwrap();
        assert!(trace[29] < 1e-6, "{}", trace[29]);
        for w in trace.windows(2) {
            if w[0] > 1e-13 {
                assert!(w[1] <= w[0]);
            }
        }
        let es = compute_eta(&cf, 1.0, &g, &EtaOptions::with_horizon(60)).unwrap();
        let rep = harnack_report(&es, &cf).unwrap();
        assert!(rep.inf_ratio > 0.0 && rep.inf_ratio < 1.0);
        assert!(rep.ratio_spread < 0.01);
        assert!(rep.speed_bounds_hold());
    }

    #[test]
    fn time_shift_by_one_period() {
        let (cf, _) = make_builtin(Family::SpaceTimePeriodic, &Params::new()).unwrap();
        let g = grid_for(&cf, 32, 1.0);
        let base = compute_eta(&cf, 1.0, &g, &EtaOptions::with_horizon(50)).unwrap();
        let opts = EtaOptions {
            t_origin: 1.0,
            ..EtaOptions::with_horizon(50)
        };
        let shifted = compute_eta(&cf, 1.0, &g, &opts).unwrap();
        for (a, b) in base.c_samples.iter().zip(&shifted.c_samples) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let (cf, _) = make_builtin(Family::Homogeneous, &Params::new()).unwrap();
        let g = grid_for(&cf, 32, 1.0);
        assert!(compute_eta(&cf, 0.0, &g, &EtaOptions::default()).is_err());
        assert!(compute_eta(&cf, 1.0, &g, &EtaOptions::with_horizon(10)).is_err());
        let g_bad = CellGrid::new(32, cf.period_l, 0.003).unwrap();
        assert!(compute_eta(&cf, 1.0, &g_bad, &EtaOptions::with_horizon(60)).is_err());
    }

    #[test]
    fn fine_trajectory_matches_integer_profiles() {
        let (cf, _) = make_builtin(Family::SpacePeriodic, &Params::new()).unwrap();
        let g = grid_for(&cf, 32, 1.0);
        let es = compute_eta(&cf, 1.0, &g, &EtaOptions::with_horizon(50)).unwrap();
        let ft = fine_trajectory(&es, &cf, 3, 5).unwrap();
        let t = es.t_nodes[4];
        let j = 7;
        let x = g.x(j);
        let expect = es.profiles[4][j].ln() + es.log_s[4];
        assert!((ft.log_eta_at(x, t) - expect).abs() < 1e-9);
    }
}
