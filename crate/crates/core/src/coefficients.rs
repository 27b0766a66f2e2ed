//! Equation data: diffusion `a(x,t)`, drift `q(x,t)`, linear growth rate
//! `mu(x,t)` and the nonlinearity `f(x,t,u)`, in one space dimension with
//! propagation direction `+1`.
//!
//! The drift follows the convention `u_t - a u_xx + q u_x = f(x,t,u)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::expr::{Bindings, Expression, Var};
use crate::scalar::Real;

/// Built-in coefficient families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Homogeneous,
    TimeOnly,
    SpacePeriodic,
    TimePeriodic,
    SpaceTimePeriodic,
    QuasiPeriodicTime,
    AdvectionTime,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Homogeneous,
        Family::TimeOnly,
        Family::SpacePeriodic,
        Family::TimePeriodic,
        Family::SpaceTimePeriodic,
        Family::QuasiPeriodicTime,
        Family::AdvectionTime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Homogeneous => "homogeneous",
            Family::TimeOnly => "time_only",
            Family::SpacePeriodic => "space_periodic",
            Family::TimePeriodic => "time_periodic",
            Family::SpaceTimePeriodic => "space_time_periodic",
            Family::QuasiPeriodicTime => "quasi_periodic_time",
            Family::AdvectionTime => "advection_time",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| invalid("family", format!("unknown builtin `{s}`")))
    }
}

/// A named parameter value: either a number or an expression string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

pub type Params = BTreeMap<String, ParamValue>;

fn num_param(params: &Params, name: &str, default: f64) -> Result<f64> {
    match params.get(name) {
        None => Ok(default),
        Some(ParamValue::Number(v)) => Ok(*v),
        Some(ParamValue::Text(s)) => Expression::parse(s)?
            .as_constant()
            .ok_or_else(|| invalid(name, "expected a number")),
    }
}

fn text_param(params: &Params, name: &str, default: &str) -> String {
    match params.get(name) {
        None => default.to_string(),
        Some(ParamValue::Text(s)) => s.clone(),
        Some(ParamValue::Number(v)) => format!("{v}"),
    }
}

/// Bounds of the coefficients obtained by dense sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Points per spatial period and per unit time.
    pub resolution: usize,
    /// Sampled time window `[0, t_span]`.
    pub t_span: f64,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    pub q_sup: f64,
    pub mu_inf: f64,
    pub mu_sup: f64,
}

/// The data `(a, q, mu, l)` of the equation.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub a: Expression,
    pub q: Expression,
    pub mu: Expression,
    pub period_l: f64,
    /// Declared time period, when the coefficients are time periodic.
    pub time_period: Option<f64>,
    pub bounds: BoundReport,
    pub family: Option<Family>,
    pub params: Params,
}

pub const DEFAULT_BOUND_RESOLUTION: usize = 64;

impl CoefficientField {
    /// Builds a field from expressions, sampling its bounds at the default
    /// resolution.
    pub fn new(
        a: Expression,
        q: Expression,
        mu: Expression,
        period_l: f64,
        time_period: Option<f64>,
    ) -> Result<Self> {
        if !(period_l > 0.0 && period_l.is_finite()) {
            return Err(invalid("period_l", "must be positive"));
        }
        if let Some(tp) = time_period {
            if !(tp > 0.0 && tp.is_finite()) {
                return Err(invalid("time_period", "must be positive"));
            }
        }
        for (name, e) in [("a", &a), ("q", &q), ("mu", &mu)] {
            if e.uses(Var::U) {
                return Err(invalid(name, "coefficients may depend on x and t only"));
            }
        }
        let mut cf = CoefficientField {
            a,
            q,
            mu,
            period_l,
            time_period,
            bounds: BoundReport {
                resolution: 0,
                t_span: 0.0,
                alpha_lower: 0.0,
                alpha_upper: 0.0,
                q_sup: 0.0,
                mu_inf: 0.0,
                mu_sup: 0.0,
            },
            family: None,
            params: Params::new(),
        };
        cf.bounds = sample_bounds(&cf, DEFAULT_BOUND_RESOLUTION, cf.default_t_span())?;
        if cf.bounds.alpha_lower <= 0.0 {
            return Err(invalid("a", "diffusion must be uniformly positive"));
        }
        Ok(cf)
    }

    pub fn from_strs(a: &str, q: &str, mu: &str, period_l: f64, time_period: Option<f64>) -> Result<Self> {
        Self::new(
            Expression::parse(a)?,
            Expression::parse(q)?,
            Expression::parse(mu)?,
            period_l,
            time_period,
        )
    }

    fn default_t_span(&self) -> f64 {
        match self.time_period {
            Some(tp) => tp,
            None if self.depends_on_t() => 100.0,
            None => 0.0,
        }
    }

    pub fn depends_on_x(&self) -> bool {
        self.a.uses(Var::X) || self.q.uses(Var::X) || self.mu.uses(Var::X)
    }

    pub fn depends_on_t(&self) -> bool {
        self.a.uses(Var::T) || self.q.uses(Var::T) || self.mu.uses(Var::T)
    }

    #[inline]
    pub fn a_at<T: Real>(&self, x: T, t: T) -> T {
        self.a.eval_raw(&Bindings::xt(x, t))
    }

    #[inline]
    pub fn q_at<T: Real>(&self, x: T, t: T) -> T {
        self.q.eval_raw(&Bindings::xt(x, t))
    }

    #[inline]
    pub fn mu_at<T: Real>(&self, x: T, t: T) -> T {
        self.mu.eval_raw(&Bindings::xt(x, t))
    }

    fn x_samples(&self, resolution: usize) -> Vec<f64> {
        if self.depends_on_x() {
            (0..resolution)
                .map(|j| self.period_l * j as f64 / resolution as f64)
                .collect()
        } else {
            vec![0.0]
        }
    }

    /// `min_x mu(x, t)` over the sampled cell.
    pub fn mu_min_at<T: Real>(&self, t: T) -> T {
        self.x_samples(self.bounds.resolution)
            .into_iter()
            .map(|x| self.mu_at(T::lit(x), t))
            .fold(T::infinity(), T::min)
    }

    /// `max_x mu(x, t)` over the sampled cell.
    pub fn mu_max_at<T: Real>(&self, t: T) -> T {
        self.x_samples(self.bounds.resolution)
            .into_iter()
            .map(|x| self.mu_at(T::lit(x), t))
            .fold(T::neg_infinity(), T::max)
    }

    /// Composite Simpson quadrature of `g` on `[t0, t1]` with `per_unit`
    /// sub-intervals per unit time (at least 2).
    pub fn integrate_in_time<T: Real>(&self, g: impl Fn(T) -> T, t0: T, t1: T, per_unit: usize) -> T {
        let span = (t1 - t0).as_f64();
        if span == 0.0 {
            return T::zero();
        }
        let mut n = ((span.abs() * per_unit as f64).ceil() as usize).max(2);
        if n % 2 == 1 {
            n += 1;
        }
        let h = (t1 - t0) / T::from_usize_lossy(n);
        let mut acc = g(t0) + g(t1);
        for i in 1..n {
            let w = if i % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
            acc += w * g(t0 + h * T::from_usize_lossy(i));
        }
        acc * h / T::lit(3.0)
    }

    /// Largest deviation `|g(x + l, t) - g(x, t)|` over a sample grid, for all
    /// three coefficients.
    pub fn periodicity_defect(&self, nx: usize, nt: usize, t_span: f64) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..nx {
            let x = self.period_l * i as f64 / nx as f64;
            for k in 0..nt {
                let t = t_span * k as f64 / nt.max(1) as f64;
                for e in [&self.a, &self.q, &self.mu] {
                    let g0: f64 = e.eval_raw(&Bindings::xt(x, t));
                    let g1: f64 = e.eval_raw(&Bindings::xt(x + self.period_l, t));
                    worst = worst.max((g1 - g0).abs());
                }
            }
        }
        worst
    }
}

/// Samples the coefficients on `resolution` points per spatial period and per
/// unit time over `t in [0, t_span]`.
///
/// Grids at resolutions `r` and `2r` are nested, so doubling the resolution
/// never narrows the reported bounds.
pub fn sample_bounds(cf: &CoefficientField, resolution: usize, t_span: f64) -> Result<BoundReport> {
    if resolution < 16 {
        return Err(invalid("resolution", "at least 16 points per period and per unit time"));
    }
    let xs = cf.x_samples(resolution);
    let ts: Vec<f64> = if cf.depends_on_t() {
        let n = (t_span * resolution as f64).ceil() as usize;
        (0..=n).map(|k| k as f64 / resolution as f64).collect()
    } else {
        vec![0.0]
    };
    let mut r = BoundReport {
        resolution,
        t_span,
        alpha_lower: f64::INFINITY,
        alpha_upper: f64::NEG_INFINITY,
        q_sup: 0.0,
        mu_inf: f64::INFINITY,
        mu_sup: f64::NEG_INFINITY,
    };
    for &t in &ts {
        for &x in &xs {
            let env = Bindings::xt(x, t);
            let a = cf.a.eval::<f64>(&env)?;
            let q = cf.q.eval::<f64>(&env)?;
            let mu = cf.mu.eval::<f64>(&env)?;
            r.alpha_lower = r.alpha_lower.min(a);
            r.alpha_upper = r.alpha_upper.max(a);
            r.q_sup = r.q_sup.max(q.abs());
            r.mu_inf = r.mu_inf.min(mu);
            r.mu_sup = r.mu_sup.max(mu);
        }
    }
    Ok(r)
}

/// The nonlinearity and the constants of its KPP bounds.
#[derive(Debug, Clone)]
pub struct ReactionTerm {
    pub kind: ReactionKind,
    pub kpp_constant_c: f64,
    pub kpp_exponent_nu: f64,
    pub kpp_delta: f64,
}

#[derive(Debug, Clone)]
pub enum ReactionKind {
    /// `f = mu(x,t) u (1 - u)`.
    Logistic,
    /// User expression in `x, t, u`.
    Expression(Expression),
}

impl ReactionTerm {
    pub fn logistic(cf: &CoefficientField) -> Self {
        ReactionTerm {
            kind: ReactionKind::Logistic,
            kpp_constant_c: cf.bounds.mu_sup,
            kpp_exponent_nu: 1.0,
            kpp_delta: 1.0,
        }
    }

    pub fn expression(f: Expression, c: f64, nu: f64, delta: f64) -> Result<Self> {
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(invalid("kpp_exponent_nu", "must lie in (0, 1]"));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(invalid("kpp_delta", "must lie in (0, 1]"));
        }
        Ok(ReactionTerm {
            kind: ReactionKind::Expression(f),
            kpp_constant_c: c,
            kpp_exponent_nu: nu,
            kpp_delta: delta,
        })
    }

    #[inline]
    pub fn f<T: Real>(&self, cf: &CoefficientField, x: T, t: T, u: T) -> T {
        match &self.kind {
            ReactionKind::Logistic => cf.mu_at(x, t) * u * (T::one() - u),
            ReactionKind::Expression(e) => e.eval_raw(&Bindings::xtu(x, t, u)),
        }
    }

    /// `f` given a precomputed `mu(x,t)`; avoids re-evaluating `mu` for the
    /// logistic form.
    #[inline]
    pub fn f_with_mu<T: Real>(&self, mu: T, x: T, t: T, u: T) -> T {
        match &self.kind {
            ReactionKind::Logistic => mu * u * (T::one() - u),
            ReactionKind::Expression(e) => e.eval_raw(&Bindings::xtu(x, t, u)),
        }
    }

    pub fn is_logistic(&self) -> bool {
        matches!(self.kind, ReactionKind::Logistic)
    }
}

/// Worst violations of the monostable/KPP conditions on a sample grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KppReport {
    /// `max |f(x,t,0)|`.
    pub f_at_zero: f64,
    /// `max |f(x,t,1)|`.
    pub f_at_one: f64,
    /// `max (f - mu u)`, nonpositive when the KPP condition holds.
    pub kpp_excess: f64,
    /// `max (mu u - C u^{1+nu} - f)` for `u < delta`, nonpositive when the
    /// lower bound holds.
    pub lower_bound_excess: f64,
}

impl KppReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.f_at_zero <= tol && self.f_at_one <= tol && self.kpp_excess <= tol && self.lower_bound_excess <= tol
    }
}

pub fn check_kpp(cf: &CoefficientField, rt: &ReactionTerm, nx: usize, nt: usize, nu_pts: usize) -> KppReport {
    let t_span = cf.bounds.t_span.max(1.0);
    let mut r = KppReport {
        f_at_zero: 0.0,
        f_at_one: 0.0,
        kpp_excess: f64::NEG_INFINITY,
        lower_bound_excess: f64::NEG_INFINITY,
    };
    for i in 0..nx {
        let x = cf.period_l * i as f64 / nx as f64;
        for k in 0..nt {
            let t = t_span * k as f64 / nt as f64;
            let mu: f64 = cf.mu_at(x, t);
            r.f_at_zero = r.f_at_zero.max(rt.f(cf, x, t, 0.0).abs());
            r.f_at_one = r.f_at_one.max(rt.f(cf, x, t, 1.0).abs());
            for m in 0..nu_pts {
                let u = m as f64 / (nu_pts - 1) as f64;
                let f = rt.f(cf, x, t, u);
                r.kpp_excess = r.kpp_excess.max(f - mu * u);
                if u < rt.kpp_delta {
                    let lower = mu * u - rt.kpp_constant_c * u.powf(1.0 + rt.kpp_exponent_nu);
                    r.lower_bound_excess = r.lower_bound_excess.max(lower - f);
                }
            }
        }
    }
    r
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(name, "must be positive"))
    }
}

/// Builds one of the built-in families with logistic nonlinearity.
///
/// | family | data |
/// |---|---|
/// | `homogeneous` | `a`, `mu0` constants |
/// | `time_only` | `mu = mu_expr(t)` |
/// | `space_periodic` | `mu = mu0 + amplitude cos(2 pi x / period)` |
/// | `time_periodic` | `mu = mu0 + amplitude sin(2 pi t / time_period)` |
/// | `space_time_periodic` | `mu = mu0 + amplitude cos(2 pi (x/period - t/time_period))`, `q = q_amplitude sin(2 pi x / period)` |
/// | `quasi_periodic_time` | `mu = mu0 + amp1 sin t + amp2 sin(omega2 t)` |
/// | `advection_time` | `u_t - u_xx - q(t) u_x = mu0 u (1 - u)` |
///
/// Spatially homogeneous families use `period = 2 pi` unless overridden; the
/// value is immaterial for them.
pub fn make_builtin(family: Family, params: &Params) -> Result<(CoefficientField, ReactionTerm)> {
    let two_pi = 2.0 * PI;
    let a_const = positive("a", num_param(params, "a", 1.0)?)?;
    let a_str = format!("{a_const}");
    // Exact sup of mu where the family gives it in closed form.
    let mut mu_sup_exact = None;
    let mut cf = match family {
        Family::Homogeneous => {
            let mu0 = positive("mu0", num_param(params, "mu0", 1.0)?)?;
            let l = positive("period", num_param(params, "period", two_pi)?)?;
            mu_sup_exact = Some(mu0);
            CoefficientField::from_strs(&a_str, "0", &format!("{mu0}"), l, None)?
        }
        Family::TimeOnly => {
            let mu = Expression::parse(&text_param(params, "mu_expr", "1+0.5*sin(t)"))?;
            if mu.uses(Var::X) || mu.uses(Var::U) {
                return Err(invalid("mu_expr", "time_only requires a function of t"));
            }
            let l = positive("period", num_param(params, "period", two_pi)?)?;
            let tp = match params.get("time_period") {
                Some(_) => Some(positive("time_period", num_param(params, "time_period", 1.0)?)?),
                None => None,
            };
            CoefficientField::new(Expression::parse(&a_str)?, Expression::constant(0.0), mu, l, tp)?
        }
        Family::SpacePeriodic => {
            let mu0 = positive("mu0", num_param(params, "mu0", 1.0)?)?;
            let amp = num_param(params, "amplitude", 0.5)?;
            let l = positive("period", num_param(params, "period", 1.0)?)?;
            let mu = format!("{mu0} + {amp}*cos(2*pi*x/{l})");
            mu_sup_exact = Some(mu0 + amp.abs());
            CoefficientField::from_strs(&a_str, "0", &mu, l, None)?
        }
        Family::TimePeriodic => {
            let mu0 = positive("mu0", num_param(params, "mu0", 1.0)?)?;
            let amp = num_param(params, "amplitude", 0.5)?;
            let tp = positive("time_period", num_param(params, "time_period", two_pi)?)?;
            let l = positive("period", num_param(params, "period", two_pi)?)?;
            let mu = format!("{mu0} + {amp}*sin(2*pi*t/{tp})");
            mu_sup_exact = Some(mu0 + amp.abs());
            CoefficientField::from_strs(&a_str, "0", &mu, l, Some(tp))?
        }
        Family::SpaceTimePeriodic => {
            let mu0 = positive("mu0", num_param(params, "mu0", 1.0)?)?;
            let amp = num_param(params, "amplitude", 0.5)?;
            let q_amp = num_param(params, "q_amplitude", 0.0)?;
            let l = positive("period", num_param(params, "period", 1.0)?)?;
            let tp = positive("time_period", num_param(params, "time_period", 1.0)?)?;
            let mu = format!("{mu0} + {amp}*cos(2*pi*(x/{l} - t/{tp}))");
            mu_sup_exact = Some(mu0 + amp.abs());
            let q = format!("{q_amp}*sin(2*pi*x/{l})");
            CoefficientField::from_strs(&a_str, &q, &mu, l, Some(tp))?
        }
        Family::QuasiPeriodicTime => {
            let mu0 = positive("mu0", num_param(params, "mu0", 1.0)?)?;
            let a1 = num_param(params, "amp1", 0.3)?;
            let a2 = num_param(params, "amp2", 0.3)?;
            let w2 = positive("omega2", num_param(params, "omega2", std::f64::consts::SQRT_2)?)?;
            let l = positive("period", num_param(params, "period", two_pi)?)?;
            let mu = format!("{mu0} + {a1}*sin(t) + {a2}*sin({w2}*t)");
            mu_sup_exact = Some(mu0 + a1.abs() + a2.abs());
            CoefficientField::from_strs(&a_str, "0", &mu, l, None)?
        }
        Family::AdvectionTime => {
            let mu0 = positive("mu0", num_param(params, "mu0", 1.0)?)?;
            let q_src = text_param(params, "q", "0.5");
            let q_ex = Expression::parse(&q_src)?;
            if q_ex.uses(Var::X) || q_ex.uses(Var::U) {
                return Err(invalid("q", "advection_time requires a drift depending on t only"));
            }
            let l = positive("period", num_param(params, "period", two_pi)?)?;
            let tp = match params.get("time_period") {
                Some(_) => Some(positive("time_period", num_param(params, "time_period", 1.0)?)?),
                None => None,
            };
            mu_sup_exact = Some(mu0);
            // u_t - u_xx - q(t) u_x: the drift coefficient is -q(t).
            let q = Expression::from_node(crate::expr::Node::Neg(Box::new(q_ex.root().clone())));
            CoefficientField::new(Expression::constant(1.0), q, Expression::constant(mu0), l, tp)?
        }
    };
    if cf.bounds.mu_inf <= 0.0 {
        return Err(invalid(
            "amplitude",
            format!("inf mu = {} must be positive for {family}", cf.bounds.mu_inf),
        ));
    }
    cf.family = Some(family);
    cf.params = params.clone();
    let mut rt = ReactionTerm::logistic(&cf);
    rt.kpp_constant_c = match mu_sup_exact {
        Some(v) => v,
        // Grid sampling can miss the peak; pad by a sliver of the oscillation.
        None => cf.bounds.mu_sup + 0.01 * (cf.bounds.mu_sup - cf.bounds.mu_inf),
    };
    Ok((cf, rt))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kv: &[(&str, ParamValue)]) -> Params {
        kv.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn homogeneous_bounds() {
        let (cf, rt) = make_builtin(Family::Homogeneous, &params(&[("mu0", ParamValue::Number(1.0))])).unwrap();
        let b = &cf.bounds;
        assert_eq!((b.alpha_lower, b.alpha_upper, b.q_sup), (1.0, 1.0, 0.0));
        assert_eq!((b.mu_inf, b.mu_sup), (1.0, 1.0));
        assert_eq!(rt.kpp_constant_c, 1.0);
        assert_eq!(rt.f(&cf, 0.3, 2.0, 0.5), 0.25);
    }

    #[test]
    fn advection_drift_sign() {
        let (cf, _) = make_builtin(Family::AdvectionTime, &params(&[("q", ParamValue::Text("0.5".into()))])).unwrap();
        assert_eq!(cf.q_at(0.0, 0.0), -0.5);
        assert_eq!(cf.bounds.q_sup, 0.5);
    }

    #[test]
    fn cosine_extrema() {
        let cf = CoefficientField::from_strs("1", "0", "1+0.5*cos(2*pi*x)", 1.0, None).unwrap();
        let b = sample_bounds(&cf, 64, 0.0).unwrap();
        assert!((b.mu_inf - 0.5).abs() < 1e-12);
        assert!((b.mu_sup - 1.5).abs() < 1e-12);
        let coarse = sample_bounds(&cf, 18, 0.0).unwrap();
        let fine = sample_bounds(&cf, 36, 0.0).unwrap();
        assert!(fine.mu_inf <= coarse.mu_inf && fine.mu_sup >= coarse.mu_sup);
        assert!((cf.mu_min_at(3.0) - 0.5f64).abs() < 1e-12);
    }

    #[test]
    fn time_only_envelopes_are_exact() {
        let (cf, _) = make_builtin(Family::TimeOnly, &params(&[("mu_expr", ParamValue::Text("1+0.5*sin(t)".into()))])).unwrap();
        for t in [0.0, 0.7, 2.5, 10.0] {
            let m = 1.0 + 0.5 * f64::sin(t);
            assert_eq!(cf.mu_min_at(t), m);
            assert_eq!(cf.mu_max_at(t), m);
        }
        assert!(!cf.depends_on_x() && cf.depends_on_t());
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = |f: Family, kv: &[(&str, ParamValue)]| make_builtin(f, &params(kv)).is_err();
        assert!(bad(Family::Homogeneous, &[("mu0", ParamValue::Number(0.0))]));
        assert!(bad(Family::Homogeneous, &[("mu0", ParamValue::Number(-1.0))]));
        assert!(bad(Family::SpacePeriodic, &[("period", ParamValue::Number(0.0))]));
        assert!(bad(Family::SpacePeriodic, &[("amplitude", ParamValue::Number(1.5))]));
        assert!(bad(Family::TimeOnly, &[("mu_expr", ParamValue::Text("sin(t)".into()))]));
        assert!(bad(Family::TimeOnly, &[("mu_expr", ParamValue::Text("1+x".into()))]));
        assert!(bad(Family::Homogeneous, &[("a", ParamValue::Number(-1.0))]));
    }

    #[test]
    fn builtins_satisfy_reaction_and_periodicity_invariants() {
        for fam in Family::ALL {
            let (cf, rt) = make_builtin(fam, &Params::new()).unwrap();
            let rep = check_kpp(&cf, &rt, 64, 64, 17);
            assert!(rep.holds(1e-12), "{fam}: {rep:?}");
            assert!(cf.periodicity_defect(64, 16, 10.0) < 1e-12, "{fam}");
            assert!(cf.bounds.mu_inf > 0.0);
        }
    }

    #[test]
    fn simpson_integrates_sine() {
        let cf = CoefficientField::from_strs("1", "0", "1", 1.0, None).unwrap();
        let v: f64 = cf.integrate_in_time(f64::sin, 0.0, 1.0, 64);
        assert!((v - (1.0 - 1f64.cos())).abs() < 1e-9);
    }
}
