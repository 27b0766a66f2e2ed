//! Residual checks of the barriers built from `eta_lambda`:
//!
//! ```text
//! w = min(e^{-lambda x} eta_lambda, 1)                        (supersolution)
//! v = e^{-lambda x} eta_lambda - m psi,
//! psi = exp(sigma(t) - lambda' (x - S_lambda(t) + S_lambda'(t))) eta_lambda'   (subsolution where v > 0)
//! ```
//!
//! with `lambda < lambda' < (1 + nu) lambda`, `sigma` the bounded corrector
//! of `g = lambda' (c_lambda - c_lambda')` and `m` large enough that `v <= 0`
//! behind `S_lambda` and the reaction deficit is absorbed.

use crate::coefficients::{CoefficientField, ReactionTerm};
use crate::error::{invalid, Result};
use crate::eta::{compute_eta, fine_trajectory, EtaOptions, EtaSolution, FineTrajectory};
use crate::means::{construct_sigma, SampledFunction, SigmaCertificate};
use crate::parabolic::{residual, CellGrid, Candidate, ResidualGrid};
use crate::scalar::Real;

pub const SUPER_TOL: f64 = 1e-4;
pub const SUB_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierOptions {
    pub n_x: usize,
    pub lambda: f64,
    pub lambda_prime: f64,
    pub horizon: usize,
    /// First integer time (after the origin) of the checked window.
    pub window_start: usize,
    pub window_units: usize,
    /// Multiplier of the correction; chosen from the computed bounds when
    /// `None`.
    pub m: Option<f64>,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions {
            n_x: 64,
            lambda: 0.5,
            lambda_prime: 0.75,
            horizon: 60,
            window_start: 10,
            window_units: 2,
            m: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierReport {
    /// Smallest unmasked residual of `w`.
    pub super_min_residual: f64,
    /// Largest unmasked residual of `v` where `v > 0`.
    pub sub_max_residual: f64,
    /// Number of unmasked points with `v > 0`.
    pub sub_positive_points: usize,
    pub masked_points: usize,
    pub m: f64,
    pub sigma: SigmaCertificate<f64>,
}

impl BarrierReport {
    pub fn holds(&self) -> bool {
        self.super_min_residual >= -SUPER_TOL && self.sub_max_residual <= SUB_TOL && self.sub_positive_points > 0
    }
}

struct Super<'a, T> {
    ft: &'a FineTrajectory<T>,
    lambda: T,
}

impl<T: Real> Super<'_, T> {
    fn exponent(&self, x: T, t: T) -> T {
        self.ft.log_eta_at(x, t) - self.lambda * x
    }
}

impl<T: Real> Candidate<T> for Super<'_, T> {
    fn value(&self, x: T, t: T) -> T {
        self.exponent(x, t).exp().min(T::one())
    }

    fn piece(&self, x: T, t: T) -> i64 {
        (self.exponent(x, t) < T::zero()) as i64
    }
}

struct Sub<'a, T> {
    lam: &'a FineTrajectory<T>,
    lam_p: &'a FineTrajectory<T>,
    es: &'a EtaSolution<T>,
    es_p: &'a EtaSolution<T>,
    sigma: &'a SampledFunction<T>,
    m: T,
}

impl<T: Real> Sub<'_, T> {
    fn rel(&self, t: T) -> T {
        t - self.es.t_origin
    }

    fn sigma_at(&self, t: T) -> T {
        let s = self.rel(t).max(T::zero());
        let n = s.floor().to_usize().unwrap_or(0).min(self.sigma.values.len() - 2);
        let f = s - T::from_usize_lossy(n);
        self.sigma.values[n] * (T::one() - f) + self.sigma.values[n + 1] * f
    }

    fn log_psi(&self, x: T, t: T) -> T {
        let lp = self.es_p.lambda;
        let r = self.rel(t);
        self.sigma_at(t) - lp * x + lp * (self.es.s_at(r) - self.es_p.s_at(r)) + self.lam_p.log_eta_at(x, t)
    }
}

impl<T: Real> Candidate<T> for Sub<'_, T> {
    fn value(&self, x: T, t: T) -> T {
        (self.lam.log_eta_at(x, t) - self.es.lambda * x).exp() - self.m * self.log_psi(x, t).exp()
    }

    /// `sigma` and `S` are piecewise linear with kinks at integer times.
    fn piece(&self, _x: T, t: T) -> i64 {
        let r = self.rel(t);
        let eps = T::lit(1e-9);
        let n = r.floor();
        // Nodes at integer times belong to no open interval.
        if (r - n).abs() < eps || (r - n - T::one()).abs() < eps {
            -1 - n.to_i64().unwrap_or(0)
        } else {
            n.to_i64().unwrap_or(0)
        }
    }
}

/// Runs both checks on the window `[t0 + s, t0 + s + units]`.
pub fn barrier_check(cf: &CoefficientField, rt: &ReactionTerm, opts: &BarrierOptions) -> Result<BarrierReport> {
    let (lam, lam_p) = (opts.lambda, opts.lambda_prime);
    let nu = rt.kpp_exponent_nu;
    if !(lam > 0.0 && lam < lam_p && lam_p < (1.0 + nu) * lam) {
        return Err(invalid("lambda_prime", "need lambda < lambda' < (1 + nu) lambda"));
    }
    if opts.window_start + opts.window_units + 1 > opts.horizon {
        return Err(invalid("window", "must end before the horizon"));
    }
    let grid = CellGrid::auto(opts.n_x, cf, lam_p, 1.0, 1.0)?;
    let eo = EtaOptions::with_horizon(opts.horizon);
    let es = compute_eta(cf, lam, &grid, &eo)?;
    let es_p = compute_eta(cf, lam_p, &grid, &eo)?;
    let g: Vec<f64> = es
        .c_samples
        .iter()
        .zip(&es_p.c_samples)
        .map(|(a, b)| lam_p * (a - b))
        .collect();
    let g = SampledFunction::cell_averages(1.0, g)?;
    let lm_g = crate::means::least_mean(&g, opts.horizon as f64 / 2.0)?.value;
    if !(lm_g > 0.0) {
        return Err(invalid(
            "lambda_prime",
            format!("least mean of lambda' (c_lambda - c_lambda') is {lm_g}; lambda is not below lambda_*"),
        ));
    }
    let (sigma, cert) = construct_sigma(&g, lm_g / 2.0)?;
    let (n0, n1) = (opts.window_start, opts.window_start + opts.window_units);
    let ft = fine_trajectory(&es, cf, n0, n1)?;
    let ft_p = fine_trajectory(&es_p, cf, n0, n1)?;

    let s0 = es.log_s[n0];
    let s1 = es.log_s[n1];
    let l = grid.period;
    let dx = grid.dx;
    let dt = grid.dt;
    let snap = |x: f64| (x / dx).floor() * dx;
    let window = (ft.t_start + dt, ft.t_end() - dt);

    let sup = Super { ft: &ft, lambda: lam };
    let x_lo = snap(s0 - 3.0 / lam - l);
    let x_hi = snap(s1 + 10.0 / lam);
    let rg = ResidualGrid {
        x_min: x_lo,
        dx,
        n_x: ((x_hi - x_lo) / dx) as usize,
        dt,
    };
    let rs = residual(&sup, window, &rg, cf, rt);
    let super_min = rs.min_where(|_| true).unwrap_or(f64::INFINITY);

    // phi = eta e^{-lambda S} over the window, and sigma bounds.
    let phi_range = |f: &FineTrajectory<f64>, e: &EtaSolution<f64>| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (k, row) in f.log_eta.iter().enumerate() {
            let t = f.t_start + dt * k as f64 - e.t_origin;
            let shift = e.lambda * e.s_at(t);
            for v in row {
                lo = lo.min((v - shift).exp());
                hi = hi.max((v - shift).exp());
            }
        }
        (lo, hi)
    };
    let (_, phi_hi) = phi_range(&ft, &es);
    let (phi_p_lo, _) = phi_range(&ft_p, &es_p);
    let sigma_lo = sigma.values[n0..=n1].iter().copied().fold(f64::INFINITY, f64::min);
    let base = phi_p_lo * sigma_lo.exp();
    let k_lower = cert.inf_sigma_prime_plus_g;
    let m1 = phi_hi / base;
    let m2 = rt.kpp_constant_c * phi_hi.powf(1.0 + nu) / (k_lower * base);
    let m = opts.m.unwrap_or(1.25 * m1.max(m2).max(1.0));

    let sub = Sub {
        lam: &ft,
        lam_p: &ft_p,
        es: &es,
        es_p: &es_p,
        sigma: &sigma,
        m,
    };
    // v > 0 only where (lambda' - lambda)(x - S_lambda) exceeds ln m.
    let reach = (m.ln().max(0.0) + 2.0 * lam_p * cf.period_l) / (lam_p - lam) + 10.0 / lam;
    let x_lo = snap(s0 - 2.0 - l);
    let x_hi = snap(s1 + reach);
    let rg = ResidualGrid {
        x_min: x_lo,
        dx,
        n_x: ((x_hi - x_lo) / dx) as usize,
        dt,
    };
    let rv = residual(&sub, window, &rg, cf, rt);
    let positive = rv.unmasked().filter(|(v, _)| *v > 0.0).count();
    let sub_max = rv.max_where(|v| v > 0.0).unwrap_or(f64::NEG_INFINITY);
    Ok(BarrierReport {
        super_min_residual: super_min,
        sub_max_residual: sub_max,
        sub_positive_points: positive,
        masked_points: rs.masked_count() + rv.masked_count(),
        m,
        sigma: cert,
    })
}
