//! Closed-form critical speeds of the spatially homogeneous families.

use crate::coefficients::{make_builtin, CoefficientField, Family, Params};
use crate::error::{Error, Result};
use crate::expr::{Bindings, Expression};
use crate::means::{least_mean, upper_mean, SampledFunction};

/// Horizon and step of the samples the oracle averages.
const ORACLE_HORIZON: f64 = 4000.0;
const ORACLE_STEP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct Oracle {
    pub family: Family,
    pub lambda_star: f64,
    pub c_star: f64,
    /// `lm(mu)`.
    pub mu_least_mean: f64,
    /// `um(q)` of the drift `q(t)` in `u_t - u_xx - q(t) u_x`, when present.
    pub q_upper_mean: Option<f64>,
    /// Formula for `c_lambda(t)`.
    pub c_lambda: String,
}

fn sampled_mean(e: &Expression, upper: bool) -> Result<f64> {
    let g = SampledFunction::from_fn(ORACLE_STEP, ORACLE_HORIZON, |t| e.eval_raw(&Bindings::xt(0.0, t)))?;
    let t_max = ORACLE_HORIZON / 2.0;
    Ok(if upper { upper_mean(&g, t_max)? } else { least_mean(&g, t_max)? }.value)
}

fn diffusion(cf: &CoefficientField) -> f64 {
    cf.a.as_constant().unwrap_or(cf.bounds.alpha_lower)
}

/// `lambda_* = sqrt(lm(mu) / a)` and `c_* = 2 sqrt(a lm(mu)) - um(q)`.
pub fn oracle(family: Family, params: &Params) -> Result<Oracle> {
    let (cf, _) = make_builtin(family, params)?;
    let a = diffusion(&cf);
    match family {
        Family::Homogeneous | Family::TimeOnly => {
            let m = sampled_mean(&cf.mu, false)?;
            Ok(Oracle {
                family,
                lambda_star: (m / a).sqrt(),
                c_star: 2.0 * (a * m).sqrt(),
                mu_least_mean: m,
                q_upper_mean: None,
                c_lambda: format!("{a} lambda + mu(t) / lambda"),
            })
        }
        Family::AdvectionTime => {
            let m = sampled_mean(&cf.mu, false)?;
            // The field stores the drift coefficient -q(t).
            let q = -sampled_mean(&cf.q, false)?;
            Ok(Oracle {
                family,
                lambda_star: m.sqrt(),
                c_star: 2.0 * m.sqrt() - q,
                mu_least_mean: m,
                q_upper_mean: Some(q),
                c_lambda: "lambda - q(t) + mu0 / lambda".into(),
            })
        }
        other => Err(Error::Unsupported(format!("no closed form for {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::ParamValue;

    #[test]
    fn closed_forms() {
        let h = oracle(Family::Homogeneous, &Params::new()).unwrap();
        assert!((h.lambda_star - 1.0).abs() < 1e-12 && (h.c_star - 2.0).abs() < 1e-12, "{h:?}");
        let t = oracle(Family::TimeOnly, &Params::new()).unwrap();
        assert!((t.c_star - 2.0).abs() < 1e-3);
        let mut p = Params::new();
        p.insert("q".into(), ParamValue::Text("0.5".into()));
        let q = oracle(Family::AdvectionTime, &p).unwrap();
        assert!((q.c_star - 1.5).abs() < 1e-9);
        assert!(oracle(Family::SpacePeriodic, &Params::new()).is_err());
    }

    #[test]
    fn oscillating_drift_uses_upper_mean() {
        let mut p = Params::new();
        p.insert("q".into(), ParamValue::Text("0.5 + 0.2*sin(t)".into()));
        let q = oracle(Family::AdvectionTime, &p).unwrap();
        assert!((q.q_upper_mean.unwrap() - 0.5).abs() < 1e-3);
        assert!((q.c_star - 1.5).abs() < 1e-3);
    }
}
