//! The acceptance suite: eight criteria over the builtin families, run at
//! full resolution by the test harness and at reduced resolution by the
//! command-line `verify`.
//!
//! Expensive per-family results (speed curves, eigenvalue curves, fronts)
//! are computed once and shared between criteria.

use std::cell::OnceCell;
use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::barriers::{barrier_check, BarrierOptions};
use crate::coefficients::{make_builtin, CoefficientField, Family, ParamValue, Params, ReactionTerm};
use crate::eta::{harnack_report, HARNACK_FLOOR};
use crate::front::{measured_speed_analysis, simulate_front, FrontOptions, FrontTrace, InitialData};
use crate::means::{construct_sigma, least_mean, window_grid, SampledFunction};
use crate::parabolic::{step_nonlinear_line, DriftSign, LineGrid, StateVector};
use crate::speed::{
    analyse_speeds, eta_for_rate, kappa_curve, least_mean_speed, oracle, EigenCurve, EigenOptions, LambdaStar,
    MuMeans, SpeedCurve, SpeedOptions, ENVELOPE_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// The resolutions of the acceptance criteria.
    Full,
    /// Coarser grids and shorter horizons; same tolerances. Fronts keep
    /// their full length since the log delay of shorter runs is comparable
    /// to the tolerance of the measured speed.
    Reduced,
}

/// Resolutions used by a profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub profile: Profile,
    pub homogeneous_n_x: usize,
    /// Grid for the other x-independent families.
    pub time_n_x: usize,
    /// Grid for families that depend on x.
    pub space_n_x: usize,
    pub horizon: usize,
    pub quasi_periodic_horizon: usize,
    pub t_sim: f64,
    pub front_dx: f64,
    pub mean_inputs: usize,
    pub sigma_inputs: usize,
    pub comparison_pairs: usize,
    pub barrier_families: Vec<Family>,
}

impl Settings {
    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Full => Settings {
                profile,
                homogeneous_n_x: 128,
                time_n_x: 64,
                space_n_x: 32,
                horizon: 200,
                quasi_periodic_horizon: 2000,
                t_sim: 200.0,
                front_dx: 0.1,
                mean_inputs: 200,
                sigma_inputs: 100,
                comparison_pairs: 100,
                barrier_families: Family::ALL.to_vec(),
            },
            Profile::Reduced => Settings {
                profile,
                homogeneous_n_x: 32,
                time_n_x: 32,
                space_n_x: 32,
                horizon: 100,
                quasi_periodic_horizon: 1000,
                t_sim: 200.0,
                front_dx: 0.1,
                mean_inputs: 200,
                sigma_inputs: 100,
                comparison_pairs: 100,
                barrier_families: vec![Family::Homogeneous, Family::TimeOnly, Family::AdvectionTime],
            },
        }
    }
}

/// One line of the suite's report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
    pub seconds: f64,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {} {}: {} ({:.1} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.seconds
        )?;
        if !self.details.is_empty() {
            write!(f, " | {}", self.details.join("; "))?;
        }
        Ok(())
    }
}

pub const CRITERIA: [(u8, &str); 8] = [
    (1, "homogeneous KPP: lambda_* and c_* within tolerance, under 60 s"),
    (2, "time-only growth: c_lambda, lm(mu) and c_*"),
    (3, "advection example: c_* = 2 sqrt(mu0) - ceil(q)"),
    (4, "space-periodic growth: least-mean and Floquet speeds agree, k convex"),
    (5, "non-existence bound c^* against c_* and measured fronts"),
    (6, "front simulations against c_* and lm(c_0.5)"),
    (7, "property suites"),
    (8, "quasi-periodic growth: converged least mean inside the envelope"),
];

/// Cases 1-4 of the suite.
const CASES: [Family; 4] = [
    Family::Homogeneous,
    Family::TimeOnly,
    Family::AdvectionTime,
    Family::SpacePeriodic,
];

struct CaseRun {
    cf: CoefficientField,
    rt: ReactionTerm,
    opts: SpeedOptions,
    curve: SpeedCurve<f64>,
    star: LambdaStar<f64>,
    seconds: f64,
}

type Cached<T> = OnceCell<std::result::Result<T, String>>;

/// Runs criteria, caching the per-case computations.
pub struct Suite {
    pub settings: Settings,
    pub seed: u64,
    cases: [Cached<CaseRun>; 4],
    eigen: [Cached<EigenCurve<f64>>; 4],
    fronts: [Cached<FrontTrace<f64>>; 4],
}

fn case_params(family: Family) -> Params {
    let mut p = Params::new();
    match family {
        // The period lets the Floquet computation treat mu(t) as periodic.
        Family::TimeOnly => {
            p.insert("time_period".into(), ParamValue::Number(2.0 * PI));
        }
        Family::AdvectionTime => {
            p.insert("mu0".into(), ParamValue::Number(1.0));
            p.insert("q".into(), ParamValue::Text("0.5".into()));
        }
        _ => {}
    }
    p
}

fn rel_err(v: f64, target: f64) -> f64 {
    (v - target).abs() / target.abs()
}

fn check(details: &mut Vec<String>, ok: bool, msg: String) -> bool {
    details.push(if ok { msg } else { format!("FAILED {msg}") });
    ok
}

impl Suite {
    pub fn new(profile: Profile, seed: u64) -> Self {
        Suite {
            settings: Settings::for_profile(profile),
            seed,
            cases: Default::default(),
            eigen: Default::default(),
            fronts: Default::default(),
        }
    }

    fn n_x_for(&self, family: Family, cf: &CoefficientField) -> usize {
        if family == Family::Homogeneous {
            self.settings.homogeneous_n_x
        } else if cf.depends_on_x() {
            self.settings.space_n_x
        } else {
            self.settings.time_n_x
        }
    }

    fn case(&self, i: usize) -> std::result::Result<&CaseRun, String> {
        self.cases[i]
            .get_or_init(|| {
                let family = CASES[i];
                let (cf, rt) = make_builtin(family, &case_params(family)).map_err(|e| e.to_string())?;
                let opts = SpeedOptions {
                    n_x: self.n_x_for(family, &cf),
                    horizon: self.settings.horizon,
                    ..SpeedOptions::default()
                };
                let start = Instant::now();
                let (curve, star) = analyse_speeds(&cf, &opts).map_err(|e| format!("{family}: {e}"))?;
                Ok(CaseRun {
                    cf,
                    rt,
                    opts,
                    curve,
                    star,
                    seconds: start.elapsed().as_secs_f64(),
                })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn eigen(&self, i: usize) -> std::result::Result<&EigenCurve<f64>, String> {
        self.eigen[i]
            .get_or_init(|| {
                let run = self.case(i)?;
                let eo = EigenOptions {
                    n_x: run.opts.n_x,
                    ..EigenOptions::default()
                };
                kappa_curve(&run.cf, &run.curve.lambda_grid, &eo).map_err(|e| format!("{}: {e}", CASES[i]))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn front_options(&self) -> FrontOptions {
        FrontOptions {
            t_sim: self.settings.t_sim,
            dx: self.settings.front_dx,
            snapshot_every: None,
            ..FrontOptions::default()
        }
    }

    fn front(&self, i: usize) -> std::result::Result<&FrontTrace<f64>, String> {
        self.fronts[i]
            .get_or_init(|| {
                let run = self.case(i)?;
                simulate_front(&run.cf, &run.rt, InitialData::Step, &self.front_options())
                    .map_err(|e| format!("{}: {e}", CASES[i]))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn run(&self, id: u8) -> CriterionOutcome {
        let start = Instant::now();
        let mut details = Vec::new();
        let passed = match id {
            1 => self.criterion_1(&mut details),
            2 => self.criterion_2(&mut details),
            3 => self.criterion_3(&mut details),
            4 => self.criterion_4(&mut details),
            5 => self.criterion_5(&mut details),
            6 => self.criterion_6(&mut details),
            7 => self.criterion_7(&mut details),
            8 => self.criterion_8(&mut details),
            _ => Err(format!("no criterion {id}")),
        };
        let passed = passed.unwrap_or_else(|e| {
            details.push(format!("error: {e}"));
            false
        });
        CriterionOutcome {
            id,
            title: CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1),
            passed,
            details,
            seconds: start.elapsed().as_secs_f64(),
        }
    }

    pub fn run_all(&self) -> Vec<CriterionOutcome> {
        CRITERIA.iter().map(|(id, _)| self.run(*id)).collect()
    }

    fn criterion_1(&self, d: &mut Vec<String>) -> std::result::Result<bool, String> {
        let run = self.case(0)?;
        let c_oracle = oracle(Family::Homogeneous, &Params::new()).map_err(|e| e.to_string())?.c_star;
        let a = check(d, rel_err(run.star.lambda_star, 1.0) <= 0.02, format!("lambda_* = {:.5}", run.star.lambda_star));
        let b = check(d, rel_err(run.star.c_star, c_oracle) <= 0.01, format!("c_* = {:.5} (oracle {c_oracle})", run.star.c_star));
        let c = check(
            d,
            run.seconds < 60.0,
            format!("pipeline {:.1} s at n_x = {}, horizon {}", run.seconds, run.opts.n_x, run.opts.horizon),
        );
        Ok(a && b && c)
    }

    fn criterion_2(&self, d: &mut Vec<String>) -> std::result::Result<bool, String> {
        let run = self.case(1)?;
        let mut worst: f64 = 0.0;
        for lambda in [0.5, 1.0, 2.0] {
            let es = eta_for_rate(&run.cf, lambda, &run.opts, DriftSign::Plus).map_err(|e| e.to_string())?;
            for (n, c) in es.c_samples.iter().enumerate() {
                let t0 = es.t_origin + n as f64;
                let integral = run.cf.integrate_in_time(|t: f64| run.cf.mu_at(0.0, t), t0, t0 + 1.0, 64);
                worst = worst.max((c - lambda - integral / lambda).abs());
            }
        }
        let a = check(d, worst <= 1e-4, format!("max |c_n - lambda - int mu / lambda| = {worst:.2e}"));
        let o = oracle(Family::TimeOnly, &case_params(Family::TimeOnly)).map_err(|e| e.to_string())?;
        let b = check(d, rel_err(o.mu_least_mean, 1.0) <= 0.02, format!("lm(mu) = {:.5}", o.mu_least_mean));
        let c = check(d, rel_err(run.star.c_star, 2.0) <= 0.02, format!("c_* = {:.5}", run.star.c_star));
        Ok(a && b && c)
    }

    fn criterion_3(&self, d: &mut Vec<String>) -> std::result::Result<bool, String> {
        let run = self.case(2)?;
        let o = oracle(Family::AdvectionTime, &case_params(Family::AdvectionTime)).map_err(|e| e.to_string())?;
        Ok(check(
            d,
            rel_err(run.star.c_star, o.c_star) <= 0.02,
            format!("c_* = {:.5} (closed form {})", run.star.c_star, o.c_star),
        ))
    }

    fn criterion_4(&self, d: &mut Vec<String>) -> std::result::Result<bool, String> {
        let run = self.case(3)?;
        let ec = self.eigen(3)?;
        let a = check(
            d,
            rel_err(run.star.c_star, ec.c_star_floquet) <= 0.01,
            format!(
                "c_* = {:.5}, min k/lambda = {:.5} at lambda = {:.4}",
                run.star.c_star, ec.c_star_floquet, ec.lambda_floquet
            ),
        );
        let b = check(d, ec.convex(), format!("min second difference of k = {:.3e}", ec.convexity_min));
        Ok(a && b)
    }

    fn criterion_5(&self, d: &mut Vec<String>) -> std::result::Result<bool, String> {
        let mut ok = true;
        for (i, family) in CASES.iter().enumerate() {
            let run = self.case(i)?;
            let ec = self.eigen(i)?;
            let trace = self.front(i)?;
            let c_upper = ec.c_star_lower;
            ok &= check(
                d,
                c_upper <= run.star.c_star + 1e-2,
                format!("{family}: c^* = {c_upper:.5} vs c_* = {:.5}", run.star.c_star),
            );
            let n = trace.post_burn_in_speeds().len();
            let t_max = (n / 2) as f64 * self.front_options().record_dt;
            let ms = measured_speed_analysis(trace, t_max, Some(c_upper)).map_err(|e| format!("{family}: {e}"))?;
            ok &= check(
                d,
                ms.satisfies_lower_bound == Some(true),
                format!("{family}: lm(front speed) = {:.4}", ms.estimate.value),
            );
        }
        Ok(ok)
    }

    fn criterion_6(&self, d: &mut Vec<String>) -> std::result::Result<bool, String> {
        let mut ok = true;
        for (i, family) in CASES.iter().enumerate() {
            let run = self.case(i)?;
            let trace = self.front(i)?;
            let v = trace.fitted_speed.unwrap_or(f64::NAN);
            ok &= check(
                d,
                rel_err(v, run.star.c_star) <= 0.03,
                format!("{family}: fitted speed {v:.4} vs c_* = {:.4}", run.star.c_star),
            );
        }
        let run = self.case(0)?;
        let lambda0 = 0.5;
        let target = least_mean_speed(&run.cf, lambda0, &run.opts).map_err(|e| e.to_string())?.value;
        let trace: FrontTrace<f64> = simulate_front(&run.cf, &run.rt, InitialData::Exponential(lambda0), &self.front_options())
            .map_err(|e| e.to_string())?;
        let v = trace.fitted_speed.unwrap_or(f64::NAN);
        ok &= check(
            d,
            rel_err(v, target) <= 0.03 && rel_err(target, lambda0 + 1.0 / lambda0) <= 1e-3,
            format!("exponential data: fitted speed {v:.4} vs lm(c_0.5) = {target:.5} (closed form 2.5)"),
        );
        Ok(ok)
    }

    fn criterion_7(&self, d: &mut Vec<String>) -> std::result::Result<bool, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut ok = true;
        ok &= check_least_mean(d, &mut rng, self.settings.mean_inputs);
        ok &= check_sigma(d, &mut rng, self.settings.sigma_inputs);
        ok &= self.check_harnack(d)?;
        ok &= self.check_envelopes(d)?;
        ok &= self.check_barriers(d)?;
        ok &= check_comparison(d, &mut rng, self.settings.comparison_pairs)?;
        Ok(ok)
    }

    fn check_harnack(&self, d: &mut Vec<String>) -> std::result::Result<bool, String> {
        let mut worst = f64::INFINITY;
        let mut drift: f64 = 0.0;
        let mut failures = Vec::new();
        for family in Family::ALL {
            let (cf, _) = make_builtin(family, &Params::new()).map_err(|e| e.to_string())?;
            let opts = SpeedOptions {
                n_x: self.settings.space_n_x,
                horizon: self.settings.horizon,
                ..SpeedOptions::default()
            };
            let es = eta_for_rate(&cf, 1.0, &opts, DriftSign::Plus).map_err(|e| e.to_string())?;
            let h = es.harnack_ratios.len();
            let min_of = |r: &[f64]| r.iter().copied().fold(f64::INFINITY, f64::min);
            let early = min_of(&es.harnack_ratios[..h / 2]);
            let late = min_of(&es.harnack_ratios[h / 2..]);
            worst = worst.min(early.min(late));
            drift = drift.max(early / late);
            let report = harnack_report(&es, &cf);
            if early.min(late) < HARNACK_FLOOR || late < 0.5 * early || report.is_err() {
                failures.push(family.name());
            }
        }
        Ok(check(
            d,
            failures.is_empty(),
            format!(
                "Harnack ratio >= {worst:.3e} on all builtins, early/late minimum ratio <= {drift:.3}{}",
                if failures.is_empty() { String::new() } else { format!(", failing {failures:?}") }
            ),
        ))
    }

    fn check_envelopes(&self, d: &mut Vec<String>) -> std::result::Result<bool, String> {
        let mut ok = true;
        for (i, family) in CASES.iter().enumerate() {
            let run = self.case(i)?;
            let rep = run.curve.check_invariants(&run.cf, &run.opts).map_err(|e| e.to_string())?;
            let ec = self.eigen(i)?;
            ok &= check(
                d,
                rep.holds() && ec.phi1_holds(),
                format!(
                    "{family}: envelope excess {:.1e}/{:.1e}, phi = 1 excess {:.1e}",
                    rep.lm_envelope_excess, rep.um_envelope_excess, ec.phi1_excess
                ),
            );
        }
        Ok(ok)
    }

    fn check_barriers(&self, d: &mut Vec<String>) -> std::result::Result<bool, String> {
        let opts = BarrierOptions {
            n_x: 32,
            ..BarrierOptions::default()
        };
        let mut super_min = f64::INFINITY;
        let mut sub_max = f64::NEG_INFINITY;
        let mut failures = Vec::new();
        for &family in &self.settings.barrier_families {
            let (cf, rt) = make_builtin(family, &Params::new()).map_err(|e| e.to_string())?;
            match barrier_check(&cf, &rt, &opts) {
                Ok(r) => {
                    super_min = super_min.min(r.super_min_residual);
                    sub_max = sub_max.max(r.sub_max_residual);
                    if !r.holds() {
                        failures.push(family.name());
                    }
                }
                Err(_) => failures.push(family.name()),
            }
        }
        Ok(check(
            d,
            failures.is_empty(),
            format!(
                "barrier residuals: super >= {super_min:.2e}, sub <= {sub_max:.2e} on {} families{}",
                self.settings.barrier_families.len(),
                if failures.is_empty() { String::new() } else { format!(", failing {failures:?}") }
            ),
        ))
    }

    fn criterion_8(&self, d: &mut Vec<String>) -> std::result::Result<bool, String> {
        let (cf, _) = make_builtin(Family::QuasiPeriodicTime, &Params::new()).map_err(|e| e.to_string())?;
        let opts = SpeedOptions {
            n_x: self.settings.space_n_x,
            horizon: self.settings.quasi_periodic_horizon,
            ..SpeedOptions::default()
        };
        let (_, star) = analyse_speeds(&cf, &opts).map_err(|e| e.to_string())?;
        let means = MuMeans::compute(&cf, opts.horizon, opts.t_max()).map_err(|e| e.to_string())?;
        let (lo, hi) = means.lm_bounds(&cf, star.lambda_star);
        let a = check(
            d,
            star.c_star_warning.is_none(),
            format!(
                "lambda_* = {:.4}, c_* = {:.5} at horizon {}{}",
                star.lambda_star,
                star.c_star,
                opts.horizon,
                star.c_star_warning.as_deref().map(|w| format!(" ({w})")).unwrap_or_default()
            ),
        );
        let b = check(
            d,
            star.c_star >= lo - ENVELOPE_TOL && star.c_star <= hi + ENVELOPE_TOL,
            format!("envelope [{lo:.5}, {hi:.5}]"),
        );
        Ok(a && b)
    }
}

fn random_samples(rng: &mut ChaCha8Rng) -> SampledFunction<f64> {
    let h = [0.1, 0.25, 0.5, 1.0][rng.gen_range(0..4)];
    let n = (rng.gen_range(20.0..80.0) / h) as usize;
    let (a, b, w) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.1..3.0));
    let noise = rng.gen_range(0.0..0.5);
    let vals = (0..=n)
        .map(|i| a + b * (w * i as f64 * h).sin() + noise * rng.gen_range(-1.0..1.0))
        .collect();
    SampledFunction::points(h, vals).expect("positive step")
}

/// Direct double loop over windows and starting points.
fn brute_least_mean(g: &SampledFunction<f64>, t_max: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for w in window_grid(g.h, t_max) {
        let worst = (0..=g.cells() - w)
            .map(|j| (j..j + w).map(|i| g.cell_mean(i)).sum::<f64>() / w as f64)
            .fold(f64::INFINITY, f64::min);
        best = best.max(worst);
    }
    best
}

fn check_least_mean(d: &mut Vec<String>, rng: &mut ChaCha8Rng, inputs: usize) -> bool {
    let mut worst: f64 = 0.0;
    for _ in 0..inputs {
        let g = random_samples(rng);
        let t_max = (g.horizon() / 2.0 * rng.gen_range(0.3..1.0)).max(g.h);
        let fast = least_mean(&g, t_max).map(|e| e.value).unwrap_or(f64::NAN);
        worst = worst.max((fast - brute_least_mean(&g, t_max)).abs());
    }
    check(d, worst <= 1e-12, format!("least mean vs brute force on {inputs} inputs: {worst:.1e}"))
}

fn check_sigma(d: &mut Vec<String>, rng: &mut ChaCha8Rng, inputs: usize) -> bool {
    let mut worst = f64::INFINITY;
    let mut all = true;
    for _ in 0..inputs {
        let g = random_samples(rng);
        let eps = rng.gen_range(0.01..0.2);
        match construct_sigma(&g, eps) {
            Ok((_, cert)) => {
                worst = worst.min(cert.inf_sigma_prime_plus_g - (cert.least_mean - eps));
                all &= cert.holds;
            }
            Err(_) => all = false,
        }
    }
    check(
        d,
        all,
        format!("sigma certificates on {inputs} inputs: inf(sigma' + g) - (lm g - eps) >= {worst:.2e}"),
    )
}

fn check_comparison(d: &mut Vec<String>, rng: &mut ChaCha8Rng, pairs: usize) -> std::result::Result<bool, String> {
    let mut worst = f64::NEG_INFINITY;
    for k in 0..pairs {
        let family = Family::ALL[k % Family::ALL.len()];
        let (cf, rt) = make_builtin(family, &Params::new()).map_err(|e| e.to_string())?;
        let g = LineGrid::<f64>::with_spacing(&cf, 0.0, 10.0, 0.05, 1.0).map_err(|e| e.to_string())?;
        let mut u = StateVector::constant(g.n_x, 0.0, rng.gen_range(0.0..5.0));
        let mut v = u.clone();
        for j in 0..g.n_x {
            let (a, b): (f64, f64) = (rng.gen(), rng.gen());
            u.values[j] = a.min(b);
            v.values[j] = a.max(b);
        }
        u.values[0] = 1.0;
        v.values[0] = 1.0;
        for _ in 0..5 {
            u = step_nonlinear_line(&u, &g, &cf, &rt).map_err(|e| e.to_string())?;
            v = step_nonlinear_line(&v, &g, &cf, &rt).map_err(|e| e.to_string())?;
            let gap = u.values.iter().zip(&v.values).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max(gap);
        }
    }
    Ok(check(
        d,
        worst <= 1e-10,
        format!("comparison on {pairs} ordered pairs: max(u - v) = {worst:.1e}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_criterion_fails() {
        let s = Suite::new(Profile::Reduced, 1);
        let r = s.run(9);
        assert!(!r.passed);
        assert!(r.to_string().starts_with("criterion 9 FAIL"));
    }

    #[test]
    fn brute_force_matches_on_constant() {
        let g = SampledFunction::points(0.5, vec![0.3; 41]).unwrap();
        assert!((brute_least_mean(&g, 10.0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn random_suites_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut d = Vec::new();
        assert!(check_least_mean(&mut d, &mut rng, 20));
        assert!(check_sigma(&mut d, &mut rng, 20));
        assert!(check_comparison(&mut d, &mut rng, 7).unwrap());
        assert_eq!(d.len(), 3);
    }
}
