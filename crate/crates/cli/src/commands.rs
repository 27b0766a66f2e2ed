use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use frontspeed::eta::harnack_report;
use frontspeed::export;
use frontspeed::front::{measured_speed_analysis, simulate_front, transition_wave_check, FrontTrace};
use frontspeed::parabolic::DriftSign;
use frontspeed::speed::{
    eta_for_rate, find_lambda_star, floquet_grid, floquet_rate, kappa_curve, oracle, speed_curve, EigenCurve,
};
use frontspeed::verification::{Profile, Suite};
use frontspeed::{CoefficientField, Error};
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::Command;

/// Output directory and the files written so far.
struct Artifacts<'a> {
    cfg: &'a RunConfig,
    dir: PathBuf,
    written: Vec<String>,
}

impl<'a> Artifacts<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self> {
        let dir = cfg.output.directory.clone();
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Artifacts {
            cfg,
            dir,
            written: Vec::new(),
        })
    }

    fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> frontspeed::Result<()>) -> Result<()> {
        if self.cfg.wants(Format::Csv) {
            let mut w = self.file(name)?;
            write(&mut w)?;
            w.flush()?;
        }
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        if self.cfg.wants(Format::Json) {
            let mut w = self.file(name)?;
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
            w.flush()?;
        }
        Ok(())
    }

    /// The resolved config with a `run` block; loading it re-runs the job.
    fn manifest(mut self, command: Command, seconds: f64, passed: bool) -> Result<()> {
        let mut m = serde_json::to_value(self.cfg)?;
        let run = json!({
            "subcommand": command.name(),
            "version": env!("CARGO_PKG_VERSION"),
            "wall_time_seconds": seconds,
            "passed": passed,
            "artifacts": self.written,
        });
        m.as_object_mut().expect("config serialises to an object").insert("run".into(), run);
        let mut w = self.file("manifest.json")?;
        serde_json::to_writer_pretty(&mut w, &m)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

/// Eigenvalue curve on the same rates, when the coefficients admit a time
/// period.
fn optional_eigen(cfg: &RunConfig, cf: &CoefficientField, grid: &[f64]) -> Result<Option<EigenCurve<f64>>> {
    match kappa_curve(cf, grid, &cfg.eigen_options()) {
        Ok(ec) => Ok(Some(ec)),
        Err(Error::Unsupported(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Echoes to stdout; a closed pipe is not an error of the run.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn print(v: &Value) {
    say(&serde_json::to_string_pretty(v).expect("serialisable"));
}

fn eta(cfg: &RunConfig, art: &mut Artifacts) -> Result<bool> {
    let (cf, _) = cfg.field()?;
    let lambda = cfg.analysis.lambda;
    let opts = cfg.speed_options();
    let es = eta_for_rate(&cf, lambda, &opts, DriftSign::Plus)?;
    let c = es.speed_function();
    let t_max = opts.t_max();
    let lm = frontspeed::means::least_mean(&c, t_max)?;
    let um = frontspeed::means::upper_mean(&c, t_max)?;
    let (report, envelope_error) = match harnack_report(&es, &cf) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    art.csv("eta.csv", |w| export::write_eta(w, &es))?;
    art.csv("lm_trace.csv", |w| export::write_mean_trace(w, &lm))?;
    let warnings: Vec<&String> = [&lm.warning, &um.warning].into_iter().flatten().collect();
    let summary = json!({
        "lambda": lambda,
        "lm_c": lm.value,
        "um_c": um.value,
        "burn_in": es.burn_in,
        "burn_in_distance": es.burn_in_distance,
        "min_harnack_ratio": es.min_harnack(),
        "harnack": report.as_ref().map(|r| json!({
            "inf_ratio": r.inf_ratio,
            "sup_ratio": r.sup_ratio,
            "ratio_spread": r.ratio_spread,
            "upper_excess": r.upper_excess,
            "lower_excess": r.lower_excess,
            "beta": r.beta,
            "lipschitz_excess": r.lipschitz_excess,
            "speed_bound_excess": r.speed_bound_excess,
        })),
        "envelope_error": envelope_error,
        "warnings": warnings,
    });
    art.json("eta.json", &summary)?;
    print(&summary);
    Ok(envelope_error.is_none())
}

fn speeds(cfg: &RunConfig, art: &mut Artifacts, with_star: bool) -> Result<bool> {
    let (cf, _) = cfg.field()?;
    let opts = cfg.speed_options();
    let grid = cfg.lambda_grid(&cf)?;
    let mut sc = speed_curve(&cf, &grid, &opts)?;
    let mut summary = json!({});
    if with_star {
        let star = find_lambda_star(&sc, &cf, &opts)?;
        sc.lambda_star = Some(star.lambda_star);
        sc.c_star = Some(star.c_star);
        sc.warnings.extend(star.warnings.iter().cloned());
        summary["lambda_star"] = json!(star.lambda_star);
        summary["c_star"] = json!(star.c_star);
        summary["bracket"] = json!([star.bracket.0, star.bracket.1]);
        summary["bisection_steps"] = json!(star.bisection_steps);
    }
    let ec = optional_eigen(cfg, &cf, &grid)?;
    let report = sc.check_invariants(&cf, &opts)?;
    art.csv("speed_curve.csv", |w| export::write_speed_curve(w, &sc, ec.as_ref()))?;
    summary["c_star_floquet"] = json!(ec.as_ref().map(|e| e.c_star_floquet));
    summary["c_star_lower"] = json!(ec.as_ref().map(|e| e.c_star_lower));
    summary["invariants"] = json!({
        "holds": report.holds(),
        "order_excess": report.order_excess,
        "lm_envelope_excess": report.lm_envelope_excess,
        "um_envelope_excess": report.um_envelope_excess,
        "monotone_excess": report.monotone_excess,
        "lipschitz_ratio": report.lipschitz_ratio,
    });
    summary["failures"] = json!(sc.failures);
    summary["warnings"] = json!(sc.warnings);
    art.json(if with_star { "lambda_star.json" } else { "speed_curve.json" }, &summary)?;
    print(&summary);
    Ok(report.holds())
}

fn floquet(cfg: &RunConfig, art: &mut Artifacts) -> Result<bool> {
    let (cf, _) = cfg.field()?;
    let lambda = cfg.analysis.lambda;
    let eo = cfg.eigen_options();
    let grid = floquet_grid(&cf, eo.n_x, lambda, eo.safety, eo.max_dt)?;
    let plus = floquet_rate(&cf, lambda, &grid, DriftSign::Plus)?;
    let minus = floquet_rate(&cf, lambda, &grid, DriftSign::Minus)?;
    let summary = json!({
        "lambda": lambda,
        "k_lambda": plus.k,
        "kappa_lambda": -minus.k,
        "speed": plus.k / lambda,
        "time_period": plus.time_period,
        "periods": [plus.periods, minus.periods],
    });
    art.json("floquet.json", &summary)?;
    print(&summary);
    Ok(true)
}

fn kappa(cfg: &RunConfig, art: &mut Artifacts) -> Result<bool> {
    let (cf, _) = cfg.field()?;
    let grid = cfg.lambda_grid(&cf)?;
    let ec = kappa_curve(&cf, &grid, &cfg.eigen_options())?;
    art.csv("kappa.csv", |w| export::write_eigen_curve(w, &ec))?;
    let summary = json!({
        "c_star_floquet": ec.c_star_floquet,
        "lambda_floquet": ec.lambda_floquet,
        "c_star_lower": ec.c_star_lower,
        "c_star_lower_plus": ec.c_star_lower_plus,
        "phi1_excess": ec.phi1_excess,
        "phi1_holds": ec.phi1_holds(),
        "convexity_min": ec.convexity_min,
        "convex": ec.convex(),
    });
    art.json("kappa.json", &summary)?;
    print(&summary);
    Ok(ec.phi1_holds() && ec.convex())
}

fn simulate(cfg: &RunConfig, art: &mut Artifacts) -> Result<bool> {
    let (cf, rt) = cfg.field()?;
    let trace: FrontTrace<f64> = simulate_front(&cf, &rt, cfg.initial_data(), &cfg.front_options())?;
    art.csv("front.csv", |w| export::write_front(w, &trace))?;
    if cfg.simulate.snapshot_every.is_some() {
        art.csv("snapshots.csv", |w| export::write_snapshots(w, &trace))?;
    }
    let wave = transition_wave_check(&trace);
    let n = trace.post_burn_in_speeds().len();
    let t_max = (n / 2) as f64 * cfg.simulate.record_dt;
    let measured = if trace.no_front || t_max <= 0.0 {
        None
    } else {
        measured_speed_analysis(&trace, t_max, None).ok()
    };
    let summary = json!({
        "no_front": trace.no_front,
        "fitted_speed": trace.fitted_speed,
        "speed_least_mean": measured.as_ref().map(|m| m.estimate.value),
        "burn_in_time": trace.burn_in_time,
        "monotone_defect": trace.monotone_defect(),
        "clip_total": trace.clip_total,
        "domain": [trace.grid.x_min, trace.grid.x_max],
        "wave": {
            "offsets": wave.offsets,
            "behind": wave.behind,
            "ahead": wave.ahead,
            "monotone": wave.monotone,
            "ahead_decay_rate": wave.ahead_decay_rate,
            "snapshots_used": wave.snapshots_used,
        },
    });
    art.json("front.json", &summary)?;
    print(&summary);
    Ok(true)
}

fn closed_form(cfg: &RunConfig, art: &mut Artifacts) -> Result<bool> {
    let Some(family) = cfg.family() else {
        bail!("oracle: needs a builtin family");
    };
    let o = oracle(family, &cfg.coefficients.params)?;
    let summary = json!({
        "family": family.name(),
        "lambda_star": o.lambda_star,
        "c_star": o.c_star,
        "mu_least_mean": o.mu_least_mean,
        "q_upper_mean": o.q_upper_mean,
        "c_lambda": o.c_lambda,
    });
    art.json("oracle.json", &summary)?;
    print(&summary);
    Ok(true)
}

fn verify(cfg: &RunConfig, art: &mut Artifacts, full: bool) -> Result<bool> {
    let suite = Suite::new(if full { Profile::Full } else { Profile::Reduced }, cfg.seed);
    let mut outcomes = Vec::new();
    for o in suite.run_all() {
        say(&o.to_string());
        outcomes.push(o);
    }
    let passed = outcomes.iter().all(|o| o.passed);
    art.json(
        "verify.json",
        &json!({ "passed": passed, "settings": suite.settings, "seed": cfg.seed, "criteria": outcomes }),
    )?;
    Ok(passed)
}

/// Runs one subcommand and writes its artifacts and manifest. Returns
/// whether every check of the subcommand passed.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<bool> {
    let start = Instant::now();
    let mut art = Artifacts::new(cfg)?;
    let passed = match command {
        Command::Eta => eta(cfg, &mut art),
        Command::SpeedCurve => speeds(cfg, &mut art, false),
        Command::LambdaStar => speeds(cfg, &mut art, true),
        Command::Floquet => floquet(cfg, &mut art),
        Command::Kappa => kappa(cfg, &mut art),
        Command::Simulate => simulate(cfg, &mut art),
        Command::Oracle => closed_form(cfg, &mut art),
        Command::Verify { full } => verify(cfg, &mut art, full),
    }
    .with_context(|| format!("{} failed", command.name()))?;
    art.manifest(command, start.elapsed().as_secs_f64(), passed)?;
    Ok(passed)
}
