//! Run configuration: JSON with every field optional, environment
//! overrides, validation with field paths, and resolution into the core
//! library's option structs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use frontspeed::coefficients::check_kpp;
use frontspeed::front::{FrontOptions, InitialData};
use frontspeed::speed::{default_lambda_grid, EigenOptions, SpeedOptions, DEFAULT_GRID_POINTS};
use frontspeed::{make_builtin, CoefficientField, Expression, Family, Params, ReactionTerm};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Environment variables `FRONTSPEED_<BLOCK>__<FIELD>` override config
/// fields, e.g. `FRONTSPEED_NUMERICS__N_X=64`. Values are parsed as JSON and
/// fall back to plain strings.
pub const ENV_PREFIX: &str = "FRONTSPEED_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub coefficients: CoefficientsConfig,
    pub reaction: ReactionConfig,
    pub numerics: NumericsConfig,
    pub analysis: AnalysisConfig,
    pub simulate: SimulateConfig,
    pub output: OutputConfig,
    pub seed: u64,
    /// Worker threads; all available when absent.
    pub threads: Option<usize>,
    /// Written into manifests and ignored on input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<Value>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            coefficients: CoefficientsConfig::default(),
            reaction: ReactionConfig::default(),
            numerics: NumericsConfig::default(),
            analysis: AnalysisConfig::default(),
            simulate: SimulateConfig::default(),
            output: OutputConfig::default(),
            seed: 0,
            threads: None,
            run: None,
        }
    }
}

/// Either a builtin family with parameters, or expression strings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientsConfig {
    pub builtin: Option<String>,
    pub params: Params,
    pub a: Option<String>,
    pub q: Option<String>,
    pub mu: Option<String>,
    pub period_l: Option<f64>,
    pub time_period: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReactionKindConfig {
    Logistic,
    Expression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReactionConfig {
    pub kind: ReactionKindConfig,
    /// `f(x, t, u)` for `kind = expression`.
    pub f: Option<String>,
    /// KPP constant `C`; `sup mu` when absent.
    pub c: Option<f64>,
    pub nu: f64,
    pub delta: f64,
}

impl Default for ReactionConfig {
    fn default() -> Self {
        ReactionConfig {
            kind: ReactionKindConfig::Logistic,
            f: None,
            c: None,
            nu: 1.0,
            delta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub n_x: usize,
    /// Upper limit on the cell time step; the positivity bound applies
    /// regardless.
    pub dt: Option<f64>,
    pub horizon: usize,
    pub burn_in: usize,
    /// Largest averaging window; half the horizon when absent.
    pub t_max: Option<f64>,
    pub safety: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let s = SpeedOptions::default();
        NumericsConfig {
            n_x: s.n_x,
            dt: None,
            horizon: s.horizon,
            burn_in: s.burn_in,
            t_max: None,
            safety: s.safety,
        }
    }
}

/// Rates: an explicit list, or a geometric grid. `min`/`max` default to the
/// library's choice around `sqrt(lm(min_x mu) / a_min)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaGridConfig {
    pub values: Option<Vec<f64>>,
    pub points: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl Default for LambdaGridConfig {
    fn default() -> Self {
        LambdaGridConfig {
            values: None,
            points: DEFAULT_GRID_POINTS,
            min: None,
            max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub lambda_grid: LambdaGridConfig,
    /// Rate for the single-rate subcommands `eta` and `floquet`.
    pub lambda: f64,
    pub k0: f64,
    pub delta_tol: f64,
    pub refine_tol: f64,
    /// Golden-section tolerance for the Floquet minimum; none disables it.
    pub floquet_refine_tol: Option<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let s = SpeedOptions::default();
        AnalysisConfig {
            lambda_grid: LambdaGridConfig::default(),
            lambda: 1.0,
            k0: s.k0,
            delta_tol: s.delta_tol,
            refine_tol: s.refine_tol,
            floquet_refine_tol: EigenOptions::default().refine_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitConfig {
    Step,
    Exponential,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub init: InitConfig,
    pub lambda0: f64,
    pub t_sim: f64,
    pub dx: f64,
    pub theta: f64,
    pub record_dt: f64,
    /// `[x_min, x_max]`; chosen from the coefficient bounds when absent.
    pub domain: Option<[f64; 2]>,
    /// Keep every n-th recorded profile; no snapshots when absent.
    pub snapshot_every: Option<usize>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        let f = FrontOptions::default();
        SimulateConfig {
            init: InitConfig::Step,
            lambda0: 0.5,
            t_sim: f.t_sim,
            dx: f.dx,
            theta: f.theta,
            record_dt: f.record_dt,
            domain: None,
            snapshot_every: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

/// Sets `path` (segments of a `__`-separated key) in a JSON object tree.
fn set_path(root: &mut Value, path: &[String], value: Value) -> Result<()> {
    let mut node = root;
    for (i, key) in path.iter().enumerate() {
        let obj = match node {
            Value::Object(m) => m,
            Value::Null => {
                *node = Value::Object(Default::default());
                node.as_object_mut().expect("just created")
            }
            _ => bail!("{}: not an object", path[..i].join(".")),
        };
        if i + 1 == path.len() {
            obj.insert(key.clone(), value);
            return Ok(());
        }
        node = obj.entry(key.clone()).or_insert(Value::Null);
    }
    Ok(())
}

fn apply_env(root: &mut Value, vars: impl IntoIterator<Item = (String, String)>) -> Result<()> {
    let mut overrides: BTreeMap<String, String> = BTreeMap::new();
    for (k, v) in vars {
        if let Some(rest) = k.strip_prefix(ENV_PREFIX) {
            overrides.insert(rest.to_ascii_lowercase(), v);
        }
    }
    for (key, raw) in overrides {
        let path: Vec<String> = key.split("__").map(str::to_string).collect();
        let value = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
        set_path(root, &path, value).with_context(|| format!("environment override {ENV_PREFIX}{key}"))?;
    }
    Ok(())
}

fn from_value(v: Value) -> Result<RunConfig> {
    let cfg: RunConfig = serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("config field `{path}`: {}", e.into_inner())
    })?;
    let mut cfg = cfg;
    cfg.fill_defaults();
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Reads `path` (or starts from the defaults) and applies the given
    /// environment variables.
    pub fn load(path: Option<&Path>, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut root = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => Value::Object(Default::default()),
        };
        apply_env(&mut root, env)?;
        from_value(root)
    }

    #[cfg(test)]
    pub fn from_json(text: &str) -> Result<Self> {
        from_value(serde_json::from_str(text)?)
    }

    /// Makes implicit choices explicit so that the echoed config re-runs
    /// identically: no coefficients means the homogeneous family, and
    /// expression coefficients get `a = 1`, `q = 0`, `l = 1`.
    pub fn fill_defaults(&mut self) {
        let c = &mut self.coefficients;
        if c.builtin.is_none() {
            if c.a.is_none() && c.q.is_none() && c.mu.is_none() {
                c.builtin = Some(Family::Homogeneous.name().into());
            } else {
                c.a.get_or_insert_with(|| "1".into());
                c.q.get_or_insert_with(|| "0".into());
                c.period_l.get_or_insert(1.0);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.coefficients;
        let exprs = c.a.is_some() || c.q.is_some() || c.mu.is_some();
        match (&c.builtin, exprs) {
            (Some(_), true) => bail!("coefficients: give either `builtin` or expressions `a`, `q`, `mu`, not both"),
            (None, false) => bail!("coefficients: need `builtin` or at least `mu`"),
            (None, true) if c.mu.is_none() => bail!("coefficients.mu: required with expression coefficients"),
            (None, true) if !c.params.is_empty() => bail!("coefficients.params: only used with `builtin`"),
            (Some(name), false) => {
                name.parse::<Family>().map_err(|e| anyhow::anyhow!("coefficients.builtin: {e}"))?;
            }
            _ => {}
        }
        let positive = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                bail!("{name}: must be positive, got {v}")
            }
        };
        for (name, v) in [("coefficients.period_l", c.period_l), ("coefficients.time_period", c.time_period)] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        let n = &self.numerics;
        if n.n_x == 0 || n.horizon == 0 {
            bail!("numerics.n_x and numerics.horizon: must be positive");
        }
        if let Some(dt) = n.dt {
            positive("numerics.dt", dt)?;
        }
        if let Some(t) = n.t_max {
            positive("numerics.t_max", t)?;
        }
        positive("numerics.safety", n.safety)?;
        let a = &self.analysis;
        positive("analysis.lambda", a.lambda)?;
        positive("analysis.k0", a.k0)?;
        positive("analysis.delta_tol", a.delta_tol)?;
        positive("analysis.refine_tol", a.refine_tol)?;
        if let Some(t) = a.floquet_refine_tol {
            positive("analysis.floquet_refine_tol", t)?;
        }
        let g = &a.lambda_grid;
        match &g.values {
            Some(v) => {
                if v.is_empty() || v.iter().any(|l| !(*l > 0.0)) || v.windows(2).any(|w| w[1] <= w[0]) {
                    bail!("analysis.lambda_grid.values: need positive increasing rates");
                }
            }
            None => {
                if g.points < 2 {
                    bail!("analysis.lambda_grid.points: need at least 2");
                }
                for (name, v) in [("analysis.lambda_grid.min", g.min), ("analysis.lambda_grid.max", g.max)] {
                    if let Some(v) = v {
                        positive(name, v)?;
                    }
                }
            }
        }
        let s = &self.simulate;
        positive("simulate.lambda0", s.lambda0)?;
        positive("simulate.t_sim", s.t_sim)?;
        positive("simulate.dx", s.dx)?;
        positive("simulate.record_dt", s.record_dt)?;
        if !(s.theta > 0.0 && s.theta < 1.0) {
            bail!("simulate.theta: must lie in (0, 1)");
        }
        if let Some([lo, hi]) = s.domain {
            if !(hi > lo) {
                bail!("simulate.domain: need x_min < x_max");
            }
        }
        if s.snapshot_every == Some(0) {
            bail!("simulate.snapshot_every: must be positive");
        }
        if self.reaction.kind == ReactionKindConfig::Expression && self.reaction.f.is_none() {
            bail!("reaction.f: required for kind = expression");
        }
        if self.threads == Some(0) {
            bail!("threads: must be positive");
        }
        Ok(())
    }

    pub fn family(&self) -> Option<Family> {
        self.coefficients.builtin.as_ref().and_then(|n| n.parse().ok())
    }

    pub fn field(&self) -> Result<(CoefficientField, ReactionTerm)> {
        let c = &self.coefficients;
        let (cf, logistic) = match self.family() {
            Some(fam) => make_builtin(fam, &c.params)?,
            None => {
                let cf = CoefficientField::from_strs(
                    c.a.as_deref().unwrap_or("1"),
                    c.q.as_deref().unwrap_or("0"),
                    c.mu.as_deref().unwrap_or("1"),
                    c.period_l.unwrap_or(1.0),
                    c.time_period,
                )
                .context("coefficients")?;
                let rt = ReactionTerm::logistic(&cf);
                (cf, rt)
            }
        };
        let r = &self.reaction;
        let rt = match r.kind {
            ReactionKindConfig::Logistic => logistic,
            ReactionKindConfig::Expression => {
                let f = Expression::parse(r.f.as_deref().expect("validated")).context("reaction.f")?;
                let rt = ReactionTerm::expression(f, r.c.unwrap_or(cf.bounds.mu_sup), r.nu, r.delta)
                    .context("reaction")?;
                let report = check_kpp(&cf, &rt, 32, 32, 32);
                if !report.holds(1e-9) {
                    bail!("reaction.f: KPP conditions fail: {report:?}");
                }
                rt
            }
        };
        Ok((cf, rt))
    }

    pub fn speed_options(&self) -> SpeedOptions {
        let n = &self.numerics;
        let a = &self.analysis;
        SpeedOptions {
            n_x: n.n_x,
            horizon: n.horizon,
            burn_in: n.burn_in,
            t_max: n.t_max,
            k0: a.k0,
            delta_tol: a.delta_tol,
            refine_tol: a.refine_tol,
            safety: n.safety,
            max_dt: n.dt,
        }
    }

    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions {
            n_x: self.numerics.n_x,
            safety: self.numerics.safety,
            max_dt: self.numerics.dt,
            refine_tol: self.analysis.floquet_refine_tol,
        }
    }

    pub fn front_options(&self) -> FrontOptions {
        let s = &self.simulate;
        FrontOptions {
            theta: s.theta,
            t_sim: s.t_sim,
            dx: s.dx,
            record_dt: s.record_dt,
            domain: s.domain.map(|[a, b]| (a, b)),
            snapshot_every: s.snapshot_every,
        }
    }

    pub fn initial_data(&self) -> InitialData {
        match self.simulate.init {
            InitConfig::Step => InitialData::Step,
            InitConfig::Exponential => InitialData::Exponential(self.simulate.lambda0),
            InitConfig::Zero => InitialData::Zero,
        }
    }

    pub fn lambda_grid(&self, cf: &CoefficientField) -> Result<Vec<f64>> {
        let g = &self.analysis.lambda_grid;
        if let Some(v) = &g.values {
            return Ok(v.clone());
        }
        let base = default_lambda_grid(cf, g.points, &self.speed_options())?;
        let lo = g.min.unwrap_or(base[0]);
        let hi = g.max.unwrap_or(base[base.len() - 1]);
        if !(hi > lo) {
            bail!("analysis.lambda_grid: need min < max, got [{lo}, {hi}]");
        }
        let (a, b) = (lo.ln(), hi.ln());
        Ok((0..g.points)
            .map(|i| (a + (b - a) * i as f64 / (g.points - 1) as f64).exp())
            .collect())
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_every_block() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg.family(), Some(Family::Homogeneous));
        let echoed = serde_json::to_value(&cfg).unwrap();
        for block in ["coefficients", "reaction", "numerics", "analysis", "simulate", "output"] {
            assert!(echoed.get(block).is_some(), "{block}");
        }
        assert_eq!(echoed["numerics"]["n_x"], 128);
    }

    #[test]
    fn errors_name_the_field() {
        let e = RunConfig::from_json(r#"{"numerics": {"n_x": "many"}}"#).unwrap_err();
        assert!(e.to_string().contains("numerics.n_x"), "{e}");
        let e = RunConfig::from_json(r#"{"simulate": {"theta": 1.5}}"#).unwrap_err();
        assert!(e.to_string().contains("simulate.theta"), "{e}");
        let e = RunConfig::from_json(r#"{"analysis": {"lambda_gird": {}}}"#).unwrap_err();
        assert!(e.to_string().contains("analysis"), "{e}");
        let e = RunConfig::from_json(r#"{"coefficients": {"builtin": "homogeneous", "mu": "1"}}"#).unwrap_err();
        assert!(e.to_string().contains("coefficients"), "{e}");
    }

    #[test]
    fn environment_overrides() {
        let env = vec![
            ("FRONTSPEED_NUMERICS__N_X".to_string(), "64".to_string()),
            ("FRONTSPEED_COEFFICIENTS__BUILTIN".to_string(), "time_only".to_string()),
            ("FRONTSPEED_COEFFICIENTS__PARAMS__MU_EXPR".to_string(), "1 + 0.2*cos(t)".to_string()),
            ("UNRELATED".to_string(), "1".to_string()),
        ];
        let cfg = RunConfig::load(None, env).unwrap();
        assert_eq!(cfg.numerics.n_x, 64);
        assert_eq!(cfg.family(), Some(Family::TimeOnly));
        let (cf, _) = cfg.field().unwrap();
        assert!((cf.bounds.mu_sup - 1.2).abs() < 1e-6);
    }

    #[test]
    fn expression_coefficients() {
        let cfg = RunConfig::from_json(
            r#"{"coefficients": {"mu": "1 + 0.5*cos(2*pi*x)", "period_l": 1},
                "reaction": {"kind": "expression", "f": "mu*u*(1-u)"}}"#,
        );
        // `mu` is not a variable of reaction expressions.
        assert!(cfg.unwrap().field().is_err());
        let cfg = RunConfig::from_json(
            r#"{"coefficients": {"mu": "1 + 0.5*cos(2*pi*x)", "period_l": 1},
                "reaction": {"kind": "expression", "f": "(1 + 0.5*cos(2*pi*x))*u*(1-u)"}}"#,
        )
        .unwrap();
        let (cf, rt) = cfg.field().unwrap();
        assert!(cf.depends_on_x());
        assert!(!rt.is_logistic());
    }

    #[test]
    fn lambda_grids() {
        let cfg = RunConfig::from_json(r#"{"analysis": {"lambda_grid": {"points": 5, "min": 0.5, "max": 2}}}"#).unwrap();
        let (cf, _) = cfg.field().unwrap();
        let g = cfg.lambda_grid(&cf).unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[0] - 0.5).abs() < 1e-12 && (g[4] - 2.0).abs() < 1e-12 && (g[2] - 1.0).abs() < 1e-12);
        let e = RunConfig::from_json(r#"{"analysis": {"lambda_grid": {"values": [1, 0.5]}}}"#).unwrap_err();
        assert!(e.to_string().contains("values"));
    }
}
