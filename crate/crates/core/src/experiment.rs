//! Batch experiments: configuration, execution, and rendering of the
//! `rates.csv`, `region.json` and `summary.json` artifacts.
//!
//! Runners return file contents rather than writing them, so every byte a
//! command-line run emits is reproducible from this API alone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::channel::{
    channel_from_json, channel_to_json, generate_compound, verify_rank_condition, ChannelError, ChannelGenSpec,
    ChannelParseError, User, MAX_DIMENSION,
};
use crate::ergodic::{
    averaged_secrecy_rates, ergodic_region, f_classifier, policy_slope_target, symmetric_point, ErgodicError,
    FadingProcess, PowerPolicy, DEFAULT_COMMON_STATES,
};
use crate::gaussian::{
    build_beamformers, certify, constant_state_region, equal_power, max_leakage, scheme_dof, worst_case_rates,
    GaussianError,
};
use crate::matcore::RankTolerance;
use crate::region::{region_to_value, RateRegion, RegionError, Q};
use crate::rng::{derive_seed, DOMAIN_TRIAL};
use crate::sdof::{db_to_power, fit_slope, SdofEstimate, DEFAULT_SNR_GRID_DB, MIN_GRID_DB};

/// Allowed gap between an estimated slope and its analytic target.
pub const SLOPE_TOLERANCE: f64 = 0.05;
pub const DEFAULT_BLOCKS: u64 = 10_000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error(transparent)]
    Ergodic(#[from] ErgodicError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    ChannelParse(#[from] ChannelParseError),
    #[error(transparent)]
    Region(#[from] RegionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Gaussian,
    Ergodic,
}

fn one() -> usize {
    1
}

fn default_grid() -> Vec<f64> {
    DEFAULT_SNR_GRID_DB.to_vec()
}

fn default_blocks() -> u64 {
    DEFAULT_BLOCKS
}

fn default_common_states() -> usize {
    DEFAULT_COMMON_STATES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: Option<Model>,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N1", default = "one")]
    pub n1: usize,
    #[serde(rename = "N2", default = "one")]
    pub n2: usize,
    #[serde(rename = "J1")]
    pub j1: usize,
    #[serde(rename = "J2")]
    pub j2: usize,
    #[serde(default)]
    pub r1: usize,
    #[serde(default)]
    pub r2: usize,
    #[serde(default = "default_grid")]
    pub snr_db_grid: Vec<f64>,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default = "default_blocks")]
    pub blocks: u64,
    #[serde(default)]
    pub seed: u64,
    /// `None` runs full1, full2 and equal.
    #[serde(default)]
    pub power_policy: Option<PowerPolicy>,
    #[serde(default = "default_common_states")]
    pub common_state_count: usize,
    #[serde(default)]
    pub out: Option<String>,
}

/// Field names accepted as overrides; string-typed ones are never parsed as
/// JSON.
pub const CONFIG_FIELDS: [&str; 15] = [
    "model",
    "M",
    "N1",
    "N2",
    "J1",
    "J2",
    "r1",
    "r2",
    "snr_db_grid",
    "trials",
    "blocks",
    "seed",
    "power_policy",
    "common_state_count",
    "out",
];
const STRING_FIELDS: [&str; 3] = ["model", "power_policy", "out"];

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        Self::with_overrides(Some(text), &[])
    }

    /// Merges `key = value` overrides into an optional JSON document, then
    /// parses and validates. Numeric fields take JSON literals; the grid also
    /// takes a bare comma-separated list.
    pub fn with_overrides(base: Option<&str>, overrides: &[(&str, &str)]) -> Result<Self, ExperimentError> {
        let mut doc = match base {
            Some(text) => match serde_json::from_str::<Value>(text) {
                Ok(Value::Object(map)) => map,
                Ok(_) => return Err(ExperimentError::Config("configuration must be a JSON object".into())),
                Err(e) => {
                    return Err(ExperimentError::Config(format!("line {}, column {}: {e}", e.line(), e.column())))
                }
            },
            None => Map::new(),
        };
        for &(key, raw) in overrides {
            if !CONFIG_FIELDS.contains(&key) {
                return Err(ExperimentError::Config(format!("unknown field {key:?}")));
            }
            let value = if STRING_FIELDS.contains(&key) {
                Value::String(raw.to_owned())
            } else {
                let text = if key == "snr_db_grid" && !raw.trim_start().starts_with('[') {
                    format!("[{raw}]")
                } else {
                    raw.to_owned()
                };
                serde_json::from_str(&text).map_err(|e| ExperimentError::Config(format!("--{key} {raw:?}: {e}")))?
            };
            doc.insert(key.to_owned(), value);
        }
        let cfg: Self =
            serde_json::from_value(Value::Object(doc)).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        for (name, v) in [("M", self.m), ("N1", self.n1), ("N2", self.n2), ("J1", self.j1), ("J2", self.j2)] {
            if v == 0 || v > MAX_DIMENSION {
                return bad(format!("{name} = {v} must lie in 1..={MAX_DIMENSION}"));
            }
        }
        if self.snr_db_grid.is_empty() {
            return bad("snr_db_grid is empty".into());
        }
        if self.snr_db_grid.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return bad("snr_db_grid values must be finite and >= 0 dB".into());
        }
        if self.snr_db_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("snr_db_grid must be strictly increasing".into());
        }
        if self.trials == 0 || self.blocks == 0 {
            return bad("trials and blocks must be at least 1".into());
        }
        if self.common_state_count == 0 || self.common_state_count > MAX_DIMENSION {
            return bad(format!("common_state_count must lie in 1..={MAX_DIMENSION}"));
        }
        Ok(())
    }

    fn check_model(&self, expected: Model) -> Result<(), ExperimentError> {
        match self.model {
            Some(m) if m != expected => {
                Err(ExperimentError::Config(format!("config model {m:?} does not match the {expected:?} command")))
            }
            _ => Ok(()),
        }
    }

    fn policies(&self) -> Vec<PowerPolicy> {
        match self.power_policy {
            Some(p) => vec![p],
            None => PowerPolicy::DEFAULTS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// No slope grid of at least the required span above the SNR floor.
    NotAssessed,
}

impl Verdict {
    fn from_checks(checks: Option<bool>) -> Self {
        match checks {
            Some(true) => Verdict::Pass,
            Some(false) => Verdict::Fail,
            None => Verdict::NotAssessed,
        }
    }
}

/// Output files in emission order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub files: Vec<(&'static str, String)>,
    pub verdict: Verdict,
}

impl RunArtifacts {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| *n == name).map(|(_, c)| c.as_str())
    }
}

/// Twelve significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn format_q(q: Q) -> String {
    if *q.denom() == 1 {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn q_list(v: &[Q]) -> Value {
    Value::Array(v.iter().map(|&q| Value::String(format_q(q))).collect())
}

fn to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Grid points at or above the slope floor, with their indices.
fn slope_points(grid: &[f64]) -> Vec<usize> {
    (0..grid.len()).filter(|&i| grid[i] >= MIN_GRID_DB).collect()
}

/// Fits one slope per column over the usable grid points, or `None` when
/// they do not form a valid slope grid.
fn fit_columns(grid: &[f64], columns: &[Vec<f64>]) -> Option<Vec<SdofEstimate>> {
    let idx = slope_points(grid);
    let sub: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
    columns.iter().map(|col| fit_slope(&sub, &idx.iter().map(|&i| col[i]).collect::<Vec<_>>()).ok()).collect()
}

fn slopes_pass(est: &[SdofEstimate], target: &[f64]) -> bool {
    est.iter().zip(target).all(|(e, t)| (e.slope - t).abs() <= SLOPE_TOLERANCE)
}

/// One `rates.csv` row of the constant-state model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianRow {
    pub snr_db: f64,
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub leakage_max: f64,
}

/// Trial-averaged worst-case rates and the largest leakage across trials,
/// one row per grid point. Trial `i` uses channel seed
/// `derive_seed(seed, DOMAIN_TRIAL, i)`.
pub fn gaussian_rows(cfg: &ExperimentConfig) -> Result<(Vec<GaussianRow>, Value), ExperimentError> {
    let tol = RankTolerance::DEFAULT;
    let built = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| -> Result<_, ExperimentError> {
            let spec =
                ChannelGenSpec::new(cfg.m, cfg.n1, cfg.n2, cfg.j1, cfg.j2, derive_seed(cfg.seed, DOMAIN_TRIAL, i));
            let ch = generate_compound(&spec, tol)?;
            let bf = build_beamformers(&ch, cfg.r1, cfg.r2, tol)?;
            let cert = certify(&ch, &bf, tol)?;
            Ok((ch, bf, cert))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let n = built.len() as f64;
    let mut rows = Vec::with_capacity(cfg.snr_db_grid.len());
    for &db in &cfg.snr_db_grid {
        let p = db_to_power(db);
        let per_trial = built
            .par_iter()
            .map(|(ch, bf, _)| -> Result<_, ExperimentError> {
                let pa = equal_power(bf, p);
                Ok((worst_case_rates(ch, bf, &pa)?, max_leakage(ch, bf, &pa)?))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut row = GaussianRow { snr_db: db, r0: 0.0, r1: 0.0, r2: 0.0, leakage_max: 0.0 };
        for (r, leak) in &per_trial {
            row.r0 += r.r0;
            row.r1 += r.r1;
            row.r2 += r.r2;
            row.leakage_max = row.leakage_max.max(*leak);
        }
        row.r0 /= n;
        row.r1 /= n;
        row.r2 /= n;
        rows.push(row);
    }

    let certs = json!({
        "max_leak_residual": built.iter().map(|b| b.2.max_leak_residual).fold(0.0, f64::max),
        "common_cross_residual": built.iter().map(|b| b.2.common_cross_residual).fold(0.0, f64::max),
        "max_gram_error": built.iter().map(|b| b.2.max_gram_error).fold(0.0, f64::max),
        "all_passed": built.iter().all(|b| b.2.passed()),
    });
    Ok((rows, certs))
}

pub fn render_gaussian_csv(rows: &[GaussianRow]) -> String {
    let mut s = String::from("snr_db,R0,R1,R2,leakage_max\n");
    for r in rows {
        let cells = [r.snr_db, r.r0, r.r1, r.r2, r.leakage_max].map(format_float);
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn run_gaussian(cfg: &ExperimentConfig) -> Result<RunArtifacts, ExperimentError> {
    cfg.check_model(Model::Gaussian)?;
    let region = constant_state_region(cfg.m, cfg.n1, cfg.n2, cfg.j1, cfg.j2)?;
    let (rows, certificates) = gaussian_rows(cfg)?;
    let target = scheme_dof(cfg.m, [cfg.n1, cfg.n2], [cfg.r1, cfg.r2]);
    let columns: Vec<Vec<f64>> = vec![
        rows.iter().map(|r| r.r0).collect(),
        rows.iter().map(|r| r.r1).collect(),
        rows.iter().map(|r| r.r2).collect(),
    ];
    let slopes = fit_columns(&cfg.snr_db_grid, &columns);
    let pass = slopes.as_ref().map(|s| slopes_pass(s, &target.to_f64()));
    let verdict = Verdict::from_checks(pass);

    let summary = json!({
        "model": "gaussian",
        "config": cfg,
        "target": q_list(&target.to_vec()),
        "target_in_region": region.contains(&target.to_vec()),
        "slopes": slopes,
        "tolerance": SLOPE_TOLERANCE,
        "verdict": verdict,
        "leakage_max": rows.iter().map(|r| r.leakage_max).fold(0.0, f64::max),
        "certificates": certificates,
    });
    Ok(RunArtifacts {
        files: vec![
            ("rates.csv", render_gaussian_csv(&rows)),
            ("region.json", pretty(&region_to_value(&region))),
            ("summary.json", pretty(&summary)),
        ],
        verdict,
    })
}

/// One `rates.csv` row of the ergodic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErgodicRow {
    pub snr_db: f64,
    pub policy: PowerPolicy,
    pub r1m: f64,
    pub r2m: f64,
    pub leak_violation_freq: f64,
}

pub fn fading_process(cfg: &ExperimentConfig) -> Result<FadingProcess, ExperimentError> {
    Ok(FadingProcess::new(cfg.m, cfg.j1, cfg.j2, cfg.common_state_count, cfg.seed, RankTolerance::DEFAULT)?)
}

/// Rows ordered by grid point, then policy.
pub fn ergodic_rows(cfg: &ExperimentConfig, fp: &FadingProcess) -> Result<Vec<ErgodicRow>, ExperimentError> {
    let mut rows = Vec::new();
    for &db in &cfg.snr_db_grid {
        for policy in cfg.policies() {
            let avg = averaged_secrecy_rates(fp, policy.powers(db_to_power(db)), cfg.blocks)?;
            rows.push(ErgodicRow {
                snr_db: db,
                policy,
                r1m: avg.mean[0],
                r2m: avg.mean[1],
                leak_violation_freq: avg.leak_violation_freq,
            });
        }
    }
    Ok(rows)
}

pub fn render_ergodic_csv(rows: &[ErgodicRow]) -> String {
    let mut s = String::from("snr_db,policy,R1m,R2m,leak_violation_freq\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            format_float(r.snr_db),
            r.policy,
            format_float(r.r1m),
            format_float(r.r2m),
            format_float(r.leak_violation_freq)
        ));
    }
    s
}

fn f_report(m: usize, j1: usize, j2: usize) -> Value {
    match f_classifier(m, j1, j2) {
        Ok((f, positive)) => json!({
            "f": format_q(f),
            "positive": positive,
            "r_s": format_q(symmetric_point(m, j1, j2)),
        }),
        Err(_) => Value::Null,
    }
}

pub fn run_ergodic(cfg: &ExperimentConfig) -> Result<RunArtifacts, ExperimentError> {
    cfg.check_model(Model::Ergodic)?;
    let region = ergodic_region(cfg.m, cfg.j1, cfg.j2)?;
    let fp = fading_process(cfg)?;
    let rows = ergodic_rows(cfg, &fp)?;

    let mut policies = Vec::new();
    let mut checks = Some(true);
    for policy in cfg.policies() {
        let mine: Vec<&ErgodicRow> = rows.iter().filter(|r| r.policy == policy).collect();
        let columns = vec![mine.iter().map(|r| r.r1m).collect(), mine.iter().map(|r| r.r2m).collect()];
        let target = policy_slope_target(cfg.m, cfg.j1, cfg.j2, policy);
        let slopes = fit_columns(&cfg.snr_db_grid, &columns);
        let pass = slopes.as_ref().map(|s| slopes_pass(s, &target.map(to_f64)));
        checks = match (checks, pass) {
            (Some(a), Some(b)) => Some(a && b),
            _ => None,
        };
        policies.push(json!({
            "policy": policy,
            "target": q_list(&target),
            "target_in_region": region.contains(&target),
            "slopes": slopes,
            "pass": pass,
            "leak_violation_freq_max": mine.iter().map(|r| r.leak_violation_freq).fold(0.0, f64::max),
        }));
    }
    let verdict = Verdict::from_checks(checks);
    let summary = json!({
        "model": "ergodic",
        "config": cfg,
        "f": f_report(cfg.m, cfg.j1, cfg.j2),
        "region_vertices": region.outer_vertices().iter().map(|v| q_list(v)).collect::<Vec<_>>(),
        "policies": policies,
        "tolerance": SLOPE_TOLERANCE,
        "verdict": verdict,
    });
    Ok(RunArtifacts {
        files: vec![
            ("rates.csv", render_ergodic_csv(&rows)),
            ("region.json", pretty(&region_to_value(&region))),
            ("summary.json", pretty(&summary)),
        ],
        verdict,
    })
}

/// The two analytic `(r1, r2)` regions on matched parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelComparison {
    pub ergodic: RateRegion<Q>,
    /// Constant-state region projected onto the confidential axes.
    pub gaussian: RateRegion<Q>,
    pub ergodic_dominates: bool,
    pub gaussian_dominates: bool,
    /// Ergodic vertices outside the constant-state region, largest
    /// coordinate sum first.
    pub witnesses: Vec<Vec<Q>>,
}

impl ModelComparison {
    pub fn strictly_better(&self) -> bool {
        self.ergodic_dominates && !self.gaussian_dominates
    }

    pub fn to_value(&self) -> Value {
        json!({
            "ergodic_region": region_to_value(&self.ergodic),
            "gaussian_region": region_to_value(&self.gaussian),
            "ergodic_dominates_gaussian": self.ergodic_dominates,
            "gaussian_dominates_ergodic": self.gaussian_dominates,
            "ergodic_strictly_larger": self.strictly_better(),
            "witnesses": self.witnesses.iter().map(|w| q_list(w)).collect::<Vec<_>>(),
        })
    }
}

pub fn compare_models(m: usize, n: [usize; 2], j: [usize; 2]) -> Result<ModelComparison, ExperimentError> {
    if n != [1, 1] {
        return Err(ExperimentError::Config(format!(
            "comparison needs single-antenna receivers, got N1 = {}, N2 = {}",
            n[0], n[1]
        )));
    }
    let ergodic = ergodic_region(m, j[0], j[1])?;
    let gaussian = constant_state_region(m, 1, 1, j[0], j[1])?.project([1, 2])?;
    let mut witnesses = ergodic.witnesses_against(&gaussian)?;
    witnesses.sort_by(|a, b| (b[0] + b[1]).cmp(&(a[0] + a[1])).then_with(|| a.cmp(b)));
    Ok(ModelComparison {
        ergodic_dominates: ergodic.dominates(&gaussian)?,
        gaussian_dominates: gaussian.dominates(&ergodic)?,
        ergodic,
        gaussian,
        witnesses,
    })
}

pub fn run_compare(cfg: &ExperimentConfig) -> Result<RunArtifacts, ExperimentError> {
    let cmp = compare_models(cfg.m, [cfg.n1, cfg.n2], [cfg.j1, cfg.j2])?;
    let regions = json!({
        "ergodic": region_to_value(&cmp.ergodic),
        "gaussian": region_to_value(&cmp.gaussian),
    });
    let mut summary = cmp.to_value();
    summary["config"] = json!(cfg);
    Ok(RunArtifacts {
        files: vec![("region.json", pretty(&regions)), ("summary.json", pretty(&summary))],
        verdict: Verdict::Pass,
    })
}

/// Checks the rank condition on a channel file, or on a channel generated
/// from the configuration (seeded by `seed`) which is then also emitted.
pub fn run_verify_channel(
    cfg: Option<&ExperimentConfig>,
    channel_text: Option<&str>,
) -> Result<RunArtifacts, ExperimentError> {
    let (ch, source, generated) = match (channel_text, cfg) {
        (Some(text), _) => (channel_from_json(text)?, "file", false),
        (None, Some(cfg)) => {
            let spec = ChannelGenSpec::new(cfg.m, cfg.n1, cfg.n2, cfg.j1, cfg.j2, cfg.seed);
            (generate_compound(&spec, RankTolerance::DEFAULT)?, "generated", true)
        }
        (None, None) => {
            return Err(ExperimentError::Config("verify-channel needs a channel file or a configuration".into()))
        }
    };
    let report = verify_rank_condition(&ch, RankTolerance::DEFAULT)?;
    let summary = json!({
        "source": source,
        "M": ch.m(),
        "N1": ch.antennas(User::One),
        "N2": ch.antennas(User::Two),
        "J1": ch.states(User::One),
        "J2": ch.states(User::Two),
        "report": report,
        "failures": report.failures.iter()
            .map(|f| f.iter().map(|l| l.to_string()).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    });
    let mut files = vec![("summary.json", pretty(&summary))];
    if generated {
        let mut text = channel_to_json(&ch);
        text.push('\n');
        files.insert(0, ("channel.json", text));
    }
    Ok(RunArtifacts { files, verdict: if report.passed { Verdict::Pass } else { Verdict::Fail } })
}

/// Analytic region of the configured model.
pub fn run_region(cfg: &ExperimentConfig) -> Result<RunArtifacts, ExperimentError> {
    let model = cfg.model.ok_or_else(|| ExperimentError::Config("region needs model = gaussian or ergodic".into()))?;
    let (region, extra) = match model {
        Model::Gaussian => (constant_state_region(cfg.m, cfg.n1, cfg.n2, cfg.j1, cfg.j2)?, Value::Null),
        Model::Ergodic => (ergodic_region(cfg.m, cfg.j1, cfg.j2)?, f_report(cfg.m, cfg.j1, cfg.j2)),
    };
    let summary = json!({
        "model": model,
        "config": cfg,
        "coordinates": match model { Model::Gaussian => json!(["r0", "r1", "r2"]), Model::Ergodic => json!(["r1", "r2"]) },
        "vertices": region.outer_vertices().iter().map(|v| q_list(v)).collect::<Vec<_>>(),
        "f": extra,
    });
    Ok(RunArtifacts {
        files: vec![("region.json", pretty(&region_to_value(&region))), ("summary.json", pretty(&summary))],
        verdict: Verdict::Pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text).unwrap()
    }

    #[test]
    fn defaults_and_overrides() {
        let c = cfg(r#"{"M": 4, "J1": 2, "J2": 2}"#);
        assert_eq!((c.n1, c.n2, c.r1, c.trials, c.blocks, c.seed), (1, 1, 0, 1, DEFAULT_BLOCKS, 0));
        assert_eq!(c.snr_db_grid, DEFAULT_SNR_GRID_DB.to_vec());
        let o = ExperimentConfig::with_overrides(
            Some(r#"{"M": 4, "J1": 2, "J2": 2}"#),
            &[("M", "5"), ("snr_db_grid", "40,60,80"), ("power_policy", "split(0.25)"), ("model", "ergodic")],
        )
        .unwrap();
        assert_eq!(o.m, 5);
        assert_eq!(o.snr_db_grid, vec![40.0, 60.0, 80.0]);
        assert_eq!(o.power_policy, Some(PowerPolicy::Split(0.25)));
        assert_eq!(o.model, Some(Model::Ergodic));
        let flags_only = ExperimentConfig::with_overrides(None, &[("M", "3"), ("J1", "1"), ("J2", "1")]).unwrap();
        assert_eq!(flags_only.m, 3);
    }

    #[test]
    fn invalid_configs_rejected() {
        for bad in [
            r#"{"M": 4, "J1": 2}"#,
            r#"{"M": 0, "J1": 2, "J2": 2}"#,
            r#"{"M": 4, "J1": 2, "J2": 2, "snr_db_grid": [60, 60, 80]}"#,
            r#"{"M": 4, "J1": 2, "J2": 2, "snr_db_grid": [-10, 60]}"#,
            r#"{"M": 4, "J1": 2, "J2": 2, "trials": 0}"#,
            r#"{"M": 4, "J1": 2, "J2": 2, "blocks": 0}"#,
            r#"{"M": 4, "J1": 2, "J2": 2, "bogus": 1}"#,
            r#"{"M": 4, "J1": 2, "J2": 2, "power_policy": "half"}"#,
            r#"[1, 2]"#,
            r#"{"M": 4,"#,
        ] {
            assert!(ExperimentConfig::from_json(bad).is_err(), "{bad}");
        }
        assert!(ExperimentConfig::with_overrides(None, &[("X", "1")]).is_err());
    }

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(1.0), "1.00000000000e0");
        assert_eq!(format_float(-0.0625), "-6.25000000000e-2");
        assert_eq!(format_q(Q::new(2, 4)), "1/2");
        assert_eq!(format_q(Q::new(3, 1)), "3");
    }

    #[test]
    fn gaussian_run_passes_and_replays() {
        let c = cfg(r#"{"M": 4, "N1": 1, "N2": 1, "J1": 2, "J2": 2, "r1": 1, "r2": 1, "trials": 2, "seed": 3}"#);
        let a = run_gaussian(&c).unwrap();
        assert_eq!(a.verdict, Verdict::Pass);
        assert_eq!(a, run_gaussian(&c).unwrap());
        let csv = a.file("rates.csv").unwrap();
        assert!(csv.starts_with("snr_db,R0,R1,R2,leakage_max\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn gaussian_infeasible_run_reports_bound() {
        let c = cfg(r#"{"M": 3, "J1": 1, "J2": 3, "r1": 1}"#);
        let err = run_gaussian(&c).unwrap_err();
        assert!(err.to_string().contains("min(1, 3 - 3*1) = 0"), "{err}");
    }

    #[test]
    fn low_grid_is_not_assessed() {
        let c = cfg(r#"{"M": 2, "J1": 1, "J2": 1, "r1": 1, "r2": 1, "snr_db_grid": [0, 10, 20]}"#);
        assert_eq!(run_gaussian(&c).unwrap().verdict, Verdict::NotAssessed);
    }

    #[test]
    fn ergodic_run_reports_f() {
        let c = cfg(r#"{"M": 7, "J1": 8, "J2": 8, "blocks": 2000, "power_policy": "equal", "seed": 1}"#);
        let a = run_ergodic(&c).unwrap();
        assert_eq!(a.verdict, Verdict::Pass);
        let summary: Value = serde_json::from_str(a.file("summary.json").unwrap()).unwrap();
        assert_eq!(summary["f"]["f"], "1/8");
        assert!(a.file("rates.csv").unwrap().lines().nth(1).unwrap().contains(",equal,"));
    }

    #[test]
    fn model_mismatch_rejected() {
        let c = cfg(r#"{"model": "gaussian", "M": 3, "J1": 2, "J2": 2}"#);
        assert!(run_ergodic(&c).is_err());
    }

    #[test]
    fn comparison_examples() {
        let big = compare_models(7, [1, 1], [8, 8]).unwrap();
        assert!(big.strictly_better());
        assert_eq!(big.witnesses[0], vec![Q::new(1, 2), Q::new(1, 2)]);
        let small = compare_models(3, [1, 1], [2, 2]).unwrap();
        assert!(small.ergodic_dominates && small.gaussian_dominates);
        assert!(small.witnesses.is_empty());
        assert!(compare_models(3, [2, 1], [1, 1]).is_err());
    }

    #[test]
    fn verify_channel_generates_and_parses() {
        let c = cfg(r#"{"M": 3, "N1": 1, "N2": 2, "J1": 2, "J2": 1, "seed": 4}"#);
        let gen = run_verify_channel(Some(&c), None).unwrap();
        assert_eq!(gen.verdict, Verdict::Pass);
        let text = gen.file("channel.json").unwrap();
        let again = run_verify_channel(None, Some(text)).unwrap();
        assert_eq!(again.verdict, Verdict::Pass);
        assert!(run_verify_channel(None, None).is_err());
    }

    #[test]
    fn region_command_needs_model() {
        let c = cfg(r#"{"M": 7, "J1": 8, "J2": 8}"#);
        assert!(run_region(&c).is_err());
        let e = cfg(r#"{"model": "ergodic", "M": 7, "J1": 8, "J2": 8}"#);
        let summary: Value = serde_json::from_str(run_region(&e).unwrap().file("summary.json").unwrap()).unwrap();
        assert_eq!(summary["vertices"].as_array().unwrap().len(), 3);
    }
}
