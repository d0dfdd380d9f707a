//! JSON-configured scenarios, their reports and canonical serialisation.
//!
//! A config names a `kind`, a `seed`, a `tolerance` and kind-specific
//! `params`. Unknown keys are rejected at every level. An optional `sweep`
//! lists dotted paths into the config and the values each takes; the
//! cartesian product is run with the first axis varying slowest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::constants::PhysicalConstants;
use crate::entropy;
use crate::error::{Error, Result};
use crate::geometry::{self, Regime, RegulatorScheme};
use crate::horizon::{self, Axis, HorizonKinematics, SampledField, TruncationPolicy};
use crate::qmatrix::{self, ComplexMatrix};
use crate::states::{self, DensityMatrix, PartitionCertificate, SearchFrontier, SearchOptions, SearchOutcome};
use crate::transfer::{self, EntropyLedger, ThermoRecord, TransferOptions, TransferOutcome};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Bounds the number of sweep worker threads.
pub const THREADS_ENV: &str = "CAUSENTROPY_THREADS";
/// Report key left out of canonical JSON.
const WALL_TIME_KEY: &str = "wall_time_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Transfer,
    StateSearch,
    Geometry,
    Horizon,
    Pipeline,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

/// One sweep dimension: a dotted path such as `params.ledger.s_e_star`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<Value>,
}

/// Temperatures for the energy bookkeeping. Exactly one of `t_0` and
/// `acceleration` must be given; the latter sets `T_0` to its Unruh temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoInputs {
    #[serde(default)]
    pub t_0: Option<f64>,
    #[serde(default)]
    pub acceleration: Option<f64>,
    pub t_e_star: f64,
    pub t_b_star: f64,
    #[serde(default)]
    pub constants: PhysicalConstants,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferParams {
    pub ledger: EntropyLedger,
    #[serde(default)]
    pub strict: bool,
    /// Ignore the ledger's absorbed entropies and absorb everything.
    #[serde(default)]
    pub max_transfer: bool,
    #[serde(default)]
    pub thermo: Option<ThermoInputs>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchParams {
    pub target_negativity: f64,
    #[serde(default)]
    pub options: SearchOptions,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryParams {
    pub scheme: RegulatorScheme,
    /// Entropies (bits) at which the area curves are tabulated.
    #[serde(default)]
    pub entropies: Vec<f64>,
    /// Apply this transfer and report the resulting expansion.
    #[serde(default)]
    pub ledger: Option<EntropyLedger>,
    /// Compare the Susskind–Uglum, Bekenstein–Hawking and `c₀` area laws.
    #[serde(default = "default_true")]
    pub bridge: bool,
}

/// Where a sampled field comes from. Relative paths resolve against the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSource {
    Inline(SampledField),
    Json(PathBuf),
    Csv(PathBuf),
    Constant { axes: Vec<Axis>, value: f64 },
}

impl FieldSource {
    pub fn load(&self) -> Result<SampledField> {
        match self {
            FieldSource::Inline(f) => Ok(f.clone()),
            FieldSource::Json(p) => SampledField::from_json(&std::fs::read_to_string(p)?),
            FieldSource::Csv(p) => SampledField::from_csv(std::fs::File::open(p)?),
            FieldSource::Constant { axes, value } => SampledField::constant(axes.clone(), *value),
        }
    }

    fn resolve(&mut self, base: &Path) {
        if let FieldSource::Json(p) | FieldSource::Csv(p) = self {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonParams {
    pub kinematics: HorizonKinematics,
    /// Energy density on `x ≥ 0` for the boost integral.
    #[serde(default)]
    pub t00: Option<FieldSource>,
    /// Contracted stress tensor for the energy flux and Ricci kernel.
    #[serde(default)]
    pub flux_integrand: Option<FieldSource>,
    /// Contracted stress tensor for the `v`-weighted area integrals.
    #[serde(default)]
    pub area_integrand: Option<FieldSource>,
    #[serde(default)]
    pub l0: f64,
    #[serde(default)]
    pub truncation: TruncationPolicy,
    /// Hamiltonian whose unit-trace constant is reported.
    #[serde(default)]
    pub hamiltonian: Option<ComplexMatrix>,
    #[serde(default)]
    pub constants: PhysicalConstants,
}

impl HorizonParams {
    fn resolve(&mut self, base: &Path) {
        for f in [&mut self.t00, &mut self.flux_integrand, &mut self.area_integrand]
            .into_iter()
            .flatten()
        {
            f.resolve(base);
        }
    }
}

fn default_fraction() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineParams {
    pub target_negativity: f64,
    #[serde(default)]
    pub search: SearchOptions,
    /// Vacuum entropy, bits.
    pub s_0: f64,
    /// Fraction of `S_E` absorbed as `S_E*`.
    #[serde(default = "default_fraction")]
    pub absorbed_fraction_e: f64,
    #[serde(default = "default_fraction")]
    pub absorbed_fraction_b: f64,
    #[serde(default)]
    pub strict: bool,
    #[serde(default = "RegulatorScheme::unit")]
    pub scheme: RegulatorScheme,
    #[serde(default)]
    pub thermo: Option<ThermoInputs>,
    #[serde(default)]
    pub horizon: Option<HorizonParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioParams {
    Transfer(TransferParams),
    StateSearch(SearchParams),
    Geometry(GeometryParams),
    Horizon(HorizonParams),
    Pipeline(Box<PipelineParams>),
}

impl ScenarioParams {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            ScenarioParams::Transfer(_) => ScenarioKind::Transfer,
            ScenarioParams::StateSearch(_) => ScenarioKind::StateSearch,
            ScenarioParams::Geometry(_) => ScenarioKind::Geometry,
            ScenarioParams::Horizon(_) => ScenarioKind::Horizon,
            ScenarioParams::Pipeline(_) => ScenarioKind::Pipeline,
        }
    }

    fn to_value(&self) -> Value {
        let v = match self {
            ScenarioParams::Transfer(p) => serde_json::to_value(p),
            ScenarioParams::StateSearch(p) => serde_json::to_value(p),
            ScenarioParams::Geometry(p) => serde_json::to_value(p),
            ScenarioParams::Horizon(p) => serde_json::to_value(p),
            ScenarioParams::Pipeline(p) => serde_json::to_value(p),
        };
        v.expect("scenario params serialize to JSON")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: ScenarioKind,
    seed: u64,
    tolerance: f64,
    params: Value,
    #[serde(default)]
    output: Option<OutputSpec>,
    #[serde(default)]
    sweep: Option<Vec<SweepAxis>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub tolerance: f64,
    pub params: ScenarioParams,
    pub output: OutputSpec,
    pub sweep: Option<Vec<SweepAxis>>,
}

fn decode<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = match (prefix.is_empty(), path.as_str()) {
            (true, _) => path.clone(),
            (false, ".") => prefix.to_string(),
            (false, p) => format!("{prefix}.{p}"),
        };
        Error::config(field, e.into_inner().to_string())
    })
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite, got {v}")))
    }
}

fn check_thermo(t: &ThermoInputs, field: &str) -> Result<()> {
    match (t.t_0, t.acceleration) {
        (Some(_), Some(_)) | (None, None) => Err(Error::config(
            field,
            "give exactly one of `t_0` and `acceleration`",
        )),
        _ => Ok(()),
    }
}

fn check_fraction(field: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(field, format!("must lie in [0, 1], got {v}")))
    }
}

impl ScenarioConfig {
    pub fn from_value(value: Value) -> Result<Self> {
        let raw: RawConfig = decode(value, "")?;
        let params = match raw.kind {
            ScenarioKind::Transfer => ScenarioParams::Transfer(decode(raw.params, "params")?),
            ScenarioKind::StateSearch => ScenarioParams::StateSearch(decode(raw.params, "params")?),
            ScenarioKind::Geometry => ScenarioParams::Geometry(decode(raw.params, "params")?),
            ScenarioKind::Horizon => ScenarioParams::Horizon(decode(raw.params, "params")?),
            ScenarioKind::Pipeline => ScenarioParams::Pipeline(Box::new(decode(raw.params, "params")?)),
        };
        let config = Self {
            seed: raw.seed,
            tolerance: raw.tolerance,
            params,
            output: raw.output.unwrap_or_default(),
            sweep: raw.sweep,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(s).map_err(|e| Error::config("", e.to_string()))?;
        Self::from_value(value)
    }

    /// Reads a config file; relative field paths resolve against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let mut config = Self::from_json(&std::fs::read_to_string(path)?)?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        match &mut self.params {
            ScenarioParams::Horizon(h) => h.resolve(base),
            ScenarioParams::Pipeline(p) => {
                if let Some(h) = &mut p.horizon {
                    h.resolve(base);
                }
            }
            _ => {}
        }
    }

    pub fn kind(&self) -> ScenarioKind {
        self.params.kind()
    }

    /// Semantic checks beyond the schema.
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::config("tolerance", format!("must be positive, got {}", self.tolerance)));
        }
        if let Some(axes) = &self.sweep {
            for (i, a) in axes.iter().enumerate() {
                if a.path.is_empty() || a.path.starts_with("sweep") || a.path.starts_with("kind") {
                    return Err(Error::config(format!("sweep[{i}].path"), format!("cannot sweep `{}`", a.path)));
                }
            }
        }
        match &self.params {
            ScenarioParams::Transfer(p) => {
                if let Some(t) = &p.thermo {
                    check_thermo(t, "params.thermo")?;
                }
            }
            ScenarioParams::StateSearch(p) => finite("params.target_negativity", p.target_negativity)?,
            ScenarioParams::Geometry(p) => {
                for (i, s) in p.entropies.iter().enumerate() {
                    finite(&format!("params.entropies[{i}]"), *s)?;
                }
            }
            ScenarioParams::Horizon(_) => {}
            ScenarioParams::Pipeline(p) => {
                finite("params.target_negativity", p.target_negativity)?;
                finite("params.s_0", p.s_0)?;
                check_fraction("params.absorbed_fraction_e", p.absorbed_fraction_e)?;
                check_fraction("params.absorbed_fraction_b", p.absorbed_fraction_b)?;
                if let Some(t) = &p.thermo {
                    check_thermo(t, "params.thermo")?;
                }
            }
        }
        Ok(())
    }

    /// `kind`, `seed`, `tolerance` and `params` with defaults filled in.
    pub fn echo(&self) -> Value {
        serde_json::json!({
            "kind": self.kind(),
            "seed": self.seed,
            "tolerance": self.tolerance,
            "params": self.params.to_value(),
        })
    }

    /// The whole config, including output and sweep sections.
    pub fn to_value(&self) -> Value {
        let mut v = self.echo();
        let obj = v.as_object_mut().expect("echo is an object");
        obj.insert("output".into(), serde_json::to_value(&self.output).expect("output serializes"));
        if let Some(s) = &self.sweep {
            obj.insert("sweep".into(), serde_json::to_value(s).expect("sweep serializes"));
        }
        v
    }

    /// One config per point of the sweep grid, in grid order. Without a
    /// sweep section this is the config itself.
    pub fn expand_sweep(&self) -> Result<Vec<ScenarioConfig>> {
        let Some(axes) = &self.sweep else {
            return Ok(vec![self.clone()]);
        };
        let mut base = self.to_value();
        base.as_object_mut().expect("config is an object").remove("sweep");
        let total: usize = axes.iter().map(|a| a.values.len()).product();
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut point = base.clone();
            let mut rem = flat;
            let mut picks = vec![0; axes.len()];
            for k in (0..axes.len()).rev() {
                picks[k] = rem % axes[k].values.len();
                rem /= axes[k].values.len();
            }
            for (k, axis) in axes.iter().enumerate() {
                set_path(&mut point, &axis.path, axis.values[picks[k]].clone())
                    .map_err(|m| Error::config(format!("sweep[{k}].path"), m))?;
            }
            out.push(Self::from_value(point).map_err(|e| e.in_scenario(format!("sweep point {flat}")))?);
        }
        Ok(out)
    }
}

fn set_path(root: &mut Value, path: &str, value: Value) -> std::result::Result<(), String> {
    let mut cur = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert((*seg).to_string(), value);
                    return Ok(());
                }
                map.entry((*seg).to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = seg.parse().map_err(|_| format!("`{seg}` in `{path}` is not an index"))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| format!("index {idx} out of range ({len}) in `{path}`"))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(format!("`{path}` descends into a scalar at `{seg}`")),
        };
    }
    Err(format!("empty path `{path}`"))
}

/// A number with its unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quantity {
    pub value: f64,
    pub unit: String,
}

/// One named invariant. Passes when `residual ≤ tolerance`, or `<` if `strict`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub strict: bool,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
            strict: false,
            passed: residual <= tolerance,
        }
    }

    pub fn below(name: &str, residual: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance: bound,
            strict: true,
            passed: residual < bound,
        }
    }

    /// A boolean condition as a 0/1 residual.
    pub fn flag(name: &str, ok: bool) -> Self {
        Self::at_most(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }
}

/// Tabulated columns, one unit per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Curve {
    pub columns: Vec<String>,
    pub units: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub version: String,
    pub config: Value,
    pub outputs: BTreeMap<String, Quantity>,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<DensityMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<PartitionCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frontier: Option<SearchFrontier>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<Curve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl Report {
    fn new(config: &ScenarioConfig) -> Self {
        Self {
            version: VERSION.to_string(),
            config: config.echo(),
            outputs: BTreeMap::new(),
            checks: Vec::new(),
            passed: false,
            error: None,
            state: None,
            certificate: None,
            frontier: None,
            curve: None,
            wall_time_s: None,
        }
    }

    fn out(&mut self, name: &str, value: f64, unit: &str) {
        self.outputs.insert(
            name.to_string(),
            Quantity {
                value,
                unit: unit.to_string(),
            },
        );
    }

    fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Sorted keys, 17 significant digits, no wall time.
    pub fn to_canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("report is an object").remove(WALL_TIME_KEY);
        canonical_json(&v)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn without_wall_time(&self) -> Self {
        Self {
            wall_time_s: None,
            ..self.clone()
        }
    }

    pub fn kind(&self) -> Option<&str> {
        self.config.get("kind").and_then(Value::as_str)
    }
}

/// Serialises `value` with sorted keys, no whitespace and every float as `{:.16e}`.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out.push('\n');
    out
}

fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().expect("f64 number")));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
    }
}

const BASE_COLUMNS: [&str; 5] = ["index", "kind", "seed", "tolerance", "passed"];

/// One row per report; scalar outputs become `name[unit]` columns. An empty
/// slice gives the header row alone.
pub fn reports_to_csv(reports: &[Report]) -> Result<String> {
    let mut columns: BTreeMap<String, String> = BTreeMap::new();
    for r in reports {
        for (name, q) in &r.outputs {
            columns.entry(name.clone()).or_insert_with(|| q.unit.clone());
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = BASE_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(columns.iter().map(|(n, u)| format!("{n}[{u}]")))
        .collect();
    w.write_record(&header)?;
    for (i, r) in reports.iter().enumerate() {
        let mut row = vec![
            i.to_string(),
            r.kind().unwrap_or("").to_string(),
            r.config.get("seed").map(|v| v.to_string()).unwrap_or_default(),
            r.config
                .get("tolerance")
                .and_then(Value::as_f64)
                .map(format_float)
                .unwrap_or_default(),
            r.passed.to_string(),
        ];
        row.extend(
            columns
                .keys()
                .map(|n| r.outputs.get(n).map(|q| format_float(q.value)).unwrap_or_default()),
        );
        w.write_record(&row)?;
    }
    finish_csv(w)
}

/// Plot-ready table of a report curve.
pub fn curve_to_csv(curve: &Curve) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = curve
        .columns
        .iter()
        .zip(&curve.units)
        .map(|(c, u)| format!("{c}[{u}]"))
        .collect();
    w.write_record(&header)?;
    for row in &curve.rows {
        w.write_record(row.iter().map(|x| format_float(*x)))?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// A single report in `format`.
pub fn emit_report(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(report.to_canonical_json()),
        Format::Csv => reports_to_csv(std::slice::from_ref(report)),
    }
}

/// Sweep reports in grid order: a canonical JSON array, or one CSV row each.
pub fn emit_sweep(reports: &[Report], format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let items: Vec<Value> = reports
                .iter()
                .map(|r| {
                    let mut v = serde_json::to_value(r).expect("report serializes");
                    v.as_object_mut().expect("report is an object").remove(WALL_TIME_KEY);
                    v
                })
                .collect();
            Ok(canonical_json(&Value::Array(items)))
        }
        Format::Csv => reports_to_csv(reports),
    }
}

/// Runs one scenario. Module errors come back with scenario context.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Report> {
    config.validate()?;
    let start = Instant::now();
    let mut report = Report::new(config);
    let tol = config.tolerance;
    match &config.params {
        ScenarioParams::Transfer(p) => run_transfer(&mut report, p, tol)?,
        ScenarioParams::StateSearch(p) => {
            run_search(&mut report, p.target_negativity, config.seed, &p.options, tol)?;
        }
        ScenarioParams::Geometry(p) => run_geometry(&mut report, p, tol)?,
        ScenarioParams::Horizon(p) => {
            run_horizon(&mut report, p, tol, "")?;
        }
        ScenarioParams::Pipeline(p) => run_pipeline(&mut report, p, config.seed, tol)?,
    }
    report.passed = report.checks.iter().all(|c| c.passed);
    report.wall_time_s = Some(start.elapsed().as_secs_f64());
    Ok(report)
}

/// Runs every sweep point on at most `CAUSENTROPY_THREADS` threads. A point
/// that errors yields a failed report carrying the message.
pub fn run_sweep(config: &ScenarioConfig) -> Result<Vec<Report>> {
    let points = config.expand_sweep()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start sweep threads: {e}")))?;
    Ok(pool.install(|| {
        points
            .par_iter()
            .map(|c| {
                run_scenario(c).unwrap_or_else(|e| {
                    let mut r = Report::new(c);
                    r.error = Some(e.to_string());
                    r.check(Check::flag("scenario_completed", false));
                    r
                })
            })
            .collect()
    }))
}

fn ctx<T>(r: Result<T>, what: &str) -> Result<T> {
    r.map_err(|e| e.in_scenario(what))
}

fn thermo_t0(t: &ThermoInputs) -> Result<f64> {
    match (t.t_0, t.acceleration) {
        (Some(t0), None) => Ok(t0),
        (None, Some(a)) if a > 0.0 && a.is_finite() => Ok(t.constants.unruh_temperature(a)),
        (None, Some(a)) => Err(Error::NonPositiveAcceleration(a)),
        _ => Err(Error::config("params.thermo", "give exactly one of `t_0` and `acceleration`")),
    }
}

fn record_transfer(report: &mut Report, ledger: &EntropyLedger, outcome: &TransferOutcome, tol: f64) {
    report.out("s_g_prime", outcome.s_g_prime, "bits");
    report.out("s_e_prime", outcome.s_e_prime, "bits");
    report.out("s_b_prime", outcome.s_b_prime, "bits");
    report.out("delta_s_e_star", outcome.delta_s_e_star, "bits");
    report.out("delta_s_b_star", outcome.delta_s_b_star, "bits");
    report.out("delta_s_g", outcome.delta_s_g, "bits");
    report.out("delta_s_tot", outcome.delta_s_tot, "bits");
    report.out("conservation_residual", outcome.conservation_residual, "bits");
    report.out("total_entropy_before", ledger.total(), "bits");
    report.out("total_entropy_after", outcome.total(), "bits");

    report.check(Check::at_most("conservation", outcome.conservation_residual.abs(), tol));
    report.check(Check::below("gravity_entropy_growth", ledger.s_g - outcome.s_g_prime, 0.0));
    report.check(Check::at_most(
        "delta_g_is_sum_of_absorbed",
        (outcome.delta_s_g - (outcome.delta_s_e_star + outcome.delta_s_b_star)).abs(),
        tol,
    ));
    report.check(Check::at_most(
        "delta_tot_is_twice_delta_g",
        (outcome.delta_s_tot - 2.0 * outcome.delta_s_g).abs(),
        tol,
    ));
    report.check(Check::flag(
        "subsystem_e_reduction_iff_excess",
        (outcome.s_e_prime < ledger.s_e) == (ledger.s_e_star > ledger.s_0),
    ));
    report.check(Check::flag(
        "subsystem_b_reduction_iff_excess",
        (outcome.s_b_prime < ledger.s_b) == (ledger.s_b_star > ledger.s_0),
    ));
}

fn record_thermo(report: &mut Report, t: &ThermoInputs, outcome: &TransferOutcome) -> Result<()> {
    let t_0 = ctx(thermo_t0(t), "thermodynamics")?;
    let record = ctx(
        ThermoRecord::from_outcome(outcome, t_0, t.t_e_star, t.t_b_star, t.constants.k_b),
        "thermodynamics",
    )?;
    report.out("t_0", record.t_0, "K");
    report.out("t_g", record.t_g, "K");
    report.out("e_e_star", record.e_e_star, "J");
    report.out("e_b_star", record.e_b_star, "J");
    report.out("delta_e_g", record.delta_e_g, "J");
    report.out("delta_e_e_star", record.delta_e_e_star, "J");
    report.out("delta_e_b_star", record.delta_e_b_star, "J");
    let c = transfer::energy_conservation_check(&record, outcome);
    report.check(Check::at_most("energy_balance", c.energy_residual_relative, c.tolerance));
    report.check(Check::at_most("energy_entropy_balance", c.entropy_residual_relative, c.tolerance));
    Ok(())
}

fn run_transfer(report: &mut Report, p: &TransferParams, tol: f64) -> Result<()> {
    let opts = TransferOptions { strict: p.strict };
    let (ledger, outcome) = if p.max_transfer {
        let full = EntropyLedger {
            s_e_star: p.ledger.s_e,
            s_b_star: p.ledger.s_b,
            ..p.ledger
        };
        (full, ctx(transfer::max_transfer(&p.ledger), "max_transfer")?)
    } else {
        (p.ledger, ctx(transfer::apply_transfer_with(&p.ledger, opts), "apply_transfer")?)
    };
    record_transfer(report, &ledger, &outcome, tol);
    if p.max_transfer {
        report.check(Check::at_most(
            "max_transfer_leaves_vacuum",
            (outcome.s_e_prime - ledger.s_0).abs() + (outcome.s_b_prime - ledger.s_0).abs(),
            0.0,
        ));
    }
    if let Some(t) = &p.thermo {
        record_thermo(report, t, &outcome)?;
    }
    Ok(())
}

fn decomposition_error(d: &Option<crate::separable::SeparableDecomposition>) -> f64 {
    d.as_ref().map_or(f64::INFINITY, |d| d.trace_norm_error)
}

fn run_search(
    report: &mut Report,
    target: f64,
    seed: u64,
    opts: &SearchOptions,
    tol: f64,
) -> Result<Option<SearchOutcome>> {
    let outcome = match states::search_gravity_state(target, seed, opts) {
        Ok(o) => o,
        Err(Error::SearchExhausted {
            evaluations,
            best_negativity,
            frontier,
        }) => {
            report.out("evaluations", evaluations as f64, "count");
            report.out("best_negativity", best_negativity, "1");
            report.check(Check::at_most("negativity_target", target - best_negativity, 0.0));
            report.frontier = Some(*frontier);
            return Ok(None);
        }
        Err(e) => return Err(e.in_scenario("search_gravity_state")),
    };
    let cert = &outcome.certificate;
    report.out("negativity_g_vs_eb", cert.negativity_g_vs_eb, "1");
    report.out("ppt_gap_e_cut", cert.ppt_gap_e_cut, "1");
    report.out("ppt_gap_b_cut", cert.ppt_gap_b_cut, "1");
    let err_e = decomposition_error(&cert.separable_decomposition_e_cut);
    let err_b = decomposition_error(&cert.separable_decomposition_b_cut);
    report.out("reconstruction_error_e_cut", err_e, "1");
    report.out("reconstruction_error_b_cut", err_b, "1");
    report.out("evaluations", outcome.evaluations as f64, "count");
    report.out("certification_attempts", outcome.certification_attempts as f64, "count");
    report.out("family_theta", outcome.params.theta, "rad");
    report.out("family_noise", outcome.params.noise, "1");
    report.out("family_bias", outcome.params.bias, "1");
    report.out("family_terms", outcome.params.weights.len() as f64, "count");

    report.check(Check::at_most("negativity_target", target - cert.negativity_g_vs_eb, 0.0));
    report.check(Check::at_most("ppt_e_cut", -cert.ppt_gap_e_cut, states::PPT_TOL));
    report.check(Check::at_most("ppt_b_cut", -cert.ppt_gap_b_cut, states::PPT_TOL));
    report.check(Check::at_most("separable_e_cut", err_e, states::DECOMPOSITION_TOL));
    report.check(Check::at_most("separable_b_cut", err_b, states::DECOMPOSITION_TOL));

    let reloaded = ctx(DensityMatrix::from_json(&ctx(outcome.state.to_json(), "serialize state")?), "reload state")?;
    let again = ctx(states::certify_partitions_with(&reloaded, &opts.fw), "recertify")?;
    report.check(Check::at_most("recertification", cert.max_scalar_difference(&again), tol));

    report.state = Some(outcome.state.clone());
    report.certificate = Some(outcome.certificate.clone());
    Ok(Some(outcome))
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn run_geometry(report: &mut Report, p: &GeometryParams, tol: f64) -> Result<()> {
    let s = &p.scheme;
    let regs = geometry::validate_regulators(s);
    report.out("cutoff_area", s.cutoff_area(), "length^(d-2)");
    report.out("effective_newton_g", s.effective_newton_g(), "length^(d-2)");
    report.out("delta_ratio", regs.delta_ratio, "1");
    report.out("d_ge_ratio", regs.d_ge_ratio, "1");
    let planck = ctx(geometry::planck_scale(s.d, &PhysicalConstants::default()), "planck_scale")?;
    report.out("planck_scale", planck, "m^2");
    let consistent = geometry::planck_scale_is_dimensionally_consistent(s.d);
    report.out("planck_scale_dimensionally_consistent", f64::from(u8::from(consistent)), "bool");
    report.check(Check::flag("regulator_hierarchy", regs.passed));

    let mut rows = Vec::with_capacity(p.entropies.len());
    let (mut rt_reg, mut rt_geom, mut bridge) = (0.0f64, 0.0f64, 0.0f64);
    for &e in &p.entropies {
        let a_reg = ctx(geometry::area_from_entropy(e, s, Regime::Regulated), "area_from_entropy")?;
        let a_geom = ctx(geometry::area_from_entropy(e, s, Regime::GeomScale), "area_from_entropy")?;
        rt_reg = rt_reg.max(relative(ctx(geometry::entropy_from_area(a_reg, s, Regime::Regulated), "entropy_from_area")?, e));
        rt_geom = rt_geom.max(relative(ctx(geometry::entropy_from_area(a_geom, s, Regime::GeomScale), "entropy_from_area")?, e));
        let mut row = vec![e, a_reg, a_geom];
        if p.bridge && s.susskind_uglum_consistent() {
            let su = ctx(geometry::susskind_uglum_entropy(a_reg, s), "susskind_uglum_entropy")?;
            let bh = ctx(geometry::bekenstein_hawking_delta(a_reg, s.effective_newton_g()), "bekenstein_hawking_delta")?;
            let area_law = s.c0 * a_reg / s.cutoff_area();
            bridge = bridge.max(relative(su, bh)).max(relative(su, area_law));
            row.push(su);
        }
        rows.push(row);
    }
    if !p.entropies.is_empty() {
        report.check(Check::at_most("area_round_trip_regulated", rt_reg, tol));
        report.check(Check::at_most("area_round_trip_geom_scale", rt_geom, tol));
        let mut order: Vec<&Vec<f64>> = rows.iter().collect();
        order.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let monotone = order
            .windows(2)
            .all(|w| w[0][0] == w[1][0] || (w[0][1] < w[1][1] && w[0][2] < w[1][2]));
        report.check(Check::flag("area_monotone_in_entropy", monotone));
    }
    if p.bridge {
        report.check(Check::flag("susskind_uglum_scheme", s.susskind_uglum_consistent()));
        if s.susskind_uglum_consistent() && !p.entropies.is_empty() {
            report.check(Check::at_most("area_law_bridge", bridge, tol));
        }
    }
    let mut columns = vec!["entropy".to_string(), "area_regulated".into(), "area_geom_scale".into()];
    let mut units = vec!["bits".to_string(), "length^(d-2)".into(), "length^(d-2)".into()];
    if p.bridge && s.susskind_uglum_consistent() {
        columns.push("susskind_uglum_entropy".into());
        units.push("bits".into());
    }
    report.curve = Some(Curve { columns, units, rows });

    if let Some(ledger) = &p.ledger {
        let outcome = ctx(transfer::apply_transfer(ledger), "apply_transfer")?;
        record_transfer(report, ledger, &outcome, tol);
        record_expansion(report, &outcome, s, tol)?;
    }
    Ok(())
}

fn record_expansion(report: &mut Report, outcome: &TransferOutcome, s: &RegulatorScheme, tol: f64) -> Result<()> {
    let g = ctx(geometry::expansion_delta(outcome, s), "expansion_delta")?;
    report.out("area_g", g.area_g, "length^(d-2)");
    report.out("area_g_prime", g.area_g_prime, "length^(d-2)");
    report.out("horizon_area_prime", g.horizon_l_prime, "length^(d-2)");
    report.out("delta_area", g.delta_area, "length^(d-2)");
    report.check(Check::flag("expansion", g.is_expanding()));
    let back = ctx(geometry::entropy_from_area(g.delta_area, s, Regime::Regulated), "entropy_from_area")?;
    report.check(Check::at_most("delta_area_round_trip", relative(back, outcome.delta_s_g), tol));
    Ok(())
}

fn run_horizon(report: &mut Report, p: &HorizonParams, tol: f64, prefix: &str) -> Result<Option<f64>> {
    let key = |n: &str| format!("{prefix}{n}");
    let k = &p.kinematics;
    ctx(k.validate(), "horizon kinematics")?;
    let t0 = ctx(horizon::unruh_kappa_temperature(k.kappa, &p.constants), "unruh_kappa_temperature")?;
    report.out(&key("unruh_temperature"), t0, "K");

    if let Some(src) = &p.t00 {
        let f = ctx(src.load(), "load t00")?;
        report.out(&key("boost_integral"), ctx(horizon::boost_integral(&f), "boost_integral")?, "energy");
    }
    let mut entropy_change = None;
    if let Some(src) = &p.flux_integrand {
        let f = ctx(src.load(), "load flux integrand")?;
        let flux = ctx(horizon::horizon_energy_flux(&f, k), "horizon_energy_flux")?;
        let ricci = ctx(horizon::ricci_area_change(&f, k.lambda_affine), "ricci_area_change")?;
        let ds = horizon::entropy_from_area_change(ricci, k.proportionality_c);
        report.out(&key("energy_flux"), flux, "energy");
        report.out(&key("ricci_area_change"), ricci, "area");
        report.out(&key("entropy_from_area_change"), ds, "bits");
        let scaled = k.kappa * k.area_element_gamma * ricci;
        report.check(Check::at_most(&key("flux_ricci_kernel"), relative(flux, scaled), tol));
        entropy_change = Some(ds);
    }
    if let Some(src) = &p.area_integrand {
        let f = ctx(src.load(), "load area integrand")?;
        let l = ctx(
            horizon::perturbed_horizon_area(p.l0, &f, k.newton_g, p.truncation),
            "perturbed_horizon_area",
        )?;
        let d = ctx(horizon::flat_flux_area_change(&f, k.newton_g, p.truncation), "flat_flux_area_change")?;
        report.out(&key("perturbed_horizon_area"), l, "area");
        report.out(&key("flat_flux_area_change"), d, "area");
    }
    if let Some(h) = &p.hamiltonian {
        let c = ctx(horizon::unit_trace_constant(h), "unit_trace_constant")?;
        report.out(&key("unit_trace_constant"), c, "1");
        let rho = ctx(qmatrix::matrix_function(h, |l| (-(l + c)).exp()), "unit-trace state")?;
        report.check(Check::at_most(&key("unit_trace"), (rho.trace().re - 1.0).abs(), tol));
    }
    Ok(entropy_change)
}

fn run_pipeline(report: &mut Report, p: &PipelineParams, seed: u64, tol: f64) -> Result<()> {
    let Some(found) = run_search(report, p.target_negativity, seed, &p.search, tol)? else {
        return Ok(());
    };
    let state = &found.state;
    let region = |r: &[usize]| ctx(entropy::region_entropy(state, r).map(|e| e.bits), "region_entropy");
    let (s_g, s_e, s_b) = (region(&[0])?, region(&[1])?, region(&[2])?);
    let rho_e = ctx(state.reduce(&[1]), "reduce")?;
    let rho_b = ctx(state.reduce(&[2]), "reduce")?;
    let (star_e, star_b) = ctx(transfer::absorbed_entropies(&rho_e, &rho_b, &[0], &[0]), "absorbed_entropies")?;
    let ledger = EntropyLedger::new(
        s_g,
        s_e,
        s_b,
        p.absorbed_fraction_e * star_e,
        p.absorbed_fraction_b * star_b,
        p.s_0,
    );
    report.out("s_g", s_g, "bits");
    report.out("s_e", s_e, "bits");
    report.out("s_b", s_b, "bits");
    report.out("s_e_star", ledger.s_e_star, "bits");
    report.out("s_b_star", ledger.s_b_star, "bits");
    report.out("s_0", ledger.s_0, "bits");

    let direct = |keep: usize| -> Result<f64> {
        let m = ctx(qmatrix::partial_trace(state.matrix(), state.dims(), &[keep]), "partial_trace")?;
        let eigs = ctx(qmatrix::hermitian_eigenvalues(&m), "eigenvalues")?;
        Ok(entropy::entropy_of_eigenvalues(&eigs).bits)
    };
    let mismatch = [(s_g, 0), (s_e, 1), (s_b, 2)]
        .into_iter()
        .map(|(s, k)| direct(k).map(|d| (d - s).abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    report.check(Check::at_most("ledger_matches_state", mismatch, tol.max(1e-10)));

    let outcome = ctx(
        transfer::apply_transfer_with(&ledger, TransferOptions { strict: p.strict }),
        "apply_transfer",
    )?;
    record_transfer(report, &ledger, &outcome, tol);
    record_expansion(report, &outcome, &p.scheme, tol)?;
    if let Some(t) = &p.thermo {
        record_thermo(report, t, &outcome)?;
    }
    if let Some(h) = &p.horizon {
        if let Some(ds) = run_horizon(report, h, tol, "horizon_")? {
            report.out("horizon_entropy_minus_delta_s_g", ds - outcome.delta_s_g, "bits");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transfer_config() -> ScenarioConfig {
        ScenarioConfig::from_json(
            r#"{"kind":"transfer","seed":1,"tolerance":1e-12,
                "params":{"ledger":{"s_g":1.0,"s_e":0.9,"s_b":0.8,"s_e_star":0.5,"s_b_star":0.6,"s_0":0.2}}}"#,
        )
        .unwrap()
    }

    #[test]
    fn transfer_scenario_example() {
        let r = run_scenario(&transfer_config()).unwrap();
        assert!(r.passed, "{:?}", r.failures());
        assert!((r.outputs["s_g_prime"].value - 1.7).abs() < 1e-12);
        assert_eq!(r.outputs["s_g_prime"].unit, "bits");
        assert!(r.outputs["conservation_residual"].value.abs() <= 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_path() {
        let err = ScenarioConfig::from_json(
            r#"{"kind":"transfer","seed":1,"tolerance":1e-9,
                "params":{"ledger":{"s_g":1,"s_e":1,"s_b":1,"s_e_star":1,"s_b_star":1,"s_0":0,"typo":2}}}"#,
        )
        .unwrap_err();
        match err {
            Error::ConfigInvalid { field, message } => {
                assert!(field.starts_with("params.ledger"), "{field}");
                assert!(message.contains("typo"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
        assert!(ScenarioConfig::from_json(r#"{"kind":"transfer","seed":1,"tolerance":1e-9,"params":{},"extra":1}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"kind":"nope","seed":1,"tolerance":1e-9,"params":{}}"#).is_err());
        let neg = r#"{"kind":"geometry","seed":1,"tolerance":-1,"params":{"scheme":{"d":4,"delta":1,"d_ge":100,"d_geom":1e4,"c0_tilde":1,"c0":0.25,"tau":1}}}"#;
        assert!(matches!(ScenarioConfig::from_json(neg), Err(Error::ConfigInvalid { field, .. }) if field == "tolerance"));
    }

    #[test]
    fn canonical_json_sorts_and_formats() {
        let v = serde_json::json!({"b": 1.5, "a": [1, 0.1], "c": {"z": null, "y": "s"}});
        assert_eq!(
            canonical_json(&v),
            "{\"a\":[1,1.0000000000000001e-1],\"b\":1.5000000000000000e0,\"c\":{\"y\":\"s\",\"z\":null}}\n"
        );
    }

    #[test]
    fn report_round_trip_and_determinism() {
        let c = transfer_config();
        let a = run_scenario(&c).unwrap();
        let b = run_scenario(&c).unwrap();
        assert_eq!(a.to_canonical_json(), b.to_canonical_json());
        let back = Report::from_json(&a.to_canonical_json()).unwrap();
        assert_eq!(back, a.without_wall_time());
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let mut c = transfer_config();
        c.sweep = Some(vec![SweepAxis {
            path: "params.ledger.s_e_star".into(),
            values: vec![],
        }]);
        let reports = run_sweep(&c).unwrap();
        assert!(reports.is_empty());
        let csv = emit_sweep(&reports, Format::Csv).unwrap();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("index,kind,seed,tolerance,passed"));
    }

    #[test]
    fn sweep_points_follow_grid_order() {
        let mut c = transfer_config();
        c.sweep = Some(vec![
            SweepAxis {
                path: "params.ledger.s_e_star".into(),
                values: vec![0.3.into(), 0.5.into()],
            },
            SweepAxis {
                path: "params.ledger.s_b_star".into(),
                values: vec![0.4.into(), 0.6.into(), 0.7.into()],
            },
        ]);
        let points = c.expand_sweep().unwrap();
        assert_eq!(points.len(), 6);
        let ScenarioParams::Transfer(p) = &points[4].params else { panic!() };
        assert_eq!((p.ledger.s_e_star, p.ledger.s_b_star), (0.5, 0.6));
        let bad = SweepAxis {
            path: "params.ledger.s_g.x".into(),
            values: vec![1.into()],
        };
        c.sweep = Some(vec![bad]);
        assert!(c.expand_sweep().is_err());
    }

    #[test]
    fn failed_sweep_points_are_reported() {
        let mut c = transfer_config();
        c.sweep = Some(vec![SweepAxis {
            path: "params.ledger.s_e_star".into(),
            values: vec![0.5.into(), (-0.2).into()],
        }]);
        let reports = run_sweep(&c).unwrap();
        assert!(reports[0].passed);
        assert!(!reports[1].passed);
        assert!(reports[1].error.is_some());
    }

    #[test]
    fn thermo_needs_exactly_one_reference_temperature() {
        let text = r#"{"kind":"transfer","seed":1,"tolerance":1e-9,
            "params":{"ledger":{"s_g":1.0,"s_e":0.9,"s_b":0.8,"s_e_star":0.5,"s_b_star":0.6,"s_0":0.2},
                      "thermo":{"t_e_star":1,"t_b_star":1}}}"#;
        assert!(matches!(ScenarioConfig::from_json(text), Err(Error::ConfigInvalid { .. })));
        let ok = text.replace("\"t_e_star\":1,", "\"acceleration\":9.81,\"t_e_star\":1,");
        let r = run_scenario(&ScenarioConfig::from_json(&ok).unwrap()).unwrap();
        assert!(r.passed, "{:?}", r.failures());
        assert!((r.outputs["t_0"].value - 3.98e-20).abs() < 1e-22);
    }
}
