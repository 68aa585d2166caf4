//! Run reports as structured key/value text, and report comparison.
//!
//! ```text
//! # doppler-cloak run report v1
//! scenario.<dotted config key> = <TOML value>
//! metric.<name> = <number> | skipped: <reason>
//! artifact.<name> = <path>
//! wall_time_s = <number>
//! ```
//!
//! Lines starting with `#` and blank lines are ignored. Keys are unique and
//! written in sorted order within each section.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::scenario::ScenarioConfig;
use crate::simulation::SimulationOutput;
use crate::spectral::{occupied_bandwidth, peak_doppler_track, spectrogram_correlation, Spectrogram};
use crate::{Error, Result};

pub const REPORT_HEADER: &str = "# doppler-cloak run report v1";

#[derive(Debug, Clone, PartialEq)]
pub enum MetricValue {
    Value(f64),
    Skipped(String),
}

impl MetricValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            MetricValue::Value(v) => Some(*v),
            MetricValue::Skipped(_) => None,
        }
    }
}

impl std::fmt::Display for MetricValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricValue::Value(v) => write!(f, "{v}"),
            MetricValue::Skipped(reason) => write!(f, "skipped: {reason}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub scenario: BTreeMap<String, String>,
    pub metrics: BTreeMap<String, MetricValue>,
    pub artifacts: BTreeMap<String, String>,
    pub wall_time_s: f64,
}

/// Spectrograms to correlate against, from an earlier run or the built-in
/// clean baseline.
#[derive(Debug, Clone)]
pub struct Baseline {
    pub method1: Spectrogram,
    pub method2: Spectrogram,
    pub source: String,
}

/// Flatten the scenario into dotted keys with TOML-rendered values.
pub fn scenario_echo(cfg: &ScenarioConfig) -> Result<BTreeMap<String, String>> {
    let value = toml::Value::try_from(cfg).map_err(|e| Error::Report(format!("cannot serialize scenario: {e}")))?;
    let mut out = BTreeMap::new();
    flatten("scenario", &value, &mut out);
    Ok(out)
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut BTreeMap<String, String>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                flatten(&format!("{prefix}.{k}"), v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
}

fn track_summary(metrics: &mut BTreeMap<String, MetricValue>, view: &str, s: &Spectrogram) {
    let track = peak_doppler_track(s);
    let max_abs = track.iter().map(|f| f.abs()).fold(0.0, f64::max);
    let mean = track.iter().sum::<f64>() / track.len().max(1) as f64;
    metrics.insert(format!("peak_doppler_{view}_max_abs_hz"), MetricValue::Value(max_abs));
    metrics.insert(format!("peak_doppler_{view}_mean_hz"), MetricValue::Value(mean));
}

fn metric_from(r: Result<f64>) -> MetricValue {
    match r {
        Ok(v) => MetricValue::Value(v),
        Err(e) => MetricValue::Skipped(e.to_string()),
    }
}

/// All report metrics. The correlation metrics use `baseline` when given,
/// else the run's own clean baseline, and are skipped when neither exists.
pub fn compute_metrics(out: &SimulationOutput, baseline: Option<&Baseline>) -> BTreeMap<String, MetricValue> {
    let mut m = BTreeMap::new();
    let fraction = out.config.analysis.energy_fraction;
    let s = &out.sensing;
    m.insert(
        "occupied_bandwidth_method1_hz".into(),
        metric_from(occupied_bandwidth(&s.method1, fraction)),
    );
    m.insert(
        "occupied_bandwidth_method2_hz".into(),
        metric_from(occupied_bandwidth(&s.method2, fraction)),
    );
    track_summary(&mut m, "method1", &s.method1);
    track_summary(&mut m, "method2", &s.method2);

    let internal = out.clean_sensing.as_ref().map(|c| Baseline {
        method1: c.method1.clone(),
        method2: c.method2.clone(),
        source: "clean".into(),
    });
    match baseline.or(internal.as_ref()) {
        Some(b) => {
            m.insert(
                "correlation_method1".into(),
                metric_from(spectrogram_correlation(&b.method1, &s.method1)),
            );
            m.insert(
                "correlation_method2".into(),
                metric_from(spectrogram_correlation(&b.method2, &s.method2)),
            );
        }
        None => {
            for k in ["correlation_method1", "correlation_method2"] {
                m.insert(k.into(), MetricValue::Skipped("no defense and no baseline report".into()));
            }
        }
    }

    match &out.comms {
        Some(c) => {
            m.insert("ber".into(), MetricValue::Value(c.ber));
            m.insert("evm".into(), MetricValue::Value(c.evm));
            m.insert("comms_bits".into(), MetricValue::Value(c.bits as f64));
        }
        None => {
            for k in ["ber", "evm", "comms_bits"] {
                m.insert(k.into(), MetricValue::Skipped("no comms frames configured".into()));
            }
        }
    }
    match (&out.comms, &out.clean_comms) {
        (Some(c), Some(clean)) => {
            m.insert("ber_clean".into(), MetricValue::Value(clean.ber));
            m.insert("evm_clean".into(), MetricValue::Value(clean.evm));
            m.insert("ber_delta".into(), MetricValue::Value(c.ber - clean.ber));
        }
        _ => {
            for k in ["ber_clean", "evm_clean", "ber_delta"] {
                m.insert(k.into(), MetricValue::Skipped("no defense or no comms frames".into()));
            }
        }
    }
    m
}

impl RunReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(REPORT_HEADER);
        s.push('\n');
        for (k, v) in &self.scenario {
            let _ = writeln!(s, "{k} = {v}");
        }
        for (k, v) in &self.metrics {
            let _ = writeln!(s, "metric.{k} = {v}");
        }
        for (k, v) in &self.artifacts {
            let _ = writeln!(s, "artifact.{k} = {v}");
        }
        let _ = writeln!(s, "wall_time_s = {}", self.wall_time_s);
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut r = RunReport::default();
        let mut saw_wall = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(" = ")
                .ok_or_else(|| Error::Report(format!("line {}: expected `key = value`", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key.starts_with("scenario.") {
                r.scenario.insert(key.to_string(), value.to_string());
            } else if let Some(name) = key.strip_prefix("metric.") {
                let v = match value.strip_prefix("skipped:") {
                    Some(reason) => MetricValue::Skipped(reason.trim().to_string()),
                    None => MetricValue::Value(value.parse().map_err(|_| {
                        Error::Report(format!("line {}: metric {name} is not a number", i + 1))
                    })?),
                };
                r.metrics.insert(name.to_string(), v);
            } else if let Some(name) = key.strip_prefix("artifact.") {
                r.artifacts.insert(name.to_string(), value.to_string());
            } else if key == "wall_time_s" {
                r.wall_time_s = value
                    .parse()
                    .map_err(|_| Error::Report(format!("line {}: bad wall time", i + 1)))?;
                saw_wall = true;
            } else {
                return Err(Error::Report(format!("line {}: unknown key `{key}`", i + 1)));
            }
        }
        if !saw_wall && r.metrics.is_empty() {
            return Err(Error::Report("not a run report".into()));
        }
        Ok(r)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Report(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// A limit checked by `compare`.
#[derive(Debug, Clone, PartialEq)]
pub enum Threshold {
    /// |B − A| ≤ limit.
    MaxDelta(String, f64),
    /// B ≤ limit.
    MaxValue(String, f64),
}

impl Threshold {
    /// Parse `KEY=VALUE`.
    pub fn parse_pair(s: &str) -> Result<(String, f64)> {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("threshold `{s}` is not KEY=VALUE")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("threshold `{s}` has a non-numeric limit")))?;
        Ok((k.trim().to_string(), v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub metric: String,
    pub a: Option<MetricValue>,
    pub b: Option<MetricValue>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub warnings: Vec<String>,
    pub violations: Vec<String>,
}

/// Side-by-side metric deltas (B − A). Scenario differences are reported as
/// warnings; a threshold on a metric missing from either report is an error.
pub fn compare(a: &RunReport, b: &RunReport, thresholds: &[Threshold]) -> Result<Comparison> {
    let mut warnings = Vec::new();
    let keys: std::collections::BTreeSet<&String> = a.scenario.keys().chain(b.scenario.keys()).collect();
    for k in keys {
        if k.starts_with("scenario.obfuscation.") || k == "scenario.seed" {
            continue;
        }
        match (a.scenario.get(k), b.scenario.get(k)) {
            (Some(x), Some(y)) if x == y => {}
            (x, y) => warnings.push(format!(
                "scenarios differ at {k}: {} vs {}",
                x.map_or("(absent)", String::as_str),
                y.map_or("(absent)", String::as_str)
            )),
        }
    }

    let names: std::collections::BTreeSet<&String> = a.metrics.keys().chain(b.metrics.keys()).collect();
    let rows: Vec<ComparisonRow> = names
        .into_iter()
        .map(|name| {
            let (x, y) = (a.metrics.get(name), b.metrics.get(name));
            let delta = match (x.and_then(MetricValue::value), y.and_then(MetricValue::value)) {
                (Some(x), Some(y)) => Some(y - x),
                _ => None,
            };
            ComparisonRow {
                metric: name.clone(),
                a: x.cloned(),
                b: y.cloned(),
                delta,
            }
        })
        .collect();

    let value = |r: &RunReport, which: &str, key: &str| -> Result<f64> {
        r.metrics
            .get(key)
            .and_then(MetricValue::value)
            .ok_or_else(|| Error::MissingMetric(format!("metric `{key}` is missing or skipped in report {which}")))
    };
    let mut violations = Vec::new();
    for t in thresholds {
        match t {
            Threshold::MaxDelta(key, limit) => {
                let d = value(b, "B", key)? - value(a, "A", key)?;
                if d.abs() > *limit {
                    violations.push(format!("|Δ {key}| = {} exceeds {limit}", d.abs()));
                }
            }
            Threshold::MaxValue(key, limit) => {
                let v = value(b, "B", key)?;
                if v > *limit {
                    violations.push(format!("{key} = {v} exceeds {limit}"));
                }
            }
        }
    }
    Ok(Comparison {
        rows,
        warnings,
        violations,
    })
}

impl Comparison {
    pub fn to_table(&self) -> String {
        let show = |v: &Option<MetricValue>| match v {
            None => "missing".to_string(),
            Some(MetricValue::Value(x)) => format!("{x:.6e}"),
            Some(MetricValue::Skipped(_)) => "skipped".to_string(),
        };
        let width = self.rows.iter().map(|r| r.metric.len()).max().unwrap_or(6).max(6);
        let mut s = String::new();
        let _ = writeln!(s, "{:<width$}  {:>14}  {:>14}  {:>14}", "metric", "A", "B", "B-A");
        for r in &self.rows {
            let delta = r.delta.map_or("-".to_string(), |d| format!("{d:.6e}"));
            let _ = writeln!(s, "{:<width$}  {:>14}  {:>14}  {:>14}", r.metric, show(&r.a), show(&r.b), delta);
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        for v in &self.violations {
            let _ = writeln!(s, "threshold violated: {v}");
        }
        s
    }
}
