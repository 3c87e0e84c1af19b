// SPDX-License-Identifier: Apache-2.0

//! TOML scenario files: a topology, a cost model, PDR sweeps over it and
//! checks on the resulting columns.
//!
//! ```toml
//! [scenario]
//! name = "rules"
//!
//! [topology]
//! mode = "v1"
//!
//! [bench]
//! execution = "cost-model"
//! precision = 50
//!
//! [[sweep]]
//! name = "v1"
//! variable = "rule_count"
//! values = [1, 20, 40]
//!
//! [[assert]]
//! sweep = "v1"
//! check = "decreasing"
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::behavior::{BehaviorKind, DEFAULT_AGE_SECS};
use crate::node::Mode;
use crate::packet::RawPacket;
use crate::rfc2544::{self, PdrConfig, Sut, SweepError, SweepRow, SweepVariable, TrafficStats};
use crate::simnet::{
    build_standard_topology, traffic_packet, ClockMode, CostModel, CostModelSut, TopologyError, TopologyParams,
    WallClockSut, DEFAULT_PAYLOAD_LEN,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    scenario: Header,
    #[serde(default)]
    topology: TopologySection,
    #[serde(default)]
    cost_model: CostModel,
    #[serde(default)]
    traffic: TrafficSection,
    #[serde(default)]
    bench: BenchSection,
    #[serde(default)]
    sweep: Vec<SweepSection>,
    #[serde(default, rename = "assert")]
    asserts: Vec<AssertSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    name: String,
    #[serde(default)]
    description: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologySection {
    mode: Option<String>,
    vnfs: Option<usize>,
    kind: Option<String>,
    age: Option<u32>,
    plain_rules: Option<usize>,
    extended_rule: Option<bool>,
    target: Option<usize>,
    /// Commands appended to the generated SUT configuration.
    sut_config: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrafficSection {
    payload_len: Option<usize>,
    duration: Option<f64>,
    repetitions: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchSection {
    execution: Option<String>,
    threshold: Option<f64>,
    precision: Option<f64>,
    start_rate: Option<u64>,
    max_rate: Option<u64>,
    agreement: Option<f64>,
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    name: String,
    mode: Option<String>,
    variable: String,
    values: Vec<toml::Value>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssertSection {
    sweep: String,
    check: String,
    tolerance: Option<f64>,
    order: Option<Vec<String>>,
}

/// How the system under test is driven.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    CostModel,
    WallClock,
}

impl Execution {
    pub fn as_str(self) -> &'static str {
        match self {
            Execution::CostModel => "cost-model",
            Execution::WallClock => "wall-clock",
        }
    }
}

impl std::str::FromStr for Execution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cost-model" | "cost_model" => Ok(Execution::CostModel),
            "wall-clock" | "wall_clock" => Ok(Execution::WallClock),
            _ => Err(format!("unknown execution {s} (cost-model, wall-clock)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    /// Strictly decreasing PDR in value order.
    Decreasing,
    /// `(max - min) / max <= tolerance`.
    Flat { tolerance: f64 },
    /// PDR non-increasing along the listed values.
    Order(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub sweep: String,
    pub check: Check,
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.check {
            Check::Decreasing => write!(f, "{}: decreasing", self.sweep),
            Check::Flat { tolerance } => write!(f, "{}: flat within {:.2}%", self.sweep, tolerance * 100.0),
            Check::Order(o) => write!(f, "{}: order {}", self.sweep, o.join(" >= ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub name: String,
    pub mode: Option<Mode>,
    pub variable: SweepVariable,
    pub values: Vec<String>,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub topology: TopologyParams,
    pub cost_model: CostModel,
    pub payload_len: usize,
    pub execution: Execution,
    pub pdr: PdrConfig,
    pub csv: Option<PathBuf>,
    pub sweeps: Vec<Sweep>,
    pub assertions: Vec<Assertion>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("[{section}] {message}")]
    Invalid { section: String, message: String },
    #[error("sweep {sweep}, {variable} = {value}: {error}")]
    Build {
        sweep: String,
        variable: SweepVariable,
        value: String,
        error: TopologyError,
    },
    #[error("sweep {sweep}: {error}")]
    Run { sweep: String, error: SweepError },
    #[error("writing {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

fn invalid(section: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        section: section.to_string(),
        message: message.into(),
    }
}

fn value_string(v: &toml::Value) -> Option<String> {
    match v {
        toml::Value::String(s) => Some(s.clone()),
        toml::Value::Integer(i) => Some(i.to_string()),
        _ => None,
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let f: File = toml::from_str(text)?;
        let t = &f.topology;
        let defaults = TopologyParams::default();
        let topology = TopologyParams {
            mode: match &t.mode {
                Some(m) => m.parse().map_err(|e: String| invalid("topology", e))?,
                None => defaults.mode,
            },
            vnfs: t.vnfs.unwrap_or(defaults.vnfs),
            kind: match &t.kind {
                Some(k) => k.parse().map_err(|_| invalid("topology", format!("unknown behavior {k}")))?,
                None => BehaviorKind::EndAd,
            },
            age: t.age.unwrap_or(DEFAULT_AGE_SECS),
            plain_rules: t.plain_rules.unwrap_or(0),
            extended_rule: t.extended_rule.unwrap_or(false),
            target: t.target,
            extra_config: t.sut_config.clone().unwrap_or_default(),
        };
        topology
            .validate()
            .map_err(|e| invalid("topology", e.to_string()))?;
        f.cost_model.validate().map_err(|e| invalid("cost_model", e))?;

        let execution = match &f.bench.execution {
            Some(e) => e.parse().map_err(|e: String| invalid("bench", e))?,
            None => Execution::CostModel,
        };
        let (default_d, default_reps) = match execution {
            Execution::CostModel => (1.0, 1),
            Execution::WallClock => (10.0, 15),
        };
        let b = &f.bench;
        let base = PdrConfig::default();
        let pdr = PdrConfig {
            threshold: b.threshold.unwrap_or(base.threshold),
            precision: b.precision.unwrap_or(base.precision),
            duration: f.traffic.duration.unwrap_or(default_d),
            repetitions: f.traffic.repetitions.unwrap_or(default_reps),
            start_rate: b.start_rate.unwrap_or(base.start_rate),
            max_rate: b.max_rate.unwrap_or(base.max_rate),
            agreement: b.agreement.unwrap_or(base.agreement),
        };
        if !(pdr.threshold > 0.0 && pdr.threshold < 1.0) {
            return Err(invalid("bench", "threshold must be in (0, 1)"));
        }
        if !(pdr.precision > 0.0) || !(pdr.duration > 0.0) || pdr.start_rate == 0 || pdr.max_rate < pdr.start_rate {
            return Err(invalid("bench", "need precision > 0, duration > 0 and 0 < start_rate <= max_rate"));
        }

        let mut sweeps = Vec::new();
        let mut names = HashSet::new();
        for s in &f.sweep {
            let section = format!("sweep {}", s.name);
            if !names.insert(s.name.clone()) {
                return Err(invalid(&section, "duplicate sweep name"));
            }
            let variable: SweepVariable = s.variable.parse().map_err(|e: String| invalid(&section, e))?;
            let mode = s
                .mode
                .as_deref()
                .map(str::parse)
                .transpose()
                .map_err(|e: String| invalid(&section, e))?;
            let values = s
                .values
                .iter()
                .map(|v| value_string(v).ok_or_else(|| invalid(&section, format!("value {v} is not a string or integer"))))
                .collect::<Result<Vec<_>, _>>()?;
            if values.is_empty() {
                return Err(invalid(&section, "no values"));
            }
            sweeps.push(Sweep {
                name: s.name.clone(),
                mode,
                variable,
                values,
            });
        }

        let mut assertions = Vec::new();
        for a in &f.asserts {
            let section = format!("assert {}", a.sweep);
            let Some(sweep) = sweeps.iter().find(|s| s.name == a.sweep) else {
                return Err(invalid(&section, "no sweep with that name"));
            };
            let check = match a.check.as_str() {
                "decreasing" => Check::Decreasing,
                "flat" => Check::Flat {
                    tolerance: a.tolerance.unwrap_or(0.0),
                },
                "order" => {
                    let order = a.order.clone().ok_or_else(|| invalid(&section, "order needs an order list"))?;
                    if let Some(v) = order.iter().find(|v| !sweep.values.contains(v)) {
                        return Err(invalid(&section, format!("{v} is not a value of the sweep")));
                    }
                    Check::Order(order)
                }
                other => return Err(invalid(&section, format!("unknown check {other} (decreasing, flat, order)"))),
            };
            assertions.push(Assertion {
                sweep: a.sweep.clone(),
                check,
            });
        }

        Ok(Scenario {
            name: f.scenario.name,
            description: f.scenario.description,
            topology,
            cost_model: f.cost_model,
            payload_len: f.traffic.payload_len.unwrap_or(DEFAULT_PAYLOAD_LEN),
            execution,
            pdr,
            csv: f.bench.csv,
            sweeps,
            assertions,
        })
    }

    /// Topology parameters for one sweep value.
    pub fn params_for(&self, sweep: &Sweep, value: &str) -> Result<TopologyParams, String> {
        let mut p = self.topology.clone();
        if let Some(m) = sweep.mode {
            p.mode = m;
        }
        match sweep.variable {
            SweepVariable::Mode => p.mode = value.parse()?,
            SweepVariable::Age => p.age = value.parse().map_err(|_| format!("bad age {value}"))?,
            SweepVariable::RuleCount => {
                let n: usize = value.parse().map_err(|_| format!("bad rule count {value}"))?;
                // Baseline has no per-VNF rules, so the count is plain rules.
                if p.mode == Mode::Baseline {
                    p.plain_rules = n;
                } else {
                    p.vnfs = n;
                    p.target = None;
                }
            }
        }
        Ok(p)
    }

    /// Builds every topology the scenario needs. Nothing runs unless all of
    /// them build.
    pub fn prepare(&self) -> Result<Prepared<'_>, ScenarioError> {
        let mut runs = Vec::new();
        for sweep in &self.sweeps {
            let mut suts = Vec::new();
            for value in &sweep.values {
                let fail = |error| ScenarioError::Build {
                    sweep: sweep.name.clone(),
                    variable: sweep.variable,
                    value: value.clone(),
                    error,
                };
                let p = self
                    .params_for(sweep, value)
                    .map_err(|m| fail(TopologyError::InvalidParams(m)))?;
                let template = traffic_packet(p.kind, p.target(), &vec![0; self.payload_len]);
                let sut = match self.execution {
                    Execution::CostModel => AnySut::Cost(CostModelSut::new(
                        build_standard_topology(&p, ClockMode::Simulated).map_err(fail)?,
                        self.cost_model.clone(),
                    )),
                    Execution::WallClock => {
                        AnySut::Wall(WallClockSut::new(build_standard_topology(&p, ClockMode::Wall).map_err(fail)?))
                    }
                };
                suts.push((sut, template));
            }
            runs.push((sweep, suts));
        }
        Ok(Prepared { scenario: self, runs })
    }
}

pub enum AnySut {
    Cost(CostModelSut),
    Wall(WallClockSut),
}

impl Sut for AnySut {
    fn trial(&mut self, template: &RawPacket, ps: u64, duration: f64) -> TrafficStats {
        match self {
            AnySut::Cost(s) => s.trial(template, ps, duration),
            AnySut::Wall(s) => s.trial(template, ps, duration),
        }
    }
}

/// A scenario whose topologies are all built.
pub struct Prepared<'a> {
    scenario: &'a Scenario,
    runs: Vec<(&'a Sweep, Vec<(AnySut, RawPacket)>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssertionOutcome {
    pub assertion: Assertion,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub name: String,
    pub rows: Vec<SweepRow>,
    /// Rows of each sweep, by sweep name.
    pub by_sweep: BTreeMap<String, Vec<SweepRow>>,
    pub assertions: Vec<AssertionOutcome>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), ScenarioError> {
        let fail = |source| ScenarioError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let file = std::fs::File::create(path).map_err(|e| fail(e.into()))?;
        rfc2544::write_csv(&self.rows, file).map_err(fail)
    }

    /// Human readable summary.
    pub fn render(&self) -> String {
        let mut s = format!("scenario {}\n", self.name);
        for (name, rows) in &self.by_sweep {
            s.push_str(&format!("sweep {name}\n"));
            for r in rows {
                s.push_str(&format!(
                    "  {} = {:>8}  pdr {:>10} pps  dr {:.4}\n",
                    r.variable, r.value, r.pdr_pps, r.dr_at_pdr
                ));
            }
        }
        for a in &self.assertions {
            let verdict = if a.passed { "PASS" } else { "FAIL" };
            s.push_str(&format!("{verdict} {} ({})\n", a.assertion, a.detail));
        }
        s
    }
}

impl Prepared<'_> {
    pub fn run(self) -> Result<ScenarioReport, ScenarioError> {
        let sc = self.scenario;
        let mut rows = Vec::new();
        let mut by_sweep = BTreeMap::new();
        for (sweep, suts) in self.runs {
            let mut suts = suts.into_iter();
            let r = rfc2544::sweep(&sc.name, sweep.variable, &sweep.values, &sc.pdr, |_| {
                suts.next().ok_or_else(|| "missing topology".to_string())
            })
            .map_err(|error| ScenarioError::Run {
                sweep: sweep.name.clone(),
                error,
            })?;
            rows.extend(r.iter().cloned());
            by_sweep.insert(sweep.name.clone(), r);
        }
        let assertions = sc
            .assertions
            .iter()
            .map(|a| evaluate(a, &by_sweep[&a.sweep]))
            .collect();
        Ok(ScenarioReport {
            name: sc.name.clone(),
            rows,
            by_sweep,
            assertions,
        })
    }
}

/// Checks one assertion against the rows of its sweep.
pub fn evaluate(a: &Assertion, rows: &[SweepRow]) -> AssertionOutcome {
    let pdr: Vec<u64> = rows.iter().map(|r| r.pdr_pps).collect();
    let column = pdr.iter().map(u64::to_string).collect::<Vec<_>>().join(", ");
    let (passed, detail) = match &a.check {
        Check::Decreasing => (pdr.windows(2).all(|w| w[0] > w[1]), format!("pdr {column}")),
        Check::Flat { tolerance } => {
            let (lo, hi) = (pdr.iter().min().copied().unwrap_or(0), pdr.iter().max().copied().unwrap_or(0));
            let spread = if hi == 0 { 0.0 } else { (hi - lo) as f64 / hi as f64 };
            (spread <= *tolerance, format!("spread {:.3}%, pdr {column}", spread * 100.0))
        }
        Check::Order(order) => {
            let at = |v: &String| rows.iter().find(|r| &r.value == v).map_or(0, |r| r.pdr_pps);
            let got: Vec<u64> = order.iter().map(at).collect();
            let shown = order
                .iter()
                .zip(&got)
                .map(|(v, p)| format!("{v} {p}"))
                .collect::<Vec<_>>()
                .join(", ");
            (got.windows(2).all(|w| w[0] >= w[1]), shown)
        }
    };
    AssertionOutcome {
        assertion: a.clone(),
        passed,
        detail,
    }
}
