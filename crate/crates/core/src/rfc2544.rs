// SPDX-License-Identifier: Apache-2.0

//! RFC 2544 style measurements: delivery ratio trials and the partial
//! drop rate (PDR) search.
//!
//! Symbols follow the usual benchmarking notation: `PS` is the offered
//! rate, `D` the trial duration, `P_IN`/`P_OUT` the packets offered to and
//! delivered by the system under test, `T = P_OUT / D` the throughput and
//! `DR = P_OUT / P_IN` the delivery ratio.

use std::fmt;
use std::io;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::packet::RawPacket;

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficStats {
    pub ps: u64,
    pub duration: f64,
    pub p_in: u64,
    pub p_out: u64,
    pub throughput: f64,
    pub delivery_ratio: f64,
}

impl TrafficStats {
    pub fn new(ps: u64, duration: f64, p_in: u64, p_out: u64) -> Self {
        assert!(p_out <= p_in, "delivered {p_out} of {p_in} packets");
        TrafficStats {
            ps,
            duration,
            p_in,
            p_out,
            throughput: p_out as f64 / duration,
            delivery_ratio: if p_in == 0 { 1.0 } else { p_out as f64 / p_in as f64 },
        }
    }

    /// Packets offered at `ps` over `duration` seconds.
    pub fn offered(ps: u64, duration: f64) -> u64 {
        (ps as f64 * duration).round() as u64
    }
}

/// A system that can be driven at a fixed rate.
pub trait Sut {
    fn trial(&mut self, template: &RawPacket, ps: u64, duration: f64) -> TrafficStats;
}

impl<F: FnMut(&RawPacket, u64, f64) -> TrafficStats> Sut for F {
    fn trial(&mut self, template: &RawPacket, ps: u64, duration: f64) -> TrafficStats {
        self(template, ps, duration)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficSpec {
    pub template: RawPacket,
    pub ps: u64,
    /// Seconds.
    pub duration: f64,
    pub repetitions: u32,
}

/// Repeated trials at one rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub reps: Vec<TrafficStats>,
    pub mean_throughput: f64,
    pub stddev_throughput: f64,
    pub mean_dr: f64,
    pub stddev_dr: f64,
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    let var = if n > 1 {
        xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    (mean, var.sqrt())
}

impl TrialSummary {
    pub fn from_reps(reps: Vec<TrafficStats>) -> Self {
        let (mean_throughput, stddev_throughput) = mean_std(reps.iter().map(|r| r.throughput));
        let (mean_dr, stddev_dr) = mean_std(reps.iter().map(|r| r.delivery_ratio));
        TrialSummary {
            reps,
            mean_throughput,
            stddev_throughput,
            mean_dr,
            stddev_dr,
        }
    }
}

pub fn run_trial(sut: &mut dyn Sut, spec: &TrafficSpec) -> TrialSummary {
    assert!(spec.ps > 0 && spec.duration > 0.0, "PS and D must be positive");
    let reps = (0..spec.repetitions.max(1))
        .map(|_| sut.trial(&spec.template, spec.ps, spec.duration))
        .collect();
    TrialSummary::from_reps(reps)
}

/// Loss threshold as an exact fraction `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LossThreshold {
    num: u64,
    den: u64,
}

impl LossThreshold {
    const SCALE: u64 = 1_000_000_000;

    /// Rounds to nine decimal places.
    pub fn new(threshold: f64) -> Option<Self> {
        (threshold > 0.0 && threshold < 1.0).then(|| LossThreshold {
            num: (threshold * Self::SCALE as f64).round() as u64,
            den: Self::SCALE,
        })
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `P_OUT / P_IN >= 1 - threshold`, evaluated on integers.
    pub fn accepts(self, p_in: u64, p_out: u64) -> bool {
        u128::from(p_out) * u128::from(self.den) >= u128::from(p_in) * u128::from(self.den - self.num)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdrConfig {
    /// Loss ratio, e.g. 0.005 for PDR@0.5%.
    pub threshold: f64,
    /// Search stops once the bracket is at most this wide (packets/s).
    pub precision: f64,
    pub duration: f64,
    pub repetitions: u32,
    /// First rate probed.
    pub start_rate: u64,
    /// Rates above this are not tried.
    pub max_rate: u64,
    /// Share of repetitions that must meet the threshold for a rate to pass.
    pub agreement: f64,
}

impl Default for PdrConfig {
    fn default() -> Self {
        PdrConfig {
            threshold: 0.005,
            precision: 1000.0,
            duration: 1.0,
            repetitions: 1,
            start_rate: 1000,
            max_rate: 100_000_000,
            agreement: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdrError {
    #[error("delivery ratio stays above the threshold up to {max_rate} pps")]
    NeverDrops { max_rate: u64 },
    #[error("even 1 pps exceeds the loss threshold")]
    AlwaysDrops,
    #[error("invalid search parameters: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdrResult {
    pub threshold: f64,
    /// Highest passing rate found.
    pub rate: u64,
    pub precision: f64,
    /// Every probe as (PS, mean DR), in search order.
    pub trials: Vec<(u64, f64)>,
    /// Repetitions at `rate`.
    pub at_rate: TrialSummary,
    /// Lowest failing rate found; `rate + precision >= failing_rate`.
    pub failing_rate: u64,
}

/// Geometric ramp (x2) to bracket the PDR, then bisection down to the
/// requested precision. Returns the lower end of the final bracket.
pub fn pdr_search(sut: &mut dyn Sut, template: &RawPacket, cfg: &PdrConfig) -> Result<PdrResult, PdrError> {
    let thr = LossThreshold::new(cfg.threshold)
        .ok_or_else(|| PdrError::InvalidConfig(format!("threshold {} not in (0, 1)", cfg.threshold)))?;
    if !(cfg.precision > 0.0) {
        return Err(PdrError::InvalidConfig("precision must be positive".into()));
    }
    if !(cfg.duration > 0.0) {
        return Err(PdrError::InvalidConfig("duration must be positive".into()));
    }
    if cfg.start_rate == 0 || cfg.max_rate < cfg.start_rate {
        return Err(PdrError::InvalidConfig("need 0 < start_rate <= max_rate".into()));
    }
    let reps = cfg.repetitions.max(1);
    let needed = (cfg.agreement.clamp(0.0, 1.0) * f64::from(reps)).ceil().max(1.0) as usize;
    let mut trials = Vec::new();
    let mut probe = |ps: u64| -> (bool, TrialSummary) {
        let s = TrialSummary::from_reps((0..reps).map(|_| sut.trial(template, ps, cfg.duration)).collect());
        let ok = s.reps.iter().filter(|r| thr.accepts(r.p_in, r.p_out)).count() >= needed;
        trials.push((ps, s.mean_dr));
        (ok, s)
    };

    let (mut lo, mut lo_summary, mut hi);
    let (ok, s) = probe(cfg.start_rate);
    if ok {
        (lo, lo_summary) = (cfg.start_rate, s);
        loop {
            if lo >= cfg.max_rate {
                return Err(PdrError::NeverDrops { max_rate: cfg.max_rate });
            }
            let next = lo.saturating_mul(2).min(cfg.max_rate);
            let (ok, s) = probe(next);
            if ok {
                (lo, lo_summary) = (next, s);
            } else {
                hi = next;
                break;
            }
        }
    } else {
        hi = cfg.start_rate;
        loop {
            let next = hi / 2;
            if next == 0 {
                return Err(PdrError::AlwaysDrops);
            }
            let (ok, s) = probe(next);
            if ok {
                (lo, lo_summary) = (next, s);
                break;
            }
            hi = next;
        }
    }
    while (hi - lo) as f64 > cfg.precision && hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let (ok, s) = probe(mid);
        if ok {
            (lo, lo_summary) = (mid, s);
        } else {
            hi = mid;
        }
    }
    Ok(PdrResult {
        threshold: thr.as_f64(),
        rate: lo,
        precision: cfg.precision,
        trials,
        at_rate: lo_summary,
        failing_rate: hi,
    })
}

/// Parameter varied across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVariable {
    RuleCount,
    Mode,
    Age,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::RuleCount => "rule_count",
            SweepVariable::Mode => "mode",
            SweepVariable::Age => "age",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepVariable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rule_count" | "rules" => Ok(SweepVariable::RuleCount),
            "mode" => Ok(SweepVariable::Mode),
            "age" => Ok(SweepVariable::Age),
            _ => Err(format!("unknown sweep variable {s} (rule_count, mode, age)")),
        }
    }
}

/// One CSV row per swept value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scenario: String,
    pub variable: String,
    pub value: String,
    pub pdr_pps: u64,
    pub stddev: f64,
    pub dr_at_pdr: f64,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("{variable}={value}: {message}")]
    Setup {
        variable: SweepVariable,
        value: String,
        message: String,
    },
    #[error("{variable}={value}: {source}")]
    Search {
        variable: SweepVariable,
        value: String,
        source: PdrError,
    },
}

/// Runs a PDR search for each value. `family` builds the system under test
/// and its traffic template for one value.
pub fn sweep<S, F>(
    scenario: &str,
    variable: SweepVariable,
    values: &[String],
    cfg: &PdrConfig,
    mut family: F,
) -> Result<Vec<SweepRow>, SweepError>
where
    S: Sut,
    F: FnMut(&str) -> Result<(S, RawPacket), String>,
{
    let mut rows = Vec::with_capacity(values.len());
    for v in values {
        let (mut sut, template) = family(v).map_err(|message| SweepError::Setup {
            variable,
            value: v.clone(),
            message,
        })?;
        let r = pdr_search(&mut sut, &template, cfg).map_err(|source| SweepError::Search {
            variable,
            value: v.clone(),
            source,
        })?;
        rows.push(SweepRow {
            scenario: scenario.to_string(),
            variable: variable.as_str().to_string(),
            value: v.clone(),
            pdr_pps: r.rate,
            stddev: r.at_rate.stddev_throughput,
            dr_at_pdr: r.at_rate.mean_dr,
        });
    }
    Ok(rows)
}

pub fn write_csv<W: io::Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
