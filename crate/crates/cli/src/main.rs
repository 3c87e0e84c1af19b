// SPDX-License-Identifier: Apache-2.0

//! `srproxy`: configure a node, run scenario files, or sweep PDR from flags.
//!
//! Exit status is 0 on success, 1 when a scenario assertion fails and 2 for
//! usage, configuration or I/O errors.

use std::io::{self, BufRead, IsTerminal, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use srproxy_core::rfc2544::{self, PdrConfig, Sut, SweepVariable, TrafficStats};
use srproxy_core::scenario::{AnySut, Scenario};
use srproxy_core::simnet::{
    build_standard_topology, traffic_packet, ClockMode, CostModel, CostModelSut, TopologyParams, WallClockSut,
    DEFAULT_PAYLOAD_LEN,
};
use srproxy_core::{BehaviorKind, Mode, Node};

const EXIT_ASSERTION: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "srproxy", version, about = "SRv6 service function chaining proxy dataplane")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply an iproute2-style script to a fresh node and print its state.
    Node(NodeArgs),
    /// Run a scenario file and write its CSV.
    Run(RunArgs),
    /// PDR sweep over rule counts, configured from flags.
    Bench(BenchArgs),
}

#[derive(Args)]
struct NodeArgs {
    /// Script file; stdin when omitted (interactive on a terminal).
    script: Option<PathBuf>,
    #[arg(long, default_value = "v2")]
    mode: Mode,
    #[arg(long, default_value = "sut")]
    name: String,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario path, or a name looked up in the scenario directory.
    scenario: String,
    #[arg(long, env = "SRPROXY_SCENARIO_DIR", default_value = "scenarios")]
    scenario_dir: PathBuf,
    /// CSV output, overriding the scenario's own `csv` setting.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "v2")]
    mode: Mode,
    /// Comma-separated rule counts to sweep.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    rules: Vec<usize>,
    #[arg(long, default_value = "End.AD")]
    kind: BehaviorKind,
    #[arg(long, default_value_t = 1)]
    age: u32,
    /// Offer this fixed rate instead of searching for the PDR.
    #[arg(long)]
    ps: Option<u64>,
    /// Trial length in seconds (simulated in cost-model mode).
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    reps: Option<u32>,
    #[arg(long, default_value_t = 0.005)]
    threshold: f64,
    #[arg(long)]
    precision: Option<f64>,
    /// TOML cost model; the built-in defaults when omitted.
    #[arg(long, value_name = "FILE")]
    cost_model: Option<PathBuf>,
    /// Measure the real pipeline instead of the cost model.
    #[arg(long)]
    wall_clock: bool,
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure {
            code: EXIT_USAGE,
            error,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Node(a) => node(a),
        Command::Run(a) => run(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn node(a: NodeArgs) -> Result<(), Failure> {
    let mut n = Node::new(&a.name, a.mode);
    match &a.script {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            apply(&mut n, &text).with_context(|| path.display().to_string())?;
        }
        None if io::stdin().is_terminal() => interactive(&mut n)?,
        None => {
            let mut text = String::new();
            io::stdin().read_to_string(&mut text).context("reading stdin")?;
            apply(&mut n, &text).context("stdin")?;
        }
    }
    if let Err(e) = n.validate() {
        eprintln!("warning: {e}");
    }
    print!("{}", n.show_state());
    Ok(())
}

fn apply(n: &mut Node, text: &str) -> Result<()> {
    let out = n.apply_config(text)?;
    print!("{out}");
    Ok(())
}

fn interactive(n: &mut Node) -> Result<()> {
    let stdin = io::stdin();
    let mut pending = String::new();
    loop {
        print!("{}> ", if pending.is_empty() { n.name() } else { "" });
        io::stdout().flush()?;
        let mut line = String::new();
        if stdin.lock().read_line(&mut line)? == 0 {
            println!();
            return Ok(());
        }
        let line = line.trim_end();
        if let Some(head) = line.strip_suffix('\\') {
            pending.push_str(head);
            pending.push(' ');
            continue;
        }
        pending.push_str(line);
        let cmd = std::mem::take(&mut pending);
        match cmd.trim() {
            "quit" | "exit" => return Ok(()),
            "show" => print!("{}", n.show_state()),
            _ => match n.apply_config(&cmd) {
                Ok(out) => print!("{out}"),
                Err(e) => eprintln!("error: {e}"),
            },
        }
    }
}

fn locate(name: &str, dir: &Path) -> Result<PathBuf> {
    let direct = PathBuf::from(name);
    if direct.is_file() {
        return Ok(direct);
    }
    for candidate in [dir.join(name), dir.join(format!("{name}.scenario"))] {
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    bail!("no scenario {name} (also looked in {})", dir.display())
}

fn run(a: RunArgs) -> Result<(), Failure> {
    let path = locate(&a.scenario, &a.scenario_dir)?;
    let sc = Scenario::load(&path).with_context(|| path.display().to_string())?;
    let report = sc
        .prepare()
        .and_then(|p| p.run())
        .with_context(|| format!("scenario {}", sc.name))?;
    print!("{}", report.render());
    if let Some(csv) = a.csv.or(sc.csv.clone()) {
        report.write_csv(&csv).context("writing CSV")?;
        println!("wrote {}", csv.display());
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_ASSERTION,
            error: anyhow::anyhow!("scenario {}: assertion failed", sc.name),
        })
    }
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    let model = match &a.cost_model {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let m: CostModel = toml::from_str(&text).with_context(|| path.display().to_string())?;
            m.validate().map_err(anyhow::Error::msg)?;
            m
        }
        None => CostModel::default(),
    };
    let (default_d, default_reps) = if a.wall_clock { (10.0, 15) } else { (1.0, 1) };
    let base = PdrConfig::default();
    let cfg = PdrConfig {
        threshold: a.threshold,
        precision: a.precision.unwrap_or(base.precision),
        duration: a.duration.unwrap_or(default_d),
        repetitions: a.reps.unwrap_or(default_reps),
        ..base
    };
    let values: Vec<String> = a.rules.iter().map(usize::to_string).collect();
    let family = |value: &str| -> Result<(AnySut, srproxy_core::RawPacket), String> {
        let n: usize = value.parse().map_err(|_| format!("bad rule count {value}"))?;
        let p = params(&a, n);
        let template = traffic_packet(p.kind, p.target(), &[0; DEFAULT_PAYLOAD_LEN]);
        let sut = if a.wall_clock {
            AnySut::Wall(WallClockSut::new(
                build_standard_topology(&p, ClockMode::Wall).map_err(|e| e.to_string())?,
            ))
        } else {
            AnySut::Cost(CostModelSut::new(
                build_standard_topology(&p, ClockMode::Simulated).map_err(|e| e.to_string())?,
                model.clone(),
            ))
        };
        Ok((sut, template))
    };

    if let Some(ps) = a.ps {
        println!("rules  ps  p_in  p_out  throughput  dr");
        for v in &values {
            let (mut sut, tpl) = family(v).map_err(anyhow::Error::msg)?;
            for _ in 0..cfg.repetitions.max(1) {
                let s: TrafficStats = sut.trial(&tpl, ps, cfg.duration);
                println!("{v}  {ps}  {}  {}  {:.1}  {:.5}", s.p_in, s.p_out, s.throughput, s.delivery_ratio);
            }
        }
        return Ok(());
    }

    let rows = rfc2544::sweep("bench", SweepVariable::RuleCount, &values, &cfg, family).context("sweep")?;
    for r in &rows {
        println!(
            "{} rules {:>5}  pdr {:>10} pps  stddev {:.1}  dr {:.4}",
            a.mode, r.value, r.pdr_pps, r.stddev, r.dr_at_pdr
        );
    }
    if let Some(path) = &a.csv {
        let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        rfc2544::write_csv(&rows, file).with_context(|| path.display().to_string())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn params(a: &BenchArgs, rules: usize) -> TopologyParams {
    let mut p = TopologyParams {
        mode: a.mode,
        kind: if a.mode == Mode::Baseline { BehaviorKind::End } else { a.kind },
        age: a.age,
        ..TopologyParams::default()
    };
    // Baseline has no per-VNF rules, so the count is plain rules.
    if a.mode == Mode::Baseline {
        p.plain_rules = rules;
    } else {
        p.vnfs = rules.max(1);
    }
    p
}
