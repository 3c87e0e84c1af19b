// SPDX-License-Identifier: Apache-2.0

//! In-memory test network: a traffic generator/receiver (TGR) wired to a
//! system under test (SUT) hosting VNF stubs.
//!
//! ```text
//!   tgr.sender ---> sut.in    sut.veth0 <-> vnf 1
//!   tgr.receiver <- sut.out   sut.veth1 <-> vnf 2 ...
//! ```
//!
//! Two ways to drive it: [`CostModelSut`] charges every packet an abstract
//! cost derived from its pipeline trace against a per-second budget, which
//! makes throughput fully deterministic; [`WallClockSut`] runs the real
//! pipeline on a thread fed through a bounded queue.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::net::Ipv6Addr;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, TrySendError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{BehaviorKind, Clock, DropReason, ManualClock, SystemClock, DEFAULT_AGE_SECS};
use crate::node::{ApplyError, Journey, Mode, Node, NodeError, PipelineTrace};
use crate::packet::{self, udp::build_udp_packet, RawPacket};
use crate::routing::IfIndex;
use crate::rfc2544::{Sut, TrafficStats};

pub const SENDER_ADDR: Ipv6Addr = Ipv6Addr::new(0xfd00, 1, 0, 0, 0, 0, 0, 1);
/// Last segment of every path; owned by the receiver side.
pub const RECEIVER_SID: Ipv6Addr = Ipv6Addr::new(0xfd00, 2, 0, 0, 0, 0, 0, 1);
/// Destination of the inner packet.
pub const INNER_DST: Ipv6Addr = Ipv6Addr::new(0xfd00, 2, 0, 0, 0, 0, 0, 0x100);
pub const RECEIVER_PREFIX: &str = "fd00:2::/64";
pub const SRC_PORT: u16 = 1000;
pub const DST_PORT: u16 = 2000;
/// UDP payload of the default template: 40 + 8 + 12 = 60 bytes inner.
pub const DEFAULT_PAYLOAD_LEN: usize = 12;
pub const DEFAULT_QUEUE_LEN: usize = 512;

pub const TGR: &str = "tgr";
pub const SUT: &str = "sut";
const MAX_NODE_HOPS: usize = 16;

/// SID of the `i`-th VNF, 1-based: `fdf1::2`, `fdf1:1::2`, ...
pub fn vnf_sid(i: usize) -> Ipv6Addr {
    assert!((1..=0x1_0000).contains(&i), "VNF index {i} out of range");
    Ipv6Addr::new(0xfdf1, (i - 1) as u16, 0, 0, 0, 0, 0, 2)
}

/// Interface of the `i`-th VNF, 1-based.
pub fn vnf_iface(i: usize) -> String {
    format!("veth{}", i - 1)
}

/// Policy table of the `i`-th VNF in v1 wiring: 100, 101, ... skipping the
/// reserved ids 253 to 255.
pub fn v1_table(i: usize) -> u32 {
    let t = 99 + i as u32;
    if t >= 253 {
        t + 3
    } else {
        t
    }
}

/// The inner UDP packet the generator wraps.
pub fn inner_packet(payload: &[u8]) -> RawPacket {
    build_udp_packet(SENDER_ADDR, INNER_DST, SRC_PORT, DST_PORT, payload)
}

/// A packet steered through VNF `target`. End.AM traffic carries an
/// inserted SRH; everything else is encapsulated with `[sid, RECEIVER_SID]`.
pub fn traffic_packet(kind: BehaviorKind, target: usize, payload: &[u8]) -> RawPacket {
    let inner = inner_packet(payload);
    let r = match kind {
        BehaviorKind::EndAm => packet::insert_srh(inner.as_bytes(), &[vnf_sid(target), INNER_DST]),
        _ => packet::encap(inner.as_bytes(), &[vnf_sid(target), RECEIVER_SID], SENDER_ADDR),
    };
    r.expect("generated paths are valid")
}

/// Outer headers a learning proxy would cache for traffic to `target`.
pub fn learned_headers(target: usize) -> Vec<u8> {
    let mut p = traffic_packet(BehaviorKind::EndAd, target, &[]);
    packet::advance_in_place(p.as_mut_bytes()).expect("two segments");
    let inner_len = inner_packet(&[]).len();
    p.as_bytes()[..p.len() - inner_len].to_vec()
}

/// Shape of the standard topology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyParams {
    pub mode: Mode,
    /// VNFs behind the SUT, one interface and SID each.
    pub vnfs: usize,
    /// Proxy behavior used in the proxy modes.
    pub kind: BehaviorKind,
    /// End.AD `age`, seconds.
    pub age: u32,
    /// Extra `iif` rules that never match, ahead of everything else.
    pub plain_rules: usize,
    /// Adds one extended rule even when nothing needs it.
    pub extended_rule: bool,
    /// VNF addressed by the default template (1-based); `None` is the last.
    pub target: Option<usize>,
    /// Appended to the generated SUT configuration.
    pub extra_config: String,
}

impl Default for TopologyParams {
    fn default() -> Self {
        TopologyParams {
            mode: Mode::SrnkV2,
            vnfs: 1,
            kind: BehaviorKind::EndAd,
            age: DEFAULT_AGE_SECS,
            plain_rules: 0,
            extended_rule: false,
            target: None,
            extra_config: String::new(),
        }
    }
}

impl TopologyParams {
    pub fn target(&self) -> usize {
        self.target.unwrap_or(self.vnfs)
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let bad = |m: String| Err(TopologyError::InvalidParams(m));
        if self.vnfs == 0 || self.vnfs > 0x1_0000 {
            return bad(format!("vnfs must be in 1..=65536, got {}", self.vnfs));
        }
        if !(1..=self.vnfs).contains(&self.target()) {
            return bad(format!("target {} not in 1..={}", self.target(), self.vnfs));
        }
        if self.mode != Mode::Baseline && !self.kind.is_proxy() {
            return bad(format!("mode {} needs a proxy behavior, got {}", self.mode, self.kind));
        }
        Ok(())
    }

    /// Template packet for this topology.
    pub fn template(&self) -> RawPacket {
        traffic_packet(self.kind, self.target(), &[0; DEFAULT_PAYLOAD_LEN])
    }
}

fn proxy_args(p: &TopologyParams, i: usize) -> String {
    let mut s = String::new();
    match p.kind {
        BehaviorKind::EndAd => {
            let _ = write!(s, " age {}", p.age);
        }
        BehaviorKind::EndAs => {
            let _ = write!(s, " headers {}", hex::encode(learned_headers(i)));
        }
        _ => {}
    }
    s
}

/// Configuration script of the SUT for `p`.
pub fn sut_config(p: &TopologyParams) -> String {
    let mut s = String::from("link add in\nlink add out\n");
    for i in 1..=p.vnfs {
        let _ = writeln!(s, "link add {}", vnf_iface(i));
    }
    if p.plain_rules > 0 {
        s.push_str("link add unused\n");
        for j in 0..p.plain_rules {
            let _ = writeln!(s, "rule add iif unused table {}", 1_000_000 + j);
        }
    }
    let _ = writeln!(s, "route add {RECEIVER_PREFIX} via {RECEIVER_SID} dev out");
    let kind = p.kind;
    for i in 1..=p.vnfs {
        let (sid, dev) = (vnf_sid(i), vnf_iface(i));
        let args = proxy_args(p, i);
        match p.mode {
            Mode::Baseline => {
                let _ = writeln!(s, "route add {sid}/128 via {sid} dev {dev}");
                let _ = writeln!(s, "vnf bind {dev} type end sid {sid} route {RECEIVER_PREFIX}");
                continue;
            }
            Mode::SrnkV2 | Mode::Srext => {
                let _ = writeln!(
                    s,
                    "route add {sid}/128 encap seg6local action {kind} oif {dev} nh6 {sid}{args} dev {dev}"
                );
            }
            Mode::SrnkV1 => {
                let table = v1_table(i);
                let _ = writeln!(
                    s,
                    "route add {sid}/128 encap seg6local action {kind} chain inbound oif {dev} nh6 {sid}{args} dev {dev}"
                );
                let _ = writeln!(s, "rule add iif {dev} table {table}");
                let _ = writeln!(
                    s,
                    "route add default encap seg6local action {kind} chain fromVNF iif {dev}{args} dev {dev} table {table}"
                );
            }
        }
        let _ = writeln!(s, "vnf bind {dev} type passthrough route {RECEIVER_PREFIX}");
    }
    if p.mode == Mode::SrnkV2 || p.extended_rule {
        let _ = writeln!(s, "rule add seg6local-behaviour {}", if kind.is_proxy() { kind } else { BehaviorKind::EndAd });
    }
    s.push_str(&p.extra_config);
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("invalid topology parameters: {0}")]
    InvalidParams(String),
    #[error("node {node}: {error}")]
    Config { node: String, error: ApplyError },
    #[error("node {node}: {error}")]
    Node { node: String, error: NodeError },
    #[error("duplicate node {0}")]
    DuplicateNode(String),
    #[error("unknown endpoint {0}")]
    UnknownEndpoint(Endpoint),
    #[error("interface {0} is already linked")]
    AlreadyLinked(Endpoint),
}

/// A node interface.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Endpoint {
    pub node: String,
    pub iface: String,
}

impl Endpoint {
    pub fn new(node: &str, iface: &str) -> Self {
        Endpoint {
            node: node.to_string(),
            iface: iface.to_string(),
        }
    }
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.node, self.iface)
    }
}

/// A node interface by position, for the forwarding path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Port {
    pub node: usize,
    pub iface: IfIndex,
}

/// Bidirectional, lossless, zero-delay link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub a: Endpoint,
    pub b: Endpoint,
}

/// Fate of one injected packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Delivery {
    /// Reached a traffic endpoint on `at`.
    Delivered { at: Port, packet: RawPacket },
    Dropped { node: usize, reason: DropReason },
    /// Left a node on an interface with no link attached.
    Unlinked(Port),
}

/// Which clock the nodes read for `age` decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockMode {
    /// Advanced explicitly by the simulator.
    Simulated,
    Wall,
}

pub struct Topology {
    nodes: Vec<Node>,
    /// Nodes that source and sink traffic instead of forwarding it.
    endpoints: Vec<bool>,
    links: Vec<Link>,
    /// `peers[node][iface]` is the far end of the link on that interface.
    peers: Vec<Vec<Option<Port>>>,
    sim_clock: Option<Arc<ManualClock>>,
    clock: Arc<dyn Clock>,
    journey: Journey,
}

impl std::fmt::Debug for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Topology")
            .field("nodes", &self.nodes.iter().map(Node::name).collect::<Vec<_>>())
            .field("links", &self.links)
            .finish()
    }
}

impl Topology {
    pub fn new(clock: ClockMode) -> Self {
        let (sim_clock, clock): (_, Arc<dyn Clock>) = match clock {
            ClockMode::Simulated => {
                let c = Arc::new(ManualClock::new());
                (Some(c.clone()), c)
            }
            ClockMode::Wall => (None, Arc::new(SystemClock::default())),
        };
        Topology {
            nodes: Vec::new(),
            endpoints: Vec::new(),
            links: Vec::new(),
            peers: Vec::new(),
            sim_clock,
            clock,
            journey: Journey::default(),
        }
    }

    /// Adds a node configured by `script`, sharing the topology clock.
    pub fn add_node(&mut self, name: &str, mode: Mode, script: &str) -> Result<&mut Node, TopologyError> {
        self.push_node(name, mode, script, false)
    }

    /// Adds a traffic source/sink with the given interfaces.
    pub fn add_endpoint(&mut self, name: &str, ifaces: &[&str]) -> Result<&mut Node, TopologyError> {
        let script: String = ifaces.iter().map(|i| format!("link add {i}\n")).collect();
        self.push_node(name, Mode::Baseline, &script, true)
    }

    fn push_node(&mut self, name: &str, mode: Mode, script: &str, endpoint: bool) -> Result<&mut Node, TopologyError> {
        if self.node(name).is_some() {
            return Err(TopologyError::DuplicateNode(name.to_string()));
        }
        let mut n = Node::with_clock(name, mode, self.clock.clone());
        n.apply_config(script).map_err(|error| TopologyError::Config {
            node: name.to_string(),
            error,
        })?;
        self.endpoints.push(endpoint);
        self.peers.push(Vec::new());
        self.nodes.push(n);
        Ok(self.nodes.last_mut().expect("just pushed"))
    }

    pub fn add_link(&mut self, a: Endpoint, b: Endpoint) -> Result<(), TopologyError> {
        let pa = self.port(&a).ok_or_else(|| TopologyError::UnknownEndpoint(a.clone()))?;
        let pb = self.port(&b).ok_or_else(|| TopologyError::UnknownEndpoint(b.clone()))?;
        for (p, e) in [(pa, &a), (pb, &b)] {
            if self.peer(p).is_some() {
                return Err(TopologyError::AlreadyLinked(e.clone()));
            }
        }
        if pa == pb {
            return Err(TopologyError::AlreadyLinked(a));
        }
        for (from, to) in [(pa, pb), (pb, pa)] {
            let row = &mut self.peers[from.node];
            let i = from.iface.0 as usize;
            if row.len() <= i {
                row.resize(i + 1, None);
            }
            row[i] = Some(to);
        }
        self.links.push(Link { a, b });
        Ok(())
    }

    pub fn port(&self, e: &Endpoint) -> Option<Port> {
        let node = self.nodes.iter().position(|n| n.name() == e.node)?;
        let iface = self.nodes[node].iface(&e.iface)?;
        Some(Port { node, iface })
    }

    pub fn endpoint(&self, p: Port) -> Endpoint {
        let n = &self.nodes[p.node];
        Endpoint::new(n.name(), n.iface_name(p.iface).unwrap_or("?"))
    }

    fn peer(&self, p: Port) -> Option<Port> {
        self.peers[p.node].get(p.iface.0 as usize).copied().flatten()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node(&self, name: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.name() == name)
    }

    pub fn node_mut(&mut self, name: &str) -> Option<&mut Node> {
        self.nodes.iter_mut().find(|n| n.name() == name)
    }

    /// VNFs attached anywhere in the topology.
    pub fn vnf_bindings(&self) -> usize {
        self.nodes.iter().map(Node::vnf_count).sum()
    }

    /// Simulated time, when the topology runs on a simulated clock.
    pub fn set_time(&self, t: Duration) {
        if let Some(c) = &self.sim_clock {
            c.set(t);
        }
    }

    pub fn now(&self) -> Duration {
        self.clock.now()
    }

    pub fn is_simulated(&self) -> bool {
        self.sim_clock.is_some()
    }

    /// Sends `pkt` out of `from` and follows it across links until it
    /// reaches an endpoint node or is lost. `on_pass` sees the journey of
    /// every forwarding node it crosses.
    pub fn inject_with(&mut self, from: Port, pkt: RawPacket, mut on_pass: impl FnMut(&Journey)) -> Delivery {
        let mut at = from;
        let mut pkt = pkt;
        for _ in 0..MAX_NODE_HOPS {
            let Some(peer) = self.peer(at) else {
                return Delivery::Unlinked(at);
            };
            if self.endpoints[peer.node] {
                return Delivery::Delivered { at: peer, packet: pkt };
            }
            self.nodes[peer.node].receive_into(peer.iface, pkt, &mut self.journey);
            on_pass(&self.journey);
            if let Some(reason) = self.journey.drop {
                return Delivery::Dropped { node: peer.node, reason };
            }
            let emit = self.journey.output.take().expect("journey ends in output or drop");
            at = Port {
                node: peer.node,
                iface: emit.oif,
            };
            pkt = emit.packet;
        }
        self.nodes[at.node].count_drop(DropReason::Loop);
        Delivery::Dropped {
            node: at.node,
            reason: DropReason::Loop,
        }
    }

    pub fn inject(&mut self, from: Port, pkt: RawPacket) -> Delivery {
        self.inject_with(from, pkt, |_| {})
    }

    /// Like [`Topology::inject`], keeping a copy of every node journey.
    pub fn inject_traced(&mut self, from: Port, pkt: RawPacket) -> (Delivery, Vec<Journey>) {
        let mut journeys = Vec::new();
        let d = self.inject_with(from, pkt, |j| journeys.push(j.clone()));
        (d, journeys)
    }
}

/// TGR plus a SUT configured per `params`.
pub fn build_standard_topology(params: &TopologyParams, clock: ClockMode) -> Result<Topology, TopologyError> {
    params.validate()?;
    let mut t = Topology::new(clock);
    t.add_endpoint(TGR, &["sender", "receiver"])?;
    let sut = t.add_node(SUT, params.mode, &sut_config(params))?;
    sut.validate().map_err(|error| TopologyError::Node {
        node: SUT.to_string(),
        error,
    })?;
    link_standard(&mut t)?;
    Ok(t)
}

/// TGR and a SUT with only its two ports and nothing else.
pub fn unconfigured_topology(clock: ClockMode) -> Topology {
    let mut t = Topology::new(clock);
    t.add_endpoint(TGR, &["sender", "receiver"]).expect("fresh topology");
    t.add_node(SUT, Mode::Baseline, "link add in\nlink add out").expect("fresh topology");
    link_standard(&mut t).expect("interfaces exist");
    t
}

fn link_standard(t: &mut Topology) -> Result<(), TopologyError> {
    t.add_link(Endpoint::new(TGR, "sender"), Endpoint::new(SUT, "in"))?;
    t.add_link(Endpoint::new(SUT, "out"), Endpoint::new(TGR, "receiver"))
}

pub fn sender() -> Endpoint {
    Endpoint::new(TGR, "sender")
}

impl Topology {
    /// The TGR sender port of a standard topology.
    pub fn sender_port(&self) -> Option<Port> {
        self.port(&sender())
    }

    /// Index of a node by name.
    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name() == name)
    }
}

/// Abstract per-packet processing cost. A packet costs
/// `passes * base + rules * per_rule + lpm_levels * per_lpm_bit
/// + cache_writes * per_cache_write`, summed over every node and VNF pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    pub base_cost_per_packet: f64,
    pub per_rule_cost: f64,
    pub per_lpm_bit_cost: f64,
    pub per_cache_write_cost: f64,
    /// Cost units available per simulated second; absent means unlimited.
    pub cpu_budget_per_second: Option<f64>,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            base_cost_per_packet: 100.0,
            per_rule_cost: 1.0,
            per_lpm_bit_cost: 0.25,
            per_cache_write_cost: 50.0,
            cpu_budget_per_second: Some(10_000_000.0),
        }
    }
}

impl CostModel {
    pub fn unlimited() -> Self {
        CostModel {
            cpu_budget_per_second: None,
            ..CostModel::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("base_cost_per_packet", self.base_cost_per_packet),
            ("per_rule_cost", self.per_rule_cost),
            ("per_lpm_bit_cost", self.per_lpm_bit_cost),
            ("per_cache_write_cost", self.per_cache_write_cost),
            ("cpu_budget_per_second", self.cpu_budget_per_second.unwrap_or(0.0)),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        Ok(())
    }

    pub fn pass_cost(&self, t: &PipelineTrace) -> f64 {
        self.base_cost_per_packet
            + f64::from(t.rules_examined) * self.per_rule_cost
            + f64::from(t.lpm_levels) * self.per_lpm_bit_cost
            + if t.cache_write { self.per_cache_write_cost } else { 0.0 }
    }

    pub fn journey_cost(&self, j: &Journey) -> f64 {
        f64::from(j.passes()) * self.base_cost_per_packet
            + f64::from(j.rules_examined()) * self.per_rule_cost
            + f64::from(j.lpm_levels()) * self.per_lpm_bit_cost
            + f64::from(j.cache_writes()) * self.per_cache_write_cost
    }

    /// Packets per second the budget sustains at a fixed per-packet cost.
    pub fn capacity(&self, cost: f64) -> Option<f64> {
        self.cpu_budget_per_second.map(|b| b / cost)
    }

    /// `per_rule_cost` that makes `cost(reference) / cost(loaded) == ratio`,
    /// all other terms unchanged. `None` if no non-negative value does.
    pub fn calibrate_per_rule(&self, reference: &Journey, loaded: &Journey, ratio: f64) -> Option<f64> {
        let without = CostModel {
            per_rule_cost: 0.0,
            ..self.clone()
        };
        let (f1, f2) = (without.journey_cost(reference), without.journey_cost(loaded));
        let (r1, r2) = (f64::from(reference.rules_examined()), f64::from(loaded.rules_examined()));
        let den = r1 - ratio * r2;
        let r = (ratio * f2 - f1) / den;
        (den != 0.0 && r.is_finite() && r >= 0.0).then_some(r)
    }
}

/// Outcome of a simulated interval.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub injected: u64,
    /// Per receiving endpoint interface.
    pub delivered: BTreeMap<Endpoint, u64>,
    /// Refused at the SUT ingress because the budget was spent.
    pub queue_drops: u64,
    /// Dropped inside a node pipeline.
    pub pipeline_drops: u64,
    pub unlinked: u64,
    pub cost_spent: f64,
}

impl StepReport {
    pub fn delivered_total(&self) -> u64 {
        self.delivered.values().sum()
    }
}

/// Deterministic SUT: packets are processed for real, but admission is
/// governed by an abstract CPU budget that resets every simulated second.
/// A packet is admitted while budget remains and is charged its full cost.
#[derive(Debug)]
pub struct CostModelSut {
    pub topology: Topology,
    pub model: CostModel,
    ingress: Port,
    elapsed: Duration,
}

impl CostModelSut {
    /// The topology should run on a simulated clock so `age` follows
    /// simulated time.
    /// Traffic enters from the TGR sender.
    pub fn new(topology: Topology, model: CostModel) -> Self {
        let ingress = topology.sender_port().expect("topology has a TGR sender");
        Self::with_ingress(topology, model, ingress)
    }

    pub fn with_ingress(topology: Topology, model: CostModel, ingress: Port) -> Self {
        CostModelSut {
            topology,
            model,
            ingress,
            elapsed: Duration::ZERO,
        }
    }

    /// Offers `ps` packets per second for `duration`, packet `i` produced
    /// by `gen(i)` at `i / ps` seconds into the interval.
    pub fn step_with(&mut self, ps: u64, duration: f64, mut gen: impl FnMut(u64) -> RawPacket) -> StepReport {
        assert!(ps > 0 && duration > 0.0, "PS and D must be positive");
        let n = TrafficStats::offered(ps, duration);
        let budget = self.model.cpu_budget_per_second.unwrap_or(f64::INFINITY);
        let start = self.elapsed;
        let mut report = StepReport::default();
        let mut delivered: BTreeMap<Port, u64> = BTreeMap::new();
        let queue_node = self.topology.peer(self.ingress).map(|p| p.node);
        let (mut second, mut remaining) = (0u64, budget);
        for i in 0..n {
            report.injected += 1;
            if i / ps != second {
                second = i / ps;
                remaining = budget;
            }
            if remaining <= 0.0 {
                report.queue_drops += 1;
                if let Some(n) = queue_node {
                    self.topology.nodes[n].count_drop(DropReason::QueueFull);
                }
                continue;
            }
            let at = start + Duration::from_nanos((u128::from(i) * 1_000_000_000 / u128::from(ps)) as u64);
            self.topology.set_time(at);
            let model = &self.model;
            let mut cost = 0.0;
            let pkt = gen(i);
            match self.topology.inject_with(self.ingress, pkt, |j| cost += model.journey_cost(j)) {
                Delivery::Delivered { at, .. } => *delivered.entry(at).or_default() += 1,
                Delivery::Dropped { .. } => report.pipeline_drops += 1,
                Delivery::Unlinked(_) => report.unlinked += 1,
            }
            remaining -= cost;
            report.cost_spent += cost;
        }
        self.elapsed = start + Duration::from_secs_f64(duration);
        report.delivered = delivered.into_iter().map(|(p, n)| (self.topology.endpoint(p), n)).collect();
        report
    }

    pub fn step(&mut self, template: &RawPacket, ps: u64, duration: f64) -> StepReport {
        self.step_with(ps, duration, |_| template.clone())
    }
}

impl Sut for CostModelSut {
    fn trial(&mut self, template: &RawPacket, ps: u64, duration: f64) -> TrafficStats {
        let r = self.step(template, ps, duration);
        TrafficStats::new(ps, duration, r.injected, r.delivered_total())
    }
}

/// Average wall-clock time to carry one packet from the sender to its fate,
/// after `warmup` untimed packets.
pub fn measure_per_packet(topology: &mut Topology, template: &RawPacket, packets: u64, warmup: u64) -> Duration {
    let from = topology.sender_port().expect("topology has a TGR sender");
    for _ in 0..warmup {
        std::hint::black_box(topology.inject(from, template.clone()));
    }
    let start = Instant::now();
    for _ in 0..packets {
        std::hint::black_box(topology.inject(from, template.clone()));
    }
    start.elapsed() / packets.max(1) as u32
}

/// Real pipeline fed by a paced generator thread through a bounded,
/// drop-tail queue.
#[derive(Debug)]
pub struct WallClockSut {
    pub topology: Topology,
    pub queue_len: usize,
}

impl WallClockSut {
    pub fn new(topology: Topology) -> Self {
        WallClockSut {
            topology,
            queue_len: DEFAULT_QUEUE_LEN,
        }
    }
}

impl Sut for WallClockSut {
    fn trial(&mut self, template: &RawPacket, ps: u64, duration: f64) -> TrafficStats {
        let n = TrafficStats::offered(ps, duration);
        let (tx, rx) = bounded::<RawPacket>(self.queue_len.max(1));
        let from = self.topology.sender_port().expect("topology has a TGR sender");
        let queue_node = self.topology.peer(from).map(|p| p.node);
        let topo = &mut self.topology;
        let (queue_drops, p_out) = thread::scope(|s| {
            let gen = s.spawn(move || {
                let start = Instant::now();
                let mut dropped = 0u64;
                for i in 0..n {
                    let due = Duration::from_nanos((u128::from(i) * 1_000_000_000 / u128::from(ps)) as u64);
                    while start.elapsed() < due {
                        std::hint::spin_loop();
                    }
                    match tx.try_send(template.clone()) {
                        Ok(()) => {}
                        Err(TrySendError::Full(_)) => dropped += 1,
                        Err(TrySendError::Disconnected(_)) => break,
                    }
                }
                dropped
            });
            let mut delivered = 0u64;
            for pkt in rx.iter() {
                if let Delivery::Delivered { .. } = topo.inject(from, pkt) {
                    delivered += 1;
                }
            }
            (gen.join().expect("generator thread"), delivered)
        });
        if let Some(n) = queue_node {
            for _ in 0..queue_drops {
                self.topology.nodes[n].count_drop(DropReason::QueueFull);
            }
        }
        TrafficStats::new(ps, duration, n, p_out)
    }
}
