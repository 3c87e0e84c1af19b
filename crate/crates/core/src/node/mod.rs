// SPDX-License-Identifier: Apache-2.0

//! The per-node pipeline: optional pre-routing capture, policy routing,
//! route lookup, behavior execution and forwarding, plus the VNFs hosted
//! behind the node's interfaces.

mod apply;
mod show;
mod vnf;

use rustc_hash::FxHashMap as HashMap;
use std::fmt;
use std::net::Ipv6Addr;
use std::str::FromStr;
use std::sync::Arc;

use arrayvec::ArrayVec;
use thiserror::Error;

use crate::behavior::{
    end_ad_fromvnf, end_ad_inbound, end_am_demasquerade, end_am_masquerade, end_as_fromvnf, end_as_inbound,
    end_behavior, BehaviorCounters, BehaviorError, BehaviorInstance, BehaviorKind, Chain, Clock, ConfigError,
    Direction, DropReason, HeaderCache, ProxyOutput, SystemClock,
};
use crate::packet::{peek_dst, CodecError, RawPacket};
use crate::routing::{
    rpdb_lookup, BehaviorId, IfIndex, LookupTrace, PacketMeta, RouteEntry, RouteTarget, RoutingError, RoutingTables,
    Rpdb, RuleAction, Selector, TableId, VnfInterfaceMap,
};

pub use apply::ApplyError;
pub use vnf::{EndVnf, PassThroughVnf, Vnf, VnfOutput};

/// Local behavior passes one packet may take inside a node.
pub const MAX_LOCAL_PASSES: usize = 8;
/// VNF round trips one injected packet may take.
pub const MAX_VNF_DETOURS: usize = 16;

/// How a node wires its SR proxies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Plain forwarding; the VNF is SR-aware and runs End itself.
    Baseline,
    /// Split inbound/fromVNF instances with one iif rule and table per VNF.
    SrnkV1,
    /// One bidirectional instance per VNF, found through the extended rule.
    SrnkV2,
    /// Local SIDs and VNF interfaces captured before routing.
    Srext,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Baseline, Mode::SrnkV1, Mode::SrnkV2, Mode::Srext];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::SrnkV1 => "v1",
            Mode::SrnkV2 => "v2",
            Mode::Srext => "srext",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" | "end" => Ok(Mode::Baseline),
            "v1" | "srnk_v1" | "srnkv1" => Ok(Mode::SrnkV1),
            "v2" | "srnk_v2" | "srnkv2" => Ok(Mode::SrnkV2),
            "srext" => Ok(Mode::Srext),
            _ => Err(format!("unknown mode {s}")),
        }
    }
}

/// Pipeline stages, in the order a packet meets them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    PreRouting,
    PolicyRouting,
    Behavior,
    OutboundLookup,
    Emit,
    Drop,
}

/// Cost record of one packet's pass through a node.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PipelineTrace {
    pub stages: ArrayVec<Stage, 32>,
    pub rules_examined: u32,
    pub tables_visited: u32,
    pub lpm_levels: u32,
    pub matched_rule_priority: Option<u32>,
    /// The route came from an extended SRv6 rule.
    pub via_extended: bool,
    /// Last behavior applied.
    pub behavior: Option<(BehaviorKind, Direction)>,
    pub cache_write: bool,
    pub drop: Option<DropReason>,
}

impl PipelineTrace {
    fn push(&mut self, s: Stage) {
        let _ = self.stages.try_push(s);
    }

    fn absorb(&mut self, t: LookupTrace) {
        self.rules_examined += t.rules_examined;
        self.tables_visited += t.tables_visited;
        self.lpm_levels += t.lpm_levels;
        self.matched_rule_priority = t.matched_rule_priority;
    }
}

/// A packet leaving the node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Emit {
    pub oif: IfIndex,
    pub next_hop: Option<Ipv6Addr>,
    pub packet: RawPacket,
}

/// Everything that happened to one injected packet, VNF detours included.
#[derive(Debug, Clone, Default)]
pub struct Journey {
    /// Packet leaving toward a non-VNF interface.
    pub output: Option<Emit>,
    /// One trace per node pass.
    pub traces: Vec<PipelineTrace>,
    pub vnf_passes: u32,
    pub vnf_lpm_levels: u32,
    pub drop: Option<DropReason>,
}

impl Journey {
    pub fn clear(&mut self) {
        self.output = None;
        self.traces.clear();
        self.vnf_passes = 0;
        self.vnf_lpm_levels = 0;
        self.drop = None;
    }

    /// Node passes plus VNF passes.
    pub fn passes(&self) -> u32 {
        self.traces.len() as u32 + self.vnf_passes
    }

    pub fn rules_examined(&self) -> u32 {
        self.traces.iter().map(|t| t.rules_examined).sum()
    }

    pub fn lpm_levels(&self) -> u32 {
        self.traces.iter().map(|t| t.lpm_levels).sum::<u32>() + self.vnf_lpm_levels
    }

    pub fn cache_writes(&self) -> u32 {
        self.traces.iter().filter(|t| t.cache_write).count() as u32
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NodeError {
    #[error("unknown interface {0}")]
    UnknownInterface(String),
    #[error("interface {0} already exists")]
    DuplicateInterface(String),
    #[error("a VNF is already bound to {0}")]
    DuplicateVnf(String),
    #[error("route {0} needs a device or a seg6local action")]
    MissingDevice(String),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Behavior(#[from] ConfigError),
    #[error("invalid segment list: {0}")]
    Segments(CodecError),
    #[error("{mode} wiring: {reason}")]
    Inconsistent { mode: Mode, reason: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct NodeCounters {
    rx: u64,
    tx: u64,
    drops: [u64; DropReason::ALL.len()],
}

#[derive(Debug, Clone)]
struct Slot {
    inst: BehaviorInstance,
    route: RouteEntry,
    dev: Option<IfIndex>,
    counters: BehaviorCounters,
}

enum Step {
    ToVnf(ProxyOutput),
    Reroute(RawPacket),
}

/// An SRv6 node with its tables, rules, behaviors and hosted VNFs.
pub struct Node {
    name: String,
    mode: Mode,
    ifaces: Vec<String>,
    tables: RoutingTables,
    rpdb: Rpdb,
    vnf_map: VnfInterfaceMap,
    behaviors: Vec<Option<Slot>>,
    cache: HeaderCache,
    clock: Arc<dyn Clock>,
    counters: NodeCounters,
    vnfs: Vec<Option<Box<dyn Vnf>>>,
    pre_sids: HashMap<Ipv6Addr, BehaviorId>,
    pre_iifs: HashMap<IfIndex, BehaviorId>,
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Node")
            .field("name", &self.name)
            .field("mode", &self.mode)
            .field("ifaces", &self.ifaces)
            .finish_non_exhaustive()
    }
}

impl Node {
    pub fn new(name: &str, mode: Mode) -> Self {
        Self::with_clock(name, mode, Arc::new(SystemClock::default()))
    }

    pub fn with_clock(name: &str, mode: Mode, clock: Arc<dyn Clock>) -> Self {
        Node {
            name: name.to_string(),
            mode,
            ifaces: Vec::new(),
            tables: RoutingTables::new(),
            rpdb: Rpdb::new(),
            vnf_map: VnfInterfaceMap::new(),
            behaviors: Vec::new(),
            cache: HeaderCache::new(),
            clock,
            counters: NodeCounters::default(),
            vnfs: Vec::new(),
            pre_sids: HashMap::default(),
            pre_iifs: HashMap::default(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn add_interface(&mut self, name: &str) -> Result<IfIndex, NodeError> {
        if self.iface(name).is_some() {
            return Err(NodeError::DuplicateInterface(name.to_string()));
        }
        self.ifaces.push(name.to_string());
        self.vnfs.push(None);
        Ok(IfIndex(self.ifaces.len() as u32 - 1))
    }

    pub fn iface(&self, name: &str) -> Option<IfIndex> {
        self.ifaces.iter().position(|n| n == name).map(|i| IfIndex(i as u32))
    }

    pub fn iface_name(&self, idx: IfIndex) -> Option<&str> {
        self.ifaces.get(idx.0 as usize).map(String::as_str)
    }

    pub fn interfaces(&self) -> &[String] {
        &self.ifaces
    }

    fn resolve_iface(&self, name: &str) -> Result<IfIndex, NodeError> {
        self.iface(name).ok_or_else(|| NodeError::UnknownInterface(name.to_string()))
    }

    pub fn tables(&self) -> &RoutingTables {
        &self.tables
    }

    pub fn rpdb(&self) -> &Rpdb {
        &self.rpdb
    }

    pub fn vnf_map(&self) -> &VnfInterfaceMap {
        &self.vnf_map
    }

    pub fn cache(&self) -> &HeaderCache {
        &self.cache
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    /// Configured behavior instances with their counters.
    pub fn behaviors(&self) -> impl Iterator<Item = (BehaviorId, &BehaviorInstance, BehaviorCounters)> {
        self.behaviors
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|s| (BehaviorId(i as u32), &s.inst, s.counters)))
    }

    pub fn behavior(&self, id: BehaviorId) -> Option<&BehaviorInstance> {
        self.slot(id).map(|s| &s.inst)
    }

    fn slot(&self, id: BehaviorId) -> Option<&Slot> {
        self.behaviors.get(id.0 as usize).and_then(Option::as_ref)
    }

    /// Number of interfaces with a VNF attached.
    pub fn vnf_count(&self) -> usize {
        self.vnfs.iter().filter(|v| v.is_some()).count()
    }

    /// Attaches a VNF behind `iface`.
    pub fn attach_vnf(&mut self, iface: IfIndex, vnf: Box<dyn Vnf>) -> Result<(), NodeError> {
        let name = self
            .iface_name(iface)
            .ok_or_else(|| NodeError::UnknownInterface(format!("#{}", iface.0)))?
            .to_string();
        let slot = &mut self.vnfs[iface.0 as usize];
        if slot.is_some() {
            return Err(NodeError::DuplicateVnf(name));
        }
        *slot = Some(vnf);
        Ok(())
    }

    pub fn detach_vnf(&mut self, iface: IfIndex) -> Option<Box<dyn Vnf>> {
        self.vnfs.get_mut(iface.0 as usize).and_then(Option::take)
    }

    /// Runs one packet through the node. At most one packet comes out.
    pub fn process_packet(&mut self, iif: IfIndex, pkt: RawPacket) -> (Option<Emit>, PipelineTrace) {
        let mut trace = PipelineTrace::default();
        let out = self.process_traced(iif, pkt, &mut trace);
        (out, trace)
    }

    pub fn process_traced(&mut self, iif: IfIndex, pkt: RawPacket, trace: &mut PipelineTrace) -> Option<Emit> {
        self.counters.rx += 1;
        match self.dispatch(iif, pkt, trace, 0) {
            Ok(e) => {
                self.counters.tx += 1;
                trace.push(Stage::Emit);
                Some(e)
            }
            Err(reason) => {
                self.count_drop(reason);
                trace.drop = Some(reason);
                trace.push(Stage::Drop);
                None
            }
        }
    }

    /// Runs one packet through the node and through any VNFs it is sent
    /// to, until it leaves on an interface without a VNF or is dropped.
    pub fn receive_into(&mut self, iif: IfIndex, pkt: RawPacket, journey: &mut Journey) {
        journey.clear();
        let (mut iif, mut pkt) = (iif, pkt);
        for _ in 0..MAX_VNF_DETOURS {
            let mut trace = PipelineTrace::default();
            let out = self.process_traced(iif, pkt, &mut trace);
            journey.traces.push(trace);
            let Some(emit) = out else {
                journey.drop = journey.traces.last().and_then(|t| t.drop);
                return;
            };
            let Some(vnf) = self.vnfs.get_mut(emit.oif.0 as usize).and_then(Option::as_mut) else {
                journey.output = Some(emit);
                return;
            };
            journey.vnf_passes += 1;
            let r = vnf.process(emit.packet);
            journey.vnf_lpm_levels += r.lpm_levels;
            match r.packet {
                Some(p) => {
                    iif = emit.oif;
                    pkt = p;
                }
                None => {
                    self.count_drop(DropReason::VnfDrop);
                    journey.drop = Some(DropReason::VnfDrop);
                    return;
                }
            }
        }
        self.count_drop(DropReason::Loop);
        journey.drop = Some(DropReason::Loop);
    }

    pub fn receive(&mut self, iif: IfIndex, pkt: RawPacket) -> Journey {
        let mut j = Journey::default();
        self.receive_into(iif, pkt, &mut j);
        j
    }

    /// Records a drop that happened before the pipeline, such as a full
    /// ingress queue.
    pub fn count_drop(&mut self, reason: DropReason) {
        self.counters.drops[reason as usize] += 1;
    }

    fn dispatch(
        &mut self,
        iif: IfIndex,
        pkt: RawPacket,
        trace: &mut PipelineTrace,
        depth: usize,
    ) -> Result<Emit, DropReason> {
        let dst = peek_dst(&pkt).ok_or(DropReason::Malformed)?;
        if self.mode == Mode::Srext {
            trace.push(Stage::PreRouting);
            if let Some(&id) = self.pre_iifs.get(&iif) {
                return self.run_behavior(id, iif, pkt, true, trace, depth);
            }
            if let Some(&id) = self.pre_sids.get(&dst) {
                return self.run_behavior(id, iif, pkt, false, trace, depth);
            }
        }
        trace.push(Stage::PolicyRouting);
        let (res, lt) = rpdb_lookup(&self.rpdb, &self.tables, &self.vnf_map, PacketMeta { iif, dst });
        trace.absorb(lt);
        let res = res.ok_or(DropReason::NoRoute)?;
        trace.via_extended = res.via_extended;
        let (target, via_extended) = (res.route.target, res.via_extended);
        match target {
            RouteTarget::Forward { via, dev } => Ok(Emit {
                oif: dev,
                next_hop: via,
                packet: pkt,
            }),
            RouteTarget::Behavior(id) => self.run_behavior(id, iif, pkt, via_extended, trace, depth),
        }
    }

    fn run_behavior(
        &mut self,
        id: BehaviorId,
        iif: IfIndex,
        pkt: RawPacket,
        from_vnf_hint: bool,
        trace: &mut PipelineTrace,
        depth: usize,
    ) -> Result<Emit, DropReason> {
        if depth >= MAX_LOCAL_PASSES {
            return Err(DropReason::Loop);
        }
        trace.push(Stage::Behavior);
        let slot = self
            .behaviors
            .get_mut(id.0 as usize)
            .and_then(Option::as_mut)
            .ok_or(DropReason::NoRoute)?;
        slot.counters.packets_in += 1;
        let result = apply_behavior(&slot.inst, &self.cache, &*self.clock, iif, from_vnf_hint, pkt, trace);
        let step = match result {
            Ok(s) => s,
            Err(e) => {
                slot.counters.drops += 1;
                return Err(e.drop_reason());
            }
        };
        slot.counters.packets_out += 1;
        match step {
            Step::ToVnf(out) => {
                if out.cache_written {
                    slot.counters.cache_writes += 1;
                    trace.cache_write = true;
                }
                Ok(Emit {
                    oif: out.oif,
                    next_hop: out.next_hop,
                    packet: out.packet,
                })
            }
            Step::Reroute(pkt) => self.outbound(iif, pkt, trace, depth),
        }
    }

    /// Forwarding after a behavior: a plain main-table lookup on the new
    /// destination, which may land on another local behavior.
    fn outbound(
        &mut self,
        iif: IfIndex,
        pkt: RawPacket,
        trace: &mut PipelineTrace,
        depth: usize,
    ) -> Result<Emit, DropReason> {
        trace.push(Stage::OutboundLookup);
        let dst = peek_dst(&pkt).ok_or(DropReason::Malformed)?;
        let (hit, levels) = self
            .tables
            .lpm_lookup_traced(TableId::MAIN, dst)
            .map_err(|_| DropReason::NoRoute)?;
        trace.tables_visited += 1;
        trace.lpm_levels += levels;
        match hit.map(|r| r.target).ok_or(DropReason::NoRoute)? {
            RouteTarget::Forward { via, dev } => Ok(Emit {
                oif: dev,
                next_hop: via,
                packet: pkt,
            }),
            RouteTarget::Behavior(id) => self.run_behavior(id, iif, pkt, false, trace, depth + 1),
        }
    }

    /// Checks that the wiring matches the node's mode.
    pub fn validate(&self) -> Result<(), NodeError> {
        let fail = |reason: String| Err(NodeError::Inconsistent { mode: self.mode, reason });
        let proxies: Vec<&Slot> = self
            .behaviors
            .iter()
            .flatten()
            .filter(|s| s.inst.kind.is_proxy())
            .collect();
        match self.mode {
            Mode::Baseline => {
                if let Some(s) = proxies.first() {
                    return fail(format!("proxy {} configured at {}", s.inst.kind, s.route.prefix));
                }
            }
            Mode::SrnkV1 => {
                if let Some(s) = proxies.iter().find(|s| s.inst.chain == Chain::Bidirectional) {
                    return fail(format!("{} at {} has no chain direction", s.inst.kind, s.route.prefix));
                }
                if self.rpdb.rules().iter().any(|r| matches!(r.selector, Selector::ExtendedSrv6(_))) {
                    return fail("extended SRv6 rules are not used".into());
                }
                for s in proxies.iter().filter(|s| s.inst.chain == Chain::FromVnf) {
                    let iif = s.inst.iif.expect("validated fromVNF instance has iif");
                    let rule = self
                        .rpdb
                        .rules()
                        .iter()
                        .find(|r| r.selector == Selector::Iif(iif) && r.action == RuleAction::Lookup(s.route.table));
                    if rule.is_none() || s.route.table == TableId::MAIN {
                        return fail(format!(
                            "fromVNF instance on {} needs its own table and an iif rule",
                            self.iface_name(iif).unwrap_or("?")
                        ));
                    }
                    if self.tables.routes(s.route.table).len() != 1 {
                        return fail(format!("table {} must hold only the fromVNF route", s.route.table));
                    }
                }
                let inbound = proxies.iter().filter(|s| s.inst.chain == Chain::Inbound).count();
                let from_vnf = proxies.len() - inbound;
                if inbound != from_vnf {
                    return fail(format!("{inbound} inbound instances but {from_vnf} fromVNF instances"));
                }
            }
            Mode::SrnkV2 | Mode::Srext => {
                if let Some(s) = proxies.iter().find(|s| s.inst.chain != Chain::Bidirectional) {
                    return fail(format!("{} at {} uses split chains", s.inst.kind, s.route.prefix));
                }
                if self.mode == Mode::SrnkV2 {
                    let mut kinds: Vec<BehaviorKind> = proxies.iter().map(|s| s.inst.kind).collect();
                    kinds.sort();
                    kinds.dedup();
                    for k in kinds {
                        let n = self
                            .rpdb
                            .rules()
                            .iter()
                            .filter(|r| r.selector == Selector::ExtendedSrv6(k))
                            .count();
                        if n != 1 {
                            return fail(format!("{n} extended rules for {k}, expected 1"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Route behind a configured behavior.
    pub fn behavior_route(&self, id: BehaviorId) -> Option<&RouteEntry> {
        self.slot(id).map(|s| &s.route)
    }

    fn slot_dev(&self, id: BehaviorId) -> Option<IfIndex> {
        self.slot(id).and_then(|s| s.dev)
    }

    fn add_behavior(
        &mut self,
        inst: BehaviorInstance,
        route: RouteEntry,
        dev: Option<IfIndex>,
    ) -> Result<BehaviorId, NodeError> {
        let id = BehaviorId(self.behaviors.len() as u32);
        if inst.kind.is_proxy() && inst.chain == Chain::Bidirectional {
            let iface = inst.vnf_interface().expect("validated proxy has oif");
            self.vnf_map.register(
                iface,
                crate::routing::VnfBinding {
                    sid: inst.sid,
                    sid_table: route.table,
                    kind: inst.kind,
                },
            )?;
        }
        if route.prefix.len() == 128 && inst.chain != Chain::FromVnf {
            self.pre_sids.entry(route.prefix.addr()).or_insert(id);
        }
        if inst.kind.is_proxy() && inst.chain != Chain::Inbound {
            if let Some(iface) = inst.vnf_interface() {
                self.pre_iifs.entry(iface).or_insert(id);
            }
        }
        self.behaviors.push(Some(Slot {
            inst,
            route,
            dev,
            counters: BehaviorCounters::default(),
        }));
        Ok(id)
    }

    fn remove_behavior(&mut self, id: BehaviorId) {
        let Some(slot) = self.behaviors.get_mut(id.0 as usize).and_then(Option::take) else {
            return;
        };
        if slot.inst.kind.is_proxy() && slot.inst.chain == Chain::Bidirectional {
            if let Some(iface) = slot.inst.vnf_interface() {
                let _ = self.vnf_map.unregister(iface);
            }
        }
        self.pre_sids.retain(|_, v| *v != id);
        self.pre_iifs.retain(|_, v| *v != id);
    }
}

fn apply_behavior(
    inst: &BehaviorInstance,
    cache: &HeaderCache,
    clock: &dyn Clock,
    iif: IfIndex,
    from_vnf_hint: bool,
    pkt: RawPacket,
    trace: &mut PipelineTrace,
) -> Result<Step, BehaviorError> {
    if inst.kind == BehaviorKind::End {
        trace.behavior = Some((BehaviorKind::End, Direction::Inbound));
        return end_behavior(pkt).map(Step::Reroute);
    }
    let dir = match inst.chain {
        Chain::Inbound => Direction::Inbound,
        Chain::FromVnf if inst.iif == Some(iif) => Direction::FromVnf,
        Chain::FromVnf => return Err(BehaviorError::WrongInterface),
        Chain::Bidirectional if from_vnf_hint || inst.vnf_interface() == Some(iif) => Direction::FromVnf,
        Chain::Bidirectional => Direction::Inbound,
    };
    trace.behavior = Some((inst.kind, dir));
    match (inst.kind, dir) {
        (BehaviorKind::EndAd, Direction::Inbound) => end_ad_inbound(pkt, inst, cache, clock.now()).map(Step::ToVnf),
        (BehaviorKind::EndAd, Direction::FromVnf) => end_ad_fromvnf(pkt, iif, cache).map(Step::Reroute),
        (BehaviorKind::EndAs, Direction::Inbound) => end_as_inbound(pkt, inst).map(Step::ToVnf),
        (BehaviorKind::EndAs, Direction::FromVnf) => end_as_fromvnf(pkt, inst).map(Step::Reroute),
        (BehaviorKind::EndAm, Direction::Inbound) => end_am_masquerade(pkt, inst).map(Step::ToVnf),
        (BehaviorKind::EndAm, Direction::FromVnf) => end_am_demasquerade(pkt).map(Step::Reroute),
        (BehaviorKind::End, _) => unreachable!("End handled above"),
    }
}
