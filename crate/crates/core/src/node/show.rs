// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{Node, Slot};
use crate::behavior::{BehaviorKind, Chain, DropReason};
use crate::routing::{IfIndex, PolicyRule, RouteEntry, RouteTarget, RuleAction, Selector, TableId};

impl Node {
    fn name_of(&self, idx: IfIndex) -> String {
        self.iface_name(idx).map_or_else(|| format!("#{}", idx.0), str::to_string)
    }

    fn route_line(&self, r: &RouteEntry) -> String {
        let mut s = format!("route add {}", r.prefix);
        match r.target {
            RouteTarget::Forward { via, dev } => {
                if let Some(v) = via {
                    let _ = write!(s, " via {v}");
                }
                let _ = write!(s, " dev {}", self.name_of(dev));
            }
            RouteTarget::Behavior(id) => {
                let Some(slot) = self.slot(id) else {
                    return format!("# {} -> missing behavior {}", r.prefix, id.0);
                };
                self.write_behavior(&mut s, slot);
                if let Some(d) = self.slot_dev(id) {
                    let _ = write!(s, " dev {}", self.name_of(d));
                }
            }
        }
        if r.table != TableId::MAIN {
            let _ = write!(s, " table {}", r.table);
        }
        s
    }

    fn write_behavior(&self, s: &mut String, slot: &Slot) {
        let i = &slot.inst;
        let _ = write!(s, " encap seg6local action {}", i.kind);
        match i.chain {
            Chain::Inbound | Chain::FromVnf => {
                let _ = write!(s, " chain {}", i.chain.as_str());
            }
            Chain::Bidirectional => {}
        }
        if let Some(o) = i.oif {
            let _ = write!(s, " oif {}", self.name_of(o));
        }
        if let Some(o) = i.iif {
            let _ = write!(s, " iif {}", self.name_of(o));
        }
        if let Some(n) = i.nh6 {
            let _ = write!(s, " nh6 {n}");
        }
        if i.kind == BehaviorKind::EndAd {
            let _ = write!(s, " age {}", i.age);
        }
        if let Some(h) = &i.static_headers {
            let _ = write!(s, " headers {}", hex::encode(h));
        }
    }

    fn rule_line(&self, r: &PolicyRule) -> String {
        let mut s = format!("rule add pref {}", r.priority);
        match r.selector {
            Selector::All => s.push_str(" from all"),
            Selector::Iif(i) => {
                let _ = write!(s, " iif {}", self.name_of(i));
            }
            Selector::ExtendedSrv6(k) => {
                let _ = write!(s, " seg6local-behaviour {k}");
            }
        }
        if let RuleAction::Lookup(t) = r.action {
            let _ = write!(s, " table {t}");
        }
        s
    }

    /// Stable text dump. Interface, route, rule and VNF lines are commands
    /// that rebuild the same state; everything else is a `#` comment.
    pub fn show_state(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# node {} mode {}", self.name, self.mode);
        out.push_str("# links\n");
        for name in &self.ifaces {
            let _ = writeln!(out, "link add {name}");
        }
        out.push_str("# routes\n");
        for t in self.tables.table_ids() {
            for r in self.tables.routes(t) {
                let _ = writeln!(out, "{}", self.route_line(r));
            }
        }
        out.push_str("# rules\n");
        for r in self.rpdb.rules() {
            if self.rpdb.custom_rules().any(|c| c == r) {
                let _ = writeln!(out, "{}", self.rule_line(r));
            } else {
                let _ = writeln!(out, "# {}: from all lookup {}", r.priority, TableId::MAIN);
            }
        }
        out.push_str("# vnfs\n");
        for (i, v) in self.vnfs.iter().enumerate() {
            let Some(v) = v else { continue };
            let name = self.name_of(IfIndex(i as u32));
            match v.config_args() {
                Some(args) => {
                    let _ = writeln!(out, "vnf bind {name} {args}");
                }
                None => {
                    let _ = writeln!(out, "# vnf {name} (custom)");
                }
            }
        }
        out.push_str("# bindings\n");
        for (iif, b) in self.vnf_map.iter() {
            let _ = writeln!(out, "#   {} sid {} table {} {}", self.name_of(iif), b.sid, b.sid_table, b.kind);
        }
        out.push_str("# cache\n");
        for (k, e) in self.cache.entries() {
            let _ = writeln!(
                out,
                "#   {} sid {} table {} written {:.3}s headers {}",
                self.name_of(k),
                e.sid,
                e.sid_table,
                e.last_write.as_secs_f64(),
                hex::encode(&e.outer_headers)
            );
        }
        out.push_str("# counters\n");
        for (k, v) in self.counters() {
            let _ = writeln!(out, "#   {k} {v}");
        }
        out
    }

    /// Flat key to value counter snapshot.
    pub fn counters(&self) -> BTreeMap<String, u64> {
        let mut m = BTreeMap::new();
        m.insert("node.rx".to_string(), self.counters.rx);
        m.insert("node.tx".to_string(), self.counters.tx);
        m.insert("node.drop".to_string(), self.counters.drops.iter().sum());
        for r in DropReason::ALL {
            m.insert(format!("node.drop.{}", r.as_str()), self.counters.drops[r as usize]);
        }
        let c = self.cache.stats();
        m.insert("cache.entries".to_string(), self.cache.len() as u64);
        m.insert("cache.writes".to_string(), c.writes);
        m.insert("cache.hits".to_string(), c.hits);
        m.insert("cache.misses".to_string(), c.misses);
        m.insert("cache.evictions".to_string(), c.evictions);
        for slot in self.behaviors.iter().flatten() {
            let base = format!("behavior.{}@{}", slot.route.prefix, slot.route.table);
            m.insert(format!("{base}.packets_in"), slot.counters.packets_in);
            m.insert(format!("{base}.packets_out"), slot.counters.packets_out);
            m.insert(format!("{base}.drops"), slot.counters.drops);
            m.insert(format!("{base}.cache_writes"), slot.counters.cache_writes);
        }
        m
    }

    /// Counter value by key; absent keys read as zero.
    pub fn counter(&self, key: &str) -> u64 {
        self.counters().get(key).copied().unwrap_or(0)
    }
}
