// SPDX-License-Identifier: Apache-2.0

//! Longest-prefix-match tables, the routing policy database and the
//! interface map behind the extended SRv6 rule.

mod prefix;
mod rpdb;
mod trie;
mod vnf_map;

use std::collections::BTreeMap;
use std::fmt;
use std::net::Ipv6Addr;

use thiserror::Error;

use crate::behavior::BehaviorKind;

pub use prefix::Prefix;
pub use rpdb::{rpdb_lookup, LookupTrace, PacketMeta, PolicyRule, Resolution, Rpdb, RuleAction, Selector};
pub use trie::PrefixTrie;
pub use vnf_map::{extended_rule_eval, VnfBinding, VnfInterfaceMap};

/// Interface index local to one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IfIndex(pub u32);

/// Index into a node's behavior registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BehaviorId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TableId(pub u32);

impl TableId {
    pub const MAIN: TableId = TableId(254);
    pub const LOCAL: TableId = TableId(255);
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TableId::MAIN => f.write_str("main"),
            TableId::LOCAL => f.write_str("local"),
            TableId(n) => write!(f, "{n}"),
        }
    }
}

impl std::str::FromStr for TableId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "main" => Ok(TableId::MAIN),
            "local" => Ok(TableId::LOCAL),
            n => n.parse().map(TableId),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoutingError {
    #[error("unknown table {0}")]
    UnknownTable(TableId),
    #[error("prefix {prefix} already present in table {table}")]
    DuplicatePrefix { prefix: Prefix, table: TableId },
    #[error("no route {prefix} in table {table}")]
    UnknownRoute { prefix: Prefix, table: TableId },
    #[error("rule priority {0} already in use")]
    DuplicatePriority(u32),
    #[error("no rule with priority {0}")]
    UnknownRule(u32),
    #[error("rule priorities exhausted")]
    PriorityExhausted,
    #[error("interface {0:?} already bound to a VNF")]
    DuplicateBinding(IfIndex),
    #[error("interface {0:?} is not bound to a VNF")]
    UnknownBinding(IfIndex),
    #[error("invalid prefix {0}")]
    BadPrefix(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteTarget {
    Forward { via: Option<Ipv6Addr>, dev: IfIndex },
    Behavior(BehaviorId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteEntry {
    pub prefix: Prefix,
    pub target: RouteTarget,
    pub table: TableId,
}

/// All routing tables of one node. The main table always exists.
#[derive(Debug, Clone)]
pub struct RoutingTables {
    tables: BTreeMap<TableId, PrefixTrie<RouteEntry>>,
}

impl Default for RoutingTables {
    fn default() -> Self {
        let mut tables = BTreeMap::new();
        tables.insert(TableId::MAIN, PrefixTrie::new());
        RoutingTables { tables }
    }
}

impl RoutingTables {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a route, creating its table on first use.
    pub fn add(&mut self, entry: RouteEntry) -> Result<(), RoutingError> {
        self.tables
            .entry(entry.table)
            .or_default()
            .insert(entry.prefix, entry)
            .map_err(|e| RoutingError::DuplicatePrefix {
                prefix: e.prefix,
                table: e.table,
            })
    }

    /// Removes a route; a table left empty (other than main) disappears.
    pub fn remove(&mut self, table: TableId, prefix: &Prefix) -> Result<RouteEntry, RoutingError> {
        let t = self
            .tables
            .get_mut(&table)
            .ok_or(RoutingError::UnknownTable(table))?;
        let e = t.remove(prefix).ok_or(RoutingError::UnknownRoute {
            prefix: *prefix,
            table,
        })?;
        if t.is_empty() && table != TableId::MAIN {
            self.tables.remove(&table);
        }
        Ok(e)
    }

    pub fn get(&self, table: TableId, prefix: &Prefix) -> Option<&RouteEntry> {
        self.tables.get(&table)?.get(prefix)
    }

    pub fn has_table(&self, table: TableId) -> bool {
        self.tables.contains_key(&table)
    }

    pub fn table_ids(&self) -> impl Iterator<Item = TableId> + '_ {
        self.tables.keys().copied()
    }

    pub fn table_count(&self) -> usize {
        self.tables.len()
    }

    pub fn routes(&self, table: TableId) -> Vec<&RouteEntry> {
        self.tables
            .get(&table)
            .map(|t| t.iter().into_iter().map(|(_, v)| v).collect())
            .unwrap_or_default()
    }

    pub fn lpm_lookup(&self, table: TableId, dst: Ipv6Addr) -> Result<Option<&RouteEntry>, RoutingError> {
        self.lpm_lookup_traced(table, dst).map(|(e, _)| e)
    }

    /// Like [`lpm_lookup`](Self::lpm_lookup) but also reports trie levels walked.
    pub fn lpm_lookup_traced(
        &self,
        table: TableId,
        dst: Ipv6Addr,
    ) -> Result<(Option<&RouteEntry>, u32), RoutingError> {
        let t = self.tables.get(&table).ok_or(RoutingError::UnknownTable(table))?;
        Ok(t.lookup(dst))
    }
}

/// Extended rules match VNF bindings of one behavior kind.
pub(crate) fn binding_matches(binding: &VnfBinding, kind: BehaviorKind) -> bool {
    binding.kind == kind
}
