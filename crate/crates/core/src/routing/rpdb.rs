// SPDX-License-Identifier: Apache-2.0

use std::net::Ipv6Addr;

use super::{binding_matches, IfIndex, RouteEntry, RoutingError, RoutingTables, TableId, VnfInterfaceMap};
use crate::behavior::BehaviorKind;

/// Priority of the rule that sends everything to the main table.
pub const DEFAULT_RULE_PRIORITY: u32 = 32766;
/// First priority handed out when a rule is added without one.
pub const FIRST_AUTO_PRIORITY: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    All,
    Iif(IfIndex),
    /// Matches packets whose incoming interface is bound to a behavior of
    /// this kind in the VNF interface map.
    ExtendedSrv6(BehaviorKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleAction {
    Lookup(TableId),
    /// The selector itself yields the lookup key and table.
    ResolvedBySelector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyRule {
    /// Lower values are scanned first.
    pub priority: u32,
    pub selector: Selector,
    pub action: RuleAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketMeta {
    pub iif: IfIndex,
    pub dst: Ipv6Addr,
}

/// Cost counters of one policy routing decision.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LookupTrace {
    pub rules_examined: u32,
    pub tables_visited: u32,
    pub matched_rule_priority: Option<u32>,
    pub lpm_levels: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution<'a> {
    pub route: &'a RouteEntry,
    /// True when an extended SRv6 rule resolved the route from the
    /// incoming interface rather than the destination address.
    pub via_extended: bool,
}

/// Routing policy database: rules kept sorted by priority, always ending
/// with the default rule.
#[derive(Debug, Clone)]
pub struct Rpdb {
    rules: Vec<PolicyRule>,
}

impl Default for Rpdb {
    fn default() -> Self {
        Rpdb {
            rules: vec![PolicyRule {
                priority: DEFAULT_RULE_PRIORITY,
                selector: Selector::All,
                action: RuleAction::Lookup(TableId::MAIN),
            }],
        }
    }
}

impl Rpdb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rules(&self) -> &[PolicyRule] {
        &self.rules
    }

    /// Rules other than the built-in default rule.
    pub fn custom_rules(&self) -> impl Iterator<Item = &PolicyRule> {
        self.rules.iter().filter(|r| !is_default_rule(r))
    }

    /// Adds a rule and returns its priority. Without an explicit priority
    /// the rule is placed after every existing custom rule, so insertion
    /// order is scan order.
    pub fn add(
        &mut self,
        selector: Selector,
        action: RuleAction,
        priority: Option<u32>,
    ) -> Result<u32, RoutingError> {
        let priority = match priority {
            Some(p) => p,
            None => self
                .custom_rules()
                .map(|r| r.priority)
                .filter(|p| *p < DEFAULT_RULE_PRIORITY)
                .max()
                .map_or(Some(FIRST_AUTO_PRIORITY), |p| p.checked_add(1))
                .filter(|p| *p < DEFAULT_RULE_PRIORITY)
                .ok_or(RoutingError::PriorityExhausted)?,
        };
        let pos = match self.rules.binary_search_by_key(&priority, |r| r.priority) {
            Ok(_) => return Err(RoutingError::DuplicatePriority(priority)),
            Err(pos) => pos,
        };
        self.rules.insert(
            pos,
            PolicyRule {
                priority,
                selector,
                action,
            },
        );
        Ok(priority)
    }

    pub fn remove(&mut self, priority: u32) -> Result<PolicyRule, RoutingError> {
        let pos = self
            .rules
            .binary_search_by_key(&priority, |r| r.priority)
            .map_err(|_| RoutingError::UnknownRule(priority))?;
        Ok(self.rules.remove(pos))
    }

    /// Removes the first custom rule with this selector and action.
    pub fn remove_matching(&mut self, selector: Selector, action: RuleAction) -> Result<PolicyRule, RoutingError> {
        let pos = self
            .rules
            .iter()
            .position(|r| !is_default_rule(r) && r.selector == selector && r.action == action)
            .ok_or(RoutingError::UnknownRule(0))?;
        Ok(self.rules.remove(pos))
    }

    /// Position (1-based) of the first rule with this selector.
    pub fn position_of(&self, selector: Selector) -> Option<usize> {
        self.rules.iter().position(|r| r.selector == selector).map(|p| p + 1)
    }
}

fn is_default_rule(r: &PolicyRule) -> bool {
    r.priority == DEFAULT_RULE_PRIORITY && r.selector == Selector::All && r.action == RuleAction::Lookup(TableId::MAIN)
}

/// Scans rules in priority order. A rule whose table has no matching route
/// does not terminate the scan.
pub fn rpdb_lookup<'a>(
    rpdb: &Rpdb,
    tables: &'a RoutingTables,
    vnfs: &VnfInterfaceMap,
    meta: PacketMeta,
) -> (Option<Resolution<'a>>, LookupTrace) {
    let mut trace = LookupTrace::default();
    for rule in &rpdb.rules {
        trace.rules_examined += 1;
        let (table, key, via_extended) = match (rule.selector, rule.action) {
            (Selector::All, RuleAction::Lookup(t)) => (t, meta.dst, false),
            (Selector::Iif(i), RuleAction::Lookup(t)) if i == meta.iif => (t, meta.dst, false),
            (Selector::ExtendedSrv6(kind), action) => match vnfs.get(meta.iif) {
                Some(b) if binding_matches(b, kind) => match action {
                    RuleAction::Lookup(t) => (t, b.sid, true),
                    RuleAction::ResolvedBySelector => (b.sid_table, b.sid, true),
                },
                _ => continue,
            },
            _ => continue,
        };
        let Ok((hit, levels)) = tables.lpm_lookup_traced(table, key) else {
            continue;
        };
        trace.tables_visited += 1;
        trace.lpm_levels += levels;
        if let Some(route) = hit {
            trace.matched_rule_priority = Some(rule.priority);
            return (Some(Resolution { route, via_extended }), trace);
        }
    }
    (None, trace)
}
