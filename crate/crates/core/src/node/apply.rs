// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use super::{EndVnf, Node, NodeError, PassThroughVnf};
use crate::behavior::{BehaviorInstance, BehaviorKind, Chain, DEFAULT_AGE_SECS};
use crate::config::{
    parse_script, ConfigCommand, ParseError, RouteSpec, RuleSelectorSpec, RuleSpec, Seg6LocalSpec, VnfType,
};
use crate::routing::{Prefix, RouteEntry, RouteTarget, RoutingError, RuleAction, Selector, TableId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApplyError {
    #[error("line {line}: {error}")]
    Parse { line: usize, error: ParseError },
    #[error("line {line}: {error}")]
    Node { line: usize, error: NodeError },
}

impl ApplyError {
    pub fn line(&self) -> usize {
        match self {
            ApplyError::Parse { line, .. } | ApplyError::Node { line, .. } => *line,
        }
    }
}

impl Node {
    /// Applies a configuration script command by command, stopping at the
    /// first failure. Commands before the failing one stay applied; the
    /// failing one leaves no trace. Returns the output of `show` commands.
    pub fn apply_config(&mut self, script: &str) -> Result<String, ApplyError> {
        let commands = parse_script(script).map_err(|e| ApplyError::Parse {
            line: e.line,
            error: e.error,
        })?;
        let mut out = String::new();
        for c in commands {
            let shown = self
                .apply_command(c.command)
                .map_err(|error| ApplyError::Node { line: c.line, error })?;
            if let Some(s) = shown {
                out.push_str(&s);
            }
        }
        Ok(out)
    }

    /// Applies one command. `show` returns the state dump.
    pub fn apply_command(&mut self, cmd: ConfigCommand) -> Result<Option<String>, NodeError> {
        match cmd {
            ConfigCommand::RouteAdd(spec) => self.route_add(spec).map(|_| None),
            ConfigCommand::RouteDel { prefix, table } => self.route_del(prefix, table).map(|_| None),
            ConfigCommand::RuleAdd(spec) => self.rule_add(spec).map(|_| None),
            ConfigCommand::RuleDel(spec) => self.rule_del(spec).map(|_| None),
            ConfigCommand::VnfBind {
                iface,
                vnf,
                sids,
                routes,
            } => {
                let idx = self.resolve_iface(&iface)?;
                let vnf: Box<dyn super::Vnf> = match vnf {
                    VnfType::PassThrough => Box::new(PassThroughVnf::new(&routes)),
                    VnfType::End => Box::new(EndVnf::new(&sids, &routes)),
                };
                self.attach_vnf(idx, vnf).map(|_| None)
            }
            ConfigCommand::LinkAdd { name } => self.add_interface(&name).map(|_| None),
            ConfigCommand::Show => Ok(Some(self.show_state())),
        }
    }

    fn route_add(&mut self, spec: RouteSpec) -> Result<(), NodeError> {
        if self.tables.get(spec.table, &spec.prefix).is_some() {
            return Err(RoutingError::DuplicatePrefix {
                prefix: spec.prefix,
                table: spec.table,
            }
            .into());
        }
        let dev = spec.dev.as_deref().map(|d| self.resolve_iface(d)).transpose()?;
        let mut route = RouteEntry {
            prefix: spec.prefix,
            target: RouteTarget::Forward {
                via: spec.via,
                dev: dev.unwrap_or(crate::routing::IfIndex(0)),
            },
            table: spec.table,
        };
        match spec.seg6local {
            None => {
                if dev.is_none() {
                    return Err(NodeError::MissingDevice(spec.prefix.to_string()));
                }
            }
            Some(s) => {
                let inst = self.build_instance(spec.prefix, spec.table, &s)?;
                inst.validate()?;
                let id = self.add_behavior(inst, route, dev)?;
                route.target = RouteTarget::Behavior(id);
                if let Some(slot) = self.behaviors[id.0 as usize].as_mut() {
                    slot.route = route;
                }
            }
        }
        self.tables.add(route)?;
        Ok(())
    }

    fn build_instance(&self, prefix: Prefix, table: TableId, s: &Seg6LocalSpec) -> Result<BehaviorInstance, NodeError> {
        let sid = prefix.addr();
        let mut inst = BehaviorInstance::new(s.kind, sid);
        inst.chain = s.chain.unwrap_or(Chain::Bidirectional);
        inst.oif = s.oif.as_deref().map(|n| self.resolve_iface(n)).transpose()?;
        inst.iif = s.iif.as_deref().map(|n| self.resolve_iface(n)).transpose()?;
        inst.nh6 = s.nh6;
        inst.age = s.age.unwrap_or(DEFAULT_AGE_SECS);
        inst.table = table;
        if s.kind == BehaviorKind::EndAs {
            inst.segs = s.segs.clone();
            inst.static_headers = match (&s.headers, &s.segs) {
                (Some(h), _) => Some(h.clone()),
                (None, Some(segs)) => Some(
                    BehaviorInstance::static_headers_for(segs, s.src.unwrap_or(sid)).map_err(NodeError::Segments)?,
                ),
                (None, None) => None,
            };
        }
        Ok(inst)
    }

    fn route_del(&mut self, prefix: Prefix, table: TableId) -> Result<(), NodeError> {
        let removed = self.tables.remove(table, &prefix)?;
        if let RouteTarget::Behavior(id) = removed.target {
            self.remove_behavior(id);
        }
        Ok(())
    }

    fn rule_selector(&self, spec: &RuleSpec) -> Result<(Selector, RuleAction), NodeError> {
        let lookup = |t: Option<TableId>| RuleAction::Lookup(t.unwrap_or(TableId::MAIN));
        Ok(match &spec.selector {
            RuleSelectorSpec::All => (Selector::All, lookup(spec.table)),
            RuleSelectorSpec::Iif(name) => (Selector::Iif(self.resolve_iface(name)?), lookup(spec.table)),
            RuleSelectorSpec::Seg6LocalBehaviour(kind) => (
                Selector::ExtendedSrv6(*kind),
                spec.table.map_or(RuleAction::ResolvedBySelector, RuleAction::Lookup),
            ),
        })
    }

    fn rule_add(&mut self, spec: RuleSpec) -> Result<u32, NodeError> {
        let (selector, action) = self.rule_selector(&spec)?;
        Ok(self.rpdb.add(selector, action, spec.priority)?)
    }

    fn rule_del(&mut self, spec: RuleSpec) -> Result<(), NodeError> {
        match spec.priority {
            Some(p) => self.rpdb.remove(p).map(|_| ())?,
            None => {
                let (selector, action) = self.rule_selector(&spec)?;
                self.rpdb.remove_matching(selector, action).map(|_| ())?
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::node::Mode;

    fn node(mode: Mode) -> Node {
        let mut n = Node::new("sut", mode);
        n.apply_config("link add in\nlink add out\nlink add veth0").unwrap();
        n
    }

    #[test]
    fn errors_name_the_failing_line() {
        let mut n = node(Mode::SrnkV2);
        let err = n
            .apply_config("route add default via fd00:2::1 dev out\nroute add fdf1::2/128 via fdf1::2 dev veth9\n")
            .unwrap_err();
        assert_eq!(err.line(), 2);
        assert!(matches!(err, ApplyError::Node { error: NodeError::UnknownInterface(_), .. }));
        assert_eq!(n.tables().routes(TableId::MAIN).len(), 1);
    }

    #[test]
    fn duplicate_route_leaves_state_unchanged() {
        let mut n = node(Mode::SrnkV2);
        let line = "route add fdf1::2/128 encap seg6local action End.AD oif veth0 nh6 fdf1::2 dev veth0";
        n.apply_config(line).unwrap();
        let before = n.show_state();
        let err = n.apply_config(line).unwrap_err();
        assert!(matches!(
            err,
            ApplyError::Node { error: NodeError::Routing(RoutingError::DuplicatePrefix { .. }), .. }
        ));
        assert_eq!(n.show_state(), before);
        assert_eq!(n.vnf_map().len(), 1);
    }

    #[test]
    fn duplicate_binding_leaves_no_route() {
        let mut n = node(Mode::SrnkV2);
        n.apply_config("route add fdf1::2/128 encap seg6local action End.AD oif veth0 dev veth0")
            .unwrap();
        let err = n
            .apply_config("route add fdf1::3/128 encap seg6local action End.AD oif veth0 dev veth0")
            .unwrap_err();
        assert!(matches!(err, ApplyError::Node { error: NodeError::Routing(RoutingError::DuplicateBinding(_)), .. }));
        assert_eq!(n.tables().routes(TableId::MAIN).len(), 1);
        assert_eq!(n.behaviors().count(), 1);
    }

    #[test]
    fn route_del_drops_behavior_and_binding() {
        let mut n = node(Mode::SrnkV2);
        n.apply_config("route add fdf1::2/128 encap seg6local action End.AD oif veth0 dev veth0")
            .unwrap();
        n.apply_config("route del fdf1::2/128").unwrap();
        assert_eq!(n.behaviors().count(), 0);
        assert!(n.vnf_map().is_empty());
    }

    #[test]
    fn rules_added_and_removed() {
        let mut n = node(Mode::SrnkV1);
        n.apply_config("rule add iif veth0 table 100\nrule add pref 5 iif in table 101")
            .unwrap();
        let prios: Vec<u32> = n.rpdb().custom_rules().map(|r| r.priority).collect();
        assert_eq!(prios, vec![5, 1000]);
        n.apply_config("rule del iif veth0 table 100\nrule del pref 5").unwrap();
        assert_eq!(n.rpdb().custom_rules().count(), 0);
        assert!(n.apply_config("rule del pref 5").is_err());
    }

    #[test]
    fn static_proxy_builds_headers_from_segments() {
        let mut n = node(Mode::SrnkV2);
        n.apply_config("route add fdf1::2/128 encap seg6local action End.AS oif veth0 segs fd00:2::1 src fd00:1::1 dev veth0")
            .unwrap();
        let (_, inst, _) = n.behaviors().next().unwrap();
        assert_eq!(inst.static_headers.as_ref().unwrap().len(), 40 + 8 + 16);
    }
}
