// SPDX-License-Identifier: Apache-2.0

use rustc_hash::FxHashMap as HashMap;
use std::net::Ipv6Addr;

use super::{IfIndex, RoutingError, TableId};
use crate::behavior::BehaviorKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VnfBinding {
    pub sid: Ipv6Addr,
    pub sid_table: TableId,
    pub kind: BehaviorKind,
}

/// Interface to SID map consulted by the extended SRv6 rule. Lookups are
/// a single hash probe regardless of how many VNFs are bound.
#[derive(Debug, Clone, Default)]
pub struct VnfInterfaceMap {
    bindings: HashMap<IfIndex, VnfBinding>,
}

impl VnfInterfaceMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, iif: IfIndex, binding: VnfBinding) -> Result<(), RoutingError> {
        match self.bindings.entry(iif) {
            std::collections::hash_map::Entry::Occupied(_) => Err(RoutingError::DuplicateBinding(iif)),
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(binding);
                Ok(())
            }
        }
    }

    pub fn unregister(&mut self, iif: IfIndex) -> Result<VnfBinding, RoutingError> {
        self.bindings.remove(&iif).ok_or(RoutingError::UnknownBinding(iif))
    }

    #[inline]
    pub fn get(&self, iif: IfIndex) -> Option<&VnfBinding> {
        if self.bindings.is_empty() {
            return None;
        }
        self.bindings.get(&iif)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Bindings sorted by interface.
    pub fn iter(&self) -> Vec<(IfIndex, &VnfBinding)> {
        let mut v: Vec<_> = self.bindings.iter().map(|(k, b)| (*k, b)).collect();
        v.sort_by_key(|(k, _)| *k);
        v
    }
}

/// Resolves the SID and SID table bound to an incoming interface.
pub fn extended_rule_eval(map: &VnfInterfaceMap, iif: IfIndex) -> Option<(Ipv6Addr, TableId)> {
    map.get(iif).map(|b| (b.sid, b.sid_table))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binding(s: &str) -> VnfBinding {
        VnfBinding {
            sid: s.parse().unwrap(),
            sid_table: TableId::MAIN,
            kind: BehaviorKind::EndAd,
        }
    }

    #[test]
    fn register_eval_unregister() {
        let mut m = VnfInterfaceMap::new();
        m.register(IfIndex(0), binding("fdf1::2")).unwrap();
        assert_eq!(
            extended_rule_eval(&m, IfIndex(0)),
            Some(("fdf1::2".parse().unwrap(), TableId::MAIN))
        );
        assert_eq!(extended_rule_eval(&m, IfIndex(1)), None);
        assert_eq!(
            m.register(IfIndex(0), binding("fdf1::3")),
            Err(RoutingError::DuplicateBinding(IfIndex(0)))
        );
        m.unregister(IfIndex(0)).unwrap();
        assert_eq!(m.unregister(IfIndex(0)), Err(RoutingError::UnknownBinding(IfIndex(0))));
    }
}
