// SPDX-License-Identifier: Apache-2.0

//! In-process VNF stubs attached to node interfaces.

use std::net::Ipv6Addr;

use crate::packet::{self, RawPacket};
use crate::routing::{Prefix, PrefixTrie};

/// What a VNF hands back to the node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VnfOutput {
    /// `None` when the VNF dropped the packet.
    pub packet: Option<RawPacket>,
    /// Trie levels walked by the VNF's own lookups.
    pub lpm_levels: u32,
}

/// A function hosted behind a node interface. Packets come back on the
/// interface they were sent to.
pub trait Vnf: Send {
    fn process(&mut self, pkt: RawPacket) -> VnfOutput;

    /// Arguments of the `vnf bind` command recreating this VNF, if any.
    fn config_args(&self) -> Option<String> {
        None
    }
}

fn route_trie(routes: &[Prefix]) -> PrefixTrie<()> {
    let mut t = PrefixTrie::new();
    for p in routes {
        let _ = t.insert(*p, ());
    }
    t
}

fn route_args(routes: &[Prefix]) -> String {
    routes.iter().map(|p| format!(" route {p}")).collect()
}

/// Legacy VNF: one routing lookup on the packet it receives, then returns
/// it untouched.
#[derive(Debug, Clone)]
pub struct PassThroughVnf {
    prefixes: Vec<Prefix>,
    routes: PrefixTrie<()>,
}

impl PassThroughVnf {
    /// With no routes the VNF forwards everything (a default route).
    pub fn new(routes: &[Prefix]) -> Self {
        let prefixes = if routes.is_empty() { vec![Prefix::DEFAULT] } else { routes.to_vec() };
        PassThroughVnf {
            routes: route_trie(&prefixes),
            prefixes,
        }
    }
}

impl Vnf for PassThroughVnf {
    fn process(&mut self, pkt: RawPacket) -> VnfOutput {
        let Some(dst) = packet::peek_dst(&pkt) else {
            return VnfOutput { packet: None, lpm_levels: 0 };
        };
        let (hit, levels) = self.routes.lookup(dst);
        VnfOutput {
            packet: hit.map(|_| pkt),
            lpm_levels: levels,
        }
    }

    fn config_args(&self) -> Option<String> {
        Some(format!("type passthrough{}", route_args(&self.prefixes)))
    }
}

/// SR-aware VNF: applies End to packets addressed to one of its SIDs and
/// then routes on the new destination.
#[derive(Debug, Clone)]
pub struct EndVnf {
    sid_list: Vec<Ipv6Addr>,
    sids: PrefixTrie<()>,
    prefixes: Vec<Prefix>,
    routes: PrefixTrie<()>,
}

impl EndVnf {
    pub fn new(sids: &[Ipv6Addr], routes: &[Prefix]) -> Self {
        let prefixes = if routes.is_empty() { vec![Prefix::DEFAULT] } else { routes.to_vec() };
        let sid_prefixes: Vec<Prefix> = sids.iter().copied().map(Prefix::host).collect();
        EndVnf {
            sid_list: sids.to_vec(),
            sids: route_trie(&sid_prefixes),
            routes: route_trie(&prefixes),
            prefixes,
        }
    }
}

impl Vnf for EndVnf {
    fn process(&mut self, mut pkt: RawPacket) -> VnfOutput {
        let Some(dst) = packet::peek_dst(&pkt) else {
            return VnfOutput { packet: None, lpm_levels: 0 };
        };
        let (local, mut levels) = self.sids.lookup(dst);
        let dst = match local {
            Some(()) => match packet::advance_in_place(pkt.as_mut_bytes()) {
                Ok(next) => next,
                Err(_) => return VnfOutput { packet: None, lpm_levels: levels },
            },
            None => dst,
        };
        let (hit, l) = self.routes.lookup(dst);
        levels += l;
        VnfOutput {
            packet: hit.map(|_| pkt),
            lpm_levels: levels,
        }
    }

    fn config_args(&self) -> Option<String> {
        let sids: String = self.sid_list.iter().map(|s| format!(" sid {s}")).collect();
        Some(format!("type end{sids}{}", route_args(&self.prefixes)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::{encap, udp::build_udp_packet};

    fn a(s: &str) -> Ipv6Addr {
        s.parse().unwrap()
    }

    fn udp(dst: &str) -> RawPacket {
        build_udp_packet(a("fd00:1::1"), a(dst), 1000, 2000, &[7; 12])
    }

    #[test]
    fn passthrough_returns_same_bytes() {
        let mut v = PassThroughVnf::new(&["fd00:2::/64".parse().unwrap()]);
        let p = udp("fd00:2::100");
        assert_eq!(p.len(), 60);
        let out = v.process(p.clone());
        assert_eq!(out.packet, Some(p));
        assert_eq!(out.lpm_levels, 64);
    }

    #[test]
    fn passthrough_drops_unroutable() {
        let mut v = PassThroughVnf::new(&["fd00:2::/64".parse().unwrap()]);
        assert_eq!(v.process(udp("2000::1")).packet, None);
    }

    #[test]
    fn end_vnf_advances_its_own_sid_only() {
        let mut v = EndVnf::new(&[a("fdf1::2")], &[]);
        let pkt = encap(&udp("fd00:2::100"), &[a("fdf1::2"), a("fd00:2::1")], a("fd00:1::1")).unwrap();
        let out = v.process(pkt).packet.unwrap();
        assert_eq!(packet::peek_dst(&out), Some(a("fd00:2::1")));

        let other = encap(&udp("fd00:2::100"), &[a("fdf1:9::2"), a("fd00:2::1")], a("fd00:1::1")).unwrap();
        assert_eq!(v.process(other.clone()).packet, Some(other));
    }
}
