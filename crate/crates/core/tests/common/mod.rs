// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use std::fmt::Write;
use std::net::Ipv6Addr;
use std::sync::Arc;

use srproxy_core::behavior::ManualClock;
use srproxy_core::packet::{self, udp::build_udp_packet};
use srproxy_core::{BehaviorKind, IfIndex, Mode, Node, RawPacket};

pub fn a(s: &str) -> Ipv6Addr {
    s.parse().unwrap()
}

pub const IN: IfIndex = IfIndex(0);

/// A one-VNF proxy node: `in`, `out`, `veth0`, a pass-through VNF on
/// `veth0` and a default route toward `out`.
pub fn proxy_script(mode: Mode, kind: BehaviorKind, sid: Ipv6Addr, age: u32, headers: Option<&[u8]>) -> String {
    let mut s = String::from("link add in\nlink add out\nlink add veth0\nroute add ::/0 via fd00:2::1 dev out\n");
    let mut args = String::new();
    match kind {
        BehaviorKind::EndAd => write!(args, " age {age}").unwrap(),
        BehaviorKind::EndAs => write!(args, " headers {}", hex::encode(headers.expect("End.AS needs headers"))).unwrap(),
        _ => {}
    }
    match mode {
        Mode::SrnkV1 => {
            writeln!(s, "route add {sid}/128 encap seg6local action {kind} chain inbound oif veth0 nh6 {sid}{args} dev veth0").unwrap();
            writeln!(s, "rule add iif veth0 table 100").unwrap();
            writeln!(s, "route add default encap seg6local action {kind} chain fromVNF iif veth0{args} dev veth0 table 100").unwrap();
        }
        _ => {
            writeln!(s, "route add {sid}/128 encap seg6local action {kind} oif veth0 nh6 {sid}{args} dev veth0").unwrap();
            if mode == Mode::SrnkV2 {
                writeln!(s, "rule add seg6local-behaviour {kind}").unwrap();
            }
        }
    }
    s.push_str("vnf bind veth0 type passthrough route ::/0\n");
    s
}

pub fn proxy_node(
    mode: Mode,
    kind: BehaviorKind,
    sid: Ipv6Addr,
    age: u32,
    headers: Option<&[u8]>,
    clock: Arc<ManualClock>,
) -> Node {
    let mut n = Node::with_clock("sut", mode, clock);
    n.apply_config(&proxy_script(mode, kind, sid, age, headers)).unwrap();
    n.validate().unwrap();
    n
}

/// What End at the proxy SID would have produced.
pub fn end_reference(pkt: &RawPacket) -> RawPacket {
    let mut p = pkt.clone();
    packet::advance_in_place(p.as_mut_bytes()).unwrap();
    p
}

/// Learned outer headers for an encap-mode packet arriving at its first SID.
pub fn headers_after_end(pkt: &RawPacket) -> Vec<u8> {
    let d = packet::decap(&end_reference(pkt)).unwrap();
    d.saved_headers
}

pub fn udp(src: Ipv6Addr, dst: Ipv6Addr, payload: &[u8]) -> RawPacket {
    build_udp_packet(src, dst, 1000, 2000, payload)
}

/// Runs one packet in on `in` and returns what leaves on `out`.
pub fn through(node: &mut Node, pkt: RawPacket) -> Option<RawPacket> {
    let out = node.iface("out").unwrap();
    let j = node.receive(IN, pkt);
    j.output.filter(|e| e.oif == out).map(|e| e.packet)
}

/// Ordinary least squares fit; returns (slope, intercept, r²).
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}
