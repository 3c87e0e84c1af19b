// SPDX-License-Identifier: Apache-2.0

use std::net::Ipv6Addr;
use std::time::Duration;

use super::{BehaviorError, BehaviorInstance, HeaderCache};
use crate::packet::{self, Ipv6Header, RawPacket};
use crate::routing::IfIndex;

/// A packet handed to a VNF (or back to the network) by a proxy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProxyOutput {
    pub packet: RawPacket,
    pub oif: IfIndex,
    pub next_hop: Option<Ipv6Addr>,
    pub cache_written: bool,
}

/// End: advance to the next segment and rewrite the destination.
pub fn end_behavior(mut pkt: RawPacket) -> Result<RawPacket, BehaviorError> {
    packet::advance_in_place(pkt.as_mut_bytes())?;
    Ok(pkt)
}

fn toward_vnf(inst: &BehaviorInstance, packet: RawPacket, cache_written: bool) -> Result<ProxyOutput, BehaviorError> {
    Ok(ProxyOutput {
        packet,
        oif: inst.oif.ok_or(BehaviorError::WrongInterface)?,
        next_hop: inst.nh6,
        cache_written,
    })
}

/// End.AD inbound: pop the outer headers, advance their segment pointer,
/// store them for the VNF interface (subject to `age`) and send the inner
/// packet to the VNF.
pub fn end_ad_inbound(
    mut pkt: RawPacket,
    inst: &BehaviorInstance,
    cache: &HeaderCache,
    now: Duration,
) -> Result<ProxyOutput, BehaviorError> {
    let split = packet::encap_prefix_len(&pkt)?;
    // Advancing touches only the outer header and SRH.
    packet::advance_in_place(pkt.as_mut_bytes())?;
    let key = inst.vnf_interface().ok_or(BehaviorError::WrongInterface)?;
    let written = cache.learn(key, &pkt[..split], now, inst.age(), inst.sid, inst.table);
    pkt.pull(split);
    toward_vnf(inst, pkt, written)
}

/// End.AD fromVNF: re-apply the headers learned for `iif`.
pub fn end_ad_fromvnf(mut pkt: RawPacket, iif: IfIndex, cache: &HeaderCache) -> Result<RawPacket, BehaviorError> {
    Ipv6Header::parse(&pkt)?;
    cache
        .with_entry(iif, |e| packet::reencap_in_place(&e.outer_headers, &mut pkt))
        .ok_or(BehaviorError::NoCacheEntry)??;
    Ok(pkt)
}

/// End.AS inbound: pop the outer headers without storing anything.
pub fn end_as_inbound(mut pkt: RawPacket, inst: &BehaviorInstance) -> Result<ProxyOutput, BehaviorError> {
    let split = packet::encap_prefix_len(&pkt)?;
    pkt.pull(split);
    toward_vnf(inst, pkt, false)
}

/// End.AS fromVNF: apply the configured headers.
pub fn end_as_fromvnf(mut pkt: RawPacket, inst: &BehaviorInstance) -> Result<RawPacket, BehaviorError> {
    Ipv6Header::parse(&pkt)?;
    let headers = inst.static_headers.as_deref().ok_or(BehaviorError::WrongInterface)?;
    packet::reencap_in_place(headers, &mut pkt)?;
    Ok(pkt)
}

/// End.AM toward the VNF: consume the proxy SID and expose the final
/// destination `segments[0]` in the IPv6 header. The SRH stays in place.
pub fn end_am_masquerade(mut pkt: RawPacket, inst: &BehaviorInstance) -> Result<ProxyOutput, BehaviorError> {
    let buf = pkt.as_mut_bytes();
    let (sl, _) = packet::srh_pointer(buf)?;
    if sl == 0 {
        return Err(BehaviorError::SegmentsExhausted);
    }
    packet::set_segments_left(buf, sl - 1);
    let last = packet::srh_segment(buf, 0).ok_or(BehaviorError::NoSrh)?;
    packet::rewrite_dst(buf, last)?;
    toward_vnf(inst, pkt, false)
}

/// End.AM back from the VNF: restore the destination to the active segment.
pub fn end_am_demasquerade(mut pkt: RawPacket) -> Result<RawPacket, BehaviorError> {
    let buf = pkt.as_mut_bytes();
    let (sl, _) = packet::srh_pointer(buf)?;
    let active = packet::srh_segment(buf, sl).ok_or(BehaviorError::NoSrh)?;
    packet::rewrite_dst(buf, active)?;
    Ok(pkt)
}
