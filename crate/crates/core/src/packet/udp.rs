// SPDX-License-Identifier: Apache-2.0

//! UDP-in-IPv6 test traffic.

use std::net::Ipv6Addr;

use super::{proto, Ipv6Header, RawPacket, IPV6_HEADER_LEN};

pub const UDP_HEADER_LEN: usize = 8;

/// Builds a plain IPv6/UDP packet with a valid checksum.
pub fn build_udp_packet(
    src: Ipv6Addr,
    dst: Ipv6Addr,
    src_port: u16,
    dst_port: u16,
    payload: &[u8],
) -> RawPacket {
    let udp_len = UDP_HEADER_LEN + payload.len();
    let header = Ipv6Header::new(src, dst, proto::UDP, udp_len as u16);
    let mut out = Vec::with_capacity(IPV6_HEADER_LEN + udp_len);
    header.write(&mut out);
    out.extend_from_slice(&src_port.to_be_bytes());
    out.extend_from_slice(&dst_port.to_be_bytes());
    out.extend_from_slice(&(udp_len as u16).to_be_bytes());
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(payload);
    let sum = checksum(src, dst, &out[IPV6_HEADER_LEN..]);
    out[IPV6_HEADER_LEN + 6..IPV6_HEADER_LEN + 8].copy_from_slice(&sum.to_be_bytes());
    RawPacket::new(out)
}

/// UDP checksum over the IPv6 pseudo header; a zero result is sent as 0xffff.
pub fn checksum(src: Ipv6Addr, dst: Ipv6Addr, udp: &[u8]) -> u16 {
    let mut acc: u32 = 0;
    let mut add = |bytes: &[u8]| {
        for c in bytes.chunks(2) {
            let hi = u32::from(c[0]) << 8;
            let lo = c.get(1).map_or(0, |b| u32::from(*b));
            acc += hi | lo;
        }
    };
    add(&src.octets());
    add(&dst.octets());
    add(&(udp.len() as u32).to_be_bytes());
    add(&[0, 0, 0, proto::UDP]);
    add(udp);
    while acc > 0xffff {
        acc = (acc & 0xffff) + (acc >> 16);
    }
    match !(acc as u16) {
        0 => 0xffff,
        s => s,
    }
}

/// True when the UDP checksum of a plain IPv6/UDP packet verifies.
pub fn checksum_ok(pkt: &[u8]) -> bool {
    let Ok(h) = Ipv6Header::parse(pkt) else {
        return false;
    };
    if h.next_header != proto::UDP || pkt.len() < IPV6_HEADER_LEN + UDP_HEADER_LEN {
        return false;
    }
    let mut udp = pkt[IPV6_HEADER_LEN..].to_vec();
    let stored = u16::from_be_bytes([udp[6], udp[7]]);
    udp[6] = 0;
    udp[7] = 0;
    checksum(h.src, h.dst, &udp) == stored
}
