// SPDX-License-Identifier: Apache-2.0

use std::net::Ipv6Addr;

use super::CodecError;

/// Length of the fixed IPv6 header.
pub const IPV6_HEADER_LEN: usize = 40;

/// IPv6 protocol numbers used by the dataplane.
pub mod proto {
    pub const UDP: u8 = 17;
    pub const IPV6: u8 = 41;
    pub const ROUTING: u8 = 43;
    pub const NO_NEXT_HEADER: u8 = 59;
}

/// Fixed IPv6 header. The version nibble is implicit (always 6).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ipv6Header {
    pub traffic_class: u8,
    /// 20-bit flow label; upper bits are ignored on write.
    pub flow_label: u32,
    pub payload_length: u16,
    pub next_header: u8,
    pub hop_limit: u8,
    pub src: Ipv6Addr,
    pub dst: Ipv6Addr,
}

impl Ipv6Header {
    pub fn new(src: Ipv6Addr, dst: Ipv6Addr, next_header: u8, payload_length: u16) -> Self {
        Ipv6Header {
            traffic_class: 0,
            flow_label: 0,
            payload_length,
            next_header,
            hop_limit: 64,
            src,
            dst,
        }
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, CodecError> {
        if bytes.len() < IPV6_HEADER_LEN {
            return Err(CodecError::TruncatedHeader {
                needed: IPV6_HEADER_LEN,
                available: bytes.len(),
            });
        }
        let version = bytes[0] >> 4;
        if version != 6 {
            return Err(CodecError::BadVersion(version));
        }
        Ok(Ipv6Header {
            traffic_class: (bytes[0] << 4) | (bytes[1] >> 4),
            flow_label: (u32::from(bytes[1] & 0x0f) << 16)
                | (u32::from(bytes[2]) << 8)
                | u32::from(bytes[3]),
            payload_length: u16::from_be_bytes([bytes[4], bytes[5]]),
            next_header: bytes[6],
            hop_limit: bytes[7],
            src: read_addr(&bytes[8..24]),
            dst: read_addr(&bytes[24..40]),
        })
    }

    pub fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_bytes());
    }

    pub fn to_bytes(&self) -> [u8; IPV6_HEADER_LEN] {
        let mut b = [0u8; IPV6_HEADER_LEN];
        let fl = self.flow_label & 0x000f_ffff;
        b[0] = 0x60 | (self.traffic_class >> 4);
        b[1] = (self.traffic_class << 4) | (fl >> 16) as u8;
        b[2] = (fl >> 8) as u8;
        b[3] = fl as u8;
        b[4..6].copy_from_slice(&self.payload_length.to_be_bytes());
        b[6] = self.next_header;
        b[7] = self.hop_limit;
        b[8..24].copy_from_slice(&self.src.octets());
        b[24..40].copy_from_slice(&self.dst.octets());
        b
    }
}

pub(crate) fn read_addr(bytes: &[u8]) -> Ipv6Addr {
    let mut o = [0u8; 16];
    o.copy_from_slice(&bytes[..16]);
    Ipv6Addr::from(o)
}

/// Destination address of a raw IPv6 packet, without full validation.
pub fn peek_dst(bytes: &[u8]) -> Option<Ipv6Addr> {
    (bytes.len() >= IPV6_HEADER_LEN && bytes[0] >> 4 == 6).then(|| read_addr(&bytes[24..40]))
}

pub(crate) fn set_dst(bytes: &mut [u8], dst: Ipv6Addr) {
    bytes[24..40].copy_from_slice(&dst.octets());
}

pub(crate) fn set_payload_length(bytes: &mut [u8], len: u16) {
    bytes[4..6].copy_from_slice(&len.to_be_bytes());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_roundtrip_keeps_every_field() {
        let h = Ipv6Header {
            traffic_class: 0xab,
            flow_label: 0x000c_def1,
            payload_length: 20,
            next_header: proto::UDP,
            hop_limit: 3,
            src: "fd00::1".parse().unwrap(),
            dst: "fd00::2".parse().unwrap(),
        };
        let b = h.to_bytes();
        assert_eq!(b[0] >> 4, 6);
        assert_eq!(Ipv6Header::parse(&b).unwrap(), h);
    }

    #[test]
    fn rejects_short_and_wrong_version() {
        assert!(matches!(
            Ipv6Header::parse(&[0x60; 39]),
            Err(CodecError::TruncatedHeader { .. })
        ));
        let mut b = [0u8; 40];
        b[0] = 0x40;
        assert_eq!(Ipv6Header::parse(&b), Err(CodecError::BadVersion(4)));
    }
}
