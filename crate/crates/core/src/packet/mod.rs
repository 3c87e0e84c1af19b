// SPDX-License-Identifier: Apache-2.0

//! Byte-exact IPv6 / SRH handling: parsing, SR encapsulation (encap mode),
//! SRH insertion (insert mode) and segment pointer manipulation.
//!
//! The simulator exchanges bare IPv6 packets. Ethernet and physical layer
//! overheads exist only as accounting constants.

mod ipv6;
mod srh;
pub mod fixture;
pub mod udp;

use std::net::Ipv6Addr;
use std::ops::Deref;

use thiserror::Error;

pub use ipv6::{peek_dst, proto, Ipv6Header, IPV6_HEADER_LEN};
pub use srh::{SrhHeader, MAX_SEGMENTS, SRH_FIXED_LEN, SRH_ROUTING_TYPE};

/// Ethernet header plus CRC.
pub const ETHERNET_OVERHEAD: usize = 18;
/// Preamble, start delimiter and inter-frame gap.
pub const PHYSICAL_OVERHEAD: usize = 20;

/// Bytes added by SR encapsulation with `segments` SIDs: outer IPv6 + SRH.
pub const fn encap_overhead(segments: usize) -> usize {
    IPV6_HEADER_LEN + SRH_FIXED_LEN + 16 * segments
}

/// Bytes added by SRH insertion with `segments` SIDs.
pub const fn insert_overhead(segments: usize) -> usize {
    SRH_FIXED_LEN + 16 * segments
}

/// Size of the Ethernet frame carrying an IPv6 packet of `ip_len` bytes.
pub const fn ethernet_frame_len(ip_len: usize) -> usize {
    ip_len + ETHERNET_OVERHEAD
}

/// Bytes occupied on the wire, including physical layer overhead.
pub const fn wire_len(ip_len: usize) -> usize {
    ip_len + ETHERNET_OVERHEAD + PHYSICAL_OVERHEAD
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("truncated header: need {needed} bytes, have {available}")]
    TruncatedHeader { needed: usize, available: usize },
    #[error("bad IP version {0}")]
    BadVersion(u8),
    #[error("routing header type {0} is not a segment routing header")]
    BadRoutingType(u8),
    #[error("length mismatch: header declares {declared} bytes, {available} present")]
    LengthMismatch { declared: usize, available: usize },
    #[error("empty SID list")]
    EmptySidList,
    #[error("{0} segments exceed the SRH capacity")]
    TooManySegments(usize),
    #[error("packet exceeds the IPv6 payload length limit")]
    PayloadTooLarge,
    #[error("packet is not IPv6-in-IPv6 with an SRH")]
    NotEncapsulated,
    #[error("segments left is already zero")]
    SegmentsExhausted,
    #[error("segments left {segments_left} exceeds last entry {last_entry}")]
    SegmentsLeftOutOfRange { segments_left: u8, last_entry: u8 },
    #[error("packet already carries an SRH")]
    AlreadyHasSrh,
    #[error("packet carries no SRH")]
    NoSrh,
    #[error("last SID {last} differs from the packet destination {dst}")]
    DestinationMismatch { last: Ipv6Addr, dst: Ipv6Addr },
}

/// An IPv6 packet as raw octets.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct RawPacket(Vec<u8>);

impl RawPacket {
    pub fn new(bytes: Vec<u8>) -> Self {
        RawPacket(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn as_mut_bytes(&mut self) -> &mut [u8] {
        &mut self.0
    }

    /// Removes the first `n` bytes.
    pub fn pull(&mut self, n: usize) {
        self.0.drain(..n);
    }

    /// Prepends `header`, reusing spare capacity when there is some.
    pub fn push_front(&mut self, header: &[u8]) {
        let (n, old) = (header.len(), self.0.len());
        self.0.resize(old + n, 0);
        self.0.copy_within(..old, n);
        self.0[..n].copy_from_slice(header);
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.0
    }
}

impl Deref for RawPacket {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl From<Vec<u8>> for RawPacket {
    fn from(v: Vec<u8>) -> Self {
        RawPacket(v)
    }
}

impl From<&[u8]> for RawPacket {
    fn from(v: &[u8]) -> Self {
        RawPacket(v.to_vec())
    }
}

impl std::fmt::Debug for RawPacket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RawPacket({})", hex::encode(&self.0))
    }
}

/// Parsed view of a packet: fixed header, optional SRH and the payload
/// after the last parsed header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedPacket<'a> {
    pub header: Ipv6Header,
    pub srh: Option<SrhHeader>,
    pub payload: &'a [u8],
}

impl ParsedPacket<'_> {
    /// Serializes the packet. `payload_length` is recomputed from content.
    pub fn serialize(&self) -> RawPacket {
        let srh_len = self.srh.as_ref().map_or(0, SrhHeader::wire_len);
        let mut out = Vec::with_capacity(IPV6_HEADER_LEN + srh_len + self.payload.len());
        let mut header = self.header;
        header.payload_length = (srh_len + self.payload.len()) as u16;
        header.write(&mut out);
        if let Some(srh) = &self.srh {
            srh.write(&mut out);
        }
        out.extend_from_slice(self.payload);
        RawPacket(out)
    }
}

pub fn parse_packet(raw: &[u8]) -> Result<ParsedPacket<'_>, CodecError> {
    let header = Ipv6Header::parse(raw)?;
    let body = &raw[IPV6_HEADER_LEN..];
    if usize::from(header.payload_length) != body.len() {
        return Err(CodecError::LengthMismatch {
            declared: usize::from(header.payload_length),
            available: body.len(),
        });
    }
    if header.next_header == proto::ROUTING {
        let (srh, used) = SrhHeader::parse(body)?;
        Ok(ParsedPacket {
            header,
            srh: Some(srh),
            payload: &body[used..],
        })
    } else {
        Ok(ParsedPacket {
            header,
            srh: None,
            payload: body,
        })
    }
}

/// Wraps `inner` in an outer IPv6 header carrying an SRH.
///
/// `path` lists SIDs in traversal order; the outer destination is `path[0]`.
pub fn encap(inner: &[u8], path: &[Ipv6Addr], outer_src: Ipv6Addr) -> Result<RawPacket, CodecError> {
    Ipv6Header::parse(inner)?;
    let srh = SrhHeader::from_path(path, proto::IPV6)?;
    let payload_len = srh.wire_len() + inner.len();
    let payload_length = u16::try_from(payload_len).map_err(|_| CodecError::PayloadTooLarge)?;
    let outer = Ipv6Header::new(outer_src, path[0], proto::ROUTING, payload_length);
    let mut out = Vec::with_capacity(IPV6_HEADER_LEN + payload_len);
    outer.write(&mut out);
    srh.write(&mut out);
    out.extend_from_slice(inner);
    Ok(RawPacket(out))
}

/// Result of popping the outer IPv6 header and SRH.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decapsulated {
    pub inner: RawPacket,
    /// The exact popped byte sequence (outer IPv6 header followed by SRH).
    pub saved_headers: Vec<u8>,
}

/// Length of the outer IPv6 + SRH prefix of an encap-mode packet, after
/// checking the inner packet starts with an IPv6 header.
pub fn encap_prefix_len(outer: &[u8]) -> Result<usize, CodecError> {
    let header = Ipv6Header::parse(outer)?;
    if header.next_header != proto::ROUTING {
        return Err(CodecError::NotEncapsulated);
    }
    let body = &outer[IPV6_HEADER_LEN..];
    if usize::from(header.payload_length) != body.len() {
        return Err(CodecError::LengthMismatch {
            declared: usize::from(header.payload_length),
            available: body.len(),
        });
    }
    let used = srh_len_checked(body)?;
    if body[0] != proto::IPV6 {
        return Err(CodecError::NotEncapsulated);
    }
    Ipv6Header::parse(&body[used..]).map_err(|_| CodecError::NotEncapsulated)?;
    Ok(IPV6_HEADER_LEN + used)
}

/// Validates the SRH at the start of `body` and returns its length without
/// materialising the segment list.
fn srh_len_checked(body: &[u8]) -> Result<usize, CodecError> {
    if body.len() < SRH_FIXED_LEN {
        return Err(CodecError::TruncatedHeader {
            needed: SRH_FIXED_LEN,
            available: body.len(),
        });
    }
    if body[2] != SRH_ROUTING_TYPE {
        return Err(CodecError::BadRoutingType(body[2]));
    }
    let total = SRH_FIXED_LEN + 8 * usize::from(body[1]);
    let seg_end = SRH_FIXED_LEN + 16 * (usize::from(body[4]) + 1);
    if total > body.len() || seg_end > total {
        return Err(CodecError::LengthMismatch {
            declared: total.max(seg_end),
            available: body.len(),
        });
    }
    if body[3] > body[4] {
        return Err(CodecError::SegmentsLeftOutOfRange {
            segments_left: body[3],
            last_entry: body[4],
        });
    }
    Ok(total)
}

/// Pops the outer IPv6 header and SRH of an encap-mode packet.
pub fn decap(outer: &[u8]) -> Result<Decapsulated, CodecError> {
    let split = encap_prefix_len(outer)?;
    Ok(Decapsulated {
        inner: RawPacket(outer[split..].to_vec()),
        saved_headers: outer[..split].to_vec(),
    })
}

/// Decrements segments left and points the destination at the new active
/// segment.
pub fn advance_segment(
    header: &Ipv6Header,
    srh: &SrhHeader,
) -> Result<(Ipv6Header, SrhHeader), CodecError> {
    if srh.segments_left == 0 {
        return Err(CodecError::SegmentsExhausted);
    }
    let mut srh = srh.clone();
    srh.segments_left -= 1;
    let mut header = *header;
    header.dst = srh
        .active_segment()
        .ok_or(CodecError::SegmentsLeftOutOfRange {
            segments_left: srh.segments_left,
            last_entry: srh.last_entry(),
        })?;
    Ok((header, srh))
}

/// In-place variant of [`advance_segment`] for a buffer that starts with an
/// IPv6 header immediately followed by an SRH. Only the destination address
/// and the segments left byte change.
pub fn advance_in_place(buf: &mut [u8]) -> Result<Ipv6Addr, CodecError> {
    Ipv6Header::parse(buf)?;
    if buf[6] != proto::ROUTING {
        return Err(CodecError::NoSrh);
    }
    srh_len_checked(&buf[IPV6_HEADER_LEN..])?;
    let sl = buf[IPV6_HEADER_LEN + 3];
    if sl == 0 {
        return Err(CodecError::SegmentsExhausted);
    }
    let sl = sl - 1;
    buf[IPV6_HEADER_LEN + 3] = sl;
    let at = IPV6_HEADER_LEN + SRH_FIXED_LEN + 16 * usize::from(sl);
    let dst = ipv6::read_addr(&buf[at..at + 16]);
    ipv6::set_dst(buf, dst);
    Ok(dst)
}

/// Splices an SRH into a plain IPv6 packet (insert mode).
///
/// `path` is in traversal order and must end with the packet's current
/// destination, which becomes `segments[0]`.
pub fn insert_srh(pkt: &[u8], path: &[Ipv6Addr]) -> Result<RawPacket, CodecError> {
    let parsed = parse_packet(pkt)?;
    if parsed.srh.is_some() {
        return Err(CodecError::AlreadyHasSrh);
    }
    let last = *path.last().ok_or(CodecError::EmptySidList)?;
    if last != parsed.header.dst {
        return Err(CodecError::DestinationMismatch {
            last,
            dst: parsed.header.dst,
        });
    }
    let srh = SrhHeader::from_path(path, parsed.header.next_header)?;
    let payload_len = srh.wire_len() + parsed.payload.len();
    let mut header = parsed.header;
    header.payload_length = u16::try_from(payload_len).map_err(|_| CodecError::PayloadTooLarge)?;
    header.next_header = proto::ROUTING;
    header.dst = path[0];
    let mut out = Vec::with_capacity(IPV6_HEADER_LEN + payload_len);
    header.write(&mut out);
    srh.write(&mut out);
    out.extend_from_slice(parsed.payload);
    Ok(RawPacket(out))
}

/// Removes the SRH of an insert-mode packet, restoring the final
/// destination `segments[0]`.
pub fn remove_srh(pkt: &[u8]) -> Result<RawPacket, CodecError> {
    let parsed = parse_packet(pkt)?;
    let srh = parsed.srh.ok_or(CodecError::NoSrh)?;
    let mut header = parsed.header;
    header.next_header = srh.next_header;
    header.dst = srh.segments[0];
    header.payload_length = parsed.payload.len() as u16;
    let mut out = Vec::with_capacity(IPV6_HEADER_LEN + parsed.payload.len());
    header.write(&mut out);
    out.extend_from_slice(parsed.payload);
    Ok(RawPacket(out))
}

/// Builds an encap-mode packet from stored outer headers and a new inner
/// packet, rewriting only the outer payload length.
pub fn reencap(saved_headers: &[u8], inner: &[u8]) -> Result<RawPacket, CodecError> {
    if saved_headers.len() < IPV6_HEADER_LEN {
        return Err(CodecError::TruncatedHeader {
            needed: IPV6_HEADER_LEN,
            available: saved_headers.len(),
        });
    }
    let payload_length = u16::try_from(saved_headers.len() - IPV6_HEADER_LEN + inner.len())
        .map_err(|_| CodecError::PayloadTooLarge)?;
    let mut out = Vec::with_capacity(saved_headers.len() + inner.len());
    out.extend_from_slice(saved_headers);
    out.extend_from_slice(inner);
    ipv6::set_payload_length(&mut out, payload_length);
    Ok(RawPacket(out))
}

/// [`reencap`] into the packet's own buffer.
pub fn reencap_in_place(saved_headers: &[u8], pkt: &mut RawPacket) -> Result<(), CodecError> {
    if saved_headers.len() < IPV6_HEADER_LEN {
        return Err(CodecError::TruncatedHeader {
            needed: IPV6_HEADER_LEN,
            available: saved_headers.len(),
        });
    }
    let payload_length = u16::try_from(saved_headers.len() - IPV6_HEADER_LEN + pkt.len())
        .map_err(|_| CodecError::PayloadTooLarge)?;
    pkt.push_front(saved_headers);
    ipv6::set_payload_length(pkt.as_mut_bytes(), payload_length);
    Ok(())
}

/// Overwrites the destination address of a raw IPv6 packet.
pub fn rewrite_dst(buf: &mut [u8], dst: Ipv6Addr) -> Result<(), CodecError> {
    Ipv6Header::parse(buf)?;
    ipv6::set_dst(buf, dst);
    Ok(())
}

/// Active segment and segment list length of an SRH packet, read in place.
pub(crate) fn srh_segment(buf: &[u8], index: u8) -> Option<Ipv6Addr> {
    let last = *buf.get(IPV6_HEADER_LEN + 4)?;
    if index > last {
        return None;
    }
    let at = IPV6_HEADER_LEN + SRH_FIXED_LEN + 16 * usize::from(index);
    buf.get(at..at + 16).map(ipv6::read_addr)
}

/// Validates that `buf` is IPv6 with an SRH directly after the fixed header
/// and returns (segments_left, last_entry).
pub(crate) fn srh_pointer(buf: &[u8]) -> Result<(u8, u8), CodecError> {
    Ipv6Header::parse(buf)?;
    if buf[6] != proto::ROUTING {
        return Err(CodecError::NoSrh);
    }
    srh_len_checked(&buf[IPV6_HEADER_LEN..])?;
    Ok((buf[IPV6_HEADER_LEN + 3], buf[IPV6_HEADER_LEN + 4]))
}

pub(crate) fn set_segments_left(buf: &mut [u8], sl: u8) {
    buf[IPV6_HEADER_LEN + 3] = sl;
}
