// SPDX-License-Identifier: Apache-2.0

use std::net::Ipv6Addr;

use super::ipv6::read_addr;
use super::CodecError;

/// Routing type of the Segment Routing Header.
pub const SRH_ROUTING_TYPE: u8 = 4;
/// Fixed part of the SRH, before the segment list.
pub const SRH_FIXED_LEN: usize = 8;
/// Largest segment list an 8-bit `hdr_ext_len` can describe.
pub const MAX_SEGMENTS: usize = 127;

/// Segment Routing Header (routing type 4).
///
/// ```text
///  0                   1                   2                   3
/// +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
/// | Next Header   |  Hdr Ext Len  | Routing Type  | Segments Left |
/// +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
/// |  Last Entry   |     Flags     |              Tag              |
/// +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
/// |            Segment List[0] (128 bits IPv6 address)            |
///                              ...
/// |            Segment List[n] (128 bits IPv6 address)            |
/// +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
/// |            Optional TLVs (kept as an opaque blob)             |
/// +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
/// ```
///
/// Segments are stored in reverse traversal order: `segments[0]` is the
/// final destination and the active segment is `segments[segments_left]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SrhHeader {
    pub next_header: u8,
    pub segments_left: u8,
    pub flags: u8,
    pub tag: u16,
    pub segments: Vec<Ipv6Addr>,
    /// Bytes after the segment list; length is a multiple of 8.
    pub tlvs: Vec<u8>,
}

impl SrhHeader {
    /// Builds an SRH for a path given in traversal order (first hop first).
    pub fn from_path(path: &[Ipv6Addr], next_header: u8) -> Result<Self, CodecError> {
        if path.is_empty() {
            return Err(CodecError::EmptySidList);
        }
        if path.len() > MAX_SEGMENTS {
            return Err(CodecError::TooManySegments(path.len()));
        }
        Ok(SrhHeader {
            next_header,
            segments_left: (path.len() - 1) as u8,
            flags: 0,
            tag: 0,
            segments: path.iter().rev().copied().collect(),
            tlvs: Vec::new(),
        })
    }

    pub fn last_entry(&self) -> u8 {
        (self.segments.len() - 1) as u8
    }

    pub fn hdr_ext_len(&self) -> u8 {
        ((self.wire_len() - SRH_FIXED_LEN) / 8) as u8
    }

    pub fn wire_len(&self) -> usize {
        SRH_FIXED_LEN + 16 * self.segments.len() + self.tlvs.len()
    }

    /// The segment the packet is currently steered to.
    pub fn active_segment(&self) -> Option<Ipv6Addr> {
        self.segments.get(usize::from(self.segments_left)).copied()
    }

    /// Parses an SRH at the start of `bytes`; returns the header and the
    /// number of bytes it occupies.
    pub fn parse(bytes: &[u8]) -> Result<(Self, usize), CodecError> {
        if bytes.len() < SRH_FIXED_LEN {
            return Err(CodecError::TruncatedHeader {
                needed: SRH_FIXED_LEN,
                available: bytes.len(),
            });
        }
        if bytes[2] != SRH_ROUTING_TYPE {
            return Err(CodecError::BadRoutingType(bytes[2]));
        }
        let total = SRH_FIXED_LEN + 8 * usize::from(bytes[1]);
        if total > bytes.len() {
            return Err(CodecError::LengthMismatch {
                declared: total,
                available: bytes.len(),
            });
        }
        let count = usize::from(bytes[4]) + 1;
        let seg_end = SRH_FIXED_LEN + 16 * count;
        if seg_end > total {
            return Err(CodecError::LengthMismatch {
                declared: seg_end,
                available: total,
            });
        }
        let segments_left = bytes[3];
        if segments_left > bytes[4] {
            return Err(CodecError::SegmentsLeftOutOfRange {
                segments_left,
                last_entry: bytes[4],
            });
        }
        let segments = bytes[SRH_FIXED_LEN..seg_end]
            .chunks_exact(16)
            .map(read_addr)
            .collect();
        Ok((
            SrhHeader {
                next_header: bytes[0],
                segments_left,
                flags: bytes[5],
                tag: u16::from_be_bytes([bytes[6], bytes[7]]),
                segments,
                tlvs: bytes[seg_end..total].to_vec(),
            },
            total,
        ))
    }

    pub fn write(&self, out: &mut Vec<u8>) {
        debug_assert!(!self.segments.is_empty());
        debug_assert_eq!(self.tlvs.len() % 8, 0);
        out.reserve(self.wire_len());
        out.extend_from_slice(&[
            self.next_header,
            self.hdr_ext_len(),
            SRH_ROUTING_TYPE,
            self.segments_left,
            self.last_entry(),
            self.flags,
        ]);
        out.extend_from_slice(&self.tag.to_be_bytes());
        for s in &self.segments {
            out.extend_from_slice(&s.octets());
        }
        out.extend_from_slice(&self.tlvs);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::with_capacity(self.wire_len());
        self.write(&mut v);
        v
    }
}
