// SPDX-License-Identifier: Apache-2.0

//! SRv6 local behaviors: End and the SR proxies End.AD (dynamic), End.AS
//! (static) and End.AM (masquerading).

mod cache;
mod clock;
mod ops;

use std::fmt;
use std::net::Ipv6Addr;
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::packet::{self, CodecError, Ipv6Header};
use crate::routing::{IfIndex, TableId};

pub use cache::{cache_gc, CacheEntry, CacheStats, HeaderCache};
pub use clock::{Clock, ManualClock, SystemClock};
pub use ops::{
    end_ad_fromvnf, end_ad_inbound, end_am_demasquerade, end_am_masquerade, end_as_fromvnf, end_as_inbound,
    end_behavior, ProxyOutput,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BehaviorKind {
    End,
    EndAd,
    EndAs,
    EndAm,
}

impl BehaviorKind {
    pub const ALL: [BehaviorKind; 4] = [BehaviorKind::End, BehaviorKind::EndAd, BehaviorKind::EndAs, BehaviorKind::EndAm];

    pub fn as_str(self) -> &'static str {
        match self {
            BehaviorKind::End => "End",
            BehaviorKind::EndAd => "End.AD",
            BehaviorKind::EndAs => "End.AS",
            BehaviorKind::EndAm => "End.AM",
        }
    }

    /// Proxies hand the packet to a VNF and take it back.
    pub fn is_proxy(self) -> bool {
        self != BehaviorKind::End
    }
}

impl fmt::Display for BehaviorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BehaviorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BehaviorKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown behavior {s}"))
    }
}

/// Direction(s) a proxy instance handles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chain {
    Inbound,
    FromVnf,
    /// One instance for both directions, resolved through the extended rule.
    Bidirectional,
}

impl Chain {
    pub fn as_str(self) -> &'static str {
        match self {
            Chain::Inbound => "inbound",
            Chain::FromVnf => "fromVNF",
            Chain::Bidirectional => "bidirectional",
        }
    }
}

impl FromStr for Chain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inbound" => Ok(Chain::Inbound),
            "fromVNF" | "fromvnf" => Ok(Chain::FromVnf),
            _ => Err(format!("unknown chain {s}")),
        }
    }
}

/// Direction a packet takes through a proxy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Inbound,
    FromVnf,
}

/// Default `age` for End.AD, in seconds.
pub const DEFAULT_AGE_SECS: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviorInstance {
    pub kind: BehaviorKind,
    pub chain: Chain,
    pub sid: Ipv6Addr,
    /// Interface toward the VNF.
    pub oif: Option<IfIndex>,
    /// Interface the VNF sends on (fromVNF instances).
    pub iif: Option<IfIndex>,
    /// VNF next hop.
    pub nh6: Option<Ipv6Addr>,
    /// Minimum seconds between learned-header writes (End.AD).
    pub age: u32,
    /// Outer headers replayed on fromVNF traffic (End.AS).
    pub static_headers: Option<Vec<u8>>,
    /// SID list the End.AS headers were built from, when configured that way.
    pub segs: Option<Vec<Ipv6Addr>>,
    /// Table holding the route that points at this instance.
    pub table: TableId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{0} requires {1}")]
    Missing(BehaviorKind, &'static str),
    #[error("{0} does not accept {1}")]
    Forbidden(BehaviorKind, &'static str),
    #[error("invalid static headers: {0}")]
    BadStaticHeaders(CodecError),
}

impl BehaviorInstance {
    pub fn new(kind: BehaviorKind, sid: Ipv6Addr) -> Self {
        BehaviorInstance {
            kind,
            chain: Chain::Bidirectional,
            sid,
            oif: None,
            iif: None,
            nh6: None,
            age: DEFAULT_AGE_SECS,
            static_headers: None,
            segs: None,
            table: TableId::MAIN,
        }
    }

    pub fn age(&self) -> Duration {
        Duration::from_secs(u64::from(self.age))
    }

    /// End.AS headers for a SID list in traversal order.
    pub fn static_headers_for(path: &[Ipv6Addr], src: Ipv6Addr) -> Result<Vec<u8>, CodecError> {
        let srh = packet::SrhHeader::from_path(path, packet::proto::IPV6)?;
        let header = Ipv6Header::new(src, path[0], packet::proto::ROUTING, srh.wire_len() as u16);
        let mut out = header.to_bytes().to_vec();
        srh.write(&mut out);
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let k = self.kind;
        match k {
            BehaviorKind::EndAs => {
                let h = self.static_headers.as_deref().ok_or(ConfigError::Missing(k, "segs"))?;
                let pseudo = packet::reencap(h, &Ipv6Header::new(self.sid, self.sid, packet::proto::NO_NEXT_HEADER, 0).to_bytes())
                    .map_err(ConfigError::BadStaticHeaders)?;
                packet::decap(&pseudo).map_err(ConfigError::BadStaticHeaders)?;
            }
            _ if self.static_headers.is_some() => return Err(ConfigError::Forbidden(k, "static headers")),
            _ => {}
        }
        if k == BehaviorKind::End {
            return Ok(());
        }
        match self.chain {
            Chain::Inbound | Chain::Bidirectional if self.oif.is_none() => Err(ConfigError::Missing(k, "oif")),
            Chain::FromVnf if self.iif.is_none() => Err(ConfigError::Missing(k, "iif")),
            _ => Ok(()),
        }
    }

    /// The interface whose traffic is treated as coming back from the VNF.
    pub fn vnf_interface(&self) -> Option<IfIndex> {
        match self.chain {
            Chain::FromVnf => self.iif,
            _ => self.iif.or(self.oif),
        }
    }
}

/// Why a packet was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DropReason {
    NoRoute,
    NotEncapsulated,
    SegmentsExhausted,
    NoCacheEntry,
    NoSrh,
    Malformed,
    WrongInterface,
    VnfDrop,
    QueueFull,
    /// The packet kept resolving to local behaviors.
    Loop,
}

impl DropReason {
    pub const ALL: [DropReason; 10] = [
        DropReason::NoRoute,
        DropReason::NotEncapsulated,
        DropReason::SegmentsExhausted,
        DropReason::NoCacheEntry,
        DropReason::NoSrh,
        DropReason::Malformed,
        DropReason::WrongInterface,
        DropReason::VnfDrop,
        DropReason::QueueFull,
        DropReason::Loop,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::NoRoute => "no_route",
            DropReason::NotEncapsulated => "not_encapsulated",
            DropReason::SegmentsExhausted => "segments_exhausted",
            DropReason::NoCacheEntry => "no_cache_entry",
            DropReason::NoSrh => "no_srh",
            DropReason::Malformed => "malformed",
            DropReason::WrongInterface => "wrong_interface",
            DropReason::VnfDrop => "vnf_drop",
            DropReason::QueueFull => "queue_full",
            DropReason::Loop => "loop",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BehaviorError {
    #[error("packet is not SR encapsulated")]
    NotEncapsulated,
    #[error("segments left exhausted")]
    SegmentsExhausted,
    #[error("no learned headers for the VNF interface")]
    NoCacheEntry,
    #[error("packet carries no SRH")]
    NoSrh,
    #[error("packet arrived on an interface the behavior does not serve")]
    WrongInterface,
    #[error("malformed packet: {0}")]
    Malformed(CodecError),
}

impl BehaviorError {
    pub fn drop_reason(&self) -> DropReason {
        match self {
            BehaviorError::NotEncapsulated => DropReason::NotEncapsulated,
            BehaviorError::SegmentsExhausted => DropReason::SegmentsExhausted,
            BehaviorError::NoCacheEntry => DropReason::NoCacheEntry,
            BehaviorError::NoSrh => DropReason::NoSrh,
            BehaviorError::WrongInterface => DropReason::WrongInterface,
            BehaviorError::Malformed(_) => DropReason::Malformed,
        }
    }
}

impl From<CodecError> for BehaviorError {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::NotEncapsulated => BehaviorError::NotEncapsulated,
            CodecError::SegmentsExhausted => BehaviorError::SegmentsExhausted,
            CodecError::NoSrh => BehaviorError::NoSrh,
            other => BehaviorError::Malformed(other),
        }
    }
}

/// Per-instance packet counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BehaviorCounters {
    pub packets_in: u64,
    pub packets_out: u64,
    pub drops: u64,
    pub cache_writes: u64,
}
