// SPDX-License-Identifier: Apache-2.0

//! Userspace SRv6 service function chaining dataplane.
//!
//! The crate covers the wire codec ([`packet`]), routing tables and the
//! policy database ([`routing`]), the SR proxy behaviors ([`behavior`]),
//! the node pipeline ([`node`]), an in-memory test network ([`simnet`]),
//! the RFC 2544 style driver ([`rfc2544`]) and scenario files
//! ([`scenario`]).

pub mod behavior;
pub mod config;
pub mod node;
pub mod packet;
pub mod rfc2544;
pub mod routing;
pub mod scenario;
pub mod simnet;

pub use behavior::{BehaviorInstance, BehaviorKind, Chain, Direction, DropReason};
pub use node::{Journey, Mode, Node, PipelineTrace};
pub use packet::{CodecError, RawPacket};
pub use routing::{IfIndex, Prefix, TableId};
