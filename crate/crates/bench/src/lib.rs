// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the criterion benches.

use srproxy_core::simnet::{build_standard_topology, ClockMode, Delivery, Port, Topology, TopologyParams};
use srproxy_core::{BehaviorKind, Mode, RawPacket};

/// A wall-clock topology, its sender port and the default template.
pub struct Fixture {
    pub topology: Topology,
    pub from: Port,
    pub template: RawPacket,
}

impl Fixture {
    pub fn new(params: &TopologyParams) -> Self {
        let topology = build_standard_topology(params, ClockMode::Wall).expect("valid topology");
        let from = topology.sender_port().expect("sender");
        Fixture {
            topology,
            from,
            template: params.template(),
        }
    }

    /// Carries one copy of the template to its fate.
    pub fn send(&mut self) -> bool {
        matches!(self.topology.inject(self.from, self.template.clone()), Delivery::Delivered { .. })
    }
}

/// Standard topology for `mode` with `vnfs` proxies, targeting the last.
pub fn params(mode: Mode, vnfs: usize) -> TopologyParams {
    TopologyParams {
        mode,
        vnfs,
        kind: if mode == Mode::Baseline { BehaviorKind::End } else { BehaviorKind::EndAd },
        ..TopologyParams::default()
    }
}
