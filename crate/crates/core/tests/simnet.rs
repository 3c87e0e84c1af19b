// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use srproxy_core::rfc2544::{pdr_search, PdrConfig, PdrError, TrafficStats};
use srproxy_core::simnet::{
    build_standard_topology, traffic_packet, ClockMode, CostModel, CostModelSut, Delivery, TopologyParams,
};
use srproxy_core::{BehaviorKind, Mode, RawPacket};

fn mode() -> impl Strategy<Value = Mode> {
    prop::sample::select(vec![Mode::Baseline, Mode::SrnkV1, Mode::SrnkV2, Mode::Srext])
}

fn params(mode: Mode, vnfs: usize) -> TopologyParams {
    TopologyParams {
        mode,
        vnfs,
        kind: if mode == Mode::Baseline { BehaviorKind::End } else { BehaviorKind::EndAd },
        ..TopologyParams::default()
    }
}

fn sut(p: &TopologyParams, model: CostModel) -> CostModelSut {
    CostModelSut::new(build_standard_topology(p, ClockMode::Simulated).unwrap(), model)
}

fn journey_cost(p: &TopologyParams, model: &CostModel) -> f64 {
    let mut t = build_standard_topology(p, ClockMode::Simulated).unwrap();
    let from = t.sender_port().unwrap();
    let mut cost = 0.0;
    let d = t.inject_with(from, p.template(), |j| cost += model.journey_cost(j));
    assert!(matches!(d, Delivery::Delivered { .. }));
    cost
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn conservation_and_determinism(
        mode in mode(),
        vnfs in 1usize..8,
        ps in 1u64..5000,
        budget in 1.0f64..2e5,
        seconds in 1u32..3,
    ) {
        let p = params(mode, vnfs);
        let model = CostModel { cpu_budget_per_second: Some(budget), ..CostModel::default() };
        let run = || {
            let mut s = sut(&p, model.clone());
            let payloads = |i: u64| traffic_packet(p.kind, 1 + (i as usize % vnfs), &i.to_be_bytes());
            s.step_with(ps, f64::from(seconds), payloads)
        };
        let r = run();
        prop_assert_eq!(r.injected, ps * u64::from(seconds));
        prop_assert_eq!(r.injected, r.delivered_total() + r.queue_drops + r.pipeline_drops + r.unlinked);
        prop_assert_eq!(r.pipeline_drops + r.unlinked, 0);
        prop_assert_eq!(run(), r);
    }

    #[test]
    fn throughput_ceiling(mode in mode(), ps in 1u64..20_000, packets_per_second in 1u64..10_000) {
        let p = params(mode, 1);
        // Cache writes would make the first packet of each second dearer.
        let unit = CostModel { per_cache_write_cost: 0.0, ..CostModel::default() };
        let cost = journey_cost(&p, &unit);
        let model = CostModel { cpu_budget_per_second: Some(cost * packets_per_second as f64), ..unit };
        let mut s = sut(&p, model);
        let r = s.step(&p.template(), ps, 2.0);
        // Admission stops once the budget is gone, so each second carries
        // exactly min(PS, budget / cost) packets.
        prop_assert_eq!(r.delivered_total(), 2 * ps.min(packets_per_second));
    }

    #[test]
    fn stats_identities(ps in 1u64..1_000_000, d in 1u32..20, kept in 0.0f64..=1.0) {
        let p_in = TrafficStats::offered(ps, f64::from(d));
        let p_out = (p_in as f64 * kept).floor() as u64;
        let s = TrafficStats::new(ps, f64::from(d), p_in, p_out);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * y.abs().max(1.0);
        prop_assert!(close(s.throughput * s.duration, s.p_out as f64));
        prop_assert!(close(s.delivery_ratio * s.p_in as f64, s.p_out as f64));
        prop_assert!(close(s.delivery_ratio, s.throughput / s.ps as f64));
        prop_assert!((0.0..=1.0).contains(&s.delivery_ratio));
    }
}

#[test]
fn v2_cost_is_constant_and_v1_linear() {
    let model = CostModel::default();
    let counts = [1usize, 20, 40, 80, 160];
    let v2: Vec<f64> = counts.iter().map(|&k| journey_cost(&params(Mode::SrnkV2, k), &model)).collect();
    assert!(v2.iter().all(|c| *c == v2[0]), "{v2:?}");
    let srext: Vec<f64> = counts.iter().map(|&k| journey_cost(&params(Mode::Srext, k), &model)).collect();
    assert!(srext.iter().all(|c| *c == srext[0]), "{srext:?}");

    // Addressing the last VNF walks past one iif rule per earlier VNF on
    // the way back: per-rule cost times (k - 1) on top of the 1-VNF cost.
    let v1: Vec<f64> = counts.iter().map(|&k| journey_cost(&params(Mode::SrnkV1, k), &model)).collect();
    for (k, c) in counts.iter().zip(&v1) {
        let extra = c - v1[0];
        assert!(extra > 0.0 || *k == 1);
        let per = extra / (*k as f64 - 1.0).max(1.0);
        assert!(*k == 1 || (per - v1_per_vnf(&model)).abs() < 1e-9, "k={k} per={per}");
    }
}

fn v1_per_vnf(model: &CostModel) -> f64 {
    let a = journey_cost(&params(Mode::SrnkV1, 1), model);
    let b = journey_cost(&params(Mode::SrnkV1, 2), model);
    b - a
}

#[test]
fn modes_deliver_identical_streams() {
    let payloads: Vec<Vec<u8>> = (0u32..2000).map(|i| i.to_be_bytes().repeat(1 + (i % 5) as usize)).collect();
    let stream = |mode: Mode, kind: BehaviorKind| -> Vec<RawPacket> {
        let p = TopologyParams { kind, ..params(mode, 3) };
        let mut t = build_standard_topology(&p, ClockMode::Simulated).unwrap();
        let from = t.sender_port().unwrap();
        payloads
            .iter()
            .enumerate()
            .map(|(i, b)| match t.inject(from, traffic_packet(kind, 1 + i % 3, b)) {
                Delivery::Delivered { packet, .. } => packet,
                other => panic!("{mode}: {other:?}"),
            })
            .collect()
    };
    let reference = stream(Mode::Baseline, BehaviorKind::End);
    for mode in [Mode::SrnkV1, Mode::SrnkV2, Mode::Srext] {
        for kind in [BehaviorKind::EndAd, BehaviorKind::EndAs] {
            assert!(stream(mode, kind) == reference, "{mode} {kind}");
        }
    }
}

#[test]
fn pdr_never_drops_without_a_budget() {
    let p = params(Mode::SrnkV2, 1);
    let mut s = sut(&p, CostModel::unlimited());
    let cfg = PdrConfig { max_rate: 100_000, ..PdrConfig::default() };
    assert!(matches!(pdr_search(&mut s, &p.template(), &cfg), Err(PdrError::NeverDrops { .. })));
}
