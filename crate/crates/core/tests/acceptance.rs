// SPDX-License-Identifier: Apache-2.0

//! Acceptance gate. Runs the ten criteria in order and prints one
//! PASS/FAIL line for each, then fails if any criterion failed.
//!
//! Wall-clock checks interleave their configurations round robin and
//! compare medians over 15 repetitions, so a burst of machine noise hits
//! every configuration alike.

mod common;

use std::fmt::Write as _;
use std::net::Ipv6Addr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srproxy_core::behavior::{Chain, ManualClock};
use srproxy_core::config::{parse_command, ConfigCommand};
use srproxy_core::packet::{
    self, encap, encap_overhead, ethernet_frame_len, insert_overhead, insert_srh, parse_packet, wire_len,
};
use srproxy_core::rfc2544::{pdr_search, PdrConfig, PdrError};
use srproxy_core::routing::{RouteTarget, RuleAction, Selector};
use srproxy_core::scenario::Scenario;
use srproxy_core::simnet::{
    build_standard_topology, measure_per_packet, traffic_packet, vnf_sid, ClockMode, CostModel, CostModelSut, Delivery,
    Topology, TopologyParams, RECEIVER_SID, SENDER_ADDR, SUT,
};
use srproxy_core::{BehaviorKind, Journey, Mode, Node, Prefix, RawPacket, TableId};

/// Reference PDR losses of v1 against a single rule.
const V1_LOSS_AT_80: f64 = 0.284;
const V1_LOSS_AT_160: f64 = 0.506;
const V1_LOSS_TOLERANCE: f64 = 0.05;

const REPS: usize = 15;
const PACKETS_PER_REP: u64 = 20_000;
const RULE_COUNTS: [usize; 5] = [1, 20, 40, 80, 160];

/// Collects checks for one criterion.
#[derive(Default)]
struct Verdict {
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Verdict {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if !ok {
            self.failed.push(what.clone());
        }
        self.notes.push(what);
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    fn passed(&self) -> bool {
        self.failed.is_empty()
    }

    fn summary(&self) -> String {
        if self.passed() {
            self.notes.join("; ")
        } else {
            format!("failed: {}", self.failed.join("; "))
        }
    }
}

fn params(mode: Mode, vnfs: usize) -> TopologyParams {
    TopologyParams {
        mode,
        vnfs,
        kind: if mode == Mode::Baseline { BehaviorKind::End } else { BehaviorKind::EndAd },
        ..TopologyParams::default()
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Median wall-clock nanoseconds per packet for each configuration.
fn per_packet_ns(configs: &[TopologyParams]) -> Vec<f64> {
    let mut built: Vec<(Topology, RawPacket)> = configs
        .iter()
        .map(|p| (build_standard_topology(p, ClockMode::Wall).unwrap(), p.template()))
        .collect();
    for (t, tpl) in &mut built {
        measure_per_packet(t, tpl, 0, PACKETS_PER_REP);
    }
    let mut samples = vec![Vec::with_capacity(REPS); built.len()];
    for _ in 0..REPS {
        for (i, (t, tpl)) in built.iter_mut().enumerate() {
            let d = measure_per_packet(t, tpl, PACKETS_PER_REP, 0);
            samples[i].push(d.as_nanos() as f64);
        }
    }
    samples.into_iter().map(median).collect()
}

fn steady_journey(p: &TopologyParams) -> Journey {
    let mut t = build_standard_topology(p, ClockMode::Simulated).unwrap();
    let from = t.sender_port().unwrap();
    t.inject(from, p.template());
    let (d, mut js) = t.inject_traced(from, p.template());
    assert!(matches!(d, Delivery::Delivered { .. }), "{d:?}");
    js.remove(0)
}

fn cost_pdr(p: &TopologyParams, model: &CostModel, cfg: &PdrConfig) -> u64 {
    let t = build_standard_topology(p, ClockMode::Simulated).unwrap();
    let mut sut = CostModelSut::new(t, model.clone());
    pdr_search(&mut sut, &p.template(), cfg).unwrap().rate
}

fn fine_pdr() -> PdrConfig {
    PdrConfig {
        precision: 5.0,
        ..PdrConfig::default()
    }
}

fn random_path(rng: &mut ChaCha8Rng, n: usize) -> Vec<Ipv6Addr> {
    let mut v: Vec<Ipv6Addr> = Vec::with_capacity(n);
    while v.len() < n {
        let a = Ipv6Addr::from(rng.random::<u128>());
        if !v.contains(&a) {
            v.push(a);
        }
    }
    v
}

fn random_bytes(rng: &mut ChaCha8Rng, max: usize) -> Vec<u8> {
    let len = rng.random_range(0..=max);
    (0..len).map(|_| rng.random()).collect()
}

fn c1_codec() -> Verdict {
    let mut v = Verdict::default();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut bad = 0;
    for _ in 0..10_000 {
        let n = rng.random_range(1..=10);
        let path = random_path(&mut rng, n);
        let src = Ipv6Addr::from(rng.random::<u128>());
        let dst = Ipv6Addr::from(rng.random::<u128>());
        let body = random_bytes(&mut rng, 1400);
        let inner = udp(src, dst, &body);
        let outer = encap(&inner, &path, src).unwrap();
        let mut full = path.clone();
        full.push(dst);
        let inserted = insert_srh(&inner, &full).unwrap();
        let ok = [&inner, &outer, &inserted]
            .iter()
            .all(|p| parse_packet(p).map(|x| x.serialize()).as_ref() == Ok(*p))
            && outer.len() == inner.len() + 48 + 16 * n
            && encap_overhead(n) == 48 + 16 * n
            && inserted.len() == inner.len() + 8 + 16 * (n + 1)
            && insert_overhead(n + 1) == 8 + 16 * (n + 1)
            && packet::decap(&outer).map(|d| d.inner) == Ok(inner.clone());
        bad += usize::from(!ok);
    }
    v.check(bad == 0, format!("{bad} of 10000 random packets broke identity or overhead"));

    let inner = udp(SENDER_ADDR, a("fd00:2::100"), &[0; 12]);
    let outer = encap(&inner, &[a("fdf1::2"), RECEIVER_SID], SENDER_ADDR).unwrap();
    let chain = [inner.len(), outer.len(), ethernet_frame_len(outer.len()), wire_len(outer.len())];
    v.check(chain == [60, 140, 158, 178], format!("sizing {chain:?}"));
    let took = start.elapsed();
    v.check(took < Duration::from_secs(5), format!("{:.2}s", took.as_secs_f64()));
    v
}

fn c2_proxy_oracle() -> Verdict {
    let mut v = Verdict::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cases = 1000;
    let mut bad = Vec::new();
    for case in 0..cases {
        let n = rng.random_range(2..=5);
        let path = random_path(&mut rng, n);
        let src = Ipv6Addr::from(rng.random::<u128>());
        let dst = Ipv6Addr::from(rng.random::<u128>());
        let pkt = encap(&udp(src, dst, &random_bytes(&mut rng, 512)), &path, src).unwrap();
        let want = end_reference(&pkt);
        let headers = headers_after_end(&pkt);
        for mode in [Mode::SrnkV1, Mode::SrnkV2] {
            let clock = Arc::new(ManualClock::new());
            let mut ad = proxy_node(mode, BehaviorKind::EndAd, path[0], 1, None, clock.clone());
            let mut st = proxy_node(mode, BehaviorKind::EndAs, path[0], 1, Some(&headers), clock);
            let got_ad = through(&mut ad, pkt.clone());
            let got_as = through(&mut st, pkt.clone());
            if got_ad.as_ref() != Some(&want) || got_as != got_ad {
                bad.push(format!("case {case} {mode}"));
            }
        }
    }
    v.check(bad.is_empty(), format!("{} cases x v1/v2, mismatches {:?}", cases, bad.first()));
    v
}

fn c3_mode_equivalence() -> Verdict {
    let mut v = Verdict::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let payloads: Vec<Vec<u8>> = (0..10_000).map(|_| random_bytes(&mut rng, 256)).collect();
    let mut streams = Vec::new();
    for mode in [Mode::Baseline, Mode::SrnkV1, Mode::SrnkV2, Mode::Srext] {
        let p = params(mode, 4);
        let mut t = build_standard_topology(&p, ClockMode::Simulated).unwrap();
        let from = t.sender_port().unwrap();
        let mut received = Vec::with_capacity(payloads.len());
        let mut rules = 0u64;
        for (i, body) in payloads.iter().enumerate() {
            let pkt = traffic_packet(p.kind, 1 + i % 4, body);
            let (d, js) = t.inject_traced(from, pkt);
            rules += js.iter().map(|j| u64::from(j.rules_examined())).sum::<u64>();
            match d {
                Delivery::Delivered { packet, .. } => received.push(packet),
                other => {
                    v.check(false, format!("{mode}: packet {i} {other:?}"));
                    break;
                }
            }
        }
        streams.push((mode, received, rules));
    }
    let (_, reference, _) = &streams[0];
    for (mode, s, rules) in &streams {
        v.check(s == reference, format!("{mode} stream identical ({rules} rules examined)"));
    }
    let distinct: std::collections::BTreeSet<u64> = streams.iter().map(|s| s.2).collect();
    v.check(distinct.len() > 1, "traces differ between modes");
    v
}

fn c4_v1_linear() -> Verdict {
    let mut v = Verdict::default();
    let base = CostModel::default();
    let one = steady_journey(&params(Mode::SrnkV1, 1));
    let eighty = steady_journey(&params(Mode::SrnkV1, 80));
    let Some(per_rule) = base.calibrate_per_rule(&one, &eighty, 1.0 - V1_LOSS_AT_80) else {
        v.check(false, "no per-rule cost reproduces the 80-rule point");
        return v;
    };
    let model = CostModel {
        per_rule_cost: per_rule,
        ..base
    };
    v.note(format!("per_rule_cost {per_rule:.3}"));
    let cfg = fine_pdr();
    let pdr: Vec<u64> = [1, 80, 160].iter().map(|&k| cost_pdr(&params(Mode::SrnkV1, k), &model, &cfg)).collect();
    let loss = |i: usize| 1.0 - pdr[i] as f64 / pdr[0] as f64;
    v.check(
        (loss(1) - V1_LOSS_AT_80).abs() < 0.005,
        format!("80 rules: {:.1}% below 1 rule", loss(1) * 100.0),
    );
    v.check(
        (loss(2) - V1_LOSS_AT_160).abs() <= V1_LOSS_TOLERANCE,
        format!(
            "160 rules: {:.1}% below 1 rule, want {:.1}% +/- {:.0} pp",
            loss(2) * 100.0,
            V1_LOSS_AT_160 * 100.0,
            V1_LOSS_TOLERANCE * 100.0
        ),
    );

    let configs: Vec<TopologyParams> = RULE_COUNTS.iter().map(|&k| params(Mode::SrnkV1, k)).collect();
    let ns = per_packet_ns(&configs);
    let points: Vec<(f64, f64)> = RULE_COUNTS.iter().zip(&ns).map(|(&k, &t)| (k as f64, t)).collect();
    let (slope, _, r2) = linear_fit(&points);
    let shown: Vec<String> = ns.iter().map(|t| format!("{t:.0}")).collect();
    v.check(
        r2 >= 0.9 && slope > 0.0,
        format!("wall clock ns/pkt [{}], slope {slope:.2} ns/rule, R^2 {r2:.3}", shown.join(", ")),
    );
    v
}

fn c5_v2_flat() -> Verdict {
    let mut v = Verdict::default();
    let model = CostModel::default();
    let cfg = fine_pdr();
    let pdr: Vec<u64> = RULE_COUNTS.iter().map(|&k| cost_pdr(&params(Mode::SrnkV2, k), &model, &cfg)).collect();
    v.check(pdr.iter().all(|p| *p == pdr[0]), format!("cost-model PDR {pdr:?}"));
    let ns = per_packet_ns(&[params(Mode::SrnkV2, 1), params(Mode::SrnkV2, 160)]);
    let growth = ns[1] / ns[0] - 1.0;
    v.check(
        growth.abs() <= 0.15,
        format!("wall clock {:.0} -> {:.0} ns/pkt ({:+.1}%)", ns[0], ns[1], growth * 100.0),
    );
    v
}

fn c6_rule_traces() -> Verdict {
    let mut v = Verdict::default();
    let k_max = 200;
    for mode in [Mode::SrnkV1, Mode::SrnkV2, Mode::Srext] {
        let p = params(mode, k_max);
        let mut t = build_standard_topology(&p, ClockMode::Simulated).unwrap();
        let from = t.sender_port().unwrap();
        let mut wrong = Vec::new();
        for k in 1..=k_max {
            let (d, js) = t.inject_traced(from, traffic_packet(p.kind, k, &[0; 12]));
            let traces = &js[0].traces;
            let from_vnf = traces.get(1).map(|tr| tr.rules_examined);
            let want = match mode {
                Mode::SrnkV1 => k as u32,
                Mode::SrnkV2 => 1,
                _ => 0,
            };
            let inbound_ok = mode != Mode::Srext || traces[0].rules_examined == 0;
            if !matches!(d, Delivery::Delivered { .. }) || from_vnf != Some(want) || !inbound_ok {
                wrong.push(k);
            }
        }
        let law = match mode {
            Mode::SrnkV1 => "== k",
            Mode::SrnkV2 => "== 1",
            _ => "== 0",
        };
        v.check(wrong.is_empty(), format!("{mode} rules {law} for k<=200 (wrong at {:?})", wrong.first()));
    }
    v
}

fn c7_pdr_search() -> Verdict {
    let mut v = Verdict::default();
    let start = Instant::now();
    let p = params(Mode::Baseline, 1);
    let fixed = CostModel {
        per_cache_write_cost: 0.0,
        ..CostModel::default()
    };
    let cost = {
        let j = steady_journey(&p);
        fixed.journey_cost(&j)
    };
    for c in [1_000u64, 10_000, 100_000] {
        let model = CostModel {
            cpu_budget_per_second: Some(cost * c as f64),
            ..fixed.clone()
        };
        let precision = 0.005 * c as f64;
        let cfg = PdrConfig {
            threshold: 0.005,
            precision,
            ..PdrConfig::default()
        };
        let t = build_standard_topology(&p, ClockMode::Simulated).unwrap();
        let r = pdr_search(&mut CostModelSut::new(t, model), &p.template(), &cfg).unwrap();
        // Capacity C delivers C packets a second, so the highest rate with
        // at most 0.5% loss is C / 0.995.
        let exact = c as f64 / 0.995;
        let rate = r.rate as f64;
        v.check(
            (rate - c as f64).abs() <= precision && rate <= exact && exact - rate <= precision,
            format!("C={c}: pdr {} (exact {exact:.1}, precision {precision})", r.rate),
        );
        v.check(
            r.failing_rate as f64 - rate <= precision && r.at_rate.mean_dr >= 0.995,
            format!("C={c}: bracket [{}, {}]", r.rate, r.failing_rate),
        );
    }
    let t = build_standard_topology(&p, ClockMode::Simulated).unwrap();
    let cfg = PdrConfig {
        max_rate: 200_000,
        ..PdrConfig::default()
    };
    let r = pdr_search(&mut CostModelSut::new(t, CostModel::unlimited()), &p.template(), &cfg);
    v.check(matches!(r, Err(PdrError::NeverDrops { .. })), "unlimited budget reports NeverDrops");
    let took = start.elapsed();
    v.check(took < Duration::from_secs(30), format!("{:.1}s", took.as_secs_f64()));
    v
}

fn c8_age() -> Verdict {
    let mut v = Verdict::default();
    for (age, lo, hi) in [(1u32, 5u64, 6u64), (0, 1000, 1000)] {
        let p = TopologyParams {
            age,
            ..params(Mode::SrnkV2, 1)
        };
        let t = build_standard_topology(&p, ClockMode::Simulated).unwrap();
        let mut sut = CostModelSut::new(t, CostModel::unlimited());
        let r = sut.step(&p.template(), 200, 5.0);
        let writes = sut.topology.node(SUT).unwrap().counter("cache.writes");
        v.check(
            r.injected == 1000 && (lo..=hi).contains(&writes),
            format!("age {age}: {writes} writes for {} packets", r.injected),
        );
    }

    // Switch the segment after the proxy mid-stream and time how long the
    // fromVNF output keeps the old headers.
    let age = 1u32;
    let p = TopologyParams {
        age,
        ..params(Mode::SrnkV2, 1)
    };
    let mut t = build_standard_topology(&p, ClockMode::Simulated).unwrap();
    let from = t.sender_port().unwrap();
    let new_tail = a("fd00:2::2");
    let switch_at = Duration::from_millis(1505);
    let mut seen = None;
    for i in 0..400u64 {
        let now = Duration::from_millis(10 * i) + Duration::from_millis(5);
        t.set_time(now);
        let tail = if now >= switch_at { new_tail } else { RECEIVER_SID };
        let inner = srproxy_core::simnet::inner_packet(&[0; 12]);
        let pkt = encap(&inner, &[vnf_sid(1), tail], SENDER_ADDR).unwrap();
        if let Delivery::Delivered { packet, .. } = t.inject(from, pkt) {
            if now >= switch_at && packet::Ipv6Header::parse(&packet).unwrap().dst == new_tail {
                seen = Some(now - switch_at);
                break;
            }
        }
    }
    v.check(
        seen.is_some_and(|d| d <= Duration::from_secs(u64::from(age))),
        format!("new chain out after {seen:?} with age {age}s"),
    );

    let ns = per_packet_ns(&[
        params(Mode::SrnkV2, 1),
        TopologyParams {
            age: 0,
            ..params(Mode::SrnkV2, 1)
        },
    ]);
    v.check(
        ns[1] > ns[0],
        format!(
            "wall clock age 1 {:.0} ns/pkt, age 0 {:.0} ns/pkt ({:.1}% lower throughput)",
            ns[0],
            ns[1],
            (1.0 - ns[0] / ns[1]) * 100.0
        ),
    );
    v
}

fn c9_ordering() -> Verdict {
    let mut v = Verdict::default();
    let configs = [
        params(Mode::Srext, 1),
        params(Mode::Baseline, 1),
        params(Mode::SrnkV2, 1),
        TopologyParams {
            plain_rules: 80,
            ..params(Mode::Baseline, 1)
        },
        TopologyParams {
            extended_rule: true,
            ..params(Mode::Baseline, 1)
        },
    ];
    let ns = per_packet_ns(&configs);
    let kpps: Vec<f64> = ns.iter().map(|t| 1e6 / t).collect();
    let [srext, base, v2, base80, ext] = kpps[..] else { unreachable!() };
    v.check(
        srext >= base && base >= v2,
        format!("srext {srext:.0} >= baseline {base:.0} >= v2 {v2:.0} kpps"),
    );
    let drop80 = 1.0 - base80 / base;
    v.check(drop80 >= 0.20, format!("80 plain rules {:.1}% below baseline", drop80 * 100.0));
    let ext_penalty = 1.0 - ext / base;
    v.check(ext_penalty < 0.10, format!("extended rule penalty {:.1}%", ext_penalty * 100.0));
    v
}

const V1_LISTING: &str = "\
$ ip -6 route add fdf1::2/128 \\
encap seg6local action End.AD chain inbound \\
oif veth0 nh6 fdf1::2 age 5 \\
dev veth0
$ ip -6 rule add iif veth0 table 100
$ ip -6 route add default \\
    encap seg6local action End.AD \\
    chain fromVNF iif veth0 \\
    dev veth0 table 100
";

const V2_LISTING: &str = "\
$ip -6 route add fdf1::2/128 \\
    encap seg6local action End.AD \\
    oif veth0 nh6 fdf1::2 age 5 \\
    dev veth0
$ ip -6 rule add seg6local-behaviour End.AD
";

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn c10_listings() -> Verdict {
    let mut v = Verdict::default();
    let start = Instant::now();
    let plumbing = "link add in\nlink add out\nlink add veth0\nroute add ::/0 via fd00:2::1 dev out\n";
    let sid = a("fdf1::2");
    let host = Prefix::host(sid);

    let mut n1 = Node::new("v1", Mode::SrnkV1);
    let r1 = n1.apply_config(plumbing).and_then(|_| n1.apply_config(V1_LISTING));
    v.check(r1.is_ok(), format!("SRNKv1 listing applies ({:?})", r1.err()));
    let veth0 = n1.iface("veth0").unwrap();
    let inbound = n1.tables().get(TableId::MAIN, &host).and_then(|r| match r.target {
        RouteTarget::Behavior(id) => n1.behavior(id).cloned(),
        _ => None,
    });
    v.check(
        inbound.as_ref().is_some_and(|b| {
            b.kind == BehaviorKind::EndAd && b.chain == Chain::Inbound && b.oif == Some(veth0) && b.nh6 == Some(sid) && b.age == 5
        }),
        "v1 inbound End.AD at fdf1::2/128",
    );
    let from_vnf = n1
        .tables()
        .get(TableId(100), &"::/0".parse().unwrap())
        .and_then(|r| match r.target {
            RouteTarget::Behavior(id) => n1.behavior(id).cloned(),
            _ => None,
        });
    v.check(
        from_vnf.is_some_and(|b| b.chain == Chain::FromVnf && b.iif == Some(veth0)),
        "v1 fromVNF default route in table 100",
    );
    v.check(
        n1.rpdb()
            .rules()
            .iter()
            .any(|r| r.selector == Selector::Iif(veth0) && r.action == RuleAction::Lookup(TableId(100))),
        "v1 iif veth0 rule to table 100",
    );
    v.check(n1.validate().is_ok(), "v1 wiring consistent");

    let mut n2 = Node::new("v2", Mode::SrnkV2);
    let r2 = n2.apply_config(plumbing).and_then(|_| n2.apply_config(V2_LISTING));
    v.check(r2.is_ok(), format!("SRNKv2 listing applies ({:?})", r2.err()));
    let custom: Vec<_> = n2.rpdb().custom_rules().collect();
    v.check(
        custom.len() == 1 && custom[0].selector == Selector::ExtendedSrv6(BehaviorKind::EndAd),
        "v2 one extended rule",
    );
    v.check(
        n2.vnf_map().get(n2.iface("veth0").unwrap()).is_some_and(|b| b.sid == sid),
        "v2 veth0 bound to fdf1::2",
    );
    v.check(n2.validate().is_ok(), "v2 wiring consistent");

    // Both wirings carry traffic like End at fdf1::2.
    let pkt = encap(&udp(SENDER_ADDR, a("fd00:2::100"), &[0; 12]), &[sid, RECEIVER_SID], SENDER_ADDR).unwrap();
    for n in [&mut n1, &mut n2] {
        n.apply_config("vnf bind veth0 type passthrough route ::/0").unwrap();
        let name = n.name().to_string();
        v.check(through(n, pkt.clone()) == Some(end_reference(&pkt)), format!("{name} forwards like End"));
    }
    for line in V1_LISTING.split('$').chain(V2_LISTING.split('$')).filter(|l| !l.trim().is_empty()) {
        let joined = line.replace("\\\n", " ");
        let ok = matches!(parse_command(&joined), Ok(Some(ConfigCommand::RouteAdd(_) | ConfigCommand::RuleAdd(_))));
        v.check(ok, format!("parses: {}", joined.split_whitespace().take(5).collect::<Vec<_>>().join(" ")));
    }

    let out = tempfile::tempdir().unwrap();
    for name in ["fig7", "table2"] {
        let path = scenario_dir().join(format!("{name}.scenario"));
        let result = Scenario::load(&path).and_then(|sc| {
            let report = sc.prepare()?.run()?;
            let csv = out.path().join(format!("{name}.csv"));
            report.write_csv(&csv)?;
            Ok((report, std::fs::read_to_string(csv).unwrap_or_default()))
        });
        match result {
            Ok((report, csv)) => {
                let rows = csv.lines().count().saturating_sub(1);
                v.check(
                    report.passed() && rows == report.rows.len() && rows > 0,
                    format!("{name}.scenario: {rows} CSV rows, assertions {}", if report.passed() { "ok" } else { "failed" }),
                );
                if !report.passed() {
                    v.note(report.render());
                }
            }
            Err(e) => v.check(false, format!("{name}.scenario: {e}")),
        }
    }
    let took = start.elapsed();
    v.check(took < Duration::from_secs(120), format!("{:.1}s", took.as_secs_f64()));
    v
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("codec round-trip and overhead law", c1_codec),
        ("proxy correctness oracle", c2_proxy_oracle),
        ("mode equivalence", c3_mode_equivalence),
        ("SRNKv1 linear degradation", c4_v1_linear),
        ("SRNKv2 flatness", c5_v2_flat),
        ("rule-trace laws", c6_rule_traces),
        ("PDR search", c7_pdr_search),
        ("age semantics", c8_age),
        ("wall-clock mode ordering", c9_ordering),
        ("config listings and scenarios", c10_listings),
    ];
    let mut report = String::new();
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let verdict = if v.passed() { "PASS" } else { "FAIL" };
        let line = format!(
            "{verdict} {:>2} {name} [{:.1}s]: {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            v.summary()
        );
        println!("{line}");
        writeln!(report, "{line}").unwrap();
        if !v.passed() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "criteria {failed:?} failed\n{report}");
}
