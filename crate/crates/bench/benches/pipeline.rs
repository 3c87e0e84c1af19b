// SPDX-License-Identifier: Apache-2.0

use std::hint::black_box;
use std::net::Ipv6Addr;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use srproxy_bench::{params, Fixture};
use srproxy_core::packet::{advance_in_place, decap, encap, parse_packet, reencap};
use srproxy_core::routing::PrefixTrie;
use srproxy_core::simnet::{inner_packet, vnf_sid, TopologyParams, RECEIVER_SID, SENDER_ADDR};
use srproxy_core::{Mode, Prefix};

fn modes(c: &mut Criterion) {
    let mut g = c.benchmark_group("pipeline");
    g.throughput(Throughput::Elements(1));
    let configs: [(&str, TopologyParams); 5] = [
        ("baseline", params(Mode::Baseline, 1)),
        ("v1", params(Mode::SrnkV1, 1)),
        ("v2", params(Mode::SrnkV2, 1)),
        ("srext", params(Mode::Srext, 1)),
        ("baseline+80", TopologyParams { plain_rules: 80, ..params(Mode::Baseline, 1) }),
    ];
    for (name, p) in configs {
        let mut f = Fixture::new(&p);
        assert!(f.send(), "{name} delivers");
        g.bench_function(name, |b| b.iter(|| f.send()));
    }
    g.finish();
}

fn rule_counts(c: &mut Criterion) {
    let mut g = c.benchmark_group("rules");
    for mode in [Mode::SrnkV1, Mode::SrnkV2] {
        for k in [1usize, 20, 40, 80, 160] {
            let mut f = Fixture::new(&params(mode, k));
            g.bench_with_input(BenchmarkId::new(mode.as_str(), k), &k, |b, _| b.iter(|| f.send()));
        }
    }
    g.finish();
}

fn codec(c: &mut Criterion) {
    let inner = inner_packet(&[0; 12]);
    let path = [vnf_sid(1), RECEIVER_SID];
    let outer = encap(&inner, &path, SENDER_ADDR).unwrap();
    let mut g = c.benchmark_group("codec");
    g.bench_function("parse", |b| b.iter(|| parse_packet(black_box(&outer)).unwrap().srh.map(|h| h.segments_left)));
    g.bench_function("encap", |b| b.iter(|| encap(black_box(&inner), &path, SENDER_ADDR).unwrap()));
    g.bench_function("advance", |b| {
        b.iter_batched_ref(
            || outer.clone(),
            |p| advance_in_place(p.as_mut_bytes()).unwrap(),
            criterion::BatchSize::SmallInput,
        )
    });
    g.bench_function("decap+reencap", |b| {
        b.iter(|| {
            let d = decap(black_box(&outer)).unwrap();
            reencap(&d.saved_headers, &d.inner).unwrap()
        })
    });
    g.finish();
}

fn lpm(c: &mut Criterion) {
    let mut g = c.benchmark_group("lpm");
    for n in [16u128, 1024, 65536] {
        let mut t = PrefixTrie::new();
        for i in 0..n {
            let a = Ipv6Addr::from((0xfd00u128 << 112) | (i << 64));
            t.insert(Prefix::new(a, 64).unwrap(), i).unwrap();
        }
        t.insert("::/0".parse().unwrap(), u128::MAX).unwrap();
        let probe = Ipv6Addr::from((0xfd00u128 << 112) | ((n / 2) << 64) | 7);
        g.bench_with_input(BenchmarkId::new("prefixes", n), &probe, |b, p| b.iter(|| t.lookup(black_box(*p)).0.copied()));
    }
    g.finish();
}

criterion_group!(benches, modes, rule_counts, codec, lpm);
criterion_main!(benches);
