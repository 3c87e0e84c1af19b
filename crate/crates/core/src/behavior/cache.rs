// SPDX-License-Identifier: Apache-2.0

//! Learned outer headers, keyed by the VNF interface.
//!
//! Inbound processing is the producer and fromVNF processing the consumer.
//! One writer at a time; readers proceed between writes.

use rustc_hash::FxHashMap as HashMap;
use std::net::Ipv6Addr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use parking_lot::RwLock;

use crate::routing::{IfIndex, TableId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    /// Outer IPv6 header + SRH, segments left already advanced past the
    /// proxy's own SID.
    pub outer_headers: Box<[u8]>,
    pub last_write: Duration,
    pub sid: Ipv6Addr,
    pub sid_table: TableId,
    seq: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub writes: u64,
    pub hits: u64,
    pub misses: u64,
    pub evictions: u64,
}

#[derive(Debug, Default)]
pub struct HeaderCache {
    entries: RwLock<HashMap<IfIndex, CacheEntry>>,
    seq: AtomicU64,
    writes: AtomicU64,
    hits: AtomicU64,
    misses: AtomicU64,
    evictions: AtomicU64,
}

impl HeaderCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `headers` for `key` unless the previous write is younger than
    /// `age`. With `age` zero every call writes. Returns whether it wrote.
    pub fn learn(
        &self,
        key: IfIndex,
        headers: &[u8],
        now: Duration,
        age: Duration,
        sid: Ipv6Addr,
        sid_table: TableId,
    ) -> bool {
        if !age.is_zero() {
            let map = self.entries.read();
            if let Some(e) = map.get(&key) {
                if now.saturating_sub(e.last_write) < age {
                    return false;
                }
            }
        }
        let entry = CacheEntry {
            outer_headers: headers.into(),
            last_write: now,
            sid,
            sid_table,
            seq: self.seq.fetch_add(1, Ordering::Relaxed),
        };
        self.entries.write().insert(key, entry);
        self.writes.fetch_add(1, Ordering::Relaxed);
        true
    }

    /// Runs `f` on the entry for `key` under the read lock.
    pub fn with_entry<R>(&self, key: IfIndex, f: impl FnOnce(&CacheEntry) -> R) -> Option<R> {
        let map = self.entries.read();
        match map.get(&key) {
            Some(e) => {
                self.hits.fetch_add(1, Ordering::Relaxed);
                Some(f(e))
            }
            None => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                None
            }
        }
    }

    pub fn get(&self, key: IfIndex) -> Option<CacheEntry> {
        self.entries.read().get(&key).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entries sorted by key.
    pub fn entries(&self) -> Vec<(IfIndex, CacheEntry)> {
        let mut v: Vec<_> = self.entries.read().iter().map(|(k, e)| (*k, e.clone())).collect();
        v.sort_by_key(|(k, _)| *k);
        v
    }

    pub fn remove(&self, key: IfIndex) -> Option<CacheEntry> {
        self.entries.write().remove(&key)
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            writes: self.writes.load(Ordering::Relaxed),
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            evictions: self.evictions.load(Ordering::Relaxed),
        }
    }
}

/// Evicts least-recently-written entries until at most `max_entries` remain.
pub fn cache_gc(cache: &HeaderCache, max_entries: usize) -> usize {
    let mut map = cache.entries.write();
    if map.len() <= max_entries {
        return 0;
    }
    let mut order: Vec<_> = map.iter().map(|(k, e)| (e.last_write, e.seq, *k)).collect();
    order.sort();
    let evict = map.len() - max_entries;
    for (_, _, k) in order.into_iter().take(evict) {
        map.remove(&k);
    }
    cache.evictions.fetch_add(evict as u64, Ordering::Relaxed);
    evict
}
