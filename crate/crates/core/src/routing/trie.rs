// SPDX-License-Identifier: Apache-2.0

//! Binary trie over address bits for longest-prefix match.

use std::net::Ipv6Addr;

use rustc_hash::FxHashMap;

use super::prefix::Prefix;

const NONE: u32 = 0;
const NO_VALUE: u32 = u32::MAX;

/// A path-compressed node: it stands for the chain of single-child bit
/// nodes leading to `key/len`.
#[derive(Debug, Clone, Copy)]
struct Node {
    key: u128,
    len: u8,
    child: [u32; 2],
    /// Index into `values`, or `NO_VALUE`.
    value: u32,
}

impl Node {
    fn new(key: u128, len: u8) -> Self {
        Node {
            key,
            len,
            child: [NONE; 2],
            value: NO_VALUE,
        }
    }
}

fn bit(key: u128, i: u8) -> usize {
    ((key >> (127 - u32::from(i))) & 1) as usize
}

fn common_len(a: u128, b: u128) -> u8 {
    (a ^ b).leading_zeros() as u8
}

fn masked(key: u128, len: u8) -> u128 {
    match len {
        0 => 0,
        l => key & (u128::MAX << (128 - u32::from(l))),
    }
}

/// Longest-prefix-match table: a binary trie over address bits with
/// single-child chains collapsed. Lookups report how many address bits the
/// walk consumed, which is the depth an uncollapsed trie would reach.
#[derive(Debug, Clone)]
pub struct PrefixTrie<V> {
    // nodes[0] is the root (length 0); index 0 doubles as the "no child"
    // marker since the root is never anyone's child. Values live apart so
    // the nodes a lookup walks stay small.
    nodes: Vec<Node>,
    values: Vec<Option<V>>,
    free: Vec<u32>,
    // Value slots of /128 entries. A host route is always the longest
    // match for its address, so lookups try it before walking.
    hosts: FxHashMap<u128, u32>,
    len: usize,
}

impl<V> Default for PrefixTrie<V> {
    fn default() -> Self {
        PrefixTrie {
            nodes: vec![Node::new(0, 0)],
            values: Vec::new(),
            free: Vec::new(),
            hosts: FxHashMap::default(),
            len: 0,
        }
    }
}

impl<V> PrefixTrie<V> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn find(&self, prefix: &Prefix) -> Option<usize> {
        let (key, plen) = (u128::from(prefix.addr()), prefix.len());
        let mut at = 0usize;
        while self.nodes[at].len < plen {
            let next = self.nodes[at].child[bit(key, self.nodes[at].len)];
            if next == NONE {
                return None;
            }
            let n = &self.nodes[next as usize];
            if n.len > plen || common_len(key, n.key) < n.len {
                return None;
            }
            at = next as usize;
        }
        Some(at)
    }

    fn value_at(&self, node: usize) -> Option<&V> {
        match self.nodes[node].value {
            NO_VALUE => None,
            v => self.values[v as usize].as_ref(),
        }
    }

    fn push_node(&mut self, key: u128, len: u8) -> u32 {
        self.nodes.push(Node::new(key, len));
        (self.nodes.len() - 1) as u32
    }

    /// Inserts a value; returns it back if the prefix is already present.
    pub fn insert(&mut self, prefix: Prefix, value: V) -> Result<(), V> {
        let (key, plen) = (u128::from(prefix.addr()), prefix.len());
        let mut at = 0usize;
        let target = loop {
            let len = self.nodes[at].len;
            if len == plen {
                break at;
            }
            let b = bit(key, len);
            let next = self.nodes[at].child[b];
            if next == NONE {
                let leaf = self.push_node(key, plen);
                self.nodes[at].child[b] = leaf;
                break leaf as usize;
            }
            let n = self.nodes[next as usize];
            let common = common_len(key, n.key).min(n.len).min(plen);
            if common == n.len {
                at = next as usize;
                continue;
            }
            // `n` diverges from the new prefix below its own length: split
            // its edge at the common part.
            let mid = self.push_node(masked(key, common), common);
            self.nodes[mid as usize].child[bit(n.key, common)] = next;
            self.nodes[at].child[b] = mid;
            if common == plen {
                break mid as usize;
            }
            let leaf = self.push_node(key, plen);
            self.nodes[mid as usize].child[bit(key, common)] = leaf;
            break leaf as usize;
        };
        if self.nodes[target].value != NO_VALUE {
            return Err(value);
        }
        let slot = match self.free.pop() {
            Some(i) => {
                self.values[i as usize] = Some(value);
                i
            }
            None => {
                self.values.push(Some(value));
                (self.values.len() - 1) as u32
            }
        };
        self.nodes[target].value = slot;
        if plen == 128 {
            self.hosts.insert(key, slot);
        }
        self.len += 1;
        Ok(())
    }

    pub fn remove(&mut self, prefix: &Prefix) -> Option<V> {
        let at = self.find(prefix)?;
        let slot = std::mem::replace(&mut self.nodes[at].value, NO_VALUE);
        if slot == NO_VALUE {
            return None;
        }
        if prefix.len() == 128 {
            self.hosts.remove(&u128::from(prefix.addr()));
        }
        self.free.push(slot);
        self.len -= 1;
        self.values[slot as usize].take()
    }

    pub fn get(&self, prefix: &Prefix) -> Option<&V> {
        self.find(prefix).and_then(|i| self.value_at(i))
    }

    /// Longest-prefix match. Also returns the number of address bits the
    /// walk consumed.
    pub fn lookup(&self, addr: Ipv6Addr) -> (Option<&V>, u32) {
        let key = u128::from(addr);
        if let Some(&slot) = self.hosts.get(&key) {
            return (self.values[slot as usize].as_ref(), 128);
        }
        let mut node = &self.nodes[0];
        let mut best = node.value;
        let depth = loop {
            if node.len == 128 {
                break 128;
            }
            let next = node.child[bit(key, node.len)];
            if next == NONE {
                break node.len;
            }
            let n = &self.nodes[next as usize];
            let common = common_len(key, n.key);
            if common < n.len {
                break common;
            }
            node = n;
            if node.value != NO_VALUE {
                best = node.value;
            }
        };
        let best = match best {
            NO_VALUE => None,
            v => self.values[v as usize].as_ref(),
        };
        (best, u32::from(depth))
    }

    /// All entries in trie pre-order: shorter prefixes first, zero branch
    /// before one branch.
    pub fn iter(&self) -> Vec<(Prefix, &V)> {
        let mut out = Vec::with_capacity(self.len);
        let mut stack = vec![0usize];
        while let Some(at) = stack.pop() {
            let node = &self.nodes[at];
            if let Some(v) = self.value_at(at) {
                let p = Prefix::new(Ipv6Addr::from(node.key), node.len).expect("trie keys are masked");
                out.push((p, v));
            }
            for b in [1usize, 0] {
                if node.child[b] != NONE {
                    stack.push(node.child[b] as usize);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Prefix {
        s.parse().unwrap()
    }

    #[test]
    fn longest_match_wins() {
        let mut t = PrefixTrie::new();
        t.insert(p("default"), "default").unwrap();
        t.insert(p("fdf1::/64"), "net").unwrap();
        t.insert(p("fdf1::2/128"), "host").unwrap();
        assert_eq!(t.lookup("fdf1::2".parse().unwrap()).0, Some(&"host"));
        assert_eq!(t.lookup("fdf1::3".parse().unwrap()).0, Some(&"net"));
        assert_eq!(t.lookup("2000::1".parse().unwrap()).0, Some(&"default"));
        assert_eq!(t.lookup("fdf1::2".parse().unwrap()).1, 128);
    }

    #[test]
    fn duplicate_insert_and_remove() {
        let mut t = PrefixTrie::new();
        t.insert(p("fd00::/16"), 1).unwrap();
        assert_eq!(t.insert(p("fd00::/16"), 2), Err(2));
        assert_eq!(t.remove(&p("fd00::/16")), Some(1));
        assert_eq!(t.remove(&p("fd00::/16")), None);
        assert!(t.is_empty());
        assert_eq!(t.lookup("fd00::1".parse().unwrap()).0, None);
    }

    #[test]
    fn iter_lists_every_prefix_once() {
        let mut t = PrefixTrie::new();
        for s in ["fd00:2::/64", "default", "fdf1::2/128", "fd00::/16"] {
            t.insert(p(s), s).unwrap();
        }
        let got: Vec<_> = t.iter().into_iter().map(|(k, v)| (k.to_string(), *v)).collect();
        assert_eq!(got.len(), 4);
        assert_eq!(got[0].0, "default");
        for (k, v) in got {
            assert_eq!(p(&k), p(v));
        }
    }
}
