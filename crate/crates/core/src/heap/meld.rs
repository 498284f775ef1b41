//! Pairing heap with handles, paired with a hash table from key to
//! `(priority, handle)`.
//!
//! Nodes live in a per-heap arena; a handle is an arena index. Melding two
//! heaps appends the smaller arena to the larger one, so handles of the
//! absorbed heap shift by a fixed offset.

use std::collections::HashMap;
use std::hash::{BuildHasher, Hasher};

use super::{better, ClusterId, HeapError, HeapValue, NeighborHeap};

const NIL: u32 = u32::MAX;

/// Seeded hasher for cluster-id keys (splitmix64 finalizer).
#[derive(Debug, Clone, Copy)]
pub(crate) struct SeededState {
    seed: u64,
}

pub(crate) struct SeededHasher {
    state: u64,
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Hasher for SeededHasher {
    fn finish(&self) -> u64 {
        self.state
    }

    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            self.state = mix(self.state ^ u64::from_le_bytes(buf));
        }
    }

    fn write_u64(&mut self, x: u64) {
        self.state = mix(self.state ^ x);
    }

    fn write_usize(&mut self, x: usize) {
        self.write_u64(x as u64);
    }
}

impl BuildHasher for SeededState {
    type Hasher = SeededHasher;

    fn build_hasher(&self) -> SeededHasher {
        SeededHasher { state: self.seed }
    }
}

#[derive(Debug, Clone)]
struct Node<V> {
    key: ClusterId,
    prio: f64,
    val: Option<V>,
    child: u32,
    sibling: u32,
    // Parent when this node is a first child, left sibling otherwise.
    prev: u32,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    prio: f64,
    handle: u32,
}

/// A key present in both tables during a union, with its handle in each heap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overlap {
    pub key: ClusterId,
    pub handle_self: u32,
    pub handle_other: u32,
}

/// Meldable neighbor heap: pairing heap plus handle table.
#[derive(Debug, Clone)]
pub struct MeldHeap<V> {
    nodes: Vec<Node<V>>,
    free: Vec<u32>,
    root: u32,
    table: HashMap<ClusterId, Slot, SeededState>,
    seed: u64,
}

impl<V: HeapValue> MeldHeap<V> {
    pub fn new(seed: u64) -> Self {
        MeldHeap {
            nodes: Vec::new(),
            free: Vec::new(),
            root: NIL,
            table: HashMap::with_hasher(SeededState { seed }),
            seed,
        }
    }

    #[inline]
    fn beats(&self, a: u32, b: u32) -> bool {
        let (na, nb) = (&self.nodes[a as usize], &self.nodes[b as usize]);
        better(na.prio, na.key, nb.prio, nb.key)
    }

    fn alloc(&mut self, key: ClusterId, val: V) -> u32 {
        let node = Node {
            key,
            prio: val.priority(),
            val: Some(val),
            child: NIL,
            sibling: NIL,
            prev: NIL,
        };
        match self.free.pop() {
            Some(h) => {
                self.nodes[h as usize] = node;
                h
            }
            None => {
                self.nodes.push(node);
                u32::try_from(self.nodes.len() - 1).expect("meld heap arena overflow")
            }
        }
    }

    /// Links two roots; returns the new root.
    fn link(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        let (top, sub) = if self.beats(a, b) { (a, b) } else { (b, a) };
        let first = self.nodes[top as usize].child;
        self.nodes[sub as usize].sibling = first;
        self.nodes[sub as usize].prev = top;
        if first != NIL {
            self.nodes[first as usize].prev = sub;
        }
        self.nodes[top as usize].child = sub;
        self.nodes[top as usize].sibling = NIL;
        self.nodes[top as usize].prev = NIL;
        top
    }

    /// Two-pass pairing of a sibling list starting at `first`.
    fn merge_pairs(&mut self, first: u32) -> u32 {
        let mut pairs = Vec::new();
        let mut cur = first;
        while cur != NIL {
            let a = cur;
            let b = self.nodes[a as usize].sibling;
            let next = if b == NIL {
                NIL
            } else {
                self.nodes[b as usize].sibling
            };
            self.detach_fields(a);
            if b != NIL {
                self.detach_fields(b);
            }
            pairs.push(self.link(a, b));
            cur = next;
        }
        let mut acc = NIL;
        while let Some(t) = pairs.pop() {
            acc = self.link(t, acc);
        }
        acc
    }

    #[inline]
    fn detach_fields(&mut self, h: u32) {
        let n = &mut self.nodes[h as usize];
        n.sibling = NIL;
        n.prev = NIL;
    }

    fn push_node(&mut self, key: ClusterId, val: V) -> u32 {
        let h = self.alloc(key, val);
        self.root = self.link(self.root, h);
        h
    }

    /// Unlinks a node from the heap and frees it.
    fn delete_handle(&mut self, h: u32) -> V {
        if h == self.root {
            let child = self.nodes[h as usize].child;
            self.root = self.merge_pairs(child);
        } else {
            let prev = self.nodes[h as usize].prev;
            let sib = self.nodes[h as usize].sibling;
            if self.nodes[prev as usize].child == h {
                self.nodes[prev as usize].child = sib;
            } else {
                self.nodes[prev as usize].sibling = sib;
            }
            if sib != NIL {
                self.nodes[sib as usize].prev = prev;
            }
            let child = self.nodes[h as usize].child;
            let sub = self.merge_pairs(child);
            self.root = self.link(self.root, sub);
        }
        let node = &mut self.nodes[h as usize];
        node.child = NIL;
        node.sibling = NIL;
        node.prev = NIL;
        self.free.push(h);
        node.val.take().expect("live node")
    }

    fn live(&self) -> usize {
        self.table.len()
    }

    /// Rebuilds the arena densely from the table.
    fn compact(&mut self) {
        let mut entries: Vec<(ClusterId, V)> = Vec::with_capacity(self.live());
        for slot in self.table.values() {
            let node = &mut self.nodes[slot.handle as usize];
            entries.push((node.key, node.val.take().expect("live node")));
        }
        self.nodes.clear();
        self.free.clear();
        self.root = NIL;
        self.table.clear();
        for (key, val) in entries {
            let prio = val.priority();
            let h = self.push_node(key, val);
            self.table.insert(key, Slot { prio, handle: h });
        }
    }

    fn maybe_compact(&mut self) {
        if self.free.len() > self.live() + 32 {
            self.compact();
        }
    }

    /// Merges the tables of `self` and `other`: keys only in `other` are
    /// moved into `self.table` with handles shifted by `offset`, shared keys
    /// are returned as overlaps and left untouched.
    pub(crate) fn t_merge(&mut self, other: &MeldHeap<V>, offset: u32) -> Vec<Overlap> {
        let mut overlaps = Vec::new();
        for (&key, slot) in &other.table {
            match self.table.get(&key) {
                Some(mine) => overlaps.push(Overlap {
                    key,
                    handle_self: mine.handle,
                    handle_other: slot.handle,
                }),
                None => {
                    self.table.insert(
                        key,
                        Slot {
                            prio: slot.prio,
                            handle: slot.handle + offset,
                        },
                    );
                }
            }
        }
        overlaps
    }

    /// Appends `other`'s arena and links its root into this heap.
    fn meld_arena(&mut self, other: MeldHeap<V>) -> u32 {
        let offset = u32::try_from(self.nodes.len()).expect("meld heap arena overflow");
        let shift = |h: u32| if h == NIL { NIL } else { h + offset };
        for mut node in other.nodes {
            node.child = shift(node.child);
            node.sibling = shift(node.sibling);
            node.prev = shift(node.prev);
            self.nodes.push(node);
        }
        self.free.extend(other.free.into_iter().map(|h| h + offset));
        self.root = self.link(self.root, shift(other.root));
        offset
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[cfg(test)]
    pub(crate) fn check_invariants(&self) {
        let mut seen = 0usize;
        let mut stack = vec![self.root];
        while let Some(h) = stack.pop() {
            if h == NIL {
                continue;
            }
            let n = &self.nodes[h as usize];
            seen += 1;
            let slot = self.table[&n.key];
            assert_eq!(slot.handle, h);
            assert_eq!(slot.prio.to_bits(), n.prio.to_bits());
            let mut c = n.child;
            while c != NIL {
                assert!(!self.beats(c, h), "heap order violated");
                stack.push(c);
                c = self.nodes[c as usize].sibling;
            }
        }
        assert_eq!(seen, self.table.len());
    }
}

impl<V: HeapValue> NeighborHeap<V> for MeldHeap<V> {
    fn with_seed(seed: u64) -> Self {
        MeldHeap::new(seed)
    }

    fn len(&self) -> usize {
        self.table.len()
    }

    fn get(&self, key: ClusterId) -> Option<&V> {
        self.table
            .get(&key)
            .map(|slot| self.nodes[slot.handle as usize].val.as_ref().expect("live node"))
    }

    fn contains(&self, key: ClusterId) -> bool {
        self.table.contains_key(&key)
    }

    fn insert(&mut self, key: ClusterId, value: V) -> Result<(), HeapError> {
        if self.table.contains_key(&key) {
            return Err(HeapError::KeyPresent(key));
        }
        let prio = value.priority();
        let h = self.push_node(key, value);
        self.table.insert(key, Slot { prio, handle: h });
        Ok(())
    }

    fn update(&mut self, key: ClusterId, value: V) -> Result<V, HeapError> {
        let slot = *self.table.get(&key).ok_or(HeapError::KeyAbsent(key))?;
        let old = self.delete_handle(slot.handle);
        let prio = value.priority();
        let h = self.push_node(key, value);
        self.table.insert(key, Slot { prio, handle: h });
        Ok(old)
    }

    fn remove(&mut self, key: ClusterId) -> Result<V, HeapError> {
        let slot = self.table.remove(&key).ok_or(HeapError::KeyAbsent(key))?;
        let val = self.delete_handle(slot.handle);
        self.maybe_compact();
        Ok(val)
    }

    fn best_edge(&self) -> Result<(ClusterId, f64), HeapError> {
        if self.root == NIL {
            return Err(HeapError::Empty);
        }
        let n = &self.nodes[self.root as usize];
        Ok((n.key, n.prio))
    }

    fn union_with<F>(&mut self, mut other: Self, mut combine: F)
    where
        F: FnMut(ClusterId, &V, &V) -> V,
    {
        // Fold the smaller table into the larger one.
        let swapped = self.live() < other.live();
        if swapped {
            std::mem::swap(self, &mut other);
        }
        if other.free.len() > other.live() {
            other.compact();
        }
        let offset = u32::try_from(self.nodes.len()).expect("meld heap arena overflow");
        let overlaps = self.t_merge(&other, offset);
        self.meld_arena(other);
        for ov in overlaps {
            let vs = self.delete_handle(ov.handle_self);
            let vo = self.delete_handle(ov.handle_other + offset);
            let value = if swapped {
                combine(ov.key, &vo, &vs)
            } else {
                combine(ov.key, &vs, &vo)
            };
            let prio = value.priority();
            let h = self.push_node(ov.key, value);
            self.table.insert(ov.key, Slot { prio, handle: h });
        }
        self.maybe_compact();
    }

    fn update_all<F>(&mut self, mut f: F)
    where
        F: FnMut(ClusterId, &mut V),
    {
        let handles: Vec<u32> = self.table.values().map(|s| s.handle).collect();
        for &h in &handles {
            let node = &mut self.nodes[h as usize];
            let val = node.val.as_mut().expect("live node");
            f(node.key, val);
            node.prio = val.priority();
            node.child = NIL;
            node.sibling = NIL;
            node.prev = NIL;
            let (key, prio) = (node.key, node.prio);
            self.table.get_mut(&key).expect("live key").prio = prio;
        }
        // Re-heapify: repeated pairwise linking of singleton roots.
        let mut roots = handles;
        while roots.len() > 1 {
            let mut next = Vec::with_capacity(roots.len() / 2 + 1);
            for pair in roots.chunks(2) {
                next.push(if pair.len() == 2 {
                    self.link(pair[0], pair[1])
                } else {
                    pair[0]
                });
            }
            roots = next;
        }
        self.root = roots.first().copied().unwrap_or(NIL);
    }

    fn entries(&self) -> Vec<(ClusterId, V)> {
        let mut out: Vec<(ClusterId, V)> = self
            .table
            .iter()
            .map(|(&k, s)| (k, self.nodes[s.handle as usize].val.clone().expect("live node")))
            .collect();
        out.sort_unstable_by_key(|&(k, _)| k);
        out
    }
}
