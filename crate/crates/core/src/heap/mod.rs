//! Per-cluster neighbor heaps.
//!
//! A neighbor heap maps neighbor cluster ids to values carrying a priority.
//! It answers best-edge queries (maximum priority, ties broken by the smaller
//! key), merges with another heap while combining values for shared keys, and
//! renames keys when a neighbor is folded into another cluster.
//!
//! Two representations are provided and must behave identically:
//!
//! * [`TreeHeap`]: a join-based AVL tree keyed by cluster id, augmented with
//!   the subtree maximum priority. Union of sizes `s <= l` costs
//!   `O(s log(l/s + 1))`.
//! * [`MeldHeap`]: a pairing heap with per-node handles plus a seeded hash
//!   table from key to `(priority, handle)`. Union costs `O(s)` amortized.

mod meld;
mod tree;

use std::cmp::Ordering;

use thiserror::Error;

pub use meld::{MeldHeap, Overlap};
pub use tree::TreeHeap;

/// Identifier of a cluster (a surviving slot id during clustering).
pub type ClusterId = usize;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum HeapError {
    #[error("key {0} already present")]
    KeyPresent(ClusterId),
    #[error("key {0} absent")]
    KeyAbsent(ClusterId),
    #[error("empty heap")]
    Empty,
}

/// A value stored in a neighbor heap.
pub trait HeapValue: Clone {
    fn priority(&self) -> f64;
}

impl HeapValue for f64 {
    #[inline]
    fn priority(&self) -> f64 {
        *self
    }
}

/// Total order used for best-edge selection: higher priority first, then the
/// smaller key.
#[inline]
pub(crate) fn better(p1: f64, k1: ClusterId, p2: f64, k2: ClusterId) -> bool {
    match p1.total_cmp(&p2) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => k1 < k2,
    }
}

/// Which representation to use for neighbor heaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeapImpl {
    #[default]
    Tree,
    Meld,
}

/// The neighbor-heap contract shared by both representations.
pub trait NeighborHeap<V: HeapValue>: Sized {
    /// Creates an empty heap. `seed` only affects representations that hash.
    fn with_seed(seed: u64) -> Self;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: ClusterId) -> Option<&V>;

    fn contains(&self, key: ClusterId) -> bool {
        self.get(key).is_some()
    }

    fn insert(&mut self, key: ClusterId, value: V) -> Result<(), HeapError>;

    /// Replaces the value of a present key and returns the previous one.
    fn update(&mut self, key: ClusterId, value: V) -> Result<V, HeapError>;

    fn remove(&mut self, key: ClusterId) -> Result<V, HeapError>;

    /// Entry with the maximum priority; ties go to the smaller key.
    fn best_edge(&self) -> Result<(ClusterId, f64), HeapError>;

    /// Absorbs `other`. Keys present in both heaps get
    /// `combine(key, self_value, other_value)`.
    fn union_with<F>(&mut self, other: Self, combine: F)
    where
        F: FnMut(ClusterId, &V, &V) -> V;

    /// Rewrites every value in place; priorities are recomputed afterwards.
    fn update_all<F>(&mut self, f: F)
    where
        F: FnMut(ClusterId, &mut V);

    /// All entries in ascending key order.
    fn entries(&self) -> Vec<(ClusterId, V)>;

    fn keys(&self) -> Vec<ClusterId> {
        self.entries().into_iter().map(|(k, _)| k).collect()
    }

    /// Inserts `key`, or combines with the existing value as
    /// `combine(key, existing, value)`.
    fn upsert<F>(&mut self, key: ClusterId, value: V, combine: F)
    where
        F: FnOnce(ClusterId, &V, &V) -> V,
    {
        match self.get(key) {
            Some(existing) => {
                let merged = combine(key, existing, &value);
                self.update(key, merged).expect("key checked present");
            }
            None => self.insert(key, value).expect("key checked absent"),
        }
    }

    /// Moves the value under `old` to `new`, combining as
    /// `combine(new, existing_at_new, moved)` when `new` is already present.
    fn relabel<F>(&mut self, old: ClusterId, new: ClusterId, combine: F) -> Result<(), HeapError>
    where
        F: FnOnce(ClusterId, &V, &V) -> V,
    {
        let moved = self.remove(old)?;
        self.upsert(new, moved, combine);
        Ok(())
    }
}

#[cfg(test)]
mod tests;
