//! Join-based AVL tree augmented with subtree maximum priorities.

use std::cmp::Ordering;

use super::{ClusterId, HeapError, HeapValue, NeighborHeap};

type Link<V> = Option<Box<Node<V>>>;

#[derive(Debug, Clone)]
struct Node<V> {
    key: ClusterId,
    val: V,
    prio: f64,
    max: f64,
    height: u32,
    left: Link<V>,
    right: Link<V>,
}

#[inline]
fn fmax(a: f64, b: f64) -> f64 {
    if a.total_cmp(&b) == Ordering::Less {
        b
    } else {
        a
    }
}

#[inline]
fn same(a: f64, b: f64) -> bool {
    a.total_cmp(&b) == Ordering::Equal
}

#[inline]
fn height<V>(t: &Link<V>) -> u32 {
    t.as_ref().map_or(0, |n| n.height)
}

impl<V: HeapValue> Node<V> {
    fn leaf(key: ClusterId, val: V) -> Box<Self> {
        let prio = val.priority();
        Box::new(Node {
            key,
            val,
            prio,
            max: prio,
            height: 1,
            left: None,
            right: None,
        })
    }

    #[inline]
    fn fix(&mut self) {
        self.height = 1 + height(&self.left).max(height(&self.right));
        let mut m = self.prio;
        if let Some(l) = &self.left {
            m = fmax(m, l.max);
        }
        if let Some(r) = &self.right {
            m = fmax(m, r.max);
        }
        self.max = m;
    }
}

fn node<V: HeapValue>(left: Link<V>, mut mid: Box<Node<V>>, right: Link<V>) -> Box<Node<V>> {
    mid.left = left;
    mid.right = right;
    mid.fix();
    mid
}

fn rotate_left<V: HeapValue>(mut t: Box<Node<V>>) -> Box<Node<V>> {
    let mut r = t.right.take().expect("rotate_left needs a right child");
    t.right = r.left.take();
    t.fix();
    r.left = Some(t);
    r.fix();
    r
}

fn rotate_right<V: HeapValue>(mut t: Box<Node<V>>) -> Box<Node<V>> {
    let mut l = t.left.take().expect("rotate_right needs a left child");
    t.left = l.right.take();
    t.fix();
    l.right = Some(t);
    l.fix();
    l
}

fn join_right<V: HeapValue>(
    mut tl: Box<Node<V>>,
    mid: Box<Node<V>>,
    tr: Link<V>,
) -> Box<Node<V>> {
    let l = tl.left.take();
    let c = tl.right.take();
    if height(&c) <= height(&tr) + 1 {
        let t = node(c, mid, tr);
        if t.height <= height(&l) + 1 {
            node(l, tl, Some(t))
        } else {
            rotate_left(node(l, tl, Some(rotate_right(t))))
        }
    } else {
        let t = join_right(c.expect("taller subtree"), mid, tr);
        let th = t.height;
        let lh = height(&l);
        let joined = node(l, tl, Some(t));
        if th <= lh + 1 {
            joined
        } else {
            rotate_left(joined)
        }
    }
}

fn join_left<V: HeapValue>(
    tl: Link<V>,
    mid: Box<Node<V>>,
    mut tr: Box<Node<V>>,
) -> Box<Node<V>> {
    let c = tr.left.take();
    let r = tr.right.take();
    if height(&c) <= height(&tl) + 1 {
        let t = node(tl, mid, c);
        if t.height <= height(&r) + 1 {
            node(Some(t), tr, r)
        } else {
            rotate_right(node(Some(rotate_left(t)), tr, r))
        }
    } else {
        let t = join_left(tl, mid, c.expect("taller subtree"));
        let th = t.height;
        let rh = height(&r);
        let joined = node(Some(t), tr, r);
        if th <= rh + 1 {
            joined
        } else {
            rotate_right(joined)
        }
    }
}

/// Joins `left`, `mid`, `right` where every key of `left` is below `mid.key`
/// and every key of `right` is above it.
fn join<V: HeapValue>(left: Link<V>, mid: Box<Node<V>>, right: Link<V>) -> Box<Node<V>> {
    let (hl, hr) = (height(&left), height(&right));
    if hl > hr + 1 {
        join_right(left.expect("taller subtree"), mid, right)
    } else if hr > hl + 1 {
        join_left(left, mid, right.expect("taller subtree"))
    } else {
        node(left, mid, right)
    }
}

/// Splits around `key`: keys below, the node holding `key` (detached), keys
/// above.
fn split<V: HeapValue>(
    t: Link<V>,
    key: ClusterId,
    steps: &mut u64,
) -> (Link<V>, Link<V>, Link<V>) {
    let Some(mut n) = t else {
        return (None, None, None);
    };
    *steps += 1;
    let l = n.left.take();
    let r = n.right.take();
    match key.cmp(&n.key) {
        Ordering::Equal => (l, Some(n), r),
        Ordering::Less => {
            let (ll, found, lr) = split(l, key, steps);
            (ll, found, Some(join(lr, n, r)))
        }
        Ordering::Greater => {
            let (rl, found, rr) = split(r, key, steps);
            (Some(join(l, n, rl)), found, rr)
        }
    }
}

fn split_last<V: HeapValue>(mut t: Box<Node<V>>) -> (Link<V>, Box<Node<V>>) {
    match t.right.take() {
        None => (t.left.take(), t),
        Some(r) => {
            let (rest, last) = split_last(r);
            let l = t.left.take();
            (Some(join(l, t, rest)), last)
        }
    }
}

fn join2<V: HeapValue>(left: Link<V>, right: Link<V>) -> Link<V> {
    match left {
        None => right,
        Some(l) => {
            let (rest, last) = split_last(l);
            Some(join(rest, last, right))
        }
    }
}

fn union<V, F>(t1: Link<V>, t2: Link<V>, combine: &mut F, steps: &mut u64, shared: &mut usize) -> Link<V>
where
    V: HeapValue,
    F: FnMut(ClusterId, &V, &V) -> V,
{
    *steps += 1;
    match (t1, t2) {
        (None, t) | (t, None) => t,
        (Some(mut a), t2) => {
            let l1 = a.left.take();
            let r1 = a.right.take();
            let (l2, found, r2) = split(t2, a.key, steps);
            if let Some(b) = found {
                a.val = combine(a.key, &a.val, &b.val);
                a.prio = a.val.priority();
                *shared += 1;
            }
            let l = union(l1, l2, combine, steps, shared);
            let r = union(r1, r2, combine, steps, shared);
            Some(join(l, a, r))
        }
    }
}

fn find<V>(mut t: &Link<V>, key: ClusterId) -> Option<&Node<V>> {
    while let Some(n) = t {
        match key.cmp(&n.key) {
            Ordering::Equal => return Some(n),
            Ordering::Less => t = &n.left,
            Ordering::Greater => t = &n.right,
        }
    }
    None
}

fn replace_value<V: HeapValue>(n: &mut Node<V>, key: ClusterId, val: V) -> V {
    let old = match key.cmp(&n.key) {
        Ordering::Equal => {
            n.prio = val.priority();
            std::mem::replace(&mut n.val, val)
        }
        Ordering::Less => replace_value(n.left.as_mut().expect("key present"), key, val),
        Ordering::Greater => replace_value(n.right.as_mut().expect("key present"), key, val),
    };
    n.fix();
    old
}

fn map_all<V: HeapValue, F: FnMut(ClusterId, &mut V)>(t: &mut Link<V>, f: &mut F) {
    if let Some(n) = t {
        map_all(&mut n.left, f);
        f(n.key, &mut n.val);
        n.prio = n.val.priority();
        map_all(&mut n.right, f);
        n.fix();
    }
}

fn collect<V: Clone>(t: &Link<V>, out: &mut Vec<(ClusterId, V)>) {
    if let Some(n) = t {
        collect(&n.left, out);
        out.push((n.key, n.val.clone()));
        collect(&n.right, out);
    }
}

/// Augmented AVL neighbor heap.
#[derive(Debug, Clone)]
pub struct TreeHeap<V> {
    root: Link<V>,
    len: usize,
    union_steps: u64,
}

impl<V> Default for TreeHeap<V> {
    fn default() -> Self {
        TreeHeap {
            root: None,
            len: 0,
            union_steps: 0,
        }
    }
}

impl<V: HeapValue> TreeHeap<V> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Node visits (recursive union calls plus split steps) spent by the most
    /// recent [`NeighborHeap::union_with`] on this heap.
    pub fn last_union_steps(&self) -> u64 {
        self.union_steps
    }

    pub fn height(&self) -> u32 {
        height(&self.root)
    }

    #[cfg(test)]
    pub(crate) fn check_invariants(&self) {
        fn walk<V: HeapValue>(t: &Link<V>, lo: Option<ClusterId>, hi: Option<ClusterId>) -> (u32, usize) {
            let Some(n) = t else { return (0, 0) };
            assert!(lo.is_none_or(|lo| n.key > lo));
            assert!(hi.is_none_or(|hi| n.key < hi));
            let (hl, cl) = walk(&n.left, lo, Some(n.key));
            let (hr, cr) = walk(&n.right, Some(n.key), hi);
            assert!(hl.abs_diff(hr) <= 1, "AVL balance violated");
            assert_eq!(n.height, 1 + hl.max(hr));
            let mut m = n.prio;
            if let Some(l) = &n.left {
                m = fmax(m, l.max);
            }
            if let Some(r) = &n.right {
                m = fmax(m, r.max);
            }
            assert!(same(m, n.max));
            (n.height, 1 + cl + cr)
        }
        let (_, count) = walk(&self.root, None, None);
        assert_eq!(count, self.len);
    }
}

impl<V: HeapValue> NeighborHeap<V> for TreeHeap<V> {
    fn with_seed(_seed: u64) -> Self {
        Self::default()
    }

    fn len(&self) -> usize {
        self.len
    }

    fn get(&self, key: ClusterId) -> Option<&V> {
        find(&self.root, key).map(|n| &n.val)
    }

    fn insert(&mut self, key: ClusterId, value: V) -> Result<(), HeapError> {
        if self.contains(key) {
            return Err(HeapError::KeyPresent(key));
        }
        let mut steps = 0;
        let (l, _, r) = split(self.root.take(), key, &mut steps);
        self.root = Some(join(l, Node::leaf(key, value), r));
        self.len += 1;
        Ok(())
    }

    fn update(&mut self, key: ClusterId, value: V) -> Result<V, HeapError> {
        if find(&self.root, key).is_none() {
            return Err(HeapError::KeyAbsent(key));
        }
        let root = self.root.as_mut().expect("key checked present");
        Ok(replace_value(root, key, value))
    }

    fn remove(&mut self, key: ClusterId) -> Result<V, HeapError> {
        if !self.contains(key) {
            return Err(HeapError::KeyAbsent(key));
        }
        let mut steps = 0;
        let (l, found, r) = split(self.root.take(), key, &mut steps);
        self.root = join2(l, r);
        self.len -= 1;
        Ok(found.expect("key checked present").val)
    }

    fn best_edge(&self) -> Result<(ClusterId, f64), HeapError> {
        let mut n = self.root.as_deref().ok_or(HeapError::Empty)?;
        let target = n.max;
        loop {
            if let Some(l) = n.left.as_deref() {
                if same(l.max, target) {
                    n = l;
                    continue;
                }
            }
            if same(n.prio, target) {
                return Ok((n.key, n.prio));
            }
            n = n.right.as_deref().expect("maximum lies in the right subtree");
        }
    }

    fn union_with<F>(&mut self, other: Self, mut combine: F)
    where
        F: FnMut(ClusterId, &V, &V) -> V,
    {
        let mut steps = 0;
        let mut shared = 0;
        let total = self.len + other.len;
        self.root = union(self.root.take(), other.root, &mut combine, &mut steps, &mut shared);
        self.len = total - shared;
        self.union_steps = steps;
    }

    fn update_all<F>(&mut self, mut f: F)
    where
        F: FnMut(ClusterId, &mut V),
    {
        map_all(&mut self.root, &mut f);
    }

    fn entries(&self) -> Vec<(ClusterId, V)> {
        let mut out = Vec::with_capacity(self.len);
        collect(&self.root, &mut out);
        out
    }
}
