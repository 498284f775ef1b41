use std::collections::BTreeMap;

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn max(_: ClusterId, a: &f64, b: &f64) -> f64 {
    a.max(*b)
}

fn min(_: ClusterId, a: &f64, b: &f64) -> f64 {
    a.min(*b)
}

fn mean(_: ClusterId, a: &f64, b: &f64) -> f64 {
    (a + b) / 2.0
}

fn sum(_: ClusterId, a: &f64, b: &f64) -> f64 {
    a + b
}

fn build<H: NeighborHeap<f64>>(entries: &[(ClusterId, f64)]) -> H {
    let mut h = H::with_seed(7);
    for &(k, p) in entries {
        h.insert(k, p).unwrap();
    }
    h
}

fn scan_best(entries: &[(ClusterId, f64)]) -> Option<(ClusterId, f64)> {
    let mut best: Option<(ClusterId, f64)> = None;
    for &(k, p) in entries {
        best = match best {
            Some((bk, bp)) if !better(p, k, bp, bk) => Some((bk, bp)),
            _ => Some((k, p)),
        };
    }
    best
}

fn point_edits<H: NeighborHeap<f64>>() {
    let mut h = H::with_seed(1);
    h.insert(7, 0.5).unwrap();
    assert_eq!(h.entries(), vec![(7, 0.5)]);
    assert_eq!(h.insert(7, 0.1), Err(HeapError::KeyPresent(7)));
    assert_eq!(h.update(7, 0.9), Ok(0.5));
    assert_eq!(h.entries(), vec![(7, 0.9)]);
    assert_eq!(h.remove(3), Err(HeapError::KeyAbsent(3)));
    assert_eq!(h.update(3, 1.0), Err(HeapError::KeyAbsent(3)));
    assert_eq!(h.remove(7), Ok(0.9));
    assert!(h.is_empty());
}

fn best_edges<H: NeighborHeap<f64>>() {
    let h: H = build(&[(2, 0.5), (7, 0.9), (4, 0.9)]);
    assert_eq!(h.best_edge(), Ok((4, 0.9)));
    let h: H = build(&[(5, 1.0)]);
    assert_eq!(h.best_edge(), Ok((5, 1.0)));
    let h: H = build(&[]);
    assert_eq!(h.best_edge(), Err(HeapError::Empty));
}

fn unions<H: NeighborHeap<f64>>() {
    let mut a: H = build(&[(1, 0.3), (2, 0.5)]);
    a.union_with(build(&[(2, 0.7), (3, 0.1)]), max);
    assert_eq!(a.entries(), vec![(1, 0.3), (2, 0.7), (3, 0.1)]);

    let mut a: H = build(&[(2, 0.4)]);
    a.union_with(build(&[(2, 0.8)]), mean);
    assert_eq!(a.entries(), vec![(2, 0.6000000000000001)]);
    assert!((a.get(2).unwrap() - 0.6).abs() < 1e-15);

    let x = [(1, 0.25), (9, 0.5), (4, 0.75)];
    let mut a: H = build(&x);
    a.union_with(build(&[]), min);
    let mut expect = x.to_vec();
    expect.sort_by_key(|e| e.0);
    assert_eq!(a.entries(), expect);

    let mut e: H = build(&[]);
    e.union_with(build(&x), min);
    assert_eq!(e.entries(), expect);
}

fn relabels<H: NeighborHeap<f64>>() {
    let mut h: H = build(&[(1, 0.3), (2, 0.5)]);
    h.relabel(1, 9, max).unwrap();
    assert_eq!(h.entries(), vec![(2, 0.5), (9, 0.3)]);

    let mut h: H = build(&[(1, 0.3), (2, 0.5)]);
    h.relabel(1, 2, max).unwrap();
    assert_eq!(h.entries(), vec![(2, 0.5)]);

    let mut h: H = build(&[(1, 0.3), (2, 0.5)]);
    h.relabel(1, 2, sum).unwrap();
    assert_eq!(h.entries(), vec![(2, 0.8)]);

    let mut h: H = build(&[(1, 0.3)]);
    assert_eq!(h.relabel(4, 2, sum), Err(HeapError::KeyAbsent(4)));
}

#[test]
fn tree_point_edits() {
    point_edits::<TreeHeap<f64>>();
}

#[test]
fn meld_point_edits() {
    point_edits::<MeldHeap<f64>>();
}

#[test]
fn tree_best_edge() {
    best_edges::<TreeHeap<f64>>();
}

#[test]
fn meld_best_edge() {
    best_edges::<MeldHeap<f64>>();
}

#[test]
fn tree_union() {
    unions::<TreeHeap<f64>>();
}

#[test]
fn meld_union() {
    unions::<MeldHeap<f64>>();
}

#[test]
fn tree_relabel() {
    relabels::<TreeHeap<f64>>();
}

#[test]
fn meld_relabel() {
    relabels::<MeldHeap<f64>>();
}

#[test]
fn update_all_rewrites_priorities() {
    let entries = [(3, 0.1), (5, 0.9), (8, 0.4)];
    let mut t: TreeHeap<f64> = build(&entries);
    let mut m: MeldHeap<f64> = build(&entries);
    let f = |k: ClusterId, v: &mut f64| *v = k as f64 - *v;
    t.update_all(f);
    m.update_all(f);
    assert_eq!(t.entries(), m.entries());
    assert_eq!(t.best_edge(), Ok((8, 7.6)));
    assert_eq!(m.best_edge(), Ok((8, 7.6)));
    t.check_invariants();
    m.check_invariants();
}

/// Brute-force reference: an ordered map.
#[derive(Default, Clone)]
struct MapOracle(BTreeMap<ClusterId, f64>);

impl MapOracle {
    fn entries(&self) -> Vec<(ClusterId, f64)> {
        self.0.iter().map(|(&k, &v)| (k, v)).collect()
    }
}

#[derive(Debug, Clone, Copy)]
enum Combine {
    Max,
    Min,
    Mean,
    Sum,
}

impl Combine {
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Combine::Max => a.max(b),
            Combine::Min => a.min(b),
            Combine::Mean => (a + b) / 2.0,
            Combine::Sum => a + b,
        }
    }
}

#[derive(Debug, Clone)]
enum Op {
    Insert(usize, ClusterId, f64),
    Update(usize, ClusterId, f64),
    Remove(usize, ClusterId),
    Relabel(usize, ClusterId, ClusterId, Combine),
    Union(usize, usize, Combine),
    Best(usize),
}

const SLOTS: usize = 6;
const KEYS: usize = 40;

fn combine_strategy() -> impl Strategy<Value = Combine> {
    prop_oneof![
        Just(Combine::Max),
        Just(Combine::Min),
        Just(Combine::Mean),
        Just(Combine::Sum)
    ]
}

fn op_strategy() -> impl Strategy<Value = Op> {
    // Priorities from a small grid so ties are common.
    let prio = (0u32..16).prop_map(|x| x as f64 / 8.0);
    prop_oneof![
        4 => (0..SLOTS, 0..KEYS, prio.clone()).prop_map(|(s, k, p)| Op::Insert(s, k, p)),
        2 => (0..SLOTS, 0..KEYS, prio).prop_map(|(s, k, p)| Op::Update(s, k, p)),
        2 => (0..SLOTS, 0..KEYS).prop_map(|(s, k)| Op::Remove(s, k)),
        2 => (0..SLOTS, 0..KEYS, 0..KEYS, combine_strategy())
            .prop_map(|(s, a, b, c)| Op::Relabel(s, a, b, c)),
        1 => (0..SLOTS, 0..SLOTS, combine_strategy()).prop_map(|(a, b, c)| Op::Union(a, b, c)),
        2 => (0..SLOTS).prop_map(Op::Best),
    ]
}

/// Runs one op on all three structures and checks they agree.
fn step(
    op: &Op,
    tree: &mut [TreeHeap<f64>],
    meld: &mut [MeldHeap<f64>],
    oracle: &mut [MapOracle],
    seed: u64,
) {
    match *op {
        Op::Insert(s, k, p) => {
            let expect = if oracle[s].0.contains_key(&k) {
                Err(HeapError::KeyPresent(k))
            } else {
                oracle[s].0.insert(k, p);
                Ok(())
            };
            assert_eq!(tree[s].insert(k, p), expect);
            assert_eq!(meld[s].insert(k, p), expect);
        }
        Op::Update(s, k, p) => {
            let expect = match oracle[s].0.get_mut(&k) {
                Some(v) => Ok(std::mem::replace(v, p)),
                None => Err(HeapError::KeyAbsent(k)),
            };
            assert_eq!(tree[s].update(k, p), expect);
            assert_eq!(meld[s].update(k, p), expect);
        }
        Op::Remove(s, k) => {
            let expect = oracle[s].0.remove(&k).ok_or(HeapError::KeyAbsent(k));
            assert_eq!(tree[s].remove(k), expect);
            assert_eq!(meld[s].remove(k), expect);
        }
        Op::Relabel(s, a, b, c) => {
            let expect = match oracle[s].0.remove(&a) {
                Some(v) => {
                    let merged = match oracle[s].0.get(&b) {
                        Some(&old) => c.apply(old, v),
                        None => v,
                    };
                    oracle[s].0.insert(b, merged);
                    Ok(())
                }
                None => Err(HeapError::KeyAbsent(a)),
            };
            let f = |_: ClusterId, x: &f64, y: &f64| c.apply(*x, *y);
            assert_eq!(tree[s].relabel(a, b, f), expect);
            assert_eq!(meld[s].relabel(a, b, f), expect);
        }
        Op::Union(a, b, c) => {
            if a == b {
                return;
            }
            let other = std::mem::take(&mut oracle[b]);
            for (k, v) in other.0 {
                let merged = match oracle[a].0.get(&k) {
                    Some(&old) => c.apply(old, v),
                    None => v,
                };
                oracle[a].0.insert(k, merged);
            }
            let f = |_: ClusterId, x: &f64, y: &f64| c.apply(*x, *y);
            let tb = std::mem::take(&mut tree[b]);
            tree[a].union_with(tb, f);
            let mb = std::mem::replace(&mut meld[b], MeldHeap::new(seed));
            meld[a].union_with(mb, f);
        }
        Op::Best(s) => {
            let expect = scan_best(&oracle[s].entries()).ok_or(HeapError::Empty);
            assert_eq!(tree[s].best_edge(), expect);
            assert_eq!(meld[s].best_edge(), expect);
        }
    }
}

fn check_all(tree: &[TreeHeap<f64>], meld: &[MeldHeap<f64>], oracle: &[MapOracle]) {
    for s in 0..SLOTS {
        let e = oracle[s].entries();
        assert_eq!(tree[s].entries(), e);
        assert_eq!(meld[s].entries(), e);
        assert_eq!(tree[s].len(), e.len());
        assert_eq!(meld[s].len(), e.len());
        let best = scan_best(&e).ok_or(HeapError::Empty);
        assert_eq!(tree[s].best_edge(), best);
        assert_eq!(meld[s].best_edge(), best);
        tree[s].check_invariants();
        meld[s].check_invariants();
    }
}

fn fresh(seed: u64) -> (Vec<TreeHeap<f64>>, Vec<MeldHeap<f64>>, Vec<MapOracle>) {
    (
        (0..SLOTS).map(|_| TreeHeap::new()).collect(),
        (0..SLOTS).map(|_| MeldHeap::new(seed)).collect(),
        vec![MapOracle::default(); SLOTS],
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn representations_match_oracle(
        ops in proptest::collection::vec(op_strategy(), 1..400),
        seed in any::<u64>(),
    ) {
        let (mut tree, mut meld, mut oracle) = fresh(seed);
        for op in &ops {
            step(op, &mut tree, &mut meld, &mut oracle, seed);
        }
        check_all(&tree, &meld, &oracle);
    }
}

#[test]
fn representations_match_over_long_random_run() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let runner = op_strategy();
    let mut tr = proptest::test_runner::TestRunner::deterministic();
    let mut total = 0usize;
    for round in 0..10 {
        let seed: u64 = rng.gen();
        let (mut tree, mut meld, mut oracle) = fresh(seed);
        for i in 0..2_000 {
            let op = runner.new_tree(&mut tr).unwrap().current();
            step(&op, &mut tree, &mut meld, &mut oracle, seed);
            total += 1;
            if i % 250 == 0 {
                check_all(&tree, &meld, &oracle);
            }
        }
        check_all(&tree, &meld, &oracle);
        let _ = round;
    }
    assert!(total >= 10_000);
}

#[test]
fn meld_union_with_large_keys_and_many_overlaps() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let mut a = MeldHeap::new(rng.gen());
        let mut b = MeldHeap::new(rng.gen());
        let mut oracle = BTreeMap::new();
        let mut ob = BTreeMap::new();
        for _ in 0..rng.gen_range(0..200) {
            let k = rng.gen_range(0..300usize);
            let p: f64 = rng.gen();
            if a.insert(k, p).is_ok() {
                oracle.insert(k, p);
            }
        }
        for _ in 0..rng.gen_range(0..200) {
            let k = rng.gen_range(0..300usize);
            let p: f64 = rng.gen();
            if b.insert(k, p).is_ok() {
                ob.insert(k, p);
            }
        }
        // Fragment the arena before melding.
        for k in 0..100usize {
            if b.remove(k).is_ok() {
                ob.remove(&k);
            }
        }
        for (k, v) in ob {
            let e = oracle.entry(k).or_insert(v);
            if *e != v {
                *e += v;
            }
        }
        a.union_with(b, |_, x, y| if x == y { *x } else { x + y });
        a.check_invariants();
        let expect: Vec<_> = oracle.into_iter().collect();
        assert_eq!(a.entries(), expect);
        assert_eq!(a.best_edge().ok(), scan_best(&expect));
    }
}

/// Constant in the tree-union cost bound `c * s * (log2(l/s + 1) + 1)`.
const UNION_COST_C: f64 = 8.0;

#[test]
fn tree_union_cost_is_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for &(s, l) in &[
        (1usize, 1usize),
        (1, 1000),
        (10, 10_000),
        (100, 100_000),
        (1000, 1000),
        (64, 4096),
        (500, 20_000),
        (3000, 3000),
    ] {
        for trial in 0..3 {
            let keys_l: Vec<ClusterId> = (0..l).map(|_| rng.gen_range(0..4 * (l + s))).collect();
            let keys_s: Vec<ClusterId> = (0..s).map(|_| rng.gen_range(0..4 * (l + s))).collect();
            let mut big = TreeHeap::new();
            for k in keys_l {
                let _ = big.insert(k, rng.gen::<f64>());
            }
            let mut small = TreeHeap::new();
            for k in keys_s {
                let _ = small.insert(k, rng.gen::<f64>());
            }
            let (s_eff, l_eff) = (small.len().min(big.len()), small.len().max(big.len()));
            // Put the smaller tree on the outer recursion.
            let (mut outer, inner) = if trial % 2 == 0 { (small, big) } else { (big, small) };
            outer.union_with(inner, max);
            outer.check_invariants();
            let steps = outer.last_union_steps() as f64;
            let s_f = s_eff.max(1) as f64;
            let bound = s_f * ((l_eff as f64 / s_f + 1.0).log2() + 1.0);
            worst = worst.max(steps / bound);
            assert!(
                steps <= UNION_COST_C * bound,
                "s={s_eff} l={l_eff}: {steps} steps > {UNION_COST_C} * {bound:.1}"
            );
        }
    }
    assert!(worst > 0.0);
}

#[test]
fn tree_stays_balanced() {
    let mut h = TreeHeap::new();
    for k in 0..4096usize {
        h.insert(k, (k % 17) as f64).unwrap();
    }
    assert!(h.height() <= 18, "height {}", h.height());
    h.check_invariants();
    for k in (0..4096usize).step_by(3) {
        h.remove(k).unwrap();
    }
    h.check_invariants();
    assert_eq!(h.best_edge(), Ok((16, 16.0)));
}
