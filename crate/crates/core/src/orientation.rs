//! Dynamic edge orientation with a fixed outdegree cap.
//!
//! A new edge leaves the endpoint with the smaller outdegree (ties: smaller
//! id). When a vertex exceeds the cap, all of its out-edges are reversed,
//! which may push neighbors over the cap in turn. Every reversal is reported
//! through a callback as `flip(old_tail, old_head)`; after the call the old
//! tail is the head.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrientationError {
    #[error("edge ({0}, {1}) already present")]
    Duplicate(usize, usize),
    #[error("edge ({0}, {1}) absent")]
    Absent(usize, usize),
    #[error("self-loop on {0}")]
    SelfLoop(usize),
    #[error("vertex {0} out of range")]
    OutOfRange(usize),
    #[error("flip cascade exceeded {0} reversals; cap {1} is too small for this graph")]
    Cascade(u64, usize),
}

/// One entry of the optional event log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrientEvent {
    /// Edge inserted as `tail -> head`.
    Insert { tail: usize, head: usize },
    Delete { u: usize, v: usize },
    /// Edge `from -> to` reversed to `to -> from`.
    Flip { from: usize, to: usize },
}

#[inline]
fn key(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

/// Default cap `max(8, ceil(2 sqrt(2 m0)))`.
pub fn default_cap(m0: usize) -> usize {
    let c = (2.0 * (2.0 * m0 as f64).sqrt()).ceil() as usize;
    c.max(8)
}

#[derive(Debug, Clone)]
pub struct Orientation {
    cap: usize,
    out: Vec<Vec<usize>>,
    tail: HashMap<(usize, usize), usize>,
    log: Option<Vec<OrientEvent>>,
    flips: u64,
    peak: usize,
}

impl Orientation {
    pub fn new(n: usize, cap: usize) -> Self {
        assert!(cap >= 1, "outdegree cap must be positive");
        Orientation {
            cap,
            out: vec![Vec::new(); n],
            tail: HashMap::new(),
            log: None,
            flips: 0,
            peak: 0,
        }
    }

    /// Starts recording every insert, delete and flip.
    pub fn enable_log(&mut self) {
        self.log.get_or_insert_with(Vec::new);
    }

    pub fn log(&self) -> Option<&[OrientEvent]> {
        self.log.as_deref()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn flips(&self) -> u64 {
        self.flips
    }

    pub fn num_vertices(&self) -> usize {
        self.out.len()
    }

    pub fn num_edges(&self) -> usize {
        self.tail.len()
    }

    pub fn outdeg(&self, u: usize) -> usize {
        self.out[u].len()
    }

    /// Largest outdegree observed at the end of any operation.
    pub fn peak_outdegree(&self) -> usize {
        self.peak
    }

    pub fn max_outdegree(&self) -> usize {
        self.out.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn out_neighbors(&self, u: usize) -> &[usize] {
        &self.out[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.tail.contains_key(&key(u, v))
    }

    /// Tail of edge `{u, v}`, if present.
    pub fn tail_of(&self, u: usize, v: usize) -> Option<usize> {
        self.tail.get(&key(u, v)).copied()
    }

    /// All edges as `(tail, head)`, sorted.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .tail
            .iter()
            .map(|(&(a, b), &t)| if t == a { (a, b) } else { (b, a) })
            .collect();
        e.sort_unstable();
        e
    }

    fn record(&mut self, ev: OrientEvent) {
        if let Some(log) = &mut self.log {
            log.push(ev);
        }
    }

    fn check(&self, u: usize, v: usize) -> Result<(), OrientationError> {
        for x in [u, v] {
            if x >= self.out.len() {
                return Err(OrientationError::OutOfRange(x));
            }
        }
        if u == v {
            return Err(OrientationError::SelfLoop(u));
        }
        Ok(())
    }

    fn unlink(&mut self, t: usize, h: usize) {
        let list = &mut self.out[t];
        let at = list.iter().position(|&x| x == h).expect("out-edge present");
        list.swap_remove(at);
    }

    /// Inserts `{u, v}`, then resolves overflow by reversing all out-edges of
    /// overflowing vertices.
    pub fn insert_edge<F: FnMut(usize, usize)>(
        &mut self,
        u: usize,
        v: usize,
        mut on_flip: F,
    ) -> Result<(), OrientationError> {
        self.check(u, v)?;
        if self.has_edge(u, v) {
            return Err(OrientationError::Duplicate(u, v));
        }
        let (du, dv) = (self.outdeg(u), self.outdeg(v));
        let (t, h) = if du < dv || (du == dv && u < v) { (u, v) } else { (v, u) };
        self.tail.insert(key(t, h), t);
        self.out[t].push(h);
        self.record(OrientEvent::Insert { tail: t, head: h });

        if self.out[t].len() <= self.cap {
            self.peak = self.peak.max(self.out[t].len());
            return Ok(());
        }
        let limit = 64 * (self.tail.len() as u64 + self.out.len() as u64) + 1024;
        let mut reversals = 0u64;
        let mut queue = VecDeque::from([t]);
        let mut touched = vec![t];
        while let Some(x) = queue.pop_front() {
            if self.out[x].len() <= self.cap {
                continue;
            }
            let outs = std::mem::take(&mut self.out[x]);
            for y in outs {
                self.tail.insert(key(x, y), y);
                self.out[y].push(x);
                self.flips += 1;
                reversals += 1;
                self.record(OrientEvent::Flip { from: x, to: y });
                on_flip(x, y);
                touched.push(y);
                if self.out[y].len() == self.cap + 1 {
                    queue.push_back(y);
                }
            }
            if reversals > limit {
                return Err(OrientationError::Cascade(reversals, self.cap));
            }
        }
        for x in touched {
            self.peak = self.peak.max(self.out[x].len());
        }
        debug_assert!(self.max_outdegree() <= self.cap);
        Ok(())
    }

    /// Removes `{u, v}` in whichever direction it is stored.
    pub fn delete_edge(&mut self, u: usize, v: usize) -> Result<(), OrientationError> {
        self.check(u, v)?;
        let t = self
            .tail
            .remove(&key(u, v))
            .ok_or(OrientationError::Absent(u, v))?;
        let h = if t == u { v } else { u };
        self.unlink(t, h);
        self.record(OrientEvent::Delete { u, v });
        Ok(())
    }
}

/// Replays an event log on a plain map from edge to tail and returns the
/// resulting `(tail, head)` list, sorted. Fails on an inconsistent log.
pub fn replay(events: &[OrientEvent]) -> Result<Vec<(usize, usize)>, String> {
    let mut tail: HashMap<(usize, usize), usize> = HashMap::new();
    for (i, ev) in events.iter().enumerate() {
        match *ev {
            OrientEvent::Insert { tail: t, head: h } => {
                if tail.insert(key(t, h), t).is_some() {
                    return Err(format!("event {i}: insert of present edge ({t}, {h})"));
                }
            }
            OrientEvent::Delete { u, v } => {
                if tail.remove(&key(u, v)).is_none() {
                    return Err(format!("event {i}: delete of absent edge ({u}, {v})"));
                }
            }
            OrientEvent::Flip { from, to } => match tail.get_mut(&key(from, to)) {
                Some(t) if *t == from => *t = to,
                other => {
                    return Err(format!(
                        "event {i}: flip {from}->{to} but stored tail is {other:?}"
                    ))
                }
            },
        }
    }
    let mut out: Vec<(usize, usize)> = tail
        .into_iter()
        .map(|((a, b), t)| if t == a { (a, b) } else { (b, a) })
        .collect();
    out.sort_unstable();
    Ok(out)
}
