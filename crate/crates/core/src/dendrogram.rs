//! Dendrograms: merge sequences over leaves `0..n`.
//!
//! Merge `i` creates node `n + i`. Inputs with several connected components
//! yield a forest; every node never used as a child is a root.

use std::io::{BufRead, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DendrogramError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("merge {index}: {msg}")]
    Invalid { index: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn invalid(index: usize, msg: impl Into<String>) -> DendrogramError {
    DendrogramError::Invalid {
        index,
        msg: msg.into(),
    }
}

/// One merge record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub weight: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn new(n: usize) -> Self {
        Dendrogram {
            n,
            merges: Vec::with_capacity(n.saturating_sub(1)),
        }
    }

    /// Builds from raw merges and validates.
    pub fn from_merges(n: usize, merges: Vec<Merge>) -> Result<Self, DendrogramError> {
        let d = Dendrogram { n, merges };
        d.validate()?;
        Ok(d)
    }

    /// Builds from `(left, right, weight)` triples, filling in sizes.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize, f64)]) -> Result<Self, DendrogramError> {
        let mut d = Dendrogram::new(n);
        for &(l, r, w) in pairs {
            if l >= d.next_id() || r >= d.next_id() {
                return Err(invalid(d.merges.len(), "child id not yet created"));
            }
            d.push(l, r, w);
        }
        d.validate()?;
        Ok(d)
    }

    pub fn num_leaves(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    /// Id the next merge will receive.
    pub fn next_id(&self) -> usize {
        self.n + self.merges.len()
    }

    pub fn size_of(&self, id: usize) -> usize {
        if id < self.n {
            1
        } else {
            self.merges[id - self.n].size
        }
    }

    /// Appends a merge and returns the new node id.
    pub fn push(&mut self, left: usize, right: usize, weight: f64) -> usize {
        let size = self.size_of(left) + self.size_of(right);
        self.merges.push(Merge {
            left,
            right,
            weight,
            size,
        });
        self.next_id() - 1
    }

    /// Checks ids, sizes and weights.
    pub fn validate(&self) -> Result<(), DendrogramError> {
        let total = self.n + self.merges.len();
        if !self.merges.is_empty() && self.merges.len() >= self.n.max(1) {
            return Err(invalid(self.n, "more than n - 1 merges"));
        }
        let mut used = vec![false; total];
        let mut sizes = vec![1usize; total];
        for (i, m) in self.merges.iter().enumerate() {
            let id = self.n + i;
            for c in [m.left, m.right] {
                if c >= id {
                    return Err(invalid(i, format!("child {c} referenced before creation")));
                }
                if used[c] {
                    return Err(invalid(i, format!("child {c} merged twice")));
                }
                used[c] = true;
            }
            if m.left == m.right {
                return Err(invalid(i, "merge of a node with itself"));
            }
            if !m.weight.is_finite() {
                return Err(invalid(i, "non-finite weight"));
            }
            sizes[id] = sizes[m.left] + sizes[m.right];
            if sizes[id] != m.size {
                return Err(invalid(
                    i,
                    format!("size {} but children sum to {}", m.size, sizes[id]),
                ));
            }
        }
        Ok(())
    }

    /// Nodes that are never a child, in increasing id order.
    pub fn roots(&self) -> Vec<usize> {
        let total = self.n + self.merges.len();
        let mut used = vec![false; total];
        for m in &self.merges {
            used[m.left] = true;
            used[m.right] = true;
        }
        (0..total).filter(|&i| !used[i]).collect()
    }

    /// Smallest leaf under every node.
    pub fn min_leaves(&self) -> Vec<usize> {
        let mut min: Vec<usize> = (0..self.n).collect();
        for m in &self.merges {
            let v = min[m.left].min(min[m.right]);
            min.push(v);
        }
        min
    }

    /// Leaves under `id`, ascending.
    pub fn leaves_of(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(x) = stack.pop() {
            if x < self.n {
                out.push(x);
            } else {
                let m = &self.merges[x - self.n];
                stack.push(m.left);
                stack.push(m.right);
            }
        }
        out.sort_unstable();
        out
    }

    /// Order-independent form: merges sorted by weight (descending), ties by
    /// the smallest leaf of the merged cluster; ids renumbered; the child
    /// holding the smaller leaf goes left.
    pub fn canonical(&self) -> Dendrogram {
        let min = self.min_leaves();
        let mut order: Vec<usize> = (0..self.merges.len()).collect();
        order.sort_by(|&a, &b| {
            let (ma, mb) = (&self.merges[a], &self.merges[b]);
            mb.weight
                .total_cmp(&ma.weight)
                .then(min[self.n + a].cmp(&min[self.n + b]))
        });
        // A merge must come after its children; a stable topological pass
        // keeps the sorted order wherever it is already consistent.
        let order = self.topological(order);
        let mut remap: Vec<usize> = (0..self.n).collect();
        remap.resize(self.n + self.merges.len(), usize::MAX);
        let mut out = Dendrogram::new(self.n);
        for &i in &order {
            let m = &self.merges[i];
            let (mut l, mut r) = (m.left, m.right);
            if min[l] > min[r] {
                std::mem::swap(&mut l, &mut r);
            }
            let id = out.push(remap[l], remap[r], m.weight);
            remap[self.n + i] = id;
        }
        out
    }

    fn topological(&self, order: Vec<usize>) -> Vec<usize> {
        let k = self.merges.len();
        let mut pos = vec![0usize; k];
        for (p, &i) in order.iter().enumerate() {
            pos[i] = p;
        }
        let consistent = self.merges.iter().enumerate().all(|(i, m)| {
            [m.left, m.right]
                .iter()
                .all(|&c| c < self.n || pos[c - self.n] < pos[i])
        });
        if consistent {
            return order;
        }
        // Repeatedly emit the first pending merge whose children are ready.
        let mut done = vec![false; k];
        let mut out = Vec::with_capacity(k);
        let ready = |i: usize, done: &[bool]| {
            let m = &self.merges[i];
            [m.left, m.right]
                .iter()
                .all(|&c| c < self.n || done[c - self.n])
        };
        let mut pending = order;
        while !pending.is_empty() {
            let at = pending
                .iter()
                .position(|&i| ready(i, &done))
                .expect("dendrogram is acyclic");
            let i = pending.remove(at);
            done[i] = true;
            out.push(i);
        }
        out
    }

    /// Compares two dendrograms merge by merge: identical child ids and
    /// sizes, weights within `rel_tol` relative.
    pub fn compare(&self, other: &Dendrogram, rel_tol: f64) -> Result<(), String> {
        if self.n != other.n {
            return Err(format!("leaf counts differ: {} vs {}", self.n, other.n));
        }
        if self.merges.len() != other.merges.len() {
            return Err(format!(
                "merge counts differ: {} vs {}",
                self.merges.len(),
                other.merges.len()
            ));
        }
        for (i, (a, b)) in self.merges.iter().zip(&other.merges).enumerate() {
            if (a.left, a.right, a.size) != (b.left, b.right, b.size) {
                return Err(format!(
                    "merge {i}: ({}, {}, size {}) vs ({}, {}, size {})",
                    a.left, a.right, a.size, b.left, b.right, b.size
                ));
            }
            if !rel_close(a.weight, b.weight, rel_tol) {
                return Err(format!("merge {i}: weight {} vs {}", a.weight, b.weight));
            }
        }
        Ok(())
    }

    /// Checks that merge weights never increase from a child to its parent.
    pub fn check_monotone(&self, rel_tol: f64) -> Result<(), String> {
        for (i, m) in self.merges.iter().enumerate() {
            for c in [m.left, m.right] {
                if c >= self.n {
                    let cw = self.merges[c - self.n].weight;
                    if m.weight > cw && !rel_close(m.weight, cw, rel_tol) {
                        return Err(format!(
                            "merge {i} has weight {} above its child {c} ({cw})",
                            m.weight
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n {}", self.n)?;
        for (i, m) in self.merges.iter().enumerate() {
            writeln!(
                out,
                "{i} {} {} {} {}",
                m.left,
                m.right,
                format_weight(m.weight),
                m.size
            )?;
        }
        for r in self.roots() {
            writeln!(out, "root {r}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, DendrogramError> {
        let perr = |line: usize, msg: String| DendrogramError::Parse { line, msg };
        let mut n = None;
        let mut merges = Vec::new();
        let mut roots = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = t.split_whitespace().collect();
            match fields.as_slice() {
                ["n", v] => {
                    if n.is_some() {
                        return Err(perr(line_no, "duplicate header".into()));
                    }
                    n = Some(parse_num::<usize>(v, line_no)?);
                }
                ["root", v] => roots.push(parse_num::<usize>(v, line_no)?),
                [i, l, r, w, s] => {
                    if n.is_none() {
                        return Err(perr(line_no, "merge before `n` header".into()));
                    }
                    let i = parse_num::<usize>(i, line_no)?;
                    if i != merges.len() {
                        return Err(perr(
                            line_no,
                            format!("expected merge index {}, found {i}", merges.len()),
                        ));
                    }
                    merges.push(Merge {
                        left: parse_num(l, line_no)?,
                        right: parse_num(r, line_no)?,
                        weight: parse_num(w, line_no)?,
                        size: parse_num(s, line_no)?,
                    });
                }
                _ => return Err(perr(line_no, format!("unrecognised line `{t}`"))),
            }
        }
        let n = n.ok_or_else(|| perr(0, "missing `n` header".into()))?;
        let d = Dendrogram::from_merges(n, merges)?;
        if !roots.is_empty() && roots != d.roots() {
            return Err(perr(0, "root list does not match merges".into()));
        }
        Ok(d)
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, DendrogramError> {
    s.parse().map_err(|_| DendrogramError::Parse {
        line,
        msg: format!("bad number `{s}`"),
    })
}

/// Relative closeness with an absolute floor for values near zero.
pub fn rel_close(a: f64, b: f64, rel_tol: f64) -> bool {
    if a == b {
        return true;
    }
    let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    (a - b).abs() <= rel_tol * scale
}

/// Formats with 17 significant digits in positional notation.
pub fn format_weight(w: f64) -> String {
    if w == 0.0 || !w.is_finite() {
        return format!("{w}");
    }
    let exp = w.abs().log10().floor() as i32;
    if !(-20..=20).contains(&exp) {
        return format!("{w:.16e}");
    }
    let decimals = (16 - exp).max(0) as usize;
    format!("{w:.decimals$}")
}
