//! Enumeration primitives over agent subsets, set partitions, and reception
//! vectors.
//!
//! Agents are 0-indexed everywhere. Coalitions use bitmask semantics; set
//! partitions are enumerated in restricted-growth-string lexicographic order,
//! so the grand coalition comes first and the all-singletons partition last.
//! Enumeration is streaming: callers can fold over `Bell(n)` partitions
//! without materializing them.

use std::fmt;

use crate::error::{Error, Result};

/// Hard cap for subset and reception-vector enumeration (2^n items).
pub const SUBSET_CAP: usize = 20;
/// Hard cap for set-partition enumeration (Bell(13) ≈ 2.8e7 items).
pub const PARTITION_CAP: usize = 13;

/// A subset of the agent population `{0, …, n-1}`, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition {
    mask: u32,
    n: u8,
}

impl Coalition {
    /// The empty coalition over a population of size `n`.
    pub fn empty(n: usize) -> Self {
        assert!(n <= 32, "population too large for bitmask coalition");
        Coalition { mask: 0, n: n as u8 }
    }

    /// Coalition holding exactly agent `i`.
    pub fn singleton(n: usize, i: usize) -> Self {
        assert!(i < n, "agent {i} out of range for population {n}");
        let mut c = Coalition::empty(n);
        c.mask = 1 << i;
        c
    }

    /// The grand coalition `{0, …, n-1}`.
    pub fn grand(n: usize) -> Self {
        let mut c = Coalition::empty(n);
        c.mask = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        c
    }

    /// Builds a coalition from a bitmask; every set bit must be below `n`.
    pub fn from_mask(n: usize, mask: u32) -> Result<Self> {
        let c = Coalition::grand(n);
        if mask & !c.mask != 0 {
            return Err(Error::Contract(format!(
                "mask {mask:#b} has members outside population {n}"
            )));
        }
        Ok(Coalition { mask, n: n as u8 })
    }

    /// Builds a coalition from explicit member indices.
    pub fn from_members<I: IntoIterator<Item = usize>>(n: usize, members: I) -> Result<Self> {
        let mut mask = 0u32;
        for i in members {
            if i >= n {
                return Err(Error::Contract(format!(
                    "agent {i} out of range for population {n}"
                )));
            }
            mask |= 1 << i;
        }
        Coalition::from_mask(n, mask)
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn size(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.n() && self.mask & (1 << i) != 0
    }

    /// Members in ascending index order.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        let mask = self.mask;
        (0..self.n()).filter(move |i| mask & (1 << i) != 0)
    }

    /// Smallest member, if any.
    pub fn min_member(&self) -> Option<usize> {
        if self.mask == 0 {
            None
        } else {
            Some(self.mask.trailing_zeros() as usize)
        }
    }

    /// This coalition with agent `i` added.
    pub fn with(&self, i: usize) -> Self {
        assert!(i < self.n(), "agent {i} out of range");
        Coalition {
            mask: self.mask | (1 << i),
            n: self.n,
        }
    }

    pub fn union(&self, other: &Coalition) -> Self {
        assert_eq!(self.n, other.n, "population mismatch");
        Coalition {
            mask: self.mask | other.mask,
            n: self.n,
        }
    }

    pub fn is_disjoint(&self, other: &Coalition) -> bool {
        self.mask & other.mask == 0
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coalition({self})")
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// A set partition of `{0, …, n-1}` into disjoint non-empty coalitions.
///
/// Canonical form: blocks sorted by their smallest member.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    n: usize,
    blocks: Vec<Coalition>,
}

impl Partition {
    /// Validates disjointness and coverage, then canonicalizes block order.
    pub fn new(n: usize, mut blocks: Vec<Coalition>) -> Result<Self> {
        let mut seen = 0u32;
        for b in &blocks {
            if b.n() != n {
                return Err(Error::Contract(format!(
                    "block {b} built for population {}, expected {n}",
                    b.n()
                )));
            }
            if b.is_empty() {
                return Err(Error::Contract("partition block is empty".into()));
            }
            if seen & b.mask() != 0 {
                return Err(Error::Contract(format!("block {b} overlaps another block")));
            }
            seen |= b.mask();
        }
        if seen != Coalition::grand(n).mask() {
            return Err(Error::Contract(format!(
                "blocks do not cover the population of size {n}"
            )));
        }
        blocks.sort_by_key(|b| b.min_member());
        Ok(Partition { n, blocks })
    }

    /// Groups agents sharing a label into blocks. Label values are arbitrary;
    /// only equality matters.
    pub fn from_labels(labels: &[usize]) -> Self {
        let n = labels.len();
        let mut blocks: Vec<(usize, Coalition)> = Vec::new();
        for (i, &label) in labels.iter().enumerate() {
            match blocks.iter_mut().find(|(l, _)| *l == label) {
                Some((_, c)) => *c = c.with(i),
                None => blocks.push((label, Coalition::singleton(n, i))),
            }
        }
        // First occurrences arrive in ascending agent order, so blocks are
        // already sorted by smallest member.
        Partition {
            n,
            blocks: blocks.into_iter().map(|(_, c)| c).collect(),
        }
    }

    /// Partition into n singletons.
    pub fn singletons(n: usize) -> Self {
        Partition {
            n,
            blocks: (0..n).map(|i| Coalition::singleton(n, i)).collect(),
        }
    }

    /// Single-block partition.
    pub fn grand(n: usize) -> Self {
        Partition {
            n,
            blocks: vec![Coalition::grand(n)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Coalition] {
        &self.blocks
    }

    /// The block containing agent `i` (total by the coverage invariant).
    pub fn block_of(&self, i: usize) -> Coalition {
        assert!(i < self.n, "agent {i} out of range");
        *self
            .blocks
            .iter()
            .find(|b| b.contains(i))
            .expect("partition covers every agent")
    }

    /// Blocks as plain member lists, for serialization.
    pub fn to_member_lists(&self) -> Vec<Vec<usize>> {
        self.blocks.iter().map(|b| b.members().collect()).collect()
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Partition(")?;
        for (k, b) in self.blocks.iter().enumerate() {
            if k > 0 {
                write!(f, "|")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, b) in self.blocks.iter().enumerate() {
            if k > 0 {
                write!(f, "|")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Per-agent uplink success indicators for one aggregation round.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ReceptionVector {
    mask: u32,
    n: u8,
}

impl ReceptionVector {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= 32);
        ReceptionVector { mask: 0, n: n as u8 }
    }

    pub fn ones(n: usize) -> Self {
        let full = Coalition::grand(n).mask();
        ReceptionVector {
            mask: full,
            n: n as u8,
        }
    }

    pub fn from_mask(n: usize, mask: u32) -> Result<Self> {
        Coalition::from_mask(n, mask).map(|c| ReceptionVector {
            mask: c.mask(),
            n: n as u8,
        })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn received(&self, i: usize) -> bool {
        i < self.n() && self.mask & (1 << i) != 0
    }

    /// Number of successful receptions within `s`.
    pub fn count_in(&self, s: &Coalition) -> usize {
        (self.mask & s.mask()).count_ones() as usize
    }
}

impl fmt::Debug for ReceptionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x[")?;
        for i in 0..self.n() {
            write!(f, "{}", u8::from(self.received(i)))?;
        }
        write!(f, "]")
    }
}

/// All subsets of `{0, …, n-1}` with at least `min_size` members, in ascending
/// bitmask order.
pub fn enumerate_subsets(n: usize, min_size: usize) -> Result<impl Iterator<Item = Coalition>> {
    if n < 1 || n > SUBSET_CAP {
        return Err(Error::capacity("subset enumeration", SUBSET_CAP, n));
    }
    let end = 1u64 << n;
    Ok((0..end)
        .map(move |mask| Coalition {
            mask: mask as u32,
            n: n as u8,
        })
        .filter(move |c| c.size() >= min_size))
}

/// All set partitions of `{0, …, n-1}`, in restricted-growth-string
/// lexicographic order. Yields exactly `bell(n)` partitions.
pub fn enumerate_partitions(n: usize) -> Result<Partitions> {
    if n < 1 || n > PARTITION_CAP {
        return Err(Error::capacity("partition enumeration", PARTITION_CAP, n));
    }
    Ok(Partitions {
        rgs: vec![0; n],
        started: false,
        done: false,
    })
}

/// Streaming set-partition enumerator over restricted growth strings.
pub struct Partitions {
    rgs: Vec<usize>,
    started: bool,
    done: bool,
}

impl Partitions {
    /// Advances `rgs` to the lexicographically next restricted growth string.
    fn advance(&mut self) -> bool {
        let n = self.rgs.len();
        // a[j] may step up iff a[j] <= max(a[0..j]); tail resets to zero.
        for j in (1..n).rev() {
            let prefix_max = self.rgs[..j].iter().copied().max().unwrap_or(0);
            if self.rgs[j] <= prefix_max {
                self.rgs[j] += 1;
                for k in j + 1..n {
                    self.rgs[k] = 0;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for Partitions {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        if self.started && !self.advance() {
            self.done = true;
            return None;
        }
        self.started = true;
        Some(Partition::from_labels(&self.rgs))
    }
}

/// All `2^|S|` reception vectors over the members of `s`; bits outside `s`
/// stay zero. Order is deterministic: the k-th vector maps bit t of k to the
/// t-th smallest member of `s`.
pub fn enumerate_receptions(s: &Coalition) -> Result<impl Iterator<Item = ReceptionVector>> {
    if s.size() > SUBSET_CAP {
        return Err(Error::capacity("reception enumeration", SUBSET_CAP, s.size()));
    }
    let members: Vec<usize> = s.members().collect();
    let n = s.n() as u8;
    let end = 1u64 << members.len();
    Ok((0..end).map(move |k| {
        let mut mask = 0u32;
        for (t, &i) in members.iter().enumerate() {
            if k & (1 << t) != 0 {
                mask |= 1 << i;
            }
        }
        ReceptionVector { mask, n }
    }))
}

/// Ordered pairs `(i, j)` with `i < j`, both in `s`.
pub fn pairs_of(s: &Coalition) -> Vec<(usize, usize)> {
    let members: Vec<usize> = s.members().collect();
    let mut pairs = Vec::with_capacity(members.len() * members.len().saturating_sub(1) / 2);
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Bell number via the Bell-triangle recurrence. Exact in u64 for `n <= 25`.
pub fn bell(n: usize) -> u64 {
    assert!(n <= 25, "bell({n}) overflows u64");
    let mut row = vec![1u64];
    for _ in 1..=n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &x in &row {
            let last = *next.last().unwrap();
            next.push(last + x);
        }
        row = next;
    }
    row[0]
}
