//! Recency ranks, the working-set bound and MRU diagnostics.
//!
//! Every item carries an access stamp. Items that were never requested get
//! a virtual stamp `-(s + 1)` from the server `s` they start on, so the
//! starting layout is an MRU tree and all stamps stay distinct.

use crate::error::Result;
use crate::tree::{level_range, server_depth, Item, TreeState};

/// Fenwick tree counting live stamps, indexed by `stamp + offset`.
#[derive(Clone, Debug)]
struct StampCounts {
    tree: Vec<u32>,
}

impl StampCounts {
    fn with_capacity(cap: usize) -> Self {
        Self { tree: vec![0; cap + 1] }
    }

    fn capacity(&self) -> usize {
        self.tree.len() - 1
    }

    fn add(&mut self, idx: usize, delta: i32) {
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] = (self.tree[i] as i32 + delta) as u32;
            i += i & i.wrapping_neg();
        }
    }

    /// Live stamps with index strictly below `idx`.
    fn prefix(&self, idx: usize) -> usize {
        let mut i = idx;
        let mut sum = 0usize;
        while i > 0 {
            sum += self.tree[i] as usize;
            i -= i & i.wrapping_neg();
        }
        sum
    }
}

#[derive(Clone, Debug)]
pub struct RankTable {
    last: Vec<i64>,
    clock: i64,
    counts: StampCounts,
}

impl RankTable {
    /// Stamps for a tree that starts in identity layout.
    pub fn new(n: usize) -> Self {
        Self::from_order((0..n).collect::<Vec<_>>().as_slice())
    }

    /// Stamps derived from the starting layout of `tree`.
    pub fn from_tree(tree: &TreeState) -> Self {
        Self::from_order(tree.guests())
    }

    /// Virtual stamps from a recency order, most recent item first.
    pub fn from_recency(order: &[Item]) -> Self {
        Self::from_order(order)
    }

    /// `order[s]` is the item whose virtual stamp is `-(s + 1)`.
    fn from_order(order: &[Item]) -> Self {
        let n = order.len();
        let mut last = vec![0i64; n];
        for (s, &v) in order.iter().enumerate() {
            last[v] = -(s as i64) - 1;
        }
        let mut table = Self {
            last,
            clock: 0,
            counts: StampCounts::with_capacity(2 * n.max(1)),
        };
        table.rebuild(2 * n.max(1));
        table
    }

    pub fn len(&self) -> usize {
        self.last.len()
    }

    pub fn is_empty(&self) -> bool {
        self.last.is_empty()
    }

    pub fn clock(&self) -> i64 {
        self.clock
    }

    /// Access stamp of `v`. A smaller stamp means a larger rank.
    #[inline]
    pub fn stamp(&self, v: Item) -> i64 {
        self.last[v]
    }

    /// Whether `v` has been requested since the table was created.
    pub fn was_requested(&self, v: Item) -> bool {
        self.last[v] >= 0
    }

    fn offset(&self) -> i64 {
        self.len() as i64
    }

    fn index(&self, stamp: i64) -> usize {
        (stamp + self.offset()) as usize
    }

    fn rebuild(&mut self, cap: usize) {
        self.counts = StampCounts::with_capacity(cap);
        for i in 0..self.last.len() {
            let idx = self.index(self.last[i]);
            self.counts.add(idx, 1);
        }
    }

    /// One plus the number of items requested strictly more recently.
    pub fn rank(&self, v: Item) -> Result<usize> {
        crate::check_item(v, self.len())?;
        Ok(self.rank_unchecked(v))
    }

    fn rank_unchecked(&self, v: Item) -> usize {
        self.len() - self.counts.prefix(self.index(self.last[v]))
    }

    /// Ranks of all items, indexed by item.
    pub fn ranks(&self) -> Vec<usize> {
        let mut order: Vec<Item> = (0..self.len()).collect();
        order.sort_unstable_by_key(|&v| std::cmp::Reverse(self.last[v]));
        let mut ranks = vec![0; self.len()];
        for (pos, v) in order.into_iter().enumerate() {
            ranks[v] = pos + 1;
        }
        ranks
    }

    /// Adds the working-set term for `v`, then marks it most recent.
    /// Returns the rank `v` had before the update.
    pub fn record(&mut self, acc: &mut WsAccumulator, v: Item) -> Result<usize> {
        crate::check_item(v, self.len())?;
        let rank = self.rank_unchecked(v);
        acc.add(rank);
        self.touch(v);
        Ok(rank)
    }

    fn touch(&mut self, v: Item) {
        let old = self.index(self.last[v]);
        let new = self.index(self.clock);
        if new >= self.counts.capacity() {
            self.last[v] = self.clock;
            self.clock += 1;
            let cap = (self.counts.capacity() * 2).max(new + 1);
            self.rebuild(cap);
            return;
        }
        self.counts.add(old, -1);
        self.counts.add(new, 1);
        self.last[v] = self.clock;
        self.clock += 1;
    }
}

/// Running sum of `log2(rank)` over served requests.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WsAccumulator {
    pub total: f64,
    pub terms: u64,
}

impl WsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, rank: usize) {
        debug_assert!(rank >= 1);
        self.total += (rank as f64).log2();
        self.terms += 1;
    }
}

/// `floor(log2(r))` for `r >= 1`.
#[inline]
pub fn floor_log2(r: usize) -> usize {
    debug_assert!(r >= 1);
    (usize::BITS - 1 - r.leading_zeros()) as usize
}

/// Every item sits exactly at depth `floor(log2(rank))`.
pub fn is_mru(tree: &TreeState, ranks: &RankTable) -> bool {
    ranks
        .ranks()
        .iter()
        .enumerate()
        .all(|(v, &r)| tree.item_depth(v) == floor_log2(r))
}

/// Every item sits no deeper than `floor(log2(rank)) + beta`.
pub fn is_mru_beta(tree: &TreeState, ranks: &RankTable, beta: usize) -> bool {
    ranks
        .ranks()
        .iter()
        .enumerate()
        .all(|(v, &r)| tree.item_depth(v) <= floor_log2(r) + beta)
}

/// Linear-time MRU test: each level must hold strictly more recent items
/// than the level below it. On a perfect tree this is equivalent to
/// [`is_mru`], because level `i` has exactly `2^i` servers.
pub fn levels_ordered(tree: &TreeState, ranks: &RankTable) -> bool {
    let mut prev_min: Option<i64> = None;
    for depth in 0..tree.levels() {
        let stamps = level_range(depth).map(|s| ranks.stamp(tree.guest(s)));
        let (min, max) = stamps.fold((i64::MAX, i64::MIN), |(lo, hi), x| (lo.min(x), hi.max(x)));
        if let Some(p) = prev_min {
            if max >= p {
                return false;
            }
        }
        prev_min = Some(min);
    }
    true
}

/// Bad-pair diagnostics of a single tree.
#[derive(Clone, Debug, PartialEq)]
pub struct BadPairs {
    /// Per server: how many strictly deeper servers hold a more recent item.
    pub alpha: Vec<usize>,
    /// `prod_s (1 + alpha_s / 2^depth(s))`.
    pub product: f64,
    /// `log2` of `product`.
    pub potential: f64,
}

impl BadPairs {
    pub fn total(&self) -> usize {
        self.alpha.iter().sum()
    }
}

pub fn bad_pairs(tree: &TreeState, ranks: &RankTable) -> BadPairs {
    let n = tree.len();
    let rank = ranks.ranks();
    let server_rank: Vec<usize> = (0..n).map(|s| rank[tree.guest(s)]).collect();
    let mut alpha = vec![0usize; n];
    let mut log_sum = 0.0;
    let mut product = 1.0;
    for s in 0..n {
        let depth = server_depth(s);
        let deeper_start = level_range(depth).end;
        alpha[s] = server_rank[deeper_start..]
            .iter()
            .filter(|&&r| r < server_rank[s])
            .count();
        let factor = 1.0 + alpha[s] as f64 / (1u64 << depth) as f64;
        product *= factor;
        log_sum += factor.log2();
    }
    BadPairs {
        alpha,
        product,
        potential: log_sum,
    }
}
