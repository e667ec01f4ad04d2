//! Exact offline optimum for tiny trees.
//!
//! A configuration is one of the `n!` layouts. Two layouts are adjacent when
//! they differ by a single parent-child swap. The optimum is a shortest path
//! through (time, layout) where moving between layouts costs the swap
//! distance and serving request `t` in layout `c` costs the requested item's
//! depth in `c`. Rearranging is allowed before every request, including the
//! first.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::tree::{parent, server_depth, Item, TreeState};

/// A layout, stored as the server-to-item mapping.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    guests: Vec<Item>,
}

impl Configuration {
    pub fn new(guests: Vec<Item>) -> Result<Self> {
        TreeState::from_guests(guests.clone())?;
        Ok(Self { guests })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new((0..n).collect())
    }

    pub fn from_tree(tree: &TreeState) -> Self {
        Self {
            guests: tree.guests().to_vec(),
        }
    }

    pub fn guests(&self) -> &[Item] {
        &self.guests
    }

    pub fn len(&self) -> usize {
        self.guests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.guests.is_empty()
    }

    /// Lexicographic rank of the permutation (Lehmer code).
    pub fn index(&self) -> usize {
        let n = self.guests.len();
        let mut used = vec![false; n];
        let mut idx = 0;
        for (pos, &v) in self.guests.iter().enumerate() {
            let smaller_free = (0..v).filter(|&x| !used[x]).count();
            idx += smaller_free * factorial(n - 1 - pos);
            used[v] = true;
        }
        idx
    }

    pub fn from_index(n: usize, mut idx: usize) -> Result<Self> {
        if idx >= factorial(n) {
            return Err(Error::Config(format!("configuration index {idx} out of range for n = {n}")));
        }
        let mut free: Vec<Item> = (0..n).collect();
        let mut guests = Vec::with_capacity(n);
        for pos in 0..n {
            let f = factorial(n - 1 - pos);
            guests.push(free.remove(idx / f));
            idx %= f;
        }
        Self::new(guests)
    }
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Longest sequence the oracle accepts for a given tree size.
pub fn max_sequence_len(n: usize) -> Option<usize> {
    match n {
        1 | 3 => Some(12),
        7 => Some(8),
        _ => None,
    }
}

/// Configuration graph of one tree size, with lazily memoized BFS distances.
pub struct OptOracle {
    n: usize,
    /// `hosts[c * n + v]`: server of item `v` in configuration `c`.
    hosts: Vec<u8>,
    /// `adj[c * (n - 1) + e]`: neighbor of `c` across the edge above server `e + 1`.
    adj: Vec<u32>,
    distances: Vec<OnceLock<Vec<u8>>>,
}

impl OptOracle {
    pub fn new(n: usize) -> Result<Self> {
        if max_sequence_len(n).is_none() {
            return Err(Error::InstanceTooLarge(format!("oracle supports n in {{1, 3, 7}}, got {n}")));
        }
        let count = factorial(n);
        let mut hosts = vec![0u8; count * n];
        let mut adj = vec![0u32; count * n.saturating_sub(1)];
        for c in 0..count {
            let conf = Configuration::from_index(n, c)?;
            for (s, &v) in conf.guests.iter().enumerate() {
                hosts[c * n + v] = s as u8;
            }
            for s in 1..n {
                let mut g = conf.guests.clone();
                g.swap(s, parent(s).unwrap());
                adj[c * (n - 1) + s - 1] = Configuration { guests: g }.index() as u32;
            }
        }
        Ok(Self {
            n,
            hosts,
            adj,
            distances: (0..count).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn configurations(&self) -> usize {
        self.distances.len()
    }

    fn neighbors(&self, c: usize) -> &[u32] {
        let k = self.n - 1;
        &self.adj[c * k..(c + 1) * k]
    }

    fn depth_of(&self, c: usize, v: Item) -> u32 {
        server_depth(self.hosts[c * self.n + v] as usize) as u32
    }

    fn distances_from(&self, src: usize) -> &[u8] {
        self.distances[src].get_or_init(|| {
            let mut dist = vec![u8::MAX; self.configurations()];
            let mut queue = VecDeque::from([src]);
            dist[src] = 0;
            while let Some(c) = queue.pop_front() {
                for &nb in self.neighbors(c) {
                    let nb = nb as usize;
                    if dist[nb] == u8::MAX {
                        dist[nb] = dist[c] + 1;
                        queue.push_back(nb);
                    }
                }
            }
            dist
        })
    }

    /// Fewest parent-child swaps turning `a` into `b`.
    pub fn swap_distance(&self, a: &Configuration, b: &Configuration) -> Result<usize> {
        if a.len() != b.len() {
            return Err(Error::SizeMismatch(a.len(), b.len()));
        }
        if a.len() != self.n {
            return Err(Error::SizeMismatch(a.len(), self.n));
        }
        Ok(self.distances_from(a.index())[b.index()] as usize)
    }

    /// Minimum total access plus swap cost of serving `seq` from `init`.
    pub fn opt_cost(&self, seq: &[Item], init: &Configuration) -> Result<u64> {
        if init.len() != self.n {
            return Err(Error::SizeMismatch(init.len(), self.n));
        }
        let limit = max_sequence_len(self.n).unwrap_or(0);
        if seq.len() > limit {
            return Err(Error::InstanceTooLarge(format!(
                "sequence of {} requests exceeds the limit of {limit} for n = {}",
                seq.len(),
                self.n
            )));
        }
        if let Some(&v) = seq.iter().find(|&&v| v >= self.n) {
            return Err(Error::UnknownItem { item: v, n: self.n });
        }
        let count = self.configurations();
        let mut cost = vec![u32::MAX; count];
        cost[init.index()] = 0;
        for &v in seq {
            self.relax(&mut cost);
            for (c, slot) in cost.iter_mut().enumerate() {
                *slot += self.depth_of(c, v);
            }
        }
        Ok(cost.into_iter().min().unwrap_or(0) as u64)
    }

    /// `cost[c] <- min_c' cost[c'] + swap_distance(c', c)`: a multi-source
    /// shortest-path pass over the unit-weight swap graph.
    fn relax(&self, cost: &mut [u32]) {
        let mut heap: BinaryHeap<Reverse<(u32, u32)>> = cost
            .iter()
            .enumerate()
            .filter(|(_, &d)| d != u32::MAX)
            .map(|(c, &d)| Reverse((d, c as u32)))
            .collect();
        while let Some(Reverse((d, c))) = heap.pop() {
            if d > cost[c as usize] {
                continue;
            }
            for &nb in self.neighbors(c as usize) {
                if d + 1 < cost[nb as usize] {
                    cost[nb as usize] = d + 1;
                    heap.push(Reverse((d + 1, nb)));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Layered brute force over explicit trajectories using the
    /// all-pairs distance table, independent of `relax`.
    fn brute_opt(oracle: &OptOracle, seq: &[Item], init: usize) -> u64 {
        let count = oracle.configurations();
        let mut best = vec![u64::MAX; count];
        best[init] = 0;
        for &v in seq {
            let mut next = vec![u64::MAX; count];
            for (prev, &b) in best.iter().enumerate() {
                if b == u64::MAX {
                    continue;
                }
                let dist = oracle.distances_from(prev);
                for c in 0..count {
                    let total = b + dist[c] as u64 + oracle.depth_of(c, v) as u64;
                    next[c] = next[c].min(total);
                }
            }
            best = next;
        }
        best.into_iter().min().unwrap()
    }

    #[test]
    fn swap_distances_on_three_servers() {
        let oracle = OptOracle::new(3).unwrap();
        let id = Configuration::identity(3).unwrap();
        assert_eq!(oracle.swap_distance(&id, &id).unwrap(), 0);
        let one = Configuration::new(vec![1, 0, 2]).unwrap();
        assert_eq!(oracle.swap_distance(&id, &one).unwrap(), 1);
        let leaves = Configuration::new(vec![0, 2, 1]).unwrap();
        assert_eq!(oracle.swap_distance(&id, &leaves).unwrap(), 3);
        let seven = Configuration::identity(7).unwrap();
        assert!(matches!(oracle.swap_distance(&id, &seven), Err(Error::SizeMismatch(3, 7))));
    }

    #[test]
    fn opt_small_cases() {
        let oracle = OptOracle::new(3).unwrap();
        let id = Configuration::identity(3).unwrap();
        assert_eq!(oracle.opt_cost(&[], &id).unwrap(), 0);
        assert_eq!(oracle.opt_cost(&[0], &id).unwrap(), 0);
        assert_eq!(oracle.opt_cost(&[2, 2, 2], &id).unwrap(), 1);
        assert_eq!(oracle.opt_cost(&[2], &id).unwrap(), 1);
    }

    #[test]
    fn opt_rejects_large_instances() {
        assert!(matches!(OptOracle::new(15), Err(Error::InstanceTooLarge(_))));
        let oracle = OptOracle::new(3).unwrap();
        let id = Configuration::identity(3).unwrap();
        assert!(matches!(oracle.opt_cost(&[0; 13], &id), Err(Error::InstanceTooLarge(_))));
        assert!(matches!(oracle.opt_cost(&[3], &id), Err(Error::UnknownItem { .. })));
    }

    #[test]
    fn seven_server_graph_is_connected() {
        let oracle = OptOracle::new(7).unwrap();
        let dist = oracle.distances_from(0);
        assert!(dist.iter().all(|&d| d != u8::MAX));
        assert_eq!(oracle.configurations(), 5040);
    }

    #[test]
    fn dp_matches_layered_brute_force_on_three_servers() {
        let oracle = OptOracle::new(3).unwrap();
        for code in 0..3usize.pow(5) {
            let seq: Vec<usize> = (0..5).map(|t| code / 3usize.pow(t) % 3).collect();
            for init in 0..6 {
                let conf = Configuration::from_index(3, init).unwrap();
                assert_eq!(oracle.opt_cost(&seq, &conf).unwrap(), brute_opt(&oracle, &seq, init));
            }
        }
    }

    proptest! {
        #[test]
        fn index_round_trips(perm in Just((0..7).collect::<Vec<usize>>()).prop_shuffle()) {
            let c = Configuration::new(perm).unwrap();
            prop_assert_eq!(Configuration::from_index(7, c.index()).unwrap(), c);
        }

        #[test]
        fn opt_is_monotone_in_prefix(seq in proptest::collection::vec(0usize..7, 0..8), init in 0usize..5040) {
            let oracle = OptOracle::new(7).unwrap();
            let conf = Configuration::from_index(7, init).unwrap();
            let mut prev = 0;
            for len in 0..=seq.len() {
                let c = oracle.opt_cost(&seq[..len], &conf).unwrap();
                prop_assert!(c >= prev);
                prev = c;
            }
        }

        #[test]
        fn swap_distance_is_a_metric(a in 0usize..5040, b in 0usize..5040, c in 0usize..5040) {
            let oracle = OptOracle::new(7).unwrap();
            let (a, b, c) = (
                Configuration::from_index(7, a).unwrap(),
                Configuration::from_index(7, b).unwrap(),
                Configuration::from_index(7, c).unwrap(),
            );
            let ab = oracle.swap_distance(&a, &b).unwrap();
            prop_assert_eq!(ab, oracle.swap_distance(&b, &a).unwrap());
            prop_assert_eq!(ab == 0, a == b);
            prop_assert!(ab <= oracle.swap_distance(&a, &c).unwrap() + oracle.swap_distance(&c, &b).unwrap());
        }
    }
}
