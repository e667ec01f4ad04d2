//! Perfect binary tree of servers hosting one item each.
//!
//! Servers use heap layout: server `s` has children `2s + 1` and `2s + 2`
//! and depth `floor(log2(s + 1))`. The tree keeps both directions of the
//! item/server bijection so lookups are constant time either way.

use crate::error::{Error, Result};

pub type Item = usize;
pub type Server = usize;

/// Depth of a server in heap layout. The root has depth zero.
#[inline]
pub fn server_depth(s: Server) -> usize {
    (usize::BITS - 1 - (s + 1).leading_zeros()) as usize
}

#[inline]
pub fn parent(s: Server) -> Option<Server> {
    if s == 0 {
        None
    } else {
        Some((s - 1) / 2)
    }
}

/// Number of levels `d` such that `n = 2^d - 1`, if `n` is perfect.
pub fn levels_for(n: usize) -> Option<usize> {
    if n == 0 || (n + 1) & n != 0 {
        None
    } else {
        Some((n + 1).trailing_zeros() as usize)
    }
}

/// Servers at a given depth, as a contiguous index range.
#[inline]
pub fn level_range(depth: usize) -> std::ops::Range<Server> {
    let first = (1usize << depth) - 1;
    first..(first << 1) + 1
}

/// Per-request and cumulative cost accounting.
///
/// Access cost is measured in hops from the root, adjustment cost in swaps
/// (or relocation hops, which the cost model treats the same way).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CostLedger {
    pub access_total: u64,
    pub adjust_total: u64,
    pub per_request: Vec<RequestCost>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RequestCost {
    pub access: u64,
    pub adjust: u64,
}

impl RequestCost {
    pub fn total(&self) -> u64 {
        self.access + self.adjust
    }
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Opens a fresh per-request entry. Subsequent charges land on it.
    pub fn begin_request(&mut self) {
        self.per_request.push(RequestCost::default());
    }

    pub fn charge_access(&mut self, hops: u64) {
        self.access_total += hops;
        if let Some(last) = self.per_request.last_mut() {
            last.access += hops;
        }
    }

    pub fn charge_adjust(&mut self, swaps: u64) {
        self.adjust_total += swaps;
        if let Some(last) = self.per_request.last_mut() {
            last.adjust += swaps;
        }
    }

    pub fn total(&self) -> u64 {
        self.access_total + self.adjust_total
    }

    pub fn last_request(&self) -> Option<RequestCost> {
        self.per_request.last().copied()
    }
}

/// A perfect binary tree with `n = 2^d - 1` servers and as many items.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TreeState {
    guest: Vec<Item>,
    host: Vec<Server>,
}

impl TreeState {
    /// Identity layout: item `i` sits on server `i`.
    pub fn new(n: usize) -> Result<Self> {
        levels_for(n).ok_or(Error::NotPerfect(n))?;
        Ok(Self {
            guest: (0..n).collect(),
            host: (0..n).collect(),
        })
    }

    /// Builds a tree from a server-to-item mapping.
    pub fn from_guests(guest: Vec<Item>) -> Result<Self> {
        let n = guest.len();
        levels_for(n).ok_or(Error::NotPerfect(n))?;
        let mut host = vec![usize::MAX; n];
        for (s, &v) in guest.iter().enumerate() {
            if v >= n {
                return Err(Error::UnknownItem { item: v, n });
            }
            if host[v] != usize::MAX {
                return Err(Error::Config(format!("item {v} appears twice in layout")));
            }
            host[v] = s;
        }
        Ok(Self { guest, host })
    }

    pub fn len(&self) -> usize {
        self.guest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.guest.is_empty()
    }

    /// Number of levels `d`.
    pub fn levels(&self) -> usize {
        (self.len() + 1).trailing_zeros() as usize
    }

    pub fn guests(&self) -> &[Item] {
        &self.guest
    }

    pub fn hosts(&self) -> &[Server] {
        &self.host
    }

    #[inline]
    pub fn guest(&self, s: Server) -> Item {
        self.guest[s]
    }

    #[inline]
    pub fn host(&self, v: Item) -> Server {
        self.host[v]
    }

    /// Current depth of an item.
    #[inline]
    pub fn item_depth(&self, v: Item) -> usize {
        server_depth(self.host[v])
    }

    pub fn check_server(&self, s: Server) -> Result<()> {
        if s < self.len() {
            Ok(())
        } else {
            Err(Error::ServerOutOfRange { server: s, n: self.len() })
        }
    }

    pub fn check_item(&self, v: Item) -> Result<()> {
        if v < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownItem { item: v, n: self.len() })
        }
    }

    pub fn depth(&self, s: Server) -> Result<usize> {
        self.check_server(s)?;
        Ok(server_depth(s))
    }

    /// Number of edges on the unique path between two servers.
    pub fn tree_distance(&self, a: Server, b: Server) -> Result<usize> {
        self.check_server(a)?;
        self.check_server(b)?;
        Ok(distance(a, b))
    }

    /// Source-routing header for `v`: one bit per hop from the root,
    /// `0` for the left child and `1` for the right child.
    pub fn routing_header(&self, v: Item) -> Result<String> {
        self.check_item(v)?;
        let mut s = self.host[v];
        let mut bits = Vec::with_capacity(server_depth(s));
        while s > 0 {
            bits.push(if s % 2 == 1 { '0' } else { '1' });
            s = (s - 1) / 2;
        }
        Ok(bits.iter().rev().collect())
    }

    /// Pays for reaching `v` from the root. The tree is left unchanged.
    pub fn access(&self, v: Item, ledger: &mut CostLedger) -> Result<usize> {
        self.check_item(v)?;
        let d = self.item_depth(v);
        ledger.charge_access(d as u64);
        Ok(d)
    }

    /// Exchanges the guests of `s` and its parent.
    pub fn swap(&mut self, s: Server, ledger: &mut CostLedger) -> Result<()> {
        self.check_server(s)?;
        let p = parent(s).ok_or(Error::RootSwap)?;
        self.exchange_servers(s, p);
        ledger.charge_adjust(1);
        Ok(())
    }

    /// Exchanges the hosts of `u` and `v` with elementary swaps.
    ///
    /// `u` walks the path towards `v` (d swaps), which shifts `v` one hop
    /// back along the path; `v` then walks the remaining d - 1 hops to the
    /// original host of `u`. Returns the number of swaps charged.
    pub fn interchange(&mut self, u: Item, v: Item, ledger: &mut CostLedger) -> Result<u64> {
        self.check_item(u)?;
        self.check_item(v)?;
        if u == v {
            return Ok(0);
        }
        let path = server_path(self.host[u], self.host[v]);
        let mut swaps = 0;
        for w in path.windows(2) {
            self.swap_edge(w[0], w[1], ledger);
            swaps += 1;
        }
        for w in path[..path.len() - 1].windows(2).rev() {
            self.swap_edge(w[1], w[0], ledger);
            swaps += 1;
        }
        debug_assert_eq!(self.host[u], *path.last().unwrap());
        debug_assert_eq!(self.host[v], path[0]);
        Ok(swaps)
    }

    /// Executes a vacancy chain of relocations.
    ///
    /// The item of the first move is lifted out, leaving its source vacant.
    /// Every following move must target the current vacancy, whose role then
    /// passes to that move's source. Finally the lifted item is dropped at its
    /// destination, which must be the last vacancy. Each move is charged its
    /// hop count.
    pub fn relocate_chain(&mut self, moves: &[(Item, Server)], ledger: &mut CostLedger) -> Result<u64> {
        let Some(&(lifted, lifted_dest)) = moves.first() else {
            return Ok(0);
        };
        self.check_item(lifted)?;
        self.check_server(lifted_dest)?;

        // Validate against the untouched layout first; every item moves at
        // most once, so sources are the current hosts.
        let mut seen = vec![false; self.len()];
        seen[lifted] = true;
        let mut vacancy = self.host[lifted];
        let mut cost = distance(vacancy, lifted_dest) as u64;
        for &(item, dest) in &moves[1..] {
            self.check_item(item)?;
            self.check_server(dest)?;
            if std::mem::replace(&mut seen[item], true) {
                return Err(Error::MalformedChain(format!("item {item} moved twice")));
            }
            if dest != vacancy {
                return Err(Error::DestinationOccupied { item, dest });
            }
            vacancy = self.host[item];
            cost += distance(vacancy, dest) as u64;
        }
        if lifted_dest != vacancy {
            return Err(Error::DestinationOccupied { item: lifted, dest: lifted_dest });
        }

        for &(item, dest) in moves {
            self.guest[dest] = item;
            self.host[item] = dest;
        }
        ledger.charge_adjust(cost);
        Ok(cost)
    }

    /// Both mappings are mutually inverse permutations.
    pub fn is_consistent(&self) -> bool {
        let n = self.len();
        self.host.len() == n
            && self.guest.iter().enumerate().all(|(s, &v)| v < n && self.host[v] == s)
    }

    fn swap_edge(&mut self, a: Server, b: Server, ledger: &mut CostLedger) {
        debug_assert!(parent(a) == Some(b) || parent(b) == Some(a));
        self.exchange_servers(a, b);
        ledger.charge_adjust(1);
    }

    fn exchange_servers(&mut self, a: Server, b: Server) {
        self.guest.swap(a, b);
        self.host[self.guest[a]] = a;
        self.host[self.guest[b]] = b;
    }
}

/// Hop count between two servers via their lowest common ancestor.
pub fn distance(mut a: Server, mut b: Server) -> usize {
    let mut hops = 0;
    let (mut da, mut db) = (server_depth(a), server_depth(b));
    while da > db {
        a = (a - 1) / 2;
        da -= 1;
        hops += 1;
    }
    while db > da {
        b = (b - 1) / 2;
        db -= 1;
        hops += 1;
    }
    while a != b {
        a = (a - 1) / 2;
        b = (b - 1) / 2;
        hops += 2;
    }
    hops
}

/// Servers on the path from `a` to `b`, both ends included.
pub fn server_path(a: Server, b: Server) -> Vec<Server> {
    let mut up = vec![a];
    let mut down = vec![b];
    let (mut x, mut y) = (a, b);
    while server_depth(x) > server_depth(y) {
        x = (x - 1) / 2;
        up.push(x);
    }
    while server_depth(y) > server_depth(x) {
        y = (y - 1) / 2;
        down.push(y);
    }
    while x != y {
        x = (x - 1) / 2;
        y = (y - 1) / 2;
        up.push(x);
        down.push(y);
    }
    down.pop();
    up.extend(down.into_iter().rev());
    up
}

/// Follows a routing header from the root.
pub fn decode_header(bits: &str) -> Option<Server> {
    bits.chars().try_fold(0usize, |s, c| match c {
        '0' => Some(2 * s + 1),
        '1' => Some(2 * s + 2),
        _ => None,
    })
}
