//! Online policies for the self-adjusting complete tree.
//!
//! Every policy serves a request the same way from the outside: pay the
//! access, adjust the tree, then update recency. The recency update always
//! comes last so the rank fed into the working-set bound is the one the
//! item had when it was requested.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tree::{level_range, CostLedger, Item, RequestCost, Server, TreeState};
use crate::workset::{levels_ordered, RankTable, WsAccumulator};

/// A tree together with everything a policy mutates while serving.
#[derive(Clone, Debug)]
pub struct Network {
    pub tree: TreeState,
    pub ranks: RankTable,
    pub ledger: CostLedger,
    pub ws: WsAccumulator,
}

/// What a single request did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Served {
    /// Rank of the requested item before the request.
    pub rank: usize,
    /// Depth the item was found at.
    pub depth: usize,
    pub cost: RequestCost,
}

impl Network {
    /// Ranks start out consistent with the given layout, so it is an MRU tree.
    pub fn new(tree: TreeState) -> Self {
        let ranks = RankTable::from_tree(&tree);
        Self {
            tree,
            ranks,
            ledger: CostLedger::new(),
            ws: WsAccumulator::new(),
        }
    }

    pub fn identity(n: usize) -> Result<Self> {
        Ok(Self::new(TreeState::new(n)?))
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    fn begin(&mut self, u: Item) -> Result<usize> {
        self.tree.check_item(u)?;
        self.ledger.begin_request();
        self.tree.access(u, &mut self.ledger)
    }

    fn finish(&mut self, u: Item, depth: usize) -> Result<Served> {
        let rank = self.ranks.record(&mut self.ws, u)?;
        Ok(Served {
            rank,
            depth,
            cost: self.ledger.last_request().unwrap_or_default(),
        })
    }

    /// The least recently used item on a level (the one of maximum rank).
    pub fn oldest_at_depth(&self, depth: usize) -> Item {
        level_range(depth)
            .map(|s| self.tree.guest(s))
            .min_by_key(|&v| self.ranks.stamp(v))
            .expect("levels are never empty")
    }
}

/// Access only; the tree never changes.
pub fn serve_fixed(net: &mut Network, u: Item) -> Result<Served> {
    let k = net.begin(u)?;
    net.finish(u, k)
}

/// Interchanges `u` (at depth k) with the oldest item at depth `k / 2`.
pub fn serve_move_half(net: &mut Network, u: Item) -> Result<Served> {
    let k = net.begin(u)?;
    if k >= 1 {
        let v = net.oldest_at_depth(k / 2);
        net.tree.interchange(u, v, &mut net.ledger)?;
    }
    net.finish(u, k)
}

/// Moves `u` to the root and pushes the occupants of a uniformly random
/// root path of length `k` down by one level. The last displaced item
/// fills the server `u` left behind.
pub fn serve_random_push<R: Rng + ?Sized>(net: &mut Network, u: Item, rng: &mut R) -> Result<Served> {
    let k = net.begin(u)?;
    if k == 0 {
        return net.finish(u, k);
    }
    let s = net.tree.host(u);
    let mut path: Vec<Server> = Vec::with_capacity(k + 1);
    path.push(0);
    for _ in 0..k {
        let p = *path.last().unwrap();
        path.push(2 * p + 1 + rng.gen::<bool>() as usize);
    }
    let end = path[k];
    let mut moves = Vec::with_capacity(k + 2);
    moves.push((u, 0));
    if end != s {
        moves.push((net.tree.guest(end), s));
    }
    for j in (0..k).rev() {
        moves.push((net.tree.guest(path[j]), path[j + 1]));
    }
    net.tree.relocate_chain(&moves, &mut net.ledger)?;
    net.finish(u, k)
}

/// Keeps the tree exactly MRU: `u` goes to the root and the oldest item of
/// every level above `u` drops one level, each into the slot vacated by the
/// oldest item of the next level (the deepest one into `u`'s old server).
pub fn serve_max_push(net: &mut Network, u: Item) -> Result<Served> {
    net.tree.check_item(u)?;
    if !levels_ordered(&net.tree, &net.ranks) {
        return Err(Error::NotMru);
    }
    let k = net.begin(u)?;
    if k >= 1 {
        let oldest: Vec<Item> = (0..k).map(|d| net.oldest_at_depth(d)).collect();
        let mut moves = Vec::with_capacity(k + 1);
        moves.push((u, 0));
        let mut dest = net.tree.host(u);
        for &w in oldest.iter().rev() {
            moves.push((w, dest));
            dest = net.tree.host(w);
        }
        net.tree.relocate_chain(&moves, &mut net.ledger)?;
    }
    net.finish(u, k)
}

/// Validates a frequency vector over a perfect number of items.
pub fn check_distribution(freq: &[f64]) -> Result<()> {
    if crate::tree::levels_for(freq.len()).is_none() {
        return Err(Error::MalformedDistribution(format!(
            "{} items is not of the form 2^d - 1",
            freq.len()
        )));
    }
    if let Some((i, f)) = freq.iter().enumerate().find(|(_, f)| !f.is_finite() || **f < 0.0) {
        return Err(Error::MalformedDistribution(format!("item {i} has frequency {f}")));
    }
    let sum: f64 = freq.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::MalformedDistribution(format!("frequencies sum to {sum}")));
    }
    Ok(())
}

/// Most-frequently-used fixed tree: items fill servers top-down, left to
/// right, by descending frequency (ties by ascending item id).
pub fn build_static_mfu(freq: &[f64]) -> Result<TreeState> {
    check_distribution(freq)?;
    let mut order: Vec<Item> = (0..freq.len()).collect();
    order.sort_by(|&a, &b| freq[b].total_cmp(&freq[a]).then(a.cmp(&b)));
    TreeState::from_guests(order)
}

/// `sum_v freq(v) * depth(v)`.
pub fn expected_path_length(tree: &TreeState, freq: &[f64]) -> Result<f64> {
    if freq.len() != tree.len() {
        return Err(Error::SizeMismatch(freq.len(), tree.len()));
    }
    check_distribution(freq)?;
    Ok(freq
        .iter()
        .enumerate()
        .map(|(v, f)| f * tree.item_depth(v) as f64)
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    MoveHalf,
    RandomPush,
    MaxPush,
    StaticMfu,
    Fixed,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::MoveHalf,
        PolicyKind::RandomPush,
        PolicyKind::MaxPush,
        PolicyKind::StaticMfu,
        PolicyKind::Fixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::MoveHalf => "move-half",
            PolicyKind::RandomPush => "random-push",
            PolicyKind::MaxPush => "max-push",
            PolicyKind::StaticMfu => "static-mfu",
            PolicyKind::Fixed => "fixed",
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown policy '{s}'")))
    }
}

/// A configured policy. Random-Push owns its random stream; Static-MFU owns
/// the frequencies its fixed layout was built from.
#[derive(Clone, Debug)]
pub enum Policy {
    MoveHalf,
    RandomPush { rng: Box<ChaCha8Rng> },
    MaxPush,
    StaticMfu { freq: Vec<f64> },
    Fixed,
}

impl Policy {
    pub fn move_half() -> Self {
        Policy::MoveHalf
    }

    pub fn random_push(seed: u64) -> Self {
        Policy::RandomPush {
            rng: Box::new(ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    pub fn max_push() -> Self {
        Policy::MaxPush
    }

    pub fn static_mfu(freq: Vec<f64>) -> Result<Self> {
        check_distribution(&freq)?;
        Ok(Policy::StaticMfu { freq })
    }

    pub fn fixed() -> Self {
        Policy::Fixed
    }

    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::MoveHalf => PolicyKind::MoveHalf,
            Policy::RandomPush { .. } => PolicyKind::RandomPush,
            Policy::MaxPush => PolicyKind::MaxPush,
            Policy::StaticMfu { .. } => PolicyKind::StaticMfu,
            Policy::Fixed => PolicyKind::Fixed,
        }
    }

    /// Starting layout: identity for the online policies, the MFU layout for
    /// Static-MFU.
    pub fn initial_tree(&self, n: usize) -> Result<TreeState> {
        match self {
            Policy::StaticMfu { freq } => {
                if freq.len() != n {
                    return Err(Error::SizeMismatch(freq.len(), n));
                }
                build_static_mfu(freq)
            }
            _ => TreeState::new(n),
        }
    }

    pub fn network(&self, n: usize) -> Result<Network> {
        Ok(Network::new(self.initial_tree(n)?))
    }

    pub fn serve(&mut self, net: &mut Network, u: Item) -> Result<Served> {
        match self {
            Policy::MoveHalf => serve_move_half(net, u),
            Policy::RandomPush { rng } => serve_random_push(net, u, rng),
            Policy::MaxPush => serve_max_push(net, u),
            Policy::StaticMfu { .. } | Policy::Fixed => serve_fixed(net, u),
        }
    }
}
