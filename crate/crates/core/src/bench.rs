//! Simulation harness: single runs, policy × workload matrices, depth and
//! W statistics for Random-Push, and conditional depth sampling.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{serve_random_push, Network, Policy, PolicyKind, Served};
use crate::error::{Error, Result};
use crate::oracle::{Configuration, OptOracle};
use crate::report::RunReport;
use crate::tree::{level_range, Item, TreeState};
use crate::workloads::{generate, WorkloadKind, WorkloadSpec};
use crate::workset::is_mru;

/// Guards the cost / WS ratio when the bound is zero.
pub const RATIO_EPSILON: f64 = 1e-12;

/// SplitMix64 finalizer; separates the policy's coin stream from the
/// workload stream that uses the same run seed.
pub fn mix_seed(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub policy: PolicyKind,
    pub workload: WorkloadSpec,
    pub check_mru: bool,
    pub oracle: bool,
    pub depth_by_rank: bool,
}

impl RunConfig {
    pub fn new(policy: PolicyKind, workload: WorkloadSpec) -> Self {
        Self {
            policy,
            workload,
            check_mru: false,
            oracle: false,
            depth_by_rank: false,
        }
    }
}

/// Builds the policy for a run. Static-MFU is laid out by the empirical
/// frequencies of the sequence it will serve.
pub fn make_policy(kind: PolicyKind, n: usize, items: &[Item], seed: u64) -> Result<Policy> {
    Ok(match kind {
        PolicyKind::MoveHalf => Policy::move_half(),
        PolicyKind::RandomPush => Policy::random_push(mix_seed(seed)),
        PolicyKind::MaxPush => Policy::max_push(),
        PolicyKind::Fixed => Policy::fixed(),
        PolicyKind::StaticMfu => {
            let seq = crate::workloads::RequestSequence { items: items.to_vec() };
            Policy::static_mfu(seq.frequencies(n))?
        }
    })
}

/// Everything a simulation produced.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub initial: TreeState,
    pub net: Network,
    pub served: Vec<Served>,
    pub mru_violations: u64,
}

impl Simulation {
    /// Mean depth per rank `1..=R`, where `R` is the longest prefix of
    /// ranks that were all observed.
    pub fn mean_depth_by_rank(&self) -> Vec<f64> {
        let n = self.net.len();
        let mut sum = vec![0u64; n + 1];
        let mut count = vec![0u64; n + 1];
        for s in &self.served {
            sum[s.rank] += s.depth as u64;
            count[s.rank] += 1;
        }
        (1..=n)
            .take_while(|&r| count[r] > 0)
            .map(|r| sum[r] as f64 / count[r] as f64)
            .collect()
    }
}

pub fn simulate(policy: &mut Policy, n: usize, items: &[Item], check_mru: bool) -> Result<Simulation> {
    let mut net = policy.network(n)?;
    let initial = net.tree.clone();
    let mut served = Vec::with_capacity(items.len());
    let mut violations = 0;
    for &v in items {
        served.push(policy.serve(&mut net, v)?);
        if check_mru && !is_mru(&net.tree, &net.ranks) {
            violations += 1;
        }
    }
    Ok(Simulation {
        initial,
        net,
        served,
        mru_violations: violations,
    })
}

pub fn run(config: &RunConfig) -> Result<RunReport> {
    let spec = &config.workload;
    let n = spec.n;
    if crate::tree::levels_for(n).is_none() {
        return Err(Error::NotPerfect(n));
    }
    if config.oracle && n > 7 {
        return Err(Error::InstanceTooLarge(format!("the offline oracle is refused for n = {n} (limit 7)")));
    }
    let seq = generate(spec)?;
    let mut policy = make_policy(config.policy, n, &seq.items, spec.seed)?;
    let sim = simulate(&mut policy, n, &seq.items, config.check_mru)?;
    let opt_cost = if config.oracle {
        let oracle = OptOracle::new(n)?;
        Some(oracle.opt_cost(&seq.items, &Configuration::from_tree(&sim.initial))?)
    } else {
        None
    };
    let ledger = &sim.net.ledger;
    let ws = sim.net.ws.total;
    let cost = ledger.total();
    Ok(RunReport {
        policy: config.policy.name().to_string(),
        workload: spec.to_string(),
        n,
        m: seq.len(),
        seed: spec.seed,
        access_total: ledger.access_total,
        adjust_total: ledger.adjust_total,
        cost_total: cost,
        ws_bound: ws,
        ratio_cost_over_ws: cost as f64 / ws.max(RATIO_EPSILON),
        mru_violations: config.check_mru.then_some(sim.mru_violations),
        mean_depth_by_rank: config.depth_by_rank.then(|| sim.mean_depth_by_rank()),
        opt_cost,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixConfig {
    pub policies: Vec<PolicyKind>,
    pub workloads: Vec<WorkloadKind>,
    pub sizes: Vec<usize>,
    pub m: usize,
    pub master_seed: u64,
    pub seeds: usize,
    pub check_mru: bool,
    pub oracle: bool,
}

impl MatrixConfig {
    /// Runs in output order: size, workload, policy, replicate. Replicate
    /// `r` uses seed `master_seed + r`, so every policy sees the same
    /// sequences.
    pub fn runs(&self) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for &n in &self.sizes {
            for kind in &self.workloads {
                for &policy in &self.policies {
                    for r in 0..self.seeds {
                        let workload = WorkloadSpec {
                            kind: kind.clone(),
                            n,
                            m: self.m,
                            seed: self.master_seed.wrapping_add(r as u64),
                        };
                        out.push(RunConfig {
                            policy,
                            workload,
                            check_mru: self.check_mru,
                            oracle: self.oracle,
                            depth_by_rank: false,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Runs in parallel; results come back in run order.
pub fn run_matrix(config: &MatrixConfig) -> Result<Vec<RunReport>> {
    config.runs().par_iter().map(run).collect()
}

/// Per-rank sample sums; index 0 is unused.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DepthStats {
    pub depth_count: Vec<u64>,
    pub depth_sum: Vec<u64>,
    pub w_count: Vec<u64>,
    pub w_sum: Vec<u64>,
}

impl DepthStats {
    fn new(n: usize) -> Self {
        Self {
            depth_count: vec![0; n + 1],
            depth_sum: vec![0; n + 1],
            w_count: vec![0; n + 1],
            w_sum: vec![0; n + 1],
        }
    }

    fn merge(mut self, other: &Self) -> Self {
        for (a, b) in [
            (&mut self.depth_count, &other.depth_count),
            (&mut self.depth_sum, &other.depth_sum),
            (&mut self.w_count, &other.w_count),
            (&mut self.w_sum, &other.w_sum),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self
    }

    pub fn max_rank(&self) -> usize {
        self.depth_count.len().saturating_sub(1)
    }

    pub fn depth_samples(&self) -> u64 {
        self.depth_count.iter().sum()
    }

    pub fn w_samples(&self) -> u64 {
        self.w_count.iter().sum()
    }

    pub fn mean_depth(&self, rank: usize) -> Option<f64> {
        let c = *self.depth_count.get(rank)?;
        (c > 0).then(|| self.depth_sum[rank] as f64 / c as f64)
    }

    pub fn mean_w(&self, rank: usize) -> Option<f64> {
        let c = *self.w_count.get(rank)?;
        (c > 0).then(|| self.w_sum[rank] as f64 / c as f64)
    }
}

/// One request observed during a Random-Push run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sample {
    pub time: usize,
    /// Rank before the request.
    pub rank: usize,
    /// Depth the item was found at.
    pub depth: usize,
    /// Requests since the item's previous request whose target was strictly
    /// deeper than it when requested; `None` unless that previous request
    /// was at time `>= warmup`.
    pub w: Option<u64>,
}

/// Replays one workload under Random-Push and reports every request.
pub fn random_push_samples(spec: &WorkloadSpec, warmup: usize, mut visit: impl FnMut(Sample)) -> Result<()> {
    let n = spec.n;
    let seq = generate(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed));
    let mut net = Network::identity(n)?;
    let mut w = vec![0u64; n];
    let mut last: Vec<Option<usize>> = vec![None; n];
    for (t, &u) in seq.items.iter().enumerate() {
        let depth = net.tree.item_depth(u);
        let rank = net.ranks.rank(u)?;
        let valid = matches!(last[u], Some(p) if p >= warmup);
        visit(Sample {
            time: t,
            rank,
            depth,
            w: valid.then_some(w[u]),
        });
        w[u] = 0;
        last[u] = Some(t);
        for s in 0..level_range(depth).start {
            w[net.tree.guest(s)] += 1;
        }
        serve_random_push(&mut net, u, &mut rng)?;
    }
    Ok(())
}

fn seeded_specs(kind: &WorkloadKind, n: usize, len: usize, seeds: &[u64]) -> Result<Vec<WorkloadSpec>> {
    if crate::tree::levels_for(n).is_none() {
        return Err(Error::NotPerfect(n));
    }
    Ok(seeds
        .iter()
        .map(|&seed| WorkloadSpec {
            kind: kind.clone(),
            n,
            m: len,
            seed,
        })
        .collect())
}

/// Random-Push statistics over one run per seed.
///
/// Depth samples: (rank before update, depth found at) for every request at
/// time `>= warmup`. W samples as in [`Sample::w`].
pub fn depth_stats(kind: &WorkloadKind, n: usize, m: usize, warmup: usize, seeds: &[u64]) -> Result<DepthStats> {
    let per_seed = seeded_specs(kind, n, warmup + m, seeds)?
        .par_iter()
        .map(|spec| {
            let mut stats = DepthStats::new(n);
            random_push_samples(spec, warmup, |s| {
                if s.time >= warmup {
                    stats.depth_count[s.rank] += 1;
                    stats.depth_sum[s.rank] += s.depth as u64;
                }
                if let Some(w) = s.w {
                    stats.w_count[s.rank] += 1;
                    stats.w_sum[s.rank] += w;
                }
            })?;
            Ok(stats)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_seed.iter().fold(DepthStats::new(n), |acc, s| acc.merge(s)))
}

/// Histogram of the depth at which items of the given rank were found,
/// restricted to requests with the given W.
pub fn joint_depth_histogram(
    kind: &WorkloadKind,
    n: usize,
    m: usize,
    warmup: usize,
    seeds: &[u64],
    rank: usize,
    w: u64,
) -> Result<Vec<u64>> {
    let levels = crate::tree::levels_for(n).ok_or(Error::NotPerfect(n))?;
    let parts = seeded_specs(kind, n, warmup + m, seeds)?
        .par_iter()
        .map(|spec| {
            let mut hist = vec![0u64; levels];
            random_push_samples(spec, warmup, |s| {
                if s.rank == rank && s.w == Some(w) {
                    hist[s.depth] += 1;
                }
            })?;
            Ok(hist)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.iter().fold(vec![0; levels], |mut acc, h| {
        acc.iter_mut().zip(h).for_each(|(a, b)| *a += b);
        acc
    }))
}

/// Mean depth per rank `1..=n` (`None` where unobserved).
pub fn measure_depth_by_rank(n: usize, m: usize, warmup: usize, seeds: &[u64]) -> Result<Vec<Option<f64>>> {
    let stats = depth_stats(&WorkloadKind::Uniform, n, m, warmup, seeds)?;
    Ok((1..=n).map(|r| stats.mean_depth(r)).collect())
}

/// Mean W per rank `1..=n` (`None` where unobserved).
pub fn measure_w(n: usize, m: usize, warmup: usize, seeds: &[u64]) -> Result<Vec<Option<f64>>> {
    let stats = depth_stats(&WorkloadKind::Uniform, n, m, warmup, seeds)?;
    Ok((1..=n).map(|r| stats.mean_w(r)).collect())
}

/// Depths of an item at the end of accepted trials.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionalDepths {
    pub counts: Vec<u64>,
    /// Trials abandoned because no request could keep the targets reachable.
    pub rejected: u64,
}

impl ConditionalDepths {
    pub fn accepted(&self) -> u64 {
        self.counts.iter().sum()
    }
}

const TRIALS_PER_CHUNK: usize = 1000;

/// Samples the depth of an item `v` under Random-Push after an adaptive
/// request pattern in which, since `v`'s last request, exactly `rank - 1`
/// distinct other items were requested and exactly `deeper` requests
/// targeted an item below `v`.
///
/// The adversary starts from a random layout on `rank + 2` levels and picks
/// each request greedily: a request below `v` is spent on an already
/// requested item when more of those are still needed than new items, and
/// new items are introduced above `v` while that is possible. Of the
/// `trials` attempts, those where the remaining targets become unreachable
/// are rejected; the histogram holds the rest.
pub fn conditional_depths(rank: usize, deeper: usize, trials: usize, seed: u64) -> Result<ConditionalDepths> {
    if rank == 0 {
        return Err(Error::Config("rank must be at least 1".into()));
    }
    let levels = rank + 2;
    let n = (1usize << levels) - 1;
    let parts = chunked(trials, seed, |count, rng| {
        let mut out = ConditionalDepths {
            counts: vec![0; levels],
            rejected: 0,
        };
        for _ in 0..count {
            match one_trial(rank, deeper, n, rng)? {
                Some(d) => out.counts[d] += 1,
                None => out.rejected += 1,
            }
        }
        Ok(out)
    })?;
    Ok(parts.into_iter().fold(
        ConditionalDepths {
            counts: vec![0; levels],
            rejected: 0,
        },
        |mut acc, p| {
            for (a, b) in acc.counts.iter_mut().zip(&p.counts) {
                *a += b;
            }
            acc.rejected += p.rejected;
            acc
        },
    ))
}

/// Depth of `v` right after the `steps`-th request below it, when every
/// request after `v`'s goes to a never-requested leaf item of a tree with
/// `levels` levels. Requires `levels >= steps + 2` so `v` never reaches the
/// leaves.
pub fn forward_depths(levels: usize, steps: usize, trials: usize, seed: u64) -> Result<Vec<u64>> {
    if levels < steps + 2 {
        return Err(Error::Config(format!("{levels} levels cannot hold {steps} pushes")));
    }
    let n = (1usize << levels) - 1;
    let parts = chunked(trials, seed, |count, rng| {
        let mut hist = vec![0u64; levels];
        let template = Network::identity(n)?;
        for _ in 0..count {
            let mut net = template.clone();
            let v = net.tree.guest(0);
            serve_random_push(&mut net, v, rng)?;
            let mut seen = HashSet::new();
            for _ in 0..steps {
                let j = net.tree.item_depth(v);
                let x = fresh_below(&net, v, &seen, j, rng).expect("leaves stay below v");
                seen.insert(x);
                serve_random_push(&mut net, x, rng)?;
            }
            hist[net.tree.item_depth(v)] += 1;
        }
        Ok(hist)
    })?;
    Ok(parts.iter().fold(vec![0; levels], |mut acc, h| {
        acc.iter_mut().zip(h).for_each(|(a, b)| *a += b);
        acc
    }))
}

/// Splits `trials` into fixed chunks with their own seeded streams, so the
/// result does not depend on scheduling.
fn chunked<T: Send>(
    trials: usize,
    seed: u64,
    work: impl Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..trials.div_ceil(TRIALS_PER_CHUNK))
        .into_par_iter()
        .map(|c| {
            let count = TRIALS_PER_CHUNK.min(trials - c * TRIALS_PER_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed.wrapping_add(c as u64)));
            work(count, &mut rng)
        })
        .collect()
}

fn one_trial(rank: usize, deeper: usize, n: usize, rng: &mut ChaCha8Rng) -> Result<Option<usize>> {
    let mut guests: Vec<Item> = (0..n).collect();
    guests.shuffle(rng);
    let v = guests[0];
    let mut net = Network::new(TreeState::from_guests(guests)?);
    serve_random_push(&mut net, v, rng)?;

    let mut seen: HashSet<Item> = HashSet::with_capacity(rank);
    let mut below = 0usize;
    let max_steps = 64 + 8 * (rank + deeper);
    for _ in 0..max_steps {
        let fresh_needed = rank - 1 - seen.len();
        let below_needed = deeper - below;
        if fresh_needed == 0 && below_needed == 0 {
            return Ok(Some(net.tree.item_depth(v)));
        }
        let j = net.tree.item_depth(v);
        let old_below = || -> Vec<Item> {
            let mut c: Vec<Item> = seen.iter().copied().filter(|&x| net.tree.item_depth(x) > j).collect();
            c.sort_unstable();
            c
        };
        let target = if below_needed > fresh_needed {
            let old = old_below();
            if let Some(&x) = old.choose(rng) {
                Some(x)
            } else if fresh_needed > 0 {
                fresh_below(&net, v, &seen, j, rng)
            } else {
                None
            }
        } else if below_needed == fresh_needed {
            fresh_below(&net, v, &seen, j, rng)
        } else {
            let above: Vec<Item> = (0..level_range(j + 1).start)
                .map(|s| net.tree.guest(s))
                .filter(|&x| x != v && !seen.contains(&x))
                .collect();
            if let Some(&x) = above.choose(rng) {
                Some(x)
            } else if below_needed > 0 {
                fresh_below(&net, v, &seen, j, rng)
            } else {
                let mut shuffle: Vec<Item> = seen.iter().copied().filter(|&x| net.tree.item_depth(x) <= j).collect();
                shuffle.sort_unstable();
                shuffle.choose(rng).copied()
            }
        };
        let Some(x) = target else {
            return Ok(None);
        };
        if net.tree.item_depth(x) > j {
            below += 1;
        }
        seen.insert(x);
        serve_random_push(&mut net, x, rng)?;
    }
    Ok(None)
}

/// A never-requested item on the leaf level, which is below `v` unless `v`
/// is itself a leaf.
fn fresh_below(net: &Network, v: Item, seen: &HashSet<Item>, j: usize, rng: &mut ChaCha8Rng) -> Option<Item> {
    let leaves = level_range(net.tree.levels() - 1);
    if j >= net.tree.levels() - 1 {
        return None;
    }
    for _ in 0..64 {
        let x = net.tree.guest(rng.gen_range(leaves.clone()));
        if x != v && !seen.contains(&x) {
            return Some(x);
        }
    }
    let candidates: Vec<Item> = leaves
        .map(|s| net.tree.guest(s))
        .filter(|&x| x != v && !seen.contains(&x))
        .collect();
    candidates.choose(rng).copied()
}
