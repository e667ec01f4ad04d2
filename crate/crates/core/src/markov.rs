//! Exact analysis of the depth chain used to bound Random-Push.
//!
//! The chain lives on states `0..i`. From state `j < i - 1` it moves to
//! `j + 1` with probability `2^-j` and stays otherwise; state `i - 1` is
//! absorbing. All quantities here are computed by dynamic programming over
//! the state vector, never by sampling.

use serde::{Deserialize, Serialize};

const SUM_TOLERANCE: f64 = 1e-12;

/// Finite probability distribution over states `0..len`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthDistribution {
    probs: Vec<f64>,
}

impl DepthDistribution {
    /// Accepts non-negative entries summing to one (within 1e-12).
    pub fn new(probs: Vec<f64>) -> Option<Self> {
        let sum: f64 = probs.iter().sum();
        let valid = probs.iter().all(|p| p.is_finite() && *p >= 0.0) && (sum - 1.0).abs() <= SUM_TOLERANCE;
        valid.then_some(Self { probs })
    }

    pub fn point_mass(state: usize, len: usize) -> Self {
        let mut probs = vec![0.0; len.max(state + 1)];
        probs[state] = 1.0;
        Self { probs }
    }

    /// Normalized histogram of observed states.
    pub fn from_counts(counts: &[u64]) -> Option<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return None;
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Some(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, state: usize) -> f64 {
        self.probs.get(state).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(j, p)| j as f64 * p).sum()
    }

    /// `P[X > z]` for `z = 0..len`.
    pub fn tails(&self, len: usize) -> Vec<f64> {
        let len = len.max(self.len());
        let mut out = vec![0.0; len];
        let mut acc = 0.0;
        for z in (0..len).rev() {
            out[z] = acc;
            acc += self.get(z);
        }
        out
    }
}

/// Probability of leaving state `j` in a chain with `i` states.
fn advance_prob(j: usize, i: usize) -> f64 {
    if j + 1 >= i {
        0.0
    } else {
        0.5f64.powi(j as i32)
    }
}

fn step(probs: &[f64]) -> Vec<f64> {
    let i = probs.len();
    let mut next = vec![0.0; i];
    for (j, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let up = advance_prob(j, i);
        next[j] += p * (1.0 - up);
        if up > 0.0 {
            next[j + 1] += p * up;
        }
    }
    next
}

/// Distribution of the state after `w` steps from state 0.
///
/// Panics if `i == 0`.
pub fn walk_distribution(i: usize, w: usize) -> DepthDistribution {
    assert!(i >= 1, "the chain needs at least one state");
    let mut probs = vec![0.0; i];
    probs[0] = 1.0;
    for _ in 0..w {
        probs = step(&probs);
    }
    DepthDistribution { probs }
}

/// Expected state after each of `0..=w_max` steps.
pub fn expected_states(i: usize, w_max: usize) -> Vec<f64> {
    assert!(i >= 1, "the chain needs at least one state");
    let mut probs = vec![0.0; i];
    probs[0] = 1.0;
    let mut out = Vec::with_capacity(w_max + 1);
    out.push(0.0);
    for _ in 0..w_max {
        probs = step(&probs);
        out.push(probs.iter().enumerate().map(|(j, p)| j as f64 * p).sum());
    }
    out
}

pub fn expected_state(i: usize, w: usize) -> f64 {
    walk_distribution(i, w).mean()
}

/// `ceil(log2(w)) + 1`, the bound on the expected state for `w >= 2`.
pub fn expected_state_bound(w: usize) -> f64 {
    assert!(w >= 1);
    (usize::BITS - (w - 1).leading_zeros()) as f64 + 1.0
}

/// `sum_{j=0}^{w} C(w, j) ((w-1)/w)^(w-j) (1/w)^j j`, with `0^0 = 1`.
///
/// This is the mean of a Binomial(w, 1/w) variable and equals one.
pub fn binomial_identity(w: usize) -> f64 {
    assert!(w >= 1);
    let wf = w as f64;
    let stay = (wf - 1.0) / wf;
    let go = 1.0 / wf;
    let mut coeff = 1.0f64;
    let mut sum = 0.0;
    for j in 0..=w {
        if j > 0 {
            coeff = coeff * (w - j + 1) as f64 / j as f64;
        }
        let term = coeff * pow0(stay, w - j) * pow0(go, j) * j as f64;
        sum += term;
    }
    sum
}

fn pow0(base: f64, exp: usize) -> f64 {
    if exp == 0 {
        1.0
    } else {
        base.powi(exp as i32)
    }
}

/// First differences of the expected state over `1..=w_max` never increase.
pub fn concavity_check(i: usize, w_max: usize) -> bool {
    let e = expected_states(i, w_max);
    e.windows(2)
        .map(|w| w[1] - w[0])
        .collect::<Vec<_>>()
        .windows(2)
        .all(|d| d[1] <= d[0] + SUM_TOLERANCE)
}

/// `X` is stochastically smaller than `Y`: `P[X > z] <= P[Y > z]` for all z.
pub fn stochastically_leq(x: &DepthDistribution, y: &DepthDistribution) -> bool {
    stochastically_leq_within(x, y, |_, _| SUM_TOLERANCE)
}

/// Dominance with a per-threshold slack, `slack(z, P[Y > z])`.
pub fn stochastically_leq_within(
    x: &DepthDistribution,
    y: &DepthDistribution,
    slack: impl Fn(usize, f64) -> f64,
) -> bool {
    let len = x.len().max(y.len());
    let (tx, ty) = (x.tails(len), y.tails(len));
    tx.iter()
        .zip(&ty)
        .enumerate()
        .all(|(z, (px, py))| *px <= *py + slack(z, *py))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Enumerates every coin sequence of a w-step walk.
    fn brute_walk(i: usize, w: usize) -> Vec<f64> {
        fn go(i: usize, state: usize, left: usize, p: f64, out: &mut [f64]) {
            if left == 0 {
                out[state] += p;
                return;
            }
            let up = if state + 1 >= i { 0.0 } else { 0.5f64.powi(state as i32) };
            if up > 0.0 {
                go(i, state + 1, left - 1, p * up, out);
            }
            if up < 1.0 {
                go(i, state, left - 1, p * (1.0 - up), out);
            }
        }
        let mut out = vec![0.0; i];
        go(i, 0, w, 1.0, &mut out);
        out
    }

    #[test]
    fn short_walks() {
        assert_eq!(walk_distribution(5, 0), DepthDistribution::point_mass(0, 5));
        for i in 2..8 {
            assert_eq!(walk_distribution(i, 1), DepthDistribution::point_mass(1, i));
        }
        let d = walk_distribution(3, 2);
        assert_eq!(d.probs(), &[0.0, 0.5, 0.5]);
        assert_eq!(d.mean(), 1.5);
        assert_eq!(walk_distribution(1, 10).probs(), &[1.0]);
    }

    #[test]
    fn walk_matches_enumeration() {
        for i in 1..7 {
            for w in 0..12 {
                let exact = brute_walk(i, w);
                let dp = walk_distribution(i, w);
                for (a, b) in exact.iter().zip(dp.probs()) {
                    assert!((a - b).abs() < 1e-12, "i={i} w={w}");
                }
            }
        }
    }

    #[test]
    fn expected_states_examples() {
        assert_eq!(expected_state(2, 100), 1.0);
        assert_eq!(expected_state(3, 2), 1.5);
        assert!(expected_state(3, 2) < expected_state_bound(2));
        assert_eq!(expected_state_bound(2), 2.0);
        assert!(expected_state(64, 1024) < 11.0);
        assert_eq!(expected_state_bound(1024), 11.0);
        assert_eq!(expected_state_bound(1025), 12.0);
        // at w = 1 the bound is attained, so the strict form starts at 2
        assert_eq!(expected_state(5, 1), expected_state_bound(1));
    }

    #[test]
    fn binomial_identity_small_cases() {
        assert_eq!(binomial_identity(1), 1.0);
        // 2 * (1/2)(1/2) * 1 + (1/4) * 2
        assert!((binomial_identity(2) - 1.0).abs() < 1e-15);
        assert!((binomial_identity(50) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn concavity_examples() {
        assert!(concavity_check(2, 50));
        assert!(concavity_check(16, 256));
        assert!(concavity_check(64, 1024));
    }

    #[test]
    fn dominance_examples() {
        let zero = DepthDistribution::point_mass(0, 2);
        let one = DepthDistribution::point_mass(1, 2);
        assert!(stochastically_leq(&zero, &zero));
        assert!(stochastically_leq(&zero, &one));
        assert!(!stochastically_leq(&one, &zero));
        // supports of different length are padded
        let long = DepthDistribution::point_mass(3, 6);
        assert!(stochastically_leq(&one, &long));
        assert!(!stochastically_leq(&long, &one));
    }

    #[test]
    fn distribution_validation() {
        assert!(DepthDistribution::new(vec![0.5, 0.5]).is_some());
        assert!(DepthDistribution::new(vec![0.5, 0.6]).is_none());
        assert!(DepthDistribution::new(vec![1.5, -0.5]).is_none());
        assert_eq!(DepthDistribution::from_counts(&[1, 3]).unwrap().probs(), &[0.25, 0.75]);
        assert!(DepthDistribution::from_counts(&[0, 0]).is_none());
    }

    fn dist_strategy() -> impl Strategy<Value = DepthDistribution> {
        proptest::collection::vec(0u32..5, 1..6).prop_filter_map("nonzero", |c| {
            DepthDistribution::from_counts(&c.iter().map(|&x| x as u64).collect::<Vec<_>>())
        })
    }

    proptest! {
        #[test]
        fn walks_are_stochastic(i in 1usize..40, w in 0usize..200) {
            let d = walk_distribution(i, w);
            let sum: f64 = d.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(d.probs().iter().all(|&p| p >= 0.0));
            for (j, &p) in d.probs().iter().enumerate() {
                if j > w.min(i - 1) {
                    prop_assert_eq!(p, 0.0);
                }
            }
        }

        #[test]
        fn expectation_is_monotone(i in 1usize..30, w_max in 1usize..200) {
            let e = expected_states(i, w_max);
            for pair in e.windows(2) {
                prop_assert!(pair[1] >= pair[0] - 1e-12);
            }
        }

        #[test]
        fn dominance_is_antisymmetric(x in dist_strategy(), y in dist_strategy()) {
            if stochastically_leq(&x, &y) && stochastically_leq(&y, &x) {
                let len = x.len().max(y.len());
                for z in 0..len {
                    prop_assert!((x.get(z) - y.get(z)).abs() < 1e-9);
                }
            }
            prop_assert!(stochastically_leq(&x, &x));
        }
    }
}
