//! Finite normal-form games with dense payoff tensors.
//!
//! A game stores one real tensor per player over the joint action space,
//! row-major with the first player's index slowest.  All evaluation routines
//! (mixed payoffs, payoff fields, equilibrium gaps) are pure functions of an
//! immutable game, so values can be shared freely across threads.
//!
//! Norm conventions used throughout the crate: strategy profiles are measured
//! in the block sum `||x|| = sum_i ||x_i||_1`, payoff vectors in the dual
//! block max norm.  Under this pairing `L_i = max_a |u_i(a)|` is a Lipschitz
//! modulus for the payoff field of player `i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for simplex membership checks.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A mixed-strategy profile: one probability vector per player.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedProfile {
    blocks: Vec<Vec<f64>>,
}

impl MixedProfile {
    /// Validates that every block is a simplex point (entries >= 0, sum
    /// within [`SIMPLEX_TOL`] of one).  Inputs are never renormalized here;
    /// use [`MixedProfile::renormalized`] for that.
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            if b.is_empty() {
                return Err(Error::ShapeMismatch(format!("player {i} has no actions")));
            }
            let mut sum = 0.0;
            for (a, &p) in b.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::Invalid {
                        path: format!("profile[{i}][{a}]"),
                        reason: format!("expected a probability, got {p}"),
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::Invalid {
                    path: format!("profile[{i}]"),
                    reason: format!("entries sum to {sum}, not 1"),
                });
            }
        }
        Ok(Self { blocks })
    }

    /// Divide-by-sum helper for inputs that are positive but unnormalized.
    pub fn renormalized(mut blocks: Vec<Vec<f64>>) -> Result<Self> {
        for (i, b) in blocks.iter_mut().enumerate() {
            let sum: f64 = b.iter().sum();
            if !(sum > 0.0) || !sum.is_finite() {
                return Err(Error::Invalid {
                    path: format!("profile[{i}]"),
                    reason: format!("cannot renormalize block with sum {sum}"),
                });
            }
            for p in b.iter_mut() {
                *p /= sum;
            }
        }
        Self::new(blocks)
    }

    pub fn uniform(action_counts: &[usize]) -> Self {
        Self {
            blocks: action_counts
                .iter()
                .map(|&n| vec![1.0 / n as f64; n])
                .collect(),
        }
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn block(&self, player: usize) -> &[f64] {
        &self.blocks[player]
    }

    /// True iff every entry is strictly positive.
    pub fn fully_mixed(&self) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|&p| p > 0.0))
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks.iter().flatten().copied().collect()
    }

    pub(crate) fn from_blocks_unchecked(blocks: Vec<Vec<f64>>) -> Self {
        Self { blocks }
    }
}

/// Per-player payoff vectors `v_i(x)` at a profile.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffVectors {
    blocks: Vec<Vec<f64>>,
}

impl PayoffVectors {
    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn block(&self, player: usize) -> &[f64] {
        &self.blocks[player]
    }
}

#[derive(Serialize, Deserialize)]
struct GameJson {
    players: usize,
    actions: Vec<usize>,
    payoffs: Vec<f64>,
}

/// A finite normal-form game.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGame {
    action_counts: Vec<usize>,
    /// Per player: flat row-major tensor over the joint action space.
    payoffs: Vec<Vec<f64>>,
    num_outcomes: usize,
}

impl FiniteGame {
    pub fn new(action_counts: Vec<usize>, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        if action_counts.len() < 2 {
            return Err(Error::Invalid {
                path: "players".into(),
                reason: format!("need at least 2 players, got {}", action_counts.len()),
            });
        }
        for (i, &n) in action_counts.iter().enumerate() {
            if n < 2 {
                return Err(Error::Invalid {
                    path: format!("actions[{i}]"),
                    reason: format!("need at least 2 actions, got {n}"),
                });
            }
        }
        let num_outcomes = action_counts
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::Invalid {
                path: "actions".into(),
                reason: "joint action space overflows".into(),
            })?;
        if payoffs.len() != action_counts.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} payoff tensors for {} players",
                payoffs.len(),
                action_counts.len()
            )));
        }
        for (i, tensor) in payoffs.iter().enumerate() {
            if tensor.len() != num_outcomes {
                return Err(Error::Invalid {
                    path: format!("payoffs[player {i}]"),
                    reason: format!("expected {} entries, got {}", num_outcomes, tensor.len()),
                });
            }
            for (k, &u) in tensor.iter().enumerate() {
                if !u.is_finite() {
                    return Err(Error::Invalid {
                        path: format!("payoffs[{}]", i * num_outcomes + k),
                        reason: format!("non-finite entry {u}"),
                    });
                }
            }
        }
        Ok(Self {
            action_counts,
            payoffs,
            num_outcomes,
        })
    }

    /// Parse a game-JSON document:
    /// `{"players": N, "actions": [..], "payoffs": [flat, player-major]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: GameJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if raw.players != raw.actions.len() {
            return Err(Error::Invalid {
                path: "actions".into(),
                reason: format!(
                    "length {} does not match players = {}",
                    raw.actions.len(),
                    raw.players
                ),
            });
        }
        // Validate the flat length before splitting so an index in an error
        // message refers to the document layout.
        let mut outcomes = 1usize;
        for &n in &raw.actions {
            outcomes = outcomes.checked_mul(n).ok_or_else(|| Error::Invalid {
                path: "actions".into(),
                reason: "joint action space overflows".into(),
            })?;
        }
        let expected = outcomes * raw.players;
        if raw.payoffs.len() != expected {
            return Err(Error::Invalid {
                path: "payoffs".into(),
                reason: format!("expected {} entries, got {}", expected, raw.payoffs.len()),
            });
        }
        for (k, &u) in raw.payoffs.iter().enumerate() {
            if !u.is_finite() {
                return Err(Error::Invalid {
                    path: format!("payoffs[{k}]"),
                    reason: format!("non-finite entry {u}"),
                });
            }
        }
        let payoffs = raw
            .payoffs
            .chunks(outcomes)
            .map(|c| c.to_vec())
            .collect();
        Self::new(raw.actions, payoffs)
    }

    pub fn to_json(&self) -> String {
        let raw = GameJson {
            players: self.num_players(),
            actions: self.action_counts.clone(),
            payoffs: self.payoffs.iter().flatten().copied().collect(),
        };
        serde_json::to_string_pretty(&raw).expect("game serialization cannot fail")
    }

    pub fn num_players(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn num_outcomes(&self) -> usize {
        self.num_outcomes
    }

    /// Total number of pure actions across players (`sum_i |A_i|`).
    pub fn total_actions(&self) -> usize {
        self.action_counts.iter().sum()
    }

    pub fn payoff_tensor(&self, player: usize) -> &[f64] {
        &self.payoffs[player]
    }

    /// Flat index of a pure profile (player-1 index slowest).
    pub fn outcome_index(&self, profile: &[usize]) -> usize {
        let mut idx = 0;
        for (d, &n) in profile.iter().zip(&self.action_counts) {
            debug_assert!(*d < n);
            idx = idx * n + d;
        }
        idx
    }

    pub fn payoff(&self, player: usize, profile: &[usize]) -> f64 {
        self.payoffs[player][self.outcome_index(profile)]
    }

    /// Iterate all pure profiles in row-major order.
    pub fn pure_profiles(&self) -> PureProfiles<'_> {
        PureProfiles {
            counts: &self.action_counts,
            digits: vec![0; self.action_counts.len()],
            done: false,
        }
    }

    fn check_profile_shape(&self, x: &MixedProfile) -> Result<()> {
        if x.blocks().len() != self.num_players()
            || x.blocks()
                .iter()
                .zip(&self.action_counts)
                .any(|(b, &n)| b.len() != n)
        {
            return Err(Error::ShapeMismatch(
                "profile shape does not match the game".into(),
            ));
        }
        Ok(())
    }

    /// Expected payoff of every player under a mixed profile:
    /// `u_i(x) = sum_a u_i(a) prod_j x_{j,a_j}`.
    pub fn mixed_payoff(&self, x: &MixedProfile) -> Result<Vec<f64>> {
        self.check_profile_shape(x)?;
        Ok(self.mixed_payoff_blocks(x.blocks()))
    }

    pub(crate) fn mixed_payoff_blocks(&self, x: &[Vec<f64>]) -> Vec<f64> {
        let n = self.num_players();
        let mut out = vec![0.0; n];
        let mut digits = vec![0usize; n];
        for idx in 0..self.num_outcomes {
            let mut joint = 1.0;
            for (j, &d) in digits.iter().enumerate() {
                joint *= x[j][d];
            }
            if joint != 0.0 {
                for i in 0..n {
                    out[i] += self.payoffs[i][idx] * joint;
                }
            }
            advance(&mut digits, &self.action_counts);
        }
        out
    }

    /// Individual payoff fields `v_{i,a}(x) = u_i(a; x_{-i})`.
    pub fn payoff_field(&self, x: &MixedProfile) -> Result<PayoffVectors> {
        self.check_profile_shape(x)?;
        let mut out: Vec<Vec<f64>> = self.action_counts.iter().map(|&n| vec![0.0; n]).collect();
        self.payoff_field_blocks(x.blocks(), &mut out);
        Ok(PayoffVectors { blocks: out })
    }

    /// Field evaluation on raw blocks, accumulating into `out` (hot path for
    /// the integrators and discrete runners).
    pub(crate) fn payoff_field_blocks(&self, x: &[Vec<f64>], out: &mut [Vec<f64>]) {
        let n = self.num_players();
        for block in out.iter_mut() {
            block.iter_mut().for_each(|v| *v = 0.0);
        }
        let mut digits = vec![0usize; n];
        let mut prefix = vec![1.0; n + 1];
        let mut suffix = vec![1.0; n + 1];
        for idx in 0..self.num_outcomes {
            for j in 0..n {
                prefix[j + 1] = prefix[j] * x[j][digits[j]];
            }
            suffix[n] = 1.0;
            for j in (0..n).rev() {
                suffix[j] = suffix[j + 1] * x[j][digits[j]];
            }
            for i in 0..n {
                let opp = prefix[i] * suffix[i + 1];
                if opp != 0.0 {
                    out[i][digits[i]] += self.payoffs[i][idx] * opp;
                }
            }
            advance(&mut digits, &self.action_counts);
        }
    }

    /// Per-player Lipschitz modulus `L_i = max_a |u_i(a)|`, valid for the
    /// block-l1 profile norm with dual max norm.
    pub fn lipschitz_bound(&self) -> Vec<f64> {
        self.payoffs
            .iter()
            .map(|t| t.iter().fold(0.0f64, |m, &u| m.max(u.abs())))
            .collect()
    }

    /// Largest unilateral pure-deviation gain at `x`; zero iff `x` is a Nash
    /// equilibrium (clamped at zero against roundoff).
    pub fn nash_gap(&self, x: &MixedProfile) -> Result<f64> {
        self.check_profile_shape(x)?;
        let mut field: Vec<Vec<f64>> = self.action_counts.iter().map(|&n| vec![0.0; n]).collect();
        self.payoff_field_blocks(x.blocks(), &mut field);
        Ok(self.nash_gap_from_field(x.blocks(), &field))
    }

    pub(crate) fn nash_gap_from_field(&self, x: &[Vec<f64>], field: &[Vec<f64>]) -> f64 {
        let mut gap = 0.0f64;
        for (xi, vi) in x.iter().zip(field) {
            let value: f64 = xi.iter().zip(vi).map(|(p, v)| p * v).sum();
            let best = vi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            gap = gap.max(best - value);
        }
        gap.max(0.0)
    }

    /// Coarse-correlated-equilibrium gap of a joint distribution over pure
    /// profiles (flat, row-major): the largest gain any player can get by
    /// deviating to a constant action.  Clamped at zero.
    pub fn cce_gap(&self, joint: &[f64]) -> Result<f64> {
        if joint.len() != self.num_outcomes {
            return Err(Error::ShapeMismatch(format!(
                "joint has {} entries, expected {}",
                joint.len(),
                self.num_outcomes
            )));
        }
        let mut sum = 0.0;
        for (k, &w) in joint.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::NotNormalized(format!(
                    "joint[{k}] = {w} is not a probability"
                )));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(format!("joint sums to {sum}")));
        }

        let n = self.num_players();
        let mut gap = 0.0f64;
        let mut digits = vec![0usize; n];
        for i in 0..n {
            // gain[b] = sum_a joint(a) * [u_i(b; a_-i) - u_i(a)]
            let mut gain = vec![0.0; self.action_counts[i]];
            digits.iter_mut().for_each(|d| *d = 0);
            for idx in 0..self.num_outcomes {
                let w = joint[idx];
                if w != 0.0 {
                    let u_played = self.payoffs[i][idx];
                    let mut dev = digits.clone();
                    for (b, g) in gain.iter_mut().enumerate() {
                        dev[i] = b;
                        *g += w * (self.payoffs[i][self.outcome_index(&dev)] - u_played);
                    }
                }
                advance(&mut digits, &self.action_counts);
            }
            gap = gap.max(gain.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        }
        Ok(gap.max(0.0))
    }
}

fn advance(digits: &mut [usize], counts: &[usize]) -> bool {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < counts[i] {
            return true;
        }
        digits[i] = 0;
    }
    false
}

/// Iterator over all pure profiles of a game.
pub struct PureProfiles<'a> {
    counts: &'a [usize],
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for PureProfiles<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let current = self.digits.clone();
        if !advance(&mut self.digits, self.counts) {
            self.done = true;
        }
        Some(current)
    }
}

/// Block-l1 distance between two profiles: `sum_i ||x_i - y_i||_1`.
pub fn profile_l1_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(xa, xb)| xa.iter().zip(xb).map(|(p, q)| (p - q).abs()).sum::<f64>())
        .sum()
}

/// Squared step norm used by the discrete diagnostics:
/// `sum_i ||x_i - y_i||_1^2`.
pub fn profile_step_norm_sq(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(xa, xb)| {
            let d: f64 = xa.iter().zip(xb).map(|(p, q)| (p - q).abs()).sum();
            d * d
        })
        .sum()
}
