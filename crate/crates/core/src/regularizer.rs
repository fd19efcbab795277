//! Regularizers, mirror (regularized choice) maps, convex conjugates, and
//! Fenchel couplings.
//!
//! Two penalties are supported per player:
//!
//! * `entropic`: `h(x) = sum_a x_a log x_a`, 1-strongly convex in the l1
//!   norm; the mirror map is the logit/softmax map and the conjugate is
//!   log-sum-exp (both computed with a max shift).
//! * `euclidean`: `h(x) = ||x||^2 / 2`, 1-strongly convex in the l2 norm;
//!   the mirror map is exact simplex projection by sorted thresholding.
//!
//! The Fenchel coupling `F(p, y) = h(p) + h*(y) - <y, p>` is the primal-dual
//! divergence used as the energy of both the continuous flow and the
//! discrete dynamics; it is nonnegative and vanishes exactly at `p = Q(y)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::MixedProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegularizerKind {
    Entropic,
    Euclidean,
}

impl RegularizerKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "entropic" => Ok(Self::Entropic),
            "euclidean" => Ok(Self::Euclidean),
            other => Err(Error::Invalid {
                path: "regularizer".into(),
                reason: format!("unknown kind {other:?} (expected entropic or euclidean)"),
            }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Entropic => "entropic",
            Self::Euclidean => "euclidean",
        }
    }
}

/// Per-player scores (cumulative payoffs, dual variables).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreProfile {
    blocks: Vec<Vec<f64>>,
}

impl ScoreProfile {
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            for (a, &y) in b.iter().enumerate() {
                if !y.is_finite() {
                    return Err(Error::Invalid {
                        path: format!("scores[{i}][{a}]"),
                        reason: format!("non-finite entry {y}"),
                    });
                }
            }
        }
        Ok(Self { blocks })
    }

    pub fn zeros(action_counts: &[usize]) -> Self {
        Self {
            blocks: action_counts.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn block(&self, player: usize) -> &[f64] {
        &self.blocks[player]
    }
}

/// Per-player regularizer choice with strong-convexity moduli (one for both
/// supported kinds, in each kind's own norm).
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizerSpec {
    kinds: Vec<RegularizerKind>,
    strong_convexity: Vec<f64>,
}

impl RegularizerSpec {
    pub fn new(kinds: Vec<RegularizerKind>) -> Self {
        let strong_convexity = vec![1.0; kinds.len()];
        Self {
            kinds,
            strong_convexity,
        }
    }

    pub fn uniform(kind: RegularizerKind, num_players: usize) -> Self {
        Self::new(vec![kind; num_players])
    }

    pub fn num_players(&self) -> usize {
        self.kinds.len()
    }

    pub fn kind(&self, player: usize) -> RegularizerKind {
        self.kinds[player]
    }

    pub fn kinds(&self) -> &[RegularizerKind] {
        &self.kinds
    }

    pub fn strong_convexity(&self, player: usize) -> f64 {
        self.strong_convexity[player]
    }

    /// Range `H_i = max h_i - min h_i` over the simplex with `n` actions.
    pub fn range(&self, player: usize, num_actions: usize) -> f64 {
        match self.kinds[player] {
            RegularizerKind::Entropic => (num_actions as f64).ln(),
            RegularizerKind::Euclidean => (1.0 - 1.0 / num_actions as f64) / 2.0,
        }
    }

    /// Regularized choice map, one block per player.
    pub fn mirror(&self, y: &ScoreProfile) -> MixedProfile {
        let blocks = y
            .blocks()
            .iter()
            .zip(&self.kinds)
            .map(|(b, &k)| {
                let mut out = vec![0.0; b.len()];
                mirror_block(k, b, &mut out);
                out
            })
            .collect();
        MixedProfile::from_blocks_unchecked(blocks)
    }

    /// Convex conjugate `h*_i(y_i)` per player.
    pub fn conjugate(&self, y: &ScoreProfile) -> Vec<f64> {
        y.blocks()
            .iter()
            .zip(&self.kinds)
            .map(|(b, &k)| conjugate_block(k, b))
            .collect()
    }

    /// Fenchel coupling `F_i(p_i, y_i)` per player.
    pub fn fenchel_coupling(&self, p: &MixedProfile, y: &ScoreProfile) -> Vec<f64> {
        p.blocks()
            .iter()
            .zip(y.blocks())
            .zip(&self.kinds)
            .map(|((pb, yb), &k)| fenchel_block(k, pb, yb))
            .collect()
    }

    /// Subgradient selection `grad h_i(x_i)` satisfying `Q(grad h(x)) = x`.
    /// Entropic kind requires an interior point.
    pub fn interior_gradient(&self, x: &MixedProfile) -> Result<ScoreProfile> {
        let mut blocks = Vec::with_capacity(self.kinds.len());
        for (i, (b, &k)) in x.blocks().iter().zip(&self.kinds).enumerate() {
            match k {
                RegularizerKind::Entropic => {
                    if b.iter().any(|&p| p <= 0.0) {
                        return Err(Error::BoundaryPoint(format!(
                            "entropic gradient undefined on the boundary (player {i})"
                        )));
                    }
                    blocks.push(b.iter().map(|&p| 1.0 + p.ln()).collect());
                }
                RegularizerKind::Euclidean => blocks.push(b.to_vec()),
            }
        }
        ScoreProfile::new(blocks)
    }
}

/// `h` evaluated at a simplex point (0 log 0 = 0 for the entropic kind).
pub fn penalty_value(kind: RegularizerKind, x: &[f64]) -> f64 {
    match kind {
        RegularizerKind::Entropic => x
            .iter()
            .map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 })
            .sum(),
        RegularizerKind::Euclidean => 0.5 * x.iter().map(|&p| p * p).sum::<f64>(),
    }
}

/// Mirror map for one block, writing into `out`.
pub fn mirror_block(kind: RegularizerKind, y: &[f64], out: &mut [f64]) {
    match kind {
        RegularizerKind::Entropic => {
            let m = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for (o, &v) in out.iter_mut().zip(y) {
                *o = (v - m).exp();
                sum += *o;
            }
            for o in out.iter_mut() {
                *o /= sum;
            }
        }
        RegularizerKind::Euclidean => project_simplex(y, out),
    }
}

/// Exact Euclidean projection onto the simplex (sorted threshold).
pub fn project_simplex(y: &[f64], out: &mut [f64]) {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("scores are finite"));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    for (o, &v) in out.iter_mut().zip(y) {
        *o = (v - theta).max(0.0);
    }
}

/// Convex conjugate for one block.
pub fn conjugate_block(kind: RegularizerKind, y: &[f64]) -> f64 {
    match kind {
        RegularizerKind::Entropic => {
            let m = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            m + y.iter().map(|&v| (v - m).exp()).sum::<f64>().ln()
        }
        RegularizerKind::Euclidean => {
            let mut q = vec![0.0; y.len()];
            project_simplex(y, &mut q);
            let inner: f64 = y.iter().zip(&q).map(|(a, b)| a * b).sum();
            inner - 0.5 * q.iter().map(|&p| p * p).sum::<f64>()
        }
    }
}

/// Fenchel coupling for one block: `h(p) + h*(y) - <y, p>`.
///
/// Computed on shifted scores `y - max(y)`, which leaves the value exactly
/// unchanged (the conjugate is shift-equivariant, the pairing absorbs the
/// constant) but keeps both terms O(1) when scores grow along a run, so the
/// cancellation error stays near machine precision.
pub fn fenchel_block(kind: RegularizerKind, p: &[f64], y: &[f64]) -> f64 {
    let shift = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let inner: f64 = y.iter().zip(p).map(|(a, b)| (a - shift) * b).sum();
    let conj_shifted = match kind {
        RegularizerKind::Entropic => y.iter().map(|&v| (v - shift).exp()).sum::<f64>().ln(),
        RegularizerKind::Euclidean => {
            let mut q = vec![0.0; y.len()];
            project_simplex(y, &mut q);
            let paired: f64 = y.iter().zip(&q).map(|(a, b)| (a - shift) * b).sum();
            paired - 0.5 * q.iter().map(|&v| v * v).sum::<f64>()
        }
    };
    penalty_value(kind, p) + conj_shifted - inner
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    const LN2: f64 = std::f64::consts::LN_2;

    fn mirror1(kind: RegularizerKind, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        mirror_block(kind, y, &mut out);
        out
    }

    #[test]
    fn entropic_mirror_closed_forms() {
        let q = mirror1(RegularizerKind::Entropic, &[0.0, 0.0]);
        assert!((q[0] - 0.5).abs() < 1e-15);

        let q = mirror1(RegularizerKind::Entropic, &[LN2, 0.0]);
        assert!((q[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((q[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn euclidean_mirror_by_hand() {
        // Threshold (1.2 - 1)/2 = 0.1 keeps both coordinates active.
        let q = mirror1(RegularizerKind::Euclidean, &[0.8, 0.4]);
        assert!((q[0] - 0.7).abs() < 1e-15);
        assert!((q[1] - 0.3).abs() < 1e-15);
        // One coordinate clipped.
        let q = mirror1(RegularizerKind::Euclidean, &[2.0, 0.0]);
        assert_eq!(q, vec![1.0, 0.0]);
    }

    #[test]
    fn conjugate_closed_forms() {
        assert!((conjugate_block(RegularizerKind::Entropic, &[0.0, 0.0]) - LN2).abs() < 1e-15);
        // Shift equivariance: h*(y + c 1) = h*(y) + c.
        let c = 3.7;
        assert!(
            (conjugate_block(RegularizerKind::Entropic, &[c, c]) - (c + LN2)).abs() < 1e-12
        );
        // Euclidean by hand: 0.8*0.7 + 0.4*0.3 - (0.49 + 0.09)/2 = 0.39.
        assert!((conjugate_block(RegularizerKind::Euclidean, &[0.8, 0.4]) - 0.39).abs() < 1e-15);
    }

    #[test]
    fn fenchel_coupling_examples() {
        // p = Q(0): coupling vanishes.
        assert!(fenchel_block(RegularizerKind::Entropic, &[0.5, 0.5], &[0.0, 0.0]).abs() < 1e-15);

        // Frozen oracle: for the entropic kind F(p, y) = KL(p || Q(y));
        // at p = (1/2, 1/2), y = (ln 2, 0) this is ln(9/8)/2.
        let frozen = 0.058_891_517_828_191_73_f64;
        assert!((0.5 * (9.0f64 / 8.0).ln() - frozen).abs() < 1e-15);
        let f = fenchel_block(RegularizerKind::Entropic, &[0.5, 0.5], &[LN2, 0.0]);
        assert!((f - frozen).abs() < 1e-12);
        // Cross-check against the KL identity directly.
        let q = mirror1(RegularizerKind::Entropic, &[LN2, 0.0]);
        let kl: f64 = [0.5, 0.5]
            .iter()
            .zip(&q)
            .map(|(&p, &qi)| p * (p / qi).ln())
            .sum();
        assert!((f - kl).abs() < 1e-12);

        // Euclidean: F(Q(y), y) = 0 for random scores.
        let mut rng = SplitMix64::new(4);
        for _ in 0..100 {
            let y: Vec<f64> = (0..4).map(|_| rng.next_range(-2.0, 2.0)).collect();
            let q = mirror1(RegularizerKind::Euclidean, &y);
            assert!(fenchel_block(RegularizerKind::Euclidean, &q, &y).abs() < 1e-12);
        }
    }

    #[test]
    fn interior_gradient_round_trips() {
        let spec = RegularizerSpec::new(vec![
            RegularizerKind::Entropic,
            RegularizerKind::Euclidean,
        ]);
        let x = MixedProfile::new(vec![vec![0.5, 0.5], vec![0.7, 0.3]]).unwrap();
        let g = spec.interior_gradient(&x).unwrap();
        assert!((g.block(0)[0] - (1.0 + 0.5f64.ln())).abs() < 1e-15);
        assert_eq!(g.block(1), &[0.7, 0.3]);
        let back = spec.mirror(&g);
        for (a, b) in back.blocks().iter().flatten().zip(x.blocks().iter().flatten()) {
            assert!((a - b).abs() < 1e-9);
        }

        let boundary = MixedProfile::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let entropic = RegularizerSpec::uniform(RegularizerKind::Entropic, 2);
        assert!(matches!(
            entropic.interior_gradient(&boundary),
            Err(Error::BoundaryPoint(_))
        ));
        // Euclidean accepts boundary points.
        let euclidean = RegularizerSpec::uniform(RegularizerKind::Euclidean, 2);
        assert!(euclidean.interior_gradient(&boundary).is_ok());
    }

    #[test]
    fn ranges() {
        let spec = RegularizerSpec::new(vec![
            RegularizerKind::Entropic,
            RegularizerKind::Euclidean,
        ]);
        assert!((spec.range(0, 3) - 3.0f64.ln()).abs() < 1e-15);
        assert!((spec.range(1, 4) - (1.0 - 0.25) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn mirror_shift_invariance() {
        let mut rng = SplitMix64::new(12);
        for kind in [RegularizerKind::Entropic, RegularizerKind::Euclidean] {
            for _ in 0..200 {
                let y: Vec<f64> = (0..5).map(|_| rng.next_range(-3.0, 3.0)).collect();
                let c = rng.next_range(-10.0, 10.0);
                let shifted: Vec<f64> = y.iter().map(|&v| v + c).collect();
                let a = mirror1(kind, &y);
                let b = mirror1(kind, &shifted);
                for (p, q) in a.iter().zip(&b) {
                    assert!((p - q).abs() < 1e-12);
                }
            }
        }
    }
}
