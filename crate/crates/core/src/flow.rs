//! Continuous-time regularized learning in score space.
//!
//! The dynamics integrate `dy/dt = v(Q(y))` with classical fixed-step RK4:
//! scores accumulate the payoff field of the current mirrored strategy
//! profile.  In a harmonic game the mass-weighted Fenchel coupling to the
//! strategic center, `E(y) = sum_i m_i F_i(xhat_i, y_i)`, is a constant of
//! motion; for entropic regularizers the product `G(x) = prod x^mu` is an
//! equivalent conserved quantity (log G is an affine transform of -E).
//! Bounded conserved orbits return arbitrarily close to their starting
//! point, which the recurrence scanner detects from the sampled states.

use crate::error::{Error, Result};
use crate::game::{profile_l1_distance, FiniteGame, MixedProfile};
use crate::harmonic::HarmonicStructure;
use crate::regularizer::{
    fenchel_block, mirror_block, RegularizerKind, RegularizerSpec, ScoreProfile,
};

/// Sampled integral curve of the score-space dynamics.
#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    action_counts: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
    dt: f64,
    /// `(samples) x dim`, row k holding y(k dt).
    scores: Vec<f64>,
    /// `(samples) x dim`, row k holding x(k dt) = Q(y(k dt)).
    states: Vec<f64>,
    energy: Option<Vec<f64>>,
    logit_g: Option<Vec<f64>>,
}

impl FlowTrajectory {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn num_samples(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn state_row(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn score_row(&self, k: usize) -> &[f64] {
        &self.scores[k * self.dim..(k + 1) * self.dim]
    }

    pub fn state_block(&self, k: usize, player: usize) -> &[f64] {
        let row = self.state_row(k);
        &row[self.offsets[player]..self.offsets[player + 1]]
    }

    pub fn state_blocks(&self, k: usize) -> Vec<Vec<f64>> {
        (0..self.action_counts.len())
            .map(|i| self.state_block(k, i).to_vec())
            .collect()
    }

    pub fn state_profile(&self, k: usize) -> MixedProfile {
        MixedProfile::from_blocks_unchecked(self.state_blocks(k))
    }

    pub fn score_profile(&self, k: usize) -> ScoreProfile {
        let row = self.score_row(k);
        ScoreProfile::new(
            (0..self.action_counts.len())
                .map(|i| row[self.offsets[i]..self.offsets[i + 1]].to_vec())
                .collect(),
        )
        .expect("integrator states are finite")
    }

    /// Energy samples, present when a harmonic structure was supplied.
    pub fn energy(&self) -> Option<&[f64]> {
        self.energy.as_deref()
    }

    /// Samples of `G(x)`, present for all-entropic runs with a structure.
    pub fn logit_g(&self) -> Option<&[f64]> {
        self.logit_g.as_deref()
    }
}

fn block_offsets(action_counts: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(action_counts.len() + 1);
    let mut acc = 0;
    offsets.push(0);
    for &n in action_counts {
        acc += n;
        offsets.push(acc);
    }
    offsets
}

struct FieldEvaluator<'a> {
    game: &'a FiniteGame,
    spec: &'a RegularizerSpec,
    offsets: Vec<usize>,
    x_blocks: Vec<Vec<f64>>,
    v_blocks: Vec<Vec<f64>>,
}

impl<'a> FieldEvaluator<'a> {
    fn new(game: &'a FiniteGame, spec: &'a RegularizerSpec) -> Self {
        let counts = game.action_counts();
        Self {
            game,
            spec,
            offsets: block_offsets(counts),
            x_blocks: counts.iter().map(|&n| vec![0.0; n]).collect(),
            v_blocks: counts.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    fn mirror_flat(&mut self, y: &[f64]) {
        for (i, block) in self.x_blocks.iter_mut().enumerate() {
            mirror_block(
                self.spec.kind(i),
                &y[self.offsets[i]..self.offsets[i + 1]],
                block,
            );
        }
    }

    /// dy/dt at `y`, written into `out` (also refreshes `x_blocks`).
    fn field(&mut self, y: &[f64], out: &mut [f64]) {
        self.mirror_flat(y);
        self.game
            .payoff_field_blocks(&self.x_blocks, &mut self.v_blocks);
        for (i, block) in self.v_blocks.iter().enumerate() {
            out[self.offsets[i]..self.offsets[i + 1]].copy_from_slice(block);
        }
    }
}

/// Integrate the score dynamics with fixed-step RK4 from `y0` to `horizon`,
/// sampling every step.  When `structure` is supplied, the weighted Fenchel
/// energy is recorded at every sample, and `G(x)` as well if every player is
/// entropic.
pub fn integrate_flow(
    game: &FiniteGame,
    spec: &RegularizerSpec,
    y0: &ScoreProfile,
    horizon: f64,
    dt: f64,
    structure: Option<&HarmonicStructure>,
) -> Result<FlowTrajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Invalid {
            path: "dt".into(),
            reason: format!("step must be positive, got {dt}"),
        });
    }
    if !(horizon >= dt) || !horizon.is_finite() {
        return Err(Error::Invalid {
            path: "horizon".into(),
            reason: format!("horizon must be at least dt, got {horizon}"),
        });
    }
    let counts = game.action_counts();
    if spec.num_players() != counts.len() {
        return Err(Error::ShapeMismatch("regularizer spec vs game".into()));
    }
    if y0.blocks().len() != counts.len()
        || y0.blocks().iter().zip(counts).any(|(b, &n)| b.len() != n)
    {
        return Err(Error::ShapeMismatch("initial scores vs game".into()));
    }

    let offsets = block_offsets(counts);
    let dim = *offsets.last().expect("nonempty game");
    let steps = (horizon / dt).round().max(1.0) as usize;
    let all_entropic = (0..counts.len()).all(|i| spec.kind(i) == RegularizerKind::Entropic);

    let mut eval = FieldEvaluator::new(game, spec);
    let mut y: Vec<f64> = y0.blocks().iter().flatten().copied().collect();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut stage = vec![0.0; dim];

    let mut scores = Vec::with_capacity((steps + 1) * dim);
    let mut states = Vec::with_capacity((steps + 1) * dim);
    let mut energy = structure.map(|_| Vec::with_capacity(steps + 1));
    let mut logit_g = structure
        .filter(|_| all_entropic)
        .map(|_| Vec::with_capacity(steps + 1));

    let mut record =
        |y: &[f64], eval: &mut FieldEvaluator, scores: &mut Vec<f64>, states: &mut Vec<f64>| {
            eval.mirror_flat(y);
            scores.extend_from_slice(y);
            for block in &eval.x_blocks {
                states.extend_from_slice(block);
            }
            if let Some(s) = structure {
                if let Some(e) = energy.as_mut() {
                    e.push(energy_flat(s, eval.spec, y, &eval.offsets));
                }
                if let Some(g) = logit_g.as_mut() {
                    g.push(logit_from_blocks(s, &eval.x_blocks));
                }
            }
        };

    record(&y, &mut eval, &mut scores, &mut states);
    for step in 1..=steps {
        eval.field(&y, &mut k1);
        for i in 0..dim {
            stage[i] = y[i] + 0.5 * dt * k1[i];
        }
        eval.field(&stage, &mut k2);
        for i in 0..dim {
            stage[i] = y[i] + 0.5 * dt * k2[i];
        }
        eval.field(&stage, &mut k3);
        for i in 0..dim {
            stage[i] = y[i] + dt * k3[i];
        }
        eval.field(&stage, &mut k4);
        for i in 0..dim {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step });
        }
        record(&y, &mut eval, &mut scores, &mut states);
    }

    Ok(FlowTrajectory {
        action_counts: counts.to_vec(),
        offsets,
        dim,
        dt,
        scores,
        states,
        energy,
        logit_g,
    })
}

fn energy_flat(
    structure: &HarmonicStructure,
    spec: &RegularizerSpec,
    y: &[f64],
    offsets: &[usize],
) -> f64 {
    structure
        .masses()
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            m * fenchel_block(
                spec.kind(i),
                structure.center().block(i),
                &y[offsets[i]..offsets[i + 1]],
            )
        })
        .sum()
}

fn logit_from_blocks(structure: &HarmonicStructure, x: &[Vec<f64>]) -> f64 {
    let mut log_g = 0.0;
    for (mu_i, x_i) in structure.measure().iter().zip(x) {
        for (&w, &p) in mu_i.iter().zip(x_i) {
            log_g += w * p.max(1e-300).ln();
        }
    }
    log_g.exp()
}

/// Mass-weighted Fenchel coupling to the strategic center,
/// `E(y) = sum_i m_i F_i(xhat_i, y_i)`.
pub fn conserved_energy(
    structure: &HarmonicStructure,
    spec: &RegularizerSpec,
    y: &ScoreProfile,
) -> f64 {
    structure
        .masses()
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            m * fenchel_block(spec.kind(i), structure.center().block(i), y.block(i))
        })
        .sum()
}

/// `G(x) = prod_i prod_a x_{i,a}^{mu_{i,a}}`, the multiplicative constant of
/// motion of entropic flows; maximal at the strategic center.
pub fn logit_constant(structure: &HarmonicStructure, x: &MixedProfile) -> Result<f64> {
    if x.blocks().len() != structure.measure().len() {
        return Err(Error::ShapeMismatch("profile vs structure".into()));
    }
    if !x.fully_mixed() {
        return Err(Error::BoundaryPoint(
            "G(x) requires a fully mixed profile".into(),
        ));
    }
    let mut log_g = 0.0;
    for (mu_i, x_i) in structure.measure().iter().zip(x.blocks()) {
        for (&w, &p) in mu_i.iter().zip(x_i) {
            log_g += w * p.ln();
        }
    }
    Ok(log_g.exp())
}

/// Scores modulo per-player constant shifts: the first coordinate of every
/// block is pinned to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreDifferenceState {
    blocks: Vec<Vec<f64>>,
}

impl ScoreDifferenceState {
    /// Build from raw blocks; every block's first coordinate must already
    /// be exactly zero.
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            if b.is_empty() || b[0] != 0.0 {
                return Err(Error::Invalid {
                    path: format!("differences[{i}]"),
                    reason: "benchmark coordinate must be pinned to zero".into(),
                });
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid {
                    path: format!("differences[{i}]"),
                    reason: "non-finite entry".into(),
                });
            }
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    /// Any score profile with these differences (the pinned representative).
    pub fn embed(&self) -> ScoreProfile {
        ScoreProfile::new(self.blocks.clone()).expect("differences are finite")
    }
}

/// Project scores to payoff-difference space by subtracting each player's
/// first coordinate.
pub fn project_scorediff(y: &ScoreProfile) -> ScoreDifferenceState {
    let blocks = y
        .blocks()
        .iter()
        .map(|b| {
            let base = b[0];
            let mut z: Vec<f64> = b.iter().map(|&v| v - base).collect();
            z[0] = 0.0;
            z
        })
        .collect();
    ScoreDifferenceState { blocks }
}

/// Scan a trajectory for returns to its starting state: local minima of the
/// block-l1 distance to `x(t_0)` that fall below `epsilon`, separated by at
/// least `refractory` time.  Returns `(time, distance)` pairs in order.
pub fn recurrence_events(
    traj: &FlowTrajectory,
    epsilon: f64,
    refractory: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(epsilon > 0.0) || !(refractory > 0.0) {
        return Err(Error::Invalid {
            path: "epsilon/refractory".into(),
            reason: "both must be positive".into(),
        });
    }
    let samples = traj.num_samples();
    if samples < 3 {
        return Ok(Vec::new());
    }
    let start = traj.state_blocks(0);
    let dist: Vec<f64> = (0..samples)
        .map(|k| profile_l1_distance(&traj.state_blocks(k), &start))
        .collect();
    let mut events = Vec::new();
    let mut last_hit = 0.0f64;
    for k in 1..samples - 1 {
        let t = traj.time(k);
        if dist[k] < epsilon
            && dist[k] <= dist[k - 1]
            && dist[k] <= dist[k + 1]
            && t >= last_hit + refractory
        {
            events.push((t, dist[k]));
            last_hit = t;
        }
    }
    Ok(events)
}

/// Final-horizon regret of every player along the trajectory, by trapezoid
/// quadrature against the best fixed pure action.
pub fn continuous_regret(traj: &FlowTrajectory, game: &FiniteGame) -> Result<Vec<f64>> {
    let curves = regret_curves(traj, game)?;
    Ok(curves
        .iter()
        .map(|per_bench| {
            per_bench
                .iter()
                .map(|c| *c.last().expect("nonempty trajectory"))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// Largest regret over all sampled horizons, per player.
pub fn continuous_regret_envelope(traj: &FlowTrajectory, game: &FiniteGame) -> Result<Vec<f64>> {
    let curves = regret_curves(traj, game)?;
    Ok(curves
        .iter()
        .map(|per_bench| {
            (0..per_bench[0].len())
                .map(|k| {
                    per_bench
                        .iter()
                        .map(|c| c[k])
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// Cumulative payoff advantage of each pure benchmark, per player:
/// `curves[i][b][k]` integrates `u_i(b; x_-i) - u_i(x)` up to sample `k`.
fn regret_curves(traj: &FlowTrajectory, game: &FiniteGame) -> Result<Vec<Vec<Vec<f64>>>> {
    let counts = game.action_counts();
    if counts != traj.action_counts() {
        return Err(Error::ShapeMismatch("trajectory vs game".into()));
    }
    let samples = traj.num_samples();
    if samples == 0 {
        return Err(Error::Invalid {
            path: "trajectory".into(),
            reason: "empty".into(),
        });
    }
    let n = counts.len();
    let mut curves: Vec<Vec<Vec<f64>>> = counts
        .iter()
        .map(|&b| vec![vec![0.0; samples]; b])
        .collect();
    let mut field: Vec<Vec<f64>> = counts.iter().map(|&b| vec![0.0; b]).collect();
    let mut prev: Vec<Vec<f64>> = counts.iter().map(|&b| vec![0.0; b]).collect();
    let dt = traj.dt();
    for k in 0..samples {
        let x = traj.state_blocks(k);
        game.payoff_field_blocks(&x, &mut field);
        for i in 0..n {
            let value: f64 = field[i].iter().zip(&x[i]).map(|(v, p)| v * p).sum();
            for b in 0..counts[i] {
                let integrand = field[i][b] - value;
                if k > 0 {
                    curves[i][b][k] =
                        curves[i][b][k - 1] + 0.5 * dt * (prev[i][b] + integrand);
                }
                prev[i][b] = integrand;
            }
        }
    }
    Ok(curves)
}

/// Numerical divergence of the payoff-difference vector field at `z`, by
/// central differences over the non-pinned coordinates.  Multilinearity of
/// the payoffs makes this vanish identically.
pub fn scorediff_divergence(
    game: &FiniteGame,
    spec: &RegularizerSpec,
    z: &ScoreDifferenceState,
    fd_step: f64,
) -> f64 {
    let counts = game.action_counts();
    let mut eval = FieldEvaluator::new(game, spec);
    let offsets = eval.offsets.clone();
    let dim = *offsets.last().expect("nonempty");
    let mut y: Vec<f64> = z.blocks().iter().flatten().copied().collect();
    let mut out = vec![0.0; dim];
    let mut component = |y: &mut Vec<f64>, eval: &mut FieldEvaluator, i: usize, a: usize| {
        eval.field(y, &mut out);
        out[offsets[i] + a] - out[offsets[i]]
    };
    let mut divergence = 0.0;
    for i in 0..counts.len() {
        for a in 1..counts[i] {
            let idx = offsets[i] + a;
            let original = y[idx];
            y[idx] = original + fd_step;
            let plus = component(&mut y, &mut eval, i, a);
            y[idx] = original - fd_step;
            let minus = component(&mut y, &mut eval, i, a);
            y[idx] = original;
            divergence += (plus - minus) / (2.0 * fd_step);
        }
    }
    divergence
}

/// Largest relative excursion of a sampled conserved quantity from its
/// initial value (absolute when the initial value is essentially zero).
pub fn relative_drift(series: &[f64]) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    let e0 = series[0];
    let scale = if e0.abs() > 1e-12 { e0.abs() } else { 1.0 };
    absolute_drift(series) / scale
}

/// Largest absolute excursion from the initial value.
pub fn absolute_drift(series: &[f64]) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    let e0 = series[0];
    series.iter().map(|&e| (e - e0).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{find_harmonic_measure, generate_harmonic};
    use crate::rng::SplitMix64;

    fn matching_pennies() -> FiniteGame {
        FiniteGame::from_json(include_str!("../games/matching_pennies.json")).unwrap()
    }

    fn zero_game() -> FiniteGame {
        FiniteGame::new(vec![2, 2], vec![vec![0.0; 4]; 2]).unwrap()
    }

    fn entropic(n: usize) -> RegularizerSpec {
        RegularizerSpec::uniform(RegularizerKind::Entropic, n)
    }

    fn mp_offset_start() -> ScoreProfile {
        ScoreProfile::new(vec![vec![0.5, 0.0], vec![0.0, 0.0]]).unwrap()
    }

    #[test]
    fn zero_game_flow_is_constant() {
        let g = zero_game();
        let y0 = ScoreProfile::new(vec![vec![0.3, -0.2], vec![1.0, 0.5]]).unwrap();
        let traj = integrate_flow(&g, &entropic(2), &y0, 5.0, 0.01, None).unwrap();
        let first = traj.score_row(0).to_vec();
        for k in 0..traj.num_samples() {
            assert_eq!(traj.score_row(k), &first[..]);
        }
    }

    #[test]
    fn initial_state_is_mirror_of_y0() {
        let g = matching_pennies();
        let y0 = ScoreProfile::zeros(&[2, 2]);
        let traj = integrate_flow(&g, &entropic(2), &y0, 1.0, 0.01, None).unwrap();
        assert_eq!(traj.state_row(0), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn matching_pennies_flow_is_recurrent() {
        let g = matching_pennies();
        let s = find_harmonic_measure(&g).unwrap();
        let traj =
            integrate_flow(&g, &entropic(2), &mp_offset_start(), 200.0, 0.01, Some(&s))
                .unwrap();
        let events = recurrence_events(&traj, 1e-2, 1.0).unwrap();
        assert!(events.len() >= 3, "only {} returns", events.len());
        // Energy is conserved along the orbit (coarse step here; the tight
        // drift tolerances run at dt = 1e-3 in the acceptance suite).
        assert!(relative_drift(traj.energy().unwrap()) < 1e-4);
        assert!(relative_drift(traj.logit_g().unwrap()) < 1e-4);
    }

    #[test]
    fn constant_trajectory_hits_every_refractory_multiple() {
        let g = zero_game();
        let y0 = ScoreProfile::zeros(&[2, 2]);
        let traj = integrate_flow(&g, &entropic(2), &y0, 10.0, 0.1, None).unwrap();
        let events = recurrence_events(&traj, 1e-2, 1.0).unwrap();
        assert_eq!(events.len(), 9); // t = 1, 2, .., 9 (endpoint excluded)
        for (i, (t, d)) in events.iter().enumerate() {
            assert!((t - (i + 1) as f64).abs() < 1e-9);
            assert_eq!(*d, 0.0);
        }
    }

    #[test]
    fn logit_constant_values() {
        let g = zero_game();
        let s = find_harmonic_measure(&g).unwrap(); // uniform measure on 2x2
        let uniform = MixedProfile::uniform(&[2, 2]);
        let v = logit_constant(&s, &uniform).unwrap();
        assert!((v - 1.0 / 16.0).abs() < 1e-15);

        let siege = FiniteGame::from_json(include_str!("../games/siege.json")).unwrap();
        let s = find_harmonic_measure(&siege).unwrap();
        // Oracle: direct product evaluation at the center, frozen.
        let frozen = 2.314_814_814_814_815e-3_f64;
        let direct = (1.0f64 / 6.0).powi(1)
            * (5.0f64 / 6.0).powi(5)
            * (2.0f64 / 5.0).powi(2)
            * (3.0f64 / 5.0).powi(3);
        assert!((direct - frozen).abs() < 1e-15);
        let at_center = logit_constant(&s, s.center()).unwrap();
        assert!((at_center - frozen).abs() < 1e-12);
        // Maximality of G at the center, checked by sampling.
        let mut rng = SplitMix64::new(6);
        for _ in 0..200 {
            let x = MixedProfile::new(vec![rng.next_simplex(2), rng.next_simplex(2)]).unwrap();
            assert!(logit_constant(&s, &x).unwrap() <= at_center + 1e-12);
        }

        let boundary = MixedProfile::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert!(logit_constant(&s, &boundary).is_err());
    }

    #[test]
    fn scorediff_projection() {
        let y = ScoreProfile::new(vec![vec![3.0, 3.0], vec![1.0, 3.0]]).unwrap();
        let z = project_scorediff(&y);
        assert_eq!(z.blocks()[0], vec![0.0, 0.0]);
        assert_eq!(z.blocks()[1], vec![0.0, 2.0]);
    }

    #[test]
    fn flow_is_shift_invariant_through_pi() {
        let g = matching_pennies();
        let spec = entropic(2);
        let y0 = ScoreProfile::new(vec![vec![0.7, 0.1], vec![-0.3, 0.2]]).unwrap();
        let shifted = ScoreProfile::new(vec![vec![0.7 + 2.5, 0.1 + 2.5], vec![-0.3 - 1.0, 0.2 - 1.0]])
            .unwrap();
        let a = integrate_flow(&g, &spec, &y0, 20.0, 0.01, None).unwrap();
        let b = integrate_flow(&g, &spec, &shifted, 20.0, 0.01, None).unwrap();
        for k in 0..a.num_samples() {
            for (p, q) in a.state_row(k).iter().zip(b.state_row(k)) {
                assert!((p - q).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn regret_stays_under_entropy_range() {
        let g = matching_pennies();
        let traj =
            integrate_flow(&g, &entropic(2), &mp_offset_start(), 50.0, 0.001, None).unwrap();
        let envelope = continuous_regret_envelope(&traj, &g).unwrap();
        for r in envelope {
            assert!(r <= std::f64::consts::LN_2 + 1e-3, "regret {r}");
        }
        // Constant-at-equilibrium runs have zero regret.
        let z = zero_game();
        let traj = integrate_flow(&z, &entropic(2), &ScoreProfile::zeros(&[2, 2]), 5.0, 0.01, None)
            .unwrap();
        assert_eq!(continuous_regret(&traj, &z).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn divergence_of_difference_field_vanishes() {
        let mu = vec![vec![1.0, 1.3], vec![0.8, 1.0]];
        let g = generate_harmonic(&[2, 2], &mu, 3).unwrap();
        let spec = entropic(2);
        let mut rng = SplitMix64::new(9);
        for _ in 0..100 {
            let z = ScoreDifferenceState::new(vec![
                vec![0.0, rng.next_range(-2.0, 2.0)],
                vec![0.0, rng.next_range(-2.0, 2.0)],
            ])
            .unwrap();
            let div = scorediff_divergence(&g, &spec, &z, 1e-5);
            assert!(div.abs() < 1e-6, "divergence {div}");
        }
    }

    #[test]
    fn energy_vanishes_at_the_mirror_of_zero() {
        // Uniform structure on 2x2: the center is Q(0), so E(0) = 0.
        let z = zero_game();
        let s = find_harmonic_measure(&z).unwrap();
        let spec = entropic(2);
        let e = conserved_energy(&s, &spec, &ScoreProfile::zeros(&[2, 2]));
        assert_eq!(e, 0.0);
    }

    #[test]
    fn perturbed_game_breaks_conservation() {
        // Contrast case: with the payoffs knocked off the harmonic set, the
        // "energy" of the old structure drifts visibly within t = 100.
        let g = matching_pennies();
        let s = find_harmonic_measure(&g).unwrap();
        let mut rng = SplitMix64::new(14);
        let noisy: Vec<Vec<f64>> = (0..2)
            .map(|i| {
                g.payoff_tensor(i)
                    .iter()
                    .map(|&u| u + 1e-2 * rng.next_normal())
                    .collect()
            })
            .collect();
        let perturbed = FiniteGame::new(vec![2, 2], noisy).unwrap();
        let traj =
            integrate_flow(&perturbed, &entropic(2), &mp_offset_start(), 100.0, 1e-2, Some(&s))
                .unwrap();
        let drift = relative_drift(traj.energy().unwrap());
        assert!(drift > 1e-3, "perturbation went unnoticed: drift {drift:.3e}");
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let g = matching_pennies();
        let y0 = ScoreProfile::zeros(&[2, 2]);
        assert!(integrate_flow(&g, &entropic(2), &y0, 1.0, 0.0, None).is_err());
        assert!(integrate_flow(&g, &entropic(2), &y0, 0.001, 0.01, None).is_err());
        let bad_y0 = ScoreProfile::zeros(&[2, 3]);
        assert!(integrate_flow(&g, &entropic(2), &bad_y0, 1.0, 0.01, None).is_err());
    }
}
