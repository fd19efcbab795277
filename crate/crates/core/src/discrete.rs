//! Discrete-time FTRL and its extrapolated variant.
//!
//! Vanilla FTRL accumulates the payoff field of the current state:
//! `Y_{n+1} = Y_n + eta v(X_n)`, `X_n = Q(Y_n)`.  The extrapolated template
//! plays a two-phase step instead: an extrapolation to a leading state,
//!
//! ```text
//!   Y_{n+1/2} = Y_n + eta g_n,            X_{n+1/2} = Q(Y_{n+1/2}),
//!   Y_{n+1}   = Y_n + eta v(X_{n+1/2}),   X_{n+1}   = Q(Y_{n+1}),
//! ```
//!
//! with the extrapolation signal a convex blend of current and stale
//! information, `g_n = alpha v(X_n) + (1 - alpha) v(X_{n-1/2})`.  The
//! coefficient selects the classical schemes: `alpha = 1` is the extra-step
//! method (two fresh field queries per step), `alpha = 0` the optimistic
//! method (one per step, reusing the previous leading query).  Both
//! variants always update the base state with the fresh leading field.
//! Runs start from `Y_1 = Y_{1/2}` (zero unless configured).
//!
//! In a harmonic game with masses `m_i` and Lipschitz moduli `L_i`, step
//! sizes below `m_i K_i / (2 (N + 2) max_j m_j L_j)` guarantee constant
//! regret and convergence of the base states to Nash equilibrium.  The
//! diagnostics in this module check the certificate quantities behind those
//! guarantees on concrete runs: the per-step energy template, summability of
//! the squared step norms, prefix regret against the constant bound, and the
//! Nash gap of the leading states.

use crate::error::{Error, Result};
use crate::game::{profile_step_norm_sq, FiniteGame, MixedProfile};
use crate::harmonic::HarmonicStructure;
use crate::regularizer::{
    fenchel_block, mirror_block, penalty_value, RegularizerSpec, ScoreProfile,
};

/// Scores whose max-norm exceeds this abort the run as divergent.
pub const DIVERGENCE_GUARD: f64 = 1e9;

/// Update rule selection; `Mixed` carries one extrapolation coefficient per
/// player.
#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    Vanilla,
    Extra,
    Optimistic,
    Mixed(Vec<f64>),
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Vanilla => "vanilla",
            Mode::Extra => "extra",
            Mode::Optimistic => "optimistic",
            Mode::Mixed(_) => "mixed",
        }
    }

    /// Extrapolation coefficients, `None` for vanilla.
    pub fn alphas(&self, num_players: usize) -> Option<Vec<f64>> {
        match self {
            Mode::Vanilla => None,
            Mode::Extra => Some(vec![1.0; num_players]),
            Mode::Optimistic => Some(vec![0.0; num_players]),
            Mode::Mixed(a) => Some(a.clone()),
        }
    }
}

/// Configuration of a discrete run.  Scores start at
/// `Y_1 = Y_{1/2} = initial_scores` (zero when unset).
#[derive(Debug, Clone)]
pub struct AlgoConfig {
    pub mode: Mode,
    pub learning_rates: Vec<f64>,
    pub horizon: usize,
    pub initial_scores: Option<ScoreProfile>,
    /// Stop early once the leading-state Nash gap falls below this value.
    pub stop_when_gap_below: Option<f64>,
}

impl AlgoConfig {
    pub fn new(mode: Mode, learning_rates: Vec<f64>, horizon: usize) -> Self {
        Self {
            mode,
            learning_rates,
            horizon,
            initial_scores: None,
            stop_when_gap_below: None,
        }
    }

    pub fn with_initial_scores(mut self, y0: ScoreProfile) -> Self {
        self.initial_scores = Some(y0);
        self
    }

    pub fn with_stop_gap(mut self, tol: f64) -> Self {
        self.stop_when_gap_below = Some(tol);
        self
    }

    fn validate(&self, game: &FiniteGame) -> Result<()> {
        let n = game.num_players();
        if self.learning_rates.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} learning rates for {n} players",
                self.learning_rates.len()
            )));
        }
        for (i, &eta) in self.learning_rates.iter().enumerate() {
            if !(eta > 0.0) || !eta.is_finite() {
                return Err(Error::Invalid {
                    path: format!("learning_rates[{i}]"),
                    reason: format!("must be positive, got {eta}"),
                });
            }
        }
        if self.horizon == 0 {
            return Err(Error::Invalid {
                path: "horizon".into(),
                reason: "must be at least 1".into(),
            });
        }
        if let Mode::Mixed(alphas) = &self.mode {
            if alphas.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "{} extrapolation coefficients for {n} players",
                    alphas.len()
                )));
            }
            for (i, &a) in alphas.iter().enumerate() {
                if !(0.0..=1.0).contains(&a) {
                    return Err(Error::Invalid {
                        path: format!("alphas[{i}]"),
                        reason: format!("must lie in [0, 1], got {a}"),
                    });
                }
            }
        }
        if let Some(y0) = &self.initial_scores {
            if y0.blocks().len() != n
                || y0
                    .blocks()
                    .iter()
                    .zip(game.action_counts())
                    .any(|(b, &c)| b.len() != c)
            {
                return Err(Error::ShapeMismatch("initial scores vs game".into()));
            }
        }
        Ok(())
    }
}

/// Complete record of a discrete run: base and leading scores, states and
/// signals per step, plus diagnostic channels.  Storage is flat with player
/// offsets; rows are 1-indexed to match the step count.
#[derive(Debug, Clone)]
pub struct RunRecord {
    action_counts: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
    mode_name: String,
    alphas: Option<Vec<f64>>,
    etas: Vec<f64>,
    steps: usize,
    /// `(steps + 1) x dim`: Y_1 .. Y_{T+1}.
    base_scores: Vec<f64>,
    /// `(steps + 1) x dim`: X_1 .. X_{T+1}.
    base_states: Vec<f64>,
    /// `steps x dim`: Y_{n+1/2} (aliases the base row for vanilla).
    lead_scores: Vec<f64>,
    /// `steps x dim`: X_{n+1/2}.
    lead_states: Vec<f64>,
    /// `steps x dim`: extrapolation signals g_n (zero for vanilla).
    extrap_signals: Vec<f64>,
    /// `steps x dim`: leading signals v(X_{n+1/2}).
    lead_signals: Vec<f64>,
    /// Per step: Nash gap of the leading state.
    nash_gap_lead: Vec<f64>,
    /// Per step: `sum_i ||X_{n+1/2,i} - X_{n,i}||_1^2`.
    stepnorm2_lead: Vec<f64>,
    /// Per step: `sum_i ||X_{n+1,i} - X_{n+1/2,i}||_1^2`.
    stepnorm2_base: Vec<f64>,
    field_evaluations: usize,
    diverged_at: Option<usize>,
}

impl RunRecord {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn mode_name(&self) -> &str {
        &self.mode_name
    }

    pub fn alphas(&self) -> Option<&[f64]> {
        self.alphas.as_deref()
    }

    pub fn learning_rates(&self) -> &[f64] {
        &self.etas
    }

    pub fn field_evaluations(&self) -> usize {
        self.field_evaluations
    }

    /// Step at which the divergence guard tripped, if it did.
    pub fn diverged_at(&self) -> Option<usize> {
        self.diverged_at
    }

    pub fn nash_gaps(&self) -> &[f64] {
        &self.nash_gap_lead
    }

    pub fn stepnorm2_lead(&self) -> &[f64] {
        &self.stepnorm2_lead
    }

    pub fn stepnorm2_base(&self) -> &[f64] {
        &self.stepnorm2_base
    }

    fn block<'a>(&self, storage: &'a [f64], row: usize, player: usize) -> &'a [f64] {
        let r = &storage[row * self.dim..(row + 1) * self.dim];
        &r[self.offsets[player]..self.offsets[player + 1]]
    }

    fn blocks_of(&self, storage: &[f64], row: usize) -> Vec<Vec<f64>> {
        (0..self.action_counts.len())
            .map(|i| self.block(storage, row, i).to_vec())
            .collect()
    }

    /// Base state X_n (1-indexed; defined for n = 1 ..= steps + 1).
    pub fn base_state(&self, n: usize) -> Vec<Vec<f64>> {
        self.blocks_of(&self.base_states, n - 1)
    }

    /// Base score Y_n (1-indexed; defined for n = 1 ..= steps + 1).
    pub fn base_score(&self, n: usize) -> Vec<Vec<f64>> {
        self.blocks_of(&self.base_scores, n - 1)
    }

    /// Leading state X_{n+1/2} (defined for n = 1 ..= steps).
    pub fn lead_state(&self, n: usize) -> Vec<Vec<f64>> {
        self.blocks_of(&self.lead_states, n - 1)
    }

    /// Leading score Y_{n+1/2}.
    pub fn lead_score(&self, n: usize) -> Vec<Vec<f64>> {
        self.blocks_of(&self.lead_scores, n - 1)
    }

    /// Extrapolation signal g_n.
    pub fn extrap_signal(&self, n: usize) -> Vec<Vec<f64>> {
        self.blocks_of(&self.extrap_signals, n - 1)
    }

    /// Leading signal v(X_{n+1/2}).
    pub fn lead_signal(&self, n: usize) -> Vec<Vec<f64>> {
        self.blocks_of(&self.lead_signals, n - 1)
    }

    pub fn final_base_state(&self) -> MixedProfile {
        MixedProfile::from_blocks_unchecked(self.base_state(self.steps + 1))
    }
}

fn new_blocks(counts: &[usize]) -> Vec<Vec<f64>> {
    counts.iter().map(|&c| vec![0.0; c]).collect()
}

fn mirror_all(spec: &RegularizerSpec, y: &[Vec<f64>], x: &mut [Vec<f64>]) {
    for (i, (yb, xb)) in y.iter().zip(x.iter_mut()).enumerate() {
        mirror_block(spec.kind(i), yb, xb);
    }
}

fn push_blocks(storage: &mut Vec<f64>, blocks: &[Vec<f64>]) {
    for b in blocks {
        storage.extend_from_slice(b);
    }
}

/// Run vanilla FTRL (`config.mode` must be [`Mode::Vanilla`]).
pub fn run_ftrl(game: &FiniteGame, spec: &RegularizerSpec, config: &AlgoConfig) -> Result<RunRecord> {
    if config.mode != Mode::Vanilla {
        return Err(Error::NotApplicable(
            "run_ftrl expects vanilla mode; use run_ftrl_plus".into(),
        ));
    }
    run(game, spec, config)
}

/// Run the extrapolated template (`config.mode` must not be vanilla).
pub fn run_ftrl_plus(
    game: &FiniteGame,
    spec: &RegularizerSpec,
    config: &AlgoConfig,
) -> Result<RunRecord> {
    if config.mode == Mode::Vanilla {
        return Err(Error::NotApplicable(
            "run_ftrl_plus expects an extrapolating mode".into(),
        ));
    }
    run(game, spec, config)
}

/// Run whichever dynamic `config.mode` selects.
pub fn run(game: &FiniteGame, spec: &RegularizerSpec, config: &AlgoConfig) -> Result<RunRecord> {
    config.validate(game)?;
    let counts = game.action_counts();
    let n = counts.len();
    if spec.num_players() != n {
        return Err(Error::ShapeMismatch("regularizer spec vs game".into()));
    }
    let offsets: Vec<usize> = std::iter::once(0)
        .chain(counts.iter().scan(0usize, |acc, &c| {
            *acc += c;
            Some(*acc)
        }))
        .collect();
    let dim = *offsets.last().expect("players exist");
    let etas = config.learning_rates.clone();
    let alphas = config.mode.alphas(n);

    let mut y: Vec<Vec<f64>> = match &config.initial_scores {
        Some(y0) => y0.blocks().to_vec(),
        None => new_blocks(counts),
    };
    let mut x = new_blocks(counts);
    mirror_all(spec, &y, &mut x);

    let reserve = config.horizon.min(1 << 20);
    let mut record = RunRecord {
        action_counts: counts.to_vec(),
        offsets,
        dim,
        mode_name: config.mode.name().to_string(),
        alphas: alphas.clone(),
        etas: etas.clone(),
        steps: 0,
        base_scores: Vec::with_capacity((reserve + 1) * dim),
        base_states: Vec::with_capacity((reserve + 1) * dim),
        lead_scores: Vec::with_capacity(reserve * dim),
        lead_states: Vec::with_capacity(reserve * dim),
        extrap_signals: Vec::with_capacity(reserve * dim),
        lead_signals: Vec::with_capacity(reserve * dim),
        nash_gap_lead: Vec::with_capacity(reserve),
        stepnorm2_lead: Vec::with_capacity(reserve),
        stepnorm2_base: Vec::with_capacity(reserve),
        field_evaluations: 0,
        diverged_at: None,
    };
    push_blocks(&mut record.base_scores, &y);
    push_blocks(&mut record.base_states, &x);

    let mut evals = 0usize;
    let mut v_curr = new_blocks(counts);
    let mut v_lead = new_blocks(counts);
    let mut g = new_blocks(counts);
    let mut y_lead = new_blocks(counts);
    let mut x_lead = new_blocks(counts);
    let mut y_next = new_blocks(counts);
    let mut x_next = new_blocks(counts);

    // Stale leading field v(X_{n-1/2}).  At n = 1 this is v(X_{1/2}) with
    // X_{1/2} = Q(Y_{1/2}) = X_1; only evaluated when some player blends
    // stale information (alpha_i < 1).
    let needs_stale = alphas
        .as_ref()
        .map(|a| a.iter().any(|&ai| ai < 1.0))
        .unwrap_or(false);
    let mut v_stale = new_blocks(counts);
    if needs_stale {
        game.payoff_field_blocks(&x, &mut v_stale);
        evals += 1;
    }

    for step in 1..=config.horizon {
        match &alphas {
            None => {
                // Vanilla: the leading channels alias the base state and the
                // extrapolation signal is zero.
                game.payoff_field_blocks(&x, &mut v_lead);
                evals += 1;
                for i in 0..n {
                    y_lead[i].copy_from_slice(&y[i]);
                    x_lead[i].copy_from_slice(&x[i]);
                    g[i].iter_mut().for_each(|v| *v = 0.0);
                }
            }
            Some(a) => {
                if a.iter().any(|&ai| ai > 0.0) {
                    game.payoff_field_blocks(&x, &mut v_curr);
                    evals += 1;
                }
                for i in 0..n {
                    for k in 0..counts[i] {
                        let fresh = if a[i] > 0.0 { v_curr[i][k] } else { 0.0 };
                        let stale = if a[i] < 1.0 { v_stale[i][k] } else { 0.0 };
                        g[i][k] = a[i] * fresh + (1.0 - a[i]) * stale;
                        y_lead[i][k] = y[i][k] + etas[i] * g[i][k];
                    }
                }
                mirror_all(spec, &y_lead, &mut x_lead);
                game.payoff_field_blocks(&x_lead, &mut v_lead);
                evals += 1;
            }
        }

        if v_lead.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step });
        }
        let gap = game.nash_gap_from_field(&x_lead, &v_lead);

        // Update phase: base moves with the fresh leading field.
        for i in 0..n {
            for k in 0..counts[i] {
                y_next[i][k] = y[i][k] + etas[i] * v_lead[i][k];
            }
        }
        mirror_all(spec, &y_next, &mut x_next);

        record.stepnorm2_lead.push(profile_step_norm_sq(&x_lead, &x));
        record
            .stepnorm2_base
            .push(profile_step_norm_sq(&x_next, &x_lead));
        record.nash_gap_lead.push(gap);
        push_blocks(&mut record.lead_scores, &y_lead);
        push_blocks(&mut record.lead_states, &x_lead);
        push_blocks(&mut record.extrap_signals, &g);
        push_blocks(&mut record.lead_signals, &v_lead);
        push_blocks(&mut record.base_scores, &y_next);
        push_blocks(&mut record.base_states, &x_next);
        record.steps = step;

        std::mem::swap(&mut y, &mut y_next);
        std::mem::swap(&mut x, &mut x_next);
        if needs_stale {
            for i in 0..n {
                v_stale[i].copy_from_slice(&v_lead[i]);
            }
        }

        if y.iter().flatten().any(|v| v.abs() > DIVERGENCE_GUARD) {
            record.diverged_at = Some(step);
            break;
        }
        if let Some(tol) = config.stop_when_gap_below {
            if gap < tol {
                break;
            }
        }
    }

    record.field_evaluations = evals;
    Ok(record)
}

/// Largest admissible learning rates,
/// `etabar_i = m_i K_i / (2 (N + 2) max_j m_j L_j)`, with players whose
/// payoffs vanish excluded from the max; all-zero games get `+inf`.
pub fn max_step_size(
    game: &FiniteGame,
    structure: &HarmonicStructure,
    spec: &RegularizerSpec,
) -> Vec<f64> {
    let lipschitz = game.lipschitz_bound();
    let n = game.num_players() as f64;
    let max_ml = structure
        .masses()
        .iter()
        .zip(&lipschitz)
        .filter(|&(_, &l)| l > 0.0)
        .map(|(&m, &l)| m * l)
        .fold(0.0f64, f64::max);
    structure
        .masses()
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            if max_ml == 0.0 {
                f64::INFINITY
            } else {
                m * spec.strong_convexity(i) / (2.0 * (n + 2.0) * max_ml)
            }
        })
        .collect()
}

/// Prefix regret of every player against the best fixed pure action:
/// `R_i(T') = max_b sum_{n <= T'} [u_i(b; X_{-i,n}) - u_i(X_n)]`, ties
/// broken toward the lowest action index.
pub fn discrete_regret(run: &RunRecord, game: &FiniteGame) -> Result<Vec<Vec<f64>>> {
    if game.action_counts() != run.action_counts() {
        return Err(Error::ShapeMismatch("run vs game".into()));
    }
    let counts = game.action_counts();
    let n = counts.len();
    let t = run.steps();
    let mut cumulative = new_blocks(counts);
    let mut field = new_blocks(counts);
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(t); n];
    for step in 1..=t {
        let x = run.base_state(step);
        game.payoff_field_blocks(&x, &mut field);
        for i in 0..n {
            let value: f64 = field[i].iter().zip(&x[i]).map(|(v, p)| v * p).sum();
            let mut best = f64::NEG_INFINITY;
            for (b, cum) in cumulative[i].iter_mut().enumerate() {
                *cum += field[i][b] - value;
                if *cum > best {
                    best = *cum;
                }
            }
            out[i].push(best);
        }
    }
    Ok(out)
}

/// Constant regret bound and per-player step-size warnings.
#[derive(Debug, Clone)]
pub struct RegretBound {
    pub bounds: Vec<f64>,
    /// True where the supplied learning rate exceeds the admissible maximum
    /// (the bound is still evaluated).
    pub eta_above_bound: Vec<bool>,
}

/// Evaluate the constant bound
/// `H_i / eta_i + (2 L_i / (N + 2)) sum_j H_j / (eta_j L_j)`, dropping
/// zero-payoff players from the sum.
pub fn regret_bound(
    structure: &HarmonicStructure,
    spec: &RegularizerSpec,
    etas: &[f64],
    game: &FiniteGame,
) -> RegretBound {
    let counts = game.action_counts();
    let n = counts.len();
    let lipschitz = game.lipschitz_bound();
    let ranges: Vec<f64> = (0..n).map(|i| spec.range(i, counts[i])).collect();
    let cross: f64 = (0..n)
        .filter(|&j| lipschitz[j] > 0.0)
        .map(|j| ranges[j] / (etas[j] * lipschitz[j]))
        .sum();
    let bounds = (0..n)
        .map(|i| ranges[i] / etas[i] + 2.0 * lipschitz[i] / (n as f64 + 2.0) * cross)
        .collect();
    let etabar = max_step_size(game, structure, spec);
    let eta_above_bound = etas
        .iter()
        .zip(&etabar)
        .map(|(&eta, &cap)| eta > cap + 1e-15)
        .collect();
    RegretBound {
        bounds,
        eta_above_bound,
    }
}

fn energy_at(
    run: &RunRecord,
    structure: &HarmonicStructure,
    spec: &RegularizerSpec,
    etas: &[f64],
    base: &[Vec<f64>],
    row: usize,
) -> f64 {
    (0..run.action_counts.len())
        .map(|i| {
            structure.masses()[i] / etas[i]
                * fenchel_block(spec.kind(i), &base[i], run.block(&run.base_scores, row, i))
        })
        .sum()
}

/// Energy `E_n = sum_i (m_i / eta_i) F_i(p_i, Y_{n,i})` for n = 1 ..= T+1;
/// the default base profile `p` is the strategic center.
pub fn energy_sequence(
    run: &RunRecord,
    structure: &HarmonicStructure,
    spec: &RegularizerSpec,
    etas: &[f64],
    base: Option<&MixedProfile>,
) -> Vec<f64> {
    let base_blocks: Vec<Vec<f64>> = match base {
        Some(p) => p.blocks().to_vec(),
        None => structure.center().blocks().to_vec(),
    };
    (0..=run.steps())
        .map(|row| energy_at(run, structure, spec, etas, &base_blocks, row))
        .collect()
}

/// Summability certificate for the squared step norms of an extrapolated
/// run.
#[derive(Debug, Clone)]
pub struct SummabilityReport {
    /// False for vanilla runs, which carry no extrapolation hypothesis.
    pub applicable: bool,
    /// Partial sums of `||X_{n+1/2} - X_n||^2 + ||X_n - X_{n-1/2}||^2`.
    pub partial_sums: Vec<f64>,
    /// `2 E_1 / ((N + 2) max_i m_i L_i)`, energy based at the center.
    pub bound: f64,
    pub pass: bool,
}

pub fn summability_check(
    run: &RunRecord,
    game: &FiniteGame,
    structure: &HarmonicStructure,
    spec: &RegularizerSpec,
    etas: &[f64],
) -> SummabilityReport {
    if run.alphas().is_none() {
        return SummabilityReport {
            applicable: false,
            partial_sums: Vec::new(),
            bound: f64::NAN,
            pass: false,
        };
    }
    let max_ml = structure
        .masses()
        .iter()
        .zip(game.lipschitz_bound())
        .map(|(&m, l)| m * l)
        .fold(0.0f64, f64::max);
    let center = structure.center().blocks().to_vec();
    let e1 = energy_at(run, structure, spec, etas, &center, 0);
    let n = run.action_counts.len() as f64;
    let bound = if max_ml > 0.0 {
        2.0 * e1 / ((n + 2.0) * max_ml)
    } else {
        f64::INFINITY
    };
    let t = run.steps();
    let mut partial_sums = Vec::with_capacity(t);
    let mut acc = 0.0;
    for k in 0..t {
        acc += run.stepnorm2_lead[k];
        if k >= 1 {
            acc += run.stepnorm2_base[k - 1];
        }
        partial_sums.push(acc);
    }
    let pass = partial_sums.iter().all(|&s| s <= bound + 1e-9);
    SummabilityReport {
        applicable: true,
        partial_sums,
        bound,
        pass,
    }
}

/// Per-step residual of the energy template: the slack in
///
/// ```text
///   E_{n+1} <= E_n + sum_i m_i <v_i(X_{n+1/2}), X_{n+1/2,i} - p_i>
///                  + sum_i m_i <v_i(X_{n+1/2}) - v_i(X_n), X_{n+1,i} - X_{n+1/2,i}>
///                  + sum_i m_i (1 - alpha_i) <v_i(X_n) - v_i(X_{n-1/2}), X_{n+1,i} - X_{n+1/2,i}>
///                  - sum_i (m_i / eta_i) F_i(X_{n+1,i}, Y_{n+1/2,i})
///                  - sum_i (m_i / eta_i) F_i(X_{n+1/2,i}, Y_{n,i})
/// ```
///
/// nonnegative (up to roundoff) for every base profile `p`.
///
/// Numerics: along a run the score increments realize the signal lines
/// exactly — `Y_{n+1/2} - Y_n = eta g_n` and `Y_{n+1} - Y_n = eta
/// v(X_{n+1/2})` by construction — so the inner-product lines are evaluated
/// through the stored increments (the middle two lines combine into
/// `<d2 - d1, X_{n+1} - X_{n+1/2}>`).  Likewise the energy step
/// `E_{n+1} - E_n` is formed through the conjugate envelope rather than as
/// a difference of absolute energies, which grow along the run and would
/// cancel most of the mantissa.  Both choices change nothing in exact
/// arithmetic and keep the residual at machine precision for long runs.
pub fn template_residual(
    run: &RunRecord,
    game: &FiniteGame,
    structure: &HarmonicStructure,
    spec: &RegularizerSpec,
    etas: &[f64],
    base: &MixedProfile,
) -> Result<Vec<f64>> {
    if run.alphas().is_none() {
        return Err(Error::NotApplicable(
            "template applies to extrapolated runs".into(),
        ));
    }
    if game.action_counts() != run.action_counts() {
        return Err(Error::ShapeMismatch("run vs game".into()));
    }
    let counts = game.action_counts();
    let n = counts.len();
    let t = run.steps();
    let masses = structure.masses();
    let base_blocks: Vec<Vec<f64>> = base.blocks().to_vec();

    let mut residuals = Vec::with_capacity(t);
    for step in 1..=t {
        let row = step - 1;
        let mut rhs = 0.0;
        for i in 0..n {
            let lead_score = run.block(&run.lead_scores, row, i);
            let lead_state = run.block(&run.lead_states, row, i);
            let curr_score = run.block(&run.base_scores, row, i);
            let curr_state = run.block(&run.base_states, row, i);
            let next_score = run.block(&run.base_scores, row + 1, i);
            let next_state = run.block(&run.base_states, row + 1, i);

            // d2 = Y_{n+1} - Y_n (= eta v(X_{n+1/2})),
            // d1 = Y_{n+1/2} - Y_n (= eta g_n).
            let mut line1 = 0.0;
            let mut cross = 0.0;
            for k in 0..counts[i] {
                let d2 = next_score[k] - curr_score[k];
                let d1 = lead_score[k] - curr_score[k];
                line1 += d2 * (lead_state[k] - base_blocks[i][k]);
                cross += (d2 - d1) * (next_state[k] - lead_state[k]);
            }
            let coupling = fenchel_block(spec.kind(i), next_state, lead_score)
                + fenchel_block(spec.kind(i), lead_state, curr_score);

            // Energy step via the envelope h*(y) = <y, Q(y)> - h(Q(y)):
            //   h*(Y_{n+1}) - h*(Y_n) = <Y_n - c, X_{n+1} - X_n>
            //     + <d2, X_{n+1}> - h(X_{n+1}) + h(X_n)
            // for any shift c (states sum to one, so the shift cancels).
            let shift = curr_score
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            let mut energy_step = -penalty_value(spec.kind(i), next_state)
                + penalty_value(spec.kind(i), curr_state);
            for k in 0..counts[i] {
                let d2 = next_score[k] - curr_score[k];
                energy_step += (curr_score[k] - shift) * (next_state[k] - curr_state[k])
                    + d2 * next_state[k]
                    - d2 * base_blocks[i][k];
            }
            rhs += masses[i] / etas[i] * (line1 + cross - coupling - energy_step);
        }
        residuals.push(rhs);
    }
    Ok(residuals)
}

/// Last-iterate convergence report.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub final_gap: f64,
    /// First step whose leading-state gap fell below `threshold`.
    pub first_step_below: Option<usize>,
    pub threshold: f64,
    /// CCE gap of the time-averaged joint distribution of the base states.
    pub cce_gap_of_average: f64,
}

/// Nash-gap sequence of the leading states plus a limit-point report.
pub fn convergence_diagnostics(
    run: &RunRecord,
    game: &FiniteGame,
) -> Result<(Vec<f64>, ConvergenceReport)> {
    if game.action_counts() != run.action_counts() {
        return Err(Error::ShapeMismatch("run vs game".into()));
    }
    let gaps = run.nash_gap_lead.clone();
    let threshold = 1e-4;
    let first_step_below = gaps.iter().position(|&g| g < threshold).map(|i| i + 1);
    let t = run.steps();
    let mut joint = vec![0.0f64; game.num_outcomes()];
    for step in 1..=t {
        let x = run.base_state(step);
        for (idx, profile) in game.pure_profiles().enumerate() {
            let mut w = 1.0;
            for (j, &a) in profile.iter().enumerate() {
                w *= x[j][a];
            }
            joint[idx] += w;
        }
    }
    for w in &mut joint {
        *w /= t as f64;
    }
    let cce_gap_of_average = game.cce_gap(&joint)?;
    let report = ConvergenceReport {
        final_gap: *gaps.last().unwrap_or(&0.0),
        first_step_below,
        threshold,
        cce_gap_of_average,
    };
    Ok((gaps, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::find_harmonic_measure;
    use crate::regularizer::RegularizerKind;

    fn matching_pennies() -> FiniteGame {
        FiniteGame::from_json(include_str!("../games/matching_pennies.json")).unwrap()
    }

    fn siege() -> FiniteGame {
        FiniteGame::from_json(include_str!("../games/siege.json")).unwrap()
    }

    fn zero_game() -> FiniteGame {
        FiniteGame::new(vec![2, 2], vec![vec![0.0; 4]; 2]).unwrap()
    }

    fn entropic(n: usize) -> RegularizerSpec {
        RegularizerSpec::uniform(RegularizerKind::Entropic, n)
    }

    fn euclidean(n: usize) -> RegularizerSpec {
        RegularizerSpec::uniform(RegularizerKind::Euclidean, n)
    }

    #[test]
    fn zero_game_states_are_constant_and_modes_agree() {
        let g = zero_game();
        let spec = entropic(2);
        let extra = run(
            &g,
            &spec,
            &AlgoConfig::new(Mode::Extra, vec![0.1, 0.1], 50),
        )
        .unwrap();
        let optimistic = run(
            &g,
            &spec,
            &AlgoConfig::new(Mode::Optimistic, vec![0.1, 0.1], 50),
        )
        .unwrap();
        for step in 1..=50 {
            assert_eq!(extra.base_state(step), vec![vec![0.5, 0.5]; 2]);
            assert_eq!(extra.base_state(step), optimistic.base_state(step));
            assert_eq!(extra.lead_state(step), optimistic.lead_state(step));
        }
        assert_eq!(extra.nash_gaps().iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn field_evaluation_counts_are_exact() {
        let g = matching_pennies();
        let spec = entropic(2);
        let t = 37;
        let eta = vec![0.03, 0.03];
        let vanilla = run(&g, &spec, &AlgoConfig::new(Mode::Vanilla, eta.clone(), t)).unwrap();
        assert_eq!(vanilla.field_evaluations(), t);
        let optimistic =
            run(&g, &spec, &AlgoConfig::new(Mode::Optimistic, eta.clone(), t)).unwrap();
        assert_eq!(optimistic.field_evaluations(), t + 1);
        let extra = run(&g, &spec, &AlgoConfig::new(Mode::Extra, eta.clone(), t)).unwrap();
        assert_eq!(extra.field_evaluations(), 2 * t);
        let mixed = run(
            &g,
            &spec,
            &AlgoConfig::new(Mode::Mixed(vec![0.5, 0.25]), eta, t),
        )
        .unwrap();
        assert_eq!(mixed.field_evaluations(), 2 * t + 1);
    }

    #[test]
    fn vanilla_euclidean_growth_law_on_matching_pennies() {
        let g = matching_pennies();
        let spec = euclidean(2);
        let eta = 0.05;
        let y0 = ScoreProfile::new(vec![vec![0.55, 0.45], vec![0.55, 0.45]]).unwrap();
        let cfg = AlgoConfig::new(Mode::Vanilla, vec![eta, eta], 400)
            .with_initial_scores(y0);
        let record = run(&g, &spec, &cfg).unwrap();
        let rate = 1.0 + 16.0 * eta * eta;
        let in_simplex = |blocks: &[Vec<f64>]| {
            blocks.iter().all(|b| {
                b.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v))
                    && (b.iter().sum::<f64>() - 1.0).abs() < 1e-9
            })
        };
        let d = |blocks: &[Vec<f64>]| {
            0.5 * ((blocks[0][0] - 0.5).powi(2) + (blocks[1][0] - 0.5).powi(2))
        };
        let mut interior_steps = 0;
        for n in 1..record.steps() {
            if in_simplex(&record.base_score(n)) && in_simplex(&record.base_score(n + 1)) {
                let d_now = d(&record.base_state(n));
                let d_next = d(&record.base_state(n + 1));
                assert!(
                    (d_next - rate * d_now).abs() < 1e-12,
                    "step {n}: {d_next} vs {}",
                    rate * d_now
                );
                interior_steps += 1;
            } else {
                break;
            }
        }
        assert!(
            (50..record.steps()).contains(&interior_steps),
            "interior phase lasted {interior_steps} steps"
        );
        // After the interior phase the iterate cycles near the boundary.
        let final_gaps = &record.nash_gaps()[record.steps() - 50..];
        assert!(final_gaps.iter().all(|&gap| gap > 0.1));
    }

    #[test]
    fn vanilla_fixed_at_equilibrium_scores() {
        let g = matching_pennies();
        let spec = euclidean(2);
        let y0 = ScoreProfile::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let cfg = AlgoConfig::new(Mode::Vanilla, vec![0.1, 0.1], 100).with_initial_scores(y0);
        let record = run(&g, &spec, &cfg).unwrap();
        for step in 1..=record.steps() {
            assert_eq!(record.base_state(step), vec![vec![0.5, 0.5]; 2]);
        }
    }

    #[test]
    fn step_size_caps() {
        let mp = matching_pennies();
        let s = find_harmonic_measure(&mp).unwrap();
        let caps = max_step_size(&mp, &s, &entropic(2));
        assert!((caps[0] - 1.0 / 16.0).abs() < 1e-15);
        assert!((caps[1] - 1.0 / 16.0).abs() < 1e-15);

        let siege = siege();
        let s = find_harmonic_measure(&siege).unwrap();
        let caps = max_step_size(&siege, &s, &entropic(2));
        assert!((caps[0] - 3.0 / 80.0).abs() < 1e-12);
        assert!((caps[1] - 1.0 / 32.0).abs() < 1e-12);

        let z = zero_game();
        let s = find_harmonic_measure(&z).unwrap();
        let caps = max_step_size(&z, &s, &entropic(2));
        assert!(caps.iter().all(|c| c.is_infinite()));
    }

    #[test]
    fn regret_bound_values() {
        let mp = matching_pennies();
        let s = find_harmonic_measure(&mp).unwrap();
        let spec = entropic(2);
        let eta = vec![1.0 / 16.0; 2];
        let rb = regret_bound(&s, &spec, &eta, &mp);
        // Frozen: 16 ln 2 + (2*2/4) * (8 ln 2 + 8 ln 2) = 32 ln 2.
        let frozen = 22.180_709_777_918_25_f64;
        assert!((32.0 * std::f64::consts::LN_2 - frozen).abs() < 1e-12);
        for b in &rb.bounds {
            assert!((b - frozen).abs() < 1e-12);
        }
        assert!(!rb.eta_above_bound[0]);
        let rb_big = regret_bound(&s, &spec, &[0.5, 0.5], &mp);
        assert!(rb_big.eta_above_bound.iter().all(|&w| w));

        // Doubling every learning rate halves the bound (1/eta homogeneity).
        let rb2 = regret_bound(&s, &spec, &[0.125, 0.125], &mp);
        for (a, b) in rb.bounds.iter().zip(&rb2.bounds) {
            assert!((a / 2.0 - b).abs() < 1e-12);
        }

        // Zero game: only the H/eta term survives.
        let z = zero_game();
        let sz = find_harmonic_measure(&z).unwrap();
        let rbz = regret_bound(&sz, &spec, &[0.25, 0.25], &z);
        assert!((rbz.bounds[0] - std::f64::consts::LN_2 / 0.25).abs() < 1e-12);
    }

    #[test]
    fn regret_of_stationary_runs_is_zero() {
        let g = matching_pennies();
        let spec = entropic(2);
        // Zero scores start exactly at the equilibrium: nothing moves.
        let cfg = AlgoConfig::new(Mode::Optimistic, vec![1.0 / 16.0; 2], 200);
        let record = run(&g, &spec, &cfg).unwrap();
        let regret = discrete_regret(&record, &g).unwrap();
        for per_player in regret {
            for r in per_player {
                assert!(r.abs() < 1e-12);
            }
        }
        let z = zero_game();
        let record = run(&z, &spec, &AlgoConfig::new(Mode::Extra, vec![0.1; 2], 50)).unwrap();
        let regret = discrete_regret(&record, &z).unwrap();
        assert!(regret.iter().flatten().all(|&r| r == 0.0));
    }

    #[test]
    fn energy_sequence_basics() {
        let g = matching_pennies();
        let spec = entropic(2);
        let s = find_harmonic_measure(&g).unwrap();
        let eta = vec![1.0 / 16.0; 2];
        let cfg = AlgoConfig::new(Mode::Optimistic, eta.clone(), 10);
        let record = run(&g, &spec, &cfg).unwrap();
        // Base = Q(0) = uniform = center: E_1 = 0.
        let energies = energy_sequence(&record, &s, &spec, &eta, None);
        assert!(energies[0].abs() < 1e-15);
        assert_eq!(energies.len(), record.steps() + 1);

        let z = zero_game();
        let sz = find_harmonic_measure(&z).unwrap();
        let record = run(&z, &spec, &AlgoConfig::new(Mode::Extra, eta.clone(), 20)).unwrap();
        let energies = energy_sequence(&record, &sz, &spec, &eta, None);
        for e in &energies {
            assert!((e - energies[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn template_residual_on_zero_game() {
        let z = zero_game();
        let spec = entropic(2);
        let s = find_harmonic_measure(&z).unwrap();
        let eta = vec![0.1; 2];
        let record = run(&z, &spec, &AlgoConfig::new(Mode::Optimistic, eta.clone(), 30)).unwrap();
        let base = MixedProfile::new(vec![vec![0.3, 0.7], vec![0.9, 0.1]]).unwrap();
        let residuals = template_residual(&record, &z, &s, &spec, &eta, &base).unwrap();
        for r in residuals {
            assert!((-1e-12..1e-12).contains(&r));
        }
        // Vanilla runs carry no template.
        let record = run(&z, &spec, &AlgoConfig::new(Mode::Vanilla, eta.clone(), 5)).unwrap();
        assert!(matches!(
            template_residual(&record, &z, &s, &spec, &eta, &base),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn summability_trivial_and_gating() {
        let z = zero_game();
        let spec = entropic(2);
        let s = find_harmonic_measure(&z).unwrap();
        let eta = vec![0.1; 2];
        let record = run(&z, &spec, &AlgoConfig::new(Mode::Extra, eta.clone(), 40)).unwrap();
        let sum = summability_check(&record, &z, &s, &spec, &eta);
        assert!(sum.applicable);
        assert!(sum.pass);
        assert!(sum.partial_sums.iter().all(|&v| v == 0.0));
        assert!(sum.bound.is_infinite());

        let vanilla = run(&z, &spec, &AlgoConfig::new(Mode::Vanilla, eta.clone(), 5)).unwrap();
        let gate = summability_check(&vanilla, &z, &s, &spec, &eta);
        assert!(!gate.applicable);
    }

    #[test]
    fn divergence_guard_trips() {
        // Constant push of 1e8 on one action diverges the score stream.
        let g = FiniteGame::new(
            vec![2, 2],
            vec![vec![1e8, 1e8, 0.0, 0.0], vec![0.0; 4]],
        )
        .unwrap();
        let spec = entropic(2);
        let cfg = AlgoConfig::new(Mode::Vanilla, vec![1.0, 1.0], 1000);
        let record = run(&g, &spec, &cfg).unwrap();
        let at = record.diverged_at().expect("guard must trip");
        assert!(at <= 12, "tripped at {at}");
        assert_eq!(record.steps(), at);
    }

    #[test]
    fn early_stop_on_gap() {
        let g = matching_pennies();
        let spec = entropic(2);
        // Stationary equilibrium run: gap is 0 at the first step.
        let cfg = AlgoConfig::new(Mode::Optimistic, vec![1.0 / 16.0; 2], 1000)
            .with_stop_gap(1e-6);
        let record = run(&g, &spec, &cfg).unwrap();
        assert_eq!(record.steps(), 1);
    }

    #[test]
    fn optimistic_matching_pennies_converges_from_offset() {
        let g = matching_pennies();
        let spec = entropic(2);
        let y0 = ScoreProfile::new(vec![vec![1.0, 0.0], vec![0.5, 0.0]]).unwrap();
        let cfg = AlgoConfig::new(Mode::Optimistic, vec![1.0 / 16.0; 2], 20_000)
            .with_initial_scores(y0);
        let record = run(&g, &spec, &cfg).unwrap();
        let (gaps, report) = convergence_diagnostics(&record, &g).unwrap();
        assert!(gaps[0] > 0.1, "offset start should not be at equilibrium");
        assert!(report.final_gap < 1e-2, "final gap {}", report.final_gap);
        assert!(report.cce_gap_of_average < 0.05);
    }
}
