//! File formats: trajectory and run CSVs, analysis and summary JSON, and
//! the experiment configuration schema shared by the CLI and the C API.
//!
//! All floating point values in CSVs are written with 17 significant digits
//! so that doubles round-trip exactly and reruns are byte-identical.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::discrete::{ConvergenceReport, RunRecord};
use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::game::FiniteGame;
use crate::harmonic::HarmonicStructure;
use crate::regularizer::{RegularizerKind, RegularizerSpec};

/// 17-significant-digit decimal rendering (exact f64 round trip).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn state_headers(prefix: &str, counts: &[usize], out: &mut Vec<String>) {
    for (i, &n) in counts.iter().enumerate() {
        for a in 0..n {
            out.push(format!("{prefix}[{}][{}]", i + 1, a + 1));
        }
    }
}

/// Trajectory CSV: `t, x[i][a]..., E, G` (energy and G columns only when
/// recorded).
pub fn trajectory_csv(traj: &FlowTrajectory) -> String {
    let mut headers = vec!["t".to_string()];
    state_headers("x", traj.action_counts(), &mut headers);
    if traj.energy().is_some() {
        headers.push("E".into());
    }
    if traj.logit_g().is_some() {
        headers.push("G".into());
    }
    let mut out = String::new();
    out.push_str(&headers.join(","));
    out.push('\n');
    for k in 0..traj.num_samples() {
        write!(out, "{}", fmt_f64(traj.time(k))).unwrap();
        for v in traj.state_row(k) {
            write!(out, ",{}", fmt_f64(*v)).unwrap();
        }
        if let Some(e) = traj.energy() {
            write!(out, ",{}", fmt_f64(e[k])).unwrap();
        }
        if let Some(g) = traj.logit_g() {
            write!(out, ",{}", fmt_f64(g[k])).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Run CSV: `n, x[i][a]..., xlead[i][a]..., nash_gap, E, regret[i]...,
/// stepnorm2_lead, stepnorm2_base` (the E column only when an energy
/// sequence is supplied).
pub fn run_csv(run: &RunRecord, energy: Option<&[f64]>, regret: &[Vec<f64>]) -> String {
    let counts = run.action_counts();
    let mut headers = vec!["n".to_string()];
    state_headers("x", counts, &mut headers);
    state_headers("xlead", counts, &mut headers);
    headers.push("nash_gap".into());
    if energy.is_some() {
        headers.push("E".into());
    }
    for i in 0..counts.len() {
        headers.push(format!("regret[{}]", i + 1));
    }
    headers.push("stepnorm2_lead".into());
    headers.push("stepnorm2_base".into());

    let mut out = String::new();
    out.push_str(&headers.join(","));
    out.push('\n');
    for step in 1..=run.steps() {
        write!(out, "{step}").unwrap();
        for block in run.base_state(step) {
            for v in block {
                write!(out, ",{}", fmt_f64(v)).unwrap();
            }
        }
        for block in run.lead_state(step) {
            for v in block {
                write!(out, ",{}", fmt_f64(v)).unwrap();
            }
        }
        write!(out, ",{}", fmt_f64(run.nash_gaps()[step - 1])).unwrap();
        if let Some(e) = energy {
            write!(out, ",{}", fmt_f64(e[step - 1])).unwrap();
        }
        for per_player in regret {
            write!(out, ",{}", fmt_f64(per_player[step - 1])).unwrap();
        }
        write!(
            out,
            ",{},{}",
            fmt_f64(run.stepnorm2_lead()[step - 1]),
            fmt_f64(run.stepnorm2_base()[step - 1])
        )
        .unwrap();
        out.push('\n');
    }
    out
}

/// Serialized harmonic structure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureJson {
    pub measure: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
    pub center: Vec<Vec<f64>>,
    pub residual: f64,
}

impl StructureJson {
    pub fn from_structure(s: &HarmonicStructure) -> Self {
        Self {
            measure: s.measure().to_vec(),
            masses: s.masses().to_vec(),
            center: s.center().blocks().to_vec(),
            residual: s.residual(),
        }
    }
}

/// Report emitted by `analyze`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub players: usize,
    pub actions: Vec<usize>,
    pub uniform_harmonic: bool,
    pub harmonic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureJson>,
    pub lipschitz: Vec<f64>,
    /// Admissible step-size caps per regularizer kind (null when the game
    /// is not harmonic).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step_size_entropic: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step_size_euclidean: Option<Vec<f64>>,
    /// Set when payoffs are large enough to strain the absolute residual
    /// tolerances (assumed O(1)).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoff_scale_warning: Option<String>,
}

pub fn analyze_game(game: &FiniteGame) -> AnalyzeReport {
    let structure = crate::harmonic::find_harmonic_measure(game);
    let lipschitz = game.lipschitz_bound();
    let max_abs = lipschitz.iter().cloned().fold(0.0f64, f64::max);
    let (entropic, euclidean) = match &structure {
        Some(s) => {
            let ent = RegularizerSpec::uniform(RegularizerKind::Entropic, game.num_players());
            let euc = RegularizerSpec::uniform(RegularizerKind::Euclidean, game.num_players());
            (
                Some(crate::discrete::max_step_size(game, s, &ent)),
                Some(crate::discrete::max_step_size(game, s, &euc)),
            )
        }
        None => (None, None),
    };
    AnalyzeReport {
        players: game.num_players(),
        actions: game.action_counts().to_vec(),
        uniform_harmonic: crate::harmonic::is_uniform_harmonic(game),
        harmonic: structure.is_some(),
        structure: structure.as_ref().map(StructureJson::from_structure),
        lipschitz,
        max_step_size_entropic: entropic,
        max_step_size_euclidean: euclidean,
        payoff_scale_warning: (max_abs > 1e3).then(|| {
            format!(
                "max |payoff| = {max_abs:.3e}; residual tolerances assume O(1) payoffs"
            )
        }),
    }
}

/// Discrete-run configuration (mirrors the CLI flags; also the C API's
/// request schema).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteRunConfig {
    /// Per-player regularizer kinds ("entropic" | "euclidean").
    pub regularizer: Vec<String>,
    /// "vanilla" | "extra" | "optimistic" | "mixed".
    pub mode: String,
    /// Extrapolation coefficients, required when mode = "mixed".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    /// Explicit per-player learning rates, or null for automatic
    /// (etabar / 2 from the game's harmonic structure).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_scores: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_when_gap_below: Option<f64>,
    /// Carried through to the written config for batch bookkeeping.
    #[serde(default)]
    pub seed: u64,
}

/// Flow configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowRunConfig {
    pub regularizer: Vec<String>,
    pub dt: f64,
    pub horizon: f64,
    pub epsilon: f64,
    pub refractory: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_scores: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub seed: u64,
}

pub fn parse_regularizer(names: &[String], num_players: usize) -> Result<RegularizerSpec> {
    let kinds: Vec<RegularizerKind> = match names.len() {
        1 => vec![RegularizerKind::parse(&names[0])?; num_players],
        n if n == num_players => names
            .iter()
            .map(|s| RegularizerKind::parse(s))
            .collect::<Result<_>>()?,
        n => {
            return Err(Error::ShapeMismatch(format!(
                "{n} regularizer kinds for {num_players} players"
            )))
        }
    };
    Ok(RegularizerSpec::new(kinds))
}

/// Summary JSON for a discrete run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteSummary {
    pub mode: String,
    pub eta: Vec<f64>,
    pub steps: usize,
    pub field_evaluations: usize,
    pub final_nash_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_step_below_1e4: Option<usize>,
    pub cce_gap_of_average: f64,
    pub final_regret: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regret_bound: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regret_under_bound: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summability_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summability_pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub template_min_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diverged_at: Option<usize>,
    pub converged: bool,
}

/// Summary JSON for a flow run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowSummary {
    pub dt: f64,
    pub horizon: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub logit_g_drift: Option<f64>,
    pub recurrence_events: Vec<(f64, f64)>,
    pub regret: Vec<f64>,
    pub regret_bound: Vec<f64>,
    pub regret_under_bound: bool,
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serialization cannot fail")
}

/// Generate a harmonic game together with its structure.  A uniform run
/// uses the all-ones measure; otherwise measure entries are drawn uniformly
/// from [0.5, 2) with `SplitMix64(seed)` and canonicalized (divided by the
/// minimum), and the payoff draw is seeded with the generator's next output.
pub fn generate_with_structure(
    action_counts: &[usize],
    uniform_measure: bool,
    seed: u64,
) -> Result<(FiniteGame, HarmonicStructure)> {
    let mut rng = crate::rng::SplitMix64::new(seed);
    let measure: Vec<Vec<f64>> = if uniform_measure {
        action_counts.iter().map(|&n| vec![1.0; n]).collect()
    } else {
        let raw: Vec<Vec<f64>> = action_counts
            .iter()
            .map(|&n| (0..n).map(|_| rng.next_range(0.5, 2.0)).collect())
            .collect();
        let min = raw
            .iter()
            .flatten()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        raw.iter()
            .map(|b| b.iter().map(|w| w / min).collect())
            .collect()
    };
    let payoff_seed = rng.next_u64();
    let game = crate::harmonic::generate_harmonic(action_counts, &measure, payoff_seed)?;
    let structure = HarmonicStructure::from_measure(&game, measure)?;
    Ok((game, structure))
}

fn parse_mode(name: &str, alphas: Option<&[f64]>) -> Result<crate::discrete::Mode> {
    use crate::discrete::Mode;
    match name {
        "vanilla" => Ok(Mode::Vanilla),
        "extra" => Ok(Mode::Extra),
        "optimistic" => Ok(Mode::Optimistic),
        "mixed" => {
            let a = alphas.ok_or_else(|| Error::Invalid {
                path: "alphas".into(),
                reason: "mixed mode needs extrapolation coefficients".into(),
            })?;
            Ok(Mode::Mixed(a.to_vec()))
        }
        other => Err(Error::Invalid {
            path: "mode".into(),
            reason: format!("unknown mode {other:?}"),
        }),
    }
}

fn scores_from_blocks(
    blocks: Option<&Vec<Vec<f64>>>,
) -> Result<Option<crate::regularizer::ScoreProfile>> {
    blocks
        .map(|b| crate::regularizer::ScoreProfile::new(b.clone()))
        .transpose()
}

/// Everything produced by one discrete experiment.
pub struct DiscreteOutcome {
    pub record: RunRecord,
    pub summary: DiscreteSummary,
    /// Energy sequence at the center (present when the game is harmonic).
    pub energy: Option<Vec<f64>>,
    pub regret: Vec<Vec<f64>>,
}

/// Run a discrete experiment end to end: resolve the step size (automatic
/// rates take half the admissible cap, which requires a harmonic game), run
/// the dynamic, and evaluate every diagnostic that applies.
pub fn execute_discrete(game: &FiniteGame, config: &DiscreteRunConfig) -> Result<DiscreteOutcome> {
    let n = game.num_players();
    let spec = parse_regularizer(&config.regularizer, n)?;
    let structure = crate::harmonic::find_harmonic_measure(game);
    let etas = match &config.eta {
        Some(list) => {
            if list.len() == 1 {
                vec![list[0]; n]
            } else if list.len() == n {
                list.clone()
            } else {
                return Err(Error::ShapeMismatch(format!(
                    "{} learning rates for {n} players",
                    list.len()
                )));
            }
        }
        None => {
            let s = structure.as_ref().ok_or_else(|| {
                Error::NotApplicable(
                    "automatic step size needs a harmonic game; pass explicit rates".into(),
                )
            })?;
            crate::discrete::max_step_size(game, s, &spec)
                .iter()
                .map(|cap| cap / 2.0)
                .collect()
        }
    };
    let mode = parse_mode(&config.mode, config.alphas.as_deref())?;
    let mut algo = crate::discrete::AlgoConfig::new(mode, etas.clone(), config.horizon);
    algo.initial_scores = scores_from_blocks(config.initial_scores.as_ref())?;
    algo.stop_when_gap_below = config.stop_when_gap_below;

    let record = crate::discrete::run(game, &spec, &algo)?;
    let regret = crate::discrete::discrete_regret(&record, game)?;
    let (_, conv) = crate::discrete::convergence_diagnostics(&record, game)?;

    let mut summary = DiscreteSummary {
        mode: config.mode.clone(),
        eta: etas.clone(),
        steps: record.steps(),
        field_evaluations: record.field_evaluations(),
        final_nash_gap: conv.final_gap,
        first_step_below_1e4: conv.first_step_below,
        cce_gap_of_average: conv.cce_gap_of_average,
        final_regret: regret
            .iter()
            .map(|r| *r.last().expect("run has steps"))
            .collect(),
        regret_bound: None,
        regret_under_bound: None,
        summability_bound: None,
        summability_pass: None,
        template_min_residual: None,
        diverged_at: record.diverged_at(),
        converged: conv.final_gap < config.stop_when_gap_below.unwrap_or(1e-3),
    };

    let mut energy = None;
    if let Some(s) = &structure {
        energy = Some(crate::discrete::energy_sequence(
            &record, s, &spec, &etas, None,
        ));
        let rb = crate::discrete::regret_bound(s, &spec, &etas, game);
        summary.regret_bound = Some(rb.bounds.clone());
        // The regret, summability, and template certificates all carry the
        // extrapolation hypothesis; vanilla runs get the bound reported but
        // not enforced.
        if record.alphas().is_some() {
            let under = regret
                .iter()
                .zip(&rb.bounds)
                .all(|(seq, &b)| seq.iter().all(|&r| r <= b + 1e-9));
            summary.regret_under_bound = Some(under);
            let sum = crate::discrete::summability_check(&record, game, s, &spec, &etas);
            summary.summability_bound = Some(sum.bound);
            summary.summability_pass = Some(sum.pass);
            let residuals = crate::discrete::template_residual(
                &record,
                game,
                s,
                &spec,
                &etas,
                s.center(),
            )?;
            summary.template_min_residual =
                residuals.iter().cloned().reduce(f64::min);
        }
    }
    Ok(DiscreteOutcome {
        record,
        summary,
        energy,
        regret,
    })
}

/// Everything produced by one flow experiment.
pub struct FlowOutcome {
    pub trajectory: FlowTrajectory,
    pub summary: FlowSummary,
}

/// Integrate a flow and evaluate its diagnostics (conservation drift when
/// the game is harmonic, recurrence events, regret against the range bound).
pub fn execute_flow(game: &FiniteGame, config: &FlowRunConfig) -> Result<FlowOutcome> {
    let n = game.num_players();
    let spec = parse_regularizer(&config.regularizer, n)?;
    let structure = crate::harmonic::find_harmonic_measure(game);
    let y0 = scores_from_blocks(config.initial_scores.as_ref())?
        .unwrap_or_else(|| crate::regularizer::ScoreProfile::zeros(game.action_counts()));
    let trajectory = crate::flow::integrate_flow(
        game,
        &spec,
        &y0,
        config.horizon,
        config.dt,
        structure.as_ref(),
    )?;
    let events = crate::flow::recurrence_events(&trajectory, config.epsilon, config.refractory)?;
    let regret = crate::flow::continuous_regret_envelope(&trajectory, game)?;
    let bound: Vec<f64> = game
        .action_counts()
        .iter()
        .enumerate()
        .map(|(i, &c)| spec.range(i, c))
        .collect();
    let under = regret.iter().zip(&bound).all(|(&r, &b)| r <= b + 1e-3);
    let summary = FlowSummary {
        dt: config.dt,
        horizon: config.horizon,
        samples: trajectory.num_samples(),
        energy_drift: trajectory.energy().map(crate::flow::relative_drift),
        logit_g_drift: trajectory.logit_g().map(crate::flow::relative_drift),
        recurrence_events: events,
        regret,
        regret_bound: bound,
        regret_under_bound: under,
    };
    Ok(FlowOutcome {
        trajectory,
        summary,
    })
}

impl ConvergenceReport {
    pub fn converged(&self, tol: f64) -> bool {
        self.final_gap < tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::{run, AlgoConfig, Mode};
    use crate::flow::integrate_flow;
    use crate::regularizer::ScoreProfile;

    #[test]
    fn float_formatting_round_trips() {
        for x in [
            0.1,
            -3.25e-17,
            std::f64::consts::PI,
            1.0 / 3.0,
            6.02214076e23,
        ] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn trajectory_csv_has_header_and_rows() {
        let g = FiniteGame::from_json(include_str!("../games/matching_pennies.json")).unwrap();
        let spec = RegularizerSpec::uniform(RegularizerKind::Entropic, 2);
        let y0 = ScoreProfile::zeros(&[2, 2]);
        let traj = integrate_flow(&g, &spec, &y0, 1.0, 0.5, None).unwrap();
        let csv = trajectory_csv(&traj);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x[1][1],x[1][2],x[2][1],x[2][2]");
        assert_eq!(csv.lines().count(), 1 + 3);
    }

    #[test]
    fn run_csv_shape() {
        let g = FiniteGame::from_json(include_str!("../games/matching_pennies.json")).unwrap();
        let spec = RegularizerSpec::uniform(RegularizerKind::Entropic, 2);
        let cfg = AlgoConfig::new(Mode::Optimistic, vec![0.0625, 0.0625], 5);
        let record = run(&g, &spec, &cfg).unwrap();
        let regret = crate::discrete::discrete_regret(&record, &g).unwrap();
        let csv = run_csv(&record, None, &regret);
        assert!(csv.starts_with("n,x[1][1]"));
        assert_eq!(csv.lines().count(), 1 + 5);
        assert!(csv.lines().nth(1).unwrap().starts_with("1,"));
    }

    #[test]
    fn analyze_report_for_siege() {
        let g = FiniteGame::from_json(include_str!("../games/siege.json")).unwrap();
        let report = analyze_game(&g);
        assert!(report.harmonic);
        assert!(!report.uniform_harmonic);
        let s = report.structure.as_ref().unwrap();
        assert!((s.masses[0] - 6.0).abs() < 1e-9);
        // Entropic step cap: m_i / (2 * 4 * 20).
        let caps = report.max_step_size_entropic.as_ref().unwrap();
        assert!((caps[0] - 3.0 / 80.0).abs() < 1e-12);
        assert!((caps[1] - 1.0 / 32.0).abs() < 1e-12);
        let round: AnalyzeReport =
            serde_json::from_str(&to_pretty_json(&report)).unwrap();
        assert_eq!(round.players, 2);
    }
}
