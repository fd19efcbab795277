//! `hgames`: experiment runner for learning dynamics in harmonic games.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use harmonic_games::discrete::{AlgoConfig, Mode};
use harmonic_games::error::Error;
use harmonic_games::flow::relative_drift;
use harmonic_games::game::MixedProfile;
use harmonic_games::regularizer::{RegularizerKind, RegularizerSpec, ScoreProfile};
use harmonic_games::report::{
    analyze_game, execute_discrete, execute_flow, generate_with_structure, run_csv,
    to_pretty_json, trajectory_csv, DiscreteRunConfig, FlowRunConfig, StructureJson,
};
use harmonic_games::rng::SplitMix64;
use harmonic_games::{find_harmonic_measure, FiniteGame};

const MATCHING_PENNIES_JSON: &str = include_str!("../games/matching_pennies.json");
const SIEGE_JSON: &str = include_str!("../games/siege.json");
const COORDINATION_JSON: &str = include_str!("../games/coordination.json");

#[derive(Parser)]
#[command(
    name = "hgames",
    about = "Harmonic-game analysis and learning-dynamics experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a game: harmonic structure, Lipschitz moduli, step-size caps.
    Analyze {
        /// Game JSON path, or builtin:{matching-pennies|siege|coordination}.
        #[arg(long)]
        game: String,
        /// Also write the report JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a harmonic game and write it (plus its structure) as JSON.
    Generate {
        /// Action counts, one per player (at least two players).
        #[arg(required = true)]
        shape: Vec<usize>,
        /// Use the all-ones measure.
        #[arg(long, conflicts_with = "random")]
        uniform: bool,
        /// Draw random canonical measure weights from the seed.
        #[arg(long)]
        random: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run one experiment (discrete FTRL variants, or the continuous flow).
    Simulate(SimulateArgs),
    /// Reproduce the reference figure's data bundles.
    Figure1 {
        #[arg(long, default_value = "figure1")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run the built-in invariant suite and print a pass/fail table.
    Selftest,
}

#[derive(Args)]
struct SimulateArgs {
    /// Game JSON path, or builtin:{matching-pennies|siege|coordination}.
    #[arg(long)]
    game: String,
    /// Which dynamic to run.
    #[arg(long, default_value = "discrete", value_parser = ["discrete", "flow"])]
    dynamics: String,
    /// Regularizer kinds: one for all players, or comma-separated per player.
    #[arg(long, default_value = "entropic")]
    regularizer: String,
    /// vanilla | extra | optimistic | mixed:<alpha,list>.
    #[arg(long, default_value = "optimistic")]
    mode: String,
    /// Learning rates: "auto" (= half the admissible cap) or a comma list.
    #[arg(long, default_value = "auto")]
    eta: String,
    /// Discrete horizon (steps).
    #[arg(long, default_value_t = 100_000)]
    horizon: usize,
    /// Flow horizon (time units).
    #[arg(long, default_value_t = 100.0)]
    time: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    /// Recurrence detection threshold (flow only).
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Minimum time between recurrence events (flow only).
    #[arg(long, default_value_t = 1.0)]
    refractory: f64,
    /// Initial scores, flat comma list over all players' actions.
    #[arg(long)]
    y0: Option<String>,
    /// Stop a discrete run once the leading-state Nash gap drops below this.
    #[arg(long)]
    stop_gap: Option<f64>,
    /// Recorded in the written config (batch bookkeeping).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for CSV, summary and config files.
    #[arg(long, default_value = "simout")]
    out: PathBuf,
    /// Treat non-convergence or a tripped divergence guard as expected.
    #[arg(long)]
    expect_divergence: bool,
}

fn load_game(spec: &str) -> Result<FiniteGame, Error> {
    let text = match spec {
        "builtin:matching-pennies" => MATCHING_PENNIES_JSON.to_string(),
        "builtin:siege" => SIEGE_JSON.to_string(),
        "builtin:coordination" => COORDINATION_JSON.to_string(),
        path => std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))?,
    };
    FiniteGame::from_json(&text)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| Error::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|s| {
            s.trim().parse::<f64>().map_err(|e| Error::Invalid {
                path: what.into(),
                reason: format!("{s:?}: {e}"),
            })
        })
        .collect()
}

fn blocks_from_flat(game: &FiniteGame, flat: &[f64]) -> Result<Vec<Vec<f64>>, Error> {
    let need = game.total_actions();
    if flat.len() != need {
        return Err(Error::ShapeMismatch(format!(
            "y0 has {} entries, expected {need}",
            flat.len()
        )));
    }
    let mut blocks = Vec::new();
    let mut at = 0;
    for &c in game.action_counts() {
        blocks.push(flat[at..at + c].to_vec());
        at += c;
    }
    Ok(blocks)
}

fn cmd_analyze(game_spec: &str, out: Option<&Path>) -> Result<ExitCode, Error> {
    let game = load_game(game_spec)?;
    let report = analyze_game(&game);
    let json = to_pretty_json(&report);
    println!("{json}");
    if let Some(path) = out {
        write_file(path, &json)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_generate(
    shape: &[usize],
    uniform: bool,
    seed: u64,
    out_dir: &Path,
) -> Result<ExitCode, Error> {
    let (game, structure) = generate_with_structure(shape, uniform, seed)?;
    let shape_tag = shape
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("x");
    let stem = format!("harmonic_{shape_tag}_seed{seed}");
    let game_path = out_dir.join(format!("{stem}.json"));
    let structure_path = out_dir.join(format!("{stem}.structure.json"));
    write_file(&game_path, &game.to_json())?;
    write_file(
        &structure_path,
        &to_pretty_json(&StructureJson::from_structure(&structure)),
    )?;
    println!("{}", game_path.display());
    println!("{}", structure_path.display());
    Ok(ExitCode::SUCCESS)
}

fn regularizer_names(text: &str) -> Vec<String> {
    text.split(',').map(|s| s.trim().to_string()).collect()
}

fn cmd_simulate(args: &SimulateArgs) -> Result<ExitCode, Error> {
    let game = load_game(&args.game)?;
    let reg_names = regularizer_names(&args.regularizer);
    let y0_blocks = args
        .y0
        .as_deref()
        .map(|text| parse_f64_list(text, "y0").and_then(|flat| blocks_from_flat(&game, &flat)))
        .transpose()?;

    if let Some(w) = analyze_game(&game).payoff_scale_warning {
        eprintln!("warning: {w}");
    }

    match args.dynamics.as_str() {
        "flow" => {
            let config = FlowRunConfig {
                regularizer: reg_names,
                dt: args.dt,
                horizon: args.time,
                epsilon: args.epsilon,
                refractory: args.refractory,
                initial_scores: y0_blocks,
                seed: args.seed,
            };
            let outcome = execute_flow(&game, &config)?;
            write_file(
                &args.out.join("trajectory.csv"),
                &trajectory_csv(&outcome.trajectory),
            )?;
            write_file(
                &args.out.join("summary.json"),
                &to_pretty_json(&outcome.summary),
            )?;
            write_file(&args.out.join("config.json"), &to_pretty_json(&config))?;
            println!("{}", to_pretty_json(&outcome.summary));
            if outcome.summary.regret_under_bound {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("error: flow regret exceeded its range bound");
                Ok(ExitCode::FAILURE)
            }
        }
        _ => {
            let eta = match args.eta.as_str() {
                "auto" => None,
                list => Some(parse_f64_list(list, "eta")?),
            };
            let (mode, alphas) = match args.mode.as_str() {
                m if m.starts_with("mixed:") => {
                    let alphas = parse_f64_list(&m["mixed:".len()..], "alphas")?;
                    ("mixed".to_string(), Some(alphas))
                }
                m => (m.to_string(), None),
            };
            let config = DiscreteRunConfig {
                regularizer: reg_names,
                mode,
                alphas,
                eta,
                horizon: args.horizon,
                initial_scores: y0_blocks,
                stop_when_gap_below: args.stop_gap,
                seed: args.seed,
            };
            let outcome = execute_discrete(&game, &config)?;
            let csv = run_csv(&outcome.record, outcome.energy.as_deref(), &outcome.regret);
            write_file(&args.out.join("run.csv"), &csv)?;
            write_file(
                &args.out.join("summary.json"),
                &to_pretty_json(&outcome.summary),
            )?;
            write_file(&args.out.join("config.json"), &to_pretty_json(&config))?;
            println!("{}", to_pretty_json(&outcome.summary));

            let s = &outcome.summary;
            if let Some(step) = s.diverged_at {
                if !args.expect_divergence {
                    eprintln!("error: divergence guard tripped at step {step}");
                    return Ok(ExitCode::from(2));
                }
            }
            let diagnostics_pass = s.regret_under_bound.unwrap_or(true)
                && s.summability_pass.unwrap_or(true)
                && s.template_min_residual.is_none_or(|m| m >= -1e-10)
                && (s.converged || args.expect_divergence);
            if diagnostics_pass {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("error: diagnostics failed (see summary.json)");
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

fn cmd_figure1(out_dir: &Path, seed: u64) -> Result<ExitCode, Error> {
    let mp = FiniteGame::from_json(MATCHING_PENNIES_JSON)?;
    let mut manifest = serde_json::Map::new();
    manifest.insert("seed".into(), seed.into());

    // Matching Pennies, vanilla FTRL (euclidean): spirals out to the
    // best-response cycle.
    {
        let config = DiscreteRunConfig {
            regularizer: vec!["euclidean".into()],
            mode: "vanilla".into(),
            alphas: None,
            eta: Some(vec![0.05]),
            horizon: 10_000,
            initial_scores: Some(vec![vec![0.55, 0.45], vec![0.55, 0.45]]),
            stop_when_gap_below: None,
            seed,
        };
        let outcome = execute_discrete(&mp, &config)?;
        write_file(
            &out_dir.join("mp_vanilla.csv"),
            &run_csv(&outcome.record, outcome.energy.as_deref(), &outcome.regret),
        )?;
        manifest.insert(
            "mp_vanilla".into(),
            serde_json::to_value(&outcome.summary).unwrap(),
        );
    }

    // Matching Pennies, optimistic extrapolated FTRL (entropic): converges.
    {
        let config = DiscreteRunConfig {
            regularizer: vec!["entropic".into()],
            mode: "optimistic".into(),
            alphas: None,
            eta: Some(vec![1.0 / 16.0]),
            horizon: 200_000,
            initial_scores: Some(vec![vec![1.0, 0.0], vec![0.5, 0.0]]),
            stop_when_gap_below: Some(1e-4),
            seed,
        };
        let outcome = execute_discrete(&mp, &config)?;
        write_file(
            &out_dir.join("mp_ftrlplus.csv"),
            &run_csv(&outcome.record, outcome.energy.as_deref(), &outcome.regret),
        )?;
        manifest.insert(
            "mp_ftrlplus".into(),
            serde_json::to_value(&outcome.summary).unwrap(),
        );
    }

    // Matching Pennies, continuous flow (entropic): a closed orbit.
    {
        let config = FlowRunConfig {
            regularizer: vec!["entropic".into()],
            dt: 5e-3,
            horizon: 200.0,
            epsilon: 1e-2,
            refractory: 1.0,
            initial_scores: Some(vec![vec![0.5, 0.0], vec![0.0, 0.0]]),
            seed,
        };
        let outcome = execute_flow(&mp, &config)?;
        write_file(
            &out_dir.join("mp_flow.csv"),
            &trajectory_csv(&outcome.trajectory),
        )?;
        manifest.insert(
            "mp_flow".into(),
            serde_json::to_value(&outcome.summary).unwrap(),
        );
    }

    // A seeded 2x2x2 uniform-harmonic game under both discrete dynamics,
    // from a deterministic offset start.
    let (cube, cube_structure) = generate_with_structure(&[2, 2, 2], true, seed)?;
    write_file(&out_dir.join("cube_game.json"), &cube.to_json())?;
    write_file(
        &out_dir.join("cube_structure.json"),
        &to_pretty_json(&StructureJson::from_structure(&cube_structure)),
    )?;
    let mut offset_rng = SplitMix64::new(seed ^ 0xD1F_u64);
    let y0_cube: Vec<Vec<f64>> = cube
        .action_counts()
        .iter()
        .map(|&n| (0..n).map(|_| offset_rng.next_range(-1.0, 1.0)).collect())
        .collect();
    for (mode, file, horizon, stop) in [
        ("vanilla", "cube_vanilla.csv", 20_000usize, None),
        ("optimistic", "cube_ftrlplus.csv", 400_000, Some(1e-3)),
    ] {
        let config = DiscreteRunConfig {
            regularizer: vec!["entropic".into()],
            mode: mode.into(),
            alphas: None,
            eta: None,
            horizon,
            initial_scores: Some(y0_cube.clone()),
            stop_when_gap_below: stop,
            seed,
        };
        let outcome = execute_discrete(&cube, &config)?;
        write_file(
            &out_dir.join(file),
            &run_csv(&outcome.record, outcome.energy.as_deref(), &outcome.regret),
        )?;
        manifest.insert(
            format!("cube_{mode}"),
            serde_json::to_value(&outcome.summary).unwrap(),
        );
    }

    write_file(
        &out_dir.join("manifest.json"),
        &to_pretty_json(&serde_json::Value::Object(manifest)),
    )?;
    println!("figure1 bundle written to {}", out_dir.display());
    Ok(ExitCode::SUCCESS)
}

struct Check {
    name: &'static str,
    run: fn() -> Result<(), String>,
}

fn check(condition: bool, message: String) -> Result<(), String> {
    if condition {
        Ok(())
    } else {
        Err(message)
    }
}

fn selftest_checks() -> Vec<Check> {
    vec![
        Check {
            name: "payoff-field-pairing",
            run: || {
                let mp = FiniteGame::from_json(MATCHING_PENNIES_JSON).map_err(|e| e.to_string())?;
                let mut rng = SplitMix64::new(1);
                for _ in 0..50 {
                    let x = MixedProfile::new(vec![rng.next_simplex(2), rng.next_simplex(2)])
                        .map_err(|e| e.to_string())?;
                    let u = mp.mixed_payoff(&x).map_err(|e| e.to_string())?;
                    let v = mp.payoff_field(&x).map_err(|e| e.to_string())?;
                    for i in 0..2 {
                        let pairing: f64 =
                            v.block(i).iter().zip(x.block(i)).map(|(a, b)| a * b).sum();
                        check((u[i] - pairing).abs() < 1e-12, format!("player {i}"))?;
                    }
                }
                Ok(())
            },
        },
        Check {
            name: "detector-canonical-forms",
            run: || {
                let siege = FiniteGame::from_json(SIEGE_JSON).map_err(|e| e.to_string())?;
                let s = find_harmonic_measure(&siege).ok_or("siege not detected")?;
                check(
                    (s.measure()[0][1] - 5.0).abs() < 1e-9 && (s.masses()[0] - 6.0).abs() < 1e-9,
                    format!("siege measure {:?}", s.measure()),
                )?;
                let coord = FiniteGame::from_json(COORDINATION_JSON).map_err(|e| e.to_string())?;
                check(
                    find_harmonic_measure(&coord).is_none(),
                    "coordination wrongly detected".into(),
                )
            },
        },
        Check {
            name: "detector-generator-roundtrip",
            run: || {
                for shape in [vec![2usize, 2], vec![2, 2, 2]] {
                    for seed in 0..5u64 {
                        let (game, structure) =
                            generate_with_structure(&shape, false, seed).map_err(|e| e.to_string())?;
                        check(
                            structure.residual() < 1e-9,
                            format!("residual {}", structure.residual()),
                        )?;
                        let detected = find_harmonic_measure(&game)
                            .ok_or(format!("{shape:?} seed {seed} not detected"))?;
                        check(detected.residual() < 1e-9, "detected residual".into())?;
                    }
                }
                Ok(())
            },
        },
        Check {
            name: "zero-sum-bridge",
            run: || {
                let mp = FiniteGame::from_json(MATCHING_PENNIES_JSON).map_err(|e| e.to_string())?;
                let eq = MixedProfile::uniform(&[2, 2]);
                let s = harmonic_games::harmonic::measure_from_interior_equilibrium(&mp, &eq)
                    .map_err(|e| e.to_string())?;
                check(s.residual() < 1e-12, format!("residual {}", s.residual()))
            },
        },
        Check {
            name: "fenchel-three-point",
            run: || {
                use harmonic_games::regularizer::{conjugate_block, fenchel_block, mirror_block};
                let mut rng = SplitMix64::new(3);
                for kind in [RegularizerKind::Entropic, RegularizerKind::Euclidean] {
                    for _ in 0..200 {
                        let p = rng.next_simplex(3);
                        let y: Vec<f64> = (0..3).map(|_| rng.next_range(-2.0, 2.0)).collect();
                        let y2: Vec<f64> = (0..3).map(|_| rng.next_range(-2.0, 2.0)).collect();
                        let f = fenchel_block(kind, &p, &y);
                        check(f >= -1e-12, format!("negative coupling {f}"))?;
                        let mut q = vec![0.0; 3];
                        mirror_block(kind, &y, &mut q);
                        let lhs = fenchel_block(kind, &p, &y2);
                        let cross: f64 = y2
                            .iter()
                            .zip(&y)
                            .zip(q.iter().zip(&p))
                            .map(|((a, b), (c, d))| (a - b) * (c - d))
                            .sum();
                        let rhs = f + fenchel_block(kind, &q, &y2) + cross;
                        check(
                            (lhs - rhs).abs() < 1e-10,
                            format!("three-point identity off by {}", lhs - rhs),
                        )?;
                        let _ = conjugate_block(kind, &y);
                    }
                }
                Ok(())
            },
        },
        Check {
            name: "flow-conservation",
            run: || {
                let mp = FiniteGame::from_json(MATCHING_PENNIES_JSON).map_err(|e| e.to_string())?;
                let s = find_harmonic_measure(&mp).ok_or("mp not harmonic")?;
                let spec = RegularizerSpec::uniform(RegularizerKind::Entropic, 2);
                let y0 = ScoreProfile::new(vec![vec![0.5, 0.0], vec![0.0, 0.0]])
                    .map_err(|e| e.to_string())?;
                let traj =
                    harmonic_games::flow::integrate_flow(&mp, &spec, &y0, 20.0, 1e-3, Some(&s))
                        .map_err(|e| e.to_string())?;
                let drift = relative_drift(traj.energy().unwrap());
                check(drift < 1e-8, format!("energy drift {drift:.3e}"))
            },
        },
        Check {
            name: "flow-recurrence",
            run: || {
                let mp = FiniteGame::from_json(MATCHING_PENNIES_JSON).map_err(|e| e.to_string())?;
                let spec = RegularizerSpec::uniform(RegularizerKind::Entropic, 2);
                let y0 = ScoreProfile::new(vec![vec![0.5, 0.0], vec![0.0, 0.0]])
                    .map_err(|e| e.to_string())?;
                let traj = harmonic_games::flow::integrate_flow(&mp, &spec, &y0, 50.0, 0.01, None)
                    .map_err(|e| e.to_string())?;
                let events = harmonic_games::flow::recurrence_events(&traj, 1e-2, 1.0)
                    .map_err(|e| e.to_string())?;
                check(!events.is_empty(), "no recurrence events".into())
            },
        },
        Check {
            name: "vanilla-growth-law",
            run: || {
                let mp = FiniteGame::from_json(MATCHING_PENNIES_JSON).map_err(|e| e.to_string())?;
                let spec = RegularizerSpec::uniform(RegularizerKind::Euclidean, 2);
                let y0 = ScoreProfile::new(vec![vec![0.55, 0.45], vec![0.55, 0.45]])
                    .map_err(|e| e.to_string())?;
                let cfg = AlgoConfig::new(Mode::Vanilla, vec![0.05, 0.05], 200)
                    .with_initial_scores(y0);
                let record =
                    harmonic_games::discrete::run(&mp, &spec, &cfg).map_err(|e| e.to_string())?;
                let rate = 1.0 + 16.0 * 0.05 * 0.05;
                let d = |b: &[Vec<f64>]| {
                    0.5 * ((b[0][0] - 0.5).powi(2) + (b[1][0] - 0.5).powi(2))
                };
                let d1 = d(&record.base_state(1));
                let d2 = d(&record.base_state(2));
                check(
                    (d2 - rate * d1).abs() < 1e-12,
                    format!("growth {d2} vs {}", rate * d1),
                )
            },
        },
        Check {
            name: "ftrlplus-convergence",
            run: || {
                let mp = FiniteGame::from_json(MATCHING_PENNIES_JSON).map_err(|e| e.to_string())?;
                let spec = RegularizerSpec::uniform(RegularizerKind::Entropic, 2);
                let y0 = ScoreProfile::new(vec![vec![1.0, 0.0], vec![0.5, 0.0]])
                    .map_err(|e| e.to_string())?;
                let cfg = AlgoConfig::new(Mode::Optimistic, vec![1.0 / 16.0; 2], 30_000)
                    .with_initial_scores(y0)
                    .with_stop_gap(1e-3);
                let record =
                    harmonic_games::discrete::run(&mp, &spec, &cfg).map_err(|e| e.to_string())?;
                let gap = *record.nash_gaps().last().unwrap();
                check(gap < 1e-3, format!("final gap {gap:.3e}"))
            },
        },
        Check {
            name: "regret-within-constant-bound",
            run: || {
                let mp = FiniteGame::from_json(MATCHING_PENNIES_JSON).map_err(|e| e.to_string())?;
                let s = find_harmonic_measure(&mp).ok_or("mp not harmonic")?;
                let spec = RegularizerSpec::uniform(RegularizerKind::Entropic, 2);
                let eta = vec![1.0 / 32.0; 2];
                let y0 = ScoreProfile::new(vec![vec![1.0, 0.0], vec![0.5, 0.0]])
                    .map_err(|e| e.to_string())?;
                let cfg = AlgoConfig::new(Mode::Extra, eta.clone(), 20_000).with_initial_scores(y0);
                let record =
                    harmonic_games::discrete::run(&mp, &spec, &cfg).map_err(|e| e.to_string())?;
                let regret = harmonic_games::discrete::discrete_regret(&record, &mp)
                    .map_err(|e| e.to_string())?;
                let rb = harmonic_games::discrete::regret_bound(&s, &spec, &eta, &mp);
                for (seq, &bound) in regret.iter().zip(&rb.bounds) {
                    for &r in seq {
                        check(r <= bound + 1e-9, format!("regret {r} over bound {bound}"))?;
                    }
                }
                Ok(())
            },
        },
        Check {
            name: "template-and-summability",
            run: || {
                let mp = FiniteGame::from_json(MATCHING_PENNIES_JSON).map_err(|e| e.to_string())?;
                let s = find_harmonic_measure(&mp).ok_or("mp not harmonic")?;
                let spec = RegularizerSpec::uniform(RegularizerKind::Entropic, 2);
                let eta = vec![1.0 / 16.0; 2];
                let y0 = ScoreProfile::new(vec![vec![1.0, 0.0], vec![0.5, 0.0]])
                    .map_err(|e| e.to_string())?;
                let cfg =
                    AlgoConfig::new(Mode::Optimistic, eta.clone(), 5_000).with_initial_scores(y0);
                let record =
                    harmonic_games::discrete::run(&mp, &spec, &cfg).map_err(|e| e.to_string())?;
                let residuals = harmonic_games::discrete::template_residual(
                    &record,
                    &mp,
                    &s,
                    &spec,
                    &eta,
                    s.center(),
                )
                .map_err(|e| e.to_string())?;
                let min = residuals.iter().cloned().fold(f64::INFINITY, f64::min);
                check(min >= -1e-10, format!("template residual {min:.3e}"))?;
                let sum = harmonic_games::discrete::summability_check(&record, &mp, &s, &spec, &eta);
                check(sum.pass, format!("summability {} > {}", sum.partial_sums.last().unwrap(), sum.bound))
            },
        },
        Check {
            name: "field-evaluation-counts",
            run: || {
                let mp = FiniteGame::from_json(MATCHING_PENNIES_JSON).map_err(|e| e.to_string())?;
                let spec = RegularizerSpec::uniform(RegularizerKind::Entropic, 2);
                let t = 25;
                let counts: Vec<(Mode, usize)> = vec![
                    (Mode::Vanilla, t),
                    (Mode::Optimistic, t + 1),
                    (Mode::Extra, 2 * t),
                ];
                for (mode, expected) in counts {
                    let cfg = AlgoConfig::new(mode, vec![0.01; 2], t);
                    let record = harmonic_games::discrete::run(&mp, &spec, &cfg)
                        .map_err(|e| e.to_string())?;
                    check(
                        record.field_evaluations() == expected,
                        format!("{}: {} evals", record.mode_name(), record.field_evaluations()),
                    )?;
                }
                Ok(())
            },
        },
        Check {
            name: "seeded-determinism",
            run: || {
                let (a, _) = generate_with_structure(&[2, 2], false, 7).map_err(|e| e.to_string())?;
                let (b, _) = generate_with_structure(&[2, 2], false, 7).map_err(|e| e.to_string())?;
                check(a == b, "same seed produced different games".into())
            },
        },
    ]
}

fn cmd_selftest() -> ExitCode {
    let checks = selftest_checks();
    let mut failures = 0;
    println!("{:<34} result", "check");
    println!("{}", "-".repeat(42));
    for c in checks {
        match (c.run)() {
            Ok(()) => println!("{:<34} PASS", c.name),
            Err(msg) => {
                failures += 1;
                println!("{:<34} FAIL  {msg}", c.name);
            }
        }
    }
    if failures == 0 {
        println!("all checks passed");
        ExitCode::SUCCESS
    } else {
        eprintln!("error: {failures} selftest check(s) failed");
        ExitCode::FAILURE
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Analyze { game, out } => cmd_analyze(game, out.as_deref()),
        Command::Generate {
            shape,
            uniform,
            random,
            seed,
            out,
        } => {
            let uniform_measure = *uniform || !*random;
            cmd_generate(shape, uniform_measure, *seed, out)
        }
        Command::Simulate(args) => cmd_simulate(args),
        Command::Figure1 { out, seed } => cmd_figure1(out, *seed),
        Command::Selftest => Ok(cmd_selftest()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
