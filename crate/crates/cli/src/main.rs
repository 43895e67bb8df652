//! `wristkin` command-line tool.
//!
//! Exit codes: 0 success, 1 validation failure, 2 I/O or parse error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use wristkin::ik::{solve_ik, IkStatus};
use wristkin::se3::Pose;
use wristkin::tool::tool_tip_pose;

use wristkin_cli::config::{pose_from_parts, pose_to_parts, HarnessConfig};
use wristkin_cli::error::HarnessError;
use wristkin_cli::oracle::{oracle_ik, OracleOptions};
use wristkin_cli::pegboard::{gen_peg_transfer, interleave, PegBoard, PegTransferOptions};
use wristkin_cli::records::{
    read_jsonl, write_jsonl, EventRecord, TrajectoryRecord,
};
use wristkin_cli::replay::replay;
use wristkin_cli::scoring::{score_trial, TrialEvent};
use wristkin_cli::synth::gen_consistent_state;

#[derive(Parser)]
#[command(
    name = "wristkin",
    about = "Passive-wrist instrument kinematics under an RCM constraint: \
             forward/inverse evaluation, teleop replay, and task tooling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PoseArgs {
    /// Position, meters: x,y,z
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pos: Vec<f64>,
    /// Orientation quaternion: w,x,y,z
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true,
          default_values_t = [1.0, 0.0, 0.0, 0.0])]
    quat: Vec<f64>,
}

impl PoseArgs {
    fn pose(&self) -> Result<Pose, HarnessError> {
        let pos: [f64; 3] = self
            .pos
            .as_slice()
            .try_into()
            .map_err(|_| HarnessError::validation("--pos expects x,y,z"))?;
        let quat: [f64; 4] = self
            .quat
            .as_slice()
            .try_into()
            .map_err(|_| HarnessError::validation("--quat expects w,x,y,z"))?;
        pose_from_parts(&pos, &quat)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Forward pass: handle pose to tool-tip pose and passive angles.
    Fk {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        pose: PoseArgs,
    },
    /// Inverse mapping: target tip pose to handle / end-effector poses.
    Ik {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        pose: PoseArgs,
    },
    /// Replay a trajectory stream through the teleop pipelines.
    Replay {
        #[arg(long)]
        config: PathBuf,
        /// Input trajectory JSONL.
        #[arg(long)]
        input: PathBuf,
        /// Output command JSONL.
        #[arg(long)]
        output: PathBuf,
        /// Metrics JSON summary.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Solve N synthetic round trips and report recovery accuracy.
    Roundtrip {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bend-angle bound for generated states, degrees.
        #[arg(long, default_value_t = 40.0)]
        max_bend_deg: f64,
    },
    /// Generate a bimanual peg-transfer trajectory stream.
    GenPeg {
        #[arg(long)]
        output: PathBuf,
        /// Peg square side, meters.
        #[arg(long, default_value_t = 0.040)]
        spacing_m: f64,
        /// Board center, meters: x,y,z
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true,
              default_values_t = [0.0, 0.0, 0.0])]
        center: Vec<f64>,
        #[arg(long, default_value_t = 0.030)]
        lift_height_m: f64,
        #[arg(long, default_value_t = 20)]
        samples_per_segment: usize,
        #[arg(long, default_value_t = 0.02)]
        dt: f64,
        /// Constant tool-tip orientation: w,x,y,z
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true,
              default_values_t = [1.0, 0.0, 0.0, 0.0])]
        tip_quat: Vec<f64>,
        /// Clutch during the stationary exchange dwell.
        #[arg(long, default_value_t = false)]
        clutch_exchange: bool,
    },
    /// Sum the weighted error score of an event log.
    Score {
        #[arg(long)]
        input: PathBuf,
    },
    /// Compare the solver against the brute-force grid inverse.
    OracleCompare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 15)]
        grid_steps: usize,
        #[arg(long, default_value_t = 2)]
        refinements: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Fk { config, pose } => cmd_fk(&config, &pose),
        Command::Ik { config, pose } => cmd_ik(&config, &pose),
        Command::Replay {
            config,
            input,
            output,
            metrics,
        } => cmd_replay(&config, &input, &output, metrics.as_deref()),
        Command::Roundtrip {
            config,
            n,
            seed,
            max_bend_deg,
        } => cmd_roundtrip(&config, n, seed, max_bend_deg),
        Command::GenPeg {
            output,
            spacing_m,
            center,
            lift_height_m,
            samples_per_segment,
            dt,
            tip_quat,
            clutch_exchange,
        } => cmd_gen_peg(
            &output,
            spacing_m,
            &center,
            lift_height_m,
            samples_per_segment,
            dt,
            &tip_quat,
            clutch_exchange,
        ),
        Command::Score { input } => cmd_score(&input),
        Command::OracleCompare {
            config,
            n,
            seed,
            grid_steps,
            refinements,
        } => cmd_oracle_compare(&config, n, seed, grid_steps, refinements),
    }
}

fn cmd_fk(config_path: &std::path::Path, pose_args: &PoseArgs) -> Result<(), HarnessError> {
    let config = HarnessConfig::from_path(config_path)?;
    let geom = config.geometry()?;
    let rcm = config.rcm_config();
    let handle = pose_args.pose()?;
    let (tip, state) = tool_tip_pose(&handle, &rcm.position, &geom)
        .map_err(|e| HarnessError::validation(e.to_string()))?;
    let (tip_pos, tip_quat) = pose_to_parts(&tip);
    let output = json!({
        "tip_pos_m": tip_pos,
        "tip_quat_wxyz": tip_quat,
        "handle2_pos_m": [state.handle2.x, state.handle2.y, state.handle2.z],
        "theta1_raw_deg": state.theta1_raw.to_degrees(),
        "theta1_deg": state.theta1.to_degrees(),
        "theta2_deg": state.theta2.to_degrees(),
        "theta1_signed_deg": state.theta1_signed.to_degrees(),
        "theta2_signed_deg": state.theta2_signed.to_degrees(),
        "theta3_deg": state.theta3.to_degrees(),
        "theta4_deg": state.theta4.to_degrees(),
        "rcm_dist_m": wristkin::tool::shaft_rcm_distance(&state, &rcm.position),
    });
    println!("{}", serde_json::to_string_pretty(&output).unwrap());
    Ok(())
}

fn cmd_ik(config_path: &std::path::Path, pose_args: &PoseArgs) -> Result<(), HarnessError> {
    let config = HarnessConfig::from_path(config_path)?;
    let geom = config.geometry()?;
    let rcm = config.rcm_config();
    let weights = config.ik_weights()?;
    let options = config.ik_options()?;
    let target = pose_args.pose()?;
    let result = solve_ik(&target, &rcm.position, &geom, &weights, &options);
    let (handle_pos, handle_quat) = pose_to_parts(&result.handle1_pose);
    let (ee_pos, ee_quat) = pose_to_parts(&result.ee_pose);
    let output = json!({
        "handle_pos_m": handle_pos,
        "handle_quat_wxyz": handle_quat,
        "ee_pos_m": ee_pos,
        "ee_quat_wxyz": ee_quat,
        "status": result.status.as_str(),
        "final_residual_norm": result.final_residual_norm,
        "position_error_m": result.position_error,
        "orientation_error_deg": result.orientation_error.to_degrees(),
        "limit_violation_deg": result.limit_violation.to_degrees(),
        "iterations": result.iterations,
    });
    println!("{}", serde_json::to_string_pretty(&output).unwrap());
    if result.status == IkStatus::Degenerate {
        return Err(HarnessError::validation(
            "inverse mapping degenerated for this target",
        ));
    }
    Ok(())
}

fn cmd_replay(
    config_path: &std::path::Path,
    input: &std::path::Path,
    output: &std::path::Path,
    metrics_path: Option<&std::path::Path>,
) -> Result<(), HarnessError> {
    let config = HarnessConfig::from_path(config_path)?;
    let teleop = config.teleop_config()?;
    let file = File::open(input).map_err(|e| HarnessError::io(format!("{}: {e}", input.display())))?;
    let records: Vec<TrajectoryRecord> =
        read_jsonl(BufReader::new(file), &input.display().to_string())?;
    let (commands, metrics) = replay(&records, &teleop)?;

    let out = File::create(output)
        .map_err(|e| HarnessError::io(format!("{}: {e}", output.display())))?;
    write_jsonl(BufWriter::new(out), &commands)?;

    let metrics_json = serde_json::to_string_pretty(&metrics).unwrap();
    if let Some(path) = metrics_path {
        let mut f = File::create(path)
            .map_err(|e| HarnessError::io(format!("{}: {e}", path.display())))?;
        writeln!(f, "{metrics_json}")?;
    }
    println!("{metrics_json}");
    Ok(())
}

fn cmd_roundtrip(
    config_path: &std::path::Path,
    n: usize,
    seed: u64,
    max_bend_deg: f64,
) -> Result<(), HarnessError> {
    let config = HarnessConfig::from_path(config_path)?;
    let geom = config.geometry()?;
    let rcm = config.rcm_config();
    let weights = config.ik_weights()?;
    let options = config.ik_options()?;
    if n == 0 {
        return Err(HarnessError::validation("--n must be at least 1"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_bend = max_bend_deg.to_radians();
    let mut recovered = 0usize;
    let mut converged = 0usize;
    let mut max_pos = 0.0f64;
    let mut max_orient = 0.0f64;
    let mut total_iterations = 0usize;

    for _ in 0..n {
        let truth = gen_consistent_state(&mut rng, &rcm.position, &geom, max_bend);
        let target = truth.tip_pose();
        let result = solve_ik(&target, &rcm.position, &geom, &weights, &options);
        total_iterations += result.iterations;
        if result.status == IkStatus::Converged {
            converged += 1;
        }
        if result.position_error < 1e-5 && result.orientation_error < 1e-4 {
            recovered += 1;
        }
        max_pos = max_pos.max(result.position_error);
        max_orient = max_orient.max(result.orientation_error);
    }

    let pass = recovered as f64 >= 0.99 * n as f64;
    println!("roundtrip report");
    println!("seed: {seed}");
    println!("trials: {n}");
    println!("max_bend_deg: {max_bend_deg:.3}");
    println!("converged: {converged}");
    println!("recovered_within_tolerance: {recovered}");
    println!("max_position_error_m: {max_pos:.6e}");
    println!("max_orientation_error_rad: {max_orient:.6e}");
    println!("mean_iterations: {:.3}", total_iterations as f64 / n as f64);
    println!("result: {}", if pass { "PASS" } else { "FAIL" });
    if pass {
        Ok(())
    } else {
        Err(HarnessError::validation(format!(
            "only {recovered}/{n} round trips recovered the tip pose"
        )))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen_peg(
    output: &std::path::Path,
    spacing_m: f64,
    center: &[f64],
    lift_height_m: f64,
    samples_per_segment: usize,
    dt: f64,
    tip_quat: &[f64],
    clutch_exchange: bool,
) -> Result<(), HarnessError> {
    if spacing_m <= 0.0 || lift_height_m <= 0.0 || dt <= 0.0 {
        return Err(HarnessError::validation(
            "spacing, lift height, and dt must be positive",
        ));
    }
    if samples_per_segment < 2 {
        return Err(HarnessError::validation(
            "--samples-per-segment must be at least 2",
        ));
    }
    if center.len() != 3 {
        return Err(HarnessError::validation("--center expects x,y,z"));
    }
    if tip_quat.len() != 4 {
        return Err(HarnessError::validation("--tip-quat expects w,x,y,z"));
    }
    let board = PegBoard {
        center: Vector3::new(center[0], center[1], center[2]),
        spacing: spacing_m,
    };
    let options = PegTransferOptions {
        lift_height: lift_height_m,
        samples_per_segment,
        dt,
        tip_quat: [tip_quat[0], tip_quat[1], tip_quat[2], tip_quat[3]],
        clutch_exchange,
    };
    let (left, right) = gen_peg_transfer(&board, &options);
    let merged = interleave(left, right);
    let out = File::create(output)
        .map_err(|e| HarnessError::io(format!("{}: {e}", output.display())))?;
    write_jsonl(BufWriter::new(out), &merged)?;
    eprintln!("wrote {} samples to {}", merged.len(), output.display());
    Ok(())
}

fn cmd_score(input: &std::path::Path) -> Result<(), HarnessError> {
    let file = File::open(input).map_err(|e| HarnessError::io(format!("{}: {e}", input.display())))?;
    let records: Vec<EventRecord> =
        read_jsonl(BufReader::new(file), &input.display().to_string())?;
    let events = records
        .iter()
        .map(TrialEvent::from_record)
        .collect::<Result<Vec<_>, _>>()?;
    println!("{}", score_trial(&events));
    Ok(())
}

fn cmd_oracle_compare(
    config_path: &std::path::Path,
    n: usize,
    seed: u64,
    grid_steps: usize,
    refinements: usize,
) -> Result<(), HarnessError> {
    let config = HarnessConfig::from_path(config_path)?;
    let geom = config.geometry()?;
    let rcm = config.rcm_config();
    let weights = config.ik_weights()?;
    let options = config.ik_options()?;
    if n == 0 {
        return Err(HarnessError::validation("--n must be at least 1"));
    }

    let oracle_options = OracleOptions {
        grid_steps,
        refinements,
        ..OracleOptions::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wins = 0usize;
    let mut details = Vec::with_capacity(n);
    for trial in 0..n {
        let truth = gen_consistent_state(&mut rng, &rcm.position, &geom, 0.6);
        let target = truth.tip_pose();
        let solved = solve_ik(&target, &rcm.position, &geom, &weights, &options);
        let oracle = oracle_ik(&target, &rcm.position, &geom, &weights, &oracle_options);
        let solver_wins = solved.position_error <= oracle.tip_error;
        if solver_wins {
            wins += 1;
        }
        details.push(json!({
            "trial": trial,
            "solver_tip_err_m": solved.position_error,
            "oracle_tip_err_m": oracle.tip_error,
            "oracle_evaluations": oracle.evaluations,
            "solver_wins": solver_wins,
        }));
    }
    let required = (0.95 * n as f64).ceil() as usize;
    let pass = wins >= required;
    let report = json!({
        "trials": n,
        "seed": seed,
        "grid_steps": grid_steps,
        "refinements": refinements,
        "solver_wins": wins,
        "required_wins": required,
        "result": if pass { "PASS" } else { "FAIL" },
        "details": details,
    });
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    if pass {
        Ok(())
    } else {
        Err(HarnessError::validation(format!(
            "solver won only {wins}/{n} trials against the grid oracle"
        )))
    }
}
