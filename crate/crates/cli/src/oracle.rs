//! Brute-force grid inverse, used to bound the solver's optimality gap.
//!
//! Exhaustively evaluates the residual over a 6-D box in the pose chart
//! around the analytic cold start, then re-grids around the best cell for a
//! fixed number of refinement passes. Deliberately coarse: its only job is
//! to certify that the trust-region solver is at least as good as an
//! exhaustive search at this resolution.

use nalgebra::Vector3;
use wristkin::ik::{ik_residual, seed_handle_pose, IkWeights};
use wristkin::se3::{retract, Pose, Twist6};
use wristkin::tool::{tool_tip_pose, ToolGeometry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Grid steps per dimension.
    pub grid_steps: usize,
    /// Re-grid passes around the best cell.
    pub refinements: usize,
    /// Initial half-width of the translational box, meters.
    pub trans_half_width: f64,
    /// Initial half-width of the rotational box, radians.
    pub rot_half_width: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            grid_steps: 15,
            refinements: 2,
            trans_half_width: 0.06,
            rot_half_width: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Best grid cell found, if any cell had a valid forward pass.
    pub handle_pose: Option<Pose>,
    pub residual_norm: f64,
    /// Tip-position error at the best cell, meters.
    pub tip_error: f64,
    /// Residual evaluations performed.
    pub evaluations: u64,
}

/// Exhaustive minimizer of the residual norm over the grid.
pub fn oracle_ik(
    target: &Pose,
    x_rcm: &Vector3<f64>,
    geom: &ToolGeometry,
    weights: &IkWeights,
    options: &OracleOptions,
) -> OracleResult {
    let mut infeasible = OracleResult {
        handle_pose: None,
        residual_norm: f64::INFINITY,
        tip_error: f64::INFINITY,
        evaluations: 0,
    };
    let Ok(mut center) = seed_handle_pose(target, x_rcm, geom) else {
        // Target at the RCM: no feasible cell exists.
        return infeasible;
    };

    let steps = options.grid_steps.max(2);
    let mut half_trans = options.trans_half_width;
    let mut half_rot = options.rot_half_width;
    let mut best: Option<(f64, Pose)> = None;
    let mut evaluations = 0u64;

    for _pass in 0..=options.refinements {
        let mut pass_best: Option<(f64, Pose)> = None;
        let mut offsets = [0.0; 6];
        let axis_values = |half: f64| -> Vec<f64> {
            (0..steps)
                .map(|i| -half + 2.0 * half * i as f64 / (steps - 1) as f64)
                .collect()
        };
        let trans_axis = axis_values(half_trans);
        let rot_axis = axis_values(half_rot);

        // Plain nested scan; the innermost residual call dominates the cost.
        for &dx in &trans_axis {
            offsets[0] = dx;
            for &dy in &trans_axis {
                offsets[1] = dy;
                for &dz in &trans_axis {
                    offsets[2] = dz;
                    for &rx in &rot_axis {
                        offsets[3] = rx;
                        for &ry in &rot_axis {
                            offsets[4] = ry;
                            for &rz in &rot_axis {
                                offsets[5] = rz;
                                let Ok(pose) =
                                    retract(&center, &Twist6::from_slice(&offsets))
                                else {
                                    continue;
                                };
                                evaluations += 1;
                                let Ok(residual) =
                                    ik_residual(&pose, target, x_rcm, geom, weights)
                                else {
                                    continue;
                                };
                                let norm_sq: f64 = residual.iter().map(|c| c * c).sum();
                                if pass_best
                                    .as_ref()
                                    .map(|(b, _)| norm_sq < *b)
                                    .unwrap_or(true)
                                {
                                    pass_best = Some((norm_sq, pose));
                                }
                            }
                        }
                    }
                }
            }
        }

        let Some((norm_sq, pose)) = pass_best else {
            infeasible.evaluations = evaluations;
            return infeasible;
        };
        if best.as_ref().map(|(b, _)| norm_sq < *b).unwrap_or(true) {
            best = Some((norm_sq, pose));
        }
        center = pose;
        // Shrink to +/- 1.5 cells around the best cell.
        let cell = 2.0 / (steps - 1) as f64;
        half_trans *= 1.5 * cell;
        half_rot *= 1.5 * cell;
    }

    let (norm_sq, pose) = best.expect("at least one pass produced a cell");
    let tip_error = match tool_tip_pose(&pose, x_rcm, geom) {
        Ok((_, state)) => (state.tip - target.translation).norm(),
        Err(_) => f64::INFINITY,
    };
    OracleResult {
        handle_pose: Some(pose),
        residual_norm: norm_sq.sqrt(),
        tip_error,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;
    use wristkin::ik::{solve_ik, IkOptions};
    use wristkin::se3::Rotation;

    use crate::synth::gen_consistent_state;

    fn small_options() -> OracleOptions {
        OracleOptions {
            grid_steps: 5,
            refinements: 1,
            ..OracleOptions::default()
        }
    }

    #[test]
    fn degenerate_target_reports_no_feasible_cell() {
        let geom = ToolGeometry::default();
        let x_rcm = Vector3::new(0.0, 0.0, 0.3);
        let target = Pose::new(Rotation::identity(), x_rcm);
        let result = oracle_ik(
            &target,
            &x_rcm,
            &geom,
            &IkWeights::default(),
            &small_options(),
        );
        assert!(result.handle_pose.is_none());
        assert!(result.residual_norm.is_infinite());
    }

    /// Definitional bound: the trust-region solver must do at least as well
    /// as a coarse exhaustive search.
    #[test]
    fn solver_beats_coarse_grid_on_reachable_targets() {
        let mut rng = StdRng::seed_from_u64(30_001);
        let geom = ToolGeometry::default();
        let weights = IkWeights::default();
        let x_rcm = Vector3::new(0.0, 0.0, 0.35);
        for _ in 0..3 {
            let truth = gen_consistent_state(&mut rng, &x_rcm, &geom, 0.6);
            let target = truth.tip_pose();
            let solved = solve_ik(&target, &x_rcm, &geom, &weights, &IkOptions::default());
            let oracle = oracle_ik(&target, &x_rcm, &geom, &weights, &small_options());
            assert!(oracle.handle_pose.is_some());
            assert!(
                solved.position_error <= oracle.tip_error + 1e-9,
                "solver {} vs oracle {}",
                solved.position_error,
                oracle.tip_error
            );
        }
    }
}
