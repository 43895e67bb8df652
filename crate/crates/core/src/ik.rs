//! Inverse mapping: find the handle-1 pose whose forward pass reaches a
//! desired tool-tip pose through the RCM.
//!
//! The residual stacks a weighted tip-position error, the rotation log of
//! the tip-orientation mismatch, and hinge penalties on the two passive bend
//! angles. Limits enter only as soft penalties, so the search over the
//! 6-parameter pose chart is unconstrained; it is minimized by dogleg
//! trust-region Gauss-Newton with a numerically differentiated Jacobian
//! (central differences, 1e-7 m translational / 1e-6 rad rotational steps).
//!
//! A failed warm start falls back to an analytic cold start, four azimuthal
//! perturbations of it, and then the remaining cold-start branch candidates;
//! among attempts with tied residuals, the one rotationally closest to the
//! warm start wins so that streamed solves stay continuous.

use nalgebra::{SMatrix, SVector, Vector3};

use crate::error::KinError;
use crate::se3::{retract, rot_log, Pose, Rotation, Twist6};
use crate::tool::{tool_tip_pose, ToolGeometry};

/// Translational finite-difference step, meters.
pub const FD_TRANS_STEP: f64 = 1e-7;
/// Rotational finite-difference step, radians.
pub const FD_ROT_STEP: f64 = 1e-6;

const RESIDUAL_DIM: usize = 8;
const PARAM_DIM: usize = 6;

type Residual = SVector<f64, RESIDUAL_DIM>;
type Params = SVector<f64, PARAM_DIM>;
type Jacobian = SMatrix<f64, RESIDUAL_DIM, PARAM_DIM>;

/// Scale factors of the residual terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkWeights {
    /// Position-error scale (1 mm of error contributes `w_t * 1e-3`).
    pub w_t: f64,
    /// Angle-limit penalty scale.
    pub w_a: f64,
    /// Soft deflection limit, radians.
    pub theta_max: f64,
}

impl Default for IkWeights {
    fn default() -> Self {
        IkWeights {
            w_t: 100.0,
            w_a: 10.0,
            theta_max: 45.0_f64.to_radians(),
        }
    }
}

impl IkWeights {
    pub fn validate(&self) -> Result<(), KinError> {
        if !(self.w_t > 0.0) {
            return Err(KinError::InvalidInput("w_t must be positive"));
        }
        if !(self.w_a >= 0.0) {
            return Err(KinError::InvalidInput("w_a must be non-negative"));
        }
        if !(self.theta_max > 0.0 && self.theta_max <= std::f64::consts::FRAC_PI_2) {
            return Err(KinError::InvalidInput(
                "theta_max must lie in (0, pi/2] radians",
            ));
        }
        Ok(())
    }
}

/// Solver controls.
#[derive(Debug, Clone, PartialEq)]
pub struct IkOptions {
    pub max_iterations: usize,
    /// Converged when the residual norm drops below this.
    pub residual_tolerance: f64,
    /// Converged when an accepted step is shorter than this.
    pub step_tolerance: f64,
    pub initial_trust_radius: f64,
    /// Previous solution to continue from (teleoperation streaming).
    pub warm_start: Option<Pose>,
    /// Fixed handle-1 to robot-wrist offset, applied to the solution.
    pub t_offset: Vector3<f64>,
}

impl Default for IkOptions {
    fn default() -> Self {
        IkOptions {
            max_iterations: 100,
            residual_tolerance: 1e-8,
            step_tolerance: 1e-10,
            initial_trust_radius: 0.1,
            warm_start: None,
            t_offset: Vector3::zeros(),
        }
    }
}

impl IkOptions {
    pub fn validate(&self) -> Result<(), KinError> {
        if self.max_iterations == 0 {
            return Err(KinError::InvalidInput("max_iterations must be at least 1"));
        }
        if !(self.residual_tolerance > 0.0
            && self.step_tolerance > 0.0
            && self.initial_trust_radius > 0.0)
        {
            return Err(KinError::InvalidInput("solver tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IkStatus {
    Converged,
    MaxIterations,
    Degenerate,
}

impl IkStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            IkStatus::Converged => "converged",
            IkStatus::MaxIterations => "max_iterations",
            IkStatus::Degenerate => "degenerate",
        }
    }
}

/// Solution and diagnostics of one inverse solve.
#[derive(Debug, Clone, PartialEq)]
pub struct IkResult {
    /// Best-found handle-1 pose.
    pub handle1_pose: Pose,
    /// Handle pose composed with the translation-only wrist offset.
    pub ee_pose: Pose,
    pub status: IkStatus,
    pub final_residual_norm: f64,
    /// Unweighted tip-position error at the solution, meters.
    pub position_error: f64,
    /// Tip-orientation error at the solution, radians.
    pub orientation_error: f64,
    /// Largest deflection-limit excess before weighting, radians.
    pub limit_violation: f64,
    /// Accepted iterations of the returned attempt.
    pub iterations: usize,
    /// Residual norm after the seed evaluation and each accepted step;
    /// non-increasing by construction.
    pub accepted_residual_norms: Vec<f64>,
}

/// Finite-difference scheme for [`numerical_jacobian`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdScheme {
    Central,
    Forward,
}

/// Residual of the inverse problem at a candidate handle pose.
///
/// Components: weighted tip-position error (3), rotation log of
/// `R_tip^T * R_target` (3), and hinge penalties `w_a * max(0, |theta| -
/// theta_max)` for the two working deflections (2). Zero exactly when the
/// forward tip pose equals the target and both deflections are within the
/// (inclusive) limit.
pub fn ik_residual(
    p_h1: &Pose,
    target: &Pose,
    x_rcm: &Vector3<f64>,
    geom: &ToolGeometry,
    weights: &IkWeights,
) -> Result<[f64; 8], KinError> {
    let (tip_pose, state) = tool_tip_pose(p_h1, x_rcm, geom)?;
    let dp = state.tip - target.translation;
    let rel = tip_pose.rotation.inverse().compose(&target.rotation);
    let dr = rot_log(&rel)?;
    Ok([
        weights.w_t * dp.x,
        weights.w_t * dp.y,
        weights.w_t * dp.z,
        dr.x,
        dr.y,
        dr.z,
        weights.w_a * (state.theta1.abs() - weights.theta_max).max(0.0),
        weights.w_a * (state.theta2.abs() - weights.theta_max).max(0.0),
    ])
}

fn residual_vec(
    p_h1: &Pose,
    target: &Pose,
    x_rcm: &Vector3<f64>,
    geom: &ToolGeometry,
    weights: &IkWeights,
) -> Result<Residual, KinError> {
    Ok(Residual::from(ik_residual(p_h1, target, x_rcm, geom, weights)?))
}

/// Finite-difference Jacobian of [`ik_residual`] over the retract chart at
/// `p_h1`. Column `j` differentiates along the j-th chart direction
/// (translations first, then rotations).
pub fn numerical_jacobian(
    p_h1: &Pose,
    target: &Pose,
    x_rcm: &Vector3<f64>,
    geom: &ToolGeometry,
    weights: &IkWeights,
    scheme: FdScheme,
) -> Result<[[f64; 6]; 8], KinError> {
    let base = match scheme {
        FdScheme::Forward => Some(residual_vec(p_h1, target, x_rcm, geom, weights)?),
        FdScheme::Central => None,
    };
    let mut jac = [[0.0; 6]; 8];
    for j in 0..PARAM_DIM {
        let h = if j < 3 { FD_TRANS_STEP } else { FD_ROT_STEP };
        let mut delta = [0.0; 6];
        delta[j] = h;
        let plus = residual_vec(
            &retract(p_h1, &Twist6::from_slice(&delta))?,
            target,
            x_rcm,
            geom,
            weights,
        )?;
        let column = match (&base, scheme) {
            (None, _) => {
                delta[j] = -h;
                let minus = residual_vec(
                    &retract(p_h1, &Twist6::from_slice(&delta))?,
                    target,
                    x_rcm,
                    geom,
                    weights,
                )?;
                (plus - minus) / (2.0 * h)
            }
            (Some(r0), _) => (plus - r0) / h,
        };
        for i in 0..RESIDUAL_DIM {
            jac[i][j] = column[i];
        }
    }
    Ok(jac)
}

fn jacobian_matrix(
    p_h1: &Pose,
    target: &Pose,
    x_rcm: &Vector3<f64>,
    geom: &ToolGeometry,
    weights: &IkWeights,
) -> Result<Jacobian, KinError> {
    let raw = numerical_jacobian(p_h1, target, x_rcm, geom, weights, FdScheme::Central)?;
    Ok(Jacobian::from_fn(|i, j| raw[i][j]))
}

/// Analytic cold start: a handle pose whose forward pass is non-degenerate
/// and whose tip lands on (or as close as the feasible band allows to) the
/// target tip, oriented toward the target's sign/branch combination.
///
/// Construction: the shaft direction is fixed by the target tip and the RCM;
/// handle 2 goes on the shaft at the depth that reproduces the target tip
/// distance (clamped into the reachable band); the handle frame and offset
/// come from transporting the target orientation back through the wrist
/// rotation product over a grid of signed bend angles.
pub fn seed_handle_pose(
    target: &Pose,
    x_rcm: &Vector3<f64>,
    geom: &ToolGeometry,
) -> Result<Pose, KinError> {
    seed_candidates(target, x_rcm, geom)
        .into_iter()
        .next()
        .ok_or(KinError::DegenerateGeometry(
            "seed handle axis construction collapsed",
        ))
}

/// All analytic cold-start candidates, best first. The first entry is the
/// [`seed_handle_pose`] result; the rest cover the other sign/branch
/// combinations and serve as solver fallbacks.
fn seed_candidates(target: &Pose, x_rcm: &Vector3<f64>, geom: &ToolGeometry) -> Vec<Pose> {
    let to_tip = target.translation - x_rcm;
    let dist = to_tip.norm();
    if dist < 1e-10 {
        // Target tip on the RCM: the shaft direction is undefined.
        return Vec::new();
    }
    // Shaft direction from handle 2 through the RCM. For l1 > l0 the tip is
    // beyond the RCM and the handle sits on the far side; for l1 < l0 the
    // tip lies between handle 2 and the RCM, which flips the side.
    let stretch = geom.l1 - geom.l0;
    let s = if stretch < 0.0 { -to_tip / dist } else { to_tip / dist };
    let rho_exact = if stretch.abs() < 1e-9 {
        geom.l0
    } else {
        dist * geom.l0 / stretch.abs()
    };
    // Handle-2 depths for which some offset tilt |gamma| <= GAMMA_CAP keeps
    // the law-of-cosines distance inside the reachable band with margin.
    const GAMMA_CAP: f64 = 0.98;
    const D_MARGIN: f64 = 1e-3;
    let d_hi = geom.l0 + geom.l12 - D_MARGIN;
    let d_lo = (geom.l0 - geom.l12 + D_MARGIN).max(D_MARGIN);
    let cap12 = GAMMA_CAP * geom.l12;
    let rho_max = cap12 + (cap12 * cap12 + d_hi * d_hi - geom.l12 * geom.l12).sqrt();
    let rho_min = {
        let arg = cap12 * cap12 + d_lo * d_lo - geom.l12 * geom.l12;
        if arg > 0.0 {
            (-cap12 + arg.sqrt()).max(1e-6)
        } else {
            1e-6
        }
    };
    let rho = rho_exact.clamp(rho_min, rho_max);

    let x_h2 = x_rcm - rho * s;

    // The tip orientation factors as R_tip = R_handle * W(t1', t2') with
    // W = B(-t2') A((k-1) t1') B(k t2'), so transporting the target
    // orientation back through W over a coarse grid of signed bend angles
    // yields handle-frame candidates in every sign/branch combination. The
    // offset direction then follows from the frame: in handle coordinates it
    // is (-cos t2', +/- sin t2', 0). Candidates are scored by forward-pass
    // tip-orientation distance with a soft preference for staying inside the
    // deflection limit (tip positions agree by construction).
    type ElementaryRotation = fn(f64) -> Rotation;
    let (rot_a, rot_b): (ElementaryRotation, ElementaryRotation) = match geom.axis_convention {
        crate::tool::AxisConvention::Yz => (Rotation::rot_y, Rotation::rot_z),
        crate::tool::AxisConvention::Zy => (Rotation::rot_z, Rotation::rot_y),
    };
    let angle_grid = [0.0, 0.35, -0.35, 0.7, -0.7];

    let mut scored: Vec<(f64, Pose)> = Vec::with_capacity(48);
    // Score mirrors the residual weighting: position dominates, then
    // orientation, then limit penalties.
    let consider = |pose: Pose, scored: &mut Vec<(f64, Pose)>| {
        let Ok((tip, state)) = crate::tool::tool_tip_pose(&pose, x_rcm, geom) else {
            return;
        };
        let orient = rot_log(&tip.rotation.inverse().compose(&target.rotation))
            .map(|v| v.norm())
            .unwrap_or(f64::INFINITY);
        let score = 100.0 * (state.tip - target.translation).norm()
            + orient
            + 10.0 * (state.theta1.abs() - geom.theta_max).max(0.0)
            + 10.0 * (state.theta2.abs() - geom.theta_max).max(0.0);
        if score.is_finite() {
            scored.push((score, pose));
        }
    };

    for theta1_signed in angle_grid {
        for theta2_signed in angle_grid {
            let wrist = rot_b(-theta2_signed)
                .compose(&rot_a((geom.k - 1.0) * theta1_signed))
                .compose(&rot_b(geom.k * theta2_signed));
            let frame = target.rotation.compose(&wrist.inverse());
            for y_sign in [1.0, -1.0] {
                let u_local = Vector3::new(
                    -theta2_signed.cos(),
                    y_sign * theta2_signed.sin(),
                    0.0,
                );
                let u = frame.rotate(&u_local);
                let pose = Pose::new(frame, x_h2 - geom.l12 * u);
                consider(pose, &mut scored);
                if theta2_signed == 0.0 {
                    break;
                }
            }
        }
    }

    // Guaranteed-feasible fallback: a neutral-tilt offset with the handle
    // axis built from the perpendicular of n2, which always yields a valid
    // forward pass. Keeps the cold start total even for unreachable targets.
    {
        let lateral = {
            let x_t = target.rotation.x_axis();
            let perp = -(x_t - s * s.dot(&x_t));
            if perp.norm() > 1e-6 {
                perp / perp.norm()
            } else {
                any_perpendicular(&s)
            }
        };
        let gamma = {
            let gamma_of =
                |d_sq: f64| (rho * rho + geom.l12 * geom.l12 - d_sq) / (2.0 * rho * geom.l12);
            let neutral_d_sq = geom.l12 * geom.l12 + geom.l0 * geom.l0
                - 2.0 * geom.l12 * geom.l0 * geom.theta1_neutral.cos();
            // Valid tilts keep d inside the reachable band; rho was clamped
            // so this interval is nonempty within [-GAMMA_CAP, GAMMA_CAP].
            let valid_lo = gamma_of(d_hi * d_hi).max(-GAMMA_CAP);
            let valid_hi = gamma_of(d_lo * d_lo).min(GAMMA_CAP);
            // Prefer the consistent side (gamma above l12/rho) when possible.
            let consistent_lo = valid_lo.max((geom.l12 + 1e-3) / rho);
            let mut g = if consistent_lo <= valid_hi {
                gamma_of(neutral_d_sq).clamp(consistent_lo, valid_hi)
            } else {
                gamma_of(neutral_d_sq).clamp(valid_lo, valid_hi)
            };
            // Keep the double-cross construction away from its singularity.
            if (rho * g - geom.l12).abs() < 1e-4 {
                let nudge = 2e-4 / rho;
                g = if g + nudge <= valid_hi { g + nudge } else { g - nudge };
            }
            g
        };
        let u = -gamma * s + (1.0 - gamma * gamma).sqrt() * lateral;
        let x_h1 = x_h2 - geom.l12 * u;
        let n2 = rho * s + geom.l12 * u;
        let perp = n2 - u * n2.dot(&u);
        if perp.norm() >= 1e-9 {
            for axis_sign in [1.0, -1.0] {
                let n1 = axis_sign * perp / perp.norm();
                let x_hat = -u;
                let y_hat = n1.cross(&x_hat);
                let pose = Pose::new(
                    Rotation::from_matrix_unchecked(nalgebra::Matrix3::from_columns(&[
                        x_hat, y_hat, n1,
                    ])),
                    x_h1,
                );
                consider(pose, &mut scored);
            }
        }
    }

    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    scored.into_iter().map(|(_, pose)| pose).collect()
}

fn any_perpendicular(v: &Vector3<f64>) -> Vector3<f64> {
    let candidate = if v.x.abs() <= v.y.abs() && v.x.abs() <= v.z.abs() {
        Vector3::x()
    } else if v.y.abs() <= v.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let perp = candidate - v * v.dot(&candidate);
    perp / perp.norm()
}

/// Robot end-effector target from a handle-1 pose and the translation-only
/// mount offset.
pub fn ee_from_handle(p_h1: &Pose, t_offset: &Vector3<f64>) -> Pose {
    p_h1.compose(&Pose::from_translation(*t_offset))
}

struct Attempt {
    pose: Pose,
    residual_norm: f64,
    converged: bool,
    iterations: usize,
    accepted: Vec<f64>,
}

/// Minimizes the residual over handle poses and maps the solution to the
/// robot end-effector target.
///
/// Never fails: precondition violations and universally degenerate seeds are
/// reported through [`IkStatus::Degenerate`] with infinite residual
/// diagnostics.
pub fn solve_ik(
    target: &Pose,
    x_rcm: &Vector3<f64>,
    geom: &ToolGeometry,
    weights: &IkWeights,
    options: &IkOptions,
) -> IkResult {
    let fallback_pose = options.warm_start.unwrap_or_else(Pose::identity);
    let degenerate = |pose: Pose| IkResult {
        ee_pose: ee_from_handle(&pose, &options.t_offset),
        handle1_pose: pose,
        status: IkStatus::Degenerate,
        final_residual_norm: f64::INFINITY,
        position_error: f64::INFINITY,
        orientation_error: f64::INFINITY,
        limit_violation: f64::INFINITY,
        iterations: 0,
        accepted_residual_norms: Vec::new(),
    };

    let inputs_ok = target.translation.iter().all(|c| c.is_finite())
        && target
            .rotation
            .matrix()
            .iter()
            .all(|c| c.is_finite())
        && x_rcm.iter().all(|c| c.is_finite());
    if !inputs_ok
        || geom.validate().is_err()
        || weights.validate().is_err()
        || options.validate().is_err()
    {
        return degenerate(fallback_pose);
    }

    // Attempt order: warm start; if it did not fully converge, the analytic
    // cold start, then azimuthal perturbations of it about the shaft axis
    // through the RCM. Ties go to the candidate rotationally closest to the
    // warm start (streaming continuity).
    let reference = options
        .warm_start
        .or_else(|| seed_handle_pose(target, x_rcm, geom).ok());
    let Some(reference) = reference else {
        return degenerate(fallback_pose);
    };
    let rotation_distance = |pose: &Pose| {
        rot_log(&reference.rotation.inverse().compose(&pose.rotation))
            .map(|v| v.norm())
            .unwrap_or(f64::INFINITY)
    };
    fn consider(best: &mut Option<(Attempt, f64)>, attempt: Attempt, dist: f64) {
        let better = match best {
            None => true,
            Some((b, b_dist)) => {
                attempt.residual_norm < b.residual_norm - 1e-12
                    || ((attempt.residual_norm - b.residual_norm).abs() <= 1e-12 && dist < *b_dist)
            }
        };
        if better {
            *best = Some((attempt, dist));
        }
    }
    let fully_converged = |best: &Option<(Attempt, f64)>, tol: f64| {
        best.as_ref()
            .map(|(a, _)| a.converged && a.residual_norm <= tol)
            .unwrap_or(false)
    };

    let mut best: Option<(Attempt, f64)> = None;
    if let Some(ws) = options.warm_start {
        if let Some(attempt) = minimize_from(&ws, target, x_rcm, geom, weights, options) {
            let dist = rotation_distance(&attempt.pose);
            consider(&mut best, attempt, dist);
        }
    }
    if !fully_converged(&best, options.residual_tolerance) {
        let candidates = seed_candidates(target, x_rcm, geom);
        let mut fallback_seeds = Vec::with_capacity(12);
        if let Some(cold) = candidates.first() {
            fallback_seeds.push(*cold);
            let axis = (target.translation - x_rcm).normalize();
            for angle_deg in [30.0_f64, -30.0, 60.0, -60.0] {
                if let Ok(spin) = crate::se3::rot_exp(axis * angle_deg.to_radians()) {
                    let about_rcm = Pose::new(spin, x_rcm - spin.rotate(x_rcm));
                    fallback_seeds.push(about_rcm.compose(cold));
                }
            }
            // Remaining branch candidates, best-scored first. Only reached
            // when everything before them failed to converge, so walking the
            // whole set stays off the hot path.
            fallback_seeds.extend(candidates.into_iter().skip(1));
        }
        for seed in &fallback_seeds {
            let Some(attempt) = minimize_from(seed, target, x_rcm, geom, weights, options) else {
                continue;
            };
            let dist = rotation_distance(&attempt.pose);
            consider(&mut best, attempt, dist);
            if fully_converged(&best, options.residual_tolerance) {
                break;
            }
        }
    }

    // A stalled attempt may have converged-by-step only because its trust
    // region collapsed; one restart from the best pose with a fresh radius
    // clears such stalls and can only improve the result.
    if !fully_converged(&best, options.residual_tolerance) {
        if let Some(pose) = best.as_ref().map(|(a, _)| a.pose) {
            if let Some(polished) = minimize_from(&pose, target, x_rcm, geom, weights, options) {
                let dist = rotation_distance(&polished.pose);
                consider(&mut best, polished, dist);
            }
        }
    }

    let Some((attempt, _)) = best else {
        return degenerate(fallback_pose);
    };

    // Truthful diagnostics at the returned pose.
    let (position_error, orientation_error, limit_violation) =
        match tool_tip_pose(&attempt.pose, x_rcm, geom) {
            Ok((tip_pose, state)) => {
                let rel = tip_pose.rotation.inverse().compose(&target.rotation);
                let orient = rot_log(&rel).map(|v| v.norm()).unwrap_or(f64::INFINITY);
                let viol = (state.theta1.abs() - weights.theta_max)
                    .max(state.theta2.abs() - weights.theta_max)
                    .max(0.0);
                (
                    (state.tip - target.translation).norm(),
                    orient,
                    viol,
                )
            }
            Err(_) => (f64::INFINITY, f64::INFINITY, f64::INFINITY),
        };

    IkResult {
        ee_pose: ee_from_handle(&attempt.pose, &options.t_offset),
        handle1_pose: attempt.pose,
        status: if attempt.converged {
            IkStatus::Converged
        } else {
            IkStatus::MaxIterations
        },
        final_residual_norm: attempt.residual_norm,
        position_error,
        orientation_error,
        limit_violation,
        iterations: attempt.iterations,
        accepted_residual_norms: attempt.accepted,
    }
}

/// One dogleg trust-region run from a single seed. `None` when the seed's
/// forward pass is degenerate.
fn minimize_from(
    seed: &Pose,
    target: &Pose,
    x_rcm: &Vector3<f64>,
    geom: &ToolGeometry,
    weights: &IkWeights,
    options: &IkOptions,
) -> Option<Attempt> {
    let mut pose = *seed;
    let mut residual = residual_vec(&pose, target, x_rcm, geom, weights).ok()?;
    let mut norm = residual.norm();
    let mut radius = options.initial_trust_radius;
    let max_radius = 100.0 * options.initial_trust_radius;
    let mut accepted = vec![norm];
    let mut iterations = 0;
    let mut converged = norm <= options.residual_tolerance;

    while !converged && iterations < options.max_iterations {
        let Ok(jac) = jacobian_matrix(&pose, target, x_rcm, geom, weights) else {
            break;
        };
        let gradient: Params = jac.transpose() * residual;
        if gradient.norm() < 1e-15 {
            // Stationary to machine precision; cannot improve further.
            converged = true;
            break;
        }

        let step = dogleg_step(&jac, &gradient, &residual, radius);
        let step_norm = step.norm();
        let delta = Twist6::from_slice(&[step[0], step[1], step[2], step[3], step[4], step[5]]);
        let candidate = match retract(&pose, &delta) {
            Ok(p) => p,
            Err(_) => break,
        };

        let predicted = {
            let linear = residual + jac * step;
            0.5 * (norm * norm - linear.norm_squared())
        };
        let outcome = residual_vec(&candidate, target, x_rcm, geom, weights);
        iterations += 1;

        let mut accepted_step = false;
        if let Ok(new_residual) = outcome {
            let new_norm = new_residual.norm();
            let actual = 0.5 * (norm * norm - new_norm * new_norm);
            if actual > 0.0 && new_norm < norm {
                let ratio = if predicted > 0.0 { actual / predicted } else { 0.0 };
                pose = candidate;
                residual = new_residual;
                norm = new_norm;
                accepted.push(norm);
                accepted_step = true;
                if ratio > 0.75 && step_norm > 0.8 * radius {
                    radius = (2.0 * radius).min(max_radius);
                }
                if norm <= options.residual_tolerance || step_norm <= options.step_tolerance {
                    converged = true;
                }
            }
        }
        if !accepted_step {
            radius *= 0.25;
            if radius < options.step_tolerance {
                // Trust region collapsed below the step tolerance: the
                // iteration cannot move; report convergence-by-step.
                converged = true;
            }
        }
    }

    Some(Attempt {
        pose,
        residual_norm: norm,
        converged,
        iterations,
        accepted,
    })
}

/// Classic dogleg: Gauss-Newton step when it fits the radius, otherwise a
/// blend of the Cauchy point and the Gauss-Newton direction on the region
/// boundary.
fn dogleg_step(jac: &Jacobian, gradient: &Params, residual: &Residual, radius: f64) -> Params {
    let jtj = jac.transpose() * jac;
    let gn: Option<Params> = jtj.cholesky().map(|ch| ch.solve(&(-gradient)));

    if let Some(gn) = gn {
        if gn.norm() <= radius {
            return gn;
        }
        let jg = jac * gradient;
        let alpha = gradient.norm_squared() / jg.norm_squared().max(f64::MIN_POSITIVE);
        let cauchy: Params = -alpha * gradient;
        let cauchy_norm = cauchy.norm();
        if cauchy_norm >= radius {
            return -(radius / gradient.norm()) * gradient;
        }
        // ||cauchy + tau * (gn - cauchy)|| = radius for tau in [0, 1].
        let d = gn - cauchy;
        let a = d.norm_squared();
        let b = 2.0 * cauchy.dot(&d);
        let c = cauchy_norm * cauchy_norm - radius * radius;
        let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
        let tau = ((-b + disc) / (2.0 * a)).clamp(0.0, 1.0);
        cauchy + tau * d
    } else {
        // Singular normal equations: fall back to scaled steepest descent.
        let _ = residual;
        -(radius / gradient.norm()) * gradient
    }
}
