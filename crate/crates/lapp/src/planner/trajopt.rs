//! Sequential convex trajectory optimization with an L1 penalty on
//! linearized collision constraints and a box trust region.
//!
//! Cost is the smoothness term `sum_t ||q_{t+1} - q_t||^2` subject to hard
//! per-step velocity bounds, joint limits, fixed endpoints, and `d(q_t) >=
//! d_safe` at every free waypoint. Collision constraints enter the convex
//! subproblem linearized at the current iterate with a slack variable per
//! waypoint; the penalty weight escalates until the violation drops below
//! tolerance.

use serde::{Deserialize, Serialize};

use crate::qp::{self, QpProblem, QpSettings};

use super::{CollisionQuery, Path, PlanError};

/// Hyperparameters of the optimizer. Defaults: 10 steps, velocity bounds
/// [-0.4, 0.4] rad/step, mu0 = 2, s0 = 0.01, c = 0.75, tau+ = 1.1,
/// tau- = 0.5, k = 10, f_tol = x_tol = 1e-4, c_tol = 0.01, 5 penalty and 5
/// convexify iterations with 2 trust attempts each, minimum trust box 1e-4,
/// safety margin 0.02 m.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajOptParams {
    pub steps: usize,
    pub velocity_bound: f64,
    pub mu0: f64,
    pub s0: f64,
    /// Trust shrink applied when a convexify round accepts no step.
    pub c: f64,
    /// Trust expansion on accepted steps.
    pub tau_plus: f64,
    /// Trust shrink on rejected steps.
    pub tau_minus: f64,
    /// Penalty escalation factor.
    pub k: f64,
    pub f_tol: f64,
    pub x_tol: f64,
    pub c_tol: f64,
    pub penalty_iters: usize,
    pub convexify_iters: usize,
    pub trust_iters: usize,
    pub min_trust: f64,
    pub d_safe: f64,
    /// Minimum true-vs-model improvement ratio for accepting a step.
    pub accept_ratio: f64,
}

impl Default for TrajOptParams {
    fn default() -> Self {
        TrajOptParams {
            steps: 10,
            velocity_bound: 0.4,
            mu0: 2.0,
            s0: 0.01,
            c: 0.75,
            tau_plus: 1.1,
            tau_minus: 0.5,
            k: 10.0,
            f_tol: 1e-4,
            x_tol: 1e-4,
            c_tol: 0.01,
            penalty_iters: 5,
            convexify_iters: 5,
            trust_iters: 2,
            min_trust: 1e-4,
            d_safe: 0.02,
            accept_ratio: 0.25,
        }
    }
}

impl TrajOptParams {
    pub fn validate(&self) -> Result<(), PlanError> {
        let ok = self.steps >= 2
            && self.velocity_bound > 0.0
            && self.c > 0.0
            && self.c < 1.0
            && self.tau_plus > 1.0
            && self.tau_minus > 0.0
            && self.tau_minus < 1.0
            && self.k > 1.0
            && self.f_tol > 0.0
            && self.x_tol > 0.0
            && self.c_tol > 0.0
            && self.min_trust > 0.0;
        if ok {
            Ok(())
        } else {
            Err(PlanError::BadInput("trajopt parameter invariants violated".into()))
        }
    }
}

/// One subproblem record for diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterRecord {
    pub penalty_iter: usize,
    pub convexify_iter: usize,
    pub trust_iter: usize,
    pub merit: f64,
    pub model_improve: f64,
    pub true_improve: f64,
    pub ratio: f64,
    pub trust_size: f64,
    pub violation: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajoptDiagnostics {
    pub records: Vec<IterRecord>,
    pub final_violation: f64,
    pub final_penalty: f64,
    pub accepted_steps: usize,
    pub qp_solves: usize,
    pub feasible: bool,
}

struct Linearization {
    /// Signed distance at each free waypoint.
    dist: Vec<f64>,
    /// Gradient rows, one per free waypoint.
    grad: Vec<Vec<f64>>,
}

fn smooth_cost(waypoints: &[Vec<f64>]) -> f64 {
    waypoints
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(a, b)| (b - a) * (b - a))
                .sum::<f64>()
        })
        .sum()
}

fn hinge(v: f64) -> f64 {
    v.max(0.0)
}

/// L1 merit: smoothness plus `mu` times the total safety-margin violation.
fn merit(waypoints: &[Vec<f64>], dists: &[f64], d_safe: f64, mu: f64) -> f64 {
    let pen: f64 = dists.iter().map(|d| hinge(d_safe - d)).sum();
    smooth_cost(waypoints) + mu * pen
}

fn max_violation(dists: &[f64], d_safe: f64) -> f64 {
    dists.iter().map(|d| hinge(d_safe - d)).fold(0.0, f64::max)
}

fn query_linearization(
    waypoints: &[Vec<f64>],
    query: &dyn CollisionQuery,
    d_safe: f64,
    last_grad: &mut [Option<Vec<f64>>],
) -> Result<Linearization, PlanError> {
    let free = waypoints.len() - 2;
    let mut dist = Vec::with_capacity(free);
    let mut grad = Vec::with_capacity(free);
    for t in 0..free {
        let q = &waypoints[t + 1];
        let (d, mut g) = query.distance_and_grad(q).ok_or(PlanError::MissingGradient)?;
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-9 {
            let dir: Vec<f64> = g.iter().map(|v| v / norm).collect();
            last_grad[t] = Some(dir);
        } else if d < d_safe {
            // Saturated query inside the margin: reuse the last informative
            // direction, scaled by the remaining slack.
            if let Some(dir) = &last_grad[t] {
                let scale = (d_safe - d).abs().max(1e-3);
                g = dir.iter().map(|v| v * scale).collect();
            }
        }
        dist.push(d);
        grad.push(g);
    }
    Ok(Linearization { dist, grad })
}

fn model_penalty(lin: &Linearization, dx: &[Vec<f64>], d_safe: f64) -> f64 {
    lin.dist
        .iter()
        .zip(&lin.grad)
        .zip(dx)
        .map(|((d, g), step)| {
            let pred = d + g.iter().zip(step).map(|(gi, si)| gi * si).sum::<f64>();
            hinge(d_safe - pred)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn assemble_qp(
    waypoints: &[Vec<f64>],
    lin: &Linearization,
    limits: &[(f64, f64)],
    params: &TrajOptParams,
    mu: f64,
    trust: f64,
) -> QpProblem {
    let t_total = waypoints.len();
    let free = t_total - 2;
    let dof = waypoints[0].len();
    let nd = free * dof;
    let n = nd + free; // deltas plus one slack per free waypoint
    let var = |t: usize, j: usize| (t - 1) * dof + j; // t in 1..=free

    let mut p = vec![0.0; n * n];
    let mut q = vec![0.0; n];

    // smoothness: sum over segments of ||(qb + db) - (qa + da)||^2
    for seg in 0..t_total - 1 {
        let (a, b) = (seg, seg + 1);
        for j in 0..dof {
            let diff = waypoints[b][j] - waypoints[a][j];
            let ia = (a >= 1 && a <= free).then(|| var(a, j));
            let ib = (b >= 1 && b <= free).then(|| var(b, j));
            if let Some(i) = ia {
                p[i * n + i] += 2.0;
                q[i] -= 2.0 * diff;
            }
            if let Some(i) = ib {
                p[i * n + i] += 2.0;
                q[i] += 2.0 * diff;
            }
            if let (Some(i), Some(kx)) = (ia, ib) {
                p[i * n + kx] -= 2.0;
                p[kx * n + i] -= 2.0;
            }
        }
    }
    // slack cost
    for s in 0..free {
        q[nd + s] = mu;
    }

    let mut a_rows: Vec<f64> = Vec::new();
    let mut l = Vec::new();
    let mut u = Vec::new();
    let mut push_row = |row: Vec<f64>, lo: f64, hi: f64| {
        a_rows.extend_from_slice(&row);
        l.push(lo);
        u.push(hi);
    };

    // velocity bounds on every segment
    for seg in 0..t_total - 1 {
        let (a, b) = (seg, seg + 1);
        for j in 0..dof {
            let mut row = vec![0.0; n];
            let mut has_var = false;
            if a >= 1 && a <= free {
                row[var(a, j)] = -1.0;
                has_var = true;
            }
            if b >= 1 && b <= free {
                row[var(b, j)] = 1.0;
                has_var = true;
            }
            if !has_var {
                continue;
            }
            let diff = waypoints[b][j] - waypoints[a][j];
            push_row(row, -params.velocity_bound - diff, params.velocity_bound - diff);
        }
    }
    // joint limits and trust box on each free waypoint
    for t in 1..=free {
        for j in 0..dof {
            let mut row = vec![0.0; n];
            row[var(t, j)] = 1.0;
            let (lo, hi) = limits[j];
            let cur = waypoints[t][j];
            push_row(
                row,
                (lo - cur).max(-trust),
                (hi - cur).min(trust),
            );
        }
    }
    // linearized collision constraints with slack
    for t in 0..free {
        if !lin.dist[t].is_finite() {
            continue; // no obstacle in range
        }
        let mut row = vec![0.0; n];
        for j in 0..dof {
            row[var(t + 1, j)] = lin.grad[t][j];
        }
        row[nd + t] = 1.0;
        push_row(row, params.d_safe - lin.dist[t], f64::INFINITY);
    }
    // slack nonnegativity
    for s in 0..free {
        let mut row = vec![0.0; n];
        row[nd + s] = 1.0;
        push_row(row, 0.0, f64::INFINITY);
    }

    let m = l.len();
    QpProblem {
        n,
        m,
        p,
        q,
        a: a_rows,
        l,
        u,
    }
}

/// Optimize a path between fixed endpoints. Initialization defaults to
/// linear interpolation; a supplied path is resampled to the configured step
/// count. Returns the path plus per-iteration diagnostics, or `Infeasible`
/// (still carrying diagnostics) when the violation never drops below
/// `c_tol`.
pub fn plan_trajopt(
    limits: &[(f64, f64)],
    q_start: &[f64],
    q_goal: &[f64],
    query: &dyn CollisionQuery,
    params: &TrajOptParams,
    init: Option<&Path>,
) -> Result<(Path, TrajoptDiagnostics), PlanError> {
    params.validate()?;
    let dof = q_start.len();
    if q_goal.len() != dof || limits.len() != dof {
        return Err(PlanError::BadInput("dimension mismatch".into()));
    }
    if query.colliding(q_start) {
        return Err(PlanError::InvalidEndpoint("start configuration collides"));
    }
    if query.colliding(q_goal) {
        return Err(PlanError::InvalidEndpoint("goal configuration collides"));
    }
    let t_total = params.steps;
    for j in 0..dof {
        if (q_goal[j] - q_start[j]).abs() > params.velocity_bound * (t_total - 1) as f64 + 1e-12 {
            return Err(PlanError::VelocityEnvelope);
        }
    }

    let mut waypoints = match init {
        Some(p) => {
            if p.len() < 2 {
                return Err(PlanError::BadInput("init path too short".into()));
            }
            let mut r = p.resample(t_total);
            r.waypoints[0] = q_start.to_vec();
            r.waypoints[t_total - 1] = q_goal.to_vec();
            r.waypoints
        }
        None => Path::linear(q_start, q_goal, t_total).waypoints,
    };
    let free = t_total - 2;
    let mut last_grad: Vec<Option<Vec<f64>>> = vec![None; free];

    let mut mu = params.mu0;
    let mut trust = params.s0;
    let mut records = Vec::new();
    let mut qp_solves = 0;
    let mut accepted_steps = 0;
    let qp_settings = QpSettings::default();

    let mut lin = query_linearization(&waypoints, query, params.d_safe, &mut last_grad)?;

    for penalty_iter in 0..params.penalty_iters {
        'convexify: for convexify_iter in 0..params.convexify_iters {
            lin = query_linearization(&waypoints, query, params.d_safe, &mut last_grad)?;
            let merit_cur = merit(&waypoints, &lin.dist, params.d_safe, mu);
            let mut accepted = false;
            let mut model_converged = false;

            for trust_iter in 0..params.trust_iters {
                let prob = assemble_qp(&waypoints, &lin, limits, params, mu, trust);
                let sol = qp::solve(&prob, &qp_settings)?;
                qp_solves += 1;

                let dx: Vec<Vec<f64>> = (0..free)
                    .map(|t| sol.x[t * dof..(t + 1) * dof].to_vec())
                    .collect();
                let mut candidate = waypoints.clone();
                for t in 0..free {
                    for j in 0..dof {
                        candidate[t + 1][j] += dx[t][j];
                    }
                }
                let model_merit_new =
                    smooth_cost(&candidate) + mu * model_penalty(&lin, &dx, params.d_safe);
                let model_improve = merit_cur - model_merit_new;
                let step_inf = dx
                    .iter()
                    .flat_map(|r| r.iter().map(|v| v.abs()))
                    .fold(0.0f64, f64::max);

                if model_improve < params.f_tol {
                    // linearized subproblem cannot improve the merit further
                    records.push(IterRecord {
                        penalty_iter,
                        convexify_iter,
                        trust_iter,
                        merit: merit_cur,
                        model_improve,
                        true_improve: 0.0,
                        ratio: 0.0,
                        trust_size: trust,
                        violation: max_violation(&lin.dist, params.d_safe),
                        accepted: false,
                    });
                    model_converged = true;
                    break;
                }

                let mut cand_last = last_grad.clone();
                let cand_lin =
                    query_linearization(&candidate, query, params.d_safe, &mut cand_last)?;
                let merit_new = merit(&candidate, &cand_lin.dist, params.d_safe, mu);
                let true_improve = merit_cur - merit_new;
                let ratio = true_improve / model_improve;
                let accept = ratio > params.accept_ratio;
                records.push(IterRecord {
                    penalty_iter,
                    convexify_iter,
                    trust_iter,
                    merit: merit_cur,
                    model_improve,
                    true_improve,
                    ratio,
                    trust_size: trust,
                    violation: max_violation(&lin.dist, params.d_safe),
                    accepted: accept,
                });
                if accept {
                    waypoints = candidate;
                    lin = cand_lin;
                    last_grad = cand_last;
                    trust *= params.tau_plus;
                    accepted = true;
                    accepted_steps += 1;
                    if step_inf < params.x_tol {
                        break 'convexify;
                    }
                    break;
                }
                trust *= params.tau_minus;
                if trust < params.min_trust {
                    break;
                }
            }

            if model_converged {
                break 'convexify;
            }
            if !accepted {
                trust *= params.c;
                if trust < params.min_trust {
                    break 'convexify;
                }
            }
        }

        let violation = max_violation(&lin.dist, params.d_safe);
        if violation < params.c_tol {
            break;
        }
        if penalty_iter + 1 < params.penalty_iters {
            mu *= params.k;
        }
    }

    let final_violation = max_violation(&lin.dist, params.d_safe);
    let feasible = final_violation < params.c_tol;
    let diagnostics = TrajoptDiagnostics {
        records,
        final_violation,
        final_penalty: mu,
        accepted_steps,
        qp_solves,
        feasible,
    };
    let path = Path::new(waypoints);
    if feasible {
        Ok((path, diagnostics))
    } else {
        Err(PlanError::Infeasible {
            violation: final_violation,
            diagnostics: Box::new(diagnostics),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::dist;

    struct FreeSpace;
    impl CollisionQuery for FreeSpace {
        fn colliding(&self, _q: &[f64]) -> bool {
            false
        }
        fn distance_and_grad(&self, _q: &[f64]) -> Option<(f64, Vec<f64>)> {
            Some((f64::INFINITY, vec![0.0, 0.0]))
        }
    }

    fn wide_limits(dof: usize) -> Vec<(f64, f64)> {
        vec![(-10.0, 10.0); dof]
    }

    #[test]
    fn empty_scene_matches_linear_interpolation() {
        let params = TrajOptParams::default();
        let (path, diag) = plan_trajopt(
            &wide_limits(2),
            &[0.0, 0.0],
            &[1.0, -2.0],
            &FreeSpace,
            &params,
            None,
        )
        .unwrap();
        let lin = Path::linear(&[0.0, 0.0], &[1.0, -2.0], params.steps);
        for (a, b) in path.waypoints.iter().zip(&lin.waypoints) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= params.x_tol, "deviation {}", (x - y).abs());
            }
        }
        assert!(diag.feasible);
    }

    #[test]
    fn velocity_envelope_checked() {
        let err = plan_trajopt(
            &wide_limits(1),
            &[0.0],
            &[10.0],
            &FreeSpace,
            &TrajOptParams::default(),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, PlanError::VelocityEnvelope));
    }

    /// Point obstacle in a 2-D configuration space with an analytic distance
    /// field; trajopt should bend the path around it.
    struct DiskField {
        center: Vec<f64>,
        radius: f64,
    }
    impl CollisionQuery for DiskField {
        fn colliding(&self, q: &[f64]) -> bool {
            dist(q, &self.center) < self.radius
        }
        fn distance_and_grad(&self, q: &[f64]) -> Option<(f64, Vec<f64>)> {
            let d = dist(q, &self.center);
            if d < 1e-9 {
                return Some((-self.radius, vec![0.0; q.len()]));
            }
            let grad = q
                .iter()
                .zip(&self.center)
                .map(|(qi, ci)| (qi - ci) / d)
                .collect();
            Some((d - self.radius, grad))
        }
    }

    #[test]
    fn obstacle_on_straight_line_is_avoided() {
        let field = DiskField {
            center: vec![0.0, 0.0],
            radius: 0.25,
        };
        let params = TrajOptParams::default();
        let (path, diag) = plan_trajopt(
            &wide_limits(2),
            &[-1.0, 0.01],
            &[1.0, 0.0],
            &field,
            &params,
            None,
        )
        .unwrap();
        assert!(diag.feasible, "violation {}", diag.final_violation);
        // every waypoint clears the margin
        for w in &path.waypoints {
            assert!(dist(w, &field.center) >= field.radius + params.d_safe - params.c_tol);
        }
        // velocity bounds hold exactly
        for w in path.waypoints.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                assert!((b - a).abs() <= params.velocity_bound + 1e-9);
            }
        }
        // endpoints pinned
        assert_eq!(path.first(), &[-1.0, 0.01]);
        assert_eq!(path.last(), &[1.0, 0.0]);
    }

    #[test]
    fn merit_non_increasing_within_penalty_level() {
        let field = DiskField {
            center: vec![0.1, 0.05],
            radius: 0.3,
        };
        let (_, diag) = plan_trajopt(
            &wide_limits(2),
            &[-1.0, 0.02],
            &[1.0, -0.02],
            &field,
            &TrajOptParams::default(),
            None,
        )
        .unwrap();
        let mut last: Option<(usize, f64)> = None;
        for r in diag.records.iter().filter(|r| r.accepted) {
            if let Some((pen, m)) = last {
                if pen == r.penalty_iter {
                    assert!(r.merit <= m + 1e-9, "merit rose within penalty level");
                }
            }
            last = Some((r.penalty_iter, r.merit - r.true_improve));
        }
    }
}
