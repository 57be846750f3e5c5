//! Goal-biased sampling tree planner with shortcut smoothing. Used to
//! harvest planner-like joint states for dataset generation and as the
//! baseline sampling planner.

use rand::Rng as _;

use crate::geometry::RobotModel;
use crate::rng::stream_rng;

use super::{dist, CollisionQuery, Path, PlanError};

#[derive(Debug, Clone)]
pub struct RrtParams {
    pub max_nodes: usize,
    /// Maximum extension length per step, radians (L2 in joint space).
    pub step: f64,
    /// Probability of sampling the goal directly.
    pub goal_bias: f64,
    /// Per-joint interpolation resolution for edge collision checks.
    pub edge_resolution: f64,
    /// Random shortcut attempts applied to the raw tree path.
    pub shortcut_iters: usize,
}

impl Default for RrtParams {
    fn default() -> Self {
        RrtParams {
            max_nodes: 6000,
            step: 0.20,
            goal_bias: 0.10,
            edge_resolution: 0.05,
            shortcut_iters: 80,
        }
    }
}

fn edge_free(a: &[f64], b: &[f64], query: &dyn CollisionQuery, resolution: f64) -> bool {
    let max_step = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    let steps = (max_step / resolution).ceil().max(1.0) as usize;
    for k in 1..=steps {
        let s = k as f64 / steps as f64;
        let q: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + (y - x) * s).collect();
        if query.colliding(&q) {
            return false;
        }
    }
    true
}

/// Plan a path from `q_start` to `q_goal`. Deterministic per seed; the
/// returned path validates at the edge resolution by construction.
pub fn plan_rrt(
    robot: &RobotModel<f64>,
    q_start: &[f64],
    q_goal: &[f64],
    query: &dyn CollisionQuery,
    params: &RrtParams,
    seed: u64,
) -> Result<Path, PlanError> {
    let dof = robot.dof();
    if q_start.len() != dof || q_goal.len() != dof {
        return Err(PlanError::BadInput("endpoint dimension mismatch".into()));
    }
    if !robot.in_limits(q_start) || !robot.in_limits(q_goal) {
        return Err(PlanError::InvalidEndpoint("endpoint outside joint limits"));
    }
    if query.colliding(q_start) {
        return Err(PlanError::InvalidEndpoint("start configuration collides"));
    }
    if query.colliding(q_goal) {
        return Err(PlanError::InvalidEndpoint("goal configuration collides"));
    }

    let mut rng = stream_rng(seed, 0x0277);
    let mut nodes: Vec<Vec<f64>> = vec![q_start.to_vec()];
    let mut parents: Vec<usize> = vec![0];
    let mut reached: Option<usize> = None;

    while nodes.len() < params.max_nodes {
        let target: Vec<f64> = if rng.gen_range(0.0..1.0) < params.goal_bias {
            q_goal.to_vec()
        } else {
            robot.sample_q(&mut rng)
        };
        // nearest node, linear scan
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, n) in nodes.iter().enumerate() {
            let d = dist(n, &target);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        if best_d < 1e-9 {
            continue;
        }
        let scale = (params.step / best_d).min(1.0);
        let new: Vec<f64> = nodes[best]
            .iter()
            .zip(&target)
            .map(|(a, b)| a + (b - a) * scale)
            .collect();
        if !robot.in_limits(&new) || query.colliding(&new) {
            continue;
        }
        if !edge_free(&nodes[best], &new, query, params.edge_resolution) {
            continue;
        }
        nodes.push(new);
        parents.push(best);
        let idx = nodes.len() - 1;

        if dist(&nodes[idx], q_goal) <= params.step
            && edge_free(&nodes[idx], q_goal, query, params.edge_resolution)
        {
            reached = Some(idx);
            break;
        }
    }

    let Some(mut at) = reached else {
        return Err(PlanError::NoPathFound);
    };

    let mut rev = vec![q_goal.to_vec()];
    loop {
        rev.push(nodes[at].clone());
        if at == 0 {
            break;
        }
        at = parents[at];
    }
    rev.reverse();
    let mut waypoints = rev;

    // shortcut smoothing: splice random chords that validate
    for _ in 0..params.shortcut_iters {
        if waypoints.len() < 3 {
            break;
        }
        let i = rng.gen_range(0..waypoints.len() - 2);
        let j = rng.gen_range(i + 2..waypoints.len());
        if edge_free(&waypoints[i], &waypoints[j], query, params.edge_resolution) {
            waypoints.drain(i + 1..j);
        }
    }

    Ok(Path::new(waypoints))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::validate_path;

    struct FreeSpace;
    impl CollisionQuery for FreeSpace {
        fn colliding(&self, _q: &[f64]) -> bool {
            false
        }
    }

    #[test]
    fn free_space_plan_validates() {
        let robot = RobotModel::<f64>::planar_three();
        let p = plan_rrt(
            &robot,
            &[-1.0, 0.2, 0.1],
            &[1.0, -0.3, 0.2],
            &FreeSpace,
            &RrtParams::default(),
            3,
        )
        .unwrap();
        assert!(p.len() >= 2);
        assert_eq!(p.first(), &[-1.0, 0.2, 0.1]);
        assert!(validate_path(&p, &FreeSpace, 0.05).valid);
    }

    #[test]
    fn colliding_goal_is_invalid_endpoint() {
        struct GoalBlocked;
        impl CollisionQuery for GoalBlocked {
            fn colliding(&self, q: &[f64]) -> bool {
                dist(q, &[1.0, 0.0, 0.0]) < 0.3
            }
        }
        let robot = RobotModel::<f64>::planar_three();
        let err = plan_rrt(
            &robot,
            &[0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0],
            &GoalBlocked,
            &RrtParams::default(),
            1,
        )
        .unwrap_err();
        assert!(matches!(err, PlanError::InvalidEndpoint(_)));
    }

    #[test]
    fn deterministic_per_seed() {
        let robot = RobotModel::<f64>::planar_three();
        let run = || {
            plan_rrt(
                &robot,
                &[-0.8, 0.1, 0.0],
                &[0.9, -0.2, 0.3],
                &FreeSpace,
                &RrtParams::default(),
                42,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }
}
