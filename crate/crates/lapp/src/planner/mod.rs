//! Motion planners over a uniform collision-query interface: a sampling
//! planner for data generation and baselines, and a sequential-convex
//! trajectory optimizer. Either planner accepts the analytic oracle or the
//! learned model through [`CollisionQuery`].

mod laco;
mod rrt;
mod trajopt;

pub use laco::LacoQuery;
pub use rrt::{plan_rrt, RrtParams};
pub use trajopt::{plan_trajopt, IterRecord, TrajOptParams, TrajoptDiagnostics};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, GeometryError, RobotModel};
use crate::qp::QpError;
use crate::scene::{CollidableSet, Scene};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(&'static str),
    #[error("no path found within the node budget")]
    NoPathFound,
    #[error("infeasible: constraint violation {violation:.4} after all penalty iterations")]
    Infeasible {
        violation: f64,
        diagnostics: Box<TrajoptDiagnostics>,
    },
    #[error("endpoints exceed the velocity envelope for the configured step count")]
    VelocityEnvelope,
    #[error("collision query provides no distance/gradient information")]
    MissingGradient,
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Qp(#[from] QpError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Waypoint sequence in configuration space. Serializes as a bare JSON array
/// of waypoint arrays (radians).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path {
    pub waypoints: Vec<Vec<f64>>,
}

impl Path {
    pub fn new(waypoints: Vec<Vec<f64>>) -> Self {
        Path { waypoints }
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn first(&self) -> &[f64] {
        &self.waypoints[0]
    }

    pub fn last(&self) -> &[f64] {
        self.waypoints.last().unwrap()
    }

    /// Linear interpolation with `t` waypoints between two configurations.
    pub fn linear(q_start: &[f64], q_goal: &[f64], t: usize) -> Path {
        assert!(t >= 2);
        let waypoints = (0..t)
            .map(|i| {
                let s = i as f64 / (t - 1) as f64;
                q_start
                    .iter()
                    .zip(q_goal)
                    .map(|(a, b)| a + (b - a) * s)
                    .collect()
            })
            .collect();
        Path { waypoints }
    }

    /// Resample to exactly `t` waypoints by arc-length interpolation along
    /// the polyline.
    pub fn resample(&self, t: usize) -> Path {
        assert!(t >= 2 && self.len() >= 2);
        let mut cum = vec![0.0];
        for w in self.waypoints.windows(2) {
            let d = dist(&w[0], &w[1]);
            cum.push(cum.last().unwrap() + d);
        }
        let total = *cum.last().unwrap();
        if total <= 1e-12 {
            return Path::linear(self.first(), self.last(), t);
        }
        let mut out = Vec::with_capacity(t);
        for i in 0..t {
            let target = total * i as f64 / (t - 1) as f64;
            let seg = match cum.windows(2).position(|w| target <= w[1]) {
                Some(s) => s,
                None => self.len() - 2,
            };
            let seg_len = cum[seg + 1] - cum[seg];
            let s = if seg_len <= 1e-12 {
                0.0
            } else {
                (target - cum[seg]) / seg_len
            };
            let q = self.waypoints[seg]
                .iter()
                .zip(&self.waypoints[seg + 1])
                .map(|(a, b)| a + (b - a) * s)
                .collect();
            out.push(q);
        }
        Path { waypoints: out }
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Uniform collision interface used by both planners. Implementations must
/// be deterministic for the duration of one planning call.
pub trait CollisionQuery {
    fn colliding(&self, q: &[f64]) -> bool;

    /// Signed distance surrogate and its gradient, when the query can
    /// provide them (required by the trajectory optimizer).
    fn distance_and_grad(&self, _q: &[f64]) -> Option<(f64, Vec<f64>)> {
        None
    }
}

/// Ground-truth oracle query over a scene, optionally language-masked.
pub struct OracleQuery<'a> {
    pub scene: &'a Scene,
    pub robot: &'a RobotModel<f64>,
    pub mask: CollidableSet,
}

impl<'a> OracleQuery<'a> {
    pub fn new(scene: &'a Scene, robot: &'a RobotModel<f64>, mask: CollidableSet) -> Self {
        OracleQuery { scene, robot, mask }
    }

    /// Oracle with a safety margin: reports collision within `margin` of any
    /// surface. Used to validate paths against the TrajOpt safety distance.
    pub fn with_margin(self, margin: f64) -> MarginQuery<'a> {
        MarginQuery { inner: self, margin }
    }
}

impl CollisionQuery for OracleQuery<'_> {
    fn colliding(&self, q: &[f64]) -> bool {
        geometry::collide_masked(self.scene, self.robot, q, &self.mask)
            .map(|r| r.colliding)
            .unwrap_or(true)
    }

    fn distance_and_grad(&self, q: &[f64]) -> Option<(f64, Vec<f64>)> {
        geometry::min_signed_distance(self.scene, self.robot, q, &self.mask).ok()
    }
}

/// Oracle query that treats any distance below `margin` as a collision.
pub struct MarginQuery<'a> {
    inner: OracleQuery<'a>,
    margin: f64,
}

impl CollisionQuery for MarginQuery<'_> {
    fn colliding(&self, q: &[f64]) -> bool {
        match geometry::min_signed_distance(self.inner.scene, self.inner.robot, q, &self.inner.mask)
        {
            Ok((d, _)) => d <= self.margin || self.inner.colliding(q),
            Err(_) => true,
        }
    }

    fn distance_and_grad(&self, q: &[f64]) -> Option<(f64, Vec<f64>)> {
        self.inner
            .distance_and_grad(q)
            .map(|(d, g)| (d - self.margin, g))
    }
}

/// Outcome of [`validate_path`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathValidation {
    pub valid: bool,
    /// First violating sample: segment index and the configuration.
    pub first_violation: Option<(usize, Vec<f64>)>,
    pub samples_checked: usize,
}

/// Densely interpolate between consecutive waypoints at the given per-joint
/// resolution (radians) and query every sample.
pub fn validate_path(path: &Path, query: &dyn CollisionQuery, resolution: f64) -> PathValidation {
    assert!(resolution > 0.0);
    let mut samples = 0;
    for (seg, w) in path.waypoints.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        let max_step = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        let steps = (max_step / resolution).ceil().max(1.0) as usize;
        let start_k = if seg == 0 { 0 } else { 1 };
        for k in start_k..=steps {
            let s = k as f64 / steps as f64;
            let q: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + (y - x) * s).collect();
            samples += 1;
            if query.colliding(&q) {
                return PathValidation {
                    valid: false,
                    first_violation: Some((seg, q)),
                    samples_checked: samples,
                };
            }
        }
    }
    PathValidation {
        valid: true,
        first_violation: None,
        samples_checked: samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct FreeSpace;
    impl CollisionQuery for FreeSpace {
        fn colliding(&self, _q: &[f64]) -> bool {
            false
        }
    }

    struct BallObstacle {
        center: Vec<f64>,
        radius: f64,
    }
    impl CollisionQuery for BallObstacle {
        fn colliding(&self, q: &[f64]) -> bool {
            dist(q, &self.center) < self.radius
        }
    }

    #[test]
    fn two_waypoint_path_in_free_space_is_valid() {
        let p = Path::linear(&[0.0, 0.0], &[1.0, 1.0], 2);
        assert!(validate_path(&p, &FreeSpace, 0.05).valid);
    }

    #[test]
    fn midpoint_violation_reports_segment() {
        let p = Path::linear(&[-1.0, 0.0], &[1.0, 0.0], 3);
        let q = BallObstacle {
            center: vec![0.0, 0.0],
            radius: 0.2,
        };
        let v = validate_path(&p, &q, 0.01);
        assert!(!v.valid);
        let (seg, at) = v.first_violation.unwrap();
        assert!(seg <= 1);
        assert!(dist(&at, &q.center) < q.radius);
    }

    #[test]
    fn resample_preserves_endpoints() {
        let p = Path::new(vec![vec![0.0, 0.0], vec![0.5, 1.0], vec![2.0, 0.0]]);
        let r = p.resample(7);
        assert_eq!(r.len(), 7);
        assert_eq!(r.first(), p.first());
        assert!(dist(r.last(), p.last()) < 1e-12);
    }
}
