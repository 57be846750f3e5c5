//! Signed distance between posed convex primitives.
//!
//! Every shape is treated as a sphere-swept core set (point, segment, or
//! box): the signed distance between two shapes is the signed distance
//! between their cores minus both sweep radii. Positive values are exact
//! separation distances; non-positive values indicate overlap with an
//! approximate penetration depth.

use crate::math::{closest_params_segment_segment, segment_param_to_point, Mat3, Vec3};
use crate::num::Real;

use super::shape::WorldShape;

/// Distance query result with witness points (on the core sets) and the
/// direction along which the distance grows when moving shape `a`.
#[derive(Debug, Clone, Copy)]
pub struct Witness<S> {
    /// Signed distance between the shapes (cores minus sweep radii).
    pub dist: S,
    /// Witness on the core of `a`, world frame.
    pub on_a: Vec3<S>,
    /// Witness on the core of `b`, world frame.
    pub on_b: Vec3<S>,
    /// Unit direction from `b`'s witness toward `a`'s; `d/dt dist = n·v` for
    /// a's witness moving with velocity `v`.
    pub normal: Vec3<S>,
    /// Set when the normal is ill-defined (coincident cores, deep box
    /// overlap); callers needing gradients should fall back to finite
    /// differences.
    pub degenerate: bool,
}

#[derive(Clone, Copy)]
enum Core<S> {
    Point(Vec3<S>),
    Segment(Vec3<S>, Vec3<S>),
    Box {
        center: Vec3<S>,
        rot: Mat3<S>,
        half: Vec3<S>,
    },
}

fn core_of<S: Real>(s: &WorldShape<S>) -> (Core<S>, S) {
    match *s {
        WorldShape::Sphere { center, radius } => (Core::Point(center), radius),
        WorldShape::Capsule { a, b, radius } => (Core::Segment(a, b), radius),
        WorldShape::Box { center, rot, half } => (Core::Box { center, rot, half }, S::zero()),
    }
}

fn rank<S>(c: &Core<S>) -> u8 {
    match c {
        Core::Point(_) => 0,
        Core::Segment(..) => 1,
        Core::Box { .. } => 2,
    }
}

/// Signed distance between two posed shapes.
pub fn distance<S: Real>(a: &WorldShape<S>, b: &WorldShape<S>) -> S {
    distance_witness(a, b).dist
}

/// Signed distance with witness points.
pub fn distance_witness<S: Real>(a: &WorldShape<S>, b: &WorldShape<S>) -> Witness<S> {
    let (ca, ra) = core_of(a);
    let (cb, rb) = core_of(b);
    // Canonical order keeps results bit-identical under argument swap.
    let mut w = if rank(&ca) <= rank(&cb) {
        core_witness(&ca, &cb)
    } else {
        let mut w = core_witness(&cb, &ca);
        std::mem::swap(&mut w.on_a, &mut w.on_b);
        w.normal = -w.normal;
        w
    };
    w.dist = w.dist - ra - rb;
    w
}

fn core_witness<S: Real>(a: &Core<S>, b: &Core<S>) -> Witness<S> {
    match (a, b) {
        (Core::Point(p), Core::Point(q)) => point_point(*p, *q),
        (Core::Point(p), Core::Segment(s0, s1)) => {
            let t = segment_param_to_point(*s0, *s1, *p);
            let q = *s0 + (*s1 - *s0) * t;
            point_point(*p, q)
        }
        (Core::Segment(a0, a1), Core::Segment(b0, b1)) => {
            let (s, t) = closest_params_segment_segment(*a0, *a1, *b0, *b1);
            let pa = *a0 + (*a1 - *a0) * s;
            let pb = *b0 + (*b1 - *b0) * t;
            point_point(pa, pb)
        }
        (Core::Point(p), Core::Box { center, rot, half }) => point_box(*p, *center, *rot, *half),
        (Core::Segment(s0, s1), Core::Box { center, rot, half }) => {
            segment_box(*s0, *s1, *center, *rot, *half)
        }
        (Core::Box { .. }, Core::Box { .. }) => box_box(a, b),
        _ => unreachable!("core pairs are canonically ordered"),
    }
}

fn point_point<S: Real>(p: Vec3<S>, q: Vec3<S>) -> Witness<S> {
    let d = p - q;
    let n = d.norm();
    if n <= S::of(1e-12) {
        Witness {
            dist: n,
            on_a: p,
            on_b: q,
            normal: Vec3::new(S::zero(), S::zero(), S::one()),
            degenerate: true,
        }
    } else {
        Witness {
            dist: n,
            on_a: p,
            on_b: q,
            normal: d / n,
            degenerate: false,
        }
    }
}

/// Signed point-box distance in the box local frame: positive outside with
/// the clamped closest point, negative inside with the nearest face.
fn point_box_local<S: Real>(p: Vec3<S>, half: Vec3<S>) -> (S, Vec3<S>, Vec3<S>) {
    let clamped = p.clamp(-half, half);
    let delta = p - clamped;
    let outside = delta.norm();
    if outside > S::zero() {
        (outside, clamped, delta / outside)
    } else {
        // Inside: distance to the nearest face, tie broken by axis index.
        let gaps = [half.x - p.x.abs(), half.y - p.y.abs(), half.z - p.z.abs()];
        let mut axis = 0;
        for i in 1..3 {
            if gaps[i] < gaps[axis] {
                axis = i;
            }
        }
        let mut q = p;
        let mut n = Vec3::zero();
        match axis {
            0 => {
                let s = if p.x >= S::zero() { S::one() } else { -S::one() };
                q.x = half.x * s;
                n.x = s;
            }
            1 => {
                let s = if p.y >= S::zero() { S::one() } else { -S::one() };
                q.y = half.y * s;
                n.y = s;
            }
            _ => {
                let s = if p.z >= S::zero() { S::one() } else { -S::one() };
                q.z = half.z * s;
                n.z = s;
            }
        }
        (-gaps[axis], q, n)
    }
}

fn point_box<S: Real>(p: Vec3<S>, center: Vec3<S>, rot: Mat3<S>, half: Vec3<S>) -> Witness<S> {
    let local = rot.transpose().mul_vec(p - center);
    let (d, q_local, n_local) = point_box_local(local, half);
    Witness {
        dist: d,
        on_a: p,
        on_b: rot.mul_vec(q_local) + center,
        normal: rot.mul_vec(n_local),
        degenerate: false,
    }
}

/// Unsigned distance from a point to the box set (zero inside); convex along
/// any line, which the segment query exploits.
fn point_box_unsigned_local<S: Real>(p: Vec3<S>, half: Vec3<S>) -> S {
    let clamped = p.clamp(-half, half);
    (p - clamped).norm()
}

fn segment_box<S: Real>(
    s0: Vec3<S>,
    s1: Vec3<S>,
    center: Vec3<S>,
    rot: Mat3<S>,
    half: Vec3<S>,
) -> Witness<S> {
    let rt = rot.transpose();
    let a = rt.mul_vec(s0 - center);
    let b = rt.mul_vec(s1 - center);
    let at = |t: S| a + (b - a) * t;

    // The unsigned distance is convex in t; ternary search finds its minimum.
    let mut lo = S::zero();
    let mut hi = S::one();
    for _ in 0..96 {
        let third = (hi - lo) / S::of(3.0);
        let m1 = lo + third;
        let m2 = hi - third;
        if point_box_unsigned_local(at(m1), half) < point_box_unsigned_local(at(m2), half) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t_min = (lo + hi) / S::of(2.0);
    let sep = point_box_unsigned_local(at(t_min), half);

    if sep > S::of(1e-12) {
        let (d, q_local, n_local) = point_box_local(at(t_min), half);
        return Witness {
            dist: d,
            on_a: rot.mul_vec(at(t_min)) + center,
            on_b: rot.mul_vec(q_local) + center,
            normal: rot.mul_vec(n_local),
            degenerate: false,
        };
    }

    // Penetrating: scan for the deepest point. Depth is approximate, the
    // sign is what matters.
    let n_scan = 192;
    let mut best_t = t_min;
    let mut best_d = S::infinity();
    for i in 0..=n_scan {
        let t = S::of(i as f64 / n_scan as f64);
        let (d, _, _) = point_box_local(at(t), half);
        if d < best_d {
            best_d = d;
            best_t = t;
        }
    }
    let (d, q_local, n_local) = point_box_local(at(best_t), half);
    Witness {
        dist: d,
        on_a: rot.mul_vec(at(best_t)) + center,
        on_b: rot.mul_vec(q_local) + center,
        normal: rot.mul_vec(n_local),
        degenerate: false,
    }
}

fn box_corners<S: Real>(center: Vec3<S>, rot: Mat3<S>, half: Vec3<S>) -> [Vec3<S>; 8] {
    let mut out = [Vec3::zero(); 8];
    for (i, c) in out.iter_mut().enumerate() {
        let sx = if i & 1 == 0 { -half.x } else { half.x };
        let sy = if i & 2 == 0 { -half.y } else { half.y };
        let sz = if i & 4 == 0 { -half.z } else { half.z };
        *c = rot.mul_vec(Vec3::new(sx, sy, sz)) + center;
    }
    out
}

const BOX_EDGES: [(usize, usize); 12] = [
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// Separating-axis overlap test for two oriented boxes; returns the minimum
/// overlap depth and its axis when the boxes intersect.
fn sat_overlap<S: Real>(
    ca: Vec3<S>,
    ra: Mat3<S>,
    ha: Vec3<S>,
    cb: Vec3<S>,
    rb: Mat3<S>,
    hb: Vec3<S>,
) -> Option<(S, Vec3<S>)> {
    let t = cb - ca;
    let mut axes: Vec<Vec3<S>> = Vec::with_capacity(15);
    for j in 0..3 {
        axes.push(ra.col(j));
        axes.push(rb.col(j));
    }
    for i in 0..3 {
        for j in 0..3 {
            let axis = ra.col(i).cross(rb.col(j));
            if axis.norm_sq() > S::of(1e-12) {
                axes.push(axis);
            }
        }
    }
    let mut min_depth = S::infinity();
    let mut min_axis = Vec3::new(S::zero(), S::zero(), S::one());
    for axis in axes {
        let l = axis / axis.norm();
        let proj_a = ha.x * ra.col(0).dot(l).abs()
            + ha.y * ra.col(1).dot(l).abs()
            + ha.z * ra.col(2).dot(l).abs();
        let proj_b = hb.x * rb.col(0).dot(l).abs()
            + hb.y * rb.col(1).dot(l).abs()
            + hb.z * rb.col(2).dot(l).abs();
        let depth = proj_a + proj_b - t.dot(l).abs();
        if depth <= S::zero() {
            return None; // separating axis found
        }
        if depth < min_depth {
            min_depth = depth;
            min_axis = if t.dot(l) >= S::zero() { -l } else { l };
        }
    }
    Some((min_depth, min_axis))
}

fn box_box<S: Real>(a: &Core<S>, b: &Core<S>) -> Witness<S> {
    let (ca, ra, ha) = match *a {
        Core::Box { center, rot, half } => (center, rot, half),
        _ => unreachable!(),
    };
    let (cb, rb, hb) = match *b {
        Core::Box { center, rot, half } => (center, rot, half),
        _ => unreachable!(),
    };

    if let Some((depth, axis)) = sat_overlap(ca, ra, ha, cb, rb, hb) {
        // Overlapping: minimum SAT overlap approximates penetration depth.
        return Witness {
            dist: -depth,
            on_a: ca,
            on_b: cb,
            normal: axis,
            degenerate: true,
        };
    }

    // Separated: the closest pair between two convex polytopes always has a
    // witness on an edge of one of them, so the exact distance is the best
    // edge-vs-box query over both edge sets.
    let mut best: Option<Witness<S>> = None;
    let corners_a = box_corners(ca, ra, ha);
    for &(i, j) in &BOX_EDGES {
        let w = segment_box(corners_a[i], corners_a[j], cb, rb, hb);
        if best.map_or(true, |b| w.dist < b.dist) {
            best = Some(w);
        }
    }
    let corners_b = box_corners(cb, rb, hb);
    for &(i, j) in &BOX_EDGES {
        let mut w = segment_box(corners_b[i], corners_b[j], ca, ra, ha);
        std::mem::swap(&mut w.on_a, &mut w.on_b);
        w.normal = -w.normal;
        if best.map_or(true, |b| w.dist < b.dist) {
            best = Some(w);
        }
    }
    best.expect("box has edges")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Quat;

    fn sphere(x: f64, y: f64, z: f64, r: f64) -> WorldShape<f64> {
        WorldShape::Sphere {
            center: Vec3::new(x, y, z),
            radius: r,
        }
    }

    #[test]
    fn spheres_apart() {
        let d = distance(&sphere(0.0, 0.0, 0.0, 1.0), &sphere(3.0, 0.0, 0.0, 1.0));
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spheres_coincident_full_depth() {
        let d = distance(&sphere(0.0, 0.0, 0.0, 1.0), &sphere(0.0, 0.0, 0.0, 1.0));
        assert!((d + 2.0).abs() < 1e-12);
    }

    #[test]
    fn capsule_sphere_matches_hand_value() {
        let cap = WorldShape::Capsule {
            a: Vec3::new(-1.0, 0.0, 0.0),
            b: Vec3::new(1.0, 0.0, 0.0),
            radius: 0.25,
        };
        // closest point on segment is (1,0,0); center distance 1.0
        let d = distance(&cap, &sphere(2.0, 0.0, 0.0, 0.5));
        assert!((d - 0.25).abs() < 1e-12);
    }

    #[test]
    fn sphere_inside_box_is_negative() {
        let b = WorldShape::Box {
            center: Vec3::zero(),
            rot: Mat3::identity(),
            half: Vec3::new(1.0, 1.0, 1.0),
        };
        let d = distance(&sphere(0.0, 0.0, 0.2, 0.1), &b);
        // nearest face gap is 0.8, plus the sphere radius
        assert!((d + 0.9).abs() < 1e-12);
    }

    #[test]
    fn capsule_box_axis_aligned() {
        let b = WorldShape::Box {
            center: Vec3::zero(),
            rot: Mat3::identity(),
            half: Vec3::new(0.5, 0.5, 0.5),
        };
        let cap = WorldShape::Capsule {
            a: Vec3::new(2.0, -1.0, 0.0),
            b: Vec3::new(2.0, 1.0, 0.0),
            radius: 0.25,
        };
        let d = distance(&cap, &b);
        assert!((d - 1.25).abs() < 1e-9, "got {d}");
    }

    #[test]
    fn box_box_face_to_face() {
        let mk = |x: f64| WorldShape::Box {
            center: Vec3::new(x, 0.0, 0.0),
            rot: Mat3::identity(),
            half: Vec3::new(0.5, 0.4, 0.3),
        };
        let d = distance(&mk(0.0), &mk(2.0));
        assert!((d - 1.0).abs() < 1e-9, "got {d}");
    }

    #[test]
    fn box_box_rotated_corner() {
        // 45-degree yaw: corner at sqrt(2)*0.5 toward the other box
        let a = WorldShape::Box {
            center: Vec3::zero(),
            rot: Quat::from_yaw(std::f64::consts::FRAC_PI_4).to_mat3(),
            half: Vec3::new(0.5, 0.5, 0.5),
        };
        let b = WorldShape::Box {
            center: Vec3::new(2.0, 0.0, 0.0),
            rot: Mat3::identity(),
            half: Vec3::new(0.5, 0.5, 0.5),
        };
        let d = distance(&a, &b);
        let expect = 2.0 - 0.5f64.sqrt() - 0.5;
        assert!((d - expect).abs() < 1e-9, "got {d}, want {expect}");
    }

    #[test]
    fn box_box_overlap_sign() {
        let mk = |x: f64| WorldShape::Box {
            center: Vec3::new(x, 0.0, 0.0),
            rot: Mat3::identity(),
            half: Vec3::new(0.5, 0.5, 0.5),
        };
        assert!(distance(&mk(0.0), &mk(0.9)) < 0.0);
    }

    #[test]
    fn symmetry_exact() {
        let a = WorldShape::Capsule {
            a: Vec3::new(0.1, 0.2, 0.3),
            b: Vec3::new(0.4, -0.2, 0.5),
            radius: 0.1,
        };
        let b = WorldShape::Box {
            center: Vec3::new(1.0, 0.5, 0.2),
            rot: Quat::from_yaw(0.63).to_mat3(),
            half: Vec3::new(0.2, 0.3, 0.15),
        };
        assert_eq!(distance(&a, &b), distance(&b, &a));
    }
}
