//! Top-down multi-channel rasterization: the desk-scale observation that
//! stands in for a camera image. Each object paints its XY footprint into
//! its class channel and its color channel.

use crate::geometry::WorldShape;

use super::{ClassTable, Color, Scene};

/// Rasterized observation: `h x w` cells, `channels = |classes| + |colors|`,
/// stored row-major as `(y, x, c)`. Values are occupancy in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationGrid {
    pub h: usize,
    pub w: usize,
    pub channels: usize,
    /// Cell edge length, meters.
    pub cell_size: f64,
    /// World coordinates of the (0, 0) cell corner.
    pub origin: (f64, f64),
    pub data: Vec<f32>,
}

impl ObservationGrid {
    #[inline]
    pub fn at(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.w + x) * self.channels + c]
    }

    #[inline]
    fn paint_max(&mut self, y: usize, x: usize, c: usize, v: f32) {
        let idx = (y * self.w + x) * self.channels + c;
        if self.data[idx] < v {
            self.data[idx] = v;
        }
    }

    /// Sum over one channel.
    pub fn channel_sum(&self, c: usize) -> f64 {
        let mut s = 0.0;
        for y in 0..self.h {
            for x in 0..self.w {
                s += self.at(y, x, c) as f64;
            }
        }
        s
    }

    pub fn channel_of_class(table: &ClassTable, name: &str) -> Option<usize> {
        table.index_of(name)
    }

    pub fn channel_of_color(table: &ClassTable, color: Color) -> usize {
        table.len() + color.index()
    }
}

/// XY footprint membership test for a cell center. Boxes assume yaw-only
/// orientation (objects rest on the table).
fn footprint_contains(shape: &WorldShape<f64>, px: f64, py: f64) -> bool {
    match *shape {
        WorldShape::Sphere { center, radius } => {
            let (dx, dy) = (px - center.x, py - center.y);
            dx * dx + dy * dy <= radius * radius
        }
        WorldShape::Capsule { a, b, radius } => {
            let (ax, ay) = (a.x, a.y);
            let (bx, by) = (b.x, b.y);
            let (ex, ey) = (bx - ax, by - ay);
            let len_sq = ex * ex + ey * ey;
            let t = if len_sq <= f64::EPSILON {
                0.0
            } else {
                (((px - ax) * ex + (py - ay) * ey) / len_sq).clamp(0.0, 1.0)
            };
            let (cx, cy) = (ax + t * ex, ay + t * ey);
            let (dx, dy) = (px - cx, py - cy);
            dx * dx + dy * dy <= radius * radius
        }
        WorldShape::Box { center, rot, half } => {
            let (dx, dy) = (px - center.x, py - center.y);
            // yaw-only: local x/y axes stay in the table plane
            let lx = rot.m[0][0] * dx + rot.m[1][0] * dy;
            let ly = rot.m[0][1] * dx + rot.m[1][1] * dy;
            lx.abs() <= half.x && ly.abs() <= half.y
        }
    }
}

fn footprint_radius(shape: &WorldShape<f64>) -> (f64, f64, f64) {
    match *shape {
        WorldShape::Sphere { center, radius } => (center.x, center.y, radius),
        WorldShape::Capsule { a, b, radius } => {
            let cx = (a.x + b.x) * 0.5;
            let cy = (a.y + b.y) * 0.5;
            let half = (((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt()) * 0.5;
            (cx, cy, half + radius)
        }
        WorldShape::Box { center, half, .. } => {
            (center.x, center.y, (half.x * half.x + half.y * half.y).sqrt())
        }
    }
}

/// Deterministic top-down rasterization. A cell is occupied when its center
/// lies inside the object footprint; overlapping footprints take the
/// per-cell maximum.
pub fn rasterize(scene: &Scene, table: &ClassTable, h: usize, w: usize) -> ObservationGrid {
    assert!(h >= 8 && w >= 8, "resolution must be at least 8x8");
    let channels = table.len() + Color::ALL.len();
    let span_x = scene.workspace.hi.x - scene.workspace.lo.x;
    let span_y = scene.workspace.hi.y - scene.workspace.lo.y;
    let cell_x = span_x / w as f64;
    let cell_y = span_y / h as f64;
    let mut grid = ObservationGrid {
        h,
        w,
        channels,
        cell_size: cell_x,
        origin: (scene.workspace.lo.x, scene.workspace.lo.y),
        data: vec![0.0; h * w * channels],
    };

    for obj in &scene.objects {
        let shape = obj.world_shape();
        let class_channel = table.index_of(&obj.class_name);
        let color_channel = table.len() + obj.color.index();
        let (cx, cy, r) = footprint_radius(&shape);
        let x0 = (((cx - r - grid.origin.0) / cell_x).floor().max(0.0)) as usize;
        let x1 = ((((cx + r - grid.origin.0) / cell_x).ceil()) as usize).min(w.saturating_sub(1));
        let y0 = (((cy - r - grid.origin.1) / cell_y).floor().max(0.0)) as usize;
        let y1 = ((((cy + r - grid.origin.1) / cell_y).ceil()) as usize).min(h.saturating_sub(1));
        for y in y0..=y1 {
            let py = grid.origin.1 + (y as f64 + 0.5) * cell_y;
            for x in x0..=x1 {
                let px = grid.origin.0 + (x as f64 + 0.5) * cell_x;
                if footprint_contains(&shape, px, py) {
                    if let Some(c) = class_channel {
                        grid.paint_max(y, x, c, 1.0);
                    }
                    grid.paint_max(y, x, color_channel, 1.0);
                }
            }
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Pose, Primitive};
    use crate::scene::ObjectInstance;
    use crate::Vec3;

    #[test]
    fn empty_scene_is_all_zero() {
        let scene = Scene::empty(0);
        let g = rasterize(&scene, &ClassTable::default_desk(), 32, 32);
        assert!(g.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sphere_footprint_area_matches_disk() {
        let table = ClassTable::default_desk();
        let mut scene = Scene::empty(0);
        let r = 0.2;
        scene.objects.push(ObjectInstance {
            id: 0,
            class_name: "sphere".into(),
            color: Color::Red,
            primitive: Primitive::Sphere { radius: r },
            pose: Pose::at(Vec3::new(0.0, 0.0, r)),
        });
        let g = rasterize(&scene, &table, 64, 64);
        let c = table.index_of("sphere").unwrap();
        let cell_area = g.cell_size * g.cell_size;
        let count = g.channel_sum(c);
        let area = count * cell_area;
        let expect = std::f64::consts::PI * r * r;
        let perimeter_band = 2.0 * std::f64::consts::PI * r * g.cell_size;
        assert!(
            (area - expect).abs() <= perimeter_band,
            "area {area} vs {expect} (band {perimeter_band})"
        );
    }

    #[test]
    fn disjoint_objects_sum_like_individuals() {
        let table = ClassTable::default_desk();
        let mk = |id: u32, x: f64| ObjectInstance {
            id,
            class_name: "box".into(),
            color: Color::Blue,
            primitive: Primitive::Box {
                half_extents: Vec3::new(0.06, 0.06, 0.06),
            },
            pose: Pose::at(Vec3::new(x, 0.0, 0.06)),
        };
        let mut both = Scene::empty(0);
        both.objects.push(mk(0, -0.4));
        both.objects.push(mk(1, 0.4));
        let mut left = Scene::empty(0);
        left.objects.push(mk(0, -0.4));
        let mut right = Scene::empty(0);
        right.objects.push(mk(1, 0.4));

        let c = table.index_of("box").unwrap();
        let g = rasterize(&both, &table, 64, 64);
        let gl = rasterize(&left, &table, 64, 64);
        let gr = rasterize(&right, &table, 64, 64);
        assert_eq!(g.channel_sum(c), gl.channel_sum(c) + gr.channel_sum(c));
    }

    #[test]
    fn values_stay_in_unit_interval_on_overlap() {
        let table = ClassTable::default_desk();
        let mut scene = Scene::empty(0);
        for id in 0..2 {
            scene.objects.push(ObjectInstance {
                id,
                class_name: "box".into(),
                color: Color::Red,
                primitive: Primitive::Box {
                    half_extents: Vec3::new(0.1, 0.1, 0.06),
                },
                pose: Pose::at(Vec3::new(0.02 * id as f64, 0.0, 0.06)),
            });
        }
        let g = rasterize(&scene, &table, 32, 32);
        assert!(g.data.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
