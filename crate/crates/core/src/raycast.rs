//! Exact grid traversal (DDA) along a ray.

use crate::som::GridGeometry;

/// A cell crossed by a ray, with the ray parameters (meters) where it enters and leaves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayCell {
    pub u: i64,
    pub v: i64,
    pub t_enter: f64,
    pub t_exit: f64,
}

/// Visits every cell pierced by a ray, in order, without ever terminating on its own.
///
/// Positions are continuous grid coordinates (cell units); `t` is measured in meters.
#[derive(Debug, Clone)]
pub struct GridRay {
    u: i64,
    v: i64,
    step_u: i64,
    step_v: i64,
    t_max_u: f64,
    t_max_v: f64,
    t_delta_u: f64,
    t_delta_v: f64,
    t: f64,
}

impl GridRay {
    /// `rate_u`, `rate_v`: grid cells advanced per meter along each axis.
    pub fn from_grid(gu: f64, gv: f64, rate_u: f64, rate_v: f64) -> Self {
        let (u, v) = (gu.floor(), gv.floor());
        let axis = |g: f64, cell: f64, rate: f64| -> (i64, f64, f64) {
            if rate > 0.0 {
                (1, (cell + 1.0 - g) / rate, 1.0 / rate)
            } else if rate < 0.0 {
                (-1, (g - cell) / -rate, -1.0 / rate)
            } else {
                (0, f64::INFINITY, f64::INFINITY)
            }
        };
        let (step_u, t_max_u, t_delta_u) = axis(gu, u, rate_u);
        let (step_v, t_max_v, t_delta_v) = axis(gv, v, rate_v);
        Self {
            u: u as i64,
            v: v as i64,
            step_u,
            step_v,
            t_max_u,
            t_max_v,
            t_delta_u,
            t_delta_v,
            t: 0.0,
        }
    }

    /// Ray in world coordinates; `angle_rad` is counterclockwise from east.
    pub fn from_world(geom: &GridGeometry, x_m: f64, y_m: f64, angle_rad: f64) -> Self {
        let (gu, gv) = geom.world_to_grid_f(x_m, y_m);
        let (s, c) = angle_rad.sin_cos();
        Self::from_grid(gu, gv, c / geom.cell_size_m, -s / geom.cell_size_m)
    }
}

impl Iterator for GridRay {
    type Item = RayCell;

    fn next(&mut self) -> Option<RayCell> {
        let t_exit = self.t_max_u.min(self.t_max_v);
        let cell = RayCell {
            u: self.u,
            v: self.v,
            t_enter: self.t,
            t_exit,
        };
        if self.t_max_u < self.t_max_v {
            self.u += self.step_u;
            self.t_max_u += self.t_delta_u;
        } else {
            self.v += self.step_v;
            self.t_max_v += self.t_delta_v;
        }
        self.t = t_exit;
        Some(cell)
    }
}
