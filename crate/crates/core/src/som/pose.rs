use serde::{Deserialize, Serialize};

/// Wraps an angle in degrees into `[0, 360)`.
pub fn normalize_deg(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Wraps an angle in degrees into `(-180, 180]`.
pub fn wrap_deg(deg: f64) -> f64 {
    let r = normalize_deg(deg);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Planar pose in world coordinates. Heading 0 faces east, counterclockwise positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x_m: f64,
    pub y_m: f64,
    pub theta_deg: f64,
}

/// Rigid displacement expressed in the body frame of the pose it is applied to:
/// `dx_m` forward, `dy_m` to the left.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Displacement {
    pub dx_m: f64,
    pub dy_m: f64,
    pub dtheta_deg: f64,
}

impl Pose2D {
    pub fn new(x_m: f64, y_m: f64, theta_deg: f64) -> Self {
        Self {
            x_m,
            y_m,
            theta_deg: normalize_deg(theta_deg),
        }
    }

    pub fn origin() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn heading_rad(&self) -> f64 {
        self.theta_deg.to_radians()
    }

    /// Applies a body-frame displacement.
    pub fn compose(&self, d: &Displacement) -> Pose2D {
        let (s, c) = self.heading_rad().sin_cos();
        Pose2D::new(
            self.x_m + c * d.dx_m - s * d.dy_m,
            self.y_m + s * d.dx_m + c * d.dy_m,
            self.theta_deg + d.dtheta_deg,
        )
    }

    /// Displacement that takes `self` to `other`, in `self`'s body frame.
    pub fn between(&self, other: &Pose2D) -> Displacement {
        let (s, c) = self.heading_rad().sin_cos();
        let gx = other.x_m - self.x_m;
        let gy = other.y_m - self.y_m;
        Displacement {
            dx_m: c * gx + s * gy,
            dy_m: -s * gx + c * gy,
            dtheta_deg: wrap_deg(other.theta_deg - self.theta_deg),
        }
    }

    pub fn distance_to(&self, x_m: f64, y_m: f64) -> f64 {
        (self.x_m - x_m).hypot(self.y_m - y_m)
    }

    pub fn position_error(&self, other: &Pose2D) -> f64 {
        self.distance_to(other.x_m, other.y_m)
    }

    /// Maps a point given in this pose's body frame (forward, left) to world coordinates.
    pub fn body_to_world(&self, fwd_m: f64, left_m: f64) -> (f64, f64) {
        let (s, c) = self.heading_rad().sin_cos();
        (
            self.x_m + c * fwd_m - s * left_m,
            self.y_m + s * fwd_m + c * left_m,
        )
    }

    /// Inverse of [`Pose2D::body_to_world`].
    pub fn world_to_body(&self, x_m: f64, y_m: f64) -> (f64, f64) {
        let (s, c) = self.heading_rad().sin_cos();
        let gx = x_m - self.x_m;
        let gy = y_m - self.y_m;
        (c * gx + s * gy, -s * gx + c * gy)
    }
}

impl Default for Pose2D {
    fn default() -> Self {
        Self::origin()
    }
}
