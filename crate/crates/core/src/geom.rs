//! Small 3D vector math used by the scenario and antenna modules.

use serde::{Deserialize, Serialize};

/// A point or direction in 3D space, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n == 0.0 {
            Vec3::new(1.0, 0.0, 0.0)
        } else {
            self.scale(1.0 / n)
        }
    }

    /// 3D distance to another point.
    pub fn distance(self, o: Vec3) -> f64 {
        self.sub(o).norm()
    }

    /// Horizontal (xy-plane) distance to another point.
    pub fn distance_2d(self, o: Vec3) -> f64 {
        let d = self.sub(o);
        (d.x * d.x + d.y * d.y).sqrt()
    }
}

/// A direction expressed as azimuth/elevation, degrees.
///
/// Azimuth is measured counter-clockwise from the +x axis in the xy plane;
/// elevation is measured from the horizon (+z up).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AzEl {
    pub az_deg: f64,
    pub el_deg: f64,
}

impl AzEl {
    pub fn new(az_deg: f64, el_deg: f64) -> Self {
        Self { az_deg, el_deg }
    }

    /// Unit direction vector for this azimuth/elevation.
    pub fn unit_vector(self) -> Vec3 {
        let az = self.az_deg.to_radians();
        let el = self.el_deg.to_radians();
        Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
    }

    /// Azimuth/elevation of the direction from `from` to `to`.
    pub fn between(from: Vec3, to: Vec3) -> Self {
        let d = to.sub(from);
        let az = d.y.atan2(d.x).to_degrees();
        let el = d.z.atan2((d.x * d.x + d.y * d.y).sqrt()).to_degrees();
        Self::new(az, el)
    }
}

/// Wrap an angle in degrees to (-180, 180].
pub fn wrap_deg(mut a: f64) -> f64 {
    while a > 180.0 {
        a -= 360.0;
    }
    while a <= -180.0 {
        a += 360.0;
    }
    a
}
