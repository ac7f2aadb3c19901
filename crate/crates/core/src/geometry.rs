//! Shoebox rooms, sources, microphone pairs and the angular helpers shared
//! by the synthesis stages.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for geometric consistency checks (meters).
pub const GEOMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn x(self) -> f64 {
        self.0[0]
    }

    pub fn y(self) -> f64 {
        self.0[1]
    }

    pub fn z(self) -> f64 {
        self.0[2]
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    /// Unit vector pointing along `azimuth` (from +x towards +y) raised by `elevation`.
    pub fn from_angles(azimuth: f64, elevation: f64) -> Self {
        let (sa, ca) = azimuth.sin_cos();
        let (se, ce) = elevation.sin_cos();
        Vec3::new(ce * ca, ce * sa, se)
    }

    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2])
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.0[0] * s, self.0[1] * s, self.0[2] * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        self * -1.0
    }
}

/// Shoebox room spanning `[0, length] x [0, width] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub length: f64,
    pub width: f64,
    pub height: f64,
    /// Reverberation time in seconds.
    pub t60: f64,
}

impl Room {
    pub fn new(length: f64, width: f64, height: f64, t60: f64) -> Result<Self> {
        let room = Room {
            length,
            width,
            height,
            t60,
        };
        room.validate()?;
        Ok(room)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("room.length", self.length),
            ("room.width", self.width),
            ("room.height", self.height),
            ("room.t60", self.t60),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> Vec3 {
        Vec3::new(self.length, self.width, self.height)
    }

    pub fn volume(&self) -> f64 {
        self.length * self.width * self.height
    }

    /// Total area of walls, floor and ceiling.
    pub fn surface_area(&self) -> f64 {
        2.0 * (self.length * self.width + self.length * self.height + self.width * self.height)
    }

    pub fn contains_strictly(&self, p: Vec3) -> bool {
        p.0.iter()
            .zip(self.dims().0)
            .all(|(&c, d)| c > 0.0 && c < d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectivityPattern {
    Omnidirectional,
    Subcardioid,
    Cardioid,
    Supercardioid,
    Hypercardioid,
}

impl DirectivityPattern {
    pub const ALL: [DirectivityPattern; 5] = [
        DirectivityPattern::Omnidirectional,
        DirectivityPattern::Subcardioid,
        DirectivityPattern::Cardioid,
        DirectivityPattern::Supercardioid,
        DirectivityPattern::Hypercardioid,
    ];

    /// First-order coefficient `a` in `a + (1 - a) cos(theta)`.
    pub fn coefficient(self) -> f64 {
        match self {
            DirectivityPattern::Omnidirectional => 1.0,
            DirectivityPattern::Subcardioid => 0.7,
            DirectivityPattern::Cardioid => 0.5,
            DirectivityPattern::Supercardioid => 0.37,
            DirectivityPattern::Hypercardioid => 0.25,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DirectivityPattern::Omnidirectional => "omnidirectional",
            DirectivityPattern::Subcardioid => "subcardioid",
            DirectivityPattern::Cardioid => "cardioid",
            DirectivityPattern::Supercardioid => "supercardioid",
            DirectivityPattern::Hypercardioid => "hypercardioid",
        }
    }
}

impl std::str::FromStr for DirectivityPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "omni" | "omnidirectional" => Ok(DirectivityPattern::Omnidirectional),
            "subcardioid" => Ok(DirectivityPattern::Subcardioid),
            "cardioid" => Ok(DirectivityPattern::Cardioid),
            "supercardioid" => Ok(DirectivityPattern::Supercardioid),
            "hypercardioid" => Ok(DirectivityPattern::Hypercardioid),
            other => Err(Error::param("pattern", format!("unknown pattern `{other}`"))),
        }
    }
}

/// Gain of a first-order pattern at polar angle `theta` off the look axis.
pub fn directivity_gain(pattern: DirectivityPattern, theta: f64) -> f64 {
    let a = pattern.coefficient();
    a + (1.0 - a) * theta.cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub position: Vec3,
    pub look_azimuth: f64,
    pub look_elevation: f64,
    pub pattern: DirectivityPattern,
}

impl Source {
    pub fn look_direction(&self) -> Vec3 {
        Vec3::from_angles(self.look_azimuth, self.look_elevation)
    }
}

/// Direction of a point as seen from a source's look frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeDirection {
    pub azimuth: f64,
    pub elevation: f64,
    /// Angle between look axis and the direction to the point.
    pub polar: f64,
}

/// Decomposes the direction from `source` to `target` into azimuth/elevation
/// relative to the source's look frame, plus the polar angle off-axis.
///
/// `cos(polar) == cos(elevation) * cos(azimuth)` holds for the returned values.
pub fn angle_between(source: &Source, target: Vec3) -> Result<RelativeDirection> {
    relative_direction(source.look_azimuth, source.look_elevation, target - source.position)
}

pub(crate) fn relative_direction(
    look_azimuth: f64,
    look_elevation: f64,
    direction: Vec3,
) -> Result<RelativeDirection> {
    let v = direction.normalized().ok_or_else(|| {
        Error::DegenerateGeometry("target coincides with the source position".into())
    })?;
    let (sa, ca) = look_azimuth.sin_cos();
    let (se, ce) = look_elevation.sin_cos();
    let forward = Vec3::new(ce * ca, ce * sa, se);
    let left = Vec3::new(-sa, ca, 0.0);
    let up = Vec3::new(-se * ca, -se * sa, ce);

    let f = v.dot(forward);
    let l = v.dot(left);
    let u = v.dot(up).clamp(-1.0, 1.0);
    Ok(RelativeDirection {
        azimuth: l.atan2(f),
        elevation: u.asin(),
        polar: f.clamp(-1.0, 1.0).acos(),
    })
}

/// Two-element microphone array. The array axis lies in the horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicPair {
    pub positions: [Vec3; 2],
    /// Azimuth of the axis pointing from mic 0 to mic 1 (radians).
    pub orientation: f64,
    pub spacing: f64,
}

impl MicPair {
    /// Places the pair symmetrically around `center`.
    pub fn centered(center: Vec3, orientation: f64, spacing: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::param("mics.spacing", "must be positive"));
        }
        let axis = Vec3::from_angles(orientation, 0.0) * (0.5 * spacing);
        Ok(MicPair {
            positions: [center - axis, center + axis],
            orientation,
            spacing,
        })
    }

    pub fn center(&self) -> Vec3 {
        (self.positions[0] + self.positions[1]) * 0.5
    }

    pub fn validate(&self) -> Result<()> {
        let actual = self.positions[0].distance(self.positions[1]);
        if (actual - self.spacing).abs() > GEOMETRY_TOL {
            return Err(Error::DegenerateGeometry(format!(
                "microphone spacing {actual} m differs from configured {} m",
                self.spacing
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub room: Room,
    pub source: Source,
    pub mics: MicPair,
    /// Source to microphone-pair center distance.
    pub distance: f64,
}

impl Scene {
    pub fn new(room: Room, source: Source, mics: MicPair) -> Result<Self> {
        let distance = source.position.distance(mics.center());
        let scene = Scene {
            room,
            source,
            mics,
            distance,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        self.room.validate()?;
        self.mics.validate()?;
        if !self.room.contains_strictly(self.source.position) {
            return Err(Error::OutsideRoom {
                what: "source",
                position: self.source.position.0,
            });
        }
        for (i, p) in self.mics.positions.iter().enumerate() {
            if !self.room.contains_strictly(*p) {
                return Err(Error::OutsideRoom {
                    what: if i == 0 { "microphone 0" } else { "microphone 1" },
                    position: p.0,
                });
            }
        }
        let recomputed = self.source.position.distance(self.mics.center());
        if (recomputed - self.distance).abs() > GEOMETRY_TOL {
            return Err(Error::DegenerateGeometry(format!(
                "stored distance {} m disagrees with geometry {recomputed} m",
                self.distance
            )));
        }
        if recomputed <= 0.0 {
            return Err(Error::DegenerateGeometry(
                "source sits on the array center".into(),
            ));
        }
        Ok(())
    }

    pub fn mic_distance(&self, mic: usize) -> f64 {
        self.source.position.distance(self.mics.positions[mic])
    }
}
