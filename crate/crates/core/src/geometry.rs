//! Fresnel-zone geometry for a transmitter/receiver antenna pair.
//!
//! The n-th Fresnel zone is the ellipsoid with foci at the two antennas on
//! which the reflected path exceeds the direct path by n*lambda/2. Everything
//! here reduces to that excess path length: the continuous zone coordinate,
//! the zone radius at a point along the line of sight, how much a small body
//! motion changes the reflected path, and a placement score for ranking
//! candidate antenna positions.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default carrier wavelength in meters (5.32 GHz WiFi channel).
pub const DEFAULT_WAVELENGTH_M: f64 = 0.05635;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("coordinates must be finite")]
    NonFinite,
    #[error("wavelength must be positive, got {0}")]
    InvalidWavelength(f64),
    #[error("tx and rx positions must not coincide")]
    CoincidentAntennas,
    #[error("motion direction must be a unit vector, |v| = {0}")]
    NotUnitDirection(f64),
    #[error("motion amplitude must be non-negative, got {0}")]
    NegativeAmplitude(f64),
    #[error("fraction along the LOS must lie strictly inside (0, 1), got {0}")]
    FractionOutOfRange(f64),
    #[error("point coincides with an antenna, path gradient is singular")]
    SingularGradient,
}

/// A position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn sub(&self, other: &Point3) -> Point3 {
        Point3::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn add(&self, other: &Point3) -> Point3 {
        Point3::new(self.x + other.x, self.y + other.y, self.z + other.z)
    }

    pub fn scaled(&self, k: f64) -> Point3 {
        Point3::new(self.x * k, self.y * k, self.z * k)
    }

    pub fn dot(&self, other: &Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Point3> {
        let n = self.norm();
        (n > 0.0).then(|| self.scaled(1.0 / n))
    }

    pub fn cross(&self, other: &Point3) -> Point3 {
        Point3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }
}

/// Transmit/receive antenna pair with the carrier wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaPair {
    pub tx: Point3,
    pub rx: Point3,
    pub wavelength: f64,
}

impl AntennaPair {
    pub fn new(tx: Point3, rx: Point3, wavelength: f64) -> Result<Self, GeometryError> {
        if !tx.is_finite() || !rx.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if !(wavelength > 0.0) || !wavelength.is_finite() {
            return Err(GeometryError::InvalidWavelength(wavelength));
        }
        if rx.sub(&tx).norm() == 0.0 {
            return Err(GeometryError::CoincidentAntennas);
        }
        Ok(Self { tx, rx, wavelength })
    }

    /// Direct Tx-Rx distance in meters.
    pub fn los_distance(&self) -> f64 {
        self.rx.sub(&self.tx).norm()
    }
}

/// A direction of body motion with its peak amplitude in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionVector {
    pub direction: Point3,
    pub amplitude: f64,
}

impl MotionVector {
    /// Direction must already be a unit vector (to 1e-9).
    pub fn new(direction: Point3, amplitude: f64) -> Result<Self, GeometryError> {
        if !direction.is_finite() || !amplitude.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let n = direction.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(GeometryError::NotUnitDirection(n));
        }
        if amplitude < 0.0 {
            return Err(GeometryError::NegativeAmplitude(amplitude));
        }
        Ok(Self {
            direction,
            amplitude,
        })
    }

    /// Normalizes an arbitrary non-zero direction.
    pub fn along(direction: Point3, amplitude: f64) -> Result<Self, GeometryError> {
        let unit = direction.normalized().ok_or(GeometryError::NonFinite)?;
        Self::new(unit, amplitude)
    }
}

/// Excess of the reflected path over the direct path: |TxQ| + |QRx| - |TxRx|.
///
/// Non-negative by the triangle inequality; zero exactly when `q` lies on the
/// closed Tx-Rx segment.
pub fn path_delta(pair: &AntennaPair, q: &Point3) -> f64 {
    let d_tx = q.sub(&pair.tx).norm();
    let d_rx = q.sub(&pair.rx).norm();
    (d_tx + d_rx - pair.los_distance()).max(0.0)
}

/// Continuous Fresnel-zone coordinate: n = 2 * path_delta / lambda.
///
/// Boundary points of the integer zone n map to exactly n; the interior of
/// zone n maps to (n-1, n).
pub fn zone_index(pair: &AntennaPair, q: &Point3) -> f64 {
    2.0 * path_delta(pair, q) / pair.wavelength
}

/// Radius of the first Fresnel zone at fraction `s` along the line of sight,
/// solved by bisection on the zone coordinate.
pub fn first_zone_radius_at(pair: &AntennaPair, s: f64) -> Result<f64, GeometryError> {
    if !(s > 0.0 && s < 1.0) {
        return Err(GeometryError::FractionOutOfRange(s));
    }
    let axis = pair.rx.sub(&pair.tx);
    let base = pair.tx.add(&axis.scaled(s));
    let perp = perpendicular_unit(&axis);

    let f = |r: f64| zone_index(pair, &base.add(&perp.scaled(r))) - 1.0;

    // Bracket the boundary, then bisect. zone_index grows monotonically with
    // the perpendicular offset, so a sign change is guaranteed.
    let mut lo = 0.0;
    let mut hi = pair.wavelength.max(pair.los_distance());
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Change in reflected path length per excursion of the given motion,
/// |grad path_delta . direction| * amplitude, in meters.
///
/// The gradient of |TxQ| + |QRx| at `q` is the sum of the two unit vectors
/// pointing away from the antennas, so the result lies in [0, 2*amplitude]
/// and is maximal when the motion is along the ellipsoid normal.
pub fn effective_displacement(
    pair: &AntennaPair,
    q: &Point3,
    motion: &MotionVector,
) -> Result<f64, GeometryError> {
    let grad = path_delta_gradient(pair, q)?;
    Ok(grad.dot(&motion.direction).abs() * motion.amplitude)
}

/// Gradient of `path_delta` with respect to the reflection point.
pub fn path_delta_gradient(pair: &AntennaPair, q: &Point3) -> Result<Point3, GeometryError> {
    let from_tx = q.sub(&pair.tx);
    let from_rx = q.sub(&pair.rx);
    let u_tx = from_tx
        .normalized()
        .ok_or(GeometryError::SingularGradient)?;
    let u_rx = from_rx
        .normalized()
        .ok_or(GeometryError::SingularGradient)?;
    Ok(u_tx.add(&u_rx))
}

/// Detectability score for a candidate antenna placement: the effective
/// displacement weighted by how close the body sits to the middle of a
/// Fresnel zone. Zone boundaries score zero, zone centers score full weight.
pub fn placement_score(
    pair: &AntennaPair,
    body_point: &Point3,
    motion: &MotionVector,
) -> Result<f64, GeometryError> {
    let eff = effective_displacement(pair, body_point, motion)?;
    Ok(eff * zone_parity_factor(zone_index(pair, body_point)))
}

/// Smooth weighting in [0, 1]: 1 at zone centers (n - 0.5), 0 at boundaries.
pub fn zone_parity_factor(zone_index: f64) -> f64 {
    (PI * (zone_index - 0.5)).cos().powi(2)
}

/// Any unit vector perpendicular to `axis` (the zone radius is rotation
/// invariant around the LOS, so the choice does not matter).
fn perpendicular_unit(axis: &Point3) -> Point3 {
    let trial = if axis.x.abs() <= axis.y.abs() && axis.x.abs() <= axis.z.abs() {
        Point3::new(1.0, 0.0, 0.0)
    } else if axis.y.abs() <= axis.z.abs() {
        Point3::new(0.0, 1.0, 0.0)
    } else {
        Point3::new(0.0, 0.0, 1.0)
    };
    axis.cross(&trial)
        .normalized()
        .expect("axis is non-zero and trial is not parallel to it")
}
