//! Uniform linear array geometry and near-/far-field array responses.
//!
//! The array is centered at the origin: element `n` of an `N`-element ULA
//! sits at `delta_n = (n - (N-1)/2) * spacing` along the array axis, so the
//! element offsets sum to zero. Angles are measured from broadside.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Which propagation model produced a response vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTag {
    FarField,
    NearFieldPhaseOnly,
    NearFieldAmplitudeAware,
}

/// Uniform linear array: element count, spacing and carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    num_elements: usize,
    spacing: f64,
    carrier_freq: f64,
}

impl ArrayGeometry {
    pub fn new(num_elements: usize, spacing: f64, carrier_freq: f64) -> Result<Self> {
        if num_elements < 1 {
            return Err(Error::InvalidGeometry("num_elements must be >= 1".into()));
        }
        if !(spacing > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "spacing must be > 0, got {spacing}"
            )));
        }
        if !(carrier_freq > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "carrier_freq must be > 0, got {carrier_freq}"
            )));
        }
        Ok(Self {
            num_elements,
            spacing,
            carrier_freq,
        })
    }

    /// Half-wavelength spaced ULA at the given carrier.
    pub fn half_wavelength(num_elements: usize, carrier_freq: f64) -> Result<Self> {
        let wavelength = SPEED_OF_LIGHT / carrier_freq;
        Self::new(num_elements, wavelength / 2.0, carrier_freq)
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn carrier_freq(&self) -> f64 {
        self.carrier_freq
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// Aperture D = (N-1) * spacing.
    pub fn aperture(&self) -> f64 {
        (self.num_elements as f64 - 1.0) * self.spacing
    }

    /// Signed offset of element `n` from the array center.
    pub fn element_offset(&self, n: usize) -> f64 {
        (n as f64 - (self.num_elements as f64 - 1.0) / 2.0) * self.spacing
    }

    pub fn element_offsets(&self) -> Vec<f64> {
        (0..self.num_elements).map(|n| self.element_offset(n)).collect()
    }
}

/// (angle, range) location in the array's polar frame.
///
/// Angle is measured from broadside and must lie in (-pi/2, pi/2]; range is
/// the distance from the array center in meters. An infinite range denotes a
/// far-field direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    angle: f64,
    range: f64,
}

impl PolarPoint {
    pub fn new(angle: f64, range: f64) -> Result<Self> {
        if !(angle > -PI / 2.0 && angle <= PI / 2.0) {
            return Err(Error::InvalidLocation(format!(
                "angle {angle} rad outside (-pi/2, pi/2]"
            )));
        }
        if !(range > 0.0) {
            return Err(Error::InvalidLocation(format!("range {range} m must be > 0")));
        }
        Ok(Self { angle, range })
    }

    pub fn from_degrees(angle_deg: f64, range: f64) -> Result<Self> {
        Self::new(angle_deg.to_radians(), range)
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn range(&self) -> f64 {
        self.range
    }
}

/// Per-element complex array response, unit Euclidean norm.
#[derive(Debug, Clone)]
pub struct ResponseVector {
    pub entries: DVector<Complex64>,
    pub model_tag: ModelTag,
}

impl ResponseVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Rayleigh distance 2 D^2 / lambda, the conventional near/far boundary.
pub fn rayleigh_distance(geom: &ArrayGeometry) -> f64 {
    let d = geom.aperture();
    2.0 * d * d / geom.wavelength()
}

/// Euclidean distance from element `element_index` to the point:
/// r_n = sqrt(r^2 + delta^2 - 2 r delta sin(theta)).
pub fn exact_distance(geom: &ArrayGeometry, element_index: usize, p: &PolarPoint) -> Result<f64> {
    if element_index >= geom.num_elements() {
        return Err(Error::InvalidArgument(format!(
            "element_index {element_index} out of range for {}-element array",
            geom.num_elements()
        )));
    }
    let delta = geom.element_offset(element_index);
    Ok(element_distance(delta, p))
}

#[inline]
fn element_distance(delta: f64, p: &PolarPoint) -> f64 {
    // hypot form is well conditioned for r >> delta.
    (p.range() - delta * p.angle().sin()).hypot(delta * p.angle().cos())
}

/// Center-referenced excess distance r_n - r, computed without cancellation.
#[inline]
fn excess_distance(delta: f64, p: &PolarPoint) -> f64 {
    let r = p.range();
    let rn = element_distance(delta, p);
    (delta * delta - 2.0 * r * delta * p.angle().sin()) / (rn + r)
}

/// Plane-wave steering vector.
///
/// Entry n carries the propagation phase exp(-j 2 pi d_n / lambda) of the
/// planar excess distance d_n = -delta_n sin(theta), the large-range limit
/// of the center-referenced spherical excess distance. Scaled by 1/sqrt(N).
pub fn farfield_steering(geom: &ArrayGeometry, angle: f64) -> Result<ResponseVector> {
    if !(angle > -PI / 2.0 && angle <= PI / 2.0) {
        return Err(Error::InvalidLocation(format!(
            "angle {angle} rad outside (-pi/2, pi/2]"
        )));
    }
    let n = geom.num_elements();
    let scale = 1.0 / (n as f64).sqrt();
    let k = 2.0 * PI / geom.wavelength();
    let s = angle.sin();
    let entries = DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let phase = k * geom.element_offset(i) * s;
            Complex64::from_polar(scale, phase)
        }),
    );
    Ok(ResponseVector {
        entries,
        model_tag: ModelTag::FarField,
    })
}

/// Spherical-wave focusing vector at a point, phases referenced to the array
/// center (entry n carries exp(-j 2 pi (r_n - r) / lambda)).
///
/// With `amplitude_aware` each element is additionally weighted by the
/// spherical spreading ratio r / r_n before unit normalization.
pub fn nearfield_focusing(
    geom: &ArrayGeometry,
    p: &PolarPoint,
    amplitude_aware: bool,
) -> Result<ResponseVector> {
    if p.range() <= geom.aperture() / 2.0 {
        return Err(Error::InvalidLocation(format!(
            "range {} m is inside the array segment (aperture/2 = {} m)",
            p.range(),
            geom.aperture() / 2.0
        )));
    }
    let n = geom.num_elements();
    let k = 2.0 * PI / geom.wavelength();
    let mut entries = DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let delta = geom.element_offset(i);
            let phase = -k * excess_distance(delta, p);
            let amp = if amplitude_aware {
                p.range() / element_distance(delta, p)
            } else {
                1.0
            };
            Complex64::from_polar(amp, phase)
        }),
    );
    let norm = entries.norm();
    entries /= Complex64::new(norm, 0.0);
    Ok(ResponseVector {
        entries,
        model_tag: if amplitude_aware {
            ModelTag::NearFieldAmplitudeAware
        } else {
            ModelTag::NearFieldPhaseOnly
        },
    })
}

/// Response for a possibly far-field point: infinite range falls back to the
/// plane-wave steering vector.
pub fn point_response(geom: &ArrayGeometry, angle: f64, range: f64) -> Result<ResponseVector> {
    if range.is_infinite() {
        farfield_steering(geom, angle)
    } else {
        nearfield_focusing(geom, &PolarPoint::new(angle, range)?, false)
    }
}
