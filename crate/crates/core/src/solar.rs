//! Sun position, sky-direction discretization, and plane-of-array irradiance.
//!
//! The sun position uses the Astronomical Almanac low-precision formulas
//! (declination/hour-angle formulation), good to about ±0.5° for years
//! 1950–2050 — ample for shading-mask bin lookup on a 5°×9° grid.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// Sun (or sky sample) direction: azimuth clockwise from north in [0, 360),
/// altitude above the horizon in [-90, 90].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SunDirection {
    pub azimuth_deg: f64,
    pub altitude_deg: f64,
}

impl SunDirection {
    pub fn new(azimuth_deg: f64, altitude_deg: f64) -> Self {
        let az = azimuth_deg.rem_euclid(360.0);
        SunDirection { azimuth_deg: az, altitude_deg: altitude_deg.clamp(-90.0, 90.0) }
    }

    /// Unit vector in local coordinates: x east, y north, z up.
    pub fn unit_vector(&self) -> [f64; 3] {
        let az = self.azimuth_deg.to_radians();
        let alt = self.altitude_deg.to_radians();
        [alt.cos() * az.sin(), alt.cos() * az.cos(), alt.sin()]
    }
}

/// Days since the J2000 epoch (2000-01-01 12:00 UTC), fractional.
fn days_since_j2000(t: DateTime<Utc>) -> f64 {
    const J2000_UNIX: f64 = 946_728_000.0;
    (t.timestamp() as f64 + f64::from(t.timestamp_subsec_millis()) / 1e3 - J2000_UNIX) / 86_400.0
}

/// Low-precision solar position (Astronomical Almanac formulation).
pub fn sun_position(lat_deg: f64, lon_deg: f64, t: DateTime<Utc>) -> SunDirection {
    debug_assert!(lat_deg.abs() <= 90.0);
    let n = days_since_j2000(t);

    // Ecliptic position of the sun.
    let mean_longitude = (280.460 + 0.9856474 * n).rem_euclid(360.0);
    let mean_anomaly = (357.528 + 0.9856003 * n).rem_euclid(360.0).to_radians();
    let ecliptic_longitude = (mean_longitude
        + 1.915 * mean_anomaly.sin()
        + 0.020 * (2.0 * mean_anomaly).sin())
    .to_radians();
    let obliquity = (23.439 - 0.0000004 * n).to_radians();

    // Equatorial coordinates.
    let right_ascension = (obliquity.cos() * ecliptic_longitude.sin())
        .atan2(ecliptic_longitude.cos())
        .to_degrees();
    let declination = (obliquity.sin() * ecliptic_longitude.sin()).asin();

    // Local hour angle via Greenwich mean sidereal time.
    let gmst = (280.46061837 + 360.98564736629 * n).rem_euclid(360.0);
    let hour_angle = (gmst + lon_deg - right_ascension).rem_euclid(360.0).to_radians();

    let phi = lat_deg.to_radians();
    let sin_alt = phi.sin() * declination.sin()
        + phi.cos() * declination.cos() * hour_angle.cos();
    let altitude = sin_alt.clamp(-1.0, 1.0).asin().to_degrees();
    let azimuth = (-declination.cos() * hour_angle.sin())
        .atan2(declination.sin() * phi.cos() - declination.cos() * phi.sin() * hour_angle.cos())
        .to_degrees();
    SunDirection::new(azimuth, altitude)
}

/// Regular sky grid over azimuth [0, 360) × altitude [0, 90].
///
/// The default 72 × 10 grid (5° × 9° bins) balances mask size against angular
/// fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkyGrid {
    pub n_az: usize,
    pub n_alt: usize,
}

impl Default for SkyGrid {
    fn default() -> Self {
        SkyGrid { n_az: 72, n_alt: 10 }
    }
}

impl SkyGrid {
    pub fn new(n_az: usize, n_alt: usize) -> Self {
        assert!(n_az >= 4 && n_alt >= 2, "sky grid must be at least 4x2");
        SkyGrid { n_az, n_alt }
    }

    pub fn n_bins(&self) -> usize {
        self.n_az * self.n_alt
    }

    /// Bin containing an above-horizon direction; `None` below the horizon.
    pub fn bin_of(&self, dir: SunDirection) -> Option<(usize, usize)> {
        if dir.altitude_deg < 0.0 {
            return None;
        }
        let ia = ((dir.azimuth_deg / 360.0 * self.n_az as f64) as usize).min(self.n_az - 1);
        let ja = ((dir.altitude_deg / 90.0 * self.n_alt as f64) as usize).min(self.n_alt - 1);
        Some((ia, ja))
    }

    pub fn bin_center(&self, az_bin: usize, alt_bin: usize) -> SunDirection {
        SunDirection::new(
            (az_bin as f64 + 0.5) * 360.0 / self.n_az as f64,
            (alt_bin as f64 + 0.5) * 90.0 / self.n_alt as f64,
        )
    }

    /// Azimuth/altitude extent of a bin in degrees: (az0, az1, alt0, alt1).
    pub fn bin_bounds(&self, az_bin: usize, alt_bin: usize) -> (f64, f64, f64, f64) {
        let daz = 360.0 / self.n_az as f64;
        let dalt = 90.0 / self.n_alt as f64;
        (
            az_bin as f64 * daz,
            (az_bin + 1) as f64 * daz,
            alt_bin as f64 * dalt,
            (alt_bin + 1) as f64 * dalt,
        )
    }

    /// Solid angle of one altitude row's bins, steradians.
    pub fn bin_solid_angle(&self, alt_bin: usize) -> f64 {
        let (_, _, alt0, alt1) = self.bin_bounds(0, alt_bin);
        let daz = 2.0 * std::f64::consts::PI / self.n_az as f64;
        daz * (alt1.to_radians().sin() - alt0.to_radians().sin())
    }
}

/// Plane-of-array irradiance in W/m².
///
/// Direct beam times the incidence cosine, attenuated by the blocked
/// fraction; isotropic diffuse scaled by the sky-view factor. The direct term
/// vanishes below the horizon.
pub fn face_irradiance(
    normal: [f64; 3],
    sun: SunDirection,
    dni: f64,
    dhi: f64,
    blocked: f64,
    sky_view: f64,
) -> f64 {
    debug_assert!((0.0..=1.0).contains(&blocked) && (0.0..=1.0).contains(&sky_view));
    debug_assert!(dni >= 0.0 && dhi >= 0.0);
    let direct = if sun.altitude_deg < 0.0 {
        0.0
    } else {
        let v = sun.unit_vector();
        let cos_incidence = v[0] * normal[0] + v[1] * normal[1] + v[2] * normal[2];
        dni * cos_incidence.max(0.0) * (1.0 - blocked)
    };
    direct + dhi * sky_view
}
