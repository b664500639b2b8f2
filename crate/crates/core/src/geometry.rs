//! Placement geometry for transmitters, receivers, and IRS panels.
//!
//! Positions live in a right-handed Cartesian frame with the ground in the
//! `z = 0` plane. Panels are rectangular element grids, horizontal by
//! default (normal along `+z`), with a configurable in-plane basis for
//! tilted deployments. Angles follow the usual spherical convention for a
//! horizontal surface: elevation is measured from the panel normal, azimuth
//! in the `x`-`y` plane from the `+x` axis.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from geometric construction or queries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    /// Two points that must be distinct coincide.
    #[error("coincident points: link of zero length at ({0}, {1}, {2})")]
    CoincidentPoints(f64, f64, f64),
    /// A panel dimension or element size is not strictly positive.
    #[error("invalid panel: {0}")]
    InvalidPanel(String),
    /// A length argument that must be strictly positive is not.
    #[error("non-positive length: {name} = {value}")]
    NonPositiveLength { name: &'static str, value: f64 },
}

/// A point in 3-D space, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Euclidean distance to another point.
    #[inline]
    pub fn distance_to(&self, other: &Point3) -> f64 {
        distance(*self, *other)
    }
}

/// Euclidean distance between two points, in meters.
#[inline]
pub fn distance(a: Point3, b: Point3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Elevation/azimuth pair describing how a link leaves or reaches an
/// element, in radians.
///
/// `elevation` is the angle between the link and the vertical axis
/// (`0` means boresight, straight above the element); `azimuth` is measured
/// in the horizontal plane from `+x`, normalized to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkAngles {
    pub elevation: f64,
    pub azimuth: f64,
}

/// Angles of the link from `endpoint` as seen at `element`.
///
/// ```text
/// cos ψ = (z_endpoint − z_element) / d,   φ = atan2(Δy, Δx) ∈ [0, 2π)
/// ```
///
/// Errors if the two points coincide.
pub fn link_angles(endpoint: Point3, element: Point3) -> Result<LinkAngles, GeometryError> {
    let d = distance(endpoint, element);
    if d == 0.0 {
        return Err(GeometryError::CoincidentPoints(endpoint.x, endpoint.y, endpoint.z));
    }
    let cos_elev = ((endpoint.z - element.z) / d).clamp(-1.0, 1.0);
    let mut azimuth = (endpoint.y - element.y).atan2(endpoint.x - element.x);
    if azimuth < 0.0 {
        azimuth += 2.0 * std::f64::consts::PI;
    }
    Ok(LinkAngles { elevation: cos_elev.acos(), azimuth })
}

/// A rectangular IRS panel: a centered grid of `elements_x × elements_y`
/// square elements of side `element_side` meters, spanned by two
/// orthonormal in-plane axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrsPanel {
    pub center: Point3,
    pub elements_x: usize,
    pub elements_y: usize,
    pub element_side: f64,
    axis_u: [f64; 3],
    axis_v: [f64; 3],
}

impl IrsPanel {
    /// A horizontal panel (normal along `+z`), the default deployment.
    pub fn horizontal(
        center: Point3,
        elements_x: usize,
        elements_y: usize,
        element_side: f64,
    ) -> Result<Self, GeometryError> {
        Self::with_axes(center, elements_x, elements_y, element_side, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    }

    /// A panel with an explicit in-plane basis, for tilted deployments.
    /// The two axes must be unit-length and mutually orthogonal.
    pub fn with_axes(
        center: Point3,
        elements_x: usize,
        elements_y: usize,
        element_side: f64,
        axis_u: [f64; 3],
        axis_v: [f64; 3],
    ) -> Result<Self, GeometryError> {
        if elements_x == 0 || elements_y == 0 {
            return Err(GeometryError::InvalidPanel(format!(
                "element grid must be non-empty, got {elements_x} x {elements_y}"
            )));
        }
        if !(element_side > 0.0) || !element_side.is_finite() {
            return Err(GeometryError::InvalidPanel(format!(
                "element side must be positive and finite, got {element_side}"
            )));
        }
        const TOL: f64 = 1e-9;
        if (norm(axis_u) - 1.0).abs() > TOL || (norm(axis_v) - 1.0).abs() > TOL {
            return Err(GeometryError::InvalidPanel("panel axes must be unit length".into()));
        }
        if dot(axis_u, axis_v).abs() > TOL {
            return Err(GeometryError::InvalidPanel("panel axes must be orthogonal".into()));
        }
        Ok(Self { center, elements_x, elements_y, element_side, axis_u, axis_v })
    }

    /// Total number of elements `M`.
    #[inline]
    pub fn num_elements(&self) -> usize {
        self.elements_x * self.elements_y
    }

    /// Center position of element `m`, with `m = iy · elements_x + ix`
    /// (the `x` index varies fastest).
    pub fn element_position(&self, m: usize) -> Point3 {
        debug_assert!(m < self.num_elements());
        let ix = (m % self.elements_x) as f64;
        let iy = (m / self.elements_x) as f64;
        let du = (ix - (self.elements_x as f64 - 1.0) / 2.0) * self.element_side;
        let dv = (iy - (self.elements_y as f64 - 1.0) / 2.0) * self.element_side;
        Point3::new(
            self.center.x + du * self.axis_u[0] + dv * self.axis_v[0],
            self.center.y + du * self.axis_u[1] + dv * self.axis_v[1],
            self.center.z + du * self.axis_u[2] + dv * self.axis_v[2],
        )
    }

    /// All element centers in index order.
    pub fn element_grid(&self) -> Vec<Point3> {
        (0..self.num_elements()).map(|m| self.element_position(m)).collect()
    }

    /// Physical panel size `(elements_x · side, elements_y · side)` in meters.
    #[inline]
    pub fn physical_size(&self) -> (f64, f64) {
        (self.elements_x as f64 * self.element_side, self.elements_y as f64 * self.element_side)
    }

    /// Extent of the grid of element centers,
    /// `((elements_x − 1) · side, (elements_y − 1) · side)`.
    #[inline]
    pub fn grid_extent(&self) -> (f64, f64) {
        (
            (self.elements_x as f64 - 1.0) * self.element_side,
            (self.elements_y as f64 - 1.0) * self.element_side,
        )
    }

    /// Largest physical dimension, used as the aperture `D` for field-region
    /// classification.
    #[inline]
    pub fn aperture(&self) -> f64 {
        let (sx, sy) = self.physical_size();
        sx.max(sy)
    }
}

/// Rayleigh distance `d_ray = 2 D² / λ` separating the radiating near field
/// from the far field of an aperture of size `D`.
pub fn rayleigh_distance(aperture: f64, wavelength: f64) -> Result<f64, GeometryError> {
    if !(aperture > 0.0) {
        return Err(GeometryError::NonPositiveLength { name: "aperture", value: aperture });
    }
    if !(wavelength > 0.0) {
        return Err(GeometryError::NonPositiveLength { name: "wavelength", value: wavelength });
    }
    Ok(2.0 * aperture * aperture / wavelength)
}

/// Field region of a link of length `d` relative to a Rayleigh distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRegion {
    Near,
    Far,
}

/// `Near` iff `d < d_ray`; the boundary itself counts as far field.
#[inline]
pub fn field_region(d: f64, d_ray: f64) -> FieldRegion {
    if d < d_ray {
        FieldRegion::Near
    } else {
        FieldRegion::Far
    }
}

/// Node and panel placement of one network instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub transmitters: Vec<Point3>,
    pub receivers: Vec<Point3>,
    pub panels: Vec<IrsPanel>,
}

impl Topology {
    pub fn num_transmitters(&self) -> usize {
        self.transmitters.len()
    }

    pub fn num_receivers(&self) -> usize {
        self.receivers.len()
    }

    pub fn num_panels(&self) -> usize {
        self.panels.len()
    }
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn distance_345_triangle() {
        let a = Point3::new(0.0, 0.0, 0.0);
        let b = Point3::new(3.0, 4.0, 0.0);
        assert_eq!(distance(a, b), 5.0);
        assert_eq!(a.distance_to(&b), b.distance_to(&a));
    }

    #[test]
    fn distance_is_a_metric() {
        let pts = [
            Point3::new(0.3, -1.2, 4.0),
            Point3::new(2.0, 0.0, 1.0),
            Point3::new(-5.0, 2.5, 0.7),
        ];
        for a in pts {
            assert_eq!(distance(a, a), 0.0);
            for b in pts {
                assert_eq!(distance(a, b), distance(b, a));
                for c in pts {
                    assert!(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn angles_directly_above_element_are_boresight() {
        let elem = Point3::new(1.0, 2.0, 0.0);
        let above = Point3::new(1.0, 2.0, 3.0);
        let angles = link_angles(above, elem).unwrap();
        assert_eq!(angles.elevation, 0.0);
    }

    #[test]
    fn angles_known_diagonal() {
        // Endpoint offset by (1, 1, √2): elevation 45°, azimuth 45°.
        let elem = Point3::new(0.0, 0.0, 0.0);
        let from = Point3::new(1.0, 1.0, std::f64::consts::SQRT_2);
        let angles = link_angles(from, elem).unwrap();
        assert_relative_eq!(angles.elevation, std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
        assert_relative_eq!(angles.azimuth, std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn azimuth_normalized_to_positive_range() {
        let elem = Point3::new(0.0, 0.0, 0.0);
        let from = Point3::new(1.0, -1.0, 0.5);
        let angles = link_angles(from, elem).unwrap();
        assert!(angles.azimuth >= 0.0 && angles.azimuth < 2.0 * std::f64::consts::PI);
        assert_relative_eq!(angles.azimuth, 7.0 * std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn coincident_points_rejected() {
        let p = Point3::new(1.0, 1.0, 1.0);
        assert!(matches!(link_angles(p, p), Err(GeometryError::CoincidentPoints(..))));
    }

    #[test]
    fn element_grid_is_centered_with_exact_extent() {
        let panel =
            IrsPanel::horizontal(Point3::new(5.0, -2.0, 3.0), 6, 4, 0.25).unwrap();
        let grid = panel.element_grid();
        assert_eq!(grid.len(), 24);
        let mean = grid.iter().fold([0.0; 3], |acc, p| {
            [acc[0] + p.x / 24.0, acc[1] + p.y / 24.0, acc[2] + p.z / 24.0]
        });
        assert_relative_eq!(mean[0], 5.0, epsilon = 1e-12);
        assert_relative_eq!(mean[1], -2.0, epsilon = 1e-12);
        assert_relative_eq!(mean[2], 3.0, epsilon = 1e-12);

        let (ex, ey) = panel.grid_extent();
        let min_x = grid.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
        let max_x = grid.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        let min_y = grid.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let max_y = grid.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(max_x - min_x, ex);
        assert_eq!(max_y - min_y, ey);
        assert_eq!((ex, ey), (0.25 * 5.0, 0.25 * 3.0));
    }

    #[test]
    fn physical_size_of_reference_panel() {
        // 100 x 100 elements of side 0.4λ at λ = 1 mm span a 4 cm square.
        let side = 0.4 * 0.001;
        let panel = IrsPanel::horizontal(Point3::new(0.0, 0.0, 2.0), 100, 100, side).unwrap();
        let (sx, sy) = panel.physical_size();
        assert_relative_eq!(sx, 0.04, epsilon = 1e-15);
        assert_relative_eq!(sy, 0.04, epsilon = 1e-15);
        assert_eq!(panel.num_elements(), 10_000);
    }

    #[test]
    fn element_index_convention_x_fastest() {
        let panel = IrsPanel::horizontal(Point3::new(0.0, 0.0, 0.0), 3, 2, 1.0).unwrap();
        let p0 = panel.element_position(0);
        let p1 = panel.element_position(1);
        let p3 = panel.element_position(3);
        assert_eq!(p1.x - p0.x, 1.0);
        assert_eq!(p1.y, p0.y);
        assert_eq!(p3.y - p0.y, 1.0);
        assert_eq!(p3.x, p0.x);
    }

    #[test]
    fn tilted_panel_keeps_grid_shape() {
        // Vertical panel in the x-z plane.
        let panel = IrsPanel::with_axes(
            Point3::new(0.0, 0.0, 2.0),
            4,
            4,
            0.5,
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
        )
        .unwrap();
        for p in panel.element_grid() {
            assert_eq!(p.y, 0.0);
        }
    }

    #[test]
    fn bad_panels_rejected() {
        let c = Point3::new(0.0, 0.0, 0.0);
        assert!(IrsPanel::horizontal(c, 0, 4, 0.1).is_err());
        assert!(IrsPanel::horizontal(c, 4, 4, 0.0).is_err());
        assert!(IrsPanel::horizontal(c, 4, 4, -1.0).is_err());
        assert!(IrsPanel::with_axes(c, 2, 2, 0.1, [2.0, 0.0, 0.0], [0.0, 1.0, 0.0]).is_err());
        assert!(IrsPanel::with_axes(c, 2, 2, 0.1, [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn rayleigh_distance_reference_panels() {
        // Square panels of 0.4 mm elements: 30² / 50² / 100² elements give
        // apertures 12 / 20 / 40 mm and Rayleigh distances 0.288 / 0.8 / 3.2 m.
        let lambda = 0.001;
        let side = 0.4 * lambda;
        for (m_side, expect_aperture, expect_dray) in
            [(30, 0.012, 0.288), (50, 0.02, 0.8), (100, 0.04, 3.2)]
        {
            let panel =
                IrsPanel::horizontal(Point3::new(0.0, 0.0, 1.0), m_side, m_side, side).unwrap();
            assert_relative_eq!(panel.aperture(), expect_aperture, epsilon = 1e-15);
            let dray = rayleigh_distance(panel.aperture(), lambda).unwrap();
            assert_relative_eq!(dray, expect_dray, epsilon = 1e-12);
        }
    }

    #[test]
    fn rayleigh_distance_rejects_non_positive() {
        assert!(rayleigh_distance(0.0, 0.001).is_err());
        assert!(rayleigh_distance(0.04, 0.0).is_err());
        assert!(rayleigh_distance(-1.0, 0.001).is_err());
    }

    #[test]
    fn field_region_boundary_is_far() {
        assert_eq!(field_region(3.1, 3.2), FieldRegion::Near);
        assert_eq!(field_region(3.2, 3.2), FieldRegion::Far);
        assert_eq!(field_region(10.0, 3.2), FieldRegion::Far);
    }
}
