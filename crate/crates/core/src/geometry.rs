//! Polygonal target domains.
//!
//! Signed distances are negative inside the polygon. The boundary projection
//! is deterministic: when several boundary points are equally close (medial
//! axis of the polygon), the one on the lowest-indexed edge wins, and on a
//! single edge the closest point is unique.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// Simple counter-clockwise polygon with positive area.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec2>", into = "Vec<Vec2>")]
pub struct Polygon {
    vertices: Vec<Vec2>,
}

impl TryFrom<Vec<Vec2>> for Polygon {
    type Error = Error;

    fn try_from(vertices: Vec<Vec2>) -> Result<Self> {
        Polygon::new(vertices)
    }
}

impl From<Polygon> for Vec<Vec2> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

/// Closest boundary point of a polygon to a query point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub point: Vec2,
    /// Negative inside, zero on the boundary.
    pub signed_distance: f64,
    /// Outward unit vector `h / [[h]]`; zero when the query lies on the boundary.
    pub outward: Vec2,
    pub edge: usize,
}

impl Projection {
    /// The query sat exactly on the boundary, so no outward direction exists.
    pub fn is_degenerate(&self) -> bool {
        self.signed_distance == 0.0
    }
}

impl Polygon {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite vertex".into()));
        }
        let poly = Polygon { vertices };
        let area = poly.signed_area();
        if area <= 0.0 {
            return Err(Error::InvalidPolygon(format!(
                "vertices must be counter-clockwise with positive area (signed area {area})"
            )));
        }
        if let Some((a, b)) = poly.first_self_intersection() {
            return Err(Error::InvalidPolygon(format!(
                "edges {a} and {b} intersect"
            )));
        }
        Ok(poly)
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Polygon::new(vec![
            Vec2::new(x0, y0),
            Vec2::new(x1, y0),
            Vec2::new(x1, y1),
            Vec2::new(x0, y1),
        ])
    }

    /// Equilateral triangle with the given centroid and side, one vertex
    /// pointing along `heading`.
    pub fn equilateral(centroid: Vec2, side: f64, heading: f64) -> Result<Self> {
        let circumradius = side / 3f64.sqrt();
        let vertices = (0..3)
            .map(|k| {
                let a = heading + k as f64 * 2.0 * std::f64::consts::PI / 3.0;
                centroid + Vec2::from_angle(a) * circumradius
            })
            .collect();
        Polygon::new(vertices)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    fn signed_area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| a.cross(b)).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Area centroid.
    pub fn centroid(&self) -> Vec2 {
        let mut c = Vec2::ZERO;
        let mut a2 = 0.0;
        // Shift to the first vertex to keep the sums well conditioned.
        let o = self.vertices[0];
        for (a, b) in self.edges() {
            let (a, b) = (a - o, b - o);
            let w = a.cross(b);
            a2 += w;
            c += (a + b) * w;
        }
        o + c / (3.0 * a2)
    }

    pub fn translated(&self, d: Vec2) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|&v| v + d).collect(),
        }
    }

    /// Rigid rotation by `angle` about `pivot`.
    pub fn rotated_about(&self, pivot: Vec2, angle: f64) -> Polygon {
        Polygon {
            vertices: self
                .vertices
                .iter()
                .map(|&v| pivot + (v - pivot).rotate(angle))
                .collect(),
        }
    }

    /// Even-odd containment test. Boundary points may go either way.
    pub fn contains(&self, p: Vec2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn project(&self, p: Vec2) -> Projection {
        let mut best_edge = 0;
        let mut best_point = self.vertices[0];
        let mut best_d2 = f64::INFINITY;
        for (i, (a, b)) in self.edges().enumerate() {
            let q = closest_on_segment(a, b, p);
            let d2 = (p - q).norm_sq();
            if d2 < best_d2 {
                best_d2 = d2;
                best_point = q;
                best_edge = i;
            }
        }
        let h = p - best_point;
        let dist = h.norm();
        if dist == 0.0 {
            return Projection {
                point: best_point,
                signed_distance: 0.0,
                outward: Vec2::ZERO,
                edge: best_edge,
            };
        }
        let signed_distance = if self.contains(p) { -dist } else { dist };
        Projection {
            point: best_point,
            signed_distance,
            outward: h / signed_distance,
            edge: best_edge,
        }
    }

    pub fn signed_distance(&self, p: Vec2) -> f64 {
        self.project(p).signed_distance
    }

    fn first_self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.vertices.len();
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if adjacent {
                    // Adjacent edges share one vertex; they may only overlap
                    // if they fold back onto each other.
                    let shared_back = (b - a).cross(d - c) == 0.0 && (b - a).dot(d - c) < 0.0;
                    if shared_back {
                        return Some((i, j));
                    }
                } else if segments_intersect(a, b, c, d) {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

fn closest_on_segment(a: Vec2, b: Vec2, p: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    if t == 0.0 {
        a
    } else if t == 1.0 {
        b
    } else {
        a + ab * t
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Rigid-motion law of a target domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Motion {
    Static,
    ConstantVelocity {
        velocity: Vec2,
    },
    /// The centroid travels on a circle about `center`. With
    /// `rotate_with_heading`, the shape also turns so that its initial
    /// orientation relative to the path tangent is kept, which makes the
    /// whole motion a rotation about `center`.
    CircularPath {
        center: Vec2,
        radius: f64,
        angular_velocity: f64,
        #[serde(default = "default_true")]
        rotate_with_heading: bool,
    },
}

fn default_true() -> bool {
    true
}

/// A polygon together with its motion law. Evaluated at `t = 0` it is the
/// base polygon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovingDomain {
    pub vertices: Polygon,
    #[serde(default = "static_motion")]
    pub motion: Motion,
}

fn static_motion() -> Motion {
    Motion::Static
}

impl MovingDomain {
    pub fn new(base: Polygon, motion: Motion) -> Self {
        MovingDomain {
            vertices: base,
            motion,
        }
    }

    pub fn stationary(base: Polygon) -> Self {
        Self::new(base, Motion::Static)
    }

    pub fn base(&self) -> &Polygon {
        &self.vertices
    }

    pub fn validate(&self) -> Result<()> {
        match self.motion {
            Motion::Static => Ok(()),
            Motion::ConstantVelocity { velocity } if velocity.is_finite() => Ok(()),
            Motion::ConstantVelocity { .. } => {
                Err(Error::InvalidParams("domain velocity must be finite".into()))
            }
            Motion::CircularPath {
                center,
                radius,
                angular_velocity,
                ..
            } => {
                if !(center.is_finite() && radius > 0.0 && angular_velocity.is_finite()) {
                    return Err(Error::InvalidParams(
                        "circular path needs finite center, radius > 0 and finite angular velocity"
                            .into(),
                    ));
                }
                Ok(())
            }
        }
    }

    fn path_phase0(&self, center: Vec2) -> f64 {
        let d = self.vertices.centroid() - center;
        d.y.atan2(d.x)
    }

    /// Rigid transform at `t` as (rotation angle, pivot, translation):
    /// `x ↦ pivot + R(angle)(x − pivot) + translation`.
    fn transform(&self, t: f64) -> (f64, Vec2, Vec2) {
        match self.motion {
            Motion::Static => (0.0, Vec2::ZERO, Vec2::ZERO),
            Motion::ConstantVelocity { velocity } => (0.0, Vec2::ZERO, velocity * t),
            Motion::CircularPath {
                center,
                radius,
                angular_velocity,
                rotate_with_heading,
            } => {
                let phase0 = self.path_phase0(center);
                let p0 = center + Vec2::from_angle(phase0) * radius;
                let pt = center + Vec2::from_angle(phase0 + angular_velocity * t) * radius;
                let angle = if rotate_with_heading {
                    angular_velocity * t
                } else {
                    0.0
                };
                (angle, self.vertices.centroid(), pt - p0)
            }
        }
    }

    /// The domain polygon at time `t`.
    pub fn at(&self, t: f64) -> Polygon {
        let (angle, pivot, shift) = self.transform(t);
        let rotated = if angle == 0.0 {
            self.vertices.clone()
        } else {
            self.vertices.rotated_about(pivot, angle)
        };
        if shift == Vec2::ZERO {
            rotated
        } else {
            rotated.translated(shift)
        }
    }

    /// Marker point (centroid) at time `t`.
    pub fn marker_at(&self, t: f64) -> Vec2 {
        let (_, pivot, shift) = self.transform(t);
        pivot + shift
    }

    /// Velocity of the marker point.
    pub fn marker_velocity(&self, t: f64) -> Vec2 {
        match self.motion {
            Motion::Static => Vec2::ZERO,
            Motion::ConstantVelocity { velocity } => velocity,
            Motion::CircularPath {
                center,
                radius,
                angular_velocity,
                ..
            } => {
                let phase = self.path_phase0(center) + angular_velocity * t;
                Vec2::from_angle(phase).perp() * (radius * angular_velocity)
            }
        }
    }

    /// Velocity of the rigidly moving domain frame at world point `p`.
    pub fn velocity_at(&self, t: f64, p: Vec2) -> Vec2 {
        let v = self.marker_velocity(t);
        match self.motion {
            Motion::CircularPath {
                angular_velocity,
                rotate_with_heading: true,
                ..
            } => v + (p - self.marker_at(t)).perp() * angular_velocity,
            _ => v,
        }
    }

    /// Whether the motion is a pure translation at constant velocity (or
    /// none), in which case a co-moving inertial frame exists.
    pub fn inertial_velocity(&self) -> Option<Vec2> {
        match self.motion {
            Motion::Static => Some(Vec2::ZERO),
            Motion::ConstantVelocity { velocity } => Some(velocity),
            Motion::CircularPath { .. } => None,
        }
    }
}

/// Spacing heuristic `sqrt(area / n)`: every vehicle covers about the same
/// square patch.
pub fn rd_heuristic(area: f64, n: usize) -> f64 {
    (area / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn square() -> Polygon {
        Polygon::rectangle(0.0, 0.0, 20.0, 20.0).unwrap()
    }

    #[test]
    fn rejects_bad_polygons() {
        assert!(Polygon::new(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]).is_err());
        // clockwise
        assert!(Polygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 0.0)
        ])
        .is_err());
        // bow tie
        assert!(Polygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 2.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(0.0, 2.0)
        ])
        .is_err());
    }

    #[test]
    fn project_center_of_square_uses_lowest_edge() {
        let pr = square().project(Vec2::new(10.0, 10.0));
        assert_eq!(pr.signed_distance, -10.0);
        assert_eq!(pr.edge, 0);
        assert_eq!(pr.point, Vec2::new(10.0, 0.0));
        assert_eq!(pr.outward, Vec2::new(0.0, -1.0));
    }

    #[test]
    fn project_exterior_side_and_corner() {
        let pr = square().project(Vec2::new(25.0, 10.0));
        assert_eq!(pr.signed_distance, 5.0);
        assert_eq!(pr.point, Vec2::new(20.0, 10.0));
        assert_eq!(pr.outward, Vec2::new(1.0, 0.0));

        let pr = square().project(Vec2::new(25.0, 25.0));
        assert_relative_eq!(pr.signed_distance, 5.0 * 2f64.sqrt(), max_relative = 1e-15);
        assert_eq!(pr.point, Vec2::new(20.0, 20.0));
    }

    #[test]
    fn boundary_query_is_degenerate() {
        let pr = square().project(Vec2::new(20.0, 7.0));
        assert!(pr.is_degenerate());
        assert_eq!(pr.outward, Vec2::ZERO);
    }

    #[test]
    fn rd_heuristic_caption_values() {
        assert_eq!(rd_heuristic(400.0, 16), 5.0);
        assert!((rd_heuristic(292.28, 10) - 5.4).abs() < 0.01);
        assert!((rd_heuristic(292.28, 6) - 6.97).abs() < 0.01);
    }

    #[test]
    fn translation_motion() {
        let d = MovingDomain::new(
            square(),
            Motion::ConstantVelocity {
                velocity: Vec2::new(1.0, 0.0),
            },
        );
        assert_eq!(d.at(0.0), square());
        assert_eq!(
            d.at(3.0),
            Polygon::rectangle(3.0, 0.0, 23.0, 20.0).unwrap()
        );
    }

    #[test]
    fn circular_path_full_period_returns_to_base() {
        let tri = Polygon::equilateral(Vec2::new(30.0, 0.0), 15.0 * 3f64.sqrt(), PI / 2.0).unwrap();
        let d = MovingDomain::new(
            tri.clone(),
            Motion::CircularPath {
                center: Vec2::ZERO,
                radius: 30.0,
                angular_velocity: 2.0 * PI / 40.0,
                rotate_with_heading: true,
            },
        );
        assert_eq!(d.at(0.0), tri);
        for (a, b) in d.at(40.0).vertices().iter().zip(tri.vertices()) {
            assert!((*a - *b).norm() < 1e-9);
        }
        // Quarter period: centroid at (0, 30), shape turned by 90°.
        let q = d.at(10.0);
        assert!((q.centroid() - Vec2::new(0.0, 30.0)).norm() < 1e-9);
        assert!((d.marker_at(10.0) - Vec2::new(0.0, 30.0)).norm() < 1e-9);
        let rotated = tri.rotated_about(Vec2::ZERO, PI / 2.0);
        for (a, b) in q.vertices().iter().zip(rotated.vertices()) {
            assert!((*a - *b).norm() < 1e-9);
        }
    }

    #[test]
    fn circular_velocity_field_is_rotation_about_center() {
        let tri = Polygon::equilateral(Vec2::new(30.0, 0.0), 10.0, 0.0).unwrap();
        let w = 0.2;
        let d = MovingDomain::new(
            tri,
            Motion::CircularPath {
                center: Vec2::ZERO,
                radius: 30.0,
                angular_velocity: w,
                rotate_with_heading: true,
            },
        );
        let t = 3.7;
        let p = Vec2::new(12.0, -4.0);
        let v = d.velocity_at(t, p);
        assert!((v - p.perp() * w).norm() < 1e-12);
        // finite difference of a material point
        let eps = 1e-6;
        let fd = (d.at(eps).vertices()[0] - d.at(0.0).vertices()[0]) / eps;
        assert!((fd - d.velocity_at(0.0, d.at(0.0).vertices()[0])).norm() < 1e-5);
    }
}
