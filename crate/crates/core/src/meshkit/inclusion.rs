use std::f64::consts::PI;

use crate::{Error, Result};

use super::Point;

/// Shape of the solid inclusion inside the unit cell `Y = (0,1)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InclusionKind {
    Circle { radius: f64 },
    /// Ellipse with semi-axes `a` (along the rotated first axis) and `b`,
    /// rotated anti-clockwise by `rotation_deg`.
    Ellipse {
        semi_a: f64,
        semi_b: f64,
        rotation_deg: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InclusionSpec {
    pub kind: InclusionKind,
    pub center: Point,
}

impl InclusionSpec {
    pub fn circle() -> Self {
        Self {
            kind: InclusionKind::Circle { radius: 0.25 },
            center: [0.5, 0.5],
        }
    }

    pub fn ellipse() -> Self {
        Self {
            kind: InclusionKind::Ellipse {
                semi_a: 0.357142857,
                semi_b: 0.192307692,
                rotation_deg: 45.0,
            },
            center: [0.5, 0.5],
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            InclusionKind::Circle { .. } => "circle",
            InclusionKind::Ellipse { .. } => "ellipse",
        }
    }

    /// Semi-axes and rotation angle in radians; a circle is an unrotated ellipse.
    fn axes(&self) -> (f64, f64, f64) {
        match self.kind {
            InclusionKind::Circle { radius } => (radius, radius, 0.0),
            InclusionKind::Ellipse {
                semi_a,
                semi_b,
                rotation_deg,
            } => (semi_a, semi_b, rotation_deg.to_radians()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b, _) = self.axes();
        if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Geometry(format!(
                "inclusion semi-axes must be positive, got {a}, {b}"
            )));
        }
        let [hx, hy] = self.half_extents();
        let [cx, cy] = self.center;
        // closure strictly inside the open unit cell
        if cx - hx <= 0.0 || cx + hx >= 1.0 || cy - hy <= 0.0 || cy + hy >= 1.0 {
            return Err(Error::Geometry(format!(
                "{} inclusion touches or leaves the unit cell (extent x {:.6}..{:.6}, y {:.6}..{:.6})",
                self.name(),
                cx - hx,
                cx + hx,
                cy - hy,
                cy + hy
            )));
        }
        Ok(())
    }

    /// Half widths of the axis-aligned bounding box.
    pub fn half_extents(&self) -> [f64; 2] {
        let (a, b, th) = self.axes();
        let (s, c) = th.sin_cos();
        [
            (a * a * c * c + b * b * s * s).sqrt(),
            (a * a * s * s + b * b * c * c).sqrt(),
        ]
    }

    pub fn area(&self) -> f64 {
        let (a, b, _) = self.axes();
        PI * a * b
    }

    /// `∫_{Y_s} (y_2 - c_2)^2 dy`, the second moment about the centroid in the vertical direction.
    pub fn vertical_second_moment(&self) -> f64 {
        let (a, b, th) = self.axes();
        let (s, c) = th.sin_cos();
        self.area() * (a * a * s * s + b * b * c * c) / 4.0
    }

    /// Point of the boundary curve at parameter `t` (parametric angle).
    pub fn curve_point(&self, t: f64) -> Point {
        let (a, b, th) = self.axes();
        let (s, c) = th.sin_cos();
        let (lx, ly) = (a * t.cos(), b * t.sin());
        [
            self.center[0] + c * lx - s * ly,
            self.center[1] + s * lx + c * ly,
        ]
    }

    /// Parameter of the boundary point hit by the ray from the center in direction `angle`.
    pub fn ray_parameter(&self, angle: f64) -> f64 {
        let (a, b, th) = self.axes();
        let (dx, dy) = ((angle - th).cos(), (angle - th).sin());
        // local direction scaled onto the unit circle of the ellipse
        (dy / b).atan2(dx / a)
    }

    pub fn contains(&self, p: Point) -> bool {
        self.level(p) < 1.0
    }

    /// `(x/a)^2 + (y/b)^2` in the rotated frame; `1` on the boundary.
    pub fn level(&self, p: Point) -> f64 {
        let (a, b, th) = self.axes();
        let (s, c) = th.sin_cos();
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let lx = c * dx + s * dy;
        let ly = -s * dx + c * dy;
        (lx / a).powi(2) + (ly / b).powi(2)
    }

    /// Closest point on the boundary curve.
    ///
    /// Radial projection for circles, Newton iteration on the parametric angle for ellipses.
    pub fn project(&self, p: Point) -> Point {
        let (a, b, th) = self.axes();
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        if a == b {
            let r = (dx * dx + dy * dy).sqrt();
            if r == 0.0 {
                return self.curve_point(0.0);
            }
            return [self.center[0] + a * dx / r, self.center[1] + a * dy / r];
        }
        let (s, c) = th.sin_cos();
        let lx = c * dx + s * dy;
        let ly = -s * dx + c * dy;
        let dist = |t: f64| (a * t.cos() - lx).powi(2) + (b * t.sin() - ly).powi(2);
        // seed from a scan so Newton lands on the global minimum
        let mut t = 0.0;
        let mut best = f64::MAX;
        for k in 0..64 {
            let tk = k as f64 * PI / 32.0;
            let d = dist(tk);
            if d < best {
                best = d;
                t = tk;
            }
        }
        for _ in 0..50 {
            let (st, ct) = t.sin_cos();
            // d/dt of half squared distance
            let f = (a * a - b * b) * st * ct - lx * a * st + ly * b * ct;
            let df = (a * a - b * b) * (ct * ct - st * st) - lx * a * ct - ly * b * st;
            if df == 0.0 {
                break;
            }
            let step = (f / df).clamp(-PI / 64.0, PI / 64.0);
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        self.curve_point(t)
    }

    /// Distance of `p` from the boundary curve.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        let q = self.project(p);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        InclusionSpec::circle().validate().unwrap();
        InclusionSpec::ellipse().validate().unwrap();
    }

    #[test]
    fn touching_inclusion_is_rejected() {
        let mut inc = InclusionSpec::circle();
        inc.kind = InclusionKind::Circle { radius: 0.5 };
        assert!(matches!(inc.validate(), Err(Error::Geometry(_))));
        let mut inc = InclusionSpec::circle();
        inc.center = [0.2, 0.5];
        assert!(inc.validate().is_err());
    }

    #[test]
    fn ray_points_lie_on_curve_in_requested_direction() {
        for inc in [InclusionSpec::circle(), InclusionSpec::ellipse()] {
            for k in 0..16 {
                let ang = k as f64 * PI / 8.0;
                let p = inc.curve_point(inc.ray_parameter(ang));
                assert!((inc.level(p) - 1.0).abs() < 1e-14);
                let dir = (p[1] - 0.5).atan2(p[0] - 0.5);
                let diff = (dir - ang).rem_euclid(2.0 * PI);
                assert!(diff < 1e-12 || (2.0 * PI - diff) < 1e-12);
            }
        }
    }

    #[test]
    fn ellipse_projection_is_orthogonal() {
        let inc = InclusionSpec::ellipse();
        for p in [[0.9, 0.5], [0.5, 0.1], [0.55, 0.52], [0.1, 0.95]] {
            let q = inc.project(p);
            assert!((inc.level(q) - 1.0).abs() < 1e-13);
            // compare with brute force sampling of the curve
            let mut best = f64::MAX;
            for k in 0..200_000 {
                let c = inc.curve_point(k as f64 * 2.0 * PI / 200_000.0);
                best = best.min(((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt());
            }
            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
            assert!(d <= best + 1e-9, "{d} vs {best}");
        }
    }

    #[test]
    fn vertical_moment_of_circle() {
        let inc = InclusionSpec::circle();
        let r: f64 = 0.25;
        assert!((inc.vertical_second_moment() - PI * r.powi(4) / 4.0).abs() < 1e-16);
    }
}
