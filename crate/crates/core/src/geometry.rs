//! Flat panels and their mapping onto the canonical right triangle.
//!
//! Every closed-form evaluation happens on the normalized triangle with
//! vertices `(0,0)`, `(1,0)` and `(0,zM)` in the local XZ plane. A physical
//! right-angled panel is carried there by an [`ElementFrame`]: translate the
//! right-angle vertex to the origin, rotate its legs onto the local X and Z
//! axes, and divide by the x-leg length. General triangles and rectangles
//! are first cut into right triangles.

use crate::vec3::Vec3;
use thiserror::Error;

/// Relative tolerance on the leg dot product of a right triangle.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

/// Lengths below this (relative to the coordinate magnitude) count as zero.
pub const LENGTH_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("legs are not perpendicular: |cos| = {cosine:e} exceeds {ORTHOGONALITY_TOL:e}")]
    NotRightAngled { cosine: f64 },
    #[error("rectangle sides are not perpendicular: |cos| = {cosine:e}")]
    NotOrthogonalSides { cosine: f64 },
    #[error("degenerate triangle ({0})")]
    DegenerateTriangle(&'static str),
    #[error("non-finite vertex coordinate")]
    NonFinite,
}

/// The normalized right triangle: x-leg of length 1, z-leg of length `zM`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrianglePrimitive {
    z_m: f64,
}

impl TrianglePrimitive {
    pub fn new(z_m: f64) -> Result<Self, GeometryError> {
        if !z_m.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if z_m <= 0.0 {
            return Err(GeometryError::DegenerateTriangle("zM must be positive"));
        }
        Ok(Self { z_m })
    }

    pub fn z_m(&self) -> f64 {
        self.z_m
    }

    /// Local vertices in the order right angle, end of x-leg, end of z-leg.
    pub fn vertices(&self) -> [Vec3; 3] {
        [Vec3::ZERO, Vec3::X, Vec3::new(0.0, 0.0, self.z_m)]
    }

    pub fn area(&self) -> f64 {
        0.5 * self.z_m
    }

    pub fn centroid(&self) -> Vec3 {
        Vec3::new(1.0 / 3.0, 0.0, self.z_m / 3.0)
    }

    /// Length of the hypotenuse, the longest side.
    pub fn longest_side(&self) -> f64 {
        (1.0 + self.z_m * self.z_m).sqrt()
    }

    /// `zM (x - 1) + z`: zero on the hypotenuse, negative on the element side.
    pub fn hypotenuse_value(&self, x: f64, z: f64) -> f64 {
        self.z_m * (x - 1.0) + z
    }

    /// Whether the in-plane point `(x, z)` lies strictly inside the triangle.
    pub fn contains_in_plane(&self, x: f64, z: f64) -> bool {
        x > 0.0 && z > 0.0 && self.hypotenuse_value(x, z) < 0.0
    }
}

/// Placement of a panel in global space.
///
/// Local axes are right-handed: `basis_y = basis_z × basis_x`, so a panel in
/// the global XZ plane with legs along +X and +Z gets the identity frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementFrame {
    origin: Vec3,
    basis_x: Vec3,
    basis_y: Vec3,
    basis_z: Vec3,
    scale: f64,
}

impl ElementFrame {
    pub fn identity() -> Self {
        Self {
            origin: Vec3::ZERO,
            basis_x: Vec3::X,
            basis_y: Vec3::Y,
            basis_z: Vec3::Z,
            scale: 1.0,
        }
    }

    /// Builds a frame from two perpendicular leg directions; `basis_y` follows.
    pub fn from_legs(origin: Vec3, x_dir: Vec3, z_dir: Vec3, scale: f64) -> Result<Self, GeometryError> {
        if !(origin.is_finite() && x_dir.is_finite() && z_dir.is_finite() && scale.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if scale <= 0.0 {
            return Err(GeometryError::DegenerateTriangle("scale must be positive"));
        }
        let (lx, lz) = (x_dir.norm(), z_dir.norm());
        if lx == 0.0 || lz == 0.0 {
            return Err(GeometryError::DegenerateTriangle("zero-length leg"));
        }
        let cosine = x_dir.dot(z_dir) / (lx * lz);
        if cosine.abs() > ORTHOGONALITY_TOL {
            return Err(GeometryError::NotRightAngled { cosine: cosine.abs() });
        }
        let basis_x = x_dir / lx;
        let basis_z = z_dir / lz;
        let basis_y = basis_z.cross(basis_x);
        Ok(Self {
            origin,
            basis_x,
            basis_y,
            basis_z,
            scale,
        })
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }
    pub fn basis_x(&self) -> Vec3 {
        self.basis_x
    }
    pub fn basis_y(&self) -> Vec3 {
        self.basis_y
    }
    pub fn basis_z(&self) -> Vec3 {
        self.basis_z
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Global point to normalized local coordinates.
    pub fn point_to_local(&self, p: Vec3) -> Vec3 {
        let d = p - self.origin;
        Vec3::new(d.dot(self.basis_x), d.dot(self.basis_y), d.dot(self.basis_z)) / self.scale
    }

    pub fn point_to_global(&self, p: Vec3) -> Vec3 {
        self.origin + self.vector_to_global(p) * self.scale
    }

    /// Pure rotation; flux needs no rescaling between frames.
    pub fn vector_to_global(&self, v: Vec3) -> Vec3 {
        self.basis_x * v.x + self.basis_y * v.y + self.basis_z * v.z
    }

    pub fn vector_to_local(&self, v: Vec3) -> Vec3 {
        Vec3::new(v.dot(self.basis_x), v.dot(self.basis_y), v.dot(self.basis_z))
    }
}

/// A physical panel carrying a uniform source density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelElement {
    pub primitive: TrianglePrimitive,
    pub frame: ElementFrame,
    pub strength: f64,
}

impl PanelElement {
    pub fn new(primitive: TrianglePrimitive, frame: ElementFrame, strength: f64) -> Self {
        Self {
            primitive,
            frame,
            strength,
        }
    }

    /// Unit-strength panel over a right triangle given right-angle vertex first.
    pub fn from_right_triangle(v0: Vec3, v1: Vec3, v2: Vec3) -> Result<Self, GeometryError> {
        let (primitive, frame) = frame_from_right_triangle(v0, v1, v2)?;
        Ok(Self::new(primitive, frame, 1.0))
    }

    pub fn with_strength(mut self, strength: f64) -> Self {
        self.strength = strength;
        self
    }

    pub fn vertices(&self) -> [Vec3; 3] {
        self.primitive.vertices().map(|v| self.frame.point_to_global(v))
    }

    pub fn centroid(&self) -> Vec3 {
        self.frame.point_to_global(self.primitive.centroid())
    }

    pub fn area(&self) -> f64 {
        self.primitive.area() * self.frame.scale() * self.frame.scale()
    }

    pub fn longest_side(&self) -> f64 {
        self.primitive.longest_side() * self.frame.scale()
    }
}

fn coordinate_scale(vs: &[Vec3]) -> f64 {
    vs.iter().map(|v| v.max_abs()).fold(1.0, f64::max)
}

/// Normalizes a right triangle whose right angle sits at `v0`.
///
/// The x-leg runs `v0 → v1`, the z-leg `v0 → v2`; `scale = |v1 - v0|` and
/// `zM = |v2 - v0| / |v1 - v0|`.
pub fn frame_from_right_triangle(v0: Vec3, v1: Vec3, v2: Vec3) -> Result<(TrianglePrimitive, ElementFrame), GeometryError> {
    if !(v0.is_finite() && v1.is_finite() && v2.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let floor = LENGTH_FLOOR * coordinate_scale(&[v0, v1, v2]);
    let (a, b) = (v1 - v0, v2 - v0);
    let (la, lb) = (a.norm(), b.norm());
    if la < floor || lb < floor {
        return Err(GeometryError::DegenerateTriangle("leg shorter than the length floor"));
    }
    let frame = ElementFrame::from_legs(v0, a, b, la)?;
    let primitive = TrianglePrimitive::new(lb / la)?;
    Ok((primitive, frame))
}

/// Like [`frame_from_right_triangle`] but finds the right-angle vertex itself.
///
/// Returns the vertices reordered right-angle first along with the frame.
pub fn frame_from_right_triangle_any_order(
    v0: Vec3,
    v1: Vec3,
    v2: Vec3,
) -> Result<([Vec3; 3], TrianglePrimitive, ElementFrame), GeometryError> {
    let orders = [[v0, v1, v2], [v1, v2, v0], [v2, v0, v1]];
    let cosine = |o: &[Vec3; 3]| {
        let (a, b) = (o[1] - o[0], o[2] - o[0]);
        (a.dot(b) / (a.norm() * b.norm())).abs()
    };
    let best = orders
        .iter()
        .min_by(|p, q| cosine(p).total_cmp(&cosine(q)))
        .copied()
        .unwrap_or(orders[0]);
    let (prim, frame) = frame_from_right_triangle(best[0], best[1], best[2])?;
    Ok((best, prim, frame))
}

/// A right triangle as vertices, right-angle vertex first.
pub type RightTriangle = [Vec3; 3];

fn triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    0.5 * (b - a).cross(c - a).norm()
}

/// Cuts an arbitrary triangle into two right triangles along an altitude.
///
/// The side `v0–v1` is used whenever the altitude from `v2` lands strictly
/// inside it; otherwise the altitude drops from the vertex opposite the
/// longest side, whose foot is always interior.
pub fn split_general_triangle(v0: Vec3, v1: Vec3, v2: Vec3) -> Result<[RightTriangle; 2], GeometryError> {
    if !(v0.is_finite() && v1.is_finite() && v2.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let scale = coordinate_scale(&[v0, v1, v2]);
    let area = triangle_area(v0, v1, v2);
    if area < LENGTH_FLOOR * scale * scale {
        return Err(GeometryError::DegenerateTriangle("area below floor"));
    }

    // (side start, side end, apex)
    let foot_param = |a: Vec3, b: Vec3, apex: Vec3| {
        let ab = b - a;
        (apex - a).dot(ab) / ab.norm_squared()
    };
    let margin = 1e-9;
    let (a, b, apex) = {
        let t = foot_param(v0, v1, v2);
        if t > margin && t < 1.0 - margin {
            (v0, v1, v2)
        } else {
            let sides = [(v0, v1, v2), (v1, v2, v0), (v2, v0, v1)];
            sides
                .into_iter()
                .max_by(|p, q| (p.1 - p.0).norm().total_cmp(&(q.1 - q.0).norm()))
                .unwrap_or((v0, v1, v2))
        }
    };
    let t = foot_param(a, b, apex);
    let foot = a.lerp(b, t);
    let first = [foot, a, apex];
    let second = [foot, b, apex];
    for tri in [&first, &second] {
        frame_from_right_triangle(tri[0], tri[1], tri[2])?;
    }
    Ok([first, second])
}

/// Cuts the rectangle `corner, corner + a, corner + a + b, corner + b` along
/// its diagonal.
pub fn split_rectangle(corner: Vec3, side_a: Vec3, side_b: Vec3) -> Result<[RightTriangle; 2], GeometryError> {
    if !(corner.is_finite() && side_a.is_finite() && side_b.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let (la, lb) = (side_a.norm(), side_b.norm());
    let floor = LENGTH_FLOOR * coordinate_scale(&[corner, side_a, side_b]);
    if la < floor || lb < floor {
        return Err(GeometryError::DegenerateTriangle("rectangle side shorter than the length floor"));
    }
    let cosine = side_a.dot(side_b) / (la * lb);
    if cosine.abs() > ORTHOGONALITY_TOL {
        return Err(GeometryError::NotOrthogonalSides { cosine: cosine.abs() });
    }
    let far = corner + side_a + side_b;
    Ok([[corner, corner + side_a, corner + side_b], [far, corner + side_b, corner + side_a]])
}
