//! Fixed product quadratures of the panel integral and the point-source
//! ("centroid") approximation.

use crate::gauss::gauss_legendre_unit;
use crate::kernel::Influence;
use crate::vec3::Vec3;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Quadrature nodes closer than this to the field point are rejected.
pub const NODE_FLOOR: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature node within {NODE_FLOOR:e} of the field point")]
    NodeCollision,
    #[error("grid counts must be at least 1")]
    EmptyGrid,
    #[error("zM must be positive and finite")]
    InvalidZm,
    #[error("non-finite field point")]
    InvalidPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    /// `nx` strips in x, each cut into `nz` cells under the hypotenuse; one
    /// node per cell at its parametric midpoint, weighted by its area.
    Midpoint,
    /// Tensor Gauss-Legendre rule in the same strip parametrization.
    GaussLegendre,
    /// `nx × nz` grid over the bounding box `[0,1] × [0,zM]`, each cell
    /// clipped to the triangle with one node at the clipped centroid.
    ClippedMidpoint,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Midpoint => "midpoint",
            Rule::GaussLegendre => "gauss-legendre",
            Rule::ClippedMidpoint => "clipped-midpoint",
        })
    }
}

impl FromStr for Rule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "midpoint" => Ok(Rule::Midpoint),
            "gauss-legendre" | "gauss" | "gl" => Ok(Rule::GaussLegendre),
            "clipped-midpoint" | "clipped" => Ok(Rule::ClippedMidpoint),
            other => Err(format!("unknown quadrature rule '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadratureSpec {
    pub nx: usize,
    pub nz: usize,
    pub rule: Rule,
}

impl QuadratureSpec {
    pub fn new(nx: usize, nz: usize, rule: Rule) -> Self {
        Self { nx, nz, rule }
    }

    pub fn square(n: usize, rule: Rule) -> Self {
        Self::new(n, n, rule)
    }
}

impl fmt::Display for QuadratureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{} {}", self.nx, self.nz, self.rule)
    }
}

/// Precomputed nodes `(x, z)` and weights for one triangle and spec.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelQuadrature {
    xs: Vec<f64>,
    zs: Vec<f64>,
    ws: Vec<f64>,
}

impl PanelQuadrature {
    pub fn new(z_m: f64, spec: QuadratureSpec) -> Result<Self, QuadratureError> {
        if !(z_m.is_finite() && z_m > 0.0) {
            return Err(QuadratureError::InvalidZm);
        }
        if spec.nx == 0 || spec.nz == 0 {
            return Err(QuadratureError::EmptyGrid);
        }
        let mut q = PanelQuadrature {
            xs: Vec::new(),
            zs: Vec::new(),
            ws: Vec::new(),
        };
        match spec.rule {
            Rule::Midpoint => {
                let (ds, dt) = (1.0 / spec.nx as f64, 1.0 / spec.nz as f64);
                for i in 0..spec.nx {
                    let s = (i as f64 + 0.5) * ds;
                    let h = z_m * (1.0 - s);
                    for j in 0..spec.nz {
                        let t = (j as f64 + 0.5) * dt;
                        q.push(s, h * t, h * ds * dt);
                    }
                }
            }
            Rule::GaussLegendre => {
                let (sn, sw) = gauss_legendre_unit(spec.nx);
                let (tn, tw) = gauss_legendre_unit(spec.nz);
                for (&s, &ws) in sn.iter().zip(&sw) {
                    let h = z_m * (1.0 - s);
                    for (&t, &wt) in tn.iter().zip(&tw) {
                        q.push(s, h * t, h * ws * wt);
                    }
                }
            }
            Rule::ClippedMidpoint => {
                let (dx, dz) = (1.0 / spec.nx as f64, z_m / spec.nz as f64);
                for i in 0..spec.nx {
                    for j in 0..spec.nz {
                        let (x0, z0) = (i as f64 * dx, j as f64 * dz);
                        if let Some((cx, cz, area)) = clip_cell(x0, x0 + dx, z0, z0 + dz, z_m) {
                            q.push(cx, cz, area);
                        }
                    }
                }
            }
        }
        Ok(q)
    }

    fn push(&mut self, x: f64, z: f64, w: f64) {
        self.xs.push(x);
        self.zs.push(z);
        self.ws.push(w);
    }

    pub fn len(&self) -> usize {
        self.ws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ws.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.ws.iter().sum()
    }

    /// Potential `Σ w/r` and flux `Σ w (P − Q)/r³` at the local point.
    pub fn influence(&self, p: Vec3) -> Result<Influence, QuadratureError> {
        if !p.is_finite() {
            return Err(QuadratureError::InvalidPoint);
        }
        let y2 = p.y * p.y;
        let floor2 = NODE_FLOOR * NODE_FLOOR;
        let (mut phi, mut fx, mut fy, mut fz) = (0.0, 0.0, 0.0, 0.0);
        for k in 0..self.ws.len() {
            let dx = p.x - self.xs[k];
            let dz = p.z - self.zs[k];
            let r2 = dx * dx + y2 + dz * dz;
            if r2 < floor2 {
                return Err(QuadratureError::NodeCollision);
            }
            let inv = 1.0 / r2.sqrt();
            let w = self.ws[k] * inv;
            phi += w;
            let w3 = w * inv * inv;
            fx += w3 * dx;
            fy += w3;
            fz += w3 * dz;
        }
        Ok(Influence {
            potential: phi,
            flux: Vec3::new(fx, fy * p.y, fz),
        })
    }

    /// Potential only.
    pub fn potential(&self, p: Vec3) -> Result<f64, QuadratureError> {
        let y2 = p.y * p.y;
        let floor2 = NODE_FLOOR * NODE_FLOOR;
        let mut phi = 0.0;
        for k in 0..self.ws.len() {
            let dx = p.x - self.xs[k];
            let dz = p.z - self.zs[k];
            let r2 = dx * dx + y2 + dz * dz;
            if r2 < floor2 {
                return Err(QuadratureError::NodeCollision);
            }
            phi += self.ws[k] / r2.sqrt();
        }
        Ok(phi)
    }
}

/// Intersection of the box `[x0,x1] × [z0,z1]` with the triangle
/// `x ≥ 0, z ≥ 0, x + z/zM ≤ 1`: centroid and area, or `None` if empty.
fn clip_cell(x0: f64, x1: f64, z0: f64, z1: f64, z_m: f64) -> Option<(f64, f64, f64)> {
    let poly = [(x0, z0), (x1, z0), (x1, z1), (x0, z1)];
    let inside = |p: (f64, f64)| 1.0 - p.0 - p.1 / z_m;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(5);
    for k in 0..4 {
        let a = poly[k];
        let b = poly[(k + 1) % 4];
        let (fa, fb) = (inside(a), inside(b));
        if fa >= 0.0 {
            out.push(a);
        }
        if (fa >= 0.0) != (fb >= 0.0) {
            let t = fa / (fa - fb);
            out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
    if out.len() < 3 {
        return None;
    }
    let (mut area2, mut cx, mut cz) = (0.0, 0.0, 0.0);
    for k in 0..out.len() {
        let (a, b) = (out[k], out[(k + 1) % out.len()]);
        let cross = a.0 * b.1 - b.0 * a.1;
        area2 += cross;
        cx += (a.0 + b.0) * cross;
        cz += (a.1 + b.1) * cross;
    }
    let area = 0.5 * area2;
    if area <= 0.0 {
        return None;
    }
    Some((cx / (3.0 * area2), cz / (3.0 * area2), area))
}

/// Product quadrature of the unit source on the normalized triangle.
pub fn quad_influence(z_m: f64, p: Vec3, spec: QuadratureSpec) -> Result<Influence, QuadratureError> {
    PanelQuadrature::new(z_m, spec)?.influence(p)
}

/// Whole panel charge placed at its centroid `(1/3, 0, zM/3)`.
pub fn centroid_influence(z_m: f64, p: Vec3) -> Result<Influence, QuadratureError> {
    if !(z_m.is_finite() && z_m > 0.0) {
        return Err(QuadratureError::InvalidZm);
    }
    if !p.is_finite() {
        return Err(QuadratureError::InvalidPoint);
    }
    let d = p - Vec3::new(1.0 / 3.0, 0.0, z_m / 3.0);
    let r2 = d.norm_squared();
    if r2 < NODE_FLOOR * NODE_FLOOR {
        return Err(QuadratureError::NodeCollision);
    }
    let area = 0.5 * z_m;
    let inv = 1.0 / r2.sqrt();
    Ok(Influence {
        potential: area * inv,
        flux: d * (area * inv * inv * inv),
    })
}
