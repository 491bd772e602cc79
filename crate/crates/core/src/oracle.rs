//! Globally adaptive cubature of `1/r` and its gradient over a flat panel.
//!
//! The panel is parametrized over the unit square `(s, t)`. Each cell carries
//! a tensor Gauss-Legendre estimate of itself and of its four quarter cells;
//! the difference is the cell's error estimate. The cell with the largest
//! estimate is split until the summed error per component drops below
//! `tol·max(1, |value|)`.

use crate::gauss::gauss_legendre_unit;
use crate::kernel::Influence;
use crate::vec3::Vec3;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

/// Half-thickness used for flux at points lying exactly on the panel plane.
pub const ON_PLANE_EPSILON: f64 = 1e-6;

/// Nodes closer than this to the field point are treated as coincident.
/// Offsets are formed relative to the field point's projection, so only a
/// true coincidence needs guarding.
pub const NODE_FLOOR: f64 = 1e-150;

/// Multiple of machine epsilon times a cell's absolute node sum that is
/// discounted from its error estimate.
const ROUNDOFF_FACTOR: f64 = 50.0;

/// Deepest subdivision level; cells at this level are accepted as they are.
pub const MAX_DEPTH: u32 = 48;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("tolerance must be at least 1e-14 and finite")]
    InvalidTolerance,
    #[error("invalid panel or field point")]
    InvalidInput,
    #[error("quadrature node within {NODE_FLOOR:e} of the field point")]
    NodeCollision,
    #[error("no convergence: estimated error {estimated_error:e} after {splits} splits")]
    NoConvergence {
        estimated_error: f64,
        splits: usize,
        partial: OracleResult,
    },
}

/// Integration domain in the normalized local XZ plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// `(0,0), (1,0), (0,zM)`.
    Triangle { z_m: f64 },
    /// `[0, width] × [0, height]`.
    Rectangle { width: f64, height: f64 },
}

impl Domain {
    fn valid(&self) -> bool {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            Domain::Triangle { z_m } => ok(z_m),
            Domain::Rectangle { width, height } => ok(width) && ok(height),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub tol: f64,
    pub max_splits: usize,
    /// Gauss-Legendre points per axis in each cell.
    pub order: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_splits: 60_000,
            order: 6,
        }
    }
}

impl OracleOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub potential: f64,
    pub flux: Vec3,
    /// Deepest subdivision level reached.
    pub refinement_levels: u32,
    /// Sum over cells of |refined − coarse|, largest over the components.
    pub estimated_error: f64,
    pub splits: usize,
}

impl OracleResult {
    pub fn influence(&self) -> Influence {
        Influence {
            potential: self.potential,
            flux: self.flux,
        }
    }
}

type Quad = [f64; 4];

#[derive(Clone, Copy)]
struct Rect {
    s0: f64,
    s1: f64,
    t0: f64,
    t1: f64,
}

impl Rect {
    fn quarters(&self) -> [Rect; 4] {
        let sm = 0.5 * (self.s0 + self.s1);
        let tm = 0.5 * (self.t0 + self.t1);
        [
            Rect {
                s0: self.s0,
                s1: sm,
                t0: self.t0,
                t1: tm,
            },
            Rect {
                s0: sm,
                s1: self.s1,
                t0: self.t0,
                t1: tm,
            },
            Rect {
                s0: self.s0,
                s1: sm,
                t0: tm,
                t1: self.t1,
            },
            Rect {
                s0: sm,
                s1: self.s1,
                t0: tm,
                t1: self.t1,
            },
        ]
    }
}

struct Cell {
    rect: Rect,
    depth: u32,
    kids: [Quad; 4],
    value: Quad,
    err: Quad,
}

#[derive(PartialEq)]
struct Entry {
    prio: f64,
    id: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        self.prio.total_cmp(&o.prio).then_with(|| o.id.cmp(&self.id))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Reference point in `(s, t)` from which cell coordinates are measured, so
/// that `P − Q` is formed from small offsets near the field point.
#[derive(Clone, Copy)]
struct Anchor {
    sa: f64,
    ta: f64,
    /// `P.x − x(sa)` and `P.z − z(sa, ta)`.
    dxa: f64,
    dza: f64,
}

impl Anchor {
    fn new(domain: Domain, p: Vec3) -> Self {
        let (sp, tp) = projected(domain, p);
        let sa = sp.clamp(0.0, 1.0);
        let ta = tp.clamp(0.0, 1.0);
        let (dxa, dza) = match domain {
            Domain::Triangle { z_m } => (p.x - sa, p.z - z_m * (1.0 - sa) * ta),
            Domain::Rectangle { width, height } => (p.x - width * sa, p.z - height * ta),
        };
        Self { sa, ta, dxa, dza }
    }
}

/// The field point's projection in `(s, t)`, possibly outside the unit square.
fn projected(domain: Domain, p: Vec3) -> (f64, f64) {
    match domain {
        Domain::Triangle { z_m } => {
            let h = z_m * (1.0 - p.x);
            (p.x, if h > 0.0 { p.z / h } else { 0.0 })
        }
        Domain::Rectangle { width, height } => (p.x / width, p.z / height),
    }
}

struct Integrator<'a> {
    domain: Domain,
    anchor: Anchor,
    y: f64,
    nodes: &'a [f64],
    weights: &'a [f64],
    active: [bool; 4],
    collision: bool,
}

impl Integrator<'_> {
    /// Offsets `P − Q` in x and z and the area Jacobian at cell coordinates `(u, v)`.
    #[inline]
    fn offsets(&self, u: f64, v: f64) -> (f64, f64, f64) {
        let a = &self.anchor;
        match self.domain {
            Domain::Triangle { z_m } => {
                let rest = 1.0 - a.sa;
                (a.dxa - u, a.dza - z_m * (rest * v - u * (a.ta + v)), z_m * (rest - u))
            }
            Domain::Rectangle { width, height } => (a.dxa - width * u, a.dza - height * v, width * height),
        }
    }

    /// Cell estimate and the summed magnitude of its node terms.
    fn rule(&mut self, r: &Rect) -> (Quad, Quad) {
        let (ds, dt) = (r.s1 - r.s0, r.t1 - r.t0);
        let mut acc = [0.0; 4];
        let mut mag = [0.0; 4];
        let y = self.y;
        let y2 = y * y;
        for (&ns, &ws) in self.nodes.iter().zip(self.weights) {
            let u = r.s0 + ds * ns;
            for (&nt, &wt) in self.nodes.iter().zip(self.weights) {
                let v = r.t0 + dt * nt;
                let (dx, dz, jac) = self.offsets(u, v);
                let r2 = dx * dx + y2 + dz * dz;
                let dist = r2.sqrt();
                if dist < NODE_FLOOR {
                    self.collision = true;
                    continue;
                }
                let w = ws * wt * jac;
                let inv = 1.0 / dist;
                acc[0] += w * inv;
                let inv3 = w * inv * inv * inv;
                acc[1] += inv3 * dx;
                acc[2] += inv3 * y;
                acc[3] += inv3 * dz;
                mag[0] += w * inv;
                mag[1] += (inv3 * dx).abs();
                mag[2] += (inv3 * y).abs();
                mag[3] += (inv3 * dz).abs();
            }
        }
        let area = ds * dt;
        (acc.map(|v| v * area), mag.map(|v| v * area))
    }

    fn cell(&mut self, rect: Rect, depth: u32, coarse: Quad) -> Cell {
        let parts = rect.quarters().map(|q| self.rule(&q));
        let kids = parts.map(|p| p.0);
        let mut value = [0.0; 4];
        let mut err = [0.0; 4];
        for c in 0..4 {
            value[c] = kids.iter().map(|k| k[c]).sum();
            let mag: f64 = parts.iter().map(|p| p.1[c]).sum();
            // differences at the rounding level of the node sums are not error
            let noise = ROUNDOFF_FACTOR * f64::EPSILON * mag;
            err[c] = if self.active[c] {
                ((value[c] - coarse[c]).abs() - noise).max(0.0)
            } else {
                0.0
            };
        }
        Cell {
            rect,
            depth,
            kids,
            value,
            err,
        }
    }
}

/// Neumaier-compensated component sums over live cells in id order.
fn totals(cells: &[Option<Cell>]) -> (Quad, Quad) {
    let mut sum = [0.0; 4];
    let mut comp = [0.0; 4];
    let mut err = [0.0; 4];
    for cell in cells.iter().flatten() {
        for c in 0..4 {
            let v = cell.value[c];
            let t = sum[c] + v;
            if sum[c].abs() >= v.abs() {
                comp[c] += (sum[c] - t) + v;
            } else {
                comp[c] += (v - t) + sum[c];
            }
            sum[c] = t;
            err[c] += cell.err[c];
        }
    }
    (std::array::from_fn(|c| sum[c] + comp[c]), err)
}

fn converged(value: &Quad, err: &Quad, active: &[bool; 4], tol: f64) -> bool {
    (0..4).all(|c| !active[c] || err[c] <= tol * value[c].abs().max(1.0))
}

fn worst(err: &Quad, active: &[bool; 4]) -> f64 {
    (0..4).filter(|&c| active[c]).map(|c| err[c]).fold(0.0, f64::max)
}

/// Starting cells, in offsets from the anchor: four strips in `s`, each cut
/// in `t` so that cells are roughly square in physical space, with edges
/// through the projected field point.
fn initial_cells(domain: Domain, anchor: &Anchor) -> Vec<Rect> {
    let min_gap = 1e-3;
    let with_point = |b: Vec<f64>, v: f64| {
        if !(v > 0.0 && v < 1.0) {
            return b;
        }
        let mut b: Vec<f64> = b.into_iter().filter(|&e| e == 0.0 || e == 1.0 || (e - v).abs() > min_gap).collect();
        b.push(v);
        b.sort_by(f64::total_cmp);
        b
    };
    let uniform = |n: usize| (0..=n).map(|i| i as f64 / n as f64).collect::<Vec<f64>>();
    let (width, height) = match domain {
        Domain::Triangle { z_m } => (1.0, z_m),
        Domain::Rectangle { width, height } => (width, height),
    };
    let sb = with_point(uniform(4), anchor.sa);
    let mut cells = Vec::new();
    for si in sb.windows(2) {
        let wx = width * (si[1] - si[0]);
        let wz = match domain {
            Domain::Triangle { z_m } => z_m * (1.0 - si[0]),
            Domain::Rectangle { .. } => height,
        };
        let n = (wz / wx).round().clamp(4.0, 4096.0) as usize;
        let tb = with_point(uniform(n), anchor.ta);
        for ti in tb.windows(2) {
            cells.push(Rect {
                s0: si[0] - anchor.sa,
                s1: si[1] - anchor.sa,
                t0: ti[0] - anchor.ta,
                t1: ti[1] - anchor.ta,
            });
        }
    }
    cells
}

struct Raw {
    value: Quad,
    err: f64,
    depth: u32,
    splits: usize,
    converged: bool,
}

fn integrate(domain: Domain, p: Vec3, active: [bool; 4], opts: &OracleOptions) -> Result<Raw, OracleError> {
    let (nodes, weights) = gauss_legendre_unit(opts.order.max(1));
    let anchor = Anchor::new(domain, p);
    let mut ig = Integrator {
        domain,
        anchor,
        y: p.y,
        nodes: &nodes,
        weights: &weights,
        active,
        collision: false,
    };
    let mut cells: Vec<Option<Cell>> = Vec::new();
    let mut heap = BinaryHeap::new();
    let push = |cells: &mut Vec<Option<Cell>>, heap: &mut BinaryHeap<Entry>, cell: Cell| {
        let id = cells.len();
        heap.push(Entry {
            prio: worst(&cell.err, &active),
            id,
        });
        cells.push(Some(cell));
    };

    for rect in initial_cells(domain, &anchor) {
        let coarse = ig.rule(&rect).0;
        let cell = ig.cell(rect, 2, coarse);
        push(&mut cells, &mut heap, cell);
    }

    let (mut value, mut err) = totals(&cells);
    let mut splits = 0;
    let mut depth = 2;
    let mut done = converged(&value, &err, &active, opts.tol);
    while !done && splits < opts.max_splits {
        let Some(top) = heap.pop() else { break };
        let Some(cell) = cells[top.id].take() else { continue };
        if cell.depth >= MAX_DEPTH {
            // keep its contribution but stop refining it
            cells[top.id] = Some(cell);
            continue;
        }
        for c in 0..4 {
            value[c] -= cell.value[c];
            err[c] -= cell.err[c];
        }
        for (q, coarse) in cell.rect.quarters().into_iter().zip(cell.kids) {
            let child = ig.cell(q, cell.depth + 1, coarse);
            for c in 0..4 {
                value[c] += child.value[c];
                err[c] += child.err[c];
            }
            push(&mut cells, &mut heap, child);
        }
        depth = depth.max(cell.depth + 1);
        splits += 1;
        if splits % 1024 == 0 {
            (value, err) = totals(&cells);
        }
        done = converged(&value, &err.map(|e| e.max(0.0)), &active, opts.tol);
    }
    if ig.collision {
        return Err(OracleError::NodeCollision);
    }
    let (value, err) = totals(&cells);
    let converged = converged(&value, &err, &active, opts.tol);
    Ok(Raw {
        value,
        err: worst(&err, &active),
        depth,
        splits,
        converged,
    })
}

/// Potential and flux of a unit density on `domain` at the local point `p`.
///
/// A point exactly on the plane gets its potential at `Y = 0` and its flux at
/// `Y = +ε`; the normal component is then reported as the average of the two
/// sides, which is zero.
pub fn adaptive_oracle_domain(domain: Domain, p: Vec3, opts: &OracleOptions) -> Result<OracleResult, OracleError> {
    if !(opts.tol.is_finite() && opts.tol >= 1e-14) {
        return Err(OracleError::InvalidTolerance);
    }
    if !domain.valid() || !p.is_finite() {
        return Err(OracleError::InvalidInput);
    }
    let (raw_value, raw_err, depth, splits, ok) = if p.y == 0.0 {
        let pot = integrate(domain, p, [true, false, false, false], opts)?;
        let lifted = Vec3::new(p.x, ON_PLANE_EPSILON, p.z);
        let fl = integrate(domain, lifted, [false, true, false, true], opts)?;
        (
            [pot.value[0], fl.value[1], 0.0, fl.value[3]],
            pot.err.max(fl.err),
            pot.depth.max(fl.depth),
            pot.splits + fl.splits,
            pot.converged && fl.converged,
        )
    } else {
        let r = integrate(domain, p, [true; 4], opts)?;
        (r.value, r.err, r.depth, r.splits, r.converged)
    };
    let result = OracleResult {
        potential: raw_value[0],
        flux: Vec3::new(raw_value[1], raw_value[2], raw_value[3]),
        refinement_levels: depth,
        estimated_error: raw_err,
        splits,
    };
    if ok {
        Ok(result)
    } else {
        Err(OracleError::NoConvergence {
            estimated_error: raw_err,
            splits,
            partial: result,
        })
    }
}

/// Potential only; skips the flux integrals entirely.
pub fn adaptive_potential(domain: Domain, p: Vec3, opts: &OracleOptions) -> Result<OracleResult, OracleError> {
    if !(opts.tol.is_finite() && opts.tol >= 1e-14) {
        return Err(OracleError::InvalidTolerance);
    }
    if !domain.valid() || !p.is_finite() {
        return Err(OracleError::InvalidInput);
    }
    let r = integrate(domain, p, [true, false, false, false], opts)?;
    let result = OracleResult {
        potential: r.value[0],
        flux: Vec3::ZERO,
        refinement_levels: r.depth,
        estimated_error: r.err,
        splits: r.splits,
    };
    if r.converged {
        Ok(result)
    } else {
        Err(OracleError::NoConvergence {
            estimated_error: r.err,
            splits: r.splits,
            partial: result,
        })
    }
}

/// Adaptive oracle on the normalized right triangle.
pub fn adaptive_oracle(z_m: f64, p: Vec3, tol: f64) -> Result<OracleResult, OracleError> {
    adaptive_oracle_domain(Domain::Triangle { z_m }, p, &OracleOptions::with_tol(tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_center_potential() {
        // ∫∫ over [-1/2,1/2]² of 1/r = 4 ln(1 + √2)
        let r = adaptive_oracle_domain(
            Domain::Rectangle { width: 1.0, height: 1.0 },
            Vec3::new(0.5, 0.0, 0.5),
            &OracleOptions::with_tol(1e-11),
        )
        .unwrap();
        let exact = 4.0 * (1.0 + 2f64.sqrt()).ln();
        assert!((r.potential - exact).abs() < 1e-10, "{} {}", r.potential, exact);
        assert!(r.flux.x.abs() < 1e-9 && r.flux.z.abs() < 1e-9);
        assert_eq!(r.flux.y, 0.0);
    }

    #[test]
    fn axis_potential_of_square_matches_closed_form() {
        // on the axis of a square of half-side a at height h:
        // Φ = 8 ∫_0^{π/4} (sqrt(a² sec²θ + h²) − h) dθ, evaluated independently by Simpson
        let (a, h) = (0.5, 0.3);
        let n = 20000;
        let f = |th: f64| ((a / th.cos()).powi(2) + h * h).sqrt() - h;
        let b = std::f64::consts::FRAC_PI_4;
        let step = b / n as f64;
        let mut simpson = f(0.0) + f(b);
        for i in 1..n {
            simpson += f(i as f64 * step) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let exact = 8.0 * simpson * step / 3.0;
        let r = adaptive_oracle_domain(
            Domain::Rectangle { width: 1.0, height: 1.0 },
            Vec3::new(0.5, h, 0.5),
            &OracleOptions::with_tol(1e-12),
        )
        .unwrap();
        assert!((r.potential - exact).abs() < 1e-10, "{} {}", r.potential, exact);
    }

    #[test]
    fn generic_point_converges_quickly() {
        let r = adaptive_oracle(1.0, Vec3::new(0.7, 0.4, 1.2), 1e-9).unwrap();
        assert!(r.estimated_error <= 1e-9);
        assert!(r.refinement_levels <= 9);
    }

    #[test]
    fn far_point_is_monopole() {
        let r = adaptive_oracle(1.0, Vec3::new(1000.0, 0.0, 0.0), 1e-12).unwrap();
        let d = (Vec3::new(1000.0, 0.0, 0.0) - Vec3::new(1.0 / 3.0, 0.0, 1.0 / 3.0)).norm();
        assert!((r.potential * d / 0.5 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn interior_on_plane_potential_converges() {
        let r = adaptive_oracle(1.0, Vec3::new(0.25, 0.0, 0.25), 1e-10).unwrap();
        assert!(r.potential > 0.0 && r.potential.is_finite());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert_eq!(adaptive_oracle(1.0, Vec3::X, 0.0), Err(OracleError::InvalidTolerance));
        assert_eq!(adaptive_oracle(-1.0, Vec3::X, 1e-9), Err(OracleError::InvalidInput));
    }

    #[test]
    fn tiny_budget_reports_no_convergence() {
        let opts = OracleOptions {
            tol: 1e-12,
            max_splits: 3,
            order: 2,
        };
        let e = adaptive_oracle_domain(Domain::Triangle { z_m: 1.0 }, Vec3::new(0.3, 1e-3, 0.3), &opts);
        assert!(matches!(e, Err(OracleError::NoConvergence { .. })));
    }
}
