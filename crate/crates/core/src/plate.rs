//! Collocation solver for a unit square conducting plate held at unit potential.
//!
//! The plate occupies `[0,1] × {0} × [0,1]`. Every panel frame is oriented
//! so that its local `+Y` is global `+Y`.

use crate::geometry::{GeometryError, PanelElement};
use crate::kernel::Influence;
use crate::lu::{solve_crout, DenseMatrix, LuError};
use crate::robust::{self, EvalPath, EvalPolicy, RobustError};
use crate::vec3::Vec3;
use rayon::prelude::*;
use thiserror::Error;

/// Diagonal along which each mesh square is cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitDiagonal {
    /// From the square's `(x0, z0)` corner to its `(x1, z1)` corner.
    Main,
    /// From `(x1, z0)` to `(x0, z1)`.
    Anti,
}

#[derive(Debug, Clone)]
pub struct PlateMesh {
    pub n: usize,
    pub split: SplitDiagonal,
    pub elements: Vec<PanelElement>,
    pub collocation_points: Vec<Vec3>,
    /// `(i, j)` square of each element, `i` along X and `j` along Z.
    pub cells: Vec<(usize, usize)>,
}

impl PlateMesh {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.elements.iter().map(|e| e.area()).sum()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlateError {
    #[error("mesh size must be at least 1")]
    EmptyMesh,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("influence of element {j} at collocation point {i}: {source}")]
    Assembly { i: usize, j: usize, source: Box<RobustError> },
    #[error(transparent)]
    Solve(#[from] LuError),
    #[error("solution length {found} does not match {expected} elements")]
    SolutionLength { found: usize, expected: usize },
    #[error("only {found} corner samples in window, need at least 4")]
    InsufficientSamples { found: usize },
    #[error(transparent)]
    Field(#[from] RobustError),
}

pub fn mesh_unit_plate(n: usize) -> Result<PlateMesh, PlateError> {
    mesh_unit_plate_split(n, SplitDiagonal::Main)
}

pub fn mesh_unit_plate_split(n: usize, split: SplitDiagonal) -> Result<PlateMesh, PlateError> {
    if n == 0 {
        return Err(PlateError::EmptyMesh);
    }
    let h = 1.0 / n as f64;
    let mut elements = Vec::with_capacity(2 * n * n);
    let mut cells = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            let (x0, x1) = (i as f64 * h, (i + 1) as f64 * h);
            let (z0, z1) = (j as f64 * h, (j + 1) as f64 * h);
            let a = Vec3::new(x0, 0.0, z0);
            let b = Vec3::new(x1, 0.0, z0);
            let c = Vec3::new(x1, 0.0, z1);
            let d = Vec3::new(x0, 0.0, z1);
            let tris = match split {
                SplitDiagonal::Main => [(b, c, a), (d, a, c)],
                SplitDiagonal::Anti => [(a, b, d), (c, d, b)],
            };
            for (v0, v1, v2) in tris {
                elements.push(PanelElement::from_right_triangle(v0, v1, v2)?);
                cells.push((i, j));
            }
        }
    }
    let collocation_points = elements.iter().map(|e| e.centroid()).collect();
    Ok(PlateMesh {
        n,
        split,
        elements,
        collocation_points,
        cells,
    })
}

#[derive(Debug, Clone)]
pub struct BemSystem {
    pub matrix: DenseMatrix,
    pub rhs: Vec<f64>,
    pub solution: Option<Vec<f64>>,
    pub residual_norm: Option<f64>,
    /// Entries that did not come from the closed forms.
    pub fallback_entries: usize,
}

impl BemSystem {
    pub fn solve(&mut self) -> Result<&[f64], PlateError> {
        let s = solve_crout(&self.matrix, &self.rhs)?;
        self.residual_norm = Some(s.residual_norm);
        Ok(self.solution.insert(s.solution))
    }
}

/// `A_ij` is the potential at collocation point `i` of unit density on element `j`.
pub fn assemble(mesh: &PlateMesh, policy: &EvalPolicy) -> Result<BemSystem, PlateError> {
    let ne = mesh.len();
    let rows: Vec<(Vec<f64>, usize)> = mesh
        .collocation_points
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut row = vec![0.0; ne];
            let mut fallbacks = 0;
            for (j, el) in mesh.elements.iter().enumerate() {
                let r = robust::potential(el, p, policy).map_err(|e| PlateError::Assembly { i, j, source: Box::new(e) })?;
                if r.path != EvalPath::Exact {
                    fallbacks += 1;
                }
                row[j] = r.potential;
            }
            Ok((row, fallbacks))
        })
        .collect::<Result<_, PlateError>>()?;
    let fallback_entries = rows.iter().map(|r| r.1).sum();
    let data = rows.into_iter().flat_map(|r| r.0).collect();
    Ok(BemSystem {
        matrix: DenseMatrix::from_vec(ne, data)?,
        rhs: vec![1.0; ne],
        solution: None,
        residual_norm: None,
        fallback_entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacitanceReport {
    pub n: usize,
    pub n_elements: usize,
    pub cap_over_4pi_eps0: f64,
    pub residual_norm: f64,
}

fn check_len(mesh: &PlateMesh, solution: &[f64]) -> Result<(), PlateError> {
    if solution.len() != mesh.len() {
        return Err(PlateError::SolutionLength {
            found: solution.len(),
            expected: mesh.len(),
        });
    }
    Ok(())
}

/// Total charge `Σ σ_j area_j`, which is `C / 4πε₀` at unit potential.
pub fn capacitance(mesh: &PlateMesh, solution: &[f64], residual_norm: f64) -> Result<CapacitanceReport, PlateError> {
    check_len(mesh, solution)?;
    let q = mesh.elements.iter().zip(solution).map(|(e, s)| e.area() * s).sum();
    Ok(CapacitanceReport {
        n: mesh.n,
        n_elements: mesh.len(),
        cap_over_4pi_eps0: q,
        residual_norm,
    })
}

/// Charge density along the diagonal from the plate corner at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerProfile {
    /// `(r, σ)` sorted by `r`; elements at equal distance are averaged.
    pub samples: Vec<(f64, f64)>,
    pub fit_slope: f64,
    pub fit_intercept: f64,
    pub fit_window: (f64, f64),
}

pub const DEFAULT_FIT_WINDOW: (f64, f64) = (0.05, 0.25);

/// Diagonal squares between the corner and the plate centre.
pub fn corner_band(mesh: &PlateMesh, solution: &[f64]) -> Result<Vec<(f64, f64)>, PlateError> {
    check_len(mesh, solution)?;
    let mut raw: Vec<(f64, f64)> = mesh
        .cells
        .iter()
        .zip(&mesh.collocation_points)
        .zip(solution)
        .filter(|((&(i, j), _), _)| i == j && 2 * i < mesh.n)
        .map(|((_, c), &s)| (c.norm(), s))
        .collect();
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for (r, s) in raw {
        match out.last_mut() {
            Some(last) if (last.0 - r).abs() <= 1e-12 => {
                last.1 += s;
                last.2 += 1;
            }
            _ => out.push((r, s, 1)),
        }
    }
    Ok(out.into_iter().map(|(r, s, k)| (r, s / k as f64)).collect())
}

/// Least-squares fit of `ln σ = a − s ln r` over samples with `r` inside `window`.
pub fn corner_profile(mesh: &PlateMesh, solution: &[f64], window: (f64, f64)) -> Result<CornerProfile, PlateError> {
    let samples = corner_band(mesh, solution)?;
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(r, s)| *r >= window.0 && *r <= window.1 && *s > 0.0)
        .map(|&(r, s)| (r.ln(), s.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(PlateError::InsufficientSamples { found: pts.len() });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    Ok(CornerProfile {
        samples,
        fit_slope: -slope,
        fit_intercept: my - slope * mx,
        fit_window: window,
    })
}

/// Potential and flux of the solved charge distribution.
pub fn field_at(mesh: &PlateMesh, solution: &[f64], p: Vec3, policy: &EvalPolicy) -> Result<Influence, PlateError> {
    check_len(mesh, solution)?;
    let mut acc = Influence::ZERO;
    for (el, &s) in mesh.elements.iter().zip(solution) {
        let r = robust::influence(&el.with_strength(s), p, policy)?;
        acc = acc + r.influence();
    }
    Ok(acc)
}

/// Potential of the solved distribution only.
pub fn potential_at(mesh: &PlateMesh, solution: &[f64], p: Vec3, policy: &EvalPolicy) -> Result<f64, PlateError> {
    check_len(mesh, solution)?;
    let mut acc = 0.0;
    for (el, &s) in mesh.elements.iter().zip(solution) {
        acc += robust::potential(&el.with_strength(s), p, policy)?.potential;
    }
    Ok(acc)
}

/// Mesh, assemble and solve in one go.
#[derive(Debug, Clone)]
pub struct PlateSolution {
    pub mesh: PlateMesh,
    pub system: BemSystem,
    pub sigma: Vec<f64>,
    pub report: CapacitanceReport,
}

pub fn solve_plate(n: usize, split: SplitDiagonal, policy: &EvalPolicy) -> Result<PlateSolution, PlateError> {
    let mesh = mesh_unit_plate_split(n, split)?;
    let mut system = assemble(&mesh, policy)?;
    let sigma = system.solve()?.to_vec();
    let report = capacitance(&mesh, &sigma, system.residual_norm.unwrap_or(0.0))?;
    Ok(PlateSolution {
        mesh,
        system,
        sigma,
        report,
    })
}
