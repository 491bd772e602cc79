//! Fallback-aware influence evaluation.
//!
//! A field point is classified against the panel first. Points away from
//! corners and edges go through the closed forms; the result is checked
//! against elementary bounds on `∫ dA/r`. Anything special, failing or out of
//! bounds is recomputed with the adaptive oracle, and every reason is
//! recorded as an [`ApproxFlag`].

use crate::geometry::{PanelElement, TrianglePrimitive};
use crate::kernel::{self, Influence, KernelError, KernelInputs};
use crate::oracle::{adaptive_oracle_domain, adaptive_potential, Domain, OracleError, OracleOptions};
use crate::quadrature::centroid_influence;
use crate::vec3::Vec3;
use std::fmt;
use thiserror::Error;

/// Relative slack on the bound checks.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FarFieldSwitch {
    Off,
    /// Multiples of the longest panel side, measured from the centroid.
    Threshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPolicy {
    /// Distances below this (normalized units) are treated as zero by the fallback.
    pub distance_floor: f64,
    /// Corner and edge neighbourhood routed to the fallback.
    pub special_band: f64,
    pub far_field: FarFieldSwitch,
    pub fallback_tol: f64,
}

impl Default for EvalPolicy {
    fn default() -> Self {
        Self {
            distance_floor: 1e-8,
            special_band: 1e-6,
            far_field: FarFieldSwitch::Off,
            fallback_tol: 1e-9,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("distance floor must be positive and below the special band")]
    Floor,
    #[error("far-field threshold must be at least 2")]
    Threshold,
    #[error("fallback tolerance must be in [1e-12, 1)")]
    Tolerance,
}

impl EvalPolicy {
    /// Point-source switch at 20 longest sides, as used for timing studies.
    pub fn far_field_default() -> Self {
        Self {
            far_field: FarFieldSwitch::Threshold(20.0),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.distance_floor) || !ok(self.special_band) || self.distance_floor >= self.special_band {
            return Err(PolicyError::Floor);
        }
        if let FarFieldSwitch::Threshold(t) = self.far_field {
            if !(t.is_finite() && t >= 2.0) {
                return Err(PolicyError::Threshold);
            }
        }
        if !(self.fallback_tol.is_finite() && (1e-12..1.0).contains(&self.fallback_tol)) {
            return Err(PolicyError::Tolerance);
        }
        Ok(())
    }
}

/// Corners are `(0,0,0)`, `(1,0,0)`, `(0,0,zM)`; edge `i` joins corner `i` to
/// corner `i+1`, so edge 1 is the hypotenuse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocationKind {
    Generic,
    NearCorner(usize),
    NearEdge(usize),
    OnPlaneInside,
    OnPlaneOutside,
    FarField,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocationClass {
    pub kind: LocationKind,
    /// Distance that decided the class: to the corner, edge or plane, to
    /// the centroid for far-field points, and to the panel otherwise.
    pub distance_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FlagCode {
    CornerLimit,
    EdgeLimit,
    BranchCut,
    RoundOff,
    NonFiniteResult,
    NegativePotential,
    FallbackQuadrature,
    FarFieldPointSource,
}

impl FlagCode {
    pub fn name(self) -> &'static str {
        match self {
            FlagCode::CornerLimit => "corner-limit",
            FlagCode::EdgeLimit => "edge-limit",
            FlagCode::BranchCut => "branch-cut",
            FlagCode::RoundOff => "round-off",
            FlagCode::NonFiniteResult => "non-finite",
            FlagCode::NegativePotential => "negative-potential",
            FlagCode::FallbackQuadrature => "fallback-quadrature",
            FlagCode::FarFieldPointSource => "far-field-point-source",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApproxFlag {
    pub code: FlagCode,
    pub detail: &'static str,
}

impl fmt::Display for ApproxFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.code.name(), self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalPath {
    Exact,
    Fallback,
    FarFieldApprox,
}

impl EvalPath {
    pub fn name(self) -> &'static str {
        match self {
            EvalPath::Exact => "exact",
            EvalPath::Fallback => "fallback",
            EvalPath::FarFieldApprox => "far-field",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceResult {
    pub potential: f64,
    pub flux: Vec3,
    pub path: EvalPath,
    pub flags: Vec<ApproxFlag>,
    pub imag_residue: f64,
}

impl InfluenceResult {
    pub fn influence(&self) -> Influence {
        Influence {
            potential: self.potential,
            flux: self.flux,
        }
    }

    /// Flags joined with `;`, empty for exact results.
    pub fn flag_string(&self) -> String {
        self.flags.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(";")
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RobustError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("non-finite field point")]
    InvalidPoint,
    #[error("unresolvable evaluation at {point} ({kind:?}): {source}")]
    UnresolvableEvaluation {
        point: Vec3,
        kind: LocationKind,
        source: OracleError,
    },
}

fn corners(prim: &TrianglePrimitive) -> [Vec3; 3] {
    prim.vertices()
}

/// Closest point of segment `ab` to `p`.
fn closest_on_segment(p: Vec3, a: Vec3, b: Vec3) -> Vec3 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm_squared()).clamp(0.0, 1.0);
    a + ab * t
}

/// Distance from a local point to the closed triangle.
pub fn distance_to_panel(prim: &TrianglePrimitive, p: Vec3) -> f64 {
    if p.x >= 0.0 && p.z >= 0.0 && prim.hypotenuse_value(p.x, p.z) <= 0.0 {
        return p.y.abs();
    }
    let c = corners(prim);
    (0..3)
        .map(|i| p.distance(closest_on_segment(p, c[i], c[(i + 1) % 3])))
        .fold(f64::INFINITY, f64::min)
}

pub fn classify_location(prim: &TrianglePrimitive, p: Vec3, policy: &EvalPolicy) -> LocationClass {
    let c = corners(prim);
    let band = policy.special_band;
    if let FarFieldSwitch::Threshold(t) = policy.far_field {
        let d = p.distance(prim.centroid());
        if d > t * prim.longest_side() {
            return LocationClass {
                kind: LocationKind::FarField,
                distance_scale: d,
            };
        }
    }
    let (ci, cd) = nearest(c.map(|v| p.distance(v)));
    if cd < band {
        return LocationClass {
            kind: LocationKind::NearCorner(ci),
            distance_scale: cd,
        };
    }
    let (ei, ed) = nearest([0, 1, 2].map(|i| p.distance(closest_on_segment(p, c[i], c[(i + 1) % 3]))));
    if ed < band {
        return LocationClass {
            kind: LocationKind::NearEdge(ei),
            distance_scale: ed,
        };
    }
    let ay = p.y.abs();
    if ay < band {
        let kind = if prim.contains_in_plane(p.x, p.z) {
            LocationKind::OnPlaneInside
        } else {
            LocationKind::OnPlaneOutside
        };
        return LocationClass { kind, distance_scale: ay };
    }
    LocationClass {
        kind: LocationKind::Generic,
        distance_scale: distance_to_panel(prim, p),
    }
}

fn nearest(d: [f64; 3]) -> (usize, f64) {
    let mut best = (0, d[0]);
    for (i, &v) in d.iter().enumerate().skip(1) {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

fn kernel_flag(e: &KernelError) -> ApproxFlag {
    let code = match e {
        KernelError::BranchAmbiguity { .. } | KernelError::ImagResidue { .. } => FlagCode::BranchCut,
        KernelError::NegativePotential { .. } => FlagCode::NegativePotential,
        _ => FlagCode::NonFiniteResult,
    };
    ApproxFlag { code, detail: e.term() }
}

/// Checks `area/dmax ≤ Φ ≤ area/dmin` and `|F| ≤ area/dmin²`.
fn within_bounds(prim: &TrianglePrimitive, p: Vec3, inf: &Influence) -> Result<(), &'static str> {
    let area = prim.area();
    let dmax = corners(prim).iter().map(|&v| p.distance(v)).fold(0.0, f64::max);
    let dmin = distance_to_panel(prim, p);
    if inf.potential < area / dmax * (1.0 - BOUND_SLACK) {
        return Err("potential-low");
    }
    if dmin > 0.0 {
        if inf.potential > area / dmin * (1.0 + BOUND_SLACK) {
            return Err("potential-high");
        }
        if inf.flux.norm() > area / (dmin * dmin) * (1.0 + BOUND_SLACK) {
            return Err("flux-high");
        }
    }
    Ok(())
}

/// Moves the point onto a corner, edge or the plane when closer than the floor.
fn snap(prim: &TrianglePrimitive, p: Vec3, floor: f64) -> Vec3 {
    let c = corners(prim);
    for &v in &c {
        if p.distance(v) < floor {
            return v;
        }
    }
    for i in 0..3 {
        let q = closest_on_segment(p, c[i], c[(i + 1) % 3]);
        if p.distance(q) < floor {
            return q;
        }
    }
    if p.y.abs() < floor {
        return Vec3::new(p.x, 0.0, p.z);
    }
    p
}

fn fallback(
    prim: &TrianglePrimitive,
    p: Vec3,
    kind: LocationKind,
    policy: &EvalPolicy,
    want_flux: bool,
    flags: &mut Vec<ApproxFlag>,
) -> Result<Influence, RobustError> {
    let q = snap(prim, p, policy.distance_floor);
    let domain = Domain::Triangle { z_m: prim.z_m() };
    let opts = OracleOptions::with_tol(policy.fallback_tol);
    let unresolved = |source| RobustError::UnresolvableEvaluation { point: p, kind, source };
    flags.push(ApproxFlag {
        code: FlagCode::FallbackQuadrature,
        detail: "adaptive",
    });
    if !want_flux {
        let r = adaptive_potential(domain, q, &opts).map_err(unresolved)?;
        return Ok(Influence {
            potential: r.potential,
            flux: Vec3::ZERO,
        });
    }
    match adaptive_oracle_domain(domain, q, &opts) {
        Ok(r) => Ok(r.influence()),
        Err(OracleError::NoConvergence { partial, .. }) => {
            let pot = adaptive_potential(domain, q, &opts).map_err(unresolved)?;
            flags.push(ApproxFlag {
                code: FlagCode::FallbackQuadrature,
                detail: "flux-unconverged",
            });
            Ok(Influence {
                potential: pot.potential,
                flux: partial.flux,
            })
        }
        Err(e) => Err(unresolved(e)),
    }
}

fn evaluate(prim: &TrianglePrimitive, p: Vec3, policy: &EvalPolicy, want_flux: bool) -> Result<InfluenceResult, RobustError> {
    policy.validate()?;
    if !p.is_finite() {
        return Err(RobustError::InvalidPoint);
    }
    let class = classify_location(prim, p, policy);
    let mut flags = Vec::new();
    match class.kind {
        LocationKind::FarField => {
            let inf = centroid_influence(prim.z_m(), p).expect("far-field point is away from the centroid");
            return Ok(InfluenceResult {
                potential: inf.potential,
                flux: if want_flux { inf.flux } else { Vec3::ZERO },
                path: EvalPath::FarFieldApprox,
                flags: vec![ApproxFlag {
                    code: FlagCode::FarFieldPointSource,
                    detail: "centroid",
                }],
                imag_residue: 0.0,
            });
        }
        LocationKind::NearCorner(_) => flags.push(ApproxFlag {
            code: FlagCode::CornerLimit,
            detail: "corner",
        }),
        LocationKind::NearEdge(_) => flags.push(ApproxFlag {
            code: FlagCode::EdgeLimit,
            detail: "edge",
        }),
        LocationKind::Generic | LocationKind::OnPlaneInside | LocationKind::OnPlaneOutside => {
            let k = KernelInputs::at(prim.z_m(), p);
            let exact = if want_flux {
                kernel::influence(&k)
            } else {
                kernel::potential(&k).map(|potential| Influence {
                    potential,
                    flux: Vec3::ZERO,
                })
            };
            match exact {
                Ok(inf) => match within_bounds(prim, p, &inf) {
                    Ok(()) => {
                        return Ok(InfluenceResult {
                            potential: inf.potential,
                            flux: inf.flux,
                            path: EvalPath::Exact,
                            flags,
                            imag_residue: 0.0,
                        })
                    }
                    Err(detail) => flags.push(ApproxFlag {
                        code: FlagCode::RoundOff,
                        detail,
                    }),
                },
                Err(e) => flags.push(kernel_flag(&e)),
            }
        }
    }
    let inf = fallback(prim, p, class.kind, policy, want_flux, &mut flags)?;
    Ok(InfluenceResult {
        potential: inf.potential,
        flux: inf.flux,
        path: EvalPath::Fallback,
        flags,
        imag_residue: 0.0,
    })
}

/// Influence of the unit source on the normalized triangle at a local point.
pub fn influence_local(prim: &TrianglePrimitive, p: Vec3, policy: &EvalPolicy) -> Result<InfluenceResult, RobustError> {
    evaluate(prim, p, policy, true)
}

/// As [`influence_local`] with the flux left at zero and never computed.
pub fn potential_local(prim: &TrianglePrimitive, p: Vec3, policy: &EvalPolicy) -> Result<InfluenceResult, RobustError> {
    evaluate(prim, p, policy, false)
}

/// Influence of a placed panel at a global point, scaled by its strength.
pub fn influence(element: &PanelElement, p: Vec3, policy: &EvalPolicy) -> Result<InfluenceResult, RobustError> {
    let frame = &element.frame;
    let mut r = influence_local(&element.primitive, frame.point_to_local(p), policy)?;
    r.potential *= frame.scale() * element.strength;
    r.flux = frame.vector_to_global(r.flux) * element.strength;
    Ok(r)
}

/// Potential of a placed panel at a global point; the flux field stays zero.
pub fn potential(element: &PanelElement, p: Vec3, policy: &EvalPolicy) -> Result<InfluenceResult, RobustError> {
    let frame = &element.frame;
    let mut r = potential_local(&element.primitive, frame.point_to_local(p), policy)?;
    r.potential *= frame.scale() * element.strength;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::adaptive_oracle;

    fn prim(z_m: f64) -> TrianglePrimitive {
        TrianglePrimitive::new(z_m).unwrap()
    }

    #[test]
    fn classification_examples() {
        let pol = EvalPolicy::default();
        let t = prim(1.0);
        assert_eq!(classify_location(&t, Vec3::ZERO, &pol).kind, LocationKind::NearCorner(0));
        assert_eq!(
            classify_location(&t, Vec3::new(0.5, 0.0, 0.25), &pol).kind,
            LocationKind::OnPlaneInside
        );
        assert_eq!(
            classify_location(&t, Vec3::new(2.0, 0.0, 2.0), &pol).kind,
            LocationKind::OnPlaneOutside
        );
        assert_eq!(
            classify_location(&t, Vec3::new(0.5, 1e-7, 0.5), &pol).kind,
            LocationKind::NearEdge(1)
        );
        assert_eq!(classify_location(&t, Vec3::new(0.3, 0.5, 0.3), &pol).kind, LocationKind::Generic);
        let ff = EvalPolicy::far_field_default();
        assert_eq!(classify_location(&t, Vec3::splat(100.0), &ff).kind, LocationKind::FarField);
        assert_eq!(classify_location(&t, Vec3::splat(100.0), &pol).kind, LocationKind::Generic);
    }

    #[test]
    fn generic_point_is_exact_and_matches_oracle() {
        let t = prim(2.0);
        let p = Vec3::new(0.4, 0.3, -0.2);
        let r = influence_local(&t, p, &EvalPolicy::default()).unwrap();
        assert_eq!(r.path, EvalPath::Exact);
        assert!(r.flags.is_empty());
        let o = adaptive_oracle(2.0, p, 1e-11).unwrap();
        assert!((r.potential - o.potential).abs() < 1e-9);
        assert!((r.flux - o.flux).max_abs() < 1e-9);
    }

    #[test]
    fn corners_and_edges_fall_back_with_flags() {
        let t = prim(1.0);
        let pol = EvalPolicy::default();
        for (p, code) in [
            (Vec3::ZERO, FlagCode::CornerLimit),
            (Vec3::X, FlagCode::CornerLimit),
            (Vec3::Z, FlagCode::CornerLimit),
            (Vec3::new(0.5, 0.0, 0.0), FlagCode::EdgeLimit),
            (Vec3::new(0.5, 0.0, 0.5), FlagCode::EdgeLimit),
            (Vec3::new(0.0, 0.0, 0.5), FlagCode::EdgeLimit),
        ] {
            let r = influence_local(&t, p, &pol).unwrap();
            assert_eq!(r.path, EvalPath::Fallback);
            assert_eq!(r.flags[0].code, code);
            assert!(r.flags.iter().any(|f| f.code == FlagCode::FallbackQuadrature));
            assert!(r.potential.is_finite() && r.potential > 0.0);
            assert!(r.flux.is_finite());
        }
    }

    #[test]
    fn corner_potential_matches_closed_form_limit() {
        // At the right-angle corner of the unit isoceles triangle the
        // potential is ∫0^{π/2} r(θ) dθ with r(θ) = 1/(cos θ + sin θ),
        // which integrates to √2 ln(1 + √2).
        let r = influence_local(&prim(1.0), Vec3::ZERO, &EvalPolicy::default()).unwrap();
        let exact = 2f64.sqrt() * (1.0 + 2f64.sqrt()).ln();
        assert!((r.potential - exact).abs() < 1e-9, "{} {}", r.potential, exact);
    }

    #[test]
    fn far_field_uses_point_source() {
        let t = prim(1.0);
        let p = Vec3::splat(100.0);
        let r = influence_local(&t, p, &EvalPolicy::far_field_default()).unwrap();
        assert_eq!(r.path, EvalPath::FarFieldApprox);
        assert_eq!(r.flags.len(), 1);
        let exact = kernel::potential(&KernelInputs::at(1.0, p)).unwrap();
        assert!((r.potential - exact).abs() / exact < 1e-4);
    }

    #[test]
    fn global_scaling_and_strength() {
        let el = PanelElement::from_right_triangle(Vec3::new(1.0, 1.0, 0.0), Vec3::new(1.0, 3.0, 0.0), Vec3::new(3.0, 1.0, 0.0))
            .unwrap()
            .with_strength(0.5);
        let p = Vec3::new(1.6, 1.4, 0.9);
        let r = influence(&el, p, &EvalPolicy::default()).unwrap();
        let local = el.frame.point_to_local(p);
        let k = kernel::influence(&KernelInputs::at(1.0, local)).unwrap();
        assert!((r.potential - 0.5 * 2.0 * k.potential).abs() < 1e-13);
        let g = el.frame.vector_to_global(k.flux) * 0.5;
        assert!((r.flux - g).max_abs() < 1e-13);
    }

    #[test]
    fn potential_only_agrees() {
        let t = prim(3.0);
        let pol = EvalPolicy::default();
        for p in [
            Vec3::new(0.2, 0.0, 0.4),
            Vec3::new(-1.0, 0.5, 2.0),
            Vec3::ZERO,
            Vec3::new(0.5, 0.0, 0.0),
        ] {
            let a = influence_local(&t, p, &pol).unwrap();
            let b = potential_local(&t, p, &pol).unwrap();
            assert_eq!(a.path, b.path);
            assert!((a.potential - b.potential).abs() <= 1e-9 * a.potential);
            assert_eq!(b.flux, Vec3::ZERO);
        }
    }

    #[test]
    fn policy_validation() {
        let mut p = EvalPolicy::default();
        assert!(p.validate().is_ok());
        p.distance_floor = 1e-5;
        assert_eq!(p.validate(), Err(PolicyError::Floor));
        p = EvalPolicy {
            far_field: FarFieldSwitch::Threshold(1.0),
            ..EvalPolicy::default()
        };
        assert_eq!(p.validate(), Err(PolicyError::Threshold));
        p = EvalPolicy {
            fallback_tol: 1e-13,
            ..EvalPolicy::default()
        };
        assert_eq!(p.validate(), Err(PolicyError::Tolerance));
        assert!(influence_local(&prim(1.0), Vec3::new(f64::NAN, 0.0, 0.0), &EvalPolicy::default()).is_err());
    }
}
