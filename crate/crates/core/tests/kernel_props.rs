use proptest::prelude::*;
use tripanel::kernel::{self, KernelInputs};
use tripanel::oracle::{adaptive_oracle, adaptive_oracle_domain, Domain, OracleOptions};
use tripanel::robust::{self, EvalPolicy};
use tripanel::{Influence, PanelElement, Vec3};

/// Composite tensor Gauss-Legendre over the triangle mapped from the unit
/// square by `x = u`, `z = zM (1 - u) v`. Smooth integrands only.
fn brute_force(z_m: f64, p: Vec3, cells: usize) -> Influence {
    const T: [f64; 4] = [
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_3,
        0.339_981_043_584_856_3,
        0.861_136_311_594_052_6,
    ];
    const W: [f64; 4] = [
        0.347_854_845_137_453_9,
        0.652_145_154_862_546_1,
        0.652_145_154_862_546_1,
        0.347_854_845_137_453_9,
    ];
    let h = 1.0 / cells as f64;
    let mut out = Influence::ZERO;
    for i in 0..cells {
        for j in 0..cells {
            for (a, wa) in T.iter().zip(W) {
                for (b, wb) in T.iter().zip(W) {
                    let u = (i as f64 + 0.5 + 0.5 * a) * h;
                    let v = (j as f64 + 0.5 + 0.5 * b) * h;
                    let q = Vec3::new(u, 0.0, z_m * (1.0 - u) * v);
                    let jac = z_m * (1.0 - u) * wa * wb * 0.25 * h * h;
                    let d = p - q;
                    let r = d.norm();
                    out.potential += jac / r;
                    out.flux += d * (jac / (r * r * r));
                }
            }
        }
    }
    out
}

fn eval(z_m: f64, p: Vec3) -> Influence {
    kernel::influence(&KernelInputs::at(z_m, p)).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn close_inf(a: &Influence, b: &Influence, tol: f64) -> bool {
    close(a.potential, b.potential, tol)
        && close(a.flux.x, b.flux.x, tol)
        && close(a.flux.y, b.flux.y, tol)
        && close(a.flux.z, b.flux.z, tol)
}

fn off_plane() -> impl Strategy<Value = (f64, Vec3)> {
    (0.1f64..10.0, -4.0f64..4.0, prop_oneof![-4.0f64..-0.2, 0.2f64..4.0], -4.0f64..4.0).prop_map(|(z_m, x, y, z)| (z_m, Vec3::new(x, y, z)))
}

/// Points of the plane on the lines carrying the panel edges, or on `X = 1`, clear of the panel.
fn on_edge_lines() -> impl Strategy<Value = (f64, Vec3)> {
    (0.1f64..10.0, 0usize..4, prop_oneof![-3.0f64..-0.1, 1.1f64..4.0]).prop_map(|(z_m, line, t)| {
        let p = match line {
            0 => Vec3::new(t, 0.0, 0.0),
            1 => Vec3::new(0.0, 0.0, t * z_m),
            2 => Vec3::new(t, 0.0, z_m * (1.0 - t)),
            _ => Vec3::new(1.0, 0.0, if t < 0.0 { t } else { t - 1.0 }),
        };
        (z_m, p)
    })
}

#[test]
fn agrees_with_brute_force_integration() {
    for &(z_m, p) in &[
        (1.0, Vec3::new(0.3, 0.5, 0.2)),
        (0.25, Vec3::new(-1.0, 0.4, 2.0)),
        (4.0, Vec3::new(2.0, -1.5, 1.0)),
        (1.0, Vec3::new(1000.0, 0.0, 0.0)),
    ] {
        let k = eval(z_m, p);
        let b = brute_force(z_m, p, 64);
        assert!(close_inf(&k, &b, 1e-9), "zM={z_m} {p}: {k:?} vs {b:?}");
    }
}

#[test]
fn unit_corner_potential_has_closed_value() {
    let v = robust::potential_local(&tripanel::TrianglePrimitive::new(1.0).unwrap(), Vec3::ZERO, &EvalPolicy::default())
        .unwrap()
        .potential;
    assert!((v - 2f64.sqrt() * (1.0 + 2f64.sqrt()).ln()).abs() < 1e-9);
}

#[test]
fn rectangle_is_two_triangles() {
    let p = Vec3::new(0.4, 0.7, 1.1);
    let o = adaptive_oracle_domain(Domain::Rectangle { width: 1.0, height: 2.0 }, p, &OracleOptions::with_tol(1e-12)).unwrap();
    let a = PanelElement::from_right_triangle(Vec3::ZERO, Vec3::X, Vec3::Z * 2.0).unwrap();
    let b = PanelElement::from_right_triangle(Vec3::new(1.0, 0.0, 2.0), Vec3::Z * 2.0, Vec3::X).unwrap();
    let sum = [a, b].iter().fold(Influence::ZERO, |acc, e| {
        acc + robust::influence(e, p, &EvalPolicy::default()).unwrap().influence()
    });
    assert!(close_inf(&sum, &o.influence(), 1e-10), "{sum:?} vs {o:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn matches_oracle((z_m, p) in off_plane()) {
        let o = adaptive_oracle(z_m, p, 1e-11).unwrap();
        prop_assert!(close_inf(&eval(z_m, p), &o.influence(), 1e-9));
    }

    #[test]
    fn edge_lines_match_oracle((z_m, p) in on_edge_lines()) {
        let o = adaptive_oracle(z_m, p, 1e-11).unwrap();
        prop_assert!(close_inf(&eval(z_m, p), &o.influence(), 1e-9), "{:?} vs {:?}", eval(z_m, p), o.influence());
    }

    #[test]
    fn mirror_parity((z_m, p) in off_plane()) {
        let a = eval(z_m, p);
        let b = eval(z_m, Vec3::new(p.x, -p.y, p.z));
        prop_assert!(close(a.potential, b.potential, 1e-13));
        prop_assert!(close(a.flux.x, b.flux.x, 1e-12));
        prop_assert!(close(a.flux.y, -b.flux.y, 1e-12));
        prop_assert!(close(a.flux.z, b.flux.z, 1e-12));
    }

    #[test]
    fn swapping_legs_mirrors_x_and_z((z_m, p) in off_plane()) {
        // The triangle with legs swapped is the same set scaled by zM.
        let a = eval(z_m, p);
        let q = Vec3::new(p.z, p.y, p.x) / z_m;
        let b = eval(1.0 / z_m, q);
        prop_assert!(close(a.potential, b.potential * z_m, 1e-11));
        prop_assert!(close(a.flux.x, b.flux.z, 1e-11));
        prop_assert!(close(a.flux.z, b.flux.x, 1e-11));
        prop_assert!(close(a.flux.y, b.flux.y, 1e-11));
    }

    #[test]
    fn positive_and_bounded((z_m, p) in off_plane()) {
        let i = eval(z_m, p);
        let area = 0.5 * z_m;
        let verts = [Vec3::ZERO, Vec3::X, Vec3::Z * z_m];
        let dmax = verts.iter().map(|v| p.distance(*v)).fold(0.0, f64::max);
        prop_assert!(i.potential >= area / dmax * (1.0 - 1e-12));
        prop_assert!(i.potential <= area / p.y.abs() * (1.0 + 1e-12));
        prop_assert!(i.flux.y.signum() == p.y.signum());
    }

    #[test]
    fn monopole_limit(z_m in 0.1f64..10.0, dir in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)) {
        let d = Vec3::new(dir.0, dir.1, dir.2);
        prop_assume!(d.norm() > 0.1);
        let c = Vec3::new(1.0 / 3.0, 0.0, z_m / 3.0);
        let p = c + d.normalized() * 1e5;
        let area = 0.5 * z_m;
        let i = eval(z_m, p);
        prop_assert!(close(i.potential, area / 1e5, 1e-8));
    }

    #[test]
    fn gradient_of_potential((z_m, p) in off_plane()) {
        let h = 1e-5;
        let phi = |q: Vec3| eval(z_m, q).potential;
        let fd = Vec3::new(
            phi(p - Vec3::X * h) - phi(p + Vec3::X * h),
            phi(p - Vec3::Y * h) - phi(p + Vec3::Y * h),
            phi(p - Vec3::Z * h) - phi(p + Vec3::Z * h),
        ) / (2.0 * h);
        let f = eval(z_m, p).flux;
        prop_assert!((f - fd).norm() < 1e-6 * f.norm());
    }

    #[test]
    fn scaled_rotated_element_transforms(
        (z_m, p) in off_plane(),
        s in 0.01f64..100.0,
        angles in (0.0f64..std::f64::consts::TAU, 0.0f64..std::f64::consts::TAU),
        origin in (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0),
    ) {
        let (ca, sa, cb, sb) = (angles.0.cos(), angles.0.sin(), angles.1.cos(), angles.1.sin());
        let rot = |v: Vec3| {
            let v = Vec3::new(ca * v.x - sa * v.y, sa * v.x + ca * v.y, v.z);
            Vec3::new(v.x, cb * v.y - sb * v.z, sb * v.y + cb * v.z)
        };
        let o = Vec3::new(origin.0, origin.1, origin.2);
        let el = PanelElement::from_right_triangle(o, o + rot(Vec3::X) * s, o + rot(Vec3::Z) * (s * z_m)).unwrap();
        let g = robust::influence(&el, o + rot(p) * s, &EvalPolicy::default()).unwrap();
        let l = eval(z_m, p);
        prop_assert!(close(g.potential, l.potential * s, 1e-9 * s.max(1.0)));
        let f = rot(l.flux);
        prop_assert!((g.flux - f).max_abs() <= 1e-9 * f.max_abs().max(1.0));
    }

    #[test]
    fn four_children_sum_to_parent((z_m, p) in off_plane()) {
        let v = [Vec3::ZERO, Vec3::X, Vec3::Z * z_m];
        let m = |a: usize, b: usize| (v[a] + v[b]) * 0.5;
        let kids = [
            [v[0], m(0, 1), m(0, 2)],
            [m(0, 1), v[1], m(1, 2)],
            [m(0, 2), m(1, 2), v[2]],
            [m(1, 2), m(0, 2), m(0, 1)],
        ];
        let sum = kids.iter().fold(Influence::ZERO, |acc, t| {
            let e = PanelElement::from_right_triangle(t[0], t[1], t[2]).unwrap();
            acc + robust::influence(&e, p, &EvalPolicy::default()).unwrap().influence()
        });
        prop_assert!(close_inf(&sum, &eval(z_m, p), 1e-11));
    }
}
