//! Trace, field and far-field evaluation.

use hnabem::basis::{build_standard_space, BoundaryTag, HpOptions};
use hnabem::geometry::{add, distance_to_boundary, inside_any, physical_optics, scale, Arc, Point, Scene};
use hnabem::postprocess::{
    domain_field, far_field, l2_relative_error, neumann_trace, FieldEvaluator, TraceEvaluator, TraceSampler,
};
use hnabem::quadrature::QuadSettings;
use hnabem::scenes;
use hnabem::solver::{assemble_standard_oracle, solve, solve_hna, Solution};
use hnabem::HnaError;
use num_complex::Complex64;
use std::f64::consts::PI;

struct Scaled<'a> {
    inner: &'a dyn TraceSampler,
    c: f64,
}

impl TraceSampler for Scaled<'_> {
    fn scene(&self) -> &Scene {
        self.inner.scene()
    }
    fn trace(&self, b: usize, piece: usize, arc: Arc) -> Complex64 {
        self.inner.trace(b, piece, arc) * self.c
    }
    fn breakpoints(&self, b: usize, piece: usize) -> Vec<Arc> {
        self.inner.breakpoints(b, piece)
    }
}

fn zeroed(sol: &Solution) -> Solution {
    let mut z = sol.clone();
    z.coefficients.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
    z
}

/// Points offset by `delta` along the outward normal at piece midpoints and quarter points.
fn offset_points(scene: &Scene, delta: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for b in 0..scene.n_boundaries() {
        let pl = scene.boundary(b);
        for j in 0..pl.n_pieces() {
            for u in [0.25, 0.5, 0.75] {
                let x = scene.point(b, j, Arc::new(u * pl.lengths[j], pl.lengths[j]));
                out.push(add(x.pos, scale(x.normal, delta)));
            }
        }
    }
    out
}

#[test]
fn zero_coefficients_leave_physical_optics() {
    let scene = scenes::exp1(8.0).unwrap();
    let sol = zeroed(&solve_hna(&scene, 2, QuadSettings::default()).unwrap());
    for i in 0..30 {
        let s = (i as f64 + 0.3) / 30.0 * scene.polygon.perimeter();
        assert_eq!(neumann_trace(&sol, BoundaryTag::Big, s).unwrap(), physical_optics(&scene, s).unwrap());
    }
    assert_eq!(neumann_trace(&sol, BoundaryTag::Small, 0.4).unwrap(), Complex64::new(0.0, 0.0));

    let lone = scenes::single(8.0).unwrap();
    let space = build_standard_space(&lone, 8.0, &HpOptions::defaults(2)).unwrap();
    let std_sol = solve(&assemble_standard_oracle(&lone, &space, 2, QuadSettings::default()).unwrap()).unwrap();
    let z = zeroed(&std_sol);
    for th in [0.0, 1.0, 3.0] {
        assert_eq!(far_field(&z, th), Complex64::new(0.0, 0.0));
    }
}

#[test]
fn relative_error_identities() {
    let scene = scenes::exp1(8.0).unwrap();
    let sol = solve_hna(&scene, 2, QuadSettings::default()).unwrap();
    let ev = TraceEvaluator::new(&sol);
    let st = QuadSettings::default();
    assert_eq!(l2_relative_error(&ev, &ev, &st).unwrap(), 0.0);
    let twice = Scaled { inner: &ev, c: 2.0 };
    assert!((l2_relative_error(&twice, &ev, &st).unwrap() - 1.0).abs() < 1e-14);
    let none = Scaled { inner: &ev, c: 0.0 };
    assert_eq!(l2_relative_error(&ev, &none, &st).unwrap_err(), HnaError::ZeroReference);
}

#[test]
fn relative_error_stable_under_quadrature_doubling() {
    let scene = scenes::exp1(10.0).unwrap();
    let st = QuadSettings::default();
    let a = solve_hna(&scene, 3, st).unwrap();
    let b = solve_hna(&scene, 5, st).unwrap();
    let (ea, eb) = (TraceEvaluator::new(&a), TraceEvaluator::new(&b));
    let e1 = l2_relative_error(&ea, &eb, &st).unwrap();
    let e2 = l2_relative_error(&ea, &eb, &st.refined()).unwrap();
    assert!((e1 - e2).abs() <= 1e-3 * e2, "{e1} vs {e2}");
}

#[test]
fn boundary_residual_decays_with_p() {
    let scene = scenes::exp1(10.0).unwrap();
    let pts = offset_points(&scene, 1e-3);
    let res: Vec<f64> = [2, 4, 6]
        .iter()
        .map(|&p| {
            let sol = solve_hna(&scene, p, QuadSettings::default()).unwrap();
            let ev = TraceEvaluator::new(&sol);
            let f = FieldEvaluator::new(&ev, &sol.settings);
            pts.iter().map(|&x| f.total(x).unwrap().norm()).sum::<f64>() / pts.len() as f64
        })
        .collect();
    println!("mean |u_N| at 1e-3 offset: {res:?}");
    for w in res.windows(2) {
        assert!(w[1] <= 3.0 * w[0], "{res:?}");
    }
    assert!(res[2] < res[0]);
    assert!(res[2] < 0.05);
}

#[test]
fn helmholtz_finite_difference_residual() {
    let k = 8.0;
    let scene = scenes::exp1(k).unwrap();
    let sol = solve_hna(&scene, 6, QuadSettings::default()).unwrap();
    let ev = TraceEvaluator::new(&sol);
    let f = FieldEvaluator::new(&ev, &sol.settings);
    let lambda = 2.0 * PI / k;
    let candidates = [[-2.5, 0.3], [-1.0, 2.2], [7.0, 0.5], [2.0, 4.0], [-0.6, -3.0], [3.0, -3.5]];
    let mut checked = 0;
    for x in candidates {
        if inside_any(&scene, x) || distance_to_boundary(&scene, x) <= 0.5 * lambda {
            continue;
        }
        let u = |p: Point| f.total(p).unwrap();
        let lap = |h: f64| {
            (u([x[0] + h, x[1]]) + u([x[0] - h, x[1]]) + u([x[0], x[1] + h]) + u([x[0], x[1] - h]) - u(x) * 4.0) / (h * h)
        };
        let (h1, h2) = (0.02 / k, 0.01 / k);
        // Richardson extrapolation of the second-order stencil
        let l = (lap(h2) * 4.0 - lap(h1)) / 3.0;
        let umax = [x, [x[0] + h1, x[1]], [x[0], x[1] + h1]].iter().map(|&p| u(p).norm()).fold(0.0, f64::max);
        let r = (l + u(x) * (k * k)).norm();
        assert!(r <= 1e-3 * k * k * umax, "x = {x:?}: {r:.3e}");
        checked += 1;
    }
    assert!(checked >= 4);
}

#[test]
fn near_field_matches_far_field() {
    // small polygonal disc so that kr = 200 lies well inside the Fraunhofer zone
    let k = 2.0;
    let scene = scenes::unit_circle(k).unwrap();
    let hp = HpOptions { graded: false, ..HpOptions::defaults(4) };
    let space = build_standard_space(&scene, k, &hp).unwrap();
    let sol = solve(&assemble_standard_oracle(&scene, &space, 4, QuadSettings::default()).unwrap()).unwrap();
    let ev = TraceEvaluator::new(&sol);
    let f = FieldEvaluator::new(&ev, &sol.settings);
    let r = 200.0 / k;
    for th in [0.0, 0.7, 1.6, PI, 4.4] {
        let us = f.scattered([r * th.cos(), r * th.sin()]).unwrap();
        let approx = us * 2.0 * (2.0 * PI * k * r).sqrt() * Complex64::from_polar(1.0, -(k * r + PI / 4.0));
        let uinf = f.far_field(th);
        assert!((approx - uinf).norm() <= 0.02 * uinf.norm(), "θ = {th}: {approx} vs {uinf}");
    }
}

#[test]
fn mirror_symmetric_far_field() {
    let s0 = scenes::single(5.0).unwrap();
    let scene = Scene::new(s0.polygon.clone(), vec![], 5.0, [1.0, 0.0], None).unwrap();
    let sol = solve_hna(&scene, 4, QuadSettings::default()).unwrap();
    for th in [0.3, 1.1, 2.0, 2.9] {
        let (a, b) = (far_field(&sol, th).norm(), far_field(&sol, -th).norm());
        assert!((a - b).abs() <= 1e-8 * a.max(b), "θ = {th}");
    }
}

#[test]
fn points_on_or_inside_scatterers_rejected() {
    let scene = scenes::exp1(8.0).unwrap();
    let sol = solve_hna(&scene, 1, QuadSettings::default()).unwrap();
    assert_eq!(domain_field(&sol, [1.0, 0.0]).unwrap_err(), HnaError::PointInsideScatterer);
    assert_eq!(domain_field(&sol, [-1e-7, 0.3]).unwrap_err(), HnaError::PointInsideScatterer);
    let c = scene.obstacles[0].boundary.centroid();
    assert_eq!(domain_field(&sol, c).unwrap_err(), HnaError::PointInsideScatterer);
    assert!(domain_field(&sol, [-1e-5, 0.3]).is_ok());
}
