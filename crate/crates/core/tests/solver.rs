//! Assembly and solve invariants of the coupled and standard systems.

use hnabem::basis::{
    build_coupled_space, build_hna_space, build_hp_space, build_standard_space, default_alpha, BoundaryTag, HnaOptions,
    HpOptions,
};
use hnabem::geometry::{build_obstacle, build_polygon, Point, Scene};
use hnabem::kernels::LayerKernel;
use hnabem::postprocess::{far_field, l2_relative_error, neumann_trace, TraceEvaluator};
use hnabem::quadrature::{galerkin_entry, QuadContext, QuadSettings};
use hnabem::scenes;
use hnabem::solver::{assemble, assemble_standard_oracle, reference_solution, solve, solve_hna, SolutionDump};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn coupled(scene: &Scene, p: usize) -> hnabem::basis::BasisSpace {
    build_coupled_space(scene, &HnaOptions::defaults(p), &HpOptions::defaults(p)).unwrap()
}

/// Relative agreement, measured against the entry or, for entries far below
/// their natural size, a floor of `1e-8·‖φ_i‖‖φ_j‖`.
fn entry_close(a: Complex64, b: Complex64, scale: f64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1e-8 * scale)
}

fn translate(scene: &Scene, t: Point) -> Scene {
    let mv = |v: &Vec<Point>| v.iter().map(|p| [p[0] + t[0], p[1] + t[1]]).collect::<Vec<_>>();
    let poly = build_polygon(&mv(&scene.polygon.boundary.vertices)).unwrap();
    let obs = scene.obstacles.iter().map(|o| build_obstacle(&mv(&o.boundary.vertices)).unwrap()).collect();
    Scene::new(poly, obs, scene.k, scene.d, Some(scene.eta)).unwrap()
}

#[test]
fn residual_and_linearity() {
    let scene = scenes::exp1(10.0).unwrap();
    let space = coupled(&scene, 3);
    let mut sys = assemble(&scene, &space, 3, QuadSettings::default()).unwrap();
    let sol = solve(&sys).unwrap();
    assert!(sol.residual <= 1e-8, "residual {:.3e}", sol.residual);
    assert!(sol.rcond > 0.0 && sol.rcond <= 1.0);
    for v in sys.rhs.iter_mut() {
        *v *= 2.0;
    }
    let twice = solve(&sys).unwrap();
    for (a, b) in sol.coefficients.iter().zip(&twice.coefficients) {
        assert_eq!(*a * 2.0, *b);
    }
}

#[test]
fn block_consistency_with_empty_obstacle_set() {
    let k = 10.0;
    let p = 3;
    let full = scenes::exp1(k).unwrap();
    let lone = scenes::single(k).unwrap();
    let settings = QuadSettings::default();
    let a = assemble(&full, &coupled(&full, p), p, settings).unwrap();
    let lone_space = build_hna_space(&lone.polygon, k, &HnaOptions::defaults(p)).unwrap();
    let b = assemble(&lone, &lone_space, p, settings).unwrap();
    assert_eq!(b.n_dofs(), a.n_big);
    for i in a.big_range() {
        for j in a.big_range() {
            let (x, y) = (a.matrix[(i, j)], b.matrix[(i, j)]);
            assert!((x - y).norm() <= 1e-13 * y.norm().max(1e-300), "({i},{j}) {x} vs {y}");
        }
    }
}

#[test]
fn galilean_phase() {
    let t = [1.7, -0.9];
    for scene in [scenes::single(6.0).unwrap(), scenes::exp1(6.0).unwrap()] {
        let moved = translate(&scene, t);
        let a = solve_hna(&scene, 3, QuadSettings::default()).unwrap();
        let b = solve_hna(&moved, 3, QuadSettings::default()).unwrap();
        let phase = Complex64::from_polar(1.0, scene.k * (scene.d[0] * t[0] + scene.d[1] * t[1]));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let s = rng.gen_range(0.0..scene.polygon.perimeter());
            let (x, y) = (neumann_trace(&a, BoundaryTag::Big, s).unwrap(), neumann_trace(&b, BoundaryTag::Big, s).unwrap());
            assert!((x * phase - y).norm() <= 1e-8 * x.norm().max(1.0), "s = {s}");
        }
        if !scene.obstacles.is_empty() {
            let s = 0.37 * scene.small_perimeter();
            let (x, y) = (neumann_trace(&a, BoundaryTag::Small, s).unwrap(), neumann_trace(&b, BoundaryTag::Small, s).unwrap());
            assert!((x * phase - y).norm() <= 1e-8 * x.norm().max(1.0));
        }
    }
}

#[test]
fn obstacle_order_does_not_matter() {
    let scene = scenes::exp3(6.0).unwrap();
    let mut obs = scene.obstacles.clone();
    obs.reverse();
    let swapped = Scene::new(scene.polygon.clone(), obs, scene.k, scene.d, None).unwrap();
    let a = solve_hna(&scene, 2, QuadSettings::default()).unwrap();
    let b = solve_hna(&swapped, 2, QuadSettings::default()).unwrap();
    for i in 0..20 {
        let s = (i as f64 + 0.5) / 20.0 * scene.polygon.perimeter();
        let (x, y) = (neumann_trace(&a, BoundaryTag::Big, s).unwrap(), neumann_trace(&b, BoundaryTag::Big, s).unwrap());
        assert!((x - y).norm() <= 1e-9 * x.norm().max(1.0));
    }
    for th in [0.0, 1.0, 2.5, 4.0] {
        let (x, y) = (far_field(&a, th), far_field(&b, th));
        assert!((x - y).norm() <= 1e-9 * x.norm());
    }
}

#[test]
fn removal_rule_improves_conditioning() {
    let scene = scenes::single(20.0).unwrap();
    for p in [4, 6] {
        let rc = |alpha: f64| {
            let opts = HnaOptions { alpha, ..HnaOptions::defaults(p) };
            let space = build_hna_space(&scene.polygon, 20.0, &opts).unwrap();
            solve(&assemble(&scene, &space, p, QuadSettings::default()).unwrap()).unwrap().rcond
        };
        let with = rc(default_alpha(p));
        let without = rc(0.0);
        assert!(with >= 10.0 * without, "p = {p}: {with:.3e} vs {without:.3e}");
    }
}

#[test]
fn oracle_self_convergence() {
    let k = 5.0;
    let scene = scenes::single(k).unwrap();
    let settings = QuadSettings::default();
    let run = |p: usize| {
        let opts = HpOptions { layers: 28, oversampling: 1.5 * 2.0 * PI, ..HpOptions::defaults(p) };
        let space = build_standard_space(&scene, k, &opts).unwrap();
        let sol = solve(&assemble_standard_oracle(&scene, &space, p, settings).unwrap()).unwrap();
        assert!(sol.residual <= 1e-8);
        sol
    };
    let coarse = run(7);
    let fine = run(9);
    let e = l2_relative_error(&TraceEvaluator::new(&coarse), &TraceEvaluator::new(&fine), &settings).unwrap();
    assert!(e <= 1e-3, "oracle coarse vs fine {e:.3e}");
}

#[test]
fn entries_stable_under_quadrature_refinement() {
    let scene = scenes::exp1(10.0).unwrap();
    let space = coupled(&scene, 4);
    let kernel = LayerKernel::combined(scene.k, scene.eta);
    let base = QuadContext::new(&scene, QuadSettings::default());
    let fine = QuadContext::new(&scene, QuadSettings::default().refined());
    let n = space.n_dofs();
    let norms = space.norms();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..24 {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let a = galerkin_entry(&base, &space, &kernel, i, j).unwrap();
        let b = galerkin_entry(&fine, &space, &kernel, i, j).unwrap();
        assert!(entry_close(a, b, norms[i] * norms[j], 1e-6), "({i},{j}) {a} vs {b}");
    }
}

#[test]
fn single_layer_block_is_complex_symmetric() {
    let scene = scenes::exp1(10.0).unwrap();
    let space = build_hp_space(&scene, 10.0, &HpOptions::defaults(3)).unwrap();
    let ctx = QuadContext::new(&scene, QuadSettings::default());
    let kernel = LayerKernel::single_layer(10.0);
    let n = space.n_dofs();
    let norms = space.norms();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..16 {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let a = galerkin_entry(&ctx, &space, &kernel, i, j).unwrap();
        let b = galerkin_entry(&ctx, &space, &kernel, j, i).unwrap();
        assert!(entry_close(a, b, norms[i] * norms[j], 1e-8), "({i},{j}) {a} vs {b}");
    }
}

#[test]
fn reference_sequence_guard() {
    let scene = scenes::exp1(8.0).unwrap();
    let settings = QuadSettings::default();
    let reference = reference_solution(&scene, 6, settings).unwrap();
    let rev = TraceEvaluator::new(&reference);
    assert_eq!(l2_relative_error(&rev, &rev, &settings).unwrap(), 0.0);
    let errs: Vec<f64> = (1..6)
        .map(|p| {
            let s = solve_hna(&scene, p, settings).unwrap();
            l2_relative_error(&TraceEvaluator::new(&s), &rev, &settings).unwrap()
        })
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] <= 3.0 * w[0], "{errs:?}");
    }
    assert!(errs[4] < errs[0]);
}

#[test]
fn solution_dump_roundtrip() {
    let scene = scenes::exp1(10.0).unwrap();
    let sol = solve_hna(&scene, 2, QuadSettings::default()).unwrap();
    let dump = SolutionDump::from_solution(&sol);
    let text = serde_json::to_string(&dump).unwrap();
    let back: SolutionDump = serde_json::from_str(&text).unwrap();
    assert_eq!(back, dump);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["format"], "hnabem-solution");
    assert_eq!(v["version"], 1);
}
