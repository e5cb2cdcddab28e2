//! Discrete evidence for coercivity of the star-combined operator and for the
//! norm bound on the interaction operator.

use crate::basis::{build_standard_space, BasisSpace, HpOptions};
use crate::error::Result;
use crate::geometry::{min_pairwise_distance, Scene};
use crate::kernels::{coercivity_constant, interaction_norm_bound, InteractionKernel, StarCombinedKernel, StarDescriptor};
use crate::linalg::DenseMatrix;
use crate::quadrature::{QuadContext, QuadSettings};
use crate::solver::{element_rules, interaction_row, operator_matrix, DensityPanels};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Fraction of the theoretical constant the discrete bound must reach.
pub const COERCIVITY_MARGIN: f64 = 0.9;

/// Discrete numerical-range evidence for coercivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumericalRangeReport {
    pub k: f64,
    pub alpha_theory: f64,
    pub admissible: bool,
    /// `dist(0, W(M))` for the orthonormalized Galerkin matrix `M`.
    pub range_lower_bound: f64,
    /// Smallest eigenvalue of `(M + M^H)/2`.
    pub hermitian_min: f64,
    /// Smallest `|φ^H M φ| / |φ|²` over the random trials.
    pub sampled_min: f64,
    pub smallest_singular: f64,
    pub trials: usize,
    pub n_dofs: usize,
    /// The bound reaches the margin and the theoretical constant is positive.
    pub pass: bool,
}

/// Options for [`check_star_coercivity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityOptions {
    pub p: usize,
    pub trials: usize,
    pub seed: u64,
    /// Quasi-uniform oversampling constant of the discretization.
    pub oversampling: f64,
    /// Angles sampled when maximizing over rotations of the numerical range.
    pub angles: usize,
}

impl Default for CoercivityOptions {
    fn default() -> Self {
        CoercivityOptions {
            p: 3,
            trials: 200,
            seed: 7,
            oversampling: 2.0 * std::f64::consts::PI,
            angles: 36,
        }
    }
}

fn to_nalgebra(m: &DenseMatrix) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(m.rows, m.cols, &m.data)
}

fn hermitian_part_min(m: &DMatrix<Complex64>, theta: f64) -> f64 {
    let rot = Complex64::from_polar(1.0, theta);
    let a = m * rot;
    let h = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// `max(0, max_θ λ_min(Herm(e^{iθ} M)))`, the distance from 0 to the numerical range.
pub fn numerical_range_distance(m: &DMatrix<Complex64>, angles: usize) -> f64 {
    let n = angles.max(4);
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let vals: Vec<f64> = (0..n).into_par_iter().map(|i| hermitian_part_min(m, i as f64 * step)).collect();
    let (ibest, mut best) = vals
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    // golden-section refinement of the concave function around the best sample
    let (mut lo, mut hi) = ((ibest as f64 - 1.0) * step, (ibest as f64 + 1.0) * step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = hermitian_part_min(m, x1);
    let mut f2 = hermitian_part_min(m, x2);
    for _ in 0..60 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = hermitian_part_min(m, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = hermitian_part_min(m, x2);
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    best = best.max(f1).max(f2);
    best.max(0.0)
}

/// Galerkin matrix of the star-combined operator in the L²-orthonormal basis
/// (elements carry Legendre polynomials, so the Gram matrix is diagonal).
pub fn star_combined_matrix(scene: &Scene, star: &StarDescriptor, space: &BasisSpace, settings: QuadSettings) -> DenseMatrix {
    let ctx = QuadContext::new(scene, settings);
    let kernel = StarCombinedKernel::new(scene, star.clone());
    let rules = element_rules(&ctx, space);
    let mut m = operator_matrix(&ctx, space, &rules, &kernel);
    let norms = space.norms();
    for i in 0..m.rows {
        let ni = norms[i];
        for (j, v) in m.row_mut(i).iter_mut().enumerate() {
            *v /= ni * norms[j];
        }
    }
    m
}

/// Numerical-range evidence for coercivity of the star-combined operator.
pub fn check_star_coercivity(
    scene: &Scene,
    star: &StarDescriptor,
    opts: &CoercivityOptions,
    settings: QuadSettings,
) -> Result<NumericalRangeReport> {
    let r_min = if scene.obstacles.is_empty() {
        f64::INFINITY
    } else {
        min_pairwise_distance(scene)
    };
    let theory = coercivity_constant(scene, star, r_min)?;
    let hp = HpOptions {
        graded: false,
        oversampling: opts.oversampling,
        ..HpOptions::defaults(opts.p)
    };
    let space = build_standard_space(scene, scene.k, &hp)?;
    let m = star_combined_matrix(scene, star, &space, settings);
    let nm = to_nalgebra(&m);
    let range = numerical_range_distance(&nm, opts.angles);
    let herm = hermitian_part_min(&nm, 0.0);
    let smallest_singular = nm.singular_values().iter().cloned().fold(f64::INFINITY, f64::min);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = m.rows;
    let mut sampled = f64::INFINITY;
    for _ in 0..opts.trials {
        let phi: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mphi = m.matvec(&phi);
        let num: Complex64 = phi.iter().zip(&mphi).map(|(a, b)| a.conj() * b).sum();
        let den: f64 = phi.iter().map(|a| a.norm_sqr()).sum();
        sampled = sampled.min(num.norm() / den);
    }
    Ok(NumericalRangeReport {
        k: scene.k,
        alpha_theory: theory.alpha,
        admissible: theory.admissible,
        range_lower_bound: range,
        hermitian_min: herm,
        sampled_min: sampled,
        smallest_singular,
        trials: opts.trials,
        n_dofs: n,
        pass: theory.alpha > 0.0 && range >= COERCIVITY_MARGIN * theory.alpha,
    })
}

/// Discrete norm of `G_{γ→Γ}` against its analytic bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteractionBoundReport {
    pub norm: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Largest singular value of `G_{γ→Γ}` from the γ part of `space` (orthonormalized)
/// into L²(Γ) (Gauss-weighted), compared with `C_G(k)`.
pub fn check_interaction_bound(scene: &Scene, space: &BasisSpace, settings: QuadSettings) -> Result<InteractionBoundReport> {
    if scene.obstacles.is_empty() || space.n_small == 0 {
        return Ok(InteractionBoundReport {
            norm: 0.0,
            bound: 0.0,
            pass: true,
        });
    }
    let bound = interaction_norm_bound(scene)?;
    let ctx = QuadContext::new(scene, settings);
    let rules = element_rules(&ctx, space);
    let gker = InteractionKernel::new(scene);
    let ydens = DensityPanels::on_big(&ctx);
    let ns = space.n_small;
    let norms = space.norms();
    let nb = space.n_big;
    let mut g = DenseMatrix::zeros(ydens.len(), ns);
    g.data
        .par_chunks_mut(ns)
        .zip(ydens.points.par_iter().zip(ydens.weights.par_iter()))
        .for_each(|(row, (y, w))| {
            interaction_row(&ctx, space, &rules, &gker, y, row);
            let sw = w.sqrt();
            for (j, v) in row.iter_mut().enumerate() {
                *v *= sw / norms[nb + j];
            }
        });
    let norm = to_nalgebra(&g).singular_values().iter().cloned().fold(0.0, f64::max);
    Ok(InteractionBoundReport {
        norm,
        bound,
        pass: norm <= bound,
    })
}
