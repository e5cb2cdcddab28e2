//! Assembly and solution of the coupled HNA / hp Galerkin system, and of the
//! plain standard BEM system used as an independent oracle.

use crate::basis::{build_coupled_space, BasisSpace, HnaOptions, HpOptions};
use crate::error::{HnaError, Result};
use crate::geometry::{norm, physical_optics_at, Arc, BoundaryPoint, Scene};
use crate::kernels::{rhs_data, InteractionKernel, Kernel, LayerKernel};
use crate::linalg::{norm2, DenseMatrix, Lu};
use crate::quadrature::{
    barycentric_weights, graded_arcs, lagrange_values, panel_nodes, uniform_arcs, ElementRule, QuadContext,
    QuadSettings,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Which formulation a system discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SystemKind {
    /// Unknowns are the envelopes `v_Γ`, `v_γ`; the trace is `Ψ + k v_Γ + k G v_γ` on Γ.
    Hna,
    /// Unknown is the Neumann trace itself.
    Standard,
}

/// Assembled Galerkin system with everything needed to interpret its solution.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub matrix: DenseMatrix,
    pub rhs: Vec<Complex64>,
    pub n_big: usize,
    pub n_small: usize,
    pub kind: SystemKind,
    pub p: usize,
    pub scene: Scene,
    pub space: BasisSpace,
    pub settings: QuadSettings,
}

impl GalerkinSystem {
    pub fn big_range(&self) -> std::ops::Range<usize> {
        0..self.n_big
    }
    pub fn small_range(&self) -> std::ops::Range<usize> {
        self.n_big..self.n_big + self.n_small
    }
    pub fn n_dofs(&self) -> usize {
        self.n_big + self.n_small
    }
}

/// Solved system.
#[derive(Debug, Clone)]
pub struct Solution {
    pub coefficients: Vec<Complex64>,
    pub kind: SystemKind,
    pub p: usize,
    pub scene: Scene,
    pub space: BasisSpace,
    pub settings: QuadSettings,
    /// Reciprocal 1-norm condition estimate of the equilibrated matrix.
    pub rcond: f64,
    /// `‖B a − b‖ / ‖b‖`.
    pub residual: f64,
}

impl Solution {
    pub fn n_big(&self) -> usize {
        self.space.n_big
    }
    pub fn n_small(&self) -> usize {
        self.space.n_small
    }
    pub fn v_big(&self) -> &[Complex64] {
        &self.coefficients[..self.space.n_big]
    }
    pub fn v_small(&self) -> &[Complex64] {
        &self.coefficients[self.space.n_big..]
    }
}

/// Panels of Γ carrying a piecewise-smooth density at Gauss nodes.
#[derive(Debug, Clone)]
pub struct DensityPanels {
    pub panels: Vec<(usize, Arc, Arc)>,
    pub points: Vec<BoundaryPoint>,
    pub weights: Vec<f64>,
    pub q: usize,
    bary: Vec<f64>,
}

impl DensityPanels {
    /// Uniform oscillation-resolving panels on every side of Γ.
    pub fn on_big(ctx: &QuadContext) -> Self {
        let scene = ctx.scene;
        let bd = &scene.polygon.boundary;
        let q = ctx.settings.panel_points;
        let mut panels = Vec::new();
        for j in 0..bd.n_pieces() {
            let l = bd.lengths[j];
            let n = ctx.settings.panel_count(l, ctx.k);
            for (a, b) in uniform_arcs(Arc::new(0.0, l), Arc::from_end(0.0, l), n) {
                panels.push((j, a, b));
            }
        }
        let mut points = Vec::with_capacity(panels.len() * q);
        let mut weights = Vec::with_capacity(panels.len() * q);
        for &(j, a, b) in &panels {
            for (arc, w, _) in panel_nodes(a, b, q) {
                points.push(scene.point(0, j, arc));
                weights.push(w);
            }
        }
        DensityPanels {
            panels,
            points,
            weights,
            q,
            bary: barycentric_weights(q),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Row of the Nyström matrix: `Σ_b out[b] g(y_b) ≈ ∫_Γ K(x,y) g(y) ds(y)` for
    /// `g` smooth on each panel. Near panels are integrated on graded sub-panels
    /// with `g` interpolated from its nodal values.
    pub fn nystrom_row(&self, ctx: &QuadContext, kernel: &dyn Kernel, x: &BoundaryPoint, out: &mut [Complex64]) {
        let scene = ctx.scene;
        let q = self.q;
        let mut lag = vec![0.0; q];
        for (pi, &(j, pa, pb)) in self.panels.iter().enumerate() {
            let h = Arc::span(pa, pb);
            let (t0, d) = ctx.nearest(x, 0, j, pa, pb);
            let row = &mut out[pi * q..(pi + 1) * q];
            if d >= ctx.settings.near_factor * h {
                for (b, o) in row.iter_mut().enumerate() {
                    let y = &self.points[pi * q + b];
                    let dv = scene.diff(x, y);
                    *o = kernel.eval(x, y, dv, norm(dv)) * self.weights[pi * q + b];
                }
                continue;
            }
            row.iter_mut().for_each(|o| *o = ZERO);
            let stop = ctx.grading_stop(d, h);
            for (sa, sb) in graded_arcs(pa, pb, t0, stop, ctx.settings.grading_ratio) {
                for (arc, w, _) in panel_nodes(sa, sb, q) {
                    let y = scene.point(0, j, arc);
                    let dv = scene.diff(x, &y);
                    let r = norm(dv);
                    if r == 0.0 {
                        continue;
                    }
                    let kv = kernel.eval(x, &y, dv, r) * w;
                    let t = 2.0 * Arc::span(pa, arc) / h - 1.0;
                    lagrange_values(q, &self.bary, t, &mut lag);
                    for (o, l) in row.iter_mut().zip(&lag) {
                        *o += kv * *l;
                    }
                }
            }
        }
    }
}

/// Standard rules for every element of a space.
pub fn element_rules(ctx: &QuadContext, space: &BasisSpace) -> Vec<ElementRule> {
    space.elements.par_iter().map(|e| ctx.element_rule(e)).collect()
}

/// Galerkin matrix `(K φ_n, ψ_m)` over all element pairs, including `½I` parts.
pub fn operator_matrix(ctx: &QuadContext, space: &BasisSpace, rules: &[ElementRule], kernel: &dyn Kernel) -> DenseMatrix {
    let n = space.n_dofs();
    let els = &space.elements;
    let blocks: Vec<Vec<Complex64>> = els
        .par_iter()
        .enumerate()
        .map(|(i, e1)| {
            let f1 = e1.n_funcs();
            let mut rows = vec![ZERO; f1 * n];
            let mut blk = Vec::new();
            for (j, e2) in els.iter().enumerate() {
                let f2 = e2.n_funcs();
                blk.resize(f1 * f2, ZERO);
                ctx.element_pair_block(kernel, e1, &rules[i], e2, &rules[j], &mut blk);
                for m in 0..f1 {
                    rows[m * n + e2.first_dof..m * n + e2.first_dof + f2].copy_from_slice(&blk[m * f2..(m + 1) * f2]);
                }
            }
            rows
        })
        .collect();
    let mut mat = DenseMatrix::zeros(n, n);
    for (e, rows) in els.iter().zip(blocks) {
        let f = e.n_funcs();
        mat.data[e.first_dof * n..(e.first_dof + f) * n].copy_from_slice(&rows);
    }
    mat
}

/// `(G φ_n)(x)` for every γ DOF `n` at a point `x` on Γ.
pub fn interaction_row(
    ctx: &QuadContext,
    space: &BasisSpace,
    rules: &[ElementRule],
    kernel: &InteractionKernel,
    x: &BoundaryPoint,
    out: &mut [Complex64],
) {
    let nb = space.n_big;
    let mut pot = Vec::new();
    for (e, r) in space.elements.iter().zip(rules) {
        if e.boundary == 0 {
            continue;
        }
        pot.resize(e.n_funcs(), ZERO);
        ctx.element_potential(kernel, x, e, r, &mut pot);
        out[e.first_dof - nb..e.first_dof - nb + e.n_funcs()].copy_from_slice(&pot);
    }
}

/// Assemble the coupled block system for `space` (Γ DOFs first).
pub fn assemble(scene: &Scene, space: &BasisSpace, p: usize, settings: QuadSettings) -> Result<GalerkinSystem> {
    let ctx = QuadContext::new(scene, settings);
    let k = scene.k;
    let n = space.n_dofs();
    let nb = space.n_big;
    let ns = space.n_small;
    let kernel = LayerKernel::combined(k, scene.eta);
    let gker = InteractionKernel::new(scene);
    let rules = element_rules(&ctx, space);
    let mut matrix = operator_matrix(&ctx, space, &rules, &kernel);

    // A_{Γ→·} applied to Γ densities, tested against every basis function
    let ydens = DensityPanels::on_big(&ctx);
    let my = ydens.len();
    struct RowData {
        t: Vec<Complex64>,
        half_g: Vec<Complex64>,
        rhs: Vec<Complex64>,
    }
    let per_elem: Vec<RowData> = space
        .elements
        .par_iter()
        .zip(rules.par_iter())
        .map(|(e, r)| {
            let f = e.n_funcs();
            let mut t = vec![ZERO; f * my];
            let mut half_g = vec![ZERO; f * ns];
            let mut rhs = vec![ZERO; f];
            let mut mrow = vec![ZERO; my];
            let mut grow = vec![ZERO; ns];
            for (a, x) in r.points.iter().enumerate() {
                ydens.nystrom_row(&ctx, &kernel, x, &mut mrow);
                let w = r.weights[a];
                let vals = &r.values[a * f..(a + 1) * f];
                let mut data = rhs_data(scene, x.pos, x.normal);
                if e.boundary == 0 {
                    data -= physical_optics_at(scene, x.pos, x.piece, x.normal) * 0.5;
                    if ns > 0 {
                        interaction_row(&ctx, space, &rules, &gker, x, &mut grow);
                    }
                }
                for m in 0..f {
                    let c = vals[m].conj() * w;
                    rhs[m] += c * data;
                    let trow = &mut t[m * my..(m + 1) * my];
                    for (o, v) in trow.iter_mut().zip(&mrow) {
                        *o += c * v;
                    }
                    if e.boundary == 0 && ns > 0 {
                        let hrow = &mut half_g[m * ns..(m + 1) * ns];
                        for (o, v) in hrow.iter_mut().zip(&grow) {
                            *o += c * 0.5 * v;
                        }
                    }
                }
            }
            RowData { t, half_g, rhs }
        })
        .collect();

    let psi_y: Vec<Complex64> = ydens
        .points
        .iter()
        .map(|y| physical_optics_at(scene, y.pos, y.piece, y.normal))
        .collect();
    let mut tmat = DenseMatrix::zeros(n, my);
    let mut rhs = vec![ZERO; n];
    let mut half_g = DenseMatrix::zeros(n, ns);
    for (e, d) in space.elements.iter().zip(per_elem) {
        let f = e.n_funcs();
        tmat.data[e.first_dof * my..(e.first_dof + f) * my].copy_from_slice(&d.t);
        half_g.data[e.first_dof * ns..(e.first_dof + f) * ns].copy_from_slice(&d.half_g);
        for m in 0..f {
            rhs[e.first_dof + m] = d.rhs[m];
        }
    }
    let t_psi = tmat.matvec(&psi_y);
    for (b, tp) in rhs.iter_mut().zip(t_psi) {
        *b = (*b - tp) / k;
    }

    if ns > 0 {
        // G_{γ→Γ} images of the γ basis at the Γ density nodes
        let mut gy = DenseMatrix::zeros(my, ns);
        gy.data.par_chunks_mut(ns).zip(ydens.points.par_iter()).for_each(|(row, y)| {
            interaction_row(&ctx, space, &rules, &gker, y, row);
        });
        let composed = tmat.matmul(&gy);
        for m in 0..n {
            let row = matrix.row_mut(m);
            let crow = composed.row(m);
            let hrow = half_g.row(m);
            for j in 0..ns {
                row[nb + j] += crow[j] + hrow[j];
            }
        }
    }
    if !matrix.is_finite() || rhs.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(HnaError::Invalid("non-finite entry in assembled system".into()));
    }
    Ok(GalerkinSystem {
        matrix,
        rhs,
        n_big: nb,
        n_small: ns,
        kind: SystemKind::Hna,
        p,
        scene: scene.clone(),
        space: space.clone(),
        settings,
    })
}

/// Galerkin system of `A_{k,η} ∂u/∂n = f` on a plain piecewise-polynomial space.
pub fn assemble_standard_oracle(scene: &Scene, space: &BasisSpace, p: usize, settings: QuadSettings) -> Result<GalerkinSystem> {
    let ctx = QuadContext::new(scene, settings);
    let kernel = LayerKernel::combined(scene.k, scene.eta);
    let rules = element_rules(&ctx, space);
    let matrix = operator_matrix(&ctx, space, &rules, &kernel);
    let mut rhs = vec![ZERO; space.n_dofs()];
    for (e, r) in space.elements.iter().zip(&rules) {
        let f = e.n_funcs();
        for (a, x) in r.points.iter().enumerate() {
            let data = rhs_data(scene, x.pos, x.normal) * r.weights[a];
            for m in 0..f {
                rhs[e.first_dof + m] += r.values[a * f + m].conj() * data;
            }
        }
    }
    if !matrix.is_finite() {
        return Err(HnaError::Invalid("non-finite entry in assembled system".into()));
    }
    Ok(GalerkinSystem {
        matrix,
        rhs,
        n_big: space.n_big,
        n_small: space.n_small,
        kind: SystemKind::Standard,
        p,
        scene: scene.clone(),
        space: space.clone(),
        settings,
    })
}

/// Threshold below which the condition estimate triggers a warning.
pub const RCOND_WARN: f64 = 1e-12;

/// Dense LU solve after symmetric scaling by the basis L² norms.
pub fn solve(system: &GalerkinSystem) -> Result<Solution> {
    let n = system.n_dofs();
    let scale: Vec<f64> = system.space.norms().iter().map(|v| 1.0 / v).collect();
    let mut scaled = system.matrix.clone();
    for i in 0..n {
        let si = scale[i];
        for (j, v) in scaled.row_mut(i).iter_mut().enumerate() {
            *v *= si * scale[j];
        }
    }
    let lu = Lu::factor(&scaled)?;
    let rcond = lu.rcond();
    if rcond < RCOND_WARN {
        log::warn!("Galerkin matrix is ill-conditioned: reciprocal condition estimate {rcond:.3e}");
    }
    let rb: Vec<Complex64> = system.rhs.iter().zip(&scale).map(|(b, s)| b * *s).collect();
    let y = lu.solve(&rb);
    let coefficients: Vec<Complex64> = y.iter().zip(&scale).map(|(v, s)| v * *s).collect();
    let residual = relative_residual(&system.matrix, &coefficients, &system.rhs);
    Ok(Solution {
        coefficients,
        kind: system.kind,
        p: system.p,
        scene: system.scene.clone(),
        space: system.space.clone(),
        settings: system.settings,
        rcond,
        residual,
    })
}

/// `‖B a − b‖ / ‖b‖` (or `‖B a‖` when `b = 0`).
pub fn relative_residual(b: &DenseMatrix, a: &[Complex64], rhs: &[Complex64]) -> f64 {
    let ba = b.matvec(a);
    let r: Vec<Complex64> = ba.iter().zip(rhs).map(|(x, y)| x - y).collect();
    let nb = norm2(rhs);
    if nb == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / nb
    }
}

/// Build the default coupled space for degree `p` and solve.
pub fn solve_hna(scene: &Scene, p: usize, settings: QuadSettings) -> Result<Solution> {
    let space = build_coupled_space(scene, &HnaOptions::defaults(p), &HpOptions::defaults(p))?;
    let sys = assemble(scene, &space, p, settings)?;
    solve(&sys)
}

/// HNA solution at `p_ref`, the reference in convergence studies.
pub fn reference_solution(scene: &Scene, p_ref: usize, settings: QuadSettings) -> Result<Solution> {
    solve_hna(scene, p_ref, settings)
}

/// Versioned JSON dump of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDump {
    pub format: String,
    pub version: u32,
    pub kind: SystemKind,
    pub k: f64,
    pub p: usize,
    pub eta: f64,
    pub n_gamma: usize,
    pub n_small: usize,
    pub rcond: f64,
    pub residual: f64,
    pub settings: QuadSettings,
    /// `[re, im]` pairs, Γ DOFs first.
    pub coefficients: Vec<[f64; 2]>,
}

impl SolutionDump {
    pub fn from_solution(sol: &Solution) -> Self {
        SolutionDump {
            format: "hnabem-solution".into(),
            version: 1,
            kind: sol.kind,
            k: sol.scene.k,
            p: sol.p,
            eta: sol.scene.eta,
            n_gamma: sol.n_big(),
            n_small: sol.n_small(),
            rcond: sol.rcond,
            residual: sol.residual,
            settings: sol.settings,
            coefficients: sol.coefficients.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}
