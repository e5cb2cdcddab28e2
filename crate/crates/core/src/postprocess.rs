//! Reconstruction of the Neumann trace, the scattered field in the domain and
//! the far-field pattern, plus boundary L² errors and CSV output.

use crate::basis::BoundaryTag;
use crate::error::{HnaError, Result};
use crate::geometry::{distance_to_boundary, dot, inside_any, norm, physical_optics_at, sub, Arc, Point, Scene};
use crate::kernels::InteractionKernel;
use crate::quadrature::{barycentric_weights, graded_arcs, lagrange_values, panel_nodes, uniform_arcs, ElementRule, QuadContext, QuadSettings};
use crate::solver::{Solution, SystemKind};
use crate::special_functions::phi_from_r;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Evaluation points closer than this to ∂D are rejected.
pub const MIN_BOUNDARY_DISTANCE: f64 = 1e-6;
/// Default number of far-field angles.
pub const DEFAULT_ANGLES: usize = 720;

/// Something that can be sampled on every piece of ∂D.
pub trait TraceSampler: Sync {
    fn scene(&self) -> &Scene;
    /// Value at arc `arc` of piece `piece` of boundary `b`.
    fn trace(&self, b: usize, piece: usize, arc: Arc) -> Complex64;
    /// Points on the piece where the sampled function may lose smoothness.
    fn breakpoints(&self, b: usize, piece: usize) -> Vec<Arc>;
}

/// Physical Neumann trace `ν_N` of a solution.
pub struct TraceEvaluator<'a> {
    pub sol: &'a Solution,
    ctx: QuadContext<'a>,
    rules: Vec<Option<ElementRule>>,
    gker: InteractionKernel,
    /// Element indices per `(boundary, piece)`, sorted along the piece.
    lookup: Vec<Vec<Vec<usize>>>,
}

impl<'a> TraceEvaluator<'a> {
    pub fn new(sol: &'a Solution) -> Self {
        let scene = &sol.scene;
        let ctx = QuadContext::new(scene, sol.settings);
        let hna = sol.kind == SystemKind::Hna;
        let rules = sol
            .space
            .elements
            .par_iter()
            .map(|e| if hna && e.boundary > 0 { Some(ctx.element_rule(e)) } else { None })
            .collect();
        let mut lookup: Vec<Vec<Vec<usize>>> = (0..scene.n_boundaries())
            .map(|b| vec![Vec::new(); scene.boundary(b).n_pieces()])
            .collect();
        for (i, e) in sol.space.elements.iter().enumerate() {
            lookup[e.boundary][e.piece].push(i);
        }
        for per_b in lookup.iter_mut() {
            for l in per_b.iter_mut() {
                l.sort_by(|&i, &j| {
                    let (a, b) = (&sol.space.elements[i], &sol.space.elements[j]);
                    a.a.s.partial_cmp(&b.a.s).unwrap().then(b.a.r.partial_cmp(&a.a.r).unwrap())
                });
            }
        }
        TraceEvaluator {
            sol,
            ctx,
            rules,
            gker: InteractionKernel::new(scene),
            lookup,
        }
    }

    /// `Σ a_m φ_m` at the given point (envelope for HNA, trace for the standard oracle).
    pub fn expansion(&self, b: usize, piece: usize, arc: Arc) -> Complex64 {
        let els = &self.lookup[b][piece];
        let space = &self.sol.space;
        // last element starting at or before arc
        let pos = els.partition_point(|&i| {
            let e = &space.elements[i];
            e.a.s < arc.s || (e.a.s == arc.s && e.a.r >= arc.r)
        });
        if pos == 0 {
            return ZERO;
        }
        let mut total = ZERO;
        let mut vals = [ZERO; 128];
        for &i in els[..pos].iter().rev().take(2) {
            let e = &space.elements[i];
            if arc.s > e.b.s && arc.r < e.b.r {
                continue;
            }
            let f = e.n_funcs();
            e.eval_all(space.k, arc, &mut vals[..f]);
            for (m, v) in vals[..f].iter().enumerate() {
                total += self.sol.coefficients[e.first_dof + m] * v;
            }
            break;
        }
        total
    }

    /// `(G_{γ→Γ} v_γ)` at a point of Γ.
    pub fn interaction(&self, piece: usize, arc: Arc) -> Complex64 {
        let x = self.sol.scene.point(0, piece, arc);
        let mut pot = [ZERO; 128];
        let mut total = ZERO;
        for (e, r) in self.sol.space.elements.iter().zip(&self.rules) {
            if let Some(r) = r {
                let f = e.n_funcs();
                self.ctx.element_potential(&self.gker, &x, e, r, &mut pot[..f]);
                for (m, v) in pot[..f].iter().enumerate() {
                    total += self.sol.coefficients[e.first_dof + m] * v;
                }
            }
        }
        total
    }
}

impl TraceSampler for TraceEvaluator<'_> {
    fn scene(&self) -> &Scene {
        &self.sol.scene
    }

    fn trace(&self, b: usize, piece: usize, arc: Arc) -> Complex64 {
        let k = self.sol.scene.k;
        let v = self.expansion(b, piece, arc);
        match self.sol.kind {
            SystemKind::Standard => v,
            SystemKind::Hna if b == 0 => {
                let x = self.sol.scene.point(0, piece, arc);
                let mut t = physical_optics_at(&self.sol.scene, x.pos, piece, x.normal) + v * k;
                if self.sol.space.n_small > 0 {
                    t += self.interaction(piece, arc) * k;
                }
                t
            }
            SystemKind::Hna => v * k,
        }
    }

    fn breakpoints(&self, b: usize, piece: usize) -> Vec<Arc> {
        let mut out = Vec::new();
        for &i in &self.lookup[b][piece] {
            let e = &self.sol.space.elements[i];
            out.push(e.a);
            out.push(e.b);
        }
        out
    }
}

/// `ν_N` at arclength `s` on Γ (`Big`) or on the concatenated obstacle boundaries (`Small`).
pub fn neumann_trace(sol: &Solution, tag: BoundaryTag, s: f64) -> Result<Complex64> {
    let ev = TraceEvaluator::new(sol);
    let (b, piece, arc) = locate_tagged(&sol.scene, tag, s)?;
    Ok(ev.trace(b, piece, arc))
}

/// Boundary index, piece and arc for a tagged arclength.
pub fn locate_tagged(scene: &Scene, tag: BoundaryTag, s: f64) -> Result<(usize, usize, Arc)> {
    match tag {
        BoundaryTag::Big => {
            let (p, a) = scene.polygon.boundary.locate(s)?;
            Ok((0, p, a))
        }
        BoundaryTag::Small => {
            let total = scene.small_perimeter();
            if !(s >= 0.0 && s <= total) {
                return Err(HnaError::OutOfRange(s, total));
            }
            let mut off = 0.0;
            for (i, o) in scene.obstacles.iter().enumerate() {
                let l = o.boundary.perimeter;
                if s <= off + l || i + 1 == scene.obstacles.len() {
                    let (p, a) = o.boundary.locate((s - off).min(l))?;
                    return Ok((i + 1, p, a));
                }
                off += l;
            }
            Err(HnaError::OutOfRange(s, total))
        }
    }
}

fn merged_breakpoints(a: &dyn TraceSampler, b: &dyn TraceSampler, bd: usize, piece: usize) -> Vec<Arc> {
    let l = a.scene().boundary(bd).lengths[piece];
    let mut pts = a.breakpoints(bd, piece);
    pts.extend(b.breakpoints(bd, piece));
    pts.push(Arc::new(0.0, l));
    pts.push(Arc::from_end(0.0, l));
    // order by the better-conditioned end distance
    let key = |x: &Arc| if x.s <= x.r { (0, x.s) } else { (1, -x.r) };
    pts.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    pts.dedup_by(|x, y| x.s == y.s && x.r == y.r);
    pts
}

/// `‖a − b‖_{L²(∂D)} / ‖b‖_{L²(∂D)}` by composite Gauss on the union of both meshes.
pub fn l2_relative_error(a: &dyn TraceSampler, b: &dyn TraceSampler, settings: &QuadSettings) -> Result<f64> {
    let scene = b.scene();
    let mut jobs = Vec::new();
    for bd in 0..scene.n_boundaries() {
        for piece in 0..scene.boundary(bd).n_pieces() {
            let pts = merged_breakpoints(a, b, bd, piece);
            for w in pts.windows(2) {
                if Arc::span(w[0], w[1]) > 0.0 {
                    jobs.push((bd, piece, w[0], w[1]));
                }
            }
        }
    }
    let q = settings.panel_points;
    let (num, den) = jobs
        .par_iter()
        .map(|&(bd, piece, lo, hi)| {
            let n = settings.panel_count(Arc::span(lo, hi), scene.k);
            let mut num = 0.0;
            let mut den = 0.0;
            for (pa, pb) in uniform_arcs(lo, hi, n) {
                for (arc, w, _) in panel_nodes(pa, pb, q) {
                    let va = a.trace(bd, piece, arc);
                    let vb = b.trace(bd, piece, arc);
                    num += (va - vb).norm_sqr() * w;
                    den += vb.norm_sqr() * w;
                }
            }
            (num, den)
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
    if den == 0.0 {
        return Err(HnaError::ZeroReference);
    }
    Ok((num / den).sqrt())
}

/// `ν_N` tabulated at Gauss nodes of element-aligned panels.
#[derive(Debug, Clone)]
pub struct BoundaryDensity {
    /// `(boundary, piece, a, b)` per panel.
    pub panels: Vec<(usize, usize, Arc, Arc)>,
    pub positions: Vec<Point>,
    pub weights: Vec<f64>,
    pub values: Vec<Complex64>,
    pub q: usize,
    bary: Vec<f64>,
}

impl BoundaryDensity {
    pub fn new(sampler: &dyn TraceSampler, settings: &QuadSettings) -> Self {
        let scene = sampler.scene();
        let q = settings.panel_points;
        let mut panels = Vec::new();
        for bd in 0..scene.n_boundaries() {
            for piece in 0..scene.boundary(bd).n_pieces() {
                let pts = merged_breakpoints(sampler, sampler, bd, piece);
                for w in pts.windows(2) {
                    let len = Arc::span(w[0], w[1]);
                    if len > 0.0 {
                        for (a, b) in uniform_arcs(w[0], w[1], settings.panel_count(len, scene.k)) {
                            panels.push((bd, piece, a, b));
                        }
                    }
                }
            }
        }
        let nodes: Vec<(Point, f64, Complex64)> = panels
            .par_iter()
            .flat_map_iter(|&(bd, piece, a, b)| {
                panel_nodes(a, b, q)
                    .map(|(arc, w, _)| {
                        let pos = scene.boundary(bd).piece_point(piece, arc);
                        (pos, w, sampler.trace(bd, piece, arc))
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        BoundaryDensity {
            panels,
            positions: nodes.iter().map(|n| n.0).collect(),
            weights: nodes.iter().map(|n| n.1).collect(),
            values: nodes.iter().map(|n| n.2).collect(),
            q,
            bary: barycentric_weights(q),
        }
    }

    /// `∫_∂D f(y) ν(y) ds(y)` for `f` smooth.
    pub fn integrate<F: Fn(Point) -> Complex64>(&self, f: F) -> Complex64 {
        self.positions
            .iter()
            .zip(&self.weights)
            .zip(&self.values)
            .map(|((p, w), v)| f(*p) * *w * v)
            .sum()
    }

    /// `∫_∂D Φ_k(x, y) ν(y) ds(y)` with graded sub-panels near `x`.
    pub fn single_layer(&self, scene: &Scene, x: Point) -> Complex64 {
        let k = scene.k;
        let q = self.q;
        let mut total = ZERO;
        let mut lag = vec![0.0; q];
        for (pi, &(bd, piece, pa, pb)) in self.panels.iter().enumerate() {
            let pl = scene.boundary(bd);
            let h = Arc::span(pa, pb);
            let start = pl.piece_point(piece, pa);
            let t = dot(sub(x, start), pl.tangents[piece]).clamp(0.0, h);
            let t0 = Arc::lerp(pa, pb, t / h);
            let d = norm(sub(x, pl.piece_point(piece, t0)));
            if d >= h {
                for j in pi * q..(pi + 1) * q {
                    let r = norm(sub(x, self.positions[j]));
                    total += phi_from_r(k, r) * self.weights[j] * self.values[j];
                }
                continue;
            }
            let vals = &self.values[pi * q..(pi + 1) * q];
            for (sa, sb) in graded_arcs(pa, pb, t0, d, 0.15) {
                for (arc, w, _) in panel_nodes(sa, sb, q) {
                    let y = pl.piece_point(piece, arc);
                    let r = norm(sub(x, y));
                    let tt = 2.0 * Arc::span(pa, arc) / h - 1.0;
                    lagrange_values(q, &self.bary, tt, &mut lag);
                    let v: Complex64 = vals.iter().zip(&lag).map(|(a, l)| a * *l).sum();
                    total += phi_from_r(k, r) * w * v;
                }
            }
        }
        total
    }
}

/// Precomputed data for repeated field evaluations.
pub struct FieldEvaluator<'a> {
    pub scene: &'a Scene,
    pub density: BoundaryDensity,
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(sampler: &'a dyn TraceSampler, settings: &QuadSettings) -> Self {
        FieldEvaluator {
            scene: sampler.scene(),
            density: BoundaryDensity::new(sampler, settings),
        }
    }

    /// Total field `u^i(x) − ∫ Φ(x,y) ν(y) ds(y)`.
    pub fn total(&self, x: Point) -> Result<Complex64> {
        Ok(self.scene.incident(x) + self.scattered(x)?)
    }

    /// Scattered field `−∫ Φ(x,y) ν(y) ds(y)`.
    pub fn scattered(&self, x: Point) -> Result<Complex64> {
        if inside_any(self.scene, x) || distance_to_boundary(self.scene, x) < MIN_BOUNDARY_DISTANCE {
            return Err(HnaError::PointInsideScatterer);
        }
        Ok(-self.density.single_layer(self.scene, x))
    }

    /// `u^∞(θ) = −∫ e^{−ik x̂·y} ν(y) ds(y)`.
    pub fn far_field(&self, theta: f64) -> Complex64 {
        let k = self.scene.k;
        let xh = [theta.cos(), theta.sin()];
        -self.density.integrate(|y| Complex64::from_polar(1.0, -k * dot(xh, y)))
    }
}

/// Total field `u_N(x)` of a solution.
pub fn domain_field(sol: &Solution, x: Point) -> Result<Complex64> {
    let ev = TraceEvaluator::new(sol);
    FieldEvaluator::new(&ev, &sol.settings).total(x)
}

/// Far-field pattern `u^∞_N(θ)`.
pub fn far_field(sol: &Solution, theta: f64) -> Complex64 {
    let ev = TraceEvaluator::new(sol);
    FieldEvaluator::new(&ev, &sol.settings).far_field(theta)
}

/// One sample of the Neumann trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    /// Boundary index (0 is Γ).
    pub boundary: usize,
    /// Arclength along that boundary.
    pub s: f64,
    pub value: Complex64,
}

/// `n` samples per piece at piece-interior midpoints.
pub fn sample_trace(sampler: &dyn TraceSampler, n: usize) -> Vec<TraceSample> {
    let scene = sampler.scene();
    let mut jobs = Vec::new();
    for bd in 0..scene.n_boundaries() {
        let pl = scene.boundary(bd);
        for piece in 0..pl.n_pieces() {
            let l = pl.lengths[piece];
            for i in 0..n {
                let s = l * (i as f64 + 0.5) / n as f64;
                jobs.push((bd, piece, pl.cumulative[piece] + s, Arc::new(s, l)));
            }
        }
    }
    jobs.par_iter()
        .map(|&(bd, piece, s, arc)| TraceSample {
            boundary: bd,
            s,
            value: sampler.trace(bd, piece, arc),
        })
        .collect()
}

/// Samples of the far-field pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldSamples {
    pub theta: Vec<f64>,
    pub values: Vec<Complex64>,
}

/// `u^∞` at `n` uniform angles in `[0, 2π)`.
pub fn far_field_samples(field: &FieldEvaluator, n: usize) -> FarFieldSamples {
    let theta: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
    let values = theta.par_iter().map(|&t| field.far_field(t)).collect();
    FarFieldSamples { theta, values }
}

/// Total field on a rectangular grid; points inside (or within 1e-6 of) a scatterer are masked.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub points: Vec<Point>,
    pub values: Vec<Complex64>,
    /// `true` where the point is not in the exterior domain.
    pub mask: Vec<bool>,
}

/// Grid of `nx × ny` points spanning `[x0, x1] × [y0, y1]`.
pub fn field_grid(field: &FieldEvaluator, x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> FieldGrid {
    let lin = |a: f64, b: f64, n: usize, i: usize| if n <= 1 { 0.5 * (a + b) } else { a + (b - a) * i as f64 / (n - 1) as f64 };
    let points: Vec<Point> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| [lin(x0, x1, nx, i), lin(y0, y1, ny, j)]))
        .collect();
    let res: Vec<(Complex64, bool)> = points
        .par_iter()
        .map(|&p| match field.total(p) {
            Ok(v) => (v, false),
            Err(_) => (ZERO, true),
        })
        .collect();
    FieldGrid {
        points,
        values: res.iter().map(|r| r.0).collect(),
        mask: res.iter().map(|r| r.1).collect(),
    }
}

/// Float formatted with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| HnaError::Invalid(format!("cannot write {}: {e}", path.display())))?;
    Ok(std::io::BufWriter::new(f))
}

fn io_err(e: std::io::Error) -> HnaError {
    HnaError::Invalid(format!("write failed: {e}"))
}

/// `theta,re,im`.
pub fn write_farfield_csv(path: &Path, ff: &FarFieldSamples) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "theta,re,im").map_err(io_err)?;
    for (t, v) in ff.theta.iter().zip(&ff.values) {
        writeln!(w, "{},{},{}", fmt_f64(*t), fmt_f64(v.re), fmt_f64(v.im)).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// `x,y,re,im,mask`.
pub fn write_field_csv(path: &Path, grid: &FieldGrid) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "x,y,re,im,mask").map_err(io_err)?;
    for ((p, v), m) in grid.points.iter().zip(&grid.values).zip(&grid.mask) {
        writeln!(w, "{},{},{},{},{}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(v.re), fmt_f64(v.im), u8::from(*m))
            .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// `boundary,s,re,im`.
pub fn write_trace_csv(path: &Path, samples: &[TraceSample]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "boundary,s,re,im").map_err(io_err)?;
    for t in samples {
        writeln!(w, "{},{},{},{}", t.boundary, fmt_f64(t.s), fmt_f64(t.value.re), fmt_f64(t.value.im)).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}
