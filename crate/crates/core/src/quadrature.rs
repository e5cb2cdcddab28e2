//! Gauss–Legendre rules, composite rules for oscillatory integrands,
//! geometrically graded rules for (log- or Cauchy-) singular integrands, and
//! the boundary integration engine used for Galerkin entries.

use crate::basis::{BasisSpace, Element};
use crate::geometry::{dot, norm, Arc, BoundaryPoint, Scene};
use crate::kernels::Kernel;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and positive weights on a reference interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `n`-point Gauss–Legendre rule on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> QuadratureRule {
    assert!(n >= 1, "Gauss rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    QuadratureRule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for l in 1..n {
        let lf = l as f64;
        let p2 = ((2.0 * lf + 1.0) * x * p1 - lf * p0) / (lf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Cached Gauss rule (up to 128 points).
pub fn gauss(n: usize) -> &'static QuadratureRule {
    static CACHE: OnceLock<Vec<QuadratureRule>> = OnceLock::new();
    let c = CACHE.get_or_init(|| (1..=128).map(gauss_legendre).collect());
    &c[n - 1]
}

/// Quadrature configuration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadSettings {
    /// Points per wavelength for oscillatory panels.
    pub ppw: f64,
    /// Gauss points per panel.
    pub panel_points: usize,
    /// Geometric ratio for singular grading.
    pub grading_ratio: f64,
    /// Relative size at which singular grading stops.
    pub singular_depth: f64,
    /// A panel is treated as near a point closer than this multiple of its length.
    pub near_factor: f64,
    /// Levels of endpoint grading in the outer rule for touching element pairs.
    pub outer_levels: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            ppw: 10.0,
            panel_points: 16,
            grading_ratio: 0.15,
            singular_depth: 1e-12,
            near_factor: 1.5,
            outer_levels: 3,
        }
    }
}

impl QuadSettings {
    pub fn high_accuracy() -> Self {
        QuadSettings {
            ppw: 16.0,
            ..Default::default()
        }
    }
    /// Settings with twice the oscillation resolution and deeper grading, used for self-convergence checks.
    pub fn refined(&self) -> Self {
        QuadSettings {
            ppw: 2.0 * self.ppw,
            panel_points: self.panel_points + 8,
            singular_depth: self.singular_depth * 1e-2,
            outer_levels: self.outer_levels + 2,
            ..*self
        }
    }
    /// Number of panels for an interval of length `len`.
    pub fn panel_count(&self, len: f64, k: f64) -> usize {
        let n = (len * k * self.ppw / (2.0 * PI * self.panel_points as f64)).ceil();
        if n.is_finite() && n >= 1.0 {
            n as usize
        } else {
            1
        }
    }
}

/// Composite Gauss rule with panels resolving `e^{iks}` at `ppw` points per wavelength.
pub fn integrate_oscillatory<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, k: f64, ppw: f64) -> Complex64 {
    let q = 16;
    let len = b - a;
    if len == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let np = ((len.abs() * k * ppw / (2.0 * PI * q as f64)).ceil() as usize).max(1);
    let rule = gauss(q);
    let h = len / np as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for p in 0..np {
        let c = a + (p as f64 + 0.5) * h;
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            sum += f(c + 0.5 * h * t) * (0.5 * h * w);
        }
    }
    sum
}

/// Geometric grading towards `s0 ∈ [a, b]`, ratio 0.15, down to `1e-12 (b − a)`.
pub fn integrate_log_singular<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, s0: f64) -> Complex64 {
    let rule = gauss(16);
    let mut sum = Complex64::new(0.0, 0.0);
    let stop = 1e-12 * (b - a);
    for (lo, hi) in graded_intervals(a, b, s0, stop, 0.15) {
        let h = hi - lo;
        let c = 0.5 * (lo + hi);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            sum += f(c + 0.5 * h * t) * (0.5 * h * w);
        }
    }
    sum
}

fn graded_intervals(a: f64, b: f64, s0: f64, stop: f64, ratio: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(from, to) in &[(s0, b), (s0, a)] {
        let len = (to - from).abs();
        if len <= 0.0 {
            continue;
        }
        let sgn = (to - from).signum();
        let mut outer = len;
        loop {
            let inner = outer * ratio;
            if outer <= stop {
                out.push((from.min(from + sgn * outer), from.max(from + sgn * outer)));
                break;
            }
            let p = from + sgn * inner;
            let q = from + sgn * outer;
            out.push((p.min(q), p.max(q)));
            outer = inner;
        }
    }
    out
}

/// Sub-panels of `[a, b]` graded towards `t0`, stopping once the innermost
/// panel is no longer than `stop`.
pub fn graded_arcs(a: Arc, b: Arc, t0: Arc, stop: f64, ratio: f64) -> Vec<(Arc, Arc)> {
    let mut out = Vec::new();
    // right part [t0, b]
    let right = Arc::span(t0, b);
    if right > 0.0 {
        let mut u = 1.0;
        loop {
            if right * u <= stop {
                out.push((t0, Arc::lerp(t0, b, u)));
                break;
            }
            let v = u * ratio;
            out.push((Arc::lerp(t0, b, v), Arc::lerp(t0, b, u)));
            u = v;
        }
    }
    let left = Arc::span(a, t0);
    if left > 0.0 {
        let mut u = 1.0;
        loop {
            // distance from t0 towards a is u*left
            if left * u <= stop {
                out.push((Arc::lerp(a, t0, 1.0 - u), t0));
                break;
            }
            let v = u * ratio;
            out.push((Arc::lerp(a, t0, 1.0 - u), Arc::lerp(a, t0, 1.0 - v)));
            u = v;
        }
    }
    out
}

/// Uniform panels of `[a, b]` sized by [`QuadSettings::panel_count`].
pub fn uniform_arcs(a: Arc, b: Arc, n: usize) -> Vec<(Arc, Arc)> {
    let mut out = Vec::with_capacity(n);
    let mut prev = a;
    for i in 1..=n {
        let next = if i == n { b } else { Arc::lerp(a, b, i as f64 / n as f64) };
        out.push((prev, next));
        prev = next;
    }
    out
}

/// Gauss nodes of a single panel as `(arc, weight, reference coordinate)`.
#[inline]
pub fn panel_nodes(a: Arc, b: Arc, q: usize) -> impl Iterator<Item = (Arc, f64, f64)> {
    let rule = gauss(q);
    let h = Arc::span(a, b);
    rule.nodes
        .iter()
        .zip(rule.weights.iter())
        .map(move |(&t, &w)| (Arc::lerp(a, b, 0.5 * (t + 1.0)), 0.5 * h * w, t))
}

/// Quadrature points on one element with all basis values.
#[derive(Debug, Clone)]
pub struct ElementRule {
    pub panels: Vec<(Arc, Arc)>,
    /// `panel_points` consecutive nodes per panel.
    pub points: Vec<BoundaryPoint>,
    pub weights: Vec<f64>,
    /// Row-major `points × n_funcs` basis values.
    pub values: Vec<Complex64>,
    pub n_funcs: usize,
}

/// Integration context shared by all assembly routines.
pub struct QuadContext<'a> {
    pub scene: &'a Scene,
    pub k: f64,
    pub settings: QuadSettings,
}

impl<'a> QuadContext<'a> {
    pub fn new(scene: &'a Scene, settings: QuadSettings) -> Self {
        QuadContext {
            scene,
            k: scene.k,
            settings,
        }
    }

    /// Standard panels of an element.
    pub fn element_panels(&self, e: &Element) -> Vec<(Arc, Arc)> {
        let n = self.settings.panel_count(e.width(), self.k);
        uniform_arcs(e.a, e.b, n)
    }

    /// Standard rule with basis values for an element.
    pub fn element_rule(&self, e: &Element) -> ElementRule {
        let panels = self.element_panels(e);
        self.rule_from_panels(e, panels)
    }

    fn rule_from_panels(&self, e: &Element, panels: Vec<(Arc, Arc)>) -> ElementRule {
        let q = self.settings.panel_points;
        let f = e.n_funcs();
        let mut points = Vec::with_capacity(panels.len() * q);
        let mut weights = Vec::with_capacity(panels.len() * q);
        let mut values = vec![Complex64::new(0.0, 0.0); panels.len() * q * f];
        let mut idx = 0;
        for &(a, b) in &panels {
            for (arc, w, _) in panel_nodes(a, b, q) {
                points.push(self.scene.point(e.boundary, e.piece, arc));
                weights.push(w);
                e.eval_all(self.k, arc, &mut values[idx * f..(idx + 1) * f]);
                idx += 1;
            }
        }
        ElementRule {
            panels,
            points,
            weights,
            values,
            n_funcs: f,
        }
    }

    /// Outer rule graded towards the requested element ends.
    pub fn graded_outer_rule(&self, e: &Element, at_start: bool, at_end: bool) -> ElementRule {
        let base = self.element_panels(e);
        let mut panels = Vec::new();
        let np = base.len();
        let sig = self.settings.grading_ratio;
        let levels = self.settings.outer_levels;
        for (i, &(a, b)) in base.iter().enumerate() {
            let gs = at_start && i == 0;
            let ge = at_end && i + 1 == np;
            if !gs && !ge {
                panels.push((a, b));
                continue;
            }
            // cut points in reference fraction, graded towards whichever ends are requested
            let mut cuts = vec![0.0, 1.0];
            for l in 1..=levels {
                let f = sig.powi(l as i32);
                if gs {
                    cuts.push(if ge { 0.5 * f } else { f });
                }
                if ge {
                    cuts.push(if gs { 1.0 - 0.5 * f } else { 1.0 - f });
                }
            }
            if gs && ge {
                cuts.push(0.5);
            }
            cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for w in cuts.windows(2) {
                panels.push((Arc::lerp(a, b, w[0]), Arc::lerp(a, b, w[1])));
            }
        }
        self.rule_from_panels(e, panels)
    }

    /// Closest arc of panel `[pa, pb]` on `e` to `x` and the distance.
    #[inline]
    pub fn nearest(&self, x: &BoundaryPoint, boundary: usize, piece: usize, pa: Arc, pb: Arc) -> (Arc, f64) {
        if x.boundary == boundary && x.piece == piece {
            if x.arc.s < pa.s {
                return (pa, Arc::span(x.arc, pa));
            }
            if x.arc.s > pb.s {
                return (pb, Arc::span(pb, x.arc));
            }
            return (x.arc, 0.0);
        }
        let scene = self.scene;
        let h = Arc::span(pa, pb);
        let start = scene.point(boundary, piece, pa);
        let dv = scene.diff(x, &start);
        let tau = scene.boundary(boundary).tangents[piece];
        let t = dot(dv, tau).clamp(0.0, h);
        let t0 = if t <= 0.0 {
            pa
        } else if t >= h {
            pb
        } else {
            Arc::lerp(pa, pb, t / h)
        };
        let p0 = scene.point(boundary, piece, t0);
        (t0, norm(scene.diff(x, &p0)))
    }

    /// Size of the innermost graded panel: the distance to the singular point
    /// when positive (so that corner-adjacent points stay resolved), otherwise
    /// the relative singular depth.
    #[inline]
    pub fn grading_stop(&self, d: f64, h: f64) -> f64 {
        if d > 0.0 {
            d
        } else {
            self.settings.singular_depth * h
        }
    }

    /// `out[i] = ∫_e K(x,y) φ_i(y) ds(y)` for every function `φ_i` on `e`.
    pub fn element_potential(
        &self,
        kernel: &dyn Kernel,
        x: &BoundaryPoint,
        e: &Element,
        rule: &ElementRule,
        out: &mut [Complex64],
    ) {
        let f = e.n_funcs();
        for o in out.iter_mut() {
            *o = Complex64::new(0.0, 0.0);
        }
        let scene = self.scene;
        let same_piece = x.boundary == e.boundary && x.piece == e.piece;
        let inside = same_piece && x.arc.s > e.a.s && x.arc.s < e.b.s;
        let hil = if inside { kernel.hilbert(x) } else { 0.0 };
        let mut phi_x = [Complex64::new(0.0, 0.0); 128];
        if hil != 0.0 {
            e.eval_all(self.k, x.arc, &mut phi_x[..f]);
        }
        let q = self.settings.panel_points;
        let mut vals = [Complex64::new(0.0, 0.0); 128];
        for (pi, &(pa, pb)) in rule.panels.iter().enumerate() {
            let h = Arc::span(pa, pb);
            let (t0, d) = self.nearest(x, e.boundary, e.piece, pa, pb);
            if d >= self.settings.near_factor * h {
                for node in pi * q..(pi + 1) * q {
                    let y = &rule.points[node];
                    let dv = scene.diff(x, y);
                    let r = norm(dv);
                    let kv = kernel.eval(x, y, dv, r) * rule.weights[node];
                    let row = &rule.values[node * f..(node + 1) * f];
                    for i in 0..f {
                        out[i] += kv * row[i];
                    }
                    if hil != 0.0 {
                        let c = hil * rule.weights[node] / Arc::span(y.arc, x.arc);
                        for i in 0..f {
                            out[i] -= phi_x[i] * c;
                        }
                    }
                }
            } else {
                let stop = self.grading_stop(d, h);
                for (sa, sb) in graded_arcs(pa, pb, t0, stop, self.settings.grading_ratio) {
                    for (arc, w, _) in panel_nodes(sa, sb, q) {
                        let y = scene.point(e.boundary, e.piece, arc);
                        let dv = scene.diff(x, &y);
                        let r = norm(dv);
                        if r == 0.0 {
                            continue;
                        }
                        e.eval_all(self.k, arc, &mut vals[..f]);
                        let kv = kernel.eval(x, &y, dv, r) * w;
                        for i in 0..f {
                            out[i] += kv * vals[i];
                        }
                        if hil != 0.0 {
                            let c = hil * w / Arc::span(arc, x.arc);
                            for i in 0..f {
                                out[i] -= phi_x[i] * c;
                            }
                        }
                    }
                }
            }
        }
        if hil != 0.0 {
            let left = Arc::span(e.a, x.arc);
            let right = Arc::span(x.arc, e.b);
            let lg = (left / right).ln() * hil;
            for i in 0..f {
                out[i] += phi_x[i] * lg;
            }
        }
    }

    /// Whether `e1` touches `e2` at its start / end (including `e1 == e2`).
    pub fn touching(&self, e1: &Element, e2: &Element) -> (bool, bool) {
        if e1.boundary != e2.boundary {
            return (false, false);
        }
        if e1 == e2 {
            return (true, true);
        }
        let n = self.scene.boundary(e1.boundary).n_pieces();
        let mut start = false;
        let mut end = false;
        if e1.piece == e2.piece {
            start = e1.a == e2.b;
            end = e1.b == e2.a;
        } else {
            if (e1.piece + 1) % n == e2.piece && e1.b.r == 0.0 && e2.a.s == 0.0 {
                end = true;
            }
            if (e2.piece + 1) % n == e1.piece && e1.a.s == 0.0 && e2.b.r == 0.0 {
                start = true;
            }
        }
        (start, end)
    }

    /// Galerkin block `(K φ_n, ψ_m)` for all test functions on `e1` and trial functions on `e2`,
    /// row-major `f1 × f2`. The `½I` part is included when `e1 == e2`.
    pub fn element_pair_block(
        &self,
        kernel: &dyn Kernel,
        e1: &Element,
        r1: &ElementRule,
        e2: &Element,
        r2: &ElementRule,
        out: &mut [Complex64],
    ) {
        let f1 = e1.n_funcs();
        let f2 = e2.n_funcs();
        for o in out.iter_mut() {
            *o = Complex64::new(0.0, 0.0);
        }
        let (ts, te) = self.touching(e1, e2);
        let graded;
        let outer = if ts || te {
            graded = self.graded_outer_rule(e1, ts, te);
            &graded
        } else {
            r1
        };
        let same = e1 == e2;
        let mut pot = vec![Complex64::new(0.0, 0.0); f2];
        for (a, x) in outer.points.iter().enumerate() {
            self.element_potential(kernel, x, e2, r2, &mut pot);
            let test = &outer.values[a * f1..(a + 1) * f1];
            if same {
                let c = kernel.half_identity(x) * 0.5;
                if c != Complex64::new(0.0, 0.0) {
                    for n in 0..f2 {
                        pot[n] += c * test[n];
                    }
                }
            }
            let w = outer.weights[a];
            for m in 0..f1 {
                let t = test[m].conj() * w;
                let row = &mut out[m * f2..(m + 1) * f2];
                for n in 0..f2 {
                    row[n] += t * pot[n];
                }
            }
        }
    }
}

/// Single Galerkin entry `(K φ_trial, φ_test)` including the `½I` part.
pub fn galerkin_entry(
    ctx: &QuadContext,
    space: &BasisSpace,
    kernel: &dyn Kernel,
    test: usize,
    trial: usize,
) -> crate::error::Result<Complex64> {
    let &(e1i, i1) = space.dof_map.get(test).ok_or(crate::error::HnaError::BadIndex(test))?;
    let &(e2i, i2) = space.dof_map.get(trial).ok_or(crate::error::HnaError::BadIndex(trial))?;
    let e1 = &space.elements[e1i];
    let e2 = &space.elements[e2i];
    let r1 = ctx.element_rule(e1);
    let r2 = ctx.element_rule(e2);
    let mut blk = vec![Complex64::new(0.0, 0.0); e1.n_funcs() * e2.n_funcs()];
    ctx.element_pair_block(kernel, e1, &r1, e2, &r2, &mut blk);
    Ok(blk[i1 * e2.n_funcs() + i2])
}

/// Barycentric weights for Lagrange interpolation through Gauss nodes.
pub fn barycentric_weights(q: usize) -> Vec<f64> {
    let r = gauss(q);
    r.nodes
        .iter()
        .zip(&r.weights)
        .enumerate()
        .map(|(j, (&x, &w))| {
            let s = ((1.0 - x * x) * w).sqrt();
            if j % 2 == 0 {
                s
            } else {
                -s
            }
        })
        .collect()
}

/// Lagrange basis values at `t` for the `q` Gauss nodes.
#[inline]
pub fn lagrange_values(q: usize, bw: &[f64], t: f64, out: &mut [f64]) {
    let nodes = &gauss(q).nodes;
    for j in 0..q {
        if t == nodes[j] {
            for (i, o) in out.iter_mut().enumerate().take(q) {
                *o = if i == j { 1.0 } else { 0.0 };
            }
            return;
        }
    }
    let mut den = 0.0;
    for j in 0..q {
        let v = bw[j] / (t - nodes[j]);
        out[j] = v;
        den += v;
    }
    for o in out.iter_mut().take(q) {
        *o /= den;
    }
}
