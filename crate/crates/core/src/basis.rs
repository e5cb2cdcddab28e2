//! Approximation spaces: the single-mesh HNA space on Γ (Legendre polynomials
//! times `e^{±iks}` with one direction removed near corners) and the standard
//! hp space on γ.

use crate::error::{HnaError, Result};
use crate::geometry::{Arc, ConvexPolygon, Scene};
use crate::mesh::{degree_vector, graded_mesh, quasi_uniform_count, subdivide, DegreeVector, GradedMesh};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Which part of ∂D a function lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum BoundaryTag {
    Big,
    Small,
}

/// Legendre polynomials `P_0..P_n` at `u` by the three-term recurrence.
#[inline]
pub fn legendre_all(n: usize, u: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if n == 0 {
        return;
    }
    out[1] = u;
    for l in 1..n {
        let lf = l as f64;
        out[l + 1] = ((2.0 * lf + 1.0) * u * out[l] - lf * out[l - 1]) / (lf + 1.0);
    }
}

/// One mesh element with every basis function supported on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub boundary: usize,
    pub piece: usize,
    pub a: Arc,
    pub b: Arc,
    pub degree: usize,
    /// Phase directions present, each carrying `degree + 1` functions.
    pub dirs: Vec<i8>,
    pub first_dof: usize,
    /// Global arclength of the start of the piece on its boundary.
    pub piece_offset: f64,
}

impl Element {
    pub fn width(&self) -> f64 {
        Arc::span(self.a, self.b)
    }
    pub fn n_funcs(&self) -> usize {
        self.dirs.len() * (self.degree + 1)
    }
    /// Local reference coordinate in `[-1, 1]` of an arc inside the element.
    #[inline]
    pub fn reference(&self, t: Arc) -> f64 {
        let h = self.width();
        2.0 * Arc::span(self.a, t) / h - 1.0
    }
    /// Values of all functions on this element at `t` (assumed inside it).
    #[inline]
    pub fn eval_all(&self, k: f64, t: Arc, out: &mut [Complex64]) {
        let u = self.reference(t);
        let mut leg = [0.0f64; 64];
        legendre_all(self.degree, u, &mut leg);
        let q = self.degree + 1;
        let s_glob = self.piece_offset + t.s;
        for (di, &d) in self.dirs.iter().enumerate() {
            let ph = if d == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, d as f64 * k * s_glob)
            };
            for l in 0..q {
                out[di * q + l] = ph * leg[l];
            }
        }
    }
    /// Direction and Legendre index of the `i`-th local function.
    pub fn local(&self, i: usize) -> (i8, usize) {
        let q = self.degree + 1;
        (self.dirs[i / q], i % q)
    }
    /// L² norm of local function `i`.
    pub fn l2_norm(&self, i: usize) -> f64 {
        let (_, l) = self.local(i);
        (self.width() / (2.0 * l as f64 + 1.0)).sqrt()
    }
}

/// Descriptor of a single basis function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisFunction {
    pub tag: BoundaryTag,
    pub boundary: usize,
    pub piece: usize,
    pub a: f64,
    pub b: f64,
    pub degree: usize,
    pub dir: i8,
    pub dof: usize,
}

/// An indexed set of basis functions grouped by element.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpace {
    pub k: f64,
    pub elements: Vec<Element>,
    /// Number of DOFs on Γ (listed first).
    pub n_big: usize,
    /// Number of DOFs on γ.
    pub n_small: usize,
    /// Per-side graded meshes of Γ (empty for a pure γ space).
    pub meshes: Vec<GradedMesh>,
    pub degree_vectors: Vec<DegreeVector>,
    /// Per-side removal threshold `x_ñ_j` (None when no node qualifies).
    pub thresholds: Vec<Option<f64>>,
    /// Element index owning each DOF, and its local index.
    pub dof_map: Vec<(usize, usize)>,
}

impl BasisSpace {
    pub fn n_dofs(&self) -> usize {
        self.n_big + self.n_small
    }

    fn rebuild_map(&mut self) {
        let n = self.n_dofs();
        let mut map = vec![(0, 0); n];
        for (ei, e) in self.elements.iter().enumerate() {
            for i in 0..e.n_funcs() {
                map[e.first_dof + i] = (ei, i);
            }
        }
        self.dof_map = map;
    }

    /// Descriptor of DOF `dof`.
    pub fn function(&self, dof: usize) -> Result<BasisFunction> {
        let &(ei, i) = self.dof_map.get(dof).ok_or(HnaError::BadIndex(dof))?;
        let e = &self.elements[ei];
        let (dir, l) = e.local(i);
        Ok(BasisFunction {
            tag: if e.boundary == 0 { BoundaryTag::Big } else { BoundaryTag::Small },
            boundary: e.boundary,
            piece: e.piece,
            a: e.piece_offset + e.a.s,
            b: e.piece_offset + e.b.s,
            degree: l,
            dir,
            dof,
        })
    }

    pub fn functions(&self) -> Vec<BasisFunction> {
        (0..self.n_dofs()).map(|d| self.function(d).unwrap()).collect()
    }

    /// L² norm of each basis function.
    pub fn norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        for e in &self.elements {
            for i in 0..e.n_funcs() {
                out[e.first_dof + i] = e.l2_norm(i);
            }
        }
        out
    }

    /// Concatenate a Γ space and a γ space, renumbering the second.
    pub fn combine(big: BasisSpace, small: BasisSpace) -> BasisSpace {
        let offset = big.n_dofs();
        let mut elements = big.elements;
        for mut e in small.elements {
            e.first_dof += offset;
            elements.push(e);
        }
        let mut s = BasisSpace {
            k: big.k,
            elements,
            n_big: big.n_big + big.n_small,
            n_small: small.n_big + small.n_small,
            meshes: big.meshes,
            degree_vectors: big.degree_vectors,
            thresholds: big.thresholds,
            dof_map: vec![],
        };
        s.rebuild_map();
        s
    }
}

/// Evaluate DOF `dof` at arclength `s` on its own boundary (zero off its support).
pub fn eval_basis(space: &BasisSpace, dof: usize, s: f64) -> Result<Complex64> {
    let &(ei, i) = space.dof_map.get(dof).ok_or(HnaError::BadIndex(dof))?;
    let e = &space.elements[ei];
    let a = e.piece_offset + e.a.s;
    let b = e.piece_offset + e.b.s;
    if !(s > a && s < b) && !(s == a || s == b) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let len = e.a.s + e.a.r;
    let t = Arc::new(s - e.piece_offset, len);
    let mut vals = vec![Complex64::new(0.0, 0.0); e.n_funcs()];
    e.eval_all(space.k, t, &mut vals);
    Ok(vals[i])
}

/// Default `α = max{(1+p)/4, 2}`.
pub fn default_alpha(p: usize) -> f64 {
    ((1.0 + p as f64) / 4.0).max(2.0)
}

/// Options for the HNA space on Γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HnaOptions {
    pub p: usize,
    pub sigma: f64,
    pub layers: usize,
    pub alpha: f64,
}

impl HnaOptions {
    pub fn defaults(p: usize) -> Self {
        HnaOptions {
            p,
            sigma: crate::mesh::DEFAULT_SIGMA,
            layers: 2 * p.max(1),
            alpha: default_alpha(p),
        }
    }
}

/// Removal threshold `x_ñ = max{x_i : x_i ≤ α 2π/k}` over interior nodes, or None.
pub fn removal_threshold(mesh: &GradedMesh, alpha: f64, k: f64) -> Option<f64> {
    let lim = alpha * 2.0 * PI / k;
    mesh.nodes
        .iter()
        .skip(1)
        .map(|a| a.s)
        .filter(|&x| x <= lim && x <= 0.5 * mesh.length)
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))))
}

/// The single-mesh HNA space on Γ.
pub fn build_hna_space(poly: &ConvexPolygon, k: f64, opts: &HnaOptions) -> Result<BasisSpace> {
    if opts.p < 1 {
        return Err(HnaError::Invalid("p must be at least 1".into()));
    }
    let bd = &poly.boundary;
    let mut elements = Vec::new();
    let mut meshes = Vec::new();
    let mut degs = Vec::new();
    let mut thresholds = Vec::new();
    let mut dof = 0;
    for j in 0..bd.n_pieces() {
        let l = bd.lengths[j];
        let max_alpha = l * k / (4.0 * PI);
        if !(opts.alpha >= 0.0 && opts.alpha < max_alpha) {
            return Err(HnaError::AlphaOutOfRange {
                alpha: opts.alpha,
                max: max_alpha,
            });
        }
        let mesh = graded_mesh(l, opts.layers, opts.sigma)?;
        let dv = degree_vector(opts.p, opts.layers);
        let thr = removal_threshold(&mesh, opts.alpha, k);
        for e in 0..mesh.n_elements() {
            let a = mesh.nodes[e];
            let b = mesh.nodes[e + 1];
            let dirs = match thr {
                Some(x) if b.s <= x => vec![-1],
                Some(x) if a.r <= x => vec![1],
                _ => vec![1, -1],
            };
            let el = Element {
                boundary: 0,
                piece: j,
                a,
                b,
                degree: dv.element_degree(e),
                dirs,
                first_dof: dof,
                piece_offset: bd.cumulative[j],
            };
            dof += el.n_funcs();
            elements.push(el);
        }
        meshes.push(mesh);
        degs.push(dv);
        thresholds.push(thr);
    }
    let mut s = BasisSpace {
        k,
        elements,
        n_big: dof,
        n_small: 0,
        meshes,
        degree_vectors: degs,
        thresholds,
        dof_map: vec![],
    };
    s.rebuild_map();
    Ok(s)
}

/// Options for the standard hp space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpOptions {
    pub p: usize,
    pub sigma: f64,
    pub layers: usize,
    /// Oversampling constant `c` of the quasi-uniform rule.
    pub oversampling: f64,
    /// Grade each straight piece towards its corners.
    pub graded: bool,
}

impl HpOptions {
    pub fn defaults(p: usize) -> Self {
        HpOptions {
            p,
            sigma: crate::mesh::DEFAULT_SIGMA,
            layers: 2 * p.max(1),
            oversampling: crate::mesh::DEFAULT_OVERSAMPLING,
            graded: true,
        }
    }
}

/// Piecewise-polynomial elements on one boundary, numbered from `first_dof`.
pub fn hp_elements(scene: &Scene, boundary: usize, k: f64, opts: &HpOptions, first_dof: usize) -> Result<Vec<Element>> {
    if opts.p < 1 {
        return Err(HnaError::Invalid("p must be at least 1".into()));
    }
    let bd = scene.boundary(boundary);
    let mut out = Vec::new();
    let mut dof = first_dof;
    for j in 0..bd.n_pieces() {
        let l = bd.lengths[j];
        let mut coarse: Vec<(Arc, Arc, usize)> = Vec::new();
        if opts.graded {
            let mesh = graded_mesh(l, opts.layers, opts.sigma)?;
            let dv = degree_vector(opts.p, opts.layers);
            for e in 0..mesh.n_elements() {
                coarse.push((mesh.nodes[e], mesh.nodes[e + 1], dv.element_degree(e)));
            }
        } else {
            coarse.push((Arc::new(0.0, l), Arc::from_end(0.0, l), opts.p));
        }
        for (a, b, q) in coarse {
            let m = quasi_uniform_count(Arc::span(a, b), k, q.max(1), opts.oversampling);
            let nodes = subdivide(a, b, m);
            for w in nodes.windows(2) {
                let el = Element {
                    boundary,
                    piece: j,
                    a: w[0],
                    b: w[1],
                    degree: q,
                    dirs: vec![0],
                    first_dof: dof,
                    piece_offset: bd.cumulative[j],
                };
                dof += el.n_funcs();
                out.push(el);
            }
        }
    }
    Ok(out)
}

/// The standard hp space on all small obstacles.
pub fn build_hp_space(scene: &Scene, k: f64, opts: &HpOptions) -> Result<BasisSpace> {
    let mut elements = Vec::new();
    let mut dof = 0;
    for b in 1..scene.n_boundaries() {
        let els = hp_elements(scene, b, k, opts, dof)?;
        dof = els.last().map_or(dof, |e| e.first_dof + e.n_funcs());
        elements.extend(els);
    }
    let mut s = BasisSpace {
        k,
        elements,
        n_big: 0,
        n_small: dof,
        meshes: vec![],
        degree_vectors: vec![],
        thresholds: vec![],
        dof_map: vec![],
    };
    s.rebuild_map();
    Ok(s)
}

/// A plain hp space on every boundary (Γ first), used by the standard BEM oracle.
pub fn build_standard_space(scene: &Scene, k: f64, opts: &HpOptions) -> Result<BasisSpace> {
    let big = hp_elements(scene, 0, k, opts, 0)?;
    let n_big = big.last().map_or(0, |e| e.first_dof + e.n_funcs());
    let mut elements = big;
    let mut dof = n_big;
    for b in 1..scene.n_boundaries() {
        let els = hp_elements(scene, b, k, opts, dof)?;
        dof = els.last().map_or(dof, |e| e.first_dof + e.n_funcs());
        elements.extend(els);
    }
    let mut s = BasisSpace {
        k,
        elements,
        n_big,
        n_small: dof - n_big,
        meshes: vec![],
        degree_vectors: vec![],
        thresholds: vec![],
        dof_map: vec![],
    };
    s.rebuild_map();
    Ok(s)
}

/// The coupled space `V^HNA(Γ) × V^hp(γ)` with default parameters for degree `p`.
pub fn build_coupled_space(scene: &Scene, hna: &HnaOptions, hp: &HpOptions) -> Result<BasisSpace> {
    let big = build_hna_space(&scene.polygon, scene.k, hna)?;
    let small = build_hp_space(scene, scene.k, hp)?;
    Ok(BasisSpace::combine(big, small))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_polygon;

    fn triangle(side: f64) -> ConvexPolygon {
        let h = side * 3f64.sqrt() / 2.0;
        build_polygon(&[[0.0, 0.0], [side, 0.0], [side / 2.0, h]]).unwrap()
    }

    #[test]
    fn legendre_values() {
        let mut p = [0.0; 5];
        legendre_all(4, 0.5, &mut p);
        assert!((p[2] - (-0.125)).abs() < 1e-15);
        assert!((p[4] - (-0.2890625)).abs() < 1e-15);
    }

    #[test]
    fn removal_example() {
        let poly = triangle(2.0 * PI);
        let opts = HnaOptions { p: 1, sigma: 0.15, layers: 2, alpha: 2.0 };
        let s = build_hna_space(&poly, 20.0, &opts).unwrap();
        let thr = s.thresholds[0].unwrap();
        assert!((thr - 0.141372).abs() < 1e-6);
        let side0: Vec<_> = s.elements.iter().filter(|e| e.piece == 0).collect();
        assert_eq!(side0[0].dirs, vec![-1]);
        assert_eq!(side0[1].dirs, vec![1, -1]);
        assert_eq!(side0[4].dirs, vec![1]);
    }

    #[test]
    fn no_removal_below_first_node() {
        let poly = triangle(2.0 * PI);
        let opts = HnaOptions { p: 1, sigma: 0.15, layers: 2, alpha: 0.01 };
        let s = build_hna_space(&poly, 20.0, &opts).unwrap();
        assert!(s.thresholds.iter().all(|t| t.is_none()));
        assert!(s.elements.iter().all(|e| e.dirs.len() == 2));
    }

    #[test]
    fn alpha_out_of_range() {
        let poly = triangle(2.0 * PI);
        let opts = HnaOptions { p: 2, sigma: 0.15, layers: 4, alpha: 50.0 };
        assert!(matches!(
            build_hna_space(&poly, 20.0, &opts),
            Err(HnaError::AlphaOutOfRange { .. })
        ));
    }

    #[test]
    fn eval_examples() {
        let poly = triangle(2.0 * PI);
        let opts = HnaOptions { p: 2, sigma: 0.15, layers: 4, alpha: 2.0 };
        let k = 20.0;
        let s = build_hna_space(&poly, k, &opts).unwrap();
        // middle element of side 0 carries both directions
        let e = s.elements.iter().find(|e| e.piece == 0 && e.dirs.len() == 2 && e.degree == 2).unwrap();
        let a = e.a.s;
        let b = e.b.s;
        let mid = 0.5 * (a + b);
        let v0 = eval_basis(&s, e.first_dof, mid).unwrap();
        assert!((v0 - Complex64::from_polar(1.0, k * mid)).norm() < 1e-12);
        let v1 = eval_basis(&s, e.first_dof + 1, mid).unwrap();
        assert!(v1.norm() < 1e-12);
        assert_eq!(eval_basis(&s, e.first_dof, b + 0.1).unwrap(), Complex64::new(0.0, 0.0));
        assert!(eval_basis(&s, s.n_dofs(), mid).is_err());
    }
}
