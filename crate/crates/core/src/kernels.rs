//! Boundary integral operators as evaluable kernels: the combined potential
//! operator, the interaction operator G_{γ→Γ}, right-hand side data and the
//! star-combined kernel with its coercivity constant.

use crate::error::{HnaError, Result};
use crate::geometry::{self, dot, norm, sub, BoundaryPoint, Point, Scene};
use crate::quadrature::{integrate_oscillatory, QuadSettings};
use crate::special_functions::{bessel_01, dphi_factor, phi_from_r};
use num_complex::Complex64;
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A kernel `K(x,y)` of an integral operator `∫ K(x,y) φ(y) ds(y)` on ∂D,
/// optionally accompanied by a multiple of the identity.
pub trait Kernel: Sync + Send {
    /// Kernel value for `x ≠ y`; `d = x − y`, `r = |d|`.
    fn eval(&self, x: &BoundaryPoint, y: &BoundaryPoint, d: Point, r: f64) -> Complex64;
    /// Coefficient `c(x)` of the `c(x)·½I` part (applied when `x` and `y` share a boundary).
    fn half_identity(&self, _x: &BoundaryPoint) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    /// Coefficient `h` of a Cauchy part `h/(s − t)` on the piece containing `x`
    /// (`s`, `t` are arclengths of `x` and `y`); zero for weakly singular kernels.
    fn hilbert(&self, _x: &BoundaryPoint) -> f64 {
        0.0
    }
}

/// `a·D'_k + b·S_k + c·½I`, covering `A_{k,η} = ½I + D'_k − iηS_k`.
#[derive(Debug, Clone, Copy)]
pub struct LayerKernel {
    pub k: f64,
    pub dl: f64,
    pub sl: Complex64,
    pub half: f64,
}

impl LayerKernel {
    pub fn combined(k: f64, eta: f64) -> Self {
        LayerKernel {
            k,
            dl: 1.0,
            sl: Complex64::new(0.0, -eta),
            half: 1.0,
        }
    }
    pub fn single_layer(k: f64) -> Self {
        LayerKernel {
            k,
            dl: 0.0,
            sl: Complex64::new(1.0, 0.0),
            half: 0.0,
        }
    }
    pub fn adjoint_double_layer(k: f64) -> Self {
        LayerKernel {
            k,
            dl: 1.0,
            sl: Complex64::new(0.0, 0.0),
            half: 0.0,
        }
    }
}

impl Kernel for LayerKernel {
    #[inline]
    fn eval(&self, x: &BoundaryPoint, y: &BoundaryPoint, d: Point, r: f64) -> Complex64 {
        let b = bessel_01(self.k * r);
        let h0 = b.h0();
        let phi = Complex64::new(-0.25 * h0.im, 0.25 * h0.re);
        let mut v = self.sl * phi;
        // (x − y)·n_x vanishes identically for points on one straight piece
        if self.dl != 0.0 && !(x.boundary == y.boundary && x.piece == y.piece) {
            let h1 = b.h1();
            let f = Complex64::new(0.25 * self.k * h1.im / r, -0.25 * self.k * h1.re / r);
            v += f * (self.dl * dot(d, x.normal));
        }
        v
    }
    fn half_identity(&self, _x: &BoundaryPoint) -> Complex64 {
        Complex64::new(self.half, 0.0)
    }
}

/// Kernel of G_{γ→Γ}: `−2 ∂Φ_k(x,y)/∂n_j(x) χ(y ∈ U_j)` for `x` on side `j` of Γ.
#[derive(Debug, Clone)]
pub struct InteractionKernel {
    pub k: f64,
    vertices: Vec<Point>,
    normals: Vec<Point>,
}

impl InteractionKernel {
    pub fn new(scene: &Scene) -> Self {
        InteractionKernel {
            k: scene.k,
            vertices: scene.polygon.boundary.vertices.clone(),
            normals: scene.polygon.boundary.normals.clone(),
        }
    }
    #[inline]
    pub fn in_half_plane(&self, j: usize, y: Point) -> bool {
        dot(self.normals[j], sub(y, self.vertices[j])) > 0.0
    }
}

impl Kernel for InteractionKernel {
    #[inline]
    fn eval(&self, x: &BoundaryPoint, y: &BoundaryPoint, d: Point, r: f64) -> Complex64 {
        if !self.in_half_plane(x.piece, y.pos) {
            return Complex64::new(0.0, 0.0);
        }
        dphi_factor(self.k, r) * (-2.0 * dot(d, x.normal))
    }
}

/// Star centres `x^c_i`, one per boundary component (index 0 is Γ).
#[derive(Debug, Clone, PartialEq)]
pub struct StarDescriptor {
    pub centers: Vec<Point>,
}

impl StarDescriptor {
    /// Centroids of every component.
    pub fn centroids(scene: &Scene) -> Self {
        StarDescriptor {
            centers: (0..scene.n_boundaries())
                .map(|b| scene.boundary(b).centroid())
                .collect(),
        }
    }
    #[inline]
    pub fn z(&self, boundary: usize, x: Point) -> Point {
        sub(x, self.centers[boundary])
    }
    /// Check `Z·n > 0` on every piece of every component.
    pub fn validate(&self, scene: &Scene) -> Result<()> {
        for b in 0..scene.n_boundaries() {
            if essinf_z_dot_n_component(scene, self, b) <= 0.0 {
                return Err(HnaError::NotStarShaped(b));
            }
        }
        Ok(())
    }
}

/// Star-combined kernel `Z(x)·∇_xΦ_k − i(k|Z(x)| + i/2)Φ_k`, with `(Z·n)·½I`.
#[derive(Debug, Clone)]
pub struct StarCombinedKernel {
    pub k: f64,
    pub star: StarDescriptor,
    tangents: Vec<Vec<Point>>,
}

impl StarCombinedKernel {
    pub fn new(scene: &Scene, star: StarDescriptor) -> Self {
        StarCombinedKernel {
            k: scene.k,
            tangents: (0..scene.n_boundaries())
                .map(|b| scene.boundary(b).tangents.clone())
                .collect(),
            star,
        }
    }
}

impl Kernel for StarCombinedKernel {
    #[inline]
    fn eval(&self, x: &BoundaryPoint, _y: &BoundaryPoint, d: Point, r: f64) -> Complex64 {
        let z = self.star.z(x.boundary, x.pos);
        let b = bessel_01(self.k * r);
        let h0 = b.h0();
        let h1 = b.h1();
        let phi = Complex64::new(-0.25 * h0.im, 0.25 * h0.re);
        let f = Complex64::new(0.25 * self.k * h1.im / r, -0.25 * self.k * h1.re / r);
        f * dot(z, d) + Complex64::new(0.5, -self.k * norm(z)) * phi
    }
    fn half_identity(&self, x: &BoundaryPoint) -> Complex64 {
        Complex64::new(dot(self.star.z(x.boundary, x.pos), x.normal), 0.0)
    }
    fn hilbert(&self, x: &BoundaryPoint) -> f64 {
        let z = self.star.z(x.boundary, x.pos);
        -dot(z, self.tangents[x.boundary][x.piece]) / (2.0 * PI)
    }
}

/// `∂Φ_k/∂n(x) − iηΦ_k(x,y)` (the ½I part is not a kernel).
pub fn combined_kernel(k: f64, eta: f64, x: Point, y: Point, n_x: Point) -> Result<Complex64> {
    let d = sub(x, y);
    let r = norm(d);
    if r == 0.0 {
        return Err(HnaError::CoincidentPoints);
    }
    Ok(dphi_factor(k, r) * dot(d, n_x) - I * eta * phi_from_r(k, r))
}

/// Star-combined kernel at free points with explicit `Z(x)`.
pub fn star_combined_kernel(k: f64, z: Point, x: Point, y: Point) -> Result<Complex64> {
    let d = sub(x, y);
    let r = norm(d);
    if r == 0.0 {
        return Err(HnaError::CoincidentPoints);
    }
    Ok(dphi_factor(k, r) * dot(z, d) - I * Complex64::new(k * norm(z), 0.5) * phi_from_r(k, r))
}

/// `f_{k,η}(x) = (ik d·n − iη) e^{ik x·d}`.
pub fn rhs_data(scene: &Scene, x: Point, n: Point) -> Complex64 {
    I * (scene.k * dot(scene.d, n) - scene.eta) * scene.incident(x)
}

/// `C_G(k) = √(L_Γ L_γ k/(2π dist)) + √(L_Γ L_γ)/(π dist)`.
pub fn interaction_norm_bound(scene: &Scene) -> Result<f64> {
    let dist = geometry::separation(scene);
    if !(dist > 0.0) {
        return Err(HnaError::ZeroSeparation);
    }
    let lg = scene.polygon.perimeter();
    let ls = scene.small_perimeter();
    Ok(interaction_norm_bound_raw(lg, ls, scene.k, dist))
}

/// `C_G` from raw lengths.
pub fn interaction_norm_bound_raw(l_big: f64, l_small: f64, k: f64, dist: f64) -> f64 {
    (l_big * l_small * k / (2.0 * PI * dist)).sqrt() + (l_big * l_small).sqrt() / (PI * dist)
}

/// `(G_{γ→Γ} φ)(x_Γ(s))` for `φ` given on the concatenated γ arclength.
pub fn interaction_apply<F>(scene: &Scene, phi: F, s: f64, settings: &QuadSettings) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let (x, j, n) = geometry::param_gamma_big(&scene.polygon, s)?;
    let poly = &scene.polygon;
    let mut total = Complex64::new(0.0, 0.0);
    let mut offset = 0.0;
    for o in &scene.obstacles {
        let bd = &o.boundary;
        for p in 0..bd.n_pieces() {
            let a = bd.vertices[p];
            let t = bd.tangents[p];
            let base = offset + bd.cumulative[p];
            let integrand = |u: f64| {
                let y = [a[0] + u * t[0], a[1] + u * t[1]];
                if !geometry::upper_half_plane_indicator(poly, j, y) {
                    return Complex64::new(0.0, 0.0);
                }
                let d = sub(x, y);
                let r = norm(d);
                dphi_factor(scene.k, r) * (-2.0 * dot(d, n)) * phi(base + u)
            };
            total += integrate_oscillatory(integrand, 0.0, bd.lengths[p], scene.k, settings.ppw);
        }
        offset += bd.perimeter;
    }
    Ok(total)
}

/// Exact `essinf Z·n` over one polygonal component: the smallest distance from
/// its centre to a side line (signed).
pub fn essinf_z_dot_n_component(scene: &Scene, star: &StarDescriptor, b: usize) -> f64 {
    let bd = scene.boundary(b);
    (0..bd.n_pieces())
        .map(|j| dot(sub(bd.vertices[j], star.centers[b]), bd.normals[j]))
        .fold(f64::INFINITY, f64::min)
}

/// Result of [`coercivity_constant`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityConstant {
    pub alpha: f64,
    pub admissible: bool,
    pub essinf_z_dot_n: f64,
}

/// Coercivity constant and admissibility of the constellation-combined operator.
/// `r_min` is the minimum pairwise distance between components.
pub fn coercivity_constant(scene: &Scene, star: &StarDescriptor, r_min: f64) -> Result<CoercivityConstant> {
    star.validate(scene)?;
    let ess = (0..scene.n_boundaries())
        .map(|b| essinf_z_dot_n_component(scene, star, b))
        .fold(f64::INFINITY, f64::min);
    let k = scene.k;
    let lg = scene.polygon.perimeter();
    let ls = scene.small_perimeter();
    let ns = scene.obstacles.len() as f64;
    if scene.obstacles.is_empty() {
        return Ok(CoercivityConstant {
            alpha: 0.5 * ess,
            admissible: true,
            essinf_z_dot_n: ess,
        });
    }
    let kr = k * r_min;
    let penalty = (lg * ls).sqrt()
        * (k * lg + 1.0)
        * (2.0 + ns.sqrt())
        * ((1.0 / (8.0 * PI * kr)).sqrt() + 1.0 / (4.0 * PI * kr));
    let bound = ess / ((k * lg + 1.0) * lg.sqrt() * (2.0 + ns.sqrt()) * ((1.0 / (2.0 * PI * kr)).sqrt() + 1.0 / (2.0 * PI * kr)));
    Ok(CoercivityConstant {
        alpha: 0.5 * ess - penalty,
        admissible: ls < bound * bound,
        essinf_z_dot_n: ess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_functions::{fundamental_solution, kernel_dn_x};

    #[test]
    fn combined_reduces() {
        let (k, x, y) = (3.0, [0.3, 0.1], [-0.2, 0.4]);
        let n = [0.6, 0.8];
        let a = combined_kernel(k, 0.0, x, y, n).unwrap();
        assert!((a - kernel_dn_x(k, x, y, n).unwrap()).norm() < 1e-15);
        let d = sub(x, y);
        let perp = [-d[1] / norm(d), d[0] / norm(d)];
        let b = combined_kernel(k, 2.0, x, y, perp).unwrap();
        let s = fundamental_solution(k, x, y).unwrap();
        assert!((b - (-I * 2.0 * s)).norm() < 1e-15);
    }

    #[test]
    fn rhs_examples() {
        let poly = geometry::build_polygon(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let sc = Scene::new(poly, vec![], 2.0, [1.0, 0.0], None).unwrap();
        assert!(rhs_data(&sc, [0.3, 0.2], [1.0, 0.0]).norm() < 1e-15);
        let v = rhs_data(&sc, [0.0, 0.0], [0.0, 1.0]);
        assert!((v - Complex64::new(0.0, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn star_kernel_at_centre() {
        let k = 2.0;
        let (x, y) = ([0.0, 0.0], [0.7, 0.1]);
        let v = star_combined_kernel(k, [0.0, 0.0], x, y).unwrap();
        let phi = fundamental_solution(k, x, y).unwrap();
        assert!((v - 0.5 * phi).norm() < 1e-15);
    }

    #[test]
    fn c_g_decreases_with_distance() {
        let a = interaction_norm_bound_raw(6.0 * PI, 0.6 * PI, 20.0, 1.0);
        let b = interaction_norm_bound_raw(6.0 * PI, 0.6 * PI, 20.0, 2.0);
        assert!(b < a);
    }
}
