//! Polygonal scatterers, arclength parametrisations, normals, separation
//! distances and half-plane tests.
//!
//! All boundaries are closed counter-clockwise polylines. A point on a
//! boundary is addressed by its piece (side) and an [`Arc`] that stores the
//! distance from both ends of that piece, so that differences of nearby
//! points close to a corner are formed without cancellation.

use crate::error::{HnaError, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

pub type Point = [f64; 2];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}
#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}
#[inline]
pub fn scale(a: Point, c: f64) -> Point {
    [a[0] * c, a[1] * c]
}
#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}
#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}
#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Position along one piece, measured from its start (`s`) and from its end (`r`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub s: f64,
    pub r: f64,
}

impl Arc {
    pub fn new(s: f64, len: f64) -> Self {
        Arc { s, r: len - s }
    }
    pub fn from_end(r: f64, len: f64) -> Self {
        Arc { s: len - r, r }
    }
    /// Distance between two arcs on the same piece, using whichever end is closer.
    #[inline]
    pub fn span(a: Arc, b: Arc) -> f64 {
        if a.s + b.s <= a.r + b.r {
            b.s - a.s
        } else {
            a.r - b.r
        }
    }
    /// Point a fraction `u` of the way from `a` to `b`.
    #[inline]
    pub fn lerp(a: Arc, b: Arc, u: f64) -> Arc {
        let h = Arc::span(a, b);
        Arc {
            s: a.s + u * h,
            r: b.r + (1.0 - u) * h,
        }
    }
}

/// A closed counter-clockwise polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub vertices: Vec<Point>,
    pub lengths: Vec<f64>,
    /// `cumulative[j]` is the arclength at the start of piece `j`; the last entry is the perimeter.
    pub cumulative: Vec<f64>,
    pub tangents: Vec<Point>,
    pub normals: Vec<Point>,
    pub perimeter: f64,
}

impl Polyline {
    fn new(vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(HnaError::Degenerate("fewer than 3 vertices".into()));
        }
        if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(HnaError::Degenerate("non-finite vertex".into()));
        }
        let mut lengths = Vec::with_capacity(n);
        let mut tangents = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        let mut cumulative = vec![0.0];
        for j in 0..n {
            let e = sub(vertices[(j + 1) % n], vertices[j]);
            let l = norm(e);
            if l == 0.0 {
                return Err(HnaError::Degenerate(format!("repeated vertex {j}")));
            }
            let t = scale(e, 1.0 / l);
            lengths.push(l);
            tangents.push(t);
            normals.push([t[1], -t[0]]);
            cumulative.push(cumulative[j] + l);
        }
        let perimeter = cumulative[n];
        Ok(Polyline {
            vertices,
            lengths,
            cumulative,
            tangents,
            normals,
            perimeter,
        })
    }

    pub fn n_pieces(&self) -> usize {
        self.vertices.len()
    }

    /// Point at a position along piece `j`, anchored at the nearer end.
    #[inline]
    pub fn piece_point(&self, j: usize, a: Arc) -> Point {
        if a.s <= a.r {
            add(self.vertices[j], scale(self.tangents[j], a.s))
        } else {
            let n = self.vertices.len();
            sub(self.vertices[(j + 1) % n], scale(self.tangents[j], a.r))
        }
    }

    /// Locate global arclength `s ∈ [0, perimeter)`.
    pub fn locate(&self, s: f64) -> Result<(usize, Arc)> {
        if !(s >= 0.0 && s < self.perimeter) {
            return Err(HnaError::OutOfRange(s, self.perimeter));
        }
        let n = self.n_pieces();
        let mut j = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s).unwrap())
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        if j >= n {
            j = n - 1;
        }
        let local = s - self.cumulative[j];
        Ok((j, Arc::new(local, self.lengths[j])))
    }

    /// Signed area (positive for counter-clockwise order).
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut a = 0.0;
        for j in 0..n {
            a += cross(self.vertices[j], self.vertices[(j + 1) % n]);
        }
        0.5 * a
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len();
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut a = 0.0;
        for j in 0..n {
            let p = self.vertices[j];
            let q = self.vertices[(j + 1) % n];
            let c = cross(p, q);
            a += c;
            cx += (p[0] + q[0]) * c;
            cy += (p[1] + q[1]) * c;
        }
        [cx / (3.0 * a), cy / (3.0 * a)]
    }

    /// Winding-number containment test (boundary points count as inside).
    pub fn contains(&self, p: Point) -> bool {
        let n = self.vertices.len();
        let mut wn = 0i32;
        for j in 0..n {
            let a = self.vertices[j];
            let b = self.vertices[(j + 1) % n];
            let c = cross(sub(b, a), sub(p, a));
            if point_segment_distance(p, a, b) == 0.0 {
                return true;
            }
            if a[1] <= p[1] {
                if b[1] > p[1] && c > 0.0 {
                    wn += 1;
                }
            } else if b[1] <= p[1] && c < 0.0 {
                wn -= 1;
            }
        }
        wn != 0
    }

    /// Minimum distance from a point to the polyline.
    pub fn distance_to(&self, p: Point) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|j| point_segment_distance(p, self.vertices[j], self.vertices[(j + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            for j in (i + 1)..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let d = segment_segment_distance(
                    self.vertices[i],
                    self.vertices[(i + 1) % n],
                    self.vertices[j],
                    self.vertices[(j + 1) % n],
                );
                if d == 0.0 {
                    return false;
                }
            }
        }
        true
    }
}

/// Distance between a point and a segment.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let l2 = dot(ab, ab);
    let t = if l2 > 0.0 {
        (dot(sub(p, a), ab) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm(sub(p, add(a, scale(ab, t))))
}

/// Exact distance between two segments (zero when they intersect).
pub fn segment_segment_distance(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let o1 = cross(sub(b, a), sub(c, a));
    let o2 = cross(sub(b, a), sub(d, a));
    let o3 = cross(sub(d, c), sub(a, c));
    let o4 = cross(sub(d, c), sub(b, c));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

fn polyline_distance(p: &Polyline, q: &Polyline) -> f64 {
    let n = p.vertices.len();
    let m = q.vertices.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in 0..m {
            best = best.min(segment_segment_distance(
                p.vertices[i],
                p.vertices[(i + 1) % n],
                q.vertices[j],
                q.vertices[(j + 1) % m],
            ));
        }
    }
    best
}

/// The large convex polygon Ω with boundary Γ.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    pub boundary: Polyline,
    /// Exterior angle at vertex `j` (between pieces `j-1` and `j`).
    pub exterior_angles: Vec<f64>,
}

/// Build a strictly convex polygon from counter-clockwise vertices.
pub fn build_polygon(vertices: &[Point]) -> Result<ConvexPolygon> {
    let n = vertices.len();
    if n < 3 {
        return Err(HnaError::Degenerate("fewer than 3 vertices".into()));
    }
    if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
        return Err(HnaError::Degenerate("non-finite vertex".into()));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if vertices[i] == vertices[j] {
                return Err(HnaError::Degenerate(format!("repeated vertex {j}")));
            }
        }
    }
    let mut angles = Vec::with_capacity(n);
    for j in 0..n {
        let prev = vertices[(j + n - 1) % n];
        let cur = vertices[j];
        let next = vertices[(j + 1) % n];
        let e0 = sub(cur, prev);
        let e1 = sub(next, cur);
        let c = cross(e0, e1);
        let scale_ = norm(e0) * norm(e1);
        if c.abs() <= 1e-14 * scale_ {
            return Err(HnaError::Degenerate(format!("collinear vertices at {j}")));
        }
        if c <= 0.0 {
            return Err(HnaError::NonConvex(j));
        }
        // turning angle in (0, π); exterior angle = π + turning angle
        let turn = c.atan2(dot(e0, e1));
        angles.push(PI + turn);
    }
    let turning: f64 = angles.iter().map(|a| a - PI).sum();
    if (turning - 2.0 * PI).abs() > 1e-9 {
        return Err(HnaError::NonConvex(0));
    }
    let boundary = Polyline::new(vertices.to_vec())?;
    Ok(ConvexPolygon {
        boundary,
        exterior_angles: angles,
    })
}

impl ConvexPolygon {
    pub fn n_sides(&self) -> usize {
        self.boundary.n_pieces()
    }
    pub fn perimeter(&self) -> f64 {
        self.boundary.perimeter
    }
}

/// `x_Γ(s)`: point, side index and outward normal.
pub fn param_gamma_big(poly: &ConvexPolygon, s: f64) -> Result<(Point, usize, Point)> {
    let (j, a) = poly.boundary.locate(s)?;
    Ok((poly.boundary.piece_point(j, a), j, poly.boundary.normals[j]))
}

/// True iff `y` lies strictly in the open half-plane on the exterior side of side `j`'s line.
pub fn upper_half_plane_indicator(poly: &ConvexPolygon, j: usize, y: Point) -> bool {
    let b = &poly.boundary;
    dot(b.normals[j], sub(y, b.vertices[j])) > 0.0
}

/// A small sound-soft obstacle bounded by a closed simple polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallObstacle {
    pub boundary: Polyline,
}

/// Build an obstacle; clockwise input is reversed to counter-clockwise.
pub fn build_obstacle(vertices: &[Point]) -> Result<SmallObstacle> {
    let mut pl = Polyline::new(vertices.to_vec())?;
    if pl.signed_area() < 0.0 {
        let mut v = vertices.to_vec();
        v.reverse();
        pl = Polyline::new(v)?;
    }
    if pl.signed_area().abs() <= 0.0 || !pl.is_simple() {
        return Err(HnaError::Degenerate("obstacle boundary is not simple".into()));
    }
    Ok(SmallObstacle { boundary: pl })
}

/// Full scattering configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub polygon: ConvexPolygon,
    pub obstacles: Vec<SmallObstacle>,
    pub k: f64,
    pub d: Point,
    pub eta: f64,
}

impl Scene {
    /// Validate and assemble a scene. `d` is normalised; `eta` defaults to `k`.
    pub fn new(
        polygon: ConvexPolygon,
        obstacles: Vec<SmallObstacle>,
        k: f64,
        d: Point,
        eta: Option<f64>,
    ) -> Result<Scene> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(HnaError::Invalid(format!("wavenumber must be positive, got {k}")));
        }
        let dn = norm(d);
        if !(dn > 0.0) || !dn.is_finite() {
            return Err(HnaError::Invalid("incident direction must be non-zero".into()));
        }
        let eta = eta.unwrap_or(k);
        if eta == 0.0 || !eta.is_finite() {
            return Err(HnaError::Invalid("coupling parameter must be non-zero".into()));
        }
        for (i, o) in obstacles.iter().enumerate() {
            if polyline_distance(&polygon.boundary, &o.boundary) == 0.0
                || polygon.boundary.contains(o.boundary.vertices[0])
                || o.boundary.contains(polygon.boundary.vertices[0])
            {
                return Err(HnaError::ZeroSeparation);
            }
            for o2 in obstacles.iter().skip(i + 1) {
                if polyline_distance(&o.boundary, &o2.boundary) == 0.0
                    || o.boundary.contains(o2.boundary.vertices[0])
                    || o2.boundary.contains(o.boundary.vertices[0])
                {
                    return Err(HnaError::ZeroSeparation);
                }
            }
        }
        let scene = Scene {
            polygon,
            obstacles,
            k,
            d: scale(d, 1.0 / dn),
            eta,
        };
        if !scene.obstacles.is_empty() && !scene.separation_condition() {
            log::warn!(
                "separation dist(Γ,γ) = {:.4e} is below 1/k = {:.4e}",
                separation(&scene),
                1.0 / k
            );
        }
        Ok(scene)
    }

    /// A copy with a different wavenumber (and `eta = k` unless given).
    pub fn with_k(&self, k: f64, eta: Option<f64>) -> Result<Scene> {
        Scene::new(self.polygon.clone(), self.obstacles.clone(), k, self.d, eta)
    }

    /// Boundary `0` is Γ, boundary `i + 1` is obstacle `i`.
    #[inline]
    pub fn boundary(&self, b: usize) -> &Polyline {
        if b == 0 {
            &self.polygon.boundary
        } else {
            &self.obstacles[b - 1].boundary
        }
    }

    pub fn n_boundaries(&self) -> usize {
        1 + self.obstacles.len()
    }

    /// Total small-obstacle perimeter `L_γ`.
    pub fn small_perimeter(&self) -> f64 {
        self.obstacles.iter().map(|o| o.boundary.perimeter).sum()
    }

    /// `dist(Γ,γ) ≥ 1/k`.
    pub fn separation_condition(&self) -> bool {
        separation(self) >= 1.0 / self.k
    }

    /// Incident plane wave `e^{ik x·d}`.
    #[inline]
    pub fn incident(&self, x: Point) -> Complex64 {
        Complex64::from_polar(1.0, self.k * dot(x, self.d))
    }

    /// Anchored boundary point.
    #[inline]
    pub fn point(&self, boundary: usize, piece: usize, arc: Arc) -> BoundaryPoint {
        let pl = self.boundary(boundary);
        BoundaryPoint {
            boundary,
            piece,
            arc,
            pos: pl.piece_point(piece, arc),
            normal: pl.normals[piece],
        }
    }

    /// Accurate `x − y` for two boundary points.
    #[inline]
    pub fn diff(&self, x: &BoundaryPoint, y: &BoundaryPoint) -> Point {
        if x.boundary != y.boundary {
            return sub(x.pos, y.pos);
        }
        let pl = self.boundary(x.boundary);
        let n = pl.n_pieces();
        if x.piece == y.piece {
            return scale(pl.tangents[x.piece], Arc::span(y.arc, x.arc));
        }
        if (y.piece + 1) % n == x.piece {
            // shared vertex is the start of x's piece and the end of y's piece
            return add(
                scale(pl.tangents[x.piece], x.arc.s),
                scale(pl.tangents[y.piece], y.arc.r),
            );
        }
        if (x.piece + 1) % n == y.piece {
            return sub(
                scale(pl.tangents[x.piece], -x.arc.r),
                scale(pl.tangents[y.piece], y.arc.s),
            );
        }
        sub(x.pos, y.pos)
    }
}

/// A point on ∂D with its anchoring data and outward normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub boundary: usize,
    pub piece: usize,
    pub arc: Arc,
    pub pos: Point,
    pub normal: Point,
}

/// `x_γ(s)` on the concatenation of all obstacle boundaries, in declaration order.
pub fn param_gamma_small(scene: &Scene, s: f64) -> Result<(Point, usize, Point)> {
    let total = scene.small_perimeter();
    if !(s >= 0.0 && s < total) {
        return Err(HnaError::OutOfRange(s, total));
    }
    let mut offset = 0.0;
    for (i, o) in scene.obstacles.iter().enumerate() {
        let p = o.boundary.perimeter;
        if s < offset + p || i + 1 == scene.obstacles.len() {
            let local = (s - offset).min(p * (1.0 - f64::EPSILON));
            let (j, a) = o.boundary.locate(local)?;
            return Ok((o.boundary.piece_point(j, a), i, o.boundary.normals[j]));
        }
        offset += p;
    }
    unreachable!()
}

/// `dist(Γ,γ)`: exact minimum distance between the polygon and all obstacles.
pub fn separation(scene: &Scene) -> f64 {
    scene
        .obstacles
        .iter()
        .map(|o| polyline_distance(&scene.polygon.boundary, &o.boundary))
        .fold(f64::INFINITY, f64::min)
}

/// Minimum distance between any two distinct components of ∂D.
pub fn min_pairwise_distance(scene: &Scene) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..scene.n_boundaries() {
        for b in (a + 1)..scene.n_boundaries() {
            best = best.min(polyline_distance(scene.boundary(a), scene.boundary(b)));
        }
    }
    best
}

/// Physical Optics trace Ψ at global arclength `s` on Γ.
pub fn physical_optics(scene: &Scene, s: f64) -> Result<Complex64> {
    let (x, j, n) = param_gamma_big(&scene.polygon, s)?;
    Ok(physical_optics_at(scene, x, j, n))
}

/// Physical Optics at a point `x` on side `j` with normal `n`.
#[inline]
pub fn physical_optics_at(scene: &Scene, x: Point, _j: usize, n: Point) -> Complex64 {
    let dn = dot(scene.d, n);
    if dn < 0.0 {
        Complex64::new(0.0, 2.0 * scene.k * dn) * scene.incident(x)
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// True if `p` lies inside (or on) any scatterer.
pub fn inside_any(scene: &Scene, p: Point) -> bool {
    (0..scene.n_boundaries()).any(|b| scene.boundary(b).contains(p))
}

/// Distance from `p` to ∂D.
pub fn distance_to_boundary(scene: &Scene, p: Point) -> f64 {
    (0..scene.n_boundaries())
        .map(|b| scene.boundary(b).distance_to(p))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> ConvexPolygon {
        build_polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    #[test]
    fn square_lengths_and_angles() {
        let p = square();
        for j in 0..4 {
            assert!((p.boundary.lengths[j] - 1.0).abs() < 1e-15);
            assert!((p.exterior_angles[j] - 1.5 * PI).abs() < 1e-14);
        }
        assert_eq!(p.boundary.normals[0], [0.0, -1.0]);
    }

    #[test]
    fn rejects_bad_polygons() {
        assert!(matches!(
            build_polygon(&[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]),
            Err(HnaError::NonConvex(_))
        ));
        assert!(matches!(
            build_polygon(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]]),
            Err(HnaError::Degenerate(_))
        ));
        assert!(build_polygon(&[[0.0, 0.0], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn parametrisation_endpoints() {
        let p = square();
        let (x, j, _) = param_gamma_big(&p, 0.0).unwrap();
        assert_eq!((x, j), ([0.0, 0.0], 0));
        let (x, j, _) = param_gamma_big(&p, 1.0).unwrap();
        assert_eq!((x, j), ([1.0, 0.0], 1));
        let (x, _, _) = param_gamma_big(&p, 0.5).unwrap();
        assert_eq!(x, [0.5, 0.0]);
        assert!(param_gamma_big(&p, 4.0).is_err());
        assert!(param_gamma_big(&p, -0.1).is_err());
    }

    #[test]
    fn physical_optics_direct_substitution() {
        let p = build_polygon(&[[-1.0, -1.0], [1.0, -1.0], [1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let scene = Scene::new(p, vec![], 1.0, [0.0, -1.0], None).unwrap();
        // side 2 runs from (1,0) to (-1,0) with normal (0,1); its midpoint is the origin
        let s = scene.polygon.boundary.cumulative[2] + 1.0;
        let v = physical_optics(&scene, s).unwrap();
        assert!((v - Complex64::new(0.0, -2.0)).norm() < 1e-14);
        // the bottom side faces along d
        assert_eq!(physical_optics(&scene, 0.5).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn half_plane_indicator() {
        let p = square();
        let c = p.boundary.centroid();
        for j in 0..4 {
            assert!(!upper_half_plane_indicator(&p, j, c));
        }
        assert!(upper_half_plane_indicator(&p, 0, [0.5, -1e-9]));
        assert!(!upper_half_plane_indicator(&p, 0, [0.5, 0.0]));
    }

    #[test]
    fn squares_gap() {
        let a = square();
        let b = build_obstacle(&[[3.0, 0.0], [4.0, 0.0], [4.0, 1.0], [3.0, 1.0]]).unwrap();
        let s = Scene::new(a, vec![b], 1.0, [1.0, 0.0], None).unwrap();
        assert!((separation(&s) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn anchored_difference_across_corner() {
        let p = square();
        let s = Scene::new(p, vec![], 1.0, [1.0, 0.0], None).unwrap();
        let x = s.point(0, 1, Arc::new(1e-14, 1.0));
        let y = s.point(0, 0, Arc::from_end(2e-14, 1.0));
        let d = s.diff(&x, &y);
        assert!((d[0] - 2e-14).abs() < 1e-28 && (d[1] - 1e-14).abs() < 1e-28);
    }

    #[test]
    fn obstacle_orientation_normalised() {
        let o = build_obstacle(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(o.boundary.signed_area() > 0.0);
    }
}
