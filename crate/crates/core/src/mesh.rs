//! Symmetric geometrically graded meshes, degree vectors and quasi-uniform
//! subdivision.

use crate::error::{HnaError, Result};
use crate::geometry::Arc;
use std::f64::consts::PI;

/// Default grading ratio.
pub const DEFAULT_SIGMA: f64 = 0.15;
/// Default oversampling constant for quasi-uniform subdivision.
pub const DEFAULT_OVERSAMPLING: f64 = 2.0 * PI;

/// Nodes `x_0 < … < x_{2n+1}` on `[0, L]`, graded towards both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedMesh {
    pub length: f64,
    pub layers: usize,
    pub sigma: f64,
    /// Nodes stored with their distance to both ends of the interval.
    pub nodes: Vec<Arc>,
}

impl GradedMesh {
    pub fn positions(&self) -> Vec<f64> {
        self.nodes.iter().map(|a| a.s).collect()
    }
    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }
    pub fn widths(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| Arc::span(w[0], w[1])).collect()
    }
}

/// Build the symmetric graded mesh with `n` layers and ratio `σ`.
pub fn graded_mesh(length: f64, n: usize, sigma: f64) -> Result<GradedMesh> {
    if !(sigma > 0.0 && sigma < 0.5) {
        return Err(HnaError::BadGrading(sigma));
    }
    if n < 1 {
        return Err(HnaError::BadLayers);
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(HnaError::Invalid(format!("mesh length must be positive, got {length}")));
    }
    let mut nodes = Vec::with_capacity(2 * n + 2);
    nodes.push(Arc { s: 0.0, r: length });
    for i in 1..=n {
        let x = length * sigma.powi((n - i + 1) as i32);
        nodes.push(Arc { s: x, r: length - x });
    }
    for i in (n + 1)..=(2 * n) {
        let r = length * sigma.powi((i - n) as i32);
        nodes.push(Arc { s: length - r, r });
    }
    nodes.push(Arc { s: length, r: 0.0 });
    Ok(GradedMesh {
        length,
        layers: n,
        sigma,
        nodes,
    })
}

/// Per-layer polynomial degrees `p_1..p_{n+1}`, increasing from the corner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeVector {
    pub degrees: Vec<usize>,
}

impl DegreeVector {
    /// Degree on element `e` (0-based) of the `2n+1` elements of a graded mesh.
    pub fn element_degree(&self, e: usize) -> usize {
        let n = self.degrees.len() - 1;
        if e <= n {
            self.degrees[e]
        } else {
            self.degrees[2 * n - e]
        }
    }
}

/// `(p)_i = p − ⌊(n+1−i) p / n⌋` for `i = 1..n+1`.
pub fn degree_vector(p: usize, n: usize) -> DegreeVector {
    let n = n.max(1);
    let degrees = (1..=n + 1).map(|i| p - ((n + 1 - i) * p) / n).collect();
    DegreeVector { degrees }
}

/// Number of elements `m = ⌈c k L / (2π max(p,1))⌉`, at least one.
pub fn quasi_uniform_count(length: f64, k: f64, p: usize, c: f64) -> usize {
    let m = (c * k * length / (2.0 * PI * p.max(1) as f64)).ceil();
    if m.is_finite() && m >= 1.0 {
        m as usize
    } else {
        1
    }
}

/// Uniform nodes on `[0, L]` with the element count of [`quasi_uniform_count`].
pub fn quasi_uniform_mesh(length: f64, k: f64, p: usize, c: f64) -> Vec<f64> {
    let m = quasi_uniform_count(length, k, p, c);
    (0..=m).map(|i| length * i as f64 / m as f64).collect()
}

/// Split `[a, b]` into `m` equal sub-intervals, keeping anchored endpoints exact.
pub fn subdivide(a: Arc, b: Arc, m: usize) -> Vec<Arc> {
    let mut out = Vec::with_capacity(m + 1);
    out.push(a);
    for i in 1..m {
        out.push(Arc::lerp(a, b, i as f64 / m as f64));
    }
    out.push(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_one_layer() {
        let m = graded_mesh(1.0, 1, 0.15).unwrap();
        let x = m.positions();
        let expect = [0.0, 0.15, 0.85, 1.0];
        for (a, b) in x.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn two_pi_two_layers() {
        let m = graded_mesh(2.0 * PI, 2, 0.15).unwrap();
        let expect = [0.0, 0.141372, 0.942478, 5.340708, 6.141813, 6.283185];
        for (a, b) in m.positions().iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn bad_parameters() {
        assert_eq!(graded_mesh(1.0, 1, 0.5), Err(HnaError::BadGrading(0.5)));
        assert_eq!(graded_mesh(1.0, 0, 0.1), Err(HnaError::BadLayers));
    }

    #[test]
    fn degree_vectors() {
        assert_eq!(degree_vector(4, 2).degrees, vec![0, 2, 4]);
        assert_eq!(degree_vector(1, 1).degrees, vec![0, 1]);
        let d = degree_vector(8, 16);
        assert_eq!(*d.degrees.last().unwrap(), 8);
        assert_eq!(d.element_degree(0), 0);
        assert_eq!(d.element_degree(32), 0);
        assert_eq!(d.element_degree(16), 8);
    }

    #[test]
    fn quasi_uniform_counts() {
        // two wavelengths, p = 1, c = 2π
        let k = 1.0;
        let l = 4.0 * PI;
        assert_eq!(quasi_uniform_count(l, k, 1, 2.0 * PI), 13);
        assert_eq!(quasi_uniform_count(1e-3, 1.0, 1, 2.0 * PI), 1);
        assert_eq!(quasi_uniform_mesh(l, k, 1, 2.0 * PI).len(), 14);
    }
}
