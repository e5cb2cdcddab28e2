//! Hankel functions of the first kind (orders 0 and 1) for real positive
//! arguments and the Helmholtz kernel pieces built from them.
//!
//! Three evaluation regimes are used:
//! * `z < SERIES_MAX`: ascending power series (with the logarithmic term for Y).
//! * `SERIES_MAX <= z < ASYMPTOTIC_MIN`: Miller backward recurrence for J_n,
//!   normalised by `J_0 + 2 sum J_2k = 1`, with Y_0 and Y_1 from their Neumann series.
//! * `z >= ASYMPTOTIC_MIN`: Hankel asymptotic expansion.

use crate::error::{HnaError, Result};
use crate::geometry::Point;
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_4, PI};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Upper end of the ascending-series regime.
pub const SERIES_MAX: f64 = 2.0;
/// Lower end of the asymptotic regime.
pub const ASYMPTOTIC_MIN: f64 = 20.0;

/// A kernel value with an optional gradient with respect to the first point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: Complex64,
    pub gradient: Option<[Complex64; 2]>,
}

/// J_0, Y_0, J_1, Y_1 at a real positive argument.
#[derive(Debug, Clone, Copy)]
pub struct BesselPair {
    pub j0: f64,
    pub y0: f64,
    pub j1: f64,
    pub y1: f64,
}

impl BesselPair {
    pub fn h0(&self) -> Complex64 {
        Complex64::new(self.j0, self.y0)
    }
    pub fn h1(&self) -> Complex64 {
        Complex64::new(self.j1, self.y1)
    }
}

/// H_0^(1)(z).
pub fn hankel1_0(z: f64) -> Result<Complex64> {
    check_arg(z)?;
    Ok(bessel_01(z).h0())
}

/// H_1^(1)(z).
pub fn hankel1_1(z: f64) -> Result<Complex64> {
    check_arg(z)?;
    Ok(bessel_01(z).h1())
}

fn check_arg(z: f64) -> Result<()> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(HnaError::NonPositiveArgument(z));
    }
    Ok(())
}

/// J_0, Y_0, J_1, Y_1 at `z > 0`, choosing the regime by size of `z`.
/// The caller guarantees `z > 0`.
#[inline]
pub fn bessel_01(z: f64) -> BesselPair {
    if z < SERIES_MAX {
        bessel_01_ascending(z)
    } else if z < ASYMPTOTIC_MIN {
        bessel_01_recurrence(z)
    } else {
        bessel_01_asymptotic(z)
    }
}

/// Both Hankel functions at once.
#[inline]
pub fn hankel1_01(z: f64) -> (Complex64, Complex64) {
    let b = bessel_01(z);
    (b.h0(), b.h1())
}

/// Ascending power series. Accurate for small and moderate `z`;
/// cancellation grows like `e^z` so this is only used for `z < SERIES_MAX`.
pub fn bessel_01_ascending(z: f64) -> BesselPair {
    let q = 0.25 * z * z;
    let half = 0.5 * z;
    let lg = (half).ln() + EULER_GAMMA;

    // J_0 and the harmonic-weighted sum for Y_0.
    let mut t0 = 1.0; // (-q)^m / (m!)^2
    let mut j0 = 1.0;
    let mut s_y0 = 0.0;
    let mut harm = 0.0;
    // J_1 / (z/2) and the digamma-weighted sum for Y_1.
    let mut t1 = 1.0; // (-q)^m / (m! (m+1)!)
    let mut j1s = 1.0;
    let mut s_y1 = 1.0; // m = 0 term: psi(1)+psi(2)+2γ = 1
    let mut m = 0.0f64;
    loop {
        m += 1.0;
        t0 *= -q / (m * m);
        harm += 1.0 / m;
        j0 += t0;
        s_y0 += harm * t0;
        t1 *= -q / (m * (m + 1.0));
        j1s += t1;
        // psi(m+1)+psi(m+2)+2γ = H_m + H_{m+1}
        s_y1 += (2.0 * harm + 1.0 / (m + 1.0)) * t1;
        if t0.abs() < 1e-18 * j0.abs().max(1e-300) && t1.abs() < 1e-18 && m > 2.0 {
            break;
        }
        if m > 200.0 {
            break;
        }
    }
    let j1 = half * j1s;
    let y0 = (2.0 / PI) * (lg * j0 - s_y0);
    // Y_1 = -2/(πz) + (2/π) ln(z/2) J_1 - (1/π)(z/2) Σ (-q)^m [ψ(m+1)+ψ(m+2)] / (m!(m+1)!)
    // with ψ(m+1)+ψ(m+2) = H_m + H_{m+1} - 2γ.
    let y1 = -2.0 / (PI * z) + (2.0 / PI) * (half.ln()) * j1
        - (1.0 / PI) * half * (s_y1 - 2.0 * EULER_GAMMA * j1s);
    BesselPair { j0, y0, j1, y1 }
}

/// Miller backward recurrence for J_n with Neumann series for Y_0, Y_1.
pub fn bessel_01_recurrence(z: f64) -> BesselPair {
    let mut nstart = (z + 20.0 + 10.0 * z.cbrt()) as usize;
    if nstart % 2 == 1 {
        nstart += 1;
    }
    // Backward recurrence J_{n-1} = (2n/z) J_n - J_{n+1}.
    let mut jn = vec![0.0f64; nstart + 2];
    jn[nstart + 1] = 0.0;
    jn[nstart] = 1e-30;
    let inv = 2.0 / z;
    let mut n = nstart;
    while n > 0 {
        let v = (n as f64) * inv * jn[n] - jn[n + 1];
        jn[n - 1] = v;
        n -= 1;
        if v.abs() > 1e250 {
            for x in jn.iter_mut().skip(n) {
                *x *= 1e-250;
            }
        }
    }
    let mut norm = jn[0];
    let mut k = 2;
    while k <= nstart {
        norm += 2.0 * jn[k];
        k += 2;
    }
    let scale = 1.0 / norm;
    let j = |i: usize| jn[i] * scale;
    let j0 = j(0);
    let j1 = j(1);
    let lg = (0.5 * z).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut kk = 1usize;
    while 2 * kk + 1 <= nstart {
        let sign = if kk % 2 == 0 { 1.0 } else { -1.0 };
        let kf = kk as f64;
        s0 += sign * j(2 * kk) / kf;
        s1 += sign * (j(2 * kk - 1) - j(2 * kk + 1)) / kf;
        kk += 1;
    }
    let y0 = (2.0 / PI) * (lg * j0 - 2.0 * s0);
    let y1 = (2.0 / PI) * (lg * j1 - j0 / z + s1);
    BesselPair { j0, y0, j1, y1 }
}

/// Hankel asymptotic expansion; the series is truncated at its smallest term
/// or once terms fall below double precision.
pub fn bessel_01_asymptotic(z: f64) -> BesselPair {
    let h0 = hankel_asymptotic(0.0, z);
    let h1 = hankel_asymptotic(1.0, z);
    BesselPair {
        j0: h0.re,
        y0: h0.im,
        j1: h1.re,
        y1: h1.im,
    }
}

fn hankel_asymptotic(nu: f64, z: f64) -> Complex64 {
    let mu = 4.0 * nu * nu;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = 1.0;
    for kk in 1..200 {
        let kf = kk as f64;
        let odd = 2.0 * kf - 1.0;
        // next term: term * i (mu - odd^2) / (8 k z)
        term *= Complex64::new(0.0, (mu - odd * odd) / (8.0 * kf * z));
        let mag = term.norm();
        if mag > last {
            break;
        }
        sum += term;
        last = mag;
        if mag < 1e-17 {
            break;
        }
    }
    // e^{i(z - νπ/2 - π/4)} evaluated without forming z - π/4.
    let (sz, cz) = z.sin_cos();
    let shift = -(nu * 0.5 * PI) - FRAC_PI_4;
    let (ss, cs) = shift.sin_cos();
    let phase = Complex64::new(cz, sz) * Complex64::new(cs, ss);
    sum * phase * (2.0 / (PI * z)).sqrt()
}

/// Φ_k(x,y) = (i/4) H_0^(1)(k|x−y|).
pub fn fundamental_solution(k: f64, x: Point, y: Point) -> Result<Complex64> {
    let r = dist(x, y);
    if r == 0.0 {
        return Err(HnaError::CoincidentPoints);
    }
    Ok(phi_from_r(k, r))
}

/// Φ_k as a function of distance `r > 0`.
#[inline]
pub fn phi_from_r(k: f64, r: f64) -> Complex64 {
    let h0 = bessel_01(k * r).h0();
    Complex64::new(-0.25 * h0.im, 0.25 * h0.re)
}

/// ∂Φ_k(x,y)/∂n(x) = −(ik/4) H_1^(1)(k|x−y|) ((x−y)·n)/|x−y|.
pub fn kernel_dn_x(k: f64, x: Point, y: Point, n: Point) -> Result<Complex64> {
    let r = dist(x, y);
    if r == 0.0 {
        return Err(HnaError::CoincidentPoints);
    }
    let dn = (x[0] - y[0]) * n[0] + (x[1] - y[1]) * n[1];
    Ok(dphi_factor(k, r) * dn)
}

/// The factor `−(ik/4) H_1^(1)(kr)/r`, so that ∇_xΦ = factor·(x−y).
#[inline]
pub fn dphi_factor(k: f64, r: f64) -> Complex64 {
    let h1 = bessel_01(k * r).h1();
    Complex64::new(0.25 * k * h1.im / r, -0.25 * k * h1.re / r)
}

/// Φ_k and its gradient in x.
pub fn fundamental_solution_grad(k: f64, x: Point, y: Point) -> Result<KernelValue> {
    let r = dist(x, y);
    if r == 0.0 {
        return Err(HnaError::CoincidentPoints);
    }
    let b = bessel_01(k * r);
    let h0 = b.h0();
    let h1 = b.h1();
    let value = Complex64::new(0.0, 0.25) * h0;
    let f = Complex64::new(0.0, -0.25 * k) * h1 / r;
    Ok(KernelValue {
        value,
        gradient: Some([f * (x[0] - y[0]), f * (x[1] - y[1])]),
    })
}

/// μ(z) = e^{−iz} H_1^(1)(z)/z for real positive `z`.
pub fn mu_real(z: f64) -> Result<Complex64> {
    check_arg(z)?;
    let h1 = bessel_01(z).h1();
    Ok(Complex64::new(0.0, -z).exp() * h1 / z)
}

/// μ(z) for complex `z` with `Re z > 0`. Only real arguments are supported by
/// the Hankel evaluators, so a non-zero imaginary part is rejected.
pub fn mu(z: Complex64) -> Result<Complex64> {
    if !(z.re > 0.0) {
        return Err(HnaError::NonPositiveRealPart(z.re));
    }
    if z.im != 0.0 {
        return Err(HnaError::Unsupported(
            "mu is only evaluated on the positive real axis".into(),
        ));
    }
    mu_real(z.re)
}

#[inline]
fn dist(x: Point, y: Point) -> f64 {
    (x[0] - y[0]).hypot(x[1] - y[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn values_at_one() {
        let h0 = hankel1_0(1.0).unwrap();
        let h1 = hankel1_1(1.0).unwrap();
        assert!(close(h0, Complex64::new(0.7651976865579666, 0.08825696421567696), 1e-13));
        assert!(close(h1, Complex64::new(0.44005058574493355, -0.7812128213002887), 1e-13));
    }

    #[test]
    fn regimes_agree_at_boundaries() {
        for &z in &[SERIES_MAX, ASYMPTOTIC_MIN] {
            let below = if z == SERIES_MAX { bessel_01_ascending(z) } else { bessel_01_recurrence(z) };
            let above = if z == SERIES_MAX { bessel_01_recurrence(z) } else { bessel_01_asymptotic(z) };
            assert!(close(below.h0(), above.h0(), 1e-13), "H0 at {z}");
            assert!(close(below.h1(), above.h1(), 1e-13), "H1 at {z}");
        }
    }

    #[test]
    fn rejects_non_positive() {
        assert!(hankel1_0(0.0).is_err());
        assert!(hankel1_1(-1.0).is_err());
        assert!(fundamental_solution(1.0, [0.0, 0.0], [0.0, 0.0]).is_err());
    }

    #[test]
    fn phi_at_unit_argument() {
        let v = fundamental_solution(1.0, [0.0, 0.0], [1.0, 0.0]).unwrap();
        assert!(close(v, Complex64::new(-0.022064241053919, 0.191299421639492), 1e-11));
    }

    #[test]
    fn dn_kernel_along_normal() {
        let k = 2.0;
        let x = [0.5, 0.0];
        let v = kernel_dn_x(k, x, [0.0, 0.0], [1.0, 0.0]).unwrap();
        let h1 = hankel1_1(1.0).unwrap();
        assert!(close(v, Complex64::new(0.0, -k / 4.0) * h1, 1e-14));
        let w = kernel_dn_x(k, x, [0.0, 0.0], [0.0, 1.0]).unwrap();
        assert_eq!(w, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn mu_at_one() {
        let m = mu(Complex64::new(1.0, 0.0)).unwrap();
        let expect = Complex64::new(0.0, -1.0).exp() * hankel1_1(1.0).unwrap();
        assert!(close(m, expect, 1e-15));
        assert!(mu(Complex64::new(-1.0, 0.0)).is_err());
    }
}
