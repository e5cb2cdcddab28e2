//! Independent oracle for H_0^{(1)} and H_1^{(1)}: ascending series in
//! double-double arithmetic for z ≤ 25, complex Hankel asymptotics above.
#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;

const GAMMA: f64 = 0.577_215_664_901_532_9;

/// Unevaluated sum `hi + lo` with |lo| ≤ ulp(hi)/2.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl Dd {
    fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = two_sum(s, e + self.lo + o.lo);
        Dd { hi, lo }
    }
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let (hi, lo) = two_sum(p, e + self.hi * o.lo + self.lo * o.hi);
        Dd { hi, lo }
    }
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(Dd::new(-q1)));
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul(Dd::new(-q2)));
        let q3 = r.hi / o.hi;
        Dd::new(q1).add(Dd::new(q2)).add(Dd::new(q3))
    }
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// `(J0, Y0, J1, Y1)` from the ascending series.
pub fn series(z: f64) -> (f64, f64, f64, f64) {
    let q = Dd::new(z).mul(Dd::new(z)).div(Dd::new(4.0)).neg();
    let mut t0 = Dd::new(1.0); // q^m / (m!)^2
    let mut t1 = Dd::new(1.0); // q^m / (m!(m+1)!)
    let mut harm = Dd::new(0.0);
    let mut j0 = Dd::new(1.0);
    let mut s0 = Dd::new(0.0);
    let mut j1 = Dd::new(1.0);
    // ψ(1) + ψ(2) + 2γ = 1 at m = 0
    let mut s1 = Dd::new(1.0);
    for m in 1..400 {
        let mf = Dd::new(m as f64);
        t0 = t0.mul(q).div(mf.mul(mf));
        t1 = t1.mul(q).div(mf.mul(Dd::new(m as f64 + 1.0)));
        harm = harm.add(Dd::new(1.0).div(mf));
        let harm_next = harm.add(Dd::new(1.0).div(Dd::new(m as f64 + 1.0)));
        j0 = j0.add(t0);
        s0 = s0.add(harm.mul(t0));
        j1 = j1.add(t1);
        s1 = s1.add(harm.add(harm_next).mul(t1));
        if t0.hi.abs() < 1e-34 && t1.hi.abs() < 1e-34 {
            break;
        }
    }
    let half = 0.5 * z;
    let lg = half.ln();
    let j0f = j0.to_f64();
    let j1s = j1.to_f64();
    let y0 = 2.0 / PI * ((lg + GAMMA) * j0f - s0.to_f64());
    let j1f = half * j1s;
    // Σ (ψ(m+1)+ψ(m+2)) t1 with ψ(n+1) = H_n − γ
    let psi_sum = s1.to_f64() - 2.0 * GAMMA * j1s;
    let y1 = -2.0 / (PI * z) + 2.0 / PI * lg * j1f - half / PI * psi_sum;
    (j0f, y0, j1f, y1)
}

/// `H_ν^{(1)}(z) ~ √(2/(πz)) e^{iω} Σ i^m a_m(ν) / z^m`.
pub fn asymptotic(nu: f64, z: f64) -> Complex64 {
    let mu = 4.0 * nu * nu;
    let i = Complex64::new(0.0, 1.0);
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for m in 1..200 {
        let odd = (2 * m - 1) as f64;
        let next = term * i * ((mu - odd * odd) / (m as f64 * 8.0 * z));
        if next.norm() >= last || next.norm() < 1e-18 {
            break;
        }
        last = next.norm();
        term = next;
        sum += term;
    }
    let omega = z - 0.5 * nu * PI - 0.25 * PI;
    (2.0 / (PI * z)).sqrt() * Complex64::from_polar(1.0, omega) * sum
}

pub fn oracle(z: f64) -> (Complex64, Complex64) {
    if z <= 25.0 {
        let (j0, y0, j1, y1) = series(z);
        (Complex64::new(j0, y0), Complex64::new(j1, y1))
    } else {
        (asymptotic(0.0, z), asymptotic(1.0, z))
    }
}

pub fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

pub fn samples() -> Vec<f64> {
    (0..200).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 199.0)).collect()
}

