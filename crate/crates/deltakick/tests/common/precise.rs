//! Brute-force expectation values in double-double arithmetic (about 32
//! significant digits). Several table entries are tiny results of large
//! cancelling sums, where plain `f64` matrix products lose 6 or more digits.
#![allow(dead_code)]

use std::ops::{Add, Mul, Neg, Sub};

use deltakick::gain_formulas::Factor;
use num_complex::Complex64;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let (p, e) = two_prod(q1, b);
        let (s, t) = two_sum(self.hi, -p);
        let t = t - e + self.lo;
        let q2 = (s + t) / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let resid = ((self.hi - p) - e) + self.lo;
        let (hi, lo) = quick_two_sum(x, resid / (2.0 * x));
        Dd { hi, lo }
    }

    /// `2π` to double-double accuracy.
    pub const TWO_PI: Dd = Dd { hi: std::f64::consts::TAU, lo: 2.449_293_598_294_706_4e-16 };
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

/// Complex number with double-double parts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Cd {
    pub re: Dd,
    pub im: Dd,
}

impl Cd {
    pub const ZERO: Cd = Cd { re: Dd::ZERO, im: Dd::ZERO };

    pub fn real(x: Dd) -> Self {
        Cd { re: x, im: Dd::ZERO }
    }

    pub fn scale(self, x: Dd) -> Cd {
        Cd { re: self.re * x, im: self.im * x }
    }

    /// Multiplication by `i`.
    pub fn times_i(self) -> Cd {
        Cd { re: -self.im, im: self.re }
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

impl Add for Cd {
    type Output = Cd;
    fn add(self, o: Cd) -> Cd {
        Cd { re: self.re + o.re, im: self.im + o.im }
    }
}

impl Sub for Cd {
    type Output = Cd;
    fn sub(self, o: Cd) -> Cd {
        Cd { re: self.re - o.re, im: self.im - o.im }
    }
}

impl Mul for Cd {
    type Output = Cd;
    fn mul(self, o: Cd) -> Cd {
        Cd { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
}

/// `exp(i φ)` by reduction to `[-π, π]` and Taylor series.
pub fn cis(phi: Dd) -> Cd {
    let k = (phi.hi / Dd::TWO_PI.hi).round();
    let x = phi - Dd::TWO_PI * Dd::new(k);
    let (mut c, mut s) = (Dd::new(1.0), Dd::ZERO);
    let mut term = Dd::new(1.0);
    for n in 1..80 {
        term = (term * x).div_f64(n as f64);
        match n % 4 {
            1 => s = s + term,
            2 => c = c - term,
            3 => s = s - term,
            _ => c = c + term,
        }
    }
    Cd { re: c, im: s }
}

/// Dicke space of `n` atoms in double-double arithmetic.
pub struct Space {
    pub n: usize,
}

type Vector = Vec<Cd>;

impl Space {
    pub fn new(n: usize) -> Self {
        Space { n }
    }

    fn m(&self, k: usize) -> Dd {
        Dd::new(self.n as f64 / 2.0 - k as f64)
    }

    /// Binomial amplitudes of the `x`-polarised coherent state.
    pub fn css(&self) -> Vector {
        let n = self.n;
        let mut binom = 1.0f64;
        let norm = Dd::new(2f64.powi(-(n as i32)));
        (0..=n)
            .map(|k| {
                if k > 0 {
                    binom = binom * (n + 1 - k) as f64 / k as f64;
                }
                Cd::real((Dd::new(binom) * norm).sqrt())
            })
            .collect()
    }

    fn ladder(&self, k_from: usize) -> Dd {
        // <m+1|S+|m> for the state at index k_from (m = S - k_from)
        let s = Dd::new(self.n as f64 / 2.0);
        let m = self.m(k_from);
        (s * (s + Dd::new(1.0)) - m * (m + Dd::new(1.0))).sqrt()
    }

    pub fn raise(&self, v: &[Cd]) -> Vector {
        let mut out = vec![Cd::ZERO; self.n + 1];
        for k in 1..=self.n {
            out[k - 1] = v[k].scale(self.ladder(k));
        }
        out
    }

    pub fn lower(&self, v: &[Cd]) -> Vector {
        let mut out = vec![Cd::ZERO; self.n + 1];
        for k in 0..self.n {
            out[k + 1] = v[k].scale(self.ladder(k + 1));
        }
        out
    }

    pub fn sz(&self, v: &[Cd]) -> Vector {
        v.iter().enumerate().map(|(k, a)| a.scale(self.m(k))).collect()
    }

    /// Multiplies by the diagonal `exp(i phase(m))`.
    pub fn phase(&self, v: &[Cd], phase: impl Fn(Dd) -> Dd) -> Vector {
        v.iter().enumerate().map(|(k, a)| *a * cis(phase(self.m(k)))).collect()
    }

    /// `S_y v = -(i/2)(S+ - S-) v`.
    pub fn sy(&self, v: &[Cd]) -> Vector {
        let (up, down) = (self.raise(v), self.lower(v));
        up.iter().zip(&down).map(|(a, b)| (*a - *b).times_i().scale(Dd::new(-0.5))).collect()
    }

    pub fn expect(&self, psi: &[Cd], v: &[Cd]) -> Complex64 {
        // psi is real here, so no conjugation is needed on its imaginary part
        let mut acc = Cd::ZERO;
        for (a, b) in psi.iter().zip(v) {
            let conj = Cd { re: a.re, im: -a.im };
            acc = acc + conj * *b;
        }
        acc.to_c64()
    }

    /// `<CSS| word |CSS>` for a product of ladder, `S_z` and phase factors.
    pub fn word_expectation(&self, word: &[Factor], tau: f64) -> Complex64 {
        let t = Dd::new(tau);
        let psi = self.css();
        let mut v = psi.clone();
        for f in word.iter().rev() {
            v = match *f {
                Factor::Raise(p) => (0..p).fold(v, |acc, _| self.raise(&acc)),
                Factor::Lower(p) => (0..p).fold(v, |acc, _| self.lower(&acc)),
                Factor::Sz(p) => (0..p).fold(v, |acc, _| self.sz(&acc)),
                Factor::W => self.phase(&v, |m| t * (Dd::new(2.0) * m + Dd::new(1.0))),
                Factor::WDag => self.phase(&v, |m| -(t * (Dd::new(2.0) * m + Dd::new(1.0)))),
                Factor::V => self.phase(&v, |m| Dd::new(4.0) * t * (m + Dd::new(1.0))),
                Factor::VDag => self.phase(&v, |m| -(Dd::new(4.0) * t * (m + Dd::new(1.0)))),
            };
        }
        self.expect(&psi, &v)
    }

    /// Expectation of one of the grouped echo expressions, with
    /// `U = exp(-i tau S_z^2)` and `A = U† S_y U`.
    pub fn grouped_expectation(&self, id: &str, tau: f64) -> Complex64 {
        let t = Dd::new(tau);
        let u = |v: &[Cd]| self.phase(v, |m| -(t * m * m));
        let u_dag = |v: &[Cd]| self.phase(v, |m| t * m * m);
        let sy = |v: &[Cd]| self.sy(v);
        let sy2 = |v: &[Cd]| self.sy(&self.sy(v));
        let a = |v: &[Cd]| u_dag(&sy(&u(v)));
        let a2 = |v: &[Cd]| u_dag(&sy2(&u(v)));
        let psi = self.css();
        let comm = |x: &dyn Fn(&[Cd]) -> Vector, y: &dyn Fn(&[Cd]) -> Vector| -> Vector {
            let xy = x(&y(&psi));
            let yx = y(&x(&psi));
            xy.iter().zip(&yx).map(|(p, q)| *p - *q).collect()
        };
        let v = match id {
            "[Sy, U† Sy U]" => comm(&sy, &a),
            "[Sy^2, U† Sy U]" => comm(&sy2, &a),
            "[Sy, U† Sy^2 U]" => comm(&sy, &a2),
            "[Sy^2, U† Sy^2 U]" => comm(&sy2, &a2),
            _ => {
                let first = a(&sy(&a2(&psi)));
                let second = a2(&sy(&a(&psi)));
                first.iter().zip(&second).map(|(p, q)| *p + *q).collect()
            }
        };
        self.expect(&psi, &v)
    }
}
