//! Dense-matrix reference implementations of the collective-spin operators.
#![allow(dead_code)]

use deltakick::gain_formulas::Factor;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

pub struct Ops {
    pub n: usize,
    pub sp: DMatrix<C>,
    pub sm: DMatrix<C>,
    pub sz: DMatrix<C>,
}

impl Ops {
    pub fn new(n: usize) -> Self {
        let s = n as f64 / 2.0;
        let mut sp = DMatrix::<C>::zeros(n + 1, n + 1);
        let mut sz = DMatrix::<C>::zeros(n + 1, n + 1);
        for k in 0..=n {
            let m = s - k as f64;
            sz[(k, k)] = C::new(m, 0.0);
            if k > 0 {
                // |m⟩ at index k raised to index k-1
                sp[(k - 1, k)] = C::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
            }
        }
        let sm = sp.adjoint();
        Ops { n, sp, sm, sz }
    }

    pub fn sx(&self) -> DMatrix<C> {
        (&self.sp + &self.sm) * C::new(0.5, 0.0)
    }

    pub fn sy(&self) -> DMatrix<C> {
        (&self.sp - &self.sm) * C::new(0.0, -0.5)
    }

    pub fn diag(&self, f: impl Fn(f64) -> C) -> DMatrix<C> {
        let s = self.n as f64 / 2.0;
        DMatrix::from_fn(self.n + 1, self.n + 1, |i, j| if i == j { f(s - i as f64) } else { C::new(0.0, 0.0) })
    }

    pub fn css(&self) -> DVector<C> {
        let n = self.n;
        let mut binom = 1.0f64;
        let mut v = Vec::with_capacity(n + 1);
        for k in 0..=n {
            if k > 0 {
                binom = binom * (n + 1 - k) as f64 / k as f64;
            }
            v.push(C::new(binom.sqrt() * 2f64.powf(-(n as f64) / 2.0), 0.0));
        }
        DVector::from_vec(v)
    }
}

/// `exp(i·angle·H)` for Hermitian `H` through its eigendecomposition.
pub fn expi(h: &DMatrix<C>, angle: f64) -> DMatrix<C> {
    let eig = h.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C::from_polar(1.0, angle * l)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

pub fn expect(psi: &DVector<C>, op: &DMatrix<C>) -> C {
    (psi.adjoint() * op * psi)[(0, 0)]
}

pub fn word_matrix(ops: &Ops, word: &[Factor], tau: f64) -> DMatrix<C> {
    let id = DMatrix::<C>::identity(ops.n + 1, ops.n + 1);
    let w = ops.diag(|m| C::from_polar(1.0, tau * (2.0 * m + 1.0)));
    let v = ops.diag(|m| C::from_polar(1.0, 4.0 * tau * (m + 1.0)));
    word.iter().fold(id, |acc, f| {
        let factor = match *f {
            Factor::Raise(p) => ops.sp.pow(p),
            Factor::Lower(p) => ops.sm.pow(p),
            Factor::Sz(p) => ops.sz.pow(p),
            Factor::W => w.clone(),
            Factor::WDag => w.adjoint(),
            Factor::V => v.clone(),
            Factor::VDag => v.adjoint(),
        };
        acc * factor
    })
}

pub fn grouped_matrix(ops: &Ops, id: &str, tau: f64) -> DMatrix<C> {
    let u = ops.diag(|m| C::from_polar(1.0, -tau * m * m));
    let sy = ops.sy();
    let sy2 = &sy * &sy;
    let a = u.adjoint() * &sy * &u;
    let a2 = u.adjoint() * &sy2 * &u;
    let comm = |x: &DMatrix<C>, y: &DMatrix<C>| x * y - y * x;
    match id {
        "[Sy, U† Sy U]" => comm(&sy, &a),
        "[Sy^2, U† Sy U]" => comm(&sy2, &a),
        "[Sy, U† Sy^2 U]" => comm(&sy, &a2),
        "[Sy^2, U† Sy^2 U]" => comm(&sy2, &a2),
        _ => &a * &sy * &a2 + &a2 * &sy * &a,
    }
}
