//! Chebyshev propagation of `exp(i·angle·G)` for a tridiagonal spin generator.
//!
//! The expansion `exp(i x y) = J_0(x) + 2 Σ_k i^k J_k(x) T_k(y)` converges
//! super-exponentially once `k` exceeds `|x|`, so the cost is one banded
//! matrix-vector product per retained order.

use num_complex::Complex64;

/// Integer-order Bessel functions `J_0(x) … J_kmax(x)` for `x >= 0`,
/// by Miller's backward recurrence normalised with `J_0 + 2 Σ J_2k = 1`.
pub(crate) fn bessel_j_orders(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    debug_assert!(x > 0.0);
    // Start well beyond both kmax and x so the spurious start value has
    // decayed by many orders of magnitude before reaching stored orders.
    let top = kmax.max(x as usize) + 30 + (40.0 * (kmax as f64 + x).sqrt()) as usize;
    let top = top + (top % 2);
    let mut vals = vec![0.0; top + 1];
    let mut next = 0.0;
    let mut cur = 1e-280;
    vals[top] = cur;
    for k in (1..=top).rev() {
        let prev = (2.0 * k as f64 / x) * cur - next;
        next = cur;
        cur = prev;
        vals[k - 1] = cur;
        if cur.abs() > 1e250 {
            for v in &mut vals[k - 1..] {
                *v *= 1e-250;
            }
            next *= 1e-250;
            cur *= 1e-250;
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    for (o, v) in out.iter_mut().zip(&vals) {
        *o = v / norm;
    }
    out
}

/// Number of Chebyshev orders needed for argument `x` to reach double precision.
fn orders_needed(x: f64) -> usize {
    let x = x.abs();
    (x + 13.0 * x.cbrt() + 30.0).ceil() as usize
}

/// Raising-operator matrix elements `a_k = sqrt(k (N + 1 - k))`, `k = 1..=N`,
/// connecting Dicke index `k` (m = S - k) to index `k - 1`. Entry 0 is unused.
pub(crate) fn ladder_coefficients(n: usize) -> Vec<f64> {
    (0..=n).map(|k| ((k * (n + 1 - k)) as f64).sqrt()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Generator {
    X,
    Y,
}

/// `out = scale · G · v` with `G = S_x` or `S_y` in the Dicke basis.
fn apply_generator(gen: Generator, a: &[f64], v: &[Complex64], scale: f64, out: &mut [Complex64]) {
    let n = v.len() - 1;
    let half = 0.5 * scale;
    for j in 0..=n {
        // (S+ v)_j = a_{j+1} v_{j+1},  (S- v)_j = a_j v_{j-1}
        let up = if j < n { v[j + 1] * a[j + 1] } else { Complex64::new(0.0, 0.0) };
        let down = if j > 0 { v[j - 1] * a[j] } else { Complex64::new(0.0, 0.0) };
        out[j] = match gen {
            Generator::X => (up + down) * half,
            // (S+ - S-) / (2i) = -i/2 (S+ - S-)
            Generator::Y => {
                let d = up - down;
                Complex64::new(d.im, -d.re) * half
            }
        };
    }
}

/// Applies `exp(i·angle·G)` to `psi` for `G = S_x` or `S_y`.
pub(crate) fn rotate(psi: &[Complex64], gen: Generator, angle: f64) -> Vec<Complex64> {
    let n = psi.len() - 1;
    // exp(2πi G) = (-1)^N, so the angle can be folded into [-π, π].
    let turns = (angle / std::f64::consts::TAU).round();
    let reduced = angle - turns * std::f64::consts::TAU;
    let flip = if n % 2 == 1 && (turns as i64) % 2 != 0 { -1.0 } else { 1.0 };

    let s = n as f64 / 2.0;
    // Slightly inflate the spectral bound so the scaled spectrum sits
    // strictly inside (-1, 1), where the three-term recurrence is stable.
    let bound = s * (1.0 + 1e-6) + 1e-6;
    let x = reduced * bound;
    let kmax = orders_needed(x);
    let mut bessel = bessel_j_orders(x.abs(), kmax);
    if x < 0.0 {
        for (k, b) in bessel.iter_mut().enumerate() {
            if k % 2 == 1 {
                *b = -*b;
            }
        }
    }

    let a = ladder_coefficients(n);
    let inv = 1.0 / bound;
    let mut prev = psi.to_vec();
    let mut cur = vec![Complex64::new(0.0, 0.0); n + 1];
    apply_generator(gen, &a, &prev, inv, &mut cur);
    let mut next = vec![Complex64::new(0.0, 0.0); n + 1];

    // i^k cycles through 1, i, -1, -i.
    let phase = |k: usize| match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let mut out: Vec<Complex64> = prev.iter().map(|v| v * bessel[0]).collect();
    let c1 = phase(1) * (2.0 * bessel[1]);
    for (o, v) in out.iter_mut().zip(&cur) {
        *o += c1 * v;
    }
    for (k, bk) in bessel.iter().enumerate().skip(2) {
        apply_generator(gen, &a, &cur, 2.0 * inv, &mut next);
        for (nx, p) in next.iter_mut().zip(&prev) {
            *nx -= p;
        }
        let ck = phase(k) * (2.0 * bk);
        for (o, v) in out.iter_mut().zip(&next) {
            *o += ck * v;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    if flip < 0.0 {
        for o in &mut out {
            *o = -*o;
        }
    }
    out
}
