//! Dormand–Prince 5(4) integrator with adaptive step control.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on any accepted step.
    pub h_max: f64,
}

/// Integrates `y' = f(t, y)` from `t0` to `t1`, returning every accepted
/// step including both endpoints. `check` runs on each accepted point and
/// can abort the integration.
pub fn integrate<const D: usize>(
    f: impl Fn(f64, &[f64; D]) -> [f64; D],
    check: impl Fn(f64, &[f64; D]) -> Result<()>,
    t0: f64,
    y0: [f64; D],
    t1: f64,
    tol: Tolerances,
) -> Result<Vec<(f64, [f64; D])>> {
    let mut out = vec![(t0, y0)];
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(out);
    }
    // Slivers left by rounding in the caller's time bookkeeping.
    if span.abs() <= 1e-13 * t0.abs() {
        out.push((t1, y0));
        return Ok(out);
    }
    let dir = span.signum();
    let h_max = tol.h_max.min(span.abs());
    let mut t = t0;
    let mut y = y0;
    let mut k0 = f(t, &y);
    let mut h = initial_step(&y, &k0, tol).min(h_max);
    let mut k = [[0.0; D]; 7];
    loop {
        let remaining = (t1 - t) * dir;
        if remaining <= 0.0 {
            break;
        }
        // Absorb a round-off sliver at the end into the current step.
        let last = h >= remaining || remaining - h <= 1e-10 * span.abs();
        if last {
            h = remaining;
        }
        if h <= 1e-14 * t.abs().max(span.abs()) {
            return Err(Error::StepSizeUnderflow { time: t });
        }
        k[0] = k0;
        let mut ynew = y;
        for s in 1..7 {
            let mut ys = y;
            for (i, v) in ys.iter_mut().enumerate() {
                *v += dir * h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
            }
            k[s] = f(t + dir * C[s] * h, &ys);
            if s == 6 {
                ynew = ys;
            }
        }
        // The seventh stage is evaluated at the fifth-order solution (FSAL).
        let mut err = 0.0;
        for i in 0..D {
            let e = dir * h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
            let scale = tol.atol + tol.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / scale).powi(2);
        }
        let err = (err / D as f64).sqrt();
        if err <= 1.0 {
            t = if last { t1 } else { t + dir * h };
            y = ynew;
            k0 = k[6];
            check(t, &y)?;
            out.push((t, y));
            if last {
                break;
            }
        } else if !err.is_finite() {
            h *= 0.1;
            continue;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(h_max);
    }
    Ok(out)
}

fn initial_step<const D: usize>(y: &[f64; D], dy: &[f64; D], tol: Tolerances) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..D {
        let s = tol.atol + tol.rtol * y[i].abs();
        d0 += (y[i] / s).powi(2);
        d1 += (dy[i] / s).powi(2);
    }
    let (d0, d1) = ((d0 / D as f64).sqrt(), (d1 / D as f64).sqrt());
    if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * tol.h_max
    } else {
        0.01 * d0 / d1
    }
}
