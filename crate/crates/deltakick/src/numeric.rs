//! Small derivative-free numerical routines shared by the tuners and scans.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Root of `f` on a sign-changing bracket. Each round takes a secant step
/// (kept only if it lands well inside the bracket) followed by a bisection.
///
/// Stops once `|f(x)| <= ftol` or the bracket is narrower than `xtol`.
pub fn bisect_secant(
    f: &mut impl FnMut(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    ftol: f64,
    xtol: f64,
) -> Result<f64> {
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo.abs() <= ftol {
        return Ok(lo);
    }
    if fhi.abs() <= ftol {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoRoot { lo, hi, detail: format!("f(lo) = {flo:.6e} and f(hi) = {fhi:.6e} share a sign") });
    }
    let mut fhi = fhi;
    for _ in 0..200 {
        let width = hi - lo;
        let secant = lo - flo * width / (fhi - flo);
        let x = if secant.is_finite() && secant > lo + 0.01 * width && secant < hi - 0.01 * width {
            secant
        } else {
            0.5 * (lo + hi)
        };
        let fx = f(x)?;
        if fx.abs() <= ftol {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        // Keep the bracket shrinking geometrically even when the secant
        // keeps landing on one side.
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm.abs() <= ftol {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
        if hi - lo <= xtol {
            let best = if flo.abs() < fhi.abs() { lo } else { hi };
            return Ok(best);
        }
    }
    Ok(if flo.abs() < fhi.abs() { lo } else { hi })
}

/// Nelder–Mead maximisation inside a box. Points are clamped to the bounds;
/// non-finite objective values rank below every finite one.
pub fn nelder_mead_max(
    f: &impl Fn(&[f64]) -> f64,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let dim = start.len();
    let clamp = |x: &mut Vec<f64>| {
        for i in 0..dim {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let score = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let mut x0 = start.to_vec();
    clamp(&mut x0);
    simplex.push((x0.clone(), score(&x0)));
    for i in 0..dim {
        let span = upper[i] - lower[i];
        let mut x = x0.clone();
        let step = 0.1 * span;
        x[i] = if x[i] + step <= upper[i] { x[i] + step } else { x[i] - step };
        clamp(&mut x);
        let v = score(&x);
        simplex.push((x, v));
    }
    let mut evals = dim + 1;
    let scale: Vec<f64> = (0..dim).map(|i| (upper[i] - lower[i]).max(f64::MIN_POSITIVE)).collect();
    while evals < max_evals {
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let size = simplex
            .iter()
            .skip(1)
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).zip(&scale).map(|((a, b), s)| ((a - b) / s).abs()))
            .fold(0.0, f64::max);
        if size < 1e-10 {
            break;
        }
        let worst = simplex[dim].clone();
        let centroid: Vec<f64> =
            (0..dim).map(|i| simplex[..dim].iter().map(|(x, _)| x[i]).sum::<f64>() / dim as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = (0..dim).map(|i| centroid[i] + t * (worst.0[i] - centroid[i])).collect();
            clamp(&mut x);
            x
        };
        let xr = along(-1.0);
        let fr = score(&xr);
        evals += 1;
        if fr > simplex[0].1 {
            let xe = along(-2.0);
            let fe = score(&xe);
            evals += 1;
            simplex[dim] = if fe > fr { (xe, fe) } else { (xr, fr) };
        } else if fr > simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let (xc, fc) = if fr > worst.1 {
                let x = along(-0.5);
                let v = score(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = score(&x);
                (x, v)
            };
            evals += 1;
            if fc > worst.1.max(fr) {
                simplex[dim] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let mut x: Vec<f64> = (0..dim).map(|i| best[i] + 0.5 * (entry.0[i] - best[i])).collect();
                    clamp(&mut x);
                    let v = score(&x);
                    *entry = (x, v);
                }
                evals += dim;
            }
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    simplex.swap_remove(0)
}
