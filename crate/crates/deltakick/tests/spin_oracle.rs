//! Dense-matrix cross-checks of the Dicke engine and the closed-form tables.

mod common;

use common::dense::{expect, expi, grouped_matrix, word_matrix, Ops};
use common::precise::Space;
use deltakick::collective_spin::{
    apply_rotation, apply_twist, coherent_state, moments, sensitivity, Axis, DickeState, EchoSpec, Engine,
    DEFAULT_SLOPE_STEP,
};
use deltakick::gain_formulas::{
    gain_linear, grouped_ids, operator_word, opportune_rotation, supplemental_identity, table_ids, tau_opt,
    LinearGainInputs,
};
use nalgebra::DVector;
use num_complex::Complex64 as C;

fn to_vec(state: &DickeState) -> DVector<C> {
    DVector::from_vec(state.amplitudes().to_vec())
}

fn pseudo_random_state(n: usize, seed: u64) -> DickeState {
    let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut amps: Vec<C> = (0..=n).map(|_| C::new(next(), next())).collect();
    let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    DickeState::from_amplitudes(amps).unwrap()
}

fn max_diff(a: &DVector<C>, b: &DVector<C>) -> f64 {
    (a - b).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[test]
fn rotations_match_dense_exponential() {
    for &n in &[1usize, 2, 5, 12, 30, 64] {
        let ops = Ops::new(n);
        let psi = pseudo_random_state(n, n as u64);
        for (axis, gen) in [(Axis::X, ops.sx()), (Axis::Y, ops.sy()), (Axis::Z, ops.sz.clone())] {
            for &angle in &[0.3, -1.7, 4.0, 11.0] {
                let got = to_vec(&apply_rotation(&psi, axis, angle).unwrap());
                let want = expi(&gen, angle) * to_vec(&psi);
                assert!(max_diff(&got, &want) < 1e-12, "N={n} axis={axis} angle={angle}");
            }
        }
    }
}

#[test]
fn twist_matches_dense_diagonal() {
    let ops = Ops::new(9);
    let psi = pseudo_random_state(9, 3);
    let got = to_vec(&apply_twist(&psi, 0.37));
    let want = ops.diag(|m| C::from_polar(1.0, -0.37 * m * m)) * to_vec(&psi);
    assert!(max_diff(&got, &want) < 1e-15);
}

#[test]
fn moments_match_dense_expectations() {
    let n = 11;
    let ops = Ops::new(n);
    let psi = pseudo_random_state(n, 7);
    let v = to_vec(&psi);
    let m = moments(&psi);
    let s = [ops.sx(), ops.sy(), ops.sz.clone()];
    let means = [m.mean_x, m.mean_y, m.mean_z];
    for i in 0..3 {
        assert!((expect(&v, &s[i]).re - means[i]).abs() < 1e-12);
        for j in 0..3 {
            let sym = (&s[i] * &s[j] + &s[j] * &s[i]) * C::new(0.5, 0.0);
            assert!((expect(&v, &sym).re - m.second[i][j]).abs() < 1e-11, "({i},{j})");
        }
    }
    let var_z = expect(&v, &(&ops.sz * &ops.sz)).re - m.mean_z.powi(2);
    assert!((var_z - m.variance_z).abs() < 1e-11);
}

#[test]
fn coherent_state_matches_binomials() {
    for &n in &[2usize, 7, 40] {
        let got = to_vec(&coherent_state(n).unwrap());
        assert!(max_diff(&got, &Ops::new(n).css()) < 1e-14);
    }
}

/// Relative agreement; structural zeros are compared absolutely.
fn agrees(got: C, want: C) -> bool {
    let diff = (got - want).norm();
    if want.norm() < 1e-12 {
        diff <= 1e-12
    } else {
        diff <= 1e-10 * want.norm()
    }
}

#[test]
fn expectation_table_matches_brute_force() {
    for &s2 in &[4usize, 6, 10, 20] {
        let space = Space::new(s2);
        for &tau in &[0.05, 0.3, 1.0] {
            for id in table_ids() {
                let want = space.word_expectation(&operator_word(id).unwrap(), tau);
                let got = supplemental_identity(id, s2 as f64 / 2.0, tau).unwrap();
                assert!(agrees(got, want), "S={} tau={tau} {id}: {got} vs {want}", s2 / 2);
            }
        }
    }
}

#[test]
fn grouped_results_match_brute_force() {
    for &s2 in &[4usize, 10, 20] {
        let space = Space::new(s2);
        for &tau in &[0.05, 0.3, 1.0] {
            for id in grouped_ids() {
                let want = space.grouped_expectation(id, tau);
                let got = supplemental_identity(id, s2 as f64 / 2.0, tau).unwrap();
                assert!(agrees(got, want), "S={} tau={tau} {id}: {got} vs {want}", s2 / 2);
            }
        }
    }
}

#[test]
fn extended_precision_oracle_agrees_with_dense_matrices() {
    // At small spin both brute-force paths are well conditioned, so they must agree closely.
    for &s2 in &[2usize, 4] {
        let ops = Ops::new(s2);
        let psi = ops.css();
        let space = Space::new(s2);
        for &tau in &[0.05, 0.3] {
            for id in table_ids() {
                let dense = expect(&psi, &word_matrix(&ops, &operator_word(id).unwrap(), tau));
                let fine = space.word_expectation(&operator_word(id).unwrap(), tau);
                assert!((dense - fine).norm() < 1e-12 * fine.norm().max(1.0), "{id}: {dense} vs {fine}");
            }
            for id in grouped_ids() {
                let dense = expect(&psi, &grouped_matrix(&ops, id, tau));
                let fine = space.grouped_expectation(id, tau);
                assert!((dense - fine).norm() < 1e-12 * fine.norm().max(1.0), "{id}: {dense} vs {fine}");
            }
        }
    }
}

#[test]
fn residual_twist_block_matches_dense_product() {
    let n = 16;
    let ops = Ops::new(n);
    let sy = ops.sy();
    let (tau1, theta, tau_ai, tau2) = (0.12, 0.05, 0.03, -0.1);
    let spec = EchoSpec::echo(tau1, tau_ai, tau2).with_theta(theta);
    let got = to_vec(&Engine::default().echo_state(n, &spec).unwrap());
    let twist = |t: f64| ops.diag(|m| C::from_polar(1.0, -t * m * m));
    let block = expi(&sy, theta) * expi(&(&sy * &sy), -tau_ai);
    let want = expi(&ops.sx(), -std::f64::consts::FRAC_PI_2) * twist(tau2) * block * twist(tau1) * ops.css();
    assert!(max_diff(&got, &want) < 1e-12);
}

#[test]
fn echo_without_phase_restores_coherent_state() {
    let engine = Engine::default();
    for &n in &[10usize, 100, 400] {
        let mut spec = EchoSpec::echo(0.3, 0.0, -0.3);
        spec.final_rotation = deltakick::collective_spin::Rotation::IDENTITY;
        let out = engine.echo_state(n, &spec).unwrap();
        let fidelity = out.inner(&coherent_state(n).unwrap()).norm_sqr();
        assert!(fidelity >= 1.0 - 1e-12, "N={n}: {fidelity}");
    }
}

#[test]
fn unrotated_coherent_state_readout() {
    // Quarter turn about x leaves the x-polarised state in place.
    let m = Engine::default().run_echo(20, &EchoSpec::echo(0.0, 0.0, 0.0)).unwrap();
    assert!(m.mean_z.abs() < 1e-12);
    assert!((m.variance_z - 5.0).abs() < 1e-11);
}

#[test]
fn linear_readout_matches_closed_form() {
    let engine = Engine::default();
    for &n in &[10usize, 100, 500] {
        let t_opt = tau_opt(n as u64);
        for &frac in &[0.05, 0.3, 1.0, 2.0] {
            let tau = frac * t_opt;
            let spec = EchoSpec::linear(tau, opportune_rotation(n as u64, tau));
            let (_, gain) = engine.echo_sensitivity(n, &spec, 0.0).unwrap();
            let closed = gain_linear(&LinearGainInputs { n: n as u64, tau, delta_n: 0.0 });
            assert!((gain - closed).abs() <= 1e-9 * closed, "N={n} tau={tau}: {gain} vs {closed}");
        }
    }
}

#[test]
fn echo_slope_is_odd_in_twist() {
    let engine = Engine::default();
    let up = engine.slope_at_zero(30, &EchoSpec::echo(0.05, 0.0, -0.05), DEFAULT_SLOPE_STEP).unwrap();
    let down = engine.slope_at_zero(30, &EchoSpec::echo(-0.05, 0.0, 0.05), DEFAULT_SLOPE_STEP).unwrap();
    assert!((up + down).abs() < 1e-9 * up.abs());
}

#[test]
fn echo_noise_ratio_follows_variance_addition() {
    let n = 400;
    let engine = Engine::default();
    let spec = EchoSpec::echo(0.01, 0.0, -0.01);
    let m = engine.run_echo(n, &spec).unwrap();
    let slope = engine.slope_at_zero(n, &spec, DEFAULT_SLOPE_STEP).unwrap();
    let (_, q0) = sensitivity(&m, slope, n, 0.0).unwrap();
    let (_, q10) = sensitivity(&m, slope, n, 10.0).unwrap();
    let model = ((n as f64 / 4.0) / (n as f64 / 4.0 + 100.0)).sqrt();
    assert!((q10 / q0 - model).abs() < 1e-9);
}
