use deltakick::meanfield::{
    accumulate_tau, chi_cross, chi_self, chi_trace, evolve_scaling, initial_tf_radii, PhysicalParams, PulseEvent,
    PulseKind, PulseType, ScalingState, SegmentLabel, Timeline, TrapSegment,
};
use deltakick::Error;
use std::f64::consts::PI;

/// Midpoint-rule sum over the bounding box of the first cloud, in units of
/// the radii.
fn brute_overlap(d: f64) -> f64 {
    let n = 240;
    let h = 2.0 / n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let x = -1.0 + (i as f64 + 0.5) * h;
        for j in 0..n {
            let y = -1.0 + (j as f64 + 0.5) * h;
            let rho = x * x + y * y;
            if rho >= 1.0 {
                continue;
            }
            for k in 0..n {
                let z = -1.0 + (k as f64 + 0.5) * h;
                let a = 1.0 - rho - z * z;
                let b = 1.0 - rho - (z - d) * (z - d);
                if a > 0.0 && b > 0.0 {
                    sum += a * b;
                }
            }
        }
    }
    let norm = 15.0 / (8.0 * PI);
    sum * h * h * h * norm * norm
}

#[test]
fn self_coefficient_from_quadrature() {
    // ∫(1-r²)² over the unit ball by a fine radial midpoint rule
    let cells = 200_000;
    let fine: f64 = (0..cells)
        .map(|i| {
            let r = (i as f64 + 0.5) / cells as f64;
            4.0 * PI * r * r * (1.0 - r * r).powi(2) / cells as f64
        })
        .sum();
    let norm = 15.0 / (8.0 * PI);
    let coefficient = norm * norm * fine;
    assert!((coefficient - 15.0 / (14.0 * PI)).abs() < 1e-10 * coefficient);

    let p = PhysicalParams::default();
    let r = [2e-6, 3e-6, 7e-6];
    let expected = p.g_over_hbar() * coefficient / (r[0] * r[1] * r[2]);
    assert!((chi_self(r, &p) - expected).abs() < 1e-9 * expected);
}

#[test]
fn cross_term_matches_brute_force_overlap() {
    let p = PhysicalParams::default();
    let r = [2e-6, 3e-6, 5e-6];
    let unit = p.g_over_hbar() / (r[0] * r[1] * r[2]);
    for &d in &[0.0, 0.3, 1.0, 1.7] {
        let brute = brute_overlap(d) * unit;
        let got = chi_cross(r, d * r[2], &p);
        assert!((got - brute).abs() < 1e-3 * brute, "d = {d}: {got} vs {brute}");
    }
}

#[test]
fn isotropic_free_expansion_reaches_asymptotic_rate() {
    let w0 = 2.0 * PI * 50.0;
    let p = PhysicalParams::default();
    let r0 = initial_tf_radii(&p, [w0; 3]).unwrap();
    let seg = TrapSegment::free(100.0 / w0);
    let path = evolve_scaling(&ScalingState::at_rest(r0), &seg, [w0; 3], 1e-3).unwrap();
    let last = path.last().unwrap();
    let target = w0 * (2.0f64 / 3.0).sqrt();
    for v in last.lambda_dot {
        assert!((v - target).abs() < 1e-3 * target, "{v} vs {target}");
    }
    // energy integral λ̇² = (2ω₀²/3)(1 - λ⁻³)
    let l = last.lambda[0];
    let energy = target * target * (1.0 - l.powi(-3));
    assert!((last.lambda_dot[0].powi(2) - energy).abs() < 1e-8 * energy);
    // free flight: rates only grow, density only drops
    for w in path.windows(2) {
        assert!(w[1].lambda_dot[0] >= w[0].lambda_dot[0]);
        assert!(chi_self(w[1].radii(), &p) <= chi_self(w[0].radii(), &p));
    }
}

#[test]
fn forward_backward_round_trip() {
    let w0 = [2.0 * PI * 30.0, 2.0 * PI * 50.0, 2.0 * PI * 80.0];
    let p = PhysicalParams::default();
    let r0 = initial_tf_radii(&p, w0).unwrap();
    let mut start =
        evolve_scaling(&ScalingState::at_rest(r0), &TrapSegment::free(0.01), w0, 1e-3).unwrap().pop().unwrap();
    start.t = 0.0;
    let seg = TrapSegment { duration: 3e-4, omega: [2.0 * PI * 400.0; 3], label: SegmentLabel::Dks1 };
    for segment in [seg, TrapSegment::free(0.02)] {
        let fwd = *evolve_scaling(&start, &segment, w0, 1e-4).unwrap().last().unwrap();
        let flipped = ScalingState { lambda_dot: fwd.lambda_dot.map(|v| -v), t: 0.0, ..fwd };
        let back = *evolve_scaling(&flipped, &segment, w0, 1e-4).unwrap().last().unwrap();
        for i in 0..3 {
            assert!((back.lambda[i] - start.lambda[i]).abs() < 1e-8 * start.lambda[i]);
            assert!((-back.lambda_dot[i] - start.lambda_dot[i]).abs() < 1e-8 * start.lambda_dot[i].abs().max(1.0));
        }
    }
}

#[test]
fn thin_lens_kick_collimates() {
    let w0 = [2.0 * PI * 50.0; 3];
    let p = PhysicalParams::default();
    let r0 = initial_tf_radii(&p, w0).unwrap();
    let mut s = evolve_scaling(&ScalingState::at_rest(r0), &TrapSegment::free(0.03), w0, 1e-3).unwrap().pop().unwrap();
    s.t = 0.0;
    let rate = s.lambda_dot[0] / s.lambda[0];
    let mut last = f64::INFINITY;
    for dt in [1e-4, 3e-5, 1e-5] {
        let w = (rate / dt).sqrt();
        let seg = TrapSegment { duration: dt, omega: [w; 3], label: SegmentLabel::Dks1 };
        let after = evolve_scaling(&s, &seg, w0, dt).unwrap().pop().unwrap();
        let residual = after.lambda_dot[0].abs() / s.lambda_dot[0];
        assert!(residual < last);
        last = residual;
    }
    assert!(last < 1e-3, "{last}");
}

#[test]
fn over_focus_is_reported() {
    let w0 = [2.0 * PI * 50.0; 3];
    let r0 = initial_tf_radii(&PhysicalParams { scattering_length: 0.0, ..Default::default() }, w0).unwrap();
    // Without interactions nothing stops the collapse.
    let mut s = ScalingState::at_rest(r0);
    s.lambda_dot = [-100.0; 3];
    let res = evolve_scaling(&s, &TrapSegment::free(0.1), [0.0; 3], 1e-4);
    assert!(matches!(res, Err(Error::FocusSingularity { .. }) | Err(Error::StepSizeUnderflow { .. })));
}

fn kick_timeline(dt: f64) -> Timeline {
    Timeline::new(
        vec![
            TrapSegment::free(5e-3),
            TrapSegment { duration: dt, omega: [2.0 * PI * 400.0; 3], label: SegmentLabel::Dks1 },
            TrapSegment::free(15e-3),
        ],
        vec![PulseEvent { time: 0.0, kind: PulseKind::BeamSplitter }],
    )
    .unwrap()
}

#[test]
fn refocusing_raises_then_lowers_the_self_term() {
    let p = PhysicalParams::default();
    let w0 = [2.0 * PI * 50.0; 3];
    let trace = chi_trace(&kick_timeline(2e-4), &p, w0, 2e-5).unwrap();
    let after: Vec<usize> = (0..trace.len()).filter(|&i| trace.times[i] >= 5e-3).collect();
    let peak = after.iter().copied().max_by(|&a, &b| trace.chi_self[a].total_cmp(&trace.chi_self[b])).unwrap();
    let first = after[0];
    let last = *after.last().unwrap();
    assert!(trace.chi_self[peak] > trace.chi_self[first]);
    assert!(trace.chi_self[peak] > trace.chi_self[last]);
    let vol = |i: usize| trace.radii[i].iter().product::<f64>();
    assert!(after.iter().all(|&i| vol(i) >= vol(peak)));
}

#[test]
fn trace_invariants_and_raman_positivity() {
    let w0 = [2.0 * PI * 50.0; 3];
    for pulse_type in [PulseType::Raman, PulseType::Bragg] {
        let p = PhysicalParams { pulse_type, ..Default::default() };
        let trace = chi_trace(&kick_timeline(5e-4), &p, w0, 2e-5).unwrap();
        for i in 0..trace.len() {
            assert!(trace.chi_cross[i] >= 0.0 && trace.chi_cross[i] <= trace.chi_self[i]);
            assert!(trace.chi_eff[i].abs() <= trace.chi_self[i] * (1.0 + 1e-15));
        }
        let tau = accumulate_tau(&trace, (0.0, trace.times[trace.len() - 1]));
        if pulse_type == PulseType::Raman {
            assert!(trace.chi_eff.iter().all(|&c| c >= 0.0));
            assert!(tau > 0.0);
        }
    }
}

#[test]
fn quadrature_converges_with_step() {
    let p = PhysicalParams::default();
    let w0 = [2.0 * PI * 50.0; 3];
    let tl = kick_timeline(3e-4);
    let mut prev: Option<f64> = None;
    let mut change = f64::INFINITY;
    for k in 0..6 {
        let dt = 1e-4 / 2f64.powi(k);
        let trace = chi_trace(&tl, &p, w0, dt).unwrap();
        let tau = accumulate_tau(&trace, (0.0, tl.duration()));
        if let Some(old) = prev {
            change = ((tau - old) / tau).abs();
        }
        prev = Some(tau);
    }
    assert!(change < 1e-6, "{change}");
}
