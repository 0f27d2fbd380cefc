use cvgate::fock::{self, FockVector};
use cvgate::stateprep::{self, Parity, TargetKind, TargetState};
use cvgate::C64;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_coeffs(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..=n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn ray_distance(u: &DVector<C64>, v: &DVector<C64>) -> f64 {
    let u = u.unscale(u.norm());
    let v = v.unscale(v.norm());
    let ov = v.dotc(&u);
    let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { c(1.0, 0.0) };
    (u - v * phase).norm()
}

/// Hermite functions by the three-term recurrence, sampled on a grid.
fn hermite_function(n: usize, x: f64) -> f64 {
    let mut p0 = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
    if n == 0 {
        return p0;
    }
    let mut p1 = std::f64::consts::SQRT_2 * x * p0;
    for k in 1..n {
        let p2 = ((2.0 / (k + 1) as f64).sqrt()) * x * p1 - ((k as f64) / (k + 1) as f64).sqrt() * p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

#[test]
fn hermite_expansion_matches_wavefunction_on_grid() {
    // G(x)e^{−x²/2}/π^{1/4} must equal Σ c_n ψ_n(x) pointwise.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let coeffs = random_coeffs(&mut rng, 5);
    let g = stateprep::wavefunction_to_x_polynomial(&coeffs).unwrap();
    for i in 0..41 {
        let x = -4.0 + 0.2 * i as f64;
        let lhs = cvgate::poly::eval(&g, c(x, 0.0)) * std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
        let rhs: C64 = coeffs.iter().enumerate().map(|(n, &cn)| cn * hermite_function(n, x)).sum();
        assert!((lhs - rhs).norm() < 1e-12, "x={x}: {lhs} vs {rhs}");
    }
}

#[test]
fn x_polynomial_reproduces_random_fock_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in [5, 8, 12] {
        for _ in 0..5 {
            let coeffs = random_coeffs(&mut rng, n);
            let g = stateprep::wavefunction_to_x_polynomial(&coeffs).unwrap();
            let out = stateprep::x_polynomial_on_vacuum(&g, 30).unwrap();
            let want = DVector::from_fn(30, |k, _| coeffs.get(k).copied().unwrap_or_default());
            let err = (out.amplitudes() - &want).norm();
            assert!(err < 1e-10, "N={n}: {err:e}");
        }
    }
}

#[test]
fn single_photon_from_linear_polynomial() {
    let g = stateprep::wavefunction_to_x_polynomial(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let out = stateprep::x_polynomial_on_vacuum(&g, 6).unwrap();
    assert!((out.amplitudes() - fock::number_state(1, 6).unwrap().amplitudes()).norm() < 1e-14);
}

#[test]
fn small_cat_polynomial_matches_exponential_series() {
    // (e^{βa†} + e^{−βa†})|0⟩ truncated at n = 2 is |0⟩ + β²/√2 |2⟩ up to a factor 2.
    let beta = 1.0;
    let v = stateprep::apply_creation_polynomial(&stateprep::cat_polynomial(beta, 2).unwrap(), 8).unwrap();
    let raw = DVector::from_fn(8, |n, _| match n {
        0 => c(1.0, 0.0),
        2 => c(beta * beta / std::f64::consts::SQRT_2, 0.0),
        _ => c(0.0, 0.0),
    });
    assert!((v.amplitudes() - raw.unscale(raw.norm())).norm() < 1e-14);
}

#[test]
fn cat_fidelity_at_beta_three() {
    let f = stateprep::cat_fidelity(3.0, 16, 80).unwrap();
    assert!((f - 0.993).abs() <= 0.002, "{f}");
}

#[test]
fn cat_fidelity_converges_monotonically() {
    for beta in [1.0, 2.0, 3.0] {
        let mut prev = 0.0;
        for n_max in (0..=20).step_by(2) {
            let f = stateprep::cat_fidelity(beta, n_max, 80).unwrap();
            assert!(f >= prev - 1e-12, "β={beta} n_max={n_max}: {f} < {prev}");
            prev = f;
        }
    }
    let f = stateprep::cat_fidelity(1.0, 12, 60).unwrap();
    assert!((1.0 - f) < 1e-6, "{f}");
}

#[test]
fn odd_cat_construction() {
    let t = TargetState::new(TargetKind::Cat { beta: 2.0, parity: Parity::Odd }, 21, 80).unwrap();
    let approx = t.truncated().unwrap();
    assert!(approx.amplitudes().iter().step_by(2).all(|z| *z == c(0.0, 0.0)));
    let f = fock::fidelity_pure(&approx, &t.ideal().unwrap()).unwrap();
    assert!(f > 0.999, "{f}");
}

#[test]
fn target_state_validation() {
    assert!(TargetState::new(TargetKind::Cat { beta: 1.0, parity: Parity::Even }, 50, 50).is_err());
    let c3 = vec![c(1.0, 0.0), c(0.0, 1.0), c(0.5, 0.0)];
    assert!(TargetState::new(TargetKind::FockCoefficients { c: c3.clone() }, 1, 10).is_err());
    let t = TargetState::new(TargetKind::FockCoefficients { c: c3 }, 2, 10).unwrap();
    assert!((t.truncated().unwrap().amplitudes() - t.ideal().unwrap().amplitudes()).norm() < 1e-12);
}

#[test]
fn sequence_builds_one_plus_creation() {
    let r = stateprep::prepare_via_gate_sequence(&[c(1.0, 0.0), c(1.0, 0.0)], &[0.8], 10).unwrap();
    let s = match &r.result.state {
        fock::State::Pure(v) => v.clone(),
        _ => panic!("expected a pure state"),
    };
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let want = FockVector::new(DVector::from_fn(10, |n, _| if n < 2 { c(h, 0.0) } else { c(0.0, 0.0) })).unwrap();
    assert!(ray_distance(s.amplitudes(), want.amplitudes()) < 1e-10);
    assert!(r.result.success > 0.0);
}

#[test]
fn sequence_reproduces_cat_despite_attenuation() {
    let p = stateprep::cat_polynomial(1.0, 4).unwrap();
    for t in [0.9, 0.6] {
        let r = stateprep::prepare_via_gate_sequence(&p, &[t; 4], 20).unwrap();
        assert!(r.direct_distance <= 1e-8, "T={t}: {:e}", r.direct_distance);
        let direct = stateprep::apply_creation_polynomial(&p, 20).unwrap();
        if let fock::State::Pure(s) = &r.result.state {
            assert!(ray_distance(s.amplitudes(), direct.amplitudes()) <= 1e-8);
            assert!(s.amplitudes().iter().skip(1).step_by(2).all(|z| z.norm() < 1e-12));
        } else {
            panic!("expected a pure state");
        }
    }
    assert!(stateprep::prepare_via_gate_sequence(&[c(0.0, 0.0), c(1.0, 0.0)], &[0.9], 10).is_err());
}
