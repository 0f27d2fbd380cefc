//! Operator identities checked on explicit matrices.

use cvgate::couplings::{bs_unitary, project_ancilla, TwoModeVector};
use cvgate::fock::{self, FockVector, ModeOperator};
use cvgate::synthesis::{self, proportional_distance};
use cvgate::{benchmarks, poly, quadrature, xgate, C64};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn x_matrix(dim: usize) -> DMatrix<C64> {
    let (a, a_dag) = fock::ladder(dim);
    (a + a_dag) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

fn ray_distance(u: &DVector<C64>, v: &DVector<C64>) -> f64 {
    let u = u.unscale(u.norm());
    let v = v.unscale(v.norm());
    let ov = v.dotc(&u);
    let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { c(1.0, 0.0) };
    (u - v * phase).norm()
}

/// `(T′T)^n̂ (A* − 2B*R a + R a†)` up to the scalar carried by the gate.
fn corrected_target(t: f64, t_prime: f64, a_par: C64, b_par: C64, dim: usize) -> ModeOperator {
    let r = (1.0 - t * t).sqrt();
    let (a, a_dag) = fock::ladder(dim);
    let lin = DMatrix::identity(dim, dim) * a_par.conj() + a * (b_par.conj() * (-2.0 * r)) + a_dag * c(r, 0.0);
    fock::attenuation(t_prime * t, dim) * lin
}

#[test]
fn correction_cancels_error_exponential() {
    let dim = 30;
    for &(t, t_prime) in &[(0.8, 0.8), (0.7, 0.5), (0.9, 0.95)] {
        let (a_par, b_par) = (c(0.5, 0.3), c(0.1, -0.05));
        let (r, r_p) = ((1.0 - t * t as f64).sqrt(), (1.0 - t_prime * t_prime as f64).sqrt());
        // The correction must undo exp[−A*(R/T)a + B*(R²/T²)a²].
        let a_p = -a_par * (r / (t * r_p));
        let b_p = -b_par * (r * r / (t * t * r_p * r_p));
        let k = xgate::kraus_bs_heterodyne(t, a_par, b_par, dim).unwrap();
        let corr = xgate::correction_bs(t_prime, a_p, b_p, dim).unwrap();
        let d = proportional_distance(&(corr * k), &corrected_target(t, t_prime, a_par, b_par, dim));
        assert!(d < 1e-10, "T={t} T′={t_prime}: {d:e}");
    }
}

#[test]
fn physical_two_pass_sequence_matches_corrected_form() {
    // Two explicit beam-splitter interactions, the second with a vacuum ancilla.
    let dim = 30;
    let t = 0.8;
    let (a_par, b_par) = (c(0.4, -0.2), c(0.08, 0.05));
    let (a_p, b_p) = (-a_par / t, -b_par / (t * t));
    let u = bs_unitary(t, dim, dim).unwrap();
    let one = fock::number_state(1, dim).unwrap();
    let vac = fock::number_state(0, dim).unwrap();
    let target = corrected_target(t, t, a_par, b_par, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..5 {
        let psi = FockVector::new(DVector::from_fn(dim, |n, _| {
            if n < 6 {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                c(0.0, 0.0)
            }
        }))
        .unwrap();
        let first = project_ancilla(
            &u.apply(&TwoModeVector::product(&psi, &one)).unwrap(),
            &cvgate::couplings::ab_bra(a_par, b_par, dim),
        )
        .unwrap()
        .state;
        let second = project_ancilla(
            &u.apply(&TwoModeVector::product(&first, &vac)).unwrap(),
            &cvgate::couplings::ab_bra(a_p, b_p, dim),
        )
        .unwrap()
        .state;
        let d = ray_distance(second.amplitudes(), &(&target * psi.amplitudes()));
        assert!(d < 1e-8, "{d:e}");
    }
}

#[test]
fn attenuation_commutes_through_ladder_operators() {
    let dim = 25;
    let (a, a_dag) = fock::ladder(dim);
    for t in [0.3, 0.75, 0.99] {
        let tn = fock::attenuation(t, dim);
        let tn_minus = &tn / c(t, 0.0);
        let tn_plus = &tn * c(t, 0.0);
        let m = dim - 1;
        let lhs = (&tn * &a).view((0, 0), (m, m)).into_owned();
        let rhs = (&a * &tn_minus).view((0, 0), (m, m)).into_owned();
        assert!((lhs - rhs).norm() < 1e-12);
        let lhs = (&tn * &a_dag).view((0, 0), (m, m)).into_owned();
        let rhs = (&a_dag * &tn_plus).view((0, 0), (m, m)).into_owned();
        assert!((lhs - rhs).norm() < 1e-12);
    }
}

#[test]
fn attenuation_schedule_collapses() {
    let dim = 30;
    let plan = synthesis::cubic_plan(0.1).unwrap();
    let steps = [0.9, 0.8, 0.95, 0.85, 0.7, 0.99];
    let s = synthesis::schedule_attenuation(&plan, &steps, dim).unwrap();
    // Independent collapsed form: product of (1 + λX) times 𝕋_N^n̂.
    let x = x_matrix(dim);
    let id = DMatrix::<C64>::identity(dim, dim);
    let prod = plan.roots.iter().fold(id.clone(), |acc, &l| acc * (&id + &x * l));
    let total: f64 = steps.iter().product();
    let collapsed = prod * fock::attenuation(total, dim);
    assert!((&s.literal - &collapsed).norm() < 1e-10, "{:e}", (&s.literal - &collapsed).norm());
    assert!(s.distance < 1e-10);
}

#[test]
fn cubic_factorization_reproduces_unitary_expansion() {
    let chi = 0.1;
    let check = synthesis::cubic_check(chi).unwrap();
    assert_eq!(check.plan.roots.len(), 6);
    assert!(check.plan.residual <= 1e-10);
    assert!(check.closed_form_distance <= 1e-10);

    let dim = 30;
    let x = x_matrix(dim);
    let x3 = &x * &x * &x;
    let x6 = &x3 * &x3;
    let target = DMatrix::<C64>::identity(dim, dim) + x3 * c(0.0, chi) - x6 * c(chi * chi / 2.0, 0.0);
    let vac = fock::number_state(0, dim).unwrap();
    let got = check.plan.operator(dim) * vac.amplitudes() * check.plan.scale;
    let want = &target * vac.amplitudes();
    assert!((got - want).norm() < 1e-10);
}

#[test]
fn single_shot_composite_matches_gaussian_damped_polynomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let dim = 20;
    for deg in 1..=6 {
        let f: Vec<C64> = (0..=deg).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        for kappa in [0.2, 0.5] {
            let got = synthesis::single_shot_operator(&f, kappa, 0.0, dim).unwrap();
            // F(X) e^{−κ²X²/2} through the eigenbasis of the truncated X.
            let eig = fock::quadrature(0.0, dim).symmetric_eigen();
            let v = eig.eigenvectors.map(|z| c(z.re, 0.0));
            let damp = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| c((-kappa * kappa * x * x / 2.0).exp(), 0.0)));
            let want = poly::apply_to_operator(&f, &x_matrix(dim)) * (&v * damp * v.adjoint());
            let d = proportional_distance(&got, &want);
            assert!(d < 1e-6, "deg={deg} κ={kappa}: {d:e}");
        }
    }
}

#[test]
fn hermite_functions_are_orthonormal() {
    let dim = 30;
    let nodes = quadrature::gauss_legendre_on(240, -14.0, 14.0);
    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    for &(x, w) in &nodes {
        let psi = fock::position_wavefunction(x, dim);
        gram += &psi * psi.transpose() * w;
    }
    let err = (gram - DMatrix::<f64>::identity(dim, dim)).abs().max();
    assert!(err <= 1e-8, "{err:e}");
}

#[test]
fn beam_splitter_blocks_are_unitary() {
    for t in [0.1, 0.5, 0.8, 0.99] {
        let err = bs_unitary(t, 30, 30).unwrap().block_unitarity_error().unwrap();
        assert!(err <= 1e-12, "T={t}: {err:e}");
    }
}

#[test]
fn classical_gate_matches_coherent_ancilla_simulation() {
    let dim = 30;
    let bra = fock::quadrature_bra(0.0, 0.0, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for &(alpha, t) in &[(c(0.3, 0.1), 0.6), (c(0.85, 0.05), 0.53), (c(-0.2, 0.4), 0.9)] {
        let u = bs_unitary(t, dim, dim).unwrap();
        let anc = fock::coherent_state(alpha, dim).unwrap();
        let k = benchmarks::classical_gate(alpha, t, dim).unwrap();
        for _ in 0..5 {
            let psi = FockVector::new(DVector::from_fn(dim, |n, _| {
                if n < 6 {
                    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    c(0.0, 0.0)
                }
            }))
            .unwrap();
            let out = project_ancilla(&u.apply(&TwoModeVector::product(&psi, &anc)).unwrap(), &bra)
                .unwrap()
                .state;
            let d = ray_distance(out.amplitudes(), &(&k * psi.amplitudes()));
            assert!(d < 1e-8, "α={alpha} T={t}: {d:e}");
        }
    }
}

#[test]
fn strong_attenuation_hides_ancilla_loss() {
    let dim = 40;
    let lam = c(1.5, 0.0);
    let spec = xgate::resolve_gate_settings(lam, lam, 0.1).unwrap();
    for input in benchmarks::InputState::figure_set() {
        let psi = input.state(dim).unwrap();
        let g = benchmarks::gate_target(&psi, lam, lam).unwrap();
        for eta in [0.4, 0.6, 0.8, 1.0] {
            let res = xgate::realistic_gate_density(&psi, &spec, eta).unwrap();
            let ideal = FockVector::new(fock::attenuation(res.attenuation_t, dim) * g.amplitudes()).unwrap();
            let f = fock::fidelity(&res.state, &ideal).unwrap();
            assert!(f >= 1.0 - 1e-3, "{input} η={eta}: {f}");
        }
    }
}
