//! The elementary conditional gate `1 + λ₋a + λ₊a†`.
//!
//! A single photon in ancilla mode L is mixed with the oscillator on a beam
//! splitter (or written onto it through a QND coupling) and the ancilla is
//! projected onto a quadrature or heterodyne outcome. The analytic Kraus
//! operators below are exact; each has a two-mode oracle test.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::couplings::{self, TwoModeVector};
use crate::error::{domain, Error, Result};
use crate::fock::{self, check_dims, vecops, DensityMatrix, FockVector, ModeOperator, State};
use crate::quadrature::gauss_legendre_on;

const REACH_TOL: f64 = 1e-12;

fn cz(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn reflection(t: f64) -> f64 {
    (1.0 - t * t).max(0.0).sqrt()
}

fn check_transmission(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return domain(format!("transmission {t} outside (0, 1)"));
    }
    Ok(())
}

fn check_b(b: C64) -> Result<()> {
    if !(b.norm() < 0.5) {
        return domain(format!("|B| = {} must be below 1/2", b.norm()));
    }
    Ok(())
}

/// `1 + λ₋a + λ₊a†`.
pub fn ideal_gate_operator(lambda_minus: C64, lambda_plus: C64, dim: usize) -> ModeOperator {
    let (a, a_dag) = fock::ladder(dim);
    DMatrix::identity(dim, dim) + a * lambda_minus + a_dag * lambda_plus
}

/// `exp(c1 a + c2 a²)`.
fn exp_lowering(c1: C64, c2: C64, dim: usize) -> ModeOperator {
    let (a, _) = fock::ladder(dim);
    fock::expm_nilpotent(&(&a * c1 + &a * &a * c2))
}

/// Error exponential `exp[−√2 x e^{−iθ} R a − R² e^{−2iθ} a²/2]` of the homodyne gate.
fn homodyne_error_coeffs(t: f64, x: f64, theta: f64) -> (C64, C64) {
    let r = reflection(t);
    let e1 = C64::from_polar(1.0, -theta);
    let e2 = C64::from_polar(1.0, -2.0 * theta);
    (-e1 * (SQRT_2 * x * r), -e2 * (0.5 * r * r))
}

/// Ancilla in `|1⟩`, projected on `⟨x_θ|` after the beam splitter:
/// `e^{−iθ}(ψ₀(x)/T) T^n̂ exp[−√2x e^{−iθ}Ra − R²e^{−2iθ}a²/2] (√2x + Re^{−iθ}a + Re^{iθ}a†)`.
pub fn kraus_bs_homodyne(t: f64, x_theta: f64, theta: f64, dim: usize) -> Result<ModeOperator> {
    check_transmission(t)?;
    let r = reflection(t);
    let (a, a_dag) = fock::ladder(dim);
    let (c1, c2) = homodyne_error_coeffs(t, x_theta, theta);
    let lin = DMatrix::identity(dim, dim) * cz(SQRT_2 * x_theta)
        + a * C64::from_polar(r, -theta)
        + a_dag * C64::from_polar(r, theta);
    let psi0 = fock::position_wavefunction(x_theta, 1)[0];
    Ok(fock::attenuation(t, dim) * exp_lowering(c1, c2, dim) * lin * C64::from_polar(psi0 / t, -theta))
}

/// Vacuum ancilla projected on `⟨x_θ|`: `ψ₀(x) T^n̂ exp[−√2x e^{−iθ}Ra − R²e^{−2iθ}a²/2]`.
pub fn kraus_bs_homodyne_vacuum(t: f64, x_theta: f64, theta: f64, dim: usize) -> Result<ModeOperator> {
    check_transmission(t)?;
    let (c1, c2) = homodyne_error_coeffs(t, x_theta, theta);
    let psi0 = fock::position_wavefunction(x_theta, 1)[0];
    Ok(fock::attenuation(t, dim) * exp_lowering(c1, c2, dim) * cz(psi0))
}

/// Inverse of the homodyne error exponential followed by `T′^n̂`:
/// `T′^n̂ exp[√2x e^{−iθ}(R/T)a + (R²/T²)e^{−2iθ}a²/2]`.
///
/// Applied after the homodyne gate it leaves `(T′T)^n̂` times the linear
/// factor. A vacuum-ancilla pass realizes this only with `|B′| = 1/(2T²)`,
/// beyond the heterodyne range, so this operator is an idealization.
pub fn correction_homodyne_ideal(
    t: f64,
    t_prime: f64,
    x_theta: f64,
    theta: f64,
    dim: usize,
) -> Result<ModeOperator> {
    check_transmission(t)?;
    if !(t_prime > 0.0 && t_prime <= 1.0) {
        return domain(format!("correction transmission {t_prime} outside (0, 1]"));
    }
    let (c1, c2) = homodyne_error_coeffs(t, x_theta, theta);
    Ok(fock::attenuation(t_prime, dim) * exp_lowering(-c1 / t, -c2 / (t * t), dim))
}

/// Ancilla in `|1⟩`, projected on `⟨A,B| = ⟨0|exp[A*b + B*b²]`:
/// `exp[−A*(R/T)a + B*(R²/T²)a²] T^{n̂−1} (A* − 2B*R a + R a†)`.
pub fn kraus_bs_heterodyne(t: f64, a_par: C64, b_par: C64, dim: usize) -> Result<ModeOperator> {
    check_transmission(t)?;
    check_b(b_par)?;
    let r = reflection(t);
    let (ac, bc) = (a_par.conj(), b_par.conj());
    let (a, a_dag) = fock::ladder(dim);
    let lin = DMatrix::identity(dim, dim) * ac + &a * (bc * (-2.0 * r)) + a_dag * cz(r);
    let err = exp_lowering(-ac * (r / t), bc * (r * r / (t * t)), dim);
    Ok(err * fock::attenuation(t, dim) * lin / cz(t))
}

/// Vacuum-ancilla pass projected on `⟨A′,B′|`: `T′^n̂ exp[−A′*R′a + B′*R′²a²]`.
///
/// With `A′ = −A/T`, `B′ = −B/T²` and `T′ = T` it cancels the error
/// exponential of [`kraus_bs_heterodyne`].
pub fn correction_bs(t_prime: f64, a_prime: C64, b_prime: C64, dim: usize) -> Result<ModeOperator> {
    if !(t_prime > 0.0 && t_prime <= 1.0) {
        return domain(format!("transmission {t_prime} outside (0, 1]"));
    }
    check_b(b_prime)?;
    let r = reflection(t_prime);
    let err = exp_lowering(-a_prime.conj() * r, b_prime.conj() * (r * r), dim);
    Ok(fock::attenuation(t_prime, dim) * err)
}

/// `f(X)` for the truncated position quadrature.
pub fn function_of_x(dim: usize, f: impl Fn(f64) -> C64) -> ModeOperator {
    let eig = fock::quadrature(0.0, dim).symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= f(eig.eigenvalues[j]);
    }
    scaled * v.adjoint()
}

/// QND gate with ancilla `|1⟩` projected on `⟨A,B|`:
/// `exp[A*κX/√2 + (B*/2 − 1/4)κ²X²] (A* + κ(√2B* − 1/√2)X)`.
pub fn qnd_gate(kappa: f64, a_par: C64, b_par: C64, dim: usize) -> Result<ModeOperator> {
    check_b(b_par)?;
    let (ac, bc) = (a_par.conj(), b_par.conj());
    let k2 = kappa * kappa;
    Ok(function_of_x(dim, |x| {
        let e = (ac * (kappa * x * FRAC_1_SQRT_2) + (bc * 0.5 - 0.25) * (k2 * x * x)).exp();
        e * (ac + (bc * SQRT_2 - FRAC_1_SQRT_2) * (kappa * x))
    }))
}

/// Correction pass for a QND gate heralded by `⟨A,B|`:
/// `exp[−A*κX/√2 − (B*/2 + 1/4)κ²X²] · exp[tanh r κ²X²/4]`.
///
/// With `r = 0` this is the vacuum ancilla projected on `⟨−A,−B|`. With the
/// ancilla squeezed to `∝ exp[(tanh r/2) b†²]|0⟩` the same operator (up to a
/// scalar) is obtained by projecting on `⟨−A′,−B′|` from
/// [`qnd_compensating_outcome`].
pub fn qnd_correction(kappa: f64, a_par: C64, b_par: C64, squeeze_r: f64, dim: usize) -> Result<ModeOperator> {
    check_b(b_par)?;
    let (ac, bc) = (a_par.conj(), b_par.conj());
    let k2 = kappa * kappa;
    let s = squeeze_r.tanh();
    Ok(function_of_x(dim, |x| {
        (-ac * (kappa * x * FRAC_1_SQRT_2) - (bc * 0.5 + 0.25) * (k2 * x * x) + cz(s * k2 * x * x / 4.0)).exp()
    }))
}

/// Outcome `(A′, B′)` whose projection `⟨−A′,−B′|` on the squeezed ancilla
/// realizes [`qnd_correction`] for the gate outcome `(A, B)`.
///
/// Projecting a fixed `⟨−A,−B|` on a squeezed ancilla instead gives
/// `exp[−A*(1−t)κX/(√2(1+2B*t)) − (1−t)(1+2B*)κ²X²/(4(1+2B*t))]`, `t = tanh r`,
/// which no longer cancels the gate's linear term.
pub fn qnd_compensating_outcome(a_par: C64, b_par: C64, squeeze_r: f64) -> Result<(C64, C64)> {
    check_b(b_par)?;
    let t = squeeze_r.tanh();
    if !(t >= 0.0 && t < 1.0) {
        return domain(format!("squeeze parameter r = {squeeze_r} must be finite and non-negative"));
    }
    let bc = b_par.conj();
    let beta = bc / ((1.0 - t) * (1.0 - t) - bc * (2.0 * t));
    let b_out = beta.conj();
    if !(b_out.norm() < 0.5) {
        return Err(Error::Unreachable(format!(
            "compensating outcome needs |B′| = {} < 1/2",
            b_out.norm()
        )));
    }
    let a_out = (a_par.conj() * (beta * (2.0 * t) + 1.0) / (1.0 - t)).conj();
    Ok((a_out, b_out))
}

/// Ancilla `(|0⟩ + c₁|1⟩)/√(1+|c₁|²)` projected on `⟨0|` after the QND coupling:
/// `exp[−κ²X²/4](1 − c₁κX/√2)/√(1+|c₁|²)`.
pub fn qnd_photon_counting(kappa: f64, c1: C64, dim: usize) -> ModeOperator {
    let norm = (1.0 + c1.norm_sqr()).sqrt();
    let k2 = kappa * kappa;
    function_of_x(dim, |x| {
        (cz(1.0) - c1 * (kappa * x * FRAC_1_SQRT_2)) * ((-k2 * x * x / 4.0).exp() / norm)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    BsHomodyne,
    BsHeterodyne,
    QndHomodyne,
    QndPhotonCounting,
}

/// Measurement outcome that heralds the gate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Quadrature { x: f64 },
    Heterodyne { a: C64, b: C64 },
    Vacuum,
}

/// Target coefficients together with the physical settings that realize them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateSpec {
    pub lambda_minus: C64,
    pub lambda_plus: C64,
    pub variant: Variant,
    /// Beam-splitter transmission of the gate pass.
    pub t: f64,
    /// Transmission of the correction pass.
    pub t_prime: f64,
    pub kappa: f64,
    pub theta: f64,
    pub outcome: Outcome,
    pub corrected: bool,
}

impl GateSpec {
    pub fn with_corrected(mut self, corrected: bool) -> Self {
        self.corrected = corrected;
        self
    }

    pub fn with_t_prime(mut self, t_prime: f64) -> Self {
        self.t_prime = t_prime;
        self
    }

    /// Ideal operator `1 + λ₋a + λ₊a†` these settings aim at.
    pub fn target_operator(&self, dim: usize) -> ModeOperator {
        ideal_gate_operator(self.lambda_minus, self.lambda_plus, dim)
    }

    /// Sharp homodyne outcome that realizes `|λ|` for this transmission.
    pub fn homodyne_x(&self) -> Result<f64> {
        match self.outcome {
            Outcome::Quadrature { x } => Ok(x),
            _ => domain("gate settings have no quadrature outcome"),
        }
    }

    /// Kraus operator of the single-photon branch at the sharp outcome.
    pub fn kraus(&self, dim: usize) -> Result<ModeOperator> {
        match (self.variant, self.outcome) {
            (Variant::BsHomodyne, Outcome::Quadrature { x }) => kraus_bs_homodyne(self.t, x, self.theta, dim),
            (Variant::BsHeterodyne, Outcome::Heterodyne { a, b }) => kraus_bs_heterodyne(self.t, a, b, dim),
            (Variant::QndHomodyne, Outcome::Heterodyne { a, b }) => qnd_gate(self.kappa, a, b, dim),
            _ => domain("variant and outcome do not match"),
        }
    }

    /// Kraus operator of the vacuum branch (ancilla photon missing).
    pub fn vacuum_kraus(&self, dim: usize) -> Result<ModeOperator> {
        match (self.variant, self.outcome) {
            (Variant::BsHomodyne, Outcome::Quadrature { x }) => {
                kraus_bs_homodyne_vacuum(self.t, x, self.theta, dim)
            }
            (Variant::BsHeterodyne, Outcome::Heterodyne { a, b }) => correction_bs(self.t, a, b, dim),
            (Variant::QndHomodyne, Outcome::Heterodyne { a, b }) => qnd_correction(self.kappa, -a, -b, 0.0, dim),
            _ => domain("variant and outcome do not match"),
        }
    }

    /// Correction pass applied after a heralded gate.
    pub fn correction(&self, dim: usize) -> Result<ModeOperator> {
        match (self.variant, self.outcome) {
            (Variant::BsHomodyne, Outcome::Quadrature { x }) => {
                correction_homodyne_ideal(self.t, self.t_prime, x, self.theta, dim)
            }
            (Variant::BsHeterodyne, Outcome::Heterodyne { a, b }) => {
                let t = self.t;
                correction_bs(self.t_prime, -a / t, -b / (t * t), dim)
            }
            (Variant::QndHomodyne, Outcome::Heterodyne { a, b }) => qnd_correction(self.kappa, a, b, 0.0, dim),
            _ => domain("variant has no correction pass"),
        }
    }

    /// Attenuation base left on the output, `T` or `T′T` when corrected.
    pub fn attenuation_t(&self) -> f64 {
        match self.variant {
            Variant::BsHomodyne | Variant::BsHeterodyne if self.corrected => self.t_prime * self.t,
            Variant::BsHomodyne | Variant::BsHeterodyne => self.t,
            _ => 1.0,
        }
    }

    /// Constructs the QND variant with heterodyne outcome `(A, B)`.
    pub fn qnd(kappa: f64, a_par: C64, b_par: C64) -> Result<Self> {
        check_b(b_par)?;
        if a_par.norm() == 0.0 {
            return domain("A = 0 leaves no identity part in the QND gate");
        }
        let lam = (b_par.conj() * SQRT_2 - FRAC_1_SQRT_2) * kappa / a_par.conj();
        Ok(Self {
            lambda_minus: lam * FRAC_1_SQRT_2,
            lambda_plus: lam * FRAC_1_SQRT_2,
            variant: Variant::QndHomodyne,
            t: 1.0,
            t_prime: 1.0,
            kappa,
            theta: 0.0,
            outcome: Outcome::Heterodyne { a: a_par, b: b_par },
            corrected: true,
        })
    }
}

/// Finds physical settings realizing `1 + λ₋a + λ₊a†` at transmission `t`.
///
/// * `|λ₋| = |λ₊|`: homodyne detection of `X_θ`. The linear factor is
///   `√2x + Re^{−iθ}a + Re^{iθ}a†`, so only `λ₊ = conj(λ₋)` is reachable, with
///   `θ = arg λ₊` and `x = R/(√2 c)` where `λ₊ = c e^{iθ}`, `c` real. Targets
///   such as `1 + λa − λa†` with real `λ` are rejected as unreachable.
/// * `|λ₋| < |λ₊|`: heterodyne detection with `A* = R/λ₊`, `B* = −λ₋/(2λ₊)`.
/// * `|λ₋| > |λ₊|`: unreachable.
pub fn resolve_gate_settings(lambda_minus: C64, lambda_plus: C64, t: f64) -> Result<GateSpec> {
    if lambda_minus.norm() == 0.0 && lambda_plus.norm() == 0.0 {
        return domain("null gate: both coefficients are zero");
    }
    check_transmission(t)?;
    let r = reflection(t);
    let (m, p) = (lambda_minus.norm(), lambda_plus.norm());
    let scale = m.max(p);
    if m > p * (1.0 + REACH_TOL) + REACH_TOL {
        return Err(Error::Unreachable(format!(
            "|λ₋| = {m} exceeds |λ₊| = {p}; requires |B| ≥ 1/2"
        )));
    }
    if (m - p).abs() <= REACH_TOL * scale {
        if (lambda_plus - lambda_minus.conj()).norm() > 1e-9 * scale {
            return Err(Error::Unreachable(format!(
                "homodyne gates satisfy λ₊ = conj(λ₋); got λ₋ = {lambda_minus}, λ₊ = {lambda_plus}"
            )));
        }
        let mut theta = lambda_plus.arg();
        let mut c = p;
        if theta > std::f64::consts::FRAC_PI_2 {
            theta -= std::f64::consts::PI;
            c = -c;
        } else if theta <= -std::f64::consts::FRAC_PI_2 {
            theta += std::f64::consts::PI;
            c = -c;
        }
        let x = r / (SQRT_2 * c);
        return Ok(GateSpec {
            lambda_minus,
            lambda_plus,
            variant: Variant::BsHomodyne,
            t,
            t_prime: 1.0,
            kappa: 0.0,
            theta,
            outcome: Outcome::Quadrature { x },
            corrected: true,
        });
    }
    let a_conj = cz(r) / lambda_plus;
    let b_conj = -lambda_minus / (lambda_plus * 2.0);
    Ok(GateSpec {
        lambda_minus,
        lambda_plus,
        variant: Variant::BsHeterodyne,
        t,
        t_prime: t,
        kappa: 0.0,
        theta: 0.0,
        outcome: Outcome::Heterodyne {
            a: a_conj.conj(),
            b: b_conj.conj(),
        },
        corrected: true,
    })
}

/// Single-photon purity and QND ancilla options.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AncillaModel {
    pub eta: f64,
    pub squeeze_r: f64,
    pub c1: C64,
}

impl Default for AncillaModel {
    fn default() -> Self {
        Self {
            eta: 1.0,
            squeeze_r: 0.0,
            c1: C64::new(0.0, 0.0),
        }
    }
}

impl AncillaModel {
    pub fn with_eta(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return domain(format!("efficiency {eta} outside [0, 1]"));
        }
        Ok(Self {
            eta,
            ..Self::default()
        })
    }
}

/// Output of a heralded gate.
#[derive(Clone, Debug)]
pub struct GateResult {
    pub state: State,
    /// Success probability for integrated windows, a density otherwise.
    pub success: f64,
    pub attenuation_t: f64,
    pub truncation_tail: f64,
    /// Fidelity with the caller's target, when one was given.
    pub fidelity: Option<f64>,
    /// Gauss–Legendre nodes used for the window, zero for sharp outcomes.
    pub nodes: usize,
}

/// Acceptance window `[x0 − ε, x0 + ε]` around the homodyne outcome.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Window {
    pub x0: f64,
    pub epsilon: f64,
    pub n_points: usize,
}

const WINDOW_REL_TOL: f64 = 1e-6;
const WINDOW_MAX_NODES: usize = 4096;

/// Joint states after the beam splitter for each ancilla branch, reused
/// across every node of a window.
pub(crate) struct WindowBranches {
    one: TwoModeVector,
    vac: Option<TwoModeVector>,
    eta: f64,
    t: f64,
    t_prime: f64,
    theta: f64,
    corrected: bool,
    pub(crate) edge: f64,
}

impl WindowBranches {
    pub(crate) fn new(input: &FockVector, spec: &GateSpec, ancilla: &AncillaModel) -> Result<Self> {
        if spec.variant != Variant::BsHomodyne {
            return domain("window integration is implemented for the beam-splitter homodyne gate");
        }
        if !(0.0..=1.0).contains(&ancilla.eta) {
            return domain(format!("efficiency {} outside [0, 1]", ancilla.eta));
        }
        check_transmission(spec.t)?;
        let dim = input.dim();
        let u = couplings::bs_unitary(spec.t, dim, dim)?;
        let one = u.apply(&TwoModeVector::product(input, &fock::number_state(1, dim)?))?;
        let vac = if ancilla.eta < 1.0 {
            Some(u.apply(&TwoModeVector::product(input, &fock::number_state(0, dim)?))?)
        } else {
            None
        };
        let edge = one.edge_weight(1, 1).max(vac.as_ref().map_or(0.0, |v| v.edge_weight(1, 1)));
        Ok(Self {
            one,
            vac,
            eta: ancilla.eta,
            t: spec.t,
            t_prime: spec.t_prime,
            theta: spec.theta,
            corrected: spec.corrected,
            edge,
        })
    }

    /// Conditional vectors `(|1⟩ branch, |0⟩ branch)` at outcome `x`.
    fn at(&self, x: f64) -> Result<(DVector<C64>, Option<DVector<C64>>)> {
        let (ds, dl) = self.one.dims();
        let bra = fock::quadrature_bra(x, self.theta, dl);
        let contract = |st: &TwoModeVector| {
            let m = st.amplitudes();
            DVector::from_fn(ds, |s, _| {
                (0..dl).fold(C64::new(0.0, 0.0), |acc, l| acc + bra[l] * m[s * dl + l])
            })
        };
        let fix = |v: DVector<C64>| {
            if self.corrected {
                let (c1, c2) = homodyne_error_coeffs(self.t, x, self.theta);
                let w = vecops::exp_lowering(-c1 / self.t, -c2 / (self.t * self.t), &v);
                vecops::attenuate(self.t_prime, &w)
            } else {
                v
            }
        };
        let one = fix(contract(&self.one));
        let vac = self.vac.as_ref().map(|v| fix(contract(v)));
        Ok((one, vac))
    }

    /// `(P, ⟨t|ρ|t⟩)` over the window with `n` nodes.
    fn stats(&self, window: &Window, n: usize, target: Option<&DVector<C64>>) -> Result<(f64, f64)> {
        let mut p = 0.0;
        let mut ov = 0.0;
        for (x, w) in gauss_legendre_on(n, window.x0 - window.epsilon, window.x0 + window.epsilon) {
            let (one, vac) = self.at(x)?;
            p += w * self.eta * one.norm_squared();
            if let Some(t) = target {
                ov += w * self.eta * t.dotc(&one).norm_sqr();
            }
            if let Some(v) = vac {
                p += w * (1.0 - self.eta) * v.norm_squared();
                if let Some(t) = target {
                    ov += w * (1.0 - self.eta) * t.dotc(&v).norm_sqr();
                }
            }
        }
        Ok((p, ov))
    }

    /// Doubles the node count until the probability settles; returns
    /// `(P, F, nodes)`.
    pub(crate) fn converge(&self, window: &Window, target: Option<&FockVector>) -> Result<(f64, Option<f64>, usize)> {
        if !(window.epsilon > 0.0) {
            return domain(format!("window half-width {} must be positive", window.epsilon));
        }
        let t = match target {
            Some(tv) => Some(tv.normalized()?.into_amplitudes()),
            None => None,
        };
        let mut n = window.n_points.max(2);
        let (mut p, mut ov) = self.stats(window, n, t.as_ref())?;
        loop {
            if n >= WINDOW_MAX_NODES {
                break;
            }
            let n2 = 2 * n;
            let (p2, ov2) = self.stats(window, n2, t.as_ref())?;
            let settled = (p2 - p).abs() <= WINDOW_REL_TOL * p2.abs();
            n = n2;
            p = p2;
            ov = ov2;
            if settled {
                break;
            }
        }
        if !(p >= 1e-12) {
            return Err(Error::Degenerate(format!("window success probability {p:.3e}")));
        }
        Ok((p, t.map(|_| (ov / p).clamp(0.0, 1.0)), n))
    }

    fn density(&self, window: &Window, n: usize) -> Result<DensityMatrix> {
        let dim = self.one.dims().0;
        let mut rho = DMatrix::zeros(dim, dim);
        for (x, w) in gauss_legendre_on(n, window.x0 - window.epsilon, window.x0 + window.epsilon) {
            let (one, vac) = self.at(x)?;
            rho += &one * one.adjoint() * cz(w * self.eta);
            if let Some(v) = vac {
                rho += &v * v.adjoint() * cz(w * (1.0 - self.eta));
            }
        }
        Ok(rho)
    }
}

/// Post-selects on homodyne outcomes inside the window, mixing the single
/// photon and vacuum ancilla branches with weights `η` and `1 − η`.
///
/// Each branch is propagated through the exact two-mode beam splitter and
/// projected at every Gauss–Legendre node; the node count doubles from
/// `n_points` until the success probability changes by less than 1e−6
/// relative.
pub fn apply_gate_windowed(
    input: &FockVector,
    spec: &GateSpec,
    ancilla: &AncillaModel,
    window: &Window,
    target: Option<&FockVector>,
) -> Result<GateResult> {
    if let Some(t) = target {
        check_dims(t.dim(), input.dim())?;
    }
    let br = WindowBranches::new(&input.normalized()?, spec, ancilla)?;
    let (p, f, n) = br.converge(window, target)?;
    let rho = br.density(window, n)?;
    let tr = rho.trace().re;
    Ok(GateResult {
        state: State::Mixed(rho / cz(tr)),
        success: p,
        attenuation_t: spec.attenuation_t(),
        truncation_tail: br.edge.max(input.truncation_tail()),
        fidelity: f,
        nodes: n,
    })
}

/// Corrected single-photon and vacuum branch vectors at the sharp outcome.
#[derive(Clone, Debug)]
pub struct SharpBranches {
    pub one: DVector<C64>,
    pub vac: DVector<C64>,
}

impl SharpBranches {
    pub fn new(input: &FockVector, spec: &GateSpec) -> Result<Self> {
        let dim = input.dim();
        let psi = input.amplitudes();
        match (spec.variant, spec.outcome) {
            (Variant::BsHomodyne, Outcome::Quadrature { x }) => {
                check_transmission(spec.t)?;
                let r = reflection(spec.t);
                let psi0 = fock::position_wavefunction(x, 1)[0];
                let lin = vecops::lower(psi) * C64::from_polar(r, -spec.theta)
                    + vecops::raise(psi) * C64::from_polar(r, spec.theta)
                    + psi * cz(SQRT_2 * x);
                let (one, vac) = if spec.corrected {
                    (
                        vecops::attenuate(spec.t_prime * spec.t, &lin) * C64::from_polar(psi0 / spec.t, -spec.theta),
                        vecops::attenuate(spec.t_prime * spec.t, psi) * cz(psi0),
                    )
                } else {
                    (
                        kraus_bs_homodyne(spec.t, x, spec.theta, dim)? * psi,
                        kraus_bs_homodyne_vacuum(spec.t, x, spec.theta, dim)? * psi,
                    )
                };
                Ok(Self { one, vac })
            }
            _ => {
                let k1 = spec.kraus(dim)?;
                let k0 = spec.vacuum_kraus(dim)?;
                if spec.corrected {
                    let c = spec.correction(dim)?;
                    Ok(Self {
                        one: &c * (k1 * psi),
                        vac: &c * (k0 * psi),
                    })
                } else {
                    Ok(Self {
                        one: k1 * psi,
                        vac: k0 * psi,
                    })
                }
            }
        }
    }

    pub fn density(&self, eta: f64) -> DensityMatrix {
        &self.one * self.one.adjoint() * cz(eta) + &self.vac * self.vac.adjoint() * cz(1.0 - eta)
    }

    pub fn weight(&self, eta: f64) -> f64 {
        eta * self.one.norm_squared() + (1.0 - eta) * self.vac.norm_squared()
    }

    /// Fidelity of the normalized mixture with a normalized target.
    pub fn fidelity(&self, eta: f64, target: &DVector<C64>) -> f64 {
        let num = eta * target.dotc(&self.one).norm_sqr() + (1.0 - eta) * target.dotc(&self.vac).norm_sqr();
        (num / self.weight(eta)).clamp(0.0, 1.0)
    }
}

/// Sharp-outcome output for an ancilla that holds a photon with probability
/// `η`, mixing the two branches with weights taken from their actual norms.
pub fn realistic_gate_density(input: &FockVector, spec: &GateSpec, eta: f64) -> Result<GateResult> {
    if !(0.0..=1.0).contains(&eta) {
        return domain(format!("efficiency {eta} outside [0, 1]"));
    }
    let br = SharpBranches::new(&input.normalized()?, spec)?;
    let w = br.weight(eta);
    if !(w >= 1e-300) {
        return Err(Error::Degenerate(format!("branch weight {w:.3e}")));
    }
    let rho = br.density(eta) / cz(w);
    let edge = rho.diagonal().iter().rev().take(1).map(|c| c.re).sum::<f64>();
    Ok(GateResult {
        state: State::Mixed(rho),
        success: w,
        attenuation_t: spec.attenuation_t(),
        truncation_tail: edge.max(input.truncation_tail()),
        fidelity: None,
        nodes: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn ideal_gate_examples() {
        let dim = 8;
        let id = ideal_gate_operator(c(0.0, 0.0), c(0.0, 0.0), dim);
        assert_eq!(id, DMatrix::identity(dim, dim));
        let l = c(0.7, 0.0);
        let g = ideal_gate_operator(l, l, dim);
        let xg = DMatrix::identity(dim, dim) + fock::quadrature(0.0, dim) * (l * SQRT_2);
        assert!((g - xg).norm() < 1e-14);
        let g = ideal_gate_operator(c(1.5, 0.0), c(-1.5, 0.0), dim);
        let out = g * fock::number_state(1, dim).unwrap().amplitudes();
        assert!((out[0] - c(1.5, 0.0)).norm() < 1e-14);
        assert!((out[1] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((out[2] - c(-1.5 * SQRT_2, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn homodyne_limits() {
        let dim = 10;
        let k = kraus_bs_homodyne(0.9999, 0.8, 0.3, dim).unwrap();
        let psi0 = fock::position_wavefunction(0.8, 1)[0];
        let id = DMatrix::<C64>::identity(dim, dim) * C64::from_polar(SQRT_2 * 0.8 * psi0, -0.3);
        // Upper-left block, where T^n̂ is still close to 1.
        let diff = (k - id).view((0, 0), (4, 4)).norm();
        assert!(diff < 0.05, "{diff}");
        let th = std::f64::consts::FRAC_PI_2;
        let k = correction_homodyne_ideal(0.7, 1.0, 0.4, th, dim).unwrap()
            * kraus_bs_homodyne(0.7, 0.4, th, dim).unwrap();
        // Linear factor √2x + R(e^{−iθ}a + e^{iθ}a†): a/a† coefficient ratio e^{−2iθ} = −1.
        let lin_a = k[(0, 1)];
        let lin_ad = k[(1, 0)] / cz(0.7);
        assert!((lin_a / lin_ad - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn heterodyne_read_offs() {
        let dim = 8;
        let t = 0.8;
        let r = 0.6;
        let k = kraus_bs_heterodyne(t, c(0.0, 0.0), c(0.0, 0.0), dim).unwrap();
        let (_, a_dag) = fock::ladder(dim);
        let want = fock::attenuation(t, dim) * a_dag * cz(r / t);
        assert!((k - want).norm() < 1e-14);
        assert!(kraus_bs_heterodyne(t, c(0.0, 0.0), c(0.5, 0.0), dim).is_err());
        let corr = correction_bs(0.7, c(0.0, 0.0), c(0.0, 0.0), dim).unwrap();
        assert!((corr - fock::attenuation(0.7, dim)).norm() < 1e-15);
    }

    #[test]
    fn resolve_homodyne_and_heterodyne() {
        let s = resolve_gate_settings(c(1.5, 0.0), c(1.5, 0.0), 0.8).unwrap();
        assert_eq!(s.variant, Variant::BsHomodyne);
        assert!(s.theta.abs() < 1e-15);
        let x = s.homodyne_x().unwrap();
        assert!((x - 0.6 / (SQRT_2 * 1.5)).abs() < 1e-15);
        let s = resolve_gate_settings(c(0.0, -1.5), c(0.0, 1.5), 0.8).unwrap();
        assert!((s.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let s = resolve_gate_settings(c(0.0, 0.0), c(0.4, 0.3), 0.8).unwrap();
        assert_eq!(s.variant, Variant::BsHeterodyne);
        match s.outcome {
            Outcome::Heterodyne { b, .. } => assert_eq!(b.norm(), 0.0),
            _ => panic!(),
        }
        assert!(matches!(
            resolve_gate_settings(c(-1.5, 0.0), c(1.5, 0.0), 0.8),
            Err(Error::Unreachable(_))
        ));
        assert!(matches!(
            resolve_gate_settings(c(2.0, 0.0), c(1.0, 0.0), 0.8),
            Err(Error::Unreachable(_))
        ));
        assert!(matches!(
            resolve_gate_settings(c(0.0, 0.0), c(0.0, 0.0), 0.8),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn resolved_settings_realize_target() {
        let dim = 12;
        let cases = [
            (c(1.5, 0.0), c(1.5, 0.0)),
            (c(0.0, -1.5), c(0.0, 1.5)),
            (c(-0.4, 0.9), c(-0.4, -0.9)),
            (c(0.3, 0.2), c(-0.9, 0.5)),
            (c(0.0, 0.0), c(0.7, 0.0)),
        ];
        for (lm, lp) in cases {
            let s = resolve_gate_settings(lm, lp, 0.6).unwrap();
            let k = s.correction(dim).unwrap() * s.kraus(dim).unwrap();
            let want = fock::attenuation(s.attenuation_t(), dim) * ideal_gate_operator(lm, lp, dim);
            // Compare up to a scalar on the interior block.
            let scale = k[(0, 0)] / want[(0, 0)];
            let d = (&k - &want * scale).view((0, 0), (dim - 1, dim - 1)).norm();
            assert!(d < 1e-10 * k.norm(), "{lm} {lp} {d}");
        }
    }

    #[test]
    fn qnd_read_offs() {
        let dim = 12;
        let k = qnd_gate(0.5, c(0.0, 0.0), c(0.0, 0.0), dim).unwrap();
        let x = fock::quadrature(0.0, dim);
        assert!((&k * &x - &x * &k).norm() < 1e-12);
        let want = function_of_x(dim, |y| cz((-0.25 * 0.25 * y * y).exp() * y * -0.5 * FRAC_1_SQRT_2));
        assert!((k - want).norm() < 1e-12);
        let corr = qnd_correction(0.5, c(0.0, 0.0), c(0.0, 0.0), 0.0, dim).unwrap();
        let want = function_of_x(dim, |y| cz((-0.25 * 0.25 * y * y).exp()));
        assert!((corr - &want).norm() < 1e-12);
        let pc = qnd_photon_counting(0.5, c(0.0, 0.0), dim);
        assert!((pc - want).norm() < 1e-12);
    }

    #[test]
    fn realistic_limits() {
        let dim = 30;
        let spec = resolve_gate_settings(c(1.5, 0.0), c(1.5, 0.0), 0.6).unwrap();
        let psi = fock::number_state(1, dim).unwrap();
        let r1 = realistic_gate_density(&psi, &spec, 1.0).unwrap();
        let ideal = FockVector::new(ideal_gate_operator(c(1.5, 0.0), c(1.5, 0.0), dim) * psi.amplitudes())
            .unwrap()
            .apply(&fock::attenuation(0.6, dim))
            .unwrap();
        assert!((fock::fidelity(&r1.state, &ideal).unwrap() - 1.0).abs() < 1e-12);
        let r0 = realistic_gate_density(&psi, &spec, 0.0).unwrap();
        assert!((fock::fidelity(&r0.state, &psi).unwrap() - 1.0).abs() < 1e-12);
    }
}
