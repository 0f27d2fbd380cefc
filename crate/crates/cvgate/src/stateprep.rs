//! State preparation from the vacuum with polynomials of `a†` or `X`.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::fock::{self, FockVector, State, TruncationGuard};
use crate::poly;
use crate::synthesis::{self, DecompositionPlan};
use crate::xgate::{self, GateResult};

const MAX_HERMITE: usize = 20;
const MAX_CAT_NMAX: usize = 30;

/// Integer coefficients of the physicists' Hermite polynomials `H_0..H_n`.
fn hermite_table(n: usize) -> Vec<Vec<i128>> {
    let mut h: Vec<Vec<i128>> = vec![vec![1]];
    if n >= 1 {
        h.push(vec![0, 2]);
    }
    for k in 1..n {
        // H_{k+1} = 2x H_k − 2k H_{k−1}
        let mut next = vec![0i128; k + 2];
        for (i, &c) in h[k].iter().enumerate() {
            next[i + 1] += 2 * c;
        }
        for (i, &c) in h[k - 1].iter().enumerate() {
            next[i] -= 2 * k as i128 * c;
        }
        h.push(next);
    }
    h
}

/// Monomial coefficients of `G(x) = Σ c_n H_n(x)/√(2ⁿ n!)`, so that
/// `G(X)|0⟩ = Σ c_n |n⟩`.
///
/// Hermite coefficients are built exactly in integers; each basis
/// polynomial is converted to floating point once.
pub fn wavefunction_to_x_polynomial(c: &[C64]) -> Result<Vec<C64>> {
    if c.is_empty() {
        return domain("empty coefficient list");
    }
    let n = c.len() - 1;
    if n > MAX_HERMITE {
        return domain(format!("degree {n} exceeds {MAX_HERMITE}"));
    }
    let h = hermite_table(n);
    let mut out = vec![C64::new(0.0, 0.0); n + 1];
    let mut norm = 1.0f64;
    for (k, hk) in h.iter().enumerate() {
        if k > 0 {
            norm *= (2.0 * k as f64).sqrt();
        }
        for (i, &coef) in hk.iter().enumerate() {
            out[i] += c[k] * (coef as f64 / norm);
        }
    }
    Ok(out)
}

/// `G(X)|0⟩`; exact in the truncated space while `deg G < dim`.
pub fn x_polynomial_on_vacuum(g: &[C64], dim: usize) -> Result<FockVector> {
    if g.len() > dim {
        return Err(Error::Truncation(format!(
            "polynomial of degree {} needs dimension above {dim}",
            g.len() - 1
        )));
    }
    let vac = fock::number_state(0, dim)?;
    FockVector::new(poly::apply_to_vector(g, &fock::quadrature(0.0, dim), vac.amplitudes()))
}

/// Normalized polynomial `N Σ_{n even ≤ n_max} 2(βa†)ⁿ/n!` in powers of
/// `a†`, whose action on the vacuum approximates the even cat state.
pub fn cat_polynomial(beta: f64, n_max: usize) -> Result<Vec<C64>> {
    parity_cat_polynomial(beta, n_max, Parity::Even)
}

/// Same construction keeping only terms of the given parity.
pub fn parity_cat_polynomial(beta: f64, n_max: usize, parity: Parity) -> Result<Vec<C64>> {
    if !(beta > 0.0 && beta.is_finite()) {
        return domain(format!("cat amplitude {beta} must be positive"));
    }
    if n_max % 2 != parity.residue() || n_max > MAX_CAT_NMAX {
        return domain(format!(
            "n_max = {n_max} must be {parity} and at most {MAX_CAT_NMAX}"
        ));
    }
    let mut p = vec![C64::new(0.0, 0.0); n_max + 1];
    let mut term = 1.0; // βⁿ/n!
    let mut norm2 = 0.0; // Σ |p_n|² n!
    let mut fact = 1.0;
    for (n, slot) in p.iter_mut().enumerate() {
        if n > 0 {
            term *= beta / n as f64;
            fact *= n as f64;
        }
        if n % 2 == parity.residue() {
            *slot = C64::new(2.0 * term, 0.0);
            norm2 += 4.0 * term * term * fact;
        }
    }
    let s = 1.0 / norm2.sqrt();
    Ok(p.into_iter().map(|c| c * s).collect())
}

/// `Σ p_k a†^k |0⟩`.
pub fn apply_creation_polynomial(p: &[C64], dim: usize) -> Result<FockVector> {
    if p.len() > dim {
        return Err(Error::Truncation(format!(
            "polynomial of degree {} needs dimension above {dim}",
            p.len() - 1
        )));
    }
    let mut sf = 1.0;
    let amps = DVector::from_fn(dim, |n, _| {
        if n > 0 {
            sf *= (n as f64).sqrt();
        }
        p.get(n).copied().unwrap_or_default() * sf
    });
    FockVector::new(amps)
}

/// Exact even cat `N_c(|β⟩ + |−β⟩)` with `N_c = (2 + 2e^{−2β²})^{−1/2}`.
pub fn even_cat(beta: f64, dim: usize) -> Result<FockVector> {
    exact_cat(beta, Parity::Even, dim)
}

/// `N(|β⟩ ± |−β⟩)`, the sign set by the parity.
pub fn exact_cat(beta: f64, parity: Parity, dim: usize) -> Result<FockVector> {
    let b = C64::new(beta, 0.0);
    let plus = fock::coherent_state(b, dim)?;
    let minus = fock::coherent_state(-b, dim)?;
    TruncationGuard::default().check_tail(plus.truncation_tail())?;
    let (sign, overlap) = match parity {
        Parity::Even => (1.0, 1.0),
        Parity::Odd => (-1.0, -1.0),
    };
    let nc = (2.0 + 2.0 * overlap * (-2.0 * beta * beta).exp()).powf(-0.5);
    FockVector::new((plus.amplitudes() + minus.amplitudes() * C64::new(sign, 0.0)) * C64::new(nc, 0.0))
}

/// Fidelity of the truncated polynomial state with the exact even cat.
pub fn cat_fidelity(beta: f64, n_max: usize, dim: usize) -> Result<f64> {
    let need = n_max as f64 + 4.0 * beta * beta + 20.0;
    if (dim as f64) < need {
        return Err(Error::Truncation(format!(
            "dimension {dim} below n_max + 4β² + 20 = {need}"
        )));
    }
    let approx = apply_creation_polynomial(&cat_polynomial(beta, n_max)?, dim)?;
    fock::fidelity_pure(&approx, &even_cat(beta, dim)?)
}

/// Photon-number parity of a cat state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn residue(self) -> usize {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// What to prepare from the vacuum.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TargetKind {
    /// Fock amplitudes `c_n`.
    FockCoefficients { c: Vec<C64> },
    /// Monomial coefficients of `G` with the state `G(X)|0⟩`.
    WavefunctionPolynomial { g: Vec<C64> },
    Cat { beta: f64, parity: Parity },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TargetState {
    pub kind: TargetKind,
    pub n_max: usize,
    pub dim: usize,
}

impl TargetState {
    pub fn new(kind: TargetKind, n_max: usize, dim: usize) -> Result<Self> {
        if n_max >= dim {
            return domain(format!("n_max = {n_max} must be below dim = {dim}"));
        }
        let degree = match &kind {
            TargetKind::FockCoefficients { c } => c.len(),
            TargetKind::WavefunctionPolynomial { g } => g.len(),
            TargetKind::Cat { .. } => 1,
        };
        if degree == 0 || degree - 1 > n_max {
            return domain("coefficient list must be nonempty with degree at most n_max");
        }
        Ok(Self { kind, n_max, dim })
    }

    /// The ideal state, normalized.
    pub fn ideal(&self) -> Result<FockVector> {
        match &self.kind {
            TargetKind::FockCoefficients { c } => {
                let v = DVector::from_fn(self.dim, |n, _| c.get(n).copied().unwrap_or_default());
                FockVector::new(v)?.normalized()
            }
            TargetKind::WavefunctionPolynomial { g } => {
                x_polynomial_on_vacuum(g, self.dim)?.normalized()
            }
            TargetKind::Cat { beta, parity } => exact_cat(*beta, *parity, self.dim),
        }
    }

    /// The state built from a polynomial of degree `n_max` acting on the
    /// vacuum.
    pub fn truncated(&self) -> Result<FockVector> {
        match &self.kind {
            TargetKind::FockCoefficients { c } => {
                x_polynomial_on_vacuum(&wavefunction_to_x_polynomial(c)?, self.dim)?.normalized()
            }
            TargetKind::WavefunctionPolynomial { .. } => self.ideal(),
            TargetKind::Cat { beta, parity } => {
                let n = if self.n_max % 2 == parity.residue() { self.n_max } else { self.n_max - 1 };
                apply_creation_polynomial(&parity_cat_polynomial(*beta, n, *parity)?, self.dim)
            }
        }
    }
}

/// Output of a gate sequence built from a polynomial of `a†`.
#[derive(Clone, Debug)]
pub struct SequenceResult {
    pub result: GateResult,
    pub plan: DecompositionPlan,
    /// Distance of the normalized output from the normalized direct
    /// polynomial applied to the vacuum.
    pub direct_distance: f64,
}

/// Builds `p(a†)|0⟩` with corrected beam-splitter gates `1 + μa†`.
///
/// The polynomial is factored as `p₀ Π(1 + λ_i a†)`. Step `i` runs at
/// transmission `T_i` and leaves attenuation `S_i = T_i²`; requesting
/// `μ_i = λ_i/𝕊_i` with `𝕊_i = Π_{j≤i} S_j` moves all attenuation onto the
/// vacuum input, where it does nothing. Step `N` is applied first.
pub fn prepare_via_gate_sequence(p: &[C64], per_step_t: &[f64], dim: usize) -> Result<SequenceResult> {
    let plan = synthesis::factor_poly(p)?.with_steps(per_step_t)?;
    if per_step_t.iter().any(|&t| t >= 1.0) {
        return domain("per-step transmissions must lie in (0, 1)");
    }
    let direct = apply_creation_polynomial(poly::trim(p), dim)?;
    let mut cum = Vec::with_capacity(plan.roots.len());
    let mut s = 1.0;
    for &t in &plan.step_t {
        s *= t * t;
        cum.push(s);
    }
    let mut v = fock::number_state(0, dim)?.into_amplitudes();
    for i in (0..plan.roots.len()).rev() {
        let mu = plan.roots[i] / cum[i];
        let spec = xgate::resolve_gate_settings(C64::new(0.0, 0.0), mu, plan.step_t[i])?;
        v = spec.correction(dim)? * (spec.kraus(dim)? * v);
    }
    let out = FockVector::new(v)?;
    let weight = out.norm_sqr();
    let state = out.normalized()?;
    let direct = direct.normalized()?;
    let ov = direct.amplitudes().dotc(state.amplitudes());
    let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { C64::new(1.0, 0.0) };
    let direct_distance = (state.amplitudes() - direct.amplitudes() * phase).norm();
    let tail = state.truncation_tail();
    Ok(SequenceResult {
        result: GateResult {
            state: State::Pure(state),
            success: weight,
            attenuation_t: s,
            truncation_tail: tail,
            fidelity: None,
            nodes: 0,
        },
        plan,
        direct_distance,
    })
}

/// One bar of the cat-fidelity figure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatPoint {
    pub beta: f64,
    pub n_max: usize,
    pub fidelity: f64,
}

/// Fidelities for every `(β, n_max)` pair at a dimension large enough for
/// both.
pub fn cat_table(betas: &[f64], n_maxes: &[usize]) -> Result<Vec<CatPoint>> {
    let mut out = Vec::new();
    for &beta in betas {
        for &n_max in n_maxes {
            let dim = (n_max as f64 + 4.0 * beta * beta + 20.0).ceil() as usize + 10;
            out.push(CatPoint {
                beta,
                n_max,
                fidelity: cat_fidelity(beta, n_max, dim)?,
            });
        }
    }
    Ok(out)
}
