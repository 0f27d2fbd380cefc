//! Decomposition of nonlinear potentials into sequences of X-gates.
//!
//! `exp[−iV(x)τ]` is truncated to a Taylor polynomial, factored into
//! `scale · Π(1 + λ_k x)`, and each factor becomes one gate. Attenuation from
//! the individual steps can be pushed to the input, where it acts once.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::couplings::{self, TwoModeVector};
use crate::error::{domain, Error, Result};
use crate::fock::{self, FockVector, ModeOperator};
use crate::poly;
use crate::xgate;

const MAX_ORDER: usize = 24;

/// Potential `V(x) = Σ v_k x^k` acting for time `τ`, expanded to order `N`
/// around `X̄`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialSpec {
    pub coefficients: Vec<f64>,
    pub tau: f64,
    pub mean_x: f64,
    pub order: usize,
}

/// Factored gate sequence `scale · Π(1 + λ_k X)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionPlan {
    pub roots: Vec<C64>,
    pub step_t: Vec<f64>,
    pub cumulative_t: f64,
    pub scale: C64,
    /// `‖expand(plan) − p‖ / ‖p‖` for the factored polynomial `p`.
    pub residual: f64,
}

impl DecompositionPlan {
    fn identity() -> Self {
        Self {
            roots: Vec::new(),
            step_t: Vec::new(),
            cumulative_t: 1.0,
            scale: C64::new(1.0, 0.0),
            residual: 0.0,
        }
    }

    /// Coefficients of `scale · Π(1 + λ_k x)`.
    pub fn expand(&self) -> Vec<C64> {
        poly::from_factors(self.scale, &self.roots)
    }

    /// Assigns per-step transmissions.
    pub fn with_steps(mut self, step_t: &[f64]) -> Result<Self> {
        if step_t.len() != self.roots.len() {
            return domain(format!(
                "{} transmissions for {} gates",
                step_t.len(),
                self.roots.len()
            ));
        }
        if let Some(t) = step_t.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return domain(format!("transmission {t} outside (0, 1]"));
        }
        self.step_t = step_t.to_vec();
        self.cumulative_t = step_t.iter().product();
        Ok(self)
    }

    /// `Π(1 + λ_k X)` as a matrix, without the scale.
    pub fn operator(&self, dim: usize) -> ModeOperator {
        let x = fock::quadrature(0.0, dim);
        let id = DMatrix::<C64>::identity(dim, dim);
        self.roots
            .iter()
            .fold(id.clone(), |acc, &l| acc * (&id + &x * l))
    }
}

/// `Σ c_k (x − s)^k` re-expanded in powers of `x`.
fn shift(c: &[C64], s: f64) -> Vec<C64> {
    let n = c.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    // Horner in the shifted variable: acc ← acc·(x − s) + c_k.
    for &ck in c.iter().rev() {
        let mut next = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            if i + 1 < n {
                next[i + 1] += out[i];
            }
            next[i] -= out[i] * s;
        }
        next[0] += ck;
        out = next;
    }
    out
}

/// Taylor coefficients of `exp[−iV(x)τ]` to order `N` around `X̄`,
/// re-expanded in powers of `x`.
///
/// `V` is shifted to the expansion point, and the exponential series is
/// composed with `E' = g'E`, which is exact to rounding at these orders.
pub fn taylor_unitary_coeffs(spec: &PotentialSpec) -> Result<Vec<C64>> {
    if spec.order < 1 || spec.order > MAX_ORDER {
        return domain(format!("order {} outside [1, {MAX_ORDER}]", spec.order));
    }
    if !spec.tau.is_finite() || !spec.mean_x.is_finite() || spec.coefficients.iter().any(|c| !c.is_finite()) {
        return domain("potential parameters must be finite");
    }
    let n = spec.order;
    let v: Vec<C64> = spec.coefficients.iter().map(|&c| C64::new(c, 0.0)).collect();
    // V(X̄ + y) in powers of y.
    let vy = if v.is_empty() { vec![C64::new(0.0, 0.0)] } else { shift(&v, -spec.mean_x) };
    let g: Vec<C64> = (0..=n)
        .map(|k| vy.get(k).copied().unwrap_or_default() * C64::new(0.0, -spec.tau))
        .collect();
    let mut e = vec![C64::new(0.0, 0.0); n + 1];
    e[0] = g[0].exp();
    for k in 1..=n {
        let s = (1..=k).fold(C64::new(0.0, 0.0), |acc, j| acc + g[j] * e[k - j] * j as f64);
        e[k] = s / k as f64;
    }
    Ok(shift(&e, spec.mean_x))
}

/// `(|λ| quantized, arg λ)` so that conjugate pairs and equal-magnitude
/// roots sort by phase.
fn root_key(l: &C64) -> (i64, f64) {
    ((l.norm() * 1e9).round() as i64, l.arg())
}

fn sort_roots(roots: &mut [C64]) {
    roots.sort_by(|a, b| {
        let (ma, pa) = root_key(a);
        let (mb, pb) = root_key(b);
        ma.cmp(&mb).then(pa.total_cmp(&pb))
    });
}

/// Factors `Σ c_k x^k = c₀ Π(1 + λ_k x)` with `λ_k = −1/r_k` for the roots
/// `r_k`, ordered by magnitude and then phase.
pub fn factor_poly(coeffs: &[C64]) -> Result<DecompositionPlan> {
    let p = poly::trim(coeffs);
    if p.len() < 2 {
        return domain("polynomial must have degree at least 1");
    }
    if p[0].norm() == 0.0 {
        return domain("constant term is zero: a pure X factor has no gate realization");
    }
    let roots = poly::roots(p)?;
    if roots.iter().any(|r| r.norm() == 0.0) {
        return domain("polynomial has a root at zero");
    }
    let mut lambdas: Vec<C64> = roots.iter().map(|r| -r.inv()).collect();
    sort_roots(&mut lambdas);
    let scale = p[0];
    let back = poly::from_factors(scale, &lambdas);
    let num = p.iter().zip(&back).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let den = p.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let n = lambdas.len();
    Ok(DecompositionPlan {
        roots: lambdas,
        step_t: vec![1.0; n],
        cumulative_t: 1.0,
        scale,
        residual: num / den,
    })
}

/// `1 + iχx³ − χ²x⁶/2`, the second-order expansion of `exp[iχx³]`.
pub fn cubic_polynomial(chi: f64) -> Vec<C64> {
    let mut p = vec![C64::new(0.0, 0.0); 7];
    p[0] = C64::new(1.0, 0.0);
    p[3] = C64::new(0.0, chi);
    p[6] = C64::new(-chi * chi / 2.0, 0.0);
    p
}

/// Six-gate plan for the cubic phase gate.
pub fn cubic_plan(chi: f64) -> Result<DecompositionPlan> {
    if !(chi.abs() <= 1.0) {
        return domain(format!("cubic strength {chi} outside [-1, 1]"));
    }
    if chi == 0.0 {
        return Ok(DecompositionPlan::identity());
    }
    factor_poly(&cubic_polynomial(chi))
}

/// Gate coefficients of the cubic plan from the roots of the quadratic in
/// `u = x³`: `λ³ = χ/(1−i)` or `λ³ = χ/(−1−i)`, each with its three cube
/// roots.
pub fn cubic_closed_form(chi: f64) -> Vec<C64> {
    let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
    let mut out: Vec<C64> = [
        C64::new(chi, 0.0) / C64::new(1.0, -1.0),
        C64::new(chi, 0.0) / C64::new(-1.0, -1.0),
    ]
    .iter()
    .flat_map(|z| {
        let r = z.powf(1.0 / 3.0);
        [r, r * w, r * w * w]
    })
    .collect();
    sort_roots(&mut out);
    out
}

/// The six coefficients in the widely quoted radical form, evaluated with
/// principal branches: `−(χ/(−1+i))^{1/3}`, `(χ/(1−i))^{1/3}`,
/// `−(−1)^{−2/3}(χ/(−1+i))^{1/3}`, `−(χ/(1+i))^{1/3}`, `(χ/(−1−i))^{1/3}`,
/// `−(−1)^{−2/3}(χ/(1+i))^{1/3}`.
pub fn cubic_radical_forms(chi: f64) -> Vec<C64> {
    let c = C64::new(chi, 0.0);
    let cr = |z: C64| z.powf(1.0 / 3.0);
    let m23 = C64::new(-1.0, 0.0).powf(-2.0 / 3.0);
    let mut out = vec![
        -cr(c / C64::new(-1.0, 1.0)),
        cr(c / C64::new(1.0, -1.0)),
        -m23 * cr(c / C64::new(-1.0, 1.0)),
        -cr(c / C64::new(1.0, 1.0)),
        cr(c / C64::new(-1.0, -1.0)),
        -m23 * cr(c / C64::new(1.0, 1.0)),
    ];
    sort_roots(&mut out);
    out
}

/// Largest distance from each element of `a` to its partner in `b` under
/// greedy nearest matching; infinite when lengths differ.
pub fn set_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .fold((usize::MAX, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Comparison of the computed cubic plan with closed forms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CubicCheck {
    pub plan: DecompositionPlan,
    pub closed_form_distance: f64,
    pub radical_forms_distance: f64,
}

pub fn cubic_check(chi: f64) -> Result<CubicCheck> {
    let plan = cubic_plan(chi)?;
    let closed_form_distance = if chi == 0.0 { 0.0 } else { set_distance(&plan.roots, &cubic_closed_form(chi)) };
    let radical_forms_distance = if chi == 0.0 {
        0.0
    } else {
        set_distance(&plan.roots, &cubic_radical_forms(chi))
    };
    Ok(CubicCheck {
        plan,
        closed_form_distance,
        radical_forms_distance,
    })
}

/// Step-by-step product and its collapsed form.
#[derive(Clone, Debug)]
pub struct Schedule {
    /// `Π_i T_i^n̂ (1 + λ_i(𝕋_i a + 𝕋_i⁻¹ a†)/√2)`, `i = 1` leftmost.
    pub literal: ModeOperator,
    /// `[Π_i (1 + λ_i X)] 𝕋_N^n̂`.
    pub collapsed: ModeOperator,
    pub distance: f64,
}

/// Realizes each gate with pre-scaled coefficients so that the attenuation
/// of every step can be commuted to the input, where it acts once as
/// `𝕋_N^n̂` with `𝕋_i = Π_{j≤i} T_j`.
pub fn schedule_attenuation(plan: &DecompositionPlan, per_step_t: &[f64], dim: usize) -> Result<Schedule> {
    let plan = plan.clone().with_steps(per_step_t)?;
    let (a, a_dag) = fock::ladder(dim);
    let id = DMatrix::<C64>::identity(dim, dim);
    let mut literal = id.clone();
    let mut cum = 1.0;
    for (&l, &t) in plan.roots.iter().zip(&plan.step_t) {
        cum *= t;
        let step = fock::attenuation(t, dim) * (&id + (&a * C64::new(cum, 0.0) + &a_dag * C64::new(1.0 / cum, 0.0)) * (l * FRAC_1_SQRT_2));
        literal *= step;
    }
    let collapsed = plan.operator(dim) * fock::attenuation(plan.cumulative_t, dim);
    let distance = (&literal - &collapsed).norm();
    Ok(Schedule {
        literal,
        collapsed,
        distance,
    })
}

/// Ancilla `f(X_L)` applied to `(squeezed) vacuum` with `f(y) = F(−y/κ)`,
/// normalized at the smallest dimension whose tail is below the guard.
fn single_shot_ancilla(f_coeffs: &[C64], kappa: f64, squeeze_r: f64, min_dim: usize) -> Result<FockVector> {
    let f: Vec<C64> = f_coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| c * (-1.0 / kappa).powi(k as i32))
        .collect();
    let deg = f.len();
    let guard = fock::TruncationGuard::default();
    let mut dim = min_dim.max(deg + 8);
    loop {
        let big = dim + deg + 2;
        let vac = fock::squeezed_vacuum(C64::new(-squeeze_r, 0.0), big)?;
        let v = poly::apply_to_vector(&f, &fock::quadrature(0.0, big), vac.amplitudes());
        let total = v.norm_squared();
        if !(total > 0.0) {
            return Err(Error::Degenerate("ancilla polynomial annihilates the vacuum".into()));
        }
        let tail = v.rows(dim, big - dim).norm_squared() / total;
        if guard.check_tail(tail).is_ok() {
            return FockVector::new(v.rows(0, dim).into_owned())?.normalized();
        }
        if dim > 400 {
            guard.check_tail(tail)?;
        }
        dim += 20;
    }
}

/// Effective system operator `⟨x₀ = 0|U_QND f(X_L)|anc⟩` for a polynomial
/// `F`, where the ancilla is prepared as `f(X_L)` on a vacuum squeezed so it
/// is `∝ exp[(tanh r/2) b†²]|0⟩`.
///
/// The result is `∝ F(X) exp[−e^{−2r} κ²X²/2]`, which reduces to
/// `F(X)e^{−κ²X²/2}` for an unsqueezed ancilla. The scale is physical: the
/// squared norm of the output is the outcome density at `x₀ = 0`.
pub fn single_shot_operator(f_coeffs: &[C64], kappa: f64, squeeze_r: f64, dim: usize) -> Result<ModeOperator> {
    if !(kappa != 0.0 && kappa.is_finite()) {
        return domain("coupling strength must be finite and nonzero");
    }
    if !(squeeze_r >= 0.0 && squeeze_r.is_finite()) {
        return domain(format!("squeeze parameter {squeeze_r} must be finite and non-negative"));
    }
    if poly::trim(f_coeffs).is_empty() {
        return domain("empty polynomial");
    }
    // The ancilla is displaced by up to κ·max|x| of the truncated system.
    let xmax = (2.0 * dim as f64).sqrt() + 1.0;
    let shift = (kappa.abs() * xmax).powi(2);
    let min_dim = (2.0 * dim as f64).max(shift + 12.0 * shift.sqrt() + 40.0) as usize;
    let anc = single_shot_ancilla(f_coeffs, kappa, squeeze_r, min_dim)?;
    let dl = anc.dim();
    let u = couplings::qnd_unitary(kappa, dim, dl)?;
    let bra = fock::position_wavefunction(0.0, dl).map(|r| C64::new(r, 0.0));
    let mut k = DMatrix::<C64>::zeros(dim, dim);
    for n in 0..dim {
        let out = u.apply(&TwoModeVector::product(&fock::number_state(n, dim)?, &anc))?;
        let m = out.amplitudes();
        for s in 0..dim {
            k[(s, n)] = (0..dl).fold(C64::new(0.0, 0.0), |acc, l| acc + bra[l] * m[s * dl + l]);
        }
    }
    Ok(k)
}

/// `F(X) exp[−w κ²X²/2]` in the eigenbasis of the truncated `X`, with
/// `w = e^{−2r}`.
pub fn single_shot_target(f_coeffs: &[C64], kappa: f64, squeeze_r: f64, dim: usize) -> ModeOperator {
    let w = (-2.0 * squeeze_r).exp();
    xgate::function_of_x(dim, |x| {
        poly::eval(f_coeffs, C64::new(x, 0.0)) * (-w * kappa * kappa * x * x / 2.0).exp()
    })
}

/// Relative distance `‖A − cB‖/‖A‖` after the best complex scalar `c`.
pub fn proportional_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let bb = b.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let ab = b.iter().zip(a.iter()).fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y);
    let c = if bb > 0.0 { ab / bb } else { C64::new(0.0, 0.0) };
    (a - b * c).norm() / a.norm()
}

/// Same as [`proportional_distance`] for vectors.
pub fn proportional_distance_vec(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    let bb = b.norm_squared();
    let c = if bb > 0.0 { b.dotc(a) / bb } else { C64::new(0.0, 0.0) };
    (a - b * c).norm() / a.norm()
}
