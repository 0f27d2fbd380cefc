//! States and operators of one bosonic mode in a truncated Fock basis.
//!
//! Every state constructor records the probability weight that fell outside
//! the truncated space before renormalization, so callers can decide whether
//! the truncation is acceptable.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

/// Dense operator on one truncated mode.
pub type ModeOperator = DMatrix<C64>;
/// Dense density matrix on one truncated mode.
pub type DensityMatrix = DMatrix<C64>;

pub const DEFAULT_DIM: usize = 50;
/// Tail weight above which a constructed state carries a warning flag.
pub const TAIL_WARNING: f64 = 1e-10;

const NORM_TOL: f64 = 1e-12;

/// Amplitudes over `|0⟩..|dim-1⟩` together with the weight lost to truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    amps: DVector<C64>,
    tail: f64,
}

impl FockVector {
    pub fn new(amps: DVector<C64>) -> Result<Self> {
        if amps.len() < 2 {
            return domain(format!("dimension {} is below 2", amps.len()));
        }
        Ok(Self { amps, tail: 0.0 })
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(amps))
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(DVector::from_iterator(
            amps.len(),
            amps.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    pub(crate) fn with_tail(mut self, tail: f64) -> Self {
        self.tail = tail;
        self
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.amps.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Degenerate("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            amps: self.amps.unscale(n),
            tail: self.tail,
        })
    }

    /// Weight carried by the top `k` basis states.
    pub fn tail_weight(&self, k: usize) -> f64 {
        let d = self.dim();
        let k = k.min(d);
        self.amps.iter().skip(d - k).map(|c| c.norm_sqr()).sum()
    }

    /// Weight discarded when the state was truncated to `dim` levels.
    pub fn truncation_tail(&self) -> f64 {
        self.tail
    }

    pub fn truncation_warning(&self) -> bool {
        self.tail > TAIL_WARNING
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn apply(&self, op: &ModeOperator) -> Result<FockVector> {
        check_dims(self.dim(), op.ncols())?;
        Ok(Self {
            amps: op * &self.amps,
            tail: self.tail,
        })
    }

    pub fn density(&self) -> DensityMatrix {
        &self.amps * self.amps.adjoint()
    }
}

/// A pure or mixed single-mode state.
#[derive(Clone, Debug)]
pub enum State {
    Pure(FockVector),
    Mixed(DensityMatrix),
}

impl State {
    pub fn dim(&self) -> usize {
        match self {
            State::Pure(v) => v.dim(),
            State::Mixed(r) => r.nrows(),
        }
    }

    pub fn density(&self) -> DensityMatrix {
        match self {
            State::Pure(v) => v.density(),
            State::Mixed(r) => r.clone(),
        }
    }
}

impl From<FockVector> for State {
    fn from(v: FockVector) -> Self {
        State::Pure(v)
    }
}

impl From<DensityMatrix> for State {
    fn from(r: DensityMatrix) -> Self {
        State::Mixed(r)
    }
}

/// Rejects states whose truncation tail exceeds a threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncationGuard {
    pub max_tail: f64,
}

impl Default for TruncationGuard {
    fn default() -> Self {
        Self { max_tail: 1e-6 }
    }
}

impl TruncationGuard {
    pub fn check(&self, v: &FockVector) -> Result<()> {
        self.check_tail(v.truncation_tail())
    }

    pub fn check_tail(&self, tail: f64) -> Result<()> {
        if tail > self.max_tail {
            Err(Error::Truncation(format!(
                "tail weight {tail:.3e} exceeds {:.1e}; increase the dimension",
                self.max_tail
            )))
        } else {
            Ok(())
        }
    }
}

pub(crate) fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return domain(format!("dimension mismatch: {a} vs {b}"));
    }
    Ok(())
}

pub fn number_state(n: usize, dim: usize) -> Result<FockVector> {
    if n >= dim {
        return domain(format!("number state {n} outside dimension {dim}"));
    }
    let mut amps = DVector::zeros(dim);
    amps[n] = C64::new(1.0, 0.0);
    FockVector::new(amps)
}

/// Normalizes `amps` and records `tail` computed from the untruncated series.
fn finish(amps: Vec<C64>, tail: f64) -> Result<FockVector> {
    let v = FockVector::from_slice(&amps)?.normalized()?;
    Ok(v.with_tail(tail.max(0.0)))
}

/// `|β⟩` truncated to `dim` levels and renormalized.
pub fn coherent_state(beta: C64, dim: usize) -> Result<FockVector> {
    if dim < 2 {
        return domain("dimension below 2");
    }
    let mut c = C64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    let mut amps = Vec::with_capacity(dim);
    let mut tail = 0.0;
    let mut n = 0usize;
    loop {
        if n < dim {
            amps.push(c);
        } else {
            let w = c.norm_sqr();
            tail += w;
            if n > dim + 8 && (w < 1e-30 || w < tail * 1e-18) {
                break;
            }
        }
        n += 1;
        c = c * beta / (n as f64).sqrt();
        if n > dim + 100_000 {
            break;
        }
    }
    finish(amps, tail)
}

/// `S(ξ)|0⟩` with `S(ξ) = exp[(ξ* a² − ξ a†²)/2]`, truncated and renormalized.
pub fn squeezed_vacuum(xi: C64, dim: usize) -> Result<FockVector> {
    if dim < 2 {
        return domain("dimension below 2");
    }
    let r = xi.norm();
    let phase = if r > 0.0 { xi / r } else { C64::new(1.0, 0.0) };
    let ratio = -phase * r.tanh();
    let mut c = C64::new(1.0 / r.cosh().sqrt(), 0.0);
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    let mut tail = 0.0;
    let mut m = 0usize;
    loop {
        let n = 2 * m;
        if n < dim {
            amps[n] = c;
        } else {
            let w = c.norm_sqr();
            tail += w;
            if n > dim + 8 && (w < 1e-30 || w < tail * 1e-18) {
                break;
            }
            if n > dim + 200_000 {
                break;
            }
        }
        let k = m as f64;
        c = c * ratio * ((2.0 * k + 1.0) * (2.0 * k + 2.0)).sqrt() / (2.0 * (k + 1.0));
        m += 1;
        if r == 0.0 {
            break;
        }
    }
    finish(amps, tail)
}

/// Annihilation and creation operators; `a_dag` is the adjoint of `a`.
pub fn ladder(dim: usize) -> (ModeOperator, ModeOperator) {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let a_dag = a.adjoint();
    (a, a_dag)
}

pub fn number_operator(dim: usize) -> ModeOperator {
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `X_θ = (a e^{−iθ} + a† e^{iθ})/√2`.
pub fn quadrature(theta: f64, dim: usize) -> ModeOperator {
    let (a, a_dag) = ladder(dim);
    let e = C64::from_polar(1.0, theta);
    (a * e.conj() + a_dag * e) / C64::new(std::f64::consts::SQRT_2, 0.0)
}

/// Diagonal `T^n̂`.
pub fn attenuation(t: f64, dim: usize) -> ModeOperator {
    DMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        (0..dim).map(|n| C64::new(t.powi(n as i32), 0.0)),
    ))
}

/// Hermite functions `⟨x|n⟩` for `n < dim`.
pub fn position_wavefunction(x: f64, dim: usize) -> DVector<f64> {
    let mut psi = DVector::zeros(dim);
    if dim == 0 {
        return psi;
    }
    psi[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if dim > 1 {
        psi[1] = std::f64::consts::SQRT_2 * x * psi[0];
    }
    for n in 1..dim.saturating_sub(1) {
        let nf = n as f64;
        psi[n + 1] =
            (2.0 / (nf + 1.0)).sqrt() * x * psi[n] - (nf / (nf + 1.0)).sqrt() * psi[n - 1];
    }
    psi
}

/// Row vector `⟨x_θ|n⟩ = ψ_n(x) e^{−inθ}` projecting onto a rotated quadrature.
pub fn quadrature_bra(x: f64, theta: f64, dim: usize) -> DVector<C64> {
    let psi = position_wavefunction(x, dim);
    DVector::from_iterator(
        dim,
        psi.iter()
            .enumerate()
            .map(|(n, &p)| C64::from_polar(p, -(n as f64) * theta)),
    )
}

/// Overlap fidelity with a pure target, `⟨t|ρ|t⟩ / Tr ρ` for mixed states.
pub fn fidelity(state: &State, target: &FockVector) -> Result<f64> {
    check_dims(state.dim(), target.dim())?;
    let tn = target.norm_sqr();
    if !(tn > 0.0) {
        return Err(Error::Degenerate("zero target".into()));
    }
    let t = target.amplitudes();
    let f = match state {
        State::Pure(v) => {
            let vn = v.norm_sqr();
            if !(vn > 0.0) {
                return Err(Error::Degenerate("zero state".into()));
            }
            t.dotc(v.amplitudes()).norm_sqr() / (vn * tn)
        }
        State::Mixed(rho) => {
            let tr = rho.trace().re;
            if !(tr > 0.0) {
                return Err(Error::Degenerate("zero trace".into()));
            }
            t.dotc(&(rho * t)).re / (tr * tn)
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

/// Pure-state fidelity `|⟨a|b⟩|²` after normalizing both vectors.
pub fn fidelity_pure(a: &FockVector, b: &FockVector) -> Result<f64> {
    fidelity(&State::Pure(a.clone()), b)
}

/// `exp(−i t H)` for Hermitian `H` by eigendecomposition.
pub fn unitary_from_hermitian(h: &ModeOperator, t: f64) -> ModeOperator {
    let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -t * l)),
    );
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * v.adjoint()
}

/// `D(α) = exp(α a† − α* a)`.
pub fn displacement(alpha: C64, dim: usize) -> ModeOperator {
    let (a, a_dag) = ladder(dim);
    let i = C64::new(0.0, 1.0);
    let h = (a_dag * alpha - a * alpha.conj()) * i;
    unitary_from_hermitian(&h, 1.0)
}

/// `S(ζ) = exp[(ζ* a² − ζ a†²)/2]`.
pub fn squeeze(zeta: C64, dim: usize) -> ModeOperator {
    let (a, a_dag) = ladder(dim);
    let i = C64::new(0.0, 1.0);
    let h = (&a * &a * zeta.conj() - &a_dag * &a_dag * zeta) * (i * 0.5);
    unitary_from_hermitian(&h, 1.0)
}

/// Vector-level ladder arithmetic used by the inner loops of sweeps.
///
/// Raising operators are applied without reference to the truncated top
/// level, so every amplitude below `dim` is exact whenever the input has no
/// weight beyond the truncation.
pub(crate) mod vecops {
    use nalgebra::DVector;
    use num_complex::Complex64 as C64;

    pub fn lower(v: &DVector<C64>) -> DVector<C64> {
        let d = v.len();
        DVector::from_fn(d, |n, _| {
            if n + 1 < d {
                v[n + 1] * ((n + 1) as f64).sqrt()
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn raise(v: &DVector<C64>) -> DVector<C64> {
        let d = v.len();
        DVector::from_fn(d, |n, _| {
            if n > 0 {
                v[n - 1] * (n as f64).sqrt()
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// `exp(M) v` for nilpotent `M` given as a closure; the series is summed
    /// until it terminates exactly.
    pub fn expv(v: &DVector<C64>, m: impl Fn(&DVector<C64>) -> DVector<C64>) -> DVector<C64> {
        let mut out = v.clone();
        let mut term = v.clone();
        for k in 1..=2 * v.len() + 2 {
            term = m(&term) / C64::new(k as f64, 0.0);
            if term.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
                break;
            }
            out += &term;
        }
        out
    }

    /// `exp(c1 a + c2 a²) v`.
    pub fn exp_lowering(c1: C64, c2: C64, v: &DVector<C64>) -> DVector<C64> {
        expv(v, |w| {
            let l = lower(w);
            let l2 = lower(&l);
            l * c1 + l2 * c2
        })
    }

    /// `exp(c1 a† + c2 a†²) v`.
    pub fn exp_raising(c1: C64, c2: C64, v: &DVector<C64>) -> DVector<C64> {
        expv(v, |w| {
            let r = raise(w);
            let r2 = raise(&r);
            r * c1 + r2 * c2
        })
    }

    /// `T^n̂ v`.
    pub fn attenuate(t: f64, v: &DVector<C64>) -> DVector<C64> {
        let mut p = 1.0;
        DVector::from_fn(v.len(), |n, _| {
            if n > 0 {
                p *= t;
            }
            v[n] * p
        })
    }
}

/// `exp(M)` for a nilpotent matrix by its terminating power series.
pub fn expm_nilpotent(m: &ModeOperator) -> ModeOperator {
    let d = m.nrows();
    let mut out = DMatrix::identity(d, d);
    let mut term = DMatrix::identity(d, d);
    for k in 1..=d {
        term = (&term * m) / C64::new(k as f64, 0.0);
        if term.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
            break;
        }
        out += &term;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn number_states() {
        assert_eq!(number_state(0, 8).unwrap().amplitudes()[0], c(1.0));
        assert_eq!(number_state(1, 8).unwrap().amplitudes()[1], c(1.0));
        assert!(matches!(number_state(8, 8), Err(Error::Domain(_))));
    }

    #[test]
    fn coherent_vacuum_weight() {
        let v = coherent_state(C64::new(0.0, 1.0), 40).unwrap();
        assert!((v.amplitudes()[0].norm_sqr() - (-1.0f64).exp()).abs() < 1e-14);
        assert!(!v.truncation_warning());
        let series: f64 = (0..40)
            .map(|n| (-1.0f64).exp() / (1..=n).map(|k| k as f64).product::<f64>())
            .sum();
        assert!((series - 1.0).abs() < 1e-14);
        assert_eq!(coherent_state(c(0.0), 8).unwrap(), number_state(0, 8).unwrap());
    }

    #[test]
    fn coherent_tail_flagged() {
        let v = coherent_state(c(3.0), 20).unwrap();
        assert!(v.truncation_warning());
        // Poisson(9) tail beyond 19
        let mut p = (-9.0f64).exp();
        let mut below = 0.0;
        for n in 0..20 {
            if n > 0 {
                p *= 9.0 / n as f64;
            }
            below += p;
        }
        assert!((v.truncation_tail() - (1.0 - below)).abs() < 1e-12);
        assert!(TruncationGuard::default().check(&v).is_err());
    }

    #[test]
    fn squeezed_parity_and_generator() {
        let v = squeezed_vacuum(c(0.1), 20).unwrap();
        assert!(v.amplitudes().iter().skip(1).step_by(2).all(|z| *z == c(0.0)));
        // The truncated generator converges slowly in dimension, so the
        // oracle exponential is built with a wide margin and cut back.
        let dim = 60;
        let s = squeezed_vacuum(c(1.0), dim).unwrap();
        let big = 160;
        let (a, a_dag) = ladder(big);
        let h = (&a * &a - &a_dag * &a_dag) * C64::new(0.0, 0.5);
        let full = unitary_from_hermitian(&h, 1.0);
        let oracle = full.column(0).rows(0, dim).into_owned();
        let oracle = oracle.unscale(oracle.norm());
        assert!((s.amplitudes() - oracle).norm() < 1e-8);
    }

    #[test]
    fn ladder_actions() {
        let (a, a_dag) = ladder(8);
        let one = number_state(1, 8).unwrap();
        assert_eq!(one.apply(&a).unwrap(), number_state(0, 8).unwrap());
        let vac = number_state(0, 8).unwrap();
        assert_eq!(vac.apply(&a).unwrap().norm_sqr(), 0.0);
        let three = number_state(3, 8).unwrap();
        let n3 = three.apply(&(&a_dag * &a)).unwrap();
        assert!((n3.amplitudes()[3] - c(3.0)).norm() < 1e-14);
        assert_eq!(a_dag, a.adjoint());
    }

    #[test]
    fn quadratures() {
        let dim = 12;
        let x = quadrature(0.0, dim);
        assert!((x[(0, 1)] - c(std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-15);
        let (a, a_dag) = ladder(dim);
        let p_def = (&a - &a_dag) / C64::new(0.0, std::f64::consts::SQRT_2);
        let p = quadrature(std::f64::consts::FRAC_PI_2, dim);
        assert!((&p - &p_def).norm() < 1e-14);
        let comm = &x * &p - &p * &x;
        for i in 0..dim - 1 {
            for j in 0..dim - 1 {
                let want = if i == j { C64::new(0.0, 1.0) } else { c(0.0) };
                assert!((comm[(i, j)] - want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn wavefunction_at_origin() {
        let psi = position_wavefunction(0.0, 10);
        assert_eq!(psi[1], 0.0);
        assert!((psi[0] - PI.powf(-0.25)).abs() < 1e-15);
        assert!((psi[0] - 0.7511).abs() < 1e-4);
    }

    #[test]
    fn fidelities() {
        let vac = number_state(0, 10).unwrap();
        let one = number_state(1, 10).unwrap();
        assert_eq!(fidelity_pure(&vac, &vac).unwrap(), 1.0);
        assert_eq!(fidelity_pure(&vac, &one).unwrap(), 0.0);
        let b = coherent_state(C64::new(0.0, 1.0), 40).unwrap();
        let vac40 = number_state(0, 40).unwrap();
        assert!((fidelity_pure(&b, &vac40).unwrap() - (-1.0f64).exp()).abs() < 1e-14);
        assert!(matches!(fidelity_pure(&vac, &vac40), Err(Error::Domain(_))));
        let rho = State::Mixed(b.density());
        assert!((fidelity(&rho, &vac40).unwrap() - (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn gaussian_unitaries() {
        let dim = 60;
        let id = displacement(c(0.0), dim);
        assert!((id - DMatrix::<C64>::identity(dim, dim)).norm() < 1e-13);
        let alpha = C64::new(0.6, -0.8);
        let d = displacement(alpha, dim);
        let oracle = coherent_state(alpha, dim).unwrap();
        assert!((d.column(0) - oracle.amplitudes()).norm() < 1e-8);
        let zeta = C64::new(0.3, 0.4);
        let s = squeeze(zeta, dim);
        let oracle = squeezed_vacuum(zeta, dim).unwrap();
        assert!((s.column(0) - oracle.amplitudes()).norm() < 1e-8);
    }

    #[test]
    fn vecops_match_matrices() {
        let dim = 20;
        let (a, a_dag) = ladder(dim);
        let v = coherent_state(C64::new(0.5, 0.2), dim).unwrap().into_amplitudes();
        assert!((vecops::lower(&v) - &a * &v).norm() < 1e-14);
        assert!((vecops::raise(&v) - &a_dag * &v).norm() < 1e-14);
        let (c1, c2) = (C64::new(0.3, -0.2), C64::new(-0.4, 0.1));
        let m = &a * c1 + &a * &a * c2;
        let want = expm_nilpotent(&m) * &v;
        assert!((vecops::exp_lowering(c1, c2, &v) - want).norm() < 1e-12);
        let t = vecops::attenuate(0.7, &v);
        assert!((t - attenuation(0.7, dim) * &v).norm() < 1e-15);
    }
}
