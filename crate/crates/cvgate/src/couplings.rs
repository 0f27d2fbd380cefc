//! Exact two-mode unitaries and ancilla projections.
//!
//! Joint states of the oscillator (S) and the ancilla (L) are stored with
//! index `nS·dimL + nL`. These objects are deliberately brute force: they are
//! the reference against which the analytic Kraus operators are checked.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{domain, Error, Result};
use crate::fock::{self, FockVector};

/// Joint amplitudes over system ⊗ ancilla.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeVector {
    amps: DVector<C64>,
    dim_s: usize,
    dim_l: usize,
}

impl TwoModeVector {
    pub fn new(amps: DVector<C64>, dim_s: usize, dim_l: usize) -> Result<Self> {
        if amps.len() != dim_s * dim_l {
            return domain(format!(
                "length {} does not match {dim_s}×{dim_l}",
                amps.len()
            ));
        }
        Ok(Self { amps, dim_s, dim_l })
    }

    /// `|s⟩ ⊗ |l⟩`.
    pub fn product(s: &FockVector, l: &FockVector) -> Self {
        let (ds, dl) = (s.dim(), l.dim());
        let sa = s.amplitudes();
        let la = l.amplitudes();
        let amps = DVector::from_fn(ds * dl, |k, _| sa[k / dl] * la[k % dl]);
        Self {
            amps,
            dim_s: ds,
            dim_l: dl,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_s, self.dim_l)
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    /// Amplitudes as a `dimS × dimL` matrix.
    pub fn as_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim_s, self.dim_l, |s, l| self.amps[s * self.dim_l + l])
    }

    fn from_matrix(m: &DMatrix<C64>) -> Self {
        let (ds, dl) = m.shape();
        Self {
            amps: DVector::from_fn(ds * dl, |k, _| m[(k / dl, k % dl)]),
            dim_s: ds,
            dim_l: dl,
        }
    }

    /// Weight on system levels `≥ dimS−ks` or ancilla levels `≥ dimL−kl`.
    pub fn edge_weight(&self, ks: usize, kl: usize) -> f64 {
        let mut w = 0.0;
        for s in 0..self.dim_s {
            for l in 0..self.dim_l {
                if s + ks >= self.dim_s || l + kl >= self.dim_l {
                    w += self.amps[s * self.dim_l + l].norm_sqr();
                }
            }
        }
        w
    }
}

#[derive(Clone, Debug)]
struct Block {
    indices: Vec<usize>,
    u: DMatrix<C64>,
}

#[derive(Clone, Debug)]
enum Repr {
    Dense(DMatrix<C64>),
    /// Block-diagonal in total photon number.
    Blocks(Vec<Block>),
    /// `(Vs ⊗ Vl) diag(phase) (Vs ⊗ Vl)†` with phases stored as a `dimS × dimL` grid.
    Kron {
        vs: DMatrix<C64>,
        vl: DMatrix<C64>,
        phases: DMatrix<C64>,
    },
}

/// Operator on system ⊗ ancilla with a structure-aware representation.
#[derive(Clone, Debug)]
pub struct TwoModeOperator {
    dim_s: usize,
    dim_l: usize,
    repr: Repr,
}

impl TwoModeOperator {
    pub fn from_dense(m: DMatrix<C64>, dim_s: usize, dim_l: usize) -> Result<Self> {
        if m.nrows() != dim_s * dim_l || m.ncols() != dim_s * dim_l {
            return domain("dense two-mode operator has the wrong shape");
        }
        Ok(Self {
            dim_s,
            dim_l,
            repr: Repr::Dense(m),
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_s, self.dim_l)
    }

    pub fn apply(&self, v: &TwoModeVector) -> Result<TwoModeVector> {
        if v.dims() != self.dims() {
            return domain("two-mode dimension mismatch");
        }
        Ok(match &self.repr {
            Repr::Dense(m) => TwoModeVector {
                amps: m * &v.amps,
                dim_s: self.dim_s,
                dim_l: self.dim_l,
            },
            Repr::Blocks(blocks) => {
                let mut out = DVector::zeros(v.amps.len());
                for b in blocks {
                    let sub = DVector::from_iterator(b.indices.len(), b.indices.iter().map(|&i| v.amps[i]));
                    let res = &b.u * sub;
                    for (k, &i) in b.indices.iter().enumerate() {
                        out[i] = res[k];
                    }
                }
                TwoModeVector {
                    amps: out,
                    dim_s: self.dim_s,
                    dim_l: self.dim_l,
                }
            }
            Repr::Kron { vs, vl, phases } => {
                let m = v.as_matrix();
                let c = vs.adjoint() * m * vl.conjugate();
                let c = c.component_mul(phases);
                TwoModeVector::from_matrix(&(vs * c * vl.transpose()))
            }
        })
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dim_s * self.dim_l;
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Blocks(blocks) => {
                let mut out = DMatrix::zeros(n, n);
                for b in blocks {
                    for (r, &i) in b.indices.iter().enumerate() {
                        for (c, &j) in b.indices.iter().enumerate() {
                            out[(i, j)] = b.u[(r, c)];
                        }
                    }
                }
                out
            }
            Repr::Kron { vs, vl, phases } => {
                let w = vs.kronecker(vl);
                let d = DVector::from_fn(n, |k, _| phases[(k / self.dim_l, k % self.dim_l)]);
                let mut wd = w.clone();
                for (j, mut col) in wd.column_iter_mut().enumerate() {
                    col *= d[j];
                }
                wd * w.adjoint()
            }
        }
    }

    /// Largest `‖U†U − 1‖` over photon-number blocks, when block structured.
    pub fn block_unitarity_error(&self) -> Option<f64> {
        match &self.repr {
            Repr::Blocks(blocks) => Some(
                blocks
                    .iter()
                    .map(|b| {
                        let n = b.u.nrows();
                        (b.u.adjoint() * &b.u - DMatrix::<C64>::identity(n, n)).iter().map(|c| c.norm()).fold(0.0, f64::max)
                    })
                    .fold(0.0, f64::max),
            ),
            _ => None,
        }
    }
}

/// Beam splitter `exp[θ(a†b − b†a)]` with `cos θ = T`.
///
/// Photon number is conserved, so the unitary is assembled block by block;
/// blocks touching the truncation edge are still exactly unitary.
pub fn bs_unitary(t: f64, dim_s: usize, dim_l: usize) -> Result<TwoModeOperator> {
    if !(t > 0.0 && t <= 1.0) {
        return domain(format!("transmission {t} outside (0, 1]"));
    }
    let theta = t.acos();
    let mut blocks = Vec::new();
    for total in 0..(dim_s + dim_l - 1) {
        let members: Vec<(usize, usize)> = (0..dim_s)
            .filter_map(|s| {
                let l = total.checked_sub(s)?;
                (l < dim_l).then_some((s, l))
            })
            .collect();
        let n = members.len();
        let mut h = DMatrix::<C64>::zeros(n, n);
        // H = iθ(a†b − b†a); a†b maps (s, l) to (s+1, l−1).
        for (k, &(s, l)) in members.iter().enumerate() {
            if l == 0 {
                continue;
            }
            if let Some(k2) = members.iter().position(|&m| m == (s + 1, l - 1)) {
                let amp = theta * ((s + 1) as f64).sqrt() * (l as f64).sqrt();
                h[(k2, k)] += C64::new(0.0, amp);
                h[(k, k2)] += C64::new(0.0, -amp);
            }
        }
        let u = fock::unitary_from_hermitian(&h, 1.0);
        blocks.push(Block {
            indices: members.iter().map(|&(s, l)| s * dim_l + l).collect(),
            u,
        });
    }
    Ok(TwoModeOperator {
        dim_s,
        dim_l,
        repr: Repr::Blocks(blocks),
    })
}

/// QND coupling `exp(−iκ X ⊗ P_L)` from the eigenbases of `X` and `P_L`.
pub fn qnd_unitary(kappa: f64, dim_s: usize, dim_l: usize) -> Result<TwoModeOperator> {
    if !kappa.is_finite() || kappa.abs() > 2.0 {
        return domain(format!("coupling strength {kappa} outside [-2, 2]"));
    }
    let ex = fock::quadrature(0.0, dim_s).symmetric_eigen();
    let ep = fock::quadrature(std::f64::consts::FRAC_PI_2, dim_l).symmetric_eigen();
    let phases = DMatrix::from_fn(dim_s, dim_l, |i, j| {
        C64::from_polar(1.0, -kappa * ex.eigenvalues[i] * ep.eigenvalues[j])
    });
    Ok(TwoModeOperator {
        dim_s,
        dim_l,
        repr: Repr::Kron {
            vs: ex.eigenvectors,
            vl: ep.eigenvectors,
            phases,
        },
    })
}

/// Conditional system state after projecting the ancilla.
#[derive(Clone, Debug)]
pub struct Projection {
    /// Unnormalized conditional vector.
    pub state: FockVector,
    /// Squared norm: a probability for Fock bras, a density for quadrature bras.
    pub weight: f64,
    pub normalized: FockVector,
}

/// Contracts the ancilla with `bra`, whose entries are `⟨b|n⟩`.
pub fn project_ancilla(state: &TwoModeVector, bra: &DVector<C64>) -> Result<Projection> {
    let (ds, dl) = state.dims();
    if bra.len() != dl {
        return domain(format!("bra length {} differs from ancilla dimension {dl}", bra.len()));
    }
    let amps = DVector::from_fn(ds, |s, _| {
        (0..dl).fold(C64::new(0.0, 0.0), |acc, l| acc + bra[l] * state.amps[s * dl + l])
    });
    let weight = amps.norm_squared();
    if !(weight >= 1e-300) {
        return Err(Error::Degenerate(format!("projection weight {weight:.3e}")));
    }
    let v = FockVector::new(amps)?;
    Ok(Projection {
        normalized: v.normalized()?,
        state: v,
        weight,
    })
}

/// Fock row of `⟨0| exp[A* b + B* b²]`.
pub fn ab_bra(a: C64, b: C64, dim: usize) -> DVector<C64> {
    let (ac, bc) = (a.conj(), b.conj());
    let mut e = DVector::zeros(dim);
    if dim == 0 {
        return e;
    }
    e[0] = C64::new(1.0, 0.0);
    for n in 1..dim {
        let nf = n as f64;
        let mut v = ac * e[n - 1];
        if n >= 2 {
            v += bc * 2.0 * (nf - 1.0).sqrt() * e[n - 2];
        }
        e[n] = v / nf.sqrt();
    }
    e
}

/// Heterodyne projection realized by splitting the ancilla on a beam splitter
/// of transmission `tau` and measuring `x` and `p` on the outputs.
///
/// Returns the exact row `⟨x|⟨p|U_BS(tau)|n⟩|0⟩` together with
/// `A = √2(x·tau − i p·R)` and `B = (R² − tau²)/2`.
pub fn heterodyne_bra(x: f64, p: f64, tau: f64, dim_l: usize) -> Result<(DVector<C64>, C64, C64)> {
    if !(tau > 0.0 && tau < 1.0) {
        return domain(format!(
            "splitting transmission {tau} gives |B| = 1/2; use the homodyne path"
        ));
    }
    let r = (1.0 - tau * tau).sqrt();
    let a = C64::new(std::f64::consts::SQRT_2 * x * tau, -std::f64::consts::SQRT_2 * p * r);
    let b = C64::new(0.5 * (r * r - tau * tau), 0.0);
    let pre = fock::position_wavefunction(x, 1)[0] * fock::position_wavefunction(p, 1)[0];
    Ok((ab_bra(a, b, dim_l) * C64::new(pre, 0.0), a, b))
}
