//! Classical and Gaussian thresholds, critical efficiencies and the sweeps
//! behind the fidelity-versus-transmission and window trade-off curves.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::fock::{self, vecops, FockVector, ModeOperator};
use crate::xgate::{self, AncillaModel, SharpBranches, Window, WindowBranches};

/// Largest dimension for which `√n!` fits a double.
const MAX_SCAN_DIM: usize = 170;
const EDGE_TOL: f64 = 1e-6;

/// Input states used for gate benchmarks.
///
/// Coherent amplitudes given as a single real number are placed on the
/// imaginary axis, where `⟨X⟩ = 0` and the X-gate maps the state onto an
/// orthogonal one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InputState {
    Coherent { beta: C64 },
    Squeezed { xi: f64 },
    Fock { n: usize },
}

impl InputState {
    pub fn state(&self, dim: usize) -> Result<FockVector> {
        match *self {
            InputState::Coherent { beta } => fock::coherent_state(beta, dim),
            InputState::Squeezed { xi } => fock::squeezed_vacuum(C64::new(xi, 0.0), dim),
            InputState::Fock { n } => fock::number_state(n, dim),
        }
    }

    /// The four inputs of the fidelity-versus-transmission figure.
    pub fn figure_set() -> [InputState; 4] {
        [
            InputState::Coherent { beta: C64::new(0.0, 0.1) },
            InputState::Coherent { beta: C64::new(0.0, 1.0) },
            InputState::Squeezed { xi: 0.1 },
            InputState::Fock { n: 1 },
        ]
    }
}

impl fmt::Display for InputState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputState::Coherent { beta } if beta.re == 0.0 => write!(f, "coherent:{}", beta.im),
            InputState::Coherent { beta } => write!(f, "coherent:{},{}", beta.re, beta.im),
            InputState::Squeezed { xi } => write!(f, "squeezed:{xi}"),
            InputState::Fock { n } => write!(f, "fock:{n}"),
        }
    }
}

impl FromStr for InputState {
    type Err = Error;

    /// `fock:N`, `squeezed:XI`, `coherent:B` (amplitude `iB`) or
    /// `coherent:RE,IM`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, val) = s
            .split_once(':')
            .ok_or_else(|| Error::Domain(format!("input '{s}' is not of the form kind:value")))?;
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Domain(format!("bad number '{t}' in input '{s}'")))
        };
        match kind {
            "fock" => val
                .trim()
                .parse::<usize>()
                .map(|n| InputState::Fock { n })
                .map_err(|_| Error::Domain(format!("bad photon number in '{s}'"))),
            "squeezed" => Ok(InputState::Squeezed { xi: num(val)? }),
            "coherent" => match val.split_once(',') {
                Some((re, im)) => Ok(InputState::Coherent {
                    beta: C64::new(num(re)?, num(im)?),
                }),
                None => Ok(InputState::Coherent {
                    beta: C64::new(0.0, num(val)?),
                }),
            },
            _ => domain(format!("unknown input kind '{kind}'")),
        }
    }
}

/// Normalized `(1 + λ₋a + λ₊a†)|ψ⟩`.
pub fn gate_target(input: &FockVector, lambda_minus: C64, lambda_plus: C64) -> Result<FockVector> {
    let psi = input.amplitudes();
    let out = psi + vecops::lower(psi) * lambda_minus + vecops::raise(psi) * lambda_plus;
    FockVector::new(out)?.normalized()
}

/// Maximizes `f` on `[lo, hi]` by golden-section search.
pub(crate) fn golden_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Cyclic coordinate golden-section ascent starting from a grid optimum.
/// `steps` is the initial half-width per coordinate; it halves each sweep.
fn refine(f: impl Fn(&[f64]) -> f64, x: &mut [f64], mut fx: f64, steps: &[f64], bounds: &[(f64, f64)]) -> f64 {
    let mut h = steps.to_vec();
    for _ in 0..40 {
        let before = fx;
        for i in 0..x.len() {
            let lo = (x[i] - h[i]).max(bounds[i].0);
            let hi = (x[i] + h[i]).min(bounds[i].1);
            let mut probe = x.to_vec();
            let (xi, fi) = golden_max(
                |v| {
                    probe[i] = v;
                    f(&probe)
                },
                lo,
                hi,
                1e-9 * (1.0 + h[i]),
            );
            if fi > fx {
                x[i] = xi;
                fx = fi;
            }
        }
        h.iter_mut().for_each(|s| *s *= 0.5);
        if fx - before < 1e-14 && h.iter().all(|&s| s < 1e-7) {
            break;
        }
    }
    fx
}

fn at_edge(v: f64, lo: f64, hi: f64) -> bool {
    v <= lo + EDGE_TOL || v >= hi - EDGE_TOL
}

/// Exponentials of single ladder operators as truncated convolutions; exact
/// below the cutoff.
struct LadderExp {
    sf: Vec<f64>,
    inv_fact: Vec<f64>,
}

impl LadderExp {
    fn new(dim: usize) -> Result<Self> {
        if dim > MAX_SCAN_DIM {
            return domain(format!("scan dimension {dim} exceeds {MAX_SCAN_DIM}"));
        }
        let mut sf = vec![1.0; dim];
        let mut inv_fact = vec![1.0; dim];
        for n in 1..dim {
            sf[n] = sf[n - 1] * (n as f64).sqrt();
            inv_fact[n] = inv_fact[n - 1] / n as f64;
        }
        Ok(Self { sf, inv_fact })
    }

    fn powers(&self, c: C64) -> Vec<C64> {
        let mut p = C64::new(1.0, 0.0);
        self.inv_fact
            .iter()
            .map(|&f| {
                let v = p * f;
                p *= c;
                v
            })
            .collect()
    }

    /// `exp(c a) v`.
    fn lowering(&self, pw: &[C64], v: &DVector<C64>) -> DVector<C64> {
        let d = v.len();
        let y: Vec<C64> = (0..d).map(|m| v[m] * self.sf[m]).collect();
        DVector::from_fn(d, |n, _| {
            let s = (n..d).fold(C64::new(0.0, 0.0), |acc, m| acc + pw[m - n] * y[m]);
            s / self.sf[n]
        })
    }

    /// `exp(c a†) v`.
    fn raising(&self, pw: &[C64], v: &DVector<C64>) -> DVector<C64> {
        let d = v.len();
        let y: Vec<C64> = (0..d).map(|k| v[k] / self.sf[k]).collect();
        DVector::from_fn(d, |n, _| {
            let s = (0..=n).fold(C64::new(0.0, 0.0), |acc, k| acc + pw[n - k] * y[k]);
            s * self.sf[n]
        })
    }
}

/// Coherent-ancilla gate heralded by `x = 0`:
/// `exp[αRa†] exp[αRa] exp[−(R²/2T²)a²] T^n̂`, up to a scalar.
pub fn classical_gate(alpha: C64, t: f64, dim: usize) -> Result<ModeOperator> {
    if !(t > 0.0 && t < 1.0) {
        return domain(format!("transmission {t} outside (0, 1)"));
    }
    let r = (1.0 - t * t).sqrt();
    let (a, a_dag) = fock::ladder(dim);
    let c = alpha * r;
    let m = fock::expm_nilpotent(&(&a_dag * c))
        * fock::expm_nilpotent(&(&a * c))
        * fock::expm_nilpotent(&(&a * &a * C64::new(-r * r / (2.0 * t * t), 0.0)))
        * fock::attenuation(t, dim);
    Ok(m)
}

/// Scan ranges for the classical threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalGrid {
    pub alpha_max: f64,
    pub alpha_step: f64,
    pub phase_step: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub t_step: f64,
}

impl Default for ClassicalGrid {
    fn default() -> Self {
        Self {
            alpha_max: 4.0,
            alpha_step: 0.05,
            phase_step: PI / 50.0,
            t_min: 0.05,
            t_max: 0.99,
            t_step: 0.02,
        }
    }
}

impl ClassicalGrid {
    fn widened(&self) -> Self {
        Self {
            alpha_max: 2.0 * self.alpha_max,
            t_min: 0.01,
            t_max: 0.999,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalThreshold {
    pub fidelity: f64,
    pub alpha: C64,
    pub t: f64,
    /// The optimum sits on the edge of the scanned range.
    pub boundary: bool,
    /// Optimum over the widened range when `boundary` is set.
    pub widened: Option<Box<ClassicalThreshold>>,
}

struct ClassicalScan<'a> {
    lx: LadderExp,
    psi: &'a DVector<C64>,
    target: &'a DVector<C64>,
}

impl ClassicalScan<'_> {
    fn prepared(&self, t: f64) -> DVector<C64> {
        let r2 = 1.0 - t * t;
        let w = vecops::attenuate(t, self.psi);
        vecops::exp_lowering(C64::new(0.0, 0.0), C64::new(-r2 / (2.0 * t * t), 0.0), &w)
    }

    fn fidelity_prepared(&self, w: &DVector<C64>, c: C64) -> f64 {
        let pw = self.lx.powers(c);
        let z = self.lx.lowering(&pw, w);
        let u = self.lx.lowering(&self.lx.powers(c.conj()), self.target);
        let ov = u.dotc(&z).norm_sqr();
        let v = self.lx.raising(&pw, &z);
        let n = v.norm_squared();
        if n > 0.0 {
            (ov / n).min(1.0)
        } else {
            0.0
        }
    }

    fn fidelity(&self, alpha: C64, t: f64) -> f64 {
        let r = (1.0 - t * t).sqrt();
        self.fidelity_prepared(&self.prepared(t), alpha * r)
    }

    fn run(&self, grid: &ClassicalGrid) -> ClassicalThreshold {
        let nt = ((grid.t_max - grid.t_min) / grid.t_step).round() as usize;
        let na = (grid.alpha_max / grid.alpha_step).round() as usize;
        let np = (2.0 * PI / grid.phase_step).round() as usize;
        let best = (0..=nt)
            .into_par_iter()
            .map(|it| {
                let t = (grid.t_min + it as f64 * grid.t_step).min(grid.t_max);
                let r = (1.0 - t * t).sqrt();
                let w = self.prepared(t);
                let mut best = (self.fidelity_prepared(&w, C64::new(0.0, 0.0)), 0.0, 0.0, t);
                for ia in 1..=na {
                    let m = ia as f64 * grid.alpha_step;
                    for ip in 0..np {
                        let ph = ip as f64 * grid.phase_step;
                        let f = self.fidelity_prepared(&w, C64::from_polar(m * r, ph));
                        if f > best.0 {
                            best = (f, m, ph, t);
                        }
                    }
                }
                best
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((f64::NEG_INFINITY, 0.0, 0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
        let mut x = [best.1, best.2, best.3];
        let f = refine(
            |p| self.fidelity(C64::from_polar(p[0], p[1]), p[2]),
            &mut x,
            best.0,
            &[grid.alpha_step, grid.phase_step, grid.t_step],
            &[(0.0, grid.alpha_max), (f64::NEG_INFINITY, f64::INFINITY), (grid.t_min, grid.t_max)],
        );
        ClassicalThreshold {
            fidelity: f,
            alpha: C64::from_polar(x[0], x[1]),
            t: x[2],
            boundary: x[0] >= grid.alpha_max - EDGE_TOL || at_edge(x[2], grid.t_min, grid.t_max),
            widened: None,
        }
    }
}

/// Best post-selected fidelity with `target` when the single-photon ancilla
/// is replaced by a coherent state and the outcome is fixed at `x = 0`.
pub fn classical_threshold(input: &FockVector, target: &FockVector) -> Result<ClassicalThreshold> {
    classical_threshold_with(input, target, &ClassicalGrid::default())
}

/// [`classical_threshold`] on a custom grid. When the optimum lands on the
/// edge of the range, the refinement is repeated on a widened range and
/// attached to the report.
pub fn classical_threshold_with(
    input: &FockVector,
    target: &FockVector,
    grid: &ClassicalGrid,
) -> Result<ClassicalThreshold> {
    fock::check_dims(input.dim(), target.dim())?;
    if !(grid.t_min > 0.0 && grid.t_max < 1.0 && grid.t_min < grid.t_max) {
        return domain("classical scan needs 0 < t_min < t_max < 1");
    }
    let psi = input.normalized()?.into_amplitudes();
    let tgt = target.normalized()?.into_amplitudes();
    let scan = ClassicalScan {
        lx: LadderExp::new(input.dim())?,
        psi: &psi,
        target: &tgt,
    };
    let mut rep = scan.run(grid);
    if rep.boundary {
        let wide = grid.widened();
        let mut x = [rep.alpha.norm(), rep.alpha.arg(), rep.t];
        let f = refine(
            |p| scan.fidelity(C64::from_polar(p[0], p[1]), p[2]),
            &mut x,
            rep.fidelity,
            &[wide.alpha_step * 4.0, wide.phase_step, wide.t_step],
            &[(0.0, wide.alpha_max), (f64::NEG_INFINITY, f64::INFINITY), (wide.t_min, wide.t_max)],
        );
        rep.widened = Some(Box::new(ClassicalThreshold {
            fidelity: f,
            alpha: C64::from_polar(x[0], x[1]),
            t: x[2],
            boundary: x[0] >= wide.alpha_max - EDGE_TOL || at_edge(x[2], wide.t_min, wide.t_max),
            widened: None,
        }));
    }
    Ok(rep)
}

/// Scan ranges for the Gaussian threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianGrid {
    pub displacement_max: f64,
    pub displacement_step: f64,
    pub displacement_phase_step: f64,
    pub squeeze_max: f64,
    pub squeeze_step: f64,
    pub squeeze_phase_step: f64,
}

impl Default for GaussianGrid {
    fn default() -> Self {
        Self {
            displacement_max: 4.0,
            displacement_step: 0.05,
            displacement_phase_step: PI / 50.0,
            squeeze_max: 1.5,
            squeeze_step: 0.1,
            squeeze_phase_step: PI / 20.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianThreshold {
    pub fidelity: f64,
    pub displacement: C64,
    pub squeeze: C64,
    pub boundary: bool,
    pub widened: Option<Box<GaussianThreshold>>,
}

/// `S(ζ)v` for `S(ζ) = exp[(ζ*a² − ζa†²)/2]` in normal-ordered form.
fn squeeze_vector(zeta: C64, v: &DVector<C64>) -> DVector<C64> {
    let r = zeta.norm();
    if r == 0.0 {
        return v.clone();
    }
    let e = zeta / r;
    let th = r.tanh();
    let w = vecops::exp_lowering(C64::new(0.0, 0.0), e.conj() * (th / 2.0), v);
    let w = vecops::attenuate(1.0 / r.cosh(), &w) / C64::new(r.cosh().sqrt(), 0.0);
    vecops::exp_raising(C64::new(0.0, 0.0), -e * (th / 2.0), &w)
}

struct GaussianScan<'a> {
    lx: LadderExp,
    psi: &'a DVector<C64>,
    target: &'a DVector<C64>,
}

impl GaussianScan<'_> {
    /// `|⟨target|D(d)|s⟩|²` with `D(d) = e^{−|d|²/2} e^{da†} e^{−d*a}`.
    fn overlap(&self, s: &DVector<C64>, d: C64) -> f64 {
        let u = self.lx.lowering(&self.lx.powers(d.conj()), self.target);
        let z = self.lx.lowering(&self.lx.powers(-d.conj()), s);
        u.dotc(&z).norm_sqr() * (-d.norm_sqr()).exp()
    }

    fn fidelity(&self, d: C64, zeta: C64) -> f64 {
        self.overlap(&squeeze_vector(zeta, self.psi), d).min(1.0)
    }

    fn run(&self, grid: &GaussianGrid) -> GaussianThreshold {
        let nzr = (grid.squeeze_max / grid.squeeze_step).round() as usize;
        let nzp = (2.0 * PI / grid.squeeze_phase_step).round() as usize;
        let ndr = (grid.displacement_max / grid.displacement_step).round() as usize;
        let ndp = (2.0 * PI / grid.displacement_phase_step).round() as usize;
        let zetas: Vec<(f64, f64)> = std::iter::once((0.0, 0.0))
            .chain((1..=nzr).flat_map(|i| (0..nzp).map(move |j| (i as f64, j as f64))))
            .map(|(i, j)| (i * grid.squeeze_step, j * grid.squeeze_phase_step))
            .collect();
        let best = zetas
            .par_iter()
            .map(|&(zr, zp)| {
                let s = squeeze_vector(C64::from_polar(zr, zp), self.psi);
                let mut best = (self.overlap(&s, C64::new(0.0, 0.0)), 0.0, 0.0, zr, zp);
                for i in 1..=ndr {
                    let m = i as f64 * grid.displacement_step;
                    for j in 0..ndp {
                        let ph = j as f64 * grid.displacement_phase_step;
                        let f = self.overlap(&s, C64::from_polar(m, ph));
                        if f > best.0 {
                            best = (f, m, ph, zr, zp);
                        }
                    }
                }
                best
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((f64::NEG_INFINITY, 0.0, 0.0, 0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
        self.polish(grid, [best.1, best.2, best.3, best.4], best.0)
    }

    fn polish(&self, grid: &GaussianGrid, mut x: [f64; 4], f0: f64) -> GaussianThreshold {
        let f = refine(
            |p| self.fidelity(C64::from_polar(p[0], p[1]), C64::from_polar(p[2], p[3])),
            &mut x,
            f0,
            &[
                grid.displacement_step,
                grid.displacement_phase_step,
                grid.squeeze_step,
                grid.squeeze_phase_step,
            ],
            &[
                (0.0, grid.displacement_max),
                (f64::NEG_INFINITY, f64::INFINITY),
                (0.0, grid.squeeze_max),
                (f64::NEG_INFINITY, f64::INFINITY),
            ],
        );
        GaussianThreshold {
            fidelity: f,
            displacement: C64::from_polar(x[0], x[1]),
            squeeze: C64::from_polar(x[2], x[3]),
            boundary: x[0] >= grid.displacement_max - EDGE_TOL || x[2] >= grid.squeeze_max - EDGE_TOL,
            widened: None,
        }
    }
}

/// Best `|⟨target|D(d)S(ζ)|input⟩|²` over displacements and squeezings.
pub fn gaussian_threshold(input: &FockVector, target: &FockVector) -> Result<GaussianThreshold> {
    gaussian_threshold_with(input, target, &GaussianGrid::default())
}

pub fn gaussian_threshold_with(input: &FockVector, target: &FockVector, grid: &GaussianGrid) -> Result<GaussianThreshold> {
    fock::check_dims(input.dim(), target.dim())?;
    let psi = input.normalized()?.into_amplitudes();
    let tgt = target.normalized()?.into_amplitudes();
    let scan = GaussianScan {
        lx: LadderExp::new(input.dim())?,
        psi: &psi,
        target: &tgt,
    };
    let mut rep = scan.run(grid);
    if rep.boundary {
        let wide = GaussianGrid {
            displacement_max: 2.0 * grid.displacement_max,
            squeeze_max: 2.0 * grid.squeeze_max,
            ..grid.clone()
        };
        let x = [rep.displacement.norm(), rep.displacement.arg(), rep.squeeze.norm(), rep.squeeze.arg()];
        rep.widened = Some(Box::new(scan.polish(&wide, x, rep.fidelity)));
    }
    Ok(rep)
}

/// Both thresholds for one input and target.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub target_description: String,
    pub classical: ClassicalThreshold,
    pub gaussian: Option<GaussianThreshold>,
}

/// Post-selected fidelity of the corrected sharp-outcome gate, for every
/// `(T, η)` pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub t: f64,
    pub eta: f64,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EfficiencyCurve {
    pub lambda_minus: C64,
    pub lambda_plus: C64,
    pub points: Vec<SweepPoint>,
    /// Fidelity is non-decreasing in `η` at every stored `T`.
    pub valid: bool,
}

fn sharp_branches(input: &FockVector, lm: C64, lp: C64, t: f64) -> Result<SharpBranches> {
    let spec = xgate::resolve_gate_settings(lm, lp, t)?;
    SharpBranches::new(input, &spec)
}

/// Fidelity of the corrected gate against the unattenuated ideal output,
/// swept over transmission and ancilla efficiency.
pub fn fidelity_vs_t_sweep(
    input: &FockVector,
    lambda_minus: C64,
    lambda_plus: C64,
    etas: &[f64],
    t_grid: &[f64],
    dim: usize,
) -> Result<EfficiencyCurve> {
    fock::check_dims(input.dim(), dim)?;
    if let Some(&e) = etas.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return domain(format!("efficiency {e} outside [0, 1]"));
    }
    let psi = input.normalized()?;
    let target = gate_target(&psi, lambda_minus, lambda_plus)?.into_amplitudes();
    let rows = t_grid
        .par_iter()
        .map(|&t| {
            let br = sharp_branches(&psi, lambda_minus, lambda_plus, t)?;
            Ok(etas
                .iter()
                .map(|&eta| SweepPoint {
                    t,
                    eta,
                    fidelity: br.fidelity(eta, &target),
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sorted = etas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let valid = t_grid.iter().all(|&t| {
        let br = match sharp_branches(&psi, lambda_minus, lambda_plus, t) {
            Ok(b) => b,
            Err(_) => return false,
        };
        sorted
            .windows(2)
            .all(|w| br.fidelity(w[1], &target) >= br.fidelity(w[0], &target) - 1e-12)
    });
    Ok(EfficiencyCurve {
        lambda_minus,
        lambda_plus,
        points: rows.into_iter().flatten().collect(),
        valid,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalEfficiency {
    pub eta_c: f64,
    pub t: f64,
    /// The threshold is reached for some `η ≤ 1` on the grid.
    pub reachable: bool,
    /// Fidelity is monotone in `η` at every grid transmission.
    pub monotone: bool,
}

/// Smallest efficiency at which the corrected gate reaches `threshold`, at
/// transmission `t`, or `None` when even `η = 1` falls short.
///
/// The post-selected fidelity is a ratio of two functions affine in `η`,
/// `F(η) = (η n₁ + (1−η) n₀)/(η w₁ + (1−η) w₀)`, so the crossing is solved in
/// closed form rather than by bisection.
fn eta_crossing(br: &SharpBranches, target: &DVector<C64>, threshold: f64) -> (Option<f64>, bool) {
    let n1 = target.dotc(&br.one).norm_sqr();
    let n0 = target.dotc(&br.vac).norm_sqr();
    let w1 = br.one.norm_squared();
    let w0 = br.vac.norm_squared();
    let (f1, f0) = (n1 / w1, n0 / w0);
    // d/dη of the ratio has the sign of n₁w₀ − n₀w₁ everywhere.
    let monotone = n1 * w0 - n0 * w1 >= -1e-15 * (n1 * w0).abs().max(1e-300);
    if f1 < threshold {
        return (None, monotone);
    }
    if f0 >= threshold {
        return (Some(0.0), monotone);
    }
    let g1 = n1 - threshold * w1;
    let g0 = n0 - threshold * w0;
    (Some((-g0 / (g1 - g0)).clamp(0.0, 1.0)), monotone)
}

/// Minimum over transmissions of the efficiency at which the corrected gate
/// matches `threshold`. The grid `[0.05, 0.99]` in steps of 0.01 is refined by
/// golden-section search around the best grid point.
pub fn critical_efficiency(
    input: &FockVector,
    lambda_minus: C64,
    lambda_plus: C64,
    threshold: f64,
) -> Result<CriticalEfficiency> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return domain(format!("threshold {threshold} outside (0, 1)"));
    }
    let psi = input.normalized()?;
    let target = gate_target(&psi, lambda_minus, lambda_plus)?.into_amplitudes();
    let eval = |t: f64| -> Result<(Option<f64>, bool)> {
        Ok(eta_crossing(&sharp_branches(&psi, lambda_minus, lambda_plus, t)?, &target, threshold))
    };
    let grid: Vec<f64> = (5..=99).map(|i| i as f64 / 100.0).collect();
    let vals = grid.par_iter().map(|&t| eval(t)).collect::<Result<Vec<_>>>()?;
    let monotone = vals.iter().all(|v| v.1);
    let best = vals
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.0.map(|e| (i, e)))
        .fold(None, |acc: Option<(usize, f64)>, (i, e)| match acc {
            Some((_, b)) if b <= e => acc,
            _ => Some((i, e)),
        });
    let Some((i, e)) = best else {
        return Ok(CriticalEfficiency {
            eta_c: 1.0,
            t: f64::NAN,
            reachable: false,
            monotone,
        });
    };
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    let (t, neg) = golden_max(
        |t| match eval(t) {
            Ok((Some(e), _)) => -e,
            _ => f64::NEG_INFINITY,
        },
        lo,
        hi,
        1e-7,
    );
    let (eta_c, t) = if -neg < e { (-neg, t) } else { (e, grid[i]) };
    Ok(CriticalEfficiency {
        eta_c,
        t,
        reachable: true,
        monotone,
    })
}

/// One point of the window trade-off curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowPoint {
    pub epsilon: f64,
    pub t: f64,
    pub x0: f64,
    pub fidelity: f64,
    pub success: f64,
    pub nodes: usize,
}

/// Uncorrected homodyne branches at transmission `t`, with the window centre.
fn window_branches(psi: &FockVector, lambda: f64, eta: f64, t: f64) -> Result<(f64, WindowBranches)> {
    let lam = C64::new(lambda, 0.0);
    let spec = xgate::resolve_gate_settings(lam, lam, t)?.with_corrected(false);
    let x0 = spec.homodyne_x()?;
    Ok((x0, WindowBranches::new(psi, &spec, &AncillaModel::with_eta(eta)?)?))
}

fn window_point(br: &WindowBranches, target: &FockVector, t: f64, x0: f64, epsilon: f64) -> Result<WindowPoint> {
    let window = Window {
        x0,
        epsilon,
        n_points: 16,
    };
    let (p, f, n) = br.converge(&window, Some(target))?;
    Ok(WindowPoint {
        epsilon,
        t,
        x0,
        fidelity: f.unwrap_or(0.0),
        success: p,
        nodes: n,
    })
}

/// Fidelity and success probability of the uncorrected homodyne X-gate
/// `1 + λ(a + a†)` against the window half-width.
///
/// For each `ε` the transmission is scanned over `[0.3, 0.99]` in steps of
/// 0.01 and refined by golden-section search for the largest fidelity. The
/// window is centred on the sharp outcome `x₀ = R/(√2λ)`.
pub fn f_vs_p_curve(input: &FockVector, lambda: f64, eta: f64, epsilons: &[f64]) -> Result<Vec<WindowPoint>> {
    if lambda == 0.0 || !lambda.is_finite() {
        return domain("window curve needs a finite nonzero λ");
    }
    if let Some(&e) = epsilons.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
        return domain(format!("window half-width {e} outside (0, 1]"));
    }
    let psi = input.normalized()?;
    let lam = C64::new(lambda, 0.0);
    let target = gate_target(&psi, lam, lam)?;
    let grid: Vec<f64> = (30..=99).map(|i| i as f64 / 100.0).collect();
    let cached = grid
        .par_iter()
        .map(|&t| window_branches(&psi, lambda, eta, t))
        .collect::<Result<Vec<_>>>()?;
    let fresh = |t: f64, eps: f64| -> Result<WindowPoint> {
        let (x0, br) = window_branches(&psi, lambda, eta, t)?;
        window_point(&br, &target, t, x0, eps)
    };
    epsilons
        .par_iter()
        .map(|&eps| {
            let pts = grid
                .iter()
                .zip(&cached)
                .map(|(&t, (x0, br))| window_point(br, &target, t, *x0, eps))
                .collect::<Result<Vec<_>>>()?;
            let (i, _) = pts
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.fidelity > acc.1 { (i, p.fidelity) } else { acc });
            let lo = grid[i.saturating_sub(1)];
            let hi = grid[(i + 1).min(grid.len() - 1)];
            let (t, f) = golden_max(|t| fresh(t, eps).map_or(f64::NEG_INFINITY, |p| p.fidelity), lo, hi, 1e-5);
            if f > pts[i].fidelity {
                fresh(t, eps)
            } else {
                Ok(pts[i].clone())
            }
        })
        .collect()
}

/// `n` logarithmically spaced half-widths spanning `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Uniform grid from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
