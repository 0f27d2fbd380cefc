//! Dense complex polynomials in ascending-power coefficient form.

use nalgebra::DMatrix;
use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{domain, Error, Result};

pub fn mul(p: &[C64], q: &[C64]) -> Vec<C64> {
    if p.is_empty() || q.is_empty() {
        return Vec::new();
    }
    let mut out = vec![C64::new(0.0, 0.0); p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

pub fn eval(p: &[C64], x: C64) -> C64 {
    p.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * x + c)
}

fn derivative(p: &[C64]) -> Vec<C64> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64)
        .collect()
}

/// Strips trailing coefficients that are exactly zero.
pub fn trim(p: &[C64]) -> &[C64] {
    let mut n = p.len();
    while n > 0 && p[n - 1] == C64::new(0.0, 0.0) {
        n -= 1;
    }
    &p[..n]
}

/// `scale · Π (1 + λ_k x)` expanded to ascending coefficients.
pub fn from_factors(scale: C64, lambdas: &[C64]) -> Vec<C64> {
    lambdas
        .iter()
        .fold(vec![scale], |acc, &l| mul(&acc, &[C64::new(1.0, 0.0), l]))
}

/// `Σ c_k M^k` by Horner's rule.
pub fn apply_to_operator(p: &[C64], m: &DMatrix<C64>) -> DMatrix<C64> {
    let d = m.nrows();
    let mut acc = DMatrix::zeros(d, d);
    for c in p.iter().rev() {
        acc = &acc * m;
        for i in 0..d {
            acc[(i, i)] += c;
        }
    }
    acc
}

/// `Σ c_k M^k v` by Horner's rule on the vector.
pub fn apply_to_vector(p: &[C64], m: &DMatrix<C64>, v: &DVector<C64>) -> DVector<C64> {
    let mut acc = DVector::zeros(v.len());
    for c in p.iter().rev() {
        acc = m * acc + v * *c;
    }
    acc
}

/// Scales rows and columns by powers of two so their norms are comparable.
fn balance(m: &mut DMatrix<C64>) {
    let n = m.nrows();
    let radix = 2.0f64;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].l1_norm();
                    r += m[(i, j)].l1_norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of the balanced companion matrix of a trimmed polynomial.
fn companion_eigenvalues(p: &[C64]) -> Option<Vec<C64>> {
    let n = p.len() - 1;
    let lead = p[n];
    let mut comp = DMatrix::<C64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..n {
        comp[(i, n - 1)] = -p[i] / lead;
    }
    balance(&mut comp);
    let schur = nalgebra::Schur::try_new(comp, 1e-15, 10_000)?;
    schur.eigenvalues().map(|e| e.iter().copied().collect())
}

/// Coefficients of `p(y + s)`.
fn taylor_shift(p: &[C64], s: C64) -> Vec<C64> {
    let mut q = p.to_vec();
    let n = q.len();
    for k in 0..n {
        for j in (k..n - 1).rev() {
            let t = q[j + 1] * s;
            q[j] += t;
        }
    }
    q
}

/// Roots of the polynomial from eigenvalues of its balanced companion
/// matrix, each refined by a few Newton steps on the original coefficients.
///
/// Roots symmetric about the origin can stall the unshifted QR sweep; the
/// variable is then translated by a generic complex offset and solved again.
pub fn roots(p: &[C64]) -> Result<Vec<C64>> {
    let p = trim(p);
    if p.len() < 2 {
        return domain("polynomial of degree 0 has no roots");
    }
    let n = p.len() - 1;
    let rho = if p[0].norm() > 0.0 {
        (p[0].norm() / p[n].norm()).powf(1.0 / n as f64)
    } else {
        1.0
    };
    let eig = companion_eigenvalues(p)
        .or_else(|| {
            (1..=4).find_map(|k| {
                let s = C64::from_polar(0.3 * k as f64 * rho, 0.7 + 1.3 * k as f64);
                companion_eigenvalues(&taylor_shift(p, s)).map(|e| e.into_iter().map(|z| z + s).collect())
            })
        })
        .ok_or_else(|| Error::Domain("companion eigenvalue iteration did not converge".into()))?;
    let dp = derivative(p);
    Ok(eig
        .into_iter()
        .map(|z0| {
            let mut z = z0;
            let mut best = eval(p, z).norm();
            for _ in 0..4 {
                let d = eval(&dp, z);
                if d.norm() == 0.0 {
                    break;
                }
                let cand = z - eval(p, z) / d;
                let r = eval(p, cand).norm();
                if r < best {
                    best = r;
                    z = cand;
                } else {
                    break;
                }
            }
            z
        })
        .collect())
}
