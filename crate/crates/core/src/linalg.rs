//! Dense eigenvalue routines: Hermitian spectra via Householder
//! tridiagonalization and implicit QL, and cyclic Jacobi for small real
//! symmetric matrices with eigenvectors.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues (ascending) of the `n × n` Hermitian matrix stored row-major in `a`.
/// The full matrix must be stored; `a` is overwritten.
pub fn hermitian_eigenvalues(a: &mut [Complex64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let (mut d, mut e) = tridiagonalize(a, n);
    // density kernels are graded with the large entries first; QL prefers
    // them last
    d.reverse();
    if n > 1 {
        e[..n - 1].reverse();
    }
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Reduces to a real symmetric tridiagonal `(diag, offdiag)` with the same
/// spectrum. `offdiag[i]` couples `i` and `i + 1`; `offdiag[n-1] = 0`.
fn tridiagonalize(a: &mut [Complex64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut e = vec![0.0; n];
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n.saturating_sub(1) {
        let m = n - k - 1;
        let off = k + 1;
        let xnorm = (0..m).map(|i| a[(off + i) * n + k].norm_sqr()).sum::<f64>().sqrt();
        if m == 1 || xnorm == 0.0 {
            e[k] = xnorm;
            continue;
        }
        let x0 = a[off * n + k];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        // v = x − α e₁ with α = −phase ‖x‖
        for i in 0..m {
            v[i] = a[(off + i) * n + k];
        }
        v[0] += phase * xnorm;
        let vnorm2 = 2.0 * xnorm * (xnorm + x0.norm());
        let tau = 2.0 / vnorm2;
        // p = τ B v, B the trailing block
        for i in 0..m {
            let row = &a[(off + i) * n + off..(off + i) * n + off + m];
            let mut acc = Complex64::new(0.0, 0.0);
            for (b, vj) in row.iter().zip(&v[..m]) {
                acc += b * vj;
            }
            w[i] = acc * tau;
        }
        let vp: f64 = (0..m).map(|i| (v[i].conj() * w[i]).re).sum();
        let kk = 0.5 * tau * vp;
        for i in 0..m {
            w[i] -= v[i] * kk;
        }
        // B ← B − v w† − w v†
        for i in 0..m {
            let (vi, wi) = (v[i], w[i]);
            let row = &mut a[(off + i) * n + off..(off + i) * n + off + m];
            for (j, b) in row.iter_mut().enumerate() {
                *b -= vi * w[j].conj() + wi * v[j].conj();
            }
        }
        e[k] = xnorm;
    }
    let d = (0..n).map(|i| a[i * n + i].re).collect();
    if n > 0 {
        e[n - 1] = 0.0;
    }
    (d, e)
}

/// Implicit-shift QL on a symmetric tridiagonal matrix; eigenvalues land in `d`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    // absolute floor at rounding level of the whole matrix, as in EISPACK
    // tql1: tiny trailing entries behind a large block never meet the
    // relative test
    let anorm = d.iter().zip(e.iter()).map(|(a, b)| a.abs() + b.abs()).fold(0.0, f64::max);
    let floor = f64::EPSILON * anorm;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Eigensolver(format!(
                    "tridiagonal QL did not converge for eigenvalue {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigen-decomposition of a small real symmetric matrix (row-major).
/// Returns ascending eigenvalues and the eigenvectors as columns of a row-major matrix.
pub fn symmetric_eigen(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let mut converged = false;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Eigensolver("Jacobi sweeps did not converge".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k * n + col] = v[k * n + src];
        }
    }
    Ok((values, vectors))
}
