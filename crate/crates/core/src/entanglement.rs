//! Radial–angular entanglement of a transverse field.
//!
//! A Cartesian field is resampled on a polar grid about the origin, the angle
//! is traced out to form the radial reduced density kernel
//!
//! ```text
//! ρ(r, r') = ∫ ψ(r, θ) ψ*(r', θ) √(r r') dθ
//! ```
//!
//! and its spectrum is found by a Nyström discretization of
//! `∫ ρ(r, r') φ(r') dr' = η φ(r)`. The entropy is `−Σ η ln η` (nats).
//! [`entropy_via_svd`] reaches the same numbers through singular values of the
//! Jacobian-weighted amplitude matrix and serves as an independent check.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::BilliardShape;
use crate::linalg::hermitian_eigenvalues;
use crate::states::ScalarField2D;

/// Eigenvalues below this are an error rather than round-off.
pub const NEGATIVE_EIGENVALUE_TOLERANCE: f64 = -1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarGrid {
    pub n_r: usize,
    pub n_theta: usize,
    pub r_max: f64,
}

impl Default for PolarGrid {
    fn default() -> Self {
        Self {
            n_r: 256,
            n_theta: 256,
            r_max: 1.35,
        }
    }
}

impl PolarGrid {
    pub fn new(n_r: usize, n_theta: usize, r_max: f64) -> Result<Self> {
        if n_r < 2 || n_theta < 2 {
            return Err(Error::Domain(format!(
                "polar grid {n_r}x{n_theta} needs at least two samples per axis"
            )));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::Domain(format!("r_max = {r_max} must be positive")));
        }
        Ok(Self { n_r, n_theta, r_max })
    }

    pub fn dr(&self) -> f64 {
        self.r_max / self.n_r as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    /// Cell-centered radii, never zero.
    pub fn r(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dr()
    }

    pub fn theta(&self, k: usize) -> f64 {
        k as f64 * self.dtheta()
    }
}

/// Raw `ψ(r_i, θ_k)` on a [`PolarGrid`]; the `√r` Jacobian is not applied.
#[derive(Clone, Debug)]
pub struct PolarField {
    pub polar: PolarGrid,
    pub amp: Array2<Complex64>,
    /// `Σ|ψ|² r Δr Δθ` before renormalization.
    pub raw_norm: f64,
}

impl PolarField {
    /// Wraps amplitudes and renormalizes them in the polar measure.
    pub fn new(polar: PolarGrid, amp: Array2<Complex64>) -> Result<Self> {
        if amp.dim() != (polar.n_r, polar.n_theta) {
            return Err(Error::Domain(format!(
                "polar amplitude shape {:?} does not match {}x{}",
                amp.dim(),
                polar.n_r,
                polar.n_theta
            )));
        }
        let mut pf = Self {
            polar,
            amp,
            raw_norm: 0.0,
        };
        pf.raw_norm = pf.norm_sqr();
        if !(pf.raw_norm > 0.0 && pf.raw_norm.is_finite()) {
            return Err(Error::Domain(format!(
                "polar field has norm {} and cannot be normalized",
                pf.raw_norm
            )));
        }
        let s = 1.0 / pf.raw_norm.sqrt();
        pf.amp.mapv_inplace(|a| a * s);
        Ok(pf)
    }

    pub fn from_fn(polar: PolarGrid, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let amp = Array2::from_shape_fn((polar.n_r, polar.n_theta), |(i, k)| f(polar.r(i), polar.theta(k)));
        Self::new(polar, amp)
    }

    pub fn norm_sqr(&self) -> f64 {
        let p = &self.polar;
        self.amp
            .indexed_iter()
            .map(|((i, _), a)| a.norm_sqr() * p.r(i))
            .sum::<f64>()
            * p.dr()
            * p.dtheta()
    }

    /// `X[i][k] = ψ(r_i, θ_k) √(r_i Δr Δθ)`, whose Gram matrix `X X†` is the
    /// Nyström matrix of the reduced kernel.
    fn weighted(&self) -> DMatrix<Complex64> {
        let p = &self.polar;
        let w = p.dr() * p.dtheta();
        DMatrix::from_fn(p.n_r, p.n_theta, |i, k| self.amp[[i, k]] * (p.r(i) * w).sqrt())
    }
}

/// Bilinear resampling of a Cartesian field onto `polar` (centered at the origin),
/// renormalized in the polar measure.
pub fn to_polar(field: &ScalarField2D, polar: &PolarGrid, shape: &BilliardShape) -> Result<PolarField> {
    let required = shape.max_radius();
    if polar.r_max < required {
        return Err(Error::Coverage {
            r_max: polar.r_max,
            required,
        });
    }
    let g = &field.grid;
    let (dx, dy) = (g.dx(), g.dy());
    let sample = |x: f64, y: f64| -> Complex64 {
        let fx = (x - g.x_min) / dx - 0.5;
        let fy = (y - g.y_min) / dy - 0.5;
        let (i0, j0) = (fx.floor(), fy.floor());
        let (tx, ty) = (fx - i0, fy - j0);
        let (i0, j0) = (i0 as isize, j0 as isize);
        let at = |i: isize, j: isize| -> Complex64 {
            if i < 0 || j < 0 || i >= g.nx as isize || j >= g.ny as isize {
                Complex64::new(0.0, 0.0)
            } else {
                field.amp[[i as usize, j as usize]]
            }
        };
        at(i0, j0) * ((1.0 - tx) * (1.0 - ty))
            + at(i0 + 1, j0) * (tx * (1.0 - ty))
            + at(i0, j0 + 1) * ((1.0 - tx) * ty)
            + at(i0 + 1, j0 + 1) * (tx * ty)
    };
    let trig: Vec<(f64, f64)> = (0..polar.n_theta).map(|k| polar.theta(k).sin_cos()).collect();
    let amp = Array2::from_shape_fn((polar.n_r, polar.n_theta), |(i, k)| {
        let r = polar.r(i);
        let (s, c) = trig[k];
        sample(r * c, r * s)
    });
    PolarField::new(*polar, amp)
}

/// Discretized `ρ(r_i, r_j)`, including `√(r_i r_j)` and the `Δθ` weight.
#[derive(Clone, Debug)]
pub struct ReducedDensity {
    pub polar: PolarGrid,
    /// Row-major `n_r × n_r`.
    pub kernel: Vec<Complex64>,
}

impl ReducedDensity {
    pub fn n(&self) -> usize {
        self.polar.n_r
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.kernel[i * self.n() + j]
    }

    /// `Σ ρ(r_i, r_i) Δr`.
    pub fn trace(&self) -> f64 {
        (0..self.n()).map(|i| self.at(i, i).re).sum::<f64>() * self.polar.dr()
    }

    /// `max |ρ_ij − conj(ρ_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((self.at(i, j) - self.at(j, i).conj()).norm());
            }
        }
        worst
    }
}

/// Traces out the angle.
pub fn reduce_over_theta(pf: &PolarField) -> ReducedDensity {
    let p = pf.polar;
    let (n, m) = (p.n_r, p.n_theta);
    // rows y_i = ψ(r_i, ·) √(r_i Δθ)
    let rows: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            let s = (p.r(i) * p.dtheta()).sqrt();
            (0..m).map(|k| pf.amp[[i, k]] * s).collect()
        })
        .collect();
    let mut kernel = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..=i {
            let v: Complex64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b.conj()).sum();
            kernel[i * n + j] = v;
            kernel[j * n + i] = v.conj();
        }
    }
    ReducedDensity { polar: p, kernel }
}

/// Schmidt weights and the von Neumann entropy derived from them.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtSpectrum {
    /// Descending, non-negative, summing to one.
    pub eta: Vec<f64>,
    pub s_vn: f64,
}

impl SchmidtSpectrum {
    /// Clamps, renormalizes and sorts raw eigenvalues; anything below
    /// [`NEGATIVE_EIGENVALUE_TOLERANCE`] is rejected.
    pub fn from_eigenvalues(mut eta: Vec<f64>) -> Result<Self> {
        if let Some(&min) = eta.iter().min_by(|a, b| a.total_cmp(b)) {
            if min < NEGATIVE_EIGENVALUE_TOLERANCE || !min.is_finite() {
                return Err(Error::NegativeEigenvalue { value: min });
            }
        }
        eta.iter_mut().for_each(|e| *e = e.max(0.0));
        let total: f64 = eta.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Eigensolver(format!("spectrum sums to {total}")));
        }
        eta.iter_mut().for_each(|e| *e /= total);
        eta.sort_by(|a, b| b.total_cmp(a));
        let s_vn = von_neumann_entropy(&eta);
        Ok(Self { eta, s_vn })
    }

    /// Number of Schmidt weights above `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        self.eta.iter().filter(|&&e| e > threshold).count()
    }
}

/// `−Σ η ln η` with `0 ln 0 = 0`.
pub fn von_neumann_entropy(eta: &[f64]) -> f64 {
    -eta.iter().filter(|&&e| e > 0.0).map(|&e| e * e.ln()).sum::<f64>()
}

/// Nyström spectrum of the reduced kernel, `M_ij = ρ(r_i, r_j) Δr`.
pub fn schmidt_spectrum(rho: &ReducedDensity) -> Result<SchmidtSpectrum> {
    let n = rho.n();
    let dr = rho.polar.dr();
    let mut m: Vec<Complex64> = rho.kernel.iter().map(|k| k * dr).collect();
    let eta = hermitian_eigenvalues(&mut m, n)?;
    SchmidtSpectrum::from_eigenvalues(eta)
}

/// Entropy from squared singular values of `ψ(r_i, θ_k) √(r_i Δr Δθ)`.
pub fn entropy_via_svd(pf: &PolarField) -> Result<f64> {
    let sv = pf.weighted().singular_values();
    let eta: Vec<f64> = sv.iter().map(|s| s * s).collect();
    Ok(SchmidtSpectrum::from_eigenvalues(eta)?.s_vn)
}

/// Convenience: resample, reduce and diagonalize.
pub fn polar_spectrum(field: &ScalarField2D, polar: &PolarGrid, shape: &BilliardShape) -> Result<SchmidtSpectrum> {
    let pf = to_polar(field, polar, shape)?;
    schmidt_spectrum(&reduce_over_theta(&pf))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeRow {
    pub z: f64,
    pub s_vn: f64,
    pub norm: f64,
}

/// Collects `(z, S_vn, norm)` rows while a field propagates and tracks `S_M`.
#[derive(Clone, Debug)]
pub struct EntanglementProbe {
    polar: PolarGrid,
    shape: BilliardShape,
    rows: Vec<ProbeRow>,
}

impl EntanglementProbe {
    pub fn new(polar: PolarGrid, shape: BilliardShape) -> Result<Self> {
        if polar.r_max < shape.max_radius() {
            return Err(Error::Coverage {
                r_max: polar.r_max,
                required: shape.max_radius(),
            });
        }
        Ok(Self {
            polar,
            shape,
            rows: Vec::new(),
        })
    }

    pub fn record(&mut self, z: f64, field: &ScalarField2D) -> Result<ProbeRow> {
        let s_vn = polar_spectrum(field, &self.polar, &self.shape)?.s_vn;
        let row = ProbeRow {
            z,
            s_vn,
            norm: field.norm(),
        };
        self.rows.push(row);
        Ok(row)
    }

    pub fn rows(&self) -> &[ProbeRow] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<ProbeRow> {
        self.rows
    }

    /// `S_M`, the largest sampled entropy.
    pub fn max_entropy(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.s_vn).max_by(f64::total_cmp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridSpec;

    fn small() -> PolarGrid {
        PolarGrid::new(48, 40, 1.35).unwrap()
    }

    #[test]
    fn pure_and_uniform_spectra() {
        let s = SchmidtSpectrum::from_eigenvalues(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.s_vn, 0.0);
        for k in [2usize, 3, 7, 16] {
            let s = SchmidtSpectrum::from_eigenvalues(vec![1.0 / k as f64; k]).unwrap();
            assert!((s.s_vn - (k as f64).ln()).abs() < 1e-14);
        }
        let s = SchmidtSpectrum::from_eigenvalues(vec![0.2, -1e-12, 0.6]).unwrap();
        assert_eq!(s.eta[2], 0.0);
        assert!((s.eta[0] - 0.75).abs() < 1e-15);
        assert!(matches!(
            SchmidtSpectrum::from_eigenvalues(vec![0.5, -1e-6, 0.5]),
            Err(Error::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn product_input_has_rank_one_kernel() {
        let pf = PolarField::from_fn(small(), |r, t| {
            Complex64::new((-(r - 0.4f64).powi(2) * 10.0).exp(), 0.0) * Complex64::new(1.0 + 0.3 * t.cos(), 0.2 * (2.0 * t).sin())
        })
        .unwrap();
        let rho = reduce_over_theta(&pf);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!(rho.hermiticity_error() < 1e-12);
        let spec = schmidt_spectrum(&rho).unwrap();
        assert_eq!(spec.rank(1e-12), 1);
        assert!(spec.s_vn < 1e-10);
        assert!(entropy_via_svd(&pf).unwrap() < 1e-10);
    }

    #[test]
    fn nystrom_and_svd_agree() {
        let pf = PolarField::from_fn(small(), |r, t| {
            Complex64::new((3.0 * r * t.cos()).sin() + r * r, (2.0 * t + r).cos() * r)
        })
        .unwrap();
        let a = schmidt_spectrum(&reduce_over_theta(&pf)).unwrap().s_vn;
        let b = entropy_via_svd(&pf).unwrap();
        assert!(a > 0.1);
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn radial_field_is_theta_uniform() {
        let g = GridSpec::square(256, 1.5).unwrap();
        let f = ScalarField2D::from_fn(g, 0.01, |x, y| Complex64::new((-(x * x + y * y) * 8.0).exp(), 0.0)).unwrap();
        let polar = PolarGrid::new(128, 128, 1.35).unwrap();
        let pf = to_polar(&f, &polar, &BilliardShape::circle()).unwrap();
        assert!((pf.raw_norm - 1.0).abs() < 1e-3, "{}", pf.raw_norm);
        for i in 0..polar.n_r {
            let row = pf.amp.row(i);
            let mean = row.iter().sum::<Complex64>() / polar.n_theta as f64;
            let peak = pf.amp.iter().map(|a| a.norm()).fold(0.0, f64::max);
            assert!(row.iter().all(|a| (a - mean).norm() < 2e-3 * peak));
        }
        let spec = schmidt_spectrum(&reduce_over_theta(&pf)).unwrap();
        assert!(spec.s_vn < 1e-4);
    }

    #[test]
    fn coverage_error() {
        let g = GridSpec::square(32, 1.5).unwrap();
        let f = ScalarField2D::from_fn(g, 0.01, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        let shape = BilliardShape::from_lambda(0.5).unwrap();
        let polar = PolarGrid::new(32, 32, 1.2).unwrap();
        assert!(matches!(to_polar(&f, &polar, &shape), Err(Error::Coverage { .. })));
        assert!(EntanglementProbe::new(polar, shape).is_err());
    }

    #[test]
    fn entropy_invariant_under_phase_and_rotation() {
        let polar = small();
        let f = |r: f64, t: f64| Complex64::new((2.0 * r * t.cos()).cos() * r, (r * t.sin()).sin());
        let base = PolarField::from_fn(polar, f).unwrap();
        let s0 = schmidt_spectrum(&reduce_over_theta(&base)).unwrap().s_vn;
        let phased = PolarField::from_fn(polar, |r, t| f(r, t) * Complex64::from_polar(1.0, 0.77)).unwrap();
        let shift = 5.0 * polar.dtheta();
        let rotated = PolarField::from_fn(polar, |r, t| f(r, t + shift)).unwrap();
        for other in [phased, rotated] {
            let s = schmidt_spectrum(&reduce_over_theta(&other)).unwrap().s_vn;
            assert!((s - s0).abs() < 1e-9);
        }
    }
}
