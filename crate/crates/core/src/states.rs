//! Initial optical wavefunctions: coherent and squeezed coherent wavepackets
//! in the position representation, and their tensor products on a grid.

use std::f64::consts::{PI, SQRT_2};

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::geometry::GridSpec;

/// Wavelength used as the ħ analog unless configured otherwise.
pub const DEFAULT_LAMBDA_W: f64 = 0.01;

/// Norm allowed outside the grid before a packet counts as truncated.
pub const TRUNCATION_TOLERANCE: f64 = 1e-6;

/// One-mode squeezed coherent state parameters, `ζ = r e^{iθ_s}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezedParams {
    pub q: f64,
    pub p: f64,
    pub r: f64,
    pub theta_s: f64,
    pub lambda_w: f64,
}

impl SqueezedParams {
    pub fn coherent(q: f64, p: f64, lambda_w: f64) -> Result<Self> {
        Self::new(q, p, 0.0, 0.0, lambda_w)
    }

    pub fn new(q: f64, p: f64, r: f64, theta_s: f64, lambda_w: f64) -> Result<Self> {
        if !(lambda_w > 0.0 && lambda_w.is_finite()) {
            return Err(Error::Domain(format!("lambda_w = {lambda_w} must be positive")));
        }
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("squeeze magnitude r = {r} must be >= 0")));
        }
        if !(q.is_finite() && p.is_finite() && theta_s.is_finite()) {
            return Err(Error::Domain("non-finite squeezed-state parameter".into()));
        }
        Ok(Self {
            q,
            p,
            r,
            theta_s,
            lambda_w,
        })
    }

    /// Squeezing given as a complex `ζ`; a real negative `ζ` means `θ_s = π`.
    pub fn with_zeta(q: f64, p: f64, zeta: Complex64, lambda_w: f64) -> Result<Self> {
        let r = zeta.norm();
        let theta_s = if r == 0.0 { 0.0 } else { zeta.arg() };
        Self::new(q, p, r, theta_s, lambda_w)
    }

    /// Coherent amplitude `α = (q + i p) / √(2 λ_w)`.
    pub fn alpha(&self) -> Complex64 {
        Complex64::new(self.q, self.p) / (2.0 * self.lambda_w).sqrt()
    }

    fn squeeze_terms(&self) -> (Complex64, Complex64) {
        let e = Complex64::from_polar(1.0, self.theta_s);
        let c = Complex64::new(self.r.cosh(), 0.0);
        let s = e * self.r.sinh();
        (c + s, c - s)
    }

    /// Position variance `λ_w / (2 Re κ)` of `|ψ|²`, with `κ` the Gaussian exponent ratio.
    pub fn position_variance(&self) -> f64 {
        let (plus, minus) = self.squeeze_terms();
        self.lambda_w / (2.0 * (minus / plus).re)
    }

    /// Continuum value of the wavefunction at `x`.
    pub fn amplitude(&self, x: f64) -> Complex64 {
        let hb = self.lambda_w;
        let (plus, minus) = self.squeeze_terms();
        let prefactor = (1.0 / (PI * hb)).powf(0.25) / plus.sqrt();
        let d = x - self.q;
        let exponent = -(minus / plus) * (d * d / (2.0 * hb))
            + Complex64::new(0.0, self.p * (x - self.q / 2.0) / hb);
        prefactor * exponent.exp()
    }

    /// Continuum norm of `|ψ|²` lying outside `[lo, hi]`.
    pub fn mass_outside(&self, lo: f64, hi: f64) -> f64 {
        let s = self.position_variance().sqrt() * SQRT_2;
        0.5 * libm::erfc((self.q - lo) / s) + 0.5 * libm::erfc((hi - self.q) / s)
    }
}

/// Samples the squeezed coherent state on uniform points and renormalizes so
/// that `Σ |ψ|² Δx = 1`.
pub fn squeezed_coherent_1d(params: &SqueezedParams, axis: &[f64]) -> Result<Vec<Complex64>> {
    let dx = uniform_spacing(axis)?;
    let mut amp: Vec<Complex64> = axis.iter().map(|&x| params.amplitude(x)).collect();
    let norm = (amp.iter().map(|a| a.norm_sqr()).sum::<f64>() * dx).sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Domain("wavepacket has no weight on the sampled axis".into()));
    }
    amp.iter_mut().for_each(|a| *a /= norm);
    Ok(amp)
}

fn uniform_spacing(axis: &[f64]) -> Result<f64> {
    if axis.len() < 2 {
        return Err(Error::Domain("axis needs at least two samples".into()));
    }
    let dx = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
    let ok = dx > 0.0
        && axis
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dx).abs() <= 1e-9 * dx.abs().max(1.0));
    if !ok {
        return Err(Error::Domain("axis samples are not uniformly spaced".into()));
    }
    Ok(dx)
}

/// Complex optical wavefunction on a Cartesian grid (`amp[[i, j]]` at `(x_i, y_j)`).
#[derive(Clone, Debug)]
pub struct ScalarField2D {
    pub grid: GridSpec,
    pub amp: Array2<Complex64>,
    pub lambda_w: f64,
}

impl ScalarField2D {
    pub fn new(grid: GridSpec, amp: Array2<Complex64>, lambda_w: f64) -> Result<Self> {
        if amp.dim() != (grid.nx, grid.ny) {
            return Err(Error::Domain(format!(
                "amplitude shape {:?} does not match grid {}x{}",
                amp.dim(),
                grid.nx,
                grid.ny
            )));
        }
        Ok(Self { grid, amp, lambda_w })
    }

    /// Evaluates `f(x, y)` at every cell center and normalizes.
    pub fn from_fn(grid: GridSpec, lambda_w: f64, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let xs = grid.xs();
        let ys = grid.ys();
        let amp = Array2::from_shape_fn((grid.nx, grid.ny), |(i, j)| f(xs[i], ys[j]));
        let mut field = Self::new(grid, amp, lambda_w)?;
        field.normalize()?;
        Ok(field)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Domain(format!("cannot normalize field of norm {n}")));
        }
        self.amp.mapv_inplace(|a| a / n);
        Ok(())
    }

    pub fn density(&self) -> Array2<f64> {
        self.amp.mapv(|a| a.norm_sqr())
    }

    pub fn inner(&self, other: &ScalarField2D) -> Complex64 {
        self.amp
            .iter()
            .zip(other.amp.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.cell_area()
    }

    /// `(⟨x⟩, ⟨y⟩)` with respect to the normalized density.
    pub fn mean_position(&self) -> [f64; 2] {
        let xs = self.grid.xs();
        let ys = self.grid.ys();
        let mut acc = [0.0; 3];
        for ((i, j), a) in self.amp.indexed_iter() {
            let w = a.norm_sqr();
            acc[0] += w * xs[i];
            acc[1] += w * ys[j];
            acc[2] += w;
        }
        [acc[0] / acc[2], acc[1] / acc[2]]
    }

    /// Position variances `(⟨x²⟩ − ⟨x⟩², ⟨y²⟩ − ⟨y⟩²)`.
    pub fn position_variance(&self) -> [f64; 2] {
        let [mx, my] = self.mean_position();
        let xs = self.grid.xs();
        let ys = self.grid.ys();
        let mut acc = [0.0; 3];
        for ((i, j), a) in self.amp.indexed_iter() {
            let w = a.norm_sqr();
            acc[0] += w * (xs[i] - mx).powi(2);
            acc[1] += w * (ys[j] - my).powi(2);
            acc[2] += w;
        }
        [acc[0] / acc[2], acc[1] / acc[2]]
    }

    /// Momentum moments from the spectrum: `([⟨p_x⟩, ⟨p_y⟩], [Var p_x, Var p_y])`
    /// with `p = λ_w k`.
    pub fn momentum_moments(&self) -> ([f64; 2], [f64; 2]) {
        let g = &self.grid;
        let fft = Fft2::new(g.nx, g.ny);
        let mut scratch = fft.scratch();
        let mut buf: Vec<Complex64> = self.amp.iter().copied().collect();
        fft.forward(&mut buf, &mut scratch);
        let kx = g.kx();
        let ky = g.ky();
        let mut m = [0.0; 5];
        for (jy, row) in buf.chunks(g.nx).enumerate() {
            for (ix, c) in row.iter().enumerate() {
                let w = c.norm_sqr();
                m[0] += w;
                m[1] += w * kx[ix];
                m[2] += w * ky[jy];
                m[3] += w * kx[ix] * kx[ix];
                m[4] += w * ky[jy] * ky[jy];
            }
        }
        let l = self.lambda_w;
        let mean = [l * m[1] / m[0], l * m[2] / m[0]];
        let var = [
            l * l * m[3] / m[0] - mean[0] * mean[0],
            l * l * m[4] / m[0] - mean[1] * mean[1],
        ];
        (mean, var)
    }
}

/// Tensor product `ψ_x(x_i) ψ_y(y_j)` on `grid`, normalized.
///
/// When more than [`TRUNCATION_TOLERANCE`] of the continuum packet falls
/// outside the grid a warning is logged, or an error returned if `strict`.
pub fn product_state_2d(
    params_x: &SqueezedParams,
    params_y: &SqueezedParams,
    grid: &GridSpec,
    strict: bool,
) -> Result<ScalarField2D> {
    if params_x.lambda_w != params_y.lambda_w {
        return Err(Error::Domain(format!(
            "axes use different lambda_w ({} vs {})",
            params_x.lambda_w, params_y.lambda_w
        )));
    }
    let mx = params_x.mass_outside(grid.x_min, grid.x_max);
    let my = params_y.mass_outside(grid.y_min, grid.y_max);
    let outside = 1.0 - (1.0 - mx) * (1.0 - my);
    if outside > TRUNCATION_TOLERANCE {
        if strict {
            return Err(Error::Truncation { mass: outside });
        }
        log::warn!("initial packet truncated: {outside:e} of its norm lies outside the grid");
    }
    let fx = squeezed_coherent_1d(params_x, &grid.xs())?;
    let fy = squeezed_coherent_1d(params_y, &grid.ys())?;
    let amp = Array2::from_shape_fn((grid.nx, grid.ny), |(i, j)| fx[i] * fy[j]);
    let mut field = ScalarField2D::new(*grid, amp, params_x.lambda_w)?;
    field.normalize()?;
    Ok(field)
}
