//! Lowest Dirichlet eigenmodes of the fiber core.
//!
//! The operator is the spectral kinetic energy `λ_w² k² / 2n0` restricted to
//! grid cells inside the billiard (amplitudes vanish on every exterior cell).
//! Two solvers share it:
//!
//! * [`EigenSolver::Lobpcg`] (default): block LOBPCG preconditioned with the
//!   imaginary-time resolvent `(T + σ)⁻¹ = ∫ e^{−στ} e^{−τT} dτ`, applied in
//!   Fourier space. Converges in a few hundred block iterations on 512² grids.
//! * [`EigenSolver::ImaginaryTime`]: repeated imaginary-time split steps with
//!   ordered Gram–Schmidt deflation. Its fixed point carries an `O(√dτ)`
//!   boundary layer, so it is only practical on coarse grids.
//!
//! Eigenmodes are real, so two of them share one complex FFT.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::entanglement::{polar_spectrum, PolarGrid};
use crate::error::{Error, Result};
use crate::fft::{Fft2, FftScratch};
use crate::geometry::{rasterize_potential, BilliardShape, GridSpec, DEFAULT_V_OUT};
use crate::linalg::symmetric_eigen;
use crate::propagator::{BoundaryMode, Evolution, PropagatorPlan};
use crate::states::{ScalarField2D, DEFAULT_LAMBDA_W};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EigenSolver {
    Lobpcg,
    /// Imaginary-time step `dτ` in propagator units (`exp(−λ_w k² dτ / 2n0)`).
    ImaginaryTime { dtau: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenConfig {
    pub lambda_w: f64,
    pub n0: f64,
    /// Extra block vectors beyond the requested modes.
    pub guard: usize,
    /// LOBPCG: relative residual `‖Hψ − Eψ‖ / E`. Imaginary time: `|ΔE| / Δτ`.
    pub tol: f64,
    pub max_iter: usize,
    pub solver: EigenSolver,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            lambda_w: DEFAULT_LAMBDA_W,
            n0: 1.0,
            guard: 4,
            tol: 1e-7,
            max_iter: 3000,
            solver: EigenSolver::Lobpcg,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenmodeSet {
    pub shape: BilliardShape,
    /// Real, orthonormal, zero outside the billiard.
    pub modes: Vec<ScalarField2D>,
    /// Ascending, `λ_w² k² / 2n0`.
    pub energies: Vec<f64>,
    pub iterations: usize,
}

impl EigenmodeSet {
    /// Largest `|⟨ψ_i|ψ_j⟩ − δ_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.modes.iter().enumerate() {
            for (j, b) in self.modes.iter().enumerate().take(i + 1) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.inner(b) - target).norm());
            }
        }
        worst
    }
}

/// Spectral kinetic operator on interior cells, in units where `T = k²/2`.
struct InteriorOperator {
    nx: usize,
    ny: usize,
    interior: Vec<usize>,
    fft: Fft2,
    /// `k²/2` in transposed spectral layout.
    half_k2: Vec<f64>,
}

impl InteriorOperator {
    fn new(shape: &BilliardShape, grid: &GridSpec) -> Result<Self> {
        let pot = rasterize_potential(shape, grid, DEFAULT_V_OUT)?;
        let interior: Vec<usize> = pot
            .values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 0.0)
            .map(|(k, _)| k)
            .collect();
        let kx = grid.kx();
        let ky = grid.ky();
        let half_k2 = ky
            .iter()
            .flat_map(|&ky| kx.iter().map(move |&kx| 0.5 * (kx * kx + ky * ky)))
            .collect();
        Ok(Self {
            nx: grid.nx,
            ny: grid.ny,
            interior,
            fft: Fft2::new(grid.nx, grid.ny),
            half_k2,
        })
    }

    fn dim(&self) -> usize {
        self.interior.len()
    }

    /// Applies the Fourier multiplier `symbol(k²/2)` to each vector, masked.
    fn apply(&self, vs: &[Vec<f64>], symbol: impl Fn(f64) -> f64, scratch: &mut Scratch) -> Vec<Vec<f64>> {
        let scale = 1.0 / (self.nx * self.ny) as f64;
        let table: Vec<f64> = self.half_k2.iter().map(|&t| symbol(t) * scale).collect();
        let mut out = Vec::with_capacity(vs.len());
        for pair in vs.chunks(2) {
            self.scatter_pair(pair, &mut scratch.buf);
            self.fft.forward(&mut scratch.buf, &mut scratch.fft);
            for (c, &t) in scratch.buf.iter_mut().zip(&table) {
                *c *= t;
            }
            self.fft.inverse(&mut scratch.buf, &mut scratch.fft);
            self.gather_pair(pair.len(), &scratch.buf, &mut out);
        }
        out
    }

    fn scatter_pair(&self, pair: &[Vec<f64>], buf: &mut [Complex64]) {
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (k, &idx) in self.interior.iter().enumerate() {
            let im = if pair.len() > 1 { pair[1][k] } else { 0.0 };
            buf[idx] = Complex64::new(pair[0][k], im);
        }
    }

    fn gather_pair(&self, count: usize, buf: &[Complex64], out: &mut Vec<Vec<f64>>) {
        out.push(self.interior.iter().map(|&idx| buf[idx].re).collect());
        if count > 1 {
            out.push(self.interior.iter().map(|&idx| buf[idx].im).collect());
        }
    }

    /// Smooth, deterministic start block: monomials `x^a y^b` on interior cells.
    fn initial_block(&self, grid: &GridSpec, m: usize) -> Vec<Vec<f64>> {
        let mut exps = Vec::new();
        let mut degree = 0;
        while exps.len() < m {
            for a in (0..=degree).rev() {
                exps.push((a, degree - a));
            }
            degree += 1;
        }
        exps.truncate(m);
        exps.iter()
            .map(|&(a, b)| {
                self.interior
                    .iter()
                    .map(|&idx| {
                        let (i, j) = (idx / self.ny, idx % self.ny);
                        grid.x(i).powi(a as i32) * grid.y(j).powi(b as i32)
                    })
                    .collect()
            })
            .collect()
    }
}

struct Scratch {
    buf: Vec<Complex64>,
    fft: FftScratch,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

/// Orthonormalizes `vs` (with images `avs`) against the orthonormal `basis`
/// and among themselves by two rounds of Gram–Schmidt, dropping vectors that
/// become numerically dependent.
fn orthonormalize(
    basis: &[&Vec<f64>],
    basis_img: &[&Vec<f64>],
    vs: Vec<Vec<f64>>,
    avs: Option<Vec<Vec<f64>>>,
) -> (Vec<Vec<f64>>, Option<Vec<Vec<f64>>>) {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    let mut kept_img: Vec<Vec<f64>> = Vec::new();
    let has_img = avs.is_some();
    let mut avs = avs.map(|v| v.into_iter());
    for mut v in vs {
        let mut av = avs.as_mut().and_then(|it| it.next());
        let n0 = dot(&v, &v).sqrt();
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for (k, q) in basis.iter().enumerate() {
                let c = dot(q, &v);
                axpy(&mut v, -c, q);
                if let Some(av) = av.as_mut() {
                    axpy(av, -c, basis_img[k]);
                }
            }
            for (q, aq) in kept.iter().zip(kept_img.iter().map(Some).chain(std::iter::repeat(None))) {
                let c = dot(q, &v);
                axpy(&mut v, -c, q);
                if let (Some(av), Some(aq)) = (av.as_mut(), aq) {
                    axpy(av, -c, aq);
                }
            }
        }
        let n = dot(&v, &v).sqrt();
        if n <= 1e-10 * n0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= n);
        if let Some(mut av) = av {
            av.iter_mut().for_each(|x| *x /= n);
            kept_img.push(av);
        }
        kept.push(v);
    }
    (kept, has_img.then_some(kept_img))
}

/// `Σ_k c[k][col] v_k` for each requested column.
fn combine(vs: &[&Vec<f64>], c: &[f64], ncols_total: usize, cols: std::ops::Range<usize>, rows: std::ops::Range<usize>) -> Vec<Vec<f64>> {
    let dim = vs[0].len();
    cols.map(|col| {
        let mut out = vec![0.0; dim];
        for k in rows.clone() {
            let coef = c[k * ncols_total + col];
            if coef != 0.0 {
                axpy(&mut out, coef, vs[k]);
            }
        }
        out
    })
    .collect()
}

/// The `n_modes` lowest Dirichlet modes of the billiard on `grid`.
pub fn lowest_modes(shape: &BilliardShape, grid: &GridSpec, n_modes: usize, cfg: &EigenConfig) -> Result<EigenmodeSet> {
    if n_modes == 0 {
        return Err(Error::Domain("n_modes must be at least 1".into()));
    }
    if !(cfg.lambda_w > 0.0 && cfg.n0 > 0.0) {
        return Err(Error::Domain("lambda_w and n0 must be positive".into()));
    }
    let op = InteriorOperator::new(shape, grid)?;
    let m = n_modes + cfg.guard;
    if m > op.dim() {
        return Err(Error::Domain(format!(
            "{m} block vectors exceed the {} interior cells",
            op.dim()
        )));
    }
    let (vectors, values, iterations) = match cfg.solver {
        EigenSolver::Lobpcg => lobpcg(&op, grid, n_modes, m, cfg)?,
        EigenSolver::ImaginaryTime { dtau } => imaginary_time(&op, shape, grid, n_modes, m, dtau, cfg)?,
    };
    let energy_scale = cfg.lambda_w * cfg.lambda_w / cfg.n0;
    let inv_sqrt_area = 1.0 / grid.cell_area().sqrt();
    let mut modes = Vec::with_capacity(n_modes);
    for v in vectors.iter().take(n_modes) {
        // fix the sign: largest component positive
        let big = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        let sign = if big < 0.0 { -1.0 } else { 1.0 };
        let mut amp = Array2::<Complex64>::zeros((grid.nx, grid.ny));
        let slice = amp.as_slice_mut().expect("standard layout");
        for (&idx, &x) in op.interior.iter().zip(v) {
            slice[idx] = Complex64::new(sign * x * inv_sqrt_area, 0.0);
        }
        modes.push(ScalarField2D::new(*grid, amp, cfg.lambda_w)?);
    }
    Ok(EigenmodeSet {
        shape: *shape,
        modes,
        energies: values.iter().take(n_modes).map(|t| t * energy_scale).collect(),
        iterations,
    })
}

type Block = (Vec<Vec<f64>>, Vec<f64>, usize);

fn lobpcg(op: &InteriorOperator, grid: &GridSpec, n_modes: usize, m: usize, cfg: &EigenConfig) -> Result<Block> {
    let mut scratch = Scratch {
        buf: vec![Complex64::new(0.0, 0.0); op.nx * op.ny],
        fft: op.fft.scratch(),
    };
    let kinetic = |t: f64| t;
    let (x0, _) = orthonormalize(&[], &[], op.initial_block(grid, m), None);
    if x0.len() < m {
        return Err(Error::Domain("could not build an independent start block".into()));
    }
    let ax0 = op.apply(&x0, kinetic, &mut scratch);
    let x0_refs: Vec<&Vec<f64>> = x0.iter().collect();
    let ax0_refs: Vec<&Vec<f64>> = ax0.iter().collect();
    let (mut x, mut ax, mut theta) = rayleigh_ritz(&x0_refs, &ax0_refs, m)?;
    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut ap: Vec<Vec<f64>> = Vec::new();
    let mut worst = f64::INFINITY;
    for iter in 0..cfg.max_iter {
        let residuals: Vec<Vec<f64>> = x
            .iter()
            .zip(&ax)
            .zip(&theta)
            .map(|((xi, axi), &t)| axi.iter().zip(xi).map(|(a, b)| a - t * b).collect())
            .collect();
        worst = residuals
            .iter()
            .zip(&theta)
            .take(n_modes)
            .map(|(r, &t)| dot(r, r).sqrt() / t.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        if !worst.is_finite() {
            return Err(Error::NumericalBlowup { step: iter });
        }
        if worst < cfg.tol {
            return Ok((x, theta, iter));
        }
        let shift = theta[0].abs().max(1e-3);
        let w = op.apply(&residuals, |t| 1.0 / (t + shift), &mut scratch);
        let basis: Vec<&Vec<f64>> = x.iter().collect();
        let (w, _) = orthonormalize(&basis, &[], w, None);
        let aw = op.apply(&w, kinetic, &mut scratch);
        let mut fixed: Vec<&Vec<f64>> = x.iter().collect();
        fixed.extend(w.iter());
        let mut fixed_img: Vec<&Vec<f64>> = ax.iter().collect();
        fixed_img.extend(aw.iter());
        let (p_orth, ap_orth) = orthonormalize(&fixed, &fixed_img, std::mem::take(&mut p), Some(std::mem::take(&mut ap)));
        let ap_orth = ap_orth.unwrap_or_default();
        let mut s: Vec<&Vec<f64>> = fixed.clone();
        s.extend(p_orth.iter());
        let mut as_: Vec<&Vec<f64>> = fixed_img.clone();
        as_.extend(ap_orth.iter());
        let (nx_, nax, nth) = rayleigh_ritz(&s, &as_, m)?;
        // conjugate directions: new X minus its component along old X
        let coeffs = ritz_coefficients(&s, &nx_, x.len());
        p = combine(&s, &coeffs, m, 0..m, x.len()..s.len());
        ap = combine(&as_, &coeffs, m, 0..m, x.len()..s.len());
        x = nx_;
        ax = nax;
        theta = nth;
    }
    Err(Error::Convergence {
        iterations: cfg.max_iter,
        residual: worst,
    })
}

/// Projection coefficients of `targets` onto the orthonormal `s` (row = basis index).
fn ritz_coefficients(s: &[&Vec<f64>], targets: &[Vec<f64>], _n_x: usize) -> Vec<f64> {
    let m = targets.len();
    let mut c = vec![0.0; s.len() * m];
    for (k, sk) in s.iter().enumerate() {
        for (col, t) in targets.iter().enumerate() {
            c[k * m + col] = dot(sk, t);
        }
    }
    c
}

/// Ritz pairs of the `m` lowest values in the span of the orthonormal `s`.
fn rayleigh_ritz(s: &[&Vec<f64>], as_: &[&Vec<f64>], m: usize) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>)> {
    let (s, as_) = flatten(s, as_);
    let n = s.len();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = 0.5 * (dot(s[i], as_[j]) + dot(s[j], as_[i]));
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    let (vals, vecs) = symmetric_eigen(&g, n)?;
    let m = m.min(n);
    let x = combine(&s, &vecs, n, 0..m, 0..n);
    let ax = combine(&as_, &vecs, n, 0..m, 0..n);
    Ok((x, ax, vals[..m].to_vec()))
}

fn flatten<'a>(s: &[&'a Vec<f64>], as_: &[&'a Vec<f64>]) -> (Vec<&'a Vec<f64>>, Vec<&'a Vec<f64>>) {
    (s.to_vec(), as_.to_vec())
}

fn imaginary_time(
    op: &InteriorOperator,
    shape: &BilliardShape,
    grid: &GridSpec,
    n_modes: usize,
    m: usize,
    dtau: f64,
    cfg: &EigenConfig,
) -> Result<Block> {
    let pot = rasterize_potential(shape, grid, DEFAULT_V_OUT)?;
    let plan = PropagatorPlan::new(pot, cfg.lambda_w, dtau, Evolution::ImaginaryTau, BoundaryMode::DirichletMask)?
        .with_n0(cfg.n0)?;
    let mut scratch = Scratch {
        buf: vec![Complex64::new(0.0, 0.0); op.nx * op.ny],
        fft: op.fft.scratch(),
    };
    let energy_scale = cfg.lambda_w * cfg.lambda_w / cfg.n0;
    let rayleigh = |x: &[Vec<f64>], scratch: &mut Scratch| -> Vec<f64> {
        let ax = op.apply(x, |t| t, scratch);
        x.iter().zip(&ax).map(|(v, av)| dot(v, av) * energy_scale).collect()
    };
    let (mut x, _) = orthonormalize(&[], &[], op.initial_block(grid, m), None);
    if x.len() < m {
        return Err(Error::Domain("could not build an independent start block".into()));
    }
    let check_every = 10;
    let mut last = rayleigh(&x, &mut scratch);
    let mut worst = f64::INFINITY;
    for iter in 1..=cfg.max_iter {
        let mut next = Vec::with_capacity(m);
        for pair in x.chunks(2) {
            op.scatter_pair(pair, &mut scratch.buf);
            plan.step_raw(&mut scratch.buf, &mut scratch.fft);
            op.gather_pair(pair.len(), &scratch.buf, &mut next);
        }
        // ordered Gram–Schmidt: each vector deflated against all lower ones
        let (orth, _) = orthonormalize(&[], &[], next, None);
        if orth.len() < m {
            return Err(Error::NumericalBlowup { step: iter });
        }
        x = orth;
        if iter % check_every == 0 {
            let e = rayleigh(&x, &mut scratch);
            let span = check_every as f64 * dtau;
            worst = e
                .iter()
                .zip(&last)
                .take(n_modes)
                .map(|(a, b)| (a - b).abs() / span)
                .fold(0.0, f64::max);
            last = e;
            if !worst.is_finite() {
                return Err(Error::NumericalBlowup { step: iter });
            }
            if worst < cfg.tol {
                let mut order: Vec<usize> = (0..m).collect();
                order.sort_by(|&i, &j| last[i].total_cmp(&last[j]));
                let values = order.iter().map(|&i| last[i] / energy_scale).collect();
                let vectors = order.iter().map(|&i| x[i].clone()).collect();
                return Ok((vectors, values, iter));
            }
        }
    }
    Err(Error::Convergence {
        iterations: cfg.max_iter,
        residual: worst,
    })
}

/// One row of the eigenmode entanglement sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeEntropy {
    pub lambda: f64,
    pub mode: usize,
    pub energy: f64,
    pub s_vn: f64,
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub lambda: f64,
    pub rows: Vec<ModeEntropy>,
    pub modes: EigenmodeSet,
}

impl SweepPoint {
    pub fn mean_entropy(&self) -> f64 {
        self.rows.iter().map(|r| r.s_vn).sum::<f64>() / self.rows.len() as f64
    }
}

/// Eigenmodes and their radial–angular entropies at one deformation.
pub fn mode_entropies(lambda: f64, grid: &GridSpec, n_modes: usize, cfg: &EigenConfig, polar: &PolarGrid) -> Result<SweepPoint> {
    if lambda >= 0.5 {
        return Err(Error::Domain(format!("sweep deformation {lambda} must be below 0.5")));
    }
    let shape = BilliardShape::from_lambda(lambda)?;
    let modes = lowest_modes(&shape, grid, n_modes, cfg)?;
    let rows = modes
        .modes
        .iter()
        .zip(&modes.energies)
        .enumerate()
        .map(|(mode, (field, &energy))| {
            Ok(ModeEntropy {
                lambda,
                mode,
                energy,
                s_vn: polar_spectrum(field, polar, &shape)?.s_vn,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepPoint { lambda, rows, modes })
}

/// [`mode_entropies`] for every deformation, in parallel on the current rayon pool.
pub fn mode_entropy_sweep(lambdas: &[f64], grid: &GridSpec, n_modes: usize, cfg: &EigenConfig, polar: &PolarGrid) -> Result<Vec<SweepPoint>> {
    lambdas
        .par_iter()
        .map(|&l| mode_entropies(l, grid, n_modes, cfg, polar))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormalize_drops_dependent() {
        let a = vec![1.0, 0.0, 0.0];
        let b = vec![1.0, 1.0, 0.0];
        let c = vec![2.0, 1.0, 0.0];
        let (q, _) = orthonormalize(&[], &[], vec![a, b, c], None);
        assert_eq!(q.len(), 2);
        assert!(dot(&q[0], &q[1]).abs() < 1e-15);
    }

    #[test]
    fn circle_modes_coarse() {
        let grid = GridSpec::square(64, 1.5).unwrap();
        let shape = BilliardShape::circle();
        let set = lowest_modes(&shape, &grid, 4, &EigenConfig::default()).unwrap();
        assert!(set.orthonormality_error() < 1e-8);
        assert!(set.energies.windows(2).all(|w| w[0] <= w[1]));
        // second and third modes are the degenerate m = 1 pair
        let e = &set.energies;
        assert!((e[1] - e[2]).abs() < 1e-8 * e[1]);
        // exterior amplitudes vanish identically
        for f in &set.modes {
            for ((i, j), a) in f.amp.indexed_iter() {
                if !shape.contains(grid.x(i), grid.y(j)) {
                    assert_eq!(a.norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let grid = GridSpec::square(32, 1.5).unwrap();
        let shape = BilliardShape::circle();
        assert!(lowest_modes(&shape, &grid, 0, &EigenConfig::default()).is_err());
        let cfg = EigenConfig {
            max_iter: 2,
            ..EigenConfig::default()
        };
        assert!(matches!(lowest_modes(&shape, &grid, 3, &cfg), Err(Error::Convergence { .. })));
        let polar = PolarGrid::default();
        assert!(mode_entropies(0.5, &grid, 1, &EigenConfig::default(), &polar).is_err());
    }
}
