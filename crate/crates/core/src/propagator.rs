//! Strang-split Fourier propagation of the paraxial (optical Schrödinger) equation
//!
//! ```text
//! i λ_w ∂ψ/∂z = −(λ_w² / 2 n0) ∇²ψ + U(x, y) ψ
//! ```
//!
//! with `z` playing the role of time and the wavelength `λ_w` that of ħ.
//! A step applies half a potential factor, the full kinetic factor in Fourier
//! space, and another half potential factor. In imaginary-τ mode the factors
//! are decaying exponentials and the field is renormalized after every step.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{Fft2, FftScratch};
use crate::geometry::PotentialField;
use crate::states::ScalarField2D;

/// Default real-z step for `λ_w = 0.01` on the default grid.
pub const DEFAULT_DZ: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Evolution {
    RealZ,
    ImaginaryTau,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryMode {
    /// Multiply by `exp(−i U dz / 2λ_w)`; the exterior value is taken as given.
    PhasePotential,
    /// Zero every amplitude where the potential is nonzero.
    DirichletMask,
}

impl std::str::FromStr for BoundaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase_potential" => Ok(Self::PhasePotential),
            "dirichlet_mask" => Ok(Self::DirichletMask),
            other => Err(Error::Config(format!(
                "unknown boundary_mode '{other}' (expected phase_potential or dirichlet_mask)"
            ))),
        }
    }
}

impl std::fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::PhasePotential => "phase_potential",
            Self::DirichletMask => "dirichlet_mask",
        })
    }
}

/// Immutable, shareable step tables.
#[derive(Clone, Debug)]
pub struct PropagatorPlan {
    potential: PotentialField,
    lambda_w: f64,
    n0: f64,
    dz: f64,
    evolution: Evolution,
    boundary: BoundaryMode,
    fft: Fft2,
    /// Kinetic factor in transposed spectral layout, inverse-FFT scale folded in.
    kinetic: Vec<Complex64>,
    /// Half-step potential factor (phase potential) or 0/1 mask (Dirichlet).
    half_potential: Vec<Complex64>,
    /// `λ_w² k² / 2 n0` in transposed spectral layout.
    kinetic_energy: Vec<f64>,
}

impl PropagatorPlan {
    pub fn new(
        potential: PotentialField,
        lambda_w: f64,
        dz: f64,
        evolution: Evolution,
        boundary: BoundaryMode,
    ) -> Result<Self> {
        if !(dz > 0.0 && dz.is_finite()) {
            return Err(Error::Domain(format!("step dz = {dz} must be positive")));
        }
        Self::build(potential, lambda_w, 1.0, dz, evolution, boundary)
    }

    /// Same plan with refractive index `n0` (default 1).
    pub fn with_n0(self, n0: f64) -> Result<Self> {
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(Error::Domain(format!("n0 = {n0} must be positive")));
        }
        Self::build(self.potential, self.lambda_w, n0, self.dz, self.evolution, self.boundary)
    }

    /// Plan stepping backwards in `z` (real-z only).
    pub fn reversed(&self) -> Result<Self> {
        if self.evolution != Evolution::RealZ {
            return Err(Error::Domain("imaginary-time evolution cannot be reversed".into()));
        }
        Self::build(
            self.potential.clone(),
            self.lambda_w,
            self.n0,
            -self.dz,
            self.evolution,
            self.boundary,
        )
    }

    fn build(
        potential: PotentialField,
        lambda_w: f64,
        n0: f64,
        dz: f64,
        evolution: Evolution,
        boundary: BoundaryMode,
    ) -> Result<Self> {
        if !(lambda_w > 0.0 && lambda_w.is_finite()) {
            return Err(Error::Domain(format!("lambda_w = {lambda_w} must be positive")));
        }
        let grid = potential.grid;
        let fft = Fft2::new(grid.nx, grid.ny);
        let kx = grid.kx();
        let ky = grid.ky();
        let scale = 1.0 / grid.len() as f64;
        let mut kinetic = Vec::with_capacity(grid.len());
        let mut kinetic_energy = Vec::with_capacity(grid.len());
        for &ky in &ky {
            for &kx in &kx {
                let e = lambda_w * lambda_w * (kx * kx + ky * ky) / (2.0 * n0);
                kinetic_energy.push(e);
                // exp(−i E dz / λ_w) or exp(−E dτ / λ_w)
                let arg = e * dz / lambda_w;
                kinetic.push(match evolution {
                    Evolution::RealZ => Complex64::from_polar(scale, -arg),
                    Evolution::ImaginaryTau => Complex64::new(scale * (-arg).exp(), 0.0),
                });
            }
        }
        let half_potential = potential
            .values
            .iter()
            .map(|&v| match boundary {
                BoundaryMode::DirichletMask => Complex64::new(if v == 0.0 { 1.0 } else { 0.0 }, 0.0),
                BoundaryMode::PhasePotential => {
                    let arg = v * dz / (2.0 * lambda_w);
                    match evolution {
                        Evolution::RealZ => Complex64::from_polar(1.0, -arg),
                        Evolution::ImaginaryTau => Complex64::new((-arg).exp(), 0.0),
                    }
                }
            })
            .collect();
        Ok(Self {
            potential,
            lambda_w,
            n0,
            dz,
            evolution,
            boundary,
            fft,
            kinetic,
            half_potential,
            kinetic_energy,
        })
    }

    pub fn dz(&self) -> f64 {
        self.dz
    }

    pub fn lambda_w(&self) -> f64 {
        self.lambda_w
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn evolution(&self) -> Evolution {
        self.evolution
    }

    pub fn boundary_mode(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn potential(&self) -> &PotentialField {
        &self.potential
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    /// `λ_w² k² / 2n0` per mode, transposed spectral layout.
    pub fn kinetic_energy_table(&self) -> &[f64] {
        &self.kinetic_energy
    }

    pub fn propagator(&self) -> Propagator<'_> {
        Propagator {
            plan: self,
            scratch: self.fft.scratch(),
            steps: 0,
        }
    }

    /// One Strang step on a raw row-major buffer, no renormalization.
    /// Returns the squared norm (`Σ|ψ|²`, no cell-area factor) afterwards.
    pub fn step_raw(&self, buf: &mut [Complex64], scratch: &mut FftScratch) -> f64 {
        for (a, f) in buf.iter_mut().zip(&self.half_potential) {
            *a *= f;
        }
        self.fft.forward(buf, scratch);
        for (a, k) in buf.iter_mut().zip(&self.kinetic) {
            *a *= k;
        }
        self.fft.inverse(buf, scratch);
        let mut norm = 0.0;
        for (a, f) in buf.iter_mut().zip(&self.half_potential) {
            *a *= f;
            norm += a.norm_sqr();
        }
        norm
    }

    /// `⟨H⟩ = ⟨T⟩ + ⟨U⟩` of a (not necessarily normalized) field.
    pub fn energy(&self, field: &ScalarField2D) -> f64 {
        let mut scratch = self.fft.scratch();
        self.energy_with(field.amp.as_slice().expect("standard layout"), &mut scratch)
    }

    pub(crate) fn energy_with(&self, amp: &[Complex64], scratch: &mut FftScratch) -> f64 {
        let mut buf = amp.to_vec();
        let (mut num_v, mut den) = (0.0, 0.0);
        for (a, &v) in amp.iter().zip(self.potential.values.iter()) {
            let w = a.norm_sqr();
            den += w;
            if v != 0.0 {
                num_v += v * w;
            }
        }
        self.fft.forward(&mut buf, scratch);
        let (mut num_t, mut den_k) = (0.0, 0.0);
        for (c, &e) in buf.iter().zip(&self.kinetic_energy) {
            let w = c.norm_sqr();
            num_t += w * e;
            den_k += w;
        }
        num_t / den_k + num_v / den
    }
}

/// Stepping state for one simulation: the plan plus private FFT scratch.
pub struct Propagator<'a> {
    plan: &'a PropagatorPlan,
    scratch: FftScratch,
    steps: usize,
}

impl Propagator<'_> {
    pub fn plan(&self) -> &PropagatorPlan {
        self.plan
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn step(&mut self, field: &mut ScalarField2D) -> Result<()> {
        if field.grid != self.plan.potential.grid {
            return Err(Error::Domain("field grid does not match the propagator grid".into()));
        }
        let buf = field.amp.as_slice_mut().expect("standard layout");
        let norm = self.plan.step_raw(buf, &mut self.scratch);
        let step = self.steps;
        self.steps += 1;
        if !norm.is_finite() {
            return Err(Error::NumericalBlowup { step });
        }
        if self.plan.evolution == Evolution::ImaginaryTau {
            if norm == 0.0 {
                return Err(Error::NumericalBlowup { step });
            }
            let s = 1.0 / (norm * field.grid.cell_area()).sqrt();
            buf.iter_mut().for_each(|a| *a *= s);
        }
        Ok(())
    }

    /// Steps to `z_end`, calling `probe(z, field)` at `z = 0`, every
    /// `probe_interval` and at `z_end`. Both lengths must be multiples of `dz`.
    pub fn propagate<F>(
        &mut self,
        field: &mut ScalarField2D,
        z_end: f64,
        probe_interval: Option<f64>,
        mut probe: F,
    ) -> Result<()>
    where
        F: FnMut(f64, &ScalarField2D) -> Result<()>,
    {
        let dz = self.plan.dz.abs();
        let n_steps = steps_for(z_end, dz, "z_end")?;
        let every = match probe_interval {
            Some(dz_probe) => Some(steps_for(dz_probe, dz, "probe interval")?.max(1)),
            None => None,
        };
        let z_at = |k: usize| k as f64 * self.plan.dz;
        if every.is_some() {
            probe(0.0, field)?;
        }
        for k in 1..=n_steps {
            self.step(field)?;
            if let Some(e) = every {
                if k % e == 0 || k == n_steps {
                    probe(z_at(k), field)?;
                }
            }
        }
        Ok(())
    }
}

fn steps_for(length: f64, dz: f64, what: &str) -> Result<usize> {
    if !(length >= 0.0 && length.is_finite()) {
        return Err(Error::Domain(format!("{what} = {length} must be non-negative")));
    }
    let n = (length / dz).round();
    if (n * dz - length).abs() > 1e-9 * length.max(1.0) {
        return Err(Error::Domain(format!("{what} = {length} is not a multiple of dz = {dz}")));
    }
    Ok(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rasterize_potential, BilliardShape, GridSpec, DEFAULT_V_OUT};
    use crate::states::{product_state_2d, SqueezedParams};
    use ndarray::Array2;

    fn gaussian(grid: GridSpec, q: [f64; 2], p: [f64; 2], lw: f64) -> ScalarField2D {
        let sx = SqueezedParams::coherent(q[0], p[0], lw).unwrap();
        let sy = SqueezedParams::coherent(q[1], p[1], lw).unwrap();
        product_state_2d(&sx, &sy, &grid, true).unwrap()
    }

    #[test]
    fn zero_length_is_identity() {
        let g = GridSpec::square(32, 1.5).unwrap();
        let plan = PropagatorPlan::new(
            PotentialField::zero(g),
            0.01,
            1e-3,
            Evolution::RealZ,
            BoundaryMode::PhasePotential,
        )
        .unwrap();
        let mut f = gaussian(g, [0.0, 0.0], [0.1, 0.0], 0.01);
        let before = f.amp.clone();
        let mut calls = 0;
        plan.propagator()
            .propagate(&mut f, 0.0, Some(1e-3), |_, _| {
                calls += 1;
                Ok(())
            })
            .unwrap();
        assert_eq!(calls, 1);
        assert_eq!(f.amp, before);
    }

    #[test]
    fn free_momentum_is_conserved() {
        let lw = 0.01;
        let g = GridSpec::square(128, 1.5).unwrap();
        let plan = PropagatorPlan::new(
            PotentialField::zero(g),
            lw,
            1e-2,
            Evolution::RealZ,
            BoundaryMode::PhasePotential,
        )
        .unwrap();
        let mut f = gaussian(g, [-0.2, 0.1], [0.1, -0.05], lw);
        let (p0, _) = f.momentum_moments();
        plan.propagator().propagate(&mut f, 2.0, None, |_, _| Ok(())).unwrap();
        let (p1, _) = f.momentum_moments();
        assert!((p0[0] - p1[0]).abs() < 1e-10 && (p0[1] - p1[1]).abs() < 1e-10);
        let [mx, my] = f.mean_position();
        // ⟨x⟩ moves at p / n0
        assert!((mx - (-0.2 + 0.2)).abs() < 1e-8 && (my - (0.1 - 0.1)).abs() < 1e-8);
    }

    #[test]
    fn probe_schedule_and_validation() {
        let g = GridSpec::square(16, 1.5).unwrap();
        let plan = PropagatorPlan::new(
            PotentialField::zero(g),
            0.01,
            0.1,
            Evolution::RealZ,
            BoundaryMode::PhasePotential,
        )
        .unwrap();
        let mut f = gaussian(g, [0.0, 0.0], [0.0, 0.0], 0.01);
        let mut zs = Vec::new();
        plan.propagator()
            .propagate(&mut f, 1.0, Some(0.3), |z, _| {
                zs.push(z);
                Ok(())
            })
            .unwrap();
        let expected = [0.0, 0.3, 0.6, 0.9, 1.0];
        assert_eq!(zs.len(), expected.len());
        for (a, b) in zs.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(plan.propagator().propagate(&mut f, 0.05, None, |_, _| Ok(())).is_err());
        assert!(PropagatorPlan::new(
            PotentialField::zero(g),
            0.01,
            0.0,
            Evolution::RealZ,
            BoundaryMode::PhasePotential
        )
        .is_err());
    }

    #[test]
    fn blowup_is_reported_with_step() {
        let g = GridSpec::square(16, 1.5).unwrap();
        let plan = PropagatorPlan::new(
            PotentialField::zero(g),
            0.01,
            0.1,
            Evolution::RealZ,
            BoundaryMode::PhasePotential,
        )
        .unwrap();
        let mut f = ScalarField2D::new(g, Array2::from_elem((16, 16), Complex64::new(f64::NAN, 0.0)), 0.01)
            .unwrap();
        let mut p = plan.propagator();
        match p.step(&mut f) {
            Err(Error::NumericalBlowup { step }) => assert_eq!(step, 0),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn imaginary_time_lowers_energy() {
        let lw = 0.01;
        let g = GridSpec::square(64, 1.5).unwrap();
        let shape = BilliardShape::from_lambda(0.2).unwrap();
        let pot = rasterize_potential(&shape, &g, DEFAULT_V_OUT).unwrap();
        let plan = PropagatorPlan::new(pot, lw, 2.0, Evolution::ImaginaryTau, BoundaryMode::PhasePotential)
            .unwrap();
        let mut f = gaussian(g, [0.2, 0.1], [0.05, 0.0], lw);
        let mut prop = plan.propagator();
        prop.step(&mut f).unwrap();
        let start = plan.energy(&f);
        // the masked step is a positive semidefinite contraction, so the norm
        // it retains from a normalized input can only grow
        let mut buf: Vec<Complex64> = f.amp.iter().copied().collect();
        let mut scratch = plan.fft().scratch();
        let mut last_kept = 0.0;
        for _ in 0..200 {
            let kept = plan.step_raw(&mut buf, &mut scratch);
            assert!(kept >= last_kept * (1.0 - 1e-12), "{kept} < {last_kept}");
            last_kept = kept;
            let s = 1.0 / (kept * g.cell_area()).sqrt();
            buf.iter_mut().for_each(|c| *c *= s);
        }
        f.amp.iter_mut().zip(&buf).for_each(|(a, b)| *a = *b);
        assert!((f.norm() - 1.0).abs() < 1e-12);
        assert!(plan.energy(&f) < 0.5 * start);
    }

    #[test]
    fn boundary_mode_parsing() {
        assert_eq!("phase_potential".parse::<BoundaryMode>().unwrap(), BoundaryMode::PhasePotential);
        assert_eq!("dirichlet_mask".parse::<BoundaryMode>().unwrap(), BoundaryMode::DirichletMask);
        assert!("hard".parse::<BoundaryMode>().is_err());
        assert_eq!(BoundaryMode::DirichletMask.to_string(), "dirichlet_mask");
    }
}
