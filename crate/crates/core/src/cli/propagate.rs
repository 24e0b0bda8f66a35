use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{RawConfig, WaveConfig};
use crate::entanglement::{EntanglementProbe, PolarGrid, ProbeRow};
use crate::error::{Error, Result};
use crate::geometry::{rasterize_potential, BilliardShape, GridSpec, DEFAULT_V_OUT};
use crate::output::{write_csv, write_pgm, Cell, Manifest};
use crate::propagator::{BoundaryMode, Evolution, PropagatorPlan, DEFAULT_DZ};
use crate::states::{product_state_2d, SqueezedParams};

/// Launch packet: centre `(q_x, q_y)`, momentum `(p_x, p_y)` and the squeeze
/// parameter `ζ` applied to both axes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaunchState {
    pub q: [f64; 2],
    pub p: [f64; 2],
    pub zeta: Complex64,
}

impl LaunchState {
    /// Centred at `(x, p_x, y, p_y) = (0.25, 0.1, 0.0, 0.1)`.
    pub fn reference(zeta: f64) -> Self {
        Self {
            q: [0.25, 0.0],
            p: [0.1, 0.1],
            zeta: Complex64::new(zeta, 0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropagationSpec {
    pub lambda: f64,
    pub grid: GridSpec,
    pub polar: PolarGrid,
    pub lambda_w: f64,
    pub n0: f64,
    pub launch: LaunchState,
    pub dz: f64,
    pub z_end: f64,
    pub probe_interval: f64,
    pub boundary: BoundaryMode,
    pub v_out: f64,
    /// Distances at which `|ψ|²` is kept; each must fall on a probe.
    pub snapshots: Vec<f64>,
}

impl PropagationSpec {
    /// Default grids and step with the given deformation, launch and length.
    pub fn new(lambda: f64, launch: LaunchState, z_end: f64) -> Self {
        Self {
            lambda,
            grid: GridSpec::square(512, 1.5).expect("default grid"),
            polar: PolarGrid::default(),
            lambda_w: crate::states::DEFAULT_LAMBDA_W,
            n0: 1.0,
            launch,
            dz: DEFAULT_DZ,
            z_end,
            probe_interval: 0.5,
            boundary: BoundaryMode::PhasePotential,
            v_out: DEFAULT_V_OUT,
            snapshots: Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PropagationResult {
    pub lambda: f64,
    pub rows: Vec<ProbeRow>,
    pub snapshots: Vec<(f64, Array2<f64>)>,
}

impl PropagationResult {
    /// Entanglement maximum over the run.
    pub fn s_m(&self) -> f64 {
        self.rows.iter().map(|r| r.s_vn).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Probe row closest to `z`.
    pub fn at(&self, z: f64) -> Option<&ProbeRow> {
        self.rows.iter().min_by(|a, b| (a.z - z).abs().total_cmp(&(b.z - z).abs()))
    }
}

/// Propagates the launch packet and records the entropy at every probe.
pub fn simulate(spec: &PropagationSpec, strict: bool) -> Result<PropagationResult> {
    let shape = BilliardShape::from_lambda(spec.lambda)?;
    let lw = spec.lambda_w;
    let px = SqueezedParams::with_zeta(spec.launch.q[0], spec.launch.p[0], spec.launch.zeta, lw)?;
    let py = SqueezedParams::with_zeta(spec.launch.q[1], spec.launch.p[1], spec.launch.zeta, lw)?;
    let mut field = product_state_2d(&px, &py, &spec.grid, strict)?;
    let pot = rasterize_potential(&shape, &spec.grid, spec.v_out)?;
    let plan = PropagatorPlan::new(pot, lw, spec.dz, Evolution::RealZ, spec.boundary)?.with_n0(spec.n0)?;
    let mut probe = EntanglementProbe::new(spec.polar, shape)?;
    let tol = 0.5 * spec.dz;
    for &z in &spec.snapshots {
        let k = (z / spec.probe_interval).round();
        let on_probe = (k * spec.probe_interval - z).abs() < tol || (z - spec.z_end).abs() < tol;
        if !(0.0..=spec.z_end + tol).contains(&z) || !on_probe {
            return Err(Error::Config(format!("snapshot z = {z} is not a probe distance")));
        }
    }
    let mut snapshots = Vec::new();
    let mut prop = plan.propagator();
    prop.propagate(&mut field, spec.z_end, Some(spec.probe_interval), |z, f| {
        let row = probe.record(z, f)?;
        log::debug!("lambda {} z {:.3} s_vn {:.6} norm {:.12}", spec.lambda, row.z, row.s_vn, row.norm);
        if spec.snapshots.iter().any(|&s| (s - z).abs() < tol) {
            snapshots.push((z, f.density()));
        }
        Ok(())
    })?;
    Ok(PropagationResult {
        lambda: spec.lambda,
        rows: probe.into_rows(),
        snapshots,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropagateConfig {
    pub wave: WaveConfig,
    pub launch: LaunchState,
    pub dz: f64,
    pub z_end: f64,
    pub probe_interval: f64,
    pub boundary: BoundaryMode,
    pub v_out: f64,
    pub snapshots: Vec<f64>,
}

impl PropagateConfig {
    pub fn from_raw(mut raw: RawConfig) -> Result<Self> {
        let wave = WaveConfig::take(&mut raw, &[0.499])?;
        let reference = LaunchState::reference(0.0);
        let launch = LaunchState {
            q: [raw.take_or("q_x", reference.q[0])?, raw.take_or("q_y", reference.q[1])?],
            p: [raw.take_or("p_x", reference.p[0])?, raw.take_or("p_y", reference.p[1])?],
            zeta: Complex64::new(raw.take_or("zeta", 0.0)?, raw.take_or("zeta_im", 0.0)?),
        };
        let dz: f64 = raw.take_or("dz", DEFAULT_DZ)?;
        let z_end: f64 = raw.take_or("z_end", 50.0)?;
        let probe_interval: f64 = raw.take_or("probe_interval", 0.5)?;
        let boundary: BoundaryMode = match raw.take::<String>("boundary_mode")? {
            Some(s) => s.parse()?,
            None => BoundaryMode::PhasePotential,
        };
        let v_out: f64 = raw.take_or("v_out", DEFAULT_V_OUT)?;
        let snapshots: Vec<f64> = raw.take_list("snapshots")?.unwrap_or_else(|| vec![z_end]);
        raw.finish("propagate")?;
        if !(dz > 0.0 && z_end >= 0.0 && probe_interval > 0.0) {
            return Err(Error::Config("dz and probe_interval must be positive, z_end non-negative".into()));
        }
        Ok(Self {
            wave,
            launch,
            dz,
            z_end,
            probe_interval,
            boundary,
            v_out,
            snapshots,
        })
    }

    pub fn spec(&self, lambda: f64) -> PropagationSpec {
        PropagationSpec {
            lambda,
            grid: self.wave.grid,
            polar: self.wave.polar,
            lambda_w: self.wave.lambda_w,
            n0: self.wave.n0,
            launch: self.launch,
            dz: self.dz,
            z_end: self.z_end,
            probe_interval: self.probe_interval,
            boundary: self.boundary,
            v_out: self.v_out,
            snapshots: self.snapshots.clone(),
        }
    }
}

fn lambda_dir(lambda: f64) -> String {
    format!("lambda_{}", crate::output::format_number(lambda))
}

pub fn run(cfg: &PropagateConfig, out: &Path, strict: bool) -> Result<Manifest> {
    let results: Vec<PropagationResult> = cfg
        .wave
        .lambdas
        .par_iter()
        .map(|&l| simulate(&cfg.spec(l), strict))
        .collect::<Result<_>>()?;
    let mut manifest = Manifest::new(out);
    let nested = results.len() > 1;
    for res in &results {
        let dir = if nested { Path::new(&lambda_dir(res.lambda)).to_path_buf() } else { Default::default() };
        let rows: Vec<Vec<Cell>> = res
            .rows
            .iter()
            .map(|r| vec![r.z.into(), r.s_vn.into(), r.norm.into()])
            .collect();
        write_csv(&manifest.claim(dir.join("dynamics.csv"))?, &["z", "s_vn", "norm"], &rows)?;
        for (z, density) in &res.snapshots {
            let name = format!("density_z{}.pgm", crate::output::format_number(*z));
            write_pgm(&manifest.claim(dir.join(name))?, density)?;
        }
    }
    let summary: Vec<Vec<Cell>> = results.iter().map(|r| vec![r.lambda.into(), r.s_m().into()]).collect();
    write_csv(&manifest.claim("summary.csv")?, &["lambda", "s_m"], &summary)?;
    for r in &results {
        println!("lambda {} s_m {}", crate::output::format_number(r.lambda), crate::output::format_number(r.s_m()));
    }
    Ok(manifest)
}
