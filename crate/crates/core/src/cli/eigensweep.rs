use std::path::Path;

use super::config::{RawConfig, WaveConfig};
use crate::eigenmodes::{mode_entropy_sweep, EigenConfig, EigenSolver};
use crate::error::{Error, Result};
use crate::output::{format_number, write_csv, write_pgm, Cell, Manifest};

pub const DEFAULT_SWEEP: [f64; 7] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.45, 0.499];

#[derive(Clone, Debug, PartialEq)]
pub struct EigensweepConfig {
    pub wave: WaveConfig,
    pub n_modes: usize,
    pub eigen: EigenConfig,
    /// Number of lowest modes written as density images per deformation.
    pub image_modes: usize,
}

impl EigensweepConfig {
    pub fn from_raw(mut raw: RawConfig) -> Result<Self> {
        let wave = WaveConfig::take(&mut raw, &DEFAULT_SWEEP)?;
        if let Some(l) = wave.lambdas.iter().find(|&&l| l >= 0.5) {
            return Err(Error::Config(format!("sweep deformation {l} must be below 0.5")));
        }
        let n_modes: usize = raw.take_or("n_modes", 10)?;
        let defaults = EigenConfig::default();
        let solver = match raw.take::<String>("solver")?.as_deref() {
            None | Some("lobpcg") => EigenSolver::Lobpcg,
            Some("imaginary_time") => EigenSolver::ImaginaryTime {
                dtau: raw.take_or("dtau", 0.05)?,
            },
            Some(other) => {
                return Err(Error::Config(format!(
                    "unknown solver '{other}' (expected lobpcg or imaginary_time)"
                )))
            }
        };
        let eigen = EigenConfig {
            lambda_w: wave.lambda_w,
            n0: wave.n0,
            guard: raw.take_or("guard", defaults.guard)?,
            tol: raw.take_or("tol", defaults.tol)?,
            max_iter: raw.take_or("max_iter", defaults.max_iter)?,
            solver,
        };
        let image_modes: usize = raw.take_or("image_modes", 4)?;
        raw.finish("eigensweep")?;
        if n_modes == 0 || image_modes > n_modes {
            return Err(Error::Config("need n_modes >= 1 and image_modes <= n_modes".into()));
        }
        if !(eigen.tol > 0.0) || eigen.max_iter == 0 {
            return Err(Error::Config("tol and max_iter must be positive".into()));
        }
        Ok(Self {
            wave,
            n_modes,
            eigen,
            image_modes,
        })
    }
}

pub fn run(cfg: &EigensweepConfig, out: &Path) -> Result<Manifest> {
    let points = mode_entropy_sweep(&cfg.wave.lambdas, &cfg.wave.grid, cfg.n_modes, &cfg.eigen, &cfg.wave.polar)?;
    let mut manifest = Manifest::new(out);
    let mut rows = Vec::new();
    for point in &points {
        let mean = point.mean_entropy();
        for r in &point.rows {
            rows.push(vec![
                Cell::from(r.lambda),
                r.mode.into(),
                r.energy.into(),
                r.s_vn.into(),
                mean.into(),
            ]);
        }
        println!("lambda {} mean s_vn {}", format_number(point.lambda), format_number(mean));
    }
    write_csv(
        &manifest.claim("eigensweep.csv")?,
        &["lambda", "mode", "energy", "s_vn", "s_vn_mean"],
        &rows,
    )?;
    for point in &points {
        for (k, mode) in point.modes.modes.iter().take(cfg.image_modes).enumerate() {
            let name = format!("mode_lambda{}_n{k}.pgm", format_number(point.lambda));
            write_pgm(&manifest.claim(name)?, &mode.density())?;
        }
    }
    Ok(manifest)
}
