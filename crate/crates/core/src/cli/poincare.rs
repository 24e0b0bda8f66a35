use std::path::Path;

use rayon::prelude::*;

use super::config::{take_lambdas, RawConfig};
use crate::classical::{default_ensemble, poincare_section, single_orbit_coverage, BirkhoffPoint};
use crate::error::{Error, Result};
use crate::geometry::BilliardShape;
use crate::output::{format_number, write_csv, Cell, Manifest};

#[derive(Clone, Debug, PartialEq)]
pub struct PoincareConfig {
    pub lambdas: Vec<f64>,
    pub orbits: usize,
    pub bounces: usize,
    pub coverage_bounces: usize,
    pub bins: usize,
}

impl PoincareConfig {
    pub fn from_raw(mut raw: RawConfig) -> Result<Self> {
        let cfg = Self {
            lambdas: take_lambdas(&mut raw, &[0.15, 0.2, 0.499])?,
            orbits: raw.take_or("orbits", 20)?,
            bounces: raw.take_or("bounces", 2000)?,
            coverage_bounces: raw.take_or("coverage_bounces", 10_000)?,
            bins: raw.take_or("bins", 50)?,
        };
        raw.finish("poincare")?;
        if cfg.orbits == 0 || cfg.bounces == 0 || cfg.coverage_bounces == 0 || cfg.bins == 0 {
            return Err(Error::Config("orbits, bounces, coverage_bounces and bins must be positive".into()));
        }
        if let Some(l) = cfg.lambdas.iter().find(|&&l| l >= 0.5) {
            return Err(Error::Config(format!("the bounce map needs lambda < 0.5, got {l}")));
        }
        Ok(cfg)
    }
}

struct Section {
    lambda: f64,
    orbits: Vec<Vec<BirkhoffPoint>>,
    coverage: f64,
}

fn section(cfg: &PoincareConfig, lambda: f64) -> Result<Section> {
    let shape = BilliardShape::from_lambda(lambda)?;
    let orbits = default_ensemble(&shape, cfg.orbits)?
        .iter()
        .map(|start| poincare_section(&shape, start, cfg.bounces))
        .collect::<Result<_>>()?;
    Ok(Section {
        lambda,
        orbits,
        coverage: single_orbit_coverage(&shape, cfg.coverage_bounces, cfg.bins)?,
    })
}

pub fn run(cfg: &PoincareConfig, out: &Path) -> Result<Manifest> {
    let sections: Vec<Section> = cfg.lambdas.par_iter().map(|&l| section(cfg, l)).collect::<Result<_>>()?;
    let mut manifest = Manifest::new(out);
    for sec in &sections {
        let rows: Vec<Vec<Cell>> = sec
            .orbits
            .iter()
            .enumerate()
            .flat_map(|(k, pts)| pts.iter().map(move |p| vec![Cell::from(k), p.s.into(), p.p_t.into()]))
            .collect();
        let name = format!("section_{}.csv", format_number(sec.lambda));
        write_csv(&manifest.claim(name)?, &["orbit", "s", "p_t"], &rows)?;
        println!(
            "lambda {} coverage {} ({} bounces, {}x{} cells)",
            format_number(sec.lambda),
            format_number(sec.coverage),
            cfg.coverage_bounces,
            cfg.bins,
            cfg.bins
        );
    }
    Ok(manifest)
}
