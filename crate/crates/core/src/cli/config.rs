//! Flat `key = value` run configuration.
//!
//! One entry per line, `#` starts a comment, lists are comma separated.
//! Every key must be consumed by the command reading the file; leftovers are
//! reported as unknown keys.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::entanglement::PolarGrid;
use crate::error::{Error, Result};
use crate::geometry::GridSpec;
use crate::states::DEFAULT_LAMBDA_W;

#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {lineno}: expected `key = value`")))?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::Config(format!("line {lineno}: malformed key `{key}`")));
            }
            if entries.insert(key.to_string(), (lineno, value.trim().to_string())).is_some() {
                return Err(Error::Config(format!("line {lineno}: duplicate key `{key}`")));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn take_raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("line {line}: cannot parse `{key} = {v}`"))),
        }
    }

    pub fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.take(key)?.unwrap_or(default))
    }

    pub fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::Config(format!("line {line}: cannot parse `{s}` in `{key}`")))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Fails if any key was not consumed.
    pub fn finish(self, command: &str) -> Result<()> {
        if let Some((key, (line, _))) = self.entries.iter().next() {
            return Err(Error::Config(format!("line {line}: unknown key `{key}` for {command}")));
        }
        Ok(())
    }
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

/// Settings shared by the wave commands.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveConfig {
    pub lambdas: Vec<f64>,
    pub grid: GridSpec,
    pub polar: PolarGrid,
    pub lambda_w: f64,
    pub n0: f64,
}

/// `lambda` (single) or `lambdas` (list); exactly one may be given.
pub fn take_lambdas(raw: &mut RawConfig, default: &[f64]) -> Result<Vec<f64>> {
    let single: Option<f64> = raw.take("lambda")?;
    let list: Option<Vec<f64>> = raw.take_list("lambdas")?;
    let lambdas = match (single, list) {
        (Some(_), Some(_)) => return Err(Error::Config("give either `lambda` or `lambdas`, not both".into())),
        (Some(l), None) => vec![l],
        (None, Some(ls)) => ls,
        (None, None) => default.to_vec(),
    };
    require(!lambdas.is_empty(), || "empty lambda list".into())?;
    for &l in &lambdas {
        require((0.0..=0.5).contains(&l), || format!("lambda = {l} outside [0, 0.5]"))?;
    }
    Ok(lambdas)
}

impl WaveConfig {
    pub fn take(raw: &mut RawConfig, default_lambdas: &[f64]) -> Result<Self> {
        let lambdas = take_lambdas(raw, default_lambdas)?;
        let n: usize = raw.take_or("grid_n", 512)?;
        let half: f64 = raw.take_or("half_width", 1.5)?;
        let grid = GridSpec::square(n, half).map_err(|e| Error::Config(e.to_string()))?;
        let polar = PolarGrid::new(
            raw.take_or("polar_n_r", 256)?,
            raw.take_or("polar_n_theta", 256)?,
            raw.take_or("r_max", 1.35)?,
        )
        .map_err(|e| Error::Config(e.to_string()))?;
        let lambda_w: f64 = raw.take_or("lambda_w", DEFAULT_LAMBDA_W)?;
        let n0: f64 = raw.take_or("n0", 1.0)?;
        require(lambda_w > 0.0 && lambda_w.is_finite(), || format!("lambda_w = {lambda_w} must be positive"))?;
        require(n0 > 0.0 && n0.is_finite(), || format!("n0 = {n0} must be positive"))?;
        Ok(Self {
            lambdas,
            grid,
            polar,
            lambda_w,
            n0,
        })
    }
}
