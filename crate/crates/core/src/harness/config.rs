//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Lists are comma separated.
//! Recognised keys (defaults in brackets):
//!
//! | key | meaning |
//! |---|---|
//! | `regime.m`, `regime.n` | paired lists of exponents [2 / 1.25] |
//! | `sweep.eps` | strictly decreasing list [0.2, 0.1, 0.05] |
//! | `grid.nh`, `grid.nv`, `grid.lh` | grid [48, 16, 4 pi] |
//! | `law.gamma` | adiabatic exponent [2] |
//! | `visc.mu`, `visc.eta` | shear and bulk viscosity [0.01, 0] |
//! | `time.dt`, `time.t_end`, `time.burn_in` | [0.001, 1, 0.1] |
//! | `time.snapshot_every` | steps between stored snapshots [20] |
//! | `data.seed`, `data.amplitude`, `data.band` | initial data [7, 1, 4] |
//! | `diag.cutoffs` | cut-off indices for the frequency diagnostics [3] |
//! | `diag.window` | half width of the density window, fraction of `Lh` [0.25] |

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::regime::validate_regime;
use crate::spectral::GridSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub regimes: Vec<(f64, f64)>,
    pub eps: Vec<f64>,
    pub grid: GridSpec,
    pub gamma: f64,
    pub mu: f64,
    pub eta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub burn_in: f64,
    pub snapshot_every: usize,
    pub seed: u64,
    pub amplitude: f64,
    pub band: f64,
    pub cutoffs: Vec<i32>,
    pub window: f64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            regimes: vec![(2.0, 1.25)],
            eps: vec![0.2, 0.1, 0.05],
            grid: GridSpec { nh: 48, nv: 16, lh: 4.0 * PI },
            gamma: 2.0,
            mu: 1e-2,
            eta: 0.0,
            dt: 1e-3,
            t_end: 1.0,
            burn_in: 0.1,
            snapshot_every: 20,
            seed: 7,
            amplitude: 1.0,
            band: 4.0,
            cutoffs: vec![3],
            window: 0.25,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, HarnessError> {
    value
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| HarnessError::Config(format!("{key}: cannot parse '{s}'"))))
        .collect()
}

fn one<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    let mut v = list::<T>(key, value)?;
    if v.len() != 1 {
        return Err(HarnessError::Config(format!("{key}: expected a single value")));
    }
    Ok(v.remove(0))
}

/// `pi` multiples such as `4pi` or `4*pi` are accepted for `grid.lh`.
fn length(key: &str, value: &str) -> Result<f64, HarnessError> {
    let v = value.trim().replace(' ', "");
    if let Some(factor) = v.strip_suffix("pi") {
        let factor = factor.trim_end_matches('*');
        let f = if factor.is_empty() { 1.0 } else { one::<f64>(key, factor)? };
        return Ok(f * PI);
    }
    one(key, &v)
}

impl ExperimentPlan {
    pub fn parse(text: &str) -> Result<ExperimentPlan, HarnessError> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected 'key = value'", no + 1)))?;
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut plan = ExperimentPlan::default();
        let (mut ms, mut ns) = (None, None);
        for (k, v) in &entries {
            match k.as_str() {
                "regime.m" => ms = Some(list::<f64>(k, v)?),
                "regime.n" => ns = Some(list::<f64>(k, v)?),
                "sweep.eps" => plan.eps = list(k, v)?,
                "grid.nh" => plan.grid.nh = one(k, v)?,
                "grid.nv" => plan.grid.nv = one(k, v)?,
                "grid.lh" => plan.grid.lh = length(k, v)?,
                "law.gamma" => plan.gamma = one(k, v)?,
                "visc.mu" => plan.mu = one(k, v)?,
                "visc.eta" => plan.eta = one(k, v)?,
                "time.dt" => plan.dt = one(k, v)?,
                "time.t_end" => plan.t_end = one(k, v)?,
                "time.burn_in" => plan.burn_in = one(k, v)?,
                "time.snapshot_every" => plan.snapshot_every = one(k, v)?,
                "data.seed" => plan.seed = one(k, v)?,
                "data.amplitude" => plan.amplitude = one(k, v)?,
                "data.band" => plan.band = one(k, v)?,
                "diag.cutoffs" => plan.cutoffs = list(k, v)?,
                "diag.window" => plan.window = one(k, v)?,
                "output.dir" => plan.out_dir = PathBuf::from(v),
                other => return Err(HarnessError::Config(format!("unknown key '{other}'"))),
            }
        }
        match (ms, ns) {
            (None, None) => {}
            (Some(m), Some(n)) if m.len() == n.len() => plan.regimes = m.into_iter().zip(n).collect(),
            (Some(_), Some(_)) => return Err(HarnessError::Config("regime.m and regime.n differ in length".into())),
            _ => return Err(HarnessError::Config("regime.m and regime.n must be given together".into())),
        }
        plan.validate()?;
        Ok(plan)
    }

    /// Rejects plans with an empty or non-decreasing `eps` list, an
    /// inadmissible regime or non-positive times.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.eps.is_empty() || self.regimes.is_empty() {
            return Err(HarnessError::Config("need at least one regime and one eps".into()));
        }
        if self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(HarnessError::Config("sweep.eps must be strictly decreasing".into()));
        }
        for &(m, n) in &self.regimes {
            for &eps in &self.eps {
                validate_regime(m, n, eps)?;
            }
        }
        if !(self.dt > 0.0 && self.t_end > 0.0 && self.burn_in >= 0.0 && self.burn_in < self.t_end) {
            return Err(HarnessError::Config("need dt > 0, t_end > 0 and 0 <= burn_in < t_end".into()));
        }
        if self.snapshot_every == 0 {
            return Err(HarnessError::Config("time.snapshot_every must be positive".into()));
        }
        if !(self.window > 0.0 && self.window <= 0.5) {
            return Err(HarnessError::Config("diag.window must lie in (0, 0.5]".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let text = "# sweep\nregime.m = 2, 1\nregime.n = 1.25, 0.75\nsweep.eps = 0.2, 0.1\ngrid.nh = 32\n\
                    grid.lh = 4pi\ntime.dt = 5e-4  # step\ndata.seed = 11\ndiag.cutoffs = 2,3\n";
        let plan = ExperimentPlan::parse(text).unwrap();
        assert_eq!(plan.regimes, vec![(2.0, 1.25), (1.0, 0.75)]);
        assert_eq!(plan.eps, vec![0.2, 0.1]);
        assert_eq!(plan.grid.nh, 32);
        assert!((plan.grid.lh - 4.0 * PI).abs() < 1e-15);
        assert_eq!(plan.dt, 5e-4);
        assert_eq!(plan.seed, 11);
        assert_eq!(plan.cutoffs, vec![2, 3]);
    }

    #[test]
    fn rejects_bad_plans() {
        assert!(ExperimentPlan::parse("sweep.eps = 0.1, 0.2").is_err());
        assert!(ExperimentPlan::parse("regime.m = 2\nregime.n = 0.9").is_err());
        assert!(ExperimentPlan::parse("regime.m = 2").is_err());
        assert!(ExperimentPlan::parse("bogus = 1").is_err());
        assert!(ExperimentPlan::parse("time.dt").is_err());
    }
}
