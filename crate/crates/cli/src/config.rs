//! Run configuration: a JSON file, overridden field by field by flags.

use std::path::PathBuf;

use clap::ValueEnum;
use faithsim::experiment::{DistortionJson, RatePoint, SimulateConfig};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Region,
    Simulate,
    Sweep,
    FmCheck,
    CoveringCheck,
    PackingSweep,
    RdEval,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub input: Option<PathBuf>,
    pub fixture: Option<String>,
    pub output: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
    pub ns: Option<Vec<usize>>,
    pub eta: Option<f64>,
    pub delta: Option<f64>,
    pub tol: Option<f64>,
    pub rt1: Option<f64>,
    pub rt2: Option<f64>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub grid: Option<Vec<RatePoint>>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub packing: Option<bool>,
    pub timing: Option<bool>,
    /// (r1, r2) pairs for the packing sweep.
    pub pairs: Option<Vec<(f64, f64)>>,
    pub eps: Option<f64>,
    pub distortion: Option<DistortionJson>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $(if $src.$f.is_some() { $dst.$f = $src.$f; })*
    };
}

impl RunConfig {
    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: RunConfig) -> Self {
        overlay!(self, other; command, input, fixture, output, seeds, ns, eta, delta, tol,
            rt1, rt2, r1, r2, grid, n1, n2, c1, c2, packing, timing, pairs, eps, distortion);
        self
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(1e-9)
    }

    pub fn has_grid(&self) -> bool {
        self.grid.is_some() || [self.rt1, self.rt2, self.r1, self.r2].iter().any(Option::is_some)
    }

    pub fn simulate_config(&self) -> SimulateConfig {
        let d = SimulateConfig::default();
        let base = d.grid[0];
        let grid = match &self.grid {
            Some(g) => g.clone(),
            None => vec![RatePoint {
                rt1: self.rt1.unwrap_or(base.rt1),
                rt2: self.rt2.unwrap_or(base.rt2),
                r1: self.r1.unwrap_or(base.r1),
                r2: self.r2.unwrap_or(base.r2),
            }],
        };
        SimulateConfig {
            ns: self.ns.clone().unwrap_or(d.ns),
            seeds: self.seeds.clone().unwrap_or(d.seeds),
            grid,
            n1: self.n1,
            n2: self.n2,
            c1: self.c1,
            c2: self.c2,
            eta: self.eta.unwrap_or(d.eta),
            delta: self.delta.unwrap_or(d.delta),
            packing: self.packing.unwrap_or(d.packing),
            timing: self.timing.unwrap_or(d.timing),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: RunConfig = serde_json::from_str(r#"{"command":"fm-check","ns":[2,3],"delta":0.5}"#).unwrap();
        let flags = RunConfig {
            delta: Some(0.7),
            ..RunConfig::default()
        };
        let c = file.overlay(flags);
        assert_eq!(c.command, Some(Command::FmCheck));
        assert_eq!(c.ns, Some(vec![2, 3]));
        assert_eq!(c.delta, Some(0.7));
    }

    #[test]
    fn single_point_from_rates() {
        let c = RunConfig {
            rt1: Some(2.0),
            ..RunConfig::default()
        };
        assert!(c.has_grid());
        let s = c.simulate_config();
        assert_eq!(s.grid.len(), 1);
        assert_eq!(s.grid[0].rt1, 2.0);
        assert_eq!(s.grid[0].rt2, SimulateConfig::default().grid[0].rt2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sedes":[1]}"#).is_err());
    }
}
