//! Batch drivers behind the command-line tool: protocol simulations over a
//! rate grid, packing sweeps and covering checks, with CSV output.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures;
use crate::json::{parse_error, DensityJson, MatrixJson};
use crate::linalg::CMat;
use crate::measurement::{DecompositionJson, SeparableDecomposition};
use crate::protocol::{
    mutual_covering_check, packing_norm_trial, packing_union_proxy, rate_count, substream,
    PackingInstance, ProtocolParams, ProtocolSetup, Stream, DEFAULT_ETA,
};
use crate::random::perturbed_povm;
use crate::region::{
    deterministic_region_for, fm_check, fm_inputs, rd_inner_bound, single_letter_distortion,
    stochastic_region_for, FmComparison, RateDistortionSetup, RegionReport,
};
use crate::state::DensityOperator;

/// A bipartite state together with a decomposition of the measurement on it.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub rho_ab: DensityOperator,
    pub decomposition: SeparableDecomposition,
}

/// `{"rho_ab": <density>, "decomposition": <decomposition>}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemJson {
    pub rho_ab: DensityJson,
    pub decomposition: DecompositionJson,
}

impl Problem {
    pub fn fixture(name: &str) -> Result<Self> {
        let f = fixtures::fixture(name)?;
        Ok(Self {
            name: f.name.to_string(),
            rho_ab: f.rho_ab,
            decomposition: f.decomposition,
        })
    }

    pub fn from_json_str(name: &str, s: &str) -> Result<Self> {
        let j: ProblemJson = serde_json::from_str(s).map_err(parse_error)?;
        let rho_ab = j.rho_ab.to_state()?;
        let decomposition = j.decomposition.to_decomposition()?;
        decomposition.check_state(&rho_ab)?;
        Ok(Self {
            name: name.to_string(),
            rho_ab,
            decomposition,
        })
    }

    pub fn to_json(&self) -> ProblemJson {
        ProblemJson {
            rho_ab: DensityJson::from_state(&self.rho_ab),
            decomposition: DecompositionJson::from_decomposition(&self.decomposition),
        }
    }

    /// Deterministic or stochastic inner bound, whichever the decomposition allows.
    pub fn region(&self) -> Result<RegionReport> {
        if self.decomposition.is_deterministic() {
            deterministic_region_for(&self.rho_ab, &self.decomposition)
        } else {
            stochastic_region_for(&self.rho_ab, &self.decomposition)
        }
    }

    /// Projects the binned system onto (R1, R2, C) and compares with the direct one.
    pub fn fm_check(&self) -> Result<FmComparison> {
        fm_check(fm_inputs(&deterministic_region_for(&self.rho_ab, &self.decomposition)?)?)
    }
}

/// Codebook and bin rates of one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub rt1: f64,
    pub rt2: f64,
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    pub ns: Vec<usize>,
    pub seeds: Vec<u64>,
    pub grid: Vec<RatePoint>,
    /// Common-randomness counts. `c1`/`c2` give them as rates instead; 1 if neither.
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub eta: f64,
    pub delta: f64,
    /// Also run the packing check at the within-bin rates R̃ − R.
    pub packing: bool,
    /// Fill `runtime_ms`; left at 0 otherwise so reruns are byte-identical.
    pub timing: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            ns: vec![2],
            seeds: vec![0],
            grid: vec![RatePoint {
                rt1: 1.2,
                rt2: 1.2,
                r1: 1.0,
                r2: 1.0,
            }],
            n1: None,
            n2: None,
            c1: None,
            c2: None,
            eta: DEFAULT_ETA,
            delta: 1.0,
            packing: true,
            timing: false,
        }
    }
}

fn common_count(n: usize, count: Option<usize>, rate: Option<f64>) -> Result<usize> {
    match (count, rate) {
        (Some(c), _) => Ok(c),
        (None, Some(r)) => rate_count(n, r),
        (None, None) => Ok(1),
    }
}

/// One CSV row of a simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRow {
    pub n: usize,
    #[serde(rename = "Rt1")]
    pub rt1: f64,
    #[serde(rename = "Rt2")]
    pub rt2: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "N1")]
    pub n1: usize,
    #[serde(rename = "N2")]
    pub n2: usize,
    pub eta: f64,
    pub delta: f64,
    pub seed: u64,
    pub subpovm_valid: bool,
    #[serde(rename = "G")]
    pub g: f64,
    pub collision_rate: f64,
    pub packing_norm: Option<f64>,
    pub runtime_ms: u64,
}

impl SimulateConfig {
    pub fn params(&self, point: &RatePoint, n: usize, seed: u64) -> Result<ProtocolParams> {
        let p = ProtocolParams {
            n,
            rt1: point.rt1,
            rt2: point.rt2,
            r1: point.r1,
            r2: point.r2,
            n1: common_count(n, self.n1, self.c1)?,
            n2: common_count(n, self.n2, self.c2)?,
            eta: self.eta,
            delta: self.delta,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        if self.ns.is_empty() || self.seeds.is_empty() || self.grid.is_empty() {
            return Err(Error::InvalidParameter("ns, seeds and grid must be non-empty".into()));
        }
        Ok(())
    }
}

/// One faithfulness trial per (seed, grid point, n), in that order.
pub fn simulate(problem: &Problem, cfg: &SimulateConfig) -> Result<Vec<SimRow>> {
    cfg.check()?;
    // Validate every parameter set before the first expensive trial.
    for &n in &cfg.ns {
        for pt in &cfg.grid {
            cfg.params(pt, n, 0)?;
        }
    }
    let mut setups = BTreeMap::new();
    for &n in &cfg.ns {
        if !setups.contains_key(&n) {
            setups.insert(n, ProtocolSetup::new(&problem.rho_ab, &problem.decomposition, n, cfg.delta)?);
        }
    }
    let inst = cfg
        .packing
        .then(|| PackingInstance::new(&problem.rho_ab, &problem.decomposition));
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        for pt in &cfg.grid {
            for &n in &cfg.ns {
                let p = cfg.params(pt, n, seed)?;
                let t0 = Instant::now();
                let rep = setups[&n].trial(&p)?;
                let packing_norm = match &inst {
                    Some(inst) => Some(packing_norm_trial(
                        inst,
                        n,
                        (pt.rt1 - pt.r1).max(0.0),
                        (pt.rt2 - pt.r2).max(0.0),
                        cfg.delta,
                        seed,
                    )?),
                    None => None,
                };
                let runtime_ms = if cfg.timing { t0.elapsed().as_millis() as u64 } else { 0 };
                rows.push(SimRow {
                    n,
                    rt1: p.rt1,
                    rt2: p.rt2,
                    r1: p.r1,
                    r2: p.r2,
                    n1: p.n1,
                    n2: p.n2,
                    eta: p.eta,
                    delta: p.delta,
                    seed,
                    subpovm_valid: rep.subpovm_valid,
                    g: rep.faithfulness_g,
                    collision_rate: rep.collision_rate,
                    packing_norm,
                    runtime_ms,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackingRow {
    pub n: usize,
    pub r1: f64,
    pub r2: f64,
    pub delta: f64,
    pub seed: u64,
    pub packing_norm: f64,
    pub union_proxy: f64,
}

/// Packing norm for every (seed, rate pair, n), with the union-bound proxy.
pub fn packing_sweep(
    problem: &Problem,
    ns: &[usize],
    seeds: &[u64],
    pairs: &[(f64, f64)],
    delta: f64,
) -> Result<Vec<PackingRow>> {
    if ns.is_empty() || seeds.is_empty() || pairs.is_empty() {
        return Err(Error::InvalidParameter("ns, seeds and rate pairs must be non-empty".into()));
    }
    let inst = PackingInstance::new(&problem.rho_ab, &problem.decomposition);
    let mut proxy = BTreeMap::new();
    for (k, &(r1, r2)) in pairs.iter().enumerate() {
        for &n in ns {
            proxy.insert((k, n), packing_union_proxy(&inst, n, r1, r2, delta)?);
        }
    }
    let mut rows = Vec::new();
    for &seed in seeds {
        for (k, &(r1, r2)) in pairs.iter().enumerate() {
            for &n in ns {
                rows.push(PackingRow {
                    n,
                    r1,
                    r2,
                    delta,
                    seed,
                    packing_norm: packing_norm_trial(&inst, n, r1, r2, delta, seed)?,
                    union_proxy: proxy[&(k, n)],
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringRow {
    pub seed: u64,
    pub eps: f64,
    pub f_a: f64,
    pub f_b: f64,
    pub f_joint: f64,
    pub holds: bool,
}

/// Mutual covering on the problem's marginal POVMs against ε-mixtures with
/// random POVMs, one pair of perturbations per seed.
pub fn covering_check(problem: &Problem, seeds: &[u64], eps: f64, tol: f64) -> Result<Vec<CoveringRow>> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside [0, 1]")));
    }
    let (ma, mb) = (problem.decomposition.povm_a(), problem.decomposition.povm_b());
    seeds
        .iter()
        .map(|&seed| {
            let mut rng = substream(seed, Stream::Covering, 1);
            let ta = perturbed_povm(&mut rng, ma, eps);
            let tb = perturbed_povm(&mut rng, mb, eps);
            let c = mutual_covering_check(&problem.rho_ab, ma, mb, &ta, &tb)?;
            Ok(CoveringRow {
                seed,
                eps,
                f_a: c.f_a,
                f_b: c.f_b,
                f_joint: c.f_joint,
                holds: c.holds(tol),
            })
        })
        .collect()
}

/// Distortion observable on R ⊗ X̂ and a reconstruction state per outcome pair,
/// keyed `"(u,v)"` by outcome labels as in the decomposition's channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionJson {
    pub observable: MatrixJson,
    pub recon: BTreeMap<String, DensityJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub distortion: f64,
    pub region: RegionReport,
}

/// Single-letter distortion and the (R1, R2, D) inner bound without time sharing.
pub fn rd_eval(problem: &Problem, spec: &DistortionJson) -> Result<DistortionReport> {
    let (ma, mb) = (problem.decomposition.povm_a(), problem.decomposition.povm_b());
    let mut table: Vec<Vec<DensityOperator>> = Vec::with_capacity(ma.len());
    for a in ma.outcomes() {
        let mut row = Vec::with_capacity(mb.len());
        for b in mb.outcomes() {
            let key = format!("({a},{b})");
            let s = spec
                .recon
                .get(&key)
                .ok_or_else(|| Error::Parse(format!("reconstruction {key} missing")))?;
            row.push(s.to_state()?);
        }
        table.push(row);
    }
    let observable: CMat = spec.observable.to_matrix()?;
    let recon = |u: usize, v: usize, _q: usize| table[u][v].clone();
    let family = [(ma.clone(), mb.clone())];
    let setup = RateDistortionSetup {
        rho_ab: &problem.rho_ab,
        family: &family,
        p_q: &[1.0],
        recon: &recon,
        delta: &observable,
    };
    Ok(DistortionReport {
        distortion: single_letter_distortion(&setup)?,
        region: rd_inner_bound(&setup)?,
    })
}

/// Writes rows with a header line.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(|e| Error::Output(e.to_string()))?;
    }
    out.flush().map_err(|e| Error::Output(e.to_string()))
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Output(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_json_round_trip() {
        let p = Problem::fixture("example1").unwrap();
        let s = serde_json::to_string(&p.to_json()).unwrap();
        let q = Problem::from_json_str("copy", &s).unwrap();
        assert_eq!(q.rho_ab.matrix(), p.rho_ab.matrix());
        assert_eq!(q.decomposition.povm_a().outcomes(), p.decomposition.povm_a().outcomes());
    }

    #[test]
    fn malformed_problem_reports_position() {
        let e = Problem::from_json_str("x", "{\n  \"rho_ab\": [1,\n").unwrap_err();
        assert!(matches!(e, Error::Parse(ref m) if m.contains("line")), "{e}");
    }

    #[test]
    fn rows_follow_seed_then_grid_order() {
        let p = Problem::fixture("product").unwrap();
        let cfg = SimulateConfig {
            ns: vec![2, 3],
            seeds: vec![5, 4],
            delta: 0.7,
            packing: false,
            ..SimulateConfig::default()
        };
        let rows = simulate(&p, &cfg).unwrap();
        let keys: Vec<(u64, usize)> = rows.iter().map(|r| (r.seed, r.n)).collect();
        assert_eq!(keys, vec![(5, 2), (5, 3), (4, 2), (4, 3)]);
        assert!(rows.iter().all(|r| r.packing_norm.is_none() && r.runtime_ms == 0));
    }

    #[test]
    fn csv_header_and_empty_packing_cell() {
        let p = Problem::fixture("product").unwrap();
        let cfg = SimulateConfig {
            delta: 0.7,
            packing: false,
            ..SimulateConfig::default()
        };
        let s = to_csv(&simulate(&p, &cfg).unwrap()).unwrap();
        let mut lines = s.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,Rt1,Rt2,R1,R2,N1,N2,eta,delta,seed,subpovm_valid,G,collision_rate,packing_norm,runtime_ms"
        );
        assert!(lines.next().unwrap().ends_with(",,0"));
    }

    #[test]
    fn common_randomness_from_rate() {
        let cfg = SimulateConfig {
            c1: Some(0.5),
            n2: Some(3),
            ..SimulateConfig::default()
        };
        let p = cfg.params(&cfg.grid[0], 4, 0).unwrap();
        assert_eq!((p.n1, p.n2), (4, 3));
    }

    #[test]
    fn bin_rate_above_codebook_rate_is_rejected() {
        let cfg = SimulateConfig {
            grid: vec![RatePoint { rt1: 0.5, rt2: 1.0, r1: 1.0, r2: 0.5 }],
            ..SimulateConfig::default()
        };
        assert!(simulate(&Problem::fixture("example1").unwrap(), &cfg).is_err());
    }
}
