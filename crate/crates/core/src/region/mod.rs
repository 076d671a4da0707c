//! Single-letter rate regions, their exact-rational form, and membership queries.

mod system;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use system::{
    int, quantize, rational, to_f64, Inequality, InequalitySystem, Rational, Relation,
    QUANTIZATION_DENOMINATOR,
};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, DEFAULT_TOL};
use crate::measurement::{
    auxiliary_states, sigma3_with_channel, AuxiliaryStates, CqState, SeparableDecomposition,
};
use crate::povm::{check_probability_vector, Povm};
use crate::state::{purify, DensityOperator};

/// One labelled affine constraint `Σ coefficients·var (relation) bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub label: String,
    pub coefficients: BTreeMap<String, f64>,
    pub relation: Relation,
    pub bound: f64,
}

/// Named bounds of a region together with the entropic quantities they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub variables: Vec<String>,
    pub constraints: Vec<Constraint>,
    pub sources: BTreeMap<String, f64>,
}

/// Per-constraint slack of a membership query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub inside: bool,
    pub slacks: Vec<(String, f64)>,
}

/// A rate point (R1, R2, C).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTriple {
    pub r1: f64,
    pub r2: f64,
    pub c: f64,
}

impl RateTriple {
    pub fn new(r1: f64, r2: f64, c: f64) -> Result<Self> {
        if !(r1 >= 0.0 && r2 >= 0.0 && c >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rates must be nonnegative, got ({r1}, {r2}, {c})"
            )));
        }
        Ok(Self { r1, r2, c })
    }
}

impl RegionReport {
    fn new(variables: &[&str]) -> Self {
        Self {
            variables: variables.iter().map(|s| s.to_string()).collect(),
            constraints: vec![],
            sources: BTreeMap::new(),
        }
    }

    fn push(&mut self, label: &str, terms: &[(&str, f64)], bound: f64) {
        self.constraints.push(Constraint {
            label: label.to_string(),
            coefficients: terms.iter().map(|(n, c)| (n.to_string(), *c)).collect(),
            relation: Relation::Ge,
            bound,
        });
    }

    fn source(&mut self, name: &str, value: f64) -> f64 {
        self.sources.insert(name.to_string(), value);
        value
    }

    /// Right-hand side of the constraint with this label.
    pub fn bound(&self, label: &str) -> Option<f64> {
        self.constraints.iter().find(|c| c.label == label).map(|c| c.bound)
    }

    /// Labels and right-hand sides in constraint order.
    pub fn bounds(&self) -> Vec<(String, f64)> {
        self.constraints.iter().map(|c| (c.label.clone(), c.bound)).collect()
    }

    /// Membership of a point given in the order of `variables`.
    /// Non-strict rows accept slack ≥ −tol; strict rows need slack > tol.
    pub fn membership_point(&self, point: &[f64], tol: f64) -> Result<Membership> {
        if point.len() != self.variables.len() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, region has {} variables",
                point.len(),
                self.variables.len()
            )));
        }
        let mut inside = true;
        let mut slacks = Vec::with_capacity(self.constraints.len());
        for c in &self.constraints {
            let mut lhs = 0.0;
            for (name, coef) in &c.coefficients {
                let i = self
                    .variables
                    .iter()
                    .position(|v| v == name)
                    .ok_or_else(|| Error::UnknownLabel(name.clone()))?;
                lhs += coef * point[i];
            }
            let s = lhs - c.bound;
            let ok = match c.relation {
                Relation::Ge => s >= -tol,
                Relation::Gt => s > tol,
            };
            inside &= ok;
            slacks.push((c.label.clone(), s));
        }
        Ok(Membership { inside, slacks })
    }

    /// Exact-rational form, constants quantized to the 1e-9 grid.
    pub fn to_system(&self) -> Result<InequalitySystem> {
        let mut sys = InequalitySystem::new(self.variables.iter().cloned());
        for c in &self.constraints {
            let terms: Vec<(&str, Rational)> = c
                .coefficients
                .iter()
                .map(|(n, v)| (n.as_str(), quantize(*v)))
                .collect();
            sys.add(&terms, c.relation, quantize(c.bound))?;
        }
        Ok(sys)
    }
}

/// Membership of (R1, R2, C) in a region over exactly those variables.
pub fn membership(p: &RateTriple, r: &RegionReport) -> Result<Membership> {
    let mut point = Vec::with_capacity(r.variables.len());
    for v in &r.variables {
        point.push(match v.as_str() {
            "R1" => p.r1,
            "R2" => p.r2,
            "C" => p.c,
            other => return Err(Error::UnknownLabel(other.to_string())),
        });
    }
    r.membership_point(&point, DEFAULT_TOL)
}

/// Winter's region over (R, C): R ≥ I(U;R), R + C ≥ S(U) for σ_RU = (id⊗M)(Ψ).
pub fn winter_region(rho: &DensityOperator, m: &Povm) -> Result<RegionReport> {
    let psi = purify(rho)?;
    let sigma = CqState::from_pure(&psi, &["R", "A"])?.measure("A", m, "U")?;
    let mut rep = RegionReport::new(&["R", "C"]);
    let i = rep.source("I(U;R)", sigma.mutual_information(&["U"], &["R"])?);
    let s = rep.source("S(U)", sigma.entropy(&["U"])?);
    rep.push("winter_rate", &[("R", 1.0)], i);
    rep.push("winter_sum", &[("R", 1.0), ("C", 1.0)], s);
    Ok(rep)
}

/// A POVM over W followed by classical post-processing P(x|w).
#[derive(Debug, Clone)]
pub struct PostProcessedPovm {
    pub povm: Povm,
    pub x_alphabet: Vec<String>,
    /// One distribution over X per outcome of `povm`.
    pub rows: Vec<Vec<f64>>,
}

impl PostProcessedPovm {
    pub fn new(povm: Povm, x_alphabet: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != povm.len() || rows.iter().any(|r| r.len() != x_alphabet.len()) {
            return Err(Error::DimensionMismatch("post-processing table shape".into()));
        }
        for r in &rows {
            check_probability_vector(r, DEFAULT_TOL)?;
        }
        Ok(Self {
            povm,
            x_alphabet,
            rows,
        })
    }

    /// Λ_x = Σ_w P(x|w) Λ̄_w.
    pub fn compose(&self) -> Result<Povm> {
        let d = self.povm.dim();
        let mut ops = vec![linalg::zeros(d, d); self.x_alphabet.len()];
        for (w, op) in self.povm.operators().iter().enumerate() {
            for (x, p) in self.rows[w].iter().enumerate() {
                if *p != 0.0 {
                    ops[x] += op.scale(*p);
                }
            }
        }
        Povm::new(self.x_alphabet.clone(), ops, d)
    }
}

/// Region over (R, C) for point-to-point simulation with stochastic
/// post-processing: R ≥ I(R;W), R + C ≥ I(RX;W).
pub fn p2p_stochastic_region(
    rho: &DensityOperator,
    decomposition: &PostProcessedPovm,
    target: &Povm,
) -> Result<RegionReport> {
    let composed = decomposition.compose()?;
    let mut dev: f64 = 0.0;
    for (label, op) in target.outcomes().iter().zip(target.operators()) {
        let got = composed
            .operator(label)
            .ok_or_else(|| Error::UnknownLabel(label.clone()))?;
        dev = dev.max(linalg::max_abs_diff(got, op));
    }
    if composed.len() != target.len() || dev > DEFAULT_TOL {
        return Err(Error::DecompositionMismatch(dev));
    }
    let psi = purify(rho)?;
    let sigma = CqState::from_pure(&psi, &["R", "A"])?
        .measure("A", &decomposition.povm, "W")?
        .attach_channel(&["W"], decomposition.x_alphabet.len(), "X", |w| {
            decomposition.rows[w[0]].clone()
        })?;
    let mut rep = RegionReport::new(&["R", "C"]);
    let a = rep.source("I(R;W)", sigma.mutual_information(&["R"], &["W"])?);
    let b = rep.source("I(RX;W)", sigma.mutual_information(&["R", "X"], &["W"])?);
    rep.push("p2p_rate", &[("R", 1.0)], a);
    rep.push("p2p_sum", &[("R", 1.0), ("C", 1.0)], b);
    Ok(rep)
}

const RCV: [&str; 3] = ["R1", "R2", "C"];

/// The six deterministic-integration bounds over (R1, R2, C).
pub fn dist_deterministic_region(aux: &AuxiliaryStates) -> Result<RegionReport> {
    let mut rep = RegionReport::new(&RCV);
    let iu = rep.source("I(U;RB)", aux.sigma1.mutual_information(&["U"], &["R", "B"])?);
    let iv = rep.source("I(V;RA)", aux.sigma2.mutual_information(&["V"], &["R", "A"])?);
    let iuv = rep.source("I(U;V)", aux.sigma3.mutual_information(&["U"], &["V"])?);
    let su_v = rep.source("S(U|V)", aux.sigma3.conditional_entropy(&["U"], &["V"])?);
    let sv_u = rep.source("S(V|U)", aux.sigma3.conditional_entropy(&["V"], &["U"])?);
    let suv = rep.source("S(U,V)", aux.sigma3.entropy(&["U", "V"])?);
    rep.source("S(U)", aux.sigma3.entropy(&["U"])?);
    rep.source("S(V)", aux.sigma3.entropy(&["V"])?);
    rep.push("rate1", &[("R1", 1.0)], iu - iuv);
    rep.push("rate2", &[("R2", 1.0)], iv - iuv);
    rep.push("rate3", &[("R1", 1.0), ("R2", 1.0)], iu + iv - iuv);
    rep.push("rate1c", &[("R1", 1.0), ("C", 1.0)], su_v);
    rep.push("rate2c", &[("R2", 1.0), ("C", 1.0)], sv_u);
    rep.push("rate4", &[("R1", 1.0), ("R2", 1.0), ("C", 1.0)], suv);
    Ok(rep)
}

/// Convenience: auxiliary states and the deterministic region in one call.
pub fn deterministic_region_for(
    rho_ab: &DensityOperator,
    d: &SeparableDecomposition,
) -> Result<RegionReport> {
    dist_deterministic_region(&auxiliary_states(rho_ab, d)?)
}

/// The six stochastic-integration bounds over (R1, R2, C); `sigma3z` carries
/// registers R, U, V, Z.
pub fn dist_stochastic_region(
    sigma1: &CqState,
    sigma2: &CqState,
    sigma3z: &CqState,
) -> Result<RegionReport> {
    let mut rep = RegionReport::new(&RCV);
    let iu = rep.source("I(U;RB)", sigma1.mutual_information(&["U"], &["R", "B"])?);
    let iv = rep.source("I(V;RA)", sigma2.mutual_information(&["V"], &["R", "A"])?);
    let iuv = rep.source("I(U;V)", sigma3z.mutual_information(&["U"], &["V"])?);
    let a = rep.source("I(U;RZV)", sigma3z.mutual_information(&["U"], &["R", "Z", "V"])?);
    let b = rep.source("I(V;RZ)", sigma3z.mutual_information(&["V"], &["R", "Z"])?);
    let c = rep.source("I(UV;RZ)", sigma3z.mutual_information(&["U", "V"], &["R", "Z"])?);
    rep.push("nfrate1", &[("R1", 1.0)], iu - iuv);
    rep.push("nfrate2", &[("R2", 1.0)], iv - iuv);
    rep.push("nfrate3", &[("R1", 1.0), ("R2", 1.0)], iu + iv - iuv);
    rep.push("nfrate1c", &[("R1", 1.0), ("C", 1.0)], a - iuv);
    rep.push("nfrate2c", &[("R2", 1.0), ("C", 1.0)], b - iuv);
    rep.push("nfrate4", &[("R1", 1.0), ("R2", 1.0), ("C", 1.0)], c);
    Ok(rep)
}

/// Convenience: builds σ₁, σ₂ and σ₃^{RUVZ} from the decomposition's channel.
pub fn stochastic_region_for(
    rho_ab: &DensityOperator,
    d: &SeparableDecomposition,
) -> Result<RegionReport> {
    let aux = auxiliary_states(rho_ab, d)?;
    let s3 = sigma3_with_channel(&aux.sigma3, d.channel())?;
    dist_stochastic_region(&aux.sigma1, &aux.sigma2, &s3)
}

/// Inputs of the distributed quantum-to-classical rate–distortion inner bound.
pub struct RateDistortionSetup<'a> {
    pub rho_ab: &'a DensityOperator,
    /// (M_A^q, M_B^q) for each time-sharing value q.
    pub family: &'a [(Povm, Povm)],
    pub p_q: &'a [f64],
    /// Reconstruction state S_{u,v,q} on X̂.
    pub recon: &'a dyn Fn(usize, usize, usize) -> DensityOperator,
    /// Distortion observable on R ⊗ X̂, with R of dimension d_A·d_B.
    pub delta: &'a CMat,
}

/// Tr{Δ (id_R ⊗ N)(Ψ)} with N(ρ) = Σ_{u,v,q} P(q) Tr{(Λ_u^q⊗Λ_v^q)ρ} S_{u,v,q}.
///
/// The reference block of outcome (u,v) is (√ρ (Λ_u⊗Λ_v) √ρ)ᵀ.
pub fn single_letter_distortion(setup: &RateDistortionSetup<'_>) -> Result<f64> {
    let rho = setup.rho_ab;
    let s = rho.sqrt();
    let dr = rho.dim();
    let mut total = 0.0;
    for (q, (ma, mb)) in setup.family.iter().enumerate() {
        for (u, a) in ma.operators().iter().enumerate() {
            for (v, b) in mb.operators().iter().enumerate() {
                let block = (&s * linalg::kron(a, b) * &s).transpose();
                let recon = (setup.recon)(u, v, q);
                let dx = recon.dim();
                if setup.delta.nrows() != dr * dx {
                    return Err(Error::DimensionMismatch(format!(
                        "distortion observable is {}x{}, expected side {}",
                        setup.delta.nrows(),
                        setup.delta.ncols(),
                        dr * dx
                    )));
                }
                let x = linalg::kron(&block, recon.matrix());
                total += setup.p_q[q] * linalg::trace_of_product(setup.delta, &x).re;
            }
        }
    }
    Ok(total)
}

/// Inner bound over (R1, R2, D) with time sharing.
pub fn rd_inner_bound(setup: &RateDistortionSetup<'_>) -> Result<RegionReport> {
    check_probability_vector(setup.p_q, DEFAULT_TOL)?;
    if setup.p_q.len() != setup.family.len() {
        return Err(Error::DimensionMismatch("one probability per family member".into()));
    }
    if !linalg::is_psd(setup.delta, DEFAULT_TOL) {
        return Err(Error::InvalidParameter("distortion observable must be PSD".into()));
    }
    let (mut iu, mut iv, mut iuv) = (0.0, 0.0, 0.0);
    for ((ma, mb), p) in setup.family.iter().zip(setup.p_q) {
        if *p == 0.0 {
            continue;
        }
        let d = SeparableDecomposition::identity_integration(ma.clone(), mb.clone());
        let aux = auxiliary_states(setup.rho_ab, &d)?;
        iu += p * aux.sigma1.mutual_information(&["U"], &["R", "B"])?;
        iv += p * aux.sigma2.mutual_information(&["V"], &["R", "A"])?;
        iuv += p * aux.sigma3.mutual_information(&["U"], &["V"])?;
    }
    let mut rep = RegionReport::new(&["R1", "R2", "D"]);
    rep.source("I(U;RB|Q)", iu);
    rep.source("I(V;RA|Q)", iv);
    rep.source("I(U;V|Q)", iuv);
    let dist = rep.source("d", single_letter_distortion(setup)?);
    rep.push("rd_rate1", &[("R1", 1.0)], iu - iuv);
    rep.push("rd_rate2", &[("R2", 1.0)], iv - iuv);
    rep.push("rd_rate3", &[("R1", 1.0), ("R2", 1.0)], iu + iv - iuv);
    rep.push("rd_distortion", &[("D", 1.0)], dist);
    Ok(rep)
}

/// The intermediate system over (R1, R2, C, R̃1, R̃2, C1, C2) whose projection
/// onto (R1, R2, C) is the deterministic-integration region.
///
/// `q` holds I(U;RB), I(V;RA), I(U;V), S(U), S(V) in that order.
pub fn intermediate_system(q: [Rational; 5]) -> Result<InequalitySystem> {
    let [iu, iv, iuv, su, sv] = q;
    let zero = int(0);
    let mut s = InequalitySystem::new(["R1", "R2", "C", "Rt1", "Rt2", "C1", "C2"]);
    s.ge(&[("Rt1", 1)], iu)?;
    s.ge(&[("Rt2", 1)], iv)?;
    s.ge(&[("C1", 1), ("Rt1", 1)], su)?;
    s.ge(&[("C2", 1), ("Rt2", 1)], sv)?;
    s.lt(&[("Rt1", 1), ("R1", -1), ("Rt2", 1), ("R2", -1)], iuv)?;
    s.ge(&[("Rt1", 1), ("R1", -1)], zero.clone())?;
    s.ge(&[("R1", 1)], zero.clone())?;
    s.ge(&[("Rt2", 1), ("R2", -1)], zero.clone())?;
    s.ge(&[("R2", 1)], zero.clone())?;
    s.le(&[("C1", 1), ("C2", 1), ("C", -1)], zero.clone())?;
    s.ge(&[("C1", 1)], zero.clone())?;
    s.ge(&[("C2", 1)], zero)?;
    Ok(s)
}

/// The deterministic-integration system over (R1, R2, C) plus R1, R2, C ≥ 0,
/// from I(U;RB), I(V;RA), I(U;V), S(U), S(V).
pub fn deterministic_system(q: [Rational; 5]) -> Result<InequalitySystem> {
    let [iu, iv, iuv, su, sv] = q;
    let suv = &su + &sv - &iuv;
    let zero = int(0);
    let mut s = InequalitySystem::new(RCV);
    s.ge(&[("R1", 1)], &iu - &iuv)?;
    s.ge(&[("R2", 1)], &iv - &iuv)?;
    s.ge(&[("R1", 1), ("R2", 1)], &iu + &iv - &iuv)?;
    s.ge(&[("R1", 1), ("C", 1)], &suv - &sv)?;
    s.ge(&[("R2", 1), ("C", 1)], &suv - &su)?;
    s.ge(&[("R1", 1), ("R2", 1), ("C", 1)], suv)?;
    s.ge(&[("R1", 1)], zero.clone())?;
    s.ge(&[("R2", 1)], zero.clone())?;
    s.ge(&[("C", 1)], zero)?;
    Ok(s)
}

/// Outcome of comparing the projected intermediate system with the direct one.
#[derive(Debug, Clone)]
pub struct FmComparison {
    pub projected: InequalitySystem,
    pub direct: InequalitySystem,
    /// Irredundant closures agree row for row.
    pub equal: bool,
}

/// Eliminates (R̃1, R̃2, C1, C2) and compares irredundant closures.
pub fn fm_check(q: [Rational; 5]) -> Result<FmComparison> {
    let inter = intermediate_system(q.clone())?;
    let projected = inter
        .fourier_motzkin(&["Rt1", "Rt2", "C1", "C2"])?
        .reorder(&RCV)?;
    let direct = deterministic_system(q)?;
    let a = projected.closure().irredundant();
    let b = direct.irredundant();
    let equal = a.same_rows(&b);
    Ok(FmComparison {
        projected,
        direct,
        equal,
    })
}

/// Entropic inputs of [`fm_check`] read off a deterministic region report.
pub fn fm_inputs(rep: &RegionReport) -> Result<[Rational; 5]> {
    let get = |k: &str| {
        rep.sources
            .get(k)
            .copied()
            .map(quantize)
            .ok_or_else(|| Error::UnknownLabel(k.to_string()))
    };
    Ok([
        get("I(U;RB)")?,
        get("I(V;RA)")?,
        get("I(U;V)")?,
        get("S(U)")?,
        get("S(V)")?,
    ])
}
