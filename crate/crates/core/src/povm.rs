//! POVMs, sub-POVMs and ensembles.

use crate::error::{Error, Result};
use crate::linalg::{self, hermiticity_residual, kron, CMat, DEFAULT_TOL};
use crate::state::DensityOperator;

/// Label given to the operator added by [`complete_sub_povm`].
pub const COMPLETION_LABEL: &str = "complement";

/// Labelled family of PSD operators. `complete` records whether the family
/// was validated as summing to the identity or only to at most the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    outcomes: Vec<String>,
    operators: Vec<CMat>,
    dim: usize,
    complete: bool,
}

/// A sub-POVM shares the representation; see [`Povm::is_complete`].
pub type SubPovm = Povm;

fn check_family(outcomes: &[String], operators: &[CMat], dim: usize, tol: f64) -> Result<()> {
    if outcomes.len() != operators.len() {
        return Err(Error::InvalidPovm(format!(
            "{} labels for {} operators",
            outcomes.len(),
            operators.len()
        )));
    }
    let mut sorted: Vec<&String> = outcomes.iter().collect();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidPovm("duplicate outcome label".into()));
    }
    for (l, op) in outcomes.iter().zip(operators) {
        if op.nrows() != dim || op.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "operator `{l}` is {}x{}, expected {dim}x{dim}",
                op.nrows(),
                op.ncols()
            )));
        }
        let r = hermiticity_residual(op);
        if r > tol {
            return Err(Error::InvalidPovm(format!("operator `{l}` not hermitian ({r:.3e})")));
        }
        let min = linalg::min_eigenvalue(op);
        if min < -tol {
            return Err(Error::InvalidPovm(format!("operator `{l}` has eigenvalue {min:.3e}")));
        }
    }
    Ok(())
}

impl Povm {
    /// A complete POVM: operators must sum to the identity within the default tolerance.
    pub fn new(outcomes: Vec<String>, operators: Vec<CMat>, dim: usize) -> Result<Self> {
        Self::complete_with_tol(outcomes, operators, dim, DEFAULT_TOL)
    }

    pub fn complete_with_tol(
        outcomes: Vec<String>,
        operators: Vec<CMat>,
        dim: usize,
        tol: f64,
    ) -> Result<Self> {
        check_family(&outcomes, &operators, dim, tol)?;
        let total = sum(&operators, dim);
        let dev = linalg::max_abs_diff(&total, &linalg::identity(dim));
        if dev > tol {
            return Err(Error::InvalidPovm(format!(
                "operators sum to identity only within {dev:.3e}"
            )));
        }
        Ok(Self {
            outcomes,
            operators: operators.iter().map(linalg::hermitize).collect(),
            dim,
            complete: true,
        })
    }

    /// A sub-POVM: identity minus the sum must be PSD within the default tolerance.
    pub fn new_sub(outcomes: Vec<String>, operators: Vec<CMat>, dim: usize) -> Result<Self> {
        Self::sub_with_tol(outcomes, operators, dim, DEFAULT_TOL)
    }

    pub fn sub_with_tol(
        outcomes: Vec<String>,
        operators: Vec<CMat>,
        dim: usize,
        tol: f64,
    ) -> Result<Self> {
        check_family(&outcomes, &operators, dim, tol)?;
        let excess = linalg::max_eigenvalue(&sum(&operators, dim)) - 1.0;
        if excess > tol {
            return Err(Error::InvalidPovm(format!(
                "operators exceed the identity by {excess:.3e}"
            )));
        }
        Ok(Self {
            outcomes,
            operators: operators.iter().map(linalg::hermitize).collect(),
            dim,
            complete: false,
        })
    }

    /// Builds a family without the positivity or sum checks. Used for
    /// candidate sub-POVMs whose validity is itself the quantity under study.
    pub fn unchecked(outcomes: Vec<String>, operators: Vec<CMat>, dim: usize) -> Result<Self> {
        if outcomes.len() != operators.len() {
            return Err(Error::InvalidPovm("label and operator counts differ".into()));
        }
        if operators.iter().any(|o| o.nrows() != dim || o.ncols() != dim) {
            return Err(Error::DimensionMismatch("operator size".into()));
        }
        Ok(Self {
            outcomes,
            operators,
            dim,
            complete: false,
        })
    }

    /// Rank-one projectors onto the computational basis, labelled "0", "1", ...
    pub fn computational(dim: usize) -> Self {
        let ops = (0..dim)
            .map(|i| linalg::outer(&linalg::basis_ket(dim, i)))
            .collect();
        Self {
            outcomes: (0..dim).map(|i| i.to_string()).collect(),
            operators: ops,
            dim,
            complete: true,
        }
    }

    /// The one-outcome POVM {I}.
    pub fn trivial(dim: usize) -> Self {
        Self {
            outcomes: vec!["1".into()],
            operators: vec![linalg::identity(dim)],
            dim,
            complete: true,
        }
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn operators(&self) -> &[CMat] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.outcomes.iter().position(|l| l == label)
    }

    pub fn operator(&self, label: &str) -> Option<&CMat> {
        self.index_of(label).map(|i| &self.operators[i])
    }

    pub fn total(&self) -> CMat {
        sum(&self.operators, self.dim)
    }

    /// Outcome probabilities Tr(Λ_x ρ).
    pub fn probabilities(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "povm acts on dimension {}, state has {}",
                self.dim,
                rho.dim()
            )));
        }
        Ok(self.operators.iter().map(|op| rho.expectation(op)).collect())
    }

    /// M ⊗ N with labels "(x,y)", outcomes ordered with x major.
    pub fn tensor(&self, other: &Povm) -> Povm {
        let mut outcomes = Vec::with_capacity(self.len() * other.len());
        let mut operators = Vec::with_capacity(self.len() * other.len());
        for (x, a) in self.outcomes.iter().zip(&self.operators) {
            for (y, b) in other.outcomes.iter().zip(&other.operators) {
                outcomes.push(format!("({x},{y})"));
                operators.push(kron(a, b));
            }
        }
        Povm {
            outcomes,
            operators,
            dim: self.dim * other.dim,
            complete: self.complete && other.complete,
        }
    }
}

fn sum(ops: &[CMat], dim: usize) -> CMat {
    let mut t = linalg::zeros(dim, dim);
    for o in ops {
        t += o;
    }
    t
}

/// Appends I − ΣΛ_x under [`COMPLETION_LABEL`] (an already complete family gets a zero operator).
pub fn complete_sub_povm(m: &SubPovm) -> Result<Povm> {
    let rest = linalg::identity(m.dim) - m.total();
    let min = linalg::min_eigenvalue(&rest);
    if min < -DEFAULT_TOL {
        return Err(Error::InvalidPovm(format!(
            "completion operator has eigenvalue {min:.3e}"
        )));
    }
    let mut label = COMPLETION_LABEL.to_string();
    while m.index_of(&label).is_some() {
        label.push('\'');
    }
    let mut outcomes = m.outcomes.clone();
    let mut operators = m.operators.clone();
    outcomes.push(label);
    operators.push(linalg::hermitize(&rest));
    Ok(Povm {
        outcomes,
        operators,
        dim: m.dim,
        complete: true,
    })
}

/// Weighted family of states {p_i, ρ_i}.
#[derive(Debug, Clone)]
pub struct Ensemble {
    weights: Vec<f64>,
    states: Vec<DensityOperator>,
}

impl Ensemble {
    pub fn new(weights: Vec<f64>, states: Vec<DensityOperator>) -> Result<Self> {
        if weights.len() != states.len() || weights.is_empty() {
            return Err(Error::InvalidDistribution(
                "ensemble needs one weight per state and at least one state".into(),
            ));
        }
        check_probability_vector(&weights, DEFAULT_TOL)?;
        let d = states[0].dim();
        if states.iter().any(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch("ensemble states differ in dimension".into()));
        }
        Ok(Self { weights, states })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    /// Σ p_i ρ_i.
    pub fn average(&self) -> CMat {
        let d = self.dim();
        let mut m = linalg::zeros(d, d);
        for (p, s) in self.weights.iter().zip(&self.states) {
            m += s.matrix().scale(*p);
        }
        m
    }
}

/// Nonnegative entries summing to one within `tol`.
pub fn check_probability_vector(p: &[f64], tol: f64) -> Result<()> {
    if let Some(x) = p.iter().find(|x| !(**x >= -tol)) {
        return Err(Error::InvalidDistribution(format!("negative or NaN entry {x}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > tol {
        return Err(Error::InvalidDistribution(format!("entries sum to {s}")));
    }
    Ok(())
}
