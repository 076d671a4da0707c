//! Built-in states and decompositions used by tests, benches and the CLI.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CVec};
use crate::measurement::{Channel, SeparableDecomposition};
use crate::povm::Povm;
use crate::state::DensityOperator;

/// A bipartite state with a decomposition of the measurement applied to it.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub rho_ab: DensityOperator,
    pub decomposition: SeparableDecomposition,
}

pub const FIXTURE_NAMES: [&str; 4] = ["example1", "binary-correlated", "product", "qubit-inside"];

fn labels(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// ½{|0⟩⟨0|, |1⟩⟨1|, |+⟩⟨+|, |−⟩⟨−|}.
pub fn four_state_povm() -> Povm {
    let h = FRAC_1_SQRT_2;
    let kets = [
        CVec::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]),
        CVec::from_vec(vec![c64(0.0, 0.0), c64(1.0, 0.0)]),
        CVec::from_vec(vec![c64(h, 0.0), c64(h, 0.0)]),
        CVec::from_vec(vec![c64(h, 0.0), c64(-h, 0.0)]),
    ];
    let ops = kets.iter().map(|k| linalg::outer(k).scale(0.5)).collect();
    Povm::new(labels(&["0", "1", "+", "-"]), ops, 2).expect("valid povm")
}

/// cos θ|00⟩ + sin θ|11⟩.
pub fn schmidt_state(theta: f64) -> DensityOperator {
    let mut v = CVec::zeros(4);
    v[0] = c64(theta.cos(), 0.0);
    v[3] = c64(theta.sin(), 0.0);
    DensityOperator::pure(&v, vec![2, 2]).expect("normalized")
}

/// Bell state measured by the four-state POVM on both sides.
pub fn example1() -> Fixture {
    Fixture {
        name: "example1",
        rho_ab: schmidt_state(std::f64::consts::FRAC_PI_4),
        decomposition: SeparableDecomposition::identity_integration(
            four_state_povm(),
            four_state_povm(),
        ),
    }
}

/// ½(|00⟩⟨00| + |11⟩⟨11|) with computational measurements: U = V uniform.
pub fn binary_correlated() -> Fixture {
    let rho = DensityOperator::new(linalg::real_diag(&[0.5, 0.0, 0.0, 0.5]), vec![2, 2])
        .expect("valid state");
    Fixture {
        name: "binary-correlated",
        rho_ab: rho,
        decomposition: SeparableDecomposition::identity_integration(
            Povm::computational(2),
            Povm::computational(2),
        ),
    }
}

/// diag(0.7, 0.3) ⊗ diag(0.6, 0.4) with computational measurements.
pub fn product() -> Fixture {
    let a = DensityOperator::from_matrix(linalg::real_diag(&[0.7, 0.3])).expect("valid");
    let b = DensityOperator::from_matrix(linalg::real_diag(&[0.6, 0.4])).expect("valid");
    Fixture {
        name: "product",
        rho_ab: a.tensor(&b),
        decomposition: SeparableDecomposition::identity_integration(
            Povm::computational(2),
            Povm::computational(2),
        ),
    }
}

/// Partially entangled pure qubit pair measured in the computational basis.
pub fn qubit_inside() -> Fixture {
    let theta = QUBIT_INSIDE_THETA;
    Fixture {
        name: "qubit-inside",
        rho_ab: schmidt_state(theta),
        decomposition: SeparableDecomposition::identity_integration(
            Povm::computational(2),
            Povm::computational(2),
        ),
    }
}

/// cos²θ ≈ 0.85.
pub const QUBIT_INSIDE_THETA: f64 = 0.397_699_415_092_071_74;

/// Example 1 with the integration Z = (U, V) written out as an explicit channel.
pub fn example1_with_copy_channel() -> Result<SeparableDecomposition> {
    let mut z = Vec::new();
    for u in ["0", "1", "+", "-"] {
        for v in ["0", "1", "+", "-"] {
            z.push(format!("({u},{v})"));
        }
    }
    let ch = Channel::deterministic(z, 4, 4, |u, v| u * 4 + v)?;
    SeparableDecomposition::new(four_state_povm(), four_state_povm(), ch)
}

pub fn fixture(name: &str) -> Result<Fixture> {
    match name {
        "example1" => Ok(example1()),
        "binary-correlated" => Ok(binary_correlated()),
        "product" => Ok(product()),
        "qubit-inside" => Ok(qubit_inside()),
        other => Err(Error::UnknownLabel(format!(
            "no fixture `{other}`; known: {}",
            FIXTURE_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fixtures_load() {
        for n in FIXTURE_NAMES {
            let f = fixture(n).unwrap();
            assert_eq!(f.rho_ab.dims(), &[2, 2]);
        }
        assert!(fixture("nope").is_err());
    }

    #[test]
    fn inside_fixture_weight() {
        assert!((QUBIT_INSIDE_THETA.cos().powi(2) - 0.85).abs() < 1e-12);
    }
}
