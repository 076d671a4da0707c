use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest codebook or bin count a rate may round to.
pub const COUNT_CAP: u128 = 1 << 20;

pub const DEFAULT_ETA: f64 = 0.1;

fn default_eta() -> f64 {
    DEFAULT_ETA
}

/// Blocklength, rates and randomness of one protocol instance.
///
/// `rt1`, `rt2` are codebook rates and `r1`, `r2` bin rates, in bits per symbol;
/// `n1`, `n2` count the common-randomness values on each side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub n: usize,
    pub rt1: f64,
    pub rt2: f64,
    pub r1: f64,
    pub r2: f64,
    pub n1: usize,
    pub n2: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
    pub delta: f64,
    pub seed: u64,
}

/// max(1, round(2^{n·rate})).
pub fn rate_count(n: usize, rate: f64) -> Result<usize> {
    let x = (n as f64 * rate).exp2().round();
    if !x.is_finite() || x > COUNT_CAP as f64 {
        return Err(Error::CapExceeded {
            what: "codebook or bin count",
            needed: if x.is_finite() { x as u128 } else { u128::MAX },
            cap: COUNT_CAP,
        });
    }
    Ok((x as usize).max(1))
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        for (name, r) in [("rt1", self.rt1), ("rt2", self.rt2), ("r1", self.r1), ("r2", self.r2)] {
            if !(r >= 0.0 && r.is_finite()) {
                return bad(format!("{name} must be a nonnegative number, got {r}"));
            }
        }
        if self.r1 > self.rt1 || self.r2 > self.rt2 {
            return bad("bin rates may not exceed codebook rates".into());
        }
        if self.n1 == 0 || self.n2 == 0 {
            return bad("common-randomness counts must be at least 1".into());
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta must lie in (0,1), got {}", self.eta));
        }
        if !(self.delta > 0.0) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        self.counts().map(|_| ())
    }

    /// (L1, L2, K1, K2): codebook sizes and bin counts.
    pub fn counts(&self) -> Result<(usize, usize, usize, usize)> {
        Ok((
            rate_count(self.n, self.rt1)?,
            rate_count(self.n, self.rt2)?,
            rate_count(self.n, self.r1)?,
            rate_count(self.n, self.r2)?,
        ))
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }
}
