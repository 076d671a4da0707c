//! Finite-blocklength realization of the distributed simulation protocol.
//!
//! Each side draws codebooks from its pruned typical distribution, turns every
//! codeword into a rescaled typical operator, and reports a bin index. The
//! receiver decodes bin pairs by joint typicality and feeds the result through
//! the integration channel.

mod decoder;
mod dense;
mod engine;
mod lemmas;
mod params;
mod side;

pub use decoder::{build_decoder, BinnedCodebook, Decoded, DecoderTable};
pub use dense::{
    bin_povm, build_approx_operators, generate_codebooks, overall_povm, Codebook, DenseTrial,
};
pub use engine::{
    faithfulness_trial, interleave_perm, to_interleaved, Distance, PairKey, ProtocolSetup,
    Realization, SubPovmCheck, TrialOptions, TrialReport, ZKey, SENTINEL_LABEL,
};
pub use lemmas::{
    binning_collision_rate, distortion_of_protocol, mutual_covering_check, packing_norm_trial,
    packing_union_proxy, separate_check, soft_covering_trial, CollisionCount, MutualCovering,
    PackingInstance, ReconstructedOutcome,
};
pub use params::{rate_count, ProtocolParams, COUNT_CAP, DEFAULT_ETA};
pub use side::{substream, BinMap, Sentinel, SideCodebook, SideModel, Stream};

use crate::linalg::{self, CMat, DEFAULT_TOL};

/// (valid, excess) for Σ ops ≤ I, with excess = max(0, λ_max(Σ ops) − 1).
pub fn check_sub_povm(ops: &[CMat]) -> (bool, f64) {
    match ops.first() {
        None => (true, 0.0),
        Some(first) => {
            let mut s = linalg::zeros(first.nrows(), first.ncols());
            for o in ops {
                s += o;
            }
            check_sub_povm_sum(&s)
        }
    }
}

/// Same check for an already summed operator.
pub fn check_sub_povm_sum(sum: &CMat) -> (bool, f64) {
    if sum.nrows() == 0 {
        return (true, 0.0);
    }
    let excess = (linalg::max_eigenvalue(&linalg::hermitize(sum)) - 1.0).max(0.0);
    (excess <= DEFAULT_TOL, excess)
}
