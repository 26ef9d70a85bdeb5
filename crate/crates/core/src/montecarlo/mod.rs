//! Monte Carlo experiments and the statistics behind their verdicts.
//!
//! Paths are mapped in parallel, each from its own counter-based stream, and
//! every reduction runs sequentially in a fixed pairwise order, so results
//! do not depend on the number of workers.

mod charfn;
mod convolution;
mod experiment;
mod law;
mod stats;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::kernels::Verdict;

pub use charfn::{stable_char_functional, CharFnResult, ZWeight};
pub use convolution::{
    run_convolution, ConvolutionConfig, ConvolutionPoint, ConvolutionResult, ConvolutionRung,
    ConvolutionSummary,
};
pub use experiment::{
    run_experiment, ExperimentConfig, ExperimentResult, ExperimentSummary, LadderPoint,
};
pub use law::{sample_limit_law, LimitLaw, U1Descriptor};
pub use stats::{
    ks_statistic, ks_two_sample, moments_with_se, pairwise_sum, pearson, probe_correlations,
    Correlation, KsResult, Moments,
};

/// Runs with fewer paths report every verdict as inconclusive.
pub const MIN_VERDICT_PATHS: usize = 1000;

/// One named check of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictLine {
    pub check: String,
    pub verdict: Verdict,
    pub detail: String,
}

impl VerdictLine {
    pub fn from_bool(check: &str, ok: bool, detail: String) -> Self {
        Self {
            check: check.to_string(),
            verdict: if ok {
                Verdict::Supports
            } else {
                Verdict::Fails
            },
            detail,
        }
    }
}

/// Lowercase hex SHA-256 of the concatenated parts.
pub fn sha256_hex(parts: &[Vec<u8>]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
