use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RetrieveError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalMode {
    #[default]
    PprPcst,
    Semantic,
    Hybrid,
}

impl RetrievalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RetrievalMode::PprPcst => "ppr_pcst",
            RetrievalMode::Semantic => "semantic",
            RetrievalMode::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for RetrievalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RetrievalMode {
    type Err = RetrieveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "ppr_pcst" => Ok(RetrievalMode::PprPcst),
            "semantic" => Ok(RetrievalMode::Semantic),
            "hybrid" => Ok(RetrievalMode::Hybrid),
            _ => Err(RetrieveError::InvalidConfig(format!(
                "unknown mode {s:?} (expected ppr_pcst, semantic or hybrid)"
            ))),
        }
    }
}

/// Retriever hyperparameters.
///
/// Defaults: node budget 30, depth 4 hops, restart probability 0.15,
/// semantic top-k 10.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default, deny_unknown_fields)]
pub struct RetrievalConfig<T> {
    pub alpha: T,
    pub max_nodes: usize,
    pub max_depth: usize,
    pub top_k: usize,
    pub ppr_tolerance: T,
    pub ppr_max_iterations: usize,
    pub mode: RetrievalMode,
}

impl<T: Scalar> RetrievalConfig<T> {
    pub const DEFAULT_MAX_NODES: usize = 30;
    pub const DEFAULT_MAX_DEPTH: usize = 4;
    pub const DEFAULT_TOP_K: usize = 10;
    pub const DEFAULT_MAX_ITERATIONS: usize = 1000;

    pub fn default_alpha() -> T {
        T::lit(0.15)
    }

    pub fn validate(&self) -> Result<(), RetrieveError> {
        let bad = |msg: String| Err(RetrieveError::InvalidConfig(msg));
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.max_nodes < 1 {
            return bad("max_nodes must be at least 1".into());
        }
        if self.max_depth < 1 {
            return bad("max_depth must be at least 1".into());
        }
        if self.top_k < 1 {
            return bad("top_k must be at least 1".into());
        }
        if self.ppr_tolerance.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) {
            return bad("ppr_tolerance must be positive".into());
        }
        if self.ppr_max_iterations < 1 {
            return bad("ppr_max_iterations must be at least 1".into());
        }
        Ok(())
    }
}

impl<T: Scalar> Default for RetrievalConfig<T> {
    fn default() -> Self {
        RetrievalConfig {
            alpha: Self::default_alpha(),
            max_nodes: Self::DEFAULT_MAX_NODES,
            max_depth: Self::DEFAULT_MAX_DEPTH,
            top_k: Self::DEFAULT_TOP_K,
            ppr_tolerance: T::default_ppr_tolerance(),
            ppr_max_iterations: Self::DEFAULT_MAX_ITERATIONS,
            mode: RetrievalMode::PprPcst,
        }
    }
}
