//! Floating-point scalar abstraction for the numeric parts of retrieval.
//!
//! PageRank scores, prizes, embeddings and cosine similarities are computed
//! over any [`Scalar`]; `f64` is the default used by the CLI.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// floating point: f32 or f64
pub trait Scalar:
    Float
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` constant, panicking only if the type cannot hold it.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Default PageRank convergence threshold for this precision.
    ///
    /// `1e-10` where the type resolves it, otherwise a small multiple of epsilon.
    fn default_ppr_tolerance() -> Self {
        let floor = Self::epsilon() * Self::lit(16.0);
        Self::lit(1e-10).max(floor)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
