//! Linkage measures.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// The supported linkage measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Linkage {
    Single,
    Complete,
    Wpgma,
    /// Exact average linkage (UPGMA).
    AvgExact,
    /// Approximate average linkage with closeness parameter.
    AvgApprox,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown linkage `{0}` (expected single, complete, wpgma, avg-exact or avg-approx)")]
pub struct ParseLinkageError(pub String);

impl Linkage {
    pub const ALL: [Linkage; 5] = [
        Linkage::Single,
        Linkage::Complete,
        Linkage::Wpgma,
        Linkage::AvgExact,
        Linkage::AvgApprox,
    ];

    pub const TRIANGLE: [Linkage; 3] = [Linkage::Single, Linkage::Complete, Linkage::Wpgma];

    pub fn name(self) -> &'static str {
        match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Wpgma => "wpgma",
            Linkage::AvgExact => "avg-exact",
            Linkage::AvgApprox => "avg-approx",
        }
    }

    /// True for linkages where merging B and C only changes W(A, .) when A
    /// is adjacent to both.
    pub fn is_triangle_based(self) -> bool {
        matches!(self, Linkage::Single | Linkage::Complete | Linkage::Wpgma)
    }

    pub fn is_average(self) -> bool {
        !self.is_triangle_based()
    }

    /// Combines the two weights of a collision during union or relabel.
    ///
    /// # Panics
    ///
    /// Panics for the average kinds, which combine cut sums instead.
    #[inline]
    pub fn combine(self, w1: f64, w2: f64) -> f64 {
        match self {
            Linkage::Single => w1.max(w2),
            Linkage::Complete => w1.min(w2),
            Linkage::Wpgma => (w1 + w2) / 2.0,
            Linkage::AvgExact | Linkage::AvgApprox => {
                panic!("average linkage combines cut sums, not weights")
            }
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Linkage {
    type Err = ParseLinkageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Linkage::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| ParseLinkageError(s.to_string()))
    }
}

/// Average-linkage similarity from a cut sum and the two cluster sizes.
#[inline]
pub fn average_weight(cut_sum: f64, size_a: usize, size_b: usize) -> f64 {
    cut_sum / (size_a as f64 * size_b as f64)
}
