//! Named inputs used by tests, examples and the CLI.

use crate::error::Result;
use crate::perm::Permutation;
use crate::rauzy::{periodic_lengths, periodic_trace, InductionTrace};

/// A closed loop of Rauzy steps at the symmetric permutation on four
/// letters. Its self-similar lengths are close to `(0.43, 0.34, 0.12, 0.11)`.
pub const SYMMETRIC4_LOOP: &str = "110101010111101101111";

/// An IET that induces to a rescaled copy of itself along `word`.
#[derive(Clone, Debug)]
pub struct SelfSimilar {
    pub perm: Permutation,
    pub word: String,
    pub lambda: Vec<f64>,
    /// Perron-Frobenius eigenvalue of the loop cocycle.
    pub rho: f64,
}

impl SelfSimilar {
    pub fn new(perm: Permutation, word: &str) -> Result<Self> {
        let (lambda, rho) = periodic_lengths(&perm, word)?;
        Ok(SelfSimilar { perm, word: word.to_string(), lambda, rho })
    }

    /// `n` levels of induction without precision loss.
    pub fn trace(&self, n: usize) -> Result<InductionTrace<f64>> {
        periodic_trace(&self.lambda, &self.perm, &self.word, self.rho, n)
    }
}

pub fn symmetric4() -> SelfSimilar {
    SelfSimilar::new(Permutation::symmetric(4), SYMMETRIC4_LOOP).expect("loop closes")
}

/// Rotation by the golden mean as a two-interval exchange.
pub fn golden_rotation() -> (Permutation, Vec<f64>) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    ("2 1".parse().expect("valid"), vec![g, 1.0 - g])
}
