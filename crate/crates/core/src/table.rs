use serde::Serialize;

use crate::error::{Error, Result};

const NEGATIVE_TOL: f64 = 1e-10;

/// Probabilities of the four outcome pairs of two two-level observables,
/// in the order `(++, +−, −+, −−)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointTable {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

impl JointTable {
    /// `w_ss' = ¼(1 + s⟨A⟩ + s'⟨B⟩ + ss'⟨AB⟩)`.
    ///
    /// Entries below `-1e-10` are rejected; smaller negative rounding is
    /// clamped to zero.
    pub fn from_moments(a: f64, b: f64, ab: f64) -> Result<Self> {
        let entry = |s: f64, t: f64| 0.25 * (1.0 + s * a + t * b + s * t * ab);
        let raw = [
            entry(1.0, 1.0),
            entry(1.0, -1.0),
            entry(-1.0, 1.0),
            entry(-1.0, -1.0),
        ];
        for (index, &value) in raw.iter().enumerate() {
            if value < -NEGATIVE_TOL {
                return Err(Error::NegativeProbability { index, value });
            }
        }
        let [pp, pm, mp, mm] = raw.map(|v| v.max(0.0));
        Ok(Self { pp, pm, mp, mm })
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.pp, self.pm, self.mp, self.mm]
    }

    /// Entry for outcome signs `(first, second)`, each `±1`.
    pub fn get(&self, first: i8, second: i8) -> f64 {
        match (first > 0, second > 0) {
            (true, true) => self.pp,
            (true, false) => self.pm,
            (false, true) => self.mp,
            (false, false) => self.mm,
        }
    }

    pub fn total(&self) -> f64 {
        self.entries().iter().sum()
    }
}
