//! Per-arm running sums and the two mean estimators built from them.
//!
//! With allocations `A_s` and rewards `Y_s`:
//!
//! ```text
//! mu_hat_1 = Σ Y_s / Σ A_s
//! mu_hat_2 = (1 / #{s: A_s > 0}) · Σ_{A_s > 0} Y_s / A_s
//! r1       = (Σ A_s)² / Σ A_s^{2b}
//! r2       = #{s: A_s > 0}² / Σ_{A_s > 0} A_s^{2b-2}
//! ```
//!
//! `r1` and `r2` are the inverse variances of the two estimators under unit
//! Gaussian noise and a deterministic allocation sequence.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The powers of a single allocation that the statistics need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocPowers<F> {
    pub a: F,
    /// `A^{2b}`
    pub a_2b: F,
    /// `A^{2-2b}`
    pub a_2m2b: F,
    /// `A^{2b-2}`, zero when `A = 0`.
    pub a_2bm2: F,
}

impl<F: Scalar> AllocPowers<F> {
    pub fn new(a: F, b: F) -> Self {
        let two = F::lit(2.0);
        if a <= F::zero() {
            return Self { a: F::zero(), a_2b: F::zero(), a_2m2b: F::zero(), a_2bm2: F::zero() };
        }
        let ln_a = a.ln();
        Self {
            a,
            a_2b: (two * b * ln_a).exp(),
            a_2m2b: ((two - two * b) * ln_a).exp(),
            a_2bm2: ((two * b - two) * ln_a).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArmStatistics<F> {
    /// Rounds observed, including zero-allocation rounds.
    pub rounds: u64,
    /// `S = Σ A`
    pub sum_a: F,
    /// `L = Σ A^{2b}`
    pub sum_a2b: F,
    /// `B = Σ A^{2-2b}`
    pub sum_a2m2b: F,
    pub sum_y: F,
    /// `Σ 1(A > 0)`
    pub count_pos: u64,
    /// `Σ (Y/A)·1(A > 0)`
    pub sum_y_over_a: F,
    /// `Σ A^{2b-2}·1(A > 0)`
    pub sum_a2bm2: F,
}

impl<F: Scalar> ArmStatistics<F> {
    pub fn new() -> Self {
        Self {
            rounds: 0,
            sum_a: F::zero(),
            sum_a2b: F::zero(),
            sum_a2m2b: F::zero(),
            sum_y: F::zero(),
            count_pos: 0,
            sum_y_over_a: F::zero(),
            sum_a2bm2: F::zero(),
        }
    }

    /// Replays a full `(A, Y)` history.
    pub fn from_history(history: &[(F, F)], b: F) -> Self {
        let mut s = Self::new();
        for &(a, y) in history {
            s.update(a, y, b);
        }
        s
    }

    pub fn update(&mut self, a: F, y: F, b: F) {
        self.update_with(&AllocPowers::new(a, b), y);
    }

    /// Same as [`update`](Self::update) with the powers precomputed, so
    /// callers that hand the same share to many arms pay for them once.
    pub fn update_with(&mut self, p: &AllocPowers<F>, y: F) {
        self.rounds += 1;
        self.sum_y += y;
        if p.a > F::zero() {
            self.sum_a += p.a;
            self.sum_a2b += p.a_2b;
            self.sum_a2m2b += p.a_2m2b;
            self.count_pos += 1;
            self.sum_y_over_a += y / p.a;
            self.sum_a2bm2 += p.a_2bm2;
        }
    }

    pub fn mu_hat_1(&self) -> Result<F> {
        if self.sum_a > F::zero() {
            Ok(self.sum_y / self.sum_a)
        } else {
            Err(Error::UndefinedEstimate("mu_hat_1 needs a positive total allocation"))
        }
    }

    pub fn mu_hat_2(&self) -> Result<F> {
        if self.count_pos > 0 {
            Ok(self.sum_y_over_a / F::from_count(self.count_pos as usize))
        } else {
            Err(Error::UndefinedEstimate("mu_hat_2 needs a round with positive allocation"))
        }
    }

    pub fn r1(&self) -> Result<F> {
        if self.sum_a2b > F::zero() {
            Ok(self.sum_a * self.sum_a / self.sum_a2b)
        } else {
            Err(Error::UndefinedEstimate("r1 needs a positive allocation"))
        }
    }

    pub fn r2(&self) -> Result<F> {
        if self.count_pos > 0 && self.sum_a2bm2 > F::zero() {
            let n = F::from_count(self.count_pos as usize);
            Ok(n * n / self.sum_a2bm2)
        } else {
            Err(Error::UndefinedEstimate("r2 needs a positive allocation"))
        }
    }
}
