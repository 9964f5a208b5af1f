//! Exact check of the binomial sum bound
//!
//! ```text
//! Σ_{j=2}^{n-1} C(n,j) (j-1)^{2(j-1)} (n-j)^{2(n-j)} ≤ (3/2) e n (n-1)^{2(n-1)}
//! ```
//!
//! The left side is an exact integer; `e` is enclosed between two
//! rational partial sums, so a pass is a proof for that `n`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `n` accepted by [`verify_stirling_lemma`].
pub const MAX_N: u32 = 200;

/// Terms of the exponential series used to enclose `e` (error < 1/61!).
const E_TERMS: u32 = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StirlingRow {
    pub n: u32,
    /// Exact left side in decimal.
    pub lhs: String,
    /// `lhs / rhs`, rounded to `f64`.
    pub ratio: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StirlingReport {
    pub n_from: u32,
    pub n_to: u32,
    pub rows: Vec<StirlingRow>,
    pub all_hold: bool,
    pub max_ratio: f64,
}

/// Rational bounds `e_lo < e < e_hi`.
pub fn e_enclosure() -> (BigRational, BigRational) {
    let mut sum = BigRational::zero();
    let mut term = BigRational::one();
    for k in 0..=E_TERMS {
        if k > 0 {
            term /= BigRational::from_integer(BigInt::from(k));
        }
        sum += &term;
    }
    // tail Σ_{k>K} 1/k! < 2/(K+1)!
    let tail = &term * BigRational::new(BigInt::from(2), BigInt::from(E_TERMS + 1));
    let hi = &sum + tail;
    (sum, hi)
}

fn binomial(n: u32, k: u32) -> BigInt {
    num_integer::binomial(BigInt::from(n), BigInt::from(k))
}

fn pow(base: u32, exp: u32) -> BigInt {
    num_traits::pow(BigInt::from(base), exp as usize)
}

/// Exact left side of the sum bound.
pub fn stirling_lhs(n: u32) -> BigInt {
    (2..n)
        .map(|j| binomial(n, j) * pow(j - 1, 2 * (j - 1)) * pow(n - j, 2 * (n - j)))
        .sum()
}

/// `n (n-1)^{2(n-1)}`, the right side without the factor `(3/2) e`.
pub fn stirling_rhs_core(n: u32) -> BigInt {
    BigInt::from(n) * pow(n - 1, 2 * (n - 1))
}

fn row(n: u32, e_lo: &BigRational, e_hi: &BigRational) -> StirlingRow {
    let lhs = stirling_lhs(n);
    let core = BigRational::from_integer(stirling_rhs_core(n));
    let three_halves = BigRational::new(BigInt::from(3), BigInt::from(2));
    let rhs_lo = &three_halves * e_lo * &core;
    let rhs_mid = &three_halves * ((e_lo + e_hi) / BigRational::from_integer(BigInt::from(2))) * &core;
    let lhs_q = BigRational::from_integer(lhs.clone());
    let holds = lhs_q <= rhs_lo;
    let ratio = (&lhs_q / rhs_mid).to_f64().unwrap_or(f64::NAN);
    StirlingRow {
        n,
        lhs: lhs.to_string(),
        ratio,
        holds,
    }
}

/// Verifies the bound for every `n` in `[n_from, n_to]`, in parallel.
pub fn verify_stirling_lemma(n_from: u32, n_to: u32) -> Result<StirlingReport> {
    if !(3 <= n_from && n_from <= n_to && n_to <= MAX_N) {
        return Err(Error::InvalidArgument(format!(
            "need 3 <= n_from <= n_to <= {MAX_N}, got [{n_from}, {n_to}]"
        )));
    }
    let (e_lo, e_hi) = e_enclosure();
    let rows: Vec<StirlingRow> = (n_from..=n_to)
        .into_par_iter()
        .map(|n| row(n, &e_lo, &e_hi))
        .collect();
    let all_hold = rows.iter().all(|r| r.holds);
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(StirlingReport {
        n_from,
        n_to,
        rows,
        all_hold,
        max_ratio,
    })
}
