//! Deformation parameters and q-arithmetic at q = exp(2πi/(S+1)).

mod signed_log;

pub use signed_log::{log_sum_exp, neumaier_sum, LogSum, SignedLogValue, CANCELLATION_RATIO};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QpbError, Result};

/// Truncation `S` of the Fock space (dimension `S + 1`) and the root of unity
/// `q = exp(i phi)`, `phi = 2π/(S+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationParams {
    s: usize,
    phi: f64,
    q: Complex64,
}

impl DeformationParams {
    /// Validated constructor: `S` must be even and at least 2, otherwise the
    /// q-ladder hits a zero bracket before reaching `|S>`.
    pub fn new(s: usize) -> Result<Self> {
        if s < 2 {
            return Err(QpbError::TruncationTooSmall(s));
        }
        if !s.is_multiple_of(2) {
            return Err(QpbError::OddTruncation(s));
        }
        Ok(Self::unchecked(s))
    }

    /// Skips the parity check. Only meaningful for undeformed (Pegg-Barnett)
    /// constructions, which do not care about the q-ladder.
    pub fn unchecked(s: usize) -> Self {
        let phi = 2.0 * PI / (s as f64 + 1.0);
        let (sin, cos) = unit_root_sin_cos(1, s + 1);
        DeformationParams {
            s,
            phi,
            q: Complex64::new(cos, sin),
        }
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Hilbert-space dimension `S + 1`.
    pub fn dim(&self) -> usize {
        self.s + 1
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn q(&self) -> Complex64 {
        self.q
    }
}

/// Branch used for square roots of negative q-brackets and q-factorials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SqrtBranch {
    /// `sqrt(-x) = i sqrt(x)`.
    Principal,
    /// `sqrt(|x|)`; the sign is discarded.
    #[default]
    Modulus,
}

impl SqrtBranch {
    /// Square root of a real under this branch.
    pub fn sqrt(self, x: f64) -> Complex64 {
        match self {
            SqrtBranch::Modulus => Complex64::new(x.abs().sqrt(), 0.0),
            SqrtBranch::Principal if x < 0.0 => Complex64::new(0.0, (-x).sqrt()),
            SqrtBranch::Principal => Complex64::new(x.sqrt(), 0.0),
        }
    }
}

impl std::str::FromStr for SqrtBranch {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "principal" => Ok(SqrtBranch::Principal),
            "modulus" => Ok(SqrtBranch::Modulus),
            other => Err(format!(
                "unknown branch '{other}' (expected principal or modulus)"
            )),
        }
    }
}

/// `(sin, cos)` of `2π k / n`, reduced to the first octant through integer
/// arithmetic so results stay accurate for large `n`.
pub fn unit_root_sin_cos(k: i64, n: usize) -> (f64, f64) {
    let n = n as i64;
    // angle = π j / n with j in [0, 2n)
    let j = (2 * k).rem_euclid(2 * n);
    let (j, sin_sign) = if j > n { (2 * n - j, -1.0) } else { (j, 1.0) };
    // now angle in [0, π]
    let (j, cos_sign) = if 2 * j > n { (n - j, -1.0) } else { (j, 1.0) };
    // angle in [0, π/2]
    let x = PI * j as f64 / n as f64;
    (sin_sign * x.sin(), cos_sign * x.cos())
}

/// Table of `exp(2πi k / n)` for `k = 0..n`.
pub fn unit_roots(n: usize) -> Vec<Complex64> {
    (0..n as i64)
        .map(|k| {
            let (s, c) = unit_root_sin_cos(k, n);
            Complex64::new(c, s)
        })
        .collect()
}

/// q-number `[n] = sin(n phi) / sin(phi)`; exactly zero when `(S+1) | n`.
pub fn q_number(n: usize, params: &DeformationParams) -> f64 {
    let dim = params.dim();
    let m = n % dim;
    if m == 0 {
        return 0.0;
    }
    let (num, _) = unit_root_sin_cos(m as i64, dim);
    let (den, _) = unit_root_sin_cos(1, dim);
    num / den
}

/// q-factorial `[1][2]...[n]` for `0 <= n <= S+1`, with `[0]! = 1` and
/// `[S+1]! = [S]!` (the zero factor is dropped).
pub fn q_factorial(n: usize, params: &DeformationParams) -> Result<SignedLogValue> {
    if n > params.dim() {
        return Err(QpbError::Domain(format!(
            "q-factorial [{n}]! is undefined beyond [S+1]! with S = {}",
            params.s()
        )));
    }
    let top = n.min(params.s());
    Ok((1..=top).fold(SignedLogValue::ONE, |acc, k| {
        acc * SignedLogValue::from_real(q_number(k, params))
    }))
}

/// Cumulative `[n]!` for `n = 0..=S`.
#[derive(Debug, Clone)]
pub struct QFactorialTable {
    values: Vec<SignedLogValue>,
}

impl QFactorialTable {
    pub fn new(params: &DeformationParams) -> Self {
        let mut values = Vec::with_capacity(params.dim());
        let mut acc = SignedLogValue::ONE;
        values.push(acc);
        for k in 1..=params.s() {
            acc = acc * SignedLogValue::from_real(q_number(k, params));
            values.push(acc);
        }
        QFactorialTable { values }
    }

    /// `[n]!` for `n <= S+1`.
    pub fn get(&self, n: usize) -> SignedLogValue {
        self.values[n.min(self.values.len() - 1)]
    }

    /// `[S]!`, equal to `[S+1]!` under the dropped-zero convention.
    pub fn top(&self) -> SignedLogValue {
        *self.values.last().expect("table is never empty")
    }

    pub fn as_slice(&self) -> &[SignedLogValue] {
        &self.values
    }
}

/// `sum_{l=0}^{S} q^{l delta}`: `S+1` when `(S+1) | delta`, zero otherwise.
pub fn kronecker_comb(delta: i64, params: &DeformationParams) -> f64 {
    let dim = params.dim();
    let terms = (0..dim as i64).map(|l| {
        // q^{l delta} with the exponent reduced exactly mod S+1
        let k = (l as i128 * delta as i128).rem_euclid(dim as i128) as i64;
        unit_root_sin_cos(k, dim).1
    });
    neumaier_sum(terms)
}
