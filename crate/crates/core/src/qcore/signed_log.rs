//! Sign plus log-magnitude reals.
//!
//! Magnitudes are held as `2^exp2 * e^frac` with a small `frac`, so that
//! factorial-scale products neither overflow nor lose the last few bits
//! that a single `ln|x|` double would drop for |x| near 1e±300.

use std::fmt;
use std::ops::{Div, Mul, Neg};

// Cody-Waite split of ln 2; `LN2_HI` has trailing zero bits so `k * LN2_HI`
// is exact for |k| < 2^20.
const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;
const LN2: f64 = std::f64::consts::LN_2;

/// Result magnitude below this fraction of the largest term flags cancellation.
pub const CANCELLATION_RATIO: f64 = 1e-10;

#[derive(Clone, Copy)]
pub struct SignedLogValue {
    sign: i8,
    exp2: i64,
    frac: f64,
}

impl SignedLogValue {
    pub const ZERO: SignedLogValue = SignedLogValue {
        sign: 0,
        exp2: 0,
        frac: 0.0,
    };
    pub const ONE: SignedLogValue = SignedLogValue {
        sign: 1,
        exp2: 0,
        frac: 0.0,
    };

    fn normalized(sign: i8, exp2: i64, frac: f64) -> Self {
        if sign == 0 {
            return Self::ZERO;
        }
        if !frac.is_finite() {
            return SignedLogValue { sign, exp2, frac };
        }
        let k = (frac / LN2).round();
        let frac = (frac - k * LN2_HI) - k * LN2_LO;
        SignedLogValue {
            sign,
            exp2: exp2 + k as i64,
            frac,
        }
    }

    /// Builds a value from a sign and a natural-log magnitude.
    /// A sign of zero (or `ln_mag = -inf`) gives zero.
    pub fn from_ln(sign: i8, ln_mag: f64) -> Self {
        if sign == 0 || ln_mag == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        Self::normalized(sign.signum(), 0, ln_mag)
    }

    pub fn from_real(x: f64) -> Self {
        if x == 0.0 {
            return Self::ZERO;
        }
        let sign = if x > 0.0 { 1 } else { -1 };
        let a = x.abs();
        if !a.is_finite() {
            return SignedLogValue {
                sign,
                exp2: 0,
                frac: a,
            };
        }
        let (m, e) = frexp(a);
        Self::normalized(sign, e, m.ln())
    }

    pub fn to_real(self) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        f64::from(self.sign) * ldexp(self.frac.exp(), self.exp2)
    }

    /// -1, 0 or +1.
    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// Natural log of the magnitude; `-inf` for zero.
    pub fn ln_mag(self) -> f64 {
        if self.sign == 0 {
            return f64::NEG_INFINITY;
        }
        self.exp2 as f64 * LN2 + self.frac
    }

    pub fn abs(self) -> Self {
        SignedLogValue {
            sign: self.sign.abs(),
            ..self
        }
    }

    pub fn recip(self) -> Self {
        assert!(self.sign != 0, "reciprocal of zero");
        Self::normalized(self.sign, -self.exp2, -self.frac)
    }

    pub fn powi(self, n: i64) -> Self {
        if n == 0 {
            return Self::ONE;
        }
        if self.sign == 0 {
            assert!(n > 0, "negative power of zero");
            return Self::ZERO;
        }
        let sign = if self.sign < 0 && n % 2 != 0 { -1 } else { 1 };
        Self::normalized(sign, 0, self.ln_mag() * n as f64)
    }

    /// `|x|^p`, dropping the sign.
    pub fn abs_powf(self, p: f64) -> Self {
        if self.sign == 0 {
            return if p == 0.0 { Self::ONE } else { Self::ZERO };
        }
        Self::from_ln(1, self.ln_mag() * p)
    }

    /// Positive square root of the magnitude.
    pub fn sqrt_abs(self) -> Self {
        if self.sign == 0 {
            return Self::ZERO;
        }
        // halve exactly in the exponent where possible
        let half = self.exp2.div_euclid(2);
        let rem = self.exp2.rem_euclid(2) as f64;
        Self::normalized(1, half, 0.5 * (self.frac + rem * LN2))
    }

    /// Ratio `self / max` as a plain double, exact in the exponent difference.
    fn scaled_against(self, max: SignedLogValue) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        let d = (self.exp2 - max.exp2) as f64 * LN2 + (self.frac - max.frac);
        f64::from(self.sign) * d.exp()
    }
}

impl Default for SignedLogValue {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Debug for SignedLogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignedLogValue({:+}, ln {})", self.sign, self.ln_mag())
    }
}

impl Mul for SignedLogValue {
    type Output = SignedLogValue;

    fn mul(self, rhs: Self) -> Self {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        Self::normalized(
            self.sign * rhs.sign,
            self.exp2 + rhs.exp2,
            self.frac + rhs.frac,
        )
    }
}

impl Div for SignedLogValue {
    type Output = SignedLogValue;

    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl Neg for SignedLogValue {
    type Output = SignedLogValue;

    fn neg(self) -> Self {
        SignedLogValue {
            sign: -self.sign,
            ..self
        }
    }
}

/// Sum of signed-log terms with a cancellation diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    pub value: SignedLogValue,
    /// Set when |sum| < 1e-10 * max |term|.
    pub cancellation: bool,
}

/// Exact-sign sum of signed-log values, computed by factoring out the largest
/// magnitude. An empty slice sums to zero.
pub fn log_sum_exp(values: &[SignedLogValue]) -> LogSum {
    let Some(max) = values
        .iter()
        .copied()
        .filter(|v| !v.is_zero())
        .max_by(|a, b| a.ln_mag().total_cmp(&b.ln_mag()))
    else {
        return LogSum {
            value: SignedLogValue::ZERO,
            cancellation: false,
        };
    };
    let s = neumaier_sum(values.iter().map(|v| v.scaled_against(max)));
    let value = SignedLogValue { sign: 1, ..max } * SignedLogValue::from_real(s);
    LogSum {
        value,
        cancellation: s.abs() < CANCELLATION_RATIO,
    }
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

/// Splits a positive finite `x` into `m * 2^e` with `m` in [0.5, 1).
fn frexp(x: f64) -> (f64, i64) {
    let bits = x.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    if raw_exp == 0 {
        // subnormal: lift into the normal range first
        let (m, e) = frexp(x * 2f64.powi(64));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ff << 52)) | (1022 << 52));
    (m, raw_exp - 1022)
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    const STEP: i64 = 1000;
    let up = 2f64.powi(STEP as i32);
    let down = 2f64.powi(-STEP as i32);
    while e > STEP {
        x *= up;
        e -= STEP;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -STEP {
        x *= down;
        e += STEP;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}
