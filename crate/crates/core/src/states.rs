//! Coherent and two-mode squeezed states in the Pegg-Barnett (PB) and
//! q-deformed Pegg-Barnett (qPB) Fock spaces.
//!
//! All magnitudes are assembled in the log domain: `n!`, `[n]!` and
//! `tanh^n r` leave the double range long before `S = 2000`.

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::entanglement::SchmidtSpectrum;
use crate::error::{QpbError, Result};
use crate::qcore::{
    log_sum_exp, neumaier_sum, unit_roots, DeformationParams, QFactorialTable, SignedLogValue,
    SqrtBranch,
};

/// Largest `b` accepted by the real-valued [`k_series_closed`], whose
/// defining sum contains `e^b`.
pub const CLOSED_FORM_MAX_B: f64 = 700.0;

/// Alias corrections below this relative size are not evaluated; they are
/// already under half an ulp of the leading term.
const ALIAS_NEGLIGIBLE: f64 = 1e-18;

/// `ln n!`.
pub fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// Normalized single-mode state over `|0>, ..., |S>`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    params: DeformationParams,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Normalizes `amplitudes`, which must have length `S + 1` and not vanish.
    pub fn from_amplitudes(params: DeformationParams, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != params.dim() {
            return Err(QpbError::Domain(format!(
                "expected {} amplitudes, got {}",
                params.dim(),
                amplitudes.len()
            )));
        }
        let norm = neumaier_sum(amplitudes.iter().map(|a| a.norm_sqr())).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QpbError::Domain("state has zero or non-finite norm".into()));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(StateVector { params, amplitudes })
    }

    /// Builds a normalized state from per-level `(ln |a_n|, arg a_n)`.
    fn from_log_polar(params: DeformationParams, terms: &[(f64, f64)]) -> Self {
        let max = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
        let amps = terms
            .iter()
            .map(|&(ln_mag, arg)| Complex64::from_polar((ln_mag - max).exp(), arg))
            .collect();
        Self::from_amplitudes(params, amps).expect("the largest log term is finite")
    }

    pub fn number_state(params: DeformationParams, n: usize) -> Result<Self> {
        if n > params.s() {
            return Err(QpbError::Domain(format!(
                "|{n}> lies above |S={}>",
                params.s()
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); params.dim()];
        amps[n] = Complex64::new(1.0, 0.0);
        Self::from_amplitudes(params, amps)
    }

    pub fn vacuum(params: DeformationParams) -> Self {
        Self::number_state(params, 0).expect("vacuum always exists")
    }

    pub fn params(&self) -> &DeformationParams {
        &self.params
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        neumaier_sum(self.amplitudes.iter().map(|a| a.norm_sqr()))
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|<self|other>|`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm()
    }
}

/// Truncated PB coherent state, amplitudes proportional to `alpha^n / sqrt(n!)`.
pub fn coherent_pb(alpha: Complex64, params: &DeformationParams) -> StateVector {
    coherent_from(alpha, params, |n| (0.5 * ln_factorial(n), 0.0))
}

/// qPB coherent state, amplitudes proportional to `alpha^n / sqrt([n]!)`.
pub fn coherent_qpb(
    alpha: Complex64,
    params: &DeformationParams,
    branch: SqrtBranch,
) -> StateVector {
    let table = QFactorialTable::new(params);
    coherent_from(alpha, params, |n| {
        let f = table.get(n);
        // 1/sqrt(-x) = -i/sqrt(x) on the principal branch
        let arg = match branch {
            SqrtBranch::Principal if f.sign() < 0 => -std::f64::consts::FRAC_PI_2,
            _ => 0.0,
        };
        (0.5 * f.ln_mag(), arg)
    })
}

/// `denominator(n)` returns `(ln |sqrt(d_n)|, arg of 1/sqrt(d_n))`.
fn coherent_from<F>(alpha: Complex64, params: &DeformationParams, denominator: F) -> StateVector
where
    F: Fn(usize) -> (f64, f64),
{
    if alpha.norm() == 0.0 {
        return StateVector::vacuum(*params);
    }
    let (ln_abs, arg) = (alpha.norm().ln(), alpha.arg());
    let terms: Vec<(f64, f64)> = (0..params.dim())
        .map(|n| {
            let (ln_den, den_arg) = denominator(n);
            (n as f64 * ln_abs - ln_den, n as f64 * arg + den_arg)
        })
        .collect();
    StateVector::from_log_polar(*params, &terms)
}

/// qPB coherent state from the folding construction, plus its convergence flag.
#[derive(Debug, Clone)]
pub struct FoldedCoherent {
    pub state: StateVector,
    /// False when the `k = k_max` term is not below 1e-16 of the `k = 0` term.
    pub converged: bool,
}

/// Folds the infinite q-space coherent series onto `|0>...|S>`: the amplitude
/// of `|n>` is the sum of `alpha^m / sqrt|[m]!|` over `m = n + k(S+1)`,
/// `k = 0..=k_max`, with zero brackets dropped from `[m]!`.
pub fn coherent_qpb_folded(
    alpha: Complex64,
    params: &DeformationParams,
    k_max: usize,
) -> Result<FoldedCoherent> {
    if k_max < 1 {
        return Err(QpbError::Domain("k_max must be at least 1".into()));
    }
    if alpha.norm() == 0.0 {
        return Ok(FoldedCoherent {
            state: StateVector::vacuum(*params),
            converged: true,
        });
    }
    let dim = params.dim();
    let top = params.s() + k_max * dim;
    // ln |[m]!| with every zero factor [j(S+1)] skipped
    let mut ln_fact = Vec::with_capacity(top + 1);
    let mut acc = 0.0;
    ln_fact.push(acc);
    for j in 1..=top {
        if j % dim != 0 {
            acc += crate::qcore::q_number(j, params).abs().ln();
        }
        ln_fact.push(acc);
    }

    let (ln_abs, arg) = (alpha.norm().ln(), alpha.arg());
    let mut converged = true;
    let terms: Vec<(f64, f64)> = (0..dim)
        .map(|n| {
            let parts: Vec<(f64, f64)> = (0..=k_max)
                .map(|k| {
                    let m = n + k * dim;
                    (m as f64 * ln_abs - 0.5 * ln_fact[m], m as f64 * arg)
                })
                .collect();
            if parts[k_max].0 - parts[0].0 > (1e-16f64).ln() {
                converged = false;
            }
            complex_log_sum(&parts)
        })
        .collect();
    Ok(FoldedCoherent {
        state: StateVector::from_log_polar(*params, &terms),
        converged,
    })
}

/// Sum of `exp(ln_mag) * exp(i arg)` terms, returned as `(ln |sum|, arg sum)`.
fn complex_log_sum(parts: &[(f64, f64)]) -> (f64, f64) {
    let max = parts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let s: Complex64 = parts
        .iter()
        .map(|&(l, a)| Complex64::from_polar((l - max).exp(), a))
        .sum();
    (max + s.norm().ln(), s.arg())
}

/// Two-mode state `sum_n C(n) |n,n>` with real, normalized coefficients.
#[derive(Debug, Clone)]
pub struct TwoModeDiagonalState {
    params: DeformationParams,
    coefficients: Vec<SignedLogValue>,
    probabilities: Vec<f64>,
}

impl TwoModeDiagonalState {
    /// Normalizes unnormalized signed-log coefficients.
    pub fn from_coefficients(
        params: DeformationParams,
        coefficients: Vec<SignedLogValue>,
    ) -> Result<Self> {
        if coefficients.len() != params.dim() {
            return Err(QpbError::Domain(format!(
                "expected {} coefficients, got {}",
                params.dim(),
                coefficients.len()
            )));
        }
        let squares: Vec<SignedLogValue> = coefficients.iter().map(|c| c.abs().powi(2)).collect();
        let total = log_sum_exp(&squares).value;
        if total.is_zero() || !total.ln_mag().is_finite() {
            return Err(QpbError::Domain("two-mode state has zero norm".into()));
        }
        let scale = total.sqrt_abs().recip();
        let coefficients: Vec<SignedLogValue> = coefficients.iter().map(|&c| c * scale).collect();
        let probabilities = coefficients
            .iter()
            .map(|c| (2.0 * c.ln_mag()).exp())
            .collect();
        Ok(TwoModeDiagonalState {
            params,
            coefficients,
            probabilities,
        })
    }

    pub fn params(&self) -> &DeformationParams {
        &self.params
    }

    /// Normalized `C(n)`.
    pub fn coefficients(&self) -> &[SignedLogValue] {
        &self.coefficients
    }

    /// `p_n = |C(n)|^2`.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn spectrum(&self) -> SchmidtSpectrum {
        SchmidtSpectrum::from_normalized(self.probabilities.clone())
    }

    /// `|<self|other>|` for two states over the same truncation.
    pub fn fidelity(&self, other: &TwoModeDiagonalState) -> f64 {
        let terms = self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(&a, &b)| (a * b).to_real());
        neumaier_sum(terms).abs()
    }
}

/// `ln tanh r`, accurate for large `r` where `tanh r` rounds to 1.
pub fn ln_tanh(r: f64) -> f64 {
    if r == 0.0 {
        return f64::NEG_INFINITY;
    }
    let e = (-2.0 * r).exp();
    (-e).ln_1p() - e.ln_1p()
}

fn check_r(r: f64) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(QpbError::Domain(format!(
            "squeezing parameter must be finite and non-negative, got {r}"
        )));
    }
    Ok(())
}

/// Truncated PB two-mode squeezed state, `C(n) ∝ tanh^n r`.
pub fn squeezed_pb(r: f64, params: &DeformationParams) -> Result<TwoModeDiagonalState> {
    check_r(r)?;
    let lt = ln_tanh(r);
    let coeffs = (0..params.dim())
        .map(|n| {
            if n == 0 {
                SignedLogValue::ONE
            } else {
                SignedLogValue::from_ln(1, n as f64 * lt)
            }
        })
        .collect();
    TwoModeDiagonalState::from_coefficients(*params, coeffs)
}

/// `|D|^2 = (1 - tanh^2 r) / (1 - tanh^{2S+2} r)` for `r > 0`.
pub fn pb_normalization_closed(r: f64, params: &DeformationParams) -> f64 {
    let t2 = r.tanh().powi(2);
    (1.0 - t2) / (1.0 - t2.powi(params.s() as i32 + 1))
}

/// Squeezing parameter and the derived `b = tanh(r) |[S]!|^{1/(S+1)}`.
#[derive(Debug, Clone, Copy)]
pub struct SqueezeInput {
    pub r: f64,
    pub tanh_r: f64,
    pub ln_tanh_r: f64,
    /// `ln |[S]!|^{1/(S+1)}`.
    pub ln_root: f64,
    pub b: f64,
    pub ln_b: f64,
}

impl SqueezeInput {
    pub fn new(r: f64, params: &DeformationParams) -> Result<Self> {
        check_r(r)?;
        let top = QFactorialTable::new(params).top();
        Ok(Self::with_top(r, params, top))
    }

    fn with_top(r: f64, params: &DeformationParams, top: SignedLogValue) -> Self {
        let ln_root = top.ln_mag() / params.dim() as f64;
        let ln_tanh_r = ln_tanh(r);
        let ln_b = ln_tanh_r + ln_root;
        SqueezeInput {
            r,
            tanh_r: r.tanh(),
            ln_tanh_r,
            ln_root,
            b: ln_b.exp(),
            ln_b,
        }
    }
}

fn check_k_args(n: usize, b: f64, params: &DeformationParams) -> Result<()> {
    if n > params.s() {
        return Err(QpbError::Domain(format!("K(n) needs n <= S, got n = {n}")));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(QpbError::Domain(format!(
            "K(n) needs finite b >= 0, got {b}"
        )));
    }
    Ok(())
}

/// `K(n) = sum_k b^{n+k(S+1)} / (n+k(S+1))!` by direct summation.
pub fn k_series_direct(n: usize, b: f64, params: &DeformationParams) -> Result<f64> {
    Ok(ln_k_series_direct(n, b, params)?.to_real())
}

/// Log-domain [`k_series_direct`]: terms are taken relative to the `k = 0` term
/// and summed with compensation until the next one drops below 1e-18 of the sum.
pub fn ln_k_series_direct(n: usize, b: f64, params: &DeformationParams) -> Result<SignedLogValue> {
    check_k_args(n, b, params)?;
    if b == 0.0 {
        return Ok(if n == 0 {
            SignedLogValue::ONE
        } else {
            SignedLogValue::ZERO
        });
    }
    let dim = params.dim();
    let ln_b = b.ln();
    let ln_lead = n as f64 * ln_b - ln_factorial(n);
    let mut sum = 0.0;
    let mut comp = 0.0;
    for k in 0.. {
        let m = n + k * dim;
        let t = ((m - n) as f64 * ln_b + ln_factorial(n) - ln_factorial(m)).exp();
        if k > 0 && t < 1e-18 * (sum + comp) {
            break;
        }
        let s = sum + t;
        comp += if sum >= t {
            (sum - s) + t
        } else {
            (t - s) + sum
        };
        sum = s;
    }
    Ok(SignedLogValue::from_ln(1, ln_lead + (sum + comp).ln()))
}

/// `K(n)` from the roots-of-unity filter `(1/(S+1)) sum_l q^{-ln} e^{b q^l}`.
///
/// Errors with [`QpbError::Overflow`] when `b > 700`, where `e^b` in the
/// defining sum is not representable.
pub fn k_series_closed(n: usize, b: f64, params: &DeformationParams) -> Result<f64> {
    if b > CLOSED_FORM_MAX_B {
        return Err(QpbError::Overflow(format!(
            "K-series bound exceeded: b = {b} > {CLOSED_FORM_MAX_B}"
        )));
    }
    Ok(ln_k_series_closed(n, b, params)?.to_real())
}

/// Log-domain roots-of-unity evaluation of `K(n)`.
///
/// Every Taylor term of `e^{bz}` below degree `n + S + 1` other than `z^n`
/// sits in a different residue class mod `S + 1` and is removed exactly by the
/// filter, so
///
/// ```text
/// K(n) = b^n/n! + b^{n+S+1}/(n+S+1)! * (1/(S+1)) sum_l Phi(b q^l),
/// Phi(z) = sum_j z^j (n+S+1)! / (n+S+1+j)!
/// ```
///
/// which avoids the `e^b` cancellation of the raw sum.
pub fn ln_k_series_closed(n: usize, b: f64, params: &DeformationParams) -> Result<SignedLogValue> {
    check_k_args(n, b, params)?;
    if b == 0.0 {
        return Ok(if n == 0 {
            SignedLogValue::ONE
        } else {
            SignedLogValue::ZERO
        });
    }
    let ln_b = b.ln();
    let ln_lead = n as f64 * ln_b - ln_factorial(n);
    let correction = alias_correction(n, b, params, None);
    Ok(SignedLogValue::from_ln(1, ln_lead + correction.ln_1p()))
}

/// Relative alias correction `K(n) / (b^n/n!) - 1`. `roots` may carry a
/// precomputed table of `(S+1)`-th roots of unity.
fn alias_correction(
    n: usize,
    b: f64,
    params: &DeformationParams,
    roots: Option<&[Complex64]>,
) -> f64 {
    let dim = params.dim();
    let top = n + dim;
    let ln_scale = dim as f64 * b.ln() + ln_factorial(n) - ln_factorial(top);
    let ratio = b / (top as f64 + 1.0);
    // Phi(b) <= 1/(1 - ratio) bounds every |Phi(b q^l)|
    if ratio < 1.0 && ln_scale - (-ratio).ln_1p() < ALIAS_NEGLIGIBLE.ln() {
        return 0.0;
    }
    let filtered = match roots {
        Some(r) => alias_filter_with(top, b, r),
        None => alias_filter_with(top, b, &unit_roots(dim)),
    };
    ln_scale.exp() * filtered.re
}

/// `(1/(S+1)) sum_l Phi_{n+S+1}(b q^l)`: the aliased part of `K(n)` before
/// scaling by `b^{n+S+1}/(n+S+1)!`. The imaginary part vanishes up to rounding.
pub fn k_alias_filter(n: usize, b: f64, params: &DeformationParams) -> Result<Complex64> {
    check_k_args(n, b, params)?;
    Ok(alias_filter_with(
        n + params.dim(),
        b,
        &unit_roots(params.dim()),
    ))
}

fn alias_filter_with(top: usize, b: f64, roots: &[Complex64]) -> Complex64 {
    let sum: Complex64 = roots.iter().map(|&w| tail_ratio_series(top, b * w)).sum();
    sum / roots.len() as f64
}

/// `sum_j z^j top! / (top+j)!`, the scaled exponential tail `E_top(z) top!/z^top`.
fn tail_ratio_series(top: usize, z: Complex64) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for j in 1..100_000 {
        term *= z / (top + j) as f64;
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

/// qPB two-mode squeezed state from the resummed fold:
/// `C(n) = [n]! |[S]!|^{-n/(S+1)} K(n)` with real `b`.
pub fn squeezed_qpb(r: f64, params: &DeformationParams) -> Result<TwoModeDiagonalState> {
    check_r(r)?;
    let table = QFactorialTable::new(params);
    let input = SqueezeInput::with_top(r, params, table.top());
    if input.b == 0.0 {
        return squeezed_pb(0.0, params);
    }
    let roots = unit_roots(params.dim());
    let coeffs = (0..params.dim())
        .map(|n| {
            // [n]! B^{-n} b^n / n! = [n]! tanh^n / n!, kept exact in the exponent
            let ln_lead = n as f64 * input.ln_tanh_r - ln_factorial(n);
            let corr = alias_correction(n, input.b, params, Some(&roots));
            table.get(n) * SignedLogValue::from_ln(1, ln_lead + corr.ln_1p())
        })
        .collect();
    TwoModeDiagonalState::from_coefficients(*params, coeffs)
}

/// qPB squeezed state from truncating the q-space series at `n = S`:
/// `C(n) ∝ [n]! tanh^n(r) / n!`.
pub fn squeezed_qpb_truncated(r: f64, params: &DeformationParams) -> Result<TwoModeDiagonalState> {
    check_r(r)?;
    let table = QFactorialTable::new(params);
    let lt = ln_tanh(r);
    let coeffs = (0..params.dim())
        .map(|n| {
            if n == 0 {
                SignedLogValue::ONE
            } else {
                table.get(n) * SignedLogValue::from_ln(1, n as f64 * lt - ln_factorial(n))
            }
        })
        .collect();
    TwoModeDiagonalState::from_coefficients(*params, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: usize) -> DeformationParams {
        DeformationParams::new(s).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn coherent_pb_vacuum_and_small_case() {
        let v = coherent_pb(c(0.0), &p(4));
        assert_eq!(v.amplitudes()[0], c(1.0));
        assert!(v.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));

        let s = coherent_pb(c(1.0), &p(2));
        let mods: Vec<f64> = s.amplitudes().iter().map(|a| a.norm()).collect();
        for (m, e) in mods.iter().zip([0.63246, 0.63246, 0.44721]) {
            assert!((m - e).abs() < 1e-5);
        }
    }

    #[test]
    fn coherent_pb_peak_at_alpha_squared() {
        let s = coherent_pb(c(5.0), &p(500));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        let max = s.amplitudes().iter().map(|a| a.norm()).fold(0.0, f64::max);
        // |a_24| = |a_25| exactly for |alpha|^2 = 25
        assert!((s.amplitudes()[25].norm() - max).abs() < 1e-12);
        assert!((s.amplitudes()[24].norm() - max).abs() < 1e-12);
        assert!(s.amplitudes()[26].norm() < max - 1e-3);
    }

    #[test]
    fn coherent_qpb_branches_s2() {
        let params = p(2);
        let pr = coherent_qpb(c(1.0), &params, SqrtBranch::Principal);
        let md = coherent_qpb(c(1.0), &params, SqrtBranch::Modulus);
        let k = 1.0 / 3f64.sqrt();
        for a in pr.amplitudes().iter().chain(md.amplitudes()) {
            assert!((a.norm() - 0.57735).abs() < 1e-5);
        }
        assert!((pr.amplitudes()[2] - Complex64::new(0.0, -k)).norm() < 1e-12);
        assert!((md.amplitudes()[2] - c(k)).norm() < 1e-12);
        assert!(coherent_qpb(c(0.0), &params, SqrtBranch::Modulus).amplitudes()[0] == c(1.0));
    }

    #[test]
    fn folded_coherent_matches_direct_ray() {
        let f = coherent_qpb_folded(c(1.0), &p(2), 8).unwrap();
        let d = coherent_qpb(c(1.0), &p(2), SqrtBranch::Modulus);
        assert!((f.state.fidelity(&d) - 1.0).abs() < 1e-12);

        // the fold factor diverges for alpha = 5, S = 30 but stays n-independent
        let f = coherent_qpb_folded(c(5.0), &p(30), 8).unwrap();
        assert!(!f.converged);
        let d = coherent_qpb(c(5.0), &p(30), SqrtBranch::Modulus);
        assert!((f.state.fidelity(&d) - 1.0).abs() < 1e-10);

        let v = coherent_qpb_folded(c(0.0), &p(4), 3).unwrap();
        assert_eq!(v.state.amplitudes()[0], c(1.0));
        assert!(coherent_qpb_folded(c(1.0), &p(4), 0).is_err());
    }

    #[test]
    fn folded_coherent_convergence_flag() {
        let f = coherent_qpb_folded(c(0.5), &p(30), 2).unwrap();
        assert!(f.converged);
    }

    #[test]
    fn squeezed_pb_examples() {
        let s = squeezed_pb(0.0, &p(4)).unwrap();
        assert_eq!(s.probabilities()[0], 1.0);
        assert!(s.probabilities()[1..].iter().all(|&x| x == 0.0));

        let s = squeezed_pb(1.0, &DeformationParams::unchecked(1)).unwrap();
        assert!((s.probabilities()[0] - 0.632901).abs() < 1e-6);
        assert!((s.probabilities()[1] - 0.367099).abs() < 1e-6);

        let s = squeezed_pb(20.0, &p(100)).unwrap();
        let dev = s
            .probabilities()
            .iter()
            .map(|x| (x - 1.0 / 101.0).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-6);
        assert!(squeezed_pb(-1.0, &p(4)).is_err());
    }

    #[test]
    fn squeezed_pb_matches_closed_normalization() {
        for (r, s) in [(0.3, 4), (1.0, 30), (2.0, 100)] {
            let params = p(s);
            let st = squeezed_pb(r, &params).unwrap();
            assert!((st.probabilities()[0] - pb_normalization_closed(r, &params)).abs() < 1e-12);
        }
    }

    #[test]
    fn squeeze_input_s4() {
        let input = SqueezeInput::new(1.0, &p(4)).unwrap();
        assert!((input.tanh_r - 0.761594).abs() < 1e-6);
        assert!((input.ln_root.exp() - 0.824907).abs() < 1e-6);
        assert!((input.b - 0.62824).abs() < 1e-5);
    }

    #[test]
    fn k_series_trivial_values() {
        let params = p(4);
        assert_eq!(k_series_closed(0, 0.0, &params).unwrap(), 1.0);
        assert_eq!(k_series_closed(3, 0.0, &params).unwrap(), 0.0);
        assert_eq!(k_series_direct(0, 0.0, &params).unwrap(), 1.0);
        assert!(k_series_closed(5, 1.0, &params).is_err());
        assert!(matches!(
            k_series_closed(0, 701.0, &params),
            Err(QpbError::Overflow(_))
        ));
    }

    #[test]
    fn k_series_small_values() {
        // sum_k 1/(3k)! and sum_k 2^{1+3k}/(1+3k)!
        let params = p(2);
        let k0: f64 = (0..10)
            .map(|k| 1.0 / (1..=3 * k).map(|j| j as f64).product::<f64>())
            .sum();
        assert!((k_series_closed(0, 1.0, &params).unwrap() - k0).abs() < 1e-14);
        assert!((k0 - 1.168058).abs() < 1e-6);
        let direct = k_series_direct(1, 2.0, &params).unwrap();
        assert!((direct - 2.692347).abs() < 1e-6);
    }

    #[test]
    fn alias_filter_is_real() {
        for s in [4, 10] {
            let params = p(s);
            for n in 0..=s {
                let f = k_alias_filter(n, 0.9, &params).unwrap();
                assert!(f.im.abs() < 1e-10 * f.norm(), "S={s} n={n} {f}");
            }
        }
    }

    #[test]
    fn squeezed_qpb_vacuum_at_zero() {
        let s = squeezed_qpb(0.0, &p(10)).unwrap();
        assert_eq!(s.probabilities()[0], 1.0);
        let t = squeezed_qpb_truncated(0.0, &p(10)).unwrap();
        assert_eq!(t.probabilities()[0], 1.0);
    }

    #[test]
    fn truncated_squeezed_s4_direct_evaluation() {
        let params = p(4);
        let t = 2f64.tanh();
        let table = QFactorialTable::new(&params);
        let raw: Vec<f64> = (0..5)
            .map(|n| {
                let v = table.get(n).to_real() * t.powi(n as i32)
                    / (1..=n).map(|j| j as f64).product::<f64>();
                v * v
            })
            .collect();
        let total: f64 = raw.iter().sum();
        let st = squeezed_qpb_truncated(2.0, &params).unwrap();
        for (a, b) in st.probabilities().iter().zip(&raw) {
            assert!((a - b / total).abs() < 1e-14);
        }
    }

    #[test]
    fn truncated_is_close_to_resummed() {
        let a = squeezed_qpb(1.0, &p(30)).unwrap();
        let b = squeezed_qpb_truncated(1.0, &p(30)).unwrap();
        assert!(a.fidelity(&b) >= 1.0 - 1e-6);
    }
}
