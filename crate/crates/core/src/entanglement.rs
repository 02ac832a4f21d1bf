//! Entanglement entropy of two-mode diagonal states and the sweeps built on it.
//!
//! Entropies are in bits throughout.

use serde::Serialize;

use crate::error::{QpbError, Result};
use crate::qcore::{neumaier_sum, DeformationParams};
use crate::states::{squeezed_pb, squeezed_qpb, TwoModeDiagonalState};

/// Default upper bound on the S search in [`s_required`].
pub const DEFAULT_S_CAP: usize = 100_000;

/// Probabilities below this contribute nothing to the entropy.
const PROBABILITY_FLOOR: f64 = 1e-300;

/// Normalized Schmidt weights `p_n` of `sum_n c_n |n,n>`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum(Vec<f64>);

impl SchmidtSpectrum {
    /// Checks non-negativity and unit sum (to 1e-12).
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.iter().any(|p| !(*p >= 0.0)) {
            return Err(QpbError::Domain(
                "Schmidt weights must be non-negative".into(),
            ));
        }
        let total = neumaier_sum(probabilities.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(QpbError::Domain(format!(
                "Schmidt weights sum to {total}, not 1"
            )));
        }
        Ok(SchmidtSpectrum(probabilities))
    }

    pub(crate) fn from_normalized(probabilities: Vec<f64>) -> Self {
        SchmidtSpectrum(probabilities)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }
}

/// `-sum p log2 p`, with `0 log 0 = 0`.
pub fn von_neumann_entropy(spectrum: &SchmidtSpectrum) -> f64 {
    let nats = neumaier_sum(
        spectrum
            .0
            .iter()
            .filter(|&&p| p >= PROBABILITY_FLOOR)
            .map(|&p| -p * p.ln()),
    );
    nats / std::f64::consts::LN_2
}

/// `cosh^2 r log2 cosh^2 r - sinh^2 r log2 sinh^2 r`, the entanglement of the
/// untruncated two-mode squeezed vacuum.
pub fn entropy_sg_analytic(r: f64) -> f64 {
    let s = r.sinh().powi(2);
    if s == 0.0 {
        return 0.0;
    }
    if !s.is_finite() {
        // ln sinh^2 r = 2(r - ln 2) once e^{-2r} is negligible; s log(1 + 1/s) -> 1
        return (2.0 * (r - std::f64::consts::LN_2) + 1.0) / std::f64::consts::LN_2;
    }
    // (s+1) log(s+1) - s log s = log(1+s) + s log(1 + 1/s)
    (s.ln_1p() + s * s.recip().ln_1p()) / std::f64::consts::LN_2
}

/// `log2(S+1)`.
pub fn e_max(params: &DeformationParams) -> f64 {
    e_max_for_dim(params.s())
}

/// `log2(S+1)` without parity validation.
pub fn e_max_for_dim(s: usize) -> f64 {
    (s as f64 + 1.0).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Pb,
    Qpb,
}

impl Family {
    pub fn state(self, r: f64, params: &DeformationParams) -> Result<TwoModeDiagonalState> {
        match self {
            Family::Pb => squeezed_pb(r, params),
            Family::Qpb => squeezed_qpb(r, params),
        }
    }
}

/// Entanglement of the family's squeezed state at `(r, S)`.
pub fn entropy(family: Family, r: f64, params: &DeformationParams) -> Result<f64> {
    Ok(von_neumann_entropy(&family.state(r, params)?.spectrum()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveLabel {
    SgAnalytic,
    Pb,
    Qpb,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyCurve {
    pub label: CurveLabel,
    /// `None` for the untruncated reference.
    pub s: Option<usize>,
    pub r: Vec<f64>,
    pub values: Vec<f64>,
}

/// Entropy versus `r`. `params` is ignored for [`CurveLabel::SgAnalytic`].
pub fn entropy_curve(
    label: CurveLabel,
    r_grid: &[f64],
    params: &DeformationParams,
) -> Result<EntropyCurve> {
    let values = r_grid
        .iter()
        .map(|&r| match label {
            CurveLabel::SgAnalytic => Ok(entropy_sg_analytic(r)),
            CurveLabel::Pb => entropy(Family::Pb, r, params),
            CurveLabel::Qpb => entropy(Family::Qpb, r, params),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EntropyCurve {
        label,
        s: (label != CurveLabel::SgAnalytic).then(|| params.s()),
        r: r_grid.to_vec(),
        values,
    })
}

/// `|E_family(r, S) - E_sg(r)| / E_sg(r)`.
pub fn relative_error(family: Family, r: f64, s: usize) -> Result<f64> {
    let reference = entropy_sg_analytic(r);
    let e = entropy(family, r, &DeformationParams::new(s)?)?;
    Ok((e - reference).abs() / reference)
}

/// Minimal even `S` with relative entropy error at most `tolerance`,
/// by doubling from `S = 2` and then bisecting over even values.
pub fn s_required(r: f64, tolerance: f64, family: Family, cap: usize) -> Result<usize> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(QpbError::Domain(format!("s_required needs r > 0, got {r}")));
    }
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(QpbError::Domain(format!(
            "tolerance must lie in (0, 1), got {tolerance}"
        )));
    }
    let cap = cap - cap % 2;
    let no_solution = QpbError::NoSolution { r, tolerance, cap };
    if cap < 2 {
        return Err(no_solution);
    }
    let passes = |s: usize| relative_error(family, r, s).map(|e| e <= tolerance);

    if passes(2)? {
        return Ok(2);
    }
    // invariant: lo fails, hi passes
    let (mut lo, mut hi) = (2, 4.min(cap));
    loop {
        if passes(hi)? {
            break;
        }
        if hi == cap {
            return Err(no_solution);
        }
        lo = hi;
        hi = (hi * 2).min(cap);
    }
    while hi - lo > 2 {
        let mid = lo + (hi - lo) / 4 * 2;
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SRequiredResult {
    pub r: f64,
    pub s_pb: usize,
    pub s_qpb: usize,
    pub tolerance: f64,
}

/// [`s_required`] for both families.
pub fn s_required_both(r: f64, tolerance: f64, cap: usize) -> Result<SRequiredResult> {
    Ok(SRequiredResult {
        r,
        s_pb: s_required(r, tolerance, Family::Pb, cap)?,
        s_qpb: s_required(r, tolerance, Family::Qpb, cap)?,
        tolerance,
    })
}

/// `E_family(r, S) / log2(S+1)`.
pub fn saturation_ratio(r: f64, params: &DeformationParams, family: Family) -> Result<f64> {
    Ok(entropy(family, r, params)? / e_max(params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: usize) -> DeformationParams {
        DeformationParams::new(s).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let pure = SchmidtSpectrum::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(von_neumann_entropy(&pure), 0.0);
        let uniform = SchmidtSpectrum::new(vec![0.125; 8]).unwrap();
        assert!((von_neumann_entropy(&uniform) - 3.0).abs() < 1e-15);
        let t2 = 1f64.tanh().powi(2);
        let two = SchmidtSpectrum::new(vec![1.0 / (1.0 + t2), t2 / (1.0 + t2)]).unwrap();
        assert!((von_neumann_entropy(&two) - 0.948418).abs() < 1e-6);
        assert!(SchmidtSpectrum::new(vec![0.5, 0.4]).is_err());
        assert!(SchmidtSpectrum::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn analytic_reference() {
        assert_eq!(entropy_sg_analytic(0.0), 0.0);
        assert!((entropy_sg_analytic(1.0) - 2.33690).abs() < 1e-5);
        let c2 = 1f64.cosh().powi(2);
        let s2 = 1f64.sinh().powi(2);
        let naive = c2 * c2.log2() - s2 * s2.log2();
        assert!((entropy_sg_analytic(1.0) - naive).abs() < 1e-13);
        // stays finite where cosh^2 overflows
        assert!(entropy_sg_analytic(400.0).is_finite());
    }

    #[test]
    fn truncated_pb_converges_to_reference() {
        let e = entropy(Family::Pb, 0.5, &p(200)).unwrap();
        assert!((e - entropy_sg_analytic(0.5)).abs() < 1e-9);
    }

    #[test]
    fn e_max_values() {
        assert_eq!(e_max_for_dim(3), 2.0);
        assert_eq!(e_max_for_dim(7), 3.0);
        assert!((e_max(&p(100)) - 6.65821).abs() < 1e-5);
    }

    #[test]
    fn saturation_examples() {
        assert_eq!(saturation_ratio(0.0, &p(30), Family::Qpb).unwrap(), 0.0);
        assert!(saturation_ratio(20.0, &p(100), Family::Pb).unwrap() >= 0.999);
        for s in [60, 100, 200] {
            let v = saturation_ratio(20.0, &p(s), Family::Qpb).unwrap();
            assert!((0.55..=0.70).contains(&v), "S={s}: {v}");
        }
    }

    #[test]
    fn s_required_rejects_bad_input() {
        assert!(s_required(0.0, 0.005, Family::Pb, 100).is_err());
        assert!(s_required(1.0, 1.5, Family::Pb, 100).is_err());
        assert!(matches!(
            s_required(3.0, 0.005, Family::Qpb, 1000),
            Err(QpbError::NoSolution { .. })
        ));
    }

    #[test]
    fn s_required_small_r() {
        let s = s_required(0.5, 0.005, Family::Pb, DEFAULT_S_CAP).unwrap();
        assert!(s < 10, "{s}");
        assert!(relative_error(Family::Pb, 0.5, s).unwrap() <= 0.005);
        assert!(relative_error(Family::Pb, 0.5, s - 2).unwrap() > 0.005);
    }
}
