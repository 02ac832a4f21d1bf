//! Dense ladder, number and phase operators on the (S+1)-dimensional PB and
//! qPB spaces, and residual checks of the identities they satisfy.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::phase::phase_grid;
use crate::qcore::{q_number, unit_roots, DeformationParams, SqrtBranch};

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    AnnihilationPb,
    CreationPb,
    AnnihilationQ,
    CreationQ,
    Number,
    /// `exp(i φ̃)`.
    UnitaryPhase,
    /// `φ̃` itself.
    Phase,
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub params: DeformationParams,
    pub kind: OperatorKind,
    pub entries: CMatrix,
    /// Levels `n` whose bracket `[n]` is negative (q kinds only).
    pub negative_brackets: Vec<usize>,
}

/// Builds the operator in the number basis. `theta0` is used by the phase
/// kinds, `branch` by the q ladder kinds.
pub fn build_operator(
    kind: OperatorKind,
    params: &DeformationParams,
    theta0: f64,
    branch: SqrtBranch,
) -> OperatorMatrix {
    let dim = params.dim();
    let mut negative_brackets = Vec::new();
    let entries = match kind {
        OperatorKind::AnnihilationPb => lowering(dim, |n| Complex64::new((n as f64).sqrt(), 0.0)),
        OperatorKind::CreationPb => {
            lowering(dim, |n| Complex64::new((n as f64).sqrt(), 0.0)).adjoint()
        }
        OperatorKind::AnnihilationQ | OperatorKind::CreationQ => {
            negative_brackets = (1..dim).filter(|&n| q_number(n, params) < 0.0).collect();
            let a = lowering(dim, |n| branch.sqrt(q_number(n, params)));
            if kind == OperatorKind::CreationQ {
                a.adjoint()
            } else {
                a
            }
        }
        OperatorKind::Number => CMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |n, _| {
            Complex64::new(n as f64, 0.0)
        })),
        OperatorKind::UnitaryPhase => spectral(params, theta0, |t| Complex64::from_polar(1.0, t)),
        OperatorKind::Phase => spectral(params, theta0, |t| Complex64::new(t, 0.0)),
    };
    OperatorMatrix {
        params: *params,
        kind,
        entries,
        negative_brackets,
    }
}

/// `sum_{n=1}^{S} c(n) |n-1><n|`.
fn lowering<F: Fn(usize) -> Complex64>(dim: usize, coeff: F) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = coeff(n);
    }
    m
}

/// Columns are the phase states `|θ_m>`.
pub fn phase_basis_matrix(params: &DeformationParams, theta0: f64) -> CMatrix {
    let dim = params.dim();
    let roots = unit_roots(dim);
    let norm = 1.0 / (dim as f64).sqrt();
    CMatrix::from_fn(dim, dim, |n, m| {
        Complex64::from_polar(norm, n as f64 * theta0) * roots[(n * m) % dim]
    })
}

/// `sum_m f(θ_m) |θ_m><θ_m|`.
fn spectral<F: Fn(f64) -> Complex64>(params: &DeformationParams, theta0: f64, f: F) -> CMatrix {
    let v = phase_basis_matrix(params, theta0);
    let thetas = phase_grid(params, theta0);
    let mut scaled = v.clone();
    for (m, &t) in thetas.iter().enumerate() {
        let w = f(t);
        scaled.column_mut(m).iter_mut().for_each(|x| *x *= w);
    }
    scaled * v.adjoint()
}

/// `[ã, ã†]` for the PB ladder.
pub fn pb_commutator(params: &DeformationParams) -> CMatrix {
    let a = build_operator(
        OperatorKind::AnnihilationPb,
        params,
        0.0,
        SqrtBranch::Modulus,
    )
    .entries;
    let ad = a.adjoint();
    &a * &ad - &ad * &a
}

/// One residual entry; the q-relation has no meaning under the modulus branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Residual {
    Value(f64),
    NotApplicable,
}

impl Residual {
    pub fn value(self) -> Option<f64> {
        match self {
            Residual::Value(v) => Some(v),
            Residual::NotApplicable => None,
        }
    }
}

impl Serialize for Residual {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Residual::Value(v) => s.serialize_f64(*v),
            Residual::NotApplicable => s.serialize_str("not applicable"),
        }
    }
}

/// Sup-norm residuals keyed by identity name.
#[derive(Debug, Clone, Serialize)]
pub struct AlgebraReport {
    pub s: usize,
    pub theta0: f64,
    pub branch: SqrtBranch,
    pub residuals: BTreeMap<String, Residual>,
}

impl AlgebraReport {
    pub fn get(&self, name: &str) -> Option<Residual> {
        self.residuals.get(name).copied()
    }

    /// Largest applicable residual.
    pub fn max_residual(&self) -> f64 {
        self.residuals
            .values()
            .filter_map(|r| r.value())
            .fold(0.0, f64::max)
    }
}

pub const COMMUTATOR: &str = "commutator";
pub const POLAR_PB: &str = "polar_pb";
pub const Q_RELATION: &str = "q_relation";
pub const POLAR_Q: &str = "polar_q";
pub const PHASE_UNITARITY: &str = "phase_unitarity";

fn sup_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Residuals of:
/// - `commutator`: `[ã, ã†] - (I - (S+1)|S><S|)`
/// - `polar_pb`: `ã - exp(iφ̃) Ñ^{1/2}`
/// - `q_relation`: `ã_q ã_q^T - q ã_q^T ã_q - q^{-Ñ}` on `|0>..|S-1>`
///   (principal branch only; the partner carries the unconjugated `sqrt[n]`)
/// - `polar_q`: `ã_q - exp(iφ̃) sqrt([Ñ])` under `branch`
/// - `phase_unitarity`: `U U† - I` for `U = exp(iφ̃)`
pub fn verify_algebra(
    params: &DeformationParams,
    theta0: f64,
    branch: SqrtBranch,
) -> AlgebraReport {
    let dim = params.dim();
    let s = params.s();
    let mut residuals = BTreeMap::new();

    let u = build_operator(OperatorKind::UnitaryPhase, params, theta0, branch).entries;
    let ident = CMatrix::identity(dim, dim);
    residuals.insert(
        PHASE_UNITARITY.to_string(),
        Residual::Value(sup_norm(&(&u * u.adjoint() - &ident))),
    );

    let mut expected = ident.clone();
    expected[(s, s)] -= Complex64::new(dim as f64, 0.0);
    residuals.insert(
        COMMUTATOR.to_string(),
        Residual::Value(sup_norm(&(pb_commutator(params) - expected))),
    );

    let a = build_operator(OperatorKind::AnnihilationPb, params, theta0, branch).entries;
    let sqrt_n = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |n, _| {
        Complex64::new((n as f64).sqrt(), 0.0)
    }));
    residuals.insert(
        POLAR_PB.to_string(),
        Residual::Value(sup_norm(&(&a - &u * sqrt_n))),
    );

    let aq = build_operator(OperatorKind::AnnihilationQ, params, theta0, branch).entries;
    let sqrt_bracket = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |n, _| {
        branch.sqrt(q_number(n, params))
    }));
    residuals.insert(
        POLAR_Q.to_string(),
        Residual::Value(sup_norm(&(&aq - &u * sqrt_bracket))),
    );

    let q_rel = match branch {
        SqrtBranch::Modulus => Residual::NotApplicable,
        SqrtBranch::Principal => {
            let partner = aq.transpose();
            let q = params.q();
            let lhs = &aq * &partner - (&partner * &aq) * q;
            let roots = unit_roots(dim);
            let rhs = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |n, _| {
                roots[(dim - n) % dim]
            }));
            let diff = (lhs - rhs).view((0, 0), (s, s)).clone_owned();
            Residual::Value(sup_norm(&diff))
        }
    };
    residuals.insert(Q_RELATION.to_string(), q_rel);

    AlgebraReport {
        s,
        theta0,
        branch,
        residuals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(s: usize) -> DeformationParams {
        DeformationParams::new(s).unwrap()
    }

    #[test]
    fn number_operator_s2() {
        let n = build_operator(OperatorKind::Number, &p(2), 0.0, SqrtBranch::Modulus).entries;
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { i as f64 } else { 0.0 };
                assert_eq!(n[(i, j)], Complex64::new(e, 0.0));
            }
        }
    }

    #[test]
    fn annihilation_pb_s2() {
        let a = build_operator(
            OperatorKind::AnnihilationPb,
            &p(2),
            0.0,
            SqrtBranch::Modulus,
        )
        .entries;
        let nonzero: Vec<_> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .filter(|&(i, j)| a[(i, j)].norm() > 0.0)
            .collect();
        assert_eq!(nonzero, vec![(0, 1), (1, 2)]);
        assert_eq!(a[(0, 1)].re, 1.0);
        assert!((a[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn annihilation_q_s4_flags_negative_brackets() {
        let params = p(4);
        let op = build_operator(
            OperatorKind::AnnihilationQ,
            &params,
            0.0,
            SqrtBranch::Modulus,
        );
        assert_eq!(op.negative_brackets, vec![3, 4]);
        for n in 1..5 {
            let e = q_number(n, &params).abs().sqrt();
            assert!((op.entries[(n - 1, n)].re - e).abs() < 1e-15);
        }
    }

    #[test]
    fn creation_is_adjoint() {
        for branch in [SqrtBranch::Modulus, SqrtBranch::Principal] {
            let params = p(6);
            let a = build_operator(OperatorKind::AnnihilationQ, &params, 0.0, branch).entries;
            let ad = build_operator(OperatorKind::CreationQ, &params, 0.0, branch).entries;
            assert!(sup_norm(&(a.adjoint() - ad)) < 1e-14);
        }
    }

    #[test]
    fn commutator_top_eigenvalue() {
        let c = pb_commutator(&p(4));
        assert!((c[(4, 4)].re + 4.0).abs() < 1e-14);
        assert!((c[(0, 0)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn small_space_identities() {
        let r = verify_algebra(&p(2), -PI, SqrtBranch::Principal);
        for (name, v) in &r.residuals {
            assert!(v.value().unwrap() < 1e-12, "{name}: {v:?}");
        }
        let m = verify_algebra(&p(2), -PI, SqrtBranch::Modulus);
        assert_eq!(m.get(Q_RELATION), Some(Residual::NotApplicable));
    }

    #[test]
    fn unitary_phase_spectrum() {
        let params = p(10);
        let theta0 = 0.4;
        let u = build_operator(
            OperatorKind::UnitaryPhase,
            &params,
            theta0,
            SqrtBranch::Modulus,
        )
        .entries;
        let v = phase_basis_matrix(&params, theta0);
        for (m, t) in phase_grid(&params, theta0).into_iter().enumerate() {
            let col = v.column(m);
            let r = &u * col - col * Complex64::from_polar(1.0, t);
            assert!(r.iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn phase_operator_is_hermitian() {
        let ph = build_operator(OperatorKind::Phase, &p(8), -PI, SqrtBranch::Modulus).entries;
        assert!(sup_norm(&(&ph - ph.adjoint())) < 1e-13);
    }

    #[test]
    fn residual_serializes_label() {
        assert_eq!(
            serde_json::to_string(&Residual::NotApplicable).unwrap(),
            "\"not applicable\""
        );
        assert_eq!(serde_json::to_string(&Residual::Value(0.5)).unwrap(), "0.5");
    }
}
