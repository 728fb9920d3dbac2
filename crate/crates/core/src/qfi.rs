//! Symmetric logarithmic derivative and quantum Fisher information.

use crate::error::{Error, Result};
use crate::generators::GeneratorSpec;
use crate::probes::ProbeState;
use crate::qmat::{c, herm_eig, herm_exp, partial_trace, ComplexMatrix, EigenDecomposition, Subsystem, C64};

/// Relative support threshold: eigenvalue pairs with λ_j + λ_k ≤ tol·Tr ρ are dropped.
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-12;

/// Threshold used to count the numerical rank of a density matrix.
pub const RANK_TOL: f64 = 1e-10;

const TRACE_TOL: f64 = 1e-12;
const PSD_FLOOR: f64 = -1e-12;

/// Which output factor is discarded before estimation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Traced {
    /// Full output BF.
    None,
    First,
    Second,
}

impl Traced {
    /// The bottleneck reading: F is the second output factor.
    pub const F: Traced = Traced::Second;
}

/// ρ(α) together with ∂_αρ(α).
#[derive(Clone, Debug)]
pub struct StateFamilyPoint {
    pub rho: ComplexMatrix,
    pub drho: ComplexMatrix,
}

impl StateFamilyPoint {
    pub fn new(rho: ComplexMatrix, drho: ComplexMatrix) -> Result<Self> {
        if !rho.is_square() || rho.rows() != drho.rows() || !drho.is_square() {
            return Err(Error::DimensionMismatch {
                expected: rho.rows(),
                found: drho.rows(),
            });
        }
        if !rho.is_hermitian() {
            return Err(Error::NotDensityMatrix("rho is not Hermitian".into()));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::NotDensityMatrix(format!("trace {tr}")));
        }
        if !drho.is_hermitian() {
            return Err(Error::NotDensityMatrix("drho is not Hermitian".into()));
        }
        if drho.trace().norm() > TRACE_TOL * (1.0 + drho.frobenius_norm()) {
            return Err(Error::NotDensityMatrix(format!("drho trace {}", drho.trace())));
        }
        Ok(Self { rho, drho })
    }

    pub fn dim(&self) -> usize {
        self.rho.rows()
    }

    fn eig_checked(&self) -> Result<EigenDecomposition> {
        let eig = herm_eig(&self.rho)?;
        if let Some(&lo) = eig.values.first() {
            if lo < PSD_FLOOR {
                return Err(Error::NotDensityMatrix(format!("negative eigenvalue {lo:.3e}")));
            }
        }
        Ok(eig)
    }

    /// Number of eigenvalues above [`RANK_TOL`].
    pub fn rank(&self) -> Result<usize> {
        Ok(herm_eig(&self.rho)?.values.iter().filter(|&&l| l > RANK_TOL).count())
    }
}

/// drho expressed in the eigenbasis of rho, plus the eigenvalues.
fn eigenbasis_derivative(point: &StateFamilyPoint) -> Result<(EigenDecomposition, ComplexMatrix)> {
    let eig = point.eig_checked()?;
    let v = &eig.vectors;
    let d = v.adjoint().matmul(&point.drho).matmul(v);
    Ok((eig, d))
}

fn support_cut(point: &StateFamilyPoint, support_tol: f64) -> f64 {
    support_tol * point.rho.trace().re
}

/// SLD with L[j,k] = 2⟨j|∂ρ|k⟩/(λ_j+λ_k) on pairs above the support threshold.
///
/// `support_tol` is relative to Tr ρ.
pub fn sld(point: &StateFamilyPoint, support_tol: f64) -> Result<ComplexMatrix> {
    let (eig, d) = eigenbasis_derivative(point)?;
    let cut = support_cut(point, support_tol);
    let n = eig.values.len();
    let lt = ComplexMatrix::from_fn(n, n, |j, k| {
        let s = eig.values[j] + eig.values[k];
        if s > cut {
            d[(j, k)] * (2.0 / s)
        } else {
            c(0.0, 0.0)
        }
    });
    let v = &eig.vectors;
    Ok(v.matmul(&lt).matmul(&v.adjoint()).hermitian_part())
}

/// J = Tr[∂ρ L].
pub fn qfi(point: &StateFamilyPoint, support_tol: f64) -> Result<f64> {
    let (eig, d) = eigenbasis_derivative(point)?;
    let cut = support_cut(point, support_tol);
    let n = eig.values.len();
    let mut j = 0.0;
    for a in 0..n {
        for b in 0..n {
            let s = eig.values[a] + eig.values[b];
            if s > cut {
                j += 2.0 * d[(a, b)].norm_sqr() / s;
            }
        }
    }
    Ok(j)
}

pub fn qfi_default(point: &StateFamilyPoint) -> Result<f64> {
    qfi(point, DEFAULT_SUPPORT_TOL)
}

fn output_dims(dim: usize) -> (usize, usize) {
    match dim {
        4 => (2, 2),
        16 => (4, 4),
        d => (d, 1),
    }
}

/// Reduces a full-output pure point |ψ⟩, G|ψ⟩ to the requested factor.
pub(crate) fn reduce_pure(
    psi: &[C64],
    g_psi: &[C64],
    dims: (usize, usize),
    traced: Traced,
) -> Result<StateFamilyPoint> {
    // ρ = |ψ⟩⟨ψ|, ∂ρ = −i(G|ψ⟩⟨ψ| − |ψ⟩⟨ψ|G)
    let rho = ComplexMatrix::projector(psi);
    let gp = ComplexMatrix::outer(g_psi, psi);
    let drho = (&gp - &gp.adjoint()).scale(c(0.0, -1.0));
    let (rho, drho) = match traced {
        Traced::None => (rho, drho),
        Traced::Second => (
            partial_trace(&rho, dims, Subsystem::First)?,
            partial_trace(&drho, dims, Subsystem::First)?,
        ),
        Traced::First => (
            partial_trace(&rho, dims, Subsystem::Second)?,
            partial_trace(&drho, dims, Subsystem::Second)?,
        ),
    };
    StateFamilyPoint::new(rho.hermitian_part(), drho.hermitian_part())
}

/// ρ(α) = U_α|Ψ⟩⟨Ψ|U_α†, optionally reduced, with the analytic derivative −i[G, ρ_BF].
pub fn unitary_family_point(
    g: &GeneratorSpec,
    probe: &ProbeState,
    alpha: f64,
    traced: Traced,
) -> Result<StateFamilyPoint> {
    let gm = g.matrix();
    if probe.dim() != gm.rows() {
        return Err(Error::DimensionMismatch {
            expected: gm.rows(),
            found: probe.dim(),
        });
    }
    let u = herm_exp(gm, alpha)?;
    let psi = u.mul_vec(probe.amplitudes());
    let g_psi = gm.mul_vec(&psi);
    reduce_pure(&psi, &g_psi, output_dims(gm.rows()), traced)
}

/// Central finite difference (ρ(α+h) − ρ(α−h))/(2h), for validating the analytic derivative.
pub fn finite_difference_drho(
    g: &GeneratorSpec,
    probe: &ProbeState,
    alpha: f64,
    traced: Traced,
    h: f64,
) -> Result<ComplexMatrix> {
    let plus = unitary_family_point(g, probe, alpha + h, traced)?;
    let minus = unitary_family_point(g, probe, alpha - h, traced)?;
    Ok((&plus.rho - &minus.rho).scale_real(0.5 / h))
}

/// (λ_max − λ_min)² of the generator.
pub fn max_qfi_full(g: &GeneratorSpec) -> f64 {
    g.spread().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{case_study, make_tensor, GeneratorSpec, X_HAT, Z_HAT};
    use crate::probes::{haar_probe, named_probe, NamedProbe, ProbeState};
    use crate::qmat::{inner, kron, pauli};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn point(rho: ComplexMatrix, drho: ComplexMatrix) -> StateFamilyPoint {
        StateFamilyPoint::new(rho, drho).unwrap()
    }

    fn random_generator(rng: &mut ChaCha8Rng) -> GeneratorSpec {
        let mut cf = [[0.0; 4]; 4];
        for row in cf.iter_mut() {
            for x in row.iter_mut() {
                *x = StandardNormal.sample(rng);
            }
        }
        GeneratorSpec::pauli(cf)
    }

    /// Two-sided Lyapunov oracle for a 2×2 diagonal ρ: solves (Lρ + ρL)/2 = ∂ρ entrywise.
    fn lyapunov_diag(lams: &[f64], drho: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::from_fn(lams.len(), lams.len(), |j, k| drho[(j, k)] * (2.0 / (lams[j] + lams[k])))
    }

    #[test]
    fn sld_examples() {
        let l = sld(&point(ComplexMatrix::identity(2).scale_real(0.5), pauli(1).scale_real(0.25)), DEFAULT_SUPPORT_TOL).unwrap();
        assert!(l.max_abs_diff(&pauli(1).scale_real(0.5)) < 1e-14);

        let l = sld(&point(ComplexMatrix::diag_real(&[1.0, 0.0]), pauli(1)), DEFAULT_SUPPORT_TOL).unwrap();
        assert!(l.max_abs_diff(&pauli(1).scale_real(2.0)) < 1e-14);

        let rho = ComplexMatrix::diag_real(&[0.6, 0.4]);
        let drho = pauli(1).scale_real(0.25);
        let l = sld(&point(rho.clone(), drho.clone()), DEFAULT_SUPPORT_TOL).unwrap();
        assert!((l[(0, 1)] - c(0.5, 0.0)).norm() < 1e-14);
        assert!(l[(0, 0)].norm() < 1e-14 && l[(1, 1)].norm() < 1e-14);
        assert!(l.max_abs_diff(&lyapunov_diag(&[0.6, 0.4], &drho)) < 1e-14);
    }

    #[test]
    fn qfi_examples() {
        let p = point(ComplexMatrix::identity(2).scale_real(0.5), pauli(1).scale_real(0.25));
        assert!((qfi_default(&p).unwrap() - 0.25).abs() < 1e-14);

        let g = GeneratorSpec::from_matrix(pauli(3)).unwrap();
        let plus = ProbeState::from_amplitudes(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        for &a in &[0.0, 0.3, 2.0] {
            let pt = unitary_family_point(&g, &plus, a, Traced::None).unwrap();
            assert!((qfi_default(&pt).unwrap() - 4.0).abs() < 1e-12);
        }

        let z = ComplexMatrix::zeros(2, 2);
        assert_eq!(qfi_default(&point(ComplexMatrix::diag_real(&[0.3, 0.7]), z)).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_states() {
        assert!(StateFamilyPoint::new(ComplexMatrix::identity(2), ComplexMatrix::zeros(2, 2)).is_err());
        let neg = point(ComplexMatrix::diag_real(&[1.5, -0.5]), ComplexMatrix::zeros(2, 2));
        assert!(qfi_default(&neg).is_err());
        assert!(StateFamilyPoint::new(ComplexMatrix::diag_real(&[0.5, 0.5]), pauli(2).scale(c(0.0, 1.0))).is_err());
        assert!(StateFamilyPoint::new(ComplexMatrix::diag_real(&[0.5, 0.5]), ComplexMatrix::identity(2)).is_err());
    }

    #[test]
    fn sld_residual_on_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let g = random_generator(&mut rng);
            let probe = haar_probe(2, rng.random());
            let pt = unitary_family_point(&g, &probe, 0.9, Traced::F).unwrap();
            let l = sld(&pt, DEFAULT_SUPPORT_TOL).unwrap();
            let eig = herm_eig(&pt.rho).unwrap();
            let cols: Vec<Vec<C64>> = (0..2).filter(|&k| eig.values[k] > 1e-12).map(|k| eig.vector(k)).collect();
            let mut proj = ComplexMatrix::zeros(2, 2);
            for v in &cols {
                proj = &proj + &ComplexMatrix::projector(v);
            }
            let lhs = (&l.matmul(&pt.rho) + &pt.rho.matmul(&l)).scale_real(0.5);
            let res = &proj.matmul(&lhs).matmul(&proj) - &proj.matmul(&pt.drho).matmul(&proj);
            assert!(res.frobenius_norm() <= 1e-10);
            // both trace forms agree
            let j1 = (pt.rho.matmul(&l).matmul(&l)).trace().re;
            let j2 = qfi_default(&pt).unwrap();
            assert!((j1 - j2).abs() <= 1e-10 * (1.0 + j2));
        }
    }

    #[test]
    fn eigenstate_probe_has_zero_derivative() {
        let g = GeneratorSpec::from_matrix(kron(&pauli(3), &pauli(0))).unwrap();
        let probe = ProbeState::basis(2, 0);
        let pt = unitary_family_point(&g, &probe, 1.3, Traced::F).unwrap();
        assert!(pt.drho.frobenius_norm() < 1e-15);
    }

    #[test]
    fn tensor_eq29_gives_nine() {
        let g = make_tensor(X_HAT, 0.0, Z_HAT, 0.5).unwrap();
        let probe = named_probe(&NamedProbe::Eq29 { phi: 0.0, t2_nonnegative: true, m_hat: X_HAT, n_hat: Z_HAT }).unwrap();
        let pt = unitary_family_point(&g, &probe, 0.3, Traced::F).unwrap();
        assert!((qfi_default(&pt).unwrap() - 9.0).abs() < 1e-10);
    }

    #[test]
    fn extreme_superposition_reaches_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let g = random_generator(&mut rng);
            let e = g.eig();
            let (lo, hi) = (e.vector(0), e.vector(3));
            let amps: Vec<C64> = lo.iter().zip(&hi).map(|(a, b)| a + b).collect();
            let probe = ProbeState::from_amplitudes(amps).unwrap();
            let pt = unitary_family_point(&g, &probe, rng.random::<f64>() * 6.0, Traced::None).unwrap();
            let j = qfi_default(&pt).unwrap();
            assert!((j - max_qfi_full(&g)).abs() < 1e-9 * (1.0 + j));
        }
    }

    #[test]
    fn max_qfi_full_examples() {
        assert!((max_qfi_full(&GeneratorSpec::from_matrix(pauli(3)).unwrap()) - 4.0).abs() < 1e-12);
        assert!((max_qfi_full(&make_tensor(X_HAT, 0.5, X_HAT, 0.2).unwrap()) - 9.0).abs() < 1e-12);
        assert!((max_qfi_full(&case_study(1.0, 1.0)) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn bottleneck_invariants_over_random_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let g = random_generator(&mut rng);
            let probe = haar_probe(2, rng.random());
            let a = rng.random::<f64>() * std::f64::consts::TAU;
            let full = unitary_family_point(&g, &probe, a, Traced::None).unwrap();
            let part = unitary_family_point(&g, &probe, a, Traced::F).unwrap();
            let jf = qfi_default(&full).unwrap();
            let jb = qfi_default(&part).unwrap();
            assert!(jb >= 0.0 && jb <= jf + 1e-9);
            assert!(jf <= max_qfi_full(&g) + 1e-9);

            // pure-state oracle 4(⟨∂ψ|∂ψ⟩ − |⟨ψ|∂ψ⟩|²) with ∂ψ = −iGψ
            let u = herm_exp(g.matrix(), a).unwrap();
            let psi = u.mul_vec(probe.amplitudes());
            let dpsi: Vec<C64> = g.matrix().mul_vec(&psi).iter().map(|x| x * c(0.0, -1.0)).collect();
            let oracle = 4.0 * (inner(&dpsi, &dpsi).re - inner(&psi, &dpsi).norm_sqr());
            assert!((oracle - jf).abs() <= 1e-9 * (1.0 + jf));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn analytic_derivative_matches_finite_difference(seed in any::<u64>(), a in 0.0f64..6.3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw = random_generator(&mut rng);
            // unit-scale generators, matching the Pauli-coefficient case studies
            let g = GeneratorSpec::from_matrix(raw.matrix().scale_real(2.0 / raw.matrix().frobenius_norm())).unwrap();
            let probe = haar_probe(2, seed ^ 0x5bd1);
            for traced in [Traced::None, Traced::F, Traced::First] {
                let pt = unitary_family_point(&g, &probe, a, traced).unwrap();
                let fd = finite_difference_drho(&g, &probe, a, traced, 1e-5).unwrap();
                prop_assert!(pt.drho.max_abs_diff(&fd) <= 1e-8);
            }
        }

        #[test]
        fn local_unitary_on_f_leaves_qfi_unchanged(seed in any::<u64>(), a in 0.0f64..6.3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_generator(&mut rng);
            let probe = haar_probe(2, seed.wrapping_add(1));
            let h = ComplexMatrix::from_fn(2, 2, |_, _| c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))).hermitian_part();
            let v = kron(&ComplexMatrix::identity(2), &herm_exp(&h, 1.0).unwrap());
            let u = herm_exp(g.matrix(), a).unwrap();
            let psi = u.mul_vec(probe.amplitudes());
            let gpsi = g.matrix().mul_vec(&psi);
            let base = qfi_default(&reduce_pure(&psi, &gpsi, (2, 2), Traced::F).unwrap()).unwrap();
            let rotated = qfi_default(&reduce_pure(&v.mul_vec(&psi), &v.mul_vec(&gpsi), (2, 2), Traced::F).unwrap()).unwrap();
            prop_assert!((base - rotated).abs() <= 1e-10 * (1.0 + base));
        }

        #[test]
        fn qfi_nonnegative(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_generator(&mut rng);
            let pt = unitary_family_point(&g, &haar_probe(2, seed), 0.4, Traced::F).unwrap();
            prop_assert!(qfi_default(&pt).unwrap() >= 0.0);
        }
    }
}
