//! Continuity bounds for J under perturbations of the state, the generator and the
//! Liouvillian, plus the superoperator machinery they need.

use std::f64::consts::TAU;
use std::ops::{Add, Sub};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::generators::GeneratorSpec;
use crate::probes::ProbeState;
use crate::qfi::{qfi_default, unitary_family_point, StateFamilyPoint, Traced};
use crate::qmat::{c, herm_eig, schatten_norm, svd, vec_norm, ComplexMatrix, SchattenP, C64};

pub const DEFAULT_EPS: f64 = 1e-3;
pub const DEFAULT_NORM_SAMPLES: usize = 16;

const FULL_RANK_TOL: f64 = 1e-10;
const NORM_ITERATIONS: usize = 200;
const NORM_CONVERGENCE: f64 = 1e-10;
const TRACE_PRESERVING_TOL: f64 = 1e-10;

/// Intermediate norms entering a bound.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundNorms {
    pub drho1: f64,
    pub drho2: f64,
    pub rho_diff: f64,
    pub drho_diff: f64,
    /// ‖G₁‖₂, ‖G₂‖₂, ‖G₁−G₂‖₂ or the 1→1 norms of L₁, L₂, L₁−L₂.
    pub op1: f64,
    pub op2: f64,
    pub op_diff: f64,
}

/// Outcome of one continuity check.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub regularization_eps: f64,
    pub c1: f64,
    pub c2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub j1: f64,
    pub j2: f64,
    pub norms: BoundNorms,
    /// The right-hand side uses sampled lower bounds on norms.
    pub indicative: bool,
    /// State-level bound exactly as printed; `rhs` is twice this value.
    pub rhs_as_stated: Option<f64>,
}

fn lambda_min(rho: &ComplexMatrix) -> Result<f64> {
    Ok(herm_eig(rho)?.values[0])
}

/// C₁ and C₂ from ‖∂ρ₁‖₂, ‖∂ρ₂‖₂, λ₁, λ₂.
pub fn constants(d1: f64, d2: f64, l1: f64, l2: f64) -> (f64, f64) {
    let s = l1 + l2;
    let c1 = d1 * d2 / (2.0 * l1 * s) + d2 * d2 / (2.0 * l2 * s);
    let c2 = d1 / (2.0 * l1) + d2 / s;
    (c1, c2)
}

struct PairData {
    j1: f64,
    j2: f64,
    l1: f64,
    l2: f64,
    d1: f64,
    d2: f64,
    c1: f64,
    c2: f64,
}

fn pair_data(p1: &StateFamilyPoint, p2: &StateFamilyPoint) -> Result<PairData> {
    if p1.rho.rows() != p2.rho.rows() {
        return Err(Error::DimensionMismatch {
            expected: p1.rho.rows(),
            found: p2.rho.rows(),
        });
    }
    let l1 = lambda_min(&p1.rho)?;
    let l2 = lambda_min(&p2.rho)?;
    for l in [l1, l2] {
        if l <= FULL_RANK_TOL {
            return Err(Error::RankDeficient { min_eigenvalue: l });
        }
    }
    let d1 = schatten_norm(&p1.drho, SchattenP::Two);
    let d2 = schatten_norm(&p2.drho, SchattenP::Two);
    let (c1, c2) = constants(d1, d2, l1, l2);
    Ok(PairData {
        j1: qfi_default(p1)?,
        j2: qfi_default(p2)?,
        l1,
        l2,
        d1,
        d2,
        c1,
        c2,
    })
}

/// State-level bound on |J(ρ₁) − J(ρ₂)| for full-rank states.
///
/// `rhs` is C₁‖ρ₁−ρ₂‖₂ + C₂‖∂ρ₁−∂ρ₂‖₂ doubled: integrating the derivative of the
/// Lyapunov solution yields the factor 2, and the undoubled form is violated by
/// some qubit pairs. The undoubled value is kept in `rhs_as_stated`.
pub fn theorem1_bound(p1: &StateFamilyPoint, p2: &StateFamilyPoint) -> Result<BoundReport> {
    let pd = pair_data(p1, p2)?;
    let rho_diff = schatten_norm(&(&p1.rho - &p2.rho), SchattenP::Two);
    let drho_diff = schatten_norm(&(&p1.drho - &p2.drho), SchattenP::Two);
    let stated = pd.c1 * rho_diff + pd.c2 * drho_diff;
    let lhs = (pd.j1 - pd.j2).abs();
    let rhs = 2.0 * stated;
    Ok(BoundReport {
        lhs,
        rhs,
        margin: rhs - lhs,
        regularization_eps: 0.0,
        c1: pd.c1,
        c2: pd.c2,
        lambda1: pd.l1,
        lambda2: pd.l2,
        j1: pd.j1,
        j2: pd.j2,
        norms: BoundNorms {
            drho1: pd.d1,
            drho2: pd.d2,
            rho_diff,
            drho_diff,
            ..Default::default()
        },
        indicative: false,
        rhs_as_stated: Some(stated),
    })
}

/// Evaluates both orderings and keeps the one with the smaller `rhs`.
pub fn theorem1_best(p1: &StateFamilyPoint, p2: &StateFamilyPoint) -> Result<BoundReport> {
    let a = theorem1_bound(p1, p2)?;
    let b = theorem1_bound(p2, p1)?;
    Ok(if b.rhs < a.rhs { b } else { a })
}

/// (1−ε)ρ + εI/d with ∂ρ scaled by (1−ε).
pub fn regularize(p: &StateFamilyPoint, eps: f64) -> Result<StateFamilyPoint> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", format!("must lie in (0, 1), got {eps}")));
    }
    let d = p.rho.rows();
    let rho = &p.rho.scale_real(1.0 - eps) + &ComplexMatrix::identity(d).scale_real(eps / d as f64);
    StateFamilyPoint::new(rho, p.drho.scale_real(1.0 - eps))
}

/// Generator-level bound for ρᵢ(α) = Tr[U_i(α)|Ψ⟩⟨Ψ|U_i(α)†] over the `traced` factor.
pub fn corollary1_bound(
    g1: &GeneratorSpec,
    g2: &GeneratorSpec,
    probe: &ProbeState,
    alpha: f64,
    eps: f64,
    traced: Traced,
) -> Result<BoundReport> {
    if g1.dim() != g2.dim() {
        return Err(Error::DimensionMismatch {
            expected: g1.dim(),
            found: g2.dim(),
        });
    }
    let p1 = regularize(&unitary_family_point(g1, probe, alpha, traced)?, eps)?;
    let p2 = regularize(&unitary_family_point(g2, probe, alpha, traced)?, eps)?;
    let pd = pair_data(&p1, &p2)?;
    let dim_e = match traced {
        Traced::None => 1.0,
        _ => (g1.dim() as f64).sqrt().round(),
    };
    let n1 = schatten_norm(g1.matrix(), SchattenP::Two);
    let n2 = schatten_norm(g2.matrix(), SchattenP::Two);
    let nd = schatten_norm(&(g1.matrix() - g2.matrix()), SchattenP::Two);
    let rhs = TAU * (pd.c1 + pd.c2 * dim_e * (1.0 + TAU * (n1 + n2))) * nd;
    let lhs = (pd.j1 - pd.j2).abs();
    Ok(BoundReport {
        lhs,
        rhs,
        margin: rhs - lhs,
        regularization_eps: eps,
        c1: pd.c1,
        c2: pd.c2,
        lambda1: pd.l1,
        lambda2: pd.l2,
        j1: pd.j1,
        j2: pd.j2,
        norms: BoundNorms {
            drho1: pd.d1,
            drho2: pd.d2,
            rho_diff: schatten_norm(&(&p1.rho - &p2.rho), SchattenP::Two),
            drho_diff: schatten_norm(&(&p1.drho - &p2.drho), SchattenP::Two),
            op1: n1,
            op2: n2,
            op_diff: nd,
        },
        indicative: false,
        rhs_as_stated: None,
    })
}

/// Linear map on d×d matrices, stored as a d²×d² matrix acting on row-major vec(X),
/// so that vec(AXB) = (A ⊗ Bᵀ) vec(X).
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != dim * dim || matrix.cols() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: matrix.rows(),
            });
        }
        Ok(Self { dim, matrix })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            matrix: ComplexMatrix::zeros(dim * dim, dim * dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            matrix: ComplexMatrix::identity(dim * dim),
        }
    }

    /// X ↦ A X B.
    pub fn sandwich(a: &ComplexMatrix, b: &ComplexMatrix) -> Self {
        Self {
            dim: a.rows(),
            matrix: crate::qmat::kron(a, &b.transpose()),
        }
    }

    /// X ↦ −i[H, X].
    pub fn hamiltonian(h: &ComplexMatrix) -> Self {
        let id = ComplexMatrix::identity(h.rows());
        let m = &Self::sandwich(h, &id).matrix - &Self::sandwich(&id, h).matrix;
        Self {
            dim: h.rows(),
            matrix: m.scale(c(0.0, -1.0)),
        }
    }

    /// X ↦ J X J† − ½{J†J, X}.
    pub fn dissipator(j: &ComplexMatrix) -> Self {
        let id = ComplexMatrix::identity(j.rows());
        let jj = j.adjoint().matmul(j);
        let m = &Self::sandwich(j, &j.adjoint()).matrix
            - &(&Self::sandwich(&jj, &id).matrix + &Self::sandwich(&id, &jj).matrix).scale_real(0.5);
        Self { dim: j.rows(), matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            matrix: self.matrix.scale_real(s),
        }
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let v = self.matrix.mul_vec(x.data());
        ComplexMatrix::from_vec(self.dim, self.dim, v).expect("superoperator output has d² entries")
    }

    /// Hilbert-Schmidt adjoint map.
    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            matrix: self.matrix.adjoint(),
        }
    }

    /// Largest |Tr L(E_jk)| over matrix units; zero for generators of trace-preserving flows.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for col in 0..d * d {
            let tr: C64 = (0..d).map(|i| self.matrix[(i * d + i, col)]).sum();
            worst = worst.max(tr.norm());
        }
        worst
    }

    /// e^{tL} as a superoperator.
    pub fn exp(&self, t: f64) -> Self {
        Self {
            dim: self.dim,
            matrix: expm(&self.matrix.scale_real(t)),
        }
    }
}

impl Add for &Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: &Superoperator) -> Superoperator {
        assert_eq!(self.dim, rhs.dim, "superoperator dimensions differ");
        Superoperator {
            dim: self.dim,
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &Superoperator {
    type Output = Superoperator;
    fn sub(self, rhs: &Superoperator) -> Superoperator {
        assert_eq!(self.dim, rhs.dim, "superoperator dimensions differ");
        Superoperator {
            dim: self.dim,
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

fn one_norm(m: &ComplexMatrix) -> f64 {
    (0..m.cols())
        .map(|j| (0..m.rows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// General matrix exponential by scaling and squaring with a truncated Taylor series.
fn expm(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.rows();
    let norm = one_norm(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a.scale_real(0.5f64.powi(squarings as i32));
    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=30 {
        term = term.matmul(&scaled).scale_real(1.0 / k as f64);
        sum = &sum + &term;
        if term.frobenius_norm() < 1e-18 * sum.frobenius_norm() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

fn gaussian_unit(d: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..d)
        .map(|_| c(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    let n = vec_norm(&v);
    v.into_iter().map(|z| z / n).collect()
}

/// Lower-bound estimate of sup ‖L(X)‖₁ over ‖X‖₁ = 1.
///
/// Searches rank-one X = |u⟩⟨v| from `samples` seeded random starts, each refined by
/// alternating updates: W is the polar factor of L(X), and (u, v) becomes the top
/// singular pair of L*(W). The result never decreases when `samples` grows.
pub fn induced_1to1_norm(superop: &Superoperator, samples: usize, seed: u64) -> f64 {
    let d = superop.dim();
    let adj = superop.adjoint();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let mut u = gaussian_unit(d, &mut rng);
        let mut v = gaussian_unit(d, &mut rng);
        let mut value = f64::NEG_INFINITY;
        for _ in 0..NORM_ITERATIONS {
            let y = superop.apply(&ComplexMatrix::outer(&u, &v));
            let s = svd(&y);
            let current: f64 = s.singular_values.iter().sum();
            if current - value <= NORM_CONVERGENCE {
                value = value.max(current);
                break;
            }
            value = current;
            let smax = s.singular_values.first().copied().unwrap_or(0.0);
            if smax == 0.0 {
                break;
            }
            let mut w = ComplexMatrix::zeros(d, d);
            for (k, &sk) in s.singular_values.iter().enumerate() {
                if sk > 1e-14 * smax {
                    w = &w + &ComplexMatrix::outer(&s.u.column(k), &s.v.column(k));
                }
            }
            let m = svd(&adj.apply(&w));
            if m.singular_values[0] == 0.0 {
                break;
            }
            u = m.u.column(0);
            v = m.v.column(0);
        }
        best = best.max(value);
    }
    best
}

/// Liouvillian-level check with ρᵢ(α) = e^{αLᵢ}ρ₀ and ∂ρᵢ = Lᵢρᵢ(α).
///
/// All three 1→1 norms are sampled lower bounds, so the report is marked indicative.
pub fn liouvillian_bound(
    l1: &Superoperator,
    l2: &Superoperator,
    rho0: &ComplexMatrix,
    alpha: f64,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<BoundReport> {
    if l1.dim() != l2.dim() || rho0.rows() != l1.dim() {
        return Err(Error::DimensionMismatch {
            expected: l1.dim(),
            found: rho0.rows(),
        });
    }
    for l in [l1, l2] {
        let defect = l.trace_defect();
        if defect > TRACE_PRESERVING_TOL {
            return Err(Error::NotTracePreserving { defect });
        }
    }
    let evolve = |l: &Superoperator| -> Result<StateFamilyPoint> {
        let rho = l.exp(alpha).apply(rho0).hermitian_part();
        let drho = l.apply(&rho).hermitian_part();
        regularize(&StateFamilyPoint::new(rho, drho)?, eps)
    };
    let p1 = evolve(l1)?;
    let p2 = evolve(l2)?;
    let pd = pair_data(&p1, &p2)?;
    let n1 = induced_1to1_norm(l1, samples, seed);
    let n2 = induced_1to1_norm(l2, samples, seed);
    let nd = induced_1to1_norm(&(l1 - l2), samples, seed);
    let rhs = (TAU * pd.c1 + pd.c2 + TAU * pd.c2 * n1.min(n2)) * nd;
    let lhs = (pd.j1 - pd.j2).abs();
    Ok(BoundReport {
        lhs,
        rhs,
        margin: rhs - lhs,
        regularization_eps: eps,
        c1: pd.c1,
        c2: pd.c2,
        lambda1: pd.l1,
        lambda2: pd.l2,
        j1: pd.j1,
        j2: pd.j2,
        norms: BoundNorms {
            drho1: pd.d1,
            drho2: pd.d2,
            rho_diff: schatten_norm(&(&p1.rho - &p2.rho), SchattenP::Two),
            drho_diff: schatten_norm(&(&p1.drho - &p2.drho), SchattenP::Two),
            op1: n1,
            op2: n2,
            op_diff: nd,
        },
        indicative: true,
        rhs_as_stated: None,
    })
}

/// Full-rank ρ = AA†/Tr(AA†) with Ginibre A, and a traceless Hermitian ∂ρ with
/// Gaussian entries.
pub fn random_full_rank_point(d: usize, rng: &mut ChaCha8Rng) -> StateFamilyPoint {
    let mut gauss = || c(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng));
    let a = ComplexMatrix::from_fn(d, d, |_, _| gauss());
    let h = ComplexMatrix::from_fn(d, d, |_, _| gauss()).hermitian_part();
    let aa = a.matmul(&a.adjoint());
    let rho = aa.scale_real(1.0 / aa.trace().re).hermitian_part();
    let shift = h.trace().re / d as f64;
    let drho = &h - &ComplexMatrix::identity(d).scale_real(shift);
    StateFamilyPoint::new(rho, drho.hermitian_part()).expect("construction gives a valid point")
}

/// Generator with independent N(0,1) Pauli coefficients.
pub fn random_generator(rng: &mut ChaCha8Rng) -> GeneratorSpec {
    let mut cf = [[0.0; 4]; 4];
    for row in cf.iter_mut() {
        for x in row.iter_mut() {
            *x = StandardNormal.sample(&mut *rng);
        }
    }
    GeneratorSpec::pauli(cf)
}
