//! Probe states: Hurwitz parametrization, grids, Haar sampling, the
//! anticommutant procedure and the named optimal probes.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::generators::{CaseIiiFamily, GeneratorSpec, Sign, Z_HAT};
use crate::qmat::{c, herm_eig, inner, kron_vec, svd, vec_norm, ComplexMatrix, C64};

const NORM_TOL: f64 = 1e-12;
const ANGLE_TOL: f64 = 1e-12;

/// Where a probe came from.
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Hurwitz { thetas: Vec<f64>, phis: Vec<f64> },
    Explicit,
    Named { label: String, params: Vec<f64> },
    Haar { seed: u64 },
    Candidate { sample: usize, eigenvalue: f64 },
    Separable { first: Box<Provenance>, second: Box<Provenance> },
}

/// Normalized pure state on n qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeState {
    n_qubits: usize,
    amplitudes: Vec<C64>,
    provenance: Provenance,
}

fn qubits_for(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(invalid("amplitudes", format!("length {len} is not a power of two ≥ 2")));
    }
    Ok(len.trailing_zeros() as usize)
}

impl ProbeState {
    /// Normalizes `amplitudes` and tags the state as explicit.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        Self::with_provenance(amplitudes, Provenance::Explicit)
    }

    pub fn with_provenance(mut amplitudes: Vec<C64>, provenance: Provenance) -> Result<Self> {
        let n_qubits = qubits_for(amplitudes.len())?;
        let nrm = vec_norm(&amplitudes);
        if !(nrm > 0.0 && nrm.is_finite()) {
            return Err(invalid("amplitudes", "zero or non-finite norm"));
        }
        if (nrm - 1.0).abs() > NORM_TOL {
            for a in amplitudes.iter_mut() {
                *a /= nrm;
            }
        }
        Ok(Self {
            n_qubits,
            amplitudes,
            provenance,
        })
    }

    /// Computational basis state |k⟩.
    pub fn basis(n_qubits: usize, k: usize) -> Self {
        let mut amps = vec![c(0.0, 0.0); 1 << n_qubits];
        amps[k] = c(1.0, 0.0);
        Self {
            n_qubits,
            amplitudes: amps,
            provenance: Provenance::Explicit,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }

    pub fn tensor(&self, other: &ProbeState) -> ProbeState {
        ProbeState {
            n_qubits: self.n_qubits + other.n_qubits,
            amplitudes: kron_vec(&self.amplitudes, &other.amplitudes),
            provenance: Provenance::Separable {
                first: Box::new(self.provenance.clone()),
                second: Box::new(other.provenance.clone()),
            },
        }
    }

    /// Schmidt coefficients across the first-qubit / rest cut, descending.
    pub fn schmidt_coefficients(&self) -> Vec<f64> {
        let rest = self.dim() / 2;
        let m = ComplexMatrix::from_fn(2, rest, |i, j| self.amplitudes[i * rest + j]);
        svd(&m).singular_values
    }

    /// Product of the two Schmidt coefficients of a two-qubit state; zero iff separable.
    pub fn schmidt_product(&self) -> f64 {
        let s = self.schmidt_coefficients();
        s.iter().take(2).product()
    }
}

/// Hurwitz parametrization of a 2^n-dimensional state from 2^n − 1 angles of each kind.
pub fn hurwitz_state(thetas: &[f64], phis: &[f64], n_qubits: usize) -> Result<ProbeState> {
    let amps = hurwitz_amplitudes(thetas, phis, n_qubits)?;
    Ok(ProbeState {
        n_qubits,
        amplitudes: amps,
        provenance: Provenance::Hurwitz {
            thetas: thetas.to_vec(),
            phis: phis.to_vec(),
        },
    })
}

fn hurwitz_amplitudes(thetas: &[f64], phis: &[f64], n_qubits: usize) -> Result<Vec<C64>> {
    let d = 1usize << n_qubits;
    let k = d - 1;
    if thetas.len() != k {
        return Err(invalid("theta", format!("expected {k} angles, got {}", thetas.len())));
    }
    if phis.len() != k {
        return Err(invalid("phi", format!("expected {k} angles, got {}", phis.len())));
    }
    if thetas.iter().any(|t| !(-ANGLE_TOL..=FRAC_PI_2 + ANGLE_TOL).contains(t)) {
        return Err(invalid("theta", "angles must lie in [0, π/2]"));
    }
    if phis.iter().any(|p| !(-ANGLE_TOL..=TAU + ANGLE_TOL).contains(p)) {
        return Err(invalid("phi", "angles must lie in [0, 2π]"));
    }
    // θ_ℓ is thetas[ℓ−1], φ_n is phis[n−1]
    let th = |l: usize| thetas[l - 1];
    let mut amps = Vec::with_capacity(d);
    amps.push(c(th(k).cos(), 0.0));
    let mut sin_prod = 1.0;
    for n in 1..d {
        sin_prod *= th(d - n).sin();
        let cos_idx = k - n;
        let cos_part = if cos_idx == 0 { 1.0 } else { th(cos_idx).cos() };
        amps.push(C64::from_polar(cos_part * sin_prod, phis[n - 1]));
    }
    let nrm = vec_norm(&amps);
    for a in amps.iter_mut() {
        *a /= nrm;
    }
    Ok(amps)
}

fn equispaced_closed(n: usize, hi: f64) -> Vec<f64> {
    (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect()
}

fn equispaced_open(n: usize, hi: f64) -> Vec<f64> {
    (0..n).map(|i| hi * i as f64 / n as f64).collect()
}

/// Cartesian grid of Hurwitz angles, θ ∈ [0, π/2] (closed) and φ ∈ [0, 2π) per parameter.
///
/// Enumeration is row-major over (θ₁, φ₁, θ₂, φ₂, …) with the last digit fastest.
#[derive(Clone, Debug)]
pub struct ProbeGrid {
    n_qubits: usize,
    thetas: Vec<f64>,
    phis: Vec<f64>,
}

impl ProbeGrid {
    pub fn new(n_qubits: usize, n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 2 {
            return Err(invalid("grid", "n_theta must be at least 2"));
        }
        if n_phi < 2 {
            return Err(invalid("grid", "n_phi must be at least 2"));
        }
        if n_qubits == 0 || n_qubits > 2 {
            return Err(invalid("n_qubits", "grids are defined for 1 or 2 qubits"));
        }
        Ok(Self {
            n_qubits,
            thetas: equispaced_closed(n_theta, FRAC_PI_2),
            phis: equispaced_open(n_phi, TAU),
        })
    }

    fn params(&self) -> usize {
        (1 << self.n_qubits) - 1
    }

    pub fn len(&self) -> usize {
        (self.thetas.len() * self.phis.len()).pow(self.params() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn angles(&self, mut index: usize) -> (Vec<f64>, Vec<f64>) {
        let k = self.params();
        let (nt, np) = (self.thetas.len(), self.phis.len());
        let mut th = vec![0.0; k];
        let mut ph = vec![0.0; k];
        for p in (0..k).rev() {
            ph[p] = self.phis[index % np];
            index /= np;
            th[p] = self.thetas[index % nt];
            index /= nt;
        }
        (th, ph)
    }

    pub fn amplitudes_at(&self, index: usize) -> Vec<C64> {
        let (th, ph) = self.angles(index);
        hurwitz_amplitudes(&th, &ph, self.n_qubits).expect("grid angles are in range")
    }

    pub fn probe_at(&self, index: usize) -> ProbeState {
        let (th, ph) = self.angles(index);
        hurwitz_state(&th, &ph, self.n_qubits).expect("grid angles are in range")
    }

    pub fn iter(&self) -> impl Iterator<Item = ProbeState> + '_ {
        (0..self.len()).map(move |i| self.probe_at(i))
    }
}

pub fn grid_probes(n_qubits: usize, n_theta: usize, n_phi: usize) -> Result<ProbeGrid> {
    ProbeGrid::new(n_qubits, n_theta, n_phi)
}

/// Product states built from two single-qubit grids.
#[derive(Clone, Debug)]
pub struct SeparableGrid {
    single: ProbeGrid,
}

impl SeparableGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        Ok(Self {
            single: ProbeGrid::new(1, n_theta, n_phi)?,
        })
    }

    pub fn len(&self) -> usize {
        self.single.len().pow(2)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn amplitudes_at(&self, index: usize) -> Vec<C64> {
        let n = self.single.len();
        kron_vec(&self.single.amplitudes_at(index / n), &self.single.amplitudes_at(index % n))
    }

    pub fn probe_at(&self, index: usize) -> ProbeState {
        let n = self.single.len();
        self.single.probe_at(index / n).tensor(&self.single.probe_at(index % n))
    }
}

fn gaussian_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..dim)
        .map(|_| c(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect()
}

/// Haar-random pure state from a normalized complex Gaussian vector.
pub fn haar_probe(n_qubits: usize, seed: u64) -> ProbeState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_from_rng(n_qubits, &mut rng, seed)
}

pub(crate) fn haar_from_rng(n_qubits: usize, rng: &mut ChaCha8Rng, seed: u64) -> ProbeState {
    let mut v = gaussian_vector(1 << n_qubits, rng);
    let nrm = vec_norm(&v);
    for x in v.iter_mut() {
        *x /= nrm;
    }
    ProbeState {
        n_qubits,
        amplitudes: v,
        provenance: Provenance::Haar { seed },
    }
}

/// Real-linear space of Hermitian A with GA + AG = 0.
#[derive(Clone, Debug)]
pub struct AnticommutantBasis {
    pub generator: GeneratorSpec,
    pub basis: Vec<ComplexMatrix>,
    pub real_dimension: usize,
}

pub const DEFAULT_NULLSPACE_TOL: f64 = 1e-10;

/// Hilbert–Schmidt orthonormal basis of the Hermitian d×d matrices.
fn hermitian_basis(d: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut e = ComplexMatrix::zeros(d, d);
        e[(i, i)] = c(1.0, 0.0);
        out.push(e);
    }
    for i in 0..d {
        for j in i + 1..d {
            let mut e = ComplexMatrix::zeros(d, d);
            e[(i, j)] = c(FRAC_1_SQRT_2, 0.0);
            e[(j, i)] = c(FRAC_1_SQRT_2, 0.0);
            out.push(e);
        }
    }
    for i in 0..d {
        for j in i + 1..d {
            let mut e = ComplexMatrix::zeros(d, d);
            e[(i, j)] = c(0.0, FRAC_1_SQRT_2);
            e[(j, i)] = c(0.0, -FRAC_1_SQRT_2);
            out.push(e);
        }
    }
    out
}

/// Numerical nullspace of A ↦ GA + AG over Hermitian A.
pub fn anticommutant_basis(g: &GeneratorSpec, tol: f64) -> AnticommutantBasis {
    let gm = g.matrix();
    let d = gm.rows();
    let herm = hermitian_basis(d);
    let n = herm.len();
    // columns: real and imaginary parts of vec(G E_k + E_k G)
    let mut map = ComplexMatrix::zeros(2 * d * d, n);
    for (k, e) in herm.iter().enumerate() {
        let img = gm.anticommutator(e);
        for (r, z) in img.data().iter().enumerate() {
            map[(r, k)] = c(z.re, 0.0);
            map[(d * d + r, k)] = c(z.im, 0.0);
        }
    }
    let s = svd(&map);
    let smax = s.singular_values.first().copied().unwrap_or(0.0);
    let mut basis = Vec::new();
    for (j, &sig) in s.singular_values.iter().enumerate() {
        if sig <= tol * smax || smax == 0.0 {
            let mut a = ComplexMatrix::zeros(d, d);
            for (k, e) in herm.iter().enumerate() {
                let x = s.v[(k, j)].re;
                if x != 0.0 {
                    a = &a + &e.scale_real(x);
                }
            }
            basis.push(a.hermitian_part());
        }
    }
    AnticommutantBasis {
        generator: g.clone(),
        real_dimension: basis.len(),
        basis,
    }
}

/// Eigenvector of a random anticommutant element, with the data of the scheme G|Ψ⟩ = a|Ψ⊥⟩.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub probe: ProbeState,
    pub eigenvalue: f64,
    /// ‖G|Ψ⟩‖
    pub a: f64,
    /// G²|Ψ⟩ ∝ |Ψ⟩ within 1e-9, so the evolution stays in span{Ψ, GΨ}.
    pub two_level: bool,
}

pub const DEFAULT_CANDIDATE_SAMPLES: usize = 32;

const EIGENVALUE_FLOOR: f64 = 1e-9;
const EXPECTATION_TOL: f64 = 1e-9;

/// Eigenvectors with nonzero eigenvalue of `samples` random unit combinations of the basis.
pub fn probe_candidates(basis: &AnticommutantBasis, samples: usize, seed: u64) -> Vec<Candidate> {
    if basis.basis.is_empty() {
        return Vec::new();
    }
    let gm = basis.generator.matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for sample in 0..samples {
        let w: Vec<f64> = (0..basis.basis.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut a = ComplexMatrix::zeros(gm.rows(), gm.rows());
        for (b, x) in basis.basis.iter().zip(&w) {
            a = &a + &b.scale_real(x / wn);
        }
        let eig = match herm_eig(&a.hermitian_part()) {
            Ok(e) => e,
            Err(_) => continue,
        };
        for (k, &lam) in eig.values.iter().enumerate() {
            if lam.abs() <= EIGENVALUE_FLOOR {
                continue;
            }
            let psi = eig.vector(k);
            let g_psi = gm.mul_vec(&psi);
            if inner(&psi, &g_psi).norm() > EXPECTATION_TOL * (1.0 + gm.frobenius_norm()) {
                continue;
            }
            let g2 = gm.mul_vec(&g_psi);
            let mean = inner(&psi, &g2);
            let resid: f64 = g2
                .iter()
                .zip(&psi)
                .map(|(x, p)| (x - mean * p).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let probe = ProbeState::with_provenance(psi, Provenance::Candidate { sample, eigenvalue: lam })
                .expect("eigenvectors are normalized");
            out.push(Candidate {
                a: vec_norm(&g_psi),
                two_level: resid <= 1e-9 * (1.0 + gm.frobenius_norm().powi(2)),
                eigenvalue: lam,
                probe,
            });
        }
    }
    out
}

/// Probes singled out in the analysis of tensor generators and of the case study.
#[derive(Clone, Debug, PartialEq)]
pub enum NamedProbe {
    /// (|0_m⟩ + e^{iφ}|1_m⟩)/√2 ⊗ |0_n⟩ for t₂ ≥ 0, ⊗ |1_n⟩ for t₂ < 0.
    Eq29 {
        phi: f64,
        t2_nonnegative: bool,
        m_hat: [f64; 3],
        n_hat: [f64; 3],
    },
    /// (cosθ|0⟩ ± i sinθ|1⟩) ⊗ (|0⟩ + e^{iφ}|1⟩)/√2
    CaseI { theta: f64, phi: f64, sign: Sign },
    /// (|0⟩ ± i|1⟩)/√2 ⊗ (cosθ|0⟩ ± sinθ|1⟩)
    CaseII { theta: f64, sign_a: Sign, sign_e: Sign },
    /// cosθ|00⟩ ± i sinθ|11⟩ or cosθ|01⟩ ± i sinθ|10⟩
    CaseIII { theta: f64, sign: Sign, family: CaseIiiFamily },
    /// (Ψ(0)⊗Ψ(0) + Ψ(π)⊗Ψ(π))/√2 with Ψ the eq29 probe, ordered A₁E₁A₂E₂.
    UpsilonTensor {
        t2_nonnegative: bool,
        m_hat: [f64; 3],
        n_hat: [f64; 3],
    },
    /// (Ψ₊(0,0)^⊗2 + Ψ₊(0,π)^⊗2)/√2
    UpsilonCaseI,
    /// (Ψ₊₊(0)^⊗2 + Ψ₋₋(0)^⊗2)/√2
    UpsilonCaseII,
    /// (Ψ₊(0)^⊗2 + Ψ₊(π/2)^⊗2)/√2 with the global phase of Ψ₊(π/2) removed.
    UpsilonCaseIII { family: CaseIiiFamily },
}

impl NamedProbe {
    pub fn label(&self) -> &'static str {
        match self {
            NamedProbe::Eq29 { .. } => "eq29",
            NamedProbe::CaseI { .. } => "case_i",
            NamedProbe::CaseII { .. } => "case_ii",
            NamedProbe::CaseIII { .. } => "case_iii",
            NamedProbe::UpsilonTensor { .. } => "upsilon_tensor",
            NamedProbe::UpsilonCaseI => "upsilon_case_i",
            NamedProbe::UpsilonCaseII => "upsilon_case_ii",
            NamedProbe::UpsilonCaseIII { .. } => "upsilon_case_iii",
        }
    }

    fn params(&self) -> Vec<f64> {
        let fam = |f: &CaseIiiFamily| if *f == CaseIiiFamily::Even { 0.0 } else { 1.0 };
        let b = |x: bool| if x { 1.0 } else { 0.0 };
        match self {
            NamedProbe::Eq29 { phi, t2_nonnegative, m_hat, n_hat } => {
                let mut v = vec![*phi, b(*t2_nonnegative)];
                v.extend_from_slice(m_hat);
                v.extend_from_slice(n_hat);
                v
            }
            NamedProbe::CaseI { theta, phi, sign } => vec![*theta, *phi, sign.value()],
            NamedProbe::CaseII { theta, sign_a, sign_e } => vec![*theta, sign_a.value(), sign_e.value()],
            NamedProbe::CaseIII { theta, sign, family } => vec![*theta, sign.value(), fam(family)],
            NamedProbe::UpsilonTensor { t2_nonnegative, m_hat, n_hat } => {
                let mut v = vec![b(*t2_nonnegative)];
                v.extend_from_slice(m_hat);
                v.extend_from_slice(n_hat);
                v
            }
            NamedProbe::UpsilonCaseI | NamedProbe::UpsilonCaseII => Vec::new(),
            NamedProbe::UpsilonCaseIII { family } => vec![fam(family)],
        }
    }
}

/// Loosely typed parameters for [`named_probe_by_label`].
#[derive(Clone, Debug)]
pub struct NamedParams {
    pub phi: f64,
    pub theta: f64,
    pub t2_nonnegative: bool,
    pub sign: Sign,
    pub sign_e: Sign,
    pub family: CaseIiiFamily,
    pub m_hat: [f64; 3],
    pub n_hat: [f64; 3],
}

impl Default for NamedParams {
    fn default() -> Self {
        Self {
            phi: 0.0,
            theta: 0.0,
            t2_nonnegative: true,
            sign: Sign::Plus,
            sign_e: Sign::Plus,
            family: CaseIiiFamily::Even,
            m_hat: Z_HAT,
            n_hat: Z_HAT,
        }
    }
}

pub fn named_probe_by_label(label: &str, p: &NamedParams) -> Result<ProbeState> {
    let probe = match label {
        "eq29" => NamedProbe::Eq29 {
            phi: p.phi,
            t2_nonnegative: p.t2_nonnegative,
            m_hat: p.m_hat,
            n_hat: p.n_hat,
        },
        "case_i" => NamedProbe::CaseI { theta: p.theta, phi: p.phi, sign: p.sign },
        "case_ii" => NamedProbe::CaseII { theta: p.theta, sign_a: p.sign, sign_e: p.sign_e },
        "case_iii" => NamedProbe::CaseIII { theta: p.theta, sign: p.sign, family: p.family },
        "upsilon_tensor" => NamedProbe::UpsilonTensor {
            t2_nonnegative: p.t2_nonnegative,
            m_hat: p.m_hat,
            n_hat: p.n_hat,
        },
        "upsilon_case_i" => NamedProbe::UpsilonCaseI,
        "upsilon_case_ii" => NamedProbe::UpsilonCaseII,
        "upsilon_case_iii" => NamedProbe::UpsilonCaseIII { family: p.family },
        other => return Err(Error::UnknownLabel(other.to_string())),
    };
    named_probe(&probe)
}

/// Eigenvectors |0_m⟩ (eigenvalue +1) and |1_m⟩ (eigenvalue −1) of m̂·σ.
pub fn bloch_basis(m: [f64; 3]) -> ([C64; 2], [C64; 2]) {
    let [m1, m2, m3] = m;
    let w = c(m1, -m2);
    let s = FRAC_1_SQRT_2;
    let zero = if 1.0 - m3 <= 1e-12 {
        [c(1.0, 0.0), c(0.0, 0.0)]
    } else {
        let r = (1.0 - m3).sqrt();
        [w * (s / r), c(s * r, 0.0)]
    };
    let one = if 1.0 + m3 <= 1e-12 {
        [c(1.0, 0.0), c(0.0, 0.0)]
    } else {
        let r = (1.0 + m3).sqrt();
        [-w * (s / r), c(s * r, 0.0)]
    };
    (zero, one)
}

fn eq29_amplitudes(phi: f64, t2_nonnegative: bool, m_hat: [f64; 3], n_hat: [f64; 3]) -> Vec<C64> {
    let (m0, m1) = bloch_basis(m_hat);
    let (n0, n1) = bloch_basis(n_hat);
    let e = C64::from_polar(1.0, phi);
    let a: Vec<C64> = (0..2).map(|i| (m0[i] + e * m1[i]) * FRAC_1_SQRT_2).collect();
    let b = if t2_nonnegative { n0 } else { n1 };
    kron_vec(&a, &b)
}

fn case_i_amplitudes(theta: f64, phi: f64, sign: Sign) -> Vec<C64> {
    let a = [c(theta.cos(), 0.0), c(0.0, sign.value() * theta.sin())];
    let e = [c(FRAC_1_SQRT_2, 0.0), C64::from_polar(FRAC_1_SQRT_2, phi)];
    kron_vec(&a, &e)
}

fn case_ii_amplitudes(theta: f64, sign_a: Sign, sign_e: Sign) -> Vec<C64> {
    let a = [c(FRAC_1_SQRT_2, 0.0), c(0.0, sign_a.value() * FRAC_1_SQRT_2)];
    let e = [c(theta.cos(), 0.0), c(sign_e.value() * theta.sin(), 0.0)];
    kron_vec(&a, &e)
}

fn case_iii_amplitudes(theta: f64, sign: Sign, family: CaseIiiFamily) -> Vec<C64> {
    let mut v = vec![c(0.0, 0.0); 4];
    let (lo, hi) = match family {
        CaseIiiFamily::Even => (0, 3),
        CaseIiiFamily::Odd => (1, 2),
    };
    v[lo] = c(theta.cos(), 0.0);
    v[hi] = c(0.0, sign.value() * theta.sin());
    v
}

/// Removes the global phase so that the largest amplitude is real and positive.
fn dephase(v: &[C64]) -> Vec<C64> {
    let k = v
        .iter()
        .enumerate()
        .fold(0, |best, (i, x)| if x.norm() > v[best].norm() + 1e-15 { i } else { best });
    let ph = v[k].conj() / v[k].norm();
    v.iter().map(|x| x * ph).collect()
}

fn two_copy_superposition(a: &[C64], b: &[C64]) -> Vec<C64> {
    let aa = kron_vec(a, a);
    let bb = kron_vec(b, b);
    aa.iter().zip(&bb).map(|(x, y)| (x + y) * FRAC_1_SQRT_2).collect()
}

pub fn named_probe(probe: &NamedProbe) -> Result<ProbeState> {
    let amps = match probe {
        NamedProbe::Eq29 { phi, t2_nonnegative, m_hat, n_hat } => {
            eq29_amplitudes(*phi, *t2_nonnegative, *m_hat, *n_hat)
        }
        NamedProbe::CaseI { theta, phi, sign } => case_i_amplitudes(*theta, *phi, *sign),
        NamedProbe::CaseII { theta, sign_a, sign_e } => case_ii_amplitudes(*theta, *sign_a, *sign_e),
        NamedProbe::CaseIII { theta, sign, family } => case_iii_amplitudes(*theta, *sign, *family),
        NamedProbe::UpsilonTensor { t2_nonnegative, m_hat, n_hat } => two_copy_superposition(
            &eq29_amplitudes(0.0, *t2_nonnegative, *m_hat, *n_hat),
            &eq29_amplitudes(PI, *t2_nonnegative, *m_hat, *n_hat),
        ),
        NamedProbe::UpsilonCaseI => two_copy_superposition(
            &case_i_amplitudes(0.0, 0.0, Sign::Plus),
            &case_i_amplitudes(0.0, PI, Sign::Plus),
        ),
        NamedProbe::UpsilonCaseII => two_copy_superposition(
            &case_ii_amplitudes(0.0, Sign::Plus, Sign::Plus),
            &case_ii_amplitudes(0.0, Sign::Minus, Sign::Minus),
        ),
        NamedProbe::UpsilonCaseIII { family } => two_copy_superposition(
            &case_iii_amplitudes(0.0, Sign::Plus, *family),
            &dephase(&case_iii_amplitudes(FRAC_PI_2, Sign::Plus, *family)),
        ),
    };
    ProbeState::with_provenance(
        amps,
        Provenance::Named {
            label: probe.label().to_string(),
            params: probe.params(),
        },
    )
}

/// Probes of the case-ii family over an equispaced θ grid in [0, π), all sign choices.
pub fn case_ii_family(n_theta: usize) -> Vec<ProbeState> {
    let mut out = Vec::new();
    for k in 0..n_theta {
        let theta = PI * k as f64 / n_theta as f64;
        for sa in [Sign::Plus, Sign::Minus] {
            for se in [Sign::Plus, Sign::Minus] {
                out.push(named_probe(&NamedProbe::CaseII { theta, sign_a: sa, sign_e: se }).expect("valid"));
            }
        }
    }
    out
}

/// (|λ_max⟩ + e^{iφ}|λ_min⟩)/√2 for φ on an equispaced grid in [0, 2π).
pub fn extreme_superpositions(g: &GeneratorSpec, n_phi: usize) -> Vec<ProbeState> {
    let e = g.eig();
    let n = e.values.len();
    let (lo, hi) = (e.vector(0), e.vector(n - 1));
    (0..n_phi)
        .map(|k| {
            let ph = C64::from_polar(1.0, TAU * k as f64 / n_phi as f64);
            let v: Vec<C64> = hi.iter().zip(&lo).map(|(a, b)| (a + ph * b) * FRAC_1_SQRT_2).collect();
            ProbeState::from_amplitudes(v).expect("normalized")
        })
        .collect()
}
