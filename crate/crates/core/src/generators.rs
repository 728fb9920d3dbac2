//! Two-qubit generators and their closed-form bottleneck values.

use crate::error::{invalid, Error, Result};
use crate::qmat::{herm_eig, kron, pauli, ComplexMatrix, EigenDecomposition};

pub const X_HAT: [f64; 3] = [1.0, 0.0, 0.0];
pub const Y_HAT: [f64; 3] = [0.0, 1.0, 0.0];
pub const Z_HAT: [f64; 3] = [0.0, 0.0, 1.0];

const UNIT_TOL: f64 = 1e-9;
const TRACE_B_TOL: f64 = 1e-12;
const SINGULAR_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorForm {
    /// G = Σ c[i][j] σ_i⊗σ_j
    Pauli { c: [[f64; 4]; 4] },
    /// G = (m̂·σ + t₁I)⊗(n̂·σ + t₂I)
    Tensor {
        m_hat: [f64; 3],
        t1: f64,
        n_hat: [f64; 3],
        t2: f64,
    },
}

/// A Hermitian 4×4 generator with its matrix and spectrum cached.
#[derive(Clone, Debug)]
pub struct GeneratorSpec {
    form: GeneratorForm,
    matrix: ComplexMatrix,
    eig: EigenDecomposition,
}

fn bloch(v: [f64; 3]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2, 2);
    for (k, x) in v.iter().enumerate() {
        m = &m + &pauli(k + 1).scale_real(*x);
    }
    m
}

fn pauli_sum(cf: &[[f64; 4]; 4]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    for (i, row) in cf.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if x != 0.0 {
                m = &m + &kron(&pauli(i), &pauli(j)).scale_real(x);
            }
        }
    }
    m
}

/// c_ij = Tr[(σ_i⊗σ_j) G]/4.
pub fn pauli_coefficients(m: &ComplexMatrix) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = kron(&pauli(i), &pauli(j)).matmul(m).trace().re / 4.0;
        }
    }
    out
}

/// Splits a direction into its unit vector and norm. The norm is the factor that
/// a rescaling of α absorbs.
pub fn normalize_direction(v: [f64; 3]) -> Result<([f64; 3], f64)> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return Err(invalid("direction", "zero or non-finite vector"));
    }
    Ok((v.map(|x| x / n), n))
}

fn check_unit(name: &'static str, v: [f64; 3]) -> Result<()> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(invalid(name, format!("direction must have unit norm, got {n}")));
    }
    Ok(())
}

impl GeneratorSpec {
    fn build(form: GeneratorForm, matrix: ComplexMatrix) -> Self {
        let eig = herm_eig(&matrix).expect("generator matrix is Hermitian by construction");
        Self { form, matrix, eig }
    }

    pub fn pauli(cf: [[f64; 4]; 4]) -> Self {
        let m = pauli_sum(&cf);
        Self::build(GeneratorForm::Pauli { c: cf }, m)
    }

    /// Wraps an arbitrary Hermitian 4×4 matrix, recording its Pauli coefficients.
    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() || !(m.rows() == 4 || m.rows() == 2) {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: m.rows(),
            });
        }
        if !m.is_hermitian() {
            return Err(Error::NotHermitian {
                defect: m.hermiticity_defect(),
            });
        }
        let m = m.hermitian_part();
        let cf = if m.rows() == 4 {
            pauli_coefficients(&m)
        } else {
            // single-qubit generators only appear in tests of the engine
            let mut cf = [[0.0; 4]; 4];
            for (j, x) in cf[0].iter_mut().enumerate() {
                *x = pauli(j).matmul(&m).trace().re / 2.0;
            }
            cf
        };
        Ok(Self::build(GeneratorForm::Pauli { c: cf }, m))
    }

    pub fn form(&self) -> &GeneratorForm {
        &self.form
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn eig(&self) -> &EigenDecomposition {
        &self.eig
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn spread(&self) -> f64 {
        self.eig.spread()
    }

    pub fn coefficients(&self) -> [[f64; 4]; 4] {
        match &self.form {
            GeneratorForm::Pauli { c } => *c,
            GeneratorForm::Tensor { .. } => pauli_coefficients(&self.matrix),
        }
    }

    /// G − ((λ_max+λ_min)/2)·I, which has a spectrum symmetric about zero.
    pub fn centered(&self) -> Self {
        let mid = match (self.eig.values.first(), self.eig.values.last()) {
            (Some(lo), Some(hi)) => 0.5 * (lo + hi),
            _ => 0.0,
        };
        let n = self.dim();
        let m = &self.matrix - &ComplexMatrix::identity(n).scale_real(mid);
        let form = match &self.form {
            GeneratorForm::Pauli { c } => {
                let mut c = *c;
                c[0][0] -= mid;
                GeneratorForm::Pauli { c }
            }
            GeneratorForm::Tensor { .. } => GeneratorForm::Pauli {
                c: pauli_coefficients(&m),
            },
        };
        Self::build(form, m)
    }
}

/// (m̂·σ + t₁I)⊗(n̂·σ + t₂I). Directions must already be unit vectors.
pub fn make_tensor(m_hat: [f64; 3], t1: f64, n_hat: [f64; 3], t2: f64) -> Result<GeneratorSpec> {
    check_unit("m", m_hat)?;
    check_unit("n", n_hat)?;
    let g1 = &bloch(m_hat) + &pauli(0).scale_real(t1);
    let g2 = &bloch(n_hat) + &pauli(0).scale_real(t2);
    Ok(GeneratorSpec::build(
        GeneratorForm::Tensor { m_hat, t1, n_hat, t2 },
        kron(&g1, &g2),
    ))
}

/// σ₁⊗σ₁ + t₁ I⊗σ₃ + t₂ σ₃⊗I
pub fn case_study(t1: f64, t2: f64) -> GeneratorSpec {
    let mut cf = [[0.0; 4]; 4];
    cf[1][1] = 1.0;
    cf[0][3] = t1;
    cf[3][0] = t2;
    GeneratorSpec::pauli(cf)
}

/// σ₁⊗σ₁ + t₁ I⊗σ₁ + t₂ σ₁⊗I + t₃ I⊗I. The constant t₃ shifts the spectrum and
/// drops out of every Fisher information.
pub fn xx_case(t1: f64, t2: f64, t3: f64) -> GeneratorSpec {
    let mut cf = [[0.0; 4]; 4];
    cf[1][1] = 1.0;
    cf[0][1] = t1;
    cf[1][0] = t2;
    cf[0][0] = t3;
    GeneratorSpec::pauli(cf)
}

/// σ₁⊗σ₁ + t₂₂ σ₂⊗σ₂ + t₃₃ σ₃⊗σ₃
pub fn appendix_b_generator(t22: f64, t33: f64) -> GeneratorSpec {
    let mut cf = [[0.0; 4]; 4];
    cf[1][1] = 1.0;
    cf[2][2] = t22;
    cf[3][3] = t33;
    GeneratorSpec::pauli(cf)
}

/// True when every c₀ⱼ vanishes, i.e. the partial trace of G over the accessed qubit is zero.
pub fn trace_b_vanishes(g: &GeneratorSpec) -> bool {
    g.coefficients()[0].iter().all(|x| x.abs() <= TRACE_B_TOL)
}

/// Returns the value of the first branch whose closed condition holds. Every
/// other matching branch must agree with it.
fn first_branch(branches: &[(bool, f64)]) -> f64 {
    let mut hits = branches.iter().filter(|(ok, _)| *ok).map(|(_, v)| *v);
    let first = hits.next().expect("piecewise branches cover the plane");
    for v in hits {
        assert!(
            (v - first).abs() <= 1e-9 * (1.0 + first.abs()),
            "piecewise branches disagree at a shared boundary: {first} vs {v}"
        );
    }
    first
}

/// Maximum QFI with access to the whole output, tensor generator.
pub fn jbf_tensor(t1: f64, t2: f64) -> f64 {
    let (a1, a2) = (t1.abs(), t2.abs());
    first_branch(&[
        (a2 <= a1 && a2 <= 1.0, 4.0 * (1.0 + a1).powi(2)),
        (a1 <= a2 && a1 <= 1.0, 4.0 * (1.0 + a2).powi(2)),
        (a1 >= 1.0 && a2 >= 1.0 && t1 * t2 >= 0.0, 4.0 * (t1 + t2).powi(2)),
        (a1 >= 1.0 && a2 >= 1.0 && t1 * t2 <= 0.0, 4.0 * (t1 - t2).powi(2)),
    ])
}

/// Which pair of amplitudes carries the optimal tensor-case probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimalAmplitudes {
    /// |C₀₀| = |C₁₀| = 1/√2
    C00C10,
    /// |C₀₁| = |C₁₁| = 1/√2
    C01C11,
}

/// Maximum of J_B over probes for a tensor generator.
pub fn jb_tensor_max(t2: f64) -> (f64, OptimalAmplitudes) {
    let plus = 4.0 * (t2 + 1.0).powi(2);
    let minus = 4.0 * (t2 - 1.0).powi(2);
    if t2 >= 0.0 {
        if t2 == 0.0 {
            assert_eq!(plus, minus);
        }
        (plus, OptimalAmplitudes::C00C10)
    } else {
        (minus, OptimalAmplitudes::C01C11)
    }
}

/// Δ = J̄_BF − J̄_B for a tensor generator.
///
/// The branch for t₁ ≤ −1 is the mirror image of the t₁ ≥ 1 branch,
/// 4(t₁+1)(t₁−2|t₂|−1).
pub fn gap_tensor(t1: f64, t2: f64) -> f64 {
    let (a1, a2) = (t1.abs(), t2.abs());
    first_branch(&[
        (a1 <= a2 && a1 <= 1.0, 0.0),
        (a2 <= a1 && a2 <= 1.0, 4.0 * (a1 - a2) * (2.0 + a1 + a2)),
        (t1 >= 1.0 && a2 >= 1.0, 4.0 * (t1 - 1.0) * (t1 + 2.0 * a2 + 1.0)),
        (t1 <= -1.0 && a2 >= 1.0, 4.0 * (t1 + 1.0) * (t1 - 2.0 * a2 - 1.0)),
    ])
}

/// J̄_BF = 4(1+(|t₁|+|t₂|)²) for σ₁⊗σ₁ + t₁I⊗σ₃ + t₂σ₃⊗I.
pub fn jbf_case(t1: f64, t2: f64) -> f64 {
    4.0 * (1.0 + (t1.abs() + t2.abs()).powi(2))
}

/// Sign of the imaginary unit in the case-iii probe cosθ|..⟩ ± i sinθ|..⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Closed-form J_B for the case-iii probes cosθ|01⟩ ± i sinθ|10⟩ (a = √(1+(t₁−t₂)²))
/// and cosθ|00⟩ ± i sinθ|11⟩ (a = √(1+(t₁+t₂)²)).
///
/// `sign` is the sign in front of i in the probe. Both signs reduce to one
/// expression in θ' = sign·θ:
/// 4a²[a sin2θ' cos2aα − cos2θ' sin2aα]² / (a⁴ − [a sin2θ' sin2aα + cos2θ'(cos2aα + a² − 1)]²).
pub fn jb_case_iii(a: f64, theta: f64, alpha: f64, sign: Sign) -> Result<f64> {
    if a < 1.0 - 1e-12 {
        return Err(invalid("a", format!("must be at least 1, got {a}")));
    }
    let th = sign.value() * theta;
    let (s2t, c2t) = (2.0 * th).sin_cos();
    let (s2a, c2a) = (2.0 * alpha * a).sin_cos();
    let num = 4.0 * a * a * (a * s2t * c2a - c2t * s2a).powi(2);
    let den = a.powi(4) - (a * s2t * s2a + c2t * (c2a + a * a - 1.0)).powi(2);
    if den.abs() < SINGULAR_TOL {
        return Err(Error::Singular(format!(
            "case-iii denominator {den:.3e} at a={a}, θ={theta}, α={alpha}"
        )));
    }
    Ok(num / den)
}

/// a = √(1+(t₁+t₂)²) for the |00⟩/|11⟩ family and √(1+(t₁−t₂)²) for |01⟩/|10⟩.
pub fn case_iii_a(t1: f64, t2: f64, family: CaseIiiFamily) -> f64 {
    match family {
        CaseIiiFamily::Even => (1.0 + (t1 + t2).powi(2)).sqrt(),
        CaseIiiFamily::Odd => (1.0 + (t1 - t2).powi(2)).sqrt(),
    }
}

/// Eigenvector families of the case-iii anticommutant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseIiiFamily {
    /// cosθ|00⟩ ± i sinθ|11⟩
    Even,
    /// cosθ|01⟩ ± i sinθ|10⟩
    Odd,
}
