//! The bottleneck pipeline: channel and Kraus form, single- and two-copy J_B,
//! probe optimization and the gap contour.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::generators::{case_iii_a, case_study, jb_case_iii, jbf_case, CaseIiiFamily, GeneratorSpec, Sign};
use crate::probes::{
    anticommutant_basis, haar_from_rng, named_probe, probe_candidates, NamedProbe, ProbeGrid, ProbeState,
    SeparableGrid, DEFAULT_NULLSPACE_TOL,
};
use crate::qfi::{max_qfi_full, qfi_default, reduce_pure, StateFamilyPoint, Traced, RANK_TOL};
use crate::qmat::{herm_eig, herm_exp, kron, partial_trace, ComplexMatrix, Subsystem, C64};

pub const DEFAULT_ALPHA_POINTS: usize = 201;

const UNITARY_TOL: f64 = 1e-10;
const CHUNK: usize = 4096;

/// `points` equispaced values covering [0, 2π] inclusive.
pub fn alpha_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|k| TAU * k as f64 / (n - 1) as f64).collect(),
    }
}

fn check_unitary(u: &ComplexMatrix) -> Result<()> {
    if !u.is_square() {
        return Err(Error::DimensionMismatch {
            expected: u.rows(),
            found: u.cols(),
        });
    }
    let defect = (&u.adjoint().matmul(u) - &ComplexMatrix::identity(u.rows())).frobenius_norm();
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary { defect });
    }
    Ok(())
}

fn check_dims(m: &ComplexMatrix, dims: (usize, usize)) -> Result<()> {
    if m.rows() != dims.0 * dims.1 {
        return Err(Error::DimensionMismatch {
            expected: dims.0 * dims.1,
            found: m.rows(),
        });
    }
    Ok(())
}

/// Tr_F[U ρ_AE U†]: the state of the first output factor B.
pub fn apply_channel(u: &ComplexMatrix, rho_ae: &ComplexMatrix, dims: (usize, usize)) -> Result<ComplexMatrix> {
    check_unitary(u)?;
    check_dims(u, dims)?;
    check_dims(rho_ae, dims)?;
    let out = u.matmul(rho_ae).matmul(&u.adjoint());
    partial_trace(&out, dims, Subsystem::First)
}

/// K_ℓ = ⟨ℓ|_F U, each of shape dim B × dim AE.
pub fn kraus_ops(u: &ComplexMatrix, dims: (usize, usize)) -> Result<Vec<ComplexMatrix>> {
    check_unitary(u)?;
    check_dims(u, dims)?;
    let (db, df) = dims;
    Ok((0..df)
        .map(|l| ComplexMatrix::from_fn(db, db * df, |b, x| u[(b * df + l, x)]))
        .collect())
}

/// Evaluates J for many probes at one α, with U_α computed once.
#[derive(Clone, Debug)]
pub struct FixedAlpha {
    g: ComplexMatrix,
    u: ComplexMatrix,
    traced: Traced,
}

impl FixedAlpha {
    pub fn new(g: &GeneratorSpec, alpha: f64, traced: Traced) -> Result<Self> {
        Ok(Self {
            g: g.matrix().clone(),
            u: herm_exp(g.matrix(), alpha)?,
            traced,
        })
    }

    pub fn point(&self, amplitudes: &[C64]) -> Result<StateFamilyPoint> {
        if amplitudes.len() != self.u.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.u.rows(),
                found: amplitudes.len(),
            });
        }
        let psi = self.u.mul_vec(amplitudes);
        let g_psi = self.g.mul_vec(&psi);
        reduce_pure(&psi, &g_psi, (2, 2), self.traced)
    }

    pub fn value(&self, amplitudes: &[C64]) -> Result<f64> {
        qfi_default(&self.point(amplitudes)?)
    }
}

/// J_B(α) for a two-qubit probe.
pub fn jb_at(g: &GeneratorSpec, probe: &ProbeState, alpha: f64) -> Result<f64> {
    if probe.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: probe.dim(),
        });
    }
    FixedAlpha::new(g, alpha, Traced::F)?.value(probe.amplitudes())
}

/// Probe sets searched by [`optimize_jb`].
#[derive(Clone, Debug)]
pub enum Sampler {
    /// Two-qubit Hurwitz grid.
    Grid { n_theta: usize, n_phi: usize },
    Haar { count: usize },
    /// Eigenvectors of random anticommutant elements of G and of the centered G.
    Candidates { samples: usize },
    /// Products of single-qubit Hurwitz grids.
    Separable { n_theta: usize, n_phi: usize },
    Explicit(Vec<ProbeState>),
    /// Concatenation, searched in order.
    Combined(Vec<Sampler>),
}

impl Sampler {
    pub fn describe(&self) -> String {
        match self {
            Sampler::Grid { n_theta, n_phi } => format!("grid {n_theta}x{n_phi}"),
            Sampler::Haar { count } => format!("haar {count}"),
            Sampler::Candidates { samples } => format!("candidates {samples}"),
            Sampler::Separable { n_theta, n_phi } => format!("separable {n_theta}x{n_phi}"),
            Sampler::Explicit(v) => format!("explicit {}", v.len()),
            Sampler::Combined(v) => v.iter().map(|s| s.describe()).collect::<Vec<_>>().join(" + "),
        }
    }
}

/// Search bookkeeping carried into reports.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchMeta {
    pub sampler: String,
    pub seed: u64,
    pub candidate_count: usize,
    pub evaluated: usize,
}

/// Best sampled probe; `value` is a lower bound on the true maximum.
#[derive(Clone, Debug)]
pub struct Optimum {
    pub value: f64,
    pub probe: ProbeState,
    pub index: usize,
    pub meta: SearchMeta,
}

/// A concrete, indexable probe source.
enum Source {
    Grid(ProbeGrid),
    Separable(SeparableGrid),
    List(Vec<ProbeState>),
}

impl Source {
    fn len(&self) -> usize {
        match self {
            Source::Grid(g) => g.len(),
            Source::Separable(g) => g.len(),
            Source::List(v) => v.len(),
        }
    }

    fn amplitudes(&self, i: usize) -> std::borrow::Cow<'_, [C64]> {
        match self {
            Source::Grid(g) => g.amplitudes_at(i).into(),
            Source::Separable(g) => g.amplitudes_at(i).into(),
            Source::List(v) => v[i].amplitudes().into(),
        }
    }

    fn probe(&self, i: usize) -> ProbeState {
        match self {
            Source::Grid(g) => g.probe_at(i),
            Source::Separable(g) => g.probe_at(i),
            Source::List(v) => v[i].clone(),
        }
    }
}

/// Candidate probes from the anticommutants of G and of G shifted to a symmetric spectrum.
pub fn candidate_probes(g: &GeneratorSpec, samples: usize, seed: u64) -> Vec<ProbeState> {
    let mut out = Vec::new();
    for (k, gen) in [g.clone(), g.centered()].iter().enumerate() {
        let basis = anticommutant_basis(gen, DEFAULT_NULLSPACE_TOL);
        if basis.real_dimension == 0 {
            continue;
        }
        out.extend(
            probe_candidates(&basis, samples, seed.wrapping_add(k as u64))
                .into_iter()
                .map(|cd| cd.probe),
        );
    }
    out
}

fn build_sources(g: &GeneratorSpec, sampler: &Sampler, seed: u64, out: &mut Vec<Source>) -> Result<()> {
    match sampler {
        Sampler::Grid { n_theta, n_phi } => out.push(Source::Grid(ProbeGrid::new(2, *n_theta, *n_phi)?)),
        Sampler::Separable { n_theta, n_phi } => out.push(Source::Separable(SeparableGrid::new(*n_theta, *n_phi)?)),
        Sampler::Haar { count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            out.push(Source::List((0..*count).map(|_| haar_from_rng(2, &mut rng, seed)).collect()));
        }
        Sampler::Candidates { samples } => out.push(Source::List(candidate_probes(g, *samples, seed))),
        Sampler::Explicit(v) => {
            if let Some(p) = v.iter().find(|p| p.dim() != 4) {
                return Err(Error::DimensionMismatch {
                    expected: 4,
                    found: p.dim(),
                });
            }
            out.push(Source::List(v.clone()));
        }
        Sampler::Combined(list) => {
            for s in list {
                build_sources(g, s, seed, out)?;
            }
        }
    }
    Ok(())
}

/// First index attaining the maximum of `f` over 0..n, evaluated in parallel chunks
/// and reduced in enumeration order.
fn ordered_argmax<F>(n: usize, f: F) -> Result<Option<(usize, f64)>>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let partial: Vec<Result<Option<(usize, f64)>>> = (0..chunks)
        .into_par_iter()
        .map(|ch| {
            let mut best: Option<(usize, f64)> = None;
            for i in ch * CHUNK..((ch + 1) * CHUNK).min(n) {
                let v = f(i)?;
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
            Ok(best)
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for p in partial {
        if let Some((i, v)) = p? {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    Ok(best)
}

/// Maximizes J (bottleneck or full access) over the sampled probes at fixed α.
pub fn optimize_qfi(g: &GeneratorSpec, alpha: f64, traced: Traced, sampler: &Sampler, seed: u64) -> Result<Optimum> {
    let mut sources = Vec::new();
    build_sources(g, sampler, seed, &mut sources)?;
    let eval = FixedAlpha::new(g, alpha, traced)?;
    let mut best: Option<(usize, usize, f64)> = None;
    let mut total = 0;
    for (s, src) in sources.iter().enumerate() {
        let n = src.len();
        total += n;
        if let Some((i, v)) = ordered_argmax(n, |i| eval.value(&src.amplitudes(i)))? {
            if best.is_none_or(|(_, _, b)| v > b) {
                best = Some((s, i, v));
            }
        }
    }
    let (s, i, value) = best.ok_or(Error::EmptySampler)?;
    let index = sources[..s].iter().map(Source::len).sum::<usize>() + i;
    let candidate_count = sources
        .iter()
        .zip(flatten(sampler))
        .filter(|(_, k)| matches!(k, Sampler::Candidates { .. }))
        .map(|(src, _)| src.len())
        .sum();
    Ok(Optimum {
        value,
        probe: sources[s].probe(i),
        index,
        meta: SearchMeta {
            sampler: sampler.describe(),
            seed,
            candidate_count,
            evaluated: total,
        },
    })
}

fn flatten(s: &Sampler) -> Vec<&Sampler> {
    match s {
        Sampler::Combined(v) => v.iter().flat_map(flatten).collect(),
        other => vec![other],
    }
}

/// Maximizes J_B over the sampled probes at fixed α.
pub fn optimize_jb(g: &GeneratorSpec, alpha: f64, sampler: &Sampler, seed: u64) -> Result<Optimum> {
    optimize_qfi(g, alpha, Traced::F, sampler, seed)
}

/// J_B over an α grid for one probe, with the full-access ceiling and the gap.
#[derive(Clone, Debug)]
pub struct EstimationReport {
    pub generator: GeneratorSpec,
    pub alpha_grid: Vec<f64>,
    pub j_b: Vec<f64>,
    pub j_bf: f64,
    pub gap: Vec<f64>,
    /// Numerical rank of ρ_B at each α.
    pub rank: Vec<usize>,
    /// α points where the rank drops below its maximum over the grid.
    pub rank_change: Vec<bool>,
    pub best_probe: ProbeState,
    pub search_meta: Option<SearchMeta>,
}

/// Marks entries whose rank is below the maximum rank in the list.
pub fn rank_change_flags(rank: &[usize]) -> Vec<bool> {
    let max = rank.iter().copied().max().unwrap_or(0);
    rank.iter().map(|&r| r < max).collect()
}

fn numerical_rank(rho: &ComplexMatrix) -> Result<usize> {
    Ok(herm_eig(rho)?.values.iter().filter(|&&l| l > RANK_TOL).count())
}

pub fn estimation_report(
    g: &GeneratorSpec,
    probe: &ProbeState,
    alphas: &[f64],
    search_meta: Option<SearchMeta>,
) -> Result<EstimationReport> {
    if probe.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: probe.dim(),
        });
    }
    let rows: Vec<Result<(f64, usize)>> = alphas
        .par_iter()
        .map(|&a| {
            let pt = FixedAlpha::new(g, a, Traced::F)?.point(probe.amplitudes())?;
            Ok((qfi_default(&pt)?, numerical_rank(&pt.rho)?))
        })
        .collect();
    let mut j_b = Vec::with_capacity(alphas.len());
    let mut rank = Vec::with_capacity(alphas.len());
    for r in rows {
        let (j, k) = r?;
        j_b.push(j);
        rank.push(k);
    }
    let j_bf = max_qfi_full(g);
    Ok(EstimationReport {
        generator: g.clone(),
        alpha_grid: alphas.to_vec(),
        gap: j_b.iter().map(|j| j_bf - j).collect(),
        rank_change: rank_change_flags(&rank),
        j_b,
        j_bf,
        rank,
        best_probe: probe.clone(),
        search_meta,
    })
}

/// Γ = I⊗G + G⊗I on A₁E₁A₂E₂.
pub fn two_copy_generator(g: &GeneratorSpec) -> ComplexMatrix {
    let n = g.dim();
    let id = ComplexMatrix::identity(n);
    &kron(&id, g.matrix()) + &kron(g.matrix(), &id)
}

/// Reorders qubits: new qubit k is old qubit `order[k]` (qubit 0 is the most significant).
pub fn permute_qubits(v: &[C64], order: &[usize]) -> Vec<C64> {
    let n = order.len();
    assert_eq!(v.len(), 1 << n, "state length does not match qubit count");
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for (old, amp) in v.iter().enumerate() {
        let mut new = 0;
        for (k, &o) in order.iter().enumerate() {
            let bit = (old >> (n - 1 - o)) & 1;
            new |= bit << (n - 1 - k);
        }
        out[new] = *amp;
    }
    out
}

/// Permutation matrix P with P|x⟩ = |permute(x)⟩.
pub fn permutation_matrix(order: &[usize]) -> ComplexMatrix {
    let d = 1 << order.len();
    let mut p = ComplexMatrix::zeros(d, d);
    for x in 0..d {
        let mut e = vec![C64::new(0.0, 0.0); d];
        e[x] = C64::new(1.0, 0.0);
        let y = permute_qubits(&e, order).iter().position(|z| z.re == 1.0).expect("basis image");
        p[(y, x)] = C64::new(1.0, 0.0);
    }
    p
}

/// A₁E₁A₂E₂ → B₁B₂F₁F₂ after the unitary.
pub const TWO_COPY_ORDER: [usize; 4] = [0, 2, 1, 3];

/// ρ_{B₁B₂}(α) and its derivative for a two-copy probe.
pub fn two_copy_point(g: &GeneratorSpec, probe4: &ProbeState, alpha: f64) -> Result<StateFamilyPoint> {
    if probe4.dim() != 16 || g.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 16,
            found: probe4.dim(),
        });
    }
    let u1 = herm_exp(g.matrix(), alpha)?;
    let u = kron(&u1, &u1);
    let gamma = two_copy_generator(g);
    let psi = u.mul_vec(probe4.amplitudes());
    let g_psi = gamma.mul_vec(&psi);
    let psi = permute_qubits(&psi, &TWO_COPY_ORDER);
    let g_psi = permute_qubits(&g_psi, &TWO_COPY_ORDER);
    reduce_pure(&psi, &g_psi, (4, 4), Traced::F)
}

pub fn two_copy_jb(g: &GeneratorSpec, probe4: &ProbeState, alpha: f64) -> Result<f64> {
    qfi_default(&two_copy_point(g, probe4, alpha)?)
}

/// Two-copy J over an α grid with rank-change flags.
pub fn two_copy_series(g: &GeneratorSpec, probe4: &ProbeState, alphas: &[f64]) -> Result<(Vec<f64>, Vec<bool>)> {
    let rows: Vec<Result<(f64, usize)>> = alphas
        .par_iter()
        .map(|&a| {
            let pt = two_copy_point(g, probe4, a)?;
            Ok((qfi_default(&pt)?, numerical_rank(&pt.rho)?))
        })
        .collect();
    let mut j = Vec::new();
    let mut rank = Vec::new();
    for r in rows {
        let (v, k) = r?;
        j.push(v);
        rank.push(k);
    }
    Ok((j, rank_change_flags(&rank)))
}

/// (λ_max(Γ) − λ_min(Γ))².
pub fn jbf_two_copy(g: &GeneratorSpec) -> f64 {
    herm_eig(&two_copy_generator(g))
        .expect("Γ is Hermitian")
        .spread()
        .powi(2)
}

/// One cell of the Δ(t₊, α) contour.
#[derive(Clone, Debug, PartialEq)]
pub struct ContourCell {
    pub t_plus: f64,
    pub alpha: f64,
    /// J̄_BF minus the pipeline J_B.
    pub delta: f64,
    /// J̄_BF minus the closed form, absent where the closed form is singular.
    pub delta_closed: Option<f64>,
    pub rank_change: bool,
}

/// Δ(t₊, α) = J̄_BF(t₁, t₂) − J_B(α) for the case-iii probe at angle θ, with the split
/// t₁ = t₂ = t₊/2.
pub fn contour_gap(
    theta: f64,
    t_plus: &[f64],
    alphas: &[f64],
    sign: Sign,
    family: CaseIiiFamily,
) -> Result<Vec<ContourCell>> {
    if !theta.is_finite() {
        return Err(invalid("theta", "must be finite"));
    }
    let probe = named_probe(&NamedProbe::CaseIII { theta, sign, family })?;
    let rows: Vec<Result<Vec<ContourCell>>> = t_plus
        .par_iter()
        .map(|&tp| {
            let (t1, t2) = (tp / 2.0, tp / 2.0);
            let g = case_study(t1, t2);
            let a = case_iii_a(t1, t2, family);
            let jbf = jbf_case(t1, t2);
            let mut ranks = Vec::with_capacity(alphas.len());
            let mut cells = Vec::with_capacity(alphas.len());
            for &al in alphas {
                let pt = FixedAlpha::new(&g, al, Traced::F)?.point(probe.amplitudes())?;
                ranks.push(numerical_rank(&pt.rho)?);
                let closed = match jb_case_iii(a, theta, al, sign) {
                    Ok(v) => Some(jbf - v),
                    Err(Error::Singular(_)) => None,
                    Err(e) => return Err(e),
                };
                cells.push(ContourCell {
                    t_plus: tp,
                    alpha: al,
                    delta: jbf - qfi_default(&pt)?,
                    delta_closed: closed,
                    rank_change: false,
                });
            }
            for (cell, flag) in cells.iter_mut().zip(rank_change_flags(&ranks)) {
                cell.rank_change = flag;
            }
            Ok(cells)
        })
        .collect();
    let mut out = Vec::with_capacity(t_plus.len() * alphas.len());
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// Strict interior local maxima of a sampled curve, rising by more than `tol` on both sides.
pub fn count_peaks(values: &[f64], tol: f64) -> usize {
    let mut peaks = 0;
    let mut i = 1;
    while i + 1 < values.len() {
        // walk over plateaus so a flat top counts once
        let mut j = i;
        while j + 1 < values.len() && (values[j + 1] - values[i]).abs() <= tol {
            j += 1;
        }
        if j + 1 < values.len() && values[i] - values[i - 1] > tol && values[i] - values[j + 1] > tol {
            peaks += 1;
        }
        i = j + 1;
    }
    peaks
}
