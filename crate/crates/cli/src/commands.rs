//! Subcommand implementations. Each returns a [`Table`] and a violation count.

use std::f64::consts::{FRAC_PI_4, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use bottleneck_core::bottleneck::{
    contour_gap, estimation_report, jbf_two_copy, optimize_jb, optimize_qfi, two_copy_series, Sampler,
};
use bottleneck_core::continuity::{
    corollary1_bound, liouvillian_bound, random_full_rank_point, random_generator, theorem1_best, Superoperator,
    DEFAULT_EPS, DEFAULT_NORM_SAMPLES,
};
use bottleneck_core::generators::{
    appendix_b_generator, case_iii_a, jb_case_iii, jb_tensor_max, CaseIiiFamily, GeneratorSpec, Sign,
};
use bottleneck_core::probes::{extreme_superpositions, haar_probe, ProbeState, DEFAULT_CANDIDATE_SAMPLES};
use bottleneck_core::qfi::{max_qfi_full, Traced};
use bottleneck_core::qmat::{c, pauli, ComplexMatrix};

use crate::config::{default_t_plus, CommandKind, FamilyConfig, GeneratorConfig, ProbeConfig, Settings};
use crate::error::CliError;
use crate::output::{Cell, Table};

/// Margin below which a bound counts as violated.
pub const MARGIN_TOL: f64 = -1e-9;
pub const APPENDIX_B_TOL: f64 = 1e-6;
pub const CONJECTURE_THRESHOLD: f64 = 0.99;
pub const DEFAULT_CONJECTURE_GRID: (usize, usize) = (4, 8);
pub const DEFAULT_OPTIMIZE_GRID: (usize, usize) = (4, 8);
pub const DEFAULT_OPTIMIZE_ALPHA: f64 = 1.0;
pub const CERTIFICATE_PHASES: usize = 360;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub table: Table,
    pub violations: usize,
    pub summary: Vec<String>,
}

impl Outcome {
    fn clean(table: Table) -> Self {
        Self {
            table,
            violations: 0,
            summary: Vec::new(),
        }
    }
}

pub fn run(kind: CommandKind, s: &Settings) -> Result<Outcome, CliError> {
    match kind {
        CommandKind::Qfi => cmd_qfi(s),
        CommandKind::Contour => cmd_contour(s),
        CommandKind::Optimize => cmd_optimize(s),
        CommandKind::TwoCopy => cmd_two_copy(s),
        CommandKind::Continuity => cmd_continuity(s),
        CommandKind::Conjecture => cmd_conjecture(s),
        CommandKind::AppendixB => cmd_appendix_b(s),
    }
}

fn require_dim(p: &ProbeState, dim: usize) -> Result<(), CliError> {
    if p.dim() != dim {
        return Err(CliError::Config(format!(
            "probe: expected {dim} amplitudes, found {}",
            p.dim()
        )));
    }
    Ok(())
}

/// True when unspecified or equal to the value implied by the generator.
fn consistent<T: PartialEq>(given: &Option<T>, implied: T) -> bool {
    given.as_ref().is_none_or(|g| *g == implied)
}

fn named_family(f: &Option<FamilyConfig>) -> CaseIiiFamily {
    f.map(CaseIiiFamily::from).unwrap_or(CaseIiiFamily::Even)
}

/// Closed-form single-copy J_B for generator/probe pairs that have one.
pub fn closed_form_jb(generator: &GeneratorConfig, probe: &ProbeConfig, alpha: f64) -> Option<f64> {
    match (generator, probe) {
        (GeneratorConfig::Case { t1, t2 }, ProbeConfig::Named { label, theta, sign, family, .. }) if label == "case_iii" => {
            let a = case_iii_a(*t1, *t2, named_family(family));
            jb_case_iii(a, theta.unwrap_or(0.0), alpha, sign.map(Sign::from).unwrap_or(Sign::Plus)).ok()
        }
        (GeneratorConfig::Tensor { m, n, t2, .. }, ProbeConfig::Named { label, t2_nonnegative, m: pm, n: pn, .. })
            if label == "eq29"
                && consistent(t2_nonnegative, *t2 >= 0.0)
                && consistent(pm, *m)
                && consistent(pn, *n) =>
        {
            Some(jb_tensor_max(*t2).0)
        }
        _ => None,
    }
}

/// Closed-form two-copy J for the entangled two-copy probes that have one.
pub fn closed_form_two_copy(generator: &GeneratorConfig, probe: &ProbeConfig, alpha: f64) -> Option<f64> {
    match (generator, probe) {
        (GeneratorConfig::Case { t1, t2 }, ProbeConfig::Named { label, family, .. }) if label == "upsilon_case_iii" => {
            let a = case_iii_a(*t1, *t2, named_family(family));
            jb_case_iii(a, FRAC_PI_4, alpha, Sign::Plus).ok().map(|j| 4.0 * j)
        }
        (GeneratorConfig::Tensor { m, n, t2, .. }, ProbeConfig::Named { label, t2_nonnegative, m: pm, n: pn, .. })
            if label == "upsilon_tensor"
                && consistent(t2_nonnegative, *t2 >= 0.0)
                && consistent(pm, *m)
                && consistent(pn, *n) =>
        {
            Some(16.0 * (1.0 + t2.abs()).powi(2))
        }
        _ => None,
    }
}

pub fn cmd_qfi(s: &Settings) -> Result<Outcome, CliError> {
    let g = s.generator()?;
    let probe = s.probe()?;
    require_dim(&probe, 4)?;
    let alphas = s.alphas();
    let report = estimation_report(&g, &probe, &alphas, None)?;
    let gen_cfg = s.generator_config()?;
    let probe_cfg = s.config.probe.as_ref().expect("probe checked above");
    let mut t = Table::new(["alpha", "j_b", "j_bf", "gap", "j_b_closed", "rank_change"]);
    for (k, &a) in alphas.iter().enumerate() {
        t.push(vec![
            a.into(),
            report.j_b[k].into(),
            report.j_bf.into(),
            report.gap[k].into(),
            closed_form_jb(gen_cfg, probe_cfg, a).into(),
            report.rank_change[k].into(),
        ]);
    }
    Ok(Outcome::clean(t))
}

pub const CONTOUR_COLUMNS: [&str; 6] = ["t_plus", "alpha", "delta", "delta_closed", "singular", "rank_change"];

pub fn cmd_contour(s: &Settings) -> Result<Outcome, CliError> {
    let t_plus = s.config.t_plus.as_ref().map(|r| r.values()).unwrap_or_else(default_t_plus);
    let cells = contour_gap(s.theta(), &t_plus, &s.alphas(), s.sign(), s.family())?;
    let mut t = Table::new(CONTOUR_COLUMNS);
    for cell in cells {
        t.push(vec![
            cell.t_plus.into(),
            cell.alpha.into(),
            cell.delta.into(),
            cell.delta_closed.into(),
            cell.delta_closed.is_none().into(),
            cell.rank_change.into(),
        ]);
    }
    Ok(Outcome::clean(t))
}

pub fn cmd_optimize(s: &Settings) -> Result<Outcome, CliError> {
    let g = s.generator()?;
    let (nt, np) = s.grid.unwrap_or(DEFAULT_OPTIMIZE_GRID);
    let samples = s.config.samples.unwrap_or(DEFAULT_CANDIDATE_SAMPLES);
    let sampler = Sampler::Combined(vec![
        Sampler::Candidates { samples },
        Sampler::Grid { n_theta: nt, n_phi: np },
    ]);
    let traced = s.traced();
    let alphas = match &s.config.alpha {
        Some(a) => a.values(),
        None => vec![DEFAULT_OPTIMIZE_ALPHA],
    };
    let mut cols: Vec<String> = ["alpha", "j_best", "j_bf", "gap", "index", "evaluated", "sampler", "seed"]
        .iter()
        .map(|x| x.to_string())
        .collect();
    for k in 0..4 {
        cols.push(format!("psi{k}_re"));
        cols.push(format!("psi{k}_im"));
    }
    let mut t = Table::new(cols);
    let j_bf = max_qfi_full(&g);
    for a in alphas {
        let best = optimize_qfi(&g, a, traced, &sampler, s.seed)?;
        let mut row: Vec<Cell> = vec![
            a.into(),
            best.value.into(),
            j_bf.into(),
            (j_bf - best.value).into(),
            best.index.into(),
            best.meta.evaluated.into(),
            best.meta.sampler.clone().into(),
            Cell::Int(s.seed),
        ];
        for z in best.probe.amplitudes() {
            row.push(z.re.into());
            row.push(z.im.into());
        }
        t.push(row);
    }
    Ok(Outcome::clean(t))
}

pub fn cmd_two_copy(s: &Settings) -> Result<Outcome, CliError> {
    let g = s.generator()?;
    let probe = s.probe()?;
    require_dim(&probe, 16)?;
    let alphas = s.alphas();
    let (j, flags) = two_copy_series(&g, &probe, &alphas)?;
    let jbf = jbf_two_copy(&g);
    let gen_cfg = s.generator_config()?;
    let probe_cfg = s.config.probe.as_ref().expect("probe checked above");
    let mut t = Table::new(["alpha", "j_two_copy", "jbf_two_copy", "j_closed", "rank_change"]);
    for (k, &a) in alphas.iter().enumerate() {
        t.push(vec![
            a.into(),
            j[k].into(),
            jbf.into(),
            closed_form_two_copy(gen_cfg, probe_cfg, a).into(),
            flags[k].into(),
        ]);
    }
    Ok(Outcome::clean(t))
}

/// One evaluated bound from the continuity harness.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityRow {
    pub kind: &'static str,
    pub trial: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub rhs_as_stated: Option<f64>,
}

/// State pairs, generator pairs, a shrinking generator perturbation and the
/// Liouvillian example, all drawn from one seeded stream.
pub fn run_continuity(state_pairs: usize, generator_pairs: usize, seed: u64, eps: f64) -> Result<Vec<ContinuityRow>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for trial in 0..state_pairs {
        let p1 = random_full_rank_point(2, &mut rng);
        let p2 = random_full_rank_point(2, &mut rng);
        let r = theorem1_best(&p1, &p2)?;
        rows.push(ContinuityRow {
            kind: "theorem1",
            trial,
            lhs: r.lhs,
            rhs: r.rhs,
            margin: r.margin,
            rhs_as_stated: r.rhs_as_stated,
        });
    }
    for trial in 0..generator_pairs {
        let g1 = random_generator(&mut rng);
        let g2 = random_generator(&mut rng);
        let probe = haar_probe(2, rng.random());
        let alpha = rng.random::<f64>() * TAU;
        let r = corollary1_bound(&g1, &g2, &probe, alpha, eps, Traced::F)?;
        rows.push(ContinuityRow {
            kind: "corollary1",
            trial,
            lhs: r.lhs,
            rhs: r.rhs,
            margin: r.margin,
            rhs_as_stated: None,
        });
    }
    let g1 = random_generator(&mut rng);
    let h = random_generator(&mut rng);
    let probe = haar_probe(2, rng.random());
    let alpha = rng.random::<f64>() * TAU;
    for k in 1..=6 {
        let step = 10f64.powi(-k);
        let g2 = GeneratorSpec::from_matrix(g1.matrix() + &h.matrix().scale_real(step))?;
        let r = corollary1_bound(&g1, &g2, &probe, alpha, eps, Traced::F)?;
        rows.push(ContinuityRow {
            kind: "shrinking",
            trial: k as usize,
            lhs: r.lhs,
            rhs: r.rhs,
            margin: r.margin,
            rhs_as_stated: None,
        });
    }
    let plus = ComplexMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5])?;
    let lowering = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0])?;
    let l1 = Superoperator::hamiltonian(&pauli(3));
    let l2 = &l1 + &Superoperator::dissipator(&lowering).scale(0.1);
    let r = liouvillian_bound(&l1, &l2, &plus, 0.7, eps, DEFAULT_NORM_SAMPLES, seed)?;
    rows.push(ContinuityRow {
        kind: "liouvillian",
        trial: 0,
        lhs: r.lhs,
        rhs: r.rhs,
        margin: r.margin,
        rhs_as_stated: None,
    });
    Ok(rows)
}

/// Margin violations plus any increase of |J₁ − J₂| along the shrinking path.
pub fn continuity_violations(rows: &[ContinuityRow]) -> usize {
    let margins = rows.iter().filter(|r| r.margin < MARGIN_TOL).count();
    let shrinking: Vec<f64> = rows.iter().filter(|r| r.kind == "shrinking").map(|r| r.lhs).collect();
    let increases = shrinking.windows(2).filter(|w| w[1] > w[0]).count();
    margins + increases
}

pub fn cmd_continuity(s: &Settings) -> Result<Outcome, CliError> {
    let trials = s.trials.unwrap_or(1000);
    let eps = s.config.eps.unwrap_or(DEFAULT_EPS);
    let rows = run_continuity(trials, trials / 2, s.seed, eps)?;
    let mut t = Table::new(["kind", "trial", "lhs", "rhs", "margin", "rhs_as_stated"]);
    for r in &rows {
        t.push(vec![
            r.kind.into(),
            r.trial.into(),
            r.lhs.into(),
            r.rhs.into(),
            r.margin.into(),
            r.rhs_as_stated.into(),
        ]);
    }
    let violations = continuity_violations(&rows);
    let stated = rows
        .iter()
        .filter(|r| r.rhs_as_stated.is_some_and(|v| v < r.lhs))
        .count();
    Ok(Outcome {
        table: t,
        violations,
        summary: vec![
            format!("{} bounds checked, {violations} violations", rows.len()),
            format!("{stated} state pairs exceed the undoubled state-level bound"),
        ],
    })
}

/// Pauli coefficients N(0,1) with the I⊗σⱼ row set to zero.
pub fn conjecture_generator(rng: &mut ChaCha8Rng) -> GeneratorSpec {
    let mut cf = [[0.0; 4]; 4];
    for row in cf.iter_mut().skip(1) {
        for x in row.iter_mut() {
            *x = StandardNormal.sample(&mut *rng);
        }
    }
    GeneratorSpec::pauli(cf)
}

/// First 16 hex digits of SHA-256 over the little-endian Pauli coefficients.
pub fn generator_hash(g: &GeneratorSpec) -> String {
    let mut h = Sha256::new();
    for row in g.coefficients() {
        for x in row {
            h.update(x.to_le_bytes());
        }
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjectureTrial {
    pub trial: usize,
    pub hash: String,
    pub j_best: f64,
    pub j_bf: f64,
    /// Sampled J_B over (λmax − λmin)².
    pub fraction: f64,
    /// Best J_B over (|λmax⟩ + e^{iφ}|λmin⟩)/√2, a dense phase scan, over (λmax − λmin)².
    pub family_fraction: f64,
    pub pass: bool,
}

pub fn run_conjecture(
    trials: usize,
    seed: u64,
    grid: (usize, usize),
    samples: usize,
    alpha: f64,
) -> Result<Vec<ConjectureTrial>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = Sampler::Combined(vec![
        Sampler::Candidates { samples },
        Sampler::Grid { n_theta: grid.0, n_phi: grid.1 },
    ]);
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let g = conjecture_generator(&mut rng);
        let j_bf = max_qfi_full(&g);
        let best = optimize_jb(&g, alpha, &sampler, seed.wrapping_add(trial as u64))?;
        let cert = optimize_jb(&g, alpha, &Sampler::Explicit(extreme_superpositions(&g, CERTIFICATE_PHASES)), 0)?;
        let fraction = best.value / j_bf;
        out.push(ConjectureTrial {
            trial,
            hash: generator_hash(&g),
            j_best: best.value,
            j_bf,
            fraction,
            family_fraction: cert.value / j_bf,
            pass: fraction >= CONJECTURE_THRESHOLD,
        });
    }
    Ok(out)
}

pub fn cmd_conjecture(s: &Settings) -> Result<Outcome, CliError> {
    let trials = s.trials.unwrap_or(200);
    let alpha = match &s.config.alpha {
        Some(a) => *a
            .values()
            .first()
            .ok_or_else(|| CliError::Config("alpha: empty".into()))?,
        None => DEFAULT_OPTIMIZE_ALPHA,
    };
    let rows = run_conjecture(
        trials,
        s.seed,
        s.grid.unwrap_or(DEFAULT_CONJECTURE_GRID),
        s.config.samples.unwrap_or(DEFAULT_CANDIDATE_SAMPLES),
        alpha,
    )?;
    let mut t = Table::new(["trial", "generator_hash", "j_best", "j_bf", "fraction", "family_fraction", "pass"]);
    for r in &rows {
        t.push(vec![
            r.trial.into(),
            r.hash.clone().into(),
            r.j_best.into(),
            r.j_bf.into(),
            r.fraction.into(),
            r.family_fraction.into(),
            r.pass.into(),
        ]);
    }
    let failures: Vec<&ConjectureTrial> = rows.iter().filter(|r| !r.pass).collect();
    let mut summary = vec![format!("{} of {} trials reach {CONJECTURE_THRESHOLD}", rows.len() - failures.len(), rows.len())];
    for f in &failures {
        summary.push(format!(
            "failed trial {} generator {} fraction {:.4} family {:.4}",
            f.trial, f.hash, f.fraction, f.family_fraction
        ));
    }
    Ok(Outcome {
        table: t,
        violations: failures.len(),
        summary,
    })
}

/// An input state with its J_B, valid wherever it is the optimum.
pub struct AppendixBInput {
    pub amplitudes: [f64; 4],
    pub target: fn(f64, f64) -> f64,
}

pub fn appendix_b_inputs() -> [AppendixBInput; 6] {
    [
        AppendixBInput { amplitudes: [0.5, 0.5, -0.5, 0.5], target: |_, t33| 4.0 * (1.0 + t33).powi(2) },
        AppendixBInput { amplitudes: [0.5, 0.5, 0.5, -0.5], target: |_, t33| 4.0 * (1.0 - t33).powi(2) },
        AppendixBInput { amplitudes: [0.5, 0.5, -0.5, -0.5], target: |t22, t33| 4.0 * (t22 + t33).powi(2) },
        AppendixBInput { amplitudes: [0.5, 0.5, 0.5, 0.5], target: |t22, t33| 4.0 * (t22 - t33).powi(2) },
        AppendixBInput { amplitudes: [0.0, 1.0, 0.0, 0.0], target: |t22, _| 4.0 * (1.0 + t22).powi(2) },
        AppendixBInput { amplitudes: [1.0, 0.0, 0.0, 0.0], target: |t22, _| 4.0 * (1.0 - t22).powi(2) },
    ]
}

pub const APPENDIX_B_PAIRS: [(f64, f64); 3] = [(0.5, 0.3), (2.0, 2.0), (1.0, -1.0)];

#[derive(Clone, Debug, PartialEq)]
pub struct AppendixBCheck {
    pub t22: f64,
    pub t33: f64,
    pub row: usize,
    pub target: f64,
    pub j_bf: f64,
    pub j_min: f64,
    pub j_max: f64,
    pub max_error: f64,
    pub skipped: usize,
    pub pass: bool,
}

/// J_B of each listed input over the α grid, skipping rank-change points.
pub fn check_appendix_b(t22: f64, t33: f64, alphas: &[f64]) -> Result<Vec<AppendixBCheck>, CliError> {
    let g = appendix_b_generator(t22, t33);
    let mut out = Vec::new();
    for (k, input) in appendix_b_inputs().iter().enumerate() {
        let probe = ProbeState::from_amplitudes(input.amplitudes.iter().map(|&x| c(x, 0.0)).collect())?;
        let report = estimation_report(&g, &probe, alphas, None)?;
        let target = (input.target)(t22, t33);
        let kept: Vec<f64> = report
            .j_b
            .iter()
            .zip(&report.rank_change)
            .filter(|(_, &f)| !f)
            .map(|(j, _)| *j)
            .collect();
        let max_error = kept.iter().map(|j| (j - target).abs()).fold(0.0, f64::max);
        out.push(AppendixBCheck {
            t22,
            t33,
            row: k + 1,
            target,
            j_bf: report.j_bf,
            j_min: kept.iter().copied().fold(f64::INFINITY, f64::min),
            j_max: kept.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            max_error,
            skipped: alphas.len() - kept.len(),
            pass: !kept.is_empty() && max_error <= APPENDIX_B_TOL,
        });
    }
    Ok(out)
}

pub fn cmd_appendix_b(s: &Settings) -> Result<Outcome, CliError> {
    let pairs = match &s.config.generator {
        Some(GeneratorConfig::AppendixB { t22, t33 }) => vec![(*t22, *t33)],
        Some(_) => return Err(CliError::Config("generator: appendix-b expects type \"appendix-b\"".into())),
        None => APPENDIX_B_PAIRS.to_vec(),
    };
    let alphas = s.alphas();
    let mut t = Table::new(["t22", "t33", "row", "target", "j_bf", "j_b_min", "j_b_max", "max_error", "skipped", "pass"]);
    let mut violations = 0;
    for (t22, t33) in pairs {
        for r in check_appendix_b(t22, t33, &alphas)? {
            violations += usize::from(!r.pass);
            t.push(vec![
                r.t22.into(),
                r.t33.into(),
                r.row.into(),
                r.target.into(),
                r.j_bf.into(),
                r.j_min.into(),
                r.j_max.into(),
                r.max_error.into(),
                r.skipped.into(),
                r.pass.into(),
            ]);
        }
    }
    Ok(Outcome {
        summary: vec![format!("{} rows, {violations} failed", t.rows.len())],
        table: t,
        violations,
    })
}
