//! JSON experiment configuration and its conversion into core types.

use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;

use serde::Deserialize;

use bottleneck_core::bottleneck::{alpha_grid, DEFAULT_ALPHA_POINTS};
use bottleneck_core::generators::{appendix_b_generator, case_study, make_tensor, CaseIiiFamily, GeneratorSpec, Sign};
use bottleneck_core::probes::{hurwitz_state, named_probe_by_label, NamedParams, ProbeState};
use bottleneck_core::qfi::Traced;
use bottleneck_core::qmat::c;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Qfi,
    Contour,
    Optimize,
    TwoCopy,
    Continuity,
    Conjecture,
    AppendixB,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum GeneratorConfig {
    #[serde(rename = "pauli")]
    Pauli { c: [[f64; 4]; 4] },
    #[serde(rename = "tensor")]
    Tensor { m: [f64; 3], t1: f64, n: [f64; 3], t2: f64 },
    #[serde(rename = "case")]
    Case { t1: f64, t2: f64 },
    #[serde(rename = "appendix-b")]
    AppendixB { t22: f64, t33: f64 },
}

impl GeneratorConfig {
    pub fn build(&self) -> Result<GeneratorSpec, CliError> {
        Ok(match self {
            GeneratorConfig::Pauli { c } => GeneratorSpec::pauli(*c),
            GeneratorConfig::Tensor { m, t1, n, t2 } => make_tensor(*m, *t1, *n, *t2)?,
            GeneratorConfig::Case { t1, t2 } => case_study(*t1, *t2),
            GeneratorConfig::AppendixB { t22, t33 } => appendix_b_generator(*t22, *t33),
        })
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
pub enum SignConfig {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl From<SignConfig> for Sign {
    fn from(s: SignConfig) -> Sign {
        match s {
            SignConfig::Plus => Sign::Plus,
            SignConfig::Minus => Sign::Minus,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum FamilyConfig {
    Even,
    Odd,
}

impl From<FamilyConfig> for CaseIiiFamily {
    fn from(f: FamilyConfig) -> CaseIiiFamily {
        match f {
            FamilyConfig::Even => CaseIiiFamily::Even,
            FamilyConfig::Odd => CaseIiiFamily::Odd,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum ProbeConfig {
    #[serde(rename = "hurwitz")]
    Hurwitz { theta: Vec<f64>, phi: Vec<f64> },
    #[serde(rename = "amplitudes")]
    Amplitudes {
        re: Vec<f64>,
        #[serde(default)]
        im: Option<Vec<f64>>,
    },
    #[serde(rename = "named")]
    Named {
        label: String,
        #[serde(default)]
        phi: Option<f64>,
        #[serde(default)]
        theta: Option<f64>,
        #[serde(default)]
        sign: Option<SignConfig>,
        #[serde(default)]
        sign_e: Option<SignConfig>,
        #[serde(default)]
        family: Option<FamilyConfig>,
        #[serde(default)]
        t2_nonnegative: Option<bool>,
        #[serde(default)]
        m: Option<[f64; 3]>,
        #[serde(default)]
        n: Option<[f64; 3]>,
    },
}

impl ProbeConfig {
    /// Builds the probe. Tensor-generator directions and the sign of t₂ fill in
    /// unspecified eq29/upsilon_tensor parameters.
    pub fn build(&self, generator: Option<&GeneratorConfig>) -> Result<ProbeState, CliError> {
        match self {
            ProbeConfig::Hurwitz { theta, phi } => {
                let n = (theta.len() + 1).trailing_zeros() as usize;
                if theta.len() + 1 != 1 << n || n == 0 {
                    return Err(CliError::Config(format!(
                        "probe.theta: length {} is not 2^N - 1",
                        theta.len()
                    )));
                }
                Ok(hurwitz_state(theta, phi, n)?)
            }
            ProbeConfig::Amplitudes { re, im } => {
                let im = im.clone().unwrap_or_else(|| vec![0.0; re.len()]);
                if im.len() != re.len() {
                    return Err(CliError::Config(format!(
                        "probe.im: length {} differs from probe.re length {}",
                        im.len(),
                        re.len()
                    )));
                }
                if !re.len().is_power_of_two() || re.len() < 2 {
                    return Err(CliError::Config(format!("probe.re: length {} is not a power of two", re.len())));
                }
                let amps = re.iter().zip(&im).map(|(&r, &i)| c(r, i)).collect();
                Ok(ProbeState::from_amplitudes(amps)?)
            }
            ProbeConfig::Named { label, phi, theta, sign, sign_e, family, t2_nonnegative, m, n } => {
                let mut p = NamedParams::default();
                if let Some(GeneratorConfig::Tensor { m, n, t2, .. }) = generator {
                    p.m_hat = *m;
                    p.n_hat = *n;
                    p.t2_nonnegative = *t2 >= 0.0;
                }
                p.phi = phi.unwrap_or(p.phi);
                p.theta = theta.unwrap_or(p.theta);
                p.sign = sign.map(Sign::from).unwrap_or(p.sign);
                p.sign_e = sign_e.map(Sign::from).unwrap_or(p.sign_e);
                p.family = family.map(CaseIiiFamily::from).unwrap_or(p.family);
                p.t2_nonnegative = t2_nonnegative.unwrap_or(p.t2_nonnegative);
                p.m_hat = m.unwrap_or(p.m_hat);
                p.n_hat = n.unwrap_or(p.n_hat);
                Ok(named_probe_by_label(label, &p)?)
            }
        }
    }

    pub fn label(&self) -> Option<&str> {
        match self {
            ProbeConfig::Named { label, .. } => Some(label),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl RangeConfig {
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|k| self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum AlphaConfig {
    Value(f64),
    List(Vec<f64>),
    Range(RangeConfig),
}

impl AlphaConfig {
    pub fn values(&self) -> Vec<f64> {
        match self {
            AlphaConfig::Value(a) => vec![*a],
            AlphaConfig::List(v) => v.clone(),
            AlphaConfig::Range(r) => r.values(),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
pub enum TracedConfig {
    #[serde(rename = "F")]
    F,
    #[serde(rename = "none")]
    None,
}

/// One experiment. Every field is optional; command-line flags override it.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<CommandKind>,
    pub generator: Option<GeneratorConfig>,
    pub probe: Option<ProbeConfig>,
    pub alpha: Option<AlphaConfig>,
    pub alpha_points: Option<usize>,
    pub grid: Option<String>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub trials: Option<usize>,
    pub samples: Option<usize>,
    pub theta: Option<f64>,
    pub t_plus: Option<RangeConfig>,
    pub sign: Option<SignConfig>,
    pub family: Option<FamilyConfig>,
    pub eps: Option<f64>,
    pub traced: Option<TracedConfig>,
}

/// `<nθ>x<nφ>`
pub fn parse_grid(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("grid: expected <n_theta>x<n_phi>, got {s:?}"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let nt: usize = a.trim().parse().map_err(|_| bad())?;
    let np: usize = b.trim().parse().map_err(|_| bad())?;
    if nt == 0 || np == 0 {
        return Err(bad());
    }
    Ok((nt, np))
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
}

/// Configuration with flag overrides applied.
#[derive(Clone, Debug)]
pub struct Settings {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub format: Format,
    pub alpha_points: usize,
    pub grid: Option<(usize, usize)>,
    pub trials: Option<usize>,
    pub output: Option<PathBuf>,
}

/// Flag values that take precedence over the config document.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub alpha_points: Option<usize>,
    pub grid: Option<String>,
    pub trials: Option<usize>,
    pub output: Option<PathBuf>,
}

impl Settings {
    pub fn resolve(config: ExperimentConfig, flags: Overrides) -> Result<Self, CliError> {
        let grid = match flags.grid.as_deref().or(config.grid.as_deref()) {
            Some(s) => Some(parse_grid(s)?),
            None => None,
        };
        let alpha_points = flags.alpha_points.or(config.alpha_points).unwrap_or(DEFAULT_ALPHA_POINTS);
        if alpha_points == 0 {
            return Err(CliError::Config("alpha_points: must be positive".into()));
        }
        Ok(Self {
            seed: flags.seed.or(config.seed).unwrap_or(0),
            format: flags.format.or(config.format).unwrap_or_default(),
            trials: flags.trials.or(config.trials),
            output: flags.output.or_else(|| config.output.clone()),
            alpha_points,
            grid,
            config,
        })
    }

    /// Explicit α values from the config, or the default grid over [0, 2π].
    pub fn alphas(&self) -> Vec<f64> {
        match &self.config.alpha {
            Some(a) => a.values(),
            None => alpha_grid(self.alpha_points),
        }
    }

    pub fn generator_config(&self) -> Result<&GeneratorConfig, CliError> {
        self.config
            .generator
            .as_ref()
            .ok_or_else(|| CliError::Config("generator: missing".into()))
    }

    pub fn generator(&self) -> Result<GeneratorSpec, CliError> {
        self.generator_config()?.build()
    }

    pub fn probe(&self) -> Result<ProbeState, CliError> {
        self.config
            .probe
            .as_ref()
            .ok_or_else(|| CliError::Config("probe: missing".into()))?
            .build(self.config.generator.as_ref())
    }

    pub fn theta(&self) -> f64 {
        self.config.theta.unwrap_or(FRAC_PI_4)
    }

    pub fn sign(&self) -> Sign {
        self.config.sign.map(Sign::from).unwrap_or(Sign::Plus)
    }

    pub fn family(&self) -> CaseIiiFamily {
        self.config.family.map(CaseIiiFamily::from).unwrap_or(CaseIiiFamily::Even)
    }

    pub fn traced(&self) -> Traced {
        match self.config.traced {
            Some(TracedConfig::None) => Traced::None,
            _ => Traced::F,
        }
    }
}

/// t₊ from −3 to 3 in steps of 1/4.
pub fn default_t_plus() -> Vec<f64> {
    (0..25).map(|k| -3.0 + 0.25 * k as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_generators_and_probes() {
        let cfg = parse_config(
            r#"{"generator":{"type":"tensor","m":[1,0,0],"t1":0.3,"n":[0,0,1],"t2":0.8},
                "probe":{"type":"named","label":"eq29","phi":0.5},
                "alpha":{"start":0,"stop":1,"points":3}}"#,
        )
        .unwrap();
        assert!(matches!(cfg.generator, Some(GeneratorConfig::Tensor { t2, .. }) if t2 == 0.8));
        assert_eq!(cfg.alpha.unwrap().values(), vec![0.0, 0.5, 1.0]);

        let cfg = parse_config(r#"{"generator":{"type":"appendix-b","t22":0.5,"t33":0.3},"alpha":0.7}"#).unwrap();
        assert_eq!(cfg.alpha.unwrap().values(), vec![0.7]);
        let cfg = parse_config(r#"{"probe":{"type":"amplitudes","re":[1,0,0,1]}}"#).unwrap();
        let p = cfg.probe.unwrap().build(None).unwrap();
        assert!((p.amplitudes()[3].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let cfg = parse_config(r#"{"probe":{"type":"hurwitz","theta":[0.1,0.2,0.3],"phi":[0,1,2]}}"#).unwrap();
        assert_eq!(cfg.probe.unwrap().build(None).unwrap().dim(), 4);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(parse_config(r#"{"generatr":{}}"#).is_err());
        assert!(parse_config(r#"{"generator":{"type":"case","t1":1,"t2":1,"t3":0}}"#).is_err());
        assert!(parse_config(r#"{"generator":{"type":"spin"}}"#).is_err());
        assert!(parse_config("not json").is_err());
        let cfg = parse_config(r#"{"probe":{"type":"hurwitz","theta":[0.1,0.2],"phi":[0,1]}}"#).unwrap();
        assert!(cfg.probe.unwrap().build(None).is_err());
    }

    #[test]
    fn grid_syntax() {
        assert_eq!(parse_grid("12x24").unwrap(), (12, 24));
        assert!(parse_grid("12").is_err());
        assert!(parse_grid("0x3").is_err());
        assert!(parse_grid("axb").is_err());
    }

    #[test]
    fn flags_override_config() {
        let cfg = parse_config(r#"{"seed":3,"format":"json","grid":"2x2","alpha_points":5}"#).unwrap();
        let s = Settings::resolve(
            cfg,
            Overrides {
                seed: Some(9),
                grid: Some("4x4".into()),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.format, Format::Json);
        assert_eq!(s.grid, Some((4, 4)));
        assert_eq!(s.alphas().len(), 5);
    }
}
