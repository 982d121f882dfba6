use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::adversary::Adversary;
use crate::error::{Error, Result};
use crate::systems::{
    build_jordan_system, Bounds, InitialState, InputPolicy, JordanSpec, NoiseConfig, NoiseKind, SystemSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    FullAdversarial,
    FullStochastic,
    PartialStochastic,
    OlsLowerBound,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::FullAdversarial => "full-adversarial",
            Setting::FullStochastic => "full-stochastic",
            Setting::PartialStochastic => "partial-stochastic",
            Setting::OlsLowerBound => "ols-lower-bound",
        }
    }

    pub fn is_full(self) -> bool {
        matches!(self, Setting::FullAdversarial | Setting::FullStochastic)
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Regularizer rule. `Theorem` picks the rate matching the setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum MuRule {
    #[default]
    Theorem,
    /// `T^{(2r+1)/(2r+2)}`
    TheoremAdversarial,
    /// `μ = 1`
    TheoremStochastic,
    Explicit {
        value: f64,
    },
    /// `m^{(α+2)/(α+1)} T^{(α+2)/(2(α+1))} / (c₁^{1/(α+1)} c₂^{2/(α+1)})`,
    /// needs the structural constants.
    OlsRegret,
}

/// Constants `(c₁, c₂, α)` of an anomaly-free sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralConstants {
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
}

/// Lag length of the autoregressive learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum EllRule {
    SufficientLength { eps: f64 },
    Explicit { value: usize },
}

impl Default for EllRule {
    fn default() -> Self {
        EllRule::SufficientLength { eps: 1e-3 }
    }
}

/// System given either by its matrices or by a Jordan form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SystemSource {
    Matrices(SystemSpec),
    Jordan(JordanSystem),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanSystem {
    pub spec: JordanSpec,
    #[serde(default)]
    pub input_dim: usize,
    #[serde(default)]
    pub obs_dim: usize,
    #[serde(default)]
    pub bounds: Bounds,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub initial_state: InitialState,
}

impl SystemSource {
    pub fn build(&self) -> Result<SystemSpec> {
        match self {
            SystemSource::Matrices(s) => {
                s.validate()?;
                Ok(s.clone())
            }
            SystemSource::Jordan(j) => {
                let mut s = build_jordan_system(&j.spec, j.input_dim, j.obs_dim, j.bounds.clone(), j.noise.clone())?;
                s.initial_state = j.initial_state.clone();
                Ok(s)
            }
        }
    }
}

fn default_trials() -> usize {
    1
}

fn default_delta() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub setting: Setting,
    #[serde(default)]
    pub system: Option<SystemSource>,
    pub horizons: Vec<usize>,
    #[serde(default)]
    pub mu: MuRule,
    #[serde(default)]
    pub ell: Option<EllRule>,
    #[serde(default)]
    pub constants: Option<StructuralConstants>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Confidence level, recorded in outputs only.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub inputs: InputPolicy,
    /// Replaces the system's noise in the full-observation settings.
    #[serde(default)]
    pub adversary: Option<Adversary>,
    /// Attach structural diagnostics to each cell.
    #[serde(default)]
    pub diagnostics: bool,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parses JSON, reporting the failing field path and position.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            field: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| {
            Err(Error::Config {
                field: field.into(),
                message,
            })
        };
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return bad("horizons", "need at least one positive horizon".into());
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return bad("horizons", "horizons must be strictly ascending".into());
        }
        if self.trials == 0 {
            return bad("trials", "need at least one trial".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta", format!("{} is not in (0, 1)", self.delta));
        }
        if let MuRule::Explicit { value } = self.mu {
            if !(value > 0.0) {
                return bad("mu.value", format!("{value} is not positive"));
            }
        }
        if self.mu == MuRule::OlsRegret && self.constants.is_none() {
            return bad("constants", Error::MissingConstants.to_string());
        }
        match (self.setting, &self.system) {
            (Setting::OlsLowerBound, _) => {}
            (_, None) => return bad("system", format!("setting {} needs a system", self.setting)),
            (Setting::PartialStochastic, Some(src)) => {
                let sys = src.build().map_err(|e| Error::Config {
                    field: "system".into(),
                    message: e.to_string(),
                })?;
                if sys.c.is_none() {
                    return bad("system.c", "partial observation needs an observation matrix".into());
                }
                if !matches!(sys.noise.kind, NoiseKind::Gaussian { .. }) {
                    return bad("system.noise", "partial observation needs gaussian noise".into());
                }
            }
            (_, Some(src)) => {
                src.build().map_err(|e| Error::Config {
                    field: "system".into(),
                    message: e.to_string(),
                })?;
            }
        }
        if self.adversary.is_some() && !self.setting.is_full() {
            return bad("adversary", "adversaries apply to the full-observation settings only".into());
        }
        if self.ell.is_some() && self.setting != Setting::PartialStochastic {
            return bad("ell", "lag length applies to the partial setting only".into());
        }
        match self.ell {
            Some(EllRule::Explicit { value: 0 }) => bad("ell.value", "lag length must be positive".into()),
            Some(EllRule::SufficientLength { eps }) if !(eps > 0.0 && eps < 1.0) => {
                bad("ell.eps", format!("{eps} is not in (0, 1)"))
            }
            _ => Ok(()),
        }
    }

    /// FNV-1a of the canonical JSON with the output directory removed.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.out_dir = None;
        let text = serde_json::to_string(&canon).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

/// Regularizer for one horizon.
///
/// `r` is the largest Jordan block size and `m` the regressor dimension.
pub fn choose_mu(
    rule: MuRule,
    setting: Setting,
    horizon: usize,
    r: usize,
    m: usize,
    constants: Option<&StructuralConstants>,
) -> Result<f64> {
    if r == 0 {
        return Err(Error::InvalidParameter("Jordan block size must be at least 1".into()));
    }
    let t = horizon as f64;
    let adversarial = || {
        let r = r as f64;
        t.powf((2.0 * r + 1.0) / (2.0 * r + 2.0))
    };
    Ok(match rule {
        MuRule::Explicit { value } => value,
        MuRule::TheoremAdversarial => adversarial(),
        MuRule::TheoremStochastic => 1.0,
        MuRule::Theorem => match setting {
            Setting::FullAdversarial => adversarial(),
            _ => 1.0,
        },
        MuRule::OlsRegret => {
            let k = constants.ok_or(Error::MissingConstants)?;
            let a1 = k.alpha + 1.0;
            (m as f64).powf((k.alpha + 2.0) / a1) * t.powf((k.alpha + 2.0) / (2.0 * a1))
                / (k.c1.powf(1.0 / a1) * k.c2.powf(2.0 / a1))
        }
    })
}
