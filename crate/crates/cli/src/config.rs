//! Optional TOML configuration. Unknown keys are rejected so that typos in
//! a config file fail loudly instead of silently falling back to defaults.

use std::path::Path;

use depcost::estimate::{DrawConfig, DrawGenerator};
use depcost::model::{ParameterVector, UtilitySpec};
use depcost::simgen::PopulationConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Generating parameters for `simulate` and `recover`.
    pub truth: Option<ParamSection>,
    /// Priors for `design-eval`.
    pub priors: Option<ParamSection>,
    pub population: Option<PopulationSection>,
    pub draws: Option<DrawSection>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSection {
    pub asc: Option<f64>,
    pub beta_c: Option<f64>,
    pub beta_t: Option<f64>,
    pub delta_cht: Option<f64>,
    pub tau: Option<f64>,
    pub beta_time: Option<f64>,
    pub sigma_xi: Option<f64>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSection {
    pub n_respondents: Option<usize>,
    pub children_flag_rate: Option<f64>,
    pub income_split_rate: Option<f64>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrawSection {
    pub n_draws: Option<usize>,
    /// "halton" or "pseudo".
    pub generator: Option<String>,
    pub base: Option<u64>,
    pub skip: Option<usize>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("bad config {}: {e}", p.display())))
            }
        }
    }

    pub fn population(&self, n_respondents: Option<usize>, seed: u64) -> PopulationConfig {
        let section = self.population.clone().unwrap_or_default();
        let mut out = PopulationConfig {
            seed,
            ..PopulationConfig::default()
        };
        if let Some(n) = n_respondents.or(section.n_respondents) {
            out.n_respondents = n;
        }
        if let Some(r) = section.children_flag_rate {
            out.children_flag_rate = r;
        }
        if let Some(r) = section.income_split_rate {
            out.income_split_rate = r;
        }
        out
    }

    pub fn draws(&self, n_draws: Option<usize>, seed: u64) -> Result<DrawConfig, CliError> {
        let section = self.draws.clone().unwrap_or_default();
        let mut out = DrawConfig {
            seed,
            ..DrawConfig::default()
        };
        if let Some(n) = n_draws.or(section.n_draws) {
            out.n_draws = n;
        }
        if let Some(g) = &section.generator {
            out.generator = match g.as_str() {
                "halton" => DrawGenerator::Halton,
                "pseudo" => DrawGenerator::PseudoRandom,
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown draw generator `{other}` (expected halton or pseudo)"
                    )))
                }
            };
        }
        if let Some(b) = section.base {
            out.base = b;
        }
        if let Some(s) = section.skip {
            out.skip = s;
        }
        Ok(out)
    }
}

/// Built-in generating values per model, overridable field by field from a
/// [truth] or [priors] section. Every field the spec requires must end up
/// set; fields the spec does not use may not be set.
pub fn resolve_params(
    spec: &UtilitySpec,
    section: Option<&ParamSection>,
    role: &str,
) -> Result<ParameterVector, CliError> {
    let s = section.cloned().unwrap_or_default();
    let mut params = ParameterVector::mnl(
        s.asc.unwrap_or(-1.0),
        s.beta_c.unwrap_or(-0.0025),
        s.beta_t.unwrap_or(default_beta_t(spec)),
    );
    if spec.has_children_interaction {
        params = params.with_delta_cht(s.delta_cht.unwrap_or(-0.09));
    }
    match spec.transform_kind {
        depcost::model::TransformKind::BoxCox | depcost::model::TransformKind::Power => {
            params = params.with_tau(s.tau.unwrap_or(1.25));
        }
        depcost::model::TransformKind::Exponential => {
            params = params.with_beta_time(s.beta_time.unwrap_or(0.05));
        }
        depcost::model::TransformKind::Linear => {}
    }
    if spec.has_panel_effect {
        params = params.with_sigma_xi(s.sigma_xi.unwrap_or(1.7));
    }
    params
        .validate(spec)
        .map_err(|e| CliError::Usage(format!("[{role}] does not fit model {}: {e}", spec.name)))?;
    Ok(params)
}

fn default_beta_t(spec: &UtilitySpec) -> f64 {
    match spec.transform_kind {
        depcost::model::TransformKind::Exponential => -3.5,
        _ => -0.18,
    }
}
