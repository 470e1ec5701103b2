//! The ten utility-model specifications: parameterization, deprivation-time
//! transforms, and systematic-utility evaluation for both alternatives.

use serde::{Deserialize, Serialize};

use crate::dataset::ChoiceObservation;
use crate::error::{Error, Result};

/// Below this magnitude the Box-Cox exponent is treated as zero and the
/// logarithmic branch is used, avoiding catastrophic cancellation in
/// (t^tau - 1)/tau.
pub const BOXCOX_LN_TOLERANCE: f64 = 1e-8;

/// Functional transform applied to deprivation time before it enters utility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeTransform {
    /// f(t) = t
    Linear,
    /// f(t) = (t^tau - 1)/tau, or ln t when tau is (numerically) zero.
    BoxCox { tau: f64 },
    /// f(t) = t^tau
    Power { tau: f64 },
    /// f(t) = exp(beta_time * t)
    Exponential { beta_time: f64 },
}

impl TimeTransform {
    pub fn kind(&self) -> TransformKind {
        match self {
            TimeTransform::Linear => TransformKind::Linear,
            TimeTransform::BoxCox { .. } => TransformKind::BoxCox,
            TimeTransform::Power { .. } => TransformKind::Power,
            TimeTransform::Exponential { .. } => TransformKind::Exponential,
        }
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        match self {
            TimeTransform::BoxCox { .. } | TimeTransform::Power { .. } if t <= 0.0 => Err(
                Error::TransformDomain(format!("t = {t} must be > 0 for this transform")),
            ),
            _ if t < 0.0 => Err(Error::TransformDomain(format!("t = {t} must be >= 0"))),
            _ => Ok(()),
        }
    }

    /// f(t)
    pub fn value(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(match *self {
            TimeTransform::Linear => t,
            TimeTransform::BoxCox { tau } => {
                if tau.abs() < BOXCOX_LN_TOLERANCE {
                    t.ln()
                } else {
                    (t.powf(tau) - 1.0) / tau
                }
            }
            TimeTransform::Power { tau } => t.powf(tau),
            TimeTransform::Exponential { beta_time } => (beta_time * t).exp(),
        })
    }

    /// f'(t)
    pub fn derivative(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(match *self {
            TimeTransform::Linear => 1.0,
            TimeTransform::BoxCox { tau } => t.powf(tau - 1.0),
            TimeTransform::Power { tau } => tau * t.powf(tau - 1.0),
            TimeTransform::Exponential { beta_time } => beta_time * (beta_time * t).exp(),
        })
    }

    /// Partial of f(t) with respect to the transform's own shape parameter
    /// (tau for Box-Cox/Power, beta_time for Exponential). Zero for Linear.
    pub fn shape_partial(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(match *self {
            TimeTransform::Linear => 0.0,
            TimeTransform::BoxCox { tau } => {
                if tau.abs() < BOXCOX_LN_TOLERANCE {
                    // limit of (tau t^tau ln t - (t^tau - 1)) / tau^2 as tau -> 0
                    0.5 * t.ln() * t.ln()
                } else {
                    let tt = t.powf(tau);
                    (tau * tt * t.ln() - (tt - 1.0)) / (tau * tau)
                }
            }
            TimeTransform::Power { tau } => t.powf(tau) * t.ln(),
            TimeTransform::Exponential { beta_time } => t * (beta_time * t).exp(),
        })
    }
}

/// Transform family without its shape parameter; the shape parameter, when
/// estimated, lives in [`ParameterVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Linear,
    BoxCox,
    Power,
    Exponential,
}

/// The ten shipped model specifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelName {
    Mnl1,
    Mnl2,
    Mnl1Low,
    Mnl1High,
    Ml1,
    Ml2,
    Ml3,
    Ml4,
    Ml5,
    Ml6,
}

impl ModelName {
    pub const ALL: [ModelName; 10] = [
        ModelName::Mnl1,
        ModelName::Mnl2,
        ModelName::Mnl1Low,
        ModelName::Mnl1High,
        ModelName::Ml1,
        ModelName::Ml2,
        ModelName::Ml3,
        ModelName::Ml4,
        ModelName::Ml5,
        ModelName::Ml6,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        let canon = s.to_ascii_uppercase().replace(['_', ' '], "-");
        Ok(match canon.as_str() {
            "MNL1" => ModelName::Mnl1,
            "MNL2" => ModelName::Mnl2,
            "MNL1-LOW" => ModelName::Mnl1Low,
            "MNL1-HIGH" => ModelName::Mnl1High,
            "ML1" => ModelName::Ml1,
            "ML2" => ModelName::Ml2,
            "ML3" => ModelName::Ml3,
            "ML4" => ModelName::Ml4,
            "ML5" => ModelName::Ml5,
            "ML6" => ModelName::Ml6,
            _ => return Err(Error::Invalid(format!("unknown model name `{s}`"))),
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelName::Mnl1 => "MNL1",
            ModelName::Mnl2 => "MNL2",
            ModelName::Mnl1Low => "MNL1-low",
            ModelName::Mnl1High => "MNL1-high",
            ModelName::Ml1 => "ML1",
            ModelName::Ml2 => "ML2",
            ModelName::Ml3 => "ML3",
            ModelName::Ml4 => "ML4",
            ModelName::Ml5 => "ML5",
            ModelName::Ml6 => "ML6",
        }
    }
}

impl std::fmt::Display for ModelName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which alternative a utility is being evaluated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    Purchase,
    Wait,
}

/// Structural description of one model family: which parameters exist, which
/// time transform applies, and whether a per-respondent panel effect is
/// present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtilitySpec {
    pub name: ModelName,
    pub has_children_interaction: bool,
    pub has_panel_effect: bool,
    pub transform_kind: TransformKind,
    /// Reserved flag for a random coefficient on deprivation time. No shipped
    /// model enables it; randomness enters only through the panel effect.
    pub has_random_time_taste: bool,
}

impl UtilitySpec {
    pub fn for_model(name: ModelName) -> Self {
        use ModelName::*;
        let (children, panel, kind) = match name {
            Mnl1 | Mnl1Low | Mnl1High => (false, false, TransformKind::Linear),
            Mnl2 => (true, false, TransformKind::Linear),
            Ml1 => (false, true, TransformKind::Linear),
            Ml2 => (true, true, TransformKind::Linear),
            Ml3 => (false, true, TransformKind::BoxCox),
            Ml4 => (true, true, TransformKind::BoxCox),
            Ml5 => (false, true, TransformKind::Exponential),
            Ml6 => (true, true, TransformKind::Exponential),
        };
        UtilitySpec {
            name,
            has_children_interaction: children,
            has_panel_effect: panel,
            transform_kind: kind,
            has_random_time_taste: false,
        }
    }

    /// Swap the tau-family parameterization between Box-Cox and Power.
    /// Only meaningful for ML3/ML4; other specs are returned unchanged.
    pub fn with_transform(mut self, kind: TransformKind) -> Self {
        if matches!(
            self.transform_kind,
            TransformKind::BoxCox | TransformKind::Power
        ) && matches!(kind, TransformKind::BoxCox | TransformKind::Power)
        {
            self.transform_kind = kind;
        }
        self
    }

    pub fn has_shape_parameter(&self) -> bool {
        matches!(
            self.transform_kind,
            TransformKind::BoxCox | TransformKind::Power | TransformKind::Exponential
        )
    }

    /// Number of free parameters K.
    pub fn n_params(&self) -> usize {
        3 + usize::from(self.has_children_interaction)
            + usize::from(self.has_shape_parameter())
            + usize::from(self.has_panel_effect)
    }

    /// Labels of the free parameters, in packing order.
    pub fn param_labels(&self) -> Vec<&'static str> {
        let mut labels = vec!["asc", "beta_c", "beta_t"];
        if self.has_children_interaction {
            labels.push("delta_cht");
        }
        match self.transform_kind {
            TransformKind::BoxCox | TransformKind::Power => labels.push("tau"),
            TransformKind::Exponential => labels.push("beta_time"),
            TransformKind::Linear => {}
        }
        if self.has_panel_effect {
            labels.push("sigma_xi");
        }
        labels
    }
}

/// Point in parameter space for some [`UtilitySpec`]; optional fields are
/// present exactly when the spec includes them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub asc: f64,
    pub beta_c: f64,
    pub beta_t: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta_cht: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma_xi: Option<f64>,
}

impl ParameterVector {
    pub fn mnl(asc: f64, beta_c: f64, beta_t: f64) -> Self {
        ParameterVector {
            asc,
            beta_c,
            beta_t,
            delta_cht: None,
            tau: None,
            beta_time: None,
            sigma_xi: None,
        }
    }

    pub fn with_delta_cht(mut self, delta: f64) -> Self {
        self.delta_cht = Some(delta);
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn with_beta_time(mut self, beta_time: f64) -> Self {
        self.beta_time = Some(beta_time);
        self
    }

    pub fn with_sigma_xi(mut self, sigma: f64) -> Self {
        self.sigma_xi = Some(sigma);
        self
    }

    /// Checks that exactly the parameters implied by `spec` are present.
    pub fn validate(&self, spec: &UtilitySpec) -> Result<()> {
        let mismatch = |msg: &str| Error::ParamSpecMismatch {
            spec: spec.name.to_string(),
            message: msg.to_string(),
        };
        if self.delta_cht.is_some() != spec.has_children_interaction {
            return Err(mismatch("delta_cht presence"));
        }
        let wants_tau = matches!(
            spec.transform_kind,
            TransformKind::BoxCox | TransformKind::Power
        );
        if self.tau.is_some() != wants_tau {
            return Err(mismatch("tau presence"));
        }
        if self.beta_time.is_some() != matches!(spec.transform_kind, TransformKind::Exponential) {
            return Err(mismatch("beta_time presence"));
        }
        if self.sigma_xi.is_some() != spec.has_panel_effect {
            return Err(mismatch("sigma_xi presence"));
        }
        Ok(())
    }

    /// The concrete transform this point implies for `spec`.
    pub fn transform(&self, spec: &UtilitySpec) -> TimeTransform {
        match spec.transform_kind {
            TransformKind::Linear => TimeTransform::Linear,
            TransformKind::BoxCox => TimeTransform::BoxCox {
                tau: self.tau.unwrap_or(1.0),
            },
            TransformKind::Power => TimeTransform::Power {
                tau: self.tau.unwrap_or(1.0),
            },
            TransformKind::Exponential => TimeTransform::Exponential {
                beta_time: self.beta_time.unwrap_or(0.0),
            },
        }
    }

    /// Effective coefficient on transformed time, including the children
    /// interaction when present.
    pub fn time_coefficient(&self, ch: u8) -> f64 {
        self.beta_t + self.delta_cht.unwrap_or(0.0) * f64::from(ch)
    }

    /// Flatten to the optimizer's coordinate vector, in `param_labels` order.
    pub fn pack(&self, spec: &UtilitySpec) -> Vec<f64> {
        let mut v = vec![self.asc, self.beta_c, self.beta_t];
        if spec.has_children_interaction {
            v.push(self.delta_cht.unwrap_or(0.0));
        }
        match spec.transform_kind {
            TransformKind::BoxCox | TransformKind::Power => v.push(self.tau.unwrap_or(1.0)),
            TransformKind::Exponential => v.push(self.beta_time.unwrap_or(0.0)),
            TransformKind::Linear => {}
        }
        if spec.has_panel_effect {
            v.push(self.sigma_xi.unwrap_or(0.0));
        }
        v
    }

    /// Inverse of [`ParameterVector::pack`].
    pub fn unpack(spec: &UtilitySpec, coords: &[f64]) -> Result<Self> {
        if coords.len() != spec.n_params() {
            return Err(Error::ParamSpecMismatch {
                spec: spec.name.to_string(),
                message: format!("expected {} coordinates, got {}", spec.n_params(), coords.len()),
            });
        }
        let mut it = coords.iter().copied();
        let mut p = ParameterVector::mnl(
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
        );
        if spec.has_children_interaction {
            p.delta_cht = Some(it.next().unwrap());
        }
        match spec.transform_kind {
            TransformKind::BoxCox | TransformKind::Power => p.tau = it.next(),
            TransformKind::Exponential => p.beta_time = it.next(),
            TransformKind::Linear => {}
        }
        if spec.has_panel_effect {
            p.sigma_xi = it.next();
        }
        Ok(p)
    }
}

/// Systematic utility of one alternative for one observation. `xi` is the
/// per-respondent panel draw and must be zero for specs without the panel
/// effect; it enters the purchase alternative only.
pub fn systematic_utility(
    spec: &UtilitySpec,
    params: &ParameterVector,
    alternative: Alternative,
    obs: &ChoiceObservation,
    ch: u8,
    xi: f64,
) -> Result<f64> {
    params.validate(spec)?;
    if !spec.has_panel_effect && xi != 0.0 {
        return Err(Error::ParamSpecMismatch {
            spec: spec.name.to_string(),
            message: "xi must be 0 for specs without a panel effect".into(),
        });
    }
    let transform = params.transform(spec);
    let coef_t = params.time_coefficient(ch);
    Ok(match alternative {
        Alternative::Purchase => {
            params.asc
                + params.beta_c * obs.cost_final
                + coef_t * transform.value(obs.dt_days)?
                + xi
        }
        Alternative::Wait => coef_t * transform.value(obs.dt_days + obs.wt_days)?,
    })
}
