//! Synthetic population and choice generation from known parameters: the
//! independent oracle used to validate estimator recovery and welfare
//! outputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{ChoiceDataset, ChoiceObservation, IncomeBracket, Respondent, StormExperience};
use crate::design::Design;
use crate::error::{Error, Result};
use crate::estimate::{self, logit_probability, DrawConfig, EstimationResult, FitOptions};
use crate::model::{Alternative, ParameterVector, UtilitySpec};

/// Monthly-bill sampling distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BillDistribution {
    /// Log-normal with the given median and log-scale, truncated to
    /// [min, max] by resampling.
    LogNormal {
        median: f64,
        log_scale: f64,
        min: f64,
        max: f64,
    },
    /// Every respondent has the same bill.
    Degenerate(f64),
}

impl Default for BillDistribution {
    fn default() -> Self {
        BillDistribution::LogNormal {
            median: 150.0,
            log_scale: 0.4,
            min: 30.0,
            max: 1000.0,
        }
    }
}

impl BillDistribution {
    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            BillDistribution::Degenerate(bill) => bill,
            BillDistribution::LogNormal {
                median,
                log_scale,
                min,
                max,
            } => {
                let dist = LogNormal::new(median.ln(), log_scale).expect("valid log-normal");
                loop {
                    let v: f64 = dist.sample(rng);
                    if (min..=max).contains(&v) {
                        // round to cents so the pivot survives text round-trips
                        return (v * 100.0).round() / 100.0;
                    }
                }
            }
        }
    }
}

/// Synthetic-population settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    pub n_respondents: usize,
    pub bill_distribution: BillDistribution,
    /// Probability that a respondent's children flag is 1.
    pub children_flag_rate: f64,
    /// Probability that a respondent is in the low-income group.
    pub income_split_rate: f64,
    pub seed: u64,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            n_respondents: 680,
            bill_distribution: BillDistribution::default(),
            children_flag_rate: 0.4,
            income_split_rate: 0.6,
            seed: 0,
        }
    }
}

impl PopulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.children_flag_rate)
            || !(0.0..=1.0).contains(&self.income_split_rate)
        {
            return Err(Error::Invalid("rates must lie in [0, 1]".into()));
        }
        if self.n_respondents == 0 {
            return Err(Error::Invalid("need at least one respondent".into()));
        }
        Ok(())
    }
}

/// Builds a dataset skeleton: each synthetic respondent gets a uniformly
/// random block from the design, a sampled bill, children and income flags,
/// and the block's four scenarios with the cost pivoted on the bill.
/// Choices are left at "wait" until [`simulate_choices`] fills them.
pub fn generate_population(config: &PopulationConfig, design: &Design) -> Result<ChoiceDataset> {
    config.validate()?;
    design.validate()?;
    let block_ids = design.block_ids();
    if block_ids.is_empty() {
        return Err(Error::EmptyDesign);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut respondents = Vec::with_capacity(config.n_respondents);
    let mut observations = Vec::new();
    for i in 0..config.n_respondents {
        let id = format!("s{i:05}");
        let block = block_ids[rng.gen_range(0..block_ids.len())];
        let bill = config.bill_distribution.sample(&mut rng);
        let has_children = rng.gen_bool(config.children_flag_rate);
        let low_income = rng.gen_bool(config.income_split_rate);
        respondents.push(Respondent {
            id: id.clone(),
            income_bracket: if low_income {
                IncomeBracket::From50kTo75k
            } else {
                IncomeBracket::From100kTo150k
            },
            // children flag 1 iff children exceed 20% of household size
            household_size: Some(4),
            children_count: Some(if has_children { 2 } else { 0 }),
            age: None,
            gender: None,
            storm_experience: StormExperience::Both,
        });
        for (s_idx, scenario) in design.scenarios_in_block(block).iter().enumerate() {
            observations.push(ChoiceObservation {
                respondent_id: id.clone(),
                block_id: block,
                scenario_index: (s_idx + 1) as u8,
                dt_days: scenario.dt_days,
                wt_days: scenario.wt_days,
                bill_base: bill,
                pct_increase: scenario.pct_increase,
                cost_final: bill * (1.0 + scenario.pct_increase),
                chose_purchase: false,
            });
        }
    }
    let dataset = ChoiceDataset {
        respondents,
        observations,
        provenance: format!(
            "synthetic population: n={} seed={}",
            config.n_respondents, config.seed
        ),
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Samples choices from the model: for panel specs one xi per respondent is
/// drawn from Normal(0, sigma^2) and shared across that respondent's
/// scenarios, then each choice is Bernoulli on the logit probability.
pub fn simulate_choices(
    skeleton: &ChoiceDataset,
    spec: &UtilitySpec,
    truth: &ParameterVector,
    seed: u64,
) -> Result<ChoiceDataset> {
    truth.validate(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut out = skeleton.clone();
    for (resp, obs) in skeleton.grouped() {
        let ch = resp.children_flag().unwrap_or(0);
        let xi = if spec.has_panel_effect {
            truth.sigma_xi.unwrap_or(0.0) * normal.sample(&mut rng)
        } else {
            0.0
        };
        for o in obs {
            let v_p =
                crate::model::systematic_utility(spec, truth, Alternative::Purchase, o, ch, xi)?;
            let v_w = crate::model::systematic_utility(spec, truth, Alternative::Wait, o, ch, 0.0)?;
            let p = logit_probability(v_p, v_w);
            let choice = rng.gen_bool(p);
            let slot = out
                .observations
                .iter_mut()
                .find(|x| {
                    x.respondent_id == o.respondent_id && x.scenario_index == o.scenario_index
                })
                .expect("skeleton observation");
            slot.chose_purchase = choice;
        }
    }
    out.provenance = format!("{}; choices from {} seed={seed}", out.provenance, spec.name);
    Ok(out)
}

/// Per-parameter recovery statistics across replications.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParameterRecovery {
    pub label: String,
    pub truth: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    pub mean_std_error: f64,
    /// Share of replications whose +/-2 SE interval covers the truth.
    pub coverage_2se: f64,
}

/// Aggregate report of a generate -> simulate -> fit experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub spec_name: String,
    pub n_replications: usize,
    pub n_converged: usize,
    pub n_failed: usize,
    pub parameters: Vec<ParameterRecovery>,
    pub results: Vec<EstimationResult>,
}

/// Runs `n_replications` of generate -> simulate -> fit with per-replication
/// seeds derived from the population seed. Fit failures are counted, not
/// fatal.
pub fn recovery_experiment(
    spec: &UtilitySpec,
    truth: &ParameterVector,
    config: &PopulationConfig,
    design: &Design,
    draws: &DrawConfig,
    n_replications: usize,
    options: &FitOptions,
) -> Result<RecoveryReport> {
    truth.validate(spec)?;
    let truth_packed = truth.pack(spec);
    let labels = spec.param_labels();
    let mut results: Vec<EstimationResult> = Vec::new();
    let mut n_failed = 0usize;
    for rep in 0..n_replications {
        let rep_seed = config
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(rep as u64);
        let population = generate_population(
            &PopulationConfig {
                seed: rep_seed,
                ..*config
            },
            design,
        )?;
        let data = simulate_choices(&population, spec, truth, rep_seed ^ 0x5DEE_CE66)?;
        match estimate::fit(spec, &data, draws, &estimate::default_start(spec), options) {
            Ok(result) => results.push(result),
            Err(_) => n_failed += 1,
        }
    }
    let n_ok = results.len();
    let mut parameters = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        let estimates: Vec<f64> = results
            .iter()
            .map(|r| r.estimates.pack(spec)[i])
            .collect();
        let ses: Vec<Option<f64>> = results.iter().map(|r| r.std_errors[i]).collect();
        let mean_estimate = estimates.iter().sum::<f64>() / n_ok.max(1) as f64;
        let available: Vec<f64> = ses.iter().flatten().copied().collect();
        let mean_se = available.iter().sum::<f64>() / available.len().max(1) as f64;
        let covered = estimates
            .iter()
            .zip(&ses)
            .filter(|(est, se)| {
                se.map(|se| (truth_packed[i] - **est).abs() <= 2.0 * se)
                    .unwrap_or(false)
            })
            .count();
        parameters.push(ParameterRecovery {
            label: label.to_string(),
            truth: truth_packed[i],
            mean_estimate,
            bias: mean_estimate - truth_packed[i],
            mean_std_error: mean_se,
            coverage_2se: covered as f64 / n_ok.max(1) as f64,
        });
    }
    Ok(RecoveryReport {
        spec_name: spec.name.to_string(),
        n_replications,
        n_converged: results.iter().filter(|r| r.converged).count(),
        n_failed,
        parameters,
        results,
    })
}
