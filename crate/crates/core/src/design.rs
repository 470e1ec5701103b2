//! Stated-choice experimental design: scenario enumeration, blocking, level
//! balance, and MNL D-error evaluation with a local-search improver.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ParameterVector;

/// One choice scenario: deprivation time, waiting time, and the percentage
/// bill increase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub dt_days: f64,
    pub wt_days: f64,
    pub pct_increase: f64,
}

/// Admissible attribute levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Levels {
    pub dt: Vec<f64>,
    pub wt: Vec<f64>,
    pub pct: Vec<f64>,
}

impl Default for Levels {
    fn default() -> Self {
        Levels {
            dt: vec![1.0, 3.0, 5.0, 7.0],
            wt: vec![1.0, 3.0, 5.0, 7.0],
            pct: vec![0.10, 0.25, 0.50, 0.75],
        }
    }
}

/// A blocked choice-experiment design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub scenarios: Vec<Scenario>,
    /// Block id per scenario, parallel to `scenarios`.
    pub blocks: Vec<u8>,
    pub levels: Levels,
}

impl Design {
    pub fn n_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    pub fn block_ids(&self) -> Vec<u8> {
        let mut ids: Vec<u8> = self.blocks.clone();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn scenarios_in_block(&self, block: u8) -> Vec<&Scenario> {
        self.scenarios
            .iter()
            .zip(&self.blocks)
            .filter(|(_, &b)| b == block)
            .map(|(s, _)| s)
            .collect()
    }

    /// Checks that every scenario's attributes are members of the level sets
    /// and that blocks are balanced in size.
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::EmptyDesign);
        }
        if self.scenarios.len() != self.blocks.len() {
            return Err(Error::Invalid(
                "blocks must be parallel to scenarios".into(),
            ));
        }
        let member = |levels: &[f64], v: f64| levels.iter().any(|&l| (l - v).abs() < 1e-12);
        for (i, s) in self.scenarios.iter().enumerate() {
            if !member(&self.levels.dt, s.dt_days)
                || !member(&self.levels.wt, s.wt_days)
                || !member(&self.levels.pct, s.pct_increase)
            {
                return Err(Error::Invalid(format!(
                    "scenario {i} uses a value outside the level sets"
                )));
            }
        }
        let ids = self.block_ids();
        let sizes: Vec<usize> = ids
            .iter()
            .map(|&b| self.blocks.iter().filter(|&&x| x == b).count())
            .collect();
        if sizes.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::Invalid(format!("unequal block sizes {sizes:?}")));
        }
        Ok(())
    }

    /// A 36-scenario, 9-block design with each attribute level appearing
    /// exactly once per block (round-robin over the default level sets).
    pub fn balanced_default() -> Self {
        let levels = Levels::default();
        let mut scenarios = Vec::new();
        let mut blocks = Vec::new();
        for b in 0..9usize {
            for i in 0..4usize {
                scenarios.push(Scenario {
                    dt_days: levels.dt[i],
                    wt_days: levels.wt[(i + b) % 4],
                    pct_increase: levels.pct[(i + 2 * b) % 4],
                });
                blocks.push((b + 1) as u8);
            }
        }
        Design {
            scenarios,
            blocks,
            levels,
        }
    }
}

/// Frequency table and imbalance score for one attribute. The imbalance
/// score is max frequency minus min frequency over the full level set
/// (unused levels count zero).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributeBalance {
    pub counts: BTreeMap<String, usize>,
    pub imbalance: usize,
}

fn attribute_balance(levels: &[f64], values: impl Iterator<Item = f64>) -> AttributeBalance {
    let mut counts: BTreeMap<String, usize> =
        levels.iter().map(|l| (format!("{l}"), 0)).collect();
    for v in values {
        if let Some(c) = counts.get_mut(&format!("{v}")) {
            *c += 1;
        }
    }
    let max = counts.values().max().copied().unwrap_or(0);
    let min = counts.values().min().copied().unwrap_or(0);
    AttributeBalance {
        counts,
        imbalance: max - min,
    }
}

/// Per-attribute level frequencies, globally and per block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BalanceReport {
    pub global: BTreeMap<String, AttributeBalance>,
    pub per_block: BTreeMap<u8, BTreeMap<String, AttributeBalance>>,
}

pub fn level_balance_report(design: &Design) -> Result<BalanceReport> {
    if design.scenarios.is_empty() {
        return Err(Error::EmptyDesign);
    }
    let tabulate = |scenarios: &[&Scenario]| -> BTreeMap<String, AttributeBalance> {
        let mut m = BTreeMap::new();
        m.insert(
            "dt".to_string(),
            attribute_balance(&design.levels.dt, scenarios.iter().map(|s| s.dt_days)),
        );
        m.insert(
            "wt".to_string(),
            attribute_balance(&design.levels.wt, scenarios.iter().map(|s| s.wt_days)),
        );
        m.insert(
            "pct".to_string(),
            attribute_balance(&design.levels.pct, scenarios.iter().map(|s| s.pct_increase)),
        );
        m
    };
    let all: Vec<&Scenario> = design.scenarios.iter().collect();
    let per_block = design
        .block_ids()
        .into_iter()
        .map(|b| (b, tabulate(&design.scenarios_in_block(b))))
        .collect();
    Ok(BalanceReport {
        global: tabulate(&all),
        per_block,
    })
}

/// MNL D-error of the design under MNL1-form priors (ASC, beta_c, beta_t),
/// with the cost pivoted on a single reference bill: C = bill * (1 + P).
///
/// Fisher information is summed over scenarios as p(1-p) x x' with
/// x = (1, C, -WT) the utility-difference covariate vector; the D-error is
/// det(information^-1)^(1/K). Smaller is better.
pub fn d_error(design: &Design, priors: &ParameterVector, bill_reference: f64) -> Result<f64> {
    if design.scenarios.is_empty() {
        return Err(Error::EmptyDesign);
    }
    let k = 3;
    // Sum scenario contributions in a canonical order so the result is
    // exactly invariant to row permutations of the design.
    let mut ordered: Vec<&Scenario> = design.scenarios.iter().collect();
    ordered.sort_by(|a, b| {
        (a.dt_days, a.wt_days, a.pct_increase)
            .partial_cmp(&(b.dt_days, b.wt_days, b.pct_increase))
            .unwrap()
    });
    let mut info = DMatrix::<f64>::zeros(k, k);
    for s in ordered {
        let cost = bill_reference * (1.0 + s.pct_increase);
        let x = DVector::from_vec(vec![1.0, cost, -s.wt_days]);
        let v_diff = priors.asc + priors.beta_c * cost + priors.beta_t * (-s.wt_days);
        let p = 1.0 / (1.0 + (-v_diff).exp());
        info += p * (1.0 - p) * &x * x.transpose();
    }
    let svd = info.clone().svd(false, false);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    if !(s_min.is_finite() && s_max.is_finite()) || s_min <= 1e-10 * s_max {
        return Err(Error::SingularInformation(format!(
            "information matrix is rank deficient (singular values {s_min:.3e} .. {s_max:.3e})"
        )));
    }
    let inverse = info
        .try_inverse()
        .ok_or_else(|| Error::SingularInformation("inversion failed".into()))?;
    let det_omega = inverse.determinant();
    if det_omega <= 0.0 {
        return Err(Error::SingularInformation(format!(
            "non-positive covariance determinant {det_omega}"
        )));
    }
    Ok(det_omega.powf(1.0 / k as f64))
}

/// Random coordinate-swap hill-climb on the D-error: each iteration proposes
/// replacing one scenario's one attribute with another admissible level and
/// accepts iff the D-error decreases. Deterministic for a fixed seed.
pub fn improve_design(
    design: &Design,
    priors: &ParameterVector,
    budget: usize,
    seed: u64,
    bill_reference: f64,
) -> Result<(Design, Vec<f64>)> {
    design.validate()?;
    let mut current = design.clone();
    let mut best = d_error(&current, priors, bill_reference).ok();
    let mut trace = Vec::new();
    if let Some(b) = best {
        trace.push(b);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        let i = rng.gen_range(0..current.scenarios.len());
        let attr = rng.gen_range(0..3);
        let mut candidate = current.clone();
        {
            let s = &mut candidate.scenarios[i];
            match attr {
                0 => s.dt_days = current.levels.dt[rng.gen_range(0..current.levels.dt.len())],
                1 => s.wt_days = current.levels.wt[rng.gen_range(0..current.levels.wt.len())],
                _ => {
                    s.pct_increase =
                        current.levels.pct[rng.gen_range(0..current.levels.pct.len())]
                }
            }
        }
        match d_error(&candidate, priors, bill_reference) {
            Ok(e) if best.map_or(true, |b| e < b) => {
                best = Some(e);
                current = candidate;
                trace.push(e);
            }
            _ => {} // rejected or singular proposal
        }
    }
    Ok((current, trace))
}

/// Reads a design file: delimited text with header `block,dt,wt,p`.
pub fn load_design(path: &Path, levels: Levels, delimiter: u8) -> Result<Design> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut scenarios = Vec::new();
    let mut blocks = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let get = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::BadRow {
                    row: idx + 2,
                    message: format!("bad field {i}"),
                })
        };
        blocks.push(get(0)? as u8);
        scenarios.push(Scenario {
            dt_days: get(1)?,
            wt_days: get(2)?,
            pct_increase: get(3)?,
        });
    }
    let design = Design {
        scenarios,
        blocks,
        levels,
    };
    design.validate()?;
    Ok(design)
}

pub fn save_design(design: &Design, path: &Path, delimiter: u8) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_path(path)?;
    writer.write_record(["block", "dt", "wt", "p"])?;
    for (s, b) in design.scenarios.iter().zip(&design.blocks) {
        writer.write_record([
            b.to_string(),
            format!("{}", s.dt_days),
            format!("{}", s.wt_days),
            format!("{}", s.pct_increase),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
