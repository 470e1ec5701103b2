//! Ingestion, validation, and panel-structuring of stated-preference choice
//! data.
//!
//! The on-disk format is delimited text (comma by default) with a header row
//! and one row per (respondent, scenario). A [`ColumnMap`] names the columns;
//! the final cost may either be given directly or pivoted from the monthly
//! bill and the percentage increase.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Annual household income bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IncomeBracket {
    Under25k,
    From25kTo50k,
    From50kTo75k,
    From75kTo100k,
    From100kTo150k,
    Over150k,
    NotAnswered,
}

impl IncomeBracket {
    /// Lower bound of the bracket in dollars; None for "prefer not to answer".
    pub fn lower_bound(&self) -> Option<f64> {
        match self {
            IncomeBracket::Under25k => Some(0.0),
            IncomeBracket::From25kTo50k => Some(25_000.0),
            IncomeBracket::From50kTo75k => Some(50_000.0),
            IncomeBracket::From75kTo100k => Some(75_000.0),
            IncomeBracket::From100kTo150k => Some(100_000.0),
            IncomeBracket::Over150k => Some(150_000.0),
            IncomeBracket::NotAnswered => None,
        }
    }

    /// Bracket boundaries usable as split thresholds.
    pub const BOUNDARIES: [f64; 5] = [25_000.0, 50_000.0, 75_000.0, 100_000.0, 150_000.0];

    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let canon = t.to_ascii_lowercase();
        Ok(match canon.as_str() {
            "" | "na" | "not_answered" | "prefer_not_to_answer" => IncomeBracket::NotAnswered,
            "<25k" | "under_25k" | "0" => IncomeBracket::Under25k,
            "25k-50k" | "1" => IncomeBracket::From25kTo50k,
            "50k-75k" | "2" => IncomeBracket::From50kTo75k,
            "75k-100k" | "3" => IncomeBracket::From75kTo100k,
            "100k-150k" | "4" => IncomeBracket::From100kTo150k,
            ">150k" | "over_150k" | "5" => IncomeBracket::Over150k,
            _ => return Err(Error::Invalid(format!("unknown income bracket `{t}`"))),
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            IncomeBracket::Under25k => "<25k",
            IncomeBracket::From25kTo50k => "25k-50k",
            IncomeBracket::From50kTo75k => "50k-75k",
            IncomeBracket::From75kTo100k => "75k-100k",
            IncomeBracket::From100kTo150k => "100k-150k",
            IncomeBracket::Over150k => ">150k",
            IncomeBracket::NotAnswered => "na",
        }
    }
}

/// Which storms the respondent experienced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StormExperience {
    BerylOnly,
    MayOnly,
    Both,
    Neither,
}

impl StormExperience {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "beryl" | "beryl_only" => StormExperience::BerylOnly,
            "may" | "may_only" => StormExperience::MayOnly,
            "both" => StormExperience::Both,
            "" | "neither" | "none" => StormExperience::Neither,
            other => {
                return Err(Error::Invalid(format!("unknown storm experience `{other}`")))
            }
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            StormExperience::BerylOnly => "beryl_only",
            StormExperience::MayOnly => "may_only",
            StormExperience::Both => "both",
            StormExperience::Neither => "neither",
        }
    }
}

/// One survey respondent's sociodemographics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Respondent {
    pub id: String,
    pub income_bracket: IncomeBracket,
    pub household_size: Option<u32>,
    pub children_count: Option<u32>,
    pub age: Option<f64>,
    pub gender: Option<String>,
    pub storm_experience: StormExperience,
}

impl Respondent {
    /// CH indicator: 1 when children exceed 20% of household size. None when
    /// either count is missing (such respondents are excluded from
    /// children-interacted models only).
    pub fn children_flag(&self) -> Option<u8> {
        match (self.children_count, self.household_size) {
            (Some(c), Some(h)) => Some(derive_children_flag(c, h)),
            _ => None,
        }
    }
}

/// CH = 1 iff children_count exceeds 20% of household_size (strict).
pub fn derive_children_flag(children_count: u32, household_size: u32) -> u8 {
    u8::from(f64::from(children_count) > 0.2 * f64::from(household_size))
}

/// Expected total deprivation for the wait alternative: EDT = DT + WT.
pub fn expected_total_deprivation(dt_days: f64, wt_days: f64) -> f64 {
    dt_days + wt_days
}

/// One choice scenario faced by one respondent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceObservation {
    pub respondent_id: String,
    pub block_id: u8,
    pub scenario_index: u8,
    /// Current deprivation time DT, days.
    pub dt_days: f64,
    /// Additional waiting time WT, days.
    pub wt_days: f64,
    /// Current monthly bill B, dollars.
    pub bill_base: f64,
    /// Percentage increase P as a fraction (0.50 = 50%).
    pub pct_increase: f64,
    /// Final monthly bill C = B * (1 + P), dollars.
    pub cost_final: f64,
    pub chose_purchase: bool,
}

/// A validated choice panel: respondents plus their observations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChoiceDataset {
    pub respondents: Vec<Respondent>,
    pub observations: Vec<ChoiceObservation>,
    pub provenance: String,
}

impl ChoiceDataset {
    pub fn n_respondents(&self) -> usize {
        self.respondents.len()
    }

    pub fn n_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn respondent(&self, id: &str) -> Option<&Respondent> {
        self.respondents.iter().find(|r| r.id == id)
    }

    /// Observations grouped per respondent, in respondent order. The grouping
    /// order is deterministic so likelihood reductions are reproducible.
    pub fn grouped(&self) -> Vec<(&Respondent, Vec<&ChoiceObservation>)> {
        let mut by_id: HashMap<&str, Vec<&ChoiceObservation>> = HashMap::new();
        for obs in &self.observations {
            by_id.entry(obs.respondent_id.as_str()).or_default().push(obs);
        }
        self.respondents
            .iter()
            .map(|r| {
                let mut obs = by_id.remove(r.id.as_str()).unwrap_or_default();
                obs.sort_by_key(|o| o.scenario_index);
                (r, obs)
            })
            .collect()
    }

    /// Checks referential integrity, the cost pivot, and per-respondent
    /// scenario uniqueness.
    pub fn validate(&self) -> Result<()> {
        let ids: HashSet<&str> = self.respondents.iter().map(|r| r.id.as_str()).collect();
        if ids.len() != self.respondents.len() {
            return Err(Error::Invalid("duplicate respondent id".into()));
        }
        for r in &self.respondents {
            if let (Some(c), Some(h)) = (r.children_count, r.household_size) {
                if h < 1 {
                    return Err(Error::Invalid(format!(
                        "respondent `{}`: household_size must be >= 1",
                        r.id
                    )));
                }
                if c > h {
                    return Err(Error::Invalid(format!(
                        "respondent `{}`: children_count {c} exceeds household_size {h}",
                        r.id
                    )));
                }
            }
        }
        let mut seen: HashSet<(&str, u8)> = HashSet::new();
        for (i, obs) in self.observations.iter().enumerate() {
            if !ids.contains(obs.respondent_id.as_str()) {
                return Err(Error::OrphanObservation(obs.respondent_id.clone()));
            }
            if !seen.insert((obs.respondent_id.as_str(), obs.scenario_index)) {
                return Err(Error::DuplicateScenario {
                    respondent: obs.respondent_id.clone(),
                    scenario: obs.scenario_index,
                    row: i + 1,
                });
            }
            if !(obs.dt_days > 0.0 && obs.wt_days > 0.0) {
                return Err(Error::BadRow {
                    row: i + 1,
                    message: "dt_days and wt_days must be positive".into(),
                });
            }
            if !cost_pivot_consistent(obs.bill_base, obs.pct_increase, obs.cost_final) {
                return Err(Error::BadRow {
                    row: i + 1,
                    message: format!(
                        "cost_final {} inconsistent with bill {} * (1 + {})",
                        obs.cost_final, obs.bill_base, obs.pct_increase
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Consistency of C with B*(1+P) to cent precision.
fn cost_pivot_consistent(bill: f64, pct: f64, cost: f64) -> bool {
    let expected = bill * (1.0 + pct);
    (cost - expected).abs() <= 0.005 + 1e-9 * expected.abs()
}

/// Column-name mapping for loading delimited files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMap {
    pub respondent_id: String,
    pub block: String,
    pub scenario: String,
    pub dt: String,
    pub wt: String,
    pub bill: String,
    /// Fractional increase column; optional when `cost` is mapped.
    pub pct: Option<String>,
    /// Final-cost column; optional when `pct` is mapped (then pivoted).
    pub cost: Option<String>,
    pub choice: String,
    pub income: Option<String>,
    pub household_size: Option<String>,
    pub children: Option<String>,
    pub age: Option<String>,
    pub gender: Option<String>,
    pub storm: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            respondent_id: "respondent_id".into(),
            block: "block".into(),
            scenario: "scenario".into(),
            dt: "dt_days".into(),
            wt: "wt_days".into(),
            bill: "bill".into(),
            pct: Some("pct_increase".into()),
            cost: Some("cost_final".into()),
            choice: "choice".into(),
            income: Some("income".into()),
            household_size: Some("household_size".into()),
            children: Some("children".into()),
            age: Some("age".into()),
            gender: Some("gender".into()),
            storm: Some("storm".into()),
        }
    }
}

/// Loads and validates a delimited choice panel.
pub fn load_dataset(path: &Path, schema: &ColumnMap, delimiter: u8) -> Result<ChoiceDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_path(path)?;

    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let opt_col = |name: &Option<String>| -> Option<usize> {
        name.as_ref()
            .and_then(|n| headers.iter().position(|h| h == n.as_str()))
    };

    let c_id = col(&schema.respondent_id)?;
    let c_block = col(&schema.block)?;
    let c_scen = col(&schema.scenario)?;
    let c_dt = col(&schema.dt)?;
    let c_wt = col(&schema.wt)?;
    let c_bill = col(&schema.bill)?;
    let c_pct = opt_col(&schema.pct);
    let c_cost = opt_col(&schema.cost);
    if c_pct.is_none() && c_cost.is_none() {
        return Err(Error::MissingColumn("pct_increase or cost_final".into()));
    }
    let c_choice = col(&schema.choice)?;
    let c_income = opt_col(&schema.income);
    let c_hh = opt_col(&schema.household_size);
    let c_children = opt_col(&schema.children);
    let c_age = opt_col(&schema.age);
    let c_gender = opt_col(&schema.gender);
    let c_storm = opt_col(&schema.storm);

    let mut respondents: BTreeMap<String, Respondent> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut observations = Vec::new();
    let mut seen: HashSet<(String, u8)> = HashSet::new();

    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2; // 1-based, after the header
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let parse_f64 = |i: usize, name: &str| -> Result<f64> {
            field(i).parse::<f64>().map_err(|_| Error::BadRow {
                row,
                message: format!("column `{name}`: cannot parse `{}` as a number", field(i)),
            })
        };
        let parse_u32 = |i: usize, name: &str| -> Result<u32> {
            field(i).parse::<u32>().map_err(|_| Error::BadRow {
                row,
                message: format!("column `{name}`: cannot parse `{}` as an integer", field(i)),
            })
        };

        let id = field(c_id).to_string();
        if id.is_empty() {
            return Err(Error::BadRow {
                row,
                message: "empty respondent id".into(),
            });
        }
        let block_id = parse_u32(c_block, "block")? as u8;
        let scenario_index = parse_u32(c_scen, "scenario")? as u8;
        if !(1..=9).contains(&block_id) {
            return Err(Error::BadRow {
                row,
                message: format!("block {block_id} outside [1,9]"),
            });
        }
        if !(1..=4).contains(&scenario_index) {
            return Err(Error::BadRow {
                row,
                message: format!("scenario {scenario_index} outside [1,4]"),
            });
        }
        if !seen.insert((id.clone(), scenario_index)) {
            return Err(Error::DuplicateScenario {
                respondent: id,
                scenario: scenario_index,
                row,
            });
        }

        let dt_days = parse_f64(c_dt, "dt")?;
        let wt_days = parse_f64(c_wt, "wt")?;
        if dt_days <= 0.0 || wt_days <= 0.0 {
            return Err(Error::BadRow {
                row,
                message: "dt and wt must be positive".into(),
            });
        }
        let bill_base = parse_f64(c_bill, "bill")?;
        let pct_increase = match c_pct {
            Some(i) if !field(i).is_empty() => parse_f64(i, "pct")?,
            _ => match c_cost {
                Some(i) => parse_f64(i, "cost")? / bill_base - 1.0,
                None => unreachable!(),
            },
        };
        let cost_final = match c_cost {
            Some(i) if !field(i).is_empty() => parse_f64(i, "cost")?,
            _ => bill_base * (1.0 + pct_increase),
        };
        if !cost_pivot_consistent(bill_base, pct_increase, cost_final) {
            return Err(Error::BadRow {
                row,
                message: format!(
                    "cost {cost_final} inconsistent with bill {bill_base} * (1 + {pct_increase})"
                ),
            });
        }

        let chose_purchase = match field(c_choice).to_ascii_lowercase().as_str() {
            "1" | "yes" | "purchase" | "true" | "p" => true,
            "0" | "no" | "wait" | "false" | "w" => false,
            other => {
                return Err(Error::BadRow {
                    row,
                    message: format!("unrecognized choice value `{other}`"),
                })
            }
        };

        if !respondents.contains_key(&id) {
            let opt_u32 = |c: Option<usize>| -> Result<Option<u32>> {
                match c {
                    Some(i) if !field(i).is_empty() => Ok(Some(parse_u32(i, "socio")?)),
                    _ => Ok(None),
                }
            };
            let income = match c_income {
                Some(i) => IncomeBracket::parse(field(i))
                    .map_err(|e| Error::BadRow { row, message: e.to_string() })?,
                None => IncomeBracket::NotAnswered,
            };
            let storm = match c_storm {
                Some(i) => StormExperience::parse(field(i))
                    .map_err(|e| Error::BadRow { row, message: e.to_string() })?,
                None => StormExperience::Neither,
            };
            let r = Respondent {
                id: id.clone(),
                income_bracket: income,
                household_size: opt_u32(c_hh)?,
                children_count: opt_u32(c_children)?,
                age: match c_age {
                    Some(i) if !field(i).is_empty() => Some(parse_f64(i, "age")?),
                    _ => None,
                },
                gender: c_gender
                    .map(|i| field(i).to_string())
                    .filter(|s| !s.is_empty()),
                storm_experience: storm,
            };
            order.push(id.clone());
            respondents.insert(id.clone(), r);
        }

        observations.push(ChoiceObservation {
            respondent_id: id,
            block_id,
            scenario_index,
            dt_days,
            wt_days,
            bill_base,
            pct_increase,
            cost_final,
            chose_purchase,
        });
    }

    let dataset = ChoiceDataset {
        respondents: order
            .into_iter()
            .map(|id| respondents.remove(&id).unwrap())
            .collect(),
        observations,
        provenance: format!("loaded from {}", path.display()),
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Writes a dataset in the exact format [`load_dataset`] reads with the
/// default [`ColumnMap`].
pub fn save_dataset(dataset: &ChoiceDataset, path: &Path, delimiter: u8) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_path(path)?;
    writer.write_record([
        "respondent_id",
        "block",
        "scenario",
        "dt_days",
        "wt_days",
        "bill",
        "pct_increase",
        "cost_final",
        "choice",
        "income",
        "household_size",
        "children",
        "age",
        "gender",
        "storm",
    ])?;
    let by_id: HashMap<&str, &Respondent> = dataset
        .respondents
        .iter()
        .map(|r| (r.id.as_str(), r))
        .collect();
    for obs in &dataset.observations {
        let r = by_id
            .get(obs.respondent_id.as_str())
            .ok_or_else(|| Error::OrphanObservation(obs.respondent_id.clone()))?;
        let opt = |v: Option<u32>| v.map(|x| x.to_string()).unwrap_or_default();
        writer.write_record([
            obs.respondent_id.clone(),
            obs.block_id.to_string(),
            obs.scenario_index.to_string(),
            format!("{}", obs.dt_days),
            format!("{}", obs.wt_days),
            format!("{}", obs.bill_base),
            format!("{}", obs.pct_increase),
            format!("{}", obs.cost_final),
            if obs.chose_purchase { "1" } else { "0" }.to_string(),
            r.income_bracket.as_str().to_string(),
            opt(r.household_size),
            opt(r.children_count),
            r.age.map(|a| format!("{a}")).unwrap_or_default(),
            r.gender.clone().unwrap_or_default(),
            r.storm_experience.as_str().to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Lexicographic-exclusion rules. The survey's own criterion is not public,
/// so the rule is pluggable; the default flags respondents who picked the
/// same alternative in every presented scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LexRule {
    SameAlternative,
}

impl LexRule {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "same-alternative" | "same_alternative" => Ok(LexRule::SameAlternative),
            other => Err(Error::UnknownLexRule(other.to_string())),
        }
    }
}

/// Removes respondents flagged by `rule` together with all their
/// observations; returns the retained dataset and the excluded ids.
pub fn filter_lexicographic(
    dataset: &ChoiceDataset,
    rule: LexRule,
) -> (ChoiceDataset, Vec<String>) {
    let excluded: HashSet<String> = match rule {
        LexRule::SameAlternative => dataset
            .grouped()
            .iter()
            .filter(|(_, obs)| {
                !obs.is_empty()
                    && obs
                        .iter()
                        .all(|o| o.chose_purchase == obs[0].chose_purchase)
            })
            .map(|(r, _)| r.id.clone())
            .collect(),
    };
    let retained = ChoiceDataset {
        respondents: dataset
            .respondents
            .iter()
            .filter(|r| !excluded.contains(&r.id))
            .cloned()
            .collect(),
        observations: dataset
            .observations
            .iter()
            .filter(|o| !excluded.contains(&o.respondent_id))
            .cloned()
            .collect(),
        provenance: format!("{}; lexicographic filter {rule:?}", dataset.provenance),
    };
    let mut excluded: Vec<String> = excluded.into_iter().collect();
    excluded.sort();
    (retained, excluded)
}

/// Splits by an income-bracket boundary (dollars). Brackets strictly below
/// the threshold go low, at/above go high, "prefer not to answer" is
/// unassigned and appears in neither split.
pub fn split_by_income(
    dataset: &ChoiceDataset,
    threshold: f64,
) -> Result<(ChoiceDataset, ChoiceDataset, Vec<String>)> {
    if !IncomeBracket::BOUNDARIES.contains(&threshold) {
        return Err(Error::Invalid(format!(
            "threshold {threshold} is not an income bracket boundary"
        )));
    }
    let mut low_ids: HashSet<&str> = HashSet::new();
    let mut high_ids: HashSet<&str> = HashSet::new();
    let mut unassigned = Vec::new();
    for r in &dataset.respondents {
        match r.income_bracket.lower_bound() {
            None => unassigned.push(r.id.clone()),
            Some(lb) if lb >= threshold => {
                high_ids.insert(r.id.as_str());
            }
            Some(_) => {
                low_ids.insert(r.id.as_str());
            }
        }
    }
    let subset = |ids: &HashSet<&str>, tag: &str| ChoiceDataset {
        respondents: dataset
            .respondents
            .iter()
            .filter(|r| ids.contains(r.id.as_str()))
            .cloned()
            .collect(),
        observations: dataset
            .observations
            .iter()
            .filter(|o| ids.contains(o.respondent_id.as_str()))
            .cloned()
            .collect(),
        provenance: format!("{}; income split {tag} {threshold}", dataset.provenance),
    };
    Ok((
        subset(&low_ids, "below"),
        subset(&high_ids, "at-or-above"),
        unassigned,
    ))
}
