//! Shared fixtures for the benchmark targets.

use depcost::dataset::ChoiceDataset;
use depcost::design::Design;
use depcost::model::{ModelName, ParameterVector, UtilitySpec};
use depcost::simgen::{self, PopulationConfig};

/// A synthetic panel the size of the survey this toolkit targets.
pub fn benchmark_dataset(n_respondents: usize) -> ChoiceDataset {
    let design = Design::balanced_default();
    let population = simgen::generate_population(
        &PopulationConfig {
            n_respondents,
            seed: 1234,
            ..PopulationConfig::default()
        },
        &design,
    )
    .expect("population");
    simgen::simulate_choices(
        &population,
        &UtilitySpec::for_model(ModelName::Mnl1),
        &ParameterVector::mnl(-1.0, -0.0025, -0.18),
        1235,
    )
    .expect("choices")
}
