//! Discrete-choice estimation of deprivation cost functions (DCFs) for
//! power outages.
//!
//! The library fits multinomial and mixed logit models to stated-preference
//! panel data in which respondents choose between purchasing immediate power
//! restoration (at a pivoted monthly-bill cost) and waiting out the outage.
//! Fitted utilities are converted into dollar-denominated deprivation cost
//! curves by integrating the marginal value of deprivation time.
//!
//! Modules:
//! - [`dataset`]: ingestion and validation of choice panels
//! - [`model`]: the ten utility specifications and their time transforms
//! - [`estimate`]: (simulated) maximum likelihood with quasi-Newton ascent
//! - [`welfare`]: MVDT, cost integration, curve generation, polynomial fits
//! - [`design`]: choice-experiment evaluation (level balance, D-error)
//! - [`simgen`]: synthetic data generation and parameter-recovery harness

pub mod dataset;
pub mod design;
pub mod error;
pub mod estimate;
pub mod model;
pub mod report;
pub mod simgen;
pub mod welfare;

pub use dataset::{ChoiceDataset, ChoiceObservation, Respondent};
pub use error::{Error, Result};
pub use estimate::{DrawConfig, DrawGenerator, EstimationResult, FitOptions};
pub use model::{ModelName, ParameterVector, TimeTransform, UtilitySpec};
pub use welfare::{CostUnit, DcfConfig, DcfCurve, PolyFit};
