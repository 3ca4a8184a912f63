pub mod dataset;
pub mod error;
pub mod estimators;
pub mod influence;
pub mod linalg;
pub mod numeric;
pub mod simulation;
pub mod sparse_logistic;
pub mod sparse_pca;

pub use dataset::{align_sign, make_folds, CsvLayout, Dataset, Direction, DirectionOrigin, FoldPlan};
pub use error::{Error, Result};
pub use influence::{fit_nuisance, influence_value, true_influence, Group, NuisanceFit, NuisanceOptions};
pub use projection_test::{
    t_anchored, t_onestep, t_plugin, BetaSource, CrossFit, DirectionProvider, Statistic, TestOptions, TestResult,
    TestSpec,
};
pub use simulation::{Generator, McReport, NullSetting, PopulationSpec};
