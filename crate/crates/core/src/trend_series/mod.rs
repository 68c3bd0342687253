//! Yearly prevalence series and the tests run on them.

mod critical;
mod density;
mod ks;
mod prevalence;
mod quantile;
mod unit_root;

pub use critical::{fuller_pvalue, kpss_pvalue, FullerTable, FULLER_SAMPLE_SIZES, FULLER_PROBABILITIES};
pub use density::{density_curves, ecdf_at, DensityKind, KDE_GRID_POINTS};
pub use ks::{dominance_pvalue, ks_dominance, ks_two_sided, KsResult, REPORTABLE_P_FLOOR};
pub use prevalence::{yearly_prevalence, yearly_prevalence_by_year, CategoryMap, Grouping, PrevalenceSeries, UNMAPPED_LABEL};
pub use quantile::{polynomial_fit, top_quantile_series, PolynomialFit, TopQuantileSeries};
pub use unit_root::{
    kpss, newey_west_lag, phillips_perron, unit_root_battery, unit_root_test, battery_table, ModelType,
    PpStatistic, UnitRootReport, UnitRootTest,
};
