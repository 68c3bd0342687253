//! VAR and VECM estimation, cointegration, Granger causality, impulse
//! responses, variance decompositions and residual diagnostics.

mod cointegration;
mod diagnostics;
mod granger;
mod irf;
mod lag_select;
mod series;
mod var;
mod vecm;

pub use cointegration::{
    cointegration, engle_granger, engle_granger_critical_values, johansen, johansen_trace_critical_5pct, CointegrationMethod,
    CointegrationReport, DetSpec, EngleGrangerResult, JohansenResult,
};
pub use diagnostics::{diagnostics, lm_autocorrelation, normality, stability, Diagnostics, LmRow, NormalityReport, NormalityRow, StabilityRow};
pub use granger::{granger_table, granger_wald, GrangerMode, GrangerRow, ALL_LABEL};
pub use irf::{fevd, impulse_response, point_fevd, point_irf, BootstrapSpec, FevdResult, IntervalMethod, IrfResult, ModelRef, DEFAULT_BOOTSTRAP_REPLICATIONS};
pub use lag_select::{information_criteria, select_lag, Criteria, LagSelection, LagSelectionRow};
pub use series::MultiSeries;
pub use var::{fit_var, VarModel};
pub use vecm::{fit_vecm, VecmModel};
