//! Classical forecasters and feature selection: least squares, VAR with
//! information-criterion lag choice, AR(p, d), AR-GARCH(1,1) and
//! forest-importance recursive elimination.

mod ar;
mod forest;
mod garch;
mod linear;
mod var;

pub use ar::{fit_ar, forecast_ar, ArModel};
pub use forest::{forest_importance, rfe, ForestParams, RfeResult};
pub use garch::{fit_garch11, forecast_garch, nelder_mead, Garch11, GarchOptions, NelderMeadResult};
pub use linear::{fit_linear, ols, ols_or_ridge, predict_linear, LinearModel, RIDGE_LAMBDA};
pub use var::{fit_var, forecast_var, lag_report_csv, select_lag, var_one_step, Criterion, LagSelection, VarModel};
